use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use blowuplab::diagnostics::{diagnose, final_profile, FinalProfile, RunDiagnostics};
use blowuplab::evolution::Termination;
use blowuplab::field::ComplexField;
use blowuplab::hermite::WeightedGrid;
use blowuplab::initial_data::initial_data;
use blowuplab::lemmas::{sweep, Sweep};
use blowuplab::monitor::{check_p2, default_grid_spec, Lattice, Monitor};
use blowuplab::profiles::{f0, g0, phi, u_star};
use blowuplab::reports::{self, load_run_config, output_dir, RunConfig};
use blowuplab::shooting::{initial_mode_map, strictly_increasing, Outcome, Shooter};
use blowuplab::{Error, Result};

#[derive(Parser)]
#[command(name = "blowuplab", version, about = "Blow-up lab for u_t = u_xx + u^p with Re u > 0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file (TOML); built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; falls back to $BLOWUPLAB_OUT, then runs/<command>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of grid points (odd).
    #[arg(long)]
    grid: Option<usize>,
    /// Final similarity time s = -ln(T - t).
    #[arg(long)]
    smax: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one datum to the horizon and diagnose the run.
    Simulate(Common),
    /// Bisection over (d10, d20, d22).
    Shoot {
        #[command(flatten)]
        common: Common,
        /// Number of runs, endpoint probes included.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Residual and decay checks on the approximate profile.
    VerifyLemmas(Common),
    /// Tabulate f0, g0, Phi and U*.
    Profiles {
        #[command(flatten)]
        common: Common,
        /// Also print the table to stdout.
        #[arg(long)]
        dump: bool,
        /// Similarity time for Phi (default s0).
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        zmax: f64,
        #[arg(long, default_value_t = 2.0)]
        xmax: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Build the initial datum and certify it.
    Init {
        #[command(flatten)]
        common: Common,
        /// Also print the datum to stdout.
        #[arg(long)]
        dump: bool,
    },
    /// Compare the last field of a simulate run with U*.
    FinalProfile {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 32)]
        points: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in failures {
                eprintln!("invariant failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Runs a command; the returned list holds violated hard invariants.
fn dispatch(cmd: Command) -> Result<Vec<String>> {
    match cmd {
        Command::Simulate(c) => simulate(&c),
        Command::Shoot { common, budget } => shoot(&common, budget),
        Command::VerifyLemmas(c) => verify_lemmas(&c),
        Command::Profiles { common, dump, s, zmax, xmax, points } => profiles(&common, dump, s, zmax, xmax, points),
        Command::Init { common, dump } => init(&common, dump),
        Command::FinalProfile { common, points } => cmd_final_profile(&common, points),
    }
}

fn setup(c: &Common, command: &str, budget: Option<usize>) -> Result<(RunConfig, PathBuf)> {
    let cfg = match &c.config {
        Some(p) => load_run_config(p)?,
        None => RunConfig::default_config(),
    };
    let cfg = cfg.with_overrides(c.grid, c.smax, budget)?;
    let dir = output_dir(c.out.as_deref(), command);
    reports::write_text(&dir.join("config.resolved"), &cfg.resolved())?;
    reports::write_schema(&dir)?;
    Ok((cfg, dir))
}

/// Fields of a simulate report needed downstream.
#[derive(Deserialize)]
struct RunTimes {
    t_last: f64,
    t_fit: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    d: [f64; 5],
    termination: Option<Termination>,
    outcome: Outcome,
    horizon: f64,
    steps: usize,
    snapshots: usize,
    t_last: f64,
    t_fit: f64,
    /// Smallest Re u over snapshots placed in S; None when no snapshot is in S.
    min_re_in_s: Option<f64>,
    min_re: f64,
    diagnostics: Option<RunDiagnostics>,
    diagnostics_error: Option<String>,
    hard_failures: Vec<String>,
}

fn simulate(c: &Common) -> Result<Vec<String>> {
    let (cfg, dir) = setup(c, "simulate", None)?;
    let p = cfg.params;
    let shooter = Shooter::new(p, cfg.controls);
    let (sample, traj) = shooter.run(&cfg.d, 0, true)?;
    let mut hard = Vec::new();
    if let Outcome::Failed(msg) = &sample.outcome {
        hard.push(format!("run failed: {msg}"));
    }
    // Positivity must hold at every snapshot the monitor places in S.
    let mut min_re_in_s: Option<f64> = None;
    for (snap, rec) in traj.snapshots.iter().zip(&sample.records) {
        if rec.in_s {
            let m = snap.field.min_re();
            min_re_in_s = Some(min_re_in_s.map_or(m, |v| v.min(m)));
        }
    }
    if let Some(m) = min_re_in_s.filter(|m| *m < 0.5) {
        hard.push(format!("Re u = {m} < 1/2 inside S"));
    }
    let min_re = traj.snapshots.iter().map(|s| s.field.min_re()).fold(f64::INFINITY, f64::min);
    for (k, snap) in traj.snapshots.iter().enumerate() {
        reports::write_field(&dir.join("snapshots").join(format!("s_{k:04}.csv")), &snap.field)?;
    }
    reports::write_field(&dir.join("final.csv"), &traj.final_field)?;
    reports::write_csv(
        &dir.join("steps.csv"),
        &["t", "sup", "t_est", "u1_origin", "u2_origin"],
        traj.steps.iter().map(|r| vec![r.t, r.sup, r.t_est, r.u1_origin, r.u2_origin]),
    )?;
    let modes: Vec<_> = sample.records.iter().map(|r| r.modes).collect();
    reports::write_modes(&dir.join("modes.csv"), &modes)?;
    reports::write_monitor(&dir.join("monitor.jsonl"), &sample.records)?;

    let grid = WeightedGrid::new(default_grid_spec(&p, shooter.s_max()), p.k0, p.s0())?;
    let (diagnostics, diagnostics_error) = match diagnose(&traj, &p, &grid) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let t_fit = traj.steps.last().map_or(f64::NAN, |r| r.t_est);
    let report = SimulateReport {
        d: cfg.d.as_array(),
        termination: Some(traj.termination),
        outcome: sample.outcome.clone(),
        horizon: sample.horizon,
        steps: traj.steps.len(),
        snapshots: traj.snapshots.len(),
        t_last: traj.final_field.t,
        t_fit,
        min_re_in_s,
        min_re,
        diagnostics,
        diagnostics_error,
        hard_failures: hard.clone(),
    };
    reports::write_json(&dir.join("report.json"), &report)?;
    println!("outcome: {}", outcome_label(&sample.outcome));
    println!("horizon s - s0 = {:.2}, {} steps, T_fit = {t_fit:e}", sample.horizon, traj.steps.len());
    if let Some(d) = &report.diagnostics {
        let mark = |b: bool| if b { "pass" } else { "fail" };
        println!("type-I ratio [{:.4}, {:.4}]: {}", d.type_one.min_ratio, d.type_one.max_ratio, mark(d.type_one.pass));
        println!("profile slope {:.3}: {}", d.profile.slope, mark(d.profile.pass));
        println!("null-mode law worst {:.3}: {}", d.null_mode.worst_rel, mark(d.null_mode.pass));
        println!("sign structure: {}", mark(d.sign.pass));
        println!("final profile: {}", mark(d.final_profile.pass));
    }
    println!("wrote {}", dir.display());
    Ok(hard)
}

fn outcome_label(o: &Outcome) -> String {
    match o {
        Outcome::Exited(e) => format!("exit on {} ({:+}) at s = {:.3}", e.face, e.sign, e.exit_s),
        Outcome::Survived => "survived".into(),
        Outcome::Failed(m) => format!("failed: {m}"),
    }
}

fn shoot(c: &Common, budget: Option<usize>) -> Result<Vec<String>> {
    let (cfg, dir) = setup(c, "shoot", budget)?;
    let p = cfg.params;
    let shooter = Shooter::new(p, cfg.controls);
    let map = initial_mode_map(&p, shooter.grid()?, shooter.s_max())?;
    let res = shooter.search(cfg.budget)?;
    let path = dir.join("shoot.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["d10", "d20", "d22", "exit_s", "face", "sign"]).map_err(io)?;
    for s in &res.samples {
        let (exit_s, face, sign) = match &s.outcome {
            Outcome::Exited(e) => (format!("{:?}", e.exit_s), e.face.label().to_string(), e.sign.to_string()),
            Outcome::Survived => ("NaN".into(), "none".into(), "0".into()),
            Outcome::Failed(_) => ("NaN".into(), "failed".into(), "0".into()),
        };
        w.write_record([format!("{:?}", s.d.d10), format!("{:?}", s.d.d20), format!("{:?}", s.d.d22), exit_s, face, sign])
            .map_err(io)?;
    }
    w.flush()?;

    let mut hard: Vec<String> = res.violations.clone();
    for s in &res.samples {
        if let Outcome::Failed(m) = &s.outcome {
            hard.push(format!("run at {:?} failed: {m}", s.d.as_array()));
        }
    }
    let exits: Vec<_> = res.samples.iter().filter(|s| s.exit().is_some()).collect();
    // Exits near the horizon are re-run past it so every exit gets five post-exit snapshots.
    let mut post_exit = Vec::with_capacity(exits.len());
    for s in &exits {
        post_exit.push(if s.post_exit_ratios.len() > 5 {
            s.post_exit_ratios.clone()
        } else {
            shooter.transversality_probe(s, 5)?
        });
    }
    let transverse = post_exit.iter().filter(|r| strictly_increasing(r, 5)).count();
    if let Some(best) = &res.best {
        let modes: Vec<_> = best.records.iter().map(|r| r.modes).collect();
        reports::write_modes(&dir.join("modes.csv"), &modes)?;
        reports::write_monitor(&dir.join("monitor.jsonl"), &best.records)?;
    }
    let report = json!({
        "budget": cfg.budget,
        "runs": res.runs,
        "depth": res.depth,
        "brackets": res.brackets,
        "best": res.best.as_ref().map(|b| json!({"d": b.d.as_array(), "horizon": b.horizon})),
        "violations": res.violations,
        "exits": exits.len(),
        "transverse_exits": transverse,
        "post_exit_ratios": post_exit,
        "mode_map": map,
        "hard_failures": hard,
    });
    reports::write_json(&dir.join("report.json"), &report)?;
    println!("runs {} depth {} exits {} transverse {}", res.runs, res.depth, exits.len(), transverse);
    for (name, b) in ["d10", "d20", "d22"].iter().zip(&res.brackets) {
        println!("{name} in [{:.6}, {:.6}]", b.lo, b.hi);
    }
    println!("wrote {}", dir.display());
    Ok(hard)
}

fn verify_lemmas(c: &Common) -> Result<Vec<String>> {
    let (cfg, dir) = setup(c, "verify-lemmas", None)?;
    let r = sweep(cfg.params.p, cfg.params.n, &Sweep::default());
    reports::write_json(&dir.join("report.json"), &r)?;
    let mark = |b: bool| if b { "PASS" } else { "FAIL" };
    println!("outer residuals {:?}: {}", r.outer.worst, mark(r.outer.pass));
    for f in &r.fits {
        println!("{:<12} C = {:.4e} drift {:+.3}: {}", f.name, f.constant, f.drift, mark(f.pass));
    }
    println!("R2(0,s) s^3 worst rel {:.4} vs {:.4}: {}", r.origin.worst_rel, r.origin.target, mark(r.origin.pass));
    let mut hard = Vec::new();
    if !r.outer.pass {
        hard.push("outer-expansion residuals".to_string());
    }
    for f in r.fits.iter().filter(|f| !f.pass) {
        hard.push(format!("decay of {}", f.name));
    }
    if !r.origin.pass {
        hard.push("R2(0,s) s^3 limit".to_string());
    }
    Ok(hard)
}

fn profiles(c: &Common, dump: bool, s: Option<f64>, zmax: f64, xmax: f64, points: usize) -> Result<Vec<String>> {
    let (cfg, dir) = setup(c, "profiles", None)?;
    let p = cfg.params;
    if points < 2 {
        return Err(Error::Precondition("points must be at least 2".into()));
    }
    let s = s.unwrap_or(p.s0());
    let header = ["z", "f0", "g0", "y", "Phi1", "Phi2", "x", "Ustar"];
    let rows: Vec<Vec<f64>> = (0..points)
        .map(|i| {
            let frac = i as f64 / (points - 1) as f64;
            let z = zmax * frac;
            let y = z * s.sqrt();
            let (a, b) = phi(y, s, p.p, p.n);
            // U* is singular at 0, so its grid starts one step in.
            let x = xmax * (i + 1) as f64 / points as f64;
            vec![z, f0(z, p.p), g0(z, p.p), y, a, b, x, u_star(x, p.p, p.cstar)]
        })
        .collect();
    reports::write_csv(&dir.join("profiles.csv"), &header, rows.clone())?;
    if dump {
        println!("{}", header.join(","));
        for r in &rows {
            println!("{}", r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","));
        }
    }
    Ok(Vec::new())
}

fn init(c: &Common, dump: bool) -> Result<Vec<String>> {
    let (cfg, dir) = setup(c, "init", None)?;
    let p = cfg.params;
    let grid = cfg.grid()?;
    let u0 = initial_data(&p, &cfg.d, grid)?;
    let min_re = u0.min_re();
    let p2 = check_p2(&u0, &p, Lattice::default())?;
    let shooter = Shooter::new(p, cfg.controls);
    let map = initial_mode_map(&p, grid, shooter.s_max())?;
    let modes = Monitor::new(p, u0.clone(), shooter.s_max())?.modes(&u0)?;
    let preimage = map.preimage_box(&p).ok();
    reports::write_field(&dir.join("init.csv"), &u0)?;
    let mut hard = Vec::new();
    if min_re < 1.0 {
        hard.push(format!("min Re u(0) = {min_re} < 1"));
    }
    if p2 > p.delta1 {
        hard.push(format!("region-2 deviation {p2} > delta1 = {}", p.delta1));
    }
    if map.rank != 5 {
        hard.push(format!("mode map rank {}", map.rank));
    }
    let report = json!({
        "d": cfg.d.as_array(),
        "min_re": min_re,
        "p2_dev": p2,
        "delta1": p.delta1,
        "modes": modes,
        "mode_map": map,
        "preimage_box": preimage.map(|(c, h)| json!({"centre": c, "half_width": h})),
        "hard_failures": hard,
    });
    reports::write_json(&dir.join("report.json"), &report)?;
    if dump {
        println!("x,u1,u2");
        for i in 0..grid.n {
            println!("{:?},{:?},{:?}", grid.x(i), u0.u1[i], u0.u2[i]);
        }
    } else {
        println!("min Re u(0) = {min_re:.6}, P2 = {p2:.4} (delta1 = {})", p.delta1);
        println!("mode map rank {} condition {:.3} (scaled {:.3})", map.rank, map.condition, map.scaled_condition);
        println!("wrote {}", dir.display());
    }
    Ok(hard)
}

fn cmd_final_profile(c: &Common, points: usize) -> Result<Vec<String>> {
    let dir = output_dir(c.out.as_deref(), "simulate");
    let cfg_path = c.config.clone().unwrap_or_else(|| dir.join("config.resolved"));
    let report_path = dir.join("report.json");
    if !report_path.exists() {
        return Err(Error::Precondition(format!("no simulate history in {}", dir.display())));
    }
    let cfg = load_run_config(&cfg_path)?.with_overrides(c.grid, None, None)?;
    let rep: RunTimes = reports::read_json(&report_path)?;
    let last: ComplexField = reports::read_field(&dir.join("final.csv"), cfg.grid()?, rep.t_last)?;
    let fp: FinalProfile = final_profile(&last, rep.t_fit, &cfg.params, points)?;
    reports::write_csv(
        &dir.join("final_profile.csv"),
        &["x0", "u1", "u2", "Ustar", "u2star", "ratio1", "ratio2"],
        fp.rows.iter().map(|r| vec![r.x0, r.u1, r.u2, r.u_star, r.u2_star, r.ratio1, r.ratio2]),
    )?;
    reports::write_json(&dir.join("final_profile.json"), &fp)?;
    reports::write_schema(&dir)?;
    println!("theta = {:e}, window [{:.4e}, {:.4e}]", fp.theta_last, fp.window.0, fp.window.1);
    for r in &fp.rows {
        println!("x0 {:.4e}  u1/U* {:.3}  u2/u2* {:.3}", r.x0, r.ratio1, r.ratio2);
    }
    println!("ratios within [0.7, 1.4]: {}", fp.pass);
    Ok(Vec::new())
}
