//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The process exits 0 after reporting so that the workspace test run stays usable while
//! a criterion is red; set ACCEPTANCE_STRICT=1 to turn any FAIL into a nonzero exit.

use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blowuplab::evolution::{
    integrate_fixed, periodic_unit_grid, picard, picard_budget, relative_gap, Boundary, Stepper,
};
use blowuplab::field::{ComplexField, Grid1D};
use blowuplab::hermite::{apply_l, hermite, rho, GridSpec, WeightedGrid};
use blowuplab::initial_data::initial_data;
use blowuplab::lemmas::{check_outer, sweep, Sweep};
use blowuplab::monitor::{check_p2, default_grid_spec, Lattice};
use blowuplab::nonlinearity::f;
use blowuplab::profiles::u_hat_shrinking;
use blowuplab::reports::RunConfig;
use blowuplab::shooting::{initial_mode_map, strictly_increasing, Outcome, Shooter};

struct Line {
    id: u32,
    pass: bool,
    detail: String,
    elapsed: Duration,
    limit: Duration,
}

fn timed(id: u32, limit_s: f64, body: impl FnOnce() -> (bool, String)) -> Line {
    let t = Instant::now();
    let (pass, detail) = body();
    let elapsed = t.elapsed();
    let limit = Duration::from_secs_f64(limit_s);
    Line { id, pass: pass && elapsed <= limit, detail, elapsed, limit }
}

fn criterion_1() -> (bool, String) {
    let g = WeightedGrid::new(GridSpec { y_max: 10.0, ..GridSpec::default() }, 100.0, 20.0).unwrap();
    let mut worst = 0.0f64;
    for i in 0..=8u32 {
        for j in 0..=8u32 {
            let v = g.integrate(|y| hermite(i as usize, y) * hermite(j as usize, y));
            let exact = if i == j { (1..=i).map(|k| k as f64).product::<f64>() * 2f64.powi(i as i32) } else { 0.0 };
            let norm = (1..=i.max(j)).map(|k| k as f64).product::<f64>() * 2f64.powi(i.max(j) as i32);
            worst = worst.max((v - exact).abs() / norm);
        }
    }
    // L r = r'' - y r'/2 + r, applied to h_m on refined grids.
    let mut orders = Vec::new();
    let mut exact_low = true;
    for m in 0..=6usize {
        let lam = 1.0 - m as f64 / 2.0;
        let err = |n: usize| {
            let (a, b) = (-6.0, 6.0);
            let h = (b - a) / (n - 1) as f64;
            let r: Vec<f64> = (0..n).map(|i| hermite(m, a + i as f64 * h)).collect();
            let lr = apply_l(&r, a, h).unwrap();
            (1..n - 1)
                .map(|i| (lr[i] - lam * r[i]).abs() * rho(a + i as f64 * h).sqrt())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(121), err(241), err(481));
        if m < 3 {
            exact_low &= e3 < 1e-9;
        } else {
            orders.push(((e1 / e2).log2(), (e2 / e3).log2()));
        }
    }
    let ok_orders = orders.iter().all(|(a, b)| (a - 2.0).abs() < 0.15 && (b - 2.0).abs() < 0.15);
    (
        worst <= 1e-10 && exact_low && ok_orders,
        format!("orthogonality rel err {worst:.2e}; L orders {orders:.3?}"),
    )
}

/// (a + ib)^p for integer p by the binomial theorem.
fn binomial_power(z: Complex64, p: u32) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut c = 1.0;
    for k in 0..=p {
        let ib = Complex64::new(0.0, z.im).powu(k);
        acc += ib * z.re.powi((p - k) as i32) * c;
        c = c * (p - k) as f64 / (k + 1) as f64;
    }
    acc
}

fn criterion_2() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for p in 2..=5u32 {
        for _ in 0..10_000 {
            let r = 10f64.powf(rng.gen_range(-3.0..3.0));
            let th = rng.gen_range(-1.0..1.0) * (std::f64::consts::FRAC_PI_2 - 1e-9);
            let z = Complex64::from_polar(r, th);
            let (a, b) = f(z.re, z.im, p as f64).unwrap();
            let o = binomial_power(z, p);
            let m = z.re * z.re + z.im * z.im;
            let scale = o.norm().max(m.powf(p as f64 / 2.0));
            worst = worst.max((Complex64::new(a, b) - o).norm() / scale);
        }
    }
    (worst <= 1e-12, format!("4 x 10^4 samples, worst rel err {worst:.2e}"))
}

fn criterion_3() -> (bool, String) {
    let mut worst = [0.0f64; 4];
    for p in [2.0, 3.0, 1.5, 5.0] {
        let c = check_outer(p, 10.0, 4001, 1e-8);
        for (w, v) in worst.iter_mut().zip(c.worst) {
            *w = w.max(v);
        }
    }
    (worst.iter().all(|w| *w <= 1e-8), format!("max residuals (R10, R11, R21, R22) {:.2e} {:.2e} {:.2e} {:.2e}", worst[0], worst[1], worst[2], worst[3]))
}

fn criterion_4() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, n) in [(2.0, 1u32), (3.0, 1), (2.0, 2)] {
        let r = sweep(p, n, &Sweep::default());
        ok &= r.pass;
        let cs: Vec<String> = r.fits.iter().map(|f| format!("{}={:.3e}", f.name, f.constant)).collect();
        parts.push(format!(
            "p={p} n={n}: {} ; R2(0)s^3 worst {:.1e} of {:.3}",
            cs.join(" "),
            r.origin.worst_rel,
            r.origin.target
        ));
    }
    (ok, parts.join(" | "))
}

fn rk4(fun: impl Fn(f64) -> f64, u0: f64, t1: f64, n: usize) -> f64 {
    let h = t1 / n as f64;
    let mut u = u0;
    for _ in 0..n {
        let k1 = fun(u);
        let k2 = fun(u + 0.5 * h * k1);
        let k3 = fun(u + 0.5 * h * k2);
        let k4 = fun(u + h * k3);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    u
}

fn criterion_5() -> (bool, String) {
    let mut worst = 0.0f64;
    for p in [2.0, 3.0, 1.5] {
        for k0 in [1.0, 10.0] {
            let u0 = u_hat_shrinking(p, k0, 0.0);
            for k in 1..=19 {
                let tau = 0.05 * k as f64;
                let u = rk4(|u| u.powf(p), u0, tau, 20_000);
                worst = worst.max((u - u_hat_shrinking(p, k0, tau)).abs());
            }
        }
    }
    (worst <= 1e-8, format!("max |U_hat - RK4| on [0, 0.95] = {worst:.2e}"))
}

fn criterion_6(cfg: &RunConfig) -> (bool, String) {
    // Constant datum on a periodic grid: the ODE solution is known exactly.
    let stepper = Stepper { boundary: Boundary::Periodic, ..Stepper::new(2.0) };
    let g = periodic_unit_grid(64);
    let u0 = ComplexField::from_fn(g, 0.0, |_| (1.0, 0.5));
    let lam = 1.0;
    let t1 = picard_budget(u0.sup_norm(), lam, 2.0);
    let pc = picard(&u0, 2.0, lam, t1, 64).unwrap();
    let st = integrate_fixed(&u0, &stepper, t1, 2000).unwrap();
    let gap_c = relative_gap(&pc.field, &st, 0);
    let exact = Complex64::new(1.0, 0.5) / (Complex64::new(1.0, 0.0) - Complex64::new(1.0, 0.5) * t1);
    let ode_err = (Complex64::new(pc.field.u1[32], pc.field.u2[32]) - exact).norm() / exact.norm();
    let mut ok = gap_c <= 1e-4 && ode_err <= 1e-4 && pc.min_re >= lam / 2.0;

    // The constructed datum over its own existence window, then over a window scaled to the
    // grid's diffusive time, with a rescaled copy of the datum.
    let p = cfg.params;
    let u0 = initial_data(&p, &cfg.d, cfg.grid().unwrap()).unwrap();
    let lam = u0.min_re();
    let t1 = picard_budget(u0.sup_norm(), lam, p.p);
    let pc = picard(&u0, p.p, lam, t1, 16).unwrap();
    let st = integrate_fixed(&u0, &Stepper::new(p.p), t1, 64).unwrap();
    let gap_d = relative_gap(&pc.field, &st, 50);
    ok &= gap_d <= 1e-4 && pc.min_re >= lam / 2.0;

    let scale = u0.sup_norm();
    let small = ComplexField::from_fn(Grid1D::symmetric(4.0, 801).unwrap(), 0.0, |x| {
        let (a, b) = u0.eval(x * cfg.controls.x_max / 4.0).unwrap();
        (1.0 + 4.0 * a / scale, 4.0 * b / scale)
    });
    let lam_s = small.min_re();
    let t1s = picard_budget(small.sup_norm(), lam_s, p.p);
    let pcs = picard(&small, p.p, lam_s, t1s, 32).unwrap();
    let sts = integrate_fixed(&small, &Stepper::new(p.p), t1s, 800).unwrap();
    let gap_s = relative_gap(&pcs.field, &sts, 50);
    ok &= gap_s <= 1e-4 && pcs.min_re >= lam_s / 2.0;
    (
        ok,
        format!(
            "constant gap {gap_c:.2e} (vs ODE {ode_err:.2e}); datum gap {gap_d:.2e} over T* = {t1:.2e}; \
             rescaled datum gap {gap_s:.2e} over T* = {t1s:.2e}"
        ),
    )
}

fn criterion_7(cfg: &RunConfig) -> (bool, String) {
    let p = cfg.params;
    let grid = cfg.grid().unwrap();
    let u0 = initial_data(&p, &cfg.d, grid).unwrap();
    let min_re = u0.min_re();
    let p2 = check_p2(&u0, &p, Lattice::default()).unwrap();
    let sh = Shooter::new(p, cfg.controls);
    let map = initial_mode_map(&p, grid, sh.s_max()).unwrap();
    let lin_ok = map.nonlinearity <= 1e-6;
    (
        min_re >= 1.0 && p2 <= p.delta1 && map.rank == 5 && lin_ok,
        format!(
            "min Re u0 {min_re:.4e}; P2 {p2:.4} <= delta1 {}; rank {} cond {:.3} (scaled {:.3}); linearity {:.1e}",
            p.delta1, map.rank, map.condition, map.scaled_condition, map.nonlinearity
        ),
    )
}

fn criteria_8_9(cfg: &RunConfig) -> ((bool, String), (bool, String)) {
    let p = cfg.params;
    let sh = Shooter::new(p, cfg.controls);
    let res = sh.search(cfg.budget).unwrap();
    let failed = res.samples.iter().filter(|s| matches!(s.outcome, Outcome::Failed(_))).count();
    let exits: Vec<_> = res.samples.iter().filter(|s| s.exit().is_some()).collect();
    // Exits close to the horizon are re-run past it to get the post-exit snapshots.
    let mut transverse = 0;
    let mut probed = 0;
    for s in &exits {
        let ratios = if s.post_exit_ratios.len() > 5 {
            s.post_exit_ratios.clone()
        } else {
            probed += 1;
            sh.transversality_probe(s, 5).unwrap()
        };
        transverse += usize::from(strictly_increasing(&ratios, 5));
    }
    let c9 = (
        !exits.is_empty() && transverse == exits.len(),
        format!(
            "{transverse}/{} exit samples strictly increasing over 5 post-exit snapshots ({probed} re-run past the horizon)",
            exits.len()
        ),
    );

    let Some(best) = res.best.as_ref() else {
        return ((false, format!("no survivor after {} runs (depth {})", res.runs, res.depth)), c9);
    };
    let (_, traj) = sh.run(&best.d, 0, true).unwrap();
    let g = WeightedGrid::new(default_grid_spec(&p, sh.s_max()), p.k0, p.s0()).unwrap();
    let d = blowuplab::diagnostics::diagnose(&traj, &p, &g).unwrap();
    let mark = |b: bool| if b { "ok" } else { "FAIL" };
    let r1 = d.final_profile.rows.iter().map(|r| r.ratio1);
    let r2 = d.final_profile.rows.iter().map(|r| r.ratio2);
    let span = |it: &mut dyn Iterator<Item = f64>| {
        it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    };
    let (r1lo, r1hi) = span(&mut r1.clone());
    let (r2lo, r2hi) = span(&mut r2.clone());
    let depth_ok = res.depth >= 20;
    let pass = depth_ok
        && failed == 0
        && res.violations.is_empty()
        && d.type_one.pass
        && d.profile.pass
        && d.null_mode.pass
        && d.sign.pass
        && d.final_profile.pass;
    let detail = format!(
        "depth {} ({}) runs {} violations {} d=({:+.6},{:+.6},{:+.6}) horizon {:.2}; \
         (a) ratio [{:.4},{:.4}] {}; (b) slope {:.3} decreasing {} {}; (c) worst {:.3} {}; \
         (d) origin<0 {} annulus {} b(t) decreasing {} {}; (e) u1/U* [{:.3},{:.3}] u2 [{:.3},{:.3}] {}",
        res.depth,
        mark(depth_ok),
        res.runs,
        res.violations.len(),
        best.d.d10,
        best.d.d20,
        best.d.d22,
        best.horizon,
        d.type_one.min_ratio,
        d.type_one.max_ratio,
        mark(d.type_one.pass),
        d.profile.slope,
        d.profile.decreasing,
        mark(d.profile.pass),
        d.null_mode.worst_rel,
        mark(d.null_mode.pass),
        d.sign.origin_negative_at_end,
        d.sign.positive_annulus,
        d.sign.crossing_decreasing,
        mark(d.sign.pass),
        r1lo,
        r1hi,
        r2lo,
        r2hi,
        mark(d.final_profile.pass),
    );
    ((pass, detail), c9)
}

fn main() {
    let cfg = RunConfig::default_config();
    let mut lines = vec![
        timed(1, 1.0, criterion_1),
        timed(2, 1.0, criterion_2),
        timed(3, 1.0, criterion_3),
        timed(4, 10.0, criterion_4),
        timed(5, 1.0, criterion_5),
        timed(6, 30.0, || criterion_6(&cfg)),
        timed(7, 30.0, || criterion_7(&cfg)),
    ];
    let t = Instant::now();
    let (c8, c9) = criteria_8_9(&cfg);
    let el = t.elapsed();
    let limit = Duration::from_secs(600);
    lines.push(Line { id: 8, pass: c8.0 && el <= limit, detail: c8.1, elapsed: el, limit });
    lines.push(Line { id: 9, pass: c9.0 && el <= limit, detail: c9.1, elapsed: el, limit });

    let mut failures = 0;
    for l in &lines {
        let tag = if l.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!l.pass);
        println!(
            "criterion {} {tag} [{:.2} s / {:.0} s] {}",
            l.id,
            l.elapsed.as_secs_f64(),
            l.limit.as_secs_f64(),
            l.detail
        );
    }
    println!("acceptance: {} of {} criteria pass", lines.len() - failures, lines.len());
    if failures > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
