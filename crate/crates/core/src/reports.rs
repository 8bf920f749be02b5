//! Run configuration files and the on-disk layout of a run directory.
//!
//! A config file holds the parameter keys at top level and an optional `[run]` table for
//! numerical controls and the shooting parameters of a single simulation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{RunControls, Scheme};
use crate::field::{ComplexField, Grid1D};
use crate::hermite::ModeVector;
use crate::initial_data::ShootParams;
use crate::monitor::MonitorRecord;
use crate::params::{parse_config, serialize, validate, Params};

/// Built-in defaults, identical to `configs/default.toml`.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

pub const OUT_ENV: &str = "BLOWUPLAB_OUT";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    grid_n: Option<usize>,
    x_max: Option<f64>,
    c_dt: Option<f64>,
    ds_snap: Option<f64>,
    s_span: Option<f64>,
    scheme: Option<Scheme>,
    threshold_factor: Option<f64>,
    max_steps: Option<usize>,
    budget: Option<usize>,
    d10: Option<f64>,
    d20: Option<f64>,
    d22: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: Params,
    pub controls: RunControls,
    pub budget: usize,
    pub d: ShootParams,
}

pub const DEFAULT_BUDGET: usize = 44;

/// Parse a config text; missing `[run]` entries take the values of `RunControls::default()`.
pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let run: RunSection = match table.remove("run") {
        Some(v) => v.try_into().map_err(|e: toml::de::Error| Error::Parse(format!("[run]: {e}")))?,
        None => RunSection::default(),
    };
    let raw = parse_config(&toml::to_string(&table).map_err(|e| Error::Parse(e.to_string()))?)?;
    let params = validate(&raw)?;
    let mut c = RunControls::default();
    c.grid_n = run.grid_n.unwrap_or(c.grid_n);
    c.x_max = run.x_max.unwrap_or(c.x_max);
    c.c_dt = run.c_dt.unwrap_or(c.c_dt);
    c.ds_snap = run.ds_snap.unwrap_or(c.ds_snap);
    c.s_span = run.s_span.unwrap_or(c.s_span);
    c.scheme = run.scheme.unwrap_or(c.scheme);
    c.threshold_factor = run.threshold_factor.unwrap_or(c.threshold_factor);
    c.max_steps = run.max_steps.unwrap_or(c.max_steps);
    let cfg = RunConfig {
        params,
        controls: c,
        budget: run.budget.unwrap_or(DEFAULT_BUDGET),
        d: ShootParams::even(run.d10.unwrap_or(0.0), run.d20.unwrap_or(0.0), run.d22.unwrap_or(0.0)),
    };
    cfg.check()?;
    Ok(cfg)
}

pub fn load_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_run_config(&text)
}

impl RunConfig {
    pub fn default_config() -> Self {
        parse_run_config(DEFAULT_CONFIG).expect("built-in config is valid")
    }

    fn check(&self) -> Result<()> {
        let c = &self.controls;
        let bad = |m: &str| Err(Error::ConstraintViolation(m.to_string()));
        if c.grid_n < 5 || c.grid_n % 2 == 0 {
            return bad("grid_n must be odd and at least 5");
        }
        if !(c.x_max > 0.0 && c.c_dt > 0.0 && c.ds_snap > 0.0 && c.s_span > 0.0) {
            return bad("x_max, c_dt, ds_snap and s_span must be positive");
        }
        if c.x_max <= self.params.eps0 {
            return bad("x_max must exceed eps0");
        }
        Ok(())
    }

    /// Full config text; parsing it back gives the same `RunConfig`.
    pub fn resolved(&self) -> String {
        let c = &self.controls;
        let scheme = match c.scheme {
            Scheme::Strang => "Strang",
            Scheme::ImexEuler => "ImexEuler",
        };
        let mut s = serialize(&self.params);
        s.push_str("\n[run]\n");
        s.push_str(&format!("grid_n = {}\n", c.grid_n));
        for (k, v) in [
            ("x_max", c.x_max),
            ("c_dt", c.c_dt),
            ("ds_snap", c.ds_snap),
            ("s_span", c.s_span),
            ("threshold_factor", c.threshold_factor),
        ] {
            s.push_str(&format!("{k} = {v:?}\n"));
        }
        s.push_str(&format!("scheme = \"{scheme}\"\nmax_steps = {}\nbudget = {}\n", c.max_steps, self.budget));
        for (k, v) in [("d10", self.d.d10), ("d20", self.d.d20), ("d22", self.d.d22)] {
            s.push_str(&format!("{k} = {v:?}\n"));
        }
        s
    }

    /// Apply command-line overrides. `s_max` is an absolute similarity time.
    pub fn with_overrides(mut self, grid: Option<usize>, s_max: Option<f64>, budget: Option<usize>) -> Result<Self> {
        if let Some(n) = grid {
            self.controls.grid_n = n;
        }
        if let Some(s) = s_max {
            let span = s - self.params.s0();
            if !(span > 0.0) {
                return Err(Error::ConstraintViolation(format!("smax {s} is not beyond s0 = {}", self.params.s0())));
            }
            self.controls.s_span = span;
        }
        if let Some(b) = budget {
            self.budget = b;
        }
        self.check()?;
        Ok(self)
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::symmetric(self.controls.x_max, self.controls.grid_n)
    }
}

/// Output directory: explicit flag, then the environment, then `runs/<command>`.
pub fn output_dir(flag: Option<&Path>, command: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => Path::new("runs").join(command),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    write_text(path, &(text + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

/// Write a header and rows of numbers as CSV.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub const FIELD_HEADER: [&str; 3] = ["x", "u1", "u2"];

pub fn write_field(path: &Path, u: &ComplexField) -> Result<()> {
    let g = u.grid;
    write_csv(path, &FIELD_HEADER, (0..g.n).map(|i| vec![g.x(i), u.u1[i], u.u2[i]]))
}

/// Read a field written by `write_field` back onto `grid`, at time t.
pub fn read_field(path: &Path, grid: Grid1D, t: f64) -> Result<ComplexField> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut u1 = Vec::with_capacity(grid.n);
    let mut u2 = Vec::with_capacity(grid.n);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse(format!("{} row {i}: bad column {k}", path.display())))
        };
        let x = num(0)?;
        if i >= grid.n || (x - grid.x(i)).abs() > 1e-9 * grid.h.max(1.0) {
            return Err(Error::Precondition(format!("{} does not match the configured grid", path.display())));
        }
        u1.push(num(1)?);
        u2.push(num(2)?);
    }
    if u1.len() != grid.n {
        return Err(Error::Precondition(format!("{}: {} rows, grid has {}", path.display(), u1.len(), grid.n)));
    }
    Ok(ComplexField { grid, u1, u2, t })
}

pub fn write_modes(path: &Path, series: &[ModeVector]) -> Result<()> {
    write_csv(path, &ModeVector::CSV_HEADER, series.iter().map(|m| m.csv_row().to_vec()))
}

/// One JSON object per line: s, in_S, worst_face, worst_ratio, P2_dev, P3_dev.
pub fn write_monitor(path: &Path, records: &[MonitorRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        let line = serde_json::json!({
            "s": r.s,
            "in_S": r.in_s,
            "in_VA": r.in_va,
            "worst_face": r.worst_face.label(),
            "worst_ratio": r.worst_ratio,
            "P2_dev": r.p2_dev,
            "P3_dev": r.p3_dev,
        });
        writeln!(out, "{line}").map_err(|e| io_err(path, e))?;
    }
    write_text(path, &String::from_utf8_lossy(&out))
}

pub const SCHEMA: &str = "\
# Column reference for blowuplab output

config.resolved      full parameter set and run controls; rerun with --config config.resolved
report.json          command summary; `hard_failures` lists violated invariants

snapshots/s_<k>.csv  x, u1, u2 on the physical grid at s = s0 + k ds_snap (s = -ln(T - t))
final.csv            x, u1, u2 at the last step of the run
steps.csv            t, sup (max |u|), t_est (running blow-up time estimate), u1_origin, u2_origin
modes.csv            s, q10, q11, q12, q1minus, q1e, q20, q21, q22, q2minus, q2e
                     q_i0, q_i1: coefficients of h0, h1; q_i2: coefficient r2 of (y^2/4 - 1/2)
                     q_iminus: weighted sup |q_-|/(1+|y|^3); q_ie: sup of the outer part
monitor.jsonl        s, in_S, in_VA, worst_face, worst_ratio, P2_dev, P3_dev per snapshot
shoot.csv            d10, d20, d22, exit_s, face, sign (face `none` and exit_s NaN for survivors)
profiles.csv         z, f0, g0, y, Phi1, Phi2 (at the requested s), x, Ustar
init.csv             x, u1, u2 of the constructed initial datum
final_profile.csv    x0, u1, u2, Ustar, u2star, ratio1, ratio2
                     u2star = (2p/(p-1)^2) Ustar/|ln|x0||; ratio2 = u2/u2star
";

pub fn write_schema(dir: &Path) -> Result<()> {
    write_text(&dir.join("schema.txt"), SCHEMA)
}
