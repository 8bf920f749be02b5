//! Finite-dimensional shooting on the initial parameters: exit classification, face-driven
//! bisection, the initial mode map, and post-exit transversality probes.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{run_to_blowup, Action, RunControls, Termination, Trajectory};
use crate::field::Grid1D;
use crate::hermite::ModeVector;
use crate::initial_data::{initial_data, ShootParams};
use crate::monitor::{va_check, Face, Monitor, MonitorRecord};
use crate::params::Params;

/// First departure from the ten-face box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitEvent {
    pub exit_s: f64,
    pub face: Face,
    pub sign: i8,
    pub mode_values: ModeVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Exited(ExitEvent),
    /// Stayed in the box up to the horizon.
    Survived,
    /// The run broke down before leaving the box (positivity loss, overflow, ...).
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootSample {
    pub d: ShootParams,
    pub outcome: Outcome,
    /// Last similarity time reached inside the box, minus s0.
    pub horizon: f64,
    /// Monitor output, one record per snapshot.
    pub records: Vec<MonitorRecord>,
    /// Ratio on the exit face at the exit snapshot and the snapshots after it.
    pub post_exit_ratios: Vec<f64>,
}

impl ShootSample {
    /// Face and sign used to steer the bisection: the exit face, or for survivors the
    /// unstable face (q10 or q20) with the largest ratio at the horizon.
    pub fn steering(&self) -> Option<(Face, i8)> {
        match &self.outcome {
            Outcome::Exited(e) => Some((e.face, e.sign)),
            Outcome::Survived => {
                let last = self.records.last()?;
                let mut best: Option<(Face, f64)> = None;
                for face in [Face::Q10, Face::Q20] {
                    let r = last.box_check.ratio(face);
                    if best.map_or(true, |b| r > b.1) {
                        best = Some((face, r));
                    }
                }
                let face = best?.0;
                Some((face, sign_of(face.value(&last.modes))))
            }
            Outcome::Failed(_) => None,
        }
    }

    pub fn exit(&self) -> Option<&ExitEvent> {
        match &self.outcome {
            Outcome::Exited(e) => Some(e),
            _ => None,
        }
    }
}

fn sign_of(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone)]
pub struct Shooter {
    pub params: Params,
    pub controls: RunControls,
    /// Snapshots recorded after an exit before the run is stopped.
    pub post_exit: usize,
}

impl Shooter {
    pub fn new(params: Params, controls: RunControls) -> Self {
        Shooter { params, controls, post_exit: 6 }
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::symmetric(self.controls.x_max, self.controls.grid_n)
    }

    pub fn s_max(&self) -> f64 {
        self.params.s0() + self.controls.s_span
    }

    /// Integrate from the datum with parameters d, monitoring every snapshot.
    pub fn run(&self, d: &ShootParams, post_exit: usize, keep_fields: bool) -> Result<(ShootSample, Trajectory)> {
        let p = self.params;
        let u0 = initial_data(&p, d, self.grid()?)?;
        let monitor = Monitor::new(p, u0.clone(), self.s_max())?;
        let mut records: Vec<MonitorRecord> = Vec::new();
        let mut exit: Option<ExitEvent> = None;
        let mut post = Vec::new();
        let mut failure: Option<String> = None;
        let result = run_to_blowup(u0, p.p, p.t, &self.controls, keep_fields, |_, u| {
            let rec = match monitor.observe(u) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(e.to_string());
                    return Action::Stop;
                }
            };
            records.push(rec);
            match exit {
                None if !rec.in_va => {
                    let face = rec.worst_face;
                    exit = Some(ExitEvent {
                        exit_s: rec.s,
                        face,
                        sign: sign_of(face.value(&rec.modes)),
                        mode_values: rec.modes,
                    });
                    post.push(rec.box_check.ratio(face));
                    if post_exit == 0 {
                        Action::Stop
                    } else {
                        Action::Continue
                    }
                }
                None => Action::Continue,
                Some(e) => {
                    post.push(rec.box_check.ratio(e.face));
                    if post.len() > post_exit {
                        Action::Stop
                    } else {
                        Action::Continue
                    }
                }
            }
        });
        let s0 = p.s0();
        let traj = match result {
            Ok(t) => Some(t),
            Err(e) => {
                if exit.is_none() {
                    failure = Some(e.to_string());
                }
                None
            }
        };
        let outcome = if let Some(e) = exit {
            Outcome::Exited(e)
        } else if let Some(msg) = failure {
            Outcome::Failed(msg)
        } else {
            match traj.as_ref().map(|t| t.termination) {
                Some(Termination::ReachedSMax) => Outcome::Survived,
                Some(other) => Outcome::Failed(format!("run ended early: {other:?}")),
                None => Outcome::Failed("run aborted".into()),
            }
        };
        let horizon = match &outcome {
            Outcome::Exited(e) => e.exit_s - s0,
            _ => records.iter().filter(|r| r.in_va).map(|r| r.s - s0).fold(0.0, f64::max),
        };
        let sample = ShootSample { d: *d, outcome, horizon, records, post_exit_ratios: post };
        let traj = traj.unwrap_or_else(|| Trajectory {
            snapshots: vec![],
            steps: vec![],
            termination: Termination::Stopped,
            final_field: initial_data(&p, d, self.grid().unwrap()).unwrap(),
        });
        Ok((sample, traj))
    }

    /// Exit classification for one parameter vector.
    pub fn classify(&self, d: &ShootParams) -> Result<ShootSample> {
        Ok(self.run(d, self.post_exit, false)?.0)
    }

    /// Re-run a sample and collect `steps` snapshots after its exit, extending the horizon
    /// when the exit came too close to it.
    pub fn transversality_probe(&self, sample: &ShootSample, steps: usize) -> Result<Vec<f64>> {
        let e = sample.exit().ok_or_else(|| Error::Precondition("sample did not exit".into()))?;
        let mut longer = self.clone();
        let need = e.exit_s - self.params.s0() + (steps as f64 + 1.0) * self.controls.ds_snap;
        longer.controls.s_span = self.controls.s_span.max(need);
        Ok(longer.run(&sample.d, steps, false)?.0.post_exit_ratios)
    }

    /// Face-driven bisection over (d10, d20, d22) with d11 = d21 = 0.
    pub fn search(&self, budget: usize) -> Result<SearchResult> {
        let mut brackets = [Bracket::new(), Bracket::new(), Bracket::new()];
        let mut samples: Vec<ShootSample> = Vec::new();
        let mut depth = 0usize;
        let mut violations = Vec::new();
        let mut endpoint_checks = Vec::new();
        // Orientation from the two ends of the d10 and d20 brackets.
        let ends = [
            ShootParams::even(2.0, 0.0, 0.0),
            ShootParams::even(-2.0, 0.0, 0.0),
            ShootParams::even(0.0, 2.0, 0.0),
            ShootParams::even(0.0, -2.0, 0.0),
        ];
        let probed: Vec<Result<ShootSample>> = ends.par_iter().map(|d| self.classify(d)).collect();
        for (k, r) in probed.into_iter().enumerate() {
            let s = r?;
            let idx = k / 2;
            if let Some((_, sign)) = s.steering() {
                if k % 2 == 0 {
                    brackets[idx].sign_hi = Some(sign);
                } else {
                    brackets[idx].sign_lo = Some(sign);
                }
            }
            endpoint_checks.push(s.clone());
            samples.push(s);
        }
        let mut runs = ends.len();
        while runs < budget {
            let d = ShootParams::even(brackets[0].mid(), brackets[1].mid(), brackets[2].mid());
            let s = self.classify(&d)?;
            runs += 1;
            let steer = s.steering();
            samples.push(s);
            let Some((face, sign)) = steer else { break };
            let idx = match face {
                Face::Q10 => 0,
                Face::Q20 => 1,
                Face::Q22 => 2,
                other => {
                    violations.push(format!("exit on non-steerable face {other} at d = {d:?}"));
                    break;
                }
            };
            brackets[idx].update(sign);
            depth += 1;
        }
        let best = samples
            .iter()
            .filter(|s| matches!(s.outcome, Outcome::Survived))
            .min_by(|a, b| final_ratio(a).total_cmp(&final_ratio(b)))
            .cloned();
        Ok(SearchResult { samples, best, brackets, depth, runs, violations, endpoint_checks })
    }
}

fn final_ratio(s: &ShootSample) -> f64 {
    s.records.last().map_or(f64::INFINITY, |r| {
        [Face::Q10, Face::Q20, Face::Q22].iter().map(|f| r.box_check.ratio(*f)).fold(0.0, f64::max)
    })
}

/// One bisection interval with the exit signs seen at its ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub sign_lo: Option<i8>,
    pub sign_hi: Option<i8>,
}

impl Bracket {
    pub fn new() -> Self {
        Bracket { lo: -2.0, hi: 2.0, sign_lo: None, sign_hi: None }
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Replace the end whose sign matches the midpoint's. Without orientation, the face
    /// coordinate is assumed increasing in the parameter.
    pub fn update(&mut self, sign: i8) {
        let hi_sign = self.sign_hi.unwrap_or(1);
        let m = self.mid();
        if sign == hi_sign {
            self.hi = m;
            self.sign_hi = Some(sign);
        } else {
            self.lo = m;
            self.sign_lo = Some(sign);
        }
    }
}

impl Default for Bracket {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub samples: Vec<ShootSample>,
    pub best: Option<ShootSample>,
    pub brackets: [Bracket; 3],
    pub depth: usize,
    pub runs: usize,
    pub violations: Vec<String>,
    pub endpoint_checks: Vec<ShootSample>,
}

/// Linearisation of D -> (q10, q11, q20, q21, q22)(s0) by central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMap {
    pub base: [f64; 5],
    /// matrix[i][k] = d(mode i)/d(d_k).
    pub matrix: [[f64; 5]; 5],
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub condition: f64,
    /// Condition number after dividing each row by its box half-width.
    pub scaled_condition: f64,
    /// Worst relative deviation from linearity on the probe set.
    pub nonlinearity: f64,
}

fn shootable_modes(m: &ModeVector) -> [f64; 5] {
    [m.c1.q0, m.c1.q1, m.c2.q0, m.c2.q1, m.c2.q2]
}

pub fn initial_mode_map(p: &Params, grid: Grid1D, s_max: f64) -> Result<ModeMap> {
    let probe = |d: &ShootParams| -> Result<[f64; 5]> {
        let u0 = initial_data(p, d, grid)?;
        let mon = Monitor::new(*p, u0.clone(), s_max)?;
        Ok(shootable_modes(&mon.modes(&u0)?))
    };
    let base = probe(&ShootParams::default())?;
    let h = 0.5;
    let mut matrix = [[0.0; 5]; 5];
    for k in 0..5 {
        let mut e = [0.0; 5];
        e[k] = h;
        let plus = probe(&ShootParams::from_array(e))?;
        e[k] = -h;
        let minus = probe(&ShootParams::from_array(e))?;
        for i in 0..5 {
            matrix[i][k] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    let svd = |m: &[[f64; 5]; 5]| {
        let dm = DMatrix::from_fn(5, 5, |i, j| m[i][j]);
        let mut sv: Vec<f64> = dm.svd(false, false).singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    };
    let sv = svd(&matrix);
    let tol = sv[0] * 5.0 * f64::EPSILON * 1e3;
    let rank = sv.iter().filter(|v| **v > tol).count();
    let s0 = p.s0();
    let bounds = [Face::Q10, Face::Q11, Face::Q20, Face::Q21, Face::Q22].map(|f| f.bound(p, s0));
    let mut scaled = matrix;
    for i in 0..5 {
        for k in 0..5 {
            scaled[i][k] /= bounds[i];
        }
    }
    let ssv = svd(&scaled);
    // Linearity check on a few corners of the unit box.
    let mmax = matrix.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for d in [[1.0, 0.5, -1.0, 0.3, 0.7], [-1.5, 0.0, 1.2, -0.8, -1.0], [2.0, -2.0, 2.0, -2.0, 2.0]] {
        let got = probe(&ShootParams::from_array(d))?;
        for i in 0..5 {
            let pred = base[i] + (0..5).map(|k| matrix[i][k] * d[k]).sum::<f64>();
            let scale = (0..5).map(|k| (matrix[i][k] * d[k]).abs()).sum::<f64>().max(1e-9 * mmax);
            worst = worst.max((got[i] - pred).abs() / scale);
        }
    }
    Ok(ModeMap {
        base,
        matrix,
        rank,
        condition: sv[0] / sv[4],
        scaled_condition: ssv[0] / ssv[4],
        singular_values: sv,
        nonlinearity: worst,
    })
}

impl ModeMap {
    /// Centre and half-widths of the smallest box in d containing the preimage of the
    /// mode box at s0 under the linearised map.
    pub fn preimage_box(&self, p: &Params) -> Result<([f64; 5], [f64; 5])> {
        let m = DMatrix::from_fn(5, 5, |i, j| self.matrix[i][j]);
        let inv = m.try_inverse().ok_or_else(|| Error::Domain("mode map is singular".into()))?;
        let s0 = p.s0();
        let bounds = [Face::Q10, Face::Q11, Face::Q20, Face::Q21, Face::Q22].map(|f| f.bound(p, s0));
        let mut centre = [0.0; 5];
        let mut half = [0.0; 5];
        for k in 0..5 {
            for i in 0..5 {
                centre[k] -= inv[(k, i)] * self.base[i];
                half[k] += inv[(k, i)].abs() * bounds[i];
            }
        }
        Ok((centre, half))
    }
}

/// Whether the ratios are strictly increasing over the first `steps + 1` entries.
pub fn strictly_increasing(ratios: &[f64], steps: usize) -> bool {
    ratios.len() > steps && ratios[..=steps].windows(2).all(|w| w[1] > w[0])
}

/// Exit check of a single record against the full box.
pub fn exit_of(rec: &MonitorRecord, p: &Params) -> Option<(Face, i8)> {
    let c = va_check(&rec.modes, p);
    if c.in_box {
        None
    } else {
        Some((c.worst_face, sign_of(c.worst_face.value(&rec.modes))))
    }
}
