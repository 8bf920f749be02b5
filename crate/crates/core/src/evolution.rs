//! Time integration of u_t = u_xx + u^p on a uniform grid: split-step stepper, blow-up driver
//! with adaptive steps and snapshot capture, the similarity transform, and a Picard oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid1D};
use crate::hermite::WeightedGrid;
use crate::nonlinearity::{f, f_raw};
use crate::numerics::{
    discrete_heat_kernel, median, newton_cotes_weights, solve_cyclic_constant, solve_tridiagonal,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Nonlinear half step (RK4), Crank-Nicolson diffusion, nonlinear half step.
    Strang,
    /// Explicit Euler for u^p and backward Euler diffusion in one solve.
    ImexEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Endpoint values are held at their initial values.
    FrozenDirichlet,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stepper {
    pub p: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
    /// Switch the reaction term off (pure heat flow).
    pub reaction: bool,
}

impl Stepper {
    pub fn new(p: f64) -> Self {
        Stepper { p, scheme: Scheme::Strang, boundary: Boundary::FrozenDirichlet, reaction: true }
    }

    /// Advance `u` by dt in place.
    pub fn step(&self, u: &mut ComplexField, dt: f64) -> Result<()> {
        match self.scheme {
            Scheme::Strang => {
                if self.reaction {
                    reaction_rk4(u, 0.5 * dt, self.p, self.active_range(u.grid.n))?;
                }
                self.diffuse_cn(u, dt);
                if self.reaction {
                    reaction_rk4(u, 0.5 * dt, self.p, self.active_range(u.grid.n))?;
                }
            }
            Scheme::ImexEuler => {
                if self.reaction {
                    let range = self.active_range(u.grid.n);
                    for i in range {
                        let (a, b) = f(u.u1[i], u.u2[i], self.p).map_err(|_| positivity(u, i))?;
                        u.u1[i] += dt * a;
                        u.u2[i] += dt * b;
                    }
                }
                self.diffuse_be(u, dt);
            }
        }
        u.t += dt;
        if let Some(i) = u.u1.iter().position(|v| !(*v > 0.0)) {
            return Err(positivity(u, i));
        }
        Ok(())
    }

    fn active_range(&self, n: usize) -> std::ops::Range<usize> {
        match self.boundary {
            Boundary::FrozenDirichlet => 1..n - 1,
            Boundary::Periodic => 0..n,
        }
    }

    fn diffuse_cn(&self, u: &mut ComplexField, dt: f64) {
        let r = dt / (u.grid.h * u.grid.h);
        for comp in [&mut u.u1, &mut u.u2] {
            let n = comp.len();
            match self.boundary {
                Boundary::FrozenDirichlet => {
                    let m = n - 2;
                    let mut rhs: Vec<f64> = (1..n - 1)
                        .map(|i| (1.0 - r) * comp[i] + 0.5 * r * (comp[i - 1] + comp[i + 1]))
                        .collect();
                    rhs[0] += 0.5 * r * comp[0];
                    rhs[m - 1] += 0.5 * r * comp[n - 1];
                    let lower = vec![-0.5 * r; m];
                    let upper = vec![-0.5 * r; m];
                    let diag = vec![1.0 + r; m];
                    solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
                    comp[1..n - 1].copy_from_slice(&rhs);
                }
                Boundary::Periodic => {
                    let mut rhs: Vec<f64> = (0..n)
                        .map(|i| {
                            (1.0 - r) * comp[i] + 0.5 * r * (comp[(i + n - 1) % n] + comp[(i + 1) % n])
                        })
                        .collect();
                    solve_cyclic_constant(-0.5 * r, 1.0 + r, &mut rhs);
                    comp.copy_from_slice(&rhs);
                }
            }
        }
    }

    fn diffuse_be(&self, u: &mut ComplexField, dt: f64) {
        let r = dt / (u.grid.h * u.grid.h);
        for comp in [&mut u.u1, &mut u.u2] {
            let n = comp.len();
            match self.boundary {
                Boundary::FrozenDirichlet => {
                    let m = n - 2;
                    let mut rhs: Vec<f64> = comp[1..n - 1].to_vec();
                    rhs[0] += r * comp[0];
                    rhs[m - 1] += r * comp[n - 1];
                    let off = vec![-r; m];
                    let diag = vec![1.0 + 2.0 * r; m];
                    solve_tridiagonal(&off, &diag, &off, &mut rhs);
                    comp[1..n - 1].copy_from_slice(&rhs);
                }
                Boundary::Periodic => {
                    let mut rhs = comp.clone();
                    solve_cyclic_constant(-r, 1.0 + 2.0 * r, &mut rhs);
                    comp.copy_from_slice(&rhs);
                }
            }
        }
    }
}

fn positivity(u: &ComplexField, i: usize) -> Error {
    Error::PositivityLoss { x: u.grid.x(i), value: u.u1[i] }
}

/// RK4 for u' = u^p at the points in `range` (frozen endpoints are excluded by the caller).
fn reaction_rk4(u: &mut ComplexField, dt: f64, p: f64, range: std::ops::Range<usize>) -> Result<()> {
    for i in range {
        let (a, b) = (u.u1[i], u.u2[i]);
        if !(a > 0.0) {
            return Err(positivity(u, i));
        }
        let k1 = f_raw(a, b, p);
        let k2 = f_raw(a + 0.5 * dt * k1.0, b + 0.5 * dt * k1.1, p);
        let k3 = f_raw(a + 0.5 * dt * k2.0, b + 0.5 * dt * k2.1, p);
        let k4 = f_raw(a + dt * k3.0, b + dt * k3.1, p);
        u.u1[i] = a + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        u.u2[i] = b + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    Ok(())
}

/// Controls of a blow-up run. None of these are physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunControls {
    pub grid_n: usize,
    pub x_max: f64,
    /// dt = c_dt (T_est - t).
    pub c_dt: f64,
    /// Snapshot spacing in s = -ln(T - t).
    pub ds_snap: f64,
    /// Stop after the snapshot at s0 + s_span.
    pub s_span: f64,
    pub scheme: Scheme,
    /// Number of recent estimates entering the median of T_est.
    pub t_est_window: usize,
    /// Blow-up threshold factor: stop once sup|u| > factor kappa T^(-1/(p-1)).
    pub threshold_factor: f64,
    pub max_steps: usize,
}

impl Default for RunControls {
    fn default() -> Self {
        RunControls {
            grid_n: 4097,
            x_max: 0.04,
            c_dt: 0.01,
            ds_snap: 0.05,
            s_span: 4.0,
            scheme: Scheme::Strang,
            t_est_window: 5,
            threshold_factor: 1e6,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedSMax,
    Threshold,
    Stopped,
    StepLimit,
    DtUnderflow,
}

/// Per-step diagnostics kept for every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub sup: f64,
    pub t_est: f64,
    pub u1_origin: f64,
    pub u2_origin: f64,
}

/// Snapshot at a prescribed similarity time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub s: f64,
    pub field: ComplexField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
    pub termination: Termination,
    pub final_field: ComplexField,
}

/// What the observer wants after seeing a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Continue,
    Stop,
}

fn origin_values(u: &ComplexField) -> (f64, f64) {
    u.eval(0.0).unwrap_or((f64::NAN, f64::NAN))
}

/// Integrate from `u` until the snapshot at s0 + s_span, the overflow threshold, or until
/// the observer asks to stop. Snapshots are taken at s_k = s0 + k ds_snap with
/// s = -ln(T_nominal - t); the step is clipped to land on them exactly.
pub fn run_to_blowup(
    mut u: ComplexField,
    p: f64,
    t_nominal: f64,
    ctl: &RunControls,
    keep_fields: bool,
    mut observer: impl FnMut(f64, &ComplexField) -> Action,
) -> Result<Trajectory> {
    let stepper = Stepper { p, scheme: ctl.scheme, boundary: Boundary::FrozenDirichlet, reaction: true };
    let q = p - 1.0;
    let kappa = q.powf(-1.0 / q);
    let threshold = ctl.threshold_factor * kappa * t_nominal.powf(-1.0 / q);
    let s0 = -(t_nominal - u.t).ln();
    let n_snap = (ctl.s_span / ctl.ds_snap).round() as usize;
    let mut snapshots = Vec::new();
    let mut steps = Vec::new();
    let mut estimates: Vec<f64> = Vec::new();
    let mut k = 0usize;

    let estimate = |u: &ComplexField| u.t + 1.0 / (q * u.sup_norm().powf(q));
    let termination;

    let mut take = |k: usize, u: &ComplexField, snaps: &mut Vec<Snapshot>| -> Action {
        let s = s0 + k as f64 * ctl.ds_snap;
        let act = observer(s, u);
        let field = if keep_fields { u.clone() } else { ComplexField { u1: vec![], u2: vec![], ..u.clone() } };
        snaps.push(Snapshot { s, field });
        act
    };

    if take(0, &u, &mut snapshots) == Action::Stop {
        termination = Termination::Stopped;
    } else {
        loop {
            if steps.len() >= ctl.max_steps {
                termination = Termination::StepLimit;
                break;
            }
            let sup = u.sup_norm();
            if sup > threshold || !sup.is_finite() {
                termination = Termination::Threshold;
                break;
            }
            estimates.push(estimate(&u));
            let lo = estimates.len().saturating_sub(ctl.t_est_window);
            let t_est = median(&estimates[lo..]);
            let (o1, o2) = origin_values(&u);
            steps.push(StepRecord { t: u.t, sup, t_est, u1_origin: o1, u2_origin: o2 });
            let inst = 1.0 / (q * sup.powf(q));
            let horizon = if t_est > u.t { t_est - u.t } else { inst };
            let mut dt = ctl.c_dt * horizon;
            let next = k + 1;
            let t_snap = t_nominal - (-(s0 + next as f64 * ctl.ds_snap)).exp();
            let mut hits = false;
            if u.t + dt >= t_snap {
                dt = t_snap - u.t;
                hits = true;
            }
            if !(dt > 1e-16 * t_nominal) && !hits {
                termination = Termination::DtUnderflow;
                break;
            }
            if hits && dt <= 0.0 {
                // Already at the snapshot time within rounding.
            } else {
                stepper.step(&mut u, dt)?;
            }
            if hits {
                u.t = t_snap;
                k = next;
                if take(k, &u, &mut snapshots) == Action::Stop {
                    termination = Termination::Stopped;
                    break;
                }
                if k >= n_snap {
                    termination = Termination::ReachedSMax;
                    break;
                }
            }
        }
    }
    Ok(Trajectory { snapshots, steps, termination, final_field: u })
}

/// Field in similarity variables sampled on the points of a weighted grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFrame {
    pub s: f64,
    pub y: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

/// w(y, s) = (T - t)^(1/(p-1)) u(y sqrt(T - t), t), resampled by cubic interpolation.
pub fn to_similarity(u: &ComplexField, t_nominal: f64, p: f64, g: &WeightedGrid) -> Result<SimilarityFrame> {
    let th = t_nominal - u.t;
    if !(th > 0.0) {
        return Err(Error::Domain(format!("t = {} is not before T = {t_nominal}", u.t)));
    }
    let sq = th.sqrt();
    let ymax = g.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let reach = u.grid.x_max().min(-u.grid.x_min());
    if ymax * sq > reach {
        return Err(Error::OutOfDomain(format!(
            "|y| <= {ymax} needs |x| <= {} but the grid stops at {reach}",
            ymax * sq
        )));
    }
    let sc = th.powf(1.0 / (p - 1.0));
    let mut w1 = Vec::with_capacity(g.y.len());
    let mut w2 = Vec::with_capacity(g.y.len());
    for &y in &g.y {
        let (a, b) = u.eval(y * sq)?;
        w1.push(sc * a);
        w2.push(sc * b);
    }
    Ok(SimilarityFrame { s: -th.ln(), y: g.y.clone(), w1, w2 })
}

/// Existence-time budget of the Picard argument for data with Re u0 >= lambda.
pub fn picard_budget(sup_u0: f64, lambda: f64, p: f64) -> f64 {
    let c2 = p * (2.0 * sup_u0).powf(p - 1.0);
    let a = 1.0 / (2f64.powf(p) * sup_u0.powf(p - 1.0));
    let b = lambda / (2f64.powf(p + 1.0) * sup_u0.powf(p));
    a.min(b).min(1.0 / (2.0 * c2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    pub field: ComplexField,
    pub iterations: usize,
    pub min_re: f64,
    pub budget: f64,
}

/// Lattice heat semigroup applied to one component, with constant extension past the ends.
fn heat_apply(kernel: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len() as isize;
    let j = kernel.len() as isize - 1;
    (0..n)
        .map(|i| {
            let mut acc = kernel[0] * v[i as usize];
            for m in 1..=j {
                let a = v[(i - m).clamp(0, n - 1) as usize];
                let b = v[(i + m).clamp(0, n - 1) as usize];
                acc += kernel[m as usize] * (a + b);
            }
            acc
        })
        .collect()
}

fn truncated_kernel(r: f64) -> Vec<f64> {
    let jmax = (r + 12.0 * r.sqrt() + 40.0) as usize;
    let mut k = discrete_heat_kernel(r, jmax);
    while k.len() > 1 && *k.last().unwrap() < 1e-20 {
        k.pop();
    }
    k
}

/// Iterate the Duhamel map u = e^{t Lap} u0 + int_0^t e^{(t-s) Lap} u(s)^p ds on [0, t1]
/// with `m` uniform time panels, until successive iterates differ by < 1e-10 relative.
pub fn picard(u0: &ComplexField, p: f64, lambda: f64, t1: f64, m: usize) -> Result<PicardResult> {
    let min_re0 = u0.min_re();
    if !(min_re0 >= lambda && lambda > 0.0) {
        return Err(Error::Precondition(format!("Re u0 >= {lambda} fails (min {min_re0})")));
    }
    let budget = picard_budget(u0.sup_norm(), lambda, p);
    if t1 > budget * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("t1 = {t1} exceeds the budget {budget}")));
    }
    let h2 = u0.grid.h * u0.grid.h;
    let dt = t1 / m as f64;
    let kernels: Vec<Vec<f64>> = (0..=m).map(|l| truncated_kernel(l as f64 * dt / h2)).collect();
    let free: Vec<(Vec<f64>, Vec<f64>)> =
        kernels.iter().map(|k| (heat_apply(k, &u0.u1), heat_apply(k, &u0.u2))).collect();
    let mut cur = free.clone();
    let scale = u0.sup_norm().max(1e-300);
    let mut last_diff = f64::INFINITY;
    let mut growth = 0;
    for it in 1..=500 {
        let mut forcing: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(m + 1);
        for (a, b) in &cur {
            let mut f1 = Vec::with_capacity(a.len());
            let mut f2 = Vec::with_capacity(a.len());
            for (x, y) in a.iter().zip(b) {
                let (g1, g2) = f(*x, *y, p).map_err(|e| Error::ContractionFailure(e.to_string()))?;
                f1.push(g1);
                f2.push(g2);
            }
            forcing.push((f1, f2));
        }
        // Propagated forcing by lag: prop[l][j] = e^{l dt Lap} F_j, built lazily per (k, j).
        let mut next = free.clone();
        for k in 1..=m {
            let w = newton_cotes_weights(k, dt);
            for j in 0..=k {
                let (p1, p2) = if j == k {
                    (forcing[j].0.clone(), forcing[j].1.clone())
                } else {
                    (heat_apply(&kernels[k - j], &forcing[j].0), heat_apply(&kernels[k - j], &forcing[j].1))
                };
                let (n1, n2) = &mut next[k];
                for i in 0..n1.len() {
                    n1[i] += w[j] * p1[i];
                    n2[i] += w[j] * p2[i];
                }
            }
        }
        let mut diff = 0.0f64;
        for (a, b) in cur.iter().zip(&next) {
            for i in 0..a.0.len() {
                diff = diff.max((a.0[i] - b.0[i]).abs()).max((a.1[i] - b.1[i]).abs());
            }
        }
        cur = next;
        let rel = diff / scale;
        if !rel.is_finite() {
            return Err(Error::ContractionFailure("iterates are not finite".into()));
        }
        if rel < 1e-10 {
            let min_re = cur.iter().flat_map(|c| c.0.iter().copied()).fold(f64::INFINITY, f64::min);
            let (u1, u2) = cur.pop().unwrap();
            return Ok(PicardResult {
                field: ComplexField { grid: u0.grid, u1, u2, t: u0.t + t1 },
                iterations: it,
                min_re,
                budget,
            });
        }
        if rel > last_diff {
            growth += 1;
            if growth > 5 {
                return Err(Error::ContractionFailure(format!("difference grew to {rel}")));
            }
        }
        last_diff = rel;
    }
    Err(Error::ContractionFailure("no convergence in 500 iterations".into()))
}

/// Advance a field to t + t1 by `n` equal steps of the given stepper (used against Picard).
pub fn integrate_fixed(u0: &ComplexField, stepper: &Stepper, t1: f64, n: usize) -> Result<ComplexField> {
    let mut u = u0.clone();
    let dt = t1 / n as f64;
    for _ in 0..n {
        stepper.step(&mut u, dt)?;
    }
    Ok(u)
}

/// Relative sup-norm distance between two fields on the same grid, ignoring `margin` points
/// at each end (where frozen boundaries and constant extension differ).
pub fn relative_gap(a: &ComplexField, b: &ComplexField, margin: usize) -> f64 {
    let mut d = 0.0f64;
    for i in margin..a.u1.len() - margin {
        d = d.max((a.u1[i] - b.u1[i]).hypot(a.u2[i] - b.u2[i]));
    }
    d / a.sup_norm().max(b.sup_norm())
}

/// Grid helper used by the oracles: a periodic grid on [0, 2 pi).
pub fn periodic_unit_grid(n: usize) -> Grid1D {
    Grid1D::periodic(0.0, 2.0 * std::f64::consts::PI, n)
}
