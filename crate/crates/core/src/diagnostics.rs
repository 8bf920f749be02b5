//! Quantitative checks of a completed blow-up run against the asymptotic picture:
//! type-I rate, convergence to the profile, the null-mode law, the sign structure of the
//! imaginary part, and the final profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{to_similarity, Snapshot, StepRecord, Trajectory};
use crate::field::ComplexField;
use crate::hermite::{project, WeightedGrid};
use crate::numerics::linear_fit;
use crate::params::Params;
use crate::profiles::{f0, u_star};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeOne {
    pub t_fit: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
    pub pass: bool,
}

/// (T_fit - t)^(1/(p-1)) sup|u| over the final decade of T_fit - t, with T_fit the last
/// blow-up-time estimate of the run.
pub fn type_one(steps: &[StepRecord], p: &Params) -> Result<TypeOne> {
    let last = steps.last().ok_or_else(|| Error::SeriesTooShort("no steps".into()))?;
    let t_fit = last.t_est;
    let gap_end = t_fit - last.t;
    if !(gap_end > 0.0) {
        return Err(Error::Domain("run ended past its fitted blow-up time".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut n = 0;
    for r in steps {
        let gap = t_fit - r.t;
        if gap <= 10.0 * gap_end && gap > 0.0 {
            let v = gap.powf(1.0 / (p.p - 1.0)) * r.sup;
            lo = lo.min(v);
            hi = hi.max(v);
            n += 1;
        }
    }
    Ok(TypeOne {
        t_fit,
        min_ratio: lo,
        max_ratio: hi,
        samples: n,
        pass: n > 0 && lo >= 0.5 * p.kappa && hi <= 2.0 * p.kappa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConvergence {
    pub s: Vec<f64>,
    pub sup_dev: Vec<f64>,
    pub slope: f64,
    pub decreasing: bool,
    pub pass: bool,
}

/// sup over |y| <= K0 sqrt(s) of |w1 - f0(y/sqrt s)|, and its log-log slope in s.
pub fn profile_convergence(snaps: &[Snapshot], p: &Params, grid: &WeightedGrid) -> Result<ProfileConvergence> {
    let mut s = Vec::new();
    let mut dev = Vec::new();
    for snap in snaps {
        let fr = to_similarity(&snap.field, p.t, p.p, grid)?;
        let reach = p.k0 * fr.s.sqrt();
        let d = fr
            .y
            .iter()
            .zip(&fr.w1)
            .filter(|(y, _)| y.abs() <= reach)
            .map(|(y, w)| (w - f0(y / fr.s.sqrt(), p.p)).abs())
            .fold(0.0, f64::max);

        s.push(fr.s);
        dev.push(d);
    }
    if s.len() < 3 {
        return Err(Error::SeriesTooShort(format!("{} snapshots", s.len())));
    }
    let ls: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let ld: Vec<f64> = dev.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(&ls, &ld);
    let decreasing = dev.windows(2).all(|w| w[1] <= w[0]);
    Ok(ProfileConvergence { pass: decreasing && (slope + 0.5).abs() <= 0.2, s, sup_dev: dev, slope, decreasing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModeLaw {
    pub s: Vec<f64>,
    /// s times the h2 coefficient of w1 - kappa.
    pub scaled: Vec<f64>,
    pub target: f64,
    pub worst_rel: f64,
    pub pass: bool,
}

/// s * (h2 coefficient of w1 - kappa) against -kappa/(4p), within 30%.
pub fn null_mode_law(snaps: &[Snapshot], p: &Params, grid: &WeightedGrid) -> Result<NullModeLaw> {
    let target = -p.kappa / (4.0 * p.p);
    let mut s = Vec::new();
    let mut v = Vec::new();
    let mut g = grid.clone();
    for snap in snaps {
        let fr = to_similarity(&snap.field, p.t, p.p, &g)?;
        g.set_time(fr.s);
        let bar: Vec<f64> = fr.w1.iter().map(|w| w - p.kappa).collect();
        let m = project(&bar, &g)?.modes;
        s.push(fr.s);
        v.push(fr.s * 0.5 * m.q2);
    }
    let worst = v.iter().map(|x| (x / target - 1.0).abs()).fold(0.0, f64::max);
    Ok(NullModeLaw { s, scaled: v, target, worst_rel: worst, pass: worst <= 0.3 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignStructure {
    pub t: Vec<f64>,
    pub u2_origin: Vec<f64>,
    /// First zero of u2 on x > 0 (NaN when u2 has no sign change).
    pub crossing: Vec<f64>,
    pub origin_negative_at_end: bool,
    pub positive_annulus: bool,
    pub crossing_decreasing: bool,
    pub pass: bool,
}

fn first_crossing(u: &ComplexField) -> f64 {
    let g = u.grid;
    let start = g.origin.ceil() as usize;
    let mut prev: Option<(f64, f64)> = None;
    for i in start..g.n {
        let (x, v) = (g.x(i), u.u2[i]);
        if let Some((xp, vp)) = prev {
            if vp < 0.0 && v >= 0.0 {
                return xp + (x - xp) * (-vp) / (v - vp);
            }
        }
        prev = Some((x, v));
    }
    f64::NAN
}

/// Sign pattern of Im u: negative at the origin near the end, positive on an annulus,
/// and a zero-crossing radius that shrinks over the run.
pub fn sign_structure(snaps: &[Snapshot]) -> Result<SignStructure> {
    if snaps.len() < 2 {
        return Err(Error::SeriesTooShort(format!("{} snapshots", snaps.len())));
    }
    let mut t = Vec::new();
    let mut o = Vec::new();
    let mut c = Vec::new();
    for sn in snaps {
        t.push(sn.field.t);
        o.push(sn.field.eval(0.0)?.1);
        c.push(first_crossing(&sn.field));
    }
    let last = &snaps[snaps.len() - 1].field;
    let tail = snaps.len() - snaps.len() / 4 - 1;
    let origin_negative_at_end = o[tail..].iter().all(|v| *v < 0.0);
    let positive_annulus = last.u2.iter().any(|v| *v > 0.0);
    let crossing_decreasing = c.iter().all(|v| v.is_finite()) && c.windows(2).all(|w| w[1] < w[0]);
    Ok(SignStructure {
        pass: origin_negative_at_end && positive_annulus && crossing_decreasing,
        t,
        u2_origin: o,
        crossing: c,
        origin_negative_at_end,
        positive_annulus,
        crossing_decreasing,
    })
}

/// One row of the final-profile table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalProfileRow {
    pub x0: f64,
    pub u1: f64,
    pub u2: f64,
    pub u_star: f64,
    /// (2p/(p-1)^2) U*(x0)/|ln|x0||.
    pub u2_star: f64,
    pub ratio1: f64,
    pub ratio2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalProfile {
    pub theta_last: f64,
    pub window: (f64, f64),
    pub rows: Vec<FinalProfileRow>,
    pub pass: bool,
}

/// Compare the last field with U* on x in [3, 10] sqrt(theta |ln theta|), theta = T - t_last.
pub fn final_profile(last: &ComplexField, t_blowup: f64, p: &Params, points: usize) -> Result<FinalProfile> {
    let th = t_blowup - last.t;
    if !(th > 0.0 && th < 1.0) {
        return Err(Error::Domain(format!("theta = {th}")));
    }
    let r = (th * th.ln().abs()).sqrt();
    let (a, b) = (3.0 * r, 10.0 * r);
    let q = p.p - 1.0;
    let mut rows = Vec::with_capacity(points);
    for k in 0..points {
        let x0 = a * (b / a).powf(k as f64 / (points - 1).max(1) as f64);
        let (u1, u2) = last.eval(x0)?;
        let us = u_star(x0, p.p, p.cstar);
        let u2s = 2.0 * p.p / (q * q) * us / x0.ln().abs();
        rows.push(FinalProfileRow { x0, u1, u2, u_star: us, u2_star: u2s, ratio1: u1 / us, ratio2: u2 / u2s });
    }
    let ok = |v: f64| (0.7..=1.4).contains(&v);
    let pass = rows.iter().all(|r| ok(r.ratio1) && ok(r.ratio2));
    Ok(FinalProfile { theta_last: th, window: (a, b), rows, pass })
}

/// Everything above for one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub type_one: TypeOne,
    pub profile: ProfileConvergence,
    pub null_mode: NullModeLaw,
    pub sign: SignStructure,
    pub final_profile: FinalProfile,
}

pub fn diagnose(traj: &Trajectory, p: &Params, grid: &WeightedGrid) -> Result<RunDiagnostics> {
    let t1 = type_one(&traj.steps, p)?;
    let last = &traj
        .snapshots
        .last()
        .ok_or_else(|| Error::SeriesTooShort("no snapshots".into()))?
        .field;
    Ok(RunDiagnostics {
        profile: profile_convergence(&traj.snapshots, p, grid)?,
        null_mode: null_mode_law(&traj.snapshots, p, grid)?,
        sign: sign_structure(&traj.snapshots)?,
        final_profile: final_profile(last, t1.t_fit, p, 32)?,
        type_one: t1,
    })
}
