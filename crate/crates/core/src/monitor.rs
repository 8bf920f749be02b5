//! Membership tests for the shrinking set: the ten mode boxes, the intermediate-region
//! comparison with the ODE profile, the outer-region smallness, and mode-ODE residual fits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::to_similarity;
use crate::field::ComplexField;
use crate::hermite::{project, GridSpec, ModeVector, WeightedGrid};
use crate::initial_data::theta_of_x;
use crate::numerics::central_diff5;
use crate::params::Params;
use crate::profiles::{phi, u_hat_shrinking};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Face {
    Q10,
    Q11,
    Q12,
    Q20,
    Q21,
    Q22,
    Q1Minus,
    Q2Minus,
    Q1E,
    Q2E,
}

impl Face {
    pub const ALL: [Face; 10] = [
        Face::Q10,
        Face::Q11,
        Face::Q12,
        Face::Q20,
        Face::Q21,
        Face::Q22,
        Face::Q1Minus,
        Face::Q2Minus,
        Face::Q1E,
        Face::Q2E,
    ];

    /// Faces of the finite-dimensional box steered by the shooting parameters.
    pub fn is_shootable(self) -> bool {
        matches!(self, Face::Q10 | Face::Q11 | Face::Q20 | Face::Q21 | Face::Q22)
    }

    pub fn label(self) -> &'static str {
        match self {
            Face::Q10 => "q10",
            Face::Q11 => "q11",
            Face::Q12 => "q12",
            Face::Q20 => "q20",
            Face::Q21 => "q21",
            Face::Q22 => "q22",
            Face::Q1Minus => "q1minus",
            Face::Q2Minus => "q2minus",
            Face::Q1E => "q1e",
            Face::Q2E => "q2e",
        }
    }

    /// Coordinate of the mode vector on this face.
    pub fn value(self, m: &ModeVector) -> f64 {
        match self {
            Face::Q10 => m.c1.q0,
            Face::Q11 => m.c1.q1,
            Face::Q12 => m.c1.q2,
            Face::Q20 => m.c2.q0,
            Face::Q21 => m.c2.q1,
            Face::Q22 => m.c2.q2,
            Face::Q1Minus => m.c1.qminus,
            Face::Q2Minus => m.c2.qminus,
            Face::Q1E => m.c1.qe,
            Face::Q2E => m.c2.qe,
        }
    }

    /// Box half-width at time s.
    pub fn bound(self, p: &Params, s: f64) -> f64 {
        let a = p.a;
        let ls = s.ln();
        match self {
            Face::Q10 | Face::Q11 | Face::Q1Minus => a / (s * s),
            Face::Q12 => a * a * ls / (s * s),
            Face::Q20 | Face::Q21 => a * a / s.powf(p.p1 + 2.0),
            Face::Q22 => a.powi(5) * ls / s.powf(p.p1 + 2.0),
            Face::Q2Minus => a * a / s.powf((p.p1 + 5.0) / 2.0),
            Face::Q1E => a * a / s.sqrt(),
            Face::Q2E => a.powi(3) / s.powf((p.p1 + 2.0) / 2.0),
        }
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCheck {
    pub in_box: bool,
    pub worst_face: Face,
    pub worst_ratio: f64,
    pub ratios: [f64; 10],
}

impl BoxCheck {
    pub fn ratio(&self, face: Face) -> f64 {
        self.ratios[Face::ALL.iter().position(|f| *f == face).unwrap()]
    }
}

/// Ratios |coordinate| / bound on the ten faces. The set is closed: ratio 1 is inside.
pub fn va_check(m: &ModeVector, p: &Params) -> BoxCheck {
    let mut ratios = [0.0; 10];
    let mut worst = (Face::Q10, -1.0);
    for (i, face) in Face::ALL.iter().enumerate() {
        let r = face.value(m).abs() / face.bound(p, m.s);
        ratios[i] = r;
        if r > worst.1 {
            worst = (*face, r);
        }
    }
    BoxCheck { in_box: worst.1 <= 1.0, worst_face: worst.0, worst_ratio: worst.1, ratios }
}

/// Same test restricted to the five shootable faces.
pub fn va_hat_check(m: &ModeVector, p: &Params) -> BoxCheck {
    let mut c = va_check(m, p);
    let mut worst = (Face::Q10, -1.0);
    for (i, face) in Face::ALL.iter().enumerate() {
        if face.is_shootable() && c.ratios[i] > worst.1 {
            worst = (*face, c.ratios[i]);
        }
    }
    c.in_box = worst.1 <= 1.0;
    c.worst_face = worst.0;
    c.worst_ratio = worst.1;
    c
}

/// Sampling of the intermediate region used by the P2 test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub radii: usize,
    pub xis: usize,
}

impl Default for Lattice {
    fn default() -> Self {
        Lattice { radii: 64, xis: 33 }
    }
}

/// max |U(x, xi, tau(x,t)) - U_hat(tau)| over (K0/4) sqrt((T-t)|ln(T-t)|) <= |x| <= eps0 and
/// |xi| <= alpha0 sqrt(|ln theta(x)|). Returns 0 when the region is empty.
pub fn check_p2(u: &ComplexField, p: &Params, lattice: Lattice) -> Result<f64> {
    let th = p.t - u.t;
    if !(th > 0.0 && th < 1.0) {
        return Err(Error::Domain(format!("T - t = {th}")));
    }
    let r_lo = p.k0 / 4.0 * (th * th.ln().abs()).sqrt();
    let r_hi = p.eps0;
    if r_lo >= r_hi {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for i in 0..lattice.radii {
        let frac = if lattice.radii == 1 { 0.0 } else { i as f64 / (lattice.radii - 1) as f64 };
        let r = r_lo * (r_hi / r_lo).powf(frac);
        let thx = theta_of_x(r, p)?;
        let span = p.alpha0 * thx.ln().abs().sqrt();
        let tau = (u.t - (p.t - thx)) / thx;
        let uhat = u_hat_shrinking(p.p, p.k0, tau);
        let sc = thx.powf(1.0 / (p.p - 1.0));
        for sign in [-1.0, 1.0] {
            for j in 0..lattice.xis {
                let xi = if lattice.xis == 1 {
                    0.0
                } else {
                    -span + 2.0 * span * j as f64 / (lattice.xis - 1) as f64
                };
                let (a, b) = u.eval(sign * r + xi * thx.sqrt())?;
                worst = worst.max((sc * a - uhat).hypot(sc * b));
            }
        }
    }
    Ok(worst)
}

/// max |u(x,t) - u(x,0)| over grid points with |x| >= eps0/4.
pub fn check_p3(u: &ComplexField, u0: &ComplexField, p: &Params) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..u.grid.n {
        if u.grid.x(i).abs() >= p.eps0 / 4.0 {
            worst = worst.max((u.u1[i] - u0.u1[i]).hypot(u.u2[i] - u0.u2[i]));
        }
    }
    worst
}

/// One line of monitor output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub s: f64,
    #[serde(rename = "in_S")]
    pub in_s: bool,
    pub in_va: bool,
    pub worst_face: Face,
    pub worst_ratio: f64,
    #[serde(rename = "P2_dev")]
    pub p2_dev: f64,
    #[serde(rename = "P3_dev")]
    pub p3_dev: f64,
    pub modes: ModeVector,
    pub box_check: BoxCheck,
}

/// Evaluates snapshots against the shrinking set, in similarity variables built from the
/// nominal blow-up time.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub params: Params,
    pub grid: WeightedGrid,
    pub lattice: Lattice,
    pub u0: ComplexField,
}

/// Similarity-grid spec wide enough for the q_- and q_e norms up to s_max.
pub fn default_grid_spec(p: &Params, s_max: f64) -> GridSpec {
    GridSpec { y_max: 2.0 * p.k0 * s_max.sqrt(), ..GridSpec::default() }
}

impl Monitor {
    pub fn new(params: Params, u0: ComplexField, s_max: f64) -> Result<Self> {
        let grid = WeightedGrid::new(default_grid_spec(&params, s_max), params.k0, params.s0())?;
        Ok(Monitor { params, grid, lattice: Lattice::default(), u0 })
    }

    /// Mode vector of (q1, q2) = w - Phi at the field's time.
    pub fn modes(&self, u: &ComplexField) -> Result<ModeVector> {
        let p = &self.params;
        let mut g = self.grid.clone();
        let frame = to_similarity(u, p.t, p.p, &g)?;
        g.set_time(frame.s);
        let mut q1 = Vec::with_capacity(g.y.len());
        let mut q2 = Vec::with_capacity(g.y.len());
        for (i, &y) in g.y.iter().enumerate() {
            let (f1, f2) = phi(y, frame.s, p.p, p.n);
            q1.push(frame.w1[i] - f1);
            q2.push(frame.w2[i] - f2);
        }
        let a = project(&q1, &g)?.modes;
        let b = project(&q2, &g)?.modes;
        Ok(ModeVector { s: frame.s, c1: a, c2: b })
    }

    pub fn observe(&self, u: &ComplexField) -> Result<MonitorRecord> {
        let modes = self.modes(u)?;
        let bc = va_check(&modes, &self.params);
        let p2 = check_p2(u, &self.params, self.lattice)?;
        let p3 = check_p3(u, &self.u0, &self.params);
        Ok(MonitorRecord {
            s: modes.s,
            in_s: bc.in_box && p2 <= self.params.delta0 && p3 <= self.params.eta0,
            in_va: bc.in_box,
            worst_face: bc.worst_face,
            worst_ratio: bc.worst_ratio,
            p2_dev: p2,
            p3_dev: p3,
            modes,
            box_check: bc,
        })
    }
}

/// Fitted constants for the mode ODE families over a uniformly spaced series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeFit {
    /// max |q10' - q10| s^2 and max |q11' - q11/2| s^2.
    pub c_q1_positive: f64,
    /// max |q20' - q20| s^(p1+2) and max |q21' - q21/2| s^(p1+2).
    pub c_q2_positive: f64,
    /// max |q12' + 2 q12/s| s^3 / A.
    pub c_q1_null: f64,
    /// max |q22' + 2 q22/s| s^(p1+3) / (A^2 ln s).
    pub c_q2_null: f64,
    /// Same fits on the first and second halves of the series, for stability.
    pub halves: [[f64; 4]; 2],
}

pub fn mode_ode_residuals(series: &[ModeVector], p: &Params) -> Result<OdeFit> {
    let n = series.len();
    if n < 9 {
        return Err(Error::SeriesTooShort(format!("{n} snapshots, need at least 9")));
    }
    let ds = (series[n - 1].s - series[0].s) / (n - 1) as f64;
    let col = |f: fn(&ModeVector) -> f64| series.iter().map(f).collect::<Vec<f64>>();
    let q10 = col(|m| m.c1.q0);
    let q11 = col(|m| m.c1.q1);
    let q12 = col(|m| m.c1.q2);
    let q20 = col(|m| m.c2.q0);
    let q21 = col(|m| m.c2.q1);
    let q22 = col(|m| m.c2.q2);
    let a = p.a;
    let mut per_index = Vec::with_capacity(n);
    for i in 2..n - 2 {
        let s = series[i].s;
        let r1 = (central_diff5(&q10, i, ds) - q10[i]).abs().max((central_diff5(&q11, i, ds) - 0.5 * q11[i]).abs());
        let r2 = (central_diff5(&q20, i, ds) - q20[i]).abs().max((central_diff5(&q21, i, ds) - 0.5 * q21[i]).abs());
        let n1 = (central_diff5(&q12, i, ds) + 2.0 * q12[i] / s).abs();
        let n2 = (central_diff5(&q22, i, ds) + 2.0 * q22[i] / s).abs();
        per_index.push([
            r1 * s * s,
            r2 * s.powf(p.p1 + 2.0),
            n1 * s.powi(3) / a,
            n2 * s.powf(p.p1 + 3.0) / (a * a * s.ln()),
        ]);
    }
    let fold = |rows: &[[f64; 4]]| {
        let mut m = [0.0f64; 4];
        for r in rows {
            for k in 0..4 {
                m[k] = m[k].max(r[k]);
            }
        }
        m
    };
    let all = fold(&per_index);
    let half = per_index.len() / 2;
    Ok(OdeFit {
        c_q1_positive: all[0],
        c_q2_positive: all[1],
        c_q1_null: all[2],
        c_q2_null: all[3],
        halves: [fold(&per_index[..half]), fold(&per_index[half..])],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::ComponentModes;
    use crate::params::{validate, RawConfig};

    fn params() -> Params {
        let mut m = RawConfig::new();
        for (k, v) in [
            ("p", 2.0),
            ("n", 1.0),
            ("p1", 0.2),
            ("K0", 10.0),
            ("A", 20.0),
            ("T", 1e-3),
            ("eps0", 0.02),
            ("alpha0", 0.1),
            ("delta0", 0.1),
            ("eta0", 0.25),
        ] {
            m.insert(k.into(), v);
        }
        validate(&m).unwrap()
    }

    fn at_corner(face: Face, scale: f64, p: &Params, s: f64) -> ModeVector {
        let mut m = ModeVector { s, ..Default::default() };
        let v = scale * face.bound(p, s);
        match face {
            Face::Q10 => m.c1.q0 = v,
            Face::Q11 => m.c1.q1 = v,
            Face::Q12 => m.c1.q2 = v,
            Face::Q20 => m.c2.q0 = v,
            Face::Q21 => m.c2.q1 = v,
            Face::Q22 => m.c2.q2 = v,
            Face::Q1Minus => m.c1.qminus = v,
            Face::Q2Minus => m.c2.qminus = v,
            Face::Q1E => m.c1.qe = v,
            Face::Q2E => m.c2.qe = v,
        }
        m
    }

    #[test]
    fn box_is_closed() {
        let p = params();
        let m = at_corner(Face::Q10, 1.0, &p, 20.0);
        assert!(va_check(&m, &p).in_box);
        let m = at_corner(Face::Q10, 1.0 + 1e-12, &p, 20.0);
        let c = va_check(&m, &p);
        assert!(!c.in_box);
        assert_eq!(c.worst_face, Face::Q10);
    }

    #[test]
    fn every_face_is_detected() {
        let p = params();
        for face in Face::ALL {
            let c = va_check(&at_corner(face, 1.5, &p, 30.0), &p);
            assert_eq!(c.worst_face, face);
            assert!((c.worst_ratio - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn hat_check_ignores_non_shootable_faces() {
        let p = params();
        let c = va_hat_check(&at_corner(Face::Q1E, 3.0, &p, 30.0), &p);
        assert!(c.in_box);
    }

    #[test]
    fn origin_is_inside() {
        let p = params();
        let m = ModeVector { s: 10.0, c1: ComponentModes::default(), c2: ComponentModes::default() };
        assert!(va_check(&m, &p).in_box);
    }

    #[test]
    fn ode_fit_vanishes_on_exact_laws() {
        let p = params();
        let series: Vec<ModeVector> = (0..40)
            .map(|i| {
                let s = 10.0 + 0.05 * i as f64;
                let mut m = ModeVector { s, ..Default::default() };
                m.c1.q0 = 1e-8 * s.exp();
                m.c1.q1 = 1e-8 * (0.5 * s).exp();
                m.c1.q2 = 1.0 / (s * s);
                m.c2.q0 = -2e-8 * s.exp();
                m.c2.q2 = 3.0 / (s * s);
                m
            })
            .collect();
        let fit = mode_ode_residuals(&series, &p).unwrap();
        assert!(fit.c_q1_positive < 1e-3 && fit.c_q1_null < 1e-3, "{fit:?}");
        assert!(fit.c_q2_positive < 1e-3 && fit.c_q2_null < 1e-3, "{fit:?}");
    }

    #[test]
    fn short_series_rejected() {
        let p = params();
        let s: Vec<ModeVector> = (0..5).map(|i| ModeVector { s: i as f64, ..Default::default() }).collect();
        assert!(matches!(mode_ode_residuals(&s, &p), Err(Error::SeriesTooShort(_))));
    }
}
