//! Construction of the initial datum from the profile Phi, the shooting perturbation, the
//! outer surrogate U* and a constant lift; plus the geometric helpers of the three regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid1D};
use crate::hermite::chi0;
use crate::params::Params;
use crate::profiles::{phi, u_star};

/// Shooting parameters (d10, d11, d20, d21, d22), each nominally in [-2, 2].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ShootParams {
    pub d10: f64,
    pub d11: f64,
    pub d20: f64,
    pub d21: f64,
    pub d22: f64,
}

impl ShootParams {
    pub fn even(d10: f64, d20: f64, d22: f64) -> Self {
        ShootParams { d10, d11: 0.0, d20, d21: 0.0, d22 }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.d10, self.d11, self.d20, self.d21, self.d22]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        ShootParams { d10: a[0], d11: a[1], d20: a[2], d21: a[3], d22: a[4] }
    }
}

/// Perturbation (phi1, phi2) at similarity coordinate y and time s0.
pub fn perturbation(y: f64, p: &Params, d: &ShootParams) -> (f64, f64) {
    let s0 = p.s0();
    let cut = chi0(16.0 * y.abs() / (p.k0 * s0.sqrt()));
    if cut == 0.0 {
        return (0.0, 0.0);
    }
    let a = p.a;
    let phi1 = a / (s0 * s0) * (d.d10 + d.d11 * y);
    let w2 = s0.powf(p.p1 + 2.0);
    let phi2 = a * a / w2 * (d.d20 + d.d21 * y) + a.powi(5) * s0.ln() / w2 * (0.5 * y * y * d.d22 - d.d22);
    (phi1 * cut, phi2 * cut)
}

/// Inner cutoff chi1(x) = chi0(|x| / (sqrt(T) |ln T|)).
pub fn chi1(x: f64, p: &Params) -> f64 {
    chi0(x.abs() / (p.t.sqrt() * p.t.ln().abs()))
}

/// Initial value at a single point.
pub fn initial_value(x: f64, p: &Params, d: &ShootParams) -> (f64, f64) {
    let s0 = p.s0();
    let scale = p.t.powf(-1.0 / (p.p - 1.0));
    let c = chi1(x, p);
    let mut u1 = 1.0;
    let mut u2 = 0.0;
    if c > 0.0 {
        let y = x / p.t.sqrt();
        let (f1, f2) = phi(y, s0, p.p, p.n);
        let (g1, g2) = perturbation(y, p, d);
        u1 += scale * (f1 + g1) * c;
        u2 += scale * (f2 + g2) * c;
    }
    if c < 1.0 {
        u1 += u_star(x, p.p, p.cstar) * (1.0 - c);
    }
    (u1, u2)
}

/// Initial datum on the grid.
pub fn initial_data(p: &Params, d: &ShootParams, grid: Grid1D) -> Result<ComplexField> {
    if p.n != 1 {
        return Err(Error::Precondition("evolution requires n = 1".into()));
    }
    let field = ComplexField::from_fn(grid, 0.0, |x| initial_value(x, p, d));
    if let Some(i) = field.u1.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::PositivityLoss { x: grid.x(i), value: field.u1[i] });
    }
    Ok(field)
}

/// theta(x) = T - t(x), the solution of theta |ln theta| = (4|x|/K0)^2 with theta < 1/e.
///
/// Solved as L - ln L = -ln c in L = -ln theta > 1 by safeguarded Newton.
pub fn theta_of_x(x: f64, p: &Params) -> Result<f64> {
    let c = (4.0 * x.abs() / p.k0).powi(2);
    if !(c > 0.0) {
        return Err(Error::NoRoot(format!("x = {x} gives no positive theta")));
    }
    if c >= (-1.0f64).exp() {
        return Err(Error::NoRoot(format!("x = {x} beyond the monotone branch")));
    }
    let target = -c.ln();
    let g = |l: f64| l - l.ln() - target;
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut l = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(l);
        if v.abs() < 1e-15 * l {
            break;
        }
        if v < 0.0 {
            lo = l;
        } else {
            hi = l;
        }
        let step = v / (1.0 - 1.0 / l);
        let next = l - step;
        l = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok((-l).exp())
}

/// t(x) = T - theta(x).
pub fn t_of_x(x: f64, p: &Params) -> Result<f64> {
    Ok(p.t - theta_of_x(x, p)?)
}

/// tau(x, t) = (t - t(x)) / theta(x).
pub fn tau_of(x: f64, t: f64, p: &Params) -> Result<f64> {
    let th = theta_of_x(x, p)?;
    Ok((t - (p.t - th)) / th)
}

/// Rescaled solution U(x, xi, tau) = theta^(1/(p-1)) u(x + xi sqrt(theta), t) at tau = tau(x, t),
/// read from a field at time t. Returns (U1, U2, tau).
pub fn u_rescaled(field: &ComplexField, x: f64, xi: f64, p: &Params) -> Result<(f64, f64, f64)> {
    let th = theta_of_x(x, p)?;
    let tau = (field.t - (p.t - th)) / th;
    let (u1, u2) = field.eval(x + xi * th.sqrt())?;
    let sc = th.powf(1.0 / (p.p - 1.0));
    Ok((sc * u1, sc * u2, tau))
}

/// Membership of x in the three overlapping regions at time t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regions {
    pub p1: bool,
    pub p2: bool,
    pub p3: bool,
}

pub fn region_of(x: f64, t: f64, p: &Params) -> Result<Regions> {
    let th = p.t - t;
    if !(th > 0.0 && th < 1.0) {
        return Err(Error::Domain(format!("T - t = {th} must lie in (0, 1)")));
    }
    let r = (th * th.ln().abs()).sqrt();
    let ax = x.abs();
    Ok(Regions {
        p1: ax <= p.k0 * r,
        p2: ax >= p.k0 / 4.0 * r && ax <= p.eps0,
        p3: ax >= p.eps0 / 4.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{validate, RawConfig};

    pub(crate) fn params(t: f64) -> Params {
        let mut m = RawConfig::new();
        for (k, v) in [
            ("p", 2.0),
            ("n", 1.0),
            ("p1", 0.2),
            ("K0", 10.0),
            ("A", 2.0),
            ("T", t),
            ("eps0", 0.025),
            ("alpha0", 0.1),
            ("delta0", 0.25),
            ("eta0", 0.25),
        ] {
            m.insert(k.into(), v);
        }
        validate(&m).unwrap()
    }

    fn theta_by_bisection(x: f64, p: &Params) -> f64 {
        let c = (4.0 * x.abs() / p.k0).powi(2);
        let (mut lo, mut hi) = (f64::EPSILON, (-1.0f64).exp());
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.ln().abs() < c {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn theta_agrees_with_bisection() {
        let p = params(1e-3);
        for &x in &[1e-6, 1e-4, 3e-3, 0.02, 0.3] {
            let a = theta_of_x(x, &p).unwrap();
            let b = theta_by_bisection(x, &p);
            assert!((a - b).abs() <= 1e-12 * b, "x={x} {a} {b}");
        }
    }

    #[test]
    fn t_of_x_inverts_the_parabola() {
        let p = params(1e-3);
        let x = 0.01;
        let t = t_of_x(x, &p).unwrap();
        let th = p.t - t;
        let back = p.k0 / 4.0 * (th * th.ln().abs()).sqrt();
        assert!((back - x).abs() < 1e-14);
    }

    #[test]
    fn origin_has_no_root() {
        assert!(matches!(theta_of_x(0.0, &params(1e-3)), Err(Error::NoRoot(_))));
    }

    #[test]
    fn initial_real_part_at_least_one() {
        let p = params(1e-7);
        let g = Grid1D::symmetric(0.04, 2049).unwrap();
        let d = ShootParams::even(1.0, -1.0, 0.5);
        let f = initial_data(&p, &d, g).unwrap();
        assert!(f.min_re() >= 1.0);
    }

    #[test]
    fn initial_data_is_even_for_even_params() {
        let p = params(1e-7);
        let g = Grid1D::symmetric(0.04, 1025).unwrap();
        let f = initial_data(&p, &ShootParams::even(0.3, 0.2, -0.1), g).unwrap();
        for i in 0..g.n {
            assert_eq!(f.u1[i], f.u1[g.n - 1 - i]);
            assert_eq!(f.u2[i], f.u2[g.n - 1 - i]);
        }
    }

    #[test]
    fn inner_region_matches_rescaled_profile() {
        let p = params(1e-7);
        let x = 2.0 * p.t.sqrt();
        let (u1, _) = initial_value(x, &p, &ShootParams::default());
        let (f1, _) = phi(2.0, p.s0(), p.p, p.n);
        assert!((u1 - (f1 / p.t + 1.0)).abs() < 1e-9 * u1);
    }

    #[test]
    fn regions_cover_the_line() {
        let p = params(1e-3);
        let t = 0.5e-3;
        for k in 0..400 {
            let x = 1e-5 * 1.03f64.powi(k);
            let r = region_of(x, t, &p).unwrap();
            assert!(r.p1 || r.p2 || r.p3, "x = {x}");
        }
    }
}
