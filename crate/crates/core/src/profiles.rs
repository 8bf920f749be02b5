//! Closed-form profiles: outer expansion, approximate solution Phi, rest terms,
//! linearised potentials, the shrinking-set and final-time ODE profiles, and U*.

use crate::jet::Jet;
use crate::nonlinearity::{df, f_raw};
use crate::params::{b_const, kappa, Params};

/// f0(z) = (p-1 + b z^2)^(-1/(p-1)).
pub fn f0(z: f64, p: f64) -> f64 {
    (p - 1.0 + b_const(p) * z * z).powf(-1.0 / (p - 1.0))
}

/// g0(z) = z^2 (p-1 + b z^2)^(-p/(p-1)).
pub fn g0(z: f64, p: f64) -> f64 {
    z * z * (p - 1.0 + b_const(p) * z * z).powf(-p / (p - 1.0))
}

/// Solution of U' = U^p used for the shrinking-set comparison (K0^2/64 variant).
pub fn u_hat_shrinking(p: f64, k0: f64, tau: f64) -> f64 {
    let d = (p - 1.0) * (1.0 - tau) + (p - 1.0) * (p - 1.0) * k0 * k0 / (64.0 * p);
    d.powf(-1.0 / (p - 1.0))
}

fn final_base(p: f64, k: f64, tau: f64) -> f64 {
    (p - 1.0) * (1.0 - tau) + (p - 1.0) * (p - 1.0) * k * k / (4.0 * p)
}

/// Final-profile variant of U' = U^p (K^2/4 normalisation).
pub fn u_hat_final(p: f64, k: f64, tau: f64) -> f64 {
    final_base(p, k, tau).powf(-1.0 / (p - 1.0))
}

/// Imaginary companion: V2' = p U^(p-1) V2, V2(0) = K^2 (p-1 + (p-1)^2 K^2/(4p))^(-p/(p-1)).
pub fn v_hat2_final(p: f64, k: f64, tau: f64) -> f64 {
    k * k * final_base(p, k, tau).powf(-p / (p - 1.0))
}

/// Outer expansion coefficients with exact first and second derivatives in z.
pub struct Outer {
    pub r10: Jet,
    pub r11: Jet,
    pub r21: Jet,
    pub r22: Jet,
}

/// Coefficients of the logarithmic correction H22: c1, c2, c3 multiplying
/// z^2 D^{-(2p-1)/(p-1)}, z^2 ln D D^{-p/(p-1)} and z^2 ln D D^{-(2p-1)/(p-1)}.
pub fn h22_coefficients(p: f64) -> (f64, f64, f64) {
    (-(p - 1.0) / 2.0, (p - 2.0) / (p - 1.0), p)
}

pub fn outer(z: f64, p: f64) -> Outer {
    let b = b_const(p);
    let zj = Jet::var(z);
    let z2 = zj * zj;
    let d = z2 * b + (p - 1.0);
    let e = 1.0 / (p - 1.0);
    let a = p / (p - 1.0);
    let g = (2.0 * p - 1.0) / (p - 1.0);
    let ln_d = d.ln();
    let d_a = d.powf(-a);
    let d_g = d.powf(-g);
    let r10 = d.powf(-e);
    let r11 = d_a * ((p - 1.0) / (2.0 * p)) - z2 * ln_d * d_a * ((p - 1.0) / (4.0 * p));
    let r21 = z2 * d_a;
    let (c1, c2, c3) = h22_coefficients(p);
    let r22 = d_a * -2.0 + z2 * d_g * c1 + z2 * ln_d * d_a * c2 + z2 * ln_d * d_g * c3;
    Outer { r10, r11, r21, r22 }
}

/// Residuals of the four outer ODEs at z.
pub fn outer_residuals(z: f64, p: f64) -> [f64; 4] {
    let o = outer(z, p);
    let (r10, r11, r21, r22) = (o.r10, o.r11, o.r21, o.r22);
    let q = p - 1.0;
    let res10 = -0.5 * r10.d1 * z - r10.v / q + r10.v.powf(p);
    let res11 = -0.5 * z * r11.d1 - r11.v / q + p * r10.v.powf(q) * r11.v + r10.d2 + 0.5 * z * r10.d1;
    let res21 = -0.5 * r21.d1 * z - r21.v / q + p * r10.v.powf(q) * r21.v;
    let res22 = -0.5 * r22.d1 * z - r22.v / q + p * r10.v.powf(q) * r22.v
        + r21.d2
        + r21.v
        + 0.5 * r21.d1 * z
        + p * q * r10.v.powf(p - 2.0) * r11.v * r21.v;
    [res10, res11, res21, res22]
}

/// Phi and the derivatives needed by the rest terms, at radius |y| and time s.
#[derive(Debug, Clone, Copy)]
pub struct PhiEval {
    pub phi1: f64,
    pub phi2: f64,
    pub lap1: f64,
    pub lap2: f64,
    /// y . grad Phi_i = |y| dPhi_i/d|y|.
    pub ydot1: f64,
    pub ydot2: f64,
    pub ds1: f64,
    pub ds2: f64,
}

/// Approximate profile Phi = (Phi1, Phi2) with closed-form derivatives (radial in R^n).
pub fn phi_eval(y: f64, s: f64, p: f64, n: u32) -> PhiEval {
    let b = b_const(p);
    let k = kappa(p);
    let nf = n as f64;
    let r2 = y * y;
    let d = p - 1.0 + b * r2 / s;
    let e = 1.0 / (p - 1.0);
    let a = p / (p - 1.0);
    let d_a = d.powf(-a);
    let d_a1 = d_a / d;
    let d_a2 = d_a1 / d;

    let phi1 = d.powf(-e) + nf * k / (2.0 * p * s);
    let g1 = -(2.0 * b * e / s) * d_a;
    let rr1 = g1 + (4.0 * a * b * b * e * r2 / (s * s)) * d_a1;
    let ds1 = (b * e * r2 / (s * s)) * d_a - nf * k / (2.0 * p * s * s);

    let phi2 = (r2 / (s * s)) * d_a - 2.0 * nf * k / ((p - 1.0) * s * s);
    let g2 = (2.0 / (s * s)) * d_a - (2.0 * a * b * r2 / (s * s * s)) * d_a1;
    let rr2 = (2.0 / (s * s)) * d_a - (10.0 * a * b * r2 / (s * s * s)) * d_a1
        + (4.0 * a * (a + 1.0) * b * b * r2 * r2 / (s * s * s * s)) * d_a2;
    let ds2 = -(2.0 * r2 / (s * s * s)) * d_a + (a * b * r2 * r2 / (s * s * s * s)) * d_a1
        + 4.0 * nf * k / ((p - 1.0) * s * s * s);

    PhiEval {
        phi1,
        phi2,
        lap1: rr1 + (nf - 1.0) * g1,
        lap2: rr2 + (nf - 1.0) * g2,
        ydot1: r2 * g1,
        ydot2: r2 * g2,
        ds1,
        ds2,
    }
}

/// Phi = (Phi1, Phi2) at (y, s).
pub fn phi(y: f64, s: f64, p: f64, n: u32) -> (f64, f64) {
    let e = phi_eval(y, s, p, n);
    (e.phi1, e.phi2)
}

/// Rest terms R_i = Lap Phi_i - y.grad Phi_i / 2 - Phi_i/(p-1) + F_i(Phi) - d_s Phi_i.
pub fn rest_terms(y: f64, s: f64, p: f64, n: u32) -> (f64, f64) {
    let e = phi_eval(y, s, p, n);
    let (f1, f2) = f_raw(e.phi1, e.phi2, p);
    let r1 = e.lap1 - 0.5 * e.ydot1 - e.phi1 / (p - 1.0) + f1 - e.ds1;
    let r2 = e.lap2 - 0.5 * e.ydot2 - e.phi2 / (p - 1.0) + f2 - e.ds2;
    (r1, r2)
}

/// Potentials of the linearised system around Phi.
#[derive(Debug, Clone, Copy)]
pub struct Potentials {
    pub v: f64,
    pub v11: f64,
    pub v12: f64,
    pub v21: f64,
    pub v22: f64,
}

pub fn potentials(y: f64, s: f64, p: f64, n: u32) -> Potentials {
    let (p1, p2) = phi(y, s, p, n);
    let base = p * p1.powf(p - 1.0);
    let j = df(p1, p2, p).expect("Phi1 is positive");
    Potentials {
        v: base - p / (p - 1.0),
        v11: j[0][0] - base,
        v12: j[0][1],
        v21: j[1][0],
        v22: j[1][1] - base,
    }
}

/// Quadratic remainders B = F(Phi + q) - F(Phi) - DF(Phi) q.
pub fn remainders(y: f64, s: f64, q1: f64, q2: f64, p: f64, n: u32) -> (f64, f64) {
    let (p1, p2) = phi(y, s, p, n);
    let (a1, a2) = f_raw(p1 + q1, p2 + q2, p);
    let (b1, b2) = f_raw(p1, p2, p);
    let j = df(p1, p2, p).expect("Phi1 is positive");
    (
        a1 - b1 - j[0][0] * q1 - j[0][1] * q2,
        a2 - b2 - j[1][0] * q1 - j[1][1] * q2,
    )
}

/// Final-profile surrogate U*: the log-corrected power law near the origin,
/// 1/(1+x^2) for |x| >= 1, and a monotone cubic-in-log bridge in between.
pub fn u_star(x: f64, p: f64, cstar: f64) -> f64 {
    let ax = x.abs();
    let q = p - 1.0;
    let c = q * q / (8.0 * p);
    if ax == 0.0 {
        return f64::INFINITY;
    }
    if ax <= cstar {
        let l = ax.ln().abs();
        return (c * ax * ax / l).powf(-1.0 / q);
    }
    if ax >= 1.0 {
        return 1.0 / (1.0 + ax * ax);
    }
    // Hermite cubic for ln U* as a function of ln|x| on [ln Cstar, 0].
    let la = cstar.ln();
    let ga = -(c.ln() + 2.0 * la - (-la).ln()) / q;
    let sa = -(2.0 + 1.0 / la.abs()) / q;
    let gb = -(2.0f64).ln();
    let sb = -1.0;
    let h = -la;
    let t = (ax.ln() - la) / h;
    let h00 = 2.0 * t * t * t - 3.0 * t * t + 1.0;
    let h10 = t * t * t - 2.0 * t * t + t;
    let h01 = -2.0 * t * t * t + 3.0 * t * t;
    let h11 = t * t * t - t * t;
    (h00 * ga + h10 * h * sa + h01 * gb + h11 * h * sb).exp()
}

impl Params {
    pub fn u_hat0(&self) -> f64 {
        u_hat_shrinking(self.p, self.k0, 0.0)
    }
}
