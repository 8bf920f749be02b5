//! Gaussian-weighted L^2 machinery: rescaled Hermite polynomials, the weight, the cutoff,
//! quadrature grids, mode projections and the linear operator L = Lap - y.grad/2 + 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::composite_gauss_legendre;

/// Gaussian weight rho(y) = exp(-y^2/4) / sqrt(4 pi) (one dimension).
pub fn rho(y: f64) -> f64 {
    (-y * y / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt()
}

/// h_m(y) = sum_j (-1)^j m! y^(m-2j) / (j! (m-2j)!).
pub fn hermite(m: usize, y: f64) -> f64 {
    let mut sum = 0.0;
    // Coefficient m!/(j!(m-2j)!) built incrementally from j = 0.
    let mut coef = 1.0f64;
    for j in 0..=m / 2 {
        if j > 0 {
            let k = (m - 2 * j) as f64;
            coef *= (k + 1.0) * (k + 2.0) / j as f64;
        }
        let term = coef * y.powi((m - 2 * j) as i32);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

/// Norm squared of h_m in L^2_rho: m! 2^m.
pub fn hermite_norm2(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, k| acc * 2.0 * k as f64)
}

/// Smooth cutoff: 1 on [0, 1], 0 on [2, inf).
pub fn chi0(xi: f64) -> f64 {
    let xi = xi.abs();
    if xi <= 1.0 {
        return 1.0;
    }
    if xi >= 2.0 {
        return 0.0;
    }
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = psi(2.0 - xi);
    a / (a + psi(xi - 1.0))
}

/// chi(y, s) = chi0(|y| / (K0 sqrt s)).
pub fn chi(y: f64, s: f64, k0: f64) -> f64 {
    chi0(y.abs() / (k0 * s.sqrt()))
}

/// Sample points with quadrature weights (weight already multiplied by rho).
///
/// Points inside |y| <= y_cut are composite Gauss-Legendre nodes; points outside are uniform
/// and carry zero weight (they only enter the sup norms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGrid {
    pub y: Vec<f64>,
    pub quad_weights: Vec<f64>,
    pub k0: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub y_cut: f64,
    pub panels: usize,
    pub order: usize,
    pub y_max: f64,
    pub outer_dy: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { y_cut: 16.0, panels: 32, order: 16, y_max: 16.0, outer_dy: 0.25 }
    }
}

impl WeightedGrid {
    pub fn new(spec: GridSpec, k0: f64, s: f64) -> Result<Self> {
        if spec.y_cut <= 0.0 || spec.panels == 0 || spec.order == 0 || spec.outer_dy <= 0.0 {
            return Err(Error::Precondition("invalid grid spec".into()));
        }
        let (nodes, w) = composite_gauss_legendre(-spec.y_cut, spec.y_cut, spec.panels, spec.order);
        let mut outer = Vec::new();
        let mut y = spec.y_cut + spec.outer_dy;
        while y <= spec.y_max + 1e-12 {
            outer.push(y);
            y += spec.outer_dy;
        }
        let mut ys: Vec<f64> = outer.iter().rev().map(|v| -v).collect();
        let mut ws = vec![0.0; ys.len()];
        for (x, wt) in nodes.iter().zip(&w) {
            ys.push(*x);
            ws.push(wt * rho(*x));
        }
        for v in &outer {
            ys.push(*v);
            ws.push(0.0);
        }
        Ok(WeightedGrid { y: ys, quad_weights: ws, k0, s })
    }

    pub fn set_time(&mut self, s: f64) {
        self.s = s;
    }

    /// Quadrature of g(y) rho(y).
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.y.iter().zip(&self.quad_weights).filter(|(_, w)| **w != 0.0).map(|(y, w)| w * g(*y)).sum()
    }
}

/// Projection of one component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComponentModes {
    /// r0 = int chi r rho.
    pub q0: f64,
    /// r1 = int chi r (y/2) rho.
    pub q1: f64,
    /// r2 = int chi r (y^2/4 - 1/2) rho; the h2 coefficient of the reconstruction is r2/2.
    pub q2: f64,
    /// sup over |y| <= 2 K0 sqrt(s) of |q_-(y)| / (1 + |y|^3).
    pub qminus: f64,
    /// sup |(1 - chi) r|.
    pub qe: f64,
}

/// Modes of the pair (q1, q2) at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeVector {
    pub s: f64,
    pub c1: ComponentModes,
    pub c2: ComponentModes,
}

impl ModeVector {
    pub const CSV_HEADER: [&'static str; 11] =
        ["s", "q10", "q11", "q12", "q1minus", "q1e", "q20", "q21", "q22", "q2minus", "q2e"];

    pub fn csv_row(&self) -> [f64; 11] {
        [
            self.s, self.c1.q0, self.c1.q1, self.c1.q2, self.c1.qminus, self.c1.qe, self.c2.q0,
            self.c2.q1, self.c2.q2, self.c2.qminus, self.c2.qe,
        ]
    }
}

/// Result of projecting one grid function.
#[derive(Debug, Clone)]
pub struct Projection {
    pub modes: ComponentModes,
    pub q_minus: Vec<f64>,
    pub q_e: Vec<f64>,
}

/// Split r = chi r + (1 - chi) r and project chi r onto the modes 0, 1, 2.
pub fn project(r: &[f64], g: &WeightedGrid) -> Result<Projection> {
    if r.len() != g.y.len() {
        return Err(Error::Precondition(format!(
            "field has {} samples, grid has {}",
            r.len(),
            g.y.len()
        )));
    }
    let mut r0 = 0.0;
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    let cut: Vec<f64> = g.y.iter().map(|&y| chi(y, g.s, g.k0)).collect();
    for i in 0..r.len() {
        let w = g.quad_weights[i];
        if w == 0.0 {
            continue;
        }
        let y = g.y[i];
        let rb = cut[i] * r[i];
        r0 += w * rb;
        r1 += w * rb * y / 2.0;
        r2 += w * rb * (y * y / 4.0 - 0.5);
    }
    let support = 2.0 * g.k0 * g.s.sqrt();
    let mut q_minus = Vec::with_capacity(r.len());
    let mut q_e = Vec::with_capacity(r.len());
    let mut qminus = 0.0f64;
    let mut qe = 0.0f64;
    for i in 0..r.len() {
        let y = g.y[i];
        let rb = cut[i] * r[i];
        let qm = rb - (r0 + r1 * y + 0.5 * r2 * (y * y - 2.0));
        let e = (1.0 - cut[i]) * r[i];
        if y.abs() <= support {
            qminus = qminus.max(qm.abs() / (1.0 + y.abs().powi(3)));
        }
        qe = qe.max(e.abs());
        q_minus.push(qm);
        q_e.push(e);
    }
    Ok(Projection { modes: ComponentModes { q0: r0, q1: r1, q2: r2, qminus, qe }, q_minus, q_e })
}

/// L r = r'' - (y/2) r' + r on a uniform grid (second-order centred differences,
/// second-order one-sided differences at the two ends).
pub fn apply_l(r: &[f64], y0: f64, h: f64) -> Result<Vec<f64>> {
    let n = r.len();
    if n < 4 {
        return Err(Error::GridTooCoarse(format!("{n} points")));
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        let y = y0 + i as f64 * h;
        let (d1, d2) = if i == 0 {
            (
                (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h),
                (2.0 * r[0] - 5.0 * r[1] + 4.0 * r[2] - r[3]) / (h * h),
            )
        } else if i == n - 1 {
            (
                (3.0 * r[i] - 4.0 * r[i - 1] + r[i - 2]) / (2.0 * h),
                (2.0 * r[i] - 5.0 * r[i - 1] + 4.0 * r[i - 2] - r[i - 3]) / (h * h),
            )
        } else {
            ((r[i + 1] - r[i - 1]) / (2.0 * h), (r[i + 1] - 2.0 * r[i] + r[i - 1]) / (h * h))
        };
        out[i] = d2 - 0.5 * y * d1 + r[i];
    }
    Ok(out)
}
