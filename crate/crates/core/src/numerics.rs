//! Small numerical kernels shared by the solver, the projections and the checks.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Solve a tridiagonal system by the Thomas algorithm.
///
/// `lower[i]` multiplies x[i-1] in row i (lower[0] unused), `upper[i]` multiplies x[i+1]
/// (upper[n-1] unused). No pivoting, so the matrix should be diagonally dominant.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Solve a cyclic tridiagonal system with constant coefficients (off-diagonal `off`,
/// diagonal `diag`) by Sherman-Morrison.
pub fn solve_cyclic_constant(off: f64, diag: f64, rhs: &mut [f64]) {
    let n = rhs.len();
    assert!(n >= 3);
    let gamma = -diag;
    let mut d = vec![diag; n];
    d[0] = diag - gamma;
    d[n - 1] = diag - off * off / gamma;
    let lo = vec![off; n];
    let up = vec![off; n];
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    solve_tridiagonal(&lo, &d, &up, rhs);
    solve_tridiagonal(&lo, &d, &up, &mut u);
    let fact = (rhs[0] + off * rhs[n - 1] / gamma) / (1.0 + u[0] + off * u[n - 1] / gamma);
    for i in 0..n {
        rhs[i] -= fact * u[i];
    }
}

/// Four-point Lagrange interpolation on the uniform grid x0 + i*h.
pub fn cubic_interp(x0: f64, h: f64, values: &[f64], x: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 4);
    let t = (x - x0) / h;
    let mut i = t.floor() as isize - 1;
    i = i.clamp(0, n as isize - 4);
    let i = i as usize;
    let u = t - i as f64;
    let (f0, f1, f2, f3) = (values[i], values[i + 1], values[i + 2], values[i + 3]);
    // Lagrange basis on nodes 0,1,2,3.
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    f0 * l0 + f1 * l1 + f2 * l2 + f3 * l3
}

pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Weights for integrating samples f(t_0..t_i) on a uniform grid of step dt over [t_0, t_i].
/// Composite Simpson, closed with a 3/8 panel when i is odd.
pub fn newton_cotes_weights(i: usize, dt: f64) -> Vec<f64> {
    let mut w = vec![0.0; i + 1];
    match i {
        0 => {}
        1 => {
            w[0] = 0.5 * dt;
            w[1] = 0.5 * dt;
        }
        _ => {
            let simpson_end = if i % 2 == 0 { i } else { i - 3 };
            let mut k = 0;
            while k + 2 <= simpson_end {
                w[k] += dt / 3.0;
                w[k + 1] += 4.0 * dt / 3.0;
                w[k + 2] += dt / 3.0;
                k += 2;
            }
            if i % 2 == 1 {
                let k = i - 3;
                w[k] += 3.0 * dt / 8.0;
                w[k + 1] += 9.0 * dt / 8.0;
                w[k + 2] += 9.0 * dt / 8.0;
                w[k + 3] += 3.0 * dt / 8.0;
            }
        }
    }
    w
}

/// Discrete heat kernel e^{-2r} I_j(2r), j = 0..=jmax, with r = t/h^2.
///
/// This is the exact semigroup of the 3-point Laplacian on the infinite lattice, normalised
/// so that the two-sided sum is one. Computed by Miller's backward recurrence.
pub fn discrete_heat_kernel(r: f64, jmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; jmax + 1];
    if r <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = 2.0 * r;
    let start = jmax.max((x + 12.0 * x.sqrt() + 40.0) as usize) + 20;
    let mut ip1 = 0.0f64;
    let mut i = 1e-300f64;
    let mut vals = vec![0.0f64; start + 1];
    vals[start] = i;
    for j in (1..=start).rev() {
        let im1 = ip1 + (2.0 * j as f64 / x) * i;
        ip1 = i;
        i = im1;
        vals[j - 1] = i;
        if i > 1e250 {
            for v in vals.iter_mut().skip(j - 1) {
                *v *= 1e-250;
            }
            i *= 1e-250;
            ip1 *= 1e-250;
        }
    }
    let total: f64 = vals[0] + 2.0 * vals[1..].iter().sum::<f64>();
    for j in 0..=jmax {
        out[j] = vals[j] / total;
    }
    out
}

/// Composite Gauss-Legendre nodes and weights on [a, b].
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order must be positive"));
    let pairs = rule.as_node_weight_pairs();
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    let h = (b - a) / panels as f64;
    for k in 0..panels {
        let lo = a + k as f64 * h;
        let mut panel: Vec<(f64, f64)> =
            pairs.iter().map(|&(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w)).collect();
        panel.sort_by(|p, q| p.0.total_cmp(&q.0));
        for (x, w) in panel {
            nodes.push(x);
            weights.push(w);
        }
    }
    (nodes, weights)
}

/// Five-point central difference of a uniformly sampled series at interior index i.
pub fn central_diff5(v: &[f64], i: usize, h: f64) -> f64 {
    (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h)
}

/// Least-squares slope and intercept of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Classical RK4 for a scalar ODE y' = g(t, y) with a fixed number of steps.
pub fn rk4_scalar(g: impl Fn(f64, f64) -> f64, t0: f64, y0: f64, t1: f64, steps: usize) -> f64 {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    let mut t = t0;
    for _ in 0..steps {
        let k1 = g(t, y);
        let k2 = g(t + 0.5 * h, y + 0.5 * h * k1);
        let k3 = g(t + 0.5 * h, y + 0.5 * h * k2);
        let k4 = g(t + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    y
}
