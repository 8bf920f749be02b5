//! The power nonlinearity u^p written in real components on the half-plane Re u > 0.

use crate::error::{Error, Result};

/// Moduli below this are treated as zero.
pub const TINY_MODULUS: f64 = 1e-300;

/// Components (F1, F2) of u^p without domain checks. Requires u1 > 0 or u = 0.
#[inline]
pub fn f_raw(u1: f64, u2: f64, p: f64) -> (f64, f64) {
    let r = u1.hypot(u2);
    if r < TINY_MODULUS {
        return (0.0, 0.0);
    }
    // Same angle as asin(u2/|u|) on Re u > 0, but well conditioned near the imaginary axis.
    let theta = u2.atan2(u1);
    let rp = r.powf(p);
    let (s, c) = (p * theta).sin_cos();
    (rp * c, rp * s)
}

/// F(u) = (|u|^p cos(p Arg u), |u|^p sin(p Arg u)) for u1 > 0, F(0) = 0.
pub fn f(u1: f64, u2: f64, p: f64) -> Result<(f64, f64)> {
    if u1.hypot(u2) < TINY_MODULUS {
        return Ok((0.0, 0.0));
    }
    if !(u1 > 0.0) {
        return Err(Error::Domain(format!("Re u = {u1} is not positive")));
    }
    Ok(f_raw(u1, u2, p))
}

/// Jacobian [[dF1/du1, dF1/du2], [dF2/du1, dF2/du2]].
///
/// From the holomorphic derivative p u^(p-1) = p|u|^(p-1) e^{i(p-1)Arg u}.
pub fn df(u1: f64, u2: f64, p: f64) -> Result<[[f64; 2]; 2]> {
    let r = u1.hypot(u2);
    if !(u1 > 0.0) || r < TINY_MODULUS {
        return Err(Error::Domain(format!("Jacobian needs Re u > 0, got {u1}")));
    }
    let theta = u2.atan2(u1);
    let g = p * r.powf(p - 1.0);
    let (s, c) = ((p - 1.0) * theta).sin_cos();
    let (gr, gi) = (g * c, g * s);
    Ok([[gr, -gi], [gi, gr]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Binomial expansion of (u1 + i u2)^k.
    fn binomial_power(u1: f64, u2: f64, k: u32) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        let mut c = 1.0f64;
        for j in 0..=k {
            let term = c * u1.powi((k - j) as i32) * u2.powi(j as i32);
            match j % 4 {
                0 => re += term,
                1 => im += term,
                2 => re -= term,
                _ => im -= term,
            }
            c = c * (k - j) as f64 / (j + 1) as f64;
        }
        (re, im)
    }

    #[test]
    fn square_of_one_plus_i() {
        let (a, b) = f(1.0, 1.0, 2.0).unwrap();
        assert!(a.abs() < 1e-14);
        assert!((b - 2.0).abs() < 1e-14);
    }

    #[test]
    fn real_input_stays_real() {
        let (a, b) = f(2.0, 0.0, 3.0).unwrap();
        assert_eq!((a, b), (8.0, 0.0));
    }

    #[test]
    fn origin_maps_to_origin() {
        assert_eq!(f(0.0, 0.0, 2.5).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn left_half_plane_rejected() {
        assert!(matches!(f(-1.0, 0.5, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (u1, u2, p) = (1.3, -0.4, 2.7);
        let j = df(u1, u2, p).unwrap();
        let h = 1e-6;
        let fp = f(u1 + h, u2, p).unwrap();
        let fm = f(u1 - h, u2, p).unwrap();
        let gp = f(u1, u2 + h, p).unwrap();
        let gm = f(u1, u2 - h, p).unwrap();
        let fd = [
            [(fp.0 - fm.0) / (2.0 * h), (gp.0 - gm.0) / (2.0 * h)],
            [(fp.1 - fm.1) / (2.0 * h), (gp.1 - gm.1) / (2.0 * h)],
        ];
        for r in 0..2 {
            for c in 0..2 {
                assert!((j[r][c] - fd[r][c]).abs() < 1e-8, "{r}{c}: {} vs {}", j[r][c], fd[r][c]);
            }
        }
    }

    proptest! {
        #[test]
        fn integer_powers_match_binomial(u1 in 1e-3f64..10.0, u2 in -10.0f64..10.0, k in 2u32..6) {
            let (a, b) = f(u1, u2, k as f64).unwrap();
            let (ea, eb) = binomial_power(u1, u2, k);
            let scale = u1.hypot(u2).powi(k as i32);
            prop_assert!((a - ea).abs() <= 1e-12 * scale);
            prop_assert!((b - eb).abs() <= 1e-12 * scale);
        }

        #[test]
        fn modulus_is_power_of_modulus(u1 in 1e-3f64..10.0, u2 in -10.0f64..10.0, p in 1.01f64..6.0) {
            let (a, b) = f(u1, u2, p).unwrap();
            let expect = u1.hypot(u2).powf(p);
            prop_assert!((a.hypot(b) - expect).abs() <= 1e-12 * expect);
        }

        #[test]
        fn conjugation_symmetry(u1 in 1e-3f64..10.0, u2 in -10.0f64..10.0, p in 1.01f64..6.0) {
            let (a, b) = f(u1, u2, p).unwrap();
            let (c, d) = f(u1, -u2, p).unwrap();
            prop_assert!((a - c).abs() <= 1e-13 * a.abs().max(1.0));
            prop_assert!((b + d).abs() <= 1e-13 * b.abs().max(1.0));
        }
    }
}
