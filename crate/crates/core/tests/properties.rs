//! Cross-module invariants checked on random inputs.

use proptest::prelude::*;

use blowuplab::evolution::{integrate_fixed, picard, picard_budget, Stepper};
use blowuplab::field::{ComplexField, Grid1D};
use blowuplab::initial_data::{initial_data, ShootParams};
use blowuplab::params::{parse_config, serialize, validate};
use blowuplab::reports::{parse_run_config, RunConfig};
use blowuplab::shooting::Shooter;

fn small_config() -> RunConfig {
    RunConfig::default_config().with_overrides(Some(513), Some(16.4), None).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn params_serialize_round_trip(p in 1.2f64..5.0, k0 in 1.0f64..30.0, t in 1e-9f64..0.3, frac in 0.05f64..0.95) {
        let mut c = RunConfig::default_config();
        c.params.p = p;
        c.params.k0 = k0;
        c.params.t = t;
        c.params.p1 = frac * ((p - 1.0) / 4.0).min(0.5);
        let raw = c.params.to_raw();
        if let Ok(v) = validate(&raw) {
            let back = validate(&parse_config(&serialize(&v)).unwrap()).unwrap();
            prop_assert_eq!(v, back);
        }
    }

    #[test]
    fn run_config_round_trip(grid in 2usize..200, c_dt in 1e-3f64..0.05, d10 in -2.0f64..2.0) {
        let mut c = RunConfig::default_config();
        c.controls.grid_n = 2 * grid + 1;
        c.controls.c_dt = c_dt;
        c.d.d10 = d10;
        prop_assert_eq!(parse_run_config(&c.resolved()).unwrap(), c);
    }

    #[test]
    fn stepper_keeps_even_data_even(a in 0.1f64..1.0, w in 0.5f64..4.0, im in -0.5f64..0.5) {
        let g = Grid1D::symmetric(3.0, 121).unwrap();
        let u0 = ComplexField::from_fn(g, 0.0, |x| (1.0 + a * (-w * x * x).exp(), im * (-x * x).exp()));
        let u = integrate_fixed(&u0, &Stepper::new(2.0), 0.05, 50).unwrap();
        for i in 0..g.n {
            let j = g.n - 1 - i;
            // The tridiagonal sweep runs in one direction, so symmetry holds to rounding.
            prop_assert!((u.u1[i] - u.u1[j]).abs() <= 1e-13 * u.u1[i].abs());
            prop_assert!((u.u2[i] - u.u2[j]).abs() <= 1e-13 * (1.0 + u.u2[i].abs()));
        }
    }

    #[test]
    fn picard_keeps_real_part_above_half_lambda(a in 0.0f64..2.0, b in -1.0f64..1.0, p in 1.5f64..4.0) {
        let g = Grid1D::symmetric(2.0, 41).unwrap();
        let u0 = ComplexField::from_fn(g, 0.0, |x| (1.0 + a * (-x * x).exp(), b * (-x * x).exp()));
        let t1 = picard_budget(u0.sup_norm(), 1.0, p);
        let r = picard(&u0, p, 1.0, t1, 8).unwrap();
        prop_assert!(r.min_re >= 0.5);
    }

    #[test]
    fn initial_datum_positive_and_even(d10 in -2.0f64..2.0, d20 in -2.0f64..2.0, d22 in -2.0f64..2.0) {
        let c = small_config();
        let u = initial_data(&c.params, &ShootParams::even(d10, d20, d22), c.grid().unwrap()).unwrap();
        prop_assert!(u.min_re() >= 1.0);
        let n = u.grid.n;
        for i in 0..n {
            prop_assert_eq!(u.u1[i], u.u1[n - 1 - i]);
        }
    }
}

#[test]
fn classification_is_deterministic() {
    let c = small_config();
    let sh = Shooter::new(c.params, c.controls);
    let d = ShootParams::even(-0.3, 0.4, 0.0);
    let a = sh.classify(&d).unwrap();
    let b = sh.classify(&d).unwrap();
    assert_eq!(a, b);
}
