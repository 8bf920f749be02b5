//! Physical and construction parameters, validated from a flat key/value config.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles;

/// Flat numeric configuration as read from disk.
pub type RawConfig = BTreeMap<String, f64>;

pub const REQUIRED_KEYS: [&str; 10] = [
    "p", "n", "p1", "K0", "A", "T", "eps0", "alpha0", "delta0", "eta0",
];
pub const OPTIONAL_KEYS: [&str; 2] = ["delta1", "Cstar"];

/// Default bridge point of the final-profile surrogate.
pub const DEFAULT_CSTAR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub n: u32,
    pub p1: f64,
    pub k0: f64,
    pub a: f64,
    pub t: f64,
    pub eps0: f64,
    pub alpha0: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub eta0: f64,
    pub cstar: f64,
    pub kappa: f64,
    pub b: f64,
}

/// kappa = (p-1)^(-1/(p-1)), the constant self-similar ODE solution.
pub fn kappa(p: f64) -> f64 {
    (p - 1.0).powf(-1.0 / (p - 1.0))
}

/// b = (p-1)^2 / (4p).
pub fn b_const(p: f64) -> f64 {
    (p - 1.0) * (p - 1.0) / (4.0 * p)
}

/// Parse flat `key = number` text. Comments and blank lines are allowed.
pub fn parse_config(text: &str) -> Result<RawConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
    let mut out = RawConfig::new();
    for (k, v) in table {
        let x = match v {
            toml::Value::Float(f) => f,
            toml::Value::Integer(i) => i as f64,
            other => return Err(Error::Parse(format!("key `{k}` is not numeric: {other}"))),
        };
        out.insert(k, x);
    }
    Ok(out)
}

fn violation(msg: impl Into<String>) -> Error {
    Error::ConstraintViolation(msg.into())
}

/// Build a validated parameter set. Keys outside the parameter vocabulary are ignored here.
pub fn validate(raw: &RawConfig) -> Result<Params> {
    let get = |k: &str| raw.get(k).copied().ok_or_else(|| Error::MissingKey(k.to_string()));
    let p = get("p")?;
    let n_raw = get("n")?;
    let p1 = get("p1")?;
    let k0 = get("K0")?;
    let a = get("A")?;
    let t = get("T")?;
    let eps0 = get("eps0")?;
    let alpha0 = get("alpha0")?;
    let delta0 = get("delta0")?;
    let eta0 = get("eta0")?;
    let delta1 = raw.get("delta1").copied().unwrap_or(delta0);
    let cstar = raw.get("Cstar").copied().unwrap_or(DEFAULT_CSTAR);

    if !(p > 1.0) || !p.is_finite() {
        return Err(violation(format!("p = {p} must exceed 1")));
    }
    if !(n_raw >= 1.0) || n_raw.fract() != 0.0 || n_raw > 64.0 {
        return Err(violation(format!("n = {n_raw} must be a positive integer")));
    }
    let p1_max = ((p - 1.0) / 4.0).min(0.5);
    if !(p1 > 0.0 && p1 < p1_max) {
        return Err(violation(format!("p1 = {p1} must lie in (0, {p1_max})")));
    }
    if !(k0 >= 1.0) {
        return Err(violation(format!("K0 = {k0} must be >= 1")));
    }
    if !(a >= 1.0) {
        return Err(violation(format!("A = {a} must be >= 1")));
    }
    if !(t > 0.0 && t < (-1.0f64).exp()) {
        return Err(violation(format!("T = {t} must lie in (0, 1/e)")));
    }
    if !(cstar > 0.0 && cstar < 1.0) {
        return Err(violation(format!("Cstar = {cstar} must lie in (0, 1)")));
    }
    if !(eps0 > 0.0 && eps0 <= cstar / 2.0) {
        return Err(violation(format!("eps0 = {eps0} must lie in (0, Cstar/2]")));
    }
    if !(alpha0 > 0.0) {
        return Err(violation(format!("alpha0 = {alpha0} must be positive")));
    }
    let uhat0 = profiles::u_hat_shrinking(p, k0, 0.0);
    if !(delta0 > 0.0 && delta0 < uhat0 / 2.0) {
        return Err(violation(format!("delta0 = {delta0} must lie in (0, {})", uhat0 / 2.0)));
    }
    if !(delta1 > 0.0) {
        return Err(violation(format!("delta1 = {delta1} must be positive")));
    }
    if !(eta0 > 0.0 && eta0 < 0.5) {
        return Err(violation(format!("eta0 = {eta0} must lie in (0, 1/2)")));
    }
    Ok(Params {
        p,
        n: n_raw as u32,
        p1,
        k0,
        a,
        t,
        eps0,
        alpha0,
        delta0,
        delta1,
        eta0,
        cstar,
        kappa: kappa(p),
        b: b_const(p),
    })
}

impl Params {
    /// Initial similarity time s0 = -ln T.
    pub fn s0(&self) -> f64 {
        -self.t.ln()
    }

    pub fn to_raw(&self) -> RawConfig {
        let mut m = RawConfig::new();
        m.insert("p".into(), self.p);
        m.insert("n".into(), self.n as f64);
        m.insert("p1".into(), self.p1);
        m.insert("K0".into(), self.k0);
        m.insert("A".into(), self.a);
        m.insert("T".into(), self.t);
        m.insert("eps0".into(), self.eps0);
        m.insert("alpha0".into(), self.alpha0);
        m.insert("delta0".into(), self.delta0);
        m.insert("delta1".into(), self.delta1);
        m.insert("eta0".into(), self.eta0);
        m.insert("Cstar".into(), self.cstar);
        m
    }
}

/// Render a raw map as `key = value` lines that parse back to the same map.
pub fn serialize_raw(raw: &RawConfig) -> String {
    let mut s = String::new();
    for (k, v) in raw {
        s.push_str(&format!("{k} = {}\n", fmt_float(*v)));
    }
    s
}

/// Serialize a parameter set; `validate(parse_config(serialize(P))) == P`.
pub fn serialize(p: &Params) -> String {
    serialize_raw(&p.to_raw())
}

fn fmt_float(v: f64) -> String {
    // Debug formatting is round-trip exact and TOML-compatible.
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(p: f64, p1: f64) -> RawConfig {
        let mut m = RawConfig::new();
        for (k, v) in [
            ("p", p),
            ("n", 1.0),
            ("p1", p1),
            ("K0", 10.0),
            ("A", 20.0),
            ("T", 1e-3),
            ("eps0", 0.02),
            ("alpha0", 0.1),
            ("delta0", 0.1),
            ("eta0", 0.25),
        ] {
            m.insert(k.to_string(), v);
        }
        m
    }

    #[test]
    fn quadratic_case_constants() {
        let p = validate(&base(2.0, 0.2)).unwrap();
        assert!((p.kappa - 1.0).abs() < 1e-15);
        assert!((p.b - 0.125).abs() < 1e-15);
    }

    #[test]
    fn cubic_case_constants() {
        let p = validate(&base(3.0, 0.2)).unwrap();
        assert!((p.kappa - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((p.b - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn p1_above_cap_rejected() {
        assert!(matches!(validate(&base(2.0, 0.6)), Err(Error::ConstraintViolation(_))));
    }

    #[test]
    fn missing_key_reported() {
        let mut m = base(2.0, 0.2);
        m.remove("A");
        assert_eq!(validate(&m), Err(Error::MissingKey("A".into())));
    }

    #[test]
    fn delta0_bound_uses_shrinking_profile() {
        let mut m = base(2.0, 0.2);
        m.insert("delta0".into(), 0.3);
        assert!(validate(&m).is_err());
    }

    #[test]
    fn serialize_round_trip_and_idempotent() {
        let mut m = base(2.5, 0.2);
        m.insert("T".into(), 1e-7);
        let p = validate(&m).unwrap();
        let text = serialize(&p);
        let back = validate(&parse_config(&text).unwrap()).unwrap();
        assert_eq!(p, back);
        assert_eq!(text, serialize(&back));
    }

    #[test]
    fn parse_rejects_strings() {
        assert!(parse_config("p = \"two\"").is_err());
    }
}
