//! Second-order forward-mode jets: value with first and second derivative in one variable.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn var(x: f64) -> Self {
        Jet { v: x, d1: 1.0, d2: 0.0 }
    }

    pub fn cst(c: f64) -> Self {
        Jet { v: c, d1: 0.0, d2: 0.0 }
    }

    /// Compose with a scalar function given its value and first two derivatives at v.
    fn chain(self, f: f64, fp: f64, fpp: f64) -> Self {
        Jet { v: f, d1: fp * self.d1, d2: fpp * self.d1 * self.d1 + fp * self.d2 }
    }

    pub fn powf(self, a: f64) -> Self {
        let f = self.v.powf(a);
        let fp = a * self.v.powf(a - 1.0);
        let fpp = a * (a - 1.0) * self.v.powf(a - 2.0);
        self.chain(f, fp, fpp)
    }

    pub fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn scale(self, c: f64) -> Self {
        Jet { v: c * self.v, d1: c * self.d1, d2: c * self.d2 }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { v: -self.v, d1: -self.d1, d2: -self.d2 }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.powf(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_x_squared_log_x() {
        let x = Jet::var(1.7);
        let f = x * x * x.ln();
        let l = 1.7f64.ln();
        assert!((f.d1 - (2.0 * 1.7 * l + 1.7)).abs() < 1e-14);
        assert!((f.d2 - (2.0 * l + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn quotient_rule() {
        let x = Jet::var(0.8);
        let f = Jet::cst(1.0) / (x * x + 1.0);
        let d = 1.0 + 0.64;
        assert!((f.d1 + 1.6 / (d * d)).abs() < 1e-14);
        let dd = (6.0 * 0.64 - 2.0) / (d * d * d);
        assert!((f.d2 - dd).abs() < 1e-13);
    }
}
