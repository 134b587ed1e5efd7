//! Double-double arithmetic (about 106 bits of mantissa), used as an
//! independent reference for the reward and reputation formulas.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    Dd { hi: p, lo: a.mul_add(b, -p) }
}

const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

impl Dd {
    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn scale(self, k: f64) -> Dd {
        Dd { hi: self.hi * k, lo: self.lo * k }
    }

    pub fn exp(self) -> Dd {
        if self.hi == 0.0 {
            return Dd::new(1.0);
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::new(k)).scale(1.0 / 1024.0);
        let mut term = Dd::new(1.0);
        let mut sum = Dd::new(1.0);
        for n in 1..=20 {
            term = term * r / Dd::new(n as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.scale(2f64.powi(k as i32))
    }

    /// Newton on `exp(y) = x`.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0);
        if self.hi == 1.0 && self.lo == 0.0 {
            return Dd::new(0.0);
        }
        let mut y = Dd::new(self.hi.ln());
        for _ in 0..3 {
            y = y + self * (-y).exp() - Dd::new(1.0);
        }
        y
    }

    /// Newton on `y³ = x` for positive `x`.
    pub fn cbrt(self) -> Dd {
        assert!(self.hi > 0.0);
        let mut y = Dd::new(self.hi.cbrt());
        for _ in 0..3 {
            y = y - (y * y * y - self) / (Dd::new(3.0) * y * y);
        }
        y
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let s = quick_two_sum(s.hi, s.lo + t.hi);
        quick_two_sum(s.hi, s.lo + t.lo)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = two_prod(self.hi, o.hi);
        quick_two_sum(p.hi, p.lo + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2) + Dd::new(q3)
    }
}

/// Known constants to 32 digits. Range reduction in `exp` costs about ten
/// bits, so agreement is checked to 1e-27.
pub fn self_check() -> Result<(), String> {
    let e = Dd::new(1.0).exp();
    // e to 32 digits: 2.7182818284590452353602874713527
    let want = Dd { hi: std::f64::consts::E, lo: 1.445_646_891_729_250_2e-16 };
    if (e - want).to_f64().abs() > 1e-27 {
        return Err(format!("exp(1) off by {:e}", (e - want).to_f64()));
    }
    let l = Dd::new(10.0).ln();
    let want = Dd { hi: std::f64::consts::LN_10, lo: -2.170_756_223_382_249e-16 };
    if (l - want).to_f64().abs() > 1e-27 {
        return Err(format!("ln(10) off by {:e}", (l - want).to_f64()));
    }
    let c = Dd::new(2.0).cbrt();
    if (c * c * c - Dd::new(2.0)).to_f64().abs() > 1e-27 {
        return Err("cbrt(2) does not cube back".into());
    }
    Ok(())
}
