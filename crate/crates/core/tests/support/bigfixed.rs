//! Fixed-point big-integer arithmetic with 512 fractional bits, used as a
//! slow high-precision oracle for Bessel functions.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub const BITS: u64 = 512;

#[derive(Clone, Debug)]
pub struct Fx(pub BigInt);

impl Fx {
    pub fn one() -> Fx {
        Fx(BigInt::one() << BITS)
    }

    pub fn from_int(n: i64) -> Fx {
        Fx(BigInt::from(n) << BITS)
    }

    pub fn from_f64(z: f64) -> Fx {
        assert!(z.is_finite());
        if z == 0.0 {
            return Fx(BigInt::zero());
        }
        let bits = z.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let mut v = BigInt::from(mant);
        let shift = BITS as i64 + e;
        assert!(shift >= 0);
        v <<= shift as u64;
        if z < 0.0 {
            v = -v;
        }
        Fx(v)
    }

    pub fn to_f64(&self) -> f64 {
        // keep 80 significant bits before converting
        let a = self.0.abs();
        let nb = a.bits();
        let (m, e) = if nb > 80 { (&a >> (nb - 80), nb as i64 - 80) } else { (a.clone(), 0) };
        let v = m.to_f64().unwrap() * 2f64.powi((e - BITS as i64) as i32);
        if self.0.is_negative() {
            -v
        } else {
            v
        }
    }

    pub fn add(&self, o: &Fx) -> Fx {
        Fx(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Fx) -> Fx {
        Fx(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Fx) -> Fx {
        Fx((&self.0 * &o.0) >> BITS)
    }

    pub fn div(&self, o: &Fx) -> Fx {
        Fx((&self.0 << BITS) / &o.0)
    }

    pub fn div_int(&self, n: i64) -> Fx {
        Fx(&self.0 / BigInt::from(n))
    }

    pub fn mul_int(&self, n: i64) -> Fx {
        Fx(&self.0 * BigInt::from(n))
    }

    pub fn is_tiny(&self) -> bool {
        self.0.abs().bits() < 8
    }
}

/// `atanh(1/x)` for integer `x > 1`, and `atan(1/x)` when `alternate`.
fn arc_recip(x: i64, alternate: bool) -> Fx {
    let x2 = BigInt::from(x * x);
    let mut power = Fx::one().div_int(x);
    let mut sum = power.clone();
    let mut k = 1i64;
    loop {
        power = Fx(&power.0 / &x2);
        if power.is_tiny() {
            break;
        }
        let term = power.div_int(2 * k + 1);
        sum = if alternate && k % 2 == 1 { sum.sub(&term) } else { sum.add(&term) };
        k += 1;
    }
    sum
}

pub fn pi() -> Fx {
    arc_recip(5, true).mul_int(16).sub(&arc_recip(239, true).mul_int(4))
}

fn ln2() -> Fx {
    arc_recip(3, false).mul_int(2)
}

/// Natural log of a positive fixed-point value.
pub fn ln(x: &Fx) -> Fx {
    assert!(x.0.is_positive());
    // x = m 2^e with m in [1, 2)
    let e = x.0.bits() as i64 - 1 - BITS as i64;
    let m = if e >= 0 { Fx(&x.0 >> e as u64) } else { Fx(&x.0 << (-e) as u64) };
    let y = m.sub(&Fx::one()).div(&m.add(&Fx::one()));
    let y2 = y.mul(&y);
    let mut power = y.clone();
    let mut sum = y;
    let mut k = 1i64;
    loop {
        power = power.mul(&y2);
        if power.is_tiny() {
            break;
        }
        sum = sum.add(&power.div_int(2 * k + 1));
        k += 1;
    }
    sum.mul_int(2).add(&ln2().mul_int(e))
}

pub fn euler_gamma() -> Fx {
    let digits = "57721566490153286060651209008240243104215933593992359880576723488486772677766467";
    let n: BigInt = digits.parse().unwrap();
    let scale = BigInt::from(10u32).pow(digits.len() as u32);
    Fx((n << BITS) / scale)
}

/// `(J0, J1, Y0, Y1)` at `z > 0` from the ascending series.
pub fn bessel01(z: f64) -> (f64, f64, f64, f64) {
    let pi = pi();
    let zf = Fx::from_f64(z);
    let half = zf.div_int(2);
    let x = half.mul(&half);
    let mut t = Fx::one();
    let mut sj0 = t.clone();
    let mut sj1 = t.clone();
    let mut hk = Fx::from_int(0);
    let mut sy0 = Fx::from_int(0);
    let mut sy1 = Fx::one();
    let mut k = 1i64;
    loop {
        t = Fx(-(t.mul(&x).0)).div_int(k * k);
        hk = hk.add(&Fx::one().div_int(k));
        let hk1 = hk.add(&Fx::one().div_int(k + 1));
        let u = t.div_int(k + 1);
        sj0 = sj0.add(&t);
        sj1 = sj1.add(&u);
        sy0 = sy0.add(&t.mul(&hk));
        sy1 = sy1.add(&u.mul(&hk.add(&hk1)));
        if (k * k) as f64 > x.to_f64() && t.is_tiny() {
            break;
        }
        k += 1;
    }
    let j0 = sj0.clone();
    let j1 = half.mul(&sj1);
    let lg = ln(&half).add(&euler_gamma());
    let two_over_pi = Fx::from_int(2).div(&pi);
    let y0 = two_over_pi.mul(&lg.mul(&j0).sub(&sy0));
    let y1 = two_over_pi
        .div(&zf)
        .mul_int(-1)
        .add(&two_over_pi.mul(&lg).mul(&j1))
        .sub(&half.mul(&sy1).div(&pi));
    (j0.to_f64(), j1.to_f64(), y0.to_f64(), y1.to_f64())
}
