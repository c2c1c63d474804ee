//! Double-double arithmetic: each value is an unevaluated sum `hi + lo` of two
//! f64 with |lo| <= ulp(hi)/2, giving roughly 31 significant decimal digits.
//!
//! The error-free transformations (two_sum, two_prod) follow Dekker and Knuth;
//! two_prod relies on `f64::mul_add` performing a single rounding. Coverage is
//! deliberately narrow: the operations and transcendentals below are exactly
//! what ill-conditioned Bethe-root refinement and high-precision test oracles
//! need, nothing more. The exponent RANGE is still that of f64; callers that
//! multiply long product chains must rescale themselves (see `Cd::scale_pow2`).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Sum of two doubles with |lo| at most half an ulp of hi.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    /// pi to double-double precision.
    pub const PI: Dd = Dd {
        hi: 3.141592653589793,
        lo: 1.2246467991473532e-16,
    };
    /// pi/2 to double-double precision.
    pub const FRAC_PI_2: Dd = Dd {
        hi: 1.5707963267948966,
        lo: 6.123233995736766e-17,
    };
    /// ln 2 to double-double precision.
    pub const LN_2: Dd = Dd {
        hi: 0.6931471805599453,
        lo: 2.3190468138462996e-17,
    };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Renormalizing constructor for a raw (hi, lo) pair.
    #[inline]
    pub fn new(hi: f64, lo: f64) -> Dd {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    /// Exact multiplication by a power of two.
    #[inline]
    pub fn scale_pow2(self, k: i32) -> Dd {
        let f = pow2(k);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        assert!(self.hi > 0.0, "sqrt of negative double-double");
        // one Karp-Markstein correction on the f64 estimate is enough:
        // x ~ 1/sqrt(a) accurate to 1e-16, error term is quadratic.
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let ax_dd = Dd::from_f64(ax);
        let err = self - ax_dd * ax_dd;
        ax_dd + Dd::from_f64(err.hi * (x * 0.5))
    }

    pub fn exp(self) -> Dd {
        // e^x = 2^m * e^r with r = x - m ln2, |r| <= ln2/2, then Taylor.
        if self.hi.abs() > 700.0 {
            // keep well inside f64 range; the callers never need more
            return Dd::from_f64(self.hi.exp());
        }
        let m = (self.hi / Dd::LN_2.hi).round();
        let r = self - Dd::LN_2 * Dd::from_f64(m);
        let mut sum = Dd::ONE + r;
        let mut term = r;
        let mut n = 2.0f64;
        loop {
            term = term * r / Dd::from_f64(n);
            sum = sum + term;
            if term.hi.abs() < 1e-35 || n > 40.0 {
                break;
            }
            n += 1.0;
        }
        sum.scale_pow2(m as i32)
    }

    /// Simultaneous sin and cos via quadrant reduction mod pi/2.
    ///
    /// Arguments are expected moderate (|x| <~ 1e6); the two-word reduction
    /// keeps absolute error near |x| * 1e-32 which is ample there.
    pub fn sin_cos(self) -> (Dd, Dd) {
        let j = (self.hi / Dd::FRAC_PI_2.hi).round();
        let r = self - Dd::FRAC_PI_2 * Dd::from_f64(j);
        let (sr, cr) = taylor_sin_cos(r);
        match (j as i64).rem_euclid(4) {
            0 => (sr, cr),
            1 => (cr, -sr),
            2 => (-sr, -cr),
            _ => (-cr, sr),
        }
    }

    pub fn sin(self) -> Dd {
        self.sin_cos().0
    }

    pub fn cos(self) -> Dd {
        self.sin_cos().1
    }

    pub fn sinh(self) -> Dd {
        if self.hi.abs() < 0.5 {
            // Taylor: avoids the e^x - e^-x cancellation near zero
            let x2 = self * self;
            let mut term = self;
            let mut sum = self;
            let mut n = 1.0f64;
            loop {
                term = term * x2 / Dd::from_f64((2.0 * n) * (2.0 * n + 1.0));
                sum = sum + term;
                if term.hi.abs() < 1e-35 || n > 25.0 {
                    break;
                }
                n += 1.0;
            }
            sum
        } else {
            let e = self.exp();
            (e - Dd::ONE / e).scale_pow2(-1)
        }
    }

    pub fn cosh(self) -> Dd {
        let e = self.exp();
        (e + Dd::ONE / e).scale_pow2(-1)
    }
}

fn pow2(k: i32) -> f64 {
    // exact for the exponent range we use (|k| < 1000 handled in two steps)
    if k >= -1022 && k <= 1023 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else if k < 0 {
        pow2(-511) * pow2(k + 511)
    } else {
        pow2(511) * pow2(k - 511)
    }
}

fn taylor_sin_cos(r: Dd) -> (Dd, Dd) {
    // |r| <= pi/4 after reduction
    let r2 = r * r;
    let mut s = r;
    let mut term = r;
    let mut n = 1.0f64;
    loop {
        term = -term * r2 / Dd::from_f64((2.0 * n) * (2.0 * n + 1.0));
        s = s + term;
        if term.hi.abs() < 1e-35 || n > 25.0 {
            break;
        }
        n += 1.0;
    }
    let mut c = Dd::ONE;
    term = Dd::ONE;
    n = 1.0;
    loop {
        term = -term * r2 / Dd::from_f64((2.0 * n - 1.0) * (2.0 * n));
        c = c + term;
        if term.hi.abs() < 1e-35 || n > 25.0 {
            break;
        }
        n += 1.0;
    }
    (s, c)
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let e = e + self.lo + rhs.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + self.hi * rhs.lo + self.lo * rhs.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, rhs: Dd) -> Dd {
        // long division with one refinement step
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r2 = r - rhs * Dd::from_f64(q2);
        let q3 = r2.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

/// Complex number with double-double components.
#[derive(Clone, Copy, Debug)]
pub struct Cd {
    pub re: Dd,
    pub im: Dd,
}

impl Cd {
    pub const ZERO: Cd = Cd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: Cd = Cd {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    #[inline]
    pub fn new(re: Dd, im: Dd) -> Cd {
        Cd { re, im }
    }

    #[inline]
    pub fn from_f64(re: f64, im: f64) -> Cd {
        Cd {
            re: Dd::from_f64(re),
            im: Dd::from_f64(im),
        }
    }

    #[inline]
    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> Dd {
        self.norm_sqr().sqrt()
    }

    #[inline]
    pub fn conj(self) -> Cd {
        Cd {
            re: self.re,
            im: -self.im,
        }
    }

    #[inline]
    pub fn scale_pow2(self, k: i32) -> Cd {
        Cd {
            re: self.re.scale_pow2(k),
            im: self.im.scale_pow2(k),
        }
    }

    /// sin(x + iy) = sin x cosh y + i cos x sinh y
    pub fn sin(self) -> Cd {
        let (sx, cx) = self.re.sin_cos();
        Cd {
            re: sx * self.im.cosh(),
            im: cx * self.im.sinh(),
        }
    }

    /// e^(x + iy) = e^x (cos y + i sin y)
    pub fn exp(self) -> Cd {
        let ex = self.re.exp();
        let (sy, cy) = self.im.sin_cos();
        Cd {
            re: ex * cy,
            im: ex * sy,
        }
    }
}

impl Neg for Cd {
    type Output = Cd;
    #[inline]
    fn neg(self) -> Cd {
        Cd {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Add for Cd {
    type Output = Cd;
    #[inline]
    fn add(self, rhs: Cd) -> Cd {
        Cd {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for Cd {
    type Output = Cd;
    #[inline]
    fn sub(self, rhs: Cd) -> Cd {
        Cd {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for Cd {
    type Output = Cd;
    #[inline]
    fn mul(self, rhs: Cd) -> Cd {
        Cd {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Div for Cd {
    type Output = Cd;
    fn div(self, rhs: Cd) -> Cd {
        let d = rhs.norm_sqr();
        let n = self * rhs.conj();
        Cd {
            re: n.re / d,
            im: n.im / d,
        }
    }
}
