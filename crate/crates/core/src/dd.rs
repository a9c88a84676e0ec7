//! Double-double scalar arithmetic.
//!
//! The LegS eigenvector matrix is badly conditioned: the products
//! `|V| |V^-1|` reach ~3e10 at N = 16, so any product formed through the
//! eigenbasis in plain `f64` loses about ten digits. The eigenbasis is
//! therefore carried as unevaluated sums `hi + lo` (about 32 significant
//! digits) and every spectral product is formed in this precision before
//! being rounded once to `f64`.
//!
//! The algorithms are the classical error-free transformations (Knuth's
//! two-sum, fused-multiply-add two-product) with the accurate division and
//! square root of the QD library.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// Nearest `f64`.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let a = self.hi.sqrt();
        let (p, e) = two_prod(a, a);
        let r = (self - Dd { hi: p, lo: e }).hi / (2.0 * a);
        Dd::renorm(a, r)
    }

    pub fn powi(self, mut exp: u32) -> Self {
        let mut base = self;
        let mut acc = Dd::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc *= base;
            }
            base *= base;
            exp >>= 1;
        }
        acc
    }

    /// Exact quotient of two small integers, `num / den`.
    pub fn ratio(num: usize, den: usize) -> Self {
        Dd::from(num) / Dd::from(den)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl From<usize> for Dd {
    fn from(x: usize) -> Self {
        Dd::from_f64(x as f64)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
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
        Dd::renorm(p, e + (self.hi * rhs.lo + self.lo * rhs.hi))
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, rhs: f64) -> Dd {
        let (p, e) = two_prod(self.hi, rhs);
        Dd::renorm(p, e + self.lo * rhs)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        Dd::renorm(q1, q2) + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dd {
    #[inline]
    fn sub_assign(&mut self, rhs: Dd) {
        *self = *self - rhs;
    }
}

impl MulAssign for Dd {
    #[inline]
    fn mul_assign(&mut self, rhs: Dd) {
        *self = *self * rhs;
    }
}

/// Square matrix of [`Dd`] entries, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DdMatrix {
    dim: usize,
    data: Vec<Dd>,
}

impl DdMatrix {
    pub fn zeros(dim: usize) -> Self {
        DdMatrix { dim, data: vec![Dd::ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = DdMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Dd::ONE;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |i, j| self[(i, j)].to_f64())
    }

    pub fn from_f64(m: &nalgebra::DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let mut out = DdMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] = Dd::from_f64(m[(i, j)]);
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for DdMatrix {
    type Output = Dd;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Dd {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DdMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Dd {
        &mut self.data[i * self.dim + j]
    }
}
