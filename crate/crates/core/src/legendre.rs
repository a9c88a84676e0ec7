//! Shifted Legendre polynomials `P~_j(x) = P_j(2x - 1)` on `[0, 1]`.
//!
//! Everything here runs the Bonnet three-term recurrence in `u = 2x - 1`.
//! The explicit binomial-sum form is never used: its alternating terms grow
//! like `4^j` and it has no correct digits left past degree twenty or so.

use crate::error::{LegsError, Result};

/// `P~_j(x)`, normalized so that `P~_j(1) = 1`.
///
/// Arguments outside `[0, 1]` are evaluated by the same recurrence; use
/// [`LegendreBasis::eval`] when extrapolation should be flagged.
pub fn shifted_legendre(j: usize, x: f64) -> f64 {
    let u = 2.0 * x - 1.0;
    let (mut prev, mut cur) = (1.0, u);
    if j == 0 {
        return prev;
    }
    for k in 1..j {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * u * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `(P~_j(x), d/dx P~_j(x))`.
///
/// The derivative comes from `P'_{k+1} = P'_{k-1} + (2k + 1) P_k` carried
/// alongside the value recurrence, then the chain-rule factor 2.
pub fn shifted_legendre_with_derivative(j: usize, x: f64) -> (f64, f64) {
    let u = 2.0 * x - 1.0;
    if j == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p_cur) = (1.0, u);
    let (mut d_prev, mut d_cur) = (0.0, 1.0);
    for k in 1..j {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * u * p_cur - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p_cur;
        p_prev = p_cur;
        p_cur = p_next;
        d_prev = d_cur;
        d_cur = d_next;
    }
    (p_cur, 2.0 * d_cur)
}

/// Fills `out[k] = sqrt(2k + 1) P~_k(x)` for `k < out.len()`.
///
/// These are the orthonormal basis functions under the measure `dx` on
/// `[0, 1]`; component `j` (1-based) of a LegS state pairs with `out[j - 1]`.
pub fn scaled_legendre_into(x: f64, out: &mut [f64]) {
    let u = 2.0 * x - 1.0;
    let (mut prev, mut cur) = (1.0, u);
    for (k, slot) in out.iter_mut().enumerate() {
        let value = match k {
            0 => 1.0,
            1 => u,
            _ => {
                let kf = (k - 1) as f64;
                let next = ((2.0 * kf + 1.0) * u * cur - kf * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
                next
            }
        };
        *slot = ((2 * k + 1) as f64).sqrt() * value;
    }
}

/// `x P~_j'(x) - j P~_j(x) - sum_{k<j} (2k + 1) P~_k(x)`.
///
/// Identically zero; exposed so tests can probe the derivative recurrence.
pub fn legendre_recurrence_residual(j: usize, x: f64) -> f64 {
    let (p, dp) = shifted_legendre_with_derivative(j, x);
    let tail: f64 = (0..j)
        .map(|k| (2 * k + 1) as f64 * shifted_legendre(k, x))
        .sum();
    x * dp - j as f64 * p - tail
}

/// A value of `P~_j` together with whether `x` fell outside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreValue {
    pub value: f64,
    pub extrapolated: bool,
}

/// Shifted Legendre family up to a fixed degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegendreBasis {
    max_degree: usize,
}

impl LegendreBasis {
    pub fn new(max_degree: usize) -> Self {
        LegendreBasis { max_degree }
    }

    /// Basis large enough for a state of dimension `dim` (degrees `0..dim`).
    pub fn for_dimension(dim: usize) -> Self {
        LegendreBasis::new(dim.saturating_sub(1))
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn eval(&self, j: usize, x: f64) -> Result<LegendreValue> {
        if j > self.max_degree {
            return Err(LegsError::DegreeOutOfRange { degree: j, max: self.max_degree });
        }
        Ok(LegendreValue {
            value: shifted_legendre(j, x),
            extrapolated: !(0.0..=1.0).contains(&x),
        })
    }

    /// `sqrt(2k + 1) P~_k(x)` for every degree in the basis.
    pub fn scaled_values(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.max_degree + 1];
        scaled_legendre_into(x, &mut out);
        out
    }
}
