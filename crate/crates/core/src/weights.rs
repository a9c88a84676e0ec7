//! Quadrature-weight view of the schemes: `c^n = (1/n) sum_l alpha_l f^l`.
//!
//! Weights are impulse responses. Since `c^n` is linear in the samples, the
//! response to `f^l = 1` (all other samples zero) is exactly `alpha_l / n`.
//! The `l = 0` impulse includes the initial state `c^0 = e_1`.

use std::io::Write;

use rayon::prelude::*;

use crate::dd::Dd;
use crate::discretize::{Scheme, Stepper};
use crate::error::{LegsError, Result};
use crate::io::{indexed_columns, write_header, write_row};
use crate::system::LegSSystem;

/// `alpha_0 .. alpha_n` for one scheme and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub n: usize,
    pub scheme: Scheme,
    pub weights: Vec<Vec<f64>>,
}

impl WeightTable {
    /// `(1/n) sum_l alpha_l f^l`.
    pub fn apply(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.n + 1 {
            return Err(LegsError::DimensionMismatch { expected: self.n + 1, got: samples.len() });
        }
        // Weights grow to ~1e4 for forward Euler with n < N; accumulate in
        // double-double so the sum adds no cancellation of its own.
        let dim = self.weights[0].len();
        let mut c = vec![Dd::ZERO; dim];
        for (alpha, &f) in self.weights.iter().zip(samples) {
            c.iter_mut().zip(alpha).for_each(|(ci, &a)| *ci += Dd::from(a) * f);
        }
        let n = Dd::from(self.n);
        Ok(c.into_iter().map(|ci| (ci / n).to_f64()).collect())
    }

    /// Largest `|alpha_l|` component over all nodes.
    pub fn max_abs(&self) -> f64 {
        self.weights.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_{0<l<n, j} |(alpha_l)_j - F_j(l/n)|`.
    pub fn deviation(&self, system: &LegSSystem) -> f64 {
        (1..self.n)
            .map(|l| {
                let f = limit_weight_function(system, l as f64 / self.n as f64);
                self.weights[l].iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Columns `l, x, alpha_1..alpha_N, F_1..F_N, deviation`, where
    /// `deviation = max_j |alpha_j - F_j(x)|` per row.
    pub fn write_csv<W: Write>(&self, system: &LegSSystem, w: &mut W) -> Result<()> {
        let dim = system.dim();
        let mut header = vec!["l".to_string(), "x".to_string()];
        header.extend(indexed_columns("alpha", dim));
        header.extend(indexed_columns("F", dim));
        header.push("deviation".into());
        write_header(w, &header)?;
        for (l, alpha) in self.weights.iter().enumerate() {
            let x = l as f64 / self.n as f64;
            let f = limit_weight_function(system, x);
            let dev = alpha.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let mut row = vec![x];
            row.extend_from_slice(alpha);
            row.extend(f);
            row.push(dev);
            write_row(w, &[l.to_string()], &row)?;
        }
        Ok(())
    }
}

/// Weights by `n + 1` impulse runs, evaluated in parallel.
pub fn extract_weights(system: &LegSSystem, scheme: Scheme, n: usize) -> Result<WeightTable> {
    if n < 2 {
        return Err(LegsError::InvalidMesh(format!("weights need n >= 2, got {n}")));
    }
    let stepper = Stepper::new(system, scheme, n);
    let dim = system.dim();
    let weights = (0..=n)
        .into_par_iter()
        .map(|l| {
            let mut samples = vec![0.0; n + 1];
            samples[l] = 1.0;
            // States before step l - 1 never see the impulse and stay zero.
            let (first, start) = if l == 0 {
                let mut e1 = vec![0.0; dim];
                e1[0] = 1.0;
                (0, e1)
            } else {
                (l - 1, vec![0.0; dim])
            };
            let c = stepper.advance(first, &start, &samples, None);
            c.into_iter().map(|v| v * n as f64).collect()
        })
        .collect();
    Ok(WeightTable { n, scheme, weights })
}

/// `F(x) = V diag(1, 2x, ..., N x^{N-1}) V^-1 e_1`, the pointwise limit of
/// the weights. Componentwise this is `sqrt(2j - 1) P~_{j-1}(x)`.
pub fn limit_weight_function(system: &LegSSystem, x: f64) -> Vec<f64> {
    let xd = Dd::from(x);
    system.spectral_first_column(|j| Dd::from(j) * xd.powi(j as u32 - 1))
}

/// Interior sup deviation of the weights from `F`.
pub fn weight_deviation(system: &LegSSystem, scheme: Scheme, n: usize) -> Result<f64> {
    if n < 4 {
        return Err(LegsError::InvalidMesh(format!("weight deviation needs n >= 4, got {n}")));
    }
    Ok(extract_weights(system, scheme, n)?.deviation(system))
}
