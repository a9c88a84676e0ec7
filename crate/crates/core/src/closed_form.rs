//! Product-form expressions for `c^n`, independent of the step recurrence.
//!
//! Every factor in the unrolled recurrences is a rational function of `A`,
//! so in eigen-coordinates each product collapses to a scalar product per
//! eigenvalue `j`. Writing the contribution of sample `f^l` as
//! `V diag(p_l(j) / j + q_l(j)) d`, where `p_l` multiplies the initial state
//! `f^0 e_1` (note `V^-1 e_1 = D^-1 d`) and `q_l` multiplies `B f^l`, the
//! coefficient vectors come out in double-double without ever forming a
//! matrix product.
//!
//! Two details differ from a naive reading of the product formulas. The
//! forward Euler products `prod_{k=1}^{n-1} (I - A/k)` contain the singular
//! factor `I - A/j` for each `j <= N`, so partial products are used rather
//! than inverses; the same factor also annihilates the `f^0` contribution.
//! The approximate bilinear sum includes the `f^1` term coming from step 0.

use crate::dd::Dd;
use crate::discretize::{Mesh, Scheme};
use crate::error::{LegsError, Result};
use crate::signal::Signal;
use crate::system::LegSSystem;

fn dd(x: i64) -> Dd {
    Dd::from(x as f64)
}

/// Scalar coefficient pairs `(p_l(j), q_l(j))` for one eigenvalue `j`.
fn scalar_coefficients(scheme: Scheme, n: usize, j: usize) -> Vec<(Dd, Dd)> {
    let jj = j as i64;
    let ni = n as i64;
    let mut coef = vec![(Dd::ZERO, Dd::ZERO); n + 1];
    match scheme {
        Scheme::ForwardEuler => {
            // S_l = prod_{k=l+1}^{n-1} (1 - j/k); c^n = S_0 f^0 + sum_{l=1}^{n-1} S_l B f^l / l.
            let mut s = Dd::ONE;
            for l in (1..n).rev() {
                coef[l].1 = s / dd(l as i64);
                s *= dd(l as i64 - jj) / dd(l as i64);
            }
            coef[0].0 = s;
        }
        Scheme::BackwardEuler => {
            // M_k = (1 + j/k)^-1; c^n = prod_{1..n} M_k f^0 + sum_{l=1}^n prod_{k=l}^n M_k B f^l / l.
            let mut m = Dd::ONE;
            for l in (1..=n).rev() {
                m *= dd(l as i64) / dd(l as i64 + jj);
                coef[l].1 = m / dd(l as i64);
            }
            coef[0].0 = m;
        }
        Scheme::Bilinear => {
            // L_k = (1 + j/(2k))^-1, R_k = 1 - j/(2k), G_k = L_{k+1} R_k,
            // H_k = prod_{i=k+1}^{n-1} G_i.
            let l_of = |k: i64| dd(2 * k) / dd(2 * k + jj);
            let mut h = Dd::ONE;
            for k in (1..ni).rev() {
                let w = h * l_of(k + 1);
                let ku = k as usize;
                coef[ku].1 += w / dd(2 * k);
                coef[ku + 1].1 += w / dd(2 * (k + 1));
                h *= l_of(k + 1) * (dd(2 * k - jj) / dd(2 * k));
            }
            let w = h * l_of(1);
            coef[0].0 = w;
            if n >= 1 {
                coef[1].1 += w / dd(2);
            }
        }
        Scheme::ApproxBilinear => {
            // theta_k = 1/(2(k+1)); G_k = (1 - theta_k j)/(1 + theta_k j).
            let mut h = Dd::ONE;
            for k in (0..ni).rev() {
                let inv = dd(2 * (k + 1)) / dd(2 * (k + 1) + jj);
                coef[k as usize + 1].1 = h * inv / dd(k + 1);
                h *= dd(2 * (k + 1) - jj) * inv / dd(2 * (k + 1));
            }
            coef[0].0 = h;
        }
        Scheme::ZeroOrderHold => {
            // f^l enters through V diag(((l+1)/n)^j - (l/n)^j) V^-1 e_1.
            for (l, slot) in coef.iter_mut().enumerate().take(n) {
                slot.0 = Dd::ratio(l + 1, n).powi(j as u32) - Dd::ratio(l, n).powi(j as u32);
            }
        }
    }
    coef
}

/// Vectors `w_l` with `c^n = sum_l w_l f^l` (so `alpha_l = n w_l`).
pub fn closed_form_coefficients(system: &LegSSystem, scheme: Scheme, n: usize) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(LegsError::InvalidMesh(format!("closed forms need n >= 2, got {n}")));
    }
    let dim = system.dim();
    let per_eigen: Vec<Vec<(Dd, Dd)>> = (1..=dim).map(|j| scalar_coefficients(scheme, n, j)).collect();
    Ok((0..=n)
        .map(|l| {
            system.spectral_input(|j| {
                let (p, q) = per_eigen[j - 1][l];
                p / Dd::from(j) + q
            })
        })
        .collect())
}

/// `c^n` from the closed forms, sampling `signal` on `mesh`.
pub fn closed_form_state(system: &LegSSystem, signal: &Signal, scheme: Scheme, mesh: &Mesh) -> Result<Vec<f64>> {
    signal.check_horizon(mesh.horizon())?;
    let coef = closed_form_coefficients(system, scheme, mesh.steps())?;
    let mut c = vec![0.0; system.dim()];
    for (l, w) in coef.iter().enumerate() {
        let f = signal.sample(mesh.time(l))?;
        c.iter_mut().zip(w).for_each(|(ci, wi)| *ci += wi * f);
    }
    Ok(c)
}
