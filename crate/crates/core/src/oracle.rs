//! Reference solutions of the continuous LegS ODE.
//!
//! The state at time `t` is the projection
//! `c_j(t) = sqrt(2j - 1) / t * int_0^t f(s) P~_{j-1}(s/t) ds`,
//! evaluated after the substitution `s = t x` so every integral runs over
//! `[0, 1]`.

use crate::error::{LegsError, Result};
use crate::legendre::scaled_legendre_into;
use crate::quadrature::{Integral, NonFinite, PanelQuadrature};
use crate::signal::Signal;
use crate::system::LegSSystem;

/// Smallest tolerance the quadrature engine is asked for.
pub const MIN_TOLERANCE: f64 = 1e-14;

/// A reference state `c(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactState {
    pub t: f64,
    pub c: Vec<f64>,
    /// Achieved error estimate (max over components).
    pub tol: f64,
    pub converged: bool,
}

impl ExactState {
    /// Turns a non-converged state into an error.
    pub fn require_converged(self, label: &str, requested: f64) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(LegsError::OracleNotConverged {
                label: label.to_string(),
                requested,
                achieved: self.tol,
            })
        }
    }
}

/// The forced initial condition `f(0) e_1`.
pub fn initial_state(system: &LegSSystem, f0: f64) -> Vec<f64> {
    let mut c = vec![0.0; system.dim()];
    c[0] = f0;
    c
}

/// `c'(0) = (A + I)^{-1} B f'(0)`.
pub fn initial_derivative(system: &LegSSystem, fprime0: f64) -> Vec<f64> {
    // (I + A) x = B is the shifted solve with theta = 1.
    let mut x: Vec<f64> = system.b().iter().copied().collect();
    system.solve_shifted(1.0, &mut x);
    x.iter_mut().for_each(|v| *v *= fprime0);
    x
}

fn check_args(t: f64, tol: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(LegsError::InvalidTime { t, reason: "must be finite and non-negative" });
    }
    if !tol.is_finite() || tol < MIN_TOLERANCE {
        return Err(LegsError::InvalidTolerance(tol));
    }
    Ok(())
}

fn scaled_singularities(signal: &Signal, t: f64) -> Vec<f64> {
    signal
        .singular_points()
        .iter()
        .map(|&s| s / t)
        .filter(|&x| (0.0..=1.0).contains(&x))
        .collect()
}

fn integrate_scaled<F>(signal: &Signal, t: f64, dim: usize, tol: f64, integrand: F) -> Result<Integral>
where
    F: Fn(f64, &mut [f64]),
{
    let singular = scaled_singularities(signal, t);
    PanelQuadrature::default()
        .integrate(dim, integrand, 0.0, 1.0, &singular, tol)
        .map_err(|NonFinite { x, value }| LegsError::SignalEvaluation {
            label: signal.label().to_string(),
            t: x * t,
            value,
        })
}

/// `c(t)` by adaptive panel quadrature.
///
/// `t = 0` returns the forced initial state without quadrature. A state whose
/// error estimate stays above `tol` is returned with `converged = false`.
pub fn exact_state(system: &LegSSystem, signal: &Signal, t: f64, tol: f64) -> Result<ExactState> {
    check_args(t, tol)?;
    signal.check_horizon(t)?;
    let dim = system.dim();
    if t == 0.0 {
        return Ok(ExactState { t, c: initial_state(system, signal.f0()), tol: 0.0, converged: true });
    }
    let integral = integrate_scaled(signal, t, dim, tol, |x, out| {
        scaled_legendre_into(x, out);
        let f = signal.evaluate(t * x);
        out.iter_mut().for_each(|v| *v *= f);
    })?;
    Ok(ExactState {
        t,
        c: integral.value,
        tol: integral.error_estimate,
        converged: integral.converged,
    })
}

/// All diagonalized components `c~_j(t) = d_j int_0^1 x^{j-1} f(t x) dx`.
pub fn diagonal_state(system: &LegSSystem, signal: &Signal, t: f64, tol: f64) -> Result<ExactState> {
    check_args(t, tol)?;
    signal.check_horizon(t)?;
    let dim = system.dim();
    let d = system.d();
    if t == 0.0 {
        let c = (0..dim).map(|j| d[j] * signal.f0() / (j + 1) as f64).collect();
        return Ok(ExactState { t, c, tol: 0.0, converged: true });
    }
    let integral = integrate_scaled(signal, t, dim, tol, |x, out| {
        let f = signal.evaluate(t * x);
        let mut p = f;
        for slot in out.iter_mut() {
            *slot = p;
            p *= x;
        }
    })?;
    let c = integral.value.iter().zip(d.iter()).map(|(v, dj)| v * dj).collect();
    Ok(ExactState {
        t,
        c,
        tol: integral.error_estimate * d.amax(),
        converged: integral.converged,
    })
}

/// Single component `c~_j(t)`, `j` 1-based.
pub fn diagonal_exact(system: &LegSSystem, signal: &Signal, t: f64, j: usize, tol: f64) -> Result<f64> {
    if j == 0 || j > system.dim() {
        return Err(LegsError::ComponentOutOfRange { index: j, dim: system.dim() });
    }
    Ok(diagonal_state(system, signal, t, tol)?.c[j - 1])
}

/// `max_j |(V c~(t))_j - c_j(t)|`, with the product formed in extended precision.
pub fn diagonal_cross_check(system: &LegSSystem, signal: &Signal, t: f64, tol: f64) -> Result<f64> {
    let c = exact_state(system, signal, t, tol)?;
    let ct = diagonal_state(system, signal, t, tol)?;
    let vc = system.apply_v(&ct.c);
    Ok(vc.iter().zip(&c.c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
