//! Decoding a state back into a function on `[0, t]`:
//! `f(s) ~ sum_j c_j sqrt(2j - 1) P~_{j-1}(s/t)`.

use std::io::Write;

use serde::Serialize;

use crate::error::{LegsError, Result};
use crate::io::{write_header, write_row};
use crate::legendre::scaled_legendre_into;
use crate::quadrature::{NonFinite, PanelQuadrature};
use crate::signal::Signal;
use crate::system::LegSSystem;

/// Points in the sup-norm grid.
pub const GRID_POINTS: usize = 1001;

/// Fidelity of a state as a description of the signal on `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub t: f64,
    /// `sqrt((1/t) int_0^t (f - f_hat)^2 ds)`.
    pub l2_error: f64,
    pub sup_grid_error: f64,
    /// Quadrature error estimate on the squared error integral.
    pub quadrature_error: f64,
    pub converged: bool,
}

fn expand(c: &[f64], x: f64, basis: &mut [f64]) -> f64 {
    scaled_legendre_into(x, basis);
    c.iter().zip(basis.iter()).map(|(a, b)| a * b).sum()
}

fn check_state(system: &LegSSystem, c: &[f64], t: f64) -> Result<()> {
    if c.len() != system.dim() {
        return Err(LegsError::DimensionMismatch { expected: system.dim(), got: c.len() });
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(LegsError::InvalidTime { t, reason: "reconstruction horizon must be positive" });
    }
    Ok(())
}

/// The truncated Legendre expansion of `c` at `s in [0, t]`.
pub fn reconstruct(system: &LegSSystem, c: &[f64], t: f64, s: f64) -> Result<f64> {
    check_state(system, c, t)?;
    if !(0.0..=t).contains(&s) {
        return Err(LegsError::OutsideHorizon { s, t });
    }
    let mut basis = vec![0.0; c.len()];
    Ok(expand(c, s / t, &mut basis))
}

/// Rows `(s, f(s), f_hat(s))` on `points` equispaced nodes of `[0, t]`.
pub fn reconstruction_curve(
    system: &LegSSystem,
    signal: &Signal,
    c: &[f64],
    t: f64,
    points: usize,
) -> Result<Vec<[f64; 3]>> {
    check_state(system, c, t)?;
    let points = points.max(2);
    let mut basis = vec![0.0; c.len()];
    (0..points)
        .map(|i| {
            let x = i as f64 / (points - 1) as f64;
            let s = if i == points - 1 { t } else { x * t };
            Ok([s, signal.sample(s)?, expand(c, x, &mut basis)])
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(rows: &[[f64; 3]], w: &mut W) -> Result<()> {
    write_header(w, &["s".into(), "f".into(), "f_hat".into()])?;
    for r in rows {
        write_row(w, &[], r)?;
    }
    Ok(())
}

/// L2 error under `(1/t) ds` by the oracle's quadrature engine, plus the
/// sup error on a 1001-point grid.
pub fn reconstruction_error(
    system: &LegSSystem,
    signal: &Signal,
    c: &[f64],
    t: f64,
    tol: f64,
) -> Result<ReconstructionReport> {
    check_state(system, c, t)?;
    signal.check_horizon(t)?;
    let singular: Vec<f64> = signal
        .singular_points()
        .iter()
        .map(|&s| s / t)
        .filter(|x| (0.0..=1.0).contains(x))
        .collect();
    let integral = {
        let mut basis = vec![0.0; c.len()];
        let basis = std::cell::RefCell::new(&mut basis);
        PanelQuadrature::default()
            .integrate(
                1,
                |x, out| {
                    let fhat = expand(c, x, &mut basis.borrow_mut());
                    let e = signal.evaluate(t * x) - fhat;
                    out[0] = e * e;
                },
                0.0,
                1.0,
                &singular,
                tol,
            )
            .map_err(|NonFinite { x, value }| LegsError::SignalEvaluation {
                label: signal.label().to_string(),
                t: x * t,
                value,
            })?
    };
    let curve = reconstruction_curve(system, signal, c, t, GRID_POINTS)?;
    let sup = curve.iter().map(|[_, f, g]| (f - g).abs()).fold(0.0, f64::max);
    Ok(ReconstructionReport {
        t,
        l2_error: integral.value[0].max(0.0).sqrt(),
        sup_grid_error: sup,
        quadrature_error: integral.error_estimate,
        converged: integral.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::shifted_legendre;
    use crate::oracle::exact_state;
    use crate::signal::{corpus_signal, Regularity};

    #[test]
    fn constant_state() {
        let sys = LegSSystem::new(4).unwrap();
        let c = [2.0, 0.0, 0.0, 0.0];
        for &s in &[0.0, 0.3, 1.2] {
            assert_eq!(reconstruct(&sys, &c, 1.2, s).unwrap(), 2.0);
        }
        assert!(matches!(reconstruct(&sys, &c, 1.2, 1.3), Err(LegsError::OutsideHorizon { .. })));
    }

    #[test]
    fn single_coefficient() {
        let sys = LegSSystem::new(3).unwrap();
        let v = reconstruct(&sys, &[0.0, 1.0, 0.0], 2.0, 0.5).unwrap();
        assert!((v - 3f64.sqrt() * (0.5 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn ramp_is_recovered() {
        let sys = LegSSystem::new(4).unwrap();
        let s = corpus_signal("linear").unwrap();
        let c = exact_state(&sys, &s, 1.5, 1e-12).unwrap().c;
        for i in 0..=10 {
            let x = 0.15 * i as f64;
            assert!((reconstruct(&sys, &c, 1.5, x).unwrap() - x).abs() < 1e-9);
        }
    }

    #[test]
    fn complement_has_unit_error() {
        let n = 5;
        let sys = LegSSystem::new(n).unwrap();
        let t0 = 1.3;
        let s = Signal::new("p5", Regularity::Smooth, move |s| {
            ((2 * n + 1) as f64).sqrt() * shifted_legendre(n, s / t0)
        });
        let c = exact_state(&sys, &s, t0, 1e-12).unwrap().c;
        assert!(c.iter().all(|v| v.abs() < 1e-12));
        let r = reconstruction_error(&sys, &s, &c, t0, 1e-12).unwrap();
        assert!((r.l2_error - 1.0).abs() < 1e-11);
    }

    #[test]
    fn exact_for_constant() {
        let sys = LegSSystem::new(8).unwrap();
        let s = corpus_signal("const1").unwrap();
        let mut c = vec![0.0; 8];
        c[0] = 1.0;
        let r = reconstruction_error(&sys, &s, &c, 2.0, 1e-12).unwrap();
        assert!(r.l2_error < 1e-12 && r.sup_grid_error < 1e-12);
    }
}
