//! Convergence studies: global errors over a family of meshes and fitted
//! log-log slopes.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{local_truncation_error, run, Mesh, Scheme};
use crate::error::{LegsError, Result};
use crate::io::{fmt_f64, write_header};
use crate::oracle::{exact_state, ExactState, MIN_TOLERANCE};
use crate::signal::{Regularity, Signal, SignalSpec};
use crate::system::{LegSSystem, MAX_DIM};

/// Meshes dropped from the small end before fitting slopes.
pub const DEFAULT_FIT_DROP: usize = 2;

/// Smallest mesh counted by the monotone-decay check.
pub const MONOTONE_FROM: usize = 128;

/// One signal or several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalList {
    One(SignalSpec),
    Many(Vec<SignalSpec>),
}

impl SignalList {
    pub fn specs(&self) -> Vec<&SignalSpec> {
        match self {
            SignalList::One(s) => vec![s],
            SignalList::Many(v) => v.iter().collect(),
        }
    }
}

fn all_schemes() -> Vec<Scheme> {
    Scheme::ALL.to_vec()
}

/// Experiment descriptor read from JSON.
///
/// ```json
/// {"signal": ["smooth1", "bv_sqrt"], "N": 8, "T": 2.0,
///  "schemes": ["bilinear", "forward_euler"],
///  "mesh_list": [64, 128, 256, 512, 1024], "oracle_tol": 1e-12}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: SignalList,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "all_schemes")]
    pub schemes: Vec<Scheme>,
    pub mesh_list: Vec<usize>,
    /// Oracle tolerance; defaults to the signal's regularity class.
    #[serde(default)]
    pub oracle_tol: Option<f64>,
    /// Number of smallest meshes left out of the slope fit.
    #[serde(default)]
    pub fit_drop: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| LegsError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LegsError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn fit_drop(&self) -> usize {
        self.fit_drop.unwrap_or(DEFAULT_FIT_DROP)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LegsError::InvalidConfig(m));
        if self.dim < 1 || self.dim > MAX_DIM {
            return bad(format!("N must lie in 1..={MAX_DIM}, got {}", self.dim));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("T must be finite and positive, got {}", self.horizon));
        }
        if self.schemes.is_empty() {
            return bad("schemes must not be empty".into());
        }
        if self.signal.specs().is_empty() {
            return bad("signal list must not be empty".into());
        }
        if self.mesh_list.len() < 4 {
            return bad(format!("mesh_list needs at least 4 entries, got {}", self.mesh_list.len()));
        }
        if let Some(n) = self.mesh_list.iter().find(|n| !n.is_power_of_two() || **n < 2) {
            return bad(format!("mesh_list entries must be powers of two >= 2, got {n}"));
        }
        if self.mesh_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad("mesh_list must be strictly increasing".into());
        }
        if self.mesh_list.len() < self.fit_drop() + 2 {
            return bad(format!("fit_drop {} leaves fewer than two meshes to fit", self.fit_drop()));
        }
        if let Some(tol) = self.oracle_tol {
            if !(tol.is_finite() && tol >= MIN_TOLERANCE) {
                return bad(format!("oracle_tol must be finite and >= {MIN_TOLERANCE:e}, got {tol}"));
            }
        }
        Ok(())
    }
}

/// Least-squares slope of `log e` against `log n`; `None` when fewer than two
/// points or any error is not positive.
pub fn fit_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(_, e)| !(e > 0.0 && e.is_finite())) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, e)| e.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Reference state at the horizon; non-convergence is fatal except for
/// Riemann-only signals, where it is recorded.
pub fn reference_state(system: &LegSSystem, signal: &Signal, horizon: f64, tol: f64) -> Result<ExactState> {
    let state = exact_state(system, signal, horizon, tol)?;
    if signal.regularity() == Regularity::RiemannOnly {
        Ok(state)
    } else {
        state.require_converged(signal.label(), tol)
    }
}

fn l2_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `||c^n - c(T)||_2`.
pub fn global_error(
    system: &LegSSystem,
    signal: &Signal,
    scheme: Scheme,
    n: usize,
    horizon: f64,
    oracle_tol: f64,
) -> Result<f64> {
    let reference = reference_state(system, signal, horizon, oracle_tol)?;
    let tr = run(system, signal, scheme, Mesh::new(n, horizon)?)?;
    Ok(l2_distance(tr.terminal(), &reference.c))
}

/// Local truncation error of step `k` on an `n`-step mesh of `[0, T]`.
pub fn lte_probe(
    system: &LegSSystem,
    signal: &Signal,
    scheme: Scheme,
    n: usize,
    horizon: f64,
    k: usize,
) -> Result<Vec<f64>> {
    local_truncation_error(system, signal, scheme, &Mesh::new(n, horizon)?, k)
}

/// One mesh of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPoint {
    pub n: usize,
    pub h: f64,
    pub global_error: f64,
}

/// Errors and fitted rate for one scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeRates {
    pub scheme: Scheme,
    pub errors: Vec<ErrorPoint>,
    pub fitted_slope: Option<f64>,
    pub fit_range: (usize, usize),
    /// Doublings (from `n = 128` up) where the error failed to drop.
    pub monotone_violations: usize,
    /// Some fitted error sits at or below the oracle's accuracy.
    pub underflow: bool,
}

impl SchemeRates {
    pub fn error_at(&self, n: usize) -> Option<f64> {
        self.errors.iter().find(|p| p.n == n).map(|p| p.global_error)
    }
}

/// All schemes for one signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub signal: String,
    pub regularity: Regularity,
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub norm: &'static str,
    pub fit_rule: String,
    pub oracle_tol: f64,
    pub oracle_error_estimate: f64,
    pub oracle_converged: bool,
    pub schemes: Vec<SchemeRates>,
}

impl RateReport {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeRates> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    pub fn slope(&self, scheme: Scheme) -> Option<f64> {
        self.scheme(scheme).and_then(|s| s.fitted_slope)
    }

    /// Columns `scheme, n, h, global_error`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write_header(w, &["scheme".into(), "n".into(), "h".into(), "global_error".into()])?;
        for s in &self.schemes {
            for p in &s.errors {
                writeln!(w, "{},{},{},{}", s.scheme, p.n, fmt_f64(p.h), fmt_f64(p.global_error))?;
            }
        }
        Ok(())
    }
}

/// Runs one signal over every `(scheme, n)` cell of the config.
///
/// Cells run in parallel; results are gathered in config order, so reports
/// do not depend on scheduling.
pub fn study_signal(config: &ExperimentConfig, signal: &Signal) -> Result<RateReport> {
    config.validate()?;
    let system = LegSSystem::new(config.dim)?;
    let tol = config.oracle_tol.unwrap_or_else(|| signal.regularity().default_tolerance());
    let reference = reference_state(&system, signal, config.horizon, tol)?;

    let cells: Vec<(Scheme, usize)> = config
        .schemes
        .iter()
        .flat_map(|&s| config.mesh_list.iter().map(move |&n| (s, n)))
        .collect();
    let errors: Vec<f64> = cells
        .par_iter()
        .map(|&(scheme, n)| {
            let tr = run(&system, signal, scheme, Mesh::new(n, config.horizon)?)?;
            Ok(l2_distance(tr.terminal(), &reference.c))
        })
        .collect::<Result<_>>()?;

    let floor = tol.max(reference.tol);
    let drop = config.fit_drop();
    let meshes = config.mesh_list.len();
    let schemes = config
        .schemes
        .iter()
        .enumerate()
        .map(|(i, &scheme)| {
            let errs = &errors[i * meshes..(i + 1) * meshes];
            let points: Vec<ErrorPoint> = config
                .mesh_list
                .iter()
                .zip(errs)
                .map(|(&n, &e)| ErrorPoint { n, h: config.horizon / n as f64, global_error: e })
                .collect();
            let fit: Vec<(usize, f64)> = points[drop..].iter().map(|p| (p.n, p.global_error)).collect();
            let monotone_violations = points
                .windows(2)
                .filter(|w| w[0].n >= MONOTONE_FROM && w[1].global_error >= w[0].global_error)
                .count();
            SchemeRates {
                scheme,
                fitted_slope: fit_slope(&fit),
                fit_range: (fit[0].0, fit[fit.len() - 1].0),
                monotone_violations,
                underflow: fit.iter().any(|&(_, e)| e <= floor),
                errors: points,
            }
        })
        .collect();

    Ok(RateReport {
        signal: signal.label().to_string(),
        regularity: signal.regularity(),
        dim: config.dim,
        horizon: config.horizon,
        norm: "l2",
        fit_rule: format!("least squares on (log n, log error), {drop} smallest meshes dropped"),
        oracle_tol: tol,
        oracle_error_estimate: reference.tol,
        oracle_converged: reference.converged,
        schemes,
    })
}

/// One report per configured signal.
pub fn convergence_study(config: &ExperimentConfig) -> Result<Vec<RateReport>> {
    config.validate()?;
    config
        .signal
        .specs()
        .into_iter()
        .map(|spec| study_signal(config, &spec.resolve()?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::corpus_signal;

    fn config(json: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(json)
    }

    #[test]
    fn parses_and_defaults() {
        let c = config(r#"{"signal":"smooth1","N":8,"T":2,"mesh_list":[64,128,256,512]}"#).unwrap();
        assert_eq!(c.schemes.len(), 5);
        assert_eq!(c.fit_drop(), 2);
        let c = config(
            r#"{"signal":["poly2",{"kind":"polynomial","coefficients":[0,1]}],"N":4,"T":1,
                "schemes":["bilinear"],"mesh_list":[4,8,16,32],"oracle_tol":1e-12}"#,
        )
        .unwrap();
        assert_eq!(c.signal.specs().len(), 2);
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            r#"{"signal":"smooth1","N":8,"T":2,"mesh_list":[64,128]}"#,
            r#"{"signal":"smooth1","N":8,"T":2,"mesh_list":[64,128,100,512]}"#,
            r#"{"signal":"smooth1","N":8,"T":2,"mesh_list":[512,256,128,64]}"#,
            r#"{"signal":"smooth1","N":0,"T":2,"mesh_list":[64,128,256,512]}"#,
            r#"{"signal":"smooth1","N":8,"T":-1,"mesh_list":[64,128,256,512]}"#,
            r#"{"signal":"smooth1","N":8,"T":2,"mesh_list":[64,128,256,512],"oracle_tol":0}"#,
            r#"{"signal":"smooth1","N":8,"T":2,"schemes":["rk4"],"mesh_list":[64,128,256,512]}"#,
            r#"{"signal":"smooth1","N":8,"T":2,"mesh_list":[64,128,256,512],"extra":1}"#,
            "not json",
        ] {
            assert!(matches!(config(bad), Err(LegsError::InvalidConfig(_))), "{bad}");
        }
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(usize, f64)> = [8, 16, 32, 64].iter().map(|&n| (n, 3.0 / (n as f64).powi(2))).collect();
        assert!((fit_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&[(8, 1.0)]), None);
        assert_eq!(fit_slope(&[(8, 1.0), (16, 0.0)]), None);
    }

    #[test]
    fn constant_signal_has_no_backward_euler_error() {
        let sys = LegSSystem::new(8).unwrap();
        let s = corpus_signal("const1").unwrap();
        assert!(global_error(&sys, &s, Scheme::BackwardEuler, 50, 2.0, 1e-12).unwrap() < 1e-12);
    }

    #[test]
    fn poly2_forward_euler_halves() {
        let sys = LegSSystem::new(8).unwrap();
        let s = corpus_signal("poly2").unwrap();
        let e1 = global_error(&sys, &s, Scheme::ForwardEuler, 1024, 2.0, 1e-12).unwrap();
        let e2 = global_error(&sys, &s, Scheme::ForwardEuler, 2048, 2.0, 1e-12).unwrap();
        let ratio = e1 / e2;
        assert!((1.8..=2.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn study_is_ordered_and_deterministic() {
        let c = config(
            r#"{"signal":"smooth2","N":4,"T":1,"schemes":["zero_order_hold","bilinear"],"mesh_list":[16,32,64,128,256]}"#,
        )
        .unwrap();
        let a = convergence_study(&c).unwrap();
        let b = convergence_study(&c).unwrap();
        assert_eq!(a, b);
        let r = &a[0];
        assert_eq!(r.schemes[0].scheme, Scheme::ZeroOrderHold);
        assert_eq!(r.schemes[0].fit_range, (64, 256));
        let bil = r.slope(Scheme::Bilinear).unwrap();
        assert!((-2.3..=-1.7).contains(&bil), "{bil}");
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 11);
    }

    #[test]
    fn lte_probe_ramp() {
        let sys = LegSSystem::new(1).unwrap();
        let s = Signal::polynomial("ramp", vec![0.0, 10.0]);
        let t = lte_probe(&sys, &s, Scheme::ApproxBilinear, 256, 2.0, 0).unwrap();
        assert!((t[0] + 10.0 / 6.0).abs() < 1e-12);
    }
}
