//! Input signals `f: [0, T] -> R` and the named corpus used by the experiments.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LegsError, Result};

/// How regular a signal is; picks the oracle tolerance and what rates to expect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Smooth,
    BoundedVariation,
    RiemannOnly,
}

impl Regularity {
    /// Oracle tolerance the panel budget can certify for this class.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Regularity::Smooth => 1e-12,
            Regularity::BoundedVariation => 1e-9,
            Regularity::RiemannOnly => 1e-6,
        }
    }
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularity::Smooth => "smooth",
            Regularity::BoundedVariation => "bounded_variation",
            Regularity::RiemannOnly => "riemann_only",
        })
    }
}

type SignalFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A callable input signal with the metadata the oracle needs.
#[derive(Clone)]
pub struct Signal {
    label: String,
    eval: Arc<SignalFn>,
    regularity: Regularity,
    f0: f64,
    fprime0: Option<f64>,
    singular_points: Vec<f64>,
    domain_end: f64,
    polynomial: Option<Vec<f64>>,
}

impl fmt::Debug for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Signal")
            .field("label", &self.label)
            .field("regularity", &self.regularity)
            .field("f0", &self.f0)
            .field("fprime0", &self.fprime0)
            .field("singular_points", &self.singular_points)
            .field("domain_end", &self.domain_end)
            .finish_non_exhaustive()
    }
}

impl Signal {
    /// Wraps `f`; `f0` is taken as `f(0)`.
    pub fn new(
        label: impl Into<String>,
        regularity: Regularity,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let f0 = f(0.0);
        Signal {
            label: label.into(),
            eval: Arc::new(f),
            regularity,
            f0,
            fprime0: None,
            singular_points: Vec::new(),
            domain_end: f64::INFINITY,
            polynomial: None,
        }
    }

    /// `sum_m coefficients[m] t^m`. Carries exact projections.
    pub fn polynomial(label: impl Into<String>, coefficients: Vec<f64>) -> Self {
        let coeffs = coefficients.clone();
        let fprime0 = coefficients.get(1).copied().unwrap_or(0.0);
        let mut s = Signal::new(label, Regularity::Smooth, move |t| {
            coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
        })
        .with_fprime0(fprime0);
        s.polynomial = Some(coefficients);
        s
    }

    pub fn with_fprime0(mut self, fprime0: f64) -> Self {
        self.fprime0 = Some(fprime0);
        self
    }

    pub fn with_singular_points(mut self, points: Vec<f64>) -> Self {
        self.singular_points = points;
        self
    }

    pub fn with_domain_end(mut self, end: f64) -> Self {
        self.domain_end = end;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn fprime0(&self) -> Option<f64> {
        self.fprime0
    }

    pub fn singular_points(&self) -> &[f64] {
        &self.singular_points
    }

    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    #[inline]
    pub fn evaluate(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// Evaluates and rejects non-finite values.
    pub fn sample(&self, t: f64) -> Result<f64> {
        let value = self.evaluate(t);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(LegsError::SignalEvaluation { label: self.label.clone(), t, value })
        }
    }

    /// Errors unless `[0, horizon]` lies inside the signal's domain.
    pub fn check_horizon(&self, horizon: f64) -> Result<()> {
        if horizon > self.domain_end {
            return Err(LegsError::HorizonExceedsDomain {
                label: self.label.clone(),
                horizon,
                domain_end: self.domain_end,
            });
        }
        Ok(())
    }

    /// Exact projection `c(t)` when the signal is a polynomial.
    ///
    /// Uses `int_0^1 x^m P~_k(x) dx = m!^2 / ((m-k)! (m+k+1)!)` for `k <= m`
    /// and zero otherwise.
    pub fn analytic_state(&self, t: f64, dim: usize) -> Option<Vec<f64>> {
        let coeffs = self.polynomial.as_ref()?;
        Some(
            (0..dim)
                .map(|k| {
                    let moment_sum: f64 = coeffs
                        .iter()
                        .enumerate()
                        .filter(|(m, _)| k <= *m)
                        .map(|(m, a)| a * t.powi(m as i32) * legendre_moment(m, k))
                        .sum();
                    ((2 * k + 1) as f64).sqrt() * moment_sum
                })
                .collect(),
        )
    }
}

/// `int_0^1 x^m P~_k(x) dx` for `k <= m`.
fn legendre_moment(m: usize, k: usize) -> f64 {
    let num: f64 = (m - k + 1..=m).map(|i| i as f64).product();
    let den: f64 = (m + 1..=m + k + 1).map(|i| i as f64).product();
    num / den
}

/// The named signals, in listing order.
pub const CORPUS: &[&str] = &[
    "const1",
    "linear",
    "poly2",
    "poly3",
    "smooth1",
    "smooth2",
    "bv_sqrt",
    "riemann_osc",
    "nonac",
];

/// Looks up a corpus signal by name.
pub fn corpus_signal(name: &str) -> Result<Signal> {
    let s = match name {
        "const1" => Signal::polynomial("const1", vec![1.0]),
        "linear" => Signal::polynomial("linear", vec![0.0, 1.0]),
        "poly2" => Signal::polynomial("poly2", vec![0.0, 0.0, 1.0]),
        "poly3" => Signal::polynomial("poly3", vec![0.0, 0.0, 0.0, 1.0]),
        "smooth1" => Signal::new("smooth1", Regularity::Smooth, |t| 2.0 * t.powi(3) * (-t).exp())
            .with_fprime0(0.0),
        "smooth2" => Signal::new("smooth2", Regularity::Smooth, |t| {
            0.25 * (10.0 * t).sin() + 0.5 * (10.0 * t / 3.0).sin() + (10.0 * t / 7.0).sin()
        })
        .with_fprime0(2.5 + 5.0 / 3.0 + 10.0 / 7.0),
        "bv_sqrt" => Signal::new("bv_sqrt", Regularity::BoundedVariation, |t| t.max(0.0).sqrt())
            .with_singular_points(vec![0.0]),
        "riemann_osc" => Signal::new("riemann_osc", Regularity::RiemannOnly, |t| {
            if t <= 0.0 {
                0.0
            } else {
                t.powf(0.05) * (1.0 / t).sin()
            }
        })
        .with_singular_points(vec![0.0]),
        "nonac" => Signal::new("nonac", Regularity::RiemannOnly, nonac)
            .with_singular_points(vec![0.0])
            .with_domain_end(0.5),
        other => return Err(LegsError::UnknownSignal(other.to_string())),
    };
    Ok(s)
}

/// Derivative of `t^2 sin(1/t) / log(1/t)` on `(0, 1/2]`, zero elsewhere.
///
/// Continuous at 0, yet the LegS solution it drives is not absolutely
/// continuous on the closed interval.
fn nonac(t: f64) -> f64 {
    if t <= 0.0 || t > 0.5 {
        return 0.0;
    }
    let l = (1.0 / t).ln();
    let (s, c) = (1.0 / t).sin_cos();
    2.0 * t / l * s + t / (l * l) * s - c / l
}

/// One term `amplitude * sin(frequency * t + phase)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidTerm {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

/// User-supplied signal shapes accepted in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalDescriptor {
    Polynomial {
        #[serde(default)]
        label: Option<String>,
        coefficients: Vec<f64>,
    },
    Sinusoids {
        #[serde(default)]
        label: Option<String>,
        terms: Vec<SinusoidTerm>,
    },
}

impl SignalDescriptor {
    pub fn to_signal(&self) -> Result<Signal> {
        match self {
            SignalDescriptor::Polynomial { label, coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(LegsError::InvalidConfig(
                        "polynomial needs at least one finite coefficient".into(),
                    ));
                }
                Ok(Signal::polynomial(label.clone().unwrap_or_else(|| "polynomial".into()), coefficients.clone()))
            }
            SignalDescriptor::Sinusoids { label, terms } => {
                if terms.is_empty()
                    || terms.iter().any(|t| !(t.amplitude.is_finite() && t.frequency.is_finite() && t.phase.is_finite()))
                {
                    return Err(LegsError::InvalidConfig("sinusoid sum needs finite terms".into()));
                }
                let fprime0 = terms.iter().map(|t| t.amplitude * t.frequency * t.phase.cos()).sum();
                let terms = terms.clone();
                Ok(Signal::new(
                    label.clone().unwrap_or_else(|| "sinusoids".into()),
                    Regularity::Smooth,
                    move |t| terms.iter().map(|s| s.amplitude * (s.frequency * t + s.phase).sin()).sum(),
                )
                .with_fprime0(fprime0))
            }
        }
    }
}

/// A corpus name or an inline descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalSpec {
    Named(String),
    Custom(SignalDescriptor),
}

impl SignalSpec {
    pub fn resolve(&self) -> Result<Signal> {
        match self {
            SignalSpec::Named(name) => corpus_signal(name),
            SignalSpec::Custom(d) => d.to_signal(),
        }
    }
}
