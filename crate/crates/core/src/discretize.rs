//! The five one-step schemes on a uniform mesh.
//!
//! Step `k` maps `c^k` to `c^{k+1}` using the samples `f^k = f(t_k)` and
//! `f^{k+1}`. Forward Euler and bilinear divide by `k`, so their first step
//! is replaced by a fixed start rule; ZOH sets its `k = 0` transition to zero.
//! Implicit solves are forward substitutions on `I + theta A`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dd::Dd;
use crate::error::{LegsError, Result};
use crate::io::{indexed_columns, write_header, write_row};
use crate::oracle::{exact_state, initial_derivative, initial_state};
use crate::signal::Signal;
use crate::system::LegSSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ForwardEuler,
    BackwardEuler,
    Bilinear,
    ApproxBilinear,
    ZeroOrderHold,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::ForwardEuler,
        Scheme::BackwardEuler,
        Scheme::Bilinear,
        Scheme::ApproxBilinear,
        Scheme::ZeroOrderHold,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ForwardEuler => "forward_euler",
            Scheme::BackwardEuler => "backward_euler",
            Scheme::Bilinear => "bilinear",
            Scheme::ApproxBilinear => "approx_bilinear",
            Scheme::ZeroOrderHold => "zero_order_hold",
        }
    }

    /// Global order the convergence theory predicts for smooth inputs.
    pub fn expected_order(self) -> u32 {
        match self {
            Scheme::Bilinear => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = LegsError;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| LegsError::UnknownScheme(s.to_string()))
    }
}

/// `n` uniform steps of size `h = T / n` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    n: usize,
    horizon: f64,
}

impl Mesh {
    pub fn new(n: usize, horizon: f64) -> Result<Self> {
        if n < 1 {
            return Err(LegsError::InvalidMesh(format!("need at least one step, got {n}")));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(LegsError::InvalidTime { t: horizon, reason: "horizon must be finite and positive" });
        }
        Ok(Mesh { n, horizon })
    }

    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn h(&self) -> f64 {
        self.horizon / self.n as f64
    }

    /// `t_k = k T / n`; exact at both ends.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.horizon / self.n as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|k| self.time(k))
    }
}

/// How forward Euler and bilinear take their first step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StartRule {
    /// Forward Euler copies `c^0`; bilinear drops the `k = 0` explicit half.
    #[default]
    ZeroOut,
    /// Uses `c'(0) = (A + I)^{-1} B f'(0)` in place of the singular term.
    /// Has no effect on the other schemes.
    InitialDerivative(f64),
}

/// Discrete states `c^0 .. c^n` from one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub scheme: Scheme,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("a trajectory holds at least c^0")
    }

    /// Columns `k, t_k, c_1..c_N`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let dim = self.states[0].len();
        let mut header = vec!["k".to_string(), "t_k".to_string()];
        header.extend(indexed_columns("c", dim));
        write_header(w, &header)?;
        for (k, c) in self.states.iter().enumerate() {
            let mut row = Vec::with_capacity(dim + 1);
            row.push(self.mesh.time(k));
            row.extend_from_slice(c);
            write_row(w, &[k.to_string()], &row)?;
        }
        Ok(())
    }
}

/// `Phi_k = V diag(r, r^2, ..., r^N) V^-1` with `r = k / (k + 1)`; zero at `k = 0`.
pub fn zoh_transition(system: &LegSSystem, k: usize) -> DMatrix<f64> {
    let n = system.dim();
    if k == 0 {
        return DMatrix::zeros(n, n);
    }
    let r = Dd::ratio(k, k + 1);
    system.spectral_matrix(|j| r.powi(j as u32))
}

/// `A^-1 (I - Phi_k) B = V diag((1 - r^j) / j) d`; equals `e_1` at `k = 0`.
pub fn zoh_input(system: &LegSSystem, k: usize) -> Vec<f64> {
    if k == 0 {
        return initial_state(system, 1.0);
    }
    let r = Dd::ratio(k, k + 1);
    system.spectral_input(|j| (Dd::ONE - r.powi(j as u32)) / Dd::from(j))
}

/// Precomputed ZOH transitions and input vectors for steps `1..len`.
#[derive(Debug, Clone)]
struct ZohTable {
    // row-major N x N blocks, block k - 1 for step k
    transitions: Vec<f64>,
    inputs: Vec<f64>,
}

impl ZohTable {
    fn new(system: &LegSSystem, steps: usize) -> Self {
        let n = system.dim();
        let mut transitions = Vec::with_capacity(steps.saturating_sub(1) * n * n);
        let mut inputs = Vec::with_capacity(steps.saturating_sub(1) * n);
        for k in 1..steps {
            let phi = zoh_transition(system, k);
            for i in 0..n {
                for m in 0..n {
                    transitions.push(phi[(i, m)]);
                }
            }
            inputs.extend(zoh_input(system, k));
        }
        ZohTable { transitions, inputs }
    }

    fn covers(&self, dim: usize, k: usize) -> bool {
        k >= 1 && k * dim <= self.inputs.len()
    }
}

/// Applies one scheme step after step, reusing ZOH tables and scratch space.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    system: &'a LegSSystem,
    scheme: Scheme,
    zoh: Option<ZohTable>,
}

impl<'a> Stepper<'a> {
    /// Prepares for runs of up to `steps` steps.
    pub fn new(system: &'a LegSSystem, scheme: Scheme, steps: usize) -> Self {
        let zoh = (scheme == Scheme::ZeroOrderHold).then(|| ZohTable::new(system, steps));
        Stepper { system, scheme, zoh }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Writes `c^{k+1}` into `out`. `start` is the start-rule correction
    /// (`h c'(0)`), consulted only at `k = 0`.
    pub fn step_into(
        &self,
        k: usize,
        c: &[f64],
        fk: f64,
        fk1: f64,
        start: Option<&[f64]>,
        out: &mut [f64],
        scratch: &mut [f64],
    ) {
        let sys = self.system;
        let b = sys.b().as_slice();
        match self.scheme {
            Scheme::ForwardEuler => {
                if k == 0 {
                    out.copy_from_slice(c);
                    if let Some(dc) = start {
                        out.iter_mut().zip(dc).for_each(|(o, d)| *o += d);
                    }
                    return;
                }
                let kf = k as f64;
                sys.apply_a(c, scratch);
                for i in 0..out.len() {
                    out[i] = c[i] - scratch[i] / kf + b[i] * fk / kf;
                }
            }
            Scheme::BackwardEuler => {
                let k1 = (k + 1) as f64;
                for i in 0..out.len() {
                    out[i] = c[i] + b[i] * fk1 / k1;
                }
                sys.solve_shifted(1.0 / k1, out);
            }
            Scheme::Bilinear => {
                if k == 0 {
                    for i in 0..out.len() {
                        out[i] = c[i] + 0.5 * b[i] * fk1;
                    }
                    if let Some(dc) = start {
                        out.iter_mut().zip(dc).for_each(|(o, d)| *o += 0.5 * d);
                    }
                    sys.solve_shifted(0.5, out);
                    return;
                }
                let (kf, k1) = (k as f64, (k + 1) as f64);
                sys.apply_a(c, scratch);
                let drive = fk / (2.0 * kf) + fk1 / (2.0 * k1);
                for i in 0..out.len() {
                    out[i] = c[i] - scratch[i] / (2.0 * kf) + b[i] * drive;
                }
                sys.solve_shifted(1.0 / (2.0 * k1), out);
            }
            Scheme::ApproxBilinear => {
                let k1 = (k + 1) as f64;
                let theta = 1.0 / (2.0 * k1);
                sys.apply_a(c, scratch);
                for i in 0..out.len() {
                    out[i] = c[i] - theta * scratch[i] + b[i] * fk1 / k1;
                }
                sys.solve_shifted(theta, out);
            }
            Scheme::ZeroOrderHold => {
                let n = sys.dim();
                if k == 0 {
                    out.fill(0.0);
                    out[0] = fk;
                    return;
                }
                match &self.zoh {
                    Some(t) if t.covers(n, k) => {
                        let phi = &t.transitions[(k - 1) * n * n..k * n * n];
                        let g = &t.inputs[(k - 1) * n..k * n];
                        for i in 0..n {
                            let row = &phi[i * n..(i + 1) * n];
                            out[i] = row.iter().zip(c).map(|(p, x)| p * x).sum::<f64>() + g[i] * fk;
                        }
                    }
                    _ => {
                        let phi = zoh_transition(sys, k);
                        let g = zoh_input(sys, k);
                        for i in 0..n {
                            out[i] = (0..n).map(|m| phi[(i, m)] * c[m]).sum::<f64>() + g[i] * fk;
                        }
                    }
                }
            }
        }
    }

    /// Steps that start in double-double: forward Euler and bilinear apply
    /// the expansive factors `I - A/k`, `I - A/(2k)` while `k < N`, and f64
    /// rounding made there is amplified by every later step.
    fn warmup(&self) -> usize {
        match self.scheme {
            Scheme::ForwardEuler | Scheme::Bilinear => self.system.dim(),
            _ => 0,
        }
    }

    fn step_dd(&self, k: usize, c: &[Dd], fk: f64, fk1: f64, start: Option<&[f64]>, out: &mut [Dd], scratch: &mut [Dd]) {
        let sys = self.system;
        let b = sys.b_dd();
        let (fk, fk1) = (Dd::from(fk), Dd::from(fk1));
        match self.scheme {
            Scheme::ForwardEuler => {
                if k == 0 {
                    out.copy_from_slice(c);
                    if let Some(dc) = start {
                        out.iter_mut().zip(dc).for_each(|(o, d)| *o += Dd::from(*d));
                    }
                    return;
                }
                let kd = Dd::from(k);
                sys.apply_a_dd(c, scratch);
                for i in 0..out.len() {
                    out[i] = c[i] - scratch[i] / kd + b[i] * fk / kd;
                }
            }
            Scheme::Bilinear => {
                let half = Dd::from(0.5);
                if k == 0 {
                    for i in 0..out.len() {
                        out[i] = c[i] + half * b[i] * fk1;
                    }
                    if let Some(dc) = start {
                        out.iter_mut().zip(dc).for_each(|(o, d)| *o += half * Dd::from(*d));
                    }
                    sys.solve_shifted_dd(half, out);
                    return;
                }
                let (k2, k12) = (Dd::from(2 * k), Dd::from(2 * (k + 1)));
                sys.apply_a_dd(c, scratch);
                let drive = fk / k2 + fk1 / k12;
                for i in 0..out.len() {
                    out[i] = c[i] - scratch[i] / k2 + b[i] * drive;
                }
                sys.solve_shifted_dd(Dd::ONE / k12, out);
            }
            _ => unreachable!("only explicit-start schemes warm up in double-double"),
        }
    }

    /// Steps from `c` (the state at step `first`) through the last sample,
    /// handing each new state to `visit`. Returns the terminal state.
    fn drive(
        &self,
        first: usize,
        c: &[f64],
        samples: &[f64],
        start: Option<&[f64]>,
        mut visit: impl FnMut(&[f64]),
    ) -> Vec<f64> {
        let n = self.system.dim();
        let last = samples.len().saturating_sub(1);
        let warm_end = self.warmup().min(last);
        let mut k = first;
        let mut cur = c.to_vec();
        if k < warm_end {
            let mut x: Vec<Dd> = cur.iter().map(|&v| Dd::from(v)).collect();
            let mut next = vec![Dd::ZERO; n];
            let mut scratch = vec![Dd::ZERO; n];
            while k < warm_end {
                self.step_dd(k, &x, samples[k], samples[k + 1], start, &mut next, &mut scratch);
                std::mem::swap(&mut x, &mut next);
                cur.iter_mut().zip(&x).for_each(|(c, v)| *c = v.to_f64());
                visit(&cur);
                k += 1;
            }
        }
        let mut next = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        while k < last {
            self.step_into(k, &cur, samples[k], samples[k + 1], start, &mut next, &mut scratch);
            std::mem::swap(&mut cur, &mut next);
            visit(&cur);
            k += 1;
        }
        cur
    }

    /// Runs steps `first..samples.len() - 1` from `c` (the state at step
    /// `first`), returning the terminal state.
    pub fn advance(&self, first: usize, c: &[f64], samples: &[f64], start: Option<&[f64]>) -> Vec<f64> {
        self.drive(first, c, samples, start, |_| {})
    }

    /// All states `c^0 .. c^n` for the sample vector `f^0 .. f^n`.
    pub fn trajectory(&self, samples: &[f64], start: Option<&[f64]>) -> Vec<Vec<f64>> {
        let mut states = Vec::with_capacity(samples.len());
        let c0 = initial_state(self.system, samples[0]);
        states.push(c0.clone());
        self.drive(0, &c0, samples, start, |c| states.push(c.to_vec()));
        states
    }
}

/// `c^{k+1}` from `c^k` for one scheme (ZOH matrices are formed on the spot).
pub fn step(system: &LegSSystem, scheme: Scheme, k: usize, c: &[f64], fk: f64, fk1: f64) -> Result<Vec<f64>> {
    if c.len() != system.dim() {
        return Err(LegsError::DimensionMismatch { expected: system.dim(), got: c.len() });
    }
    let stepper = Stepper { system, scheme, zoh: None };
    let mut out = vec![0.0; c.len()];
    let mut scratch = vec![0.0; c.len()];
    stepper.step_into(k, c, fk, fk1, None, &mut out, &mut scratch);
    Ok(out)
}

/// Samples `f(t_k)` at every mesh node.
pub fn sample_signal(signal: &Signal, mesh: &Mesh) -> Result<Vec<f64>> {
    signal.check_horizon(mesh.horizon())?;
    mesh.times().map(|t| signal.sample(t)).collect()
}

fn start_correction(system: &LegSSystem, scheme: Scheme, mesh: &Mesh, start: StartRule) -> Option<Vec<f64>> {
    match (scheme, start) {
        (Scheme::ForwardEuler | Scheme::Bilinear, StartRule::InitialDerivative(fp)) => {
            let h = mesh.h();
            Some(initial_derivative(system, fp).into_iter().map(|v| h * v).collect())
        }
        _ => None,
    }
}

/// Runs a scheme on explicit samples `f^0 .. f^n`.
pub fn run_samples(
    system: &LegSSystem,
    scheme: Scheme,
    mesh: Mesh,
    samples: &[f64],
    start: StartRule,
) -> Result<Trajectory> {
    if samples.len() != mesh.steps() + 1 {
        return Err(LegsError::DimensionMismatch { expected: mesh.steps() + 1, got: samples.len() });
    }
    let stepper = Stepper::new(system, scheme, mesh.steps());
    let dc = start_correction(system, scheme, &mesh, start);
    Ok(Trajectory { mesh, scheme, states: stepper.trajectory(samples, dc.as_deref()) })
}

/// Runs a scheme on a signal with the zero-out start.
pub fn run(system: &LegSSystem, signal: &Signal, scheme: Scheme, mesh: Mesh) -> Result<Trajectory> {
    run_with_start(system, signal, scheme, mesh, StartRule::ZeroOut)
}

pub fn run_with_start(
    system: &LegSSystem,
    signal: &Signal,
    scheme: Scheme,
    mesh: Mesh,
    start: StartRule,
) -> Result<Trajectory> {
    let samples = sample_signal(signal, &mesh)?;
    run_samples(system, scheme, mesh, &samples, start)
}

/// `T_k = (c(t_{k+1}) - step_k(c(t_k), f^k, f^{k+1})) / h`.
///
/// The defect of the exact solution under the scheme's solved update map,
/// divided by the step. The oracle runs at the signal's default tolerance and
/// must converge.
pub fn local_truncation_error(
    system: &LegSSystem,
    signal: &Signal,
    scheme: Scheme,
    mesh: &Mesh,
    k: usize,
) -> Result<Vec<f64>> {
    if k >= mesh.steps() {
        return Err(LegsError::InvalidMesh(format!("step {k} outside 0..{}", mesh.steps())));
    }
    let tol = signal.regularity().default_tolerance();
    let (t0, t1) = (mesh.time(k), mesh.time(k + 1));
    let c0 = exact_state(system, signal, t0, tol)?.require_converged(signal.label(), tol)?;
    let c1 = exact_state(system, signal, t1, tol)?.require_converged(signal.label(), tol)?;
    let next = step(system, scheme, k, &c0.c, signal.sample(t0)?, signal.sample(t1)?)?;
    let h = mesh.h();
    Ok(c1.c.iter().zip(&next).map(|(e, s)| (e - s) / h).collect())
}
