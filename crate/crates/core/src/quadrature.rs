//! Composite Gauss-Legendre quadrature with graded, adaptively bisected panels.
//!
//! The interval is first cut at the declared singular points. Panels that
//! touch a singular point are graded geometrically (ratio 1/2) down to the
//! minimum width, so that `sqrt(t)`-type endpoint behavior is resolved.
//! The engine then repeatedly bisects the panel with the largest two-level
//! error estimate until the summed estimate meets the tolerance or the
//! panel budget runs out.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// Nodes and weights of an `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Tricomi initial guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// The shared 32-point rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(32))
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub value: Vec<f64>,
    /// Sum of per-panel two-level differences (max-norm over components).
    pub error_estimate: f64,
    pub panels: usize,
    pub converged: bool,
}

/// The integrand produced a non-finite value at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonFinite {
    pub x: f64,
    pub value: f64,
}

/// Settings of the panel engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelQuadrature {
    pub max_panels: usize,
    pub min_width: f64,
    pub grading_ratio: f64,
}

impl Default for PanelQuadrature {
    fn default() -> Self {
        PanelQuadrature { max_panels: 1 << 14, min_width: 1e-12, grading_ratio: 0.5 }
    }
}

struct Panel {
    a: f64,
    b: f64,
    // estimate on each half, kept so children reuse them as coarse values
    left: Vec<f64>,
    right: Vec<f64>,
    err: f64,
    seq: usize,
}

impl Panel {
    fn fine(&self) -> impl Iterator<Item = f64> + '_ {
        self.left.iter().zip(&self.right).map(|(l, r)| l + r)
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PanelQuadrature {
    /// Integrates the vector-valued `f` over `[a, b]`.
    ///
    /// `f(x, out)` writes `dim` components into `out`. `singular` lists
    /// points where the integrand is non-smooth; those inside `[a, b]`
    /// become panel breaks with geometric grading on both sides.
    pub fn integrate<F>(
        &self,
        dim: usize,
        f: F,
        a: f64,
        b: f64,
        singular: &[f64],
        tol: f64,
    ) -> Result<Integral, NonFinite>
    where
        F: Fn(f64, &mut [f64]),
    {
        let rule = GaussLegendre::standard();
        let mut scratch = vec![0.0; dim];
        let mut gauss = |lo: f64, hi: f64| -> Result<Vec<f64>, NonFinite> {
            let mut acc = vec![0.0; dim];
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                let s = mid + half * x;
                f(s, &mut scratch);
                for (slot, v) in acc.iter_mut().zip(&scratch) {
                    if !v.is_finite() {
                        return Err(NonFinite { x: s, value: *v });
                    }
                    *slot += w * half * v;
                }
            }
            Ok(acc)
        };

        if !(b > a) {
            return Ok(Integral { value: vec![0.0; dim], error_estimate: 0.0, panels: 0, converged: true });
        }

        let mut seq = 0usize;
        let mut make_panel = |lo: f64, hi: f64, coarse: Option<Vec<f64>>| -> Result<Panel, NonFinite> {
            let mid = 0.5 * (lo + hi);
            let coarse = match coarse {
                Some(c) => c,
                None => gauss(lo, hi)?,
            };
            let left = gauss(lo, mid)?;
            let right = gauss(mid, hi)?;
            let mut err: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for k in 0..dim {
                let fine = left[k] + right[k];
                err = err.max((fine - coarse[k]).abs());
                scale = scale.max(fine.abs());
            }
            // differences at the rounding level carry no information
            if err <= 64.0 * f64::EPSILON * scale {
                err = 0.0;
            }
            seq += 1;
            Ok(Panel { a: lo, b: hi, left, right, err, seq })
        };

        let mut heap = BinaryHeap::new();
        let mut frozen: Vec<Panel> = Vec::new();
        for (lo, hi) in self.initial_panels(a, b, singular) {
            heap.push(make_panel(lo, hi, None)?);
        }
        let mut count = heap.len();
        let mut total: f64 = heap.iter().map(|p| p.err).sum();

        while total > tol && count < self.max_panels {
            let Some(worst) = heap.pop() else { break };
            if worst.err == 0.0 {
                heap.push(worst);
                break;
            }
            if worst.b - worst.a < 2.0 * self.min_width {
                frozen.push(worst);
                continue;
            }
            let mid = 0.5 * (worst.a + worst.b);
            let left = make_panel(worst.a, mid, Some(worst.left))?;
            let right = make_panel(mid, worst.b, Some(worst.right))?;
            total += left.err + right.err - worst.err;
            heap.push(left);
            heap.push(right);
            count += 1;
        }

        let mut panels: Vec<Panel> = heap.into_vec();
        panels.extend(frozen);
        // deterministic summation order, left to right
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        let mut value = vec![0.0; dim];
        let mut error_estimate = 0.0;
        for p in &panels {
            for (slot, v) in value.iter_mut().zip(p.fine()) {
                *slot += v;
            }
            error_estimate += p.err;
        }
        Ok(Integral { value, error_estimate, panels: panels.len(), converged: error_estimate <= tol })
    }

    fn initial_panels(&self, a: f64, b: f64, singular: &[f64]) -> Vec<(f64, f64)> {
        let mut cuts: Vec<f64> = singular.iter().copied().filter(|&s| s > a && s < b).collect();
        cuts.push(a);
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let is_singular = |x: f64| singular.contains(&x);

        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let grade_left = is_singular(lo);
            let grade_right = is_singular(hi);
            match (grade_left, grade_right) {
                (false, false) => out.push((lo, hi)),
                (true, false) => out.extend(self.graded(lo, hi)),
                (false, true) => {
                    let mut g: Vec<(f64, f64)> =
                        self.graded(-hi, -lo).into_iter().map(|(x, y)| (-y, -x)).collect();
                    g.reverse();
                    out.extend(g);
                }
                (true, true) => {
                    let mid = 0.5 * (lo + hi);
                    out.extend(self.graded(lo, mid));
                    let mut g: Vec<(f64, f64)> =
                        self.graded(-hi, -mid).into_iter().map(|(x, y)| (-y, -x)).collect();
                    g.reverse();
                    out.extend(g);
                }
            }
        }
        out
    }

    /// Panels on `[s, b]` whose widths halve towards the singular point `s`.
    fn graded(&self, s: f64, b: f64) -> Vec<(f64, f64)> {
        let mut edges = vec![b];
        let mut width = b - s;
        while width > self.min_width {
            width *= self.grading_ratio;
            edges.push(s + width);
        }
        edges.push(s);
        edges.reverse();
        edges.dedup();
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }
}
