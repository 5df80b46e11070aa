//! Gauss-Legendre rules and the quadrature settings shared by every
//! integration path.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{CurveletError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Gauss,
    UniformFft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Nodes per axis (per panel) before phase refinement.
    pub base_order: usize,
    /// Extra nodes per `pi` of phase variation.
    pub resolution_factor: f64,
    pub max_nodes_per_axis: usize,
    pub grid: GridKind,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            base_order: 24,
            resolution_factor: 4.0,
            max_nodes_per_axis: 4096,
            grid: GridKind::Gauss,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.base_order < 8 {
            return Err(CurveletError::Degenerate(format!(
                "base_order {} must be >= 8",
                self.base_order
            )));
        }
        if !(self.resolution_factor >= 2.0) {
            return Err(CurveletError::Degenerate(format!(
                "resolution_factor {} must be >= 2",
                self.resolution_factor
            )));
        }
        if self.max_nodes_per_axis < self.base_order {
            return Err(CurveletError::Degenerate(
                "max_nodes_per_axis is below base_order".into(),
            ));
        }
        Ok(())
    }

    /// Node count for an axis across which the phase varies by `span` radians.
    pub fn nodes_for_span(&self, span: f64) -> usize {
        self.base_order + (span.abs() / PI * self.resolution_factor).ceil() as usize
    }

    /// Same settings with twice the base order, used for error estimates.
    pub fn refined(&self) -> Self {
        Self {
            base_order: self.base_order * 2,
            resolution_factor: self.resolution_factor * 2.0,
            max_nodes_per_axis: self.max_nodes_per_axis * 2,
            grid: self.grid,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        (
            self.nodes.iter().map(|x| c + h * x).collect(),
            self.weights.iter().map(|w| h * w).collect(),
        )
    }
}

fn compute_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Memoized Gauss-Legendre rule with `n` nodes.
pub fn gauss_legendre(n: usize) -> Arc<GaussRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(compute_rule(n.max(1)));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

/// Composite rule: one Gauss panel of `n` nodes between consecutive breakpoints.
pub fn composite(breaks: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(n);
    let mut xs = Vec::with_capacity(n * breaks.len());
    let mut ws = Vec::with_capacity(n * breaks.len());
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (x, wt) = rule.on(w[0], w[1]);
            xs.extend(x);
            ws.extend(wt);
        }
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        for n in [1usize, 2, 5, 8, 24, 65] {
            let r = gauss_legendre(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
            for p in 0..(2 * n) {
                let approx: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(p as i32))
                    .sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-12, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn smooth_integral() {
        let (x, w) = gauss_legendre(30).on(0.0, PI);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_order_nodes_sorted() {
        let r = gauss_legendre(1000);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        let bad = QuadratureSpec { base_order: 4, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = QuadratureSpec { resolution_factor: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert_eq!(QuadratureSpec::default().nodes_for_span(PI), 28);
    }
}
