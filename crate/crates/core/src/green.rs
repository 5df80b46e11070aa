//! Klein-Gordon Green kernel matrix entries and decay fits.

use num_complex::Complex64;
use serde::Serialize;

use crate::curvelet::{q_of, Curvelet};
use crate::error::{CurveletError, Result};
use crate::geometry::{Case, FourierKey, IntRange};
use crate::gram::{block_with, overlap_integral, PairResult};
use crate::linalg::Vec4;
use crate::metric::distance;
use crate::quadrature::QuadratureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenEntry {
    pub pair: PairResult,
    /// Bound on `1/|q|` over the overlap of the two supports.
    pub symbol_bound: f64,
    /// `|value| 2^(2 max(m, m'))`.
    pub rescaled_abs: f64,
}

fn require_kg(key: &FourierKey) -> Result<()> {
    if key.case != Case::Kg {
        return Err(CurveletError::InvalidIndex("Green entries need Klein-Gordon indices".into()));
    }
    Ok(())
}

/// `1/|q|` is at most `4^-(m - 1)` on a window with main scale `m`; on the
/// overlap the larger main scale wins.
fn symbol_bound(ma: i32, mb: i32) -> f64 {
    (-2.0 * (ma.max(mb) - 1) as f64).exp2()
}

fn rescale(value: Complex64, ma: i32, mb: i32) -> f64 {
    value.norm() * (2.0 * ma.max(mb) as f64).exp2()
}

/// `G = (2 pi)^-n int psi_hat_a conj(psi_hat_b) / (q + i eps) d xi`.
pub fn green_entry_shifted(a: &Curvelet, b: &Curvelet, quad: &QuadratureSpec, eps: f64) -> Result<GreenEntry> {
    require_kg(&a.index.key)?;
    require_kg(&b.index.key)?;
    let mu = a.mu();
    let symbol = move |xi: &Vec4| Complex64::new(q_of(xi, mu), eps).inv();
    let (value, quad_meta, _) = overlap_integral(a, b, quad, &symbol)?;
    let (ma, mb) = (a.index.key.m, b.index.key.m);
    Ok(GreenEntry {
        pair: PairResult { a: a.index, b: b.index, value, distance: distance(a, b)?, quad: quad_meta },
        symbol_bound: symbol_bound(ma, mb),
        rescaled_abs: rescale(value, ma, mb),
    })
}

/// `G_{a,b} = (2 pi)^-n int psi_hat_a conj(psi_hat_b) / q d xi`.
pub fn green_entry(a: &Curvelet, b: &Curvelet, quad: &QuadratureSpec) -> Result<GreenEntry> {
    green_entry_shifted(a, b, quad, 0.0)
}

/// Green entries of an anchor against every lattice translate of a second
/// window in the offset box, by one FFT over the second window's box.
pub fn green_block(anchor: &Curvelet, b_key: &FourierKey, offsets: &[IntRange], quad: &QuadratureSpec) -> Result<Vec<GreenEntry>> {
    require_kg(&anchor.index.key)?;
    require_kg(b_key)?;
    let mu = anchor.mu();
    let symbol = move |xi: &Vec4| Complex64::new(1.0 / q_of(xi, mu), 0.0);
    let ma = anchor.index.key.m;
    Ok(block_with(anchor, b_key, offsets, quad, &symbol)?
        .into_iter()
        .map(|(pair, _)| GreenEntry {
            pair,
            symbol_bound: symbol_bound(ma, b_key.m),
            rescaled_abs: rescale(pair.value, ma, b_key.m),
        })
        .collect())
}

/// One entry of a decay fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecaySample {
    pub total: f64,
    pub rescaled_abs: f64,
    pub abs: f64,
    pub quad_err: f64,
    pub m: (i32, i32),
}

impl From<&GreenEntry> for DecaySample {
    fn from(e: &GreenEntry) -> Self {
        let (ka, kb) = (&e.pair.a.key, &e.pair.b.key);
        DecaySample {
            total: e.pair.distance.total,
            rescaled_abs: e.rescaled_abs,
            abs: e.pair.value.norm(),
            quad_err: e.pair.quad.err,
            m: (ka.m, kb.m),
        }
    }
}

impl From<&PairResult> for DecaySample {
    fn from(p: &PairResult) -> Self {
        let (ma, mb) = (p.a.key.m, p.b.key.m);
        DecaySample {
            total: p.distance.total,
            rescaled_abs: rescale(p.value, ma, mb),
            abs: p.value.norm(),
            quad_err: p.quad.err,
            m: (ma, mb),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    pub pairs_used: usize,
    /// Least-squares fit `rescaled_abs = C total^-N`.
    pub fitted_c: f64,
    pub fitted_n: f64,
    /// Largest absolute residual of the least-squares fit, in decades.
    pub residual_max: f64,
    /// Fit of the 95th percentile line: 95% of the points lie on or below
    /// `envelope_c total^-envelope_n`.
    pub envelope_c: f64,
    pub envelope_n: f64,
    pub scale_range: (i32, i32),
    pub distance_range: (f64, f64),
}

pub const MIN_DECAY_ENTRIES: usize = 30;
const ENVELOPE_QUANTILE: f64 = 0.95;

/// Fits `log rescaled_abs = log C - N log total` over samples with
/// `total >= 2` and `abs >= 10 quad_err`.
pub fn decay_fit(samples: &[DecaySample]) -> Result<DecayReport> {
    let used: Vec<&DecaySample> = samples
        .iter()
        .filter(|s| s.total >= 2.0 && s.abs > 0.0 && s.abs >= 10.0 * s.quad_err && s.rescaled_abs > 0.0)
        .collect();
    if used.len() < MIN_DECAY_ENTRIES {
        return Err(CurveletError::TooFewEntries { usable: used.len(), required: MIN_DECAY_ENTRIES });
    }
    let xs: Vec<f64> = used.iter().map(|s| s.total.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|s| s.rescaled_abs.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(CurveletError::Degenerate("all distances are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_max = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max)
        / std::f64::consts::LN_10;

    let (env_slope, env_intercept) = quantile_line(&xs, &ys, ENVELOPE_QUANTILE);

    let scale_range = used.iter().fold((i32::MAX, i32::MIN), |(lo, hi), s| (lo.min(s.m.0.min(s.m.1)), hi.max(s.m.0.max(s.m.1))));
    let distance_range = used.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.total), hi.max(s.total)));
    Ok(DecayReport {
        pairs_used: used.len(),
        fitted_c: intercept.exp(),
        fitted_n: -slope,
        residual_max,
        envelope_c: env_intercept.exp(),
        envelope_n: -env_slope,
        scale_range,
        distance_range,
    })
}

fn pinball(xs: &[f64], ys: &[f64], slope: f64, tau: f64) -> (f64, f64) {
    let mut r: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - slope * x).collect();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((tau * r.len() as f64).ceil() as usize).clamp(1, r.len()) - 1;
    let b = r[idx];
    let loss = r.iter().map(|v| if *v >= b { tau * (v - b) } else { (1.0 - tau) * (b - v) }).sum();
    (loss, b)
}

/// Linear quantile regression. For a fixed slope the optimal intercept is
/// the `tau` quantile of the residuals; the profiled loss is convex in the
/// slope and minimized by golden-section search.
fn quantile_line(xs: &[f64], ys: &[f64], tau: f64) -> (f64, f64) {
    let (mut a, mut b) = (-50.0f64, 50.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = pinball(xs, ys, c, tau).0;
    let mut fd = pinball(xs, ys, d, tau).0;
    for _ in 0..200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = pinball(xs, ys, c, tau).0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = pinball(xs, ys, d, tau).0;
        }
    }
    let slope = 0.5 * (a + b);
    (slope, pinball(xs, ys, slope, tau).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n: usize, f: impl Fn(usize, f64) -> f64) -> Vec<DecaySample> {
        (0..n)
            .map(|i| {
                let total = 2.0 * (500f64).powf(i as f64 / (n - 1) as f64);
                let r = f(i, total);
                DecaySample { total, rescaled_abs: r, abs: r, quad_err: 0.0, m: (0, 0) }
            })
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let s = synthetic(40, |_, t| t.powi(-5));
        let r = decay_fit(&s).unwrap();
        assert!((r.fitted_n - 5.0).abs() < 1e-10);
        assert!((r.fitted_c - 1.0).abs() < 1e-10);
        assert!(r.residual_max < 1e-10);
        assert!((r.envelope_n - 5.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_entries() {
        let s = synthetic(40, |i, t| if i < 35 { 0.0 } else { t.powi(-5) });
        assert!(matches!(decay_fit(&s), Err(CurveletError::TooFewEntries { usable: 5, .. })));
    }

    #[test]
    fn envelope_lies_above_most_points() {
        let s = synthetic(100, |i, t| t.powi(-4) * if i % 3 == 0 { 1.0 } else { 0.1 });
        let r = decay_fit(&s).unwrap();
        let above = s.iter().filter(|p| p.rescaled_abs <= r.envelope_c * p.total.powf(-r.envelope_n) * (1.0 + 1e-9)).count();
        assert!(above >= 95, "{above}");
        assert!((r.envelope_n - 4.0).abs() < 1e-3);
    }

    #[test]
    fn wave_rejected() {
        use crate::geometry::sphere::DirectionLabel;
        use crate::geometry::SectorLabel;
        let key = FourierKey { case: Case::Wave, d: 1, m: 0, j: 2, direction: DirectionLabel::Sign(1), sector: SectorLabel::TP };
        let a = Curvelet::new(key.with_k([0; 4]), 0.0).unwrap();
        assert!(green_entry(&a, &a, &QuadratureSpec::default()).is_err());
    }
}
