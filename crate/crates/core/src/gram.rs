//! Inner products of curvelets, the tight-frame normalizer and Parseval
//! checks.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::curvelet::{window, within_scale_support, Curvelet};
use crate::error::{CurveletError, Result};
use crate::fft::{fft_nd, next_pow2};
use crate::geometry::sphere::DirectionLabel;
use crate::geometry::{adapted_frame, AdaptedFrame, Case, CurveletIndex, EtaBox, FourierKey, IntRange, SectorLabel, ETA_JACOBIAN};
use crate::linalg::{minkowski, Vec4};
use crate::metric::{distance, DistanceBreakdown};
use crate::natural::Domain;
use crate::quadrature::{gauss_legendre, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadMeta {
    /// Total number of integrand samples at the reported resolution.
    pub nodes: usize,
    /// Difference to the value at the second resolution.
    pub err: f64,
    /// Node budget exceeded or error above tolerance.
    pub flagged: bool,
    /// Window evaluations that were nonzero outside their scale bounds.
    pub support_violations: usize,
}

impl QuadMeta {
    pub const EXACT: QuadMeta = QuadMeta { nodes: 0, err: 0.0, flagged: false, support_violations: 0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairResult {
    pub a: CurveletIndex,
    pub b: CurveletIndex,
    pub value: Complex64,
    pub distance: DistanceBreakdown,
    pub quad: QuadMeta,
}

/// `c` with `c^2 = J prod a_alpha`, which makes every window's lattice of
/// translates a Parseval frame for functions supported in its box.
pub fn frame_normalizer(eta_box: &EtaBox, lattice_spacings: &[f64], d: usize) -> f64 {
    debug_assert_eq!(eta_box.lo.len(), d + 1);
    debug_assert!(eta_box
        .sides()
        .iter()
        .zip(lattice_spacings)
        .all(|(l, a)| (l * a - 2.0 * PI).abs() < 1e-9));
    (ETA_JACOBIAN * lattice_spacings.iter().product::<f64>()).sqrt()
}

/// Fourier multiplier applied between the two windows.
pub(crate) type Multiplier<'a> = &'a (dyn Fn(&Vec4) -> Complex64 + Sync);

pub(crate) fn unit_multiplier(_: &Vec4) -> Complex64 {
    Complex64::new(1.0, 0.0)
}

pub(crate) fn check_compatible(a: &AdaptedFrame, b: &AdaptedFrame) -> Result<()> {
    if a.key.case != b.key.case || a.key.d != b.key.d || a.mu != b.mu {
        return Err(CurveletError::Mismatch(format!(
            "{}/d={}/mu={} vs {}/d={}/mu={}",
            a.key.case.name(),
            a.key.d,
            a.mu,
            b.key.case.name(),
            b.key.d,
            b.mu
        )));
    }
    Ok(())
}

/// Whether the two Fourier supports can overlap, judged by sectors,
/// directions and support boxes. `false` means the product of windows is
/// identically zero.
pub(crate) fn supports_may_overlap(a: &AdaptedFrame, b: &AdaptedFrame) -> bool {
    if a.key.sector != b.key.sector {
        return false;
    }
    if let (DirectionLabel::Sign(x), DirectionLabel::Sign(y)) = (a.key.direction, b.key.direction) {
        if x != y {
            return false;
        }
    }
    if (a.key.m - b.key.m).abs() >= 2 || (a.key.j - b.key.j).abs() >= 2 {
        return false;
    }
    // box of a mapped into b's coordinates
    let n = a.n();
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for corner in 0..(1usize << n) {
        let mut eta = [0.0; 4];
        for (ax, e) in eta.iter_mut().enumerate().take(n) {
            *e = if corner >> ax & 1 == 1 { a.eta_box.hi[ax] } else { a.eta_box.lo[ax] };
        }
        let xi = a.from_eta(&eta[..n]);
        let mapped = b.to_eta(&xi);
        for ax in 0..n {
            lo[ax] = lo[ax].min(mapped[ax]);
            hi[ax] = hi[ax].max(mapped[ax]);
        }
    }
    (0..n).all(|ax| lo[ax] < b.eta_box.hi[ax] && hi[ax] > b.eta_box.lo[ax])
}

/// Window value, counting nonzero values outside the scale bounds.
#[inline]
fn audited_window(key: &FourierKey, mu: f64, xi: &Vec4, violations: &AtomicUsize) -> f64 {
    let w = window(key, mu, xi);
    if w != 0.0 && !within_scale_support(key, mu, xi) {
        violations.fetch_add(1, Ordering::Relaxed);
    }
    w
}

/// `(2 pi)^-n c_a c_b int W_a W_b M e^{i xi.(x_a - x_b)} d xi` with an error
/// estimate from a second, refined rule.
pub(crate) fn overlap_integral(
    a: &Curvelet,
    b: &Curvelet,
    quad: &QuadratureSpec,
    mult: Multiplier,
) -> Result<(Complex64, QuadMeta, Option<Domain>)> {
    quad.validate()?;
    let (fa, fb) = (&a.frame, &b.frame);
    check_compatible(fa, fb)?;
    if !supports_may_overlap(fa, fb) {
        return Ok((Complex64::new(0.0, 0.0), QuadMeta::EXACT, None));
    }
    let dom = match Domain::of_frame(fa).restrict_to(fb.key.m, fb.key.j) {
        Some(d) => d,
        None => return Ok((Complex64::new(0.0, 0.0), QuadMeta::EXACT, None)),
    };
    let y = crate::linalg::sub4(&a.x_center, &b.x_center);
    let spans = dom.phase_spans(&y);
    let panels: Vec<usize> = dom.breaks().iter().map(|b| b.len() - 1).collect();
    let mut flagged = false;
    let mut counts_for = |spec: &QuadratureSpec| -> Vec<usize> {
        spans
            .iter()
            .map(|s| {
                let n = spec.nodes_for_span(*s);
                if n > spec.max_nodes_per_axis {
                    flagged = true;
                }
                n.min(spec.max_nodes_per_axis)
            })
            .collect()
    };
    let counts = counts_for(quad);
    let counts_ref = counts_for(&quad.refined());
    let (ka, kb) = (a.index.key, b.index.key);
    let mu = fa.mu;
    let violations = AtomicUsize::new(0);
    let integrand = |xi: &Vec4| {
        let wa = audited_window(&ka, mu, xi, &violations);
        if wa == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let wb = audited_window(&kb, mu, xi, &violations);
        if wb == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(wa * wb, minkowski(xi, &y)) * mult(xi)
    };
    let v = dom.integrate(&counts, integrand);
    let v_ref = dom.integrate(&counts_ref, integrand);
    let scale = fa.normalizer * fb.normalizer / (2.0 * PI).powi(fa.n() as i32);
    let value = v * scale;
    let err = ((v_ref - v) * scale).norm();
    let nodes = counts.iter().zip(&panels).map(|(c, p)| c * p).product();
    let floor = (-((fa.n() as i32) * fa.key.m.max(fb.key.m)) as f64).exp2();
    if err >= 1e-6 * value.norm().max(floor) {
        flagged = true;
    }
    let meta = QuadMeta { nodes, err, flagged, support_violations: violations.into_inner() };
    Ok((value, meta, Some(dom)))
}

/// `<psi_a, psi_b> = (2 pi)^-n int psi_hat_a conj(psi_hat_b) d xi`.
pub fn inner(a: &Curvelet, b: &Curvelet, quad: &QuadratureSpec) -> Result<PairResult> {
    let (value, quad_meta, _) = overlap_integral(a, b, quad, &unit_multiplier)?;
    Ok(PairResult { a: a.index, b: b.index, value, distance: distance(a, b)?, quad: quad_meta })
}

/// Translation offsets of a block, one inclusive range per lattice axis.
pub type OffsetBox = Vec<IntRange>;

/// All offsets in a box, in lexicographic order.
pub fn offsets_in(bx: &[IntRange]) -> Vec<[i64; 4]> {
    let mut out = vec![[0i64; 4]];
    for (ax, r) in bx.iter().enumerate() {
        let mut next = Vec::with_capacity(out.len() * (r.hi - r.lo + 1).max(0) as usize);
        for k in &out {
            for v in r.iter() {
                let mut kk = *k;
                kk[ax] = v;
                next.push(kk);
            }
        }
        out = next;
    }
    out
}

/// Grid shape for a block: a power of two per axis with at least four
/// points per `pi` of phase at the largest offset and at least `min_grid`.
pub(crate) fn block_shape(a: &Curvelet, fb: &AdaptedFrame, ks: &[[i64; 4]], min_grid: usize, max_grid: usize) -> Result<Vec<usize>> {
    let sides = fb.eta_box.sides();
    let p_anchor = fb.phase_coefficients(&a.x_center);
    (0..fb.n())
        .map(|ax| {
            let kmax = ks.iter().map(|k| k[ax].unsigned_abs()).max().unwrap_or(0) as f64;
            let span = p_anchor[ax].abs() * sides[ax] / PI;
            let required = (4.0 * (2.0 * kmax + span)).ceil() as usize;
            let nn = next_pow2(required.max(min_grid));
            if nn > max_grid {
                return Err(CurveletError::InsufficientResolution { required: nn, available: max_grid });
            }
            Ok(nn)
        })
        .collect()
}

/// Values `(2pi)^-n c_a c_b int W_a W_b M e^{i xi.x_a} e^{-i xi.x_b(k)} d xi`
/// for every `k` in `ks`, by one FFT of the gridded integrand over b's box.
pub(crate) fn block_values(
    a: &Curvelet,
    fb: &AdaptedFrame,
    ks: &[[i64; 4]],
    shape: &[usize],
    mult: Multiplier,
) -> (Vec<Complex64>, usize) {
    let n = fb.n();
    let sides = fb.eta_box.sides();
    let total: usize = shape.iter().product();
    let ka = a.index.key;
    let kb = fb.key;
    let mu = fb.mu;
    let lo = fb.eta_box.lo.clone();
    let x_a = a.x_center;
    let violations = AtomicUsize::new(0);
    let mut data: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut eta = [0.0; 4];
            let mut r = flat;
            for ax in (0..n).rev() {
                eta[ax] = lo[ax] + sides[ax] * (r % shape[ax]) as f64 / shape[ax] as f64;
                r /= shape[ax];
            }
            let xi = fb.from_eta(&eta[..n]);
            let wb = audited_window(&kb, mu, &xi, &violations);
            if wb == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let wa = audited_window(&ka, mu, &xi, &violations);
            if wa == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::from_polar(wa * wb, minkowski(&xi, &x_a)) * mult(&xi)
        })
        .collect();
    fft_nd(&mut data, shape);
    let cell: f64 = sides.iter().zip(shape).map(|(l, nn)| l / *nn as f64).product();
    let scale = a.frame.normalizer * fb.normalizer / (2.0 * PI).powi(n as i32) / ETA_JACOBIAN * cell;
    let sign = [1i64, 1, -1, -1];
    let values = ks
        .iter()
        .map(|k| {
            let mut flat = 0usize;
            let mut phase = 0.0;
            for ax in 0..n {
                let kk = sign[ax] * k[ax];
                flat = flat * shape[ax] + kk.rem_euclid(shape[ax] as i64) as usize;
                phase -= kk as f64 * fb.lattice_spacings[ax] * lo[ax];
            }
            data[flat] * Complex64::from_polar(scale, phase)
        })
        .collect();
    (values, violations.into_inner())
}

/// Minimal grid per axis in 1+1 dimensions, in units of `base_order`.
const BLOCK_OVERSAMPLE_1D: usize = 8;

/// Block of pair values for one anchor against all lattice translates of a
/// second window within an offset box.
pub(crate) fn block_with(
    anchor: &Curvelet,
    b_key: &FourierKey,
    offsets: &[IntRange],
    quad: &QuadratureSpec,
    mult: Multiplier,
) -> Result<Vec<(PairResult, Curvelet)>> {
    quad.validate()?;
    let fb = Arc::new(adapted_frame(b_key, anchor.frame.mu)?);
    check_compatible(&anchor.frame, &fb)?;
    let n = fb.n();
    if offsets.len() != n {
        return Err(CurveletError::InvalidIndex(format!("expected {n} offset ranges, got {}", offsets.len())));
    }
    let ks = offsets_in(offsets);
    let others: Vec<Curvelet> = ks
        .iter()
        .map(|k| Curvelet::with_frame(b_key.with_k(*k), fb.clone()))
        .collect::<Result<_>>()?;
    if !supports_may_overlap(&anchor.frame, &fb) {
        return others
            .into_iter()
            .map(|b| {
                let pr = PairResult {
                    a: anchor.index,
                    b: b.index,
                    value: Complex64::new(0.0, 0.0),
                    distance: distance(anchor, &b)?,
                    quad: QuadMeta::EXACT,
                };
                Ok((pr, b))
            })
            .collect();
    }
    let oversample = if n == 2 { BLOCK_OVERSAMPLE_1D } else { 1 };
    let shape = block_shape(anchor, &fb, &ks, quad.base_order * oversample, quad.max_nodes_per_axis)?;
    let (values, violations) = block_values(anchor, &fb, &ks, &shape, mult);
    let total: usize = shape.iter().product();
    // second resolution for the error estimate
    let alt_shape: Vec<usize> = if total << n <= 1 << 24 {
        shape.iter().map(|s| 2 * s).collect()
    } else {
        shape.iter().map(|s| s / 2).collect()
    };
    let alt = block_values(anchor, &fb, &ks, &alt_shape, mult);
    let floor = (-((n as i32) * anchor.frame.key.m.max(b_key.m)) as f64).exp2();
    others
        .into_iter()
        .zip(values.iter().zip(&alt.0))
        .map(|(b, (v, w))| {
            let err = (v - w).norm();
            let pr = PairResult {
                a: anchor.index,
                b: b.index,
                value: *v,
                distance: distance(anchor, &b)?,
                quad: QuadMeta {
                    nodes: total,
                    err,
                    flagged: err >= 1e-6 * v.norm().max(floor),
                    support_violations: violations,
                },
            };
            Ok((pr, b))
        })
        .collect()
}

/// `<psi_anchor, psi_{b_key, k}>` for every `k` in the offset box, from one
/// FFT over b's support box. The grid has at least `8 base_order` points per
/// axis in 1+1 dimensions and `base_order` in 3+1, padded to a power of two
/// with at least four points per `pi` of phase at the largest offset.
pub fn gram_block(anchor: &Curvelet, b_key: &FourierKey, offsets: &[IntRange], quad: &QuadratureSpec) -> Result<Vec<PairResult>> {
    Ok(block_with(anchor, b_key, offsets, quad, &unit_multiplier)?
        .into_iter()
        .map(|(p, _)| p)
        .collect())
}

/// A test function for the Parseval check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TestFunction {
    /// A frame element.
    Curvelet(CurveletIndex),
    /// `B((s - s_c)/r_s) B((t - t_c)/r_t) e^{i xi . y}` in the parameters of
    /// `reference`, where `B` is the angular bump rescaled to `[-1, 1]`.
    Bump { reference: FourierKey, center: [f64; 2], radius: [f64; 2], shift: Vec4 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameCheckEntry {
    /// `sum_Delta |<phi, psi_Delta>|^2`.
    pub sum: f64,
    /// `||phi||^2`.
    pub norm2: f64,
    pub ratio: f64,
    pub deviation: f64,
    /// Fraction of `|phi_hat|^2` mass where the configured windows do not
    /// sum to one.
    pub leakage: f64,
    pub warning: bool,
    pub windows_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameCheckConfig {
    pub case: Case,
    pub mu: f64,
    pub m_range: (i32, i32),
    pub j_range: (i32, i32),
    /// Minimal FFT grid per axis for the lattice sums.
    pub grid: usize,
    pub quad: QuadratureSpec,
}

struct Phi {
    sector: SectorLabel,
    direction: DirectionLabel,
    case: Case,
    mu: f64,
    /// Parameter rectangle in absolute units `(m + s, j + t)`.
    s_abs: (f64, f64),
    t_abs: (f64, f64),
    cuts: [Vec<f64>; 2],
    m0: i32,
    j0: i32,
    shift: Vec4,
    eval: Box<dyn Fn(&Vec4) -> Complex64 + Sync>,
}

fn unit_bump(x: f64) -> f64 {
    crate::wavelet1d::angular_bump(2.0 * PI * x)
}

impl Phi {
    fn new(tf: &TestFunction, cfg: &FrameCheckConfig) -> Result<Self> {
        match tf {
            TestFunction::Curvelet(idx) => {
                let c = Curvelet::new(*idx, cfg.mu)?;
                let key = idx.key;
                let mu = c.frame.mu;
                let norm = c.frame.normalizer;
                let x = c.x_center;
                Ok(Phi {
                    sector: key.sector,
                    direction: key.direction,
                    case: key.case,
                    mu,
                    s_abs: (key.m as f64 - 1.0, key.m as f64 + 1.0),
                    t_abs: (key.j as f64 - 1.0, key.j as f64 + 1.0),
                    cuts: [Vec::new(), Vec::new()],
                    m0: key.m,
                    j0: key.j,
                    shift: x,
                    eval: Box::new(move |xi| Complex64::from_polar(norm * window(&key, mu, xi), minkowski(xi, &x))),
                })
            }
            TestFunction::Bump { reference, center, radius, shift } => {
                if !(radius[0] > 0.0 && radius[1] > 0.0) {
                    return Err(CurveletError::Degenerate("bump radius must be positive".into()));
                }
                let r = *reference;
                let mu = r.case.effective_mu(cfg.mu);
                let (c, rr, y) = (*center, *radius, *shift);
                Ok(Phi {
                    sector: r.sector,
                    direction: r.direction,
                    case: r.case,
                    mu,
                    s_abs: (r.m as f64 + c[0] - rr[0], r.m as f64 + c[0] + rr[0]),
                    t_abs: (r.j as f64 + c[1] - rr[1], r.j as f64 + c[1] + rr[1]),
                    cuts: [vec![c[0]], vec![c[1]]],
                    m0: r.m,
                    j0: r.j,
                    shift: y,
                    eval: Box::new(move |xi| {
                        let q = crate::curvelet::q_of(xi, mu);
                        if !r.sector.contains(xi[0], q) || q == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        if crate::curvelet::angular_factor(&r.direction, r.j, &[xi[1], xi[2], xi[3]]) == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        let s = 0.5 * q.abs().log2() - r.m as f64;
                        let t = (xi[0] * xi[0] / q.abs()).log2() - r.j as f64;
                        let b = unit_bump((s - c[0]) / rr[0]) * unit_bump((t - c[1]) / rr[1]);
                        if b == 0.0 {
                            return Complex64::new(0.0, 0.0);
                        }
                        Complex64::from_polar(b, minkowski(xi, &y))
                    }),
                })
            }
        }
    }

    fn domain(&self) -> Domain {
        let e = match self.direction {
            DirectionLabel::Sign(s) => [s as f64, 0.0, 0.0],
            _ => [0.0; 3],
        };
        Domain {
            m: self.m0,
            j: self.j0,
            time_sign: self.sector.time_sign as f64,
            cone_sign: self.sector.cone_sign as f64,
            mu2: self.mu * self.mu,
            e_vec: e,
            s: (self.s_abs.0 - self.m0 as f64, self.s_abs.1 - self.m0 as f64),
            t: (self.t_abs.0 - self.j0 as f64, self.t_abs.1 - self.j0 as f64),
            cuts: self.cuts.clone(),
            angular: None,
        }
    }

    fn touches(&self, key: &FourierKey) -> bool {
        key.sector == self.sector
            && key.direction == self.direction
            && (key.m as f64 - 1.0) < self.s_abs.1
            && (key.m as f64 + 1.0) > self.s_abs.0
            && (key.j as f64 - 1.0) < self.t_abs.1
            && (key.j as f64 + 1.0) > self.t_abs.0
    }
}

/// Parseval check in 1+1 dimensions: `sum |<phi, psi_Delta>|^2 / ||phi||^2`
/// over every window in the configured scale ranges and all translates.
pub fn frame_check(cfg: &FrameCheckConfig, tests: &[TestFunction]) -> Result<Vec<FrameCheckEntry>> {
    cfg.quad.validate()?;
    let mut keys = Vec::new();
    for m in cfg.m_range.0..=cfg.m_range.1 {
        for j in cfg.j_range.0.max(1)..=cfg.j_range.1 {
            if 2 * m + j < 0 {
                continue;
            }
            for dir in [1i8, -1] {
                for sector in SectorLabel::ALL {
                    let key = FourierKey { case: cfg.case, d: 1, m, j, direction: DirectionLabel::Sign(dir), sector };
                    if crate::geometry::support_nonempty(cfg.case, m, j, sector, cfg.mu) {
                        keys.push(key);
                    }
                }
            }
        }
    }
    tests
        .iter()
        .map(|tf| {
            if let TestFunction::Curvelet(idx) = tf {
                if idx.key.d != 1 {
                    return Err(CurveletError::InvalidIndex("frame_check is implemented for d = 1".into()));
                }
            }
            if let TestFunction::Bump { reference, .. } = tf {
                if reference.d != 1 {
                    return Err(CurveletError::InvalidIndex("frame_check is implemented for d = 1".into()));
                }
            }
            let phi = Phi::new(tf, cfg)?;
            if phi.case != cfg.case {
                return Err(CurveletError::Mismatch("test function case differs from configuration".into()));
            }
            let touched: Vec<&FourierKey> = keys.iter().filter(|k| phi.touches(k)).collect();

            // norm and leakage by Gauss quadrature in natural parameters
            let dom = phi.domain();
            let spans = dom.phase_spans(&phi.shift);
            let counts: Vec<usize> = spans.iter().map(|s| 2 * cfg.quad.nodes_for_span(*s)).collect();
            let mu = phi.mu;
            let norm_int = dom.integrate(&counts, |xi| Complex64::new((phi.eval)(xi).norm_sqr(), 0.0)).re;
            let deficit = dom
                .integrate(&counts, |xi| {
                    let p = (phi.eval)(xi).norm_sqr();
                    if p == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let cover: f64 = touched.iter().map(|k| window(k, mu, xi).powi(2)).sum();
                    Complex64::new(p * (1.0 - cover).max(0.0), 0.0)
                })
                .re;
            let norm2 = norm_int / (2.0 * PI).powi(2);
            if norm2 == 0.0 {
                return Err(CurveletError::Degenerate("test function has zero norm".into()));
            }
            let leakage = deficit / norm_int;

            let mut sum = 0.0;
            for key in &touched {
                let fb = adapted_frame(key, cfg.mu)?;
                sum += lattice_energy(&fb, &phi, cfg)?;
            }
            let ratio = sum / norm2;
            Ok(FrameCheckEntry {
                sum,
                norm2,
                ratio,
                deviation: ratio - 1.0,
                leakage,
                warning: leakage > 1e-8,
                windows_used: touched.len(),
            })
        })
        .collect()
}

/// `sum_k |<phi, psi_{b,k}>|^2` over all lattice points resolved by the grid.
fn lattice_energy(fb: &AdaptedFrame, phi: &Phi, cfg: &FrameCheckConfig) -> Result<f64> {
    let n = fb.n();
    let sides = fb.eta_box.sides();
    let p = fb.phase_coefficients(&phi.shift);
    let mut shape = Vec::with_capacity(n);
    for ax in 0..n {
        let span = p[ax].abs() * sides[ax] / PI;
        let nn = next_pow2(((4.0 * span).ceil() as usize).max(cfg.grid));
        if nn > cfg.quad.max_nodes_per_axis {
            return Err(CurveletError::InsufficientResolution { required: nn, available: cfg.quad.max_nodes_per_axis });
        }
        shape.push(nn);
    }
    let total: usize = shape.iter().product();
    let kb = fb.key;
    let mu = fb.mu;
    let lo = fb.eta_box.lo.clone();
    let mut data: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut eta = [0.0; 4];
            let mut r = flat;
            for ax in (0..n).rev() {
                eta[ax] = lo[ax] + sides[ax] * (r % shape[ax]) as f64 / shape[ax] as f64;
                r /= shape[ax];
            }
            let xi = fb.from_eta(&eta[..n]);
            let w = window(&kb, mu, &xi);
            if w == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            (phi.eval)(&xi) * w
        })
        .collect();
    fft_nd(&mut data, &shape);
    let cell: f64 = sides.iter().zip(&shape).map(|(l, nn)| l / *nn as f64).product();
    let scale = fb.normalizer / (2.0 * PI).powi(n as i32) / ETA_JACOBIAN * cell;
    let energy: f64 = data.iter().map(|z| z.norm_sqr()).sum();
    Ok(energy * scale * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizerOracle {
    /// `sum_{|k_a| <= K} |<W, psi_k>|^2` by direct quadrature per `k`.
    pub lattice_sum: f64,
    /// `(2 pi)^-n int W^4 d xi`.
    pub integral: f64,
}

/// Brute-force lattice Parseval sum in 1+1 dimensions with the window itself
/// as test function.
pub fn normalizer_oracle(key: &FourierKey, mu: f64, k_max: i64, nodes: usize) -> Result<NormalizerOracle> {
    if key.d != 1 {
        return Err(CurveletError::InvalidIndex("oracle is implemented for d = 1".into()));
    }
    let f = adapted_frame(key, mu)?;
    let bx = &f.eta_box;
    let (e0, w0) = gauss_legendre(nodes).on(bx.lo[0], bx.hi[0]);
    let (e1, w1) = gauss_legendre(nodes).on(bx.lo[1], bx.hi[1]);
    let mu = f.mu;
    // W^2 with weights, row = eta_0 node
    let w2: Vec<f64> = (0..nodes)
        .into_par_iter()
        .flat_map_iter(|a| {
            let f = &f;
            let (e1, w1) = (&e1, &w1);
            let (ea, wa) = (e0[a], w0[a]);
            (0..nodes).map(move |b| wa * w1[b] * window(key, mu, &f.from_eta(&[ea, e1[b]])).powi(2))
        })
        .collect();
    let ks: Vec<i64> = (-k_max..=k_max).collect();
    let a = &f.lattice_spacings;
    // T[k1][a] = sum_b W2[a][b] e^{-i k1 a1 eta1_b}
    let t: Vec<Complex64> = ks
        .par_iter()
        .flat_map_iter(|&k1| {
            let ph: Vec<Complex64> = e1.iter().map(|&e| Complex64::from_polar(1.0, -(k1 as f64) * a[1] * e)).collect();
            let w2 = &w2;
            (0..nodes)
                .map(move |r| w2[r * nodes..(r + 1) * nodes].iter().zip(&ph).fold(Complex64::new(0.0, 0.0), |s, (w, z)| s + z * *w))
                .collect::<Vec<_>>()
        })
        .collect();
    let scale = f.normalizer / (2.0 * PI).powi(2) / ETA_JACOBIAN;
    let lattice_sum: f64 = ks
        .par_iter()
        .map(|&k0| {
            let ph: Vec<Complex64> = e0.iter().map(|&e| Complex64::from_polar(1.0, -(k0 as f64) * a[0] * e)).collect();
            (0..ks.len())
                .map(|b| {
                    let row = &t[b * nodes..(b + 1) * nodes];
                    (row.iter().zip(&ph).fold(Complex64::new(0.0, 0.0), |s, (v, z)| s + v * z) * scale).norm_sqr()
                })
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let dom = Domain::of_frame(&f);
    let integral = dom.integrate(&[60, 60], |xi| Complex64::new(window(key, mu, xi).powi(4), 0.0)).re / (2.0 * PI).powi(2);
    Ok(NormalizerOracle { lattice_sum, integral })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(m: i32, j: i32) -> FourierKey {
        FourierKey { case: Case::Wave, d: 1, m, j, direction: DirectionLabel::Sign(1), sector: SectorLabel::TP }
    }

    #[test]
    fn normalizer_scaling() {
        for j in [2, 4] {
            let c0 = adapted_frame(&wave(0, j), 0.0).unwrap().normalizer;
            let c1 = adapted_frame(&wave(1, j), 0.0).unwrap().normalizer;
            assert!((c1 / c0 - 0.5).abs() < 1e-12, "j={j} ratio={}", c1 / c0);
        }
    }

    #[test]
    fn disjoint_is_exact_zero() {
        let a = Curvelet::new(wave(0, 2).with_k([0; 4]), 0.0).unwrap();
        let b = Curvelet::new(wave(3, 2).with_k([0; 4]), 0.0).unwrap();
        let r = inner(&a, &b, &QuadratureSpec::default()).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
        assert_eq!(r.quad.nodes, 0);
    }

    #[test]
    fn conjugate_symmetry() {
        let q = QuadratureSpec::default();
        let a = Curvelet::new(wave(0, 2).with_k([1, 0, 0, 0]), 0.0).unwrap();
        let b = Curvelet::new(wave(0, 3).with_k([0, -2, 0, 0]), 0.0).unwrap();
        let ab = inner(&a, &b, &q).unwrap().value;
        let ba = inner(&b, &a, &q).unwrap().value;
        assert!((ab - ba.conj()).norm() < 1e-12, "{ab} vs {ba}");
        assert!(ab.norm() > 0.0);
    }

    #[test]
    fn offsets_enumeration() {
        let o = offsets_in(&[IntRange::new(-1, 1), IntRange::new(0, 1)]);
        assert_eq!(o.len(), 6);
        assert_eq!(o[0], [-1, 0, 0, 0]);
        assert_eq!(o[5], [1, 1, 0, 0]);
    }
}
