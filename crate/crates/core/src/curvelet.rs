//! Fourier-side and real-space evaluation of curvelets, the spatial
//! curvelets on the sphere, and molecule envelopes.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CurveletError, Result};
use crate::geometry::sphere::{chart_raw, direction_grid, hemisphere_weight, DirectionLabel};
use crate::geometry::{adapted_frame, AdaptedFrame, Case, CurveletIndex, FourierKey, SectorLabel};
use crate::linalg::{cross3, minkowski, norm3, sub4, Vec3, Vec4};
use crate::natural::Domain;
use crate::quadrature::{gauss_legendre, QuadratureSpec};
use crate::wavelet1d::{angular_window, father_hat, mother_hat};

/// The four factors of a window value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowFactors {
    pub radial: f64,
    pub secondary: f64,
    pub angular: f64,
    pub sector: f64,
}

impl WindowFactors {
    const ZERO: WindowFactors = WindowFactors { radial: 0.0, secondary: 0.0, angular: 0.0, sector: 0.0 };

    #[inline]
    pub fn product(&self) -> f64 {
        self.radial * self.secondary * self.angular * self.sector
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowEvaluation {
    pub value: Complex64,
    pub in_support: bool,
    pub window_factors: WindowFactors,
}

/// `q(xi) = xi_0^2 - |xi|^2 - mu^2`.
#[inline]
pub fn q_of(xi: &Vec4, mu: f64) -> f64 {
    xi[0] * xi[0] - xi[1] * xi[1] - xi[2] * xi[2] - xi[3] * xi[3] - mu * mu
}

/// Angular factor of a direction at secondary scale `j`, evaluated at the
/// spatial frequency `s`.
#[inline]
pub fn angular_factor(direction: &DirectionLabel, j: i32, s: &Vec3) -> f64 {
    match *direction {
        DirectionLabel::Sign(sign) => {
            if (s[0] >= 0.0) == (sign > 0) {
                1.0
            } else {
                0.0
            }
        }
        DirectionLabel::Grid { hemisphere, l1, l2 } => {
            let rho = norm3(s);
            if rho == 0.0 {
                return 0.0;
            }
            let w = [s[0] / rho, s[1] / rho, s[2] / rho];
            let weight = hemisphere_weight(&w, hemisphere);
            if weight == 0.0 {
                return 0.0;
            }
            let u = chart_raw(&w, hemisphere);
            let a1 = angular_window(j, l1, 2.0 * u.0);
            if a1 == 0.0 {
                return 0.0;
            }
            weight * a1 * angular_window(j, l2, 2.0 * u.1)
        }
    }
}

/// Window factors of a Fourier window (no normalizer, no phase).
#[inline]
pub fn window_factors(key: &FourierKey, mu: f64, xi: &Vec4) -> WindowFactors {
    let mu = key.case.effective_mu(mu);
    let q = q_of(xi, mu);
    if !key.sector.contains(xi[0], q) || q == 0.0 {
        return WindowFactors::ZERO;
    }
    let aq = q.abs();
    let radial = mother_hat(aq.sqrt() * (-key.m as f64).exp2());
    if radial == 0.0 {
        return WindowFactors { radial, sector: 1.0, ..WindowFactors::ZERO };
    }
    let secondary = mother_hat(xi[0] * xi[0] / aq * (-key.j as f64).exp2());
    if secondary == 0.0 {
        return WindowFactors { radial, secondary, sector: 1.0, angular: 0.0 };
    }
    let angular = angular_factor(&key.direction, key.j, &[xi[1], xi[2], xi[3]]);
    WindowFactors { radial, secondary, angular, sector: 1.0 }
}

#[inline]
pub fn window(key: &FourierKey, mu: f64, xi: &Vec4) -> f64 {
    window_factors(key, mu, xi).product()
}

/// Whether `xi` satisfies the scale constraints of the window exactly:
/// `sqrt|q| in 2^m [1/2, 2]` and `xi_0^2/|q| in 2^j [1/2, 2]`.
pub fn within_scale_support(key: &FourierKey, mu: f64, xi: &Vec4) -> bool {
    let q = q_of(xi, key.case.effective_mu(mu)).abs();
    let r = q.sqrt() * (-key.m as f64).exp2();
    let c = xi[0] * xi[0] / q * (-key.j as f64).exp2();
    (0.5..=2.0).contains(&r) && (0.5..=2.0).contains(&c)
}

/// One frame element with its geometry.
#[derive(Debug, Clone)]
pub struct Curvelet {
    pub index: CurveletIndex,
    pub frame: Arc<AdaptedFrame>,
    pub x_center: Vec4,
}

impl Curvelet {
    pub fn new(index: CurveletIndex, mu: f64) -> Result<Self> {
        index.validate()?;
        let frame = Arc::new(adapted_frame(&index.key, mu)?);
        Self::with_frame(index, frame)
    }

    pub fn with_frame(index: CurveletIndex, frame: Arc<AdaptedFrame>) -> Result<Self> {
        index.validate()?;
        if frame.key != index.key {
            return Err(CurveletError::Mismatch("frame does not belong to this index".into()));
        }
        let x_center = frame.x_center(index.k());
        Ok(Self { index, frame, x_center })
    }

    pub fn mu(&self) -> f64 {
        self.frame.mu
    }

    #[inline]
    pub fn window(&self, xi: &Vec4) -> f64 {
        window(&self.index.key, self.frame.mu, xi)
    }

    /// `c e^{i xi . x_Delta} W(xi)`.
    pub fn hat_eval(&self, xi: &Vec4) -> WindowEvaluation {
        let f = window_factors(&self.index.key, self.frame.mu, xi);
        let w = f.product();
        let value = if w == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(self.frame.normalizer * w, minkowski(xi, &self.x_center))
        };
        WindowEvaluation { value, in_support: w != 0.0, window_factors: f }
    }

    /// `psi(x) = (2 pi)^-n int e^{-i xi . x} psi_hat(xi) d xi`.
    pub fn real_eval(&self, x: &Vec4, quad: &QuadratureSpec) -> Result<Complex64> {
        quad.validate()?;
        let y = sub4(x, &self.x_center);
        let dom = Domain::of_frame(&self.frame);
        let counts: Vec<usize> = dom.phase_spans(&y).iter().map(|s| quad.nodes_for_span(*s)).collect();
        if let Some(&worst) = counts.iter().max() {
            if worst > quad.max_nodes_per_axis {
                return Err(CurveletError::QuadratureBudget { required: worst, max: quad.max_nodes_per_axis });
            }
        }
        let key = self.index.key;
        let mu = self.frame.mu;
        let v = dom.integrate(&counts, |xi| {
            let w = window(&key, mu, xi);
            if w == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::from_polar(w, -minkowski(xi, &y))
        });
        let n = self.frame.n() as i32;
        Ok(v * (self.frame.normalizer / (2.0 * PI).powi(n)))
    }

    /// Real-space values on the tensor grid
    /// `x = x_Delta + p_long u_long + p_off u_off` (1+1 dimensions), returned
    /// row-major with `p_long` as the slow index.
    pub fn real_eval_grid(&self, p_long: &[f64], p_off: &[f64], quad: &QuadratureSpec) -> Result<Vec<Complex64>> {
        quad.validate()?;
        if self.frame.key.d != 1 {
            return Err(CurveletError::InvalidIndex("grid evaluation is implemented for d = 1".into()));
        }
        let bx = &self.frame.eta_box;
        let sides = bx.sides();
        let maxabs = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let n0 = quad.nodes_for_span(2.0 * maxabs(p_long) * sides[0]).max(8 * quad.base_order);
        let n1 = quad.nodes_for_span(2.0 * maxabs(p_off) * sides[1]).max(8 * quad.base_order);
        let worst = n0.max(n1);
        if worst > quad.max_nodes_per_axis {
            return Err(CurveletError::QuadratureBudget { required: worst, max: quad.max_nodes_per_axis });
        }
        let (e0, w0) = gauss_legendre(n0).on(bx.lo[0], bx.hi[0]);
        let (e1, w1) = gauss_legendre(n1).on(bx.lo[1], bx.hi[1]);
        let key = self.index.key;
        let mu = self.frame.mu;
        let f = &self.frame;
        // weighted window samples, row a = eta_0 node
        let wmat: Vec<f64> = (0..n0)
            .into_par_iter()
            .flat_map_iter(|a| {
                let e0a = e0[a];
                let w0a = w0[a];
                e1.iter()
                    .zip(&w1)
                    .map(move |(&e1b, &w1b)| w0a * w1b * window(&key, mu, &f.from_eta(&[e0a, e1b])))
                    .collect::<Vec<_>>()
            })
            .collect();
        // T[p1][a] = sum_b W[a][b] e^{-i p1 eta_1[b]}
        let t: Vec<Complex64> = p_off
            .par_iter()
            .flat_map_iter(|&p1| {
                let ph: Vec<Complex64> = e1.iter().map(|&e| Complex64::from_polar(1.0, -p1 * e)).collect();
                (0..n0)
                    .map(|a| {
                        let row = &wmat[a * n1..(a + 1) * n1];
                        row.iter().zip(&ph).fold(Complex64::new(0.0, 0.0), |acc, (w, z)| acc + z * *w)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let scale = self.frame.normalizer / crate::geometry::ETA_JACOBIAN / (2.0 * PI).powi(2);
        let out: Vec<Complex64> = p_long
            .par_iter()
            .flat_map_iter(|&p0| {
                let ph: Vec<Complex64> = e0.iter().map(|&e| Complex64::from_polar(1.0, -p0 * e)).collect();
                let t = &t;
                (0..p_off.len())
                    .map(move |b| {
                        let row = &t[b * n0..(b + 1) * n0];
                        row.iter().zip(&ph).fold(Complex64::new(0.0, 0.0), |acc, (v, z)| acc + v * z) * scale
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(out)
    }

    /// Space-side molecule envelope of order `n`.
    pub fn envelope_space(&self, x: &Vec4, n: i32) -> f64 {
        molecule_envelope_space(&self.frame, &self.x_center, x, n)
    }

    /// Fourier-side molecule envelope of order `n`.
    pub fn envelope_fourier(&self, xi: &Vec4, n: i32) -> f64 {
        molecule_envelope_fourier(&self.frame, xi, n)
    }
}

/// Evaluates `psi_hat_Delta(xi)`, building the frame on the fly.
pub fn hat_eval(index: &CurveletIndex, xi: &Vec4, mu: f64) -> Result<WindowEvaluation> {
    Ok(Curvelet::new(*index, mu)?.hat_eval(xi))
}

/// Evaluates `psi_Delta(x)`, building the frame on the fly.
pub fn real_eval(index: &CurveletIndex, x: &Vec4, mu: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    Curvelet::new(*index, mu)?.real_eval(x, quad)
}

#[inline]
fn bracket(t: f64) -> f64 {
    1.0 + t.abs()
}

#[inline]
fn double_bracket(t: f64) -> f64 {
    1.0 + t.abs() + 1.0 / t.abs()
}

/// Transverse spatial distance `|e x y|`.
#[inline]
fn transverse(e: &Vec3, y: &Vec4) -> f64 {
    norm3(&cross3(e, &[y[1], y[2], y[3]]))
}

pub fn molecule_envelope_space(frame: &AdaptedFrame, x_center: &Vec4, x: &Vec4, n: i32) -> f64 {
    let (m, j) = (frame.key.m as f64, frame.key.j as f64);
    let dim = frame.n() as f64;
    let y = sub4(x, x_center);
    let b = bracket((m + 0.5 * j).exp2() * minkowski(&frame.e_four, &y))
        + bracket(m.exp2() * transverse(&frame.e_vec, &y))
        + bracket((m - 0.5 * j).exp2() * y[0]);
    (0.5 * dim * m).exp2() * b.powi(-n)
}

pub fn molecule_envelope_fourier(frame: &AdaptedFrame, xi: &Vec4, n: i32) -> f64 {
    let (m, j) = (frame.key.m as f64, frame.key.j as f64);
    let dim = frame.n() as f64;
    let b = double_bracket((-m + 0.5 * j).exp2() * minkowski(&frame.e_star, xi))
        + bracket((-m).exp2() * transverse(&frame.e_vec, xi))
        + double_bracket((-m - 0.5 * j).exp2() * xi[0]);
    (-0.5 * dim * m).exp2() * b.powi(-n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DerivativeAxis {
    /// Along `(1, e)`.
    Parallel,
    /// Along a transverse spatial vector.
    Perp,
    /// Along `(1, -e)`.
    Off,
}

/// `max |D W| / max |W|` over a grid filling the support box, where `D` is a
/// centered difference along the axis. Scale ratios of this quantity follow
/// the dimensions of the support.
pub fn derivative_scaling_check(key: &FourierKey, mu: f64, axis: DerivativeAxis) -> Result<f64> {
    let frame = adapted_frame(key, mu)?;
    let n = frame.n();
    if axis == DerivativeAxis::Perp && n < 4 {
        return Err(CurveletError::InvalidIndex("no transverse axis in 1+1 dimensions".into()));
    }
    let (slot, dir): (usize, Vec4) = match axis {
        DerivativeAxis::Parallel => (1, frame.u_long),
        DerivativeAxis::Off => (0, frame.u_off),
        DerivativeAxis::Perp => {
            let v = frame.v_perp[0];
            (2, [0.0, v[0], v[1], v[2]])
        }
    };
    let sides = frame.eta_box.sides();
    // a unit move along `dir` changes the paired eta coordinate by this much
    let eta_rate = if axis == DerivativeAxis::Perp { 1.0 } else { 2.0 };
    let h = sides[slot] / 512.0 / eta_rate;
    if h * eta_rate > sides[slot] / 8.0 {
        return Err(CurveletError::Degenerate("finite-difference step exceeds box/8".into()));
    }
    let g: usize = if n == 2 { 257 } else { 33 };
    let total = g.pow(n as u32);
    let lo = frame.eta_box.lo.clone();
    let (dmax, wmax) = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut eta = [0.0; 4];
            let mut r = flat;
            for a in 0..n {
                eta[a] = lo[a] + sides[a] * (r % g) as f64 / (g - 1) as f64;
                r /= g;
            }
            let xi = frame.from_eta(&eta[..n]);
            let w = window(key, mu, &xi);
            let mut xp = xi;
            let mut xm = xi;
            for i in 0..4 {
                xp[i] += h * dir[i];
                xm[i] -= h * dir[i];
            }
            let d = (window(key, mu, &xp) - window(key, mu, &xm)) / (2.0 * h);
            (d.abs(), w.abs())
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    if wmax == 0.0 {
        return Err(CurveletError::Degenerate("window vanishes on the sample grid".into()));
    }
    Ok(dmax / wmax)
}

/// Pointwise sum of squared windows over all sectors, directions and the
/// given scale ranges.
pub fn minkowski_partition_sum(case: Case, d: usize, mu: f64, xi: &Vec4, m_range: (i32, i32), j_range: (i32, i32)) -> Result<f64> {
    let mut acc = 0.0;
    for j in j_range.0..=j_range.1 {
        let dirs = direction_grid(d, j)?;
        for m in m_range.0..=m_range.1 {
            for sector in SectorLabel::ALL {
                for dir in &dirs {
                    let key = FourierKey { case, d, m, j, direction: dir.label, sector };
                    acc += window(&key, mu, xi).powi(2);
                }
            }
        }
    }
    Ok(acc)
}

/// Spatial curvelet `2^-j e^{-i xi . x_k} mother(2^-j |xi|) I(w) A(chart(w))`
/// with `x_k = 2 pi R_e (2^-j k_1, 2^{-j/2} k_2, 2^{-j/2} k_3)`.
pub fn cdd_hat_eval(j: i32, direction: &DirectionLabel, k: &[i64; 3], xi: &Vec3) -> Result<Complex64> {
    if j < 1 {
        return Err(CurveletError::InvalidIndex(format!("j = {j} must be >= 1")));
    }
    let (hemisphere, l1, l2) = match *direction {
        DirectionLabel::Grid { hemisphere, l1, l2 } => (hemisphere, l1, l2),
        DirectionLabel::Sign(_) => {
            return Err(CurveletError::InvalidIndex("spatial curvelets need a sphere direction".into()))
        }
    };
    let jf = j as f64;
    let rho = norm3(xi);
    let radial = mother_hat((-jf).exp2() * rho);
    if radial == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let ang = angular_factor(direction, j, xi);
    if ang == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let e = DirectionLabel::Grid { hemisphere, l1, l2 }.unit_vector(j);
    let r = crate::geometry::rotation_to(&e);
    let local = [
        2.0 * PI * (-jf).exp2() * k[0] as f64,
        2.0 * PI * (-0.5 * jf).exp2() * k[1] as f64,
        2.0 * PI * (-0.5 * jf).exp2() * k[2] as f64,
    ];
    let x = crate::linalg::mat_vec(&r, &local);
    let phase = -(xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2]);
    Ok(Complex64::from_polar((-jf).exp2() * radial * ang, phase))
}

/// `father(|xi|)^2 + sum_{j, e} |2^j cdd_hat(j, e, 0, xi)|^2` for `j = 1..=j_max`.
pub fn cdd_partition_sum(xi: &Vec3, j_max: i32) -> Result<f64> {
    let mut acc = father_hat(norm3(xi)).powi(2);
    for j in 1..=j_max {
        let scale = (j as f64).exp2();
        for dir in direction_grid(3, j)? {
            acc += (cdd_hat_eval(j, &dir.label, &[0, 0, 0], xi)?.norm() * scale).powi(2);
        }
    }
    Ok(acc)
}
