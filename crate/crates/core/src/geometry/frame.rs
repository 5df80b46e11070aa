//! Per-window geometry: direction four-vectors, adapted Fourier coordinates,
//! the support bounding box and the dual translation lattice.
//!
//! Adapted coordinates of a frequency `xi` are
//! `eta = (xi_0 - xi_par, xi_0 + xi_par, xi_perp1, xi_perp2)` with
//! `xi_par = e . xi` and `xi_perp_i = v_i . xi`. The map has determinant 2, so
//! `d xi = d eta / 2`. In these coordinates the Minkowski phase is linear:
//! `xi . x = eta_0 (x_0 + x_par)/2 + eta_1 (x_0 - x_par)/2 - sum xi_perp_i x_perp_i`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::{CurveletError, Result};
use crate::geometry::index::{Case, CurveletIndex, FourierKey};
use crate::geometry::sphere::{chart_inverse_raw, grid_step, DirectionLabel, WEIGHT_SUPPORT};
use crate::linalg::{column, dot3, Mat3, Vec3, Vec4};
use crate::wavelet1d::mother_hat;

/// `|det d eta / d xi|`.
pub const ETA_JACOBIAN: f64 = 2.0;

/// Relative padding added to every side of the sampled support box.
const BOX_PAD: f64 = 0.02;
const RADIAL_SAMPLES: usize = 129;
const ANGULAR_SAMPLES: usize = 65;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl EtaBox {
    pub fn sides(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }

    pub fn volume(&self) -> f64 {
        self.sides().iter().product()
    }

    pub fn contains(&self, eta: &[f64]) -> bool {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(eta)
            .all(|((a, b), x)| *x >= *a && *x <= *b)
    }
}

/// Geometry of one Fourier window, shared by all its lattice translates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptedFrame {
    pub key: FourierKey,
    pub mu: f64,
    /// Spatial unit vector of the direction.
    pub e_vec: Vec3,
    pub e_four: Vec4,
    pub e_star: Vec4,
    pub u_long: Vec4,
    pub u_off: Vec4,
    pub v_perp: Vec<Vec3>,
    pub rotation: Mat3,
    pub xi_center: Vec4,
    pub eta_box: EtaBox,
    pub lattice_spacings: Vec<f64>,
    pub normalizer: f64,
}

impl AdaptedFrame {
    /// Number of space-time dimensions.
    #[inline]
    pub fn n(&self) -> usize {
        self.key.d + 1
    }

    /// Adapted coordinates of a frequency.
    #[inline]
    pub fn to_eta(&self, xi: &Vec4) -> [f64; 4] {
        let s = [xi[1], xi[2], xi[3]];
        let par = dot3(&self.e_vec, &s);
        let mut out = [xi[0] - par, xi[0] + par, 0.0, 0.0];
        for (i, v) in self.v_perp.iter().enumerate() {
            out[2 + i] = dot3(v, &s);
        }
        out
    }

    /// Frequency with the given adapted coordinates.
    #[inline]
    pub fn from_eta(&self, eta: &[f64]) -> Vec4 {
        let xi0 = 0.5 * (eta[0] + eta[1]);
        let par = 0.5 * (eta[1] - eta[0]);
        let mut s = [par * self.e_vec[0], par * self.e_vec[1], par * self.e_vec[2]];
        for (i, v) in self.v_perp.iter().enumerate() {
            let p = eta[2 + i];
            s[0] += p * v[0];
            s[1] += p * v[1];
            s[2] += p * v[2];
        }
        [xi0, s[0], s[1], s[2]]
    }

    /// Coefficients `p` with `xi . x = sum_a p_a eta_a`.
    #[inline]
    pub fn phase_coefficients(&self, x: &Vec4) -> [f64; 4] {
        let s = [x[1], x[2], x[3]];
        let par = dot3(&self.e_vec, &s);
        let mut p = [0.5 * (x[0] + par), 0.5 * (x[0] - par), 0.0, 0.0];
        for (i, v) in self.v_perp.iter().enumerate() {
            p[2 + i] = -dot3(v, &s);
        }
        p
    }

    /// Lattice point `x_Delta` for translation indices `k`.
    pub fn x_center(&self, k: &[i64]) -> Vec4 {
        let a = &self.lattice_spacings;
        let mut x = [0.0; 4];
        let c0 = k[0] as f64 * a[0];
        let c1 = k[1] as f64 * a[1];
        for i in 0..4 {
            x[i] = c0 * self.u_long[i] + c1 * self.u_off[i];
        }
        for (i, v) in self.v_perp.iter().enumerate() {
            let c = k[2 + i] as f64 * a[2 + i];
            x[1] += c * v[0];
            x[2] += c * v[1];
            x[3] += c * v[2];
        }
        x
    }
}

/// Radial parameters of the support: `|q| = 4^(m+s)`, `xi_0^2/|q| = 2^(j+t)`
/// for `s, t` in `(-1, 1)`. Returns `(xi_0, |xi|)` samples of the closure.
pub(crate) fn radial_samples(case: Case, m: i32, j: i32, time_sign: i8, cone_sign: i8, mu: f64) -> Vec<(f64, f64, f64)> {
    let mu2 = case.effective_mu(mu).powi(2);
    let ts = time_sign as f64;
    let cs = cone_sign as f64;
    let n = RADIAL_SAMPLES;
    let mut out = Vec::with_capacity(n * n + n);
    let param = |i: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
    for a in 0..n {
        let s = param(a);
        let q = 4f64.powf(m as f64 + s);
        for b in 0..n {
            let t = param(b);
            let c = (j as f64 + t).exp2();
            let xi0sq = c * q;
            let rho2 = xi0sq - cs * q - mu2;
            if rho2 >= 0.0 {
                let w = mother_hat((s).exp2()) * mother_hat((t).exp2());
                out.push((ts * xi0sq.sqrt(), rho2.sqrt(), w));
            }
        }
    }
    // Where |xi| = 0 crosses the parameter rectangle it is part of the boundary.
    if mu2 > 0.0 {
        for b in 0..n {
            let t = param(b);
            let c = (j as f64 + t).exp2();
            if c - cs <= 0.0 {
                continue;
            }
            let q = mu2 / (c - cs);
            let s = 0.5 * q.log2() - m as f64;
            if (-1.0..=1.0).contains(&s) {
                out.push((ts * (c * q).sqrt(), 0.0, 0.0));
            }
        }
    }
    out
}

/// Ranges of `(w . e, w . v1, w . v2)` over directions `w` in the angular
/// support of a 3+1 window.
fn angular_ranges(label: &DirectionLabel, j: i32, e: &Vec3, v: &[Vec3]) -> [(f64, f64); 3] {
    let mut r = [(f64::INFINITY, f64::NEG_INFINITY); 3];
    let mut add = |w: &Vec3| {
        let vals = [dot3(w, e), dot3(w, &v[0]), dot3(w, &v[1])];
        for (slot, x) in r.iter_mut().zip(vals) {
            slot.0 = slot.0.min(x);
            slot.1 = slot.1.max(x);
        }
    };
    match *label {
        DirectionLabel::Sign(_) => {
            add(e);
        }
        DirectionLabel::Grid { hemisphere, l1, l2 } => {
            let h = grid_step(j);
            let (c1, c2) = (h * l1 as f64, h * l2 as f64);
            let n = ANGULAR_SAMPLES;
            for a in 0..n {
                let u1 = c1 - h + 2.0 * h * a as f64 / (n - 1) as f64;
                for b in 0..n {
                    let u2 = c2 - h + 2.0 * h * b as f64 / (n - 1) as f64;
                    if u1.hypot(u2) <= WEIGHT_SUPPORT {
                        add(&chart_inverse_raw((u1, u2), hemisphere));
                    }
                }
            }
            // The rim of the weight support, where it cuts the window square.
            let m = 16 * n;
            for a in 0..m {
                let phi = 2.0 * std::f64::consts::PI * a as f64 / m as f64;
                let (u1, u2) = (WEIGHT_SUPPORT * phi.cos(), WEIGHT_SUPPORT * phi.sin());
                if (u1 - c1).abs() <= h && (u2 - c2).abs() <= h {
                    add(&chart_inverse_raw((u1, u2), hemisphere));
                }
            }
        }
    }
    r
}

/// Builds the adapted frame of a Fourier window.
pub fn adapted_frame(key: &FourierKey, mu: f64) -> Result<AdaptedFrame> {
    key.validate()?;
    let mu = key.case.effective_mu(mu);
    if key.case == Case::Kg && !(mu > 0.0) {
        return Err(CurveletError::InvalidIndex(format!("Klein-Gordon mass must be positive, got {mu}")));
    }
    let d = key.d;
    let n = d + 1;
    let e_vec = key.direction.unit_vector(key.j);
    let rotation = crate::geometry::sphere::rotation_to(&e_vec);
    let v_perp: Vec<Vec3> = if d == 3 {
        vec![column(&rotation, 1), column(&rotation, 2)]
    } else {
        Vec::new()
    };

    let empty = || CurveletError::EmptySupport { case: key.case.name(), m: key.m, j: key.j, mu };
    let radial = radial_samples(key.case, key.m, key.j, key.sector.time_sign, key.sector.cone_sign, mu);
    if !radial.iter().any(|s| s.1 > 0.0 && s.2 > 0.0) {
        return Err(empty());
    }

    let ang = if d == 3 {
        angular_ranges(&key.direction, key.j, &e_vec, &v_perp)
    } else {
        [(1.0, 1.0), (0.0, 0.0), (0.0, 0.0)]
    };
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for &(xi0, rho, _) in &radial {
        let cands = [
            (xi0 - rho * ang[0].1, xi0 - rho * ang[0].0),
            (xi0 + rho * ang[0].0, xi0 + rho * ang[0].1),
            (rho * ang[1].0, rho * ang[1].1),
            (rho * ang[2].0, rho * ang[2].1),
        ];
        for a in 0..n {
            lo[a] = lo[a].min(cands[a].0);
            hi[a] = hi[a].max(cands[a].1);
        }
    }
    for a in 0..n {
        let pad = BOX_PAD * (hi[a] - lo[a]);
        lo[a] -= pad;
        hi[a] += pad;
    }
    let eta_box = EtaBox { lo: lo[..n].to_vec(), hi: hi[..n].to_vec() };
    let lattice_spacings: Vec<f64> = eta_box
        .sides()
        .iter()
        .map(|l| 2.0 * std::f64::consts::PI / l)
        .collect();
    let normalizer = crate::gram::frame_normalizer(&eta_box, &lattice_spacings, d);

    // Window center: geometric centers of both radial factors, else the best
    // sampled support point.
    let ts = key.sector.time_sign as f64;
    let cs = key.sector.cone_sign as f64;
    let q = 4f64.powi(key.m);
    let xi0c = ts * (key.m as f64 + 0.5 * key.j as f64).exp2();
    let rho2 = xi0c * xi0c - cs * q - mu * mu;
    let (xi0c, rhoc) = if rho2 > 0.0 {
        (xi0c, rho2.sqrt())
    } else {
        let best = radial
            .iter()
            .filter(|s| s.1 > 0.0)
            .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap())
            .ok_or_else(empty)?;
        (best.0, best.1)
    };
    let xi_center = [xi0c, rhoc * e_vec[0], rhoc * e_vec[1], rhoc * e_vec[2]];

    let (e_four, e_star) = match key.case {
        Case::Wave => {
            let e = [1.0, e_vec[0], e_vec[1], e_vec[2]];
            (e, e)
        }
        Case::Kg => {
            let r = xi0c / rhoc;
            (
                [1.0, r * e_vec[0], r * e_vec[1], r * e_vec[2]],
                [r, e_vec[0], e_vec[1], e_vec[2]],
            )
        }
    };
    let u_long = [1.0, e_vec[0], e_vec[1], e_vec[2]];
    let u_off = [1.0, -e_vec[0], -e_vec[1], -e_vec[2]];

    Ok(AdaptedFrame {
        key: *key,
        mu,
        e_vec,
        e_four,
        e_star,
        u_long,
        u_off,
        v_perp,
        rotation,
        xi_center,
        eta_box,
        lattice_spacings,
        normalizer,
    })
}

/// Thread-safe memo of adapted frames keyed by window and mass.
#[derive(Debug, Default)]
pub struct FrameCache {
    map: RwLock<HashMap<(FourierKey, u64), Arc<AdaptedFrame>>>,
}

impl FrameCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &FourierKey, mu: f64) -> Result<Arc<AdaptedFrame>> {
        let mu = key.case.effective_mu(mu);
        let k = (*key, mu.to_bits());
        if let Some(f) = self.map.read().unwrap().get(&k) {
            return Ok(f.clone());
        }
        let frame = Arc::new(adapted_frame(key, mu)?);
        self.map.write().unwrap().entry(k).or_insert(frame.clone());
        Ok(frame)
    }

    pub fn for_index(&self, idx: &CurveletIndex, mu: f64) -> Result<Arc<AdaptedFrame>> {
        self.get(&idx.key, mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::index::SectorLabel;
    use crate::geometry::sphere::Hemisphere;
    use crate::linalg::minkowski;

    fn key(case: Case, d: usize, m: i32, j: i32, dir: DirectionLabel) -> FourierKey {
        FourierKey { case, d, m, j, direction: dir, sector: SectorLabel::TP }
    }

    #[test]
    fn wave_center_example() {
        let f = adapted_frame(&key(Case::Wave, 1, 0, 2, DirectionLabel::Sign(1)), 0.0).unwrap();
        assert!((f.xi_center[0] - 2.0).abs() < 1e-14);
        assert!((f.xi_center[1] - 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(minkowski(&f.e_four, &f.e_four), 0.0);
        assert_eq!(f.x_center(&[0, 0]), [0.0; 4]);
    }

    #[test]
    fn eta_round_trip() {
        let dir = DirectionLabel::Grid { hemisphere: Hemisphere::South, l1: 1, l2: -1 };
        let f = adapted_frame(&key(Case::Wave, 3, 0, 4, dir), 0.0).unwrap();
        let xi = [1.3, -0.2, 0.7, -2.1];
        let back = f.from_eta(&f.to_eta(&xi));
        for i in 0..4 {
            assert!((xi[i] - back[i]).abs() < 1e-13);
        }
        let x = [0.4, 1.1, -0.3, 0.9];
        let p = f.phase_coefficients(&x);
        let eta = f.to_eta(&xi);
        let lhs: f64 = (0..4).map(|a| p[a] * eta[a]).sum();
        assert!((lhs - minkowski(&xi, &x)).abs() < 1e-13);
    }

    #[test]
    fn lattice_is_dual() {
        let f = adapted_frame(&key(Case::Kg, 1, 1, 4, DirectionLabel::Sign(-1)), 1.0).unwrap();
        for (a, l) in f.lattice_spacings.iter().zip(f.eta_box.sides()) {
            assert!((a * l - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        }
        // the k-th lattice point produces phase 2 pi k_a eta_a / L_a
        let x = f.x_center(&[3, -2]);
        let p = f.phase_coefficients(&x);
        assert!((p[0] - 3.0 * f.lattice_spacings[0]).abs() < 1e-12);
        assert!((p[1] + 2.0 * f.lattice_spacings[1]).abs() < 1e-12);
    }

    #[test]
    fn kg_frame_vectors() {
        let mut prev = f64::INFINITY;
        for j in [2, 4, 6, 8] {
            let f = adapted_frame(&key(Case::Kg, 1, 0, j, DirectionLabel::Sign(1)), 1.0).unwrap();
            assert!(minkowski(&f.e_four, &f.e_star).abs() < 1e-14);
            let dev = ((f.e_four[1] - f.e_vec[0]).powi(2)).sqrt();
            assert!(dev < prev, "j={j}");
            prev = dev;
        }
    }

    #[test]
    fn spacing_ratio_tracks_j() {
        for m in [-1, 0, 2] {
            for j in [2, 4, 6] {
                let f = adapted_frame(&key(Case::Wave, 1, m, j, DirectionLabel::Sign(1)), 0.0).unwrap();
                let r = f.lattice_spacings[0] / f.lattice_spacings[1] / (j as f64).exp2();
                assert!((0.25..=4.0).contains(&r), "m={m} j={j} r={r}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(adapted_frame(&key(Case::Wave, 1, -2, 2, DirectionLabel::Sign(1)), 0.0).is_err());
        assert!(matches!(
            adapted_frame(&key(Case::Kg, 1, 0, 2, DirectionLabel::Sign(1)), 10.0),
            Err(CurveletError::EmptySupport { .. })
        ));
    }
}
