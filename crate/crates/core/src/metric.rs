//! Scaled pseudo-distance between curvelets and its summability sums.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvelet::Curvelet;
use crate::error::{CurveletError, Result};
use crate::linalg::{cross3, minkowski, norm3, sub4, Vec4};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceBreakdown {
    pub prefactor: f64,
    pub d_ang: f64,
    pub d_par: f64,
    pub d_perp: f64,
    pub d_off: f64,
    pub total: f64,
}

impl DistanceBreakdown {
    /// Distance of an index to itself.
    pub const UNIT: DistanceBreakdown =
        DistanceBreakdown { prefactor: 1.0, d_ang: 0.0, d_par: 0.0, d_perp: 0.0, d_off: 0.0, total: 1.0 };
}

/// Exponent weights of the scale prefactor `2^(a|dm| + b|dj|)`.
fn prefactor_weights(d: usize) -> (f64, f64) {
    if d == 3 {
        (4.0, 2.0)
    } else {
        // one null pair of axes, no transverse ones
        (2.0, 1.0)
    }
}

#[inline]
fn wedge(e: &[f64; 3], y: &Vec4) -> f64 {
    norm3(&cross3(e, &[y[1], y[2], y[3]]))
}

/// `d(Delta, Delta')`, symmetric by construction.
pub fn distance(a: &Curvelet, b: &Curvelet) -> Result<DistanceBreakdown> {
    let (ka, kb) = (&a.index.key, &b.index.key);
    if ka.case != kb.case || ka.d != kb.d {
        return Err(CurveletError::Mismatch(format!("{} vs {}", a.index, b.index)));
    }
    let (ma, ja) = (ka.m as f64, ka.j as f64);
    let (mb, jb) = (kb.m as f64, kb.j as f64);
    let fa = &a.frame;
    let fb = &b.frame;

    let de = [fa.e_vec[0] - fb.e_vec[0], fa.e_vec[1] - fb.e_vec[1], fa.e_vec[2] - fb.e_vec[2]];
    let d_ang = (0.5 * ja.min(jb)).exp2() * norm3(&de);

    let yab = sub4(&a.x_center, &b.x_center);
    let yba = sub4(&b.x_center, &a.x_center);

    let (sa, sb) = (ma + 0.5 * ja, mb + 0.5 * jb);
    let mut d_par = 0.0;
    let mut term_a = 0.0;
    let mut term_b = 0.0;
    if sa <= sb {
        term_a = sa.exp2() * minkowski(&fa.e_four, &yab).abs();
    }
    if sb <= sa {
        term_b = sb.exp2() * minkowski(&fb.e_four, &yba).abs();
    }
    d_par += term_a + term_b;

    let mut perp_a = 0.0;
    let mut perp_b = 0.0;
    if ma <= mb {
        perp_a = ma.exp2() * wedge(&fa.e_vec, &yab);
    }
    if mb <= ma {
        perp_b = mb.exp2() * wedge(&fb.e_vec, &yba);
    }
    let d_perp = perp_a + perp_b;

    let d_off = (ma - 0.5 * ja).min(mb - 0.5 * jb).exp2() * yab[0].abs();

    let (wm, wj) = prefactor_weights(ka.d);
    let dm = (ma - mb).abs();
    let dj = (ja - jb).abs();
    let prefactor = (wm * dm + wj * dj).exp2() * (1.0 + dm * dm) * (1.0 + dj * dj);
    let total = prefactor * (1.0 + d_ang + d_par + d_perp + d_off);
    Ok(DistanceBreakdown { prefactor, d_ang, d_par, d_perp, d_off, total })
}

/// `sum_{Delta'} d(Delta, Delta')^-r` over a finite index set.
pub fn summability_single(anchor: &Curvelet, r: f64, set: &[Curvelet]) -> Result<f64> {
    let terms: Vec<f64> = set
        .par_iter()
        .map(|b| distance(anchor, b).map(|d| d.total.powf(-r)))
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripleSum {
    pub sum: f64,
    /// `sum / d(Delta, Delta'')^-r`.
    pub ratio: f64,
}

/// `sum_{Delta'} d(Delta, Delta')^-r d(Delta', Delta'')^-r` and its ratio to
/// `d(Delta, Delta'')^-r`.
pub fn summability_triple(a: &Curvelet, c: &Curvelet, r: f64, set: &[Curvelet]) -> Result<TripleSum> {
    let terms: Vec<f64> = set
        .par_iter()
        .map(|b| Ok(distance(a, b)?.total.powf(-r) * distance(b, c)?.total.powf(-r)))
        .collect::<Result<_>>()?;
    let sum: f64 = terms.iter().sum();
    let base = distance(a, c)?.total.powf(-r);
    Ok(TripleSum { sum, ratio: sum / base })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sphere::{DirectionLabel, Hemisphere};
    use crate::geometry::{Case, FourierKey, SectorLabel};

    fn wave(m: i32, j: i32, k: [i64; 4]) -> Curvelet {
        let key = FourierKey { case: Case::Wave, d: 1, m, j, direction: DirectionLabel::Sign(1), sector: SectorLabel::TP };
        Curvelet::new(key.with_k(k), 0.0).unwrap()
    }

    #[test]
    fn self_distance_is_one() {
        let a = wave(1, 4, [3, -2, 0, 0]);
        assert_eq!(distance(&a, &a).unwrap().total, 1.0);
    }

    #[test]
    fn null_offset_example() {
        let a = wave(0, 2, [0; 4]);
        let mut b = a.clone();
        b.x_center = [-2.0, -2.0, 0.0, 0.0];
        let d = distance(&a, &b).unwrap();
        assert_eq!(d.d_par, 0.0);
        assert!((d.d_off - 1.0).abs() < 1e-15);
        assert!((d.total - 2.0).abs() < 1e-15);
    }

    #[test]
    fn three_d_prefactor_example() {
        let dir = DirectionLabel::Grid { hemisphere: Hemisphere::North, l1: 0, l2: 0 };
        let key = FourierKey { case: Case::Wave, d: 3, m: 0, j: 2, direction: dir, sector: SectorLabel::TP };
        let a = Curvelet::new(key.with_k([0; 4]), 0.0).unwrap();
        let b = Curvelet::new(FourierKey { m: 1, ..key }.with_k([0; 4]), 0.0).unwrap();
        let d = distance(&a, &b).unwrap();
        assert_eq!(d.total, 32.0);
    }

    #[test]
    fn symmetric_and_monotone() {
        let a = wave(0, 2, [1, 2, 0, 0]);
        let mut prev = 0.0;
        for dm in 0..3 {
            for k0 in [0i64, 3, -7] {
                let b = wave(dm, 2, [k0, -1, 0, 0]);
                let d1 = distance(&a, &b).unwrap().total;
                let d2 = distance(&b, &a).unwrap().total;
                assert_eq!(d1, d2);
            }
            let b = wave(dm, 2, [1, 2, 0, 0]);
            let t = distance(&a, &b).unwrap().total;
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn singleton_sum() {
        let a = wave(0, 2, [0; 4]);
        assert_eq!(summability_single(&a, 6.0, std::slice::from_ref(&a)).unwrap(), 1.0);
    }

    #[test]
    fn mixed_case_rejected() {
        let a = wave(0, 2, [0; 4]);
        let key = FourierKey { case: Case::Kg, d: 1, m: 0, j: 4, direction: DirectionLabel::Sign(1), sector: SectorLabel::TP };
        let b = Curvelet::new(key.with_k([0; 4]), 1.0).unwrap();
        assert!(distance(&a, &b).is_err());
    }
}
