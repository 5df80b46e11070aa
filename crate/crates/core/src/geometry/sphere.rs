//! Two-chart atlas of the unit sphere, the hemisphere partition of unity and
//! the direction grids built on it.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{CurveletError, Result};
use crate::linalg::{cross3, dot3, Mat3, Vec3};
use crate::wavelet1d::make_ramp;

/// Start of the transition band of the hemisphere weight (polar angle).
pub const WEIGHT_START: f64 = 7.0 * PI / 16.0;
/// Width of the transition band.
pub const WEIGHT_WIDTH: f64 = PI / 8.0;
/// Polar radius beyond which the hemisphere weight vanishes.
pub const WEIGHT_SUPPORT: f64 = WEIGHT_START + WEIGHT_WIDTH;
/// Charts are defined for polar angles strictly below this.
pub const CHART_LIMIT: f64 = FRAC_PI_2 + PI / 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hemisphere {
    North,
    South,
}

impl Hemisphere {
    pub fn name(self) -> &'static str {
        match self {
            Hemisphere::North => "north",
            Hemisphere::South => "south",
        }
    }

    #[inline]
    fn reflect(self, x: &Vec3) -> Vec3 {
        match self {
            Hemisphere::North => *x,
            Hemisphere::South => [x[0], x[1], -x[2]],
        }
    }
}

/// Polar angle of `x` measured from the pole of `hemisphere`.
#[inline]
pub fn polar_angle(x: &Vec3, hemisphere: Hemisphere) -> f64 {
    let y = hemisphere.reflect(x);
    (y[0] * y[0] + y[1] * y[1]).sqrt().atan2(y[2])
}

/// Azimuthal-equidistant chart from the pole of `hemisphere`:
/// `theta * (cos phi, sin phi)`.
pub fn chart(x: &Vec3, hemisphere: Hemisphere) -> Result<(f64, f64)> {
    let theta = polar_angle(x, hemisphere);
    if theta >= CHART_LIMIT {
        return Err(CurveletError::OutsideChart {
            polar: theta,
            hemisphere: hemisphere.name(),
        });
    }
    Ok(chart_raw(x, hemisphere))
}

#[inline]
pub(crate) fn chart_raw(x: &Vec3, hemisphere: Hemisphere) -> (f64, f64) {
    let y = hemisphere.reflect(x);
    let rho = (y[0] * y[0] + y[1] * y[1]).sqrt();
    if rho == 0.0 {
        return (0.0, 0.0);
    }
    let theta = rho.atan2(y[2]);
    let s = theta / rho;
    (s * y[0], s * y[1])
}

/// Inverse chart, defined on the open disk of radius [`CHART_LIMIT`].
pub fn chart_inverse(u: (f64, f64), hemisphere: Hemisphere) -> Result<Vec3> {
    let r = u.0.hypot(u.1);
    if r >= CHART_LIMIT {
        return Err(CurveletError::OutsideChart {
            polar: r,
            hemisphere: hemisphere.name(),
        });
    }
    Ok(chart_inverse_raw(u, hemisphere))
}

/// Closed-form inverse without the domain check. Beyond radius `pi` the
/// formula wraps around the sphere; callers only use it for grid labels.
#[inline]
pub(crate) fn chart_inverse_raw(u: (f64, f64), hemisphere: Hemisphere) -> Vec3 {
    let r = u.0.hypot(u.1);
    let sinc = if r < 1e-8 { 1.0 - r * r / 6.0 } else { r.sin() / r };
    hemisphere.reflect(&[sinc * u.0, sinc * u.1, r.cos()])
}

/// Hemisphere weights `(I, I_bar)` with `I^2 + I_bar^2 = 1`; `I` is one on the
/// northern cap below [`WEIGHT_START`] and vanishes past [`WEIGHT_SUPPORT`].
pub fn hemisphere_weights(x: &Vec3) -> (f64, f64) {
    (
        hemisphere_weight(x, Hemisphere::North),
        hemisphere_weight(x, Hemisphere::South),
    )
}

#[inline]
pub fn hemisphere_weight(x: &Vec3, hemisphere: Hemisphere) -> f64 {
    weight_of_polar(polar_angle(x, hemisphere))
}

#[inline]
pub(crate) fn weight_of_polar(theta: f64) -> f64 {
    let u = (theta - WEIGHT_START) / WEIGHT_WIDTH;
    if u <= 0.0 {
        1.0
    } else if u >= 1.0 {
        0.0
    } else {
        (FRAC_PI_2 * make_ramp().eval(u)).cos()
    }
}

/// Rotation in the plane spanned by `(1,0,0)` and `e`, identity on the
/// orthogonal complement. The antipode maps through a half turn about the
/// third axis.
pub fn rotation_to(e: &Vec3) -> Mat3 {
    let x = [1.0, 0.0, 0.0];
    let c = dot3(&x, e);
    if 1.0 + c < 1e-12 {
        return [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let v = cross3(&x, e);
    let k = [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]];
    let f = 1.0 / (1.0 + c);
    let mut r = [[0.0; 3]; 3];
    for (i, row) in r.iter_mut().enumerate() {
        for (jj, entry) in row.iter_mut().enumerate() {
            let mut k2 = 0.0;
            for (m, km) in k.iter().enumerate() {
                k2 += k[i][m] * km[jj];
            }
            *entry = if i == jj { 1.0 } else { 0.0 } + k[i][jj] + f * k2;
        }
    }
    r
}

/// Discrete label of a direction: a sign in 1+1 dimensions, a hemisphere
/// and chart grid point in 3+1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DirectionLabel {
    Sign(i8),
    Grid {
        hemisphere: Hemisphere,
        l1: i64,
        l2: i64,
    },
}

impl DirectionLabel {
    /// Unit vector for this label at secondary scale `j`.
    pub fn unit_vector(&self, j: i32) -> Vec3 {
        match *self {
            DirectionLabel::Sign(s) => [s as f64, 0.0, 0.0],
            DirectionLabel::Grid { hemisphere, l1, l2 } => {
                let h = grid_step(j);
                chart_inverse_raw((h * l1 as f64, h * l2 as f64), hemisphere)
            }
        }
    }

    pub fn hemisphere(&self) -> Option<Hemisphere> {
        match self {
            DirectionLabel::Grid { hemisphere, .. } => Some(*hemisphere),
            DirectionLabel::Sign(_) => None,
        }
    }
}

/// A grid direction together with its unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Direction {
    pub label: DirectionLabel,
    pub unit_vector: Vec3,
    /// Grid point lies inside the chart image of the weight support. The
    /// remaining points only carry the edge of a window into that image.
    pub principal: bool,
}

/// Chart grid step `pi 2^{-j/2}`.
#[inline]
pub fn grid_step(j: i32) -> f64 {
    PI * (-0.5 * j as f64).exp2()
}

/// Direction grid at secondary scale `j`.
///
/// In 1+1 dimensions this is `[+1, -1]`. In 3+1 it holds, per hemisphere,
/// every chart grid point `pi 2^{-j/2} (l1, l2)` whose angular window reaches
/// into the weight support, so the window squares sum to one on it.
pub fn direction_grid(d: usize, j: i32) -> Result<Vec<Direction>> {
    if j < 1 {
        return Err(CurveletError::InvalidIndex(format!("j = {j} must be >= 1")));
    }
    match d {
        1 => Ok([1i8, -1]
            .iter()
            .map(|&s| Direction {
                label: DirectionLabel::Sign(s),
                unit_vector: [s as f64, 0.0, 0.0],
                principal: true,
            })
            .collect()),
        3 => {
            let h = grid_step(j);
            let reach = ((WEIGHT_SUPPORT + h) / h).ceil() as i64 + 1;
            let mut out = Vec::new();
            for hemisphere in [Hemisphere::North, Hemisphere::South] {
                for l1 in -reach..=reach {
                    for l2 in -reach..=reach {
                        let (u1, u2) = (h * l1 as f64, h * l2 as f64);
                        let gap1 = (u1.abs() - h).max(0.0);
                        let gap2 = (u2.abs() - h).max(0.0);
                        if gap1.hypot(gap2) >= WEIGHT_SUPPORT {
                            continue;
                        }
                        let label = DirectionLabel::Grid { hemisphere, l1, l2 };
                        out.push(Direction {
                            label,
                            unit_vector: label.unit_vector(j),
                            principal: u1.hypot(u2) < WEIGHT_SUPPORT,
                        });
                    }
                }
            }
            Ok(out)
        }
        _ => Err(CurveletError::InvalidIndex(format!(
            "spatial dimension {d} not supported (use 1 or 3)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det3, mat_vec, norm3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let v = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = norm3(&v);
            if n > 0.1 && n < 1.0 {
                return [v[0] / n, v[1] / n, v[2] / n];
            }
        }
    }

    #[test]
    fn chart_pole_and_formula() {
        let (a, b) = chart(&[0.0, 0.0, 1.0], Hemisphere::North).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        let (a, b) = chart(&[0.3f64.sin(), 0.0, 0.3f64.cos()], Hemisphere::North).unwrap();
        assert!((a - 0.3).abs() < 1e-14 && b.abs() < 1e-14);
        let (a, _) = chart(&[0.3f64.sin(), 0.0, -(0.3f64.cos())], Hemisphere::South).unwrap();
        assert!((a - 0.3).abs() < 1e-14);
    }

    #[test]
    fn chart_rejects_far_points() {
        assert!(chart(&[0.0, 0.0, -1.0], Hemisphere::North).is_err());
        assert!(chart(&[0.0, 0.0, 1.0], Hemisphere::South).is_err());
        assert!(chart_inverse((2.5, 0.0), Hemisphere::North).is_err());
    }

    #[test]
    fn chart_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut n = 0;
        while n < 1000 {
            let x = random_unit(&mut rng);
            for (hemi, ok) in [(Hemisphere::North, x[2] > 0.2), (Hemisphere::South, x[2] < -0.2)] {
                if ok {
                    let u = chart(&x, hemi).unwrap();
                    let y = chart_inverse(u, hemi).unwrap();
                    for i in 0..3 {
                        assert!((x[i] - y[i]).abs() < 1e-12);
                    }
                    n += 1;
                }
            }
        }
    }

    #[test]
    fn weights_partition() {
        let (i, ib) = hemisphere_weights(&[0.0, 0.0, 1.0]);
        assert_eq!((i, ib), (1.0, 0.0));
        let (i, ib) = hemisphere_weights(&[1.0, 0.0, 0.0]);
        assert!((i - 0.5f64.sqrt()).abs() < 1e-12 && (ib - 0.5f64.sqrt()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = random_unit(&mut rng);
            let (i, ib) = hemisphere_weights(&x);
            assert!((i * i + ib * ib - 1.0).abs() < 1e-12);
            if i > 0.0 {
                assert!(polar_angle(&x, Hemisphere::North) < WEIGHT_SUPPORT);
            }
        }
    }

    #[test]
    fn rotation_properties() {
        let id = rotation_to(&[1.0, 0.0, 0.0]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((id[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
        let flip = rotation_to(&[-1.0, 0.0, 0.0]);
        let y = mat_vec(&flip, &[1.0, 0.0, 0.0]);
        assert_eq!(y, [-1.0, 0.0, 0.0]);
        assert_eq!(flip[2][2], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let e = random_unit(&mut rng);
            let r = rotation_to(&e);
            let y = mat_vec(&r, &[1.0, 0.0, 0.0]);
            for i in 0..3 {
                assert!((y[i] - e[i]).abs() < 1e-14);
            }
            assert!((det3(&r) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_one_dimension() {
        let g = direction_grid(1, 5).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].label, DirectionLabel::Sign(1));
        assert_eq!(g[1].label, DirectionLabel::Sign(-1));
        assert!(direction_grid(1, 0).is_err());
        assert!(direction_grid(3, 0).is_err());
    }

    #[test]
    fn grid_pole_point() {
        let g = direction_grid(3, 2).unwrap();
        let pole = g
            .iter()
            .find(|d| d.label == DirectionLabel::Grid { hemisphere: Hemisphere::North, l1: 0, l2: 0 })
            .unwrap();
        assert_eq!(pole.unit_vector, [0.0, 0.0, 1.0]);
    }

    fn nn_spacing(dirs: &[Direction]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for a in dirs {
            let mut best = f64::INFINITY;
            for b in dirs {
                if a.label == b.label {
                    continue;
                }
                let d = norm3(&[
                    a.unit_vector[0] - b.unit_vector[0],
                    a.unit_vector[1] - b.unit_vector[1],
                    a.unit_vector[2] - b.unit_vector[2],
                ]);
                best = best.min(d);
            }
            lo = lo.min(best);
            hi = hi.max(best);
        }
        (lo, hi)
    }

    #[test]
    fn grid_count_and_spacing() {
        let g6 = direction_grid(3, 6).unwrap();
        assert!(g6.len() >= 32 && g6.len() <= 512, "count {}", g6.len());
        for j in [2, 4, 6] {
            let g = direction_grid(3, j).unwrap();
            let north: Vec<_> = g
                .iter()
                .filter(|d| d.principal && d.label.hemisphere() == Some(Hemisphere::North))
                .copied()
                .collect();
            let (lo, hi) = nn_spacing(&north);
            let s = (-0.5 * j as f64).exp2();
            assert!(lo > 0.0);
            assert!(hi / lo <= 8.0, "j={j} lo={lo} hi={hi}");
            assert!(lo / s > 0.3 && hi / s < 4.0, "j={j} lo={} hi={}", lo / s, hi / s);
        }
    }
}
