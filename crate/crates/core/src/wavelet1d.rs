//! One-dimensional spectral windows.
//!
//! Everything in the frame is built from three profiles sharing one smooth
//! ramp: the Meyer-type mother window on `[1/2, 2]`, the father window that
//! resums the coarse scales, and the angular bump used for direction
//! windows. Each satisfies an exact partition-of-unity identity that the
//! rest of the crate relies on.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

const TWO_PI: f64 = 2.0 * PI;

/// Degree-7 polynomial ramp `u^4 (35 - 84u + 70u^2 - 20u^3)`, clamped to
/// `[0, 1]` outside the unit interval.
///
/// Satisfies `b(u) + b(1 - u) = 1` and has three vanishing derivatives at
/// both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ramp {
    pub degree: u32,
}

impl Default for Ramp {
    fn default() -> Self {
        make_ramp()
    }
}

impl Ramp {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u >= 1.0 {
            1.0
        } else {
            let u2 = u * u;
            u2 * u2 * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)))
        }
    }

    /// Short label echoed into output manifests.
    pub fn label(&self) -> String {
        format!("poly{}", self.degree)
    }
}

pub fn make_ramp() -> Ramp {
    Ramp { degree: 7 }
}

/// Mother window: `sin(pi/2 b(log2 2t))` on `[1/2, 1]`, `cos(pi/2 b(log2 t))`
/// on `[1, 2]`, zero elsewhere.
#[inline]
pub fn mother_hat(t: f64) -> f64 {
    if !(t > 0.5 && t < 2.0) {
        return 0.0;
    }
    let ramp = Ramp { degree: 7 };
    if t <= 1.0 {
        (FRAC_PI_2 * ramp.eval((2.0 * t).log2())).sin()
    } else {
        (FRAC_PI_2 * ramp.eval(t.log2())).cos()
    }
}

/// Father window: `sqrt(1 - sum_{j>=1} mother(2^-j s)^2)`.
///
/// Only the scales whose support can contain `s` contribute, so the sum is
/// finite: for `s < 1` it is empty and for `s >= 2` it is complete.
pub fn father_hat(s: f64) -> f64 {
    let s = s.abs();
    if s <= 1.0 {
        return 1.0;
    }
    if s >= 2.0 {
        return 0.0;
    }
    // s in (1, 2): only j = 1 reaches it.
    let acc = mother_hat(0.5 * s).powi(2);
    (1.0 - acc).max(0.0).sqrt()
}

/// Even bump `cos(pi/2 b(|x| / 2pi))` supported on `[-2pi, 2pi]`.
#[inline]
pub fn angular_bump(xi: f64) -> f64 {
    let a = xi.abs();
    if a >= TWO_PI {
        return 0.0;
    }
    let ramp = Ramp { degree: 7 };
    (FRAC_PI_2 * ramp.eval(a / TWO_PI)).cos()
}

/// Translated and dilated bump `angular_bump(2^{j/2} x - 2pi l)`, centred at
/// `2pi l 2^{-j/2}`. For fixed `j` the squares over all `l` sum to one.
#[inline]
pub fn angular_window(j: i32, l: i64, xi: f64) -> f64 {
    let scale = (0.5 * j as f64).exp2();
    angular_bump(scale * xi - TWO_PI * l as f64)
}

/// The three profiles bundled with the ramp they share.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SpectralProfiles {
    pub ramp: Ramp,
}

impl SpectralProfiles {
    pub fn new() -> Self {
        Self { ramp: make_ramp() }
    }

    pub fn mother(&self, t: f64) -> f64 {
        mother_hat(t)
    }

    pub fn father(&self, s: f64) -> f64 {
        father_hat(s)
    }

    pub fn angular_bump(&self, xi: f64) -> f64 {
        angular_bump(xi)
    }

    pub fn angular_window(&self, j: i32, l: i64, xi: f64) -> f64 {
        angular_window(j, l, xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_poly(u: f64) -> f64 {
        // expanded form, independent of the Horner evaluation
        35.0 * u.powi(4) - 84.0 * u.powi(5) + 70.0 * u.powi(6) - 20.0 * u.powi(7)
    }

    #[test]
    fn ramp_values() {
        let b = make_ramp();
        assert_eq!(b.eval(0.0), 0.0);
        assert_eq!(b.eval(1.0), 1.0);
        assert!((b.eval(0.5) - 0.5).abs() < 1e-15);
        assert!((b.eval(0.25) - ramp_poly(0.25)).abs() < 1e-15);
        assert!((b.eval(0.25) + b.eval(0.75) - 1.0).abs() < 1e-15);
        assert_eq!(b.eval(-3.0), 0.0);
        assert_eq!(b.eval(7.0), 1.0);
    }

    #[test]
    fn ramp_monotone_and_flat_ends() {
        let b = make_ramp();
        let mut prev = 0.0;
        for i in 0..=1000 {
            let v = b.eval(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
        // b(h) ~ 35 h^4
        let h = 1e-3;
        assert!(b.eval(h) < 40.0 * h.powi(4));
        assert!(1.0 - b.eval(1.0 - h) < 40.0 * h.powi(4));
    }

    #[test]
    fn mother_examples() {
        assert!((mother_hat(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(mother_hat(0.4), 0.0);
        assert_eq!(mother_hat(2.5), 0.0);
        assert_eq!(mother_hat(0.5), 0.0);
        assert_eq!(mother_hat(2.0), 0.0);
        let s = mother_hat(1.3).powi(2) + mother_hat(0.65).powi(2);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn father_examples() {
        assert_eq!(father_hat(0.5), 1.0);
        assert_eq!(father_hat(4.0), 0.0);
        let s = 1.5;
        let total: f64 = father_hat(s).powi(2)
            + (1..40).map(|j| mother_hat(s * (-j as f64).exp2()).powi(2)).sum::<f64>();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angular_examples() {
        for j in 1..6 {
            for l in -3..=3 {
                let c = TWO_PI * l as f64 * (-0.5 * j as f64).exp2();
                assert!((angular_window(j, l, c) - 1.0).abs() < 1e-14);
            }
        }
        assert_eq!(angular_bump(TWO_PI), 0.0);
        assert_eq!(angular_bump(-7.0), 0.0);
        let s: f64 = (-5..=5).map(|l| angular_window(4, l, 0.3).powi(2)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_shift_identity() {
        for i in 1..1000 {
            let x = TWO_PI * i as f64 / 1000.0;
            let s = angular_bump(x).powi(2) + angular_bump(x - TWO_PI).powi(2);
            assert!((s - 1.0).abs() < 1e-14, "x={x}");
        }
    }
}
