//! Integration over a window support in its natural parameters.
//!
//! A window with scales `(m, j)` is parametrized by `s, t in (-1, 1)` through
//! `|q| = 4^(m+s)` and `xi_0^2/|q| = 2^(j+t)`, plus the chart coordinates `u`
//! of the direction in 3+1 dimensions. Both radial window factors are
//! analytic on the unit panels `[-1, 0]` and `[0, 1]`, and the panels of a
//! neighbouring scale are integer shifts of these, so composite Gauss rules on
//! unit panels converge geometrically for products of windows.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::sphere::{chart_inverse_raw, grid_step, DirectionLabel, Hemisphere};
use crate::geometry::AdaptedFrame;
use crate::linalg::Vec4;
use crate::quadrature::composite;

/// Parameter domain of an integral.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Domain {
    pub m: i32,
    pub j: i32,
    pub time_sign: f64,
    pub cone_sign: f64,
    pub mu2: f64,
    /// Spatial unit vector for 1+1 dimensions.
    pub e_vec: [f64; 3],
    pub s: (f64, f64),
    pub t: (f64, f64),
    /// Extra panel breakpoints for the `s` and `t` axes.
    pub cuts: [Vec<f64>; 2],
    /// Chart square for 3+1 dimensions.
    pub angular: Option<AngularDomain>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AngularDomain {
    pub hemisphere: Hemisphere,
    pub center: (f64, f64),
    pub half_width: f64,
}

impl Domain {
    /// Full support of a window.
    pub fn of_frame(frame: &AdaptedFrame) -> Self {
        let key = &frame.key;
        let angular = match key.direction {
            DirectionLabel::Sign(_) => None,
            DirectionLabel::Grid { hemisphere, l1, l2 } => {
                let h = grid_step(key.j);
                Some(AngularDomain { hemisphere, center: (h * l1 as f64, h * l2 as f64), half_width: h })
            }
        };
        Self {
            m: key.m,
            j: key.j,
            time_sign: key.sector.time_sign as f64,
            cone_sign: key.sector.cone_sign as f64,
            mu2: frame.mu * frame.mu,
            e_vec: frame.e_vec,
            s: (-1.0, 1.0),
            t: (-1.0, 1.0),
            cuts: [Vec::new(), Vec::new()],
            angular,
        }
    }

    /// Restricts the radial parameters to where a window with scales
    /// `(m2, j2)` in the same sector can be nonzero. Returns `None` when the
    /// overlap is empty.
    pub fn restrict_to(mut self, m2: i32, j2: i32) -> Option<Self> {
        let ds = (m2 - self.m) as f64;
        let dt = (j2 - self.j) as f64;
        self.s = (self.s.0.max(-1.0 + ds), self.s.1.min(1.0 + ds));
        self.t = (self.t.0.max(-1.0 + dt), self.t.1.min(1.0 + dt));
        if self.s.0 < self.s.1 && self.t.0 < self.t.1 {
            Some(self)
        } else {
            None
        }
    }

    pub fn dims(&self) -> usize {
        if self.angular.is_some() {
            4
        } else {
            2
        }
    }

    /// Panel breakpoints per parameter axis.
    pub fn breaks(&self) -> Vec<Vec<f64>> {
        let unit = |r: (f64, f64), extra: &[f64]| {
            let mut b = vec![r.0];
            let mut x = r.0.floor() + 1.0;
            while x < r.1 {
                b.push(x);
                x += 1.0;
            }
            b.extend(extra.iter().copied().filter(|c| *c > r.0 && *c < r.1));
            b.push(r.1);
            b.sort_by(|a, b| a.partial_cmp(b).unwrap());
            b.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            b
        };
        let mut out = vec![unit(self.s, &self.cuts[0]), unit(self.t, &self.cuts[1])];
        if let Some(a) = &self.angular {
            let h = a.half_width;
            out.push(vec![a.center.0 - h, a.center.0, a.center.0 + h]);
            out.push(vec![a.center.1 - h, a.center.1, a.center.1 + h]);
        }
        out
    }

    /// Frequency and Jacobian `|d xi / d params|` at a parameter point, or
    /// `None` where the parametrization leaves real frequencies.
    #[inline]
    pub fn map(&self, p: &[f64]) -> Option<(Vec4, f64)> {
        let q = (2.0 * (self.m as f64 + p[0])).exp2();
        let c = (self.j as f64 + p[1]).exp2();
        let xi0sq = c * q;
        let rho2 = xi0sq - self.cone_sign * q - self.mu2;
        if rho2 <= 0.0 {
            return None;
        }
        let rho = rho2.sqrt();
        let xi0 = self.time_sign * xi0sq.sqrt();
        let jac = LN_2 * LN_2 * xi0.abs() * q / (2.0 * rho);
        match &self.angular {
            None => {
                let e = &self.e_vec;
                Some(([xi0, rho * e[0], rho * e[1], rho * e[2]], jac))
            }
            Some(a) => {
                let r = p[2].hypot(p[3]);
                let sinc = if r < 1e-8 { 1.0 - r * r / 6.0 } else { r.sin() / r };
                let w = chart_inverse_raw((p[2], p[3]), a.hemisphere);
                Some(([xi0, rho * w[0], rho * w[1], rho * w[2]], jac * rho2 * sinc))
            }
        }
    }

    /// Tensor nodes of the composite rule with `counts[a]` nodes per panel on
    /// axis `a`, with parameter values and weights.
    pub fn axis_rules(&self, counts: &[usize]) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.breaks()
            .iter()
            .zip(counts)
            .map(|(b, &n)| composite(b, n))
            .collect()
    }

    /// Phase variation of `xi . y` along each parameter axis, measured on a
    /// coarse grid and divided by the number of panels on that axis.
    pub fn phase_spans(&self, y: &Vec4) -> Vec<f64> {
        let dims = self.dims();
        let breaks = self.breaks();
        let g = 9usize;
        let ranges: Vec<(f64, f64)> = breaks.iter().map(|b| (b[0], *b.last().unwrap())).collect();
        let coord = |a: usize, i: usize| ranges[a].0 + (ranges[a].1 - ranges[a].0) * i as f64 / (g - 1) as f64;
        let total = g.pow(dims as u32);
        let mut values = vec![f64::NAN; total];
        for (flat, v) in values.iter_mut().enumerate() {
            let mut p = [0.0; 4];
            let mut r = flat;
            for (a, slot) in p.iter_mut().enumerate().take(dims) {
                *slot = coord(a, r % g);
                r /= g;
            }
            if let Some((xi, _)) = self.map(&p[..dims]) {
                *v = crate::linalg::minkowski(&xi, y);
            }
        }
        let mut spans = vec![0.0f64; dims];
        let stride = |a: usize| g.pow(a as u32);
        for (a, span) in spans.iter_mut().enumerate() {
            for flat in 0..total {
                if (flat / stride(a)) % g != 0 {
                    continue;
                }
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..g {
                    let v = values[flat + i * stride(a)];
                    if v.is_finite() {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                if hi > lo {
                    *span = span.max(hi - lo);
                }
            }
            *span /= (breaks[a].len() - 1).max(1) as f64;
        }
        spans
    }

    /// `sum_nodes w f(xi)` with the Jacobian included. The outer axis is
    /// split across threads and partial sums are added in axis order.
    pub fn integrate<F>(&self, counts: &[usize], f: F) -> Complex64
    where
        F: Fn(&Vec4) -> Complex64 + Sync,
    {
        let rules = self.axis_rules(counts);
        let dims = self.dims();
        let (xs0, ws0) = &rules[0];
        let partial: Vec<Complex64> = xs0
            .par_iter()
            .zip(ws0.par_iter())
            .map(|(&p0, &w0)| {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut p = [p0, 0.0, 0.0, 0.0];
                let (xs1, ws1) = &rules[1];
                for (&p1, &w1) in xs1.iter().zip(ws1) {
                    p[1] = p1;
                    if dims == 2 {
                        if let Some((xi, jac)) = self.map(&p[..2]) {
                            acc += f(&xi) * (w0 * w1 * jac);
                        }
                        continue;
                    }
                    let (xs2, ws2) = &rules[2];
                    let (xs3, ws3) = &rules[3];
                    for (&p2, &w2) in xs2.iter().zip(ws2) {
                        p[2] = p2;
                        for (&p3, &w3) in xs3.iter().zip(ws3) {
                            p[3] = p3;
                            if let Some((xi, jac)) = self.map(&p) {
                                acc += f(&xi) * (w0 * w1 * w2 * w3 * jac);
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        partial.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{adapted_frame, Case, FourierKey, SectorLabel};

    #[test]
    fn volume_of_wave_support() {
        // integral of 1 over the parameter rectangle equals the volume of
        // {|q| in (1/4, 4), xi_0^2/|q| in (2, 8)} computed in (xi_0, xi_1)
        let key = FourierKey {
            case: Case::Wave,
            d: 1,
            m: 0,
            j: 2,
            direction: DirectionLabel::Sign(1),
            sector: SectorLabel::TP,
        };
        let f = adapted_frame(&key, 0.0).unwrap();
        let dom = Domain::of_frame(&f);
        let v = dom.integrate(&[40, 40], |_| Complex64::new(1.0, 0.0)).re;
        // independent: in (eta_-, eta_+) the region is q = eta_- eta_+,
        // r = eta_+/eta_-, c = (1+r)^2/(4r); area = int dq dr / (2 r) / 2
        // because d eta_- d eta_+ = dq dr / (2r) and d xi = d eta / 2.
        let rule = crate::quadrature::gauss_legendre(200);
        let r_of_c = |c: f64| {
            let b = 4.0 * c - 2.0;
            (b + (b * b - 4.0).sqrt()) / 2.0
        };
        let (r_lo, r_hi) = (r_of_c(2.0), r_of_c(8.0));
        let (rs, ws) = rule.on(r_lo.ln(), r_hi.ln());
        let lr: f64 = rs.iter().zip(&ws).map(|(_, w)| w / 2.0).sum();
        let expect = (4.0 - 0.25) * lr / 2.0;
        assert!((v - expect).abs() < 1e-10 * expect, "{v} vs {expect}");
    }
}
