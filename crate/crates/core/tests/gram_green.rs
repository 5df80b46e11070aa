use curvelab::curvelet::Curvelet;
use curvelab::geometry::sphere::DirectionLabel;
use curvelab::geometry::{Case, FourierKey, IntRange, SectorLabel};
use curvelab::gram::{frame_check, gram_block, inner, FrameCheckConfig, TestFunction};
use curvelab::green::{decay_fit, green_block, green_entry, green_entry_shifted, DecaySample};
use curvelab::quadrature::QuadratureSpec;
use curvelab::CurveletError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn key(case: Case, m: i32, j: i32) -> FourierKey {
    FourierKey { case, d: 1, m, j, direction: DirectionLabel::Sign(1), sector: SectorLabel::TP }
}

fn mu(case: Case) -> f64 {
    if case == Case::Kg {
        1.0
    } else {
        0.0
    }
}

fn at(key: FourierKey, k: [i64; 2]) -> Curvelet {
    Curvelet::new(key.with_k([k[0], k[1], 0, 0]), mu(key.case)).unwrap()
}

fn rel(a: num_complex::Complex64, b: num_complex::Complex64, floor: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(floor)
}

#[test]
fn block_matches_inner() {
    let q = QuadratureSpec::default();
    for (ka, kb) in [(key(Case::Wave, 0, 2), key(Case::Wave, 0, 2)), (key(Case::Wave, 0, 2), key(Case::Wave, 1, 3)), (key(Case::Kg, 1, 3), key(Case::Kg, 1, 4))] {
        let a = at(ka, [0, 0]);
        let block = gram_block(&a, &kb, &[IntRange::new(-3, 3), IntRange::new(-3, 3)], &q).unwrap();
        let scale = inner(&a, &a, &q).unwrap().value.norm();
        for p in block.iter().filter(|p| p.b.k[0].abs() + p.b.k[1].abs() <= 3) {
            let direct = inner(&a, &at(kb, [p.b.k[0], p.b.k[1]]), &q).unwrap();
            let e = (p.value - direct.value).norm() / scale;
            assert!(e < 1e-8, "{} vs {}: {e:.2e}", p.a, p.b);
        }
    }
}

#[test]
fn block_is_hermitian() {
    let q = QuadratureSpec::default();
    // translates of one window share a lattice, so <a_0, a_k> = conj <a_0, a_-k>
    let ka = key(Case::Wave, 1, 3);
    let ab = gram_block(&at(ka, [0, 0]), &ka, &[IntRange::new(-3, 3), IntRange::new(-3, 3)], &q).unwrap();
    for p in &ab {
        let k = [-p.b.k[0], -p.b.k[1]];
        let mirror = ab.iter().find(|r| r.b.k[0] == k[0] && r.b.k[1] == k[1]).unwrap();
        assert!(rel(p.value, mirror.value.conj(), 1e-12) < 1e-8, "{} {:?} {:?}", p.b, p.value, mirror.value);
    }
}

#[test]
fn inner_is_translation_covariant() {
    let q = QuadratureSpec::default();
    let (ka, kb) = (key(Case::Wave, 0, 2), key(Case::Wave, 0, 2));
    let base = inner(&at(ka, [0, 0]), &at(kb, [1, -2]), &q).unwrap().value;
    let moved = inner(&at(ka, [3, 1]), &at(kb, [4, -1]), &q).unwrap().value;
    assert!(rel(base, moved, 1e-12) < 1e-9);
}

#[test]
fn doubling_quadrature_changes_little() {
    let q = QuadratureSpec::default();
    let fine = QuadratureSpec { base_order: 2 * q.base_order, ..q };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let (m, j) = (rng.gen_range(0..=2), rng.gen_range(3..=5));
        let ka = key(Case::Wave, m, j);
        let kb = key(Case::Wave, m + rng.gen_range(0..=1), j + rng.gen_range(-1..=1));
        let a = at(ka, [0, 0]);
        let b = at(kb, [rng.gen_range(-3..=3), rng.gen_range(-3..=3)]);
        let v1 = inner(&a, &b, &q).unwrap().value;
        let v2 = inner(&a, &b, &fine).unwrap().value;
        let floor = 1e-8 * inner(&a, &a, &q).unwrap().value.norm();
        assert!(rel(v1, v2, floor) < 1e-8, "{} {}: {v1} vs {v2}", a.index, b.index);
    }
}

#[test]
fn norm_matches_real_space_integral() {
    // int |psi|^2 dx over a grid of the adapted coordinates, compared with
    // the Fourier-side norm
    let c = at(key(Case::Wave, 0, 2), [0, 0]);
    let f = &c.frame;
    let quad = QuadratureSpec { max_nodes_per_axis: 1 << 14, ..QuadratureSpec::default() };
    let (n0, n1) = (400usize, 400usize);
    let (h0, h1) = (0.25 * f.lattice_spacings[0], 0.25 * f.lattice_spacings[1]);
    let p_long: Vec<f64> = (0..n0).map(|i| (i as f64 - n0 as f64 / 2.0) * h0).collect();
    let p_off: Vec<f64> = (0..n1).map(|i| (i as f64 - n1 as f64 / 2.0) * h1).collect();
    let vals = c.real_eval_grid(&p_long, &p_off, &quad).unwrap();
    // dx = |det(u_long, u_off)| dp_long dp_off = 2 dp_long dp_off
    let space: f64 = vals.iter().map(|v| v.norm_sqr()).sum::<f64>() * h0 * h1 * 2.0;
    let fourier = inner(&c, &c, &QuadratureSpec::default()).unwrap().value.re;
    assert!((space / fourier - 1.0).abs() < 0.01, "{space} vs {fourier}");
}

#[test]
fn neighbour_count_is_scale_independent() {
    let q = QuadratureSpec::default();
    let mut counts = Vec::new();
    for (m, j) in [(0, 3), (1, 4), (2, 6)] {
        let a = at(key(Case::Wave, m, j), [0, 0]);
        let mut n = 0;
        for dm in -2..=2 {
            for dj in -2..=2 {
                for e in [1i8, -1] {
                    for s in SectorLabel::ALL {
                        if (dm, dj, e, s) == (0, 0, 1, SectorLabel::TP) || j + dj < 1 {
                            continue;
                        }
                        let kb = FourierKey { m: m + dm, j: j + dj, direction: DirectionLabel::Sign(e), sector: s, ..a.index.key };
                        let Ok(b) = Curvelet::new(kb.with_k([0; 4]), 0.0) else { continue };
                        if inner(&a, &b, &q).unwrap().value.norm() > 0.0 {
                            n += 1;
                        }
                    }
                }
            }
        }
        counts.push(n);
    }
    assert!(counts.iter().all(|c| *c == counts[0]), "{counts:?}");
    assert!(counts[0] <= 8);
}

#[test]
fn frame_check_on_a_frame_element() {
    let cfg = FrameCheckConfig {
        case: Case::Wave,
        mu: 0.0,
        m_range: (-1, 5),
        j_range: (1, 7),
        grid: 256,
        quad: QuadratureSpec::default(),
    };
    let idx = key(Case::Wave, 2, 4).with_k([1, -1, 0, 0]);
    let r = frame_check(&cfg, &[TestFunction::Curvelet(idx)]).unwrap()[0];
    assert!(r.deviation.abs() < 1e-6, "{r:?}");
    assert!(!r.warning);
}

#[test]
fn frame_check_rejects_zero_function() {
    let cfg = FrameCheckConfig {
        case: Case::Wave,
        mu: 0.0,
        m_range: (0, 3),
        j_range: (1, 5),
        grid: 64,
        quad: QuadratureSpec::default(),
    };
    let zero = TestFunction::Bump { reference: key(Case::Wave, 1, 3), center: [0.0; 2], radius: [0.0, 0.5], shift: [0.0; 4] };
    assert!(matches!(frame_check(&cfg, &[zero]), Err(CurveletError::Degenerate(_))));
}

#[test]
fn green_diagonal_is_positive_and_bounded() {
    let q = QuadratureSpec::default();
    for m in 0..=3 {
        let c = at(key(Case::Kg, m, 4), [0, 0]);
        let g = green_entry(&c, &c, &q).unwrap();
        let n = inner(&c, &c, &q).unwrap().value.re;
        assert!(g.pair.value.im.abs() < 1e-12 * g.pair.value.re);
        assert!(g.pair.value.re > 0.0 && g.pair.value.re <= g.symbol_bound * n * (1.0 + 1e-9));
    }
}

#[test]
fn green_entries_obey_cauchy_schwarz_bound() {
    let q = QuadratureSpec::default();
    let a = at(key(Case::Kg, 1, 3), [0, 0]);
    let na = inner(&a, &a, &q).unwrap().value.re;
    for (m, j, k) in [(1, 3, [1, 0]), (2, 3, [0, 1]), (1, 4, [-1, 2]), (2, 4, [0, 0])] {
        let b = at(key(Case::Kg, m, j), k);
        let nb = inner(&b, &b, &q).unwrap().value.re;
        let g = green_entry(&a, &b, &q).unwrap();
        assert!(g.pair.value.norm() <= g.symbol_bound * (na * nb).sqrt() * (1.0 + 1e-9), "{}", b.index);
    }
}

#[test]
fn green_block_matches_entries() {
    let q = QuadratureSpec::default();
    let a = at(key(Case::Kg, 1, 3), [0, 0]);
    let kb = key(Case::Kg, 1, 4);
    let block = green_block(&a, &kb, &[IntRange::new(-2, 2), IntRange::new(-2, 2)], &q).unwrap();
    for k in [[0i64, 0], [1, -1], [-2, 2]] {
        let e = green_entry(&a, &at(kb, k), &q).unwrap();
        let b = block.iter().find(|g| g.pair.b.k[..2] == k).unwrap();
        let scale = green_entry(&a, &a, &q).unwrap().pair.value.norm();
        assert!((b.pair.value - e.pair.value).norm() / scale < 1e-8, "{k:?}");
    }
}

#[test]
fn green_prescription_does_not_matter() {
    let q = QuadratureSpec::default();
    for (m, j, k) in [(0, 3, [0i64, 0]), (1, 4, [2, -1]), (2, 5, [0, 3])] {
        let a = at(key(Case::Kg, m, j), [0, 0]);
        let b = at(key(Case::Kg, m, j), k);
        let eps = 1e-6 * (-(2 * m + 6) as f64).exp2();
        let g0 = green_entry(&a, &b, &q).unwrap().pair.value;
        for s in [1.0, -1.0] {
            let g = green_entry_shifted(&a, &b, &q, s * eps).unwrap().pair.value;
            assert!(rel(g0, g, 0.0) < 1e-6, "{m} {j} {k:?}: {g0} vs {g}");
        }
    }
}

#[test]
fn decay_fit_tolerates_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<DecaySample> = (0..200)
        .map(|i| {
            let total = 2.0 * 500f64.powf(i as f64 / 199.0);
            let v = 3.0 * total.powf(-4.5) * (1.0 + 0.1 * rng.gen_range(-1.0..1.0));
            DecaySample { total, rescaled_abs: v, abs: v, quad_err: 0.0, m: (0, 0) }
        })
        .collect();
    let r = decay_fit(&samples).unwrap();
    assert!((r.fitted_n - 4.5).abs() < 0.05, "{r:?}");
    assert!(r.residual_max < 0.05);
}

#[test]
fn far_offsets_are_smaller() {
    let q = QuadratureSpec::default();
    let ka = key(Case::Wave, 0, 2);
    let block = gram_block(&at(ka, [0, 0]), &ka, &[IntRange::new(-8, 8), IntRange::new(-2, 2)], &q).unwrap();
    let max_at = |r: i64| block.iter().filter(|p| p.b.k[0].abs() == r).map(|p| p.value.norm()).fold(0.0, f64::max);
    assert!(max_at(8) < max_at(2), "{} vs {}", max_at(8), max_at(2));
}
