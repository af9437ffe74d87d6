use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use sphinpaint::harmonics::{analyze, eval_ylm, synthesize};
use sphinpaint::objective::{constraint, phi, psi, SmoothingParams};
use sphinpaint::prox::{group_prox, scalar_prox, threshold, ProxInstance};
use sphinpaint::{
    build_grid, build_mask, build_model, BandLimit, CoefficientVector, DegreeWeights, HarmonicIndex, MaskSpec, Shape,
};

fn coeffs(band: BandLimit, raw: &[(f64, f64)]) -> CoefficientVector {
    let data = raw
        .iter()
        .take(band.dim())
        .map(|&(a, b)| Complex64::new(a, b))
        .collect();
    CoefficientVector::from_vec(band, data).unwrap()
}

fn raw_strategy(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analysis_inverts_synthesis(degree in 0usize..14, raw in raw_strategy(225)) {
        let band = BandLimit::new(degree);
        let a = coeffs(band, &raw);
        let grid = build_grid(degree);
        let back = analyze(&synthesize(&a, &grid).unwrap(), &grid, band).unwrap();
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn quadrature_norm_matches_coefficient_norm(degree in 0usize..14, raw in raw_strategy(225)) {
        let band = BandLimit::new(degree);
        let a = coeffs(band, &raw);
        let grid = build_grid(degree);
        let field = synthesize(&a, &grid).unwrap();
        let energy = grid.integrate(field.iter().map(|z| z.norm_sqr()));
        prop_assert!((energy - a.norm().powi(2)).abs() <= 1e-12 * (1.0 + energy));
    }

    #[test]
    fn negative_orders_are_conjugates(l in 0usize..30, m_frac in 0.0f64..1.0, theta in 0.0f64..PI, lon in 0.0f64..(2.0 * PI)) {
        let m = (m_frac * l as f64).floor() as i64;
        let pos = eval_ylm(HarmonicIndex::new(l, m), theta, lon).unwrap();
        let neg = eval_ylm(HarmonicIndex::new(l, -m), theta, lon).unwrap();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((neg - pos.conj() * sign).norm() < 1e-12);
    }

    #[test]
    fn constraint_matches_direct_integral(
        raw in raw_strategy(49),
        field_raw in raw_strategy(512),
        center in (0.0f64..PI, 0.0f64..(2.0 * PI)),
        radius in 0.3f64..1.2,
    ) {
        let degree = 6;
        let band = BandLimit::new(degree);
        let grid = build_grid(degree);
        let spec = MaskSpec {
            shape: Shape::PolarCap { center_colatitude: center.0, center_longitude: center.1, angular_radius: radius },
            complement: true,
        };
        let mask = build_mask(&spec, &grid).unwrap();
        let observed: Vec<Complex64> = (0..grid.node_count())
            .map(|j| { let (a, b) = field_raw[j % field_raw.len()]; Complex64::new(a + 2.0, b) })
            .collect();
        let model = build_model(&grid, &mask, &observed, band, 1e-3, DegreeWeights::standard(band, 0.5).unwrap()).unwrap();
        let a = coeffs(band, &raw);
        let t = synthesize(&a, &grid).unwrap();
        let direct: f64 = (0..grid.node_count())
            .map(|j| {
                let w = grid.weights()[j];
                if mask.indicator()[j] { w * (t[j] - observed[j]).norm_sqr() } else { w * observed[j].norm_sqr() }
            })
            .sum();
        let alg = constraint(&a, &model).value + model.rho();
        prop_assert!((alg - direct).abs() <= 1e-10 * direct);
    }

    #[test]
    fn phi_is_p_homogeneous(raw in raw_strategy(36), t in 0.01f64..50.0, p in 0.1f64..0.9) {
        let band = BandLimit::new(5);
        let w = DegreeWeights::standard(band, p).unwrap();
        let a = coeffs(band, &raw);
        let lhs = phi(&a.scaled(t), &w);
        let rhs = t.powf(p) * phi(&a, &w);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn phi_invariant_under_group_rotations(raw in raw_strategy(36), phases in proptest::collection::vec(0.0f64..(2.0 * PI), 6), swap in 0usize..11) {
        let band = BandLimit::new(5);
        let w = DegreeWeights::standard(band, 0.5).unwrap();
        let a = coeffs(band, &raw);
        let mut b = a.clone();
        for (l, ph) in phases.iter().enumerate() {
            let g = b.group_mut(l);
            // a phase and a swap within the group are both unitary
            g.iter_mut().for_each(|z| *z *= Complex64::from_polar(1.0, *ph));
            let n = g.len();
            g.swap(0, swap % n);
        }
        prop_assert!((phi(&a, &w) - phi(&b, &w)).abs() < 1e-12);
    }

    #[test]
    fn smoothing_sandwich(s in -10.0f64..10.0, lambda in 0.1f64..1e3, mu in 1e-4f64..5.0) {
        let params = SmoothingParams::new(lambda, mu).unwrap();
        let gap = lambda * s.max(0.0) - psi(s, params);
        let slack = 8.0 * f64::EPSILON * lambda * (s.abs() + mu);
        prop_assert!(gap >= -slack);
        prop_assert!(gap <= lambda * mu / 2.0 + slack);
    }

    #[test]
    fn prox_beats_sampled_points(r in 0.0f64..3.0, beta in 0.0f64..3.0, p in 0.1f64..0.9, m in 0.1f64..10.0) {
        let inst = ProxInstance::new(r, beta, p, m).unwrap();
        let t = scalar_prox(inst);
        prop_assert!(t >= 0.0 && t <= r);
        let best = inst.objective(t);
        for i in 0..=400 {
            let s = r * i as f64 / 400.0;
            prop_assert!(best <= inst.objective(s) + 1e-12 * (1.0 + best));
        }
    }

    #[test]
    fn prox_threshold_separates_branches(beta in 0.05f64..3.0, p in 0.1f64..0.9, m in 0.1f64..10.0) {
        let thr = threshold(beta, p, m);
        let below = scalar_prox(ProxInstance::new(thr * (1.0 - 1e-6), beta, p, m).unwrap());
        let above = scalar_prox(ProxInstance::new(thr * (1.0 + 1e-6), beta, p, m).unwrap());
        prop_assert_eq!(below, 0.0);
        prop_assert!(above > 0.0);
    }

    #[test]
    fn group_prox_keeps_direction(raw in raw_strategy(7), beta in 0.0f64..2.0, m in 0.1f64..10.0) {
        let z: Vec<Complex64> = raw.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let out = group_prox(&z, beta, 0.5, m);
        let rz = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let ro = out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(ro <= rz + 1e-15);
        if ro > 0.0 {
            for (a, b) in out.iter().zip(&z) {
                prop_assert!((a - b * (ro / rz)).norm() < 1e-12);
            }
        }
    }
}
