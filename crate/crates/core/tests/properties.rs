use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use nrflat::boundary::{discretization_bound, extract_flats_geometric, sample_boundary, support_function, GeometricOptions};
use nrflat::family::{build_family_matrix, predicted_flats, FamilyParams};
use nrflat::flatdetect::{analyze, flat_length, FlatPortion};
use nrflat::linalg::{eig_hermitian, trace_words, HermitianMatrix};
use nrflat::nrpoly::{nr_poly_general, nr_poly_nilpotent};
use nrflat::random::{gaussian_matrix, rng, strictly_upper, strictly_upper_real, unitary};
use nrflat::scalar::angle_distance;
use nrflat::singularity::find_real_singularities;
use nrflat::{Complex, Matrix};

fn family(seed: u64) -> FamilyParams<f64> {
    use rand::Rng;
    let mut r = rng(seed);
    loop {
        let d = r.random_range(0.3..3.0);
        let theta = r.random_range(0.15 * PI..0.85 * PI);
        let x = 2.0 * d * r.random_range(0.15..0.85);
        let Ok(ym) = nrflat::family::ymax(d, theta, x) else { continue };
        let y = ym * r.random_range(0.3..1.0);
        if let Ok(p) = FamilyParams::new(d, theta, x, y, 0.0, r.random_bool(0.5)) {
            return p;
        }
    }
}

fn singular_flats(a: &Matrix) -> Vec<FlatPortion<f64>> {
    let rep = analyze(a).unwrap();
    let mut f: Vec<_> = rep.singularity_flats().copied().collect();
    f.sort_by(|x, y| x.normal_angle.total_cmp(&y.normal_angle));
    f
}

fn close_flats(a: &[FlatPortion<f64>], b: &[FlatPortion<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|f| {
            b.iter().any(|g| {
                let d = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
                let same = d(f.endpoint1, g.endpoint1).max(d(f.endpoint2, g.endpoint2));
                let swap = d(f.endpoint1, g.endpoint2).max(d(f.endpoint2, g.endpoint1));
                same.min(swap) <= tol && (f.length - g.length).abs() <= tol
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frobenius_trace(seed in any::<u64>()) {
        let a: Matrix = gaussian_matrix(&mut rng(seed), 4);
        let t = a.mul(&a.adjoint()).trace();
        let s: f64 = a.entries().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!(t.re >= 0.0 && (t.re - s).abs() <= 1e-12 * s.max(1.0) && t.im.abs() <= 1e-12 * s.max(1.0));
    }

    #[test]
    fn trace_words_unitary_invariance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a: Matrix = gaussian_matrix(&mut r, 4);
        let u: Matrix = unitary(&mut r, 4);
        let (w1, w2) = (trace_words(&a), trace_words(&a.unitary_similarity(&u)));
        let scale = a.frobenius_norm().powi(4).max(1.0);
        prop_assert!((w1.beta0 - w2.beta0).abs() <= 1e-10 * scale);
        prop_assert!((w1.beta11 - w2.beta11).abs() <= 1e-10 * scale);
        prop_assert!((w1.beta22 - w2.beta22).abs() <= 1e-10 * scale);
        prop_assert!((w1.beta21 - w2.beta21).norm() <= 1e-10 * scale);
        prop_assert!((w1.beta31 - w2.beta31).norm() <= 1e-10 * scale);
    }

    #[test]
    fn real_matrix_word_is_real(seed in any::<u64>()) {
        let a: Matrix = strictly_upper_real(&mut rng(seed), 4);
        prop_assert!(trace_words(&a).beta21.im.abs() <= 1e-14);
    }

    #[test]
    fn polynomial_unitary_invariance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a: Matrix = gaussian_matrix(&mut r, 4);
        let u: Matrix = unitary(&mut r, 4);
        let p = nr_poly_general(&a).unwrap();
        let q = nr_poly_general(&a.unitary_similarity(&u)).unwrap();
        prop_assert!(p.max_abs_diff(&q) <= 1e-9 * p.max_abs_coeff().max(1.0));
    }

    #[test]
    fn polynomial_rotation_covariance(seed in any::<u64>(), phi in 0.0..TAU) {
        let mut r = rng(seed);
        let a: Matrix = strictly_upper(&mut r, 4);
        let b = a.scale(Complex::new(phi.cos(), phi.sin()));
        let (pa, pb) = (nr_poly_general(&a).unwrap(), nr_poly_general(&b).unwrap());
        let (s, c) = phi.sin_cos();
        for (u, v, w) in [(0.3, -1.2, 1.0), (2.0, 0.5, -0.7), (-1.1, -0.4, 0.2)] {
            let lhs = pb.eval(u, v, w);
            let rhs = pa.eval(u * c + v * s, -u * s + v * c, w);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * pa.eval_abs(u, v, w).max(1.0));
        }
        prop_assert!(pa.rotated(phi).max_abs_diff(&pb) <= 1e-9);
    }

    #[test]
    fn real_nilpotent_has_no_odd_v_terms(seed in any::<u64>()) {
        let a: Matrix = strictly_upper_real(&mut rng(seed), 4);
        let c = nr_poly_nilpotent(&a).unwrap();
        prop_assert!(c.c2.abs() <= 1e-12 && c.c6.abs() <= 1e-12);
    }

    #[test]
    fn two_construction_paths_agree(seed in any::<u64>()) {
        let a: Matrix = strictly_upper(&mut rng(seed), 4);
        let g = nr_poly_general(&a).unwrap();
        prop_assert!(nr_poly_nilpotent(&a).unwrap().expand().max_abs_diff(&g) <= 1e-9);
    }

    #[test]
    fn endpoint_formula_consistency(u0 in -3.0..3.0f64, v0 in -3.0..3.0f64, a11 in -5.0..5.0f64, a12 in -5.0..5.0f64, a22 in 0.1..5.0f64) {
        prop_assume!(a12 * a12 > a11 * a22 + 1e-6);
        prop_assume!(u0.hypot(v0) > 0.1);
        if let Some((e1, e2)) = nrflat::flatdetect::flat_endpoints(u0, v0, a11, a12, a22) {
            let l = (e1[0] - e2[0]).hypot(e1[1] - e2[1]);
            let f = flat_length(u0, v0, a11, a12, a22);
            prop_assume!(f.is_finite() && f < 1e6);
            prop_assert!((l - f).abs() <= 1e-9 * f.max(1.0));
        }
    }
}

#[test]
fn eigen_residuals_on_random_hermitian() {
    let mut r = rng(11);
    for _ in 0..1000 {
        let g: Matrix = gaussian_matrix(&mut r, 4);
        let h = HermitianMatrix::from_matrix(&g);
        let e = eig_hermitian(&h).unwrap();
        let norm = h.as_matrix().frobenius_norm();
        for (k, lambda) in e.values.iter().enumerate() {
            let v = &e.vectors[k];
            let mut res = 0.0f64;
            for i in 0..4 {
                let mut acc = Complex::new(-lambda * v[i].re, -lambda * v[i].im);
                for j in 0..4 {
                    acc += h.get(i, j) * v[j];
                }
                res += acc.norm_sqr();
            }
            assert!(res.sqrt() <= 1e-12 * norm.max(1.0), "{}", res.sqrt());
        }
    }
}

#[test]
fn real_matrix_singularities_come_in_mirror_pairs() {
    let mut r = rng(5);
    for _ in 0..10 {
        let a: Matrix = strictly_upper_real(&mut r, 4);
        let p = nr_poly_general(&a).unwrap();
        let s = find_real_singularities(&p, 8.0 / a.operator_norm(), 64, 1e-10);
        for x in &s {
            let mirrored = s.iter().any(|y| (y.u0 - x.u0).abs() < 1e-6 && (y.v0 + x.v0).abs() < 1e-6);
            assert!(mirrored || x.v0.abs() < 1e-6, "{x:?}");
        }
    }
}

#[test]
fn family_singularities_exact_and_grid_stable() {
    for seed in 0..12 {
        let p = family(seed);
        let a = build_family_matrix(&p).unwrap();
        let poly = nr_poly_general(&a).unwrap();
        let radius = 1.25 * 2.0 / p.d;
        let coarse = find_real_singularities(&poly, radius, 64, 1e-10);
        let fine = find_real_singularities(&poly, radius, 128, 1e-10);
        assert_eq!(coarse.len(), 2, "{p:?}: {coarse:?}");
        assert_eq!(fine.len(), coarse.len());
        for (x, y) in coarse.iter().zip(&fine) {
            assert!((x.u0 - y.u0).abs() < 1e-6 && (x.v0 - y.v0).abs() < 1e-6);
        }
        for s in &coarse {
            assert!((s.u0 - p.s() / p.d).abs() < 1e-8 && (s.v0.abs() - p.c() / p.d).abs() < 1e-8);
        }
    }
}

#[test]
fn flats_rotate_with_the_matrix() {
    for seed in 0..6 {
        let p = family(100 + seed);
        let a = build_family_matrix(&p).unwrap();
        let t = 0.3 + seed as f64;
        let b = a.scale(Complex::new(t.cos(), t.sin()));
        let fa = singular_flats(&a);
        let fb: Vec<_> = singular_flats(&b).iter().map(|f| f.rotated(-t)).collect();
        assert_eq!(fa.len(), 2);
        assert!(close_flats(&fa, &fb, 1e-8), "{fa:?}\n{fb:?}");
    }
}

#[test]
fn flats_are_unitarily_invariant() {
    let mut r = rng(77);
    for seed in 0..6 {
        let p = family(200 + seed);
        let a = build_family_matrix(&p).unwrap();
        let u: Matrix = unitary(&mut r, 4);
        let fa = singular_flats(&a);
        let fb = singular_flats(&a.unitary_similarity(&u));
        assert!(close_flats(&fa, &fb, 1e-8), "{fa:?}\n{fb:?}");
    }
}

#[test]
fn predicted_endpoints_lie_on_the_sampled_boundary() {
    for seed in 0..8 {
        let p = FamilyParams { t: 0.7 * seed as f64, ..family(300 + seed) };
        let a = build_family_matrix(&p).unwrap();
        let norm = a.operator_norm();
        let (poly, _) = sample_boundary(&a, 4096).unwrap();
        let pred = predicted_flats(&p).unwrap();
        for f in &pred.flats {
            for e in [f.endpoint1, f.endpoint2] {
                assert!(poly.distance_to_boundary(e) <= 1e-4 * norm);
                assert!(poly.contains(e, 1e-4));
                assert!(!poly.contains(e, -1e-4));
            }
            assert!(f.distance >= poly.inradius() - 1e-9 && f.distance <= poly.circumradius() + 1e-9);
        }
    }
}

#[test]
fn support_function_matches_polyline() {
    use rand::Rng;
    let mut r = rng(3);
    let p = family(400);
    let a = build_family_matrix(&p).unwrap();
    let n = 2048;
    let (poly, samples) = sample_boundary(&a, n).unwrap();
    let norm = a.operator_norm();
    let bound = discretization_bound(norm, n);
    for s in &samples {
        let (sn, cs) = s.phi.sin_cos();
        assert!((s.point[0] * cs + s.point[1] * sn - s.support_value).abs() <= 1e-10 * norm);
        assert!(s.support_value <= norm + 1e-12);
    }
    for _ in 0..100 {
        let phi = r.random_range(0.0..TAU);
        let h = support_function(&a, phi).unwrap();
        assert!((h - poly.support(phi)).abs() <= 2.0 * bound);
    }
    assert!(poly.is_convex(1e-8 * norm));
}

#[test]
fn geometric_flats_converge_under_refinement() {
    for seed in 0..4 {
        let p = family(500 + seed);
        let a = build_family_matrix(&p).unwrap();
        let opts = GeometricOptions::default();
        let (p1, _) = sample_boundary(&a, 2048).unwrap();
        let (p2, _) = sample_boundary(&a, 8192).unwrap();
        let (f1, f2) = (extract_flats_geometric(&p1, &opts), extract_flats_geometric(&p2, &opts));
        assert_eq!(f1.len(), 2);
        assert_eq!(f2.len(), 2);
        let norm = a.operator_norm();
        let (b1, b2) = (discretization_bound(norm, 2048), discretization_bound(norm, 8192));
        let exact = predicted_flats(&p).unwrap().length;
        for (x, y) in f1.iter().zip(&f2) {
            assert!(angle_distance(x.normal_angle, y.normal_angle, TAU) < 1e-3);
            assert!((x.length - exact).abs() <= b1, "{} vs {exact}", x.length);
            assert!((y.length - exact).abs() <= b2, "{} vs {exact}", y.length);
            assert!((x.length - y.length).abs() <= b1 + b2);
        }
    }
}

#[test]
fn f32_instantiation_runs() {
    let a = nrflat::linalg::ComplexSquareMatrix::<f32>::jordan_block(4);
    let p = nr_poly_general(&a).unwrap();
    assert!((p.coefficient(0, 0, 4) - 1.0).abs() < 1e-5);
    let (poly, _) = sample_boundary(&a, 256).unwrap();
    let r = (PI as f32 / 5.0).cos();
    for v in &poly.vertices {
        assert!(((v[0] * v[0] + v[1] * v[1]).sqrt() - r).abs() < 1e-4);
    }
}
