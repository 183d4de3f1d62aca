use super::*;
use crate::liecore::{c, real_matrix};
use crate::linalg::{multiset_distance, random_gaussian};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn problem(a0: CartanElement, b: ComplexMatrix) -> ConnectionProblem {
    ConnectionProblem::new(a0, b, Precision::default()).unwrap()
}

fn gl3_a0() -> CartanElement {
    CartanElement::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)])
}

fn random_b(n: usize, seed: u64, norm: f64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_gaussian(n, n, &mut rng);
    let f = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    g * Complex64::new(norm / f, 0.0)
}

#[test]
fn formal_diagonal_b_is_normal_form() {
    let p = problem(gl3_a0(), ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(0.2, 0.0), c(-0.3, 0.1), c(0.0, 0.5)])));
    let e = formal_normalization(&p, 6).unwrap();
    assert!(e.coeffs.iter().all(|f| max_norm(f) == 0.0));
    assert_eq!(e.lambda.diag[1], c(-0.3, 0.1));
}

#[test]
fn formal_first_coefficient_gl2() {
    let p = problem(CartanElement::from_real(&[1.0, -1.0]), real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]));
    let e = formal_normalization(&p, 3).unwrap();
    let f1 = &e.coeffs[0];
    assert!((f1[(0, 1)] - c(-0.5, 0.0)).norm() < 1e-15);
    assert!((f1[(1, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    // diagonal fixed by the order-one consistency condition
    assert!((f1[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    assert!((f1[(1, 1)] - c(-0.5, 0.0)).norm() < 1e-15);
}

#[test]
fn gauge_defect_slope() {
    let p = problem(gl3_a0(), random_b(3, 4, 1.5));
    for order in [1usize, 2, 3] {
        let e = formal_normalization(&p, order).unwrap();
        let d1 = max_norm(&e.gauge_defect(&p.a0, &p.b, Complex64::from_polar(1e-3, 0.4)));
        let d2 = max_norm(&e.gauge_defect(&p.a0, &p.b, Complex64::from_polar(1e-4, 0.4)));
        let slope = (d1 / d2).log10();
        assert!((slope - (order as f64 + 1.0)).abs() < 0.1, "order {order}: slope {slope}");
    }
}

#[test]
fn canonical_solution_diagonal_b() {
    let b = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(0.3, 0.1), c(-0.7, 0.0)]));
    let p = problem(CartanElement::from_real(&[1.0, -1.0]), b.clone());
    let e = formal_normalization(&p, 4).unwrap();
    for s in 0..2 {
        let sol = canonical_solution(&p, &e, s).unwrap();
        let z = sol.anchor;
        let log_z = Complex64::new(z.norm().ln(), sol.anchor_arg);
        for j in 0..2 {
            let expect = (b[(j, j)] * log_z - p.a0.diag[j] / z).exp();
            assert!((sol.value[(j, j)] - expect).norm() < 1e-12 * expect.norm(), "{} vs {}", sol.value[(j, j)], expect);
            assert!(sol.value[(1 - j, j)].norm() < 1e-13 * expect.norm());
        }
    }
}

#[test]
fn canonical_solution_scalar() {
    let p = problem(CartanElement::new(vec![c(0.5, -1.0)]), DMatrixExt::scalar(c(0.25, 0.4)));
    let e = formal_normalization(&p, 2).unwrap();
    let sol = canonical_solution(&p, &e, 0).unwrap();
    let z = sol.anchor;
    let expect = (c(0.25, 0.4) * z.ln() - c(0.5, -1.0) / z).exp();
    assert!((sol.value[(0, 0)] - expect).norm() < 1e-13 * expect.norm());
}

struct DMatrixExt;
impl DMatrixExt {
    fn scalar(z: Complex64) -> ComplexMatrix {
        ComplexMatrix::from_element(1, 1, z)
    }
}

/// The Borel sum and the optimally truncated series agree up to the
/// truncation error at small radius.
#[test]
fn laplace_sum_matches_truncated_series() {
    let p = problem(gl3_a0(), random_b(3, 7, 1.8));
    let e = formal_normalization(&p, 40).unwrap();
    let sectors = p.sectors().unwrap();
    let r = 0.04;
    for s in 0..sectors.count() {
        let sol = canonical_solution_at(&p, s, r).unwrap();
        let theta = sol.anchor_arg;
        let z = Complex64::from_polar(r, theta);
        let log_z = Complex64::new(r.ln(), theta);
        let mut f = sol.value.clone();
        for j in 0..3 {
            let g = (-(e.lambda.diag[j] * log_z) + p.a0.diag[j] / z).exp();
            for i in 0..3 {
                f[(i, j)] *= g;
            }
        }
        let (order, resid) = optimal_index(&e.coeffs, r);
        let series = e.partial_sum(z, order);
        let diff = max_norm(&(&f - &series));
        assert!(diff < 1e-9 && resid < 1e-9, "sector {s}: diff {diff:e}, resid {resid:e}");
    }
}

#[test]
fn determinant_of_canonical_solution() {
    let p = problem(gl3_a0(), random_b(3, 8, 1.0));
    let e = formal_normalization(&p, 4).unwrap();
    let sol = canonical_solution(&p, &e, 2).unwrap();
    let z = sol.anchor;
    let log_z = Complex64::new(z.norm().ln(), sol.anchor_arg);
    // Liouville: det Φ = z^{tr B} e^{-tr A0 / z} exactly for the Borel sum
    let expect = (p.b.trace() * log_z - p.a0.to_matrix().trace() / z).exp();
    let det = sol.value.determinant();
    assert!((det - expect).norm() < 1e-10 * expect.norm(), "{det} vs {expect}");
}

#[test]
fn diagonal_b_has_trivial_stokes() {
    for a0 in [CartanElement::from_real(&[1.0, -1.0]), gl3_a0(), CartanElement::from_real(&[0.0, 1.0, 2.0])] {
        let n = a0.dim();
        let b = ComplexMatrix::from_diagonal(&DVector::from_fn(n, |i, _| c(0.3 * i as f64 - 0.4, 0.2 - 0.1 * i as f64)));
        let p = problem(a0, b);
        let (bundle, _) = stokes_data(&p).unwrap();
        for f in &bundle.factors {
            assert!(max_norm(&(f - ComplexMatrix::identity(n, n))) < 1e-10);
        }
    }
}

#[test]
fn scalar_problem_has_no_directions() {
    let p = problem(CartanElement::new(vec![c(1.0, 0.0)]), DMatrixExt::scalar(c(0.3, 0.2)));
    let rep = nu_report(&p, 0).unwrap();
    assert!(rep.bundle.factors.is_empty());
    assert!(rep.spectrum_mismatch < 1e-14);
    let m = monodromy(&p, 0).unwrap();
    assert!((m[(0, 0)] - (c(0.0, TAU) * c(0.3, 0.2)).exp()).norm() < 1e-10);
}

#[test]
fn gl2_eigenvalue_identity_and_monodromy() {
    let a0 = CartanElement::from_real(&[1.0, -1.0]);
    for seed in 0..4 {
        let p = problem(a0.clone(), random_b(2, seed, 1.7));
        for base in 0..2 {
            let rep = nu_report(&p, base).unwrap();
            assert!(rep.spectrum_mismatch < 1e-8, "seed {seed}: {:e}", rep.spectrum_mismatch);
            let m = monodromy(&p, base).unwrap();
            let ev = eigenvalues(&m).unwrap();
            assert!(multiset_distance(&ev, &rep.product_spectrum) < 1e-8);
        }
    }
}

#[test]
fn gl3_eigenvalue_identity() {
    for (seed, a0) in [(1u64, gl3_a0()), (2, CartanElement::from_real(&[0.0, 1.0, 2.0])), (3, CartanElement::new(vec![c(0.3, -0.2), c(-1.1, 0.4), c(0.9, 1.3)]))] {
        let p = problem(a0, random_b(3, seed, 2.0));
        let rep = nu_report(&p, 0).unwrap();
        assert!(rep.spectrum_mismatch < 1e-8, "seed {seed}: {:e}", rep.spectrum_mismatch);
        let m = monodromy(&p, 0).unwrap();
        let ev = eigenvalues(&m).unwrap();
        assert!(multiset_distance(&ev, &rep.product_spectrum) < 1e-8);
        // monodromy equals e^{2πiΛ} u_- u_+ in the base frame
    }
}

/// Two independent summation routes give the same Stokes factors for gl_2.
#[test]
fn truncation_and_laplace_agree_for_gl2() {
    let a0 = CartanElement::from_real(&[1.0, -1.0]);
    let b = random_b(2, 21, 1.2);
    let lap = problem(a0.clone(), b.clone());
    let mut prec = Precision::default();
    prec.summation = Summation::Truncation;
    prec.series_order = Some(80);
    let tr = ConnectionProblem::new(a0, b, prec).unwrap();
    let (b1, _) = stokes_data(&lap).unwrap();
    let (b2, _) = stokes_data(&tr).unwrap();
    for (f, g) in b1.factors.iter().zip(&b2.factors) {
        assert!(max_norm(&(f - g)) < 1e-8, "{f} vs {g}");
    }
}

#[test]
fn two_precision_stability_gl2() {
    let a0 = CartanElement::from_real(&[1.0, -1.0]);
    let b = random_b(2, 33, 1.5);
    let p1 = problem(a0.clone(), b.clone());
    let mut prec = Precision::default();
    prec.ode_rel_tol = 1e-14;
    let p2 = ConnectionProblem::new(a0, b, prec).unwrap();
    let (b1, _) = stokes_data(&p1).unwrap();
    let (b2, _) = stokes_data(&p2).unwrap();
    for (f, g) in b1.factors.iter().zip(&b2.factors) {
        assert!(max_norm(&(f - g)) < 1e-8);
        assert!(f.iter().filter(|z| z.norm() > 1e-12).count() == 3, "one free entry per factor");
    }
}

#[test]
fn matching_radius_independence() {
    let p = problem(gl3_a0(), random_b(3, 5, 1.5));
    let mut prec = Precision::default();
    prec.matching_radius = Some(0.6 * p.matching_radius());
    let q = ConnectionProblem::new(p.a0.clone(), p.b.clone(), prec).unwrap();
    let (b1, _) = stokes_data(&p).unwrap();
    let (b2, _) = stokes_data(&q).unwrap();
    for (f, g) in b1.factors.iter().zip(&b2.factors) {
        assert!(max_norm(&(f - g)) < 1e-8, "{f} vs {g}");
    }
}

#[test]
fn diagonal_conjugation_equivariance() {
    let a0 = gl3_a0();
    let b = random_b(3, 12, 1.6);
    let t = [c(1.0, 0.0), c(0.5, 0.8), c(-1.3, 0.2)];
    let tb = ComplexMatrix::from_fn(3, 3, |i, j| t[i] * b[(i, j)] / t[j]);
    let (b1, _) = stokes_data(&problem(a0.clone(), b)).unwrap();
    let (b2, _) = stokes_data(&problem(a0, tb)).unwrap();
    for (f, g) in b1.factors.iter().zip(&b2.factors) {
        let tf = ComplexMatrix::from_fn(3, 3, |i, j| t[i] * f[(i, j)] / t[j]);
        assert!(max_norm(&(tf - g)) < 1e-8);
    }
}

#[test]
fn monodromy_diagonal_b() {
    let d = vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.05, -0.3)];
    let b = ComplexMatrix::from_diagonal(&DVector::from_vec(d.clone()));
    let p = problem(gl3_a0(), b);
    let m = monodromy(&p, 3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == j { (c(0.0, TAU) * d[i]).exp() } else { c(0.0, 0.0) };
            assert!((m[(i, j)] - expect).norm() < 1e-10);
        }
    }
}

#[test]
fn connection_matrix_diagonal_and_radius_invariance() {
    let d = vec![c(0.3, 0.1), c(-0.2, 0.4)];
    let b = ComplexMatrix::from_diagonal(&DVector::from_vec(d));
    let p = problem(CartanElement::from_real(&[1.0, -1.0]), b);
    let cm = connection_matrix(&p, 0, None).unwrap();
    assert!(cm[(0, 1)].norm() < 1e-10 && cm[(1, 0)].norm() < 1e-10);
    assert!(cm[(0, 0)].norm() > 1e-3);

    let q = problem(gl3_a0(), random_b(3, 9, 1.4));
    let r = default_outer_radius(&q);
    let c1 = connection_matrix(&q, 1, Some(r)).unwrap();
    let c2 = connection_matrix(&q, 1, Some(2.0 * r)).unwrap();
    assert!(crate::linalg::rel_diff(&c1, &c2) < 1e-6, "{c1} vs {c2}");
}

#[test]
fn connection_matrix_rejects_resonance() {
    let b = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.0), c(-0.5, 0.0)]));
    let p = problem(CartanElement::from_real(&[1.0, -1.0]), b);
    assert!(matches!(connection_matrix(&p, 0, None), Err(Error::Resonance(_))));
}

#[test]
fn scalar_connection_matrix() {
    let p = problem(CartanElement::new(vec![c(1.0, 0.0)]), DMatrixExt::scalar(c(0.3, 0.0)));
    let cm = connection_matrix(&p, 0, None).unwrap();
    assert!(cm[(0, 0)].norm().is_finite() && cm[(0, 0)].norm() > 0.0);
}
