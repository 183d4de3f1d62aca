use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wildstokes::curves::{symmetry_check, PlaneCurve};
use wildstokes::kmgraphs::{cartan_matrix, enumerate_graphs, reflect, root_classify, Graph, RootClass};
use wildstokes::liecore::{ad_inverse, all_roots, commutator, max_norm, off_diagonal, pairing, CartanElement, ComplexMatrix};
use wildstokes::linalg::multiset_rel_distance;
use wildstokes::springer::{pi, psi, random_point, tilde_psi};
use wildstokes::stokescomb::{antipodal, is_positive_system, positive_system, SectorDecomposition, ANGLE_TOL};

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn regular(n: usize) -> impl Strategy<Value = CartanElement> {
    prop::collection::vec(complex(), n)
        .prop_map(CartanElement::new)
        .prop_filter("regular", |a| a.dim() < 2 || a.min_gap() > 1e-3)
}

fn matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), n * n).prop_map(move |v| ComplexMatrix::from_vec(n, n, v))
}

fn dim_and<T: std::fmt::Debug, S: Strategy<Value = T>>(
    lo: usize,
    hi: usize,
    f: impl Fn(usize) -> S + Clone + 'static,
) -> impl Strategy<Value = (usize, T)> {
    (lo..=hi).prop_flat_map(move |n| (Just(n), f(n)))
}

/// Euler's pentagonal-number recurrence for the partition function.
fn partition_count(n: usize) -> u64 {
    let mut p = vec![0i64; n + 1];
    p[0] = 1;
    for m in 1..=n {
        let mut k = 1i64;
        loop {
            let g1 = (k * (3 * k - 1) / 2) as usize;
            if g1 > m {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            p[m] += sign * p[m - g1];
            let g2 = (k * (3 * k + 1) / 2) as usize;
            if g2 <= m {
                p[m] += sign * p[m - g2];
            }
            k += 1;
        }
    }
    p[n] as u64
}

#[test]
fn graph_counts_follow_partition_function() {
    let mut total = 0;
    for n in 1..=12 {
        total += partition_count(n);
        assert_eq!(enumerate_graphs(n, false, false).len() as u64, total);
        // one discrete graph per N, one star per N ≥ 2
        let excluded: u64 = (1..=n as u64).map(|k| 1 + u64::from(k >= 2)).sum();
        assert_eq!(enumerate_graphs(n, true, true).len() as u64, total - excluded);
    }
    assert_eq!(partition_count(6), 11);
}

#[test]
fn cartan_matrices_of_enumerated_graphs() {
    for g in enumerate_graphs(7, false, false) {
        let c = cartan_matrix(&g.adjacency);
        let n = c.dim();
        for i in 0..n {
            assert_eq!(c.entries[i][i], 2);
            for j in 0..n {
                assert_eq!(c.entries[i][j], c.entries[j][i]);
                assert!([2, 0, -1].contains(&c.entries[i][j]));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ad_inverse_is_linear_and_inverts_off_diagonal(
        (_, (a, x, y, s)) in dim_and(2, 5, |n| (regular(n), matrix(n), matrix(n), complex()))
    ) {
        let lhs = ad_inverse(&a, &(&x * s + &y)).unwrap();
        let rhs = ad_inverse(&a, &x).unwrap() * s + ad_inverse(&a, &y).unwrap();
        let scale = max_norm(&lhs).max(1.0);
        prop_assert!(max_norm(&(lhs - rhs)) <= 1e-12 * scale);
        let back = commutator(&a.to_matrix(), &ad_inverse(&a, &x).unwrap());
        prop_assert!(max_norm(&(back - off_diagonal(&x))) <= 1e-12 * max_norm(&x).max(1.0));
    }

    #[test]
    fn root_pairing_is_odd(a in (2usize..6).prop_flat_map(regular)) {
        let roots = all_roots(a.dim());
        prop_assert_eq!(roots.len(), a.dim() * (a.dim() - 1));
        for r in roots {
            prop_assert_eq!(pairing(r.neg(), &a), -pairing(r, &a));
        }
    }

    #[test]
    fn singular_directions_are_antipodal_and_cover_roots(a in (2usize..6).prop_flat_map(regular)) {
        let s = SectorDecomposition::new(&a, ANGLE_TOL).unwrap();
        let m = s.count();
        let n = a.dim();
        prop_assert_eq!(m % 2, 0);
        let mut all: Vec<_> = s.directions.iter().flat_map(|d| d.support.clone()).collect();
        prop_assert_eq!(all.len(), n * (n - 1));
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), n * (n - 1));
        for d in &s.directions {
            let mut neg: Vec<_> = d.support.iter().map(|r| r.neg()).collect();
            neg.sort();
            let k = s.find_support(&neg);
            prop_assert!(k.is_some());
            prop_assert!(antipodal(d.angle, s.directions[k.unwrap()].angle, 1e-6));
        }
        for base in 0..m {
            let ps = positive_system(&s, base).unwrap();
            prop_assert_eq!(ps.r_plus.len(), n * (n - 1) / 2);
            prop_assert!(is_positive_system(&ps.r_plus, n));
        }
    }

    #[test]
    fn reflections_preserve_the_form(
        (v, w, i, g) in (3usize..7).prop_flat_map(|n| (
            prop::collection::vec(-20i64..20, n),
            prop::collection::vec(-20i64..20, n),
            0..n,
            prop::collection::vec(any::<bool>(), n * n),
        ))
    ) {
        let n = v.len();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|&(a, b)| g[a * n + b])
            .collect();
        let c = cartan_matrix(&Graph::from_edges(n, &edges).unwrap());
        let (rv, rw) = (reflect(&v, i, &c).unwrap(), reflect(&w, i, &c).unwrap());
        prop_assert_eq!(c.form(&rv, &rw), c.form(&v, &w));
        prop_assert_eq!(reflect(&rv, i, &c).unwrap(), v.clone());
        // root classes are Weyl invariant
        if v.iter().any(|&x| x != 0) {
            prop_assert_eq!(root_classify(&v, &c).unwrap(), root_classify(&rv, &c).unwrap());
        }
    }

    #[test]
    fn simple_roots_are_real(n in 1usize..7, i in 0usize..7) {
        let c = cartan_matrix(&Graph::cycle(n.max(3)));
        let i = i % c.dim();
        let mut e = vec![0; c.dim()];
        e[i] = 1;
        prop_assert_eq!(root_classify(&e, &c).unwrap(), RootClass::RealRoot);
    }

    #[test]
    fn curve_is_swap_and_sign_symmetric(p in complex(), q in complex()) {
        let c = PlaneCurve::genus7();
        let f = c.evaluate(p, q);
        let scale = f.norm().max(1.0);
        prop_assert!((f - c.evaluate(q, p)).norm() <= 1e-12 * scale);
        prop_assert!((f - c.evaluate(-p, -q)).norm() <= 1e-12 * scale);
        prop_assert!(symmetry_check(&c).holds());
    }

    #[test]
    fn springer_square_commutes(n in 1usize..5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_point(n, &mut rng).unwrap();
        prop_assert!(multiset_rel_distance(&tilde_psi(&p).unwrap(), &psi(&pi(&p)).unwrap()) <= 1e-9);
    }
}
