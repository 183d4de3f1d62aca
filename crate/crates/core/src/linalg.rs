//! Eigenvalues, inverses, characteristic polynomials and random unitaries.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::liecore::{max_norm, ComplexMatrix};

/// Eigenvalues sorted lexicographically by (re, im).
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Precision("Schur iteration did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Precision("eigenvalues unavailable".into()))?;
    let mut v: Vec<Complex64> = ev.iter().cloned().collect();
    sort_lex(&mut v);
    Ok(v)
}

pub fn sort_lex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Multiset distance: the best matching over permutations (n ≤ 8), else sorted order.
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    if n > 8 {
        let (mut x, mut y) = (a.to_vec(), b.to_vec());
        sort_lex(&mut x);
        sort_lex(&mut y);
        return x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    }
    let mut best = f64::INFINITY;
    for perm in permutations(n) {
        let d = (0..n).map(|i| (a[i] - b[perm[i]]).norm()).fold(0.0, f64::max);
        best = best.min(d);
    }
    best
}

/// Multiset distance relative to the largest modulus present.
pub fn multiset_rel_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = a.iter().chain(b).map(|z| z.norm()).fold(1e-300, f64::max);
    multiset_distance(a, b) / scale.max(1.0)
}

/// All permutations of 0..n in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let mut i = n;
        while i > 1 && cur[i - 2] >= cur[i - 1] {
            i -= 1;
        }
        if i <= 1 {
            break;
        }
        let p = i - 2;
        let mut j = n - 1;
        while cur[j] <= cur[p] {
            j -= 1;
        }
        cur.swap(p, j);
        cur[p + 1..].reverse();
    }
    out
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("matrix is not invertible".into()))?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Singular("inverse overflowed".into()));
    }
    Ok(inv)
}

/// Characteristic polynomial coefficients [c_0, ..., c_{n-1}, 1] of det(x I - M)
/// via Faddeev–LeVerrier.
pub fn char_poly(m: &ComplexMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n + 1];
    coeffs[n] = Complex64::new(1.0, 0.0);
    let id = ComplexMatrix::identity(n, n);
    let mut mk = ComplexMatrix::zeros(n, n);
    for k in 1..=n {
        mk = m * (&mk + &id * coeffs[n - k + 1]);
        let tr = mk.trace();
        coeffs[n - k] = -tr / (k as f64);
    }
    coeffs
}

/// e_1, ..., e_n of the given values.
pub fn elementary_symmetric(v: &[Complex64]) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); v.len() + 1];
    e[0] = Complex64::new(1.0, 0.0);
    for (m, &x) in v.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            let prev = e[k - 1];
            e[k] += prev * x;
        }
    }
    e.split_off(1)
}

pub fn exp_diag(d: &[Complex64], scale: Complex64) -> ComplexMatrix {
    let n = d.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for (i, z) in d.iter().enumerate() {
        m[(i, i)] = (z * scale).exp();
    }
    m
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with phases fixed.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn random_gaussian<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> ComplexMatrix {
    DMatrix::from_fn(n, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Orthonormal basis of the numerical kernel (singular values below tol · σ_max).
pub fn null_space(m: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut cols = Vec::new();
    for k in 0..vt.nrows() {
        let s = if k < svd.singular_values.len() { svd.singular_values[k] } else { 0.0 };
        if s <= tol * smax.max(1e-300) {
            cols.push(k);
        }
    }
    // rows of v_t beyond the rank of a wide matrix also span the kernel
    let mut basis = ComplexMatrix::zeros(n, cols.len());
    for (c, &k) in cols.iter().enumerate() {
        for i in 0..n {
            basis[(i, c)] = vt[(k, i)].conj();
        }
    }
    basis
}

pub fn rel_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    max_norm(&(a - b)) / max_norm(a).max(max_norm(b)).max(1e-300)
}
