//! The multiplicative Grothendieck–Springer resolution for GL_n: pairs of an
//! invertible matrix and an invariant full flag.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liecore::{max_norm, ComplexMatrix};
use crate::linalg::{eigenvalues, inverse, multiset_rel_distance, null_space, random_gaussian, random_unitary};

/// Flag stability tolerance, relative to max(1, ‖M‖).
pub const STABILITY_TOL: f64 = 1e-10;
pub const DIAGRAM_TOL: f64 = 1e-9;
pub const MAX_FIBER_DIM: usize = 4;

/// M together with a full flag given by an ordered basis: F_k is spanned by
/// the first k columns of `flag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrothendieckPoint {
    #[serde(with = "crate::serde_complex::matrix")]
    pub m: ComplexMatrix,
    #[serde(with = "crate::serde_complex::matrix")]
    pub flag: ComplexMatrix,
}

fn singular_check(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    if m.nrows() == 0 {
        return Ok(());
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-13 * smax) {
        return Err(Error::Singular(format!("matrix is numerically singular (σ_min/σ_max = {:e})", smin / smax)));
    }
    Ok(())
}

impl GrothendieckPoint {
    pub fn new(m: ComplexMatrix, flag: ComplexMatrix) -> Result<Self> {
        let p = GrothendieckPoint { m, flag };
        p.adapted()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// M in the flag basis, with the (tolerated) lower part set to zero.
    pub fn adapted(&self) -> Result<ComplexMatrix> {
        let n = self.m.nrows();
        if self.flag.shape() != (n, n) {
            return Err(Error::InvalidPoint("flag basis has the wrong shape".into()));
        }
        singular_check(&self.m).map_err(|e| Error::InvalidPoint(e.to_string()))?;
        singular_check(&self.flag).map_err(|_| Error::InvalidPoint("flag vectors are linearly dependent".into()))?;
        let mut t = inverse(&self.flag)? * &self.m * &self.flag;
        let scale = max_norm(&self.m).max(1.0);
        for j in 0..n {
            for i in j + 1..n {
                if t[(i, j)].norm() > STABILITY_TOL * scale {
                    return Err(Error::InvalidPoint(format!(
                        "flag is not M-stable: entry ({}, {}) of the adapted matrix is {:e}",
                        i + 1,
                        j + 1,
                        t[(i, j)].norm()
                    )));
                }
                t[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(t)
    }
}

pub fn pi(p: &GrothendieckPoint) -> ComplexMatrix {
    p.m.clone()
}

/// Diagonal of M read along the flag.
pub fn tilde_psi(p: &GrothendieckPoint) -> Result<Vec<Complex64>> {
    let t = p.adapted()?;
    Ok((0..p.dim()).map(|i| t[(i, i)]).collect())
}

/// Eigenvalue multiset, sorted by (re, im).
pub fn psi(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    singular_check(m)?;
    eigenvalues(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fiber {
    Finite { points: Vec<GrothendieckPoint> },
    /// Some quotient has a projective family of invariant lines of this
    /// dimension, so the fiber is at least this large.
    NonEnumerable { witness_dimension: usize },
}

impl Fiber {
    pub fn point_count(&self) -> Option<usize> {
        match self {
            Fiber::Finite { points } => Some(points.len()),
            Fiber::NonEnumerable { .. } => None,
        }
    }
}

const CLUSTER_TOL: f64 = 1e-4;
const KERNEL_TOL: f64 = 1e-7;

/// Unitary matrix whose first column is v/|v|.
fn complete_basis(v: &[Complex64]) -> ComplexMatrix {
    let n = v.len();
    let mut a = ComplexMatrix::identity(n, n + 1);
    for i in 0..n {
        for j in (1..=n).rev() {
            a[(i, j)] = a[(i, j - 1)];
        }
        a[(i, 0)] = v[i];
    }
    a.qr().q()
}

/// Eigenvalue candidates: clusters of computed eigenvalues replaced by their
/// mean, plus the individual members as fallbacks.
fn eigen_candidates(m: &ComplexMatrix) -> Result<Vec<Vec<Complex64>>> {
    let ev = eigenvalues(m)?;
    let scale = ev.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in ev {
        match clusters.iter_mut().find(|c| c.iter().any(|w| (w - z).norm() < CLUSTER_TOL * scale)) {
            Some(c) => c.push(z),
            None => clusters.push(vec![z]),
        }
    }
    Ok(clusters)
}

/// Invariant full flags as bases, or the dimension of an infinite family of lines.
fn stable_flags(m: &ComplexMatrix) -> Result<std::result::Result<Vec<ComplexMatrix>, usize>> {
    let n = m.nrows();
    if n <= 1 {
        return Ok(Ok(vec![ComplexMatrix::identity(n, n)]));
    }
    let mut flags = Vec::new();
    for cluster in eigen_candidates(m)? {
        let mean = cluster.iter().sum::<Complex64>() / cluster.len() as f64;
        let mut tries = vec![mean];
        if cluster.len() > 1 {
            tries.extend(cluster.iter().cloned());
        }
        let mut kernel = None;
        for lam in tries {
            let shifted = m - ComplexMatrix::identity(n, n) * lam;
            let k = null_space(&shifted, KERNEL_TOL);
            if k.ncols() > 0 {
                kernel = Some(k);
                break;
            }
        }
        let Some(k) = kernel else {
            return Err(Error::Precision("no eigenvector found for a computed eigenvalue".into()));
        };
        if k.ncols() > 1 {
            return Ok(Err(k.ncols() - 1));
        }
        let v: Vec<Complex64> = k.column(0).iter().cloned().collect();
        let q = complete_basis(&v);
        let adapted = q.adjoint() * m * &q;
        let quotient = adapted.view((1, 1), (n - 1, n - 1)).into_owned();
        let w = q.columns(1, n - 1).into_owned();
        match stable_flags(&quotient)? {
            Err(d) => return Ok(Err(d)),
            Ok(sub) => {
                for f in sub {
                    let mut basis = ComplexMatrix::zeros(n, n);
                    basis.set_column(0, &q.column(0));
                    let lifted = &w * f;
                    for j in 0..n - 1 {
                        basis.set_column(j + 1, &lifted.column(j));
                    }
                    flags.push(basis);
                }
            }
        }
    }
    Ok(Ok(flags))
}

pub fn fiber_over(m: &ComplexMatrix) -> Result<Fiber> {
    let n = m.nrows();
    if n > MAX_FIBER_DIM {
        return Err(Error::UnsupportedScale(format!("fiber enumeration supports n ≤ {MAX_FIBER_DIM}, got {n}")));
    }
    singular_check(m)?;
    match stable_flags(m)? {
        Err(d) => Ok(Fiber::NonEnumerable { witness_dimension: d }),
        Ok(flags) => Ok(Fiber::Finite {
            points: flags
                .into_iter()
                .map(|f| GrothendieckPoint::new(m.clone(), f))
                .collect::<Result<_>>()?,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramFailure {
    pub sample: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_distance: f64,
    pub failures: Vec<DiagramFailure>,
}

impl DiagramReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Random point: Haar flag F and upper-triangular T with well-separated
/// diagonal of modulus in [0.5, 2]; M = F T F⁻¹.
pub fn random_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<GrothendieckPoint> {
    let f = random_unitary(n, rng);
    let mut t = random_gaussian(n, n, rng);
    let diag: Vec<Complex64> = loop {
        let d: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from_polar(rng.random_range(0.5..2.0), rng.random_range(0.0..std::f64::consts::TAU)))
            .collect();
        let sep = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (d[i] - d[j]).norm())
            .fold(f64::INFINITY, f64::min);
        if sep > 0.05 {
            break d;
        }
    };
    for i in 0..n {
        t[(i, i)] = diag[i];
        for j in 0..i {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    let m = &f * t * f.adjoint();
    GrothendieckPoint::new(m, f)
}

/// Commutativity of the square pr ∘ ψ̃ = ψ ∘ π on random points.
pub fn diagram_check(samples: usize, seed: u64, n: usize) -> Result<DiagramReport> {
    if samples == 0 || n == 0 {
        return Err(Error::InvalidArgument("samples and n must be positive".into()));
    }
    let dists: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let p = random_point(n, &mut rng)?;
            Ok(multiset_rel_distance(&tilde_psi(&p)?, &psi(&pi(&p))?))
        })
        .collect::<Result<_>>()?;
    let failures = dists
        .iter()
        .enumerate()
        .filter(|(_, &d)| !(d <= DIAGRAM_TOL))
        .map(|(sample, &distance)| DiagramFailure { sample, distance })
        .collect();
    Ok(DiagramReport {
        n,
        samples,
        seed,
        tolerance: DIAGRAM_TOL,
        max_distance: dists.iter().cloned().fold(0.0, f64::max),
        failures,
    })
}
