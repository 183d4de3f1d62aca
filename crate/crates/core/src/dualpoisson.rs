//! The dual group G*: assembly from Stokes data, class invariants, Iwasawa
//! projections and the convexity/reality checks.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::liecore::{CartanElement, ComplexMatrix, Root};
use crate::linalg::{eigenvalues, permutations, random_unitary};
use crate::stokescomb::{positive_system, SectorDecomposition, SingularDirection};

/// Λ plus one unipotent Stokes factor per singular direction.
///
/// Factor k describes the crossing of direction k from sector k-1 to sector k,
/// with the source sector's z^Λ branch taken at its canonical midpoint angle
/// (see [`SectorDecomposition::midpoint`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StokesDataBundle {
    pub lambda: CartanElement,
    pub directions: Vec<SingularDirection>,
    #[serde(with = "crate::serde_complex::matrix_vec")]
    pub factors: Vec<ComplexMatrix>,
}

impl StokesDataBundle {
    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.factors.len() != self.directions.len() {
            return Err(Error::MalformedBundle(format!(
                "{} factors for {} directions",
                self.factors.len(),
                self.directions.len()
            )));
        }
        for (k, (d, f)) in self.directions.iter().zip(&self.factors).enumerate() {
            if f.nrows() != n || f.ncols() != n {
                return Err(Error::MalformedBundle(format!("factor {k} has wrong shape")));
            }
            for i in 0..n {
                for j in 0..n {
                    let z = f[(i, j)];
                    if i == j {
                        if z != Complex64::new(1.0, 0.0) {
                            return Err(Error::MalformedBundle(format!(
                                "factor {k} is not unipotent at ({i},{j})"
                            )));
                        }
                    } else if z != Complex64::new(0.0, 0.0)
                        && !d.support.contains(&Root::new(i, j))
                    {
                        return Err(Error::MalformedBundle(format!(
                            "factor {k} has entry outside its Stokes group at ({},{})",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Factor k with the source sector's branch moved by `turns` full turns.
    pub fn lifted_factor(&self, k: usize, turns: i64) -> ComplexMatrix {
        conj_formal(&self.factors[k], &self.lambda, turns as f64)
    }
}

/// e^{-2πitΛ} K e^{2πitΛ}.
pub fn conj_formal(k: &ComplexMatrix, lambda: &CartanElement, t: f64) -> ComplexMatrix {
    if t == 0.0 {
        return k.clone();
    }
    let n = k.nrows();
    let w = Complex64::new(0.0, 2.0 * PI * t);
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            k[(i, j)]
        } else {
            k[(i, j)] * (w * (lambda.diag[j] - lambda.diag[i])).exp()
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualGroupElement {
    #[serde(with = "crate::serde_complex::matrix")]
    pub b_minus: ComplexMatrix,
    #[serde(with = "crate::serde_complex::matrix")]
    pub b_plus: ComplexMatrix,
    pub lambda: CartanElement,
    /// New index a corresponds to original index labeling[a].
    pub labeling: Vec<usize>,
}

impl DualGroupElement {
    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }

    /// b_-^{-1} b_+.
    pub fn product(&self) -> ComplexMatrix {
        unit_lower_inverse_times(&self.b_minus, &self.b_plus)
    }
}

/// Solve b_- X = rhs by forward substitution (b_- lower triangular).
fn unit_lower_inverse_times(l: &ComplexMatrix, rhs: &ComplexMatrix) -> ComplexMatrix {
    let n = l.nrows();
    let mut x = rhs.clone();
    for col in 0..rhs.ncols() {
        for i in 0..n {
            let mut acc = rhs[(i, col)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = acc / l[(i, i)];
        }
    }
    x
}

fn unipotent_lower_inverse(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.nrows();
    let mut inv = ComplexMatrix::identity(n, n);
    for j in 0..n {
        for i in (j + 1)..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in j..i {
                acc -= l[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = acc;
        }
    }
    inv
}

fn permute(m: &ComplexMatrix, order: &[usize]) -> ComplexMatrix {
    let n = order.len();
    ComplexMatrix::from_fn(n, n, |a, b| m[(order[a], order[b])])
}

/// Source-sector winding (in turns) of each direction when lifting from `base`.
pub fn crossing_turns(m: usize, base: usize) -> Vec<i64> {
    // direction k is crossed out of sector k-1 (mod m)
    (0..m)
        .map(|k| {
            let src = (k + m - 1) % m;
            i64::from(src < base)
        })
        .collect()
}

/// Ordered products (u_+, u_-) of the lifted factors for the given base sector,
/// in the original labeling. Later crossings multiply on the left.
pub fn half_products(
    bundle: &StokesDataBundle,
    sectors: &SectorDecomposition,
    base_sector: usize,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = bundle.dim();
    let m = sectors.count();
    let turns = crossing_turns(m, base_sector);
    let l = m / 2;
    let mut u_plus = ComplexMatrix::identity(n, n);
    let mut u_minus = ComplexMatrix::identity(n, n);
    for step in 1..=m {
        let k = (base_sector + step) % m;
        let f = bundle.lifted_factor(k, turns[k]);
        if step <= l {
            u_plus = f * u_plus;
        } else {
            u_minus = f * u_minus;
        }
    }
    Ok((u_plus, u_minus))
}

pub fn assemble(
    bundle: &StokesDataBundle,
    sectors: &SectorDecomposition,
    base_sector: usize,
) -> Result<DualGroupElement> {
    bundle.validate()?;
    let n = bundle.dim();
    if sectors.n != n {
        return Err(Error::MalformedBundle("dimension mismatch with sectors".into()));
    }
    if sectors.count() != bundle.directions.len()
        || sectors.directions.iter().zip(&bundle.directions).any(|(a, b)| a.support != b.support)
    {
        return Err(Error::MalformedBundle("bundle directions differ from the sector decomposition".into()));
    }
    sectors.check_sector(base_sector)?;
    let (order, u_plus, u_minus) = if n == 1 {
        (vec![0], ComplexMatrix::identity(1, 1), ComplexMatrix::identity(1, 1))
    } else {
        let ps = positive_system(sectors, base_sector)?;
        let (up, um) = half_products(bundle, sectors, base_sector)?;
        (ps.order.clone(), permute(&up, &ps.order), permute(&um, &ps.order))
    };
    for i in 0..n {
        for j in 0..i {
            if u_plus[(i, j)] != Complex64::new(0.0, 0.0) || u_minus[(j, i)] != Complex64::new(0.0, 0.0) {
                return Err(Error::MalformedBundle(
                    "factor supports are inconsistent with the half-period".into(),
                ));
            }
        }
    }
    let lambda = CartanElement::new(order.iter().map(|&i| bundle.lambda.diag[i]).collect());
    let ehalf: Vec<Complex64> = lambda.diag.iter().map(|l| (Complex64::new(0.0, PI) * l).exp()).collect();
    let mut b_plus = u_plus;
    let mut b_minus = unipotent_lower_inverse(&u_minus);
    for j in 0..n {
        let e = ehalf[j];
        let einv = Complex64::new(1.0, 0.0) / e;
        for i in 0..n {
            b_plus[(i, j)] *= e;
            b_minus[(i, j)] *= einv;
        }
        b_plus[(j, j)] = e;
        b_minus[(j, j)] = einv;
    }
    Ok(DualGroupElement { b_minus, b_plus, lambda, labeling: order })
}

/// Elementary symmetric functions e_1, ..., e_n of the eigenvalues of b_-^{-1}b_+,
/// i.e. the characteristic polynomial coefficients up to sign. Built from
/// `product_spectrum`; the trace-power recursion loses digits when the
/// Stokes entries are large.
pub fn class_invariant(g: &DualGroupElement) -> Result<Vec<Complex64>> {
    Ok(crate::linalg::elementary_symmetric(&product_spectrum(g)?))
}

/// log of the positive diagonal factor in g = k·a·n.
pub fn iwasawa_projection(g: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = g.nrows();
    if g.ncols() != n || n == 0 {
        return Err(Error::InvalidArgument("iwasawa_projection needs a square matrix".into()));
    }
    let r = g.clone().qr().r();
    let scale = crate::liecore::max_norm(g).max(1e-300);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = r[(i, i)].norm();
        if !(d > 1e-14 * scale) {
            return Err(Error::Singular("iwasawa_projection of a singular matrix".into()));
        }
        out.push(d.ln());
    }
    Ok(out)
}

/// Distance by which x fails to be majorized by a (0 when x ∈ conv(S_n·a)).
pub fn hull_violation(x: &[f64], a: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut as_ = a.to_vec();
    xs.sort_by(|p, q| q.total_cmp(p));
    as_.sort_by(|p, q| q.total_cmp(p));
    let mut viol: f64 = 0.0;
    let (mut sx, mut sa) = (0.0, 0.0);
    for k in 0..xs.len() {
        sx += xs[k];
        sa += as_[k];
        if k + 1 < xs.len() {
            viol = viol.max(sx - sa);
        }
    }
    viol.max((sx - sa).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KostantReport {
    pub samples: usize,
    pub weyl_samples: usize,
    pub tolerance: f64,
    pub violations: usize,
    pub max_violation: f64,
    /// max over hull vertices of the distance to the nearest projected sample
    pub vertex_proximity: f64,
    /// the same, over the random (non-Weyl) samples only
    pub random_vertex_proximity: f64,
}

impl KostantReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub const HULL_TOL: f64 = 1e-9;

/// Projects unitary conjugates U e^{diag(a)} U* and checks they stay in the
/// permutohedron of a. The first min(n!, samples) samples use permutation
/// matrices, which land on the vertices; the rest are Haar-random.
pub fn kostant_check(a: &[f64], samples: usize, seed: u64) -> Result<KostantReport> {
    let n = a.len();
    if samples == 0 || n == 0 {
        return Err(Error::InvalidArgument("kostant_check needs samples ≥ 1 and n ≥ 1".into()));
    }
    let perms = if n <= 8 { permutations(n) } else { vec![(0..n).collect()] };
    let weyl = perms.len().min(samples);
    let ea: Vec<Complex64> = a.iter().map(|x| Complex64::new(x.exp(), 0.0)).collect();
    let results: Vec<Result<(Vec<f64>, f64)>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let u = if s < weyl {
                let p = &perms[s];
                let mut u = ComplexMatrix::zeros(n, n);
                for (col, &row) in p.iter().enumerate() {
                    u[(row, col)] = Complex64::new(1.0, 0.0);
                }
                u
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s as u64);
                random_unitary(n, &mut rng)
            };
            let mut g = u.clone();
            for j in 0..n {
                for i in 0..n {
                    g[(i, j)] *= ea[j];
                }
            }
            let g = g * u.adjoint();
            let x = iwasawa_projection(&g)?;
            let v = hull_violation(&x, a);
            Ok((x, v))
        })
        .collect();
    let mut points = Vec::with_capacity(samples);
    let mut violations = 0;
    let mut max_violation: f64 = 0.0;
    for r in results {
        let (x, v) = r?;
        if v > HULL_TOL {
            violations += 1;
        }
        max_violation = max_violation.max(v);
        points.push(x);
    }
    let vertices: Vec<Vec<f64>> = perms.iter().map(|p| p.iter().map(|&i| a[i]).collect()).collect();
    let proximity = |pts: &[Vec<f64>]| -> f64 {
        vertices
            .iter()
            .map(|v| {
                pts.iter()
                    .map(|x| x.iter().zip(v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(KostantReport {
        samples,
        weyl_samples: weyl,
        tolerance: HULL_TOL,
        violations,
        max_violation,
        vertex_proximity: proximity(&points),
        random_vertex_proximity: proximity(&points[weyl..]),
    })
}

pub const REALITY_TOL: f64 = 1e-8;

/// Eigenvalues of b_-^{-1}b_+ with good relative accuracy across a wide
/// dynamic range: those of modulus ≥ 1 directly, the rest as reciprocals of
/// the dominant eigenvalues of the inverse b_+^{-1}b_-.
pub fn product_spectrum(g: &DualGroupElement) -> Result<Vec<Complex64>> {
    let n = g.dim();
    let mut fwd = eigenvalues(&g.product())?;
    let mut inv = eigenvalues(&(crate::linalg::inverse(&g.b_plus)? * &g.b_minus))?;
    fwd.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    inv.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let big = fwd.iter().filter(|z| z.norm() >= 1.0).count();
    let mut out: Vec<Complex64> = fwd[..big].to_vec();
    out.extend(inv[..n - big].iter().map(|w| Complex64::new(1.0, 0.0) / w));
    crate::linalg::sort_lex(&mut out);
    Ok(out)
}

/// True iff every eigenvalue of b_-^{-1}b_+ is real and positive within `tol`
/// (imaginary part relative to the eigenvalue's modulus).
pub fn reality_check(g: &DualGroupElement, tol: f64) -> Result<bool> {
    let ev = product_spectrum(g)?;
    Ok(ev.iter().all(|z| z.im.abs() <= tol * z.norm() && z.re > 0.0))
}
