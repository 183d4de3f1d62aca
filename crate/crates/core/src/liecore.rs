//! Root data and matrix primitives for gl_n.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Default regularity tolerance, relative to the largest diagonal modulus.
pub const REGULARITY_TOL: f64 = 1e-9;

/// Diagonal element of the Cartan subalgebra of gl_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CartanElement {
    #[serde(with = "crate::serde_complex::vec")]
    pub diag: Vec<Complex64>,
}

impl CartanElement {
    pub fn new(diag: Vec<Complex64>) -> Self {
        CartanElement { diag }
    }

    pub fn from_real(diag: &[f64]) -> Self {
        CartanElement {
            diag: diag.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.diag.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diag.clone()))
    }

    /// Smallest root pairing modulus; infinite for n = 1.
    pub fn min_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for i in 0..self.dim() {
            for j in (i + 1)..self.dim() {
                g = g.min((self.diag[i] - self.diag[j]).norm());
            }
        }
        g
    }

    pub fn max_gap(&self) -> f64 {
        let mut g: f64 = 0.0;
        for i in 0..self.dim() {
            for j in (i + 1)..self.dim() {
                g = g.max((self.diag[i] - self.diag[j]).norm());
            }
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        if self.diag.is_empty() {
            return Err(Error::InvalidArgument("empty Cartan element".into()));
        }
        if self.diag.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite Cartan entry".into()));
        }
        Ok(())
    }
}

/// The root e_i - e_j (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Root {
    pub i: usize,
    pub j: usize,
}

impl Root {
    pub fn new(i: usize, j: usize) -> Self {
        assert_ne!(i, j, "root indices must differ");
        Root { i, j }
    }

    pub fn neg(self) -> Root {
        Root { i: self.j, j: self.i }
    }
}

impl std::fmt::Display for Root {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a{}{}", self.i + 1, self.j + 1)
    }
}

// Roots travel as 1-based index pairs in files.
impl Serialize for Root {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.i + 1, self.j + 1].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Root {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [i, j] = <[usize; 2]>::deserialize(d)?;
        if i == 0 || j == 0 || i == j {
            return Err(serde::de::Error::custom("root needs distinct 1-based indices"));
        }
        Ok(Root { i: i - 1, j: j - 1 })
    }
}

/// All n(n-1) roots in lexicographic order.
pub fn all_roots(n: usize) -> Vec<Root> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.push(Root { i, j });
            }
        }
    }
    out
}

pub fn pairing(root: Root, a0: &CartanElement) -> Complex64 {
    a0.diag[root.i] - a0.diag[root.j]
}

pub fn is_regular(a0: &CartanElement, tol: f64) -> bool {
    a0.min_gap() > tol
}

/// Regularity test with the default tolerance scaled by max |diag|.
pub fn require_regular(a0: &CartanElement) -> Result<()> {
    a0.validate()?;
    let tol = REGULARITY_TOL * a0.max_abs().max(f64::MIN_POSITIVE);
    if a0.dim() > 1 && !is_regular(a0, tol) {
        return Err(Error::DegenerateInput(format!(
            "A0 is not regular: min |a_i - a_j| = {:e}",
            a0.min_gap()
        )));
    }
    Ok(())
}

pub fn ad_inverse(a0: &CartanElement, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_regular(a0)?;
    let n = a0.dim();
    check_square(x, n)?;
    Ok(ad_inverse_unchecked(a0, x))
}

/// ad_inverse without the regularity check, for hot loops that validated A0 already.
pub fn ad_inverse_unchecked(a0: &CartanElement, x: &ComplexMatrix) -> ComplexMatrix {
    let n = a0.dim();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(0.0, 0.0)
        } else {
            x[(i, j)] / (a0.diag[i] - a0.diag[j])
        }
    })
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

/// [diag(d), X] computed entrywise.
pub fn diag_commutator(d: &CartanElement, x: &ComplexMatrix) -> ComplexMatrix {
    let n = d.dim();
    ComplexMatrix::from_fn(n, n, |i, j| (d.diag[i] - d.diag[j]) * x[(i, j)])
}

pub fn off_diagonal(x: &ComplexMatrix) -> ComplexMatrix {
    let mut y = x.clone();
    for i in 0..y.nrows().min(y.ncols()) {
        y[(i, i)] = Complex64::new(0.0, 0.0);
    }
    y
}

pub fn diagonal_part(x: &ComplexMatrix) -> CartanElement {
    CartanElement::new((0..x.nrows()).map(|i| x[(i, i)]).collect())
}

pub fn max_norm(x: &ComplexMatrix) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn check_square(x: &ComplexMatrix, n: usize) -> Result<()> {
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "expected {n}x{n} matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("non-finite matrix entry".into()));
    }
    Ok(())
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Build a complex matrix from real row-major entries.
pub fn real_matrix(rows: &[&[f64]]) -> ComplexMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    ComplexMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_examples() {
        let a = CartanElement::from_real(&[1.0, -1.0]);
        assert_eq!(pairing(Root::new(0, 1), &a), c(2.0, 0.0));
        assert_eq!(pairing(Root::new(1, 0), &a), c(-2.0, 0.0));
        let b = CartanElement::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0)]);
        assert_eq!(pairing(Root::new(0, 2), &b), c(-1.0, -1.0));
    }

    #[test]
    fn regularity_examples() {
        assert!(is_regular(&CartanElement::from_real(&[1.0, -1.0]), 1e-12));
        assert!(!is_regular(&CartanElement::from_real(&[1.0, 1.0, 2.0]), 1e-300));
        assert!(!is_regular(&CartanElement::from_real(&[0.0, 1e-15]), 1e-12));
    }

    #[test]
    fn ad_inverse_examples() {
        let a = CartanElement::from_real(&[1.0, -1.0]);
        let x = real_matrix(&[&[0.0, 4.0], &[6.0, 0.0]]);
        let y = ad_inverse(&a, &x).unwrap();
        assert_eq!(y, real_matrix(&[&[0.0, 2.0], &[-3.0, 0.0]]));
        let d = real_matrix(&[&[5.0, 0.0], &[0.0, 7.0]]);
        assert_eq!(ad_inverse(&a, &d).unwrap(), ComplexMatrix::zeros(2, 2));
    }

    #[test]
    fn ad_inverse_rejects_walls() {
        let a = CartanElement::from_real(&[1.0, 1.0]);
        let x = ComplexMatrix::zeros(2, 2);
        assert!(matches!(ad_inverse(&a, &x), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn root_count() {
        for n in 1..6 {
            assert_eq!(all_roots(n).len(), n * (n - 1));
        }
    }

    #[test]
    fn root_json_is_one_based() {
        let r = Root::new(0, 2);
        assert_eq!(serde_json::to_string(&r).unwrap(), "[1,3]");
        let back: Root = serde_json::from_str("[1,3]").unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Root>("[0,1]").is_err());
    }
}
