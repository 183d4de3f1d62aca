//! Exact plane curves in (p, q) and the elliptic model u² = s·f(s).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

pub const GENUS7_DATA: &str = include_str!("../data/genus7_curve.txt");
pub const GENUS7_SHA256: &str = "a786b04a46e862f693147acce07e271829bc2280e83cb61e78ec5a10798bbe0e";

/// Monomial exponents (i, j) of p^i q^j.
pub type Exponents = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlaneCurve {
    terms: BTreeMap<Exponents, BigRational>,
}

fn parse_rational(s: &str) -> Option<BigRational> {
    match s.split_once('/') {
        Some((a, b)) => {
            let n: BigInt = a.parse().ok()?;
            let d: BigInt = b.parse().ok()?;
            (!d.is_zero()).then(|| BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

impl PlaneCurve {
    pub fn zero() -> Self {
        PlaneCurve::default()
    }

    /// Lines "coefficient i j"; `#` starts a comment. Repeated monomials add.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = PlaneCurve::zero();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::InvalidArgument(format!("curve data line {}: {line:?}", ln + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            let coef = parse_rational(f[0]).ok_or_else(bad)?;
            let i: u32 = f[1].parse().map_err(|_| bad())?;
            let j: u32 = f[2].parse().map_err(|_| bad())?;
            c.add_term((i, j), coef);
        }
        Ok(c)
    }

    pub fn add_term(&mut self, e: Exponents, coef: BigRational) {
        let v = self.terms.entry(e).or_insert_with(BigRational::zero);
        *v += coef;
        if v.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn coefficient(&self, e: Exponents) -> BigRational {
        self.terms.get(&e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(i, j)| i + j).max()
    }

    pub fn genus7() -> Self {
        PlaneCurve::parse(GENUS7_DATA).expect("bundled curve data parses")
    }

    pub fn evaluate_exact(&self, p: &BigRational, q: &BigRational) -> BigRational {
        self.terms
            .iter()
            .map(|(&(i, j), c)| c * pow(p, i) * pow(q, j))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn evaluate(&self, p: Complex64, q: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(i, j), c)| p.powu(i) * q.powu(j) * c.to_f64().unwrap_or(f64::NAN))
            .sum()
    }

    /// Substitute (p, q) ↦ (sp·q, sq·p) if `swap`, else (sp·p, sq·q).
    fn transformed(&self, swap: bool, sp: i32, sq: i32) -> PlaneCurve {
        let mut out = PlaneCurve::zero();
        for (&(i, j), c) in &self.terms {
            let sign = if (sp < 0 && i % 2 == 1) ^ (sq < 0 && j % 2 == 1) { -c.clone() } else { c.clone() };
            out.add_term(if swap { (j, i) } else { (i, j) }, sign);
        }
        out
    }

    fn sub(&self, other: &PlaneCurve) -> PlaneCurve {
        let mut out = self.clone();
        for (&e, c) in &other.terms {
            out.add_term(e, -c.clone());
        }
        out
    }
}

fn pow(x: &BigRational, k: u32) -> BigRational {
    (0..k).fold(BigRational::one(), |a, _| a * x)
}

impl fmt::Display for PlaneCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(&(i, j), c)| format!("{c}*p^{i}*q^{j}"))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub p_exponent: u32,
    pub q_exponent: u32,
    /// Coefficient of this monomial in the failing difference, as a rational string.
    pub difference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub swap_symmetric: bool,
    pub sign_symmetric: bool,
    pub swap_offender: Option<Monomial>,
    pub sign_offender: Option<Monomial>,
}

impl SymmetryReport {
    pub fn holds(&self) -> bool {
        self.swap_symmetric && self.sign_symmetric
    }
}

fn first_offender(d: &PlaneCurve) -> Option<Monomial> {
    d.terms.iter().next().map(|(&(i, j), c)| Monomial { p_exponent: i, q_exponent: j, difference: c.to_string() })
}

/// F(p,q) − F(q,p) ≡ 0 and F(−p,−q) − F(p,q) ≡ 0, exactly.
pub fn symmetry_check(c: &PlaneCurve) -> SymmetryReport {
    let swap = c.sub(&c.transformed(true, 1, 1));
    let sign = c.transformed(false, -1, -1).sub(c);
    SymmetryReport {
        swap_symmetric: swap.terms.is_empty(),
        sign_symmetric: sign.terms.is_empty(),
        swap_offender: first_offender(&swap),
        sign_offender: first_offender(&sign),
    }
}

pub fn checksum(data: &str) -> String {
    Sha256::digest(data.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Guard against edits to the bundled curve data.
pub fn verify_genus7_checksum() -> Result<()> {
    let got = checksum(GENUS7_DATA);
    if got != GENUS7_SHA256 {
        return Err(Error::InvalidArgument(format!("curve data checksum {got} does not match {GENUS7_SHA256}")));
    }
    Ok(())
}

/// u² = s·f(s) with f(s) = a s² + b s + c.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllipticModel {
    pub a: BigRational,
    pub b: BigRational,
    pub c: BigRational,
}

impl EllipticModel {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        let r = |x: i64| BigRational::from_integer(x.into());
        EllipticModel { a: r(a), b: r(b), c: r(c) }
    }

    /// f(s) = 8s² − 11s + 8.
    pub fn stored() -> Self {
        EllipticModel::new(8, -11, 8)
    }

    pub fn discriminant(&self) -> BigRational {
        &self.b * &self.b - BigRational::from_integer(4.into()) * &self.a * &self.c
    }
}

/// s·f(s) has three distinct roots.
pub fn elliptic_smoothness(e: &EllipticModel) -> bool {
    !e.a.is_zero() && !e.c.is_zero() && !e.discriminant().is_zero()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurvesReport {
    pub checksum: String,
    pub checksum_ok: bool,
    pub degree: u32,
    pub symmetry: SymmetryReport,
    pub value_at_origin: String,
    pub elliptic_discriminant: String,
    pub elliptic_smooth: bool,
    /// Stated genus and solution degree, carried as metadata and not checked.
    pub unverified: BTreeMap<String, u32>,
}

impl CurvesReport {
    pub fn passed(&self) -> bool {
        self.checksum_ok && self.symmetry.holds() && self.elliptic_smooth
    }
}

pub fn verify() -> CurvesReport {
    let curve = PlaneCurve::genus7();
    let e = EllipticModel::stored();
    let sum = checksum(GENUS7_DATA);
    CurvesReport {
        checksum_ok: sum == GENUS7_SHA256,
        checksum: sum,
        degree: curve.degree().unwrap_or(0),
        symmetry: symmetry_check(&curve),
        value_at_origin: curve.evaluate_exact(&BigRational::zero(), &BigRational::zero()).to_string(),
        elliptic_discriminant: e.discriminant().to_string(),
        elliptic_smooth: elliptic_smoothness(&e),
        unverified: [("genus".to_string(), 7), ("solution_degree".to_string(), 72)].into_iter().collect(),
    }
}
