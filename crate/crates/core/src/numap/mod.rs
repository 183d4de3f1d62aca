//! Numerical dual exponential map for the connection (A0/z² + B/z) dz.

mod laplace;
mod transport;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::dualpoisson::{assemble, DualGroupElement, StokesDataBundle};
use crate::error::{Error, Result};
use crate::liecore::{
    ad_inverse_unchecked, check_square, diagonal_part, max_norm, require_regular, CartanElement,
    ComplexMatrix, Root,
};
use crate::linalg::{eigenvalues, inverse};
use crate::ode::OdeStats;
use crate::stokescomb::{SectorDecomposition, SingularDirection, ANGLE_TOL};

/// How canonical sectorial solutions are summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Summation {
    /// Laplace transform of the Borel-plane solution along the sector bisector.
    #[default]
    Laplace,
    /// Optimally truncated series at a small radius, continued radially to the
    /// matching radius. Well conditioned only when every pair of exponentials
    /// is neutral on the bisectors (n = 2, collinear spectra).
    Truncation,
}

pub const DEFAULT_SERIES_ORDER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Precision {
    pub series_order: Option<usize>,
    pub matching_radius: Option<f64>,
    pub ode_rel_tol: f64,
    pub support_tol: f64,
    pub angle_tol: f64,
    pub summation: Summation,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            series_order: None,
            matching_radius: None,
            ode_rel_tol: 1e-12,
            support_tol: 1e-7,
            angle_tol: ANGLE_TOL,
            summation: Summation::Laplace,
        }
    }
}

impl Precision {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.ode_rel_tol) || !pos(self.support_tol) || !(self.angle_tol >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if let Some(r) = self.matching_radius {
            if !pos(r) {
                return Err(Error::InvalidArgument("matching radius must be positive".into()));
            }
        }
        if self.series_order == Some(0) {
            return Err(Error::InvalidArgument("series order must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionProblem {
    pub a0: CartanElement,
    pub b: ComplexMatrix,
    pub precision: Precision,
    /// A0 minus the mean of its eigenvalues. The scalar part only contributes
    /// the factor e^{-c/z}, so all continuation runs on the trace-free system.
    reduced: CartanElement,
}

impl ConnectionProblem {
    pub fn new(a0: CartanElement, b: ComplexMatrix, precision: Precision) -> Result<Self> {
        require_regular(&a0)?;
        check_square(&b, a0.dim())?;
        precision.validate()?;
        let c = a0.diag.iter().sum::<Complex64>() / a0.dim() as f64;
        let reduced = CartanElement::new(a0.diag.iter().map(|x| x - c).collect());
        Ok(ConnectionProblem { a0, b, precision, reduced })
    }

    /// Mean eigenvalue c of A0.
    pub fn scalar_part(&self) -> Complex64 {
        self.a0.diag[0] - self.reduced.diag[0]
    }

    /// e^{-c/z}, the factor relating solutions of the full and trace-free systems.
    fn scalar_factor(&self, z: Complex64) -> Complex64 {
        (-self.scalar_part() / z).exp()
    }

    pub fn dim(&self) -> usize {
        self.a0.dim()
    }

    pub fn lambda(&self) -> CartanElement {
        diagonal_part(&self.b)
    }

    /// Matching radius: the explicit value, or a quarter of the largest root pairing.
    pub fn matching_radius(&self) -> f64 {
        if let Some(r) = self.precision.matching_radius {
            return r;
        }
        if self.dim() == 1 {
            return 1.0;
        }
        0.25 * self.a0.max_gap()
    }

    pub fn sectors(&self) -> Result<SectorDecomposition> {
        SectorDecomposition::new(&self.a0, self.precision.angle_tol)
    }

    pub fn series_order(&self) -> usize {
        self.precision.series_order.unwrap_or(DEFAULT_SERIES_ORDER)
    }

    /// The precision with automatic choices filled in.
    pub fn resolved_precision(&self) -> Precision {
        Precision {
            series_order: Some(self.series_order()),
            matching_radius: Some(self.matching_radius()),
            ..self.precision
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormalExpansion {
    pub lambda: CartanElement,
    #[serde(with = "crate::serde_complex::matrix_vec")]
    pub coeffs: Vec<ComplexMatrix>,
    /// Index of the smallest term ‖F_k‖ r^k at the evaluation radius.
    pub truncation_order: usize,
    /// Norm of that smallest term.
    pub residual_estimate: f64,
    pub radius: f64,
}

impl FormalExpansion {
    /// I + Σ_{k ≤ order} F_k z^k.
    pub fn partial_sum(&self, z: Complex64, order: usize) -> ComplexMatrix {
        let n = self.lambda.dim();
        let mut acc = ComplexMatrix::identity(n, n);
        let mut zk = Complex64::new(1.0, 0.0);
        for f in self.coeffs.iter().take(order) {
            zk *= z;
            acc += f * zk;
        }
        acc
    }

    /// z² F' - (A0 + zB) F + F (A0 + zΛ) for the series truncated at N,
    /// summed power by power so that cancelled orders stay at round-off size.
    pub fn gauge_defect(&self, a0: &CartanElement, b: &ComplexMatrix, z: Complex64) -> ComplexMatrix {
        let n = a0.dim();
        let lam = self.lambda.to_matrix();
        let big_n = self.coeffs.len();
        let id = ComplexMatrix::identity(n, n);
        let coeff = |k: usize| -> ComplexMatrix {
            if k == 0 {
                id.clone()
            } else if k <= big_n {
                self.coeffs[k - 1].clone()
            } else {
                ComplexMatrix::zeros(n, n)
            }
        };
        let mut out = ComplexMatrix::zeros(n, n);
        let mut zk = Complex64::new(1.0, 0.0);
        for k in 1..=big_n + 1 {
            zk *= z;
            let prev = coeff(k - 1);
            let dk = &prev * Complex64::new((k - 1) as f64, 0.0)
                - crate::liecore::diag_commutator(a0, &coeff(k))
                - b * &prev
                + &prev * &lam;
            out += dk * zk;
        }
        out
    }
}

/// Solve the gauge equation order by order up to F_N.
pub fn formal_normalization(problem: &ConnectionProblem, order: usize) -> Result<FormalExpansion> {
    require_regular(&problem.a0)?;
    if order == 0 {
        return Err(Error::InvalidArgument("series order must be at least 1".into()));
    }
    let n = problem.dim();
    let b = &problem.b;
    let lambda = problem.lambda();
    let lam = lambda.to_matrix();
    let mut coeffs: Vec<ComplexMatrix> = Vec::with_capacity(order);
    let mut fk = ComplexMatrix::identity(n, n);
    for k in 0..order {
        // [A0, F_{k+1}] = k F_k - B F_k + F_k Λ
        let rhs = &fk * Complex64::new(k as f64, 0.0) - b * &fk + &fk * &lam;
        let mut next = ad_inverse_unchecked(&problem.a0, &rhs);
        let kk = (k + 1) as f64;
        for i in 0..n {
            let mut d = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    d += b[(i, j)] * next[(j, i)];
                }
            }
            next[(i, i)] = d / kk;
        }
        if next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Precision(format!("formal coefficient F_{} overflowed", k + 1)));
        }
        coeffs.push(next.clone());
        fk = next;
    }
    let radius = problem.matching_radius();
    let (truncation_order, residual_estimate) = optimal_index(&coeffs, radius);
    Ok(FormalExpansion { lambda, coeffs, truncation_order, residual_estimate, radius })
}

fn optimal_index(coeffs: &[ComplexMatrix], r: f64) -> (usize, f64) {
    let mut best = (0usize, 1.0f64);
    let mut rk = 1.0;
    for (k, c) in coeffs.iter().enumerate() {
        rk *= r;
        let t = max_norm(c) * rk;
        if t < best.1 {
            best = (k + 1, t);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalSolution {
    pub sector: usize,
    #[serde(with = "crate::serde_complex::scalar")]
    pub anchor: Complex64,
    /// Lifted argument of the anchor, which fixes the branch of z^Λ.
    pub anchor_arg: f64,
    #[serde(with = "crate::serde_complex::matrix")]
    pub value: ComplexMatrix,
}

/// Φ at z = r e^{iθ} for the sector containing θ, with z^Λ taken at arg z = θ.
fn sectorial_value(
    problem: &ConnectionProblem,
    expansion: Option<&FormalExpansion>,
    r: f64,
    theta: f64,
    stats: &mut OdeStats,
) -> Result<ComplexMatrix> {
    let n = problem.dim();
    let tol = problem.precision.ode_rel_tol;
    match problem.precision.summation {
        Summation::Laplace => {
            let cols: Vec<Result<laplace::LaplaceColumn>> = (0..n)
                .into_par_iter()
                .map(|j| laplace::laplace_column(&problem.reduced, &problem.b, j, r, theta, tol * 1e-2))
                .collect();
            let mut value = ComplexMatrix::zeros(n, n);
            for (j, c) in cols.into_iter().enumerate() {
                let c = c?;
                stats.add(c.stats);
                value.set_column(j, &c.value);
            }
            Ok(value)
        }
        Summation::Truncation => {
            let owned;
            let exp = match expansion {
                Some(e) => e,
                None => {
                    owned = formal_normalization(problem, problem.series_order())?;
                    &owned
                }
            };
            truncation_value(problem, exp, r, theta, stats)
        }
    }
}

fn truncation_value(
    problem: &ConnectionProblem,
    exp: &FormalExpansion,
    r: f64,
    theta: f64,
    stats: &mut OdeStats,
) -> Result<ComplexMatrix> {
    let n = problem.dim();
    let tol = problem.precision.ode_rel_tol;
    let gap = if n == 1 { 1.0 } else { problem.reduced.min_gap() };
    // optimal-truncation error ~ e^{-gap/r_s}
    let r_s = (gap / (1.0 / tol).ln()).min(r);
    let (order, resid) = optimal_index(&exp.coeffs, r_s);
    if resid > tol.sqrt() * 1e-3 {
        return Err(Error::Precision(format!(
            "truncated series residual {resid:e} too large at radius {r_s:e}; raise series_order or lower the radius"
        )));
    }
    let mut amp: f64 = 1.0;
    for i in 0..n {
        for k in 0..n {
            let d = (problem.reduced.diag[i] - problem.reduced.diag[k]) * Complex64::from_polar(1.0, -theta);
            amp = amp.max((d.re.abs() * (1.0 / r_s - 1.0 / r)).exp());
        }
    }
    if amp > 1e4 {
        return Err(Error::Precision(format!(
            "radial continuation amplifies errors by {amp:e}; use Laplace summation"
        )));
    }
    let z = Complex64::from_polar(r_s, theta);
    let log_z = Complex64::new(r_s.ln(), theta);
    let mut phi = exp.partial_sum(z, order);
    for j in 0..n {
        let f = (exp.lambda.diag[j] * log_z - problem.reduced.diag[j] / z).exp();
        for i in 0..n {
            phi[(i, j)] *= f;
        }
    }
    if r_s == r {
        return Ok(phi);
    }
    let (y, st) = transport::along_ray(&problem.reduced, &problem.b, theta, r_s, r, &phi, tol)?;
    stats.add(st);
    Ok(y)
}

pub fn canonical_solution(
    problem: &ConnectionProblem,
    expansion: &FormalExpansion,
    sector: usize,
) -> Result<CanonicalSolution> {
    let sectors = problem.sectors()?;
    sectors.check_sector(sector)?;
    let r = problem.matching_radius();
    let theta = sectors.midpoint(sector);
    let mut stats = OdeStats::default();
    let anchor = Complex64::from_polar(r, theta);
    let value = sectorial_value(problem, Some(expansion), r, theta, &mut stats)? * problem.scalar_factor(anchor);
    Ok(CanonicalSolution { sector, anchor, anchor_arg: theta, value })
}

/// Φ_i at an arbitrary radius on its midpoint ray (canonical branch).
pub fn canonical_solution_at(problem: &ConnectionProblem, sector: usize, r: f64) -> Result<CanonicalSolution> {
    let sectors = problem.sectors()?;
    sectors.check_sector(sector)?;
    let theta = sectors.midpoint(sector);
    let mut stats = OdeStats::default();
    let anchor = Complex64::from_polar(r, theta);
    let value = sectorial_value(problem, None, r, theta, &mut stats)? * problem.scalar_factor(anchor);
    Ok(CanonicalSolution { sector, anchor, anchor_arg: theta, value })
}

/// Right multiplication by e^{2πitΛ}: the branch of z^Λ moved by t turns.
fn shift_branch(phi: &ComplexMatrix, lambda: &CartanElement, t: f64) -> ComplexMatrix {
    let mut out = phi.clone();
    for j in 0..phi.ncols() {
        let f = (Complex64::new(0.0, TAU * t) * lambda.diag[j]).exp();
        for i in 0..phi.nrows() {
            out[(i, j)] *= f;
        }
    }
    out
}

/// Raw Stokes factor before projection, with its stray-entry diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorDiagnostics {
    pub direction: usize,
    /// Largest |entry| outside the Stokes group support (diagonal measured against 1).
    pub off_support_residual: f64,
    pub ode_steps: usize,
}

fn project(raw: &ComplexMatrix, support: &[Root], tol: f64, k: usize) -> Result<(ComplexMatrix, f64)> {
    let n = raw.nrows();
    let mut stray: f64 = 0.0;
    let mut at = (0, 0);
    let mut out = ComplexMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = raw[(i, j)];
            if i == j {
                let d = (v - 1.0).norm();
                if d > stray {
                    stray = d;
                    at = (i, j);
                }
            } else if support.contains(&Root::new(i, j)) {
                out[(i, j)] = v;
            } else if v.norm() > stray {
                stray = v.norm();
                at = (i, j);
            }
        }
    }
    if !(stray <= tol) {
        return Err(Error::Precision(format!(
            "Stokes factor {k}: off-support residual {stray:e} at ({},{}) exceeds {tol:e}",
            at.0 + 1,
            at.1 + 1
        )));
    }
    Ok((out, stray))
}

/// Canonical solutions at every sector anchor (canonical branches), in parallel.
fn anchor_values(problem: &ConnectionProblem, sectors: &SectorDecomposition, r: f64) -> Result<(Vec<ComplexMatrix>, OdeStats)> {
    let m = sectors.count().max(1);
    let vals: Vec<Result<(ComplexMatrix, OdeStats)>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let mut st = OdeStats::default();
            let v = sectorial_value(problem, None, r, sectors.midpoint(k), &mut st)?;
            Ok((v, st))
        })
        .collect();
    let mut out = Vec::with_capacity(m);
    let mut stats = OdeStats::default();
    for v in vals {
        let (v, st) = v?;
        stats.add(st);
        out.push(v);
    }
    Ok((out, stats))
}

/// Factor for direction k: continue Φ_{k-1} over the arc and compare with Φ_k.
fn factor_from_anchors(
    problem: &ConnectionProblem,
    sectors: &SectorDecomposition,
    anchors: &[ComplexMatrix],
    r: f64,
    k: usize,
) -> Result<(ComplexMatrix, FactorDiagnostics)> {
    let m = sectors.count();
    let src = (k + m - 1) % m;
    let phi0 = sectors.midpoint(src);
    let mut phi1 = sectors.midpoint(k);
    let mut target = anchors[k].clone();
    while phi1 <= phi0 {
        phi1 += TAU;
        target = shift_branch(&target, &problem.lambda(), 1.0);
    }
    let (y, st) = transport::along_arc(&problem.reduced, &problem.b, r, phi0, phi1, &anchors[src], problem.precision.ode_rel_tol)?;
    let raw = inverse(&target)? * y;
    let (k_d, stray) = project(&raw, &sectors.directions[k].support, problem.precision.support_tol, k)?;
    Ok((k_d, FactorDiagnostics { direction: k, off_support_residual: stray, ode_steps: st.accepted }))
}

/// Stokes factor across direction `d` (an index into the sector decomposition).
pub fn stokes_factor(problem: &ConnectionProblem, d: usize) -> Result<ComplexMatrix> {
    let sectors = problem.sectors()?;
    if d >= sectors.count() {
        return Err(Error::InvalidArgument(format!("direction {d} out of range")));
    }
    let m = sectors.count();
    let r = problem.matching_radius();
    let src = (d + m - 1) % m;
    let mut st = OdeStats::default();
    let mut anchors = vec![ComplexMatrix::zeros(0, 0); m];
    anchors[src] = sectorial_value(problem, None, r, sectors.midpoint(src), &mut st)?;
    anchors[d] = sectorial_value(problem, None, r, sectors.midpoint(d), &mut st)?;
    Ok(factor_from_anchors(problem, &sectors, &anchors, r, d)?.0)
}

/// The direction of `SingularDirection` within the problem's decomposition.
pub fn direction_index(problem: &ConnectionProblem, d: &SingularDirection) -> Result<usize> {
    problem
        .sectors()?
        .find_support(&d.support)
        .ok_or_else(|| Error::InvalidArgument("direction does not belong to this problem".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuDiagnostics {
    pub matching_radius: f64,
    pub summation: Summation,
    pub truncation_order: usize,
    pub residual_estimate: f64,
    pub factors: Vec<FactorDiagnostics>,
    pub ode_steps: usize,
    pub near_collinear_merges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuReport {
    pub base_sector: usize,
    pub bundle: StokesDataBundle,
    pub dual: DualGroupElement,
    /// Eigenvalues of b_-^{-1} b_+, sorted.
    #[serde(with = "crate::serde_complex::vec")]
    pub product_spectrum: Vec<Complex64>,
    /// e^{2πiλ} over the eigenvalues λ of B, sorted.
    #[serde(with = "crate::serde_complex::vec")]
    pub predicted_spectrum: Vec<Complex64>,
    pub spectrum_mismatch: f64,
    pub diagnostics: NuDiagnostics,
}

/// Stokes data with factors in the canonical-branch convention of [`StokesDataBundle`].
pub fn stokes_data(problem: &ConnectionProblem) -> Result<(StokesDataBundle, NuDiagnostics)> {
    let sectors = problem.sectors()?;
    let r = problem.matching_radius();
    let m = sectors.count();
    let expansion = formal_normalization(problem, problem.series_order())?;
    let mut factors = Vec::with_capacity(m);
    let mut diags = Vec::with_capacity(m);
    let mut steps = 0;
    if m > 0 {
        let (anchors, st) = anchor_values(problem, &sectors, r)?;
        steps += st.accepted;
        let res: Vec<Result<(ComplexMatrix, FactorDiagnostics)>> = (0..m)
            .into_par_iter()
            .map(|k| factor_from_anchors(problem, &sectors, &anchors, r, k))
            .collect();
        for x in res {
            let (f, d) = x?;
            steps += d.ode_steps;
            factors.push(f);
            diags.push(d);
        }
    }
    let bundle = StokesDataBundle { lambda: expansion.lambda.clone(), directions: sectors.directions.clone(), factors };
    let diagnostics = NuDiagnostics {
        matching_radius: r,
        summation: problem.precision.summation,
        truncation_order: expansion.truncation_order,
        residual_estimate: expansion.residual_estimate,
        factors: diags,
        ode_steps: steps,
        near_collinear_merges: sectors.directions.iter().filter(|d| d.spread > 0.0).count(),
    };
    Ok((bundle, diagnostics))
}

/// e^{2πiλ} for the eigenvalues λ of B, sorted.
pub fn predicted_spectrum(b: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let mut v: Vec<Complex64> = eigenvalues(b)?
        .into_iter()
        .map(|l| (Complex64::new(0.0, TAU) * l).exp())
        .collect();
    crate::linalg::sort_lex(&mut v);
    Ok(v)
}

pub fn nu_report(problem: &ConnectionProblem, base_sector: usize) -> Result<NuReport> {
    let (bundle, diagnostics) = stokes_data(problem)?;
    let sectors = problem.sectors()?;
    let dual = assemble(&bundle, &sectors, base_sector)?;
    let product_spectrum = eigenvalues(&dual.product())?;
    let predicted = predicted_spectrum(&problem.b)?;
    let spectrum_mismatch = crate::linalg::multiset_distance(&product_spectrum, &predicted);
    Ok(NuReport {
        base_sector,
        bundle,
        dual,
        product_spectrum,
        predicted_spectrum: predicted,
        spectrum_mismatch,
        diagnostics,
    })
}

/// ν_{A0}(B) as a point of the dual group, for the given base sector.
pub fn nu(a0: &CartanElement, b: &ComplexMatrix, precision: &Precision, base_sector: usize) -> Result<DualGroupElement> {
    let problem = ConnectionProblem::new(a0.clone(), b.clone(), *precision)?;
    Ok(nu_report(&problem, base_sector)?.dual)
}

fn base_anchor(problem: &ConnectionProblem, base_sector: usize) -> Result<(f64, f64)> {
    let sectors = problem.sectors()?;
    sectors.check_sector(base_sector)?;
    Ok((problem.matching_radius(), sectors.midpoint(base_sector)))
}

/// Monodromy in the canonical frame of the base sector: Φ^{-1} Y after one
/// counterclockwise turn around |z| = r0.
pub fn monodromy(problem: &ConnectionProblem, base_sector: usize) -> Result<ComplexMatrix> {
    let (r, theta) = base_anchor(problem, base_sector)?;
    let mut st = OdeStats::default();
    let phi = sectorial_value(problem, None, r, theta, &mut st)?;
    let (y, _) = transport::along_arc(&problem.reduced, &problem.b, r, theta, theta + TAU, &phi, problem.precision.ode_rel_tol)?;
    Ok(inverse(&phi)? * y)
}

/// Tolerance for flagging eigenvalue differences of B as nonzero integers.
pub const RESONANCE_TOL: f64 = 1e-8;

pub fn is_resonant(b: &ComplexMatrix) -> Result<bool> {
    let ev = eigenvalues(b)?;
    for p in 0..ev.len() {
        for q in 0..ev.len() {
            if p == q {
                continue;
            }
            let d = ev[p] - ev[q];
            let k = d.re.round();
            if k != 0.0 && (d.re - k).abs() <= RESONANCE_TOL && d.im.abs() <= RESONANCE_TOL {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Default outer radius for the frame at infinity.
pub fn default_outer_radius(problem: &ConnectionProblem) -> f64 {
    (8.0 * problem.reduced.max_abs()).max(4.0 * problem.matching_radius()).max(1.0)
}

/// Solution near z = ∞: H(w) w^{-B} with w = 1/z and H(0) = I, evaluated at
/// z = R e^{iθ} with log w = -ln R - iθ.
pub fn infinity_frame(problem: &ConnectionProblem, r_out: f64, theta: f64) -> Result<ComplexMatrix> {
    let z = Complex64::from_polar(r_out, theta);
    Ok(reduced_infinity_frame(problem, r_out, theta)? * problem.scalar_factor(z))
}

fn reduced_infinity_frame(problem: &ConnectionProblem, r_out: f64, theta: f64) -> Result<ComplexMatrix> {
    let n = problem.dim();
    let b = &problem.b;
    let a = problem.reduced.to_matrix();
    let id = ComplexMatrix::identity(n, n);
    let w = Complex64::from_polar(1.0 / r_out, -theta);
    // (m + ad_B) H_m = -A0 H_{m-1}, solved on vec(H) (column-major)
    let kron = |m: f64| {
        let mut l = ComplexMatrix::zeros(n * n, n * n);
        for col in 0..n {
            for row in 0..n {
                let p = col * n + row;
                l[(p, p)] += Complex64::new(m, 0.0);
                for k in 0..n {
                    // (B H)_{row,col} = Σ_k B[row,k] H[k,col]
                    l[(p, col * n + k)] += b[(row, k)];
                    // (H B)_{row,col} = Σ_k H[row,k] B[k,col]
                    l[(p, k * n + row)] -= b[(k, col)];
                }
            }
        }
        l
    };
    let mut h = id.clone();
    let mut sum = id.clone();
    let mut wm = Complex64::new(1.0, 0.0);
    let mut converged = false;
    for m in 1..600 {
        let rhs = -(&a * &h);
        let v = DVector::from_column_slice(rhs.as_slice());
        let sol = kron(m as f64)
            .lu()
            .solve(&v)
            .ok_or_else(|| Error::Resonance(format!("(m + ad B) singular at m = {m}")))?;
        h = ComplexMatrix::from_column_slice(n, n, sol.as_slice());
        wm *= w;
        let term = &h * wm;
        sum += &term;
        if max_norm(&term) < 1e-18 * max_norm(&sum) && m > 2 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Precision("series at infinity did not converge; lower R_out".into()));
    }
    let log_w = Complex64::new(-r_out.ln(), -theta);
    let w_mb = (b * (-log_w)).exp();
    Ok(sum * w_mb)
}

/// C with Y_∞ = Φ_base · C, where Y_∞ is the frame at infinity carried inward
/// along the base-sector bisector.
pub fn connection_matrix(problem: &ConnectionProblem, base_sector: usize, r_out: Option<f64>) -> Result<ComplexMatrix> {
    if is_resonant(&problem.b)? {
        return Err(Error::Resonance("eigenvalues of B differ by a nonzero integer".into()));
    }
    let (r, theta) = base_anchor(problem, base_sector)?;
    let r_out = r_out.unwrap_or_else(|| default_outer_radius(problem));
    if !(r_out > r) {
        return Err(Error::InvalidArgument("R_out must exceed the matching radius".into()));
    }
    let y_out = reduced_infinity_frame(problem, r_out, theta)?;
    let (y_in, _) = transport::along_ray(&problem.reduced, &problem.b, theta, r_out, r, &y_out, problem.precision.ode_rel_tol)?;
    let mut st = OdeStats::default();
    let phi = sectorial_value(problem, None, r, theta, &mut st)?;
    Ok(inverse(&phi)? * y_in)
}

/// Angle of the midpoint of `sector` shifted by whole turns.
pub fn lifted_midpoint(sectors: &SectorDecomposition, sector: usize, turns: i64) -> f64 {
    sectors.midpoint(sector) + TAU * turns as f64
}

#[cfg(test)]
mod tests;
