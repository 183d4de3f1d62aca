//! The isomonodromy flow dB = [B, ad⁻¹_{A0}[dA0, B]] along paths in t_reg.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::dualpoisson::StokesDataBundle;
use crate::error::{Error, Result};
use crate::liecore::{
    ad_inverse_unchecked, check_square, diag_commutator, max_norm, require_regular, CartanElement,
    ComplexMatrix,
};
use crate::linalg::char_poly;
use crate::numap::{stokes_data, ConnectionProblem, Precision};
use crate::ode::{integrate as ode_integrate, ErrorScale, OdeOptions};
use crate::stokescomb::{singular_directions, SectorDecomposition};

/// Samples per segment for the wall-clearance and chamber checks.
pub const SAMPLES_PER_SEGMENT: usize = 1000;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Piecewise-linear path in diagonal coordinates, parameterized by t ∈ [0, 1]
/// with equal parameter length per segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub waypoints: Vec<CartanElement>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clearance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub a0: CartanElement,
    #[serde(with = "crate::serde_complex::matrix")]
    pub b: ComplexMatrix,
}

impl PathSpec {
    pub fn new(waypoints: Vec<CartanElement>) -> Self {
        PathSpec { waypoints, wall_clearance: None }
    }

    pub fn dim(&self) -> usize {
        self.waypoints.first().map_or(0, |w| w.dim())
    }

    pub fn segments(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    pub fn clearance(&self) -> f64 {
        self.wall_clearance.unwrap_or_else(|| {
            1e-3 * self.waypoints.iter().map(|w| w.max_abs()).fold(0.0, f64::max)
        })
    }

    pub fn is_closed(&self) -> bool {
        self.waypoints.len() >= 2 && self.waypoints.first() == self.waypoints.last()
    }

    /// A0(t) and dA0/dt on segment `seg`.
    pub fn at(&self, t: f64) -> (CartanElement, CartanElement) {
        let s = self.segments();
        if s == 0 {
            let w = self.waypoints[0].clone();
            let z = CartanElement::new(vec![Complex64::new(0.0, 0.0); w.dim()]);
            return (w, z);
        }
        let x = (t * s as f64).clamp(0.0, s as f64);
        let seg = (x.floor() as usize).min(s - 1);
        self.on_segment(seg, x - seg as f64)
    }

    fn on_segment(&self, seg: usize, u: f64) -> (CartanElement, CartanElement) {
        let s = self.segments() as f64;
        let (p, q) = (&self.waypoints[seg], &self.waypoints[seg + 1]);
        let a = CartanElement::new(p.diag.iter().zip(&q.diag).map(|(x, y)| x + (y - x) * u).collect());
        let d = CartanElement::new(p.diag.iter().zip(&q.diag).map(|(x, y)| (y - x) * s).collect());
        (a, d)
    }

    /// Reversed traversal.
    pub fn reversed(&self) -> PathSpec {
        let mut w = self.waypoints.clone();
        w.reverse();
        PathSpec { waypoints: w, wall_clearance: self.wall_clearance }
    }

    /// This path followed by `other` (which must start where this one ends).
    pub fn concat(&self, other: &PathSpec) -> Result<PathSpec> {
        if self.waypoints.last() != other.waypoints.first() {
            return Err(Error::Path("paths do not meet".into()));
        }
        let mut w = self.waypoints.clone();
        w.extend(other.waypoints.iter().skip(1).cloned());
        Ok(PathSpec { waypoints: w, wall_clearance: self.wall_clearance })
    }

    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::Path("path has no waypoints".into()));
        }
        let n = self.dim();
        for w in &self.waypoints {
            w.validate()?;
            if w.dim() != n {
                return Err(Error::Path("waypoints have different dimensions".into()));
            }
            require_regular(w)?;
        }
        let clear = self.clearance();
        for seg in 0..self.segments() {
            for k in 0..=SAMPLES_PER_SEGMENT {
                let (a, _) = self.on_segment(seg, k as f64 / SAMPLES_PER_SEGMENT as f64);
                if n > 1 && a.min_gap() < clear {
                    return Err(Error::Path(format!(
                        "segment {} comes within {:e} of a wall (clearance {clear:e})",
                        seg + 1,
                        a.min_gap()
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn vector_field(a0: &CartanElement, da0: &CartanElement, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    require_regular(a0)?;
    check_square(b, a0.dim())?;
    Ok(vector_field_unchecked(a0, da0, b))
}

fn vector_field_unchecked(a0: &CartanElement, da0: &CartanElement, b: &ComplexMatrix) -> ComplexMatrix {
    let x = ad_inverse_unchecked(a0, &diag_commutator(da0, b));
    b * &x - &x * b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowReport {
    #[serde(with = "crate::serde_complex::matrix")]
    pub b_final: ComplexMatrix,
    /// Largest relative change of a characteristic-polynomial coefficient.
    pub spectrum_drift: f64,
    /// Largest change of a diagonal entry, relative to max(1, ‖B0‖).
    pub diagonal_drift: f64,
    pub min_wall_distance: f64,
    pub steps: usize,
    pub tol: f64,
}

fn poly_drift(c0: &[Complex64], c: &[Complex64]) -> f64 {
    let scale = c0.iter().map(|z| z.norm()).fold(1.0, f64::max);
    c0.iter().zip(c).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

pub fn integrate_report(path: &PathSpec, b0: &ComplexMatrix, tol: f64) -> Result<FlowReport> {
    path.validate()?;
    let n = path.dim();
    check_square(b0, n)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let c0 = char_poly(b0);
    let d0: Vec<Complex64> = (0..n).map(|i| b0[(i, i)]).collect();
    let bscale = max_norm(b0).max(1.0);
    let clear = path.clearance();
    let mut spectrum_drift: f64 = 0.0;
    let mut diagonal_drift: f64 = 0.0;
    let mut min_wall = f64::INFINITY;
    let mut steps = 0;
    let mut state: Vec<Complex64> = b0.as_slice().to_vec();
    let s = path.segments();
    let mut opts = OdeOptions::new(tol).with_scale(ErrorScale::Global);
    opts.atol = tol * 1e-3 * max_norm(b0).max(1e-300);
    for seg in 0..s {
        let (_, da) = path.on_segment(seg, 0.0);
        let t0 = seg as f64 / s as f64;
        let t1 = (seg + 1) as f64 / s as f64;
        let rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            let (a, _) = path.on_segment(seg, ((t - t0) * s as f64).clamp(0.0, 1.0));
            let b = ComplexMatrix::from_column_slice(n, n, y);
            dy.copy_from_slice(vector_field_unchecked(&a, &da, &b).as_slice());
        };
        let on_step = |t: f64, y: &[Complex64]| -> Result<()> {
            let (a, _) = path.on_segment(seg, ((t - t0) * s as f64).clamp(0.0, 1.0));
            let g = if n > 1 { a.min_gap() } else { f64::INFINITY };
            min_wall = min_wall.min(g);
            if g < clear {
                return Err(Error::Path(format!("flow reached distance {g:e} from a wall at t = {t}")));
            }
            let b = ComplexMatrix::from_column_slice(n, n, y);
            spectrum_drift = spectrum_drift.max(poly_drift(&c0, &char_poly(&b)));
            for i in 0..n {
                diagonal_drift = diagonal_drift.max((b[(i, i)] - d0[i]).norm() / bscale);
            }
            steps += 1;
            Ok(())
        };
        let (y, _) = ode_integrate(rhs, t0, t1, &state, &opts, |_| f64::INFINITY, on_step)?;
        state = y;
    }
    Ok(FlowReport {
        b_final: ComplexMatrix::from_column_slice(n, n, &state),
        spectrum_drift,
        diagonal_drift,
        min_wall_distance: if s == 0 { path.waypoints[0].min_gap() } else { min_wall },
        steps,
        tol,
    })
}

pub fn integrate(path: &PathSpec, b0: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    Ok(integrate_report(path, b0, tol)?.b_final)
}

pub fn loop_action_report(lp: &PathSpec, b0: &ComplexMatrix, tol: f64) -> Result<FlowReport> {
    if !lp.is_closed() {
        return Err(Error::Path("loop must start and end at the same waypoint".into()));
    }
    integrate_report(lp, b0, tol)
}

pub fn loop_action(lp: &PathSpec, b0: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    Ok(loop_action_report(lp, b0, tol)?.b_final)
}

/// Cyclic sequence of direction supports, used to detect chamber changes.
fn support_cycle(a: &CartanElement, tol: f64) -> Result<Vec<Vec<crate::liecore::Root>>> {
    Ok(singular_directions(a, tol)?.into_iter().map(|d| d.support).collect())
}

fn same_cycle(a: &[Vec<crate::liecore::Root>], b: &[Vec<crate::liecore::Root>]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    (0..b.len()).any(|shift| (0..a.len()).all(|k| a[k] == b[(k + shift) % b.len()]))
}

fn nearest_lift(prev: f64, angle: f64) -> f64 {
    angle + TAU * ((prev - angle) / TAU).round()
}

/// Lifted direction angles followed continuously along the path.
struct Tracking {
    start: SectorDecomposition,
    end: SectorDecomposition,
    /// end index of each start direction
    matched: Vec<usize>,
    /// continuous lift at t = 1 of each start direction
    lifted_end: Vec<f64>,
}

fn track_directions(path: &PathSpec, tol: f64) -> Result<Tracking> {
    let start = SectorDecomposition::new(&path.waypoints[0], tol)?;
    let first = support_cycle(&path.waypoints[0], tol)?;
    let mut lifts: Vec<f64> = start.directions.iter().map(|d| d.angle).collect();
    for seg in 0..path.segments() {
        for k in 1..=SAMPLES_PER_SEGMENT {
            let (a, _) = path.on_segment(seg, k as f64 / SAMPLES_PER_SEGMENT as f64);
            let dirs = singular_directions(&a, tol)?;
            let cyc: Vec<_> = dirs.iter().map(|d| d.support.clone()).collect();
            if !same_cycle(&first, &cyc) {
                return Err(Error::Chamber(format!(
                    "singular directions collide on segment {} near u = {}",
                    seg + 1,
                    k as f64 / SAMPLES_PER_SEGMENT as f64
                )));
            }
            for (i, d) in start.directions.iter().enumerate() {
                let j = dirs.iter().position(|e| e.support == d.support).unwrap();
                lifts[i] = nearest_lift(lifts[i], dirs[j].angle);
            }
        }
    }
    let end = SectorDecomposition::new(path.waypoints.last().unwrap(), tol)?;
    let matched = start
        .directions
        .iter()
        .map(|d| end.find_support(&d.support).unwrap())
        .collect();
    Ok(Tracking { start, end, matched, lifted_end: lifts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsomonodromyReport {
    pub start: StokesDataBundle,
    pub end: StokesDataBundle,
    /// Start direction k corresponds to end direction matched[k].
    pub matched: Vec<usize>,
    /// Whole turns by which each source-sector branch moved along the path.
    pub source_turns: Vec<i64>,
    pub max_deviation: f64,
    pub flow: FlowReport,
    pub passed: bool,
}

pub const ISOMONODROMY_TOL: f64 = 1e-6;

/// Compare Stokes data at both ends of a chamber-internal path, with B carried
/// by the isomonodromy flow.
pub fn isomonodromy_check(path: &PathSpec, b0: &ComplexMatrix, precision: &Precision) -> Result<IsomonodromyReport> {
    path.validate()?;
    let tr = track_directions(path, precision.angle_tol)?;
    let flow_tol = precision.ode_rel_tol.min(DEFAULT_TOL);
    let flow = integrate_report(path, b0, flow_tol)?;
    let p0 = ConnectionProblem::new(path.waypoints[0].clone(), b0.clone(), *precision)?;
    let p1 = ConnectionProblem::new(path.waypoints.last().unwrap().clone(), flow.b_final.clone(), *precision)?;
    let (start, _) = stokes_data(&p0)?;
    let (end, _) = stokes_data(&p1)?;
    let m = tr.start.count();
    let mut source_turns = Vec::with_capacity(m);
    let mut max_deviation: f64 = 0.0;
    for k in 0..m {
        let src = (k + m - 1) % m;
        // midpoint of the source sector followed continuously
        let a0 = tr.start.directions[src].angle;
        let a1 = tr.start.directions[k].angle;
        let moved = 0.5 * ((tr.lifted_end[src] - a0) + (tr.lifted_end[k] - a1));
        let mid_end = tr.start.midpoint(src) + moved;
        let k_end = tr.matched[k];
        let src_end = (k_end + m - 1) % m;
        let turns = ((mid_end - tr.end.midpoint(src_end)) / TAU).round() as i64;
        source_turns.push(turns);
        let ke = end.lifted_factor(k_end, turns);
        let ks = &start.factors[k];
        let dev = max_norm(&(ks - &ke)) / max_norm(ks).max(1.0);
        max_deviation = max_deviation.max(dev);
    }
    Ok(IsomonodromyReport {
        start,
        end,
        matched: tr.matched,
        source_turns,
        max_deviation,
        passed: max_deviation < ISOMONODROMY_TOL,
        flow,
    })
}
