//! Singular directions, Stokes group supports, sectors and positive systems.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liecore::{all_roots, pairing, require_regular, CartanElement, Root};

pub const ANGLE_TOL: f64 = 1e-9;

/// Polar part Q = A_r/z^r + ... + A_1/z, stored leading coefficient first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrregularType {
    pub coefficients: Vec<CartanElement>,
}

impl IrregularType {
    /// Q = -A0/z, the order-two pole case.
    pub fn from_a0(a0: &CartanElement) -> Self {
        IrregularType {
            coefficients: vec![CartanElement::new(a0.diag.iter().map(|z| -z).collect())],
        }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn validate(&self) -> Result<()> {
        let lead = self
            .coefficients
            .first()
            .ok_or_else(|| Error::InvalidArgument("irregular type has no coefficients".into()))?;
        lead.validate()?;
        let n = lead.dim();
        if self.coefficients.iter().any(|a| a.dim() != n) {
            return Err(Error::InvalidArgument("coefficient dimensions differ".into()));
        }
        if lead.max_abs() == 0.0 {
            return Err(Error::DegenerateInput("leading coefficient vanishes".into()));
        }
        Ok(())
    }

    /// Directions of the leading term: arg z with α(A_r)/z^r real negative.
    pub fn singular_directions(&self, tol_angle: f64) -> Result<Vec<SingularDirection>> {
        self.validate()?;
        let lead = &self.coefficients[0];
        require_regular(lead)?;
        let r = self.order() as f64;
        let mut tagged = Vec::new();
        for root in all_roots(lead.dim()) {
            let w = -pairing(root, lead);
            let base = w.im.atan2(w.re);
            for k in 0..self.order() {
                tagged.push((canonical_angle((base + TAU * k as f64) / r), root));
            }
        }
        Ok(cluster(tagged, tol_angle))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularDirection {
    /// Angle in [0, 2π).
    pub angle: f64,
    /// Supporting roots, sorted lexicographically.
    pub support: Vec<Root>,
    /// Largest angular distance between a member root and the representative;
    /// nonzero only when distinct arguments were merged by clustering.
    #[serde(default)]
    pub spread: f64,
}

impl SingularDirection {
    pub fn smallest_root(&self) -> Root {
        self.support[0]
    }
}

pub fn canonical_angle(theta: f64) -> f64 {
    let mut a = theta.rem_euclid(TAU);
    if a >= TAU {
        a = 0.0;
    }
    a
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Transitive-closure clustering of (angle, root) pairs on the circle.
fn cluster(mut tagged: Vec<(f64, Root)>, tol: f64) -> Vec<SingularDirection> {
    if tagged.is_empty() {
        return Vec::new();
    }
    tagged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut groups: Vec<Vec<(f64, Root)>> = vec![vec![tagged[0]]];
    for w in tagged.windows(2) {
        if w[1].0 - w[0].0 < tol {
            groups.last_mut().unwrap().push(w[1]);
        } else {
            groups.push(vec![w[1]]);
        }
    }
    if groups.len() > 1 {
        let first = groups[0][0].0;
        let last = groups.last().unwrap().last().unwrap().0;
        if first + TAU - last < tol {
            let head = groups.remove(0);
            groups.last_mut().unwrap().extend(head);
        }
    }
    let mut dirs: Vec<SingularDirection> = groups
        .into_iter()
        .map(|g| {
            let mut support: Vec<Root> = g.iter().map(|x| x.1).collect();
            support.sort();
            support.dedup();
            let rep = g.iter().find(|x| x.1 == support[0]).unwrap().0;
            let spread = g.iter().map(|x| angular_distance(x.0, rep)).fold(0.0, f64::max);
            SingularDirection { angle: rep, support, spread }
        })
        .collect();
    dirs.sort_by(|a, b| a.angle.total_cmp(&b.angle).then(a.support[0].cmp(&b.support[0])));
    dirs
}

pub fn singular_directions(a0: &CartanElement, tol_angle: f64) -> Result<Vec<SingularDirection>> {
    if !(tol_angle >= 0.0) {
        return Err(Error::InvalidArgument("angle tolerance must be nonnegative".into()));
    }
    IrregularType::from_a0(a0).singular_directions(tol_angle)
}

pub fn stokes_group_support(d: &SingularDirection) -> Vec<Root> {
    d.support.clone()
}

/// Ordered singular directions with the sectors between them.
///
/// Sector k is the open arc from direction k to direction k+1 (the last one wraps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorDecomposition {
    pub n: usize,
    pub directions: Vec<SingularDirection>,
}

impl SectorDecomposition {
    pub fn new(a0: &CartanElement, tol_angle: f64) -> Result<Self> {
        let directions = singular_directions(a0, tol_angle)?;
        Ok(SectorDecomposition { n: a0.dim(), directions })
    }

    pub fn count(&self) -> usize {
        self.directions.len()
    }

    /// (start, end) angles of sector k with end > start.
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        let m = self.count();
        if m == 0 {
            return (0.0, TAU);
        }
        let a = self.directions[k].angle;
        let mut b = self.directions[(k + 1) % m].angle;
        if b <= a {
            b += TAU;
        }
        (a, b)
    }

    /// Midpoint angle of sector k, in [d_k, d_k + 2π).
    pub fn midpoint(&self, k: usize) -> f64 {
        if self.count() == 0 {
            return 0.0;
        }
        let (a, b) = self.bounds(k);
        0.5 * (a + b)
    }

    pub fn check_sector(&self, k: usize) -> Result<()> {
        let m = self.count();
        if (m == 0 && k != 0) || (m > 0 && k >= m) {
            return Err(Error::InvalidArgument(format!(
                "sector {k} out of range ({} sectors)",
                m.max(1)
            )));
        }
        Ok(())
    }

    /// Index of the direction whose support equals `support`.
    pub fn find_support(&self, support: &[Root]) -> Option<usize> {
        self.directions.iter().position(|d| d.support == support)
    }
}

/// Positive roots and the half-period of directions crossed from the base sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveSystem {
    pub r_plus: Vec<Root>,
    /// Direction indices d_{s+1}, ..., d_{s+l} in crossing order.
    pub half: Vec<usize>,
    /// Index order in which every positive root α_ij has i before j.
    pub order: Vec<usize>,
}

pub fn positive_system(sectors: &SectorDecomposition, base_sector: usize) -> Result<PositiveSystem> {
    sectors.check_sector(base_sector)?;
    let m = sectors.count();
    let n = sectors.n;
    if !m.is_multiple_of(2) {
        return Err(Error::DegenerateInput(format!("odd number of singular directions ({m})")));
    }
    let l = m / 2;
    let half: Vec<usize> = (1..=l).map(|k| (base_sector + k) % m).collect();
    let mut r_plus: Vec<Root> =
        half.iter().flat_map(|&k| sectors.directions[k].support.iter().cloned()).collect();
    r_plus.sort();
    if r_plus.len() != n * (n - 1) / 2 {
        return Err(Error::DegenerateInput("half-period does not cover a positive system".into()));
    }
    // rank indices by how many positive roots start at them
    let mut out_deg = vec![0usize; n];
    for r in &r_plus {
        out_deg[r.i] += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| out_deg[b].cmp(&out_deg[a]).then(a.cmp(&b)));
    for (pa, &a) in order.iter().enumerate() {
        for &b in &order[pa + 1..] {
            if r_plus.binary_search(&Root::new(a, b)).is_err() {
                return Err(Error::DegenerateInput("positive roots are not a total order".into()));
            }
        }
    }
    Ok(PositiveSystem { r_plus, half, order })
}

/// True iff the set holds exactly one of ±α per pair and is closed under addition.
pub fn is_positive_system(r_plus: &[Root], n: usize) -> bool {
    let has = |i: usize, j: usize| r_plus.contains(&Root::new(i, j));
    for i in 0..n {
        for j in (i + 1)..n {
            if has(i, j) == has(j, i) {
                return false;
            }
        }
    }
    for a in r_plus {
        for b in r_plus {
            if a.j == b.i && a.i != b.j && !has(a.i, b.j) {
                return false;
            }
        }
    }
    r_plus.len() == n * (n - 1) / 2
}

/// True iff `b` is antipodal to `a` within `tol`.
pub fn antipodal(a: f64, b: f64, tol: f64) -> bool {
    angular_distance(a + PI, b) < tol
}
