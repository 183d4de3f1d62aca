//! Complete multipartite graphs, their simply-laced Kac–Moody Cartan matrices,
//! Weyl reflections and root classification.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::permutations;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    /// Parts are sorted into weakly decreasing order.
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::InvalidArgument("partition parts must be positive and nonempty".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Partition { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// One part: the totally disconnected graph.
    pub fn is_discrete(&self) -> bool {
        self.parts.len() == 1
    }

    /// Shape (n, 1): the star K_{1,n}.
    pub fn is_star(&self) -> bool {
        self.parts.len() == 2 && self.parts[1] == 1
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Partition::new(v)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// All partitions of `n`, largest part first, in reverse lexicographic order.
pub fn partitions_of(n: usize) -> Vec<Partition> {
    fn go(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        for p in (1..=rem.min(max)).rev() {
            cur.push(p);
            go(rem - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        go(n, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Simple undirected graph on vertices 0..n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u8>>", into = "Vec<Vec<u8>>")]
pub struct Graph {
    adj: Vec<Vec<bool>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { adj: vec![vec![false; n]; n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b})")));
            }
            g.adj[a][b] = true;
            g.adj[b][a] = true;
        }
        Ok(g)
    }

    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("cycle needs n ≥ 3")
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|r| r.iter().filter(|&&x| x).count()).sum::<usize>() / 2
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a][b]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(|r| r.iter().filter(|&&x| x).count()).collect()
    }

    /// Lexicographically largest adjacency bit string over all relabelings.
    pub fn canonical_form(&self) -> Result<Vec<bool>> {
        let n = self.vertex_count();
        if n > 8 {
            return Err(Error::UnsupportedScale(format!("canonical form limited to 8 vertices, got {n}")));
        }
        let mut best: Option<Vec<bool>> = None;
        for p in permutations(n) {
            let mut code = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    code.push(self.adj[p[i]][p[j]]);
                }
            }
            if best.as_ref().is_none_or(|b| code > *b) {
                best = Some(code);
            }
        }
        Ok(best.unwrap_or_default())
    }

    pub fn is_isomorphic(&self, other: &Graph) -> Result<bool> {
        if self.vertex_count() != other.vertex_count() || self.edge_count() != other.edge_count() {
            return Ok(false);
        }
        let (mut d1, mut d2) = (self.degrees(), other.degrees());
        d1.sort_unstable();
        d2.sort_unstable();
        if d1 != d2 {
            return Ok(false);
        }
        Ok(self.canonical_form()? == other.canonical_form()?)
    }

    /// Whether the induced subgraph on `vertices` is connected.
    pub fn induced_connected(&self, vertices: &[usize]) -> bool {
        let Some(&first) = vertices.first() else { return true };
        let mut seen = vec![first];
        let mut stack = vec![first];
        while let Some(v) = stack.pop() {
            for &w in vertices {
                if self.adj[v][w] && !seen.contains(&w) {
                    seen.push(w);
                    stack.push(w);
                }
            }
        }
        seen.len() == vertices.len()
    }
}

impl TryFrom<Vec<Vec<u8>>> for Graph {
    type Error = Error;
    fn try_from(rows: Vec<Vec<u8>>) -> Result<Self> {
        let n = rows.len();
        let mut g = Graph::empty(n);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidArgument("adjacency matrix must be square".into()));
            }
            for (j, &x) in r.iter().enumerate() {
                if x > 1 || (i == j && x != 0) || x != rows[j][i] {
                    return Err(Error::InvalidArgument("adjacency must be symmetric 0/1 with zero diagonal".into()));
                }
                g.adj[i][j] = x == 1;
            }
        }
        Ok(g)
    }
}

impl From<Graph> for Vec<Vec<u8>> {
    fn from(g: Graph) -> Self {
        g.adj.iter().map(|r| r.iter().map(|&x| x as u8).collect()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompleteMultipartiteGraph {
    pub part_sizes: Partition,
    pub adjacency: Graph,
}

impl CompleteMultipartiteGraph {
    /// Part index of each vertex; vertices are numbered part by part.
    pub fn part_of(&self) -> Vec<usize> {
        self.part_sizes
            .parts()
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
            .collect()
    }
}

pub fn graph_from_partition(p: &Partition) -> CompleteMultipartiteGraph {
    let mut g = CompleteMultipartiteGraph { part_sizes: p.clone(), adjacency: Graph::empty(p.total()) };
    let part = g.part_of();
    for i in 0..part.len() {
        for j in 0..part.len() {
            g.adjacency.adj[i][j] = part[i] != part[j];
        }
    }
    g
}

pub fn enumerate_graphs(n_max: usize, exclude_stars: bool, exclude_discrete: bool) -> Vec<CompleteMultipartiteGraph> {
    (1..=n_max)
        .flat_map(partitions_of)
        .filter(|p| !(exclude_stars && p.is_star()) && !(exclude_discrete && p.is_discrete()))
        .map(|p| graph_from_partition(&p))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CartanMatrix {
    pub entries: Vec<Vec<i64>>,
}

impl CartanMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn apply(&self, v: &[i64]) -> Vec<i64> {
        self.entries.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// (v, w)_C = vᵀ C w.
    pub fn form(&self, v: &[i64], w: &[i64]) -> i64 {
        v.iter().zip(self.apply(w)).map(|(a, b)| a * b).sum()
    }

    fn check(&self, v: &[i64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "vector has {} entries, Cartan matrix is {}×{}",
                v.len(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Primitive integer basis of the kernel, computed over the rationals.
    pub fn null_vectors(&self) -> Vec<Vec<i64>> {
        let n = self.dim();
        let mut m: Vec<Vec<BigRational>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect())
            .collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..n {
            let Some(p) = (row..n).find(|&r| !m[r][col].is_zero()) else { continue };
            m.swap(row, p);
            let inv = m[row][col].recip();
            for x in m[row].iter_mut() {
                *x = &*x * &inv;
            }
            for r in 0..n {
                if r != row && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for c in 0..n {
                        let d = &f * &m[row][c];
                        m[r][c] -= d;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); n];
                v[f] = BigRational::one();
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = -m[r][f].clone();
                }
                primitive(&v)
            })
            .collect()
    }
}

fn primitive(v: &[BigRational]) -> Vec<i64> {
    use num_integer::Integer;
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let g = if g.is_zero() { BigInt::one() } else { g };
    let mut out: Vec<BigInt> = ints.into_iter().map(|x| x / &g).collect();
    if out.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        out = out.into_iter().map(|x| -x).collect();
    }
    out.iter().map(|x| x.to_i64().expect("null vector entry fits in i64")).collect()
}

pub fn cartan_matrix(g: &Graph) -> CartanMatrix {
    let n = g.vertex_count();
    CartanMatrix {
        entries: (0..n)
            .map(|i| (0..n).map(|j| if i == j { 2 } else if g.adjacent(i, j) { -1 } else { 0 }).collect())
            .collect(),
    }
}

/// Simple reflection r_i(v) = v − (Cv)_i e_i.
pub fn reflect(v: &[i64], i: usize, c: &CartanMatrix) -> Result<Vec<i64>> {
    c.check(v)?;
    if i >= c.dim() {
        return Err(Error::InvalidArgument(format!("reflection index {i} out of range")));
    }
    let mut w = v.to_vec();
    w[i] -= c.entries[i].iter().zip(v).map(|(a, b)| a * b).sum::<i64>();
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootClass {
    RealRoot,
    ImaginaryRoot,
    NotRoot,
}

/// Classify a lattice vector for the Kac–Moody algebra of a graph without loops:
/// reduce by height-decreasing simple reflections until a simple root or the
/// fundamental set is reached.
pub fn root_classify(v: &[i64], c: &CartanMatrix) -> Result<RootClass> {
    c.check(v)?;
    if v.iter().all(|&x| x == 0) {
        return Err(Error::InvalidArgument("zero vector is not classifiable".into()));
    }
    let mut v: Vec<i64> = if v.iter().all(|&x| x <= 0) {
        v.iter().map(|x| -x).collect()
    } else if v.iter().all(|&x| x >= 0) {
        v.to_vec()
    } else {
        return Ok(RootClass::NotRoot);
    };
    let graph = graph_of(c);
    loop {
        let support: Vec<usize> = (0..v.len()).filter(|&i| v[i] != 0).collect();
        if support.len() == 1 && v[support[0]] == 1 {
            return Ok(RootClass::RealRoot);
        }
        if !graph.induced_connected(&support) {
            return Ok(RootClass::NotRoot);
        }
        let cv = c.apply(&v);
        match (0..v.len()).find(|&i| cv[i] > 0) {
            None => return Ok(RootClass::ImaginaryRoot),
            Some(i) => {
                v[i] -= cv[i];
                if v[i] < 0 {
                    return Ok(RootClass::NotRoot);
                }
            }
        }
    }
}

fn graph_of(c: &CartanMatrix) -> Graph {
    let n = c.dim();
    let mut g = Graph::empty(n);
    for i in 0..n {
        for j in 0..n {
            g.adj[i][j] = i != j && c.entries[i][j] != 0;
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Painleve {
    IV,
    V,
    VI,
}

impl fmt::Display for Painleve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Painleve::IV => "IV",
            Painleve::V => "V",
            Painleve::VI => "VI",
        };
        f.write_str(s)
    }
}

/// Triangle (affine A2) → IV, square (affine A3) → V, K_{1,4} (affine D4) → VI.
pub fn painleve_recognize(g: &Graph) -> Option<Painleve> {
    let targets = [
        (Painleve::IV, Graph::cycle(3)),
        (Painleve::V, Graph::cycle(4)),
        (Painleve::VI, graph_from_partition(&Partition { parts: vec![4, 1] }).adjacency),
    ];
    targets
        .into_iter()
        .find(|(_, t)| g.is_isomorphic(t).unwrap_or(false))
        .map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn part(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn small_graphs() {
        let t = graph_from_partition(&part(&[1, 1, 1]));
        assert!(t.adjacency.is_isomorphic(&Graph::cycle(3)).unwrap());
        let s = graph_from_partition(&part(&[2, 2]));
        assert!(s.adjacency.is_isomorphic(&Graph::cycle(4)).unwrap());
        let k = graph_from_partition(&part(&[1, 4]));
        assert_eq!(k.part_sizes.parts(), &[4, 1]);
        let mut deg = k.adjacency.degrees();
        deg.sort_unstable();
        assert_eq!(deg, vec![1, 1, 1, 1, 4]);
        assert_eq!(graph_from_partition(&part(&[3])).adjacency.edge_count(), 0);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_graphs(3, true, true).len(), 1);
        assert_eq!(enumerate_graphs(6, false, false).len(), 29);
        assert_eq!(enumerate_graphs(6, true, true).len(), 18);
        assert_eq!(enumerate_graphs(6, true, false).len(), 24);
    }

    #[test]
    fn cartan_examples() {
        let t = cartan_matrix(&Graph::cycle(3));
        assert_eq!(t.entries, vec![vec![2, -1, -1], vec![-1, 2, -1], vec![-1, -1, 2]]);
        assert_eq!(cartan_matrix(&Graph::empty(1)).entries, vec![vec![2]]);
        let sq = cartan_matrix(&Graph::cycle(4));
        assert_eq!(sq.entries[0], vec![2, -1, 0, -1]);
    }

    #[test]
    fn reflections() {
        let c = cartan_matrix(&Graph::cycle(3));
        for i in 0..3 {
            let mut e = vec![0; 3];
            e[i] = 1;
            let r = reflect(&e, i, &c).unwrap();
            assert_eq!(r, e.iter().map(|x| -x).collect::<Vec<_>>());
            assert_eq!(reflect(&[1, 1, 1], i, &c).unwrap(), vec![1, 1, 1]);
            let v = vec![3, -2, 5];
            assert_eq!(reflect(&reflect(&v, i, &c).unwrap(), i, &c).unwrap(), v);
        }
        assert!(reflect(&[1, 1], 0, &c).is_err());
    }

    #[test]
    fn affine_null_vectors() {
        assert_eq!(cartan_matrix(&Graph::cycle(3)).null_vectors(), vec![vec![1, 1, 1]]);
        assert_eq!(cartan_matrix(&Graph::cycle(4)).null_vectors(), vec![vec![1, 1, 1, 1]]);
        let star = graph_from_partition(&part(&[1, 4]));
        // vertices 0..4 form the four-element part, vertex 4 is the hub
        assert_eq!(cartan_matrix(&star.adjacency).null_vectors(), vec![vec![1, 1, 1, 1, 2]]);
        assert!(cartan_matrix(&Graph::cycle(5)).null_vectors().len() == 1);
        assert!(cartan_matrix(&Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()).null_vectors().is_empty());
    }

    #[test]
    fn painleve_labels() {
        assert_eq!(painleve_recognize(&graph_from_partition(&part(&[1, 1, 1])).adjacency), Some(Painleve::IV));
        assert_eq!(painleve_recognize(&graph_from_partition(&part(&[2, 2])).adjacency), Some(Painleve::V));
        assert_eq!(painleve_recognize(&graph_from_partition(&part(&[1, 4])).adjacency), Some(Painleve::VI));
        assert_eq!(painleve_recognize(&Graph::cycle(5)), None);
        assert_eq!(painleve_recognize(&graph_from_partition(&part(&[1, 3])).adjacency), None);
        assert_eq!(painleve_recognize(&Graph::empty(9)), None);
    }

    /// Positive roots up to height `h` by orbit search: real roots grow from
    /// simple roots, imaginary ones from the fundamental set, always upward.
    fn brute_roots(c: &CartanMatrix, h: i64) -> (HashSet<Vec<i64>>, HashSet<Vec<i64>>) {
        let n = c.dim();
        let g = graph_of(c);
        let grow = |seeds: Vec<Vec<i64>>| {
            let mut seen: HashSet<Vec<i64>> = seeds.iter().cloned().collect();
            let mut queue = seeds;
            while let Some(v) = queue.pop() {
                for i in 0..n {
                    let w = reflect(&v, i, c).unwrap();
                    if w.iter().all(|&x| x >= 0) && w.iter().sum::<i64>() <= h && seen.insert(w.clone()) {
                        queue.push(w);
                    }
                }
            }
            seen
        };
        let simple = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
        let mut fund = Vec::new();
        let mut v = vec![0i64; n];
        loop {
            let mut k = 0;
            while k < n && v[k] == h {
                v[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
            v[k] += 1;
            if v.iter().sum::<i64>() > h {
                continue;
            }
            let sup: Vec<usize> = (0..n).filter(|&i| v[i] > 0).collect();
            if g.induced_connected(&sup) && c.apply(&v).iter().all(|&x| x <= 0) {
                fund.push(v.clone());
            }
        }
        (grow(simple), grow(fund))
    }

    #[test]
    fn classification_matches_orbit_search() {
        for g in [Graph::cycle(3), Graph::cycle(4), graph_from_partition(&part(&[2, 1, 1])).adjacency] {
            let c = cartan_matrix(&g);
            let (real, imag) = brute_roots(&c, if g.vertex_count() == 3 { 20 } else { 24 });
            assert!(real.is_disjoint(&imag));
            let n = c.dim() as u32;
            let h = 6i64;
            for code in 0..(h + 1).pow(n) {
                let v: Vec<i64> = (0..n).map(|k| (code / (h + 1).pow(k)) % (h + 1)).collect();
                if v.iter().all(|&x| x == 0) {
                    continue;
                }
                let expect = if real.contains(&v) {
                    RootClass::RealRoot
                } else if imag.contains(&v) {
                    RootClass::ImaginaryRoot
                } else {
                    RootClass::NotRoot
                };
                assert_eq!(root_classify(&v, &c).unwrap(), expect, "{v:?}");
                let neg: Vec<i64> = v.iter().map(|x| -x).collect();
                assert_eq!(root_classify(&neg, &c).unwrap(), expect);
            }
        }
    }

    #[test]
    fn classification_examples() {
        let c = cartan_matrix(&Graph::cycle(3));
        assert_eq!(root_classify(&[1, 1, 1], &c).unwrap(), RootClass::ImaginaryRoot);
        assert_eq!(root_classify(&[0, 1, 0], &c).unwrap(), RootClass::RealRoot);
        assert_eq!(root_classify(&[2, 1, 0], &c).unwrap(), RootClass::NotRoot);
        assert_eq!(root_classify(&[2, 1, 1], &c).unwrap(), RootClass::RealRoot);
        assert_eq!(root_classify(&[1, -1, 0], &c).unwrap(), RootClass::NotRoot);
        assert!(root_classify(&[0, 0, 0], &c).is_err());
    }

    #[test]
    fn partition_serde() {
        let p: Partition = serde_json::from_str("[1,4]").unwrap();
        assert_eq!(p.parts(), &[4, 1]);
        assert!(serde_json::from_str::<Partition>("[]").is_err());
        let g = graph_from_partition(&part(&[2, 1]));
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"part_sizes":[2,1],"adjacency":[[0,0,1],[0,0,1],[1,1,0]]}"#);
        assert_eq!(serde_json::from_str::<CompleteMultipartiteGraph>(&s).unwrap(), g);
    }
}
