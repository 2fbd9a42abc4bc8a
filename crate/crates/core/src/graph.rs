//! Directed communication graphs and exact robustness analysis.
//!
//! Vertices are 0-based inside the library. The text file format (and every
//! report written by the CLI) numbers agents from 1.
//!
//! An edge `(i, j)` means agent `i` receives from agent `j`, so the adjacency
//! row of `i` is its in-neighbor set.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::GraphError;

/// Default upper bound on the vertex count accepted by the exhaustive checkers.
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// Hard limit imposed by the bitmask representation used during enumeration.
const MASK_BITS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    n: usize,
    adjacency: Vec<bool>,
}

impl Digraph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidArgument("a digraph needs at least one vertex".into()));
        }
        Ok(Self { n, adjacency: vec![false; n * n] })
    }

    /// Complete digraph: every vertex receives from every other vertex.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let mut g = Self::empty(n)?;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.adjacency[i * n + j] = true;
                }
            }
        }
        Ok(g)
    }

    /// Builds a graph from per-vertex in-neighbor lists (0-based).
    pub fn from_in_neighbors(lists: &[Vec<usize>]) -> Result<Self, GraphError> {
        let mut g = Self::empty(lists.len())?;
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                g.add_edge(i, j)?;
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True iff `i` receives from `j`.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.adjacency[i * self.n + j]
    }

    /// Adds the edge "`i` receives from `j`".
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        self.check_vertex(i)?;
        self.check_vertex(j)?;
        if i == j {
            return Err(GraphError::InvalidArgument(format!("self-loop at vertex {}", i + 1)));
        }
        self.adjacency[i * self.n + j] = true;
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) {
        if i < self.n && j < self.n {
            self.adjacency[i * self.n + j] = false;
        }
    }

    /// Sorted in-neighbors of `i` (the agents `i` receives from).
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.adjacency[i * self.n + j]).collect()
    }

    /// Sorted out-neighbors of `j` (the agents that receive from `j`).
    pub fn out_neighbors(&self, j: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.adjacency[i * self.n + j]).collect()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.adjacency[i * self.n..(i + 1) * self.n].iter().filter(|&&b| b).count()
    }

    pub fn min_in_degree(&self) -> usize {
        (0..self.n).map(|i| self.in_degree(i)).min().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&b| b).count()
    }

    /// All edges as `(receiver, sender)` pairs in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for j in 0..self.n {
                if self.adjacency[i * self.n + j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    fn check_vertex(&self, v: usize) -> Result<(), GraphError> {
        if v >= self.n {
            return Err(GraphError::InvalidArgument(format!(
                "vertex {} out of range 1..={}",
                v + 1,
                self.n
            )));
        }
        Ok(())
    }

    fn in_masks(&self) -> Vec<u32> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| self.adjacency[i * self.n + j])
                    .fold(0u32, |m, j| m | (1 << j))
            })
            .collect()
    }
}

impl fmt::Display for Digraph {
    /// Text format: first line `n`, then `i: j1 j2 ...` (1-based in-neighbors).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.n)?;
        for i in 0..self.n {
            write!(f, "{}:", i + 1)?;
            for j in self.in_neighbors(i) {
                write!(f, " {}", j + 1)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for Digraph {
    type Err = GraphError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let parse_err = |line: usize, message: String| GraphError::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (first_no, first) = lines.next().ok_or_else(|| parse_err(1, "empty graph file".into()))?;
        let n: usize = first
            .parse()
            .map_err(|_| parse_err(first_no, format!("expected vertex count, found `{first}`")))?;
        let mut g = Digraph::empty(n).map_err(|e| parse_err(first_no, e.to_string()))?;
        let mut seen = vec![false; n];

        for (line_no, line) in lines {
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| parse_err(line_no, "expected `i: j1 j2 ...`".into()))?;
            let i: usize = head
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, format!("bad agent id `{}`", head.trim())))?;
            if i == 0 || i > n {
                return Err(parse_err(line_no, format!("agent id {i} out of range 1..={n}")));
            }
            if std::mem::replace(&mut seen[i - 1], true) {
                return Err(parse_err(line_no, format!("agent {i} listed twice")));
            }
            for tok in tail.split_whitespace() {
                let j: usize = tok
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad neighbor id `{tok}`")))?;
                if j == 0 || j > n {
                    return Err(parse_err(line_no, format!("neighbor id {j} out of range 1..={n}")));
                }
                g.add_edge(i - 1, j - 1).map_err(|e| parse_err(line_no, e.to_string()))?;
            }
        }
        Ok(g)
    }
}

/// A subset of the vertex set (0-based ids).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct VertexSet(BTreeSet<usize>);

impl VertexSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.contains(&v)
    }

    pub fn insert(&mut self, v: usize) -> bool {
        self.0.insert(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    fn check_within(&self, n: usize) -> Result<(), GraphError> {
        match self.0.iter().next_back() {
            Some(&v) if v >= n => Err(GraphError::InvalidArgument(format!(
                "vertex {} out of range 1..={n}",
                v + 1
            ))),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[usize; N]> for VertexSet {
    fn from(v: [usize; N]) -> Self {
        v.into_iter().collect()
    }
}

/// True iff some member of `s` has at least `r` in-neighbors outside `s`.
pub fn is_r_reachable(g: &Digraph, s: &VertexSet, r: usize) -> Result<bool, GraphError> {
    if s.is_empty() {
        return Err(GraphError::InvalidArgument("reachability needs a nonempty set".into()));
    }
    s.check_within(g.n())?;
    Ok(s.iter().any(|i| g.in_neighbors(i).iter().filter(|j| !s.contains(**j)).count() >= r))
}

/// True iff every normal agent has at most `f` in-neighbors in `byzantine`.
pub fn is_f_local_attack(g: &Digraph, byzantine: &VertexSet, f: usize) -> Result<bool, GraphError> {
    byzantine.check_within(g.n())?;
    Ok((0..g.n())
        .filter(|i| !byzantine.contains(*i))
        .all(|i| g.in_neighbors(i).iter().filter(|j| byzantine.contains(**j)).count() <= f))
}

/// Largest robustness any digraph on `n` vertices can have.
pub fn robustness_ceiling(n: usize) -> usize {
    n.div_ceil(2)
}

/// Exhaustive robustness checker over all pairs of disjoint nonempty vertex sets.
#[derive(Debug, Clone, Copy)]
pub struct RobustnessOracle {
    max_vertices: usize,
}

impl Default for RobustnessOracle {
    fn default() -> Self {
        Self { max_vertices: DEFAULT_ENUMERATION_CAP }
    }
}

impl RobustnessOracle {
    pub fn with_cap(max_vertices: usize) -> Self {
        Self { max_vertices: max_vertices.min(MASK_BITS - 1) }
    }

    pub fn cap(&self) -> usize {
        self.max_vertices
    }

    fn admit(&self, g: &Digraph) -> Result<(), GraphError> {
        if g.n() < 2 {
            return Err(GraphError::InvalidArgument(
                "robustness is defined for graphs with at least 2 vertices".into(),
            ));
        }
        if g.n() > self.max_vertices {
            return Err(GraphError::SizeLimit { n: g.n(), cap: self.max_vertices });
        }
        Ok(())
    }

    pub fn is_r_robust(&self, g: &Digraph, r: usize) -> Result<bool, GraphError> {
        self.admit(g)?;
        if r == 0 {
            return Ok(true);
        }
        // A vertex with fewer than r in-neighbors cannot be part of an r-robust graph (r > 1).
        if r > 1 && g.min_in_degree() < r {
            return Ok(false);
        }
        let levels = reach_levels(g);
        let full = full_mask(g.n());
        let blocked: Vec<u32> = (1..=full).filter(|&s| (levels[s as usize] as usize) < r).collect();
        let mut is_blocked = vec![false; levels.len()];
        for &s in &blocked {
            is_blocked[s as usize] = true;
        }
        for &s1 in &blocked {
            let rest = full & !s1;
            let mut s2 = rest;
            while s2 != 0 {
                // each unordered pair is visited from its smaller member
                if s2 > s1 && is_blocked[s2 as usize] {
                    return Ok(false);
                }
                s2 = (s2 - 1) & rest;
            }
        }
        Ok(true)
    }

    /// Largest `r` for which `g` is `r`-robust.
    pub fn max_robustness(&self, g: &Digraph) -> Result<usize, GraphError> {
        self.admit(g)?;
        let levels = reach_levels(g);
        let full = full_mask(g.n());
        let mut best = u8::MAX;
        for s1 in 1..=full {
            let l1 = levels[s1 as usize];
            if l1 >= best {
                continue;
            }
            let rest = full & !s1;
            let mut s2 = rest;
            while s2 != 0 {
                let pair = l1.max(levels[s2 as usize]);
                if pair < best {
                    best = pair;
                    if best == 0 {
                        return Ok(0);
                    }
                }
                s2 = (s2 - 1) & rest;
            }
        }
        Ok(best as usize)
    }
}

fn full_mask(n: usize) -> u32 {
    ((1u64 << n) - 1) as u32
}

/// For every vertex subset `S` (bitmask), the largest count `|N_i \ S|` over `i ∈ S`.
fn reach_levels(g: &Digraph) -> Vec<u8> {
    let masks = g.in_masks();
    let full = full_mask(g.n());
    let mut levels = vec![0u8; full as usize + 1];
    for s in 1..=full {
        let outside = !s;
        let mut best = 0u32;
        let mut members = s;
        while members != 0 {
            let i = members.trailing_zeros() as usize;
            best = best.max((masks[i] & outside).count_ones());
            members &= members - 1;
        }
        levels[s as usize] = best as u8;
    }
    levels
}

pub fn is_r_robust(g: &Digraph, r: usize) -> Result<bool, GraphError> {
    RobustnessOracle::default().is_r_robust(g, r)
}

pub fn max_robustness(g: &Digraph) -> Result<usize, GraphError> {
    RobustnessOracle::default().max_robustness(g)
}

/// Random `r`-robust digraph on `n` vertices, deterministic in `seed`.
///
/// Starts from the complete digraph and deletes edges in a seeded random order,
/// keeping each deletion only if the exhaustive checker still certifies the graph.
pub fn generate_r_robust_digraph(n: usize, r: usize, seed: u64) -> Result<Digraph, GraphError> {
    if r == 0 {
        return Err(GraphError::InvalidArgument("robustness target must be positive".into()));
    }
    let ceiling = robustness_ceiling(n);
    if r > ceiling {
        return Err(GraphError::InfeasibleRobustness { n, r, ceiling });
    }
    prune_while_robust(&Digraph::complete(n)?, r, seed)
}

/// Same as [`generate_r_robust_digraph`] but deletes edges from `base` instead of the
/// complete graph. Useful for restricting where adversaries may connect.
pub fn prune_while_robust(base: &Digraph, r: usize, seed: u64) -> Result<Digraph, GraphError> {
    let oracle = RobustnessOracle::default();
    let n = base.n();
    let ceiling = robustness_ceiling(n);
    if r > ceiling {
        return Err(GraphError::InfeasibleRobustness { n, r, ceiling });
    }
    if !oracle.is_r_robust(base, r)? {
        return Err(GraphError::InvalidArgument(format!("base graph is not {r}-robust")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = base.edges();
    edges.shuffle(&mut rng);
    let mut g = base.clone();
    for (i, j) in edges {
        g.remove_edge(i, j);
        if !oracle.is_r_robust(&g, r)? {
            g.add_edge(i, j)?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_way() -> Digraph {
        Digraph::from_in_neighbors(&[vec![1], vec![0]]).unwrap()
    }

    #[test]
    fn reachable_set_from_five_agent_figure() {
        let mut g = Digraph::empty(5).unwrap();
        for j in [1, 2, 4] {
            g.add_edge(0, j).unwrap();
        }
        for j in [0, 3] {
            g.add_edge(4, j).unwrap();
        }
        let s = VertexSet::from([0, 4]);
        assert!(is_r_reachable(&g, &s, 2).unwrap());
        assert!(is_r_reachable(&g, &s, 1).unwrap());
        assert!(!is_r_reachable(&g, &s, 3).unwrap());
    }

    #[test]
    fn reachable_trivial_cases() {
        let g = Digraph::empty(2).unwrap();
        assert!(is_r_reachable(&g, &VertexSet::from([0]), 0).unwrap());
        assert!(!is_r_reachable(&g, &VertexSet::from([0]), 1).unwrap());
        assert!(matches!(
            is_r_reachable(&g, &VertexSet::new(), 1),
            Err(GraphError::InvalidArgument(_))
        ));
        assert!(is_r_reachable(&g, &VertexSet::from([5]), 1).is_err());
    }

    #[test]
    fn two_node_graphs() {
        assert!(is_r_robust(&two_way(), 1).unwrap());
        assert_eq!(max_robustness(&two_way()).unwrap(), 1);
        let empty = Digraph::empty(2).unwrap();
        assert!(!is_r_robust(&empty, 1).unwrap());
        assert_eq!(max_robustness(&empty).unwrap(), 0);
    }

    #[test]
    fn complete_graphs_hit_the_ceiling() {
        assert!(is_r_robust(&Digraph::complete(4).unwrap(), 2).unwrap());
        assert_eq!(max_robustness(&Digraph::complete(5).unwrap()).unwrap(), 3);
    }

    #[test]
    fn size_errors() {
        let one = Digraph::empty(1).unwrap();
        assert!(matches!(is_r_robust(&one, 1), Err(GraphError::InvalidArgument(_))));
        let big = Digraph::complete(13).unwrap();
        assert!(matches!(is_r_robust(&big, 1), Err(GraphError::SizeLimit { n: 13, cap: 12 })));
        assert!(RobustnessOracle::with_cap(13).is_r_robust(&big, 1).is_ok());
    }

    #[test]
    fn f_local_examples() {
        let k4 = Digraph::complete(4).unwrap();
        assert!(is_f_local_attack(&k4, &VertexSet::new(), 0).unwrap());
        let byz = VertexSet::from([0]);
        assert!(is_f_local_attack(&k4, &byz, 1).unwrap());
        assert!(!is_f_local_attack(&k4, &byz, 0).unwrap());
        assert!(is_f_local_attack(&k4, &VertexSet::from([9]), 0).is_err());
    }

    #[test]
    fn generator_contract() {
        let g = generate_r_robust_digraph(8, 3, 42).unwrap();
        assert!(is_r_robust(&g, 3).unwrap());
        assert!(g.edge_count() < 56);
        assert_eq!(g, generate_r_robust_digraph(8, 3, 42).unwrap());

        let g5 = generate_r_robust_digraph(5, 3, 7).unwrap();
        assert!(is_r_robust(&g5, 3).unwrap());

        assert!(matches!(
            generate_r_robust_digraph(4, 3, 0),
            Err(GraphError::InfeasibleRobustness { n: 4, r: 3, ceiling: 2 })
        ));
    }

    #[test]
    fn text_format_round_trip() {
        let g = generate_r_robust_digraph(6, 2, 3).unwrap();
        let text = g.to_string();
        assert!(text.starts_with("6\n1:"));
        assert_eq!(text.parse::<Digraph>().unwrap(), g);
    }

    #[test]
    fn text_format_errors_name_the_line() {
        let err = "3\n1: 2\n2: 4\n".parse::<Digraph>().unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }), "{err}");
        let err = "3\n1: 1\n".parse::<Digraph>().unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));
        let err = "2\n1: 2\n1: 2\n".parse::<Digraph>().unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }));
        assert!("x\n".parse::<Digraph>().is_err());
    }
}
