//! Unit-disk graphs, bitstrings and a brute-force independent-set oracle.
//!
//! Text format (one item per line, `#` starts a comment):
//!
//! ```text
//! n=3
//! v 0 0.1 0.2
//! v 1 0.5 0.2
//! v 2 2.0 2.0
//! e 0 1
//! ```
//!
//! Coordinate lines are optional but must cover every vertex when present,
//! in which case the edge lines must agree with the unit-disk rule.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

/// Largest graph accepted by the exhaustive searches.
pub const MAX_BRUTE_FORCE_VERTICES: usize = 24;

/// Pairs whose distance is within this of 1 are considered ill-conditioned.
pub const UNIT_DISTANCE_GUARD: f64 = 1e-12;

/// One bit per vertex / qubit; `bits[q]` is qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    bits: Vec<bool>,
}

impl Bitstring {
    pub fn new(bits: Vec<bool>) -> Self {
        Bitstring { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Bitstring { bits: vec![false; n] }
    }

    /// Decodes a basis index (qubit 0 is the most significant bit).
    pub fn from_index(index: usize, n: usize) -> Self {
        Bitstring {
            bits: (0..n).map(|q| (index >> (n - 1 - q)) & 1 == 1).collect(),
        }
    }

    pub fn from_vertices(n: usize, vertices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; n];
        for &v in vertices {
            *bits
                .get_mut(v)
                .ok_or_else(|| Error::invalid(format!("vertex {v} out of range for {n} vertices")))? = true;
        }
        Ok(Bitstring { bits })
    }

    pub fn to_index(&self) -> usize {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, q: usize) -> bool {
        self.bits.get(q).copied().unwrap_or(false)
    }

    pub fn hamming_weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn ones(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::invalid(format!("bitstring character '{c}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Bitstring::new)
    }
}

/// Result of the exhaustive maximum-independent-set search.
#[derive(Debug, Clone, PartialEq)]
pub struct MisResult {
    pub size: usize,
    /// Every maximum independent set, ascending bitstring order.
    pub witnesses: Vec<Bitstring>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitDiskGraph {
    n_vertices: usize,
    coords: Option<Vec<(f64, f64)>>,
    edges: BTreeSet<(usize, usize)>,
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn near_threshold(coords: &[(f64, f64)]) -> Option<(usize, usize)> {
    for i in 0..coords.len() {
        for j in i + 1..coords.len() {
            if (distance(coords[i], coords[j]) - 1.0).abs() <= UNIT_DISTANCE_GUARD {
                return Some((i, j));
            }
        }
    }
    None
}

impl UnitDiskGraph {
    /// Graph from an explicit edge list (no coordinates).
    pub fn from_edges(n_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop on vertex {a}")));
            }
            if a >= n_vertices || b >= n_vertices {
                return Err(Error::invalid(format!("edge ({a}, {b}) outside {n_vertices} vertices")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(UnitDiskGraph {
            n_vertices,
            coords: None,
            edges: set,
        })
    }

    /// Graph from planar positions: an edge joins points closer than 1.
    pub fn from_coords(coords: Vec<(f64, f64)>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        if coords.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::invalid("non-finite vertex coordinate"));
        }
        if let Some((i, j)) = near_threshold(&coords) {
            return Err(Error::Numerical(format!(
                "vertices {i} and {j} lie within {UNIT_DISTANCE_GUARD:e} of unit distance"
            )));
        }
        let mut edges = BTreeSet::new();
        for i in 0..coords.len() {
            for j in i + 1..coords.len() {
                if distance(coords[i], coords[j]) < 1.0 {
                    edges.insert((i, j));
                }
            }
        }
        Ok(UnitDiskGraph {
            n_vertices: coords.len(),
            coords: Some(coords),
            edges,
        })
    }

    /// `n` points uniform in `[0, box_side]^2`.
    ///
    /// Draws that put a pair within [`UNIT_DISTANCE_GUARD`] of unit distance
    /// are redrawn from `mix_seed(seed, attempt)`.
    pub fn random_unit_disk(n: usize, box_side: f64, rng_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        if !(box_side.is_finite() && box_side > 0.0) {
            return Err(Error::invalid(format!("box side must be positive, got {box_side}")));
        }
        let mut current = rng_seed;
        for attempt in 0u64.. {
            let mut rng = seed::rng(current);
            let coords: Vec<(f64, f64)> = (0..n)
                .map(|_| (rng.random::<f64>() * box_side, rng.random::<f64>() * box_side))
                .collect();
            if near_threshold(&coords).is_none() {
                return Self::from_coords(coords);
            }
            current = seed::mix_seed(rng_seed, attempt);
        }
        unreachable!("unbounded retry loop")
    }

    /// The 6-vertex benchmark instance with 12 edges (coordinates unpublished).
    pub fn paper_graph_6q() -> Self {
        const EDGES: [(usize, usize); 12] = [
            (0, 1),
            (0, 3),
            (0, 5),
            (1, 2),
            (1, 3),
            (1, 4),
            (1, 5),
            (2, 3),
            (2, 4),
            (3, 4),
            (3, 5),
            (4, 5),
        ];
        Self::from_edges(6, &EDGES).expect("static edge list is valid")
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        self.coords.as_deref()
    }

    /// Edges as `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Drops vertex `v`, relabelling the vertices above it down by one.
    pub fn remove_vertex(&self, v: usize) -> Result<Self> {
        if v >= self.n_vertices || self.n_vertices == 1 {
            return Err(Error::invalid(format!("cannot remove vertex {v}")));
        }
        let relabel = |x: usize| if x > v { x - 1 } else { x };
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| a != v && b != v)
            .map(|&(a, b)| (relabel(a), relabel(b)))
            .collect();
        let coords = self.coords.as_ref().map(|c| {
            c.iter()
                .enumerate()
                .filter_map(|(i, &p)| (i != v).then_some(p))
                .collect()
        });
        Ok(UnitDiskGraph {
            n_vertices: self.n_vertices - 1,
            coords,
            edges,
        })
    }

    fn check_len(&self, s: &Bitstring) -> Result<()> {
        if s.len() != self.n_vertices {
            return Err(Error::SizeMismatch {
                expected: self.n_vertices,
                found: s.len(),
            });
        }
        Ok(())
    }

    pub fn is_independent(&self, s: &Bitstring) -> Result<bool> {
        self.check_len(s)?;
        Ok(self.edges.iter().all(|&(a, b)| !(s.get(a) && s.get(b))))
    }

    /// Edges with both endpoints selected.
    pub fn internal_edges(&self, s: &Bitstring) -> Result<usize> {
        self.check_len(s)?;
        Ok(self.edges.iter().filter(|&&(a, b)| s.get(a) && s.get(b)).count())
    }

    /// Exhaustive maximum independent set over all `2^n` subsets.
    pub fn brute_force_mis(&self) -> Result<MisResult> {
        let n = self.n_vertices;
        if n > MAX_BRUTE_FORCE_VERTICES {
            return Err(Error::Resource {
                what: "brute-force vertex count",
                requested: n,
                limit: MAX_BRUTE_FORCE_VERTICES,
            });
        }
        // Vertex v is bit n-1-v of the subset index.
        let bit = |v: usize| 1usize << (n - 1 - v);
        let edge_masks: Vec<usize> = self.edges.iter().map(|&(a, b)| bit(a) | bit(b)).collect();
        let mut best = 0usize;
        let mut witnesses = Vec::new();
        for subset in 0..1usize << n {
            let size = subset.count_ones() as usize;
            if size < best {
                continue;
            }
            if edge_masks.iter().any(|&m| m & !subset == 0) {
                continue;
            }
            if size > best {
                best = size;
                witnesses.clear();
            }
            witnesses.push(subset);
        }
        Ok(MisResult {
            size: best,
            witnesses: witnesses.into_iter().map(|i| Bitstring::from_index(i, n)).collect(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.n_vertices);
        if let Some(coords) = &self.coords {
            for (i, (x, y)) in coords.iter().enumerate() {
                out.push_str(&format!("v {i} {x:?} {y:?}\n"));
            }
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("e {a} {b}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: line_no, msg };
            if let Some(rest) = line.strip_prefix("n=") {
                if n.is_some() {
                    return Err(perr("duplicate vertex count".into()));
                }
                let count: usize = rest.trim().parse().map_err(|_| perr(format!("bad vertex count '{rest}'")))?;
                if count == 0 {
                    return Err(perr("vertex count must be at least 1".into()));
                }
                n = Some(count);
                coords = vec![None; count];
                continue;
            }
            let count = n.ok_or_else(|| perr("first entry must be 'n=<N>'".into()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let index = |s: &str| -> Result<usize> {
                let i: usize = s.parse().map_err(|_| perr(format!("bad vertex index '{s}'")))?;
                if i >= count {
                    return Err(perr(format!("vertex {i} out of range")));
                }
                Ok(i)
            };
            match fields.as_slice() {
                ["v", i, x, y] => {
                    let i = index(i)?;
                    let x: f64 = x.parse().map_err(|_| perr(format!("bad coordinate '{x}'")))?;
                    let y: f64 = y.parse().map_err(|_| perr(format!("bad coordinate '{y}'")))?;
                    coords[i] = Some((x, y));
                }
                ["e", a, b] => {
                    let (a, b) = (index(a)?, index(b)?);
                    if a == b {
                        return Err(perr(format!("self-loop on vertex {a}")));
                    }
                    edges.push((a, b));
                }
                _ => return Err(perr(format!("unrecognized line '{line}'"))),
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 0,
            msg: "missing 'n=<N>' header".into(),
        })?;
        let explicit = Self::from_edges(n, &edges)?;
        if coords.iter().all(Option::is_none) {
            return Ok(explicit);
        }
        let full: Option<Vec<(f64, f64)>> = coords.into_iter().collect();
        let full = full.ok_or_else(|| Error::invalid("coordinates must be given for every vertex or none"))?;
        let geometric = Self::from_coords(full)?;
        if geometric.edges != explicit.edges {
            return Err(Error::invalid("edge lines disagree with the unit-disk rule on the coordinates"));
        }
        Ok(geometric)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitstring_index_round_trip() {
        let b = Bitstring::from_index(0b100101, 6);
        assert_eq!(b.to_string(), "100101");
        assert_eq!(b.to_index(), 0b100101);
        assert_eq!(b.ones(), vec![0, 3, 5]);
        assert_eq!("100101".parse::<Bitstring>().unwrap(), b);
    }

    #[test]
    fn random_graph_basics() {
        let g = UnitDiskGraph::random_unit_disk(1, 3.0, 0).unwrap();
        assert_eq!((g.n_vertices(), g.n_edges()), (1, 0));
        for s in 0..20 {
            let g = UnitDiskGraph::random_unit_disk(2, 0.5, s).unwrap();
            assert_eq!(g.n_edges(), 1);
        }
        let a = UnitDiskGraph::random_unit_disk(6, 2.2, 7).unwrap();
        let b = UnitDiskGraph::random_unit_disk(6, 2.2, 7).unwrap();
        assert_eq!(a, b);
        assert!(UnitDiskGraph::random_unit_disk(0, 1.0, 0).is_err());
        assert!(UnitDiskGraph::random_unit_disk(3, 0.0, 0).is_err());
    }

    #[test]
    fn paper_graph_facts() {
        let g = UnitDiskGraph::paper_graph_6q();
        assert_eq!(g.n_edges(), 12);
        let s = Bitstring::from_vertices(6, &[2, 5]).unwrap();
        assert!(g.is_independent(&s).unwrap());
        let mis = g.brute_force_mis().unwrap();
        assert_eq!(mis.size, 2);
        assert_eq!(mis.witnesses.len(), 3);
        let sets: Vec<Vec<usize>> = mis.witnesses.iter().map(|w| w.ones()).collect();
        assert_eq!(sets, vec![vec![2, 5], vec![0, 4], vec![0, 2]]);
    }

    #[test]
    fn independence_checks() {
        let g = UnitDiskGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert!(g.is_independent(&Bitstring::zeros(3)).unwrap());
        assert!(g.is_independent(&Bitstring::from_vertices(3, &[1]).unwrap()).unwrap());
        assert!(!g.is_independent(&Bitstring::from_vertices(3, &[0, 2]).unwrap()).unwrap());
        assert!(g.is_independent(&Bitstring::zeros(2)).is_err());
        let mis = g.brute_force_mis().unwrap();
        assert_eq!((mis.size, mis.witnesses.len()), (1, 3));

        let empty = UnitDiskGraph::from_edges(4, &[]).unwrap();
        let mis = empty.brute_force_mis().unwrap();
        assert_eq!((mis.size, mis.witnesses.len()), (4, 1));
    }

    #[test]
    fn edge_validation() {
        assert!(UnitDiskGraph::from_edges(2, &[(0, 0)]).is_err());
        assert!(UnitDiskGraph::from_edges(2, &[(0, 2)]).is_err());
        assert!(UnitDiskGraph::from_coords(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
        let g = UnitDiskGraph::from_coords(vec![(0.0, 0.0), (0.999, 0.0), (3.0, 0.0)]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn text_round_trip() {
        let g = UnitDiskGraph::random_unit_disk(7, 1.8, 1).unwrap();
        assert_eq!(UnitDiskGraph::parse(&g.to_text()).unwrap(), g);
        let p = UnitDiskGraph::paper_graph_6q();
        assert_eq!(UnitDiskGraph::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(UnitDiskGraph::parse("e 0 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(UnitDiskGraph::parse("n=2\nq\n"), Err(Error::Parse { line: 2, .. })));
        assert!(UnitDiskGraph::parse("n=2\ne 0 5\n").is_err());
        assert!(UnitDiskGraph::parse("n=2\nv 0 0 0\n").is_err());
        // edge list contradicting coordinates
        assert!(UnitDiskGraph::parse("n=2\nv 0 0 0\nv 1 5 0\ne 0 1\n").is_err());
        let g = UnitDiskGraph::parse("# comment\nn=3\ne 0 1 # trailing\n\n").unwrap();
        assert_eq!(g.n_edges(), 1);
    }

    #[test]
    fn removing_vertex_keeps_unit_disk_rule() {
        let g = UnitDiskGraph::random_unit_disk(8, 1.7, 11).unwrap();
        for v in 0..8 {
            let sub = g.remove_vertex(v).unwrap();
            let rebuilt = UnitDiskGraph::from_coords(sub.coords().unwrap().to_vec()).unwrap();
            assert_eq!(rebuilt, sub);
        }
    }
}
