use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which h-function output of a parent edge feeds an input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Conditional of the edge's first (lower-index) variable given the second.
    First,
    /// Conditional of the second variable given the first.
    Second,
}

/// Where an edge's input column comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Variable(usize),
    Edge { edge: usize, side: Side },
}

/// One pair-copula slot: the conditioned pair `(first, second)` with
/// `first < second`, and the conditioning set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VineEdge {
    pub conditioned: (usize, usize),
    pub conditioning: Vec<usize>,
    pub tree_level: usize,
    pub sources: [Source; 2],
}

impl VineEdge {
    fn union(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.conditioning.iter().copied().collect();
        s.insert(self.conditioned.0);
        s.insert(self.conditioned.1);
        s
    }

    fn side_of(&self, var: usize) -> Option<Side> {
        if self.conditioned.0 == var {
            Some(Side::First)
        } else if self.conditioned.1 == var {
            Some(Side::Second)
        } else {
            None
        }
    }

    /// Human-readable label, 1-based: `"1,3|2"`.
    pub fn label(&self) -> String {
        let mut s = format!("{},{}", self.conditioned.0 + 1, self.conditioned.1 + 1);
        if !self.conditioning.is_empty() {
            s.push('|');
            let d: Vec<String> = self.conditioning.iter().map(|v| (v + 1).to_string()).collect();
            s.push_str(&d.join(","));
        }
        s
    }
}

/// Variable sampled at one step of the inverse Rosenblatt transform together
/// with its edges, ordered by tree level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingColumn {
    pub variable: usize,
    pub edges: Vec<usize>,
}

/// Regular vine: `d - 1` trees with `d (d - 1) / 2` edges in total, stored tree
/// by tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StructureRepr", into = "StructureRepr")]
pub struct VineStructure {
    dimension: usize,
    edges: Vec<VineEdge>,
    /// In sampling order: the first column has no edges.
    columns: Vec<SamplingColumn>,
}

#[derive(Serialize, Deserialize)]
struct StructureRepr {
    dimension: usize,
    edges: Vec<(usize, usize, Vec<usize>)>,
}

impl TryFrom<StructureRepr> for VineStructure {
    type Error = Error;
    fn try_from(r: StructureRepr) -> Result<Self> {
        VineStructure::from_edges(r.dimension, r.edges)
    }
}

impl From<VineStructure> for StructureRepr {
    fn from(s: VineStructure) -> Self {
        Self {
            dimension: s.dimension,
            edges: s
                .edges
                .into_iter()
                .map(|e| (e.conditioned.0, e.conditioned.1, e.conditioning))
                .collect(),
        }
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra] = rb;
        true
    }
}

impl VineStructure {
    /// Builds a structure from `(a, b, conditioning)` triples, deriving the
    /// h-function wiring and checking every regular-vine condition.
    pub fn from_edges<I>(dimension: usize, specs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Vec<usize>)>,
    {
        if dimension < 2 {
            return Err(Error::InvalidStructure(format!("dimension {dimension} < 2")));
        }
        let mut edges = Vec::new();
        for (a, b, mut cond) in specs {
            if a == b || a >= dimension || b >= dimension {
                return Err(Error::InvalidStructure(format!("bad conditioned pair ({a}, {b})")));
            }
            cond.sort_unstable();
            cond.dedup();
            if cond.iter().any(|&c| c == a || c == b || c >= dimension) {
                return Err(Error::InvalidStructure(format!(
                    "conditioning set {cond:?} overlaps ({a}, {b}) or is out of range"
                )));
            }
            let tree_level = cond.len() + 1;
            if tree_level >= dimension {
                return Err(Error::InvalidStructure("conditioning set too large".into()));
            }
            edges.push(VineEdge {
                conditioned: (a.min(b), a.max(b)),
                conditioning: cond,
                tree_level,
                sources: [Source::Variable(a.min(b)), Source::Variable(a.max(b))],
            });
        }
        edges.sort_by_key(|e| e.tree_level);

        let expected = dimension * (dimension - 1) / 2;
        if edges.len() != expected {
            return Err(Error::InvalidStructure(format!(
                "{} edges, expected {expected}",
                edges.len()
            )));
        }
        for level in 1..dimension {
            let count = edges.iter().filter(|e| e.tree_level == level).count();
            if count != dimension - level {
                return Err(Error::InvalidStructure(format!(
                    "tree {level} has {count} edges, expected {}",
                    dimension - level
                )));
            }
        }

        // wire inputs of deeper trees to the parent edge holding union {c} ∪ D
        let mut by_union: HashMap<Vec<usize>, usize> = HashMap::new();
        for (i, e) in edges.iter().enumerate() {
            let key: Vec<usize> = e.union().into_iter().collect();
            if by_union.insert(key, i).is_some() {
                return Err(Error::InvalidStructure(format!("duplicate edge {}", e.label())));
            }
        }
        for i in 0..edges.len() {
            if edges[i].tree_level == 1 {
                continue;
            }
            let e = edges[i].clone();
            let mut sources = [Source::Variable(0); 2];
            for (slot, var) in [e.conditioned.0, e.conditioned.1].into_iter().enumerate() {
                let mut key = e.conditioning.clone();
                key.push(var);
                key.sort_unstable();
                let parent = *by_union.get(&key).ok_or_else(|| {
                    Error::InvalidStructure(format!("edge {} has no parent for variable {}", e.label(), var + 1))
                })?;
                let side = edges[parent].side_of(var).ok_or_else(|| {
                    Error::InvalidStructure(format!(
                        "edge {}: variable {} is conditioning in its parent",
                        e.label(),
                        var + 1
                    ))
                })?;
                sources[slot] = Source::Edge { edge: parent, side };
            }
            edges[i].sources = sources;
        }

        let structure = Self { dimension, edges, columns: Vec::new() };
        structure.check_trees()?;
        let columns = structure.peel()?;
        Ok(Self { columns, ..structure })
    }

    /// Each level must be a spanning tree on the previous level's edges, and
    /// joined edges must share a node (proximity).
    fn check_trees(&self) -> Result<()> {
        let node_ids = |e: &VineEdge| -> [(bool, usize); 2] {
            match e.sources {
                [Source::Edge { edge: p, .. }, Source::Edge { edge: q, .. }] => [(true, p), (true, q)],
                _ => [(false, e.conditioned.0), (false, e.conditioned.1)],
            }
        };
        for level in 1..self.dimension {
            let nodes: Vec<usize> = if level == 1 {
                (0..self.dimension).collect()
            } else {
                self.tree_edges(level - 1).collect()
            };
            let index: HashMap<usize, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
            let mut uf = UnionFind::new(nodes.len());
            for i in self.tree_edges(level) {
                let e = &self.edges[i];
                let [a, b] = node_ids(e);
                if level > 1 {
                    let pa = node_ids(&self.edges[a.1]);
                    let pb = node_ids(&self.edges[b.1]);
                    if !pa.iter().any(|x| pb.contains(x)) {
                        return Err(Error::InvalidStructure(format!(
                            "edge {} violates the proximity condition",
                            e.label()
                        )));
                    }
                }
                if !uf.union(index[&a.1], index[&b.1]) {
                    return Err(Error::InvalidStructure(format!("tree {level} contains a cycle")));
                }
            }
        }
        Ok(())
    }

    /// Sampling order by repeatedly removing a variable of the top remaining
    /// tree whose edges form one path down the trees.
    fn peel(&self) -> Result<Vec<SamplingColumn>> {
        let mut remaining_vars: BTreeSet<usize> = (0..self.dimension).collect();
        let mut remaining_edges: BTreeSet<usize> = (0..self.edges.len()).collect();
        let mut peeled = Vec::with_capacity(self.dimension);
        while remaining_vars.len() > 1 {
            let top_level = remaining_vars.len() - 1;
            let top: Vec<usize> = remaining_edges
                .iter()
                .copied()
                .filter(|&i| self.edges[i].tree_level == top_level)
                .collect();
            if top.len() != 1 {
                return Err(Error::InvalidStructure("remaining vine has no unique top edge".into()));
            }
            let (a, b) = self.edges[top[0]].conditioned;
            let column = [a, b]
                .into_iter()
                .find_map(|var| self.column_for(var, top_level, &remaining_edges))
                .ok_or_else(|| Error::InvalidStructure("vine cannot be peeled".into()))?;
            for e in &column.edges {
                remaining_edges.remove(e);
            }
            remaining_vars.remove(&column.variable);
            peeled.push(column);
        }
        let last = *remaining_vars.iter().next().unwrap();
        peeled.push(SamplingColumn { variable: last, edges: Vec::new() });
        peeled.reverse();
        Ok(peeled)
    }

    fn column_for(&self, var: usize, top_level: usize, remaining: &BTreeSet<usize>) -> Option<SamplingColumn> {
        let mut edges = Vec::with_capacity(top_level);
        for &i in remaining {
            let e = &self.edges[i];
            if e.conditioning.contains(&var) {
                return None;
            }
            if e.side_of(var).is_some() {
                edges.push(i);
            }
        }
        edges.sort_by_key(|&i| self.edges[i].tree_level);
        let levels_ok = edges.len() == top_level
            && edges.iter().enumerate().all(|(t, &i)| self.edges[i].tree_level == t + 1);
        levels_ok.then_some(SamplingColumn { variable: var, edges })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn edges(&self) -> &[VineEdge] {
        &self.edges
    }

    pub fn n_trees(&self) -> usize {
        self.dimension - 1
    }

    /// Global indices of the edges in tree `level` (1-based).
    pub fn tree_edges(&self, level: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, e)| e.tree_level == level)
            .map(|(i, _)| i)
    }

    /// Inverse-Rosenblatt order.
    pub fn sampling_columns(&self) -> &[SamplingColumn] {
        &self.columns
    }

    /// Regular-vine array, one row per line, 1-based variable labels.
    ///
    /// Column `c` (0-based) describes the variable on the anti-diagonal,
    /// `M[d-1-c][c]`; the entries above it, `M[t-1][c]` for `t = 1..d-1-c`, are
    /// its partner in tree `t`, conditioned on the partners of the lower trees.
    /// Entries below the anti-diagonal are 0.
    pub fn to_rvine_array(&self) -> String {
        let d = self.dimension;
        let mut m = vec![vec![0usize; d]; d];
        // array column 0 holds the variable sampled last
        for (c, col) in self.columns.iter().rev().enumerate() {
            m[d - 1 - c][c] = col.variable + 1;
            for (t, &e) in col.edges.iter().enumerate() {
                let (a, b) = self.edges[e].conditioned;
                let partner = if a == col.variable { b } else { a };
                m[t][c] = partner + 1;
            }
        }
        let width = d.to_string().len();
        let mut out = String::new();
        for row in &m {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>width$}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
        out
    }

    /// Parses the format written by [`to_rvine_array`](Self::to_rvine_array).
    pub fn from_rvine_array(text: &str) -> Result<Self> {
        let rows: Vec<Vec<usize>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(r, line)| {
                line.split_whitespace()
                    .enumerate()
                    .map(|(c, tok)| {
                        tok.parse::<usize>().map_err(|e| Error::Parse {
                            row: r + 1,
                            column: c + 1,
                            message: e.to_string(),
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let d = rows.len();
        if d < 2 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidStructure("vine array must be square with d >= 2".into()));
        }
        let mut specs = Vec::new();
        for c in 0..d - 1 {
            let var = rows[d - 1 - c][c];
            if var == 0 || var > d {
                return Err(Error::InvalidStructure(format!("bad diagonal entry {var}")));
            }
            for t in 0..d - 1 - c {
                let partner = rows[t][c];
                if partner == 0 || partner > d {
                    return Err(Error::InvalidStructure(format!("bad entry {partner}")));
                }
                let cond = rows[..t].iter().map(|r| r[c] - 1).collect();
                specs.push((var - 1, partner - 1, cond));
            }
        }
        Self::from_edges(d, specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d_vine(d: usize) -> VineStructure {
        let mut specs = Vec::new();
        for t in 1..d {
            for i in 0..d - t {
                specs.push((i, i + t, (i + 1..i + t).collect()));
            }
        }
        VineStructure::from_edges(d, specs).unwrap()
    }

    fn c_vine(d: usize) -> VineStructure {
        let mut specs = Vec::new();
        for t in 1..d {
            for j in t..d {
                specs.push((t - 1, j, (0..t - 1).collect()));
            }
        }
        VineStructure::from_edges(d, specs).unwrap()
    }

    #[test]
    fn d_and_c_vines_build() {
        for d in 2..7 {
            for s in [d_vine(d), c_vine(d)] {
                assert_eq!(s.edges().len(), d * (d - 1) / 2);
                assert_eq!(s.sampling_columns().len(), d);
                for (i, col) in s.sampling_columns().iter().enumerate() {
                    assert_eq!(col.edges.len(), i);
                }
            }
        }
    }

    #[test]
    fn three_dim_wiring() {
        let s = VineStructure::from_edges(3, vec![(0, 1, vec![]), (1, 2, vec![]), (0, 2, vec![1])]).unwrap();
        let top = &s.edges()[2];
        assert_eq!(top.conditioned, (0, 2));
        assert_eq!(top.sources[0], Source::Edge { edge: 0, side: Side::First });
        assert_eq!(top.sources[1], Source::Edge { edge: 1, side: Side::Second });
        assert_eq!(top.label(), "1,3|2");
    }

    #[test]
    fn rejects_invalid_vines() {
        // wrong count
        assert!(VineStructure::from_edges(3, vec![(0, 1, vec![]), (1, 2, vec![])]).is_err());
        // tree 1 cycle
        assert!(VineStructure::from_edges(
            3,
            vec![(0, 1, vec![]), (1, 2, vec![]), (0, 2, vec![])]
        )
        .is_err());
        // proximity: tree 1 = 1-2, 3-4, 2-3 path; tree 2 joining (1,2) and (3,4) is not allowed
        let bad = vec![
            (0, 1, vec![]),
            (2, 3, vec![]),
            (1, 2, vec![]),
            (0, 2, vec![1]),
            (1, 3, vec![2]),
            (0, 3, vec![1, 2]),
        ];
        assert!(VineStructure::from_edges(4, bad).is_ok());
        let bad = vec![
            (0, 1, vec![]),
            (2, 3, vec![]),
            (1, 2, vec![]),
            (0, 2, vec![1]),
            (0, 3, vec![1]),
            (2, 3, vec![0, 1]),
        ];
        assert!(VineStructure::from_edges(4, bad).is_err());
    }

    #[test]
    fn rvine_array_round_trip() {
        for d in 2..7 {
            for s in [d_vine(d), c_vine(d)] {
                let text = s.to_rvine_array();
                let back = VineStructure::from_rvine_array(&text).unwrap();
                let key = |v: &VineStructure| {
                    let mut e: Vec<_> = v.edges().iter().map(|e| (e.conditioned, e.conditioning.clone())).collect();
                    e.sort();
                    e
                };
                assert_eq!(key(&back), key(&s), "{text}");
            }
        }
        assert!(VineStructure::from_rvine_array("1 x\n2 0\n").is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = c_vine(4);
        let json = serde_json::to_string(&s).unwrap();
        let back: VineStructure = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
