//! Undirected Markov graphs, graph powers and maximal cliques.
//!
//! Vertices are exposed 1-based (`1..=d`). Grid graphs number their
//! vertices row-major, so `(i, j)` with `1 <= i <= rows`, `1 <= j <= cols`
//! becomes `(i - 1) * cols + j`.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default ceiling on the number of maximal cliques an enumeration may emit.
pub const DEFAULT_CLIQUE_CEILING: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    Flat,
    Grid { rows: usize, cols: usize },
}

/// Structured graph families with closed-form power predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Path,
    Grid,
    GridDiag,
}

/// Dense bitset adjacency, one row of `u64` words per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrfGraph {
    d: usize,
    layout: Layout,
    words: usize,
    adj: Vec<u64>,
}

impl MrfGraph {
    /// Graph on `d` vertices and no edges.
    pub fn empty(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("a graph needs at least one vertex"));
        }
        let words = d.div_ceil(64);
        Ok(Self {
            d,
            layout: Layout::Flat,
            words,
            adj: vec![0; d * words],
        })
    }

    /// Builds a graph from 1-based vertex pairs. Self-loops are rejected.
    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(d)?;
        for &(u, v) in edges {
            if u == 0 || v == 0 || u > d || v > d {
                return Err(Error::invalid(alloc::format!(
                    "edge ({u}, {v}) references a vertex outside 1..={d}"
                )));
            }
            if u == v {
                return Err(Error::invalid(alloc::format!("self-loop at vertex {u}")));
            }
            g.set_edge(u - 1, v - 1);
        }
        Ok(g)
    }

    /// Path `L_d`: `i ~ j` iff `|i - j| = 1`.
    pub fn path(d: usize) -> Result<Self> {
        let mut g = Self::empty(d)?;
        for i in 1..d {
            g.set_edge(i - 1, i);
        }
        Ok(g)
    }

    /// `rows x cols` lattice. Without diagonals neighbours are at Manhattan
    /// distance 1, with diagonals at Chebyshev distance 1.
    pub fn grid(rows: usize, cols: usize, diagonals: bool) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        let mut g = Self::empty(rows * cols)?;
        g.layout = Layout::Grid { rows, cols };
        for u in 0..g.d {
            for v in (u + 1)..g.d {
                let (di, dj) = grid_offsets(u, v, cols);
                let adjacent = if diagonals {
                    di.max(dj) == 1
                } else {
                    di + dj == 1
                };
                if adjacent {
                    g.set_edge(u, v);
                }
            }
        }
        Ok(g)
    }

    /// Power graph built straight from the closed-form distance predicate
    /// of a structured family (`|i-j| <= t`, Manhattan `<= t`, Chebyshev
    /// `<= t`). `dims` is `[d]` for paths and `[rows, cols]` for grids.
    pub fn structured_power(family: Family, dims: &[usize], t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::invalid("graph power must be at least 1"));
        }
        let (rows, cols) = family_dims(family, dims)?;
        let mut g = Self::empty(rows * cols)?;
        if family != Family::Path {
            g.layout = Layout::Grid { rows, cols };
        }
        for u in 0..g.d {
            for v in (u + 1)..g.d {
                let (di, dj) = grid_offsets(u, v, cols);
                let dist = match family {
                    Family::Path | Family::Grid => di + dj,
                    Family::GridDiag => di.max(dj),
                };
                if dist <= t {
                    g.set_edge(u, v);
                }
            }
        }
        Ok(g)
    }

    /// Base graph of a structured family.
    pub fn structured(family: Family, dims: &[usize]) -> Result<Self> {
        let (rows, cols) = family_dims(family, dims)?;
        match family {
            Family::Path => Self::path(cols),
            Family::Grid => Self::grid(rows, cols, false),
            Family::GridDiag => Self::grid(rows, cols, true),
        }
    }

    fn set_edge(&mut self, u: usize, v: usize) {
        self.adj[u * self.words + v / 64] |= 1 << (v % 64);
        self.adj[v * self.words + u / 64] |= 1 << (u % 64);
    }

    #[inline]
    fn adjacent0(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.words..(u + 1) * self.words]
    }

    pub fn vertex_count(&self) -> usize {
        self.d
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    /// Whether 1-based vertices `u` and `v` are adjacent.
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && (1..=self.d).contains(&u) && (1..=self.d).contains(&v) && self.adjacent0(u - 1, v - 1)
    }

    /// 1-based neighbours of `v` in increasing order.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.d)
            .filter(|&u| self.adjacent0(v - 1, u))
            .map(|u| u + 1)
            .collect()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.row(v - 1).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Edges as 1-based pairs `(u, v)` with `u < v`, lexicographically sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.d {
            for v in (u + 1)..self.d {
                if self.adjacent0(u, v) {
                    out.push((u + 1, v + 1));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    /// Grid coordinates of a 1-based vertex, or `None` for flat graphs.
    pub fn coords(&self, v: usize) -> Option<(usize, usize)> {
        match self.layout {
            Layout::Grid { cols, .. } => Some(((v - 1) / cols + 1, (v - 1) % cols + 1)),
            Layout::Flat => None,
        }
    }

    /// FNV-1a over the vertex count and sorted edge list.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
        };
        feed(self.d as u64);
        for (u, v) in self.edges() {
            feed(u as u64);
            feed(v as u64);
        }
        h
    }

    /// Single-source BFS distances (0-based source); unreachable is `usize::MAX`.
    fn bfs(&self, source: usize, limit: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.d];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            if dist[u] == limit {
                continue;
            }
            for (w, &word) in self.row(u).iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let v = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
        }
        dist
    }

    /// `G^t`: `u ~ v` iff their shortest-path distance in `G` is in `1..=t`.
    pub fn power(&self, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::invalid("graph power must be at least 1"));
        }
        let mut out = Self {
            d: self.d,
            layout: self.layout,
            words: self.words,
            adj: vec![0; self.adj.len()],
        };
        for u in 0..self.d {
            let dist = self.bfs(u, t);
            for (v, &dv) in dist.iter().enumerate() {
                if v != u && dv <= t {
                    out.set_edge(u, v);
                }
            }
        }
        Ok(out)
    }

    /// Whether every pair in `vertices` (1-based) is adjacent.
    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(i, &u)| vertices[i + 1..].iter().all(|&v| self.has_edge(u, v)))
    }
}

fn grid_offsets(u: usize, v: usize, cols: usize) -> (usize, usize) {
    let (ui, uj) = (u / cols, u % cols);
    let (vi, vj) = (v / cols, v % cols);
    (ui.abs_diff(vi), uj.abs_diff(vj))
}

fn family_dims(family: Family, dims: &[usize]) -> Result<(usize, usize)> {
    match (family, dims) {
        (Family::Path, [d]) | (Family::Path, [1, d]) => {
            if *d == 0 {
                Err(Error::invalid("path length must be positive"))
            } else {
                Ok((1, *d))
            }
        }
        (Family::Grid | Family::GridDiag, [r, c]) => {
            if *r == 0 || *c == 0 {
                Err(Error::invalid("grid dimensions must be positive"))
            } else {
                Ok((*r, *c))
            }
        }
        _ => Err(Error::invalid(alloc::format!(
            "dimensions {dims:?} do not fit the {family:?} family"
        ))),
    }
}

/// Parses a plain edge list: one 1-based `u v` pair per line. Blank lines
/// and lines starting with `#` are skipped. The vertex count is the largest
/// index seen unless `d` is given.
pub fn parse_edge_list(text: &str, d: Option<usize>) -> Result<MrfGraph> {
    let mut edges = Vec::new();
    let mut max_vertex = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<usize> {
            tok.and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| {
                Error::invalid(alloc::format!(
                    "edge list line {}: expected two positive integers",
                    lineno + 1
                ))
            })
        };
        let u = parse(parts.next())?;
        let v = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::invalid(alloc::format!(
                "edge list line {}: trailing tokens",
                lineno + 1
            )));
        }
        max_vertex = max_vertex.max(u).max(v);
        edges.push((u, v));
    }
    MrfGraph::from_edges(d.unwrap_or(max_vertex), &edges)
}

/// Maximal cliques of a graph, each sorted ascending (1-based), listed in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueSet {
    pub cliques: Vec<Vec<usize>>,
    pub fingerprint: u64,
}

impl CliqueSet {
    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn max_size(&self) -> usize {
        self.cliques.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Vec<usize>> {
        self.cliques.iter()
    }

    /// Clique set given explicitly, e.g. a restricted model structure.
    /// Vertex lists are sorted; the fingerprint is zero.
    pub fn from_lists(mut cliques: Vec<Vec<usize>>) -> Self {
        for c in &mut cliques {
            c.sort_unstable();
            c.dedup();
        }
        cliques.sort();
        Self {
            cliques,
            fingerprint: 0,
        }
    }
}

/// Enumerates maximal cliques with the pivoting Bron–Kerbosch recursion.
/// Fails with a resource error once more than `ceiling` cliques are found.
pub fn maximal_cliques(g: &MrfGraph, ceiling: usize) -> Result<CliqueSet> {
    let mut found = Vec::new();
    let mut r = Vec::new();
    let p = full_set(g.d, g.words);
    let x = vec![0u64; g.words];
    bron_kerbosch(g, &mut r, p, x, &mut found, ceiling)?;
    for c in &mut found {
        c.sort_unstable();
    }
    found.sort();
    Ok(CliqueSet {
        cliques: found,
        fingerprint: g.fingerprint(),
    })
}

pub fn max_clique_size(g: &MrfGraph, ceiling: usize) -> Result<usize> {
    Ok(maximal_cliques(g, ceiling)?.max_size())
}

fn full_set(d: usize, words: usize) -> Vec<u64> {
    let mut s = vec![u64::MAX; words];
    let rem = d % 64;
    if rem != 0 {
        s[words - 1] = (1u64 << rem) - 1;
    }
    s
}

fn bits(set: &[u64]) -> impl Iterator<Item = usize> + '_ {
    set.iter().enumerate().flat_map(|(w, &word)| {
        let mut b = word;
        core::iter::from_fn(move || {
            if b == 0 {
                None
            } else {
                let i = b.trailing_zeros() as usize;
                b &= b - 1;
                Some(w * 64 + i)
            }
        })
    })
}

fn bron_kerbosch(
    g: &MrfGraph,
    r: &mut Vec<usize>,
    mut p: Vec<u64>,
    mut x: Vec<u64>,
    out: &mut Vec<Vec<usize>>,
    ceiling: usize,
) -> Result<()> {
    let p_empty = p.iter().all(|&w| w == 0);
    if p_empty {
        if x.iter().all(|&w| w == 0) {
            if out.len() == ceiling {
                return Err(Error::Budget {
                    what: "maximal clique count",
                    needed: ceiling as u128 + 1,
                    limit: ceiling as u128,
                    hint: "; shrink the graph or raise the clique ceiling",
                });
            }
            out.push(r.iter().map(|v| v + 1).collect());
        }
        return Ok(());
    }
    // Tomita pivot: the vertex of P ∪ X with most neighbours inside P.
    let pivot = bits(&p)
        .chain(bits(&x))
        .max_by_key(|&u| {
            g.row(u)
                .iter()
                .zip(&p)
                .map(|(a, b)| (a & b).count_ones())
                .sum::<u32>()
        })
        .expect("P is non-empty");
    let candidates: Vec<usize> = p
        .iter()
        .zip(g.row(pivot))
        .enumerate()
        .flat_map(|(w, (pw, nw))| {
            let mut b = pw & !nw;
            core::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let i = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some(w * 64 + i)
                }
            })
        })
        .collect();
    for v in candidates {
        let nv = g.row(v);
        let next_p: Vec<u64> = p.iter().zip(nv).map(|(a, b)| a & b).collect();
        let next_x: Vec<u64> = x.iter().zip(nv).map(|(a, b)| a & b).collect();
        r.push(v);
        bron_kerbosch(g, r, next_p, next_x, out, ceiling)?;
        r.pop();
        p[v / 64] &= !(1 << (v % 64));
        x[v / 64] |= 1 << (v % 64);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueBound {
    pub kind: BoundKind,
    pub value: usize,
}

/// Largest-clique size of `family^t` from closed-form formulas: exact
/// `min(t+1, d)` for paths, exact `(t+1)^2` for grids with diagonals and the
/// upper bound `floor((t^2+4t+3)/2)` for plain grids. Grid families require
/// `t < min(rows, cols)`.
pub fn clique_size_formula(family: Family, t: usize, dims: &[usize]) -> Result<CliqueBound> {
    if t == 0 {
        return Err(Error::invalid("graph power must be at least 1"));
    }
    let (rows, cols) = family_dims(family, dims)?;
    if family != Family::Path && t >= rows.min(cols) {
        return Err(Error::invalid(alloc::format!(
            "the grid clique formulas need t < min(rows, cols); got t={t}, {rows}x{cols}"
        )));
    }
    Ok(match family {
        Family::Path => CliqueBound {
            kind: BoundKind::Exact,
            value: (t + 1).min(cols),
        },
        Family::GridDiag => CliqueBound {
            kind: BoundKind::Exact,
            value: (t + 1) * (t + 1),
        },
        Family::Grid => CliqueBound {
            kind: BoundKind::UpperBound,
            value: (t * t + 4 * t + 3) / 2,
        },
    })
}

impl core::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Family::Path),
            "grid" => Ok(Family::Grid),
            "grid-diag" | "grid_diag" => Ok(Family::GridDiag),
            other => Err(Error::invalid(alloc::format!("unknown graph family {other:?}"))),
        }
    }
}

/// Parses `R` or `RxC`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X'])
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(alloc::format!("bad dimension spec {s:?}")))
        })
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() || v.len() > 2 {
                Err(Error::invalid(String::from("dimensions must be R or RxC")))
            } else {
                Ok(v)
            }
        })
}
