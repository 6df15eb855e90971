//! Simple undirected graphs and their line-oriented text format.
//!
//! Vertices are identified by 1-based ids in every external surface (files,
//! edge lists, clique witnesses). Internally a vertex `v` lives at index
//! `v - 1` of the neighbour bitmask table.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest vertex count a [`Graph`] can hold (one `u64` mask per vertex).
pub const MAX_VERTICES: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    masks: Vec<u64>,
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Result<Self> {
        if n > MAX_VERTICES {
            return Err(Error::OutOfRange {
                what: "vertex count",
                value: n.to_string(),
                range: format!("0..={MAX_VERTICES}"),
            });
        }
        Ok(Graph {
            n,
            masks: vec![0; n],
        })
    }

    /// Builds a graph from 1-based edges. Self-loops and repeated edges are errors.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n)?;
        for (i, &(u, v)) in edges.iter().enumerate() {
            g.insert_edge(u, v).map_err(|m| Error::parse(i + 1, m))?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n).expect("complete graph too large");
        for u in 0..n {
            g.masks[u] = full_mask(n) & !(1 << u);
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|v| (v, v + 1)).collect();
        Graph::from_edges(n, &edges).expect("path graph too large")
    }

    fn insert_edge(&mut self, u: usize, v: usize) -> std::result::Result<(), String> {
        if u == v {
            return Err(format!("self-loop on vertex {u}"));
        }
        for w in [u, v] {
            if w == 0 || w > self.n {
                return Err(format!("vertex {w} out of range 1..={}", self.n));
            }
        }
        let (a, b) = (u - 1, v - 1);
        if self.masks[a] >> b & 1 == 1 {
            return Err(format!("repeated edge {{{u}, {v}}}"));
        }
        self.masks[a] |= 1 << b;
        self.masks[b] |= 1 << a;
        Ok(())
    }

    /// Copy of this graph with one more edge (1-based ids).
    pub fn with_edge(&self, u: usize, v: usize) -> Result<Self> {
        let mut g = self.clone();
        g.insert_edge(u, v)
            .map_err(|m| Error::InvalidParams(m.to_string()))?;
        Ok(g)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.masks.iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    /// Adjacency test on 0-based indices.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.masks[i] >> j & 1 == 1
    }

    /// Neighbour bitmask of the vertex at 0-based index `i`.
    pub fn neighbor_mask(&self, i: usize) -> u64 {
        self.masks[i]
    }

    /// Edges as sorted 1-based pairs `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.adjacent(i, j) {
                    out.push((i + 1, j + 1));
                }
            }
        }
        out
    }

    /// The 0/1 adjacency matrix `A_G` (zero diagonal).
    pub fn adjacency_matrix(&self) -> Vec<Vec<Rational>> {
        self.modified_adjacency(&Rational::from_integer(0.into()), &Rational::from_integer(1.into()))
    }

    /// Adjacency matrix with every 0 (diagonal included) replaced by `tau`
    /// and every 1 replaced by `rho`.
    pub fn modified_adjacency(&self, tau: &Rational, rho: &Rational) -> Vec<Vec<Rational>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| if self.adjacent(i, j) { rho.clone() } else { tau.clone() })
                    .collect()
            })
            .collect()
    }

    /// True when the given 1-based vertices are pairwise adjacent.
    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        let set: BTreeSet<_> = vertices.iter().copied().collect();
        if set.len() != vertices.len() || set.iter().any(|&v| v == 0 || v > self.n) {
            return false;
        }
        vertices.iter().enumerate().all(|(a, &u)| {
            vertices[a + 1..]
                .iter()
                .all(|&v| self.adjacent(u - 1, v - 1))
        })
    }

    /// Graph obtained by relabelling index `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut g = Graph::empty(self.n).expect("same order");
        for i in 0..self.n {
            for j in 0..self.n {
                if self.adjacent(i, j) {
                    g.masks[perm[i]] |= 1 << perm[j];
                }
            }
        }
        g
    }

    /// Upper-triangle edge bits in a fixed order; identifies labelled graphs.
    fn code(&self) -> u64 {
        let mut code = 0u64;
        let mut bit = 0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.adjacent(i, j) {
                    code |= 1 << bit;
                }
                bit += 1;
            }
        }
        code
    }

    fn from_code(n: usize, code: u64) -> Self {
        let mut g = Graph::empty(n).expect("small order");
        let mut bit = 0;
        for i in 0..n {
            for j in i + 1..n {
                if code >> bit & 1 == 1 {
                    g.masks[i] |= 1 << j;
                    g.masks[j] |= 1 << i;
                }
                bit += 1;
            }
        }
        g
    }
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Parses the `p <n> <m>` / `e <u> <v>` edge-list format; `c` lines are comments.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut graph: Option<Graph> = None;
    let mut declared_edges = 0usize;
    let mut seen_edges = 0usize;
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let number = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("expected a non-negative integer, got {s:?}")))
        };
        match fields.as_slice() {
            ["p", n, m] => {
                if graph.is_some() {
                    return Err(Error::parse(line_no, "duplicate problem line"));
                }
                let n = number(n)?;
                if n > MAX_VERTICES {
                    return Err(Error::parse(
                        line_no,
                        format!("{n} vertices exceeds the supported maximum {MAX_VERTICES}"),
                    ));
                }
                declared_edges = number(m)?;
                graph = Some(Graph::empty(n)?);
            }
            ["e", u, v] => {
                let g = graph
                    .as_mut()
                    .ok_or_else(|| Error::parse(line_no, "edge line before the problem line"))?;
                let (u, v) = (number(u)?, number(v)?);
                g.insert_edge(u, v).map_err(|m| Error::parse(line_no, m))?;
                seen_edges += 1;
            }
            _ => return Err(Error::parse(line_no, format!("malformed line {line:?}"))),
        }
    }
    let graph = graph.ok_or_else(|| Error::parse(last_line.max(1), "missing problem line `p <n> <m>`"))?;
    if seen_edges != declared_edges {
        return Err(Error::parse(
            last_line.max(1),
            format!("problem line declares {declared_edges} edges but {seen_edges} were given"),
        ));
    }
    Ok(graph)
}

/// Renders a graph in the format read by [`parse_graph`].
pub fn render_graph(g: &Graph) -> String {
    let edges = g.edges();
    let mut out = format!("p {} {}\n", g.order(), edges.len());
    for (u, v) in edges {
        let _ = writeln!(out, "e {u} {v}");
    }
    out
}

/// Erdős–Rényi graph with edge probability 1/2.
pub fn random_graph<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Graph {
    let mut g = Graph::empty(n).expect("random graph too large");
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<bool>() {
                g.masks[i] |= 1 << j;
                g.masks[j] |= 1 << i;
            }
        }
    }
    g
}

/// Every labelled graph on `n` vertices (2^(n choose 2) of them; n <= 8).
pub fn all_labelled_graphs(n: usize) -> impl Iterator<Item = Graph> {
    assert!(n <= 8, "labelled enumeration is limited to n <= 8");
    let bits = n * n.saturating_sub(1) / 2;
    (0..1u64 << bits).map(move |code| Graph::from_code(n, code))
}

/// One representative per isomorphism class on `n` vertices (n <= 6),
/// ordered by edge count and then by canonical code.
pub fn non_isomorphic_graphs(n: usize) -> Vec<Graph> {
    assert!(n <= 6, "isomorphism-class enumeration is limited to n <= 6");
    let perms = permutations(n);
    let mut classes = BTreeSet::new();
    for g in all_labelled_graphs(n) {
        let canon = perms.iter().map(|p| g.permuted(p).code()).min().unwrap_or(0);
        classes.insert((canon.count_ones(), canon));
    }
    classes
        .into_iter()
        .map(|(_, code)| Graph::from_code(n, code))
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                extend(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_path_single_vertex_and_triangle() {
        let p3 = parse_graph("p 3 2\ne 1 2\ne 2 3\n").unwrap();
        assert_eq!(p3, Graph::path(3));
        assert_eq!(p3.edges(), vec![(1, 2), (2, 3)]);

        let single = parse_graph("p 1 0\n").unwrap();
        assert_eq!(single.order(), 1);
        assert_eq!(single.edge_count(), 0);

        let k3 = parse_graph("c triangle\np 3 3\ne 1 2\ne 2 3\ne 1 3\n").unwrap();
        assert_eq!(k3, Graph::complete(3));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = |text: &str| match parse_graph(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(err("p 3 1\ne 1 1\n"), 2);
        assert_eq!(err("p 3 1\nc ok\ne 1 4\n"), 3);
        assert_eq!(err("p 3 1\nx 1 2\n"), 2);
        assert_eq!(err("e 1 2\n"), 1);
        assert_eq!(err("p 3 2\ne 1 2\ne 2 1\n"), 3);
        assert!(parse_graph("p 3 2\ne 1 2\n").is_err());
        assert!(parse_graph("").is_err());
    }

    #[test]
    fn adjacency_is_symmetric_with_zero_diagonal() {
        let a = Graph::path(3).adjacency_matrix();
        for i in 0..3 {
            assert_eq!(a[i][i], Rational::from_integer(0.into()));
            for j in 0..3 {
                assert_eq!(a[i][j], a[j][i]);
            }
        }
    }

    #[test]
    fn isomorphism_class_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| non_isomorphic_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 11, 34]);
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(n in 1usize..=8, code in any::<u64>()) {
            let bits = n * (n - 1) / 2;
            let mask = if bits == 0 { 0 } else { code & ((1u64 << bits) - 1) };
            let g = Graph::from_code(n, mask);
            prop_assert_eq!(parse_graph(&render_graph(&g)).unwrap(), g);
        }
    }
}
