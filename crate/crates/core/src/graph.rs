//! Directed graphs in CSR form, plus the degree-skew statistics that decide
//! which vertices are "hot".
//!
//! A vertex is hot when its degree is at least the average degree for the
//! direction under consideration. All comparisons against the average are
//! done in integer arithmetic (`deg * n >= m`) so that ties are exact.

use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeList {
    pub vertex_count: usize,
    pub edges: Vec<(VertexId, VertexId)>,
}

impl EdgeList {
    pub fn new(vertex_count: usize, edges: Vec<(VertexId, VertexId)>) -> Result<Self> {
        if let Some(&(s, d)) = edges
            .iter()
            .find(|&&(s, d)| s as usize >= vertex_count || d as usize >= vertex_count)
        {
            return Err(Error::contract(format!(
                "edge ({s}, {d}) out of range for {vertex_count} vertices"
            )));
        }
        Ok(EdgeList {
            vertex_count,
            edges,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Edge-list text formats understood by [`load_edge_list`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeListFormat {
    /// Whitespace separated `src dst [weight]`, `#` starts a comment line.
    #[default]
    PlainText,
}

pub fn load_edge_list(path: impl AsRef<Path>, format: EdgeListFormat) -> Result<EdgeList> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        EdgeListFormat::PlainText => parse_edge_list(&text),
    }
}

pub fn parse_edge_list(text: &str) -> Result<EdgeList> {
    let mut edges = Vec::new();
    let mut max_id: Option<VertexId> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut id = |what: &str| -> Result<VertexId> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing {what} vertex id"),
            })?;
            tok.parse::<VertexId>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid {what} vertex id {tok:?}"),
            })
        };
        let src = id("source")?;
        let dst = id("destination")?;
        // Optional weight is ignored, anything past it is not.
        let _weight = tokens.next();
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unexpected token {extra:?}"),
            });
        }
        max_id = Some(max_id.map_or(src.max(dst), |m| m.max(src).max(dst)));
        edges.push((src, dst));
    }
    Ok(EdgeList {
        vertex_count: max_id.map_or(0, |m| m as usize + 1),
        edges,
    })
}

/// Parameters for R-MAT recursive quadrant sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmatParams {
    pub scale: u32,
    pub avg_degree: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub seed: u64,
}

impl RmatParams {
    /// Power-law quadrant split used throughout the experiments.
    pub fn kronecker(scale: u32, avg_degree: u32, seed: u64) -> Self {
        RmatParams {
            scale,
            avg_degree,
            a: 0.57,
            b: 0.19,
            c: 0.19,
            d: 0.05,
            seed,
        }
    }

    pub fn uniform(scale: u32, avg_degree: u32, seed: u64) -> Self {
        RmatParams {
            scale,
            avg_degree,
            a: 0.25,
            b: 0.25,
            c: 0.25,
            d: 0.25,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale < 1 || self.scale > 31 {
            return Err(Error::config(format!("R-MAT scale {} not in 1..=31", self.scale)));
        }
        if self.avg_degree < 1 {
            return Err(Error::config("R-MAT average degree must be at least 1"));
        }
        let probs = [self.a, self.b, self.c, self.d];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("R-MAT probabilities must lie in [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("R-MAT probabilities sum to {sum}, not 1")));
        }
        Ok(())
    }
}

pub fn generate_rmat(params: &RmatParams) -> Result<EdgeList> {
    params.validate()?;
    let n = 1usize << params.scale;
    let m = n * params.avg_degree as usize;
    // Cumulative quadrant thresholds in units of 2^-32.
    let scaled = |p: f64| (p * 4294967296.0).round().min(u32::MAX as f64 + 1.0) as u64;
    let t_a = scaled(params.a);
    let t_ab = scaled(params.a + params.b);
    let t_abc = scaled(params.a + params.b + params.c);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (mut src, mut dst) = (0u32, 0u32);
        for _ in 0..params.scale {
            let r = rng.next_u32() as u64;
            let (row, col) = if r < t_a {
                (0, 0)
            } else if r < t_ab {
                (0, 1)
            } else if r < t_abc {
                (1, 0)
            } else {
                (1, 1)
            };
            src = (src << 1) | row;
            dst = (dst << 1) | col;
        }
        edges.push((src, dst));
    }
    Ok(EdgeList {
        vertex_count: n,
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Neighbors of `v` are the sources of its in-edges (pull kernels).
    InEdges,
    /// Neighbors of `v` are the destinations of its out-edges (push kernels).
    OutEdges,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrGraph {
    direction: Direction,
    offsets: Vec<u64>,
    neighbors: Vec<VertexId>,
}

impl CsrGraph {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn neighbors(&self) -> &[VertexId] {
        &self.neighbors
    }

    pub fn degree(&self, v: usize) -> usize {
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    pub fn degrees(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| (w[1] - w[0]) as usize)
    }

    /// Neighbor segment of `v`, in input edge order.
    pub fn neighbors_of(&self, v: usize) -> &[VertexId] {
        &self.neighbors[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    pub fn is_hot(&self, v: usize) -> bool {
        is_hot(self.degree(v), self.vertex_count(), self.edge_count())
    }
}

/// `degree >= m / n`, evaluated exactly.
pub fn is_hot(degree: usize, vertex_count: usize, edge_count: usize) -> bool {
    degree as u128 * vertex_count as u128 >= edge_count as u128
}

/// Counting-sort construction; each vertex's segment keeps input edge order.
pub fn build_csr(edges: &EdgeList, direction: Direction) -> CsrGraph {
    let n = edges.vertex_count;
    let key = |&(s, d): &(VertexId, VertexId)| match direction {
        Direction::InEdges => (d as usize, s),
        Direction::OutEdges => (s as usize, d),
    };
    let mut offsets = vec![0u64; n + 1];
    for e in &edges.edges {
        offsets[key(e).0 + 1] += 1;
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let mut cursor: Vec<u64> = offsets[..n].to_vec();
    let mut neighbors = vec![0 as VertexId; edges.edges.len()];
    for e in &edges.edges {
        let (owner, other) = key(e);
        neighbors[cursor[owner] as usize] = other;
        cursor[owner] += 1;
    }
    CsrGraph {
        direction,
        offsets,
        neighbors,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeSkewReport {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub avg_in_degree: f64,
    pub avg_out_degree: f64,
    pub hot_fraction_in: f64,
    pub edge_coverage_in: f64,
    pub hot_fraction_out: f64,
    pub edge_coverage_out: f64,
}

/// Hot-vertex fraction and the share of edges those vertices own, per direction.
pub fn degree_skew_report(g_in: &CsrGraph, g_out: &CsrGraph) -> Result<DegreeSkewReport> {
    if g_in.direction() != Direction::InEdges || g_out.direction() != Direction::OutEdges {
        return Err(Error::contract("skew report needs an in-edge and an out-edge CSR"));
    }
    if g_in.vertex_count() != g_out.vertex_count() || g_in.edge_count() != g_out.edge_count() {
        return Err(Error::contract(format!(
            "CSR shapes differ: in ({}, {}) vs out ({}, {})",
            g_in.vertex_count(),
            g_in.edge_count(),
            g_out.vertex_count(),
            g_out.edge_count()
        )));
    }
    let n = g_in.vertex_count();
    let m = g_in.edge_count();
    let (hot_fraction_in, edge_coverage_in) = hot_stats(g_in);
    let (hot_fraction_out, edge_coverage_out) = hot_stats(g_out);
    let avg = if n == 0 { 0.0 } else { m as f64 / n as f64 };
    Ok(DegreeSkewReport {
        vertex_count: n,
        edge_count: m,
        avg_in_degree: avg,
        avg_out_degree: avg,
        hot_fraction_in,
        edge_coverage_in,
        hot_fraction_out,
        edge_coverage_out,
    })
}

fn hot_stats(g: &CsrGraph) -> (f64, f64) {
    let n = g.vertex_count();
    let m = g.edge_count();
    let (hot, covered) = g
        .degrees()
        .filter(|&deg| is_hot(deg, n, m))
        .fold((0usize, 0usize), |(h, c), deg| (h + 1, c + deg));
    let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    // With no edges every vertex meets the (zero) average and owns all zero edges.
    let coverage = if m == 0 && n > 0 { 1.0 } else { frac(covered, m) };
    (frac(hot, n), coverage)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EdgeList {
        EdgeList::new(4, vec![(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn parses_plain_edge_list() {
        let el = parse_edge_list("0 1\n0 2\n1 2\n2 3\n").unwrap();
        assert_eq!(el, sample());
    }

    #[test]
    fn comments_only_gives_empty_graph() {
        let el = parse_edge_list("# comment\n").unwrap();
        assert_eq!(el.vertex_count, 0);
        assert!(el.edges.is_empty());
    }

    #[test]
    fn weight_token_ignored() {
        let el = parse_edge_list("# w\n3 1 0.5\n\n1 0 7\n").unwrap();
        assert_eq!(el.vertex_count, 4);
        assert_eq!(el.edges, vec![(3, 1), (1, 0)]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse_edge_list("0 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_edge_list("0 1\n# c\n5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_edge_list("0 1 2 3\n").is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_edge_list("/nonexistent/graph.el", EdgeListFormat::PlainText).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn csr_in_edges() {
        let g = build_csr(&sample(), Direction::InEdges);
        assert_eq!(g.offsets(), &[0, 0, 1, 3, 4]);
        assert_eq!(g.neighbors(), &[0, 0, 1, 2]);
    }

    #[test]
    fn csr_out_edges() {
        let g = build_csr(&sample(), Direction::OutEdges);
        assert_eq!(g.offsets(), &[0, 2, 3, 4, 4]);
        assert_eq!(g.neighbors(), &[1, 2, 2, 3]);
    }

    #[test]
    fn csr_empty_graph() {
        let g = build_csr(&EdgeList::new(1, vec![]).unwrap(), Direction::InEdges);
        assert_eq!(g.offsets(), &[0, 0]);
        assert!(g.neighbors().is_empty());
    }

    #[test]
    fn csr_keeps_duplicates_and_self_loops_in_order() {
        let el = EdgeList::new(3, vec![(2, 0), (1, 1), (2, 0), (0, 0)]).unwrap();
        let g = build_csr(&el, Direction::InEdges);
        assert_eq!(g.neighbors_of(0), &[2, 2, 0]);
        assert_eq!(g.neighbors_of(1), &[1]);
    }

    #[test]
    fn edge_list_rejects_out_of_range() {
        assert!(EdgeList::new(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn skew_report_small_graph() {
        let el = sample();
        let r = degree_skew_report(
            &build_csr(&el, Direction::InEdges),
            &build_csr(&el, Direction::OutEdges),
        )
        .unwrap();
        assert_eq!(r.avg_in_degree, 1.0);
        assert_eq!(r.hot_fraction_in, 0.75);
        assert_eq!(r.edge_coverage_in, 1.0);
        // out-degrees 2,1,1,0: hot {0,1,2} own all 4 edges
        assert_eq!(r.hot_fraction_out, 0.75);
        assert_eq!(r.edge_coverage_out, 1.0);
    }

    #[test]
    fn skew_report_regular_graph() {
        // 4-cycle: every vertex has in- and out-degree 1
        let el = EdgeList::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let r = degree_skew_report(
            &build_csr(&el, Direction::InEdges),
            &build_csr(&el, Direction::OutEdges),
        )
        .unwrap();
        assert_eq!(r.hot_fraction_in, 1.0);
        assert_eq!(r.edge_coverage_in, 1.0);
        assert_eq!(r.hot_fraction_out, 1.0);
        assert_eq!(r.edge_coverage_out, 1.0);
    }

    #[test]
    fn skew_report_rejects_mismatch() {
        let el = sample();
        let g_in = build_csr(&el, Direction::InEdges);
        assert!(degree_skew_report(&g_in, &g_in).is_err());
        let other = build_csr(&EdgeList::new(5, vec![(0, 1)]).unwrap(), Direction::OutEdges);
        assert!(degree_skew_report(&g_in, &other).is_err());
    }

    #[test]
    fn rmat_is_deterministic() {
        let p = RmatParams::kronecker(3, 2, 42);
        let a = generate_rmat(&p).unwrap();
        let b = generate_rmat(&p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.vertex_count, 8);
        assert_eq!(a.edge_count(), 16);
    }

    #[test]
    fn rmat_uniform_small_graph_is_balanced() {
        let el = generate_rmat(&RmatParams::uniform(3, 2, 42)).unwrap();
        let r = degree_skew_report(
            &build_csr(&el, Direction::InEdges),
            &build_csr(&el, Direction::OutEdges),
        )
        .unwrap();
        assert!((0.2..=0.8).contains(&r.hot_fraction_in), "{r:?}");
    }

    #[test]
    fn rmat_rejects_bad_params() {
        let mut p = RmatParams::kronecker(3, 2, 1);
        p.a = 0.6;
        assert!(generate_rmat(&p).is_err());
        assert!(generate_rmat(&RmatParams::kronecker(0, 2, 1)).is_err());
        assert!(generate_rmat(&RmatParams::kronecker(3, 0, 1)).is_err());
    }
}
