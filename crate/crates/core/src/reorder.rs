//! Skew-aware vertex reordering.
//!
//! All three reorderers move hot vertices (degree at or above the average)
//! to the front of the ID space, which is what lets the region classifier
//! find them with nothing more than the bounds of a Property array.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{is_hot, CsrGraph, EdgeList, VertexId};

pub const DEFAULT_DBG_GROUPS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReorderAlgo {
    Identity,
    Sort,
    HubSort,
    Dbg { groups: u32 },
}

impl ReorderAlgo {
    pub fn dbg() -> Self {
        ReorderAlgo::Dbg {
            groups: DEFAULT_DBG_GROUPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ReorderAlgo::Dbg { groups } if groups < 2 => Err(Error::config(format!(
                "DBG needs at least 2 groups, got {groups}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ReorderAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReorderAlgo::Identity => f.write_str("none"),
            ReorderAlgo::Sort => f.write_str("sort"),
            ReorderAlgo::HubSort => f.write_str("hubsort"),
            ReorderAlgo::Dbg { .. } => f.write_str("dbg"),
        }
    }
}

impl FromStr for ReorderAlgo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "identity" => Ok(ReorderAlgo::Identity),
            "sort" => Ok(ReorderAlgo::Sort),
            "hubsort" => Ok(ReorderAlgo::HubSort),
            "dbg" => Ok(ReorderAlgo::dbg()),
            other => Err(Error::config(format!("unknown reordering {other:?}"))),
        }
    }
}

/// `new_id[old] = new`; always a bijection over `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexPermutation {
    new_id: Vec<VertexId>,
}

impl VertexPermutation {
    pub fn identity(n: usize) -> Self {
        VertexPermutation {
            new_id: (0..n as VertexId).collect(),
        }
    }

    pub fn from_new_ids(new_id: Vec<VertexId>) -> Result<Self> {
        let mut seen = vec![false; new_id.len()];
        for &id in &new_id {
            let slot = seen
                .get_mut(id as usize)
                .ok_or_else(|| Error::contract(format!("new id {id} out of range")))?;
            if std::mem::replace(slot, true) {
                return Err(Error::contract(format!("new id {id} assigned twice")));
            }
        }
        Ok(VertexPermutation { new_id })
    }

    /// Builds the permutation that places `order[i]` at new id `i`.
    fn from_order(order: &[VertexId]) -> Self {
        let mut new_id = vec![0; order.len()];
        for (pos, &old) in order.iter().enumerate() {
            new_id[old as usize] = pos as VertexId;
        }
        VertexPermutation { new_id }
    }

    pub fn new_ids(&self) -> &[VertexId] {
        &self.new_id
    }

    pub fn len(&self) -> usize {
        self.new_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.new_id.is_empty()
    }

    pub fn map(&self, old: VertexId) -> VertexId {
        self.new_id[old as usize]
    }
}

/// Computes a permutation from the degrees of `g` (whichever direction the
/// caller hands in).
pub fn reorder(g: &CsrGraph, algo: ReorderAlgo) -> Result<VertexPermutation> {
    algo.validate()?;
    let n = g.vertex_count();
    let m = g.edge_count();
    let degrees: Vec<usize> = g.degrees().collect();
    let by_degree_desc = |ids: &mut Vec<VertexId>| {
        // stable sort keeps ascending original id on ties
        ids.sort_by(|&x, &y| degrees[y as usize].cmp(&degrees[x as usize]));
    };

    let order: Vec<VertexId> = match algo {
        ReorderAlgo::Identity => return Ok(VertexPermutation::identity(n)),
        ReorderAlgo::Sort => {
            let mut ids: Vec<VertexId> = (0..n as VertexId).collect();
            by_degree_desc(&mut ids);
            ids
        }
        ReorderAlgo::HubSort => {
            let (mut hot, cold): (Vec<VertexId>, Vec<VertexId>) =
                (0..n as VertexId).partition(|&v| is_hot(degrees[v as usize], n, m));
            by_degree_desc(&mut hot);
            hot.extend(cold);
            hot
        }
        ReorderAlgo::Dbg { groups } => {
            let groups = groups as usize;
            let mut buckets: Vec<Vec<VertexId>> = vec![Vec::new(); groups];
            for v in 0..n as VertexId {
                buckets[dbg_group(degrees[v as usize], n, m, groups)].push(v);
            }
            buckets.concat()
        }
    };
    Ok(VertexPermutation::from_order(&order))
}

/// Group index for DBG, 0 being the hottest. Group `i < groups - 1` holds
/// degrees `>= avg * 2^(groups - 2 - i)`; the last group is below average.
pub fn dbg_group(degree: usize, n: usize, m: usize, groups: usize) -> usize {
    let scaled = degree as u128 * n as u128;
    let m = m as u128;
    // avg * 2^shift <= degree  <=>  m << shift <= degree * n
    let meets = |shift: u32| m == 0 || (shift < m.leading_zeros() && (m << shift) <= scaled);
    (0..groups - 1)
        .find(|&i| meets((groups - 2 - i) as u32))
        .unwrap_or(groups - 1)
}

pub fn apply_permutation(e: &EdgeList, p: &VertexPermutation) -> Result<EdgeList> {
    if p.len() != e.vertex_count {
        return Err(Error::contract(format!(
            "permutation covers {} vertices, edge list has {}",
            p.len(),
            e.vertex_count
        )));
    }
    Ok(EdgeList {
        vertex_count: e.vertex_count,
        edges: e.edges.iter().map(|&(s, d)| (p.map(s), p.map(d))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csr, Direction};

    /// Out-CSR with the given out-degrees (all edges point at vertex 0).
    fn with_out_degrees(degrees: &[usize]) -> CsrGraph {
        let edges = degrees
            .iter()
            .enumerate()
            .flat_map(|(v, &d)| std::iter::repeat_n((v as VertexId, 0), d))
            .collect();
        build_csr(
            &EdgeList::new(degrees.len(), edges).unwrap(),
            Direction::OutEdges,
        )
    }

    #[test]
    fn sort_already_ordered() {
        let el = EdgeList::new(4, vec![(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap();
        let g = build_csr(&el, Direction::OutEdges);
        let p = reorder(&g, ReorderAlgo::Sort).unwrap();
        assert_eq!(p.new_ids(), &[0, 1, 2, 3]);
    }

    #[test]
    fn sort_by_degree() {
        let p = reorder(&with_out_degrees(&[0, 3, 1, 2]), ReorderAlgo::Sort).unwrap();
        assert_eq!(p.new_ids(), &[3, 0, 2, 1]);
    }

    #[test]
    fn hubsort_hot_first_cold_in_order() {
        let p = reorder(&with_out_degrees(&[0, 3, 1, 2]), ReorderAlgo::HubSort).unwrap();
        assert_eq!(p.new_ids(), &[2, 0, 3, 1]);
    }

    #[test]
    fn dbg_groups_by_power_of_two() {
        let degrees = [1, 9, 2, 4, 0, 3, 8, 5];
        let total: usize = degrees.iter().sum();
        let n = degrees.len();
        let groups: Vec<usize> = degrees.iter().map(|&d| dbg_group(d, n, total, 4)).collect();
        // avg = 32 / 8 = 4 -> thresholds 16, 8, 4
        assert_eq!(groups, vec![3, 1, 3, 2, 3, 3, 1, 2]);
        let p = reorder(&with_out_degrees(&degrees), ReorderAlgo::Dbg { groups: 4 }).unwrap();
        // group 1: {1, 6}, group 2: {3, 7}, group 3: {0, 2, 4, 5}
        assert_eq!(p.new_ids(), &[4, 0, 5, 2, 6, 7, 1, 3]);
    }

    #[test]
    fn dbg_requires_two_groups() {
        let g = with_out_degrees(&[1, 2]);
        assert!(reorder(&g, ReorderAlgo::Dbg { groups: 1 }).is_err());
    }

    #[test]
    fn empty_graph_gives_empty_identity() {
        let g = build_csr(&EdgeList::default(), Direction::OutEdges);
        for algo in [ReorderAlgo::Sort, ReorderAlgo::HubSort, ReorderAlgo::dbg()] {
            assert!(reorder(&g, algo).unwrap().is_empty());
        }
    }

    #[test]
    fn apply_swaps_endpoints() {
        let e = EdgeList::new(2, vec![(0, 1)]).unwrap();
        let p = VertexPermutation::from_new_ids(vec![1, 0]).unwrap();
        assert_eq!(apply_permutation(&e, &p).unwrap().edges, vec![(1, 0)]);
        let id = VertexPermutation::identity(2);
        assert_eq!(apply_permutation(&e, &id).unwrap(), e);
    }

    #[test]
    fn apply_rejects_length_mismatch() {
        let e = EdgeList::new(3, vec![(0, 1)]).unwrap();
        assert!(apply_permutation(&e, &VertexPermutation::identity(2)).is_err());
    }

    #[test]
    fn from_new_ids_rejects_non_bijection() {
        assert!(VertexPermutation::from_new_ids(vec![0, 0]).is_err());
        assert!(VertexPermutation::from_new_ids(vec![0, 2]).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("dbg".parse::<ReorderAlgo>().unwrap(), ReorderAlgo::dbg());
        assert_eq!("none".parse::<ReorderAlgo>().unwrap(), ReorderAlgo::Identity);
        assert!("gorder".parse::<ReorderAlgo>().is_err());
    }
}
