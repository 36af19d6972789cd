use std::collections::HashMap;

use proptest::prelude::*;

use grasp_core::graph::{build_csr, generate_rmat, Direction, EdgeList, RmatParams};
use grasp_core::reorder::{apply_permutation, reorder, ReorderAlgo};
use grasp_core::trace::{build_layout, trace_breakdown, trace_pagerank_pull, trace_sssp_push, ArrayKind};

fn small_graph() -> EdgeList {
    generate_rmat(&RmatParams::kronecker(8, 6, 7)).unwrap()
}

/// (reads, writes) per element index of the property array with tag `tag`.
fn property_counts(accesses: &[grasp_core::trace::MemoryAccess], layout: &grasp_core::trace::MemoryLayout, tag: u8) -> HashMap<u64, (usize, usize)> {
    let arr = layout.array(tag).unwrap();
    let mut counts: HashMap<u64, (usize, usize)> = HashMap::new();
    for a in accesses.iter().filter(|a| a.array_tag == Some(tag)) {
        let idx = (a.address - arr.base) / arr.elem_size;
        let e = counts.entry(idx).or_default();
        if a.is_write {
            e.1 += 1;
        } else {
            e.0 += 1;
        }
    }
    counts
}

#[test]
fn pull_reads_each_source_once_per_out_edge() {
    let el = small_graph();
    let g_in = build_csr(&el, Direction::InEdges);
    let g_out = build_csr(&el, Direction::OutEdges);
    let layout = build_layout(el.vertex_count, el.edge_count(), 2).unwrap();
    let t = trace_pagerank_pull(&g_in, &layout).unwrap();
    let n = el.vertex_count;
    assert_eq!(t.len(), 3 * n + 2 * el.edge_count());
    let props: Vec<u8> = layout.property_arrays().map(|(tag, _)| tag).collect();
    let src = property_counts(&t.accesses, &layout, props[0]);
    let dst = property_counts(&t.accesses, &layout, props[1]);
    for v in 0..n {
        assert_eq!(src.get(&(v as u64)).map_or(0, |c| c.0), g_out.degree(v));
        assert_eq!(src.get(&(v as u64)).map_or(0, |c| c.1), 0);
        assert_eq!(dst[&(v as u64)], (0, 1));
    }
}

#[test]
fn push_updates_each_destination_once_per_in_edge() {
    let el = small_graph();
    let g_in = build_csr(&el, Direction::InEdges);
    let g_out = build_csr(&el, Direction::OutEdges);
    let layout = build_layout(el.vertex_count, el.edge_count(), 1).unwrap();
    let rounds = 3;
    let t = trace_sssp_push(&g_out, &layout, rounds).unwrap();
    let (tag, _) = layout.property_arrays().next().unwrap();
    let counts = property_counts(&t.accesses, &layout, tag);
    for v in 0..el.vertex_count {
        let d = g_in.degree(v);
        // one read of its own distance plus a read/write pair per in-edge
        assert_eq!(counts[&(v as u64)], (rounds * (1 + d), rounds * d));
    }
    let b = trace_breakdown(&t);
    assert_eq!(b.vertex, (rounds * 2 * el.vertex_count) as u64);
    assert_eq!(b.edge, (rounds * el.edge_count()) as u64);
    assert_eq!(b.other, 0);
    assert_eq!(layout.kind_of(Some(tag)), Some(ArrayKind::PropertyArr));
}

proptest! {
    #[test]
    fn reordering_preserves_degree_multisets(
        n in 1usize..60,
        raw in prop::collection::vec((0u32..60, 0u32..60), 0..300),
        algo in prop::sample::select(vec![ReorderAlgo::Sort, ReorderAlgo::HubSort, ReorderAlgo::dbg()]),
    ) {
        let edges: Vec<_> = raw.into_iter().map(|(s, d)| (s % n as u32, d % n as u32)).collect();
        let el = EdgeList::new(n, edges).unwrap();
        let perm = reorder(&build_csr(&el, Direction::InEdges), algo).unwrap();
        let out = apply_permutation(&el, &perm).unwrap();
        prop_assert_eq!(out.edge_count(), el.edge_count());
        for dir in [Direction::InEdges, Direction::OutEdges] {
            let before = build_csr(&el, dir);
            let after = build_csr(&out, dir);
            for v in 0..n {
                prop_assert_eq!(before.degree(v), after.degree(perm.map(v as u32) as usize));
            }
        }
    }
}
