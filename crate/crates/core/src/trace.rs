//! Virtual memory layout of a vertex-centric application and the
//! word-granular access streams its kernels produce.
//!
//! Only the access pattern is modeled; no rank or distance is ever computed.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{CsrGraph, Direction};

/// First array base; arbitrary but page aligned.
pub const LAYOUT_BASE: u64 = 0x1_0000_0000;
pub const ARRAY_ALIGN: u64 = 4096;
/// Unmapped gap between consecutive arrays.
pub const GUARD_GAP: u64 = 4096;

pub const VERTEX_ELEM: u64 = 8;
pub const EDGE_ELEM: u64 = 4;
pub const PROPERTY_ELEM: u64 = 8;

/// Tag byte for untagged accesses in the binary dump.
pub const UNTAGGED: u8 = 0xff;
pub const DUMP_RECORD_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArrayKind {
    VertexArr,
    EdgeArr,
    PropertyArr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayDescriptor {
    pub name: String,
    pub kind: ArrayKind,
    pub base: u64,
    pub elem_size: u64,
    pub length: u64,
}

impl ArrayDescriptor {
    pub fn end(&self) -> u64 {
        self.base + self.elem_size * self.length
    }

    pub fn addr(&self, index: u64) -> u64 {
        debug_assert!(index < self.length);
        self.base + self.elem_size * index
    }

    pub fn contains(&self, address: u64) -> bool {
        (self.base..self.end()).contains(&address)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryLayout {
    arrays: Vec<ArrayDescriptor>,
}

impl MemoryLayout {
    pub fn arrays(&self) -> &[ArrayDescriptor] {
        &self.arrays
    }

    pub fn array(&self, tag: u8) -> Option<&ArrayDescriptor> {
        self.arrays.get(tag as usize)
    }

    pub fn kind_of(&self, tag: Option<u8>) -> Option<ArrayKind> {
        tag.and_then(|t| self.array(t)).map(|a| a.kind)
    }

    /// `(tag, descriptor)` for every Property array, in address order.
    pub fn property_arrays(&self) -> impl Iterator<Item = (u8, &ArrayDescriptor)> {
        self.tagged(ArrayKind::PropertyArr)
    }

    pub fn n_property_arrays(&self) -> usize {
        self.property_arrays().count()
    }

    fn tagged(&self, kind: ArrayKind) -> impl Iterator<Item = (u8, &ArrayDescriptor)> {
        self.arrays
            .iter()
            .enumerate()
            .filter(move |(_, a)| a.kind == kind)
            .map(|(i, a)| (i as u8, a))
    }

    fn handle(&self, kind: ArrayKind, nth_from_end: bool) -> Option<ArrayHandle> {
        let found = if nth_from_end {
            self.tagged(kind).last()
        } else {
            self.tagged(kind).next()
        };
        found.map(|(tag, a)| ArrayHandle {
            tag,
            base: a.base,
            elem_size: a.elem_size,
        })
    }

    /// Checks that this layout was built for a graph of `n` vertices and
    /// `m` edges.
    pub fn check_graph(&self, n: usize, m: usize) -> Result<()> {
        let len_of = |kind| self.tagged(kind).next().map(|(_, a)| a.length);
        let ok = len_of(ArrayKind::VertexArr) == Some(n as u64 + 1)
            && len_of(ArrayKind::EdgeArr) == Some(m as u64)
            && self.n_property_arrays() >= 1
            && self.property_arrays().all(|(_, a)| a.length == n as u64);
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "layout does not match a graph with {n} vertices and {m} edges"
            )))
        }
    }
}

pub fn build_layout(n: usize, m: usize, n_property_arrays: usize) -> Result<MemoryLayout> {
    if n == 0 {
        return Err(Error::contract("layout needs at least one vertex"));
    }
    if !(1..=2).contains(&n_property_arrays) {
        return Err(Error::config(format!(
            "property array count must be 1 or 2, got {n_property_arrays}"
        )));
    }
    let mut specs = vec![
        ("vertex", ArrayKind::VertexArr, VERTEX_ELEM, n as u64 + 1),
        ("edge", ArrayKind::EdgeArr, EDGE_ELEM, m as u64),
    ];
    let prop_names: &[&str] = if n_property_arrays == 1 {
        &["property"]
    } else {
        &["property_src", "property_dst"]
    };
    for name in prop_names {
        specs.push((name, ArrayKind::PropertyArr, PROPERTY_ELEM, n as u64));
    }

    let mut next = LAYOUT_BASE;
    let arrays = specs
        .into_iter()
        .map(|(name, kind, elem_size, length)| {
            let a = ArrayDescriptor {
                name: name.to_string(),
                kind,
                base: next,
                elem_size,
                length,
            };
            next = (a.end() + GUARD_GAP).next_multiple_of(ARRAY_ALIGN);
            a
        })
        .collect();
    Ok(MemoryLayout { arrays })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MemoryAccess {
    pub address: u64,
    pub is_write: bool,
    pub array_tag: Option<u8>,
}

impl MemoryAccess {
    pub fn read(address: u64) -> Self {
        MemoryAccess {
            address,
            is_write: false,
            array_tag: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessTrace {
    pub accesses: Vec<MemoryAccess>,
    pub layout: MemoryLayout,
}

impl AccessTrace {
    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }
}

#[derive(Clone, Copy)]
struct ArrayHandle {
    tag: u8,
    base: u64,
    elem_size: u64,
}

impl ArrayHandle {
    fn at(self, index: u64, is_write: bool) -> MemoryAccess {
        MemoryAccess {
            address: self.base + self.elem_size * index,
            is_write,
            array_tag: Some(self.tag),
        }
    }

    fn read(self, index: u64) -> MemoryAccess {
        self.at(index, false)
    }

    fn write(self, index: u64) -> MemoryAccess {
        self.at(index, true)
    }
}

struct KernelArrays {
    vertex: ArrayHandle,
    edge: ArrayHandle,
    prop_src: ArrayHandle,
    prop_dst: ArrayHandle,
}

fn kernel_arrays(g: &CsrGraph, layout: &MemoryLayout, want: Direction) -> Result<KernelArrays> {
    if g.direction() != want {
        return Err(Error::contract(format!(
            "kernel needs a {want:?} CSR, got {:?}",
            g.direction()
        )));
    }
    layout.check_graph(g.vertex_count(), g.edge_count())?;
    let missing = || Error::contract("layout lacks a required array");
    Ok(KernelArrays {
        vertex: layout.handle(ArrayKind::VertexArr, false).ok_or_else(missing)?,
        edge: layout.handle(ArrayKind::EdgeArr, false).ok_or_else(missing)?,
        prop_src: layout.handle(ArrayKind::PropertyArr, false).ok_or_else(missing)?,
        prop_dst: layout.handle(ArrayKind::PropertyArr, true).ok_or_else(missing)?,
    })
}

/// One pull-based PageRank iteration, streamed lazily.
///
/// For each destination `d`: read `V[d]`, `V[d+1]`; for every in-edge `e`
/// read `E[e]` then `P_src[E[e]]`; finally write `P_dst[d]`.
pub fn pagerank_pull_accesses<'a>(
    g_in: &'a CsrGraph,
    layout: &MemoryLayout,
) -> Result<impl Iterator<Item = MemoryAccess> + 'a> {
    let arr = kernel_arrays(g_in, layout, Direction::InEdges)?;
    let offsets = g_in.offsets();
    let neighbors = g_in.neighbors();
    Ok((0..g_in.vertex_count()).flat_map(move |d| {
        let (lo, hi) = (offsets[d], offsets[d + 1]);
        [arr.vertex.read(d as u64), arr.vertex.read(d as u64 + 1)]
            .into_iter()
            .chain((lo..hi).flat_map(move |e| {
                [
                    arr.edge.read(e),
                    arr.prop_src.read(neighbors[e as usize] as u64),
                ]
            }))
            .chain(std::iter::once(arr.prop_dst.write(d as u64)))
    }))
}

/// `rounds` full Bellman-Ford sweeps in push style, streamed lazily.
///
/// For each source `s`: read `V[s]`, `V[s+1]`, `P_src[s]`; for every
/// out-edge `e` read `E[e]`, then read and write `P_dst[E[e]]`.
pub fn sssp_push_accesses<'a>(
    g_out: &'a CsrGraph,
    layout: &MemoryLayout,
    rounds: usize,
) -> Result<impl Iterator<Item = MemoryAccess> + 'a> {
    if rounds < 1 {
        return Err(Error::config("SSSP needs at least one round"));
    }
    let arr = kernel_arrays(g_out, layout, Direction::OutEdges)?;
    let offsets = g_out.offsets();
    let neighbors = g_out.neighbors();
    let n = g_out.vertex_count();
    Ok((0..rounds).flat_map(move |_| {
        (0..n).flat_map(move |s| {
            let (lo, hi) = (offsets[s], offsets[s + 1]);
            [
                arr.vertex.read(s as u64),
                arr.vertex.read(s as u64 + 1),
                arr.prop_src.read(s as u64),
            ]
            .into_iter()
            .chain((lo..hi).flat_map(move |e| {
                let d = neighbors[e as usize] as u64;
                [arr.edge.read(e), arr.prop_dst.read(d), arr.prop_dst.write(d)]
            }))
        })
    }))
}

pub fn trace_pagerank_pull(g_in: &CsrGraph, layout: &MemoryLayout) -> Result<AccessTrace> {
    Ok(AccessTrace {
        accesses: pagerank_pull_accesses(g_in, layout)?.collect(),
        layout: layout.clone(),
    })
}

pub fn trace_sssp_push(g_out: &CsrGraph, layout: &MemoryLayout, rounds: usize) -> Result<AccessTrace> {
    Ok(AccessTrace {
        accesses: sssp_push_accesses(g_out, layout, rounds)?.collect(),
        layout: layout.clone(),
    })
}

/// Access counts by array kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceBreakdown {
    pub vertex: u64,
    pub edge: u64,
    pub property: u64,
    pub other: u64,
}

impl TraceBreakdown {
    pub fn of<'a>(layout: &MemoryLayout, accesses: impl IntoIterator<Item = &'a MemoryAccess>) -> Self {
        let mut b = TraceBreakdown::default();
        for acc in accesses {
            b.add(layout.kind_of(acc.array_tag));
        }
        b
    }

    pub fn add(&mut self, kind: Option<ArrayKind>) {
        match kind {
            Some(ArrayKind::VertexArr) => self.vertex += 1,
            Some(ArrayKind::EdgeArr) => self.edge += 1,
            Some(ArrayKind::PropertyArr) => self.property += 1,
            None => self.other += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.vertex + self.edge + self.property + self.other
    }

    fn fraction(&self, count: u64) -> f64 {
        match self.total() {
            0 => 0.0,
            t => count as f64 / t as f64,
        }
    }

    pub fn property_fraction(&self) -> f64 {
        self.fraction(self.property)
    }

    pub fn vertex_fraction(&self) -> f64 {
        self.fraction(self.vertex)
    }

    pub fn edge_fraction(&self) -> f64 {
        self.fraction(self.edge)
    }

    pub fn other_fraction(&self) -> f64 {
        self.fraction(self.other)
    }
}

pub fn trace_breakdown(t: &AccessTrace) -> TraceBreakdown {
    TraceBreakdown::of(&t.layout, &t.accesses)
}

/// Writes 10-byte records: address (u64 LE), flags (bit 0 = write), tag.
pub fn write_dump<W: Write>(mut out: W, accesses: impl IntoIterator<Item = MemoryAccess>) -> io::Result<u64> {
    let mut count = 0;
    for acc in accesses {
        let mut rec = [0u8; DUMP_RECORD_LEN];
        rec[..8].copy_from_slice(&acc.address.to_le_bytes());
        rec[8] = acc.is_write as u8;
        rec[9] = acc.array_tag.unwrap_or(UNTAGGED);
        out.write_all(&rec)?;
        count += 1;
    }
    out.flush()?;
    Ok(count)
}

pub fn read_dump<R: Read>(mut input: R) -> Result<Vec<MemoryAccess>> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<trace dump>", e))?;
    if bytes.len() % DUMP_RECORD_LEN != 0 {
        return Err(Error::TraceFormat(format!(
            "{} bytes is not a whole number of {DUMP_RECORD_LEN}-byte records",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(DUMP_RECORD_LEN)
        .enumerate()
        .map(|(i, rec)| {
            let flags = rec[8];
            if flags & !1 != 0 {
                return Err(Error::TraceFormat(format!(
                    "record {i}: unknown flag bits {flags:#04x}"
                )));
            }
            Ok(MemoryAccess {
                address: u64::from_le_bytes(rec[..8].try_into().unwrap()),
                is_write: flags & 1 == 1,
                array_tag: (rec[9] != UNTAGGED).then_some(rec[9]),
            })
        })
        .collect()
}

pub fn dump_to_file(path: impl AsRef<Path>, accesses: impl IntoIterator<Item = MemoryAccess>) -> Result<u64> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dump(BufWriter::new(file), accesses).map_err(|e| Error::io(path, e))
}

pub fn load_dump(path: impl AsRef<Path>) -> Result<Vec<MemoryAccess>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dump(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_csr, EdgeList};

    fn sample() -> EdgeList {
        EdgeList::new(4, vec![(0, 1), (0, 2), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn layout_shapes() {
        let l1 = build_layout(4, 4, 1).unwrap();
        assert_eq!(l1.arrays().len(), 3);
        assert_eq!(l1.property_arrays().next().unwrap().1.length, 4);
        let l2 = build_layout(4, 4, 2).unwrap();
        assert_eq!(l2.arrays().len(), 4);
        assert_eq!(l2.n_property_arrays(), 2);
    }

    #[test]
    fn layout_is_aligned_disjoint_and_sorted() {
        for (n, m, k) in [(1, 0, 1), (4, 4, 2), (1000, 16000, 2), (7, 3, 1)] {
            let l = build_layout(n, m, k).unwrap();
            for a in l.arrays() {
                assert_eq!(a.base % 64, 0);
                assert!(matches!(a.elem_size, 4 | 8));
            }
            for w in l.arrays().windows(2) {
                assert!(w[0].end() + 64 <= w[1].base, "{w:?}");
            }
        }
    }

    #[test]
    fn property_element_address() {
        let l = build_layout(4, 4, 1).unwrap();
        let (_, p) = l.property_arrays().next().unwrap();
        for i in 0..4 {
            assert_eq!(p.addr(i), p.base + 8 * i);
        }
    }

    #[test]
    fn layout_rejects_bad_inputs() {
        assert!(build_layout(0, 0, 1).is_err());
        assert!(build_layout(4, 4, 3).is_err());
    }

    #[test]
    fn pagerank_counts_on_small_graph() {
        let el = sample();
        let g = build_csr(&el, Direction::InEdges);
        let layout = build_layout(4, 4, 1).unwrap();
        let t = trace_pagerank_pull(&g, &layout).unwrap();
        let b = trace_breakdown(&t);
        assert_eq!(b.vertex, 8);
        assert_eq!(b.edge, 4);
        assert_eq!(b.property, 8);
        assert_eq!(b.total(), 20);
        assert_eq!(b.property_fraction(), 0.4);
        let writes = t.accesses.iter().filter(|a| a.is_write).count();
        assert_eq!(writes, 4);
    }

    #[test]
    fn pagerank_isolated_destination() {
        // vertex 0 has in-degree 0
        let g = build_csr(&sample(), Direction::InEdges);
        let layout = build_layout(4, 4, 1).unwrap();
        let t = trace_pagerank_pull(&g, &layout).unwrap();
        let head: Vec<_> = t.accesses[..3].iter().map(|a| layout.kind_of(a.array_tag)).collect();
        assert_eq!(
            head,
            vec![
                Some(ArrayKind::VertexArr),
                Some(ArrayKind::VertexArr),
                Some(ArrayKind::PropertyArr)
            ]
        );
        assert!(t.accesses[2].is_write);
    }

    #[test]
    fn pagerank_two_arrays_reads_src_writes_dst() {
        let g = build_csr(&sample(), Direction::InEdges);
        let layout = build_layout(4, 4, 2).unwrap();
        let t = trace_pagerank_pull(&g, &layout).unwrap();
        let (src, _) = layout.property_arrays().next().unwrap();
        let (dst, _) = layout.property_arrays().last().unwrap();
        for a in t.accesses.iter().filter(|a| layout.kind_of(a.array_tag) == Some(ArrayKind::PropertyArr)) {
            assert_eq!(a.array_tag, Some(if a.is_write { dst } else { src }));
        }
    }

    #[test]
    fn kernels_check_direction() {
        let el = sample();
        let layout = build_layout(4, 4, 1).unwrap();
        assert!(trace_pagerank_pull(&build_csr(&el, Direction::OutEdges), &layout).is_err());
        assert!(trace_sssp_push(&build_csr(&el, Direction::InEdges), &layout, 1).is_err());
        assert!(trace_sssp_push(&build_csr(&el, Direction::OutEdges), &layout, 0).is_err());
        let wrong = build_layout(5, 4, 1).unwrap();
        assert!(trace_pagerank_pull(&build_csr(&el, Direction::InEdges), &wrong).is_err());
    }

    #[test]
    fn sssp_rounds_repeat() {
        let g = build_csr(&sample(), Direction::OutEdges);
        let layout = build_layout(4, 4, 1).unwrap();
        let one = trace_sssp_push(&g, &layout, 1).unwrap();
        let two = trace_sssp_push(&g, &layout, 2).unwrap();
        assert_eq!(two.len(), 2 * one.len());
        assert_eq!(&two.accesses[..one.len()], &one.accesses[..]);
        assert_eq!(&two.accesses[one.len()..], &one.accesses[..]);
    }

    #[test]
    fn sssp_isolated_source() {
        // vertex 3 has no out-edges and is last
        let g = build_csr(&sample(), Direction::OutEdges);
        let layout = build_layout(4, 4, 1).unwrap();
        let t = trace_sssp_push(&g, &layout, 1).unwrap();
        let tail: Vec<_> = t.accesses[t.len() - 3..]
            .iter()
            .map(|a| (layout.kind_of(a.array_tag), a.is_write))
            .collect();
        assert_eq!(
            tail,
            vec![
                (Some(ArrayKind::VertexArr), false),
                (Some(ArrayKind::VertexArr), false),
                (Some(ArrayKind::PropertyArr), false)
            ]
        );
    }

    #[test]
    fn breakdown_edge_cases() {
        let layout = build_layout(4, 4, 1).unwrap();
        let empty = AccessTrace {
            accesses: vec![],
            layout: layout.clone(),
        };
        let b = trace_breakdown(&empty);
        assert_eq!(b.total(), 0);
        assert_eq!(b.property_fraction(), 0.0);
        assert_eq!(b.vertex_fraction(), 0.0);

        let (tag, p) = layout.property_arrays().next().unwrap();
        let only_prop = AccessTrace {
            accesses: (0..4)
                .map(|i| MemoryAccess {
                    address: p.addr(i),
                    is_write: false,
                    array_tag: Some(tag),
                })
                .collect(),
            layout,
        };
        assert_eq!(trace_breakdown(&only_prop).property_fraction(), 1.0);
    }

    #[test]
    fn dump_round_trip_and_format() {
        let g = build_csr(&sample(), Direction::InEdges);
        let layout = build_layout(4, 4, 1).unwrap();
        let mut accesses = trace_pagerank_pull(&g, &layout).unwrap().accesses;
        accesses.push(MemoryAccess::read(0xdead_beef));
        let mut buf = Vec::new();
        let n = write_dump(&mut buf, accesses.iter().copied()).unwrap();
        assert_eq!(n as usize, accesses.len());
        assert_eq!(buf.len(), accesses.len() * DUMP_RECORD_LEN);
        // last record: untagged read of 0xdeadbeef
        let last = &buf[buf.len() - DUMP_RECORD_LEN..];
        assert_eq!(last, &[0xef, 0xbe, 0xad, 0xde, 0, 0, 0, 0, 0, 0xff]);
        assert_eq!(read_dump(&buf[..]).unwrap(), accesses);
    }

    #[test]
    fn dump_rejects_garbage() {
        assert!(matches!(read_dump(&[0u8; 7][..]), Err(Error::TraceFormat(_))));
        let mut rec = [0u8; DUMP_RECORD_LEN];
        rec[8] = 0x02;
        assert!(matches!(read_dump(&rec[..]), Err(Error::TraceFormat(_))));
    }
}
