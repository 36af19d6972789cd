//! Experiment driver: graph -> reorder -> kernel trace -> L1 -> LLC policies.
//!
//! Every LLC size in a sweep reuses one L1-filtered stream, and every
//! policy at a size shares one region map computed for that capacity.
//! LRU and DRRIP are always simulated so each row can report its miss
//! elimination over both baselines.

use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cachesim::{
    filter_l1, miss_elimination_over, simulate_llc, CacheConfig, LlcStream, PolicyKind, RegionMap,
    ReuseHint, SimStats,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_csr, degree_skew_report, generate_rmat, load_edge_list, Direction, DegreeSkewReport,
    EdgeList, EdgeListFormat, RmatParams,
};
use crate::reorder::{apply_permutation, reorder, ReorderAlgo};
use crate::trace::{
    build_layout, dump_to_file, pagerank_pull_accesses, sssp_push_accesses, MemoryAccess,
    MemoryLayout, TraceBreakdown,
};

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    File(PathBuf),
    Rmat {
        scale: u32,
        avg_degree: u32,
        probs: [f64; 4],
    },
    Uniform {
        scale: u32,
        avg_degree: u32,
    },
}

impl GraphSource {
    pub fn kronecker(scale: u32, avg_degree: u32) -> Self {
        let p = RmatParams::kronecker(scale, avg_degree, 0);
        GraphSource::Rmat {
            scale,
            avg_degree,
            probs: [p.a, p.b, p.c, p.d],
        }
    }

    /// `scale,deg` optionally followed by `,a,b,c,d`.
    pub fn parse_rmat(arg: &str) -> Result<Self> {
        let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
        let bad = || Error::config(format!("bad R-MAT graph {arg:?}, want scale,deg[,a,b,c,d]"));
        let int = |s: &str| s.parse::<u32>().map_err(|_| bad());
        let float = |s: &str| s.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            [s, d] => Ok(GraphSource::kronecker(int(s)?, int(d)?)),
            [s, d, a, b, c, dd] => Ok(GraphSource::Rmat {
                scale: int(s)?,
                avg_degree: int(d)?,
                probs: [float(a)?, float(b)?, float(c)?, float(dd)?],
            }),
            _ => Err(bad()),
        }
    }

    pub fn parse_uniform(arg: &str) -> Result<Self> {
        let parts: Vec<&str> = arg.split(',').map(str::trim).collect();
        let bad = || Error::config(format!("bad uniform graph {arg:?}, want scale,deg"));
        match parts.as_slice() {
            [s, d] => Ok(GraphSource::Uniform {
                scale: s.parse().map_err(|_| bad())?,
                avg_degree: d.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }

    pub fn rmat_params(&self, seed: u64) -> Option<RmatParams> {
        match *self {
            GraphSource::File(_) => None,
            GraphSource::Rmat {
                scale,
                avg_degree,
                probs: [a, b, c, d],
            } => Some(RmatParams {
                scale,
                avg_degree,
                a,
                b,
                c,
                d,
                seed,
            }),
            GraphSource::Uniform { scale, avg_degree } => {
                Some(RmatParams::uniform(scale, avg_degree, seed))
            }
        }
    }

    pub fn load(&self, seed: u64) -> Result<EdgeList> {
        match self {
            GraphSource::File(path) => load_edge_list(path, EdgeListFormat::PlainText),
            _ => generate_rmat(&self.rmat_params(seed).expect("synthetic source")),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GraphSource::File(path) => path
                .file_stem()
                .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()),
            GraphSource::Rmat {
                scale, avg_degree, ..
            } => format!("rmat-s{scale}-d{avg_degree}"),
            GraphSource::Uniform { scale, avg_degree } => format!("uni-s{scale}-d{avg_degree}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    PagerankPull,
    SsspPush { rounds: usize },
}

impl Kernel {
    /// CSR direction the kernel walks.
    pub fn traversal(self) -> Direction {
        match self {
            Kernel::PagerankPull => Direction::InEdges,
            Kernel::SsspPush { .. } => Direction::OutEdges,
        }
    }

    /// Direction whose degree predicts Property reuse: a pull kernel reads
    /// `P[u]` once per out-edge of `u`, a push kernel updates `P[v]` once per
    /// in-edge of `v`.
    pub fn reuse_direction(self) -> Direction {
        match self {
            Kernel::PagerankPull => Direction::OutEdges,
            Kernel::SsspPush { .. } => Direction::InEdges,
        }
    }

    pub fn parse(name: &str, rounds: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "pagerank" | "pr" => Ok(Kernel::PagerankPull),
            "sssp" => Ok(Kernel::SsspPush { rounds }),
            other => Err(Error::config(format!("unknown kernel {other:?}"))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::PagerankPull => f.write_str("pagerank"),
            Kernel::SsspPush { .. } => f.write_str("sssp"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub kernel: Kernel,
    pub reorder: ReorderAlgo,
    pub policies: Vec<PolicyKind>,
    pub cache: CacheConfig,
    /// LLC capacities in bytes; `None` simulates only `cache`'s LLC.
    pub llc_size_sweep: Option<Vec<u64>>,
    pub n_property_arrays: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphSource::kronecker(20, 16),
            kernel: Kernel::PagerankPull,
            reorder: ReorderAlgo::dbg(),
            policies: vec![PolicyKind::Lru, PolicyKind::Drrip, PolicyKind::Grasp],
            cache: CacheConfig::default(),
            llc_size_sweep: None,
            n_property_arrays: 1,
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::config("at least one policy is required"));
        }
        self.reorder.validate()?;
        self.cache.validate()?;
        for &bytes in self.llc_sizes().iter() {
            self.cache.with_llc_capacity(bytes)?;
        }
        if let Kernel::SsspPush { rounds: 0 } = self.kernel {
            return Err(Error::config("SSSP needs at least one round"));
        }
        if !(1..=2).contains(&self.n_property_arrays) {
            return Err(Error::config("property array count must be 1 or 2"));
        }
        Ok(())
    }

    pub fn llc_sizes(&self) -> Vec<u64> {
        self.llc_size_sweep
            .clone()
            .unwrap_or_else(|| vec![self.cache.llc_capacity()])
    }
}

/// Misses per reuse hint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HintMisses {
    pub high: u64,
    pub moderate: u64,
    pub low: u64,
    pub default: u64,
}

impl HintMisses {
    pub fn of(stats: &SimStats) -> Self {
        HintMisses {
            high: stats.hint(ReuseHint::High).misses,
            moderate: stats.hint(ReuseHint::Moderate).misses,
            low: stats.hint(ReuseHint::Low).misses,
            default: stats.hint(ReuseHint::Default).misses,
        }
    }
}

impl fmt::Display for HintMisses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "high={};moderate={};low={};default={}",
            self.high, self.moderate, self.low, self.default
        )
    }
}

impl FromStr for HintMisses {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = HintMisses::default();
        for part in s.split(';') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::config(format!("bad hint breakdown {s:?}")))?;
            let value: u64 = value
                .parse()
                .map_err(|_| Error::config(format!("bad hint count {value:?}")))?;
            match key {
                "high" => out.high = value,
                "moderate" => out.moderate = value,
                "low" => out.low = value,
                "default" => out.default = value,
                _ => return Err(Error::config(format!("unknown hint {key:?}"))),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub graph: String,
    pub kernel: String,
    pub reorder: String,
    pub policy: String,
    pub llc_bytes: u64,
    pub llc_accesses: u64,
    pub llc_misses: u64,
    /// Percent.
    pub miss_elim_over_lru: f64,
    /// Percent of LLC accesses that target a Property array.
    pub property_access_fraction: f64,
    pub hint_miss_breakdown: HintMisses,
    /// Percent.
    pub miss_elim_over_drrip: f64,
}

pub const CSV_HEADER: [&str; 11] = [
    "graph",
    "kernel",
    "reorder",
    "policy",
    "llc_bytes",
    "llc_accesses",
    "llc_misses",
    "miss_elim_over_lru",
    "property_access_fraction",
    "hint_miss_breakdown",
    "miss_elim_over_drrip",
];

/// A reordered graph turned into an L1-filtered LLC access stream.
#[derive(Debug, Clone)]
pub struct Workload {
    pub graph: String,
    pub kernel: Kernel,
    pub reorder: ReorderAlgo,
    pub layout: MemoryLayout,
    pub stream: LlcStream,
    pub llc_breakdown: TraceBreakdown,
}

impl Workload {
    pub fn property_access_fraction(&self) -> f64 {
        self.llc_breakdown.property_fraction()
    }
}

/// Permutes `edges` with `algo` (degrees taken in the kernel's reuse
/// direction) and returns the relabeled edge list.
pub fn reorder_edges(edges: &EdgeList, kernel: Kernel, algo: ReorderAlgo) -> Result<EdgeList> {
    if algo == ReorderAlgo::Identity {
        return Ok(edges.clone());
    }
    let perm = reorder(&build_csr(edges, kernel.reuse_direction()), algo)?;
    apply_permutation(edges, &perm)
}

fn kernel_accesses<'a>(
    g: &'a crate::graph::CsrGraph,
    layout: &MemoryLayout,
    kernel: Kernel,
) -> Result<Box<dyn Iterator<Item = MemoryAccess> + 'a>> {
    Ok(match kernel {
        Kernel::PagerankPull => Box::new(pagerank_pull_accesses(g, layout)?),
        Kernel::SsspPush { rounds } => Box::new(sssp_push_accesses(g, layout, rounds)?),
    })
}

/// Reorders, traces and L1-filters one graph. `dump` receives the raw
/// (pre-L1) kernel trace in the binary record format.
pub fn prepare_workload(
    label: &str,
    edges: &EdgeList,
    kernel: Kernel,
    algo: ReorderAlgo,
    n_property_arrays: usize,
    cache: &CacheConfig,
    dump: Option<&Path>,
) -> Result<Workload> {
    if edges.vertex_count == 0 {
        return Err(Error::config("graph has no vertices"));
    }
    let reordered = reorder_edges(edges, kernel, algo)?;
    let g = build_csr(&reordered, kernel.traversal());
    drop(reordered);
    let layout = build_layout(g.vertex_count(), g.edge_count(), n_property_arrays)?;
    if let Some(path) = dump {
        dump_to_file(path, kernel_accesses(&g, &layout, kernel)?)?;
    }
    let stream = filter_l1(kernel_accesses(&g, &layout, kernel)?, cache)?;
    let mut llc_breakdown = TraceBreakdown::default();
    for acc in stream.iter() {
        llc_breakdown.add(layout.kind_of(acc.array_tag));
    }
    Ok(Workload {
        graph: label.to_string(),
        kernel,
        reorder: algo,
        layout,
        stream,
        llc_breakdown,
    })
}

/// Simulates `policies` at each LLC size. Regions are recomputed per size.
pub fn evaluate(
    workload: &Workload,
    policies: &[PolicyKind],
    cache: &CacheConfig,
    llc_sizes: &[u64],
) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::with_capacity(policies.len() * llc_sizes.len());
    for &bytes in llc_sizes {
        let cfg = cache.with_llc_capacity(bytes)?;
        let regions = RegionMap::from_layout(&workload.layout, cfg.llc_capacity())?;
        let mut done: Vec<(PolicyKind, SimStats)> = Vec::new();
        let mut stats_for = |kind: PolicyKind| -> Result<SimStats> {
            if let Some((_, s)) = done.iter().find(|(k, _)| *k == kind) {
                return Ok(s.clone());
            }
            let s = simulate_llc(&workload.stream, &cfg, kind, Some(&regions))?;
            done.push((kind, s.clone()));
            Ok(s)
        };
        let lru = stats_for(PolicyKind::Lru)?;
        let drrip = stats_for(PolicyKind::Drrip)?;
        for &kind in policies {
            let s = stats_for(kind)?;
            rows.push(ResultRow {
                graph: workload.graph.clone(),
                kernel: workload.kernel.to_string(),
                reorder: workload.reorder.to_string(),
                policy: kind.to_string(),
                llc_bytes: cfg.llc_capacity(),
                llc_accesses: s.llc.accesses,
                llc_misses: s.llc.misses,
                miss_elim_over_lru: miss_elimination_over(&lru, &s),
                property_access_fraction: 100.0 * workload.property_access_fraction(),
                hint_miss_breakdown: HintMisses::of(&s),
                miss_elim_over_drrip: miss_elimination_over(&drrip, &s),
            });
        }
    }
    Ok(rows)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    run_experiment_with_dump(cfg, None)
}

pub fn run_experiment_with_dump(cfg: &ExperimentConfig, dump: Option<&Path>) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let edges = cfg.graph.load(cfg.seed)?;
    let workload = prepare_workload(
        &cfg.graph.label(),
        &edges,
        cfg.kernel,
        cfg.reorder,
        cfg.n_property_arrays,
        &cfg.cache,
        dump,
    )?;
    drop(edges);
    evaluate(&workload, &cfg.policies, &cfg.cache, &cfg.llc_sizes())
}

fn row_record(row: &ResultRow) -> [String; 11] {
    [
        row.graph.clone(),
        row.kernel.clone(),
        row.reorder.clone(),
        row.policy.clone(),
        row.llc_bytes.to_string(),
        row.llc_accesses.to_string(),
        row.llc_misses.to_string(),
        format!("{:.4}", row.miss_elim_over_lru),
        format!("{:.4}", row.property_access_fraction),
        row.hint_miss_breakdown.to_string(),
        format!("{:.4}", row.miss_elim_over_drrip),
    ]
}

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row_record(row))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Writes `rows` to `path`. Refuses to create a file for an empty table.
pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(Error::contract("no result rows to write"));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(file, rows)
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::config(format!("unexpected CSV header {headers:?}")));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::config(format!("bad number {s:?}")))
    };
    let int = |s: &str| -> Result<u64> {
        s.parse()
            .map_err(|_| Error::config(format!("bad integer {s:?}")))
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(ResultRow {
                graph: rec[0].to_string(),
                kernel: rec[1].to_string(),
                reorder: rec[2].to_string(),
                policy: rec[3].to_string(),
                llc_bytes: int(&rec[4])?,
                llc_accesses: int(&rec[5])?,
                llc_misses: int(&rec[6])?,
                miss_elim_over_lru: num(&rec[7])?,
                property_access_fraction: num(&rec[8])?,
                hint_miss_breakdown: rec[9].parse()?,
                miss_elim_over_drrip: num(&rec[10])?,
            })
        })
        .collect()
}

pub fn skew_of(edges: &EdgeList) -> Result<DegreeSkewReport> {
    degree_skew_report(
        &build_csr(edges, Direction::InEdges),
        &build_csr(edges, Direction::OutEdges),
    )
}

pub fn format_skew_report(label: &str, r: &DegreeSkewReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "graph {label}: {} vertices, {} edges", r.vertex_count, r.edge_count);
    let _ = writeln!(s, "{:<10}{:>12}{:>16}{:>16}", "direction", "avg degree", "hot vertices", "edges to hot");
    for (dir, avg, hot, cov) in [
        ("in", r.avg_in_degree, r.hot_fraction_in, r.edge_coverage_in),
        ("out", r.avg_out_degree, r.hot_fraction_out, r.edge_coverage_out),
    ] {
        let _ = writeln!(
            s,
            "{:<10}{:>12.2}{:>15.2}%{:>15.2}%",
            dir,
            avg,
            100.0 * hot,
            100.0 * cov
        );
    }
    s
}

pub fn report_skew(source: &GraphSource, seed: u64) -> Result<String> {
    let edges = source.load(seed)?;
    Ok(format_skew_report(&source.label(), &skew_of(&edges)?))
}

/// Bytes of Property data owned by hot vertices in `dir`.
pub fn hot_property_footprint(edges: &EdgeList, dir: Direction, n_property_arrays: usize) -> u64 {
    let g = build_csr(edges, dir);
    let hot = (0..g.vertex_count()).filter(|&v| g.is_hot(v)).count() as u64;
    hot * crate::trace::PROPERTY_ELEM * n_property_arrays as u64
}

/// Largest valid LLC capacity not above `hi * footprint`, provided it is at
/// least `lo * footprint`.
pub fn llc_capacity_for(footprint: u64, lo: f64, hi: f64, cache: &CacheConfig) -> Option<u64> {
    let per_set = cache.block_size * cache.llc_ways as u64;
    let ceiling = (footprint as f64 * hi) as u64 / per_set;
    if ceiling == 0 {
        return None;
    }
    let sets = 1u64 << (63 - ceiling.leading_zeros());
    let bytes = sets * per_set;
    (bytes as f64 >= lo * footprint as f64 && cache.with_llc_capacity(bytes).is_ok()).then_some(bytes)
}
