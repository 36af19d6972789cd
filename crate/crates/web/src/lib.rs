//! WebAssembly bindings for the in-browser cache lab.
//!
//! Each exported function takes plain numbers and strings and returns a JSON
//! document; the `*_report` functions underneath are ordinary Rust so they
//! can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use grasp_core::cachesim::{
    miss_elimination_over, simulate_llc, CacheConfig, PolicyKind, RegionMap, ReuseHint,
};
use grasp_core::graph::{build_csr, generate_rmat, Direction, EdgeList, RmatParams};
use grasp_core::harness::{prepare_workload, skew_of, Kernel, Workload};
use grasp_core::reorder::ReorderAlgo;
use grasp_core::{Error, Result};

/// Largest graph the page will build; a scale-16 graph traces in well under
/// a second in the browser.
pub const MAX_SCALE: u32 = 16;

#[derive(Debug, Serialize)]
pub struct SkewReport {
    pub vertices: usize,
    pub edges: usize,
    pub hot_fraction_in: f64,
    pub edge_coverage_in: f64,
    pub hot_fraction_out: f64,
    pub edge_coverage_out: f64,
    /// `histogram[k]` counts vertices whose in-degree lies in `[2^k, 2^(k+1))`;
    /// zero-degree vertices are in `zero_degree`.
    pub histogram: Vec<u64>,
    pub zero_degree: u64,
}

#[derive(Debug, Serialize)]
pub struct PolicyRow {
    pub policy: String,
    pub misses: u64,
    pub miss_rate: f64,
    pub elim_over_lru: f64,
    pub elim_over_drrip: f64,
}

#[derive(Debug, Serialize)]
pub struct PolicyReport {
    pub llc_bytes: u64,
    pub llc_accesses: u64,
    pub property_fraction: f64,
    pub rows: Vec<PolicyRow>,
}

#[derive(Debug, Serialize)]
pub struct RegionReport {
    pub vertices: usize,
    pub hot_vertices: usize,
    pub llc_bytes: u64,
    /// Vertex id ranges `[start, end)` covered by each region.
    pub high: (u64, u64),
    pub moderate: (u64, u64),
    /// Share of LLC accesses carrying each hint, in High/Moderate/Low order.
    pub hint_share: [f64; 3],
    /// Share of hot vertices whose Property element falls in the High region.
    pub hot_in_high: f64,
}

fn graph(scale: u32, avg_degree: u32, skewed: bool, seed: u64) -> Result<EdgeList> {
    if scale > MAX_SCALE {
        return Err(Error::Config(format!("scale {scale} exceeds the demo limit of {MAX_SCALE}")));
    }
    let params = if skewed {
        RmatParams::kronecker(scale, avg_degree, seed)
    } else {
        RmatParams::uniform(scale, avg_degree, seed)
    };
    generate_rmat(&params)
}

fn cache_for(llc_kb: u32) -> Result<CacheConfig> {
    let base = CacheConfig {
        l1_sets: 16,
        l1_ways: 4,
        ..CacheConfig::default()
    };
    base.with_llc_capacity(llc_kb as u64 * 1024)
}

fn workload(scale: u32, avg_degree: u32, skewed: bool, reorder: &str, cache: &CacheConfig) -> Result<Workload> {
    let edges = graph(scale, avg_degree, skewed, 1)?;
    let algo: ReorderAlgo = reorder.parse()?;
    prepare_workload("demo", &edges, Kernel::PagerankPull, algo, 1, cache, None)
}

pub fn skew_report(scale: u32, avg_degree: u32, a: f64, b: f64, c: f64, seed: u64) -> Result<SkewReport> {
    if scale > MAX_SCALE {
        return Err(Error::Config(format!("scale {scale} exceeds the demo limit of {MAX_SCALE}")));
    }
    let params = RmatParams {
        scale,
        avg_degree,
        a,
        b,
        c,
        d: 1.0 - a - b - c,
        seed,
    };
    let edges = generate_rmat(&params)?;
    let r = skew_of(&edges)?;
    let g_in = build_csr(&edges, Direction::InEdges);
    let mut histogram = Vec::new();
    let mut zero_degree = 0;
    for d in g_in.degrees() {
        if d == 0 {
            zero_degree += 1;
            continue;
        }
        let bucket = d.ilog2() as usize;
        if histogram.len() <= bucket {
            histogram.resize(bucket + 1, 0);
        }
        histogram[bucket] += 1;
    }
    Ok(SkewReport {
        vertices: r.vertex_count,
        edges: r.edge_count,
        hot_fraction_in: r.hot_fraction_in,
        edge_coverage_in: r.edge_coverage_in,
        hot_fraction_out: r.hot_fraction_out,
        edge_coverage_out: r.edge_coverage_out,
        histogram,
        zero_degree,
    })
}

pub fn policy_report(
    scale: u32,
    avg_degree: u32,
    skewed: bool,
    reorder: &str,
    llc_kb: u32,
    policies: &str,
) -> Result<PolicyReport> {
    let cache = cache_for(llc_kb)?;
    let policies = PolicyKind::parse_list(policies)?;
    let w = workload(scale, avg_degree, skewed, reorder, &cache)?;
    let regions = RegionMap::from_layout(&w.layout, cache.llc_capacity())?;
    let run = |p| simulate_llc(&w.stream, &cache, p, Some(&regions));
    let lru = run(PolicyKind::Lru)?;
    let drrip = run(PolicyKind::Drrip)?;
    let rows = policies
        .into_iter()
        .map(|p| {
            let s = run(p)?;
            Ok(PolicyRow {
                policy: p.to_string(),
                misses: s.llc.misses,
                miss_rate: s.llc.miss_rate(),
                elim_over_lru: miss_elimination_over(&lru, &s),
                elim_over_drrip: miss_elimination_over(&drrip, &s),
            })
        })
        .collect::<Result<_>>()?;
    Ok(PolicyReport {
        llc_bytes: cache.llc_capacity(),
        llc_accesses: lru.llc.accesses,
        property_fraction: w.property_access_fraction(),
        rows,
    })
}

pub fn region_report(scale: u32, avg_degree: u32, skewed: bool, reorder: &str, llc_kb: u32) -> Result<RegionReport> {
    let cache = cache_for(llc_kb)?;
    let edges = graph(scale, avg_degree, skewed, 1)?;
    let algo: ReorderAlgo = reorder.parse()?;
    let w = prepare_workload("demo", &edges, Kernel::PagerankPull, algo, 1, &cache, None)?;
    let regions = RegionMap::from_layout(&w.layout, cache.llc_capacity())?;
    let prop = regions
        .arrays()
        .first()
        .ok_or_else(|| Error::Contract("layout has no property array".into()))?;
    let elem = grasp_core::trace::PROPERTY_ELEM;
    let to_ids = |(lo, hi): (u64, u64)| ((lo - prop.abr.start) / elem, (hi - prop.abr.start) / elem);
    let high = to_ids((prop.high.start, prop.high.end));
    let moderate = to_ids((prop.moderate.start, prop.moderate.end));

    let s = simulate_llc(&w.stream, &cache, PolicyKind::Lru, Some(&regions))?;
    let total = s.llc.accesses.max(1) as f64;
    let share = |h: ReuseHint| s.hint(h).accesses as f64 / total;

    // hotness is judged in the direction whose Property reads carry reuse
    let reordered = grasp_core::harness::reorder_edges(&edges, Kernel::PagerankPull, algo)?;
    let g = build_csr(&reordered, Kernel::PagerankPull.reuse_direction());
    let hot: Vec<usize> = (0..g.vertex_count()).filter(|&v| g.is_hot(v)).collect();
    let hot_in_high = match hot.len() {
        0 => 0.0,
        n => hot.iter().filter(|&&v| (v as u64) < high.1).count() as f64 / n as f64,
    };
    Ok(RegionReport {
        vertices: g.vertex_count(),
        hot_vertices: hot.len(),
        llc_bytes: cache.llc_capacity(),
        high,
        moderate,
        hint_share: [share(ReuseHint::High), share(ReuseHint::Moderate), share(ReuseHint::Low)],
        hot_in_high,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
        .and_then(|v| serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())))
}

/// In/out skew statistics and a log2 in-degree histogram for an R-MAT graph.
#[wasm_bindgen]
pub fn degree_skew(scale: u32, avg_degree: u32, a: f64, b: f64, c: f64, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(skew_report(scale, avg_degree, a, b, c, seed as u64))
}

/// LLC misses of each policy for one PageRank iteration.
#[wasm_bindgen]
pub fn compare_policies(
    scale: u32,
    avg_degree: u32,
    skewed: bool,
    reorder: &str,
    llc_kb: u32,
    policies: &str,
) -> std::result::Result<String, JsValue> {
    to_js(policy_report(scale, avg_degree, skewed, reorder, llc_kb, policies))
}

/// Where the High and Moderate reuse regions land after reordering.
#[wasm_bindgen]
pub fn reuse_regions(scale: u32, avg_degree: u32, skewed: bool, reorder: &str, llc_kb: u32) -> std::result::Result<String, JsValue> {
    to_js(region_report(scale, avg_degree, skewed, reorder, llc_kb))
}
