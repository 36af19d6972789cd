use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use grasp_core::cachesim::{
    filter_l1, simulate_llc, AbrPair, CacheConfig, PolicyKind, RegionMap, SimStats,
};
use grasp_core::harness::{
    emit_csv, report_skew, run_experiment_with_dump, write_csv, ExperimentConfig, GraphSource,
    HintMisses, Kernel, ResultRow,
};
use grasp_core::reorder::ReorderAlgo;
use grasp_core::trace::load_dump;
use grasp_core::{Error, Result};

#[derive(Parser)]
#[command(name = "grasp-lab", version, about = "Graph-aware LLC replacement lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, reorder, trace and simulate a graph; write a CSV table.
    Run(RunArgs),
    /// Print hot-vertex fraction and edge coverage for a graph.
    Skew(GraphArgs),
    /// Replay a binary trace dump through the cache model.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Plain-text edge list.
    #[arg(long, conflicts_with_all = ["rmat", "uniform"])]
    graph: Option<PathBuf>,
    /// R-MAT graph: scale,deg[,a,b,c,d].
    #[arg(long, conflicts_with = "uniform")]
    rmat: Option<String>,
    /// Uniform R-MAT graph: scale,deg.
    #[arg(long)]
    uniform: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl GraphArgs {
    fn source(&self) -> Result<GraphSource> {
        match (&self.graph, &self.rmat, &self.uniform) {
            (Some(path), _, _) => Ok(GraphSource::File(path.clone())),
            (_, Some(arg), _) => GraphSource::parse_rmat(arg),
            (_, _, Some(arg)) => GraphSource::parse_uniform(arg),
            _ => Ok(GraphSource::kronecker(20, 16)),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct CacheArgs {
    /// Comma-separated LLC policies.
    #[arg(long, default_value = "lru,drrip,grasp")]
    policy: String,
    /// LLC capacity in KB; a comma list sweeps sizes.
    #[arg(long, default_value = "1024")]
    llc_kb: String,
    #[arg(long, default_value_t = 16)]
    ways: usize,
    #[arg(long, default_value_t = 64)]
    block: u64,
    #[arg(long, value_enum, default_value = "on")]
    l1: Toggle,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CacheArgs {
    fn sizes(&self) -> Result<Vec<u64>> {
        self.llc_kb
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map(|kb| kb * 1024)
                    .map_err(|_| Error::Config(format!("bad LLC size {s:?}")))
            })
            .collect()
    }

    fn config(&self) -> Result<(CacheConfig, Vec<u64>)> {
        let sizes = self.sizes()?;
        const L1_BYTES: u64 = 32 * 1024;
        const L1_WAYS: usize = 8;
        let base = CacheConfig {
            block_size: self.block,
            llc_sets: 1,
            llc_ways: self.ways,
            l1_enabled: matches!(self.l1, Toggle::On),
            l1_sets: (L1_BYTES / (self.block * L1_WAYS as u64)).max(1) as usize,
            l1_ways: L1_WAYS,
        };
        let first = *sizes
            .first()
            .ok_or_else(|| Error::Config("no LLC size given".into()))?;
        Ok((base.with_llc_capacity(first)?, sizes))
    }

    fn write(&self, rows: &[ResultRow]) -> Result<()> {
        match &self.out {
            Some(path) => emit_csv(rows, path),
            None => write_csv(io::stdout().lock(), rows),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "pagerank")]
    kernel: String,
    /// Bellman-Ford rounds for sssp.
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    #[arg(long, default_value = "dbg")]
    reorder: String,
    #[arg(long, default_value_t = grasp_core::reorder::DEFAULT_DBG_GROUPS)]
    dbg_groups: u32,
    #[arg(long, default_value_t = 1)]
    prop_arrays: usize,
    /// Write the raw kernel trace as binary records.
    #[arg(long)]
    dump_trace: Option<PathBuf>,
    #[command(flatten)]
    cache: CacheArgs,
}

#[derive(Args)]
struct ReplayArgs {
    /// Binary trace dump.
    #[arg(long)]
    trace: PathBuf,
    /// Property array bounds as start:end (hex or decimal); repeatable.
    #[arg(long)]
    abr: Vec<String>,
    #[command(flatten)]
    cache: CacheArgs,
}

fn parse_addr(s: &str) -> Result<u64> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| Error::Config(format!("bad address {s:?}")))
}

fn run(args: RunArgs) -> Result<()> {
    let (cache, sizes) = args.cache.config()?;
    let mut reorder: ReorderAlgo = args.reorder.parse()?;
    if let ReorderAlgo::Dbg { groups } = &mut reorder {
        *groups = args.dbg_groups;
    }
    let cfg = ExperimentConfig {
        graph: args.graph.source()?,
        kernel: Kernel::parse(&args.kernel, args.rounds)?,
        reorder,
        policies: PolicyKind::parse_list(&args.cache.policy)?,
        cache,
        llc_size_sweep: Some(sizes),
        n_property_arrays: args.prop_arrays,
        seed: args.graph.seed,
    };
    let rows = run_experiment_with_dump(&cfg, args.dump_trace.as_deref())?;
    args.cache.write(&rows)
}

fn replay(args: ReplayArgs) -> Result<()> {
    let (cache, sizes) = args.cache.config()?;
    let policies = PolicyKind::parse_list(&args.cache.policy)?;
    let abrs = args
        .abr
        .iter()
        .map(|arg| {
            let (start, end) = arg
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("bad ABR {arg:?}, want start:end")))?;
            AbrPair::new(parse_addr(start)?, parse_addr(end)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let accesses = load_dump(&args.trace)?;
    let stream = filter_l1(accesses, &cache)?;
    let in_abr = |a: u64| abrs.iter().any(|r| (r.start..r.end).contains(&a));
    let property = stream.iter().filter(|a| in_abr(a.address)).count();
    let property_pct = match stream.len() {
        0 => 0.0,
        n => 100.0 * property as f64 / n as f64,
    };
    let label = args
        .trace
        .file_stem()
        .map_or_else(|| "trace".to_string(), |s| s.to_string_lossy().into_owned());

    let mut rows = Vec::new();
    for bytes in sizes {
        let cfg = cache.with_llc_capacity(bytes)?;
        let regions = if abrs.is_empty() {
            None
        } else {
            Some(RegionMap::new(&abrs, cfg.llc_capacity())?)
        };
        let sim = |p| simulate_llc(&stream, &cfg, p, regions.as_ref());
        let lru = sim(PolicyKind::Lru)?;
        let drrip = sim(PolicyKind::Drrip)?;
        for &p in &policies {
            let s: SimStats = sim(p)?;
            rows.push(ResultRow {
                graph: label.clone(),
                kernel: "replay".into(),
                reorder: "-".into(),
                policy: p.to_string(),
                llc_bytes: bytes,
                llc_accesses: s.llc.accesses,
                llc_misses: s.llc.misses,
                miss_elim_over_lru: grasp_core::cachesim::miss_elimination_over(&lru, &s),
                property_access_fraction: property_pct,
                hint_miss_breakdown: HintMisses::of(&s),
                miss_elim_over_drrip: grasp_core::cachesim::miss_elimination_over(&drrip, &s),
            });
        }
    }
    args.cache.write(&rows)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Skew(args) => args
            .source()
            .and_then(|src| report_skew(&src, args.seed))
            .map(|text| print!("{text}")),
        Command::Replay(args) => replay(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grasp-lab: {e}");
            ExitCode::FAILURE
        }
    }
}
