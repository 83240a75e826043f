//! The `mixnet` command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
//! Fit results go to stdout as JSON unless `--out` is given; tables are CSV.
//! Every output file is written to a temporary sibling and renamed into
//! place only after the whole command succeeded.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;

use crate::bench::{self, BenchSpec};
use crate::error::{Error, Result};
use crate::family::ModelParams;
use crate::fit::{self, Algorithm, FitConfig, FitResult};
use crate::graph::{self, EdgeKind, Graph, ParseOptions};
use crate::metrics;
use crate::rng::{self, derive_seed};
use crate::stats::{PairConvention, Tau};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "mixnet", version, about = "Clustering of large and growing networks with MixNet block models")]
pub struct Cli {
    /// Worker threads for restarts and replicates (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model with a fixed number of classes.
    Fit(FitArgs),
    /// Scan a range of class counts and rank them by ICL.
    Select(SelectArgs),
    /// Sample a graph with planted classes.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Compare partitions (ARI) and score them on a graph (modularity).
    Metrics(MetricsArgs),
    /// Run a benchmark spec and write its CSV tables.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Bernoulli,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    OnlineVem,
    OnlineSaem,
    OnlineCem,
    BatchVem,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::OnlineVem => Algorithm::OnlineVem,
            AlgoArg::OnlineSaem => Algorithm::OnlineSaem,
            AlgoArg::OnlineCem => Algorithm::OnlineCem,
            AlgoArg::BatchVem => Algorithm::BatchVem,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StreamOrder {
    /// Nodes arrive in order of first appearance in the input.
    Input,
    /// Seeded random arrival order.
    Shuffle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairsArg {
    ExactPairs,
    WithDiagonal,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list: `src dst [weight]` per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Node list sidecar fixing node order and declaring isolated nodes.
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bernoulli")]
    pub model: ModelArg,
    #[arg(long)]
    pub directed: bool,
    /// Keep self-loops instead of dropping them.
    #[arg(long)]
    pub self_loops: bool,
}

impl GraphArgs {
    fn load(&self) -> Result<Graph> {
        let kind = match self.model {
            ModelArg::Bernoulli => EdgeKind::Binary,
            ModelArg::Poisson => EdgeKind::Count,
        };
        let opts = ParseOptions::default().kind(kind).directed(self.directed).self_loops(self.self_loops);
        let names = match &self.nodes {
            Some(p) => graph::parse_node_list(&read(p)?),
            None => Vec::new(),
        };
        graph::parse_edge_list_with_nodes(&read(&self.input)?, &names, &opts)
    }
}

#[derive(Debug, Args)]
pub struct FitFlags {
    #[arg(long, value_enum, default_value = "online-vem")]
    pub algo: AlgoArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub starts: Option<usize>,
    /// Size of the warm-start sample for online algorithms.
    #[arg(long)]
    pub n0: Option<usize>,
    /// Refinement sweeps after the online pass.
    #[arg(long)]
    pub post_passes: Option<usize>,
    #[arg(long, value_enum, default_value = "input")]
    pub stream_order: StreamOrder,
    #[arg(long, value_enum)]
    pub pairs: Option<PairsArg>,
    /// Report zero seconds so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

impl FitFlags {
    fn config(&self) -> FitConfig {
        let mut cfg = FitConfig { seed: self.seed, ..Default::default() };
        if let Some(s) = self.starts {
            cfg.starts = s;
        }
        if let Some(n0) = self.n0 {
            cfg.n0 = n0;
        }
        if let Some(p) = self.post_passes {
            cfg.post_passes = p;
        }
        if let Some(p) = self.pairs {
            cfg.convention = match p {
                PairsArg::ExactPairs => PairConvention::Distinct,
                PairsArg::WithDiagonal => PairConvention::WithDiagonal,
            };
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub q: usize,
    #[command(flatten)]
    pub flags: FitFlags,
    /// Include the soft assignment matrix in the JSON.
    #[arg(long)]
    pub tau: bool,
    /// Also write a `name<TAB>class` labels file.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 1)]
    pub qmin: usize,
    #[arg(long)]
    pub qmax: usize,
    #[command(flatten)]
    pub flags: FitFlags,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimOutput {
    /// Edge list destination.
    #[arg(long)]
    pub edges: PathBuf,
    /// Ground-truth labels destination.
    #[arg(long)]
    pub labels: PathBuf,
    /// Optional node list, preserving isolated nodes.
    #[arg(long)]
    pub nodes: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// Within-class probability `lambda`, between-class `eps`, equal class sizes.
    Affiliation {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        directed: bool,
        #[command(flatten)]
        out: SimOutput,
    },
    /// General block model from a parameter JSON `{family, directed, alpha, psi}`.
    Mixnet {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        params: PathBuf,
        #[command(flatten)]
        out: SimOutput,
    },
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Reference labels file.
    #[arg(long)]
    pub a: PathBuf,
    /// Second labels file.
    #[arg(long, conflicts_with = "fit")]
    pub b: Option<PathBuf>,
    /// Fit JSON (with node names) to compare against `--a`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Edge list for modularity of the `--a` partition.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    pub nodes: Option<PathBuf>,
    #[arg(long, requires = "input")]
    pub directed: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory (overrides the spec).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Lift the desk-scale caps on replicates and batch sizes.
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub no_timing: bool,
}

/// Entry point used by the binary.
pub fn main() -> i32 {
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run(std::env::args_os(), &mut out, &mut err)
}

/// Parses `args` and runs the command, writing to the given streams.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(out, "{}", e.render());
                EXIT_OK
            };
            return code;
        }
    };
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(Error::param("--threads must be at least 1")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cli.command, &mut buf)),
            Err(e) => Err(Error::param(format!("cannot build thread pool: {e}"))),
        },
        None => execute(&cli.command, &mut buf),
    };
    match result.and_then(|()| out.write_all(&buf).map_err(Error::from)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParam(_) => EXIT_USAGE,
        Error::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Files staged by a command, committed together at the end.
#[derive(Default)]
struct Outputs(Vec<(PathBuf, Vec<u8>)>);

impl Outputs {
    fn add(&mut self, path: &Path, bytes: impl Into<Vec<u8>>) {
        self.0.push((path.to_path_buf(), bytes.into()));
    }

    fn commit(self) -> Result<()> {
        let mut staged = Vec::new();
        for (path, bytes) in &self.0 {
            let tmp = tmp_path(path);
            if let Err(e) = fs::write(&tmp, bytes) {
                for t in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))));
            }
            staged.push(tmp);
        }
        for ((path, _), tmp) in self.0.iter().zip(&staged) {
            fs::rename(tmp, path)?;
        }
        Ok(())
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}

fn emit(out: &mut dyn Write, files: &mut Outputs, dest: Option<&PathBuf>, text: String) -> Result<()> {
    match dest {
        Some(p) => files.add(p, text),
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cmd: &Command, out: &mut Vec<u8>) -> Result<()> {
    match cmd {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Select(a) => cmd_select(a, out),
        Command::Simulate(s) => cmd_simulate(s),
        Command::Metrics(a) => cmd_metrics(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    }
}

/// Fits `g` in the requested arrival order and maps the result back to
/// the input order.
fn fit_ordered(g: &Graph, q: usize, flags: &FitFlags) -> Result<FitResult> {
    let cfg = flags.config();
    let algo = Algorithm::from(flags.algo);
    let mut res = match flags.stream_order {
        StreamOrder::Input => fit::fit(g, q, algo, &cfg)?,
        StreamOrder::Shuffle => {
            let mut order: Vec<usize> = (0..g.n()).collect();
            order.shuffle(&mut rng::seeded(derive_seed(cfg.seed, &[u64::MAX])));
            let mut r = fit::fit(&g.permuted(&order)?, q, algo, &cfg)?;
            let mut labels = vec![0; g.n()];
            let mut rows = vec![Vec::new(); g.n()];
            for (k, &old) in order.iter().enumerate() {
                labels[old] = r.labels[k];
                rows[old] = r.tau.row(k).to_vec();
            }
            r.labels = labels;
            r.tau = Tau::from_rows(&rows)?;
            r
        }
    };
    if flags.no_timing {
        res.seconds = 0.0;
    }
    Ok(res)
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> Result<()> {
    if a.q == 0 {
        return Err(Error::param("--q must be at least 1"));
    }
    let g = a.graph.load()?;
    let res = fit_ordered(&g, a.q, &a.flags)?;
    let mut report = res.report(a.tau);
    report.nodes = g.names().to_vec();
    let mut files = Outputs::default();
    if let Some(p) = &a.labels_out {
        files.add(p, metrics::write_labels(g.names(), &res.labels));
    }
    let json = serde_json::to_string_pretty(&report)? + "\n";
    emit(out, &mut files, a.out.as_ref(), json)?;
    files.commit()
}

fn cmd_select(a: &SelectArgs, out: &mut dyn Write) -> Result<()> {
    let g = a.graph.load()?;
    if a.qmin < 1 || a.qmin > a.qmax || a.qmax > g.n() {
        return Err(Error::param(format!("need 1 <= qmin <= qmax <= n, got {}..{} with n = {}", a.qmin, a.qmax, g.n())));
    }
    let mut rows = Vec::new();
    for q in a.qmin..=a.qmax {
        let r = fit_ordered(&g, q, &a.flags)?;
        rows.push(metrics::SelectRow { q, j: r.j, loglik: r.loglik, icl: r.icl });
    }
    let best = (0..rows.len()).fold(0, |b, k| if rows[k].icl > rows[b].icl { k } else { b });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["q", "J", "loglik", "icl", "best"])?;
    for (k, r) in rows.iter().enumerate() {
        w.write_record([r.q.to_string(), format!("{:.6}", r.j), format!("{:.6}", r.loglik), format!("{:.6}", r.icl), u8::from(k == best).to_string()])?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8");
    let mut files = Outputs::default();
    emit(out, &mut files, a.out.as_ref(), text)?;
    files.commit()
}

fn cmd_simulate(s: &SimulateCmd) -> Result<()> {
    let (g, truth, dest) = match s {
        SimulateCmd::Affiliation { n, q, lambda, eps, directed, out } => {
            if *q == 0 {
                return Err(Error::param("--q must be at least 1"));
            }
            let props = vec![1.0 / *q as f64; *q];
            let (g, t) = graph::sample_affiliation(*n, *q, *lambda, *eps, &props, *directed, out.seed)?;
            (g, t, out)
        }
        SimulateCmd::Mixnet { n, params, out } => {
            let p: ModelParams = serde_json::from_str(&read(params)?)?;
            let (g, t) = graph::sample_mixnet(*n, &p, out.seed)?;
            (g, t, out)
        }
    };
    let names: Vec<String> = if g.names().is_empty() { (0..g.n()).map(|i| i.to_string()).collect() } else { g.names().to_vec() };
    let mut files = Outputs::default();
    files.add(&dest.edges, g.to_edge_list());
    files.add(&dest.labels, metrics::write_labels(&names, &truth.labels));
    if let Some(p) = &dest.nodes {
        files.add(p, g.to_node_list());
    }
    files.commit()
}

#[derive(serde::Serialize)]
struct MetricsReport {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ari: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    modularity: Option<f64>,
}

fn cmd_metrics(a: &MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let first = metrics::parse_labels(&read(&a.a)?)?;
    let ari = match (&a.b, &a.fit) {
        (Some(b), _) => {
            let second = metrics::parse_labels(&read(b)?)?;
            let (za, zb) = metrics::align_labels(&first, &second)?;
            Some(metrics::adjusted_rand(&za, &zb)?)
        }
        (None, Some(f)) => {
            let report: fit::FitReport = serde_json::from_str(&read(f)?)?;
            if report.nodes.len() != report.labels.len() {
                return Err(Error::dim("fit JSON carries no node names"));
            }
            let second: Vec<(String, usize)> = report.nodes.into_iter().zip(report.labels).collect();
            let (za, zb) = metrics::align_labels(&first, &second)?;
            Some(metrics::adjusted_rand(&za, &zb)?)
        }
        (None, None) => None,
    };
    let modularity = match &a.input {
        Some(p) => {
            let names = match &a.nodes {
                Some(n) => graph::parse_node_list(&read(n)?),
                None => Vec::new(),
            };
            let g = graph::parse_edge_list_with_nodes(&read(p)?, &names, &ParseOptions::default().directed(a.directed))?;
            Some(metrics::modularity(&g, &metrics::labels_for(g.names(), &first)?)?)
        }
        None => None,
    };
    if ari.is_none() && modularity.is_none() {
        return Err(Error::param("nothing to compute: pass --b, --fit or --input"));
    }
    let report = MetricsReport { n: first.len(), ari, modularity };
    out.write_all((serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    Ok(())
}

fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = BenchSpec::load(&a.spec)?;
    if let Some(o) = &a.out {
        spec.out_dir = o.clone();
    }
    spec.full |= a.full;
    if a.no_timing {
        spec.record_timing = false;
    }
    let result = bench::run_grid(&spec)?;
    let tables = bench::render_tables(&result)?;
    fs::create_dir_all(&spec.out_dir)?;
    let mut files = Outputs::default();
    for (name, bytes) in tables {
        files.add(&spec.out_dir.join(name), bytes);
    }
    files.commit()?;
    for name in bench::TABLES {
        writeln!(out, "{}", spec.out_dir.join(name).display())?;
    }
    Ok(())
}
