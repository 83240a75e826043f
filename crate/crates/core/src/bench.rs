//! Simulation benchmarks: the affiliation grid and growing networks.
//!
//! A [`BenchSpec`] lists affiliation models, class counts, sizes and
//! algorithms. Every `(model, q, n, replicate)` cell samples one graph that
//! all algorithms share; replicates run in parallel and results are merged
//! in spec order, so the CSV bytes depend only on the master seed (and on
//! timing, unless disabled).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{EdgeFamily, ModelParams};
use crate::fit::{self, Algorithm, FitConfig, OnlineFitter};
use crate::graph::{grow_mixnet, sample_affiliation, sample_mixnet};
use crate::metrics::{adjusted_rand, bias_rmse, BiasRmse};
use crate::rng::{self, derive_seed};

/// Without `full`, batch runs above this size are skipped.
pub const DESK_MAX_BATCH_N: usize = 1000;
/// Without `full`, replicates are capped here.
pub const DESK_MAX_REPLICATES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffiliationModel {
    pub name: String,
    pub lambda: f64,
    pub eps: f64,
}

/// The five reference affiliation models, `λ = 1 − ε`.
pub fn reference_models() -> Vec<AffiliationModel> {
    [(0.3, 0.7), (0.35, 0.65), (0.4, 0.6), (0.5, 0.5), (0.9, 0.1)]
        .iter()
        .enumerate()
        .map(|(i, &(eps, lambda))| AffiliationModel { name: (i + 1).to_string(), lambda, eps })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    /// Built-in heterogeneous 11-class model, see [`eleven_class_template`].
    ElevenClass,
    Custom(ModelParams),
}

impl Template {
    pub fn params(&self) -> ModelParams {
        match self {
            Template::ElevenClass => eleven_class_template(),
            Template::Custom(p) => p.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub template: Template,
    pub initial: usize,
    /// Nodes added at each later stage.
    pub additions: Vec<usize>,
    pub algorithm: Algorithm,
    #[serde(default = "one")]
    pub replicates: usize,
    /// Largest classes tried per split move after each stage; 0 disables
    /// the moves.
    #[serde(default = "three")]
    pub split_candidates: usize,
}

fn one() -> usize {
    1
}

fn three() -> usize {
    3
}

const SPLIT_SWEEPS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default = "reference_models")]
    pub models: Vec<AffiliationModel>,
    pub q: Vec<usize>,
    pub n: Vec<usize>,
    pub replicates: usize,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub directed: bool,
    /// Lifts the desk-scale caps.
    #[serde(default)]
    pub full: bool,
    #[serde(default = "yes")]
    pub record_timing: bool,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub growth: Option<GrowthSpec>,
    /// Directory for the CSV tables; relative paths resolve against the
    /// spec file's directory when loaded from disk.
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

fn yes() -> bool {
    true
}

fn default_out() -> PathBuf {
    PathBuf::from("bench-out")
}

impl BenchSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: BenchSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut spec = Self::from_json(&fs::read_to_string(path)?)?;
        if spec.out_dir.is_relative() {
            if let Some(dir) = path.parent() {
                spec.out_dir = dir.join(&spec.out_dir);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::param("replicates must be at least 1"));
        }
        if self.q.iter().any(|&q| q < 1) || self.n.iter().any(|&n| n < 2) {
            return Err(Error::param("q must be at least 1 and n at least 2"));
        }
        for m in &self.models {
            for p in [m.lambda, m.eps] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::param(format!("model {}: probability {p} outside [0, 1]", m.name)));
                }
            }
        }
        for &q in &self.q {
            for &n in &self.n {
                if q > n {
                    return Err(Error::param(format!("q = {q} exceeds n = {n}")));
                }
            }
        }
        self.fit.validate()?;
        if let Some(g) = &self.growth {
            if !g.algorithm.is_online() {
                return Err(Error::param("growth runs need an online algorithm"));
            }
            if g.initial < 1 || g.replicates < 1 || g.additions.contains(&0) {
                return Err(Error::param("growth stages must add nodes"));
            }
            if g.template.params().q() > g.initial {
                return Err(Error::param("initial graph smaller than the template's class count"));
            }
        }
        Ok(())
    }

    fn effective_replicates(&self) -> usize {
        if self.full {
            self.replicates
        } else {
            self.replicates.min(DESK_MAX_REPLICATES)
        }
    }

    fn runs(&self, algo: Algorithm, n: usize) -> bool {
        self.full || algo != Algorithm::BatchVem || n <= DESK_MAX_BATCH_N
    }
}

/// One fitted replicate.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRun {
    pub model: usize,
    pub q: usize,
    pub n: usize,
    pub algo: Algorithm,
    pub replicate: usize,
    pub ari: f64,
    pub seconds: f64,
    pub params: ModelParams,
}

/// Aggregate over the replicates of one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub model: String,
    pub lambda: f64,
    pub eps: f64,
    pub q: usize,
    pub n: usize,
    pub algo: Algorithm,
    pub replicates: usize,
    pub bias: BiasRmse,
    pub ari_mean: f64,
    pub ari_sd: f64,
    pub time_mean: f64,
    pub time_sd: f64,
}

/// Growth row: one stage of one replicate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub replicate: usize,
    pub stage: usize,
    pub n: usize,
    pub algo: Algorithm,
    pub ari: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchOutput {
    pub runs: Vec<GridRun>,
    pub cells: Vec<CellSummary>,
    pub growth: Vec<GrowthRow>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

struct Job {
    model: usize,
    q: usize,
    n: usize,
    replicate: usize,
}

/// Runs the affiliation grid (and the growth block, if any) in memory.
pub fn run_grid(spec: &BenchSpec) -> Result<BenchOutput> {
    spec.validate()?;
    let reps = spec.effective_replicates();
    let mut jobs = Vec::new();
    for model in 0..spec.models.len() {
        for &q in &spec.q {
            for &n in &spec.n {
                for replicate in 0..reps {
                    jobs.push(Job { model, q, n, replicate });
                }
            }
        }
    }
    let per_job: Vec<Result<Vec<GridRun>>> = jobs.par_iter().map(|job| run_job(spec, job)).collect();
    let mut runs = Vec::new();
    for r in per_job {
        runs.extend(r?);
    }
    let cells = summarize(spec, &runs)?;
    let growth = match &spec.growth {
        Some(g) => run_growth(g, &spec.fit, derive_seed(spec.seed, &[u64::MAX]), spec.record_timing)?,
        None => Vec::new(),
    };
    Ok(BenchOutput { runs, cells, growth })
}

fn run_job(spec: &BenchSpec, job: &Job) -> Result<Vec<GridRun>> {
    let m = &spec.models[job.model];
    let keys = [job.model as u64, job.q as u64, job.n as u64, job.replicate as u64];
    let props = vec![1.0 / job.q as f64; job.q];
    let (g, truth) = sample_affiliation(job.n, job.q, m.lambda, m.eps, &props, spec.directed, derive_seed(spec.seed, &keys))?;
    let cfg = FitConfig { seed: derive_seed(spec.seed, &[keys[0], keys[1], keys[2], keys[3], 1]), ..spec.fit.clone() };
    let mut out = Vec::new();
    for &algo in &spec.algorithms {
        if !spec.runs(algo, job.n) {
            continue;
        }
        let res = fit::fit(&g, job.q, algo, &cfg)?;
        out.push(GridRun {
            model: job.model,
            q: job.q,
            n: job.n,
            algo,
            replicate: job.replicate,
            ari: adjusted_rand(&res.labels, &truth.labels)?,
            seconds: if spec.record_timing { res.seconds } else { 0.0 },
            params: res.params,
        });
    }
    Ok(out)
}

fn summarize(spec: &BenchSpec, runs: &[GridRun]) -> Result<Vec<CellSummary>> {
    let mut cells = Vec::new();
    for (mi, m) in spec.models.iter().enumerate() {
        for &q in &spec.q {
            for &n in &spec.n {
                for &algo in &spec.algorithms {
                    let sel: Vec<&GridRun> =
                        runs.iter().filter(|r| r.model == mi && r.q == q && r.n == n && r.algo == algo).collect();
                    if sel.is_empty() {
                        continue;
                    }
                    let params: Vec<ModelParams> = sel.iter().map(|r| r.params.clone()).collect();
                    let bias = if q > 1 {
                        bias_rmse(&params, m.lambda, m.eps)?
                    } else {
                        BiasRmse { bias_eps: f64::NAN, bias_lambda: f64::NAN, rmse_eps: f64::NAN, rmse_lambda: f64::NAN }
                    };
                    let (ari_mean, ari_sd) = mean_sd(&sel.iter().map(|r| r.ari).collect::<Vec<_>>());
                    let (time_mean, time_sd) = mean_sd(&sel.iter().map(|r| r.seconds).collect::<Vec<_>>());
                    cells.push(CellSummary {
                        model: m.name.clone(),
                        lambda: m.lambda,
                        eps: m.eps,
                        q,
                        n,
                        algo,
                        replicates: sel.len(),
                        bias,
                        ari_mean,
                        ari_sd,
                        time_mean,
                        time_sd,
                    });
                }
            }
        }
    }
    Ok(cells)
}

/// Growing-network experiment: sample `initial` nodes, fit online, then
/// repeatedly append nodes drawn from the same template and keep absorbing
/// them into the same fitter (one refinement sweep per stage). ARI is
/// measured on all nodes present; `seconds` is cumulative fitting time.
pub fn run_growth(spec: &GrowthSpec, cfg: &FitConfig, seed: u64, record_timing: bool) -> Result<Vec<GrowthRow>> {
    if !spec.algorithm.is_online() {
        return Err(Error::param("growth runs need an online algorithm"));
    }
    let params = spec.template.params();
    let rows: Vec<Result<Vec<GrowthRow>>> = (0..spec.replicates)
        .into_par_iter()
        .map(|rep| growth_replicate(spec, &params, cfg, derive_seed(seed, &[rep as u64]), rep, record_timing))
        .collect();
    let mut out = Vec::new();
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

fn growth_replicate(
    spec: &GrowthSpec,
    params: &ModelParams,
    cfg: &FitConfig,
    seed: u64,
    replicate: usize,
    record_timing: bool,
) -> Result<Vec<GrowthRow>> {
    let q = params.q();
    let (mut g, mut truth) = sample_mixnet(spec.initial, params, derive_seed(seed, &[0]))?;
    let mut grow_rng = rng::seeded(derive_seed(seed, &[1]));
    let mut split_rng = rng::seeded(derive_seed(seed, &[3]));
    let cfg = FitConfig { seed: derive_seed(seed, &[2]), ..cfg.clone() };
    let mut elapsed = 0.0;
    let started = Instant::now();
    let (mut fitter, _) = fit::best_online(&g, q, spec.algorithm, &cfg)?;
    for _ in 0..cfg.post_passes {
        fitter.refine(&g)?;
    }
    elapsed += started.elapsed().as_secs_f64();
    let mut rows = vec![stage_row(&*fitter, &truth.labels, replicate, 0, spec.algorithm, elapsed, record_timing)?];
    for (stage, &add) in spec.additions.iter().enumerate() {
        grow_mixnet(&mut g, &mut truth, add, &mut grow_rng)?;
        let t = Instant::now();
        fit::stream_rest(&g, fitter.as_mut())?;
        for _ in 0..cfg.post_passes {
            fitter.refine(&g)?;
        }
        for _ in 0..q {
            if !fit::try_split(&g, &mut fitter, spec.split_candidates, SPLIT_SWEEPS, &mut split_rng)? {
                break;
            }
        }
        elapsed += t.elapsed().as_secs_f64();
        rows.push(stage_row(&*fitter, &truth.labels, replicate, stage + 1, spec.algorithm, elapsed, record_timing)?);
    }
    Ok(rows)
}

fn stage_row(
    fitter: &dyn OnlineFitter,
    truth: &[usize],
    replicate: usize,
    stage: usize,
    algo: Algorithm,
    elapsed: f64,
    record_timing: bool,
) -> Result<GrowthRow> {
    let labels = fitter.tau().argmax();
    Ok(GrowthRow {
        replicate,
        stage,
        n: labels.len(),
        algo,
        ari: adjusted_rand(&labels, truth)?,
        seconds: if record_timing { elapsed } else { 0.0 },
    })
}

/// Heterogeneous 11-class template: seven communities of varying
/// cohesion, a hub class tied to every community, two peripheral classes
/// attached to the hubs and to a pair of communities each, and a sparse
/// fringe class.
pub fn eleven_class_template() -> ModelParams {
    const Q: usize = 11;
    let within = [0.6, 0.55, 0.7, 0.5, 0.65, 0.6, 0.75];
    let mut psi = vec![vec![0.05; Q]; Q];
    for (a, &w) in within.iter().enumerate() {
        psi[a][a] = w;
    }
    let hub = 7;
    for c in 0..7 {
        psi[hub][c] = 0.45;
        psi[c][hub] = 0.45;
    }
    psi[hub][hub] = 0.8;
    for (p, comms) in [(8, [0, 1]), (9, [4, 5])] {
        for c in 0..Q {
            psi[p][c] = 0.02;
            psi[c][p] = 0.02;
        }
        psi[p][hub] = 0.35;
        psi[hub][p] = 0.35;
        for c in comms {
            psi[p][c] = 0.15;
            psi[c][p] = 0.15;
        }
        psi[p][p] = 0.05;
    }
    let fringe = 10;
    for c in 0..Q {
        psi[fringe][c] = 0.02;
        psi[c][fringe] = 0.02;
    }
    psi[fringe][hub] = 0.2;
    psi[hub][fringe] = 0.2;
    let mut alpha = vec![0.09; 7];
    alpha.extend([0.07, 0.1, 0.1, 0.1]);
    ModelParams::new(EdgeFamily::Bernoulli, false, alpha, psi).expect("template is valid")
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.6}")
    }
}

fn render_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// File names of the four benchmark tables, in output order.
pub const TABLES: [&str; 4] = ["bias_rmse.csv", "rand.csv", "scaling.csv", "growth.csv"];

/// Renders the four tables as `(file name, CSV bytes)`. The growth table
/// holds only a header without a growth spec.
pub fn render_tables(out: &BenchOutput) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let key = |c: &CellSummary| {
        vec![c.model.clone(), fmt(c.lambda), fmt(c.eps), c.q.to_string(), c.n.to_string(), c.algo.to_string(), c.replicates.to_string()]
    };
    let head = ["model", "lambda", "eps", "q", "n", "algo", "replicates"];
    let with = |extra: &[&'static str]| head.iter().copied().chain(extra.iter().copied()).collect::<Vec<&str>>();
    let bias = render_csv(
        &with(&["bias_eps_pct", "bias_lambda_pct", "rmse_eps", "rmse_lambda"]),
        out.cells.iter().map(|c| {
            let mut r = key(c);
            r.extend([c.bias.bias_eps, c.bias.bias_lambda, c.bias.rmse_eps, c.bias.rmse_lambda].map(fmt));
            r
        }),
    )?;
    let rand = render_csv(
        &with(&["ari_mean", "ari_sd"]),
        out.cells.iter().map(|c| {
            let mut r = key(c);
            r.extend([c.ari_mean, c.ari_sd].map(fmt));
            r
        }),
    )?;
    let scaling = render_csv(
        &with(&["ari_mean", "ari_sd", "time_mean", "time_sd"]),
        out.cells.iter().map(|c| {
            let mut r = key(c);
            r.extend([c.ari_mean, c.ari_sd, c.time_mean, c.time_sd].map(fmt));
            r
        }),
    )?;
    let growth = render_csv(
        &["replicate", "stage", "n", "algo", "ari", "seconds"],
        out.growth.iter().map(|g| {
            vec![g.replicate.to_string(), g.stage.to_string(), g.n.to_string(), g.algo.to_string(), fmt(g.ari), fmt(g.seconds)]
        }),
    )?;
    Ok(TABLES.into_iter().zip([bias, rand, scaling, growth]).collect())
}

/// Writes the four tables into `dir`.
pub fn write_tables(out: &BenchOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, bytes) in render_tables(out)? {
        let p = dir.join(name);
        fs::write(&p, bytes)?;
        paths.push(p);
    }
    Ok(paths)
}

/// Runs a spec and writes its tables into `spec.out_dir`.
pub fn run_and_write(spec: &BenchSpec) -> Result<Vec<PathBuf>> {
    let out = run_grid(spec)?;
    write_tables(&out, &spec.out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchSpec {
        BenchSpec {
            models: vec![AffiliationModel { name: "strong".into(), lambda: 0.8, eps: 0.1 }],
            q: vec![2],
            n: vec![40],
            replicates: 2,
            algorithms: vec![Algorithm::OnlineVem, Algorithm::BatchVem],
            seed: 3,
            directed: false,
            full: false,
            record_timing: false,
            fit: FitConfig { starts: 2, ..Default::default() },
            growth: None,
            out_dir: PathBuf::from("unused"),
        }
    }

    #[test]
    fn template_is_an_eleven_class_model() {
        let t = eleven_class_template();
        assert_eq!(t.q(), 11);
        assert!((t.alpha().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_cells_follow_spec_order() {
        let out = run_grid(&tiny()).unwrap();
        assert_eq!(out.runs.len(), 4);
        assert_eq!(out.cells.len(), 2);
        assert_eq!(out.cells[0].algo, Algorithm::OnlineVem);
        assert!(out.cells.iter().all(|c| c.replicates == 2 && c.time_mean == 0.0));
    }

    #[test]
    fn desk_caps_apply_without_full() {
        let spec = BenchSpec { replicates: 50, n: vec![1200], ..tiny() };
        assert_eq!(spec.effective_replicates(), DESK_MAX_REPLICATES);
        assert!(!spec.runs(Algorithm::BatchVem, 1200));
        assert!(spec.runs(Algorithm::OnlineVem, 1200));
        let full = BenchSpec { full: true, ..spec };
        assert_eq!(full.effective_replicates(), 50);
        assert!(full.runs(Algorithm::BatchVem, 1200));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(BenchSpec { replicates: 0, ..tiny() }.validate().is_err());
        assert!(BenchSpec { q: vec![50], ..tiny() }.validate().is_err());
        let growth = GrowthSpec {
            template: Template::ElevenClass,
            initial: 50,
            additions: vec![10],
            algorithm: Algorithm::BatchVem,
            replicates: 1,
            split_candidates: 3,
        };
        assert!(BenchSpec { growth: Some(growth), ..tiny() }.validate().is_err());
    }

    #[test]
    fn growth_time_is_cumulative() {
        let spec = GrowthSpec {
            template: Template::Custom(ModelParams::affiliation(2, 0.8, 0.05, false).unwrap()),
            initial: 30,
            additions: vec![30, 60],
            algorithm: Algorithm::OnlineVem,
            replicates: 1,
            split_candidates: 3,
        };
        let rows = run_growth(&spec, &FitConfig { starts: 2, ..Default::default() }, 5, true).unwrap();
        assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![30, 60, 120]);
        assert!(rows.windows(2).all(|w| w[1].seconds >= w[0].seconds));
    }
}
