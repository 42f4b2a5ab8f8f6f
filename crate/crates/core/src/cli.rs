//! Experiment harness behind the `tdmd` binary.
//!
//! Three subcommands share one [`ExperimentConfig`]:
//!
//! - `decompose` writes truncated star-M SVD factors and a JSON summary.
//! - `compare` runs the three DMD variants at matched storage over a list
//!   of energy levels and writes `results.csv` and `statewise_re.csv`.
//! - `stream` runs streaming DMD batch by batch and writes `batch_re.csv`
//!   and `statewise_re.csv`.
//!
//! A config file (TOML) can provide every setting; flags override it.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::datasets::{self, SnapshotFormat};
use crate::decomp::{tr_tsvdm, tr_tsvdm2, TSvdM};
use crate::dmd::{
    equalized_rank, exact_dmd, fold_matrix_reconstruction, relative_error, star_m_dmd, DmdModel, Method,
    SnapshotPair, Truncation,
};
use crate::error::{Error, Result, StageExt};
use crate::linalg;
use crate::streaming::{streaming_dmd, StreamingOptions};
use crate::tensor::Tensor3;
use crate::transform::Transform;
use crate::{CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TransformChoice {
    Dct,
    Dst,
    /// Left singular vectors of the mode-3 unfolding of `X`.
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Wave,
    Vortex,
    Linear,
}

/// Where the trajectory comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum InputSpec {
    /// A `.tdt` file or a directory of CSV snapshots.
    File { path: PathBuf },
    Wave {
        m: usize,
        n: usize,
        t: usize,
        speed: f64,
        kx: f64,
        ky: f64,
    },
    Vortex {
        m: usize,
        n: usize,
        t: usize,
        oscillators: usize,
        decay: f64,
    },
    /// Random star-M linear system with real facewise eigenvalues in `[0.5, 0.98)`.
    Linear { m: usize, n: usize, t: usize },
}

impl InputSpec {
    pub fn generator(kind: GenKind, m: usize, n: usize, t: usize) -> Self {
        match kind {
            GenKind::Wave => InputSpec::Wave {
                m,
                n,
                t,
                speed: 0.3,
                kx: 2.0,
                ky: 1.0,
            },
            GenKind::Vortex => InputSpec::Vortex {
                m,
                n,
                t,
                oscillators: 3,
                decay: 0.995,
            },
            GenKind::Linear => InputSpec::Linear { m, n, t },
        }
    }

    fn dims(&self) -> Option<(usize, usize, usize)> {
        match *self {
            InputSpec::File { .. } => None,
            InputSpec::Wave { m, n, t, .. } | InputSpec::Vortex { m, n, t, .. } | InputSpec::Linear { m, n, t } => {
                Some((m, n, t))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamParams {
    pub batches: usize,
    pub rho_max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub transform: TransformChoice,
    pub methods: Vec<Method>,
    /// Energy levels; `decompose` and `stream` use the first one.
    pub gammas: Vec<f64>,
    /// Uniform rank for `decompose`; overrides the energy level there.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub input: InputSpec,
    pub stream: StreamParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            transform: TransformChoice::Dct,
            methods: vec![Method::Dmd, Method::StarMDmd, Method::StarMDmdII],
            gammas: vec![0.99, 0.999, 0.99999],
            rank: None,
            seed: 0,
            out: PathBuf::from("tdmd-out"),
            threads: None,
            input: InputSpec::generator(GenKind::Vortex, 64, 40, 99),
            stream: StreamParams { batches: 20, rho_max: 9 },
        }
    }
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidParameter(format!("cannot serialize config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("bad config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            offset: e.span().map_or(0, |s| s.start as u64),
            message: e.message().to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    fn first_gamma(&self) -> Result<f64> {
        self.gammas
            .first()
            .copied()
            .ok_or_else(|| Error::InvalidParameter("the gamma list is empty".into()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "tdmd", version, about = "Tensor DMD under the star-M product")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Truncated star-M SVD of the input; writes U, S, V and summary.json.
    Decompose(RunArgs),
    /// DMD, star-M DMD and star-M DMDII at matched storage over the gamma list.
    Compare(RunArgs),
    /// Streaming star-M DMDII and streaming matrix DMD over lateral batches.
    Stream(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML experiment config; flags below override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Snapshot file (.tdt) or directory of CSV snapshots.
    #[arg(long, conflicts_with = "gen")]
    pub input: Option<PathBuf>,
    /// Synthetic trajectory generator.
    #[arg(long, value_enum)]
    pub gen: Option<GenKind>,
    /// Grid rows of each snapshot.
    #[arg(long)]
    pub m: Option<usize>,
    /// Grid columns; becomes the tube length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Time steps; the trajectory has t + 1 snapshots.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long, value_enum)]
    pub transform: Option<TransformChoice>,
    /// Comma-separated subset of dmd, starm_dmd, starm_dmd2.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<Method>>,
    /// Comma-separated energy levels in (0, 1].
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Uniform rank for decompose; overrides gamma there.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Number of stream batches.
    #[arg(long)]
    pub batches: Option<usize>,
    /// Sketch size; the co-range sketch uses 2 rho + 1.
    #[arg(long)]
    pub rho_max: Option<usize>,
    /// Seed for generators and sketches.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 1 gives byte-identical output across runs.
    #[arg(long, env = "TDMD_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    /// Config file (or defaults) with every given flag applied on top.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(path) = &self.input {
            cfg.input = InputSpec::File { path: path.clone() };
        }
        if self.gen.is_some() || self.m.is_some() || self.n.is_some() || self.t.is_some() {
            let (m0, n0, t0) = cfg.input.dims().unwrap_or((64, 40, 99));
            let (m, n, t) = (self.m.unwrap_or(m0), self.n.unwrap_or(n0), self.t.unwrap_or(t0));
            cfg.input = match (self.gen, &cfg.input) {
                (Some(kind), _) => InputSpec::generator(kind, m, n, t),
                (None, InputSpec::File { .. }) => {
                    return Err(Error::InvalidParameter("--m, --n and --t need --gen".into()))
                }
                (None, spec) => with_dims(spec.clone(), m, n, t),
            };
        }
        if let Some(v) = self.transform {
            cfg.transform = v;
        }
        if let Some(v) = &self.method {
            cfg.methods = v.clone();
        }
        if let Some(v) = &self.gamma {
            cfg.gammas = v.clone();
        }
        if self.rank.is_some() {
            cfg.rank = self.rank;
        }
        if let Some(v) = self.batches {
            cfg.stream.batches = v;
        }
        if let Some(v) = self.rho_max {
            cfg.stream.rho_max = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        Ok(cfg)
    }
}

fn with_dims(spec: InputSpec, m: usize, n: usize, t: usize) -> InputSpec {
    match spec {
        InputSpec::Wave { speed, kx, ky, .. } => InputSpec::Wave { m, n, t, speed, kx, ky },
        InputSpec::Vortex { oscillators, decay, .. } => InputSpec::Vortex {
            m,
            n,
            t,
            oscillators,
            decay,
        },
        InputSpec::Linear { .. } => InputSpec::Linear { m, n, t },
        file => file,
    }
}

/// Loads or generates the `m x (T + 1) x n` trajectory.
pub fn load_input(cfg: &ExperimentConfig) -> Result<Tensor3> {
    match &cfg.input {
        InputSpec::File { path } => {
            let format = if path.is_dir() {
                SnapshotFormat::CsvDir
            } else {
                SnapshotFormat::Tdt
            };
            datasets::load_snapshots(path, format)
        }
        &InputSpec::Wave { m, n, t, speed, kx, ky } => {
            check_dims(m, n)?;
            Ok(datasets::gen_traveling_wave(m, n, t, speed, kx, ky))
        }
        &InputSpec::Vortex {
            m,
            n,
            t,
            oscillators,
            decay,
        } => {
            check_dims(m, n)?;
            Ok(datasets::gen_vortex_street(m, n, t, oscillators, decay, cfg.seed).trajectory)
        }
        &InputSpec::Linear { m, n, t } => {
            check_dims(m, n)?;
            gen_random_linear(m, n, t, cfg.seed)
        }
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::dim(format!("grid must be nonempty, got {m}x{n}")));
    }
    Ok(())
}

/// Trajectory of a random DCT star-M system `Q_k diag(lambda_k) Q_k^*`.
fn gen_random_linear(m: usize, n: usize, t: usize, seed: u64) -> Result<Tensor3> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let transform = Transform::dct(n)?;
    let mut gauss = |rows, cols| CMat::from_fn(rows, cols, |_, _| C64::new(StandardNormal.sample(&mut rng), 0.0));
    let slices: Vec<CMat> = (0..n)
        .map(|_| {
            let (q, _) = linalg::qr(&gauss(m, m));
            let lambda: Vec<f64> = (0..m).map(|i| 0.5 + 0.48 * (i as f64 + 0.5) / m as f64).collect();
            &q * linalg::real_diag(&lambda) * q.adjoint()
        })
        .collect();
    let a = transform.inverse_slices(&slices)?;
    let x0 = transform.inverse_slices(&(0..n).map(|_| gauss(m, 1)).collect::<Vec<_>>())?;
    datasets::gen_linear_starm(&a, &x0, t, &transform)
}

pub fn build_transform(choice: TransformChoice, x: &Tensor3) -> Result<Transform> {
    let n = x.tubes();
    match choice {
        TransformChoice::Dct => Transform::dct(n),
        TransformChoice::Dst => Transform::dst(n),
        TransformChoice::Data => Transform::data_driven(x),
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        offset: 0,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeSummary {
    pub shape: [usize; 3],
    pub transform: TransformChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub multirank: Vec<usize>,
    pub relative_error: f64,
    /// Floating point numbers in `U`, `S`, `V` (per-slice ranks) plus `st(M)`.
    pub storage_flns: u64,
}

/// Writes `U.tdt`, `S.tdt`, `V.tdt` and `summary.json` under `cfg.out`.
pub fn cmd_decompose(cfg: &ExperimentConfig) -> Result<DecomposeSummary> {
    let c = load_input(cfg).stage("load")?;
    let transform = build_transform(cfg.transform, &c).stage("transform")?;
    let dec: TSvdM = match cfg.rank {
        Some(k) => tr_tsvdm(&c, &transform, k),
        None => tr_tsvdm2(&c, &transform, cfg.first_gamma()?),
    }
    .stage("decompose")?;
    let approx = dec.reconstruct(&transform).stage("decompose")?;
    let re = relative_error(&c, &approx).stage("decompose")?;
    let (m, p, n) = c.shape();
    let total: usize = dec.multirank.iter().sum();
    let summary = DecomposeSummary {
        shape: [m, p, n],
        transform: cfg.transform,
        rank: cfg.rank,
        gamma: if cfg.rank.is_none() { dec.gamma } else { None },
        multirank: dec.multirank.clone(),
        relative_error: re.global,
        storage_flns: ((m + p + 1) * total + transform.storage_cost()) as u64,
    };
    ensure_dir(&cfg.out).stage("write")?;
    for (name, t) in [("U.tdt", &dec.u), ("S.tdt", &dec.s), ("V.tdt", &dec.v)] {
        datasets::save_snapshots(t, cfg.out.join(name)).stage("write")?;
    }
    let path = cfg.out.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e)).stage("write")?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub gamma: f64,
    pub method: Method,
    /// Uniform rank, or `sum=..;max=..` of the per-slice ranks.
    pub rank: String,
    pub storage: u64,
    pub global_re: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Per-snapshot errors at the largest gamma, one column per method.
    pub statewise: Vec<(Method, Vec<f64>)>,
}

/// Numerical rank of a snapshot matrix under the default cutoff.
fn numerical_rank(x: &CMat) -> usize {
    let s = linalg::svd(x).sigma;
    let tol = linalg::default_pinv_tol(x.nrows(), x.ncols()) * s.first().copied().unwrap_or(0.0);
    s.iter().filter(|&&v| v > tol).count()
}

fn fit_reconstruction(model: &DmdModel, p: usize, m: usize, n: usize) -> Result<Tensor3> {
    let recon = model.reconstruct(p - 1)?;
    if model.method == Method::Dmd {
        fold_matrix_reconstruction(&recon, m, n)
    } else {
        Ok(recon)
    }
}

/// Storage-matched comparison: star-M DMDII is fitted first, then DMD and
/// star-M DMD get the largest ranks that fit in its storage.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    if cfg.gammas.is_empty() {
        return Err(Error::InvalidParameter("the gamma list is empty".into()));
    }
    let c = load_input(cfg).stage("load")?;
    let pair = SnapshotPair::from_trajectory(&c).stage("load")?;
    let (m, p, n) = c.shape();
    let steps = p - 1;
    let transform = build_transform(cfg.transform, &pair.x).stage("transform")?;
    let st_m = transform.storage_cost();
    let xm = pair.x.unfold();
    let ym = pair.y.unfold();
    let dmd_cap = (m * n).min(steps).min(numerical_rank(&xm)).max(1);
    let starm_cap = m.min(steps);

    let largest = cfg.gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rows = Vec::new();
    let mut statewise = Vec::new();
    for &gamma in &cfg.gammas {
        let dmd2 = star_m_dmd(&pair.x, &pair.y, &transform, Truncation::Energy(gamma)).stage("starm_dmd2")?;
        let budget = dmd2.storage_flns;
        for &method in &cfg.methods {
            let (model, rank) = match method {
                Method::StarMDmdII => {
                    let total: usize = dmd2.multirank.iter().sum();
                    let max = dmd2.multirank.iter().copied().max().unwrap_or(0);
                    (dmd2.clone(), format!("sum={total};max={max}"))
                }
                Method::Dmd => {
                    let k = equalized_rank(budget, Method::Dmd, m, n, 0).stage("dmd")?.k.min(dmd_cap);
                    (exact_dmd(&xm, &ym, k).stage("dmd")?, k.to_string())
                }
                Method::StarMDmd => {
                    let k = equalized_rank(budget, Method::StarMDmd, m, n, st_m)
                        .stage("starm_dmd")?
                        .k
                        .min(starm_cap);
                    (
                        star_m_dmd(&pair.x, &pair.y, &transform, Truncation::Rank(k)).stage("starm_dmd")?,
                        k.to_string(),
                    )
                }
            };
            let recon = fit_reconstruction(&model, p, m, n).stage("reconstruct")?;
            let re = relative_error(&c, &recon).stage("reconstruct")?;
            rows.push(CompareRow {
                gamma,
                method,
                rank,
                storage: model.storage_flns,
                global_re: re.global,
            });
            if gamma == largest && !statewise.iter().any(|(m, _)| *m == method) {
                statewise.push((method, re.statewise));
            }
        }
    }

    ensure_dir(&cfg.out).stage("write")?;
    let header: Vec<String> = ["gamma", "method", "rank", "storage", "global_re"].map(String::from).to_vec();
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.gamma.to_string(),
                r.method.name().to_string(),
                r.rank.clone(),
                r.storage.to_string(),
                fmt_f64(r.global_re),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("results.csv"), &header, &body).stage("write")?;
    write_statewise(&cfg.out.join("statewise_re.csv"), &statewise, p).stage("write")?;
    Ok(CompareReport { rows, statewise })
}

fn write_statewise(path: &Path, columns: &[(Method, Vec<f64>)], p: usize) -> Result<()> {
    let mut header = vec!["state".to_string()];
    header.extend(columns.iter().map(|(m, _)| m.name().to_string()));
    let body: Vec<Vec<String>> = (0..p)
        .map(|j| {
            let mut row = vec![j.to_string()];
            row.extend(columns.iter().map(|(_, v)| fmt_f64(v[j])));
            row
        })
        .collect();
    write_csv(path, &header, &body)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub batch: usize,
    pub start: usize,
    pub end: usize,
    /// Per-method error on this batch's snapshots, in [`StreamReport::methods`] order.
    pub re: Vec<f64>,
    /// Per-method error of this batch's model over the whole trajectory.
    pub global_re: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StreamReport {
    pub methods: Vec<Method>,
    pub batches: Vec<BatchRow>,
    pub statewise: Vec<(Method, Vec<f64>)>,
    pub final_models: Vec<DmdModel>,
}

/// Streaming star-M DMDII (`starm_dmd2`) and streaming matrix DMD on the
/// unfolded snapshots (`dmd`), using the first gamma for both.
pub fn cmd_stream(cfg: &ExperimentConfig) -> Result<StreamReport> {
    let gamma = cfg.first_gamma()?;
    let c = load_input(cfg).stage("load")?;
    let (m, p, n) = c.shape();
    let ranges = datasets::batch_ranges(p, cfg.stream.batches).stage("batch")?;
    let mut methods: Vec<Method> = [Method::StarMDmdII, Method::Dmd]
        .into_iter()
        .filter(|m| cfg.methods.contains(m))
        .collect();
    if methods.is_empty() {
        methods.push(Method::StarMDmdII);
    }
    let options = StreamingOptions {
        rho_max: cfg.stream.rho_max,
        gamma,
        seed: cfg.seed,
        keep_intermediates: true,
    };

    let mut per_batch: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); ranges.len()];
    let mut statewise = Vec::new();
    let mut final_models = Vec::new();
    for &method in &methods {
        let (data, transform) = match method {
            Method::Dmd => (Tensor3::from_frontal_slices(&[c.unfold()])?, Transform::identity(1)?),
            _ => {
                let x = SnapshotPair::from_trajectory(&c).stage("load")?.x;
                let t = build_transform(cfg.transform, &x).stage("transform")?;
                (c.clone(), t)
            }
        };
        let batches = datasets::batch_split(&data, ranges.len()).stage("batch")?;
        let result = streaming_dmd(&batches, &transform, &options).stage("stream")?;
        for (b, r) in ranges.iter().enumerate() {
            let recon = fit_reconstruction(&result.intermediates[b].model, p, m, n).stage("reconstruct")?;
            let truth = c.lateral_range(r.start, r.end);
            let re = relative_error(&truth, &recon.lateral_range(r.start, r.end)).stage("reconstruct")?;
            per_batch[b].0.push(re.global);
            per_batch[b].1.push(relative_error(&c, &recon).stage("reconstruct")?.global);
        }
        let recon = fit_reconstruction(&result.model, p, m, n).stage("reconstruct")?;
        statewise.push((method, relative_error(&c, &recon).stage("reconstruct")?.statewise));
        final_models.push(result.model);
    }

    let batches: Vec<BatchRow> = ranges
        .iter()
        .zip(per_batch)
        .enumerate()
        .map(|(batch, (r, (re, global_re)))| BatchRow {
            batch,
            start: r.start,
            end: r.end,
            re,
            global_re,
        })
        .collect();
    ensure_dir(&cfg.out).stage("write")?;
    let mut header: Vec<String> = ["batch", "start", "end"].map(String::from).to_vec();
    header.extend(methods.iter().map(|m| m.name().to_string()));
    header.extend(methods.iter().map(|m| format!("{}_global", m.name())));
    let body: Vec<Vec<String>> = batches
        .iter()
        .map(|b| {
            let mut row = vec![b.batch.to_string(), b.start.to_string(), b.end.to_string()];
            row.extend(b.re.iter().chain(&b.global_re).map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    write_csv(&cfg.out.join("batch_re.csv"), &header, &body).stage("write")?;
    write_statewise(&cfg.out.join("statewise_re.csv"), &statewise, p).stage("write")?;
    Ok(StreamReport {
        methods,
        batches,
        statewise,
        final_models,
    })
}

/// Runs one subcommand inside a thread pool sized by `threads`.
pub fn run(command: &Command) -> Result<()> {
    let (args, which) = match command {
        Command::Decompose(a) => (a, 0),
        Command::Compare(a) => (a, 1),
        Command::Stream(a) => (a, 2),
    };
    let cfg = args.resolve().stage("config")?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(Error::InvalidParameter("--threads must be at least 1".into())).stage("config");
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
        .stage("config")?;
    pool.install(|| match which {
        0 => cmd_decompose(&cfg).map(|s| {
            println!(
                "multirank {:?}, relative error {:e}, storage {} flns",
                s.multirank, s.relative_error, s.storage_flns
            )
        }),
        1 => cmd_compare(&cfg).map(|r| {
            for row in &r.rows {
                println!(
                    "gamma {} {:>10} rank {:>14} storage {:>8} RE {:e}",
                    row.gamma, row.method, row.rank, row.storage, row.global_re
                );
            }
        }),
        _ => cmd_stream(&cfg).map(|r| println!("{} batches streamed", r.batches.len())),
    })?;
    println!("wrote {}", cfg.out.display());
    Ok(())
}

/// Runs the parsed command and maps errors to exit code 1.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = format!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                if !msg.contains(&s.to_string()) {
                    msg.push_str(&format!("\n  caused by: {s}"));
                }
                source = s.source();
            }
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
