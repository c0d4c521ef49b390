//! Command-line runner: config ingestion, one subcommand per experiment,
//! CSV/JSON/PGM outputs and a manifest per invocation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use vhetnet::coverage::CoverageOptions;
use vhetnet::deploy::{
    classical_weighted_kmeans, compare_strategies, fading_assign, fading_aware_kmeans,
    fading_objective, kmeans_pp_init, pgm_bytes, ClusterState, FadingKernel, HeatmapExtents,
    Strategy, WeightedSamples,
};
use vhetnet::experiments::{
    self, association_sweep, coverage_sweep, deployment_artifacts, distance_ks, distance_table,
    fit_table, gamma_fit_check, gamma_grid, reduction_identities, regime_rows, strategy_rows,
    Artifact, DeploymentStudy, ExperimentManifest, OutputFile, VaryParam, DEFAULT_SEED, PRESETS,
};
use vhetnet::model::{Environment, NetworkConfig};
use vhetnet::numerics::RngStream;
use vhetnet::sigstats::MomentOptions;
use vhetnet::sim::{empirical_coverage, Policy};
use vhetnet::ValidatedConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] vhetnet::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
}

impl From<vhetnet::model::ConfigError> for CliError {
    fn from(e: vhetnet::model::ConfigError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<vhetnet::deploy::DeployError> for CliError {
    fn from(e: vhetnet::deploy::DeployError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<vhetnet::sim::SimError> for CliError {
    fn from(e: vhetnet::sim::SimError) -> Self {
        CliError::Core(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "vhetnet",
    version,
    about = "Coverage experiments for aerial/terrestrial CoMP networks",
    long_about = "Coverage experiments for aerial/terrestrial CoMP networks.\n\n\
                  Units at the boundary: meters, dB, TBSs per km². Every run writes its outputs and a \
                  <subcommand>.manifest.json into --out."
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Scenario JSON with every field present; replaces --preset.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Named starting scenario.
    #[arg(long, global = true, default_value = "reference", value_parser = PRESETS)]
    pub preset: String,
    /// Override one scenario field after loading, e.g. `--set h=150` or `--set env=highrise`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Root seed of every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads [default: all cores].
    #[arg(long, global = true, env = "VHETNET_THREADS")]
    pub threads: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Analytic distance laws on a grid and their KS distance to exact samples.
    ValidateDists(ValidateDistsArgs),
    /// Gamma laws of the aggregate CoMP signal for every tier and link-state vector.
    FitGamma(FitGammaArgs),
    /// Association probabilities against user altitude.
    AssocSweep(AssocArgs),
    /// Altitude regime (threshold and half-probability heights) of the association curve.
    Regime(AssocArgs),
    /// Semi-analytic and simulated coverage against the SIR threshold.
    CoverageSweep(CoverageSweepArgs),
    /// Simulated coverage at one threshold for one cooperation policy.
    Simulate(SimulateArgs),
    /// Places K ABSs over weighted ground samples read from CSV (x,y,w).
    DeployOpt(DeployOptArgs),
    /// Coverage heatmap of one placement strategy.
    Heatmap(HeatmapArgs),
    /// Aggregate coverage of all placement strategies on one scenario.
    CompareStrategies(ScenarioArgs),
    /// Runs the acceptance suite twice (two worker counts) and checks the outputs match.
    ReproAll(ReproArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ValidateDists(_) => "validate-dists",
            Command::FitGamma(_) => "fit-gamma",
            Command::AssocSweep(_) => "assoc-sweep",
            Command::Regime(_) => "regime",
            Command::CoverageSweep(_) => "coverage-sweep",
            Command::Simulate(_) => "simulate",
            Command::DeployOpt(_) => "deploy-opt",
            Command::Heatmap(_) => "heatmap",
            Command::CompareStrategies(_) => "compare-strategies",
            Command::ReproAll(_) => "repro-all",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateDistsArgs {
    /// Exact draws per tier for the KS check.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    /// Abscissae per tier and order in the pdf/cdf table.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FitGammaArgs {
    /// Monte Carlo trials behind the cross moments.
    #[arg(long, default_value_t = 200_000)]
    pub moment_trials: usize,
    /// Brute-force draws for the KS check of the fitted laws.
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct AssocArgs {
    #[arg(long, default_value_t = 30.0)]
    pub h_min: f64,
    #[arg(long, default_value_t = 300.0)]
    pub h_max: f64,
    #[arg(long, default_value_t = 28)]
    pub h_steps: usize,
    /// Simulated users per altitude.
    #[arg(long, default_value_t = 50_000)]
    pub users: usize,
    /// Environment presets to compare [default: the scenario's own].
    #[arg(long = "env", value_name = "NAME")]
    pub envs: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverageSweepArgs {
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub gamma_db_min: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub gamma_db_max: f64,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    /// Parameter to sweep alongside the threshold.
    #[arg(long, value_name = "h|H|N", requires = "values")]
    pub vary: Option<String>,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
    /// Simulated trials per point.
    #[arg(long, default_value_t = 100_000)]
    pub mc_trials: usize,
    /// Conditional distance triples per tier in the analytic pipeline.
    #[arg(long, default_value_t = 20_000)]
    pub triples: usize,
    /// Trials behind the analytic association probability.
    #[arg(long, default_value_t = 100_000)]
    pub assoc_trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value = "comp3-same-tier")]
    pub policy: Policy,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma_db: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DeployOptArgs {
    /// CSV with header `x,y,w`.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Kernel path-loss exponent.
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Kernel Nakagami shape.
    #[arg(long, default_value_t = 2.0)]
    pub m: f64,
    /// Kernel length scale (same unit as x, y).
    #[arg(long, default_value_t = 1.0)]
    pub length_scale: f64,
    #[arg(long, default_value = "fading-aware")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub t_max: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ScenarioArgs {
    /// Deployment study JSON (`config` + `scenario`) [default: the shipped reconstruction].
    /// Its config replaces --config/--preset; --set still applies.
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value = "fading-aware")]
    pub strategy: Strategy,
}

#[derive(Debug, Args, Serialize)]
pub struct ReproArgs {
    /// Worker count of the second run [default: 3 when --threads is 1, else 1].
    #[arg(long)]
    pub check_threads: Option<usize>,
    /// Exit non-zero when any criterion fails.
    #[arg(long)]
    pub strict: bool,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Read {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn put(&mut self, a: &Artifact) -> CliResult<()> {
        let path = self.dir.join(&a.name);
        fs::write(&path, &a.bytes).map_err(|e| CliError::Read { path, source: e })?;
        self.files.push(OutputFile {
            path: a.name.clone(),
            sha256: a.sha256(),
            bytes: a.bytes.len(),
        });
        Ok(())
    }

    fn put_all(&mut self, xs: &[Artifact]) -> CliResult<()> {
        xs.iter().try_for_each(|a| self.put(a))
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        source: e,
    })
}

fn apply_overrides(mut cfg: NetworkConfig, overrides: &[String]) -> CliResult<NetworkConfig> {
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{o}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn base_config(common: &Common) -> CliResult<NetworkConfig> {
    match &common.config {
        Some(p) => NetworkConfig::from_json(&read(p)?).map_err(|e| CliError::Input {
            path: p.clone(),
            message: e.to_string(),
        }),
        None => experiments::preset(&common.preset)
            .ok_or_else(|| CliError::Usage(format!("unknown preset {}", common.preset))),
    }
}

fn load_study(args: &ScenarioArgs, overrides: &[String]) -> CliResult<DeploymentStudy> {
    let mut study = match &args.scenario {
        Some(p) => DeploymentStudy::from_json(&read(p)?).map_err(|e| CliError::Input {
            path: p.clone(),
            message: e.to_string(),
        })?,
        None => DeploymentStudy::reference(),
    };
    study.config = apply_overrides(study.config, overrides)?;
    Ok(study)
}

fn env_label(env: Environment) -> String {
    if env == Environment::SUBURBAN {
        "suburban".into()
    } else if env == Environment::HIGHRISE_URBAN {
        "highrise".into()
    } else {
        format!("a={} b={} c={}", env.a, env.b, env.c)
    }
}

fn read_samples(path: &Path) -> CliResult<WeightedSamples> {
    #[derive(serde::Deserialize)]
    struct Row {
        x: f64,
        y: f64,
        w: f64,
    }
    let bad = |message: String| CliError::Input {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let (mut pts, mut ws) = (Vec::new(), Vec::new());
    for r in rdr.deserialize::<Row>() {
        let r = r.map_err(|e| bad(e.to_string()))?;
        pts.push([r.x, r.y]);
        ws.push(r.w);
    }
    Ok(WeightedSamples::new(pts, ws)?)
}

#[derive(Serialize)]
struct DeployOptReport<'a> {
    strategy: &'a str,
    state: &'a ClusterState,
    converged: Option<bool>,
    trace: serde_json::Value,
}

fn deploy_opt(a: &DeployOptArgs, seed: u64, out: &mut Outputs) -> CliResult<()> {
    let s = read_samples(&a.input)?;
    let kernel = FadingKernel::new(a.alpha, a.m, a.length_scale)?;
    let rng = RngStream::new(seed, 0);
    let (state, converged, trace) = match a.strategy {
        Strategy::TbsOnly => {
            return Err(CliError::Usage(
                "deploy-opt places ABSs; tbs-only has nothing to place".into(),
            ))
        }
        Strategy::RandomAbs => {
            let (lo, hi) = s.points.iter().fold(
                ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |(lo, hi), p| {
                    (
                        [lo[0].min(p[0]), lo[1].min(p[1])],
                        [hi[0].max(p[0]), hi[1].max(p[1])],
                    )
                },
            );
            let mut r = rng.substream(0).rng();
            use rand::RngExt;
            let centers: Vec<[f64; 2]> = (0..a.k)
                .map(|_| {
                    [
                        lo[0] + (hi[0] - lo[0]) * r.random::<f64>(),
                        lo[1] + (hi[1] - lo[1]) * r.random::<f64>(),
                    ]
                })
                .collect();
            let assignment = fading_assign(&s, &centers, &kernel);
            let objective = fading_objective(&s, &centers, &assignment, &kernel);
            (
                ClusterState {
                    centers,
                    assignment,
                    objective,
                },
                None,
                serde_json::Value::Null,
            )
        }
        Strategy::ClassicalKmeans => {
            let init = kmeans_pp_init(&s, a.k, &mut rng.substream(1).rng())?;
            let (state, trace) = classical_weighted_kmeans(&s, a.k, a.epsilon, a.t_max, &init)?;
            (
                state,
                None,
                serde_json::to_value(trace).map_err(vhetnet::Error::from)?,
            )
        }
        Strategy::FadingAware => {
            let init = kmeans_pp_init(&s, a.k, &mut rng.substream(1).rng())?;
            let run = fading_aware_kmeans(&s, a.k, &kernel, a.epsilon, a.t_max, &init)?;
            let trace = serde_json::to_value(&run.trace).map_err(vhetnet::Error::from)?;
            (run.state, Some(run.converged), trace)
        }
    };
    #[derive(Serialize)]
    struct CenterRow {
        index: usize,
        x: f64,
        y: f64,
    }
    let rows: Vec<CenterRow> = state
        .centers
        .iter()
        .enumerate()
        .map(|(i, c)| CenterRow {
            index: i,
            x: c[0],
            y: c[1],
        })
        .collect();
    out.put(&Artifact::csv("centers.csv", &rows)?)?;
    let report = DeployOptReport {
        strategy: a.strategy.name(),
        state: &state,
        converged,
        trace,
    };
    out.put(&Artifact::json("cluster_state.json", &report)?)?;
    Ok(())
}

fn heatmap(
    a: &HeatmapArgs,
    study: &DeploymentStudy,
    seed: u64,
    out: &mut Outputs,
) -> CliResult<()> {
    let cfg = study.config.validate()?;
    let cmp = compare_strategies(&cfg, &study.scenario, &RngStream::new(seed, 8))?;
    let r = cmp.result(a.strategy);
    let n = study.scenario.grid_n;
    #[derive(Serialize)]
    struct Cell {
        x: f64,
        y: f64,
        weight: f64,
        coverage: f64,
        mean_sir_db: f64,
    }
    let cells: Vec<Cell> = cmp
        .grid
        .iter()
        .enumerate()
        .map(|(i, p)| Cell {
            x: p[0],
            y: p[1],
            weight: cmp.weights.weights[i],
            coverage: r.map.coverage[i],
            mean_sir_db: r.map.mean_sir_db[i],
        })
        .collect();
    let step = study.scenario.area_side / n as f64;
    let extents = HeatmapExtents {
        x_min: 0.5 * step,
        x_max: study.scenario.area_side - 0.5 * step,
        y_min: 0.5 * step,
        y_max: study.scenario.area_side - 0.5 * step,
        cols: n,
        rows: n,
        value_min: 0.0,
        value_max: 1.0,
    };
    #[derive(Serialize)]
    struct Sidecar<'a> {
        strategy: &'a str,
        aggregate: f64,
        extents: HeatmapExtents,
        pgm: String,
    }
    let stem = format!("heatmap_{}", a.strategy.name());
    out.put(&Artifact::csv(format!("{stem}.csv"), &cells)?)?;
    out.put(&Artifact::new(
        format!("{stem}.pgm"),
        pgm_bytes(&r.map.coverage, n, n)?,
    ))?;
    let side = Sidecar {
        strategy: a.strategy.name(),
        aggregate: r.aggregate,
        extents,
        pgm: format!("{stem}.pgm"),
    };
    out.put(&Artifact::json(format!("{stem}.json"), &side)?)?;
    Ok(())
}

fn assoc_envs(a: &AssocArgs, cfg: &ValidatedConfig) -> CliResult<Vec<(String, Environment)>> {
    if a.envs.is_empty() {
        return Ok(vec![(env_label(cfg.env()), cfg.env())]);
    }
    a.envs
        .iter()
        .map(|n| {
            Environment::preset(n)
                .map(|e| (n.clone(), e))
                .ok_or_else(|| {
                    CliError::Usage(format!("unknown environment `{n}` (suburban, highrise)"))
                })
        })
        .collect()
}

fn run(cli: &Cli, argv: &[String]) -> CliResult<bool> {
    let started = Instant::now();
    let c = &cli.common;
    let threads = c
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| vhetnet::Error::ThreadPool(e.to_string()))?;
    let mut out = Outputs::new(&c.out)?;
    let mut all_passed = true;

    let study = match &cli.command {
        Command::Heatmap(a) => Some(load_study(&a.scenario, &c.overrides)?),
        Command::CompareStrategies(a) => Some(load_study(a, &c.overrides)?),
        _ => None,
    };
    let raw = match &study {
        Some(s) => s.config.clone(),
        None => apply_overrides(base_config(c)?, &c.overrides)?,
    };
    let cfg = raw.validate()?;
    let seed = c.seed;

    match &cli.command {
        Command::ValidateDists(a) => {
            out.put(&Artifact::csv(
                "distance_table.csv",
                &distance_table(&cfg, a.points)?,
            )?)?;
            out.put(&Artifact::csv(
                "distance_ks.csv",
                &distance_ks(&cfg, a.draws, &RngStream::new(seed, 1))?,
            )?)?;
            out.put(&Artifact::json(
                "reductions.json",
                &reduction_identities(&cfg, 1000)?,
            )?)?;
        }
        Command::FitGamma(a) => {
            let opts = MomentOptions {
                trials: a.moment_trials,
                rng: RngStream::new(seed, 3).substream(100),
                ..MomentOptions::default()
            };
            out.put(&Artifact::csv("gamma_fits.csv", &fit_table(&cfg, &opts)?)?)?;
            out.put(&Artifact::csv(
                "gamma_fit_check.csv",
                &gamma_fit_check(&cfg, a.draws, &opts, &RngStream::new(seed, 3))?,
            )?)?;
        }
        Command::AssocSweep(a) | Command::Regime(a) => {
            let envs = assoc_envs(a, &cfg)?;
            let hs = gamma_grid(a.h_min, a.h_max, a.h_steps);
            let sweep = association_sweep(&raw, &envs, &hs, a.users, &RngStream::new(seed, 4))?;
            if matches!(cli.command, Command::AssocSweep(_)) {
                out.put(&Artifact::csv("association.csv", &sweep.rows)?)?;
            } else {
                out.put(&Artifact::csv("regime.csv", &regime_rows(&sweep))?)?;
                out.put(&Artifact::json("regime.json", &sweep.regimes)?)?;
            }
        }
        Command::CoverageSweep(a) => {
            let gammas = gamma_grid(a.gamma_db_min, a.gamma_db_max, a.steps);
            let vary = match &a.vary {
                Some(v) => Some(v.parse::<VaryParam>().map_err(CliError::Usage)?),
                None => None,
            };
            let opts = CoverageOptions {
                assoc_trials: a.assoc_trials,
                triples: a.triples,
                rng: RngStream::new(seed, 5).substream(100),
                ..CoverageOptions::default()
            };
            let rows = coverage_sweep(
                &cfg,
                vary.map(|v| (v, a.values.as_slice())),
                &gammas,
                &opts,
                a.mc_trials,
                &RngStream::new(seed, 5),
            )?;
            out.put(&Artifact::csv("coverage_sweep.csv", &rows)?)?;
        }
        Command::Simulate(a) => {
            let r = empirical_coverage(
                &cfg,
                a.gamma_db,
                a.policy,
                a.trials,
                &RngStream::new(seed, 6),
            )?;
            out.put(&Artifact::json("simulate.json", &r)?)?;
        }
        Command::DeployOpt(a) => deploy_opt(a, seed, &mut out)?,
        Command::Heatmap(a) => heatmap(a, study.as_ref().expect("loaded above"), seed, &mut out)?,
        Command::CompareStrategies(_) => {
            let s = study.as_ref().expect("loaded above");
            let cmp = compare_strategies(&cfg, &s.scenario, &RngStream::new(seed, 8))?;
            for r in strategy_rows(&cmp) {
                log::info!("{}: {:.2}%", r.strategy, 100.0 * r.aggregate);
            }
            out.put_all(&deployment_artifacts("", &cmp)?)?;
        }
        Command::ReproAll(a) => {
            let check = a.check_threads.unwrap_or(if threads == 1 { 3 } else { 1 });
            let run = experiments::repro_all(seed, [threads, check], &|o| println!("{o}"))?;
            out.put_all(&run.artifacts)?;
            all_passed = run.outcomes.iter().all(|o| o.passed);
            let passed = run.outcomes.iter().filter(|o| o.passed).count();
            println!("{passed}/{} criteria passed", run.outcomes.len());
            if !a.strict {
                all_passed = true;
            }
        }
    }

    let manifest = ExperimentManifest {
        subcommand: cli.command.name().into(),
        command_line: argv.to_vec(),
        config_hash: cfg.hash(),
        config: raw,
        seed,
        overrides: c.overrides.clone(),
        parameters: serde_json::json!({ "common": c, "command": &cli.command }),
        threads,
        tool_version: ExperimentManifest::TOOL_VERSION.into(),
        wall_clock_s: started.elapsed().as_secs_f64(),
        outputs: out.files.clone(),
    };
    let name = format!("{}.manifest.json", cli.command.name());
    let bytes = serde_json::to_vec_pretty(&manifest).map_err(vhetnet::Error::from)?;
    let path = out.dir.join(&name);
    fs::write(&path, bytes).map_err(|e| CliError::Read { path, source: e })?;
    for f in &manifest.outputs {
        println!("{}", out.dir.join(&f.path).display());
    }
    Ok(all_passed)
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match run(&cli, &argv) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(2)
        }
    }
}
