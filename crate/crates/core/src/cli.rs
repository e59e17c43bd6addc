//! The `relnet` command-line front end.
//!
//! Every command that is given `--out DIR` writes its outputs under fixed
//! names in `DIR` together with `manifest.json`, which `relnet replay` uses to
//! re-run the command. Exit codes: 0 success, 1 usage error, 2 validation
//! error, 3 refusal because a size cap was exceeded.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bat::{exact_reliability_with_cap, factoring_reliability, DEFAULT_ENUMERATION_CAP};
use crate::datagen::{self, Dataset, Labeler, Regime};
use crate::error::{Error, Result};
use crate::estimators::{bat_mcs_estimate, mcs_estimate, summarize_runs, Estimate, Method, RunStats};
use crate::graph::{generate_benchmark, parse_network_file, render_network, ArcDistribution, Network};
use crate::rng::RNG_ALGORITHM;
use crate::surrogates::eval::{self, Metrics};
use crate::surrogates::{parse_model_list, ModelSpec};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "relnet", version, about = "Binary-state network reliability toolkit")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "RELNET_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Print a summary of a network file.
    Info(InfoArgs),
    /// Generate a random connected benchmark network.
    Generate(GenerateArgs),
    /// Exact reliability.
    Exact(ExactArgs),
    /// Monte Carlo or BAT-MCS reliability estimate.
    Estimate(EstimateArgs),
    /// Labeled dataset of arc reliabilities and network reliability.
    Gendata(GendataArgs),
    /// Fit and rank surrogate models on a dataset.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

/// Arc probabilities: from the file, or overridden on the command line.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ProbabilityArgs {
    /// Same working probability for every arc.
    #[arg(long, conflicts_with = "probs")]
    pub uniform: Option<f64>,
    /// Comma-separated per-arc probabilities.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InfoArgs {
    pub network: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub nodes: usize,
    #[arg(long)]
    pub arcs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Default arc probability written into the file.
    #[arg(long)]
    pub uniform: Option<f64>,
    /// Writes `network.net` here instead of printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Exhaustive binary-addition-tree enumeration.
    Bat,
    /// Arc factoring with series/parallel reductions.
    Factoring,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExactArgs {
    pub network: PathBuf,
    #[command(flatten)]
    pub probabilities: ProbabilityArgs,
    #[arg(long, value_enum, default_value_t = Engine::Bat)]
    pub engine: Engine,
    /// Largest arc count the enumeration engine accepts.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Mcs,
    #[value(name = "batmcs", alias = "bat-mcs")]
    Batmcs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    pub network: PathBuf,
    #[command(flatten)]
    pub probabilities: ProbabilityArgs,
    #[arg(long, value_enum, default_value_t = EstimateMethod::Batmcs)]
    pub method: EstimateMethod,
    /// Supervector width; defaults to min(10, m).
    #[arg(long)]
    pub delta: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub nsim: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent runs; run r uses seed + r.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GendataArgs {
    pub network: PathBuf,
    /// full, high, ultra or lo:hi.
    #[arg(long, default_value = "full")]
    pub regime: Regime,
    #[arg(long, default_value_t = 10_000)]
    pub size: usize,
    /// exact, mcs:N or bat-mcs:DELTA:N; defaults to bat-mcs with δ = min(10, m), N = 10000.
    #[arg(long)]
    pub labeler: Option<Labeler>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    pub dataset: PathBuf,
    /// Comma-separated model names, or all-native.
    #[arg(long, default_value = "all-native")]
    pub models: String,
    /// Seed for the split, the folds and seeded models.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = datagen::DEFAULT_FOLDS)]
    pub folds: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory for the re-run; defaults to the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub command: Command,
    pub threads: Option<usize>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<InputFile>,
    pub created_unix: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub runs: Vec<Estimate>,
    pub stats: Option<RunStats>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: String,
    pub spec: ModelSpec,
    pub metrics: Option<Metrics>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub dataset_sha256: String,
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
    pub results: Vec<ModelResult>,
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::CapExceeded { .. } => 3,
        _ => 2,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match run(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(Error::InvalidArgument("--threads must be at least 1".into()));
            }
            b = b.num_threads(t);
        }
        b.build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
    };
    pool.install(|| dispatch(&cli.command, cli.threads, stdout))
}

fn dispatch(cmd: &Command, threads: Option<usize>, stdout: &mut (dyn Write + Send)) -> Result<()> {
    match cmd {
        Command::Info(a) => cmd_info(a, stdout),
        Command::Generate(a) => cmd_generate(a, threads, stdout),
        Command::Exact(a) => cmd_exact(a, threads, stdout),
        Command::Estimate(a) => cmd_estimate(a, threads, stdout),
        Command::Gendata(a) => cmd_gendata(a, threads, stdout),
        Command::Bench(a) => cmd_bench(a, threads, stdout),
        Command::Replay(a) => cmd_replay(a, threads, stdout),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn absolute(p: &Path) -> PathBuf {
    fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf())
}

fn read_input(path: &Path) -> Result<(String, InputFile)> {
    let bytes = fs::read(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::InvalidArgument(format!("{} is not UTF-8", path.display())))?;
    let info = InputFile {
        path: absolute(path),
        sha256: sha256_hex(text.as_bytes()),
    };
    Ok((text, info))
}

fn load(path: &Path, probs: &ProbabilityArgs) -> Result<(Network, Option<ArcDistribution>, InputFile)> {
    let (text, info) = read_input(path)?;
    let file = parse_network_file(&text)?;
    let m = file.network.arc_count();
    let dist = match (probs.uniform, &probs.probs) {
        (Some(p), _) => Some(ArcDistribution::uniform(m, p)?),
        (None, Some(v)) => Some(ArcDistribution::for_network(&file.network, v.clone())?),
        (None, None) => file.distribution,
    };
    Ok((file.network, dist, info))
}

fn require_distribution(dist: Option<ArcDistribution>) -> Result<ArcDistribution> {
    dist.ok_or_else(|| {
        Error::InvalidArgument("network file has no arc probabilities; pass --uniform or --probs".into())
    })
}

struct OutDir {
    dir: PathBuf,
    outputs: Vec<InputFile>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.outputs.push(InputFile {
            path: PathBuf::from(name),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(self, command: Command, threads: Option<usize>, seeds: Vec<u64>, inputs: Vec<InputFile>) -> Result<()> {
        let manifest = Manifest {
            tool: "relnet".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            rng: RNG_ALGORITHM.into(),
            command,
            threads,
            seeds,
            inputs,
            outputs: self.outputs,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

fn with_absolute_network(mut cmd: Command) -> Command {
    match &mut cmd {
        Command::Info(a) => a.network = absolute(&a.network),
        Command::Exact(a) => a.network = absolute(&a.network),
        Command::Estimate(a) => a.network = absolute(&a.network),
        Command::Gendata(a) => a.network = absolute(&a.network),
        Command::Bench(a) => a.dataset = absolute(&a.dataset),
        Command::Generate(_) | Command::Replay(_) => {}
    }
    cmd
}

fn cmd_info(a: &InfoArgs, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let (net, dist, info) = load(&a.network, &ProbabilityArgs::default())?;
    let mut s = String::new();
    let _ = writeln!(s, "nodes        {}", net.node_count());
    let _ = writeln!(s, "arcs         {}", net.arc_count());
    let _ = writeln!(s, "source       {}", net.source());
    let _ = writeln!(s, "target       {}", net.target());
    let _ = writeln!(s, "probabilities {}", if dist.is_some() { "yes" } else { "no" });
    let _ = writeln!(
        s,
        "enumerable   {}",
        if net.arc_count() <= DEFAULT_ENUMERATION_CAP { "yes" } else { "no" }
    );
    let _ = writeln!(s, "network sha256 {}", net.fingerprint());
    let _ = writeln!(s, "file sha256  {}", info.sha256);
    stdout.write_all(s.as_bytes())?;
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, threads: Option<usize>, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let net = generate_benchmark(a.nodes, a.arcs, a.seed)?;
    let dist = a.uniform.map(|p| ArcDistribution::uniform(net.arc_count(), p)).transpose()?;
    let text = render_network(&net, dist.as_ref());
    match &a.out {
        Some(dir) => {
            let mut out = OutDir::create(dir)?;
            out.write("network.net", &text)?;
            out.finish(Command::Generate(a.clone()), threads, vec![a.seed], vec![])?;
            writeln!(stdout, "wrote {}", dir.join("network.net").display())?;
        }
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_exact(a: &ExactArgs, threads: Option<usize>, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let (net, dist, info) = load(&a.network, &a.probabilities)?;
    let dist = require_distribution(dist)?;
    let value = match a.engine {
        Engine::Bat => exact_reliability_with_cap(&net, &dist, a.cap)?,
        Engine::Factoring => factoring_reliability(&net, &dist)?,
    };
    writeln!(stdout, "{value:.6}")?;
    if let Some(dir) = &a.out {
        let est = Estimate {
            method: Method::Exact,
            value,
            seed: 0,
            delta: net.arc_count(),
            n_sim: 0,
            total_sims: 0,
            pruned_connected_mass: value,
            pruned_disconnected_mass: 1.0 - value,
            contributions: vec![],
            rng: String::new(),
        };
        let mut out = OutDir::create(dir)?;
        out.write_json("estimate.json", &EstimateReport {
            runs: vec![est],
            stats: None,
        })?;
        out.finish(with_absolute_network(Command::Exact(a.clone())), threads, vec![], vec![info])?;
    }
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs, threads: Option<usize>, stdout: &mut (dyn Write + Send)) -> Result<()> {
    if a.runs == 0 {
        return Err(Error::InvalidArgument("--runs must be at least 1".into()));
    }
    let (net, dist, info) = load(&a.network, &a.probabilities)?;
    let dist = require_distribution(dist)?;
    let seeds: Vec<u64> = (0..a.runs).map(|r| a.seed.wrapping_add(r)).collect();
    let runs = seeds
        .iter()
        .map(|&seed| match a.method {
            EstimateMethod::Mcs => mcs_estimate(&net, &dist, a.nsim, seed),
            EstimateMethod::Batmcs => {
                let delta = a.delta.unwrap_or_else(|| net.arc_count().min(10));
                bat_mcs_estimate(&net, &dist, delta, a.nsim, seed)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = if runs.len() > 1 {
        Some(summarize_runs(&runs.iter().map(|e| e.value).collect::<Vec<_>>())?)
    } else {
        None
    };

    let mut s = String::new();
    for e in &runs {
        let _ = writeln!(
            s,
            "seed {}  R = {:.6}  sims {}  pruned connected {:.6}  ambiguous {}",
            e.seed,
            e.value,
            e.total_sims,
            e.pruned_connected_mass,
            e.contributions.len()
        );
    }
    if let Some(st) = &stats {
        let _ = writeln!(s, "{:>6} {:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}", "count", "N_1", "Avg", "Stdev", "Med", "Min", "Max", "Range");
        let _ = writeln!(
            s,
            "{:>6} {:>5} {:>10.6} {:>10.3e} {:>10.6} {:>10.6} {:>10.6} {:>10.3e}",
            st.count, st.n_1, st.avg, st.stdev, st.med, st.min, st.max, st.range
        );
    }
    stdout.write_all(s.as_bytes())?;

    if let Some(dir) = &a.out {
        let mut out = OutDir::create(dir)?;
        out.write_json("estimate.json", &EstimateReport { runs, stats })?;
        out.finish(with_absolute_network(Command::Estimate(a.clone())), threads, seeds, vec![info])?;
    }
    Ok(())
}

fn cmd_gendata(a: &GendataArgs, threads: Option<usize>, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let (net, _, info) = load(&a.network, &ProbabilityArgs::default())?;
    let labeler = a.labeler.unwrap_or(Labeler::BatMcs {
        delta: net.arc_count().min(10),
        n_sim: 10_000,
    });
    let id = a
        .network
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "network".into());
    let ds = datagen::build_dataset(&net, &id, a.regime, a.size, labeler, a.seed)?;
    let mut out = OutDir::create(&a.out)?;
    out.write("dataset.csv", &datagen::to_csv_string(&ds))?;
    out.write_json("dataset.meta.json", &ds.meta)?;
    out.finish(with_absolute_network(Command::Gendata(a.clone())), threads, vec![a.seed], vec![info])?;
    writeln!(stdout, "wrote {} rows to {}", ds.len(), a.out.join("dataset.csv").display())?;
    Ok(())
}

fn load_dataset(path: &Path) -> Result<(Dataset, Vec<InputFile>)> {
    let (text, info) = read_input(path)?;
    let mut inputs = vec![info];
    let side = datagen::sidecar_path(path);
    let meta = if side.exists() {
        let (meta_text, meta_info) = read_input(&side)?;
        inputs.push(meta_info);
        Some(serde_json::from_str(&meta_text)?)
    } else {
        None
    };
    Ok((datagen::from_csv_str(&text, meta)?, inputs))
}

fn split_csv(split: &datagen::Split) -> String {
    let mut rows: Vec<(usize, String)> = split.test.iter().map(|&i| (i, format!("{i},test,"))).collect();
    for (f, fold) in split.folds.iter().enumerate() {
        rows.extend(fold.iter().map(|&i| (i, format!("{i},train,{f}"))));
    }
    rows.sort_by_key(|r| r.0);
    let mut out = String::from("row,set,fold\n");
    for (_, line) in rows {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn cmd_bench(a: &BenchArgs, threads: Option<usize>, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let specs = parse_model_list(&a.models)?;
    let (ds, inputs) = load_dataset(&a.dataset)?;
    let split = datagen::split_dataset(&ds, a.seed, a.folds)?;
    let results: Vec<ModelResult> = specs
        .into_iter()
        .map(|spec| {
            let spec = spec.with_seed(a.seed);
            let outcome = eval::evaluate(&spec, &ds, &split);
            ModelResult {
                model: spec.name().to_string(),
                metrics: outcome.as_ref().ok().cloned(),
                skipped: outcome.err().map(|e| e.to_string()),
                spec,
            }
        })
        .collect();
    let scored: Vec<(String, Metrics)> = results
        .iter()
        .filter_map(|r| r.metrics.clone().map(|m| (r.model.clone(), m)))
        .collect();
    let ranking = eval::rank_models(&scored);

    let mut text = eval::ranking_text(&ranking);
    for r in results.iter().filter(|r| r.skipped.is_some()) {
        let _ = writeln!(text, "skipped {}: {}", r.model, r.skipped.as_deref().unwrap_or(""));
    }
    stdout.write_all(text.as_bytes())?;

    if let Some(dir) = &a.out {
        let report = BenchReport {
            dataset_sha256: inputs[0].sha256.clone(),
            seed: a.seed,
            train_rows: split.train.len(),
            test_rows: split.test.len(),
            results,
        };
        let mut out = OutDir::create(dir)?;
        out.write("metrics.csv", &eval::metrics_csv(&scored))?;
        out.write_json("metrics.json", &report)?;
        out.write("ranking.csv", &eval::ranking_csv(&ranking))?;
        out.write("ranking.txt", &text)?;
        out.write("split.csv", &split_csv(&split))?;
        out.finish(with_absolute_network(Command::Bench(a.clone())), threads, vec![a.seed], inputs)?;
    }
    Ok(())
}

fn set_out(cmd: &mut Command, dir: PathBuf) -> Result<()> {
    match cmd {
        Command::Generate(a) => a.out = Some(dir),
        Command::Exact(a) => a.out = Some(dir),
        Command::Estimate(a) => a.out = Some(dir),
        Command::Gendata(a) => a.out = dir,
        Command::Bench(a) => a.out = Some(dir),
        Command::Info(_) | Command::Replay(_) => {
            return Err(Error::InvalidArgument("this command has no outputs to replay".into()))
        }
    }
    Ok(())
}

fn cmd_replay(a: &ReplayArgs, threads: Option<usize>, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&a.manifest)?)?;
    for input in &manifest.inputs {
        let bytes = fs::read(&input.path)?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(Error::InvalidArgument(format!(
                "input {} changed since the manifest was written",
                input.path.display()
            )));
        }
    }
    let mut cmd = manifest.command;
    if let Command::Replay(_) = cmd {
        return Err(Error::InvalidArgument("manifest records a replay".into()));
    }
    if let Some(dir) = &a.out {
        set_out(&mut cmd, dir.clone())?;
    }
    dispatch(&cmd, threads.or(manifest.threads), stdout)
}
