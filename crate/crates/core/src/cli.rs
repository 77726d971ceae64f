//! The `framesel` command line: `gen`, `select`, `train`, `eval` and `bench`.
//!
//! Every subcommand writes a `<output>.manifest.json` next to its main output.
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or format errors.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::{format_efficiency_table, time_policy, EfficiencyReport};
use crate::corpus::{generate_synthetic, load_corpus, save_corpus, Corpus, SynthSpec};
use crate::error::Error;
use crate::learn::{
    train_attention_selector, train_scorer, AttentionSelector, ModelFile, ScorerNet, TrainConfig, TrainingRecord,
    INITIAL_TEMPERATURE,
};
use crate::retrieval::{evaluate_base, evaluate_policy, format_table, RankingReport};
use crate::selectors::{select_corpus, Policy, SelectionEntry, SelectorConfig, DEFAULT_Z};

/// Worker threads for the parallel evaluation path.
pub const THREADS_ENV: &str = "FRAMESEL_THREADS";

#[derive(Debug, Parser)]
#[command(name = "framesel", version, about = "Frame selection and retrieval evaluation over precomputed embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus.
    Gen(GenArgs),
    /// Run a selection policy over a corpus.
    Select(SelectArgs),
    /// Train the quality scorer or the attention selector.
    Train(TrainArgs),
    /// Rank every query's paired video under a selection policy.
    Eval(EvalArgs),
    /// Count interaction ops and time per-query interaction.
    Bench(BenchArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Select(_) => "select",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Bench(_) => "bench",
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    #[arg(long, default_value_t = 200)]
    videos: usize,
    #[arg(long, default_value_t = 16)]
    frames: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long = "noise-frames", default_value_t = 4)]
    noise_frames: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    #[arg(long = "query-noise", default_value_t = 0.1)]
    query_noise: f64,
    #[arg(long = "queries-per-video", default_value_t = 1)]
    queries_per_video: usize,
    /// Share of every clean frame along the corpus-wide content direction.
    #[arg(long = "content-share", default_value_t = 0.5)]
    content_share: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SelectArgs {
    #[arg(long, value_parser = parse_policy)]
    policy: Policy,
    #[arg(short = 'k')]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_Z)]
    z: usize,
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Select for one query only (text-guided policies).
    #[arg(long = "query-id")]
    query_id: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Target {
    Scorer,
    Attention,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[arg(long, value_enum)]
    target: Target,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 5e-4)]
    lr: f64,
    #[arg(long, default_value_t = 4)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Projection width of the attention selector (defaults to the corpus dimension).
    #[arg(long = "key-dim")]
    key_dim: Option<usize>,
    #[arg(long = "init-temperature", default_value_t = INITIAL_TEMPERATURE)]
    init_temperature: f64,
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
}

/// A single policy, or `base` for mean pooling of every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum EvalPolicy {
    Base,
    Policy(Policy),
}

#[derive(Debug, Args, Serialize)]
struct EvalArgs {
    #[arg(long, value_parser = parse_eval_policy, conflicts_with = "combine")]
    policy: Option<EvalPolicy>,
    /// One or more K values, comma separated.
    #[arg(short = 'k', value_delimiter = ',')]
    k: Vec<usize>,
    /// Policies whose frame scores are summed.
    #[arg(long, value_delimiter = ',', value_parser = parse_policy)]
    combine: Vec<Policy>,
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_Z)]
    z: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    #[arg(long, value_parser = parse_policy, conflicts_with = "combine")]
    policy: Option<Policy>,
    /// One or more K values, comma separated.
    #[arg(short = 'k', value_delimiter = ',', required = true)]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_policy)]
    combine: Vec<Policy>,
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_Z)]
    z: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    report: PathBuf,
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse::<Policy>().map_err(|e| e.to_string())
}

fn parse_eval_policy(s: &str) -> Result<EvalPolicy, String> {
    if s.eq_ignore_ascii_case("base") {
        return Ok(EvalPolicy::Base);
    }
    parse_policy(s).map(EvalPolicy::Policy)
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// A file read or written by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    /// What the checksum covers when it is not the raw file bytes.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub checksum_scope: Option<String>,
}

/// Everything needed to rerun a subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub flags: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
}

/// Path of the manifest written beside `output`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_artifact(path: &Path) -> CliResult<Artifact> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Artifact { path: path.display().to_string(), sha256: sha256_hex(&bytes), checksum_scope: None })
}

/// Removes the wall-clock block from a bench report document.
pub fn strip_timing(report: &serde_json::Value) -> serde_json::Value {
    let mut v = report.clone();
    if let Some(reports) = v.get_mut("reports").and_then(|r| r.as_array_mut()) {
        for r in reports {
            if let Some(obj) = r.as_object_mut() {
                obj.remove("timing");
            }
        }
    }
    v
}

fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

struct Run<'a> {
    argv: &'a [String],
    subcommand: &'static str,
}

impl Run<'_> {
    fn manifest<F: Serialize>(
        &self,
        flags: &F,
        seeds: Vec<u64>,
        inputs: &[&Path],
        outputs: Vec<Artifact>,
        primary: &Path,
    ) -> CliResult<()> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand.into(),
            argv: self.argv.to_vec(),
            flags: serde_json::to_value(flags).expect("flags serialize"),
            seeds,
            inputs: inputs.iter().map(|p| file_artifact(p)).collect::<CliResult<_>>()?,
            outputs,
        };
        write_text(&manifest_path(primary), &to_json_text(&manifest))
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let run = Run { argv: &args, subcommand: cli.command.name() };
    let outcome = match &cli.command {
        Command::Gen(a) => gen(&run, a),
        Command::Select(a) => select(&run, a),
        Command::Train(a) => train(&run, a),
        Command::Eval(a) => with_threads(|| eval(&run, a)),
        Command::Bench(a) => bench(&run, a),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => 1,
                CliError::Data(_) => 2,
            }
        }
    }
}

fn with_threads<T>(f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T>
where
    T: Send,
{
    let Some(threads) = thread_count(std::env::var(THREADS_ENV).ok())? else {
        return f();
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("cannot start {threads} worker threads: {e}")))?;
    pool.install(f)
}

fn thread_count(value: Option<String>) -> CliResult<Option<usize>> {
    value
        .map(|v| {
            v.trim()
                .parse()
                .ok()
                .filter(|&n: &usize| n > 0)
                .ok_or_else(|| usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))
        })
        .transpose()
}

fn gen(run: &Run<'_>, a: &GenArgs) -> CliResult<()> {
    let spec = SynthSpec {
        videos: a.videos,
        frames_per_video: a.frames,
        clusters: a.clusters,
        noise_frames_per_video: a.noise_frames,
        dim: a.dim,
        cluster_separation: a.separation,
        query_noise_scale: a.query_noise,
        queries_per_video: a.queries_per_video,
        content_share: a.content_share,
        seed: a.seed,
    };
    let corpus = generate_synthetic(&spec)?;
    save_corpus(&corpus, &a.output)?;
    run.manifest(a, vec![a.seed], &[], vec![file_artifact(&a.output)?], &a.output)?;
    println!("wrote {} videos and {} queries to {}", corpus.videos.len(), corpus.queries.len(), a.output.display());
    Ok(())
}

/// Loads model documents, at most one per kind.
fn load_models(paths: &[PathBuf]) -> CliResult<(Option<ScorerNet>, Option<AttentionSelector>)> {
    let (mut scorer, mut attention) = (None, None);
    for p in paths {
        match ModelFile::load(p)? {
            ModelFile::Scorer { model, .. } => {
                if scorer.replace(model).is_some() {
                    return Err(usage("more than one scorer model given"));
                }
            }
            ModelFile::Attention { model, .. } => {
                if attention.replace(model).is_some() {
                    return Err(usage("more than one attention model given"));
                }
            }
        }
    }
    Ok((scorer, attention))
}

fn selector_config(policies: Vec<Policy>, k: usize, z: usize, seed: u64, models: &[PathBuf]) -> CliResult<SelectorConfig> {
    if z == 0 {
        return Err(usage("--z must be at least 1"));
    }
    if k == 0 {
        return Err(usage("-k must be at least 1"));
    }
    let (scorer, attention) = load_models(models)?;
    if policies.contains(&Policy::LowQualityAware) && scorer.is_none() {
        return Err(usage("policy lq needs --model with a trained scorer"));
    }
    if policies.contains(&Policy::Interactive) && attention.is_none() {
        return Err(usage("policy int needs --model with a trained attention selector"));
    }
    Ok(SelectorConfig { policies, k, z, seed, scorer, attention })
}

fn policies_of(policy: Option<Policy>, combine: &[Policy]) -> CliResult<Vec<Policy>> {
    match (policy, combine.len()) {
        (Some(p), 0) => Ok(vec![p]),
        (None, 0) => Err(usage("give --policy or --combine")),
        (None, 1) => Err(usage("--combine needs at least two policies")),
        (None, _) => Ok(combine.to_vec()),
        (Some(_), _) => Err(usage("--policy and --combine are mutually exclusive")),
    }
}

fn load(path: &Path) -> CliResult<Corpus> {
    Ok(load_corpus(path)?)
}

#[derive(Serialize)]
struct SelectionDocument<'a> {
    policy: String,
    k: usize,
    z: Option<usize>,
    seed: u64,
    selections: &'a [SelectionEntry],
}

fn select(run: &Run<'_>, a: &SelectArgs) -> CliResult<()> {
    let config = selector_config(vec![a.policy], a.k, a.z, a.seed, &a.models)?;
    if a.query_id.is_some() && !a.policy.is_text_guided() {
        return Err(usage("--query-id applies to text-guided policies only"));
    }
    let corpus = load(&a.corpus)?;
    let entries = select_corpus(&corpus, &config, a.query_id)?;
    let doc = SelectionDocument { policy: config.label(), k: a.k, z: None, seed: a.seed, selections: &entries };
    write_text(&a.output, &to_json_text(&doc))?;
    let mut inputs: Vec<&Path> = vec![&a.corpus];
    inputs.extend(a.models.iter().map(PathBuf::as_path));
    run.manifest(a, vec![a.seed], &inputs, vec![file_artifact(&a.output)?], &a.output)?;
    println!("wrote {} selections to {}", entries.len(), a.output.display());
    Ok(())
}

fn train(run: &Run<'_>, a: &TrainArgs) -> CliResult<()> {
    let corpus = load(&a.corpus)?;
    let config = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        learning_rate: a.lr,
        seed: a.seed,
        initial_temperature: a.init_temperature,
        use_cl: a.target == Target::Attention,
        key_dim: a.key_dim,
    };
    let (file, trace) = match a.target {
        Target::Scorer => {
            let t = train_scorer(&corpus, &config)?;
            let rec = TrainingRecord { config, loss_trace: t.loss_trace.clone() };
            (ModelFile::scorer(t.model, Some(rec)), t.loss_trace)
        }
        Target::Attention => {
            let t = train_attention_selector(&corpus, &config)?;
            let rec = TrainingRecord { config, loss_trace: t.loss_trace.clone() };
            (ModelFile::attention(t.model, Some(rec)), t.loss_trace)
        }
    };
    file.save(&a.output)?;
    run.manifest(a, vec![a.seed], &[&a.corpus], vec![file_artifact(&a.output)?], &a.output)?;
    println!(
        "trained {:?} for {} epochs: loss {:.6} -> {:.6}; wrote {}",
        a.target,
        a.epochs,
        trace[0],
        trace[trace.len() - 1],
        a.output.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalDocument {
    reports: Vec<RankingReport>,
}

/// `report.json` → `report.txt`.
fn table_path(report: &Path) -> PathBuf {
    report.with_extension("txt")
}

fn eval(run: &Run<'_>, a: &EvalArgs) -> CliResult<()> {
    let corpus = load(&a.corpus)?;
    let reports = match a.policy {
        Some(EvalPolicy::Base) => {
            if !a.combine.is_empty() {
                return Err(usage("--policy base cannot be combined"));
            }
            vec![evaluate_base(&corpus)?]
        }
        other => {
            let single = match other {
                Some(EvalPolicy::Policy(p)) => Some(p),
                _ => None,
            };
            let policies = policies_of(single, &a.combine)?;
            if a.k.is_empty() {
                return Err(usage("-k is required"));
            }
            let mut reports = Vec::with_capacity(a.k.len());
            for &k in &a.k {
                let config = selector_config(policies.clone(), k, a.z, a.seed, &a.models)?;
                reports.push(evaluate_policy(&corpus, &config)?);
            }
            reports
        }
    };
    let table = format_table(&reports);
    write_text(&a.report, &to_json_text(&EvalDocument { reports }))?;
    let table_file = table_path(&a.report);
    if table_file != a.report {
        write_text(&table_file, &table)?;
    }
    let mut inputs: Vec<&Path> = vec![&a.corpus];
    inputs.extend(a.models.iter().map(PathBuf::as_path));
    let mut outputs = vec![file_artifact(&a.report)?];
    if table_file != a.report {
        outputs.push(file_artifact(&table_file)?);
    }
    run.manifest(a, vec![a.seed], &inputs, outputs, &a.report)?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct BenchDocument {
    reports: Vec<EfficiencyReport>,
}

fn bench(run: &Run<'_>, a: &BenchArgs) -> CliResult<()> {
    let policies = policies_of(a.policy, &a.combine)?;
    let corpus = load(&a.corpus)?;
    let mut reports = Vec::with_capacity(a.k.len());
    for &k in &a.k {
        let config = selector_config(policies.clone(), k, a.z, a.seed, &a.models)?;
        reports.push(time_policy(&corpus, &config, a.reps)?);
    }
    let table = format_efficiency_table(&reports);
    let doc = BenchDocument { reports };
    write_text(&a.report, &to_json_text(&doc))?;
    let stable = to_json_text(&strip_timing(&serde_json::to_value(&doc).expect("report serializes")));
    let output = Artifact {
        path: a.report.display().to_string(),
        sha256: sha256_hex(stable.as_bytes()),
        checksum_scope: Some("report with the timing blocks removed".into()),
    };
    let mut inputs: Vec<&Path> = vec![&a.corpus];
    inputs.extend(a.models.iter().map(PathBuf::as_path));
    run.manifest(a, vec![a.seed], &inputs, vec![output], &a.report)?;
    print!("{table}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(dir: &Path, args: &[&str]) -> i32 {
        let mut argv = vec!["framesel".to_string()];
        argv.extend(args.iter().map(|a| a.replace("{d}", dir.to_str().unwrap())));
        run_cli(argv)
    }

    #[test]
    fn usage_errors_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        assert_eq!(run(d, &["frobnicate"]), 1);
        assert_eq!(run(d, &["gen", "--bogus", "-o", "{d}/c.fsc"]), 1);
        assert_eq!(run(d, &["--help"]), 0);
        assert_eq!(run(d, &["gen", "--videos", "8", "--dim", "8", "-o", "{d}/c.fsc"]), 0);
        assert_eq!(run(d, &["eval", "--policy", "lq", "-k", "4", "--corpus", "{d}/c.fsc", "--report", "{d}/r.json"]), 1);
        assert_eq!(run(d, &["eval", "--combine", "redun", "-k", "4", "--corpus", "{d}/c.fsc", "--report", "{d}/r.json"]), 1);
        assert_eq!(run(d, &["select", "--policy", "int", "-k", "4", "--corpus", "{d}/c.fsc", "-o", "{d}/s.json"]), 1);
    }

    #[test]
    fn data_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(d.join("bad.fsc"), b"nope").unwrap();
        assert_eq!(run(d, &["eval", "--policy", "uni", "-k", "4", "--corpus", "{d}/bad.fsc", "--report", "{d}/r.json"]), 2);
        assert_eq!(run(d, &["eval", "--policy", "uni", "-k", "4", "--corpus", "{d}/missing.fsc", "--report", "{d}/r.json"]), 2);
        assert_eq!(run(d, &["gen", "--videos", "8", "--dim", "8", "-o", "{d}/c.fsc"]), 0);
        assert_eq!(run(d, &["eval", "--policy", "uni", "-k", "40", "--corpus", "{d}/c.fsc", "--report", "{d}/r.json"]), 2);
    }

    #[test]
    fn manifest_records_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        assert_eq!(run(d, &["gen", "--videos", "6", "--dim", "8", "--seed", "3", "-o", "{d}/c.fsc"]), 0);
        let m: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(d.join("c.fsc.manifest.json")).unwrap()).unwrap();
        assert_eq!(m.subcommand, "gen");
        assert_eq!(m.seeds, vec![3]);
        assert_eq!(m.outputs[0].sha256, sha256_hex(&std::fs::read(d.join("c.fsc")).unwrap()));
        assert_eq!(m.flags["videos"], 6);
    }

    #[test]
    fn selection_and_training_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        assert_eq!(run(d, &["gen", "--videos", "8", "--dim", "8", "-o", "{d}/c.fsc"]), 0);
        assert_eq!(run(d, &["select", "--policy", "uni", "-k", "4", "--corpus", "{d}/c.fsc", "-o", "{d}/s.json"]), 0);
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
        assert_eq!(doc["selections"].as_array().unwrap().len(), 8);
        assert_eq!(doc["selections"][0]["indices"], serde_json::json!([0, 4, 8, 12]));
        assert_eq!(
            run(d, &["train", "--target", "scorer", "--epochs", "2", "--corpus", "{d}/c.fsc", "-o", "{d}/m.json"]),
            0
        );
        assert!(matches!(ModelFile::load(d.join("m.json")).unwrap(), ModelFile::Scorer { training: Some(_), .. }));
        assert_eq!(
            run(d, &["eval", "--policy", "lq", "-k", "8,4", "--model", "{d}/m.json", "--corpus", "{d}/c.fsc", "--report", "{d}/r.json"]),
            0
        );
        let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
        assert_eq!(doc["reports"].as_array().unwrap().len(), 2);
        assert!(d.join("r.txt").exists());
    }

    #[test]
    fn thread_variable_is_validated() {
        assert!(matches!(thread_count(Some("zero".into())), Err(CliError::Usage(_))));
        assert!(matches!(thread_count(Some("0".into())), Err(CliError::Usage(_))));
        assert!(matches!(thread_count(Some(" 3".into())), Ok(Some(3))));
        assert!(matches!(thread_count(None), Ok(None)));
    }
}
