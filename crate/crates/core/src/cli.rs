//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data or format errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cnn::{gradient_check, load_model, tiny_model, CnnModel, Example, GradCheckOptions};
use crate::corpus::{
    dataset_stats, encode_documents, ingest_conll, parse_abstracts, parse_relations, read_encoded,
    write_encoded, Dataset, LabelStats,
};
use crate::embeddings::{load_w2v_text, PretrainedVectors};
use crate::error::Error;
use crate::extract::{extract_examples, read_examples, write_examples, SdpExample};
use crate::labels::{NegativeSamplingConfig, TaskMode};
use crate::pipeline::{
    cross_validate, predict_with_ensemble, read_predictions, run_variant_matrix, score_predictions,
    write_atomic, write_predictions, write_run, CvConfig, EmbeddingSet, EmbeddingSets, PredictionRow,
    Protocol, TrainConfig, VariantSpec, VoteMode,
};

#[derive(Debug, Parser, Serialize)]
#[command(name = "sdprel", version, about = "Relation classification over shortest dependency paths")]
pub struct Cli {
    /// File of `key=value` lines supplying flags absent from the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Replace entity mentions by their ids and split sentences.
    Encode(EncodeArgs),
    /// Align parses with encoded sentences and write SDP examples.
    Ingest(IngestArgs),
    /// Relation counts per label and direction.
    Stats(StatsArgs),
    /// Cross-validate one variant, or a variant × representation matrix.
    Train(TrainArgs),
    /// Score a prediction file against gold examples.
    Eval(EvalArgs),
    /// Predict with explicit model files.
    Predict(PredictArgs),
    /// Predict with the fold models of a training run.
    Ensemble(EnsembleArgs),
    /// Finite-difference check of the analytic gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct EncodeArgs {
    /// Annotated abstracts (XML with <entity id=...> tags).
    #[arg(long)]
    pub abstracts: PathBuf,
    #[arg(long)]
    pub out_sents: PathBuf,
    #[arg(long)]
    pub out_map: PathBuf,
    /// Directory for run_config.json (default: next to --out-sents).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CorpusArgs {
    /// Encoded sentences, one per line.
    #[arg(long)]
    pub sentences: PathBuf,
    /// Entity map written by `encode`.
    #[arg(long)]
    pub map: PathBuf,
    /// Relation annotations, e.g. `USAGE(H01-1001.1,H01-1001.2,REVERSE)`.
    #[arg(long)]
    pub relations: PathBuf,
    #[arg(long, default_value = "classify6")]
    pub mode: TaskMode,
    /// Largest token gap between the entities of a NONE instance.
    #[arg(long, default_value_t = 6)]
    pub max_gap: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// CoNLL parse of the encoded sentences, blocks in the same order.
    #[arg(long)]
    pub conll: PathBuf,
    #[arg(long)]
    pub out_examples: PathBuf,
    /// Directory for run_config.json (default: next to --out-examples).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    #[arg(long, requires_all = ["sentences", "relations"])]
    pub map: Option<PathBuf>,
    #[arg(long)]
    pub relations: Option<PathBuf>,
    /// Count an example file instead of a corpus.
    #[arg(long, conflicts_with_all = ["sentences", "map", "relations"], required_unless_present = "sentences")]
    pub examples: Option<PathBuf>,
    #[arg(long, default_value = "classify6")]
    pub mode: TaskMode,
    #[arg(long, default_value_t = 6)]
    pub max_gap: usize,
    /// Directory for stats.json and run_config.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EmbeddingArgs {
    /// Pretrained vectors used by any variant that needs them.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// ACL Anthology vectors (word2vec text format).
    #[arg(long)]
    pub acl_embeddings: Option<PathBuf>,
    /// Wikipedia vectors (word2vec text format).
    #[arg(long)]
    pub wiki_embeddings: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// SDP example file.
    #[arg(long, required_unless_present = "representation")]
    pub examples: Option<PathBuf>,
    /// `NAME=PATH` example file of one dependency representation (repeatable).
    #[arg(long, value_name = "NAME=PATH")]
    pub representation: Vec<String>,
    /// Model variant; a comma-separated list runs the variant matrix.
    #[arg(long, value_delimiter = ',', required = true, value_parser = parse_variant)]
    pub variant: Vec<VariantSpec>,
    #[command(flatten)]
    pub embedding_files: EmbeddingArgs,
    #[arg(long, default_value = "classify6")]
    pub mode: TaskMode,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `dev`: train/dev/test = k−2/1/1 folds; `eval`: train/dev = k−1/1.
    #[arg(long, default_value = "dev")]
    pub protocol: Protocol,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 50)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 100)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
    /// Embedding dimension of randomly initialized variants.
    #[arg(long, default_value_t = 300)]
    pub dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
    pub filter_widths: Vec<usize>,
    #[arg(long, default_value_t = 128)]
    pub filters: usize,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 3.0)]
    pub norm_cap: f64,
    /// Folds trained in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub examples: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, default_value = "classify6")]
    pub mode: TaskMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    /// Model file (repeatable).
    #[arg(long, required = true)]
    pub model: Vec<PathBuf>,
    #[arg(long)]
    pub examples: PathBuf,
    /// `mv` or `single:<i>`.
    #[arg(long, default_value = "mv")]
    pub vote: VoteMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EnsembleArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub examples: PathBuf,
    #[arg(long, default_value = "mv")]
    pub vote: VoteMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, default_value_t = 7)]
    pub max_len: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub widths: Vec<usize>,
    #[arg(long, default_value_t = 4)]
    pub filters: usize,
    /// 1, or 2 for a static plus a trainable channel.
    #[arg(long, default_value_t = 1)]
    pub channels: usize,
    /// Examples in the checked batch.
    #[arg(long, default_value_t = 5)]
    pub batch: usize,
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_variant(s: &str) -> Result<VariantSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Error reported by [`run`], with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Config(_)) { 1 } else { 2 };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Attach the file name to an error.
fn in_file<T>(path: &Path, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    in_file(path, File::open(path).map(BufReader::new).map_err(Error::from))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        in_file(parent, std::fs::create_dir_all(parent).map_err(Error::from))?;
    }
    in_file(path, File::create(path).map(BufWriter::new).map_err(Error::from))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(Error::from)?;
    bytes.push(b'\n');
    in_file(path, write_atomic(path, &bytes))
}

#[derive(Serialize)]
struct RunConfig<'a> {
    program: &'static str,
    version: &'static str,
    config_file: Option<&'a Path>,
    command: &'a Command,
}

fn write_run_config(dir: &Path, cli: &Cli) -> CliResult<()> {
    in_file(dir, std::fs::create_dir_all(dir).map_err(Error::from))?;
    write_json(
        &dir.join("run_config.json"),
        &RunConfig {
            program: "sdprel",
            version: env!("CARGO_PKG_VERSION"),
            config_file: cli.config.as_deref(),
            command: &cli.command,
        },
    )
}

/// Append `--key value` for every `key=value` line of the `--config` file
/// whose flag is absent from `argv`.
fn apply_config_file(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let strings: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strings.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            strings.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_owned)
        }
    });
    let Some(path) = path else { return Ok(argv) };
    let path = PathBuf::from(path);
    let text = in_file(&path, std::fs::read_to_string(&path).map_err(Error::from))?;
    let present = |key: &str| {
        strings
            .iter()
            .any(|a| a == &format!("--{key}") || a.starts_with(&format!("--{key}=")))
    };
    let mut out = argv;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!("{}:{}: expected key=value", path.display(), n + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" || present(&key) {
            continue;
        }
        out.push(format!("--{key}").into());
        let value = value.trim();
        if !value.is_empty() {
            out.push(value.into());
        }
    }
    Ok(out)
}

/// Parse `argv` (program name first), execute, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config_file(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("sdprel: {}", e.message);
            return e.code;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            if code == 0 {
                let _ = e.print();
            } else {
                eprint!("{}", e.render().ansi());
            }
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sdprel: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Encode(a) => {
            encode(a)?;
            write_run_config(&a.out.clone().unwrap_or_else(|| parent_dir(&a.out_sents)), cli)
        }
        Command::Ingest(a) => {
            ingest(a)?;
            write_run_config(&a.out.clone().unwrap_or_else(|| parent_dir(&a.out_examples)), cli)
        }
        Command::Stats(a) => {
            stats(a)?;
            match &a.out {
                Some(dir) => write_run_config(dir, cli),
                None => Ok(()),
            }
        }
        Command::Train(a) => {
            write_run_config(&a.out, cli)?;
            train(a)
        }
        Command::Eval(a) => {
            write_run_config(&a.out, cli)?;
            eval(a)
        }
        Command::Predict(a) => {
            write_run_config(&a.out, cli)?;
            let models = a.model.iter().map(|p| read_model(p)).collect::<CliResult<Vec<_>>>()?;
            predict(&models, &a.examples, a.vote, &a.out)
        }
        Command::Ensemble(a) => {
            write_run_config(&a.out, cli)?;
            let models = run_models(&a.run)?;
            predict(&models, &a.examples, a.vote, &a.out)
        }
        Command::Gradcheck(a) => {
            write_run_config(&a.out, cli)?;
            gradcheck(a)
        }
    }
}

fn encode(a: &EncodeArgs) -> CliResult<()> {
    let (mut entities, docs) = in_file(&a.abstracts, parse_abstracts(open(&a.abstracts)?))?;
    let sentences = in_file(&a.abstracts, encode_documents(&mut entities, &docs))?;
    let mut sents = create(&a.out_sents)?;
    let mut map = create(&a.out_map)?;
    in_file(&a.out_sents, write_encoded(&sentences, &entities, &mut sents, &mut map))?;
    in_file(&a.out_sents, sents.flush().map_err(Error::from))?;
    in_file(&a.out_map, map.flush().map_err(Error::from))?;
    log::info!(
        "encoded {} documents: {} sentences, {} entities",
        docs.len(),
        sentences.len(),
        entities.len()
    );
    Ok(())
}

fn load_dataset(a: &CorpusArgs) -> CliResult<Dataset> {
    let (sentences, entities) = in_file(&a.sentences, read_encoded(open(&a.sentences)?, open(&a.map)?))?;
    let relations = in_file(&a.relations, parse_relations(open(&a.relations)?))?;
    let negatives = NegativeSamplingConfig { max_gap: a.max_gap };
    in_file(&a.relations, Dataset::build(sentences, entities, relations, a.mode, &negatives))
}

fn ingest(a: &IngestArgs) -> CliResult<()> {
    let dataset = load_dataset(&a.corpus)?;
    let graphs = in_file(&a.conll, ingest_conll(open(&a.conll)?, &dataset.sentences))?;
    let examples = in_file(&a.conll, extract_examples(&dataset, &graphs))?;
    let mut out = create(&a.out_examples)?;
    in_file(&a.out_examples, write_examples(&examples, &mut out))?;
    in_file(&a.out_examples, out.flush().map_err(Error::from))?;
    log::info!("wrote {} examples ({} dropped across sentences)", examples.len(), dataset.dropped.len());
    Ok(())
}

fn stats(a: &StatsArgs) -> CliResult<()> {
    let stats = match (&a.examples, &a.sentences, &a.map, &a.relations) {
        (Some(path), ..) => {
            let examples = read_example_file(path)?;
            LabelStats::from_labels(examples.iter().map(|e| (e.label, e.reverse)))
        }
        (None, Some(sentences), Some(map), Some(relations)) => dataset_stats(&load_dataset(&CorpusArgs {
            sentences: sentences.clone(),
            map: map.clone(),
            relations: relations.clone(),
            mode: a.mode,
            max_gap: a.max_gap,
        })?),
        _ => {
            return Err(CliError::usage(
                "stats needs --examples, or --sentences with --map and --relations",
            ))
        }
    };
    print!("{}", stats.to_table());
    println!("{:<14}{:>24}", "all", stats.total());
    if let Some(dir) = &a.out {
        in_file(dir, std::fs::create_dir_all(dir).map_err(Error::from))?;
        write_json(&dir.join("stats.json"), &stats)?;
    }
    Ok(())
}

fn read_example_file(path: &Path) -> CliResult<Vec<SdpExample>> {
    in_file(path, read_examples(open(path)?))
}

fn load_vectors(path: &Path) -> CliResult<PretrainedVectors> {
    let (vectors, dim) = in_file(path, load_w2v_text(open(path)?))?;
    let id = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    log::info!("loaded {} vectors of dimension {dim} from {}", vectors.len(), path.display());
    Ok(PretrainedVectors { id, dim, vectors })
}

fn load_embedding_sets(files: &EmbeddingArgs, variants: &[VariantSpec]) -> CliResult<EmbeddingSets> {
    let needed = |set| variants.iter().any(|v| v.pretrained_sets().contains(&set));
    let mut sets = EmbeddingSets::default();
    for (set, specific, slot, flag) in [
        (EmbeddingSet::Acl, &files.acl_embeddings, &mut sets.acl, "--acl-embeddings"),
        (EmbeddingSet::Wiki, &files.wiki_embeddings, &mut sets.wiki, "--wiki-embeddings"),
    ] {
        if !needed(set) {
            continue;
        }
        let path = specific.as_ref().or(files.embeddings.as_ref()).ok_or_else(|| {
            CliError::usage(format!("the selected variants need {flag} (or --embeddings)"))
        })?;
        *slot = Some(load_vectors(path)?);
    }
    Ok(sets)
}

fn train(a: &TrainArgs) -> CliResult<()> {
    let embeddings = load_embedding_sets(&a.embedding_files, &a.variant)?;
    let config = CvConfig {
        mode: a.mode,
        folds: a.folds,
        seed: a.seed,
        protocol: a.protocol,
        embedding_dim: a.dim,
        filter_widths: a.filter_widths.clone(),
        filters_per_width: a.filters,
        dropout: a.dropout,
        norm_cap: a.norm_cap,
        train: TrainConfig {
            batch_size: a.batch_size,
            adam: crate::cnn::AdamConfig {
                lr: a.lr,
                ..Default::default()
            },
            max_epochs: a.max_epochs,
            patience: a.patience,
            seed: a.seed,
        },
        jobs: a.jobs.max(1),
    };

    if a.representation.is_empty() && a.variant.len() == 1 {
        let path = a.examples.as_ref().expect("required by clap");
        let examples = read_example_file(path)?;
        let result = in_file(path, cross_validate(&examples, &a.variant[0], &embeddings, &config))?;
        in_file(&a.out, write_run(&a.out, &result))?;
        println!(
            "{}: mean dev macro-F1 {:.4}, held-out macro-F1 {:.4}",
            a.variant[0],
            result.report.mean_dev_macro_f1,
            result.report.held_out.macro_f1
        );
        return Ok(());
    }

    let mut representations = Vec::new();
    if let Some(path) = &a.examples {
        representations.push(("examples".to_owned(), read_example_file(path)?));
    }
    for spec in &a.representation {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--representation `{spec}` is not NAME=PATH")))?;
        let path = Path::new(path);
        if !path.exists() {
            return Err(CliError {
                code: 2,
                message: format!("representation `{name}`: example file {} not found", path.display()),
            });
        }
        let examples = read_example_file(path).map_err(|mut e| {
            e.message = format!("representation `{name}`: {}", e.message);
            e
        })?;
        representations.push((name.to_owned(), examples));
    }
    let matrix = run_variant_matrix(&representations, &a.variant, &embeddings, &config)?;
    in_file(&a.out, std::fs::create_dir_all(&a.out).map_err(Error::from))?;
    write_json(&a.out.join("matrix.json"), &matrix)?;
    let table = matrix.to_tsv();
    in_file(&a.out, write_atomic(&a.out.join("matrix.tsv"), table.as_bytes()))?;
    print!("{table}");
    Ok(())
}

fn eval(a: &EvalArgs) -> CliResult<()> {
    let examples = read_example_file(&a.examples)?;
    let predictions = in_file(&a.predictions, read_predictions(open(&a.predictions)?))?;
    let scores = in_file(&a.predictions, score_predictions(&examples, &predictions, a.mode))?;
    write_json(&a.out.join("report.json"), &scores)?;
    println!("macro-F1 {:.4} over {} instances", scores.report.macro_f1, scores.instances);
    if let Some(s) = &scores.subtask2 {
        println!(
            "extraction F1 {:.4}, classification macro-F1 {:.4}",
            s.extraction.f1, s.classification.macro_f1
        );
    }
    Ok(())
}

fn read_model(path: &Path) -> CliResult<CnnModel<f32>> {
    in_file(path, load_model(open(path)?))
}

/// Fold models of a run directory in fold order.
fn run_models(dir: &Path) -> CliResult<Vec<CnnModel<f32>>> {
    let entries = in_file(dir, std::fs::read_dir(dir).map_err(Error::from))?;
    let mut found: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let path = in_file(dir, entry.map_err(Error::from))?.path();
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        if let Some(i) = name
            .strip_prefix("model_fold")
            .and_then(|r| r.strip_suffix(".sdprel"))
            .and_then(|i| i.parse().ok())
        {
            found.push((i, path));
        }
    }
    if found.is_empty() {
        return Err(CliError::usage(format!("no model_fold<i>.sdprel files in {}", dir.display())));
    }
    found.sort();
    found.iter().map(|(_, p)| read_model(p)).collect()
}

fn predict(models: &[CnnModel<f32>], examples: &Path, vote: VoteMode, out: &Path) -> CliResult<()> {
    let data = read_example_file(examples)?;
    let labels = predict_with_ensemble(models, &data, vote)?;
    let rows: Vec<PredictionRow> = data
        .iter()
        .zip(labels)
        .map(|(e, label)| PredictionRow {
            doc_id: e.doc_id.clone(),
            e1: e.e1.clone(),
            e2: e.e2.clone(),
            label,
        })
        .collect();
    let mut bytes = Vec::new();
    write_predictions(&rows, &mut bytes)?;
    let path = out.join("predictions.tsv");
    in_file(&path, write_atomic(&path, &bytes))?;
    log::info!("wrote {} predictions ({vote})", rows.len());
    Ok(())
}

fn gradcheck(a: &GradcheckArgs) -> CliResult<()> {
    let channels: &[bool] = match a.channels {
        1 => &[true],
        2 => &[false, true],
        n => return Err(CliError::usage(format!("--channels must be 1 or 2, got {n}"))),
    };
    let model = tiny_model(
        a.vocab_size,
        a.dim,
        a.max_len,
        a.classes,
        &a.widths,
        a.filters,
        channels,
        a.seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.wrapping_add(1));
    let mut batch: Vec<Example> = (0..a.batch.max(1))
        .map(|_| Example {
            indices: (0..a.max_len).map(|_| rng.gen_range(1..a.vocab_size)).collect(),
            gold: rng.gen_range(0..a.classes),
        })
        .collect();
    let weights: Vec<f64> = (0..a.classes).map(|_| rng.gen_range(0.5..2.0)).collect();
    let options = GradCheckOptions {
        samples: a.samples,
        epsilon: a.epsilon,
        tolerance: a.tolerance,
        seed: a.seed,
        ..Default::default()
    };
    let report = gradient_check(&model, &mut batch, &weights, &options)?;
    write_json(&a.out.join("gradcheck.json"), &report)?;
    println!(
        "checked {} parameters, worst relative error {:.3e}",
        report.checked, report.worst_rel_err
    );
    report.into_result()?;
    Ok(())
}

/// Help text of the top-level command.
pub fn help() -> String {
    Cli::command().render_help().to_string()
}
