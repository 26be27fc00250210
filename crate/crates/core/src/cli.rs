//! Command-line entry point: ingest, split, train, grid search, evaluate, predict,
//! agreement, volumes, peaks, annotation service and synthetic data.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use anyhow::{anyhow, bail, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use crate::annotate::api;
use crate::annotate::rounds::CategoryKeywords;
use crate::annotate::service::{Annotator, Resolution};
use crate::annotate::store::LabelStore;
use crate::annotate::taxonomy::{Level, IRRELEVANT, OFF_TOPIC};
use crate::corpus::{
    self, ingest, load_tweets, stratified_split_at, FilterConfig, IngestOptions, LabeledEntry, LabeledSet, Provenance,
    SplitRatios, TweetSet,
};
use crate::error::Error;
use crate::eval::{
    benchmark, cohens_kappa, kappa_bootstrap_ci, render_class_table, render_macro_table, round2, BenchmarkSource,
    MetricsReport, ReportMeta, RunPredictions, CONFIDENCE,
};
use crate::models::external::{read_predictions, write_predictions};
use crate::models::grid::{cross_validate, grid_search, GridSpec};
use crate::models::{load_external_predictions, ClassWeight, Model, ModelFile, PredictionSet, SolverParams, SvmConfig, TextClassifier};
use crate::preprocess::{load_lemma_table, load_stopwords, DigitRemoval, PreprocessConfig, DEFAULT_MAX_TOKENS};
use crate::signal::{
    category_frequencies, daily_shares, detect_peaks, peaks_to_csv, recall_adjust, render_svg, DailySeries,
    DEFAULT_MIN_SEPARATION_DAYS, DEFAULT_PEAKS,
};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "papageno", version, about = "Suicide-prevention content classification, evaluation and annotation")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Machine-readable JSON on stdout, including errors.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for parallel steps (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter raw posts by keywords, exclusions, retweets and duplicates.
    Ingest(IngestArgs),
    /// Stratified train/validation/test split of labeled posts.
    Split(SplitArgs),
    /// Train a TF-IDF + SVM (or majority) model.
    Train(TrainArgs),
    /// Grid search SVM hyperparameters on the validation split.
    Gridsearch(GridArgs),
    /// Evaluate a model, prediction files, or a class-distribution fixture.
    Eval(EvalArgs),
    /// Evaluate several models and prediction sets on validation and test splits.
    Benchmark(BenchmarkArgs),
    /// Write `id,label` predictions for a post file.
    Predict(PredictArgs),
    /// Cohen's kappa between two label files.
    Kappa(KappaArgs),
    /// Daily category shares, overall frequencies and recall-adjusted prevalence.
    Volumes(VolumesArgs),
    /// Largest daily peaks per category.
    Peaks(PeaksArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
    /// Export labels from an annotation store.
    Export(ExportArgs),
    /// Generate a synthetic labeled corpus.
    Synth(SynthArgs),
}

fn parse_level(s: &str) -> Result<Level, String> {
    match s {
        "1" => Ok(Level::Task1),
        other => other.parse::<Level>().map_err(|e| e.to_string()),
    }
}

/// Vocabulary cap; `none` keeps every feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TopN(pub Option<usize>);

fn parse_top_n(s: &str) -> Result<TopN, String> {
    if s.eq_ignore_ascii_case("none") || s.eq_ignore_ascii_case("all") {
        return Ok(TopN(None));
    }
    s.parse::<usize>().map(|n| TopN(Some(n))).map_err(|e| format!("top-n must be a count or `none`: {e}"))
}

fn parse_named_path(s: &str) -> Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => {
            let p = PathBuf::from(s);
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or("model").to_string();
            Ok((name, p))
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Search-term file (default: shipped list).
    #[arg(long, requires = "exclusions")]
    pub keywords: Option<PathBuf>,
    /// Exclusion-term file (default: shipped list).
    #[arg(long, requires = "keywords")]
    pub exclusions: Option<PathBuf>,
    /// Keep retweets and duplicates, for volume estimation.
    #[arg(long)]
    pub keep_retweets: bool,
    #[arg(long)]
    pub since: Option<NaiveDate>,
    #[arg(long)]
    pub until: Option<NaiveDate>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Labeled JSONL (post fields plus `label`).
    #[arg(long, conflicts_with_all = ["tweets", "labels"], required_unless_present = "tweets")]
    pub input: Option<PathBuf>,
    /// Post JSONL to join with `--labels`.
    #[arg(long, requires = "labels")]
    pub tweets: Option<PathBuf>,
    /// `id,label` CSV of fine labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// train,validation,test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.64, 0.16, 0.20])]
    pub ratios: Vec<f64>,
    /// Taxonomy level to stratify by (12, 6 or 2).
    #[arg(long, value_parser = parse_level, default_value = "12")]
    pub stratify: Level,
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub remove_digits: bool,
    #[arg(long, value_enum, default_value = "whole-tokens")]
    pub digit_mode: DigitModeArg,
    #[arg(long)]
    pub remove_punctuation: bool,
    #[arg(long)]
    pub remove_stopwords: bool,
    /// Custom stopword list (implies --remove-stopwords).
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// TAB-separated `form<TAB>lemma` table.
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DigitModeArg {
    WholeTokens,
    Characters,
}

impl PreprocessArgs {
    fn config(&self) -> anyhow::Result<PreprocessConfig> {
        let stopwords = self.stopwords.as_deref().map(load_stopwords).transpose()?;
        let config = PreprocessConfig {
            remove_digits: self.remove_digits,
            digit_mode: match self.digit_mode {
                DigitModeArg::WholeTokens => DigitRemoval::WholeTokens,
                DigitModeArg::Characters => DigitRemoval::Characters,
            },
            remove_punctuation: self.remove_punctuation,
            remove_stopwords: self.remove_stopwords || stopwords.is_some(),
            stopwords,
            lemma_table: self.lemmas.as_deref().map(load_lemma_table).transpose()?,
            max_tokens: self.max_tokens,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum ModelKind {
    Svm,
    Majority,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// 1 (six classes), 2 (binary) or 12 (fine).
    #[arg(long, value_parser = parse_level, default_value = "1")]
    pub task: Level,
    #[arg(long, value_enum, default_value = "svm")]
    pub kind: ModelKind,
    #[arg(long = "C", alias = "c", default_value_t = 1.0)]
    pub c: f64,
    /// Largest n-gram length.
    #[arg(long, default_value_t = 1)]
    pub ngrams: usize,
    /// Vocabulary cap, or `none`.
    #[arg(long, value_parser = parse_top_n, default_value = "none")]
    pub top_n: TopN,
    #[arg(long, default_value = "none")]
    pub class_weight: ClassWeight,
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long, value_parser = parse_level, default_value = "1")]
    pub task: Level,
    /// CSV of every configuration, ranked.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "C", alias = "c", value_delimiter = ',')]
    pub c: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub ngrams: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_top_n)]
    pub top_n: Vec<TopN>,
    #[arg(long, value_delimiter = ',')]
    pub class_weight: Vec<ClassWeight>,
    /// Also run k-fold cross-validation of the best configuration on train + validation.
    #[arg(long)]
    pub cv: Option<usize>,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trained model file.
    #[arg(long, conflicts_with_all = ["predictions", "fixture"])]
    pub model: Option<PathBuf>,
    /// `id,label` prediction files; several files are treated as runs and averaged.
    #[arg(long, num_args = 1..)]
    pub predictions: Vec<PathBuf>,
    /// Class-distribution fixture evaluated with a constant majority prediction.
    #[arg(long, conflicts_with = "predictions")]
    pub fixture: Option<PathBuf>,
    /// Labeled JSONL to evaluate on.
    #[arg(long, required_unless_present = "fixture")]
    pub data: Option<PathBuf>,
    /// Level for prediction files (models carry their own).
    #[arg(long, value_parser = parse_level)]
    pub task: Option<Level>,
    /// Name recorded in the report.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long, default_value = "test")]
    pub split: String,
    /// Metrics JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    #[arg(long)]
    pub confusion_normalized: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Directory holding train.jsonl, validation.jsonl and test.jsonl.
    #[arg(long)]
    pub split_dir: PathBuf,
    #[arg(long, value_parser = parse_level, default_value = "1")]
    pub task: Level,
    /// Model file, as `name=path` or `path`.
    #[arg(long, value_parser = parse_named_path)]
    pub model: Vec<(String, PathBuf)>,
    /// Prediction file, as `name=path`; repeat a name for several runs.
    #[arg(long, value_parser = parse_named_path)]
    pub predictions: Vec<(String, PathBuf)>,
    /// Add a majority baseline fitted on train.jsonl.
    #[arg(long)]
    pub majority: bool,
    /// Which splits to score.
    #[arg(long, value_delimiter = ',', default_values_t = ["validation".to_string(), "test".to_string()])]
    pub splits: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Post JSONL.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// First rater's `id,label` file.
    #[arg(long)]
    pub a: PathBuf,
    /// Second rater's `id,label` file.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, value_parser = parse_level, default_value = "6")]
    pub level: Level,
    /// Drop items either rater put in this class.
    #[arg(long)]
    pub exclude: Option<String>,
    /// Bootstrap replicates for a percentile interval in addition to the asymptotic one.
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// `id,label` predictions.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Post JSONL supplying dates.
    #[arg(long)]
    pub tweets: PathBuf,
    #[arg(long, value_parser = parse_level, default_value = "6")]
    pub level: Level,
}

#[derive(Debug, Args)]
pub struct VolumesArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Daily shares CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metrics JSON whose per-class recall adjusts the overall shares.
    #[arg(long)]
    pub recalls: Option<PathBuf>,
    /// SVG chart of the daily shares.
    #[arg(long)]
    pub chart: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PeaksArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// Categories to scan (default: every relevant class).
    #[arg(long, value_delimiter = ',')]
    pub category: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_PEAKS)]
    pub k: usize,
    /// Minimum days between reported peaks.
    #[arg(long, default_value_t = DEFAULT_MIN_SEPARATION_DAYS)]
    pub min_separation: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub chart: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Post JSONL the rounds sample from.
    #[arg(long)]
    pub pool: PathBuf,
    /// Append-only label log (created if absent).
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Prediction sets for model-seeded rounds, as `name=path`.
    #[arg(long, value_parser = parse_named_path)]
    pub predictions: Vec<(String, PathBuf)>,
    #[arg(long, value_parser = parse_level, default_value = "6")]
    pub predictions_level: Level,
    /// `category<TAB>phrase` file for keyword-seeded rounds.
    #[arg(long)]
    pub category_keywords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub pool: PathBuf,
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value = "latest")]
    pub resolution: Resolution,
    /// Round ids (default: all).
    #[arg(long, value_delimiter = ',')]
    pub rounds: Vec<u64>,
    /// Labeled JSONL output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Label history CSV output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 3000)]
    pub docs: usize,
    /// Share of tokens drawn from the class vocabulary.
    #[arg(long, default_value_t = 0.3)]
    pub signal: f64,
    #[arg(long, default_value_t = 365)]
    pub days: i64,
}

struct Ctx {
    seed: u64,
    json: bool,
}

impl Ctx {
    fn emit(&self, value: serde_json::Value, human: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(&value).expect("json value"));
        } else {
            print!("{}", human());
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("worker pool already configured: {e}");
        }
    }
    let json = cli.json;
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let kind = e.downcast_ref::<Error>().map_or("error", Error::kind);
            let message = render_error(&e);
            if json {
                println!("{}", json!({ "error": { "kind": kind, "message": message } }));
            } else {
                eprintln!("error: {message}");
            }
            1
        }
    }
}

/// Joins the cause chain, skipping causes already spelled out by their parent.
fn render_error(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = Ctx { seed: cli.seed, json: cli.json };
    match cli.command {
        Command::Ingest(a) => cmd_ingest(&ctx, a),
        Command::Split(a) => cmd_split(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Gridsearch(a) => cmd_gridsearch(&ctx, a),
        Command::Eval(a) => cmd_eval(&ctx, a),
        Command::Benchmark(a) => cmd_benchmark(&ctx, a),
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Kappa(a) => cmd_kappa(&ctx, a),
        Command::Volumes(a) => cmd_volumes(&ctx, a),
        Command::Peaks(a) => cmd_peaks(&ctx, a),
        Command::Serve(a) => cmd_serve(&ctx, a),
        Command::Export(a) => cmd_export(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
    }
}

fn write_file(path: &Path, content: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

fn cmd_ingest(ctx: &Ctx, a: IngestArgs) -> anyhow::Result<()> {
    let report = load_tweets(&a.input)?;
    let config = match (&a.keywords, &a.exclusions) {
        (Some(k), Some(e)) => FilterConfig::from_files(k, e)?,
        _ => FilterConfig::builtin(),
    };
    let opts = IngestOptions { keep_retweets: a.keep_retweets, since: a.since, until: a.until };
    let (out, stats) = ingest(&report.set, &config, &opts);
    corpus::write_tweets(&a.output, &out)?;
    ctx.emit(json!({ "skipped_malformed": report.skipped, "stats": stats }), || {
        format!("malformed lines skipped: {}\n{stats:#?}\n", report.skipped)
    });
    Ok(())
}

fn load_labeled(args: &SplitArgs) -> anyhow::Result<(LabeledSet, usize)> {
    if let Some(input) = &args.input {
        return Ok((LabeledSet::load(input)?, 0));
    }
    let tweets = load_tweets(args.tweets.as_deref().expect("clap requires tweets"))?.set;
    let labels_path = args.labels.as_deref().expect("clap requires labels");
    let file = fs::File::open(labels_path).map_err(|e| Error::io(labels_path, e))?;
    let labels = read_predictions(file, Level::Fine, "labels")?;
    let mut unlabeled = 0;
    let mut entries = Vec::new();
    for t in tweets.tweets {
        match labels.get(&t.id) {
            Some(l) => entries.push(LabeledEntry { label: l.parse()?, tweet: t, provenance: Provenance::Random }),
            None => unlabeled += 1,
        }
    }
    Ok((LabeledSet::new(entries)?, unlabeled))
}

fn cmd_split(ctx: &Ctx, a: SplitArgs) -> anyhow::Result<()> {
    let (set, unlabeled) = load_labeled(&a)?;
    let ratios = SplitRatios { train: a.ratios[0], validation: a.ratios[1], test: a.ratios[2] };
    let split = stratified_split_at(&set, ratios, ctx.seed, a.stratify)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for (name, part) in [("train", &split.train), ("validation", &split.validation), ("test", &split.test)] {
        part.save(&a.out_dir.join(format!("{name}.jsonl")))?;
    }
    let sizes = json!({
        "input": set.len(),
        "unlabeled_skipped": unlabeled,
        "train": split.train.len(),
        "validation": split.validation.len(),
        "test": split.test.len(),
        "seed": ctx.seed,
    });
    ctx.emit(sizes.clone(), || format!("{sizes}\n"));
    Ok(())
}

fn solver(ctx: &Ctx, tolerance: f64, max_epochs: usize) -> SolverParams {
    SolverParams { tolerance, max_epochs, seed: ctx.seed, ..SolverParams::default() }
}

fn cmd_train(ctx: &Ctx, a: TrainArgs) -> anyhow::Result<()> {
    let train = LabeledSet::load(&a.train)?;
    let labels = train.labels(a.task);
    let (model, summary) = match a.kind {
        ModelKind::Majority => {
            let m = Model::majority(&labels, a.task)?;
            let s = json!({ "model": "majority", "prediction": m.predict("") });
            (m, s)
        }
        ModelKind::Svm => {
            let config = SvmConfig { c: a.c, class_weight: a.class_weight, ngram_max: a.ngrams, top_n: a.top_n.0 };
            let pre = a.preprocess.config()?;
            let (clf, info) =
                TextClassifier::train(&train.texts(), &labels, a.task, &config, &pre, &solver(ctx, a.tolerance, a.max_epochs))?;
            let unconverged = info.pairs.iter().filter(|(_, p)| !p.converged).count();
            if unconverged > 0 {
                log::warn!("{unconverged} pairwise problems hit the epoch limit");
            }
            let s = json!({
                "model": "tfidf_svm",
                "config": config,
                "vocabulary": clf.tfidf.vocab_size(),
                "classes": clf.ovo.classes,
                "pairs": info.pairs.len(),
                "unconverged_pairs": unconverged,
                "max_epochs_used": info.pairs.iter().map(|(_, p)| p.epochs).max().unwrap_or(0),
            });
            (Model::Svm(Box::new(clf)), s)
        }
    };
    ModelFile::new(model).save(&a.model)?;
    ctx.emit(summary.clone(), || format!("{summary}\nmodel written to {}\n", a.model.display()));
    Ok(())
}

fn cmd_gridsearch(ctx: &Ctx, a: GridArgs) -> anyhow::Result<()> {
    let train = LabeledSet::load(&a.train)?;
    let validation = LabeledSet::load(&a.validation)?;
    let defaults = GridSpec::default();
    let grid = GridSpec {
        ngram_max: if a.ngrams.is_empty() { defaults.ngram_max } else { a.ngrams.clone() },
        top_n: if a.top_n.is_empty() { defaults.top_n } else { a.top_n.iter().map(|t| t.0).collect() },
        c: if a.c.is_empty() { defaults.c } else { a.c.clone() },
        class_weight: if a.class_weight.is_empty() { defaults.class_weight } else { a.class_weight.clone() },
    };
    let pre = a.preprocess.config()?;
    let params = solver(ctx, 1e-3, 1000);
    let outcome = grid_search(&train, &validation, a.task, &grid, &pre, &params)?;
    if let Some(out) = &a.out {
        outcome.save_csv(out)?;
    }
    let best = outcome.best.clone().ok_or_else(|| anyhow!("every grid configuration failed"))?;
    let cv = match a.cv {
        Some(k) => {
            let mut all = train.entries.clone();
            all.extend(validation.entries.iter().cloned());
            Some(cross_validate(&LabeledSet::new(all)?, a.task, k, &best, &pre, &params, ctx.seed)?)
        }
        None => None,
    };
    let top: Vec<_> = outcome.results.iter().take(5).collect();
    ctx.emit(json!({ "best": best, "kernel": outcome.kernel, "top": top, "cv_mean": cv.as_ref().map(|c| &c.mean) }), || {
        let mut s = format!("best: {best} (kernel {})\n", outcome.kernel);
        for (i, r) in top.iter().enumerate() {
            let f1 = r.validation.map_or("failed".to_string(), |m| format!("{:.4}", m.f1));
            s.push_str(&format!("{:>2}. {}  macro-F1 {f1}\n", i + 1, r.config));
        }
        if let Some(cv) = &cv {
            s.push_str(&format!("{}-fold CV macro-F1 {:.4}\n", cv.folds.len(), cv.mean.macro_f1));
        }
        s
    });
    Ok(())
}

#[derive(Deserialize)]
struct Fixture {
    level: String,
    counts: BTreeMap<String, u64>,
}

fn fixture_report(path: &Path, seed: u64) -> anyhow::Result<MetricsReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fx: Fixture = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let level = parse_level(&fx.level).map_err(|e| anyhow!(e))?;
    let mut truth: Vec<&str> = Vec::new();
    for class in level.classes() {
        let n = *fx.counts.get(*class).ok_or_else(|| anyhow!("fixture lacks class {class}"))?;
        truth.extend(std::iter::repeat_n(*class, n as usize));
    }
    if fx.counts.len() != level.size() {
        bail!("fixture has {} classes, level {level} has {}", fx.counts.len(), level.size());
    }
    let majority = Model::majority(&truth, level)?;
    let pred = majority.predict_batch(&truth);
    let meta = ReportMeta {
        model: "majority".into(),
        task: level.to_string(),
        split: "test".into(),
        seed: Some(seed),
        run: None,
        runs_averaged: None,
    };
    Ok(MetricsReport::evaluate(&truth, &pred, &level.class_names(), meta)?)
}

fn cmd_eval(ctx: &Ctx, a: EvalArgs) -> anyhow::Result<()> {
    let reports: Vec<MetricsReport> = if let Some(fx) = &a.fixture {
        vec![fixture_report(fx, ctx.seed)?]
    } else {
        let data = LabeledSet::load(a.data.as_deref().expect("clap requires data"))?;
        if let Some(path) = &a.model {
            let model = ModelFile::load(path)?.model;
            let level = model.level();
            if a.task.is_some_and(|t| t != level) {
                bail!("model was trained at level {level}, not {}", a.task.unwrap());
            }
            let truth = data.labels(level);
            let pred = model.predict_batch(&data.texts());
            let meta = ReportMeta {
                model: a.name.clone().unwrap_or_else(|| model.name().to_string()),
                task: level.to_string(),
                split: a.split.clone(),
                seed: Some(ctx.seed),
                run: None,
                runs_averaged: None,
            };
            vec![MetricsReport::evaluate(&truth, &pred, &level.class_names(), meta)?]
        } else if !a.predictions.is_empty() {
            let level = a.task.ok_or_else(|| anyhow!("--task is required with --predictions"))?;
            let name = a.name.clone().unwrap_or_else(|| "external".into());
            let runs = a
                .predictions
                .iter()
                .map(|p| Ok(RunPredictions::External(load_external_predictions(p, level, &name)?)))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let source = BenchmarkSource { name, runs };
            benchmark(&[source], &[(a.split.as_str(), &data)], level, Some(ctx.seed))?
        } else {
            bail!("one of --model, --predictions or --fixture is required");
        }
    };
    let main = reports.last().expect("at least one report");
    if let Some(p) = &a.confusion {
        write_file(p, &main.confusion.to_csv())?;
    }
    if let Some(p) = &a.confusion_normalized {
        write_file(p, &main.confusion.to_normalized_csv())?;
    }
    let body = if reports.len() == 1 {
        serde_json::to_string_pretty(main)?
    } else {
        serde_json::to_string_pretty(&reports)?
    };
    if let Some(out) = &a.out {
        write_file(out, &(body.clone() + "\n"))?;
    }
    ctx.emit(serde_json::from_str(&body)?, || {
        let mut s = render_macro_table(&reports);
        s.push('\n');
        s.push_str(&render_class_table(main));
        s
    });
    Ok(())
}

fn cmd_benchmark(ctx: &Ctx, a: BenchmarkArgs) -> anyhow::Result<()> {
    let load = |name: &str| LabeledSet::load(&a.split_dir.join(format!("{name}.jsonl")));
    let mut sets = Vec::new();
    for name in &a.splits {
        if name != "validation" && name != "test" && name != "train" {
            bail!("unknown split `{name}`");
        }
        sets.push((name.as_str(), load(name)?));
    }
    let mut sources = Vec::new();
    if a.majority {
        let train = load("train")?;
        sources.push(BenchmarkSource {
            name: "majority".into(),
            runs: vec![RunPredictions::Model(Model::majority(&train.labels(a.task), a.task)?)],
        });
    }
    for (name, path) in &a.model {
        let model = ModelFile::load(path)?.model;
        if model.level() != a.task {
            bail!("model {name} was trained at level {}, not {}", model.level(), a.task);
        }
        sources.push(BenchmarkSource { name: name.clone(), runs: vec![RunPredictions::Model(model)] });
    }
    let mut grouped: BTreeMap<&str, Vec<RunPredictions>> = BTreeMap::new();
    for (name, path) in &a.predictions {
        grouped
            .entry(name.as_str())
            .or_default()
            .push(RunPredictions::External(load_external_predictions(path, a.task, name)?));
    }
    for (name, runs) in grouped {
        sources.push(BenchmarkSource { name: name.to_string(), runs });
    }
    if sources.is_empty() {
        bail!("nothing to benchmark: pass --model, --predictions or --majority");
    }
    let refs: Vec<(&str, &LabeledSet)> = sets.iter().map(|(n, s)| (*n, s)).collect();
    let reports = benchmark(&sources, &refs, a.task, Some(ctx.seed))?;
    let body = serde_json::to_string_pretty(&reports)?;
    if let Some(out) = &a.out {
        write_file(out, &(body.clone() + "\n"))?;
    }
    ctx.emit(serde_json::from_str(&body)?, || render_macro_table(&reports));
    Ok(())
}

fn cmd_predict(ctx: &Ctx, a: PredictArgs) -> anyhow::Result<()> {
    let model = ModelFile::load(&a.model)?.model;
    let tweets = load_tweets(&a.input)?;
    let texts: Vec<&str> = tweets.set.tweets.iter().map(|t| t.text.as_str()).collect();
    let labels = model.predict_batch(&texts);
    write_predictions(&a.output, tweets.set.tweets.iter().map(|t| t.id.as_str()).zip(labels.iter().copied()))?;
    let freq = category_frequencies(&labels, model.level()).unwrap_or_default();
    ctx.emit(json!({ "predicted": labels.len(), "skipped_malformed": tweets.skipped, "shares": freq }), || {
        format!("{} predictions written to {}\n", labels.len(), a.output.display())
    });
    Ok(())
}

fn cmd_kappa(ctx: &Ctx, a: KappaArgs) -> anyhow::Result<()> {
    let ra = load_external_predictions(&a.a, a.level, "a")?;
    let rb = load_external_predictions(&a.b, a.level, "b")?;
    if let Some(x) = &a.exclude {
        if a.level.parse_label(x).is_none() {
            bail!(Error::UnknownLabel { label: x.clone(), context: format!("{}-class kappa exclusion", a.level) });
        }
    }
    let (mut la, mut lb) = (Vec::new(), Vec::new());
    for (id, x) in &ra.labels {
        if let Some(y) = rb.get(id) {
            if a.exclude.as_deref().is_some_and(|e| e == x || e == y) {
                continue;
            }
            la.push(x.as_str());
            lb.push(y);
        }
    }
    let k = cohens_kappa(&la, &lb)?;
    let boot = match a.bootstrap {
        Some(n) => Some(kappa_bootstrap_ci(&la, &lb, n, CONFIDENCE, ctx.seed)?),
        None => None,
    };
    ctx.emit(json!({ "level": a.level, "exclude": a.exclude, "kappa": k, "bootstrap_ci": boot }), || {
        let mut s = format!("kappa {:.2} (95% CI {:.2}-{:.2}), n={}\n", k.kappa, k.ci.0, k.ci.1, k.n);
        if let Some((lo, hi)) = boot {
            s.push_str(&format!("bootstrap 95% CI {lo:.2}-{hi:.2}\n"));
        }
        s
    });
    Ok(())
}

fn load_series(a: &SeriesArgs) -> anyhow::Result<(DailySeries, Vec<String>)> {
    let preds: PredictionSet = load_external_predictions(&a.predictions, a.level, "predictions")?;
    let tweets: TweetSet = load_tweets(&a.tweets)?.set;
    let dates: HashMap<&str, NaiveDate> = tweets.tweets.iter().map(|t| (t.id.as_str(), t.date())).collect();
    let items: Vec<(Option<NaiveDate>, &str)> =
        preds.labels.iter().map(|(id, l)| (dates.get(id.as_str()).copied(), l.as_str())).collect();
    if let Some((i, _)) = items.iter().enumerate().find(|(_, (d, _))| d.is_none()) {
        let id = preds.labels.keys().nth(i).expect("index in range");
        bail!(Error::InvalidInput(format!("prediction for `{id}` has no matching post date")));
    }
    let labels = items.iter().map(|(_, l)| l.to_string()).collect();
    Ok((daily_shares(&items, a.level)?, labels))
}

fn relevant_classes(level: Level) -> Vec<String> {
    level.class_names().into_iter().filter(|c| c != IRRELEVANT && c != OFF_TOPIC).collect()
}

fn cmd_volumes(ctx: &Ctx, a: VolumesArgs) -> anyhow::Result<()> {
    let (series, labels) = load_series(&a.series)?;
    let level = a.series.level;
    let freq = category_frequencies(&labels, level)?;
    if let Some(out) = &a.out {
        write_file(out, &series.to_csv())?;
    }
    if let Some(chart) = &a.chart {
        write_file(chart, &render_svg(&series, &series.categories, &[])?)?;
    }
    let adjusted = match &a.recalls {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let report: MetricsReport =
                serde_json::from_str(&text).with_context(|| format!("parsing metrics {}", path.display()))?;
            let recalls = report.recalls();
            let relevant = relevant_classes(level);
            let raw: Vec<(String, f64)> = freq.iter().filter(|(c, _)| relevant.contains(c)).cloned().collect();
            Some(recall_adjust(&raw, &recalls)?)
        }
        None => None,
    };
    ctx.emit(json!({ "days": series.rows.len(), "posts": labels.len(), "shares": freq, "adjusted": adjusted }), || {
        let mut s = format!("{} posts over {} days\n", labels.len(), series.rows.len());
        for (c, p) in &freq {
            s.push_str(&format!("{c:<28} {:>6.2}%\n", round2(*p)));
        }
        if let Some(adj) = &adjusted {
            s.push_str("recall-adjusted:\n");
            for c in &adj.categories {
                s.push_str(&format!("{:<28} {:>6.2}% (recall {:.2})\n", c.category, c.adjusted, c.recall));
            }
            s.push_str(&format!("{:<28} {:>6.2}%{}\n", "residual", adj.residual, if adj.clamped { " (clamped)" } else { "" }));
        }
        s
    });
    Ok(())
}

fn cmd_peaks(ctx: &Ctx, a: PeaksArgs) -> anyhow::Result<()> {
    let (series, _) = load_series(&a.series)?;
    let categories = if a.category.is_empty() { relevant_classes(a.series.level) } else { a.category.clone() };
    let mut peaks = Vec::new();
    for c in &categories {
        peaks.extend(detect_peaks(&series, c, a.k, a.min_separation)?);
    }
    let csv = peaks_to_csv(&peaks);
    if let Some(out) = &a.out {
        write_file(out, &csv)?;
    }
    if let Some(chart) = &a.chart {
        write_file(chart, &render_svg(&series, &categories, &peaks)?)?;
    }
    ctx.emit(json!({ "peaks": peaks }), || csv.clone());
    Ok(())
}

fn build_annotator(pool: &Path, store: &Path, keywords: Option<&Path>) -> anyhow::Result<Annotator> {
    let pool = load_tweets(pool)?.set.tweets;
    let keywords = match keywords {
        Some(p) => CategoryKeywords::load(p)?,
        None => CategoryKeywords::builtin(),
    };
    Ok(Annotator::new(pool, keywords, LabelStore::open(store)?)?)
}

fn cmd_serve(_ctx: &Ctx, a: ServeArgs) -> anyhow::Result<()> {
    let mut annotator = build_annotator(&a.pool, &a.store, a.category_keywords.as_deref())?;
    for (name, path) in &a.predictions {
        annotator.add_predictions(name.clone(), load_external_predictions(path, a.predictions_level, name)?);
    }
    let state = Arc::new(RwLock::new(annotator));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("serving on http://{}/api/v1", a.addr);
    rt.block_on(api::serve(state, a.addr))?;
    Ok(())
}

fn cmd_export(ctx: &Ctx, a: ExportArgs) -> anyhow::Result<()> {
    let annotator = build_annotator(&a.pool, &a.store, None)?;
    let set = annotator.export_labeled(&a.rounds, a.resolution)?;
    if let Some(out) = &a.out {
        set.save(out)?;
    }
    if let Some(csv) = &a.csv {
        write_file(csv, &annotator.export_csv())?;
    }
    ctx.emit(json!({ "labeled": set.len() }), || format!("{} labeled posts exported\n", set.len()));
    Ok(())
}

/// Posts that the ingest filters should drop, appended to the synthetic pool.
fn ingest_distractors() -> Vec<serde_json::Value> {
    vec![
        json!({ "id": "x1", "text": "Suicide Squad trailer is lit", "created_at": "2019-03-01T10:00:00Z" }),
        json!({ "id": "x2", "text": "RT @someone: suicide prevention works", "created_at": "2019-03-01T11:00:00Z" }),
        json!({ "id": "x3", "text": "nice weather today", "created_at": "2019-03-01T12:00:00Z" }),
        json!({ "id": "x4", "text": "that vote was political suicide", "created_at": "2019-03-02T09:00:00Z" }),
        json!({ "id": "x5", "text": "call the suicide lifeline https://a.b", "created_at": "2019-03-02T10:00:00Z" }),
        json!({ "id": "x6", "text": "call the suicide lifeline https://c.d", "created_at": "2019-03-02T11:00:00Z" }),
    ]
}

fn cmd_synth(ctx: &Ctx, a: SynthArgs) -> anyhow::Result<()> {
    let config = SynthConfig { docs: a.docs, signal: a.signal, days: a.days, seed: ctx.seed, ..SynthConfig::default() };
    if !(config.signal > 0.0 && config.signal <= 1.0) {
        bail!(Error::InvalidInput("--signal must be in (0, 1]".into()));
    }
    let set = generate(&config);
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    set.save(&a.out_dir.join("labeled.jsonl"))?;
    let mut lines: Vec<String> = set.entries.iter().map(|e| serde_json::to_string(&e.tweet)).collect::<Result<_, _>>()?;
    lines.extend(ingest_distractors().iter().map(|v| v.to_string()));
    write_file(&a.out_dir.join("tweets.jsonl"), &(lines.join("\n") + "\n"))?;
    write_predictions(
        &a.out_dir.join("labels.csv"),
        set.entries.iter().map(|e| (e.tweet.id.as_str(), e.label.as_str())),
    )?;
    ctx.emit(json!({ "docs": set.len(), "out_dir": a.out_dir }), || {
        format!("{} labeled posts written to {}\n", set.len(), a.out_dir.display())
    });
    Ok(())
}
