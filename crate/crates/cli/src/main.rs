//! Command-line entry point for the triplet-tagging pipeline.
//!
//! Subcommands: `vocab`, `encode`, `decode`, `synth`, `train`, `eval`,
//! `sweep`, `analyze`. Exit codes: 0 success, 1 usage/config error, 2 data
//! validation error, 3 numeric failure.

mod settings;

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use settings::Settings;
use tritag::codec::{decode as decode_tags, encode as encode_tags};
use tritag::corpus::{load_corpus, split_validation, Corpus};
use tritag::data::TripletRecord;
use tritag::eval::{aggregate, PredictionRecord, SentenceEval};
use tritag::model::{load_word_vectors, Checkpoint};
use tritag::synth::generate;
use tritag::tags::{build_tag_vocabulary, RelationSet, Tag};
use tritag::train::{alpha_sweep, predictions, train_with_embeddings, EpochRecord};
use tritag::{Error, Result};

#[derive(Parser)]
#[command(name = "tritag", version, about = "Joint entity/relation triplet extraction via sequence tagging")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Size of the worker thread pool (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the tag vocabulary for a relations file (one name per line).
    Vocab {
        #[arg(long)]
        relations: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a JSONL corpus to tag lines (space-separated text forms).
    Encode {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        relations: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert tag lines back to triplet JSONL.
    Decode {
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate deterministic synthetic train/test corpora.
    Synth {
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
    },
    /// Train a tagger; validation is split off the test corpus.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Relations file; defaults to the configured synthetic set.
        #[arg(long)]
        relations: Option<PathBuf>,
        /// Pretrained word vectors (text format: `word v1 .. vd`).
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Per-epoch history JSONL.
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Evaluate a checkpoint on the evaluation part of a test corpus.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Also dump per-sentence predictions as JSONL.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Train and evaluate once per bias weight.
    Sweep {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        relations: Option<PathBuf>,
        /// Comma-separated bias weights, e.g. `1,5,10,20`.
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Element metrics and single-entity ratios from a predictions file.
    Analyze {
        #[arg(long)]
        predictions: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code is 2; this tool reserves 2 for data
            // errors, so usage problems exit 1 (0 for --help/--version).
            let is_help = e.use_stderr();
            let _ = e.print();
            return if is_help { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric_error() {
                ExitCode::from(3)
            } else if e.is_data_error() || matches!(e, Error::Json(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut settings = Settings::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    match cli.command {
        Command::Vocab { relations, out } => cmd_vocab(&relations, &out),
        Command::Encode { corpus, relations, out } => cmd_encode(&corpus, &relations, out.as_deref()),
        Command::Decode { tags, out } => cmd_decode(&tags, out.as_deref()),
        Command::Synth { out_train, out_test, n_train, n_test } => {
            if let Some(n) = n_train {
                settings.synth.n_train = n;
            }
            if let Some(n) = n_test {
                settings.synth.n_test = n;
            }
            cmd_synth(&settings, &out_train, &out_test)
        }
        Command::Train {
            train,
            test,
            relations,
            embeddings,
            checkpoint,
            history,
            alpha,
            max_epochs,
            batch_size,
        } => {
            if let Some(alpha) = alpha {
                settings.model.alpha = alpha;
            }
            if let Some(n) = max_epochs {
                settings.train.max_epochs = n;
            }
            if let Some(n) = batch_size {
                settings.train.batch_size = n;
            }
            cmd_train(
                &settings,
                &train,
                &test,
                relations.as_deref(),
                embeddings.as_deref(),
                &checkpoint,
                history.as_deref(),
            )
        }
        Command::Eval { checkpoint, test, report, predictions } => {
            cmd_eval(&settings, &checkpoint, &test, &report, predictions.as_deref())
        }
        Command::Sweep { train, test, relations, alphas, report, max_epochs } => {
            if let Some(n) = max_epochs {
                settings.train.max_epochs = n;
            }
            cmd_sweep(&settings, &train, &test, relations.as_deref(), &alphas, &report)
        }
        Command::Analyze { predictions, report } => {
            cmd_analyze(&settings, &predictions, report.as_deref())
        }
    }
}

fn read_relations_file(path: &Path) -> Result<RelationSet> {
    let text = fs::read_to_string(path)?;
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    RelationSet::new(names)
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, content)?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

/// Every artifact-producing command leaves the merged settings next to its
/// main output, so a run is reproducible from disk.
fn write_sidecar_config(artifact: &Path, settings: &Settings) -> Result<()> {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    let path = artifact.with_file_name(name);
    fs::write(path, serde_json::to_string_pretty(settings)?)?;
    Ok(())
}

fn report_envelope(settings: &Settings, payload: serde_json::Value) -> serde_json::Value {
    let generated = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    json!({
        "build": {
            "version": env!("CARGO_PKG_VERSION"),
            "commit": env!("TRITAG_BUILD_COMMIT"),
        },
        "generated_unix_secs": generated,
        "config": settings,
        "report": payload,
    })
}

fn write_report<T: Serialize>(
    settings: &Settings,
    payload: &T,
    path: Option<&Path>,
) -> Result<()> {
    let envelope = report_envelope(settings, serde_json::to_value(payload)?);
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    write_output(path, &text)
}

fn load_corpus_warned(path: &Path, relations: &RelationSet) -> Result<Corpus> {
    let corpus = load_corpus(path, relations)?;
    if corpus.dropped_overlapping > 0 {
        eprintln!(
            "warning: dropped {} sentence(s) with overlapping entities from {}",
            corpus.dropped_overlapping,
            path.display()
        );
    }
    Ok(corpus)
}

fn cmd_vocab(relations: &Path, out: &Path) -> Result<()> {
    let relations = read_relations_file(relations)?;
    let vocab = build_tag_vocabulary(&relations);
    fs::write(out, vocab.to_file_string())?;
    eprintln!("wrote {} tags to {}", vocab.len(), out.display());
    Ok(())
}

fn cmd_encode(corpus: &Path, relations: &Path, out: Option<&Path>) -> Result<()> {
    let relations = read_relations_file(relations)?;
    let vocab = build_tag_vocabulary(&relations);
    let corpus = load_corpus_warned(corpus, &relations)?;
    let mut text = String::new();
    for sentence in &corpus.sentences {
        let tags = encode_tags(sentence, &vocab)?;
        let line: Vec<String> = tags.iter().map(ToString::to_string).collect();
        text.push_str(&line.join(" "));
        text.push('\n');
    }
    write_output(out, &text)
}

fn cmd_decode(tags_path: &Path, out: Option<&Path>) -> Result<()> {
    let file = fs::File::open(tags_path)?;
    let mut text = String::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tags: Vec<Tag> = line
            .split_whitespace()
            .map(Tag::parse)
            .collect::<Result<_>>()
            .map_err(|e| Error::Corpus {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
        let triplets: Vec<TripletRecord> = decode_tags(&tags)
            .iter()
            .map(|t| TripletRecord {
                e1: [t.e1.start, t.e1.end],
                rel: t.relation.clone(),
                e2: [t.e2.start, t.e2.end],
            })
            .collect();
        text.push_str(&serde_json::to_string(&json!({ "triplets": triplets }))?);
        text.push('\n');
    }
    write_output(out, &text)
}

fn cmd_synth(settings: &Settings, out_train: &Path, out_test: &Path) -> Result<()> {
    let train = generate(&settings.generator_config(settings.synth.n_train, settings.seed)?)?;
    let test =
        generate(&settings.generator_config(settings.synth.n_test, settings.seed + 1)?)?;
    fs::write(out_train, train.to_jsonl())?;
    fs::write(out_test, test.to_jsonl())?;
    write_sidecar_config(out_train, settings)?;
    eprintln!(
        "wrote {} train sentences ({} triplets) and {} test sentences ({} triplets)",
        train.len(),
        train.total_triplets(),
        test.len(),
        test.total_triplets()
    );
    Ok(())
}

/// Splits a test corpus into (evaluation, validation) per the configured
/// fraction; a fraction of 0 keeps everything for evaluation.
fn split_test(settings: &Settings, test: &Corpus) -> Result<(Corpus, Option<Corpus>)> {
    if settings.train.val_fraction == 0.0 {
        return Ok((test.clone(), None));
    }
    let (eval_part, val_part) =
        split_validation(test, settings.train.val_fraction, settings.seed)?;
    Ok((eval_part, Some(val_part)))
}

fn cmd_train(
    settings: &Settings,
    train_path: &Path,
    test_path: &Path,
    relations: Option<&Path>,
    embeddings: Option<&Path>,
    checkpoint_path: &Path,
    history_path: Option<&Path>,
) -> Result<()> {
    let relations = match relations {
        Some(path) => read_relations_file(path)?,
        None => settings.relation_set()?,
    };
    let tag_vocab = build_tag_vocabulary(&relations);
    let train_corpus = load_corpus_warned(train_path, &relations)?;
    let test_corpus = load_corpus_warned(test_path, &relations)?.with_vocab(&train_corpus.vocab);
    let (_, val_part) = split_test(settings, &test_corpus)?;

    let hyper = settings.hyperparameters();
    let options = settings.train_options();
    let vectors = embeddings
        .map(|path| load_word_vectors(path, hyper.embed_dim))
        .transpose()?;

    let mut history_lines = Vec::new();
    let mut on_epoch = |record: &EpochRecord| {
        eprintln!(
            "epoch {:>3}  loss {:>12.4}  val F1 {}",
            record.epoch,
            record.train_loss,
            record
                .val_triplet_f1
                .map(|f| format!("{f:.4}"))
                .unwrap_or_else(|| "-".into())
        );
        history_lines.push(serde_json::to_string(record).expect("history records serialize"));
    };
    let result = train_with_embeddings(
        &train_corpus,
        val_part.as_ref(),
        &tag_vocab,
        &hyper,
        &options,
        vectors.as_ref(),
        &mut on_epoch,
    )?;

    let checkpoint = Checkpoint::build(
        &hyper,
        &train_corpus.vocab,
        &tag_vocab,
        &result.params,
        Some(&result.optimizer_state),
    );
    checkpoint.save(checkpoint_path)?;
    write_sidecar_config(checkpoint_path, settings)?;
    if let Some(path) = history_path {
        fs::write(path, history_lines.join("\n") + "\n")?;
    }
    eprintln!(
        "saved checkpoint to {} (best epoch {}, {} epochs run{})",
        checkpoint_path.display(),
        result.best_epoch,
        result.history.len(),
        if result.stopped_early { ", early stop" } else { "" }
    );
    Ok(())
}

fn cmd_eval(
    settings: &Settings,
    checkpoint_path: &Path,
    test_path: &Path,
    report_path: &Path,
    predictions_path: Option<&Path>,
) -> Result<()> {
    let checkpoint = Checkpoint::load(checkpoint_path)?;
    let relations = checkpoint.relation_set()?;
    let tag_vocab = build_tag_vocabulary(&relations);
    let params = checkpoint.parameters()?;
    let vocab = checkpoint.word_vocab();
    let hyper = checkpoint.hyper.clone();

    let test_corpus = load_corpus_warned(test_path, &relations)?.with_vocab(&vocab);
    let (eval_part, _) = split_test(settings, &test_corpus)?;

    let per_sentence = predictions(&params, &hyper, &eval_part, &tag_vocab)?;
    let report = aggregate(per_sentence.iter().map(|(_, eval)| eval));

    if let Some(path) = predictions_path {
        let mut text = String::new();
        for (sentence, (tags, _)) in eval_part.sentences.iter().zip(per_sentence.iter()) {
            let record =
                PredictionRecord::new(sentence.tokens.clone(), &sentence.triplets, tags);
            text.push_str(&serde_json::to_string(&record)?);
            text.push('\n');
        }
        fs::write(path, text)?;
    }

    let payload = json!({
        "checkpoint": checkpoint_path.display().to_string(),
        "hyper": hyper,
        "evaluated_sentences": eval_part.len(),
        "metrics": report,
    });
    write_report(settings, &payload, Some(report_path))?;
    eprintln!(
        "triplet P {:.4} / R {:.4} / F1 {:.4} on {} sentences",
        report.triplet.precision,
        report.triplet.recall,
        report.triplet.f1,
        eval_part.len()
    );
    Ok(())
}

fn cmd_sweep(
    settings: &Settings,
    train_path: &Path,
    test_path: &Path,
    relations: Option<&Path>,
    alphas: &str,
    report_path: &Path,
) -> Result<()> {
    let alphas: Vec<f64> = alphas
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad alpha `{a}`: {e}")))
        })
        .collect::<Result<_>>()?;
    let relations = match relations {
        Some(path) => read_relations_file(path)?,
        None => settings.relation_set()?,
    };
    let tag_vocab = build_tag_vocabulary(&relations);
    let train_corpus = load_corpus_warned(train_path, &relations)?;
    let test_corpus = load_corpus_warned(test_path, &relations)?.with_vocab(&train_corpus.vocab);
    let (eval_part, val_part) = split_test(settings, &test_corpus)?;

    let rows = alpha_sweep(
        &train_corpus,
        val_part.as_ref(),
        &eval_part,
        &alphas,
        &tag_vocab,
        &settings.hyperparameters(),
        &settings.train_options(),
        |alpha, record| {
            eprintln!(
                "alpha {alpha:>5}  epoch {:>3}  loss {:>12.4}",
                record.epoch, record.train_loss
            );
        },
    )?;
    for row in &rows {
        eprintln!(
            "alpha {:>5}  P {:.4}  R {:.4}  F1 {:.4}",
            row.alpha, row.precision, row.recall, row.f1
        );
    }
    write_report(settings, &json!({ "rows": rows }), Some(report_path))
}

fn cmd_analyze(settings: &Settings, predictions: &Path, report: Option<&Path>) -> Result<()> {
    let file = fs::File::open(predictions)?;
    let mut evals: Vec<SentenceEval> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| Error::Corpus {
                line: lineno + 1,
                reason: e.to_string(),
            })?;
        evals.push(record.into_sentence_eval().map_err(|e| Error::Corpus {
            line: lineno + 1,
            reason: e.to_string(),
        })?);
    }
    if evals.is_empty() {
        return Err(Error::Corpus {
            line: 0,
            reason: "empty predictions file".into(),
        });
    }
    let report_value = aggregate(&evals);
    write_report(settings, &report_value, report)
}
