use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cate::corpus::{encode, read_category_names, read_corpus};
use cate::eval::{self, Labels, MetricsReport, TopicSet};
use cate::io::{export_category_vectors, export_kappa, export_word_vectors};
use cate::retrieval::{
    candidate_pool, format_bucket_report, specificity_buckets, BucketSection,
    DEFAULT_BAND_MULTIPLIERS,
};
use cate::{MineConfig, ModelCheckpoint, Real, Run, TrainMode, Vocabulary};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "cate", version, about = "Category-guided discriminative topic mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train embeddings and mine representative terms for each category name
    Mine(MineArgs),
    /// Lexical entailment direction accuracy from learned specificity
    Entail(EntailArgs),
    /// Coarse-to-fine report: category-similar words grouped by specificity band
    Present(PresentArgs),
    /// Topic coherence (mean document-level NPMI) of a topics file
    Coherence(CoherenceArgs),
    /// Mean accuracy of a topics file against judged labels
    Macc(MaccArgs),
    /// Write word vectors, category vectors and specificity values as text
    Export(ExportArgs),
}

#[derive(Args)]
struct MineArgs {
    /// One document per line, tokens separated by spaces
    #[arg(long)]
    corpus: PathBuf,
    /// One category name per line
    #[arg(long)]
    categories: PathBuf,
    #[arg(long, default_value = "cate_run")]
    out: PathBuf,
    /// JSON config to start from; explicit flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    min_count_retrieval: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    /// Weight of the category term
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Single worker, bitwise reproducible (the default)
    #[arg(long, conflicts_with = "threads")]
    deterministic: bool,
    /// Lock-free training with N workers
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct EntailArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// hyponym<TAB>hypernym per line
    #[arg(long)]
    pairs: PathBuf,
    /// JSON report path; defaults to entailment.json next to the checkpoint
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PresentArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Restrict to these categories (repeatable); all by default
    #[arg(long = "category")]
    categories: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_BAND_MULTIPLIERS.to_vec())]
    multipliers: Vec<f64>,
    /// Words shown per band
    #[arg(long, default_value_t = 5)]
    top: usize,
}

#[derive(Args)]
struct CoherenceArgs {
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Also write a JSON metrics report
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MaccArgs {
    #[arg(long)]
    topics: PathBuf,
    /// category<TAB>term<TAB>0|1 per line
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct InputDigest {
    path: PathBuf,
    sha256: String,
}

#[derive(Serialize)]
struct Outputs {
    topics: PathBuf,
    details: PathBuf,
    log: PathBuf,
    checkpoint: PathBuf,
}

#[derive(Serialize)]
struct Timing {
    mine_seconds: f64,
    total_seconds: f64,
}

#[derive(Serialize)]
struct RunManifest {
    config: MineConfig,
    inputs: Vec<InputDigest>,
    outputs: Outputs,
    timing: Timing,
    mode: &'static str,
    threads: usize,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("{}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, text).with_context(|| format!("{}", path.display()))
}

fn resolve_config(a: &MineArgs) -> Result<MineConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("{}", p.display()))?;
            let v: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("{}", p.display()))?;
            // a manifest carries its config under "config"
            let v = v.get("config").cloned().unwrap_or(v);
            serde_json::from_value(v).with_context(|| format!("{}", p.display()))?
        }
        None => MineConfig::default(),
    };
    let t = &mut cfg.train;
    macro_rules! set {
        ($field:expr, $flag:expr) => {
            if let Some(x) = $flag {
                $field = x;
            }
        };
    }
    set!(t.dim, a.dim);
    set!(t.window, a.window);
    set!(t.negatives, a.negatives);
    set!(t.max_iter, a.iterations);
    set!(t.initial_lr, a.lr);
    set!(t.topic_weight, a.lambda);
    set!(t.seed, a.seed);
    set!(cfg.min_count, a.min_count);
    if a.min_count_retrieval.is_some() {
        cfg.min_count_retrieval = a.min_count_retrieval;
    }
    if a.deterministic {
        cfg.train.mode = TrainMode::Deterministic;
    } else if let Some(threads) = a.threads {
        cfg.train.mode = TrainMode::Parallel { threads };
    }
    cfg.train.validate()?;
    Ok(cfg)
}

fn cmd_mine(a: MineArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = resolve_config(&a)?;
    let names = read_category_names(&a.categories)?;
    if names.is_empty() {
        bail!("{}: no category names", a.categories.display());
    }
    let inputs = vec![
        InputDigest {
            sha256: sha256_file(&a.corpus)?,
            path: a.corpus.clone(),
        },
        InputDigest {
            sha256: sha256_file(&a.categories)?,
            path: a.categories.clone(),
        },
    ];
    let mine_start = Instant::now();
    let run: Run = cate::mine(&a.corpus, &names, &cfg)?;
    let mine_seconds = mine_start.elapsed().as_secs_f64();

    fs::create_dir_all(&a.out).with_context(|| format!("{}", a.out.display()))?;
    let outputs = Outputs {
        topics: a.out.join("topics.tsv"),
        details: a.out.join("details.tsv"),
        log: a.out.join("log.json"),
        checkpoint: a.out.join("checkpoint.cate"),
    };
    write(&outputs.topics, run.result.topics_tsv())?;
    write(&outputs.details, run.result.details_tsv())?;
    write(&outputs.log, run.result.log_json()?)?;
    ModelCheckpoint {
        config: cfg.clone(),
        vocab: run.vocab.clone(),
        category_names: run.category_names.clone(),
        state: run.state,
    }
    .save(&outputs.checkpoint)?;

    let (mode, threads) = match cfg.train.mode {
        TrainMode::Deterministic => ("deterministic", 1),
        TrainMode::Parallel { threads } => ("parallel", threads),
    };
    let manifest = RunManifest {
        config: cfg,
        inputs,
        outputs,
        timing: Timing {
            mine_seconds,
            total_seconds: start.elapsed().as_secs_f64(),
        },
        mode,
        threads,
    };
    write(&a.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    print!("{}", run.result.topics_tsv());
    info!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_entail(a: EntailArgs) -> Result<()> {
    let ck = ModelCheckpoint::load(&a.checkpoint)?;
    let r = eval::entailment_accuracy_file(&a.pairs, &ck.state.kappa, &ck.vocab)?;
    match r.accuracy {
        Some(acc) => println!("accuracy {acc:.4}"),
        None => println!("accuracy undefined"),
    }
    println!("coverage {:.4}", r.coverage);
    println!(
        "pairs {} evaluated {} correct {} undecided {} skipped_oov {}",
        r.total, r.evaluated, r.correct, r.undecided, r.skipped_oov
    );
    let mut metrics = MetricsReport {
        entailment_accuracy: r.accuracy,
        coverage: Some(r.coverage),
        ..Default::default()
    };
    metrics
        .extra
        .insert("entailment".into(), serde_json::to_value(&r)?);
    let out = a.out.unwrap_or_else(|| {
        a.checkpoint
            .parent()
            .unwrap_or(Path::new("."))
            .join("entailment.json")
    });
    write(&out, serde_json::to_string_pretty(&metrics)?)
}

fn cmd_present(a: PresentArgs) -> Result<()> {
    let ck = ModelCheckpoint::load(&a.checkpoint)?;
    let name_ids: Vec<usize> = ck
        .category_names
        .iter()
        .map(|n| ck.vocab.id(n).context("checkpoint category not in its vocabulary"))
        .collect::<Result<_>>()?;
    let chosen: Vec<usize> = if a.categories.is_empty() {
        (0..ck.category_names.len()).collect()
    } else {
        a.categories
            .iter()
            .map(|c| {
                let c = c.to_lowercase();
                ck.category_names
                    .iter()
                    .position(|n| *n == c)
                    .with_context(|| format!("unknown category '{c}'"))
            })
            .collect::<Result<_>>()?
    };
    let pool = candidate_pool(&ck.vocab, &name_ids, ck.config.min_count_retrieval())?;
    let mut all = Vec::with_capacity(chosen.len());
    for &cat in &chosen {
        let buckets =
            specificity_buckets(&ck.state, cat, name_ids[cat], &pool, &a.multipliers, a.top)?;
        all.push((cat, buckets));
    }
    let sections: Vec<BucketSection<'_, Real>> = all
        .iter()
        .map(|(cat, buckets)| BucketSection {
            category: &ck.category_names[*cat],
            kappa_c: ck.state.kappa[name_ids[*cat]],
            buckets,
        })
        .collect();
    print!("{}", format_bucket_report(&sections, &ck.vocab));
    Ok(())
}

fn write_metrics(out: Option<PathBuf>, metrics: MetricsReport) -> Result<()> {
    match out {
        Some(p) => write(&p, serde_json::to_string_pretty(&metrics)?),
        None => Ok(()),
    }
}

fn cmd_coherence(a: CoherenceArgs) -> Result<()> {
    let topics = TopicSet::read(&a.topics)?;
    let docs = read_corpus(&a.corpus)?;
    let vocab = Vocabulary::build(&docs, 1)?;
    let corpus = encode(&docs, &vocab);
    let tc: f64 = eval::topic_coherence(&topics, &corpus, &vocab)?;
    println!("{tc:.4}");
    write_metrics(
        a.out,
        MetricsReport {
            tc: Some(tc),
            ..Default::default()
        },
    )
}

fn cmd_macc(a: MaccArgs) -> Result<()> {
    let topics = TopicSet::read(&a.topics)?;
    let labels = Labels::read(&a.labels)?;
    let macc = eval::mean_accuracy(&topics, &labels)?;
    println!("{macc:.4}");
    write_metrics(
        a.out,
        MetricsReport {
            macc: Some(macc),
            ..Default::default()
        },
    )
}

fn cmd_export(a: ExportArgs) -> Result<()> {
    let ck = ModelCheckpoint::load(&a.checkpoint)?;
    fs::create_dir_all(&a.out).with_context(|| format!("{}", a.out.display()))?;
    write(&a.out.join("words.vec"), export_word_vectors(&ck.state, &ck.vocab))?;
    write(
        &a.out.join("categories.vec"),
        export_category_vectors(&ck.state, &ck.category_names),
    )?;
    write(&a.out.join("kappa.txt"), export_kappa(&ck.state, &ck.vocab))
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let diverged = e
        .chain()
        .filter_map(|c| c.downcast_ref::<cate::Error>())
        .any(cate::Error::is_divergence);
    if diverged {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CATE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Entail(a) => cmd_entail(a),
        Command::Present(a) => cmd_present(a),
        Command::Coherence(a) => cmd_coherence(a),
        Command::Macc(a) => cmd_macc(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}
