//! `semlm` — build semantic sequences from annotated documents, train
//! language models over them, and evaluate with perplexity, the narrative
//! cloze test, and downstream feature export.

mod manifest;
mod pipeline;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use semlm::annotations::load_documents;
use semlm::evalx::{
    evaluate_cloze, make_cloze_set, make_cloze_set_frames_only, train_ordered_pmi,
    PerplexityReport,
};
use semlm::features::{coref_pair_features, discourse_features, FeatureRecord};
use semlm::model::{perplexity_of, AnyModel, InterpolatedModel};
use semlm::neural::{train_cbow, train_lb, train_sg, TrainConfig};
use semlm::ngram::train_ngram;
use semlm::seqbuild::{
    document_sequences, dump_sequences_to_string, BuildOptions, SemSequence, SequenceKind,
};
use semlm::synth::{mini_corpus, to_jsonl};
use semlm::unitgen::{MappingTable, UnitOptions};
use semlm::vocab::{build_vocabulary, encode_corpus};

use manifest::Artifacts;
use pipeline::{embeddings_name, load_split_sequences, model_path};

#[derive(Parser)]
#[command(name = "semlm", version, about = "Semantic language model pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Fc,
    Ec,
}

impl From<KindArg> for SequenceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Fc => SequenceKind::FrameChain,
            KindArg::Ec => SequenceKind::EntityCentered,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Uni,
    Bg,
    Tri,
    Sg,
    Cbow,
    Lb,
    Op,
}

impl ModelArg {
    fn name(self) -> &'static str {
        match self {
            ModelArg::Uni => "uni",
            ModelArg::Bg => "bg",
            ModelArg::Tri => "tri",
            ModelArg::Sg => "sg",
            ModelArg::Cbow => "cbow",
            ModelArg::Lb => "lb",
            ModelArg::Op => "op",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Bin,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Build frame-chain or entity-centered sequences from annotated
    /// documents and dump them to a sequence file.
    Sequences(SequencesArgs),
    /// Build the frequency-filtered vocabulary over the train split of a
    /// sequence file.
    Vocab(VocabArgs),
    /// Train a language model on the train split of a sequence file.
    Train(TrainArgs),
    /// Held-out perplexity of one or more trained models.
    Perplexity(PerplexityArgs),
    /// Narrative cloze test of a trained model on the held-out split.
    Cloze(ClozeArgs),
    /// Export conditional-probability and embedding features for a query
    /// file.
    Features(FeaturesArgs),
    /// Regenerate the bundled synthetic mini corpus (development helper).
    #[command(hide = true)]
    GenCorpus(GenCorpusArgs),
}

#[derive(Args)]
struct SequencesArgs {
    /// Annotated documents, JSON Lines.
    #[arg(long)]
    input: PathBuf,
    /// Sequence model to build.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// VerbNet→FrameNet mapping table (TSV); bundled table when omitted.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Drop all discourse markers (the "w/o DIS" ablation).
    #[arg(long)]
    no_discourse: bool,
    /// Skip FrameNet mapping, keeping PropBank senses (the "-FM" ablation).
    #[arg(long)]
    no_framenet_mapping: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VocabArgs {
    /// Sequence file produced by `sequences`.
    #[arg(long)]
    input: PathBuf,
    /// Minimum corpus frequency for a token to be retained.
    #[arg(long, default_value_t = 20)]
    min_count: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Sequence file produced by `sequences`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Minimum corpus frequency for the training vocabulary.
    #[arg(long, default_value_t = 20)]
    min_count: u32,
    /// Embedding dimension (neural models; defaults per model).
    #[arg(long)]
    dim: Option<usize>,
    /// Context window (neural models; defaults per model).
    #[arg(long)]
    window: Option<usize>,
    /// Training epochs (neural models).
    #[arg(long)]
    epochs: Option<usize>,
    /// Seed for initialization and sampling.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Model file format; `text` is the sectioned dump, n-gram models only.
    #[arg(long, value_enum, default_value = "bin")]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PerplexityArgs {
    /// Sequence file; evaluation runs on its held-out split.
    #[arg(long)]
    input: PathBuf,
    /// Model(s) to evaluate; repeat the flag for several columns.
    #[arg(long, value_enum, required = true)]
    model: Vec<ModelArg>,
    /// Interpolate neural conditionals with the tri-gram model:
    /// λ·p_neural + (1−λ)·p_tri.
    #[arg(long)]
    kn_lambda: Option<f64>,
    /// Allow skip-gram "perplexity" from its normalized ranking score
    /// (not a chain-rule probability).
    #[arg(long)]
    nonprob_sg: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClozeArgs {
    /// Sequence file; instances come from its held-out split.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Seed for the removed-position draw.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Recall cutoff.
    #[arg(long, default_value_t = 30)]
    recall_k: usize,
    /// Remove only frame tokens (F-Sen/F-Arg), skipping marker and
    /// period positions.
    #[arg(long)]
    cloze_frames_only: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Query file, JSON Lines: {"fa1","fa2","dis"?} for ec,
    /// {"f1","f2","dis"} for fc.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Which sequence model the queries address.
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenCorpusArgs {
    #[arg(long, default_value_t = semlm::synth::MINI_CORPUS_SEED)]
    seed: u64,
    #[arg(long, default_value_t = semlm::synth::MINI_CORPUS_DOCS)]
    documents: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sequences(args) => with_artifacts(args.out.clone(), |a| sequences(args, a)),
        Command::Vocab(args) => with_artifacts(args.out.clone(), |a| vocab(args, a)),
        Command::Train(args) => with_artifacts(args.out.clone(), |a| train(args, a)),
        Command::Perplexity(args) => with_artifacts(args.out.clone(), |a| perplexity(args, a)),
        Command::Cloze(args) => with_artifacts(args.out.clone(), |a| cloze(args, a)),
        Command::Features(args) => with_artifacts(args.out.clone(), |a| features(args, a)),
        Command::GenCorpus(args) => gen_corpus(args),
    }
}

/// Finished-run descriptor: subcommand, manifest stem, parameters, seed.
type RunOutcome = (String, String, BTreeMap<String, String>, Option<u64>);

/// Run a subcommand body; on failure remove every artifact it wrote.
fn with_artifacts<F>(out_dir: PathBuf, body: F) -> Result<()>
where
    F: FnOnce(&mut Artifacts) -> Result<RunOutcome>,
{
    let mut artifacts = Artifacts::new(&out_dir)?;
    match body(&mut artifacts) {
        Ok((subcommand, stem, parameters, seed)) => {
            artifacts.finish(&subcommand, &stem, parameters, seed)?;
            Ok(())
        }
        Err(err) => {
            artifacts.discard();
            Err(err)
        }
    }
}

fn param_map(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

// ---------------------------------------------------------------------------
// sequences

fn sequences(args: SequencesArgs, artifacts: &mut Artifacts) -> Result<RunOutcome> {
    let kind: SequenceKind = args.kind.into();
    artifacts.record_input(&args.input)?;
    let table = match &args.mapping {
        Some(path) => {
            artifacts.record_input(path)?;
            MappingTable::load(path)?
        }
        None => MappingTable::bundled().clone(),
    };
    let unit_options = UnitOptions {
        framenet_mapping: !args.no_framenet_mapping,
    };
    let build_options = BuildOptions {
        include_discourse: !args.no_discourse,
    };

    let mut sequences: Vec<SemSequence> = Vec::new();
    for doc in load_documents(&args.input)? {
        let doc = doc?;
        let built = document_sequences(&doc, &table, unit_options, build_options);
        match kind {
            SequenceKind::FrameChain => sequences.extend(built.frame_chain),
            SequenceKind::EntityCentered => sequences.extend(built.entity_chains),
        }
    }
    if sequences.is_empty() {
        bail!("no {} sequences were produced", kind.label());
    }

    let dump = dump_sequences_to_string(&sequences);
    let name = format!("sequences-{}.txt", kind.label());
    artifacts.write(&name, dump.as_bytes())?;
    println!("wrote {} sequences to {}", sequences.len(), name);

    let parameters = param_map(&[
        ("input", args.input.display().to_string()),
        ("kind", kind.label().to_string()),
        (
            "mapping",
            args.mapping
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "bundled".into()),
        ),
        ("no_discourse", args.no_discourse.to_string()),
        ("no_framenet_mapping", args.no_framenet_mapping.to_string()),
    ]);
    Ok((
        "sequences".into(),
        format!("sequences-{}", kind.label()),
        parameters,
        None,
    ))
}

// ---------------------------------------------------------------------------
// vocab

fn vocab(args: VocabArgs, artifacts: &mut Artifacts) -> Result<RunOutcome> {
    artifacts.record_input(&args.input)?;
    let split = load_split_sequences(&args.input)?;
    let vocabulary = build_vocabulary(&split.train, args.min_count)?;

    let mut buf = Vec::new();
    vocabulary.write_tsv(&mut buf)?;
    let name = format!("vocab-{}.tsv", split.kind.label());
    artifacts.write(&name, &buf)?;
    println!(
        "vocabulary of {} tokens (min_count {}) written to {}",
        vocabulary.len(),
        args.min_count,
        name
    );

    let parameters = param_map(&[
        ("input", args.input.display().to_string()),
        ("min_count", args.min_count.to_string()),
    ]);
    Ok((
        "vocab".into(),
        format!("vocab-{}", split.kind.label()),
        parameters,
        None,
    ))
}

// ---------------------------------------------------------------------------
// train

fn build_train_config(args: &TrainArgs, base: TrainConfig) -> TrainConfig {
    TrainConfig {
        dim: args.dim.unwrap_or(base.dim),
        window: args.window.unwrap_or(base.window),
        epochs: args.epochs.unwrap_or(base.epochs),
        seed: args.seed,
        ..base
    }
}

fn train(args: TrainArgs, artifacts: &mut Artifacts) -> Result<RunOutcome> {
    artifacts.record_input(&args.input)?;
    let split = load_split_sequences(&args.input)?;
    let kind = split.kind;
    let vocabulary = build_vocabulary(&split.train, args.min_count)?;
    let corpus = encode_corpus(&split.train, &vocabulary);

    let model = match args.model {
        ModelArg::Uni => AnyModel::NGram(train_ngram(&corpus, 1, &vocabulary)?),
        ModelArg::Bg => AnyModel::NGram(train_ngram(&corpus, 2, &vocabulary)?),
        ModelArg::Tri => AnyModel::NGram(train_ngram(&corpus, 3, &vocabulary)?),
        ModelArg::Sg => AnyModel::Embedding(train_sg(
            &corpus,
            &vocabulary,
            build_train_config(&args, TrainConfig::skip_gram()),
        )?),
        ModelArg::Cbow => AnyModel::Embedding(train_cbow(
            &corpus,
            &vocabulary,
            build_train_config(&args, TrainConfig::cbow()),
        )?),
        ModelArg::Lb => AnyModel::LogBilinear(train_lb(
            &corpus,
            &vocabulary,
            build_train_config(&args, TrainConfig::log_bilinear()),
        )?),
        ModelArg::Op => AnyModel::OrderedPmi(train_ordered_pmi(&corpus, &vocabulary)?),
    };

    let model_name = args.model.name();
    let file_name = format!("model-{}-{}.lm", kind.label(), model_name);
    match (args.format, &model) {
        (FormatArg::Bin, _) => {
            artifacts.write(&file_name, &model.to_bytes()?)?;
        }
        (FormatArg::Text, AnyModel::NGram(ngram)) => {
            let mut buf = Vec::new();
            ngram.write_text(&mut buf)?;
            artifacts.write(&file_name, &buf)?;
        }
        (FormatArg::Text, _) => {
            bail!("--format text is only available for n-gram models")
        }
    }

    match &model {
        AnyModel::Embedding(m) => {
            let mut buf = Vec::new();
            m.write_embeddings_text(&mut buf)?;
            artifacts.write(&embeddings_name(kind, model_name), &buf)?;
        }
        AnyModel::LogBilinear(m) => {
            let mut buf = Vec::new();
            m.write_embeddings_text(&mut buf)?;
            artifacts.write(&embeddings_name(kind, model_name), &buf)?;
        }
        _ => {}
    }
    println!(
        "trained {model_name} on {} train sequences ({} held out); wrote {file_name}",
        split.train.len(),
        split.heldout.len()
    );

    let parameters = param_map(&[
        ("input", args.input.display().to_string()),
        ("model", model_name.to_string()),
        ("min_count", args.min_count.to_string()),
        ("dim", fmt_opt(args.dim)),
        ("window", fmt_opt(args.window)),
        ("epochs", fmt_opt(args.epochs)),
        (
            "format",
            match args.format {
                FormatArg::Bin => "bin".to_string(),
                FormatArg::Text => "text".to_string(),
            },
        ),
    ]);
    Ok((
        "train".into(),
        format!("train-{}-{}", kind.label(), model_name),
        parameters,
        Some(args.seed),
    ))
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "default".into())
}

// ---------------------------------------------------------------------------
// perplexity

fn load_model(out_dir: &Path, kind: SequenceKind, name: &str) -> Result<AnyModel> {
    let path = model_path(out_dir, kind, name);
    AnyModel::load(&path).with_context(|| {
        format!(
            "loading {} (run `semlm train --model {name}` into this directory first)",
            path.display()
        )
    })
}

fn perplexity(args: PerplexityArgs, artifacts: &mut Artifacts) -> Result<RunOutcome> {
    artifacts.record_input(&args.input)?;
    let split = load_split_sequences(&args.input)?;
    let kind = split.kind;
    if split.heldout.is_empty() {
        bail!("held-out split of {} is empty", args.input.display());
    }
    let corpus_label = format!("{}-heldout", kind.label());
    let corpus_checksum = semlm::vocab::corpus_checksum(&split.heldout);

    let mut model_ids = Vec::new();
    let mut row = Vec::new();
    for &choice in &args.model {
        let name = choice.name();
        let model = load_model(artifacts.out_dir(), kind, name)?;
        let conditional = model.as_conditional().ok_or_else(|| {
            anyhow!("{name} has no conditional probabilities; perplexity is undefined for it")
        })?;
        if !conditional.is_probabilistic() && !args.nonprob_sg {
            bail!(
                "skip-gram conditionals are normalized ranking scores, not chain-rule \
                 probabilities; pass --nonprob-sg to report them anyway"
            );
        }
        let heldout_ids = encode_corpus(&split.heldout, model.vocabulary());
        let ppl = match args.kn_lambda {
            Some(lambda) if !matches!(model, AnyModel::NGram(_)) => {
                if !(0.0..=1.0).contains(&lambda) {
                    bail!("--kn-lambda must lie in [0, 1]");
                }
                let tri = load_model(artifacts.out_dir(), kind, "tri")?;
                let tri_cond = tri.as_conditional().expect("n-gram is conditional");
                if tri.vocabulary() != model.vocabulary() {
                    bail!("tri model vocabulary differs; retrain with the same --min-count");
                }
                let mixed = InterpolatedModel {
                    primary: conditional,
                    backoff: tri_cond,
                    lambda,
                };
                perplexity_of(&mixed, &heldout_ids)?
            }
            _ => perplexity_of(conditional, &heldout_ids)?,
        };
        model_ids.push(name.to_string());
        row.push(ppl);
    }

    let report = PerplexityReport {
        corpus_labels: vec![corpus_label],
        corpus_checksums: vec![corpus_checksum],
        model_ids: model_ids.clone(),
        cells: vec![row],
        seed: None,
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    artifacts.write(&format!("perplexity-{}.json", kind.label()), json.as_bytes())?;
    artifacts.write(
        &format!("perplexity-{}.txt", kind.label()),
        report.render_text().as_bytes(),
    )?;
    print!("{}", report.render_text());

    let parameters = param_map(&[
        ("input", args.input.display().to_string()),
        ("models", model_ids.join(",")),
        (
            "kn_lambda",
            args.kn_lambda
                .map(|l| l.to_string())
                .unwrap_or_else(|| "off".into()),
        ),
        ("nonprob_sg", args.nonprob_sg.to_string()),
    ]);
    Ok((
        "perplexity".into(),
        format!("perplexity-{}", kind.label()),
        parameters,
        None,
    ))
}

// ---------------------------------------------------------------------------
// cloze

fn cloze(args: ClozeArgs, artifacts: &mut Artifacts) -> Result<RunOutcome> {
    artifacts.record_input(&args.input)?;
    let split = load_split_sequences(&args.input)?;
    let kind = split.kind;
    if split.heldout.is_empty() {
        bail!("held-out split of {} is empty", args.input.display());
    }
    let name = args.model.name();
    let model = load_model(artifacts.out_dir(), kind, name)?;
    let vocabulary = model.vocabulary().clone();
    let heldout_ids = encode_corpus(&split.heldout, &vocabulary);

    let instances = if args.cloze_frames_only {
        make_cloze_set_frames_only(&heldout_ids, &vocabulary, args.seed)?
    } else {
        make_cloze_set(&heldout_ids, &vocabulary, args.seed)?
    };
    if instances.is_empty() {
        bail!("no cloze instances produced from the held-out split");
    }
    let mut report = evaluate_cloze(model.as_gap_scorer(), &instances, args.recall_k)?;
    report.seed = Some(args.seed);
    report.model_id = Some(format!("{}-{}", kind.label(), name));
    report.corpus_checksum = Some(semlm::vocab::corpus_checksum(&split.heldout));

    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    artifacts.write(
        &format!("cloze-{}-{}.json", kind.label(), name),
        json.as_bytes(),
    )?;
    artifacts.write(
        &format!("cloze-{}-{}.txt", kind.label(), name),
        report.render_text().as_bytes(),
    )?;
    print!("{}", report.render_text());

    let parameters = param_map(&[
        ("input", args.input.display().to_string()),
        ("model", name.to_string()),
        ("recall_k", args.recall_k.to_string()),
        ("cloze_frames_only", args.cloze_frames_only.to_string()),
    ]);
    Ok((
        "cloze".into(),
        format!("cloze-{}-{}", kind.label(), name),
        parameters,
        Some(args.seed),
    ))
}

// ---------------------------------------------------------------------------
// features

#[derive(Deserialize)]
struct EcQuery {
    fa1: String,
    fa2: String,
    dis: Option<String>,
}

#[derive(Deserialize)]
struct FcQuery {
    f1: String,
    f2: String,
    dis: String,
}

#[derive(Serialize)]
struct FeatureLine {
    query_index: usize,
    record: FeatureRecord,
}

fn features(args: FeaturesArgs, artifacts: &mut Artifacts) -> Result<RunOutcome> {
    artifacts.record_input(&args.input)?;
    let kind: SequenceKind = args.kind.into();
    let name = args.model.name();
    let model = load_model(artifacts.out_dir(), kind, name)?;
    let sem_lm = model.as_sem_lm().ok_or_else(|| {
        anyhow!(
            "{name} exposes no conditional interface; feature export needs uni/bg/tri/sg/cbow/lb"
        )
    })?;
    let model_id = format!("{}-{}", kind.label(), name);

    let file = std::fs::File::open(&args.input)
        .with_context(|| format!("opening query file {}", args.input.display()))?;
    let mut lines = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = match kind {
            SequenceKind::EntityCentered => {
                let q: EcQuery = serde_json::from_str(&line)
                    .with_context(|| format!("query line {}", i + 1))?;
                coref_pair_features(sem_lm, &model_id, &q.fa1, &q.fa2, q.dis.as_deref())?
            }
            SequenceKind::FrameChain => {
                let q: FcQuery = serde_json::from_str(&line)
                    .with_context(|| format!("query line {}", i + 1))?;
                discourse_features(sem_lm, &model_id, &q.f1, &q.f2, &q.dis)?
            }
        };
        lines.push(serde_json::to_string(&FeatureLine {
            query_index: i,
            record,
        })?);
    }
    if lines.is_empty() {
        bail!("query file {} holds no queries", args.input.display());
    }
    let mut body = lines.join("\n");
    body.push('\n');
    let out_name = format!("features-{}-{}.jsonl", kind.label(), name);
    artifacts.write(&out_name, body.as_bytes())?;
    println!("wrote {} feature records to {out_name}", lines.len());

    let parameters = param_map(&[
        ("input", args.input.display().to_string()),
        ("model", name.to_string()),
        ("kind", kind.label().to_string()),
    ]);
    Ok((
        "features".into(),
        format!("features-{}-{}", kind.label(), name),
        parameters,
        None,
    ))
}

// ---------------------------------------------------------------------------
// gen-corpus (hidden development helper)

fn gen_corpus(args: GenCorpusArgs) -> Result<()> {
    let docs = mini_corpus(args.seed, args.documents);
    let body = to_jsonl(&docs);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&args.out, body)?;
    println!("wrote {} documents to {}", docs.len(), args.out.display());
    Ok(())
}
