//! `colenc` command-line pipeline.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use serde::Deserialize;

use colenc::analogy::{
    simulate_analogy, three_cosmul, AnalogyQuery, DdiStore, EncodingTable, SimulationOptions, DEFAULT_K,
    DEFAULT_KS, DEFAULT_MIN_SCORE,
};
use colenc::baselines::{bow_pair_vector, random_predict, KnnIndex, LabelDistribution};
use colenc::corpus::{
    generate_synthetic, load_ddi, load_drugs, write_ddi, write_drugs, ColumnId, DdiLoadOptions, DrugRecord,
    Preprocessor, SyntheticSpec, Vocabulary,
};
use colenc::metrics::{evaluate, MetricsReport};
use colenc::model::{
    export_encodings, grid_search, predict, prepare_column, train, EncoderConfig, EncoderModel, GridPoint,
    TrainHistory,
};
use colenc::partition::{heldoff_split, stratified_split, PartitionSet, Split};
use colenc::seeds;

#[derive(Parser, Debug)]
#[command(name = "colenc", version, about = "Column encodings for drug-drug interaction analogies")]
struct Cli {
    /// Base seed; each stage derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// TOML file with default values for any flag (snake_case keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus with a planted labeling rule.
    Synth(SynthArgs),
    /// Split interactions into train/val/test.
    Partition(PartitionArgs),
    /// Train a column encoder.
    Train(TrainArgs),
    /// Train one encoder per grid point and keep the best.
    Grid(GridArgs),
    /// Export per-drug encodings with a trained encoder.
    Encode(EncodeArgs),
    /// Run one `A : B :: A : ?` analogy query.
    Query(QueryArgs),
    /// Simulate analogy queries over a partition split.
    Simulate(SimulateArgs),
    /// Classification metrics of a model or baseline on a partition split.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    num_drugs: Option<usize>,
    #[arg(long)]
    num_labels: Option<usize>,
    #[arg(long)]
    tokens_per_column: Option<usize>,
    #[arg(long)]
    noise_pool: Option<usize>,
    #[arg(long)]
    pair_density: Option<f64>,
    #[arg(long)]
    rule_column: Option<ColumnId>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Scheme {
    Pairwise,
    Heldoff,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    scheme: Scheme,
    #[arg(long)]
    drugs: Option<PathBuf>,
    #[arg(long)]
    ddi: Option<PathBuf>,
    /// Manifest path to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Train,val,test ratios for the pairwise scheme.
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,
    /// Percentage of drugs held off (heldoff scheme).
    #[arg(long)]
    x_pct: Option<f64>,
}

#[derive(Args, Debug)]
struct ModelFlags {
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    min_count: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    drugs: Option<PathBuf>,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    column: Option<ColumnId>,
    /// Directory for model.ckpt, vocab.tsv and history.tsv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long)]
    drugs: Option<PathBuf>,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    column: Option<ColumnId>,
    /// Directory for grid.tsv and the best model.ckpt and vocab.tsv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    embed_dims: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    hiddens: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    layer_counts: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    max_lens: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    min_counts: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    learning_rates: Vec<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    #[arg(long)]
    drugs: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Encoding table path to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ThresholdFlags {
    /// Minimum analogy score kept in results.
    #[arg(long)]
    min_score: Option<f64>,
    /// Keep every candidate regardless of score.
    #[arg(long)]
    no_threshold: bool,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    threshold: ThresholdFlags,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    table: Option<PathBuf>,
    /// Manifest whose triples form the interaction store.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    split: Option<Split>,
    /// Report path to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional per-query log path.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    ks: Vec<usize>,
    #[command(flatten)]
    threshold: ThresholdFlags,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Dnn,
    Random,
    Knn,
}

#[derive(Args, Debug)]
struct EvalArgs {
    method: Method,
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long)]
    split: Option<Split>,
    /// Metrics report path to write.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    drugs: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    column: Option<ColumnId>,
    #[arg(long)]
    min_count: Option<usize>,
    /// Random-baseline simulations.
    #[arg(long)]
    simulations: Option<usize>,
    /// Neighbours for the KNN baseline.
    #[arg(long)]
    knn_k: Option<usize>,
    /// Cap on KNN training pairs, drawn by a seeded shuffle.
    #[arg(long)]
    max_train: Option<usize>,
    /// Cap on evaluated pairs for KNN, drawn by a seeded shuffle.
    #[arg(long)]
    max_eval: Option<usize>,
}

/// Values read from `--config`; any flag given on the command line wins.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    out: Option<PathBuf>,
    log: Option<PathBuf>,
    drugs: Option<PathBuf>,
    ddi: Option<PathBuf>,
    partition: Option<PathBuf>,
    model: Option<PathBuf>,
    vocab: Option<PathBuf>,
    table: Option<PathBuf>,
    column: Option<String>,
    num_drugs: Option<usize>,
    num_labels: Option<usize>,
    tokens_per_column: Option<usize>,
    noise_pool: Option<usize>,
    pair_density: Option<f64>,
    rule_column: Option<String>,
    ratios: Option<Vec<f64>>,
    x_pct: Option<f64>,
    embed_dim: Option<usize>,
    hidden: Option<usize>,
    layers: Option<usize>,
    max_len: Option<usize>,
    min_count: Option<usize>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    embed_dims: Option<Vec<usize>>,
    hiddens: Option<Vec<usize>>,
    layer_counts: Option<Vec<usize>>,
    max_lens: Option<Vec<usize>>,
    min_counts: Option<Vec<usize>>,
    learning_rates: Option<Vec<f64>>,
    k: Option<usize>,
    min_score: Option<f64>,
    no_threshold: Option<bool>,
    ks: Option<Vec<usize>>,
    split: Option<String>,
    simulations: Option<usize>,
    knn_k: Option<usize>,
    max_train: Option<usize>,
    max_eval: Option<usize>,
}

impl RunConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e.message()))
    }

    fn column(&self) -> Result<Option<ColumnId>> {
        self.column.as_deref().map(str::parse).transpose().map_err(Into::into)
    }

    fn rule_column(&self) -> Result<Option<ColumnId>> {
        self.rule_column.as_deref().map(str::parse).transpose().map_err(Into::into)
    }

    fn split(&self) -> Result<Option<Split>> {
        self.split
            .as_deref()
            .map(|s| s.parse::<Split>().map_err(|e| anyhow::anyhow!("{e}")))
            .transpose()
    }
}

/// Command line value, else config value.
fn pick<T>(flag: Option<T>, config: Option<T>) -> Option<T> {
    flag.or(config)
}

fn required<T>(value: Option<T>, name: &str) -> Result<T> {
    value.with_context(|| format!("missing required value `--{}`", name.replace('_', "-")))
}

fn list<T: Clone>(flag: Vec<T>, config: &Option<Vec<T>>) -> Option<Vec<T>> {
    if flag.is_empty() {
        config.clone()
    } else {
        Some(flag)
    }
}

/// Files written by a command. Unless committed, they are removed on drop.
struct Outputs {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new() -> Self {
        Outputs {
            paths: Vec::new(),
            committed: false,
        }
    }

    fn add(&mut self, path: &Path) -> PathBuf {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            let _ = fs::create_dir_all(parent);
        }
        self.paths.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.paths {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn write_text(outputs: &mut Outputs, path: &Path, text: &str) -> Result<()> {
    let path = outputs.add(path);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_partition(path: &Path) -> Result<PartitionSet> {
    Ok(PartitionSet::load(path)?)
}

fn min_score(t: &ThresholdFlags, cfg: &RunConfig) -> Option<f64> {
    if t.no_threshold || cfg.no_threshold == Some(true) {
        None
    } else {
        Some(pick(t.min_score, cfg.min_score).unwrap_or(DEFAULT_MIN_SCORE))
    }
}

fn cmd_synth(a: SynthArgs, cfg: &RunConfig, seed: u64) -> Result<()> {
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        num_drugs: pick(a.num_drugs, cfg.num_drugs).unwrap_or(1000),
        num_labels: pick(a.num_labels, cfg.num_labels).unwrap_or(d.num_labels),
        tokens_per_column: pick(a.tokens_per_column, cfg.tokens_per_column).unwrap_or(d.tokens_per_column),
        seed: seeds::derive(seed, seeds::SYNTH),
        rule_column: pick(a.rule_column, cfg.rule_column()?).unwrap_or(d.rule_column),
        noise_pool: pick(a.noise_pool, cfg.noise_pool).unwrap_or(d.noise_pool),
        pair_density: pick(a.pair_density, cfg.pair_density).unwrap_or(d.pair_density),
    };
    let dir = required(pick(a.out_dir, cfg.out_dir.clone()), "out_dir")?;
    let corpus = generate_synthetic(&spec)?;
    let mut outputs = Outputs::new();
    let drugs_path = outputs.add(&dir.join("drugs.tsv"));
    let ddi_path = outputs.add(&dir.join("ddi.tsv"));
    write_drugs(&drugs_path, &corpus.drugs)?;
    write_ddi(&ddi_path, &corpus.triples, &corpus.labels)?;

    let drugs = load_drugs(&drugs_path)?;
    ensure!(drugs == corpus.drugs, "drug table failed to round-trip");
    let opts = DdiLoadOptions {
        label_map: Some(&corpus.labels),
        ..Default::default()
    };
    let (triples, _) = load_ddi(&ddi_path, &opts)?;
    ensure!(triples == corpus.triples, "interaction table failed to round-trip");
    outputs.commit();
    println!(
        "wrote {} drugs and {} interactions to {}",
        drugs.len(),
        triples.len(),
        dir.display()
    );
    Ok(())
}

fn load_corpus(drugs: &Path, ddi: &Path, seed: u64) -> Result<(Vec<DrugRecord>, Vec<colenc::corpus::DdiTriple>)> {
    let drugs = load_drugs(drugs)?;
    let known: HashSet<String> = drugs.iter().map(|d| d.drug_id.clone()).collect();
    let opts = DdiLoadOptions {
        label_map: None,
        known_drugs: Some(&known),
        seed: seeds::derive(seed, seeds::DDI_DEDUP),
    };
    let (triples, _) = load_ddi(ddi, &opts)?;
    Ok((drugs, triples))
}

fn cmd_partition(a: PartitionArgs, cfg: &RunConfig, seed: u64) -> Result<()> {
    let drugs_path = required(pick(a.drugs, cfg.drugs.clone()), "drugs")?;
    let ddi_path = required(pick(a.ddi, cfg.ddi.clone()), "ddi")?;
    let out = required(pick(a.out, cfg.out.clone()), "out")?;
    let (drugs, triples) = load_corpus(&drugs_path, &ddi_path, seed)?;
    let pseed = seeds::derive(seed, seeds::PARTITION);
    let set = match a.scheme {
        Scheme::Pairwise => {
            let r = list(a.ratios, &cfg.ratios).unwrap_or_else(|| vec![0.8, 0.1, 0.1]);
            let [tr, va, te] = r[..] else {
                bail!("--ratios needs exactly three values");
            };
            stratified_split(&triples, [tr, va, te], pseed)?
        }
        Scheme::Heldoff => {
            let x = required(pick(a.x_pct, cfg.x_pct), "x_pct")?;
            let ids: Vec<String> = drugs.iter().map(|d| d.drug_id.clone()).collect();
            let (set, infeasible) = heldoff_split(&triples, &ids, x, pseed)?;
            if !infeasible.is_empty() {
                eprintln!(
                    "colenc: warning: labels without train and val coverage: {}",
                    infeasible.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
                );
            }
            set
        }
    };
    let mut outputs = Outputs::new();
    outputs.add(&out);
    set.save(&out)?;
    ensure!(load_partition(&out)? == set, "manifest failed to round-trip");
    outputs.commit();
    println!(
        "train={} val={} test={} heldoff_drugs={}",
        set.train.len(),
        set.val.len(),
        set.test.len(),
        set.heldoff_drugs.len()
    );
    Ok(())
}

fn base_config(m: &ModelFlags, cfg: &RunConfig, seed: u64) -> EncoderConfig {
    let d = EncoderConfig::default();
    EncoderConfig {
        embed_dim: pick(m.embed_dim, cfg.embed_dim).unwrap_or(d.embed_dim),
        hidden: pick(m.hidden, cfg.hidden).unwrap_or(d.hidden),
        layers: pick(m.layers, cfg.layers).unwrap_or(d.layers),
        max_len: pick(m.max_len, cfg.max_len).unwrap_or(d.max_len),
        learning_rate: pick(m.learning_rate, cfg.learning_rate).unwrap_or(d.learning_rate),
        batch_size: pick(m.batch_size, cfg.batch_size).unwrap_or(d.batch_size),
        epochs: pick(m.epochs, cfg.epochs).unwrap_or(d.epochs),
        seed: seeds::derive(seed, seeds::TRAIN),
        ..d
    }
}

fn save_model(outputs: &mut Outputs, dir: &Path, model: &EncoderModel, vocab: &Vocabulary) -> Result<()> {
    let mpath = outputs.add(&dir.join("model.ckpt"));
    model.save(&mpath)?;
    ensure!(&EncoderModel::load(&mpath)? == model, "checkpoint failed to round-trip");
    let vpath = outputs.add(&dir.join("vocab.tsv"));
    vocab.save(&vpath)?;
    ensure!(&Vocabulary::load(&vpath)? == vocab, "vocabulary failed to round-trip");
    Ok(())
}

fn cmd_train(a: TrainArgs, cfg: &RunConfig, seed: u64) -> Result<()> {
    let drugs = load_drugs(&required(pick(a.drugs, cfg.drugs.clone()), "drugs")?)?;
    let set = load_partition(&required(pick(a.partition, cfg.partition.clone()), "partition")?)?;
    let column = required(pick(a.column, cfg.column()?), "column")?;
    let dir = required(pick(a.out_dir, cfg.out_dir.clone()), "out_dir")?;
    let min_count = pick(a.model.min_count, cfg.min_count).unwrap_or(1);
    let mut config = base_config(&a.model, cfg, seed);
    config.num_labels = set.num_labels;
    config.validate()?;
    let pre = Preprocessor::default();
    let (vocab, data) = prepare_column(&drugs, column, &set.fitting_drugs(), min_count, config.max_len, &pre);
    config.vocab_size = vocab.len();
    config.num_labels = set.num_labels;
    let (model, history) = train(&config, &data, &set)?;

    let mut outputs = Outputs::new();
    save_model(&mut outputs, &dir, &model, &vocab)?;
    let hpath = outputs.add(&dir.join("history.tsv"));
    history.save(&hpath)?;
    ensure!(TrainHistory::load(&hpath)? == history, "history failed to round-trip");
    outputs.commit();
    println!(
        "best_epoch={} val_accuracy={:.6}",
        history.best_epoch,
        history.best_val_accuracy()
    );
    Ok(())
}

fn cmd_grid(a: GridArgs, cfg: &RunConfig, seed: u64) -> Result<()> {
    let drugs = load_drugs(&required(pick(a.drugs, cfg.drugs.clone()), "drugs")?)?;
    let set = load_partition(&required(pick(a.partition, cfg.partition.clone()), "partition")?)?;
    let column = required(pick(a.column, cfg.column()?), "column")?;
    let dir = required(pick(a.out_dir, cfg.out_dir.clone()), "out_dir")?;
    let flags = ModelFlags {
        embed_dim: None,
        hidden: None,
        layers: None,
        max_len: None,
        min_count: None,
        learning_rate: None,
        batch_size: a.batch_size,
        epochs: a.epochs,
    };
    let base = base_config(&flags, cfg, seed);
    let points = GridPoint::product(
        &list(a.embed_dims, &cfg.embed_dims).unwrap_or(vec![base.embed_dim]),
        &list(a.hiddens, &cfg.hiddens).unwrap_or(vec![base.hidden]),
        &list(a.layer_counts, &cfg.layer_counts).unwrap_or(vec![base.layers]),
        &list(a.max_lens, &cfg.max_lens).unwrap_or(vec![base.max_len]),
        &list(a.min_counts, &cfg.min_counts).unwrap_or(vec![1]),
        &list(a.learning_rates, &cfg.learning_rates).unwrap_or(vec![base.learning_rate]),
    );
    let result = grid_search(&points, &base, &drugs, column, &set, &Preprocessor::default())?;

    let mut outputs = Outputs::new();
    write_text(&mut outputs, &dir.join("grid.tsv"), &result.to_tsv())?;
    save_model(&mut outputs, &dir, &result.best_model, &result.best_vocab)?;
    outputs.commit();
    let best = &result.rows[result.best];
    println!(
        "best embed_dim={} hidden={} layers={} max_len={} min_count={} learning_rate={} val_accuracy={:.6}",
        best.point.embed_dim,
        best.point.hidden,
        best.point.layers,
        best.point.max_len,
        best.point.min_count,
        best.point.learning_rate,
        best.val_accuracy
    );
    Ok(())
}

fn cmd_encode(a: EncodeArgs, cfg: &RunConfig) -> Result<()> {
    let drugs = load_drugs(&required(pick(a.drugs, cfg.drugs.clone()), "drugs")?)?;
    let model = EncoderModel::load(&required(pick(a.model, cfg.model.clone()), "model")?)?;
    let vocab = Vocabulary::load(&required(pick(a.vocab, cfg.vocab.clone()), "vocab")?)?;
    let out = required(pick(a.out, cfg.out.clone()), "out")?;
    ensure!(
        vocab.len() == model.config().vocab_size,
        "vocabulary has {} entries but the model expects {}",
        vocab.len(),
        model.config().vocab_size
    );
    let table = export_encodings(
        &model,
        &drugs,
        vocab.column(),
        &vocab,
        model.config().max_len,
        &Preprocessor::default(),
    )?;
    let mut outputs = Outputs::new();
    outputs.add(&out);
    table.save(&out)?;
    ensure!(EncodingTable::load(&out)? == table, "encoding table failed to round-trip");
    outputs.commit();
    println!("wrote {} encodings of dimension {}", table.len(), table.dim());
    Ok(())
}

fn cmd_query(a: QueryArgs, cfg: &RunConfig) -> Result<()> {
    let table = EncodingTable::load(&required(pick(a.table, cfg.table.clone()), "table")?)?;
    let query = AnalogyQuery::new(a.a.clone(), a.b, a.a)
        .with_k(pick(a.k, cfg.k).unwrap_or(DEFAULT_K))
        .with_min_score(min_score(&a.threshold, cfg));
    let result = three_cosmul(&query, &table)?;
    println!("rank\tdrug_id\tscore");
    for (i, h) in result.hits.iter().enumerate() {
        println!("{}\t{}\t{:.6}", i + 1, h.drug_id, h.score);
    }
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, cfg: &RunConfig) -> Result<()> {
    let table = EncodingTable::load(&required(pick(a.table, cfg.table.clone()), "table")?)?;
    let set = load_partition(&required(pick(a.partition, cfg.partition.clone()), "partition")?)?;
    let split = pick(a.split, cfg.split()?).unwrap_or(Split::Val);
    let out = required(pick(a.out, cfg.out.clone()), "out")?;
    let log = pick(a.log, cfg.log.clone());
    let options = SimulationOptions {
        ks: list(a.ks, &cfg.ks).unwrap_or_else(|| DEFAULT_KS.to_vec()),
        min_score: min_score(&a.threshold, cfg),
    };
    let store = DdiStore::new(set.all());
    let report = simulate_analogy(set.split(split), &table, &store, &options)?;

    let mut outputs = Outputs::new();
    write_text(&mut outputs, &out, &report.to_tsv())?;
    if let Some(log) = log {
        write_text(&mut outputs, &log, &report.log_tsv())?;
    }
    outputs.commit();
    print!("{}", report.to_tsv());
    Ok(())
}

fn subsample<T: Clone>(items: &[T], cap: Option<usize>, seed: u64) -> Vec<T> {
    match cap {
        Some(cap) if cap < items.len() => {
            let mut idx: Vec<usize> = (0..items.len()).collect();
            idx.shuffle(&mut seeds::rng(seed));
            idx.truncate(cap);
            idx.sort_unstable();
            idx.into_iter().map(|i| items[i].clone()).collect()
        }
        _ => items.to_vec(),
    }
}

fn cmd_eval(a: EvalArgs, cfg: &RunConfig, seed: u64) -> Result<()> {
    let set = load_partition(&required(pick(a.partition, cfg.partition.clone()), "partition")?)?;
    let split = pick(a.split, cfg.split()?).unwrap_or(Split::Val);
    let out = required(pick(a.out, cfg.out.clone()), "out")?;
    let eval = set.split(split);
    ensure!(!eval.is_empty(), "the {split:?} split is empty");
    let report: MetricsReport = match a.method {
        Method::Dnn => {
            let drugs = load_drugs(&required(pick(a.drugs, cfg.drugs.clone()), "drugs")?)?;
            let model = EncoderModel::load(&required(pick(a.model, cfg.model.clone()), "model")?)?;
            let vocab = Vocabulary::load(&required(pick(a.vocab, cfg.vocab.clone()), "vocab")?)?;
            let data = colenc::model::EncodedColumn::new(
                &drugs,
                vocab.column(),
                &vocab,
                model.config().max_len,
                &Preprocessor::default(),
            );
            let preds = predict(&model, &data, eval)?;
            let golds: Vec<usize> = eval.iter().map(|t| t.label).collect();
            evaluate(&preds, &golds, set.num_labels)?
        }
        Method::Random => {
            let dist = LabelDistribution::fit(&set.train, set.num_labels)?;
            let sims = pick(a.simulations, cfg.simulations).unwrap_or(10);
            random_predict(&dist, eval, seeds::derive(seed, seeds::RANDOM_BASELINE), sims)?
        }
        Method::Knn => {
            let drugs = load_drugs(&required(pick(a.drugs, cfg.drugs.clone()), "drugs")?)?;
            let column = required(pick(a.column, cfg.column()?), "column")?;
            let min_count = pick(a.min_count, cfg.min_count).unwrap_or(1);
            let k = pick(a.knn_k, cfg.knn_k).unwrap_or(5);
            let kseed = seeds::derive(seed, seeds::KNN);
            let train_pairs = subsample(&set.train, pick(a.max_train, cfg.max_train), kseed);
            let eval_pairs = subsample(eval, pick(a.max_eval, cfg.max_eval), kseed.wrapping_add(1));
            knn_report(&drugs, column, &set, &train_pairs, &eval_pairs, min_count, k)?
        }
    };
    let mut outputs = Outputs::new();
    write_text(&mut outputs, &out, &report.to_text())?;
    outputs.commit();
    print!("{}", report.to_text());
    Ok(())
}

fn knn_report(
    drugs: &[DrugRecord],
    column: ColumnId,
    set: &PartitionSet,
    train_pairs: &[colenc::corpus::DdiTriple],
    eval_pairs: &[colenc::corpus::DdiTriple],
    min_count: usize,
    k: usize,
) -> Result<MetricsReport> {
    let pre = Preprocessor::default();
    let fitting: BTreeSet<&str> = set.fitting_drugs();
    let seqs: std::collections::HashMap<&str, colenc::corpus::TokenSequence> = drugs
        .iter()
        .map(|d| (d.drug_id.as_str(), pre.process(d.column(column), column).sequence))
        .collect();
    let vocab = colenc::corpus::build_vocab(
        column,
        seqs.iter().filter(|(id, _)| fitting.contains(*id)).map(|(_, s)| s),
        min_count,
    );
    let bow = |t: &colenc::corpus::DdiTriple| -> Result<_> {
        let s1 = seqs.get(t.drug1.as_str()).with_context(|| format!("unknown drug {}", t.drug1))?;
        let s2 = seqs.get(t.drug2.as_str()).with_context(|| format!("unknown drug {}", t.drug2))?;
        Ok(bow_pair_vector(s1, s2, &vocab))
    };
    let points = train_pairs.iter().map(bow).collect::<Result<Vec<_>>>()?;
    let labels = train_pairs.iter().map(|t| t.label).collect();
    let index = KnnIndex::fit(points, labels, k)?;
    let preds = eval_pairs
        .iter()
        .map(|t| Ok(index.predict(&bow(t)?)))
        .collect::<Result<Vec<_>>>()?;
    let golds: Vec<usize> = eval_pairs.iter().map(|t| t.label).collect();
    Ok(evaluate(&preds, &golds, set.num_labels)?)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let seed = pick(cli.seed, cfg.seed).unwrap_or(0);
    match cli.command {
        Command::Synth(a) => cmd_synth(a, &cfg, seed),
        Command::Partition(a) => cmd_partition(a, &cfg, seed),
        Command::Train(a) => cmd_train(a, &cfg, seed),
        Command::Grid(a) => cmd_grid(a, &cfg, seed),
        Command::Encode(a) => cmd_encode(a, &cfg),
        Command::Query(a) => cmd_query(a, &cfg),
        Command::Simulate(a) => cmd_simulate(a, &cfg),
        Command::Eval(a) => cmd_eval(a, &cfg, seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Query(q) = &cli.command {
        if q.a == q.b {
            eprintln!("colenc: usage error: --a and --b must name different drugs");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("colenc: error: {msg}");
            ExitCode::FAILURE
        }
    }
}
