//! `visrank` command-line front end.
//!
//! Exit status: 0 on success, 1 when an input is missing or invalid, 2 on a
//! usage error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use visrank_core::eval::scheme_label;
use visrank_core::io as vio;
use visrank_core::lm::{merge_counts, DEFAULT_OOV_FLOOR};
use visrank_core::semantic::build_cooccurrence;
use visrank_core::trainer::{train_twe, TrainConfig, TrainCorpus};
use visrank_core::{
    build_ulm, evaluate, format_report, format_tsv, rerank_batch, CooccurrenceTable, Dictionary,
    EmbeddingSpace, HypothesisList, MatchMode, Models, RankedOutput, RerankConfig, ResultsTable,
    Scheme, UnigramModel, VisualContext,
};

#[derive(Parser, Debug)]
#[command(
    name = "visrank",
    version,
    about = "Re-rank k-best text-spotting hypotheses with visual context"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Merge unigram count files into one language-model artifact.
    BuildUlm(BuildUlmArgs),
    /// Count (gold word, top object) co-occurrences over training images.
    BuildTdp(BuildTdpArgs),
    /// Train word/object embeddings with skip-gram and negative sampling.
    TrainTwe(TrainTweArgs),
    /// Re-rank hypothesis lists under one scheme.
    Rerank(RerankArgs),
    /// Score ranked outputs against gold words.
    Evaluate(EvaluateArgs),
    /// Re-rank under several schemes and k values, then evaluate.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug)]
pub struct BuildUlmArgs {
    /// `word<TAB>count` files; counts of repeated words are summed.
    #[arg(required = true)]
    pub counts: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_OOV_FLOOR)]
    pub oov_floor: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BuildTdpArgs {
    /// Training hypotheses; only the `gold` field is used.
    #[arg(long)]
    pub hyps: PathBuf,
    #[arg(long)]
    pub ctx: PathBuf,
    #[arg(long, default_value_t = visrank_core::semantic::DEFAULT_TDP_EPSILON)]
    pub tdp_epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainTweArgs {
    /// `word<TAB>object` training pairs.
    #[arg(long, conflicts_with_all = ["hyps", "ctx"], required_unless_present = "hyps")]
    pub pairs: Option<PathBuf>,
    /// Derive pairs from the gold words of these hypotheses...
    #[arg(long, requires = "ctx")]
    pub hyps: Option<PathBuf>,
    /// ...and the top objects of these contexts.
    #[arg(long, requires = "hyps")]
    pub ctx: Option<PathBuf>,
    /// Warm-start vectors, e.g. general-purpose embeddings.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    pub dim: usize,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.025)]
    pub lr: f64,
    #[arg(long, default_value_t = 5)]
    pub negatives: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Visual contexts (classifier output) per image.
    #[arg(long)]
    pub ctx: Option<PathBuf>,
    /// Unigram counts (as written by `build-ulm`).
    #[arg(long)]
    pub ulm: Option<PathBuf>,
    /// General-purpose embeddings.
    #[arg(long)]
    pub swe: Option<PathBuf>,
    /// Task-trained embeddings.
    #[arg(long)]
    pub twe: Option<PathBuf>,
    /// Co-occurrence table (as written by `build-tdp`).
    #[arg(long)]
    pub tdp: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_OOV_FLOOR)]
    pub oov_floor: f64,
    /// Minimum top-object confidence for visual re-ranking.
    #[arg(long, default_value_t = 0.2)]
    pub threshold: f64,
    /// Floor for unseen (word, object) pairs; defaults to the table's own.
    #[arg(long)]
    pub tdp_epsilon: Option<f64>,
    /// Skip the unigram rescoring stage before visual factors.
    #[arg(long)]
    pub no_ulm_stage: bool,
}

#[derive(Args, Debug)]
pub struct RerankArgs {
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long)]
    pub hyps: PathBuf,
    /// Keep only the k best hypotheses of each list.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub models: ModelArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Hypotheses carrying the gold words.
    #[arg(long)]
    pub hyps: PathBuf,
    /// Ranked outputs, one file per scheme.
    #[arg(long, required = true)]
    pub ranked: Vec<PathBuf>,
    /// k used upstream; read from each ranked file's header when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    /// Reference lexicon for the dict metric.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub case_sensitive: bool,
    /// Text report; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Machine-readable `scheme<TAB>metric<TAB>value` report.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[arg(long)]
    pub hyps: PathBuf,
    /// Schemes to run; defaults to every scheme whose models are given.
    #[arg(long)]
    pub scheme: Vec<Scheme>,
    /// Values of k to evaluate.
    #[arg(long, default_values_t = [5, 9])]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long)]
    pub case_sensitive: bool,
    /// Also write each ranked output as `<dir>/<scheme>_k<k>.jsonl`.
    #[arg(long)]
    pub ranked_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::BuildUlm(a) => build_ulm_cmd(a),
        Command::BuildTdp(a) => build_tdp_cmd(a),
        Command::TrainTwe(a) => train_twe_cmd(a),
        Command::Rerank(a) => rerank_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Pipeline(a) => pipeline_cmd(a),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn in_file<T>(path: &Path, r: visrank_core::Result<T>) -> Result<T> {
    r.with_context(|| format!("reading {}", path.display()))
}

fn load_hyps(path: &Path) -> Result<Vec<HypothesisList>> {
    let loaded = in_file(path, vio::load_hypotheses(open(path)?))?;
    if loaded.warnings > 0 {
        warn!(
            "{}: re-sorted {} hypothesis list(s)",
            path.display(),
            loaded.warnings
        );
    }
    Ok(loaded.value)
}

fn load_ctx(path: &Path) -> Result<HashMap<String, VisualContext>> {
    let loaded = in_file(path, vio::load_contexts(open(path)?))?;
    if loaded.warnings > 0 {
        warn!(
            "{}: {} repeated image_id(s) replaced",
            path.display(),
            loaded.warnings
        );
    }
    Ok(loaded.value)
}

fn load_space(path: &Path) -> Result<EmbeddingSpace> {
    let loaded = in_file(path, vio::load_embeddings(open(path)?))?;
    if loaded.warnings > 0 {
        warn!(
            "{}: {} duplicate word(s) ignored",
            path.display(),
            loaded.warnings
        );
    }
    Ok(loaded.value)
}

fn load_ulm(path: &Path, oov_floor: f64) -> Result<UnigramModel> {
    let counts = in_file(path, vio::load_unigram_counts(open(path)?))?;
    build_ulm(counts, oov_floor)
        .with_context(|| format!("building language model from {}", path.display()))
}

fn load_dict(path: Option<&Path>) -> Result<Option<Dictionary>> {
    path.map(|p| in_file(p, vio::load_dictionary(open(p)?)))
        .transpose()
}

fn gold_map(lists: &[HypothesisList]) -> HashMap<String, String> {
    lists
        .iter()
        .filter_map(|l| l.gold.clone().map(|g| (l.image_id.clone(), g)))
        .collect()
}

/// Annotated (gold word, context) pairs for images that have both.
fn annotations<'a>(
    lists: &'a [HypothesisList],
    contexts: &'a HashMap<String, VisualContext>,
) -> (Vec<(&'a str, &'a VisualContext)>, usize) {
    let mut out = Vec::new();
    let mut unusable = 0;
    for l in lists {
        match (l.gold.as_deref(), contexts.get(&l.image_id)) {
            (Some(g), Some(c)) => out.push((g, c)),
            _ => unusable += 1,
        }
    }
    (out, unusable)
}

fn build_ulm_cmd(a: BuildUlmArgs) -> Result<()> {
    let mut sources = Vec::new();
    for p in &a.counts {
        sources.push(in_file(p, vio::load_unigram_counts(open(p)?))?);
    }
    let merged = merge_counts(sources);
    let model = build_ulm(merged, a.oov_floor)?;
    let names: Vec<String> = a.counts.iter().map(|p| p.display().to_string()).collect();
    let comments = vec![
        format!("visrank build-ulm sources={}", names.join(",")),
        format!(
            "oov_floor={} total_tokens={} vocab={}",
            model.oov_floor(),
            model.total_tokens(),
            model.vocab_size()
        ),
    ];
    let mut w = create(&a.out)?;
    vio::save_unigram_counts(model.counts(), &comments, &mut w)?;
    w.flush()?;
    info!("wrote {} words to {}", model.vocab_size(), a.out.display());
    Ok(())
}

fn build_tdp_cmd(a: BuildTdpArgs) -> Result<()> {
    let lists = load_hyps(&a.hyps)?;
    let contexts = load_ctx(&a.ctx)?;
    let (records, unusable) = annotations(&lists, &contexts);
    let n_records = records.len();
    let (table, empty) = build_cooccurrence(records);
    let table = table.with_epsilon(a.tdp_epsilon)?;
    if unusable + empty > 0 {
        warn!("skipped {unusable} record(s) without gold or context and {empty} with no objects");
    }
    let comments = vec![
        format!(
            "visrank build-tdp hyps={} ctx={}",
            a.hyps.display(),
            a.ctx.display()
        ),
        format!(
            "records={} skipped_unusable={unusable} skipped_empty_context={empty} epsilon={}",
            n_records, a.tdp_epsilon
        ),
    ];
    let mut w = create(&a.out)?;
    vio::save_cooccurrence_annotated(&table, &comments, &mut w)?;
    w.flush()?;
    Ok(())
}

fn train_twe_cmd(a: TrainTweArgs) -> Result<()> {
    let pairs: Vec<(String, String)> = match (&a.pairs, &a.hyps, &a.ctx) {
        (Some(p), _, _) => in_file(p, vio::load_training_pairs(open(p)?))?,
        (None, Some(h), Some(c)) => {
            let lists = load_hyps(h)?;
            let contexts = load_ctx(c)?;
            let (records, _) = annotations(&lists, &contexts);
            records
                .into_iter()
                .filter_map(|(g, ctx)| ctx.top().map(|o| (g.to_string(), o.label.clone())))
                .collect()
        }
        _ => bail!("either --pairs or both --hyps and --ctx are required"),
    };
    let init = a.init.as_deref().map(load_space).transpose()?;
    let config = TrainConfig {
        dimension: a.dim,
        epochs: a.epochs,
        learning_rate: a.lr,
        negatives: a.negatives,
        seed: a.seed,
        init,
        ..TrainConfig::default()
    };
    let corpus = TrainCorpus::new(pairs.iter().map(|(w, c)| (w.as_str(), c.as_str())))?;
    let space = train_twe(&corpus, &config)?;

    let mut w = create(&a.out)?;
    vio::save_embeddings(&space, &mut w)?;
    w.flush()?;

    // The embedding layout has no room for comments, so provenance goes to
    // a sidecar file.
    let meta_path = meta_path(&a.out);
    let mut meta = create(&meta_path)?;
    writeln!(meta, "# visrank train-twe")?;
    writeln!(
        meta,
        "dim={} epochs={} lr={} min_lr={} negatives={} seed={} window=1 sampling_power={}",
        config.dimension,
        config.epochs,
        config.learning_rate,
        config.min_learning_rate,
        config.negatives,
        config.seed,
        visrank_core::trainer::NEGATIVE_SAMPLING_POWER
    )?;
    writeln!(
        meta,
        "pairs={} vocab={} init={}",
        corpus.len(),
        corpus.vocab().len(),
        a.init
            .as_ref()
            .map_or("none".to_string(), |p| p.display().to_string())
    )?;
    meta.flush()?;
    Ok(())
}

/// `<out>.meta` next to a trained embedding file.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

struct LoadedModels {
    contexts: HashMap<String, VisualContext>,
    ulm: Option<UnigramModel>,
    swe: Option<EmbeddingSpace>,
    twe: Option<EmbeddingSpace>,
    tdp: Option<CooccurrenceTable>,
}

impl LoadedModels {
    fn load(a: &ModelArgs) -> Result<Self> {
        Ok(LoadedModels {
            contexts: a
                .ctx
                .as_deref()
                .map(load_ctx)
                .transpose()?
                .unwrap_or_default(),
            ulm: a
                .ulm
                .as_deref()
                .map(|p| load_ulm(p, a.oov_floor))
                .transpose()?,
            swe: a.swe.as_deref().map(load_space).transpose()?,
            twe: a.twe.as_deref().map(load_space).transpose()?,
            tdp: a
                .tdp
                .as_deref()
                .map(|p| in_file(p, vio::load_cooccurrence(open(p)?)))
                .transpose()?,
        })
    }

    fn models(&self) -> Models<'_> {
        Models {
            ulm: self.ulm.as_ref(),
            swe: self.swe.as_ref(),
            twe: self.twe.as_ref(),
            tdp: self.tdp.as_ref(),
        }
    }
}

fn rerank_config(scheme: Scheme, a: &ModelArgs) -> RerankConfig {
    RerankConfig {
        scheme,
        object_threshold: a.threshold,
        apply_ulm_stage: !a.no_ulm_stage,
        tdp_epsilon: a.tdp_epsilon,
    }
}

fn provenance(scheme: Scheme, k: Option<usize>, a: &ModelArgs) -> Vec<String> {
    let path = |p: &Option<PathBuf>| {
        p.as_ref()
            .map_or("none".to_string(), |p| p.display().to_string())
    };
    vec![
        format!(
            "visrank rerank scheme={} k={} threshold={} ulm_stage={} tdp_epsilon={} oov_floor={}",
            scheme,
            k.map_or("all".to_string(), |k| k.to_string()),
            a.threshold,
            if a.no_ulm_stage { "off" } else { "on" },
            a.tdp_epsilon.map_or("table".to_string(), |e| e.to_string()),
            a.oov_floor
        ),
        format!(
            "ctx={} ulm={} swe={} twe={} tdp={}",
            path(&a.ctx),
            path(&a.ulm),
            path(&a.swe),
            path(&a.twe),
            path(&a.tdp)
        ),
    ]
}

fn truncate(mut l: HypothesisList, k: Option<usize>) -> HypothesisList {
    if let Some(k) = k {
        l.truncate(k);
    }
    l
}

fn rerank_cmd(a: RerankArgs) -> Result<()> {
    if a.k == Some(0) {
        bail!("--k must be positive");
    }
    let loaded = LoadedModels::load(&a.models)?;
    let config = rerank_config(a.scheme, &a.models);
    let records = vio::hypothesis_records(open(&a.hyps)?).map(|r| r.map(|l| truncate(l, a.k)));
    let results = rerank_batch(records, &loaded.contexts, &loaded.models(), &config)?;

    let mut outputs = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(o) => outputs.push(o),
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e}", a.hyps.display());
            }
        }
    }
    let mut w = sink(a.out.as_deref())?;
    vio::save_ranked(&outputs, &provenance(a.scheme, a.k, &a.models), &mut w)?;
    w.flush()?;
    if failed > 0 {
        return Err(anyhow!(
            "{failed} record(s) in {} failed validation",
            a.hyps.display()
        ));
    }
    Ok(())
}

/// Reads `key=value` from provenance comment lines.
fn header_value<'a>(comments: &'a [String], key: &str) -> Option<&'a str> {
    comments
        .iter()
        .flat_map(|c| c.split_whitespace())
        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let lists = load_hyps(&a.hyps)?;
    let gold = gold_map(&lists);
    let dict = load_dict(a.dict.as_deref())?;
    let mode = match_mode(a.case_sensitive);
    let mut table = ResultsTable::new(mode);
    for path in &a.ranked {
        let (outputs, comments) = in_file(path, vio::load_ranked(open(path)?))?;
        let label = match header_value(&comments, "scheme") {
            Some(s) => scheme_label(s.parse::<Scheme>()?).to_string(),
            None => path
                .file_stem()
                .map_or("?".to_string(), |s| s.to_string_lossy().into_owned()),
        };
        let k = match a.k {
            Some(k) => k,
            None => header_value(&comments, "k")
                .and_then(|k| k.parse().ok())
                .unwrap_or_else(|| outputs.iter().map(|o| o.ranked.len()).max().unwrap_or(1)),
        };
        let report = evaluate(&outputs, &gold, dict.as_ref(), k, mode)?;
        warn_exclusions(&label, k, &report);
        table.insert(label, k, report);
    }
    write_reports(&table, a.out.as_deref(), a.tsv.as_deref())
}

fn match_mode(case_sensitive: bool) -> MatchMode {
    if case_sensitive {
        MatchMode::CaseSensitive
    } else {
        MatchMode::CaseInsensitive
    }
}

fn warn_exclusions(label: &str, k: usize, r: &visrank_core::EvalReport) {
    if r.missing_gold + r.oversized > 0 {
        warn!(
            "{label} k={k}: excluded {} record(s) without gold and {} with more than k candidates",
            r.missing_gold, r.oversized
        );
    }
}

fn write_reports(table: &ResultsTable, out: Option<&Path>, tsv: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    w.write_all(format_report(table).as_bytes())?;
    w.flush()?;
    if let Some(p) = tsv {
        let mut w = create(p)?;
        w.write_all(format_tsv(table).as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

fn pipeline_cmd(a: PipelineArgs) -> Result<()> {
    if a.k.contains(&0) {
        bail!("--k must be positive");
    }
    let lists = load_hyps(&a.hyps)?;
    let gold = gold_map(&lists);
    let dict = load_dict(a.dict.as_deref())?;
    let loaded = LoadedModels::load(&a.models)?;
    let models = loaded.models();
    let mode = match_mode(a.case_sensitive);

    let schemes: Vec<Scheme> = if a.scheme.is_empty() {
        Scheme::ALL
            .into_iter()
            .filter(|&s| {
                let ok = models.check(&rerank_config(s, &a.models)).is_ok();
                if !ok {
                    warn!("skipping scheme {s}: required models not supplied");
                }
                ok
            })
            .collect()
    } else {
        a.scheme.clone()
    };
    if let Some(dir) = &a.ranked_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }

    let mut table = ResultsTable::new(mode);
    for &k in &a.k {
        for &scheme in &schemes {
            let config = rerank_config(scheme, &a.models);
            let records = lists.iter().cloned().map(|l| Ok(truncate(l, Some(k))));
            let outputs: Vec<RankedOutput> =
                rerank_batch(records, &loaded.contexts, &models, &config)?
                    .into_iter()
                    .collect::<visrank_core::Result<_>>()?;
            if let Some(dir) = &a.ranked_dir {
                let path = dir.join(format!("{}_k{k}.jsonl", scheme.name()));
                let mut w = create(&path)?;
                vio::save_ranked(&outputs, &provenance(scheme, Some(k), &a.models), &mut w)?;
                w.flush()?;
            }
            let report = evaluate(&outputs, &gold, dict.as_ref(), k, mode)?;
            let label = scheme_label(scheme);
            warn_exclusions(label, k, &report);
            table.insert(label, k, report);
        }
    }
    write_reports(&table, a.out.as_deref(), a.tsv.as_deref())
}
