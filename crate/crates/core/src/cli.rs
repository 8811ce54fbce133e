//! Command-line front end.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{load_coresets, load_graph, AttrId, AttributedGraph, Coreset};
use crate::miner::{read_patterns_jsonl, write_patterns_jsonl, Algorithm, GainMode, Miner, MinerConfig};
use crate::rules::{coverage_curve, label_pairs, split_to_pairs, RuleLibrary};
use crate::scoring::{evaluate_rankings, fuse_scores, score_nodes};

pub const TIE_BREAK_POLICY: &str = "gain-desc/leafset-lex-asc;rank:bits-asc,freq-desc,core,leaves";

#[derive(Debug, Parser)]
#[command(name = "astarmine", version, about = "Mine attribute-star patterns from attributed graphs")]
pub struct Cli {
    /// Worker threads for gain evaluation and scoring (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine a-stars and write patterns, stats and a manifest.
    Mine(MineArgs),
    /// Score missing attributes of target vertices.
    Score(ScoreArgs),
    /// Recall@K and NDCG@K of a scored-nodes file against a truth file.
    EvalCompletion(EvalCompletionArgs),
    /// Coverage of a rule library by pair rules split from a pattern file.
    EvalCoverage(EvalCoverageArgs),
    /// Mine and print the per-iteration description-length report.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge file, `u<TAB>v` per line.
    #[arg(long)]
    pub edges: PathBuf,
    /// Attribute file, `v<TAB>a1,a2,...` per line.
    #[arg(long)]
    pub attrs: PathBuf,
}

#[derive(Debug, Args)]
pub struct MiningArgs {
    #[arg(long, value_enum, default_value_t = AlgoArg::Partial)]
    pub algo: AlgoArg,
    #[arg(long, value_enum, default_value_t = GainArg::Net)]
    pub gain: GainArg,
    /// Coreset file enabling multi-value coresets.
    #[arg(long)]
    pub coresets: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Basic,
    Partial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GainArg {
    Net,
    DataOnly,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub mining: MiningArgs,
    /// Pattern output (JSON Lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Stats CSV; defaults to `<out>.stats.csv`.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Also write the final inverted database as JSON Lines.
    #[arg(long)]
    pub dump_db: Option<PathBuf>,
    /// Print a description-length report per iteration to stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Pattern file produced by `mine`.
    #[arg(long)]
    pub patterns: PathBuf,
    /// Target vertex labels, one per line.
    #[arg(long)]
    pub targets: PathBuf,
    /// JSON object: vertex → per-attribute scores in lexicographic attribute order.
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalCompletionArgs {
    /// Scored-nodes file produced by `score`.
    #[arg(long)]
    pub scores: PathBuf,
    /// Held-out attributes, `v<TAB>a1,a2,...` per line.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Metrics CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalCoverageArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub patterns: PathBuf,
    /// JSON array of `{"cause": ..., "derivative": ...}`.
    #[arg(long)]
    pub rules: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Coverage CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub mining: MiningArgs,
    /// Report CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl MiningArgs {
    fn config(&self) -> MinerConfig {
        MinerConfig {
            algorithm: match self.algo {
                AlgoArg::Basic => Algorithm::Basic,
                AlgoArg::Partial => Algorithm::Partial,
            },
            gain: match self.gain {
                GainArg::Net => GainMode::Net,
                GainArg::DataOnly => GainMode::DataOnly,
            },
        }
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    /// Input path → SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub algorithm: Option<String>,
    pub gain_mode: Option<String>,
    pub tie_break: String,
    /// Attribute values in the order used by external score vectors.
    pub attribute_order: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: &[&Path], graph: Option<&AttributedGraph>) -> Result<Self> {
        let mut digests = BTreeMap::new();
        for path in inputs {
            digests.insert(path.display().to_string(), sha256_file(path)?);
        }
        Ok(RunManifest {
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            inputs: digests,
            algorithm: None,
            gain_mode: None,
            tie_break: TIE_BREAK_POLICY.to_owned(),
            attribute_order: graph
                .map(|g| g.attrs_by_label().into_iter().map(|a| g.attr_label(a).to_owned()).collect())
                .unwrap_or_default(),
        })
    }

    fn with_mining(mut self, config: MinerConfig) -> Self {
        self.algorithm = Some(format!("{:?}", config.algorithm).to_lowercase());
        self.gain_mode = Some(
            match config.gain {
                GainMode::Net => "net",
                GainMode::DataOnly => "data-only",
            }
            .to_owned(),
        );
        self
    }

    /// Writes `<output>.manifest.json`.
    pub fn write_beside(&self, output: &Path) -> Result<PathBuf> {
        let path = manifest_path(output);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn flush<W: Write>(mut w: W, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn read_graph(args: &GraphArgs) -> Result<AttributedGraph> {
    let (graph, summary) = load_graph(open(&args.edges)?, open(&args.attrs)?)?;
    if summary.self_loops > 0 || summary.duplicate_edges > 0 {
        log::warn!(
            "dropped {} self-loops and {} duplicate edges",
            summary.self_loops,
            summary.duplicate_edges
        );
    }
    Ok(graph)
}

fn read_coresets(path: Option<&Path>, graph: &AttributedGraph) -> Result<Option<Vec<Coreset>>> {
    let Some(path) = path else { return Ok(None) };
    let (coresets, unknown) = load_coresets(open(path)?, graph)?;
    if unknown > 0 {
        log::warn!("{unknown} coresets mention unknown values and were dropped");
    }
    Ok(Some(coresets))
}

fn mining_inputs<'a>(graph: &'a GraphArgs, mining: &'a MiningArgs) -> Vec<&'a Path> {
    let mut v = vec![graph.edges.as_path(), graph.attrs.as_path()];
    v.extend(mining.coresets.as_deref());
    v
}

/// Runs the miner to completion, reporting each iteration when `verbose`.
fn mine(graph: &AttributedGraph, mining: &MiningArgs, verbose: bool) -> Result<crate::miner::MiningResult> {
    let coresets = read_coresets(mining.coresets.as_deref(), graph)?;
    let mut miner = Miner::new(graph, coresets.as_deref(), mining.config())?;
    let mut reported = 0;
    loop {
        let step = miner.step()?;
        if verbose {
            for row in &miner.stats().iterations[reported..] {
                eprintln!("{}", serde_json::to_string(&row.lengths)?);
            }
            reported = miner.stats().iterations.len();
        }
        if step.is_none() {
            break;
        }
    }
    miner.db().check_consistency()?;
    Ok(miner.finish())
}

pub fn cmd_mine(args: &MineArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let result = mine(&graph, &args.mining, args.verbose)?;

    let mut out = create(&args.out)?;
    write_patterns_jsonl(&result.patterns, &graph, &mut out)?;
    flush(out, &args.out)?;

    let stats_path = args.stats.clone().unwrap_or_else(|| {
        let mut name = args.out.as_os_str().to_owned();
        name.push(".stats.csv");
        PathBuf::from(name)
    });
    let mut out = create(&stats_path)?;
    result.stats.write_csv(&graph, &mut out)?;
    flush(out, &stats_path)?;

    if let Some(path) = &args.dump_db {
        let mut out = create(path)?;
        result.db.dump_jsonl(&graph, &mut out)?;
        flush(out, path)?;
    }

    let manifest = RunManifest::new("mine", &mining_inputs(&args.graph, &args.mining), Some(&graph))?
        .with_mining(args.mining.config());
    manifest.write_beside(&args.out)?;
    manifest.write_beside(&stats_path)?;
    log::info!("{} patterns after {} merges", result.patterns.len(), result.stats.merges());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RankedAttr {
    pub attr: String,
    pub score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoredNode {
    pub vertex: String,
    pub ranked: Vec<RankedAttr>,
}

fn read_labels(path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if !line.is_empty() && !line.starts_with('#') {
            out.push(line.to_owned());
        }
    }
    Ok(out)
}

pub fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let patterns = read_patterns_jsonl(open(&args.patterns)?, &graph)?;
    let labels = read_labels(&args.targets)?;
    let targets = labels
        .iter()
        .map(|l| graph.vertex_id(l).ok_or_else(|| Error::Input(format!("unknown target vertex {l:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let external: Option<BTreeMap<String, Vec<f64>>> = match &args.external {
        Some(p) => Some(serde_json::from_reader(open(p)?)?),
        None => None,
    };
    let order = graph.attrs_by_label();
    let scores = score_nodes(&patterns, &graph, &targets);

    let mut out = create(&args.out)?;
    for (label, model) in labels.iter().zip(&scores) {
        let mut ranked: Vec<(AttrId, f64)> = match &external {
            None => model.ranked(),
            Some(ext) => {
                let row = ext
                    .get(label)
                    .ok_or_else(|| Error::Input(format!("no external scores for {label:?}")))?;
                if row.len() != order.len() {
                    return Err(Error::Input(format!(
                        "external scores for {label:?} have {} entries, expected {}",
                        row.len(),
                        order.len()
                    )));
                }
                let mut aligned = vec![0.0; order.len()];
                for (a, s) in order.iter().zip(row) {
                    aligned[a.index()] = *s;
                }
                let fused = fuse_scores(model, &aligned)?;
                let own = graph.attributes(graph.vertex_id(label).unwrap());
                fused
                    .into_iter()
                    .enumerate()
                    .map(|(i, s)| (AttrId(i as u32), s))
                    .filter(|(a, _)| own.binary_search(a).is_err())
                    .collect()
            }
        };
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(graph.attr_label(a.0).cmp(graph.attr_label(b.0))));
        let node = ScoredNode {
            vertex: label.clone(),
            ranked: ranked
                .into_iter()
                .map(|(a, score)| RankedAttr { attr: graph.attr_label(a).to_owned(), score })
                .collect(),
        };
        serde_json::to_writer(&mut out, &node)?;
        out.write_all(b"\n").map_err(|e| Error::io(&args.out, e))?;
    }
    flush(out, &args.out)?;

    let mut inputs = vec![args.graph.edges.as_path(), args.graph.attrs.as_path(), &args.patterns, &args.targets];
    inputs.extend(args.external.as_deref());
    RunManifest::new("score", &inputs, Some(&graph))?.write_beside(&args.out)?;
    Ok(())
}

fn read_truth(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (v, values) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse { line: i + 1, message: "expected vertex<TAB>values".into() })?;
        let values = values.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_owned);
        out.entry(v.trim().to_owned()).or_insert_with(Vec::new).extend(values);
    }
    Ok(out)
}

fn check_ks(ks: &[usize]) -> Result<()> {
    if ks.iter().any(|k| *k == 0) {
        return Err(Error::Input("k must be at least 1".into()));
    }
    Ok(())
}

pub fn cmd_eval_completion(args: &EvalCompletionArgs) -> Result<()> {
    check_ks(&args.k)?;
    let truth = read_truth(&args.truth)?;
    let mut cases = Vec::new();
    for (i, line) in open(&args.scores)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&args.scores, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let node: ScoredNode =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        let ranking: Vec<String> = node.ranked.into_iter().map(|r| r.attr).collect();
        let expected = truth.get(&node.vertex).cloned().unwrap_or_default();
        cases.push((ranking, expected));
    }
    let rows = evaluate_rankings(&cases, &args.k);
    let mut w = csv::Writer::from_writer(sink(args.out.as_deref())?);
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<metrics>", e))?;
    if let Some(out) = &args.out {
        RunManifest::new("eval-completion", &[&args.scores, &args.truth], None)?.write_beside(out)?;
    }
    Ok(())
}

pub fn cmd_eval_coverage(args: &EvalCoverageArgs) -> Result<()> {
    check_ks(&args.k)?;
    let graph = read_graph(&args.graph)?;
    let patterns = read_patterns_jsonl(open(&args.patterns)?, &graph)?;
    let library = RuleLibrary::from_json(open(&args.rules)?)?;
    let found = label_pairs(&split_to_pairs(&patterns), &graph);
    let curve = coverage_curve(&library, &found, &args.k)?;
    let mut w = csv::Writer::from_writer(sink(args.out.as_deref())?);
    w.write_record(["k", "coverage"])?;
    for (k, c) in curve {
        w.write_record([k.to_string(), c.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<coverage>", e))?;
    if let Some(out) = &args.out {
        let inputs = [args.graph.edges.as_path(), args.graph.attrs.as_path(), &args.patterns, &args.rules];
        RunManifest::new("eval-coverage", &inputs, Some(&graph))?.write_beside(out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    iteration: usize,
    evaluated_pairs: u64,
    possible_pairs: u64,
    update_ratio: f64,
    accepted_x: String,
    accepted_y: String,
    net_gain_bits: f64,
    data_gain_bits: f64,
    bits_model: f64,
    bits_data: f64,
    bits_total: f64,
    records: usize,
    s: u64,
}

pub fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let graph = read_graph(&args.graph)?;
    let result = mine(&graph, &args.mining, false)?;
    let labels = |l: &crate::inverted::Leafset| {
        l.values().iter().map(|a| graph.attr_label(*a)).collect::<Vec<_>>().join(",")
    };
    let mut w = csv::Writer::from_writer(sink(args.out.as_deref())?);
    for it in &result.stats.iterations {
        let (x, y) = match &it.accepted {
            Some((x, y)) => (labels(x), labels(y)),
            None => (String::new(), String::new()),
        };
        w.serialize(ReportRow {
            iteration: it.iteration,
            evaluated_pairs: it.evaluated_pairs,
            possible_pairs: it.possible_pairs,
            update_ratio: it.update_ratio,
            accepted_x: x,
            accepted_y: y,
            net_gain_bits: it.net_gain_bits,
            data_gain_bits: it.data_gain_bits,
            bits_model: it.lengths.bits_model,
            bits_data: it.lengths.bits_data,
            bits_total: it.lengths.bits_total,
            records: it.lengths.records,
            s: it.lengths.s,
        })?;
    }
    w.flush().map_err(|e| Error::io("<stats>", e))?;
    if let Some(out) = &args.out {
        RunManifest::new("stats", &mining_inputs(&args.graph, &args.mining), Some(&graph))?
            .with_mining(args.mining.config())
            .write_beside(out)?;
    }
    Ok(())
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Mine(a) => cmd_mine(a),
        Command::Score(a) => cmd_score(a),
        Command::EvalCompletion(a) => cmd_eval_completion(a),
        Command::EvalCoverage(a) => cmd_eval_coverage(a),
        Command::Stats(a) => cmd_stats(a),
    }
}
