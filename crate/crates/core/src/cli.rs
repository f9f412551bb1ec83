//! Command-line frontend: disambiguate, build-dataset, eval, gen-synth,
//! stats. Data goes to files and standard output, logs to standard error.
//! Exit codes: 0 success, 1 data error, 2 usage/config error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{
    balance, emit_records, evaluate, filter_threshold, stats, FormCounts,
    LabeledSample, MaskPolicy,
};
use crate::io::{
    gen_synthetic, parse_encoding_table, parse_manifest, IoError, SynthSpec,
};
use crate::lexicon::{
    parse_heteronym_inventory, parse_pron_lexicon, AmbiguousPolicy,
    HeteronymInventory, MixedSequence, PronLexicon,
};
use crate::pipeline::{build_sequence, label_sample, run_disambiguate, PipelineConfig};
use crate::scoring::DisambiguationResult;

/// Heteronym disambiguation and G2P dataset generation.
#[derive(Debug, Parser)]
#[command(name = "g2paug", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score heteronym candidates against frame encodings and pick forms.
    Disambiguate(DisambiguateArgs),
    /// Emit per-threshold training TSVs (optionally balanced) from results.
    BuildDataset(BuildDatasetArgs),
    /// TP/FP table of chosen forms against gold labels.
    Eval(EvalArgs),
    /// Generate a deterministic synthetic corpus.
    GenSynth(GenSynthArgs),
    /// Kept-sample counts per confidence threshold.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AmbiguousArg {
    /// Keep as graphemes, mask as <unk> at emission.
    Mask,
    /// Substitute the first lexicon pronunciation.
    First,
}

impl From<AmbiguousArg> for AmbiguousPolicy {
    fn from(a: AmbiguousArg) -> Self {
        match a {
            AmbiguousArg::Mask => AmbiguousPolicy::Mask,
            AmbiguousArg::First => AmbiguousPolicy::First,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MaskArg {
    Mask,
    Drop,
}

impl From<MaskArg> for MaskPolicy {
    fn from(m: MaskArg) -> Self {
        match m {
            MaskArg::Mask => MaskPolicy::Mask,
            MaskArg::Drop => MaskPolicy::Drop,
        }
    }
}

#[derive(Debug, Args)]
pub struct DisambiguateArgs {
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub inventory: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Encoding table; required unless every record carries precomputed
    /// distance matrices.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value = "mask")]
    pub ambiguous: AmbiguousArg,
    #[arg(long, default_value_t = 64)]
    pub cap: usize,
    /// Thresholds for the summary, in percent notation ("0.01%").
    #[arg(long, value_delimiter = ',', default_value = "0%")]
    pub thresholds: Vec<String>,
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub inventory: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0%")]
    pub thresholds: Vec<String>,
    #[arg(long, value_enum, default_value = "mask")]
    pub mask_policy: MaskArg,
    #[arg(long, value_enum, default_value = "mask")]
    pub ambiguous: AmbiguousArg,
    /// Also emit a balanced variant per threshold.
    #[arg(long)]
    pub balance: bool,
    /// Existing per-form counts (word<TAB>form<TAB>count) balancing starts
    /// from.
    #[arg(long)]
    pub base_counts: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub results: PathBuf,
    /// Gold labels: sentence_id<TAB>slot_index<TAB>form_id.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0%")]
    pub thresholds: Vec<String>,
    /// Output TSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub inventory: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0%")]
    pub thresholds: Vec<String>,
}

/// Failure classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2: bad flags, missing input paths, invalid specs.
    Config(String),
    /// Exit 1: unreadable or malformed data.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Data(m) => m,
        }
    }
}

/// Parse a percent-notation threshold into a ratio:
/// "0.01%" -> 0.0001. The decimal point is shifted textually before
/// parsing so the result is the nearest float to the exact ratio. Plain
/// ratios without "%" are accepted as-is. Valid range is [0, 2].
pub fn parse_threshold(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = if let Some(num) = s.strip_suffix('%') {
        shift_decimal_left2(num.trim())
            .and_then(|shifted| shifted.parse::<f64>().ok())
    } else {
        s.parse::<f64>().ok()
    };
    match value {
        Some(v) if v.is_finite() && (0.0..=2.0).contains(&v) => Ok(v),
        _ => Err(format!("invalid threshold {s:?}")),
    }
}

/// Move the decimal point of a non-negative decimal literal two places to
/// the left, textually.
fn shift_decimal_left2(num: &str) -> Option<String> {
    if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit() || b == b'.') {
        return None;
    }
    let (int_part, frac_part) = match num.split_once('.') {
        Some((i, f)) => (i, f),
        None => (num, ""),
    };
    if int_part.contains('.') || frac_part.contains('.') {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    if digits.is_empty() {
        return None;
    }
    let point = int_part.len();
    if point >= 2 {
        let (head, tail) = digits.split_at(point - 2);
        let head = if head.is_empty() { "0" } else { head };
        Some(format!("{head}.{tail}"))
    } else {
        Some(format!("0.{}{}", "0".repeat(2 - point), digits))
    }
}

fn parse_thresholds(raw: &[String]) -> Result<Vec<f64>, CliError> {
    let mut taus = raw
        .iter()
        .map(|s| parse_threshold(s).map_err(CliError::Config))
        .collect::<Result<Vec<_>, _>>()?;
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(taus)
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("no such file: {}", path.display())))
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_lexicon(path: &Path) -> Result<PronLexicon, CliError> {
    require_file(path)?;
    parse_pron_lexicon(&read_text(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_inventory(path: &Path) -> Result<HeteronymInventory, CliError> {
    require_file(path)?;
    parse_heteronym_inventory(&read_text(path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_results(path: &Path) -> Result<Vec<DisambiguationResult>, CliError> {
    require_file(path)?;
    read_text(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            serde_json::from_str(line)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// Label used in output filenames: "0.01%" -> "0p01pct".
fn threshold_label(raw: &str) -> String {
    raw.trim()
        .replace('%', "pct")
        .replace('.', "p")
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Disambiguate(args) => cmd_disambiguate(args),
        Command::BuildDataset(args) => cmd_build_dataset(args),
        Command::Eval(args) => cmd_eval(args),
        Command::GenSynth(args) => cmd_gen_synth(args),
        Command::Stats(args) => cmd_stats(args),
    }
}

fn pipeline_config(ambiguous: AmbiguousArg, cap: usize) -> Result<PipelineConfig, CliError> {
    if cap < 2 {
        return Err(CliError::Config("candidate cap must be >= 2".into()));
    }
    Ok(PipelineConfig { ambiguous: ambiguous.into(), candidate_cap: cap })
}

fn cmd_disambiguate(args: DisambiguateArgs) -> Result<(), CliError> {
    let taus = parse_thresholds(&args.thresholds)?;
    let config = pipeline_config(args.ambiguous, args.cap)?;
    let lexicon = load_lexicon(&args.lexicon)?;
    let inventory = load_inventory(&args.inventory)?;
    require_file(&args.manifest)?;
    let manifest = parse_manifest(&read_text(&args.manifest)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.manifest.display())))?;
    let table = match &args.table {
        Some(path) => {
            require_file(path)?;
            Some(
                parse_encoding_table(&read_text(path)?)
                    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let base_dir = args
        .manifest
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();

    let outputs = run_disambiguate(
        &manifest,
        &base_dir,
        &lexicon,
        &inventory,
        table.as_ref(),
        &config,
        args.jobs,
    )
    .map_err(|e| CliError::Data(e.to_string()))?;

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    let results_path = args.out.join("results.jsonl");
    let mut lines = String::new();
    for (result, _) in &outputs {
        lines.push_str(
            &serde_json::to_string(result).map_err(|e| CliError::Data(e.to_string()))?,
        );
        lines.push('\n');
    }
    fs::write(&results_path, lines)
        .map_err(|e| CliError::Data(format!("{}: {e}", results_path.display())))?;
    eprintln!("wrote {} results to {}", outputs.len(), results_path.display());

    let samples: Vec<LabeledSample> = outputs.into_iter().map(|(_, s)| s).collect();
    print!("{}", summary_table(&samples, &args.thresholds, &taus));
    Ok(())
}

fn summary_table(samples: &[LabeledSample], raw: &[String], taus: &[f64]) -> String {
    let mut out = String::from("threshold\tkept\n");
    for (label, stat) in raw.iter().zip(stats(samples, taus)) {
        out.push_str(&format!("{label}\t{}\n", stat.kept));
    }
    out
}

fn results_to_bare_samples(results: &[DisambiguationResult]) -> Vec<LabeledSample> {
    results
        .iter()
        .map(|r| LabeledSample {
            sentence_id: r.sentence_id.clone(),
            text: String::new(),
            slots: r
                .slots
                .iter()
                .map(|s| crate::dataset::SlotLabel {
                    word: s.word.clone(),
                    form_id: s.chosen_form.clone(),
                    confidence: s.confidence,
                })
                .collect(),
            sequence: MixedSequence { items: vec![] },
        })
        .collect()
}

fn load_base_counts(path: &Path) -> Result<FormCounts, CliError> {
    require_file(path)?;
    let mut counts = FormCounts::default();
    for (idx, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = (fields.len() == 3)
            .then(|| fields[2].trim().parse::<u64>().ok())
            .flatten();
        match parsed {
            Some(count) => counts.set(fields[0].trim(), fields[1].trim(), count),
            None => {
                return Err(CliError::Data(format!(
                    "{}:{}: malformed count line",
                    path.display(),
                    idx + 1
                )))
            }
        }
    }
    Ok(counts)
}

fn cmd_build_dataset(args: BuildDatasetArgs) -> Result<(), CliError> {
    let taus = parse_thresholds(&args.thresholds)?;
    let config = pipeline_config(args.ambiguous, 64)?;
    let lexicon = load_lexicon(&args.lexicon)?;
    let inventory = load_inventory(&args.inventory)?;
    require_file(&args.manifest)?;
    let manifest = parse_manifest(&read_text(&args.manifest)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.manifest.display())))?;
    let results = load_results(&args.results)?;
    let base = match &args.base_counts {
        Some(path) => load_base_counts(path)?,
        None => FormCounts::default(),
    };

    let texts: BTreeMap<&str, &str> = manifest
        .records
        .iter()
        .map(|r| (r.id.as_str(), r.text.as_str()))
        .collect();
    let mut samples = Vec::with_capacity(results.len());
    for result in &results {
        let text = texts.get(result.sentence_id.as_str()).ok_or_else(|| {
            CliError::Data(format!(
                "result {} has no manifest record",
                result.sentence_id
            ))
        })?;
        let seq = build_sequence(text, &lexicon, &inventory, &config);
        samples.push(label_sample(&result.sentence_id, text, seq, result, &config));
    }
    samples.sort_by(|a, b| a.sentence_id.cmp(&b.sentence_id));

    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    let mut summary = String::from("threshold\tkept\temitted\tbalanced\n");
    for (raw, &tau) in args.thresholds.iter().zip(&taus) {
        let kept = filter_threshold(&samples, tau);
        let records = emit_records(&kept, &inventory, args.mask_policy.into())
            .map_err(|e| CliError::Data(e.to_string()))?;
        let label = threshold_label(raw);
        let path = args.out.join(format!("train_{label}.tsv"));
        write_records(&path, &records)?;
        let mut balanced_count = String::from("-");
        if args.balance {
            let picked = balance(&kept, &base);
            let recs = emit_records(&picked, &inventory, args.mask_policy.into())
                .map_err(|e| CliError::Data(e.to_string()))?;
            let bal_path = args.out.join(format!("train_{label}_balanced.tsv"));
            write_records(&bal_path, &recs)?;
            balanced_count = recs.len().to_string();
        }
        summary.push_str(&format!(
            "{raw}\t{}\t{}\t{balanced_count}\n",
            kept.len(),
            records.len()
        ));
    }
    print!("{summary}");
    Ok(())
}

fn write_records(
    path: &Path,
    records: &[crate::dataset::TrainingRecord],
) -> Result<(), CliError> {
    let mut out = String::new();
    for record in records {
        out.push_str(&record.tsv_line());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn cmd_eval(args: EvalArgs) -> Result<(), CliError> {
    let taus = parse_thresholds(&args.thresholds)?;
    let results = load_results(&args.results)?;
    require_file(&args.gold)?;
    let mut gold = BTreeMap::new();
    for (idx, line) in read_text(&args.gold)?.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let slot = fields.get(1).and_then(|s| s.trim().parse::<usize>().ok());
        match (fields.len(), slot) {
            (3, Some(slot)) => {
                gold.insert(
                    (fields[0].trim().to_string(), slot),
                    fields[2].trim().to_string(),
                );
            }
            _ => {
                return Err(CliError::Data(format!(
                    "{}:{}: malformed gold line",
                    args.gold.display(),
                    idx + 1
                )))
            }
        }
    }
    let samples = results_to_bare_samples(&results);
    let table = evaluate(&gold, &samples, &taus)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let tsv = table.to_tsv();
    match &args.out {
        Some(path) => fs::write(path, tsv)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => print!("{tsv}"),
    }
    Ok(())
}

fn cmd_gen_synth(args: GenSynthArgs) -> Result<(), CliError> {
    require_file(&args.spec)?;
    let spec: SynthSpec = serde_json::from_str(&read_text(&args.spec)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.spec.display())))?;
    let lexicon = load_lexicon(&args.lexicon)?;
    let inventory = load_inventory(&args.inventory)?;
    gen_synthetic(&spec, &inventory, &lexicon, &args.out).map_err(|e| match e {
        IoError::BadSpec(_)
        | IoError::UnknownForm { .. }
        | IoError::PlantedMismatch(_) => CliError::Config(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    eprintln!(
        "generated {} sentences under {}",
        spec.sentences.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<(), CliError> {
    let taus = parse_thresholds(&args.thresholds)?;
    let results = load_results(&args.results)?;
    let samples = results_to_bare_samples(&results);
    print!("{}", summary_table(&samples, &args.thresholds, &taus));
    let per_form = stats(&samples, &taus);
    let mut forms: Vec<(String, String)> = Vec::new();
    for stat in &per_form {
        for ((word, form), _) in stat.counts.iter() {
            if !forms.contains(&(word.clone(), form.clone())) {
                forms.push((word.clone(), form.clone()));
            }
        }
    }
    forms.sort();
    if !forms.is_empty() {
        let mut out = String::from("word\tform");
        for raw in &args.thresholds {
            out.push_str(&format!("\t{raw}"));
        }
        out.push('\n');
        for (word, form) in &forms {
            out.push_str(&format!("{word}\t{form}"));
            for stat in &per_form {
                out.push_str(&format!("\t{}", stat.counts.get(word, form)));
            }
            out.push('\n');
        }
        print!("{out}");
    }
    Ok(())
}
