//! Command-line front end.
//!
//! Exit codes: 0 success, 2 data or I/O error, 3 translator failure,
//! 64 usage error. Results go to stdout, progress to stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{self, CorpusError, LanguageTag, ParallelCorpus, SplitSpec};
use crate::metrics::{self, BleuReport};
use crate::parallel::{default_jobs, Exec, DEFAULT_BATCH_SIZE};
use crate::sieve::{self, ModeConfig, ReportFormat, SieveConfig, SieveError};
use crate::textnorm::{self, BpeModel, TextError, TokenSequence};
use crate::translators::{
    ExternalTranslator, IdentityTranslator, LexiconTranslator, TranslateError, Translator,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRANSLATOR: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "mtsieve",
    version,
    about = "Remove mistranslated pairs from parallel corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Take a full, quarter, first-N or random-fraction subset of a bitext.
    Split(SplitArgs),
    /// Carve a random validation set off a bitext.
    Carve(CarveArgs),
    /// Score every training pair and drop those below the validation threshold.
    Filter(FilterArgs),
    /// Corpus BLEU, mean sentence METEOR and mean sentence RIBES.
    Eval(EvalArgs),
    /// Learn, apply or undo BPE segmentation. Non-final subwords end in "@@";
    /// literal "@" and "\" in the input are escaped as "\@" and "\\".
    #[command(subcommand)]
    Bpe(BpeCommand),
    /// Pair, token and empty-line counts of a bitext.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct Langs {
    #[arg(long, default_value = "src")]
    pub src_lang: String,
    #[arg(long, default_value = "tgt")]
    pub tgt_lang: String,
}

#[derive(Debug, Args)]
pub struct BitextInput {
    /// Source side, one sentence per line.
    #[arg(long, required_unless_present = "tsv", requires = "tgt")]
    pub src: Option<PathBuf>,
    /// Target side, aligned line by line with --src.
    #[arg(long, requires = "src")]
    pub tgt: Option<PathBuf>,
    /// Single two-column tab-separated file instead of --src/--tgt.
    #[arg(long, conflicts_with_all = ["src", "tgt"])]
    pub tsv: Option<PathBuf>,
    #[command(flatten)]
    pub langs: Langs,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: BitextInput,
    /// full | quarter | first:N | fraction:F
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Writes <prefix>.src and <prefix>.tgt.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct CarveArgs {
    #[command(flatten)]
    pub input: BitextInput,
    /// Number of validation pairs.
    #[arg(long)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Writes <prefix>.train.{src,tgt} and <prefix>.valid.{src,tgt}.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub train_src: PathBuf,
    #[arg(long)]
    pub train_tgt: PathBuf,
    #[arg(long)]
    pub valid_src: PathBuf,
    #[arg(long)]
    pub valid_tgt: PathBuf,
    #[command(flatten)]
    pub langs: Langs,
    /// identity | lexicon | extern:<shell command>
    #[arg(long, default_value = "identity")]
    pub translator: String,
    /// Discard pairs scoring below validation BLEU / divisor [default: 4].
    #[arg(long, conflicts_with = "keep")]
    pub divisor: Option<f64>,
    /// Keep the best ceil(keep·n) pairs instead of using a ratio cutoff.
    #[arg(long)]
    pub keep: Option<f64>,
    /// Worker threads for per-pair scoring [default: available parallelism].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Pairs per translation batch (and per external process).
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    /// Seconds allowed per external translation batch.
    #[arg(long, default_value_t = 600)]
    pub timeout: u64,
    /// JSON report path [default: <out-prefix>.report.json].
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Include every pair's score in the report.
    #[arg(long)]
    pub per_pair: bool,
    /// Label for the "Division" column of the printed row.
    #[arg(long, default_value = "Full")]
    pub division: String,
    /// Writes <prefix>.src and <prefix>.tgt.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum BpeCommand {
    /// Learn merges from a text file (tokenized line by line).
    Learn {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 8000)]
        merges: usize,
        #[arg(long)]
        model: PathBuf,
    },
    /// Segment a text file with a learned model.
    Apply {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Join segmented subwords back into words.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: BitextInput,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Translator(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Data(_) => EXIT_DATA,
            Self::Translator(_) => EXIT_TRANSLATOR,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<TranslateError> for CliError {
    fn from(e: TranslateError) -> Self {
        match e {
            TranslateError::TranslationFailed { .. } => Self::Translator(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<SieveError> for CliError {
    fn from(e: SieveError) -> Self {
        match e {
            SieveError::Translate(t) => t.into(),
            SieveError::InvalidConfig(m) => Self::Usage(m),
            other => Self::Data(other.to_string()),
        }
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Split(a) => cmd_split(a, out),
        Command::Carve(a) => cmd_carve(a, out),
        Command::Filter(a) => cmd_filter(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Bpe(c) => cmd_bpe(c, out),
        Command::Stats(a) => cmd_stats(a, out),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn langs(l: &Langs) -> Result<(LanguageTag, LanguageTag), CliError> {
    let src = LanguageTag::new(&*l.src_lang).map_err(|e| CliError::Usage(e.to_string()))?;
    let tgt = LanguageTag::new(&*l.tgt_lang).map_err(|e| CliError::Usage(e.to_string()))?;
    if src == tgt {
        return Err(CliError::Usage(format!(
            "--src-lang and --tgt-lang are both {src}"
        )));
    }
    Ok((src, tgt))
}

fn load_pair(src: &Path, tgt: &Path, l: &Langs) -> Result<ParallelCorpus, CliError> {
    let (s, t) = langs(l)?;
    let corpus = corpus::load_parallel(open(src)?, open(tgt)?, s, t)?;
    Ok(corpus)
}

fn load_input(input: &BitextInput) -> Result<ParallelCorpus, CliError> {
    match (&input.tsv, &input.src, &input.tgt) {
        (Some(tsv), _, _) => {
            let (s, t) = langs(&input.langs)?;
            Ok(corpus::load_tsv(open(tsv)?, s, t)?)
        }
        (None, Some(src), Some(tgt)) => load_pair(src, tgt, &input.langs),
        _ => Err(CliError::Usage(
            "either --tsv or both --src and --tgt are required".into(),
        )),
    }
}

fn write_bitext(corpus: &ParallelCorpus, prefix: &Path, infix: &str) -> Result<(), CliError> {
    let src = with_suffix(prefix, &format!("{infix}.src"));
    let tgt = with_suffix(prefix, &format!("{infix}.tgt"));
    corpus::write_parallel(corpus, create(&src)?, create(&tgt)?)?;
    Ok(())
}

fn cmd_split(a: SplitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = SplitSpec::parse(&a.spec, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = load_input(&a.input)?;
    let subset = corpus::split(&corpus, spec)?;
    write_bitext(&subset, &a.out_prefix, "")?;
    writeln!(out, "{}", subset.len())?;
    Ok(())
}

fn cmd_carve(a: CarveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = load_input(&a.input)?;
    let (train, valid) = corpus::carve_validation(&corpus, a.size, a.seed)?;
    write_bitext(&train, &a.out_prefix, ".train")?;
    write_bitext(&valid, &a.out_prefix, ".valid")?;
    writeln!(out, "train {} valid {}", train.len(), valid.len())?;
    Ok(())
}

fn build_translator(
    spec: &str,
    train: &ParallelCorpus,
    timeout: Duration,
) -> Result<Box<dyn Translator>, CliError> {
    match spec {
        "identity" => Ok(Box::new(IdentityTranslator::default())),
        "lexicon" => {
            if train.is_empty() {
                // nothing to learn from and nothing to score
                return Ok(Box::new(LexiconTranslator::new(Default::default())));
            }
            Ok(Box::new(
                LexiconTranslator::train(train).map_err(|e| CliError::Data(e.to_string()))?,
            ))
        }
        _ => match spec.strip_prefix("extern:") {
            Some(cmd) if !cmd.trim().is_empty() => {
                Ok(Box::new(ExternalTranslator::new(cmd).with_timeout(timeout)))
            }
            _ => Err(CliError::Usage(format!(
                "unknown translator {spec:?}; expected identity, lexicon or extern:<command>"
            ))),
        },
    }
}

fn cmd_filter(a: FilterArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mode = match (a.divisor, a.keep) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--divisor and --keep are mutually exclusive".into(),
            ))
        }
        (_, Some(keep)) => ModeConfig::Percentile { keep },
        (divisor, None) => ModeConfig::Ratio {
            divisor: divisor.unwrap_or(sieve::DEFAULT_DIVISOR),
        },
    };
    let jobs = a.jobs.unwrap_or_else(default_jobs);
    if jobs == 0 || a.batch_size == 0 {
        return Err(CliError::Usage(
            "--jobs and --batch-size must be positive".into(),
        ));
    }
    let train = load_pair(&a.train_src, &a.train_tgt, &a.langs)?;
    let valid = load_pair(&a.valid_src, &a.valid_tgt, &a.langs)?;
    eprintln!(
        "loaded {} training and {} validation pairs",
        train.len(),
        valid.len()
    );

    let translator = build_translator(&a.translator, &train, Duration::from_secs(a.timeout))?;
    let config = SieveConfig {
        mode,
        emit_per_pair: a.per_pair,
        exec: Exec {
            jobs,
            batch_size: a.batch_size,
        },
    };
    let (filtered, report) = sieve::filter_corpus(&train, &valid, translator.as_ref(), &config)?;
    eprintln!(
        "validation BLEU {:.3}, cutoff {:.3}: kept {}, removed {}",
        report.threshold.validation_bleu,
        report.threshold.cutoff,
        report.pairs_kept,
        report.pairs_removed
    );

    write_bitext(&filtered, &a.out_prefix, "")?;
    let report_path = a
        .report
        .unwrap_or_else(|| with_suffix(&a.out_prefix, ".report.json"));
    let mut w = create(&report_path)?;
    w.write_all(sieve::emit_report(&report, &ReportFormat::Json).as_bytes())?;
    w.flush()?;
    out.write_all(
        sieve::emit_report(
            &report,
            &ReportFormat::Table {
                division: a.division,
            },
        )
        .as_bytes(),
    )?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvalSummary {
    sentences: usize,
    bleu: BleuReport,
    meteor: f64,
    ribes: f64,
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let langs = Langs {
        src_lang: "hyp".into(),
        tgt_lang: "ref".into(),
    };
    let corpus = load_pair(&a.hyp, &a.reference, &langs)?;
    if corpus.is_empty() {
        return Err(CliError::Data(
            "nothing to evaluate: input files are empty".into(),
        ));
    }
    let hyps: Vec<TokenSequence> = corpus.sources().map(textnorm::tokenize).collect();
    let refs: Vec<TokenSequence> = corpus.targets().map(textnorm::tokenize).collect();
    let bleu = metrics::corpus_bleu(&hyps, &refs).map_err(|e| CliError::Data(e.to_string()))?;
    let meteor: Vec<f64> = hyps
        .iter()
        .zip(&refs)
        .map(|(h, r)| metrics::meteor(h, r).score)
        .collect();
    let ribes: Vec<f64> = hyps
        .iter()
        .zip(&refs)
        .map(|(h, r)| metrics::ribes(h, r).score)
        .collect();
    let summary = EvalSummary {
        sentences: corpus.len(),
        meteor: metrics::mean_sentence_score(&meteor).map_err(|e| CliError::Data(e.to_string()))?,
        ribes: metrics::mean_sentence_score(&ribes).map_err(|e| CliError::Data(e.to_string()))?,
        bleu,
    };
    writeln!(
        out,
        "BLEU {:.2} METEOR {:.2} RIBES {:.2}",
        summary.bleu.score, summary.meteor, summary.ribes
    )?;
    writeln!(
        out,
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    )?;
    Ok(())
}

fn read_text_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let mut lines = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line =
            line.map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        lines.push(line);
    }
    Ok(lines)
}

fn cmd_bpe(c: BpeCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match c {
        BpeCommand::Learn {
            input,
            merges,
            model,
        } => {
            let lines: Vec<TokenSequence> = read_text_lines(&input)?
                .iter()
                .map(|l| textnorm::tokenize(l))
                .collect();
            let learned = textnorm::bpe_learn(&lines, merges);
            std::fs::write(&model, learned.to_text())
                .map_err(|e| CliError::Data(format!("{}: {e}", model.display())))?;
            writeln!(out, "{}", learned.merges().len())?;
        }
        BpeCommand::Apply {
            model,
            input,
            output,
        } => {
            let text = std::fs::read_to_string(&model)
                .map_err(|e| CliError::Data(format!("{}: {e}", model.display())))?;
            let model = BpeModel::from_text(&text).map_err(|e| match e {
                TextError::MalformedModel { line, reason } => {
                    CliError::Data(format!("{}: line {line}: {reason}", model.display()))
                }
                other => CliError::Data(other.to_string()),
            })?;
            let mut w = create(&output)?;
            for line in read_text_lines(&input)? {
                let seg = textnorm::bpe_apply(&model, &textnorm::tokenize(&line));
                writeln!(w, "{}", seg.join())?;
            }
            w.flush()?;
        }
        BpeCommand::Decode { input, output } => {
            let mut w = create(&output)?;
            for (i, line) in read_text_lines(&input)?.iter().enumerate() {
                let words =
                    textnorm::bpe_decode(&TokenSequence::from_whitespace(line)).map_err(|e| {
                        CliError::Data(format!("{}: line {}: {e}", input.display(), i + 1))
                    })?;
                writeln!(w, "{}", words.join())?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_stats(a: StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let corpus = load_input(&a.input)?;
    let s = corpus::stats(&corpus);
    if a.json {
        writeln!(
            out,
            "{}",
            serde_json::to_string(&s).expect("stats serialize")
        )?;
    } else {
        writeln!(out, "pairs {}", s.pair_count)?;
        writeln!(out, "source_tokens {}", s.source_token_count)?;
        writeln!(out, "target_tokens {}", s.target_token_count)?;
        writeln!(out, "empty_lines {}", s.empty_line_count)?;
    }
    Ok(())
}
