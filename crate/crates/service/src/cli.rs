//! The `cep` operator command line.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 store error. Failures print one JSON object on stderr:
//! `{"reason": <code>, "message": <text>}`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cep_core::bitext::{export_pairs, read_bitext, read_lines, SplitRatios, StatusFilter};
use cep_core::bleu::{corpus_bleu, BleuConfig, CaseMode, Smoothing};
use cep_core::engine::{Command, DocumentState, Outcome};
use cep_core::text::{normalize_text, tokenize};
use cep_core::{DocId, LangTag, Timestamp};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::archive;
use crate::config::{Config, ConfigError, CONFIG_ENV};
use crate::http::{self, AppState};
use crate::platform::{Platform, ServiceError};
use crate::store::StoreError;
use crate::translator::ExternalTranslator;

#[derive(Debug, Parser)]
#[command(name = "cep", version, about = "Parallel-corpus platform: ingest, align, export, score, inspect, serve")]
struct Cli {
    /// Config file (TOML).
    #[arg(long, env = CONFIG_ENV, global = true)]
    config: Option<PathBuf>,
    /// Store directory; overrides the config file.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Print reports as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IngestFormat {
    /// Two line-aligned files, stored directly as pending pairs.
    Bitext,
    /// Two whole documents, staged for `align`.
    Docpair,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Load parallel text into the store.
    Ingest {
        src: PathBuf,
        tgt: PathBuf,
        #[arg(long, value_enum, default_value = "bitext")]
        format: IngestFormat,
        /// Language of SRC (en or om); TGT is the other one.
        #[arg(long, default_value = "en")]
        src_lang: String,
        /// JSON metadata stored with a staged document pair.
        #[arg(long)]
        meta: Option<String>,
    },
    /// Sentence-align a staged document pair (or all of them).
    Align {
        #[arg(required_unless_present = "all", conflicts_with = "all")]
        id: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Write train/dev/test bitext files and a manifest.
    Export {
        /// Directory for the plain files.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also (or instead) write a tar archive here.
        #[arg(long)]
        archive: Option<PathBuf>,
        /// verified, verified_and_pending or all.
        #[arg(long)]
        status: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// train,dev,test proportions, e.g. 0.8,0.1,0.1
        #[arg(long)]
        ratios: Option<String>,
    },
    /// Score a candidate file against one or more reference files.
    Bleu {
        candidate: PathBuf,
        #[arg(required = true)]
        references: Vec<PathBuf>,
        #[arg(long)]
        max_n: Option<usize>,
        #[arg(long)]
        lowercase: bool,
        /// Add-epsilon smoothing for zero counts.
        #[arg(long)]
        smooth: Option<f64>,
        /// Normalize and tokenize lines instead of splitting on spaces.
        #[arg(long)]
        tokenize: bool,
    },
    /// Corpus and contributor statistics.
    Stats,
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data { code: String, message: String },
    Store(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data { .. } => 3,
            CliError::Store(_) => 4,
        }
    }

    fn line(&self) -> String {
        let (code, message) = match self {
            CliError::Usage(m) => ("usage", m.as_str()),
            CliError::Data { code, message } => (code.as_str(), message.as_str()),
            CliError::Store(m) => ("store_error", m.as_str()),
        };
        json!({ "reason": code, "message": message }).to_string()
    }

    fn data(code: &str, message: impl Into<String>) -> CliError {
        CliError::Data {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl From<cep_core::Error> for CliError {
    fn from(e: cep_core::Error) -> CliError {
        CliError::data(e.reason(), e.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> CliError {
        CliError::Store(e.to_string())
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> CliError {
        match e {
            ServiceError::Engine(e) => e.into(),
            ServiceError::Store(e) => e.into(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(out, "{}", e.render());
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            let _ = writeln!(err, "{}", CliError::Usage(first.to_string()).line());
            return 2;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.line());
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut config = Config::load(cli.config.as_deref(), |k| std::env::var(k).ok())?;
    if let Some(store) = &cli.store {
        config.store = store.clone();
    }
    Ok(config)
}

fn open_platform(config: &Config) -> Result<Platform, CliError> {
    let (platform, recovery) = Platform::open(&config.store, config.policy, config.snapshot_every)?;
    if let Some(offset) = recovery.truncated_at {
        tracing::warn!(last_seq = recovery.last_seq, offset, "recovered store after a damaged tail");
    }
    Ok(platform)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data("unreadable_file", format!("{}: {e}", path.display())))?;
    String::from_utf8(bytes).map_err(|_| CliError::data("invalid_utf8", format!("{} is not UTF-8", path.display())))
}

fn emit<T: Serialize>(out: &mut dyn Write, json: bool, report: &T, human: impl FnOnce() -> String) -> Result<(), CliError> {
    let text = if json {
        serde_json::to_string(report).expect("reports serialize")
    } else {
        human()
    };
    writeln!(out, "{text}").map_err(|e| CliError::data("write_failed", e.to_string()))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(&cli)?;
    let json = cli.json;
    match cli.command {
        Cmd::Ingest { src, tgt, format, src_lang, meta } => {
            let src_lang: LangTag = src_lang.parse()?;
            let src_text = read_file(&src)?;
            let tgt_text = read_file(&tgt)?;
            match format {
                IngestFormat::Bitext => {
                    let (src_lines, tgt_lines) = read_bitext(&src_text, &tgt_text)?;
                    let lines = src_lines.len();
                    let platform = open_platform(&config)?;
                    let command = Command::ImportBitext {
                        src_lang,
                        src_lines,
                        tgt_lines,
                        rules: config.filter,
                        at: Timestamp::now(),
                    };
                    let Outcome::Imported(report) = platform.execute(command)? else { unreachable!() };
                    let value = json!({
                        "lines": lines,
                        "added": report.added,
                        "duplicates": report.duplicates,
                        "dropped": report.dropped,
                    });
                    emit(out, json, &value, || {
                        let mut s = format!("lines {lines}, added {}, duplicates {}", report.added, report.duplicates);
                        for (reason, n) in &report.dropped {
                            s.push_str(&format!(", dropped {} {n}", serde_json::to_value(reason).unwrap().as_str().unwrap()));
                        }
                        s
                    })
                }
                IngestFormat::Docpair => {
                    let meta: Value = match meta {
                        Some(m) => serde_json::from_str(&m).map_err(|e| CliError::Usage(format!("--meta is not JSON: {e}")))?,
                        None => json!({ "src": src.display().to_string(), "tgt": tgt.display().to_string() }),
                    };
                    let platform = open_platform(&config)?;
                    let command = Command::StageDocument { src_lang, src_text, tgt_text, meta, at: Timestamp::now() };
                    let Outcome::Staged(id) = platform.execute(command)? else { unreachable!() };
                    emit(out, json, &json!({ "document": id, "state": "staged" }), || format!("staged {id}"))
                }
            }
        }
        Cmd::Align { id, all } => {
            let platform = open_platform(&config)?;
            let ids: Vec<DocId> = if all {
                platform
                    .read()
                    .engine
                    .documents()
                    .filter(|d| d.state == DocumentState::Staged)
                    .map(|d| d.id.clone())
                    .collect()
            } else {
                vec![DocId(id.expect("clap requires an id without --all"))]
            };
            let mut reports = Vec::new();
            for document in ids {
                let command = Command::AlignDocument {
                    document,
                    params: config.alignment,
                    rules: config.filter,
                    at: Timestamp::now(),
                };
                let Outcome::Aligned(report) = platform.execute(command)? else { unreachable!() };
                reports.push(report);
            }
            let value: Value = if all { json!(reports) } else { json!(reports[0]) };
            emit(out, json, &value, || {
                reports
                    .iter()
                    .map(|r| {
                        format!(
                            "{}: {} x {} sentences, {} links, added {}, duplicates {}, dropped {}",
                            r.document,
                            r.src_sentences,
                            r.tgt_sentences,
                            r.links,
                            r.added,
                            r.duplicates,
                            r.emitted.total_dropped()
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            })
        }
        Cmd::Export { out: dir, archive: tar_path, status, seed, ratios } => {
            let filter: StatusFilter = match status {
                Some(s) => s.parse()?,
                None => config.export.status,
            };
            let ratios = match ratios {
                Some(r) => parse_ratios(&r)?,
                None => config.export.ratios,
            };
            let seed = seed.unwrap_or(config.export.seed);
            let platform = open_platform(&config)?;
            let bundle = export_pairs(platform.read().engine.pairs(), filter, seed, ratios)?;
            let dir = match (&dir, &tar_path) {
                (None, None) => Some(PathBuf::from("export")),
                _ => dir,
            };
            if let Some(dir) = &dir {
                archive::write_dir(&bundle, dir).map_err(|e| CliError::data("write_failed", format!("{}: {e}", dir.display())))?;
            }
            if let Some(path) = &tar_path {
                std::fs::write(path, archive::to_tar(&bundle)).map_err(|e| CliError::data("write_failed", format!("{}: {e}", path.display())))?;
            }
            emit(out, json, &bundle.manifest, || {
                let m = &bundle.manifest;
                format!(
                    "exported {} pairs ({}): train {}, dev {}, test {}; digest {}",
                    m.total, m.status_filter, m.counts["train"], m.counts["dev"], m.counts["test"], m.digest
                )
            })
        }
        Cmd::Bleu { candidate, references, max_n, lowercase, smooth, tokenize: tok } => {
            let mut bleu = config.bleu.clone();
            if let Some(n) = max_n {
                bleu = BleuConfig { case_mode: bleu.case_mode, smoothing: bleu.smoothing, ..BleuConfig::uniform(n)? };
            }
            if lowercase {
                bleu = bleu.with_case_mode(CaseMode::Lowercased);
            }
            if let Some(eps) = smooth {
                bleu = bleu.with_smoothing(Smoothing::AddEpsilon(eps));
            }
            let split = |line: &str| -> Vec<String> {
                if tok {
                    tokenize(&normalize_text(line, LangTag::En), LangTag::En)
                } else {
                    line.split_whitespace().map(String::from).collect()
                }
            };
            let candidates: Vec<Vec<String>> = read_lines(&read_file(&candidate)?).iter().map(|l| split(l)).collect();
            let mut reference_sets: Vec<Vec<Vec<String>>> = vec![Vec::new(); candidates.len()];
            for path in &references {
                let lines = read_lines(&read_file(path)?);
                if lines.len() != candidates.len() {
                    return Err(CliError::data(
                        "line_count_mismatch",
                        format!("{} has {} lines, the candidate file has {}", path.display(), lines.len(), candidates.len()),
                    ));
                }
                for (set, line) in reference_sets.iter_mut().zip(&lines) {
                    set.push(split(line));
                }
            }
            let report = corpus_bleu(&candidates, &reference_sets, &bleu)?;
            emit(out, json, &report, || {
                let precisions: Vec<String> = report.precisions.iter().map(|p| format!("{:.4}", p.value)).collect();
                format!(
                    "BLEU = {:.6} (precisions {}; BP {:.6}; candidate {} / reference {} tokens; {} segments)",
                    report.score,
                    precisions.join("/"),
                    report.brevity_penalty,
                    report.candidate_len,
                    report.reference_len,
                    report.segments
                )
            })
        }
        Cmd::Stats => {
            let platform = open_platform(&config)?;
            let stats = platform.read().engine.stats();
            emit(out, json, &stats, || {
                let tally = |v: Value| -> String {
                    let map = v.as_object().cloned().unwrap_or_default();
                    map.iter().map(|(k, n)| format!("{k} {n}")).collect::<Vec<_>>().join(", ")
                };
                format!(
                    "pairs {} ({}; {})\ntokens en {} om {}\ncandidates {}, verifications {}\ncontributors {}, points {}\nstaged documents {}",
                    stats.pairs,
                    tally(json!(stats.by_status)),
                    tally(json!(stats.by_origin)),
                    stats.tokens_en,
                    stats.tokens_om,
                    stats.candidates,
                    stats.verifications,
                    stats.contributors,
                    stats.total_points,
                    stats.staged_documents
                )
            })
        }
        Cmd::Serve { listen } => {
            let mut config = config;
            if let Some(listen) = listen {
                config.listen = listen;
            }
            let platform = open_platform(&config)?;
            let external = ExternalTranslator::new(&config.translator);
            let state = Arc::new(AppState { platform, external, config });
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Store(e.to_string()))?;
            runtime
                .block_on(http::serve(state.clone()))
                .map_err(|e| CliError::Usage(format!("cannot serve on {}: {e}", state.config.listen)))?;
            state.platform.snapshot()?;
            Ok(())
        }
    }
}

fn parse_ratios(text: &str) -> Result<SplitRatios, CliError> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--ratios expects three numbers, got {text:?}")))?;
    let [train, dev, test] = parts[..] else {
        return Err(CliError::Usage(format!("--ratios expects three numbers, got {text:?}")));
    };
    Ok(SplitRatios::new(train, dev, test)?)
}
