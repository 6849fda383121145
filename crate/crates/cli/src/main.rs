//! `clonejudge`: desk-scale clone validation without the service.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clonejudge_cli::*;
use clonejudge_core::classifier::{Hyperparams, ModelKind};
use clonejudge_core::pipeline::PipelineConfig;
use clonejudge_core::study::{write_outcomes, StudyConfig, DEFAULT_SAMPLE_TARGET};

#[derive(Parser)]
#[command(
    name = "clonejudge",
    version,
    about = "Validate clone-detector output against a Java corpus"
)]
struct Cli {
    /// Worker threads for per-pair resolution (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Logistic,
    Feedforward,
}

#[derive(Args)]
struct Thresholds {
    /// Minimum language tokens per method.
    #[arg(long, default_value_t = 50)]
    min_tokens: usize,
    /// Action Filter threshold gating the classifier.
    #[arg(long, default_value_t = 0.9)]
    theta_t3: f64,
    /// Classifier probability at or above which a pair is a clone.
    #[arg(long, default_value_t = 0.5)]
    cutoff: f64,
    /// Similarity below which seed Type III/IV labels are not trusted.
    #[arg(long, default_value_t = 0.7)]
    trust_floor: f64,
}

impl Thresholds {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            min_tokens: self.min_tokens,
            theta_t3: self.theta_t3,
            classifier_cutoff: self.cutoff,
            trust_similarity_floor: self.trust_floor,
        }
    }
}

#[derive(Args)]
struct Sources {
    /// Corpus directory or a saved index from `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    /// Knowledge-base file.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Classifier model file; when missing, Type III pairs go to manual.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Index every method in a corpus.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Where to write the index.
        #[arg(long, default_value = "clonejudge-index.json")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Resolve every uploaded pair and list the outcomes.
    Resolve {
        /// Detector output, eight-column CSV.
        pairs: PathBuf,
        #[command(flatten)]
        sources: Sources,
        #[command(flatten)]
        thresholds: Thresholds,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Write the listing here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sampled precision study with offline verdicts.
    Study {
        pairs: PathBuf,
        /// Human verdicts: the eight pair columns, is_clone, optional judge.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[command(flatten)]
        sources: Sources,
        #[command(flatten)]
        thresholds: Thresholds,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
        /// Pairs to sample when more than the statistical minimum.
        #[arg(long, default_value_t = DEFAULT_SAMPLE_TARGET)]
        sample_target: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Also write report.json, report.txt and outcomes.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Build a training set from several detectors' outputs.
    Curate {
        #[arg(long)]
        corpus: PathBuf,
        /// Detector output whose intersection with the others gives positives (repeat).
        #[arg(long = "tool")]
        tools: Vec<PathBuf>,
        /// Further outputs excluded from negatives (repeat).
        #[arg(long = "union")]
        union: Vec<PathBuf>,
        #[arg(long, default_value_t = 0.9)]
        theta_t3: f64,
        #[arg(long, default_value_t = 50)]
        min_tokens: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Train a classifier model.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "feedforward")]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Knowledge-base maintenance.
    Kb {
        #[command(subcommand)]
        action: KbAction,
    },
    /// Serve the judging API.
    Serve {
        #[command(flatten)]
        sources: Sources,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

#[derive(Subcommand)]
enum KbAction {
    /// Import seed labels, creating the knowledge base if needed.
    Import {
        #[arg(long)]
        kb: PathBuf,
        seed: PathBuf,
    },
    /// Print every final label as CSV.
    Export {
        #[arg(long)]
        kb: PathBuf,
    },
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable output")
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn warn(ws: &[String]) {
    for w in ws {
        eprintln!("warning: {w}");
    }
}

fn listing(
    outcomes: &[(
        clonejudge_core::key::PairKey,
        clonejudge_core::outcome::ResolutionOutcome,
    )],
) -> Vec<u8> {
    let mut buf = Vec::new();
    write_outcomes(&mut buf, outcomes).expect("writing to memory");
    buf
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let mut stdout = std::io::stdout().lock();
    let mut print = |s: &[u8]| {
        stdout
            .write_all(s)
            .map_err(|e| CliError::Internal(e.to_string()))
    };
    match cli.command {
        Command::Ingest {
            corpus,
            out,
            format,
        } => {
            let s = cmd_ingest(&corpus, &out)?;
            warn(&s.warnings);
            for d in &s.diagnostics {
                eprintln!("{}: {}", d.path, d.message);
            }
            match format {
                Format::Json => print(json(&s).as_bytes())?,
                Format::Table => print(
                    format!(
                        "{} files, {} methods, index written to {}\n",
                        s.files,
                        s.methods,
                        s.index_path.display()
                    )
                    .as_bytes(),
                )?,
            }
        }
        Command::Resolve {
            pairs,
            sources,
            thresholds,
            format,
            out,
        } => {
            let inputs = Inputs::load(
                &sources.corpus,
                sources.kb.as_deref(),
                sources.model.as_deref(),
            )?;
            let r = cmd_resolve(&pairs, &inputs, &thresholds.config())?;
            warn(&r.warnings);
            let s = &r.summary;
            eprintln!(
                "{} uploaded, {} below size filter, {} duplicates; {} resolved: {} type1, {} type2, {} type3, {} known true, {} known false, {} manual",
                s.uploaded,
                s.too_small,
                s.duplicates,
                s.resolved,
                s.auto_counts.type1,
                s.auto_counts.type2,
                s.auto_counts.type3,
                s.auto_counts.known_true,
                s.auto_counts.known_false,
                s.manual
            );
            let bytes = match format {
                Format::Json => json(&r).into_bytes(),
                Format::Table => listing(&r.outcomes),
            };
            match out {
                Some(p) => write_out(&p, &bytes)?,
                None => print(&bytes)?,
            }
        }
        Command::Study {
            pairs,
            labels,
            sources,
            thresholds,
            confidence,
            margin,
            sample_target,
            seed,
            format,
            out_dir,
        } => {
            let inputs = Inputs::load(
                &sources.corpus,
                sources.kb.as_deref(),
                sources.model.as_deref(),
            )?;
            let cfg = StudyConfig {
                pipeline: thresholds.config(),
                confidence,
                margin,
                sample_target,
                seed,
            };
            let s = cmd_study(&pairs, labels.as_deref(), &inputs, &cfg)?;
            warn(&s.warnings);
            if s.study.plan.target_n < s.study.plan.required_n.max(sample_target) {
                eprintln!(
                    "warning: only {} pairs survived filtering; the whole population is sampled",
                    s.study.filtered_pair_count
                );
            }
            if let Some(dir) = out_dir {
                fs::create_dir_all(&dir)
                    .map_err(|e| CliError::User(format!("{}: {e}", dir.display())))?;
                write_out(&dir.join("report.json"), json(&s.report).as_bytes())?;
                write_out(&dir.join("report.txt"), s.report.to_table().as_bytes())?;
                write_out(&dir.join("outcomes.csv"), &listing(&s.study.outcomes))?;
            }
            match format {
                Format::Json => print(json(&s.report).as_bytes())?,
                Format::Table => print(s.report.to_table().as_bytes())?,
            }
        }
        Command::Curate {
            corpus,
            tools,
            union,
            theta_t3,
            min_tokens,
            seed,
            out,
            format,
        } => {
            let c = cmd_curate(&CurateArgs {
                corpus: &corpus,
                tools: &tools,
                union: &union,
                theta: theta_t3,
                min_tokens,
                seed,
            })?;
            write_out(&out, &c.set.to_csv_bytes())?;
            match format {
                Format::Json => print(json(&c.stats).as_bytes())?,
                Format::Table => {
                    let st = &c.stats;
                    print(
                        format!(
                            "intersection {}\nremoved type1 {}\nremoved type2 {}\nbelow filter {}\npositive candidates {}\nnegative candidates {}\npositives {}\nnegatives {}\n",
                            st.intersection,
                            st.type1_removed,
                            st.type2_removed,
                            st.filtered_out,
                            st.positive_candidates,
                            st.negative_candidates,
                            st.positives,
                            st.negatives
                        )
                        .as_bytes(),
                    )?
                }
            }
        }
        Command::Train {
            data,
            out,
            kind,
            seed,
            epochs,
            hidden,
            format,
        } => {
            let defaults = Hyperparams::default();
            let hp = Hyperparams {
                kind: match kind {
                    Kind::Logistic => ModelKind::Logistic,
                    Kind::Feedforward => ModelKind::Feedforward,
                },
                seed,
                epochs: epochs.unwrap_or(defaults.epochs),
                hidden: hidden.unwrap_or(defaults.hidden),
                ..defaults
            };
            let m = cmd_train(&data, &out, &hp)?;
            match format {
                Format::Json => print(
                    json(
                        &serde_json::json!({ "digest": m.digest(), "held_out": m.header.held_out }),
                    )
                    .as_bytes(),
                )?,
                Format::Table => {
                    let h = &m.header.held_out;
                    let pct = |v: Option<f64>| {
                        v.map(|v| format!("{:.1}%", v * 100.0))
                            .unwrap_or_else(|| "-".into())
                    };
                    print(
                        format!(
                            "digest {}\nheld-out rows {}\nprecision {}\nrecall {}\n",
                            m.digest(),
                            h.rows,
                            pct(h.precision),
                            pct(h.recall)
                        )
                        .as_bytes(),
                    )?
                }
            }
        }
        Command::Kb { action } => match action {
            KbAction::Import { kb, seed } => {
                let s = cmd_kb_import(&kb, &seed)?;
                for (line, why) in &s.skipped {
                    eprintln!("line {line}: skipped: {why}");
                }
                print(
                    format!(
                        "{} labels imported, {} rows skipped\n",
                        s.imported,
                        s.skipped.len()
                    )
                    .as_bytes(),
                )?;
            }
            KbAction::Export { kb } => print(&cmd_kb_export(&kb)?)?,
        },
        Command::Serve { sources, bind } => {
            let kb = sources
                .kb
                .clone()
                .ok_or_else(|| CliError::User("serve needs --kb".into()))?;
            let rt =
                tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            rt.block_on(cmd_serve(
                &sources.corpus,
                &kb,
                sources.model.as_deref(),
                &bind,
                StudyConfig::default(),
            ))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
