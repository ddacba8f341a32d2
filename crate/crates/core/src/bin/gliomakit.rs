use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gliomakit::commands::{self, PreprocessInputs};
use gliomakit::curves::PhaseParams;
use gliomakit::metrics::LesionwiseParams;
use gliomakit::morphology::Connectivity;
use gliomakit::report::{run_evaluate, CaseSource, EvaluateOptions, ReportFormat};
use gliomakit::schedule::TrainingConfig;

#[derive(Parser)]
#[command(
    name = "gliomakit",
    version,
    about = "Glioma segmentation evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<_, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

fn parse_spacing(s: &str) -> Result<[f64; 3], String> {
    parse_list::<3>(s)
}

#[derive(Subcommand)]
enum Command {
    /// Score predicted label maps against ground truth and write a report.
    Evaluate {
        /// Directory of predictions (the extended-run model when --pred-b is given).
        #[arg(long, required_unless_present = "manifest")]
        pred: Option<PathBuf>,
        /// Baseline-model predictions; cases are fused before scoring.
        #[arg(long)]
        pred_b: Option<PathBuf>,
        #[arg(long, required_unless_present = "manifest")]
        gt: Option<PathBuf>,
        /// CSV `case_id,gt,pred[,pred_b]`, used instead of directory pairing.
        #[arg(long, conflicts_with_all = ["pred", "pred_b", "gt"])]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "0.5,1.0", value_delimiter = ',')]
        tolerances: Vec<f64>,
        #[arg(long, default_value_t = 26)]
        connectivity: u8,
        #[arg(long, default_value_t = 3)]
        dilation: usize,
        #[arg(long, default_value_t = 0)]
        min_lesion_size: usize,
        /// Report the standard deviation for every aggregate row.
        #[arg(long)]
        std_all_rows: bool,
        /// Output file; the report goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
    },
    /// Take ET and TC from model A and WT from model B.
    Fuse {
        #[arg(long)]
        model_a: PathBuf,
        #[arg(long)]
        model_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resample four channels to a common spacing and z-score them over the brain.
    Preprocess {
        /// T1, T1 post-contrast, T2 and FLAIR volumes, in that order.
        #[arg(long, num_args = 4, required = true)]
        channels: Vec<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, value_parser = parse_spacing)]
        spacing: [f64; 3],
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a NIfTI header as JSON.
    Info { path: PathBuf },
    /// Print the per-epoch learning rate as CSV.
    LrSchedule {
        #[arg(long, default_value_t = 200)]
        epochs: u32,
        #[arg(long, default_value_t = 0.01)]
        lr0: f64,
        #[arg(long, default_value_t = 0.9)]
        exponent: f64,
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect fit, plateau and grok epochs in an `epoch,train_loss,val_score` CSV.
    AnalyzeCurves {
        path: PathBuf,
        #[arg(long, default_value_t = 11)]
        window: usize,
        #[arg(long, default_value_t = 0.2)]
        fit_fraction: f64,
        #[arg(long, default_value_t = 0.05)]
        grok_delta: f64,
    },
}

fn emit(out: Option<&PathBuf>, text: &[u8]) -> gliomakit::Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text)?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> gliomakit::Result<bool> {
    match cli.command {
        Command::Evaluate {
            pred,
            pred_b,
            gt,
            manifest,
            tolerances,
            connectivity,
            dilation,
            min_lesion_size,
            std_all_rows,
            out,
            format,
        } => {
            let source = match manifest {
                Some(m) => CaseSource::Manifest(m),
                None => CaseSource::Directories {
                    pred: pred.expect("required by clap"),
                    pred_b,
                    gt: gt.expect("required by clap"),
                },
            };
            let options = EvaluateOptions {
                tolerances,
                lesionwise: LesionwiseParams {
                    connectivity: Connectivity::try_from(connectivity)?,
                    dilation_radius_vox: dilation,
                    min_lesion_size_vox: min_lesion_size,
                },
                std_all_rows,
            };
            let outcome = run_evaluate(&source, &options, out.as_deref(), format)?;
            if out.is_none() {
                emit(
                    None,
                    &gliomakit::report::emit_report(&outcome.report, format),
                )?;
            }
            for f in &outcome.failures {
                eprintln!("case {}: {}", f.case_id, f.reason);
            }
            Ok(outcome.succeeded())
        }
        Command::Fuse {
            model_a,
            model_b,
            out,
        } => {
            commands::run_fuse(&model_a, &model_b, &out)?;
            Ok(true)
        }
        Command::Preprocess {
            channels,
            labels,
            spacing,
            out,
        } => {
            let channels: [PathBuf; 4] = channels.try_into().expect("clap enforces four channels");
            let written = commands::run_preprocess(&PreprocessInputs {
                channels,
                labels,
                target_spacing: spacing,
                out_dir: out,
            })?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Info { path } => {
            print!("{}", commands::header_info(&path)?);
            Ok(true)
        }
        Command::LrSchedule {
            epochs,
            lr0,
            exponent,
            floor,
            out,
        } => {
            let cfg = TrainingConfig {
                lr0,
                poly_exponent: exponent,
                total_epochs: epochs,
                lr_floor: floor,
                ..TrainingConfig::baseline()
            };
            emit(out.as_ref(), commands::lr_schedule_csv(&cfg)?.as_bytes())?;
            Ok(true)
        }
        Command::AnalyzeCurves {
            path,
            window,
            fit_fraction,
            grok_delta,
        } => {
            let params = PhaseParams {
                window,
                fit_fraction,
                grok_delta,
            };
            print!("{}", commands::analyze_curves(&path, &params)?.1);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
