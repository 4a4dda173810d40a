use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eitmap::config::{load_config, to_json_pretty, PipelineConfig};
use eitmap::run::{self, load_suite};
use eitmap::{rules, RunError};
use eitmap_core::evaluation::RocSweep;
use eitmap_core::phantom::PhantomConfig;
use eitmap_core::segmentation::SegmentationConfig;

#[derive(Parser)]
#[command(name = "eitmap", version, about = "Fuzzy heart/lung mapping of gated EIT image sequences")]
struct Cli {
    /// Print an embedded default configuration and exit.
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "pipeline", value_name = "WHICH")]
    print_default_config: Option<DefaultConfig>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DefaultConfig {
    Pipeline,
    Phantom,
    Heart,
    Perfusion,
    Ventilation,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded synthetic acquisitions plus ground truth.
    Phantom {
        /// Phantom configuration (JSON); defaults apply to omitted fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Base seed; acquisition i uses seed + i.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = eitmap::config::DEFAULT_ACQUISITION_COUNT)]
        acquisitions: usize,
    },
    /// Average one sequence over its trigger train into a mean cycle.
    Gate {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        triggers: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Cycles per group (default 100 cardiac, 12 respiratory).
        #[arg(long)]
        group_size: Option<usize>,
        /// Resampled cycle length (default: median cycle length).
        #[arg(long)]
        length: Option<usize>,
    },
    /// Feature maps from a cardiac and a respiratory mean cycle.
    Features {
        #[arg(long)]
        cardiac: PathBuf,
        #[arg(long)]
        respiratory: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the heart, perfusion and ventilation models on feature maps.
    Infer {
        /// Directory written by `features`.
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        heart_rules: Option<PathBuf>,
        #[arg(long)]
        perfusion_rules: Option<PathBuf>,
        #[arg(long)]
        ventilation_rules: Option<PathBuf>,
    },
    /// Threshold segmentation; repeated maps are median-combined first.
    Segment {
        #[arg(long, required = true)]
        perfusion: Vec<PathBuf>,
        #[arg(long, required = true)]
        ventilation: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SegmentationConfig::default().perfusion_threshold)]
        perfusion_threshold: f64,
        #[arg(long, default_value_t = SegmentationConfig::default().ventilation_threshold)]
        ventilation_threshold: f64,
    },
    /// ROC sweep of a map against a reference image.
    Evaluate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        /// Reference binarisation threshold.
        #[arg(long, default_value_t = SegmentationConfig::default().reference_threshold)]
        threshold: f64,
        #[arg(long, default_value_t = RocSweep::default().start)]
        start: f64,
        #[arg(long, default_value_t = RocSweep::default().end)]
        end: f64,
        #[arg(long, default_value_t = RocSweep::default().step)]
        step: f64,
    },
    /// Full analysis driven by a pipeline configuration file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eitmap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: Cli) -> Result<(), RunError> {
    if let Some(which) = cli.print_default_config {
        print!("{}", default_config(which));
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(RunError::config("cli", "no subcommand given (see --help)"));
    };
    match command {
        Command::Phantom {
            config,
            out,
            seed,
            acquisitions,
        } => {
            let mut cfg = match config {
                Some(p) => read_json::<PhantomConfig>("phantom", &p)?,
                None => PhantomConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            run::run_phantom(&cfg, acquisitions, &out)?;
            eprintln!("wrote {acquisitions} acquisitions to {}", out.display());
        }
        Command::Gate {
            frames,
            triggers,
            out,
            group_size,
            length,
        } => {
            let kind = run::run_gate(&frames, &triggers, group_size, length, &out)?;
            eprintln!("wrote {}_mean.eitf to {}", kind.tag(), out.display());
        }
        Command::Features {
            cardiac,
            respiratory,
            out,
        } => {
            run::run_features(&cardiac, &respiratory, &out)?;
        }
        Command::Infer {
            features,
            out,
            heart_rules,
            perfusion_rules,
            ventilation_rules,
        } => {
            let (suite, _) = load_suite(
                heart_rules.as_deref(),
                perfusion_rules.as_deref(),
                ventilation_rules.as_deref(),
            )?;
            run::run_infer(&features, &suite, &out)?;
        }
        Command::Segment {
            perfusion,
            ventilation,
            out,
            perfusion_threshold,
            ventilation_threshold,
        } => {
            let cfg = SegmentationConfig {
                perfusion_threshold,
                ventilation_threshold,
                ..SegmentationConfig::default()
            };
            run::run_segment(&perfusion, &ventilation, &cfg, &out)?;
        }
        Command::Evaluate {
            map,
            reference,
            out,
            threshold,
            start,
            end,
            step,
        } => {
            let curve = run::run_evaluate(&map, &reference, threshold, &RocSweep { start, end, step }, &out)?;
            println!("auc={}", curve.auc);
        }
        Command::Pipeline { config, out } => {
            let loaded = load_config(&config)?;
            let out = out
                .or_else(|| loaded.config.output_dir.as_ref().map(|p| loaded.resolve(p)))
                .ok_or_else(|| RunError::config("config", "no output directory: pass --out or set output_dir").at(&config))?;
            let summary = run::run_pipeline(&loaded, &out)?;
            if let Some(auc) = summary.auc {
                println!("auc={auc}");
            }
        }
    }
    Ok(())
}

fn default_config(which: DefaultConfig) -> String {
    match which {
        DefaultConfig::Pipeline => to_json_pretty(&PipelineConfig::default()),
        DefaultConfig::Phantom => to_json_pretty(&PhantomConfig::default()),
        DefaultConfig::Heart => rules::DEFAULT_HEART.to_owned(),
        DefaultConfig::Perfusion => rules::DEFAULT_PERFUSION.to_owned(),
        DefaultConfig::Ventilation => rules::DEFAULT_VENTILATION.to_owned(),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(stage: &str, path: &Path) -> Result<T, RunError> {
    let bytes = fs::read(path).map_err(|e| RunError::config(stage, e).at(path))?;
    let de = &mut serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        RunError::config(stage, format!("at `{at}`: {}", e.into_inner())).at(path)
    })
}
