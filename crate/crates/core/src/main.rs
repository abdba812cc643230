use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use warpforge::pipeline::{self, MaskMode};
use warpforge::ErrorClass;

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_USAGE: u8 = 4;

/// Training-data tooling for inpainting-driven 4D video creation.
#[derive(Parser)]
#[command(name = "warpforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a bundle along a camera trajectory.
    Render {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, default_value_t = 1)]
        splat: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Double reprojection: corrupted video plus inpainting mask.
    Pair {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive a mask video (or a random composite sample) from a pair.
    Masks {
        #[arg(long)]
        pair: PathBuf,
        /// pointcloud, edit, union or sample
        #[arg(long)]
        mode: MaskMode,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write an angle-progressive stage plan.
    Plan {
        #[arg(long, default_value_t = 25.0)]
        theta_min: f64,
        #[arg(long, default_value_t = 10.0)]
        delta: f64,
        #[arg(long, default_value_t = 45.0)]
        theta_target: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit one stage's dataset into OUT/stage_<j>.
    Stage {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        stage: usize,
        /// Input video; only read for stage 0.
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        k_traj: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Record generated videos for a trained stage.
    Ingest {
        #[arg(long)]
        state: PathBuf,
        /// A bundle directory or a directory of bundles.
        #[arg(long)]
        videos: PathBuf,
        /// Adapter reference; marks a DATASET_EMITTED stage as trained first.
        #[arg(long)]
        adapter: Option<String>,
    },
    /// Pack top-k context frames ahead of a hole video.
    Pack {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        hole: PathBuf,
        #[arg(long, default_value_t = warpforge::packing::DEFAULT_K)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fully load an artifact and report what it is.
    Validate {
        #[arg(long)]
        path: PathBuf,
    },
}

fn run(command: Command) -> warpforge::Result<String> {
    Ok(match command {
        Command::Render {
            bundle,
            traj,
            splat,
            out,
        } => {
            let m = pipeline::render(&bundle, &traj, splat, &out)?;
            format!("wrote {}", m.display())
        }
        Command::Pair { bundle, traj, out } => {
            let m = pipeline::pair(&bundle, &traj, &out)?;
            format!("wrote {}", m.display())
        }
        Command::Masks {
            pair,
            mode,
            seed,
            out,
        } => {
            let m = pipeline::masks(&pair, mode, seed, &out)?;
            format!("wrote {}", m.display())
        }
        Command::Plan {
            theta_min,
            delta,
            theta_target,
            out,
        } => {
            let plan = pipeline::plan(theta_min, delta, theta_target, &out)?;
            let angles: Vec<String> = plan
                .stages
                .iter()
                .map(|s| format!("{}", s.max_angle_deg))
                .collect();
            format!(
                "wrote {} (stages at {} deg)",
                out.display(),
                angles.join(", ")
            )
        }
        Command::Stage {
            plan,
            stage,
            bundle,
            k_traj,
            seed,
            out,
        } => {
            let (manifest, _) =
                pipeline::stage(&plan, stage, bundle.as_deref(), k_traj, seed, &out)?;
            format!(
                "stage {stage}: {} samples in {}",
                manifest.bundles.len(),
                pipeline::stage_dir(&out, stage).display()
            )
        }
        Command::Ingest {
            state,
            videos,
            adapter,
        } => {
            let s = pipeline::ingest(&state, &videos, adapter.as_deref())?;
            format!(
                "stage {} {:?} with {} videos",
                s.stage,
                s.status,
                s.generated.len()
            )
        }
        Command::Pack {
            generated,
            mask,
            hole,
            k,
            out,
        } => {
            let m = pipeline::pack(&generated, &mask, &hole, k, &out)?;
            format!("wrote {}", m.display())
        }
        Command::Validate { path } => pipeline::validate(&path)?,
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Validation => ExitCode::from(EXIT_VALIDATION),
                ErrorClass::Io => ExitCode::from(EXIT_IO),
            }
        }
    }
}
