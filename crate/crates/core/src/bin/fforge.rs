use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fforge::data::{build_manifest, load_grayscale, save_grayscale, synthesize_pair, write_pair, ImagePair};
use fforge::pipeline::{
    evaluate_report, fuse_pair, grid_search_manifest, load_generator, train_to_dir, write_report, GridSpec,
    TrainConfig,
};
use fforge::{Error, Result};

#[derive(Parser)]
#[command(name = "fforge", version, about = "Visible/infrared image fusion: train, fuse, evaluate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train generator and discriminator on a dataset directory.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-search the content-loss weights.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        betas: Option<Vec<f64>>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Directory for grid.csv; defaults to the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fuse one visible/infrared pair with a trained checkpoint.
    Fuse {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        vis: PathBuf,
        #[arg(long)]
        ir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score fused images (`<fused>/<id>.png`) against a dataset.
    Eval {
        #[arg(long)]
        fused: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Writes `<report>.csv` and `<report>.md`.
        #[arg(long)]
        report: PathBuf,
    },
    /// Write seeded synthetic pairs as `<out>/synth<seed>/{vis,ir}.png`.
    Synth {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
        /// Number of consecutive seeds to generate.
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
}

fn required(flag: Option<PathBuf>, fallback: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| fallback.clone())
        .ok_or_else(|| Error::Usage(format!("--{name} not given and config has no '{name}' key")))
}

fn manifest_for(root: &Path) -> Result<fforge::data::DatasetManifest> {
    let m = build_manifest(root)?;
    for w in &m.warnings {
        eprintln!("warning: {w}");
    }
    Ok(m)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { config, data, out } => {
            let cfg = TrainConfig::load(&config)?;
            let data = required(data, &cfg.data, "data")?;
            let out = required(out, &cfg.out, "out")?;
            let t = train_to_dir(&cfg, &manifest_for(&data)?, &out)?;
            if let Some((step, r)) = t.log.rows.last() {
                println!("step {step}: content {:.6}, disc {:.6}", r.content, r.disc);
            }
            println!("checkpoint: {}", out.join("final.ffc").display());
        }
        Command::Grid {
            config,
            alphas,
            betas,
            data,
            out,
        } => {
            let cfg = TrainConfig::load(&config)?;
            let defaults = GridSpec::default();
            let grid = GridSpec {
                alphas: alphas.unwrap_or(defaults.alphas),
                betas: betas.unwrap_or(defaults.betas),
                ..defaults
            };
            let data = required(data, &cfg.data, "data")?;
            let result = grid_search_manifest(&grid, &cfg, &manifest_for(&data)?)?;
            let csv = result.to_csv();
            print!("{csv}");
            if let Some(out) = out.or(cfg.out.clone()) {
                std::fs::create_dir_all(&out)?;
                std::fs::write(out.join("grid.csv"), &csv)?;
            }
            let best = result.best();
            println!("best: alpha = {}, beta = {}", best.alpha, best.beta);
        }
        Command::Fuse {
            checkpoint,
            vis,
            ir,
            out,
        } => {
            let (_, mut gen) = load_generator(&checkpoint)?;
            let id = vis.file_stem().map_or("pair".into(), |s| s.to_string_lossy().into_owned());
            let pair = ImagePair::new(id, load_grayscale(&vis)?, load_grayscale(&ir)?)?;
            save_grayscale(&fuse_pair(&mut gen, &pair)?, &out)?;
        }
        Command::Eval { fused, data, report } => {
            let outcome = evaluate_report(&fused, &manifest_for(&data)?)?;
            let (csv, md) = write_report(&outcome.report, &report)?;
            print!("{}", outcome.report.to_markdown());
            println!("wrote {} and {}", csv.display(), md.display());
            if !outcome.missing.is_empty() {
                for id in &outcome.missing {
                    eprintln!("missing fused image for {id}");
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Synth { seed, size, out, count } => {
            for s in seed..seed + count {
                let pair = synthesize_pair(s, size)?;
                write_pair(&out, &pair)?;
                println!("{}", out.join(&pair.id).display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
