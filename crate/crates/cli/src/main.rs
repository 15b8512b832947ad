use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rc_eq::esn::WeightFile;
use rc_eq_cli::config::ExperimentConfig;
use rc_eq_cli::manifest::RunManifest;
use rc_eq_cli::{csv, pipeline, plot, write_file, CliError};

#[derive(Parser)]
#[command(name = "rc-eq", version, about = "Reservoir-computing OFDM equalization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive optimum reservoir weights from channel statistics.
    DeriveWeights(Common),
    /// Run a Monte-Carlo SER sweep over all equalizers.
    RunSer {
        #[command(flatten)]
        common: Common,
        /// Optimum-init weight file; derived in-process when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Eigenvalue spectrum and eps-rank of the channel-inverse covariance.
    VerifyRank(Common),
    /// Render SER CSV files as an SVG plot.
    Plot {
        /// Result CSV files.
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Plot title.
        #[arg(long, default_value = "SER vs Eb/N0")]
        title: String,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed (overrides sweep.seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Configuration override `section.key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut overrides = self.set.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("sweep.seed={seed}"));
        }
        if let Some(out) = &self.out {
            overrides.push(format!("output.dir={}", toml::Value::String(out.display().to_string())));
        }
        ExperimentConfig::load(self.config.as_deref(), &overrides)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn emit(dir: &Path, name: &str, contents: &str, manifest: &mut RunManifest) -> Result<(), CliError> {
    let path = dir.join(name);
    write_file(&path, contents.as_bytes())?;
    manifest.outputs.push(path.display().to_string());
    Ok(())
}

fn finish(dir: &Path, mut manifest: RunManifest) -> Result<(), CliError> {
    let name = format!("{}.manifest.json", manifest.command);
    manifest.outputs.push(dir.join(&name).display().to_string());
    write_file(&dir.join(&name), manifest.to_json().as_bytes())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::DeriveWeights(common) => {
            let cfg = common.load()?;
            let dir = cfg.output.dir.clone();
            let mut out = pipeline::derive_weights(&cfg)?;
            let json = out.weights.to_json().map_err(|e| CliError::Config(e.to_string()))?;
            let table = out.fit_table_csv();
            print!("{table}");
            println!("n_nodes = {}", out.weights.n_nodes);
            let manifest = &mut out.manifest;
            emit(&dir, "weights.json", &json, manifest)?;
            emit(&dir, "fit_errors.csv", &table, manifest)?;
            finish(&dir, out.manifest)
        }
        Command::RunSer { common, weights, workers } => {
            let cfg = common.load()?;
            let dir = cfg.output.dir.clone();
            let weights = match weights {
                Some(path) => Some(
                    WeightFile::from_json(&read(&path)?)
                        .map_err(|e| CliError::Config(format!("weight file {}: {e}", path.display())))?,
                ),
                None => None,
            };
            let mut run = pipeline::run_ser(&cfg, weights.as_ref(), workers)?;
            let text = csv::to_csv(&run.rows);
            emit(&dir, "ser.csv", &text, &mut run.manifest)?;
            if let Some(derived) = &run.derived {
                let json = derived.weights.to_json().map_err(|e| CliError::Config(e.to_string()))?;
                emit(&dir, "weights.json", &json, &mut run.manifest)?;
            }
            if cfg.output.plot {
                let svg = plot::render_svg(&run.rows, "SER vs Eb/N0")?;
                emit(&dir, "ser.svg", &svg, &mut run.manifest)?;
            }
            for p in csv::aggregate(&run.rows) {
                println!("{:<12} {:>6} dB  SER {}", p.method.label(), csv::format_number(p.ebn0_db), csv::format_number(p.ser));
            }
            finish(&dir, run.manifest)
        }
        Command::VerifyRank(common) => {
            let cfg = common.load()?;
            let dir = cfg.output.dir.clone();
            let (report, mut manifest) = pipeline::verify_rank(&cfg)?;
            print!("{}", report.summary());
            emit(&dir, "spectrum.csv", &report.spectrum_csv(), &mut manifest)?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
            emit(&dir, "rank_report.json", &json, &mut manifest)?;
            finish(&dir, manifest)
        }
        Command::Plot { csv: paths, out, title } => {
            let mut rows = Vec::new();
            for p in &paths {
                rows.extend(csv::parse_csv(&read(p)?, &p.display().to_string())?);
            }
            let svg = plot::render_svg(&rows, &title)?;
            write_file(&out.join("plot.svg"), svg.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RC_EQ_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
