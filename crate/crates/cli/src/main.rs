//! `popsynth`: batch driver for the two-stage population synthesis.
//!
//! Exit status: 0 success, 1 configuration or data error, 2 evolution
//! failure, 3 output failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use popsynth_core::census_data::Entity;
use popsynth_core::nsga2::GenerationRecord;
use popsynth_core::pipeline::{self, Overrides, RunConfig};
use popsynth_core::reporting::StageSummary;
use popsynth_core::{Error, ErrorKind};

#[derive(Parser)]
#[command(
    name = "popsynth",
    version,
    about = "Evolve synthetic persons and households against census tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-check table totals and write validation_report.json.
    ValidateData(Common),
    /// Evolve the person roster.
    GeneratePersons(Common),
    /// Evolve households and fill them from the persons CSV in the output directory.
    GenerateHouseholds(Common),
    /// Full pipeline: validate, persons, households, allocation, manifest.
    Run(Common),
    /// Re-export selection and result files from the saved archives.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, required_unless_present = "manifest")]
    config: Option<PathBuf>,
    /// Take the configuration from a previous run's manifest instead.
    #[arg(long, conflicts_with = "config", requires = "data_dir")]
    manifest: Option<PathBuf>,
    /// Directory the manifest's input paths are relative to.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut config = match (&self.config, &self.manifest, &self.data_dir) {
            (Some(path), _, _) => RunConfig::load(path)?,
            (None, Some(manifest), Some(data_dir)) => RunConfig::from_manifest(manifest, data_dir)?,
            _ => {
                return Err(Error::Config(
                    "either --config or --manifest with --data-dir is required".into(),
                ))
            }
        };
        config.apply(&Overrides {
            seed: self.seed,
            generations: self.generations,
            population_size: self.population_size,
            workers: self.workers,
            out_dir: self.out_dir.clone(),
        })?;
        Ok(config)
    }
}

fn progress_line(entity: Entity, record: &GenerationRecord, seconds: f64) {
    let best: Vec<String> = record.best.iter().map(|b| format!("{b:.4}")).collect();
    println!(
        "{entity} generation {} best [{}] {seconds:.3}s",
        record.generation,
        best.join(", ")
    );
}

fn print_summary(summary: &StageSummary) {
    let values: Vec<String> = summary
        .objective_names
        .iter()
        .zip(&summary.raw)
        .map(|(n, v)| format!("{n}={v:.4}"))
        .collect();
    println!(
        "{}: selected archive member {} of {}: {}",
        summary.entity,
        summary.selected_member_id,
        summary.archive_size,
        values.join(" ")
    );
}

fn execute(command: &Command) -> Result<(), Error> {
    let common = match command {
        Command::ValidateData(c)
        | Command::GeneratePersons(c)
        | Command::GenerateHouseholds(c)
        | Command::Run(c)
        | Command::Report(c) => c,
    };
    let config = common.load()?;
    let out = config.output_dir();
    let started = Instant::now();
    let mut progress = progress_line;
    pipeline::with_workers(config.workers, || -> Result<(), Error> {
        match command {
            Command::ValidateData(_) => {
                let report = pipeline::validate_data(&config)?;
                for flag in report.flag_summary() {
                    println!("flagged: {flag}");
                }
                println!("wrote {}", out.join(pipeline::VALIDATION_REPORT).display());
            }
            Command::GeneratePersons(_) => {
                let stage = pipeline::generate_persons(&config, &mut progress)?;
                print_summary(&stage.summary);
            }
            Command::GenerateHouseholds(_) => {
                let (stage, allocation) = pipeline::generate_households(&config, &mut progress)?;
                print_summary(&stage.summary);
                println!(
                    "allocation: {} of {} households complete, {} persons unallocated",
                    allocation.complete_count(),
                    allocation.households.len(),
                    allocation.unallocated.len()
                );
            }
            Command::Run(_) => {
                let manifest = pipeline::run(&config, &mut progress)?;
                for stage in &manifest.stages {
                    print_summary(stage);
                }
                if let Some(a) = &manifest.allocation {
                    println!(
                        "allocation: {} of {} households complete ({:.1}%), {} persons unallocated",
                        a.complete,
                        a.households,
                        100.0 * a.complete_rate,
                        a.unallocated_persons
                    );
                }
                println!("wrote {}", out.join(pipeline::MANIFEST).display());
            }
            Command::Report(_) => {
                for summary in pipeline::report(&config)? {
                    print_summary(&summary);
                }
            }
        }
        Ok(())
    })??;
    println!("done in {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Data => 1,
        ErrorKind::Evolution => 2,
        ErrorKind::Output => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
