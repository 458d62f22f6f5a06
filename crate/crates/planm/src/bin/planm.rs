use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use planm::bench::{check_horizon, horizon_cap, rows_to_csv, run_experiment, ExperimentConfig, VerifyVerdict};
use planm::generate::{generate, GeneratorConfig, GeneratorKind};
use planm::{optimal_schedule, parse_instance, parse_trace, run, serialize_instance, serialize_trace, verify};
use planm::{Algorithm, Instance, Schedule};

#[derive(Parser)]
#[command(name = "planm", version, about = "Online packet scheduling with deadlines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an algorithm on an instance and optionally write its trace.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "planm")]
        algorithm: Algorithm,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Replay a PlanM trace and check the potential-function accounting.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Schedule to compare against; the offline optimum if omitted.
        #[arg(long)]
        comparison: Option<PathBuf>,
        /// Per-event CSV report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute an optimal offline schedule.
    Opt {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Batch experiment with a CSV row per instance and algorithm.
    Bench {
        #[command(flatten)]
        gen: GenArgs,
        /// Repeat or comma-separate; defaults to both algorithms.
        #[arg(long, value_delimiter = ',')]
        algorithm: Vec<Algorithm>,
        #[arg(long, default_value_t = 100)]
        count: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replay the verifier on every PlanM row.
        #[arg(long)]
        verify: bool,
        /// Add a runtime column; the CSV is then no longer reproducible.
        #[arg(long)]
        timings: bool,
    },
    /// Write generated instances.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 1)]
        count: u32,
        /// Output file, or a directory when `--count` exceeds 1.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenArgs {
    /// Repeat or comma-separate for several kinds.
    #[arg(long, value_delimiter = ',', default_value = "uniform-random")]
    generator: Vec<GeneratorKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    steps: u32,
    /// Maximum `d − r`, the `s` of s-bounded instances.
    #[arg(long, default_value_t = 10)]
    span: u32,
    #[arg(long, default_value_t = 5)]
    max_per_step: u32,
    #[arg(long, default_value_t = 0)]
    jitter: u32,
}

impl GenArgs {
    fn configs(&self) -> Vec<GeneratorConfig> {
        self.generator
            .iter()
            .map(|&kind| GeneratorConfig {
                span: self.span,
                max_per_step: self.max_per_step,
                jitter: self.jitter,
                ..GeneratorConfig::new(kind, self.steps, self.seed)
            })
            .collect()
    }
}

/// Exit 1 is reserved for a failed check; everything else is exit 2.
enum Failure {
    Check(String),
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let instance = parse_instance(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    check_horizon(&instance, horizon_cap()?)?;
    Ok(instance)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { instance, algorithm, trace } => {
            let instance = load_instance(&instance)?;
            let (result, run_trace) = run(algorithm, &instance);
            if let Some(path) = trace {
                write(&path, &serialize_trace(&run_trace))?;
            }
            println!("gain0 = {}", result.gain0);
        }
        Command::Verify { instance, trace, comparison, out } => {
            let instance = load_instance(&instance)?;
            let run_trace = parse_trace(&read(&trace)?).map_err(|e| Failure::Usage(format!("{}: {e}", trace.display())))?;
            let comparison = match comparison {
                Some(path) => Schedule::parse(&read(&path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
                None => optimal_schedule(&instance),
            };
            let report = verify(&instance, &run_trace, &comparison)?;
            if let Some(path) = out {
                write(&path, &report.to_csv())?;
            }
            for v in &report.violations {
                eprintln!("{v}");
            }
            let s = &report.summary;
            println!(
                "events = {}, gain0 = {}, comparison = {}, violations = {}",
                s.events,
                s.alg_gain0,
                s.comparison_weight0,
                report.violations.len()
            );
            if !report.passed() {
                return Err(Failure::Check(format!("first violation at event {}", report.violations[0].event)));
            }
        }
        Command::Opt { instance, out } => {
            let instance = load_instance(&instance)?;
            let schedule = optimal_schedule(&instance);
            if let Some(path) = out {
                write(&path, &schedule.to_text())?;
            }
            println!("opt = {}", schedule.weight0);
        }
        Command::Bench { gen, algorithm, count, out, verify, timings } => {
            let algorithms = if algorithm.is_empty() { vec![Algorithm::PlanM, Algorithm::Greedy] } else { algorithm };
            let mut config = ExperimentConfig::new(gen.configs(), algorithms, count);
            config.verify = verify;
            config.horizon_cap = horizon_cap()?;
            let start = Instant::now();
            let rows = run_experiment(&config)?;
            emit(out.as_deref(), &rows_to_csv(&rows, timings))?;
            let failed = rows.iter().filter(|r| !r.bound_holds() || r.verified == VerifyVerdict::Failed).count();
            eprintln!("{} rows in {:.2?}, {failed} failing", rows.len(), start.elapsed());
            if failed > 0 {
                return Err(Failure::Check(format!("{failed} rows failed a check")));
            }
        }
        Command::Generate { gen, count, out } => {
            let cap = horizon_cap()?;
            let configs = gen.configs();
            let single = configs.len() == 1 && count == 1;
            if !single {
                if let Some(dir) = &out {
                    fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
                }
            }
            for base in &configs {
                for i in 0..count {
                    let cfg = GeneratorConfig { seed: base.seed.wrapping_add(i as u64), ..base.clone() };
                    let instance = generate(&cfg)?;
                    check_horizon(&instance, cap)?;
                    let text = serialize_instance(&instance);
                    match (&out, single) {
                        (Some(path), true) => write(path, &text)?,
                        (Some(dir), false) => write(&dir.join(format!("{}-{}.jsonl", cfg.kind, cfg.seed)), &text)?,
                        (None, _) => print!("{text}"),
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("planm: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("planm: {m}");
            ExitCode::from(2)
        }
    }
}
