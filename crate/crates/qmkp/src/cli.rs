//! Command-line interface: instance generation, single solver runs, the
//! experiment harness, result summaries and the exhaustive oracle.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::Result;
use crate::harness::{
    attach_significance, format_records_csv, parse_records_csv, read_experiment_config,
    run_algorithm, run_experiment, summarize, verify_feasible, Algorithm, GroupField,
    SolverSettings, SummaryRow,
};
use crate::instance::{generate_instance, read_instance, write_instance, Correlation, Instance};
use crate::oracle::exhaustive_best;
use crate::profit::{ChebFactor, DispersionModel, TaskFitnessMode};

#[derive(Parser)]
#[command(
    name = "qmkp",
    about = "Chance-constrained quadratic multiple knapsack solvers and experiment harness",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance file.
    Generate {
        /// Item count.
        #[arg(long)]
        n: usize,
        /// Knapsack count.
        #[arg(long)]
        m: usize,
        /// Profit-weight correlation.
        #[arg(long)]
        correlation: Correlation,
        /// Fraction of item pairs with a positive pair profit, in (0, 1].
        #[arg(long, default_value_t = 0.25)]
        density: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one solver on an instance and print the best solution found.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        /// Override the knapsack count (capacities are re-derived).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 25.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long, default_value_t = 20)]
        mu: usize,
        #[arg(long, default_value_t = 10)]
        lambda: usize,
        #[arg(long, default_value_t = 5_000_000)]
        max_evals: u64,
        /// Wall-time cutoff in seconds (off by default).
        #[arg(long)]
        max_seconds: Option<u64>,
        /// Evaluations per local/global phase in the hybrid algorithms.
        #[arg(long, default_value_t = 500)]
        phase_evals: u64,
        /// Knowledge-transfer probability in the local optimiser.
        #[arg(long, default_value_t = 0.1)]
        pr_kt: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "eq3")]
        cheb_factor: ChebFactor,
        #[arg(long, default_value = "uniform")]
        dispersion_model: DispersionModel,
        /// Task fitness used inside the local optimiser.
        #[arg(long, default_value = "expected")]
        local_fitness: TaskFitnessMode,
    },
    /// Run the cross-product of a plain-text experiment config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Worker count (0 = all CPUs).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Summarise a results CSV with rank-based significance marks.
    Stats {
        /// Input CSV produced by `experiment`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated group keys.
        #[arg(long, default_value = "instance,m,delta,alpha,algorithm")]
        group_by: String,
        /// Confidence level for the pairwise tests.
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Exhaustively solve a tiny instance.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        /// Override the knapsack count (capacities are re-derived).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 25.0)]
        delta: f64,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
    },
}

fn load_instance(path: &PathBuf, m_override: Option<usize>) -> Result<Instance> {
    let instance = read_instance(path)?;
    match m_override {
        Some(m) => instance.with_knapsacks(m),
        None => Ok(instance),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            n,
            m,
            correlation,
            density,
            seed,
            out,
        } => {
            let instance = generate_instance(n, m, correlation, density, seed)?;
            write_instance(&instance, &out)?;
            eprintln!(
                "wrote {} (label {}, n={}, m={}, {} pairs)",
                out.display(),
                instance.label(),
                instance.item_count(),
                instance.knapsack_count(),
                instance.pair_count()
            );
        }
        Command::Solve {
            instance,
            algorithm,
            m,
            delta,
            alpha,
            mu,
            lambda,
            max_evals,
            max_seconds,
            phase_evals,
            pr_kt,
            seed,
            cheb_factor,
            dispersion_model,
            local_fitness,
        } => {
            let instance = load_instance(&instance, m)?;
            let settings = SolverSettings {
                mu,
                lambda,
                phase_evals,
                pr_kt,
                max_evals,
                max_seconds,
                cheb_factor,
                dispersion_model,
                local_fitness,
            };
            let chance = settings.chance_params(delta, alpha)?;
            let outcome = run_algorithm(&instance, &chance, algorithm, &settings, seed)?;
            let feasible = outcome.best.fitness.feasible
                && verify_feasible(&instance, &outcome.best.assignment);
            println!("best_fitness: {:.6}", outcome.best.fitness.value);
            println!("feasible: {feasible}");
            println!("solution: {}", outcome.best.assignment.to_text());
            eprintln!("evaluations: {}", outcome.evaluations);
        }
        Command::Experiment { config, out, jobs } => {
            let config = read_experiment_config(&config)?;
            let records = run_experiment(&config, jobs)?;
            std::fs::write(&out, format_records_csv(&records, config.base_seed))?;
            eprintln!("wrote {} records to {}", records.len(), out.display());
        }
        Command::Stats {
            input,
            group_by,
            confidence,
        } => {
            let records = parse_records_csv(&std::fs::read_to_string(&input)?)?;
            let keys: Vec<GroupField> = group_by
                .split(',')
                .map(|k| k.trim().parse())
                .collect::<Result<_>>()?;
            let mut rows = summarize(&records, &keys)?;
            let legend = attach_significance(&mut rows, &keys, confidence)?;
            print_summary_table(&keys, &rows, &legend);
        }
        Command::Oracle {
            instance,
            m,
            delta,
            alpha,
        } => {
            let instance = load_instance(&instance, m)?;
            let chance = crate::profit::ChanceParams::new(delta, alpha)?;
            let result = exhaustive_best(&instance, &chance)?;
            println!("best_value: {:.6}", result.best_value);
            println!("best_assignment: {}", result.best_assignment.to_text());
            println!("enumerated: {}", result.enumerated);
        }
    }
    Ok(())
}

fn print_summary_table(keys: &[GroupField], rows: &[SummaryRow], legend: &[String]) {
    if !legend.is_empty() {
        let numbered: Vec<String> = legend
            .iter()
            .enumerate()
            .map(|(i, name)| format!("{}={}", i + 1, name))
            .collect();
        println!("# algorithms: {}", numbered.join(" "));
    }

    let mut header: Vec<String> = keys.iter().map(|k| k.name().to_string()).collect();
    header.extend(["runs", "mean", "std", "stat"].map(String::from));
    let mut table: Vec<Vec<String>> = vec![header];
    for row in rows {
        let mut cells = row.key.clone();
        cells.push(row.count.to_string());
        cells.push(format!("{:.4}", row.mean));
        cells.push(format!("{:.4}", row.std));
        cells.push(row.significance.clone());
        table.push(cells);
    }

    let columns = table[0].len();
    let widths: Vec<usize> = (0..columns)
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, width)| format!("{cell:<width$}"))
            .collect();
        println!("{}", line.join("  ").trim_end());
    }
}

/// Parse arguments and execute; returns the process exit code.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
