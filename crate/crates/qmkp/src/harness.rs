//! Experiment engine: seeded repeated runs over a configuration
//! cross-product, parallel execution with deterministic output order,
//! CSV emission and rank-based summaries.

use std::collections::HashMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ea::{run_mu_plus_lambda, run_one_plus_one, EaConfig, Scored};
use crate::error::{Error, Result};
use crate::hybrid::{
    run_hybrid_mu_plus_lambda, run_hybrid_one_plus_one, Budget, GlobalAlgorithm, HybridConfig,
};
use crate::instance::{read_instance, Instance};
use crate::mfo::MfoConfig;
use crate::profit::{ChanceParams, ChebFactor, DispersionModel, TaskFitnessMode};
use crate::solution::Assignment;
use crate::stats::{pairwise_significance, Mark};

/// The four solver configurations under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Ea11,
    EaMuLambda,
    Ea11Mfo,
    EaMuLambdaMfo,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Ea11,
        Algorithm::EaMuLambda,
        Algorithm::Ea11Mfo,
        Algorithm::EaMuLambdaMfo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ea11 => "ea11",
            Algorithm::EaMuLambda => "ea_mu_lambda",
            Algorithm::Ea11Mfo => "ea11_mfo",
            Algorithm::EaMuLambdaMfo => "ea_mu_lambda_mfo",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "ea11" => Ok(Algorithm::Ea11),
            "ea_mu_lambda" => Ok(Algorithm::EaMuLambda),
            "ea11_mfo" => Ok(Algorithm::Ea11Mfo),
            "ea_mu_lambda_mfo" => Ok(Algorithm::EaMuLambdaMfo),
            other => Err(Error::invalid(format!(
                "unknown algorithm '{other}' (expected ea11|ea-mu-lambda|ea11-mfo|ea-mu-lambda-mfo)"
            ))),
        }
    }
}

/// Solver knobs shared by every algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub mu: usize,
    pub lambda: usize,
    pub phase_evals: u64,
    pub pr_kt: f64,
    pub max_evals: u64,
    pub max_seconds: Option<u64>,
    pub cheb_factor: ChebFactor,
    pub dispersion_model: DispersionModel,
    pub local_fitness: TaskFitnessMode,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            mu: 20,
            lambda: 10,
            phase_evals: 500,
            pr_kt: 0.1,
            max_evals: 5_000_000,
            max_seconds: None,
            cheb_factor: ChebFactor::Eq3,
            dispersion_model: DispersionModel::Uniform,
            local_fitness: TaskFitnessMode::Expected,
        }
    }
}

impl SolverSettings {
    pub fn chance_params(&self, delta: f64, alpha: f64) -> Result<ChanceParams> {
        Ok(ChanceParams::new(delta, alpha)?
            .with_cheb_factor(self.cheb_factor)
            .with_dispersion_model(self.dispersion_model))
    }

    pub fn budget(&self) -> Budget {
        let budget = Budget::evaluations(self.max_evals);
        match self.max_seconds {
            Some(secs) => budget.with_wall_time(std::time::Duration::from_secs(secs)),
            None => budget,
        }
    }

    fn ea_config(&self) -> Result<EaConfig> {
        EaConfig::new(self.mu, self.lambda)
    }

    fn mfo_config(&self) -> MfoConfig {
        MfoConfig {
            pr_kt: self.pr_kt,
            task_fitness_mode: self.local_fitness,
            ..MfoConfig::default()
        }
    }

    fn hybrid_config(&self, algorithm: GlobalAlgorithm) -> HybridConfig {
        HybridConfig::new(algorithm).with_phase_evals(self.phase_evals)
    }
}

/// Outcome of one solver run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Scored,
    pub evaluations: u64,
}

/// Run one algorithm on a prepared instance with a fixed seed.
pub fn run_algorithm(
    instance: &Instance,
    chance: &ChanceParams,
    algorithm: Algorithm,
    settings: &SolverSettings,
    seed: u64,
) -> Result<RunOutcome> {
    let mut budget = settings.budget();
    let best = match algorithm {
        Algorithm::Ea11 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            run_one_plus_one(
                instance,
                chance,
                Assignment::empty(instance),
                &mut budget,
                &mut rng,
            )?
        }
        Algorithm::EaMuLambda => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let population = run_mu_plus_lambda(
                instance,
                chance,
                settings.ea_config()?,
                &[Assignment::empty(instance)],
                &mut budget,
                &mut rng,
            )?;
            population.into_iter().next().expect("population nonempty")
        }
        Algorithm::Ea11Mfo => run_hybrid_one_plus_one(
            instance,
            chance,
            &settings.hybrid_config(GlobalAlgorithm::OnePlusOne),
            &settings.mfo_config(),
            &mut budget,
            seed,
        )?,
        Algorithm::EaMuLambdaMfo => run_hybrid_mu_plus_lambda(
            instance,
            chance,
            &settings.hybrid_config(GlobalAlgorithm::MuPlusLambda),
            settings.ea_config()?,
            &settings.mfo_config(),
            &mut budget,
            seed,
        )?,
    };
    Ok(RunOutcome {
        best,
        evaluations: budget.used(),
    })
}

/// Independent feasibility re-check from the raw slot vector: weights
/// summed per knapsack must stay strictly below every capacity.
pub fn verify_feasible(instance: &Instance, assignment: &Assignment) -> bool {
    let m = instance.knapsack_count();
    let mut loads = vec![0u64; m + 1];
    for (item, &slot) in assignment.slots().iter().enumerate() {
        if slot as usize > m {
            return false;
        }
        loads[slot as usize] += instance.weight(item);
    }
    (1..=m).all(|k| (loads[k] as f64) < instance.capacity(k))
}

/// One seeded solver run's configuration, result and resource usage.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance_label: String,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub alpha: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub run_index: usize,
    pub best_fitness: f64,
    pub feasible: bool,
    pub evaluations: u64,
    pub elapsed_ms: u64,
}

/// Parsed experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub instances: Vec<PathBuf>,
    /// Knapsack counts; capacities are re-derived per entry. Empty means
    /// each instance file is used as stored.
    pub ms: Vec<usize>,
    pub deltas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub runs: usize,
    pub base_seed: u64,
    pub settings: SolverSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            instances: Vec::new(),
            ms: Vec::new(),
            deltas: vec![25.0],
            alphas: vec![0.9],
            algorithms: Algorithm::ALL.to_vec(),
            runs: 30,
            base_seed: 1,
            settings: SolverSettings::default(),
        }
    }
}

/// Parse the plain-text `key = value` configuration format. List keys
/// (`instances`, `ms`, `deltas`, `alphas`, `algorithms`) accept
/// comma-separated values and repeated lines. `#` starts a comment.
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    let mut seen_list_keys: Vec<&str> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, format!("expected 'key = value', got '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() {
            return Err(Error::parse(line_no, format!("empty value for '{key}'")));
        }

        let list_values = || value.split(',').map(str::trim).collect::<Vec<_>>();
        // First mention of a list key replaces the default; later
        // mentions append.
        let fresh = |seen: &mut Vec<&str>, key: &'static str| {
            if seen.contains(&key) {
                false
            } else {
                seen.push(key);
                true
            }
        };

        match key {
            "instances" => {
                if fresh(&mut seen_list_keys, "instances") {
                    config.instances.clear();
                }
                config
                    .instances
                    .extend(list_values().into_iter().map(PathBuf::from));
            }
            "ms" => {
                if fresh(&mut seen_list_keys, "ms") {
                    config.ms.clear();
                }
                for v in list_values() {
                    config.ms.push(v.parse().map_err(|_| {
                        Error::parse(line_no, format!("bad knapsack count '{v}'"))
                    })?);
                }
            }
            "deltas" => {
                if fresh(&mut seen_list_keys, "deltas") {
                    config.deltas.clear();
                }
                for v in list_values() {
                    config.deltas.push(
                        v.parse()
                            .map_err(|_| Error::parse(line_no, format!("bad delta '{v}'")))?,
                    );
                }
            }
            "alphas" => {
                if fresh(&mut seen_list_keys, "alphas") {
                    config.alphas.clear();
                }
                for v in list_values() {
                    config.alphas.push(
                        v.parse()
                            .map_err(|_| Error::parse(line_no, format!("bad alpha '{v}'")))?,
                    );
                }
            }
            "algorithms" => {
                if fresh(&mut seen_list_keys, "algorithms") {
                    config.algorithms.clear();
                }
                for v in list_values() {
                    config.algorithms.push(
                        v.parse()
                            .map_err(|e: Error| Error::parse(line_no, e.to_string()))?,
                    );
                }
            }
            "runs" => {
                config.runs = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad run count"))?;
            }
            "base_seed" => {
                config.base_seed = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad base seed"))?;
            }
            "max_evals" => {
                config.settings.max_evals = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad max_evals"))?;
            }
            "max_seconds" => {
                config.settings.max_seconds = Some(
                    value
                        .parse()
                        .map_err(|_| Error::parse(line_no, "bad max_seconds"))?,
                );
            }
            "mu" => {
                config.settings.mu = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad mu"))?;
            }
            "lambda" => {
                config.settings.lambda = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad lambda"))?;
            }
            "phase_evals" => {
                config.settings.phase_evals = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad phase_evals"))?;
            }
            "pr_kt" => {
                config.settings.pr_kt = value
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad pr_kt"))?;
            }
            "cheb_factor" => {
                config.settings.cheb_factor = value
                    .parse()
                    .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
            }
            "dispersion_model" => {
                config.settings.dispersion_model = value
                    .parse()
                    .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
            }
            "local_fitness" => {
                config.settings.local_fitness = value
                    .parse()
                    .map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
            }
            other => {
                return Err(Error::parse(line_no, format!("unknown key '{other}'")));
            }
        }
    }

    if config.instances.is_empty() {
        return Err(Error::invalid("config lists no instances"));
    }
    if config.runs == 0 {
        return Err(Error::invalid("runs must be at least 1"));
    }
    Ok(config)
}

pub fn read_experiment_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    parse_experiment_config(&std::fs::read_to_string(path)?)
}

struct RunSpec {
    instance: Arc<Instance>,
    delta: f64,
    alpha: f64,
    algorithm: Algorithm,
    run_index: usize,
    seed: u64,
}

/// Execute the full cross-product of a configuration.
///
/// Runs execute on a bounded worker pool (`jobs = 0` uses all CPUs) and
/// are reported in deterministic group-then-run order regardless of the
/// execution schedule. A panicking run produces a failed row (NaN
/// fitness) without stopping the experiment.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<Vec<RunRecord>> {
    // All instance files must load before any run starts.
    let mut bases: Vec<Arc<Instance>> = Vec::new();
    for path in &config.instances {
        let instance = read_instance(path).map_err(|e| {
            Error::invalid(format!("instance '{}': {e}", path.display()))
        })?;
        bases.push(Arc::new(instance));
    }

    let mut specs: Vec<RunSpec> = Vec::new();
    for base in &bases {
        let variants: Vec<Arc<Instance>> = if config.ms.is_empty() {
            vec![Arc::clone(base)]
        } else {
            config
                .ms
                .iter()
                .map(|&m| base.with_knapsacks(m).map(Arc::new))
                .collect::<Result<_>>()?
        };
        for instance in variants {
            for &delta in &config.deltas {
                for &alpha in &config.alphas {
                    for &algorithm in &config.algorithms {
                        for run_index in 0..config.runs {
                            specs.push(RunSpec {
                                instance: Arc::clone(&instance),
                                delta,
                                alpha,
                                algorithm,
                                run_index,
                                seed: config.base_seed + run_index as u64,
                            });
                        }
                    }
                }
            }
        }
    }

    let settings = config.settings;
    let execute = |spec: &RunSpec| -> RunRecord {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let chance = settings.chance_params(spec.delta, spec.alpha)?;
            run_algorithm(&spec.instance, &chance, spec.algorithm, &settings, spec.seed)
        }));
        let elapsed_ms = started.elapsed().as_millis() as u64;
        let mut record = RunRecord {
            instance_label: spec.instance.label().to_string(),
            n: spec.instance.item_count(),
            m: spec.instance.knapsack_count(),
            delta: spec.delta,
            alpha: spec.alpha,
            algorithm: spec.algorithm,
            seed: spec.seed,
            run_index: spec.run_index,
            best_fitness: f64::NAN,
            feasible: false,
            evaluations: 0,
            elapsed_ms,
        };
        if let Ok(Ok(outcome)) = outcome {
            record.best_fitness = outcome.best.fitness.value;
            record.feasible = outcome.best.fitness.feasible
                && verify_feasible(&spec.instance, &outcome.best.assignment);
            record.evaluations = outcome.evaluations;
        }
        record
    };

    let records: Vec<RunRecord> = if jobs == 1 {
        specs.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
        pool.install(|| specs.par_iter().map(execute).collect())
    };
    Ok(records)
}

/// Fixed CSV header.
pub const CSV_HEADER: &str =
    "instance,n,m,delta,alpha,algorithm,seed,run,best_fitness,feasible,evaluations,elapsed_ms";

/// Render records as CSV, with a leading comment documenting the seed
/// derivation.
pub fn format_records_csv(records: &[RunRecord], base_seed: u64) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# seed derivation: seed = base_seed + run, base_seed = {base_seed}\n"
    ));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{:.4},{},{},{}\n",
            r.instance_label,
            r.n,
            r.m,
            r.delta,
            r.alpha,
            r.algorithm,
            r.seed,
            r.run_index,
            r.best_fitness,
            r.feasible,
            r.evaluations,
            r.elapsed_ms
        ));
    }
    out
}

/// Parse a results CSV produced by `format_records_csv`.
pub fn parse_records_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line != CSV_HEADER {
                return Err(Error::parse(line_no, "unexpected CSV header"));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::parse(
                line_no,
                format!("expected 12 fields, got {}", fields.len()),
            ));
        }
        let parse_err = |what: &str| Error::parse(line_no, format!("bad {what}"));
        records.push(RunRecord {
            instance_label: fields[0].to_string(),
            n: fields[1].parse().map_err(|_| parse_err("n"))?,
            m: fields[2].parse().map_err(|_| parse_err("m"))?,
            delta: fields[3].parse().map_err(|_| parse_err("delta"))?,
            alpha: fields[4].parse().map_err(|_| parse_err("alpha"))?,
            algorithm: fields[5].parse().map_err(|_: Error| parse_err("algorithm"))?,
            seed: fields[6].parse().map_err(|_| parse_err("seed"))?,
            run_index: fields[7].parse().map_err(|_| parse_err("run"))?,
            best_fitness: fields[8].parse().map_err(|_| parse_err("best_fitness"))?,
            feasible: fields[9].parse().map_err(|_| parse_err("feasible"))?,
            evaluations: fields[10].parse().map_err(|_| parse_err("evaluations"))?,
            elapsed_ms: fields[11].parse().map_err(|_| parse_err("elapsed_ms"))?,
        });
    }
    if !saw_header {
        return Err(Error::parse(1, "missing CSV header"));
    }
    Ok(records)
}

/// Record fields usable as grouping keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupField {
    Instance,
    N,
    M,
    Delta,
    Alpha,
    Algorithm,
}

impl GroupField {
    pub fn name(self) -> &'static str {
        match self {
            GroupField::Instance => "instance",
            GroupField::N => "n",
            GroupField::M => "m",
            GroupField::Delta => "delta",
            GroupField::Alpha => "alpha",
            GroupField::Algorithm => "algorithm",
        }
    }

    fn value_of(self, record: &RunRecord) -> String {
        match self {
            GroupField::Instance => record.instance_label.clone(),
            GroupField::N => record.n.to_string(),
            GroupField::M => record.m.to_string(),
            GroupField::Delta => record.delta.to_string(),
            GroupField::Alpha => record.alpha.to_string(),
            GroupField::Algorithm => record.algorithm.to_string(),
        }
    }
}

impl std::str::FromStr for GroupField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instance" => Ok(GroupField::Instance),
            "n" => Ok(GroupField::N),
            "m" => Ok(GroupField::M),
            "delta" => Ok(GroupField::Delta),
            "alpha" => Ok(GroupField::Alpha),
            "algorithm" => Ok(GroupField::Algorithm),
            other => Err(Error::invalid(format!("unknown group key '{other}'"))),
        }
    }
}

/// One summary group: key values (in key order), sample statistics and
/// significance marks.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub key: Vec<String>,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    /// Single-run group: std reported as 0.
    pub degenerate: bool,
    /// Marks like `1+ 3-` comparing against other algorithms in the same
    /// cell; empty when not applicable.
    pub significance: String,
    samples: Vec<f64>,
}

/// Group records by the given keys (first-appearance order) and compute
/// mean and sample standard deviation of `best_fitness` per group.
pub fn summarize(records: &[RunRecord], keys: &[GroupField]) -> Result<Vec<SummaryRow>> {
    if keys.is_empty() {
        return Err(Error::invalid("at least one group key is required"));
    }
    if records.is_empty() {
        eprintln!("warning: no records to summarize");
    }
    let mut order: Vec<Vec<String>> = Vec::new();
    let mut samples: HashMap<Vec<String>, Vec<f64>> = HashMap::new();
    for record in records {
        let key: Vec<String> = keys.iter().map(|k| k.value_of(record)).collect();
        if !samples.contains_key(&key) {
            order.push(key.clone());
        }
        samples.entry(key).or_default().push(record.best_fitness);
    }

    let rows = order
        .into_iter()
        .map(|key| {
            let values = &samples[&key];
            let count = values.len();
            let mean = values.iter().sum::<f64>() / count as f64;
            let degenerate = count < 2;
            let std = if degenerate {
                0.0
            } else {
                let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
                (ss / (count - 1) as f64).sqrt()
            };
            SummaryRow {
                key,
                count,
                mean,
                std,
                degenerate,
                significance: String::new(),
                samples: values.clone(),
            }
        })
        .collect();
    Ok(rows)
}

/// Fill significance marks on summary rows grouped with `algorithm` as
/// one of the keys. Rows sharing every non-algorithm key value form a
/// cell; within each cell the algorithms (numbered by first appearance
/// across all rows, 1-based) are compared pairwise at the given
/// confidence with Bonferroni correction.
pub fn attach_significance(
    rows: &mut [SummaryRow],
    keys: &[GroupField],
    confidence: f64,
) -> Result<Vec<String>> {
    let Some(algo_pos) = keys.iter().position(|&k| k == GroupField::Algorithm) else {
        return Ok(Vec::new());
    };

    // Global numbering of algorithms in first-appearance order.
    let mut legend: Vec<String> = Vec::new();
    for row in rows.iter() {
        let name = &row.key[algo_pos];
        if !legend.contains(name) {
            legend.push(name.clone());
        }
    }

    // Partition rows into cells by the non-algorithm key part.
    let mut cells: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    for (idx, row) in rows.iter().enumerate() {
        let mut cell_key = row.key.clone();
        cell_key.remove(algo_pos);
        cells.entry(cell_key).or_default().push(idx);
    }

    for indices in cells.values() {
        if indices.len() < 2 {
            continue;
        }
        let groups: Vec<&[f64]> = indices.iter().map(|&i| rows[i].samples.as_slice()).collect();
        let marks = pairwise_significance(&groups, confidence)?;
        for (a, &row_idx) in indices.iter().enumerate() {
            let mut parts: Vec<String> = Vec::new();
            for (b, &other_idx) in indices.iter().enumerate() {
                if a == b {
                    continue;
                }
                let number = legend
                    .iter()
                    .position(|n| n == &rows[other_idx].key[algo_pos])
                    .expect("legend covers all algorithms")
                    + 1;
                match marks[a][b] {
                    Mark::Better => parts.push(format!("{number}+")),
                    Mark::Worse => parts.push(format!("{number}-")),
                    Mark::None => {}
                }
            }
            rows[row_idx].significance = parts.join(" ");
        }
    }
    Ok(legend)
}
