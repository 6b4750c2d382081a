//! Solvers for the quadratic multiple knapsack problem with stochastic
//! profits under chance constraints.
//!
//! Items carry uncertain linear profits, and pairs of items packed into
//! the same knapsack carry uncertain joint profits. Each knapsack's
//! reported profit is the level it clears with a required confidence,
//! estimated from the one-sided Chebyshev inequality. The crate
//! provides:
//!
//! - [`instance`]: the instance model, a seeded generator for weakly and
//!   strongly correlated instances, and a plain-text file format.
//! - [`profit`]: profit moments, the chance-constrained estimate and the
//!   penalised fitness function.
//! - [`solution`]: integer-vector assignments with incremental
//!   per-knapsack caches, profit densities and preference tables.
//! - [`ea`]: mutation-only (1+1) and (mu+lambda) evolutionary
//!   algorithms.
//! - [`mfo`]: the preference-based local optimiser with multi-factorial
//!   selection and knowledge-transfer crossover.
//! - [`hybrid`]: alternation of global EA and local optimiser phases on
//!   a shared evaluation budget.
//! - [`oracle`]: exhaustive enumeration for tiny instances.
//! - [`harness`] and [`stats`]: seeded repeated experiments, CSV
//!   results, and Kruskal-Wallis significance summaries.
//!
//! Runnable walkthroughs live in `examples/`; the `qmkp` binary exposes
//! the same capabilities as subcommands (`generate`, `solve`,
//! `experiment`, `stats`, `oracle`).

pub mod cli;
pub mod ea;
pub mod error;
pub mod harness;
pub mod hybrid;
pub mod instance;
pub mod mfo;
pub mod oracle;
pub mod profit;
pub mod solution;
pub mod stats;

pub use error::{Error, Result};
pub use instance::{
    derive_capacities, generate_instance, geometric_mean_pair_profit, read_instance,
    write_instance, Correlation, Instance,
};
pub use profit::{
    chebyshev_estimate, knapsack_cc_profit, knapsack_moments, per_term_variance, solution_fitness,
    task_fitness, ChanceParams, ChebFactor, DispersionModel, FitnessValue, KnapsackMoments,
    TaskFitnessMode,
};
pub use solution::{build_preference_table, profit_density, Assignment, PreferenceTable};

pub use ea::{
    make_offspring, random_reset_mutation, run_mu_plus_lambda, run_one_plus_one, swap_mutation,
    EaConfig, Scored,
};
pub use hybrid::{
    run_hybrid, run_hybrid_mu_plus_lambda, run_hybrid_one_plus_one, Budget, GlobalAlgorithm,
    HybridConfig,
};
pub use mfo::{
    evaluate_mfo_metrics, kt_crossover, preference_mutation, run_mfo, MfoConfig, MfoIndividual,
};
pub use oracle::{exhaustive_best, OracleResult};

pub use harness::{
    run_algorithm, run_experiment, summarize, Algorithm, ExperimentConfig, RunRecord,
    SolverSettings, SummaryRow,
};
pub use stats::{kruskal_wallis, pairwise_significance, KruskalWallisResult, Mark};
