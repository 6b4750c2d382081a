//! Alternation controller: interleave global EA phases and local
//! multi-factorial optimisation phases on a shared evaluation budget
//! with an optional wall-time cutoff.

use std::time::{Duration, Instant};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ea::{run_mu_plus_lambda_aged, run_one_plus_one, sort_population, Aged, EaConfig, Scored};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::mfo::{run_mfo, MfoConfig, MfoIndividual};
use crate::profit::{solution_fitness_unchecked, ChanceParams};
use crate::solution::Assignment;

/// Shared optimisation budget: a hard cap on fitness evaluations and an
/// optional wall-clock deadline checked every 1,000 evaluations.
#[derive(Debug, Clone)]
pub struct Budget {
    max_evaluations: u64,
    used_evaluations: u64,
    deadline: Option<Instant>,
}

impl Budget {
    /// Budget limited to `max` evaluations, no wall-time cutoff.
    pub fn evaluations(max: u64) -> Budget {
        Budget {
            max_evaluations: max,
            used_evaluations: 0,
            deadline: None,
        }
    }

    /// Add a wall-clock limit starting now.
    pub fn with_wall_time(mut self, limit: Duration) -> Budget {
        self.deadline = Some(Instant::now() + limit);
        self
    }

    /// The reference configuration: five million evaluations or twenty
    /// minutes, whichever comes first.
    pub fn standard() -> Budget {
        Budget::evaluations(5_000_000).with_wall_time(Duration::from_secs(20 * 60))
    }

    pub fn max_evaluations(&self) -> u64 {
        self.max_evaluations
    }

    pub fn used(&self) -> u64 {
        self.used_evaluations
    }

    pub fn remaining(&self) -> u64 {
        self.max_evaluations - self.used_evaluations
    }

    pub fn time_expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Charge one evaluation. Returns false — leaving the counter
    /// untouched — once the cap is reached or, at 1,000-evaluation
    /// checkpoints, when the deadline has passed.
    pub fn try_consume(&mut self) -> bool {
        if self.used_evaluations >= self.max_evaluations {
            return false;
        }
        if self.used_evaluations % 1000 == 0 && self.time_expired() {
            return false;
        }
        self.used_evaluations += 1;
        true
    }

    /// Split off a child budget of at most `n` evaluations (bounded by
    /// what remains here), sharing the deadline. The child's usage is
    /// added back via `absorb`.
    pub(crate) fn carve(&mut self, n: u64) -> Budget {
        Budget {
            max_evaluations: n.min(self.remaining()),
            used_evaluations: 0,
            deadline: self.deadline,
        }
    }

    pub(crate) fn absorb(&mut self, child: Budget) {
        self.used_evaluations += child.used_evaluations;
        debug_assert!(self.used_evaluations <= self.max_evaluations);
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::standard()
    }
}

/// Which EA drives the global phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalAlgorithm {
    OnePlusOne,
    MuPlusLambda,
}

/// Phase lengths of the alternation, in fitness evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HybridConfig {
    pub eval_local: u64,
    pub eval_global: u64,
    pub global_algorithm: GlobalAlgorithm,
}

impl HybridConfig {
    /// Both phases at the reference length of 500 evaluations.
    pub fn new(global_algorithm: GlobalAlgorithm) -> HybridConfig {
        HybridConfig {
            eval_local: 500,
            eval_global: 500,
            global_algorithm,
        }
    }

    pub fn with_phase_evals(mut self, evals: u64) -> HybridConfig {
        self.eval_local = evals;
        self.eval_global = evals;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.eval_local == 0 || self.eval_global == 0 {
            return Err(Error::invalid("phase lengths must be at least 1"));
        }
        Ok(())
    }
}

fn best_of_local(population: &[MfoIndividual]) -> &MfoIndividual {
    let mut best = &population[0];
    for candidate in &population[1..] {
        if candidate.global_fitness.preferred_over(&best.global_fitness) {
            best = candidate;
        }
    }
    best
}

/// Hybrid (1+1) EA: starting from the all-unassigned solution, alternate
/// local optimisation and (1+1) EA phases; only the best local solution
/// (by whole-solution fitness, feasible preferred on ties) crosses each
/// boundary. Returns the best solution ever observed at a boundary.
pub fn run_hybrid_one_plus_one(
    instance: &Instance,
    chance: &ChanceParams,
    config: &HybridConfig,
    mfo_config: &MfoConfig,
    budget: &mut Budget,
    seed: u64,
) -> Result<Scored> {
    mfo_config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut incumbent = Assignment::empty(instance);
    let mut best = Scored {
        fitness: solution_fitness_unchecked(instance, &incumbent, chance),
        assignment: incumbent.clone(),
    };

    while budget.remaining() > 0 && !budget.time_expired() {
        let mut phase = budget.carve(config.eval_local);
        let locals = run_mfo(instance, chance, &incumbent, mfo_config, &mut phase, &mut rng)?;
        budget.absorb(phase);

        let boundary = best_of_local(&locals);
        incumbent = boundary.assignment.clone();
        if boundary.global_fitness.preferred_over(&best.fitness) {
            best = Scored {
                assignment: boundary.assignment.clone(),
                fitness: boundary.global_fitness,
            };
        }

        if budget.remaining() == 0 || budget.time_expired() {
            break;
        }
        let mut phase = budget.carve(config.eval_global);
        let outcome = run_one_plus_one(instance, chance, incumbent, &mut phase, &mut rng)?;
        budget.absorb(phase);
        incumbent = outcome.assignment.clone();
        if outcome.fitness.preferred_over(&best.fitness) {
            best = outcome;
        }
    }

    Ok(best)
}

/// Hybrid (mu+lambda) EA: the local population merges into the persistent
/// EA population at each boundary (best `mu` kept); each EA phase then
/// runs for `eval_global` evaluations and hands its best solution to the
/// next local phase. Returns the best solution ever observed.
pub fn run_hybrid_mu_plus_lambda(
    instance: &Instance,
    chance: &ChanceParams,
    config: &HybridConfig,
    ea_config: EaConfig,
    mfo_config: &MfoConfig,
    budget: &mut Budget,
    seed: u64,
) -> Result<Scored> {
    mfo_config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut incumbent = Assignment::empty(instance);
    let mut best = Scored {
        fitness: solution_fitness_unchecked(instance, &incumbent, chance),
        assignment: incumbent.clone(),
    };
    let mut population: Vec<Aged> = Vec::new();
    let mut next_birth = 0u64;

    while budget.remaining() > 0 && !budget.time_expired() {
        let mut phase = budget.carve(config.eval_local);
        let locals = run_mfo(instance, chance, &incumbent, mfo_config, &mut phase, &mut rng)?;
        budget.absorb(phase);

        for local in locals {
            population.push(Aged {
                scored: Scored {
                    assignment: local.assignment,
                    fitness: local.global_fitness,
                },
                birth: next_birth,
            });
            next_birth += 1;
        }
        sort_population(&mut population);
        population.truncate(ea_config.mu);
        if population[0].scored.fitness.preferred_over(&best.fitness) {
            best = population[0].scored.clone();
        }

        if budget.remaining() == 0 || budget.time_expired() {
            break;
        }
        let mut phase = budget.carve(config.eval_global);
        population = run_mu_plus_lambda_aged(
            instance,
            chance,
            ea_config,
            population,
            &mut next_birth,
            &mut phase,
            &mut rng,
        );
        budget.absorb(phase);
        incumbent = population[0].scored.assignment.clone();
        if population[0].scored.fitness.preferred_over(&best.fitness) {
            best = population[0].scored.clone();
        }
    }

    Ok(best)
}

/// Dispatch on the configured global algorithm.
pub fn run_hybrid(
    instance: &Instance,
    chance: &ChanceParams,
    config: &HybridConfig,
    ea_config: EaConfig,
    mfo_config: &MfoConfig,
    budget: &mut Budget,
    seed: u64,
) -> Result<Scored> {
    config.validate()?;
    match config.global_algorithm {
        GlobalAlgorithm::OnePlusOne => {
            run_hybrid_one_plus_one(instance, chance, config, mfo_config, budget, seed)
        }
        GlobalAlgorithm::MuPlusLambda => run_hybrid_mu_plus_lambda(
            instance, chance, config, ea_config, mfo_config, budget, seed,
        ),
    }
}
