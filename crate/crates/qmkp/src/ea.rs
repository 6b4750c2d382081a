//! Global evolutionary optimisers: random-resetting and swap mutation,
//! mixed-operator offspring generation, and the (1+1) and (mu+lambda)
//! elitist loops over the chance-constrained fitness.
//!
//! Both loops are mutation-only. Each offspring costs one evaluation
//! from the shared budget; acceptance and survivor selection compare
//! fitness values, with equal values resolved in favour of the older
//! individual.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hybrid::Budget;
use crate::instance::Instance;
use crate::profit::{solution_fitness_unchecked, ChanceParams, FitnessValue};
use crate::solution::Assignment;

/// Population sizes of the (mu+lambda) EA; (1+1) is the `mu = lambda = 1`
/// special case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EaConfig {
    pub mu: usize,
    pub lambda: usize,
}

impl EaConfig {
    pub fn new(mu: usize, lambda: usize) -> Result<EaConfig> {
        if mu == 0 || lambda == 0 {
            return Err(Error::invalid("mu and lambda must be at least 1"));
        }
        Ok(EaConfig { mu, lambda })
    }

    pub fn one_plus_one() -> EaConfig {
        EaConfig { mu: 1, lambda: 1 }
    }
}

impl Default for EaConfig {
    /// The (20+10) configuration.
    fn default() -> Self {
        EaConfig { mu: 20, lambda: 10 }
    }
}

/// An assignment together with its cached fitness.
#[derive(Debug, Clone)]
pub struct Scored {
    pub assignment: Assignment,
    pub fitness: FitnessValue,
}

/// The two variation operators used by the EAs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationOp {
    RandomReset,
    Swap,
}

/// Random-resetting mutation: each position independently, with
/// probability `1/n`, is redrawn uniformly from the full state set
/// `{0..m}` (possibly its current value).
pub fn random_reset_mutation<R: Rng>(
    instance: &Instance,
    parent: &Assignment,
    rng: &mut R,
) -> Assignment {
    let n = instance.item_count();
    let m = instance.knapsack_count() as u16;
    let mut child = parent.clone();
    let rate = 1.0 / n as f64;
    for item in 0..n {
        if rng.random_bool(rate) {
            let state = rng.random_range(0..=m);
            child
                .apply_move(instance, item, state)
                .expect("state within range");
        }
    }
    child
}

/// Swap mutation: two distinct positions, chosen uniformly at random,
/// exchange their states. With fewer than two items the parent is
/// returned unchanged.
pub fn swap_mutation<R: Rng>(instance: &Instance, parent: &Assignment, rng: &mut R) -> Assignment {
    let n = instance.item_count();
    let mut child = parent.clone();
    if n < 2 {
        return child;
    }
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    swap_positions(instance, &mut child, a, b);
    child
}

/// Exchange the states of two positions in place.
pub fn swap_positions(instance: &Instance, assignment: &mut Assignment, a: usize, b: usize) {
    let sa = assignment.slot(a);
    let sb = assignment.slot(b);
    assignment.apply_move(instance, a, sb).expect("valid state");
    assignment.apply_move(instance, b, sa).expect("valid state");
}

/// Apply one named mutation operator.
pub fn mutate<R: Rng>(
    instance: &Instance,
    parent: &Assignment,
    op: MutationOp,
    rng: &mut R,
) -> Assignment {
    match op {
        MutationOp::RandomReset => random_reset_mutation(instance, parent, rng),
        MutationOp::Swap => swap_mutation(instance, parent, rng),
    }
}

/// Generate one offspring, picking random-reset or swap mutation with
/// equal likelihood.
pub fn make_offspring<R: Rng>(
    instance: &Instance,
    parent: &Assignment,
    rng: &mut R,
) -> Assignment {
    let op = if rng.random_bool(0.5) {
        MutationOp::RandomReset
    } else {
        MutationOp::Swap
    };
    mutate(instance, parent, op, rng)
}

fn check_shape(instance: &Instance, assignment: &Assignment) -> Result<()> {
    if assignment.item_count() != instance.item_count()
        || assignment.knapsack_count() != instance.knapsack_count()
    {
        return Err(Error::invalid("assignment does not match instance shape"));
    }
    Ok(())
}

/// (1+1) EA: keep a single solution, accept any offspring whose fitness
/// value is at least the parent's. Consumes one budget evaluation per
/// offspring and returns the final parent with its fitness.
pub fn run_one_plus_one<R: Rng>(
    instance: &Instance,
    chance: &ChanceParams,
    start: Assignment,
    budget: &mut Budget,
    rng: &mut R,
) -> Result<Scored> {
    check_shape(instance, &start)?;
    let mut parent_fitness = solution_fitness_unchecked(instance, &start, chance);
    let mut parent = start;
    while budget.try_consume() {
        let child = make_offspring(instance, &parent, rng);
        let child_fitness = solution_fitness_unchecked(instance, &child, chance);
        if child_fitness.value >= parent_fitness.value {
            parent = child;
            parent_fitness = child_fitness;
        }
    }
    Ok(Scored {
        assignment: parent,
        fitness: parent_fitness,
    })
}

pub(crate) struct Aged {
    pub scored: Scored,
    pub birth: u64,
}

/// Sort by fitness value descending, older (smaller birth) first on ties.
pub(crate) fn sort_population(population: &mut [Aged]) {
    population.sort_by(|a, b| {
        b.scored
            .fitness
            .value
            .partial_cmp(&a.scored.fitness.value)
            .expect("fitness values are finite")
            .then(a.birth.cmp(&b.birth))
    });
}

pub(crate) fn run_mu_plus_lambda_aged<R: Rng>(
    instance: &Instance,
    chance: &ChanceParams,
    config: EaConfig,
    mut population: Vec<Aged>,
    next_birth: &mut u64,
    budget: &mut Budget,
    rng: &mut R,
) -> Vec<Aged> {
    sort_population(&mut population);
    population.truncate(config.mu);

    // Pad a short population by mutating its best member.
    while population.len() < config.mu {
        let child = make_offspring(instance, &population[0].scored.assignment, rng);
        let fitness = solution_fitness_unchecked(instance, &child, chance);
        population.push(Aged {
            scored: Scored {
                assignment: child,
                fitness,
            },
            birth: *next_birth,
        });
        *next_birth += 1;
    }
    sort_population(&mut population);

    'outer: loop {
        let mut offspring = Vec::with_capacity(config.lambda);
        for _ in 0..config.lambda {
            if !budget.try_consume() {
                if offspring.is_empty() {
                    break 'outer;
                }
                break;
            }
            let parent = &population[rng.random_range(0..population.len())];
            let child = make_offspring(instance, &parent.scored.assignment, rng);
            let fitness = solution_fitness_unchecked(instance, &child, chance);
            offspring.push(Aged {
                scored: Scored {
                    assignment: child,
                    fitness,
                },
                birth: *next_birth,
            });
            *next_birth += 1;
        }
        let partial = offspring.len() < config.lambda;
        population.extend(offspring);
        sort_population(&mut population);
        population.truncate(config.mu);
        if partial {
            break;
        }
    }
    population
}

/// (mu+lambda) EA with plus selection: each generation draws `lambda`
/// parents uniformly at random, mutates each, merges and keeps the best
/// `mu` by fitness value (older individual first on ties). Returns the
/// final population sorted best first.
pub fn run_mu_plus_lambda<R: Rng>(
    instance: &Instance,
    chance: &ChanceParams,
    config: EaConfig,
    initial_population: &[Assignment],
    budget: &mut Budget,
    rng: &mut R,
) -> Result<Vec<Scored>> {
    if initial_population.is_empty() {
        return Err(Error::invalid("initial population must be nonempty"));
    }
    for a in initial_population {
        check_shape(instance, a)?;
    }
    let mut next_birth = 0u64;
    let population: Vec<Aged> = initial_population
        .iter()
        .map(|a| {
            let fitness = solution_fitness_unchecked(instance, a, chance);
            let aged = Aged {
                scored: Scored {
                    assignment: a.clone(),
                    fitness,
                },
                birth: next_birth,
            };
            next_birth += 1;
            aged
        })
        .collect();
    let finals = run_mu_plus_lambda_aged(
        instance,
        chance,
        config,
        population,
        &mut next_birth,
        budget,
        rng,
    );
    Ok(finals.into_iter().map(|a| a.scored).collect())
}
