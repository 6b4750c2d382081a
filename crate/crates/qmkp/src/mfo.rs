//! Preference-based local optimiser built on multi-factorial
//! optimisation: each knapsack is a task, items only ever move between
//! their preferred knapsack and the unassigned state, and selection runs
//! on factorial ranks unified through a scalar fitness.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hybrid::Budget;
use crate::instance::Instance;
use crate::profit::{
    solution_fitness_unchecked, task_fitness_unchecked, ChanceParams, FitnessValue,
    TaskFitnessMode,
};
use crate::solution::{build_preference_table, Assignment, PreferenceTable};

/// Parameters of the local optimiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfoConfig {
    /// Local population size.
    pub mu_local: usize,
    /// Offspring per generation.
    pub lambda_local: usize,
    /// Probability of knowledge-transfer crossover per offspring.
    pub pr_kt: f64,
    /// Fitness used for the per-knapsack tasks.
    pub task_fitness_mode: TaskFitnessMode,
}

impl Default for MfoConfig {
    fn default() -> Self {
        MfoConfig {
            mu_local: 20,
            lambda_local: 10,
            pr_kt: 0.1,
            task_fitness_mode: TaskFitnessMode::Expected,
        }
    }
}

impl MfoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu_local == 0 || self.lambda_local == 0 {
            return Err(Error::invalid("mu_local and lambda_local must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.pr_kt) {
            return Err(Error::invalid(format!(
                "pr_kt must lie in [0, 1], got {}",
                self.pr_kt
            )));
        }
        Ok(())
    }
}

/// A population member with its task fitnesses and multi-factorial
/// metrics.
#[derive(Debug, Clone)]
pub struct MfoIndividual {
    pub assignment: Assignment,
    /// Per-task fitness `g_1..g_m` (index 0 holds task 1).
    pub task_fitness: Vec<f64>,
    /// Per-task rank, 1 = best.
    pub factorial_rank: Vec<usize>,
    /// Task with the individual's best rank, 1-based, lowest on ties.
    pub skill_factor: usize,
    /// Reciprocal of the rank on the skill task, in (0, 1].
    pub scalar_fitness: f64,
    /// Whole-solution chance-constrained fitness.
    pub global_fitness: FitnessValue,
    birth: u64,
}

impl MfoIndividual {
    fn evaluate(
        instance: &Instance,
        chance: &ChanceParams,
        mode: TaskFitnessMode,
        assignment: Assignment,
        birth: u64,
    ) -> MfoIndividual {
        let m = instance.knapsack_count();
        let task_fitness: Vec<f64> = (1..=m)
            .map(|k| task_fitness_unchecked(instance, &assignment, k, mode, chance))
            .collect();
        let global_fitness = solution_fitness_unchecked(instance, &assignment, chance);
        MfoIndividual {
            assignment,
            task_fitness,
            factorial_rank: vec![0; m],
            skill_factor: 0,
            scalar_fitness: 0.0,
            global_fitness,
            birth,
        }
    }
}

/// Ranks of `values` in descending order, 1 = highest; ties keep the
/// earlier index ahead.
pub(crate) fn ranks_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .expect("task fitness is finite")
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0; values.len()];
    for (pos, &idx) in order.iter().enumerate() {
        ranks[idx] = pos + 1;
    }
    ranks
}

/// Recompute factorial ranks, skill factors and scalar fitness across a
/// population, in place. Ties on task fitness favour the earlier index.
fn assign_metrics(population: &mut [MfoIndividual]) {
    if population.is_empty() {
        return;
    }
    let tasks = population[0].task_fitness.len();
    for k in 0..tasks {
        let values: Vec<f64> = population.iter().map(|ind| ind.task_fitness[k]).collect();
        let ranks = ranks_descending(&values);
        for (ind, rank) in population.iter_mut().zip(&ranks) {
            ind.factorial_rank[k] = *rank;
        }
    }
    for ind in population.iter_mut() {
        let mut best_task = 0;
        for k in 1..tasks {
            if ind.factorial_rank[k] < ind.factorial_rank[best_task] {
                best_task = k;
            }
        }
        ind.skill_factor = best_task + 1;
        ind.scalar_fitness = 1.0 / ind.factorial_rank[best_task] as f64;
    }
}

/// Evaluate task fitnesses and multi-factorial metrics for a population
/// of assignments.
pub fn evaluate_mfo_metrics(
    population: &[Assignment],
    instance: &Instance,
    chance: &ChanceParams,
    config: &MfoConfig,
) -> Result<Vec<MfoIndividual>> {
    if population.is_empty() {
        return Err(Error::invalid("population must be nonempty"));
    }
    let mut individuals: Vec<MfoIndividual> = population
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            MfoIndividual::evaluate(
                instance,
                chance,
                config.task_fitness_mode,
                a.clone(),
                idx as u64,
            )
        })
        .collect();
    assign_metrics(&mut individuals);
    Ok(individuals)
}

/// Flip one item between its preferred knapsack and the unassigned
/// state: assigned-to-preferred goes to 0, anything else goes to the
/// preferred knapsack.
pub fn mutate_item_by_preference(
    instance: &Instance,
    assignment: &mut Assignment,
    prefs: &PreferenceTable,
    item: usize,
) {
    let target = if assignment.slot(item) == prefs.preferred(item) {
        0
    } else {
        prefs.preferred(item)
    };
    assignment
        .apply_move(instance, item, target)
        .expect("preferred knapsack is in range");
}

/// Preference mutation: each position independently, with probability
/// `1/n`, flips between its preferred knapsack and the unassigned state.
pub fn preference_mutation<R: Rng>(
    instance: &Instance,
    parent: &Assignment,
    prefs: &PreferenceTable,
    rng: &mut R,
) -> Assignment {
    let n = instance.item_count();
    let mut child = parent.clone();
    let rate = 1.0 / n as f64;
    for item in 0..n {
        if rng.random_bool(rate) {
            mutate_item_by_preference(instance, &mut child, prefs, item);
        }
    }
    child
}

/// Knowledge-transfer crossover between two parents with distinct skill
/// factors. Phase one removes, from each parent's copy, items assigned
/// to the other parent's skill knapsack with probability 1/2. Phase two
/// reads the post-removal snapshots and copies skill-task values across
/// with probability 1/2. Returns both working copies.
pub fn kt_crossover<R: Rng>(
    instance: &Instance,
    x: &MfoIndividual,
    y: &MfoIndividual,
    rng: &mut R,
) -> Result<(Assignment, Assignment)> {
    kt_crossover_with(instance, x, y, &mut |rng_: &mut R| rng_.random_bool(0.5), rng)
}

/// `kt_crossover` with an injectable coin, used to pin down the exact
/// phase semantics in tests.
pub(crate) fn kt_crossover_with<R>(
    instance: &Instance,
    x: &MfoIndividual,
    y: &MfoIndividual,
    coin: &mut impl FnMut(&mut R) -> bool,
    rng: &mut R,
) -> Result<(Assignment, Assignment)> {
    if x.skill_factor == y.skill_factor {
        return Err(Error::invalid(
            "knowledge transfer requires parents with distinct skill factors",
        ));
    }
    let n = instance.item_count();
    let skill_x = x.skill_factor as u16;
    let skill_y = y.skill_factor as u16;

    let mut work_x = x.assignment.clone();
    let mut work_y = y.assignment.clone();

    // Removal phase.
    for item in 0..n {
        if work_x.slot(item) == skill_y && coin(rng) {
            work_x.apply_move(instance, item, 0).expect("state 0 valid");
        }
    }
    for item in 0..n {
        if work_y.slot(item) == skill_x && coin(rng) {
            work_y.apply_move(instance, item, 0).expect("state 0 valid");
        }
    }

    // Copy phase reads post-removal snapshots so the two directions
    // cannot interfere.
    let snapshot_x: Vec<u16> = work_x.slots().to_vec();
    let snapshot_y: Vec<u16> = work_y.slots().to_vec();
    for (item, &state) in snapshot_x.iter().enumerate() {
        if state == skill_x && coin(rng) {
            work_y
                .apply_move(instance, item, skill_x)
                .expect("state in range");
        }
    }
    for (item, &state) in snapshot_y.iter().enumerate() {
        if state == skill_y && coin(rng) {
            work_x
                .apply_move(instance, item, skill_y)
                .expect("state in range");
        }
    }

    Ok((work_x, work_y))
}

/// Run the multi-factorial local optimiser from a reference solution.
///
/// Preferences are built once from the reference. The population seeds
/// with the reference plus `mu_local` preference-mutants of it, then
/// evolves in batches of `lambda_local` offspring: each offspring comes
/// from knowledge-transfer crossover with probability `pr_kt` (two
/// random distinct-skill parents, first child kept; mutation when no
/// such pair exists) and from preference mutation of a random parent
/// otherwise. Each generated individual costs one budget evaluation;
/// the reference itself is free. Survivors are the best `mu_local` by
/// scalar fitness, then whole-solution fitness, then age. Returns the
/// final population sorted by that key.
pub fn run_mfo<R: Rng>(
    instance: &Instance,
    chance: &ChanceParams,
    reference: &Assignment,
    config: &MfoConfig,
    budget: &mut Budget,
    rng: &mut R,
) -> Result<Vec<MfoIndividual>> {
    config.validate()?;
    if reference.item_count() != instance.item_count()
        || reference.knapsack_count() != instance.knapsack_count()
    {
        return Err(Error::invalid("reference does not match instance shape"));
    }

    let prefs = build_preference_table(instance, reference);
    let mode = config.task_fitness_mode;
    let mut next_birth = 0u64;
    let make = |assignment: Assignment, next_birth: &mut u64| {
        let ind = MfoIndividual::evaluate(instance, chance, mode, assignment, *next_birth);
        *next_birth += 1;
        ind
    };

    let mut population = vec![make(reference.clone(), &mut next_birth)];
    let mut seeded_fully = true;
    for _ in 0..config.mu_local {
        if !budget.try_consume() {
            seeded_fully = false;
            break;
        }
        let child = preference_mutation(instance, reference, &prefs, rng);
        population.push(make(child, &mut next_birth));
    }
    assign_metrics(&mut population);
    sort_by_selection_key(&mut population);

    if !seeded_fully {
        return Ok(population);
    }

    loop {
        let mut offspring = Vec::with_capacity(config.lambda_local);
        for _ in 0..config.lambda_local {
            if !budget.try_consume() {
                break;
            }
            let child = if rng.random_bool(config.pr_kt) {
                let a = rng.random_range(0..population.len());
                let partners: Vec<usize> = (0..population.len())
                    .filter(|&i| population[i].skill_factor != population[a].skill_factor)
                    .collect();
                if partners.is_empty() {
                    preference_mutation(instance, &population[a].assignment, &prefs, rng)
                } else {
                    let b = partners[rng.random_range(0..partners.len())];
                    kt_crossover(instance, &population[a], &population[b], rng)?.0
                }
            } else {
                let p = rng.random_range(0..population.len());
                preference_mutation(instance, &population[p].assignment, &prefs, rng)
            };
            offspring.push(make(child, &mut next_birth));
        }
        let exhausted = offspring.len() < config.lambda_local;
        population.extend(offspring);
        assign_metrics(&mut population);
        sort_by_selection_key(&mut population);
        population.truncate(config.mu_local);
        // Truncation changes ranks; restore metrics for the survivors.
        assign_metrics(&mut population);
        sort_by_selection_key(&mut population);
        if exhausted {
            break;
        }
    }

    Ok(population)
}

/// Scalar fitness descending, then whole-solution fitness value, then age.
fn sort_by_selection_key(population: &mut [MfoIndividual]) {
    population.sort_by(|a, b| {
        b.scalar_fitness
            .partial_cmp(&a.scalar_fitness)
            .expect("scalar fitness is finite")
            .then(
                b.global_fitness
                    .value
                    .partial_cmp(&a.global_fitness.value)
                    .expect("fitness is finite"),
            )
            .then(a.birth.cmp(&b.birth))
    });
}
