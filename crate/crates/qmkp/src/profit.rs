//! Stochastic profit model: moments of knapsack profit under uniform
//! dispersion, the Chebyshev-based chance-constrained estimate, per-task
//! fitness and whole-solution fitness with infeasibility penalty.
//!
//! Every active profit term (item or pair) is a random variable centred
//! on its expected value with half-width `delta`. A knapsack's profit
//! guaranteed with confidence `alpha` is `mu - sqrt(alpha/(1-alpha)) *
//! sigma`, from the one-sided Chebyshev inequality. Overloaded knapsacks
//! contribute the (negative) capacity violation instead.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::solution::Assignment;

/// Distribution family assumed for each profit term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DispersionModel {
    /// Continuous uniform on `[mu - delta, mu + delta]`; variance `delta^2/3`.
    #[default]
    Uniform,
    /// Two-point `{mu - delta, mu + delta}`; variance `delta^2`.
    TwoPoint,
}

impl std::str::FromStr for DispersionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(DispersionModel::Uniform),
            "twopoint" => Ok(DispersionModel::TwoPoint),
            other => Err(Error::invalid(format!(
                "unknown dispersion model '{other}' (expected uniform|twopoint)"
            ))),
        }
    }
}

/// Which tail factor multiplies the standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChebFactor {
    /// `sqrt(alpha / (1 - alpha))` — the one-sided Chebyshev bound.
    #[default]
    Eq3,
    /// `sqrt((1 - alpha) / alpha)` — the reciprocal variant, kept for
    /// sensitivity checks.
    Eq4,
}

impl std::str::FromStr for ChebFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq3" => Ok(ChebFactor::Eq3),
            "eq4" => Ok(ChebFactor::Eq4),
            other => Err(Error::invalid(format!(
                "unknown chebyshev factor '{other}' (expected eq3|eq4)"
            ))),
        }
    }
}

/// Dispersion and confidence level driving the chance-constrained
/// estimate, plus the model switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChanceParams {
    delta: f64,
    alpha: f64,
    dispersion_model: DispersionModel,
    cheb_factor: ChebFactor,
}

impl ChanceParams {
    /// Validates `delta >= 0` and `0.5 < alpha < 1`.
    pub fn new(delta: f64, alpha: f64) -> Result<ChanceParams> {
        if !(delta >= 0.0) {
            return Err(Error::invalid(format!("delta must be >= 0, got {delta}")));
        }
        if !(alpha > 0.5 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "alpha must lie strictly inside (0.5, 1), got {alpha}"
            )));
        }
        Ok(ChanceParams {
            delta,
            alpha,
            dispersion_model: DispersionModel::default(),
            cheb_factor: ChebFactor::default(),
        })
    }

    pub fn with_dispersion_model(mut self, model: DispersionModel) -> Self {
        self.dispersion_model = model;
        self
    }

    pub fn with_cheb_factor(mut self, factor: ChebFactor) -> Self {
        self.cheb_factor = factor;
        self
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dispersion_model(&self) -> DispersionModel {
        self.dispersion_model
    }

    pub fn cheb_factor(&self) -> ChebFactor {
        self.cheb_factor
    }

    /// Variance of a single profit term under the configured model.
    pub fn term_variance(&self) -> f64 {
        match self.dispersion_model {
            DispersionModel::Uniform => per_term_variance(self.delta),
            DispersionModel::TwoPoint => self.delta * self.delta,
        }
    }

    fn tail_factor(&self) -> f64 {
        match self.cheb_factor {
            ChebFactor::Eq3 => (self.alpha / (1.0 - self.alpha)).sqrt(),
            ChebFactor::Eq4 => ((1.0 - self.alpha) / self.alpha).sqrt(),
        }
    }
}

/// Variance of one profit term uniform on `[mu - delta, mu + delta]`.
pub fn per_term_variance(delta: f64) -> f64 {
    delta * delta / 3.0
}

/// Chance-constrained profit level: `mu - sqrt(alpha/(1-alpha)) * sqrt(v)`.
///
/// Strictly decreasing in `alpha` when `v > 0`; equals `mu` at `v = 0`.
pub fn chebyshev_estimate(mu: f64, variance: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie strictly inside (0.5, 1), got {alpha}"
        )));
    }
    if !(variance >= 0.0) {
        return Err(Error::invalid(format!(
            "variance must be >= 0, got {variance}"
        )));
    }
    Ok(mu - (alpha / (1.0 - alpha)).sqrt() * variance.sqrt())
}

/// First two moments of one knapsack's stochastic profit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnapsackMoments {
    /// Expected sum of linear profits inside the knapsack.
    pub mu_item: f64,
    /// Expected sum of active pair profits inside the knapsack.
    pub mu_pair: f64,
    /// Variance contributed by item profits.
    pub v_item: f64,
    /// Variance contributed by pair profits.
    pub v_pair: f64,
}

impl KnapsackMoments {
    pub fn mu(&self) -> f64 {
        self.mu_item + self.mu_pair
    }

    pub fn variance(&self) -> f64 {
        self.v_item + self.v_pair
    }
}

fn check_knapsack_index(instance: &Instance, k: usize) -> Result<()> {
    if k == 0 || k > instance.knapsack_count() {
        return Err(Error::invalid(format!(
            "knapsack {k} outside 1..={}",
            instance.knapsack_count()
        )));
    }
    Ok(())
}

fn check_shape(instance: &Instance, assignment: &Assignment) -> Result<()> {
    if assignment.item_count() != instance.item_count()
        || assignment.knapsack_count() != instance.knapsack_count()
    {
        return Err(Error::invalid(format!(
            "assignment shape ({}, {}) does not match instance ({}, {})",
            assignment.item_count(),
            assignment.knapsack_count(),
            instance.item_count(),
            instance.knapsack_count()
        )));
    }
    Ok(())
}

/// Moments of knapsack `k` (1-based) under `chance`.
pub fn knapsack_moments(
    instance: &Instance,
    assignment: &Assignment,
    k: usize,
    chance: &ChanceParams,
) -> Result<KnapsackMoments> {
    check_shape(instance, assignment)?;
    check_knapsack_index(instance, k)?;
    let agg = assignment.aggregates(k);
    let term_v = chance.term_variance();
    Ok(KnapsackMoments {
        mu_item: agg.mu_item,
        mu_pair: agg.mu_pair,
        v_item: agg.item_count as f64 * term_v,
        v_pair: agg.active_pair_count as f64 * term_v,
    })
}

/// Chance-constrained profit of knapsack `k`.
pub fn knapsack_cc_profit(
    instance: &Instance,
    assignment: &Assignment,
    k: usize,
    chance: &ChanceParams,
) -> Result<f64> {
    check_shape(instance, assignment)?;
    check_knapsack_index(instance, k)?;
    Ok(cc_profit_from_aggregates(assignment, k, chance))
}

fn cc_profit_from_aggregates(assignment: &Assignment, k: usize, chance: &ChanceParams) -> f64 {
    let agg = assignment.aggregates(k);
    let term_v = chance.term_variance();
    let variance = (agg.item_count + agg.active_pair_count) as f64 * term_v;
    let mu = agg.mu_item + agg.mu_pair;
    mu - chance.tail_factor() * variance.sqrt()
}

/// Fitness mode of an individual knapsack task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaskFitnessMode {
    /// Expected profit (no variance discount).
    #[default]
    Expected,
    /// Chance-constrained profit.
    Chebyshev,
}

impl std::str::FromStr for TaskFitnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expected" => Ok(TaskFitnessMode::Expected),
            "chebyshev" => Ok(TaskFitnessMode::Chebyshev),
            other => Err(Error::invalid(format!(
                "unknown task fitness mode '{other}' (expected expected|chebyshev)"
            ))),
        }
    }
}

/// Per-knapsack task fitness: the (mode-dependent) profit when the
/// capacity holds strictly, otherwise the negative overload `C_k - w_k`.
pub fn task_fitness(
    instance: &Instance,
    assignment: &Assignment,
    k: usize,
    mode: TaskFitnessMode,
    chance: &ChanceParams,
) -> Result<f64> {
    check_shape(instance, assignment)?;
    check_knapsack_index(instance, k)?;
    Ok(task_fitness_unchecked(instance, assignment, k, mode, chance))
}

pub(crate) fn task_fitness_unchecked(
    instance: &Instance,
    assignment: &Assignment,
    k: usize,
    mode: TaskFitnessMode,
    chance: &ChanceParams,
) -> f64 {
    let agg = assignment.aggregates(k);
    let capacity = instance.capacity(k);
    if (agg.weight as f64) < capacity {
        match mode {
            TaskFitnessMode::Expected => agg.mu_item + agg.mu_pair,
            TaskFitnessMode::Chebyshev => cc_profit_from_aggregates(assignment, k, chance),
        }
    } else {
        capacity - agg.weight as f64
    }
}

/// Whole-solution fitness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessValue {
    /// Sum over knapsacks of chance-constrained profit or overload penalty.
    pub value: f64,
    /// True iff every knapsack satisfies `w_k < C_k` strictly.
    pub feasible: bool,
}

impl FitnessValue {
    /// Boundary preference: higher value wins; at exactly equal value a
    /// feasible solution beats an infeasible one.
    pub fn preferred_over(&self, other: &FitnessValue) -> bool {
        self.value > other.value
            || (self.value == other.value && self.feasible && !other.feasible)
    }
}

/// Fitness of a whole solution: per knapsack, the chance-constrained
/// profit when feasible, else the negative overload; summed over all
/// knapsacks.
pub fn solution_fitness(
    instance: &Instance,
    assignment: &Assignment,
    chance: &ChanceParams,
) -> Result<FitnessValue> {
    check_shape(instance, assignment)?;
    Ok(solution_fitness_unchecked(instance, assignment, chance))
}

pub(crate) fn solution_fitness_unchecked(
    instance: &Instance,
    assignment: &Assignment,
    chance: &ChanceParams,
) -> FitnessValue {
    let mut value = 0.0;
    let mut feasible = true;
    for k in 1..=instance.knapsack_count() {
        let agg = assignment.aggregates(k);
        let capacity = instance.capacity(k);
        if (agg.weight as f64) < capacity {
            value += cc_profit_from_aggregates(assignment, k, chance);
        } else {
            value += capacity - agg.weight as f64;
            feasible = false;
        }
    }
    FitnessValue { value, feasible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, Correlation, Instance};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_instance() -> Instance {
        Instance::new(
            "tiny-3",
            vec![2, 4, 5],
            vec![6.0, 8.0, 10.0],
            vec![(0, 1, 4.0), (1, 2, 6.0)],
            vec![4.4, 4.4],
        )
        .unwrap()
    }

    #[test]
    fn term_variance_is_third_of_delta_squared() {
        assert_eq!(per_term_variance(0.0), 0.0);
        assert_eq!(per_term_variance(3.0), 3.0);
        assert!((per_term_variance(25.0) - 625.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn chebyshev_estimate_matches_closed_forms() {
        assert_eq!(chebyshev_estimate(100.0, 0.0, 0.99).unwrap(), 100.0);
        assert!((chebyshev_estimate(100.0, 4.0, 0.9).unwrap() - 94.0).abs() < 1e-12);
        assert!((chebyshev_estimate(18.0, 9.0, 0.9).unwrap() - 9.0).abs() < 1e-12);
        assert!(chebyshev_estimate(1.0, 1.0, 0.5).is_err());
        assert!(chebyshev_estimate(1.0, 1.0, 1.0).is_err());
        assert!(chebyshev_estimate(1.0, -1.0, 0.9).is_err());
    }

    #[test]
    fn chance_params_validate_bounds() {
        assert!(ChanceParams::new(25.0, 0.9).is_ok());
        assert!(ChanceParams::new(-1.0, 0.9).is_err());
        assert!(ChanceParams::new(25.0, 0.5).is_err());
        assert!(ChanceParams::new(25.0, 1.0).is_err());
    }

    #[test]
    fn moments_of_loaded_knapsack() {
        let inst = tiny_instance();
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 1, 0]).unwrap();
        let chance = ChanceParams::new(3.0, 0.9).unwrap();
        let m = knapsack_moments(&inst, &a, 1, &chance).unwrap();
        assert_eq!(m.mu_item, 14.0);
        assert_eq!(m.mu_pair, 4.0);
        assert_eq!(m.v_item, 6.0);
        assert_eq!(m.v_pair, 3.0);

        let empty = knapsack_moments(&inst, &a, 2, &chance).unwrap();
        assert_eq!(empty.mu(), 0.0);
        assert_eq!(empty.variance(), 0.0);

        assert!(knapsack_moments(&inst, &a, 0, &chance).is_err());
        assert!(knapsack_moments(&inst, &a, 3, &chance).is_err());
    }

    #[test]
    fn doubling_delta_quadruples_variance() {
        let inst = tiny_instance();
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 1, 2]).unwrap();
        let c1 = ChanceParams::new(3.0, 0.9).unwrap();
        let c2 = ChanceParams::new(6.0, 0.9).unwrap();
        let m1 = knapsack_moments(&inst, &a, 1, &c1).unwrap();
        let m2 = knapsack_moments(&inst, &a, 1, &c2).unwrap();
        assert_eq!(m1.mu_item, m2.mu_item);
        assert_eq!(m1.mu_pair, m2.mu_pair);
        assert!((m2.v_item - 4.0 * m1.v_item).abs() < 1e-12);
        assert!((m2.v_pair - 4.0 * m1.v_pair).abs() < 1e-12);
    }

    #[test]
    fn cc_profit_single_item_knapsack() {
        let inst = tiny_instance();
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 0, 0]).unwrap();
        let chance = ChanceParams::new(3.0, 0.9).unwrap();
        let p = knapsack_cc_profit(&inst, &a, 1, &chance).unwrap();
        let expect = 6.0 - 3.0 * 3.0f64.sqrt();
        assert!((p - expect).abs() < 1e-12, "{p} vs {expect}");
    }

    #[test]
    fn zero_delta_reduces_to_deterministic_profit() {
        let inst = tiny_instance();
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 1, 0]).unwrap();
        let chance = ChanceParams::new(0.0, 0.9).unwrap();
        let p = knapsack_cc_profit(&inst, &a, 1, &chance).unwrap();
        assert_eq!(p, 18.0);
    }

    #[test]
    fn task_fitness_modes_and_penalty() {
        let inst = tiny_instance();
        let chance = ChanceParams::new(3.0, 0.9).unwrap();
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 1, 0]).unwrap();
        // Knapsack 1 holds weight 6 >= 4.4: overloaded regardless of profits.
        let g = task_fitness(&inst, &a, 1, TaskFitnessMode::Expected, &chance).unwrap();
        assert!((g - (4.4 - 6.0)).abs() < 1e-12);

        let b = crate::solution::Assignment::from_slots(&inst, vec![1, 0, 0]).unwrap();
        let g = task_fitness(&inst, &b, 1, TaskFitnessMode::Expected, &chance).unwrap();
        assert_eq!(g, 6.0);
        let g = task_fitness(&inst, &b, 2, TaskFitnessMode::Expected, &chance).unwrap();
        assert_eq!(g, 0.0);
        let g = task_fitness(&inst, &b, 1, TaskFitnessMode::Chebyshev, &chance).unwrap();
        assert!((g - (6.0 - 3.0 * 3.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn expected_task_fitness_with_pair() {
        // Feasible two-item knapsack: expected mode sums mu_item + mu_pair.
        let inst = Instance::new(
            "wide",
            vec![2, 4, 5],
            vec![6.0, 8.0, 10.0],
            vec![(0, 1, 4.0), (1, 2, 6.0)],
            vec![20.0, 20.0],
        )
        .unwrap();
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 1, 0]).unwrap();
        let chance = ChanceParams::new(3.0, 0.9).unwrap();
        let g = task_fitness(&inst, &a, 1, TaskFitnessMode::Expected, &chance).unwrap();
        assert_eq!(g, 18.0);
    }

    #[test]
    fn solution_fitness_on_tiny_instance() {
        let inst = tiny_instance();
        let chance = ChanceParams::new(3.0, 0.9).unwrap();

        let empty = crate::solution::Assignment::empty(&inst);
        let f = solution_fitness(&inst, &empty, &chance).unwrap();
        assert_eq!(f.value, 0.0);
        assert!(f.feasible);

        let best = crate::solution::Assignment::from_slots(&inst, vec![1, 2, 0]).unwrap();
        let f = solution_fitness(&inst, &best, &chance).unwrap();
        let expect = 14.0 - 6.0 * 3.0f64.sqrt();
        assert!((f.value - expect).abs() < 1e-12);
        assert!(f.feasible);
    }

    #[test]
    fn overload_only_solution_is_pure_penalty() {
        let inst = Instance::new(
            "small-cap",
            vec![3, 2],
            vec![5.0, 5.0],
            vec![],
            vec![5.0, 5.0],
        )
        .unwrap();
        let chance = ChanceParams::new(0.0, 0.9).unwrap();
        // Both items in knapsack 1: weight 5 >= 5 overload by 0 is still
        // infeasible (strict inequality); use weight 10 vs capacity 5.
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 1]).unwrap();
        let f = solution_fitness(&inst, &a, &chance).unwrap();
        assert_eq!(f.value, 0.0);
        assert!(!f.feasible);

        let inst2 = Instance::new(
            "small-cap2",
            vec![6, 4],
            vec![5.0, 5.0],
            vec![],
            vec![5.0, 5.0],
        )
        .unwrap();
        let a2 = crate::solution::Assignment::from_slots(&inst2, vec![1, 0]).unwrap();
        let f2 = solution_fitness(&inst2, &a2, &chance).unwrap();
        assert_eq!(f2.value, -1.0);
        assert!(!f2.feasible);
    }

    #[test]
    fn fitness_decreases_in_alpha_and_delta() {
        let inst = generate_instance(30, 3, Correlation::Weak, 0.3, 13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let slots: Vec<u16> = (0..30).map(|_| rng.random_range(0..=3)).collect();
        let a = crate::solution::Assignment::from_slots(&inst, slots).unwrap();

        let mut last = f64::INFINITY;
        for alpha in [0.6, 0.75, 0.9, 0.99] {
            let chance = ChanceParams::new(10.0, alpha).unwrap();
            let f = solution_fitness(&inst, &a, &chance).unwrap();
            assert!(f.value < last, "alpha={alpha}");
            last = f.value;
        }

        let mut last = f64::INFINITY;
        for delta in [1.0, 5.0, 20.0, 60.0] {
            let chance = ChanceParams::new(delta, 0.9).unwrap();
            let f = solution_fitness(&inst, &a, &chance).unwrap();
            assert!(f.value < last, "delta={delta}");
            last = f.value;
        }
    }

    #[test]
    fn fitness_equals_sum_of_chebyshev_task_fitness_when_feasible() {
        let inst = generate_instance(40, 4, Correlation::Strong, 0.25, 8).unwrap();
        let chance = ChanceParams::new(25.0, 0.9).unwrap();
        // Sparse assignment keeps every knapsack feasible.
        let mut slots = vec![0u16; 40];
        for (i, slot) in slots.iter_mut().enumerate().take(8) {
            *slot = (i % 4) as u16 + 1;
        }
        let a = crate::solution::Assignment::from_slots(&inst, slots).unwrap();
        let f = solution_fitness(&inst, &a, &chance).unwrap();
        assert!(f.feasible);
        let sum: f64 = (1..=4)
            .map(|k| task_fitness(&inst, &a, k, TaskFitnessMode::Chebyshev, &chance).unwrap())
            .sum();
        assert_eq!(f.value, sum);
    }

    #[test]
    fn eq4_factor_is_reciprocal() {
        let inst = tiny_instance();
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 0, 0]).unwrap();
        let eq3 = ChanceParams::new(3.0, 0.9).unwrap();
        let eq4 = ChanceParams::new(3.0, 0.9)
            .unwrap()
            .with_cheb_factor(ChebFactor::Eq4);
        let p3 = knapsack_cc_profit(&inst, &a, 1, &eq3).unwrap();
        let p4 = knapsack_cc_profit(&inst, &a, 1, &eq4).unwrap();
        assert!((p3 - (6.0 - 3.0 * 3.0f64.sqrt())).abs() < 1e-12);
        assert!((p4 - (6.0 - 3.0f64.sqrt() / 3.0)).abs() < 1e-12);
        assert!(p4 > p3);
    }

    #[test]
    fn twopoint_model_triples_variance() {
        let uniform = ChanceParams::new(3.0, 0.9).unwrap();
        let twopoint = ChanceParams::new(3.0, 0.9)
            .unwrap()
            .with_dispersion_model(DispersionModel::TwoPoint);
        assert_eq!(uniform.term_variance(), 3.0);
        assert_eq!(twopoint.term_variance(), 9.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let inst = tiny_instance();
        let other = generate_instance(5, 2, Correlation::Weak, 0.5, 1).unwrap();
        let a = crate::solution::Assignment::empty(&other);
        let chance = ChanceParams::new(3.0, 0.9).unwrap();
        assert!(solution_fitness(&inst, &a, &chance).is_err());
    }

    /// Monte Carlo check of the Chebyshev guarantee: sampling every
    /// active term uniform on `[mu - delta, mu + delta]`, the realised
    /// knapsack profit exceeds the estimate far more often than alpha.
    #[test]
    fn chebyshev_estimate_is_conservative_under_sampling() {
        let inst = tiny_instance();
        let a = crate::solution::Assignment::from_slots(&inst, vec![1, 1, 0]).unwrap();
        let delta = 3.0;
        let alpha = 0.9;
        let chance = ChanceParams::new(delta, alpha).unwrap();
        // Capacity is ignored here: the estimate concerns profit only.
        let estimate = knapsack_cc_profit(&inst, &a, 1, &chance).unwrap();

        let terms = [6.0, 8.0, 4.0]; // mu_1, mu_2, pair (1,2)
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let samples = 100_000;
        let mut hits = 0u32;
        for _ in 0..samples {
            let total: f64 = terms
                .iter()
                .map(|mu| mu + rng.random_range(-delta..=delta))
                .sum();
            if total >= estimate {
                hits += 1;
            }
        }
        let empirical = hits as f64 / samples as f64;
        assert!(empirical >= alpha, "empirical coverage {empirical} < {alpha}");
    }
}
