//! Exact exhaustive solver for tiny instances, used as ground truth.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::profit::{solution_fitness_unchecked, ChanceParams};
use crate::solution::Assignment;

/// Refuse enumerations beyond this many assignments.
pub const SEARCH_SPACE_CAP: u64 = 10_000_000;

/// Result of an exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Optimal solution fitness value.
    pub best_value: f64,
    /// The lexicographically smallest maximiser.
    pub best_assignment: Assignment,
    /// Number of assignments evaluated, always `(m+1)^n`.
    pub enumerated: u64,
}

/// Evaluate every assignment in `{0..m}^n` and return the maximum
/// fitness value with its lexicographically smallest maximiser.
pub fn exhaustive_best(instance: &Instance, chance: &ChanceParams) -> Result<OracleResult> {
    let n = instance.item_count();
    let states = instance.knapsack_count() as u64 + 1;

    let mut total: u64 = 1;
    for _ in 0..n {
        total = total.checked_mul(states).unwrap_or(u64::MAX);
        if total > SEARCH_SPACE_CAP {
            return Err(Error::SearchSpaceTooLarge {
                actual: (states as f64).powi(n as i32),
                cap: SEARCH_SPACE_CAP,
            });
        }
    }

    // Odometer over the slot vector in lexicographic order (last position
    // varies fastest); incremental moves keep evaluation cheap. Strict
    // improvement keeps the first — lexicographically smallest — maximiser.
    let mut current = Assignment::empty(instance);
    let mut best = solution_fitness_unchecked(instance, &current, chance);
    let mut best_slots = current.slots().to_vec();
    let mut enumerated = 1u64;

    let max_state = instance.knapsack_count() as u16;
    'enumerate: loop {
        let mut pos = n;
        loop {
            if pos == 0 {
                break 'enumerate;
            }
            pos -= 1;
            let state = current.slot(pos);
            if state < max_state {
                current
                    .apply_move(instance, pos, state + 1)
                    .expect("state in range");
                break;
            }
            current.apply_move(instance, pos, 0).expect("state 0 valid");
        }
        let fitness = solution_fitness_unchecked(instance, &current, chance);
        enumerated += 1;
        if fitness.value > best.value {
            best = fitness;
            best_slots.copy_from_slice(current.slots());
        }
    }

    Ok(OracleResult {
        best_value: best.value,
        best_assignment: Assignment::from_slots(instance, best_slots)?,
        enumerated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_instance, Correlation};
    use crate::profit::solution_fitness;
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
    fn deterministic_tiny_instance() {
        let inst = tiny_instance();
        let chance = ChanceParams::new(0.0, 0.9).unwrap();
        let result = exhaustive_best(&inst, &chance).unwrap();
        assert_eq!(result.enumerated, 27);
        assert_eq!(result.best_value, 14.0);
        assert_eq!(result.best_assignment.slots(), &[1, 2, 0]);
    }

    #[test]
    fn stochastic_tiny_instance() {
        let inst = tiny_instance();
        let chance = ChanceParams::new(3.0, 0.9).unwrap();
        let result = exhaustive_best(&inst, &chance).unwrap();
        let expect = 14.0 - 6.0 * 3.0f64.sqrt();
        assert!((result.best_value - expect).abs() < 1e-12);
        assert_eq!(result.best_assignment.slots(), &[1, 2, 0]);
    }

    #[test]
    fn oversized_item_forces_empty_solution() {
        let inst = Instance::new("one", vec![1], vec![5.0], vec![], vec![0.8]).unwrap();
        let chance = ChanceParams::new(0.0, 0.9).unwrap();
        let result = exhaustive_best(&inst, &chance).unwrap();
        assert_eq!(result.enumerated, 2);
        assert_eq!(result.best_value, 0.0);
        assert_eq!(result.best_assignment.slots(), &[0]);
    }

    #[test]
    fn refuses_oversized_search_space() {
        let inst = generate_instance(40, 3, Correlation::Weak, 0.25, 1).unwrap();
        let chance = ChanceParams::new(0.0, 0.9).unwrap();
        match exhaustive_best(&inst, &chance) {
            Err(Error::SearchSpaceTooLarge { cap, .. }) => {
                assert_eq!(cap, SEARCH_SPACE_CAP);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn oracle_dominates_random_assignments() {
        let inst = generate_instance(7, 2, Correlation::Weak, 0.5, 15).unwrap();
        let chance = ChanceParams::new(3.0, 0.9).unwrap();
        let oracle = exhaustive_best(&inst, &chance).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let slots: Vec<u16> = (0..7).map(|_| rng.random_range(0..=2)).collect();
            let a = Assignment::from_slots(&inst, slots).unwrap();
            let f = solution_fitness(&inst, &a, &chance).unwrap();
            assert!(f.value <= oracle.best_value + 1e-12);
        }
    }

    #[test]
    fn item_relabeling_preserves_best_value() {
        let inst = generate_instance(6, 2, Correlation::Weak, 0.5, 19).unwrap();
        // Reverse item order.
        let n = inst.item_count();
        let permuted = Instance::new(
            inst.label().to_string(),
            inst.weights().iter().rev().copied().collect(),
            inst.item_profits().iter().rev().copied().collect(),
            inst.pairs()
                .iter()
                .map(|&(i, j, p)| (n - 1 - i, n - 1 - j, p))
                .collect(),
            inst.capacities().to_vec(),
        )
        .unwrap();
        let chance = ChanceParams::new(3.0, 0.9).unwrap();
        let a = exhaustive_best(&inst, &chance).unwrap();
        let b = exhaustive_best(&permuted, &chance).unwrap();
        assert!((a.best_value - b.best_value).abs() < 1e-12);
    }
}
