// Scratch timing probe; removed before finalizing.
use std::time::Instant;

use qmkp::instance::{generate_instance, Correlation};
use qmkp::profit::{knapsack_cc_profit, ChanceParams};
use qmkp::solution::Assignment;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let instance = generate_instance(100, 2, Correlation::Weak, 0.25, 7).unwrap();
    let delta = 25.0;
    let chance = ChanceParams::new(delta, 0.9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // One random feasible assignment: states 0 with prob 1/2, else 1 or 2.
    let assignment = loop {
        let slots: Vec<u16> = (0..100)
            .map(|_| match rng.random_range(0..4u8) {
                0 | 1 => 0,
                2 => 1,
                _ => 2,
            })
            .collect();
        let a = Assignment::from_slots(&instance, slots).unwrap();
        if (1..=2).all(|k| (a.aggregates(k).weight as f64) < instance.capacity(k)) {
            break a;
        }
    };

    for k in 1..=2usize {
        let estimate = knapsack_cc_profit(&instance, &assignment, k, &chance).unwrap();
        // Collect term means: item profits + active internal pair profits.
        let mut terms: Vec<f64> = Vec::new();
        for item in 0..100 {
            if assignment.slot(item) as usize == k {
                terms.push(instance.item_profit(item));
            }
        }
        for &(i, j, p) in instance.pairs() {
            if assignment.slot(i) as usize == k && assignment.slot(j) as usize == k {
                terms.push(p);
            }
        }
        let started = Instant::now();
        let samples = 1_000_000u32;
        let mut hits = 0u32;
        for _ in 0..samples {
            let mut total = 0.0;
            for &mu in &terms {
                total += mu + rng.random_range(-delta..=delta);
            }
            if total >= estimate {
                hits += 1;
            }
        }
        println!(
            "k={k}: {} terms, estimate {:.2}, coverage {:.4}, {:.2}s",
            terms.len(),
            estimate,
            hits as f64 / samples as f64,
            started.elapsed().as_secs_f64()
        );
    }
}
