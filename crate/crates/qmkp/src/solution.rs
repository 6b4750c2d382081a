//! Assignment representation with cached per-knapsack aggregates,
//! incremental moves, profit densities and preference tables.
//!
//! An assignment is an integer vector of length `n` over `{0..m}`: value
//! `0` means unassigned, value `k` puts the item into knapsack `k`. Each
//! knapsack keeps running aggregates (weight, counts, expected profits)
//! so moves and fitness evaluations avoid full rescans.

use crate::error::{Error, Result};
use crate::instance::Instance;

/// Exact rebuild of the real-valued caches after this many moves, to
/// bound floating-point drift.
const REBUILD_INTERVAL: u32 = 100_000;

/// Running aggregates of one knapsack (or of the unassigned pool for
/// index 0, where only the counts are meaningful).
#[derive(Debug, Clone, Copy, Default)]
pub struct KnapsackAggregates {
    /// Total weight of assigned items.
    pub weight: u64,
    /// Number of assigned items.
    pub item_count: usize,
    /// Number of active profit pairs with both endpoints inside.
    pub active_pair_count: usize,
    /// Sum of expected linear profits.
    pub mu_item: f64,
    /// Sum of expected pair profits over internal active pairs.
    pub mu_pair: f64,
}

/// An item-to-knapsack assignment with cached aggregates.
#[derive(Debug, Clone)]
pub struct Assignment {
    slots: Vec<u16>,
    /// `aggregates[k]` for `k in 0..=m`; index 0 is the unassigned pool.
    aggregates: Vec<KnapsackAggregates>,
    moves_since_rebuild: u32,
}

impl Assignment {
    /// The all-unassigned solution.
    pub fn empty(instance: &Instance) -> Assignment {
        let n = instance.item_count();
        let m = instance.knapsack_count();
        let mut aggregates = vec![KnapsackAggregates::default(); m + 1];
        aggregates[0].item_count = n;
        aggregates[0].weight = instance.total_weight();
        aggregates[0].mu_item = instance.item_profits().iter().sum();
        aggregates[0].mu_pair = instance.pairs().iter().map(|&(_, _, p)| p).sum();
        aggregates[0].active_pair_count = instance.pair_count();
        Assignment {
            slots: vec![0; n],
            aggregates,
            moves_since_rebuild: 0,
        }
    }

    /// Build from explicit slot values, validating length and range.
    pub fn from_slots(instance: &Instance, slots: Vec<u16>) -> Result<Assignment> {
        if slots.len() != instance.item_count() {
            return Err(Error::invalid(format!(
                "assignment length {} != item count {}",
                slots.len(),
                instance.item_count()
            )));
        }
        let m = instance.knapsack_count() as u16;
        if let Some(&bad) = slots.iter().find(|&&s| s > m) {
            return Err(Error::invalid(format!(
                "assignment state {bad} outside 0..={m}"
            )));
        }
        let mut a = Assignment {
            slots,
            aggregates: vec![KnapsackAggregates::default(); m as usize + 1],
            moves_since_rebuild: 0,
        };
        a.rebuild_caches(instance);
        Ok(a)
    }

    pub fn item_count(&self) -> usize {
        self.slots.len()
    }

    pub fn knapsack_count(&self) -> usize {
        self.aggregates.len() - 1
    }

    /// Current state of one item: 0 or a 1-based knapsack id.
    pub fn slot(&self, item: usize) -> u16 {
        self.slots[item]
    }

    pub fn slots(&self) -> &[u16] {
        &self.slots
    }

    pub fn is_empty_solution(&self) -> bool {
        self.slots.iter().all(|&s| s == 0)
    }

    /// Aggregates of knapsack `k` (1-based) or of the unassigned pool (0).
    pub fn aggregates(&self, k: usize) -> &KnapsackAggregates {
        &self.aggregates[k]
    }

    /// Reassign `item` to `new_state`, updating caches incrementally in
    /// O(degree of the item). A move to the current state is a no-op.
    pub fn apply_move(&mut self, instance: &Instance, item: usize, new_state: u16) -> Result<()> {
        if item >= self.slots.len() {
            return Err(Error::invalid(format!("item {item} out of range")));
        }
        if new_state as usize >= self.aggregates.len() {
            return Err(Error::invalid(format!(
                "state {new_state} outside 0..={}",
                self.aggregates.len() - 1
            )));
        }
        let old = self.slots[item];
        if old == new_state {
            return Ok(());
        }

        let mut old_pair_mu = 0.0;
        let mut old_pair_count = 0usize;
        let mut new_pair_mu = 0.0;
        let mut new_pair_count = 0usize;
        for &(j, p) in instance.neighbors(item) {
            let state = self.slots[j];
            if state == old {
                old_pair_mu += p;
                old_pair_count += 1;
            }
            if state == new_state {
                new_pair_mu += p;
                new_pair_count += 1;
            }
        }

        let w = instance.weight(item);
        let mu = instance.item_profit(item);

        let from = &mut self.aggregates[old as usize];
        from.weight -= w;
        from.item_count -= 1;
        from.mu_item -= mu;
        from.mu_pair -= old_pair_mu;
        from.active_pair_count -= old_pair_count;

        let to = &mut self.aggregates[new_state as usize];
        to.weight += w;
        to.item_count += 1;
        to.mu_item += mu;
        to.mu_pair += new_pair_mu;
        to.active_pair_count += new_pair_count;

        self.slots[item] = new_state;
        self.moves_since_rebuild += 1;
        if self.moves_since_rebuild >= REBUILD_INTERVAL {
            self.rebuild_caches(instance);
        }
        Ok(())
    }

    /// Recompute every aggregate from scratch.
    pub fn rebuild_caches(&mut self, instance: &Instance) {
        for agg in &mut self.aggregates {
            *agg = KnapsackAggregates::default();
        }
        for (item, &state) in self.slots.iter().enumerate() {
            let agg = &mut self.aggregates[state as usize];
            agg.weight += instance.weight(item);
            agg.item_count += 1;
            agg.mu_item += instance.item_profit(item);
        }
        for &(i, j, p) in instance.pairs() {
            if self.slots[i] == self.slots[j] {
                let agg = &mut self.aggregates[self.slots[i] as usize];
                agg.mu_pair += p;
                agg.active_pair_count += 1;
            }
        }
        self.moves_since_rebuild = 0;
    }

    /// Text form: `n` whitespace-separated integers in `{0..m}`.
    pub fn to_text(&self) -> String {
        let parts: Vec<String> = self.slots.iter().map(|s| s.to_string()).collect();
        parts.join(" ")
    }

    /// Parse the text form against an instance.
    pub fn parse(instance: &Instance, text: &str) -> Result<Assignment> {
        let slots: Vec<u16> = text
            .split_whitespace()
            .map(|t| {
                t.parse::<u16>()
                    .map_err(|_| Error::invalid(format!("bad assignment token '{t}'")))
            })
            .collect::<Result<_>>()?;
        Assignment::from_slots(instance, slots)
    }
}

/// Profit density of placing `item` into knapsack `k` (1-based) relative
/// to the reference assignment: `(mu_i + sum of active pair profits to
/// items currently in k, excluding the item itself) / w_i`.
pub fn profit_density(
    instance: &Instance,
    reference: &Assignment,
    item: usize,
    k: usize,
) -> Result<f64> {
    if item >= instance.item_count() {
        return Err(Error::invalid(format!("item {item} out of range")));
    }
    if k == 0 || k > instance.knapsack_count() {
        return Err(Error::invalid(format!(
            "knapsack {k} outside 1..={}",
            instance.knapsack_count()
        )));
    }
    let mut pair_sum = 0.0;
    for &(j, p) in instance.neighbors(item) {
        if reference.slot(j) as usize == k {
            pair_sum += p;
        }
    }
    Ok((instance.item_profit(item) + pair_sum) / instance.weight(item) as f64)
}

/// Per-item preferred knapsacks derived from a reference solution.
#[derive(Debug, Clone)]
pub struct PreferenceTable {
    preferred: Vec<u16>,
    from_empty_reference: bool,
}

impl PreferenceTable {
    /// Preferred knapsack of `item`, always in `1..=m`.
    pub fn preferred(&self, item: usize) -> u16 {
        self.preferred[item]
    }

    pub fn len(&self) -> usize {
        self.preferred.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preferred.is_empty()
    }

    /// True when the table was seeded round-robin from an empty reference.
    pub fn from_empty_reference(&self) -> bool {
        self.from_empty_reference
    }
}

/// Build the preference table for a reference solution.
///
/// Empty reference: items are sorted by `mu_i / w_i` descending (ties:
/// lower index first) and preferences assigned cyclically over the
/// knapsacks in that order. Otherwise each item prefers the knapsack
/// maximising its profit density (ties: lowest knapsack index).
pub fn build_preference_table(instance: &Instance, reference: &Assignment) -> PreferenceTable {
    let n = instance.item_count();
    let m = instance.knapsack_count();
    let mut preferred = vec![0u16; n];

    if reference.is_empty_solution() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let da = instance.item_profit(a) / instance.weight(a) as f64;
            let db = instance.item_profit(b) / instance.weight(b) as f64;
            db.partial_cmp(&da).unwrap().then(a.cmp(&b))
        });
        for (pos, &item) in order.iter().enumerate() {
            preferred[item] = (pos % m) as u16 + 1;
        }
        PreferenceTable {
            preferred,
            from_empty_reference: true,
        }
    } else {
        for item in 0..n {
            let mut best_k = 1usize;
            let mut best_density = f64::NEG_INFINITY;
            for k in 1..=m {
                let d = profit_density(instance, reference, item, k).expect("indices in range");
                if d > best_density {
                    best_density = d;
                    best_k = k;
                }
            }
            preferred[item] = best_k as u16;
        }
        PreferenceTable {
            preferred,
            from_empty_reference: false,
        }
    }
}
