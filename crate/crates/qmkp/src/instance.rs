//! QMKP instance data model, synthetic generation and the on-disk format.
//!
//! An instance has `n` items with integer weights and expected linear
//! profits, a sparse symmetric map of strictly positive expected pair
//! profits, and `m` equal-capacity knapsacks. Capacities derive from the
//! total item weight: each knapsack gets `0.8 * sum(w) / m`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Profit-weight correlation of generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correlation {
    /// Item profit drawn uniformly from `[max(1, w - 25), w + 25]`.
    Weak,
    /// Item profit fixed to `w + 25`.
    Strong,
}

impl Correlation {
    pub fn label(self) -> &'static str {
        match self {
            Correlation::Weak => "weak",
            Correlation::Strong => "strong",
        }
    }
}

impl std::str::FromStr for Correlation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weak" => Ok(Correlation::Weak),
            "strong" => Ok(Correlation::Strong),
            other => Err(Error::invalid(format!(
                "unknown correlation '{other}' (expected weak|strong)"
            ))),
        }
    }
}

/// A quadratic multiple knapsack instance.
///
/// Pair profits are stored sparsely: absent pairs contribute neither
/// profit nor variance. The symmetric adjacency view is precomputed so
/// that per-item queries run in O(degree).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    label: String,
    weights: Vec<u64>,
    item_profits: Vec<f64>,
    /// Canonical pair list, `i < j`, both 0-based, profit > 0.
    pairs: Vec<(usize, usize, f64)>,
    /// Symmetric adjacency: `adjacency[i]` lists `(j, profit)` for every
    /// active pair touching `i`.
    adjacency: Vec<Vec<(usize, f64)>>,
    capacities: Vec<f64>,
}

/// Round to six decimal places, the precision of the file format.
pub(crate) fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Equal per-knapsack capacities: `0.8 * total_weight / m` each.
pub fn derive_capacities(total_weight: f64, m: usize) -> Result<Vec<f64>> {
    if total_weight <= 0.0 {
        return Err(Error::invalid("total_weight must be positive"));
    }
    if m == 0 {
        return Err(Error::invalid("knapsack count m must be at least 1"));
    }
    Ok(vec![0.8 * total_weight / m as f64; m])
}

/// Expected pair profit of two items: the geometric mean of their weights.
pub fn geometric_mean_pair_profit(w_i: u64, w_j: u64) -> Result<f64> {
    if w_i == 0 || w_j == 0 {
        return Err(Error::invalid("weights must be positive"));
    }
    Ok(((w_i as f64) * (w_j as f64)).sqrt())
}

impl Instance {
    /// Build an instance from raw parts, validating every invariant.
    ///
    /// `pair_profits` entries may use either index order; they are
    /// canonicalised to `i < j`. Duplicate pairs (in either order),
    /// diagonal entries and nonpositive profits are rejected.
    pub fn new(
        label: impl Into<String>,
        weights: Vec<u64>,
        item_profits: Vec<f64>,
        pair_profits: Vec<(usize, usize, f64)>,
        capacities: Vec<f64>,
    ) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::invalid("instance needs at least one item"));
        }
        if capacities.is_empty() {
            return Err(Error::invalid("instance needs at least one knapsack"));
        }
        if item_profits.len() != n {
            return Err(Error::invalid(format!(
                "item_profits length {} != item count {}",
                item_profits.len(),
                n
            )));
        }
        if weights.iter().any(|&w| w == 0) {
            return Err(Error::invalid("all weights must be strictly positive"));
        }
        if item_profits.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::invalid("item profits must be nonnegative"));
        }
        if capacities.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::invalid("capacities must be strictly positive"));
        }

        let mut pairs = Vec::with_capacity(pair_profits.len());
        for (a, b, p) in pair_profits {
            if a == b {
                return Err(Error::invalid(format!("diagonal pair ({a}, {b})")));
            }
            if a >= n || b >= n {
                return Err(Error::invalid(format!("pair ({a}, {b}) out of range")));
            }
            if !(p > 0.0) {
                return Err(Error::invalid(format!(
                    "pair ({a}, {b}) has nonpositive profit {p}"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            pairs.push((i, j, p));
        }
        pairs.sort_unstable_by_key(|&(i, j, _)| (i, j));
        if pairs.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::invalid("duplicate pair entry"));
        }

        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, p) in &pairs {
            adjacency[i].push((j, p));
            adjacency[j].push((i, p));
        }

        Ok(Instance {
            label: label.into(),
            weights,
            item_profits,
            pairs,
            adjacency,
            capacities,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Item count `n`.
    pub fn item_count(&self) -> usize {
        self.weights.len()
    }

    /// Knapsack count `m`.
    pub fn knapsack_count(&self) -> usize {
        self.capacities.len()
    }

    pub fn weight(&self, item: usize) -> u64 {
        self.weights[item]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn total_weight(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn item_profit(&self, item: usize) -> f64 {
        self.item_profits[item]
    }

    pub fn item_profits(&self) -> &[f64] {
        &self.item_profits
    }

    /// Capacity of knapsack `k`, 1-based.
    pub fn capacity(&self, k: usize) -> f64 {
        self.capacities[k - 1]
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacities
    }

    /// Active pairs in canonical `(i, j, profit)` form with `i < j`.
    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Neighbours of `item` across active pairs, with pair profits.
    pub fn neighbors(&self, item: usize) -> &[(usize, f64)] {
        &self.adjacency[item]
    }

    /// Expected pair profit of `(a, b)` in either index order; absent
    /// pairs are deterministic zero.
    pub fn pair_profit(&self, a: usize, b: usize) -> f64 {
        let (from, to) = if self.adjacency[a].len() <= self.adjacency[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.adjacency[from]
            .iter()
            .find(|&&(j, _)| j == to)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Pairwise density as a percentage of all unordered item pairs.
    pub fn density_percent(&self) -> f64 {
        let n = self.item_count();
        let possible = n * (n - 1) / 2;
        if possible == 0 {
            0.0
        } else {
            100.0 * self.pair_count() as f64 / possible as f64
        }
    }

    /// Same items, `m` knapsacks with freshly derived equal capacities.
    pub fn with_knapsacks(&self, m: usize) -> Result<Instance> {
        let caps = derive_capacities(self.total_weight() as f64, m)?;
        let mut out = self.clone();
        out.capacities = caps.into_iter().map(round6).collect();
        Ok(out)
    }
}

/// Generate a synthetic instance.
///
/// Weights are integers uniform on `[1, 100]`; item profits follow the
/// correlation rule; exactly `round(density * n(n-1)/2)` pairs, chosen
/// uniformly at random, receive the geometric-mean pair profit. All real
/// values are quantised to six decimals so the file format round-trips
/// exactly. Deterministic for a fixed seed.
pub fn generate_instance(
    n: usize,
    m: usize,
    correlation: Correlation,
    density: f64,
    seed: u64,
) -> Result<Instance> {
    if n == 0 {
        return Err(Error::invalid("item count n must be at least 1"));
    }
    if m == 0 {
        return Err(Error::invalid("knapsack count m must be at least 1"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid("density must lie in (0, 1]"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let weights: Vec<u64> = (0..n).map(|_| rng.random_range(1..=100u64)).collect();
    let item_profits: Vec<f64> = weights
        .iter()
        .map(|&w| match correlation {
            Correlation::Weak => {
                let lo = w.saturating_sub(25).max(1);
                rng.random_range(lo..=w + 25) as f64
            }
            Correlation::Strong => (w + 25) as f64,
        })
        .collect();

    let mut all_pairs: Vec<(usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            all_pairs.push((i, j));
        }
    }
    let target = (density * all_pairs.len() as f64).round() as usize;
    // Partial Fisher-Yates: the first `target` entries are a uniform sample.
    for t in 0..target {
        let pick = rng.random_range(t..all_pairs.len());
        all_pairs.swap(t, pick);
    }
    let mut pair_profits: Vec<(usize, usize, f64)> = all_pairs[..target]
        .iter()
        .map(|&(i, j)| {
            let p = round6(geometric_mean_pair_profit(weights[i], weights[j]).expect("w > 0"));
            (i, j, p)
        })
        .collect();
    pair_profits.sort_unstable_by_key(|&(i, j, _)| (i, j));

    let capacities: Vec<f64> = derive_capacities(weights.iter().sum::<u64>() as f64, m)?
        .into_iter()
        .map(round6)
        .collect();

    let label = format!("{}-{}", correlation.label(), n);
    Instance::new(label, weights, item_profits, pair_profits, capacities)
}

/// Serialise an instance in the plain-text exchange format.
///
/// Line 1: `label n m density_percent`; line 2: capacities; line 3:
/// weights; line 4: item profits; then one `i j p` triple per active
/// pair (1-based, `i < j`). Reals carry six decimals.
pub fn format_instance(instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} {:.6}",
        instance.label,
        instance.item_count(),
        instance.knapsack_count(),
        instance.density_percent()
    );
    let caps: Vec<String> = instance
        .capacities
        .iter()
        .map(|c| format!("{c:.6}"))
        .collect();
    let _ = writeln!(out, "{}", caps.join(" "));
    let ws: Vec<String> = instance.weights.iter().map(|w| w.to_string()).collect();
    let _ = writeln!(out, "{}", ws.join(" "));
    let ps: Vec<String> = instance
        .item_profits
        .iter()
        .map(|p| format!("{p:.6}"))
        .collect();
    let _ = writeln!(out, "{}", ps.join(" "));
    for &(i, j, p) in &instance.pairs {
        let _ = writeln!(out, "{} {} {p:.6}", i + 1, j + 1);
    }
    out
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_instance(instance))?;
    Ok(())
}

/// Parse an instance from its text form. Errors carry 1-based line numbers.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text.lines().enumerate();

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::parse(
            line_no + 1,
            format!("header needs 'label n m density_percent', got {} fields", fields.len()),
        ));
    }
    let label = fields[0].to_string();
    let n: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(line_no + 1, "bad item count"))?;
    let m: usize = fields[2]
        .parse()
        .map_err(|_| Error::parse(line_no + 1, "bad knapsack count"))?;
    let density_percent: f64 = fields[3]
        .parse()
        .map_err(|_| Error::parse(line_no + 1, "bad density"))?;
    if n == 0 || m == 0 {
        return Err(Error::parse(line_no + 1, "n and m must be at least 1"));
    }

    let (line_no, cap_line) = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing capacities line"))?;
    let capacities = parse_reals(cap_line, line_no + 1)?;
    if capacities.len() != m {
        return Err(Error::parse(
            line_no + 1,
            format!("expected {m} capacities, got {}", capacities.len()),
        ));
    }

    let (line_no, w_line) = lines
        .next()
        .ok_or_else(|| Error::parse(3, "missing weights line"))?;
    let weights: Vec<u64> = w_line
        .split_whitespace()
        .map(|t| {
            t.parse::<u64>()
                .map_err(|_| Error::parse(line_no + 1, format!("bad weight '{t}'")))
        })
        .collect::<Result<_>>()?;
    if weights.len() != n {
        return Err(Error::parse(
            line_no + 1,
            format!("expected {n} weights, got {}", weights.len()),
        ));
    }

    let (line_no, p_line) = lines
        .next()
        .ok_or_else(|| Error::parse(4, "missing item profits line"))?;
    let item_profits = parse_reals(p_line, line_no + 1)?;
    if item_profits.len() != n {
        return Err(Error::parse(
            line_no + 1,
            format!("expected {n} item profits, got {}", item_profits.len()),
        ));
    }

    let mut pair_profits: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen_lines = 4;
    for (line_no, line) in lines {
        seen_lines = line_no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line_no + 1,
                format!("pair line needs 'i j p', got {} fields", fields.len()),
            ));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no + 1, "bad pair index"))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| Error::parse(line_no + 1, "bad pair index"))?;
        let p: f64 = fields[2]
            .parse()
            .map_err(|_| Error::parse(line_no + 1, "bad pair profit"))?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::parse(
                line_no + 1,
                format!("pair index out of range 1..={n}"),
            ));
        }
        if i >= j {
            return Err(Error::parse(line_no + 1, "pair indices must satisfy i < j"));
        }
        if pair_profits.iter().any(|&(a, b, _)| (a, b) == (i - 1, j - 1)) {
            return Err(Error::parse(line_no + 1, format!("duplicate pair entry {i} {j}")));
        }
        pair_profits.push((i - 1, j - 1, p));
    }

    let possible = n * (n - 1) / 2;
    let expected_pairs = (density_percent / 100.0 * possible as f64).round() as usize;
    if expected_pairs != pair_profits.len() {
        return Err(Error::parse(
            seen_lines,
            format!(
                "density/pair-count mismatch: header implies {expected_pairs} pairs, found {}",
                pair_profits.len()
            ),
        ));
    }

    Instance::new(label, weights, item_profits, pair_profits, capacities)
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let text = fs::read_to_string(path)?;
    parse_instance(&text)
}

fn parse_reals(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(line_no, format!("bad real '{t}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacities_are_equal_shares() {
        assert_eq!(derive_capacities(100.0, 2).unwrap(), vec![40.0, 40.0]);
        assert_eq!(derive_capacities(100.0, 1).unwrap(), vec![80.0]);
        let caps = derive_capacities(550.0, 3).unwrap();
        assert_eq!(caps.len(), 3);
        for c in &caps {
            assert!((c - 146.66666666666666).abs() < 1e-12);
        }
        assert!(derive_capacities(100.0, 0).is_err());
        assert!(derive_capacities(0.0, 2).is_err());
    }

    #[test]
    fn capacity_sum_matches_budget_share() {
        for m in 1..=64 {
            let caps = derive_capacities(1234.5, m).unwrap();
            let sum: f64 = caps.iter().sum();
            assert!(
                (sum - 0.8 * 1234.5).abs() / (0.8 * 1234.5) < 1e-9,
                "m={m} sum={sum}"
            );
        }
    }

    #[test]
    fn pair_profit_is_geometric_mean() {
        assert_eq!(geometric_mean_pair_profit(4, 9).unwrap(), 6.0);
        assert_eq!(geometric_mean_pair_profit(25, 25).unwrap(), 25.0);
        assert_eq!(geometric_mean_pair_profit(2, 8).unwrap(), 4.0);
        assert!(geometric_mean_pair_profit(0, 5).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(40, 3, Correlation::Weak, 0.25, 7).unwrap();
        let b = generate_instance(40, 3, Correlation::Weak, 0.25, 7).unwrap();
        assert_eq!(format_instance(&a), format_instance(&b));
        let c = generate_instance(40, 3, Correlation::Weak, 0.25, 8).unwrap();
        assert_ne!(format_instance(&a), format_instance(&c));
    }

    #[test]
    fn density_gives_exact_pair_count() {
        let inst = generate_instance(100, 2, Correlation::Weak, 0.25, 1).unwrap();
        assert_eq!(inst.pair_count(), 1238); // round(0.25 * 4950)
    }

    #[test]
    fn strong_correlation_offsets_profit_by_25() {
        for seed in 0..5 {
            let inst = generate_instance(60, 2, Correlation::Strong, 0.25, seed).unwrap();
            for i in 0..inst.item_count() {
                assert_eq!(inst.item_profit(i), (inst.weight(i) + 25) as f64);
            }
        }
    }

    #[test]
    fn weak_correlation_stays_in_band() {
        let inst = generate_instance(200, 2, Correlation::Weak, 0.1, 3).unwrap();
        for i in 0..inst.item_count() {
            let w = inst.weight(i) as f64;
            let p = inst.item_profit(i);
            assert!(p >= (w - 25.0).max(1.0) && p <= w + 25.0, "item {i}: w={w} p={p}");
        }
    }

    #[test]
    fn pair_lookup_is_symmetric() {
        let inst = generate_instance(30, 2, Correlation::Weak, 0.5, 11).unwrap();
        for &(i, j, p) in inst.pairs() {
            assert_eq!(inst.pair_profit(i, j), p);
            assert_eq!(inst.pair_profit(j, i), p);
        }
        assert_eq!(inst.pair_profit(0, 0), 0.0);
    }

    #[test]
    fn round_trip_preserves_instance() {
        for seed in 0..10 {
            let inst = generate_instance(25, 3, Correlation::Weak, 0.3, seed).unwrap();
            let text = format_instance(&inst);
            let back = parse_instance(&text).unwrap();
            assert_eq!(inst, back, "seed {seed}");
        }
    }

    #[test]
    fn out_of_range_pair_index_is_rejected_with_line() {
        let inst = generate_instance(4, 2, Correlation::Weak, 1.0, 0).unwrap();
        let mut text = format_instance(&inst);
        text.push_str("2 5 1.000000\n");
        match parse_instance(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 11);
                assert!(message.contains("out of range"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn density_mismatch_is_rejected() {
        // Header claims 25% density over 3 items (=1 pair rounded) but no
        // pair lines follow.
        let text = "t 3 1 25.000000\n10.000000\n1 2 3\n1.000000 2.000000 3.000000\n";
        match parse_instance(text) {
            Err(Error::Parse { message, .. }) => {
                assert!(message.contains("density/pair-count mismatch"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_pair_is_rejected() {
        let text = "t 3 1 66.666667\n10.000000\n1 2 3\n1.000000 2.000000 3.000000\n\
                    1 2 1.500000\n1 2 2.500000\n";
        match parse_instance(text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 6);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reknapsacking_rederives_capacities() {
        let inst = generate_instance(50, 2, Correlation::Weak, 0.25, 4).unwrap();
        let five = inst.with_knapsacks(5).unwrap();
        assert_eq!(five.knapsack_count(), 5);
        let expected = round6(0.8 * inst.total_weight() as f64 / 5.0);
        for k in 1..=5 {
            assert_eq!(five.capacity(k), expected);
        }
        assert_eq!(five.weights(), inst.weights());
    }
}
