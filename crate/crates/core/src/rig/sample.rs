//! Sampling the bipartite actor–attribute graph and its projection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_power_law, PowerLawSpec, TruncationPolicy};
use crate::rng::{domain, run_blocks, substream};

/// Length of the tabulated part of the weight CDF.
const TABLE_LEN: i64 = 1 << 14;

/// Attributes sampled per parallel block.
const ROW_BLOCK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigConfig {
    /// Number of actors.
    pub n: usize,
    /// Number of attributes.
    pub m: usize,
    /// Law of the actor weights `Y`.
    pub actor_weights: PowerLawSpec,
    /// Law of the attribute weights `X`.
    pub attr_weights: PowerLawSpec,
    pub seed: u64,
}

impl RigConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(invalid(format!("n and m must be positive, got {} and {}", self.n, self.m)));
        }
        let vertices = self.n.saturating_add(self.m);
        if vertices > MAX_VERTICES {
            return Err(Error::Budget {
                estimate: vertices as f64,
                budget: MAX_VERTICES as f64,
            });
        }
        for spec in [&self.actor_weights, &self.attr_weights] {
            spec.validate()?;
            if !spec.is_nonnegative() {
                return Err(invalid("weights must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Inverse-CDF sampler for a nonnegative power law: a table for the bulk
/// and bisection on the analytic tail beyond it.
#[derive(Debug, Clone)]
pub struct WeightSampler {
    spec: PowerLawSpec,
    /// `cdf[i] = P(X <= i)`.
    cdf: Vec<f64>,
}

impl WeightSampler {
    pub fn new(spec: PowerLawSpec) -> Result<Self> {
        spec.validate()?;
        if !spec.is_nonnegative() {
            return Err(invalid("weights must be nonnegative"));
        }
        // Table the bulk; the remaining tail is inverted analytically.
        let bulk = build_power_law(&spec, &TruncationPolicy::keep_tail(TABLE_LEN))?;
        let mut acc = spec.zero_mass()?;
        let mut cdf = vec![acc];
        for t in 1..=TABLE_LEN {
            let p = bulk.prob(t);
            acc += p;
            cdf.push(acc);
            if p < 1e-16 {
                break;
            }
        }
        // Re-anchor the last entry on the exact tail to bound drift.
        let last = (cdf.len() - 1) as i64;
        cdf[last as usize] = 1.0 - spec.tail_right(last);
        Ok(Self { spec, cdf })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c < u);
        if i < self.cdf.len() {
            return i as f64;
        }
        // Smallest t with P(X > t) <= 1 - u.
        let q = 1.0 - u;
        let mut lo = (self.cdf.len() - 1) as i64;
        let mut hi = lo.max(1) * 2;
        while self.spec.tail_right(hi) > q && hi < i64::MAX / 4 {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.spec.tail_right(mid) > q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi as f64
    }
}

/// Bipartite incidence (attribute to actors) and the projected actor graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSample {
    pub n: usize,
    pub m: usize,
    pub actor_weights: Vec<f64>,
    pub attr_weights: Vec<f64>,
    /// Sorted actor lists per attribute.
    pub members: Vec<Vec<u32>>,
    /// Sorted, deduplicated neighbor lists per actor.
    pub adjacency: Vec<Vec<u32>>,
    pub degrees: Vec<u32>,
}

impl GraphSample {
    pub fn edge_count(&self) -> usize {
        self.degrees.iter().map(|&d| d as usize).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.adjacency[u as usize].binary_search(&v).is_ok()
    }

    /// One `u v` line per edge with `u < v`, 0-indexed.
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for (u, nb) in self.adjacency.iter().enumerate() {
            for &v in nb.iter().filter(|&&v| v as usize > u) {
                out.push_str(&format!("{u} {v}\n"));
            }
        }
        out
    }
}

/// Limit on `n + m`; weights and adjacency headers are held in memory.
pub const MAX_VERTICES: usize = 1 << 25;

/// Budget on projected adjacency entries (two per edge).
pub const DEFAULT_PAIR_BUDGET: f64 = 4e8;

/// Expected number of ordered actor pairs produced by the projection,
/// `sum_i e_i^2` with `e_i` the expected size of attribute `i`.
pub fn projection_estimate(x: &[f64], y: &[f64]) -> f64 {
    let scale = ((x.len() as f64) * (y.len() as f64)).sqrt();
    let sy: f64 = y.iter().sum();
    let n = y.len() as f64;
    x.iter()
        .map(|&xi| {
            let e = (xi * sy / scale).min(n);
            e * e
        })
        .sum()
}

pub fn sample_graph(cfg: &RigConfig, workers: usize) -> Result<GraphSample> {
    sample_graph_with_budget(cfg, workers, DEFAULT_PAIR_BUDGET)
}

pub fn sample_graph_with_budget(cfg: &RigConfig, workers: usize, budget: f64) -> Result<GraphSample> {
    cfg.validate()?;
    let ys = WeightSampler::new(cfg.actor_weights)?;
    let xs = WeightSampler::new(cfg.attr_weights)?;
    let mut rng = substream(cfg.seed, domain::RIG_ACTOR_WEIGHTS, 0);
    let y: Vec<f64> = (0..cfg.n).map(|_| ys.sample(&mut rng)).collect();
    let mut rng = substream(cfg.seed, domain::RIG_ATTRIBUTE_WEIGHTS, 0);
    let x: Vec<f64> = (0..cfg.m).map(|_| xs.sample(&mut rng)).collect();
    sample_with_weights(x, y, cfg.seed, workers, budget)
}

/// Links attribute `i` to actor `j` with probability
/// `min(1, x_i y_j / sqrt(mn))`, then projects onto the actors.
pub fn sample_with_weights(
    x: Vec<f64>,
    y: Vec<f64>,
    seed: u64,
    workers: usize,
    budget: f64,
) -> Result<GraphSample> {
    let (m, n) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return Err(invalid("need at least one actor and one attribute"));
    }
    if let Some(w) = x.iter().chain(&y).find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(invalid(format!("weight {w} is not a finite nonnegative number")));
    }
    let estimate = projection_estimate(&x, &y);
    if estimate > budget {
        return Err(Error::Budget { estimate, budget });
    }
    let scale = ((m as f64) * (n as f64)).sqrt();
    // Actors by decreasing weight; ties broken by index for determinism.
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| y[b as usize].total_cmp(&y[a as usize]).then(a.cmp(&b)));
    let sorted_y: Vec<f64> = order.iter().map(|&j| y[j as usize]).collect();

    let blocks = (m as u64).div_ceil(ROW_BLOCK);
    let rows = run_blocks(blocks, workers, |b| {
        let lo = (b * ROW_BLOCK) as usize;
        let hi = (lo + ROW_BLOCK as usize).min(m);
        (lo..hi)
            .map(|i| {
                let mut rng = substream(seed, domain::RIG_ATTRIBUTE_ROW, i as u64);
                attribute_row(x[i] / scale, &sorted_y, &order, &mut rng)
            })
            .collect::<Vec<_>>()
    })?;
    let members: Vec<Vec<u32>> = rows.into_iter().flatten().collect();
    let adjacency = project(n, &members);
    let degrees = adjacency.iter().map(|a| a.len() as u32).collect();
    Ok(GraphSample {
        n,
        m,
        actor_weights: y,
        attr_weights: x,
        members,
        adjacency,
        degrees,
    })
}

/// Members of one attribute. Link probabilities `min(1, c y)` are
/// nonincreasing along `sorted_y`, so geometric jumps at the current
/// probability followed by thinning visit only about as many actors as
/// are linked.
fn attribute_row<R: Rng>(c: f64, sorted_y: &[f64], order: &[u32], rng: &mut R) -> Vec<u32> {
    let n = sorted_y.len();
    let prob = |j: usize| (c * sorted_y[j]).min(1.0);
    let mut out = Vec::new();
    let mut j = 0usize;
    let mut q = if n > 0 { prob(0) } else { 0.0 };
    while j < n && q > 0.0 {
        if q < 1.0 {
            let u: f64 = rng.random();
            let skip = ((1.0 - u).ln() / (-q).ln_1p()).floor();
            if skip >= (n - j) as f64 {
                break;
            }
            j += skip as usize;
        }
        let p = prob(j);
        if p >= q || rng.random::<f64>() * q < p {
            out.push(order[j]);
        }
        q = p;
        j += 1;
    }
    out.sort_unstable();
    out
}

/// Actor graph: `u ~ v` iff some attribute contains both.
pub fn project(n: usize, members: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for row in members {
        for (a, &u) in row.iter().enumerate() {
            for &v in &row[a + 1..] {
                adj[u as usize].push(v);
                adj[v as usize].push(u);
            }
        }
    }
    for nb in &mut adj {
        nb.sort_unstable();
        nb.dedup();
        nb.shrink_to_fit();
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn cfg(n: usize, m: usize, seed: u64) -> RigConfig {
        RigConfig {
            n,
            m,
            actor_weights: PowerLawSpec::one_sided(6.5),
            attr_weights: PowerLawSpec::one_sided(8.0),
            seed,
        }
    }

    #[test]
    fn huge_weights_give_complete_graphs() {
        let g = sample_with_weights(vec![1e6; 5], vec![1e6; 7], 1, 1, 1e9).unwrap();
        assert!(g.members.iter().all(|r| r.len() == 7));
        assert!(g.degrees.iter().all(|&d| d == 6));
    }

    #[test]
    fn zero_attribute_weights_give_empty_graph() {
        let g = sample_with_weights(vec![0.0; 5], vec![3.0; 7], 1, 1, 1e9).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(g.members.iter().all(|r| r.is_empty()));
    }

    #[test]
    fn same_seed_same_graph_any_worker_count() {
        let a = sample_graph(&cfg(100, 100, 9), 1).unwrap();
        let b = sample_graph(&cfg(100, 100, 9), 1).unwrap();
        let c = sample_graph(&cfg(100, 100, 9), 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let d = sample_graph(&cfg(100, 100, 10), 1).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn budget_refusal_reports_estimate() {
        let err = sample_with_weights(vec![1e6; 50], vec![1e6; 50], 1, 1, 100.0).unwrap_err();
        match err {
            Error::Budget { estimate, budget } => {
                assert_eq!(estimate, 50.0 * 2500.0);
                assert_eq!(budget, 100.0);
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn oversized_graph_is_refused_before_sampling() {
        let cfg = RigConfig {
            n: MAX_VERTICES,
            m: 1,
            actor_weights: PowerLawSpec::one_sided(3.0),
            attr_weights: PowerLawSpec::one_sided(3.0),
            seed: 0,
        };
        assert!(matches!(sample_graph(&cfg, 1), Err(Error::Budget { .. })));
    }

    #[test]
    fn link_frequencies_match_probabilities() {
        // Fixed weights on a 20 x 20 grid; every pair's empirical frequency
        // within 4 standard errors of min(1, x y / sqrt(mn)).
        let x: Vec<f64> = (0..20).map(|i| 0.5 + i as f64 * 1.1).collect();
        let y: Vec<f64> = (0..20).map(|j| 0.2 + j as f64 * 0.9).collect();
        let reps = 100_000u64;
        let scale = 20.0;
        let mut order: Vec<u32> = (0..20).collect();
        order.sort_by(|&a, &b| y[b as usize].total_cmp(&y[a as usize]).then(a.cmp(&b)));
        let sorted_y: Vec<f64> = order.iter().map(|&j| y[j as usize]).collect();
        let mut counts = vec![[0u64; 20]; 20];
        for (i, row) in counts.iter_mut().enumerate() {
            let mut rng = substream(5, domain::RIG_ATTRIBUTE_ROW, i as u64);
            for _ in 0..reps {
                for j in attribute_row(x[i] / scale, &sorted_y, &order, &mut rng) {
                    row[j as usize] += 1;
                }
            }
        }
        for i in 0..20 {
            for j in 0..20 {
                let p = (x[i] * y[j] / scale).min(1.0);
                let f = counts[i][j] as f64 / reps as f64;
                let se = (p * (1.0 - p) / reps as f64).sqrt();
                if se == 0.0 {
                    assert_eq!(f, p, "({i},{j})");
                } else {
                    assert!((f - p).abs() <= 4.0 * se, "({i},{j}): {f} vs {p}");
                }
            }
        }
    }

    #[test]
    fn sampler_matches_law() {
        let spec = PowerLawSpec::one_sided(2.5);
        let s = WeightSampler::new(spec).unwrap();
        let mut rng = substream(3, 99, 0);
        let draws = 200_000;
        let mut ones = 0;
        let mut big = 0;
        for _ in 0..draws {
            let v = s.sample(&mut rng);
            if v == 1.0 {
                ones += 1;
            }
            if v > 1000.0 {
                big += 1;
            }
        }
        let p1 = spec.prob(1);
        let f1 = ones as f64 / draws as f64;
        assert!((f1 - p1).abs() < 4.0 * (p1 * (1.0 - p1) / draws as f64).sqrt());
        let pb = spec.tail_right(1000);
        let fb = big as f64 / draws as f64;
        assert!((fb - pb).abs() < 4.0 * (pb / draws as f64).sqrt() + 1e-5, "{fb} vs {pb}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projection_matches_set_intersection(n in 1usize..50, m in 1usize..50, seed in 0u64..1000) {
            let g = sample_graph(&RigConfig {
                actor_weights: PowerLawSpec::one_sided(2.5),
                attr_weights: PowerLawSpec::one_sided(2.5),
                ..cfg(n, m, seed)
            }, 1).unwrap();
            let sets: Vec<BTreeSet<u32>> = (0..n as u32)
                .map(|u| (0..m).filter(|&i| g.members[i].contains(&u)).map(|i| i as u32).collect())
                .collect();
            for u in 0..n as u32 {
                prop_assert!(!g.has_edge(u, u));
                prop_assert_eq!(g.degrees[u as usize] as usize, g.adjacency[u as usize].len());
                for v in 0..n as u32 {
                    let share = u != v && !sets[u as usize].is_disjoint(&sets[v as usize]);
                    prop_assert_eq!(g.has_edge(u, v), share);
                    prop_assert_eq!(g.has_edge(u, v), g.has_edge(v, u));
                }
            }
        }
    }
}
