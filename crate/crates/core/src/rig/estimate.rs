//! Clustering and degree estimators on a sampled actor graph.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::LatticePmf;
use crate::report::{Cell, Table};

use super::sample::GraphSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringEstimate {
    pub k: i64,
    pub c_hat: f64,
    pub vertex_count: usize,
    pub stderr: f64,
}

/// Fraction of closed neighbor pairs, averaged over vertices of degree
/// `k`, with the standard error of that average.
pub fn empirical_ck(g: &GraphSample, k: i64) -> Result<ClusteringEstimate> {
    if k < 2 {
        return Err(invalid(format!("k must be at least 2, got {k}")));
    }
    let pairs = (k * (k - 1) / 2) as f64;
    let fractions: Vec<f64> = g
        .adjacency
        .iter()
        .filter(|nb| nb.len() as i64 == k)
        .map(|nb| {
            let mut closed = 0u64;
            for (i, &a) in nb.iter().enumerate() {
                for &b in &nb[i + 1..] {
                    if g.has_edge(a, b) {
                        closed += 1;
                    }
                }
            }
            closed as f64 / pairs
        })
        .collect();
    let count = fractions.len();
    if count == 0 {
        return Err(Error::Empty(format!("no vertex of degree {k}")));
    }
    let mean = fractions.iter().sum::<f64>() / count as f64;
    let stderr = if count > 1 {
        let ss: f64 = fractions.iter().map(|f| (f - mean) * (f - mean)).sum();
        (ss / (count - 1) as f64 / count as f64).sqrt()
    } else {
        0.0
    };
    Ok(ClusteringEstimate {
        k,
        c_hat: mean,
        vertex_count: count,
        stderr,
    })
}

/// CSV-ready `(k, c_hat, stderr, count)`; degrees without vertices are
/// skipped.
pub fn clustering_table(g: &GraphSample, ks: &[i64]) -> Result<Table> {
    let mut t = Table::new(["k", "c_hat", "stderr", "count"]);
    for &k in ks {
        match empirical_ck(g, k) {
            Ok(e) => t.push(vec![
                Cell::Int(k),
                Cell::Real(e.c_hat),
                Cell::Real(e.stderr),
                Cell::Int(e.vertex_count as i64),
            ]),
            Err(Error::Empty(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(t)
}

pub fn degree_histogram(g: &GraphSample) -> Result<LatticePmf> {
    let max = g.degrees.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for &d in &g.degrees {
        counts[d as usize] += 1;
    }
    let n = g.degrees.len() as f64;
    LatticePmf::new(0, counts.iter().map(|&c| c as f64 / n).collect(), "degree")
}

/// Exponent `s` of the power law `k^-s` restricted to `[lo, hi]` that
/// matches the mean of `ln k` under `pmf` conditioned on `[lo, hi]`.
///
/// Applied to an empirical histogram this is the maximum likelihood fit;
/// applied to a model law it gives the value that fit converges to.
pub fn truncated_power_fit(pmf: &LatticePmf, lo: i64, hi: i64) -> Result<f64> {
    if !(1 <= lo && lo < hi) {
        return Err(invalid(format!("need 1 <= lo < hi, got [{lo}, {hi}]")));
    }
    let ks: Vec<i64> = (lo..=hi).collect();
    let mass: f64 = ks.iter().map(|&k| pmf.prob(k)).sum();
    if !(mass > 0.0) {
        return Err(Error::Empty(format!("no mass on [{lo}, {hi}]")));
    }
    let target: f64 = ks.iter().map(|&k| pmf.prob(k) * (k as f64).ln()).sum::<f64>() / mass;
    let mean_ln = |s: f64| {
        let (mut z, mut m) = (0.0, 0.0);
        for &k in &ks {
            let w = (k as f64).powf(-s);
            z += w;
            m += w * (k as f64).ln();
        }
        m / z
    };
    // mean_ln decreases in s from the midpoint-ish value to ln lo.
    let (mut a, mut b) = (-50.0f64, 200.0f64);
    if target >= mean_ln(a) {
        return Ok(a);
    }
    if target <= mean_ln(b) {
        return Ok(b);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mean_ln(mid) > target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rig::sample::project;

    fn graph(n: usize, members: Vec<Vec<u32>>) -> GraphSample {
        let adjacency = project(n, &members);
        let degrees = adjacency.iter().map(|a| a.len() as u32).collect();
        GraphSample {
            n,
            m: members.len(),
            actor_weights: vec![1.0; n],
            attr_weights: vec![1.0; members.len()],
            members,
            adjacency,
            degrees,
        }
    }

    #[test]
    fn triangle_is_fully_clustered() {
        let g = graph(3, vec![vec![0, 1, 2]]);
        let e = empirical_ck(&g, 2).unwrap();
        assert_eq!(e.c_hat, 1.0);
        assert_eq!(e.vertex_count, 3);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn path_center_has_no_closed_pair() {
        let g = graph(3, vec![vec![0, 1], vec![1, 2]]);
        let e = empirical_ck(&g, 2).unwrap();
        assert_eq!(e.c_hat, 0.0);
        assert_eq!(e.vertex_count, 1);
        assert!(matches!(empirical_ck(&g, 3), Err(Error::Empty(_))));
        assert!(empirical_ck(&g, 1).is_err());
    }

    #[test]
    fn mixed_vertices_have_a_standard_error() {
        // Vertex 0 closes its pair, vertex 3 does not.
        let g = graph(6, vec![vec![0, 1, 2], vec![3, 4], vec![3, 5]]);
        let e = empirical_ck(&g, 2).unwrap();
        assert_eq!(e.vertex_count, 4);
        assert!((e.c_hat - 0.75).abs() < 1e-15);
        assert!((e.stderr - 0.25).abs() < 1e-15);
    }

    #[test]
    fn histograms_of_extreme_graphs() {
        let full = graph(5, vec![vec![0, 1, 2, 3, 4]]);
        let h = degree_histogram(&full).unwrap();
        assert_eq!((h.offset(), h.len(), h.prob(4)), (4, 1, 1.0));
        let empty = graph(5, vec![vec![]]);
        let h = degree_histogram(&empty).unwrap();
        assert_eq!((h.offset(), h.len(), h.prob(0)), (0, 1, 1.0));
    }

    #[test]
    fn power_fit_recovers_exponent() {
        let probs: Vec<f64> = (1..=200).map(|k| (k as f64).powf(-3.5)).collect();
        let z: f64 = probs.iter().sum();
        let pmf = LatticePmf::new(1, probs.iter().map(|p| p / z).collect(), "p").unwrap();
        let s = truncated_power_fit(&pmf, 8, 64).unwrap();
        assert!((s - 3.5).abs() < 1e-9, "{s}");
    }
}
