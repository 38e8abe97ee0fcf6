//! Monte-Carlo bond percolation: strength, susceptibility and the
//! susceptibility-peak threshold.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::topology::Subgraph;

/// Disjoint-set forest with union by size and path halving.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
        self.size.fill(1);
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`; returns the size of the merged set.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return self.size[ra];
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.size[ra]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PercolationPoint {
    pub p: f64,
    /// `P∞(p) = Σ S_i / (N·T)`.
    pub strength: f64,
    /// `χ(p) = (Σ S_i² / (N²·T) − P∞²) / P∞`.
    pub susceptibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PercolationConfig {
    pub grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for PercolationConfig {
    fn default() -> Self {
        PercolationConfig {
            grid: uniform_grid(0.02),
            trials: 200,
            seed: 0,
        }
    }
}

/// `0, step, 2·step, …, 1`.
pub fn uniform_grid(step: f64) -> Vec<f64> {
    let n = (1.0 / step).round() as usize;
    (0..=n).map(|i| (i as f64 * step).min(1.0)).collect()
}

/// Largest-cluster sizes over `trials` independent bond realizations.
///
/// Every `p` draws from its own ChaCha stream keyed by the bits of `p`, so a
/// single-point query and a full curve agree exactly for the same seed.
fn sample_largest(
    sub: &Subgraph,
    p: f64,
    trials: usize,
    seed: u64,
    dsu: &mut DisjointSet,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(p.to_bits());
    // A bond is open when a uniform 32-bit draw falls below `p·2³²`.
    let cut = (p * 4_294_967_296.0) as u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        dsu.reset();
        let mut largest = usize::from(sub.node_count() > 0);
        for &(u, v) in sub.edges() {
            if u64::from(rng.next_u32()) < cut {
                largest = largest.max(dsu.union(u, v));
            }
        }
        let s = largest as f64;
        sum += s;
        sum_sq += s * s;
    }
    (sum, sum_sq)
}

fn check(sub: &Subgraph, p: f64, trials: usize) -> Result<()> {
    if sub.node_count() == 0 {
        return Err(Error::domain("percolation on an empty graph"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!(
            "bond probability {p} outside [0, 1]"
        )));
    }
    if trials == 0 {
        return Err(Error::domain("at least one trial required"));
    }
    Ok(())
}

fn point(
    sub: &Subgraph,
    p: f64,
    trials: usize,
    seed: u64,
    dsu: &mut DisjointSet,
) -> PercolationPoint {
    let (sum, sum_sq) = sample_largest(sub, p, trials, seed, dsu);
    let n = sub.node_count() as f64;
    let t = trials as f64;
    let strength = sum / (n * t);
    let second = sum_sq / (n * n * t);
    PercolationPoint {
        p,
        strength,
        susceptibility: (second - strength * strength) / strength,
    }
}

pub fn percolation_strength(sub: &Subgraph, p: f64, trials: usize, seed: u64) -> Result<f64> {
    check(sub, p, trials)?;
    let mut dsu = DisjointSet::new(sub.node_count());
    Ok(point(sub, p, trials, seed, &mut dsu).strength)
}

pub fn susceptibility(sub: &Subgraph, p: f64, trials: usize, seed: u64) -> Result<f64> {
    check(sub, p, trials)?;
    let mut dsu = DisjointSet::new(sub.node_count());
    Ok(point(sub, p, trials, seed, &mut dsu).susceptibility)
}

pub fn percolation_curve(
    sub: &Subgraph,
    grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<PercolationPoint>> {
    if grid.is_empty() {
        return Err(Error::domain("empty probability grid"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::domain(
            "probability grid must be strictly increasing",
        ));
    }
    for &p in grid {
        check(sub, p, trials)?;
    }
    let mut dsu = DisjointSet::new(sub.node_count());
    Ok(grid
        .iter()
        .map(|&p| point(sub, p, trials, seed, &mut dsu))
        .collect())
}

/// Grid point of maximum susceptibility; ties go to the smaller `p`.
pub fn percolation_threshold(
    sub: &Subgraph,
    grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let curve = percolation_curve(sub, grid, trials, seed)?;
    Ok(threshold_of(&curve))
}

pub fn threshold_of(curve: &[PercolationPoint]) -> f64 {
    let mut best = curve[0];
    for pt in &curve[1..] {
        if pt.susceptibility > best.susceptibility {
            best = *pt;
        }
    }
    best.p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::generators::*;

    #[test]
    fn dsu_sizes() {
        let mut d = DisjointSet::new(5);
        assert_eq!(d.union(0, 1), 2);
        assert_eq!(d.union(2, 3), 2);
        assert_eq!(d.union(1, 3), 4);
        assert_eq!(d.union(0, 2), 4);
        assert_eq!(d.find(4), 4);
    }

    #[test]
    fn extreme_probabilities() {
        let g = path(7);
        assert_eq!(percolation_strength(&g, 1.0, 10, 1).unwrap(), 1.0);
        assert_eq!(susceptibility(&g, 1.0, 10, 1).unwrap(), 0.0);
        assert_eq!(percolation_strength(&g, 0.0, 10, 1).unwrap(), 1.0 / 7.0);
        assert_eq!(susceptibility(&g, 0.0, 10, 1).unwrap(), 0.0);
    }

    #[test]
    fn empty_graph_rejected() {
        let g = Subgraph::from_edges(0, &[]);
        assert!(percolation_strength(&g, 0.5, 10, 1).is_err());
        assert!(percolation_strength(&path(3), 1.5, 10, 1).is_err());
        assert!(percolation_curve(&path(3), &[0.5, 0.4], 10, 1).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let g = square_lattice(5, 5);
        let a = percolation_strength(&g, 0.4, 50, 9).unwrap();
        let b = percolation_strength(&g, 0.4, 50, 9).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let curve = percolation_curve(&g, &[0.2, 0.4], 50, 9).unwrap();
        assert_eq!(curve[1].strength.to_bits(), a.to_bits());
    }

    #[test]
    fn ties_break_to_smaller_p() {
        // Constant zero susceptibility on an edgeless graph.
        let g = Subgraph::from_edges(3, &[]);
        assert_eq!(
            percolation_threshold(&g, &[0.1, 0.5, 0.9], 5, 0).unwrap(),
            0.1
        );
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(32))]
        #[test]
        fn strength_stays_in_bounds(n in 1usize..12, p in 0.0f64..=1.0, seed in 0u64..1000) {
            let g = path(n);
            let s = percolation_strength(&g, p, 20, seed).unwrap();
            proptest::prop_assert!(s >= 1.0 / n as f64 - 1e-12 && s <= 1.0 + 1e-12);
        }
    }
}
