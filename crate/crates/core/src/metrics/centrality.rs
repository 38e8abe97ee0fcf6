//! Global network efficiency and efficiency-drop information centrality.

use crate::error::{Error, Result};
use crate::topology::Subgraph;

/// Pairwise inverse-distance sums: the total over ordered pairs and each
/// node's row sum `Σ_t 1/d(v, t)`.
///
/// Runs a breadth-first search from every source at once: each node keeps a
/// bitset of the sources that have reached it, and the pairs first reached
/// at level `d` contribute `1/d` each. Node `skip` is treated as absent.
fn inverse_distance_sums(sub: &Subgraph, skip: Option<usize>) -> (f64, Vec<f64>) {
    let n = sub.node_count();
    let words = n.div_ceil(64);
    let mut reach = vec![0u64; n * words];
    let mut frontier = vec![0u64; n * words];
    let mut next = vec![0u64; n * words];
    for v in (0..n).filter(|&v| Some(v) != skip) {
        reach[v * words + v / 64] |= 1 << (v % 64);
        frontier[v * words + v / 64] |= 1 << (v % 64);
    }
    let mut rows = vec![0.0; n];
    let mut total = 0.0;
    for level in 1..n {
        let mut found = 0u64;
        for v in (0..n).filter(|&v| Some(v) != skip) {
            let row = v * words..(v + 1) * words;
            next[row.clone()].fill(0);
            for &u in sub.neighbors(v) {
                for k in 0..words {
                    next[v * words + k] |= frontier[u * words + k];
                }
            }
            let mut here = 0u64;
            for k in row {
                next[k] &= !reach[k];
                here += u64::from(next[k].count_ones());
            }
            rows[v] += here as f64 / level as f64;
            found += here;
        }
        if found == 0 {
            break;
        }
        for (r, x) in reach.iter_mut().zip(&next) {
            *r |= x;
        }
        std::mem::swap(&mut frontier, &mut next);
        total += found as f64 / level as f64;
    }
    (total, rows)
}

fn inverse_distance_sum(sub: &Subgraph, skip: Option<usize>) -> f64 {
    inverse_distance_sums(sub, skip).0
}

/// Marks edges that are bridges (not on any cycle; parallel edges never are).
fn bridges(sub: &Subgraph) -> Vec<bool> {
    let n = sub.node_count();
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (e, &(u, v)) in sub.edges().iter().enumerate() {
        incident[u].push((v, e));
        incident[v].push((u, e));
    }
    let mut is_bridge = vec![false; sub.edge_count()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut timer = 0;
    // Iterative DFS frames: (node, edge used to enter, next incident index).
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(&mut (v, via, ref mut i)) = stack.last_mut() {
            if let Some(&(w, e)) = incident[v].get(*i) {
                *i += 1;
                if e == via {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, e, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        is_bridge[via] = true;
                    }
                }
            }
        }
    }
    is_bridge
}

/// Inverse-distance sum of `G − m` when every edge at `m` is a bridge.
///
/// Removing `m` then splits its component into one part per neighbour.
/// Pairs inside a part keep their distance, since no shortest path between
/// them can leave the part through `m`; pairs in different parts lose their
/// only route, of length `d(s, m) + d(m, t)`.
fn reduced_sum_at_cut(
    sub: &Subgraph,
    m: usize,
    full: f64,
    row_m: f64,
    dist: &mut Vec<usize>,
    queue: &mut Vec<usize>,
) -> f64 {
    let mut hists: Vec<Vec<f64>> = Vec::new();
    for &u in sub.neighbors(m) {
        sub.bfs_distances(u, Some(m), dist, queue);
        let mut h = Vec::new();
        for &v in queue.iter() {
            let k = dist[v] + 1;
            if h.len() <= k {
                h.resize(k + 1, 0.0);
            }
            h[k] += 1.0;
        }
        hists.push(h);
    }
    let mut cross = 0.0;
    for a in 0..hists.len() {
        for b in 0..hists.len() {
            if a == b {
                continue;
            }
            for (k, &ca) in hists[a].iter().enumerate().filter(|(_, c)| **c > 0.0) {
                for (l, &cb) in hists[b].iter().enumerate().filter(|(_, c)| **c > 0.0) {
                    cross += ca * cb / (k + l) as f64;
                }
            }
        }
    }
    full - 2.0 * row_m - cross
}

/// `E_n[G] = Σ_{i≠j} 1/d_ij / (N(N−1))`, with unreachable pairs contributing 0.
pub fn network_efficiency(sub: &Subgraph) -> Result<f64> {
    let n = sub.node_count();
    if n < 2 {
        return Err(Error::domain(format!(
            "efficiency needs at least 2 nodes, got {n}"
        )));
    }
    Ok(inverse_distance_sum(sub, None) / (n * (n - 1)) as f64)
}

/// `C_m = (E_n[G] − E_n[G − m]) / E_n[G]` for node index `m`.
///
/// A graph without edges has zero efficiency; every node then gets 0.
pub fn information_centrality(sub: &Subgraph, m: usize) -> Result<f64> {
    let n = sub.node_count();
    if m >= n {
        return Err(Error::domain(format!("node index {m} not in graph")));
    }
    if n < 3 {
        return Err(Error::domain("removing a node must leave at least 2 nodes"));
    }
    let full = network_efficiency(sub)?;
    Ok(centrality_from(full, inverse_distance_sum(sub, Some(m)), n))
}

fn centrality_from(full: f64, reduced_sum: f64, n: usize) -> f64 {
    if full == 0.0 {
        return 0.0;
    }
    let reduced = reduced_sum / ((n - 1) * (n - 2)) as f64;
    (full - reduced) / full
}

/// Centrality of every node, in index order.
pub fn all_centralities(sub: &Subgraph) -> Result<Vec<f64>> {
    let n = sub.node_count();
    if n < 3 {
        return Err(Error::domain("centrality needs at least 3 nodes"));
    }
    let (full_sum, rows) = inverse_distance_sums(sub, None);
    let full = full_sum / (n * (n - 1)) as f64;
    let is_bridge = bridges(sub);
    let mut tree_like = vec![true; n];
    for (&(u, v), &b) in sub.edges().iter().zip(&is_bridge) {
        if !b {
            tree_like[u] = false;
            tree_like[v] = false;
        }
    }
    let (mut dist, mut queue) = (Vec::new(), Vec::new());
    Ok((0..n)
        .map(|m| {
            let reduced = if tree_like[m] {
                reduced_sum_at_cut(sub, m, full_sum, rows[m], &mut dist, &mut queue)
            } else {
                inverse_distance_sum(sub, Some(m))
            };
            centrality_from(full, reduced, n)
        })
        .collect())
}

/// Nodes count as high-centrality when `C_m > mean + k·std` (population std).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighCentralityRule {
    pub std_multiplier: f64,
}

impl Default for HighCentralityRule {
    fn default() -> Self {
        HighCentralityRule {
            std_multiplier: 1.0,
        }
    }
}

impl HighCentralityRule {
    pub fn count(&self, centralities: &[f64]) -> usize {
        if centralities.is_empty() {
            return 0;
        }
        let n = centralities.len() as f64;
        let mean = centralities.iter().sum::<f64>() / n;
        let var = centralities.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
        let cut = mean + self.std_multiplier * var.sqrt();
        centralities.iter().filter(|&&c| c > cut).count()
    }
}

/// Graphs with fewer than 3 nodes have no defined centrality and count 0.
pub fn high_centrality_count(sub: &Subgraph, rule: HighCentralityRule) -> usize {
    match all_centralities(sub) {
        Ok(c) => rule.count(&c),
        Err(_) => 0,
    }
}
