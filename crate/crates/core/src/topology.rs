//! Undirected graph view of an energized feeder section.

use std::collections::{HashMap, VecDeque};

/// Immutable undirected multigraph over nodes `0..n`, each carrying an
/// external label (the feeder node id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    labels: Vec<u32>,
    edges: Vec<(usize, usize)>,
    branch_ids: Vec<Option<u32>>,
    adj: Vec<Vec<usize>>,
}

impl Subgraph {
    /// Unlabelled graph; node `i` gets label `i`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let labels = (0..n as u32).collect();
        let tagged = edges.iter().map(|&(u, v)| (u, v, None)).collect::<Vec<_>>();
        Self::build(labels, tagged)
    }

    pub(crate) fn build(labels: Vec<u32>, edges: Vec<(usize, usize, Option<u32>)>) -> Self {
        let n = labels.len();
        let mut adj = vec![Vec::new(); n];
        let mut plain = Vec::with_capacity(edges.len());
        let mut branch_ids = Vec::with_capacity(edges.len());
        for (u, v, id) in edges {
            assert!(u < n && v < n, "edge endpoint out of range");
            adj[u].push(v);
            adj[v].push(u);
            plain.push((u, v));
            branch_ids.push(id);
        }
        Subgraph {
            labels,
            edges: plain,
            branch_ids,
            adj,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> u32 {
        self.labels[idx]
    }

    /// Feeder branch ids of the edges, in edge order (unlabelled graphs have none).
    pub fn branch_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.branch_ids.iter().filter_map(|b| *b)
    }

    pub fn index_of(&self, label: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adj[idx]
    }

    /// Component id per node; ids are dense and ordered by first node.
    pub fn components(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() <= 1 || self.components().iter().all(|&c| c == 0)
    }

    /// Hop distances from `src`, never entering `skip`; unreachable nodes
    /// get `usize::MAX`. `queue` is scratch space.
    pub fn bfs_distances(
        &self,
        src: usize,
        skip: Option<usize>,
        dist: &mut Vec<usize>,
        queue: &mut Vec<usize>,
    ) {
        dist.clear();
        dist.resize(self.node_count(), usize::MAX);
        queue.clear();
        dist[src] = 0;
        queue.push(src);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            let next = dist[u] + 1;
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX && Some(v) != skip {
                    dist[v] = next;
                    queue.push(v);
                }
            }
        }
    }

    /// Copy with node `idx` and its incident edges removed.
    pub fn without_node(&self, idx: usize) -> Subgraph {
        let mut remap = HashMap::with_capacity(self.node_count());
        let mut labels = Vec::with_capacity(self.node_count().saturating_sub(1));
        for (i, &l) in self.labels.iter().enumerate() {
            if i != idx {
                remap.insert(i, labels.len());
                labels.push(l);
            }
        }
        let edges = self
            .edges
            .iter()
            .zip(&self.branch_ids)
            .filter(|((u, v), _)| *u != idx && *v != idx)
            .map(|(&(u, v), &b)| (remap[&u], remap[&v], b))
            .collect();
        Subgraph::build(labels, edges)
    }
}

/// Small reference graphs used by tests and calibration runs.
pub mod generators {
    use super::Subgraph;

    pub fn path(n: usize) -> Subgraph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Subgraph::from_edges(n, &edges)
    }

    /// Node 0 is the hub.
    pub fn star(n: usize) -> Subgraph {
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Subgraph::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Subgraph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j));
            }
        }
        Subgraph::from_edges(n, &edges)
    }

    /// `width x height` square lattice with open boundaries.
    pub fn square_lattice(width: usize, height: usize) -> Subgraph {
        let idx = |x: usize, y: usize| y * width + x;
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if x + 1 < width {
                    edges.push((idx(x, y), idx(x + 1, y)));
                }
                if y + 1 < height {
                    edges.push((idx(x, y), idx(x, y + 1)));
                }
            }
        }
        Subgraph::from_edges(width * height, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::generators::*;
    use super::*;

    #[test]
    fn components_and_removal() {
        let g = Subgraph::from_edges(5, &[(0, 1), (1, 2), (3, 4)]);
        let comp = g.components();
        assert_eq!(comp, vec![0, 0, 0, 1, 1]);
        assert!(!g.is_connected());
        let h = star(4).without_node(0);
        assert_eq!(h.node_count(), 3);
        assert_eq!(h.edge_count(), 0);
        assert_eq!(h.labels(), &[1, 2, 3]);
    }

    #[test]
    fn lattice_shape() {
        let g = square_lattice(20, 20);
        assert_eq!(g.node_count(), 400);
        assert_eq!(g.edge_count(), 2 * 20 * 19);
        assert!(g.is_connected());
        assert_eq!(complete(5).edge_count(), 10);
    }

    #[test]
    fn bfs_skips_removed_node() {
        let g = path(4);
        let (mut d, mut q) = (Vec::new(), Vec::new());
        g.bfs_distances(0, None, &mut d, &mut q);
        assert_eq!(d, vec![0, 1, 2, 3]);
        g.bfs_distances(0, Some(1), &mut d, &mut q);
        assert_eq!(d[2], usize::MAX);
    }
}
