use crate::models::Graph;

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Connected components, numbered in order of their smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub label: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Label of the largest component; ties go to the one with the smallest vertex.
    pub fn largest(&self) -> Option<usize> {
        (0..self.sizes.len()).max_by(|&a, &b| self.sizes[a].cmp(&self.sizes[b]).then(b.cmp(&a)))
    }

    /// Component sizes in decreasing order.
    pub fn sorted_sizes(&self) -> Vec<usize> {
        let mut s = self.sizes.clone();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.label.len()).filter(|&v| self.label[v] == c).collect()
    }
}

pub fn components(g: &Graph) -> Components {
    let n = g.n();
    let mut ds = DisjointSet::new(n);
    for (u, v, _) in g.edge_list() {
        ds.union(u, v);
    }
    let mut label = vec![usize::MAX; n];
    let mut root_label = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for v in 0..n {
        let r = ds.find(v);
        if root_label[r] == usize::MAX {
            root_label[r] = sizes.len();
            sizes.push(0);
        }
        label[v] = root_label[r];
        sizes[label[v]] += 1;
    }
    Components { label, sizes }
}

/// Sorted vertex ids of the largest component.
pub fn largest_component(g: &Graph) -> Vec<usize> {
    let c = components(g);
    c.largest().map(|l| c.members(l)).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::testutil::small_graph;
    use std::collections::VecDeque;

    fn flood(g: &Graph) -> Vec<usize> {
        let mut label = vec![usize::MAX; g.n()];
        let mut next = 0;
        for s in 0..g.n() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut q = VecDeque::from([s]);
            while let Some(v) = q.pop_front() {
                for &(u, _) in g.neighbors(v) {
                    if label[u] == usize::MAX {
                        label[u] = next;
                        q.push_back(u);
                    }
                }
            }
            next += 1;
        }
        label
    }

    #[test]
    fn matches_flood_fill() {
        for seed in 0..300 {
            let g = small_graph(seed, 30);
            assert_eq!(components(&g).label, flood(&g), "seed {seed}");
        }
    }

    #[test]
    fn edgeless_and_complete() {
        let mut g = small_graph(3, 9);
        let vs = g.vertices.clone();
        let n = vs.len();
        g = Graph::from_edges("t", vs.clone(), vec![]).unwrap();
        assert_eq!(components(&g).count(), n);
        assert_eq!(largest_component(&g), vec![0]);
        let all = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v, 1.0))).collect();
        let g = Graph::from_edges("t", vs, all).unwrap();
        assert_eq!(components(&g).sizes, vec![n]);
    }

    #[test]
    fn largest_tie_breaks_low() {
        let g = small_graph(0, 9);
        let vs = crate::models::VertexSet {
            positions: vec![0.0; 8],
            weights: vec![1.0; 4],
            ..g.vertices
        };
        let g = Graph::from_edges("t", vs, vec![(2, 3, 1.0), (0, 1, 1.0)]).unwrap();
        assert_eq!(largest_component(&g), vec![0, 1]);
    }
}
