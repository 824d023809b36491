use crate::cost::{Direction, Penalty};
use crate::error::{Error, Result};
use crate::models::Graph;

/// Largest walk length accepted by [`saw_path_count`].
pub const SAW_MAX_STEPS: usize = 8;

/// Directed adjacency keeping the steps whose cost is at most `t0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTruncatedGraph {
    pub adj: Vec<Vec<usize>>,
}

pub fn truncate_by_cost(g: &Graph, f: &Penalty, t0: f64, direction: Direction) -> CostTruncatedGraph {
    let adj = (0..g.n())
        .map(|v| {
            g.neighbors(v)
                .iter()
                .filter(|&&(u, e)| {
                    let w = match direction {
                        Direction::Outward => f.eval(g.weight(v), g.weight(u)),
                        Direction::Inward => f.eval(g.weight(u), g.weight(v)),
                    };
                    g.length(e) * w <= t0
                })
                .map(|&(u, _)| u)
                .collect()
        })
        .collect();
    CostTruncatedGraph { adj }
}

/// Number of self-avoiding walks with `k` steps from `v`.
pub fn saw_path_count(g: &CostTruncatedGraph, v: usize, k: usize) -> Result<u64> {
    if k > SAW_MAX_STEPS {
        return Err(Error::param(format!("walk length {k} exceeds the limit {SAW_MAX_STEPS}")));
    }
    fn go(g: &CostTruncatedGraph, v: usize, k: usize, seen: &mut [bool]) -> u64 {
        if k == 0 {
            return 1;
        }
        let mut total = 0;
        for &u in &g.adj[v] {
            if !seen[u] {
                seen[u] = true;
                total += go(g, u, k - 1, seen);
                seen[u] = false;
            }
        }
        total
    }
    let mut seen = vec![false; g.adj.len()];
    seen[v] = true;
    Ok(go(g, v, k, &mut seen))
}
