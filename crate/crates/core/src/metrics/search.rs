use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::cost::{Direction, Penalty, PenaltyTable};
use crate::models::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct CostSearchResult {
    pub source: usize,
    pub direction: Direction,
    /// Settled vertices with their distances, in nondecreasing distance.
    pub settled: Vec<(usize, f64)>,
    /// True when the search ran out of reachable vertices rather than
    /// stopping at a budget, a size limit or a target.
    pub frontier_exhausted: bool,
    /// Predecessor of each settled vertex other than the source.
    pred: Vec<(usize, usize)>,
}

impl CostSearchResult {
    pub fn distance_to(&self, v: usize) -> Option<f64> {
        self.settled.iter().find(|&&(u, _)| u == v).map(|&(_, d)| d)
    }

    /// Vertices from source to `v` along the shortest-path tree.
    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        self.distance_to(v)?;
        let parents: HashMap<usize, usize> = self.pred.iter().copied().collect();
        let lookup = |x: usize| parents.get(&x).copied();
        let mut path = vec![v];
        let mut cur = v;
        while cur != self.source {
            cur = lookup(cur)?;
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions<'a> {
    pub budget: f64,
    pub max_settled: usize,
    pub target: Option<usize>,
    /// Restrict the search to vertices with `allowed[v]`.
    pub allowed: Option<&'a [bool]>,
}

impl Default for SearchOptions<'_> {
    fn default() -> Self {
        Self {
            budget: f64::INFINITY,
            max_settled: usize::MAX,
            target: None,
            allowed: None,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    v: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest cost distances from `source`, stopping once the next distance
/// exceeds `budget` or `max_settled` vertices are settled.
pub fn cost_search(
    g: &Graph,
    f: &Penalty,
    source: usize,
    direction: Direction,
    budget: f64,
    max_settled: usize,
) -> CostSearchResult {
    let table = PenaltyTable::new(f, &g.vertices.weights);
    cost_search_with(
        g,
        &table,
        source,
        direction,
        &SearchOptions {
            budget,
            max_settled,
            ..Default::default()
        },
    )
}

pub fn cost_search_with(
    g: &Graph,
    table: &PenaltyTable,
    source: usize,
    direction: Direction,
    opts: &SearchOptions<'_>,
) -> CostSearchResult {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut settled = Vec::new();
    let mut pred = Vec::new();
    let allowed = |v: usize| opts.allowed.is_none_or(|a| a[v]);

    let mut exhausted = true;
    if allowed(source) && opts.max_settled > 0 {
        dist[source] = 0.0;
        heap.push(Entry { dist: 0.0, v: source });
    }
    while let Some(Entry { dist: d, v }) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        if d > opts.budget {
            heap.push(Entry { dist: d, v });
            exhausted = false;
            break;
        }
        done[v] = true;
        settled.push((v, d));
        if v != source {
            pred.push((v, parent[v]));
        }
        if settled.len() >= opts.max_settled || opts.target == Some(v) {
            exhausted = false;
            break;
        }
        for &(u, e) in g.neighbors(v) {
            if done[u] || !allowed(u) {
                continue;
            }
            let factor = match direction {
                Direction::Outward => table.factor(v, u),
                Direction::Inward => table.factor(u, v),
            };
            let nd = d + g.length(e) * factor;
            if nd < dist[u] {
                dist[u] = nd;
                parent[u] = v;
                heap.push(Entry { dist: nd, v: u });
            }
        }
    }
    // Stopping exactly on the last reachable vertex still exhausts the frontier.
    if !exhausted && heap.iter().all(|e| done[e.v] || e.dist > dist[e.v]) {
        exhausted = true;
    }
    CostSearchResult {
        source,
        direction,
        settled,
        frontier_exhausted: exhausted,
        pred,
    }
}

/// `d_{f,L}(u, v)` in the given direction; `inf` when unreachable.
pub fn distance(g: &Graph, f: &Penalty, u: usize, v: usize, direction: Direction) -> f64 {
    shortest_path(g, f, u, v, direction).map_or(f64::INFINITY, |(d, _)| d)
}

pub fn shortest_path(g: &Graph, f: &Penalty, u: usize, v: usize, direction: Direction) -> Option<(f64, Vec<usize>)> {
    let table = PenaltyTable::new(f, &g.vertices.weights);
    let r = cost_search_with(
        g,
        &table,
        u,
        direction,
        &SearchOptions {
            target: Some(v),
            ..Default::default()
        },
    );
    let d = r.settled.last().filter(|&&(x, _)| x == v)?.1;
    Some((d, r.path_to(v)?))
}

/// Smallest `t` with more than `k` vertices in the outward cost ball around `v`.
pub fn sigma(g: &Graph, f: &Penalty, v: usize, k: usize) -> f64 {
    let r = cost_search(g, f, v, Direction::Outward, f64::INFINITY, k.saturating_add(1));
    r.settled.get(k).map_or(f64::INFINITY, |&(_, d)| d)
}

/// Edges at `v` whose cost, traversed away from `v` (outward) or towards it
/// (inward), is at most `t`.
pub fn n1t(g: &Graph, f: &Penalty, v: usize, t: f64, direction: Direction) -> usize {
    let wv = g.weight(v);
    g.neighbors(v)
        .iter()
        .filter(|&&(u, e)| {
            let w = match direction {
                Direction::Outward => f.eval(wv, g.weight(u)),
                Direction::Inward => f.eval(g.weight(u), wv),
            };
            g.length(e) * w <= t
        })
        .count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedBall {
    /// Sorted vertex ids.
    pub vertices: Vec<usize>,
    /// Distances aligned with `vertices`.
    pub distances: Vec<f64>,
    /// Set when the centre itself exceeds the weight cap.
    pub center_excluded: bool,
}

/// Outward cost ball of radius `t` in the subgraph of vertices with weight at most `w_cap`.
pub fn truncated_ball(g: &Graph, f: &Penalty, v: usize, t: f64, w_cap: f64) -> TruncatedBall {
    if g.weight(v) > w_cap {
        return TruncatedBall {
            vertices: Vec::new(),
            distances: Vec::new(),
            center_excluded: true,
        };
    }
    let allowed: Vec<bool> = g.vertices.weights.iter().map(|&w| w <= w_cap).collect();
    let table = PenaltyTable::new(f, &g.vertices.weights);
    let r = cost_search_with(
        g,
        &table,
        v,
        Direction::Outward,
        &SearchOptions {
            budget: t,
            allowed: Some(&allowed),
            ..Default::default()
        },
    );
    let mut s = r.settled;
    s.sort_by_key(|&(u, _)| u);
    TruncatedBall {
        vertices: s.iter().map(|&(u, _)| u).collect(),
        distances: s.iter().map(|&(_, d)| d).collect(),
        center_excluded: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exterior {
    /// Smallest weight above the cap reachable within cost `t`; `None` when empty.
    pub w_min: Option<f64>,
    /// All exterior vertices of weight `w_min`, sorted.
    pub vertices: Vec<usize>,
    /// Member of `vertices` closest to the centre in space (ties to lowest id).
    pub representative: Option<usize>,
}

/// Vertices above `w_cap` reachable by one edge out of the truncated ball
/// with total cost at most `t`, reduced to those of minimal weight.
pub fn exterior_set(g: &Graph, f: &Penalty, v: usize, t: f64, w_cap: f64) -> Exterior {
    let ball = truncated_ball(g, f, v, t, w_cap);
    let mut cands: Vec<usize> = Vec::new();
    for (&b, &db) in ball.vertices.iter().zip(&ball.distances) {
        for &(u, e) in g.neighbors(b) {
            if g.weight(u) > w_cap && db + g.length(e) * f.eval(g.weight(b), g.weight(u)) <= t {
                cands.push(u);
            }
        }
    }
    let Some(w_min) = cands.iter().map(|&u| g.weight(u)).min_by(f64::total_cmp) else {
        return Exterior {
            w_min: None,
            vertices: Vec::new(),
            representative: None,
        };
    };
    cands.retain(|&u| g.weight(u) == w_min);
    cands.sort_unstable();
    cands.dedup();
    let w = g.vertices.window;
    let representative = cands
        .iter()
        .copied()
        .min_by(|&a, &b| w.dist_sq(g.position(a), g.position(v)).total_cmp(&w.dist_sq(g.position(b), g.position(v))).then(a.cmp(&b)));
    Exterior {
        w_min: Some(w_min),
        vertices: cands,
        representative,
    }
}
