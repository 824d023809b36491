use std::collections::HashMap;

use crate::cost::Penalty;
use crate::error::{Error, Result};
use crate::geometry::{locate_subbox, BoxingSystem};
use crate::models::Graph;
use crate::randomness::EdgeLengthLaw;

/// `(e^{(1-delta) M C^k/(tau-1)}, e^{(1+delta) M C^k/(tau-1)}]`.
pub fn good_weight_interval(b: &BoxingSystem, tau: f64, k: usize) -> (f64, f64) {
    let e = b.m * b.c.powi(k as i32) / (tau - 1.0);
    (((1.0 - b.delta) * e).exp(), ((1.0 + b.delta) * e).exp())
}

/// Record the maximal-weight vertex of every sub-box (ties to the lowest id),
/// whether its weight is typical for the annulus, and whether at least half
/// the sub-boxes of each annulus are good.
pub fn delta_good_scan(g: &Graph, b: &mut BoxingSystem, tau: f64) {
    for ann in b.annuli.iter_mut() {
        ann.leaders.iter_mut().for_each(|l| *l = None);
    }
    for v in 0..g.n() {
        if let Some((k, i)) = locate_subbox(b, g.position(v)) {
            let slot = &mut b.annuli[k].leaders[i];
            match *slot {
                Some(l) if g.weight(l) >= g.weight(v) => {}
                _ => *slot = Some(v),
            }
        }
    }
    for k in 0..b.annuli.len() {
        let (lo, hi) = good_weight_interval(b, tau, k);
        let ann = &mut b.annuli[k];
        ann.good = ann
            .leaders
            .iter()
            .map(|l| l.is_some_and(|v| lo < g.weight(v) && g.weight(v) <= hi))
            .collect();
        let good = ann.good.iter().filter(|&&x| x).count();
        ann.f1 = Some(2 * good >= ann.b_k());
    }
}

/// Good leaders keyed by vertex id, with their annulus.
fn good_leaders(b: &BoxingSystem) -> HashMap<usize, usize> {
    let mut m = HashMap::new();
    for ann in &b.annuli {
        for (l, &ok) in ann.leaders.iter().zip(&ann.good) {
            if let (Some(v), true) = (l, ok) {
                m.insert(*v, ann.k);
            }
        }
    }
    m
}

/// For each annulus `k`, whether every good leader of `Gamma_k` has at least
/// `e^{(1-eps) M C^{k+1} (D-1)}` good-leader neighbours in `Gamma_{k+1}`.
/// `eps` defaults to `delta`; the last annulus holds vacuously.
pub fn check_f2(g: &Graph, b: &BoxingSystem, epsilon: Option<f64>) -> Vec<bool> {
    let eps = epsilon.unwrap_or(b.delta);
    let leaders = good_leaders(b);
    (0..b.annuli.len())
        .map(|k| {
            if k >= b.k_star {
                return true;
            }
            let threshold = ((1.0 - eps) * b.m * b.c.powi(k as i32 + 1) * (b.d_factor - 1.0)).exp();
            let ann = &b.annuli[k];
            ann.leaders.iter().zip(&ann.good).all(|(l, &ok)| {
                let Some(c) = l.filter(|_| ok) else { return true };
                let count = g
                    .neighbors(c)
                    .iter()
                    .filter(|(u, _)| leaders.get(u) == Some(&(k + 1)))
                    .count();
                count as f64 >= threshold
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPath {
    pub vertices: Vec<usize>,
    /// Annulus of each vertex.
    pub annuli: Vec<usize>,
    pub lengths: Vec<f64>,
    pub hop_costs: Vec<f64>,
    pub total_cost: f64,
}

impl GreedyPath {
    /// `None` when some hop is longer than its quantile term, so the bound
    /// does not apply; otherwise whether the cost respects it.
    pub fn check_bound(&self, bound: &GreedyBound) -> Option<bool> {
        let k0 = self.annuli[0];
        for (h, &l) in self.lengths.iter().enumerate() {
            if l > bound.quantiles[k0 + h - bound.k0] {
                return None;
            }
        }
        Some(self.total_cost <= bound.bound * (1.0 + 1e-12))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyFailure {
    /// First annulus with no adjacent good leader.
    pub annulus: usize,
    pub partial: Vec<usize>,
}

/// From a good leader, repeatedly step along the shortest edge to a good
/// leader of the next annulus (ties to the lowest id) until `Gamma_{k_star}`.
pub fn build_greedy_path(
    g: &Graph,
    b: &BoxingSystem,
    f: &Penalty,
    start: usize,
) -> Result<std::result::Result<GreedyPath, GreedyFailure>> {
    let leaders = good_leaders(b);
    let Some(&k0) = leaders.get(&start) else {
        return Err(Error::param(format!("vertex {start} is not a good leader")));
    };
    let mut path = GreedyPath {
        vertices: vec![start],
        annuli: vec![k0],
        lengths: Vec::new(),
        hop_costs: Vec::new(),
        total_cost: 0.0,
    };
    let mut cur = start;
    for k in k0..b.k_star {
        let next = g
            .neighbors(cur)
            .iter()
            .filter(|(u, _)| leaders.get(u) == Some(&(k + 1)))
            .min_by(|a, b2| g.length(a.1).total_cmp(&g.length(b2.1)).then(a.0.cmp(&b2.0)));
        let Some(&(u, e)) = next else {
            return Ok(Err(GreedyFailure {
                annulus: k + 1,
                partial: path.vertices,
            }));
        };
        let l = g.length(e);
        let c = l * f.eval(g.weight(cur), g.weight(u));
        path.vertices.push(u);
        path.annuli.push(k + 1);
        path.lengths.push(l);
        path.hop_costs.push(c);
        path.total_cost += c;
        cur = u;
    }
    Ok(Ok(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyBound {
    pub k0: usize,
    /// `F^{-1}(zeta_k e^{-(1-eps) M C^{k+1} (D-1)})` for `k = k0..k_star`.
    pub quantiles: Vec<f64>,
    pub terms: Vec<f64>,
    pub bound: f64,
}

/// Cost bound for a greedy path from annulus `k0` under the monomial
/// `w1^mu w2^nu`, with good-leader weights at their upper endpoints.
#[allow(clippy::too_many_arguments)]
pub fn greedy_cost_bound(
    b: &BoxingSystem,
    tau: f64,
    mu: f64,
    nu: f64,
    law: &EdgeLengthLaw,
    epsilon: Option<f64>,
    k0: usize,
    zeta: impl Fn(usize) -> f64,
) -> GreedyBound {
    let eps = epsilon.unwrap_or(b.delta);
    let mut quantiles = Vec::new();
    let mut terms = Vec::new();
    for k in k0..b.k_star {
        let (_, hk) = good_weight_interval(b, tau, k);
        let (_, hk1) = good_weight_interval(b, tau, k + 1);
        let y = zeta(k) * (-(1.0 - eps) * b.m * b.c.powi(k as i32 + 1) * (b.d_factor - 1.0)).exp();
        let q = if y >= 1.0 { f64::INFINITY } else { law.quantile(y) };
        quantiles.push(q);
        terms.push(hk.powf(mu) * hk1.powf(nu) * q);
    }
    GreedyBound {
        k0,
        bound: terms.iter().sum(),
        quantiles,
        terms,
    }
}

/// Whether a box-increasing path leads from `u` to a good leader of the
/// outermost annulus, and that annulus satisfies the half-good condition.
pub fn successful(g: &Graph, b: &BoxingSystem, u: usize) -> bool {
    if b.annuli[b.k_star].f1 != Some(true) {
        return false;
    }
    let leaders = good_leaders(b);
    let mut reach: HashMap<usize, bool> = HashMap::new();
    for k in (0..=b.k_star).rev() {
        let ann = &b.annuli[k];
        for (l, &ok) in ann.leaders.iter().zip(&ann.good) {
            let Some(c) = l.filter(|_| ok) else { continue };
            let r = k == b.k_star
                || g
                    .neighbors(c)
                    .iter()
                    .any(|(x, _)| leaders.get(x) == Some(&(k + 1)) && reach.get(x) == Some(&true));
            reach.insert(c, r);
        }
    }
    if leaders.get(&u) == Some(&b.k_star) {
        return true;
    }
    g.neighbors(u)
        .iter()
        .any(|(x, _)| leaders.get(x).is_some_and(|&k| k >= 1) && reach.get(x) == Some(&true))
}

/// Greedy variant: some good-leader neighbour of `u` in an annulus `k >= 1`
/// starts a greedy path that completes.
pub fn greedy_successful(g: &Graph, b: &BoxingSystem, f: &Penalty, u: usize) -> bool {
    if b.annuli[b.k_star].f1 != Some(true) {
        return false;
    }
    let leaders = good_leaders(b);
    if leaders.get(&u) == Some(&b.k_star) {
        return true;
    }
    g.neighbors(u).iter().any(|&(x, _)| {
        leaders.get(&x).is_some_and(|&k| k >= 1)
            && matches!(build_greedy_path(g, b, f, x), Ok(Ok(_)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_boxing, Boundary, Window};
    use crate::models::VertexSet;
    use crate::randomness::Stream;

    /// d = 1 boxing on a window of side 60 with sub-boxes of unit-ish size.
    fn system() -> BoxingSystem {
        let w = Window::new(1, 60.0, Boundary::Hard).unwrap();
        build_boxing(&[0.0], 0.5, 2.0, 3.0, 0.2, &w).unwrap()
    }

    fn graph_on(b: &BoxingSystem, pts: &[(f64, f64)], edges: Vec<(usize, usize, f64)>) -> Graph {
        let vs = VertexSet {
            window: b.window,
            positions: pts.iter().map(|p| p.0).collect(),
            weights: pts.iter().map(|p| p.1).collect(),
            origin_index: None,
        };
        Graph::from_edges("test", vs, edges).unwrap()
    }

    #[test]
    fn layout() {
        let b = system();
        // Box_k half-sides e^{1.5 * 2^k}/2 = 2.24, 10.04, 201.7; k_star = 1.
        assert_eq!(b.k_star, 1);
        assert_eq!(b.annuli[0].b_k(), 2);
        assert!(b.annuli[1].b_k() >= 4);
    }

    #[test]
    fn scan_by_hand() {
        let mut b = system();
        let tau = 2.5;
        let (lo0, hi0) = good_weight_interval(&b, tau, 0);
        let (lo1, _) = good_weight_interval(&b, tau, 1);
        let a0 = &b.annuli[0];
        let (x0, _) = a0.extent(0);
        let (x1, _) = a0.extent(1);
        let pts = [
            (x0[0] + 0.1, hi0),
            (x0[0] + 0.2, 0.5 * (lo0 + hi0)),
            (x1[0] + 0.1, lo0),
        ];
        let g = graph_on(&b, &pts, vec![]);
        delta_good_scan(&g, &mut b, tau);
        let a0 = &b.annuli[0];
        assert_eq!(a0.leaders, vec![Some(0), Some(2)]);
        // Upper endpoint is included, lower is excluded.
        assert_eq!(a0.good, vec![true, false]);
        assert_eq!(a0.f1, Some(true));
        assert!(b.annuli[1].leaders.iter().all(Option::is_none));
        assert_eq!(b.annuli[1].f1, Some(false));
        assert!(lo1 > hi0);
        assert_eq!(check_f2(&g, &b, None), vec![false, true]);
    }

    #[test]
    fn equal_weights_lowest_id() {
        let mut b = system();
        let (x0, _) = b.annuli[0].extent(0);
        let g = graph_on(&b, &[(x0[0] + 0.5, 3.0), (x0[0] + 0.1, 3.0)], vec![]);
        delta_good_scan(&g, &mut b, 2.5);
        assert_eq!(b.annuli[0].leaders[0], Some(0));
    }

    /// One good leader per sub-box in both annuli, plus the centre vertex.
    fn populated(edges: impl Fn(&[usize], &[usize]) -> Vec<(usize, usize, f64)>) -> (BoxingSystem, Graph) {
        let mut b = system();
        let tau = 2.5;
        let mut pts = vec![(0.0, 1.0)];
        let mut ids = [Vec::new(), Vec::new()];
        for k in 0..2 {
            let (lo, hi) = good_weight_interval(&b, tau, k);
            for i in 0..b.annuli[k].b_k() {
                let (x, _) = b.annuli[k].extent(i);
                ids[k].push(pts.len());
                pts.push((x[0] + 0.01, 0.5 * (lo + hi)));
            }
        }
        let g = graph_on(&b, &pts, edges(&ids[0], &ids[1]));
        delta_good_scan(&g, &mut b, tau);
        (b, g)
    }

    #[test]
    fn greedy_picks_shortest_then_lowest() {
        let (b, g) = populated(|a0, a1| vec![(a0[0], a1[2], 0.5), (a0[0], a1[1], 0.5), (a0[0], a1[0], 0.9), (a0[1], a1[3], 0.1)]);
        let f = Penalty::product(0.0).unwrap();
        let leaders: Vec<usize> = b.annuli[0].leaders.iter().flatten().copied().collect();
        let p = build_greedy_path(&g, &b, &f, leaders[0]).unwrap().unwrap();
        let a1: Vec<usize> = b.annuli[1].leaders.iter().flatten().copied().collect();
        assert_eq!(p.vertices, vec![leaders[0], a1[1]]);
        assert_eq!(p.total_cost, 0.5);
        let top = a1[0];
        let p = build_greedy_path(&g, &b, &f, top).unwrap().unwrap();
        assert_eq!((p.vertices.len(), p.total_cost), (1, 0.0));
        assert!(build_greedy_path(&g, &b, &f, 0).is_err());
    }

    #[test]
    fn greedy_failure_reports_annulus() {
        let (b, g) = populated(|_, _| vec![]);
        let f = Penalty::product(1.0).unwrap();
        let l = b.annuli[0].leaders[0].unwrap();
        let fail = build_greedy_path(&g, &b, &f, l).unwrap().unwrap_err();
        assert_eq!(fail.annulus, 1);
    }

    #[test]
    fn success_cases() {
        // The first hop must land in an annulus k >= 1.
        let (b, g) = populated(|a0, a1| vec![(0, a0[0], 1.0), (a0[0], a1[0], 1.0)]);
        assert!(!successful(&g, &b, 0));
        let (b, g) = populated(|a0, _| vec![(0, a0[0], 1.0)]);
        assert!(!successful(&g, &b, 0));
        let (b, g) = populated(|_, a1| vec![(0, a1[3], 1.0)]);
        assert!(successful(&g, &b, 0));
        let (b, g) = populated(|_, _| vec![]);
        assert!(!successful(&g, &b, 0));
        let top = b.annuli[1].leaders[0].unwrap();
        assert!(successful(&g, &b, top));
    }

    /// Exhaustive depth-first search over leader sequences with annulus
    /// increasing by one.
    fn dfs_success(g: &Graph, b: &BoxingSystem, u: usize) -> bool {
        if b.annuli[b.k_star].f1 != Some(true) {
            return false;
        }
        let leader_k = |v: usize| {
            b.annuli
                .iter()
                .find_map(|a| a.leaders.iter().zip(&a.good).any(|(l, &ok)| ok && *l == Some(v)).then_some(a.k))
        };
        fn go(g: &Graph, b: &BoxingSystem, v: usize, k: usize, lk: &dyn Fn(usize) -> Option<usize>) -> bool {
            k == b.k_star || g.neighbors(v).iter().any(|&(x, _)| lk(x) == Some(k + 1) && go(g, b, x, k + 1, lk))
        }
        if leader_k(u) == Some(b.k_star) {
            return true;
        }
        g.neighbors(u)
            .iter()
            .any(|&(x, _)| matches!(leader_k(x), Some(k) if k >= 1 && go(g, b, x, k, &leader_k)))
    }

    #[test]
    fn success_vs_dfs() {
        let w = Window::new(1, 400.0, Boundary::Hard).unwrap();
        for seed in 0..200 {
            let mut b = build_boxing(&[0.0], 0.3, 1.6, 3.0, 0.3, &w).unwrap();
            let s = Stream::new(seed, "success");
            let tau = 2.5;
            let mut pts = vec![(0.0, 1.0)];
            for k in 0..=b.k_star {
                let (lo, hi) = good_weight_interval(&b, tau, k);
                for i in 0..b.annuli[k].b_k() {
                    let (x, y) = b.annuli[k].extent(i);
                    let r = s.uniform(pts.len() as u64);
                    let wgt = if r < 0.8 { lo + (hi - lo) * r / 0.8 } else { 0.5 * lo };
                    pts.push((x[0] + 0.5 * (y[0] - x[0]), wgt.max(1.0)));
                }
            }
            let n = pts.len();
            let p = 0.05 + 0.3 * s.uniform(10_000);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if s.uniform(20_000 + (u * n + v) as u64) < p {
                        edges.push((u, v, s.uniform_open(90_000 + (u * n + v) as u64)));
                    }
                }
            }
            let g = graph_on(&b, &pts, edges);
            delta_good_scan(&g, &mut b, tau);
            for u in 0..n.min(10) {
                assert_eq!(successful(&g, &b, u), dfs_success(&g, &b, u), "seed {seed} u {u}");
            }
        }
    }

    #[test]
    fn bound_holds_per_hop() {
        let (b, g) = populated(|a0, a1| vec![(a0[0], a1[0], 1e-9)]);
        let law = EdgeLengthLaw::PolyAtZero { beta: 0.5 };
        let f = Penalty::monomial(1.0, 0.5).unwrap();
        let l = b.annuli[0].leaders[0].unwrap();
        let p = build_greedy_path(&g, &b, &f, l).unwrap().unwrap();
        let bound = greedy_cost_bound(&b, 2.5, 1.0, 0.5, &law, None, 0, |k| k as f64 + 1.0);
        assert_eq!(bound.terms.len(), 1);
        assert_eq!(p.check_bound(&bound), Some(true));
    }
}
