use crate::models::Graph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreParams {
    pub tau: f64,
    pub delta: f64,
    pub c: f64,
    pub d_factor: f64,
    /// Constants of the length law's lower tail, `F(t) >= exp(-c2 log(1/t)^gamma)`.
    pub c2: f64,
    pub gamma: f64,
}

/// `((r^d)^{(1-delta)/(DC(tau-1))}, (r^d)^{(1+delta)/(tau-1)}]`.
pub fn core_weight_interval(p: &CoreParams, r: f64, d: usize) -> (f64, f64) {
    let rd = r.powi(d as i32);
    (
        rd.powf((1.0 - p.delta) / (p.d_factor * p.c * (p.tau - 1.0))),
        rd.powf((1.0 + p.delta) / (p.tau - 1.0)),
    )
}

#[derive(Debug, Clone)]
pub struct CoreGraph {
    pub graph: Graph,
    /// Original ids of the retained vertices.
    pub ids: Vec<usize>,
    pub interval: (f64, f64),
    /// `exp(-2 c2 (log r^d)^gamma ((1+delta)/(tau-1))^gamma)`.
    pub q_r: f64,
}

/// Induced subgraph on vertices inside the closed box `[lo, hi]` whose weight
/// lies in the core interval for scale `r`.
pub fn core_graph(g: &Graph, lo: &[f64], hi: &[f64], r: f64, p: &CoreParams) -> CoreGraph {
    let d = g.vertices.window.d;
    let interval = core_weight_interval(p, r, d);
    let keep: Vec<bool> = (0..g.n())
        .map(|v| {
            let w = g.weight(v);
            let x = g.position(v);
            interval.0 < w && w <= interval.1 && (0..d).all(|a| lo[a] <= x[a] && x[a] <= hi[a])
        })
        .collect();
    let (graph, ids) = g.induced(&keep);
    let log_rd = d as f64 * r.ln();
    let q_r = (-2.0 * p.c2 * log_rd.powf(p.gamma) * ((1.0 + p.delta) / (p.tau - 1.0)).powf(p.gamma)).exp();
    CoreGraph { graph, ids, interval, q_r }
}
