//! Graph generators for GIRG, windowed IGIRG, windowed scale-free percolation
//! and hyperbolic random graphs.
//!
//! Every unordered pair `{u, v}` owns a uniform variate keyed by
//! `(u << 32) | v` on the `"edges"` stream and is present iff that variate is
//! at most [`connect_prob`]. Present edges draw their length from the same key
//! on the `"lengths"` stream.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Boundary, Window};
use crate::randomness::{sample_poisson, EdgeLengthLaw, SeedSpec, Stream, WeightLaw, MIN_UNIFORM};

pub const DEFAULT_MAX_VERTICES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Girg {
        n: usize,
        d: usize,
        tau: f64,
        /// `f64::INFINITY` selects the threshold kernel.
        alpha: f64,
        c: f64,
        c1_threshold: f64,
    },
    IgirgWindow {
        lambda: f64,
        d: usize,
        side: f64,
        tau: f64,
        alpha: f64,
        c: f64,
        c1_threshold: f64,
        /// Pin an extra vertex at the origin as vertex 0.
        pin_origin: bool,
    },
    SfpWindow {
        d: usize,
        radius: usize,
        tau: f64,
        lambda_perc: f64,
        alpha_norm: f64,
    },
    Hrg {
        n: usize,
        alpha_h: f64,
        c_h: f64,
        /// `None` is the threshold model `d_H <= R_n`.
        t_h: Option<f64>,
    },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Girg { .. } => "girg",
            ModelSpec::IgirgWindow { .. } => "igirg",
            ModelSpec::SfpWindow { .. } => "sfp",
            ModelSpec::Hrg { .. } => "hrg",
        }
    }

    pub fn window(&self) -> Window {
        match *self {
            ModelSpec::Girg { d, .. } => Window::unit(d),
            ModelSpec::IgirgWindow { d, side, .. } => Window {
                d,
                side,
                boundary: Boundary::Hard,
            },
            ModelSpec::SfpWindow { d, radius, .. } => Window {
                d,
                side: (2 * radius + 1) as f64,
                boundary: Boundary::Hard,
            },
            ModelSpec::Hrg { .. } => Window {
                d: 1,
                side: 1.0,
                boundary: Boundary::Torus,
            },
        }
    }

    /// Weight exponent; for HRG the limiting `2 alpha_H + 1`.
    pub fn tau(&self) -> f64 {
        match *self {
            ModelSpec::Girg { tau, .. } | ModelSpec::IgirgWindow { tau, .. } | ModelSpec::SfpWindow { tau, .. } => tau,
            ModelSpec::Hrg { alpha_h, .. } => 2.0 * alpha_h + 1.0,
        }
    }

    /// Long-range exponent; for HRG `1 / T_H`.
    pub fn alpha(&self) -> f64 {
        match *self {
            ModelSpec::Girg { alpha, .. } | ModelSpec::IgirgWindow { alpha, .. } => alpha,
            ModelSpec::SfpWindow { alpha_norm, .. } => alpha_norm,
            ModelSpec::Hrg { t_h, .. } => t_h.map_or(f64::INFINITY, |t| 1.0 / t),
        }
    }

    /// `R_n = 2 ln n + C_H` for HRG.
    pub fn hrg_radius(&self) -> Option<f64> {
        match *self {
            ModelSpec::Hrg { n, c_h, .. } => Some(2.0 * (n as f64).ln() + c_h),
            _ => None,
        }
    }

    /// Requested (or expected) vertex count, used for the size cap.
    pub fn expected_vertices(&self) -> f64 {
        match *self {
            ModelSpec::Girg { n, .. } | ModelSpec::Hrg { n, .. } => n as f64,
            ModelSpec::IgirgWindow {
                lambda, d, side, pin_origin, ..
            } => lambda * side.powi(d as i32) + pin_origin as u8 as f64,
            ModelSpec::SfpWindow { d, radius, .. } => ((2 * radius + 1) as f64).powi(d as i32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::param(m));
        let tau_ok = |t: f64| t > 1.0 && t.is_finite();
        match *self {
            ModelSpec::Girg {
                n, d, tau, alpha, c, c1_threshold,
            } => {
                if n == 0 || d == 0 {
                    return bad(format!("girg needs n, d >= 1 (n={n}, d={d})"));
                }
                if !tau_ok(tau) || !(alpha > 1.0) || !(c >= 0.0) || !(c1_threshold > 0.0) {
                    return bad(format!(
                        "girg needs tau > 1, alpha in (1, inf], c >= 0, c1 > 0; got tau={tau} alpha={alpha} c={c} c1={c1_threshold}"
                    ));
                }
            }
            ModelSpec::IgirgWindow {
                lambda, d, side, tau, alpha, c, c1_threshold, ..
            } => {
                if d == 0 || !(lambda > 0.0) || !(side > 0.0) || !side.is_finite() || !lambda.is_finite() {
                    return bad(format!("igirg needs d >= 1, lambda > 0, side > 0 (d={d} lambda={lambda} side={side})"));
                }
                if !tau_ok(tau) || !(alpha > 0.0) || !(c >= 0.0) || !(c1_threshold > 0.0) {
                    return bad(format!(
                        "igirg needs tau > 1, alpha in (0, inf], c >= 0, c1 > 0; got tau={tau} alpha={alpha} c={c} c1={c1_threshold}"
                    ));
                }
            }
            ModelSpec::SfpWindow {
                d, tau, lambda_perc, alpha_norm, ..
            } => {
                if d == 0 || !tau_ok(tau) || !(lambda_perc >= 0.0) || !(alpha_norm > 0.0) {
                    return bad(format!(
                        "sfp needs d >= 1, tau > 1, lambda >= 0, alpha in (0, inf]; got d={d} tau={tau} lambda={lambda_perc} alpha={alpha_norm}"
                    ));
                }
            }
            ModelSpec::Hrg { n, alpha_h, c_h, t_h } => {
                if n < 2 || !(alpha_h > 0.5 && alpha_h < 1.0) || !c_h.is_finite() {
                    return bad(format!("hrg needs n >= 2, alpha_H in (1/2, 1), finite C_H; got n={n} alpha_H={alpha_h} C_H={c_h}"));
                }
                if let Some(t) = t_h {
                    if !(t > 0.0) || !t.is_finite() {
                        return bad(format!("hrg temperature must be positive, got {t}"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    pub max_vertices: u64,
    /// Condition Pareto weights on `W <= cap`.
    pub weight_cap: Option<f64>,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            max_vertices: DEFAULT_MAX_VERTICES,
            weight_cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    pub window: Window,
    /// Row-major, `window.d` coordinates per vertex.
    pub positions: Vec<f64>,
    pub weights: Vec<f64>,
    pub origin_index: Option<usize>,
}

impl VertexSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.window.d;
        &self.positions[i * d..(i + 1) * d]
    }
}

#[inline]
pub fn pair_key(u: usize, v: usize) -> u64 {
    let (a, b) = if u < v { (u, v) } else { (v, u) };
    ((a as u64) << 32) | b as u64
}

/// Undirected graph with one raw length per edge, stored as sorted adjacency
/// arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub model: String,
    pub vertices: VertexSet,
    offsets: Vec<usize>,
    /// `(neighbour, edge id)`, sorted by neighbour within each vertex.
    adj: Vec<(usize, usize)>,
    edges: Vec<(usize, usize)>,
    lengths: Vec<f64>,
}

impl Graph {
    /// Build from `(u, v, L)` triples; endpoints are normalised to `u < v`.
    pub fn from_edges(model: &str, vertices: VertexSet, list: Vec<(usize, usize, f64)>) -> Result<Graph> {
        let n = vertices.len();
        let mut list: Vec<(usize, usize, f64)> = list
            .into_iter()
            .map(|(u, v, l)| if u < v { (u, v, l) } else { (v, u, l) })
            .collect();
        for &(u, v, l) in &list {
            if u == v {
                return Err(Error::param(format!("self-loop at {u}")));
            }
            if v >= n {
                return Err(Error::MissingVertex(v));
            }
            if !(l >= 0.0) {
                return Err(Error::param(format!("edge {u}-{v} has invalid length {l}")));
            }
        }
        list.sort_by_key(|a| (a.0, a.1));
        if let Some(w) = list.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::param(format!("duplicate edge {}-{}", w[0].0, w[0].1)));
        }
        let mut deg = vec![0usize; n + 1];
        for &(u, v, _) in &list {
            deg[u + 1] += 1;
            deg[v + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let offsets = deg;
        let mut fill = offsets.clone();
        let mut adj = vec![(0usize, 0usize); 2 * list.len()];
        for (e, &(u, v, _)) in list.iter().enumerate() {
            adj[fill[u]] = (v, e);
            fill[u] += 1;
            adj[fill[v]] = (u, e);
            fill[v] += 1;
        }
        for v in 0..n {
            adj[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        let edges = list.iter().map(|&(u, v, _)| (u, v)).collect();
        let lengths = list.iter().map(|&(_, _, l)| l).collect();
        Ok(Graph {
            model: model.to_string(),
            vertices,
            offsets,
            adj,
            edges,
            lengths,
        })
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn weight(&self, v: usize) -> f64 {
        self.vertices.weights[v]
    }

    pub fn position(&self, v: usize) -> &[f64] {
        self.vertices.position(v)
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    #[inline]
    pub fn length(&self, e: usize) -> f64 {
        self.lengths[e]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.find_edge(u, v).is_some()
    }

    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        let nb = self.neighbors(u);
        nb.binary_search_by(|&(x, _)| x.cmp(&v)).ok().map(|i| nb[i].1)
    }

    /// Iterate `(u, v, L)` with `u < v`, sorted.
    pub fn edge_list(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().zip(&self.lengths).map(|(&(u, v), &l)| (u, v, l))
    }

    /// Redraw every edge length from `law`, keeping the pair-keyed variates.
    /// Graphs re-lengthed under different laws are coupled through the same
    /// uniforms.
    pub fn relength(&mut self, law: &EdgeLengthLaw, master_seed: u64) {
        let s = Stream::new(master_seed, "lengths");
        for (l, &(u, v)) in self.lengths.iter_mut().zip(&self.edges) {
            *l = law.from_uniform(s.uniform_open(pair_key(u, v)));
        }
    }

    /// Induced subgraph on the vertices with `keep[v]`; returns the new graph
    /// and the map from new ids to old ids.
    pub fn induced(&self, keep: &[bool]) -> (Graph, Vec<usize>) {
        let old: Vec<usize> = (0..self.n()).filter(|&v| keep[v]).collect();
        let mut new_id = vec![usize::MAX; self.n()];
        for (i, &v) in old.iter().enumerate() {
            new_id[v] = i;
        }
        let d = self.vertices.window.d;
        let vs = VertexSet {
            window: self.vertices.window,
            positions: old.iter().flat_map(|&v| self.position(v).to_vec()).collect(),
            weights: old.iter().map(|&v| self.weight(v)).collect(),
            origin_index: self.vertices.origin_index.and_then(|o| keep[o].then(|| new_id[o])),
        };
        debug_assert_eq!(vs.positions.len(), d * old.len());
        let list = self
            .edge_list()
            .filter(|&(u, v, _)| keep[u] && keep[v])
            .map(|(u, v, l)| (new_id[u], new_id[v], l))
            .collect();
        let g = Graph::from_edges(&self.model, vs, list).expect("subgraph of a valid graph");
        (g, old)
    }
}

/// Pairwise connection kernel with constants hoisted.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    kind: KernelKind,
    window: Window,
    alpha: f64,
    alpha_int: Option<i32>,
}

#[derive(Debug, Clone, Copy)]
enum KernelKind {
    /// `min(1, c (w_u w_v / (scale r^d))^alpha)`; `scale = n` for GIRG, 1 for IGIRG.
    Power { c: f64, c1: f64, scale: f64 },
    Sfp { lambda: f64 },
    Hrg { radius: f64, t: Option<f64> },
}

impl Kernel {
    pub(crate) fn new(spec: &ModelSpec) -> Self {
        let alpha = spec.alpha();
        let alpha_int = (alpha.is_finite() && alpha.fract() == 0.0 && alpha.abs() <= 64.0).then_some(alpha as i32);
        let kind = match *spec {
            ModelSpec::Girg { n, c, c1_threshold, .. } => KernelKind::Power {
                c,
                c1: c1_threshold,
                scale: n as f64,
            },
            ModelSpec::IgirgWindow { c, c1_threshold, .. } => KernelKind::Power {
                c,
                c1: c1_threshold,
                scale: 1.0,
            },
            ModelSpec::SfpWindow { lambda_perc, .. } => KernelKind::Sfp { lambda: lambda_perc },
            ModelSpec::Hrg { t_h, .. } => KernelKind::Hrg {
                radius: spec.hrg_radius().unwrap(),
                t: t_h,
            },
        };
        Kernel {
            kind,
            window: spec.window(),
            alpha,
            alpha_int,
        }
    }

    #[inline]
    fn pow_alpha(&self, x: f64) -> f64 {
        match self.alpha_int {
            Some(1) => x,
            Some(2) => x * x,
            Some(3) => x * x * x,
            Some(4) => {
                let y = x * x;
                y * y
            }
            Some(k) => x.powi(k),
            None => x.powf(self.alpha),
        }
    }

    /// `r^d` from the squared distance.
    #[inline]
    fn dist_pow_d(&self, r2: f64) -> f64 {
        match self.window.d {
            1 => r2.sqrt(),
            2 => r2,
            3 => r2 * r2.sqrt(),
            4 => r2 * r2,
            d => r2.powf(0.5 * d as f64),
        }
    }

    #[inline(always)]
    fn power(&self, c: f64, c1: f64, scale: f64, r2: f64, ww: f64) -> f64 {
        let rd = self.dist_pow_d(r2);
        if self.alpha == f64::INFINITY {
            return if c1 * ww >= scale * rd { 1.0 } else { 0.0 };
        }
        if c == 0.0 {
            return 0.0;
        }
        let p = c * self.pow_alpha(ww / (scale * rd));
        p.min(1.0)
    }

    #[inline]
    pub(crate) fn prob(&self, xu: &[f64], xv: &[f64], wu: f64, wv: f64) -> f64 {
        match self.kind {
            KernelKind::Power { c, c1, scale } => self.power(c, c1, scale, self.window.dist_sq(xu, xv), wu * wv),
            KernelKind::Sfp { lambda } => {
                let r2 = self.window.dist_sq(xu, xv);
                if r2 <= 1.0 {
                    return 1.0;
                }
                let q = wu * wv / self.dist_pow_d(r2);
                if self.alpha == f64::INFINITY {
                    return match q.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Greater) => 1.0,
                        Some(std::cmp::Ordering::Equal) => -(-lambda).exp_m1(),
                        _ => 0.0,
                    };
                }
                -(-lambda * self.pow_alpha(q)).exp_m1()
            }
            KernelKind::Hrg { radius, t } => {
                let ru = radius - 2.0 * wu.ln();
                let rv = radius - 2.0 * wv.ln();
                let dphi = 2.0 * PI * self.window.axis_gap(xu[0], xv[0]);
                let dh = hyperbolic_distance_stable(ru, rv, dphi);
                match t {
                    None => {
                        if dh <= radius {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Some(t) => 1.0 / (1.0 + ((dh - radius) / (2.0 * t)).exp()),
                }
            }
        }
    }
}

/// Exact connection probability used by the generator for this pair.
///
/// HRG pairs are given in mapped coordinates (position in `[-1/2, 1/2]` and
/// weight); the hyperbolic radii and angles are recovered by inverting the map.
pub fn connect_prob(spec: &ModelSpec, x_u: &[f64], x_v: &[f64], w_u: f64, w_v: f64) -> f64 {
    Kernel::new(spec).prob(x_u, x_v, w_u, w_v)
}

/// `(x, w) = ((phi - pi) / 2pi, exp((R - r) / 2))`.
pub fn hrg_to_girg_coords(phi: f64, r: f64, radius: f64) -> (f64, f64) {
    ((phi - PI) / (2.0 * PI), ((radius - r) / 2.0).exp())
}

/// Inverse of [`hrg_to_girg_coords`].
pub fn girg_to_hrg_coords(x: f64, w: f64, radius: f64) -> (f64, f64) {
    (2.0 * PI * x + PI, radius - 2.0 * w.ln())
}

#[inline]
fn hyperbolic_distance_stable(ru: f64, rv: f64, dphi: f64) -> f64 {
    // cosh r_u cosh r_v - sinh r_u sinh r_v cos dphi, rewritten without cancellation.
    let s = (0.5 * dphi).sin();
    let arg = (ru - rv).cosh() + 2.0 * ru.sinh() * rv.sinh() * s * s;
    arg.max(1.0).acosh()
}

pub fn hyperbolic_distance(phi_u: f64, r_u: f64, phi_v: f64, r_v: f64) -> f64 {
    hyperbolic_distance_stable(r_u, r_v, phi_u - phi_v)
}

/// Draw the vertex set of `spec`.
pub fn sample_vertices(spec: &ModelSpec, master_seed: u64, opts: &GenerateOptions) -> Result<VertexSet> {
    spec.validate()?;
    let expected = spec.expected_vertices();
    if expected > opts.max_vertices as f64 {
        return Err(Error::SizeCap {
            requested: expected.ceil() as u64,
            cap: opts.max_vertices,
        });
    }
    let window = spec.window();
    let d = window.d;
    let pos = Stream::new(master_seed, "positions");
    let wst = Stream::new(master_seed, "weights");
    let uniform_law = |tau: f64| -> Result<WeightLaw> {
        let law = WeightLaw::new(tau)?;
        match opts.weight_cap {
            Some(cap) => law.with_cap(cap),
            None => Ok(law),
        }
    };
    let place = |i: usize, side: f64| -> Vec<f64> {
        (0..d)
            .map(|a| side * (pos.uniform_open((i * d + a) as u64) - 0.5))
            .collect()
    };

    let vs = match *spec {
        ModelSpec::Girg { n, tau, .. } => {
            let law = uniform_law(tau)?;
            VertexSet {
                window,
                positions: (0..n).flat_map(|i| place(i, 1.0)).collect(),
                weights: (0..n).map(|i| law.from_uniform(wst.uniform(i as u64))).collect(),
                origin_index: None,
            }
        }
        ModelSpec::IgirgWindow {
            lambda, side, tau, pin_origin, ..
        } => {
            let law = uniform_law(tau)?;
            let count = sample_poisson(SeedSpec::new(master_seed, "count", 0), lambda * window.volume())? as usize;
            let total = count + pin_origin as usize;
            if total as u64 > opts.max_vertices {
                return Err(Error::SizeCap {
                    requested: total as u64,
                    cap: opts.max_vertices,
                });
            }
            let mut positions = Vec::with_capacity(total * d);
            if pin_origin {
                positions.extend(std::iter::repeat_n(0.0, d));
            }
            positions.extend((0..count).flat_map(|i| place(i, side)));
            VertexSet {
                window,
                positions,
                weights: (0..total).map(|i| law.from_uniform(wst.uniform(i as u64))).collect(),
                origin_index: pin_origin.then_some(0),
            }
        }
        ModelSpec::SfpWindow { d, radius, tau, .. } => {
            let law = uniform_law(tau)?;
            let w = 2 * radius + 1;
            let n = w.pow(d as u32);
            let mut positions = Vec::with_capacity(n * d);
            for i in 0..n {
                let mut c = i;
                for _ in 0..d {
                    positions.push((c % w) as f64 - radius as f64);
                    c /= w;
                }
            }
            let origin = (0..d).fold(0, |acc, a| acc + radius * w.pow(a as u32));
            VertexSet {
                window,
                positions,
                weights: (0..n).map(|i| law.from_uniform(wst.uniform(i as u64))).collect(),
                origin_index: Some(origin),
            }
        }
        ModelSpec::Hrg { n, alpha_h, .. } => {
            let radius = spec.hrg_radius().unwrap();
            let top = (alpha_h * radius).cosh() - 1.0;
            let mut positions = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            for i in 0..n {
                let phi = 2.0 * PI * pos.uniform_open(i as u64);
                // Inverse of the radial cdf (cosh(a r) - 1) / (cosh(a R) - 1).
                let r = ((1.0 + wst.uniform(i as u64) * top).acosh() / alpha_h).min(radius);
                let (x, w) = hrg_to_girg_coords(phi, r, radius);
                positions.push(x);
                weights.push(w);
            }
            VertexSet {
                window,
                positions,
                weights,
                origin_index: None,
            }
        }
    };
    Ok(vs)
}

/// Generate with the default size cap and no weight truncation.
pub fn generate(spec: &ModelSpec, law: &EdgeLengthLaw, master_seed: u64) -> Result<Graph> {
    generate_with(spec, law, master_seed, &GenerateOptions::default())
}

/// Exact generation: every pair is tested against its keyed uniform.
pub fn generate_with(spec: &ModelSpec, law: &EdgeLengthLaw, master_seed: u64, opts: &GenerateOptions) -> Result<Graph> {
    law.validate()?;
    let vs = sample_vertices(spec, master_seed, opts)?;
    let kernel = Kernel::new(spec);
    let edges = Stream::new(master_seed, "edges");
    let lengths = Stream::new(master_seed, "lengths");
    let pairs = match (kernel.kind, vs.window.d) {
        (KernelKind::Power { c, c1, scale }, 1) => power_pairs::<1>(&kernel, &vs, c, c1, scale, &edges),
        (KernelKind::Power { c, c1, scale }, 2) => power_pairs::<2>(&kernel, &vs, c, c1, scale, &edges),
        (KernelKind::Power { c, c1, scale }, 3) => power_pairs::<3>(&kernel, &vs, c, c1, scale, &edges),
        _ => rows(vs.len(), |u, out| {
            let xu = vs.position(u);
            let wu = vs.weights[u];
            for v in u + 1..vs.len() {
                let p = kernel.prob(xu, vs.position(v), wu, vs.weights[v]);
                if p >= MIN_UNIFORM && (p >= 1.0 || edges.uniform(pair_key(u, v)) <= p) {
                    out.push((u as u32, v as u32));
                }
            }
        }),
    };
    let list = pairs
        .into_iter()
        .map(|(u, v)| {
            let (u, v) = (u as usize, v as usize);
            (u, v, law.from_uniform(lengths.uniform_open(pair_key(u, v))))
        })
        .collect();
    Graph::from_edges(spec.name(), vs, list)
}

fn rows<F>(n: usize, row: F) -> Vec<(u32, u32)>
where
    F: Fn(usize, &mut Vec<(u32, u32)>) + Sync,
{
    let parts: Vec<Vec<(u32, u32)>> = (0..n)
        .into_par_iter()
        .with_min_len(64)
        .fold(Vec::new, |mut acc, u| {
            row(u, &mut acc);
            acc
        })
        .collect();
    let mut out: Vec<(u32, u32)> = parts.into_iter().flatten().collect();
    out.sort_unstable();
    out
}

// Same arithmetic as `Kernel::prob`, with coordinates unpacked into arrays.
fn power_pairs<const D: usize>(kernel: &Kernel, vs: &VertexSet, c: f64, c1: f64, scale: f64, edges: &Stream) -> Vec<(u32, u32)> {
    let pts: Vec<[f64; D]> = (0..vs.len())
        .map(|i| std::array::from_fn(|a| vs.positions[i * D + a]))
        .collect();
    let w = &vs.weights;
    let win = kernel.window;
    rows(vs.len(), |u, out| {
        let xu = pts[u];
        let wu = w[u];
        for (v, (xv, &wv)) in pts.iter().zip(w).enumerate().skip(u + 1) {
            let mut r2 = 0.0;
            for a in 0..D {
                let g = win.axis_gap(xu[a], xv[a]);
                r2 += g * g;
            }
            let p = kernel.power(c, c1, scale, r2, wu * wv);
            if p >= MIN_UNIFORM && (p >= 1.0 || edges.uniform(pair_key(u, v)) <= p) {
                out.push((u as u32, v as u32));
            }
        }
    })
}

/// Edges at vertex `u` only, drawn from the same keyed variates as
/// [`generate_with`]: returns `(neighbour, L)` sorted by neighbour.
pub fn star_edges(spec: &ModelSpec, vs: &VertexSet, law: &EdgeLengthLaw, master_seed: u64, u: usize) -> Vec<(usize, f64)> {
    let kernel = Kernel::new(spec);
    let edges = Stream::new(master_seed, "edges");
    let lengths = Stream::new(master_seed, "lengths");
    let xu = vs.position(u);
    let wu = vs.weights[u];
    (0..vs.len())
        .filter(|&v| v != u)
        .filter_map(|v| {
            let p = kernel.prob(xu, vs.position(v), wu, vs.weights[v]);
            let key = pair_key(u, v);
            (p >= MIN_UNIFORM && (p >= 1.0 || edges.uniform(key) <= p)).then(|| (v, law.from_uniform(lengths.uniform_open(key))))
        })
        .collect()
}

/// Replay the Bernoulli of a single pair from its key.
pub fn resample_pair(spec: &ModelSpec, vs: &VertexSet, master_seed: u64, u: usize, v: usize) -> bool {
    let p = connect_prob(spec, vs.position(u), vs.position(v), vs.weights[u], vs.weights[v]);
    p >= MIN_UNIFORM && (p >= 1.0 || Stream::new(master_seed, "edges").uniform(pair_key(u, v)) <= p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1(n: usize) -> ModelSpec {
        ModelSpec::Girg {
            n,
            d: 2,
            tau: 2.9,
            alpha: 4.0,
            c: 0.1,
            c1_threshold: 1.0,
        }
    }

    const EXP1: EdgeLengthLaw = EdgeLengthLaw::Exponential { rate: 1.0 };

    #[test]
    fn girg_kernel_examples() {
        let s = fig1(1000);
        assert_eq!(connect_prob(&s, &[0.1, 0.1], &[0.1, 0.1], 1.0, 1.0), 1.0);
        let big = Window::new(2, 10.0, Boundary::Hard).unwrap();
        let k = Kernel {
            window: big,
            ..Kernel::new(&s)
        };
        let p = k.prob(&[0.0, 0.0], &[1.0, 0.0], 1.0, 1.0);
        assert!((p / 1e-13 - 1.0).abs() < 1e-12, "{p}");
        let thr = ModelSpec::Girg {
            n: 4,
            d: 1,
            tau: 2.5,
            alpha: f64::INFINITY,
            c: 1.0,
            c1_threshold: 1.0,
        };
        // w_u w_v = n |x_u - x_v| exactly: 1 * 1 = 4 * 0.25.
        assert_eq!(connect_prob(&thr, &[0.0], &[0.25], 1.0, 1.0), 1.0);
        assert_eq!(connect_prob(&thr, &[0.0], &[0.25], 1.0, 0.99), 0.0);
    }

    #[test]
    fn zero_c_has_no_edges() {
        let s = ModelSpec::Girg {
            n: 2,
            d: 1,
            tau: 2.5,
            alpha: 2.0,
            c: 0.0,
            c1_threshold: 1.0,
        };
        assert_eq!(generate(&s, &EXP1, 1).unwrap().edge_count(), 0);
    }

    #[test]
    fn sfp_path() {
        let s = ModelSpec::SfpWindow {
            d: 1,
            radius: 2,
            tau: 2.5,
            lambda_perc: 0.0,
            alpha_norm: 2.0,
        };
        let g = generate(&s, &EXP1, 3).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.edge_count(), 4);
        for v in 0..4 {
            assert!(g.has_edge(v, v + 1));
        }
        assert_eq!(g.vertices.origin_index, Some(2));
        assert_eq!(g.position(2), &[0.0]);
    }

    #[test]
    fn sfp_infinite_alpha() {
        let s = ModelSpec::SfpWindow {
            d: 1,
            radius: 5,
            tau: 2.5,
            lambda_perc: 1.0,
            alpha_norm: f64::INFINITY,
        };
        assert_eq!(connect_prob(&s, &[0.0], &[3.0], 2.0, 2.0), 1.0);
        assert!((connect_prob(&s, &[0.0], &[4.0], 2.0, 2.0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert_eq!(connect_prob(&s, &[0.0], &[5.0], 2.0, 2.0), 0.0);
    }

    #[test]
    fn symmetric_kernels() {
        let specs = [
            fig1(100),
            ModelSpec::SfpWindow {
                d: 2,
                radius: 3,
                tau: 2.5,
                lambda_perc: 0.7,
                alpha_norm: 1.7,
            },
            ModelSpec::Hrg {
                n: 100,
                alpha_h: 0.75,
                c_h: 1.0,
                t_h: Some(0.5),
            },
        ];
        let s = Stream::new(4, "sym");
        for spec in &specs {
            let w = spec.window();
            for i in 0..500u64 {
                let u: Vec<f64> = (0..2 * w.d).map(|j| w.side * (s.uniform(i * 8 + j as u64) - 0.5)).collect();
                let (wu, wv) = (1.0 / s.uniform(i * 8 + 6), 1.0 / s.uniform(i * 8 + 7));
                let a = connect_prob(spec, &u[..w.d], &u[w.d..], wu, wv);
                let b = connect_prob(spec, &u[w.d..], &u[..w.d], wv, wu);
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn hrg_map_examples() {
        let r = 10.0;
        let (x, w) = hrg_to_girg_coords(PI, r, r);
        assert_eq!((x, w), (0.0, 1.0));
        let (x, w) = hrg_to_girg_coords(0.0, r - 2.0, r);
        assert_eq!(x, -0.5);
        assert!((w - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_distance_examples() {
        assert!((hyperbolic_distance(1.0, 3.0, 1.0, 5.5) - 2.5).abs() < 1e-9);
        assert_eq!(hyperbolic_distance(0.3, 0.0, 2.0, 0.0), 0.0);
        let d = hyperbolic_distance(0.0, 3.0, PI / 2.0, 4.0);
        assert!((d - 6.309_660_603_466_952_8).abs() < 1e-12, "{d}");
    }

    #[test]
    fn hrg_weight_tail() {
        let spec = ModelSpec::Hrg {
            n: 10_000,
            alpha_h: 0.75,
            c_h: 1.0,
            t_h: Some(0.5),
        };
        let vs = sample_vertices(&spec, 17, &GenerateOptions::default()).unwrap();
        let mut w = vs.weights.clone();
        w.sort_by(f64::total_cmp);
        let n = w.len() as f64;
        let ks = w
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = 1.0 - x.powf(-1.5);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.03, "KS {ks}");
        assert!(vs.positions.iter().all(|&x| (-0.5..=0.5).contains(&x)));
    }

    #[test]
    fn graph_is_simple_and_symmetric() {
        let g = generate(&fig1(300), &EXP1, 9).unwrap();
        for v in 0..g.n() {
            let nb = g.neighbors(v);
            assert!(nb.windows(2).all(|w| w[0].0 < w[1].0));
            for &(u, e) in nb {
                assert_ne!(u, v);
                assert!(g.neighbors(u).iter().any(|&(x, e2)| x == v && e2 == e));
            }
        }
    }

    #[test]
    fn pair_resampling_reproduces_edges() {
        let spec = ModelSpec::Girg {
            n: 400,
            d: 2,
            tau: 2.5,
            alpha: 2.0,
            c: 0.5,
            c1_threshold: 1.0,
        };
        let g = generate(&spec, &EXP1, 21).unwrap();
        assert!(g.edge_count() > 100);
        for u in 0..g.n() {
            for v in u + 1..g.n() {
                assert_eq!(resample_pair(&spec, &g.vertices, 21, u, v), g.has_edge(u, v));
            }
        }
    }

    #[test]
    fn star_matches_full_generation() {
        let spec = ModelSpec::IgirgWindow {
            lambda: 1.0,
            d: 2,
            side: 20.0,
            tau: 1.5,
            alpha: 2.0,
            c: 1.0,
            c1_threshold: 1.0,
            pin_origin: true,
        };
        let law = EdgeLengthLaw::PolyAtZero { beta: 1.0 };
        let g = generate(&spec, &law, 5).unwrap();
        let star = star_edges(&spec, &g.vertices, &law, 5, 0);
        let full: Vec<(usize, f64)> = g.neighbors(0).iter().map(|&(v, e)| (v, g.length(e))).collect();
        assert_eq!(star, full);
        assert_eq!(g.position(0), &[0.0, 0.0]);
    }

    #[test]
    fn edge_frequency_matches_oracle() {
        // 100 fixed pairs, each resampled over 2000 seeds.
        let spec = ModelSpec::Girg {
            n: 1000,
            d: 2,
            tau: 2.9,
            alpha: 4.0,
            c: 0.1,
            c1_threshold: 1.0,
        };
        let s = Stream::new(77, "pairs");
        let vs = sample_vertices(&spec, 77, &GenerateOptions::default()).unwrap();
        let mut checked = 0;
        for i in 0..100u64 {
            let u = (s.word(2 * i) % 1000) as usize;
            let v = (s.word(2 * i + 1) % 1000) as usize;
            if u == v {
                continue;
            }
            // Scale the pair so the probability is not degenerate.
            let xu = vs.position(u);
            let xv: Vec<f64> = xu.iter().map(|&a| a + 0.01 * s.uniform(500 + i)).collect();
            let p = connect_prob(&spec, xu, &xv, vs.weights[u], vs.weights[v]);
            let trials = 2000u64;
            let hits = (0..trials)
                .filter(|&t| Stream::new(t, "edges").uniform(pair_key(u, v)) <= p)
                .count() as f64;
            let sd = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((hits / trials as f64 - p).abs() <= 3.0 * sd + 1e-12, "pair {u}-{v} p={p} freq={}", hits / trials as f64);
            checked += 1;
        }
        assert!(checked > 90);
    }

    #[test]
    fn size_cap() {
        let spec = ModelSpec::Girg {
            n: 200_000,
            d: 1,
            tau: 2.5,
            alpha: 2.0,
            c: 1.0,
            c1_threshold: 1.0,
        };
        assert!(matches!(generate(&spec, &EXP1, 0), Err(Error::SizeCap { .. })));
        let opts = GenerateOptions {
            max_vertices: 10,
            weight_cap: None,
        };
        let sfp = ModelSpec::SfpWindow {
            d: 2,
            radius: 2,
            tau: 2.5,
            lambda_perc: 1.0,
            alpha_norm: 2.0,
        };
        assert!(generate_with(&sfp, &EXP1, 0, &opts).is_err());
    }

    #[test]
    fn relength_couples_laws() {
        let mut g = generate(&fig1(300), &EdgeLengthLaw::PolyAtZero { beta: 1.0 }, 4).unwrap();
        let base: Vec<f64> = g.lengths().to_vec();
        g.relength(&EdgeLengthLaw::PolyAtZero { beta: 0.5 }, 4);
        for (a, b) in base.iter().zip(g.lengths()) {
            assert!((a * a - b).abs() < 1e-12);
        }
    }
}
