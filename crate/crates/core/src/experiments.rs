//! Monte-Carlo harness: phase sweeps, degree and tail diagnostics, giant
//! component curves, the inward/outward asymmetry test, HRG kernel
//! validation, path-count decay and boxing-event runs.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::calibration;
use crate::cost::{
    classify_with_law, critical_beta, CriticalBeta, Direction, Penalty, PenaltyTable, PhaseOutcome, PhaseVerdict,
};
use crate::error::{Error, Result};
use crate::geometry::{build_boxing, BoxingSystem};
use crate::metrics::{
    build_greedy_path, check_f2, components, cost_search_with, delta_good_scan, greedy_cost_bound, largest_component,
    saw_path_count, successful, truncate_by_cost, SearchOptions,
};
use crate::models::{generate_with, sample_vertices, star_edges, GenerateOptions, Graph, ModelSpec};
use crate::randomness::{derive_seed, EdgeLengthLaw, Stream};

/// Same model with its size set to (about) `n` vertices.
pub fn with_size(spec: &ModelSpec, n: u64) -> ModelSpec {
    let mut s = *spec;
    match &mut s {
        ModelSpec::Girg { n: m, .. } | ModelSpec::Hrg { n: m, .. } => *m = n as usize,
        ModelSpec::IgirgWindow { lambda, d, side, .. } => *side = (n as f64 / *lambda).powf(1.0 / *d as f64),
        ModelSpec::SfpWindow { d, radius, .. } => {
            *radius = (((n as f64).powf(1.0 / *d as f64) - 1.0) / 2.0).round().max(0.0) as usize
        }
    }
    s
}

/// Edge-length laws indexed by the flatness exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawFamily {
    PolyAtZero,
    /// A single law; its `beta+` labels the cell.
    Fixed(EdgeLengthLaw),
}

impl LawFamily {
    pub fn law(&self, beta: f64) -> EdgeLengthLaw {
        match *self {
            LawFamily::PolyAtZero => EdgeLengthLaw::PolyAtZero { beta },
            LawFamily::Fixed(l) => l,
        }
    }

    fn betas(&self, grid: &[f64]) -> Vec<f64> {
        match self {
            LawFamily::PolyAtZero => grid.to_vec(),
            LawFamily::Fixed(l) => vec![l.beta_plus()],
        }
    }
}

/// A penalty and a family of length laws evaluated on shared topologies.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepArm {
    pub penalty: Penalty,
    pub law: LawFamily,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Template; its size is replaced by each entry of `sizes`.
    pub model: ModelSpec,
    pub penalty: Penalty,
    pub law: LawFamily,
    pub betas: Vec<f64>,
    pub sizes: Vec<u64>,
    pub pairs_per_graph: usize,
    pub graphs_per_cell: usize,
    pub seed: u64,
    pub workers: usize,
    pub max_vertices: u64,
}

impl SweepSpec {
    pub fn arm(&self) -> SweepArm {
        SweepArm {
            penalty: self.penalty.clone(),
            law: self.law,
            betas: self.betas.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() || self.sizes.is_empty() {
            return Err(Error::param("sweep grids must be non-empty"));
        }
        if self.graphs_per_cell == 0 {
            return Err(Error::param("graphs_per_cell must be positive"));
        }
        self.model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellStatus {
    Ok,
    /// Within the calibrated band around the critical exponent.
    NearCritical,
    GiantTooSmall,
    TooFewPairs,
    SizeCap,
    Failed,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellStatus::Ok => "ok",
            CellStatus::NearCritical => "near-critical",
            CellStatus::GiantTooSmall => "giant-too-small",
            CellStatus::TooFewPairs => "too-few-pairs",
            CellStatus::SizeCap => "size-cap",
            CellStatus::Failed => "failed",
        })
    }
}

impl CellStatus {
    fn from_error(e: &Error) -> Self {
        match e {
            Error::SizeCap { .. } => CellStatus::SizeCap,
            Error::GiantTooSmall(_) => CellStatus::GiantTooSmall,
            _ => CellStatus::Failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub beta: f64,
    pub n: u64,
    pub distances: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub giant_frac: f64,
    pub verdict: PhaseVerdict,
    pub status: CellStatus,
    pub seed: u64,
}

/// Linear-interpolation quantile of sorted data; `NaN` when empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sample_pair(s: &Stream, counter: &mut u64, n: usize, in_giant: &[bool]) -> (usize, usize) {
    let mut draw = || loop {
        let v = (s.word(*counter) % n as u64) as usize;
        *counter += 1;
        if in_giant[v] {
            return v;
        }
    };
    loop {
        let a = draw();
        let b = draw();
        if a != b {
            return (a, b);
        }
    }
}

/// Pairs of distinct vertices drawn uniformly from the largest component by
/// rejection over all vertices.
pub fn sample_giant_pairs(g: &Graph, pairs: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    let giant = largest_component(g);
    if giant.len() < 2 {
        return Err(Error::GiantTooSmall(giant.len()));
    }
    let mut in_giant = vec![false; g.n()];
    for &v in &giant {
        in_giant[v] = true;
    }
    let s = Stream::new(seed, "pairs");
    let mut counter = 0;
    Ok((0..pairs).map(|_| sample_pair(&s, &mut counter, g.n(), &in_giant)).collect())
}

fn pair_distances(g: &Graph, table: &PenaltyTable, pairs: &[(usize, usize)]) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(u, v)| {
            let r = cost_search_with(
                g,
                table,
                u,
                Direction::Outward,
                &SearchOptions {
                    target: Some(v),
                    ..Default::default()
                },
            );
            r.settled.last().filter(|x| x.0 == v).map_or(f64::INFINITY, |x| x.1)
        })
        .collect()
}

/// Outward distances between `pairs` uniformly chosen pairs of the largest component.
pub fn two_point_distance(g: &Graph, f: &Penalty, pairs: usize, seed: u64) -> Result<Vec<f64>> {
    let p = sample_giant_pairs(g, pairs, seed)?;
    let table = PenaltyTable::new(f, &g.vertices.weights);
    Ok(pair_distances(g, &table, &p))
}

fn near_critical(c: Option<CriticalBeta>, beta: f64) -> bool {
    let close = |b: f64| b.is_finite() && b > 0.0 && ((beta - b) / b).abs() < calibration::NEAR_CRITICAL_REL;
    match c {
        Some(CriticalBeta::Single(b)) => close(b),
        Some(CriticalBeta::OneSided {
            explosive_below,
            conservative_above,
        }) => close(explosive_below) || close(conservative_above) || (beta > explosive_below && beta < conservative_above),
        None => false,
    }
}

/// Per graph: giant fraction, then distances for each arm and beta.
struct GraphOutcome {
    giant_frac: f64,
    distances: Vec<Vec<Vec<f64>>>,
}

fn run_graph(spec: &SweepSpec, arms: &[SweepArm], n: u64, gi: usize) -> Result<GraphOutcome> {
    let model = with_size(&spec.model, n);
    let seed = derive_seed(spec.seed, &[n, gi as u64]);
    let opts = GenerateOptions {
        max_vertices: spec.max_vertices,
        weight_cap: None,
    };
    let base = arms[0].law.law(arms[0].law.betas(&arms[0].betas)[0]);
    let mut g = generate_with(&model, &base, seed, &opts)?;
    let giant_frac = largest_component(&g).len() as f64 / g.n().max(1) as f64;
    let pairs = sample_giant_pairs(&g, spec.pairs_per_graph, derive_seed(seed, &[0x9a1e]))?;
    let mut distances = Vec::with_capacity(arms.len());
    for arm in arms {
        let table = PenaltyTable::new(&arm.penalty, &g.vertices.weights);
        let mut per_beta = Vec::new();
        for beta in arm.law.betas(&arm.betas) {
            g.relength(&arm.law.law(beta), seed);
            per_beta.push(pair_distances(&g, &table, &pairs));
        }
        distances.push(per_beta);
    }
    Ok(GraphOutcome { giant_frac, distances })
}

/// Phase sweep over every `(beta, n)` cell; rows come back sorted by `(beta, n)`.
pub fn phase_sweep(spec: &SweepSpec) -> Result<Vec<CellResult>> {
    Ok(phase_sweep_arms(spec, &[])?.remove(0))
}

/// Sweep the spec's own arm and `extra` arms on the same graphs.
pub fn phase_sweep_arms(spec: &SweepSpec, extra: &[SweepArm]) -> Result<Vec<Vec<CellResult>>> {
    spec.validate()?;
    let mut arms = vec![spec.arm()];
    arms.extend_from_slice(extra);
    let (tau, alpha) = (spec.model.tau(), spec.model.alpha());
    let verdicts: Vec<Vec<PhaseVerdict>> = arms
        .iter()
        .map(|a| {
            a.law
                .betas(&a.betas)
                .iter()
                .map(|&b| classify_with_law(&a.penalty, Direction::Outward, tau, alpha, &a.law.law(b)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(u64, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&n| (0..spec.graphs_per_cell).map(move |g| (n, g)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.max(1))
        .build()
        .map_err(|e| Error::param(format!("worker pool: {e}")))?;
    let outcomes: Vec<((u64, usize), Result<GraphOutcome>)> =
        pool.install(|| jobs.par_iter().map(|&(n, g)| ((n, g), run_graph(spec, &arms, n, g))).collect());
    let mut by_size: BTreeMap<u64, Vec<&Result<GraphOutcome>>> = BTreeMap::new();
    for ((n, _), r) in &outcomes {
        by_size.entry(*n).or_default().push(r);
    }

    let mut tables = Vec::with_capacity(arms.len());
    for (ai, arm) in arms.iter().enumerate() {
        let crit = critical_beta(&arm.penalty, tau).ok();
        let mut rows = Vec::new();
        for (bi, beta) in arm.law.betas(&arm.betas).into_iter().enumerate() {
            for (&n, results) in &by_size {
                let mut dist = Vec::new();
                let mut fracs = Vec::new();
                let mut first_err = None;
                for r in results {
                    match r {
                        Ok(o) => {
                            fracs.push(o.giant_frac);
                            dist.extend(o.distances[ai][bi].iter().copied().filter(|d| d.is_finite()));
                        }
                        Err(e) => {
                            first_err.get_or_insert(CellStatus::from_error(e));
                        }
                    }
                }
                let wanted = spec.pairs_per_graph * spec.graphs_per_cell;
                let mut sorted = dist.clone();
                sorted.sort_by(f64::total_cmp);
                let enough = !sorted.is_empty() && sorted.len() as f64 >= calibration::MIN_PAIR_SHARE * wanted as f64;
                let status = if let (Some(s), false) = (first_err, enough) {
                    s
                } else if !enough {
                    CellStatus::TooFewPairs
                } else if near_critical(crit, beta) {
                    CellStatus::NearCritical
                } else {
                    CellStatus::Ok
                };
                let (median, q1, q3) = if enough {
                    (
                        quantile_sorted(&sorted, 0.5),
                        quantile_sorted(&sorted, 0.25),
                        quantile_sorted(&sorted, 0.75),
                    )
                } else {
                    (f64::NAN, f64::NAN, f64::NAN)
                };
                let giant_frac = if fracs.is_empty() {
                    f64::NAN
                } else {
                    fracs.iter().sum::<f64>() / fracs.len() as f64
                };
                rows.push(CellResult {
                    beta,
                    n,
                    distances: dist,
                    median,
                    q1,
                    q3,
                    giant_frac,
                    verdict: verdicts[ai][bi].clone(),
                    status,
                    seed: spec.seed,
                });
            }
        }
        rows.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.n.cmp(&b.n)));
        tables.push(rows);
    }
    Ok(tables)
}

pub const SWEEP_CSV_HEADER: [&str; 9] = ["beta", "n", "median_d", "q1", "q3", "giant_frac", "verdict", "seed", "status"];

pub fn write_sweep_csv<W: Write>(cells: &[CellResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for c in cells {
        w.write_record([
            c.beta.to_string(),
            c.n.to_string(),
            c.median.to_string(),
            c.q1.to_string(),
            c.q3.to_string(),
            c.giant_frac.to_string(),
            c.verdict.outcome.to_string(),
            c.seed.to_string(),
            c.status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `(n, median)` for one beta, in increasing `n`.
pub fn medians_by_size(cells: &[CellResult], beta: f64) -> Vec<(u64, f64)> {
    let mut v: Vec<(u64, f64)> = cells.iter().filter(|c| c.beta == beta).map(|c| (c.n, c.median)).collect();
    v.sort_by_key(|x| x.0);
    v
}

/// Least-squares slope of the median against `log2 n`.
pub fn slope_per_doubling(points: &[(u64, f64)]) -> f64 {
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).log2()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn strictly_increasing(points: &[(u64, f64)]) -> bool {
    points.windows(2).all(|w| w[1].1 > w[0].1)
}

/// Empirical trend of a sweep row set: `Some(true)` growing, `Some(false)`
/// flat, `None` neither.
pub fn trend(points: &[(u64, f64)]) -> Option<bool> {
    if points.iter().any(|p| !p.1.is_finite()) {
        return None;
    }
    if slope_per_doubling(points) <= calibration::FLAT_SLOPE_PER_DOUBLING {
        Some(false)
    } else if strictly_increasing(points) {
        Some(true)
    } else {
        None
    }
}

/// Whether the analytic verdict predicts bounded distances.
pub fn predicts_flat(v: &PhaseVerdict) -> Option<bool> {
    match v.outcome {
        PhaseOutcome::ExplosiveLengthwise | PhaseOutcome::ExplosiveSideways => Some(true),
        PhaseOutcome::Conservative => Some(false),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecadeBin {
    /// `floor(log10 w)`.
    pub decade: i32,
    pub count: usize,
    pub mean_degree: f64,
    pub mean_weight: f64,
    pub ratio: f64,
    pub reliable: bool,
}

pub fn degree_weight_profile(g: &Graph) -> Vec<DecadeBin> {
    let mut bins: BTreeMap<i32, (usize, f64, f64)> = BTreeMap::new();
    for v in 0..g.n() {
        let w = g.weight(v);
        let e = bins.entry(w.log10().floor() as i32).or_default();
        e.0 += 1;
        e.1 += g.degree(v) as f64;
        e.2 += w;
    }
    bins.into_iter()
        .map(|(decade, (count, deg, w))| {
            let mean_degree = deg / count as f64;
            let mean_weight = w / count as f64;
            DecadeBin {
                decade,
                count,
                mean_degree,
                mean_weight,
                ratio: mean_degree / mean_weight,
                reliable: count >= calibration::RELIABLE_DECADE_MIN,
            }
        })
        .collect()
}

/// Max over min of the ratios of reliable decades.
pub fn ratio_spread(bins: &[DecadeBin]) -> f64 {
    let r: Vec<f64> = bins.iter().filter(|b| b.reliable).map(|b| b.ratio).collect();
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Hill estimate of the Pareto index from the largest `top_fraction` of `values`.
pub fn tail_exponent_estimate(values: &[f64], top_fraction: f64) -> Result<f64> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::param(format!("top fraction must lie in (0, 1], got {top_fraction}")));
    }
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    let k = ((top_fraction * v.len() as f64).floor() as usize).min(v.len().saturating_sub(1));
    let required = calibration::MIN_EXCEEDANCES;
    if k == 0 {
        return Err(Error::TooFewExceedances { found: 0, required });
    }
    let cut = v[k];
    let above = v.iter().take_while(|&&x| x > cut).count();
    if above < required || !(cut > 0.0) {
        return Err(Error::TooFewExceedances { found: above, required });
    }
    let s: f64 = v[..above].iter().map(|x| (x / cut).ln()).sum();
    Ok(above as f64 / s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiantPoint {
    pub n: u64,
    pub largest: f64,
    pub second: f64,
    pub reps: usize,
}

/// Mean largest and second-largest component fractions per size.
pub fn giant_fraction_curve(model: &ModelSpec, sizes: &[u64], reps: usize, seed: u64) -> Result<Vec<GiantPoint>> {
    let law = EdgeLengthLaw::PointMass { value: 1.0 };
    sizes
        .iter()
        .map(|&n| {
            let spec = with_size(model, n);
            let fr: Vec<(f64, f64)> = (0..reps)
                .map(|r| {
                    let g = generate_with(&spec, &law, derive_seed(seed, &[n, r as u64]), &GenerateOptions::default())?;
                    let s = components(&g).sorted_sizes();
                    let total = g.n().max(1) as f64;
                    Ok((
                        s.first().copied().unwrap_or(0) as f64 / total,
                        s.get(1).copied().unwrap_or(0) as f64 / total,
                    ))
                })
                .collect::<Result<_>>()?;
            let k = reps.max(1) as f64;
            Ok(GiantPoint {
                n,
                largest: fr.iter().map(|x| x.0).sum::<f64>() / k,
                second: fr.iter().map(|x| x.1).sum::<f64>() / k,
                reps,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryPoint {
    pub side: f64,
    pub outward: Vec<usize>,
    pub inward: Vec<usize>,
}

impl AsymmetryPoint {
    pub fn mean_outward(&self) -> f64 {
        mean_usize(&self.outward)
    }

    pub fn mean_inward(&self) -> f64 {
        mean_usize(&self.inward)
    }
}

fn mean_usize(x: &[usize]) -> f64 {
    x.iter().sum::<usize>() as f64 / x.len().max(1) as f64
}

/// Outward and inward `N_1^t` at the pinned origin of windowed IGIRGs. With
/// `origin_weight` set, the origin's weight is fixed instead of sampled.
#[allow(clippy::too_many_arguments)]
pub fn asymmetry_experiment(
    model: &ModelSpec,
    f: &Penalty,
    law: &EdgeLengthLaw,
    sides: &[f64],
    t: f64,
    reps: usize,
    origin_weight: Option<f64>,
    seed: u64,
) -> Result<Vec<AsymmetryPoint>> {
    let ModelSpec::IgirgWindow { pin_origin: true, .. } = model else {
        return Err(Error::param("asymmetry experiment needs a windowed IGIRG with a pinned origin"));
    };
    if origin_weight.is_some_and(|w| !(w >= 1.0 && w.is_finite())) {
        return Err(Error::param("origin weight must be finite and >= 1"));
    }
    let opts = GenerateOptions::default();
    sides
        .iter()
        .enumerate()
        .map(|(si, &side)| {
            let mut spec = *model;
            if let ModelSpec::IgirgWindow { side: s, .. } = &mut spec {
                *s = side;
            }
            let counts: Vec<(usize, usize)> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let sd = derive_seed(seed, &[si as u64, r as u64]);
                    let mut vs = sample_vertices(&spec, sd, &opts)?;
                    if let Some(w) = origin_weight {
                        vs.weights[0] = w;
                    }
                    let w0 = vs.weights[0];
                    let star = star_edges(&spec, &vs, law, sd, 0);
                    let out = star.iter().filter(|&&(v, l)| l * f.eval(w0, vs.weights[v]) <= t).count();
                    let inw = star.iter().filter(|&&(v, l)| l * f.eval(vs.weights[v], w0) <= t).count();
                    Ok((out, inw))
                })
                .collect::<Result<_>>()?;
            Ok(AsymmetryPoint {
                side,
                outward: counts.iter().map(|c| c.0).collect(),
                inward: counts.iter().map(|c| c.1).collect(),
            })
        })
        .collect()
}

/// One verdict per batch of `batch` consecutive repetitions: outward means
/// grow by the calibrated factor at every step while inward means grow by less.
pub fn asymmetry_batches(points: &[AsymmetryPoint], batch: usize) -> Vec<bool> {
    let reps = points.first().map_or(0, |p| p.outward.len());
    (0..reps / batch.max(1))
        .map(|b| {
            let r = b * batch..(b + 1) * batch;
            let out: Vec<f64> = points.iter().map(|p| mean_usize(&p.outward[r.clone()])).collect();
            let inw: Vec<f64> = points.iter().map(|p| mean_usize(&p.inward[r.clone()])).collect();
            (1..points.len()).all(|i| {
                let go = out[i] / out[i - 1];
                let gi = if inw[i - 1] == 0.0 && inw[i] == 0.0 { 1.0 } else { inw[i] / inw[i - 1] };
                go >= calibration::ASYMMETRY_OUTWARD_GROWTH && gi < go
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBin {
    pub lo: f64,
    pub hi: f64,
    pub pairs: usize,
    pub edges: usize,
    pub empirical: f64,
    pub predicted: f64,
}

/// `(1 + x^{1/T})^{-1}`.
pub fn hrg_limit_kernel(arg: f64, t_h: f64) -> f64 {
    1.0 / (1.0 + arg.powf(1.0 / t_h))
}

/// Bin all pairs of mapped HRG vertices by `e^{C_H/2} |Delta| pi / (w_u w_v)`,
/// with `Delta` the circular gap scaled by `n`, and compare the fraction
/// connected with the mean limiting kernel per bin. Bins are log-spaced over
/// `[1e-3, 1e3]`.
pub fn hrg_kernel_validation(n: usize, alpha_h: f64, c_h: f64, t_h: f64, reps: usize, seed: u64, bins: usize) -> Result<Vec<KernelBin>> {
    let spec = ModelSpec::Hrg {
        n,
        alpha_h,
        c_h,
        t_h: Some(t_h),
    };
    let (lmin, lmax) = (-3.0f64, 3.0f64);
    let width = (lmax - lmin) / bins as f64;
    let scale = (0.5 * c_h).exp() * std::f64::consts::PI * n as f64;
    let law = EdgeLengthLaw::PointMass { value: 1.0 };
    let mut acc = vec![(0usize, 0usize, 0.0f64); bins];
    for r in 0..reps {
        let g = generate_with(&spec, &law, derive_seed(seed, &[r as u64]), &GenerateOptions::default())?;
        let win = g.vertices.window;
        let part: Vec<Vec<(usize, usize, f64)>> = (0..g.n())
            .into_par_iter()
            .fold(
                || vec![(0usize, 0usize, 0.0f64); bins],
                |mut a, u| {
                    let (xu, wu) = (g.position(u)[0], g.weight(u));
                    let nb = g.neighbors(u);
                    let mut ni = nb.partition_point(|&(v, _)| v <= u);
                    for v in u + 1..g.n() {
                        let arg = scale * win.axis_gap(xu, g.position(v)[0]) / (wu * g.weight(v));
                        while ni < nb.len() && nb[ni].0 < v {
                            ni += 1;
                        }
                        let b = ((arg.log10() - lmin) / width).floor();
                        if !(b >= 0.0 && b < bins as f64) {
                            continue;
                        }
                        let e = &mut a[b as usize];
                        e.0 += 1;
                        e.1 += (ni < nb.len() && nb[ni].0 == v) as usize;
                        e.2 += hrg_limit_kernel(arg, t_h);
                    }
                    a
                },
            )
            .collect();
        for p in part {
            for (a, x) in acc.iter_mut().zip(p) {
                a.0 += x.0;
                a.1 += x.1;
                a.2 += x.2;
            }
        }
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .map(|(i, (pairs, edges, h))| KernelBin {
            lo: 10f64.powf(lmin + i as f64 * width),
            hi: 10f64.powf(lmin + (i + 1) as f64 * width),
            pairs,
            edges,
            empirical: edges as f64 / pairs.max(1) as f64,
            predicted: h / pairs.max(1) as f64,
        })
        .collect())
}

/// Largest `|empirical - predicted|` over bins with enough pairs.
pub fn kernel_max_deviation(bins: &[KernelBin], min_pairs: usize) -> f64 {
    bins.iter()
        .filter(|b| b.pairs >= min_pairs)
        .map(|b| (b.empirical - b.predicted).abs())
        .fold(0.0, f64::max)
}

/// Fraction of `trials` in which the minimum of `n` i.i.d. lengths exceeds
/// the `zeta / n` quantile.
pub fn min_quantile_exceedance(law: &EdgeLengthLaw, n: u64, zeta: f64, trials: u64, seed: u64) -> Result<f64> {
    law.validate()?;
    if n == 0 || trials == 0 || !(zeta > 0.0 && zeta < n as f64) {
        return Err(Error::param("need n, trials >= 1 and 0 < zeta < n"));
    }
    let q = law.quantile(zeta / n as f64);
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = Stream::new(derive_seed(seed, &[t]), "min-quantile");
            (0..n).all(|j| law.from_uniform(s.uniform_open(j)) > q) as u64
        })
        .sum();
    Ok(hits as f64 / trials as f64)
}

/// Volume of the Euclidean unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// Truncation level `t0 = (2 lambda C2 E[W^{2 - 2 mu b}])^{-1/b}` with
/// `C2 = c_bar (V_d + 1/(d (alpha - 1)))` and Pareto(`tau`) weights, where
/// `c_bar` is an upper constant of the kernel: `h <= c_bar min(1, (w1 w2 / r^d)^alpha)`.
pub fn saw_t0(lambda: f64, c_bar: f64, d: usize, alpha: f64, tau: f64, mu: f64, b_eps: f64) -> Result<f64> {
    let s = 2.0 - 2.0 * mu * b_eps;
    if !(s < tau - 1.0) || !(alpha > 1.0) || !(b_eps > 0.0) {
        return Err(Error::param("weight moment or kernel integral diverges"));
    }
    let moment = (tau - 1.0) / (tau - 1.0 - s);
    let c2 = c_bar * (unit_ball_volume(d) + 1.0 / (d as f64 * (alpha - 1.0)));
    Ok((2.0 * lambda * c2 * moment).powf(-1.0 / b_eps))
}

/// Mean number of `k`-step self-avoiding walks from the pinned origin in the
/// graph of edges with cost at most `t0`, for each `k` in `ks`.
pub fn saw_decay(
    model: &ModelSpec,
    f: &Penalty,
    law: &EdgeLengthLaw,
    t0: f64,
    ks: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let counts: Vec<Vec<u64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let g = generate_with(model, law, derive_seed(seed, &[s as u64]), &GenerateOptions::default())?;
            let origin = g.vertices.origin_index.ok_or_else(|| Error::param("model has no pinned origin"))?;
            let t = truncate_by_cost(&g, f, t0, Direction::Outward);
            ks.iter().map(|&k| saw_path_count(&t, origin, k)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..ks.len())
        .map(|i| counts.iter().map(|c| c[i] as f64).sum::<f64>() / samples.max(1) as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxingRun {
    pub k_star: usize,
    pub f1: Vec<bool>,
    pub f2: Vec<bool>,
    pub good_leaders: Vec<usize>,
    pub b_k: Vec<usize>,
    pub paths_completed: usize,
    pub paths_failed: usize,
    /// Completed paths whose hops all lie below their quantile terms.
    pub bound_checked: usize,
    pub bound_violations: usize,
    pub successful: bool,
}

impl BoxingRun {
    pub fn f1_all(&self) -> bool {
        self.f1.iter().all(|&x| x)
    }
}

/// Boxing system centred at the pinned origin of a windowed IGIRG, with the
/// leader scan, both event checks and greedy paths from every good leader
/// below the outermost annulus, checked against the cost bound under
/// `w1^mu w2^nu`.
#[allow(clippy::too_many_arguments)]
pub fn boxing_run(
    model: &ModelSpec,
    mu: f64,
    nu: f64,
    law: &EdgeLengthLaw,
    m: f64,
    c: f64,
    d_factor: f64,
    delta: f64,
    seed: u64,
) -> Result<BoxingRun> {
    let g = generate_with(model, law, seed, &GenerateOptions::default())?;
    let origin = g.vertices.origin_index.ok_or_else(|| Error::param("model has no pinned origin"))?;
    let mut b: BoxingSystem = build_boxing(g.position(origin), m, c, d_factor, delta, &g.vertices.window)?;
    let tau = model.tau();
    delta_good_scan(&g, &mut b, tau);
    let f2 = check_f2(&g, &b, None);
    let f = Penalty::monomial(mu, nu)?;
    let mut run = BoxingRun {
        k_star: b.k_star,
        f1: b.annuli.iter().map(|a| a.f1 == Some(true)).collect(),
        f2,
        good_leaders: b.annuli.iter().map(|a| a.good.iter().filter(|&&x| x).count()).collect(),
        b_k: b.annuli.iter().map(|a| a.b_k()).collect(),
        paths_completed: 0,
        paths_failed: 0,
        bound_checked: 0,
        bound_violations: 0,
        successful: successful(&g, &b, origin),
    };
    for k0 in 0..b.k_star {
        let bound = greedy_cost_bound(&b, tau, mu, nu, law, None, k0, |k| k as f64 + 1.0);
        let starts: Vec<usize> = b.annuli[k0]
            .leaders
            .iter()
            .zip(&b.annuli[k0].good)
            .filter_map(|(l, &ok)| l.filter(|_| ok))
            .collect();
        for s in starts {
            match build_greedy_path(&g, &b, &f, s)? {
                Ok(p) => {
                    run.paths_completed += 1;
                    if let Some(ok) = p.check_bound(&bound) {
                        run.bound_checked += 1;
                        run.bound_violations += (!ok) as usize;
                    }
                }
                Err(_) => run.paths_failed += 1,
            }
        }
    }
    Ok(run)
}
