//! Command-line front end: run configurations, the graph text format and the
//! subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::cost::{classify_with_law, solve_boxing_params, Direction, Penalty, S_GRID};
use crate::cost::{cd_lhs, cdx2_lhs, mubeta3_lhs};
use crate::error::{Error, Result};
use crate::experiments::{boxing_run, phase_sweep, write_sweep_csv, LawFamily, SweepSpec};
use crate::geometry::{Boundary, Window};
use crate::metrics::{largest_component, shortest_path};
use crate::models::{generate_with, hrg_to_girg_coords, GenerateOptions, Graph, ModelSpec, VertexSet, DEFAULT_MAX_VERTICES};
use crate::randomness::EdgeLengthLaw;

/// Parse `poly:beta`, `exp:rate`, `dexp:eta,c1,c2` or `point:value`.
pub fn parse_law(s: &str) -> Result<EdgeLengthLaw> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| Error::param(format!("length law '{s}' must look like kind:params")))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::param(format!("bad number in law '{s}'"))))
        .collect::<Result<_>>()?;
    let want = |k: usize| {
        if nums.len() == k {
            Ok(())
        } else {
            Err(Error::param(format!("law '{s}' needs {k} parameters")))
        }
    };
    let law = match kind {
        "poly" => {
            want(1)?;
            EdgeLengthLaw::PolyAtZero { beta: nums[0] }
        }
        "exp" => {
            want(1)?;
            EdgeLengthLaw::Exponential { rate: nums[0] }
        }
        "dexp" => {
            want(3)?;
            EdgeLengthLaw::DoubleExpFlat {
                eta: nums[0],
                c1: nums[1],
                c2: nums[2],
            }
        }
        "point" => {
            want(1)?;
            EdgeLengthLaw::PointMass { value: nums[0] }
        }
        _ => return Err(Error::param(format!("unknown length law '{kind}'"))),
    };
    law.validate()?;
    Ok(law)
}

pub fn format_law(l: &EdgeLengthLaw) -> String {
    match *l {
        EdgeLengthLaw::PolyAtZero { beta } => format!("poly:{beta}"),
        EdgeLengthLaw::Exponential { rate } => format!("exp:{rate}"),
        EdgeLengthLaw::DoubleExpFlat { eta, c1, c2 } => format!("dexp:{eta},{c1},{c2}"),
        EdgeLengthLaw::PointMass { value } => format!("point:{value}"),
    }
}

/// Keys accepted in a run configuration.
pub const CONFIG_KEYS: &[&str] = &[
    "alpha",
    "alpha_h",
    "betas",
    "c",
    "c1",
    "c_h",
    "d",
    "graphs",
    "lambda",
    "lambda_perc",
    "law",
    "max_vertices",
    "model",
    "n",
    "pairs",
    "penalty",
    "pin_origin",
    "radius",
    "seed",
    "side",
    "sizes",
    "t_h",
    "tau",
    "workers",
];

/// Flat `key=value` document; `#` starts a comment line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl FromStr for RunConfig {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }
}

impl std::fmt::Display for RunConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        fs::read_to_string(path)?.parse()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn num<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config(format!("bad value for {key}: '{v}'"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad list entry for {key}: '{x}'"))))
                    .collect()
            })
            .transpose()
    }

    pub fn seed(&self) -> Result<u64> {
        self.num("seed", 0)
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let tau = self.num("tau", 2.5)?;
        let alpha = self.num("alpha", 2.0)?;
        let c = self.num("c", 1.0)?;
        let c1 = self.num("c1", 1.0)?;
        let d = self.num("d", 2usize)?;
        let spec = match self.get("model").unwrap_or("girg") {
            "girg" => ModelSpec::Girg {
                n: self.num("n", 1000)?,
                d,
                tau,
                alpha,
                c,
                c1_threshold: c1,
            },
            "igirg" => ModelSpec::IgirgWindow {
                lambda: self.num("lambda", 1.0)?,
                d,
                side: self.num("side", 10.0)?,
                tau,
                alpha,
                c,
                c1_threshold: c1,
                pin_origin: self.num("pin_origin", false)?,
            },
            "sfp" => ModelSpec::SfpWindow {
                d,
                radius: self.num("radius", 5)?,
                tau,
                lambda_perc: self.num("lambda_perc", 1.0)?,
                alpha_norm: alpha,
            },
            "hrg" => ModelSpec::Hrg {
                n: self.num("n", 1000)?,
                alpha_h: self.num("alpha_h", 0.75)?,
                c_h: self.num("c_h", 0.0)?,
                t_h: self.get("t_h").map(|v| v.parse().map_err(|_| Error::Config(format!("bad t_h '{v}'")))).transpose()?,
            },
            other => return Err(Error::Config(format!("unknown model '{other}'"))),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn law(&self) -> Result<EdgeLengthLaw> {
        parse_law(self.get("law").unwrap_or("exp:1")).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn penalty(&self) -> Result<Penalty> {
        self.get("penalty")
            .unwrap_or("prod:1")
            .parse()
            .map_err(|e: Error| Error::Config(e.to_string()))
    }

    pub fn max_vertices(&self) -> Result<u64> {
        self.num("max_vertices", DEFAULT_MAX_VERTICES)
    }

    /// Sweep over `betas` with `PolyAtZero` lengths when given, otherwise a
    /// single cell per size under the configured law.
    pub fn sweep(&self) -> Result<SweepSpec> {
        let model = self.model()?;
        let default_n = match model {
            ModelSpec::Girg { n, .. } | ModelSpec::Hrg { n, .. } => n as u64,
            other => other.expected_vertices().round() as u64,
        };
        let (law, betas) = match self.list::<f64>("betas")? {
            Some(b) => (LawFamily::PolyAtZero, b),
            None => {
                let l = self.law()?;
                (LawFamily::Fixed(l), vec![l.beta_plus()])
            }
        };
        let spec = SweepSpec {
            model,
            penalty: self.penalty()?,
            law,
            betas,
            sizes: self.list("sizes")?.unwrap_or(vec![default_n]),
            pairs_per_graph: self.num("pairs", 30)?,
            graphs_per_cell: self.num("graphs", 5)?,
            seed: self.seed()?,
            workers: self.num("workers", 1)?,
            max_vertices: self.max_vertices()?,
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

/// Write the graph text format.
pub fn write_graph<W: Write>(g: &Graph, mut out: W) -> Result<()> {
    let w = g.vertices.window;
    let mut s = String::new();
    writeln!(s, "#format pplab-graph 1").unwrap();
    writeln!(s, "#model {}", g.model).unwrap();
    writeln!(s, "#d {}", w.d).unwrap();
    writeln!(s, "#n {}", g.n()).unwrap();
    writeln!(s, "#side {}", w.side).unwrap();
    for v in 0..g.n() {
        write!(s, "v {v}").unwrap();
        for x in g.position(v) {
            write!(s, " {x}").unwrap();
        }
        writeln!(s, " {}", g.weight(v)).unwrap();
    }
    for (u, v, l) in g.edge_list() {
        writeln!(s, "e {u} {v} {l}").unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Read the graph text format.
pub fn read_graph<R: BufRead>(input: R) -> Result<Graph> {
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut positions = Vec::new();
    let mut weights = Vec::new();
    let mut edges = Vec::new();
    let mut d = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        let perr = |msg: String| Error::Parse { line: no, msg };
        if let Some(h) = line.strip_prefix('#') {
            let (k, v) = h.split_once(' ').ok_or_else(|| perr(format!("bad header '{line}'")))?;
            header.insert(k.to_string(), v.trim().to_string());
            if k == "d" {
                d = Some(v.trim().parse::<usize>().map_err(|_| perr("bad dimension".into()))?);
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let num = |t: Option<&str>| -> Result<f64> {
            t.ok_or_else(|| perr("missing field".into()))?
                .parse()
                .map_err(|_| perr("bad number".into()))
        };
        match it.next() {
            Some("v") => {
                let d = d.ok_or_else(|| perr("vertex before #d header".into()))?;
                let id = num(it.next())? as usize;
                if id != weights.len() {
                    return Err(perr(format!("vertex ids must be consecutive, got {id}")));
                }
                for _ in 0..d {
                    positions.push(num(it.next())?);
                }
                weights.push(num(it.next())?);
            }
            Some("e") => {
                let u = num(it.next())? as usize;
                let v = num(it.next())? as usize;
                edges.push((u, v, num(it.next())?));
            }
            None => continue,
            Some(t) => return Err(perr(format!("unknown record '{t}'"))),
        }
        if it.next().is_some() {
            return Err(perr("trailing fields".into()));
        }
    }
    let bad = |m: &str| Error::Parse { line: 0, msg: m.into() };
    if header.get("format").map(String::as_str) != Some("pplab-graph 1") {
        return Err(bad("missing '#format pplab-graph 1' header"));
    }
    let model = header.get("model").cloned().ok_or_else(|| bad("missing #model"))?;
    let side: f64 = header.get("side").and_then(|s| s.parse().ok()).ok_or_else(|| bad("missing #side"))?;
    let n: usize = header.get("n").and_then(|s| s.parse().ok()).ok_or_else(|| bad("missing #n"))?;
    if n != weights.len() {
        return Err(bad(&format!("header says {n} vertices, found {}", weights.len())));
    }
    let boundary = if model == "hrg" { Boundary::Torus } else { Boundary::Hard };
    let window = Window::new(d.ok_or_else(|| bad("missing #d"))?, side, boundary)?;
    let vs = VertexSet {
        window,
        positions,
        weights,
        origin_index: None,
    };
    Graph::from_edges(&model, vs, edges)
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    read_graph(io::BufReader::new(fs::File::open(path)?))
}

#[derive(Debug, Parser)]
#[command(name = "pplab", version, about = "Penalized first-passage percolation on spatial random graphs")]
pub struct Cli {
    /// Master seed; overrides the `seed` key of a configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration file of key=value lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra key=value settings applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self, seed: Option<u64>) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{kv}'")))?;
            c.set(k.trim(), v.trim())?;
        }
        if let Some(s) = seed {
            c.set("seed", &s.to_string())?;
        }
        Ok(c)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a graph and write it in the text format.
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cost distance and shortest path between two vertices of a graph file.
    Distance {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "prod:1")]
        penalty: String,
        #[arg(long)]
        source: usize,
        #[arg(long)]
        target: usize,
        #[arg(long, default_value = "outward")]
        direction: String,
    },
    /// Analytic phase verdict for a penalty and length law.
    Classify {
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long, default_value = "prod:1")]
        penalty: String,
        #[arg(long, default_value = "exp:1")]
        law: String,
        #[arg(long, default_value = "outward")]
        direction: String,
    },
    /// Two-point distance sweep over flatness exponents and sizes, as CSV.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Boxing parameters delta, C, D with the constants xi and rho.
    Params {
        #[arg(long)]
        tau: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long = "beta-plus")]
        beta_plus: f64,
    },
    /// Map hyperbolic polar coordinates to position and weight.
    Hrgmap {
        #[arg(long)]
        phi: f64,
        #[arg(long)]
        r: f64,
        /// Disk radius; defaults to `2 ln n + C_H`.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "c-h", default_value_t = 0.0)]
        c_h: f64,
    },
    /// Boxing system around the pinned origin of a windowed IGIRG: leader
    /// scan, event flags and greedy paths.
    Boxes {
        #[command(flatten)]
        config: ConfigArgs,
        /// Scale M; defaults to the largest value for which `Box_1` fits.
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        nu: f64,
    },
}

/// Run a parsed command line, writing reports to `out`.
pub fn run<W: Write>(cli: Cli, mut out: W) -> Result<()> {
    match cli.command {
        Command::Generate { config, out: path } => {
            let c = config.load(cli.seed)?;
            let spec = c.model()?;
            let opts = GenerateOptions {
                max_vertices: c.max_vertices()?,
                weight_cap: None,
            };
            let g = generate_with(&spec, &c.law()?, c.seed()?, &opts)?;
            let mut buf = Vec::new();
            write_graph(&g, &mut buf)?;
            fs::write(&path, buf)?;
            let frac = largest_component(&g).len() as f64 / g.n().max(1) as f64;
            writeln!(out, "n={} edges={} giant_fraction={}", g.n(), g.edge_count(), frac)?;
        }
        Command::Distance {
            graph,
            penalty,
            source,
            target,
            direction,
        } => {
            let g = load_graph(&graph)?;
            let f: Penalty = penalty.parse()?;
            let dir: Direction = direction.parse()?;
            for v in [source, target] {
                if v >= g.n() {
                    return Err(Error::MissingVertex(v));
                }
            }
            match shortest_path(&g, &f, source, target, dir) {
                Some((d, path)) => {
                    let p: Vec<String> = path.iter().map(usize::to_string).collect();
                    writeln!(out, "distance={d} path={}", p.join(","))?;
                }
                None => writeln!(out, "distance=inf")?,
            }
        }
        Command::Classify {
            tau,
            alpha,
            penalty,
            law,
            direction,
        } => {
            let f: Penalty = penalty.parse()?;
            let law = parse_law(&law)?;
            let v = classify_with_law(&f, direction.parse()?, tau, alpha, &law)?;
            writeln!(out, "{v}")?;
        }
        Command::Sweep { config, out: path, workers } => {
            let mut c = config.load(cli.seed)?;
            if let Some(w) = workers {
                c.set("workers", &w.to_string())?;
            }
            let cells = phase_sweep(&c.sweep()?)?;
            match path {
                Some(p) => write_sweep_csv(&cells, fs::File::create(p)?)?,
                None => write_sweep_csv(&cells, &mut out)?,
            }
        }
        Command::Params { tau, mu, nu, beta_plus } => {
            let p = solve_boxing_params(tau, mu, nu, beta_plus)?;
            let ok = cd_lhs(tau, p.delta, p.c, p.d) > 0.0
                && S_GRID.iter().all(|&s| {
                    cdx2_lhs(tau, p.delta, p.c, p.d, s) > 0.0 && mubeta3_lhs(tau, mu, nu, beta_plus, p.delta, p.c, p.d, s) < 0.0
                });
            writeln!(
                out,
                "delta={} C={} D={} xi={} rho={} recheck={}",
                p.delta,
                p.c,
                p.d,
                p.xi,
                p.rho,
                if ok { "pass" } else { "fail" }
            )?;
        }
        Command::Hrgmap { phi, r, radius, n, c_h } => {
            let radius = match (radius, n) {
                (Some(r), _) => r,
                (None, Some(n)) => 2.0 * (n as f64).ln() + c_h,
                (None, None) => return Err(Error::param("hrgmap needs --radius or --n")),
            };
            let (x, w) = hrg_to_girg_coords(phi, r, radius);
            writeln!(out, "x={x} w={w}")?;
        }
        Command::Boxes { config, m, mu, nu } => {
            let c = config.load(cli.seed)?;
            let mut spec = c.model()?;
            let ModelSpec::IgirgWindow { d, side, pin_origin, .. } = &mut spec else {
                return Err(Error::Config("boxes needs model=igirg".into()));
            };
            *pin_origin = true;
            let (d, side) = (*d, *side);
            let law = c.law()?;
            let tau = spec.tau();
            let p = solve_boxing_params(tau, mu, nu, law.beta_plus())?;
            let m = m.unwrap_or(d as f64 * side.ln() / (p.d * p.c));
            let run = boxing_run(&spec, mu, nu, &law, m, p.c, p.d, p.delta, c.seed()?)?;
            writeln!(out, "delta={} C={} D={} M={} k_star={}", p.delta, p.c, p.d, m, run.k_star)?;
            for k in 0..=run.k_star {
                writeln!(
                    out,
                    "annulus={k} b_k={} good={} F1={} F2={}",
                    run.b_k[k], run.good_leaders[k], run.f1[k], run.f2[k]
                )?;
            }
            writeln!(
                out,
                "greedy_completed={} greedy_failed={} bound_checked={} bound_violations={} successful={}",
                run.paths_completed, run.paths_failed, run.bound_checked, run.bound_violations, run.successful
            )?;
        }
    }
    Ok(())
}
