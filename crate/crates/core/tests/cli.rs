use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pplab::cli::{read_graph, write_graph, RunConfig};
use pplab::models::{connect_prob, generate, ModelSpec};
use pplab::randomness::EdgeLengthLaw;

fn pplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pplab")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = pplab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    pplab(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_sfp_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    let report = ok(&[
        "generate", "--set", "model=sfp", "--set", "d=1", "--set", "radius=2", "--set", "tau=2.5", "--out", p(&out),
    ]);
    assert!(report.starts_with("n=5 "), "{report}");
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 5);
    assert!(text.lines().filter(|l| l.starts_with("e ")).count() >= 4);
    assert!(text.starts_with("#format pplab-graph 1\n#model sfp\n#d 1\n#n 5\n"));
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "model=igirg\nd=2\nside=12\ntau=2.3\nalpha=3\nc=0.7\nlaw=poly:0.5\n").unwrap();
    let files: Vec<Vec<u8>> = ["1", "1", "2"]
        .iter()
        .enumerate()
        .map(|(i, seed)| {
            let out = dir.path().join(format!("g{i}.txt"));
            ok(&["generate", "--config", p(&cfg), "--out", p(&out), "--seed", seed]);
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
    assert_ne!(files[0], files[2]);
}

#[test]
fn generate_figure_one_edge_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.txt");
    let args = [
        "generate", "--set", "model=girg", "--set", "n=1000", "--set", "d=2", "--set", "tau=2.9", "--set", "alpha=4",
        "--set", "c=0.1", "--seed", "17", "--out",
    ];
    let report = ok(&[&args[..], &[p(&out)]].concat());
    let edges: f64 = report.split_whitespace().find_map(|t| t.strip_prefix("edges=")).unwrap().parse().unwrap();

    // Expected count and variance from the pair oracle over independent vertex draws.
    let spec = ModelSpec::Girg {
        n: 1000,
        d: 2,
        tau: 2.9,
        alpha: 4.0,
        c: 0.1,
        c1_threshold: 1.0,
    };
    let law = EdgeLengthLaw::PointMass { value: 1.0 };
    let (mut mean, mut var) = (0.0, 0.0);
    let reps = 4;
    for r in 0..reps {
        let g = generate(&spec, &law, 1000 + r).unwrap();
        for u in 0..g.n() {
            for v in u + 1..g.n() {
                let q = connect_prob(&spec, g.position(u), g.position(v), g.weight(u), g.weight(v));
                mean += q;
                var += q * (1.0 - q);
            }
        }
    }
    mean /= reps as f64;
    var /= reps as f64;
    // Vertex positions and weights add variance on top of the Bernoulli part;
    // estimate it from the spread of the realized counts.
    let counts: Vec<f64> = (0..8).map(|r| generate(&spec, &law, 2000 + r).unwrap().edge_count() as f64).collect();
    let m = counts.iter().sum::<f64>() / counts.len() as f64;
    let s2 = counts.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / (counts.len() - 1) as f64;
    let sigma = var.max(s2).sqrt();
    assert!((edges - mean).abs() <= 3.0 * sigma, "edges {edges}, oracle mean {mean}, sigma {sigma}");
}

#[test]
fn graph_file_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    ok(&["generate", "--set", "model=hrg", "--set", "n=300", "--set", "alpha_h=0.8", "--out", p(&a), "--seed", "4"]);
    let first = fs::read(&a).unwrap();
    let g = read_graph(&first[..]).unwrap();
    let mut second = Vec::new();
    write_graph(&g, &mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn config_round_trip() {
    let text = "model=igirg\nlambda=2\nside=7.5\npin_origin=true\npenalty=poly:1,2,0;0.5,0,1\nlaw=dexp:2,1,0.5\n";
    let c: RunConfig = text.parse().unwrap();
    let back: RunConfig = c.to_string().parse().unwrap();
    assert_eq!(c, back);
    assert!(c.model().is_ok());
}

#[test]
fn distance_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(
        &g,
        "#format pplab-graph 1\n#model girg\n#d 1\n#n 4\n#side 1\n\
         v 0 -0.4 1\nv 1 0 2\nv 2 0.4 4\nv 3 0.1 1\n\
         e 0 1 0.5\ne 1 2 0.25\ne 0 2 3\n",
    )
    .unwrap();
    // prod:1 costs L * w_u * w_v: 0-1 = 1, 1-2 = 2, 0-2 = 12.
    assert_eq!(ok(&["distance", "--graph", p(&g), "--source", "0", "--target", "2"]), "distance=3 path=0,1,2\n");
    // mono:1,0 outward from 2: 2->1 costs 0.25*4 = 1, 1->0 costs 0.5*2 = 1.
    assert_eq!(
        ok(&["distance", "--graph", p(&g), "--penalty", "mono:1,0", "--source", "2", "--target", "0"]),
        "distance=2 path=2,1,0\n"
    );
    // Inward uses f(w_head, w_tail): 2->1 costs 0.25*2, 1->0 costs 0.5*1.
    assert_eq!(
        ok(&["distance", "--graph", p(&g), "--penalty", "mono:1,0", "--source", "2", "--target", "0", "--direction", "inward"]),
        "distance=1 path=2,1,0\n"
    );
    assert_eq!(ok(&["distance", "--graph", p(&g), "--source", "1", "--target", "1"]), "distance=0 path=1\n");
    assert_eq!(ok(&["distance", "--graph", p(&g), "--source", "0", "--target", "3"]), "distance=inf\n");
    assert_eq!(code(&["distance", "--graph", p(&g), "--source", "0", "--target", "9"]), 3);
    assert_eq!(code(&["distance", "--graph", p(&dir.path().join("none")), "--source", "0", "--target", "1"]), 3);
}

#[test]
fn classify_examples() {
    let v = ok(&["classify", "--tau", "2.5", "--alpha", "2", "--penalty", "prod:1", "--law", "poly:0.1"]);
    assert!(v.starts_with("outcome=ExplosiveLengthwise "), "{v}");
    assert_eq!(v.lines().count(), 1);
    let v = ok(&["classify", "--tau", "2.5", "--alpha", "0.5", "--penalty", "prod:1", "--law", "poly:5"]);
    assert!(v.starts_with("outcome=ExplosiveSideways "), "{v}");
    let v = ok(&["classify", "--tau", "1.5", "--alpha", "2", "--penalty", "poly:1,7/4,0;1,0,3/4", "--law", "poly:1"]);
    assert!(v.starts_with("outcome=Inconclusive "), "{v}");
    assert_eq!(code(&["classify", "--tau", "0.5", "--penalty", "prod:1"]), 2);
}

#[test]
fn params_hrgmap_and_seed_flag() {
    let v = ok(&["params", "--tau", "2.5", "--mu", "1", "--nu", "1", "--beta-plus", "0.1", "--seed", "9"]);
    assert!(v.starts_with("delta=") && v.trim_end().ends_with("recheck=pass"), "{v}");
    let r = (2.0 * 1000f64.ln()).to_string();
    assert_eq!(ok(&["hrgmap", "--phi", &std::f64::consts::PI.to_string(), "--r", &r, "--n", "1000"]), "x=0 w=1\n");
    assert_eq!(code(&["params", "--tau", "2.5", "--mu", "1", "--nu", "1", "--beta-plus", "1"]), 2);
}

#[test]
fn sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let single = ok(&[
        "sweep", "--set", "n=200", "--set", "betas=1", "--set", "graphs=1", "--set", "pairs=5", "--seed", "3",
    ]);
    let lines: Vec<&str> = single.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("beta,n,median_d,q1,q3,giant_frac,verdict,seed"));

    let args = [
        "sweep", "--set", "n=200", "--set", "betas=0.1,1", "--set", "sizes=150,300", "--set", "graphs=2", "--set",
        "pairs=4",
    ];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&[&args[..], &["--seed", "5", "--workers", "1", "--out", p(&a)]].concat());
    ok(&[&args[..], &["--seed", "5", "--workers", "2", "--out", p(&b)]].concat());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 5);
    assert_eq!(code(&["sweep", "--set", "bogus=1"]), 2);
}

#[test]
fn boxes_report() {
    let args = [
        "boxes", "--set", "model=igirg", "--set", "d=1", "--set", "side=1000", "--set", "tau=1.8", "--set", "c=1",
        "--mu", "0", "--nu", "0", "--seed", "1000",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    assert!(a.contains("annulus=0 ") && a.contains("annulus=1 ") && a.contains("bound_violations=0"), "{a}");
    assert_eq!(code(&["boxes", "--set", "model=girg", "--mu", "0", "--nu", "0"]), 2);
}
