//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any failed.

mod common;

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use truncircle::distance::{connes_distance, DistanceOptions};
use truncircle::experiments::{
    distortion_row, run_approximation_study, run_circle_recovery, run_distortion_study, ExperimentConfig,
};
use truncircle::fourier::{arc_distance, TrigPoly};
use truncircle::states::{CircleMeasure, PureState};
use truncircle::toeplitz::{compress, from_atoms, vandermonde_decompose, VandermondeAtom, RANK_TOL};
use truncircle::transport::{w1_circle, w1_lp_oracle, DEFAULT_GRID};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(budget: Duration, body: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = body();
    let took = start.elapsed();
    if took > budget {
        out.pass = false;
        out.detail += &format!("; over budget ({:.1?} > {:.0?})", took, budget);
    } else {
        out.detail += &format!("; {:.1?}", took);
    }
    out
}

fn two_mode_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = DistanceOptions::default();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let a = common::random_pure_state(2, &mut rng);
        let b = common::random_pure_state(2, &mut rng);
        let delta = a.moments().moment(1) - b.moments().moment(1);
        let d = connes_distance(&a.moments(), &b.moments(), &opts).unwrap().value;
        worst = worst.max((d - 2.0 * delta.norm()).abs());
    }
    Outcome { pass: worst <= 1e-6, detail: format!("max |d_2 - 2|δ_1|| = {worst:.2e}") }
}

fn small_n_oracle() -> Outcome {
    let opts = DistanceOptions::default();
    let mut worst = 0.0f64;
    let mut above_upper = false;
    for n in [3, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + n as u64);
        for pair in 0..10 {
            let a = common::random_pure_state(n, &mut rng);
            let b = common::random_pure_state(n, &mut rng);
            let cert = connes_distance(&a.moments(), &b.moments(), &opts).unwrap();
            let reference = common::grid_oracle(&a, &b, pair);
            worst = worst.max((cert.value - reference).abs() / reference);
            above_upper |= reference > cert.upper_bound * (1.0 + 1e-9);
        }
    }
    Outcome {
        pass: worst <= 1e-3 && !above_upper,
        detail: format!("max relative deviation from grid oracle = {worst:.2e}, oracle above dual bound: {above_upper}"),
    }
}

fn random_measure(rng: &mut impl Rng) -> CircleMeasure {
    let atoms: Vec<(f64, f64)> = (0..rng.gen_range(1..=4))
        .map(|_| (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.1..1.0)))
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let atomic = CircleMeasure::atomic(atoms.into_iter().map(|(t, w)| (t, w / total)).collect()).unwrap();
    if rng.gen_bool(0.5) {
        return atomic;
    }
    let smooth = common::random_pure_state(rng.gen_range(2..=8), rng).pullback();
    let s = rng.gen_range(0.0..=1.0);
    CircleMeasure::combine(&[(s, &atomic), (1.0 - s, &smooth)]).unwrap()
}

fn transport_vs_lp() -> Outcome {
    let g = 256;
    let tol = 2.0 * 2.0 * PI / g as f64;
    let two = CircleMeasure::atomic(vec![(PI / 2.0, 0.5), (3.0 * PI / 2.0, 0.5)]).unwrap();
    let exact = [
        (CircleMeasure::dirac(0.3), CircleMeasure::dirac(0.3), 0.0),
        (CircleMeasure::dirac(0.0), CircleMeasure::dirac(PI), PI),
        (CircleMeasure::dirac(0.0), two, PI / 2.0),
    ];
    let mut worst_exact = 0.0f64;
    for (mu, nu, value) in &exact {
        let w = w1_circle(mu, nu, g).unwrap();
        let lp = w1_lp_oracle(mu, nu, g).unwrap();
        worst_exact = worst_exact.max((w - value).abs()).max((lp - value).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let mu = random_measure(&mut rng);
        let nu = random_measure(&mut rng);
        let w = w1_circle(&mu, &nu, g).unwrap();
        let lp = w1_lp_oracle(&mu, &nu, g).unwrap();
        worst = worst.max((w - lp).abs());
    }
    Outcome {
        pass: worst <= tol && worst_exact <= tol,
        detail: format!("max |W1 - LP| = {worst:.2e} (random), {worst_exact:.2e} (exact cases), tolerance {tol:.2e}"),
    }
}

fn separated_nodes(count: usize, sep: f64, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let nodes: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let ok = nodes
            .iter()
            .enumerate()
            .all(|(i, &a)| nodes[i + 1..].iter().all(|&b| arc_distance(a, b) >= sep));
        if ok {
            return nodes;
        }
    }
}

fn vandermonde_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_res, mut worst_node, mut worst_weight) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=12);
        let r = rng.gen_range(1..n);
        let atoms: Vec<VandermondeAtom> = separated_nodes(r, 0.1, &mut rng)
            .into_iter()
            .map(|node| VandermondeAtom { weight: rng.gen_range(0.05..=1.0), node })
            .collect();
        let t = from_atoms(n, &atoms).unwrap();
        let got = match vandermonde_decompose(&t, RANK_TOL) {
            Ok(g) if g.len() == r => g,
            _ => {
                failures += 1;
                continue;
            }
        };
        let residual = from_atoms(n, &got).unwrap().sub(&t).unwrap().spectral_norm().unwrap();
        worst_res = worst_res.max(residual / t.spectral_norm().unwrap());
        for a in &atoms {
            let nearest = got
                .iter()
                .min_by(|x, y| arc_distance(x.node, a.node).total_cmp(&arc_distance(y.node, a.node)))
                .unwrap();
            worst_node = worst_node.max(arc_distance(nearest.node, a.node));
            worst_weight = worst_weight.max((nearest.weight - a.weight).abs());
        }
    }
    Outcome {
        pass: failures == 0 && worst_res <= 1e-8 && worst_node <= 1e-7 && worst_weight <= 1e-7,
        detail: format!(
            "relative residual {worst_res:.2e}, node error {worst_node:.2e}, weight error {worst_weight:.2e}, failed decompositions {failures}"
        ),
    }
}

fn random_real_poly(degree: usize, rng: &mut impl Rng) -> TrigPoly {
    let mut pairs = vec![(0, Complex64::new(rng.gen_range(-1.0..1.0), 0.0))];
    for k in 1..=degree as i64 {
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        pairs.push((k, c));
        pairs.push((-k, c.conj()));
    }
    TrigPoly::from_pairs(&pairs)
}

fn pure_state_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=16);
        let state = common::random_pure_state(n, &mut rng);
        let f = random_real_poly(rng.gen_range(0..=n + 3), &mut rng);
        let lhs = state.evaluate(&compress(&f, n).unwrap()).unwrap();
        let rhs = state.pullback().integrate(&f);
        worst = worst.max((lhs - rhs.re).abs()).max(rhs.im.abs());
    }
    Outcome { pass: worst <= 1e-10, detail: format!("max |⟨ξ, P f P ξ⟩ - ∫ f dμ| = {worst:.2e}") }
}

fn distortion_trend() -> Outcome {
    let cfg = ExperimentConfig { n_range: vec![4, 20], samples: 12, seed: 6, ..Default::default() };
    let rows = run_distortion_study(&cfg).unwrap();
    let (low, high) = (rows[0].max_discrepancy_lower_estimate, rows[1].max_discrepancy_lower_estimate);
    let trend = high < low;

    let antipodal = [PureState::from_roots(&[0.0]), PureState::from_roots(&[PI])];
    let row = distortion_row(2, &antipodal, &cfg).unwrap();
    let expected = PI - 2.0;
    let got = row.max_discrepancy_lower_estimate;
    let antipodal_ok = (got - expected).abs() <= 1e-3;
    Outcome {
        pass: trend && antipodal_ok,
        detail: format!(
            "max discrepancy {low:.4} (n=4) -> {high:.4} (n=20) [{}]; antipodal n=2 discrepancy {got:.6} vs required {expected:.6} [{}] (W1 of the pullbacks 1∓cos t is 4/π)",
            if trend { "ok" } else { "not decreasing" },
            if antipodal_ok { "ok" } else { "mismatch" },
        ),
    }
}

fn circle_recovery() -> Outcome {
    let cfg = ExperimentConfig { n_range: vec![4, 32], samples: 16, ..Default::default() };
    let rows = run_circle_recovery(&cfg).unwrap();
    let (small, large) = (&rows[0], &rows[1]);
    Outcome {
        pass: large.distortion_lower_estimate < 0.5 * small.distortion_lower_estimate && large.max_relative_error <= 0.15,
        detail: format!(
            "distortion {:.4} (n=4) -> {:.4} (n=32); max relative error vs arc at n=32 = {:.3}",
            small.distortion_lower_estimate, large.distortion_lower_estimate, large.max_relative_error
        ),
    }
}

fn approximation_pipeline() -> Outcome {
    let cfg = ExperimentConfig { n_range: vec![2, 4, 8, 16], grid: DEFAULT_GRID, ..Default::default() };
    let target = CircleMeasure::atomic(vec![(0.0, 0.5), (PI, 0.5)]).unwrap();
    let rows = run_approximation_study(&cfg, &target).unwrap();
    let ratio = |big_n: f64| {
        rows.iter()
            .find(|r| r.stage == 2 && r.big_n == Some(big_n))
            .and_then(|r| r.ratio_error)
            .unwrap()
    };
    let (e2, e4) = (ratio(1e2), ratio(1e4));
    let stage3: Vec<f64> = rows.iter().filter(|r| r.stage == 3).map(|r| r.w1_to_target).collect();
    let decreasing = stage3.len() == 4 && stage3.windows(2).all(|w| w[1] < w[0]);
    Outcome {
        pass: e4 <= 0.25 * e2 && decreasing,
        detail: format!("ratio error {e2:.2e} (N=1e2) -> {e4:.2e} (N=1e4); stage-3 W1 {stage3:.4?}"),
    }
}

fn run_cli(args: &[&str], out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_truncircle"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .expect("binary runs");
    assert!(status.success(), "{args:?} exited with {status}");
    std::fs::read(out).unwrap()
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("truncircle-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    std::fs::write(&a, r#"{"kind": "pure", "n": 4, "roots": [0.1, 2.0, 4.0]}"#).unwrap();
    std::fs::write(&b, r#"{"kind": "moment", "n": 4, "moments": [[1, 0], [0.5, 0.1], [0.1, 0], [0, 0]]}"#).unwrap();
    let (a, b) = (a.to_str().unwrap().to_string(), b.to_str().unwrap().to_string());
    let runs: Vec<Vec<&str>> = vec![
        vec!["distortion", "--n-range", "2..5", "--samples", "5", "--seed", "11"],
        vec!["distortion", "--n-range", "3,6", "--samples", "4", "--seed", "11", "--format", "json"],
        vec!["approximate", "--target", "half-half"],
        vec!["approximate", "--target", "uniform", "--m", "8", "--n-range", "2,4", "--format", "json"],
        vec!["recover-circle", "--n-range", "4,8", "--samples", "6"],
        vec!["distance", &a, &b],
        vec!["distance", &a, &b, "--format", "json"],
    ];
    let mut mismatched = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let first = run_cli(args, &dir.join(format!("{i}-1.out")));
        let second = run_cli(args, &dir.join(format!("{i}-2.out")));
        if first != second || first.is_empty() {
            mismatched.push(args[0]);
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    Outcome {
        pass: mismatched.is_empty(),
        detail: format!("{} runs compared byte-for-byte, differing: {mismatched:?}", runs.len()),
    }
}

fn main() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        ("n=2 closed form", Duration::from_secs(1), two_mode_closed_form),
        ("small-n grid oracle", min(2), small_n_oracle),
        ("W1 engine vs LP oracle", min(1), transport_vs_lp),
        ("Vandermonde round trip", Duration::from_secs(30), vandermonde_round_trip),
        ("pure-state identity", min(1), pure_state_identity),
        ("distortion trend", min(10), distortion_trend),
        ("circle recovery", min(10), circle_recovery),
        ("approximation pipeline", min(5), approximation_pipeline),
        ("determinism", min(10), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, body)) in criteria.into_iter().enumerate() {
        let out = check(budget, body);
        failed += usize::from(!out.pass);
        println!("criterion {} ({name}): {} — {}", i + 1, if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
