use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use truncircle::experiments::{
    emit, render, render_distance, run_approximation_study, run_circle_recovery, run_distance, run_distortion_study,
    ExperimentConfig, OutputFormat, RunError, RunResult, StateFile,
};
use truncircle::states::CircleMeasure;
use truncircle::Error;

/// Spectral truncations of the circle: distances on Toeplitz state spaces.
///
/// Exit status: 0 on success, 2 on invalid input, 3 if a distance computation
/// did not converge under --strict, 1 on any other failure.
#[derive(Parser)]
#[command(name = "truncircle", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare d_n with W1 of the pullbacks on random pure states.
    ///
    /// CSV columns: n, sampled_pairs, max_discrepancy_lower_estimate,
    /// mean_discrepancy, unconverged_pairs, max_feasibility [, runtime_ms].
    /// The maximum over sampled pairs only bounds the true distortion from below.
    Distortion(Common),
    /// Approximate a target measure: snap, ratio states, kernel products.
    ///
    /// --n-range lists the kernel powers of stage 3.
    /// CSV columns: stage, n, big_n, size, w1_to_target, w1_to_snap,
    /// ratio_error [, runtime_ms]; inapplicable cells are empty.
    Approximate {
        #[command(flatten)]
        common: Common,
        /// JSON measure file (kind "measure"), or one of: half-half (½δ₀ + ½δ_π), uniform.
        #[arg(long, default_value = "half-half")]
        target: String,
        /// Number of roots of unity.
        #[arg(long)]
        m: Option<usize>,
        /// Ratio parameters N, comma-separated.
        #[arg(long, value_delimiter = ',')]
        big_n: Option<Vec<f64>>,
    },
    /// Fejér states at equally spaced angles compared with arc length.
    ///
    /// --samples is the number of angles.
    /// CSV columns: n, sampled_lambda_count, distortion_lower_estimate,
    /// gh_upper_bound, max_relative_error, unconverged_pairs, max_feasibility
    /// [, runtime_ms].
    RecoverCircle(Common),
    /// d_n and W1 of the pullbacks for two states read from JSON files.
    ///
    /// A file holds {"kind": "pure", "n", "roots"}, {"kind": "moment", "n",
    /// "moments": [[re, im], ...] (m_0..m_{n-1})} or {"kind": "measure", "atoms": [[angle,
    /// weight], ...], "density": [[re, im], ...] | null}. Measures enter W1 as
    /// given and need --n when both inputs are measures.
    /// CSV columns: n, d_n, w1_of_pullbacks, upper_bound, gap, feasibility,
    /// iterations, converged, maximizer_diagonals (t_0..t_{n-1} as re:im;...).
    Distance {
        #[command(flatten)]
        common: Common,
        state_a: PathBuf,
        state_b: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Sizes as A..B (inclusive) or a comma list [defaults: distortion 2..24,
    /// approximate 2,4,8,16, recover-circle 4,8,16,32].
    #[arg(long)]
    n_range: Option<String>,
    /// Sampled states (distortion, default 12) or angles (recover-circle, default 16).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Initial grid for W1.
    #[arg(long, default_value_t = truncircle::transport::DEFAULT_GRID)]
    grid: usize,
    /// Iteration cap of the distance solver [default: 100000].
    #[arg(long)]
    max_iters: Option<usize>,
    /// Stall tolerance of the distance solver.
    #[arg(long)]
    tol: Option<f64>,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
    /// JSON object overriding the flags. Keys: n_range (array), samples, seed,
    /// grid, format, out, strict, timings, solver {max_iters, tol, stall_window,
    /// gap_tol, accept_gap, ...}, approximation {m, big_n, extra_multiplicity,
    /// extra_root}.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Exit with status 3 if any distance computation is unconverged.
    #[arg(long)]
    strict: bool,
    /// Add a runtime_ms column (output is then not reproducible).
    #[arg(long)]
    timings: bool,
}

fn parse_n_range(s: &str) -> RunResult<Vec<usize>> {
    let bad = || RunError::from(Error::Domain(format!("invalid n-range '{s}': expected A..B or a comma list")));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Flags first, then subcommand-specific settings, then the `--config` overrides.
fn build_config(
    c: &Common,
    default_n: &[usize],
    default_samples: usize,
    extra: impl FnOnce(&mut ExperimentConfig),
) -> RunResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        n_range: match &c.n_range {
            Some(s) => parse_n_range(s)?,
            None => default_n.to_vec(),
        },
        samples: c.samples.unwrap_or(default_samples),
        seed: c.seed,
        grid: c.grid,
        format: c.format,
        out: c.out.clone(),
        strict: c.strict,
        timings: c.timings,
        ..Default::default()
    };
    if let Some(it) = c.max_iters {
        cfg.solver.max_iters = it;
    }
    if let Some(tol) = c.tol {
        cfg.solver.tol = tol;
    }
    extra(&mut cfg);
    if let Some(path) = &c.config {
        let input = |message: String| RunError::Input { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
        let over: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| input(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        if !over.is_object() {
            return Err(input("expected a JSON object".into()));
        }
        let mut base = serde_json::to_value(&cfg).map_err(|e| input(e.to_string()))?;
        merge(&mut base, over);
        cfg = serde_json::from_value(base).map_err(|e| input(e.to_string()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_target(name: &str) -> RunResult<CircleMeasure> {
    match name {
        "half-half" => Ok(CircleMeasure::atomic(vec![(0.0, 0.5), (std::f64::consts::PI, 0.5)])?),
        "uniform" => Ok(CircleMeasure::uniform()),
        path => match StateFile::read(path.as_ref())? {
            StateFile::Measure(mu) => Ok(mu),
            _ => Err(RunError::Input { path: path.into(), message: "target must be of kind \"measure\"".into() }),
        },
    }
}

fn run(cli: Cli) -> RunResult<()> {
    match cli.command {
        Command::Distortion(c) => {
            let cfg = build_config(&c, &(2..=24).collect::<Vec<_>>(), 12, |_| ())?;
            let rows = run_distortion_study(&cfg)?;
            emit(&render(&rows, cfg.format)?, cfg.out.as_deref())
        }
        Command::Approximate { common, target, m, big_n } => {
            let cfg = build_config(&common, &[2, 4, 8, 16], 12, |cfg| {
                if let Some(m) = m {
                    cfg.approximation.m = m;
                }
                if let Some(b) = big_n {
                    cfg.approximation.big_n = b;
                }
            })?;
            let rows = run_approximation_study(&cfg, &load_target(&target)?)?;
            emit(&render(&rows, cfg.format)?, cfg.out.as_deref())
        }
        Command::RecoverCircle(c) => {
            let cfg = build_config(&c, &[4, 8, 16, 32], 16, |_| ())?;
            let rows = run_circle_recovery(&cfg)?;
            emit(&render(&rows, cfg.format)?, cfg.out.as_deref())
        }
        Command::Distance { common, state_a, state_b, n } => {
            let cfg = build_config(&common, &[2], 0, |_| ())?;
            let a = StateFile::read(&state_a)?;
            let b = StateFile::read(&state_b)?;
            let record = run_distance(&cfg, &a, &b, n)?;
            emit(&render_distance(&record, cfg.format)?, cfg.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("truncircle").chain(args.iter().copied())).unwrap()
    }

    fn common(cli: &Cli) -> &Common {
        match &cli.command {
            Command::Distortion(c) | Command::RecoverCircle(c) => c,
            Command::Approximate { common, .. } | Command::Distance { common, .. } => common,
        }
    }

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("truncircle-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn n_range_forms() {
        assert_eq!(parse_n_range("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_n_range("4, 20").unwrap(), vec![4, 20]);
        assert!(parse_n_range("5..3").is_err());
        assert!(parse_n_range("a,b").is_err());
    }

    #[test]
    fn config_file_overrides_flags() {
        let path = scratch("override.json");
        std::fs::write(&path, r#"{"samples": 3, "solver": {"max_iters": 7}, "approximation": {"m": 5}}"#).unwrap();
        let cli = parse(&["approximate", "--samples", "9", "--m", "4", "--config", path.to_str().unwrap()]);
        let cfg = build_config(common(&cli), &[2], 12, |c| c.approximation.m = 4).unwrap();
        assert_eq!(cfg.samples, 3);
        assert_eq!(cfg.solver.max_iters, 7);
        assert_eq!(cfg.approximation.m, 5);
        assert_eq!(cfg.solver.tol, truncircle::distance::DistanceOptions::default().tol);
    }

    #[test]
    fn malformed_config_reports_position() {
        let path = scratch("bad-config.json");
        std::fs::write(&path, "{\n  \"samples\": ,\n}").unwrap();
        let cli = parse(&["distortion", "--config", path.to_str().unwrap()]);
        let err = build_config(common(&cli), &[2], 12, |_| ()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn exit_codes() {
        let err = run(parse(&["distortion", "--n-range", "4,2"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);

        let a = scratch("a.json");
        let b = scratch("b.json");
        std::fs::write(&a, r#"{"kind": "pure", "n": 3, "roots": [0.0, 2.0]}"#).unwrap();
        std::fs::write(&b, r#"{"kind": "pure", "n": 3, "roots": [1.0, 4.0]}"#).unwrap();
        let out = scratch("strict.csv");
        let args = ["distance", a.to_str().unwrap(), b.to_str().unwrap(), "--out", out.to_str().unwrap()];
        let mut strict = args.to_vec();
        strict.extend(["--strict", "--max-iters", "1"]);
        assert_eq!(run(parse(&strict)).unwrap_err().exit_code(), 3);
        run(parse(&args)).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("n,d_n,w1_of_pullbacks,"));

        let missing = run(parse(&["distance", "/nonexistent/a.json", b.to_str().unwrap()])).unwrap_err();
        assert_eq!(missing.exit_code(), 1);

        std::fs::write(&b, r#"{"kind": "pure", "n": 2, "roots": [1.0]}"#).unwrap();
        assert_eq!(run(parse(&args)).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn measure_target_must_be_a_measure() {
        let path = scratch("target.json");
        std::fs::write(&path, r#"{"kind": "pure", "n": 2, "roots": [1.0]}"#).unwrap();
        assert_eq!(load_target(path.to_str().unwrap()).unwrap_err().exit_code(), 2);
        std::fs::write(&path, r#"{"kind": "measure", "atoms": [[0.5, 1.0]], "density": null}"#).unwrap();
        assert_eq!(load_target(path.to_str().unwrap()).unwrap().atoms(), &[(0.5, 1.0)]);
    }
}
