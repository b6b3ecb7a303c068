//! Experiment drivers behind the command-line tool. Every run is a pure
//! function of its configuration: random pure states come from a ChaCha
//! stream keyed by the seed and the system size, and rows are produced in a
//! fixed order, so identical configurations give identical output bytes.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::{connes_distance, pairwise_certificates, DistanceCertificate, DistanceOptions};
use crate::error::Error;
use crate::fourier::arc_distance;
use crate::gh::{distortion_correspondence, gh_upper_bound, Correspondence, FinitePointCloud};
use crate::states::{
    approx_ratio_error, approx_state, fejer_state, moments_from_measure, product_state, CircleMeasure, MomentState,
    PureState,
};
use crate::transport::{roots_of_unity_measure, w1_circle, DEFAULT_GRID};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{count} distance computation(s) did not converge (strict mode)")]
    Unconverged { count: usize },
    #[error("cannot write output: {0}")]
    Output(String),
}

impl RunError {
    /// 2 for invalid input, 3 for non-convergence in strict mode, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Core(Error::Domain(_)) | RunError::Core(Error::Degenerate(_)) | RunError::Input { .. } => 2,
            RunError::Unconverged { .. } => 3,
            _ => 1,
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// System sizes (for `approximate`: kernel powers), ascending.
    pub n_range: Vec<usize>,
    /// Number of sampled states (`distortion`) or of Fejér centres (`recover-circle`).
    pub samples: usize,
    pub seed: u64,
    /// Grid seeding the W₁ computation.
    pub grid: usize,
    pub solver: DistanceOptions,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    /// Fail with exit code 3 if any distance computation is unconverged.
    pub strict: bool,
    /// Add a wall-clock column (makes output non-reproducible).
    pub timings: bool,
    pub approximation: ApproximationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_range: vec![2, 4, 8, 16],
            samples: 12,
            seed: 0,
            grid: DEFAULT_GRID,
            solver: DistanceOptions::default(),
            format: OutputFormat::Csv,
            out: None,
            strict: false,
            timings: false,
            approximation: ApproximationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> RunResult<()> {
        if self.n_range.is_empty() {
            return Err(Error::Domain("n-range is empty".into()).into());
        }
        if self.n_range.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("n-range must be strictly ascending".into()).into());
        }
        Ok(())
    }

    fn rng_for(&self, n: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(n as u64);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationConfig {
    /// Number of roots of unity the target is snapped to.
    pub m: usize,
    /// Values of `N` for the ratio stage, ascending.
    pub big_n: Vec<f64>,
    pub extra_multiplicity: usize,
    pub extra_root: f64,
}

impl Default for ApproximationConfig {
    fn default() -> Self {
        Self {
            m: 2,
            big_n: vec![1e2, 1e3, 1e4],
            extra_multiplicity: 0,
            extra_root: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRow {
    pub n: usize,
    pub sampled_pairs: usize,
    /// `max |d_n - W₁|` over the sampled pairs: a lower estimate of the distortion of the pullback.
    pub max_discrepancy_lower_estimate: f64,
    pub mean_discrepancy: f64,
    pub unconverged_pairs: usize,
    pub max_feasibility: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationRow {
    /// 1: snap to roots of unity; 2: ratio states at increasing `N`; 3: kernel products at increasing power.
    pub stage: u8,
    /// Kernel power (stage 3).
    pub n: Option<usize>,
    /// Ratio parameter (stages 2 and 3).
    pub big_n: Option<f64>,
    /// Size of the pure state (stages 2 and 3).
    pub size: Option<usize>,
    pub w1_to_target: f64,
    pub w1_to_snap: f64,
    /// `max_j |ratio_j - t_j|` (stage 2).
    pub ratio_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub n: usize,
    pub sampled_lambda_count: usize,
    /// Distortion of the Fejér correspondence on the samples: a lower estimate.
    pub distortion_lower_estimate: f64,
    pub gh_upper_bound: f64,
    /// `max |d_n - arc| / arc` over sampled pairs.
    pub max_relative_error: f64,
    pub unconverged_pairs: usize,
    pub max_feasibility: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRecord {
    pub n: usize,
    pub d_n: f64,
    pub w1_of_pullbacks: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub feasibility: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `t_k` of the maximizer for `k = 0..n-1`, as `[re, im]`.
    pub maximizer_diagonals: Vec<[f64; 2]>,
}

fn elapsed_ms(cfg: &ExperimentConfig, start: Instant) -> Option<f64> {
    cfg.timings.then(|| start.elapsed().as_secs_f64() * 1e3)
}

fn count_unconverged(certs: &[&DistanceCertificate]) -> usize {
    certs.iter().filter(|c| !c.converged).count()
}

/// I.i.d. uniform root angles.
pub fn sample_pure_states(n: usize, count: usize, rng: &mut impl Rng) -> Vec<PureState> {
    (0..count)
        .map(|_| {
            let roots: Vec<f64> = (1..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            PureState::from_roots(&roots)
        })
        .collect()
}

/// Compares `d_n` with `W₁` of the pullbacks on all pairs of the given states.
pub fn distortion_row(n: usize, states: &[PureState], cfg: &ExperimentConfig) -> RunResult<DistortionRow> {
    let start = Instant::now();
    if states.iter().any(|s| s.size() != n) {
        return Err(Error::Domain(format!("all states must have size {n}")).into());
    }
    let moments: Vec<MomentState> = states.iter().map(|s| s.moments()).collect();
    let pullbacks: Vec<CircleMeasure> = states.iter().map(|s| s.pullback()).collect();
    let certs = pairwise_certificates(&moments, &cfg.solver)?;
    let mut discrepancies = Vec::with_capacity(certs.len());
    for ((i, j), cert) in &certs {
        let w1 = w1_circle(&pullbacks[*i], &pullbacks[*j], cfg.grid)?;
        discrepancies.push((cert.value - w1).abs());
    }
    let cert_refs: Vec<&DistanceCertificate> = certs.iter().map(|(_, c)| c).collect();
    let pairs = discrepancies.len();
    Ok(DistortionRow {
        n,
        sampled_pairs: pairs,
        max_discrepancy_lower_estimate: discrepancies.iter().copied().fold(0.0, f64::max),
        mean_discrepancy: if pairs == 0 { 0.0 } else { discrepancies.iter().sum::<f64>() / pairs as f64 },
        unconverged_pairs: count_unconverged(&cert_refs),
        max_feasibility: cert_refs.iter().map(|c| c.feasibility).fold(0.0, f64::max),
        runtime_ms: elapsed_ms(cfg, start),
    })
}

/// For each `n`, samples `samples` random pure states and reports `|d_n - W₁|` over all pairs.
pub fn run_distortion_study(cfg: &ExperimentConfig) -> RunResult<Vec<DistortionRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.n_range {
        if n < 2 {
            return Err(Error::Domain("distortion study needs n >= 2".into()).into());
        }
        let states = sample_pure_states(n, cfg.samples, &mut cfg.rng_for(n));
        rows.push(distortion_row(n, &states, cfg)?);
    }
    check_strict(cfg, rows.iter().map(|r| r.unconverged_pairs).sum())?;
    Ok(rows)
}

fn check_strict(cfg: &ExperimentConfig, unconverged: usize) -> RunResult<()> {
    if cfg.strict && unconverged > 0 {
        return Err(RunError::Unconverged { count: unconverged });
    }
    Ok(())
}

/// Snap to roots of unity, approximate the weights by ratio states at
/// increasing `N`, then localize with kernel products of increasing power
/// (`cfg.n_range`). Reports `W₁` to the target and to the snapped measure.
pub fn run_approximation_study(cfg: &ExperimentConfig, target: &CircleMeasure) -> RunResult<Vec<ApproximationRow>> {
    cfg.validate()?;
    target.require_state()?;
    let ac = &cfg.approximation;
    if ac.big_n.is_empty() {
        return Err(Error::Domain("at least one value of N is required".into()).into());
    }
    let m = ac.m;
    let mut rows = Vec::new();

    let start = Instant::now();
    let weights = target.snap_to_roots_of_unity(m)?;
    let snapped = roots_of_unity_measure(&weights)?;
    rows.push(ApproximationRow {
        stage: 1,
        n: None,
        big_n: None,
        size: None,
        w1_to_target: w1_circle(target, &snapped, cfg.grid)?,
        w1_to_snap: 0.0,
        ratio_error: None,
        runtime_ms: elapsed_ms(cfg, start),
    });

    let mut last = None;
    for &big_n in &ac.big_n {
        let start = Instant::now();
        let phi = approx_state(&weights, big_n, ac.extra_multiplicity, ac.extra_root)?;
        let pb = phi.pullback();
        rows.push(ApproximationRow {
            stage: 2,
            n: None,
            big_n: Some(big_n),
            size: Some(phi.size()),
            w1_to_target: w1_circle(target, &pb, cfg.grid)?,
            w1_to_snap: w1_circle(&snapped, &pb, cfg.grid)?,
            ratio_error: Some(approx_ratio_error(&weights, big_n, ac.extra_multiplicity, ac.extra_root)?),
            runtime_ms: elapsed_ms(cfg, start),
        });
        last = Some((big_n, phi));
    }

    let (big_n, phi) = last.expect("big_n is nonempty");
    // kernel maxima at the roots of unity 2πj/m
    let rotation = PI / m as f64;
    for &power in &cfg.n_range {
        let start = Instant::now();
        let chi = product_state(&phi, m, power, rotation).map_err(|e| match e {
            Error::Degenerate(msg) => Error::Degenerate(format!(
                "target has no mass near the kernel maxima (m = {m}, N = {big_n}): {msg}"
            )),
            other => other,
        })?;
        let pb = chi.pullback();
        rows.push(ApproximationRow {
            stage: 3,
            n: Some(power),
            big_n: Some(big_n),
            size: Some(chi.size()),
            w1_to_target: w1_circle(target, &pb, cfg.grid)?,
            w1_to_snap: w1_circle(&snapped, &pb, cfg.grid)?,
            ratio_error: None,
            runtime_ms: elapsed_ms(cfg, start),
        });
    }
    Ok(rows)
}

/// Fejér states centred at `L = cfg.samples` equally spaced angles; the
/// correspondence `τ_λ ↔ λ` is compared against arc length.
pub fn run_circle_recovery(cfg: &ExperimentConfig) -> RunResult<Vec<RecoveryRow>> {
    cfg.validate()?;
    let l = cfg.samples;
    if l == 0 {
        return Err(Error::Domain("at least one sample angle is required".into()).into());
    }
    let lambdas: Vec<f64> = (0..l).map(|i| 2.0 * PI * i as f64 / l as f64).collect();
    let circle: Vec<Vec<f64>> = lambdas
        .iter()
        .map(|&a| lambdas.iter().map(|&b| arc_distance(a, b)).collect())
        .collect();
    let circle = FinitePointCloud::from_matrix(circle)?;
    let pairing = Correspondence::new((0..l).map(|i| (i, i)).collect(), l, l)?;

    let mut rows = Vec::new();
    for &n in &cfg.n_range {
        let start = Instant::now();
        if n < 2 {
            return Err(Error::Domain("circle recovery needs n >= 2".into()).into());
        }
        let states = lambdas
            .iter()
            .map(|&t| fejer_state(n, t).map(|s| s.moments()))
            .collect::<Result<Vec<_>, _>>()?;
        let certs = pairwise_certificates(&states, &cfg.solver)?;
        let mut d = vec![vec![0.0; l]; l];
        let mut max_rel = 0.0f64;
        for ((i, j), c) in &certs {
            d[*i][*j] = c.value;
            d[*j][*i] = c.value;
            let arc = circle.dist(*i, *j);
            max_rel = max_rel.max((c.value - arc).abs() / arc);
        }
        // each value is within its gap of the exact (metric) distance
        let max_gap = certs.iter().map(|(_, c)| c.gap).fold(0.0, f64::max);
        let labels = (0..l).map(|i| i.to_string()).collect();
        let cloud = FinitePointCloud::with_triangle_tolerance(labels, d, 2.0 * max_gap + 1e-9)?;
        let cert_refs: Vec<&DistanceCertificate> = certs.iter().map(|(_, c)| c).collect();
        rows.push(RecoveryRow {
            n,
            sampled_lambda_count: l,
            distortion_lower_estimate: distortion_correspondence(&pairing, &cloud, &circle)?,
            gh_upper_bound: gh_upper_bound(&pairing, &cloud, &circle)?,
            max_relative_error: max_rel,
            unconverged_pairs: count_unconverged(&cert_refs),
            max_feasibility: cert_refs.iter().map(|c| c.feasibility).fold(0.0, f64::max),
            runtime_ms: elapsed_ms(cfg, start),
        });
    }
    check_strict(cfg, rows.iter().map(|r| r.unconverged_pairs).sum())?;
    Ok(rows)
}

/// A state as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateFile {
    Pure(PureState),
    Moment(MomentState),
    Measure(CircleMeasure),
}

impl StateFile {
    pub fn read(path: &Path) -> RunResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| RunError::Input {
            path: path.display().to_string(),
            message: if e.line() > 0 { format!("line {}, column {}: {e}", e.line(), e.column()) } else { e.to_string() },
        })
    }

    fn size(&self) -> Option<usize> {
        match self {
            StateFile::Pure(s) => Some(s.size()),
            StateFile::Moment(s) => Some(s.size()),
            StateFile::Measure(_) => None,
        }
    }

    fn moments(&self, n: usize) -> RunResult<MomentState> {
        Ok(match self {
            StateFile::Pure(s) => s.moments(),
            StateFile::Moment(s) => s.clone(),
            StateFile::Measure(mu) => moments_from_measure(mu, n)?,
        })
    }

    /// The pullback of a state on the Toeplitz system; measures are used as given.
    fn measure(&self) -> RunResult<CircleMeasure> {
        Ok(match self {
            StateFile::Pure(s) => s.pullback(),
            StateFile::Moment(s) => s.pullback()?,
            StateFile::Measure(mu) => mu.clone(),
        })
    }
}

/// `d_n` and `W₁` of the pullbacks for two states. Measures need `n`.
pub fn run_distance(cfg: &ExperimentConfig, a: &StateFile, b: &StateFile, n: Option<usize>) -> RunResult<DistanceRecord> {
    let n = match (a.size(), b.size(), n) {
        (Some(x), Some(y), _) if x != y => {
            return Err(Error::Domain(format!("states have different sizes {x} and {y}")).into())
        }
        (Some(x), _, Some(m)) | (_, Some(x), Some(m)) if x != m => {
            return Err(Error::Domain(format!("--n {m} does not match the state size {x}")).into())
        }
        (Some(x), _, _) | (_, Some(x), _) => x,
        (None, None, Some(m)) => m,
        (None, None, None) => return Err(Error::Domain("measure inputs need an explicit size n".into()).into()),
    };
    let cert = connes_distance(&a.moments(n)?, &b.moments(n)?, &cfg.solver)?;
    check_strict(cfg, usize::from(!cert.converged))?;
    let w1 = w1_circle(&a.measure()?, &b.measure()?, cfg.grid)?;
    Ok(DistanceRecord {
        n,
        d_n: cert.value,
        w1_of_pullbacks: w1,
        upper_bound: cert.upper_bound,
        gap: cert.gap,
        feasibility: cert.feasibility,
        iterations: cert.iterations,
        converged: cert.converged,
        maximizer_diagonals: (0..n as i64)
            .map(|k| {
                let t = cert.maximizer.diag(k);
                [t.re, t.im]
            })
            .collect(),
    })
}

#[derive(Serialize)]
struct DistanceCsvRow<'a> {
    n: usize,
    d_n: f64,
    w1_of_pullbacks: f64,
    upper_bound: f64,
    gap: f64,
    feasibility: f64,
    iterations: usize,
    converged: bool,
    /// `re:im` pairs separated by `;`
    maximizer_diagonals: &'a str,
}

/// CSV flattens the maximizer diagonals into one `re:im;re:im;...` cell.
pub fn render_distance(record: &DistanceRecord, format: OutputFormat) -> RunResult<Vec<u8>> {
    if format == OutputFormat::Json {
        return render(std::slice::from_ref(record), format);
    }
    let diags: Vec<String> = record.maximizer_diagonals.iter().map(|[re, im]| format!("{re}:{im}")).collect();
    let diags = diags.join(";");
    let row = DistanceCsvRow {
        n: record.n,
        d_n: record.d_n,
        w1_of_pullbacks: record.w1_of_pullbacks,
        upper_bound: record.upper_bound,
        gap: record.gap,
        feasibility: record.feasibility,
        iterations: record.iterations,
        converged: record.converged,
        maximizer_diagonals: &diags,
    };
    render(&[row], format)
}

/// Serializes rows as CSV (header from field names) or pretty JSON.
pub fn render<T: Serialize>(rows: &[T], format: OutputFormat) -> RunResult<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| RunError::Output(e.to_string()))?;
            }
            w.into_inner().map_err(|e| RunError::Output(e.to_string()))
        }
        OutputFormat::Json => {
            let mut buf = serde_json::to_vec_pretty(rows).map_err(|e| RunError::Output(e.to_string()))?;
            buf.push(b'\n');
            Ok(buf)
        }
    }
}

/// Writes to `cfg.out`, or stdout if unset.
pub fn emit(bytes: &[u8], out: Option<&Path>) -> RunResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|source| RunError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| RunError::Output(e.to_string())),
    }
}
