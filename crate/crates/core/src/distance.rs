//! The spectral distance
//! `d_n(φ, ψ) = sup { |φ(T) - ψ(T)| : T Toeplitz, ‖[D_n, T]‖ <= 1 }`.
//!
//! With `δ_k = (φ - ψ)(E_k)` the objective for Hermitian `T` with `t_0 = 0` is
//! `2 Re Σ_{k>=1} δ_k t_k`. Substituting `H = i [D_n, T]`, i.e.
//! `h_k = i k t_k`, the feasible set becomes
//! `V ∩ B = {Hermitian Toeplitz, zero diagonal} ∩ {‖H‖ <= 1}` and the
//! objective `2 Re Σ c_k h_k` with `c_k = -i δ_k / k`, a linear functional
//! `Re⟨C, H⟩_F` on Hermitian matrices.
//!
//! The maximum over `V ∩ B` is found by over-relaxed ADMM splitting the two
//! sets; both projections are exact (diagonal averaging, eigenvalue
//! clipping). Each iterate in `V` scaled into `B` is a feasible lower bound,
//! and the scaled dual variable gives `Y = C + W` with `W ⊥ V`, whose nuclear
//! norm is an upper bound. The reported gap is the difference.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::states::MomentState;
use crate::toeplitz::Toeplitz;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceOptions {
    pub max_iters: usize,
    /// Stop when neither bound moves by more than `tol · max(1, value)`
    /// over `stall_window` iterations.
    pub tol: f64,
    pub stall_window: usize,
    /// Stop when `(upper - lower) <= gap_tol · upper`.
    pub gap_tol: f64,
    /// A run counts as converged when the final relative gap is at most this.
    pub accept_gap: f64,
    /// Bound on `‖[D_n, T]‖`; 1 gives `d_n`, other values rescale it.
    pub bound: f64,
    /// Penalty parameter, as a multiple of `‖C‖_F`.
    pub rho_scale: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
    /// Rebalance the penalty parameter from the primal and dual residuals.
    pub adaptive_rho: bool,
    /// Bounds are evaluated every this many iterations.
    pub check_every: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            tol: 1e-9,
            stall_window: 500,
            gap_tol: 1e-7,
            accept_gap: 1e-4,
            bound: 1.0,
            rho_scale: 0.3,
            relaxation: 1.6,
            adaptive_rho: true,
            check_every: 10,
        }
    }
}

/// Data of one distance computation.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProblem {
    pub n: usize,
    /// `δ_k = (φ - ψ)(E_k)`, `k = 1..n-1`.
    pub delta: Vec<Complex64>,
    pub options: DistanceOptions,
}

impl DistanceProblem {
    pub fn new(phi: &MomentState, psi: &MomentState, options: DistanceOptions) -> Result<Self> {
        let n = phi.size();
        if psi.size() != n {
            return domain(format!("states have different sizes {} and {}", n, psi.size()));
        }
        if n < 2 {
            return domain("the distance needs n >= 2");
        }
        if !(options.bound > 0.0) || !(options.relaxation > 0.0 && options.relaxation < 2.0) || !(options.rho_scale > 0.0) {
            return domain("invalid solver options");
        }
        let delta = (1..n as i64).map(|k| phi.moment(k) - psi.moment(k)).collect();
        Ok(Self { n, delta, options })
    }

    /// `(φ - ψ)(T) = 2 Re Σ_{k>=1} δ_k t_k` for Hermitian `T`.
    pub fn objective(&self, t: &Toeplitz) -> f64 {
        2.0 * self
            .delta
            .iter()
            .enumerate()
            .map(|(i, d)| d * t.diag(i as i64 + 1))
            .sum::<Complex64>()
            .re
    }

    fn linear_coeffs(&self) -> Vec<Complex64> {
        self.delta
            .iter()
            .enumerate()
            .map(|(i, d)| Complex64::new(0.0, -1.0) * d / (i + 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCertificate {
    /// `|φ(T*) - ψ(T*)|`: a lower bound on the distance.
    pub value: f64,
    /// Hermitian Toeplitz `T*` with zero diagonal.
    pub maximizer: Toeplitz,
    /// `‖[D_n, T*]‖`.
    pub feasibility: f64,
    /// Upper bound from the dual iterate.
    pub upper_bound: f64,
    /// `upper_bound - value`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DistanceCertificate {
    pub fn relative_gap(&self) -> f64 {
        if self.upper_bound > 0.0 {
            self.gap / self.upper_bound
        } else {
            0.0
        }
    }
}

/// Hermitian Toeplitz matrix with zero diagonal and `diag(k) = h_k`, `k >= 1`.
fn herm(h: &[Complex64]) -> CMatrix {
    let n = h.len() + 1;
    CMatrix::from_fn(n, n, |i, j| {
        if i > j {
            h[i - j - 1]
        } else if j > i {
            h[j - i - 1].conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Orthogonal projection onto Hermitian Toeplitz matrices with zero diagonal,
/// returned as `h_k`, `k >= 1`.
fn project_v(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    (1..n)
        .map(|k| {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n - k {
                s += m[(j + k, j)] + m[(j, j + k)].conj();
            }
            s / (2 * (n - k)) as f64
        })
        .collect()
}

fn spectral_radius(e: &HermitianEigen) -> f64 {
    e.max().abs().max(e.min().abs())
}

/// Computes the spectral distance between two states of the same size.
pub fn connes_distance(phi: &MomentState, psi: &MomentState, options: &DistanceOptions) -> Result<DistanceCertificate> {
    let problem = DistanceProblem::new(phi, psi, *options)?;
    solve(&problem, phi, psi)
}

fn solve(problem: &DistanceProblem, phi: &MomentState, psi: &MomentState) -> Result<DistanceCertificate> {
    let n = problem.n;
    let opts = &problem.options;
    let c = problem.linear_coeffs();
    // Re⟨C, H⟩_F = 2 Re Σ c_k h_k
    let c_mat = herm(&c.iter().enumerate().map(|(i, ck)| ck.conj() / (n - i - 1) as f64).collect::<Vec<_>>());
    let c_norm = c_mat.norm();
    let objective = |h: &[Complex64]| 2.0 * c.iter().zip(h).map(|(a, b)| a * b).sum::<Complex64>().re;

    if c_norm == 0.0 {
        return certificate(problem, phi, psi, &vec![Complex64::new(0.0, 0.0); n - 1], 0.0, 0, true);
    }

    let bound = opts.bound;
    let mut rho = opts.rho_scale * c_norm;
    let alpha = opts.relaxation;
    let mut z = CMatrix::zeros(n, n);
    let mut u = CMatrix::zeros(n, n);
    let mut best_h = vec![Complex64::new(0.0, 0.0); n - 1];
    let mut best = 0.0f64;
    let mut upper = f64::INFINITY;
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let h = project_v(&(&z - &u + c_mat.unscale(rho)));
        let x = herm(&h);
        let xr = x.scale(alpha) + z.scale(1.0 - alpha);
        let e = HermitianEigen::tridiagonal_qr(&(&xr + &u))?;
        let z_old = std::mem::replace(&mut z, e.apply(|l| l.clamp(-bound, bound)));
        u += &xr - &z;

        if opts.adaptive_rho && it % opts.check_every == 0 {
            // residual balancing; u is the scaled dual, so it is rescaled with rho
            let primal = (&x - &z).norm();
            let dual = rho * (&z - &z_old).norm();
            if primal > 10.0 * dual {
                rho *= 2.0;
                u.unscale_mut(2.0);
            } else if dual > 10.0 * primal {
                rho /= 2.0;
                u.scale_mut(2.0);
            }
        }

        if it % opts.check_every == 0 || it == opts.max_iters {
            let norm = spectral_radius(&HermitianEigen::tridiagonal_qr(&x)?);
            let scale = if norm > bound { bound / norm } else { 1.0 };
            let value = objective(&h) * scale;
            if value > best {
                best = value;
                best_h = h.iter().map(|v| v * scale).collect();
            }
            let y = u.scale(rho);
            let w = &y - herm(&project_v(&y));
            let dual = HermitianEigen::tridiagonal_qr(&(&c_mat + &w))?;
            upper = upper.min(bound * dual.values.iter().map(|l| l.abs()).sum::<f64>());
            history.push((best, upper));

            if upper - best <= opts.gap_tol * upper {
                break;
            }
            let lag = (opts.stall_window / opts.check_every).max(1);
            if history.len() > lag {
                // both bounds must have stopped moving
                let (lo_before, up_before) = history[history.len() - 1 - lag];
                let slack = opts.tol * best.max(1.0);
                if best - lo_before < slack && up_before - upper < slack {
                    break;
                }
            }
        }
    }
    let converged = upper - best <= opts.accept_gap * upper;
    certificate(problem, phi, psi, &best_h, upper, iterations, converged)
}

fn certificate(
    problem: &DistanceProblem,
    phi: &MomentState,
    psi: &MomentState,
    h: &[Complex64],
    upper: f64,
    iterations: usize,
    converged: bool,
) -> Result<DistanceCertificate> {
    let n = problem.n;
    // t_k = -i h_k / k
    let upper_diags: Vec<Complex64> = h
        .iter()
        .enumerate()
        .map(|(i, hk)| Complex64::new(0.0, -1.0) * hk / (i + 1) as f64)
        .collect();
    let mut maximizer = Toeplitz::hermitian(0.0, &upper_diags);
    let mut feasibility = maximizer.dirac_commutator().spectral_norm()?;
    if feasibility > problem.options.bound * (1.0 + 1e-12) {
        let s = problem.options.bound / feasibility;
        maximizer = maximizer.scale(Complex64::new(s, 0.0));
        feasibility = maximizer.dirac_commutator().spectral_norm()?;
    }
    let value = (phi.evaluate(&maximizer)? - psi.evaluate(&maximizer)?).abs();
    let upper = if upper.is_finite() { upper.max(value) } else { upper };
    debug_assert_eq!(maximizer.size(), n);
    Ok(DistanceCertificate {
        value,
        maximizer,
        feasibility,
        upper_bound: upper,
        gap: upper - value,
        iterations,
        converged,
    })
}

/// Certificates for all pairs `i < j`, in row-major order; computed in parallel.
pub fn pairwise_certificates(
    states: &[MomentState],
    options: &DistanceOptions,
) -> Result<Vec<((usize, usize), DistanceCertificate)>> {
    if let Some(first) = states.first() {
        if states.iter().any(|s| s.size() != first.size()) {
            return domain("all states must have the same size");
        }
    }
    let pairs: Vec<(usize, usize)> = (0..states.len())
        .flat_map(|i| (i + 1..states.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| connes_distance(&states[i], &states[j], options).map(|c| ((i, j), c)))
        .collect()
}

/// Symmetric matrix of pairwise distances (each pair solved once).
pub fn distance_matrix(states: &[MomentState], options: &DistanceOptions) -> Result<Vec<Vec<f64>>> {
    let mut d = vec![vec![0.0; states.len()]; states.len()];
    for ((i, j), cert) in pairwise_certificates(states, options)? {
        d[i][j] = cert.value;
        d[j][i] = cert.value;
    }
    Ok(d)
}
