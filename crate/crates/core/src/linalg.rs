//! Dense complex linear algebra used by the Toeplitz code: a cyclic Jacobi
//! eigensolver for Hermitian matrices, the spectral norm, and polynomial
//! roots via companion-matrix eigenvalues.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Off-diagonal Frobenius norm at which Jacobi stops, relative to `‖A‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = V diag(values) V^*` of a Hermitian matrix,
/// eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Cyclic Jacobi iteration. Only the Hermitian part of `a` is used.
    pub fn new(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Domain(format!("matrix is not square ({}x{})", n, a.ncols())));
        }
        let mut m = a.clone();
        for i in 0..n {
            for j in i + 1..n {
                let s = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = s;
                m[(j, i)] = s.conj();
            }
            m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        }
        let mut v = CMatrix::identity(n, n);
        let total = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let threshold = JACOBI_TOL * total.max(f64::MIN_POSITIVE);

        let mut converged = n <= 1;
        for _ in 0..JACOBI_MAX_SWEEPS {
            if off_diagonal_norm(&m) <= threshold {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&m) > threshold {
            return Err(Error::NumericFailure(format!(
                "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
        let values = order.iter().map(|&i| m[(i, i)].re).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    /// Householder tridiagonalization and implicit QR (nalgebra); much
    /// faster than Jacobi for the repeated projections of the distance solver.
    pub fn tridiagonal_qr(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Domain(format!("matrix is not square ({}x{})", n, a.ncols())));
        }
        let h = (a + a.adjoint()).scale(0.5);
        let e = nalgebra::SymmetricEigen::try_new(h, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::NumericFailure("symmetric QR iteration did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
        let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V diag(g(values)) V^*`.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (c, &lam) in self.values.iter().enumerate() {
            let s = g(lam);
            for r in 0..n {
                scaled[(r, c)] *= s;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `m[(p, q)]`, accumulated into `v`.
fn rotate(m: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let abs = apq.norm();
    if abs < f64::MIN_POSITIVE {
        return;
    }
    let phase = apq / abs;
    let (app, aqq) = (m[(p, p)].re, m[(q, q)].re);
    let tau = (aqq - app) / (2.0 * abs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // U = diag(1, conj(phase)) * [[c, s], [-s, c]] restricted to (p, q)
    let upp = Complex64::new(c, 0.0);
    let upq = Complex64::new(s, 0.0);
    let uqp = -phase.conj() * s;
    let uqq = phase.conj() * c;

    let n = m.nrows();
    // columns: M <- M U
    for k in 0..n {
        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = mkp * upp + mkq * uqp;
        m[(k, q)] = mkp * upq + mkq * uqq;
    }
    // rows: M <- U^* M
    for k in 0..n {
        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = upp.conj() * mpk + uqp.conj() * mqk;
        m[(q, k)] = upq.conj() * mpk + uqq.conj() * mqk;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * upp + vkq * uqp;
        v[(k, q)] = vkp * upq + vkq * uqq;
    }
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..=i).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

/// Largest singular value. Hermitian input is handled directly; otherwise
/// the eigenvalues of `M^* M` are used.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    if is_hermitian(m, 1e-14 * scale) {
        let e = HermitianEigen::new(m)?;
        return Ok(e.max().abs().max(e.min().abs()));
    }
    let gram = m.adjoint() * m;
    let e = HermitianEigen::new(&gram)?;
    Ok(e.max().max(0.0).sqrt())
}

/// Roots of `Σ_k coeffs[k] z^k` (ascending powers) from the eigenvalues of
/// the companion matrix, polished by a few Newton steps.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.last().is_some_and(|c| *c == ZERO) {
        coeffs.pop();
    }
    let deg = coeffs.len().saturating_sub(1);
    if coeffs.is_empty() {
        return Err(Error::Domain("zero polynomial has no well-defined roots".into()));
    }
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let companion = CMatrix::from_fn(deg, deg, |i, j| {
        if j == deg - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            ONE
        } else {
            ZERO
        }
    });
    let schur = nalgebra::Schur::try_new(companion, 1e-15, 10_000)
        .ok_or_else(|| Error::NumericFailure("companion Schur iteration did not converge".into()))?;
    let eig: DVector<Complex64> = schur
        .eigenvalues()
        .ok_or_else(|| Error::NumericFailure("companion Schur form is not triangular".into()))?;
    Ok(eig.iter().map(|&z| polish_root(&coeffs, z)).collect())
}

fn polish_root(coeffs: &[Complex64], mut z: Complex64) -> Complex64 {
    for _ in 0..3 {
        let (mut p, mut dp) = (ZERO, ZERO);
        for c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        if dp.norm() < 1e-300 {
            break;
        }
        let step = p / dp;
        let candidate = z - step;
        // keep the step only if it reduces the residual
        if eval_poly(coeffs, candidate).norm() <= p.norm() {
            z = candidate;
        } else {
            break;
        }
    }
    z
}

pub fn eval_poly(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c)
}

/// Coefficients (ascending) of `∏_j (z - r_j)`.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut p = vec![ONE];
    for &r in roots {
        let mut next = vec![ZERO; p.len() + 1];
        for (k, &c) in p.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * r;
        }
        p = next;
    }
    p
}
