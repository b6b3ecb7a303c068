//! Toeplitz matrices, the compression `f ↦ P_n f P_n`, the commutator with
//! `D_n = diag(1, ..., n)`, and the Carathéodory–Fejér (Vandermonde)
//! decomposition of positive semidefinite Toeplitz matrices.


use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fourier::{wrap_angle, TrigPoly};
use crate::linalg::{self, CMatrix, HermitianEigen};

/// Default relative eigenvalue threshold used to decide numerical rank.
pub const RANK_TOL: f64 = 1e-9;
/// Kernel-polynomial roots this close to the unit circle are projected onto it.
pub const ROOT_RADIUS_TOL: f64 = 1e-6;

/// An `n × n` Toeplitz matrix stored by its diagonals: entry `(i, j)` is
/// `diag(i - j)`. Hermitian instances represent elements of the operator
/// system; the commutator with `D_n` is anti-Hermitian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Toeplitz {
    n: usize,
    /// `diag(k)` for `k = -(n-1), ..., n-1`.
    diags: Vec<Complex64>,
}

impl Toeplitz {
    pub fn from_diags(n: usize, diags: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return domain("Toeplitz size must be at least 1");
        }
        if diags.len() != 2 * n - 1 {
            return domain(format!("expected {} diagonals, got {}", 2 * n - 1, diags.len()));
        }
        Ok(Self { n, diags })
    }

    /// Hermitian Toeplitz matrix from `diag(0)` (real) and `diag(k)`, `k = 1..n-1`;
    /// the negative diagonals are the conjugates.
    pub fn hermitian(t0: f64, upper: &[Complex64]) -> Self {
        let n = upper.len() + 1;
        let mut diags = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
        diags[n - 1] = Complex64::new(t0, 0.0);
        for (i, &t) in upper.iter().enumerate() {
            let k = i + 1;
            diags[n - 1 + k] = t;
            diags[n - 1 - k] = t.conj();
        }
        Self { n, diags }
    }

    pub fn identity(n: usize) -> Self {
        Self::hermitian(1.0, &vec![Complex64::new(0.0, 0.0); n.saturating_sub(1)])
    }

    /// The basis element `E_k`: ones on diagonal `k`, zeros elsewhere.
    pub fn unit_diagonal(n: usize, k: i64) -> Result<Self> {
        if k.unsigned_abs() as usize >= n {
            return domain(format!("diagonal {k} out of range for n = {n}"));
        }
        let mut diags = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
        diags[(k + n as i64 - 1) as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n, diags })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `diag(k)`; zero outside `|k| < n`.
    pub fn diag(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize >= self.n {
            Complex64::new(0.0, 0.0)
        } else {
            self.diags[(k + self.n as i64 - 1) as usize]
        }
    }

    pub fn diags(&self) -> &[Complex64] {
        &self.diags
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.diag(i as i64 - j as i64)
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| self.entry(i, j))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.diag(0).im.abs() <= tol
            && (1..self.n as i64).all(|k| (self.diag(-k) - self.diag(k).conj()).norm() <= tol)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            diags: self.diags.iter().map(|d| d * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return domain("size mismatch");
        }
        Ok(Self {
            n: self.n,
            diags: self.diags.iter().zip(&other.diags).map(|(a, b)| a - b).collect(),
        })
    }

    /// Frobenius norm of the full matrix.
    pub fn frobenius_norm(&self) -> f64 {
        (-(self.n as i64 - 1)..self.n as i64)
            .map(|k| (self.n - k.unsigned_abs() as usize) as f64 * self.diag(k).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `[D_n, T]` with `D_n = diag(1, ..., n)`: entry `(i, j)` is `(i - j) T_{ij}`,
    /// so diagonal `k` is scaled by `k`.
    pub fn dirac_commutator(&self) -> Self {
        let n = self.n as i64;
        let diags = (-(n - 1)..n).map(|k| self.diag(k) * k as f64).collect();
        Self { n: self.n, diags }
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        linalg::spectral_norm(&self.to_matrix())
    }

    pub fn eigen(&self) -> Result<HermitianEigen> {
        if !self.is_hermitian(1e-12 * self.max_abs().max(1.0)) {
            return domain("matrix is not Hermitian");
        }
        HermitianEigen::new(&self.to_matrix())
    }

    /// True iff the smallest eigenvalue is at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.eigen()?.min() >= -tol)
    }

    fn max_abs(&self) -> f64 {
        self.diags.iter().map(|d| d.norm()).fold(0.0, f64::max)
    }

    /// Leading `m × m` principal block (again Toeplitz).
    pub fn leading_block(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return domain(format!("block size {m} out of range for n = {}", self.n));
        }
        let m_i = m as i64;
        Ok(Self {
            n: m,
            diags: (-(m_i - 1)..m_i).map(|k| self.diag(k)).collect(),
        })
    }
}

/// The compression `P_n f P_n`: `diag(k) = f̂(k)` for `|k| <= n - 1`.
pub fn compress(f: &TrigPoly, n: usize) -> Result<Toeplitz> {
    if n == 0 {
        return domain("compression size must be at least 1");
    }
    let n_i = n as i64;
    Toeplitz::from_diags(n, (-(n_i - 1)..n_i).map(|k| f.coeff(k)).collect())
}

/// One term `d |f_λ⟩⟨f_λ|` of a Vandermonde decomposition, where
/// `f_λ = n^{-1/2} (1, e^{iλ}, ..., e^{i(n-1)λ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VandermondeAtom {
    pub weight: f64,
    /// Angle in `[0, 2π)`.
    pub node: f64,
}

/// `Σ d_j |f_{λ_j}⟩⟨f_{λ_j}|` as an `n × n` Toeplitz matrix:
/// `diag(k) = (1/n) Σ_j d_j e^{ikλ_j}`.
pub fn from_atoms(n: usize, atoms: &[VandermondeAtom]) -> Result<Toeplitz> {
    if n == 0 {
        return domain("size must be at least 1");
    }
    let n_i = n as i64;
    let diags = (-(n_i - 1)..n_i)
        .map(|k| {
            atoms
                .iter()
                .map(|a| Complex64::from_polar(a.weight, k as f64 * a.node))
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    Toeplitz::from_diags(n, diags)
}

/// Vandermonde decomposition of a positive semidefinite Toeplitz matrix.
///
/// Rank `r <= n - 1`: the nodes are the roots of the polynomial built from a
/// kernel vector of the leading `(r+1) × (r+1)` block, and the weights solve
/// the linear system on the diagonals. The result is unique up to ordering.
///
/// Full rank: the atom at node 0 with the largest weight keeping the
/// remainder positive, `d = 1 / ⟨f_1, T^{-1} f_1⟩`, is split off first and
/// the singular remainder is decomposed as above.
///
/// Atoms are returned sorted by node.
pub fn vandermonde_decompose(t: &Toeplitz, tol: f64) -> Result<Vec<VandermondeAtom>> {
    let n = t.size();
    let eig = t.eigen()?;
    let lmax = eig.max();
    if lmax <= 0.0 {
        if eig.min() < -tol {
            return domain("matrix is not positive semidefinite");
        }
        return Ok(Vec::new());
    }
    if eig.min() < -tol * lmax {
        return domain(format!(
            "matrix is not positive semidefinite (min eigenvalue {:.3e})",
            eig.min()
        ));
    }
    let rank = eig.values.iter().filter(|&&v| v > tol * lmax).count();
    let mut atoms = if rank < n {
        decompose_singular(t, rank, tol)?
    } else {
        let ones = DVector::from_element(n, Complex64::new(1.0 / (n as f64).sqrt(), 0.0));
        let inv = eig.apply(|x| 1.0 / x);
        let quad = ones.dotc(&(&inv * &ones)).re;
        let d0 = 1.0 / quad;
        let projector = from_atoms(n, &[VandermondeAtom { weight: d0, node: 0.0 }])?;
        let rest = t.sub(&projector)?;
        let rest_eig = rest.eigen()?;
        let rest_rank = rest_eig
            .values
            .iter()
            .filter(|&&v| v > tol * lmax)
            .count()
            .min(n - 1);
        let mut atoms = decompose_singular(&rest, rest_rank, tol)?;
        atoms.push(VandermondeAtom { weight: d0, node: 0.0 });
        atoms
    };
    atoms.sort_by(|a, b| a.node.total_cmp(&b.node));
    Ok(atoms)
}

fn decompose_singular(t: &Toeplitz, rank: usize, tol: f64) -> Result<Vec<VandermondeAtom>> {
    if rank == 0 {
        return Ok(Vec::new());
    }
    let block = t.leading_block(rank + 1)?;
    let eig = block.eigen()?;
    let kernel = eig.vectors.column(0);
    let coeffs: Vec<Complex64> = kernel.iter().map(|u| u.conj()).collect();
    let roots = linalg::polynomial_roots(&coeffs)?;
    let max_deviation = roots.iter().map(|z| (1.0 - z.norm()).abs()).fold(0.0, f64::max);
    if max_deviation > ROOT_RADIUS_TOL || roots.len() != rank {
        return Err(Error::Conditioning { max_deviation });
    }
    let mut nodes: Vec<f64> = roots.iter().map(|z| wrap_angle(z.arg())).collect();

    let total = t.diag(0).re * t.size() as f64;
    loop {
        let weights = solve_weights(t, &nodes)?;
        let keep: Vec<bool> = weights.iter().map(|&w| w > tol * total).collect();
        if keep.iter().all(|&k| k) {
            return Ok(nodes
                .iter()
                .zip(weights)
                .map(|(&node, weight)| VandermondeAtom { weight, node })
                .collect());
        }
        nodes = nodes.iter().zip(&keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
        if nodes.is_empty() {
            return Ok(Vec::new());
        }
    }
}

/// Least-squares real weights with `diag(k) = (1/n) Σ_j d_j e^{ikλ_j}`, `k = 0..n-1`.
fn solve_weights(t: &Toeplitz, nodes: &[f64]) -> Result<Vec<f64>> {
    let n = t.size();
    let r = nodes.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, r);
    let mut b = DVector::<f64>::zeros(2 * n);
    for k in 0..n {
        for (j, &node) in nodes.iter().enumerate() {
            let z = Complex64::from_polar(1.0 / n as f64, k as f64 * node);
            a[(2 * k, j)] = z.re;
            a[(2 * k + 1, j)] = z.im;
        }
        let d = t.diag(k as i64);
        b[2 * k] = d.re;
        b[2 * k + 1] = d.im;
    }
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::NumericFailure(format!("weight solve failed: {e}")))?;
    Ok(x.iter().copied().collect())
}
