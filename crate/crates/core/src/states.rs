//! States on the Toeplitz operator system.
//!
//! A pure state is stored by the angles `θ_j` of the roots of its polynomial;
//! the unit vector `ξ` holds the ascending coefficients of
//! `∏_j (z - e^{iθ_j})`, normalized, so that the leading coefficient is real
//! positive. Its pullback density is `|Σ_k ξ_k e^{ikt}|²`, which vanishes
//! exactly at the stored roots.
//!
//! General states are stored by their moments `m_k = φ(E_k)`, so that
//! `φ(T) = Σ_k t_k m_k`; the pullback density has coefficients `m_{-k}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fourier::{power_kernel, wrap_angle, TrigPoly};
use crate::linalg;
use crate::toeplitz::Toeplitz;

/// Tolerance for unit mass and `m_0 = 1`.
pub const MASS_TOL: f64 = 1e-12;
/// Tolerance for positivity of moment matrices and densities.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// A density at most this large is treated as vanishing.
pub const VANISHING_DENSITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureStateRepr", into = "PureStateRepr")]
pub struct PureState {
    n: usize,
    roots: Vec<f64>,
    xi: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct PureStateRepr {
    n: usize,
    roots: Vec<f64>,
}

impl TryFrom<PureStateRepr> for PureState {
    type Error = Error;

    fn try_from(r: PureStateRepr) -> Result<Self> {
        if r.n != r.roots.len() + 1 {
            return domain(format!("pure state of size {} needs {} roots, got {}", r.n, r.n.saturating_sub(1), r.roots.len()));
        }
        if r.roots.iter().any(|t| !t.is_finite()) {
            return domain("root angles must be finite");
        }
        Ok(PureState::from_roots(&r.roots))
    }
}

impl From<PureState> for PureStateRepr {
    fn from(s: PureState) -> Self {
        Self { n: s.n, roots: s.roots }
    }
}

impl PureState {
    /// The pure state of size `angles.len() + 1` whose polynomial vanishes at
    /// `e^{iθ}` for every listed angle (with multiplicity).
    pub fn from_roots(angles: &[f64]) -> Self {
        let roots: Vec<f64> = angles.iter().map(|&t| wrap_angle(t)).collect();
        let zs: Vec<Complex64> = roots.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let p = linalg::poly_from_roots(&zs);
        let norm = p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let xi = p.iter().map(|c| c / norm).collect();
        Self { n: roots.len() + 1, roots, xi }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn xi(&self) -> &[Complex64] {
        &self.xi
    }

    /// Root angles of the polynomial recomputed from `ξ`, sorted.
    pub fn recompute_roots(&self) -> Result<Vec<f64>> {
        let mut angles: Vec<f64> = linalg::polynomial_roots(&self.xi)?
            .iter()
            .map(|z| wrap_angle(z.arg()))
            .collect();
        angles.sort_by(f64::total_cmp);
        Ok(angles)
    }

    /// Largest `|1 - |z||` over the roots recomputed from `ξ`.
    pub fn root_radius_defect(&self) -> Result<f64> {
        Ok(linalg::polynomial_roots(&self.xi)?
            .iter()
            .map(|z| (1.0 - z.norm()).abs())
            .fold(0.0, f64::max))
    }

    /// `⟨ξ, T ξ⟩`.
    pub fn evaluate(&self, t: &Toeplitz) -> Result<f64> {
        check_hermitian_of_size(t, self.n)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.xi[i].conj() * t.entry(i, j) * self.xi[j];
            }
        }
        Ok(acc.re)
    }

    /// `m_k = Σ_{i-j=k} conj(ξ_i) ξ_j`.
    pub fn moments(&self) -> MomentState {
        let n = self.n as i64;
        let moments = (-(n - 1)..n)
            .map(|k| {
                (0..n)
                    .filter_map(|i| {
                        let j = i - k;
                        (0..n).contains(&j).then(|| self.xi[i as usize].conj() * self.xi[j as usize])
                    })
                    .sum()
            })
            .collect();
        MomentState::unchecked(self.n, moments)
    }

    pub fn pullback_density(&self) -> TrigPoly {
        self.moments()
            .density_unchecked()
            .assume_density()
    }

    pub fn pullback(&self) -> CircleMeasure {
        CircleMeasure {
            atoms: Vec::new(),
            density: Some(self.pullback_density()),
        }
    }

    pub fn rotate(&self, alpha: f64) -> Self {
        let roots: Vec<f64> = self.roots.iter().map(|t| t + alpha).collect();
        Self::from_roots(&roots)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentStateRepr", into = "MomentStateRepr")]
pub struct MomentState {
    n: usize,
    /// `m_k` for `k = -(n-1), ..., n-1`.
    moments: Vec<Complex64>,
}

/// On disk: `m_0, ..., m_{n-1}`; the full list `m_{-(n-1)}, ..., m_{n-1}` is also accepted.
#[derive(Serialize, Deserialize)]
struct MomentStateRepr {
    n: usize,
    moments: Vec<Complex64>,
}

impl TryFrom<MomentStateRepr> for MomentState {
    type Error = Error;

    fn try_from(r: MomentStateRepr) -> Result<Self> {
        if r.n > 1 && r.moments.len() == r.n {
            if r.moments[0].im.abs() > MASS_TOL {
                return domain(format!("m_0 must be 1, got {}", r.moments[0]));
            }
            let t = Toeplitz::hermitian(r.moments[0].re, &r.moments[1..]);
            return MomentState::new(r.n, t.diags().to_vec());
        }
        MomentState::new(r.n, r.moments)
    }
}

impl From<MomentState> for MomentStateRepr {
    fn from(s: MomentState) -> Self {
        let moments = s.moments[s.n - 1..].to_vec();
        Self { n: s.n, moments }
    }
}

impl MomentState {
    /// Validates `m_0 = 1`, `m_{-k} = conj(m_k)` and positivity of the moment
    /// matrix; the symmetric part is then enforced exactly.
    pub fn new(n: usize, moments: Vec<Complex64>) -> Result<Self> {
        let t = Toeplitz::from_diags(n, moments)?;
        if (t.diag(0) - 1.0).norm() > MASS_TOL {
            return domain(format!("m_0 must be 1, got {}", t.diag(0)));
        }
        if !t.is_hermitian(MASS_TOL) {
            return domain("moments must satisfy m_{-k} = conj(m_k)");
        }
        let state = Self::unchecked(n, t.diags().to_vec());
        let min = state.moment_matrix().eigen()?.min();
        if min < -1e-9 {
            return domain(format!("moment matrix is not positive semidefinite (min eigenvalue {min:.3e})"));
        }
        Ok(state)
    }

    /// Builds from `m_k`, `k = 1..n-1` (with `m_0 = 1`).
    pub fn from_upper(upper: &[Complex64]) -> Result<Self> {
        let n = upper.len() + 1;
        let t = Toeplitz::hermitian(1.0, upper);
        Self::new(n, t.diags().to_vec())
    }

    fn unchecked(n: usize, mut moments: Vec<Complex64>) -> Self {
        let c = n - 1;
        moments[c] = Complex64::new(1.0, 0.0);
        for k in 1..n {
            let avg = (moments[c + k] + moments[c - k].conj()) * 0.5;
            moments[c + k] = avg;
            moments[c - k] = avg.conj();
        }
        Self { n, moments }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// `m_k`; zero outside `|k| < n`.
    pub fn moment(&self, k: i64) -> Complex64 {
        if k.unsigned_abs() as usize >= self.n {
            Complex64::new(0.0, 0.0)
        } else {
            self.moments[(k + self.n as i64 - 1) as usize]
        }
    }

    pub fn moments(&self) -> &[Complex64] {
        &self.moments
    }

    /// The Toeplitz matrix with `diag(k) = m_k`.
    pub fn moment_matrix(&self) -> Toeplitz {
        Toeplitz::from_diags(self.n, self.moments.clone()).expect("length is 2n-1 by construction")
    }

    /// `Σ_k t_k m_k`.
    pub fn evaluate(&self, t: &Toeplitz) -> Result<f64> {
        check_hermitian_of_size(t, self.n)?;
        let n = self.n as i64;
        Ok((-(n - 1)..n).map(|k| t.diag(k) * self.moment(k)).sum::<Complex64>().re)
    }

    fn density_unchecked(&self) -> TrigPoly {
        let n = self.n as i64;
        let pairs: Vec<_> = (-(n - 1)..n).map(|k| (k, self.moment(-k))).collect();
        TrigPoly::from_pairs(&pairs)
    }

    /// The pullback density, coefficients `m_{-k}`. Positivity of the moment
    /// matrix alone does not make it nonnegative (the truncated moments of a
    /// point mass give a Dirichlet kernel), so that is checked here.
    pub fn pullback_density(&self) -> Result<TrigPoly> {
        let p = self.density_unchecked();
        let min = p.grid_min(2048.max(4 * self.n));
        if min < -POSITIVITY_TOL {
            return domain(format!(
                "moments do not define a state on the Toeplitz system: pullback density reaches {min:.3e}"
            ));
        }
        Ok(p.assume_density())
    }

    pub fn pullback(&self) -> Result<CircleMeasure> {
        Ok(CircleMeasure {
            atoms: Vec::new(),
            density: Some(self.pullback_density()?),
        })
    }
}

fn check_hermitian_of_size(t: &Toeplitz, n: usize) -> Result<()> {
    if t.size() != n {
        return domain(format!("state has size {n}, matrix has size {}", t.size()));
    }
    if !t.is_hermitian(1e-12 * t.frobenius_norm().max(1.0)) {
        return domain("matrix is not Hermitian");
    }
    Ok(())
}

/// A finite positive measure on the circle: point masses plus an optional
/// trigonometric-polynomial density (with respect to `dλ = dt / 2π`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircleMeasureRepr", into = "CircleMeasureRepr")]
pub struct CircleMeasure {
    atoms: Vec<(f64, f64)>,
    density: Option<TrigPoly>,
}

#[derive(Serialize, Deserialize)]
struct CircleMeasureRepr {
    /// `(angle, weight)` pairs.
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
    /// Density coefficients `f̂(-K..=K)`.
    #[serde(default)]
    density: Option<Vec<Complex64>>,
}

impl TryFrom<CircleMeasureRepr> for CircleMeasure {
    type Error = Error;

    fn try_from(r: CircleMeasureRepr) -> Result<Self> {
        let density = r.density.map(TrigPoly::from_coeffs).transpose()?;
        CircleMeasure::new(r.atoms, density)
    }
}

impl From<CircleMeasure> for CircleMeasureRepr {
    fn from(m: CircleMeasure) -> Self {
        Self {
            atoms: m.atoms,
            density: m.density.map(|d| d.coeffs().to_vec()),
        }
    }
}

impl CircleMeasure {
    /// Validates nonnegative weights and a real, nonnegative density.
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<TrigPoly>) -> Result<Self> {
        if atoms.iter().any(|&(a, w)| !a.is_finite() || !w.is_finite() || w < 0.0) {
            return domain("atoms need finite angles and nonnegative weights");
        }
        let density = match density {
            None => None,
            Some(d) => {
                let d = if d.is_real() { d } else { d.into_real()? };
                let min = d.grid_min(2048.max(4 * d.degree() + 1));
                if min < -POSITIVITY_TOL * d.coeff(0).re.abs().max(1.0) {
                    return domain(format!("density is negative somewhere (min {min:.3e})"));
                }
                Some(d)
            }
        };
        let atoms = atoms.into_iter().map(|(a, w)| (wrap_angle(a), w)).collect();
        Ok(Self { atoms, density })
    }

    pub fn dirac(angle: f64) -> Self {
        Self {
            atoms: vec![(wrap_angle(angle), 1.0)],
            density: None,
        }
    }

    pub fn uniform() -> Self {
        Self {
            atoms: Vec::new(),
            density: Some(TrigPoly::constant(1.0)),
        }
    }

    pub fn atomic(atoms: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(atoms, None)
    }

    pub fn from_density(density: TrigPoly) -> Result<Self> {
        Self::new(Vec::new(), Some(density))
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&TrigPoly> {
        self.density.as_ref()
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.density.as_ref().map_or(0.0, |d| d.coeff(0).re)
    }

    pub fn is_state(&self) -> bool {
        (self.mass() - 1.0).abs() <= MASS_TOL
    }

    pub fn require_state(&self) -> Result<()> {
        if self.is_state() {
            Ok(())
        } else {
            domain(format!("measure has mass {}, not 1", self.mass()))
        }
    }

    /// The push-forward under `t ↦ t + α`.
    pub fn rotate(&self, alpha: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|&(a, w)| (wrap_angle(a + alpha), w)).collect(),
            density: self.density.as_ref().map(|d| d.rotate(alpha)),
        }
    }

    /// `Σ_i s_i μ_i` for nonnegative `s_i`.
    pub fn combine(parts: &[(f64, &CircleMeasure)]) -> Result<Self> {
        if parts.iter().any(|(s, _)| !(*s >= 0.0)) {
            return domain("mixture coefficients must be nonnegative");
        }
        let mut atoms = Vec::new();
        let mut density: Option<TrigPoly> = None;
        for &(s, m) in parts {
            atoms.extend(m.atoms.iter().map(|&(a, w)| (a, s * w)));
            if let Some(d) = &m.density {
                let d = d.scale(s);
                density = Some(match density {
                    None => d,
                    Some(acc) => acc.add(&d),
                });
            }
        }
        Ok(Self { atoms, density })
    }

    /// `∫ e^{ikt} dμ`.
    pub fn fourier_moment(&self, k: i64) -> Complex64 {
        let atomic: Complex64 = self.atoms.iter().map(|&(a, w)| Complex64::from_polar(w, k as f64 * a)).sum();
        atomic + self.density.as_ref().map_or(Complex64::new(0.0, 0.0), |d| d.coeff(-k))
    }

    /// `∫ f dμ` for a trigonometric polynomial `f`.
    pub fn integrate(&self, f: &TrigPoly) -> Complex64 {
        let d = f.degree() as i64;
        (-d..=d).map(|k| f.coeff(k) * self.fourier_moment(k)).sum()
    }

    /// Mass assigned to each `m`-th root of unity `λ_j = 2πj/m`, `j = 1..m`,
    /// by sending every point to its nearest root (arcs `[λ_j - π/m, λ_j + π/m)`).
    pub fn snap_to_roots_of_unity(&self, m: usize) -> Result<Vec<f64>> {
        if m == 0 {
            return domain("m must be at least 1");
        }
        let h = 2.0 * PI / m as f64;
        let mut w = vec![0.0; m];
        let slot = |j: usize| (j + m - 1) % m;
        for &(a, mass) in &self.atoms {
            let j = ((a + h / 2.0) / h).floor() as usize % m;
            w[slot(j)] += mass;
        }
        if let Some(d) = &self.density {
            for (j, wj) in (1..=m).map(|j| (j, slot(j % m))) {
                let centre = h * j as f64;
                let arc = d.integral_from_zero(centre + h / 2.0) - d.integral_from_zero(centre - h / 2.0);
                w[wj] += arc;
            }
        }
        Ok(w)
    }
}

/// The truncated moments `m_k = ∫ e^{ikt} dμ`, `|k| <= n - 1`. For a
/// density of degree at most `n - 1` this inverts the pullback.
pub fn moments_from_measure(mu: &CircleMeasure, n: usize) -> Result<MomentState> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    mu.require_state()?;
    let n_i = n as i64;
    let moments = (-(n_i - 1)..n_i).map(|k| mu.fourier_moment(k)).collect();
    Ok(MomentState::unchecked(n, moments))
}

/// The pure state of size `n` with roots `θ + 2πj/n`, `j = 1..n-1`; its
/// pullback is the Fejér kernel centred at `θ`.
pub fn fejer_state(n: usize, theta: f64) -> Result<PureState> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let roots: Vec<f64> = (1..n).map(|j| theta + 2.0 * PI * j as f64 / n as f64).collect();
    Ok(PureState::from_roots(&roots))
}

/// Pure state whose density values at `λ_j = 2πj/m` are in the ratio
/// `t_1 : ... : t_m` up to `O(N^{-1/2})`: the root near `λ_j` sits at
/// `λ_j - sqrt(2 t'_j / N)`. With `extra_multiplicity = l >= 1`, a root of
/// multiplicity `l` is added at `extra_root` and the weights are
/// pre-compensated, `t'_j ∝ t_j / (1 - cos(λ_j - extra_root))^l`.
pub fn approx_state(weights: &[f64], big_n: f64, extra_multiplicity: usize, extra_root: f64) -> Result<PureState> {
    let m = weights.len();
    if m == 0 {
        return domain("at least one weight is required");
    }
    if weights.iter().any(|&t| !(t >= 0.0)) {
        return domain("weights must be nonnegative");
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return domain(format!("weights must sum to 1, got {total}"));
    }
    if !(big_n > 0.0) || !big_n.is_finite() {
        return domain("N must be positive");
    }
    let lambda = |j: usize| 2.0 * PI * j as f64 / m as f64;
    let l = extra_multiplicity;
    let adjusted: Vec<f64> = if l == 0 {
        weights.to_vec()
    } else {
        let mut t = Vec::with_capacity(m);
        for (i, &w) in weights.iter().enumerate() {
            let gap = 1.0 - (lambda(i + 1) - extra_root).cos();
            if gap <= 1e-12 {
                return domain("extra root coincides with a root of unity");
            }
            t.push(w / gap.powi(l as i32));
        }
        let s: f64 = t.iter().sum();
        t.iter().map(|x| x / s).collect()
    };
    let mut roots: Vec<f64> = adjusted
        .iter()
        .enumerate()
        .map(|(i, &t)| lambda(i + 1) - (2.0 * t / big_n).sqrt())
        .collect();
    roots.extend(std::iter::repeat(extra_root).take(l));
    Ok(PureState::from_roots(&roots))
}

/// Pullback density values at `λ_j = 2πj/m`, `j = 1..m`, normalized to sum 1.
pub fn evaluation_ratios(state: &PureState, m: usize) -> Vec<f64> {
    let d = state.pullback_density();
    let vals: Vec<f64> = (1..=m).map(|j| d.eval_real(2.0 * PI * j as f64 / m as f64).max(0.0)).collect();
    let s: f64 = vals.iter().sum();
    vals.iter().map(|v| v / s).collect()
}

/// `max_j |ratio_j - t_j|` for [`approx_state`].
pub fn approx_ratio_error(weights: &[f64], big_n: f64, extra_multiplicity: usize, extra_root: f64) -> Result<f64> {
    let s = approx_state(weights, big_n, extra_multiplicity, extra_root)?;
    Ok(evaluation_ratios(&s, weights.len())
        .iter()
        .zip(weights)
        .map(|(r, t)| (r - t).abs())
        .fold(0.0, f64::max))
}

/// Roots of `(1 - cos(m (t - rotation)))^n`: the rotated `m`-th roots of
/// unity, each of multiplicity `n`.
fn power_roots(m: usize, n: usize, rotation: f64) -> Vec<f64> {
    (0..m)
        .flat_map(|j| std::iter::repeat(rotation + 2.0 * PI * j as f64 / m as f64).take(n))
        .collect()
}

/// The pure state of size `nm + 1` with pullback density `power_kernel(m, n, rotation)`.
pub fn power_state(m: usize, n: usize, rotation: f64) -> Result<PureState> {
    if m == 0 || n == 0 {
        return domain("m and n must be at least 1");
    }
    Ok(PureState::from_roots(&power_roots(m, n, rotation)))
}

/// Maxima of the rotated power kernel: `rotation + (2j+1)π/m`, `j = 0..m-1`.
pub fn kernel_maxima(m: usize, rotation: f64) -> Vec<f64> {
    (0..m)
        .map(|j| wrap_angle(rotation + (2 * j + 1) as f64 * PI / m as f64))
        .collect()
}

/// The pure state of size `φ.n + nm` whose density is proportional to
/// `power_kernel(m, n, rotation) · density_φ`.
pub fn product_state(phi: &PureState, m: usize, n: usize, rotation: f64) -> Result<PureState> {
    if m == 0 || n == 0 {
        return domain("m and n must be at least 1");
    }
    let d = phi.pullback_density();
    if kernel_maxima(m, rotation).iter().all(|&t| d.eval_real(t) <= VANISHING_DENSITY) {
        return Err(Error::Degenerate(
            "state density vanishes at every maximum of the power kernel".into(),
        ));
    }
    let mut roots = phi.roots.clone();
    roots.extend(power_roots(m, n, rotation));
    Ok(PureState::from_roots(&roots))
}

/// The density `power_kernel(m, n, rotation) · density_φ`, renormalized;
/// computed by polynomial arithmetic rather than from roots.
pub fn product_density(phi: &PureState, m: usize, n: usize, rotation: f64) -> Result<TrigPoly> {
    phi.pullback_density()
        .multiply(&power_kernel(m, n, rotation)?)
        .normalized_density()
}
