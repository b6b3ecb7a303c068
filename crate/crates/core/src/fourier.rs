//! Trigonometric polynomials on the circle.
//!
//! A [`TrigPoly`] stores the Fourier coefficients `f̂(k)`, `|k| <= K`, of
//! `f(t) = Σ f̂(k) e^{ikt}` with respect to the normalized Haar measure
//! `dλ = dt / 2π`, so that `∫ e_k dλ = δ_{k,0}`. A density is a real,
//! nonnegative polynomial with `f̂(0) = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Tolerance used when certifying nonnegativity of densities on a grid.
pub const DENSITY_TOL: f64 = 1e-10;
/// Tolerance for the conjugate symmetry of real polynomials.
const REAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    /// Dense coefficients `f̂(-K), ..., f̂(K)`.
    coeffs: Vec<Complex64>,
    #[serde(default)]
    real: bool,
    #[serde(default)]
    density: bool,
}

impl TrigPoly {
    /// Builds a polynomial from the dense coefficient vector `f̂(-K..=K)`.
    /// The length must be odd.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return domain(format!(
                "coefficient vector must have odd length 2K+1, got {}",
                coeffs.len()
            ));
        }
        Ok(Self {
            coeffs,
            real: false,
            density: false,
        })
    }

    /// Builds a polynomial from sparse `(k, f̂(k))` pairs.
    pub fn from_pairs(pairs: &[(i64, Complex64)]) -> Self {
        let degree = pairs.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * degree + 1];
        for &(k, c) in pairs {
            coeffs[(k + degree as i64) as usize] += c;
        }
        Self {
            coeffs,
            real: false,
            density: false,
        }
    }

    /// Real polynomial from sparse real-coefficient pairs (symmetric input expected).
    pub fn from_real_pairs(pairs: &[(i64, f64)]) -> Result<Self> {
        let c: Vec<_> = pairs.iter().map(|&(k, v)| (k, Complex64::new(v, 0.0))).collect();
        Self::from_pairs(&c).into_real()
    }

    pub fn constant(value: f64) -> Self {
        Self {
            coeffs: vec![Complex64::new(value, 0.0)],
            real: true,
            density: value == 1.0,
        }
    }

    /// The basis function `e_k(t) = e^{ikt}`.
    pub fn basis(k: i64) -> Self {
        Self::from_pairs(&[(k, Complex64::new(1.0, 0.0))])
    }

    pub fn degree(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    /// `f̂(k)`, zero outside the stored range.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let d = self.degree() as i64;
        if k.abs() > d {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + d) as usize]
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_density(&self) -> bool {
        self.density
    }

    /// Largest violation of `f̂(-k) = conj(f̂(k))`.
    pub fn symmetry_defect(&self) -> f64 {
        let d = self.degree() as i64;
        (0..=d)
            .map(|k| (self.coeff(-k) - self.coeff(k).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Checks conjugate symmetry and flags the polynomial as real.
    /// The coefficients are symmetrized exactly.
    pub fn into_real(mut self) -> Result<Self> {
        let defect = self.symmetry_defect();
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if defect > REAL_TOL * scale {
            return domain(format!("polynomial is not real: symmetry defect {defect:.3e}"));
        }
        self.symmetrize();
        Ok(self)
    }

    fn symmetrize(&mut self) {
        let d = self.degree() as i64;
        for k in 0..=d {
            let avg = (self.coeff(k) + self.coeff(-k).conj()) * 0.5;
            self.coeffs[(k + d) as usize] = avg;
            self.coeffs[(d - k) as usize] = avg.conj();
        }
        self.real = true;
    }

    /// Marks a polynomial known to be a density (e.g. `|P|²` built from
    /// coefficients) without the grid check; enforces exact symmetry.
    pub(crate) fn assume_density(mut self) -> Self {
        self.symmetrize();
        self.density = true;
        self
    }

    /// Checks the density conditions (real, `f̂(0) = 1`, nonnegative on a
    /// `4K+1` point grid) and sets the density flag.
    pub fn into_density(self) -> Result<Self> {
        let mut p = if self.real { self } else { self.into_real()? };
        let c0 = p.coeff(0);
        if (c0.re - 1.0).abs() > 1e-12 || c0.im.abs() > 1e-12 {
            return domain(format!("density must integrate to 1, got {c0}"));
        }
        let min = p.grid_min(4 * p.degree() + 1);
        if min < -DENSITY_TOL {
            return domain(format!("density is negative on the grid (min {min:.3e})"));
        }
        p.density = true;
        Ok(p)
    }

    /// Rescales a real polynomial so that `f̂(0) = 1` and certifies it as a density.
    pub fn normalized_density(self) -> Result<Self> {
        let c0 = self.coeff(0).re;
        if c0 <= 0.0 {
            return domain(format!("cannot normalize: integral {c0} is not positive"));
        }
        self.scale(1.0 / c0).into_density()
    }

    /// `Σ f̂(k) e^{ikt}`, evaluated by Horner's rule in `z = e^{it}`.
    pub fn eval(&self, t: f64) -> Complex64 {
        let d = self.degree() as i32;
        let z = Complex64::from_polar(1.0, t);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * Complex64::from_polar(1.0, -(d as f64) * t)
    }

    /// Real value of a real polynomial; the (tiny) imaginary part is discarded.
    pub fn eval_real(&self, t: f64) -> f64 {
        let v = self.eval(t);
        debug_assert!(!self.real || v.im.abs() <= 1e-9 * (1.0 + v.re.abs()));
        v.re
    }

    /// Minimum of the real part over `points` uniformly spaced angles.
    pub fn grid_min(&self, points: usize) -> f64 {
        let points = points.max(1);
        (0..points)
            .map(|i| self.eval_real(2.0 * PI * i as f64 / points as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            real: self.real,
            density: self.density && s == 1.0,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.degree().max(other.degree()) as i64;
        let coeffs = (-d..=d).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self {
            coeffs,
            real: self.real && other.real,
            density: false,
        }
    }

    /// Product of two polynomials: convolution of the coefficient sequences.
    pub fn multiply(&self, other: &Self) -> Self {
        let (da, db) = (self.degree(), other.degree());
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * (da + db) + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let mut p = Self {
            coeffs,
            real: false,
            density: false,
        };
        if self.real && other.real {
            // removes rounding asymmetry from the convolution sums
            p.symmetrize();
        }
        p
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(1.0);
        acc.density = false;
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.multiply(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.multiply(&base);
            }
        }
        acc
    }

    /// `t ↦ f(t - alpha)`.
    pub fn rotate(&self, alpha: f64) -> Self {
        let d = self.degree() as i64;
        let coeffs = (-d..=d)
            .map(|k| self.coeff(k) * Complex64::from_polar(1.0, -(k as f64) * alpha))
            .collect();
        Self {
            coeffs,
            real: self.real,
            density: self.density,
        }
    }

    /// Keeps only the coefficients with `|k| <= degree`.
    pub fn truncate(&self, degree: usize) -> Self {
        let d = degree.min(self.degree()) as i64;
        Self {
            coeffs: (-d..=d).map(|k| self.coeff(k)).collect(),
            real: self.real,
            density: false,
        }
    }

    /// `∫_0^t f dλ` with `dλ = ds / 2π`, in closed form.
    pub fn integral_from_zero(&self, t: f64) -> f64 {
        let d = self.degree() as i64;
        let mut acc = self.coeff(0) * t;
        for k in (-d..=d).filter(|&k| k != 0) {
            let ik = Complex64::new(0.0, k as f64);
            acc += self.coeff(k) * (Complex64::from_polar(1.0, k as f64 * t) - 1.0) / ik;
        }
        acc.re / (2.0 * PI)
    }

    /// `∫_0^t (∫_0^s f dλ) ds`: the antiderivative of [`Self::integral_from_zero`].
    pub fn double_integral_from_zero(&self, t: f64) -> f64 {
        let d = self.degree() as i64;
        let mut acc = self.coeff(0) * (t * t / 2.0);
        for k in (-d..=d).filter(|&k| k != 0) {
            let kf = k as f64;
            let ik = Complex64::new(0.0, kf);
            let e = Complex64::from_polar(1.0, kf * t) - 1.0;
            acc += self.coeff(k) * (-e / (kf * kf) - t / ik);
        }
        acc.re / (2.0 * PI)
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Geodesic (arc-length) distance between two angles.
pub fn arc_distance(a: f64, b: f64) -> f64 {
    // |a - b| keeps the result exactly symmetric
    let d = (a - b).abs().rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Density proportional to `∏_j (1 - cos(t - θ_j))`, normalized to `f̂(0) = 1`.
pub fn root_form_density(angles: &[f64]) -> TrigPoly {
    let mut p = TrigPoly::constant(1.0);
    for &theta in angles {
        p = p.multiply(&cosine_factor(1, theta));
    }
    let c0 = p.coeff(0).re;
    finish_density(p.scale(1.0 / c0))
}

/// The Fejér kernel of order `n` centred at `theta`:
/// coefficients `(1 - |k|/n) e^{-ikθ}` for `|k| <= n - 1`.
pub fn fejer_density(n: usize, theta: f64) -> Result<TrigPoly> {
    if n == 0 {
        return domain("Fejér kernel requires n >= 1");
    }
    let d = n as i64 - 1;
    let pairs: Vec<_> = (-d..=d)
        .map(|k| {
            let w = 1.0 - k.abs() as f64 / n as f64;
            (k, Complex64::from_polar(w, -(k as f64) * theta))
        })
        .collect();
    Ok(finish_density(TrigPoly::from_pairs(&pairs).into_real()?))
}

/// Density proportional to `(1 - cos(m (t - rotation)))^n`.
pub fn power_kernel(m: usize, n: usize, rotation: f64) -> Result<TrigPoly> {
    if m == 0 || n == 0 {
        return domain("power kernel requires m >= 1 and n >= 1");
    }
    let p = cosine_factor(m as i64, m as f64 * rotation).pow(n as u32);
    let c0 = p.coeff(0).re;
    Ok(finish_density(p.scale(1.0 / c0)))
}

/// `1 - cos(m t - phase)`.
fn cosine_factor(m: i64, phase: f64) -> TrigPoly {
    let half = Complex64::from_polar(-0.5, -phase);
    let mut p = TrigPoly::from_pairs(&[(-m, half.conj()), (0, Complex64::new(1.0, 0.0)), (m, half)]);
    p.real = true;
    p
}

fn finish_density(mut p: TrigPoly) -> TrigPoly {
    // nonnegative by construction; the grid check guards against coding errors
    debug_assert!(p.grid_min(4 * p.degree() + 1) >= -1e-8, "constructed density is negative");
    let d = p.degree() as i64;
    p.coeffs[d as usize] = Complex64::new(1.0, 0.0);
    p.density = true;
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn one_minus_cos() -> TrigPoly {
        TrigPoly::from_real_pairs(&[(-1, -0.5), (0, 1.0), (1, -0.5)]).unwrap()
    }

    fn assert_coeffs(p: &TrigPoly, expected: &[(i64, f64)]) {
        let d = p.degree().max(expected.iter().map(|e| e.0.unsigned_abs() as usize).max().unwrap());
        for k in -(d as i64)..=(d as i64) {
            let want = expected.iter().find(|e| e.0 == k).map_or(0.0, |e| e.1);
            assert_abs_diff_eq!(p.coeff(k).re, want, epsilon = 1e-12);
            assert_abs_diff_eq!(p.coeff(k).im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eval_examples() {
        assert_abs_diff_eq!(TrigPoly::constant(1.0).eval_real(1.234), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(one_minus_cos().eval_real(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(one_minus_cos().eval_real(PI), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn multiply_examples() {
        let p = one_minus_cos().multiply(&TrigPoly::constant(1.0));
        assert_coeffs(&p, &[(-1, -0.5), (0, 1.0), (1, -0.5)]);

        let one_plus_cos = TrigPoly::from_real_pairs(&[(-1, 0.5), (0, 1.0), (1, 0.5)]).unwrap();
        let p = one_minus_cos().multiply(&one_plus_cos);
        // 1 - cos^2 t = 1/2 - cos(2t)/2
        assert_coeffs(&p, &[(-2, -0.25), (0, 0.5), (2, -0.25)]);
        assert!(p.is_real());

        let e2 = TrigPoly::basis(1).multiply(&TrigPoly::basis(1));
        assert_eq!(e2.coeff(2), c(1.0));
        assert_eq!(e2.coeff(0), c(0.0));
    }

    #[test]
    fn root_form_examples() {
        assert_coeffs(&root_form_density(&[0.0]), &[(-1, -0.5), (0, 1.0), (1, -0.5)]);
        assert_coeffs(&root_form_density(&[]), &[(0, 1.0)]);
        let p = root_form_density(&[0.0, PI]);
        assert_coeffs(&p, &[(-2, -0.5), (0, 1.0), (2, -0.5)]);
        assert!(p.is_density());
        // quadrature check of the normalization
        let g = 1000;
        let q: f64 = (0..g).map(|i| p.eval_real(2.0 * PI * i as f64 / g as f64)).sum::<f64>() / g as f64;
        assert_abs_diff_eq!(q, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn root_form_vanishes_at_angles() {
        let angles = [0.3, 1.7, 1.7, 4.0, 5.5];
        let p = root_form_density(&angles);
        for &a in &angles {
            assert!(p.eval_real(a).abs() <= 1e-8);
        }
        assert!(p.grid_min(2048) >= -1e-10);
    }

    #[test]
    fn fejer_examples() {
        assert_coeffs(&fejer_density(1, 0.7).unwrap(), &[(0, 1.0)]);
        assert_coeffs(&fejer_density(2, 0.0).unwrap(), &[(-1, 0.5), (0, 1.0), (1, 0.5)]);
        // F_n(0) = n
        assert_abs_diff_eq!(fejer_density(3, 0.0).unwrap().eval_real(0.0), 3.0, epsilon = 1e-13);
        assert!(fejer_density(0, 0.0).is_err());
    }

    #[test]
    fn fejer_peaks_at_theta_and_is_nonnegative() {
        for n in [2usize, 5, 16] {
            let theta = 1.1;
            let f = fejer_density(n, theta).unwrap();
            assert_abs_diff_eq!(f.eval_real(theta), n as f64, epsilon = 1e-10);
            assert!(f.grid_min(1024) >= -1e-12);
        }
    }

    #[test]
    fn power_kernel_examples() {
        assert_coeffs(&power_kernel(1, 1, 0.0).unwrap(), &[(-1, -0.5), (0, 1.0), (1, -0.5)]);
        assert_coeffs(&power_kernel(2, 1, 0.0).unwrap(), &[(-2, -0.5), (0, 1.0), (2, -0.5)]);
        assert_coeffs(
            &power_kernel(1, 2, 0.0).unwrap(),
            &[(-2, 1.0 / 6.0), (-1, -2.0 / 3.0), (0, 1.0), (1, -2.0 / 3.0), (2, 1.0 / 6.0)],
        );
        // quadrature check of the m=1, n=2 normalization
        let p = power_kernel(1, 2, 0.0).unwrap();
        let g = 999;
        let q: f64 = (0..g).map(|i| p.eval_real(2.0 * PI * i as f64 / g as f64)).sum::<f64>() / g as f64;
        assert_abs_diff_eq!(q, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn power_kernel_zeros_and_maxima() {
        let (m, n, rho) = (3usize, 4usize, 0.4);
        let p = power_kernel(m, n, rho).unwrap();
        let grid = 3 * 1024;
        let values: Vec<f64> = (0..grid).map(|i| p.eval_real(2.0 * PI * i as f64 / grid as f64)).collect();
        let max = values.iter().cloned().fold(f64::MIN, f64::max);
        for j in 0..m {
            let zero = rho + 2.0 * PI * j as f64 / m as f64;
            assert!(p.eval_real(zero).abs() < 1e-12);
            let peak = rho + (2 * j + 1) as f64 * PI / m as f64;
            assert!(p.eval_real(peak) >= max - 1e-9);
        }
    }

    #[test]
    fn integrals_match_quadrature() {
        let p = root_form_density(&[0.4, 2.0, 2.5]);
        let t = 2.2;
        let g = 20000;
        let h = t / g as f64;
        let q: f64 = (0..g).map(|i| p.eval_real((i as f64 + 0.5) * h)).sum::<f64>() * h / (2.0 * PI);
        assert_abs_diff_eq!(p.integral_from_zero(t), q, epsilon = 1e-8);
        assert_abs_diff_eq!(p.integral_from_zero(2.0 * PI), 1.0, epsilon = 1e-12);
        let q2: f64 = (0..g).map(|i| p.integral_from_zero((i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert_abs_diff_eq!(p.double_integral_from_zero(t), q2, epsilon = 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(TrigPoly::from_coeffs(vec![c(1.0), c(0.0)]).is_err());
        assert!(TrigPoly::from_pairs(&[(1, Complex64::new(0.0, 1.0))]).into_real().is_err());
        assert!(TrigPoly::from_real_pairs(&[(0, 2.0)]).unwrap().into_density().is_err());
        let neg = TrigPoly::from_real_pairs(&[(-1, 1.0), (0, 1.0), (1, 1.0)]).unwrap();
        assert!(neg.into_density().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn poly(max_degree: usize) -> impl Strategy<Value = TrigPoly> {
            (0..=max_degree).prop_flat_map(|d| {
                prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * d + 1).prop_map(|v| {
                    TrigPoly::from_coeffs(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
                })
            })
        }

        proptest! {
            #[test]
            fn product_evaluates_pointwise(f in poly(8), g in poly(8), ts in prop::collection::vec(0.0f64..2.0 * PI, 50)) {
                let fg = f.multiply(&g);
                prop_assert_eq!(fg.degree(), f.degree() + g.degree());
                for t in ts {
                    prop_assert!((fg.eval(t) - f.eval(t) * g.eval(t)).norm() <= 1e-10);
                }
            }

            #[test]
            fn root_form_is_nonnegative(angles in prop::collection::vec(0.0f64..2.0 * PI, 0..10)) {
                let p = root_form_density(&angles);
                prop_assert!(p.grid_min(2048) >= -1e-10);
                for a in angles {
                    prop_assert!(p.eval_real(a).abs() <= 1e-8);
                }
            }
        }
    }
}
