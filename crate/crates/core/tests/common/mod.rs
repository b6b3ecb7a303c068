//! Brute-force reference for the spectral distance at small n.
//!
//! The distance is the largest ratio `(φ − ψ)(T) / ‖[D, T]‖` over Hermitian
//! Toeplitz `T` with zero diagonal. A coarse scan of the cube surface picks
//! starting points; each is refined by pattern search on the same ratio with
//! the spectral norm replaced by the Schatten p-norm, for increasing p. The
//! surrogate is smooth and maximizing it is a convex problem, so the search
//! does not stall on eigenvalue crossings; since ‖H‖ ≤ ‖H‖_p ≤ n^{1/p}‖H‖
//! the exact ratio at the refined point is within a factor n^{-1/p} of the
//! optimum. Everything here is dense: states act through `⟨ξ, T ξ⟩`, the
//! commutator is formed entrywise, and eigenvalues come from Jacobi.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use truncircle::linalg::{CMatrix, HermitianEigen};
use truncircle::states::PureState;
use truncircle::toeplitz::Toeplitz;

fn toeplitz_from(h: &[f64]) -> Toeplitz {
    let upper: Vec<Complex64> = h.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Toeplitz::hermitian(0.0, &upper)
}

/// Schatten p-norm of `i[D, T]`; `p = ∞` is the operator norm.
fn commutator_norm(t: &Toeplitz, p: f64) -> f64 {
    let n = t.size();
    let m = t.to_matrix();
    let d = CMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new((i + 1) as f64, 0.0) } else { Complex64::new(0.0, 0.0) });
    let c: DMatrix<Complex64> = (&d * &m - &m * &d) * Complex64::new(0.0, 1.0);
    let abs: Vec<f64> = HermitianEigen::new(&c).unwrap().values.iter().map(|v| v.abs()).collect();
    let top = abs.iter().copied().fold(0.0, f64::max);
    if top == 0.0 || p.is_infinite() {
        return top;
    }
    top * abs.iter().map(|v| (v / top).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn ratio_p(phi: &PureState, psi: &PureState, h: &[f64], p: f64) -> f64 {
    let t = toeplitz_from(h);
    let norm = commutator_norm(&t, p);
    if norm == 0.0 {
        return 0.0;
    }
    (phi.evaluate(&t).unwrap() - psi.evaluate(&t).unwrap()).abs() / norm
}

fn ratio(phi: &PureState, psi: &PureState, h: &[f64]) -> f64 {
    ratio_p(phi, psi, h, f64::INFINITY)
}

fn normalize(h: &mut [f64]) {
    let s = h.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if s > 0.0 {
        h.iter_mut().for_each(|x| *x /= s);
    }
}

/// Points of `{-1, …, 1}^d` (with `levels` values per axis) on the cube surface.
fn cube_surface(d: usize, levels: usize) -> Vec<Vec<f64>> {
    let vals: Vec<f64> = (0..levels).map(|i| -1.0 + 2.0 * i as f64 / (levels - 1) as f64).collect();
    let mut out = Vec::new();
    let total = levels.pow(d as u32);
    for mut code in 0..total {
        let mut p = Vec::with_capacity(d);
        for _ in 0..d {
            p.push(vals[code % levels]);
            code /= levels;
        }
        if p.iter().any(|x| x.abs() == 1.0) {
            out.push(p);
        }
    }
    out
}

pub fn grid_oracle(phi: &PureState, psi: &PureState, seed: u64) -> f64 {
    let n = phi.size();
    assert_eq!(n, psi.size());
    if n < 2 {
        return 0.0;
    }
    let d = 2 * (n - 1);
    let levels = if d <= 4 { 7 } else { 5 };
    let mut scored: Vec<(f64, Vec<f64>)> = cube_surface(d, levels)
        .into_iter()
        .map(|h| (ratio(phi, psi, &h), h))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for (value, mut h) in scored.into_iter().take(2) {
        best = best.max(value);
        for (stage, p) in [4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0, 16384.0].into_iter().enumerate() {
            let step = if stage == 0 { 0.25 } else { 0.02 };
            h = pattern_search(&h, step, &mut rng, |x| ratio_p(phi, psi, x, p));
            best = best.max(ratio(phi, psi, &h));
        }
    }
    best
}

fn pattern_search(start: &[f64], mut step: f64, rng: &mut impl Rng, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let d = start.len();
    let mut h = start.to_vec();
    let mut value = f(&h);
    while step > 1e-9 {
        let mut dirs: Vec<Vec<f64>> = (0..d)
            .flat_map(|i| {
                [1.0, -1.0].map(|s| {
                    let mut e = vec![0.0; d];
                    e[i] = s;
                    e
                })
            })
            .collect();
        for _ in 0..2 * d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= len);
            dirs.push(v);
        }
        let mut improved = false;
        for dir in &dirs {
            let mut cand: Vec<f64> = h.iter().zip(dir).map(|(a, b)| a + step * b).collect();
            normalize(&mut cand);
            let r = f(&cand);
            if r > value {
                value = r;
                h = cand;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    h
}

pub fn random_pure_state(n: usize, rng: &mut impl Rng) -> PureState {
    let roots: Vec<f64> = (1..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    PureState::from_roots(&roots)
}
