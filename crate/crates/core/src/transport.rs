//! Wasserstein-1 distance on the circle with the arc-length ground metric.
//!
//! Uses `W₁(μ, ν) = min_c ∫_0^{2π} |F_μ(t) - F_ν(t) - c| dt` with
//! `F(t) = μ([0, t))`. The difference of CDFs is piecewise smooth: atoms
//! are jumps, densities contribute closed-form antiderivatives. The
//! integral is evaluated exactly on pieces where it is monotone, so the
//! result does not depend on where the grid sits relative to the measures.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::fourier::{arc_distance, wrap_angle, TrigPoly};
use crate::states::CircleMeasure;

pub const DEFAULT_GRID: usize = 4096;
pub const MIN_GRID: usize = 256;

/// Cumulative distribution `t ↦ μ([0, t))` of a circle measure.
#[derive(Debug, Clone)]
pub struct CircleCdf {
    /// Sorted atom angles and the cumulative atomic mass up to and including each.
    atom_angles: Vec<f64>,
    atom_cumulative: Vec<f64>,
    density: Option<TrigPoly>,
}

impl CircleCdf {
    pub fn new(mu: &CircleMeasure) -> Self {
        let mut atoms: Vec<(f64, f64)> = mu.atoms().to_vec();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let atom_cumulative = atoms
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        Self {
            atom_angles: atoms.iter().map(|a| a.0).collect(),
            atom_cumulative,
            density: mu.density().cloned(),
        }
    }

    /// Atomic mass on `[0, t)`.
    fn atomic_below(&self, t: f64) -> f64 {
        let idx = self.atom_angles.partition_point(|&a| a < t);
        if idx == 0 {
            0.0
        } else {
            self.atom_cumulative[idx - 1]
        }
    }

    /// Atomic mass on `[0, t]`.
    fn atomic_upto(&self, t: f64) -> f64 {
        let idx = self.atom_angles.partition_point(|&a| a <= t);
        if idx == 0 {
            0.0
        } else {
            self.atom_cumulative[idx - 1]
        }
    }

    /// `μ([0, t))` for `t ∈ [0, 2π]`.
    pub fn eval(&self, t: f64) -> f64 {
        self.atomic_below(t) + self.density.as_ref().map_or(0.0, |d| d.integral_from_zero(t))
    }

    /// Values on the uniform grid `2πi/G`, `i = 0..=G`.
    pub fn grid_values(&self, grid: usize) -> Vec<f64> {
        (0..=grid).map(|i| self.eval(2.0 * PI * i as f64 / grid as f64)).collect()
    }
}

/// A maximal interval on which `G = F_μ - F_ν` is continuous and monotone.
#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    /// Atomic part of `G` on `[a, b)`.
    jump: f64,
    /// `G(a+)`, `G(b-)`.
    ga: f64,
    gb: f64,
    /// Double antiderivative of the density difference at `a`, `b`.
    dda: f64,
    ddb: f64,
}

struct SignedCdf {
    diff: Option<TrigPoly>,
    pieces: Vec<Piece>,
}

impl SignedCdf {
    fn new(mu: &CircleMeasure, nu: &CircleMeasure, grid: usize) -> Self {
        let diff = match (mu.density(), nu.density()) {
            (None, None) => None,
            (Some(p), None) => Some(p.clone()),
            (None, Some(q)) => Some(q.scale(-1.0)),
            (Some(p), Some(q)) => Some(p.add(&q.scale(-1.0))),
        };
        let h = 2.0 * PI / grid as f64;
        let mut cuts: Vec<f64> = (0..grid).map(|i| h * i as f64).collect();
        cuts.extend(mu.atoms().iter().chain(nu.atoms()).map(|a| a.0));
        if let Some(d) = &diff {
            // split at sign changes of the density difference so that G is monotone on each piece
            for i in 0..grid {
                let (a, b) = (h * i as f64, h * (i + 1) as f64);
                let (fa, fb) = (d.eval_real(a), d.eval_real(b));
                if fa * fb < 0.0 {
                    cuts.push(bisect(|t| d.eval_real(t), a, b, fa));
                }
            }
        }
        cuts.push(2.0 * PI);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let (fm, fn_) = (CircleCdf::new(mu), CircleCdf::new(nu));
        let smooth = |t: f64| diff.as_ref().map_or(0.0, |d| d.integral_from_zero(t));
        let double = |t: f64| diff.as_ref().map_or(0.0, |d| d.double_integral_from_zero(t));
        let mut pieces = Vec::with_capacity(cuts.len());
        let mut prev = (smooth(0.0), double(0.0));
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let next = (smooth(b), double(b));
            if b > a {
                // no atom lies inside (a, b); those at a count for t > a
                let jump = fm.atomic_upto(a) - fn_.atomic_upto(a);
                pieces.push(Piece {
                    a,
                    b,
                    jump,
                    ga: jump + prev.0,
                    gb: jump + next.0,
                    dda: prev.1,
                    ddb: next.1,
                });
            }
            prev = next;
        }
        Self { diff, pieces }
    }

    fn g(&self, p: &Piece, t: f64) -> f64 {
        p.jump + self.diff.as_ref().map_or(0.0, |d| d.integral_from_zero(t))
    }

    fn dd(&self, t: f64) -> f64 {
        self.diff.as_ref().map_or(0.0, |d| d.double_integral_from_zero(t))
    }

    /// The point in `(a, b)` where the monotone `G` crosses `c`.
    fn crossing(&self, p: &Piece, c: f64) -> f64 {
        bisect(|t| self.g(p, t) - c, p.a, p.b, p.ga - c)
    }

    /// `|{G < c}| - |{G > c}|`, the derivative of the cost in `c`.
    fn slope(&self, c: f64) -> f64 {
        let mut s = 0.0;
        for p in &self.pieces {
            let (lo, hi) = (p.ga.min(p.gb), p.ga.max(p.gb));
            let len = p.b - p.a;
            if lo == hi && c == lo {
                continue;
            }
            if c >= hi {
                s += len;
            } else if c <= lo {
                s -= len;
            } else {
                let r = self.crossing(p, c);
                let (below, above) = if p.ga < p.gb { (r - p.a, p.b - r) } else { (p.b - r, r - p.a) };
                s += below - above;
            }
        }
        s
    }

    /// `∫_0^{2π} |G(t) - c| dt`.
    fn cost(&self, c: f64) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            let (lo, hi) = (p.ga.min(p.gb), p.ga.max(p.gb));
            if c >= hi || c <= lo {
                total += (p.ddb - p.dda + (p.jump - c) * (p.b - p.a)).abs();
            } else {
                let r = self.crossing(p, c);
                let ddr = self.dd(r);
                total += (ddr - p.dda + (p.jump - c) * (r - p.a)).abs();
                total += (p.ddb - ddr + (p.jump - c) * (p.b - r)).abs();
            }
        }
        total
    }

    /// A minimizer of `cost`: a weighted median of `G`.
    fn median(&self) -> f64 {
        let mut lo = self.pieces.iter().map(|p| p.ga.min(p.gb)).fold(f64::INFINITY, f64::min);
        let mut hi = self.pieces.iter().map(|p| p.ga.max(p.gb)).fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let s = self.slope(mid);
            if s == 0.0 {
                return mid;
            }
            if s < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // the cost is convex; take the better endpoint of the final bracket
        if self.cost(lo) <= self.cost(hi) {
            lo
        } else {
            hi
        }
    }
}

/// Root of a function with a sign change on `[a, b]`; `fa` is its value at `a`.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let neg_at_a = fa < 0.0;
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn check_inputs(mu: &CircleMeasure, nu: &CircleMeasure) -> Result<()> {
    mu.require_state()?;
    nu.require_state()
}

/// `W₁(μ, ν)` for states on the circle. The grid only seeds the subdivision;
/// integration on each piece is exact.
pub fn w1_circle(mu: &CircleMeasure, nu: &CircleMeasure, grid: usize) -> Result<f64> {
    check_inputs(mu, nu)?;
    if grid < MIN_GRID {
        return domain(format!("grid must have at least {MIN_GRID} points, got {grid}"));
    }
    let g = SignedCdf::new(mu, nu, grid);
    Ok(g.cost(g.median()).max(0.0))
}

/// A 1-Lipschitz function attaining `W₁` up to discretization, sampled on
/// the grid `2πi/G`: `f' = -sign(F_μ - F_ν - c*)`, with the closing drift
/// removed so the function is periodic. Linear interpolation between samples
/// gives a function with `∫ f dμ - ∫ f dν ≈ W₁(μ, ν)`.
pub fn w1_certificate(mu: &CircleMeasure, nu: &CircleMeasure, grid: usize) -> Result<Vec<f64>> {
    check_inputs(mu, nu)?;
    if grid < MIN_GRID {
        return domain(format!("grid must have at least {MIN_GRID} points, got {grid}"));
    }
    let g = SignedCdf::new(mu, nu, grid);
    let c = g.median();
    let (fm, fn_) = (CircleCdf::new(mu), CircleCdf::new(nu));
    let h = 2.0 * PI / grid as f64;
    // f' = -sign(G - c) off the level set; on flats where G = c the slope is
    // free and is used to make f periodic
    let mut signs: Vec<Option<f64>> = (0..grid)
        .map(|i| {
            let t = h * (i as f64 + 0.5);
            let v = fm.eval(t) - fn_.eval(t) - c;
            (v.abs() > 1e-12).then(|| -v.signum())
        })
        .collect();
    let fixed: f64 = signs.iter().flatten().sum();
    let free = signs.iter().filter(|s| s.is_none()).count();
    if free > 0 {
        let fill = (-fixed / free as f64).clamp(-1.0, 1.0);
        signs.iter_mut().filter(|s| s.is_none()).for_each(|s| *s = Some(fill));
    }
    let signs: Vec<f64> = signs.into_iter().flatten().collect();
    let drift: f64 = signs.iter().sum::<f64>() / grid as f64;
    let scale = 1.0 / (1.0 + drift.abs());
    let mut f = Vec::with_capacity(grid);
    let mut acc = 0.0;
    for s in &signs {
        f.push(acc);
        acc += (s - drift) * h * scale;
    }
    Ok(f)
}

/// Discretizes a state onto the grid `2πi/G`: atoms go to the nearest grid
/// point, density mass on `[t_i - h/2, t_i + h/2)` goes to `t_i`.
fn discretize(mu: &CircleMeasure, grid: usize) -> Vec<f64> {
    let h = 2.0 * PI / grid as f64;
    let mut w = vec![0.0; grid];
    for &(a, m) in mu.atoms() {
        w[((a / h).round() as usize) % grid] += m;
    }
    if let Some(d) = mu.density() {
        for (i, wi) in w.iter_mut().enumerate() {
            let t = h * i as f64;
            *wi += d.integral_from_zero(t + h / 2.0) - d.integral_from_zero(t - h / 2.0);
        }
    }
    w
}

/// Transportation-problem value of `W₁` after discretizing both measures to
/// `G` points, solved exactly on the dense `G × G` arc-distance cost matrix
/// by the transportation simplex. Intended for cross-checking.
pub fn w1_lp_oracle(mu: &CircleMeasure, nu: &CircleMeasure, grid: usize) -> Result<f64> {
    check_inputs(mu, nu)?;
    if grid == 0 || grid > 512 {
        return domain("oracle grid must be between 1 and 512");
    }
    let supply = discretize(mu, grid);
    let demand = discretize(nu, grid);
    let h = 2.0 * PI / grid as f64;
    let cost: Vec<f64> = (0..grid * grid)
        .map(|idx| arc_distance(h * (idx / grid) as f64, h * (idx % grid) as f64))
        .collect();
    Ok(TransportSimplex::solve(&supply, &demand, &cost))
}

/// Dense transportation simplex with a spanning-tree basis (rows `0..m`,
/// columns `m..m+n`), north-west corner start, Dantzig pricing and the
/// classical supply perturbation against degeneracy.
struct TransportSimplex;

impl TransportSimplex {
    fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> f64 {
        let (m, n) = (supply.len(), demand.len());
        let eps = 1e-10 / (m as f64);
        let mut a: Vec<f64> = supply.iter().map(|s| s.max(0.0) + eps).collect();
        let mut b: Vec<f64> = demand.iter().map(|d| d.max(0.0)).collect();
        let total_a: f64 = a.iter().sum();
        let total_b: f64 = b[..n - 1].iter().sum();
        b[n - 1] = total_a - total_b;
        if b[n - 1] < 0.0 {
            // rounding left the last column short: rescale supplies instead
            b[n - 1] = 0.0;
            let s: f64 = b.iter().sum::<f64>() + m as f64 * eps;
            let t: f64 = a.iter().sum();
            a.iter_mut().for_each(|x| *x *= s / t);
            b[n - 1] = m as f64 * eps;
        }

        // north-west corner
        let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(m + n - 1);
        let (mut i, mut j) = (0, 0);
        let (mut ra, mut rb) = (a[0], b[0]);
        while i < m && j < n {
            let x = ra.min(rb);
            basis.push((i, j, x));
            ra -= x;
            rb -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if (ra <= rb && i < m - 1) || j == n - 1 {
                i += 1;
                ra += a[i];
            } else {
                j += 1;
                rb += b[j];
            }
        }

        let nodes = m + n;
        let mut u = vec![0.0; m];
        let mut v = vec![0.0; n];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
        let mut parent_edge = vec![usize::MAX; nodes];
        let mut parent = vec![usize::MAX; nodes];
        let mut depth = vec![0usize; nodes];
        let max_iter = 50 * nodes * nodes;
        for _ in 0..max_iter {
            // potentials from the basis tree rooted at row 0
            adj.iter_mut().for_each(|x| x.clear());
            for (e, &(bi, bj, _)) in basis.iter().enumerate() {
                adj[bi].push(e);
                adj[m + bj].push(e);
            }
            parent.fill(usize::MAX);
            parent_edge.fill(usize::MAX);
            let mut stack = vec![0usize];
            parent[0] = 0;
            depth[0] = 0;
            u[0] = 0.0;
            while let Some(node) = stack.pop() {
                for &e in &adj[node] {
                    let (bi, bj, _) = basis[e];
                    let other = if node < m { m + bj } else { bi };
                    if parent[other] != usize::MAX {
                        continue;
                    }
                    parent[other] = node;
                    parent_edge[other] = e;
                    depth[other] = depth[node] + 1;
                    if other >= m {
                        v[bj] = cost[bi * n + bj] - u[bi];
                    } else {
                        u[bi] = cost[bi * n + bj] - v[bj];
                    }
                    stack.push(other);
                }
            }

            // Dantzig pricing
            let mut best = (-1e-12, usize::MAX, usize::MAX);
            for r in 0..m {
                let row = &cost[r * n..(r + 1) * n];
                for (c, &cc) in row.iter().enumerate() {
                    let red = cc - u[r] - v[c];
                    if red < best.0 {
                        best = (red, r, c);
                    }
                }
            }
            if best.1 == usize::MAX {
                break;
            }
            let (ei, ej) = (best.1, best.2);

            // cycle: tree path between row ei and column ej
            let (mut p, mut q) = (ei, m + ej);
            let mut from_row: Vec<usize> = Vec::new();
            let mut from_col: Vec<usize> = Vec::new();
            while p != q {
                if depth[p] >= depth[q] {
                    from_row.push(parent_edge[p]);
                    p = parent[p];
                } else {
                    from_col.push(parent_edge[q]);
                    q = parent[q];
                }
            }
            // walk from the column end: the edge at ej loses flow, signs then alternate
            let path: Vec<usize> = from_col.iter().copied().chain(from_row.iter().rev().copied()).collect();
            let mut theta = f64::INFINITY;
            let mut leave = usize::MAX;
            for (k, &e) in path.iter().enumerate() {
                if k % 2 == 0 && basis[e].2 < theta {
                    theta = basis[e].2;
                    leave = e;
                }
            }
            for (k, &e) in path.iter().enumerate() {
                if k % 2 == 0 {
                    basis[e].2 -= theta;
                } else {
                    basis[e].2 += theta;
                }
            }
            basis[leave] = (ei, ej, theta);
        }
        basis.iter().map(|&(i, j, x)| cost[i * n + j] * x).sum()
    }
}

/// The measure `Σ_j w_j ev_{λ_j}` at `λ_j = 2πj/m`, `j = 1..m`.
pub fn roots_of_unity_measure(weights: &[f64]) -> Result<CircleMeasure> {
    let m = weights.len();
    CircleMeasure::atomic(
        weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (wrap_angle(2.0 * PI * (i + 1) as f64 / m as f64), w))
            .collect(),
    )
}
