//! Finite metric spaces and Gromov–Hausdorff upper bounds: Hausdorff
//! distance, distortion of correspondences and maps, covering radii and
//! ε-isometries. All quantities are exact maxima/minima over the samples.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Triangle-inequality slack accepted by [`FinitePointCloud::new`].
pub const TRIANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePointCloud {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
}

impl FinitePointCloud {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_triangle_tolerance(labels, dist, TRIANGLE_TOL)
    }

    /// As [`Self::new`] with a custom triangle slack, for distances that are
    /// themselves numerical estimates.
    pub fn with_triangle_tolerance(labels: Vec<String>, dist: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return domain("distance matrix must be square and match the labels");
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return domain(format!("nonzero self-distance at {i}"));
            }
            for j in 0..n {
                if !(dist[i][j] >= 0.0) || !dist[i][j].is_finite() {
                    return domain(format!("invalid distance at ({i}, {j})"));
                }
                if dist[i][j] != dist[j][i] {
                    return domain(format!("asymmetric distance at ({i}, {j})"));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + tol {
                        return domain(format!("triangle inequality fails at ({i}, {j}, {k})"));
                    }
                }
            }
        }
        Ok(Self { labels, dist })
    }

    /// Points `0..n` labelled by their index.
    pub fn from_matrix(dist: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..dist.len()).map(|i| i.to_string()).collect();
        Self::new(labels, dist)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().copied().fold(0.0, f64::max)
    }

    fn check_indices(&self, idx: &[usize], what: &str) -> Result<()> {
        if idx.is_empty() {
            return domain(format!("{what} must be nonempty"));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.len()) {
            return domain(format!("{what} index {bad} out of range"));
        }
        Ok(())
    }
}

/// A relation between two finite spaces covering both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    /// Checks that every index of `0..nx` and `0..ny` occurs.
    pub fn new(pairs: Vec<(usize, usize)>, nx: usize, ny: usize) -> Result<Self> {
        let mut seen_x = vec![false; nx];
        let mut seen_y = vec![false; ny];
        for &(x, y) in &pairs {
            if x >= nx || y >= ny {
                return domain(format!("pair ({x}, {y}) out of range"));
            }
            seen_x[x] = true;
            seen_y[y] = true;
        }
        if let Some(x) = seen_x.iter().position(|s| !s) {
            return domain(format!("correspondence is not total: {x} is unmatched"));
        }
        if let Some(y) = seen_y.iter().position(|s| !s) {
            return domain(format!("correspondence is not onto: {y} is unmatched"));
        }
        Ok(Self { pairs })
    }

    /// The graph `{(x, f(x))}` of a map; a correspondence iff `f` is onto.
    pub fn from_map(f: &[usize], ny: usize) -> Result<Self> {
        Self::new(f.iter().copied().enumerate().collect(), f.len(), ny)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// `max(sup_{a∈A} d(a, B), sup_{b∈B} d(b, A))`.
pub fn hausdorff_distance(a: &[usize], b: &[usize], ambient: &FinitePointCloud) -> Result<f64> {
    ambient.check_indices(a, "A")?;
    ambient.check_indices(b, "B")?;
    let directed = |from: &[usize], to: &[usize]| {
        from.iter()
            .map(|&p| to.iter().map(|&q| ambient.dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

/// `max |d_X(x, x') - d_Y(y, y')|` over pairs `(x, y), (x', y')` in `R`.
pub fn distortion_correspondence(r: &Correspondence, x: &FinitePointCloud, y: &FinitePointCloud) -> Result<f64> {
    // re-validate against these spaces
    let r = Correspondence::new(r.pairs.clone(), x.len(), y.len())?;
    let mut worst = 0.0f64;
    for (i, &(x1, y1)) in r.pairs.iter().enumerate() {
        for &(x2, y2) in &r.pairs[i + 1..] {
            worst = worst.max((x.dist(x1, x2) - y.dist(y1, y2)).abs());
        }
    }
    Ok(worst)
}

/// Upper bound `dis(R) / 2` on the Gromov–Hausdorff distance.
pub fn gh_upper_bound(r: &Correspondence, x: &FinitePointCloud, y: &FinitePointCloud) -> Result<f64> {
    Ok(distortion_correspondence(r, x, y)? / 2.0)
}

/// `max |d_Y(f(a), f(b)) - d_X(a, b)|`.
pub fn distortion_map(f: &[usize], x: &FinitePointCloud, y: &FinitePointCloud) -> Result<f64> {
    if f.len() != x.len() {
        return domain("map must be defined on every point");
    }
    if f.iter().any(|&v| v >= y.len()) {
        return domain("map value out of range");
    }
    let mut worst = 0.0f64;
    for a in 0..f.len() {
        for b in a + 1..f.len() {
            worst = worst.max((y.dist(f[a], f[b]) - x.dist(a, b)).abs());
        }
    }
    Ok(worst)
}

/// `max_x min_{s∈S} d(x, s)`; `S` is an ε-net iff this is at most ε.
pub fn covering_radius(s: &[usize], x: &FinitePointCloud) -> Result<f64> {
    x.check_indices(s, "S")?;
    Ok((0..x.len())
        .map(|p| s.iter().map(|&q| x.dist(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

/// `dis f <= ε` and `f(X)` is an ε-net of `Y`.
pub fn is_epsilon_isometry(f: &[usize], x: &FinitePointCloud, y: &FinitePointCloud, eps: f64) -> Result<bool> {
    if distortion_map(f, x, y)? > eps {
        return Ok(false);
    }
    let mut image = f.to_vec();
    image.sort_unstable();
    image.dedup();
    Ok(covering_radius(&image, y)? <= eps)
}
