//! K-means with a selectable distance measure.
//!
//! Cosine mode is spherical K-means: centroids are means of unit-normalized
//! members, and any vector with norm below [`ZERO_NORM`] is treated as being
//! at distance exactly 1 from everything. All reductions run in point order so
//! results do not depend on the rayon thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::color::FeatureMatrix;
use crate::error::{Error, Result};

/// Norm below which a vector has no direction.
pub const ZERO_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Distance {
    #[default]
    Cosine,
    SqEuclidean,
}

impl Distance {
    #[inline]
    fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Distance::Cosine => cosine_unchecked(x, y),
            Distance::SqEuclidean => sq_euclidean_unchecked(x, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub distance: Distance,
    pub max_iter: usize,
    /// Convergence threshold on the largest Euclidean centroid displacement.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 3,
            distance: Distance::Cosine,
            max_iter: 100,
            tol: 1e-4,
            seed: 42,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// `k` centroid vectors of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    dim: usize,
    data: Vec<f64>,
}

impl Centroids {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let m = FeatureMatrix::from_rows(rows);
        Self {
            dim: m.dim(),
            data: m.as_flat().to_vec(),
        }
    }

    pub fn k(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    /// Largest Euclidean distance between corresponding rows.
    pub fn max_displacement(&self, other: &Centroids) -> f64 {
        self.rows()
            .zip(other.rows())
            .map(|(a, b)| sq_euclidean_unchecked(a, b).sqrt())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub labels: Vec<usize>,
    /// Sum over points of the configured distance to the assigned centroid.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub assignment: Assignment,
    pub centroids: Centroids,
    /// Number of centroid updates performed.
    pub iterations: usize,
    /// Objective of every assignment computed, the final one last.
    pub objective_trace: Vec<f64>,
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("vector dimensions {a} and {b}")));
    }
    if a == 0 {
        return Err(Error::DimensionMismatch("zero-dimensional vectors".into()));
    }
    Ok(())
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[inline]
fn cosine_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let nx = norm(x);
    let ny = norm(y);
    if nx < ZERO_NORM || ny < ZERO_NORM {
        return 1.0;
    }
    (1.0 - dot(x, y) / (nx * ny)).clamp(0.0, 2.0)
}

#[inline]
fn sq_euclidean_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `1 - cos(x, y)`, or exactly 1 when either vector has no direction.
pub fn cosine_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    Ok(cosine_unchecked(x, y))
}

pub fn sq_euclidean_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dims(x.len(), y.len())?;
    Ok(sq_euclidean_unchecked(x, y))
}

/// k-means++ seeding driven by a ChaCha8 stream seeded from `cfg.seed`.
///
/// Picks `k` distinct point indices. When every remaining point already sits
/// at distance zero from the chosen set, the lowest unchosen index is taken.
pub fn init_centroids(features: &FeatureMatrix, cfg: &KMeansConfig) -> Result<Centroids> {
    cfg.validate()?;
    let n = features.n();
    if n < cfg.k {
        return Err(Error::TooFewPoints { points: n, clusters: cfg.k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen = Vec::with_capacity(cfg.k);
    let mut taken = vec![false; n];

    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;

    let mut nearest: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| cfg.distance.eval(features.row(i), features.row(first)))
        .collect();

    while chosen.len() < cfg.k {
        let total: f64 = nearest
            .iter()
            .zip(&taken)
            .filter(|(_, &t)| !t)
            .map(|(d, _)| d)
            .sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last = None;
            for i in 0..n {
                if taken[i] || nearest[i] <= 0.0 {
                    continue;
                }
                acc += nearest[i];
                last = Some(i);
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the final partial sum
            pick.or(last).expect("positive total implies a candidate")
        } else {
            (0..n).find(|&i| !taken[i]).expect("n >= k")
        };
        chosen.push(pick);
        taken[pick] = true;
        let c = features.row(pick);
        nearest
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, d)| *d = d.min(cfg.distance.eval(features.row(i), c)));
    }

    let rows: Vec<&[f64]> = chosen.iter().map(|&i| features.row(i)).collect();
    Ok(Centroids::from_rows(&rows))
}

fn nearest_centroid(x: &[f64], centroids: &Centroids, distance: Distance) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = distance.eval(x, centroids.row(0));
    for j in 1..centroids.k() {
        let d = distance.eval(x, centroids.row(j));
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    (best, best_d)
}

/// Labels each point with its nearest centroid, ties going to the lowest
/// index.
pub fn assign(features: &FeatureMatrix, centroids: &Centroids, distance: Distance) -> Result<Assignment> {
    check_dims(features.dim(), centroids.dim())?;
    let pairs: Vec<(usize, f64)> = (0..features.n())
        .into_par_iter()
        .map(|i| nearest_centroid(features.row(i), centroids, distance))
        .collect();
    let objective = pairs.iter().map(|p| p.1).sum();
    Ok(Assignment {
        labels: pairs.into_iter().map(|p| p.0).collect(),
        objective,
    })
}

/// Recomputes centroids from an assignment.
///
/// Empty clusters are reseeded, in cluster order, to the not-yet-used point
/// lying farthest from its own cluster's new centroid. A cosine cluster whose
/// members all have zero norm gets the zero vector.
pub fn update(features: &FeatureMatrix, assignment: &Assignment, k: usize, distance: Distance) -> Centroids {
    let dim = features.dim();
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (x, &label) in features.rows().zip(&assignment.labels) {
        counts[label] += 1;
        let acc = &mut sums[label * dim..(label + 1) * dim];
        match distance {
            Distance::SqEuclidean => acc.iter_mut().zip(x).for_each(|(a, v)| *a += v),
            Distance::Cosine => {
                let nx = norm(x);
                if nx >= ZERO_NORM {
                    acc.iter_mut().zip(x).for_each(|(a, v)| *a += v / nx);
                }
            }
        }
    }
    for (j, &c) in counts.iter().enumerate() {
        if c > 0 {
            sums[j * dim..(j + 1) * dim].iter_mut().for_each(|a| *a /= c as f64);
        }
    }

    let empty: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
    if !empty.is_empty() {
        let fit: Vec<f64> = features
            .rows()
            .zip(&assignment.labels)
            .map(|(x, &l)| distance.eval(x, &sums[l * dim..(l + 1) * dim]))
            .collect();
        let mut used = vec![false; features.n()];
        for j in empty {
            let mut worst: Option<usize> = None;
            for (i, &f) in fit.iter().enumerate() {
                if used[i] {
                    continue;
                }
                if worst.is_none_or(|w| f > fit[w]) {
                    worst = Some(i);
                }
            }
            if let Some(w) = worst {
                used[w] = true;
                sums[j * dim..(j + 1) * dim].copy_from_slice(features.row(w));
            }
        }
    }
    Centroids { dim, data: sums }
}

/// Lloyd iterations from k-means++ seeds.
///
/// Stops when the largest centroid displacement is at most `cfg.tol`, when an
/// assignment repeats the previous one (the update would then be a no-op), or
/// after `cfg.max_iter` updates. The returned assignment is recomputed from
/// the final centroids.
pub fn kmeans_run(features: &FeatureMatrix, cfg: &KMeansConfig) -> Result<KMeansResult> {
    let mut centroids = init_centroids(features, cfg)?;
    let mut previous: Option<Vec<usize>> = None;
    let mut iterations = 0;
    let mut objective_trace = Vec::new();
    while iterations < cfg.max_iter {
        let a = assign(features, &centroids, cfg.distance)?;
        objective_trace.push(a.objective);
        if previous.as_ref() == Some(&a.labels) {
            break;
        }
        let next = update(features, &a, cfg.k, cfg.distance);
        let moved = next.max_displacement(&centroids);
        centroids = next;
        iterations += 1;
        if moved <= cfg.tol {
            break;
        }
        previous = Some(a.labels);
    }
    let assignment = assign(features, &centroids, cfg.distance)?;
    objective_trace.push(assignment.objective);
    Ok(KMeansResult {
        assignment,
        centroids,
        iterations,
        objective_trace,
    })
}
