//! Local Outlier Factor scoring and contamination-based filtering.
//!
//! The chain is: featurize each image (area-averaged luminance, standardized
//! per dimension), build exact k-NN neighbor sets over Euclidean distance,
//! then score every sample with the density ratio
//! `LOF(p) = mean_{t in N_k(p)} LRD_t / LRD_p` where
//! `LRD_p = 1 / mean_{s in N_k(p)} reach_dist_k(p, s)` and
//! `reach_dist_k(p, s) = max(k_distance(s), d(p, s))`.
//!
//! Neighbor sets include every point tied at the k-distance boundary, so
//! `|N_k(p)| >= k`. Brute-force O(n^2) distances keep the computation exact
//! and order-independent; at corpus scale (a few thousand images) an index
//! would only be an optimization.

use image::GrayImage;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum OutlierError {
    #[error("need at least k + 1 = {} points, got {n}", k + 1)]
    TooFewPoints { n: usize, k: usize },
    #[error("k must be >= 1")]
    ZeroK,
    #[error("feature vector '{id}' has length {len}, expected {expected}")]
    DimensionMismatch {
        id: String,
        len: usize,
        expected: usize,
    },
    #[error("non-finite feature value in '{id}' at dimension {dim}")]
    NonFiniteFeature { id: String, dim: usize },
    #[error("unknown point index {index} (dataset has {n} points)")]
    UnknownId { index: usize, n: usize },
    #[error("contamination must be in [0, 1), got {0}")]
    InvalidContamination(f64),
    #[error("empty image")]
    EmptyImage,
    #[error("resample side must be >= 2, got {0}")]
    SideTooSmall(usize),
    #[error("score/id lists must have equal lengths ({ids} ids, {scores} scores)")]
    ScoreLengthMismatch { ids: usize, scores: usize },
}

/// Fixed-length numeric descriptor of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    pub sample_id: String,
    values: Vec<T>,
}

impl<T: Real> FeatureVector<T> {
    pub fn new(sample_id: impl Into<String>, values: Vec<T>) -> Result<Self, OutlierError> {
        let sample_id = sample_id.into();
        if let Some(dim) = values.iter().position(|v| !v.is_finite()) {
            return Err(OutlierError::NonFiniteFeature {
                id: sample_id,
                dim,
            });
        }
        Ok(Self { sample_id, values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Neighbors of one point, ordered by non-decreasing distance.
///
/// `k_distance` is the distance to the k-th nearest other point; the
/// neighbor list carries every point at distance `<= k_distance`.
#[derive(Debug, Clone)]
pub struct NeighborSet<T> {
    neighbors: Vec<(usize, T)>,
    k_distance: T,
}

impl<T: Real> NeighborSet<T> {
    pub fn neighbors(&self) -> &[(usize, T)] {
        &self.neighbors
    }

    pub fn k_distance(&self) -> T {
        self.k_distance
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

/// Exact k-NN structure over one dataset; the substrate for LOF scoring.
#[derive(Debug, Clone)]
pub struct KnnGraph<T> {
    ids: Vec<String>,
    points: Vec<Vec<T>>,
    sets: Vec<NeighborSet<T>>,
    k: usize,
}

fn euclidean<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |acc, d| acc + d)
        .sqrt()
}

/// Build neighbor sets for every point. Requires `n >= k + 1` so that each
/// point has k distinct other points to reach.
pub fn knn<T: Real>(points: &[FeatureVector<T>], k: usize) -> Result<KnnGraph<T>, OutlierError> {
    if k == 0 {
        return Err(OutlierError::ZeroK);
    }
    let n = points.len();
    if n <= k {
        return Err(OutlierError::TooFewPoints { n, k });
    }
    let dim = points[0].len();
    for p in points {
        if p.len() != dim {
            return Err(OutlierError::DimensionMismatch {
                id: p.sample_id.clone(),
                len: p.len(),
                expected: dim,
            });
        }
    }

    let mut sets = Vec::with_capacity(n);
    for i in 0..n {
        let mut dists: Vec<(usize, T)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (j, euclidean(points[i].values(), points[j].values())))
            .collect();
        dists.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .expect("distances are finite")
                .then(a.0.cmp(&b.0))
        });
        let k_distance = dists[k - 1].1;
        let cut = dists.partition_point(|&(_, d)| d <= k_distance);
        dists.truncate(cut);
        sets.push(NeighborSet {
            neighbors: dists,
            k_distance,
        });
    }

    Ok(KnnGraph {
        ids: points.iter().map(|p| p.sample_id.clone()).collect(),
        points: points.iter().map(|p| p.values.clone()).collect(),
        sets,
        k,
    })
}

impl<T: Real> KnnGraph<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sample_id(&self, index: usize) -> Result<&str, OutlierError> {
        self.ids
            .get(index)
            .map(String::as_str)
            .ok_or(OutlierError::UnknownId {
                index,
                n: self.len(),
            })
    }

    pub fn neighbor_set(&self, index: usize) -> Result<&NeighborSet<T>, OutlierError> {
        self.sets.get(index).ok_or(OutlierError::UnknownId {
            index,
            n: self.len(),
        })
    }

    fn check(&self, index: usize) -> Result<(), OutlierError> {
        if index >= self.len() {
            return Err(OutlierError::UnknownId {
                index,
                n: self.len(),
            });
        }
        Ok(())
    }

    pub fn distance(&self, p: usize, s: usize) -> Result<T, OutlierError> {
        self.check(p)?;
        self.check(s)?;
        Ok(euclidean(&self.points[p], &self.points[s]))
    }

    /// Reachability distance `max(k_distance(s), d(p, s))`.
    pub fn reach_dist(&self, p: usize, s: usize) -> Result<T, OutlierError> {
        let d = self.distance(p, s)?;
        Ok(self.sets[s].k_distance.max(d))
    }

    /// Local reachability density: inverse of the mean reachability distance
    /// from `p` to its neighbor set. The mean is clamped below at 1e-12, so
    /// exact duplicates score a finite density of 1e12.
    pub fn lrd(&self, p: usize) -> Result<T, OutlierError> {
        self.check(p)?;
        let set = &self.sets[p];
        let mut sum = T::zero();
        for &(s, d) in &set.neighbors {
            sum = sum + self.sets[s].k_distance.max(d);
        }
        let mean = sum / T::from_usize_lossy(set.len());
        Ok(T::one() / mean.max(T::from_f64_lossy(1e-12)))
    }

    /// LOF score of every point, in input order.
    pub fn lof_scores(&self) -> Vec<T> {
        let lrds: Vec<T> = (0..self.len())
            .map(|p| self.lrd(p).expect("index in range"))
            .collect();
        (0..self.len())
            .map(|p| {
                let set = &self.sets[p];
                let sum: T = set.neighbors.iter().map(|&(t, _)| lrds[t]).sum();
                sum / T::from_usize_lossy(set.len()) / lrds[p]
            })
            .collect()
    }

    /// Per-sample LOF and LRD, in input order.
    pub fn sample_scores(&self) -> Vec<SampleScore<T>> {
        let lofs = self.lof_scores();
        (0..self.len())
            .map(|p| SampleScore {
                sample_id: self.ids[p].clone(),
                lof: lofs[p],
                lrd: self.lrd(p).expect("index in range"),
            })
            .collect()
    }
}

/// Convenience wrapper: neighbor sets plus scores in one call.
pub fn lof_scores<T: Real>(
    points: &[FeatureVector<T>],
    k: usize,
) -> Result<Vec<SampleScore<T>>, OutlierError> {
    Ok(knn(points, k)?.sample_scores())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleScore<T> {
    pub sample_id: String,
    pub lof: T,
    pub lrd: T,
}

/// Scores plus the kept/removed partition at a contamination rate.
#[derive(Debug, Clone)]
pub struct LofResult<T> {
    /// Per-sample scores in input order.
    pub samples: Vec<SampleScore<T>>,
    /// Sample ids retained, ascending.
    pub kept_ids: Vec<String>,
    /// Sample ids removed, ascending.
    pub removed_ids: Vec<String>,
}

/// Remove the `floor(contamination * n)` highest-scoring samples. Ties at
/// the cut are broken by ascending sample id, which makes the partition
/// deterministic under input shuffling.
pub fn filter_outliers<T: Real>(
    samples: Vec<SampleScore<T>>,
    contamination: f64,
) -> Result<LofResult<T>, OutlierError> {
    if !(0.0..1.0).contains(&contamination) {
        return Err(OutlierError::InvalidContamination(contamination));
    }
    let n = samples.len();
    let remove = (contamination * n as f64).floor() as usize;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        samples[b]
            .lof
            .partial_cmp(&samples[a].lof)
            .expect("scores are finite")
            .then(samples[a].sample_id.cmp(&samples[b].sample_id))
    });

    let mut removed_ids: Vec<String> = order[..remove]
        .iter()
        .map(|&i| samples[i].sample_id.clone())
        .collect();
    let mut kept_ids: Vec<String> = order[remove..]
        .iter()
        .map(|&i| samples[i].sample_id.clone())
        .collect();
    removed_ids.sort();
    kept_ids.sort();

    Ok(LofResult {
        samples,
        kept_ids,
        removed_ids,
    })
}

/// Area-averaged luminance resample of a grayscale image to `side x side`,
/// flattened row-major. Each output cell is the exact mean intensity of the
/// image region it covers, with fractional pixel coverage weighted by area.
pub fn luminance_features<T: Real>(gray: &GrayImage, side: usize) -> Result<Vec<T>, OutlierError> {
    if side < 2 {
        return Err(OutlierError::SideTooSmall(side));
    }
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    if w == 0 || h == 0 {
        return Err(OutlierError::EmptyImage);
    }

    let sx = w as f64 / side as f64;
    let sy = h as f64 / side as f64;
    let mut out = Vec::with_capacity(side * side);
    for r in 0..side {
        let y0 = r as f64 * sy;
        let y1 = (r + 1) as f64 * sy;
        for c in 0..side {
            let x0 = c as f64 * sx;
            let x1 = (c + 1) as f64 * sx;
            let mut acc = 0.0f64;
            let py_end = (y1.ceil() as usize).min(h);
            let px_end = (x1.ceil() as usize).min(w);
            for py in y0.floor() as usize..py_end {
                let wy = (y1.min((py + 1) as f64) - y0.max(py as f64)).max(0.0);
                if wy == 0.0 {
                    continue;
                }
                for px in x0.floor() as usize..px_end {
                    let wx = (x1.min((px + 1) as f64) - x0.max(px as f64)).max(0.0);
                    if wx == 0.0 {
                        continue;
                    }
                    acc += wx * wy * gray.get_pixel(px as u32, py as u32).0[0] as f64;
                }
            }
            out.push(T::from_f64_lossy(acc / (sx * sy)));
        }
    }
    Ok(out)
}

/// Standardize each dimension across the dataset to mean 0, stdev 1
/// (population stdev). Dimensions with stdev below 1e-12 are zeroed.
pub fn standardize<T: Real>(vectors: &mut [FeatureVector<T>]) -> Result<(), OutlierError> {
    if vectors.is_empty() {
        return Ok(());
    }
    let dim = vectors[0].len();
    for v in vectors.iter() {
        if v.len() != dim {
            return Err(OutlierError::DimensionMismatch {
                id: v.sample_id.clone(),
                len: v.len(),
                expected: dim,
            });
        }
    }
    let n = T::from_usize_lossy(vectors.len());
    let floor = T::from_f64_lossy(1e-12);
    for d in 0..dim {
        let mean = vectors.iter().map(|v| v.values[d]).sum::<T>() / n;
        let var = vectors
            .iter()
            .map(|v| (v.values[d] - mean) * (v.values[d] - mean))
            .sum::<T>()
            / n;
        let std = var.sqrt();
        for v in vectors.iter_mut() {
            v.values[d] = if std < floor {
                T::zero()
            } else {
                (v.values[d] - mean) / std
            };
        }
    }
    Ok(())
}
