//! Online stage: match a query fingerprint against a [`RadioMap`].
//!
//! All matchers rank reference points by [`fingerprint_distance`]; ties are
//! broken by lexicographic `(x, y)` order of the reference position, so the
//! result never depends on the order in which the map was surveyed.
//!
//! [`fingerprint_distance`]: crate::fingerprint::fingerprint_distance

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fingerprint::{build_radio_map, cmp_finite, rms_distance, Fingerprint, Position, RadioMap};
use crate::scalar::Scalar;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Nn,
    Knn,
    Wknn,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Nn, Algorithm::Knn, Algorithm::Wknn];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nn => "nn",
            Algorithm::Knn => "knn",
            Algorithm::Wknn => "wknn",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nn" => Ok(Algorithm::Nn),
            "knn" => Ok(Algorithm::Knn),
            "wknn" => Ok(Algorithm::Wknn),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateConfig<T> {
    pub algorithm: Algorithm,
    pub k: usize,
    /// Lower bound applied to distances before taking reciprocals in WKNN.
    pub epsilon: T,
}

impl<T: Scalar> LocateConfig<T> {
    pub fn new(algorithm: Algorithm, k: usize) -> Result<Self> {
        let config = Self {
            algorithm,
            k,
            epsilon: T::lit(DEFAULT_EPSILON),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn nn() -> Self {
        Self {
            algorithm: Algorithm::Nn,
            k: 1,
            epsilon: T::lit(DEFAULT_EPSILON),
        }
    }

    pub fn knn(k: usize) -> Result<Self> {
        Self::new(Algorithm::Knn, k)
    }

    pub fn wknn(k: usize) -> Result<Self> {
        Self::new(Algorithm::Wknn, k)
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    /// Number of neighbors actually consulted (`1` for NN regardless of `k`).
    pub fn effective_k(&self) -> usize {
        match self.algorithm {
            Algorithm::Nn => 1,
            Algorithm::Knn | Algorithm::Wknn => self.k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > T::zero()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for LocateConfig<T> {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Wknn,
            k: DEFAULT_K,
            epsilon: T::lit(DEFAULT_EPSILON),
        }
    }
}

impl<T: Scalar> fmt::Display for LocateConfig<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.algorithm {
            Algorithm::Nn => write!(f, "nn"),
            alg => write!(f, "{alg}(k={})", self.k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub position: Position<T>,
    pub distance: T,
    /// Normalized WKNN weight; `None` for unweighted queries.
    pub weight: Option<T>,
}

/// The `k` reference points closest to `query`, ascending by distance.
pub fn nearest_neighbors<T: Scalar>(map: &RadioMap<T>, query: &[T], k: usize) -> Result<Vec<Neighbor<T>>> {
    check_query(map, query, k)?;
    let points = map.points();

    let mut ranked: Vec<(T, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, fp)| (rms_distance(query, &fp.rss), i))
        .collect();
    // Points are stored in lexicographic position order, so the index is
    // the tie-breaker.
    let by_rank = |a: &(T, usize), b: &(T, usize)| cmp_finite(a.0, b.0).then(a.1.cmp(&b.1));
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, by_rank);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(by_rank);

    Ok(ranked
        .into_iter()
        .map(|(distance, i)| Neighbor {
            position: points[i].position,
            distance,
            weight: None,
        })
        .collect())
}

fn check_query<T: Scalar>(map: &RadioMap<T>, query: &[T], k: usize) -> Result<()> {
    if map.is_empty() {
        return Err(Error::EmptyMap);
    }
    if query.len() != map.ap_count() {
        return Err(Error::Shape {
            expected: map.ap_count(),
            got: query.len(),
        });
    }
    if query.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("query"));
    }
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > map.len() {
        return Err(Error::Capacity {
            requested: k,
            available: map.len(),
        });
    }
    Ok(())
}

pub fn locate_nn<T: Scalar>(map: &RadioMap<T>, query: &[T]) -> Result<Position<T>> {
    Ok(nearest_neighbors(map, query, 1)?[0].position)
}

/// Unweighted centroid of the `k` nearest reference positions.
pub fn locate_knn<T: Scalar>(map: &RadioMap<T>, query: &[T], k: usize) -> Result<Position<T>> {
    let neighbors = nearest_neighbors(map, query, k)?;
    let n = T::from_usize_lossy(neighbors.len());
    let (sx, sy) = neighbors.iter().fold((T::zero(), T::zero()), |(sx, sy), nb| {
        (sx + nb.position.x(), sy + nb.position.y())
    });
    Ok(Position::from_finite(sx / n, sy / n))
}

/// Normalized reciprocal-distance weights. Each distance is raised to at
/// least `epsilon` first, so an exact match dominates instead of dividing
/// by zero.
pub fn wknn_weights<T: Scalar>(distances: &[T], epsilon: T) -> Result<Vec<T>> {
    if distances.is_empty() {
        return Err(Error::EmptyInput("wknn weights of an empty distance list"));
    }
    if !(epsilon.is_finite() && epsilon > T::zero()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if distances.iter().any(|d| !d.is_finite() || *d < T::zero()) {
        return Err(Error::Domain("distances must be finite and non-negative".into()));
    }
    let inverse: Vec<T> = distances.iter().map(|&d| d.max(epsilon).recip()).collect();
    let total: T = inverse.iter().copied().sum();
    Ok(inverse.into_iter().map(|w| w / total).collect())
}

/// The `k` nearest neighbors with their WKNN weights filled in.
pub fn weighted_neighbors<T: Scalar>(map: &RadioMap<T>, query: &[T], k: usize, epsilon: T) -> Result<Vec<Neighbor<T>>> {
    let mut neighbors = nearest_neighbors(map, query, k)?;
    let distances: Vec<T> = neighbors.iter().map(|n| n.distance).collect();
    for (nb, w) in neighbors.iter_mut().zip(wknn_weights(&distances, epsilon)?) {
        nb.weight = Some(w);
    }
    Ok(neighbors)
}

pub fn locate_wknn<T: Scalar>(map: &RadioMap<T>, query: &[T], k: usize) -> Result<Position<T>> {
    locate_wknn_with_epsilon(map, query, k, T::lit(DEFAULT_EPSILON))
}

pub fn locate_wknn_with_epsilon<T: Scalar>(
    map: &RadioMap<T>,
    query: &[T],
    k: usize,
    epsilon: T,
) -> Result<Position<T>> {
    let neighbors = weighted_neighbors(map, query, k, epsilon)?;
    let (x, y) = neighbors.iter().fold((T::zero(), T::zero()), |(x, y), nb| {
        let w = nb.weight.unwrap_or_else(T::zero);
        (x + w * nb.position.x(), y + w * nb.position.y())
    });
    Ok(Position::from_finite(x, y))
}

/// Dispatches on `config.algorithm`.
pub fn locate<T: Scalar>(map: &RadioMap<T>, query: &[T], config: &LocateConfig<T>) -> Result<Position<T>> {
    config.validate()?;
    match config.algorithm {
        Algorithm::Nn => locate_nn(map, query),
        Algorithm::Knn => locate_knn(map, query, config.k),
        Algorithm::Wknn => locate_wknn_with_epsilon(map, query, config.k, config.epsilon),
    }
}

/// K-fold hit rate: the fraction of held-out samples located within
/// `success_radius` of their true position by a map built from the other
/// folds.
///
/// Samples are shuffled with `seed` and dealt round-robin into `folds`
/// parts. Folds are evaluated in parallel; only hit counts are combined,
/// so the score is independent of scheduling.
pub fn cross_validate<T: Scalar>(
    samples: &[Fingerprint<T>],
    config: &LocateConfig<T>,
    folds: usize,
    success_radius: T,
    seed: u64,
) -> Result<T> {
    config.validate()?;
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    if !(success_radius.is_finite() && success_radius >= T::zero()) {
        return Err(Error::Config(format!(
            "success radius must be finite and non-negative, got {success_radius}"
        )));
    }
    if samples.len() < folds {
        return Err(Error::Capacity {
            requested: folds,
            available: samples.len(),
        });
    }
    let ap_count = samples[0].rss.len();

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let hits = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let mut training = Vec::with_capacity(samples.len());
            let mut held_out = Vec::with_capacity(samples.len() / folds + 1);
            for (slot, &i) in order.iter().enumerate() {
                if slot % folds == fold {
                    held_out.push(&samples[i]);
                } else {
                    training.push(samples[i].clone());
                }
            }
            let map = build_radio_map(&training, ap_count, None)?;
            if map.len() < config.effective_k() {
                return Err(Error::Capacity {
                    requested: config.effective_k(),
                    available: map.len(),
                });
            }
            let mut fold_hits = 0usize;
            for sample in held_out {
                let estimate = locate(&map, &sample.rss, config)?;
                if estimate.distance_to(&sample.position) <= success_radius {
                    fold_hits += 1;
                }
            }
            Ok(fold_hits)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();

    Ok(T::from_usize_lossy(hits) / T::from_usize_lossy(samples.len()))
}
