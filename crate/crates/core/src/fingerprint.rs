//! Fingerprint domain types and the offline stage: RSS arithmetic, the
//! RMS fingerprint distance, and radio-map construction from repeated
//! surveys of grid points.

use std::cmp::Ordering;
use std::ops::{Add, Deref, Sub};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lowest RSS a fingerprint may carry. Also the substitute for an AP that
/// was not heard at all.
pub const RSS_FLOOR_DBM: f64 = -120.0;
/// Highest RSS a fingerprint may carry.
pub const RSS_CEILING_DBM: f64 = 0.0;

/// Planar coordinate in meters. Both components are always finite.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position<T> {
    x: T,
    y: T,
}

impl<T: Scalar> Position<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("position"));
        }
        Ok(Self::from_finite(x, y))
    }

    /// Caller guarantees finiteness. Negative zero is folded into positive
    /// zero so that grouping by exact coordinates is well defined.
    pub(crate) fn from_finite(x: T, y: T) -> Self {
        Self {
            x: x + T::zero(),
            y: y + T::zero(),
        }
    }

    pub fn origin() -> Self {
        Self::from_finite(T::zero(), T::zero())
    }

    #[inline]
    pub fn x(&self) -> T {
        self.x
    }

    #[inline]
    pub fn y(&self) -> T {
        self.y
    }

    pub fn distance_to(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Lexicographic `(x, y)` order, used as the tie rule in neighbor search.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        cmp_finite(self.x, other.x).then_with(|| cmp_finite(self.y, other.y))
    }

    pub fn cast<U: Scalar>(&self) -> Position<U> {
        Position::from_finite(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Scalar> Add for Position<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::from_finite(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Position<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self::from_finite(self.x - rhs.x, self.y - rhs.y)
    }
}

#[inline]
pub(crate) fn cmp_finite<T: Scalar>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Ordered signal strengths in dBm, one per access point.
///
/// Values are clamped to `[RSS_FLOOR_DBM, RSS_CEILING_DBM]` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RssVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> RssVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("rss vector has no access points"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rss vector"));
        }
        let (floor, ceiling) = (T::lit(RSS_FLOOR_DBM), T::lit(RSS_CEILING_DBM));
        let values = values.into_iter().map(|v| clamp_rss(v, floor, ceiling)).collect();
        Ok(Self { values })
    }

    pub fn from_slice(values: &[T]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }
}

#[inline]
fn clamp_rss<T: Scalar>(v: T, floor: T, ceiling: T) -> T {
    // `+ 0` folds -0 into +0 so an exact 0 dBm reading round-trips as "0".
    v.max(floor).min(ceiling) + T::zero()
}

impl<T> Deref for RssVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.values
    }
}

/// A surveyed (or queried) position together with its RSS reading.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint<T> {
    pub position: Position<T>,
    pub rss: RssVector<T>,
}

impl<T: Scalar> Fingerprint<T> {
    pub fn new(position: Position<T>, rss: RssVector<T>) -> Self {
        Self { position, rss }
    }
}

/// The offline product: one averaged fingerprint per distinct reference
/// position. Immutable once built; points are kept in lexicographic
/// position order.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMap<T> {
    ap_count: usize,
    points: Vec<Fingerprint<T>>,
    grid_spacing: Option<T>,
}

impl<T: Scalar> RadioMap<T> {
    pub fn ap_count(&self) -> usize {
        self.ap_count
    }

    pub fn points(&self) -> &[Fingerprint<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Survey grid spacing in meters, when known.
    pub fn grid_spacing(&self) -> Option<T> {
        self.grid_spacing
    }

    pub fn get(&self, position: &Position<T>) -> Option<&RssVector<T>> {
        self.points
            .binary_search_by(|fp| fp.position.lex_cmp(position))
            .ok()
            .map(|i| &self.points[i].rss)
    }

    /// Axis-aligned `(min, max)` corners of the reference positions.
    pub fn bounding_box(&self) -> Option<(Position<T>, Position<T>)> {
        let first = self.points.first()?.position;
        let (mut lo, mut hi) = (first, first);
        for fp in &self.points[1..] {
            let p = fp.position;
            lo = Position::from_finite(lo.x.min(p.x), lo.y.min(p.y));
            hi = Position::from_finite(hi.x.max(p.x), hi.y.max(p.y));
        }
        Some((lo, hi))
    }
}

/// Converts received power in milliwatts to dBm.
pub fn rss_from_power<T: Scalar>(power_mw: T) -> Result<T> {
    if !power_mw.is_finite() {
        return Err(Error::NonFinite("power"));
    }
    if power_mw <= T::zero() {
        return Err(Error::Domain(format!("power must be positive, got {power_mw} mW")));
    }
    Ok(T::lit(10.0) * power_mw.log10())
}

/// RMS difference over AP dimensions:
/// `sqrt(sum_j (query_j - reference_j)^2 / n_ap)`.
pub fn fingerprint_distance<T: Scalar>(query: &[T], reference: &[T]) -> Result<T> {
    if query.is_empty() || reference.is_empty() {
        return Err(Error::EmptyInput("fingerprint distance of empty vectors"));
    }
    if query.len() != reference.len() {
        return Err(Error::Shape {
            expected: reference.len(),
            got: query.len(),
        });
    }
    Ok(rms_distance(query, reference))
}

/// Unchecked kernel behind [`fingerprint_distance`]; lengths must match and
/// be non-zero.
#[inline]
pub(crate) fn rms_distance<T: Scalar>(query: &[T], reference: &[T]) -> T {
    let sum_sq = query.iter().zip(reference).fold(T::zero(), |acc, (&q, &r)| {
        let d = q - r;
        acc + d * d
    });
    (sum_sq / T::from_usize_lossy(query.len())).sqrt()
}

/// Groups samples by exact position and averages each group per AP.
///
/// The mean is computed from the sorted values of each component, so the
/// result does not depend on the order of `samples`, and a group of
/// identical readings averages to that reading exactly.
pub fn build_radio_map<T: Scalar>(
    samples: &[Fingerprint<T>],
    ap_count: usize,
    grid_spacing: Option<T>,
) -> Result<RadioMap<T>> {
    if ap_count == 0 {
        return Err(Error::Config("ap_count must be positive".into()));
    }
    if let Some(spacing) = grid_spacing {
        if !(spacing.is_finite() && spacing > T::zero()) {
            return Err(Error::Config(format!("grid spacing must be positive, got {spacing}")));
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyMap);
    }
    if let Some(bad) = samples.iter().find(|s| s.rss.len() != ap_count) {
        return Err(Error::Shape {
            expected: ap_count,
            got: bad.rss.len(),
        });
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[a].position.lex_cmp(&samples[b].position));

    let mut points = Vec::new();
    let mut column = Vec::new();
    for group in order.chunk_by(|&a, &b| samples[a].position == samples[b].position) {
        let position = samples[group[0]].position;
        let mut averaged = Vec::with_capacity(ap_count);
        for ap in 0..ap_count {
            column.clear();
            column.extend(group.iter().map(|&i| samples[i].rss[ap]));
            averaged.push(sorted_mean(&mut column));
        }
        points.push(Fingerprint {
            position,
            rss: RssVector { values: averaged },
        });
    }

    Ok(RadioMap {
        ap_count,
        points,
        grid_spacing,
    })
}

fn sorted_mean<T: Scalar>(values: &mut [T]) -> T {
    values.sort_by(|a, b| cmp_finite(*a, *b));
    let base = values[0];
    let offset: T = values.iter().map(|&v| v - base).sum();
    base + offset / T::from_usize_lossy(values.len())
}
