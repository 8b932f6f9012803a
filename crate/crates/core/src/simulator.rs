//! Synthetic radio environment and benchmark harness.
//!
//! RSS is generated with a log-distance path-loss model plus Gaussian
//! noise. Every random draw comes from a ChaCha stream derived from the
//! configured seed, so a given [`SimConfig`] always produces the same
//! environment, the same walks and the same benchmark numbers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fingerprint::{
    build_radio_map, cmp_finite, Fingerprint, Position, RadioMap, RssVector, RSS_CEILING_DBM, RSS_FLOOR_DBM,
};
use crate::locator::{cross_validate, locate, LocateConfig};
use crate::pdr::{normalize_heading, PdrConfig, SensorSample, TrajectoryPoint};
use crate::scalar::Scalar;

/// Distances below this are treated as this, keeping the log finite.
pub const MIN_PATH_DISTANCE_M: f64 = 0.1;

pub const GRAVITY: f64 = 9.81;
pub const WALK_SAMPLE_RATE_HZ: f64 = 100.0;
pub const WALK_STEP_PERIOD_S: f64 = 0.5;
/// Standing time before the first and after the last step of a walk.
pub const WALK_IDLE_S: f64 = 0.5;

const SURVEY_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const WALK_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestPlacement {
    /// Uniformly random positions anywhere inside the area.
    #[default]
    Uniform,
    /// Uniformly random choice among the survey grid points.
    GridPoints,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    /// Width and height of the surveyed rectangle, meters. The grid starts at the origin.
    pub area: (T, T),
    pub grid_spacing: T,
    pub ap_positions: Vec<Position<T>>,
    pub tx_power_dbm_at_1m: T,
    pub path_loss_exponent: T,
    pub noise_sigma: T,
    pub samples_per_point: usize,
    pub test_samples: usize,
    pub test_placement: TestPlacement,
    pub seed: u64,
}

impl<T: Scalar> Default for SimConfig<T> {
    /// 20 m × 20 m, 1 m grid, four APs at the corners.
    fn default() -> Self {
        let p = |x: f64, y: f64| Position::from_finite(T::lit(x), T::lit(y));
        Self {
            area: (T::lit(20.0), T::lit(20.0)),
            grid_spacing: T::lit(1.0),
            ap_positions: vec![p(0.0, 0.0), p(20.0, 0.0), p(20.0, 20.0), p(0.0, 20.0)],
            tx_power_dbm_at_1m: T::lit(-40.0),
            path_loss_exponent: T::lit(2.5),
            noise_sigma: T::lit(2.0),
            samples_per_point: 5,
            test_samples: 1000,
            test_placement: TestPlacement::Uniform,
            seed: 42,
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    /// 18 × 10 grid points (180 reference points at 1 m) with five APs on
    /// the perimeter.
    pub fn field_b8() -> Self {
        let p = |x: f64, y: f64| Position::from_finite(T::lit(x), T::lit(y));
        Self {
            area: (T::lit(17.0), T::lit(9.0)),
            ap_positions: vec![p(0.0, 0.0), p(17.0, 0.0), p(17.0, 9.0), p(0.0, 9.0), p(8.5, 9.0)],
            ..Self::default()
        }
    }

    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Default => Self::default(),
            Preset::FieldB8 => Self::field_b8(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.area.0) || !positive(self.area.1) {
            return Err(Error::Config("area dimensions must be positive".into()));
        }
        if !positive(self.grid_spacing) {
            return Err(Error::Config("grid spacing must be positive".into()));
        }
        if self.ap_positions.is_empty() {
            return Err(Error::Config("at least one AP is required".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= T::zero()) {
            return Err(Error::Config("noise sigma must be non-negative".into()));
        }
        if !self.tx_power_dbm_at_1m.is_finite() || !self.path_loss_exponent.is_finite() {
            return Err(Error::NonFinite("path-loss parameters"));
        }
        if self.samples_per_point == 0 {
            return Err(Error::Config("samples per point must be positive".into()));
        }
        Ok(())
    }

    /// Grid positions `(i·spacing, j·spacing)` covering the area, ordered by x then y.
    pub fn grid_points(&self) -> Vec<Position<T>> {
        let (nx, ny) = (self.grid_len(self.area.0), self.grid_len(self.area.1));
        let mut points = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                points.push(Position::from_finite(
                    T::from_usize_lossy(i) * self.grid_spacing,
                    T::from_usize_lossy(j) * self.grid_spacing,
                ));
            }
        }
        points
    }

    fn grid_len(&self, extent: T) -> usize {
        let cells = (extent / self.grid_spacing + T::lit(1e-9)).floor();
        cells.to_usize().unwrap_or(0) + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Default,
    FieldB8,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Preset::Default),
            "field-b8" => Ok(Preset::FieldB8),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Default => "default",
            Preset::FieldB8 => "field-b8",
        })
    }
}

fn stream<T>(config: &SimConfig<T>, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    rng
}

fn draw_noise<T: Scalar>(rng: &mut ChaCha8Rng, sigma: T) -> T {
    let z: f64 = rng.sample(StandardNormal);
    sigma * T::lit(z)
}

/// Log-distance path loss: `P0 - 10·n·log10(max(d, 0.1 m)) + noise`,
/// clamped to the valid RSS range.
pub fn synth_rss<T: Scalar>(ap: &Position<T>, point: &Position<T>, config: &SimConfig<T>, noise: T) -> T {
    let distance = ap.distance_to(point).max(T::lit(MIN_PATH_DISTANCE_M));
    let rss = config.tx_power_dbm_at_1m - T::lit(10.0) * config.path_loss_exponent * distance.log10() + noise;
    rss.max(T::lit(RSS_FLOOR_DBM)).min(T::lit(RSS_CEILING_DBM))
}

fn noisy_fingerprint<T: Scalar>(point: Position<T>, config: &SimConfig<T>, rng: &mut ChaCha8Rng) -> Fingerprint<T> {
    let rss = config
        .ap_positions
        .iter()
        .map(|ap| synth_rss(ap, &point, config, draw_noise(rng, config.noise_sigma)))
        .collect();
    Fingerprint::new(
        point,
        RssVector::new(rss).expect("synthetic rss is finite and non-empty"),
    )
}

/// A generated radio environment.
#[derive(Debug, Clone)]
pub struct Environment<T> {
    pub map: RadioMap<T>,
    /// Raw survey readings the map was averaged from.
    pub survey: Vec<Fingerprint<T>>,
    /// Ground-truth test queries.
    pub test: Vec<Fingerprint<T>>,
}

/// `samples_per_point` noisy readings at every grid point.
pub fn generate_survey<T: Scalar>(config: &SimConfig<T>) -> Result<Vec<Fingerprint<T>>> {
    config.validate()?;
    let mut rng = stream(config, SURVEY_STREAM);
    let grid = config.grid_points();
    let mut survey = Vec::with_capacity(grid.len() * config.samples_per_point);
    for point in grid {
        for _ in 0..config.samples_per_point {
            survey.push(noisy_fingerprint(point, config, &mut rng));
        }
    }
    Ok(survey)
}

pub fn generate_environment<T: Scalar>(config: &SimConfig<T>) -> Result<Environment<T>> {
    let survey = generate_survey(config)?;
    let map = build_radio_map(&survey, config.ap_positions.len(), Some(config.grid_spacing))?;

    let mut rng = stream(config, TEST_STREAM);
    let grid = config.grid_points();
    let (w, h) = (config.area.0.to_f64_lossy(), config.area.1.to_f64_lossy());
    let test = (0..config.test_samples)
        .map(|_| {
            let point = match config.test_placement {
                TestPlacement::Uniform => {
                    Position::from_finite(T::lit(rng.random_range(0.0..=w)), T::lit(rng.random_range(0.0..=h)))
                }
                TestPlacement::GridPoints => grid[rng.random_range(0..grid.len())],
            };
            noisy_fingerprint(point, config, &mut rng)
        })
        .collect();

    Ok(Environment { map, survey, test })
}

/// Distribution of positioning errors, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorStats<T> {
    /// Ascending.
    pub errors: Vec<T>,
    pub mean: T,
    pub median: T,
    /// Nearest-rank 90th percentile.
    pub p90: T,
}

impl<T: Scalar> ErrorStats<T> {
    pub fn from_errors(mut errors: Vec<T>) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::EmptyInput("error statistics of an empty list"));
        }
        if errors.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("positioning errors"));
        }
        errors.sort_by(|a, b| cmp_finite(*a, *b));
        let n = errors.len();
        let mean = errors.iter().copied().sum::<T>() / T::from_usize_lossy(n);
        let median = if n % 2 == 1 {
            errors[n / 2]
        } else {
            (errors[n / 2 - 1] + errors[n / 2]) / T::lit(2.0)
        };
        let p90 = errors[nearest_rank(n, 0.9)];
        Ok(Self {
            errors,
            mean,
            median,
            p90,
        })
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// Fraction of errors at or below `threshold`.
    pub fn cdf_at(&self, threshold: T) -> T {
        let below = self.errors.partition_point(|e| *e <= threshold);
        T::from_usize_lossy(below) / T::from_usize_lossy(self.errors.len())
    }

    pub fn cdf(&self) -> Vec<(T, T)> {
        sorted_cdf(&self.errors)
    }
}

fn nearest_rank(n: usize, p: f64) -> usize {
    ((p * n as f64).ceil() as usize).clamp(1, n) - 1
}

/// `(e_(i), i/n)` for the sorted errors; the last probability is exactly 1.
pub fn empirical_cdf<T: Scalar>(errors: &[T]) -> Result<Vec<(T, T)>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput("cdf of an empty list"));
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFinite("cdf input"));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(|a, b| cmp_finite(*a, *b));
    Ok(sorted_cdf(&sorted))
}

fn sorted_cdf<T: Scalar>(sorted: &[T]) -> Vec<(T, T)> {
    let n = T::from_usize_lossy(sorted.len());
    sorted
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, T::from_usize_lossy(i + 1) / n))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkResult<T> {
    pub config: LocateConfig<T>,
    pub stats: ErrorStats<T>,
}

/// Generates the environment for `config` and benchmarks every algorithm
/// against the same test queries.
pub fn run_benchmark<T: Scalar>(
    config: &SimConfig<T>,
    algorithms: &[LocateConfig<T>],
) -> Result<Vec<BenchmarkResult<T>>> {
    let env = generate_environment(config)?;
    benchmark_environment(&env, algorithms)
}

pub fn benchmark_environment<T: Scalar>(
    env: &Environment<T>,
    algorithms: &[LocateConfig<T>],
) -> Result<Vec<BenchmarkResult<T>>> {
    if env.test.is_empty() {
        return Err(Error::EmptyInput("benchmark without test samples"));
    }
    algorithms
        .iter()
        .map(|config| {
            let errors = env
                .test
                .par_iter()
                .map(|q| Ok(locate(&env.map, &q.rss, config)?.distance_to(&q.position)))
                .collect::<Result<Vec<T>>>()?;
            Ok(BenchmarkResult {
                config: *config,
                stats: ErrorStats::from_errors(errors)?,
            })
        })
        .collect()
}

/// NN, KNN(k) and WKNN(k).
pub fn standard_algorithms<T: Scalar>(k: usize) -> Result<Vec<LocateConfig<T>>> {
    Ok(vec![LocateConfig::nn(), LocateConfig::knn(k)?, LocateConfig::wknn(k)?])
}

/// A synthesized walk along a waypoint path.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk<T> {
    pub trace: Vec<SensorSample<T>>,
    /// One noisy reading per waypoint.
    pub waypoint_rss: Vec<RssVector<T>>,
    /// Time at which the walker passes each waypoint.
    pub waypoint_times: Vec<T>,
    /// Heading of each synthesized step.
    pub step_headings: Vec<T>,
}

/// Walks `true_path` at one step per `step_length` of arc length.
///
/// Each step is a half-sine burst in vertical acceleration peaking above
/// the detection threshold, sampled at 100 Hz; the heading during a step
/// is the bearing of the segment containing the step's midpoint. The
/// trace is noiseless, so [`detect_steps`] recovers every step.
///
/// [`detect_steps`]: crate::pdr::detect_steps
pub fn simulate_walk<T: Scalar>(
    true_path: &[Position<T>],
    config: &SimConfig<T>,
    pdr_config: &PdrConfig<T>,
) -> Result<Walk<T>> {
    config.validate()?;
    pdr_config.validate()?;
    if true_path.len() < 2 {
        return Err(Error::Geometry("a walk needs at least two waypoints".into()));
    }
    if let Some(i) = true_path.windows(2).position(|w| w[0] == w[1]) {
        return Err(Error::Geometry(format!("waypoints {i} and {} coincide", i + 1)));
    }

    let d = pdr_config.step_length.to_f64_lossy();
    let path: Vec<(f64, f64)> = true_path
        .iter()
        .map(|p| (p.x().to_f64_lossy(), p.y().to_f64_lossy()))
        .collect();
    let seg_len: Vec<f64> = path
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .collect();
    let seg_heading: Vec<f64> = path
        .windows(2)
        .map(|w| normalize_heading((w[1].1 - w[0].1).atan2(w[1].0 - w[0].0)))
        .collect();
    let mut arc_at = vec![0.0];
    for len in &seg_len {
        arc_at.push(arc_at.last().unwrap() + len);
    }
    let total = *arc_at.last().unwrap();
    let step_count = (total / d + 1e-9).floor() as usize;

    let step_headings: Vec<f64> = (0..step_count)
        .map(|s| {
            let mid = (s as f64 + 0.5) * d;
            let seg = arc_at[1..].partition_point(|&a| a <= mid).min(seg_len.len() - 1);
            seg_heading[seg]
        })
        .collect();

    let rate = WALK_SAMPLE_RATE_HZ;
    let period = WALK_STEP_PERIOD_S.max(2.0 * pdr_config.min_step_interval.to_f64_lossy());
    let per_step = (period * rate).round() as usize;
    let idle = (WALK_IDLE_S * rate).round() as usize;
    let amplitude = (pdr_config.accel_threshold.to_f64_lossy() + 2.0 - GRAVITY).max(2.0);
    let total_samples = 2 * idle + step_count * per_step + 1;

    let trace = (0..total_samples)
        .map(|i| {
            let t = i as f64 / rate;
            let (magnitude, heading) = if i < idle || i >= idle + step_count * per_step {
                let heading = if i < idle {
                    step_headings.first()
                } else {
                    step_headings.last()
                };
                (GRAVITY, heading.copied().unwrap_or(seg_heading[0]))
            } else {
                let (s, j) = ((i - idle) / per_step, (i - idle) % per_step);
                let phase = std::f64::consts::PI * j as f64 / per_step as f64;
                (GRAVITY + amplitude * phase.sin(), step_headings[s])
            };
            SensorSample::new(T::lit(t), [T::zero(), T::zero(), T::lit(magnitude)], T::lit(heading))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = stream(config, WALK_STREAM);
    let waypoint_rss = true_path
        .iter()
        .map(|p| noisy_fingerprint(*p, config, &mut rng).rss)
        .collect();
    let step_time = period;
    let waypoint_times = arc_at.iter().map(|a| T::lit(WALK_IDLE_S + a / d * step_time)).collect();

    Ok(Walk {
        trace,
        waypoint_rss,
        waypoint_times,
        step_headings: step_headings.into_iter().map(T::lit).collect(),
    })
}

/// One algorithm's fixes at every waypoint of a walk.
pub type WaypointFixes<T> = (LocateConfig<T>, Vec<TrajectoryPoint<T>>);

/// Fingerprint fixes at each waypoint of a walk, per algorithm.
pub fn locate_waypoints<T: Scalar>(
    map: &RadioMap<T>,
    walk: &Walk<T>,
    algorithms: &[LocateConfig<T>],
) -> Result<Vec<WaypointFixes<T>>> {
    algorithms
        .iter()
        .map(|config| {
            let points = walk
                .waypoint_rss
                .iter()
                .zip(&walk.waypoint_times)
                .map(|(rss, &t)| {
                    Ok(TrajectoryPoint {
                        t,
                        position: locate(map, rss, config)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((*config, points))
        })
        .collect()
}

/// A closed loop inset from the area border, densified to one waypoint per
/// grid spacing.
pub fn demo_path<T: Scalar>(config: &SimConfig<T>) -> Vec<Position<T>> {
    let (w, h) = (config.area.0.to_f64_lossy(), config.area.1.to_f64_lossy());
    let spacing = config.grid_spacing.to_f64_lossy();
    let (x0, y0, x1, y1) = (0.2 * w, 0.2 * h, 0.8 * w, 0.8 * h);
    let corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)];
    let mut path = vec![corners[0]];
    for leg in corners.windows(2) {
        let (a, b) = (leg[0], leg[1]);
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let pieces = ((len / spacing).ceil() as usize).max(1);
        for i in 1..=pieces {
            let f = i as f64 / pieces as f64;
            path.push((a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1)));
        }
    }
    path.into_iter()
        .map(|(x, y)| Position::from_finite(T::lit(x), T::lit(y)))
        .collect()
}

/// WKNN cross-validation score for each `k` on the survey of `config`.
pub fn sweep_k<T: Scalar>(
    config: &SimConfig<T>,
    k_values: &[usize],
    folds: usize,
    radius: T,
    seed: u64,
) -> Result<Vec<(usize, T)>> {
    let survey = generate_survey(config)?;
    k_values
        .iter()
        .map(|&k| {
            Ok((
                k,
                cross_validate(&survey, &LocateConfig::wknn(k)?, folds, radius, seed)?,
            ))
        })
        .collect()
}

/// WKNN(k) cross-validation score as a function of survey repetitions per point.
pub fn sweep_samples_per_point<T: Scalar>(
    config: &SimConfig<T>,
    counts: &[usize],
    k: usize,
    folds: usize,
    radius: T,
    seed: u64,
) -> Result<Vec<(usize, T)>> {
    let locate_config = LocateConfig::wknn(k)?;
    counts
        .iter()
        .map(|&n| {
            let cfg = SimConfig {
                samples_per_point: n,
                ..config.clone()
            };
            let survey = generate_survey(&cfg)?;
            Ok((n, cross_validate(&survey, &locate_config, folds, radius, seed)?))
        })
        .collect()
}

pub fn write_cdf_csv<T: Scalar, W: Write>(mut out: W, cdf: &[(T, T)]) -> Result<()> {
    writeln!(out, "error,probability")?;
    for (e, p) in cdf {
        writeln!(out, "{e},{p}")?;
    }
    Ok(())
}

pub fn write_trajectory_csv<T: Scalar, W: Write>(mut out: W, points: &[TrajectoryPoint<T>]) -> Result<()> {
    writeln!(out, "t,x,y")?;
    for p in points {
        writeln!(out, "{},{},{}", p.t, p.position.x(), p.position.y())?;
    }
    Ok(())
}

pub fn write_sweep_csv<T: Scalar, W: Write>(mut out: W, key: &str, rows: &[(usize, T)]) -> Result<()> {
    writeln!(out, "{key},score")?;
    for (k, s) in rows {
        writeln!(out, "{k},{s}")?;
    }
    Ok(())
}

pub fn write_stats_csv<T: Scalar, W: Write>(mut out: W, results: &[BenchmarkResult<T>]) -> Result<()> {
    writeln!(out, "algorithm,k,count,mean,median,p90")?;
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.config.algorithm,
            r.config.effective_k(),
            r.stats.len(),
            r.stats.mean,
            r.stats.median,
            r.stats.p90
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdr::detect_steps;

    fn pos(x: f64, y: f64) -> Position<f64> {
        Position::new(x, y).unwrap()
    }

    #[test]
    fn path_loss_examples() {
        let cfg = SimConfig::<f64>::default();
        assert_eq!(synth_rss(&pos(0.0, 0.0), &pos(1.0, 0.0), &cfg, 0.0), -40.0);
        assert!((synth_rss(&pos(0.0, 0.0), &pos(6.0, 8.0), &cfg, 0.0) + 65.0).abs() < 1e-12);
        // Clamped at the 0.1 m floor: -40 + 25 = -15.
        assert!((synth_rss(&pos(0.0, 0.0), &pos(0.0, 0.0), &cfg, 0.0) + 15.0).abs() < 1e-12);
        assert_eq!(synth_rss(&pos(0.0, 0.0), &pos(3.0, 0.0), &cfg, -500.0), -120.0);
    }

    #[test]
    fn default_grid_has_441_points() {
        let env = generate_environment(&SimConfig::<f64>::default()).unwrap();
        assert_eq!(env.map.len(), 441);
        assert_eq!(env.map.ap_count(), 4);
        assert_eq!(env.survey.len(), 441 * 5);
        assert_eq!(env.test.len(), 1000);
        assert_eq!(env.map.grid_spacing(), Some(1.0));
        let field = SimConfig::<f64>::field_b8();
        assert_eq!(field.grid_points().len(), 180);
        assert_eq!(field.ap_positions.len(), 5);
    }

    #[test]
    fn noiseless_map_equals_model() {
        let cfg = SimConfig {
            noise_sigma: 0.0,
            samples_per_point: 3,
            test_samples: 10,
            ..SimConfig::<f64>::default()
        };
        let env = generate_environment(&cfg).unwrap();
        for fp in env.map.points() {
            for (ap, &v) in cfg.ap_positions.iter().zip(fp.rss.iter()) {
                assert_eq!(v, synth_rss(ap, &fp.position, &cfg, 0.0));
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = SimConfig::<f64> {
            test_samples: 50,
            ..SimConfig::default()
        };
        let a = generate_environment(&cfg).unwrap();
        let b = generate_environment(&cfg).unwrap();
        assert_eq!(a.map, b.map);
        assert_eq!(a.test, b.test);
        let c = generate_environment(&cfg.clone().with_seed(43)).unwrap();
        assert_ne!(a.test, c.test);
    }

    #[test]
    fn test_queries_stay_inside_area() {
        let cfg = SimConfig::<f64>::field_b8();
        let env = generate_environment(&cfg).unwrap();
        assert!(env.test.iter().all(|q| {
            let p = q.position;
            (0.0..=17.0).contains(&p.x()) && (0.0..=9.0).contains(&p.y())
        }));
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(
            empirical_cdf(&[3.0, 1.0, 2.0]).unwrap(),
            vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]
        );
        assert_eq!(empirical_cdf(&[2.0, 2.0]).unwrap(), vec![(2.0, 0.5), (2.0, 1.0)]);
        assert!(empirical_cdf::<f64>(&[]).is_err());
    }

    #[test]
    fn error_stats_summary() {
        let s = ErrorStats::from_errors(vec![4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.errors, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.p90, 4.0);
        assert_eq!(s.cdf_at(2.0), 0.5);
        assert_eq!(s.cdf_at(0.5), 0.0);
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(ErrorStats::from_errors(ten).unwrap().p90, 9.0);
        assert!(ErrorStats::<f64>::from_errors(vec![]).is_err());
    }

    #[test]
    fn benchmark_single_algorithm() {
        let cfg = SimConfig::<f64> {
            test_samples: 100,
            ..SimConfig::default()
        };
        let results = run_benchmark(&cfg, &[LocateConfig::nn()]).unwrap();
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].stats.len(), 100);
    }

    #[test]
    fn straight_walk_has_ten_eastward_steps() {
        let cfg = SimConfig::<f64>::default();
        let walk = simulate_walk(&[pos(0.0, 0.0), pos(7.0, 0.0)], &cfg, &PdrConfig::default()).unwrap();
        assert_eq!(walk.step_headings, vec![0.0; 10]);
        let steps = detect_steps(&walk.trace, &PdrConfig::default());
        assert_eq!(steps.len(), 10);
        assert!(steps.iter().all(|s| s.heading == 0.0));
        assert_eq!(walk.waypoint_rss.len(), 2);
    }

    #[test]
    fn l_shaped_walk_turns_at_the_corner() {
        let cfg = SimConfig::<f64>::default();
        let pdr = PdrConfig::default();
        let walk = simulate_walk(&[pos(0.0, 0.0), pos(2.1, 0.0), pos(2.1, 2.1)], &cfg, &pdr).unwrap();
        let half_pi = std::f64::consts::FRAC_PI_2;
        assert_eq!(walk.step_headings.len(), 6);
        assert!(walk.step_headings[..3].iter().all(|&h| h == 0.0));
        assert!(walk.step_headings[3..].iter().all(|&h| (h - half_pi).abs() < 1e-12));
    }

    #[test]
    fn degenerate_walks_are_rejected() {
        let cfg = SimConfig::<f64>::default();
        let pdr = PdrConfig::default();
        assert!(matches!(
            simulate_walk(&[pos(1.0, 1.0)], &cfg, &pdr),
            Err(Error::Geometry(_))
        ));
        assert!(matches!(
            simulate_walk(&[pos(0.0, 0.0), pos(1.0, 1.0), pos(1.0, 1.0)], &cfg, &pdr),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn demo_path_is_closed_and_nondegenerate() {
        let cfg = SimConfig::<f64>::default();
        let path = demo_path(&cfg);
        assert_eq!(path.first(), path.last());
        assert!(path.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn sweep_single_k() {
        let cfg = SimConfig::<f64> {
            area: (6.0, 6.0),
            ..SimConfig::default()
        };
        let rows = sweep_k(&cfg, &[1], 5, 2.0, 3).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].0, 1);
        assert!((0.0..=1.0).contains(&rows[0].1));
    }

    #[test]
    fn csv_reports() {
        let mut buf = Vec::new();
        write_cdf_csv(&mut buf, &[(1.0, 0.5), (2.5, 1.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "error,probability\n1,0.5\n2.5,1\n");
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, "k", &[(1, 0.25)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,score\n1,0.25\n");
    }
}
