//! Pedestrian dead reckoning: step detection on accelerometer magnitude,
//! a constant step length, and heading-projected position updates.
//!
//! Headings are azimuths in radians, counterclockwise from the +x axis.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::fingerprint::{Position, RadioMap};
use crate::locator::{locate_wknn_with_epsilon, LocateConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSample<T> {
    pub t: T,
    /// Specific force in m/s², device axes.
    pub accel: [T; 3],
    /// Normalized to `[0, 2π)`.
    pub heading: T,
}

impl<T: Scalar> SensorSample<T> {
    pub fn new(t: T, accel: [T; 3], heading: T) -> Result<Self> {
        if !t.is_finite() || !heading.is_finite() || accel.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("sensor sample"));
        }
        Ok(Self {
            t,
            accel,
            heading: normalize_heading(heading),
        })
    }

    pub fn accel_magnitude(&self) -> T {
        let [ax, ay, az] = self.accel;
        (ax * ax + ay * ay + az * az).sqrt()
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn normalize_heading<T: Scalar>(heading: T) -> T {
    let tau = T::TAU();
    let mut h = heading % tau;
    if h < T::zero() {
        h = h + tau;
    }
    if h >= tau {
        h = T::zero();
    }
    h + T::zero()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent<T> {
    pub t: T,
    pub heading: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdrConfig<T> {
    pub step_length: T,
    pub accel_threshold: T,
    pub min_step_interval: T,
}

impl<T: Scalar> Default for PdrConfig<T> {
    fn default() -> Self {
        Self {
            step_length: T::lit(0.7),
            accel_threshold: T::lit(10.8),
            min_step_interval: T::lit(0.3),
        }
    }
}

impl<T: Scalar> PdrConfig<T> {
    pub fn with_step_length(mut self, step_length: T) -> Self {
        self.step_length = step_length;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.step_length) {
            return Err(Error::Config(format!(
                "step length must be positive, got {}",
                self.step_length
            )));
        }
        if !positive(self.accel_threshold) {
            return Err(Error::Config(format!(
                "acceleration threshold must be positive, got {}",
                self.accel_threshold
            )));
        }
        if !positive(self.min_step_interval) {
            return Err(Error::Config(format!(
                "minimum step interval must be positive, got {}",
                self.min_step_interval
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub t: T,
    pub position: Position<T>,
}

/// Timestamped positions, strictly increasing in time. The first point is
/// the initial fix.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    points: Vec<TrajectoryPoint<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn points(&self) -> &[TrajectoryPoint<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> &TrajectoryPoint<T> {
        &self.points[0]
    }

    pub fn end(&self) -> &TrajectoryPoint<T> {
        &self.points[self.points.len() - 1]
    }

    pub fn positions(&self) -> impl Iterator<Item = Position<T>> + '_ {
        self.points.iter().map(|p| p.position)
    }
}

/// Threshold-gated peak detection on acceleration magnitude.
///
/// A step is a strict local maximum of the magnitude (a flat top counts
/// once, at its first sample) that exceeds `accel_threshold` and comes at
/// least `min_step_interval` after the previously emitted step. Peaks
/// inside that refractory window are dropped. The first and last samples
/// are never peaks. Timestamps must be non-decreasing.
pub fn detect_steps<T: Scalar>(trace: &[SensorSample<T>], config: &PdrConfig<T>) -> Vec<StepEvent<T>> {
    let magnitude: Vec<T> = trace.iter().map(SensorSample::accel_magnitude).collect();
    let n = magnitude.len();
    let mut steps: Vec<StepEvent<T>> = Vec::new();

    let mut i = 1;
    while i + 1 < n {
        let m = magnitude[i];
        if m <= magnitude[i - 1] {
            i += 1;
            continue;
        }
        let mut end = i;
        while end + 1 < n && magnitude[end + 1] == m {
            end += 1;
        }
        let is_peak = end + 1 < n && magnitude[end + 1] < m;
        if is_peak && m > config.accel_threshold {
            let t = trace[i].t;
            let clear = steps.last().is_none_or(|prev| t - prev.t >= config.min_step_interval);
            if clear {
                steps.push(StepEvent {
                    t,
                    heading: trace[i].heading,
                });
            }
        }
        i = end + 1;
    }
    steps
}

/// One dead-reckoning update: `(x + d cos α, y + d sin α)`.
pub fn pdr_step<T: Scalar>(current: Position<T>, step_length: T, heading: T) -> Position<T> {
    let (s, c) = heading.sin_cos();
    Position::from_finite(current.x() + step_length * c, current.y() + step_length * s)
}

/// Incremental dead-reckoning state.
///
/// Positions are reported as `origin + displacement`, where the
/// displacement is accumulated with [`pdr_step`] from zero. Translating
/// the origin therefore translates every reported position by the same
/// vector, independent of rounding in the accumulated path.
#[derive(Debug, Clone)]
pub struct PdrTracker<T> {
    origin: Position<T>,
    displacement: Position<T>,
    last_t: Option<T>,
}

impl<T: Scalar> PdrTracker<T> {
    pub fn new(origin: Position<T>, start_time: Option<T>) -> Self {
        Self {
            origin,
            displacement: Position::origin(),
            last_t: start_time,
        }
    }

    pub fn position(&self) -> Position<T> {
        self.origin + self.displacement
    }

    pub fn last_time(&self) -> Option<T> {
        self.last_t
    }

    pub fn step(&mut self, event: &StepEvent<T>, step_length: T) -> Result<TrajectoryPoint<T>> {
        if !event.t.is_finite() || !event.heading.is_finite() {
            return Err(Error::NonFinite("step event"));
        }
        if !(step_length.is_finite() && step_length >= T::zero()) {
            return Err(Error::Config(format!(
                "step length must be non-negative, got {step_length}"
            )));
        }
        if let Some(prev) = self.last_t {
            if event.t <= prev {
                return Err(Error::Ordering(format!(
                    "step at t={} does not follow t={prev}",
                    event.t
                )));
            }
        }
        self.displacement = pdr_step(self.displacement, step_length, event.heading);
        self.last_t = Some(event.t);
        Ok(TrajectoryPoint {
            t: event.t,
            position: self.position(),
        })
    }
}

/// Dead-reckons a trajectory from `initial_fix` at `start_time` through
/// each step in turn.
pub fn track<T: Scalar>(
    initial_fix: Position<T>,
    start_time: T,
    steps: &[StepEvent<T>],
    config: &PdrConfig<T>,
) -> Result<Trajectory<T>> {
    config.validate()?;
    if !start_time.is_finite() {
        return Err(Error::NonFinite("start time"));
    }
    let mut tracker = PdrTracker::new(initial_fix, Some(start_time));
    let mut points = Vec::with_capacity(steps.len() + 1);
    points.push(TrajectoryPoint {
        t: start_time,
        position: initial_fix,
    });
    for step in steps {
        points.push(tracker.step(step, config.step_length)?);
    }
    Ok(Trajectory { points })
}

/// WKNN fix from `initial_query`, then dead reckoning over the steps
/// detected in `trace`. The fix is stamped with the first sample's time,
/// or zero for an empty trace.
pub fn fused_track<T: Scalar>(
    map: &RadioMap<T>,
    initial_query: &[T],
    trace: &[SensorSample<T>],
    locate_config: &LocateConfig<T>,
    pdr_config: &PdrConfig<T>,
) -> Result<Trajectory<T>> {
    locate_config.validate()?;
    pdr_config.validate()?;
    let fix = locate_wknn_with_epsilon(map, initial_query, locate_config.k, locate_config.epsilon)?;
    let start_time = trace.first().map_or_else(T::zero, |s| s.t);
    let steps = detect_steps(trace, pdr_config);
    track(fix, start_time, &steps, pdr_config)
}

pub const TRACE_HEADER: [&str; 5] = ["t", "ax", "ay", "az", "heading"];

/// Reads a sensor trace CSV with header `t,ax,ay,az,heading`.
pub fn read_trace<T: Scalar, R: Read>(source: R) -> Result<Vec<SensorSample<T>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let mut rows = reader.records();
    let header = rows.next().transpose()?.ok_or_else(|| Error::Schema {
        line: 1,
        message: "missing header".into(),
    })?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(Error::Schema {
            line: 1,
            message: format!("expected header `{}`", TRACE_HEADER.join(",")),
        });
    }

    let mut trace: Vec<SensorSample<T>> = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != TRACE_HEADER.len() {
            return Err(Error::Schema {
                line,
                message: format!("expected {} columns, found {}", TRACE_HEADER.len(), row.len()),
            });
        }
        let mut v = [T::zero(); 5];
        for (column, (cell, slot)) in row.iter().zip(v.iter_mut()).enumerate() {
            if cell.is_empty() {
                return Err(Error::NullViolation {
                    line,
                    column: TRACE_HEADER[column].into(),
                });
            }
            *slot = cell.parse().map_err(|_| Error::Parse {
                line,
                column: column + 1,
                message: format!("`{cell}` is not a number"),
            })?;
        }
        let sample = SensorSample::new(v[0], [v[1], v[2], v[3]], v[4]).map_err(|_| Error::Parse {
            line,
            column: 0,
            message: "non-finite sample".into(),
        })?;
        if let Some(prev) = trace.last() {
            if sample.t < prev.t {
                return Err(Error::Ordering(format!(
                    "line {line}: t={} precedes t={}",
                    sample.t, prev.t
                )));
            }
        }
        trace.push(sample);
    }
    Ok(trace)
}

pub fn write_trace<T: Scalar, W: Write>(mut out: W, trace: &[SensorSample<T>]) -> Result<()> {
    writeln!(out, "{}", TRACE_HEADER.join(","))?;
    for s in trace {
        let [ax, ay, az] = s.accel;
        writeln!(out, "{},{ax},{ay},{az},{}", s.t, s.heading)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    use super::*;

    fn pos(x: f64, y: f64) -> Position<f64> {
        Position::new(x, y).unwrap()
    }

    fn magnitude_trace(duration: f64, rate: f64, f: impl Fn(f64) -> f64) -> Vec<SensorSample<f64>> {
        let n = (duration * rate).round() as usize;
        (0..=n)
            .map(|i| {
                let t = i as f64 / rate;
                SensorSample::new(t, [0.0, 0.0, f(t)], 0.25).unwrap()
            })
            .collect()
    }

    #[test]
    fn stationary_trace_has_no_steps() {
        let trace = magnitude_trace(10.0, 100.0, |_| 9.81);
        assert!(detect_steps(&trace, &PdrConfig::default()).is_empty());
        assert!(detect_steps::<f64>(&[], &PdrConfig::default()).is_empty());
    }

    #[test]
    fn sinusoid_yields_one_step_per_period() {
        let trace = magnitude_trace(5.0, 100.0, |t| 9.81 + 3.0 * (2.0 * PI * t / 0.5).sin());
        let steps = detect_steps(&trace, &PdrConfig::default());
        assert_eq!(steps.len(), 10);
        for (i, s) in steps.iter().enumerate() {
            assert!((s.t - (0.125 + 0.5 * i as f64)).abs() <= 0.01 + 1e-12);
            assert_eq!(s.heading, 0.25);
        }
    }

    #[test]
    fn sub_threshold_sinusoid_yields_nothing() {
        let trace = magnitude_trace(5.0, 100.0, |t| 9.81 + 0.5 * (2.0 * PI * t / 0.5).sin());
        assert!(detect_steps(&trace, &PdrConfig::default()).is_empty());
    }

    #[test]
    fn refractory_interval_drops_close_peaks() {
        // Peaks every 0.2 s; with a 0.3 s refractory window every other one survives.
        let trace = magnitude_trace(2.0, 100.0, |t| 9.81 + 3.0 * (2.0 * PI * t / 0.2).sin());
        let steps = detect_steps(&trace, &PdrConfig::default());
        assert!(steps.windows(2).all(|w| w[1].t - w[0].t >= 0.3));
        assert_eq!(steps.len(), 5);
    }

    #[test]
    fn flat_topped_peaks_count_once() {
        let mags = [9.0, 12.0, 12.0, 12.0, 9.0, 12.0, 13.0, 9.0];
        let trace: Vec<_> = mags
            .iter()
            .enumerate()
            .map(|(i, &m)| SensorSample::new(i as f64, [m, 0.0, 0.0], 0.0).unwrap())
            .collect();
        let steps = detect_steps(&trace, &PdrConfig::default());
        let times: Vec<_> = steps.iter().map(|s| s.t).collect();
        assert_eq!(times, vec![1.0, 6.0]);
    }

    #[test]
    fn heading_is_normalized() {
        let s = SensorSample::new(0.0, [0.0; 3], -FRAC_PI_2).unwrap();
        assert!((s.heading - 3.0 * FRAC_PI_2).abs() < 1e-12);
        assert_eq!(normalize_heading(2.0 * PI), 0.0);
        assert!(normalize_heading(7.0 * PI) < 2.0 * PI);
        assert!(SensorSample::new(f64::NAN, [0.0; 3], 0.0).is_err());
    }

    #[test]
    fn pdr_step_examples() {
        assert_eq!(pdr_step(pos(0.0, 0.0), 1.0, 0.0), pos(1.0, 0.0));
        let p = pdr_step(pos(0.0, 0.0), 1.0, FRAC_PI_2);
        assert!(p.x().abs() < 1e-12 && (p.y() - 1.0).abs() < 1e-12);
        let p = pdr_step(pos(2.0, 3.0), 0.7, FRAC_PI_4);
        let leg = 0.7 / 2.0_f64.sqrt();
        assert!((p.x() - (2.0 + leg)).abs() < 1e-9 && (p.y() - (3.0 + leg)).abs() < 1e-9);
    }

    fn steps(headings: &[f64]) -> Vec<StepEvent<f64>> {
        headings
            .iter()
            .enumerate()
            .map(|(i, &h)| StepEvent {
                t: 1.0 + i as f64,
                heading: h,
            })
            .collect()
    }

    #[test]
    fn track_examples() {
        let cfg = PdrConfig::default().with_step_length(1.0);
        let only_fix = track(pos(4.0, 2.0), 0.0, &[], &cfg).unwrap();
        assert_eq!(only_fix.len(), 1);
        assert_eq!(only_fix.start().position, pos(4.0, 2.0));

        let square = track(pos(0.0, 0.0), 0.0, &steps(&[0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]), &cfg).unwrap();
        assert_eq!(square.len(), 5);
        let end = square.end().position;
        assert!(end.x().abs() < 1e-12 && end.y().abs() < 1e-12);

        let cfg = PdrConfig::default();
        let line = track(pos(1.0, 1.0), 0.0, &steps(&[0.0, 0.0, 0.0]), &cfg).unwrap();
        let end = line.end().position;
        assert!((end.x() - 3.1).abs() < 1e-12 && end.y() == 1.0);
    }

    #[test]
    fn track_rejects_out_of_order_steps() {
        let cfg = PdrConfig::default();
        let mut s = steps(&[0.0, 0.0]);
        s[1].t = s[0].t;
        assert!(matches!(track(pos(0.0, 0.0), 0.0, &s, &cfg), Err(Error::Ordering(_))));
        let s = steps(&[0.0]);
        assert!(matches!(track(pos(0.0, 0.0), 5.0, &s, &cfg), Err(Error::Ordering(_))));
    }

    #[test]
    fn track_matches_iterated_pdr_step() {
        let cfg = PdrConfig::default();
        let s = steps(&[0.3, 1.9, 4.2, 5.5, 0.01]);
        let traj = track(pos(12.5, -3.25), 0.0, &s, &cfg).unwrap();
        let mut p = pos(12.5, -3.25);
        for (pt, ev) in traj.points()[1..].iter().zip(&s) {
            p = pdr_step(p, cfg.step_length, ev.heading);
            assert!(pt.position.distance_to(&p) < 1e-12);
        }
    }

    #[test]
    fn tracker_starts_without_time() {
        let mut tracker = PdrTracker::new(pos(1.0, 1.0), None);
        let pt = tracker.step(&StepEvent { t: -4.0, heading: 0.0 }, 2.0).unwrap();
        assert_eq!(pt.position, pos(3.0, 1.0));
        assert!(tracker.step(&StepEvent { t: -4.0, heading: 0.0 }, 2.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(PdrConfig::<f64>::default().validate().is_ok());
        assert!(PdrConfig::<f64>::default().with_step_length(0.0).validate().is_err());
        let cfg = PdrConfig {
            min_step_interval: -1.0,
            ..PdrConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
    #[test]
    fn trace_csv_round_trip_and_errors() {
        let trace = magnitude_trace(0.05, 100.0, |t| 9.81 + t);
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        assert_eq!(read_trace::<f64, _>(buf.as_slice()).unwrap(), trace);

        assert!(matches!(
            read_trace::<f64, _>("t,ax,ay,az\n".as_bytes()),
            Err(Error::Schema { .. })
        ));
        let bad = "t,ax,ay,az,heading\n0,0,0,9.8,0\n0,0,x,9.8,0\n";
        assert!(matches!(
            read_trace::<f64, _>(bad.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let backwards = "t,ax,ay,az,heading\n1,0,0,9.8,0\n0.5,0,0,9.8,0\n";
        assert!(matches!(
            read_trace::<f64, _>(backwards.as_bytes()),
            Err(Error::Ordering(_))
        ));
        let empty_cell = "t,ax,ay,az,heading\n1,0,,9.8,0\n";
        assert!(matches!(
            read_trace::<f64, _>(empty_cell.as_bytes()),
            Err(Error::NullViolation { .. })
        ));
    }
}
