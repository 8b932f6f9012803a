//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use indoorloc::simulator::{
    benchmark_environment, demo_path, locate_waypoints, standard_algorithms, write_cdf_csv, write_stats_csv,
    write_sweep_csv, write_trajectory_csv, Preset,
};
use indoorloc::store::{load_store, read_ap_count, to_fingerprints};
use indoorloc::{
    build_radio_map, fused_track, generate_environment, locate, read_trace, simulate_walk, sweep_k, Algorithm,
    LocateConfig, PdrConfig, RadioMap, SimConfig, TrajectoryPoint,
};

use crate::server::{Server, ServerConfig, ServerState};

#[derive(Debug, Parser)]
#[command(
    name = "indoorloc",
    version,
    about = "Wi-Fi fingerprint and dead-reckoning indoor localization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a radio map from a fingerprint store and report its size.
    BuildMap { fingerprints: PathBuf },
    /// Locate one RSS reading.
    Locate {
        fingerprints: PathBuf,
        #[command(flatten)]
        query: Query,
        #[arg(long, default_value = "wknn")]
        algorithm: Algorithm,
        /// Decimal places in the printed coordinates.
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(0..=17))]
        precision: u8,
    },
    /// Fix a start position with WKNN, then dead-reckon through a sensor trace.
    Track {
        fingerprints: PathBuf,
        #[command(flatten)]
        query: Query,
        /// CSV with header `t,ax,ay,az,heading`.
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        pdr: PdrArgs,
        /// Write the trajectory here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Benchmark NN, KNN and WKNN on a synthetic environment.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Directory for stats, CDF and trajectory CSVs.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Cross-validation score of WKNN for a range of k.
    SweepK {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// A held-out sample counts as a hit within this many meters.
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the line-protocol server.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// 0 picks a free port.
        #[arg(long)]
        port: u16,
        /// Fingerprint store; created on first ingest, loaded if present.
        #[arg(long)]
        db: PathBuf,
        /// AP count for a new store. Defaults to the store header, or 5.
        #[arg(long)]
        ap_count: Option<usize>,
        #[arg(long, default_value = "wknn")]
        algorithm: Algorithm,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.7)]
        step_length: f64,
    },
}

#[derive(Debug, Args)]
pub struct Query {
    /// Comma-separated RSS readings, dBm, one per AP.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',', required = true)]
    pub rss: Vec<f64>,
    #[arg(short, long, default_value_t = 5)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct PdrArgs {
    #[arg(long, default_value_t = 0.7)]
    pub step_length: f64,
    /// Acceleration magnitude a step peak must exceed, m/s².
    #[arg(long, default_value_t = 10.8)]
    pub threshold: f64,
    /// Minimum seconds between steps.
    #[arg(long, default_value_t = 0.3)]
    pub min_step_interval: f64,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, default_value = "default")]
    pub preset: Preset,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// RSS noise standard deviation, dBm.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub samples_per_point: Option<usize>,
    #[arg(long)]
    pub test_samples: Option<usize>,
}

impl SimArgs {
    fn config(&self) -> SimConfig<f64> {
        let mut config = SimConfig::preset(self.preset).with_seed(self.seed);
        if let Some(sigma) = self.noise_sigma {
            config.noise_sigma = sigma;
        }
        if let Some(n) = self.samples_per_point {
            config.samples_per_point = n;
        }
        if let Some(n) = self.test_samples {
            config.test_samples = n;
        }
        config
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit status.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return e.exit_code();
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn load_map(path: &Path) -> anyhow::Result<RadioMap<f64>> {
    let ap_count = read_ap_count(File::open(path).with_context(|| format!("cannot open {}", path.display()))?)
        .with_context(|| format!("reading {}", path.display()))?;
    let records = load_store::<f64>(path).with_context(|| format!("reading {}", path.display()))?;
    if records.is_empty() {
        bail!("{} has no fingerprints", path.display());
    }
    Ok(build_radio_map(&to_fingerprints(&records)?, ap_count, None)?)
}

/// Fixed decimals with trailing zeros dropped; `-0` prints as `0`.
pub fn format_coordinate(v: f64, precision: usize) -> String {
    let s = format!("{v:.precision$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn write_to(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> indoorloc::Result<()>) -> anyhow::Result<()> {
    let mut file = create(path)?;
    f(&mut file).with_context(|| format!("writing {}", path.display()))?;
    file.flush()?;
    Ok(())
}

fn execute(command: Command, out: &mut dyn Write) -> anyhow::Result<()> {
    match command {
        Command::BuildMap { fingerprints } => {
            let records =
                load_store::<f64>(&fingerprints).with_context(|| format!("reading {}", fingerprints.display()))?;
            let map = load_map(&fingerprints)?;
            writeln!(
                out,
                "{} records, {} reference points, {} APs",
                records.len(),
                map.len(),
                map.ap_count()
            )?;
        }
        Command::Locate {
            fingerprints,
            query,
            algorithm,
            precision,
        } => {
            let map = load_map(&fingerprints)?;
            let config = LocateConfig::new(algorithm, query.k)?;
            let p = locate(&map, &query.rss, &config)?;
            let precision = usize::from(precision);
            writeln!(
                out,
                "{},{}",
                format_coordinate(p.x(), precision),
                format_coordinate(p.y(), precision)
            )?;
        }
        Command::Track {
            fingerprints,
            query,
            trace,
            pdr,
            out: path,
        } => {
            let map = load_map(&fingerprints)?;
            let samples = read_trace::<f64, _>(BufReader::new(
                File::open(&trace).with_context(|| format!("cannot open {}", trace.display()))?,
            ))
            .with_context(|| format!("reading {}", trace.display()))?;
            let pdr_config = PdrConfig {
                step_length: pdr.step_length,
                accel_threshold: pdr.threshold,
                min_step_interval: pdr.min_step_interval,
            };
            let trajectory = fused_track(&map, &query.rss, &samples, &LocateConfig::wknn(query.k)?, &pdr_config)?;
            match path {
                Some(path) => write_to(&path, |w| write_trajectory_csv(w, trajectory.points()))?,
                None => write_trajectory_csv(&mut *out, trajectory.points())?,
            }
        }
        Command::Simulate { sim, k, out_dir } => simulate(&sim.config(), k, &out_dir, out)?,
        Command::SweepK {
            sim,
            k_min,
            k_max,
            folds,
            radius,
            out: path,
        } => {
            if k_min == 0 || k_min > k_max {
                bail!("need 1 <= k-min <= k-max, got {k_min}..{k_max}");
            }
            let ks: Vec<usize> = (k_min..=k_max).collect();
            let config = sim.config();
            let rows = sweep_k(&config, &ks, folds, radius, config.seed)?;
            match path {
                Some(path) => write_to(&path, |w| write_sweep_csv(w, "k", &rows))?,
                None => write_sweep_csv(&mut *out, "k", &rows)?,
            }
        }
        Command::Serve {
            host,
            port,
            db,
            ap_count,
            algorithm,
            k,
            step_length,
        } => {
            let declared = if db.exists() && std::fs::metadata(&db)?.len() > 0 {
                Some(read_ap_count(File::open(&db)?).with_context(|| format!("reading {}", db.display()))?)
            } else {
                None
            };
            let ap_count = match (ap_count, declared) {
                (Some(flag), Some(file)) if flag != file => {
                    bail!("--ap-count {flag} disagrees with {} APs in {}", file, db.display())
                }
                (Some(n), _) | (None, Some(n)) => n,
                (None, None) => 5,
            };
            let config = ServerConfig {
                ap_count,
                locate: LocateConfig::new(algorithm, k)?,
                pdr: PdrConfig::default().with_step_length(step_length),
                store_path: Some(db),
            };
            let state = ServerState::new(config)?;
            let records = state.record_count();
            let server =
                Server::bind((host.as_str(), port), state).with_context(|| format!("cannot bind {host}:{port}"))?;
            writeln!(out, "listening on {} ({records} records)", server.local_addr()?)?;
            out.flush()?;
            server.run()?;
        }
    }
    Ok(())
}

fn simulate(config: &SimConfig<f64>, k: usize, out_dir: &Path, out: &mut dyn Write) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let env = generate_environment(config)?;
    let algorithms = standard_algorithms(k)?;
    let results = benchmark_environment(&env, &algorithms)?;

    write_to(&out_dir.join("stats.csv"), |w| write_stats_csv(w, &results))?;
    for r in &results {
        let name = format!("cdf_{}.csv", r.config.algorithm);
        write_to(&out_dir.join(name), |w| write_cdf_csv(w, &r.stats.cdf()))?;
    }

    let pdr = PdrConfig::default();
    let path = demo_path(config);
    let walk = simulate_walk(&path, config, &pdr)?;
    let truth: Vec<TrajectoryPoint<f64>> = path
        .iter()
        .zip(&walk.waypoint_times)
        .map(|(&position, &t)| TrajectoryPoint { t, position })
        .collect();
    write_to(&out_dir.join("trajectory_true.csv"), |w| {
        write_trajectory_csv(w, &truth)
    })?;
    for (config, points) in locate_waypoints(&env.map, &walk, &algorithms)? {
        let name = format!("trajectory_{}.csv", config.algorithm);
        write_to(&out_dir.join(name), |w| write_trajectory_csv(w, &points))?;
    }
    let fused = fused_track(
        &env.map,
        &walk.waypoint_rss[0],
        &walk.trace,
        &LocateConfig::wknn(k)?,
        &pdr,
    )?;
    write_to(&out_dir.join("trajectory_pdr.csv"), |w| {
        write_trajectory_csv(w, fused.points())
    })?;

    write_stats_csv(&mut *out, &results)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_formatting() {
        assert_eq!(format_coordinate(0.0, 3), "0");
        assert_eq!(format_coordinate(-0.0, 3), "0");
        assert_eq!(format_coordinate(-1e-6, 3), "0");
        assert_eq!(format_coordinate(1.25, 3), "1.25");
        assert_eq!(format_coordinate(-2.0004, 3), "-2");
        assert_eq!(format_coordinate(12.0, 0), "12");
        assert_eq!(format_coordinate(10.5, 0), "10");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
