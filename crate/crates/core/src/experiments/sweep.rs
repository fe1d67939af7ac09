use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::engine::{episode_rng, run_episode};
use crate::error::{Error, Result};
use crate::metrics::{MetricRecord, Summary};
use crate::model::SimConfig;
use crate::rewards::RewardScheme;

/// Parameter varied along a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// N / K; sets `n_devices = round(value * K)`, halves rounding up.
    LoadingFactor,
    PacketsPerDevice,
    PayloadBits,
    /// Collaborative header width; other schemes keep one bit.
    QuantBits,
    LearningRate,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::LoadingFactor => "loading_factor",
            Axis::PacketsPerDevice => "packets_per_device",
            Axis::PayloadBits => "payload_bits",
            Axis::QuantBits => "quant_bits",
            Axis::LearningRate => "learning_rate",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "loading_factor" => Ok(Axis::LoadingFactor),
            "packets_per_device" => Ok(Axis::PacketsPerDevice),
            "payload_bits" => Ok(Axis::PayloadBits),
            "quant_bits" | "header_bits" => Ok(Axis::QuantBits),
            "learning_rate" => Ok(Axis::LearningRate),
            other => Err(format!("unknown sweep axis `{other}`")),
        }
    }
}

/// Devices for loading factor `load` over `n_slots` slots.
pub fn devices_for_load(load: f64, n_slots: usize) -> usize {
    let n = (load * n_slots as f64 + 0.5).floor();
    if n.is_finite() && n > 0.0 {
        n as usize
    } else {
        0
    }
}

/// A grid of scenarios, each run `reps` times per scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Values not on the axis come from here; `base.seed` is the master seed.
    pub base: SimConfig,
    pub axis: Axis,
    /// Strictly increasing.
    pub grid: Vec<f64>,
    pub schemes: Vec<RewardScheme>,
    pub reps: u64,
    /// Loading factors to repeat a non-load sweep at. Empty keeps
    /// `base.n_devices`.
    pub loads: Vec<f64>,
}

/// One fully specified grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub scheme: RewardScheme,
    pub axis_value: f64,
    pub config: SimConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.points().map(|_| ())
    }

    /// Every (scheme, load, grid value) point in output order.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        if self.grid.is_empty() {
            return Err(Error::invalid("sweep_grid", "grid is empty"));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sweep_grid", "grid values must be finite"));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sweep_grid", "grid must be strictly increasing"));
        }
        if self.reps < 1 {
            return Err(Error::invalid("reps", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::invalid("schemes", "no schemes selected"));
        }
        if self.axis == Axis::LoadingFactor && !self.loads.is_empty() {
            return Err(Error::invalid(
                "loading_factor",
                "a loading-factor sweep cannot also fix loading factors",
            ));
        }
        if self.loads.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("loading_factor", "loads must be strictly increasing"));
        }

        let mut schemes = self.schemes.clone();
        schemes.sort();
        schemes.dedup();

        let loads: Vec<Option<f64>> = if self.loads.is_empty() {
            vec![None]
        } else {
            self.loads.iter().copied().map(Some).collect()
        };

        let mut points = Vec::new();
        for &scheme in &schemes {
            scheme.validate()?;
            for &load in &loads {
                for &value in &self.grid {
                    let config = self.point_config(scheme, load, value).map_err(|e| {
                        Error::InvalidPoint {
                            axis: self.axis.as_str(),
                            value,
                            source: Box::new(e),
                        }
                    })?;
                    points.push(SweepPoint {
                        scheme,
                        axis_value: value,
                        config,
                    });
                }
            }
        }
        Ok(points)
    }

    fn point_config(&self, scheme: RewardScheme, load: Option<f64>, value: f64) -> Result<SimConfig> {
        let mut c = self.base.clone();
        c.scheme = scheme.scheme();
        c.header_bits = scheme.header_bits();
        if let Some(load) = load {
            c.n_devices = checked_devices(load, c.n_slots)?;
        }
        match self.axis {
            Axis::LoadingFactor => c.n_devices = checked_devices(value, c.n_slots)?,
            Axis::PacketsPerDevice => c.packets_per_device = whole(value, "packets_per_device")?,
            Axis::PayloadBits => c.payload_bits = whole(value, "payload_bits")?,
            Axis::QuantBits => {
                let bits = whole(value, "header_bits")?;
                if let RewardScheme::Collaborative { .. } = scheme {
                    RewardScheme::Collaborative { quant_bits: bits }.validate()?;
                    c.header_bits = bits;
                }
            }
            Axis::LearningRate => c.learning_rate = value,
        }
        c.validate()?;
        Ok(c)
    }
}

fn checked_devices(load: f64, n_slots: usize) -> Result<usize> {
    if load.is_nan() || load <= 0.0 {
        return Err(Error::invalid("loading_factor", format!("{load} must be positive")));
    }
    match devices_for_load(load, n_slots) {
        0 => Err(Error::invalid(
            "loading_factor",
            format!("{load} x {n_slots} slots rounds to zero devices"),
        )),
        n => Ok(n),
    }
}

fn whole(value: f64, field: &'static str) -> Result<u32> {
    if value.fract() != 0.0 || value < 1.0 || value > u32::MAX as f64 {
        return Err(Error::invalid(field, format!("{value} is not a positive integer")));
    }
    Ok(value as u32)
}

/// Aggregates for one (scheme, grid point).
///
/// Means are over converged episodes only; throughput is the mean of the
/// per-episode ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: RewardScheme,
    pub axis_value: f64,
    pub config: SimConfig,
    pub throughput: Summary,
    pub latency: Summary,
    /// Mean over episodes of the within-episode std of finish frames.
    pub mean_finish_std: f64,
    pub nonconverged: u64,
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn nonconverged(&self) -> u64 {
        self.rows.iter().map(|r| r.nonconverged).sum()
    }

    /// Rows for one scheme, in grid order.
    pub fn scheme_rows(&self, scheme: RewardScheme) -> impl Iterator<Item = &SweepRow> + '_ {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }

    pub fn row(&self, scheme: RewardScheme, axis_value: f64) -> Option<&SweepRow> {
        self.scheme_rows(scheme).find(|r| r.axis_value == axis_value)
    }
}

/// Run every episode of `spec`.
///
/// Episode `i` of every point uses stream `i` of the master seed, so points
/// that differ only in parameters the dynamics ignore (payload bits) replay
/// identical episodes. Per-point reductions run in episode order and the
/// result does not depend on `workers` (`None` uses rayon's global pool).
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult> {
    let points = spec.points()?;
    let reps = spec.reps;
    let master = spec.base.seed;

    let run = || -> Result<Vec<MetricRecord>> {
        let jobs = points.len() as u64 * reps;
        (0..jobs)
            .into_par_iter()
            .map(|job| {
                let point = &points[(job / reps) as usize];
                let mut rng = episode_rng(master, job % reps);
                let out = run_episode(&point.config, &mut rng)?;
                MetricRecord::from_stats(&out.stats, &point.config)
            })
            .collect()
    };
    let records = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::contract(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };

    let rows = points
        .into_iter()
        .zip(records.chunks(reps as usize))
        .map(|(point, recs)| aggregate(point, recs))
        .collect();
    Ok(SweepResult {
        axis: spec.axis,
        rows,
    })
}

fn aggregate(point: SweepPoint, records: &[MetricRecord]) -> SweepRow {
    let done: Vec<&MetricRecord> = records.iter().filter(|r| r.converged).collect();
    let throughput: Vec<f64> = done.iter().map(|r| r.normalized_throughput).collect();
    let latency: Vec<f64> = done.iter().map(|r| r.latency_slots as f64).collect();
    let spread: Vec<f64> = done.iter().map(|r| r.finish_std).collect();
    SweepRow {
        scheme: point.scheme,
        axis_value: point.axis_value,
        config: point.config,
        throughput: Summary::of(&throughput),
        latency: Summary::of(&latency),
        mean_finish_std: Summary::of(&spread).mean,
        nonconverged: (records.len() - done.len()) as u64,
        reps: records.len() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scheme;

    fn spec(axis: Axis, grid: Vec<f64>) -> SweepSpec {
        SweepSpec {
            base: SimConfig {
                n_slots: 20,
                n_devices: 20,
                packets_per_device: 5,
                ..SimConfig::new(Scheme::Independent)
            },
            axis,
            grid,
            schemes: vec![RewardScheme::PacketBased, RewardScheme::Independent],
            reps: 4,
            loads: vec![],
        }
    }

    #[test]
    fn load_rounding_is_half_up() {
        assert_eq!(devices_for_load(1.0, 400), 400);
        assert_eq!(devices_for_load(0.0025, 400), 1);
        assert_eq!(devices_for_load(0.5, 3), 2);
        assert_eq!(devices_for_load(0.1, 3), 0);
    }

    #[test]
    fn points_are_ordered_by_scheme_then_value() {
        let pts = spec(Axis::LoadingFactor, vec![0.5, 1.0]).points().unwrap();
        let got: Vec<_> = pts.iter().map(|p| (p.scheme, p.config.n_devices)).collect();
        assert_eq!(
            got,
            vec![
                (RewardScheme::Independent, 10),
                (RewardScheme::Independent, 20),
                (RewardScheme::PacketBased, 10),
                (RewardScheme::PacketBased, 20),
            ]
        );
    }

    #[test]
    fn zero_device_point_is_named() {
        let err = spec(Axis::LoadingFactor, vec![0.01, 1.0]).points().unwrap_err();
        match err {
            Error::InvalidPoint { axis, value, .. } => {
                assert_eq!(axis, "loading_factor");
                assert_eq!(value, 0.01);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn grid_must_increase() {
        assert!(spec(Axis::LearningRate, vec![0.2, 0.1]).validate().is_err());
        assert!(spec(Axis::LearningRate, vec![]).validate().is_err());
        assert!(spec(Axis::LearningRate, vec![0.1, 1.5]).validate().is_err());
        assert!(spec(Axis::PayloadBits, vec![1.5]).validate().is_err());
    }

    #[test]
    fn quant_bits_only_touch_collaborative() {
        let mut s = spec(Axis::QuantBits, vec![2.0, 8.0]);
        s.schemes = vec![RewardScheme::Independent, RewardScheme::Collaborative { quant_bits: 4 }];
        let pts = s.points().unwrap();
        let bits: Vec<_> = pts.iter().map(|p| (p.config.scheme, p.config.header_bits)).collect();
        assert_eq!(
            bits,
            vec![
                (Scheme::Independent, 1),
                (Scheme::Independent, 1),
                (Scheme::Collaborative, 2),
                (Scheme::Collaborative, 8),
            ]
        );
    }

    #[test]
    fn fixed_loads_multiply_rows() {
        let mut s = spec(Axis::LearningRate, vec![0.1, 0.5]);
        s.loads = vec![1.0, 1.5];
        let pts = s.points().unwrap();
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[2].config.n_devices, 30);
    }

    #[test]
    fn lone_device_point() {
        let mut s = spec(Axis::LoadingFactor, vec![0.0025]);
        s.base.n_slots = 400;
        s.base.packets_per_device = 7;
        let res = run_sweep(&s, Some(2)).unwrap();
        for row in &res.rows {
            assert_eq!(row.config.n_devices, 1);
            let expected = 64.0 / 65.0 * 7.0 / (7.0 * 400.0);
            assert_eq!(row.throughput.mean, expected);
            assert_eq!(row.throughput.std, 0.0);
            assert_eq!(row.latency.mean, 2800.0);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let s = spec(Axis::LoadingFactor, vec![0.5, 1.0, 1.5]);
        let one = run_sweep(&s, Some(1)).unwrap();
        let many = run_sweep(&s, Some(8)).unwrap();
        assert_eq!(one, many);
    }
}
