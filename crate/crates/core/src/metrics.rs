//! Figures of merit computed from episode counters.

use crate::error::{Error, Result};
use crate::model::{EpisodeStats, SimConfig};

/// Per-episode figures of merit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRecord {
    pub normalized_throughput: f64,
    pub latency_slots: u64,
    /// NaN unless every device finished.
    pub finish_mean: f64,
    /// NaN unless every device finished.
    pub finish_std: f64,
    pub converged: bool,
}

impl MetricRecord {
    pub fn from_stats(stats: &EpisodeStats, config: &SimConfig) -> Result<Self> {
        let normalized_throughput = normalized_throughput(
            stats.total_successes,
            stats.total_slots,
            config.payload_bits,
            config.header_bits,
        )?;
        let (finish_mean, finish_std) = if stats.converged {
            completion_spread(&stats.finish_frames)?
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(MetricRecord {
            normalized_throughput,
            latency_slots: latency(stats),
            finish_mean,
            finish_std,
            converged: stats.converged,
        })
    }
}

/// `(p / (b + p)) * S / T`.
pub fn normalized_throughput(successes: u64, slots: u64, payload_bits: u32, header_bits: u32) -> Result<f64> {
    if slots == 0 {
        return Err(Error::contract("throughput over zero slots"));
    }
    if payload_bits == 0 {
        return Err(Error::contract("payload_bits must be positive"));
    }
    let p = payload_bits as f64;
    let b = header_bits as f64;
    Ok(p / (b + p) * successes as f64 / slots as f64)
}

/// Total slots elapsed. For a capped episode this is `max_frames * K`;
/// check `converged` before trusting it.
pub fn latency(stats: &EpisodeStats) -> u64 {
    stats.total_slots
}

/// Sample mean and sample (n - 1) standard deviation of finish frames.
/// A single device has zero spread.
pub fn completion_spread(finish_frames: &[Option<u64>]) -> Result<(f64, f64)> {
    let frames: Vec<f64> = finish_frames
        .iter()
        .enumerate()
        .map(|(n, f)| {
            f.map(|f| f as f64).ok_or_else(|| {
                Error::contract(format!("device {} never finished", n + 1))
            })
        })
        .collect::<Result<_>>()?;
    let s = Summary::of(&frames);
    if s.count == 0 {
        return Err(Error::contract("completion spread of zero devices"));
    }
    Ok((s.mean, s.std))
}

/// Throughput at the largest packet count of a curve, with the change over
/// its last step as a convergence indicator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticEstimate {
    pub value: f64,
    pub last_delta: f64,
}

pub fn asymptotic_throughput_estimate(curve: &[(u32, f64)]) -> Result<AsymptoticEstimate> {
    if curve.len() < 2 {
        return Err(Error::contract("asymptotic estimate needs at least two points"));
    }
    if curve.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::contract("curve must be strictly increasing in L"));
    }
    let [.., (_, prev), (_, last)] = curve else {
        unreachable!()
    };
    Ok(AsymptoticEstimate {
        value: *last,
        last_delta: last - prev,
    })
}

/// Mean and sample standard deviation of a set of values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    /// Summed left to right, so the result depends only on the order of
    /// `values`. Empty input gives NaN mean and std; one value gives std 0.
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let std = if count > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { count, mean, std }
    }

    pub fn std_err(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}
