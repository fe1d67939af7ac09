use std::fmt;
use std::str::FromStr;

use super::sweep::{Axis, SweepSpec};
use crate::error::{Error, Result};
use crate::model::{Scheme, SimConfig};
use crate::rewards::RewardScheme;

/// Episodes per grid point unless overridden. Full-fidelity runs use 10^4.
pub const DEFAULT_REPS: u64 = 200;

const COLLABORATIVE_BITS: u32 = 4;

const ALL_SCHEMES: [RewardScheme; 3] = [
    RewardScheme::Independent,
    RewardScheme::Collaborative {
        quant_bits: COLLABORATIVE_BITS,
    },
    RewardScheme::PacketBased,
];

/// Named figure reproductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Collaborative throughput vs load for b in {1, 2, 4, 8, 16}.
    Fig2,
    /// Throughput vs load, all schemes.
    Fig3,
    /// Throughput vs packets per device at load 1.
    Fig4,
    /// Throughput vs payload bits at load 1.5.
    Fig5,
    /// Latency vs load, all schemes.
    Fig6,
    /// Latency vs learning rate at loads 1 and 1.5.
    Fig7,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::Fig2,
        Preset::Fig3,
        Preset::Fig4,
        Preset::Fig5,
        Preset::Fig6,
        Preset::Fig7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
        }
    }

    pub fn spec(self) -> SweepSpec {
        // K = 400, L = 100, p = 64, alpha = 0.1 unless the figure varies it
        let base = SimConfig::new(Scheme::PacketBased);
        let load_grid = vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0];
        let spec = |axis, grid, schemes: &[RewardScheme], loads: Vec<f64>| SweepSpec {
            base: base.clone(),
            axis,
            grid,
            schemes: schemes.to_vec(),
            reps: DEFAULT_REPS,
            loads,
        };
        match self {
            Preset::Fig2 => {
                let schemes: Vec<_> = [1, 2, 4, 8, 16]
                    .into_iter()
                    .map(|quant_bits| RewardScheme::Collaborative { quant_bits })
                    .collect();
                spec(Axis::LoadingFactor, load_grid, &schemes, vec![])
            }
            Preset::Fig3 => spec(Axis::LoadingFactor, load_grid, &ALL_SCHEMES, vec![]),
            Preset::Fig4 => spec(
                Axis::PacketsPerDevice,
                (1..=10).map(|i| 50.0 * i as f64).collect(),
                &ALL_SCHEMES,
                vec![1.0],
            ),
            Preset::Fig5 => spec(
                Axis::PayloadBits,
                (0..=8).map(|i| (1u32 << i) as f64).collect(),
                &ALL_SCHEMES,
                vec![1.5],
            ),
            Preset::Fig6 => spec(
                Axis::LoadingFactor,
                vec![0.25, 0.5, 0.75, 1.0, 1.2, 1.5, 1.75, 2.0, 2.5, 3.0],
                &ALL_SCHEMES,
                vec![],
            ),
            Preset::Fig7 => spec(
                Axis::LearningRate,
                vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
                &ALL_SCHEMES,
                vec![1.0, 1.5],
            ),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

pub fn preset(name: &str) -> Result<SweepSpec> {
    Ok(name.parse::<Preset>()?.spec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for p in Preset::ALL {
            p.spec().validate().unwrap();
        }
        assert!(matches!(preset("fig9"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn fig4_sweeps_packets_at_unit_load() {
        let s = preset("fig4").unwrap();
        assert_eq!(s.axis, Axis::PacketsPerDevice);
        assert!(s.grid.iter().all(|&l| (50.0..=500.0).contains(&l)));
        assert_eq!(s.loads, vec![1.0]);
        assert_eq!(s.base.n_slots, 400);
        assert!(s.points().unwrap().iter().all(|p| p.config.n_devices == 400));
    }

    #[test]
    fn fig5_base() {
        let s = preset("fig5").unwrap();
        assert_eq!(s.loads, vec![1.5]);
        assert_eq!(s.base.packets_per_device, 100);
        assert_eq!(s.base.learning_rate, 0.1);
        assert_eq!(s.grid.first(), Some(&1.0));
        assert_eq!(s.grid.last(), Some(&256.0));
    }

    #[test]
    fn fig6_uses_all_schemes() {
        let s = preset("fig6").unwrap();
        assert_eq!(s.schemes, ALL_SCHEMES.to_vec());
        assert_eq!(s.base.packets_per_device, 100);
        assert_eq!(s.base.learning_rate, 0.1);
    }

    #[test]
    fn fig2_is_collaborative_only() {
        let s = preset("fig2").unwrap();
        assert_eq!(s.schemes.len(), 5);
        assert!(s.schemes.iter().all(|r| r.scheme() == Scheme::Collaborative));
        assert_eq!(s.base.payload_bits, 64);
    }

    #[test]
    fn fig7_learning_rates() {
        let s = preset("fig7").unwrap();
        assert_eq!(s.axis, Axis::LearningRate);
        assert_eq!(s.grid.first(), Some(&0.05));
        assert_eq!(s.grid.last(), Some(&0.5));
        assert_eq!(s.loads, vec![1.0, 1.5]);
    }
}
