//! Reward rules and the shared Q-update step.
//!
//! Every scheme reduces to a target value in [-1, 1] toward which the
//! chosen Q-entry is stepped by [`apply_update`]. Successes always target
//! +1; the schemes differ only in the collision target.

use std::fmt;

use crate::error::{Error, Result};

/// Reward rule with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RewardScheme {
    /// One-bit reward, -1 on collision.
    Independent,
    /// Quantized congestion level as the collision penalty.
    Collaborative { quant_bits: u32 },
    /// One-bit reward, scaled on the device by how far it has progressed.
    PacketBased,
}

impl RewardScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardScheme::Collaborative { quant_bits } if !(1..=52).contains(&quant_bits) => Err(
                Error::invalid("header_bits", format!("quantizer width {quant_bits} outside 1..=52")),
            ),
            _ => Ok(()),
        }
    }

    /// Bits in each reward message sent by the central node.
    pub fn header_bits(&self) -> u32 {
        match *self {
            RewardScheme::Collaborative { quant_bits } => quant_bits,
            RewardScheme::Independent | RewardScheme::PacketBased => 1,
        }
    }

    pub fn scheme(&self) -> crate::Scheme {
        match self {
            RewardScheme::Independent => crate::Scheme::Independent,
            RewardScheme::Collaborative { .. } => crate::Scheme::Collaborative,
            RewardScheme::PacketBased => crate::Scheme::PacketBased,
        }
    }

    /// Target for a device whose transmission collided with `occupants - 1`
    /// others, while it still had `remaining` of `packets` to send.
    pub fn collision_target(
        &self,
        occupants: usize,
        n_devices: usize,
        remaining: u32,
        packets: u32,
    ) -> Result<f64> {
        match *self {
            RewardScheme::Independent => Ok(independent_reward(TxOutcome::Collision)),
            RewardScheme::Collaborative { quant_bits } => {
                let c = congestion_level(occupants, n_devices)?;
                collaborative_reward(TxOutcome::Collision, c, quant_bits)
            }
            RewardScheme::PacketBased => {
                Ok(packet_based_target(TxOutcome::Collision, remaining, packets))
            }
        }
    }
}

impl fmt::Display for RewardScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardScheme::Independent => f.write_str("independent"),
            RewardScheme::Collaborative { quant_bits } => write!(f, "collaborative-b{quant_bits}"),
            RewardScheme::PacketBased => f.write_str("packet"),
        }
    }
}

/// Result of a device's transmission in its chosen slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxOutcome {
    Success,
    Collision,
}

/// One pending Q-update produced by a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateTarget {
    pub device: usize,
    pub slot: usize,
    pub target: f64,
}

pub fn independent_reward(outcome: TxOutcome) -> f64 {
    match outcome {
        TxOutcome::Success => 1.0,
        TxOutcome::Collision => -1.0,
    }
}

/// Fraction of all devices that transmitted in a slot.
pub fn congestion_level(occupants: usize, n_devices: usize) -> Result<f64> {
    if occupants == 0 || occupants > n_devices {
        return Err(Error::contract(format!(
            "congestion level needs 1 <= occupants <= N (got {occupants} of {n_devices})"
        )));
    }
    Ok(occupants as f64 / n_devices as f64)
}

/// Round `c` up onto the grid `{i / 2^bits : i = 1..=2^bits}`.
pub fn quantize_congestion(c: f64, bits: u32) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::contract(format!("congestion {c} outside (0, 1]")));
    }
    if !(1..=52).contains(&bits) {
        return Err(Error::contract(format!("quantizer width {bits} outside 1..=52")));
    }
    let levels = (1u64 << bits) as f64;
    Ok((c * levels).ceil() / levels)
}

pub fn collaborative_reward(outcome: TxOutcome, c: f64, bits: u32) -> Result<f64> {
    match outcome {
        TxOutcome::Success => Ok(1.0),
        TxOutcome::Collision => Ok(-quantize_congestion(c, bits)?),
    }
}

/// Share of a device's packets already delivered: `1 - remaining / total`.
pub fn epsilon_factor(remaining: u32, total: u32) -> f64 {
    debug_assert!(total >= 1 && remaining <= total);
    1.0 - remaining as f64 / total as f64
}

/// Effective target of the packet-based rule.
///
/// A collision steps toward `-epsilon`, so a device that has delivered
/// nothing yet is not pushed away from the slot at all. `remaining` is the
/// count before this frame.
pub fn packet_based_target(outcome: TxOutcome, remaining: u32, total: u32) -> f64 {
    match outcome {
        TxOutcome::Success => 1.0,
        TxOutcome::Collision => -epsilon_factor(remaining, total),
    }
}

/// `q + alpha * (target - q)`, evaluated as a convex combination so that
/// `alpha = 1` lands exactly on `target`.
#[inline]
pub fn apply_update(q: f64, alpha: f64, target: f64) -> f64 {
    (1.0 - alpha) * q + alpha * target
}
