//! Domain types and frame mechanics.
//!
//! Everything here is independent of the learning rule: which slot a device
//! picks given its Q-row, who ends up in which slot, and whether a slot is
//! idle, a success or a collision. Device and slot indices are 0-based in
//! code; CSV output and the CLI present them 1-based.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rewards::{self, RewardScheme};

/// Reward rule family. The collaborative quantizer width lives in
/// [`SimConfig::header_bits`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Independent,
    Collaborative,
    PacketBased,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Independent, Scheme::Collaborative, Scheme::PacketBased];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Independent => "independent",
            Scheme::Collaborative => "collaborative",
            Scheme::PacketBased => "packet",
        }
    }

    /// Header bits used when a config does not name them.
    pub fn default_header_bits(self) -> u32 {
        match self {
            Scheme::Collaborative => 4,
            Scheme::Independent | Scheme::PacketBased => 1,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "independent" | "ind" => Ok(Scheme::Independent),
            "collaborative" | "col" | "collab" => Ok(Scheme::Collaborative),
            "packet" | "pac" | "packet_based" | "packet-based" | "packetbased" => {
                Ok(Scheme::PacketBased)
            }
            other => Err(format!(
                "unknown scheme `{other}` (expected independent, collaborative or packet)"
            )),
        }
    }
}

/// All parameters of one simulated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// N
    pub n_devices: usize,
    /// K, slots per frame
    pub n_slots: usize,
    /// L
    pub packets_per_device: u32,
    /// alpha
    pub learning_rate: f64,
    /// p
    pub payload_bits: u32,
    /// b; also the collaborative quantizer width
    pub header_bits: u32,
    pub scheme: Scheme,
    pub max_frames: u64,
    pub seed: u64,
}

impl SimConfig {
    pub const DEFAULT_SLOTS: usize = 400;
    pub const DEFAULT_PACKETS: u32 = 100;
    pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
    pub const DEFAULT_PAYLOAD_BITS: u32 = 64;
    pub const DEFAULT_MAX_FRAMES: u64 = 1_000_000;
    pub const MAX_TABLE_ENTRIES: usize = 1 << 28;

    /// Default scenario for `scheme` at loading factor 1.
    pub fn new(scheme: Scheme) -> Self {
        SimConfig {
            n_devices: Self::DEFAULT_SLOTS,
            n_slots: Self::DEFAULT_SLOTS,
            packets_per_device: Self::DEFAULT_PACKETS,
            learning_rate: Self::DEFAULT_LEARNING_RATE,
            payload_bits: Self::DEFAULT_PAYLOAD_BITS,
            header_bits: scheme.default_header_bits(),
            scheme,
            max_frames: Self::DEFAULT_MAX_FRAMES,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_devices < 1 {
            return Err(Error::invalid("n_devices", "must be at least 1"));
        }
        if self.n_slots < 1 {
            return Err(Error::invalid("n_slots", "must be at least 1"));
        }
        if self.packets_per_device < 1 {
            return Err(Error::invalid("packets_per_device", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::invalid(
                "learning_rate",
                format!("{} is outside (0, 1]", self.learning_rate),
            ));
        }
        if self.payload_bits < 1 {
            return Err(Error::invalid("payload_bits", "must be at least 1"));
        }
        if self.header_bits < 1 {
            return Err(Error::invalid("header_bits", "must be at least 1"));
        }
        if self.scheme != Scheme::Collaborative && self.header_bits != 1 {
            return Err(Error::invalid(
                "header_bits",
                format!(
                    "{} scheme sends a one-bit reward, header_bits must be 1 (got {})",
                    self.scheme, self.header_bits
                ),
            ));
        }
        if self.scheme == Scheme::Collaborative && self.header_bits > 52 {
            return Err(Error::invalid(
                "header_bits",
                "quantizer width above 52 bits is not representable",
            ));
        }
        if self.max_frames < 1 {
            return Err(Error::invalid("max_frames", "must be at least 1"));
        }
        if self.n_devices.saturating_mul(self.n_slots) > Self::MAX_TABLE_ENTRIES {
            return Err(Error::invalid(
                "n_devices",
                format!(
                    "{} x {} Q-table exceeds {} entries",
                    self.n_devices,
                    self.n_slots,
                    Self::MAX_TABLE_ENTRIES
                ),
            ));
        }
        Ok(())
    }

    pub fn reward_scheme(&self) -> RewardScheme {
        match self.scheme {
            Scheme::Independent => RewardScheme::Independent,
            Scheme::Collaborative => RewardScheme::Collaborative {
                quant_bits: self.header_bits,
            },
            Scheme::PacketBased => RewardScheme::PacketBased,
        }
    }

    pub fn loading_factor(&self) -> f64 {
        self.n_devices as f64 / self.n_slots as f64
    }

    /// `p / (b + p)`, the best throughput any episode can reach.
    pub fn throughput_ceiling(&self) -> f64 {
        let p = self.payload_bits as f64;
        p / (self.header_bits as f64 + p)
    }
}

/// Pick uniformly among the maximal entries of `q_row`.
///
/// A unique maximum is returned without drawing from `rng`.
pub fn select_slot<R: Rng + ?Sized>(q_row: &[f64], rng: &mut R) -> usize {
    assert!(!q_row.is_empty(), "select_slot on an empty Q-row");
    let max = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = q_row
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v == max)
        .map(|(k, _)| k)
        .collect();
    match ties.len() {
        1 => ties[0],
        m => ties[rng.random_range(0..m as u32) as usize],
    }
}

/// Dense N x K table of slot preferences, all zero at construction.
///
/// Each row is the leaf level of a tournament tree whose nodes hold the
/// maximum below them and how many leaves attain it, so an update and a
/// uniform pick among the maximal slots both cost O(log K). A pick draws
/// the same number as [`select_slot`] on the same row and maps it to the
/// same slot.
#[derive(Debug, Clone)]
pub struct QTable {
    n_devices: usize,
    n_slots: usize,
    /// Leaves per row tree, `n_slots` rounded up to a power of two.
    width: usize,
    max: Vec<f64>,
    count: Vec<u32>,
}

impl QTable {
    pub fn new(n_devices: usize, n_slots: usize) -> Result<Self> {
        if n_devices == 0 || n_slots == 0 {
            return Err(Error::contract(format!(
                "Q-table needs at least one row and one column (got {n_devices}x{n_slots})"
            )));
        }
        let width = n_slots.next_power_of_two();
        let mut max = vec![f64::NEG_INFINITY; 2 * width];
        let mut count = vec![0u32; 2 * width];
        for leaf in width..width + n_slots {
            max[leaf] = 0.0;
            count[leaf] = 1;
        }
        for node in (1..width).rev() {
            (max[node], count[node]) = combine(&max, &count, node);
        }
        Ok(QTable {
            n_devices,
            n_slots,
            width,
            max: max.repeat(n_devices),
            count: count.repeat(n_devices),
        })
    }

    pub fn n_devices(&self) -> usize {
        self.n_devices
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    #[inline]
    fn tree(&self, device: usize) -> (&[f64], &[u32]) {
        let base = device * 2 * self.width;
        let end = base + 2 * self.width;
        (&self.max[base..end], &self.count[base..end])
    }

    pub fn row(&self, device: usize) -> &[f64] {
        let (max, _) = self.tree(device);
        &max[self.width..self.width + self.n_slots]
    }

    pub fn get(&self, device: usize, slot: usize) -> f64 {
        self.row(device)[slot]
    }

    /// Ascending indices of the maximal entries of `device`'s row.
    pub fn argmax_set(&self, device: usize) -> Vec<u32> {
        let top = self.tree(device).0[1];
        self.row(device)
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v == top)
            .map(|(k, _)| k as u32)
            .collect()
    }

    /// Same distribution and randomness use as `select_slot(self.row(device))`.
    pub fn choose<R: Rng + ?Sized>(&self, device: usize, rng: &mut R) -> usize {
        let (max, count) = self.tree(device);
        let mut rank = match count[1] {
            1 => 0,
            m => rng.random_range(0..m),
        };
        let mut node = 1;
        while node < self.width {
            let left = 2 * node;
            if max[left] == max[node] {
                if rank < count[left] {
                    node = left;
                    continue;
                }
                rank -= count[left];
            }
            node = left + 1;
        }
        node - self.width
    }

    /// Step entry (device, slot) toward `target` with rate `alpha`.
    pub fn update(&mut self, device: usize, slot: usize, alpha: f64, target: f64) {
        let width = self.width;
        let base = device * 2 * width;
        let max = &mut self.max[base..base + 2 * width];
        let count = &mut self.count[base..base + 2 * width];
        let mut node = width + slot;
        max[node] = rewards::apply_update(max[node], alpha, target);
        while node > 1 {
            node /= 2;
            (max[node], count[node]) = combine(max, count, node);
        }
    }
}

#[inline]
fn combine(max: &[f64], count: &[u32], node: usize) -> (f64, u32) {
    let (l, r) = (2 * node, 2 * node + 1);
    if max[l] > max[r] {
        (max[l], count[l])
    } else if max[r] > max[l] {
        (max[r], count[r])
    } else {
        (max[l], count[l] + count[r])
    }
}

/// Remaining packets and completion frame per device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceState {
    packets: u32,
    remaining: Vec<u32>,
    finish_frame: Vec<Option<u64>>,
}

impl DeviceState {
    pub fn new(n_devices: usize, packets: u32) -> Self {
        DeviceState {
            packets,
            remaining: vec![packets; n_devices],
            finish_frame: vec![None; n_devices],
        }
    }

    pub fn packets(&self) -> u32 {
        self.packets
    }

    pub fn remaining(&self) -> &[u32] {
        &self.remaining
    }

    pub fn finish_frames(&self) -> &[Option<u64>] {
        &self.finish_frame
    }

    pub fn is_active(&self, device: usize) -> bool {
        self.remaining[device] > 0
    }

    pub fn active_count(&self) -> usize {
        self.remaining.iter().filter(|&&r| r > 0).count()
    }

    pub fn total_remaining(&self) -> u64 {
        self.remaining.iter().map(|&r| r as u64).sum()
    }

    /// Deliver one packet for `device` during `frame` (1-based).
    pub fn deliver(&mut self, device: usize, frame: u64) {
        let left = &mut self.remaining[device];
        assert!(*left > 0, "device {device} has nothing left to send");
        *left -= 1;
        if *left == 0 {
            debug_assert!(self.finish_frame[device].is_none());
            self.finish_frame[device] = Some(frame);
        }
    }
}

/// Per-slot occupant lists (the sets psi_k), stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occupancy {
    offsets: Vec<usize>,
    devices: Vec<usize>,
}

impl Occupancy {
    pub fn n_slots(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Devices that chose `slot`, ascending.
    pub fn slot(&self, slot: usize) -> &[usize] {
        &self.devices[self.offsets[slot]..self.offsets[slot + 1]]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.n_slots()).map(move |k| self.slot(k))
    }

    /// Sum of all occupancy sizes.
    pub fn total(&self) -> usize {
        self.devices.len()
    }
}

/// Group devices by chosen slot. `None` marks a device that sits the frame out.
pub fn build_occupancy(choices: &[Option<usize>], n_slots: usize) -> Result<Occupancy> {
    let mut counts = vec![0usize; n_slots + 1];
    for (device, choice) in choices.iter().enumerate() {
        if let Some(k) = *choice {
            if k >= n_slots {
                return Err(Error::contract(format!(
                    "device {} chose slot {} but the frame has {n_slots} slots",
                    device + 1,
                    k + 1
                )));
            }
            counts[k + 1] += 1;
        }
    }
    for k in 0..n_slots {
        counts[k + 1] += counts[k];
    }
    let offsets = counts.clone();
    let mut cursor = counts;
    let mut devices = vec![0usize; offsets[n_slots]];
    for (device, choice) in choices.iter().enumerate() {
        if let Some(k) = *choice {
            devices[cursor[k]] = device;
            cursor[k] += 1;
        }
    }
    Ok(Occupancy { offsets, devices })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotOutcome {
    Idle,
    Success,
    Collision,
}

/// Outcome of a slot, a function of the occupant count alone.
pub fn classify_slot(occupants: &[usize]) -> SlotOutcome {
    match occupants.len() {
        0 => SlotOutcome::Idle,
        1 => SlotOutcome::Success,
        _ => SlotOutcome::Collision,
    }
}

/// What happened in one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameResult {
    /// Chosen slot per device; `None` for finished devices.
    pub choices: Vec<Option<usize>>,
    pub occupancy: Occupancy,
    pub successes: usize,
    pub collisions: usize,
}

/// Counters accumulated over one episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeStats {
    /// S
    pub total_successes: u64,
    /// F, device transmissions lost to collisions
    pub total_failures: u64,
    /// T
    pub total_slots: u64,
    pub frames_used: u64,
    /// Frame (1-based) in which each device delivered its last packet.
    pub finish_frames: Vec<Option<u64>>,
    pub converged: bool,
}
