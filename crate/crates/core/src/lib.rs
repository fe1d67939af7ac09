//! Monte Carlo simulator of Q-learning random access in a slotted
//! machine-type network.
//!
//! N devices share frames of K slots. Every frame each device with packets
//! left transmits in the slot its Q-row prefers (ties broken uniformly); a
//! slot with one occupant is a success, more than one a collision. After
//! the frame every transmitter steps its Q-entry toward a reward target:
//!
//! * [`RewardScheme::Independent`]: +1 on success, -1 on collision.
//! * [`RewardScheme::Collaborative`]: collisions are penalised by the
//!   slot's congestion level, rounded up onto a `b`-bit grid.
//! * [`RewardScheme::PacketBased`]: collisions are penalised by the share
//!   of its packets the device has already delivered.
//!
//! [`run_episode`] plays one episode, [`experiments::run_sweep`] runs
//! parameter sweeps in parallel with reproducible per-episode streams, and
//! [`experiments::markov_oracle`] solves tiny cases exactly.

pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod report;
pub mod rewards;

pub use engine::{episode_rng, run_episode, run_frame, EpisodeOutcome};
pub use error::{Error, Result};
pub use metrics::MetricRecord;
pub use model::{
    build_occupancy, classify_slot, select_slot, DeviceState, EpisodeStats, FrameResult,
    Occupancy, QTable, Scheme, SimConfig, SlotOutcome,
};
pub use rewards::{RewardScheme, TxOutcome, UpdateTarget};
