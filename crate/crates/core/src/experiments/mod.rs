//! Monte Carlo sweeps, figure presets and the exact small-case oracle.

mod oracle;
mod presets;
mod sweep;

pub use oracle::{markov_oracle, OracleResult};
pub use presets::{preset, Preset, DEFAULT_REPS};
pub use sweep::{devices_for_load, run_sweep, Axis, SweepPoint, SweepResult, SweepRow, SweepSpec};
