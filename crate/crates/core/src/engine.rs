//! Episode driver: repeat frames until every device has delivered all of
//! its packets or the frame cap is reached.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{
    build_occupancy, classify_slot, DeviceState, EpisodeStats, FrameResult, QTable, SimConfig,
    SlotOutcome,
};
use crate::rewards::UpdateTarget;

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub stats: EpisodeStats,
    pub q_final: QTable,
}

/// Random stream for episode `stream` under `master_seed`.
///
/// Streams are ChaCha8 stream ids, so episode `i` draws the same numbers no
/// matter which worker runs it or in what order.
pub fn episode_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Play one frame: active devices pick slots, the central node classifies
/// each slot, and one update target is produced per transmitting device.
///
/// Nothing is mutated; the caller applies the targets.
pub fn run_frame<R: Rng + ?Sized>(
    q: &QTable,
    devices: &DeviceState,
    config: &SimConfig,
    rng: &mut R,
) -> Result<(FrameResult, Vec<UpdateTarget>)> {
    let scheme = config.reward_scheme();
    let remaining = devices.remaining();

    let choices: Vec<Option<usize>> = (0..config.n_devices)
        .map(|n| (remaining[n] > 0).then(|| q.choose(n, rng)))
        .collect();
    let occupancy = build_occupancy(&choices, config.n_slots)?;

    let mut targets = Vec::with_capacity(occupancy.total());
    let mut successes = 0;
    let mut collisions = 0;
    for (slot, occupants) in occupancy.iter().enumerate() {
        match classify_slot(occupants) {
            SlotOutcome::Idle => {}
            SlotOutcome::Success => {
                successes += 1;
                targets.push(UpdateTarget {
                    device: occupants[0],
                    slot,
                    target: 1.0,
                });
            }
            SlotOutcome::Collision => {
                collisions += 1;
                for &device in occupants {
                    let target = scheme.collision_target(
                        occupants.len(),
                        config.n_devices,
                        remaining[device],
                        config.packets_per_device,
                    )?;
                    targets.push(UpdateTarget {
                        device,
                        slot,
                        target,
                    });
                }
            }
        }
    }

    Ok((
        FrameResult {
            choices,
            occupancy,
            successes,
            collisions,
        },
        targets,
    ))
}

/// Run a full episode from an all-zero Q-table.
///
/// Hitting `max_frames` is not an error: the returned stats carry
/// `converged = false`.
pub fn run_episode<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<EpisodeOutcome> {
    config.validate()?;
    let mut q = QTable::new(config.n_devices, config.n_slots)?;
    let mut devices = DeviceState::new(config.n_devices, config.packets_per_device);
    let mut outstanding = devices.total_remaining();

    let mut stats = EpisodeStats {
        total_successes: 0,
        total_failures: 0,
        total_slots: 0,
        frames_used: 0,
        finish_frames: Vec::new(),
        converged: false,
    };

    while outstanding > 0 && stats.frames_used < config.max_frames {
        stats.frames_used += 1;
        let frame = stats.frames_used;
        let (result, targets) = run_frame(&q, &devices, config, rng)?;
        debug_assert_eq!(result.occupancy.total(), devices.active_count());

        stats.total_slots += config.n_slots as u64;
        stats.total_successes += result.successes as u64;
        stats.total_failures += (targets.len() - result.successes) as u64;

        for t in &targets {
            q.update(t.device, t.slot, config.learning_rate, t.target);
        }
        for occupants in result.occupancy.iter() {
            if let [device] = *occupants {
                devices.deliver(device, frame);
            }
        }
        outstanding -= result.successes as u64;
    }

    stats.converged = outstanding == 0;
    stats.finish_frames = devices.finish_frames().to_vec();
    Ok(EpisodeOutcome { stats, q_final: q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scheme;

    fn small(scheme: Scheme, n: usize, k: usize, l: u32) -> SimConfig {
        SimConfig {
            n_devices: n,
            n_slots: k,
            packets_per_device: l,
            max_frames: 10_000,
            ..SimConfig::new(scheme)
        }
    }

    #[test]
    fn lone_device_never_collides() {
        for scheme in Scheme::ALL {
            let cfg = small(scheme, 1, 1, 5);
            let out = run_episode(&cfg, &mut episode_rng(9, 0)).unwrap();
            let s = out.stats;
            assert!(s.converged);
            assert_eq!((s.frames_used, s.total_successes, s.total_failures, s.total_slots), (5, 5, 0, 5));
            assert_eq!(s.finish_frames, vec![Some(5)]);
        }
    }

    #[test]
    fn two_devices_one_slot_never_converge() {
        for scheme in Scheme::ALL {
            let cfg = SimConfig {
                max_frames: 500,
                ..small(scheme, 2, 1, 1)
            };
            let s = run_episode(&cfg, &mut episode_rng(1, 0)).unwrap().stats;
            assert!(!s.converged);
            assert_eq!(s.frames_used, 500);
            assert_eq!(s.total_slots, 500);
            assert_eq!(s.total_successes, 0);
            assert_eq!(s.total_failures, 1000);
        }
    }

    #[test]
    fn frames_are_reproducible() {
        let cfg = small(Scheme::Independent, 8, 6, 3);
        let q = QTable::new(8, 6).unwrap();
        let d = DeviceState::new(8, 3);
        let a = run_frame(&q, &d, &cfg, &mut episode_rng(42, 3)).unwrap();
        let b = run_frame(&q, &d, &cfg, &mut episode_rng(42, 3)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn single_active_device_gets_success_target() {
        let cfg = small(Scheme::PacketBased, 3, 4, 2);
        let q = QTable::new(3, 4).unwrap();
        let mut d = DeviceState::new(3, 2);
        for frame in 1..=2 {
            d.deliver(0, frame);
            d.deliver(2, frame);
        }
        let (res, targets) = run_frame(&q, &d, &cfg, &mut episode_rng(0, 0)).unwrap();
        assert_eq!(res.choices.iter().flatten().count(), 1);
        assert_eq!(res.choices[0], None);
        assert_eq!(targets.len(), 1);
        assert_eq!(targets[0].device, 1);
        assert_eq!(targets[0].target, 1.0);
    }

    #[test]
    fn forced_collision_gives_two_collision_targets() {
        let cfg = small(Scheme::Independent, 2, 3, 1);
        let mut q = QTable::new(2, 3).unwrap();
        q.update(0, 1, 0.5, 1.0);
        q.update(1, 1, 0.5, 1.0);
        let d = DeviceState::new(2, 1);
        let (res, targets) = run_frame(&q, &d, &cfg, &mut episode_rng(0, 0)).unwrap();
        assert_eq!(res.occupancy.slot(1), &[0, 1]);
        assert_eq!((res.successes, res.collisions), (0, 1));
        assert_eq!(targets.len(), 2);
        assert!(targets.iter().all(|t| t.slot == 1 && t.target == -1.0));
    }

    #[test]
    fn episodes_are_deterministic() {
        let cfg = small(Scheme::Collaborative, 30, 20, 10);
        let a = run_episode(&cfg, &mut episode_rng(5, 17)).unwrap().stats;
        let b = run_episode(&cfg, &mut episode_rng(5, 17)).unwrap().stats;
        assert_eq!(a, b);
        let c = run_episode(&cfg, &mut episode_rng(5, 18)).unwrap().stats;
        assert_ne!(a.finish_frames, c.finish_frames);
    }
}
