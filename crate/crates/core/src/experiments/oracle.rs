//! Exact expected latency for tiny single-packet scenarios.
//!
//! With one packet per device a success removes the device, so a row only
//! ever receives collision updates. When every collision target is the same
//! constant `c`, an entry hit `j` times holds `c * (1 - (1 - alpha)^j)`,
//! which orders entries by hit count alone. A row is therefore captured by
//! the set of slots hit once more than its least-hit slots; once every
//! slot is in the set the row is tied again and the set resets. The joint
//! state (a multiset of such rows for the devices still active) is finite,
//! and expected frames to absorption solve a linear system.

use std::collections::{BTreeMap, HashMap, VecDeque};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rewards::RewardScheme;

/// Joint choices enumerated per state are capped at this many.
const MAX_JOINT_CHOICES: usize = 4096;
const MAX_STATES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// Expected frames until every device has delivered its packet.
    pub expected_frames: f64,
    /// Expected total slots, `K * expected_frames`.
    pub expected_slots: f64,
    /// Transient states in the chain.
    pub states: usize,
}

/// Sorted row masks of the active devices.
type State = Vec<u32>;

struct Chain {
    n_slots: usize,
    full: u32,
    /// Collisions leave rows untouched (target 0 from an all-zero start).
    static_rows: bool,
    /// With alpha = 1 a fully hit row stays fully hit instead of resetting.
    sticky_full: bool,
}

impl Chain {
    fn candidates(&self, mask: u32) -> Vec<usize> {
        if mask == self.full {
            return (0..self.n_slots).collect();
        }
        (0..self.n_slots).filter(|k| mask & (1 << k) == 0).collect()
    }

    fn hit(&self, mask: u32, slot: usize) -> u32 {
        if self.static_rows {
            return mask;
        }
        let next = mask | (1 << slot);
        if next == self.full && !self.sticky_full {
            0
        } else {
            next
        }
    }

    fn transitions(&self, state: &State) -> BTreeMap<State, f64> {
        let options: Vec<Vec<usize>> = state.iter().map(|&m| self.candidates(m)).collect();
        let prob_each: f64 = options.iter().map(|o| 1.0 / o.len() as f64).product();

        let mut out = BTreeMap::new();
        let mut pick = vec![0usize; state.len()];
        loop {
            let mut counts = vec![0usize; self.n_slots];
            for (d, &i) in pick.iter().enumerate() {
                counts[options[d][i]] += 1;
            }
            let mut next: State = pick
                .iter()
                .enumerate()
                .filter_map(|(d, &i)| {
                    let slot = options[d][i];
                    (counts[slot] > 1).then(|| self.hit(state[d], slot))
                })
                .collect();
            next.sort_unstable();
            *out.entry(next).or_insert(0.0) += prob_each;

            // odometer over the joint choice
            let mut d = 0;
            loop {
                if d == pick.len() {
                    return out;
                }
                pick[d] += 1;
                if pick[d] < options[d].len() {
                    break;
                }
                pick[d] = 0;
                d += 1;
            }
        }
    }
}

/// Exact expected latency of an `n_devices` x `n_slots` scenario with one
/// packet per device, from an all-zero Q-table.
///
/// Rejects schemes whose collision penalty depends on the number of
/// colliders (the chain is then not finite) and scenarios whose joint
/// choice space exceeds a few thousand outcomes. Returns an infinite
/// expectation when some reachable state can never empty.
pub fn markov_oracle(
    n_devices: usize,
    n_slots: usize,
    scheme: RewardScheme,
    alpha: f64,
) -> Result<OracleResult> {
    if n_devices == 0 || n_slots == 0 {
        return Err(Error::OracleUnsupported("need at least one device and one slot".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OracleUnsupported(format!("learning rate {alpha} outside (0, 1]")));
    }
    scheme.validate()?;
    if n_slots > 16 {
        return Err(Error::OracleUnsupported(format!("{n_slots} slots is too many to enumerate")));
    }
    let joint = (n_slots as f64).powi(n_devices as i32);
    if joint > MAX_JOINT_CHOICES as f64 {
        return Err(Error::OracleUnsupported(format!(
            "{n_slots}^{n_devices} joint slot choices per frame exceed {MAX_JOINT_CHOICES}"
        )));
    }

    let mut targets = (2..=n_devices).map(|m| scheme.collision_target(m, n_devices, 1, 1));
    let target = match targets.next() {
        None => -1.0,
        Some(first) => {
            let first = first?;
            for t in targets {
                if t? != first {
                    return Err(Error::OracleUnsupported(format!(
                        "{scheme} penalises collisions by occupancy at N={n_devices}; \
                         the reachable Q-values do not form a finite chain"
                    )));
                }
            }
            first
        }
    };

    let chain = Chain {
        n_slots,
        full: if n_slots == 32 { u32::MAX } else { (1u32 << n_slots) - 1 },
        static_rows: target == 0.0,
        sticky_full: alpha == 1.0,
    };

    // breadth-first enumeration of transient states
    let start: State = vec![0; n_devices];
    let mut index: HashMap<State, usize> = HashMap::new();
    let mut order: Vec<State> = Vec::new();
    let mut edges: Vec<BTreeMap<State, f64>> = Vec::new();
    let mut queue = VecDeque::from([start.clone()]);
    index.insert(start.clone(), 0);
    order.push(start);
    while let Some(state) = queue.pop_front() {
        let tr = chain.transitions(&state);
        for next in tr.keys() {
            if !next.is_empty() && !index.contains_key(next) {
                if order.len() >= MAX_STATES {
                    return Err(Error::OracleUnsupported(format!(
                        "more than {MAX_STATES} reachable states"
                    )));
                }
                index.insert(next.clone(), order.len());
                order.push(next.clone());
                queue.push_back(next.clone());
            }
        }
        edges.push(tr);
    }

    let n = order.len();
    if !all_reach_absorption(&order, &index, &edges) {
        return Ok(OracleResult {
            expected_frames: f64::INFINITY,
            expected_slots: f64::INFINITY,
            states: n,
        });
    }

    // (I - P) e = 1 over transient states
    let mut a = DMatrix::<f64>::identity(n, n);
    for (i, tr) in edges.iter().enumerate() {
        for (next, &p) in tr {
            if let Some(&j) = index.get(next) {
                a[(i, j)] -= p;
            }
        }
    }
    let b = DVector::<f64>::from_element(n, 1.0);
    let e = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::OracleUnsupported("singular absorption system".into()))?;
    let frames = e[0];
    Ok(OracleResult {
        expected_frames: frames,
        expected_slots: frames * n_slots as f64,
        states: n,
    })
}

fn all_reach_absorption(
    order: &[State],
    index: &HashMap<State, usize>,
    edges: &[BTreeMap<State, f64>],
) -> bool {
    let n = order.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut good = vec![false; n];
    let mut queue = VecDeque::new();
    for (i, tr) in edges.iter().enumerate() {
        for (next, &p) in tr {
            if p <= 0.0 {
                continue;
            }
            match index.get(next) {
                Some(&j) => reverse[j].push(i),
                None if !good[i] => {
                    good[i] = true;
                    queue.push_back(i);
                }
                None => {}
            }
        }
    }
    while let Some(j) = queue.pop_front() {
        for &i in &reverse[j] {
            if !good[i] {
                good[i] = true;
                queue.push_back(i);
            }
        }
    }
    good.into_iter().all(|g| g)
}

#[cfg(test)]
mod tests {
    use super::*;

    const IND: RewardScheme = RewardScheme::Independent;
    const PAC: RewardScheme = RewardScheme::PacketBased;

    #[test]
    fn two_by_two_values() {
        for alpha in [0.05, 0.1, 0.5, 0.9] {
            let pac = markov_oracle(2, 2, PAC, alpha).unwrap();
            assert!((pac.expected_slots - 4.0).abs() < 1e-12);
            let ind = markov_oracle(2, 2, IND, alpha).unwrap();
            assert!((ind.expected_slots - 6.0).abs() < 1e-12);
            assert!((ind.expected_frames - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lone_device_takes_one_frame() {
        for scheme in [IND, PAC, RewardScheme::Collaborative { quant_bits: 4 }] {
            let r = markov_oracle(1, 2, scheme, 0.1).unwrap();
            assert_eq!(r.expected_slots, 2.0);
        }
    }

    #[test]
    fn collaborative_with_two_devices_matches_independent() {
        let col = markov_oracle(2, 3, RewardScheme::Collaborative { quant_bits: 4 }, 0.1).unwrap();
        let ind = markov_oracle(2, 3, IND, 0.1).unwrap();
        assert!((col.expected_frames - ind.expected_frames).abs() < 1e-12);
    }

    #[test]
    fn packet_based_is_memoryless() {
        // every frame is a fresh uniform draw; success needs distinct slots
        let r = markov_oracle(3, 3, PAC, 0.1).unwrap();
        assert_eq!(r.states, 2);
        // P(3 distinct) = 6/27, P(exactly one collision pair) = 18/27 leaving 2 devices
        // E2 = 2 frames with K = 3: P(distinct) = 2/3 -> 1.5 frames
        // E3 = 1 + (18/27) E2 + (3/27) E3
        let e2 = 1.5;
        let e3 = (1.0 + 18.0 / 27.0 * e2) / (1.0 - 3.0 / 27.0);
        assert!((r.expected_frames - e3).abs() < 1e-12);
    }

    #[test]
    fn saturated_slot_never_absorbs() {
        let r = markov_oracle(2, 1, IND, 0.1).unwrap();
        assert!(r.expected_frames.is_infinite());
    }

    #[test]
    fn occupancy_dependent_penalty_is_rejected() {
        let err = markov_oracle(3, 3, RewardScheme::Collaborative { quant_bits: 2 }, 0.1);
        assert!(matches!(err, Err(Error::OracleUnsupported(_))));
        // one bit rounds every congestion level up to 1
        assert!(markov_oracle(3, 3, RewardScheme::Collaborative { quant_bits: 1 }, 0.1).is_ok());
    }

    #[test]
    fn oversized_scenarios_are_rejected() {
        assert!(matches!(
            markov_oracle(8, 3, IND, 0.1),
            Err(Error::OracleUnsupported(_))
        ));
    }

    #[test]
    fn full_step_rows_stay_tied() {
        // with alpha = 1 two devices on two slots after a double collision
        // hold -1 on one slot and 0 on the other, then tie at -1 for good
        let r = markov_oracle(2, 2, IND, 1.0).unwrap();
        // from the all-tied state: 1/2 done, 1/2 -> forced collision -> all -1 tied,
        // which behaves like the start but stays tied: E = 1 + 1/2 (1 + E') where
        // E' = 1 + 1/2 E' -> E' = 2
        assert!((r.expected_frames - 2.5).abs() < 1e-12);
    }
}
