//! Seeded arrival generation and spawn-point admission.
//!
//! Each direction draws its inter-arrival gaps from its own ChaCha8 stream.
//! The stream seed is `splitmix64(seed ^ (index * 0x9E37_79B9_7F4A_7C15))`
//! where `index` is the direction number 1..=4, so changing one direction's
//! mean gap never perturbs the other directions' draws.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{VehicleParams, VehicleState};
use crate::error::ConfigError;
use crate::geometry::Direction;

/// Half-width of the uniform inter-arrival support, in seconds.
pub const JITTER: f64 = 0.5;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the per-direction stream derived from the scenario seed.
pub fn direction_seed(seed: u64, direction: Direction) -> u64 {
    splitmix64(seed ^ u64::from(direction.index()).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalProcess {
    pub direction: Direction,
    /// Mean inter-arrival time. `f64::INFINITY` disables the direction.
    pub mean_interarrival: f64,
    pub spawn_window: f64,
    pub seed: u64,
}

pub fn validate_mean_interarrival(field: &str, t: f64) -> Result<(), ConfigError> {
    if t.is_nan() || t <= JITTER {
        return Err(ConfigError::invalid(
            field,
            format!("mean inter-arrival must exceed 0.5 s so the support [T-0.5, T+0.5] stays positive, got {t}"),
        ));
    }
    Ok(())
}

/// Arrival times in `[0, spawn_window]`: cumulative sums of i.i.d. gaps drawn
/// uniformly from `[T - 0.5, T + 0.5]`.
pub fn generate_arrivals(process: &ArrivalProcess) -> Result<Vec<f64>, ConfigError> {
    let field = format!("T{}", process.direction);
    validate_mean_interarrival(&field, process.mean_interarrival)?;
    if !(process.spawn_window.is_finite() && process.spawn_window >= 0.0) {
        return Err(ConfigError::invalid("spawn_window", "must be a finite non-negative duration"));
    }
    if process.mean_interarrival.is_infinite() {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(direction_seed(process.seed, process.direction));
    let lo = process.mean_interarrival - JITTER;
    let hi = process.mean_interarrival + JITTER;
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        t += rng.gen_range(lo..=hi);
        if t > process.spawn_window {
            break;
        }
        times.push(t);
    }
    Ok(times)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub id: u64,
    pub direction: Direction,
    pub scheduled: f64,
}

/// What happened at the spawn points during one tick.
#[derive(Debug, Default)]
pub struct SpawnOutcome {
    /// Arrivals whose scheduled time passed during this tick.
    pub released: Vec<Arrival>,
    pub spawned: Vec<VehicleState>,
}

/// Per-direction FIFO of scheduled arrivals not yet on the road.
#[derive(Debug, Clone)]
pub struct SpawnQueue {
    queues: [VecDeque<Arrival>; 4],
    /// Number of arrivals at the head of each queue already due.
    due: [usize; 4],
}

impl SpawnQueue {
    /// Builds the queues and assigns vehicle ids in order of scheduled time,
    /// ties broken by direction index.
    pub fn new(schedules: [Vec<f64>; 4]) -> Self {
        let mut all: Vec<(f64, Direction)> = Direction::ALL
            .iter()
            .flat_map(|&d| schedules[d.slot()].iter().map(move |&t| (t, d)))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut queues: [VecDeque<Arrival>; 4] = Default::default();
        for (id, (scheduled, direction)) in all.into_iter().enumerate() {
            queues[direction.slot()].push_back(Arrival {
                id: id as u64,
                direction,
                scheduled,
            });
        }
        SpawnQueue { queues, due: [0; 4] }
    }

    pub fn from_processes(processes: &[ArrivalProcess; 4]) -> Result<Self, ConfigError> {
        let mut schedules: [Vec<f64>; 4] = Default::default();
        for p in processes {
            schedules[p.direction.slot()] = generate_arrivals(p)?;
        }
        Ok(SpawnQueue::new(schedules))
    }

    pub fn total_remaining(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    /// Arrivals already due but still held at the spawn point.
    pub fn waiting(&self) -> usize {
        self.due.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_remaining() == 0
    }

    pub fn remaining(&self, direction: Direction) -> impl Iterator<Item = &Arrival> {
        self.queues[direction.slot()].iter()
    }

    /// Releases arrivals due by `t` and spawns at most one vehicle per
    /// direction, at the spawn point and at max speed, when the rearmost
    /// vehicle of that direction leaves room for it.
    pub fn try_spawn(
        &mut self,
        rearmost: [Option<&VehicleState>; 4],
        t: f64,
        params: &VehicleParams,
        dt: f64,
    ) -> SpawnOutcome {
        let mut outcome = SpawnOutcome::default();
        for d in Direction::ALL {
            let slot = d.slot();
            let queue = &self.queues[slot];
            while self.due[slot] < queue.len() && queue[self.due[slot]].scheduled <= t {
                outcome.released.push(queue[self.due[slot]]);
                self.due[slot] += 1;
            }
            if self.due[slot] == 0 || !spawn_admits(rearmost[slot], params, dt) {
                continue;
            }
            let arrival = self.queues[slot].pop_front().expect("due arrival present");
            self.due[slot] -= 1;
            outcome.spawned.push(VehicleState {
                scheduled_spawn: arrival.scheduled,
                actual_spawn: t,
                ..VehicleState::new(arrival.id, d, 0.0, params.max_speed)
            });
        }
        outcome
    }
}

/// A new vehicle entering at max speed needs the rearmost vehicle's rear
/// bumper at least one headway plus one tick of travel ahead, after charging
/// any stopping-distance surplus over a slower rearmost vehicle.
pub fn spawn_admits(rearmost: Option<&VehicleState>, params: &VehicleParams, dt: f64) -> bool {
    let Some(rear_vehicle) = rearmost else {
        return true;
    };
    let rear = rear_vehicle.rear_pos(params);
    let surplus =
        (params.stopping_distance(params.max_speed) - params.stopping_distance(rear_vehicle.speed)).max(0.0);
    rear - surplus >= params.min_headway + params.max_speed * dt
}
