//! The fixed-step simulation loop.
//!
//! Every tick runs the same phases in the same order:
//!
//! 1. snapshot all on-road vehicles;
//! 2. ask the policy for PASS/BRAKE on every uncommitted vehicle;
//! 3. derive one command per vehicle: car-following against the same-lane
//!    leader, and for BRAKE also against the entry line, keeping the more
//!    restrictive of the two;
//! 4. integrate every vehicle;
//! 5. mark vehicles whose front bumper crossed the entry line as committed;
//! 6. despawn vehicles whose rear bumper passed the end of the path;
//! 7. admit queued arrivals at the spawn points;
//! 8. advance the clock by one tick and check the safety invariants.
//!
//! The clock is an integer tick count; time in seconds is `ticks / 10`, so
//! it never accumulates rounding error.

use std::collections::VecDeque;
use std::fmt;

use crate::config::ScenarioConfig;
use crate::dynamics::{car_following_accel, step, AccelCommand, FollowTarget, VehicleParams, VehicleState};
use crate::error::SimError;
use crate::geometry::{Axis, Direction, IntersectionGeometry};
use crate::metrics::{delay_of, DelayRecord};
use crate::policy::{Decision, Phase, Policy};
use crate::traffic::SpawnQueue;

const TICKS_PER_SECOND: u64 = 10;

pub fn tick_time(tick: u64) -> f64 {
    tick as f64 / TICKS_PER_SECOND as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Scheduled,
    Spawned,
    Committed,
    Cleared,
    Despawned,
    DecisionChanged,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Scheduled => "scheduled",
            EventKind::Spawned => "spawned",
            EventKind::Committed => "committed",
            EventKind::Cleared => "cleared",
            EventKind::Despawned => "despawned",
            EventKind::DecisionChanged => "decision-changed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub vehicle: u64,
    pub kind: EventKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Bumper gap below the headway minus one tick of travel.
    Headway,
    /// Two vehicles of one lane overlap.
    Overlap,
    /// Conflicting directions inside the box at once.
    MutualExclusion,
    /// Entry line crossed on red.
    RedLight,
    /// Car-following found no safe command.
    CarFollowing,
    /// Arrivals not accounted for as queued, on road or despawned.
    Conservation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Vehicle {
    state: VehicleState,
    decision: Option<Decision>,
    /// Time the front bumper reached the end of the path.
    exit_time: Option<f64>,
    cleared: bool,
}

/// Everything a finished run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub config: ScenarioConfig,
    /// One record per despawned vehicle, sorted by id.
    pub records: Vec<DelayRecord>,
    pub events: Vec<Event>,
    pub violations: Vec<Violation>,
    /// Vehicles still queued or on the road when the drain cap hit.
    pub non_drained: Vec<u64>,
    pub spawned: usize,
    pub final_time: f64,
}

impl SimResult {
    pub fn drained(&self) -> bool {
        self.non_drained.is_empty()
    }
}

pub struct Simulation {
    config: ScenarioConfig,
    policy: Policy,
    tick: u64,
    /// Per direction, frontmost vehicle first.
    lanes: [VecDeque<Vehicle>; 4],
    queue: SpawnQueue,
    records: Vec<DelayRecord>,
    events: Vec<Event>,
    violations: Vec<Violation>,
    released: usize,
    spawned: usize,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        config.validate()?;
        let queue = SpawnQueue::from_processes(&config.arrival_processes())?;
        Ok(Simulation {
            policy: config.policy(),
            config,
            tick: 0,
            lanes: Default::default(),
            queue,
            records: Vec::new(),
            events: Vec::new(),
            violations: Vec::new(),
            released: 0,
            spawned: 0,
        })
    }

    pub fn time(&self) -> f64 {
        tick_time(self.tick)
    }

    pub fn ticks(&self) -> u64 {
        self.tick
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn records(&self) -> &[DelayRecord] {
        &self.records
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// All on-road vehicles, lane by lane, frontmost first.
    pub fn vehicles(&self) -> Vec<VehicleState> {
        self.lanes.iter().flatten().map(|v| v.state).collect()
    }

    pub fn on_road(&self) -> usize {
        self.lanes.iter().map(VecDeque::len).sum()
    }

    pub fn queued(&self) -> usize {
        self.queue.waiting()
    }

    /// Arrivals whose scheduled time has passed.
    pub fn released(&self) -> usize {
        self.released
    }

    pub fn despawned(&self) -> usize {
        self.records.len()
    }

    /// Places a vehicle directly on the road, keeping lane order.
    pub fn insert_vehicle(&mut self, state: VehicleState) {
        let lane = &mut self.lanes[state.direction.slot()];
        let at = lane
            .iter()
            .position(|v| v.state.front_pos < state.front_pos)
            .unwrap_or(lane.len());
        lane.insert(
            at,
            Vehicle {
                state,
                decision: None,
                exit_time: None,
                cleared: false,
            },
        );
        self.released += 1;
        self.spawned += 1;
    }

    pub fn is_done(&self) -> bool {
        self.time() >= self.config.spawn_window && self.queue.is_empty() && self.on_road() == 0
    }

    fn geometry(&self) -> &IntersectionGeometry {
        &self.config.geometry
    }

    fn params(&self) -> &VehicleParams {
        &self.config.vehicle
    }

    fn violate(&mut self, time: f64, kind: ViolationKind, detail: String) -> Result<(), SimError> {
        if self.config.strict {
            return Err(SimError::Invariant {
                time,
                detail: format!("{kind:?}: {detail}"),
            });
        }
        self.violations.push(Violation { time, kind, detail });
        Ok(())
    }

    fn event(&mut self, time: f64, vehicle: u64, kind: EventKind, detail: impl Into<String>) {
        self.events.push(Event {
            time,
            vehicle,
            kind,
            detail: detail.into(),
        });
    }

    pub fn tick(&mut self) -> Result<(), SimError> {
        let t = self.time();
        let t_next = tick_time(self.tick + 1);
        let dt = self.config.dt;
        let params = *self.params();
        let geometry = *self.geometry();
        let entry = geometry.entry_line();
        let exit = geometry.exit_line();
        let end = geometry.path_length();

        // (1) sense, (2) decide
        let snapshot = self.vehicles();
        let decisions = self.policy.decide(&snapshot, &geometry, &params, t, dt);
        let mut changes = Vec::new();
        for lane in self.lanes.iter_mut() {
            for v in lane.iter_mut() {
                let decision = if v.state.committed {
                    Decision::Pass
                } else {
                    decisions.get(&v.state.id).copied().unwrap_or(Decision::Pass)
                };
                if v.decision != Some(decision) && !v.state.committed {
                    changes.push((v.state.id, decision));
                }
                v.decision = Some(decision);
            }
        }
        for (id, decision) in changes {
            self.event(t, id, EventKind::DecisionChanged, decision.to_string());
        }

        // (3) actuate
        let mut commands: [Vec<AccelCommand>; 4] = Default::default();
        let mut failures = Vec::new();
        for (slot, lane) in self.lanes.iter().enumerate() {
            for (i, v) in lane.iter().enumerate() {
                let target = match i {
                    0 => FollowTarget::Free,
                    _ => FollowTarget::Leader(&lane[i - 1].state),
                };
                let mut cmd = car_following_accel(&params, &v.state, target, dt).unwrap_or_else(|e| {
                    failures.push(format!("vehicle {} behind leader: {e}", v.state.id));
                    AccelCommand::full_brake(&params)
                });
                if v.decision == Some(Decision::Brake) {
                    let stop = car_following_accel(&params, &v.state, FollowTarget::StopAt(entry), dt)
                        .unwrap_or_else(|e| {
                            failures.push(format!("vehicle {} at entry line: {e}", v.state.id));
                            AccelCommand::full_brake(&params)
                        });
                    cmd = cmd.min(stop);
                }
                commands[slot].push(cmd);
            }
        }
        for detail in failures {
            self.violate(t, ViolationKind::CarFollowing, detail)?;
        }

        // (4) integrate, (5) commit
        let red_axes: Vec<Axis> = match self.policy {
            Policy::Light(schedule) => [Axis::NorthSouth, Axis::EastWest]
                .into_iter()
                .filter(|&a| schedule.phase_at(t, a) == Phase::Red)
                .collect(),
            Policy::V2v { .. } => Vec::new(),
        };
        let mut new_events = Vec::new();
        let mut red_runs = Vec::new();
        for (slot, lane) in self.lanes.iter_mut().enumerate() {
            for (v, cmd) in lane.iter_mut().zip(&commands[slot]) {
                let before = v.state;
                v.state = step(&params, &before, *cmd, dt)?;
                let after = v.state;
                if v.exit_time.is_none() && after.front_pos >= end {
                    let frac = (end - before.front_pos) / (after.front_pos - before.front_pos);
                    v.exit_time = Some(t + frac * dt);
                }
                if !before.committed && after.front_pos > entry {
                    v.state.committed = true;
                    new_events.push((after.id, EventKind::Committed));
                    if red_axes.contains(&after.direction.axis()) {
                        red_runs.push(format!("vehicle {} direction {}", after.id, after.direction));
                    }
                }
                if !v.cleared && after.rear_pos(&params) >= exit {
                    v.cleared = true;
                    new_events.push((after.id, EventKind::Cleared));
                }
            }
        }
        for (id, kind) in new_events {
            self.event(t_next, id, kind, "");
        }
        for detail in red_runs {
            self.violate(t, ViolationKind::RedLight, detail)?;
        }

        // (6) despawn
        let mut finished = Vec::new();
        for lane in self.lanes.iter_mut() {
            while lane.front().is_some_and(|v| v.state.rear_pos(&params) > end) {
                finished.push(lane.pop_front().expect("front checked"));
            }
        }
        for v in finished {
            let exit_time = v.exit_time.expect("front passed end before rear");
            let delay = delay_of(v.state.scheduled_spawn, exit_time, &geometry, &params)?;
            self.records.push(DelayRecord {
                id: v.state.id,
                direction: v.state.direction,
                scheduled_spawn: v.state.scheduled_spawn,
                exit_time,
                delay,
            });
            self.event(t_next, v.state.id, EventKind::Despawned, format!("delay={delay:.3}"));
        }

        // (7) spawn
        let rearmost: [Option<&VehicleState>; 4] =
            Direction::ALL.map(|d| self.lanes[d.slot()].back().map(|v| &v.state));
        let outcome = self.queue.try_spawn(rearmost, t_next, &params, dt);
        for a in &outcome.released {
            self.event(a.scheduled, a.id, EventKind::Scheduled, format!("direction={}", a.direction));
        }
        self.released += outcome.released.len();
        for state in outcome.spawned {
            self.spawned += 1;
            let wait = t_next - state.scheduled_spawn;
            self.event(t_next, state.id, EventKind::Spawned, format!("wait={wait:.3}"));
            self.lanes[state.direction.slot()].push_back(Vehicle {
                state,
                decision: None,
                exit_time: None,
                cleared: false,
            });
        }

        // (8) advance and check
        self.tick += 1;
        self.check_invariants()
    }

    fn check_invariants(&mut self) -> Result<(), SimError> {
        let t = self.time();
        let params = *self.params();
        let entry = self.geometry().entry_line();
        let exit = self.geometry().exit_line();
        let floor = params.min_headway - params.max_speed * self.config.dt;
        let mut found = Vec::new();

        for lane in &self.lanes {
            for pair in lane.iter().collect::<Vec<_>>().windows(2) {
                let (leader, follower) = (&pair[0].state, &pair[1].state);
                let gap = leader.rear_pos(&params) - follower.front_pos;
                if gap < 0.0 {
                    found.push((ViolationKind::Overlap, format!("vehicles {} and {} overlap by {:.3} m", leader.id, follower.id, -gap)));
                } else if gap < floor - 1e-9 {
                    found.push((ViolationKind::Headway, format!("gap {:.3} m between {} and {}", gap, leader.id, follower.id)));
                }
            }
        }

        let in_box: Vec<&VehicleState> = self
            .lanes
            .iter()
            .flatten()
            .map(|v| &v.state)
            .filter(|s| s.front_pos > entry && s.rear_pos(&params) < exit)
            .collect();
        if let Some(a) = in_box.first() {
            if let Some(b) = in_box.iter().find(|b| b.direction.axis() != a.direction.axis()) {
                found.push((
                    ViolationKind::MutualExclusion,
                    format!("vehicles {} (dir {}) and {} (dir {}) share the box", a.id, a.direction, b.id, b.direction),
                ));
            }
        }

        let accounted = self.records.len() + self.on_road() + self.queue.waiting();
        if accounted != self.released {
            found.push((
                ViolationKind::Conservation,
                format!("{} released but {} accounted for", self.released, accounted),
            ));
        }

        for (kind, detail) in found {
            self.violate(t, kind, detail)?;
        }
        Ok(())
    }

    /// Ticks until every arrival has been served or the drain cap is hit.
    pub fn run_to_end(mut self) -> Result<SimResult, SimError> {
        while !self.is_done() && self.time() < self.config.drain_cap {
            self.tick()?;
        }
        let mut non_drained: Vec<u64> = self.lanes.iter().flatten().map(|v| v.state.id).collect();
        for d in Direction::ALL {
            non_drained.extend(self.queue.remaining(d).map(|a| a.id));
        }
        non_drained.sort_unstable();
        self.records.sort_by_key(|r| r.id);
        Ok(SimResult {
            final_time: self.time(),
            config: self.config,
            records: self.records,
            events: self.events,
            violations: self.violations,
            non_drained,
            spawned: self.spawned,
        })
    }
}

/// Runs one scenario to completion.
pub fn run(config: &ScenarioConfig) -> Result<SimResult, SimError> {
    Simulation::new(config.clone())?.run_to_end()
}
