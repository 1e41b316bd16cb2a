//! Intersection control policies.
//!
//! Both policies map an exact snapshot of every vehicle on the road to a
//! PASS/BRAKE decision per uncommitted vehicle. BRAKE means "car-follow with
//! the own entry line as a stop target"; PASS means "car-follow and ignore
//! the line". Committed vehicles always pass.

use std::collections::BTreeMap;
use std::fmt;

use crate::dynamics::{can_stop_before, clear_time, eta_to, VehicleParams, VehicleState, POSITION_EPS};
use crate::error::ConfigError;
use crate::geometry::{conflicts, Axis, Direction, IntersectionGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Pass,
    Brake,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Pass => "PASS",
            Decision::Brake => "BRAKE",
        })
    }
}

/// Decisions keyed by vehicle id.
pub type PolicyDecision = BTreeMap<u64, Decision>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Green,
    Yellow,
    Red,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSchedule {
    green: f64,
    yellow: f64,
    red: f64,
    origin: Axis,
}

impl Default for LightSchedule {
    fn default() -> Self {
        LightSchedule {
            green: 30.0,
            yellow: 3.0,
            red: 33.0,
            origin: Axis::NorthSouth,
        }
    }
}

impl LightSchedule {
    /// `origin` is the axis that is green at `t = 0`.
    pub fn new(green: f64, yellow: f64, red: f64, origin: Axis) -> Result<Self, ConfigError> {
        for (name, v) in [("green", green), ("yellow", yellow), ("red", red)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(name, format!("must be a positive duration, got {v}")));
            }
        }
        if ((green + yellow) - red).abs() > 1e-9 {
            return Err(ConfigError::invalid(
                "red",
                format!("green + yellow must equal red so the axes alternate, got {green} + {yellow} != {red}"),
            ));
        }
        Ok(LightSchedule {
            green,
            yellow,
            red,
            origin,
        })
    }

    pub fn green(&self) -> f64 {
        self.green
    }

    pub fn yellow(&self) -> f64 {
        self.yellow
    }

    pub fn red(&self) -> f64 {
        self.red
    }

    pub fn origin(&self) -> Axis {
        self.origin
    }

    pub fn cycle(&self) -> f64 {
        self.green + self.yellow + self.red
    }

    pub fn phase_at(&self, t: f64, axis: Axis) -> Phase {
        let offset = if axis == self.origin { 0.0 } else { self.red };
        let local = (t - offset).rem_euclid(self.cycle());
        if local < self.green {
            Phase::Green
        } else if local < self.green + self.yellow {
            Phase::Yellow
        } else {
            Phase::Red
        }
    }
}

/// Fixed-cycle light rule for one vehicle. On yellow a vehicle keeps going
/// only once it can no longer stop before the line.
pub fn light_decision(
    vehicle: &VehicleState,
    schedule: &LightSchedule,
    geometry: &IntersectionGeometry,
    params: &VehicleParams,
    t: f64,
) -> Decision {
    if vehicle.committed || vehicle.front_pos > geometry.entry_line() {
        return Decision::Pass;
    }
    match schedule.phase_at(t, vehicle.direction.axis()) {
        Phase::Green => Decision::Pass,
        Phase::Yellow => {
            // A vehicle braking onto the line sits exactly on the boundary;
            // rounding must not flip it to PASS.
            let to_line = geometry.entry_line() - vehicle.front_pos;
            if to_line + POSITION_EPS < params.stopping_distance(vehicle.speed) {
                Decision::Pass
            } else {
                Decision::Brake
            }
        }
        Phase::Red => Decision::Brake,
    }
}

pub fn light_decisions(
    world: &[VehicleState],
    schedule: &LightSchedule,
    geometry: &IntersectionGeometry,
    params: &VehicleParams,
    t: f64,
) -> PolicyDecision {
    world
        .iter()
        .filter(|v| !v.committed)
        .map(|v| (v.id, light_decision(v, schedule, geometry, params, t)))
        .collect()
}

/// FCFS order: ascending entry-line ETA, then direction index, then id.
pub fn v2v_priority(
    candidates: &[VehicleState],
    geometry: &IntersectionGeometry,
    params: &VehicleParams,
) -> Vec<VehicleState> {
    let mut keyed: Vec<(f64, VehicleState)> = candidates
        .iter()
        .map(|v| (eta_to(params, v, geometry.entry_line()), *v))
        .collect();
    keyed.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.direction.cmp(&b.1.direction))
            .then(a.1.id.cmp(&b.1.id))
    });
    keyed.into_iter().map(|(_, v)| v).collect()
}

/// Granted conflict-box occupancy, relative to the snapshot time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservation {
    pub id: u64,
    pub direction: Direction,
    pub enter: f64,
    pub clear: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReservationSchedule {
    entries: Vec<Reservation>,
    by_id: BTreeMap<u64, usize>,
    /// Per axis (`[NorthSouth, EastWest]`): `(enter, index)` sorted by enter.
    by_axis: [Vec<(f64, usize)>; 2],
    /// Per axis: longest reservation, bounds the overlap search window.
    longest: [f64; 2],
}

fn axis_slot(axis: Axis) -> usize {
    match axis {
        Axis::NorthSouth => 0,
        Axis::EastWest => 1,
    }
}

impl ReservationSchedule {
    pub fn entries(&self) -> &[Reservation] {
        &self.entries
    }

    pub fn get(&self, id: u64) -> Option<&Reservation> {
        self.by_id.get(&id).map(|&i| &self.entries[i])
    }

    /// First conflicting reservation (in order of entry time) overlapping
    /// `[enter, clear]`.
    pub fn first_conflict(&self, direction: Direction, enter: f64, clear: f64) -> Option<&Reservation> {
        let slot = axis_slot(direction.axis().other());
        let sorted = &self.by_axis[slot];
        let from = sorted.partition_point(|&(e, _)| e < enter - self.longest[slot]);
        sorted[from..]
            .iter()
            .take_while(|&&(e, _)| e < clear)
            .map(|&(_, i)| &self.entries[i])
            .find(|r| conflicts(r.direction, direction) && enter < r.clear && r.enter < clear)
    }

    pub fn push(&mut self, reservation: Reservation) {
        let index = self.entries.len();
        let slot = axis_slot(reservation.direction.axis());
        self.by_id.insert(reservation.id, index);
        let sorted = &mut self.by_axis[slot];
        let at = sorted.partition_point(|&(e, _)| e <= reservation.enter);
        sorted.insert(at, (reservation.enter, index));
        self.longest[slot] = self.longest[slot].max(reservation.clear - reservation.enter);
        self.entries.push(reservation);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct V2vOutcome {
    pub decisions: PolicyDecision,
    pub schedule: ReservationSchedule,
}

/// Cooperative brake-or-pass evaluation over an exact world snapshot.
///
/// Every vehicle shares the same snapshot and priority rule, so one
/// evaluation per tick yields what each vehicle would compute on its own.
/// The schedule is rebuilt from scratch: committed vehicles still in the box
/// first, then vehicles that can no longer stop before their line, then the
/// remaining candidates in FCFS order. A candidate passes iff its occupancy
/// interval widened by `margin` overlaps no conflicting reservation; a
/// vehicle never passes ahead of an uncommitted same-lane leader that was
/// told to brake.
pub fn v2v_decision(
    world: &[VehicleState],
    geometry: &IntersectionGeometry,
    params: &VehicleParams,
    margin: f64,
    dt: f64,
) -> V2vOutcome {
    let entry = geometry.entry_line();
    let exit = geometry.exit_line();
    let mut schedule = ReservationSchedule::default();
    let mut decisions = PolicyDecision::new();

    for v in world.iter().filter(|v| v.committed) {
        if v.rear_pos(params) < exit {
            schedule.push(Reservation {
                id: v.id,
                direction: v.direction,
                enter: 0.0,
                clear: clear_time(params, v, exit),
            });
        }
    }

    // Nearest uncommitted vehicle ahead in the same lane.
    let mut leader_of: BTreeMap<u64, u64> = BTreeMap::new();
    for d in Direction::ALL {
        let mut lane: Vec<&VehicleState> = world
            .iter()
            .filter(|v| v.direction == d && !v.committed)
            .collect();
        lane.sort_by(|a, b| b.front_pos.total_cmp(&a.front_pos).then(a.id.cmp(&b.id)));
        for pair in lane.windows(2) {
            leader_of.insert(pair[1].id, pair[0].id);
        }
    }

    let (must_go, open): (Vec<VehicleState>, Vec<VehicleState>) = world
        .iter()
        .filter(|v| !v.committed)
        .copied()
        .partition(|v| !can_stop_before(params, v, entry, dt));

    for v in v2v_priority(&must_go, geometry, params) {
        decisions.insert(v.id, Decision::Pass);
        schedule.push(Reservation {
            id: v.id,
            direction: v.direction,
            enter: eta_to(params, &v, entry),
            clear: clear_time(params, &v, exit),
        });
    }

    for v in v2v_priority(&open, geometry, params) {
        let mut enter = eta_to(params, &v, entry);
        let mut clear = clear_time(params, &v, exit);
        if let Some(leader) = leader_of.get(&v.id) {
            if decisions.get(leader) != Some(&Decision::Pass) {
                decisions.insert(v.id, Decision::Brake);
                continue;
            }
            if let Some(r) = schedule.get(*leader) {
                enter = enter.max(r.enter);
                clear = clear.max(r.clear);
            }
        }
        let decision = if schedule
            .first_conflict(v.direction, enter - margin, clear + margin)
            .is_none()
        {
            schedule.push(Reservation {
                id: v.id,
                direction: v.direction,
                enter,
                clear,
            });
            Decision::Pass
        } else {
            Decision::Brake
        };
        decisions.insert(v.id, decision);
    }

    V2vOutcome { decisions, schedule }
}

/// Intersection control policy of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Light(LightSchedule),
    V2v { margin: f64 },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Light(_) => "light",
            Policy::V2v { .. } => "v2v",
        }
    }

    pub fn decide(
        &self,
        world: &[VehicleState],
        geometry: &IntersectionGeometry,
        params: &VehicleParams,
        t: f64,
        dt: f64,
    ) -> PolicyDecision {
        match self {
            Policy::Light(schedule) => light_decisions(world, schedule, geometry, params, t),
            Policy::V2v { margin } => v2v_decision(world, geometry, params, *margin, dt).decisions,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 0.1;

    fn dir(i: u8) -> Direction {
        Direction::new(i).unwrap()
    }

    fn at(id: u64, d: u8, front: f64, speed: f64) -> VehicleState {
        let mut v = VehicleState::new(id, dir(d), front, speed);
        v.committed = front > IntersectionGeometry::default().entry_line();
        v
    }

    #[test]
    fn phase_examples() {
        let s = LightSchedule::default();
        assert_eq!(s.cycle(), 66.0);
        assert_eq!(s.phase_at(0.0, Axis::NorthSouth), Phase::Green);
        assert_eq!(s.phase_at(31.0, Axis::NorthSouth), Phase::Yellow);
        assert_eq!(s.phase_at(31.0, Axis::EastWest), Phase::Red);
        assert_eq!(s.phase_at(66.0, Axis::NorthSouth), Phase::Green);
        assert_eq!(s.phase_at(33.0, Axis::EastWest), Phase::Green);
        assert_eq!(s.phase_at(63.5, Axis::EastWest), Phase::Yellow);
        assert_eq!(s.phase_at(40.0, Axis::NorthSouth), Phase::Red);
    }

    #[test]
    fn exactly_one_axis_open() {
        let s = LightSchedule::default();
        for tick in 0..2000 {
            let t = tick as f64 / 10.0;
            let open = |a| s.phase_at(t, a) != Phase::Red;
            assert!(open(Axis::NorthSouth) ^ open(Axis::EastWest), "t={t}");
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(LightSchedule::new(30.0, 3.0, 30.0, Axis::NorthSouth).is_err());
        let err = LightSchedule::new(0.0, 3.0, 3.0, Axis::NorthSouth).unwrap_err();
        assert_eq!(err.field, "green");
        assert!(LightSchedule::new(20.0, 2.0, 22.0, Axis::EastWest).is_ok());
    }

    #[test]
    fn light_decision_examples() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        let s = LightSchedule::default();
        let v = at(1, 1, 3000.0, 15.0);
        assert_eq!(light_decision(&v, &s, &g, &p, 5.0), Decision::Pass);
        let v = at(1, 1, 3900.0, 15.0);
        assert_eq!(light_decision(&v, &s, &g, &p, 40.0), Decision::Brake);
        let v = at(1, 1, 3995.0, 15.0);
        assert_eq!(light_decision(&v, &s, &g, &p, 31.0), Decision::Pass);
        let v = at(1, 1, 3980.0, 15.0);
        assert_eq!(light_decision(&v, &s, &g, &p, 31.0), Decision::Brake);
        let v = at(1, 1, 4001.0, 15.0);
        assert_eq!(light_decision(&v, &s, &g, &p, 40.0), Decision::Pass);
    }

    #[test]
    fn yellow_boundary_stays_brake() {
        // Braked onto the boundary: distance equals stopping distance up to
        // rounding, which must not read as "cannot stop".
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        let s = LightSchedule::default();
        // 4000.0 - 3998.2 rounds to just under 1.8.
        let v = at(1, 1, 3998.2, 6.0);
        assert_eq!(light_decision(&v, &s, &g, &p, 31.0), Decision::Brake);
        let v = at(1, 1, 3998.1, 6.0);
        assert_eq!(light_decision(&v, &s, &g, &p, 31.0), Decision::Brake);
        let v = at(1, 1, 3998.3, 6.0);
        assert_eq!(light_decision(&v, &s, &g, &p, 31.0), Decision::Pass);
    }

    #[test]
    fn priority_orders_by_eta_then_direction_then_id() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        // D closest, then B, C, A.
        let a = at(0, 1, 3900.0, 15.0);
        let b = at(1, 2, 3960.0, 15.0);
        let c = at(2, 3, 3930.0, 15.0);
        let d = at(3, 4, 3990.0, 15.0);
        let order: Vec<u64> = v2v_priority(&[a, b, c, d], &g, &p).iter().map(|v| v.id).collect();
        assert_eq!(order, vec![3, 1, 2, 0]);

        let x = at(7, 2, 3900.0, 15.0);
        let y = at(8, 1, 3900.0, 15.0);
        let order: Vec<u64> = v2v_priority(&[x, y], &g, &p).iter().map(|v| v.id).collect();
        assert_eq!(order, vec![8, 7]);

        assert_eq!(v2v_priority(&[a], &g, &p).len(), 1);
    }

    #[test]
    fn lone_vehicle_passes() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        let out = v2v_decision(&[at(0, 1, 3500.0, 15.0)], &g, &p, 0.1, DT);
        assert_eq!(out.decisions[&0], Decision::Pass);
    }

    #[test]
    fn yields_to_vehicle_in_box() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        // Committed at the line, clears in 0.8 s.
        let mut inside = at(0, 1, 4000.0, 15.0);
        inside.committed = true;
        let early = at(2, 2, 4000.0 - 3.0, 6.0);
        assert!(eta_to(&p, &early, 4000.0) < 0.8 + 0.1);
        let out = v2v_decision(&[inside, early], &g, &p, 0.1, DT);
        assert_eq!(out.decisions[&2], Decision::Brake);
    }

    #[test]
    fn vehicle_past_point_of_no_return_keeps_going() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        let mut inside = at(0, 1, 4000.0, 15.0);
        inside.committed = true;
        let close_fast = at(1, 2, 4000.0 - 7.5, 15.0);
        let out = v2v_decision(&[inside, close_fast], &g, &p, 0.1, DT);
        assert_eq!(out.decisions[&1], Decision::Pass);
    }

    #[test]
    fn passes_after_box_clears_with_margin() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        let mut inside = at(0, 1, 4000.0, 15.0);
        inside.committed = true;
        // ETA exactly 1.0 s at 15 m/s.
        let later = at(1, 2, 3985.0, 15.0);
        let out = v2v_decision(&[inside, later], &g, &p, 0.1, DT);
        assert_eq!(out.decisions[&1], Decision::Pass);
    }

    #[test]
    fn follower_of_denied_leader_brakes() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        let mut inside = at(0, 1, 4002.0, 15.0);
        inside.committed = true;
        let leader = at(1, 2, 3999.0, 1.0);
        let follower = at(2, 2, 3900.0, 15.0);
        let out = v2v_decision(&[follower, inside, leader], &g, &p, 0.1, DT);
        assert_eq!(out.decisions[&1], Decision::Brake);
        assert_eq!(out.decisions[&2], Decision::Brake);
    }

    #[test]
    fn opposite_directions_share_box() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        let a = at(0, 1, 3950.0, 15.0);
        let b = at(1, 3, 3950.0, 15.0);
        let out = v2v_decision(&[a, b], &g, &p, 0.1, DT);
        assert_eq!(out.decisions[&0], Decision::Pass);
        assert_eq!(out.decisions[&1], Decision::Pass);
    }

    #[test]
    fn decision_is_idempotent() {
        let g = IntersectionGeometry::default();
        let p = VehicleParams::default();
        let world = [at(0, 1, 3950.0, 15.0), at(1, 2, 3951.0, 15.0), at(2, 4, 3800.0, 9.0)];
        let a = v2v_decision(&world, &g, &p, 0.1, DT);
        let b = v2v_decision(&world, &g, &p, 0.1, DT);
        assert_eq!(a, b);
        assert_eq!(a.decisions[&1], Decision::Pass);
        assert_eq!(a.decisions[&0], Decision::Brake);
    }
}
