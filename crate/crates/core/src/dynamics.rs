//! Longitudinal kinematics along a fixed straight path.
//!
//! Vehicles integrate with semi-implicit Euler and are actuated with a
//! three-level bang-bang command (`+max_accel`, `0`, `-max_decel`). The
//! car-following law picks the strongest command whose one-tick projection
//! keeps the headway constraint satisfiable even if both vehicles then brake
//! to a stop.

use crate::error::{ConfigError, DynamicsError};
use crate::geometry::Direction;

/// Slack for floating point comparisons on positions, in meters.
pub const POSITION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub length: f64,
    pub width: f64,
    pub max_speed: f64,
    pub max_accel: f64,
    /// Stored as a positive magnitude.
    pub max_decel: f64,
    /// Minimum bumper-to-bumper gap to the leader.
    pub min_headway: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            length: 5.0,
            width: 2.0,
            max_speed: 15.0,
            max_accel: 10.0,
            max_decel: 10.0,
            min_headway: 30.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("length", self.length),
            ("width", self.width),
            ("max_speed", self.max_speed),
            ("max_accel", self.max_accel),
            ("max_decel", self.max_decel),
            ("min_headway", self.min_headway),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::invalid(name, format!("must be positive and finite, got {value}")));
            }
        }
        Ok(())
    }

    /// Stopping distance under full braking.
    pub fn stopping_distance(&self, speed: f64) -> f64 {
        stopping_distance(speed, self.max_decel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub id: u64,
    pub direction: Direction,
    /// Front bumper, meters from the spawn point along the own path.
    pub front_pos: f64,
    pub speed: f64,
    /// Last applied acceleration command.
    pub accel: f64,
    pub scheduled_spawn: f64,
    pub actual_spawn: f64,
    /// Front bumper has crossed the entry line.
    pub committed: bool,
}

impl VehicleState {
    pub fn new(id: u64, direction: Direction, front_pos: f64, speed: f64) -> Self {
        VehicleState {
            id,
            direction,
            front_pos,
            speed,
            accel: 0.0,
            scheduled_spawn: 0.0,
            actual_spawn: 0.0,
            committed: false,
        }
    }

    pub fn rear_pos(&self, params: &VehicleParams) -> f64 {
        self.front_pos - params.length
    }
}

/// A bounded longitudinal acceleration in m/s².
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AccelCommand(f64);

impl AccelCommand {
    pub fn new(value: f64, params: &VehicleParams) -> Result<Self, DynamicsError> {
        if !value.is_finite() {
            return Err(DynamicsError::NonFinite("AccelCommand::new"));
        }
        if value > params.max_accel || value < -params.max_decel {
            return Err(DynamicsError::CommandOutOfBounds {
                value,
                max_accel: params.max_accel,
                max_decel: params.max_decel,
            });
        }
        Ok(AccelCommand(value))
    }

    pub fn full_throttle(params: &VehicleParams) -> Self {
        AccelCommand(params.max_accel)
    }

    pub fn coast() -> Self {
        AccelCommand(0.0)
    }

    pub fn full_brake(params: &VehicleParams) -> Self {
        AccelCommand(-params.max_decel)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The more restrictive of two commands.
    pub fn min(self, other: AccelCommand) -> AccelCommand {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }
}

/// Advances one vehicle by `dt` seconds.
pub fn step(
    params: &VehicleParams,
    state: &VehicleState,
    cmd: AccelCommand,
    dt: f64,
) -> Result<VehicleState, DynamicsError> {
    if !(state.front_pos.is_finite() && state.speed.is_finite() && dt.is_finite()) {
        return Err(DynamicsError::NonFinite("step"));
    }
    if dt <= 0.0 {
        return Err(DynamicsError::BadTimeStep(dt));
    }
    let speed = (state.speed + cmd.value() * dt).clamp(0.0, params.max_speed);
    Ok(VehicleState {
        front_pos: state.front_pos + speed * dt,
        speed,
        accel: cmd.value(),
        ..*state
    })
}

pub fn stopping_distance(speed: f64, decel: f64) -> f64 {
    speed * speed / (2.0 * decel)
}

/// Earliest arrival of the front bumper at `target`, accelerating at full
/// throttle up to max speed and cruising afterwards.
pub fn eta_to(params: &VehicleParams, state: &VehicleState, target: f64) -> f64 {
    let distance = target - state.front_pos;
    if distance <= 0.0 {
        return 0.0;
    }
    let v0 = state.speed.min(params.max_speed);
    let a = params.max_accel;
    let vmax = params.max_speed;
    let ramp_distance = (vmax * vmax - v0 * v0) / (2.0 * a);
    if distance <= ramp_distance {
        ((v0 * v0 + 2.0 * a * distance).sqrt() - v0) / a
    } else {
        (vmax - v0) / a + (distance - ramp_distance) / vmax
    }
}

/// Time until the rear bumper is past `exit`.
pub fn clear_time(params: &VehicleParams, state: &VehicleState, exit: f64) -> f64 {
    eta_to(params, state, exit + params.length)
}

/// What the follower must respect this tick.
#[derive(Debug, Clone, Copy)]
pub enum FollowTarget<'a> {
    Free,
    Leader(&'a VehicleState),
    /// Stationary virtual obstacle; the front bumper must halt at or before it.
    StopAt(f64),
}

/// Headway margin: gap minus the follower's stopping-distance surplus over
/// the obstacle, minus the required gap. Non-negative means safe.
fn headway_margin(
    params: &VehicleParams,
    front: f64,
    speed: f64,
    obstacle_rear: f64,
    obstacle_speed: f64,
    required: f64,
) -> f64 {
    let gap = obstacle_rear - front;
    let surplus = (params.stopping_distance(speed) - params.stopping_distance(obstacle_speed)).max(0.0);
    gap - surplus - required
}

/// Obstacle rear position, speed, and required gap, both now and projected
/// one tick ahead assuming the leader brakes as hard as it can.
fn obstacle(params: &VehicleParams, target: &FollowTarget<'_>, dt: f64) -> Option<([f64; 2], [f64; 2], f64)> {
    match *target {
        FollowTarget::Free => None,
        FollowTarget::StopAt(pos) => Some(([pos, pos], [0.0, 0.0], 0.0)),
        FollowTarget::Leader(leader) => {
            let rear = leader.rear_pos(params);
            let v_next = (leader.speed - params.max_decel * dt).max(0.0);
            Some(([rear, rear + v_next * dt], [leader.speed, v_next], params.min_headway))
        }
    }
}

/// Headway margin of the current, unprojected state.
pub fn current_margin(params: &VehicleParams, follower: &VehicleState, target: &FollowTarget<'_>) -> f64 {
    match obstacle(params, target, 1.0) {
        None => f64::INFINITY,
        Some((rear, speed, required)) => {
            headway_margin(params, follower.front_pos, follower.speed, rear[0], speed[0], required)
        }
    }
}

/// Largest command in `{+max_accel, 0, -max_decel}` whose one-tick
/// projection keeps the headway margin non-negative.
pub fn car_following_accel(
    params: &VehicleParams,
    follower: &VehicleState,
    target: FollowTarget<'_>,
    dt: f64,
) -> Result<AccelCommand, DynamicsError> {
    let Some((rear, obstacle_speed, required)) = obstacle(params, &target, dt) else {
        return Ok(AccelCommand::full_throttle(params));
    };
    let levels = [
        AccelCommand::full_throttle(params),
        AccelCommand::coast(),
        AccelCommand::full_brake(params),
    ];
    for cmd in levels {
        let speed = (follower.speed + cmd.value() * dt).clamp(0.0, params.max_speed);
        let front = follower.front_pos + speed * dt;
        let margin = headway_margin(params, front, speed, rear[1], obstacle_speed[1], required);
        if margin >= -POSITION_EPS {
            return Ok(cmd);
        }
    }
    let margin = headway_margin(
        params,
        follower.front_pos,
        follower.speed,
        rear[0],
        obstacle_speed[0],
        required,
    );
    if margin >= -POSITION_EPS {
        Ok(AccelCommand::full_brake(params))
    } else {
        Err(DynamicsError::Inconsistent { margin })
    }
}

/// Whether full braking from now still halts the front bumper at or before
/// `line`.
pub fn can_stop_before(params: &VehicleParams, state: &VehicleState, line: f64, dt: f64) -> bool {
    let speed = (state.speed - params.max_decel * dt).max(0.0);
    let front = state.front_pos + speed * dt;
    front + params.stopping_distance(speed) <= line + POSITION_EPS
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 0.1;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    fn vehicle(front: f64, speed: f64) -> VehicleState {
        VehicleState::new(0, Direction::new(1).unwrap(), front, speed)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn step_examples() {
        let p = params();
        let s = step(&p, &vehicle(100.0, 15.0), AccelCommand::coast(), DT).unwrap();
        assert!(close(s.speed, 15.0) && close(s.front_pos, 101.5));

        let s = step(&p, &vehicle(0.0, 0.0), AccelCommand::full_throttle(&p), DT).unwrap();
        assert!(close(s.speed, 1.0) && close(s.front_pos, 0.1));

        let s = step(&p, &vehicle(0.0, 15.0), AccelCommand::full_throttle(&p), DT).unwrap();
        assert!(close(s.speed, 15.0) && close(s.front_pos, 1.5));
    }

    #[test]
    fn step_rejects_bad_input() {
        let p = params();
        assert!(step(&p, &vehicle(f64::NAN, 1.0), AccelCommand::coast(), DT).is_err());
        assert!(step(&p, &vehicle(0.0, 1.0), AccelCommand::coast(), f64::INFINITY).is_err());
        assert!(step(&p, &vehicle(0.0, 1.0), AccelCommand::coast(), 0.0).is_err());
        assert!(AccelCommand::new(10.5, &p).is_err());
        assert!(AccelCommand::new(f64::NAN, &p).is_err());
        assert!(AccelCommand::new(-10.0, &p).is_ok());
    }

    #[test]
    fn stopping_distance_examples() {
        assert!(close(stopping_distance(15.0, 10.0), 11.25));
        assert_eq!(stopping_distance(0.0, 10.0), 0.0);
        assert!(close(stopping_distance(7.5, 10.0), 2.8125));
    }

    #[test]
    fn eta_examples() {
        let p = params();
        assert!(close(eta_to(&p, &vehicle(0.0, 15.0), 30.0), 2.0));
        assert!(close(eta_to(&p, &vehicle(0.0, 0.0), 11.25), 1.5));
        assert!(close(eta_to(&p, &vehicle(0.0, 10.0), 100.0), 6.75));
        assert_eq!(eta_to(&p, &vehicle(50.0, 3.0), 50.0), 0.0);
    }

    #[test]
    fn clear_time_examples() {
        let p = params();
        assert!(close(clear_time(&p, &vehicle(4000.0, 15.0), 4007.0), 0.8));
        assert_eq!(clear_time(&p, &vehicle(4013.0, 2.0), 4007.0), 0.0);
        // 11.25 m ramp in 1.5 s, then 0.75 m at 15 m/s.
        assert!(close(clear_time(&p, &vehicle(4000.0, 0.0), 4007.0), 1.55));
    }

    #[test]
    fn car_following_examples() {
        let p = params();
        let cmd = car_following_accel(&p, &vehicle(0.0, 10.0), FollowTarget::Free, DT).unwrap();
        assert_eq!(cmd.value(), 10.0);

        let leader = vehicle(105.0, 15.0);
        let cmd = car_following_accel(&p, &vehicle(0.0, 15.0), FollowTarget::Leader(&leader), DT).unwrap();
        assert_eq!(cmd.value(), 10.0);

        let cmd = car_following_accel(&p, &vehicle(0.0, 15.0), FollowTarget::StopAt(11.25), DT).unwrap();
        assert_eq!(cmd.value(), -10.0);
    }

    #[test]
    fn car_following_holds_at_exact_headway() {
        let p = params();
        let leader = vehicle(35.0, 0.0);
        let cmd = car_following_accel(&p, &vehicle(0.0, 0.0), FollowTarget::Leader(&leader), DT).unwrap();
        assert_eq!(cmd.value(), 0.0);
    }

    #[test]
    fn car_following_flags_broken_headway() {
        let p = params();
        let leader = vehicle(20.0, 0.0);
        let err = car_following_accel(&p, &vehicle(0.0, 15.0), FollowTarget::Leader(&leader), DT).unwrap_err();
        assert!(matches!(err, DynamicsError::Inconsistent { .. }));
    }

    #[test]
    fn stop_point_feasibility() {
        let p = params();
        assert!(can_stop_before(&p, &vehicle(0.0, 15.0), 11.25, DT));
        assert!(!can_stop_before(&p, &vehicle(0.0, 15.0), 5.0, DT));
        assert!(can_stop_before(&p, &vehicle(10.0, 0.0), 10.0, DT));
    }
}
