//! Tick-level brute-force kinematics. Integrates positions directly and
//! shares no code with the closed forms under test.

#![allow(dead_code)]

use intersim::dynamics::VehicleParams;

pub const DT: f64 = 0.1;

/// Ticks of full throttle (capped at max speed) until the front bumper
/// reaches `target`; returns elapsed time.
pub fn tick_eta(p: &VehicleParams, front: f64, speed: f64, target: f64) -> f64 {
    let (mut x, mut v, mut t) = (front, speed, 0.0);
    while x < target {
        v = (v + p.max_accel * DT).min(p.max_speed);
        x += v * DT;
        t += DT;
    }
    t
}

/// Distance covered under full braking until stopped.
pub fn tick_stop_distance(p: &VehicleParams, speed: f64) -> f64 {
    let (mut x, mut v) = (0.0, speed);
    while v > 0.0 {
        v = (v - p.max_decel * DT).max(0.0);
        x += v * DT;
    }
    x
}
