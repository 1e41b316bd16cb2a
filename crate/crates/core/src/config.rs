//! Scenario configuration: a plain-text file of `key = value` lines, grouped
//! under optional `[section]` headers.
//!
//! ```text
//! # comment
//! [traffic]
//! T1 = 3
//! T2 = inf        # direction disabled
//! seed = 7
//!
//! [policy]
//! policy = v2v
//! ```
//!
//! Keys may also appear before any header. Inside a header a key must belong
//! to that section. Unknown keys, unknown sections and repeated keys are
//! errors. Every omitted key takes its default.
//!
//! | section    | key           | default | unit / values      |
//! |------------|---------------|---------|--------------------|
//! | geometry   | arm_length    | 4000    | m                  |
//! | geometry   | lane_width    | 3.5     | m                  |
//! | vehicle    | length        | 5       | m                  |
//! | vehicle    | width         | 2       | m                  |
//! | vehicle    | max_speed     | 15      | m/s                |
//! | vehicle    | max_accel     | 10      | m/s²               |
//! | vehicle    | max_decel     | 10      | m/s², positive     |
//! | vehicle    | min_headway   | 30      | m                  |
//! | traffic    | T1 .. T4      | 3       | s, `inf` disables  |
//! | traffic    | spawn_window  | 1800    | s                  |
//! | traffic    | seed          | 0       | u64                |
//! | policy     | policy        | light   | `light` or `v2v`   |
//! | policy     | margin        | 0.1     | s                  |
//! | policy     | green         | 30      | s                  |
//! | policy     | yellow        | 3       | s                  |
//! | policy     | red           | 33      | s                  |
//! | policy     | phase_origin  | ns      | `ns` or `ew`       |
//! | run        | drain_cap     | 7200    | s                  |
//! | run        | dt            | 0.1     | s, only 0.1        |
//! | run        | strict        | false   | `true` or `false`  |

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::dynamics::VehicleParams;
use crate::error::ConfigError;
use crate::geometry::{Axis, Direction, IntersectionGeometry};
use crate::policy::{LightSchedule, Policy};
use crate::traffic::{validate_mean_interarrival, ArrivalProcess};

/// The only supported time step.
pub const DT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Light,
    V2v,
}

impl FromStr for PolicyKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "light" => Ok(PolicyKind::Light),
            "v2v" => Ok(PolicyKind::V2v),
            other => Err(ConfigError::invalid("policy", format!("expected `light` or `v2v`, got `{other}`"))),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyKind::Light => "light",
            PolicyKind::V2v => "v2v",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub geometry: IntersectionGeometry,
    pub vehicle: VehicleParams,
    /// Mean inter-arrival time per direction, indexed by `Direction::slot`.
    pub interarrival: [f64; 4],
    pub spawn_window: f64,
    pub seed: u64,
    pub policy: PolicyKind,
    pub margin: f64,
    pub light: LightSchedule,
    pub drain_cap: f64,
    pub dt: f64,
    pub strict: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            geometry: IntersectionGeometry::default(),
            vehicle: VehicleParams::default(),
            interarrival: [3.0; 4],
            spawn_window: 1800.0,
            seed: 0,
            policy: PolicyKind::Light,
            margin: 0.1,
            light: LightSchedule::default(),
            drain_cap: 7200.0,
            dt: DT,
            strict: false,
        }
    }
}

impl ScenarioConfig {
    pub fn with_policy(mut self, policy: PolicyKind) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_interarrival(mut self, t: [f64; 4]) -> Self {
        self.interarrival = t;
        self
    }

    pub fn policy(&self) -> Policy {
        match self.policy {
            PolicyKind::Light => Policy::Light(self.light),
            PolicyKind::V2v => Policy::V2v { margin: self.margin },
        }
    }

    pub fn arrival_processes(&self) -> [ArrivalProcess; 4] {
        Direction::ALL.map(|d| ArrivalProcess {
            direction: d,
            mean_interarrival: self.interarrival[d.slot()],
            spawn_window: self.spawn_window,
            seed: self.seed,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        IntersectionGeometry::new(self.geometry.arm_length(), self.geometry.lane_width())?;
        self.vehicle.validate()?;
        for d in Direction::ALL {
            validate_mean_interarrival(&format!("T{d}"), self.interarrival[d.slot()])?;
        }
        positive("spawn_window", self.spawn_window)?;
        positive("drain_cap", self.drain_cap)?;
        if self.drain_cap < self.spawn_window {
            return Err(ConfigError::invalid("drain_cap", "must not be shorter than spawn_window"));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(ConfigError::invalid("margin", format!("must be a non-negative duration, got {}", self.margin)));
        }
        LightSchedule::new(self.light.green(), self.light.yellow(), self.light.red(), self.light.origin())?;
        if self.dt != DT {
            return Err(ConfigError::invalid("dt", format!("only the 0.1 s decision cadence is supported, got {}", self.dt)));
        }
        Ok(())
    }

    /// Serializes every field so that `parse_scenario` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = &self.geometry;
        let v = &self.vehicle;
        let l = &self.light;
        let _ = writeln!(s, "[geometry]");
        let _ = writeln!(s, "arm_length = {}", g.arm_length());
        let _ = writeln!(s, "lane_width = {}", g.lane_width());
        let _ = writeln!(s, "\n[vehicle]");
        let _ = writeln!(s, "length = {}", v.length);
        let _ = writeln!(s, "width = {}", v.width);
        let _ = writeln!(s, "max_speed = {}", v.max_speed);
        let _ = writeln!(s, "max_accel = {}", v.max_accel);
        let _ = writeln!(s, "max_decel = {}", v.max_decel);
        let _ = writeln!(s, "min_headway = {}", v.min_headway);
        let _ = writeln!(s, "\n[traffic]");
        for d in Direction::ALL {
            let _ = writeln!(s, "T{d} = {}", self.interarrival[d.slot()]);
        }
        let _ = writeln!(s, "spawn_window = {}", self.spawn_window);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "\n[policy]");
        let _ = writeln!(s, "policy = {}", self.policy);
        let _ = writeln!(s, "margin = {}", self.margin);
        let _ = writeln!(s, "green = {}", l.green());
        let _ = writeln!(s, "yellow = {}", l.yellow());
        let _ = writeln!(s, "red = {}", l.red());
        let origin = match l.origin() {
            Axis::NorthSouth => "ns",
            Axis::EastWest => "ew",
        };
        let _ = writeln!(s, "phase_origin = {origin}");
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "drain_cap = {}", self.drain_cap);
        let _ = writeln!(s, "dt = {}", self.dt);
        let _ = writeln!(s, "strict = {}", self.strict);
        s
    }
}

fn positive(field: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(field, format!("must be a positive finite duration, got {value}")))
    }
}

const SECTIONS: [(&str, &[&str]); 5] = [
    ("geometry", &["arm_length", "lane_width"]),
    (
        "vehicle",
        &["length", "width", "max_speed", "max_accel", "max_decel", "min_headway"],
    ),
    ("traffic", &["T1", "T2", "T3", "T4", "spawn_window", "seed"]),
    ("policy", &["policy", "margin", "green", "yellow", "red", "phase_origin"]),
    ("run", &["drain_cap", "dt", "strict"]),
];

fn section_of(key: &str) -> Option<&'static str> {
    SECTIONS
        .iter()
        .find(|(_, keys)| keys.contains(&key))
        .map(|(name, _)| *name)
}

fn number(key: &str, value: &str) -> Result<f64, ConfigError> {
    let parsed = match value {
        "inf" | "off" => Ok(f64::INFINITY),
        _ => value.parse::<f64>(),
    };
    parsed.map_err(|_| ConfigError::invalid(key, format!("expected a number, got `{value}`")))
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut section: Option<&str> = None;
    let mut seen = BTreeSet::new();
    let (mut arm, mut lane) = (cfg.geometry.arm_length(), cfg.geometry.lane_width());
    let (mut green, mut yellow, mut red, mut origin) =
        (cfg.light.green(), cfg.light.yellow(), cfg.light.red(), cfg.light.origin());

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .map(|(s, _)| *s)
                    .find(|s| *s == name)
                    .ok_or_else(|| ConfigError::invalid(name, format!("line {}: unknown section", lineno + 1)))?,
            );
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| ConfigError::invalid(line, format!("line {}: expected `key = value`", lineno + 1)))?;
        let home = section_of(key).ok_or_else(|| ConfigError::invalid(key, "unknown key"))?;
        if let Some(current) = section {
            if current != home {
                return Err(ConfigError::invalid(key, format!("belongs to [{home}], not [{current}]")));
            }
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::invalid(key, "given more than once"));
        }
        match key {
            "arm_length" => arm = number(key, value)?,
            "lane_width" => lane = number(key, value)?,
            "length" => cfg.vehicle.length = number(key, value)?,
            "width" => cfg.vehicle.width = number(key, value)?,
            "max_speed" => cfg.vehicle.max_speed = number(key, value)?,
            "max_accel" => cfg.vehicle.max_accel = number(key, value)?,
            "max_decel" => cfg.vehicle.max_decel = number(key, value)?,
            "min_headway" => cfg.vehicle.min_headway = number(key, value)?,
            "T1" | "T2" | "T3" | "T4" => {
                let slot = usize::from(key.as_bytes()[1] - b'1');
                cfg.interarrival[slot] = number(key, value)?;
            }
            "spawn_window" => cfg.spawn_window = number(key, value)?,
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| ConfigError::invalid(key, format!("expected an unsigned 64-bit integer, got `{value}`")))?
            }
            "policy" => cfg.policy = value.parse()?,
            "margin" => cfg.margin = number(key, value)?,
            "green" => green = number(key, value)?,
            "yellow" => yellow = number(key, value)?,
            "red" => red = number(key, value)?,
            "phase_origin" => {
                origin = match value {
                    "ns" => Axis::NorthSouth,
                    "ew" => Axis::EastWest,
                    _ => return Err(ConfigError::invalid(key, format!("expected `ns` or `ew`, got `{value}`"))),
                }
            }
            "drain_cap" => cfg.drain_cap = number(key, value)?,
            "dt" => cfg.dt = number(key, value)?,
            "strict" => {
                cfg.strict = value
                    .parse()
                    .map_err(|_| ConfigError::invalid(key, format!("expected `true` or `false`, got `{value}`")))?
            }
            _ => unreachable!("key table and match arms agree"),
        }
    }
    cfg.geometry = IntersectionGeometry::new(arm, lane)?;
    cfg.light = LightSchedule::new(green, yellow, red, origin)?;
    cfg.validate()?;
    Ok(cfg)
}
