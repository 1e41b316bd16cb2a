//! Four-arm intersection layout.
//!
//! Every direction follows an identical straight path measured from its
//! spawn point: an approach arm, the square conflict box shared by all four
//! paths, and a departure arm. Directions 1 and 3 run north/south, 2 and 4
//! run east/west.

use std::fmt;

use crate::error::ConfigError;

/// Travel axis of a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    NorthSouth,
    EastWest,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::NorthSouth => Axis::EastWest,
            Axis::EastWest => Axis::NorthSouth,
        }
    }
}

/// One of the four approach directions, numbered 1 to 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction(u8);

impl Direction {
    pub const ALL: [Direction; 4] = [Direction(1), Direction(2), Direction(3), Direction(4)];

    pub fn new(index: u8) -> Option<Direction> {
        (1..=4).contains(&index).then_some(Direction(index))
    }

    pub fn index(self) -> u8 {
        self.0
    }

    /// Zero-based slot for per-direction arrays.
    pub fn slot(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn axis(self) -> Axis {
        if self.0 % 2 == 1 {
            Axis::NorthSouth
        } else {
            Axis::EastWest
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Straight-through paths cross iff they lie on different axes.
pub fn conflicts(a: Direction, b: Direction) -> bool {
    a.axis() != b.axis()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Line {
    Entry,
    Exit,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionGeometry {
    arm_length: f64,
    lane_width: f64,
}

impl Default for IntersectionGeometry {
    fn default() -> Self {
        IntersectionGeometry {
            arm_length: 4000.0,
            lane_width: 3.5,
        }
    }
}

impl IntersectionGeometry {
    pub fn new(arm_length: f64, lane_width: f64) -> Result<Self, ConfigError> {
        if !(arm_length.is_finite() && arm_length > 0.0) {
            return Err(ConfigError::invalid("arm_length", "must be a positive finite length in meters"));
        }
        if !(lane_width.is_finite() && lane_width > 0.0) {
            return Err(ConfigError::invalid("lane_width", "must be a positive finite length in meters"));
        }
        Ok(IntersectionGeometry {
            arm_length,
            lane_width,
        })
    }

    pub fn arm_length(&self) -> f64 {
        self.arm_length
    }

    pub fn lane_width(&self) -> f64 {
        self.lane_width
    }

    /// One lane per direction, two per road, so the box spans two lanes.
    pub fn box_side(&self) -> f64 {
        2.0 * self.lane_width
    }

    pub fn entry_line(&self) -> f64 {
        self.arm_length
    }

    pub fn exit_line(&self) -> f64 {
        self.arm_length + self.box_side()
    }

    pub fn path_length(&self) -> f64 {
        2.0 * self.arm_length + self.box_side()
    }

    pub fn position_of_line(&self, which: Line) -> f64 {
        match which {
            Line::Entry => self.entry_line(),
            Line::Exit => self.exit_line(),
            Line::End => self.path_length(),
        }
    }
}
