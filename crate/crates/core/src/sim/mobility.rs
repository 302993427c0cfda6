//! Random waypoint mobility and the unit-disk radio.

use rand::Rng;

use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Unit-disk connectivity, inclusive at exactly `range_m`.
pub fn in_range(a: Position, b: Position, range_m: f64) -> bool {
    a.distance(b) <= range_m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobilityParams {
    pub width: f64,
    pub height: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub pause: SimTime,
}

impl MobilityParams {
    pub fn is_static(&self) -> bool {
        self.v_max <= 0.0
    }
}

/// Random-waypoint state of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Waypoint {
    pub position: Position,
    /// `None` until the next leg is drawn.
    pub target: Option<Position>,
    pub speed: f64,
    pub pause_until: SimTime,
}

impl Waypoint {
    pub fn at(position: Position) -> Self {
        Self {
            position,
            target: None,
            speed: 0.0,
            pause_until: SimTime::ZERO,
        }
    }

    /// Advances the node by `dt`. A paused node whose pause is over draws a
    /// new uniform target and a speed in `[v_min, v_max]`; a moving node
    /// travels `speed * dt` toward its target, stopping there and pausing.
    pub fn step<R: Rng + ?Sized>(&mut self, now: SimTime, dt: f64, params: &MobilityParams, rng: &mut R) {
        if params.is_static() || now < self.pause_until {
            return;
        }
        let target = match self.target {
            Some(t) => t,
            None => {
                let t = Position::new(
                    rng.random_range(0.0..=params.width),
                    rng.random_range(0.0..=params.height),
                );
                self.speed = if params.v_max > params.v_min {
                    rng.random_range(params.v_min..=params.v_max)
                } else {
                    params.v_min
                };
                self.target = Some(t);
                t
            }
        };
        let remaining = self.position.distance(target);
        let travel = self.speed * dt;
        if travel >= remaining {
            self.position = target;
            self.target = None;
            self.pause_until = now + params.pause;
        } else if remaining > 0.0 {
            let frac = travel / remaining;
            self.position.x += (target.x - self.position.x) * frac;
            self.position.y += (target.y - self.position.y) * frac;
        }
        self.position.x = self.position.x.clamp(0.0, params.width);
        self.position.y = self.position.y.clamp(0.0, params.height);
    }
}
