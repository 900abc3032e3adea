//! Random-waypoint mobility.

use rand::Rng;

use crate::deploy::{Point, Rect};
use crate::error::{Error, Result};

/// Random-waypoint parameters: walkers pick a uniform destination in the
/// world rectangle and a uniform speed, travel in a straight line, then
/// (optionally after a pause) repeat.
#[derive(Debug, Clone, Copy)]
pub struct RwpConfig {
    pub world: Rect,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub pause_s: f64,
}

impl RwpConfig {
    pub fn new(world: Rect, speed_min_mps: f64, speed_max_mps: f64, pause_s: f64) -> Result<Self> {
        if !(speed_min_mps > 0.0) || !(speed_max_mps >= speed_min_mps) {
            return Err(Error::domain(format!(
                "speed range must satisfy 0 < min <= max, got {speed_min_mps}..{speed_max_mps}"
            )));
        }
        if !(pause_s >= 0.0) || !pause_s.is_finite() {
            return Err(Error::domain(format!("pause must be non-negative, got {pause_s}")));
        }
        Ok(RwpConfig {
            world,
            speed_min_mps,
            speed_max_mps,
            pause_s,
        })
    }

    fn uniform_point(&self, rng: &mut impl Rng) -> Point {
        Point::new(
            rng.random_range(self.world.x_min_m..=self.world.x_max_m),
            rng.random_range(self.world.y_min_m..=self.world.y_max_m),
        )
    }

    fn uniform_speed(&self, rng: &mut impl Rng) -> f64 {
        if self.speed_min_mps == self.speed_max_mps {
            self.speed_min_mps
        } else {
            rng.random_range(self.speed_min_mps..self.speed_max_mps)
        }
    }
}

/// One walker's kinematic state.
#[derive(Debug, Clone, Copy)]
pub struct RwpWalker {
    pos: Point,
    waypoint: Point,
    speed_mps: f64,
    pause_left_s: f64,
}

impl RwpWalker {
    /// Start at a given position with a freshly drawn leg.
    pub fn at(pos: Point, cfg: &RwpConfig, rng: &mut impl Rng) -> RwpWalker {
        RwpWalker {
            pos,
            waypoint: cfg.uniform_point(rng),
            speed_mps: cfg.uniform_speed(rng),
            pause_left_s: 0.0,
        }
    }

    /// Start at a uniform position.
    pub fn spawn(cfg: &RwpConfig, rng: &mut impl Rng) -> RwpWalker {
        let pos = cfg.uniform_point(rng);
        RwpWalker::at(pos, cfg, rng)
    }

    pub fn position(&self) -> Point {
        self.pos
    }

    /// Advance by `dt_s`, consuming as many legs/pauses as fit in the step.
    pub fn step(&mut self, dt_s: f64, cfg: &RwpConfig, rng: &mut impl Rng) -> Point {
        let mut left = dt_s;
        while left > 0.0 {
            if self.pause_left_s > 0.0 {
                let wait = self.pause_left_s.min(left);
                self.pause_left_s -= wait;
                left -= wait;
                continue;
            }
            let dist_to_wp = self.pos.dist(self.waypoint);
            let travel = self.speed_mps * left;
            if travel < dist_to_wp {
                let f = travel / dist_to_wp;
                self.pos = Point::new(
                    self.pos.x_m + f * (self.waypoint.x_m - self.pos.x_m),
                    self.pos.y_m + f * (self.waypoint.y_m - self.pos.y_m),
                );
                break;
            }
            // arrive, pause, and draw the next leg
            left -= if self.speed_mps > 0.0 { dist_to_wp / self.speed_mps } else { 0.0 };
            self.pos = self.waypoint;
            self.pause_left_s = cfg.pause_s;
            self.waypoint = cfg.uniform_point(rng);
            self.speed_mps = cfg.uniform_speed(rng);
        }
        self.pos
    }
}
