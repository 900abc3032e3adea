//! Base-station deployments and planar geometry primitives.
//!
//! Transmit powers are stored in watts; the CSV representation uses dBm
//! (`id,x_m,y_m,tx_power_dbm`), converted at the IO boundary.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::{dbm_to_watts, watts_to_dbm};

/// A point in the service area, meters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Point {
    pub x_m: f64,
    pub y_m: f64,
}

impl Point {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Point { x_m, y_m }
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x_m - other.x_m;
        let dy = self.y_m - other.y_m;
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x_m.is_finite() && self.y_m.is_finite()
    }
}

/// Axis-aligned service-area rectangle, meters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x_min_m: f64,
    pub y_min_m: f64,
    pub x_max_m: f64,
    pub y_max_m: f64,
}

impl Rect {
    pub fn new(x_min_m: f64, y_min_m: f64, x_max_m: f64, y_max_m: f64) -> Result<Self> {
        let r = Rect {
            x_min_m,
            y_min_m,
            x_max_m,
            y_max_m,
        };
        if !(r.width_m() > 0.0) || !(r.height_m() > 0.0) || !r.center().is_finite() {
            return Err(Error::domain(format!("degenerate rectangle {r:?}")));
        }
        Ok(r)
    }

    /// `[0, width] x [0, height]`.
    pub fn from_size(width_m: f64, height_m: f64) -> Result<Self> {
        Rect::new(0.0, 0.0, width_m, height_m)
    }

    pub fn width_m(&self) -> f64 {
        self.x_max_m - self.x_min_m
    }

    pub fn height_m(&self) -> f64 {
        self.y_max_m - self.y_min_m
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.x_min_m + self.x_max_m),
            0.5 * (self.y_min_m + self.y_max_m),
        )
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x_m >= self.x_min_m && p.x_m <= self.x_max_m && p.y_m >= self.y_min_m && p.y_m <= self.y_max_m
    }

    /// Clamp a point into the rectangle.
    pub fn clamp(&self, p: Point) -> Point {
        Point::new(
            p.x_m.clamp(self.x_min_m, self.x_max_m),
            p.y_m.clamp(self.y_min_m, self.y_max_m),
        )
    }
}

/// One downlink transmitter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub position: Point,
    /// Transmit power, watts.
    pub tx_power_w: f64,
}

/// A validated set of base stations with ids `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    stations: Vec<BaseStation>,
}

const HETERO_9_CSV: &str = include_str!("../data/deployment_hetero_9.csv");

impl Deployment {
    /// Stations must have unique contiguous ids `0..n` (any order), finite
    /// positions, and positive transmit power.
    pub fn new(mut stations: Vec<BaseStation>) -> Result<Self> {
        if stations.is_empty() {
            return Err(Error::domain("deployment must contain at least one station"));
        }
        stations.sort_by_key(|s| s.id);
        for (k, s) in stations.iter().enumerate() {
            if s.id != k {
                return Err(Error::domain(format!(
                    "station ids must be contiguous 0..{}, found id {}",
                    stations.len(),
                    s.id
                )));
            }
            if !s.position.is_finite() {
                return Err(Error::domain(format!("station {} has non-finite position", s.id)));
            }
            if !(s.tx_power_w > 0.0) || !s.tx_power_w.is_finite() {
                return Err(Error::domain(format!(
                    "station {} must have positive finite power",
                    s.id
                )));
            }
        }
        Ok(Deployment { stations })
    }

    pub fn n_stations(&self) -> usize {
        self.stations.len()
    }

    pub fn stations(&self) -> &[BaseStation] {
        &self.stations
    }

    pub fn get(&self, id: usize) -> Option<&BaseStation> {
        self.stations.get(id)
    }

    /// Smallest pairwise distance between stations; `inf` for one station.
    pub fn min_spacing_m(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.stations.iter().enumerate() {
            for b in &self.stations[i + 1..] {
                best = best.min(a.position.dist(b.position));
            }
        }
        best
    }

    /// Built-in 9-station heterogeneous layout (synthetic stand-in for a
    /// dense urban deployment; see `data/deployment_hetero_9.csv`).
    pub fn hetero_9_standin() -> Deployment {
        Deployment::from_csv_str(HETERO_9_CSV, "<built-in>").expect("built-in deployment is valid")
    }

    /// Parse `id,x_m,y_m,tx_power_dbm` CSV. Lines starting with `#` are
    /// comments.
    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, "empty deployment file"))?;
        let expect = "id,x_m,y_m,tx_power_dbm";
        let normalized = header
            .split(',')
            .map(str::trim)
            .collect::<Vec<_>>()
            .join(",")
            .to_ascii_lowercase();
        if normalized != expect {
            return Err(Error::parse(
                origin,
                format!("expected header `{expect}`, got `{header}`"),
            ));
        }
        let mut stations = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    origin,
                    format!("line {}: expected 4 fields, got {}", lineno + 1, fields.len()),
                ));
            }
            let id: usize = fields[0].parse().map_err(|_| {
                Error::parse(origin, format!("line {}: bad id `{}`", lineno + 1, fields[0]))
            })?;
            let num = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::parse(origin, format!("line {}: bad {what} `{s}`", lineno + 1))
                })
            };
            stations.push(BaseStation {
                id,
                position: Point::new(num(fields[1], "x_m")?, num(fields[2], "y_m")?),
                tx_power_w: dbm_to_watts(num(fields[3], "tx_power_dbm")?),
            });
        }
        Deployment::new(stations)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Deployment::from_csv_str(&text, &path.display().to_string())
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("id,x_m,y_m,tx_power_dbm\n");
        for s in &self.stations {
            writeln!(
                out,
                "{},{},{},{}",
                s.id,
                s.position.x_m,
                s.position.y_m,
                watts_to_dbm(s.tx_power_w)
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builtin_hetero_deployment_parses() {
        let d = Deployment::hetero_9_standin();
        assert_eq!(d.n_stations(), 9);
        // central macro at 40 dBm = 10 W
        assert_relative_eq!(d.get(0).unwrap().tx_power_w, 10.0, max_relative = 1e-12);
        assert!(d.min_spacing_m() > 50.0);
    }

    #[test]
    fn rejects_duplicate_and_gapped_ids() {
        let s = |id| BaseStation {
            id,
            position: Point::new(0.0, id as f64),
            tx_power_w: 0.25,
        };
        assert!(Deployment::new(vec![s(0), s(0)]).is_err());
        assert!(Deployment::new(vec![s(0), s(2)]).is_err());
        assert!(Deployment::new(vec![]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let d = Deployment::hetero_9_standin();
        let back = Deployment::from_csv_str(&d.to_csv_string(), "<round-trip>").unwrap();
        for (a, b) in d.stations().iter().zip(back.stations()) {
            assert_eq!(a.id, b.id);
            assert_relative_eq!(a.position.x_m, b.position.x_m);
            assert_relative_eq!(a.tx_power_w, b.tx_power_w, max_relative = 1e-12);
        }
    }

    #[test]
    fn rect_validation_and_clamp() {
        assert!(Rect::from_size(0.0, 10.0).is_err());
        let r = Rect::from_size(150.0, 100.0).unwrap();
        assert_eq!(r.center(), Point::new(75.0, 50.0));
        assert!(r.contains(Point::new(150.0, 0.0)));
        let p = r.clamp(Point::new(-5.0, 120.0));
        assert_eq!(p, Point::new(0.0, 100.0));
    }
}
