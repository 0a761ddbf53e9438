use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{to_robot_frame, Vec2};
use crate::worldsim::Pose;

pub const DEFAULT_WAYPOINT_SPACING: f64 = 1.0;
pub const DEFAULT_REACH_RADIUS: f64 = 0.3;
pub const DEFAULT_PARTIAL_WAYPOINTS: usize = 2;

/// Waypoint sequence with monotone, prefix-closed reached flags.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidancePath {
    waypoints: Vec<Vec2>,
    reached: Vec<bool>,
    /// Separation between consecutive interpolated waypoints.
    pub spacing: f64,
    /// Distance within which a waypoint counts as reached.
    pub reach_radius: f64,
}

impl GuidancePath {
    /// Wrap raw waypoints without interpolation.
    pub fn from_waypoints(waypoints: Vec<Vec2>, spacing: f64, reach_radius: f64) -> Self {
        assert!(!waypoints.is_empty(), "guidance path needs at least one waypoint");
        assert!(spacing > 0.0 && reach_radius > 0.0);
        let reached = vec![false; waypoints.len()];
        Self { waypoints, reached, spacing, reach_radius }
    }

    pub fn waypoints(&self) -> &[Vec2] {
        &self.waypoints
    }

    pub fn reached(&self) -> &[bool] {
        &self.reached
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn reached_count(&self) -> usize {
        self.reached.iter().take_while(|r| **r).count()
    }

    pub fn first_unreached(&self) -> Option<usize> {
        let n = self.reached_count();
        (n < self.len()).then_some(n)
    }

    pub fn all_reached(&self) -> bool {
        self.first_unreached().is_none()
    }

    pub fn goal(&self) -> Vec2 {
        *self.waypoints.last().expect("non-empty path")
    }

    /// Polyline length through all waypoints.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Mark waypoints reached, scanning forward from the first unreached one:
    /// `w_i` flips iff the robot is strictly within the reach radius and
    /// `w_{i−1}` is reached. Returns how many flags flipped.
    pub fn update_reached(&mut self, robot: Vec2) -> usize {
        let mut flipped = 0;
        while let Some(i) = self.first_unreached() {
            if (robot - self.waypoints[i]).norm() < self.reach_radius {
                self.reached[i] = true;
                flipped += 1;
            } else {
                break;
            }
        }
        flipped
    }

    /// The first unreached waypoint and the next `n_partial`, padded with the
    /// final waypoint, in the believed robot frame.
    pub fn partial_observation(&self, believed: &Pose, n_partial: usize) -> Result<Vec<Vec2>> {
        let first = self.first_unreached().ok_or(Error::AllReached)?;
        let last = self.len() - 1;
        Ok((0..=n_partial)
            .map(|k| self.waypoints[(first + k).min(last)])
            .map(|w| to_robot_frame(w, believed.position(), believed.heading))
            .collect())
    }

    /// Point at arc length `distance` along the path beyond waypoint `from`,
    /// clamped to the final waypoint.
    pub fn point_along(&self, from: usize, distance: f64) -> Vec2 {
        let mut remaining = distance;
        for w in self.waypoints[from..].windows(2) {
            let seg = (w[1] - w[0]).norm();
            if remaining <= seg && seg > 0.0 {
                return w[0] + (w[1] - w[0]) * (remaining / seg);
            }
            remaining -= seg;
        }
        self.goal()
    }

    /// `x y reached_flag` per line.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        for (w, r) in self.waypoints.iter().zip(&self.reached) {
            let _ = writeln!(out, "{} {} {}", w.x, w.y, u8::from(*r));
        }
        out
    }

    pub fn parse_dump(text: &str, spacing: f64, reach_radius: f64) -> Result<Self> {
        let mut waypoints = Vec::new();
        let mut reached = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::format(n + 1, "expected `x y reached_flag`"));
            }
            let x: f64 = f[0].parse().map_err(|_| Error::format(n + 1, "bad x"))?;
            let y: f64 = f[1].parse().map_err(|_| Error::format(n + 1, "bad y"))?;
            let r = match f[2] {
                "0" => false,
                "1" => true,
                _ => return Err(Error::format(n + 1, "reached flag must be 0 or 1")),
            };
            waypoints.push(Vec2::new(x, y));
            reached.push(r);
        }
        if waypoints.is_empty() {
            return Err(Error::Format { line: None, msg: "empty path dump".into() });
        }
        if reached.windows(2).any(|w| w[1] && !w[0]) {
            return Err(Error::Format { line: None, msg: "reached flags are not prefix-closed".into() });
        }
        Ok(Self { waypoints, reached, spacing, reach_radius })
    }
}

/// Resample a polyline so consecutive waypoints are exactly `spacing` apart
/// (Euclidean), walking forward along the polyline. The final pair may be
/// shorter; both endpoints are kept exactly.
pub fn interpolate_path(raw: &[Vec2], spacing: f64, reach_radius: f64) -> GuidancePath {
    assert!(!raw.is_empty(), "raw path must be non-empty");
    assert!(spacing > 0.0);
    let end = *raw.last().unwrap();
    let mut out = vec![raw[0]];
    let mut current = raw[0];
    // Position on the polyline: segment index and parameter within it.
    let mut seg = 0usize;
    let mut t0 = 0.0f64;
    let r2 = spacing * spacing;
    'outer: while seg + 1 < raw.len() {
        let (a, b) = (raw[seg], raw[seg + 1]);
        let d = b - a;
        let dd = d.norm_squared();
        if dd == 0.0 {
            seg += 1;
            t0 = 0.0;
            continue;
        }
        // Solve |a + t·d − current|² = spacing² for the smallest t ≥ t0.
        let f = a - current;
        let bq = 2.0 * f.dot(&d);
        let cq = f.norm_squared() - r2;
        let disc = bq * bq - 4.0 * dd * cq;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-bq - sq) / (2.0 * dd), (-bq + sq) / (2.0 * dd)] {
                if t >= t0 && t <= 1.0 + 1e-12 {
                    let t = t.min(1.0);
                    let p = a + d * t;
                    out.push(p);
                    current = p;
                    t0 = t;
                    continue 'outer;
                }
            }
        }
        seg += 1;
        t0 = 0.0;
    }
    let last = out.len() - 1;
    if last > 0 && (out[last] - end).norm() <= 1e-9 {
        out[last] = end;
    } else if (out[last] - end).norm() > 0.0 {
        out.push(end);
    }
    GuidancePath::from_waypoints(out, spacing, reach_radius)
}
