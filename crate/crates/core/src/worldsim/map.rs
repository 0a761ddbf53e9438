use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Discretized 2D world. Cell `(i, j)` covers
/// `[i·res, (i+1)·res) × [j·res, (j+1)·res)`; row `j = 0` is the minimum-y row.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyMap {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<bool>,
}

impl OccupancyMap {
    /// All-free map.
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self> {
        Self::from_cells(width, height, resolution, vec![false; width * height])
    }

    pub fn from_cells(width: usize, height: usize, resolution: f64, cells: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidSpec(format!("map dimensions {width}x{height} must be positive")));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidSpec(format!("resolution {resolution} must be positive")));
        }
        if cells.len() != width * height {
            return Err(Error::InvalidSpec(format!(
                "{} cells given for a {width}x{height} map",
                cells.len()
            )));
        }
        Ok(Self { width, height, resolution, cells })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// World extent in meters, `(width, height)`.
    pub fn extent(&self) -> (f64, f64) {
        (self.width as f64 * self.resolution, self.height as f64 * self.resolution)
    }

    pub fn occupied(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.width + i]
    }

    /// Occupancy with out-of-range indices reported as free.
    pub fn occupied_signed(&self, i: i64, j: i64) -> bool {
        self.in_bounds(i, j) && self.occupied(i as usize, j as usize)
    }

    pub fn in_bounds(&self, i: i64, j: i64) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height
    }

    pub fn set(&mut self, i: usize, j: usize, occupied: bool) {
        self.cells[j * self.width + i] = occupied;
    }

    /// Mark every cell whose center lies in the axis-aligned rectangle.
    pub fn fill_rect(&mut self, min: Vec2, max: Vec2, occupied: bool) {
        let res = self.resolution;
        for j in 0..self.height {
            let cy = (j as f64 + 0.5) * res;
            if cy < min.y || cy > max.y {
                continue;
            }
            for i in 0..self.width {
                let cx = (i as f64 + 0.5) * res;
                if cx >= min.x && cx <= max.x {
                    self.set(i, j, occupied);
                }
            }
        }
    }

    /// Cell containing a world point, `None` outside the map.
    pub fn cell_of(&self, p: Vec2) -> Option<(usize, usize)> {
        let (i, j) = self.cell_index(p);
        self.in_bounds(i, j).then_some((i as usize, j as usize))
    }

    /// Signed cell index of a point (may lie outside the map).
    pub fn cell_index(&self, p: Vec2) -> (i64, i64) {
        ((p.x / self.resolution).floor() as i64, (p.y / self.resolution).floor() as i64)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.cell_of(p).is_some()
    }

    /// True when `p` lies inside the map in a free cell.
    pub fn is_free_point(&self, p: Vec2) -> bool {
        matches!(self.cell_of(p), Some((i, j)) if !self.occupied(i, j))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new((i as f64 + 0.5) * self.resolution, (j as f64 + 0.5) * self.resolution)
    }

    /// Closest point of cell `(i, j)`'s square to `p`.
    pub fn closest_point_in_cell(&self, i: i64, j: i64, p: Vec2) -> Vec2 {
        let r = self.resolution;
        let (x0, y0) = (i as f64 * r, j as f64 * r);
        Vec2::new(p.x.clamp(x0, x0 + r), p.y.clamp(y0, y0 + r))
    }

    pub fn free_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| !**c).count()
    }

    /// Nearest occupied cell boundary point within `max_dist` of `p`.
    ///
    /// Returns `(distance, closest point)`. Cells outside the map are ignored.
    pub fn nearest_occupied(&self, p: Vec2, max_dist: f64) -> Option<(f64, Vec2)> {
        let (ci, cj) = self.cell_index(p);
        let res = self.resolution;
        let max_ring = (max_dist / res).ceil() as i64 + 1;
        let mut best: Option<(f64, Vec2)> = None;
        for k in 0..=max_ring {
            let lower = (k - 1).max(0) as f64 * res;
            if lower > max_dist || best.is_some_and(|(d, _)| lower > d) {
                break;
            }
            let mut visit = |i: i64, j: i64| {
                if self.occupied_signed(i, j) {
                    let q = self.closest_point_in_cell(i, j, p);
                    let d = (q - p).norm();
                    if d <= max_dist && best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, q));
                    }
                }
            };
            if k == 0 {
                visit(ci, cj);
                continue;
            }
            for di in -k..=k {
                visit(ci + di, cj - k);
                visit(ci + di, cj + k);
            }
            for dj in (-k + 1)..k {
                visit(ci - k, cj + dj);
                visit(ci + k, cj + dj);
            }
        }
        best
    }

    /// Parse the text map format: a `width height resolution` header followed
    /// by `height` rows of `#`/`.`; the first row listed is row 0 (minimum y).
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.split('\n');
        let header = lines.next().ok_or_else(|| Error::format(1, "empty map file"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 3 {
            return Err(Error::format(1, "header must be `width_cells height_cells resolution_m`"));
        }
        let width: usize = fields[0].parse().map_err(|_| Error::format(1, "bad width"))?;
        let height: usize = fields[1].parse().map_err(|_| Error::format(1, "bad height"))?;
        let resolution: f64 = fields[2].parse().map_err(|_| Error::format(1, "bad resolution"))?;
        if width == 0 || height == 0 || !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::format(1, "dimensions and resolution must be positive"));
        }
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            let line_no = row + 2;
            let line = lines.next().ok_or_else(|| Error::format(line_no, "missing map row"))?;
            if line.len() != width {
                return Err(Error::format(line_no, format!("row has {} chars, expected {width}", line.len())));
            }
            for ch in line.bytes() {
                match ch {
                    b'#' => cells.push(true),
                    b'.' => cells.push(false),
                    other => {
                        return Err(Error::format(line_no, format!("unexpected character {:?}", other as char)))
                    }
                }
            }
        }
        // A single trailing newline is allowed, nothing else.
        match (lines.next(), lines.next()) {
            (None, _) | (Some(""), None) => {}
            _ => return Err(Error::format(height + 2, "trailing content after map rows")),
        }
        Self::from_cells(width, height, resolution, cells)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height + 32);
        let _ = writeln!(out, "{} {} {}", self.width, self.height, self.resolution);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|&c| if c { '#' } else { '.' }));
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
