use serde::{Deserialize, Serialize};

use super::{WorldError, WorldSpec};
use crate::geometry::Point;

pub const DEFAULT_RESOLUTION: f64 = 0.10;

/// Boolean occupancy over the world bounds. Cell `(ix, iy)` covers
/// `[xmin + ix*res, xmin + (ix+1)*res) x [ymin + iy*res, ...)`; storage is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    origin: Point,
    resolution: f64,
    width: usize,
    height: usize,
    inflation: f64,
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn center(&self, ix: usize, iy: usize) -> Point {
        Point::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fx = (p.x - self.origin.x) / self.resolution;
        let fy = (p.y - self.origin.y) / self.resolution;
        if !(fx.is_finite() && fy.is_finite()) || fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        // points on the max edge belong to the last cell
        let ix = if ix == self.width && fx <= self.width as f64 {
            ix - 1
        } else {
            ix
        };
        let iy = if iy == self.height && fy <= self.height as f64 {
            iy - 1
        } else {
            iy
        };
        (ix < self.width && iy < self.height).then_some((ix, iy))
    }

    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[self.index(ix, iy)]
    }

    pub fn is_free(&self, ix: usize, iy: usize) -> bool {
        !self.is_occupied(ix, iy)
    }

    pub fn is_free_index(&self, index: usize) -> bool {
        !self.occupied[index]
    }

    /// Out-of-bounds points count as blocked.
    pub fn is_free_point(&self, p: Point) -> bool {
        self.cell_of(p).is_some_and(|(ix, iy)| self.is_free(ix, iy))
    }

    pub fn free_count(&self) -> usize {
        self.occupied.iter().filter(|o| !**o).count()
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.then_some(i))
    }

    /// Samples the segment every quarter cell; every sample must fall in a free cell.
    pub fn line_of_sight(&self, a: Point, b: Point) -> bool {
        let length = a.distance(b);
        let steps = ((length / (self.resolution * 0.25)).ceil() as usize).max(1);
        (0..=steps).all(|i| {
            let t = i as f64 / steps as f64;
            self.is_free_point(Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t))
        })
    }
}

pub fn rasterize(world: &WorldSpec, robot_radius: f64) -> Result<OccupancyGrid, WorldError> {
    rasterize_with_resolution(world, robot_radius, DEFAULT_RESOLUTION)
}

/// A cell is occupied iff its center lies within `robot_radius` of some obstacle.
pub fn rasterize_with_resolution(
    world: &WorldSpec,
    robot_radius: f64,
    resolution: f64,
) -> Result<OccupancyGrid, WorldError> {
    if !(robot_radius.is_finite() && robot_radius >= 0.0) {
        return Err(WorldError::Validation {
            entity: "robot_radius".into(),
            reason: "must be finite and non-negative".into(),
        });
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(WorldError::Validation {
            entity: "resolution".into(),
            reason: "must be positive".into(),
        });
    }
    let b = world.bounds;
    let width = (((b.xmax - b.xmin) / resolution) - 1e-9).ceil().max(1.0) as usize;
    let height = (((b.ymax - b.ymin) / resolution) - 1e-9).ceil().max(1.0) as usize;
    let mut grid = OccupancyGrid {
        origin: Point::new(b.xmin, b.ymin),
        resolution,
        width,
        height,
        inflation: robot_radius,
        occupied: vec![false; width * height],
    };
    let span = |lo: f64, hi: f64, origin: f64, n: usize| {
        let first = (((lo - origin) / resolution) - 0.5).floor().max(0.0) as usize;
        let last = ((((hi - origin) / resolution) - 0.5).ceil().max(0.0) as usize).min(n - 1);
        first..=last
    };
    for o in &world.obstacles {
        let xs = span(o.xmin - robot_radius, o.xmax + robot_radius, b.xmin, width);
        let ys = span(o.ymin - robot_radius, o.ymax + robot_radius, b.ymin, height);
        for iy in ys {
            for ix in xs.clone() {
                if o.distance(grid.center(ix, iy)) <= robot_radius {
                    let i = grid.index(ix, iy);
                    grid.occupied[i] = true;
                }
            }
        }
    }
    Ok(grid)
}
