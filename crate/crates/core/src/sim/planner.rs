use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Pose};
use crate::world::OccupancyGrid;

pub const DEFAULT_ARRIVAL_TOLERANCE: f64 = 0.15;

/// Expansion order of the 8-connected grid: E, N, W, S, NE, NW, SW, SE.
pub const NEIGHBORS: [(i64, i64); 8] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("{0} lies outside the map")]
    OutOfBounds(&'static str),
    #[error("goal ({x:.2}, {y:.2}) lies inside an inflated obstacle")]
    UnreachableGoal { x: f64, y: f64 },
    #[error("no collision-free path to the goal")]
    NoPath,
}

/// A smoothed route plus the follower's cursor and progress high-water mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavPlan {
    pub goal: Pose,
    pub path: Vec<Point>,
    pub arrival_tolerance: f64,
    /// Cost of the optimal 8-connected grid route before smoothing.
    pub grid_path_length: f64,
    initial_length: f64,
    /// `suffix[i]` = polyline length from `path[i]` to the end.
    suffix: Vec<f64>,
    cursor: usize,
    best_progress: f64,
}

impl NavPlan {
    fn new(goal: Pose, path: Vec<Point>, arrival_tolerance: f64, grid_path_length: f64) -> Self {
        let mut suffix = vec![0.0; path.len()];
        for i in (0..path.len().saturating_sub(1)).rev() {
            suffix[i] = suffix[i + 1] + path[i].distance(path[i + 1]);
        }
        Self {
            goal,
            initial_length: suffix.first().copied().unwrap_or(0.0),
            suffix,
            path,
            arrival_tolerance,
            grid_path_length,
            cursor: 1,
            best_progress: 0.0,
        }
    }

    pub fn length(&self) -> f64 {
        self.initial_length
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn current_target(&self) -> Point {
        self.path[self.cursor.min(self.path.len() - 1)]
    }

    pub fn is_final_segment(&self) -> bool {
        self.cursor + 1 >= self.path.len()
    }

    pub(crate) fn advance_cursor(&mut self) {
        self.cursor = (self.cursor + 1).min(self.path.len() - 1);
    }

    pub fn remaining_length(&self, from: Point) -> f64 {
        let i = self.cursor.min(self.path.len() - 1);
        from.distance(self.path[i]) + self.suffix[i]
    }

    /// `1 - remaining/initial`, clamped and never decreasing along one plan.
    pub(crate) fn record_progress(&mut self, from: Point) -> f64 {
        let p = if self.initial_length <= f64::EPSILON {
            1.0
        } else {
            (1.0 - self.remaining_length(from) / self.initial_length).clamp(0.0, 1.0)
        };
        self.best_progress = self.best_progress.max(p);
        self.best_progress
    }

    pub(crate) fn complete(&mut self) -> f64 {
        self.best_progress = 1.0;
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    index: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then on cell index
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Free neighbours of `index` in [`NEIGHBORS`] order with their step cost.
/// Diagonal steps need both adjacent orthogonal cells free.
pub fn neighbors(grid: &OccupancyGrid, index: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
    let (x, y) = grid.coords(index);
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let res = grid.resolution();
    let free = move |cx: i64, cy: i64| {
        cx >= 0 && cy >= 0 && cx < w && cy < h && grid.is_free(cx as usize, cy as usize)
    };
    NEIGHBORS.iter().filter_map(move |&(dx, dy)| {
        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
        if !free(nx, ny) {
            return None;
        }
        let diagonal = dx != 0 && dy != 0;
        if diagonal && !(free(x as i64 + dx, y as i64) && free(x as i64, y as i64 + dy)) {
            return None;
        }
        let cost = if diagonal {
            res * std::f64::consts::SQRT_2
        } else {
            res
        };
        Some((grid.index(nx as usize, ny as usize), cost))
    })
}

fn octile(grid: &OccupancyGrid, a: usize, b: usize) -> f64 {
    let (ax, ay) = grid.coords(a);
    let (bx, by) = grid.coords(b);
    let dx = ax.abs_diff(bx) as f64;
    let dy = ay.abs_diff(by) as f64;
    grid.resolution() * (dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy))
}

/// Optimal 8-connected route between two free cells: cell indices and cost.
pub fn astar(grid: &OccupancyGrid, start: usize, goal: usize) -> Option<(Vec<usize>, f64)> {
    if !grid.is_free_index(start) || !grid.is_free_index(goal) {
        return None;
    }
    let n = grid.len();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[start] = 0.0;
    open.push(Open {
        f: octile(grid, start, goal),
        index: start,
    });
    while let Some(Open { index, .. }) = open.pop() {
        if closed[index] {
            continue;
        }
        if index == goal {
            let mut cells = vec![goal];
            let mut c = goal;
            while c != start {
                c = parent[c];
                cells.push(c);
            }
            cells.reverse();
            return Some((cells, g[goal]));
        }
        closed[index] = true;
        for (next, cost) in neighbors(grid, index) {
            let tentative = g[index] + cost;
            if !closed[next] && tentative < g[next] {
                g[next] = tentative;
                parent[next] = index;
                open.push(Open {
                    f: tentative + octile(grid, next, goal),
                    index: next,
                });
            }
        }
    }
    None
}

/// Nearest free cell by breadth-first search; used when odometry drift leaves
/// the start inside the inflation band.
fn nearest_free(grid: &OccupancyGrid, from: usize) -> Option<usize> {
    let mut seen = vec![false; grid.len()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(i) = queue.pop_front() {
        if grid.is_free_index(i) {
            return Some(i);
        }
        let (x, y) = grid.coords(i);
        for (dx, dy) in NEIGHBORS {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= grid.width() as i64 || ny >= grid.height() as i64 {
                continue;
            }
            let j = grid.index(nx as usize, ny as usize);
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    None
}

/// Grid A* followed by greedy line-of-sight shortcutting.
pub fn plan(
    grid: &OccupancyGrid,
    from: Pose,
    goal: Pose,
    arrival_tolerance: f64,
) -> Result<NavPlan, PlanError> {
    let (sx, sy) = grid
        .cell_of(from.position())
        .ok_or(PlanError::OutOfBounds("start"))?;
    let (gx, gy) = grid
        .cell_of(goal.position())
        .ok_or(PlanError::OutOfBounds("goal"))?;
    let goal_cell = grid.index(gx, gy);
    if !grid.is_free_index(goal_cell) {
        return Err(PlanError::UnreachableGoal {
            x: goal.x,
            y: goal.y,
        });
    }
    let start_cell = nearest_free(grid, grid.index(sx, sy)).ok_or(PlanError::NoPath)?;
    let (cells, cost) = astar(grid, start_cell, goal_cell).ok_or(PlanError::NoPath)?;

    let mut raw = Vec::with_capacity(cells.len() + 2);
    raw.push(from.position());
    raw.extend(cells.iter().map(|&c| {
        let (x, y) = grid.coords(c);
        grid.center(x, y)
    }));
    raw.push(goal.position());
    Ok(NavPlan::new(
        goal,
        string_pull(grid, &raw),
        arrival_tolerance,
        cost,
    ))
}

fn string_pull(grid: &OccupancyGrid, raw: &[Point]) -> Vec<Point> {
    let mut out = vec![raw[0]];
    let mut anchor = 0;
    while anchor + 1 < raw.len() {
        let mut best = anchor + 1;
        for j in anchor + 2..raw.len() {
            if grid.line_of_sight(raw[anchor], raw[j]) {
                best = j;
            } else {
                break;
            }
        }
        out.push(raw[best]);
        anchor = best;
    }
    out
}
