//! Vehicle motion: a Manhattan grid with shortest-path routing, or
//! playback of a recorded trace.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{Pose, Vec2};
use super::trace::Trace;

/// Lateral offset of the driving lane from the road centreline (right-hand
/// traffic), so opposing vehicles do not overlap.
pub const LANE_OFFSET_M: f64 = 1.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManhattanParams {
    pub rows: u32,
    pub cols: u32,
    pub block_m: f64,
    pub n_vehicles: usize,
    pub speed_min: f64,
    pub speed_max: f64,
}

impl Default for ManhattanParams {
    fn default() -> Self {
        Self { rows: 10, cols: 10, block_m: 100.0, n_vehicles: 100, speed_min: 8.0, speed_max: 14.0 }
    }
}

impl ManhattanParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.rows == 0 || self.cols == 0 {
            return Err("rows and cols must be positive".into());
        }
        if self.block_m.is_nan() || self.block_m <= 0.0 {
            return Err("block_m must be positive".into());
        }
        if self.n_vehicles == 0 {
            return Err("n_vehicles must be positive".into());
        }
        if !(self.speed_min > 0.0 && self.speed_min <= self.speed_max) {
            return Err("speed range must satisfy 0 < speed_min <= speed_max".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub row: u32,
    pub col: u32,
}

/// (rows + 1) x (cols + 1) intersections joined by `block_m` streets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoadGrid {
    pub rows: u32,
    pub cols: u32,
    pub block_m: f64,
}

impl RoadGrid {
    pub fn node_count(&self) -> usize {
        ((self.rows + 1) * (self.cols + 1)) as usize
    }

    pub fn position(&self, n: Node) -> Vec2 {
        Vec2::new(n.col as f64 * self.block_m, n.row as f64 * self.block_m)
    }

    /// Width and height of the map in metres.
    pub fn extent(&self) -> (f64, f64) {
        (self.cols as f64 * self.block_m, self.rows as f64 * self.block_m)
    }

    pub fn neighbors(&self, n: Node) -> Vec<Node> {
        let mut out = Vec::with_capacity(4);
        if n.col < self.cols {
            out.push(Node { row: n.row, col: n.col + 1 });
        }
        if n.row < self.rows {
            out.push(Node { row: n.row + 1, col: n.col });
        }
        if n.col > 0 {
            out.push(Node { row: n.row, col: n.col - 1 });
        }
        if n.row > 0 {
            out.push(Node { row: n.row - 1, col: n.col });
        }
        out
    }

    pub fn directed_edges(&self) -> Vec<(Node, Node)> {
        let mut out = Vec::new();
        for row in 0..=self.rows {
            for col in 0..=self.cols {
                let n = Node { row, col };
                out.extend(self.neighbors(n).into_iter().map(|m| (n, m)));
            }
        }
        out
    }

    fn random_node<R: Rng>(&self, rng: &mut R) -> Node {
        Node { row: rng.gen_range(0..=self.rows), col: rng.gen_range(0..=self.cols) }
    }

    /// Neighbours of `from` one step closer to `to`. Choosing uniformly among
    /// them at every intersection yields a random shortest path.
    pub fn next_hops(&self, from: Node, to: Node) -> Vec<Node> {
        let d = |a: Node| a.row.abs_diff(to.row) + a.col.abs_diff(to.col);
        let here = d(from);
        self.neighbors(from).into_iter().filter(|&m| d(m) < here).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridVehicle {
    pub from: Node,
    pub to: Node,
    pub offset_m: f64,
    pub speed: f64,
    pub destination: Node,
}

impl GridVehicle {
    fn heading_deg(&self) -> f64 {
        match (self.to.col as i64 - self.from.col as i64, self.to.row as i64 - self.from.row as i64) {
            (1, 0) => 0.0,
            (0, 1) => 90.0,
            (-1, 0) => 180.0,
            _ => 270.0,
        }
    }

    pub fn pose(&self, grid: &RoadGrid) -> Pose {
        let heading_deg = self.heading_deg();
        let dir = Vec2::from_heading_deg(heading_deg);
        // Right of travel direction is -perp.
        let p = grid.position(self.from) + dir.scale(self.offset_m) - dir.perp().scale(LANE_OFFSET_M);
        Pose { x: p.x, y: p.y, heading_deg }
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_heading_deg(self.heading_deg()).scale(self.speed)
    }

    fn pick_destination<R: Rng>(grid: &RoadGrid, not: Node, rng: &mut R) -> Node {
        loop {
            let n = grid.random_node(rng);
            if n != not {
                return n;
            }
        }
    }

    /// Moves one second along the route, turning at intersections and drawing
    /// a new destination on arrival.
    pub fn advance<R: Rng>(&mut self, grid: &RoadGrid, rng: &mut R) {
        let mut travel = self.speed;
        loop {
            let remaining = grid.block_m - self.offset_m;
            if travel < remaining {
                self.offset_m += travel;
                return;
            }
            travel -= remaining;
            let at = self.to;
            if at == self.destination {
                self.destination = Self::pick_destination(grid, at, rng);
            }
            let hops = grid.next_hops(at, self.destination);
            let next = hops[rng.gen_range(0..hops.len())];
            self.from = at;
            self.to = next;
            self.offset_m = 0.0;
        }
    }
}

#[derive(Debug, Clone)]
pub struct ManhattanWorld {
    pub grid: RoadGrid,
    pub vehicles: Vec<GridVehicle>,
}

/// Places `n_vehicles` on uniformly random directed edges with random
/// destinations and speeds. No vehicles are added or removed afterwards.
pub fn generate_manhattan<R: Rng>(params: &ManhattanParams, rng: &mut R) -> ManhattanWorld {
    let grid = RoadGrid { rows: params.rows, cols: params.cols, block_m: params.block_m };
    let edges = grid.directed_edges();
    let vehicles = (0..params.n_vehicles)
        .map(|_| {
            let (from, to) = edges[rng.gen_range(0..edges.len())];
            let offset_m = rng.gen_range(0.0..params.block_m);
            let speed = if params.speed_min == params.speed_max {
                params.speed_min
            } else {
                rng.gen_range(params.speed_min..params.speed_max)
            };
            let destination = GridVehicle::pick_destination(&grid, to, rng);
            GridVehicle { from, to, offset_m, speed, destination }
        })
        .collect();
    ManhattanWorld { grid, vehicles }
}

/// Source of per-tick poses for a fixed set of vehicle slots.
#[derive(Debug, Clone)]
pub enum Mobility {
    Grid(ManhattanWorld),
    Trace(Trace),
}

impl Mobility {
    pub fn slot_count(&self) -> usize {
        match self {
            Mobility::Grid(w) => w.vehicles.len(),
            Mobility::Trace(t) => t.vehicle_ids().len(),
        }
    }

    /// Ground-truth identifier of each slot.
    pub fn ground_truth_ids(&self) -> Vec<u32> {
        match self {
            Mobility::Grid(w) => (0..w.vehicles.len() as u32).collect(),
            Mobility::Trace(t) => t.vehicle_ids().to_vec(),
        }
    }

    /// Pose and velocity per slot at `tick`. Tick 0 is the initial
    /// placement; grid vehicles move one second per later tick, so ticks must
    /// be visited in order.
    pub fn advance<R: Rng>(&mut self, tick: u64, rng: &mut R) -> Vec<Option<(Pose, Vec2)>> {
        match self {
            Mobility::Grid(w) => {
                let grid = w.grid;
                w.vehicles
                    .iter_mut()
                    .map(|v| {
                        if tick > 0 {
                            v.advance(&grid, rng);
                        }
                        Some((v.pose(&grid), v.velocity()))
                    })
                    .collect()
            }
            Mobility::Trace(t) => t.frame(tick),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_geometry() {
        let params = ManhattanParams::default();
        let w = generate_manhattan(&params, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(w.grid.extent(), (1000.0, 1000.0));
        assert_eq!(w.grid.node_count(), 121);
        // 2 * (10 * 11) undirected streets in each axis, both directions.
        assert_eq!(w.grid.directed_edges().len(), 2 * 2 * 110);
        assert_eq!(w.vehicles.len(), 100);
    }

    #[test]
    fn placement_is_seeded() {
        let params = ManhattanParams::default();
        let a = generate_manhattan(&params, &mut ChaCha8Rng::seed_from_u64(9));
        let b = generate_manhattan(&params, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a.vehicles, b.vehicles);
    }

    #[test]
    fn vehicles_stay_on_map_and_move_at_speed() {
        let params = ManhattanParams { n_vehicles: 20, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut w = generate_manhattan(&params, &mut rng);
        let mut m = Mobility::Grid(w.clone());
        for tick in 1..500 {
            for (pose, vel) in m.advance(tick, &mut rng).into_iter().flatten() {
                assert!(pose.x >= -2.0 && pose.x <= 1002.0 && pose.y >= -2.0 && pose.y <= 1002.0);
                assert!((8.0..14.0).contains(&vel.length()));
            }
        }
        // Straight-line progress on an edge equals speed.
        let v = &mut w.vehicles[0];
        v.offset_m = 0.0;
        let before = v.pose(&w.grid);
        v.advance(&w.grid, &mut rng);
        let after = v.pose(&w.grid);
        assert!((before.position().distance(after.position()) - v.speed).abs() < 1e-9);
    }

    #[test]
    fn next_hops_reduce_distance() {
        let grid = RoadGrid { rows: 10, cols: 10, block_m: 100.0 };
        let hops = grid.next_hops(Node { row: 0, col: 0 }, Node { row: 3, col: 2 });
        assert_eq!(hops, vec![Node { row: 0, col: 1 }, Node { row: 1, col: 0 }]);
        assert!(grid.next_hops(Node { row: 2, col: 2 }, Node { row: 2, col: 2 }).is_empty());
    }
}
