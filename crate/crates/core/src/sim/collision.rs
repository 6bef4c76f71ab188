//! Oriented-rectangle overlap by the separating axis test.

use super::world::{VehicleGeometry, WorldState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Footprint {
    pub cx: f64,
    pub cy: f64,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl Footprint {
    pub fn new(cx: f64, cy: f64, heading: f64, geometry: VehicleGeometry) -> Self {
        Self { cx, cy, heading, length: geometry.length, width: geometry.width }
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.heading.sin_cos();
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
            .map(|(lx, ly)| (self.cx + lx * c - ly * s, self.cy + lx * s + ly * c))
    }

    fn axes(&self) -> [(f64, f64); 2] {
        let (s, c) = self.heading.sin_cos();
        [(c, s), (-s, c)]
    }
}

fn project(corners: &[(f64, f64); 4], axis: (f64, f64)) -> (f64, f64) {
    corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let d = p.0 * axis.0 + p.1 * axis.1;
        (lo.min(d), hi.max(d))
    })
}

/// True iff the interiors intersect; rectangles that only touch do not
/// overlap.
pub fn overlaps(a: &Footprint, b: &Footprint) -> bool {
    let (ca, cb) = (a.corners(), b.corners());
    a.axes().iter().chain(b.axes().iter()).all(|&axis| {
        let (a_lo, a_hi) = project(&ca, axis);
        let (b_lo, b_hi) = project(&cb, axis);
        a_hi > b_lo && b_hi > a_lo
    })
}

/// Id of the first surrounding vehicle whose footprint overlaps the ego's.
pub fn detect_collision(world: &WorldState) -> Option<usize> {
    let ego = Footprint::new(world.ego.x, world.ego.y, world.ego.theta, world.geometry);
    world.vehicles.iter().find(|v| overlaps(&ego, &Footprint::new(v.x, v.y, 0.0, world.geometry))).map(|v| v.id)
}
