//! Planar primitives for the perception model.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;

    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;

    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `deg` degrees counter-clockwise from +x.
    pub fn from_heading_deg(deg: f64) -> Self {
        // Exact for the four axis headings produced by the grid.
        match deg.rem_euclid(360.0) {
            0.0 => Self::new(1.0, 0.0),
            90.0 => Self::new(0.0, 1.0),
            180.0 => Self::new(-1.0, 0.0),
            270.0 => Self::new(0.0, -1.0),
            d => {
                let r = d.to_radians();
                Self::new(r.cos(), r.sin())
            }
        }
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn length(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).length()
    }

    /// Rotated +90°.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
}

impl Pose {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_heading_deg(self.heading_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

/// Rectangle centred on a pose, long side along the heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Vec2,
    pub axis: Vec2,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedRect {
    pub fn vehicle(pose: &Pose, length: f64, width: f64) -> Self {
        Self { center: pose.position(), axis: pose.forward(), half_length: length / 2.0, half_width: width / 2.0 }
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let l = self.axis.scale(self.half_length);
        let w = self.axis.perp().scale(self.half_width);
        let c = self.center;
        [c + l + w, c - l + w, c - l - w, c + l - w]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let d = p - self.center;
        d.dot(self.axis).abs() <= self.half_length && d.dot(self.axis.perp()).abs() <= self.half_width
    }

    /// Radius of the circumscribed circle.
    pub fn bounding_radius(&self) -> f64 {
        self.half_length.hypot(self.half_width)
    }
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

pub fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let d1 = orient(t.a, t.b, s.a);
    let d2 = orient(t.a, t.b, s.b);
    let d3 = orient(s.a, s.b, t.a);
    let d4 = orient(s.a, s.b, t.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(t.a, t.b, s.a))
        || (d2 == 0.0 && on_segment(t.a, t.b, s.b))
        || (d3 == 0.0 && on_segment(s.a, s.b, t.a))
        || (d4 == 0.0 && on_segment(s.a, s.b, t.b))
}

/// True if any part of the segment lies inside or on the rectangle.
pub fn segment_hits_rect(s: &Segment, r: &OrientedRect) -> bool {
    if r.contains(s.a) || r.contains(s.b) {
        return true;
    }
    let c = r.corners();
    (0..4).any(|i| segments_intersect(s, &Segment { a: c[i], b: c[(i + 1) % 4] }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment { a: Vec2::new(ax, ay), b: Vec2::new(bx, by) }
    }

    #[test]
    fn axis_headings_are_exact() {
        assert_eq!(Vec2::from_heading_deg(90.0), Vec2::new(0.0, 1.0));
        assert_eq!(Vec2::from_heading_deg(-90.0), Vec2::new(0.0, -1.0));
        let v = Vec2::from_heading_deg(45.0);
        assert!((v.x - v.y).abs() < 1e-12);
    }

    #[test]
    fn crossing_and_parallel_segments() {
        assert!(segments_intersect(&seg(0.0, 0.0, 2.0, 2.0), &seg(0.0, 2.0, 2.0, 0.0)));
        assert!(!segments_intersect(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.0, 1.0, 1.0, 1.0)));
        assert!(segments_intersect(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, 0.0, 3.0, 0.0)));
        assert!(!segments_intersect(&seg(0.0, 0.0, 1.0, 0.0), &seg(2.0, 0.0, 3.0, 0.0)));
    }

    #[test]
    fn rect_blocking() {
        let pose = Pose { x: 5.0, y: 0.0, heading_deg: 0.0 };
        let r = OrientedRect::vehicle(&pose, 4.0, 1.8);
        assert!(segment_hits_rect(&seg(0.0, 0.0, 10.0, 0.0), &r));
        assert!(!segment_hits_rect(&seg(0.0, 1.0, 10.0, 1.0), &r));
        assert!(segment_hits_rect(&seg(0.0, 0.89, 10.0, 0.89), &r));
        // Segment fully inside.
        assert!(segment_hits_rect(&seg(4.5, 0.0, 5.5, 0.0), &r));
        let rotated = OrientedRect::vehicle(&Pose { heading_deg: 90.0, ..pose }, 4.0, 1.8);
        assert!(!segment_hits_rect(&seg(0.0, 1.5, 10.0, 1.5), &OrientedRect { ..r }));
        assert!(segment_hits_rect(&seg(0.0, 1.5, 10.0, 1.5), &rotated));
    }
}
