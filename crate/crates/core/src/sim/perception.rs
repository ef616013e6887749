//! Camera model: a target is seen when its rear plate is in range, inside
//! the field of view, and not fully hidden behind other vehicles.

use serde::{Deserialize, Serialize};

use super::geometry::{segment_hits_rect, OrientedRect, Pose, Segment, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerceptionParams {
    pub range_m: f64,
    pub fov_deg: f64,
    pub plate_width_m: f64,
    pub vehicle_length_m: f64,
    pub vehicle_width_m: f64,
}

impl Default for PerceptionParams {
    fn default() -> Self {
        Self { range_m: 65.0, fov_deg: 120.0, plate_width_m: 0.35, vehicle_length_m: 4.0, vehicle_width_m: 1.8 }
    }
}

impl PerceptionParams {
    pub fn validate(&self) -> Result<(), &'static str> {
        let fields = [
            ("range_m", self.range_m),
            ("fov_deg", self.fov_deg),
            ("plate_width_m", self.plate_width_m),
            ("vehicle_length_m", self.vehicle_length_m),
            ("vehicle_width_m", self.vehicle_width_m),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(name);
            }
        }
        Ok(())
    }

    /// Front-centre of the ego vehicle.
    pub fn camera(&self, ego: &Pose) -> Vec2 {
        ego.position() + ego.forward().scale(self.vehicle_length_m / 2.0)
    }

    /// Left end, centre, and right end of the target's rear plate.
    pub fn plate_samples(&self, target: &Pose) -> [Vec2; 3] {
        let fwd = target.forward();
        let center = target.position() - fwd.scale(self.vehicle_length_m / 2.0);
        let half = fwd.perp().scale(self.plate_width_m / 2.0);
        [center + half, center, center - half]
    }

    pub fn body(&self, pose: &Pose) -> OrientedRect {
        OrientedRect::vehicle(pose, self.vehicle_length_m, self.vehicle_width_m)
    }

    /// Range and field-of-view test, without occlusion.
    pub fn in_view(&self, ego: &Pose, target: &Pose) -> bool {
        let camera = self.camera(ego);
        let plate = self.plate_samples(target)[1];
        let to_plate = plate - camera;
        if to_plate.length() > self.range_m {
            return false;
        }
        let fwd = ego.forward();
        let angle = fwd.cross(to_plate).atan2(fwd.dot(to_plate)).abs();
        angle <= (self.fov_deg / 2.0).to_radians()
    }
}

/// Whether `ego` sees `target` given the other vehicles' poses.
pub fn is_seen<'a>(
    params: &PerceptionParams,
    ego: &Pose,
    target: &Pose,
    others: impl IntoIterator<Item = &'a Pose>,
) -> bool {
    if !params.in_view(ego, target) {
        return false;
    }
    let camera = params.camera(ego);
    let samples = params.plate_samples(target);
    let reach = camera.distance(samples[1]) + params.plate_width_m;
    let blockers: Vec<OrientedRect> = others
        .into_iter()
        .map(|p| params.body(p))
        .filter(|r| r.center.distance(camera) <= reach + r.bounding_radius())
        .collect();
    samples.iter().any(|&p| {
        let ray = Segment { a: camera, b: p };
        !blockers.iter().any(|r| segment_hits_rect(&ray, r))
    })
}

/// Indices of the vehicles `ego` sees. `poses[i]` is `None` for vehicles
/// not present this tick.
pub fn compute_visibility(params: &PerceptionParams, poses: &[Option<Pose>], ego: usize) -> Vec<usize> {
    let Some(ego_pose) = poses[ego] else {
        return Vec::new();
    };
    let camera = params.camera(&ego_pose);
    let horizon = params.range_m + params.vehicle_length_m;
    let nearby: Vec<(usize, Pose)> = poses
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|p| (i, p)))
        .filter(|&(i, p)| i != ego && p.position().distance(camera) <= horizon)
        .collect();
    nearby
        .iter()
        .filter(|(_, target)| params.in_view(&ego_pose, target))
        .filter(|&&(t, ref target)| {
            is_seen(params, &ego_pose, target, nearby.iter().filter(|(i, _)| *i != t).map(|(_, p)| p))
        })
        .map(|&(t, _)| t)
        .collect()
}
