//! Ego body geometry and rectangle clearance, used for reporting only. The
//! planner itself treats the ego vehicle as its rear-axle reference point.

use crate::dynamics::VehicleState;
use crate::scene::Footprint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleGeometry {
    pub length: f64,
    pub width: f64,
    /// Distance from the rear bumper to the reference point (rear axle), m.
    pub rear_overhang: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self {
            length: 4.5,
            width: 1.8,
            rear_overhang: 0.8,
        }
    }
}

impl VehicleGeometry {
    pub fn footprint(&self, state: &VehicleState) -> Footprint {
        let offset = self.length / 2.0 - self.rear_overhang;
        let (s, c) = state.theta.sin_cos();
        Footprint {
            center: [state.x + c * offset, state.y + s * offset],
            yaw: state.theta,
            length: self.length,
            width: self.width,
        }
    }

    /// Distance from the reference point to the front bumper.
    pub fn front_extent(&self) -> f64 {
        self.length - self.rear_overhang
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

fn separated_along_axes(a: &[[f64; 2]; 4], b: &[[f64; 2]; 4]) -> bool {
    for poly in [a, b] {
        for i in 0..2 {
            let e = [poly[i + 1][0] - poly[i][0], poly[i + 1][1] - poly[i][1]];
            let axis = [-e[1], e[0]];
            let project = |q: &[[f64; 2]; 4]| {
                q.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    let d = p[0] * axis[0] + p[1] * axis[1];
                    (lo.min(d), hi.max(d))
                })
            };
            let (a0, a1) = project(a);
            let (b0, b1) = project(b);
            if a1 < b0 || b1 < a0 {
                return true;
            }
        }
    }
    false
}

/// Euclidean distance between two rectangles; zero when they overlap.
pub fn footprint_clearance(a: &Footprint, b: &Footprint) -> f64 {
    let ca = a.corners();
    let cb = b.corners();
    if !separated_along_axes(&ca, &cb) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (p, poly) in ca.iter().map(|p| (p, &cb)).chain(cb.iter().map(|p| (p, &ca))) {
        for i in 0..4 {
            best = best.min(point_segment_distance(*p, poly[i], poly[(i + 1) % 4]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rect(center: [f64; 2], yaw: f64) -> Footprint {
        Footprint {
            center,
            yaw,
            length: 4.5,
            width: 1.8,
        }
    }

    #[test]
    fn side_by_side_clearance() {
        let a = rect([0.0, 0.0], 0.0);
        let b = rect([1.0, 2.5], 0.0);
        assert_relative_eq!(footprint_clearance(&a, &b), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn nose_to_tail_gap() {
        let a = rect([0.0, 0.0], 0.0);
        let b = rect([10.0, 0.0], 0.0);
        assert_relative_eq!(footprint_clearance(&a, &b), 5.5, epsilon = 1e-12);
    }

    #[test]
    fn overlap_is_zero() {
        let a = rect([0.0, 0.0], 0.0);
        let b = rect([1.0, 0.5], 0.7);
        assert_eq!(footprint_clearance(&a, &b), 0.0);
    }

    #[test]
    fn rotated_corner_distance() {
        let a = rect([0.0, 0.0], 0.0);
        let b = Footprint {
            center: [2.25 + 1.0 + 2f64.sqrt() / 2.0, 0.0],
            yaw: std::f64::consts::FRAC_PI_4,
            length: 1.0,
            width: 1.0,
        };
        assert_relative_eq!(footprint_clearance(&a, &b), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ego_footprint_from_rear_axle() {
        let g = VehicleGeometry::default();
        let fp = g.footprint(&VehicleState::new(10.0, 0.0, 0.0, 0.0, 0.0));
        assert_relative_eq!(fp.center[0], 11.45, epsilon = 1e-12);
        assert_relative_eq!(g.front_extent(), 3.7, epsilon = 1e-12);
    }
}
