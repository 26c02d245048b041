//! Fleet geometry, kinematics, area and collision constraints, and the
//! rotary-wing propulsion energy model.

use serde::{Deserialize, Serialize};

use crate::config::RotorParams;

/// A point on the horizontal plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// 3D distance between this point at `alt` and `other` on the ground.
    pub fn slant_dist(self, other: Point2, alt: f64) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy + alt * alt).sqrt()
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Point2::new(p[0], p[1])
    }
}

/// UAV positions at one time slot. All UAVs fly at the same altitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetState {
    pub positions: Vec<Point2>,
    pub altitude: f64,
    pub t: usize,
}

impl FleetState {
    pub fn new(positions: Vec<Point2>, altitude: f64) -> Self {
        Self {
            positions,
            altitude,
            t: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position_3d(&self, k: usize) -> [f64; 3] {
        let p = self.positions[k];
        [p.x, p.y, self.altitude]
    }
}

/// Moves `pos` by `displacement` meters along heading `omega` (radians).
///
/// No clamping: callers check [`boundary_violation`] first.
pub fn step_kinematics(pos: Point2, displacement: f64, omega: f64) -> Point2 {
    Point2::new(pos.x + displacement * omega.cos(), pos.y + displacement * omega.sin())
}

/// True when `pos` leaves `[0, side]²`. The boundary itself is inside.
pub fn boundary_violation(pos: Point2, side: f64) -> bool {
    !(0.0..=side).contains(&pos.x) || !(0.0..=side).contains(&pos.y)
}

pub fn clamp_to_area(pos: Point2, side: f64) -> Point2 {
    Point2::new(pos.x.clamp(0.0, side), pos.y.clamp(0.0, side))
}

/// All pairs `(k, k')`, `k < k'`, closer than the protection distance.
pub fn collision_pairs(fleet: &FleetState, protection_distance: f64) -> Vec<(usize, usize)> {
    let n = fleet.len();
    let mut pairs = Vec::new();
    for k in 0..n {
        let a = fleet.position_3d(k);
        for l in k + 1..n {
            let b = fleet.position_3d(l);
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            if d < protection_distance {
                pairs.push((k, l));
            }
        }
    }
    pairs
}

impl RotorParams {
    /// Propulsion power at horizontal speed `v` (m/s), watts.
    pub fn propulsion_power(&self, v: f64) -> f64 {
        let v2 = v * v;
        let blade = self.p0 * (1.0 + 3.0 * v2 / (self.v_tip * self.v_tip));
        let v0_2 = self.v0 * self.v0;
        let induced_inner = (1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2);
        // the inner term is positive analytically; rounding can push it a hair below zero
        let induced = self.p1 * induced_inner.max(0.0).sqrt();
        let parasite = 0.5 * self.d0 * self.rho_a * self.s_sol * self.disc_area * v2 * v;
        parasite + blade + induced
    }

    /// Energy of one slot of length `dt` flown at constant speed `v`, joules.
    pub fn slot_energy(&self, v: f64, dt: f64) -> f64 {
        self.propulsion_power(v) * dt
    }

    /// Total propulsion energy over a `[uav][slot]` speed table.
    pub fn fleet_energy(&self, speeds: &[Vec<f64>], dt: f64) -> f64 {
        speeds
            .iter()
            .map(|per_uav| per_uav.iter().map(|&v| self.slot_energy(v, dt)).sum::<f64>())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn kinematics_examples() {
        assert_eq!(step_kinematics(Point2::new(0.0, 0.0), 0.0, 1.234), Point2::new(0.0, 0.0));
        assert_eq!(step_kinematics(Point2::new(10.0, 10.0), 5.0, 0.0), Point2::new(15.0, 10.0));
        let p = step_kinematics(Point2::new(10.0, 10.0), 5.0, PI / 2.0);
        assert!((p.x - 10.0).abs() < 1e-12 && (p.y - 15.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_is_inclusive() {
        assert!(!boundary_violation(Point2::new(0.0, 0.0), 400.0));
        assert!(!boundary_violation(Point2::new(400.0, 400.0), 400.0));
        assert!(boundary_violation(Point2::new(401.0, 200.0), 400.0));
        assert!(boundary_violation(Point2::new(200.0, -0.1), 400.0));
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(clamp_to_area(Point2::new(-5.0, 200.0), 400.0), Point2::new(0.0, 200.0));
        assert_eq!(clamp_to_area(Point2::new(450.0, 450.0), 400.0), Point2::new(400.0, 400.0));
        assert_eq!(clamp_to_area(Point2::new(100.0, 100.0), 400.0), Point2::new(100.0, 100.0));
    }

    #[test]
    fn collision_examples() {
        let fleet = FleetState::new(vec![Point2::new(3.0, 4.0), Point2::new(3.0, 4.0)], 100.0);
        assert_eq!(collision_pairs(&fleet, 10.0), vec![(0, 1)]);
        let fleet = FleetState::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)], 100.0);
        assert!(collision_pairs(&fleet, 10.0).is_empty());
        let fleet = FleetState::new(
            vec![Point2::new(0.0, 0.0), Point2::new(5.0, 0.0), Point2::new(100.0, 0.0)],
            100.0,
        );
        assert_eq!(collision_pairs(&fleet, 10.0), vec![(0, 1)]);
    }

    #[test]
    fn hover_power_is_p0_plus_p1() {
        let r = RotorParams::default();
        assert_eq!(r.propulsion_power(0.0), r.p0 + r.p1);
        assert_eq!(r.slot_energy(0.0, 1.0), r.p0 + r.p1);
    }

    #[test]
    fn power_at_induced_velocity() {
        let r = RotorParams::default();
        let v0 = r.v0;
        let expected = r.p0 * (1.0 + 3.0 * v0 * v0 / (r.v_tip * r.v_tip))
            + r.p1 * (1.25f64.sqrt() - 0.5).sqrt()
            + 0.5 * r.d0 * r.rho_a * r.s_sol * r.disc_area * v0.powi(3);
        assert!((r.propulsion_power(v0) - expected).abs() < 1e-9);
    }

    #[test]
    fn parasite_drag_dominates_at_speed() {
        let r = RotorParams::default();
        assert!(r.propulsion_power(25.0) > r.propulsion_power(20.0));
    }

    #[test]
    fn slot_energy_is_linear_in_dt() {
        let r = RotorParams::default();
        assert!((r.slot_energy(10.0, 2.0) - 2.0 * r.propulsion_power(10.0)).abs() < 1e-12);
    }

    #[test]
    fn fleet_energy_examples() {
        let r = RotorParams::default();
        assert_eq!(r.fleet_energy(&[vec![0.0]], 1.0), r.p0 + r.p1);
        let one = r.fleet_energy(&[vec![4.0, 7.0, 25.0]], 1.0);
        let two = r.fleet_energy(&[vec![4.0, 7.0, 25.0], vec![4.0, 7.0, 25.0]], 1.0);
        assert!((two - 2.0 * one).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn power_positive_on_speed_range(v in 0.0f64..=25.0) {
            prop_assert!(RotorParams::default().propulsion_power(v) > 0.0);
        }

        #[test]
        fn collision_pairs_independent_of_order(
            pts in proptest::collection::vec((0.0f64..50.0, 0.0f64..50.0), 2..7),
            shift in 0usize..7,
        ) {
            let n = pts.len();
            let fleet = FleetState::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect(), 100.0);
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let permuted = FleetState::new(perm.iter().map(|&i| fleet.positions[i]).collect(), 100.0);
            let mut mapped: Vec<(usize, usize)> = collision_pairs(&permuted, 10.0)
                .into_iter()
                .map(|(a, b)| {
                    let (a, b) = (perm[a], perm[b]);
                    (a.min(b), a.max(b))
                })
                .collect();
            mapped.sort();
            prop_assert_eq!(mapped, collision_pairs(&fleet, 10.0));
        }

        #[test]
        fn kinematics_keeps_altitude(x in 0.0f64..400.0, y in 0.0f64..400.0, v in 0.0f64..25.0, w in 0.0f64..6.28) {
            let mut fleet = FleetState::new(vec![Point2::new(x, y)], 100.0);
            fleet.positions[0] = step_kinematics(fleet.positions[0], v, w);
            prop_assert_eq!(fleet.position_3d(0)[2], 100.0);
        }
    }
}
