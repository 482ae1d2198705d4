//! Static arm-aim table: a polar grid of signing-space cells around the chest,
//! each holding shoulder and elbow rotations that put the wrist on the cell
//! center.
//!
//! The grid is laid out on 10 degree and 10 cm steps so that the four locus
//! slots (azimuth +-30 and +-60 degrees, level, 0.35 m out) and the midline
//! are cell centers, where the table is exact.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::rotation::{
    cross3, dot3, norm3, quaternion_to_ypr_lenient, ypr_to_quaternion, EulerYpr, Quaternion, Vec3,
};
use crate::skeleton::{JointName, Side};

pub const AZIMUTH_CELLS: usize = 16;
pub const ELEVATION_CELLS: usize = 8;
pub const RADIUS_CELLS: usize = 4;

/// Grid origin, chest height on the body midline.
pub const AIM_ORIGIN: Vec3 = [0.0, 1.2, 0.0];
const DEG: f64 = PI / 180.0;
pub const AZIMUTH_RANGE: (f64, f64) = (-75.0 * DEG, 85.0 * DEG);
pub const ELEVATION_RANGE: (f64, f64) = (-45.0 * DEG, 35.0 * DEG);
pub const RADIUS_RANGE: (f64, f64) = (0.10, 0.50);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AimCell {
    pub center: Vec3,
    pub shoulder: EulerYpr,
    pub elbow: EulerYpr,
}

fn table() -> &'static [AimCell] {
    static TABLE: OnceLock<Vec<AimCell>> = OnceLock::new();
    TABLE.get_or_init(build_table)
}

fn cell_width(range: (f64, f64), n: usize) -> f64 {
    (range.1 - range.0) / n as f64
}

fn index(v: f64, range: (f64, f64), n: usize) -> usize {
    let i = ((v - range.0) / cell_width(range, n)).floor();
    i.clamp(0.0, (n - 1) as f64) as usize
}

fn center_of(i: usize, range: (f64, f64), n: usize) -> f64 {
    range.0 + (i as f64 + 0.5) * cell_width(range, n)
}

/// Polar coordinates of `p` around the grid origin: azimuth from +Z toward
/// +X, elevation above the horizontal, radius.
pub fn polar(p: Vec3) -> (f64, f64, f64) {
    let d = [p[0] - AIM_ORIGIN[0], p[1] - AIM_ORIGIN[1], p[2] - AIM_ORIGIN[2]];
    let r = norm3(d);
    let az = d[0].atan2(d[2]);
    let el = d[1].atan2(d[0].hypot(d[2]));
    (az, el, r)
}

fn from_polar(az: f64, el: f64, r: f64) -> Vec3 {
    [
        AIM_ORIGIN[0] + r * el.cos() * az.sin(),
        AIM_ORIGIN[1] + r * el.sin(),
        AIM_ORIGIN[2] + r * el.cos() * az.cos(),
    ]
}

fn build_table() -> Vec<AimCell> {
    let mut cells = Vec::with_capacity(AZIMUTH_CELLS * ELEVATION_CELLS * RADIUS_CELLS);
    for a in 0..AZIMUTH_CELLS {
        for e in 0..ELEVATION_CELLS {
            for r in 0..RADIUS_CELLS {
                let center = from_polar(
                    center_of(a, AZIMUTH_RANGE, AZIMUTH_CELLS),
                    center_of(e, ELEVATION_RANGE, ELEVATION_CELLS),
                    center_of(r, RADIUS_RANGE, RADIUS_CELLS),
                );
                let (s, el) = two_bone_right(center);
                cells.push(AimCell {
                    center,
                    shoulder: quaternion_to_ypr_lenient(s),
                    elbow: quaternion_to_ypr_lenient(el),
                });
            }
        }
    }
    cells
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn unit(a: Vec3) -> Vec3 {
    let n = norm3(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

// Analytic two-bone aim for the right arm with the elbow bent downward.
// Targets out of reach get a straight arm pointed at them.
fn two_bone_right(target: Vec3) -> (Quaternion, Quaternion) {
    let shoulder = JointName::RShoulder.center();
    let elbow = JointName::RElbow.center();
    let wrist = JointName::RWrist.center();
    let l1 = norm3(sub(elbow, shoulder));
    let l2 = norm3(sub(wrist, elbow));
    let rest = unit(sub(elbow, shoulder));

    let d = sub(target, shoulder);
    let dist = norm3(d).clamp((l1 - l2).abs() + 1e-9, l1 + l2);
    let dir = unit(d);
    let cos_a = ((l1 * l1 + dist * dist - l2 * l2) / (2.0 * l1 * dist)).clamp(-1.0, 1.0);
    let sin_a = (1.0 - cos_a * cos_a).sqrt();

    let mut pole = [0.0, -1.0, 0.0];
    let along = dot3(pole, dir);
    pole = sub(pole, [dir[0] * along, dir[1] * along, dir[2] * along]);
    if norm3(pole) < 1e-9 {
        pole = cross3(dir, [0.0, 0.0, 1.0]);
    }
    let pole = unit(pole);

    let upper = [
        cos_a * dir[0] + sin_a * pole[0],
        cos_a * dir[1] + sin_a * pole[1],
        cos_a * dir[2] + sin_a * pole[2],
    ];
    let elbow_pos = [shoulder[0] + l1 * upper[0], shoulder[1] + l1 * upper[1], shoulder[2] + l1 * upper[2]];
    let wrist_pos = [shoulder[0] + dist * dir[0], shoulder[1] + dist * dir[1], shoulder[2] + dist * dir[2]];
    let fore = unit(sub(wrist_pos, elbow_pos));

    let qs = Quaternion::from_to(rest, upper).expect("non-zero bone directions");
    let local_fore = qs.conjugate().rotate(fore);
    let qe = Quaternion::from_to(rest, local_fore).expect("non-zero bone directions");
    (qs, qe)
}

/// The table cell containing `p` (clamped to the grid), for the right arm.
pub fn aim_cell(p: Vec3) -> AimCell {
    let (az, el, r) = polar(p);
    let i = index(az, AZIMUTH_RANGE, AZIMUTH_CELLS);
    let j = index(el, ELEVATION_RANGE, ELEVATION_CELLS);
    let k = index(r, RADIUS_RANGE, RADIUS_CELLS);
    table()[(i * ELEVATION_CELLS + j) * RADIUS_CELLS + k]
}

/// Shoulder and elbow rotations aiming `side`'s wrist at `p`. The left arm
/// uses the mirrored cell of the mirrored point.
pub fn arm_aim(p: Vec3, side: Side) -> (Quaternion, Quaternion) {
    let lookup = match side {
        Side::Right => p,
        Side::Left => [-p[0], p[1], p[2]],
    };
    let cell = aim_cell(lookup);
    let s = ypr_to_quaternion(cell.shoulder).expect("finite table entry");
    let e = ypr_to_quaternion(cell.elbow).expect("finite table entry");
    match side {
        Side::Right => (s, e),
        Side::Left => (s.mirror_x(), e.mirror_x()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{joint_position, Posture};

    fn dist(a: Vec3, b: Vec3) -> f64 {
        norm3(sub(a, b))
    }

    #[test]
    fn table_has_the_declared_granularity() {
        assert_eq!(table().len(), 16 * 8 * 4);
    }

    #[test]
    fn reachable_cell_centers_are_hit_exactly() {
        let shoulder = JointName::RShoulder.center();
        let mut checked = 0;
        for cell in table() {
            if dist(cell.center, shoulder) > 0.56 {
                continue;
            }
            let (s, e) = arm_aim(cell.center, Side::Right);
            let p = Posture::new().with(JointName::RShoulder, s).with(JointName::RElbow, e);
            let w = joint_position(&p, JointName::RWrist);
            assert!(dist(w, cell.center) < 1e-6, "{:?} vs {:?}", w, cell.center);
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn left_arm_mirrors_right() {
        let target = [0.1, 1.3, 0.3];
        let (s, e) = arm_aim(target, Side::Left);
        let p = Posture::new().with(JointName::LShoulder, s).with(JointName::LElbow, e);
        let cell = aim_cell([-target[0], target[1], target[2]]);
        let w = joint_position(&p, JointName::LWrist);
        assert!(dist(w, [-cell.center[0], cell.center[1], cell.center[2]]) < 1e-6);
    }

    #[test]
    fn lookup_lands_within_one_cell() {
        let mut rng_like = 0.0f64;
        for _ in 0..200 {
            rng_like += 0.6180339887;
            let f = rng_like.fract();
            let target = from_polar((f * 140.0 - 70.0).to_radians(), (f * 60.0 - 30.0).to_radians(), 0.15 + 0.3 * f);
            let cell = aim_cell(target);
            let (az, el, r) = polar(target);
            let (caz, cel, cr) = polar(cell.center);
            assert!((az - caz).abs() <= cell_width(AZIMUTH_RANGE, AZIMUTH_CELLS) / 2.0 + 1e-12);
            assert!((el - cel).abs() <= cell_width(ELEVATION_RANGE, ELEVATION_CELLS) / 2.0 + 1e-12);
            assert!((r - cr).abs() <= cell_width(RADIUS_RANGE, RADIUS_CELLS) / 2.0 + 1e-12);
        }
    }

    #[test]
    fn locus_slots_are_hit_exactly() {
        let mut targets: Vec<Vec3> = [30.0f64, -30.0, 60.0, -60.0]
            .iter()
            .map(|d| [0.35 * d.to_radians().sin(), 1.2, 0.35 * d.to_radians().cos()])
            .collect();
        targets.push([0.0, 1.2, 0.25]);
        for target in targets {
            for side in [Side::Right, Side::Left] {
                let (s, e) = arm_aim(target, side);
                let (sj, ej, wj) = match side {
                    Side::Right => (JointName::RShoulder, JointName::RElbow, JointName::RWrist),
                    Side::Left => (JointName::LShoulder, JointName::LElbow, JointName::LWrist),
                };
                let w = joint_position(&Posture::new().with(sj, s).with(ej, e), wj);
                assert!(dist(w, target) < 1e-9, "{side:?} {target:?}: wrist at {w:?}");
            }
        }
    }
}
