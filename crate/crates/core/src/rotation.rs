//! Rotation representations and interpolation kernels.
//!
//! Axes follow the H-Anim convention: +Y up, +Z toward the viewer and +X to
//! the humanoid's left. Yaw turns about +Y, pitch about +X and roll about +Z,
//! applied intrinsically in that order, so the composed matrix is
//! `Ry(yaw) * Rx(pitch) * Rz(roll)`.
//!
//! Every value here is an immutable `Copy` type and every function is pure.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Plain 3-vector in humanoid coordinates.
pub type Vec3 = [f64; 3];

/// Norm drift accepted on quaternions handed in by callers.
pub const UNIT_INPUT_TOLERANCE: f64 = 1e-6;

/// Below this inter-quaternion angle (radians) slerp degrades to normalized lerp.
pub const SLERP_LINEAR_THRESHOLD: f64 = 1e-6;

/// Half-width of the band around |pitch| = π/2 where yaw and roll are not separable.
pub const GIMBAL_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RotationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate orientation: pitch {pitch:.9} rad lies in the gimbal-lock band")]
    DegenerateOrientation { pitch: f64 },
}

type Result<T> = std::result::Result<T, RotationError>;

/// A quaternion `w + xi + yj + zk`. Rotations are unit quaternions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Scales to unit norm. Fails on zero or non-finite input.
    pub fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(RotationError::InvalidArgument(format!(
                "cannot normalize quaternion {self:?}"
            )));
        }
        Ok(self.scale(1.0 / n))
    }

    /// Same rotation with `w >= 0`. For `w == 0` the first non-zero vector
    /// component is made positive so the representative is unique.
    pub fn canonical(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            -self
        } else {
            self
        }
    }

    pub fn conjugate(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    /// Rotates `v` by this (unit) quaternion.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        let p = Quaternion::new(0.0, v[0], v[1], v[2]);
        let r = self * p * self.conjugate();
        [r.x, r.y, r.z]
    }

    /// Reflects the rotation through the sagittal (YZ) plane, turning a
    /// right-side joint rotation into its left-side counterpart.
    pub fn mirror_x(self) -> Self {
        Self::new(self.w, self.x, -self.y, -self.z)
    }

    /// Shortest-arc rotation taking direction `from` onto direction `to`.
    pub fn from_to(from: Vec3, to: Vec3) -> Result<Self> {
        let a = normalize3(from)?;
        let b = normalize3(to)?;
        let d = dot3(a, b);
        if d < -1.0 + 1e-12 {
            // Antipodal: any axis orthogonal to `a` works.
            let helper = if a[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let axis = normalize3(cross3(a, helper))?;
            return Ok(Self::new(0.0, axis[0], axis[1], axis[2]).canonical());
        }
        let c = cross3(a, b);
        Self::new(1.0 + d, c[0], c[1], c[2]).normalized().map(Self::canonical)
    }

    pub(crate) fn ensure_unit(self, what: &str) -> Result<()> {
        if !self.is_finite() || (self.norm() - 1.0).abs() > UNIT_INPUT_TOLERANCE {
            return Err(RotationError::InvalidArgument(format!(
                "{what}: expected a unit quaternion, got {self:?} (norm {})",
                self.norm()
            )));
        }
        Ok(())
    }
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, r: Quaternion) -> Quaternion {
        let l = self;
        Quaternion::new(
            l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        )
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, r: Quaternion) -> Quaternion {
        Quaternion::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

/// Rotation of `angle` radians about the unit `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
}

impl AxisAngle {
    /// The X3D default rotation `0 0 1 0`.
    pub const ZERO: AxisAngle = AxisAngle { axis: [0.0, 0.0, 1.0], angle: 0.0 };

    pub const fn new(axis: Vec3, angle: f64) -> Self {
        Self { axis, angle }
    }
}

/// Yaw-pitch-roll angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerYpr {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerYpr {
    pub const fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }
}

/// A timed rotation sample on a joint track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationKey {
    pub time: f64,
    pub rotation: Quaternion,
}

impl RotationKey {
    pub const fn new(time: f64, rotation: Quaternion) -> Self {
        Self { time, rotation }
    }
}

pub fn ypr_to_quaternion(e: EulerYpr) -> Result<Quaternion> {
    if !(e.yaw.is_finite() && e.pitch.is_finite() && e.roll.is_finite()) {
        return Err(RotationError::InvalidArgument(format!(
            "yaw-pitch-roll must be finite, got {e:?}"
        )));
    }
    let (sy, cy) = (e.yaw * 0.5).sin_cos();
    let (sp, cp) = (e.pitch * 0.5).sin_cos();
    let (sr, cr) = (e.roll * 0.5).sin_cos();
    let yaw = Quaternion::new(cy, 0.0, sy, 0.0);
    let pitch = Quaternion::new(cp, sp, 0.0, 0.0);
    let roll = Quaternion::new(cr, 0.0, 0.0, sr);
    (yaw * pitch * roll).normalized().map(Quaternion::canonical)
}

/// Matrix entries needed to recover yaw-pitch-roll, as `(r01, r00, r02, r22, r10, r11, r12)`.
fn ypr_matrix_entries(q: Quaternion) -> [f64; 7] {
    let Quaternion { w, x, y, z } = q;
    [
        2.0 * (x * y - w * z),
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * z + w * y),
        1.0 - 2.0 * (x * x + y * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
    ]
}

pub fn quaternion_to_ypr(q: Quaternion) -> Result<EulerYpr> {
    q.ensure_unit("quaternion_to_ypr")?;
    let [_, _, r02, r22, r10, r11, r12] = ypr_matrix_entries(q);
    let pitch = (-r12).atan2(r10.hypot(r11));
    if pitch.abs() > FRAC_PI_2 - GIMBAL_MARGIN {
        return Err(RotationError::DegenerateOrientation { pitch });
    }
    Ok(EulerYpr::new(r02.atan2(r22), pitch, r10.atan2(r11)))
}

/// Like [`quaternion_to_ypr`] but total: inside the gimbal band roll is
/// pinned to zero and the combined twist goes into yaw.
pub fn quaternion_to_ypr_lenient(q: Quaternion) -> EulerYpr {
    let q = q.normalized().unwrap_or(Quaternion::IDENTITY);
    match quaternion_to_ypr(q) {
        Ok(e) => e,
        Err(_) => {
            let [r01, r00, _, _, _, _, r12] = ypr_matrix_entries(q);
            let pitch = if r12 < 0.0 { FRAC_PI_2 } else { -FRAC_PI_2 };
            let sign = pitch.signum();
            EulerYpr::new((sign * r01).atan2(r00), pitch, 0.0)
        }
    }
}

pub fn axis_angle_to_quaternion(a: AxisAngle) -> Result<Quaternion> {
    if !(a.angle.is_finite() && a.axis.iter().all(|c| c.is_finite())) {
        return Err(RotationError::InvalidArgument(format!(
            "axis-angle must be finite, got {a:?}"
        )));
    }
    if a.angle == 0.0 {
        return Ok(Quaternion::IDENTITY);
    }
    let axis = normalize3(a.axis).map_err(|_| {
        RotationError::InvalidArgument(format!(
            "zero rotation axis with non-zero angle {}",
            a.angle
        ))
    })?;
    let (s, c) = (a.angle * 0.5).sin_cos();
    Ok(Quaternion::new(c, axis[0] * s, axis[1] * s, axis[2] * s).canonical())
}

pub fn quaternion_to_axis_angle(q: Quaternion) -> Result<AxisAngle> {
    q.ensure_unit("quaternion_to_axis_angle")?;
    let q = q.normalized()?.canonical();
    let s = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
    if s < 1e-15 {
        return Ok(AxisAngle::ZERO);
    }
    let angle = 2.0 * s.atan2(q.w);
    Ok(AxisAngle::new([q.x / s, q.y / s, q.z / s], angle))
}

/// Spherical linear interpolation along the shorter arc.
pub fn slerp(q0: Quaternion, q1: Quaternion, t: f64) -> Result<Quaternion> {
    if !(0.0..=1.0).contains(&t) {
        return Err(RotationError::InvalidArgument(format!(
            "slerp parameter {t} outside [0, 1]"
        )));
    }
    Ok(slerp_unchecked(q0, q1, t))
}

pub(crate) fn slerp_unchecked(q0: Quaternion, q1: Quaternion, t: f64) -> Quaternion {
    if t == 0.0 || q0 == q1 {
        return q0;
    }
    if t == 1.0 {
        return q1;
    }
    let q1 = if q0.dot(q1) < 0.0 { -q1 } else { q1 };
    let omega = 2.0 * (q0 - q1).norm().atan2((q0 + q1).norm());
    let blended = if omega < SLERP_LINEAR_THRESHOLD {
        q0.scale(1.0 - t) + q1.scale(t)
    } else {
        let s = omega.sin();
        q0.scale(((1.0 - t) * omega).sin() / s) + q1.scale((t * omega).sin() / s)
    };
    blended.normalized().unwrap_or(q0)
}

/// Rotation angle in `[0, π]` separating two orientations.
pub fn angular_distance(q0: Quaternion, q1: Quaternion) -> f64 {
    let q1 = if q0.dot(q1) < 0.0 { -q1 } else { q1 };
    4.0 * (q0 - q1).norm().atan2((q0 + q1).norm())
}

/// Keys validated once for repeated sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationTrack<'a> {
    keys: &'a [RotationKey],
}

impl<'a> RotationTrack<'a> {
    pub fn new(keys: &'a [RotationKey]) -> Result<Self> {
        if keys.is_empty() {
            return Err(RotationError::InvalidArgument("empty rotation track".into()));
        }
        for k in keys {
            if !k.time.is_finite() || k.time < 0.0 {
                return Err(RotationError::InvalidArgument(format!(
                    "key time {} must be finite and non-negative",
                    k.time
                )));
            }
        }
        if let Some(w) = keys.windows(2).find(|w| w[1].time <= w[0].time) {
            return Err(RotationError::InvalidArgument(format!(
                "key times must be strictly increasing ({} then {})",
                w[0].time, w[1].time
            )));
        }
        Ok(Self { keys })
    }

    pub fn keys(&self) -> &'a [RotationKey] {
        self.keys
    }

    pub fn sample(&self, t: f64) -> Quaternion {
        let keys = self.keys;
        let first = keys[0];
        let last = keys[keys.len() - 1];
        if t.is_nan() || t <= first.time {
            return first.rotation;
        }
        if t >= last.time {
            return last.rotation;
        }
        let i = keys.partition_point(|k| k.time <= t);
        let (a, b) = (keys[i - 1], keys[i]);
        if a.time == t {
            return a.rotation;
        }
        let u = ((t - a.time) / (b.time - a.time)).clamp(0.0, 1.0);
        slerp_unchecked(a.rotation, b.rotation, u)
    }

    /// Largest angular speed over any segment, in rad/s.
    pub fn max_angular_velocity(&self) -> f64 {
        self.keys
            .windows(2)
            .map(|w| angular_distance(w[0].rotation, w[1].rotation) / (w[1].time - w[0].time))
            .fold(0.0, f64::max)
    }
}

/// Samples a keyframe track: clamped at the ends, exact at key times,
/// slerp in between.
pub fn sample_track(keys: &[RotationKey], t: f64) -> Result<Quaternion> {
    if !t.is_finite() {
        return Err(RotationError::InvalidArgument(format!("sample time {t} is not finite")));
    }
    Ok(RotationTrack::new(keys)?.sample(t))
}

pub(crate) fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: Vec3) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn normalize3(a: Vec3) -> Result<Vec3> {
    let n = norm3(a);
    if !n.is_finite() || n < 1e-12 {
        return Err(RotationError::InvalidArgument(format!("cannot normalize vector {a:?}")));
    }
    Ok([a[0] / n, a[1] / n, a[2] / n])
}
