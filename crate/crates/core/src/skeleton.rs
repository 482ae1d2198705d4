//! The signing subset of the H-Anim joint hierarchy, postures and handshapes.
//!
//! The binding pose is the H-Anim T-pose: arms stretched sideways with the
//! left arm along +X, palms down. Joint rotations are local and relative to
//! that pose.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::rotation::{
    angular_distance, slerp, ypr_to_quaternion, EulerYpr, Quaternion, RotationError, Vec3,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkeletonError {
    #[error("unknown joint name {0:?}")]
    UnknownJoint(String),
    #[error("unknown handshape {0:?}")]
    UnknownHandshape(String),
    #[error(transparent)]
    Rotation(#[from] RotationError),
}

macro_rules! joints {
    ($($variant:ident => $name:literal, $parent:expr, $center:expr;)*) => {
        /// A joint of the signing skeleton.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum JointName {
            $($variant,)*
        }

        impl JointName {
            pub const ALL: &'static [JointName] = &[$(JointName::$variant,)*];

            /// The H-Anim identifier, as used in lexicon files and X3D DEF names.
            pub fn as_str(self) -> &'static str {
                match self {
                    $(JointName::$variant => $name,)*
                }
            }

            pub fn parent(self) -> Option<JointName> {
                use JointName::*;
                match self {
                    $($variant => $parent,)*
                }
            }

            /// Joint center in the binding pose, metres.
            pub fn center(self) -> Vec3 {
                match self {
                    $(JointName::$variant => $center,)*
                }
            }
        }

        impl FromStr for JointName {
            type Err = SkeletonError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(JointName::$variant),)*
                    other => Err(SkeletonError::UnknownJoint(other.to_string())),
                }
            }
        }
    };
}

// Finger centers: wrist at |x| = 0.77, y = 1.45; fingers continue outward.
joints! {
    HumanoidRoot => "HumanoidRoot", None, [0.0, 0.95, 0.0];
    Sacroiliac => "sacroiliac", Some(HumanoidRoot), [0.0, 0.95, -0.01];
    Vl5 => "vl5", Some(HumanoidRoot), [0.0, 1.05, -0.02];
    Vt6 => "vt6", Some(Vl5), [0.0, 1.30, -0.03];
    Vc4 => "vc4", Some(Vt6), [0.0, 1.52, -0.02];
    Skullbase => "skullbase", Some(Vc4), [0.0, 1.60, -0.01];
    Temporomandibular => "temporomandibular", Some(Skullbase), [0.0, 1.62, 0.05];
    LEyeball => "l_eyeball_joint", Some(Skullbase), [0.032, 1.70, 0.08];
    REyeball => "r_eyeball_joint", Some(Skullbase), [-0.032, 1.70, 0.08];
    LSternoclavicular => "l_sternoclavicular", Some(Vt6), [0.02, 1.45, 0.02];
    LShoulder => "l_shoulder", Some(LSternoclavicular), [0.18, 1.45, 0.0];
    LElbow => "l_elbow", Some(LShoulder), [0.48, 1.45, 0.0];
    LWrist => "l_wrist", Some(LElbow), [0.77, 1.45, 0.0];
    LThumb1 => "l_thumb1", Some(LWrist), [0.795, 1.44, 0.03];
    LThumb2 => "l_thumb2", Some(LThumb1), [0.825, 1.44, 0.04];
    LThumb3 => "l_thumb3", Some(LThumb2), [0.85, 1.44, 0.047];
    LIndex1 => "l_index1", Some(LWrist), [0.86, 1.45, 0.025];
    LIndex2 => "l_index2", Some(LIndex1), [0.9, 1.45, 0.025];
    LIndex3 => "l_index3", Some(LIndex2), [0.925, 1.45, 0.025];
    LMiddle1 => "l_middle1", Some(LWrist), [0.865, 1.45, 0.005];
    LMiddle2 => "l_middle2", Some(LMiddle1), [0.91, 1.45, 0.005];
    LMiddle3 => "l_middle3", Some(LMiddle2), [0.938, 1.45, 0.005];
    LRing1 => "l_ring1", Some(LWrist), [0.86, 1.45, -0.015];
    LRing2 => "l_ring2", Some(LRing1), [0.9, 1.45, -0.015];
    LRing3 => "l_ring3", Some(LRing2), [0.925, 1.45, -0.015];
    LPinky1 => "l_pinky1", Some(LWrist), [0.85, 1.45, -0.033];
    LPinky2 => "l_pinky2", Some(LPinky1), [0.88, 1.45, -0.033];
    LPinky3 => "l_pinky3", Some(LPinky2), [0.9, 1.45, -0.033];
    RSternoclavicular => "r_sternoclavicular", Some(Vt6), [-0.02, 1.45, 0.02];
    RShoulder => "r_shoulder", Some(RSternoclavicular), [-0.18, 1.45, 0.0];
    RElbow => "r_elbow", Some(RShoulder), [-0.48, 1.45, 0.0];
    RWrist => "r_wrist", Some(RElbow), [-0.77, 1.45, 0.0];
    RThumb1 => "r_thumb1", Some(RWrist), [-0.795, 1.44, 0.03];
    RThumb2 => "r_thumb2", Some(RThumb1), [-0.825, 1.44, 0.04];
    RThumb3 => "r_thumb3", Some(RThumb2), [-0.85, 1.44, 0.047];
    RIndex1 => "r_index1", Some(RWrist), [-0.86, 1.45, 0.025];
    RIndex2 => "r_index2", Some(RIndex1), [-0.9, 1.45, 0.025];
    RIndex3 => "r_index3", Some(RIndex2), [-0.925, 1.45, 0.025];
    RMiddle1 => "r_middle1", Some(RWrist), [-0.865, 1.45, 0.005];
    RMiddle2 => "r_middle2", Some(RMiddle1), [-0.91, 1.45, 0.005];
    RMiddle3 => "r_middle3", Some(RMiddle2), [-0.938, 1.45, 0.005];
    RRing1 => "r_ring1", Some(RWrist), [-0.86, 1.45, -0.015];
    RRing2 => "r_ring2", Some(RRing1), [-0.9, 1.45, -0.015];
    RRing3 => "r_ring3", Some(RRing2), [-0.925, 1.45, -0.015];
    RPinky1 => "r_pinky1", Some(RWrist), [-0.85, 1.45, -0.033];
    RPinky2 => "r_pinky2", Some(RPinky1), [-0.88, 1.45, -0.033];
    RPinky3 => "r_pinky3", Some(RPinky2), [-0.9, 1.45, -0.033];
}

impl JointName {
    pub fn children(self) -> impl Iterator<Item = JointName> {
        JointName::ALL.iter().copied().filter(move |j| j.parent() == Some(self))
    }

    /// The 15 finger joints of one hand, thumb1 through pinky3.
    pub fn finger_joints(side: Side) -> [JointName; 15] {
        use JointName::*;
        match side {
            Side::Left => [
                LThumb1, LThumb2, LThumb3, LIndex1, LIndex2, LIndex3, LMiddle1, LMiddle2,
                LMiddle3, LRing1, LRing2, LRing3, LPinky1, LPinky2, LPinky3,
            ],
            Side::Right => [
                RThumb1, RThumb2, RThumb3, RIndex1, RIndex2, RIndex3, RMiddle1, RMiddle2,
                RMiddle3, RRing1, RRing2, RRing3, RPinky1, RPinky2, RPinky3,
            ],
        }
    }

    /// `(side, slot)` when this is a finger joint; slot indexes [`Self::finger_joints`].
    pub fn finger_slot(self) -> Option<(Side, usize)> {
        [Side::Left, Side::Right].into_iter().find_map(|side| {
            Self::finger_joints(side)
                .iter()
                .position(|&j| j == self)
                .map(|slot| (side, slot))
        })
    }

    pub fn side(self) -> Option<Side> {
        let name = self.as_str();
        if name.starts_with("l_") {
            Some(Side::Left)
        } else if name.starts_with("r_") {
            Some(Side::Right)
        } else {
            None
        }
    }

    pub fn shoulder(side: Side) -> JointName {
        match side {
            Side::Left => JointName::LShoulder,
            Side::Right => JointName::RShoulder,
        }
    }

    pub fn elbow(side: Side) -> JointName {
        match side {
            Side::Left => JointName::LElbow,
            Side::Right => JointName::RElbow,
        }
    }

    pub fn wrist(side: Side) -> JointName {
        match side {
            Side::Left => JointName::LWrist,
            Side::Right => JointName::RWrist,
        }
    }
}

impl fmt::Display for JointName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for JointName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for JointName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("side must be left or right, got {other:?}")),
        }
    }
}

/// Local joint rotations; joints not present are at the binding rotation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Posture {
    rotations: BTreeMap<JointName, Quaternion>,
}

impl Posture {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, joint: JointName) -> Quaternion {
        self.rotations.get(&joint).copied().unwrap_or(Quaternion::IDENTITY)
    }

    pub fn set(&mut self, joint: JointName, rotation: Quaternion) {
        self.rotations.insert(joint, rotation);
    }

    pub fn with(mut self, joint: JointName, rotation: Quaternion) -> Self {
        self.set(joint, rotation);
        self
    }

    pub fn joints(&self) -> impl Iterator<Item = JointName> + '_ {
        self.rotations.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (JointName, Quaternion)> + '_ {
        self.rotations.iter().map(|(&j, &q)| (j, q))
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// Joints whose rotation differs from identity.
    pub fn non_identity_joints(&self) -> Vec<JointName> {
        self.iter()
            .filter(|(_, q)| angular_distance(*q, Quaternion::IDENTITY) > 0.0)
            .map(|(j, _)| j)
            .collect()
    }
}

impl FromIterator<(JointName, Quaternion)> for Posture {
    fn from_iter<I: IntoIterator<Item = (JointName, Quaternion)>>(iter: I) -> Self {
        Posture { rotations: iter.into_iter().collect() }
    }
}

/// Rest pose between sentences: upper arms hanging down, everything else at binding.
pub fn neutral_posture() -> Posture {
    // Dropping a sideways arm to vertical is a quarter turn about +Z; the
    // left arm (+X) turns clockwise, the right arm (-X) counter-clockwise.
    let left = ypr_to_quaternion(EulerYpr::new(0.0, 0.0, -FRAC_PI_2)).expect("finite angles");
    Posture::new()
        .with(JointName::LShoulder, left)
        .with(JointName::RShoulder, left.mirror_x())
}

/// Largest per-joint angular distance over the union of joints.
pub fn posture_distance(a: &Posture, b: &Posture) -> f64 {
    a.joints()
        .chain(b.joints())
        .map(|j| angular_distance(a.get(j), b.get(j)))
        .fold(0.0, f64::max)
}

/// World position of a joint center under `posture`, composing local
/// rotations down the hierarchy from HumanoidRoot.
pub fn joint_position(posture: &Posture, joint: JointName) -> Vec3 {
    let mut chain = vec![joint];
    while let Some(p) = chain.last().and_then(|j| j.parent()) {
        chain.push(p);
    }
    chain.reverse();
    let mut pos = chain[0].center();
    let mut world = posture.get(chain[0]);
    for pair in chain.windows(2) {
        let (a, b) = (pair[0].center(), pair[1].center());
        let offset = world.rotate([b[0] - a[0], b[1] - a[1], b[2] - a[2]]);
        pos = [pos[0] + offset[0], pos[1] + offset[1], pos[2] + offset[2]];
        world = world * posture.get(pair[1]);
    }
    pos
}

pub fn blend_postures(a: &Posture, b: &Posture, t: f64) -> Result<Posture, SkeletonError> {
    let mut out = Posture::new();
    for j in a.joints().chain(b.joints()) {
        out.set(j, slerp(a.get(j), b.get(j), t)?);
    }
    Ok(out)
}

/// Name of a handshape in the active inventory.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HandshapeName(pub String);

impl HandshapeName {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for HandshapeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Finger-joint rotations of one handshape, authored for the right hand.
/// Left-hand use mirrors them through the sagittal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Handshape {
    pub rotations: [Quaternion; 15],
}

impl Default for Handshape {
    fn default() -> Self {
        Self { rotations: [Quaternion::IDENTITY; 15] }
    }
}

impl Handshape {
    pub fn rotation_for(&self, side: Side, slot: usize) -> Quaternion {
        match side {
            Side::Right => self.rotations[slot],
            Side::Left => self.rotations[slot].mirror_x(),
        }
    }

    /// Builds a handshape from per-finger curl angles (thumb..pinky) applied
    /// about +Z at each of the three joints, plus per-finger spread about +Y.
    pub fn from_curls(curls: [[f64; 3]; 5], spread: [f64; 5]) -> Self {
        let mut rotations = [Quaternion::IDENTITY; 15];
        for f in 0..5 {
            for s in 0..3 {
                let yaw = if s == 0 { spread[f] } else { 0.0 };
                rotations[f * 3 + s] =
                    ypr_to_quaternion(EulerYpr::new(yaw, 0.0, curls[f][s])).expect("finite angles");
            }
        }
        Self { rotations }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HandshapeInventory {
    shapes: BTreeMap<HandshapeName, Handshape>,
}

impl HandshapeInventory {
    pub fn new() -> Self {
        Self::default()
    }

    /// FIST, FLAT, INDEX, SPREAD, HOOK and the placeholder letter shapes A01..A28.
    pub fn standard() -> Self {
        let mut inv = Self::new();
        let fist = [[0.5, 0.4, 0.3], [1.4, 1.5, 1.1], [1.4, 1.5, 1.1], [1.4, 1.5, 1.1], [1.4, 1.5, 1.1]];
        inv.insert(HandshapeName::new("FIST"), Handshape::from_curls(fist, [0.0; 5]));
        inv.insert(HandshapeName::new("FLAT"), Handshape::default());
        let mut index = fist;
        index[1] = [0.0; 3];
        inv.insert(HandshapeName::new("INDEX"), Handshape::from_curls(index, [0.0; 5]));
        inv.insert(
            HandshapeName::new("SPREAD"),
            Handshape::from_curls([[0.0; 3]; 5], [0.5, 0.25, 0.0, -0.25, -0.45]),
        );
        let hook = [[0.3, 0.2, 0.2], [0.0, 1.4, 1.2], [0.0, 1.4, 1.2], [0.0, 1.4, 1.2], [0.0, 1.4, 1.2]];
        inv.insert(HandshapeName::new("HOOK"), Handshape::from_curls(hook, [0.0; 5]));
        for k in 0..28 {
            inv.insert(letter_handshape_name(k), letter_placeholder(k));
        }
        inv
    }

    pub fn insert(&mut self, name: HandshapeName, shape: Handshape) {
        self.shapes.insert(name, shape);
    }

    pub fn get(&self, name: &HandshapeName) -> Option<&Handshape> {
        self.shapes.get(name)
    }

    pub fn contains(&self, name: &HandshapeName) -> bool {
        self.shapes.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&HandshapeName, &Handshape)> {
        self.shapes.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &HandshapeName> {
        self.shapes.keys()
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }
}

/// `A01` .. `A28`, zero-based.
pub fn letter_handshape_name(index: usize) -> HandshapeName {
    HandshapeName(format!("A{:02}", index + 1))
}

// Placeholder letter shapes: the base-3 digits of the letter number pick one of
// three curl levels per finger, so any two letters differ by at most 0.8 rad
// per joint.
fn letter_placeholder(index: usize) -> Handshape {
    let mut digits = [0usize; 5];
    let mut code = index + 1;
    for d in digits.iter_mut().take(4) {
        *d = code % 3;
        code /= 3;
    }
    digits[4] = (digits[0] + digits[1]) % 3;
    let mut curls = [[0.0; 3]; 5];
    for (c, d) in curls.iter_mut().zip(digits) {
        *c = [d as f64 * 0.4; 3];
    }
    Handshape::from_curls(curls, [0.0; 5])
}

/// Overwrites the 15 finger joints of `side` with the named handshape.
pub fn apply_handshape(
    posture: &Posture,
    side: Side,
    name: &HandshapeName,
    inventory: &HandshapeInventory,
) -> Result<Posture, SkeletonError> {
    let shape = inventory
        .get(name)
        .ok_or_else(|| SkeletonError::UnknownHandshape(name.0.clone()))?;
    let mut out = posture.clone();
    for (slot, joint) in JointName::finger_joints(side).into_iter().enumerate() {
        out.set(joint, shape.rotation_for(side, slot));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::collections::HashSet;
    use std::f64::consts::PI;

    #[test]
    fn hierarchy_is_a_tree_rooted_at_humanoid_root() {
        assert_eq!(JointName::ALL.len(), 47);
        let roots: Vec<_> = JointName::ALL.iter().filter(|j| j.parent().is_none()).collect();
        assert_eq!(roots, vec![&JointName::HumanoidRoot]);
        for &j in JointName::ALL {
            let mut seen = HashSet::new();
            let mut cur = j;
            while let Some(p) = cur.parent() {
                assert!(seen.insert(p), "cycle through {p}");
                cur = p;
            }
            assert_eq!(cur, JointName::HumanoidRoot);
        }
        let reachable = count_descendants(JointName::HumanoidRoot) + 1;
        assert_eq!(reachable, 47);
    }

    fn count_descendants(j: JointName) -> usize {
        j.children().map(|c| 1 + count_descendants(c)).sum()
    }

    #[test]
    fn names_round_trip() {
        for &j in JointName::ALL {
            assert_eq!(j.as_str().parse::<JointName>().unwrap(), j);
        }
        assert!("l_knee".parse::<JointName>().is_err());
    }

    #[test]
    fn neutral_posture_lowers_both_arms() {
        let n = neutral_posture();
        assert_eq!(n.non_identity_joints(), vec![JointName::LShoulder, JointName::RShoulder]);
        assert_eq!(posture_distance(&n, &n), 0.0);
        let down = n.get(JointName::LShoulder).rotate([1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(down[1], -1.0, epsilon = 1e-12);
        let down = n.get(JointName::RShoulder).rotate([-1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(down[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn neutral_posture_survives_serialization() {
        let n = neutral_posture();
        let text = serde_json::to_string(&n).unwrap();
        let back: Posture = serde_json::from_str(&text).unwrap();
        assert_eq!(back, n);
    }

    #[test]
    fn distance_examples() {
        let quarter = ypr_to_quaternion(EulerYpr::new(PI / 2.0, 0.0, 0.0)).unwrap();
        let p = Posture::new().with(JointName::Skullbase, quarter);
        assert_abs_diff_eq!(posture_distance(&Posture::new(), &p), PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn neutral_arms_hang_down() {
        let n = neutral_posture();
        for (side, x) in [(Side::Left, 0.18), (Side::Right, -0.18)] {
            let w = joint_position(&n, JointName::wrist(side));
            assert_abs_diff_eq!(w[0], x, epsilon = 1e-12);
            assert_abs_diff_eq!(w[1], 1.45 - 0.59, epsilon = 1e-12);
            assert_abs_diff_eq!(w[2], 0.0, epsilon = 1e-12);
        }
        let t_pose = joint_position(&Posture::new(), JointName::RWrist);
        for (a, b) in t_pose.iter().zip(JointName::RWrist.center()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn blend_examples() {
        let a = Posture::new().with(JointName::Vc4, ypr_to_quaternion(EulerYpr::new(0.4, 0.0, 0.0)).unwrap());
        let b = Posture::new().with(JointName::Vc4, ypr_to_quaternion(EulerYpr::new(-0.6, 0.2, 0.0)).unwrap());
        assert_eq!(blend_postures(&a, &a, 0.3).unwrap(), a);
        assert_eq!(blend_postures(&a, &b, 0.0).unwrap(), a);
        let end = blend_postures(&a, &b, 1.0).unwrap();
        assert!(posture_distance(&end, &b) < 1e-12);
        let mid = blend_postures(&a, &b, 0.5).unwrap();
        assert_abs_diff_eq!(posture_distance(&mid, &a), posture_distance(&a, &b) / 2.0, epsilon = 1e-12);
        assert!(blend_postures(&a, &b, -0.1).is_err());
    }

    #[test]
    fn handshape_touches_only_one_hand() {
        let inv = HandshapeInventory::standard();
        let base = neutral_posture();
        let fist = apply_handshape(&base, Side::Right, &HandshapeName::new("FIST"), &inv).unwrap();
        let changed: HashSet<_> = JointName::ALL
            .iter()
            .copied()
            .filter(|&j| angular_distance(base.get(j), fist.get(j)) > 0.0)
            .collect();
        let right: HashSet<_> = JointName::finger_joints(Side::Right).into_iter().collect();
        assert!(changed.is_subset(&right));
        assert!(!changed.is_empty());
        // Every joint outside the right hand is untouched.
        for &j in JointName::ALL.iter().filter(|j| !right.contains(j)) {
            assert_eq!(fist.get(j), base.get(j));
        }
    }

    #[test]
    fn handshape_overwrite_semantics() {
        let inv = HandshapeInventory::standard();
        let fist = HandshapeName::new("FIST");
        let flat = HandshapeName::new("FLAT");
        let p = Posture::new();
        let once = apply_handshape(&p, Side::Left, &fist, &inv).unwrap();
        let twice = apply_handshape(&once, Side::Left, &fist, &inv).unwrap();
        assert_eq!(once, twice);
        let via_flat = apply_handshape(&apply_handshape(&p, Side::Left, &flat, &inv).unwrap(), Side::Left, &fist, &inv).unwrap();
        assert_eq!(via_flat, once);
        let err = apply_handshape(&p, Side::Left, &HandshapeName::new("CLAW"), &inv).unwrap_err();
        assert_eq!(err, SkeletonError::UnknownHandshape("CLAW".into()));
    }

    #[test]
    fn left_hand_curls_mirror_the_right() {
        let inv = HandshapeInventory::standard();
        let p = apply_handshape(&Posture::new(), Side::Left, &HandshapeName::new("FIST"), &inv).unwrap();
        let tip = p.get(JointName::LIndex2).rotate([1.0, 0.0, 0.0]);
        assert!(tip[1] < -0.9, "left fingers should curl toward the palm, got {tip:?}");
        let p = apply_handshape(&Posture::new(), Side::Right, &HandshapeName::new("FIST"), &inv).unwrap();
        let tip = p.get(JointName::RIndex2).rotate([-1.0, 0.0, 0.0]);
        assert!(tip[1] < -0.9);
    }

    #[test]
    fn letter_placeholders_stay_close() {
        let inv = HandshapeInventory::standard();
        assert_eq!(inv.len(), 33);
        let letters: Vec<_> = (0..28).map(|k| inv.get(&letter_handshape_name(k)).unwrap()).collect();
        for a in &letters {
            for b in &letters {
                for s in 0..15 {
                    assert!(angular_distance(a.rotations[s], b.rotations[s]) <= 0.8 + 1e-12);
                }
            }
        }
    }

    fn arb_posture() -> impl Strategy<Value = Posture> {
        proptest::collection::vec((0..47usize, -3.0..3.0f64, -1.5..1.5f64, -3.0..3.0f64), 0..6).prop_map(|v| {
            v.into_iter()
                .map(|(j, y, p, r)| (JointName::ALL[j], ypr_to_quaternion(EulerYpr::new(y, p, r)).unwrap()))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn distance_is_a_pseudometric(a in arb_posture(), b in arb_posture(), c in arb_posture()) {
            let ab = posture_distance(&a, &b);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - posture_distance(&b, &a)).abs() < 1e-12);
            prop_assert!(posture_distance(&a, &c) <= ab + posture_distance(&b, &c) + 1e-9);
        }
    }
}
