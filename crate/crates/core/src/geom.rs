//! Rigid poses and rays.
//!
//! Orientations are unit quaternions. On the wire and in scene files a pose is
//! written as `{"position": [x, y, z], "orientation": [w, x, y, z]}`.

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// Quaternions further than this from unit norm (squared) are renormalized.
const RENORM_EPS: f64 = 1e-12;

/// Position plus orientation of a rigid body, in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: [f64; 3],
    orientation: [f64; 4],
}

impl TryFrom<PoseRepr> for Pose {
    type Error = String;

    fn try_from(r: PoseRepr) -> Result<Self, Self::Error> {
        let [w, x, y, z] = r.orientation;
        if r.position.iter().chain(r.orientation.iter()).any(|v| !v.is_finite()) {
            return Err("pose components must be finite".into());
        }
        if w * w + x * x + y * y + z * z < 1e-12 {
            return Err("orientation quaternion has zero norm".into());
        }
        Ok(Pose::new(Vec3::from(r.position), Quaternion::new(w, x, y, z)))
    }
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        let q = p.orientation.quaternion();
        PoseRepr {
            position: [p.position.x, p.position.y, p.position.z],
            orientation: [q.w, q.i, q.j, q.k],
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

/// Wraps `q` as a unit quaternion, renormalizing only when it has drifted.
pub fn unit_quaternion(q: Quaternion<f64>) -> UnitQuaternion<f64> {
    if (q.norm_squared() - 1.0).abs() > RENORM_EPS {
        UnitQuaternion::from_quaternion(q)
    } else {
        UnitQuaternion::new_unchecked(q)
    }
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quaternion<f64>) -> Self {
        Self {
            position,
            orientation: unit_quaternion(orientation),
        }
    }

    pub fn from_parts(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self::new(position, orientation.into_inner())
    }

    pub fn identity() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_translation(position: Vec3) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::identity(),
        }
    }

    /// A pose at `eye` whose local -Z points at `target` and local +Y leans toward `up`.
    pub fn looking_at(eye: Vec3, target: Vec3, up: Vec3) -> Self {
        let dir = target - eye;
        Self::from_parts(eye, UnitQuaternion::face_towards(&(-dir), &up))
    }

    /// `self ∘ other`: `other` expressed in the frame of `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.position + self.orientation * other.position,
            (self.orientation * other.orientation).into_inner(),
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: -(inv * self.position),
            orientation: inv,
        }
    }

    /// The pose of `self` relative to `base`, i.e. `base⁻¹ ∘ self`.
    pub fn relative_to(&self, base: &Pose) -> Pose {
        base.inverse().compose(self)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.position + self.orientation * p
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.orientation * v
    }

    pub fn inverse_transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation.inverse_transform_vector(&(p - self.position))
    }

    /// Local +Z in world coordinates.
    pub fn forward_z(&self) -> Vec3 {
        self.orientation * Vec3::z()
    }

    pub fn is_finite(&self) -> bool {
        let q = self.orientation.quaternion();
        self.position.iter().all(|v| v.is_finite()) && q.coords.iter().all(|v| v.is_finite())
    }
}

/// Half-line `origin + t·direction`, `t ≥ 0`, with unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Unit<Vec3>,
}

impl Ray {
    /// Normalizes `direction`; returns `None` for a zero or non-finite direction.
    pub fn new(origin: Vec3, direction: Vec3) -> Option<Self> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return None;
        }
        Some(Self {
            origin,
            direction: Unit::new_unchecked(direction / n),
        })
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction.into_inner() * t
    }

    /// Slab test against an axis-aligned box. Returns the parameter interval
    /// clipped to `t ≥ 0`, or `None` when the ray misses.
    pub fn intersect_aabb(&self, lo: &Vec3, hi: &Vec3) -> Option<(f64, f64)> {
        let mut t0 = 0.0_f64;
        let mut t1 = f64::INFINITY;
        for axis in 0..3 {
            let o = self.origin[axis];
            let d = self.direction[axis];
            if d.abs() < 1e-300 {
                if o < lo[axis] || o > hi[axis] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let (mut a, mut b) = ((lo[axis] - o) * inv, (hi[axis] - o) * inv);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }
}
