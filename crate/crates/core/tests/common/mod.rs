//! Conversions between engine types and the oracle crate's plain arrays, and
//! seeded random generators shared by the integration tests.
#![allow(dead_code)]

pub mod criteria;
pub mod fuzz;

use loupe_core::effect::EffectDescriptor;
use loupe_core::geom::{Pose, Vec3};
use loupe_core::lens::{Lens, LensId};
use loupe_oracles::{Disc, Quat, V3};
use nalgebra::{Quaternion, UnitQuaternion};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v3(v: &Vec3) -> V3 {
    [v.x, v.y, v.z]
}

pub fn quat(q: &UnitQuaternion<f64>) -> Quat {
    [q.w, q.i, q.j, q.k]
}

pub fn disc(l: &Lens) -> Disc {
    Disc {
        id: l.id.0,
        center: v3(&l.center()),
        orientation: quat(&l.pose.orientation),
        radius: l.radius(),
    }
}

pub fn vec_in(r: &mut ChaCha8Rng, half: f64) -> Vec3 {
    Vec3::new(
        r.random_range(-half..half),
        r.random_range(-half..half),
        r.random_range(-half..half),
    )
}

/// Uniform rotation from a normalized Gaussian-ish 4-vector.
pub fn rotation(r: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    loop {
        let q = Quaternion::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return UnitQuaternion::from_quaternion(q);
        }
    }
}

pub fn pose(r: &mut ChaCha8Rng, half: f64) -> Pose {
    Pose::from_parts(vec_in(r, half), rotation(r))
}

pub fn lens(id: u64, pose: Pose, radius: f64) -> Lens {
    Lens::new(LensId(id), pose, radius, EffectDescriptor::mip(), EffectDescriptor::plain())
        .expect("valid lens")
}
