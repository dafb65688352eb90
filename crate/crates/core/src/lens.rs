//! Disc lenses: geometry, see-through selection along rays, combination.
//!
//! A lens is a disc in the local XY plane of its pose; local +Z is the front
//! normal. A lens affects a view ray strictly beyond the point where the ray
//! crosses the disc, so its selection volume is the unbounded cone from the eye
//! through the disc.

use serde::{Deserialize, Serialize};

use crate::effect::EffectDescriptor;
use crate::geom::{Pose, Ray, Vec3};

pub const RADIUS_MIN: f64 = 0.05;
pub const RADIUS_MAX: f64 = 2.0;
pub const DEFAULT_RING_WIDTH: f64 = 0.015;

/// Hits closer than this along the ray are ignored.
pub const MIN_HIT_T: f64 = 1e-6;
/// Rays with |dir·n| below this are treated as parallel to the disc.
pub const PARALLEL_EPS: f64 = 1e-9;

#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct LensId(pub u64);

impl std::fmt::Display for LensId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    Front,
    Back,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LensError {
    #[error("radius {0} outside [{RADIUS_MIN}, {RADIUS_MAX}]")]
    Radius(f64),
    #[error("ring width {0} must lie in [0, radius]")]
    RingWidth(f64),
    #[error("effect stack of length {0} is invalid (must be empty or at least 2)")]
    Stack(usize),
    #[error("combine history does not match the stack")]
    Joins,
    #[error("lenses {0} and {1} do not overlap closely enough to combine")]
    CombineRejected(LensId, LensId),
    #[error("lens {0} is not a combined lens")]
    NotCombined(LensId),
}

/// Thresholds for the near-maximal overlap that triggers a snap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SnapThresholds {
    /// Center distance limit as a fraction of the larger radius.
    pub center_fraction: f64,
    /// Largest angle between the normals (either orientation), degrees.
    pub max_angle_deg: f64,
    /// Radius difference limit as a fraction of the larger radius.
    pub radius_fraction: f64,
}

impl Default for SnapThresholds {
    fn default() -> Self {
        Self {
            center_fraction: 0.1,
            max_angle_deg: 10.0,
            radius_fraction: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LensRepr", into = "LensRepr")]
pub struct Lens {
    pub id: LensId,
    pub pose: Pose,
    radius: f64,
    pub front_effect: EffectDescriptor,
    pub back_effect: EffectDescriptor,
    stack: Vec<EffectDescriptor>,
    /// Left-part sizes of the combine tree in preorder; `stack.len() - 1`
    /// entries for a combined lens, empty otherwise.
    joins: Vec<usize>,
    pub ring_width: f64,
}

#[derive(Serialize, Deserialize)]
struct LensRepr {
    id: LensId,
    pose: Pose,
    radius: f64,
    front_effect: EffectDescriptor,
    back_effect: EffectDescriptor,
    #[serde(default)]
    stack: Vec<EffectDescriptor>,
    #[serde(default)]
    joins: Vec<usize>,
    #[serde(default = "default_ring_width")]
    ring_width: f64,
}

fn default_ring_width() -> f64 {
    DEFAULT_RING_WIDTH
}

impl TryFrom<LensRepr> for Lens {
    type Error = LensError;

    fn try_from(r: LensRepr) -> Result<Self, Self::Error> {
        let mut lens = Lens::new(r.id, r.pose, r.radius, r.front_effect, r.back_effect)?;
        lens.ring_width = r.ring_width;
        lens.stack = r.stack;
        lens.joins = r.joins;
        lens.validate()?;
        Ok(lens)
    }
}

impl From<Lens> for LensRepr {
    fn from(l: Lens) -> Self {
        LensRepr {
            id: l.id,
            pose: l.pose,
            radius: l.radius,
            front_effect: l.front_effect,
            back_effect: l.back_effect,
            stack: l.stack,
            joins: l.joins,
            ring_width: l.ring_width,
        }
    }
}

/// Intersection of a ray with a lens disc.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscHit {
    pub t: f64,
    pub face: Face,
}

impl Lens {
    /// An atomic lens.
    pub fn new(
        id: LensId,
        pose: Pose,
        radius: f64,
        front_effect: EffectDescriptor,
        back_effect: EffectDescriptor,
    ) -> Result<Self, LensError> {
        if !(RADIUS_MIN..=RADIUS_MAX).contains(&radius) {
            return Err(LensError::Radius(radius));
        }
        Ok(Self {
            id,
            pose,
            radius,
            front_effect,
            back_effect,
            stack: Vec::new(),
            joins: Vec::new(),
            ring_width: DEFAULT_RING_WIDTH.min(radius),
        })
    }

    pub fn validate(&self) -> Result<(), LensError> {
        if !(RADIUS_MIN..=RADIUS_MAX).contains(&self.radius) {
            return Err(LensError::Radius(self.radius));
        }
        if !(0.0..=self.radius).contains(&self.ring_width) {
            return Err(LensError::RingWidth(self.ring_width));
        }
        if self.stack.len() == 1 {
            return Err(LensError::Stack(1));
        }
        if !joins_valid(self.stack.len(), &self.joins) {
            return Err(LensError::Joins);
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Sets the radius, clamped to the allowed range.
    pub fn set_radius(&mut self, r: f64) {
        self.radius = r.clamp(RADIUS_MIN, RADIUS_MAX);
        self.ring_width = self.ring_width.min(self.radius);
    }

    pub fn stack(&self) -> &[EffectDescriptor] {
        &self.stack
    }

    pub fn joins(&self) -> &[usize] {
        &self.joins
    }

    pub fn is_combined(&self) -> bool {
        !self.stack.is_empty()
    }

    /// Mutable access to the descriptors of a combined lens (parameters only;
    /// the stack length is fixed).
    pub fn stack_mut(&mut self) -> &mut [EffectDescriptor] {
        &mut self.stack
    }

    /// Copies effects and combine structure from `other`.
    pub fn copy_effects_from(&mut self, other: &Lens) {
        self.front_effect = other.front_effect.clone();
        self.back_effect = other.back_effect.clone();
        self.stack = other.stack.clone();
        self.joins = other.joins.clone();
    }

    pub fn center(&self) -> Vec3 {
        self.pose.position
    }

    /// World-space front normal.
    pub fn normal(&self) -> Vec3 {
        self.pose.forward_z()
    }

    /// Which face a viewer at `eye` looks at.
    pub fn facing(&self, eye: &Vec3) -> Face {
        if (eye - self.center()).dot(&self.normal()) >= 0.0 {
            Face::Front
        } else {
            Face::Back
        }
    }

    pub fn effect(&self, face: Face) -> &EffectDescriptor {
        match face {
            Face::Front => &self.front_effect,
            Face::Back => &self.back_effect,
        }
    }

    /// Effects this lens adds to a ray that crosses it through `face`: the
    /// whole stack for a combined lens, otherwise that face's effect.
    pub fn contribution(&self, face: Face) -> &[EffectDescriptor] {
        if self.is_combined() {
            &self.stack
        } else {
            std::slice::from_ref(self.effect(face))
        }
    }

    /// Distance from `p` to the closest point of the (filled) disc.
    pub fn distance_to_disc(&self, p: &Vec3) -> f64 {
        let local = self.pose.inverse_transform_point(p);
        let radial = (local.x * local.x + local.y * local.y).sqrt();
        let outside = (radial - self.radius).max(0.0);
        (outside * outside + local.z * local.z).sqrt()
    }

    /// Distance from `p` to the rim circle of the disc.
    pub fn distance_to_rim(&self, p: &Vec3) -> f64 {
        let local = self.pose.inverse_transform_point(p);
        let radial = (local.x * local.x + local.y * local.y).sqrt();
        let d = radial - self.radius;
        (d * d + local.z * local.z).sqrt()
    }
}

fn joins_valid(len: usize, joins: &[usize]) -> bool {
    fn walk(len: usize, joins: &[usize]) -> Option<&[usize]> {
        if len == 1 {
            return Some(joins);
        }
        let (&left, rest) = joins.split_first()?;
        if left == 0 || left >= len {
            return None;
        }
        let rest = walk(left, rest)?;
        walk(len - left, rest)
    }
    match len {
        0 => joins.is_empty(),
        _ => walk(len, joins).is_some_and(|r| r.is_empty()),
    }
}

/// Ray/disc intersection. Hits at `t ≤ 1e-6`, outside the radius, or on rays
/// parallel to the disc plane are not reported. The face is `Front` when the
/// ray travels against the front normal.
pub fn ray_disc_hit(lens: &Lens, ray: &Ray) -> Option<DiscHit> {
    let n = lens.normal();
    let dir = ray.direction.into_inner();
    let denom = dir.dot(&n);
    if denom.abs() < PARALLEL_EPS {
        return None;
    }
    let t = (lens.center() - ray.origin).dot(&n) / denom;
    if !(t > MIN_HIT_T) {
        return None;
    }
    let p = ray.at(t);
    if (p - lens.center()).norm() > lens.radius {
        return None;
    }
    Some(DiscHit {
        t,
        face: if denom < 0.0 { Face::Front } else { Face::Back },
    })
}

/// A stretch of a ray with the effects active on it, in hit order from the eye.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectChainSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub active_stack: Vec<EffectDescriptor>,
}

/// One lens crossing used while building chains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainHit {
    pub t: f64,
    pub index: usize,
    pub face: Face,
}

/// Disc crossings before `t_exit`, sorted by `t` then lens id.
pub fn chain_hits(lenses: &[Lens], ray: &Ray, t_exit: f64, out: &mut Vec<ChainHit>) {
    out.clear();
    for (index, lens) in lenses.iter().enumerate() {
        if let Some(h) = ray_disc_hit(lens, ray) {
            if h.t < t_exit {
                out.push(ChainHit {
                    t: h.t,
                    index,
                    face: h.face,
                });
            }
        }
    }
    out.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then_with(|| lenses[a.index].id.cmp(&lenses[b.index].id))
    });
}

/// Splits `[0, t_exit]` at every disc crossing. Segment `k` carries the
/// contributions of the first `k` crossings. Zero-length segments (two discs
/// crossed at the same parameter) are dropped.
pub fn effect_chain(lenses: &[Lens], ray: &Ray, t_exit: f64) -> Vec<EffectChainSegment> {
    let mut hits = Vec::new();
    chain_hits(lenses, ray, t_exit, &mut hits);
    let mut segments = Vec::with_capacity(hits.len() + 1);
    let mut stack: Vec<EffectDescriptor> = Vec::new();
    let mut start = 0.0;
    for h in &hits {
        if h.t > start {
            segments.push(EffectChainSegment {
                t_start: start,
                t_end: h.t,
                active_stack: stack.clone(),
            });
            start = h.t;
        }
        stack.extend_from_slice(lenses[h.index].contribution(h.face));
    }
    segments.push(EffectChainSegment {
        t_start: start,
        t_end: t_exit,
        active_stack: stack,
    });
    segments
}

/// Whether two discs nearly coincide: close centers, near-parallel normals
/// (either orientation) and similar radii. Symmetric in its arguments.
pub fn overlap_near_maximal(a: &Lens, b: &Lens, th: &SnapThresholds) -> bool {
    let r = a.radius.max(b.radius);
    let center_ok = (a.center() - b.center()).norm() <= th.center_fraction * r;
    let cos = a.normal().dot(&b.normal()).abs().min(1.0);
    let angle_ok = cos.acos().to_degrees() <= th.max_angle_deg;
    let radius_ok = (a.radius - b.radius).abs() <= th.radius_fraction * r;
    center_ok && angle_ok && radius_ok
}

/// Snaps `other` into `held`. The result keeps `held`'s id and pose, takes the
/// larger radius, and stacks `held`'s contribution before `other`'s. An atomic
/// lens contributes the effect of the face turned toward `viewer`.
pub fn combine(
    held: &Lens,
    other: &Lens,
    viewer: &Vec3,
    th: &SnapThresholds,
) -> Result<Lens, LensError> {
    if !overlap_near_maximal(held, other, th) {
        return Err(LensError::CombineRejected(held.id, other.id));
    }
    let a = held.contribution(held.facing(viewer));
    let b = other.contribution(other.facing(viewer));
    let mut joins = Vec::with_capacity(a.len() + b.len() - 1);
    joins.push(a.len());
    joins.extend_from_slice(&held.joins);
    joins.extend_from_slice(&other.joins);
    let mut out = held.clone();
    out.radius = held.radius.max(other.radius);
    out.stack = a.iter().chain(b.iter()).cloned().collect();
    out.joins = joins;
    Ok(out)
}

fn part(template: &Lens, stack: &[EffectDescriptor], joins: &[usize]) -> Lens {
    let mut l = template.clone();
    if stack.len() == 1 {
        l.front_effect = stack[0].clone();
        l.back_effect = EffectDescriptor::plain();
        l.stack = Vec::new();
        l.joins = Vec::new();
    } else {
        l.stack = stack.to_vec();
        l.joins = joins.to_vec();
    }
    l
}

/// Undoes the most recent combine. The first part keeps the id and pose; the
/// second gets `new_id` and sits `offset_factor · radius` along the disc's local +X.
pub fn split(combined: &Lens, new_id: LensId, offset_factor: f64) -> Result<(Lens, Lens), LensError> {
    if !combined.is_combined() {
        return Err(LensError::NotCombined(combined.id));
    }
    let left = combined.joins[0];
    let left_joins = &combined.joins[1..left];
    let right_joins = &combined.joins[left..];
    let first = part(combined, &combined.stack[..left], left_joins);
    let mut second = part(combined, &combined.stack[left..], right_joins);
    second.id = new_id;
    second.pose.position += combined
        .pose
        .transform_vector(&Vec3::new(offset_factor * combined.radius, 0.0, 0.0));
    Ok((first, second))
}
