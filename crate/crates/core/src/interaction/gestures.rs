//! The individual gestures, each a pure function the reducer dispatches to.

use serde::{Deserialize, Serialize};

use crate::config::InteractionConfig;
use crate::geom::{Pose, Ray, Vec3};
use crate::lens::{overlap_near_maximal, ray_disc_hit, Lens, LensId, RADIUS_MAX, RADIUS_MIN};
use crate::scene::SceneState;

/// Nearest lens whose disc is within grab distance of `hand`.
pub fn grab_test(scene: &SceneState, hand: &Pose, config: &InteractionConfig) -> Option<LensId> {
    scene
        .lenses
        .iter()
        .map(|l| (l.distance_to_disc(&hand.position), l.id))
        .filter(|(d, _)| *d <= config.grab_distance)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// How a held lens hangs off the hand that grabbed it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrabAttachment {
    /// Lens pose in the hand's frame.
    pub offset: Pose,
    pub hand_at_grab: Pose,
    pub lens_at_grab: Pose,
}

impl GrabAttachment {
    pub fn capture(hand: &Pose, lens: &Pose) -> Self {
        Self {
            offset: lens.relative_to(hand),
            hand_at_grab: *hand,
            lens_at_grab: *lens,
        }
    }

    /// Lens pose for the current hand pose. While the hand has not moved
    /// the original pose is returned untouched, so a grab without motion
    /// leaves no rounding residue.
    pub fn lens_pose(&self, hand: &Pose) -> Pose {
        if *hand == self.hand_at_grab {
            self.lens_at_grab
        } else {
            hand.compose(&self.offset)
        }
    }
}

pub fn grabbed_update(lens: &Lens, grab: &GrabAttachment, hand: &Pose) -> Lens {
    let mut out = lens.clone();
    out.pose = grab.lens_pose(hand);
    out
}

/// Two-handed resize law. `None` when the hands started too close together
/// for the ratio to be meaningful.
pub fn resize_update(d0: f64, r0: f64, d: f64, config: &InteractionConfig) -> Option<f64> {
    if !(d0 > config.resize_min_distance) {
        return None;
    }
    Some((r0 * (d / d0)).clamp(RADIUS_MIN, RADIUS_MAX))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RingCommand {
    CycleFrontEffect,
    CycleBackEffect,
    AdjustParam { name: String, delta: f64 },
    Split,
}

/// Angles of the ring widgets in the lens frame, in command order.
pub const RING_WIDGET_DEGREES: [f64; 4] = [0.0, 90.0, 180.0, 270.0];

/// World position of ring widget `slot`.
pub fn ring_widget_position(lens: &Lens, slot: usize) -> Vec3 {
    let (s, c) = RING_WIDGET_DEGREES[slot].to_radians().sin_cos();
    let r = lens.radius();
    lens.pose.transform_point(&Vec3::new(r * c, r * s, 0.0))
}

/// Parameter the ring's adjust widget acts on: the first registered key of
/// the front effect, or of the last stacked effect for a combined lens.
pub fn adjustable_param(lens: &Lens) -> Option<&'static str> {
    let effect = match lens.stack().last() {
        Some(e) => e,
        None => &lens.front_effect,
    };
    effect.schema().next().map(|(k, _)| k)
}

pub fn ring_control_step(
    lens: &Lens,
    hand: &Pose,
    trigger_pressed: bool,
    config: &InteractionConfig,
) -> Option<RingCommand> {
    if !trigger_pressed || lens.distance_to_rim(&hand.position) > config.ring_control_proximity {
        return None;
    }
    let slot = (0..RING_WIDGET_DEGREES.len())
        .map(|s| ((ring_widget_position(lens, s) - hand.position).norm(), s))
        .filter(|(d, _)| *d <= config.ring_widget_radius)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?
        .1;
    match slot {
        0 => Some(RingCommand::CycleFrontEffect),
        1 => Some(RingCommand::CycleBackEffect),
        2 => adjustable_param(lens).map(|name| RingCommand::AdjustParam {
            name: name.to_string(),
            delta: config.param_step,
        }),
        _ => lens.is_combined().then_some(RingCommand::Split),
    }
}

/// A lens the held lens overlaps closely enough to snap with; the proxy
/// never takes part. Ties go to the nearer center, then the smaller id.
pub fn snap_check(scene: &SceneState, held: LensId, config: &InteractionConfig) -> Option<LensId> {
    if scene.is_proxy(held) {
        return None;
    }
    let h = scene.lens(held)?;
    scene
        .lenses
        .iter()
        .filter(|l| l.id != held && !scene.is_proxy(l.id))
        .filter(|l| overlap_near_maximal(h, l, &config.snap))
        .map(|l| ((l.center() - h.center()).norm(), l.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

/// Nearest lens hit by the controller's pointing ray (local −Z).
pub fn raycast_select(
    lenses: &[Lens],
    controller: &Pose,
    config: &InteractionConfig,
) -> Option<LensId> {
    let dir = controller.transform_vector(&Vec3::new(0.0, 0.0, -1.0));
    let ray = Ray::new(controller.position, dir)?;
    lenses
        .iter()
        .filter_map(|l| ray_disc_hit(l, &ray).map(|h| (h.t, l.id)))
        .filter(|(t, _)| *t <= config.raycast_range)
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}
