//! Remote control of an out-of-reach lens through a nearby proxy disc.

use serde::{Deserialize, Serialize};

use crate::config::InteractionConfig;
use crate::geom::{Pose, Vec3};
use crate::lens::{Lens, LensId};
use crate::scene::{Animation, AnimationKind, SceneState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProxyBinding {
    pub proxy: LensId,
    pub remote: LensId,
    /// Remote translation per unit of proxy translation.
    pub gain: f64,
    pub spawn_pose: Pose,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProxyError {
    #[error("no lens {0}")]
    MissingRemote(LensId),
    #[error("lens {0} already has a proxy")]
    Duplicate(LensId),
    #[error("lens {0} sits at the viewer's head; no usable gain")]
    Degenerate(LensId),
}

/// Places a proxy of `remote` half a meter in front of the head, facing it.
/// A proxy bound to a different lens is dismissed first.
pub fn spawn_proxy(
    scene: &SceneState,
    remote: LensId,
    head: &Pose,
    config: &InteractionConfig,
) -> Result<(SceneState, ProxyBinding), ProxyError> {
    let target = scene.lens(remote).ok_or(ProxyError::MissingRemote(remote))?;
    if scene.proxy.is_some_and(|b| b.remote == remote) {
        return Err(ProxyError::Duplicate(remote));
    }
    let gain = (target.center() - head.position).norm() / config.proxy_distance;
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(ProxyError::Degenerate(remote));
    }
    let mut next = if scene.proxy.is_some() {
        dismiss_proxy(scene)
    } else {
        scene.clone()
    };
    let target = next.lens(remote).ok_or(ProxyError::MissingRemote(remote))?.clone();

    // Local +Z of the head points back at the viewer, so reusing the head
    // orientation turns the proxy's front face toward the user.
    let pose = Pose::from_parts(
        head.transform_point(&Vec3::new(0.0, 0.0, -config.proxy_distance)),
        head.orientation,
    );
    let id = next.next_lens_id();
    let mut proxy = target;
    proxy.id = id;
    proxy.pose = pose;
    proxy.set_radius(config.proxy_radius);
    next.upsert_lens(proxy);

    let binding = ProxyBinding {
        proxy: id,
        remote,
        gain,
        spawn_pose: pose,
    };
    next.proxy = Some(binding);
    next.animations.push(Animation {
        lens: id,
        kind: AnimationKind::ProxyAppear,
        start_ms: next.clock_ms.unwrap_or(0),
        duration_ms: config.animation_ms,
    });
    Ok((next, binding))
}

/// Removes the proxy lens and its binding; the remote keeps its state.
pub fn dismiss_proxy(scene: &SceneState) -> SceneState {
    let mut next = scene.clone();
    if let Some(b) = next.proxy.take() {
        next.remove_lens(b.proxy);
    }
    next
}

/// Change of the proxy between two frames.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxyDelta {
    pub before: Pose,
    pub after: Pose,
    /// Ratio of new to old proxy radius.
    pub scale: f64,
}

impl ProxyDelta {
    pub fn motion(before: Pose, after: Pose) -> Self {
        Self {
            before,
            after,
            scale: 1.0,
        }
    }

    pub fn resize(scale: f64) -> Self {
        Self {
            before: Pose::identity(),
            after: Pose::identity(),
            scale,
        }
    }
}

/// Applies a proxy change to the remote lens: world-space translation scaled
/// by the gain, world-space rotation 1:1 about the remote's own center, and
/// the same relative radius change.
pub fn apply_to_remote(remote: &Lens, gain: f64, delta: &ProxyDelta) -> Lens {
    let mut out = remote.clone();
    if delta.after.position != delta.before.position {
        out.pose.position += (delta.after.position - delta.before.position) * gain;
    }
    if delta.after.orientation != delta.before.orientation {
        let dq = delta.after.orientation * delta.before.orientation.inverse();
        out.pose.orientation = dq * out.pose.orientation;
    }
    if delta.scale != 1.0 {
        out.set_radius(out.radius() * delta.scale);
    }
    out
}

pub fn proxy_apply(binding: &ProxyBinding, delta: &ProxyDelta, scene: &SceneState) -> SceneState {
    let mut next = scene.clone();
    if let Some(remote) = next.lens(binding.remote) {
        let moved = apply_to_remote(remote, binding.gain, delta);
        next.upsert_lens(moved);
    }
    next
}
