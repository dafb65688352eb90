//! Lens rings, painted over the volume image.

use crate::geom::Ray;
use crate::lens::{LensId, MIN_HIT_T, PARALLEL_EPS};
use crate::scene::SceneState;

use super::{Camera, Framebuffer};

pub const IDLE_RING: [u8; 3] = [255, 176, 0];
pub const GRABBED_RING: [u8; 3] = [0, 224, 255];
/// The proxy is drawn semi-transparent.
pub const PROXY_RING_ALPHA: f64 = 0.5;

/// The nearest ring a ray crosses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingHit {
    pub lens: LensId,
    pub t: f64,
    pub color: [u8; 3],
    pub alpha: f64,
}

impl RingHit {
    pub fn blend(&self, under: [u8; 3]) -> [u8; 3] {
        if self.alpha >= 1.0 {
            return self.color;
        }
        let mut out = [0u8; 3];
        for c in 0..3 {
            let v = self.alpha * self.color[c] as f64 + (1.0 - self.alpha) * under[c] as f64;
            out[c] = v.round() as u8;
        }
        out
    }
}

/// Nearest ring crossed by `ray`. A ring is the annulus between the lens
/// radius and radius minus ring width, both scaled by the lens's spawn
/// animation progress.
pub fn ring_hit(scene: &SceneState, ray: &Ray) -> Option<RingHit> {
    let dir = ray.direction.into_inner();
    let mut best: Option<RingHit> = None;
    for lens in &scene.lenses {
        let n = lens.normal();
        let denom = dir.dot(&n);
        if denom.abs() < PARALLEL_EPS {
            continue;
        }
        let t = (lens.center() - ray.origin).dot(&n) / denom;
        if !(t > MIN_HIT_T) || best.is_some_and(|b| b.t <= t) {
            continue;
        }
        let progress = scene.animation_progress(lens.id);
        let outer = lens.radius() * progress;
        let inner = outer - lens.ring_width * progress;
        let rho = (ray.at(t) - lens.center()).norm();
        if rho > outer || rho < inner || outer <= 0.0 {
            continue;
        }
        let color = if scene.held == Some(lens.id) {
            GRABBED_RING
        } else {
            IDLE_RING
        };
        let alpha = if scene.is_proxy(lens.id) {
            PROXY_RING_ALPHA
        } else {
            1.0
        };
        best = Some(RingHit {
            lens: lens.id,
            t,
            color,
            alpha,
        });
    }
    best
}

/// Paints every lens ring visible from `camera` over `fb`.
pub fn draw_lens_rings(fb: &Framebuffer, scene: &SceneState, camera: &Camera) -> Framebuffer {
    let mut out = fb.clone();
    for y in 0..camera.height.min(fb.height) {
        for x in 0..camera.width.min(fb.width) {
            if let Some(hit) = ring_hit(scene, &camera.pixel_ray(x, y)) {
                let [r, g, b, a] = out.pixel(x, y);
                let [r, g, b] = hit.blend([r, g, b]);
                out.set_pixel(x, y, [r, g, b, a]);
            }
        }
    }
    out
}
