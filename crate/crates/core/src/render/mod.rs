//! CPU ray-caster.
//!
//! Each pixel's ray is clipped to the volume's voxel-center box and split at
//! every lens disc it crosses. Every piece is integrated with the effects
//! active on it, front to back, and lens rings are painted on top.
//!
//! Samples lie on one lattice per ray, `t_in + k·step` from the volume entry
//! point. Splitting a ray at a disc therefore never moves a sample.

mod image;
mod rings;

pub use image::{decode_png, encode_png, read_image, write_image, ImageError};
pub use rings::{draw_lens_rings, ring_hit, RingHit, GRABBED_RING, IDLE_RING, PROXY_RING_ALPHA};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::effect::{compose_effects, EffectDescriptor, FieldTransform, Integrator};
use crate::geom::{Pose, Ray, Vec3};
use crate::lens::{chain_hits, ChainHit};
use crate::scene::SceneState;
use crate::volume::VolumeGrid;

/// Integration stops once accumulated opacity reaches this.
pub const EARLY_EXIT_ALPHA: f64 = 0.99;

/// Pinhole camera looking along its local −Z with local +Y up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub pose: Pose,
    /// Vertical field of view, degrees.
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

impl Camera {
    pub fn new(pose: Pose, fov_deg: f64, width: u32, height: u32) -> Option<Self> {
        let ok = fov_deg > 10.0 && fov_deg < 170.0 && width >= 1 && height >= 1;
        ok.then_some(Self {
            pose,
            fov_deg,
            width,
            height,
        })
    }

    /// Ray through the center of pixel `(x, y)`, `(0, 0)` being top-left.
    pub fn pixel_ray(&self, x: u32, y: u32) -> Ray {
        let tan = (self.fov_deg.to_radians() * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let u = (2.0 * (x as f64 + 0.5) / self.width as f64 - 1.0) * aspect * tan;
        let v = (1.0 - 2.0 * (y as f64 + 0.5) / self.height as f64) * tan;
        let dir = self.pose.transform_vector(&Vec3::new(u, v, -1.0));
        Ray::new(self.pose.position, dir).expect("camera rays have nonzero direction")
    }

    /// Pixel coordinates (continuous, pixel centers at `i + 0.5`) of a world
    /// point, or `None` when it is behind the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        let local = self.pose.inverse_transform_point(p);
        if local.z >= 0.0 {
            return None;
        }
        let tan = (self.fov_deg.to_radians() * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let u = local.x / -local.z / (aspect * tan);
        let v = local.y / -local.z / tan;
        Some((
            (u + 1.0) * 0.5 * self.width as f64,
            (1.0 - v) * 0.5 * self.height as f64,
        ))
    }
}

/// One transfer-function control point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub value: f64,
    pub opacity: f64,
    pub gray: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid transfer function: {0}")]
pub struct TransferFunctionError(String);

/// Piecewise-linear map from scalar value to (opacity, gray level).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ControlPoint>", into = "Vec<ControlPoint>")]
pub struct TransferFunction {
    points: Vec<ControlPoint>,
}

impl TryFrom<Vec<ControlPoint>> for TransferFunction {
    type Error = TransferFunctionError;

    fn try_from(points: Vec<ControlPoint>) -> Result<Self, Self::Error> {
        Self::new(points)
    }
}

impl From<TransferFunction> for Vec<ControlPoint> {
    fn from(tf: TransferFunction) -> Self {
        tf.points
    }
}

impl Default for TransferFunction {
    fn default() -> Self {
        let p = |value, opacity, gray| ControlPoint {
            value,
            opacity,
            gray,
        };
        Self {
            points: vec![
                p(0.0, 0.0, 0.0),
                p(0.3, 0.02, 0.35),
                p(0.6, 0.06, 0.6),
                p(1.0, 0.15, 0.9),
            ],
        }
    }
}

impl TransferFunction {
    pub fn new(points: Vec<ControlPoint>) -> Result<Self, TransferFunctionError> {
        let err = |m: &str| Err(TransferFunctionError(m.to_string()));
        if points.len() < 2 {
            return err("needs at least two control points");
        }
        if points[0].value != 0.0 || points[points.len() - 1].value != 1.0 {
            return err("control points must start at 0 and end at 1");
        }
        if points.windows(2).any(|w| !(w[0].value < w[1].value)) {
            return err("control point values must be strictly increasing");
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if points.iter().any(|p| !unit(p.opacity) || !unit(p.gray)) {
            return err("opacity and gray must lie in [0, 1]");
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    /// (opacity, gray) at `v`, clamped into `[0, 1]`.
    #[inline]
    pub fn eval(&self, v: f64) -> (f64, f64) {
        let v = v.clamp(0.0, 1.0);
        let pts = &self.points;
        let i = pts[1..].partition_point(|p| p.value < v).min(pts.len() - 2);
        let (a, b) = (&pts[i], &pts[i + 1]);
        let t = (v - a.value) / (b.value - a.value);
        (
            a.opacity * (1.0 - t) + b.opacity * t,
            a.gray * (1.0 - t) + b.gray * t,
        )
    }
}

/// RGBA8 image, row-major from the top-left corner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Framebuffer {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Framebuffer {
    pub fn new(width: u32, height: u32, fill: [u8; 4]) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            pixels: fill.repeat(n),
        }
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        4 * (y as usize * self.width as usize + x as usize)
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 4] {
        let o = self.offset(x, y);
        self.pixels[o..o + 4].try_into().expect("4 channels")
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgba: [u8; 4]) {
        let o = self.offset(x, y);
        self.pixels[o..o + 4].copy_from_slice(&rgba);
    }

    /// Rec. 709 luma in `[0, 255]`.
    pub fn luminance(&self, x: u32, y: u32) -> f64 {
        let [r, g, b, _] = self.pixel(x, y);
        0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64
    }

    pub fn rgb(&self) -> Vec<u8> {
        self.pixels
            .chunks_exact(4)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect()
    }

    /// SHA-256 over the dimensions and pixels, hex encoded.
    pub fn hash_hex(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.width.to_le_bytes());
        h.update(self.height.to_le_bytes());
        h.update(&self.pixels);
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RenderOptions {
    /// Sample spacing along rays; half the smallest voxel spacing by default.
    pub step: Option<f64>,
    /// Pixel workers; 0 uses rayon's global pool, 1 renders on the calling thread.
    pub workers: usize,
    /// Overrides the grid's gradient-magnitude normalization.
    pub gradient_reference: Option<f64>,
}

impl RenderOptions {
    pub fn with_step(step: f64) -> Self {
        Self {
            step: Some(step),
            ..Self::default()
        }
    }
}

/// Front-to-back accumulation state of one ray.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RayAccum {
    /// Premultiplied gray level.
    pub color: f64,
    pub alpha: f64,
    pub terminated: bool,
    /// Field maximum of the last maximum-intensity segment.
    pub last_max: f64,
}

/// A sample taken by the integrator, reported to observers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    /// Field value after transforms.
    pub value: f64,
    /// Accumulated opacity after this sample.
    pub alpha: f64,
}

/// What `integrate_segment` needs besides the ray and its piece.
#[derive(Clone, Copy, Debug)]
pub struct Integration<'a> {
    pub grid: &'a VolumeGrid,
    pub tf: &'a TransferFunction,
    pub step: f64,
    /// Gradient-magnitude normalization before `g_max_scale`.
    pub gradient_reference: f64,
}

impl<'a> Integration<'a> {
    pub fn new(grid: &'a VolumeGrid, tf: &'a TransferFunction, step: f64) -> Self {
        Self {
            grid,
            tf,
            step,
            gradient_reference: grid.gradient_reference(),
        }
    }
}

/// An effective shading reduced to plain numbers for the sample loop.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Shader {
    derivatives: usize,
    g_norm: f64,
    integrator: Integrator,
    opacity_scale: f64,
    gain: f64,
}

impl Shader {
    fn new(stack: &[EffectDescriptor], gradient_reference: f64) -> Self {
        let s = compose_effects(stack);
        let derivatives = s
            .transforms
            .iter()
            .filter(|t| **t == FieldTransform::GradientMagnitude)
            .count();
        Self {
            derivatives,
            g_norm: gradient_reference * s.param("g_max_scale", 1.0),
            integrator: s.integrator,
            opacity_scale: s.param("opacity_scale", 1.0),
            gain: s.param("gain", 1.0),
        }
    }

    /// The shaded field at a ray sample. Samples are pulled onto the
    /// voxel-center box: segments lie inside it, so this only undoes rounding
    /// at the entry and exit faces, which would otherwise read as empty space.
    #[inline]
    fn sample(&self, grid: &VolumeGrid, p: &Vec3) -> f64 {
        if self.derivatives == 0 {
            return grid.sample_trilinear_clamped(p);
        }
        let (lo, hi) = grid.bounds();
        let p = Vec3::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y), p.z.clamp(lo.z, hi.z));
        self.field(grid, &p, self.derivatives)
    }

    /// Field value after `level` gradient-magnitude transforms. Differences
    /// follow `VolumeGrid::gradient_central`, one-sided at the data edge.
    fn field(&self, grid: &VolumeGrid, p: &Vec3, level: usize) -> f64 {
        if level == 0 {
            return grid.sample_trilinear(p);
        }
        let g = if level == 1 {
            grid.gradient_central(p).norm()
        } else {
            let (lo, hi) = grid.bounds();
            if (0..3).any(|a| !(p[a] >= lo[a] && p[a] <= hi[a])) {
                return 0.0;
            }
            let sp = grid.spacing();
            let mut g2 = 0.0;
            for a in 0..3 {
                let mut fwd = *p;
                let mut back = *p;
                fwd[a] = (p[a] + sp[a]).min(hi[a]);
                back[a] = (p[a] - sp[a]).max(lo[a]);
                let span = fwd[a] - back[a];
                if span > 0.0 {
                    let d = (self.field(grid, &fwd, level - 1)
                        - self.field(grid, &back, level - 1))
                        / span;
                    g2 += d * d;
                }
            }
            g2.sqrt()
        };
        if self.g_norm > 0.0 {
            (g / self.g_norm).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Opacity correction `1 − (1 − a)^ratio`, exact for the common ratios.
#[inline]
fn correct_opacity(a: f64, ratio: f64) -> f64 {
    if ratio == 1.0 {
        a
    } else if ratio == 0.5 {
        1.0 - (1.0 - a).sqrt()
    } else {
        1.0 - (1.0 - a).powf(ratio)
    }
}

/// Integrates `[t0, t1)` of `ray` with the effect stack `stack`, sampling at
/// `t0 + k·step`. `t1` is taken as the ray's exit from the volume: the last
/// sample's opacity covers only the remaining distance to it.
pub fn integrate_segment(
    ctx: &Integration<'_>,
    ray: &Ray,
    t0: f64,
    t1: f64,
    stack: &[EffectDescriptor],
    acc: &mut RayAccum,
) {
    let shader = Shader::new(stack, ctx.gradient_reference);
    integrate_with(ctx, ray, t0, t1, true, &shader, acc, |_| {});
}

/// As [`integrate_segment`], reporting every sample to `observe`.
pub fn integrate_segment_observed(
    ctx: &Integration<'_>,
    ray: &Ray,
    t0: f64,
    t1: f64,
    stack: &[EffectDescriptor],
    acc: &mut RayAccum,
    observe: impl FnMut(Sample),
) {
    let shader = Shader::new(stack, ctx.gradient_reference);
    integrate_with(ctx, ray, t0, t1, true, &shader, acc, observe);
}

/// `exits` marks `t1` as the volume exit rather than a lens crossing, after
/// which sampling continues on the same lattice.
#[allow(clippy::too_many_arguments)]
fn integrate_with(
    ctx: &Integration<'_>,
    ray: &Ray,
    t0: f64,
    t1: f64,
    exits: bool,
    shader: &Shader,
    acc: &mut RayAccum,
    mut observe: impl FnMut(Sample),
) {
    if acc.terminated || !(t0 < t1) {
        return;
    }
    let grid = ctx.grid;
    match shader.integrator {
        Integrator::EmissionAbsorption => {
            let ratio = ctx.step / grid.min_spacing();
            let mut k = 0i64;
            loop {
                let t = t0 + k as f64 * ctx.step;
                if t >= t1 {
                    break;
                }
                let v = shader.sample(grid, &ray.at(t));
                let (op, gray) = ctx.tf.eval(v);
                let ratio = if exits && t + ctx.step > t1 {
                    (t1 - t) / grid.min_spacing()
                } else {
                    ratio
                };
                let a = correct_opacity((op * shader.opacity_scale).min(1.0), ratio);
                let w = (1.0 - acc.alpha) * a;
                acc.color += w * gray;
                acc.alpha += w;
                observe(Sample {
                    t,
                    value: v,
                    alpha: acc.alpha,
                });
                if acc.alpha >= EARLY_EXIT_ALPHA {
                    acc.terminated = true;
                    break;
                }
                k += 1;
            }
        }
        Integrator::MaximumIntensity => {
            let mut max = 0.0f64;
            let mut k = 0i64;
            loop {
                let t = t0 + k as f64 * ctx.step;
                if t >= t1 {
                    break;
                }
                let v = shader.sample(grid, &ray.at(t));
                max = max.max(v);
                observe(Sample {
                    t,
                    value: v,
                    alpha: acc.alpha,
                });
                k += 1;
            }
            acc.last_max = max;
            if max > 0.0 {
                acc.color += (1.0 - acc.alpha) * (max * shader.gain).min(1.0);
                acc.alpha = 1.0;
                acc.terminated = true;
            }
        }
    }
}

/// Everything that is fixed for one frame.
struct FrameContext<'a> {
    scene: &'a SceneState,
    camera: &'a Camera,
    integration: Option<(Integration<'a>, Vec3, Vec3)>,
    background: [f64; 3],
}

impl FrameContext<'_> {
    fn shade(&self, x: u32, y: u32, hits: &mut Vec<ChainHit>) -> [u8; 4] {
        let ray = self.camera.pixel_ray(x, y);
        let mut acc = RayAccum::default();
        if let Some((ctx, lo, hi)) = &self.integration {
            if let Some((t_in, t_out)) = ray.intersect_aabb(lo, hi) {
                integrate_ray(ctx, &self.scene.lenses, &ray, t_in, t_out, hits, &mut acc);
            }
        }
        let mut rgb = [0u8; 3];
        for c in 0..3 {
            let v = 255.0 * acc.color + (1.0 - acc.alpha) * self.background[c];
            rgb[c] = v.round().clamp(0.0, 255.0) as u8;
        }
        if let Some(hit) = ring_hit(self.scene, &ray) {
            rgb = hit.blend(rgb);
        }
        [rgb[0], rgb[1], rgb[2], 255]
    }
}

/// Integrates the volume part `[t_in, t_out]` of a ray through the lens set.
pub fn integrate_ray(
    ctx: &Integration<'_>,
    lenses: &[crate::lens::Lens],
    ray: &Ray,
    t_in: f64,
    t_out: f64,
    hits: &mut Vec<ChainHit>,
    acc: &mut RayAccum,
) {
    chain_hits(lenses, ray, t_out, hits);
    let snap = |t: f64| {
        if t <= t_in {
            t_in
        } else {
            t_in + ((t - t_in) / ctx.step).ceil() * ctx.step
        }
    };
    let mut stack: Vec<EffectDescriptor> = Vec::new();
    let mut start = 0.0;
    let mut shader = Shader::new(&stack, ctx.gradient_reference);
    for h in hits.iter() {
        if h.t > start {
            let (a, b) = (start.max(t_in), h.t.min(t_out));
            if a < b {
                integrate_with(ctx, ray, snap(a), b, false, &shader, acc, |_| {});
            }
            start = h.t;
        }
        stack.extend_from_slice(lenses[h.index].contribution(h.face));
        shader = Shader::new(&stack, ctx.gradient_reference);
        if acc.terminated {
            return;
        }
    }
    let a = start.max(t_in);
    if a < t_out {
        integrate_with(ctx, ray, snap(a), t_out, true, &shader, acc, |_| {});
    }
}

/// Renders the scene from `camera`. Deterministic for identical inputs.
pub fn render_frame(
    scene: &SceneState,
    camera: &Camera,
    tf: &TransferFunction,
    opts: &RenderOptions,
) -> Framebuffer {
    let integration = scene.volume.as_deref().map(|grid| {
        let step = opts.step.unwrap_or(0.5 * grid.min_spacing());
        let mut ctx = Integration::new(grid, tf, step);
        if let Some(g) = opts.gradient_reference {
            ctx.gradient_reference = g;
        }
        let (lo, hi) = grid.bounds();
        (ctx, lo, hi)
    });
    let frame = FrameContext {
        scene,
        camera,
        integration,
        background: scene.background.map(f64::from),
    };
    let (w, h) = (camera.width, camera.height);
    let mut fb = Framebuffer::new(w, h, [0, 0, 0, 255]);
    let row_bytes = 4 * w as usize;
    let shade_row = |y: usize, row: &mut [u8]| {
        let mut hits = Vec::new();
        for x in 0..w {
            let px = frame.shade(x, y as u32, &mut hits);
            row[4 * x as usize..4 * x as usize + 4].copy_from_slice(&px);
        }
    };
    match opts.workers {
        1 => fb
            .pixels
            .chunks_mut(row_bytes)
            .enumerate()
            .for_each(|(y, row)| shade_row(y, row)),
        0 => fb
            .pixels
            .par_chunks_mut(row_bytes)
            .enumerate()
            .for_each(|(y, row)| shade_row(y, row)),
        n => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .expect("thread pool");
            pool.install(|| {
                fb.pixels
                    .par_chunks_mut(row_bytes)
                    .enumerate()
                    .for_each(|(y, row)| shade_row(y, row))
            });
        }
    }
    fb
}
