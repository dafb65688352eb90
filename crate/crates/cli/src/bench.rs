//! Frame timing on the default phantom: plain DVR around one MIP lens, as
//! seen by a user looking across the layers at the wreck's depth.

use std::sync::Arc;
use std::time::Instant;

use loupe_core::effect::EffectDescriptor;
use loupe_core::geom::{Pose, Vec3};
use loupe_core::lens::{Lens, LensId};
use loupe_core::phantom::{generate_phantom, PhantomSpec};
use loupe_core::render::{render_frame, Camera, RenderOptions, TransferFunction};
use loupe_core::scene::SceneState;
use loupe_core::volume::VolumeGrid;
use serde::Serialize;

pub const WIDTH: u32 = 320;
pub const HEIGHT: u32 = 240;

/// The scene and camera every benchmark frame renders.
pub fn bench_scene(volume: Arc<VolumeGrid>) -> (SceneState, Camera) {
    let spec = PhantomSpec::default();
    let wreck = spec.wreck.expect("default phantom has a wreck");
    let z = spec.origin()[2] + wreck.center[2] * spec.extent[2];
    let head = Pose::looking_at(Vec3::new(0.0, 1.0, z), Vec3::new(0.0, 0.0, z), Vec3::z());
    let mut scene = SceneState::with_volume(volume);
    scene.head = head;
    let lens = Lens::new(
        LensId(1),
        Pose::from_parts(Vec3::new(0.0, 0.5, z), head.orientation),
        0.16,
        EffectDescriptor::mip(),
        EffectDescriptor::plain(),
    )
    .expect("valid lens");
    scene.upsert_lens(lens);
    let camera = Camera::new(head, 40.0, WIDTH, HEIGHT).expect("valid camera");
    (scene, camera)
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    /// Pixel workers; 0 means every available core.
    pub workers: usize,
    pub threads: usize,
    pub frames_ms: Vec<f64>,
    pub min_ms: f64,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
}

impl Timing {
    fn from_samples(workers: usize, threads: usize, frames_ms: Vec<f64>) -> Self {
        let mut sorted = frames_ms.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median_ms = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Self {
            workers,
            threads,
            min_ms: sorted[0],
            max_ms: sorted[n - 1],
            mean_ms: frames_ms.iter().sum::<f64>() / n as f64,
            median_ms,
            frames_ms,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub width: u32,
    pub height: u32,
    pub cores: usize,
    pub single: Timing,
    pub parallel: Timing,
}

/// Times `frames` renders (at least one) single-worker and then with every core.
pub fn run(frames: usize) -> BenchReport {
    let volume = Arc::new(generate_phantom(&PhantomSpec::default()).expect("default phantom is valid"));
    // Built once per grid; keep it out of the first frame's time.
    volume.gradient_reference();
    let (scene, camera) = bench_scene(volume);
    let tf = TransferFunction::default();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let time = |workers: usize| {
        let opts = RenderOptions {
            workers,
            ..RenderOptions::default()
        };
        let samples = (0..frames.max(1))
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(render_frame(&scene, &camera, &tf, &opts));
                t.elapsed().as_secs_f64() * 1e3
            })
            .collect();
        let threads = if workers == 0 { rayon::current_num_threads() } else { workers };
        Timing::from_samples(workers, threads, samples)
    };
    let single = time(1);
    let parallel = time(0);
    BenchReport {
        width: WIDTH,
        height: HEIGHT,
        cores,
        single,
        parallel,
    }
}

impl std::fmt::Display for BenchReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "default phantom, DVR + one MIP lens, {}x{}, {} core(s)",
            self.width, self.height, self.cores
        )?;
        writeln!(f, "{:<10} {:>7} {:>9} {:>9} {:>9} {:>9}", "mode", "threads", "min ms", "median", "mean", "max")?;
        for (name, t) in [("single", &self.single), ("parallel", &self.parallel)] {
            writeln!(
                f,
                "{:<10} {:>7} {:>9.1} {:>9.1} {:>9.1} {:>9.1}",
                name, t.threads, t.min_ms, t.median_ms, t.mean_ms, t.max_ms
            )?;
        }
        Ok(())
    }
}
