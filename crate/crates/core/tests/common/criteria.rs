//! The checks behind the headline guarantees, shared by this crate's test
//! targets and the workspace acceptance run. Each returns a one-line summary
//! of what it measured and panics with the offending case when it fails.

use std::f64::consts::TAU;
use std::sync::Arc;

use loupe_core::config::InteractionConfig;
use loupe_core::effect::EffectDescriptor;
use loupe_core::geom::{Pose, Ray, Vec3};
use loupe_core::interaction::gestures::raycast_select;
use loupe_core::interaction::input::{ButtonEdge, Hand, Hands, InputEvent};
use loupe_core::interaction::proxy::spawn_proxy;
use loupe_core::interaction::{check_invariants, InteractionMode, ModeKind, Reducer};
use loupe_core::lens::{combine, overlap_near_maximal, ray_disc_hit, split, Face, Lens, LensId, SnapThresholds};
use loupe_core::render::{
    integrate_segment, integrate_segment_observed, Camera, Integration, RayAccum, TransferFunction,
};
use loupe_core::scene::SceneState;
use loupe_core::volume::VolumeGrid;
use loupe_oracles::{self as oracle, Grid, Pinhole};
use nalgebra::UnitQuaternion;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

use super::fuzz::Fuzzer;
use super::*;

// ---------------------------------------------------------------- geometry

/// A random ray: half of them aimed at a point near the disc so that hits,
/// rim misses and grazing rays all occur.
pub fn random_ray(r: &mut ChaCha8Rng, lens: &Lens) -> Ray {
    let origin = vec_in(r, 2.0);
    let dir = if r.random_bool(0.5) {
        let local = Vec3::new(
            r.random_range(-1.5..1.5) * lens.radius(),
            r.random_range(-1.5..1.5) * lens.radius(),
            0.0,
        );
        lens.pose.transform_point(&local) - origin
    } else {
        vec_in(r, 1.0)
    };
    Ray::new(origin, dir).unwrap_or_else(|| Ray::new(origin, Vec3::x()).unwrap())
}

/// `ray_disc_hit` against the plane-and-membership oracle: identical hit/miss
/// and face, `t` within 1e-9.
pub fn ray_disc_hits(cases: usize) -> String {
    let mut r = rng(1);
    let mut hits = 0;
    let mut worst = 0.0f64;
    for i in 0..cases {
        let lens = super::lens(1, pose(&mut r, 1.0), r.random_range(0.05..2.0));
        let ray = random_ray(&mut r, &lens);
        let got = ray_disc_hit(&lens, &ray);
        let want = oracle::disc_hit(&disc(&lens), v3(&ray.origin), v3(&ray.direction));
        match (got, want) {
            (None, None) => {}
            (Some(h), Some((t, front))) => {
                hits += 1;
                worst = worst.max((h.t - t).abs());
                assert!((h.t - t).abs() <= 1e-9, "case {i}: t {} vs {t}", h.t);
                assert_eq!(h.face == Face::Front, front, "case {i}");
            }
            _ => panic!("case {i}: engine {got:?}, oracle {want:?}"),
        }
    }
    assert!(hits > cases / 5, "too few hits ({hits}) to exercise the hit path");
    format!("{cases} rays, {hits} hits, max |Δt| {worst:.1e}")
}

/// `raycast_select` against an exhaustive nearest-disc pick.
pub fn raycast_picks(scenes: usize) -> String {
    let cfg = InteractionConfig::default();
    let mut r = rng(2);
    let mut picked = 0;
    for i in 0..scenes {
        let n = r.random_range(1..12);
        let lenses: Vec<Lens> = (0..n)
            .map(|i| super::lens(i + 1, pose(&mut r, 1.5), r.random_range(0.05..0.6)))
            .collect();
        let from = vec_in(&mut r, 2.0);
        let aim = if r.random_bool(0.7) {
            lenses[r.random_range(0..lenses.len())].center() + vec_in(&mut r, 0.2)
        } else {
            vec_in(&mut r, 2.0)
        };
        let controller = Pose::looking_at(from, aim, rotation(&mut r) * Vec3::z());
        let dir = controller.transform_vector(&Vec3::new(0.0, 0.0, -1.0));
        let discs: Vec<_> = lenses.iter().map(disc).collect();
        let want = oracle::nearest_disc(&discs, v3(&from), v3(&dir), cfg.raycast_range);
        let got = raycast_select(&lenses, &controller, &cfg).map(|id| id.0);
        assert_eq!(got, want, "scene {i}");
        picked += got.is_some() as usize;
    }
    assert!(picked > scenes * 3 / 10);
    format!("{scenes} scenes, {picked} picks")
}

// --------------------------------------------------------------- rendering

/// A smooth blob, off-center so rays see it at varying depth, fading to
/// nearly zero at the faces.
pub fn smooth(p: [f64; 3]) -> f64 {
    let d2 = (p[0] - 0.55).powi(2) + (p[1] - 0.45).powi(2) + (p[2] - 0.5).powi(2);
    0.05 + 0.85 * (-d2 / (2.0 * 0.3 * 0.3)).exp()
}

/// The same field on the oracle's grid and the engine's, over the unit cube.
pub fn grids(n: usize) -> (Grid, Arc<VolumeGrid>) {
    let h = 1.0 / (n - 1) as f64;
    let g = Grid::from_fn([n; 3], [h; 3], [0.0; 3], smooth);
    let e = VolumeGrid::new(g.dims, g.spacing, g.origin, g.values.clone()).unwrap();
    (g, Arc::new(e))
}

pub fn look(eye: Vec3, target: Vec3, w: u32, h: u32) -> (Camera, Pinhole) {
    let cam = Camera::new(Pose::looking_at(eye, target, Vec3::z()), 45.0, w, h).unwrap();
    let pin = Pinhole::new(v3(&eye), v3(&target), [0.0, 0.0, 1.0], 45.0, w, h);
    (cam, pin)
}

/// Per-pixel MIP on a 32³ smooth field against the oracle marching at a
/// tenth of the step.
pub fn mip_vs_refined() -> String {
    let (g, grid) = grids(32);
    let tf = TransferFunction::default();
    let step = 0.5 * grid.min_spacing();
    let ctx = Integration::new(&grid, &tf, step);
    let (cam, pin) = look(Vec3::new(1.9, -1.3, 1.4), Vec3::new(0.5, 0.5, 0.5), 48, 48);
    let (lo, hi) = grid.bounds();
    let mut worst = 0.0f64;
    let mut pixels = 0;
    for y in 0..48 {
        for x in 0..48 {
            let ray = cam.pixel_ray(x, y);
            let mut acc = RayAccum::default();
            let Some((t0, t1)) = ray.intersect_aabb(&lo, &hi) else { continue };
            integrate_segment(&ctx, &ray, t0, t1, &[EffectDescriptor::mip()], &mut acc);
            let (o0, o1) = oracle::box_interval(g.lo(), g.hi(), pin.eye, pin.ray(x, y)).unwrap();
            let want = oracle::max_along(|p| g.trilinear(p), pin.eye, pin.ray(x, y), o0, o1, step / 10.0);
            worst = worst.max((acc.last_max - want).abs());
            pixels += 1;
        }
    }
    assert!(worst <= 1e-3, "worst MIP deviation {worst}");
    format!("{pixels} pixels, max deviation {worst:.1e}")
}

/// Accumulated opacity never decreases along any ray of a 64×64 frame,
/// for plain and derivative shading.
pub fn dvr_opacity_monotone() -> String {
    let (_, grid) = grids(32);
    let tf = TransferFunction::default();
    let ctx = Integration::new(&grid, &tf, 0.5 * grid.min_spacing());
    let (cam, _) = look(Vec3::new(-0.8, 2.1, 0.9), Vec3::new(0.5, 0.4, 0.5), 64, 64);
    let (lo, hi) = grid.bounds();
    let mut samples = 0usize;
    for stack in [vec![], vec![EffectDescriptor::derivative()]] {
        for y in 0..64 {
            for x in 0..64 {
                let ray = cam.pixel_ray(x, y);
                let Some((t0, t1)) = ray.intersect_aabb(&lo, &hi) else { continue };
                let mut acc = RayAccum::default();
                let mut prev = 0.0;
                integrate_segment_observed(&ctx, &ray, t0, t1, &stack, &mut acc, |s| {
                    assert!(s.alpha >= prev && s.alpha <= 1.0, "{x},{y}: {prev} → {}", s.alpha);
                    prev = s.alpha;
                    samples += 1;
                });
            }
        }
    }
    format!("{samples} samples on 2×64×64 rays")
}

/// The smooth test field on the unit cube and its analytic gradient.
pub fn wave(p: [f64; 3]) -> f64 {
    0.5 + 0.2 * (TAU * p[0]).sin() * (TAU * p[1]).cos() + 0.1 * (TAU * p[2]).sin()
}

pub fn wave_gradient(p: [f64; 3]) -> [f64; 3] {
    [
        0.2 * TAU * (TAU * p[0]).cos() * (TAU * p[1]).cos(),
        -0.2 * TAU * (TAU * p[0]).sin() * (TAU * p[1]).sin(),
        0.1 * TAU * (TAU * p[2]).cos(),
    ]
}

pub fn wave_grid(n: usize) -> VolumeGrid {
    let h = 1.0 / (n - 1) as f64;
    VolumeGrid::from_fn([n; 3], [h; 3], [0.0; 3], |p| wave(v3(&p))).unwrap()
}

/// Largest relative gradient-magnitude error over random interior points
/// where the analytic magnitude is at least 10% of its maximum.
pub fn worst_gradient_error(grid: &VolumeGrid, seed: u64) -> f64 {
    let mut r = rng(seed);
    let g_max = 0.2 * TAU + 0.1 * TAU;
    let margin = 2.0 * grid.spacing()[0];
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 5_000 {
        let p = [0; 3].map(|_| r.random_range(margin..1.0 - margin));
        let want = oracle::norm(wave_gradient(p));
        if want < 0.1 * g_max {
            continue;
        }
        let got = grid.gradient_central(&Vec3::from(p)).norm();
        worst = worst.max((got - want).abs() / want);
        n += 1;
    }
    worst
}

pub fn gradient_at_64() -> String {
    let e = worst_gradient_error(&wave_grid(64), 12);
    assert!(e < 0.05, "worst relative error {e}");
    format!("max relative error {:.2}%", 100.0 * e)
}

// ----------------------------------------------------------------- reducer

/// Feeds events built from hand poses and grab states; the clock advances
/// by one millisecond per event.
pub struct Driver {
    pub reducer: Reducer,
    pub scene: SceneState,
    pub mode: InteractionMode,
    pub hands: Hands,
    pub head: Pose,
    t: u64,
}

impl Driver {
    pub fn new(scene: SceneState) -> Self {
        Self::with_config(scene, InteractionConfig::default())
    }

    pub fn with_config(scene: SceneState, config: InteractionConfig) -> Self {
        let mut hands = Hands::default();
        hands.dominant.pose = Pose::from_translation(Vec3::new(3.0, 0.0, 0.0));
        hands.non_dominant.pose = Pose::from_translation(Vec3::new(-3.0, 0.0, 0.0));
        Self {
            reducer: Reducer::new(config),
            scene,
            mode: InteractionMode::default(),
            hands,
            head: Pose::looking_at(Vec3::new(0.0, 0.0, 2.0), Vec3::zeros(), Vec3::y()),
            t: 0,
        }
    }

    pub fn step(&mut self) {
        self.t += 1;
        let ev = InputEvent {
            timestamp: self.t,
            head: self.head,
            hands: self.hands,
        };
        let (s, m, _) = self.reducer.step(&self.scene, &self.mode, &ev);
        check_invariants(&s, &m).unwrap();
        self.scene = s;
        self.mode = m;
    }

    pub fn set(&mut self, h: Hand, pose: Pose, grab: bool) {
        let state = self.hands.get_mut(h);
        state.pose = pose;
        state.grab_active = grab;
        self.step();
    }

    pub fn lens(&self, id: u64) -> &Lens {
        self.scene.lens(LensId(id)).unwrap()
    }
}

pub fn scene_of(lenses: impl IntoIterator<Item = Lens>) -> SceneState {
    let mut s = SceneState::default();
    for l in lenses {
        s.upsert_lens(l);
    }
    s
}

/// Random input streams over `seeds`, `steps` events each, with every
/// invariant checked after every event; every mode and the main feedback
/// kinds must show up.
pub fn fuzz(seeds: u64, steps: usize) -> String {
    let mut max_lenses = 0;
    for seed in 0..seeds {
        let mut f = Fuzzer::new(seed);
        let cov = f.run(steps).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        for mode in ["idle", "grabbing", "two_hand_resize", "menu_open", "proxy_active"] {
            assert!(cov.modes.get(mode).is_some_and(|&n| n > 0), "seed {seed}: never reached {mode}: {cov:?}");
        }
        for code in ["snap", "split", "menu-pick", "proxy-spawn", "reject"] {
            assert!(cov.feedback.contains_key(code), "seed {seed}: no {code} feedback: {cov:?}");
        }
        max_lenses = max_lenses.max(cov.max_lenses);
    }
    format!("{} events over {seeds} seeds, up to {max_lenses} lenses", seeds as usize * steps)
}

/// Two-handed resizes driven through the reducer land exactly on
/// `clamp(r0 · d / d0, 0.05, 2.0)`.
pub fn resize_law(cases: usize) -> String {
    let mut r = rng(20);
    let center = Vec3::new(0.0, 1.0, -0.5);
    for case in 0..cases {
        let r0: f64 = r.random_range(0.05..2.0);
        let d0 = r.random_range(0.011..r0.clamp(0.012, 0.5));
        let lens = super::lens(1, Pose::from_translation(center), r0);
        let mut drv = Driver::new(scene_of([lens]));
        drv.set(Hand::Dominant, Pose::from_translation(center), true);
        drv.set(Hand::NonDominant, Pose::from_translation(center - Vec3::new(d0, 0.0, 0.0)), true);
        assert!(matches!(drv.mode.kind, ModeKind::TwoHandResize { .. }), "case {case}");
        for _ in 0..5 {
            // Mostly inside the linear range, sometimes far into either plateau.
            let d = match r.random_range(0..4) {
                0 => r.random_range(0.0..0.05 * d0),
                1 => r.random_range(1.0..100.0) * d0,
                _ => r.random_range(0.5..2.0) * d0,
            };
            drv.set(Hand::NonDominant, Pose::from_translation(center - Vec3::new(d, 0.0, 0.0)), true);
            let hand_distance = oracle::norm(oracle::sub(v3(&center), v3(&(center - Vec3::new(d, 0.0, 0.0)))));
            let want = (r0 * (hand_distance / d0)).clamp(0.05, 2.0);
            assert_eq!(drv.lens(1).radius(), want, "case {case}: r0 {r0} d0 {d0} d {d}");
        }
    }
    format!("{} resize frames exact", 5 * cases)
}

/// Independent statement of the snap predicate.
pub fn oracle_overlap(a: &Lens, b: &Lens, th: &SnapThresholds) -> bool {
    let (da, db) = (disc(a), disc(b));
    let r = da.radius.max(db.radius);
    let na = oracle::rotate(da.orientation, [0.0, 0.0, 1.0]);
    let nb = oracle::rotate(db.orientation, [0.0, 0.0, 1.0]);
    let angle = oracle::dot(na, nb).abs().min(1.0).acos().to_degrees();
    oracle::norm(oracle::sub(da.center, db.center)) <= th.center_fraction * r
        && angle <= th.max_angle_deg
        && (da.radius - db.radius).abs() <= th.radius_fraction * r
}

/// Sweeps center offset, tilt and radius difference across each threshold;
/// the predicate flips exactly at the boundary.
pub fn snap_sweep() -> String {
    let mut evaluated = 0;
    for th in [
        SnapThresholds::default(),
        SnapThresholds { center_fraction: 0.05, max_angle_deg: 4.0, radius_fraction: 0.5 },
    ] {
        let r = 0.4;
        let base = super::lens(1, Pose::identity(), r);
        let mut check = |moved: &Lens| {
            let got = overlap_near_maximal(&base, moved, &th);
            assert_eq!(got, overlap_near_maximal(moved, &base, &th), "asymmetric");
            evaluated += 1;
            got
        };

        // Center distance along x, where the distance is exact.
        let edge = th.center_fraction * r;
        for k in 0..=2_000 {
            let d = k as f64 / 1_000.0 * edge;
            let moved = super::lens(2, Pose::from_translation(Vec3::new(d, 0.0, 0.0)), r);
            assert_eq!(check(&moved), d <= edge, "d = {d}");
            assert_eq!(check(&moved), oracle_overlap(&base, &moved, &th));
        }
        let at = super::lens(2, Pose::from_translation(Vec3::new(edge, 0.0, 0.0)), r);
        let past = super::lens(2, Pose::from_translation(Vec3::new(edge.next_up(), 0.0, 0.0)), r);
        assert!(check(&at) && !check(&past));

        // Tilt, either way round; boundary values themselves are left to rounding.
        for k in 0..=4_000 {
            let deg = k as f64 / 2_000.0 * 2.0 * th.max_angle_deg;
            if (deg - th.max_angle_deg).abs() < 1e-9 {
                continue;
            }
            for flip in [0.0, 180.0] {
                let q = UnitQuaternion::from_euler_angles((deg + flip).to_radians(), 0.0, 0.0);
                let moved = super::lens(2, Pose::from_parts(Vec3::zeros(), q), r);
                assert_eq!(check(&moved), deg <= th.max_angle_deg, "angle {deg} flip {flip}");
            }
        }

        // Radius difference.
        for k in 0..=2_000 {
            let rb = r * (1.0 - k as f64 / 2_000.0 * 2.0 * th.radius_fraction).max(0.06);
            if rb < 0.05 {
                continue;
            }
            let moved = super::lens(2, Pose::identity(), rb);
            assert_eq!(check(&moved), oracle_overlap(&base, &moved, &th), "rb {rb}");
            assert_eq!(check(&moved), r - rb <= th.radius_fraction * r, "rb {rb}");
        }
    }
    format!("{evaluated} predicate evaluations")
}

/// A held lens slid toward another combines on the first frame the oracle
/// says the overlap holds, never earlier.
pub fn snap_in_reducer() -> String {
    let mut frames = Vec::new();
    for th in [SnapThresholds::default(), SnapThresholds { center_fraction: 0.2, ..Default::default() }] {
        let config = InteractionConfig { snap: th, ..Default::default() };
        let r = 0.2;
        let target = Lens::new(LensId(1), Pose::identity(), r, EffectDescriptor::mip(), EffectDescriptor::plain()).unwrap();
        let start = Vec3::new(0.6, 0.0, 0.0);
        let held = Lens::new(LensId(2), Pose::from_translation(start), r, EffectDescriptor::derivative(), EffectDescriptor::plain()).unwrap();
        let mut drv = Driver::with_config(scene_of([target.clone(), held]), config);
        drv.set(Hand::Dominant, Pose::from_translation(start), true);
        let mut fired = None;
        for k in 1..=300 {
            let p = Vec3::new(0.6 - k as f64 * 0.0021, 0.0, 0.0);
            let mut ghost = drv.lens(2).clone();
            ghost.pose.position = p;
            let expect = oracle_overlap(&ghost, &target, &th);
            drv.set(Hand::Dominant, Pose::from_translation(p), true);
            let combined = drv.scene.lens(LensId(1)).is_none();
            assert_eq!(combined, expect || fired.is_some(), "frame {k}");
            if combined && fired.is_none() {
                fired = Some(k);
                let stack: Vec<_> = drv.lens(2).stack().iter().map(|e| e.label()).collect();
                assert_eq!(stack, ["derivative", "mip"]);
            }
        }
        frames.push(fired.expect("the lenses never snapped"));
    }
    format!("snapped on frames {frames:?}")
}

/// What a lens adds to a ray passing through it: its stack, or for an atomic
/// lens the effect of the face toward `viewer`, judged by the oracle.
pub fn seen(l: &Lens, viewer: [f64; 3]) -> Vec<EffectDescriptor> {
    if l.is_combined() {
        return l.stack().to_vec();
    }
    let d = disc(l);
    let n = oracle::rotate(d.orientation, [0.0, 0.0, 1.0]);
    if oracle::dot(n, oracle::sub(viewer, d.center)) > 0.0 {
        vec![l.effect(Face::Front).clone()]
    } else {
        vec![l.effect(Face::Back).clone()]
    }
}

/// Effects a lens carries after a split: the whole stack, or the single
/// recovered effect, which a split always puts on the front face.
pub fn parts(l: &Lens) -> Vec<EffectDescriptor> {
    match l.is_combined() {
        true => l.stack().to_vec(),
        false => vec![l.front_effect.clone()],
    }
}

fn multiset(mut v: Vec<EffectDescriptor>) -> Vec<String> {
    let mut out: Vec<String> = v.drain(..).map(|e| serde_json::to_string(&e).unwrap()).collect();
    out.sort();
    out
}

/// Splits combined lenses until none is left.
fn unwind(mut lenses: Vec<Lens>, mut next_id: u64) -> Vec<Lens> {
    while let Some(i) = lenses.iter().position(|l| l.is_combined()) {
        let (a, b) = split(&lenses[i], LensId(next_id), 1.2).unwrap();
        next_id += 1;
        lenses[i] = a;
        lenses.push(b);
    }
    lenses
}

fn explore(lenses: &[Lens], depth: usize, viewer: [f64; 3], atoms: &[String], count: &mut usize) {
    if depth == 0 {
        return;
    }
    let th = SnapThresholds::default();
    let eye = Vec3::from(viewer);
    for i in 0..lenses.len() {
        for j in 0..lenses.len() {
            if i == j {
                continue;
            }
            let (held, other) = (&lenses[i], &lenses[j]);
            let c = combine(held, other, &eye, &th).unwrap();
            assert_eq!(c.id, held.id);
            assert_eq!(c.pose, held.pose);

            // The most recent combine is undone exactly.
            let (a, b) = split(&c, LensId(1_000), 1.2).unwrap();
            assert_eq!(parts(&a), seen(held, viewer));
            assert_eq!(parts(&b), seen(other, viewer));

            let mut next: Vec<Lens> = lenses.to_vec();
            next[i] = c;
            next.remove(j);
            *count += 1;

            // Lenses that were never combined still show the face toward the viewer.
            let got = multiset(
                next.iter()
                    .flat_map(|l| match l.is_combined() {
                        true => unwind(vec![l.clone()], 2_000).into_iter().map(|p| p.front_effect).collect(),
                        false => seen(l, viewer),
                    })
                    .collect(),
            );
            assert_eq!(got, atoms);
            explore(&next, depth - 1, viewer, atoms, count);
        }
    }
}

/// Every ordered sequence of up to four combines over five lenses (every
/// other one turned over) unwinds to the original effect multiset.
pub fn combine_split_roundtrip() -> String {
    let viewer = [0.3, -0.2, 3.0];
    let lenses: Vec<Lens> = (0..5)
        .map(|i| {
            let mut front = EffectDescriptor::mip();
            front.set_param("gain", 1.0 + i as f64).unwrap();
            let mut back = EffectDescriptor::plain();
            back.set_param("opacity_scale", 1.0 + i as f64).unwrap();
            let q = UnitQuaternion::from_euler_angles(if i % 2 == 1 { std::f64::consts::PI } else { 0.0 }, 0.0, 0.0);
            Lens::new(LensId(i + 1), Pose::from_parts(Vec3::zeros(), q), 0.3, front, back).unwrap()
        })
        .collect();
    let atoms = multiset(lenses.iter().flat_map(|l| seen(l, viewer)).collect());
    let mut count = 0;
    explore(&lenses, 4, viewer, &atoms, &mut count);
    assert_eq!(count, 20 + 20 * 12 + 20 * 12 * 6 + 20 * 12 * 6 * 2);
    format!("{count} combine sequences")
}

/// Proxy gain is distance / proxy distance; the remote turns exactly as the
/// hand does and moves gain × the hand's displacement.
pub fn proxy_mapping(cases: usize) -> String {
    let mut r = rng(21);
    let (mut worst_t, mut worst_q) = (0.0f64, 0.0f64);
    for case in 0..cases {
        let head = Pose::looking_at(Vec3::new(0.0, 1.6, 0.0), Vec3::new(0.0, 1.6, -1.0), Vec3::y());
        let far = head.position + vec_in(&mut r, 1.0).normalize() * r.random_range(1.0..8.0);
        let remote = Lens::new(LensId(1), Pose::from_parts(far, rotation(&mut r)), 0.4, EffectDescriptor::mip(), EffectDescriptor::plain()).unwrap();
        let (scene, binding) = spawn_proxy(&scene_of([remote.clone()]), LensId(1), &head, &InteractionConfig::default()).unwrap();
        let want_gain = oracle::norm(oracle::sub(v3(&far), v3(&head.position))) / 0.5;
        assert!((binding.gain - want_gain).abs() <= 1e-12 * want_gain);

        let mut drv = Driver::new(scene);
        drv.head = head;
        let proxy = drv.scene.lens(binding.proxy).unwrap().pose;
        drv.set(Hand::Dominant, proxy, true);
        assert_eq!(drv.mode.held(), Some(binding.proxy), "case {case}: {:?}", drv.mode);

        let v = vec_in(&mut r, 0.15);
        let q = rotation(&mut r);
        let hand = Pose::from_parts(proxy.position + v, q * proxy.orientation);
        drv.set(Hand::Dominant, hand, true);
        let moved = drv.lens(1);
        let want_center = oracle::add(v3(&far), oracle::scale(v3(&v), binding.gain));
        let err = oracle::norm(oracle::sub(v3(&moved.center()), want_center));
        assert!(err <= 1e-9, "case {case}: off by {err}, gain {}", binding.gain);
        let want_q = oracle::quat_mul(quat(&q), quat(&remote.pose.orientation));
        let angle = oracle::quat_angle(quat(&moved.pose.orientation), want_q);
        assert!(angle <= 1e-9, "case {case}: rotation off by {angle}");
        worst_t = worst_t.max(err);
        worst_q = worst_q.max(angle);

        // Dismiss while holding; the remote keeps its state.
        let final_remote = moved.clone();
        drv.hands.dominant.menu_button_edge = ButtonEdge::Pressed;
        drv.step();
        drv.hands.dominant.menu_button_edge = Default::default();
        assert!(drv.scene.proxy.is_none() && drv.scene.lenses.len() == 1);
        assert_eq!(drv.lens(1), &final_remote);
    }
    format!("{cases} drags, max translation error {worst_t:.1e} m, max rotation error {worst_q:.1e} rad")
}
