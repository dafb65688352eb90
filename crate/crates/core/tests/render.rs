mod common;

use std::f64::consts::TAU;
use std::sync::Arc;

use common::criteria::{self, grids, look};
use common::*;
use loupe_core::effect::EffectDescriptor;
use loupe_core::geom::{Pose, Vec3};
use loupe_core::lens::{Lens, LensId};
use loupe_core::render::{render_frame, Camera, RenderOptions, TransferFunction, GRABBED_RING, IDLE_RING};
use loupe_core::phantom::{generate_phantom, PhantomSpec};
use loupe_core::scene::SceneState;
use loupe_oracles as oracle;

#[test]
fn mip_matches_tenfold_refined_oracle() {
    criteria::mip_vs_refined();
}

#[test]
fn accumulated_opacity_never_decreases() {
    criteria::dvr_opacity_monotone();
}

#[test]
fn halving_the_step_changes_default_phantom_pixels_by_at_most_two_levels() {
    let grid = Arc::new(generate_phantom(&PhantomSpec::default()).unwrap());
    let tf = TransferFunction::default();
    let scene = SceneState::with_volume(grid.clone());
    let (lo, hi) = grid.bounds();
    let z = 0.5 * (lo.z + hi.z);
    let eye = Vec3::new(0.3, 1.2, z + 0.1);
    let cam = Camera::new(Pose::looking_at(eye, Vec3::new(0.0, 0.0, z), Vec3::z()), 50.0, 96, 72).unwrap();
    let s = 0.5 * grid.min_spacing();
    let a = render_frame(&scene, &cam, &tf, &RenderOptions { step: Some(s), ..Default::default() });
    let b = render_frame(&scene, &cam, &tf, &RenderOptions { step: Some(s / 2.0), ..Default::default() });
    let worst = (0..72)
        .flat_map(|y| (0..96).map(move |x| (x, y)))
        .map(|(x, y)| (a.luminance(x, y) - b.luminance(x, y)).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 2.0, "worst luminance difference {worst}/255");
}

#[test]
fn lens_effect_stays_inside_its_footprint() {
    let (_, grid) = grids(32);
    let tf = TransferFunction::default();
    let (cam, pin) = look(Vec3::new(0.5, -1.5, 0.5), Vec3::new(0.5, 0.5, 0.5), 64, 48);
    let plain = SceneState::with_volume(grid.clone());
    let mut lensed = plain.clone();
    let lens = Lens::new(
        LensId(1),
        Pose::looking_at(Vec3::new(0.55, -0.6, 0.45), Vec3::new(0.55, 0.5, 0.45), Vec3::z()),
        0.2,
        EffectDescriptor::derivative(),
        EffectDescriptor::plain(),
    )
    .unwrap();
    lensed.upsert_lens(lens.clone());
    let opts = RenderOptions { workers: 1, ..Default::default() };
    let a = render_frame(&plain, &cam, &tf, &opts);
    let b = render_frame(&lensed, &cam, &tf, &opts);
    let d = disc(&lens);
    let (mut inside, mut changed_inside) = (0, 0);
    for y in 0..48 {
        for x in 0..64 {
            match oracle::disc_hit(&d, pin.eye, pin.ray(x, y)) {
                None => assert_eq!(a.pixel(x, y), b.pixel(x, y), "pixel {x},{y} outside the lens"),
                Some(_) => {
                    inside += 1;
                    changed_inside += (a.pixel(x, y) != b.pixel(x, y)) as usize;
                }
            }
        }
    }
    assert!(inside > 100 && changed_inside > inside / 2);
}

#[test]
fn rings_sit_on_the_projected_rim_and_nearer_ring_wins() {
    let mut scene = SceneState::default();
    let (cam, pin) = look(Vec3::new(0.0, -2.0, 0.0), Vec3::zeros(), 128, 128);
    let facing = |c: Vec3| Pose::looking_at(c, c + Vec3::y(), Vec3::z());
    let mut near = Lens::new(LensId(1), facing(Vec3::new(0.15, -0.5, 0.0)), 0.3, EffectDescriptor::mip(), EffectDescriptor::plain()).unwrap();
    near.ring_width = 0.04;
    let mut far = Lens::new(LensId(2), facing(Vec3::new(-0.2, 0.5, 0.0)), 0.5, EffectDescriptor::mip(), EffectDescriptor::plain()).unwrap();
    far.ring_width = 0.06;
    scene.upsert_lens(near.clone());
    scene.upsert_lens(far.clone());
    scene.held = Some(LensId(1));
    let fb = render_frame(&scene, &cam, &TransferFunction::default(), &RenderOptions { workers: 1, ..Default::default() });
    let rgb = |x, y| {
        let p = fb.pixel(x, y);
        [p[0], p[1], p[2]]
    };

    // Every rim point projects into a pixel painted in its lens's color.
    for (lens, color) in [(&near, GRABBED_RING), (&far, IDLE_RING)] {
        for k in 0..64 {
            let a = k as f64 / 64.0 * TAU;
            let mid = lens.radius() - 0.5 * lens.ring_width;
            let p = lens.center() + Vec3::new(mid * a.cos(), 0.0, mid * a.sin());
            let (u, v) = cam.project(&p).unwrap();
            let (x, y) = (u as u32, v as u32);
            let near_ring = oracle::disc_hit(&disc(&near), pin.eye, pin.ray(x, y)).is_some_and(|(t, _)| {
                let q = oracle::add(pin.eye, oracle::scale(pin.ray(x, y), t));
                oracle::norm(oracle::sub(q, v3(&near.center()))) >= near.radius() - near.ring_width
            });
            if lens.id == far.id && near_ring {
                continue;
            }
            assert_eq!(rgb(x, y), color, "angle {a} at pixel {x},{y}");
        }
    }

    // Conversely, painted pixels are exactly those whose ray crosses an annulus,
    // and the nearer crossing decides the color.
    for y in 0..128 {
        for x in 0..128 {
            let d = pin.ray(x, y);
            let crossing = |l: &Lens| {
                let (t, _) = oracle::disc_hit(&disc(l), pin.eye, d)?;
                let rho = oracle::norm(oracle::sub(oracle::add(pin.eye, oracle::scale(d, t)), v3(&l.center())));
                (rho >= l.radius() - l.ring_width - 1e-9).then_some((t, rho))
            };
            // Pixels within rounding distance of an annulus edge are not judged.
            let edge = [&near, &far].iter().any(|l| {
                oracle::disc_hit(&disc(l), pin.eye, d).is_some_and(|(t, _)| {
                    let rho = oracle::norm(oracle::sub(oracle::add(pin.eye, oracle::scale(d, t)), v3(&l.center())));
                    (rho - l.radius()).abs() < 1e-9 || (rho - (l.radius() - l.ring_width)).abs() < 1e-9
                })
            });
            if edge {
                continue;
            }
            let expected = match (crossing(&near), crossing(&far)) {
                (Some((tn, _)), Some((tf, _))) => Some(if tn < tf { GRABBED_RING } else { IDLE_RING }),
                (Some(_), None) => Some(GRABBED_RING),
                (None, Some(_)) => {
                    // A far ring seen through the near disc's interior is still painted:
                    // rings are not occluded by other discs.
                    Some(IDLE_RING)
                }
                (None, None) => None,
            };
            match expected {
                Some(c) => assert_eq!(rgb(x, y), c, "pixel {x},{y}"),
                None => assert_eq!(rgb(x, y), scene.background, "pixel {x},{y}"),
            }
        }
    }
}
