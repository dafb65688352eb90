//! Regenerates the scripts in `sessions/`.
//!
//!     cargo run -p loupe-core --example bundled_sessions -- sessions

use std::path::{Path, PathBuf};

use loupe_core::config::InteractionConfig;
use loupe_core::effect::EffectDescriptor;
use loupe_core::geom::{Pose, Vec3};
use loupe_core::interaction::gestures::ring_widget_position;
use loupe_core::interaction::input::Hand;
use loupe_core::interaction::menu::{anchor_for, MenuModel};
use loupe_core::lens::{Lens, LensId};
use loupe_core::phantom::PhantomSpec;
use loupe_core::session::authoring::Rig;
use loupe_core::session::{CameraSettings, Header, SceneQuery};
use loupe_core::scene::{SceneFile, SceneState, VolumeSource};
use serde_json::json;

const D: Hand = Hand::Dominant;
const N: Hand = Hand::NonDominant;

/// Height of the wreck center in world coordinates.
fn wreck_z() -> f64 {
    let spec = PhantomSpec::default();
    let w = spec.wreck.expect("default phantom has a wreck");
    spec.origin()[2] + w.center[2] * spec.extent[2]
}

fn header(scene: SceneFile) -> Header {
    Header {
        scene: Some(SceneFile { head: head(), ..scene }),
        camera: CameraSettings {
            fov_deg: 40.0,
            width: 320,
            height: 240,
        },
        ..Header::default()
    }
}

/// The user looks horizontally at the wreck's depth, across the layers.
fn head() -> Pose {
    let z = wreck_z();
    Pose::looking_at(Vec3::new(0.0, 1.0, z), Vec3::new(0.0, 0.0, z), Vec3::z())
}

fn at(p: Vec3) -> Pose {
    Pose::from_parts(p, head().orientation)
}

fn section(rig: &Rig, index: usize) -> Vec3 {
    let cfg = InteractionConfig::default();
    let menu = MenuModel {
        anchor: anchor_for(&rig.hands.non_dominant.pose, &cfg),
        ..MenuModel::default()
    };
    menu.section_centroid(index, &cfg)
}

/// Opens the menu, picks `index` and leaves the dominant hand at the new
/// lens (the menu center).
fn create_lens(rig: &mut Rig, index: usize) {
    let target = section(rig, index);
    rig.move_hand_to(D, target, 10);
    rig.click(D);
    let anchor = anchor_for(&rig.hands.non_dominant.pose, &InteractionConfig::default());
    rig.move_hand_to(D, anchor.position, 6);
}

fn carry(rig: &mut Rig, to: Vec3, frames: usize) {
    rig.grab(D, true);
    rig.move_hand_to(D, to, frames);
    rig.grab(D, false);
}

fn wreck_session() -> loupe_core::session::SessionScript {
    let z = wreck_z();
    let mut rig = Rig::new(
        head(),
        at(Vec3::new(0.2, 0.55, z - 0.15)),
        at(Vec3::new(-0.25, 0.55, z - 0.1)),
    );
    rig.idle(10);
    rig.snapshot("plain");
    rig.press_menu(N);
    rig.idle(4);

    // Derivative lens, parked to the right.
    create_lens(&mut rig, 0);
    rig.assert(SceneQuery::LensCount, json!(1), 0.0);
    carry(&mut rig, Vec3::new(0.35, 0.6, z), 20);
    rig.idle(5);

    // MIP lens, placed on the line of sight to the wreck.
    create_lens(&mut rig, 1);
    rig.assert(SceneQuery::LensCount, json!(2), 0.0);
    let spot = Vec3::new(0.0, 0.5, z);
    carry(&mut rig, spot, 24);
    rig.press_menu(N);
    rig.idle(5);

    // Bring the derivative lens onto the MIP lens until they snap.
    rig.move_hand_to(D, Vec3::new(0.35, 0.6, z), 16);
    rig.grab(D, true);
    rig.move_hand_to(D, spot, 30);
    rig.assert(SceneQuery::LensCount, json!(1), 0.0);
    rig.assert(SceneQuery::LensStack { id: LensId(1) }, json!(["derivative", "mip"]), 0.0);

    // Second hand joins and stretches the combined lens to cover the wreck.
    rig.move_hand_to(N, spot + Vec3::new(-0.06, 0.0, 0.0), 16);
    rig.grab(N, true);
    rig.assert(SceneQuery::Mode, json!("two_hand_resize"), 0.0);
    rig.move_hand_to(N, spot + Vec3::new(-0.096, 0.0, 0.0), 20);
    rig.grab(N, false);
    rig.grab(D, false);
    rig.assert(SceneQuery::LensRadius { id: LensId(1) }, json!(0.16), 1e-9);

    rig.move_hand_to(D, Vec3::new(0.3, 0.7, z - 0.2), 12);
    rig.move_hand_to(N, Vec3::new(-0.3, 0.7, z - 0.2), 12);
    rig.idle(10);
    rig.assert(SceneQuery::Mode, json!("idle"), 0.0);
    rig.snapshot("reveal");

    rig.into_script(header(SceneFile::default()))
}

fn tour_session() -> loupe_core::session::SessionScript {
    let z = wreck_z();
    let far = Lens::new(
        LensId(10),
        Pose::from_parts(Vec3::new(0.3, -0.8, z + 0.1), head().orientation),
        0.3,
        EffectDescriptor::mip(),
        EffectDescriptor::plain(),
    )
    .expect("valid lens");
    let scene = SceneFile {
        source: Some(VolumeSource::DefaultPhantom),
        lenses: vec![far.clone()],
        ..SceneFile::default()
    };

    let mut tracked = SceneState::default();
    tracked.upsert_lens(far.clone());
    let mut rig = Rig::with_scene(
        head(),
        at(Vec3::new(0.2, 0.55, z - 0.15)),
        at(Vec3::new(-0.25, 0.55, z - 0.1)),
        tracked,
        InteractionConfig::default(),
    );
    rig.idle(3);
    rig.press_menu(N);
    rig.idle(2);

    // Two lenses from the menu; the held MIP lens absorbs the derivative lens.
    let spot = Vec3::new(0.25, 0.6, z + 0.05);
    create_lens(&mut rig, 0);
    carry(&mut rig, spot, 12);
    create_lens(&mut rig, 1);
    rig.grab(D, true);
    rig.move_hand_to(D, spot, 16);
    rig.grab(D, false);
    rig.assert(SceneQuery::LensStack { id: LensId(12) }, json!(["mip", "derivative"]), 0.0);
    rig.press_menu(N);
    rig.idle(2);
    rig.snapshot("combined");

    // Split with the 270° ring widget, then cycle the front effect at 0°.
    let widget = ring_widget_position(rig.lens(LensId(12)), 3);
    rig.move_hand_to(D, widget, 10);
    rig.click(D);
    rig.assert(SceneQuery::LensCount, json!(3), 0.0);
    rig.assert(SceneQuery::LensStack { id: LensId(12) }, json!(["mip"]), 0.0);
    rig.assert(SceneQuery::LensStack { id: LensId(13) }, json!(["derivative"]), 0.0);
    let widget = ring_widget_position(rig.lens(LensId(12)), 0);
    rig.move_hand_to(D, widget, 8);
    rig.click(D);
    // mip → contrast (emission-absorption with boosted opacity)
    rig.assert(SceneQuery::LensStack { id: LensId(12) }, json!(["dvr"]), 0.0);
    rig.snapshot("split");

    // Point at the far lens and steer it through its proxy; the menu button
    // of the holding hand dismisses the proxy.
    let aim = Vec3::new(0.1, 0.7, z - 0.1);
    rig.move_hand_to(D, aim, 6);
    rig.move_hand(D, Pose::looking_at(aim, far.center(), Vec3::z()), 10);
    rig.click(D);
    rig.assert(SceneQuery::Mode, json!("proxy_active"), 0.0);
    let proxy = rig.scene.proxy.expect("proxy spawned").proxy;
    rig.assert(SceneQuery::LensCount, json!(4), 0.0);
    let proxy_center = rig.lens(proxy).center();
    rig.move_hand(D, at(proxy_center), 10);
    rig.grab(D, true);
    rig.move_hand_to(D, proxy_center + Vec3::new(-0.03, 0.0, 0.02), 10);
    rig.snapshot("proxy");
    rig.press_menu(D);
    rig.grab(D, false);
    rig.idle(2);
    rig.assert(SceneQuery::LensCount, json!(3), 0.0);
    rig.assert(SceneQuery::Mode, json!("idle"), 0.0);
    rig.idle(5);

    rig.into_script(header(scene))
}

/// The state the wreck session ends in, for single-frame rendering.
fn wreck_scene() -> SceneFile {
    let z = wreck_z();
    let mut a = Lens::new(
        LensId(1),
        at(Vec3::new(0.0, 0.5, z)),
        0.16,
        EffectDescriptor::derivative(),
        EffectDescriptor::plain(),
    )
    .expect("valid lens");
    let mut b = a.clone();
    b.id = LensId(2);
    b.front_effect = EffectDescriptor::mip();
    a = loupe_core::lens::combine(&a, &b, &head().position, &Default::default()).expect("coincident lenses combine");
    SceneFile {
        source: Some(VolumeSource::DefaultPhantom),
        lenses: vec![a],
        head: head(),
        ..SceneFile::default()
    }
}

fn main() {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "sessions".into()).into();
    std::fs::create_dir_all(&dir).expect("output directory");
    write(&dir.join("wreck.session"), &wreck_session(), "Build a derivative+MIP lens and reveal the buried wreck.");
    write(&dir.join("tour.session"), &tour_session(), "Combine, split, and steer a far lens through its proxy.");
    let scene = serde_json::to_string_pretty(&wreck_scene()).expect("scene serializes");
    std::fs::write("scenes/wreck.json", scene + "\n").expect("write scene");
}

fn write(path: &Path, script: &loupe_core::session::SessionScript, about: &str) {
    let text = format!(
        "# {about}\n# Generated by `cargo run -p loupe-core --example bundled_sessions`.\n{}",
        script.to_text()
    );
    std::fs::write(path, text).expect("write script");
    println!("{} ({} events)", path.display(), script.events().count());
}
