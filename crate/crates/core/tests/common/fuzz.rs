//! Random input streams for the reducer. Hands are steered toward the places
//! where something happens (discs, ring widgets, menu sections, snap
//! targets), and now and then the stream is corrupted with stale timestamps
//! or non-finite poses.

use std::collections::BTreeMap;

use loupe_core::config::InteractionConfig;
use loupe_core::geom::{Pose, Vec3};
use loupe_core::interaction::gestures::ring_widget_position;
use loupe_core::interaction::input::{ButtonEdge, Hand, Hands, InputEvent};
use loupe_core::interaction::{check_invariants, FeedbackCode, InteractionMode, ModeKind, Reducer};
use loupe_core::scene::SceneState;
use nalgebra::UnitQuaternion;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Default)]
pub struct Coverage {
    pub steps: usize,
    pub modes: BTreeMap<&'static str, usize>,
    pub feedback: BTreeMap<String, usize>,
    pub max_lenses: usize,
}

pub struct Fuzzer {
    rng: ChaCha8Rng,
    reducer: Reducer,
    pub scene: SceneState,
    pub mode: InteractionMode,
    hands: Hands,
    head: Pose,
    clock: u64,
    targets: [Pose; 2],
}

impl Fuzzer {
    pub fn new(seed: u64) -> Self {
        let head = Pose::looking_at(Vec3::new(0.0, 1.6, 0.0), Vec3::new(0.0, 1.0, -1.0), Vec3::y());
        let mut hands = Hands::default();
        hands.dominant.pose = Pose::from_translation(Vec3::new(0.2, 1.2, -0.3));
        hands.non_dominant.pose = Pose::from_translation(Vec3::new(-0.2, 1.2, -0.3));
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            reducer: Reducer::new(InteractionConfig::default()),
            scene: SceneState::default(),
            mode: InteractionMode::default(),
            targets: [hands.dominant.pose, hands.non_dominant.pose],
            hands,
            head,
            clock: 0,
        }
    }

    fn rotation(&mut self, max_angle: f64) -> UnitQuaternion<f64> {
        let axis = Vec3::new(
            self.rng.random_range(-1.0..1.0),
            self.rng.random_range(-1.0..1.0),
            self.rng.random_range(-1.0..1.0),
        );
        let angle = self.rng.random_range(-max_angle..max_angle);
        UnitQuaternion::from_scaled_axis(axis.try_normalize(1e-9).unwrap_or(Vec3::x()) * angle)
    }

    fn jitter(&mut self, s: f64) -> Vec3 {
        Vec3::new(
            self.rng.random_range(-s..s),
            self.rng.random_range(-s..s),
            self.rng.random_range(-s..s),
        )
    }

    /// A place worth sending `hand` to.
    fn pick_target(&mut self, hand: Hand) -> Pose {
        let current = self.hands.get(hand).pose;
        let lenses = self.scene.lenses.clone();
        let cfg = self.reducer.config.clone();
        let choice = self.rng.random_range(0..10);
        let lens = (!lenses.is_empty()).then(|| lenses[self.rng.random_range(0..lenses.len())].clone());
        match (choice, lens) {
            // Onto a disc, ready to grab.
            (0..=2, Some(l)) => {
                let p = l.center() + self.jitter(0.5 * l.radius());
                Pose::from_parts(p, current.orientation)
            }
            // A ring widget.
            (3, Some(l)) => {
                let slot = self.rng.random_range(0..4);
                Pose::from_parts(ring_widget_position(&l, slot) + self.jitter(0.01), current.orientation)
            }
            // Aim at a lens from where the hand is.
            (4, Some(l)) if current.position != l.center() => {
                Pose::looking_at(current.position, l.center(), Vec3::y())
            }
            // Move a held lens exactly onto another one.
            (5, Some(l)) => match self.mode.kind.clone() {
                ModeKind::Grabbing { hand: g, attachment, .. } if g == hand => {
                    let mut target = l.pose;
                    if self.rng.random_bool(0.5) {
                        target.position += self.jitter(0.02 * l.radius());
                    }
                    target.compose(&attachment.offset.inverse())
                }
                _ => Pose::from_parts(l.center(), current.orientation),
            },
            // A menu section, or the hub.
            (6, _) if hand == Hand::Dominant && self.mode.menu_visible => {
                let n = self.scene.menu.page_templates().len();
                let p = if self.rng.random_bool(0.2) {
                    self.scene.menu.anchor.position
                } else {
                    self.scene.menu.section_centroid(self.rng.random_range(0..n.max(1)), &cfg)
                };
                Pose::from_parts(p, current.orientation)
            }
            (7, _) => Pose::from_parts(current.position + self.jitter(0.2), self.rotation(0.8) * current.orientation),
            _ => Pose::from_parts(
                Vec3::new(
                    self.rng.random_range(-0.8..0.8),
                    self.rng.random_range(0.6..2.0),
                    self.rng.random_range(-1.5..0.5),
                ),
                self.rotation(std::f64::consts::PI),
            ),
        }
    }

    fn next_event(&mut self) -> InputEvent {
        for h in Hand::BOTH {
            if self.rng.random_bool(0.08) {
                self.targets[h.index()] = self.pick_target(h);
            }
            let target = self.targets[h.index()];
            let state = self.hands.get_mut(h);
            // Either jump or ease toward the target.
            state.pose = if self.rng.random_bool(0.3) {
                target
            } else {
                let p = state.pose.position.lerp(&target.position, 0.5);
                let q = state.pose.orientation.try_slerp(&target.orientation, 0.5, 1e-9).unwrap_or(target.orientation);
                Pose::from_parts(p, q)
            };
            state.menu_button_edge = ButtonEdge::None;
        }
        for h in Hand::BOTH {
            let grab_flip = self.rng.random_bool(0.06);
            let trigger_flip = self.rng.random_bool(0.1);
            let menu = self.rng.random_bool(0.015);
            let state = self.hands.get_mut(h);
            state.grab_active ^= grab_flip;
            state.trigger_active ^= trigger_flip;
            if menu {
                state.menu_button_edge = ButtonEdge::Pressed;
            }
        }
        if self.rng.random_bool(0.01) {
            let r = self.rotation(0.3);
            self.head = Pose::from_parts(self.head.position + self.jitter(0.05), r * self.head.orientation);
        }
        self.clock += self.rng.random_range(1..40);
        let mut ev = InputEvent {
            timestamp: self.clock,
            head: self.head,
            hands: self.hands,
        };
        if self.rng.random_bool(0.002) {
            ev.timestamp = self.clock.saturating_sub(self.rng.random_range(0..50));
        }
        if self.rng.random_bool(0.001) {
            ev.hands.dominant.pose.position.x = f64::NAN;
        }
        ev
    }

    /// Runs `steps` events, checking every invariant after each one.
    pub fn run(&mut self, steps: usize) -> Result<Coverage, String> {
        let mut cov = Coverage::default();
        for i in 0..steps {
            let ev = self.next_event();
            let (s, m, fb) = self.reducer.step(&self.scene, &self.mode, &ev);
            check_invariants(&s, &m).map_err(|e| format!("step {i}: {e}"))?;
            if s.lenses.len() > 24 {
                // Keep scenes small enough that hands keep finding lenses.
                let mut trimmed = s.clone();
                let keep: Vec<_> = trimmed
                    .lenses
                    .iter()
                    .filter(|l| Some(l.id) != m.held() && trimmed.proxy.is_none_or(|b| b.proxy != l.id && b.remote != l.id))
                    .map(|l| l.id)
                    .take(12)
                    .collect();
                for id in keep {
                    trimmed.remove_lens(id);
                }
                self.scene = trimmed;
            } else {
                self.scene = s;
            }
            self.mode = m;
            check_invariants(&self.scene, &self.mode).map_err(|e| format!("step {i} (trimmed): {e}"))?;
            cov.steps += 1;
            *cov.modes.entry(self.mode.name()).or_default() += 1;
            for f in fb {
                *cov.feedback.entry(code_name(f.code)).or_default() += 1;
            }
            cov.max_lenses = cov.max_lenses.max(self.scene.lenses.len());
        }
        Ok(cov)
    }
}

fn code_name(code: FeedbackCode) -> String {
    serde_json::to_value(code).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}
