//! Programmatic script authoring: a virtual rig of head and two hands that
//! emits one input frame per call. The rig runs the reducer alongside, so
//! an author can aim at lenses where they actually are.

use serde_json::Value;

use crate::config::InteractionConfig;
use crate::geom::{Pose, Vec3};
use crate::interaction::input::{ButtonEdge, Hand, HandState, Hands, InputEvent};
use crate::interaction::{InteractionMode, Reducer};
use crate::lens::{Lens, LensId};
use crate::scene::SceneState;

use super::{Assertion, Header, SceneQuery, SessionScript, TimelineRecord};

#[derive(Clone, Debug)]
pub struct Rig {
    pub clock_ms: u64,
    pub frame_ms: u64,
    pub head: Pose,
    pub hands: Hands,
    pub timeline: Vec<TimelineRecord>,
    pub scene: SceneState,
    pub mode: InteractionMode,
    reducer: Reducer,
}

impl Rig {
    pub fn new(head: Pose, dominant: Pose, non_dominant: Pose) -> Self {
        Self::with_scene(head, dominant, non_dominant, SceneState::default(), InteractionConfig::default())
    }

    /// Starts from `scene`; the volume is not needed for tracking.
    pub fn with_scene(
        head: Pose,
        dominant: Pose,
        non_dominant: Pose,
        scene: SceneState,
        config: InteractionConfig,
    ) -> Self {
        Self {
            clock_ms: 0,
            frame_ms: 20,
            head,
            hands: Hands {
                dominant: HandState::idle(Hand::Dominant, dominant),
                non_dominant: HandState::idle(Hand::NonDominant, non_dominant),
            },
            timeline: Vec::new(),
            scene,
            mode: InteractionMode::default(),
            reducer: Reducer::new(config),
        }
    }

    pub fn lens(&self, id: LensId) -> &Lens {
        self.scene.lens(id).unwrap_or_else(|| panic!("no lens {id} in the tracked scene"))
    }

    pub fn hand(&mut self, h: Hand) -> &mut HandState {
        self.hands.get_mut(h)
    }

    /// Emits the current state as one event. Menu-button edges last one frame.
    pub fn frame(&mut self) -> InputEvent {
        self.clock_ms += self.frame_ms;
        let e = InputEvent {
            timestamp: self.clock_ms,
            head: self.head,
            hands: self.hands,
        };
        self.timeline.push(TimelineRecord::Event(e));
        let (scene, mode, _) = self.reducer.step(&self.scene, &self.mode, &e);
        self.scene = scene;
        self.mode = mode;
        for h in Hand::BOTH {
            self.hand(h).menu_button_edge = ButtonEdge::None;
        }
        e
    }

    pub fn idle(&mut self, frames: usize) {
        for _ in 0..frames {
            self.frame();
        }
    }

    /// Moves a hand in a straight line to `target` over `frames` frames,
    /// slerping its orientation. The last frame lands exactly on `target`.
    pub fn move_hand(&mut self, h: Hand, target: Pose, frames: usize) {
        let start = self.hands.get(h).pose;
        for i in 1..=frames {
            let s = i as f64 / frames as f64;
            self.hand(h).pose = if i == frames {
                target
            } else {
                Pose::from_parts(
                    start.position.lerp(&target.position, s),
                    start
                        .orientation
                        .try_slerp(&target.orientation, s, 1e-9)
                        .unwrap_or(target.orientation),
                )
            };
            self.frame();
        }
    }

    pub fn move_hand_to(&mut self, h: Hand, p: Vec3, frames: usize) {
        let q = self.hands.get(h).pose.orientation;
        self.move_hand(h, Pose::from_parts(p, q), frames);
    }

    pub fn press_menu(&mut self, h: Hand) {
        self.hand(h).menu_button_edge = ButtonEdge::Pressed;
        self.frame();
    }

    /// Trigger down for one frame, then up.
    pub fn click(&mut self, h: Hand) {
        self.hand(h).trigger_active = true;
        self.frame();
        self.hand(h).trigger_active = false;
        self.frame();
    }

    pub fn grab(&mut self, h: Hand, active: bool) {
        self.hand(h).grab_active = active;
        self.frame();
    }

    pub fn snapshot(&mut self, name: &str) {
        self.timeline.push(TimelineRecord::Snapshot {
            name: name.to_string(),
        });
    }

    pub fn assert(&mut self, query: SceneQuery, expected: Value, tolerance: f64) {
        self.timeline.push(TimelineRecord::Assert(Assertion {
            query,
            expected,
            tolerance,
        }));
    }

    pub fn into_script(self, header: Header) -> SessionScript {
        SessionScript {
            header,
            timeline: self.timeline,
        }
    }
}
