//! The event reducer: the only code that mutates a [`SceneState`].
//!
//! Each input frame runs through a fixed sequence of sub-steps:
//!
//! 1. proxy dismissal (menu button on the hand holding the proxy),
//! 2. menu toggle (menu button on the non-dominant hand),
//! 3. menu interaction while the menu is visible,
//! 4. ring controls, then raycast selection for a remaining dominant trigger press,
//! 5. grab, move, snap, two-handed resize and release,
//! 6. proxy binding upkeep,
//! 7. bookkeeping (held lens, hand levels, clock, finished animations).
//!
//! Invalid gestures never fail; they leave the scene alone and emit a
//! `reject` feedback event instead.

pub mod gestures;
pub mod input;
pub mod menu;
pub mod proxy;

use serde::{Deserialize, Serialize};

use crate::config::InteractionConfig;
use crate::effect::EffectDescriptor;
use crate::geom::Pose;
use crate::lens::{combine, split, Lens, LensId};
use crate::scene::{Animation, AnimationKind, SceneState};

use gestures::{
    grab_test, grabbed_update, raycast_select, resize_update, ring_control_step, snap_check,
    GrabAttachment, RingCommand,
};
use input::{Edges, Hand, InputEvent};
use menu::{menu_step, MenuCommand, MenuInput, MenuRegion};
use proxy::{apply_to_remote, dismiss_proxy, spawn_proxy, ProxyDelta};

#[derive(Clone, Debug, PartialEq)]
pub enum ModeKind {
    Idle,
    Grabbing {
        lens: LensId,
        hand: Hand,
        attachment: GrabAttachment,
    },
    TwoHandResize {
        lens: LensId,
        d0: f64,
        r0: f64,
    },
    MenuOpen {
        page: usize,
    },
    ProxyActive {
        proxy: LensId,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InteractionMode {
    pub kind: ModeKind,
    pub menu_visible: bool,
}

impl Default for InteractionMode {
    fn default() -> Self {
        Self {
            kind: ModeKind::Idle,
            menu_visible: false,
        }
    }
}

impl InteractionMode {
    pub fn name(&self) -> &'static str {
        match self.kind {
            ModeKind::Idle => "idle",
            ModeKind::Grabbing { .. } => "grabbing",
            ModeKind::TwoHandResize { .. } => "two_hand_resize",
            ModeKind::MenuOpen { .. } => "menu_open",
            ModeKind::ProxyActive { .. } => "proxy_active",
        }
    }

    /// The lens held by one or both hands.
    pub fn held(&self) -> Option<LensId> {
        match self.kind {
            ModeKind::Grabbing { lens, .. } | ModeKind::TwoHandResize { lens, .. } => Some(lens),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    Haptic,
    Audio,
    Visual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackTarget {
    Hand(Hand),
    Lens(LensId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeedbackCode {
    Grab,
    Release,
    Snap,
    Reject,
    MenuPick,
    MenuToggle,
    PageTurn,
    Remove,
    RingControl,
    Split,
    ProxySpawn,
    ProxyDismiss,
    BindingDissolved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub kind: FeedbackKind,
    pub target: FeedbackTarget,
    pub code: FeedbackCode,
}

impl FeedbackEvent {
    fn hand(kind: FeedbackKind, hand: Hand, code: FeedbackCode) -> Self {
        Self {
            kind,
            target: FeedbackTarget::Hand(hand),
            code,
        }
    }

    fn lens(kind: FeedbackKind, lens: LensId, code: FeedbackCode) -> Self {
        Self {
            kind,
            target: FeedbackTarget::Lens(lens),
            code,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Reducer {
    pub config: InteractionConfig,
}

/// Convenience wrapper around [`Reducer::step`].
pub fn step(
    scene: &SceneState,
    mode: &InteractionMode,
    event: &InputEvent,
    config: &InteractionConfig,
) -> (SceneState, InteractionMode, Vec<FeedbackEvent>) {
    Reducer {
        config: config.clone(),
    }
    .step(scene, mode, event)
}

impl Reducer {
    pub fn new(config: InteractionConfig) -> Self {
        Self { config }
    }

    pub fn step(
        &self,
        scene: &SceneState,
        mode: &InteractionMode,
        event: &InputEvent,
    ) -> (SceneState, InteractionMode, Vec<FeedbackEvent>) {
        let stale = scene.clock_ms.is_some_and(|c| event.timestamp <= c);
        if stale || !event.is_finite() {
            let fb = FeedbackEvent::hand(FeedbackKind::Visual, Hand::Dominant, FeedbackCode::Reject);
            return (scene.clone(), mode.clone(), vec![fb]);
        }
        let mut f = Frame {
            cfg: &self.config,
            s: scene.clone(),
            m: mode.clone(),
            ev: event,
            edges: Edges::between(&scene.hands, event),
            fb: Vec::new(),
            trigger_used: false,
            menu_used: [false; 2],
            remove_on_release: false,
        };
        f.s.head = event.head;
        f.s.clock_ms = Some(event.timestamp);
        f.proxy_dismiss();
        f.menu_toggle();
        f.menu();
        f.dominant_trigger();
        f.grab();
        f.binding_upkeep();
        f.finish();
        (f.s, f.m, f.fb)
    }
}

/// Working state for one reducer step.
struct Frame<'a> {
    cfg: &'a InteractionConfig,
    s: SceneState,
    m: InteractionMode,
    ev: &'a InputEvent,
    edges: Edges,
    fb: Vec<FeedbackEvent>,
    trigger_used: bool,
    menu_used: [bool; 2],
    remove_on_release: bool,
}

impl Frame<'_> {
    fn pose(&self, h: Hand) -> Pose {
        self.ev.hand(h).pose
    }

    fn reject(&mut self, h: Hand) {
        self.fb
            .push(FeedbackEvent::hand(FeedbackKind::Haptic, h, FeedbackCode::Reject));
    }

    fn proxy_dismiss(&mut self) {
        let Some(held) = self.m.held() else { return };
        if !self.s.is_proxy(held) {
            return;
        }
        let hands: Vec<Hand> = match self.m.kind {
            ModeKind::Grabbing { hand, .. } => vec![hand],
            _ => Hand::BOTH.to_vec(),
        };
        if let Some(&h) = hands.iter().find(|h| self.edges.menu_pressed(**h)) {
            self.s = dismiss_proxy(&self.s);
            self.m.kind = ModeKind::Idle;
            self.menu_used[h.index()] = true;
            self.fb
                .push(FeedbackEvent::hand(FeedbackKind::Audio, h, FeedbackCode::ProxyDismiss));
        }
    }

    fn menu_toggle(&mut self) {
        let h = Hand::NonDominant;
        if self.edges.menu_pressed(h) && !self.menu_used[h.index()] {
            self.m.menu_visible = !self.m.menu_visible;
            self.fb
                .push(FeedbackEvent::hand(FeedbackKind::Visual, h, FeedbackCode::MenuToggle));
        }
    }

    fn menu(&mut self) {
        if !self.m.menu_visible {
            return;
        }
        let released_lens_center = match self.m.kind {
            ModeKind::Grabbing { lens, hand, .. } if self.edges.grab_released(hand) => {
                self.s.lens(lens).map(|l| l.center())
            }
            _ => None,
        };
        let pressed = self.edges.trigger_pressed(Hand::Dominant);
        let input = MenuInput {
            non_dominant: self.pose(Hand::NonDominant),
            dominant: self.pose(Hand::Dominant),
            dominant_trigger_pressed: pressed,
            released_lens_center,
        };
        let (menu, cmd) = menu_step(&self.s.menu, &input, self.cfg);
        self.s.menu = menu;
        if pressed {
            let region = self.s.menu.region(&input.dominant.position, self.cfg);
            self.trigger_used = region != MenuRegion::Outside;
        }
        match cmd {
            Some(MenuCommand::CreateLens(t)) => {
                let id = self.s.next_lens_id();
                match Lens::new(id, self.s.menu.anchor, self.cfg.new_lens_radius, t.front, t.back) {
                    Ok(lens) => {
                        self.s.upsert_lens(lens);
                        self.s.animations.push(Animation {
                            lens: id,
                            kind: AnimationKind::Materialize,
                            start_ms: self.ev.timestamp,
                            duration_ms: self.cfg.animation_ms,
                        });
                        self.fb.push(FeedbackEvent::hand(
                            FeedbackKind::Haptic,
                            Hand::Dominant,
                            FeedbackCode::MenuPick,
                        ));
                        self.fb
                            .push(FeedbackEvent::lens(FeedbackKind::Visual, id, FeedbackCode::MenuPick));
                    }
                    Err(_) => self.reject(Hand::Dominant),
                }
            }
            Some(MenuCommand::NextPage) => self.fb.push(FeedbackEvent::hand(
                FeedbackKind::Haptic,
                Hand::Dominant,
                FeedbackCode::PageTurn,
            )),
            Some(MenuCommand::RemoveHeldLens) => self.remove_on_release = true,
            None => {}
        }
    }

    fn dominant_trigger(&mut self) {
        let h = Hand::Dominant;
        if !self.edges.trigger_pressed(h) || self.trigger_used {
            return;
        }
        let hand = self.pose(h);
        let near = self
            .s
            .lenses
            .iter()
            .map(|l| (l.distance_to_rim(&hand.position), l.id))
            .filter(|(d, _)| *d <= self.cfg.ring_control_proximity)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id);
        if let Some(id) = near {
            let lens = self.s.lens(id).expect("listed lens");
            if let Some(cmd) = ring_control_step(lens, &hand, true, self.cfg) {
                let target = match self.s.proxy {
                    Some(b) if b.proxy == id => b.remote,
                    _ => id,
                };
                self.apply_ring(target, cmd);
                return;
            }
        }

        let candidates: Vec<Lens> = self
            .s
            .lenses
            .iter()
            .filter(|l| !self.s.is_proxy(l.id))
            .cloned()
            .collect();
        let Some(id) = raycast_select(&candidates, &hand, self.cfg) else {
            return;
        };
        let lens = self.s.lens(id).expect("listed lens");
        if lens.distance_to_disc(&hand.position) <= self.cfg.grab_distance {
            return;
        }
        match spawn_proxy(&self.s, id, &self.ev.head, self.cfg) {
            Ok((next, b)) => {
                self.s = next;
                self.fb.push(FeedbackEvent::lens(
                    FeedbackKind::Visual,
                    b.proxy,
                    FeedbackCode::ProxySpawn,
                ));
            }
            Err(_) => self.reject(h),
        }
    }

    fn apply_ring(&mut self, target: LensId, cmd: RingCommand) {
        let cfg = self.cfg;
        let Some(lens) = self.s.lens(target).cloned() else {
            return self.reject(Hand::Dominant);
        };
        let cycle = |current: &EffectDescriptor, s: &SceneState| {
            let mut options = vec![EffectDescriptor::plain()];
            options.extend(s.menu.templates.iter().map(|t| t.front.clone()));
            let pos = options.iter().position(|e| e == current).or_else(|| {
                options.iter().position(|e| {
                    e.field_transform() == current.field_transform()
                        && e.integrator() == current.integrator()
                })
            });
            options[pos.map_or(0, |i| (i + 1) % options.len())].clone()
        };
        let mut next = lens.clone();
        match cmd {
            RingCommand::CycleFrontEffect | RingCommand::CycleBackEffect if lens.is_combined() => {
                return self.reject(Hand::Dominant);
            }
            RingCommand::CycleFrontEffect => next.front_effect = cycle(&lens.front_effect, &self.s),
            RingCommand::CycleBackEffect => next.back_effect = cycle(&lens.back_effect, &self.s),
            RingCommand::AdjustParam { name, delta } => {
                let effect = match next.stack_mut().last_mut() {
                    Some(e) => e,
                    None => &mut next.front_effect,
                };
                let Some(v) = effect.param(&name) else {
                    return self.reject(Hand::Dominant);
                };
                let mut v = v + delta;
                if v > cfg.param_max + 1e-9 {
                    v = cfg.param_min;
                }
                if effect.set_param(&name, v).is_err() {
                    return self.reject(Hand::Dominant);
                }
            }
            RingCommand::Split => {
                let new_id = self.s.next_lens_id();
                match split(&lens, new_id, cfg.split_offset) {
                    Ok((a, b)) => {
                        self.s.upsert_lens(a);
                        self.s.upsert_lens(b);
                        self.fb
                            .push(FeedbackEvent::lens(FeedbackKind::Audio, target, FeedbackCode::Split));
                    }
                    Err(_) => self.reject(Hand::Dominant),
                }
                return;
            }
        }
        self.s.upsert_lens(next);
        self.fb.push(FeedbackEvent::lens(
            FeedbackKind::Visual,
            target,
            FeedbackCode::RingControl,
        ));
    }

    /// Removes a lens, taking a bound proxy pair apart as needed.
    fn remove(&mut self, id: LensId) {
        if self.s.is_proxy(id) {
            self.s = dismiss_proxy(&self.s);
        } else {
            self.s.remove_lens(id);
        }
        self.fb
            .push(FeedbackEvent::lens(FeedbackKind::Audio, id, FeedbackCode::Remove));
    }

    /// Moves a held lens to `pose`, forwarding the motion to a bound remote.
    fn move_held(&mut self, id: LensId, pose: Pose) {
        let Some(before) = self.s.lens(id).map(|l| l.pose) else { return };
        if let Some(l) = self.s.lens_mut(id) {
            l.pose = pose;
        }
        if let Some(b) = self.s.proxy.filter(|b| b.proxy == id) {
            if let Some(remote) = self.s.lens(b.remote) {
                let moved = apply_to_remote(remote, b.gain, &ProxyDelta::motion(before, pose));
                self.s.upsert_lens(moved);
            }
        }
    }

    fn grab(&mut self) {
        match self.m.kind.clone() {
            ModeKind::Grabbing {
                lens,
                hand,
                attachment,
            } => {
                if self.s.lens(lens).is_none() {
                    self.m.kind = ModeKind::Idle;
                } else if !self.ev.hand(hand).grab_active {
                    if self.remove_on_release {
                        self.remove(lens);
                    } else {
                        self.fb
                            .push(FeedbackEvent::hand(FeedbackKind::Haptic, hand, FeedbackCode::Release));
                    }
                    self.m.kind = ModeKind::Idle;
                } else {
                    let moved = grabbed_update(self.s.lens(lens).expect("checked"), &attachment, &self.pose(hand));
                    self.move_held(lens, moved.pose);
                    self.try_snap(lens, hand);
                }
            }
            ModeKind::TwoHandResize { lens, d0, r0 } => {
                let active: Vec<Hand> = Hand::BOTH
                    .into_iter()
                    .filter(|h| self.ev.hand(*h).grab_active)
                    .collect();
                if self.s.lens(lens).is_none() {
                    self.m.kind = ModeKind::Idle;
                } else if active.len() == 2 {
                    let d = (self.pose(Hand::Dominant).position
                        - self.pose(Hand::NonDominant).position)
                        .norm();
                    let r = resize_update(d0, r0, d, self.cfg).unwrap_or(r0);
                    let current = self.s.lens(lens).expect("checked").radius();
                    if let Some(l) = self.s.lens_mut(lens) {
                        l.set_radius(r);
                    }
                    let applied = self.s.lens(lens).expect("checked").radius();
                    if let Some(b) = self.s.proxy.filter(|b| b.proxy == lens) {
                        if applied != current {
                            if let Some(remote) = self.s.lens(b.remote) {
                                let scaled = apply_to_remote(
                                    remote,
                                    b.gain,
                                    &ProxyDelta::resize(applied / current),
                                );
                                self.s.upsert_lens(scaled);
                            }
                        }
                    }
                } else if let Some(&h) = active.first() {
                    let pose = self.s.lens(lens).expect("checked").pose;
                    self.m.kind = ModeKind::Grabbing {
                        lens,
                        hand: h,
                        attachment: GrabAttachment::capture(&self.pose(h), &pose),
                    };
                } else {
                    self.m.kind = ModeKind::Idle;
                    for h in Hand::BOTH {
                        self.fb
                            .push(FeedbackEvent::hand(FeedbackKind::Haptic, h, FeedbackCode::Release));
                    }
                }
            }
            _ => {}
        }

        for h in Hand::BOTH {
            if !self.edges.grab_pressed(h) {
                continue;
            }
            let hand = self.pose(h);
            match self.m.kind {
                ModeKind::Grabbing { lens, hand: g, .. } if g != h => {
                    if grab_test(&self.s, &hand, self.cfg) != Some(lens) {
                        continue;
                    }
                    let d0 = (hand.position - self.pose(g).position).norm();
                    let r0 = self.s.lens(lens).expect("held lens exists").radius();
                    if resize_update(d0, r0, d0, self.cfg).is_some() {
                        self.m.kind = ModeKind::TwoHandResize { lens, d0, r0 };
                        self.fb
                            .push(FeedbackEvent::hand(FeedbackKind::Haptic, h, FeedbackCode::Grab));
                    } else {
                        self.reject(h);
                    }
                }
                ModeKind::Grabbing { .. } | ModeKind::TwoHandResize { .. } => {}
                _ => {
                    if let Some(id) = grab_test(&self.s, &hand, self.cfg) {
                        let pose = self.s.lens(id).expect("grab target exists").pose;
                        self.m.kind = ModeKind::Grabbing {
                            lens: id,
                            hand: h,
                            attachment: GrabAttachment::capture(&hand, &pose),
                        };
                        self.fb
                            .push(FeedbackEvent::hand(FeedbackKind::Haptic, h, FeedbackCode::Grab));
                    }
                }
            }
        }
    }

    fn try_snap(&mut self, held: LensId, hand: Hand) {
        let Some(partner) = snap_check(&self.s, held, self.cfg) else { return };
        let a = self.s.lens(held).expect("held lens exists");
        let b = self.s.lens(partner).expect("snap partner exists");
        match combine(a, b, &self.ev.head.position, &self.cfg.snap) {
            Ok(c) => {
                self.s.remove_lens(partner);
                self.s.upsert_lens(c);
                self.fb
                    .push(FeedbackEvent::hand(FeedbackKind::Haptic, hand, FeedbackCode::Snap));
                self.fb
                    .push(FeedbackEvent::lens(FeedbackKind::Audio, held, FeedbackCode::Snap));
            }
            Err(_) => self.reject(hand),
        }
    }

    fn binding_upkeep(&mut self) {
        let Some(b) = self.s.proxy else { return };
        match self.s.lens(b.remote).cloned() {
            Some(remote) if self.s.lens(b.proxy).is_some() => {
                let proxy = self.s.lens_mut(b.proxy).expect("checked");
                proxy.copy_effects_from(&remote);
            }
            _ => {
                self.s = dismiss_proxy(&self.s);
                self.fb.push(FeedbackEvent::lens(
                    FeedbackKind::Visual,
                    b.remote,
                    FeedbackCode::BindingDissolved,
                ));
            }
        }
    }

    fn finish(&mut self) {
        if let Some(id) = self.m.held() {
            if self.s.lens(id).is_none() {
                self.m.kind = ModeKind::Idle;
            }
        }
        if self.m.held().is_none() {
            self.m.kind = match (self.s.proxy, self.m.menu_visible) {
                (Some(b), _) => ModeKind::ProxyActive { proxy: b.proxy },
                (None, true) => ModeKind::MenuOpen {
                    page: self.s.menu.page,
                },
                (None, false) => ModeKind::Idle,
            };
        }
        self.s.held = self.m.held();
        self.s.hands = self.ev.hands;
        let now = self.ev.timestamp;
        self.s.animations.retain(|a| a.progress(now) < 1.0);
    }
}

/// Checks every structural invariant of a scene and its mode.
pub fn check_invariants(scene: &SceneState, mode: &InteractionMode) -> Result<(), String> {
    for w in scene.lenses.windows(2) {
        if w[0].id >= w[1].id {
            return Err(format!("lens ids not strictly increasing at {}", w[1].id));
        }
    }
    for l in &scene.lenses {
        l.validate().map_err(|e| format!("lens {}: {e}", l.id))?;
        if !l.pose.is_finite() {
            return Err(format!("lens {} has a non-finite pose", l.id));
        }
    }
    if let Some(b) = scene.proxy {
        if scene.lens(b.proxy).is_none() || scene.lens(b.remote).is_none() {
            return Err("proxy binding refers to a missing lens".into());
        }
        if b.proxy == b.remote || !(b.gain > 0.0) {
            return Err("degenerate proxy binding".into());
        }
    }
    if scene.held != mode.held() {
        return Err("held lens out of sync with the mode".into());
    }
    if let Some(id) = mode.held() {
        if scene.lens(id).is_none() {
            return Err(format!("mode holds missing lens {id}"));
        }
    }
    if let ModeKind::TwoHandResize { .. } = mode.kind {
        if !(scene.hands.dominant.grab_active && scene.hands.non_dominant.grab_active) {
            return Err("two-handed resize without both grabs".into());
        }
    }
    if let ModeKind::Grabbing { hand, .. } = mode.kind {
        if !scene.hands.get(hand).grab_active {
            return Err("grabbing hand is open".into());
        }
    }
    if scene.menu.page >= scene.menu.page_count() {
        return Err("menu page out of range".into());
    }
    Ok(())
}
