//! Radial toolbox menu anchored above the non-dominant hand.
//!
//! The menu is a disc in the anchor's local XY plane. Each page holds six
//! 60° sections between the hub and the outer radius, numbered
//! counter-clockwise from local +X. A press on the hub turns the page.

use serde::{Deserialize, Serialize};

use crate::config::InteractionConfig;
use crate::effect::{EffectDescriptor, FieldTransform, Integrator};
use crate::geom::{Pose, Vec3};

pub const SECTIONS_PER_PAGE: usize = 6;
pub const SECTION_DEGREES: f64 = 360.0 / SECTIONS_PER_PAGE as f64;

/// A lens type offered by the menu.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LensTemplate {
    pub name: String,
    pub front: EffectDescriptor,
    pub back: EffectDescriptor,
}

impl LensTemplate {
    fn new(name: &str, front: EffectDescriptor) -> Self {
        Self {
            name: name.to_string(),
            front,
            back: EffectDescriptor::plain(),
        }
    }
}

/// The built-in effect registry, in menu order.
pub fn default_templates() -> Vec<LensTemplate> {
    let with = |mut e: EffectDescriptor, key: &str, v: f64| {
        e.set_param(key, v).expect("registered key");
        e
    };
    let both = |t, i| EffectDescriptor::new(Some(t), Some(i)).expect("valid");
    vec![
        LensTemplate::new("derivative", EffectDescriptor::derivative()),
        LensTemplate::new("mip", EffectDescriptor::mip()),
        LensTemplate::new("contrast", with(EffectDescriptor::plain(), "opacity_scale", 4.0)),
        LensTemplate::new(
            "derivative-dvr",
            both(FieldTransform::GradientMagnitude, Integrator::EmissionAbsorption),
        ),
        LensTemplate::new(
            "derivative-mip",
            both(FieldTransform::GradientMagnitude, Integrator::MaximumIntensity),
        ),
        LensTemplate::new("faint", with(EffectDescriptor::plain(), "opacity_scale", 0.25)),
        LensTemplate::new("bright-mip", with(EffectDescriptor::mip(), "gain", 2.0)),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenuModel {
    pub templates: Vec<LensTemplate>,
    pub page: usize,
    /// Menu center and plane; follows the non-dominant hand while visible.
    pub anchor: Pose,
}

impl Default for MenuModel {
    fn default() -> Self {
        Self {
            templates: default_templates(),
            page: 0,
            anchor: Pose::identity(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MenuCommand {
    CreateLens(LensTemplate),
    RemoveHeldLens,
    NextPage,
}

/// Where the menu sits for a given non-dominant hand pose.
pub fn anchor_for(hand: &Pose, config: &InteractionConfig) -> Pose {
    hand.compose(&Pose::from_translation(Vec3::new(0.0, 0.0, config.menu_offset)))
}

/// What the menu reacts to in one frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MenuInput {
    pub non_dominant: Pose,
    pub dominant: Pose,
    pub dominant_trigger_pressed: bool,
    /// Center of a lens released by a hand this frame.
    pub released_lens_center: Option<Vec3>,
}

/// Part of the menu a point falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MenuRegion {
    Hub,
    Section(usize),
    Outside,
}

impl MenuModel {
    pub fn page_count(&self) -> usize {
        self.templates.len().div_ceil(SECTIONS_PER_PAGE).max(1)
    }

    pub fn page_templates(&self) -> &[LensTemplate] {
        let start = (self.page * SECTIONS_PER_PAGE).min(self.templates.len());
        let end = (start + SECTIONS_PER_PAGE).min(self.templates.len());
        &self.templates[start..end]
    }

    /// Classifies a world point against the menu disc.
    pub fn region(&self, p: &Vec3, config: &InteractionConfig) -> MenuRegion {
        let local = self.anchor.inverse_transform_point(p);
        if local.z.abs() > config.menu_depth {
            return MenuRegion::Outside;
        }
        let radial = local.x.hypot(local.y);
        if radial < config.menu_hub_radius {
            return MenuRegion::Hub;
        }
        if radial > config.menu_radius {
            return MenuRegion::Outside;
        }
        let mut deg = local.y.atan2(local.x).to_degrees();
        if deg < 0.0 {
            deg += 360.0;
        }
        let section = ((deg / SECTION_DEGREES).floor() as usize).min(SECTIONS_PER_PAGE - 1);
        MenuRegion::Section(section)
    }

    /// World position of the middle of a section on the current page.
    pub fn section_centroid(&self, section: usize, config: &InteractionConfig) -> Vec3 {
        let deg = (section as f64 + 0.5) * SECTION_DEGREES;
        let r = 0.5 * (config.menu_hub_radius + config.menu_radius);
        let (s, c) = deg.to_radians().sin_cos();
        self.anchor.transform_point(&Vec3::new(r * c, r * s, 0.0))
    }
}

/// Moves the anchor with the non-dominant hand, then interprets a release
/// over the disc (remove) or a dominant trigger press (pick / page turn).
pub fn menu_step(
    menu: &MenuModel,
    input: &MenuInput,
    config: &InteractionConfig,
) -> (MenuModel, Option<MenuCommand>) {
    let mut next = menu.clone();
    next.anchor = anchor_for(&input.non_dominant, config);
    if let Some(c) = input.released_lens_center {
        if next.region(&c, config) != MenuRegion::Outside {
            return (next, Some(MenuCommand::RemoveHeldLens));
        }
    }
    if !input.dominant_trigger_pressed {
        return (next, None);
    }
    let cmd = match next.region(&input.dominant.position, config) {
        MenuRegion::Hub => Some(MenuCommand::NextPage),
        MenuRegion::Section(s) => next
            .page_templates()
            .get(s)
            .cloned()
            .map(MenuCommand::CreateLens),
        MenuRegion::Outside => None,
    };
    if cmd == Some(MenuCommand::NextPage) {
        next.page = (next.page + 1) % next.page_count();
    }
    (next, cmd)
}
