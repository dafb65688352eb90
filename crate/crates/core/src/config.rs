//! Interaction tolerances and distances, all in meters unless noted.

use serde::{Deserialize, Serialize};

use crate::lens::SnapThresholds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InteractionConfig {
    /// Largest hand-to-disc distance at which a grab attaches.
    pub grab_distance: f64,
    /// Ring controls are live while a hand is this close to the rim.
    pub ring_control_proximity: f64,
    /// A trigger press this close to a ring widget activates it.
    pub ring_widget_radius: f64,
    /// Offset of the menu anchor along the non-dominant hand's local +Z.
    pub menu_offset: f64,
    /// Outer radius of the radial menu disc.
    pub menu_radius: f64,
    /// Radius of the page-turn hub at the menu center.
    pub menu_hub_radius: f64,
    /// Half thickness of the slab around the menu plane that counts as "on" it.
    pub menu_depth: f64,
    pub proxy_distance: f64,
    pub proxy_radius: f64,
    pub raycast_range: f64,
    /// Two-handed resize is refused when the hands start closer than this.
    pub resize_min_distance: f64,
    /// Radius of lenses created from the menu.
    pub new_lens_radius: f64,
    /// A split places the second lens this many radii along local +X.
    pub split_offset: f64,
    /// Step and wrap bound for the ring's parameter widget.
    pub param_step: f64,
    pub param_min: f64,
    pub param_max: f64,
    /// Duration of spawn animations, milliseconds (rendering only).
    pub animation_ms: u64,
    pub snap: SnapThresholds,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self {
            grab_distance: 0.08,
            ring_control_proximity: 0.15,
            ring_widget_radius: 0.03,
            menu_offset: 0.15,
            menu_radius: 0.12,
            menu_hub_radius: 0.03,
            menu_depth: 0.05,
            proxy_distance: 0.5,
            proxy_radius: 0.15,
            raycast_range: 100.0,
            resize_min_distance: 0.01,
            new_lens_radius: 0.1,
            split_offset: 1.2,
            param_step: 0.25,
            param_min: 0.25,
            param_max: 4.0,
            animation_ms: 300,
            snap: SnapThresholds::default(),
        }
    }
}
