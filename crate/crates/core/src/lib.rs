//! Volume exploration through graspable disc lenses: data model, lens
//! geometry, the interaction reducer, a CPU ray-caster and session replay.

pub mod config;
pub mod effect;
pub mod geom;
pub mod interaction;
pub mod lens;
pub mod phantom;
pub mod render;
pub mod scene;
pub mod session;
pub mod volume;
