//! The scene: volume, lenses, tracked poses, menu and proxy state.
//!
//! `SceneState` is only mutated through the interaction reducer. Scene files
//! (used by `render` and embedded in session headers) are JSON documents of
//! the form
//!
//! ```json
//! {"source": {"type": "default_phantom"}, "lenses": [], "head": {...}, "background": [18, 18, 24]}
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geom::Pose;
use crate::interaction::input::{Hand, HandState, Hands};
use crate::interaction::menu::MenuModel;
use crate::interaction::proxy::ProxyBinding;
use crate::interaction::InteractionMode;
use crate::lens::{Lens, LensError, LensId};
use crate::phantom::{generate_phantom, PhantomError, PhantomSpec};
use crate::volume::{load_raw, VolumeError, VolumeGrid, VolumeMeta};

pub const DEFAULT_BACKGROUND: [u8; 3] = [18, 18, 24];

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error(transparent)]
    Volume(#[from] VolumeError),
    #[error(transparent)]
    Phantom(#[from] PhantomError),
    #[error(transparent)]
    Lens(#[from] LensError),
    #[error("duplicate lens id {0}")]
    DuplicateId(LensId),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Where the scene's volume comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VolumeSource {
    DefaultPhantom,
    Phantom { spec: PhantomSpec },
    /// RAW file plus sidecar; relative paths resolve against the referencing file.
    Raw { data: PathBuf, meta: PathBuf },
}

impl VolumeSource {
    pub fn load(&self, base_dir: &Path) -> Result<VolumeGrid, SceneError> {
        match self {
            Self::DefaultPhantom => Ok(generate_phantom(&PhantomSpec::default())?),
            Self::Phantom { spec } => Ok(generate_phantom(spec)?),
            Self::Raw { data, meta } => {
                let meta = VolumeMeta::read(&base_dir.join(meta))?;
                Ok(load_raw(&base_dir.join(data), &meta)?)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnimationKind {
    Materialize,
    ProxyAppear,
}

/// A render-only grow-in animation of a lens ring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Animation {
    pub lens: LensId,
    pub kind: AnimationKind,
    pub start_ms: u64,
    pub duration_ms: u64,
}

impl Animation {
    pub fn progress(&self, now_ms: u64) -> f64 {
        if self.duration_ms == 0 {
            return 1.0;
        }
        (now_ms.saturating_sub(self.start_ms) as f64 / self.duration_ms as f64).min(1.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneState {
    #[serde(skip)]
    pub volume: Option<Arc<VolumeGrid>>,
    #[serde(default)]
    pub source: Option<VolumeSource>,
    /// Sorted by id.
    #[serde(default)]
    pub lenses: Vec<Lens>,
    #[serde(default)]
    pub head: Pose,
    #[serde(default)]
    pub hands: Hands,
    /// Timestamp of the last applied event.
    #[serde(default)]
    pub clock_ms: Option<u64>,
    #[serde(default)]
    pub menu: MenuModel,
    #[serde(default)]
    pub proxy: Option<ProxyBinding>,
    /// Lens currently held by a hand, mirrored from the interaction mode.
    #[serde(default)]
    pub held: Option<LensId>,
    #[serde(default)]
    pub animations: Vec<Animation>,
    #[serde(default = "default_background")]
    pub background: [u8; 3],
}

fn default_background() -> [u8; 3] {
    DEFAULT_BACKGROUND
}

impl PartialEq for SceneState {
    fn eq(&self, other: &Self) -> bool {
        let volume_eq = match (&self.volume, &other.volume) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        };
        volume_eq
            && self.source == other.source
            && self.lenses == other.lenses
            && self.head == other.head
            && self.hands == other.hands
            && self.clock_ms == other.clock_ms
            && self.menu == other.menu
            && self.proxy == other.proxy
            && self.held == other.held
            && self.animations == other.animations
            && self.background == other.background
    }
}

impl Default for SceneState {
    fn default() -> Self {
        Self {
            volume: None,
            source: None,
            lenses: Vec::new(),
            head: Pose::identity(),
            hands: Hands::default(),
            clock_ms: None,
            menu: MenuModel::default(),
            proxy: None,
            held: None,
            animations: Vec::new(),
            background: DEFAULT_BACKGROUND,
        }
    }
}

impl SceneState {
    pub fn with_volume(volume: Arc<VolumeGrid>) -> Self {
        Self {
            volume: Some(volume),
            ..Self::default()
        }
    }

    pub fn lens(&self, id: LensId) -> Option<&Lens> {
        self.lenses
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(|i| &self.lenses[i])
    }

    pub fn lens_mut(&mut self, id: LensId) -> Option<&mut Lens> {
        self.lenses
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(move |i| &mut self.lenses[i])
    }

    /// Inserts keeping id order; replaces a lens with the same id.
    pub fn upsert_lens(&mut self, lens: Lens) {
        match self.lenses.binary_search_by_key(&lens.id, |l| l.id) {
            Ok(i) => self.lenses[i] = lens,
            Err(i) => self.lenses.insert(i, lens),
        }
    }

    pub fn remove_lens(&mut self, id: LensId) -> Option<Lens> {
        let i = self.lenses.binary_search_by_key(&id, |l| l.id).ok()?;
        self.animations.retain(|a| a.lens != id);
        Some(self.lenses.remove(i))
    }

    /// One past the largest id in use. Derived from the lens set so that
    /// removing the newest lens restores the scene exactly.
    pub fn next_lens_id(&self) -> LensId {
        LensId(self.lenses.last().map_or(1, |l| l.id.0 + 1))
    }

    pub fn is_proxy(&self, id: LensId) -> bool {
        self.proxy.as_ref().is_some_and(|b| b.proxy == id)
    }

    pub fn hand(&self, hand: Hand) -> &HandState {
        self.hands.get(hand)
    }

    pub fn animation_progress(&self, id: LensId) -> f64 {
        let now = self.clock_ms.unwrap_or(0);
        self.animations
            .iter()
            .filter(|a| a.lens == id)
            .map(|a| a.progress(now))
            .fold(1.0, f64::min)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scene serializes")
    }
}

/// A scene document: the initial state before any input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(default)]
    pub source: Option<VolumeSource>,
    #[serde(default)]
    pub lenses: Vec<Lens>,
    #[serde(default)]
    pub head: Pose,
    #[serde(default = "default_background")]
    pub background: [u8; 3],
}

impl Default for SceneFile {
    fn default() -> Self {
        Self {
            source: Some(VolumeSource::DefaultPhantom),
            lenses: Vec::new(),
            head: Pose::identity(),
            background: DEFAULT_BACKGROUND,
        }
    }
}

impl SceneFile {
    pub fn read(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|e| SceneError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| SceneError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Loads the volume and builds the initial state.
    pub fn instantiate(&self, base_dir: &Path) -> Result<SceneState, SceneError> {
        let volume = match &self.source {
            Some(src) => Some(Arc::new(src.load(base_dir)?)),
            None => None,
        };
        self.instantiate_with(volume)
    }

    /// Builds the initial state around an already loaded volume.
    pub fn instantiate_with(
        &self,
        volume: Option<Arc<VolumeGrid>>,
    ) -> Result<SceneState, SceneError> {
        let mut scene = SceneState {
            volume,
            source: self.source.clone(),
            head: self.head,
            background: self.background,
            ..SceneState::default()
        };
        for lens in &self.lenses {
            lens.validate()?;
            if scene.lens(lens.id).is_some() {
                return Err(SceneError::DuplicateId(lens.id));
            }
            scene.upsert_lens(lens.clone());
        }
        Ok(scene)
    }
}

/// What clients see of the scene: lenses, mode, menu and proxy state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSummary {
    pub clock_ms: Option<u64>,
    pub lenses: Vec<Lens>,
    pub held: Option<LensId>,
    pub mode: String,
    pub menu: MenuSummary,
    pub proxy: Option<ProxyBinding>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MenuSummary {
    pub visible: bool,
    pub page: usize,
    pub page_count: usize,
    pub anchor: Pose,
    /// Template names on the current page, in section order.
    pub sections: Vec<String>,
}

impl SceneSummary {
    pub fn new(scene: &SceneState, mode: &InteractionMode) -> Self {
        Self {
            clock_ms: scene.clock_ms,
            lenses: scene.lenses.clone(),
            held: scene.held,
            mode: mode.name().to_string(),
            menu: MenuSummary {
                visible: mode.menu_visible,
                page: scene.menu.page,
                page_count: scene.menu.page_count(),
                anchor: scene.menu.anchor,
                sections: scene
                    .menu
                    .page_templates()
                    .iter()
                    .map(|t| t.name.clone())
                    .collect(),
            },
            proxy: scene.proxy,
        }
    }
}
