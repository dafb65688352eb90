//! Session scripts and their deterministic replay.
//!
//! A script is JSON Lines: one record per line, blank lines and lines
//! starting with `#` ignored. The first record is the header; the rest is
//! the timeline. See `docs/session-format.md` for the grammar.

pub mod authoring;
mod golden;
mod query;

pub use golden::{compare_frames, compare_golden, GoldenError, GoldenReport};
pub use query::{QueryError, SceneQuery};

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::InteractionConfig;
use crate::interaction::input::InputEvent;
use crate::interaction::{check_invariants, InteractionMode, Reducer};
use crate::render::{render_frame, Camera, Framebuffer, RenderOptions, TransferFunction};
use crate::scene::{SceneError, SceneFile, SceneState};
use crate::volume::VolumeGrid;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid script: {0}")]
    Invalid(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("at t={}: {source}", timestamp.map_or("start".to_string(), |t| t.to_string()))]
    Query {
        timestamp: Option<u64>,
        source: QueryError,
    },
    #[error("scene invariant broken at t={timestamp}: {message}")]
    Invariant { timestamp: u64, message: String },
}

/// Image size and field of view for snapshots; the pose is the head pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSettings {
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraSettings {
    fn default() -> Self {
        Self {
            fov_deg: 60.0,
            width: 320,
            height: 240,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Header {
    /// Inline initial scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneFile>,
    /// Scene file path, relative to the script.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_file: Option<PathBuf>,
    #[serde(default)]
    pub camera: CameraSettings,
    #[serde(default)]
    pub config: InteractionConfig,
    #[serde(default)]
    pub transfer_function: TransferFunction,
    /// Ray sample spacing, meters; half the smallest voxel spacing if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub query: SceneQuery,
    pub expected: Value,
    /// Absolute tolerance for numeric comparisons.
    #[serde(default)]
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Record {
    Header(Header),
    Event(InputEvent),
    Snapshot { name: String },
    SetTransferFunction { tf: TransferFunction },
    Assert(Assertion),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TimelineRecord {
    Event(InputEvent),
    Snapshot { name: String },
    SetTransferFunction { tf: TransferFunction },
    Assert(Assertion),
}

impl From<TimelineRecord> for Record {
    fn from(r: TimelineRecord) -> Self {
        match r {
            TimelineRecord::Event(e) => Record::Event(e),
            TimelineRecord::Snapshot { name } => Record::Snapshot { name },
            TimelineRecord::SetTransferFunction { tf } => Record::SetTransferFunction { tf },
            TimelineRecord::Assert(a) => Record::Assert(a),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SessionScript {
    pub header: Header,
    pub timeline: Vec<TimelineRecord>,
}

impl SessionScript {
    pub fn parse(text: &str) -> Result<Self, SessionError> {
        let mut header = None;
        let mut timeline = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let record: Record = serde_json::from_str(trimmed).map_err(|e| SessionError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let parse_err = |message: &str| SessionError::Parse {
                line: i + 1,
                message: message.to_string(),
            };
            match record {
                Record::Header(h) if header.is_none() && timeline.is_empty() => header = Some(h),
                Record::Header(_) => return Err(parse_err("the header must be the first record")),
                _ if header.is_none() => return Err(parse_err("the first record must be the header")),
                Record::Event(e) => timeline.push(TimelineRecord::Event(e)),
                Record::Snapshot { name } => timeline.push(TimelineRecord::Snapshot { name }),
                Record::SetTransferFunction { tf } => {
                    timeline.push(TimelineRecord::SetTransferFunction { tf })
                }
                Record::Assert(a) => timeline.push(TimelineRecord::Assert(a)),
            }
        }
        let script = Self {
            header: header.ok_or_else(|| SessionError::Invalid("no header record".into()))?,
            timeline,
        };
        script.validate()?;
        Ok(script)
    }

    pub fn read(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.header.scene.is_some() && self.header.scene_file.is_some() {
            return Err(SessionError::Invalid(
                "header gives both an inline scene and a scene file".into(),
            ));
        }
        if Camera::new(
            crate::geom::Pose::identity(),
            self.header.camera.fov_deg,
            self.header.camera.width,
            self.header.camera.height,
        )
        .is_none()
        {
            return Err(SessionError::Invalid("camera settings out of range".into()));
        }
        if self.header.step.is_some_and(|s| !(s > 0.0)) {
            return Err(SessionError::Invalid("step must be positive".into()));
        }
        let mut last = None;
        let mut names = BTreeSet::new();
        for r in &self.timeline {
            match r {
                TimelineRecord::Event(e) => {
                    if last.is_some_and(|t| e.timestamp <= t) {
                        return Err(SessionError::Invalid(format!(
                            "timestamp {} does not increase",
                            e.timestamp
                        )));
                    }
                    last = Some(e.timestamp);
                }
                TimelineRecord::Snapshot { name } => {
                    if !names.insert(name.as_str()) {
                        return Err(SessionError::Invalid(format!("duplicate snapshot {name:?}")));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// One JSON record per line, header first.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |r: &Record| {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        };
        push(&Record::Header(self.header.clone()));
        for r in &self.timeline {
            push(&r.clone().into());
        }
        out
    }

    pub fn events(&self) -> impl Iterator<Item = &InputEvent> {
        self.timeline.iter().filter_map(|r| match r {
            TimelineRecord::Event(e) => Some(e),
            _ => None,
        })
    }

    /// Builds the initial scene the timeline starts from.
    pub fn initial_scene(&self, base_dir: &Path) -> Result<SceneState, SessionError> {
        let file = match (&self.header.scene, &self.header.scene_file) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => SceneFile::read(&base_dir.join(p))?,
            (None, None) => SceneFile::default(),
        };
        let dir = match &self.header.scene_file {
            Some(p) => base_dir.join(p).parent().map(Path::to_path_buf).unwrap_or_default(),
            None => base_dir.to_path_buf(),
        };
        Ok(file.instantiate(&dir)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    /// Clock of the scene when the assertion ran.
    pub timestamp: Option<u64>,
    pub query: SceneQuery,
    pub expected: Value,
    pub actual: Value,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    pub scene: SceneState,
    pub mode: InteractionMode,
    /// Snapshots in timeline order.
    pub snapshots: Vec<(String, Framebuffer)>,
    pub assertions: Vec<AssertionResult>,
    pub timings: Timings,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub events: usize,
    pub reducer_ms: f64,
    pub render_ms: BTreeMap<String, f64>,
}

impl ReplayOutcome {
    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn snapshot(&self, name: &str) -> Option<&Framebuffer> {
        self.snapshots.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn report(&self) -> Report {
        Report {
            passed: self.all_passed(),
            assertions: self.assertions.clone(),
            snapshots: self
                .snapshots
                .iter()
                .map(|(n, f)| (n.clone(), f.hash_hex()))
                .collect(),
            final_scene_sha256: scene_hash(&self.scene),
            timings: self.timings.clone(),
        }
    }
}

/// Replay summary written next to the snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub passed: bool,
    pub assertions: Vec<AssertionResult>,
    /// Snapshot name → SHA-256 of its pixels.
    pub snapshots: BTreeMap<String, String>,
    pub final_scene_sha256: String,
    pub timings: Timings,
}

pub fn scene_hash(scene: &SceneState) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(scene.to_json().as_bytes()))
}

/// Knobs that do not change replay results.
#[derive(Clone, Debug, Default)]
pub struct ReplayOptions {
    pub workers: usize,
    /// Check scene invariants after every event.
    pub check_invariants: bool,
    /// Reuse an already loaded volume instead of loading the header's source.
    pub volume: Option<Arc<VolumeGrid>>,
}

/// Replays a script whose relative paths resolve against `base_dir`.
pub fn replay(script: &SessionScript, base_dir: &Path) -> Result<ReplayOutcome, SessionError> {
    replay_with(script, base_dir, &ReplayOptions::default())
}

pub fn replay_with(
    script: &SessionScript,
    base_dir: &Path,
    opts: &ReplayOptions,
) -> Result<ReplayOutcome, SessionError> {
    script.validate()?;
    let scene = match &opts.volume {
        Some(v) => {
            let file = match (&script.header.scene, &script.header.scene_file) {
                (Some(s), _) => s.clone(),
                (None, Some(p)) => SceneFile::read(&base_dir.join(p))?,
                (None, None) => SceneFile::default(),
            };
            file.instantiate_with(Some(v.clone()))?
        }
        None => script.initial_scene(base_dir)?,
    };
    replay_from(script, scene, opts)
}

/// Replays the timeline starting from an explicit scene.
pub fn replay_from(
    script: &SessionScript,
    mut scene: SceneState,
    opts: &ReplayOptions,
) -> Result<ReplayOutcome, SessionError> {
    let reducer = Reducer::new(script.header.config.clone());
    let mut mode = InteractionMode::default();
    let mut tf = script.header.transfer_function.clone();
    let mut snapshots = Vec::new();
    let mut assertions = Vec::new();
    let mut timings = Timings::default();
    let render_opts = RenderOptions {
        step: script.header.step,
        workers: opts.workers,
        gradient_reference: None,
    };
    for r in &script.timeline {
        match r {
            TimelineRecord::Event(e) => {
                let t = Instant::now();
                let (s, m, _) = reducer.step(&scene, &mode, e);
                timings.reducer_ms += t.elapsed().as_secs_f64() * 1e3;
                timings.events += 1;
                scene = s;
                mode = m;
                if opts.check_invariants {
                    check_invariants(&scene, &mode).map_err(|message| SessionError::Invariant {
                        timestamp: e.timestamp,
                        message,
                    })?;
                }
            }
            TimelineRecord::Snapshot { name } => {
                let c = script.header.camera;
                let camera = Camera::new(scene.head, c.fov_deg, c.width, c.height)
                    .expect("validated camera settings");
                let t = Instant::now();
                let fb = render_frame(&scene, &camera, &tf, &render_opts);
                timings
                    .render_ms
                    .insert(name.clone(), t.elapsed().as_secs_f64() * 1e3);
                snapshots.push((name.clone(), fb));
            }
            TimelineRecord::SetTransferFunction { tf: next } => tf = next.clone(),
            TimelineRecord::Assert(a) => {
                let actual = a
                    .query
                    .evaluate(&scene, &mode)
                    .map_err(|source| SessionError::Query {
                        timestamp: scene.clock_ms,
                        source,
                    })?;
                assertions.push(AssertionResult {
                    timestamp: scene.clock_ms,
                    query: a.query.clone(),
                    expected: a.expected.clone(),
                    passed: query::values_match(&a.expected, &actual, a.tolerance),
                    actual,
                });
            }
        }
    }
    Ok(ReplayOutcome {
        scene,
        mode,
        snapshots,
        assertions,
        timings,
    })
}
