//! Wire formats. Control and state messages are JSON text frames tagged by
//! `type`; rendered frames are binary messages with a fixed 20-byte header.
//! `docs/protocol.md` lists every field.

use loupe_core::interaction::input::InputEvent;
use loupe_core::interaction::FeedbackEvent;
use loupe_core::render::TransferFunction;
use loupe_core::scene::{SceneFile, SceneSummary};
use loupe_core::session::CameraSettings;
use serde::{Deserialize, Serialize};

/// Messages a client sends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// An input sample; the event's fields sit next to `type`.
    InputEvent(InputEvent),
    SetCamera(CameraSettings),
    SetTransferFunction { tf: TransferFunction },
    /// Replaces the scene and resets the interaction state.
    LoadScene { scene: SceneFile },
    RequestState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Another client holds the session.
    Busy,
    /// Not JSON, unknown type, or fields out of range.
    Malformed,
    /// Well formed but cannot be carried out, e.g. a scene whose volume fails to load.
    Invalid,
    Internal,
}

/// Text messages the server sends. `seq` is shared with binary frames and
/// strictly increases over a connection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    SceneSummary { seq: u64, summary: SceneSummary },
    Feedback { seq: u64, event: FeedbackEvent },
    Error { seq: u64, code: ErrorCode, message: String },
}

impl ServerMessage {
    pub fn seq(&self) -> u64 {
        match self {
            Self::SceneSummary { seq, .. } | Self::Feedback { seq, .. } | Self::Error { seq, .. } => *seq,
        }
    }

    pub(crate) fn set_seq(&mut self, n: u64) {
        match self {
            Self::SceneSummary { seq, .. } | Self::Feedback { seq, .. } | Self::Error { seq, .. } => *seq = n,
        }
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Self::Error {
            seq: 0,
            code,
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// Row-major RGBA8 from the top-left corner.
    Raw = 0,
    Png = 1,
}

impl Encoding {
    pub fn from_query(query: Option<&str>) -> Option<Self> {
        let Some(q) = query else { return Some(Self::Raw) };
        let mut enc = Self::Raw;
        for pair in q.split('&').filter(|p| !p.is_empty()) {
            match pair.split_once('=') {
                Some(("encoding", "raw")) => enc = Self::Raw,
                Some(("encoding", "png")) => enc = Self::Png,
                Some(("encoding", _)) => return None,
                _ => {}
            }
        }
        Some(enc)
    }
}

pub const FRAME_HEADER_LEN: usize = 20;

/// Header of a binary frame message: little-endian `seq: u64, width: u32,
/// height: u32, encoding: u8`, then three zero bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameHeader {
    pub seq: u64,
    pub width: u32,
    pub height: u32,
    pub encoding: Encoding,
}

impl FrameHeader {
    pub fn to_bytes(&self) -> [u8; FRAME_HEADER_LEN] {
        let mut b = [0u8; FRAME_HEADER_LEN];
        b[0..8].copy_from_slice(&self.seq.to_le_bytes());
        b[8..12].copy_from_slice(&self.width.to_le_bytes());
        b[12..16].copy_from_slice(&self.height.to_le_bytes());
        b[16] = self.encoding as u8;
        b
    }

    pub fn parse(bytes: &[u8]) -> Option<(Self, &[u8])> {
        if bytes.len() < FRAME_HEADER_LEN {
            return None;
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let encoding = match bytes[16] {
            0 => Encoding::Raw,
            1 => Encoding::Png,
            _ => return None,
        };
        let header = Self {
            seq: u64::from_le_bytes(bytes[0..8].try_into().expect("8 bytes")),
            width: u32_at(8),
            height: u32_at(12),
            encoding,
        };
        Some((header, &bytes[FRAME_HEADER_LEN..]))
    }
}
