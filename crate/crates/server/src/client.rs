//! A blocking client for tests and tools.

use std::net::{SocketAddr, TcpStream};
use std::time::{Duration, Instant};

use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

use crate::protocol::{ClientMessage, FrameHeader, ServerMessage};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error(transparent)]
    Ws(#[from] tungstenite::Error),
    #[error("undecodable server message: {0}")]
    Decode(String),
    #[error("timed out waiting for the server")]
    Timeout,
    #[error("the server closed the connection")]
    Closed,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Incoming {
    Text(ServerMessage),
    Frame { header: FrameHeader, payload: Vec<u8> },
}

impl Incoming {
    pub fn seq(&self) -> u64 {
        match self {
            Self::Text(m) => m.seq(),
            Self::Frame { header, .. } => header.seq,
        }
    }
}

pub struct Client {
    ws: WebSocket<MaybeTlsStream<TcpStream>>,
}

impl Client {
    /// Connects to `/session`; `query` is appended verbatim, e.g. `"encoding=png"`.
    pub fn connect(addr: SocketAddr, query: Option<&str>) -> Result<Self, ClientError> {
        let url = match query {
            Some(q) => format!("ws://{addr}/session?{q}"),
            None => format!("ws://{addr}/session"),
        };
        let (ws, _) = tungstenite::connect(url)?;
        Ok(Self { ws })
    }

    pub fn send(&mut self, msg: &ClientMessage) -> Result<(), ClientError> {
        self.send_text(&serde_json::to_string(msg).expect("client messages serialize"))
    }

    pub fn send_text(&mut self, text: &str) -> Result<(), ClientError> {
        Ok(self.ws.send(Message::text(text))?)
    }

    pub fn send_binary(&mut self, bytes: Vec<u8>) -> Result<(), ClientError> {
        Ok(self.ws.send(Message::binary(bytes))?)
    }

    /// The next text message or frame.
    pub fn recv(&mut self, timeout: Duration) -> Result<Incoming, ClientError> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(ClientError::Timeout);
            }
            if let MaybeTlsStream::Plain(s) = self.ws.get_mut() {
                s.set_read_timeout(Some(left))
                    .map_err(|e| ClientError::Ws(e.into()))?;
            }
            match self.ws.read() {
                Ok(Message::Text(t)) => {
                    return serde_json::from_str(&t)
                        .map(Incoming::Text)
                        .map_err(|e| ClientError::Decode(e.to_string()));
                }
                Ok(Message::Binary(b)) => {
                    let (header, payload) =
                        FrameHeader::parse(&b).ok_or_else(|| ClientError::Decode("bad frame header".into()))?;
                    return Ok(Incoming::Frame {
                        header,
                        payload: payload.to_vec(),
                    });
                }
                Ok(Message::Close(_)) => return Err(ClientError::Closed),
                Ok(_) => {}
                Err(tungstenite::Error::Io(e))
                    if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) =>
                {
                    return Err(ClientError::Timeout);
                }
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                    return Err(ClientError::Closed);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// The next text message, skipping frames.
    pub fn recv_message(&mut self, timeout: Duration) -> Result<ServerMessage, ClientError> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if let Incoming::Text(m) = self.recv(left)? {
                return Ok(m);
            }
        }
    }

    /// Skips ahead to the next `scene_summary`, returning everything seen on the way.
    pub fn until_summary(&mut self, timeout: Duration) -> Result<Vec<ServerMessage>, ClientError> {
        let mut seen = Vec::new();
        loop {
            let m = self.recv_message(timeout)?;
            let done = matches!(m, ServerMessage::SceneSummary { .. });
            seen.push(m);
            if done {
                return Ok(seen);
            }
        }
    }

    /// The next frame, skipping text messages.
    pub fn recv_frame(&mut self, timeout: Duration) -> Result<(FrameHeader, Vec<u8>), ClientError> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if let Incoming::Frame { header, payload } = self.recv(left)? {
                return Ok((header, payload));
            }
        }
    }

    pub fn close(mut self) {
        let _ = self.ws.close(None);
        let _ = self.ws.flush();
    }
}
