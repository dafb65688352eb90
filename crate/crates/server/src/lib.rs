//! Live bridge between the engine and a browser cockpit.
//!
//! One client at a time talks to `ws://host:port/session`. Each connection
//! runs three threads: socket I/O (this never waits on rendering), the
//! reducer, which applies inbound messages strictly in arrival order, and
//! the renderer, which draws the latest published scene at a fixed cadence.
//! Every inbound message is answered with a `scene_summary`, or an `error`
//! if it could not be applied.

pub mod client;
pub mod protocol;

use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, SyncSender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use loupe_core::config::InteractionConfig;
use loupe_core::geom::Pose;
use loupe_core::interaction::{InteractionMode, Reducer};
use loupe_core::render::{encode_png, render_frame, Camera, RenderOptions, TransferFunction};
use loupe_core::scene::{SceneError, SceneFile, SceneState, SceneSummary};
use loupe_core::session::CameraSettings;
use tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tungstenite::http::StatusCode;
use tungstenite::{Message, WebSocket};

pub use protocol::{ClientMessage, Encoding, ErrorCode, FrameHeader, ServerMessage};

/// Path of the WebSocket endpoint.
pub const ENDPOINT: &str = "/session";

/// Environment variable that overrides the bind address: an IP address (the
/// port still comes from the caller) or a full `ip:port`.
pub const BIND_ENV: &str = "LOUPE_BIND";

const POLL: Duration = Duration::from_millis(5);

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("invalid {BIND_ENV} value {0:?}")]
    BindEnv(String),
}

#[derive(Clone, Debug)]
pub struct ServerConfig {
    /// Scene every connection starts from.
    pub scene: SceneFile,
    /// Directory that relative volume paths resolve against.
    pub base_dir: PathBuf,
    pub camera: CameraSettings,
    pub transfer_function: TransferFunction,
    pub interaction: InteractionConfig,
    pub frame_interval: Duration,
    pub workers: usize,
    pub step: Option<f64>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            scene: SceneFile::default(),
            base_dir: PathBuf::from("."),
            camera: CameraSettings::default(),
            transfer_function: TransferFunction::default(),
            interaction: InteractionConfig::default(),
            frame_interval: Duration::from_millis(100),
            workers: 0,
            step: None,
        }
    }
}

/// The address to bind for `port`, honoring [`BIND_ENV`].
pub fn bind_address(port: u16) -> Result<String, ServerError> {
    match std::env::var(BIND_ENV) {
        Ok(v) if v.parse::<SocketAddr>().is_ok() => Ok(v),
        Ok(v) => match v.parse::<std::net::IpAddr>() {
            Ok(ip) => Ok(SocketAddr::new(ip, port).to_string()),
            Err(_) => Err(ServerError::BindEnv(v)),
        },
        Err(_) => Ok(format!("127.0.0.1:{port}")),
    }
}

struct Shared {
    config: ServerConfig,
    initial: SceneState,
    active: AtomicBool,
    shutdown: AtomicBool,
}

pub struct Server {
    listener: TcpListener,
    shared: Arc<Shared>,
}

/// A server running on a background thread.
pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting connections and waits for the accept loop to exit.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

impl Server {
    /// Loads the initial scene and binds the listener.
    pub fn bind(addr: impl ToSocketAddrs + std::fmt::Debug, config: ServerConfig) -> Result<Self, ServerError> {
        let initial = config.scene.instantiate(&config.base_dir)?;
        let listener = TcpListener::bind(&addr).map_err(|source| ServerError::Bind {
            addr: format!("{addr:?}"),
            source,
        })?;
        Ok(Self {
            listener,
            shared: Arc::new(Shared {
                config,
                initial,
                active: AtomicBool::new(false),
                shutdown: AtomicBool::new(false),
            }),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Accepts connections until shut down.
    pub fn run(self) {
        self.listener
            .set_nonblocking(true)
            .expect("listener supports non-blocking mode");
        while !self.shared.shutdown.load(Ordering::SeqCst) {
            match self.listener.accept() {
                Ok((stream, _)) => {
                    let shared = self.shared.clone();
                    thread::spawn(move || connection(stream, shared));
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(10)),
                Err(_) => thread::sleep(Duration::from_millis(10)),
            }
        }
    }

    pub fn spawn(self) -> ServerHandle {
        let addr = self.local_addr();
        let shared = self.shared.clone();
        let thread = thread::spawn(move || self.run());
        ServerHandle {
            addr,
            shared,
            thread: Some(thread),
        }
    }
}

/// Releases the session slot when a connection ends.
struct Slot<'a>(&'a AtomicBool);

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::SeqCst);
    }
}

fn connection(stream: TcpStream, shared: Arc<Shared>) {
    let _ = stream.set_nonblocking(false);
    let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
    let mut encoding = Encoding::Raw;
    let callback = |req: &Request, resp: Response| -> Result<Response, ErrorResponse> {
        let reject = |status: StatusCode, why: &str| {
            let mut r = ErrorResponse::new(Some(why.to_string()));
            *r.status_mut() = status;
            r
        };
        if req.uri().path() != ENDPOINT {
            return Err(reject(StatusCode::NOT_FOUND, "the endpoint is /session"));
        }
        encoding = Encoding::from_query(req.uri().query())
            .ok_or_else(|| reject(StatusCode::BAD_REQUEST, "encoding must be raw or png"))?;
        Ok(resp)
    };
    let Ok(mut ws) = tungstenite::accept_hdr(stream, callback) else { return };

    if shared
        .active
        .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
        .is_err()
    {
        let mut busy = ServerMessage::error(ErrorCode::Busy, "another client holds the session");
        busy.set_seq(1);
        let _ = ws.send(Message::text(serde_json::to_string(&busy).expect("serializes")));
        let _ = ws.close(None);
        let _ = ws.flush();
        return;
    }
    let _slot = Slot(&shared.active);
    if ws.get_mut().set_read_timeout(Some(POLL)).is_err() {
        return;
    }
    Session::run(ws, &shared, encoding);
}

/// What the renderer draws.
struct Published {
    version: u64,
    scene: SceneState,
    camera: CameraSettings,
    tf: TransferFunction,
}

struct RenderedFrame {
    width: u32,
    height: u32,
    encoding: Encoding,
    payload: Vec<u8>,
}

struct Session;

impl Session {
    fn run(mut ws: WebSocket<TcpStream>, shared: &Arc<Shared>, encoding: Encoding) {
        let (in_tx, in_rx) = mpsc::channel::<String>();
        let (out_tx, out_rx) = mpsc::channel::<ServerMessage>();
        let (frame_tx, frame_rx) = mpsc::sync_channel::<RenderedFrame>(1);
        let published = Arc::new(Mutex::new(None::<Arc<Published>>));
        let closed = Arc::new(AtomicBool::new(false));

        let reducer = {
            let (shared, published, out_tx) = (shared.clone(), published.clone(), out_tx.clone());
            thread::spawn(move || reducer_loop(&shared, in_rx, out_tx, &published))
        };
        let renderer = {
            let (shared, published, closed) = (shared.clone(), published.clone(), closed.clone());
            thread::spawn(move || render_loop(&shared, &published, frame_tx, &closed, encoding))
        };

        let mut seq = 0u64;
        'io: while !shared.shutdown.load(Ordering::SeqCst) {
            match ws.read() {
                Ok(Message::Text(t)) => {
                    if in_tx.send(t.to_string()).is_err() {
                        break;
                    }
                }
                Ok(Message::Binary(_)) => {
                    let _ = out_tx.send(ServerMessage::error(ErrorCode::Malformed, "binary messages are not accepted"));
                }
                Ok(Message::Close(_)) => break,
                Ok(_) => {}
                Err(tungstenite::Error::Io(e))
                    if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
                Err(_) => break,
            }
            loop {
                match out_rx.try_recv() {
                    Ok(mut m) => {
                        seq += 1;
                        m.set_seq(seq);
                        let text = serde_json::to_string(&m).expect("server messages serialize");
                        if ws.send(Message::text(text)).is_err() {
                            break 'io;
                        }
                    }
                    Err(TryRecvError::Empty) => break,
                    Err(TryRecvError::Disconnected) => break 'io,
                }
            }
            if let Ok(f) = frame_rx.try_recv() {
                seq += 1;
                let header = FrameHeader {
                    seq,
                    width: f.width,
                    height: f.height,
                    encoding: f.encoding,
                };
                let mut bytes = header.to_bytes().to_vec();
                bytes.extend_from_slice(&f.payload);
                if ws.send(Message::binary(bytes)).is_err() {
                    break;
                }
            }
        }
        closed.store(true, Ordering::SeqCst);
        drop(in_tx);
        drop(frame_rx);
        drop(out_rx);
        let _ = reducer.join();
        let _ = renderer.join();
        let _ = ws.close(None);
        let _ = ws.flush();
    }
}

struct State {
    reducer: Reducer,
    scene: SceneState,
    mode: InteractionMode,
    camera: CameraSettings,
    tf: TransferFunction,
    version: u64,
}

impl State {
    fn summary(&self) -> ServerMessage {
        ServerMessage::SceneSummary {
            seq: 0,
            summary: SceneSummary::new(&self.scene, &self.mode),
        }
    }

    /// Applies one inbound message; returns the replies in order.
    fn apply(&mut self, text: &str, shared: &Shared) -> Vec<ServerMessage> {
        let msg: ClientMessage = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(e) => return vec![ServerMessage::error(ErrorCode::Malformed, e.to_string())],
        };
        let mut out = Vec::new();
        match msg {
            ClientMessage::InputEvent(ev) => {
                let (s, m, fb) = self.reducer.step(&self.scene, &self.mode, &ev);
                self.scene = s;
                self.mode = m;
                out.extend(fb.into_iter().map(|event| ServerMessage::Feedback { seq: 0, event }));
            }
            ClientMessage::SetCamera(c) => {
                if Camera::new(Pose::identity(), c.fov_deg, c.width, c.height).is_none() {
                    return vec![ServerMessage::error(ErrorCode::Malformed, "camera settings out of range")];
                }
                self.camera = c;
            }
            ClientMessage::SetTransferFunction { tf } => self.tf = tf,
            ClientMessage::LoadScene { scene } => match scene.instantiate(&shared.config.base_dir) {
                Ok(s) => {
                    self.scene = s;
                    self.mode = InteractionMode::default();
                }
                Err(e) => return vec![ServerMessage::error(ErrorCode::Invalid, e.to_string())],
            },
            ClientMessage::RequestState => {}
        }
        self.version += 1;
        out.push(self.summary());
        out
    }

    fn publish(&self, slot: &Mutex<Option<Arc<Published>>>) {
        let p = Published {
            version: self.version,
            scene: self.scene.clone(),
            camera: self.camera,
            tf: self.tf.clone(),
        };
        *slot.lock().expect("publish lock") = Some(Arc::new(p));
    }
}

fn reducer_loop(
    shared: &Shared,
    inbound: Receiver<String>,
    out: Sender<ServerMessage>,
    published: &Mutex<Option<Arc<Published>>>,
) {
    let cfg = &shared.config;
    let mut state = State {
        reducer: Reducer::new(cfg.interaction.clone()),
        scene: shared.initial.clone(),
        mode: InteractionMode::default(),
        camera: cfg.camera,
        tf: cfg.transfer_function.clone(),
        version: 0,
    };
    state.publish(published);
    let _ = out.send(state.summary());
    for text in inbound {
        let replies = match catch_unwind(AssertUnwindSafe(|| state.apply(&text, shared))) {
            Ok(r) => r,
            Err(_) => vec![ServerMessage::error(ErrorCode::Internal, "the reducer failed on this message")],
        };
        state.publish(published);
        for r in replies {
            if out.send(r).is_err() {
                return;
            }
        }
    }
}

fn render_loop(
    shared: &Shared,
    published: &Mutex<Option<Arc<Published>>>,
    frames: SyncSender<RenderedFrame>,
    closed: &AtomicBool,
    encoding: Encoding,
) {
    let cfg = &shared.config;
    let mut last = None;
    while !closed.load(Ordering::SeqCst) {
        let current = published.lock().expect("publish lock").clone();
        let Some(p) = current.filter(|p| Some(p.version) != last) else {
            thread::sleep(POLL);
            continue;
        };
        let started = std::time::Instant::now();
        let c = p.camera;
        let camera = Camera::new(p.scene.head, c.fov_deg, c.width, c.height).expect("validated camera");
        let opts = RenderOptions {
            step: cfg.step,
            workers: cfg.workers,
            ..RenderOptions::default()
        };
        let fb = render_frame(&p.scene, &camera, &p.tf, &opts);
        let payload = match encoding {
            Encoding::Raw => fb.pixels,
            Encoding::Png => encode_png(&fb).expect("in-memory PNG encoding"),
        };
        let frame = RenderedFrame {
            width: fb.width,
            height: fb.height,
            encoding,
            payload,
        };
        // Blocks while the previous frame is still queued, so a slow socket
        // delays rendering rather than growing a backlog.
        if frames.send(frame).is_err() {
            return;
        }
        last = Some(p.version);
        while started.elapsed() < cfg.frame_interval && !closed.load(Ordering::SeqCst) {
            thread::sleep(POLL.min(cfg.frame_interval.saturating_sub(started.elapsed())));
        }
    }
}
