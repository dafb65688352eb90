//! The `loupe` command line: replay scripted sessions, render single frames,
//! generate phantoms, serve the live endpoint and time the renderer.
//!
//! Exit status is 0 on success, 1 when a replay's assertions fail and 2 for
//! usage or input errors.

pub mod bench;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use loupe_core::geom::{Pose, Vec3};
use loupe_core::phantom::{generate_phantom, PhantomSpec};
use loupe_core::render::{render_frame, write_image, Camera, RenderOptions, TransferFunction};
use loupe_core::scene::SceneFile;
use loupe_core::session::{replay_with, ReplayOptions, SessionScript};
use loupe_core::volume::{write_raw, ScalarType};
use loupe_server::{bind_address, Server, ServerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "loupe", version, about = "Explore volume data through graspable magic lenses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay a session script, writing its snapshots and a report.
    Replay {
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Pixel workers for snapshots (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Check scene invariants after every event.
        #[arg(long)]
        check_invariants: bool,
    },
    /// Render one frame of a scene file (JSON).
    Render {
        scene: PathBuf,
        /// Output image; `.png` or binary PPM otherwise.
        #[arg(long)]
        out: PathBuf,
        /// Camera position; defaults to the scene's head pose.
        #[arg(long, value_parser = parse_vec3, requires = "target")]
        eye: Option<Vec3>,
        #[arg(long, value_parser = parse_vec3, requires = "eye")]
        target: Option<Vec3>,
        #[arg(long, value_parser = parse_vec3, default_value = "0,0,1")]
        up: Vec3,
        #[arg(long, default_value_t = 60.0)]
        fov: f64,
        #[arg(long, default_value_t = 320)]
        width: u32,
        #[arg(long, default_value_t = 240)]
        height: u32,
        /// Transfer function as a JSON array of control points.
        #[arg(long)]
        tf: Option<PathBuf>,
        /// Ray step in meters; half the smallest voxel spacing by default.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Generate a phantom volume as RAW data plus a TOML sidecar.
    Phantom {
        /// A TOML phantom spec, or `default`.
        spec: String,
        /// RAW output path; the sidecar is written next to it with a `.toml` extension.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Dtype::U8)]
        dtype: Dtype,
    },
    /// Serve the live session endpoint at ws://HOST:PORT/session.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Initial scene (JSON); the default phantom without lenses otherwise.
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Frames per second streamed to the client.
        #[arg(long, default_value_t = 10.0)]
        fps: f64,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Time DVR + MIP-lens frames on the default phantom.
    Bench {
        #[arg(long, default_value_t = 5)]
        frames: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Dtype {
    U8,
    F32,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected three finite numbers x,y,z, got {s:?}")),
    }
}

/// A failure and the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

/// Runs the command line and returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("loupe: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Replay {
            script,
            out,
            workers,
            check_invariants,
        } => replay(&script, &out, workers, check_invariants),
        Command::Render {
            scene,
            out,
            eye,
            target,
            up,
            fov,
            width,
            height,
            tf,
            step,
            workers,
        } => {
            let file = SceneFile::read(&scene).map_err(Failure::input)?;
            let state = file.instantiate(&parent(&scene)).map_err(Failure::input)?;
            let pose = match (eye, target) {
                (Some(e), Some(t)) => Pose::looking_at(e, t, up),
                _ => state.head,
            };
            let camera = Camera::new(pose, fov, width, height)
                .ok_or_else(|| Failure::input("camera needs 10 < fov < 170 and a non-empty image"))?;
            let tf = match tf {
                Some(p) => read_json::<TransferFunction>(&p)?,
                None => TransferFunction::default(),
            };
            let opts = RenderOptions {
                step,
                workers,
                ..RenderOptions::default()
            };
            let fb = render_frame(&state, &camera, &tf, &opts);
            write_image(&fb, &out).map_err(Failure::input)?;
            println!("wrote {} ({}x{}, sha256 {})", out.display(), width, height, fb.hash_hex());
            Ok(())
        }
        Command::Phantom { spec, out, dtype } => {
            let spec = if spec == "default" {
                PhantomSpec::default()
            } else {
                PhantomSpec::read(Path::new(&spec)).map_err(Failure::input)?
            };
            let grid = generate_phantom(&spec).map_err(Failure::input)?;
            let meta_path = out.with_extension("toml");
            let dtype = match dtype {
                Dtype::U8 => ScalarType::U8,
                Dtype::F32 => ScalarType::F32,
            };
            write_raw(&grid, &out, &meta_path, dtype).map_err(Failure::input)?;
            println!("wrote {} and {}", out.display(), meta_path.display());
            Ok(())
        }
        Command::Serve {
            port,
            scene,
            fps,
            workers,
        } => {
            if !(fps.is_finite() && fps > 0.0) {
                return Err(Failure::input("--fps must be positive"));
            }
            let mut config = ServerConfig {
                frame_interval: Duration::from_secs_f64(1.0 / fps),
                workers,
                ..ServerConfig::default()
            };
            if let Some(p) = scene {
                config.scene = SceneFile::read(&p).map_err(Failure::input)?;
                config.base_dir = parent(&p);
            }
            let addr = bind_address(port).map_err(Failure::input)?;
            let server = Server::bind(addr.as_str(), config).map_err(Failure::input)?;
            println!("serving ws://{}/session", server.local_addr());
            server.run();
            Ok(())
        }
        Command::Bench { frames, json } => {
            let report = bench::run(frames);
            if json {
                println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            } else {
                print!("{report}");
            }
            Ok(())
        }
    }
}

fn parent(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn replay(script_path: &Path, out: &Path, workers: usize, check_invariants: bool) -> Result<(), Failure> {
    let script = SessionScript::read(script_path).map_err(Failure::input)?;
    let opts = ReplayOptions {
        workers,
        check_invariants,
        volume: None,
    };
    let outcome = replay_with(&script, &parent(script_path), &opts).map_err(Failure::input)?;
    std::fs::create_dir_all(out).map_err(|e| Failure::input(format!("{}: {e}", out.display())))?;
    for (name, fb) in &outcome.snapshots {
        let path = out.join(format!("{name}.png"));
        write_image(fb, &path).map_err(Failure::input)?;
    }
    let report = outcome.report();
    let report_path = out.join("report.json");
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&report_path, text + "\n").map_err(|e| Failure::input(format!("{}: {e}", report_path.display())))?;

    for a in &outcome.assertions {
        let status = if a.passed { "ok  " } else { "FAIL" };
        let at = a.timestamp.map_or("start".to_string(), |t| format!("t={t}"));
        println!("{status} {at:>8} {:?}: expected {}, got {}", a.query, a.expected, a.actual);
    }
    let failed = outcome.assertions.iter().filter(|a| !a.passed).count();
    println!(
        "{} events, {} snapshots, {}/{} assertions passed; report at {}",
        outcome.timings.events,
        outcome.snapshots.len(),
        outcome.assertions.len() - failed,
        outcome.assertions.len(),
        report_path.display()
    );
    if failed > 0 {
        return Err(Failure {
            code: EXIT_ASSERTIONS,
            message: format!("{failed} assertion(s) failed"),
        });
    }
    Ok(())
}
