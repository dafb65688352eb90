//! Image files: binary PPM (always) and PNG, chosen by extension.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::Framebuffer;

#[derive(Debug, thiserror::Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Lossless RGBA8 PNG of `fb`.
pub fn encode_png(fb: &Framebuffer) -> Result<Vec<u8>, png::EncodingError> {
    let mut bytes = Vec::new();
    let mut enc = png::Encoder::new(&mut bytes, fb.width, fb.height);
    enc.set_color(png::ColorType::Rgba);
    enc.set_depth(png::BitDepth::Eight);
    let mut w = enc.write_header()?;
    w.write_image_data(&fb.pixels)?;
    w.finish()?;
    Ok(bytes)
}

/// Writes `fb` as PNG when the extension says so, otherwise as binary PPM
/// (`P6 w h 255\n` followed by RGB bytes; alpha is dropped).
pub fn write_image(fb: &Framebuffer, path: &Path) -> Result<(), ImageError> {
    let io = |source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    if is_png(path) {
        let bytes = encode_png(fb).map_err(|e| ImageError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        out.write_all(&bytes).map_err(io)?;
    } else {
        writeln!(out, "P6 {} {} 255", fb.width, fb.height).map_err(io)?;
        out.write_all(&fb.rgb()).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads an image written by [`write_image`] (or any 8-bit PPM / PNG).
pub fn read_image(path: &Path) -> Result<Framebuffer, ImageError> {
    let bytes = std::fs::read(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = |message: String| ImageError::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes).map_err(format)
    } else {
        decode_ppm(&bytes).map_err(format)
    }
}

/// Decodes an in-memory PNG into RGBA8.
pub fn decode_png(bytes: &[u8]) -> Result<Framebuffer, String> {
    let mut dec = png::Decoder::new(std::io::Cursor::new(bytes));
    dec.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = dec.read_info().map_err(|e| e.to_string())?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or("image too large")?];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    let data = &buf[..info.buffer_size()];
    let pixels: Vec<u8> = match info.color_type {
        png::ColorType::Rgba => data.to_vec(),
        png::ColorType::Rgb => data.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect(),
        png::ColorType::Grayscale => data.iter().flat_map(|&g| [g, g, g, 255]).collect(),
        png::ColorType::GrayscaleAlpha => {
            data.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0], p[1]]).collect()
        }
        other => return Err(format!("unsupported PNG color type {other:?}")),
    };
    Ok(Framebuffer {
        width: info.width,
        height: info.height,
        pixels,
    })
}

fn decode_ppm(bytes: &[u8]) -> Result<Framebuffer, String> {
    // Header: magic, width, height, maxval, separated by whitespace (with
    // optional comments), then exactly one whitespace byte.
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err("truncated PPM header".into());
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).map_err(|e| e.to_string())?);
    }
    if fields[0] != "P6" {
        return Err(format!("not a binary PPM (magic {:?})", fields[0]));
    }
    let num = |s: &str| s.parse::<u32>().map_err(|e| format!("bad header field {s:?}: {e}"));
    let (w, h, max) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if max != 255 {
        return Err(format!("unsupported maxval {max}"));
    }
    let data = bytes.get(i + 1..).ok_or("missing pixel data")?;
    let n = w as usize * h as usize;
    if data.len() != 3 * n {
        return Err(format!("expected {} pixel bytes, found {}", 3 * n, data.len()));
    }
    Ok(Framebuffer {
        width: w,
        height: h,
        pixels: data.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect(),
    })
}
