use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::render::{read_image, Framebuffer, ImageError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldenReport {
    /// Largest absolute per-channel difference (RGB).
    pub max_delta: u8,
    /// Pixels with some channel differing by more than the tolerance.
    pub exceeding: usize,
    pub pass: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum GoldenError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("resolution {actual:?} does not match golden {expected:?}")]
    Resolution {
        expected: (u32, u32),
        actual: (u32, u32),
    },
}

pub fn compare_frames(
    fb: &Framebuffer,
    golden: &Framebuffer,
    tolerance: u8,
) -> Result<GoldenReport, GoldenError> {
    if (fb.width, fb.height) != (golden.width, golden.height) {
        return Err(GoldenError::Resolution {
            expected: (golden.width, golden.height),
            actual: (fb.width, fb.height),
        });
    }
    let mut max_delta = 0;
    let mut exceeding = 0;
    for (a, b) in fb.pixels.chunks_exact(4).zip(golden.pixels.chunks_exact(4)) {
        let d = (0..3).map(|c| a[c].abs_diff(b[c])).max().unwrap_or(0);
        max_delta = max_delta.max(d);
        if d > tolerance {
            exceeding += 1;
        }
    }
    Ok(GoldenReport {
        max_delta,
        exceeding,
        pass: exceeding == 0,
    })
}

/// Compares `fb` against the image at `golden_path`.
pub fn compare_golden(
    fb: &Framebuffer,
    golden_path: &Path,
    tolerance: u8,
) -> Result<GoldenReport, GoldenError> {
    let golden = read_image(golden_path)?;
    compare_frames(fb, &golden, tolerance)
}
