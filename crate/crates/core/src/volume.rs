//! Regular scalar grids: ingestion, sampling and derivatives.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum VolumeError {
    #[error("{path}: expected {expected} bytes for the declared dims and dtype, found {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("unsupported scalar encoding {0:?} (expected \"u8\" or \"f32\")")]
    UnsupportedFormat(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dims {dims:?} are not divisible by factor {factor:?}")]
    NotDivisible { dims: [usize; 3], factor: [usize; 3] },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed metadata: {message}")]
    Meta { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> VolumeError + '_ {
    move |source| VolumeError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// On-disk scalar encoding of a RAW file. Always little-endian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarType {
    U8,
    F32,
}

impl ScalarType {
    pub fn parse(s: &str) -> Result<Self, VolumeError> {
        match s {
            "u8" => Ok(Self::U8),
            "f32" => Ok(Self::F32),
            other => Err(VolumeError::UnsupportedFormat(other.to_string())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::U8 => "u8",
            Self::F32 => "f32",
        }
    }

    pub fn size(self) -> usize {
        match self {
            Self::U8 => 1,
            Self::F32 => 4,
        }
    }
}

/// Sidecar metadata for a RAW volume (TOML key/value text).
///
/// ```toml
/// dims = [512, 256, 256]
/// spacing = [0.15625, 0.15625, 0.015625]
/// origin = [0.0, 0.0, 0.0]
/// dtype = "u8"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub dtype: String,
}

/// Physical extent of the reduced sonar survey the default meta is modeled on, meters.
pub const SONAR_EXTENT: [f64; 3] = [80.0, 40.0, 4.0];

impl VolumeMeta {
    /// Meta whose spacing spreads `extent` evenly over `dims` (spacing = extent / dims).
    pub fn for_extent(dims: [usize; 3], extent: [f64; 3], dtype: ScalarType) -> Self {
        Self {
            dims,
            spacing: [0, 1, 2].map(|i| extent[i] / dims[i] as f64),
            origin: [0.0; 3],
            dtype: dtype.as_str().to_string(),
        }
    }

    pub fn scalar_type(&self) -> Result<ScalarType, VolumeError> {
        ScalarType::parse(&self.dtype)
    }

    pub fn expected_bytes(&self) -> Result<u64, VolumeError> {
        let n = self.dims.iter().map(|&d| d as u64).product::<u64>();
        Ok(n * self.scalar_type()?.size() as u64)
    }

    pub fn read(path: &Path) -> Result<Self, VolumeError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| VolumeError::Meta {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), VolumeError> {
        let text = toml::to_string(self).expect("meta serializes");
        fs::write(path, text).map_err(io_err(path))
    }
}

/// Regular grid of scalars in `[0, 1]`, x-fastest then y then z.
///
/// World position of voxel `(i, j, k)` is `origin + (i, j, k) ⊙ spacing`, so the
/// voxel centers span the box `[origin, origin + (dims - 1) ⊙ spacing]`.
#[derive(Clone, Debug)]
pub struct VolumeGrid {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    values: Vec<f64>,
    inv_spacing: [f64; 3],
    // Sampling helpers: index of the last voxel per axis, first voxel of the
    // last cell (0 for a flat axis), and the memory stride (0 for a flat axis).
    last: [f64; 3],
    last_cell: [i32; 3],
    stride: [usize; 3],
    hi: Vec3,
    gradient_reference: OnceLock<f64>,
}

impl PartialEq for VolumeGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.spacing == other.spacing
            && self.origin == other.origin
            && self.values == other.values
    }
}

impl VolumeGrid {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        values: Vec<f64>,
    ) -> Result<Self, VolumeError> {
        if dims.iter().any(|&d| d == 0 || d > i32::MAX as usize) {
            return Err(VolumeError::InvalidGrid(format!(
                "dims {dims:?} must be positive and below 2^31"
            )));
        }
        if spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(VolumeError::InvalidGrid(format!(
                "spacing {spacing:?} must be positive"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(VolumeError::InvalidGrid("origin must be finite".into()));
        }
        let n = dims[0] * dims[1] * dims[2];
        if values.len() != n {
            return Err(VolumeError::InvalidGrid(format!(
                "{} values for {n} voxels",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(VolumeError::InvalidGrid(format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            values,
            inv_spacing: spacing.map(|s| 1.0 / s),
            last: dims.map(|d| (d - 1) as f64),
            last_cell: dims.map(|d| d.saturating_sub(2) as i32),
            stride: [0, 1, 2].map(|a| {
                if dims[a] > 1 {
                    dims[..a].iter().product()
                } else {
                    0
                }
            }),
            hi: Vec3::from([0, 1, 2].map(|a| origin[a] + (dims[a] - 1) as f64 * spacing[a])),
            gradient_reference: OnceLock::new(),
        })
    }

    /// Builds a grid by evaluating `f` at every voxel's world position (clamped to `[0, 1]`).
    pub fn from_fn(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        f: impl Fn(Vec3) -> f64,
    ) -> Result<Self, VolumeError> {
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let p = Vec3::new(
                        origin[0] + i as f64 * spacing[0],
                        origin[1] + j as f64 * spacing[1],
                        origin[2] + k as f64 * spacing[2],
                    );
                    values.push(f(p).clamp(0.0, 1.0));
                }
            }
        }
        Self::new(dims, spacing, origin, values)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn voxel_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin[0] + i as f64 * self.spacing[0],
            self.origin[1] + j as f64 * self.spacing[1],
            self.origin[2] + k as f64 * self.spacing[2],
        )
    }

    /// Lower and upper corners of the voxel-center bounding box.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        (Vec3::from(self.origin), self.hi)
    }

    /// Trilinear interpolation; 0.0 outside the voxel-center bounding box.
    #[inline]
    pub fn sample_trilinear(&self, p: &Vec3) -> f64 {
        for a in 0..3 {
            let g = (p[a] - self.origin[a]) * self.inv_spacing[a];
            // Written so that NaN also lands in the rejecting branch.
            if !(g >= 0.0 && g <= self.last[a]) {
                return 0.0;
            }
        }
        self.sample_trilinear_clamped(p)
    }

    /// Trilinear interpolation at `p` pulled onto the voxel-center box.
    /// Agrees with [`Self::sample_trilinear`] inside the box.
    #[inline]
    pub fn sample_trilinear_clamped(&self, p: &Vec3) -> f64 {
        let mut i0 = 0;
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let g = ((p[a] - self.origin[a]) * self.inv_spacing[a]).clamp(0.0, self.last[a]);
            // `as` truncates, which is floor for g ≥ 0 and avoids a libm call;
            // i32 rather than usize keeps both conversions single instructions.
            let i = (g as i32).min(self.last_cell[a]);
            i0 += i as usize * self.stride[a];
            frac[a] = g - f64::from(i);
        }
        let [sx, sy, sz] = self.stride;
        let v = &self.values;
        let [fx, fy, fz] = frac;
        let c00 = lerp(v[i0], v[i0 + sx], fx);
        let c10 = lerp(v[i0 + sy], v[i0 + sy + sx], fx);
        let c01 = lerp(v[i0 + sz], v[i0 + sz + sx], fx);
        let c11 = lerp(v[i0 + sz + sy], v[i0 + sz + sy + sx], fx);
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }

    /// Central-difference gradient with one voxel spacing per axis as the step.
    /// Units are value per meter.
    ///
    /// Probe points that leave the voxel-center box are pulled back onto its
    /// face (a one-sided difference there), so the data edge does not read as
    /// a step down to zero. Zero outside the box.
    #[inline]
    pub fn gradient_central(&self, p: &Vec3) -> Vec3 {
        let mut g = Vec3::zeros();
        let (lo, hi) = self.bounds();
        if (0..3).any(|a| !(p[a] >= lo[a] && p[a] <= hi[a])) {
            return g;
        }
        for a in 0..3 {
            let h = self.spacing[a];
            let mut fwd = *p;
            let mut back = *p;
            fwd[a] = (p[a] + h).min(hi[a]);
            back[a] = (p[a] - h).max(lo[a]);
            let span = fwd[a] - back[a];
            if span > 0.0 {
                g[a] = (self.sample_trilinear(&fwd) - self.sample_trilinear(&back)) / span;
            }
        }
        g
    }

    /// Normalization constant for the gradient-magnitude field: the 95th
    /// percentile of |∇f| over interior voxel centers. Computed once per grid.
    pub fn gradient_reference(&self) -> f64 {
        *self.gradient_reference.get_or_init(|| {
            let [nx, ny, nz] = self.dims;
            let mut mags = Vec::new();
            if nx >= 3 && ny >= 3 && nz >= 3 {
                mags.reserve((nx - 2) * (ny - 2) * (nz - 2));
                for k in 1..nz - 1 {
                    for j in 1..ny - 1 {
                        for i in 1..nx - 1 {
                            mags.push(self.gradient_central(&self.voxel_position(i, j, k)).norm());
                        }
                    }
                }
            }
            if mags.is_empty() {
                return 1.0;
            }
            let rank = ((mags.len() - 1) as f64 * 0.95).round() as usize;
            let (_, p95, _) = mags.select_nth_unstable_by(rank, f64::total_cmp);
            let p95 = *p95;
            if p95 > 0.0 {
                return p95;
            }
            let max = mags.iter().copied().fold(0.0, f64::max);
            if max > 0.0 {
                max
            } else {
                1.0
            }
        })
    }
}

/// Exact at both ends of the interval.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a * (1.0 - t) + b * t
}

/// Reads a RAW volume described by `meta`, rescaling values into `[0, 1]`
/// (u8: `v / 255`; f32: clamped, NaN mapped to 0).
pub fn load_raw(data_path: &Path, meta: &VolumeMeta) -> Result<VolumeGrid, VolumeError> {
    let dtype = meta.scalar_type()?;
    let expected = meta.expected_bytes()?;
    let actual = fs::metadata(data_path).map_err(io_err(data_path))?.len();
    if actual != expected {
        return Err(VolumeError::SizeMismatch {
            path: data_path.to_path_buf(),
            expected,
            actual,
        });
    }
    let bytes = fs::read(data_path).map_err(io_err(data_path))?;
    let values: Vec<f64> = match dtype {
        ScalarType::U8 => bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        ScalarType::F32 => bytes
            .chunks_exact(4)
            .map(|c| {
                let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
                if v.is_nan() {
                    0.0
                } else {
                    v.clamp(0.0, 1.0)
                }
            })
            .collect(),
    };
    VolumeGrid::new(meta.dims, meta.spacing, meta.origin, values)
}

/// Writes `grid` as a RAW file plus its metadata sidecar.
pub fn write_raw(
    grid: &VolumeGrid,
    data_path: &Path,
    meta_path: &Path,
    dtype: ScalarType,
) -> Result<VolumeMeta, VolumeError> {
    let mut bytes = Vec::with_capacity(grid.values.len() * dtype.size());
    match dtype {
        ScalarType::U8 => bytes.extend(grid.values.iter().map(|v| (v * 255.0).round() as u8)),
        ScalarType::F32 => {
            for v in &grid.values {
                bytes.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    let mut f = fs::File::create(data_path).map_err(io_err(data_path))?;
    f.write_all(&bytes).map_err(io_err(data_path))?;
    let meta = VolumeMeta {
        dims: grid.dims,
        spacing: grid.spacing,
        origin: grid.origin,
        dtype: dtype.as_str().to_string(),
    };
    meta.write(meta_path)?;
    Ok(meta)
}

/// Box-filter reduction by an integer factor per axis. The new voxel centers
/// sit at the centers of the averaged blocks.
pub fn downsample(grid: &VolumeGrid, factor: [usize; 3]) -> Result<VolumeGrid, VolumeError> {
    if (0..3).any(|a| factor[a] == 0 || !grid.dims[a].is_multiple_of(factor[a])) {
        return Err(VolumeError::NotDivisible {
            dims: grid.dims,
            factor,
        });
    }
    let out_dims = [0, 1, 2].map(|a| grid.dims[a] / factor[a]);
    let block = (factor[0] * factor[1] * factor[2]) as f64;
    let mut values = Vec::with_capacity(out_dims.iter().product());
    for k in 0..out_dims[2] {
        for j in 0..out_dims[1] {
            for i in 0..out_dims[0] {
                let mut sum = 0.0;
                for dk in 0..factor[2] {
                    for dj in 0..factor[1] {
                        for di in 0..factor[0] {
                            sum += grid.value(
                                i * factor[0] + di,
                                j * factor[1] + dj,
                                k * factor[2] + dk,
                            );
                        }
                    }
                }
                values.push((sum / block).clamp(0.0, 1.0));
            }
        }
    }
    let spacing = [0, 1, 2].map(|a| grid.spacing[a] * factor[a] as f64);
    let origin =
        [0, 1, 2].map(|a| grid.origin[a] + (factor[a] - 1) as f64 * 0.5 * grid.spacing[a]);
    VolumeGrid::new(out_dims, spacing, origin, values)
}
