//! Deterministic layered phantom with a faint buried ellipsoid.
//!
//! The base field is a stack of horizontal material layers along grid z,
//! joined by cosine-smoothed steps four voxels wide. A small ellipsoid adds a
//! constant offset to the layer it sits in. Everything is expressed in unit-cube
//! fractions, where voxel `i` of `n` sits at fraction `i / (n - 1)`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::volume::{VolumeError, VolumeGrid};

/// Width of the smoothed transition between two layers, in voxels.
pub const TRANSITION_VOXELS: f64 = 4.0;

#[derive(Debug, thiserror::Error)]
pub enum PhantomError {
    #[error("invalid phantom spec: {0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

/// One material layer: occupies z-fractions up to `z_end` with constant `value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub z_end: f64,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wreck {
    /// Center as unit-cube fractions.
    pub center: [f64; 3],
    /// Semi-axes as unit-cube fractions.
    pub semi_axes: [f64; 3],
    /// Value offset added inside the ellipsoid.
    pub delta: f64,
}

impl Wreck {
    /// Point-in-ellipsoid test in fraction space.
    pub fn contains(&self, f: [f64; 3]) -> bool {
        let mut s = 0.0;
        for a in 0..3 {
            let d = (f[a] - self.center[a]) / self.semi_axes[a];
            s += d * d;
        }
        s <= 1.0
    }
}

/// Parameters of the phantom. `extent` is the size of the voxel-center bounding
/// box in meters and `center` its midpoint in world space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub extent: [f64; 3],
    #[serde(default)]
    pub center: [f64; 3],
    pub layers: Vec<Layer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wreck: Option<Wreck>,
}

impl Default for PhantomSpec {
    /// Water, sediment, seabed and bedrock with the wreck inside the seabed,
    /// 256×128×128 voxels at 5 mm.
    fn default() -> Self {
        Self {
            dims: [256, 128, 128],
            extent: [255.0 * 0.005, 127.0 * 0.005, 127.0 * 0.005],
            center: [0.0; 3],
            layers: vec![
                Layer { z_end: 0.35, value: 0.15 },
                Layer { z_end: 0.55, value: 0.45 },
                Layer { z_end: 0.75, value: 0.65 },
                Layer { z_end: 1.0, value: 0.85 },
            ],
            wreck: Some(Wreck {
                center: [0.5, 0.5, 0.62],
                semi_axes: [0.18, 0.06, 0.025],
                delta: 0.02,
            }),
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: String| Err(PhantomError::Invalid(m));
        if self.dims.iter().any(|&d| d < 2) {
            return bad(format!("dims {:?} must be at least 2 per axis", self.dims));
        }
        if self.extent.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return bad(format!("extent {:?} must be positive", self.extent));
        }
        if self.center.iter().any(|c| !c.is_finite()) {
            return bad("center must be finite".into());
        }
        if self.layers.is_empty() {
            return bad("at least one layer is required".into());
        }
        let mut prev = 0.0;
        for l in &self.layers {
            if !(l.z_end > prev && l.z_end <= 1.0) {
                return bad(format!(
                    "layer boundaries must increase strictly within (0, 1], got {}",
                    l.z_end
                ));
            }
            if !(0.0..=1.0).contains(&l.value) {
                return bad(format!("layer value {} outside [0, 1]", l.value));
            }
            prev = l.z_end;
        }
        if let Some(w) = &self.wreck {
            for a in 0..3 {
                if !(w.semi_axes[a] > 0.0)
                    || w.center[a] - w.semi_axes[a] < 0.0
                    || w.center[a] + w.semi_axes[a] > 1.0
                {
                    return bad("wreck ellipsoid must lie inside the unit cube".into());
                }
            }
            if self
                .layers
                .iter()
                .any(|l| !(0.0..=1.0).contains(&(l.value + w.delta)))
            {
                return bad(format!("layer value + delta {} leaves [0, 1]", w.delta));
            }
        }
        Ok(())
    }

    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.extent[a] / (self.dims[a] - 1) as f64)
    }

    pub fn origin(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.center[a] - 0.5 * self.extent[a])
    }

    /// The same spec without the wreck.
    pub fn without_wreck(&self) -> Self {
        Self {
            wreck: None,
            ..self.clone()
        }
    }

    /// Layered base value at z-fraction `fz`.
    pub fn base_value(&self, fz: f64) -> f64 {
        let half_band = 0.5 * TRANSITION_VOXELS / (self.dims[2] - 1) as f64;
        // Nearest internal boundary whose band contains fz.
        let mut best: Option<(usize, f64)> = None;
        for (i, l) in self.layers.iter().enumerate().take(self.layers.len() - 1) {
            let d = (fz - l.z_end).abs();
            if d < half_band && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            let (lo, hi) = (self.layers[i].value, self.layers[i + 1].value);
            let s = (fz - (self.layers[i].z_end - half_band)) / (2.0 * half_band);
            return lo + (hi - lo) * 0.5 * (1.0 - (PI * s).cos());
        }
        let layer = self
            .layers
            .iter()
            .find(|l| fz <= l.z_end)
            .unwrap_or_else(|| self.layers.last().expect("validated non-empty"));
        layer.value
    }

    pub fn read(path: &Path) -> Result<Self, PhantomError> {
        let text = std::fs::read_to_string(path).map_err(|e| PhantomError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let spec: Self = toml::from_str(&text).map_err(|e| PhantomError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("phantom spec serializes")
    }
}

/// Voxel fraction coordinates in the unit cube.
pub fn voxel_fraction(dims: [usize; 3], i: usize, j: usize, k: usize) -> [f64; 3] {
    [
        i as f64 / (dims[0] - 1) as f64,
        j as f64 / (dims[1] - 1) as f64,
        k as f64 / (dims[2] - 1) as f64,
    ]
}

pub fn generate_phantom(spec: &PhantomSpec) -> Result<VolumeGrid, PhantomError> {
    spec.validate()?;
    let [nx, ny, nz] = spec.dims;
    let mut values = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        let base = spec.base_value(k as f64 / (nz - 1) as f64);
        for j in 0..ny {
            for i in 0..nx {
                let mut v = base;
                if let Some(w) = &spec.wreck {
                    if w.contains(voxel_fraction(spec.dims, i, j, k)) {
                        v += w.delta;
                    }
                }
                values.push(v.clamp(0.0, 1.0));
            }
        }
    }
    Ok(VolumeGrid::new(spec.dims, spec.spacing(), spec.origin(), values)?)
}
