//! Lens effects and how stacked effects compose.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldTransform {
    /// Replace the scalar by its normalized gradient magnitude (first derivative).
    GradientMagnitude,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    EmissionAbsorption,
    MaximumIntensity,
}

impl FieldTransform {
    /// Registered parameter keys and their defaults.
    pub fn schema(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::GradientMagnitude => &[("g_max_scale", 1.0)],
        }
    }
}

impl Integrator {
    pub fn schema(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::EmissionAbsorption => &[("opacity_scale", 1.0)],
            Self::MaximumIntensity => &[("gain", 1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EffectError {
    #[error("an effect needs a field transform, an integrator, or both")]
    Empty,
    #[error("parameter {0:?} is not registered for this effect")]
    UnknownParam(String),
    #[error("parameter {0:?} must be finite")]
    NonFinite(String),
}

/// A (field transform, integrator) pair plus named parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EffectRepr", into = "EffectRepr")]
pub struct EffectDescriptor {
    field_transform: Option<FieldTransform>,
    integrator: Option<Integrator>,
    params: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct EffectRepr {
    field_transform: Option<FieldTransform>,
    integrator: Option<Integrator>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

impl TryFrom<EffectRepr> for EffectDescriptor {
    type Error = EffectError;

    fn try_from(r: EffectRepr) -> Result<Self, Self::Error> {
        Self::with_params(r.field_transform, r.integrator, r.params)
    }
}

impl From<EffectDescriptor> for EffectRepr {
    fn from(e: EffectDescriptor) -> Self {
        EffectRepr {
            field_transform: e.field_transform,
            integrator: e.integrator,
            params: e.params,
        }
    }
}

impl EffectDescriptor {
    pub fn new(
        field_transform: Option<FieldTransform>,
        integrator: Option<Integrator>,
    ) -> Result<Self, EffectError> {
        Self::with_params(field_transform, integrator, BTreeMap::new())
    }

    pub fn with_params(
        field_transform: Option<FieldTransform>,
        integrator: Option<Integrator>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self, EffectError> {
        if field_transform.is_none() && integrator.is_none() {
            return Err(EffectError::Empty);
        }
        let e = Self {
            field_transform,
            integrator,
            params: BTreeMap::new(),
        };
        for (k, v) in &params {
            if !e.schema().any(|(key, _)| key == k) {
                return Err(EffectError::UnknownParam(k.clone()));
            }
            if !v.is_finite() {
                return Err(EffectError::NonFinite(k.clone()));
            }
        }
        Ok(Self { params, ..e })
    }

    /// First derivative: gradient magnitude, no integrator of its own.
    pub fn derivative() -> Self {
        Self::new(Some(FieldTransform::GradientMagnitude), None).expect("valid")
    }

    pub fn mip() -> Self {
        Self::new(None, Some(Integrator::MaximumIntensity)).expect("valid")
    }

    /// Plain emission/absorption, identical to the base rendering.
    pub fn plain() -> Self {
        Self::new(None, Some(Integrator::EmissionAbsorption)).expect("valid")
    }

    pub fn field_transform(&self) -> Option<FieldTransform> {
        self.field_transform
    }

    pub fn integrator(&self) -> Option<Integrator> {
        self.integrator
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Registered keys for this descriptor: transform keys, then integrator keys.
    pub fn schema(&self) -> impl Iterator<Item = (&'static str, f64)> {
        let t = self.field_transform.map(|t| t.schema()).unwrap_or(&[]);
        let i = self.integrator.map(|i| i.schema()).unwrap_or(&[]);
        i.iter().chain(t.iter()).copied()
    }

    /// Value of a registered parameter, falling back to its default.
    pub fn param(&self, key: &str) -> Option<f64> {
        self.params
            .get(key)
            .copied()
            .or_else(|| self.schema().find(|(k, _)| *k == key).map(|(_, d)| d))
    }

    pub fn set_param(&mut self, key: &str, value: f64) -> Result<(), EffectError> {
        if !self.schema().any(|(k, _)| k == key) {
            return Err(EffectError::UnknownParam(key.to_string()));
        }
        if !value.is_finite() {
            return Err(EffectError::NonFinite(key.to_string()));
        }
        self.params.insert(key.to_string(), value);
        Ok(())
    }

    /// Short human label, e.g. `"derivative+mip"`.
    pub fn label(&self) -> String {
        let t = self.field_transform.map(|_| "derivative");
        let i = self.integrator.map(|i| match i {
            Integrator::EmissionAbsorption => "dvr",
            Integrator::MaximumIntensity => "mip",
        });
        let parts: Vec<_> = [t, i].into_iter().flatten().collect();
        if parts.is_empty() {
            "plain".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// What a stack of effects reduces to for one ray segment.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveShading {
    /// Applied innermost-first: `transforms[0]` acts on the raw scalar field.
    pub transforms: Vec<FieldTransform>,
    pub integrator: Integrator,
    pub params: BTreeMap<String, f64>,
}

impl Default for EffectiveShading {
    fn default() -> Self {
        compose_effects(&[])
    }
}

impl EffectiveShading {
    pub fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

/// Transforms concatenate in stack order, the last integrator set wins
/// (emission/absorption when none is set) and later parameters override
/// earlier ones with the same key. Duplicates are kept.
pub fn compose_effects(stack: &[EffectDescriptor]) -> EffectiveShading {
    let mut transforms = Vec::new();
    let mut integrator = Integrator::EmissionAbsorption;
    let mut params = BTreeMap::new();
    for e in stack {
        if let Some(t) = e.field_transform {
            transforms.push(t);
        }
        if let Some(i) = e.integrator {
            integrator = i;
        }
        params.extend(e.params.iter().map(|(k, v)| (k.clone(), *v)));
    }
    EffectiveShading {
        transforms,
        integrator,
        params,
    }
}
