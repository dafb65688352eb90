//! Scene queries used by script assertions.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::interaction::InteractionMode;
use crate::lens::{Face, LensId};
use crate::scene::SceneState;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneQuery {
    LensCount,
    /// `{"position": [..], "orientation": [w, x, y, z]}`
    LensPose { id: LensId },
    LensRadius { id: LensId },
    /// Effect labels in stack order, e.g. `["derivative", "mip"]`. An atomic
    /// lens lists just its front effect.
    LensStack { id: LensId },
    /// Mode name, e.g. `"grabbing"`.
    Mode,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error("no lens {0}")]
    UnknownLens(LensId),
}

impl SceneQuery {
    pub fn evaluate(&self, scene: &SceneState, mode: &InteractionMode) -> Result<Value, QueryError> {
        let lens = |id: LensId| scene.lens(id).ok_or(QueryError::UnknownLens(id));
        Ok(match self {
            Self::LensCount => json!(scene.lenses.len()),
            Self::LensPose { id } => serde_json::to_value(lens(*id)?.pose).expect("pose serializes"),
            Self::LensRadius { id } => json!(lens(*id)?.radius()),
            Self::LensStack { id } => {
                let effects = lens(*id)?.contribution(Face::Front);
                json!(effects.iter().map(|e| e.label()).collect::<Vec<_>>())
            }
            Self::Mode => json!(mode.name()),
        })
    }
}

/// Structural equality with numbers compared to within `tol`.
pub(crate) fn values_match(expected: &Value, actual: &Value, tol: f64) -> bool {
    match (expected, actual) {
        (Value::Number(a), Value::Number(b)) => match (a.as_f64(), b.as_f64()) {
            (Some(a), Some(b)) => (a - b).abs() <= tol,
            _ => a == b,
        },
        (Value::Array(a), Value::Array(b)) => {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| values_match(x, y, tol))
        }
        (Value::Object(a), Value::Object(b)) => {
            a.len() == b.len()
                && a.iter()
                    .all(|(k, x)| b.get(k).is_some_and(|y| values_match(x, y, tol)))
        }
        _ => expected == actual,
    }
}
