//! A single type over every supported margin transform, with its JSON form.

use serde::{Deserialize, Serialize};

use super::{GenWTransform, InnTransform, PssmWTransform, VGenerator, VTransform, WMap, WTransform};
use crate::dist::BaseDistribution;
use crate::error::Result;
use crate::pcsm::{PcsmFunction, PiecewiseLinearMap};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TransformDescriptor {
    Generic {
        base: BaseDistribution,
        #[serde(rename = "T")]
        t: PcsmFunction,
    },
    Pssm {
        t: Vec<f64>,
        r: Vec<u8>,
        base: BaseDistribution,
    },
    #[serde(rename = "vtransform")]
    VTransform { delta: f64, generator: VGenerator },
    Inn { theta: f64 },
    Linear {
        breaks: Vec<f64>,
        slopes: Vec<f64>,
        intercepts: Vec<f64>,
    },
    Identity,
}

/// A margin transform. Bases with atoms give [`Transform::Generalised`],
/// which has no piecewise inverse.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TransformDescriptor", into = "TransformDescriptor")]
pub enum Transform {
    Generic(WTransform),
    Generalised(GenWTransform),
    Pssm(PssmWTransform),
    V(VTransform),
    Inn(InnTransform),
    Linear(PiecewiseLinearMap),
}

impl TryFrom<TransformDescriptor> for Transform {
    type Error = crate::error::Error;

    fn try_from(d: TransformDescriptor) -> Result<Self> {
        Ok(match d {
            TransformDescriptor::Generic { base, t } => {
                if base.is_continuous() {
                    Transform::Generic(WTransform::build(base, t)?)
                } else {
                    Transform::Generalised(GenWTransform::build(base, t)?)
                }
            }
            TransformDescriptor::Pssm { t, r, base } => {
                Transform::Pssm(PssmWTransform::new(t, r, base)?)
            }
            TransformDescriptor::VTransform { delta, generator } => {
                Transform::V(VTransform::new(delta, generator)?)
            }
            TransformDescriptor::Inn { theta } => Transform::Inn(InnTransform::new(theta)?),
            TransformDescriptor::Linear {
                breaks,
                slopes,
                intercepts,
            } => Transform::Linear(PiecewiseLinearMap::new(breaks, slopes, intercepts)?),
            TransformDescriptor::Identity => Transform::Linear(PiecewiseLinearMap::identity()),
        })
    }
}

impl From<Transform> for TransformDescriptor {
    fn from(t: Transform) -> Self {
        match t {
            Transform::Generic(w) => TransformDescriptor::Generic {
                base: w.base().clone(),
                t: w.transform().clone(),
            },
            Transform::Generalised(w) => TransformDescriptor::Generic {
                base: w.base().clone(),
                t: w.transform().clone(),
            },
            Transform::Pssm(w) => TransformDescriptor::Pssm {
                t: w.knots().to_vec(),
                r: w.directions().to_vec(),
                base: w.base().clone(),
            },
            Transform::V(w) => TransformDescriptor::VTransform {
                delta: w.fulcrum(),
                generator: w.generator().clone(),
            },
            Transform::Inn(w) => TransformDescriptor::Inn { theta: w.theta() },
            Transform::Linear(m) => TransformDescriptor::Linear {
                breaks: m.breaks().to_vec(),
                slopes: m.slopes().to_vec(),
                intercepts: m.intercepts().to_vec(),
            },
        }
    }
}

impl Transform {
    pub fn identity() -> Self {
        Transform::Linear(PiecewiseLinearMap::identity())
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Transform::Generalised(w) => w.eval(u),
            _ => self.as_map().expect("piecewise").eval(u),
        }
    }

    /// The piecewise interface, absent for generalised transforms.
    pub fn as_map(&self) -> Option<&dyn WMap> {
        match self {
            Transform::Generic(w) => Some(w),
            Transform::Generalised(_) => None,
            Transform::Pssm(w) => Some(w),
            Transform::V(w) => Some(w),
            Transform::Inn(w) => Some(w),
            Transform::Linear(m) => Some(m),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Transform::Linear(m) if *m == PiecewiseLinearMap::identity())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Transform::Generic(_) => "generic",
            Transform::Generalised(_) => "generalised",
            Transform::Pssm(_) => "pssm",
            Transform::V(_) => "vtransform",
            Transform::Inn(_) => "inn",
            Transform::Linear(_) => "linear",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors_round_trip() {
        let cases = [
            r#"{"type":"inn","theta":20.0}"#,
            r#"{"type":"pssm","t":[0.0,0.5,1.0],"r":[0,1],"base":{"kind":"power_law","exponent":2.0}}"#,
            r#"{"type":"vtransform","delta":0.25,"generator":{"form":"root"}}"#,
            r#"{"type":"linear","breaks":[0.0,0.5,1.0],"slopes":[-2.0,2.0],"intercepts":[1.0,-1.0]}"#,
        ];
        for json in cases {
            let t: Transform = serde_json::from_str(json).unwrap();
            let back = serde_json::to_string(&t).unwrap();
            let again: Transform = serde_json::from_str(&back).unwrap();
            for u in [0.1, 0.4, 0.8] {
                assert_eq!(t.eval(u), again.eval(u));
            }
        }
    }

    #[test]
    fn atoms_select_generalised() {
        let json = r#"{"type":"generic","base":{"kind":"bernoulli","p":0.3},
            "T":{"change_points":[0.0,1.0],"pieces":[{"form":"linear","slope":-1.0,"intercept":1.0}]}}"#;
        let t: Transform = serde_json::from_str(json).unwrap();
        assert!(matches!(t, Transform::Generalised(_)));
        assert!(t.as_map().is_none());
        assert!((t.eval(0.2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(serde_json::from_str::<Transform>(r#"{"type":"inn","theta":-1.0}"#).is_err());
        assert!(serde_json::from_str::<Transform>(r#"{"type":"vtransform","delta":1.5,"generator":{"form":"linear"}}"#).is_err());
    }
}
