//! The five time-varying AR models: homoscedastic TV-AR(n) and TV-AR(1) with
//! GARCH(1,1), GARCH-in-mean, threshold GARCH and asymmetric GARCH variance.

mod instance;
mod transform;

use std::fmt;
use std::str::FromStr;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

pub use instance::{ModelInstance, VARIANCE_FLOOR};
pub use transform::{from_unconstrained, to_unconstrained};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("parameter `{field}` violates its constraint: {reason}")]
    Constraint { field: String, reason: String },
    #[error("parameter `{field}` is on the boundary of its constraint set")]
    Boundary { field: String },
    #[error("expected {expected} parameters for {spec}, got {got}")]
    Arity { spec: String, expected: usize, got: usize },
    #[error("invalid parameter JSON: {0}")]
    Json(String),
    #[error("unknown model `{0}`; expected one of tvar, garch, garchm, tgarch, agarch")]
    UnknownModel(String),
    #[error("AR order must be at least 1")]
    ZeroOrder,
    #[error("{needed} observations are needed to start the filter, got {got}")]
    TooShort { needed: usize, got: usize },
}

/// Which model to estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    /// Homoscedastic AR(n) with random-walk coefficients.
    Tvar { order: usize },
    Garch,
    GarchM,
    TGarch,
    AGarch,
}

impl ModelSpec {
    pub fn tvar(order: usize) -> Result<Self, ModelError> {
        if order == 0 {
            return Err(ModelError::ZeroOrder);
        }
        Ok(ModelSpec::Tvar { order })
    }

    /// The five specifications in the usual table order.
    pub fn all(ar_order: usize) -> Vec<ModelSpec> {
        vec![
            ModelSpec::Tvar { order: ar_order.max(1) },
            ModelSpec::Garch,
            ModelSpec::TGarch,
            ModelSpec::AGarch,
            ModelSpec::GarchM,
        ]
    }

    /// Short command-line name.
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Tvar { .. } => "tvar",
            ModelSpec::Garch => "garch",
            ModelSpec::GarchM => "garchm",
            ModelSpec::TGarch => "tgarch",
            ModelSpec::AGarch => "agarch",
        }
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpec::Tvar { order } => format!("Time-varying AR({order})"),
            ModelSpec::Garch => "GARCH(1,1)".into(),
            ModelSpec::GarchM => "GARCH-M(1,1)".into(),
            ModelSpec::TGarch => "T-GARCH(1,1)".into(),
            ModelSpec::AGarch => "A-GARCH(1,1)".into(),
        }
    }

    pub fn from_name(name: &str, ar_order: usize) -> Result<Self, ModelError> {
        match name {
            "tvar" => ModelSpec::tvar(ar_order),
            "garch" => Ok(ModelSpec::Garch),
            "garchm" => Ok(ModelSpec::GarchM),
            "tgarch" => Ok(ModelSpec::TGarch),
            "agarch" => Ok(ModelSpec::AGarch),
            other => Err(ModelError::UnknownModel(other.to_string())),
        }
    }

    /// Names of the estimated parameters, in the order used by
    /// [`Theta::to_vec`].
    pub fn param_names(&self) -> Vec<String> {
        let fixed: &[&str] = match self {
            ModelSpec::Tvar { order } => {
                let mut names: Vec<String> = (1..=*order).map(|i| format!("sigma2_w_{i}")).collect();
                names.push("sigma2_eps".into());
                return names;
            }
            ModelSpec::Garch => &["omega", "a1", "b1", "sigma2_w"],
            ModelSpec::GarchM => &["omega", "a1", "b1", "sigma2_w", "delta"],
            ModelSpec::TGarch => &["omega", "a1_plus", "a1_minus", "b1", "sigma2_w"],
            ModelSpec::AGarch => &["omega", "a1", "a1_plus", "b1", "sigma2_w"],
        };
        fixed.iter().map(|s| s.to_string()).collect()
    }

    /// Number of estimated parameters `k`.
    pub fn param_count(&self) -> usize {
        match self {
            ModelSpec::Tvar { order } => order + 1,
            ModelSpec::Garch => 4,
            _ => 5,
        }
    }

    pub fn is_garch(&self) -> bool {
        !matches!(self, ModelSpec::Tvar { .. })
    }

    pub fn state_dim(&self) -> usize {
        match self {
            ModelSpec::Tvar { order } => *order,
            _ => 2,
        }
    }

    /// Position of the AR(1) coefficient in the state vector.
    pub fn beta_index(&self) -> usize {
        match self {
            ModelSpec::Tvar { .. } => 0,
            _ => 1,
        }
    }

    /// Number of leading observations that only act as regressors.
    pub fn lags(&self) -> usize {
        match self {
            ModelSpec::Tvar { order } => *order,
            _ => 1,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ModelSpec {
    type Err = ModelError;

    /// Accepts `tvar`, `tvar(2)`, `garch`, `garchm`, `tgarch`, `agarch`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("tvar(").and_then(|r| r.strip_suffix(')')) {
            let order = rest
                .parse()
                .map_err(|_| ModelError::UnknownModel(s.to_string()))?;
            return ModelSpec::tvar(order);
        }
        ModelSpec::from_name(s, 1)
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("model", self.name())?;
        if let ModelSpec::Tvar { order } = self {
            map.serialize_entry("ar_order", order)?;
        }
        map.serialize_entry("label", &self.label())?;
        map.end()
    }
}

/// Named parameter vector of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Theta {
    Tvar {
        sigma2_w: Vec<f64>,
        sigma2_eps: f64,
    },
    Garch {
        omega: f64,
        a1: f64,
        b1: f64,
        sigma2_w: f64,
    },
    GarchM {
        omega: f64,
        a1: f64,
        b1: f64,
        sigma2_w: f64,
        delta: f64,
    },
    TGarch {
        omega: f64,
        a1_plus: f64,
        a1_minus: f64,
        b1: f64,
        sigma2_w: f64,
    },
    AGarch {
        omega: f64,
        a1: f64,
        a1_plus: f64,
        b1: f64,
        sigma2_w: f64,
    },
}

fn constraint(field: &str, reason: &str) -> ModelError {
    ModelError::Constraint {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

impl Theta {
    pub fn spec(&self) -> ModelSpec {
        match self {
            Theta::Tvar { sigma2_w, .. } => ModelSpec::Tvar {
                order: sigma2_w.len(),
            },
            Theta::Garch { .. } => ModelSpec::Garch,
            Theta::GarchM { .. } => ModelSpec::GarchM,
            Theta::TGarch { .. } => ModelSpec::TGarch,
            Theta::AGarch { .. } => ModelSpec::AGarch,
        }
    }

    /// Starting point for estimation given the sample variance of the data.
    pub fn default_for(spec: ModelSpec, variance: f64) -> Theta {
        let omega = 0.1 * variance;
        let (a, b, s2w) = (0.1, 0.8, 1e-5);
        match spec {
            ModelSpec::Tvar { order } => Theta::Tvar {
                sigma2_w: vec![s2w; order],
                sigma2_eps: variance,
            },
            ModelSpec::Garch => Theta::Garch {
                omega,
                a1: a,
                b1: b,
                sigma2_w: s2w,
            },
            ModelSpec::GarchM => Theta::GarchM {
                omega,
                a1: a,
                b1: b,
                sigma2_w: s2w,
                delta: 0.0,
            },
            ModelSpec::TGarch => Theta::TGarch {
                omega,
                a1_plus: a,
                a1_minus: a,
                b1: b,
                sigma2_w: s2w,
            },
            ModelSpec::AGarch => Theta::AGarch {
                omega,
                a1: a,
                a1_plus: a,
                b1: b,
                sigma2_w: s2w,
            },
        }
    }

    /// Natural-space values in the order of [`ModelSpec::param_names`].
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Theta::Tvar { sigma2_w, sigma2_eps } => {
                let mut v = sigma2_w.clone();
                v.push(*sigma2_eps);
                v
            }
            Theta::Garch { omega, a1, b1, sigma2_w } => vec![*omega, *a1, *b1, *sigma2_w],
            Theta::GarchM {
                omega,
                a1,
                b1,
                sigma2_w,
                delta,
            } => vec![*omega, *a1, *b1, *sigma2_w, *delta],
            Theta::TGarch {
                omega,
                a1_plus,
                a1_minus,
                b1,
                sigma2_w,
            } => vec![*omega, *a1_plus, *a1_minus, *b1, *sigma2_w],
            Theta::AGarch {
                omega,
                a1,
                a1_plus,
                b1,
                sigma2_w,
            } => vec![*omega, *a1, *a1_plus, *b1, *sigma2_w],
        }
    }

    /// Inverse of [`Theta::to_vec`]. Does not check constraints.
    pub fn from_vec(spec: ModelSpec, v: &[f64]) -> Result<Theta, ModelError> {
        if v.len() != spec.param_count() {
            return Err(ModelError::Arity {
                spec: spec.label(),
                expected: spec.param_count(),
                got: v.len(),
            });
        }
        Ok(match spec {
            ModelSpec::Tvar { order } => Theta::Tvar {
                sigma2_w: v[..order].to_vec(),
                sigma2_eps: v[order],
            },
            ModelSpec::Garch => Theta::Garch {
                omega: v[0],
                a1: v[1],
                b1: v[2],
                sigma2_w: v[3],
            },
            ModelSpec::GarchM => Theta::GarchM {
                omega: v[0],
                a1: v[1],
                b1: v[2],
                sigma2_w: v[3],
                delta: v[4],
            },
            ModelSpec::TGarch => Theta::TGarch {
                omega: v[0],
                a1_plus: v[1],
                a1_minus: v[2],
                b1: v[3],
                sigma2_w: v[4],
            },
            ModelSpec::AGarch => Theta::AGarch {
                omega: v[0],
                a1: v[1],
                a1_plus: v[2],
                b1: v[3],
                sigma2_w: v[4],
            },
        })
    }

    /// `(omega, b1, persistence)` of the variance recursion; `None` for TV-AR.
    /// Persistence is the stationarity sum: `a1 + b1`, `(a1+ + a1-)/2 + b1`
    /// or `a1 + a1+/2 + b1`.
    pub fn variance_recursion(&self) -> Option<(f64, f64, f64)> {
        match *self {
            Theta::Tvar { .. } => None,
            Theta::Garch { omega, a1, b1, .. } | Theta::GarchM { omega, a1, b1, .. } => {
                Some((omega, b1, a1 + b1))
            }
            Theta::TGarch {
                omega,
                a1_plus,
                a1_minus,
                b1,
                ..
            } => Some((omega, b1, (a1_plus + a1_minus) / 2.0 + b1)),
            Theta::AGarch {
                omega, a1, a1_plus, b1, ..
            } => Some((omega, b1, a1 + a1_plus / 2.0 + b1)),
        }
    }

    /// `omega / (1 - persistence)` for GARCH kinds, `sigma2_eps` for TV-AR.
    pub fn unconditional_variance(&self) -> f64 {
        match self {
            Theta::Tvar { sigma2_eps, .. } => *sigma2_eps,
            _ => {
                let (omega, _, persistence) = self.variance_recursion().expect("GARCH kind");
                omega / (1.0 - persistence)
            }
        }
    }

    /// Checks every sign and stationarity constraint; the error names the
    /// offending field.
    pub fn validate(&self) -> Result<(), ModelError> {
        let names = self.spec().param_names();
        let values = self.to_vec();
        for (name, v) in names.iter().zip(&values) {
            if !v.is_finite() {
                return Err(constraint(name, "must be finite"));
            }
        }
        match self {
            Theta::Tvar { sigma2_w, sigma2_eps } => {
                if sigma2_w.is_empty() {
                    return Err(ModelError::ZeroOrder);
                }
                for (i, s) in sigma2_w.iter().enumerate() {
                    if *s < 0.0 {
                        return Err(constraint(&names[i], "must be >= 0"));
                    }
                }
                if *sigma2_eps <= 0.0 {
                    return Err(constraint("sigma2_eps", "must be > 0"));
                }
            }
            _ => {
                for (name, v) in names.iter().zip(&values) {
                    match name.as_str() {
                        "omega" if *v <= 0.0 => return Err(constraint(name, "must be > 0")),
                        "delta" | "omega" => {}
                        _ if *v < 0.0 => return Err(constraint(name, "must be >= 0")),
                        _ => {}
                    }
                }
                let (_, _, persistence) = self.variance_recursion().expect("GARCH kind");
                if persistence >= 1.0 {
                    let rule = match self {
                        Theta::TGarch { .. } => "(a1_plus + a1_minus)/2 + b1 < 1",
                        Theta::AGarch { .. } => "a1 + a1_plus/2 + b1 < 1",
                        _ => "a1 + b1 < 1",
                    };
                    return Err(constraint("b1", &format!("stationarity requires {rule}")));
                }
            }
        }
        Ok(())
    }

    /// JSON object keyed by parameter name; TV-AR `sigma2_w` is an array.
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("finite floats serialize")
    }

    /// Parses the JSON produced by [`Theta::to_json`] for a known spec.
    /// Missing and unexpected keys are both rejected.
    pub fn from_json(spec: ModelSpec, value: &Value) -> Result<Theta, ModelError> {
        let obj = value
            .as_object()
            .ok_or_else(|| ModelError::Json("expected a JSON object".into()))?;
        let number = |key: &str| -> Result<f64, ModelError> {
            obj.get(key)
                .ok_or_else(|| ModelError::Json(format!("missing `{key}`")))?
                .as_f64()
                .ok_or_else(|| ModelError::Json(format!("`{key}` must be a number")))
        };
        let allowed: Vec<String> = match spec {
            ModelSpec::Tvar { .. } => vec!["sigma2_w".into(), "sigma2_eps".into()],
            _ => spec.param_names(),
        };
        if let Some(extra) = obj.keys().find(|k| !allowed.contains(k)) {
            return Err(ModelError::Json(format!(
                "unexpected key `{extra}` for {}",
                spec.label()
            )));
        }
        let theta = match spec {
            ModelSpec::Tvar { order } => {
                let sigma2_w = match obj.get("sigma2_w") {
                    Some(Value::Array(items)) => items
                        .iter()
                        .map(|v| {
                            v.as_f64()
                                .ok_or_else(|| ModelError::Json("`sigma2_w` entries must be numbers".into()))
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    Some(v) if v.is_number() => vec![v.as_f64().expect("number")],
                    Some(_) => return Err(ModelError::Json("`sigma2_w` must be a number or array".into())),
                    None => return Err(ModelError::Json("missing `sigma2_w`".into())),
                };
                if sigma2_w.len() != order {
                    return Err(ModelError::Arity {
                        spec: spec.label(),
                        expected: order,
                        got: sigma2_w.len(),
                    });
                }
                Theta::Tvar {
                    sigma2_w,
                    sigma2_eps: number("sigma2_eps")?,
                }
            }
            _ => {
                let values = allowed
                    .iter()
                    .map(|k| number(k))
                    .collect::<Result<Vec<_>, _>>()?;
                Theta::from_vec(spec, &values)?
            }
        };
        Ok(theta)
    }

    pub fn from_json_str(spec: ModelSpec, text: &str) -> Result<Theta, ModelError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        Theta::from_json(spec, &value)
    }
}

impl Serialize for Theta {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        match self {
            Theta::Tvar { sigma2_w, sigma2_eps } => {
                map.serialize_entry("sigma2_w", sigma2_w)?;
                map.serialize_entry("sigma2_eps", sigma2_eps)?;
            }
            _ => {
                for (name, v) in self.spec().param_names().iter().zip(self.to_vec()) {
                    map.serialize_entry(name, &v)?;
                }
            }
        }
        map.end()
    }
}

/// Per-parameter values keyed by name, e.g. standard errors. `None` is
/// written as JSON `null`.
pub fn named_values(spec: ModelSpec, values: &[Option<f64>]) -> Map<String, Value> {
    spec.param_names()
        .into_iter()
        .zip(values)
        .map(|(k, v)| (k, v.map_or(Value::Null, Value::from)))
        .collect()
}
