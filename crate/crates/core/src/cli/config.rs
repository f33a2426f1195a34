use std::fmt;

use serde_json::{json, Map, Value};

use crate::ensemble::Method;
use crate::response::ModelParams;
use crate::spectral::SpectralDensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Roots,
    Kernel,
    Covariance,
    Density,
    DecayFit,
    Ensemble,
    RegimeScan,
    Runaway,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Roots,
        Kind::Kernel,
        Kind::Covariance,
        Kind::Density,
        Kind::DecayFit,
        Kind::Ensemble,
        Kind::RegimeScan,
        Kind::Runaway,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Roots => "roots",
            Kind::Kernel => "kernel",
            Kind::Covariance => "covariance",
            Kind::Density => "density",
            Kind::DecayFit => "decay-fit",
            Kind::Ensemble => "ensemble",
            Kind::RegimeScan => "regime-scan",
            Kind::Runaway => "runaway",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s || k.name().replace('-', "_") == s)
    }

    fn allows(self, key: &str) -> bool {
        const MODEL: [&str; 8] = ["a", "b", "omega", "epsilon", "coupling_rhs", "kT", "q0", "p0"];
        let extra: &[&str] = match self {
            Kind::Roots => &[],
            Kind::Kernel => &["times", "nu_max", "panels", "tail_tolerance"],
            Kind::Covariance => &["times", "method"],
            Kind::Density => &["times", "grid_n", "sigmas"],
            Kind::DecayFit => &["times", "points"],
            Kind::Ensemble => &["times", "n", "nu_max", "sample_count", "seed", "method", "step"],
            Kind::RegimeScan => &["eps_sq_max", "scan_points", "n", "nu_max"],
            Kind::Runaway => &["n", "nu_max", "t_max"],
        };
        key == "kind" || MODEL.contains(&key) || extra.contains(&key)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<FieldError>),
}

impl ConfigError {
    pub fn fields(&self) -> Vec<&str> {
        match self {
            ConfigError::Parse(_) => Vec::new(),
            ConfigError::Validation(v) => v.iter().map(|e| e.field.as_str()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Epsilon(f64),
    Rhs(f64),
}

/// Physical parameters as written in the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelBlock {
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    pub coupling: Coupling,
    pub kt: f64,
    pub q0: f64,
    pub p0: f64,
}

impl ModelBlock {
    pub fn spectral(&self) -> crate::Result<SpectralDensity> {
        SpectralDensity::new(self.a, self.b)
    }

    pub fn params(&self) -> crate::Result<(SpectralDensity, ModelParams)> {
        let sd = self.spectral()?;
        let mp = match self.coupling {
            Coupling::Epsilon(e) => ModelParams::new(self.omega, e, self.kt, self.q0, self.p0)?,
            Coupling::Rhs(r) => ModelParams::from_coupling_rhs(&sd, self.omega, r, self.kt, self.q0, self.p0)?,
        };
        Ok((sd, mp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceMethod {
    Auto,
    ClosedForm,
    Numeric,
}

impl CovarianceMethod {
    fn name(self) -> &'static str {
        match self {
            CovarianceMethod::Auto => "auto",
            CovarianceMethod::ClosedForm => "closed_form",
            CovarianceMethod::Numeric => "numeric",
        }
    }
}

/// Fully resolved experiment description; defaults are filled in so that the
/// echoed form in a summary reproduces the run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub model: ModelBlock,
    pub times: Vec<f64>,
    pub nu_max: Option<f64>,
    pub panels: usize,
    pub tail_tolerance: f64,
    pub covariance_method: CovarianceMethod,
    pub grid_n: usize,
    pub sigmas: f64,
    pub points: Vec<[f64; 2]>,
    pub n: usize,
    pub sample_count: usize,
    pub seed: u64,
    pub method: Method,
    pub step: Option<f64>,
    pub eps_sq_max: Option<f64>,
    pub scan_points: usize,
    pub t_max: Option<f64>,
}

struct Reader<'a> {
    obj: &'a Map<String, Value>,
    errors: Vec<FieldError>,
}

impl<'a> Reader<'a> {
    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    fn num(&mut self, key: &str) -> Option<f64> {
        match self.obj.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => n.as_f64().or_else(|| {
                self.fail(key, "not representable as a float");
                None
            }),
            Some(_) => {
                self.fail(key, "expected a number");
                None
            }
        }
    }

    fn required(&mut self, key: &str) -> f64 {
        match self.num(key) {
            Some(v) => v,
            None => {
                if !self.errors.iter().any(|e| e.field == key) {
                    self.fail(key, "missing required key");
                }
                f64::NAN
            }
        }
    }

    fn count(&mut self, key: &str, default: usize, min: usize) -> usize {
        match self.obj.get(key) {
            None | Some(Value::Null) => default,
            Some(v) => match v.as_u64() {
                Some(n) if n as usize >= min => n as usize,
                _ => {
                    self.fail(key, format!("expected an integer >= {min}"));
                    default
                }
            },
        }
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        let v = self.num(key)?;
        if !(v.is_finite() && v > 0.0) {
            self.fail(key, format!("must be finite and positive, got {v}"));
            return None;
        }
        Some(v)
    }

    fn times(&mut self, required: bool) -> Vec<f64> {
        let Some(v) = self.obj.get("times") else {
            if required {
                self.fail("times", "missing required key");
            }
            return Vec::new();
        };
        let Some(arr) = v.as_array() else {
            self.fail("times", "expected an array of numbers");
            return Vec::new();
        };
        let times: Option<Vec<f64>> = arr.iter().map(Value::as_f64).collect();
        match times {
            Some(t) if t.is_empty() && required => {
                self.fail("times", "must not be empty");
                t
            }
            Some(t) if t.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || t.windows(2).any(|w| w[1] < w[0]) => {
                self.fail("times", "must be finite, nonnegative and nondecreasing");
                t
            }
            Some(t) => t,
            None => {
                self.fail("times", "expected an array of numbers");
                Vec::new()
            }
        }
    }

    fn points(&mut self) -> Vec<[f64; 2]> {
        let Some(v) = self.obj.get("points") else {
            return vec![[0.0, 0.0]];
        };
        let parsed: Option<Vec<[f64; 2]>> = v.as_array().and_then(|arr| {
            arr.iter()
                .map(|p| match p.as_array().map(|x| x.as_slice()) {
                    Some([q, p]) => Some([q.as_f64()?, p.as_f64()?]),
                    _ => None,
                })
                .collect()
        });
        match parsed {
            Some(p) if !p.is_empty() && p.iter().flatten().all(|x| x.is_finite()) => p,
            _ => {
                self.fail("points", "expected a nonempty array of [q, p] pairs");
                Vec::new()
            }
        }
    }
}

/// The config object of a flat JSON config, or the `config` member of a run summary.
pub fn config_object(text: &str) -> Result<Map<String, Value>, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let value = match value.get("config") {
        Some(inner) if value.get("results").is_some() => inner.clone(),
        _ => value,
    };
    match value {
        Value::Object(obj) => Ok(obj),
        _ => Err(ConfigError::Parse("top level must be a JSON object".into())),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    config_from_map(&config_object(text)?, None)
}

/// Validates a config object. `kind_hint` supplies the kind when the object
/// has none and must agree with it otherwise.
pub fn config_from_map(obj: &Map<String, Value>, kind_hint: Option<Kind>) -> Result<ExperimentConfig, ConfigError> {
    let mut r = Reader { obj, errors: Vec::new() };
    let kind = match (obj.get("kind"), kind_hint) {
        (None, Some(k)) => k,
        (None, None) => {
            return Err(ConfigError::Validation(vec![FieldError {
                field: "kind".into(),
                message: "missing required key".into(),
            }]))
        }
        (Some(v), hint) => match v.as_str().and_then(Kind::from_name) {
            Some(k) if hint.is_none_or(|h| h == k) => k,
            Some(k) => {
                return Err(ConfigError::Validation(vec![FieldError {
                    field: "kind".into(),
                    message: format!("config is for {k} but {} was requested", hint.expect("checked")),
                }]))
            }
            None => {
                return Err(ConfigError::Validation(vec![FieldError {
                    field: "kind".into(),
                    message: format!("unknown experiment kind {v}"),
                }]))
            }
        },
    };
    for key in obj.keys() {
        if !kind.allows(key) {
            r.fail(key, format!("unknown key for {kind}"));
        }
    }

    let a = r.required("a");
    let b = r.required("b");
    let needs_omega = kind != Kind::Kernel;
    let needs_coupling = !matches!(kind, Kind::Kernel | Kind::RegimeScan);
    let omega = if needs_omega { r.required("omega") } else { r.num("omega").unwrap_or(1.0) };
    let coupling = match (r.num("epsilon"), r.num("coupling_rhs")) {
        (Some(_), Some(_)) => {
            r.fail("epsilon", "give either epsilon or coupling_rhs, not both");
            Coupling::Epsilon(f64::NAN)
        }
        (Some(e), None) => Coupling::Epsilon(e),
        (None, Some(c)) => Coupling::Rhs(c),
        (None, None) => {
            if needs_coupling && !r.errors.iter().any(|e| e.field == "epsilon" || e.field == "coupling_rhs") {
                r.fail("epsilon", "missing required key (or coupling_rhs)");
            }
            Coupling::Epsilon(0.0)
        }
    };
    let model = ModelBlock {
        a,
        b,
        omega,
        coupling,
        kt: r.num("kT").unwrap_or(1.0),
        q0: r.num("q0").unwrap_or(1.0),
        p0: r.num("p0").unwrap_or(0.0),
    };
    if r.errors.is_empty() {
        let checked = if needs_omega {
            model.params().map(|_| ())
        } else {
            model.spectral().map(|_| ())
        };
        if let Err(crate::Error::InvalidParameter { name, reason }) = checked {
            r.fail(name, reason);
        }
    }

    let needs_times = matches!(kind, Kind::Kernel | Kind::Covariance | Kind::Density | Kind::DecayFit | Kind::Ensemble);
    let times = r.times(needs_times);
    if kind == Kind::DecayFit && !times.is_empty() && times.len() < 5 {
        r.fail("times", "decay fits need at least 5 times");
    }
    let method_str = obj.get("method").map(|v| v.as_str().unwrap_or("").to_string());
    let covariance_method = match (kind, method_str.as_deref()) {
        (Kind::Covariance, None | Some("auto")) => CovarianceMethod::Auto,
        (Kind::Covariance, Some("closed_form")) => CovarianceMethod::ClosedForm,
        (Kind::Covariance, Some("numeric")) => CovarianceMethod::Numeric,
        (Kind::Covariance, Some(other)) => {
            r.fail("method", format!("expected auto, closed_form or numeric, got {other:?}"));
            CovarianceMethod::Auto
        }
        _ => CovarianceMethod::Auto,
    };
    let method = match (kind, method_str.as_deref()) {
        (Kind::Ensemble, None | Some("solution_formula")) => Method::SolutionFormula,
        (Kind::Ensemble, Some("symplectic")) => Method::Symplectic,
        (Kind::Ensemble, Some(other)) => {
            r.fail("method", format!("expected solution_formula or symplectic, got {other:?}"));
            Method::SolutionFormula
        }
        _ => Method::SolutionFormula,
    };
    let seed = match obj.get("seed") {
        None => 0,
        Some(v) => v.as_u64().unwrap_or_else(|| {
            r.fail("seed", "expected an unsigned 64-bit integer");
            0
        }),
    };
    let cfg = ExperimentConfig {
        kind,
        model,
        nu_max: r.positive("nu_max"),
        panels: r.count("panels", 64, 1),
        tail_tolerance: r.positive("tail_tolerance").unwrap_or(1e-3),
        covariance_method,
        grid_n: r.count("grid_n", 41, 2),
        sigmas: r.positive("sigmas").unwrap_or(6.0),
        points: if kind == Kind::DecayFit { r.points() } else { Vec::new() },
        n: r.count("n", 2000, 1),
        sample_count: r.count("sample_count", 1000, 2),
        seed,
        method,
        step: r.positive("step"),
        eps_sq_max: r.positive("eps_sq_max"),
        scan_points: r.count("scan_points", 101, 2),
        t_max: r.positive("t_max"),
        times,
    };
    if r.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(r.errors))
    }
}

fn opt(map: &mut Map<String, Value>, key: &str, v: Option<f64>) {
    if let Some(v) = v {
        map.insert(key.into(), json!(v));
    }
}

impl ExperimentConfig {
    /// Canonical JSON form holding exactly the keys this kind reads.
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("kind".into(), json!(self.kind.name()));
        m.insert("a".into(), json!(self.model.a));
        m.insert("b".into(), json!(self.model.b));
        if self.kind != Kind::Kernel {
            m.insert("omega".into(), json!(self.model.omega));
            m.insert("kT".into(), json!(self.model.kt));
            m.insert("q0".into(), json!(self.model.q0));
            m.insert("p0".into(), json!(self.model.p0));
            if self.kind != Kind::RegimeScan {
                match self.model.coupling {
                    Coupling::Epsilon(e) => m.insert("epsilon".into(), json!(e)),
                    Coupling::Rhs(c) => m.insert("coupling_rhs".into(), json!(c)),
                };
            }
        }
        match self.kind {
            Kind::Roots => {}
            Kind::Kernel => {
                m.insert("times".into(), json!(self.times));
                opt(&mut m, "nu_max", self.nu_max);
                m.insert("panels".into(), json!(self.panels));
                m.insert("tail_tolerance".into(), json!(self.tail_tolerance));
            }
            Kind::Covariance => {
                m.insert("times".into(), json!(self.times));
                m.insert("method".into(), json!(self.covariance_method.name()));
            }
            Kind::Density => {
                m.insert("times".into(), json!(self.times));
                m.insert("grid_n".into(), json!(self.grid_n));
                m.insert("sigmas".into(), json!(self.sigmas));
            }
            Kind::DecayFit => {
                m.insert("times".into(), json!(self.times));
                m.insert("points".into(), json!(self.points));
            }
            Kind::Ensemble => {
                m.insert("times".into(), json!(self.times));
                m.insert("n".into(), json!(self.n));
                opt(&mut m, "nu_max", self.nu_max);
                m.insert("sample_count".into(), json!(self.sample_count));
                m.insert("seed".into(), json!(self.seed));
                let method = match self.method {
                    Method::SolutionFormula => "solution_formula",
                    Method::Symplectic => "symplectic",
                };
                m.insert("method".into(), json!(method));
                opt(&mut m, "step", self.step);
            }
            Kind::RegimeScan => {
                opt(&mut m, "eps_sq_max", self.eps_sq_max);
                m.insert("scan_points".into(), json!(self.scan_points));
                m.insert("n".into(), json!(self.n));
                opt(&mut m, "nu_max", self.nu_max);
            }
            Kind::Runaway => {
                m.insert("n".into(), json!(self.n));
                opt(&mut m, "nu_max", self.nu_max);
                opt(&mut m, "t_max", self.t_max);
            }
        }
        Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"{"kind": "roots", "a": 9, "b": 1, "omega": 0.5773502691896257, "coupling_rhs": 4}"#;

    #[test]
    fn reference_block_is_valid() {
        let cfg = parse_config(REFERENCE).unwrap();
        assert_eq!(cfg.kind, Kind::Roots);
        let (sd, mp) = cfg.model.params().unwrap();
        assert!((mp.coupling_rhs(&sd) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn negative_epsilon_names_field() {
        let e = parse_config(r#"{"kind": "roots", "a": 9, "b": 1, "omega": 1, "epsilon": -1}"#).unwrap_err();
        assert_eq!(e.fields(), vec!["epsilon"]);
    }

    #[test]
    fn missing_omega_is_listed() {
        let e = parse_config(r#"{"kind": "roots", "a": 9, "b": 1, "epsilon": 1}"#).unwrap_err();
        assert_eq!(e.fields(), vec!["omega"]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = parse_config(r#"{"kind": "roots", "a": 9, "b": 1, "omega": 1, "epsilon": 1, "colour": 3, "times": [1]}"#)
            .unwrap_err();
        let mut f = e.fields();
        f.sort();
        assert_eq!(f, vec!["colour", "times"]);
    }

    #[test]
    fn malformed_text() {
        assert!(matches!(parse_config("{"), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_config("[1, 2]"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = r#"{"kind": "ensemble", "a": 9, "b": 1, "omega": 1, "epsilon": 0.3,
            "times": [1, 2], "sample_count": 10, "seed": 7}"#;
        let cfg = parse_config(text).unwrap();
        let again = parse_config(&cfg.to_json().to_string()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn kind_hint_must_agree() {
        let obj: Map<String, Value> = serde_json::from_str(REFERENCE).unwrap();
        assert!(config_from_map(&obj, Some(Kind::Roots)).is_ok());
        let e = config_from_map(&obj, Some(Kind::Density)).unwrap_err();
        assert_eq!(e.fields(), vec!["kind"]);
    }
}
