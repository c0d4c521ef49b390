//! Scenario parameters, enumerations and validation.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Empirical elevation-angle LoS model parameters `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Environment {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Environment {
    pub const SUBURBAN: Environment = Environment {
        a: 1.0,
        b: 6.581,
        c: 1.0,
    };
    pub const HIGHRISE_URBAN: Environment = Environment {
        a: 1.124,
        b: 0.049,
        c: 1.024,
    };

    pub fn new(a: f64, b: f64, c: f64) -> Result<Self, ConfigError> {
        let env = Environment { a, b, c };
        let v = env.violations();
        if v.is_empty() {
            Ok(env)
        } else {
            Err(ConfigError::Invalid(v))
        }
    }

    /// Looks up a named preset (`suburban`, `highrise`, `highrise-urban`, `urban`).
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "suburban" => Some(Self::SUBURBAN),
            "highrise" | "highrise-urban" | "urban" => Some(Self::HIGHRISE_URBAN),
            _ => None,
        }
    }

    fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.a >= 0.0 && self.a.is_finite()) {
            v.push(Violation::new("env.a", ">= 0", self.a));
        }
        if !(self.b >= 0.0 && self.b.is_finite()) {
            v.push(Violation::new("env.b", ">= 0", self.b));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            v.push(Violation::new("env.c", "> 0", self.c));
        }
        v
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EnvironmentRepr {
    Named(String),
    Params { a: f64, b: f64, c: f64 },
}

impl<'de> Deserialize<'de> for Environment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match EnvironmentRepr::deserialize(d)? {
            EnvironmentRepr::Named(n) => Environment::preset(&n).ok_or_else(|| {
                serde::de::Error::custom(format!("unknown environment preset `{n}`"))
            }),
            EnvironmentRepr::Params { a, b, c } => Ok(Environment { a, b, c }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "ABS")]
    Abs,
    #[serde(rename = "TBS")]
    Tbs,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Abs => "ABS",
            Tier::Tbs => "TBS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkState {
    #[serde(rename = "L")]
    Los,
    #[serde(rename = "N")]
    Nlos,
}

impl LinkState {
    pub fn symbol(self) -> char {
        match self {
            LinkState::Los => 'L',
            LinkState::Nlos => 'N',
        }
    }
}

/// Ordered link states of the three cooperating stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkStateVector(pub [LinkState; 3]);

impl LinkStateVector {
    pub const ALL_LOS: LinkStateVector = LinkStateVector([LinkState::Los; 3]);

    /// All eight vectors, LLL first, lexicographic with L < N.
    pub fn all() -> [LinkStateVector; 8] {
        std::array::from_fn(Self::from_index)
    }

    pub fn from_index(i: usize) -> LinkStateVector {
        assert!(i < 8, "link-state index out of range");
        let s = |bit: usize| {
            if (i >> bit) & 1 == 0 {
                LinkState::Los
            } else {
                LinkState::Nlos
            }
        };
        LinkStateVector([s(2), s(1), s(0)])
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, s| acc * 2 + usize::from(*s == LinkState::Nlos))
    }
}

impl fmt::Display for LinkStateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.0 {
            write!(f, "{}", s.symbol())?;
        }
        Ok(())
    }
}

/// One violated configuration bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub bound: String,
    pub value: f64,
}

impl Violation {
    fn new(field: &str, bound: &str, value: f64) -> Self {
        Self {
            field: field.to_string(),
            bound: bound.to_string(),
            value,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "`{}` must be {} (got {})",
            self.field, self.bound, self.value
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("unknown override key `{0}`")]
    UnknownKey(String),
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Scenario parameters in boundary units: meters, per-km², dB.
///
/// Field names in JSON match the conventional symbols (`r_C`, `H`, `h`, ...).
/// `H` and `h` are measured from the TBS reference plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(rename = "r_C")]
    pub r_c: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    pub h: f64,
    #[serde(rename = "h_TBS")]
    pub h_tbs: f64,
    #[serde(rename = "N")]
    pub n_abs: i64,
    #[serde(rename = "lambda_TBS")]
    pub lambda_tbs: f64,
    #[serde(rename = "alpha_ABS")]
    pub alpha_abs: f64,
    #[serde(rename = "alpha_TBS_L")]
    pub alpha_tbs_l: f64,
    #[serde(rename = "alpha_TBS_N")]
    pub alpha_tbs_n: f64,
    #[serde(rename = "m_ABS")]
    pub m_abs: f64,
    #[serde(rename = "m_TBS_L")]
    pub m_tbs_l: f64,
    #[serde(rename = "m_TBS_N")]
    pub m_tbs_n: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    #[serde(rename = "gamma_ABS")]
    pub gamma_abs: f64,
    #[serde(rename = "gamma_TBS")]
    pub gamma_tbs: f64,
    pub env: Environment,
}

impl NetworkConfig {
    /// Reference scenario used for coverage experiments.
    pub fn reference() -> Self {
        Self {
            r_c: 1000.0,
            big_h: 320.0,
            h: 120.0,
            h_tbs: 30.0,
            n_abs: 20,
            lambda_tbs: 20.0,
            alpha_abs: 2.0,
            alpha_tbs_l: 2.0,
            alpha_tbs_n: 2.7,
            m_abs: 2.0,
            m_tbs_l: 2.0,
            m_tbs_n: 1.0,
            omega: 1.0,
            gamma_abs: 0.0,
            gamma_tbs: 0.0,
            env: Environment::SUBURBAN,
        }
    }

    /// Association-study scenario: 30 ABSs on a 500 m disk, user at 30 m.
    pub fn association_scenario(env: Environment) -> Self {
        Self {
            r_c: 500.0,
            n_abs: 30,
            h: 30.0,
            env,
            ..Self::reference()
        }
    }

    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Sets one field by its JSON name, e.g. `("h", "150")` or `("env", "highrise")`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let mut obj =
            serde_json::to_value(&*self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let map = obj.as_object_mut().expect("config serializes to an object");
        if !map.contains_key(key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        let parsed = serde_json::from_str::<serde_json::Value>(value)
            .unwrap_or_else(|_| serde_json::Value::String(value.to_string()));
        map.insert(key.to_string(), parsed);
        *self =
            serde_json::from_value(obj).map_err(|e| ConfigError::Parse(format!("{key}: {e}")))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<ValidatedConfig, ConfigError> {
        validate(self)
    }
}

/// Validated, immutable scenario in SI / linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    raw: NetworkConfig,
    lambda: f64,
    r_max: f64,
    gamma_abs: f64,
    gamma_tbs: f64,
}

pub fn validate(cfg: &NetworkConfig) -> Result<ValidatedConfig, ConfigError> {
    let mut v = Vec::new();
    let fin = |x: f64| x.is_finite();
    if !(cfg.r_c > 0.0 && fin(cfg.r_c)) {
        v.push(Violation::new("r_C", "> 0", cfg.r_c));
    }
    if !(cfg.h > 0.0 && fin(cfg.h)) {
        v.push(Violation::new("h", "> 0", cfg.h));
    }
    if !(cfg.h < cfg.big_h && fin(cfg.big_h)) {
        v.push(Violation::new("H", "> h (0 < h < H)", cfg.big_h));
    }
    if !fin(cfg.h_tbs) {
        v.push(Violation::new("h_TBS", "finite", cfg.h_tbs));
    }
    if cfg.n_abs < 3 {
        v.push(Violation::new("N", ">= 3", cfg.n_abs as f64));
    }
    if !(cfg.lambda_tbs > 0.0 && fin(cfg.lambda_tbs)) {
        v.push(Violation::new("lambda_TBS", "> 0", cfg.lambda_tbs));
    }
    for (name, a) in [
        ("alpha_ABS", cfg.alpha_abs),
        ("alpha_TBS_L", cfg.alpha_tbs_l),
        ("alpha_TBS_N", cfg.alpha_tbs_n),
    ] {
        if !(a >= 2.0 && fin(a)) {
            v.push(Violation::new(name, ">= 2", a));
        }
    }
    for (name, m) in [
        ("m_ABS", cfg.m_abs),
        ("m_TBS_L", cfg.m_tbs_l),
        ("m_TBS_N", cfg.m_tbs_n),
    ] {
        if !(m >= 0.5 && fin(m)) {
            v.push(Violation::new(name, ">= 0.5", m));
        }
    }
    if !(cfg.omega > 0.0 && fin(cfg.omega)) {
        v.push(Violation::new("Omega", "> 0", cfg.omega));
    }
    for (name, g) in [("gamma_ABS", cfg.gamma_abs), ("gamma_TBS", cfg.gamma_tbs)] {
        if !fin(g) {
            v.push(Violation::new(name, "finite in dB (> 0 linear)", g));
        }
    }
    v.extend(cfg.env.violations());
    if !v.is_empty() {
        return Err(ConfigError::Invalid(v));
    }
    let gap = cfg.big_h - cfg.h;
    Ok(ValidatedConfig {
        raw: cfg.clone(),
        lambda: cfg.lambda_tbs * 1e-6,
        r_max: (gap * gap + cfg.r_c * cfg.r_c).sqrt(),
        gamma_abs: db_to_linear(cfg.gamma_abs),
        gamma_tbs: db_to_linear(cfg.gamma_tbs),
    })
}

impl ValidatedConfig {
    pub fn raw(&self) -> &NetworkConfig {
        &self.raw
    }

    /// Re-validates after editing a copy of the raw parameters.
    pub fn modified(
        &self,
        f: impl FnOnce(&mut NetworkConfig),
    ) -> Result<ValidatedConfig, ConfigError> {
        let mut raw = self.raw.clone();
        f(&mut raw);
        validate(&raw)
    }

    pub fn r_c(&self) -> f64 {
        self.raw.r_c
    }
    pub fn big_h(&self) -> f64 {
        self.raw.big_h
    }
    pub fn h(&self) -> f64 {
        self.raw.h
    }
    /// ABS-to-user vertical separation `H - h`.
    pub fn gap(&self) -> f64 {
        self.raw.big_h - self.raw.h
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn n_abs(&self) -> usize {
        self.raw.n_abs as usize
    }
    /// TBS density per m².
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn omega(&self) -> f64 {
        self.raw.omega
    }
    pub fn env(&self) -> Environment {
        self.raw.env
    }
    pub fn gamma_abs(&self) -> f64 {
        self.gamma_abs
    }
    pub fn gamma_tbs(&self) -> f64 {
        self.gamma_tbs
    }
    pub fn gamma(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Abs => self.gamma_abs,
            Tier::Tbs => self.gamma_tbs,
        }
    }

    /// Path-loss exponent; ABS links are always LoS.
    pub fn alpha(&self, tier: Tier, state: LinkState) -> f64 {
        match (tier, state) {
            (Tier::Abs, _) => self.raw.alpha_abs,
            (Tier::Tbs, LinkState::Los) => self.raw.alpha_tbs_l,
            (Tier::Tbs, LinkState::Nlos) => self.raw.alpha_tbs_n,
        }
    }

    pub fn m(&self, tier: Tier, state: LinkState) -> f64 {
        match (tier, state) {
            (Tier::Abs, _) => self.raw.m_abs,
            (Tier::Tbs, LinkState::Los) => self.raw.m_tbs_l,
            (Tier::Tbs, LinkState::Nlos) => self.raw.m_tbs_n,
        }
    }

    /// Hex SHA-256 of the canonical JSON form of the raw parameters.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&self.raw).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_is_valid() {
        let c = NetworkConfig::reference().validate().unwrap();
        assert_eq!(c.r_max(), (200.0f64 * 200.0 + 1000.0 * 1000.0).sqrt());
        assert_eq!(c.gap(), 200.0);
        assert!((c.lambda() - 2e-5).abs() < 1e-20);
        assert_eq!(c.gamma_abs(), 1.0);
    }

    #[test]
    fn h_equal_to_big_h_rejected() {
        let mut c = NetworkConfig::reference();
        c.h = c.big_h;
        let ConfigError::Invalid(v) = c.validate().unwrap_err() else {
            panic!()
        };
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "H");
    }

    #[test]
    fn small_shape_rejected() {
        let mut c = NetworkConfig::reference();
        c.m_tbs_n = 0.3;
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("m_TBS_N"));
        assert!(err.to_string().contains(">= 0.5"));
    }

    #[test]
    fn all_violations_reported() {
        let mut c = NetworkConfig::reference();
        c.n_abs = 2;
        c.alpha_abs = 1.5;
        c.omega = 0.0;
        let ConfigError::Invalid(v) = c.validate().unwrap_err() else {
            panic!()
        };
        let fields: Vec<_> = v.iter().map(|x| x.field.as_str()).collect();
        assert_eq!(fields, ["N", "alpha_ABS", "Omega"]);
    }

    #[test]
    fn json_round_trip_and_names() {
        let c = NetworkConfig::reference();
        let s = serde_json::to_string(&c).unwrap();
        for key in [
            "\"r_C\"",
            "\"H\"",
            "\"h_TBS\"",
            "\"lambda_TBS\"",
            "\"alpha_TBS_N\"",
            "\"m_TBS_L\"",
            "\"Omega\"",
            "\"gamma_ABS\"",
        ] {
            assert!(s.contains(key), "{key}");
        }
        assert_eq!(NetworkConfig::from_json(&s).unwrap(), c);
    }

    #[test]
    fn missing_field_named() {
        let mut v = serde_json::to_value(NetworkConfig::reference()).unwrap();
        v.as_object_mut().unwrap().remove("m_ABS");
        let err = NetworkConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("m_ABS"));
    }

    #[test]
    fn env_presets_by_name() {
        let mut v = serde_json::to_value(NetworkConfig::reference()).unwrap();
        v["env"] = serde_json::json!("highrise");
        let c = NetworkConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(c.env, Environment::HIGHRISE_URBAN);
    }

    #[test]
    fn overrides() {
        let mut c = NetworkConfig::reference();
        c.set("h", "150").unwrap();
        c.set("env", "highrise").unwrap();
        c.set("N", "25").unwrap();
        assert_eq!(
            (c.h, c.n_abs, c.env),
            (150.0, 25, Environment::HIGHRISE_URBAN)
        );
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("N", "2.5").is_err());
    }

    #[test]
    fn link_state_order() {
        let names: Vec<String> = LinkStateVector::all()
            .iter()
            .map(|z| z.to_string())
            .collect();
        assert_eq!(
            names,
            ["LLL", "LLN", "LNL", "LNN", "NLL", "NLN", "NNL", "NNN"]
        );
        for (i, z) in LinkStateVector::all().iter().enumerate() {
            assert_eq!(z.index(), i);
        }
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = NetworkConfig::reference().validate().unwrap();
        let b = NetworkConfig::reference().validate().unwrap();
        let c = a.modified(|c| c.h = 121.0).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    proptest::proptest! {
        #[test]
        fn db_round_trip(db in -80.0f64..80.0) {
            let back = linear_to_db(db_to_linear(db));
            proptest::prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
            let x = db_to_linear(db);
            proptest::prop_assert!((db_to_linear(linear_to_db(x)) - x).abs() <= 1e-12 * x);
        }

        #[test]
        fn r_max_at_least_gap(rc in 1e-3f64..5e3, big_h in 2.0f64..1e3, frac in 0.01f64..0.99) {
            let mut c = NetworkConfig::reference();
            c.r_c = rc;
            c.big_h = big_h;
            c.h = big_h * frac;
            let v = c.validate().unwrap();
            proptest::prop_assert!(v.r_max() > v.gap());
        }
    }
}
