//! Run configuration: TOML schema, defaults, `--set` overrides and validation.

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fields::classify_regime;
use crate::geometry::{check_hypotheses, BendingProfile, CurvatureModel, DistortionHint, GeometrySetup};
use crate::spectra::SolverMethod;

/// A number or the word `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Auto {
    #[default]
    Auto,
    Value(f64),
}

impl Auto {
    pub fn value(self) -> Option<f64> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }
}

impl Serialize for Auto {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Auto::Auto => s.serialize_str("auto"),
            Auto::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Auto {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Auto;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"auto\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Auto, E> {
                if v == "auto" {
                    Ok(Auto::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Auto, E> {
                Ok(Auto::Value(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Auto, E> {
                Ok(Auto::Value(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Auto, E> {
                Ok(Auto::Value(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    #[serde(rename = "type")]
    pub kind: String,
    pub alpha: f64,
    pub n: u32,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: "rational".into(), alpha: -0.8, n: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub d: f64,
    pub model: ModelConfig,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self { d: 1.0, model: ModelConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(rename = "F_list", skip_serializing_if = "Option::is_none")]
    pub strength_list: Option<Vec<f64>>,
    pub eta: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { strength: None, strength_list: None, eta: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistortionSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_list: Option<Vec<f64>>,
    #[serde(rename = "E")]
    pub energy: Auto,
    #[serde(rename = "deltaE")]
    pub window: Auto,
    pub sharpness: f64,
    /// With `E = "auto"`, `E` is pushed down to at most `-depth·σ·max β`.
    pub depth: f64,
}

impl Default for DistortionSection {
    fn default() -> Self {
        Self { beta: None, beta_list: None, energy: Auto::Auto, window: Auto::Auto, sharpness: 1.0, depth: 8.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    #[serde(rename = "L")]
    pub half_length: Auto,
    #[serde(rename = "Ns", skip_serializing_if = "Option::is_none")]
    pub ns: Option<usize>,
    #[serde(rename = "Nu")]
    pub nu: usize,
    pub margin: Auto,
    /// Longitudinal spacing used whenever `Ns` is not pinned.
    pub hs: f64,
    /// Half-length of the preliminary bound-state grid.
    #[serde(rename = "bound_L")]
    pub bound_half_length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { half_length: Auto::Auto, ns: None, nu: 25, margin: Auto::Auto, hs: 0.05, bound_half_length: 20.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub method: SolverMethod,
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub gap_tol: f64,
    pub tol_im: f64,
    /// Plateau drift tolerance relative to `|E₀ - λ₀|`.
    pub drift_rel: f64,
    pub workers: usize,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            method: SolverMethod::ShiftInvert,
            k: 12,
            tol: 1e-8,
            max_iter: 400,
            gap_tol: 1e-6,
            tol_im: 1e-8,
            drift_rel: 1e-4,
            workers: 1,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub formats: Vec<String>,
    /// Fill the `wall_time` column; off by default so reruns are byte-identical.
    pub record_timing: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "run".into(), formats: vec!["csv".into(), "svg".into()], record_timing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfiningSection {
    pub eta: f64,
    #[serde(rename = "F")]
    pub strength: f64,
    #[serde(rename = "L_list")]
    pub half_lengths: Vec<f64>,
    /// `Λ = λ₀ + cap`.
    pub cap: f64,
    /// Direction of the resonant contrast run; `"none"` is not supported, use the same value to skip.
    pub contrast_eta: f64,
}

impl Default for ConfiningSection {
    fn default() -> Self {
        Self { eta: -2.0, strength: 0.5, half_lengths: vec![10.0, 20.0, 40.0], cap: 2.0, contrast_eta: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub geometry: GeometrySection,
    pub field: FieldSection,
    pub distortion: DistortionSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    pub confining: ConfiningSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config("<root>", e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(error_path(&e.to_string()), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn model(&self) -> Result<CurvatureModel> {
        match self.geometry.model.kind.as_str() {
            "zero" => Ok(CurvatureModel::Zero),
            "rational" => CurvatureModel::rational(self.geometry.model.alpha, self.geometry.model.n)
                .map_err(|e| Error::config("geometry.model", e.to_string())),
            other => Err(Error::config("geometry.model.type", format!("unknown curvature model `{other}`"))),
        }
    }

    pub fn setup(&self) -> Result<GeometrySetup> {
        GeometrySetup::new(self.model()?, self.geometry.d).map_err(|e| Error::config("geometry.d", e.to_string()))
    }

    /// Field strengths of the run: `F_list` if present, else `[F]`.
    pub fn strengths(&self) -> Vec<f64> {
        match (&self.field.strength_list, self.field.strength) {
            (Some(l), _) => l.clone(),
            (None, Some(f)) => vec![f],
            (None, None) => Vec::new(),
        }
    }

    pub fn betas(&self) -> Vec<f64> {
        match (&self.distortion.beta_list, self.distortion.beta) {
            (Some(l), _) => l.clone(),
            (None, Some(b)) => vec![b],
            (None, None) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let setup = self.setup()?;
        let report = check_hypotheses(&setup, DistortionHint::None);
        if !report.h1_ok {
            return Err(Error::config(
                "geometry.model.alpha",
                format!("d·sup|γ| = {:.4} violates the requirement d·sup|γ| < 1", setup.width * report.sup_abs_gamma),
            ));
        }
        if !report.h2_ok {
            return Err(Error::config(
                "geometry.model.n",
                format!("fitted curvature decay exponent {:.3} is not above 3", report.fitted_decay_exponent),
            ));
        }
        let alpha0 = BendingProfile::new(setup.model)?.total();
        classify_regime(self.field.eta, alpha0).map_err(|e| Error::config("field.eta", e.to_string()))?;
        for (k, f) in self.strengths().iter().enumerate() {
            if !(*f > 0.0 && *f < 1.0) {
                return Err(Error::config(format!("field.F_list[{k}]"), format!("field strength {f} outside (0, 1)")));
            }
        }
        for (k, b) in self.betas().iter().enumerate() {
            if !(*b >= 0.0) || !b.is_finite() {
                return Err(Error::config(format!("distortion.beta_list[{k}]"), format!("beta {b} must be nonnegative")));
            }
        }
        if let Some(e) = self.distortion.energy.value() {
            if !(e < 0.0) {
                return Err(Error::config("distortion.E", "reference energy must be negative"));
            }
            if let Some(w) = self.distortion.window.value() {
                if !(w > 0.0 && w < 0.5 * e.abs().min(1.0)) {
                    return Err(Error::config("distortion.deltaE", "window must lie in (0, min(1, |E|)/2)"));
                }
            }
        }
        if !(self.distortion.sharpness > 0.0) {
            return Err(Error::config("distortion.sharpness", "must be positive"));
        }
        if let Some(l) = self.grid.half_length.value() {
            if !(l > 0.0) {
                return Err(Error::config("grid.L", "must be positive"));
            }
        }
        if self.grid.nu < 3 {
            return Err(Error::config("grid.Nu", "need at least 3 transverse points"));
        }
        if matches!(self.grid.ns, Some(n) if n < 3) {
            return Err(Error::config("grid.Ns", "need at least 3 longitudinal points"));
        }
        if !(self.grid.hs > 0.0) || !(self.grid.bound_half_length > 0.0) {
            return Err(Error::config("grid.hs", "spacing and bound_L must be positive"));
        }
        if self.solver.k == 0 || !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::config("solver", "k, tol and max_iter must be positive"));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "svg" {
                return Err(Error::config("output.formats", format!("unknown format `{f}`")));
            }
        }
        Ok(())
    }
}

/// Reads and validates a configuration file, applying `key=value` overrides first.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    RunConfig::from_toml_str(&text, overrides)
}

fn error_path(message: &str) -> String {
    // serde errors name the offending key in backticks
    message
        .split('`')
        .nth(1)
        .map(|s| s.to_string())
        .unwrap_or_else(|| "<root>".to_string())
}

/// Applies `a.b.c=value` to a TOML table; the value is parsed as TOML, falling back to a string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(assignment, "override must look like key=value"))?;
    let key = key.trim();
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::config(key, "empty key segment"));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
