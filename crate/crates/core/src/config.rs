//! Experiment configuration: a flat TOML file whose keys mirror the CLI flags.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::crb::SensingSnr;
use crate::error::{CrbError, Result};
use crate::geometry::{ModularLayout, TargetPolar};
use crate::wavefront::WavefrontModel;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const PRESETS: [(&str, &str); 3] = [
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4-c1", include_str!("../presets/fig4-c1.toml")),
    ("fig4-c2", include_str!("../presets/fig4-c2.toml")),
];

/// Non-empty, duplicate-free model list. Accepts `"all"`, a single name, or
/// an array of names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelList(Vec<WavefrontModel>);

impl ModelList {
    pub fn all() -> Self {
        ModelList(WavefrontModel::ALL.to_vec())
    }

    pub fn new(models: Vec<WavefrontModel>) -> Result<Self> {
        if models.is_empty() {
            return Err(CrbError::InvalidConfiguration("model list is empty".into()));
        }
        let mut out: Vec<WavefrontModel> = Vec::with_capacity(models.len());
        for m in models {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(ModelList(out))
    }

    pub fn models(&self) -> &[WavefrontModel] {
        &self.0
    }
}

impl Default for ModelList {
    fn default() -> Self {
        Self::all()
    }
}

impl std::str::FromStr for ModelList {
    type Err = CrbError;

    /// `all` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::all());
        }
        let models = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        ModelList::new(models)
    }
}

impl Serialize for ModelList {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|m| m.name()))
    }
}

impl<'de> Deserialize<'de> for ModelList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ModelList;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"all\", a model name, or an array of model names")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ModelList, E> {
                v.parse().map_err(E::custom)
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<ModelList, A::Error> {
                let mut out = Vec::new();
                while let Some(name) = seq.next_element::<String>()? {
                    out.push(name.parse().map_err(de::Error::custom)?);
                }
                ModelList::new(out).map_err(de::Error::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Gap multiples Γ_k, centre entry 0. Optional when a layout sweep
    /// generates them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacings: Option<Vec<u32>>,
    pub freq_ghz: f64,
    /// Element pitch in metres; half a wavelength when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_m: Option<f64>,
    #[serde(default)]
    pub snr_db: f64,
    #[serde(default)]
    pub theta_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_points: Option<usize>,
    /// Layout sweep: outer gaps are `gamma_total - Γ`, inner gaps `Γ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_total: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<u32>,
    #[serde(default)]
    pub models: ModelList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Minimal configuration: 60 GHz, 0 dB, broadside, all models.
    pub fn new(k: usize, m: usize, spacings: Vec<u32>) -> Self {
        ExperimentConfig {
            name: None,
            k,
            m,
            spacings: Some(spacings),
            freq_ghz: 60.0,
            pitch_m: None,
            snr_db: 0.0,
            theta_deg: 0.0,
            r: None,
            r_min: None,
            r_max: None,
            r_points: None,
            gamma_total: None,
            gamma_min: None,
            gamma_max: None,
            models: ModelList::all(),
            out: None,
            json: None,
            plot: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CrbError::ConfigParse(e.to_string().trim().to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CrbError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CrbError::ConfigParse(msg) => CrbError::ConfigParse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn preset(name: &str) -> Result<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_toml_str(text))
            .unwrap_or_else(|| {
                Err(CrbError::InvalidConfiguration(format!(
                    "unknown preset '{name}' (known: {})",
                    preset_names().join(", ")
                )))
            })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Field-level checks that do not need a resolved layout.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(CrbError::InvalidConfiguration(msg));
        if !(self.freq_ghz > 0.0 && self.freq_ghz.is_finite()) {
            return bad(format!("freq_ghz must be positive, got {}", self.freq_ghz));
        }
        if let Some(p) = self.pitch_m {
            if !(p > 0.0 && p.is_finite()) {
                return bad(format!("pitch_m must be positive, got {p}"));
            }
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db must be finite".into());
        }
        if !(self.theta_deg.abs() <= 90.0) {
            return bad(format!("theta_deg must lie in [-90, 90], got {}", self.theta_deg));
        }
        if let (Some(lo), Some(hi)) = (self.r_min, self.r_max) {
            if !(lo > 0.0 && hi >= lo) {
                return bad(format!("range grid needs 0 < r_min <= r_max, got [{lo}, {hi}]"));
            }
        }
        if self.r_points == Some(0) {
            return bad("r_points must be at least 1".into());
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / (self.freq_ghz * 1e9)
    }

    pub fn pitch(&self) -> f64 {
        self.pitch_m.unwrap_or(self.wavelength() / 2.0)
    }

    pub fn snr(&self) -> Result<SensingSnr> {
        SensingSnr::from_db(self.snr_db)
    }

    pub fn theta(&self) -> f64 {
        self.theta_deg.to_radians()
    }

    pub fn layout(&self) -> Result<ModularLayout> {
        let spacings = self.spacings.as_ref().ok_or_else(|| {
            CrbError::InvalidConfiguration("spacings are required for this command".into())
        })?;
        ModularLayout::new(self.k, self.m, spacings, self.pitch())
    }

    pub fn target(&self) -> Result<TargetPolar> {
        let r = self
            .r
            .ok_or_else(|| CrbError::InvalidConfiguration("target range r is required".into()))?;
        TargetPolar::from_degrees(r, self.theta_deg)
    }

    /// `r_points` evenly spaced ranges from `r_min` to `r_max` inclusive.
    pub fn range_grid(&self) -> Result<Vec<f64>> {
        let (lo, hi, n) = match (self.r_min, self.r_max, self.r_points) {
            (Some(lo), Some(hi), Some(n)) => (lo, hi, n),
            _ => {
                return Err(CrbError::InvalidConfiguration(
                    "range sweep needs r_min, r_max and r_points".into(),
                ))
            }
        };
        if n == 1 {
            return Ok(vec![lo]);
        }
        let step = (hi - lo) / (n - 1) as f64;
        Ok((0..n)
            .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
            .collect())
    }

    /// Γ values of a layout sweep, inclusive.
    pub fn gamma_grid(&self) -> Result<Vec<u32>> {
        match (self.gamma_total, self.gamma_min, self.gamma_max) {
            (Some(_), Some(lo), Some(hi)) if lo <= hi => Ok((lo..=hi).collect()),
            (Some(_), Some(lo), Some(hi)) => Err(CrbError::InvalidConfiguration(format!(
                "gamma_min {lo} exceeds gamma_max {hi}"
            ))),
            _ => Err(CrbError::InvalidConfiguration(
                "layout sweep needs gamma_total, gamma_min and gamma_max".into(),
            )),
        }
    }

    /// Five-subarray layout with gaps `(T-Γ, Γ, 0, Γ, T-Γ)`; the end subarrays
    /// stay put as Γ varies.
    pub fn layout_for_gamma(&self, gamma: u32) -> Result<ModularLayout> {
        let total = self.gamma_total.ok_or_else(|| {
            CrbError::InvalidConfiguration("layout sweep needs gamma_total".into())
        })?;
        if self.k != 5 {
            return Err(CrbError::InvalidConfiguration(format!(
                "layout sweep is defined for K = 5, got K = {}",
                self.k
            )));
        }
        if gamma < 1 || gamma >= total {
            return Err(CrbError::InvalidConfiguration(format!(
                "Γ = {gamma} gives a gap below 1 with gamma_total = {total}"
            )));
        }
        let outer = total - gamma;
        ModularLayout::new(5, self.m, &[outer, gamma, 0, gamma, outer], self.pitch())
    }
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
