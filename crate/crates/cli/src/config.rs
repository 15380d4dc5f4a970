//! Declarative run configuration.
//!
//! One TOML file describes a whole experiment; unknown keys are rejected and
//! every omitted field falls back to the standard study setup (0.25 km /
//! 1 day mesh on a 5 km disc in south Chicago, 400-day training windows
//! shifted by 2 days, 50 samples, one-day lead). Each subcommand writes the
//! fully resolved configuration next to its outputs, and re-running from
//! that echo reproduces the outputs bit for bit.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use sepp_core::baselines::{KdeConfig, PhmConfig};
use sepp_core::ddgf::DdgfConfig;
use sepp_core::em::EmConfig;
use sepp_core::evaluate::{default_fractions, LeadMode, Protocol};
use sepp_core::hawkes_sim::SimSpec;
use sepp_core::ingest::ColumnMapping;
use sepp_core::predict::{NegativePolicy, PredictConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ddgf,
    Em,
    Phm,
    Kde,
    Uniform,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Ddgf => "ddgf",
            Method::Em => "em",
            Method::Phm => "phm",
            Method::Kde => "kde",
            Method::Uniform => "uniform",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub method: Method,
    /// Output directory; may be overridden with `--out`.
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("runs/out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Canonical catalog CSV (with a `.meta.json` sidecar next to it).
    pub catalog: Option<PathBuf>,
    /// Raw delimited input for `ingest`.
    pub raw: Option<PathBuf>,
    /// Optional event-kind filter applied on ingest.
    pub kind: Option<String>,
    /// Column mapping for the raw input.
    pub columns: ColumnMapping,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            catalog: None,
            raw: None,
            kind: None,
            columns: ColumnMapping {
                date: "Date".into(),
                lat: "Latitude".into(),
                lon: "Longitude".into(),
                kind: "Primary Type".into(),
                date_format: "%m/%d/%Y %I:%M:%S %p".into(),
                delimiter: ',',
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionSection {
    pub center_lat: f64,
    pub center_lon: f64,
    pub radius_km: f64,
    /// Study window start (also the catalog epoch for `ingest`).
    pub start_date: NaiveDate,
    /// Exclusive end of the study window.
    pub end_date: NaiveDate,
}

impl Default for RegionSection {
    fn default() -> Self {
        RegionSection {
            center_lat: 41.765,
            center_lon: -87.665,
            radius_km: 5.0,
            start_date: NaiveDate::from_ymd_opt(2010, 5, 5).unwrap(),
            end_date: NaiveDate::from_ymd_opt(2011, 9, 16).unwrap(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub dx_km: f64,
    pub dt_days: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dx_km: 0.25,
            dt_days: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub training_days: usize,
    pub shift_days: usize,
    pub samples: usize,
    pub lead_days: usize,
    pub lead_mode: LeadMode,
    /// Day offset of the first window start relative to the catalog epoch.
    pub start_day: usize,
    /// Scored area fractions, percent.
    pub fractions_pct: Vec<u32>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            training_days: 400,
            shift_days: 2,
            samples: 50,
            lead_days: 1,
            lead_mode: LeadMode::SingleDay,
            start_day: 0,
            fractions_pct: (1..=30).collect(),
        }
    }
}

impl ProtocolSection {
    pub fn to_protocol(&self) -> Protocol {
        let fractions = if self.fractions_pct.is_empty() {
            default_fractions()
        } else {
            self.fractions_pct.iter().map(|&p| p as f64 / 100.0).collect()
        };
        Protocol {
            training_days: self.training_days,
            shift_days: self.shift_days,
            samples: self.samples,
            lead_days: self.lead_days,
            lead_mode: self.lead_mode,
            start_day: self.start_day,
            fractions,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictSection {
    pub r_cut_km: Option<f64>,
    pub t_horizon_days: Option<f64>,
    pub negative_policy: NegativePolicy,
    /// Target day for `predict` (relative to the catalog epoch); defaults to
    /// the day after the catalog ends.
    pub target_day: Option<usize>,
}

impl Default for PredictSection {
    fn default() -> Self {
        PredictSection {
            r_cut_km: None,
            t_horizon_days: None,
            negative_policy: NegativePolicy::ClampToZero,
            target_day: None,
        }
    }
}

impl PredictSection {
    pub fn to_config(&self) -> PredictConfig {
        PredictConfig {
            r_cut: self.r_cut_km,
            t_horizon: self.t_horizon_days,
            negative_policy: self.negative_policy,
            lambda0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdgfSection {
    pub gamma: f64,
    pub nt_lag: Option<usize>,
    pub rho0: f64,
    pub m_points: Option<usize>,
    pub t_cut_days: Option<f64>,
    pub r_cut_km: Option<f64>,
}

impl Default for DdgfSection {
    fn default() -> Self {
        let d = DdgfConfig::default();
        DdgfSection {
            gamma: d.gamma,
            nt_lag: None,
            rho0: d.rho0,
            m_points: None,
            t_cut_days: None,
            r_cut_km: None,
        }
    }
}

impl DdgfSection {
    pub fn to_config(&self) -> DdgfConfig {
        DdgfConfig {
            gamma: self.gamma,
            nt_lag: self.nt_lag,
            rho0: self.rho0,
            m_points: self.m_points,
            r_targets: None,
            t_cut: self.t_cut_days,
            r_cut: self.r_cut_km,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmSection {
    pub iterations: usize,
    pub t_max_days: f64,
    pub r_max_km: f64,
    pub omega0: f64,
}

impl Default for EmSection {
    fn default() -> Self {
        let d = EmConfig::default();
        EmSection {
            iterations: d.iterations,
            t_max_days: d.t_max,
            r_max_km: d.r_max,
            omega0: d.omega0,
        }
    }
}

impl EmSection {
    pub fn to_config(&self, grid: &GridSection) -> EmConfig {
        EmConfig {
            iterations: self.iterations,
            t_max: self.t_max_days,
            r_max: self.r_max_km,
            omega0: self.omega0,
            dt: grid.dt_days,
            dx: grid.dx_km,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhmSection {
    pub tau_days: f64,
    pub t_cut_days: Option<f64>,
    pub r_cut_km: Option<f64>,
}

impl Default for PhmSection {
    fn default() -> Self {
        PhmSection {
            tau_days: 7.0,
            t_cut_days: Some(60.0),
            r_cut_km: None,
        }
    }
}

impl PhmSection {
    pub fn to_config(&self, grid: &GridSection) -> PhmConfig {
        PhmConfig {
            tau: self.tau_days,
            dx: grid.dx_km,
            t_cut: self.t_cut_days,
            r_cut: self.r_cut_km,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KdeSection {
    pub bandwidth_km: f64,
}

impl Default for KdeSection {
    fn default() -> Self {
        KdeSection {
            bandwidth_km: KdeConfig::default().bandwidth,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub mu: f64,
    pub branching: f64,
    pub omega: f64,
    pub sigma_km: f64,
    pub horizon_days: f64,
    pub seed: u64,
    pub kind: String,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            mu: 0.0477,
            branching: 0.5,
            omega: 0.5,
            sigma_km: 0.3,
            horizon_days: 440.0,
            seed: 0,
            kind: "SYNTHETIC".into(),
        }
    }
}

impl SimSection {
    pub fn to_spec(&self, region: &RegionSection) -> SimSpec {
        SimSpec {
            mu: self.mu,
            branching: self.branching,
            omega: self.omega,
            sigma: self.sigma_km,
            radius_km: region.radius_km,
            horizon_days: self.horizon_days,
            seed: self.seed,
            kind: self.kind.clone(),
            center: (region.center_lat, region.center_lon),
        }
    }
}

/// The whole declarative run description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub region: RegionSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub predict: PredictSection,
    #[serde(default)]
    pub ddgf: DdgfSection,
    #[serde(default)]
    pub em: EmSection,
    #[serde(default)]
    pub phm: PhmSection,
    #[serde(default)]
    pub kde: KdeSection,
    #[serde(default)]
    pub sim: SimSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.dx_km <= 0.0 || self.grid.dt_days <= 0.0 {
            bail!("grid steps must be positive");
        }
        if self.region.radius_km <= 0.0 {
            bail!("region radius must be positive");
        }
        if self.region.end_date <= self.region.start_date {
            bail!("region end_date must be after start_date");
        }
        if self.protocol.samples == 0 || self.protocol.lead_days == 0 {
            bail!("protocol needs at least one sample and a positive lead");
        }
        Ok(())
    }

    /// Writes the fully resolved configuration (all defaults filled) next to
    /// the run outputs.
    pub fn echo(&self, out_dir: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).context("serializing resolved config")?;
        std::fs::write(out_dir.join("resolved.toml"), text)?;
        Ok(())
    }

    /// Sidecar path convention: `catalog.csv` -> `catalog.meta.json`.
    pub fn meta_path(catalog: &Path) -> PathBuf {
        catalog.with_extension("meta.json")
    }
}
