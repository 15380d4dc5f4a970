//! [`Forecaster`] adapters wiring each estimator into the backtest harness.

use crate::baselines::{kde_intensity, phm_kernel, KdeConfig, PhmConfig};
use crate::ddgf::{ddgf_fit, DdgfConfig};
use crate::em::{em_fit, EmConfig};
use crate::error::Result;
use crate::evaluate::{Forecaster, LeadMode, LeadWindow};
use crate::gridding::{rasterize, GridSpec};
use crate::ingest::EventCatalog;
use crate::kernel::TriggerKernel;
use crate::predict::{aggregated_map, intensity_map, IntensityMap, PredictConfig};

fn lead_map(
    kernel: &TriggerKernel,
    train: &EventCatalog,
    spec: &GridSpec,
    lead: LeadWindow,
    cfg: &PredictConfig,
) -> Result<IntensityMap> {
    match lead.mode {
        LeadMode::SingleDay => intensity_map(kernel, train, lead.target_day(), spec, cfg),
        LeadMode::Aggregate => {
            aggregated_map(kernel, train, lead.first_day, lead.n_days, spec, cfg)
        }
    }
}

/// Spectral (Green's-function) forecaster.
pub struct DdgfForecaster {
    pub ddgf: DdgfConfig,
    pub predict: PredictConfig,
}

impl Forecaster for DdgfForecaster {
    fn name(&self) -> &str {
        "ddgf"
    }

    fn forecast(
        &self,
        train: &EventCatalog,
        spec: &GridSpec,
        lead: LeadWindow,
    ) -> Result<IntensityMap> {
        let train_spec = GridSpec {
            nt: lead.first_day,
            ..*spec
        };
        let (_, kernel) = ddgf_fit(&rasterize(train, &train_spec).0, &self.ddgf)?;
        let mut map = lead_map(&kernel, train, spec, lead, &self.predict)?;
        map.method = self.name().to_string();
        Ok(map)
    }
}

/// EM histogram forecaster.
pub struct EmForecaster {
    pub em: EmConfig,
    pub predict: PredictConfig,
}

impl Forecaster for EmForecaster {
    fn name(&self) -> &str {
        "em"
    }

    fn forecast(
        &self,
        train: &EventCatalog,
        spec: &GridSpec,
        lead: LeadWindow,
    ) -> Result<IntensityMap> {
        let area = match train.radius_km {
            Some(r) => std::f64::consts::PI * r * r,
            None => spec.n_cells() as f64 * spec.cell_area(),
        };
        let model = em_fit(train, area, lead.first_day as f64 * spec.dt, &self.em)?;
        let mut map = lead_map(&model.kernel, train, spec, lead, &self.predict)?;
        map.method = self.name().to_string();
        Ok(map)
    }
}

/// Parametric hotspot forecaster.
pub struct PhmForecaster {
    pub phm: PhmConfig,
    pub predict: PredictConfig,
}

impl Forecaster for PhmForecaster {
    fn name(&self) -> &str {
        "phm"
    }

    fn forecast(
        &self,
        train: &EventCatalog,
        spec: &GridSpec,
        lead: LeadWindow,
    ) -> Result<IntensityMap> {
        let n_lags = lead.first_day + lead.n_days + 1;
        let r_targets: Vec<f64> = (0..=4 * spec.nx / 2)
            .map(|m| m as f64 * spec.dx / 2.0)
            .collect();
        let kernel = phm_kernel(&self.phm, n_lags, &r_targets);
        let mut map = lead_map(&kernel, train, spec, lead, &self.predict)?;
        map.method = self.name().to_string();
        Ok(map)
    }
}

/// Kernel-density forecaster (time independent).
pub struct KdeForecaster {
    pub kde: KdeConfig,
}

impl Forecaster for KdeForecaster {
    fn name(&self) -> &str {
        "kde"
    }

    fn forecast(
        &self,
        train: &EventCatalog,
        spec: &GridSpec,
        lead: LeadWindow,
    ) -> Result<IntensityMap> {
        kde_intensity(train, spec, &self.kde, lead.target_day())
    }
}

/// Flat map: the random-selection baseline (ranking falls back to cell
/// order).
pub struct UniformForecaster;

impl Forecaster for UniformForecaster {
    fn name(&self) -> &str {
        "uniform"
    }

    fn forecast(
        &self,
        train: &EventCatalog,
        spec: &GridSpec,
        lead: LeadWindow,
    ) -> Result<IntensityMap> {
        Ok(IntensityMap {
            values: vec![1.0; spec.n_cells()],
            spec: *spec,
            target_day: lead.target_day(),
            method: self.name().to_string(),
            eligible: spec.disc_mask(train.radius_km),
        })
    }
}
