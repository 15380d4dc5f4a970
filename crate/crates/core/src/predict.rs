//! Conditional-intensity maps: evaluate a trigger kernel against an event
//! history on the grid, `lambda(t, x) = sum_{t_i < t} g(t - t_i, |x - x_i|)`.
//!
//! The background rate is zero throughout; the model is the cascading term
//! alone. Distances run from cell centers to exact event coordinates, so
//! events are only discretized once (at training time, if the method grids
//! at all).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::gridding::GridSpec;
use crate::ingest::EventCatalog;
use crate::kernel::TriggerKernel;

/// What to do with negative tabulated kernel values at prediction time.
/// Spectral estimates keep raw (possibly negative) table entries because
/// they carry ranking information; the map builder applies the policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativePolicy {
    ClampToZero,
    Keep,
}

/// Prediction-time options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictConfig {
    /// Ignore contributions beyond this distance, km.
    pub r_cut: Option<f64>,
    /// Ignore contributions older than this lag, days.
    pub t_horizon: Option<f64>,
    pub negative_policy: NegativePolicy,
    /// Uniform background rate; fixed 0 for the pure cascading model.
    pub lambda0: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        PredictConfig {
            r_cut: None,
            t_horizon: None,
            negative_policy: NegativePolicy::ClampToZero,
            lambda0: 0.0,
        }
    }
}

/// A per-cell intensity (or ranking score) for one target day.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntensityMap {
    /// Row-major `ny * nx` values.
    pub values: Vec<f64>,
    pub spec: GridSpec,
    /// Day index the map predicts.
    pub target_day: usize,
    pub method: String,
    /// Cells inside the study disc; only these are ranked or scored.
    pub eligible: Vec<bool>,
}

impl IntensityMap {
    pub fn n_eligible(&self) -> usize {
        self.eligible.iter().filter(|&&e| e).count()
    }

    /// Writes `(j, i, x_km, y_km, value)` rows for eligible cells.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["j", "i", "x_km", "y_km", "value"])?;
        for j in 0..self.spec.ny {
            for i in 0..self.spec.nx {
                let flat = self.spec.flat(i, j);
                if !self.eligible[flat] {
                    continue;
                }
                let (x, y) = self.spec.cell_center(i, j);
                w.write_record([
                    j.to_string(),
                    i.to_string(),
                    x.to_string(),
                    y.to_string(),
                    self.values[flat].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes eligible cells sorted by value (descending, ties by flat
    /// index): `(rank, j, i, value)`.
    pub fn write_rank_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "j", "i", "value"])?;
        for (rank, &flat) in self.ranked_cells().iter().enumerate() {
            let (i, j) = (flat % self.spec.nx, flat / self.spec.nx);
            w.write_record([
                rank.to_string(),
                j.to_string(),
                i.to_string(),
                self.values[flat].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Eligible flat indices ordered by descending value, ties broken by
    /// ascending index.
    pub fn ranked_cells(&self) -> Vec<usize> {
        let mut cells: Vec<usize> = (0..self.values.len())
            .filter(|&c| self.eligible[c])
            .collect();
        cells.sort_by(|&a, &b| {
            self.values[b]
                .partial_cmp(&self.values[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        cells
    }
}

/// Builds the intensity map for `target_day` from a frozen history.
///
/// Only events strictly before the target day contribute; each eligible
/// cell accumulates the kernel at the event's integer-day lag and
/// center-to-event distance, subject to the config cutoffs and
/// negative-value policy.
pub fn intensity_map(
    kernel: &TriggerKernel,
    history: &EventCatalog,
    target_day: usize,
    spec: &GridSpec,
    cfg: &PredictConfig,
) -> Result<IntensityMap> {
    if (kernel.dx - spec.dx).abs() > 1e-12 {
        return Err(Error::KernelGridMismatch {
            kernel_dx: kernel.dx,
            grid_dx: spec.dx,
        });
    }
    let eligible = spec.disc_mask(history.radius_km);

    // (lag_days, x, y) per contributing event.
    let contributions: Vec<(f64, f64, f64)> = history
        .events
        .iter()
        .filter_map(|e| {
            let day = (e.time / spec.dt).floor();
            if day < 0.0 || day >= target_day as f64 {
                return None;
            }
            let lag = (target_day as f64 - day) * spec.dt;
            if cfg.t_horizon.is_some_and(|h| lag > h) {
                return None;
            }
            Some((lag, e.x, e.y))
        })
        .collect();

    let values = exec::map_range(spec.n_cells(), |flat| {
        if !eligible[flat] {
            return 0.0;
        }
        let (i, j) = (flat % spec.nx, flat / spec.nx);
        let (cx, cy) = spec.cell_center(i, j);
        let mut total = cfg.lambda0;
        for &(lag, ex, ey) in &contributions {
            let r = (cx - ex).hypot(cy - ey);
            if cfg.r_cut.is_some_and(|rc| r > rc) {
                continue;
            }
            let g = kernel.value_at(lag, r);
            total += match cfg.negative_policy {
                NegativePolicy::ClampToZero => g.max(0.0),
                NegativePolicy::Keep => g,
            };
        }
        total
    });

    Ok(IntensityMap {
        values,
        spec: *spec,
        target_day,
        method: String::new(),
        eligible,
    })
}

/// Lead-time prediction with frozen history: the map for day
/// `first_day + n_days - 1`, computed without updating the history in
/// between. `n_days = 1` reduces to [`intensity_map`] at `first_day`.
pub fn multi_day_map(
    kernel: &TriggerKernel,
    history: &EventCatalog,
    first_day: usize,
    n_days: usize,
    spec: &GridSpec,
    cfg: &PredictConfig,
) -> Result<IntensityMap> {
    intensity_map(kernel, history, first_day + n_days - 1, spec, cfg)
}

/// Alternative lead-time mode: the summed intensity over the whole window
/// `[first_day, first_day + n_days)`, history frozen.
pub fn aggregated_map(
    kernel: &TriggerKernel,
    history: &EventCatalog,
    first_day: usize,
    n_days: usize,
    spec: &GridSpec,
    cfg: &PredictConfig,
) -> Result<IntensityMap> {
    let mut total = intensity_map(kernel, history, first_day, spec, cfg)?;
    for d in 1..n_days {
        let day_map = intensity_map(kernel, history, first_day + d, spec, cfg)?;
        for (acc, v) in total.values.iter_mut().zip(&day_map.values) {
            *acc += v;
        }
    }
    total.target_day = first_day + n_days - 1;
    Ok(total)
}
