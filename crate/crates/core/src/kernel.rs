//! The tabulated trigger kernel g(t, r) shared by every estimator.
//!
//! Rows are integer lags in units of `dt`; columns are radial sample points.
//! Spectral estimates tabulate g at radii interpolated piecewise-linearly,
//! while histogram (EM) kernels use piecewise-constant bins of width `dx`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial interpolation semantics of a tabulated kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Values tabulated at the radii in `r_bins`; linear between them,
    /// zero beyond the last radius.
    PiecewiseLinear,
    /// Values constant on annuli `[m*dx, (m+1)*dx)`; `r_bins` holds the
    /// annulus centers.
    Histogram,
}

/// Tabulated cascading-influence kernel, 1/(day*km^2).
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerKernel {
    /// `g[lag][radial bin]`.
    pub g: Vec<Vec<f64>>,
    /// Radial sample points (centers), km.
    pub r_bins: Vec<f64>,
    /// Lag step, days.
    pub dt: f64,
    /// Spatial resolution the kernel was derived at, km.
    pub dx: f64,
    /// Temporal cutoff: g = 0 for t > t_cut, days.
    pub t_cut: Option<f64>,
    /// Radial cutoff: g = 0 for r > r_cut, km.
    pub r_cut: Option<f64>,
    pub interp: Interpolation,
}

impl TriggerKernel {
    pub fn n_lags(&self) -> usize {
        self.g.len()
    }

    /// Raw kernel value at continuous lag and radius, honoring cutoffs but
    /// not any negative-value policy.
    pub fn value_at(&self, lag_days: f64, r: f64) -> f64 {
        if lag_days < 0.0 || r < 0.0 {
            return 0.0;
        }
        if let Some(t_cut) = self.t_cut {
            if lag_days > t_cut {
                return 0.0;
            }
        }
        if let Some(r_cut) = self.r_cut {
            if r > r_cut {
                return 0.0;
            }
        }
        let row = match self.interp {
            Interpolation::PiecewiseLinear => (lag_days / self.dt + 0.5).floor() as usize,
            Interpolation::Histogram => (lag_days / self.dt).floor() as usize,
        };
        if row >= self.g.len() {
            return 0.0;
        }
        let values = &self.g[row];
        match self.interp {
            Interpolation::Histogram => {
                let bin = (r / self.dx).floor() as usize;
                if bin < values.len() {
                    values[bin]
                } else {
                    0.0
                }
            }
            Interpolation::PiecewiseLinear => {
                match self.r_bins.iter().position(|&rb| rb >= r) {
                    Some(0) => values[0],
                    Some(i) => {
                        let (r0, r1) = (self.r_bins[i - 1], self.r_bins[i]);
                        let w = (r - r0) / (r1 - r0);
                        values[i - 1] * (1.0 - w) + values[i] * w
                    }
                    None => 0.0,
                }
            }
        }
    }

    /// The temporal profile g(t, r = 0): first radial column per lag.
    pub fn temporal_profile(&self) -> Vec<f64> {
        self.g.iter().map(|row| row[0]).collect()
    }

    /// Zeroes entries beyond the configured cutoffs so the table itself
    /// satisfies the cutoff invariant.
    pub fn enforce_cutoffs(&mut self) {
        for (n, row) in self.g.iter_mut().enumerate() {
            let t = n as f64 * self.dt;
            let dead_t = self.t_cut.is_some_and(|tc| t > tc);
            for (m, v) in row.iter_mut().enumerate() {
                let dead_r = self.r_cut.is_some_and(|rc| self.r_bins[m] > rc);
                if dead_t || dead_r {
                    *v = 0.0;
                }
            }
        }
    }

    /// Space-time integral of the kernel over its support,
    /// `sum g * dt * annulus area` (histogram) or via the trapezoid rule in
    /// r (piecewise linear).
    pub fn mass(&self) -> f64 {
        let mut total = 0.0;
        for row in &self.g {
            let mut radial = 0.0;
            match self.interp {
                Interpolation::Histogram => {
                    for (m, v) in row.iter().enumerate() {
                        let r0 = m as f64 * self.dx;
                        let r1 = r0 + self.dx;
                        radial += v * std::f64::consts::PI * (r1 * r1 - r0 * r0);
                    }
                }
                Interpolation::PiecewiseLinear => {
                    for w in self.r_bins.windows(2).zip(row.windows(2)) {
                        let ((r, g), (r2, g2)) = ((w.0[0], w.1[0]), (w.0[1], w.1[1]));
                        radial += std::f64::consts::PI * (r2 - r) * (g * r + g2 * r2);
                    }
                }
            }
            total += radial * self.dt;
        }
        total
    }

    /// Writes `(lag_days, r_km, g_value)` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lag_days", "r_km", "g_value"])?;
        for (n, row) in self.g.iter().enumerate() {
            let t = n as f64 * self.dt;
            for (m, v) in row.iter().enumerate() {
                w.write_record([t.to_string(), self.r_bins[m].to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Serializes the kernel geometry (everything but the table).
    pub fn write_meta<W: Write>(&self, writer: W) -> Result<()> {
        let meta = KernelMeta {
            dt: self.dt,
            dx: self.dx,
            t_cut: self.t_cut,
            r_cut: self.r_cut,
            interp: self.interp,
        };
        serde_json::to_writer_pretty(writer, &meta).map_err(|e| Error::Metadata(e.to_string()))?;
        Ok(())
    }

    /// Reads a kernel from its CSV table plus the JSON metadata sidecar.
    pub fn read_csv<R: Read, M: Read>(csv_reader: R, meta_reader: M) -> Result<TriggerKernel> {
        let meta: KernelMeta =
            serde_json::from_reader(meta_reader).map_err(|e| Error::Metadata(e.to_string()))?;
        let mut reader = csv::ReaderBuilder::new().from_reader(csv_reader);
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Metadata(format!("bad kernel row: {record:?}")))
            };
            rows.push((parse(0)?, parse(1)?, parse(2)?));
        }
        let mut r_bins: Vec<f64> = Vec::new();
        for &(lag, r, _) in &rows {
            if lag == 0.0 {
                r_bins.push(r);
            }
        }
        if r_bins.is_empty() {
            return Err(Error::Metadata("kernel table has no lag-0 rows".into()));
        }
        let n_lags = rows.len() / r_bins.len();
        if n_lags * r_bins.len() != rows.len() {
            return Err(Error::Metadata("ragged kernel table".into()));
        }
        let g = (0..n_lags)
            .map(|n| {
                rows[n * r_bins.len()..(n + 1) * r_bins.len()]
                    .iter()
                    .map(|&(_, _, v)| v)
                    .collect()
            })
            .collect();
        Ok(TriggerKernel {
            g,
            r_bins,
            dt: meta.dt,
            dx: meta.dx,
            t_cut: meta.t_cut,
            r_cut: meta.r_cut,
            interp: meta.interp,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct KernelMeta {
    dt: f64,
    dx: f64,
    t_cut: Option<f64>,
    r_cut: Option<f64>,
    interp: Interpolation,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_kernel() -> TriggerKernel {
        TriggerKernel {
            g: vec![vec![4.0, 2.0, 0.0], vec![2.0, 1.0, 0.5]],
            r_bins: vec![0.0, 0.125, 0.25],
            dt: 1.0,
            dx: 0.25,
            t_cut: None,
            r_cut: None,
            interp: Interpolation::PiecewiseLinear,
        }
    }

    #[test]
    fn linear_interpolation_between_radii() {
        let k = linear_kernel();
        assert_eq!(k.value_at(0.0, 0.0), 4.0);
        assert_eq!(k.value_at(0.0, 0.0625), 3.0);
        assert_eq!(k.value_at(1.0, 0.125), 1.0);
        // Beyond the last tabulated radius the kernel is zero.
        assert_eq!(k.value_at(0.0, 0.3), 0.0);
        // Beyond the last lag row too.
        assert_eq!(k.value_at(2.0, 0.0), 0.0);
    }

    #[test]
    fn cutoffs_zero_the_kernel() {
        let mut k = linear_kernel();
        k.t_cut = Some(0.5);
        k.r_cut = Some(0.1);
        assert_eq!(k.value_at(1.0, 0.0), 0.0);
        assert_eq!(k.value_at(0.0, 0.2), 0.0);
        assert_eq!(k.value_at(0.0, 0.0), 4.0);
        k.enforce_cutoffs();
        assert_eq!(k.g[1], vec![0.0, 0.0, 0.0]);
        assert_eq!(k.g[0], vec![4.0, 0.0, 0.0]);
    }

    #[test]
    fn histogram_lookup() {
        let k = TriggerKernel {
            g: vec![vec![3.0, 1.0]],
            r_bins: vec![0.125, 0.375],
            dt: 1.0,
            dx: 0.25,
            t_cut: None,
            r_cut: None,
            interp: Interpolation::Histogram,
        };
        assert_eq!(k.value_at(0.2, 0.0), 3.0);
        assert_eq!(k.value_at(0.2, 0.24), 3.0);
        assert_eq!(k.value_at(0.2, 0.25), 1.0);
        assert_eq!(k.value_at(0.2, 0.5), 0.0);
        assert_eq!(k.value_at(1.0, 0.0), 0.0);
    }

    #[test]
    fn csv_roundtrip() {
        let k = linear_kernel();
        let mut table = Vec::new();
        let mut meta = Vec::new();
        k.write_csv(&mut table).unwrap();
        k.write_meta(&mut meta).unwrap();
        let reread = TriggerKernel::read_csv(table.as_slice(), meta.as_slice()).unwrap();
        assert_eq!(k, reread);
    }

    #[test]
    fn histogram_mass_is_bin_sum_times_volume() {
        let k = TriggerKernel {
            g: vec![vec![2.0, 1.0], vec![1.0, 0.0]],
            r_bins: vec![0.5, 1.5],
            dt: 1.0,
            dx: 1.0,
            t_cut: None,
            r_cut: None,
            interp: Interpolation::Histogram,
        };
        let pi = std::f64::consts::PI;
        let expected = 2.0 * pi + 1.0 * 3.0 * pi + 1.0 * pi;
        assert!((k.mass() - expected).abs() < 1e-12);
    }
}
