//! Comparator methods: the prospective-hotspot-maps parametric kernel and a
//! kernel-density-estimate intensity baseline.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec;
use crate::gridding::GridSpec;
use crate::ingest::EventCatalog;
use crate::kernel::{Interpolation, TriggerKernel};
use crate::predict::IntensityMap;

/// Prospective hotspot maps: `g(t, r) = 1 / ((1 + t/tau)(1 + 2r/dx))` with
/// hard cutoffs. The published constants are `tau` = 7 days, `t_cut` = 60
/// days, `r_cut` = 0.4 km.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhmConfig {
    /// Temporal decay scale, days.
    pub tau: f64,
    /// Spatial mesh length entering the radial factor, km.
    pub dx: f64,
    /// Hard temporal cutoff, days.
    pub t_cut: Option<f64>,
    /// Hard radial cutoff, km.
    pub r_cut: Option<f64>,
}

impl Default for PhmConfig {
    fn default() -> Self {
        PhmConfig {
            tau: 7.0,
            dx: 0.25,
            t_cut: Some(60.0),
            r_cut: None,
        }
    }
}

/// The PHM weight at lag `t` days and distance `r` km; zero beyond the
/// cutoffs.
pub fn phm_weight(t: f64, r: f64, cfg: &PhmConfig) -> f64 {
    if cfg.t_cut.is_some_and(|tc| t > tc) || cfg.r_cut.is_some_and(|rc| r > rc) {
        return 0.0;
    }
    1.0 / ((1.0 + t / cfg.tau) * (1.0 + 2.0 * r / cfg.dx))
}

/// Tabulates the PHM weight as a [`TriggerKernel`] on integer-day lags and
/// the given radii, so it runs through the same prediction path as the
/// estimated kernels.
pub fn phm_kernel(cfg: &PhmConfig, n_lags: usize, r_targets: &[f64]) -> TriggerKernel {
    let g = (0..n_lags)
        .map(|n| {
            let t = n as f64;
            r_targets.iter().map(|&r| phm_weight(t, r, cfg)).collect()
        })
        .collect();
    TriggerKernel {
        g,
        r_bins: r_targets.to_vec(),
        dt: 1.0,
        dx: cfg.dx,
        t_cut: cfg.t_cut,
        r_cut: cfg.r_cut,
        interp: Interpolation::PiecewiseLinear,
    }
}

/// Kernel density estimation over the training events with an isotropic
/// Gaussian bell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdeConfig {
    /// Spatial bandwidth (Gaussian sigma), km.
    pub bandwidth: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        // Near-repeat length scale; the backtests never depend on the exact
        // value.
        KdeConfig { bandwidth: 0.35 }
    }
}

/// Time-independent KDE intensity: per cell, the sum over training events
/// of a normalized Gaussian at the center-to-event distance. Events/km²
/// integrated over the map approximate the training count (edge leakage
/// excepted).
pub fn kde_intensity(
    catalog: &EventCatalog,
    spec: &GridSpec,
    cfg: &KdeConfig,
    target_day: usize,
) -> Result<IntensityMap> {
    let eligible = spec.disc_mask(catalog.radius_km);
    let h2 = cfg.bandwidth * cfg.bandwidth;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * h2);
    let points: Vec<(f64, f64)> = catalog.events.iter().map(|e| (e.x, e.y)).collect();
    let values = exec::map_range(spec.n_cells(), |flat| {
        let (i, j) = (flat % spec.nx, flat / spec.nx);
        let (cx, cy) = spec.cell_center(i, j);
        points
            .iter()
            .map(|&(ex, ey)| {
                let d2 = (cx - ex).powi(2) + (cy - ey).powi(2);
                norm * (-d2 / (2.0 * h2)).exp()
            })
            .sum()
    });
    Ok(IntensityMap {
        values,
        spec: *spec,
        target_day,
        method: "kde".into(),
        eligible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Event;
    use chrono::NaiveDate;

    #[test]
    fn phm_published_values() {
        let cfg = PhmConfig {
            t_cut: Some(60.0),
            r_cut: None,
            ..PhmConfig::default()
        };
        assert!((phm_weight(0.0, 0.0, &cfg) - 1.0).abs() < 1e-12);
        assert!((phm_weight(7.0, 0.0, &cfg) - 0.5).abs() < 1e-12);
        assert_eq!(phm_weight(61.0, 0.0, &cfg), 0.0);
        assert!((phm_weight(0.0, 0.125, &cfg) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn phm_is_strictly_decreasing_inside_cutoffs() {
        let cfg = PhmConfig::default();
        let mut prev = phm_weight(0.0, 0.0, &cfg);
        for n in 1..60 {
            let w = phm_weight(n as f64, 0.0, &cfg);
            assert!(w < prev);
            prev = w;
        }
        let mut prev = phm_weight(0.0, 0.0, &cfg);
        for m in 1..20 {
            let w = phm_weight(0.0, m as f64 * 0.05, &cfg);
            assert!(w < prev);
            prev = w;
        }
    }

    fn catalog_at(points: &[(f64, f64, f64)]) -> EventCatalog {
        let events = points
            .iter()
            .map(|&(t, x, y)| Event {
                time: t,
                lat: 0.0,
                lon: 0.0,
                x,
                y,
                kind: "test".into(),
            })
            .collect();
        EventCatalog {
            events,
            epoch: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            center: (41.765, -87.665),
            radius_km: Some(5.0),
        }
    }

    #[test]
    fn kde_empty_catalog_gives_zero_map() {
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 1);
        let map = kde_intensity(&catalog_at(&[]), &spec, &KdeConfig::default(), 0).unwrap();
        assert!(map.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn kde_peaks_at_the_event_cell() {
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 1);
        let map = kde_intensity(
            &catalog_at(&[(0.0, 1.07, -2.3)]),
            &spec,
            &KdeConfig::default(),
            0,
        )
        .unwrap();
        let best = (0..map.values.len())
            .max_by(|&a, &b| map.values[a].partial_cmp(&map.values[b]).unwrap())
            .unwrap();
        let (i, j) = spec.cell_of(1.07, -2.3).unwrap();
        assert_eq!(best, spec.flat(i, j));
    }

    #[test]
    fn kde_mass_approximates_event_count() {
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 1);
        // Events away from the rim so leakage is negligible.
        let pts: Vec<(f64, f64, f64)> = (0..25)
            .map(|k| {
                let a = k as f64 * 0.7;
                (0.0, 2.5 * a.cos(), 2.5 * a.sin())
            })
            .collect();
        let map = kde_intensity(&catalog_at(&pts), &spec, &KdeConfig::default(), 0).unwrap();
        let mass: f64 = map.values.iter().sum::<f64>() * spec.cell_area();
        assert!(
            (mass - 25.0).abs() / 25.0 < 0.02,
            "integrated KDE mass {mass} vs 25"
        );
    }

    #[test]
    fn kde_is_additive_over_disjoint_catalogs() {
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 1);
        let cfg = KdeConfig::default();
        let a = catalog_at(&[(0.0, 1.0, 1.0), (0.0, -2.0, 0.5)]);
        let b = catalog_at(&[(0.0, 0.3, -0.7)]);
        let both = catalog_at(&[(0.0, 1.0, 1.0), (0.0, -2.0, 0.5), (0.0, 0.3, -0.7)]);
        let ma = kde_intensity(&a, &spec, &cfg, 0).unwrap();
        let mb = kde_intensity(&b, &spec, &cfg, 0).unwrap();
        let mab = kde_intensity(&both, &spec, &cfg, 0).unwrap();
        for flat in 0..spec.n_cells() {
            assert!((mab.values[flat] - (ma.values[flat] + mb.values[flat])).abs() < 1e-12);
        }
    }

    #[test]
    fn kde_is_permutation_invariant() {
        let spec = GridSpec::for_disc(5.0, 0.25, 1.0, 1);
        let cfg = KdeConfig::default();
        let fwd = catalog_at(&[(0.0, 1.0, 1.0), (0.0, -2.0, 0.5), (0.0, 0.3, -0.7)]);
        let rev = catalog_at(&[(0.0, 0.3, -0.7), (0.0, -2.0, 0.5), (0.0, 1.0, 1.0)]);
        let mf = kde_intensity(&fwd, &spec, &cfg, 0).unwrap();
        let mr = kde_intensity(&rev, &spec, &cfg, 0).unwrap();
        for flat in 0..spec.n_cells() {
            assert!((mf.values[flat] - mr.values[flat]).abs() < 1e-12);
        }
    }
}
