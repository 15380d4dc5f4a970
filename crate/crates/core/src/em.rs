//! Non-parametric EM estimation of the trigger kernel: alternate between
//! assigning each event a responsibility split over "background" and "child
//! of event i", and re-estimating the histogram kernel and background rate
//! from those responsibilities.
//!
//! The histogram bins are tied to the grid resolution (width `dt` in lag,
//! `dx` in radius) so EM and spectral kernels are directly comparable. The
//! M step normalizes parent masses by the total event count rather than a
//! per-bin exposure correction near the horizon boundary; the bias is
//! O(t_max / T) and negligible for the window lengths used here.

use crate::error::{Error, Result};
use crate::exec;
use crate::ingest::EventCatalog;
use crate::kernel::{Interpolation, TriggerKernel};

/// EM estimation parameters.
#[derive(Debug, Clone)]
pub struct EmConfig {
    /// E/M iterations, run exactly (no convergence stopping).
    pub iterations: usize,
    /// Kernel support in lag, days.
    pub t_max: f64,
    /// Kernel support in radius, km.
    pub r_max: f64,
    /// Decay rate of the exponential initial guess, 1/day.
    pub omega0: f64,
    /// Lag bin width, days.
    pub dt: f64,
    /// Radial bin width, km.
    pub dx: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            iterations: 50,
            t_max: 100.0,
            r_max: 2.0,
            omega0: 0.5,
            dt: 1.0,
            dx: 0.25,
        }
    }
}

/// A fitted EM model: histogram kernel, uniform background rate, and the
/// per-iteration log-likelihood trace.
#[derive(Debug, Clone)]
pub struct EmModel {
    pub kernel: TriggerKernel,
    /// Background rate, events/(km^2 * day).
    pub mu: f64,
    /// Log-likelihood of the parameters entering each iteration.
    pub loglik_trace: Vec<f64>,
}

/// Adapter to the shared kernel type (the model already stores histogram
/// semantics, so this is a copy).
pub fn em_kernel(model: &EmModel) -> TriggerKernel {
    model.kernel.clone()
}

/// Bin volume `dt * annulus area` for radial bin `m`.
fn bin_volume(cfg: &EmConfig, m: usize) -> f64 {
    let r0 = m as f64 * cfg.dx;
    let r1 = r0 + cfg.dx;
    cfg.dt * std::f64::consts::PI * (r1 * r1 - r0 * r0)
}

/// Pair table entry: parent index is implicit in the CSR layout; we only
/// need each admissible pair's histogram bin.
struct PairTable {
    /// Flattened bins of pairs, grouped by child event j.
    bins: Vec<u32>,
    /// `offsets[j] .. offsets[j+1]` indexes `bins` for child j.
    offsets: Vec<usize>,
}

fn build_pairs(catalog: &EventCatalog, cfg: &EmConfig, n_rbins: usize) -> PairTable {
    let events = &catalog.events;
    let mut bins = Vec::new();
    let mut offsets = Vec::with_capacity(events.len() + 1);
    offsets.push(0);
    for j in 0..events.len() {
        let ej = &events[j];
        for i in (0..j).rev() {
            let ei = &events[i];
            let lag = ej.time - ei.time;
            if lag >= cfg.t_max {
                break;
            }
            let r = (ej.x - ei.x).hypot(ej.y - ei.y);
            if r >= cfg.r_max {
                continue;
            }
            let tb = (lag / cfg.dt).floor() as usize;
            let rb = (r / cfg.dx).floor() as usize;
            bins.push((tb * n_rbins + rb) as u32);
        }
        offsets.push(bins.len());
    }
    PairTable { bins, offsets }
}

/// Fits the EM model on a catalog observed over a region of area
/// `area_km2` for `horizon_days`.
///
/// Starts from an exponentially decaying, radially uniform kernel of unit
/// space-time mass and `mu = N / (2 S T)`, then runs exactly
/// `cfg.iterations` E/M pairs.
pub fn em_fit(
    catalog: &EventCatalog,
    area_km2: f64,
    horizon_days: f64,
    cfg: &EmConfig,
) -> Result<EmModel> {
    if catalog.is_empty() {
        return Err(Error::EmptyCatalog("EM needs at least one event"));
    }
    if horizon_days <= 0.0 {
        return Err(Error::ZeroHorizon);
    }
    let n_events = catalog.len();
    let n_tbins = (cfg.t_max / cfg.dt).ceil() as usize;
    let n_rbins = (cfg.r_max / cfg.dx).ceil() as usize;
    let n_bins = n_tbins * n_rbins;
    let volumes: Vec<f64> = (0..n_rbins).map(|m| bin_volume(cfg, m)).collect();

    // Initial guess: omega0 * exp(-omega0 t) in lag, uniform per area in r,
    // scaled to unit space-time integral over the histogram support.
    let mut g = vec![0.0f64; n_bins];
    for tb in 0..n_tbins {
        let t_center = (tb as f64 + 0.5) * cfg.dt;
        let value = cfg.omega0 * (-cfg.omega0 * t_center).exp()
            / (std::f64::consts::PI * cfg.r_max * cfg.r_max);
        for rb in 0..n_rbins {
            g[tb * n_rbins + rb] = value;
        }
    }
    let raw_mass: f64 = (0..n_bins).map(|b| g[b] * volumes[b % n_rbins]).sum();
    for v in &mut g {
        *v /= raw_mass;
    }
    let st = area_km2 * horizon_days;
    let mut mu = n_events as f64 / (2.0 * st);

    let pairs = build_pairs(catalog, cfg, n_rbins);
    let chunk = 256usize;
    let n_chunks = n_events.div_ceil(chunk);

    let mut loglik_trace = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        // E step fused with the M-step accumulations, chunked over child
        // events with an ordered merge for determinism.
        let partials: Vec<Result<(f64, f64, Vec<f64>)>> = exec::map_range(n_chunks, |c| {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n_events);
            let mut sum_lnlam = 0.0;
            let mut sum_p0 = 0.0;
            let mut bin_mass = vec![0.0f64; n_bins];
            for j in lo..hi {
                let slot = &pairs.bins[pairs.offsets[j]..pairs.offsets[j + 1]];
                let lambda = mu + slot.iter().map(|&b| g[b as usize]).sum::<f64>();
                if lambda <= 0.0 {
                    return Err(Error::ZeroIntensity(j));
                }
                sum_lnlam += lambda.ln();
                sum_p0 += mu / lambda;
                for &b in slot {
                    bin_mass[b as usize] += g[b as usize] / lambda;
                }
            }
            Ok((sum_lnlam, sum_p0, bin_mass))
        });

        let mut sum_lnlam = 0.0;
        let mut sum_p0 = 0.0;
        let mut bin_mass = vec![0.0f64; n_bins];
        for partial in partials {
            let (lnlam, p0, bins) = partial?;
            sum_lnlam += lnlam;
            sum_p0 += p0;
            for (acc, v) in bin_mass.iter_mut().zip(bins) {
                *acc += v;
            }
        }

        let kernel_mass: f64 = (0..n_bins).map(|b| g[b] * volumes[b % n_rbins]).sum();
        loglik_trace.push(sum_lnlam - mu * st - n_events as f64 * kernel_mass);

        // M step.
        mu = sum_p0 / st;
        for b in 0..n_bins {
            g[b] = bin_mass[b] / (n_events as f64 * volumes[b % n_rbins]);
        }
    }

    let kernel = TriggerKernel {
        g: (0..n_tbins)
            .map(|tb| g[tb * n_rbins..(tb + 1) * n_rbins].to_vec())
            .collect(),
        r_bins: (0..n_rbins).map(|m| (m as f64 + 0.5) * cfg.dx).collect(),
        dt: cfg.dt,
        dx: cfg.dx,
        t_cut: None,
        r_cut: None,
        interp: Interpolation::Histogram,
    };
    Ok(EmModel {
        kernel,
        mu,
        loglik_trace,
    })
}
