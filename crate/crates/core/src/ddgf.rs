//! Spectral trigger-kernel estimation.
//!
//! The estimator treats the trigger kernel as the response function of the
//! event density: the density's time-development operator Phi is measured as
//! an ensemble average of spectral ratios, and the kernel is then obtained
//! by solving an algebraic feedback relation per wavenumber and inverting
//! back to (t, r) space.
//!
//! No iteration or likelihood maximization is involved: one pass over the
//! data determines Phi, one linear solve in transform space determines g.
//!
//! Transform conventions.  Sampling Phi at integer lags `t = n dt` turns its
//! Laplace transform into a power series in `w = exp(-z dt)`:
//! `Phi(z) = dt * P(w)`, `P(w) = sum_n Phi_n w^n`.  The feedback relation
//! `g(z) = Phi(z) / (dt + Phi(z) * gamma)` becomes
//! `dt * sum_n g_n w^n = P(w) / (1 + gamma * P(w))`, so Laplace inversion is
//! exact power-series coefficient extraction, no contour choices involved.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec;
use crate::gridding::DensityField;
use crate::kernel::{Interpolation, TriggerKernel};
use crate::spectral::{
    coeffs_from_circle_samples, forward_fft2, hankel_inverse, radial_average, SpectralSlice,
};

/// Feedback coefficient making a uniform stationary history reproduce
/// itself: ln 2.
pub const GAMMA: f64 = std::f64::consts::LN_2;

/// Threshold on `|1 + gamma * P(w)|` below which the solve is singular.
const SINGULAR_EPS: f64 = 1e-8;

/// Configuration of the spectral solve.
#[derive(Debug, Clone)]
pub struct DdgfConfig {
    /// Feedback coefficient; ln 2 unless experimenting.
    pub gamma: f64,
    /// Maximum lag in days; `None` = min(400, nt - 1). The operator holds
    /// lags `0..=nt_lag`.
    pub nt_lag: Option<usize>,
    /// Sampling-circle radius for coefficient extraction.
    pub rho0: f64,
    /// Sample points on the circle; `None` = max(4096, 8 * nt_lag rounded
    /// up to a power of two).
    pub m_points: Option<usize>,
    /// Radii to tabulate the kernel at; `None` = multiples of dx/2 spanning
    /// the grid width.
    pub r_targets: Option<Vec<f64>>,
    /// Temporal cutoff applied to the tabulated kernel, days.
    pub t_cut: Option<f64>,
    /// Radial cutoff applied to the tabulated kernel, km.
    pub r_cut: Option<f64>,
}

impl Default for DdgfConfig {
    fn default() -> Self {
        DdgfConfig {
            gamma: GAMMA,
            nt_lag: None,
            // The unit circle hugs poles of the solved response when the
            // history is near-stationary; sampling slightly inside keeps
            // coefficient recovery at machine precision (amplification
            // 0.99^-400 ~ 56 is harmless).
            rho0: 0.99,
            m_points: None,
            r_targets: None,
            t_cut: None,
            r_cut: None,
        }
    }
}

/// The measured time-development operator Phi(n dt, k_r).
#[derive(Debug, Clone)]
pub struct TransferOperator {
    /// `phi[lag][radial k bin]`.
    pub phi: Vec<Vec<Complex64>>,
    /// Radial wavenumber bin centers, 1/km.
    pub k_bins: Vec<f64>,
    /// Eventful start slices averaged per lag; non-increasing.
    pub sample_counts: Vec<usize>,
    pub dt: f64,
    pub dx: f64,
}

impl TransferOperator {
    pub fn n_lags(&self) -> usize {
        self.phi.len()
    }

    /// Writes `(lag_days, k_r, re, im)` rows for inspection.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lag_days", "k_r", "re", "im"])?;
        for (n, row) in self.phi.iter().enumerate() {
            let t = n as f64 * self.dt;
            for (b, v) in row.iter().enumerate() {
                w.write_record([
                    t.to_string(),
                    self.k_bins[b].to_string(),
                    v.re.to_string(),
                    v.im.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Measures Phi by averaging, over every eventful start slice `t0`, the
/// ratio of the lag-n density spectrum to each single-event spectrum at t0.
///
/// `nt_lag` is the maximum lag; the operator holds lags `0..=nt_lag`
/// (clamped to the field length).
///
/// Single-event spectra have constant modulus `1/dt`, so the per-event
/// denominators never underflow; summing the reciprocals of the event
/// phases is the same as multiplying by `dt^2 * conj(rho(t0, k))`.
pub fn estimate_phi(field: &DensityField, nt_lag: usize) -> Result<TransferOperator> {
    let spec = &field.spec;
    if spec.nt < 2 {
        return Err(Error::EmptyTrainingWindow);
    }
    let cell_day = spec.cell_area() * spec.dt;

    // Per-slice spectra, one FFT each.
    let spectra: Vec<SpectralSlice> = exec::map_range(spec.nt, |n| {
        forward_fft2(field.slice(n), spec).expect("field slice matches its own spec")
    });
    let eventful: Vec<usize> = (0..spec.nt)
        .filter(|&n| {
            let count = field.slice(n).iter().sum::<f64>() * cell_day;
            count.round() >= 1.0
        })
        .collect();
    if eventful.is_empty() {
        return Err(Error::EmptyTrainingWindow);
    }

    let n_rows = nt_lag.min(spec.nt - 1) + 1;
    let n_cells = spec.n_cells();
    let dt2 = spec.dt * spec.dt;

    let per_lag: Vec<(Vec<f64>, usize)> = exec::map_range(n_rows, |lag| {
        let mut acc = vec![Complex64::default(); n_cells];
        let mut count = 0usize;
        for &t0 in &eventful {
            let target = t0 + lag;
            if target >= spec.nt {
                break;
            }
            count += 1;
            let num = &spectra[target].values;
            let den = &spectra[t0].values;
            for i in 0..n_cells {
                acc[i] += num[i] * den[i].conj() * dt2;
            }
        }
        if count > 0 {
            let inv = 1.0 / count as f64;
            for v in &mut acc {
                *v *= inv;
            }
        }
        let slice = SpectralSlice {
            values: acc,
            nx: spec.nx,
            ny: spec.ny,
            dx: spec.dx,
        };
        let profile = radial_average(&slice);
        let flat: Vec<f64> = profile
            .bins
            .iter()
            .flat_map(|&(k, v)| [k, v.re, v.im])
            .collect();
        (flat, count)
    });

    let first = &per_lag[0].0;
    let k_bins: Vec<f64> = first.chunks_exact(3).map(|c| c[0]).collect();
    let mut phi = Vec::with_capacity(n_rows);
    let mut sample_counts = Vec::with_capacity(n_rows);
    for (flat, count) in &per_lag {
        debug_assert_eq!(flat.len(), first.len());
        phi.push(
            flat.chunks_exact(3)
                .map(|c| Complex64::new(c[1], c[2]))
                .collect(),
        );
        sample_counts.push(*count);
    }
    Ok(TransferOperator {
        phi,
        k_bins,
        sample_counts,
        dt: spec.dt,
        dx: spec.dx,
    })
}

fn default_m_points(n_terms: usize) -> usize {
    (8 * n_terms).next_power_of_two().max(4096)
}

/// W-domain stage of the kernel solve: per radial bin, forms
/// `P_b(w) = sum_n phi[n][b] w^n`, solves `G_b = P_b / (1 + gamma P_b)`, and
/// extracts its power-series coefficients `c_n = dt * g_n(k_b)`.
///
/// Returns one coefficient sequence per retained bin (bins above the grid
/// Nyquist `pi/dx` carry no information and are dropped) together with the
/// retained bin centers. Singular denominators trigger one retry on a
/// slightly smaller circle, then fail.
pub fn solve_coefficients(
    op: &TransferOperator,
    cfg: &DdgfConfig,
) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    if op.phi.is_empty() || op.k_bins.is_empty() {
        return Err(Error::EmptyOperator);
    }
    let k_max = std::f64::consts::PI / op.dx;
    let keep: Vec<usize> = (0..op.k_bins.len())
        .filter(|&b| op.k_bins[b] <= k_max * (1.0 + 1e-12))
        .collect();
    let k_bins: Vec<f64> = keep.iter().map(|&b| op.k_bins[b]).collect();

    let n_terms = op.n_lags();
    let m_points = cfg.m_points.unwrap_or_else(|| default_m_points(n_terms));
    let m_points = m_points.max(2 * n_terms);

    let attempt = |rho0: f64| -> Result<Vec<Vec<Complex64>>> {
        let per_bin: Vec<Result<Vec<Complex64>>> = exec::map_slice(&keep, |&b| {
            let mut samples = Vec::with_capacity(m_points);
            for m in 0..m_points {
                let theta = 2.0 * std::f64::consts::PI * m as f64 / m_points as f64;
                let w = Complex64::from_polar(rho0, theta);
                let p = op
                    .phi
                    .iter()
                    .rev()
                    .fold(Complex64::default(), |acc, row| acc * w + row[b]);
                let den = Complex64::new(1.0, 0.0) + cfg.gamma * p;
                if den.norm() < SINGULAR_EPS {
                    return Err(Error::SingularKernelSolve {
                        w,
                        magnitude: den.norm(),
                    });
                }
                samples.push(p / den);
            }
            Ok(coeffs_from_circle_samples(samples, n_terms, rho0))
        });
        per_bin.into_iter().collect()
    };

    let coeffs = match attempt(cfg.rho0) {
        Ok(c) => c,
        Err(Error::SingularKernelSolve { .. }) if cfg.rho0 > 0.99 => attempt(0.99)?,
        Err(e) => return Err(e),
    };
    Ok((k_bins, coeffs))
}

/// Full kernel solve: w-domain coefficients per wavenumber bin, then an
/// inverse Hankel transform onto `r_targets` per lag. The real part is kept;
/// the imaginary residue of the radially averaged operator is statistical
/// noise (the raw complex operator stays available via
/// [`TransferOperator::write_csv`]).
pub fn solve_kernel(op: &TransferOperator, cfg: &DdgfConfig) -> Result<TriggerKernel> {
    let (k_bins, coeffs) = solve_coefficients(op, cfg)?;
    let n_lags = op.n_lags();
    let r_targets: Vec<f64> = cfg.r_targets.clone().unwrap_or_else(|| {
        let n_r = 4 * (k_bins.len().max(2) - 1);
        (0..=n_r).map(|m| m as f64 * op.dx / 2.0).collect()
    });

    let g: Vec<Vec<f64>> = exec::map_range(n_lags, |n| {
        let profile: Vec<(f64, Complex64)> = k_bins
            .iter()
            .enumerate()
            .map(|(bi, &k)| (k, coeffs[bi][n] / op.dt))
            .collect();
        hankel_inverse(&profile, &r_targets)
            .into_iter()
            .map(|v| v.re)
            .collect()
    });

    let mut kernel = TriggerKernel {
        g,
        r_bins: r_targets,
        dt: op.dt,
        dx: op.dx,
        t_cut: cfg.t_cut,
        r_cut: cfg.r_cut,
        interp: Interpolation::PiecewiseLinear,
    };
    kernel.enforce_cutoffs();
    Ok(kernel)
}

/// Convenience: estimate Phi from a field and solve for the kernel.
pub fn ddgf_fit(field: &DensityField, cfg: &DdgfConfig) -> Result<(TransferOperator, TriggerKernel)> {
    let max_lag = cfg
        .nt_lag
        .unwrap_or(400)
        .min(field.spec.nt.saturating_sub(1))
        .max(1);
    let op = estimate_phi(field, max_lag)?;
    let kernel = solve_kernel(&op, cfg)?;
    Ok((op, kernel))
}

/// Least-squares fit of `g(t) ~ -a log(b t)` over a lag range.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTailFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
    /// Set when the data had no variance (or no decay) to fit.
    pub degenerate: bool,
}

/// Shape diagnostics of a kernel's temporal profile at r = 0.
#[derive(Debug, Clone)]
pub struct KernelDiagnostics {
    /// Lags (in units of dt, >= 1) that are local maxima of g(t, 0).
    pub peak_lags: Vec<usize>,
    /// Logarithmic tail fit over the requested range, when enough points.
    pub log_fit: Option<LogTailFit>,
}

/// Peaks and long-tail fit of g(t, r = 0). The fit spans lags
/// `fit_range.0 ..= fit_range.1` and is omitted with fewer than 3 points.
pub fn kernel_diagnostics(kernel: &TriggerKernel, fit_range: (usize, usize)) -> KernelDiagnostics {
    let g0 = kernel.temporal_profile();
    let n = g0.len();

    let mut peak_lags = Vec::new();
    for lag in 1..n {
        let left_ok = lag == 1 || g0[lag] > g0[lag - 1];
        let right_ok = lag + 1 >= n || g0[lag] >= g0[lag + 1];
        // Lag 1 counts as a peak only when the profile falls after it.
        let boundary_ok = lag > 1 || (lag + 1 < n && g0[lag] > g0[lag + 1]);
        if left_ok && right_ok && boundary_ok {
            peak_lags.push(lag);
        }
    }

    let lo = fit_range.0.max(1);
    let hi = fit_range.1.min(n.saturating_sub(1));
    let points: Vec<(f64, f64)> = (lo..=hi.max(lo))
        .filter(|&lag| lag < n)
        .map(|lag| ((lag as f64 * kernel.dt).ln(), g0[lag]))
        .collect();
    let log_fit = if points.len() < 3 {
        None
    } else {
        Some(fit_log_model(&points))
    };
    KernelDiagnostics { peak_lags, log_fit }
}

/// Fits `g = alpha ln t + beta` and reports it as `-a log(b t)`.
fn fit_log_model(points: &[(f64, f64)]) -> LogTailFit {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if det.abs() < 1e-12 || ss_tot < 1e-300 {
        return LogTailFit {
            a: 0.0,
            b: 0.0,
            r_squared: 0.0,
            degenerate: true,
        };
    }
    let alpha = (n * sxy - sx * sy) / det;
    let beta = (sy - alpha * sx) / n;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (alpha * p.0 + beta)).powi(2))
        .sum();
    let r_squared = 1.0 - ss_res / ss_tot;
    if alpha == 0.0 {
        return LogTailFit {
            a: 0.0,
            b: 0.0,
            r_squared,
            degenerate: true,
        };
    }
    LogTailFit {
        a: -alpha,
        b: (beta / alpha).exp(),
        r_squared,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridding::{rasterize, GridSpec};
    use crate::ingest::{Event, EventCatalog};
    use chrono::NaiveDate;

    fn catalog_at(points: &[(f64, f64, f64)]) -> EventCatalog {
        let mut events: Vec<Event> = points
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
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        EventCatalog {
            events,
            epoch: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            center: (41.765, -87.665),
            radius_km: Some(5.0),
        }
    }

    fn spec(nt: usize) -> GridSpec {
        GridSpec::for_disc(5.0, 0.25, 1.0, nt)
    }

    fn operator_with(phi_fn: impl Fn(usize, usize) -> Complex64, n_lags: usize, n_bins: usize) -> TransferOperator {
        let dk = 2.0 * std::f64::consts::PI / 10.0;
        TransferOperator {
            phi: (0..n_lags)
                .map(|n| (0..n_bins).map(|b| phi_fn(n, b)).collect())
                .collect(),
            k_bins: (0..n_bins).map(|b| b as f64 * dk).collect(),
            sample_counts: vec![1; n_lags],
            dt: 1.0,
            dx: 0.25,
        }
    }

    #[test]
    fn repeated_event_in_one_cell_gives_unit_phi() {
        // Same cell on consecutive days: the unit-modulus spectra cancel.
        let catalog = catalog_at(&[(0.5, 0.1, 0.1), (1.5, 0.1, 0.1)]);
        let (field, _) = rasterize(&catalog, &spec(2));
        let op = estimate_phi(&field, 2).unwrap();
        for &v in &op.phi[1] {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
        // Lag 0 of a single-event slice is unit too.
        for &v in &op.phi[0] {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn no_later_events_gives_zero_phi() {
        let catalog = catalog_at(&[(0.5, 0.1, 0.1)]);
        let (field, _) = rasterize(&catalog, &spec(4));
        let op = estimate_phi(&field, 4).unwrap();
        for n in 1..op.n_lags() {
            for &v in &op.phi[n] {
                assert_eq!(v, Complex64::default());
            }
        }
    }

    #[test]
    fn phi_averages_uniformly_over_start_slices() {
        // t0 = 0 gives a unit ratio at lag 1 (day 1 repeats the cell); t0 = 1
        // gives zero (day 2 is empty): the mean is one half.
        let catalog = catalog_at(&[(0.5, 0.1, 0.1), (1.5, 0.1, 0.1)]);
        let (field, _) = rasterize(&catalog, &spec(3));
        let op = estimate_phi(&field, 3).unwrap();
        for &v in &op.phi[1] {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-10);
        }
        assert_eq!(op.sample_counts[1], 2);
    }

    #[test]
    fn sample_counts_are_non_increasing() {
        let catalog = catalog_at(&[
            (0.5, 0.1, 0.1),
            (2.5, -1.0, 0.3),
            (5.5, 1.2, -0.4),
            (6.5, 0.0, 0.0),
        ]);
        let (field, _) = rasterize(&catalog, &spec(8));
        let op = estimate_phi(&field, 8).unwrap();
        for w in op.sample_counts.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert_eq!(op.sample_counts[0], 4);
    }

    #[test]
    fn empty_field_is_fatal() {
        let catalog = catalog_at(&[]);
        let (field, _) = rasterize(&catalog, &spec(4));
        assert!(matches!(
            estimate_phi(&field, 4),
            Err(Error::EmptyTrainingWindow)
        ));
    }

    #[test]
    fn stationary_phi_solves_to_the_geometric_kernel() {
        // Phi == 1 at every lag: P = (1 - w^L)/(1 - w), and the solved
        // coefficients are dt * g_n = (1 + gamma)^-(n+1).
        let op = operator_with(|_, _| Complex64::new(1.0, 0.0), 60, 3);
        let cfg = DdgfConfig::default();
        let (_, coeffs) = solve_coefficients(&op, &cfg).unwrap();
        for bin in &coeffs {
            for (n, c) in bin.iter().enumerate().take(31) {
                let expected = (1.0 + GAMMA).powi(-(n as i32 + 1));
                assert!(
                    (c.re - expected).abs() < 1e-6 && c.im.abs() < 1e-9,
                    "n = {n}: {c} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn zero_operator_solves_to_zero_kernel() {
        let op = operator_with(|_, _| Complex64::default(), 10, 4);
        let kernel = solve_kernel(&op, &DdgfConfig::default()).unwrap();
        assert!(kernel.g.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_epsilon_term_expands_as_a_power_series() {
        // P = eps * w: G = eps w / (1 + gamma eps w), so dt g_1 = eps and
        // dt g_2 = -gamma eps^2.
        let eps = 1e-3;
        let op = operator_with(
            |n, _| {
                if n == 1 {
                    Complex64::new(eps, 0.0)
                } else {
                    Complex64::default()
                }
            },
            8,
            2,
        );
        let (_, coeffs) = solve_coefficients(&op, &DdgfConfig::default()).unwrap();
        for bin in &coeffs {
            assert!(bin[0].norm() < 1e-12);
            assert!((bin[1].re - eps).abs() < 1e-12);
            assert!((bin[2].re + GAMMA * eps * eps).abs() < 1e-12);
        }
    }

    #[test]
    fn small_amplitude_solve_is_linear() {
        // Scaling Phi by eps scales g by eps + O(eps^2).
        let shape = |n: usize| 0.3 + 0.6 / (1.0 + n as f64);
        let eps = 1e-4;
        let op = operator_with(|n, _| Complex64::new(shape(n) * eps, 0.0), 20, 2);
        let (_, coeffs) = solve_coefficients(&op, &DdgfConfig::default()).unwrap();
        for bin in &coeffs {
            for (n, c) in bin.iter().enumerate() {
                let linear = shape(n) * eps;
                assert!(
                    (c.re - linear).abs() / linear < 1e-3,
                    "lag {n}: {} vs {linear}",
                    c.re
                );
            }
        }
    }

    #[test]
    fn identical_fields_give_bit_identical_kernels() {
        let catalog = catalog_at(&[
            (0.5, 0.1, 0.1),
            (1.5, 0.3, -0.2),
            (2.5, -1.0, 0.3),
            (4.5, 1.2, -0.4),
        ]);
        let (field, _) = rasterize(&catalog, &spec(6));
        let cfg = DdgfConfig::default();
        let (_, k1) = ddgf_fit(&field, &cfg).unwrap();
        let (_, k2) = ddgf_fit(&field, &cfg).unwrap();
        assert_eq!(k1.g, k2.g);
    }

    #[test]
    fn diagnostics_recover_a_logarithmic_tail() {
        // g(t, 0) = -0.1 log(0.01 t) sampled at t = 1..400: the fit recovers
        // (a, b) within 1% with R^2 > 0.999.
        let g: Vec<Vec<f64>> = (0..=400)
            .map(|n| {
                let t = (n.max(1)) as f64;
                vec![-0.1 * (0.01 * t).ln()]
            })
            .collect();
        let kernel = TriggerKernel {
            g,
            r_bins: vec![0.0],
            dt: 1.0,
            dx: 0.25,
            t_cut: None,
            r_cut: None,
            interp: Interpolation::PiecewiseLinear,
        };
        let diag = kernel_diagnostics(&kernel, (1, 400));
        let fit = diag.log_fit.unwrap();
        assert!(!fit.degenerate);
        assert!((fit.a - 0.1).abs() / 0.1 < 0.01, "a = {}", fit.a);
        assert!((fit.b - 0.01).abs() / 0.01 < 0.01, "b = {}", fit.b);
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn monotone_profile_peaks_only_at_lag_one() {
        let g: Vec<Vec<f64>> = (0..30).map(|n| vec![(-(n as f64) * 0.3).exp()]).collect();
        let kernel = TriggerKernel {
            g,
            r_bins: vec![0.0],
            dt: 1.0,
            dx: 0.25,
            t_cut: None,
            r_cut: None,
            interp: Interpolation::PiecewiseLinear,
        };
        let diag = kernel_diagnostics(&kernel, (1, 29));
        assert_eq!(diag.peak_lags, vec![1]);
    }

    #[test]
    fn constant_profile_fit_is_degenerate() {
        let kernel = TriggerKernel {
            g: (0..30).map(|_| vec![2.0]).collect(),
            r_bins: vec![0.0],
            dt: 1.0,
            dx: 0.25,
            t_cut: None,
            r_cut: None,
            interp: Interpolation::PiecewiseLinear,
        };
        let diag = kernel_diagnostics(&kernel, (1, 29));
        let fit = diag.log_fit.unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.r_squared, 0.0);
        assert!(diag.peak_lags.is_empty());
    }

    #[test]
    fn interior_peaks_are_detected() {
        let mut g: Vec<Vec<f64>> = (0..30).map(|n| vec![(-(n as f64) * 0.3).exp()]).collect();
        g[5][0] = 1.5;
        g[9][0] = 1.2;
        let kernel = TriggerKernel {
            g,
            r_bins: vec![0.0],
            dt: 1.0,
            dx: 0.25,
            t_cut: None,
            r_cut: None,
            interp: Interpolation::PiecewiseLinear,
        };
        let diag = kernel_diagnostics(&kernel, (1, 29));
        assert_eq!(diag.peak_lags, vec![1, 5, 9]);
    }
}
