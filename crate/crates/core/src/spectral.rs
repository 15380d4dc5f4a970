//! Transform toolbox: 2-D discrete Fourier transform on the spatial mesh,
//! radial (angular) averaging in wavenumber space, power-series coefficient
//! extraction on a sampling circle, and the inverse Hankel transform.
//!
//! Fourier convention: `Y(k) = sum_cells exp(i k . x_cell) Y(x_cell) * cell_area`,
//! with cell centers as the spatial labels. Under this continuum
//! normalization a single unit-count event produces a spectrum of constant
//! modulus `1/dt`.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::gridding::GridSpec;

/// A complex field on the `nx x ny` wavenumber mesh of a [`GridSpec`].
///
/// Mesh points carry signed frequencies: `k_x(m) = 2*pi*f(m)/(nx*dx)` with
/// `f(m) = m` for `m < nx/2` and `m - nx` otherwise.
#[derive(Debug, Clone)]
pub struct SpectralSlice {
    /// Row-major `ny * nx` values, index `l * nx + m`.
    pub values: Vec<Complex64>,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
}

impl SpectralSlice {
    pub fn kx(&self, m: usize) -> f64 {
        let f = if m < self.nx.div_ceil(2) {
            m as f64
        } else {
            m as f64 - self.nx as f64
        };
        2.0 * std::f64::consts::PI * f / (self.nx as f64 * self.dx)
    }

    pub fn ky(&self, l: usize) -> f64 {
        let f = if l < self.ny.div_ceil(2) {
            l as f64
        } else {
            l as f64 - self.ny as f64
        };
        2.0 * std::f64::consts::PI * f / (self.ny as f64 * self.dx)
    }

    /// Nominal radial bin width, `2*pi/(nx*dx)`.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.nx as f64 * self.dx)
    }
}

/// Angular average of a spectral slice over annular wavenumber bins.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    /// `(k_r bin center, mean value)` with strictly increasing centers;
    /// empty bins are dropped.
    pub bins: Vec<(f64, Complex64)>,
    /// Bin width the centers are multiples of.
    pub dk: f64,
}

fn fft2(values: &mut [Complex64], nx: usize, ny: usize, direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let row_fft = planner.plan_fft(nx, direction);
    for row in values.chunks_exact_mut(nx) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft(ny, direction);
    let mut column = vec![Complex64::default(); ny];
    for m in 0..nx {
        for l in 0..ny {
            column[l] = values[l * nx + m];
        }
        col_fft.process(&mut column);
        for l in 0..ny {
            values[l * nx + m] = column[l];
        }
    }
}

/// Forward transform of one spatial slice under the continuum convention.
///
/// Fatal on a dimension mismatch between the slice and the grid.
pub fn forward_fft2(slice: &[f64], spec: &GridSpec) -> Result<SpectralSlice> {
    if slice.len() != spec.n_cells() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_cells(),
            got: slice.len(),
        });
    }
    let mut out = SpectralSlice {
        values: slice.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        nx: spec.nx,
        ny: spec.ny,
        dx: spec.dx,
    };
    // Positive-exponent kernel: an unnormalized inverse-direction FFT.
    fft2(&mut out.values, spec.nx, spec.ny, FftDirection::Inverse);

    let area = spec.cell_area();
    let (xc0, yc0) = spec.cell_center(0, 0);
    for l in 0..spec.ny {
        let phase_y = out.ky(l) * yc0;
        for m in 0..spec.nx {
            let phase = Complex64::from_polar(area, out.kx(m) * xc0 + phase_y);
            out.values[l * spec.nx + m] *= phase;
        }
    }
    Ok(out)
}

/// Inverse of [`forward_fft2`]; recovers the spatial slice on `spec`.
pub fn inverse_fft2(slice: &SpectralSlice, spec: &GridSpec) -> Result<Vec<f64>> {
    if slice.nx != spec.nx || slice.ny != spec.ny {
        return Err(Error::DimensionMismatch {
            expected: spec.n_cells(),
            got: slice.nx * slice.ny,
        });
    }
    let area = spec.cell_area();
    let (xc0, yc0) = spec.cell_center(0, 0);
    let mut values = slice.values.clone();
    for l in 0..spec.ny {
        let phase_y = slice.ky(l) * yc0;
        for m in 0..spec.nx {
            let phase = Complex64::from_polar(1.0 / area, -(slice.kx(m) * xc0 + phase_y));
            values[l * spec.nx + m] *= phase;
        }
    }
    fft2(&mut values, spec.nx, spec.ny, FftDirection::Forward);
    let scale = 1.0 / (spec.nx * spec.ny) as f64;
    Ok(values.into_iter().map(|v| v.re * scale).collect())
}

/// Angular average over annular bins of width `dk = 2*pi/(nx*dx)`.
///
/// Bin `b` collects mesh points with `|k|` in `[b*dk - dk/2, b*dk + dk/2)`,
/// so bin 0 contains k = 0. Empty bins are dropped.
pub fn radial_average(slice: &SpectralSlice) -> RadialProfile {
    let dk = slice.dk();
    let mut sums: Vec<(Complex64, usize)> = Vec::new();
    for l in 0..slice.ny {
        let ky = slice.ky(l);
        for m in 0..slice.nx {
            let kx = slice.kx(m);
            let k = kx.hypot(ky);
            let b = (k / dk + 0.5).floor() as usize;
            if b >= sums.len() {
                sums.resize(b + 1, (Complex64::default(), 0));
            }
            sums[b].0 += slice.values[l * slice.nx + m];
            sums[b].1 += 1;
        }
    }
    let bins = sums
        .into_iter()
        .enumerate()
        .filter(|(_, (_, count))| *count > 0)
        .map(|(b, (sum, count))| (b as f64 * dk, sum / count as f64))
        .collect();
    RadialProfile { bins, dk }
}

/// Recovers the leading power-series coefficients of `evaluator` by sampling
/// it on `m_points` equispaced points of the circle `|w| = rho0` and taking
/// a discrete Fourier transform.
///
/// Requires `m_points >= 2 * n_terms` and `0 < rho0 <= 1`; fatal if the
/// evaluator is non-finite at any sample point.
pub fn coeff_extract<F>(
    evaluator: F,
    n_terms: usize,
    m_points: usize,
    rho0: f64,
) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Complex64,
{
    if !(rho0 > 0.0 && rho0 <= 1.0) {
        return Err(Error::BadSamplingRadius(rho0));
    }
    if m_points < 2 * n_terms {
        return Err(Error::TooFewSamplePoints { m_points, n_terms });
    }
    let mut samples = Vec::with_capacity(m_points);
    for m in 0..m_points {
        let theta = 2.0 * std::f64::consts::PI * m as f64 / m_points as f64;
        let w = Complex64::from_polar(rho0, theta);
        let g = evaluator(w);
        if !g.re.is_finite() || !g.im.is_finite() {
            return Err(Error::NonFiniteSample(w));
        }
        samples.push(g);
    }
    Ok(coeffs_from_circle_samples(samples, n_terms, rho0))
}

/// DFT stage of [`coeff_extract`]: turns samples on the circle `|w| = rho0`
/// into the leading `n_terms` power-series coefficients.
pub(crate) fn coeffs_from_circle_samples(
    mut samples: Vec<Complex64>,
    n_terms: usize,
    rho0: f64,
) -> Vec<Complex64> {
    // c_n = (1/M) sum_m G(w_m) e^{-2 pi i n m / M} / rho0^n.
    let m_points = samples.len();
    let mut planner = FftPlanner::new();
    planner
        .plan_fft(m_points, FftDirection::Forward)
        .process(&mut samples);
    let scale = 1.0 / m_points as f64;
    let mut radius_pow = 1.0;
    let mut coeffs = Vec::with_capacity(n_terms);
    for sample in samples.into_iter().take(n_terms) {
        coeffs.push(sample * (scale / radius_pow));
        radius_pow *= rho0;
    }
    coeffs
}

/// Inverse Hankel transform of an order-zero radial profile:
/// `g(r) = (1/2pi) * integral_0^kmax g(k) J0(k r) k dk`.
///
/// Quadrature is the trapezoid rule over the profile's bin centers with an
/// Euler-Maclaurin endpoint correction (end derivatives from one-sided
/// three-point differences). The correction vanishes for linear integrands,
/// so the rule stays exact there; with fewer than three bins it degrades to
/// the plain trapezoid.
pub fn hankel_inverse(profile: &[(f64, Complex64)], r_targets: &[f64]) -> Vec<Complex64> {
    r_targets
        .iter()
        .map(|&r| {
            let f: Vec<(f64, Complex64)> = profile
                .iter()
                .map(|&(k, v)| (k, v * k * bessel_j0(k * r)))
                .collect();
            integrate(&f) / (2.0 * std::f64::consts::PI)
        })
        .collect()
}

fn integrate(f: &[(f64, Complex64)]) -> Complex64 {
    if f.len() < 2 {
        return Complex64::default();
    }
    let mut total = Complex64::default();
    for pair in f.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        total += (y0 + y1) * 0.5 * (x1 - x0);
    }
    if f.len() >= 3 {
        let h_first = f[1].0 - f[0].0;
        let h_last = f[f.len() - 1].0 - f[f.len() - 2].0;
        let d_left = one_sided_derivative(f[0], f[1], f[2]);
        let n = f.len();
        let d_right = one_sided_derivative(f[n - 1], f[n - 2], f[n - 3]);
        total += d_left * (h_first * h_first / 12.0) - d_right * (h_last * h_last / 12.0);
    }
    total
}

/// Derivative at `p0.0` from the quadratic through three points.
fn one_sided_derivative(
    p0: (f64, Complex64),
    p1: (f64, Complex64),
    p2: (f64, Complex64),
) -> Complex64 {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    y0 * ((2.0 * x0 - x1 - x2) / ((x0 - x1) * (x0 - x2)))
        + y1 * ((x0 - x2) / ((x1 - x0) * (x1 - x2)))
        + y2 * ((x0 - x1) / ((x2 - x0) * (x2 - x1)))
}

/// Bessel function of the first kind, order zero.
///
/// Power series for |x| <= 12, Hankel asymptotic expansion beyond; absolute
/// error below 1e-11 everywhere.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 12.0 {
        let q = x * x / 4.0;
        let mut term = 1.0f64;
        let mut sum = 1.0f64;
        let mut k = 0.0;
        while term.abs() > 1e-17 * sum.abs().max(1.0) {
            k += 1.0;
            term *= -q / (k * k);
            sum += term;
        }
        sum
    } else {
        // J0(x) = sqrt(2/(pi x)) [P cos(x - pi/4) - Q sin(x - pi/4)] with the
        // Hankel symbols u_m = prod_{j<=m} (2j-1)^2 / (8 j x).
        let mut p = 0.0;
        let mut q = 0.0;
        let mut u = 1.0;
        for m in 0..17u32 {
            match m % 4 {
                0 => p += u,
                1 => q -= u,
                2 => p -= u,
                _ => q += u,
            }
            let m1 = (m + 1) as f64;
            u *= (2.0 * m1 - 1.0) * (2.0 * m1 - 1.0) / (8.0 * m1 * x);
        }
        let chi = x - std::f64::consts::FRAC_PI_4;
        (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    }
}
