//! Fractional-calculus primitives on a periodic 1-D grid.
//!
//! The Riesz fractional Laplacian `(-Δ)^{μ/2}` acts as the spectral
//! multiplier `|k|^μ` on the signed wavenumber lattice, the Caputo time
//! derivative of order `η` is discretized with L1 weights, and the
//! Mittag-Leffler function `E_η(z)` supplies the exact relaxation kernel
//! of time-fractional mode equations.
//!
//! Transform convention: forward transform with weight 1, inverse with
//! weight `1/n`. Round-trip identity tests elsewhere rely on this.

mod mittag_leffler;

pub use mittag_leffler::{mittag_leffler, MlError};

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FracopsError {
    #[error("time-fractional order eta must satisfy 0 < eta <= 1, got {0}")]
    EtaOutOfRange(f64),
    #[error("space-fractional order mu must satisfy 0 < mu <= 2, got {0}")]
    MuOutOfRange(f64),
    #[error("grid size must be a power of two with n >= 4, got {0}")]
    BadGridSize(usize),
    #[error("grid length must be positive and finite, got {0}")]
    BadGridLength(f64),
    #[error("field has {actual} values but grid expects {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("field contains a non-finite value at index {0}")]
    NonFiniteValue(usize),
}

/// The pair (η, μ) governing every equation in the toolkit: η is the
/// memory index of the Caputo time derivative, μ the stability index of
/// the fractional Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FractionalOrders {
    eta: f64,
    mu: f64,
}

impl FractionalOrders {
    pub fn new(eta: f64, mu: f64) -> Result<Self, FracopsError> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(FracopsError::EtaOutOfRange(eta));
        }
        if !(mu > 0.0 && mu <= 2.0) {
            return Err(FracopsError::MuOutOfRange(mu));
        }
        Ok(Self { eta, mu })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// The classical limit η=1, μ=2 (ideal solids and fluids).
    pub fn classical() -> Self {
        Self { eta: 1.0, mu: 2.0 }
    }
}

/// Periodic 1-D sampling lattice with its Fourier dual.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    n: usize,
    length: f64,
    origin: f64,
}

impl GridSpec {
    pub fn new(n: usize, length: f64, origin: f64) -> Result<Self, FracopsError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(FracopsError::BadGridSize(n));
        }
        if !(length > 0.0 && length.is_finite()) || !origin.is_finite() {
            return Err(FracopsError::BadGridLength(length));
        }
        Ok(Self { n, length, origin })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Sample points x_j = origin + j*spacing.
    pub fn points(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.n).map(|j| self.origin + j as f64 * dx).collect()
    }

    /// Signed wavenumber lattice k_j = 2π j̃ / L in FFT storage order,
    /// with j̃ ∈ [-n/2, n/2).
    pub fn wavenumbers(&self) -> Vec<f64> {
        let scale = 2.0 * PI / self.length;
        (0..self.n)
            .map(|j| {
                let signed = if j < self.n / 2 {
                    j as isize
                } else {
                    j as isize - self.n as isize
                };
                scale * signed as f64
            })
            .collect()
    }
}

/// Sampled complex field (s, Q or Ψ) on a periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self, FracopsError> {
        if values.len() != grid.n() {
            return Err(FracopsError::LengthMismatch {
                expected: grid.n(),
                actual: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(FracopsError::NonFiniteValue(idx));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self, FracopsError> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    /// Evaluate f at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Result<Self, FracopsError> {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    /// Discrete delta: 1/spacing at the node nearest to x0, zero elsewhere.
    /// Integrates to one against the trapezoid rule on the torus.
    pub fn point_mass(grid: GridSpec, x0: f64) -> Result<Self, FracopsError> {
        let dx = grid.spacing();
        let rel = (x0 - grid.origin()).rem_euclid(grid.length());
        let idx = ((rel / dx).round() as usize) % grid.n();
        let mut values = vec![Complex64::new(0.0, 0.0); grid.n()];
        values[idx] = Complex64::new(1.0 / dx, 0.0);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Forward DFT, weight 1.
    pub fn to_spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        FftPlanner::new().plan_fft_forward(self.grid.n()).process(&mut buf);
        buf
    }

    /// Inverse DFT, weight 1/n, paired with [`ComplexField::to_spectrum`].
    pub fn from_spectrum(grid: GridSpec, mut spectrum: Vec<Complex64>) -> Result<Self, FracopsError> {
        assert_eq!(spectrum.len(), grid.n());
        FftPlanner::new().plan_fft_inverse(grid.n()).process(&mut spectrum);
        let inv_n = 1.0 / grid.n() as f64;
        for v in &mut spectrum {
            *v *= inv_n;
        }
        Self::new(grid, spectrum)
    }

    /// Discrete L² norm sqrt(Σ|v|² dx).
    pub fn l2_norm(&self) -> f64 {
        let dx = self.grid.spacing();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx).sqrt()
    }
}

/// Eigenvalues λ_j = |k_j|^μ of the fractional Laplacian on the grid's
/// wavenumber lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    wavenumbers: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl ModeSpectrum {
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Fourier symbol of `(-Δ)^{μ/2}`: λ_j = |k_j|^μ, with λ = 0 exactly at
/// the zero mode.
pub fn riesz_multiplier(grid: GridSpec, orders: FractionalOrders) -> ModeSpectrum {
    let wavenumbers = grid.wavenumbers();
    let eigenvalues = wavenumbers
        .iter()
        .map(|&k| if k == 0.0 { 0.0 } else { k.abs().powf(orders.mu()) })
        .collect();
    ModeSpectrum {
        wavenumbers,
        eigenvalues,
    }
}

/// Apply `(-Δ)^{μ/2}` spectrally. Real input stays real up to round-off;
/// spurious imaginary parts below 1e-12 relative are truncated.
pub fn apply_fractional_laplacian(
    field: &ComplexField,
    orders: FractionalOrders,
) -> ComplexField {
    let spectrum_mult = riesz_multiplier(field.grid(), orders);
    let mut hat = field.to_spectrum();
    for (v, &lambda) in hat.iter_mut().zip(spectrum_mult.eigenvalues()) {
        *v *= lambda;
    }
    let mut out = ComplexField::from_spectrum(field.grid(), hat)
        .expect("spectral round-trip preserves finiteness");
    if field.is_real() {
        let max_mag = out.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let cutoff = 1e-12 * max_mag;
        for v in &mut out.values {
            if v.im.abs() <= cutoff {
                v.im = 0.0;
            }
        }
    }
    out
}

/// L1 discretization weights of the Caputo derivative of order η:
/// b_j = (j+1)^{1-η} - j^{1-η}. For η=1 this collapses to [1, 0, 0, ...],
/// the history-free backward-Euler limit.
pub fn caputo_l1_weights(eta: f64, steps: usize) -> Result<Vec<f64>, FracopsError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(FracopsError::EtaOutOfRange(eta));
    }
    let p = 1.0 - eta;
    Ok((0..steps)
        .map(|j| {
            if j == 0 {
                // 0^{1-eta} is 0 for eta < 1 and the eta -> 1 limit keeps b_0 = 1
                1.0
            } else {
                ((j + 1) as f64).powf(p) - (j as f64).powf(p)
            }
        })
        .collect())
}
