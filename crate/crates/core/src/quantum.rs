//! Fractional Schrodinger dynamics, Bloch band structures and the
//! fractional quantum relationships with their classical limits.
//!
//! The dispersion chain is `E_k = D_μ|p|^μ` with `p = ĥ_μ sign(k)|k|^{μ/2}`
//! and `ĥ_μ = √(2mD_μħ^μ)`, so that `E_k(p(k)) = D_μħ^μ|k|^μ` holds
//! identically, and `E = ĥ_η ν^η` on the time side. At (μ=2, D_μ=1/2m)
//! and η=1 the classical `p = ħk`, `E = p²/2m`, `E = ĥν` are recovered
//! exactly.

use crate::fracops::{
    self, mittag_leffler, ComplexField, FracopsError, FractionalOrders, MlError,
};
use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("physical constants must be strictly positive")]
    BadConstants,
    #[error("frequency must be nonnegative, got {0}")]
    NegativeFrequency(f64),
    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("split-step evolution requires eta = 1, got {0}")]
    RequiresEtaOne(f64),
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("potential period must be positive, got {0}")]
    BadPeriod(f64),
    #[error("feature width must lie in (0,1), got {0}")]
    BadFeatureWidth(f64),
    #[error("grid length {length} is not an integer multiple of the potential period {period}")]
    IncommensuratePeriod { length: f64, period: f64 },
    #[error("need n_plane_waves >= 2*n_bands + 5, got {n_plane_waves} for {n_bands} bands")]
    TruncationTooTight {
        n_plane_waves: usize,
        n_bands: usize,
    },
    #[error("Bloch phase {0} lies outside the first Brillouin zone")]
    OutsideBrillouinZone(f64),
    #[error(
        "band structure not converged: doubling the plane-wave count moved a band by {0:e} relative"
    )]
    NotConverged(f64),
    #[error(transparent)]
    Field(#[from] FracopsError),
    #[error(transparent)]
    MittagLeffler(#[from] MlError),
}

/// m, ħ, D_μ (dimension erg^{1-μ}·m^μ·s^{-μ}) and the time-side scaled
/// constant ĥ_η. The space-side ĥ_μ = √(2mD_μħ^μ) is derived on access.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysicalConstants {
    mass: f64,
    hbar: f64,
    d_mu: f64,
    h_eta: f64,
}

impl PhysicalConstants {
    pub fn new(mass: f64, hbar: f64, d_mu: f64, h_eta: f64) -> Result<Self, QuantumError> {
        let all = [mass, hbar, d_mu, h_eta];
        if all.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(QuantumError::BadConstants);
        }
        Ok(Self {
            mass,
            hbar,
            d_mu,
            h_eta,
        })
    }

    /// Natural units with the classical kinetic normalization
    /// D_μ = 1/(2m) at m = ħ = ĥ_η = 1.
    pub fn classical_natural() -> Self {
        Self {
            mass: 1.0,
            hbar: 1.0,
            d_mu: 0.5,
            h_eta: 1.0,
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn d_mu(&self) -> f64 {
        self.d_mu
    }

    pub fn h_eta(&self) -> f64 {
        self.h_eta
    }

    /// ĥ_μ = √(2mD_μħ^μ), recomputed on every access.
    pub fn h_mu(&self, mu: f64) -> f64 {
        (2.0 * self.mass * self.d_mu * self.hbar.powf(mu)).sqrt()
    }

    /// Kinetic coefficient D_μħ^μ of the wavenumber dispersion
    /// E_k = D_μħ^μ|k|^μ; equals ĥ_μ²/2m.
    pub fn dispersion_coefficient(&self, mu: f64) -> f64 {
        self.d_mu * self.hbar.powf(mu)
    }
}

/// Branch choice for p = ĥ_μ k^{μ/2} at negative wavenumber. The paper
/// writes the relation for k ≥ 0 only; the odd extension keeps momentum
/// odd under parity, matching the evenness of E_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentumBranch {
    #[default]
    Odd,
    Even,
}

/// One row of the fractional quantum relations: wavenumber, momentum,
/// frequency and energy tied together by the ops below.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct QuantumNumbers {
    pub k: f64,
    pub p: f64,
    pub nu: f64,
    pub energy: f64,
    pub kinetic: f64,
}

impl QuantumNumbers {
    /// Populate the full relation chain from a wavenumber: p = ĥ_μ k^{μ/2},
    /// E = D_μħ^μ|k|^μ, and ν from inverting E = ĥ_η ν^η.
    pub fn from_wavenumber(
        k: f64,
        constants: &PhysicalConstants,
        orders: FractionalOrders,
    ) -> Self {
        let p = momentum_from_wavenumber(k, constants, orders);
        let kinetic = kinetic_energy(p, constants, orders);
        let energy = constants.dispersion_coefficient(orders.mu()) * k.abs().powf(orders.mu());
        let nu = (energy / constants.h_eta()).powf(1.0 / orders.eta());
        Self {
            k,
            p,
            nu,
            energy,
            kinetic,
        }
    }
}

/// E_k = D_μ|p|^μ: nonnegative and even in p.
pub fn kinetic_energy(p: f64, constants: &PhysicalConstants, orders: FractionalOrders) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    constants.d_mu() * p.abs().powf(orders.mu())
}

/// p = ĥ_μ sign(k)|k|^{μ/2} (odd extension by default).
pub fn momentum_from_wavenumber(
    k: f64,
    constants: &PhysicalConstants,
    orders: FractionalOrders,
) -> f64 {
    momentum_from_wavenumber_with(k, constants, orders, MomentumBranch::Odd)
}

pub fn momentum_from_wavenumber_with(
    k: f64,
    constants: &PhysicalConstants,
    orders: FractionalOrders,
    branch: MomentumBranch,
) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let magnitude = constants.h_mu(orders.mu()) * k.abs().powf(orders.mu() / 2.0);
    match branch {
        MomentumBranch::Odd => k.signum() * magnitude,
        MomentumBranch::Even => magnitude,
    }
}

/// Fractional Planck relationship E = ĥ_η ν^η; η=1 is Planck's E = ĥν.
pub fn planck_energy(
    nu: f64,
    constants: &PhysicalConstants,
    eta: f64,
) -> Result<f64, QuantumError> {
    if !(nu >= 0.0) {
        return Err(QuantumError::NegativeFrequency(nu));
    }
    if nu == 0.0 {
        return Ok(0.0);
    }
    Ok(constants.h_eta() * nu.powf(eta))
}

/// Both sides of the Fig.-2 momentum/energy confusion: the incorrect
/// κ = E^{1/μ} and the corrected p = ĥ_μ k^{μ/2} with k inverted from
/// E = D_μħ^μ|k|^μ. They coincide only at μ=2 with classical constants.
pub fn corrected_momentum_energy_check(
    energy: f64,
    constants: &PhysicalConstants,
    orders: FractionalOrders,
) -> Result<(f64, f64), QuantumError> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(QuantumError::NonPositiveEnergy(energy));
    }
    let mu = orders.mu();
    let kappa_fig2 = energy.powf(1.0 / mu);
    let k = (energy / constants.dispersion_coefficient(mu)).powf(1.0 / mu);
    let p_corrected = momentum_from_wavenumber(k, constants, orders);
    Ok((kappa_fig2, p_corrected))
}

/// Periodic potential shapes of the four Fig.-2 panels. All are even in
/// x (about the period center), so every Fourier coefficient is real.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PotentialKind {
    Cosine,
    Square,
    Barrier { feature_width: f64 },
    Well { feature_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialSpec {
    kind: PotentialKind,
    amplitude: f64,
    period: f64,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, amplitude: f64, period: f64) -> Result<Self, QuantumError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(QuantumError::BadPeriod(period));
        }
        if let PotentialKind::Barrier { feature_width } | PotentialKind::Well { feature_width } =
            kind
        {
            if !(feature_width > 0.0 && feature_width < 1.0) {
                return Err(QuantumError::BadFeatureWidth(feature_width));
            }
        }
        Ok(Self {
            kind,
            amplitude,
            period,
        })
    }

    pub fn cosine(amplitude: f64, period: f64) -> Result<Self, QuantumError> {
        Self::new(PotentialKind::Cosine, amplitude, period)
    }

    pub fn square(amplitude: f64, period: f64) -> Result<Self, QuantumError> {
        Self::new(PotentialKind::Square, amplitude, period)
    }

    pub fn barrier(amplitude: f64, period: f64, feature_width: f64) -> Result<Self, QuantumError> {
        Self::new(PotentialKind::Barrier { feature_width }, amplitude, period)
    }

    pub fn well(amplitude: f64, period: f64, feature_width: f64) -> Result<Self, QuantumError> {
        Self::new(PotentialKind::Well { feature_width }, amplitude, period)
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// V(x), periodic with the spec's period and even about x = 0.
    pub fn evaluate(&self, x: f64) -> f64 {
        let a = self.period;
        // reduce to [-a/2, a/2)
        let mut xc = x.rem_euclid(a);
        if xc >= a / 2.0 {
            xc -= a;
        }
        match self.kind {
            PotentialKind::Cosine => self.amplitude * (2.0 * PI * xc / a).cos(),
            PotentialKind::Square => {
                if xc.abs() < a / 4.0 {
                    self.amplitude
                } else {
                    0.0
                }
            }
            PotentialKind::Barrier { feature_width } => {
                if xc.abs() < feature_width * a / 2.0 {
                    self.amplitude
                } else {
                    0.0
                }
            }
            PotentialKind::Well { feature_width } => {
                if xc.abs() < feature_width * a / 2.0 {
                    -self.amplitude
                } else {
                    0.0
                }
            }
        }
    }

    /// Analytic Fourier coefficient V̂_m of V(x) = Σ V̂_m e^{i 2πmx/a};
    /// real because all four shapes are even.
    pub fn fourier_coefficient(&self, m: i64) -> f64 {
        let v0 = self.amplitude;
        match self.kind {
            PotentialKind::Cosine => {
                if m.abs() == 1 {
                    v0 / 2.0
                } else {
                    0.0
                }
            }
            PotentialKind::Square => top_hat_coefficient(v0, 0.5, m),
            PotentialKind::Barrier { feature_width } => top_hat_coefficient(v0, feature_width, m),
            PotentialKind::Well { feature_width } => -top_hat_coefficient(v0, feature_width, m),
        }
    }
}

/// Coefficients of a centered top-hat of height v0 covering a fraction
/// w of the period: V̂_0 = v0·w, V̂_m = v0·sin(πmw)/(πm).
fn top_hat_coefficient(v0: f64, w: f64, m: i64) -> f64 {
    if m == 0 {
        v0 * w
    } else {
        let mf = m as f64;
        v0 * (PI * mf * w).sin() / (PI * mf)
    }
}

fn check_commensurate(grid_length: f64, period: f64) -> Result<(), QuantumError> {
    let ratio = grid_length / period;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
        return Err(QuantumError::IncommensuratePeriod {
            length: grid_length,
            period,
        });
    }
    Ok(())
}

/// Strang-split propagator for Eq.-(3) dynamics at η = 1: half-step
/// potential phase e^{-iV dt/2ħ}, full kinetic phase
/// e^{-i D_μ ħ^{μ-1}|k|^μ dt} in Fourier space, half-step potential.
/// Exactly norm-preserving per step up to round-off.
pub fn split_step_evolve(
    psi: &ComplexField,
    potential: &PotentialSpec,
    constants: &PhysicalConstants,
    orders: FractionalOrders,
    dt: f64,
    steps: usize,
) -> Result<ComplexField, QuantumError> {
    if orders.eta() != 1.0 {
        return Err(QuantumError::RequiresEtaOne(orders.eta()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(QuantumError::BadTimeStep(dt));
    }
    let grid = psi.grid();
    check_commensurate(grid.length(), potential.period())?;

    let kinetic_coef = constants.d_mu() * constants.hbar().powf(orders.mu() - 1.0);
    let spectrum = fracops::riesz_multiplier(grid, orders);
    let kinetic_phase: Vec<Complex64> = spectrum
        .eigenvalues()
        .iter()
        .map(|&lambda| Complex64::from_polar(1.0, -kinetic_coef * lambda * dt))
        .collect();
    let half_potential_phase: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&x| {
            Complex64::from_polar(1.0, -potential.evaluate(x) * dt / (2.0 * constants.hbar()))
        })
        .collect();

    let mut state = psi.values().to_vec();
    for _ in 0..steps {
        for (v, ph) in state.iter_mut().zip(&half_potential_phase) {
            *v *= ph;
        }
        let field = ComplexField::new(grid, state)?;
        let mut hat = field.to_spectrum();
        for (v, ph) in hat.iter_mut().zip(&kinetic_phase) {
            *v *= ph;
        }
        state = ComplexField::from_spectrum(grid, hat)?.values().to_vec();
        for (v, ph) in state.iter_mut().zip(&half_potential_phase) {
            *v *= ph;
        }
    }
    Ok(ComplexField::new(grid, state)?)
}

/// Free time-fractional evolution: per mode,
/// `Ψ_k(t) = E_η(A_k e^{-iπη/2} t^η / ĥ_η) Ψ_k(0)` with
/// `A_k = (ĥ_μ²/2m)|k|^μ`. At η=1 this is the unitary phase
/// `e^{-iA_k t/ĥ_η}`. For η<1 the evolution is non-unitary: the factor
/// modulus dips and settles near 1/η at large t, so the i^η convention
/// is amplifying rather than contracting.
pub fn evolve_free_fractional(
    psi: &ComplexField,
    constants: &PhysicalConstants,
    orders: FractionalOrders,
    t: f64,
) -> Result<ComplexField, QuantumError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(QuantumError::NegativeTime(t));
    }
    let eta = orders.eta();
    let grid = psi.grid();
    if t == 0.0 {
        return Ok(psi.clone());
    }
    let spectrum = fracops::riesz_multiplier(grid, orders);
    let coef = constants.dispersion_coefficient(orders.mu());
    let phase = Complex64::from_polar(1.0, -PI * eta / 2.0);
    let mut hat = psi.to_spectrum();
    for (v, &lambda) in hat.iter_mut().zip(spectrum.eigenvalues()) {
        let z = coef * lambda * t.powf(eta) / constants.h_eta() * phase;
        *v *= mittag_leffler(eta, z)?;
    }
    Ok(ComplexField::from_spectrum(grid, hat)?)
}

/// Bloch bands E_n(q) of the fractional plane-wave Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct BandStructure {
    q_values: Vec<f64>,
    /// bands[i][n]: n-th band at q_values[i], ascending in n
    bands: Vec<Vec<f64>>,
    orders: FractionalOrders,
}

impl BandStructure {
    pub fn q_values(&self) -> &[f64] {
        &self.q_values
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    pub fn n_bands(&self) -> usize {
        self.bands.first().map_or(0, Vec::len)
    }

    pub fn orders(&self) -> FractionalOrders {
        self.orders
    }

    /// max_q E_n(q) - min_q E_n(q)
    pub fn bandwidth(&self, n: usize) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for row in &self.bands {
            lo = lo.min(row[n]);
            hi = hi.max(row[n]);
        }
        hi - lo
    }

    /// Gap between the top of band n and the bottom of band n+1
    /// (negative when the bands overlap).
    pub fn gap_above(&self, n: usize) -> f64 {
        let top: f64 = self.bands.iter().map(|r| r[n]).fold(f64::NEG_INFINITY, f64::max);
        let bottom: f64 = self.bands.iter().map(|r| r[n + 1]).fold(f64::INFINITY, f64::min);
        bottom - top
    }
}

/// Assemble and diagonalize the Hermitian plane-wave matrix
/// `H_{GG'} = D_μħ^μ|q+G|^μ δ_{GG'} + V̂(G-G')` for each Bloch phase q,
/// returning the lowest n_bands eigenvalues sorted ascending. V̂ are the
/// analytic Fourier coefficients, so the only error source is plane-wave
/// truncation.
pub fn band_structure(
    potential: &PotentialSpec,
    constants: &PhysicalConstants,
    orders: FractionalOrders,
    n_bands: usize,
    n_plane_waves: usize,
    q_values: &[f64],
) -> Result<BandStructure, QuantumError> {
    if n_plane_waves < 2 * n_bands + 5 {
        return Err(QuantumError::TruncationTooTight {
            n_plane_waves,
            n_bands,
        });
    }
    let a = potential.period();
    let zone_edge = PI / a;
    for &q in q_values {
        if !(q >= -zone_edge - 1e-12 && q < zone_edge + 1e-12) {
            return Err(QuantumError::OutsideBrillouinZone(q));
        }
    }

    let half = (n_plane_waves / 2) as i64;
    let ms: Vec<i64> = (-half..=half).collect();
    let dim = ms.len();
    let coef = constants.dispersion_coefficient(orders.mu());
    let g0 = 2.0 * PI / a;

    let mut bands = Vec::with_capacity(q_values.len());
    for &q in q_values {
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (i, &mi) in ms.iter().enumerate() {
            for (j, &mj) in ms.iter().enumerate() {
                let mut v = potential.fourier_coefficient(mi - mj);
                if i == j {
                    v += coef * (q + mi as f64 * g0).abs().powf(orders.mu());
                }
                h[(i, j)] = v;
            }
        }
        let mut eigen: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        eigen.sort_by(|x, y| x.partial_cmp(y).unwrap());
        bands.push(eigen[..n_bands].to_vec());
    }
    Ok(BandStructure {
        q_values: q_values.to_vec(),
        bands,
        orders,
    })
}

/// Self-checked variant: recompute with twice the plane waves and fail
/// if any requested band moved by more than 1e-8 relative.
pub fn band_structure_converged(
    potential: &PotentialSpec,
    constants: &PhysicalConstants,
    orders: FractionalOrders,
    n_bands: usize,
    n_plane_waves: usize,
    q_values: &[f64],
) -> Result<BandStructure, QuantumError> {
    let coarse = band_structure(potential, constants, orders, n_bands, n_plane_waves, q_values)?;
    let fine = band_structure(
        potential,
        constants,
        orders,
        n_bands,
        2 * n_plane_waves + 1,
        q_values,
    )?;
    let mut worst = 0.0f64;
    for (c_row, f_row) in coarse.bands().iter().zip(fine.bands()) {
        for (c, f) in c_row.iter().zip(f_row) {
            let rel = (c - f).abs() / f.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    if worst > 1e-8 {
        return Err(QuantumError::NotConverged(worst));
    }
    Ok(fine)
}

/// Dense Hermitian eigendecomposition propagator, used as the brute
/// force oracle for split-step accuracy: builds the full grid
/// Hamiltonian and applies U e^{-iΛt/ħ} U^H.
pub fn dense_evolve_oracle(
    psi: &ComplexField,
    potential: &PotentialSpec,
    constants: &PhysicalConstants,
    orders: FractionalOrders,
    t: f64,
) -> Result<ComplexField, QuantumError> {
    let grid = psi.grid();
    check_commensurate(grid.length(), potential.period())?;
    let n = grid.n();
    let kinetic_coef = constants.d_mu() * constants.hbar().powf(orders.mu());
    let spectrum = fracops::riesz_multiplier(grid, orders);

    // H = F^H diag(D ħ^μ λ) F / n + diag(V), assembled column by column
    let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
    for col in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[col] = Complex64::new(1.0, 0.0);
        let basis = ComplexField::new(grid, e)?;
        let mut hat = basis.to_spectrum();
        for (v, &lambda) in hat.iter_mut().zip(spectrum.eigenvalues()) {
            *v *= kinetic_coef * lambda;
        }
        let transformed = ComplexField::from_spectrum(grid, hat)?;
        for row in 0..n {
            h[(row, col)] = transformed.values()[row];
        }
    }
    for (j, &x) in grid.points().iter().enumerate() {
        h[(j, j)] += Complex::new(potential.evaluate(x), 0.0);
    }

    let eigen = nalgebra::SymmetricEigen::new(h);
    let state = DVector::from_iterator(n, psi.values().iter().copied());
    let coeffs = eigen.eigenvectors.adjoint() * state;
    let evolved_coeffs = DVector::from_iterator(
        n,
        coeffs
            .iter()
            .zip(eigen.eigenvalues.iter())
            .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t / constants.hbar())),
    );
    let out = eigen.eigenvectors * evolved_coeffs;
    Ok(ComplexField::new(grid, out.iter().copied().collect())?)
}
