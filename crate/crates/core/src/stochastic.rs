//! Monte Carlo side of the anomalous-diffusion picture: Lévy flights
//! for the superdiffusive regime (η=1, μ<2) and fractional Brownian
//! motion for the subdiffusive one (η<1, μ=2, with Hurst index H=η/2),
//! plus exponent estimators that read μ or H back off an ensemble.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("stability index must lie in (0,2], got {0}")]
    BadStability(f64),
    #[error("scale parameter must be positive, got {0}")]
    BadScale(f64),
    #[error("Hurst index must lie in (0,1), got {0}")]
    BadHurst(f64),
    #[error("need at least one step")]
    NoSteps,
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("need at least one path")]
    NoPaths,
    #[error("index estimation needs at least 100 paths, got {0}")]
    TooFewPaths(usize),
    #[error("index estimation needs at least 8 nonzero time points, got {0}")]
    TooFewTimePoints(usize),
    #[error("index estimation needs two decades of time, got ratio {0}")]
    InsufficientTimeSpan(f64),
    #[error("ensemble has zero variance at some time point")]
    ZeroVariance,
    #[error("exponent regression produced a non-positive slope")]
    EstimationFailed,
    #[error("covariance matrix is not positive definite")]
    CovarianceNotPositiveDefinite,
}

/// Symmetric stable law with characteristic function
/// `P(k) = e^{-gamma_scale·|k|^mu}` (zero skew).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StableParams {
    mu_stability: f64,
    gamma_scale: f64,
}

impl StableParams {
    pub fn new(mu_stability: f64, gamma_scale: f64) -> Result<Self, StochasticError> {
        if !(mu_stability > 0.0 && mu_stability <= 2.0) {
            return Err(StochasticError::BadStability(mu_stability));
        }
        if !(gamma_scale > 0.0 && gamma_scale.is_finite()) {
            return Err(StochasticError::BadScale(gamma_scale));
        }
        Ok(Self {
            mu_stability,
            gamma_scale,
        })
    }

    pub fn mu_stability(&self) -> f64 {
        self.mu_stability
    }

    pub fn gamma_scale(&self) -> f64 {
        self.gamma_scale
    }

    /// Classical scale σ with P(k) = e^{-(σ|k|)^μ}: σ = γ^{1/μ}.
    pub fn sigma(&self) -> f64 {
        self.gamma_scale.powf(1.0 / self.mu_stability)
    }
}

/// Fractional Gaussian noise / fractional Brownian motion parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FbmParams {
    hurst: f64,
    n_steps: usize,
    dt: f64,
}

impl FbmParams {
    pub fn new(hurst: f64, n_steps: usize, dt: f64) -> Result<Self, StochasticError> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(StochasticError::BadHurst(hurst));
        }
        if n_steps == 0 {
            return Err(StochasticError::NoSteps);
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(StochasticError::BadTimeStep(dt));
        }
        Ok(Self { hurst, n_steps, dt })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    LevyFlight,
    FractionalBrownian,
}

/// How the Gaussian synthesis was realized for an fBm ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthesisMethod {
    CirculantEmbedding,
    CholeskyFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    kind: EnsembleKind,
    times: Vec<f64>,
    /// positions[path][time index]; column 0 is all zeros
    positions: Vec<Vec<f64>>,
    seed: u64,
}

impl TrajectoryEnsemble {
    /// Rebuild an ensemble (e.g. from a CSV export). Times must be
    /// strictly ascending from 0, all paths equally long and starting
    /// at the origin.
    pub fn from_parts(
        kind: EnsembleKind,
        times: Vec<f64>,
        positions: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self, StochasticError> {
        if positions.is_empty() {
            return Err(StochasticError::NoPaths);
        }
        if times.len() < 2 || times[0] != 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(StochasticError::NoSteps);
        }
        if positions
            .iter()
            .any(|p| p.len() != times.len() || p[0] != 0.0)
        {
            return Err(StochasticError::NoSteps);
        }
        Ok(Self {
            kind,
            times,
            positions,
            seed,
        })
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn n_paths(&self) -> usize {
        self.positions.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// positions at a fixed time index across all paths
    pub fn marginal(&self, time_index: usize) -> Vec<f64> {
        self.positions.iter().map(|p| p[time_index]).collect()
    }
}

/// Per-path derived stream: the pair (seed, stream index) fully
/// determines the path regardless of generation order or thread count.
fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One symmetric stable draw by the Chambers-Mallows-Stuck
/// transformation. The symmetric formula is continuous in μ and covers
/// μ=1 (Cauchy, tan U) and μ=2 (Gaussian, 2 sinU √W) without branches.
fn stable_draw(mu: f64, sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen_range(-PI / 2.0..PI / 2.0);
    let w: f64 = -(1.0f64 - rng.gen::<f64>()).ln();
    let x = (mu * u).sin() / u.cos().powf(1.0 / mu)
        * (((1.0 - mu) * u).cos() / w).powf((1.0 - mu) / mu);
    sigma * x
}

/// n independent draws from the symmetric μ-stable law with
/// characteristic function e^{-γ|k|^μ}.
pub fn sample_stable(params: StableParams, n: usize, seed: u64) -> Vec<f64> {
    let sigma = params.sigma();
    let mut rng = path_rng(seed, 0);
    (0..n)
        .map(|_| stable_draw(params.mu_stability, sigma, &mut rng))
        .collect()
}

/// Cumulative sums of stable increments with per-step scale γ·dt, so
/// the time-t marginal has characteristic function e^{-γ|k|^μ t} —
/// the Green's function of the space-fractional diffusion at η=1.
pub fn levy_flight_ensemble(
    params: StableParams,
    n_paths: usize,
    n_steps: usize,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryEnsemble, StochasticError> {
    if n_paths == 0 {
        return Err(StochasticError::NoPaths);
    }
    if n_steps == 0 {
        return Err(StochasticError::NoSteps);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(StochasticError::BadTimeStep(dt));
    }
    let step_sigma = (params.gamma_scale * dt).powf(1.0 / params.mu_stability);
    let mu = params.mu_stability;
    let times: Vec<f64> = (0..=n_steps).map(|i| i as f64 * dt).collect();
    let positions = (0..n_paths)
        .map(|p| {
            let mut rng = path_rng(seed, p as u64);
            let mut path = Vec::with_capacity(n_steps + 1);
            let mut x = 0.0;
            path.push(x);
            for _ in 0..n_steps {
                x += stable_draw(mu, step_sigma, &mut rng);
                path.push(x);
            }
            path
        })
        .collect();
    Ok(TrajectoryEnsemble {
        kind: EnsembleKind::LevyFlight,
        times,
        positions,
        seed,
    })
}

/// Autocovariance of unit-variance fractional Gaussian noise at lag j.
fn fgn_autocovariance(hurst: f64, j: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let jf = j as f64;
    0.5 * ((jf + 1.0).powf(h2) - 2.0 * jf.powf(h2) + (jf - 1.0).abs().powf(h2))
}

/// Exact-covariance fBm synthesis. Circulant (Davies-Harte) embedding
/// of the fractional Gaussian noise covariance; if the embedding has a
/// negative eigenvalue the dense Cholesky route is used instead, and
/// the returned method reports which one ran.
pub fn fbm_paths(
    params: FbmParams,
    n_paths: usize,
    seed: u64,
) -> Result<(TrajectoryEnsemble, SynthesisMethod), StochasticError> {
    if n_paths == 0 {
        return Err(StochasticError::NoPaths);
    }
    let n = params.n_steps;
    let eigen = circulant_eigenvalues(params.hurst, n);
    let scale = eigen.iter().cloned().fold(0.0f64, f64::max);
    let embeddable = eigen.iter().all(|&l| l >= -1e-12 * scale);

    let step_sigma = params.dt.powf(params.hurst);
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * params.dt).collect();

    let (positions, method) = if embeddable {
        let sqrt_eigen: Vec<f64> = eigen.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(2 * n);
        let paths = (0..n_paths)
            .map(|p| {
                let mut rng = path_rng(seed, p as u64);
                let noise = davies_harte_noise(&sqrt_eigen, fft.as_ref(), &mut rng);
                accumulate(&noise[..n], step_sigma)
            })
            .collect();
        (paths, SynthesisMethod::CirculantEmbedding)
    } else {
        let chol = cholesky_factor(params.hurst, n)?;
        let paths = (0..n_paths)
            .map(|p| {
                let mut rng = path_rng(seed, p as u64);
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                let noise: Vec<f64> = (0..n)
                    .map(|i| (0..=i).map(|j| chol[(i, j)] * z[j]).sum())
                    .collect();
                accumulate(&noise, step_sigma)
            })
            .collect();
        (paths, SynthesisMethod::CholeskyFallback)
    };

    Ok((
        TrajectoryEnsemble {
            kind: EnsembleKind::FractionalBrownian,
            times,
            positions,
            seed,
        },
        method,
    ))
}

fn accumulate(noise: &[f64], step_sigma: f64) -> Vec<f64> {
    let mut path = Vec::with_capacity(noise.len() + 1);
    let mut x = 0.0;
    path.push(x);
    for &g in noise {
        x += step_sigma * g;
        path.push(x);
    }
    path
}

/// Eigenvalues of the 2n circulant embedding of the fGn covariance:
/// the DFT of [r(0), …, r(n), r(n-1), …, r(1)].
fn circulant_eigenvalues(hurst: f64, n: usize) -> Vec<f64> {
    let m = 2 * n;
    let mut first_row = vec![0.0f64; m];
    for j in 0..=n {
        first_row[j] = fgn_autocovariance(hurst, j);
    }
    for j in 1..n {
        first_row[m - j] = first_row[j];
    }
    let mut buf: Vec<Complex64> = first_row
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// One block of 2n unit-variance fGn samples from the embedding.
fn davies_harte_noise(
    sqrt_eigen: &[f64],
    fft: &dyn rustfft::Fft<f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let m = sqrt_eigen.len();
    let n = m / 2;
    let mut a = vec![Complex64::default(); m];
    let g0: f64 = rng.sample(StandardNormal);
    a[0] = Complex64::new(sqrt_eigen[0] * g0, 0.0);
    for k in 1..n {
        let gr: f64 = rng.sample(StandardNormal);
        let gi: f64 = rng.sample(StandardNormal);
        let amp = sqrt_eigen[k] / 2.0f64.sqrt();
        a[k] = Complex64::new(amp * gr, amp * gi);
        a[m - k] = a[k].conj();
    }
    let gn: f64 = rng.sample(StandardNormal);
    a[n] = Complex64::new(sqrt_eigen[n] * gn, 0.0);
    fft.process(&mut a);
    let norm = (m as f64).sqrt();
    a.iter().map(|c| c.re / norm).collect()
}

fn cholesky_factor(hurst: f64, n: usize) -> Result<DMatrix<f64>, StochasticError> {
    let cov = DMatrix::from_fn(n, n, |i, j| {
        fgn_autocovariance(hurst, i.abs_diff(j))
    });
    nalgebra::Cholesky::new(cov)
        .map(|c| c.l())
        .ok_or(StochasticError::CovarianceNotPositiveDefinite)
}

/// Exponent read back off an ensemble: stability index μ for flights,
/// Hurst index H for fBm, each with a 95% regression half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexEstimate {
    Stability { mu_hat: f64, ci_halfwidth: f64 },
    Hurst { hurst_hat: f64, ci_halfwidth: f64 },
}

impl IndexEstimate {
    pub fn value(&self) -> f64 {
        match *self {
            IndexEstimate::Stability { mu_hat, .. } => mu_hat,
            IndexEstimate::Hurst { hurst_hat, .. } => hurst_hat,
        }
    }

    pub fn ci_halfwidth(&self) -> f64 {
        match *self {
            IndexEstimate::Stability { ci_halfwidth, .. }
            | IndexEstimate::Hurst { ci_halfwidth, .. } => ci_halfwidth,
        }
    }
}

/// Estimate the generating exponent from scaling regressions on the
/// ensemble's own statistics. Flights: ⟨|x|^δ⟩ ∝ t^{δ/μ} with
/// δ = 0.5·μ_prior, iterated once so δ stays below the heavy-tail
/// cutoff. fBm: MSD ∝ t^{2H}.
pub fn estimate_indices(ensemble: &TrajectoryEnsemble) -> Result<IndexEstimate, StochasticError> {
    if ensemble.n_paths() < 100 {
        return Err(StochasticError::TooFewPaths(ensemble.n_paths()));
    }
    let times = &ensemble.times()[1..];
    if times.len() < 8 {
        return Err(StochasticError::TooFewTimePoints(times.len()));
    }
    let span = times[times.len() - 1] / times[0];
    if span < 99.999 {
        return Err(StochasticError::InsufficientTimeSpan(span));
    }
    let ln_t: Vec<f64> = times.iter().map(|t| t.ln()).collect();

    match ensemble.kind() {
        EnsembleKind::LevyFlight => {
            let mut mu_prior = 1.0;
            let mut fit = None;
            let mut delta = 0.0;
            for _ in 0..2 {
                delta = 0.5 * mu_prior;
                let ln_moment = fractional_moments(ensemble, delta)?;
                let f = crate::linfit::ols(&ln_t, &ln_moment)
                    .ok_or(StochasticError::EstimationFailed)?;
                if !(f.slope > 0.0) {
                    return Err(StochasticError::EstimationFailed);
                }
                mu_prior = (delta / f.slope).min(2.0);
                fit = Some(f);
            }
            let fit = fit.unwrap();
            let mu_hat = delta / fit.slope;
            // first-order propagation of the slope interval through δ/s
            let ci_halfwidth = delta * fit.slope_ci95() / (fit.slope * fit.slope);
            Ok(IndexEstimate::Stability {
                mu_hat,
                ci_halfwidth,
            })
        }
        EnsembleKind::FractionalBrownian => {
            let ln_msd = fractional_moments(ensemble, 2.0)?;
            let fit =
                crate::linfit::ols(&ln_t, &ln_msd).ok_or(StochasticError::EstimationFailed)?;
            if !(fit.slope > 0.0) {
                return Err(StochasticError::EstimationFailed);
            }
            Ok(IndexEstimate::Hurst {
                hurst_hat: fit.slope / 2.0,
                ci_halfwidth: fit.slope_ci95() / 2.0,
            })
        }
    }
}

/// ln⟨|x(t)|^δ⟩ over the nonzero time points.
fn fractional_moments(
    ensemble: &TrajectoryEnsemble,
    delta: f64,
) -> Result<Vec<f64>, StochasticError> {
    let n_times = ensemble.times().len();
    let n_paths = ensemble.n_paths() as f64;
    (1..n_times)
        .map(|i| {
            let m: f64 = ensemble
                .positions()
                .iter()
                .map(|p| p[i].abs().powf(delta))
                .sum::<f64>()
                / n_paths;
            if m > 0.0 {
                Ok(m.ln())
            } else {
                Err(StochasticError::ZeroVariance)
            }
        })
        .collect()
}

/// One-sample Kolmogorov-Smirnov distance between samples and a
/// reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((((i + 1) as f64) / n - f).abs());
        d = d.max((f - (i as f64) / n).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Monotone cubic (Fritsch-Carlson) interpolant; used to read a
/// grid-sampled CDF at arbitrary points without overshoot.
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// xs strictly increasing, ys monotone nondecreasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2 && ys.len() == n);
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            .collect();
        let mut slopes = vec![0.0f64; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            if secants[i - 1] * secants[i] <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // harmonic mean keeps the interpolant monotone
                let w1 = 2.0 * (xs[i + 1] - xs[i]) + (xs[i] - xs[i - 1]);
                let w2 = (xs[i + 1] - xs[i]) + 2.0 * (xs[i] - xs[i - 1]);
                slopes[i] = (w1 + w2) / (w1 / secants[i - 1] + w2 / secants[i]);
            }
        }
        // Fritsch-Carlson limiter
        for i in 0..n - 1 {
            if secants[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
            } else {
                let alpha = slopes[i] / secants[i];
                let beta = slopes[i + 1] / secants[i];
                let norm = (alpha * alpha + beta * beta).sqrt();
                if norm > 3.0 {
                    slopes[i] = 3.0 * alpha / norm * secants[i];
                    slopes[i + 1] = 3.0 * beta / norm * secants[i];
                }
            }
        }
        Self { xs, ys, slopes }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
        let h10 = t * (1.0 - t) * (1.0 - t);
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        self.ys[i] * h00
            + h * self.slopes[i] * h10
            + self.ys[i + 1] * h01
            + h * self.slopes[i + 1] * h11
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{solve_mode_exact, DiffusionProblem};
    use crate::fracops::{ComplexField, FractionalOrders, GridSpec};
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_case_variance() {
        // mu=2, gamma=0.5: unit variance
        let params = StableParams::new(2.0, 0.5).unwrap();
        let draws = sample_stable(params, 1_000_000, 7);
        let var: f64 = draws.iter().map(|x| x * x).sum::<f64>() / draws.len() as f64;
        assert!((0.995..=1.005).contains(&var), "variance {var}");
    }

    #[test]
    fn cauchy_case_median_absolute() {
        let gamma = 0.8;
        let params = StableParams::new(1.0, gamma).unwrap();
        let mut draws: Vec<f64> = sample_stable(params, 1_000_000, 11)
            .iter()
            .map(|x| x.abs())
            .collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = draws[draws.len() / 2];
        assert!((median / gamma - 1.0).abs() < 0.01, "median {median}");
    }

    #[test]
    fn empirical_characteristic_function() {
        let params = StableParams::new(1.5, 1.0).unwrap();
        let n = 1_000_000;
        let draws = sample_stable(params, n, 13);
        let bound = 3.0 / (n as f64).sqrt();
        for k in [0.5, 1.0, 2.0] {
            let ecf: f64 = draws.iter().map(|&x| (k * x).cos()).sum::<f64>() / n as f64;
            let expected = (-k.powf(1.5)).exp();
            assert!(
                (ecf - expected).abs() <= bound,
                "k={k}: ecf={ecf} expected={expected}"
            );
        }
    }

    #[test]
    fn stable_self_similarity() {
        // sum of 4 draws rescaled by 4^{-1/mu} ~ one draw; two-sample KS
        // at the 1% level, n = 1e5 per sample
        let n = 100_000;
        let critical = 1.628 * (2.0 / n as f64).sqrt();
        for (mu, seed) in [(1.0, 17u64), (1.5, 19), (2.0, 23)] {
            let params = StableParams::new(mu, 1.0).unwrap();
            let singles = sample_stable(params, n, seed);
            let pooled = sample_stable(params, 4 * n, seed + 1);
            let scale = (4.0f64).powf(-1.0 / mu);
            let mut sums: Vec<f64> = pooled
                .chunks_exact(4)
                .map(|c| scale * c.iter().sum::<f64>())
                .collect();
            let mut singles = singles;
            let d = two_sample_ks(&mut singles, &mut sums);
            assert!(d <= critical, "mu={mu}: KS={d} critical={critical}");
        }
    }

    #[test]
    fn flight_single_step_gaussian_variance() {
        let params = StableParams::new(2.0, 0.7).unwrap();
        let dt = 0.3;
        let ens = levy_flight_ensemble(params, 200_000, 1, dt, 29).unwrap();
        assert!(ens.positions().iter().all(|p| p[0] == 0.0));
        let var: f64 = ens
            .positions()
            .iter()
            .map(|p| p[1] * p[1])
            .sum::<f64>()
            / ens.n_paths() as f64;
        assert_relative_eq!(var, 2.0 * 0.7 * dt, max_relative = 0.02);
    }

    #[test]
    fn flight_marginal_matches_spectral_green_function() {
        // mu=1.5, gamma=1, t=1: KS between the empirical time-1 marginal
        // and the spectral solver's CDF <= 0.01 at 1e6 paths
        let params = StableParams::new(1.5, 1.0).unwrap();
        let ens = levy_flight_ensemble(params, 1_000_000, 4, 0.25, 31).unwrap();
        let mut samples = ens.marginal(4);

        let grid = GridSpec::new(4096, 256.0, -128.0).unwrap();
        let orders = FractionalOrders::new(1.0, 1.5).unwrap();
        let initial = ComplexField::point_mass(grid, 0.0).unwrap();
        let problem = DiffusionProblem::new(orders, 1.0, initial).unwrap();
        let solution = solve_mode_exact(&problem, &[1.0]).unwrap();
        let cdf = grid_cdf(&solution.snapshots()[0], grid);

        let d = ks_distance(&mut samples, |x| cdf.eval(x));
        assert!(d <= 0.01, "KS distance {d}");
    }

    fn grid_cdf(density: &ComplexField, grid: GridSpec) -> MonotoneCubic {
        let dx = grid.spacing();
        let mut xs = vec![grid.origin()];
        let mut ys = vec![0.0];
        let mut acc = 0.0;
        for (j, v) in density.values().iter().enumerate() {
            acc += v.re.max(0.0) * dx;
            xs.push(grid.origin() + (j as f64 + 1.0) * dx);
            ys.push(acc);
        }
        let total = *ys.last().unwrap();
        for y in &mut ys {
            *y /= total;
        }
        MonotoneCubic::new(xs, ys)
    }

    #[test]
    fn ensembles_are_seed_deterministic() {
        let params = StableParams::new(1.3, 0.9).unwrap();
        let a = levy_flight_ensemble(params, 8, 16, 0.1, 37).unwrap();
        let b = levy_flight_ensemble(params, 8, 16, 0.1, 37).unwrap();
        assert_eq!(a, b);
        let c = levy_flight_ensemble(params, 8, 16, 0.1, 38).unwrap();
        assert_ne!(a, c);

        let fp = FbmParams::new(0.4, 32, 0.05).unwrap();
        let (fa, _) = fbm_paths(fp, 8, 41).unwrap();
        let (fb, _) = fbm_paths(fp, 8, 41).unwrap();
        assert_eq!(fa, fb);

        // leading paths agree when only the path count changes
        let big = levy_flight_ensemble(params, 12, 16, 0.1, 37).unwrap();
        assert_eq!(&big.positions()[..8], a.positions());
    }

    #[test]
    fn fbm_brownian_case_uncorrelated_increments() {
        let params = FbmParams::new(0.5, 64, 1.0).unwrap();
        let (ens, method) = fbm_paths(params, 10_000, 43).unwrap();
        assert_eq!(method, SynthesisMethod::CirculantEmbedding);
        let (mut s1, mut s2, mut s11, mut s22, mut s12, mut count) =
            (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for path in ens.positions() {
            for w in path.windows(3) {
                let (a, b) = (w[1] - w[0], w[2] - w[1]);
                s1 += a;
                s2 += b;
                s11 += a * a;
                s22 += b * b;
                s12 += a * b;
                count += 1.0;
            }
        }
        let cov = s12 / count - s1 / count * (s2 / count);
        let va = s11 / count - (s1 / count).powi(2);
        let vb = s22 / count - (s2 / count).powi(2);
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() <= 0.02, "lag-1 correlation {corr}");
    }

    #[test]
    fn fbm_msd_scaling_subdiffusive() {
        // H=0.3 (eta=0.6): MSD log-log slope 0.6 within 0.05
        let params = FbmParams::new(0.3, 128, 1.0 / 128.0).unwrap();
        let (ens, _) = fbm_paths(params, 4_000, 47).unwrap();
        let ln_t: Vec<f64> = ens.times()[1..].iter().map(|t| t.ln()).collect();
        let ln_msd = fractional_moments(&ens, 2.0).unwrap();
        let fit = crate::linfit::ols(&ln_t, &ln_msd).unwrap();
        assert!((fit.slope - 0.6).abs() <= 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn fbm_covariance_matches_closed_form() {
        // sample covariance on a 16-point grid within 5/sqrt(n_paths)
        let n_paths = 10_000;
        let tol = 5.0 / (n_paths as f64).sqrt();
        for (hurst, seed) in [(0.3, 53u64), (0.5, 59), (0.7, 61)] {
            let params = FbmParams::new(hurst, 16, 1.0 / 16.0).unwrap();
            let (ens, _) = fbm_paths(params, n_paths, seed).unwrap();
            for i in 1..=16usize {
                for j in i..=16usize {
                    let (t, s) = (ens.times()[i], ens.times()[j]);
                    let expected = 0.5
                        * (t.powf(2.0 * hurst) + s.powf(2.0 * hurst)
                            - (t - s).abs().powf(2.0 * hurst));
                    let sample: f64 = ens
                        .positions()
                        .iter()
                        .map(|p| p[i] * p[j])
                        .sum::<f64>()
                        / n_paths as f64;
                    assert!(
                        (sample - expected).abs() <= tol,
                        "H={hurst} ({i},{j}): sample={sample} expected={expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn cholesky_route_reproduces_covariance() {
        // the circulant embedding covers fGn, so exercise the dense
        // fallback path directly
        let hurst = 0.7;
        let n = 16;
        let chol = cholesky_factor(hurst, n).unwrap();
        let product = &chol * chol.transpose();
        for i in 0..n {
            for j in 0..n {
                let expected = fgn_autocovariance(hurst, i.abs_diff(j));
                assert_relative_eq!(product[(i, j)], expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn circulant_eigenvalues_nonnegative_for_fgn() {
        for hurst in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for n in [8usize, 64, 256] {
                let eigen = circulant_eigenvalues(hurst, n);
                let scale = eigen.iter().cloned().fold(0.0f64, f64::max);
                assert!(
                    eigen.iter().all(|&l| l >= -1e-12 * scale),
                    "H={hurst} n={n}"
                );
            }
        }
    }

    #[test]
    fn estimate_stability_index_self_consistency() {
        let params = StableParams::new(1.5, 1.0).unwrap();
        let ens = levy_flight_ensemble(params, 10_000, 128, 1.0 / 128.0, 67).unwrap();
        let est = estimate_indices(&ens).unwrap();
        match est {
            IndexEstimate::Stability { mu_hat, .. } => {
                assert!((1.45..=1.55).contains(&mu_hat), "mu_hat {mu_hat}")
            }
            _ => panic!("expected stability estimate"),
        }
    }

    #[test]
    fn estimate_hurst_self_consistency() {
        let params = FbmParams::new(0.5, 128, 1.0 / 128.0).unwrap();
        let (ens, _) = fbm_paths(params, 10_000, 71).unwrap();
        let est = estimate_indices(&ens).unwrap();
        match est {
            IndexEstimate::Hurst { hurst_hat, .. } => {
                assert!((0.475..=0.525).contains(&hurst_hat), "hurst_hat {hurst_hat}")
            }
            _ => panic!("expected Hurst estimate"),
        }
    }

    #[test]
    fn estimation_rejects_degenerate_ensembles() {
        let params = StableParams::new(1.5, 1.0).unwrap();
        let few_paths = levy_flight_ensemble(params, 10, 128, 0.01, 73).unwrap();
        assert!(matches!(
            estimate_indices(&few_paths),
            Err(StochasticError::TooFewPaths(_))
        ));

        let few_times = levy_flight_ensemble(params, 200, 4, 0.01, 73).unwrap();
        assert!(matches!(
            estimate_indices(&few_times),
            Err(StochasticError::TooFewTimePoints(_))
        ));

        let short_span = levy_flight_ensemble(params, 200, 16, 0.01, 73).unwrap();
        assert!(matches!(
            estimate_indices(&short_span),
            Err(StochasticError::InsufficientTimeSpan(_))
        ));

        // constant paths: zero variance
        let mut constant = levy_flight_ensemble(params, 200, 128, 0.01, 73).unwrap();
        for p in &mut constant.positions {
            p.iter_mut().for_each(|v| *v = 0.0);
        }
        assert!(matches!(
            estimate_indices(&constant),
            Err(StochasticError::ZeroVariance)
        ));
    }

    #[test]
    fn monotone_cubic_interpolates_monotonically() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 2.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 1.0 / (1.0 + (-x + 4.0).exp())).collect();
        let interp = MonotoneCubic::new(xs.clone(), ys.clone());
        // reproduces knots, stays within [0,1], nondecreasing
        for (x, y) in xs.iter().zip(&ys) {
            assert_relative_eq!(interp.eval(*x), *y, epsilon = 1e-14);
        }
        let mut prev = -1.0;
        for i in 0..500 {
            let v = interp.eval(i as f64 * 9.5 / 499.0);
            assert!(v >= prev - 1e-14 && (0.0..=1.0).contains(&v));
            prev = v;
        }
        // close to the smooth source between knots
        for x in [0.25, 2.3, 4.1, 7.77] {
            let exact = 1.0 / (1.0 + (-x + 4.0f64).exp());
            assert!((interp.eval(x) - exact).abs() < 5e-3);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(StableParams::new(0.0, 1.0).is_err());
        assert!(StableParams::new(2.1, 1.0).is_err());
        assert!(StableParams::new(1.0, 0.0).is_err());
        assert!(FbmParams::new(0.0, 10, 0.1).is_err());
        assert!(FbmParams::new(1.0, 10, 0.1).is_err());
        assert!(FbmParams::new(0.5, 0, 0.1).is_err());
        assert!(FbmParams::new(0.5, 10, 0.0).is_err());
        assert!(levy_flight_ensemble(StableParams::new(1.0, 1.0).unwrap(), 0, 1, 0.1, 0).is_err());
    }
}
