//! Mittag-Leffler function E_η(z) = Σ z^n / Γ(ηn + 1) for 0 < η ≤ 1 and
//! complex z.
//!
//! Two regimes:
//! - small |z|: Taylor series with compensated summation. The switch
//!   radius shrinks with η so that the largest term (~e^{|z|^{1/η}})
//!   never amplifies round-off past the target accuracy.
//! - otherwise: inverse Laplace transform on a parabolic Bromwich
//!   contour, E_η(z) = (1/2πi) ∮ e^s s^{η-1}/(s^η - z) ds. When the
//!   principal-sheet pole s* = z^{1/η} exists (|arg z| < ηπ) its residue
//!   e^{s*}/η is split off analytically and the simple pole is
//!   subtracted from the integrand, so the trapezoid rule never sees it.
//!
//! Every contour evaluation runs twice with independent discretizations;
//! disagreement beyond the target tolerance is reported as accuracy loss
//! instead of returned silently.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MlError {
    #[error("eta must satisfy 0 < eta <= 1, got {0}")]
    EtaOutOfRange(f64),
    #[error("argument must be finite, got {0}")]
    NonFiniteArgument(Complex64),
    #[error(
        "accuracy loss: could not certify relative tolerance {tolerance:e} \
         (estimate {estimate}, discrepancy {discrepancy:e})"
    )]
    AccuracyLoss {
        estimate: Complex64,
        discrepancy: f64,
        tolerance: f64,
    },
}

const TARGET_REL_TOL: f64 = 1e-10;

/// Evaluate E_η(z) to relative accuracy ≤ 1e-10 (certified; see
/// [`MlError::AccuracyLoss`]).
pub fn mittag_leffler(eta: f64, z: Complex64) -> Result<Complex64, MlError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(MlError::EtaOutOfRange(eta));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(MlError::NonFiniteArgument(z));
    }
    if eta == 1.0 {
        return Ok(z.exp());
    }
    if z.norm() <= series_radius(eta) {
        return Ok(series(eta, z));
    }
    // Negative-real arguments of large magnitude are cheaper and sharper
    // through the convergent tail expansion than through the contour.
    if z.im == 0.0 && z.re < 0.0 {
        if let Some(v) = negative_axis_asymptotic(eta, z.re) {
            return Ok(v);
        }
    }
    let a = contour(eta, z, 220, 1.15);
    let b = contour(eta, z, 300, 1.45);
    let scale = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    let discrepancy = (a - b).norm() / scale;
    if discrepancy > TARGET_REL_TOL {
        return Err(MlError::AccuracyLoss {
            estimate: b,
            discrepancy,
            tolerance: TARGET_REL_TOL,
        });
    }
    Ok(b)
}

/// Largest |z| at which the Taylor series is certifiably accurate in
/// f64. The peak term is ~e^{|z|^{1/η}} and each term carries ~2e-14
/// relative error from the log-space evaluation, so cap |z|^{1/η} at 6.
fn series_radius(eta: f64) -> f64 {
    6f64.powf(eta).min(5.0)
}

fn series(eta: f64, z: Complex64) -> Complex64 {
    if z.norm() == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let ln_r = z.norm().ln();
    let theta = z.arg();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0); // Kahan compensation
    let mut prev_mag = f64::INFINITY;
    for k in 0..400u32 {
        let kf = k as f64;
        let ln_mag = kf * ln_r - ln_gamma(eta * kf + 1.0);
        let mag = ln_mag.exp();
        let term = Complex64::from_polar(mag, kf * theta);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if mag < 1e-18 * sum.norm().max(1.0) && mag < prev_mag {
            break;
        }
        prev_mag = mag;
    }
    sum
}

/// Convergent tail expansion on the negative real axis:
/// E_η(-x) = Σ_{k≥1} (-1)^{k+1} x^{-k} / Γ(1 - ηk), truncated at the
/// smallest term. Returns None when optimal truncation cannot reach the
/// target (|x| too small); caller falls through to the contour.
fn negative_axis_asymptotic(eta: f64, x_neg: f64) -> Option<Complex64> {
    let x = -x_neg;
    let ln_x = x.ln();
    let mut sum = 0.0f64;
    let mut last_nonzero = f64::INFINITY;
    let mut k = 1u32;
    loop {
        let term = (-(k as f64) * ln_x).exp() * recip_gamma_fn(1.0 - eta * k as f64);
        // terms vanishing at Γ poles carry no truncation information
        if term != 0.0 {
            if term.abs() > last_nonzero {
                // past optimal truncation: series started diverging
                break;
            }
            last_nonzero = term.abs();
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * term;
        k += 1;
        if k > 200 {
            break;
        }
    }
    // the smallest retained term bounds the optimal-truncation error
    if last_nonzero <= 0.1 * TARGET_REL_TOL * sum.abs() {
        Some(Complex64::new(sum, 0.0))
    } else {
        None
    }
}

/// 1/Γ(a) for real a, valid through the poles where it vanishes.
fn recip_gamma_fn(a: f64) -> f64 {
    if a > 0.0 {
        (-ln_gamma(a)).exp()
    } else if a == a.floor() {
        0.0
    } else {
        // reflection: 1/Γ(a) = sin(πa) Γ(1-a) / π
        (PI * a).sin() * ln_gamma(1.0 - a).exp() / PI
    }
}

/// Trapezoid rule on the parabolic contour s(u) = μ(1+iu)², u ∈ [-U, U],
/// with the principal-sheet pole (when present) subtracted analytically.
fn contour(eta: f64, z: Complex64, n_nodes: usize, mut mu: f64) -> Complex64 {
    let pole = if z.norm() > 0.0 && z.arg().abs() < eta * PI {
        Some((z.ln() / eta).exp())
    } else {
        None
    };

    // keep contour nodes away from the subtracted pole so the removable
    // cancellation in f - g stays benign
    if let Some(s_star) = pole {
        for _ in 0..8 {
            if contour_min_distance(mu, n_nodes, s_star) > 1e-3 * s_star.norm().max(1.0) {
                break;
            }
            mu *= 1.03;
        }
    }

    let u_max = (1.0 + 41.0 / mu).sqrt();
    let h = u_max / n_nodes as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in -(n_nodes as i64)..=(n_nodes as i64) {
        let u = j as f64 * h;
        let w = Complex64::new(1.0, u);
        let s = mu * w * w;
        let ds = Complex64::new(0.0, 2.0 * mu) * w;
        let s_eta = (s.ln() * eta).exp();
        let mut f = (s.ln() * (eta - 1.0)).exp() / (s_eta - z);
        if let Some(s_star) = pole {
            f -= (eta * (s - s_star)).inv();
        }
        acc += s.exp() * f * ds;
    }
    let integral = acc * h / Complex64::new(0.0, 2.0 * PI);
    match pole {
        Some(s_star) => integral + s_star.exp() / eta,
        None => integral,
    }
}

fn contour_min_distance(mu: f64, n_nodes: usize, s_star: Complex64) -> f64 {
    let u_max = (1.0 + 41.0 / mu).sqrt();
    let h = u_max / n_nodes as f64;
    let mut min_d = f64::INFINITY;
    for j in -(n_nodes as i64)..=(n_nodes as i64) {
        let u = j as f64 * h;
        let w = Complex64::new(1.0, u);
        let d = (mu * w * w - s_star).norm();
        if d < min_d {
            min_d = d;
        }
    }
    min_d
}
