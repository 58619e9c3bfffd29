//! Ordinary least squares for a straight line, with the slope standard
//! error and 95% t-interval used by the exponent estimators.

use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl LineFit {
    /// Half-width of the 95% confidence interval on the slope
    /// (t-distribution with n-2 degrees of freedom).
    pub fn slope_ci95(&self) -> f64 {
        if self.n < 3 {
            return f64::INFINITY;
        }
        let t = StudentsT::new(0.0, 1.0, (self.n - 2) as f64)
            .expect("valid dof")
            .inverse_cdf(0.975);
        t * self.slope_se
    }
}

/// Fit y = intercept + slope*x. Requires at least 3 points and
/// non-degenerate x; returns None otherwise.
pub(crate) fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let syy: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let slope_se = if n > 2 {
        (ss_res / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    Some(LineFit {
        slope,
        intercept,
        slope_se,
        r_squared: r_squared.clamp(0.0, 1.0),
        n,
    })
}
