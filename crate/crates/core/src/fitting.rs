//! Frequency power-law estimation for attenuation data: ordinary least
//! squares on (ln ω, ln α) recovers the exponent of α₀|ω|^μ the way a
//! straight-line slope is read off a log-log plot, with a t-based 95%
//! interval and an optional frequency-range restriction for
//! regime-specific exponents.

use std::io::Read;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FittingError {
    #[error("row {line}: frequency must be positive, got {omega}")]
    NonPositiveFrequency { line: usize, omega: f64 },
    #[error("row {line}: attenuation must be positive, got {alpha}")]
    NonPositiveAttenuation { line: usize, alpha: f64 },
    #[error("dataset needs at least 3 distinct frequencies, got {0}")]
    TooFewFrequencies(usize),
    #[error("frequency range is empty or inverted: [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("only {0} points remain after range filtering; need at least 3")]
    RangeTooNarrow(usize),
    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv has no data rows")]
    EmptyDataset,
    #[error("csv header must start with columns 'omega,alpha', got {0:?}")]
    BadHeader(Vec<String>),
    #[error("row {line}: expected a number in column '{column}', got {value:?}")]
    BadNumber {
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error("regression is degenerate (all frequencies equal?)")]
    DegenerateRegression,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttenuationRow {
    pub omega: f64,
    pub alpha: f64,
    pub label: String,
}

/// Positive (ω, α) rows plus unit metadata. Units are carried for
/// reporting only; scale equivariance of the fit makes the exponent
/// independent of them.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AttenuationDataset {
    rows: Vec<AttenuationRow>,
    pub frequency_unit: String,
    pub attenuation_unit: String,
}

impl AttenuationDataset {
    pub fn new(
        rows: Vec<AttenuationRow>,
        frequency_unit: impl Into<String>,
        attenuation_unit: impl Into<String>,
    ) -> Result<Self, FittingError> {
        for (i, row) in rows.iter().enumerate() {
            let line = i + 2; // header is line 1
            if !(row.omega > 0.0 && row.omega.is_finite()) {
                return Err(FittingError::NonPositiveFrequency {
                    line,
                    omega: row.omega,
                });
            }
            if !(row.alpha > 0.0 && row.alpha.is_finite()) {
                return Err(FittingError::NonPositiveAttenuation {
                    line,
                    alpha: row.alpha,
                });
            }
        }
        let distinct = count_distinct(rows.iter().map(|r| r.omega));
        if distinct < 3 {
            return Err(FittingError::TooFewFrequencies(distinct));
        }
        Ok(Self {
            rows,
            frequency_unit: frequency_unit.into(),
            attenuation_unit: attenuation_unit.into(),
        })
    }

    pub fn rows(&self) -> &[AttenuationRow] {
        &self.rows
    }

    /// Noiseless synthetic power-law data α = α₀ω^μ on a log-spaced
    /// frequency grid.
    pub fn synthetic_power_law(
        alpha0: f64,
        mu: f64,
        omega_min: f64,
        omega_max: f64,
        n_points: usize,
    ) -> Result<Self, FittingError> {
        let rows = (0..n_points)
            .map(|i| {
                let f = i as f64 / (n_points - 1).max(1) as f64;
                let omega = omega_min * (omega_max / omega_min).powf(f);
                AttenuationRow {
                    omega,
                    alpha: alpha0 * omega.powf(mu),
                    label: String::new(),
                }
            })
            .collect();
        Self::new(rows, "Hz", "dB/cm")
    }
}

fn count_distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut sorted: Vec<f64> = values.collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sorted.dedup();
    sorted.len()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PowerLawFit {
    pub alpha0: f64,
    pub mu_exp: f64,
    pub r_squared: f64,
    /// 95% half-width on mu_exp (t-distribution, n-2 dof)
    pub ci_halfwidth: f64,
    pub decades_spanned: f64,
    pub n_points: usize,
}

/// OLS on (ln ω, ln α), optionally restricted to a frequency interval
/// (inclusive). The intercept exponentiates to α̂₀.
pub fn fit_power_law(
    data: &AttenuationDataset,
    range: Option<(f64, f64)>,
) -> Result<PowerLawFit, FittingError> {
    if let Some((lo, hi)) = range {
        if !(lo > 0.0 && hi > lo) {
            return Err(FittingError::BadRange(lo, hi));
        }
    }
    let kept: Vec<&AttenuationRow> = data
        .rows()
        .iter()
        .filter(|r| range.is_none_or(|(lo, hi)| (lo..=hi).contains(&r.omega)))
        .collect();
    if kept.len() < 3 || count_distinct(kept.iter().map(|r| r.omega)) < 3 {
        return Err(FittingError::RangeTooNarrow(kept.len()));
    }
    let ln_w: Vec<f64> = kept.iter().map(|r| r.omega.ln()).collect();
    let ln_a: Vec<f64> = kept.iter().map(|r| r.alpha.ln()).collect();
    let fit = crate::linfit::ols(&ln_w, &ln_a).ok_or(FittingError::DegenerateRegression)?;
    let (w_min, w_max) = kept.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        (lo.min(r.omega), hi.max(r.omega))
    });
    Ok(PowerLawFit {
        alpha0: fit.intercept.exp(),
        mu_exp: fit.slope,
        r_squared: fit.r_squared,
        ci_halfwidth: fit.slope_ci95(),
        decades_spanned: (w_max / w_min).log10(),
        n_points: kept.len(),
    })
}

/// α̂₀·ω^μ̂ pointwise; every frequency must be positive.
pub fn predict_attenuation(fit: &PowerLawFit, omegas: &[f64]) -> Result<Vec<f64>, FittingError> {
    omegas
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if !(w > 0.0 && w.is_finite()) {
                Err(FittingError::NonPositiveFrequency { line: i, omega: w })
            } else {
                Ok(fit.alpha0 * w.powf(fit.mu_exp))
            }
        })
        .collect()
}

/// Parse `omega,alpha[,label]` CSV with a header row. Rows with
/// nonpositive or non-numeric values are rejected with their line
/// number.
pub fn ingest_csv<R: Read>(reader: R) -> Result<AttenuationDataset, FittingError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if headers.len() < 2 || headers[0] != "omega" || headers[1] != "alpha" {
        return Err(FittingError::BadHeader(headers));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let omega = parse_field(&record, 0, "omega", line)?;
        let alpha = parse_field(&record, 1, "alpha", line)?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(FittingError::NonPositiveFrequency { line, omega });
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(FittingError::NonPositiveAttenuation { line, alpha });
        }
        let label = record.get(2).unwrap_or("").to_string();
        rows.push(AttenuationRow {
            omega,
            alpha,
            label,
        });
    }
    if rows.is_empty() {
        return Err(FittingError::EmptyDataset);
    }
    AttenuationDataset::new(rows, "Hz", "dB/cm")
}

fn parse_field(
    record: &csv::StringRecord,
    index: usize,
    column: &'static str,
    line: usize,
) -> Result<f64, FittingError> {
    let raw = record.get(index).unwrap_or("");
    raw.parse::<f64>().map_err(|_| FittingError::BadNumber {
        line,
        column,
        value: raw.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn noiseless_recovery_at_quoted_exponents() {
        // soft-tissue-like 1.3 over 1-100 MHz, quadratic, and linear
        for (alpha0, mu, lo, hi) in [
            (2.0, 1.3, 1e6, 1e8),
            (0.7, 2.0, 1e3, 1e7),
            (3.1, 1.0, 140.0, 2.2e6),
        ] {
            let data =
                AttenuationDataset::synthetic_power_law(alpha0, mu, lo, hi, 50).unwrap();
            let fit = fit_power_law(&data, None).unwrap();
            assert!((fit.mu_exp - mu).abs() <= 1e-8, "mu {}", fit.mu_exp);
            assert!(
                (fit.alpha0 / alpha0 - 1.0).abs() <= 1e-8,
                "alpha0 {}",
                fit.alpha0
            );
            assert!((fit.r_squared - 1.0).abs() <= 1e-12);
            assert!(fit.ci_halfwidth <= 1e-8);
        }
    }

    #[test]
    fn noiseless_recovery_over_exponent_grid() {
        for mu in [0.1, 0.5, 1.0, 1.5, 2.0] {
            let data = AttenuationDataset::synthetic_power_law(1.7, mu, 0.5, 500.0, 25).unwrap();
            let fit = fit_power_law(&data, None).unwrap();
            assert!((fit.mu_exp - mu).abs() <= 1e-8);
            assert!((fit.alpha0 / 1.7 - 1.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn range_restriction_selects_regime() {
        // two-regime data: slope 1 below the knee at 100, slope 2 above
        let rows: Vec<AttenuationRow> = (0..60)
            .map(|i| {
                let omega = 10f64.powf(i as f64 / 10.0);
                let alpha = if omega <= 100.0 {
                    omega
                } else {
                    omega * omega / 100.0
                };
                AttenuationRow {
                    omega,
                    alpha,
                    label: String::new(),
                }
            })
            .collect();
        let data = AttenuationDataset::new(rows, "Hz", "dB/cm").unwrap();
        let low = fit_power_law(&data, Some((1.0, 100.0))).unwrap();
        let high = fit_power_law(&data, Some((100.0, 1e6))).unwrap();
        assert!((low.mu_exp - 1.0).abs() <= 1e-10, "{}", low.mu_exp);
        assert!((high.mu_exp - 2.0).abs() <= 1e-10, "{}", high.mu_exp);
        assert_relative_eq!(low.decades_spanned, 2.0, max_relative = 1e-10);

        assert!(matches!(
            fit_power_law(&data, Some((1.0, 1.5))),
            Err(FittingError::RangeTooNarrow(_))
        ));
        assert!(matches!(
            fit_power_law(&data, Some((10.0, 1.0))),
            Err(FittingError::BadRange(_, _))
        ));
    }

    #[test]
    fn scale_equivariance() {
        let base = AttenuationDataset::synthetic_power_law(2.0, 1.3, 1.0, 100.0, 40).unwrap();
        let fit = fit_power_law(&base, None).unwrap();

        // alpha -> c*alpha: alpha0 scales by c, mu unchanged
        let c = 37.5;
        let scaled_alpha = AttenuationDataset::new(
            base.rows()
                .iter()
                .map(|r| AttenuationRow {
                    omega: r.omega,
                    alpha: c * r.alpha,
                    label: r.label.clone(),
                })
                .collect(),
            "Hz",
            "dB/cm",
        )
        .unwrap();
        let fa = fit_power_law(&scaled_alpha, None).unwrap();
        assert_relative_eq!(fa.mu_exp, fit.mu_exp, epsilon = 1e-10);
        assert_relative_eq!(fa.alpha0, c * fit.alpha0, max_relative = 1e-10);

        // omega -> c*omega: mu unchanged, alpha0 -> alpha0 * c^{-mu}
        let scaled_omega = AttenuationDataset::new(
            base.rows()
                .iter()
                .map(|r| AttenuationRow {
                    omega: c * r.omega,
                    alpha: r.alpha,
                    label: r.label.clone(),
                })
                .collect(),
            "Hz",
            "dB/cm",
        )
        .unwrap();
        let fw = fit_power_law(&scaled_omega, None).unwrap();
        assert_relative_eq!(fw.mu_exp, fit.mu_exp, epsilon = 1e-10);
        assert_relative_eq!(
            fw.alpha0,
            fit.alpha0 * c.powf(-fit.mu_exp),
            max_relative = 1e-9
        );
    }

    #[test]
    fn confidence_interval_coverage_under_lognormal_noise() {
        // sigma=0.05 multiplicative noise, 50 points over 2 decades,
        // 1000 trials: the 95% interval must cover mu in >= 90%
        let (alpha0, mu) = (2.0, 1.3);
        let clean = AttenuationDataset::synthetic_power_law(alpha0, mu, 1.0, 100.0, 50).unwrap();
        let mut covered = 0;
        let n_trials = 1000;
        for trial in 0..n_trials {
            let mut rng = ChaCha8Rng::seed_from_u64(9000 + trial);
            let noisy = AttenuationDataset::new(
                clean
                    .rows()
                    .iter()
                    .map(|r| AttenuationRow {
                        omega: r.omega,
                        alpha: r.alpha * (0.05 * rng.sample::<f64, _>(StandardNormal)).exp(),
                        label: String::new(),
                    })
                    .collect(),
                "Hz",
                "dB/cm",
            )
            .unwrap();
            let fit = fit_power_law(&noisy, None).unwrap();
            if (fit.mu_exp - mu).abs() <= fit.ci_halfwidth {
                covered += 1;
            }
        }
        let coverage = covered as f64 / n_trials as f64;
        assert!(coverage >= 0.90, "coverage {coverage}");
    }

    #[test]
    fn prediction_values() {
        let fit = PowerLawFit {
            alpha0: 2.0,
            mu_exp: 1.3,
            r_squared: 1.0,
            ci_halfwidth: 0.0,
            decades_spanned: 2.0,
            n_points: 50,
        };
        let out = predict_attenuation(&fit, &[1.0, 10.0]).unwrap();
        assert_relative_eq!(out[0], 2.0, max_relative = 1e-15);
        assert_relative_eq!(out[1], 39.905246299377595, max_relative = 1e-12);
        assert!(predict_attenuation(&fit, &[0.0]).is_err());

        let flat = PowerLawFit {
            mu_exp: 0.0,
            ..fit
        };
        let out = predict_attenuation(&flat, &[0.1, 3.0, 88.0]).unwrap();
        assert!(out.iter().all(|&v| v == 2.0));
    }

    #[test]
    fn csv_round_trip_and_rejection() {
        let data = ingest_csv("omega,alpha\n1,2\n10,39.9052\n100,796.2143\n".as_bytes()).unwrap();
        assert_eq!(data.rows().len(), 3);
        let fit = fit_power_law(&data, None).unwrap();
        assert!((fit.mu_exp - 1.3).abs() < 1e-4);

        // bad rows carry their line number (header = line 1)
        match ingest_csv("omega,alpha\n1,2\n10,0\n".as_bytes()) {
            Err(FittingError::NonPositiveAttenuation { line: 3, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        match ingest_csv("omega,alpha\n1,2\n-5,3\n100,4\n".as_bytes()) {
            Err(FittingError::NonPositiveFrequency { line: 3, .. }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        match ingest_csv("omega,alpha\n1,2\n10,abc\n".as_bytes()) {
            Err(FittingError::BadNumber {
                line: 3,
                column: "alpha",
                ..
            }) => {}
            other => panic!("unexpected: {other:?}"),
        }
        assert!(matches!(
            ingest_csv("omega,alpha\n".as_bytes()),
            Err(FittingError::EmptyDataset)
        ));
        assert!(matches!(
            ingest_csv("frequency,loss\n1,2\n".as_bytes()),
            Err(FittingError::BadHeader(_))
        ));

        // labels survive ingestion
        let labeled = ingest_csv("omega,alpha,label\n1,2,a\n10,4,b\n100,8,c\n".as_bytes()).unwrap();
        assert_eq!(labeled.rows()[1].label, "b");
    }

    #[test]
    fn dataset_validation() {
        let row = |omega: f64, alpha: f64| AttenuationRow {
            omega,
            alpha,
            label: String::new(),
        };
        assert!(matches!(
            AttenuationDataset::new(vec![row(1.0, 1.0), row(1.0, 2.0), row(1.0, 3.0)], "", ""),
            Err(FittingError::TooFewFrequencies(1))
        ));
        assert!(AttenuationDataset::new(
            vec![row(1.0, 1.0), row(2.0, 2.0), row(3.0, 3.0)],
            "",
            ""
        )
        .is_ok());
    }
}
