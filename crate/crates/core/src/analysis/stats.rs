//! Sample statistics: fits, correlation, goodness of fit, correlation distance.
//!
//! Standard deviations use the population form (divide by `n`).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::AnalysisError;
use crate::lsp::LspRealization;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn population_std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Median (mean of the two middle values for even lengths). NaN for empty input.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub mu: f64,
    pub sigma: f64,
}

pub fn fit_normal(samples: &[f64]) -> Result<NormalFit, AnalysisError> {
    if samples.len() < 2 {
        return Err(AnalysisError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    Ok(NormalFit {
        mu: mean(samples),
        sigma: population_std(samples),
    })
}

/// Normal fit of `log10(samples)`.
pub fn fit_lognormal(samples: &[f64]) -> Result<NormalFit, AnalysisError> {
    if let Some(&x) = samples.iter().find(|&&x| !(x > 0.0)) {
        return Err(AnalysisError::NonPositiveSample(x));
    }
    let logs: Vec<f64> = samples.iter().map(|x| x.log10()).collect();
    fit_normal(&logs)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(AnalysisError::TooFewSamples {
            needed: 2,
            got: xs.len(),
        });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(AnalysisError::ZeroVariance(0));
    }
    if syy == 0.0 {
        return Err(AnalysisError::ZeroVariance(1));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Pearson correlation matrix of already-transformed columns.
pub fn cross_corr(columns: &[Vec<f64>]) -> Result<DMatrix<f64>, AnalysisError> {
    let n = columns.first().map(|c| c.len()).unwrap_or(0);
    if n < 3 {
        return Err(AnalysisError::TooFewSamples { needed: 3, got: n });
    }
    for c in columns {
        if c.len() != n {
            return Err(AnalysisError::LengthMismatch(n, c.len()));
        }
    }
    for (i, c) in columns.iter().enumerate() {
        if population_std(c) == 0.0 {
            return Err(AnalysisError::ZeroVariance(i));
        }
    }
    let k = columns.len();
    let mut out = DMatrix::identity(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let r = pearson(&columns[i], &columns[j])?;
            out[(i, j)] = r;
            out[(j, i)] = r;
        }
    }
    Ok(out)
}

/// Columns `log10(DS), log10(ASA), SF, K` (K only when every sample has one).
pub fn lsp_columns(samples: &[LspRealization]) -> Vec<Vec<f64>> {
    let mut cols = vec![
        samples.iter().map(|l| l.ds.log10()).collect(),
        samples.iter().map(|l| l.asa.log10()).collect(),
        samples.iter().map(|l| l.sf).collect(),
    ];
    if !samples.is_empty() && samples.iter().all(|l| l.k.is_some()) {
        cols.push(samples.iter().filter_map(|l| l.k).collect());
    }
    cols
}

/// Kolmogorov-Smirnov statistic of `samples` against `N(mu, sigma^2)`.
pub fn ks_statistic_normal(samples: &[f64], mu: f64, sigma: f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let dist = Normal::new(mu, sigma).expect("positive sigma");
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic two-sided KS critical value at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

fn autocorrelation(tracks: &[Vec<f64>], max_lag: usize) -> Result<Vec<f64>, AnalysisError> {
    let all: Vec<f64> = tracks.iter().flatten().copied().collect();
    let m = mean(&all);
    let var = all.iter().map(|x| (x - m).powi(2)).sum::<f64>() / all.len() as f64;
    if var == 0.0 {
        return Err(AnalysisError::ZeroVariance(0));
    }
    Ok((0..=max_lag)
        .map(|lag| {
            let (mut acc, mut count) = (0.0, 0usize);
            for t in tracks {
                for i in 0..t.len().saturating_sub(lag) {
                    acc += (t[i] - m) * (t[i + lag] - m);
                    count += 1;
                }
            }
            acc / count as f64 / var
        })
        .collect())
}

/// Smallest lag (meters) at which the empirical autocorrelation of a uniformly
/// spaced track falls to 1/e, interpolated linearly between lags.
pub fn correlation_distance(values: &[f64], spacing_m: f64) -> Result<f64, AnalysisError> {
    correlation_distance_tracks(&[values.to_vec()], spacing_m)
}

/// [`correlation_distance`] with the autocorrelation pooled over several tracks
/// of equal spacing.
pub fn correlation_distance_tracks(tracks: &[Vec<f64>], spacing_m: f64) -> Result<f64, AnalysisError> {
    let shortest = tracks.iter().map(|t| t.len()).min().unwrap_or(0);
    if shortest < 20 {
        return Err(AnalysisError::TooFewSamples {
            needed: 20,
            got: shortest,
        });
    }
    let rho = autocorrelation(tracks, shortest / 2)?;
    let target = (-1.0f64).exp();
    for lag in 1..rho.len() {
        if rho[lag] <= target {
            let frac = (rho[lag - 1] - target) / (rho[lag - 1] - rho[lag]);
            return Ok(spacing_m * ((lag - 1) as f64 + frac));
        }
    }
    Err(AnalysisError::TrackTooShort)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{generate_field, Extent};
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn fits() {
        assert_eq!(fit_normal(&[3.0, 3.0, 3.0]).unwrap().sigma, 0.0);
        let f = fit_lognormal(&[1e-9, 1e-7]).unwrap();
        assert!((f.mu + 8.0).abs() < 1e-12 && (f.sigma - 1.0).abs() < 1e-12);
        assert_eq!(
            fit_lognormal(&[1.0, 0.0]),
            Err(AnalysisError::NonPositiveSample(0.0))
        );
    }

    #[test]
    fn lognormal_recovery() {
        let mut rng = rng_from_seed(21);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| 10f64.powf(-8.82 + 0.15 * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let f = fit_lognormal(&xs).unwrap();
        assert!((f.mu + 8.82).abs() < 0.01, "{f:?}");
        assert!((f.sigma - 0.15).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn correlation_cases() {
        let mut rng = rng_from_seed(22);
        let a: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        let c = cross_corr(&[a.clone(), a.clone(), b]).unwrap();
        assert!((c[(0, 1)] - 1.0).abs() < 1e-12);
        assert!(c[(0, 2)].abs() < 0.05);
        assert_eq!(
            cross_corr(&[a, vec![1.0; 10_000]]),
            Err(AnalysisError::ZeroVariance(1))
        );
    }

    #[test]
    fn correlation_distance_cases() {
        let mut rng = rng_from_seed(23);
        let white: Vec<f64> = (0..2000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(correlation_distance(&white, 1.0).unwrap() <= 1.0);
        assert_eq!(
            correlation_distance(&[2.0; 50], 1.0),
            Err(AnalysisError::ZeroVariance(0))
        );
        assert!(matches!(
            correlation_distance(&[1.0, 2.0], 1.0),
            Err(AnalysisError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn correlation_distance_of_exponential_field() {
        let field = generate_field(5.0, Extent::sized(400.0, 400.0), 0.5, 24).unwrap();
        let (nx, ny) = field.shape();
        let tracks: Vec<Vec<f64>> = (0..ny)
            .step_by(20)
            .map(|j| (0..nx).map(|i| field.node(i, j)).collect())
            .collect();
        let d = correlation_distance_tracks(&tracks, 0.5).unwrap();
        assert!((d - 5.0).abs() < 0.5, "{d}");
    }

    #[test]
    fn ks_accepts_matching_law() {
        let mut rng = rng_from_seed(25);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| 1.0 + 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        assert!(ks_statistic_normal(&xs, 1.0, 2.0) < ks_critical_1pct(xs.len()));
        assert!(ks_statistic_normal(&xs, 1.3, 2.0) > ks_critical_1pct(xs.len()));
    }
}
