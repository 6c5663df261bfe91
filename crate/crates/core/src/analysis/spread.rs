//! Delay spread, azimuth spread and K-factor on (value, power) slices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

fn check(values: &[f64], powers: &[f64]) -> Result<f64, AnalysisError> {
    if values.len() != powers.len() {
        return Err(AnalysisError::LengthMismatch(values.len(), powers.len()));
    }
    if let Some(&p) = powers.iter().find(|&&p| p < 0.0) {
        return Err(AnalysisError::NegativePower(p));
    }
    let total: f64 = powers.iter().sum();
    if total <= 0.0 {
        return Err(AnalysisError::ZeroPower);
    }
    Ok(total)
}

/// Power-weighted standard deviation of delay.
pub fn rms_ds_slices(delays: &[f64], powers: &[f64]) -> Result<f64, AnalysisError> {
    let total = check(delays, powers)?;
    let mean = delays.iter().zip(powers).map(|(t, p)| t * p).sum::<f64>() / total;
    let var = delays
        .iter()
        .zip(powers)
        .map(|(t, p)| p * (t - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.max(0.0).sqrt())
}

/// Circular spread `sqrt(sum p |e^{j phi} - m|^2 / sum p)` with
/// `m = sum p e^{j phi} / sum p`, read in radians and returned in degrees.
pub fn asa_eq10_slices(azimuths_deg: &[f64], powers: &[f64]) -> Result<f64, AnalysisError> {
    let total = check(azimuths_deg, powers)?;
    let mean = azimuths_deg
        .iter()
        .zip(powers)
        .map(|(a, p)| Complex64::cis(a.to_radians()) * *p)
        .sum::<Complex64>()
        / total;
    let spread = azimuths_deg
        .iter()
        .zip(powers)
        .map(|(a, p)| p * (Complex64::cis(a.to_radians()) - mean).norm_sqr())
        .sum::<f64>()
        / total;
    Ok(spread.max(0.0).sqrt().to_degrees())
}

/// Circular angular spread minimized over the reference rotation, degrees.
pub fn asa_3gpp_slices(azimuths_deg: &[f64], powers: &[f64]) -> Result<f64, AnalysisError> {
    let total = check(azimuths_deg, powers)?;
    let wrap = |a: f64| (a + 180.0).rem_euclid(360.0) - 180.0;
    let spread_at = |shift: f64| {
        let shifted: Vec<f64> = azimuths_deg.iter().map(|a| wrap(a + shift)).collect();
        let mean = shifted.iter().zip(powers).map(|(a, p)| a * p).sum::<f64>() / total;
        let var = shifted
            .iter()
            .zip(powers)
            .map(|(a, p)| p * wrap(a - mean).powi(2))
            .sum::<f64>()
            / total;
        var.max(0.0).sqrt()
    };
    let mut best = f64::INFINITY;
    let mut best_shift = 0.0;
    for i in 0..360 {
        let v = spread_at(i as f64);
        if v < best {
            best = v;
            best_shift = i as f64;
        }
    }
    for j in -100..=100 {
        best = best.min(spread_at(best_shift + j as f64 * 0.01));
    }
    Ok(best)
}

/// Ricean K-factor estimate; a single component gives an unbounded ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KFactor {
    Finite(f64),
    Infinite,
}

impl KFactor {
    pub fn db(&self) -> Option<f64> {
        match self {
            KFactor::Finite(v) => Some(*v),
            KFactor::Infinite => None,
        }
    }
}

/// `10 log10(max / (sum - max))`.
pub fn k_factor_slices(powers: &[f64]) -> Result<KFactor, AnalysisError> {
    check(powers, powers)?;
    let max = powers.iter().copied().fold(0.0, f64::max);
    let rest: f64 = powers.iter().sum::<f64>() - max;
    let nonzero = powers.iter().filter(|&&p| p > 0.0).count();
    if nonzero < 2 || rest <= 0.0 {
        return Ok(KFactor::Infinite);
    }
    Ok(KFactor::Finite(10.0 * (max / rest).log10()))
}
