//! Path-loss models and the close-in (CI) fit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::pdp::Pdp;
use crate::params::Condition;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum PathLossError {
    #[error("distance {0} m is below the 1 m reference distance")]
    BelowReference(f64),
    #[error("frequency and distance must be positive")]
    NonPositive,
    #[error("fit needs at least two distinct distances")]
    Degenerate,
    #[error("PDP carries no power")]
    ZeroPower,
    #[error("no PDPs given")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathLossKind {
    Omnidirectional,
    BestDirection,
}

impl std::fmt::Display for PathLossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PathLossKind::Omnidirectional => "omni",
            PathLossKind::BestDirection => "best",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub distance_m: f64,
    pub loss_db: f64,
    pub condition: Condition,
    pub kind: PathLossKind,
}

/// Free-space path loss `20 log10(4 pi d f / c)` in dB, `f` in GHz and `d` in m.
pub fn fspl(f_ghz: f64, d_m: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * d_m * f_ghz * 1e9 / SPEED_OF_LIGHT).log10()
}

/// Close-in model with a 1 m free-space reference.
pub fn ci_pl(f_ghz: f64, d_m: f64, ple: f64, sf_db: f64) -> Result<f64, PathLossError> {
    if f_ghz <= 0.0 || d_m <= 0.0 {
        return Err(PathLossError::NonPositive);
    }
    if d_m < 1.0 {
        return Err(PathLossError::BelowReference(d_m));
    }
    Ok(fspl(f_ghz, 1.0) + 10.0 * ple * d_m.log10() + sf_db)
}

/// The 3GPP UMi street-canyon NLoS curve used for comparison.
pub fn umi_nlos_3gpp_pl(d_m: f64) -> f64 {
    67.57 + 35.5 * d_m.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiFit {
    /// Path-loss exponent.
    pub ple: f64,
    /// Population standard deviation of the residuals, dB.
    pub sigma_db: f64,
}

/// Least-squares CI fit with the intercept pinned to `fspl(f, 1 m)`.
pub fn fit_ci(samples: &[PathLossSample], f_ghz: f64) -> Result<CiFit, PathLossError> {
    let first = samples.first().ok_or(PathLossError::Degenerate)?.distance_m;
    if samples.iter().all(|s| s.distance_m == first) {
        return Err(PathLossError::Degenerate);
    }
    if samples.iter().any(|s| s.distance_m <= 0.0) {
        return Err(PathLossError::NonPositive);
    }
    let fs1 = fspl(f_ghz, 1.0);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for s in samples {
        let x = 10.0 * s.distance_m.log10();
        sxx += x * x;
        sxy += x * (s.loss_db - fs1);
    }
    if sxx <= 0.0 {
        return Err(PathLossError::Degenerate);
    }
    let ple = sxy / sxx;
    let var = samples
        .iter()
        .map(|s| {
            let r = s.loss_db - fs1 - ple * 10.0 * s.distance_m.log10();
            r * r
        })
        .sum::<f64>()
        / samples.len() as f64;
    Ok(CiFit {
        ple,
        sigma_db: var.sqrt(),
    })
}

fn loss_of(pdp: &Pdp) -> Result<f64, PathLossError> {
    let total = pdp.total_power();
    if total <= 0.0 {
        return Err(PathLossError::ZeroPower);
    }
    Ok(-10.0 * total.log10())
}

/// `-10 log10(sum p_i)` of a calibrated linear-power PDP.
pub fn pl_from_pdp(
    pdp: &Pdp,
    distance_m: f64,
    condition: Condition,
) -> Result<PathLossSample, PathLossError> {
    Ok(PathLossSample {
        distance_m,
        loss_db: loss_of(pdp)?,
        condition,
        kind: PathLossKind::Omnidirectional,
    })
}

/// Path loss of the direction with the largest summed power.
pub fn pl_best_direction(
    pdps: &[Pdp],
    distance_m: f64,
    condition: Condition,
) -> Result<PathLossSample, PathLossError> {
    let best = pdps
        .iter()
        .max_by(|a, b| a.total_power().total_cmp(&b.total_power()))
        .ok_or(PathLossError::Empty)?;
    Ok(PathLossSample {
        distance_m,
        loss_db: loss_of(best)?,
        condition,
        kind: PathLossKind::BestDirection,
    })
}
