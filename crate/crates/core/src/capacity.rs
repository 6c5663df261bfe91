//! Single-user MIMO capacity over simulated drops.
//!
//! Capacity of one channel matrix is `log2 det(I + (rho / Mt) H H^H)`, evaluated as
//! `sum_i log2(1 + rho lambda_i / Mt)` over the eigenvalues of the Gram matrix.
//! An experiment averages it over 64 tones and all drops after scaling the
//! channels to a mean squared Frobenius norm of `Mt * Mr`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antenna::AntennaArray;
use crate::coeff::{assemble_cir, cir_to_ctf, CirConfig, CirMode, LinkArrays};
use crate::drop::{drop_seed, generate_drop, DropConfig, DropError};
use crate::params::{Condition, ParamError, ParamLibrary, Scenario, ScenarioParamSet, Source};
use crate::rng::rng_from_seed;

#[derive(Debug, Error)]
pub enum CapacityError {
    #[error("channel matrix has non-finite entries")]
    NonFinite,
    #[error("channel carries no power")]
    ZeroChannel,
    #[error("at least one drop is required")]
    NoDrops,
    #[error("negative SNR scale {0}")]
    NegativeSnr(f64),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Drop(#[from] DropError),
}

/// Nonzero-dimension eigenvalues of `H H^H` (the smaller Gram matrix is used).
pub fn gram_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let gram = if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    };
    SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0))
        .collect()
}

fn check(h: &DMatrix<Complex64>, rho: f64) -> Result<(), CapacityError> {
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CapacityError::NonFinite);
    }
    if !(rho >= 0.0) {
        return Err(CapacityError::NegativeSnr(rho));
    }
    Ok(())
}

/// Capacity in bps/Hz from Gram eigenvalues.
pub fn capacity_from_eigenvalues(eigenvalues: &[f64], rho: f64, mt: usize) -> f64 {
    eigenvalues
        .iter()
        .map(|l| (rho * l / mt as f64).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2
}

/// `log2 det(I + (rho / mt) H H^H)` for an `Mr x Mt` matrix, by eigenvalues.
pub fn mimo_capacity(h: &DMatrix<Complex64>, rho: f64, mt: usize) -> Result<f64, CapacityError> {
    check(h, rho)?;
    Ok(capacity_from_eigenvalues(&gram_eigenvalues(h), rho, mt))
}

/// The same quantity through an LU determinant.
pub fn mimo_capacity_det(h: &DMatrix<Complex64>, rho: f64, mt: usize) -> Result<f64, CapacityError> {
    check(h, rho)?;
    let mr = h.nrows();
    let scale = Complex64::new(rho / mt as f64, 0.0);
    let m = DMatrix::<Complex64>::identity(mr, mr) + h * h.adjoint() * scale;
    Ok(m.determinant().norm().log2())
}

/// Scale a set of channel matrices so the mean of `|H|_F^2` equals `Mt * Mr`.
pub fn normalize_channel(hs: &mut [DMatrix<Complex64>]) -> Result<(), CapacityError> {
    let Some(first) = hs.first() else {
        return Err(CapacityError::ZeroChannel);
    };
    let target = (first.nrows() * first.ncols()) as f64;
    let mean = hs.iter().map(|h| h.norm_squared()).sum::<f64>() / hs.len() as f64;
    if !(mean > 0.0) {
        return Err(CapacityError::ZeroChannel);
    }
    let s = Complex64::new((target / mean).sqrt(), 0.0);
    for h in hs.iter_mut() {
        *h *= s;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// One scale for the whole experiment.
    #[default]
    Experiment,
    /// Every drop scaled on its own.
    PerDrop,
}

/// Link condition of the drops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConditionMix {
    Pure(Condition),
    /// Each drop is LoS with the given probability.
    Mixed { los_fraction: f64 },
}

impl Default for ConditionMix {
    fn default() -> Self {
        ConditionMix::Pure(Condition::Nlos)
    }
}

impl std::fmt::Display for ConditionMix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConditionMix::Pure(c) => write!(f, "{c}"),
            ConditionMix::Mixed { los_fraction } => write!(f, "mixed-{los_fraction}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    pub snr_db: Vec<f64>,
    pub n_drops: usize,
    pub seed: u64,
    /// Base-station URA (rows, cols).
    pub bs_array: (usize, usize),
    /// User URA (rows, cols).
    pub ue_array: (usize, usize),
    pub n_tones: usize,
    pub bandwidth_hz: f64,
    pub mode: CirMode,
    pub normalization: Normalization,
    pub condition: ConditionMix,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            snr_db: (0..=8).map(|i| i as f64 * 5.0).collect(),
            n_drops: 100,
            seed: 1,
            bs_array: (16, 16),
            ue_array: (2, 2),
            n_tones: 64,
            bandwidth_hz: 1e9,
            mode: CirMode::ThzSimplified,
            normalization: Normalization::Experiment,
            condition: ConditionMix::default(),
        }
    }
}

impl CapacityConfig {
    /// Baseband tone offsets, evenly spread over the bandwidth and centred on zero.
    pub fn tones(&self) -> Vec<f64> {
        let n = self.n_tones.max(1);
        let df = self.bandwidth_hz / n as f64;
        (0..n)
            .map(|k| (k as f64 + 0.5) * df - 0.5 * self.bandwidth_hz)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityCurve {
    pub snr_db: Vec<f64>,
    /// Mean capacity per SNR point, bps/Hz.
    pub capacity: Vec<f64>,
    pub n_drops: usize,
    pub scenario: Scenario,
    pub source: Source,
    pub condition: String,
}

impl CapacityCurve {
    pub fn at(&self, snr_db: f64) -> Option<f64> {
        self.snr_db
            .iter()
            .position(|&s| (s - snr_db).abs() < 1e-9)
            .map(|i| self.capacity[i])
    }
}

/// Parameter sets that drops are drawn from.
#[derive(Debug, Clone, Copy)]
pub struct DropSets<'a> {
    pub los: Option<&'a ScenarioParamSet>,
    pub nlos: Option<&'a ScenarioParamSet>,
    pub los_fraction: f64,
}

impl<'a> DropSets<'a> {
    pub fn single(params: &'a ScenarioParamSet) -> Self {
        if params.is_los() {
            Self {
                los: Some(params),
                nlos: None,
                los_fraction: 1.0,
            }
        } else {
            Self {
                los: None,
                nlos: Some(params),
                los_fraction: 0.0,
            }
        }
    }

    fn pick(&self, seed: u64, index: usize) -> &'a ScenarioParamSet {
        match (self.los, self.nlos) {
            (Some(l), None) => l,
            (None, Some(n)) => n,
            (Some(l), Some(n)) => {
                let mut rng = rng_from_seed(drop_seed(seed ^ 0x004C_4F53, index));
                if rng.random::<f64>() < self.los_fraction {
                    l
                } else {
                    n
                }
            }
            (None, None) => unreachable!("DropSets needs at least one set"),
        }
    }
}

/// Per-drop, per-tone Gram eigenvalues of a drop set.
pub fn drop_eigenvalues(sets: &DropSets, config: &CapacityConfig) -> Result<Vec<Vec<Vec<f64>>>, CapacityError> {
    if config.n_drops == 0 {
        return Err(CapacityError::NoDrops);
    }
    let tones = config.tones();
    (0..config.n_drops)
        .into_par_iter()
        .map(|i| {
            let params = sets.pick(config.seed, i);
            let drop = generate_drop(params, &DropConfig::for_params(params), config.seed, i)?;
            let lambda = params.wavelength_m();
            let arrays = LinkArrays::new(
                AntennaArray::half_wave_ura(config.ue_array.0, config.ue_array.1, lambda),
                AntennaArray::half_wave_ura(config.bs_array.0, config.bs_array.1, lambda),
            );
            let cir = assemble_cir(
                &drop.clusters,
                &arrays,
                &CirConfig::new(config.mode, lambda, drop.distance_3d),
            );
            cir_to_ctf(&cir, &tones, 0)
                .iter()
                .map(|h| {
                    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                        return Err(CapacityError::NonFinite);
                    }
                    Ok(gram_eigenvalues(h))
                })
                .collect()
        })
        .collect()
}

/// Mean capacity curve over drops and tones for the given sets.
pub fn capacity_curve(
    sets: &DropSets,
    config: &CapacityConfig,
) -> Result<Vec<f64>, CapacityError> {
    let eig = drop_eigenvalues(sets, config)?;
    let mt = config.bs_array.0 * config.bs_array.1;
    let mr = config.ue_array.0 * config.ue_array.1;
    let target = (mt * mr) as f64;
    let mean_norm = |drops: &[Vec<Vec<f64>>]| {
        let (sum, count) = drops
            .iter()
            .flatten()
            .fold((0.0, 0usize), |(s, c), l| (s + l.iter().sum::<f64>(), c + 1));
        sum / count as f64
    };
    let scales: Vec<f64> = match config.normalization {
        Normalization::Experiment => {
            let m = mean_norm(&eig);
            if !(m > 0.0) {
                return Err(CapacityError::ZeroChannel);
            }
            vec![target / m; eig.len()]
        }
        Normalization::PerDrop => eig
            .iter()
            .map(|d| {
                let m = mean_norm(std::slice::from_ref(d));
                if m > 0.0 {
                    Ok(target / m)
                } else {
                    Err(CapacityError::ZeroChannel)
                }
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(config
        .snr_db
        .iter()
        .map(|&snr| {
            let rho = 10f64.powf(snr / 10.0);
            let per_drop: Vec<f64> = eig
                .iter()
                .zip(&scales)
                .map(|(tones, &c)| {
                    let caps: Vec<f64> = tones
                        .iter()
                        .map(|l| {
                            let scaled: Vec<f64> = l.iter().map(|x| x * c).collect();
                            capacity_from_eigenvalues(&scaled, rho, mt)
                        })
                        .collect();
                    caps.iter().sum::<f64>() / caps.len() as f64
                })
                .collect();
            per_drop.iter().sum::<f64>() / per_drop.len() as f64
        })
        .collect())
}

/// Capacity curve for one scenario and parameter source.
pub fn run_capacity_experiment(
    library: &ParamLibrary,
    scenario: Scenario,
    source: Source,
    config: &CapacityConfig,
) -> Result<CapacityCurve, CapacityError> {
    let sets = match config.condition {
        ConditionMix::Pure(c) => DropSets::single(library.get(scenario, c, source)?),
        ConditionMix::Mixed { los_fraction } => DropSets {
            los: Some(library.get(scenario, Condition::Los, source)?),
            nlos: Some(library.get(scenario, Condition::Nlos, source)?),
            los_fraction,
        },
    };
    Ok(CapacityCurve {
        capacity: capacity_curve(&sets, config)?,
        snr_db: config.snr_db.clone(),
        n_drops: config.n_drops,
        scenario,
        source,
        condition: config.condition.to_string(),
    })
}
