//! Drops: user placement, large-scale draw, clusters, and a synthetic sounder.
//!
//! The base station sits at the origin. Users are placed uniformly over an annulus
//! around it. Each drop has its own seed derived from the master seed, so any drop
//! can be regenerated alone and parallel runs are reproducible.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::pdp::{
    asa, directional_pdps, k_factor, rms_ds, synth_omni, Dap, Direction, DirectionalSample, Pdp,
};
use crate::analysis::spread::KFactor;
use crate::analysis::AnalysisError;
use crate::cluster::{generate_clusters, wrap_azimuth, ClusterOptions, ClusterSet, LosDirection};
use crate::lsp::{generate_lsp, LspError, LspRealization};
use crate::params::{Scenario, ScenarioParamSet};
use crate::pathloss::{ci_pl, PathLossError};
use crate::rng::{derive_seed, stream_rng, Stream};

#[derive(Debug, Error, PartialEq)]
pub enum DropError {
    #[error(transparent)]
    Lsp(#[from] LspError),
    #[error(transparent)]
    PathLoss(#[from] PathLossError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("annulus radii must satisfy 0 <= inner < outer")]
    Annulus,
}

/// Placement geometry of a deployment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub bs_height_m: f64,
    pub ue_height_m: f64,
    pub min_radius_m: f64,
    pub max_radius_m: f64,
}

impl Layout {
    pub fn for_scenario(scenario: Scenario) -> Self {
        match scenario {
            Scenario::Office => Self {
                bs_height_m: 3.0,
                ue_height_m: 1.5,
                min_radius_m: 1.5,
                max_radius_m: 15.0,
            },
            Scenario::Umi => Self {
                bs_height_m: 10.0,
                ue_height_m: 1.5,
                min_radius_m: 10.0,
                max_radius_m: 100.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropConfig {
    pub layout: Layout,
    pub clusters: ClusterOptions,
    /// Replace the drawn K-factor of LoS drops by this value (dB).
    pub forced_k_db: Option<f64>,
}

impl DropConfig {
    pub fn for_params(params: &ScenarioParamSet) -> Self {
        Self {
            layout: Layout::for_scenario(params.scenario),
            clusters: ClusterOptions::default(),
            forced_k_db: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drop {
    pub index: usize,
    /// User position in the horizontal plane, meters.
    pub location: [f64; 2],
    pub distance_2d: f64,
    pub distance_3d: f64,
    pub lsp: LspRealization,
    pub clusters: ClusterSet,
}

impl Drop {
    /// Close-in path loss including the drop's shadow fading, dB.
    pub fn path_loss_db(&self, params: &ScenarioParamSet) -> Result<f64, PathLossError> {
        ci_pl(
            params.carrier_frequency_ghz,
            self.distance_3d.max(1.0),
            params.ple,
            self.lsp.sf,
        )
    }
}

/// Direct-path angles from a base station at `(0, 0, h_bs)` to a user at
/// `(x, y, h_ue)`.
pub fn los_direction(location: [f64; 2], layout: &Layout) -> LosDirection {
    let [x, y] = location;
    let d2 = x.hypot(y);
    let aod = y.atan2(x).to_degrees();
    let elevation = (layout.bs_height_m - layout.ue_height_m).atan2(d2).to_degrees();
    LosDirection {
        aod: wrap_azimuth(aod),
        aoa: wrap_azimuth(aod + 180.0),
        zod: 90.0 + elevation,
        zoa: 90.0 - elevation,
    }
}

/// Seed of drop `index` under `master`.
pub fn drop_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

/// Generate drop `index`. Placement, large-scale parameters and clusters each use
/// their own stream of the drop seed.
pub fn generate_drop(
    params: &ScenarioParamSet,
    config: &DropConfig,
    master_seed: u64,
    index: usize,
) -> Result<Drop, DropError> {
    let layout = &config.layout;
    if !(layout.min_radius_m >= 0.0 && layout.min_radius_m < layout.max_radius_m) {
        return Err(DropError::Annulus);
    }
    let seed = drop_seed(master_seed, index);
    let mut place = stream_rng(seed, Stream::Placement);
    let (r0, r1) = (layout.min_radius_m, layout.max_radius_m);
    let r = (r0 * r0 + place.random::<f64>() * (r1 * r1 - r0 * r0)).sqrt();
    let a = place.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let location = [r * a.cos(), r * a.sin()];
    let dh = layout.bs_height_m - layout.ue_height_m;

    let mut lsp = generate_lsp(params, &[location], derive_seed(seed, Stream::Lsp as u64))?[0];
    if params.is_los() {
        if let Some(k) = config.forced_k_db {
            lsp.k = Some(k);
        }
    }
    let los = los_direction(location, layout);
    let mut rng = stream_rng(seed, Stream::Clusters);
    let clusters = generate_clusters(params, &lsp, los, &config.clusters, &mut rng);
    Ok(Drop {
        index,
        location,
        distance_2d: r,
        distance_3d: r.hypot(dh),
        lsp,
        clusters,
    })
}

/// `n` drops, generated in parallel and returned in index order.
pub fn generate_drops(
    params: &ScenarioParamSet,
    config: &DropConfig,
    master_seed: u64,
    n: usize,
) -> Result<Vec<Drop>, DropError> {
    (0..n)
        .into_par_iter()
        .map(|i| generate_drop(params, config, master_seed, i))
        .collect()
}

/// Resolution of the synthetic sounder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SounderConfig {
    /// Delay bin, seconds.
    pub delay_step: f64,
    /// Angle bin for azimuths and zenith, degrees.
    pub angle_step_deg: f64,
}

impl Default for SounderConfig {
    fn default() -> Self {
        Self {
            delay_step: 0.05e-9,
            angle_step_deg: 1.0,
        }
    }
}

fn quantize(angle: f64, step: f64) -> i64 {
    (angle / step).round() as i64
}

fn quantize_azimuth(angle: f64, step: f64) -> i64 {
    let bins = (360.0 / step).round() as i64;
    quantize(angle.rem_euclid(360.0), step).rem_euclid(bins)
}

/// Directional PDPs of a drop as a rotating-horn sounder would record them: every
/// ray-level component lands in the PDP of its quantized (departure azimuth,
/// arrival azimuth, arrival zenith) direction, at its quantized delay, scaled by
/// the drop's path gain.
pub fn sound_drop(
    drop: &Drop,
    params: &ScenarioParamSet,
    sounder: &SounderConfig,
) -> Result<Vec<Pdp>, DropError> {
    let gain = 10f64.powf(-drop.path_loss_db(params)? / 10.0);
    let step = sounder.angle_step_deg;
    let set = &drop.clusters;
    // (departure azimuth, arrival azimuth, arrival zenith, delay, power)
    let mut components = Vec::new();
    let direct = set.direct_share();
    if set.k_linear.is_some() && direct > 0.0 {
        components.push((set.los.aod, set.los.aoa, set.los.zoa, 0.0, direct));
    }
    let scattered = set.scattered_share();
    for c in &set.clusters {
        for r in &c.rays {
            let p = scattered * c.power * r.power_fraction;
            if p > 0.0 {
                components.push((r.aod, r.aoa, r.zoa, c.delay + r.delay_offset, p));
            }
        }
    }
    let samples: Vec<DirectionalSample> = components
        .into_iter()
        .map(|(aod, aoa, zoa, delay, p)| DirectionalSample {
            direction: Direction {
                phi_tx: quantize_azimuth(aod, step) as f64 * step,
                phi_rx: quantize_azimuth(aoa, step) as f64 * step,
                theta_rx: quantize(zoa, step) as f64 * step,
            },
            delay,
            power: p * gain,
        })
        .collect();
    Ok(directional_pdps(&samples, sounder.delay_step)?)
}

/// Statistics extracted from one drop's sounder output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractedStats {
    pub ds: f64,
    pub asa: f64,
    pub k: Option<KFactor>,
    pub pl_omni_db: f64,
}

/// DS and K from the synthesized omnidirectional PDP, ASA from the DAP.
pub fn extract_stats(pdps: &[Pdp], with_k: bool, angle_step_deg: f64) -> Result<ExtractedStats, DropError> {
    let omni = synth_omni(pdps)?;
    let dap = Dap::from_directional(pdps, angle_step_deg);
    let total: f64 = pdps.iter().map(|p| p.total_power()).sum();
    if total <= 0.0 {
        return Err(AnalysisError::ZeroPower.into());
    }
    Ok(ExtractedStats {
        ds: rms_ds(&omni)?,
        asa: asa(&dap)?,
        k: if with_k { Some(k_factor(&omni)?) } else { None },
        pl_omni_db: -10.0 * total.log10(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamLibrary;

    #[test]
    fn los_direction_geometry() {
        let layout = Layout::for_scenario(Scenario::Umi);
        let d = los_direction([10.0, 0.0], &layout);
        assert_eq!(d.aod, 0.0);
        assert_eq!(d.aoa, -180.0);
        assert!(d.zod > 90.0 && d.zoa < 90.0);
        assert!((d.zod + d.zoa - 180.0).abs() < 1e-12);
    }

    #[test]
    fn drops_are_reproducible_and_in_annulus() {
        let lib = ParamLibrary::bundled();
        let p = lib.by_name("umi_los_measured").unwrap();
        let cfg = DropConfig::for_params(p);
        let a = generate_drops(p, &cfg, 5, 20).unwrap();
        let b = generate_drops(p, &cfg, 5, 20).unwrap();
        assert_eq!(a, b);
        for d in &a {
            assert!(d.distance_2d >= 10.0 && d.distance_2d <= 100.0);
            assert!((d.clusters.total_power() - 1.0).abs() < 1e-12);
        }
        assert_eq!(generate_drop(p, &cfg, 5, 7).unwrap(), a[7]);
    }

    #[test]
    fn sounder_conserves_power() {
        let lib = ParamLibrary::bundled();
        let p = lib.by_name("office_los_measured").unwrap();
        let d = generate_drop(p, &DropConfig::for_params(p), 9, 0).unwrap();
        let pdps = sound_drop(&d, p, &SounderConfig::default()).unwrap();
        let total: f64 = pdps.iter().map(|x| x.total_power()).sum();
        let expected = 10f64.powf(-d.path_loss_db(p).unwrap() / 10.0);
        assert!((total / expected - 1.0).abs() < 1e-12);
    }
}
