//! Correlated large-scale parameters.
//!
//! Each parameter gets its own standard-normal [`GaussianField`] with the
//! parameter's correlation distance. At every location the independent field
//! values are mixed by the square root of the PSD-projected cross-correlation
//! matrix (order `DS, ASA, SF, K`) and mapped to physical units:
//!
//! * `DS  = 10^(ds_mu + ds_sigma * x_DS)` seconds
//! * `ASA = min(10^(asa_mu + asa_sigma * x_ASA), asa_cap)` degrees
//! * `SF  = sigma_sf * x_SF` dB
//! * `K   = k_mu + k_sigma * x_K` dB (LoS only)

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{generate_field, Extent, FieldError, GaussianField};
use crate::params::{LspKind, ScenarioParamSet};
use crate::psd::{nearest_psd, sqrt_psd, PsdError};
use crate::rng::derive_seed;

#[derive(Debug, Error, PartialEq)]
pub enum LspError {
    #[error("no locations given")]
    NoLocations,
    #[error("location ({x}, {y}) is outside the generated field")]
    OutsideField { x: f64, y: f64 },
    #[error("LoS set '{0}' lacks K-factor parameters")]
    MissingK(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Psd(#[from] PsdError),
}

/// Large-scale parameters at one location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspRealization {
    pub location: [f64; 2],
    /// RMS delay spread in seconds.
    pub ds: f64,
    /// Azimuth spread of arrival in degrees.
    pub asa: f64,
    /// Shadow fading in dB.
    pub sf: f64,
    /// Ricean K-factor in dB, LoS only.
    pub k: Option<f64>,
}

/// Mixing matrix `L` with `L L^T = nearest_psd(xcorr)`.
pub fn mixing_matrix(params: &ScenarioParamSet) -> Result<DMatrix<f64>, PsdError> {
    let projected = nearest_psd(&params.xcorr_matrix())?;
    sqrt_psd(&projected)
}

/// The cross-correlation matrix generation actually targets.
pub fn projected_xcorr(params: &ScenarioParamSet) -> Result<DMatrix<f64>, PsdError> {
    nearest_psd(&params.xcorr_matrix())
}

/// Default field grid step: a quarter of the smallest correlation distance.
pub fn default_grid_step(params: &ScenarioParamSet) -> f64 {
    params
        .lsp_kinds()
        .iter()
        .filter_map(|&k| params.corr_dist_m.get(k))
        .fold(f64::INFINITY, f64::min)
        / 4.0
}

/// Map a mixed standard-normal vector (matrix order) to physical parameters.
pub fn transform(params: &ScenarioParamSet, location: [f64; 2], x: &[f64]) -> LspRealization {
    let ds = 10f64.powf(params.ds_mu + params.ds_sigma * x[LspKind::Ds.index()]);
    let asa = 10f64
        .powf(params.asa_mu + params.asa_sigma * x[LspKind::Asa.index()])
        .min(params.supplemental.asa_cap_deg);
    let sf = params.sigma_sf_db * x[LspKind::Sf.index()];
    let k = params
        .k_params()
        .filter(|_| params.is_los())
        .map(|(mu, sigma)| mu + sigma * x[LspKind::K.index()]);
    LspRealization {
        location,
        ds,
        asa,
        sf,
        k,
    }
}

/// One field per parameter over a shared extent.
#[derive(Debug, Clone)]
pub struct LspFields {
    fields: Vec<GaussianField>,
    mixing: DMatrix<f64>,
}

impl LspFields {
    pub fn generate(
        params: &ScenarioParamSet,
        extent: Extent,
        grid_step: f64,
        rng_seed: u64,
    ) -> Result<Self, LspError> {
        if params.is_los() && params.k_params().is_none() {
            return Err(LspError::MissingK(params.name.clone()));
        }
        let mut fields = Vec::with_capacity(params.lsp_count());
        for &kind in params.lsp_kinds() {
            let corr = params
                .corr_dist_m
                .get(kind)
                .ok_or_else(|| LspError::MissingK(params.name.clone()))?;
            let step = grid_step.min(corr / 2.0);
            fields.push(generate_field(
                corr,
                extent,
                step,
                derive_seed(rng_seed, kind.index() as u64),
            )?);
        }
        Ok(Self {
            fields,
            mixing: mixing_matrix(params)?,
        })
    }

    /// Mixed standard-normal vector at a point, in matrix order.
    pub fn normals_at(&self, x: f64, y: f64) -> Result<Vec<f64>, LspError> {
        let mut z = DVector::zeros(self.fields.len());
        for (i, f) in self.fields.iter().enumerate() {
            z[i] = f
                .sample(x, y)
                .map_err(|_| LspError::OutsideField { x, y })?;
        }
        Ok((&self.mixing * z).iter().copied().collect())
    }

    pub fn fields(&self) -> &[GaussianField] {
        &self.fields
    }
}

/// Generate correlated large-scale parameters at the given locations.
///
/// Fields cover the bounding box of the locations (padded by one grid step), so
/// nearby locations share spatially consistent parameters while a single location
/// reduces to an independent draw.
pub fn generate_lsp(
    params: &ScenarioParamSet,
    locations: &[[f64; 2]],
    rng_seed: u64,
) -> Result<Vec<LspRealization>, LspError> {
    generate_lsp_with_step(params, locations, default_grid_step(params), rng_seed)
}

pub fn generate_lsp_with_step(
    params: &ScenarioParamSet,
    locations: &[[f64; 2]],
    grid_step: f64,
    rng_seed: u64,
) -> Result<Vec<LspRealization>, LspError> {
    if locations.is_empty() {
        return Err(LspError::NoLocations);
    }
    let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
    let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &[x, y] in locations {
        xmin = xmin.min(x);
        ymin = ymin.min(y);
        xmax = xmax.max(x);
        ymax = ymax.max(y);
    }
    let extent = Extent::new(
        xmin - grid_step,
        ymin - grid_step,
        xmax - xmin + 2.0 * grid_step,
        ymax - ymin + 2.0 * grid_step,
    );
    let fields = LspFields::generate(params, extent, grid_step, rng_seed)?;
    sample_lsp(params, &fields, locations)
}

/// Read parameters at locations from pre-generated fields.
pub fn sample_lsp(
    params: &ScenarioParamSet,
    fields: &LspFields,
    locations: &[[f64; 2]],
) -> Result<Vec<LspRealization>, LspError> {
    locations
        .iter()
        .map(|&loc| {
            let x = fields.normals_at(loc[0], loc[1])?;
            Ok(transform(params, loc, &x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamLibrary;

    #[test]
    fn zero_sigmas_give_degenerate_values() {
        let lib = ParamLibrary::bundled();
        let mut p = lib.by_name("office_los_measured").unwrap().clone();
        p.ds_sigma = 0.0;
        p.asa_sigma = 0.0;
        p.sigma_sf_db = 0.0;
        p.k_sigma_db = Some(0.0);
        let locs: Vec<[f64; 2]> = (0..20).map(|i| [i as f64, 0.5 * i as f64]).collect();
        for l in generate_lsp(&p, &locs, 9).unwrap() {
            assert_eq!(l.ds, 10f64.powf(-8.82));
            assert_eq!(l.asa, 10f64.powf(1.37));
            assert_eq!(l.sf, 0.0);
            assert_eq!(l.k, Some(8.80));
        }
    }

    #[test]
    fn nlos_has_no_k() {
        let lib = ParamLibrary::bundled();
        let p = lib.by_name("umi_nlos_measured").unwrap();
        let l = generate_lsp(p, &[[3.0, 4.0]], 1).unwrap();
        assert!(l[0].k.is_none());
        assert!(l[0].ds > 0.0 && l[0].asa > 0.0 && l[0].asa <= 104.0);
    }

    #[test]
    fn missing_k_is_error() {
        let lib = ParamLibrary::bundled();
        let mut p = lib.by_name("umi_los_measured").unwrap().clone();
        p.k_mu_db = None;
        assert_eq!(
            generate_lsp(&p, &[[0.0, 0.0]], 1).unwrap_err(),
            LspError::MissingK("umi_los_measured".into())
        );
    }

    #[test]
    fn asa_is_capped() {
        let lib = ParamLibrary::bundled();
        let mut p = lib.by_name("umi_nlos_3gpp").unwrap().clone();
        p.asa_mu = 3.0;
        let l = generate_lsp(&p, &[[0.0, 0.0]], 2).unwrap();
        assert_eq!(l[0].asa, 104.0);
    }

    #[test]
    fn empty_locations_rejected() {
        let lib = ParamLibrary::bundled();
        let p = lib.by_name("umi_nlos_measured").unwrap();
        assert_eq!(generate_lsp(p, &[], 1).unwrap_err(), LspError::NoLocations);
    }

    #[test]
    fn outside_location_rejected() {
        let lib = ParamLibrary::bundled();
        let p = lib.by_name("umi_nlos_measured").unwrap();
        let fields = LspFields::generate(p, Extent::sized(10.0, 10.0), 1.0, 3).unwrap();
        assert!(matches!(
            sample_lsp(p, &fields, &[[20.0, 1.0]]),
            Err(LspError::OutsideField { .. })
        ));
    }
}
