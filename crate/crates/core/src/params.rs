//! Scenario parameter sets.
//!
//! A [`ScenarioParamSet`] is one scenario/condition column of the parameter table
//! plus the generation constants that were not measured (carried in the
//! `supplemental` block). Sets are loaded from TOML documents with a fixed schema;
//! two documents ship with the crate, one holding the measured THz statistics and
//! one holding the 3GPP defaults for the same scenarios.
//!
//! Cross-correlation matrices are always ordered `(DS, ASA, SF, K)`; NLoS sets drop
//! the K row and column.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable that points at a directory holding `measured.toml` and
/// `3gpp.toml`, replacing the bundled documents.
pub const PARAMS_DIR_ENV: &str = "THZ_GBSM_PARAMS_DIR";

const BUNDLED_MEASURED: &str = include_str!("../data/measured.toml");
const BUNDLED_3GPP: &str = include_str!("../data/3gpp.toml");

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("failed to read parameter file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parameter document does not parse: {0}")]
    Parse(String),
    #[error("set '{set}': missing field `{field}`")]
    MissingField { set: String, field: &'static str },
    #[error("set '{set}': field `{field}` must be absent for {condition}")]
    UnexpectedField {
        set: String,
        field: &'static str,
        condition: Condition,
    },
    #[error("set '{set}': field `{field}` out of range ({value}): {reason}")]
    OutOfRange {
        set: String,
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("set '{set}': correlation out of range at xcorr[{row}][{col}] = {value}")]
    CorrelationOutOfRange {
        set: String,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("set '{set}': asymmetric matrix, xcorr[{row}][{col}] != xcorr[{col}][{row}]")]
    Asymmetric { set: String, row: usize, col: usize },
    #[error("set '{set}': xcorr must be {expected}x{expected}, found {found_rows} rows")]
    MatrixShape {
        set: String,
        expected: usize,
        found_rows: usize,
    },
    #[error("set '{set}': xcorr diagonal entry {index} is {value}, expected 1")]
    Diagonal { set: String, index: usize, value: f64 },
    #[error("duplicate set name '{0}'")]
    DuplicateName(String),
    #[error("no parameter set for scenario={scenario}, condition={condition}, source={origin}")]
    NotFound {
        scenario: Scenario,
        condition: Condition,
        origin: Source,
    },
    #[error("no parameter set named '{0}'")]
    UnknownName(String),
    #[error("could not serialize parameter sets: {0}")]
    Serialize(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Office,
    Umi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "measured")]
    Measured,
    #[serde(rename = "3gpp")]
    ThreeGpp,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Office => "office",
            Scenario::Umi => "umi",
        })
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Los => "los",
            Condition::Nlos => "nlos",
        })
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Measured => "measured",
            Source::ThreeGpp => "3gpp",
        })
    }
}

/// Index of each large-scale parameter in the cross-correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LspKind {
    Ds = 0,
    Asa = 1,
    Sf = 2,
    K = 3,
}

impl LspKind {
    pub const ALL: [LspKind; 4] = [LspKind::Ds, LspKind::Asa, LspKind::Sf, LspKind::K];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            LspKind::Ds => "DS",
            LspKind::Asa => "ASA",
            LspKind::Sf => "SF",
            LspKind::K => "K",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalCount {
    /// Mean of log10(count).
    pub mu: f64,
    /// Standard deviation of log10(count).
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationDistances {
    pub asa: f64,
    pub ds: f64,
    pub sf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

impl CorrelationDistances {
    /// Correlation distance for a parameter, `None` for K on NLoS sets.
    pub fn get(&self, kind: LspKind) -> Option<f64> {
        match kind {
            LspKind::Ds => Some(self.ds),
            LspKind::Asa => Some(self.asa),
            LspKind::Sf => Some(self.sf),
            LspKind::K => self.k,
        }
    }
}

/// Generation constants not covered by the measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Supplemental {
    /// Delay-proportionality factor.
    pub r_tau: f64,
    /// Per-cluster shadowing standard deviation in dB.
    pub zeta_db: f64,
    pub xpr_mu_db: f64,
    pub xpr_sigma_db: f64,
    /// Azimuth spread of departure, log10(deg).
    pub asd_mu: f64,
    pub asd_sigma: f64,
    /// Zenith spread of arrival, log10(deg).
    pub zsa_mu: f64,
    pub zsa_sigma: f64,
    /// Zenith spread of departure, log10(deg).
    pub zsd_mu: f64,
    pub zsd_sigma: f64,
    /// In-cluster zenith spreads in degrees.
    pub c_zsa_deg: f64,
    pub c_zsd_deg: f64,
    pub asa_cap_deg: f64,
    pub zenith_cap_deg: f64,
}

/// One scenario/condition parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParamSet {
    pub name: String,
    pub scenario: Scenario,
    pub condition: Condition,
    pub source: Source,
    pub carrier_frequency_ghz: f64,
    /// Close-in path-loss exponent.
    pub ple: f64,
    pub sigma_sf_db: f64,
    pub ds_mu: f64,
    pub ds_sigma: f64,
    pub asa_mu: f64,
    pub asa_sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_mu_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sigma_db: Option<f64>,
    pub n_clusters: usize,
    pub n_rays: usize,
    pub c_ds_ns: f64,
    pub c_asa_deg: f64,
    pub c_k_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_count_lognormal: Option<LogNormalCount>,
    pub xcorr: Vec<Vec<f64>>,
    pub corr_dist_m: CorrelationDistances,
    pub supplemental: Supplemental,
}

impl ScenarioParamSet {
    pub fn is_los(&self) -> bool {
        self.condition == Condition::Los
    }

    /// Number of correlated large-scale parameters (4 for LoS, 3 for NLoS).
    pub fn lsp_count(&self) -> usize {
        if self.is_los() {
            4
        } else {
            3
        }
    }

    /// The parameters present in this set, in matrix order.
    pub fn lsp_kinds(&self) -> &'static [LspKind] {
        if self.is_los() {
            &LspKind::ALL
        } else {
            &LspKind::ALL[..3]
        }
    }

    pub fn xcorr_matrix(&self) -> DMatrix<f64> {
        let n = self.xcorr.len();
        DMatrix::from_fn(n, n, |r, c| self.xcorr[r][c])
    }

    pub fn wavelength_m(&self) -> f64 {
        crate::SPEED_OF_LIGHT / (self.carrier_frequency_ghz * 1e9)
    }

    pub fn c_ds_s(&self) -> f64 {
        self.c_ds_ns * 1e-9
    }

    /// K-factor mean and deviation in dB; only LoS sets carry them.
    pub fn k_params(&self) -> Option<(f64, f64)> {
        match (self.k_mu_db, self.k_sigma_db) {
            (Some(mu), Some(sigma)) => Some((mu, sigma)),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let set = || self.name.clone();
        let out_of_range = |field: &'static str, value: f64, reason: &'static str| {
            Err(ParamError::OutOfRange {
                set: set(),
                field,
                value,
                reason,
            })
        };

        let finite_fields: [(&'static str, f64); 11] = [
            ("carrier_frequency_ghz", self.carrier_frequency_ghz),
            ("ple", self.ple),
            ("sigma_sf_db", self.sigma_sf_db),
            ("ds_mu", self.ds_mu),
            ("ds_sigma", self.ds_sigma),
            ("asa_mu", self.asa_mu),
            ("asa_sigma", self.asa_sigma),
            ("c_ds_ns", self.c_ds_ns),
            ("c_asa_deg", self.c_asa_deg),
            ("c_k_db", self.c_k_db),
            ("supplemental.r_tau", self.supplemental.r_tau),
        ];
        for (field, value) in finite_fields {
            if !value.is_finite() {
                return out_of_range(field, value, "must be finite");
            }
        }
        if self.carrier_frequency_ghz <= 0.0 {
            return out_of_range("carrier_frequency_ghz", self.carrier_frequency_ghz, "must be > 0");
        }
        for (field, value) in [
            ("ds_sigma", self.ds_sigma),
            ("asa_sigma", self.asa_sigma),
            ("sigma_sf_db", self.sigma_sf_db),
            ("c_ds_ns", self.c_ds_ns),
            ("c_asa_deg", self.c_asa_deg),
            ("supplemental.zeta_db", self.supplemental.zeta_db),
            ("supplemental.xpr_sigma_db", self.supplemental.xpr_sigma_db),
            ("supplemental.asd_sigma", self.supplemental.asd_sigma),
            ("supplemental.zsa_sigma", self.supplemental.zsa_sigma),
            ("supplemental.zsd_sigma", self.supplemental.zsd_sigma),
            ("supplemental.c_zsa_deg", self.supplemental.c_zsa_deg),
            ("supplemental.c_zsd_deg", self.supplemental.c_zsd_deg),
        ] {
            if !(value >= 0.0) {
                return out_of_range(field, value, "must be >= 0");
            }
        }
        if self.n_clusters < 1 {
            return out_of_range("n_clusters", self.n_clusters as f64, "must be >= 1");
        }
        if self.n_rays < 1 {
            return out_of_range("n_rays", self.n_rays as f64, "must be >= 1");
        }
        if !(self.supplemental.r_tau >= 1.0) {
            return out_of_range("supplemental.r_tau", self.supplemental.r_tau, "must be >= 1");
        }
        for (field, value) in [
            ("supplemental.asa_cap_deg", self.supplemental.asa_cap_deg),
            ("supplemental.zenith_cap_deg", self.supplemental.zenith_cap_deg),
        ] {
            if !(value > 0.0 && value <= 360.0) {
                return out_of_range(field, value, "must lie in (0, 360]");
            }
        }
        for kind in [LspKind::Asa, LspKind::Ds, LspKind::Sf] {
            let d = self.corr_dist_m.get(kind).unwrap_or(f64::NAN);
            if !(d > 0.0 && d.is_finite()) {
                return out_of_range(corr_dist_field(kind), d, "must be > 0");
            }
        }
        if let Some(lognormal) = self.cluster_count_lognormal {
            if !(lognormal.sigma >= 0.0 && lognormal.mu.is_finite()) {
                return out_of_range(
                    "cluster_count_lognormal.sigma",
                    lognormal.sigma,
                    "must be >= 0 with finite mu",
                );
            }
        }

        match self.condition {
            Condition::Los => {
                let mu = self.k_mu_db.ok_or(ParamError::MissingField {
                    set: set(),
                    field: "k_mu_db",
                })?;
                let sigma = self.k_sigma_db.ok_or(ParamError::MissingField {
                    set: set(),
                    field: "k_sigma_db",
                })?;
                if !mu.is_finite() {
                    return out_of_range("k_mu_db", mu, "must be finite");
                }
                if !(sigma >= 0.0) {
                    return out_of_range("k_sigma_db", sigma, "must be >= 0");
                }
                let d = self.corr_dist_m.k.ok_or(ParamError::MissingField {
                    set: set(),
                    field: "corr_dist_m.k",
                })?;
                if !(d > 0.0 && d.is_finite()) {
                    return out_of_range("corr_dist_m.k", d, "must be > 0");
                }
            }
            Condition::Nlos => {
                let unexpected = |field| ParamError::UnexpectedField {
                    set: set(),
                    field,
                    condition: Condition::Nlos,
                };
                if self.k_mu_db.is_some() {
                    return Err(unexpected("k_mu_db"));
                }
                if self.k_sigma_db.is_some() {
                    return Err(unexpected("k_sigma_db"));
                }
                if self.corr_dist_m.k.is_some() {
                    return Err(unexpected("corr_dist_m.k"));
                }
            }
        }

        self.validate_xcorr()
    }

    fn validate_xcorr(&self) -> Result<(), ParamError> {
        let n = self.lsp_count();
        if self.xcorr.len() != n || self.xcorr.iter().any(|row| row.len() != n) {
            return Err(ParamError::MatrixShape {
                set: self.name.clone(),
                expected: n,
                found_rows: self.xcorr.len(),
            });
        }
        for r in 0..n {
            for c in 0..n {
                let v = self.xcorr[r][c];
                if !(-1.0..=1.0).contains(&v) {
                    return Err(ParamError::CorrelationOutOfRange {
                        set: self.name.clone(),
                        row: r,
                        col: c,
                        value: v,
                    });
                }
            }
        }
        for r in 0..n {
            if self.xcorr[r][r] != 1.0 {
                return Err(ParamError::Diagonal {
                    set: self.name.clone(),
                    index: r,
                    value: self.xcorr[r][r],
                });
            }
            for c in (r + 1)..n {
                if self.xcorr[r][c] != self.xcorr[c][r] {
                    return Err(ParamError::Asymmetric {
                        set: self.name.clone(),
                        row: r,
                        col: c,
                    });
                }
            }
        }
        Ok(())
    }
}

fn corr_dist_field(kind: LspKind) -> &'static str {
    match kind {
        LspKind::Ds => "corr_dist_m.ds",
        LspKind::Asa => "corr_dist_m.asa",
        LspKind::Sf => "corr_dist_m.sf",
        LspKind::K => "corr_dist_m.k",
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamDocument {
    #[serde(default)]
    set: Vec<ScenarioParamSet>,
}

/// Parse and validate a TOML parameter document.
pub fn load_params(source: &str) -> Result<Vec<ScenarioParamSet>, ParamError> {
    let doc: ParamDocument = toml::from_str(source).map_err(|e| ParamError::Parse(e.to_string()))?;
    let mut names = BTreeSet::new();
    for set in &doc.set {
        set.validate()?;
        if !names.insert(set.name.clone()) {
            return Err(ParamError::DuplicateName(set.name.clone()));
        }
    }
    Ok(doc.set)
}

pub fn load_params_file(path: &Path) -> Result<Vec<ScenarioParamSet>, ParamError> {
    let text = std::fs::read_to_string(path).map_err(|source| ParamError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_params(&text)
}

/// Serialize sets back into the document schema accepted by [`load_params`].
pub fn to_toml(sets: &[ScenarioParamSet]) -> Result<String, ParamError> {
    let doc = ParamDocument { set: sets.to_vec() };
    toml::to_string(&doc).map_err(|e| ParamError::Serialize(e.to_string()))
}

/// A validated collection of parameter sets, looked up by name or by
/// (scenario, condition, source).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLibrary {
    sets: Vec<ScenarioParamSet>,
}

impl ParamLibrary {
    pub fn new(sets: Vec<ScenarioParamSet>) -> Result<Self, ParamError> {
        let mut names = BTreeSet::new();
        for set in &sets {
            set.validate()?;
            if !names.insert(set.name.clone()) {
                return Err(ParamError::DuplicateName(set.name.clone()));
            }
        }
        Ok(Self { sets })
    }

    /// The measured and 3GPP documents compiled into the crate.
    pub fn bundled() -> Self {
        let mut sets = load_params(BUNDLED_MEASURED).expect("bundled measured.toml is valid");
        sets.extend(load_params(BUNDLED_3GPP).expect("bundled 3gpp.toml is valid"));
        Self::new(sets).expect("bundled set names are unique")
    }

    /// Bundled data, unless [`PARAMS_DIR_ENV`] names a directory to load from.
    pub fn from_env_or_bundled() -> Result<Self, ParamError> {
        match std::env::var_os(PARAMS_DIR_ENV) {
            Some(dir) => Self::from_dir(Path::new(&dir)),
            None => Ok(Self::bundled()),
        }
    }

    /// Load `measured.toml` and `3gpp.toml` from a directory.
    pub fn from_dir(dir: &Path) -> Result<Self, ParamError> {
        let mut sets = load_params_file(&dir.join("measured.toml"))?;
        sets.extend(load_params_file(&dir.join("3gpp.toml"))?);
        Self::new(sets)
    }

    pub fn from_file(path: &Path) -> Result<Self, ParamError> {
        Self::new(load_params_file(path)?)
    }

    pub fn sets(&self) -> &[ScenarioParamSet] {
        &self.sets
    }

    pub fn by_name(&self, name: &str) -> Result<&ScenarioParamSet, ParamError> {
        self.sets
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| ParamError::UnknownName(name.to_string()))
    }

    pub fn get(
        &self,
        scenario: Scenario,
        condition: Condition,
        source: Source,
    ) -> Result<&ScenarioParamSet, ParamError> {
        self.sets
            .iter()
            .find(|s| s.scenario == scenario && s.condition == condition && s.source == source)
            .ok_or(ParamError::NotFound {
                scenario,
                condition,
                origin: source,
            })
    }
}

/// Raw text of the bundled documents, `(measured, 3gpp)`.
pub fn bundled_documents() -> (&'static str, &'static str) {
    (BUNDLED_MEASURED, BUNDLED_3GPP)
}
