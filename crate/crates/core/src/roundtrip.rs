//! Generate drops, sound them, re-extract DS/ASA/K and compare with the draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::stats::median;
use crate::drop::{extract_stats, generate_drop, sound_drop, DropConfig, DropError, ExtractedStats, SounderConfig};
use crate::lsp::LspRealization;
use crate::params::ScenarioParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundTripConfig {
    pub n_drops: usize,
    pub seed: u64,
    /// Allowed gap between medians of log10(DS) and log10(ASA).
    pub tolerance_log10: f64,
    /// Allowed gap between K medians, dB.
    pub tolerance_k_db: f64,
    pub forced_k_db: Option<f64>,
    pub sounder: SounderConfig,
}

impl Default for RoundTripConfig {
    fn default() -> Self {
        Self {
            n_drops: 500,
            seed: 1,
            tolerance_log10: 0.15,
            tolerance_k_db: 3.0,
            forced_k_db: None,
            sounder: SounderConfig::default(),
        }
    }
}

impl RoundTripConfig {
    /// Both tolerances replaced by `t`.
    pub fn with_tolerance(mut self, t: f64) -> Self {
        self.tolerance_log10 = t;
        self.tolerance_k_db = t;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropRecord {
    pub drop: usize,
    pub drawn: LspRealization,
    pub extracted: ExtractedStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub statistic: String,
    pub drawn_median: f64,
    pub extracted_median: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(statistic: &str, drawn: f64, extracted: f64, tolerance: f64) -> Self {
        let delta = extracted - drawn;
        Self {
            statistic: statistic.to_string(),
            drawn_median: drawn,
            extracted_median: extracted,
            delta,
            tolerance,
            pass: delta.abs() < tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub set: String,
    pub n_drops: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Drops with their drawn and re-extracted statistics, in drop order.
pub fn roundtrip_records(
    params: &ScenarioParamSet,
    config: &RoundTripConfig,
) -> Result<Vec<DropRecord>, DropError> {
    let mut drop_config = DropConfig::for_params(params);
    drop_config.forced_k_db = config.forced_k_db;
    (0..config.n_drops)
        .into_par_iter()
        .map(|i| {
            let d = generate_drop(params, &drop_config, config.seed, i)?;
            let pdps = sound_drop(&d, params, &config.sounder)?;
            let extracted = extract_stats(&pdps, params.is_los(), config.sounder.angle_step_deg)?;
            Ok(DropRecord {
                drop: i,
                drawn: d.lsp,
                extracted,
            })
        })
        .collect()
}

/// Compare medians of drawn and extracted statistics.
pub fn compare(params: &ScenarioParamSet, records: &[DropRecord], config: &RoundTripConfig) -> RoundTripReport {
    let med = |f: &dyn Fn(&DropRecord) -> f64| median(&records.iter().map(f).collect::<Vec<_>>());
    let mut checks = vec![
        Check::new(
            "log10_ds",
            med(&|r| r.drawn.ds.log10()),
            med(&|r| r.extracted.ds.log10()),
            config.tolerance_log10,
        ),
        Check::new(
            "log10_asa",
            med(&|r| r.drawn.asa.log10()),
            med(&|r| r.extracted.asa.log10()),
            config.tolerance_log10,
        ),
    ];
    if params.is_los() {
        checks.push(Check::new(
            "k_db",
            med(&|r| r.drawn.k.unwrap_or(f64::NAN)),
            med(&|r| {
                r.extracted
                    .k
                    .and_then(|k| k.db())
                    .unwrap_or(f64::INFINITY)
            }),
            config.tolerance_k_db,
        ));
    }
    RoundTripReport {
        set: params.name.clone(),
        n_drops: records.len(),
        seed: config.seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
    }
}

pub fn run_roundtrip(
    params: &ScenarioParamSet,
    config: &RoundTripConfig,
) -> Result<(RoundTripReport, Vec<DropRecord>), DropError> {
    let records = roundtrip_records(params, config)?;
    Ok((compare(params, &records, config), records))
}
