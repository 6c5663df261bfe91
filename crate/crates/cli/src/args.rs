//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thz_gbsm::capacity::Normalization;
use thz_gbsm::coeff::CirMode;
use thz_gbsm::params::{Condition, Scenario, Source};

#[derive(Debug, Parser)]
#[command(name = "thz-gbsm", version, about = "Terahertz GBSM channel simulator and analysis toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate drops and write LSP, cluster, CIR and sounder CSVs.
    Simulate(SimulateArgs),
    /// Extract DS, ASA, K and cluster statistics from a directional MPC CSV.
    Analyze(AnalyzeArgs),
    /// Simulate, re-extract and compare against the drawn large-scale parameters.
    Roundtrip(RoundtripArgs),
    /// MIMO capacity curves for measured and 3GPP parameter sets.
    Capacity(CapacityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Office,
    Umi,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Office => Scenario::Office,
            ScenarioArg::Umi => Scenario::Umi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    Los,
    Nlos,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Los => Condition::Los,
            ConditionArg::Nlos => Condition::Nlos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Measured,
    #[value(name = "3gpp")]
    ThreeGpp,
}

impl From<SourceArg> for Source {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Measured => Source::Measured,
            SourceArg::ThreeGpp => Source::ThreeGpp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Standard,
    Thz,
}

impl From<ModeArg> for CirMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Standard => CirMode::Standard,
            ModeArg::Thz => CirMode::ThzSimplified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Experiment,
    PerDrop,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Experiment => Normalization::Experiment,
            NormalizationArg::PerDrop => Normalization::PerDrop,
        }
    }
}

/// Parameter file and output directory shared by every command.
#[derive(Debug, Args)]
pub struct Common {
    /// Parameter TOML file; defaults to $THZ_GBSM_PARAMS_DIR or the bundled sets.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SetSelection {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    #[arg(long, value_enum)]
    pub condition: ConditionArg,
    #[arg(long, value_enum, default_value = "measured")]
    pub source: SourceArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub set: SetSelection,
    #[arg(long, default_value_t = 10)]
    pub drops: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "thz")]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// PDP CSV with columns delay_ns and power_linear; optional drop, distance_m
    /// and the direction set phi_tx_deg, phi_rx_deg, theta_rx_deg.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Delay bin of the reconstructed PDPs, nanoseconds.
    #[arg(long, default_value_t = 0.05)]
    pub delay_step_ns: f64,
    /// Azimuth bin of the DAP, degrees.
    #[arg(long, default_value_t = 1.0)]
    pub angle_step_deg: f64,
    /// Also write per-drop path loss and the close-in fit; needs distance_m.
    #[arg(long)]
    pub pathloss: bool,
    /// Carrier frequency of the close-in fit, GHz.
    #[arg(long, default_value_t = 100.0)]
    pub frequency_ghz: f64,
    /// Link condition recorded with the path-loss samples.
    #[arg(long, value_enum, default_value = "nlos")]
    pub condition: ConditionArg,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub set: SetSelection,
    #[arg(long, default_value_t = 500)]
    pub drops: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replace both tolerances (log10 units and dB).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Force the K-factor of every LoS drop, dB.
    #[arg(long)]
    pub forced_k_db: Option<f64>,
    /// Accepted for symmetry with `simulate`; the sounder works on ray-level
    /// components and does not depend on the CIR mode.
    #[arg(long, value_enum, default_value = "thz")]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scenario; both when omitted.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioArg>,
    /// Parameter source; both when omitted.
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
    #[arg(long, value_enum, default_value = "nlos")]
    pub condition: ConditionArg,
    /// Draw LoS drops with this probability instead of a pure condition.
    #[arg(long, conflicts_with = "condition")]
    pub los_fraction: Option<f64>,
    /// SNR points in dB: `30`, `0,10,20` or `start:stop:step`.
    #[arg(long, default_value = "0:40:5", value_parser = parse_snr)]
    pub snr: SnrGrid,
    #[arg(long, default_value_t = 100)]
    pub drops: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "thz")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "experiment")]
    pub normalization: NormalizationArg,
    /// Logarithmic capacity axis in the plot.
    #[arg(long)]
    pub log_y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrGrid(pub Vec<f64>);

pub fn parse_snr(text: &str) -> Result<SnrGrid, String> {
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("'{s}' is not a number"))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if !(step > 0.0) || stop < start {
                return Err("range needs start <= stop and a positive step".into());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        [list] => list.split(',').map(number).collect::<Result<Vec<_>, _>>()?,
        _ => return Err("expected a value, a comma list or start:stop:step".into()),
    };
    if grid.is_empty() {
        return Err("empty SNR grid".into());
    }
    Ok(SnrGrid(grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_forms() {
        assert_eq!(parse_snr("30").unwrap().0, vec![30.0]);
        assert_eq!(parse_snr("0,10").unwrap().0, vec![0.0, 10.0]);
        assert_eq!(parse_snr("0:10:5").unwrap().0, vec![0.0, 5.0, 10.0]);
        assert!(parse_snr("0:10:0").is_err());
        assert!(parse_snr("x").is_err());
    }
}
