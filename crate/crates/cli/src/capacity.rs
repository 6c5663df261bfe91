//! `capacity`: capacity curves to CSV and SVG.

use anyhow::Result;
use serde::Serialize;
use thz_gbsm::capacity::{run_capacity_experiment, CapacityConfig, ConditionMix};
use thz_gbsm::params::{Scenario, Source};

use crate::args::CapacityArgs;
use crate::output::{config_error, load_params, OutputDir, RunManifest};
use crate::plot::{Chart, Series};

/// One point of one curve.
#[derive(Serialize)]
struct CapacityRow {
    snr_db: f64,
    mean_capacity_bpshz: f64,
    source: Source,
    scenario: Scenario,
}

pub fn run(args: &CapacityArgs) -> Result<()> {
    if args.drops == 0 {
        return Err(config_error("--drops must be at least 1"));
    }
    let condition = match args.los_fraction {
        Some(f) if (0.0..=1.0).contains(&f) => ConditionMix::Mixed { los_fraction: f },
        Some(f) => return Err(config_error(format!("--los-fraction: {f} is not in [0, 1]"))),
        None => ConditionMix::Pure(args.condition.into()),
    };
    let loaded = load_params(args.common.params.as_deref())?;
    let scenarios: Vec<Scenario> = match args.scenario {
        Some(s) => vec![s.into()],
        None => vec![Scenario::Office, Scenario::Umi],
    };
    let sources: Vec<Source> = match args.source {
        Some(s) => vec![s.into()],
        None => vec![Source::Measured, Source::ThreeGpp],
    };
    let config = CapacityConfig {
        snr_db: args.snr.0.clone(),
        n_drops: args.drops,
        seed: args.seed,
        mode: args.mode.into(),
        normalization: args.normalization.into(),
        condition,
        ..CapacityConfig::default()
    };

    let mut curves = Vec::new();
    for &scenario in &scenarios {
        for &source in &sources {
            let curve = run_capacity_experiment(&loaded.library, scenario, source, &config).map_err(|e| match e {
                thz_gbsm::capacity::CapacityError::Params(p) => config_error(format!("--params: {p}")),
                other => other.into(),
            })?;
            curves.push(curve);
        }
    }

    let rows: Vec<CapacityRow> = curves
        .iter()
        .flat_map(|c| {
            c.snr_db.iter().zip(&c.capacity).map(|(&snr_db, &cap)| CapacityRow {
                snr_db,
                mean_capacity_bpshz: cap,
                source: c.source,
                scenario: c.scenario,
            })
        })
        .collect();
    let chart = Chart {
        x_label: "SNR (dB)".into(),
        y_label: "Capacity (bps/Hz)".into(),
        log_y: args.log_y,
        series: curves
            .iter()
            .map(|c| Series {
                label: format!("{} {}", c.scenario, c.source),
                points: config.snr_db.iter().copied().zip(c.capacity.iter().copied()).collect(),
            })
            .collect(),
    };

    let mut out = OutputDir::create(
        &args.common.out,
        RunManifest::new("capacity", Some(loaded.sha256), Some(args.seed)),
    )?;
    out.write_csv("capacity.csv", &rows)?;
    out.write_text("capacity.svg", &chart.to_svg())?;
    out.finish()?;
    println!("snr_db,mean_capacity_bpshz,source,scenario");
    for r in &rows {
        println!("{},{:.4},{},{}", r.snr_db, r.mean_capacity_bpshz, r.source, r.scenario);
    }
    Ok(())
}
