//! `roundtrip`: simulate, re-extract and compare.

use anyhow::Result;
use serde::Serialize;
use thz_gbsm::roundtrip::{run_roundtrip, RoundTripConfig};

use crate::args::RoundtripArgs;
use crate::output::{config_error, load_params, OutputDir, RunManifest};
use crate::simulate::select_set;

#[derive(Serialize)]
struct RecordRow {
    drop: usize,
    drawn_ds_s: f64,
    drawn_asa_deg: f64,
    drawn_k_db: Option<f64>,
    ds_s: f64,
    asa_deg: f64,
    k_db: Option<f64>,
    pl_omni_db: f64,
}

/// Runs the comparison; `Ok(false)` when a statistic is out of tolerance.
pub fn run(args: &RoundtripArgs) -> Result<bool> {
    if args.drops == 0 {
        return Err(config_error("--drops must be at least 1"));
    }
    if let Some(t) = args.tolerance {
        if !(t >= 0.0) {
            return Err(config_error("--tolerance must be nonnegative"));
        }
    }
    let loaded = load_params(args.common.params.as_deref())?;
    let params = select_set(&loaded.library, &args.set)?;
    let mut config = RoundTripConfig {
        n_drops: args.drops,
        seed: args.seed,
        forced_k_db: args.forced_k_db,
        ..RoundTripConfig::default()
    };
    if let Some(t) = args.tolerance {
        config = config.with_tolerance(t);
    }
    let (report, records) = run_roundtrip(params, &config)?;

    let rows: Vec<RecordRow> = records
        .iter()
        .map(|r| RecordRow {
            drop: r.drop,
            drawn_ds_s: r.drawn.ds,
            drawn_asa_deg: r.drawn.asa,
            drawn_k_db: r.drawn.k,
            ds_s: r.extracted.ds,
            asa_deg: r.extracted.asa,
            k_db: r.extracted.k.and_then(|k| k.db()),
            pl_omni_db: r.extracted.pl_omni_db,
        })
        .collect();
    let mut out = OutputDir::create(
        &args.common.out,
        RunManifest::new("roundtrip", Some(loaded.sha256), Some(args.seed)),
    )?;
    out.write_csv("roundtrip.csv", &report.checks)?;
    out.write_csv("drops.csv", &rows)?;
    out.write_json("report.json", &report)?;
    out.finish()?;

    for c in &report.checks {
        println!(
            "{} {:<10} drawn {:>10.4} extracted {:>10.4} delta {:+.4} tolerance {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.statistic,
            c.drawn_median,
            c.extracted_median,
            c.delta,
            c.tolerance
        );
    }
    println!(
        "{} {} ({} drops, seed {})",
        if report.pass { "PASS" } else { "FAIL" },
        report.set,
        report.n_drops,
        report.seed
    );
    Ok(report.pass)
}
