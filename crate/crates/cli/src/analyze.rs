//! `analyze`: statistics from a PDP / MPC CSV.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use thz_gbsm::analysis::kpm::{cluster_stats, kpower_means, select_cluster_count, KpmConfig};
use thz_gbsm::analysis::mpc::MpcSet;
use thz_gbsm::analysis::pdp::{directional_pdps, Direction, DirectionalSample};
use thz_gbsm::analysis::stats::{fit_normal, median, pearson};
use thz_gbsm::drop::extract_stats;
use thz_gbsm::pathloss::{fit_ci, pl_best_direction, PathLossKind, PathLossSample};

use crate::args::AnalyzeArgs;
use crate::output::{config_error, sha256_hex, OutputDir, RunManifest};

pub const REQUIRED_COLUMNS: [&str; 2] = ["delay_ns", "power_linear"];
pub const DIRECTION_COLUMNS: [&str; 3] = ["phi_tx_deg", "phi_rx_deg", "theta_rx_deg"];

/// Samples of one drop.
#[derive(Debug, Clone, Default)]
pub struct DropInput {
    pub samples: Vec<DirectionalSample>,
    pub distance_m: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MpcInput {
    pub drops: BTreeMap<u64, DropInput>,
    /// Whether the direction columns were present.
    pub directional: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DropStats {
    pub drop: u64,
    pub ds_s: f64,
    /// Empty without direction columns.
    pub asa_deg: Option<f64>,
    /// Empty when the profile has a single component.
    pub k_db: Option<f64>,
    pub pl_omni_db: f64,
    pub n_clusters: usize,
    pub c_ds_ns: f64,
    pub c_asa_deg: f64,
    pub c_k_db: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub parameter: String,
    pub value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize)]
struct PathLossRow {
    drop: u64,
    distance_m: f64,
    pl_db: f64,
    kind: String,
}

#[derive(Debug, Clone, Serialize)]
struct PathLossFitRow {
    kind: String,
    ple: f64,
    sigma_db: f64,
    n: usize,
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

/// Read the input CSV, grouping rows by the optional `drop` column.
pub fn read_mpc_csv(path: &Path) -> Result<MpcInput> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| config_error(format!("--input: cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| config_error(format!("--input: bad header: {e}")))?
        .clone();
    let mut required = [0usize; 2];
    for (slot, name) in required.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = column(&headers, name).ok_or_else(|| config_error(format!("--input: missing column '{name}'")))?;
    }
    let directions: Vec<Option<usize>> = DIRECTION_COLUMNS.iter().map(|n| column(&headers, n)).collect();
    let directional = directions.iter().any(Option::is_some);
    if directional {
        if let Some(i) = directions.iter().position(Option::is_none) {
            return Err(config_error(format!(
                "--input: missing column '{}' (direction columns come as a set)",
                DIRECTION_COLUMNS[i]
            )));
        }
    }
    let drop_col = column(&headers, "drop");
    let distance_col = column(&headers, "distance_m");

    let mut drops: BTreeMap<u64, DropInput> = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| config_error(format!("--input: line {line}: {e}")))?;
        let cell = |i: usize, name: &str| -> Result<f64> {
            let text = record.get(i).unwrap_or("").trim();
            text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                config_error(format!("--input: line {line}, column '{name}': '{text}' is not a finite number"))
            })
        };
        let drop = match drop_col {
            Some(i) => {
                let text = record.get(i).unwrap_or("").trim();
                text.parse::<u64>().map_err(|_| {
                    config_error(format!("--input: line {line}, column 'drop': '{text}' is not a drop index"))
                })?
            }
            None => 0,
        };
        let delay_ns = cell(required[0], "delay_ns")?;
        if delay_ns < 0.0 {
            return Err(config_error(format!("--input: line {line}, column 'delay_ns': negative delay")));
        }
        let power = cell(required[1], "power_linear")?;
        if power < 0.0 {
            return Err(config_error(format!("--input: line {line}, column 'power_linear': negative power")));
        }
        let direction = if directional {
            let mut v = [0.0; 3];
            for ((slot, i), name) in v.iter_mut().zip(&directions).zip(DIRECTION_COLUMNS) {
                *slot = cell(i.expect("checked above"), name)?;
            }
            Direction {
                phi_tx: v[0],
                phi_rx: v[1],
                theta_rx: v[2],
            }
        } else {
            Direction {
                phi_tx: 0.0,
                phi_rx: 0.0,
                theta_rx: 90.0,
            }
        };
        let entry = drops.entry(drop).or_default();
        if let Some(i) = distance_col {
            let d = cell(i, "distance_m")?;
            match entry.distance_m {
                Some(prev) if prev != d => {
                    return Err(config_error(format!(
                        "--input: line {line}, column 'distance_m': drop {drop} already has distance {prev}"
                    )))
                }
                _ => entry.distance_m = Some(d),
            }
        }
        entry.samples.push(DirectionalSample {
            direction,
            delay: delay_ns * 1e-9,
            power,
        });
    }
    if drops.is_empty() {
        return Err(config_error("--input: no data rows"));
    }
    Ok(MpcInput { drops, directional })
}

fn analyze_drop(drop: u64, input: &DropInput, directional: bool, args: &AnalyzeArgs) -> Result<DropStats> {
    let pdps = directional_pdps(&input.samples, args.delay_step_ns * 1e-9)?;
    let stats = extract_stats(&pdps, true, args.angle_step_deg)?;
    let mpcs = MpcSet::from_directional(&pdps);
    let config = KpmConfig {
        seed: drop,
        ..KpmConfig::default()
    };
    let (_, clustering) = if mpcs.len() >= 3 {
        select_cluster_count(&mpcs, 2..=10, &config)?
    } else {
        (1, kpower_means(&mpcs, 1, &config)?)
    };
    let labeled = MpcSet::with_labels(mpcs.mpcs, clustering.labels);
    let clusters = cluster_stats(&labeled)?;
    Ok(DropStats {
        drop,
        ds_s: stats.ds,
        asa_deg: directional.then_some(stats.asa),
        k_db: stats.k.and_then(|k| k.db()),
        pl_omni_db: stats.pl_omni_db,
        n_clusters: clusters.count,
        c_ds_ns: clusters.median_c_ds_ns,
        c_asa_deg: clusters.median_c_asa_deg,
        c_k_db: clusters.median_c_k_db,
    })
}

/// Fitted large-scale and cluster statistics over all drops.
pub fn report(drops: &[DropStats]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    let mut push = |parameter: &str, value: f64, n: usize| {
        rows.push(ReportRow {
            parameter: parameter.to_string(),
            value,
            n,
        })
    };
    let lg_ds: Vec<f64> = drops.iter().filter(|d| d.ds_s > 0.0).map(|d| d.ds_s.log10()).collect();
    let lg_asa: Vec<f64> = drops
        .iter()
        .filter_map(|d| d.asa_deg)
        .filter(|a| *a > 0.0)
        .map(f64::log10)
        .collect();
    let k: Vec<f64> = drops.iter().filter_map(|d| d.k_db).collect();
    for (name, xs) in [("lgDS", &lg_ds), ("lgASA", &lg_asa), ("K_dB", &k)] {
        if let Ok(fit) = fit_normal(xs) {
            push(&format!("mu_{name}"), fit.mu, xs.len());
            push(&format!("sigma_{name}"), fit.sigma, xs.len());
        }
    }
    let counts: Vec<f64> = drops.iter().map(|d| d.n_clusters as f64).collect();
    push("median_cluster_count", median(&counts), counts.len());
    let c_ds: Vec<f64> = drops.iter().map(|d| d.c_ds_ns).collect();
    push("C_DS_ns", median(&c_ds), c_ds.len());
    let c_asa: Vec<f64> = drops.iter().map(|d| d.c_asa_deg).collect();
    push("C_ASA_deg", median(&c_asa), c_asa.len());
    let c_k: Vec<f64> = drops.iter().filter_map(|d| d.c_k_db).collect();
    if !c_k.is_empty() {
        push("C_K_dB", median(&c_k), c_k.len());
    }

    let complete: Vec<(&DropStats, f64)> = drops
        .iter()
        .filter_map(|d| d.asa_deg.filter(|a| *a > 0.0).map(|a| (d, a)))
        .filter(|(d, _)| d.ds_s > 0.0)
        .collect();
    let ds: Vec<f64> = complete.iter().map(|(d, _)| d.ds_s.log10()).collect();
    let asa: Vec<f64> = complete.iter().map(|(_, a)| a.log10()).collect();
    if let Ok(r) = pearson(&ds, &asa) {
        push("xcorr_ASA_DS", r, ds.len());
    }
    let with_k: Vec<(f64, f64, f64)> = complete
        .iter()
        .filter_map(|(d, a)| d.k_db.map(|k| (d.ds_s.log10(), a.log10(), k)))
        .collect();
    let kk: Vec<f64> = with_k.iter().map(|t| t.2).collect();
    let kds: Vec<f64> = with_k.iter().map(|t| t.0).collect();
    let kasa: Vec<f64> = with_k.iter().map(|t| t.1).collect();
    if let Ok(r) = pearson(&kds, &kk) {
        push("xcorr_DS_K", r, kk.len());
    }
    if let Ok(r) = pearson(&kasa, &kk) {
        push("xcorr_ASA_K", r, kk.len());
    }
    rows
}

fn path_loss(
    input: &MpcInput,
    drops: &[DropStats],
    args: &AnalyzeArgs,
) -> Result<(Vec<PathLossRow>, Vec<PathLossFitRow>)> {
    let condition = args.condition.into();
    let mut samples: Vec<(u64, PathLossSample)> = Vec::new();
    for d in drops {
        let entry = &input.drops[&d.drop];
        let distance_m = entry
            .distance_m
            .ok_or_else(|| config_error("--pathloss: input needs a 'distance_m' column"))?;
        samples.push((
            d.drop,
            PathLossSample {
                distance_m,
                loss_db: d.pl_omni_db,
                condition,
                kind: PathLossKind::Omnidirectional,
            },
        ));
        if input.directional {
            let pdps = directional_pdps(&entry.samples, args.delay_step_ns * 1e-9)?;
            samples.push((d.drop, pl_best_direction(&pdps, distance_m, condition)?));
        }
    }
    let rows = samples
        .iter()
        .map(|(drop, s)| PathLossRow {
            drop: *drop,
            distance_m: s.distance_m,
            pl_db: s.loss_db,
            kind: s.kind.to_string(),
        })
        .collect();
    let mut fits = Vec::new();
    for kind in [PathLossKind::Omnidirectional, PathLossKind::BestDirection] {
        let of_kind: Vec<PathLossSample> = samples.iter().map(|s| s.1).filter(|s| s.kind == kind).collect();
        if of_kind.is_empty() {
            continue;
        }
        let fit = fit_ci(&of_kind, args.frequency_ghz).map_err(|e| config_error(format!("--pathloss: {e}")))?;
        fits.push(PathLossFitRow {
            kind: kind.to_string(),
            ple: fit.ple,
            sigma_db: fit.sigma_db,
            n: of_kind.len(),
        });
    }
    Ok((rows, fits))
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    if !(args.delay_step_ns > 0.0) {
        return Err(config_error("--delay-step-ns must be positive"));
    }
    if !(args.angle_step_deg > 0.0) {
        return Err(config_error("--angle-step-deg must be positive"));
    }
    if !(args.frequency_ghz > 0.0) {
        return Err(config_error("--frequency-ghz must be positive"));
    }
    let input = read_mpc_csv(&args.input)?;
    let groups: Vec<(&u64, &DropInput)> = input.drops.iter().collect();
    let drops: Vec<DropStats> = groups
        .par_iter()
        .map(|(&drop, samples)| analyze_drop(drop, samples, input.directional, args))
        .collect::<Result<_>>()?;
    let rows = report(&drops);
    let pathloss = if args.pathloss {
        Some(path_loss(&input, &drops, args)?)
    } else {
        None
    };

    let mut manifest = RunManifest::new("analyze", None, None);
    manifest.input_sha256 = Some(sha256_hex(&std::fs::read(&args.input)?));
    let mut out = OutputDir::create(&args.out, manifest)?;
    out.write_csv("per_drop.csv", &drops)?;
    out.write_csv("report.csv", &rows)?;
    if let Some((pl_rows, fits)) = &pathloss {
        out.write_csv("pathloss.csv", pl_rows)?;
        out.write_csv("pathloss_fit.csv", fits)?;
    }
    out.finish()?;
    for r in &rows {
        println!("{:<22} {:>14.6} (n={})", r.parameter, r.value, r.n);
    }
    if let Some((_, fits)) = &pathloss {
        for f in fits {
            println!("PLE {:<5} {:>8.4}  sigma {:>7.4} dB (n={})", f.kind, f.ple, f.sigma_db, f.n);
        }
    }
    Ok(())
}
