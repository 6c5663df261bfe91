//! Statistical behaviour of the generators and estimators over many draws.

use rand::Rng;
use rand_distr::StandardNormal;
use thz_gbsm::analysis::stats::{cross_corr, ks_critical_1pct, ks_statistic_normal, lsp_columns};
use thz_gbsm::cluster::composite_delay_spread;
use thz_gbsm::drop::{generate_drops, DropConfig};
use thz_gbsm::lsp::{generate_lsp, projected_xcorr, LspRealization};
use thz_gbsm::params::{Condition, ParamLibrary};
use thz_gbsm::pathloss::{fit_ci, fspl, PathLossKind, PathLossSample};
use thz_gbsm::rng::{derive_seed, rng_from_seed};

const MEASURED: [&str; 4] = [
    "office_los_measured",
    "office_nlos_measured",
    "umi_los_measured",
    "umi_nlos_measured",
];

fn independent_draws(name: &str, n: u64) -> Vec<LspRealization> {
    let lib = ParamLibrary::bundled();
    let p = lib.by_name(name).unwrap();
    (0..n)
        .map(|i| generate_lsp(p, &[[0.0, 0.0]], derive_seed(2024, i)).unwrap()[0])
        .collect()
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut r = vec![0.0; xs.len()];
    for (rank, &i) in order.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    thz_gbsm::analysis::stats::pearson(&ranks(xs), &ranks(ys)).unwrap()
}

#[test]
fn lsp_marginals_pass_ks_at_one_percent() {
    let lib = ParamLibrary::bundled();
    let critical = ks_critical_1pct(10_000);
    for name in MEASURED {
        let p = lib.by_name(name).unwrap();
        let cols = lsp_columns(&independent_draws(name, 10_000));
        let mut laws = vec![(p.ds_mu, p.ds_sigma), (p.asa_mu, p.asa_sigma), (0.0, p.sigma_sf_db)];
        if let Some(k) = p.k_params() {
            laws.push(k);
        }
        assert_eq!(cols.len(), laws.len());
        for (i, (col, (mu, sigma))) in cols.iter().zip(laws).enumerate() {
            let d = ks_statistic_normal(col, mu, sigma);
            assert!(d < critical, "{name} column {i}: D = {d:.4} >= {critical:.4}");
        }
    }
}

#[test]
fn empirical_cross_correlation_matches_projected_target() {
    for name in MEASURED {
        let lib = ParamLibrary::bundled();
        let p = lib.by_name(name).unwrap();
        let cols = lsp_columns(&independent_draws(name, 10_000));
        let gap = (cross_corr(&cols).unwrap() - projected_xcorr(p).unwrap()).abs().max();
        assert!(gap <= 0.05, "{name}: worst entry off by {gap:.4}");
    }
}

#[test]
fn generated_delay_spread_tracks_drawn_delay_spread() {
    let lib = ParamLibrary::bundled();
    for name in MEASURED {
        let p = lib.by_name(name).unwrap();
        let drops = generate_drops(p, &DropConfig::for_params(p), 6, 1000).unwrap();
        let drawn: Vec<f64> = drops.iter().map(|d| d.lsp.ds).collect();
        let generated: Vec<f64> = drops.iter().map(|d| composite_delay_spread(&d.clusters)).collect();
        let r = spearman(&drawn, &generated);
        assert!(r > 0.8, "{name}: rank correlation {r:.3}");
    }
}

fn synthetic_ci_samples(seed: u64, n: usize, ple: f64, sigma: f64) -> Vec<PathLossSample> {
    let mut rng = rng_from_seed(seed);
    let fs1 = fspl(100.0, 1.0);
    (0..n)
        .map(|_| {
            let d = 10f64.powf(rng.random::<f64>() * 15f64.log10());
            let x: f64 = rng.sample(StandardNormal);
            PathLossSample {
                distance_m: d,
                loss_db: fs1 + 10.0 * ple * d.log10() + sigma * x,
                condition: Condition::Los,
                kind: PathLossKind::Omnidirectional,
            }
        })
        .collect()
}

#[test]
fn ci_fit_recovers_office_los_exponent_and_spread() {
    let fit = fit_ci(&synthetic_ci_samples(5, 10_000, 1.94, 2.43), 100.0).unwrap();
    assert!((fit.ple - 1.94).abs() <= 0.02, "n = {}", fit.ple);
    assert!((fit.sigma_db - 2.43).abs() <= 0.05, "sigma = {}", fit.sigma_db);
}

#[test]
fn ci_fit_exponent_bias_is_small_over_repetitions() {
    let estimates: Vec<f64> = (0..100)
        .map(|r| fit_ci(&synthetic_ci_samples(derive_seed(17, r), 10_000, 1.94, 2.43), 100.0).unwrap().ple)
        .collect();
    let bias = estimates.iter().sum::<f64>() / estimates.len() as f64 - 1.94;
    assert!(bias.abs() < 0.01, "bias {bias}");
}
