//! Property-based invariants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use thz_gbsm::analysis::pdp::{directional_pdps, synth_omni, Direction, DirectionalSample, Pdp};
use thz_gbsm::analysis::spread::{asa_eq10_slices, rms_ds_slices};
use thz_gbsm::capacity::{mimo_capacity, normalize_channel};
use thz_gbsm::cluster::{wrap_azimuth, wrap_zenith};
use thz_gbsm::drop::{generate_drop, DropConfig};
use thz_gbsm::params::ParamLibrary;
use thz_gbsm::pathloss::ci_pl;
use thz_gbsm::psd::{min_eigenvalue, nearest_psd};

const SETS: [&str; 8] = [
    "office_los_measured",
    "office_nlos_measured",
    "umi_los_measured",
    "umi_nlos_measured",
    "office_los_3gpp",
    "office_nlos_3gpp",
    "umi_los_3gpp",
    "umi_nlos_3gpp",
];

fn powers(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter("some power", |p| p.iter().sum::<f64>() > 1e-6)
}

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), rows * cols)
        .prop_map(move |v| DMatrix::from_iterator(rows, cols, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drops_conserve_power_and_wrap_angles(set in 0..SETS.len(), seed in any::<u64>(), index in 0usize..1000) {
        let lib = ParamLibrary::bundled();
        let p = lib.by_name(SETS[set]).unwrap();
        let d = generate_drop(p, &DropConfig::for_params(p), seed, index).unwrap();
        let c = &d.clusters;
        prop_assert!((c.total_power() - 1.0).abs() < 1e-12);
        prop_assert_eq!(c.clusters[0].delay == 0.0, c.k_linear.is_none());
        for w in c.clusters.windows(2) {
            prop_assert!(w[0].delay <= w[1].delay);
        }
        for cl in &c.clusters {
            let fractions: f64 = cl.rays.iter().map(|r| r.power_fraction).sum();
            prop_assert!((fractions - 1.0).abs() < 1e-12);
            for r in &cl.rays {
                for az in [r.aoa, r.aod] {
                    prop_assert!((-180.0..180.0).contains(&az), "azimuth {}", az);
                }
                for ph in r.phases {
                    prop_assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&ph));
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn azimuth_wraps_into_half_open_circle(deg in -1e5f64..1e5) {
        let w = wrap_azimuth(deg);
        prop_assert!((-180.0..180.0).contains(&w));
        let turns = (deg - w) / 360.0;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn zenith_folds_into_closed_half_circle(deg in -1e5f64..1e5) {
        let w = wrap_zenith(deg);
        prop_assert!((0.0..=180.0).contains(&w));
        prop_assert!((w.to_radians().cos() - deg.to_radians().cos()).abs() < 1e-9);
    }

    #[test]
    fn spreads_ignore_power_scale(p in powers(12), exp in -20i32..20, mantissa in 0.1f64..10.0) {
        let delays: Vec<f64> = (0..p.len()).map(|i| i as f64 * 1e-9).collect();
        let azimuths: Vec<f64> = (0..p.len()).map(|i| i as f64 * 30.0).collect();
        let scale = mantissa * 10f64.powi(exp);
        let scaled: Vec<f64> = p.iter().map(|x| x * scale).collect();
        let (ds, ds_s) = (rms_ds_slices(&delays, &p).unwrap(), rms_ds_slices(&delays, &scaled).unwrap());
        prop_assert!((ds - ds_s).abs() <= 1e-12 * ds.max(1e-18));
        let (a, a_s) = (asa_eq10_slices(&azimuths, &p).unwrap(), asa_eq10_slices(&azimuths, &scaled).unwrap());
        prop_assert!((a - a_s).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn omni_synthesis_is_idempotent_commutative_associative(a in powers(8), b in powers(8), c in powers(8)) {
        let [a, b, c] = [a, b, c].map(|p| Pdp::new(1e-9, p).unwrap());
        let omni = |set: &[Pdp]| synth_omni(set).unwrap().powers;
        prop_assert_eq!(omni(&[a.clone(), a.clone()]), a.powers.clone());
        prop_assert_eq!(omni(&[a.clone(), b.clone()]), omni(&[b.clone(), a.clone()]));
        let ab = synth_omni(&[a.clone(), b.clone()]).unwrap();
        let bc = synth_omni(&[b.clone(), c.clone()]).unwrap();
        prop_assert_eq!(omni(&[ab, c.clone()]), omni(&[a.clone(), bc]));
        prop_assert_eq!(omni(&[a.clone(), b.clone(), c.clone()]), omni(&[c, a, b]));
    }

    #[test]
    fn binning_conserves_power(
        samples in prop::collection::vec((0usize..4, 0.0f64..50e-9, 0.0f64..1.0), 1..40),
        step in 0.01e-9f64..2e-9,
    ) {
        let samples: Vec<DirectionalSample> = samples
            .into_iter()
            .map(|(d, delay, power)| DirectionalSample {
                direction: Direction { phi_tx: 0.0, phi_rx: d as f64 * 90.0, theta_rx: 90.0 },
                delay,
                power,
            })
            .collect();
        let pdps = directional_pdps(&samples, step).unwrap();
        let total: f64 = samples.iter().map(|s| s.power).sum();
        let binned: f64 = pdps.iter().map(|p| p.total_power()).sum();
        prop_assert!((total - binned).abs() <= 1e-12 * total.max(1.0));
        prop_assert!(pdps.windows(2).all(|w| w[0].direction != w[1].direction));
    }

    #[test]
    fn capacity_nondecreasing_in_snr(h in complex_matrix(2, 3), lo in 0.0f64..1e3, extra in 0.0f64..1e3) {
        let c0 = mimo_capacity(&h, lo, 3).unwrap();
        let c1 = mimo_capacity(&h, lo + extra, 3).unwrap();
        prop_assert!(c0 >= 0.0);
        prop_assert!(c1 >= c0 - 1e-12);
    }

    #[test]
    fn normalization_ignores_scale(hs in prop::collection::vec(complex_matrix(2, 2), 1..6), scale in 1e-3f64..1e3) {
        prop_assume!(hs.iter().any(|h| h.norm_squared() > 1e-9));
        let mut plain = hs.clone();
        let mut scaled: Vec<_> = hs.iter().map(|h| h * Complex64::new(scale, 0.0)).collect();
        normalize_channel(&mut plain).unwrap();
        normalize_channel(&mut scaled).unwrap();
        let mean = plain.iter().map(|h| h.norm_squared()).sum::<f64>() / plain.len() as f64;
        prop_assert!((mean - 4.0).abs() < 1e-9);
        for (a, b) in plain.iter().zip(&scaled) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn ci_loss_increases_with_distance_and_exponent(d in 1.0f64..500.0, dd in 0.01f64..100.0, n in 0.5f64..5.0, dn in 0.01f64..1.0) {
        let d = d + 1e-3;
        let base = ci_pl(100.0, d, n, 0.0).unwrap();
        prop_assert!(ci_pl(100.0, d + dd, n, 0.0).unwrap() > base);
        prop_assert!(ci_pl(100.0, d, n + dn, 0.0).unwrap() > base);
    }

    #[test]
    fn projection_is_psd_with_unit_diagonal(off in prop::collection::vec(-1.0f64..1.0, 6)) {
        let mut c = DMatrix::identity(4, 4);
        let mut k = 0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                c[(i, j)] = off[k];
                c[(j, i)] = off[k];
                k += 1;
            }
        }
        let p = nearest_psd(&c).unwrap();
        prop_assert!(min_eigenvalue(&p) >= -1e-10);
        for i in 0..4 {
            prop_assert_eq!(p[(i, i)], 1.0);
            for j in 0..4 {
                prop_assert_eq!(p[(i, j)], p[(j, i)]);
                prop_assert!(p[(i, j)].abs() <= 1.0 + 1e-12);
            }
        }
        if min_eigenvalue(&c) >= 0.0 {
            prop_assert_eq!(&p, &c);
        }
        let again = nearest_psd(&p).unwrap();
        prop_assert!((&again - &p).abs().max() < 1e-9);
    }
}
