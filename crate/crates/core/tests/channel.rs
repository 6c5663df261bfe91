//! Coefficient assembly across whole drops.

use thz_gbsm::antenna::{AntennaArray, ElementPattern, Polarization};
use thz_gbsm::coeff::{assemble_cir, CirConfig, CirMode, LinkArrays};
use thz_gbsm::drop::{generate_drop, generate_drops, DropConfig};
use thz_gbsm::params::{ParamLibrary, ScenarioParamSet};

fn set(name: &str) -> ScenarioParamSet {
    ParamLibrary::bundled().by_name(name).unwrap().clone()
}

fn iso_pair(rows: usize, cols: usize, wavelength: f64) -> LinkArrays {
    LinkArrays::new(
        AntennaArray::half_wave_ura(rows, cols, wavelength),
        AntennaArray::half_wave_ura(rows, cols, wavelength),
    )
}

#[test]
fn mean_pair_power_is_unity_over_a_thousand_drops() {
    for name in ["office_nlos_measured", "umi_nlos_measured"] {
        let p = set(name);
        let arrays = iso_pair(2, 2, p.wavelength_m());
        let drops = generate_drops(&p, &DropConfig::for_params(&p), 11, 1000).unwrap();
        let mut sums = [0.0; 4];
        for d in &drops {
            let cir = assemble_cir(
                &d.clusters,
                &arrays,
                &CirConfig::new(CirMode::ThzSimplified, p.wavelength_m(), d.distance_3d),
            );
            for (sum, (u, s)) in sums.iter_mut().zip([(0, 0), (1, 2), (3, 3), (2, 1)]) {
                *sum += cir.pair_power(0, u, s);
            }
        }
        for s in sums {
            let mean = s / drops.len() as f64;
            assert!((0.95..=1.05).contains(&mean), "{name}: mean pair power {mean}");
        }
    }
}

#[test]
fn standard_and_simplified_carry_the_same_power() {
    for name in [
        "office_los_measured",
        "office_nlos_measured",
        "umi_los_measured",
        "umi_nlos_3gpp",
    ] {
        let p = set(name);
        let arrays = iso_pair(1, 1, p.wavelength_m());
        for d in generate_drops(&p, &DropConfig::for_params(&p), 3, 50).unwrap() {
            let power = |mode| {
                assemble_cir(
                    &d.clusters,
                    &arrays,
                    &CirConfig::new(mode, p.wavelength_m(), d.distance_3d),
                )
                .expected_power()
            };
            let (a, b) = (power(CirMode::Standard), power(CirMode::ThzSimplified));
            assert!((a - b).abs() < 1e-12, "{name} drop {}: {a} vs {b}", d.index);
        }
    }
}

#[test]
fn zero_sub_cluster_spacing_reproduces_simplified_taps() {
    let p = set("umi_nlos_3gpp");
    let arrays = iso_pair(2, 2, p.wavelength_m());
    let d = generate_drop(&p, &DropConfig::for_params(&p), 8, 0).unwrap();
    let simplified = CirConfig::new(CirMode::ThzSimplified, p.wavelength_m(), d.distance_3d);
    let mut standard = CirConfig::new(CirMode::Standard, p.wavelength_m(), d.distance_3d);
    standard.sub_cluster_c_ds = 0.0;
    let a = assemble_cir(&d.clusters, &arrays, &standard);
    let b = assemble_cir(&d.clusters, &arrays, &simplified);
    assert_eq!(a.taps.len(), b.taps.len());
    for (x, y) in a.taps.iter().zip(&b.taps) {
        assert_eq!(x.delay, y.delay);
        for (hx, hy) in x.coeffs.iter().zip(&y.coeffs) {
            assert!((hx - hy).norm() < 1e-12);
        }
    }
}

#[test]
fn static_link_is_time_invariant() {
    let p = set("office_los_measured");
    let arrays = iso_pair(2, 2, p.wavelength_m());
    let d = generate_drop(&p, &DropConfig::for_params(&p), 4, 2).unwrap();
    let mut config = CirConfig::new(CirMode::Standard, p.wavelength_m(), d.distance_3d);
    config.times = vec![0.0, 1e-3, 0.5, 2.0];
    let cir = assemble_cir(&d.clusters, &arrays, &config);
    for tap in 0..cir.taps.len() {
        for t in 1..config.times.len() {
            for u in 0..4 {
                for s in 0..4 {
                    assert_eq!(cir.coeff(tap, t, u, s), cir.coeff(tap, 0, u, s));
                }
            }
        }
    }
}

#[test]
fn swapping_link_ends_transposes_the_channel() {
    let p = set("umi_los_measured");
    let lambda = p.wavelength_m();
    let bs = AntennaArray::ura(2, 3, 0.5 * lambda, ElementPattern::Isotropic(Polarization::Slant(45.0)));
    let ue = AntennaArray::ura(
        2,
        2,
        0.5 * lambda,
        ElementPattern::Directional {
            hpbw_deg: 60.0,
            boresight_deg: 30.0,
            polarization: Polarization::Slant(-20.0),
        },
    );
    let forward = LinkArrays::new(ue, bs);
    for d in generate_drops(&p, &DropConfig::for_params(&p), 21, 10).unwrap() {
        let config = CirConfig::new(CirMode::Standard, lambda, d.distance_3d);
        let a = assemble_cir(&d.clusters, &forward, &config);
        let b = assemble_cir(&d.clusters.reversed(), &forward.swapped(), &config);
        assert_eq!((a.n_rx, a.n_tx), (b.n_tx, b.n_rx));
        assert_eq!(a.taps.len(), b.taps.len());
        for tap in 0..a.taps.len() {
            assert_eq!(a.taps[tap].delay, b.taps[tap].delay);
            for u in 0..a.n_rx {
                for s in 0..a.n_tx {
                    assert_eq!(a.coeff(tap, 0, u, s), b.coeff(tap, 0, s, u), "drop {} tap {tap}", d.index);
                }
            }
        }
    }
}
