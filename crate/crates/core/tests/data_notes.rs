//! The projection table in `data/README.md` matches the bundled sets.

use thz_gbsm::params::ParamLibrary;
use thz_gbsm::psd::{max_abs_diff, min_eigenvalue, nearest_psd};

#[test]
fn recorded_projection_deltas_hold() {
    let notes = include_str!("../data/README.md");
    let lib = ParamLibrary::bundled();
    let mut seen = 0;
    for line in notes.lines().filter(|l| l.starts_with("| ") && l.contains('_')) {
        let cells: Vec<&str> = line.trim_matches('|').split('|').map(str::trim).collect();
        let set = lib.by_name(cells[0]).unwrap();
        let (min_eig, delta): (f64, f64) = (cells[1].parse().unwrap(), cells[2].parse().unwrap());
        let c = set.xcorr_matrix();
        assert!((min_eigenvalue(&c) - min_eig).abs() < 1e-6, "{}", cells[0]);
        let actual = max_abs_diff(&nearest_psd(&c).unwrap(), &c);
        assert!(actual <= delta + 1e-6, "{}: {actual} exceeds recorded {delta}", cells[0]);
        seen += 1;
    }
    assert_eq!(seen, lib.sets().len());
}
