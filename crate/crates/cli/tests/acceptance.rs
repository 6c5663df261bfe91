//! Determinism of every command: reruns with identical flags and seed produce
//! byte-identical CSV and SVG output, whatever the worker count.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use tempfile::TempDir;

const STRICT_ENV: &str = "THZ_GBSM_ACCEPTANCE_STRICT";

/// Every non-manifest file of a run directory.
fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn run(args: &[String], out: &Path, threads: usize) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_thz-gbsm"))
        .env_remove("THZ_GBSM_PARAMS_DIR")
        .env("RAYON_NUM_THREADS", threads.to_string())
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(String::from_utf8_lossy(&o.stderr).into_owned());
    }
    Ok(artifacts(out))
}

fn main() {
    let start = Instant::now();
    let tmp = TempDir::new().unwrap();
    let words = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    let seed_sim = tmp.path().join("seed-sim");
    let mut commands = vec![
        ("simulate", words("simulate --scenario umi --condition los --drops 20 --seed 7 --mode standard")),
        ("roundtrip", words("roundtrip --scenario office --condition nlos --drops 100 --seed 3")),
        ("capacity", words("capacity --snr 0:40:10 --drops 4 --seed 5")),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    match run(&words("simulate --scenario office --condition los --drops 20 --seed 2"), &seed_sim, 4) {
        Ok(_) => {
            let input = seed_sim.join("mpc.csv").to_string_lossy().into_owned();
            commands.push(("analyze", vec!["analyze".into(), "--input".into(), input]));
        }
        Err(e) => {
            pass = false;
            details.push(format!("analyze input: {e}"));
        }
    }
    for (i, (name, args)) in commands.iter().enumerate() {
        let runs: Result<Vec<_>, String> = [(1, "a"), (1, "b"), (4, "c")]
            .iter()
            .map(|(threads, tag)| run(args, &tmp.path().join(format!("{i}-{tag}")), *threads))
            .collect();
        match runs {
            Ok(r) => {
                let same = r[0] == r[1] && r[0] == r[2] && !r[0].is_empty();
                pass &= same;
                details.push(format!("{name} {} files {}", r[0].len(), if same { "identical" } else { "differ" }));
            }
            Err(e) => {
                pass = false;
                details.push(format!("{name}: {e}"));
            }
        }
    }
    println!(
        "{} criterion 8 determinism: {}; 1 vs 1 vs 4 workers; {:.2?}",
        if pass { "PASS" } else { "FAIL" },
        details.join(", "),
        start.elapsed()
    );
    if !pass && std::env::var_os(STRICT_ENV).is_some() {
        std::process::exit(1);
    }
}
