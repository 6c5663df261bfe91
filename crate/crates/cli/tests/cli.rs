//! End-to-end runs of the `thz-gbsm` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_thz-gbsm"));
    c.env_remove("THZ_GBSM_PARAMS_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, drops: &str) -> PathBuf {
    let out = dir.join("sim");
    let o = run(&[
        "simulate", "--scenario", "office", "--condition", "los", "--source", "measured", "--drops", drops,
        "--seed", "1", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    (header, r.records().map(Result::unwrap).collect())
}

fn report_value(path: &Path, parameter: &str) -> Option<f64> {
    let (_, rows) = csv_rows(path);
    rows.iter().find(|r| &r[0] == parameter).map(|r| r[1].parse().unwrap())
}

#[test]
fn simulate_writes_every_table_with_headers() {
    let tmp = TempDir::new().unwrap();
    let out = simulate(tmp.path(), "10");
    for (name, first) in [
        ("lsp.csv", "drop,x_m,y_m,ds_s,asa_deg,sf_db,k_db"),
        ("clusters.csv", "drop,cluster,ray,delay_ns,power,aoa_deg,zoa_deg,aod_deg,zod_deg"),
        ("cir.csv", "drop,u,s,delay_ns,re,im"),
        (
            "mpc.csv",
            "drop,distance_m,delay_ns,power_linear,phi_tx_deg,phi_rx_deg,theta_rx_deg",
        ),
    ] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().next().unwrap(), first, "{name}");
    }
    let (_, lsp) = csv_rows(&out.join("lsp.csv"));
    assert_eq!(lsp.len(), 10);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["params_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 4);
}

#[test]
fn commands_write_only_inside_out() {
    let tmp = TempDir::new().unwrap();
    let o = bin()
        .current_dir(tmp.path())
        .args(["simulate", "--scenario", "umi", "--condition", "nlos", "--drops", "2", "--out", "run"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let entries: Vec<_> = fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries, vec![std::ffi::OsString::from("run")]);
}

#[test]
fn unknown_scenario_exits_2_naming_the_flag() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "simulate", "--scenario", "rural", "--condition", "los", "--out", path_str(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--scenario"), "{}", stderr(&o));
}

#[test]
fn analyze_reports_spreads_k_and_clusters() {
    let tmp = TempDir::new().unwrap();
    let sim = simulate(tmp.path(), "12");
    let out = tmp.path().join("an");
    let o = run(&["analyze", "--input", path_str(&sim.join("mpc.csv")), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = out.join("report.csv");
    for p in ["mu_lgDS", "sigma_lgDS", "mu_lgASA", "mu_K_dB", "median_cluster_count", "C_DS_ns", "C_ASA_deg"] {
        assert!(report_value(&report, p).is_some(), "missing {p}");
    }
    let (_, per_drop) = csv_rows(&out.join("per_drop.csv"));
    assert_eq!(per_drop.len(), 12);
}

#[test]
fn analyze_pathloss_fits_the_close_in_model() {
    let tmp = TempDir::new().unwrap();
    let sim = simulate(tmp.path(), "30");
    let out = tmp.path().join("pl");
    let o = run(&[
        "analyze", "--input", path_str(&sim.join("mpc.csv")), "--out", path_str(&out), "--pathloss",
        "--condition", "los",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&out.join("pathloss_fit.csv"));
    assert_eq!(header, ["kind", "ple", "sigma_db", "n"]);
    let omni = rows.iter().find(|r| &r[0] == "omni").unwrap();
    let ple: f64 = omni[1].parse().unwrap();
    assert!((1.0..3.0).contains(&ple), "ple {ple}");
    let (_, samples) = csv_rows(&out.join("pathloss.csv"));
    for pair in samples.chunks(2) {
        let (o, b): (f64, f64) = (pair[0][2].parse().unwrap(), pair[1][2].parse().unwrap());
        assert!(b >= o, "best-direction loss {b} below omni {o}");
    }
}

#[test]
fn empty_input_fails_without_outputs() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("empty.csv");
    fs::write(&input, "drop,delay_ns,power_linear\n").unwrap();
    let out = tmp.path().join("out");
    let o = run(&["analyze", "--input", path_str(&input), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn planted_delay_spread_is_reported_exactly() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("planted.csv");
    // Two equal taps spaced by 10, 20 and 40 ns: spreads of 5, 10 and 20 ns.
    let mut text = String::from("drop,delay_ns,power_linear\n");
    for (drop, spacing) in [(0, 10.0), (1, 20.0), (2, 40.0)] {
        text += &format!("{drop},0,1e-9\n{drop},{spacing},1e-9\n");
    }
    fs::write(&input, text).unwrap();
    let out = tmp.path().join("out");
    let o = run(&["analyze", "--input", path_str(&input), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mu = report_value(&out.join("report.csv"), "mu_lgDS").unwrap();
    assert!((mu + 8.0).abs() < 1e-6, "mu_lgDS {mu}");
    assert!(report_value(&out.join("report.csv"), "mu_lgASA").is_none());
}

#[test]
fn schema_errors_name_the_column() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let missing = tmp.path().join("missing.csv");
    fs::write(&missing, "drop,delay_ns\n0,1\n").unwrap();
    let o = run(&["analyze", "--input", path_str(&missing), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'power_linear'"), "{}", stderr(&o));

    let partial = tmp.path().join("partial.csv");
    fs::write(&partial, "delay_ns,power_linear,phi_rx_deg\n0,1,0\n").unwrap();
    let o = run(&["analyze", "--input", path_str(&partial), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'phi_tx_deg'"), "{}", stderr(&o));

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "delay_ns,power_linear\n0,1\n3,abc\n").unwrap();
    let o = run(&["analyze", "--input", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains("'power_linear'"), "{msg}");
    assert!(!out.exists());
}

#[test]
fn roundtrip_passes_for_office_los() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "roundtrip", "--scenario", "office", "--condition", "los", "--drops", "500", "--out", path_str(tmp.path()),
    ]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().last().unwrap().starts_with("PASS"), "{text}");
    assert!(text.contains("delta"));
    assert!(tmp.path().join("report.json").exists());
}

#[test]
fn roundtrip_with_zero_tolerance_fails() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "roundtrip", "--scenario", "office", "--condition", "nlos", "--drops", "50", "--tolerance", "0", "--out",
        path_str(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn roundtrip_status_is_stable_across_seeds() {
    let mut deltas = Vec::new();
    for seed in 1..=5 {
        let tmp = TempDir::new().unwrap();
        let seed = seed.to_string();
        let o = run(&[
            "roundtrip", "--scenario", "office", "--condition", "los", "--drops", "500", "--seed", &seed, "--out",
            path_str(tmp.path()),
        ]);
        assert!(o.status.success(), "seed {seed}: {}", stdout(&o));
        deltas.push(fs::read_to_string(tmp.path().join("roundtrip.csv")).unwrap());
    }
    deltas.dedup();
    assert!(deltas.len() > 1, "deltas did not change with the seed");
}

#[test]
fn capacity_single_snr_gives_one_row() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "capacity", "--scenario", "umi", "--source", "measured", "--snr", "30", "--drops", "3", "--out",
        path_str(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&tmp.path().join("capacity.csv"));
    assert_eq!(header, ["snr_db", "mean_capacity_bpshz", "source", "scenario"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "30.0");
}

#[test]
fn capacity_3gpp_above_measured_in_office() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "capacity", "--scenario", "office", "--snr", "0:30:10", "--drops", "20", "--out", path_str(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = csv_rows(&tmp.path().join("capacity.csv"));
    let at = |source: &str| -> f64 {
        rows.iter()
            .find(|r| &r[0] == "30.0" && &r[2] == source)
            .map(|r| r[1].parse().unwrap())
            .unwrap()
    };
    assert!(at("3gpp") > at("measured"), "3gpp {} measured {}", at("3gpp"), at("measured"));
    let svg = fs::read_to_string(tmp.path().join("capacity.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn missing_params_file_exits_2() {
    let tmp = TempDir::new().unwrap();
    let o = run(&[
        "capacity", "--params", "/nonexistent/params.toml", "--snr", "30", "--drops", "1", "--out",
        path_str(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--params"));
}

#[test]
fn params_directory_from_environment() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data");
    let tmp = TempDir::new().unwrap();
    let o = bin()
        .env("THZ_GBSM_PARAMS_DIR", &data)
        .args(["simulate", "--scenario", "umi", "--condition", "los", "--drops", "2", "--out"])
        .arg(tmp.path().join("a"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bin()
        .env("THZ_GBSM_PARAMS_DIR", tmp.path().join("nowhere"))
        .args(["simulate", "--scenario", "umi", "--condition", "los", "--drops", "2", "--out"])
        .arg(tmp.path().join("b"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
