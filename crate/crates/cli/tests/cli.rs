use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qcirc::netlist::parse_netlist;
use qcirc::network::{netlist_ports, write_sampled_csv, NodalNetwork};
use qcirc::units::el_ghz;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn qcirc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcirc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn qcirc")
}

fn ok(o: &Output) {
    assert!(o.status.success(), "status {:?}\nstdout:\n{}\nstderr:\n{}", o.status, String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
}

/// Rows of a CSV file, header dropped.
fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn lc_resonator_is_a_harmonic_ladder() {
    let dir = tempfile::tempdir().unwrap();
    let lc = data("lc.qcn");
    ok(&qcirc(&["spectrum", lc.to_str().unwrap(), "--dims", "30", "--levels", "5"], dir.path()));
    let r = rows(&dir.path().join("spectrum.csv"));
    // 1/(2π sqrt(LC)) with L = 10 nH, C = 100 fF
    let f = 1.0 / (2.0 * PI * (10e-9f64 * 100e-15).sqrt()) / 1e9;
    for (n, row) in r.iter().enumerate() {
        assert!((row[2] - n as f64 * f).abs() < 1e-9 * f * 5.0, "{row:?}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["files"][0], "spectrum.csv");
}

#[test]
fn cpb_sweep_is_periodic_in_offset_charge() {
    let dir = tempfile::tempdir().unwrap();
    let cpb = data("cpb.qcn");
    ok(&qcirc(&["sweep", cpb.to_str().unwrap(), "--param", "ng", "0:1:5", "--levels", "3"], dir.path()));
    let r = rows(&dir.path().join("sweep.csv"));
    assert_eq!(r.len(), 5);
    for k in 1..4 {
        assert!((r[0][k] - r[4][k]).abs() < 1e-9);
        assert!((r[1][k] - r[3][k]).abs() < 1e-9);
    }
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cpb = data("cpb.qcn");
    ok(&qcirc(&["sweep", cpb.to_str().unwrap(), "--param", "ng", "0:1:0", "--levels", "3"], dir.path()));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text, "ng_1_2e,E0_GHz,E1_GHz,E2_GHz\n");
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cpb = data("cpb.qcn");
    let lc = data("lc.qcn");
    for d in [&a, &b] {
        ok(&qcirc(&["quantize", lc.to_str().unwrap()], d.path()));
        ok(&qcirc(&["spectrum", cpb.to_str().unwrap()], d.path()));
        ok(&qcirc(&["dynamics", "--t-max", "2", "--samples", "5", "--kappa", "0.01", "--temp-mk", "30"], d.path()));
    }
    for f in ["spec.qhs", "modes.csv", "spectrum.csv", "trajectory.csv", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn exit_codes_separate_input_from_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let bad = qcirc(&["spectrum", data("bad.qcn").to_str().unwrap()], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert_eq!(stderr.trim_end().lines().count(), 1, "{stderr}");
    let missing = qcirc(&["spectrum", data("missing.qcn").to_str().unwrap()], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    let unconverged = qcirc(&["spectrum", data("cpb.qcn").to_str().unwrap(), "--tol", "1e-30"], dir.path());
    assert_eq!(unconverged.status.code(), Some(2));
    let threshold = qcirc(&["amp", "dpa", "--eps", "0.5", "--kappa", "1"], dir.path());
    assert_eq!(threshold.status.code(), Some(2));
}

#[test]
fn blackbox_from_sampled_impedance() {
    let dir = tempfile::tempdir().unwrap();
    // 10 nH junction in series with 10 nH, shunted by 300 fF
    let ej = el_ghz(10.0);
    let g = parse_netlist(&format!("L L1 1 2 10nH\nJ J1 0 2 {ej}GHz\nC C1 1 0 300fF\n")).unwrap();
    let net = NodalNetwork::new(&g, netlist_ports(&g, &["J1"]).unwrap()).unwrap();
    let omegas: Vec<f64> = (0..=2000).map(|i| 2.0 * PI * (1.0 + i as f64 * 1e-3) * 1e9).collect();
    let csv = write_sampled_csv(&net.impedance_function(50.0), &omegas).unwrap();
    let path = dir.path().join("qucat.csv");
    fs::write(&path, csv).unwrap();
    let out = dir.path().join("bb");
    ok(&qcirc(&["blackbox", path.to_str().unwrap(), "--ej", "16.35GHz", "--order", "6"], &out));
    let r = rows(&out.join("transitions.csv"));
    assert!((r[1][2] - 2.04661).abs() < 1e-4 * 2.04661, "{r:?}");
    assert!((r[2][2] - 2.03853).abs() < 1e-4 * 2.03853, "{r:?}");
    let kerr: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("kerr.json")).unwrap()).unwrap();
    assert_eq!(kerr["expansion"], "taylor6");
}

#[test]
fn amplifier_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(&qcirc(&["amp", "dpa", "--eps", "0.3", "--kappa", "1", "--check"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("amp.json")).unwrap()).unwrap();
    let u = v["u"][0].as_f64().unwrap();
    let vi = v["v"][1].as_f64().unwrap();
    // (κ² + 4ε²)/(κ² − 4ε²) and −4εκ/(κ² − 4ε²)
    assert!((u - 1.36 / 0.64).abs() < 1e-11);
    assert!((vi + 1.2 / 0.64).abs() < 1e-11);
    assert!((v["gain_dB"].as_f64().unwrap() - 20.0 * u.log10()).abs() < 1e-9);
}

#[test]
fn check_flag_and_check_command_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cpb = data("cpb.qcn");
    for args in [
        vec!["quantize", cpb.to_str().unwrap(), "--check"],
        vec!["spectrum", cpb.to_str().unwrap(), "--check"],
        vec!["network", cpb.to_str().unwrap(), "--window", "1:20", "--check"],
        vec!["dynamics", "--t-max", "2", "--samples", "3", "--kappa", "0.01", "--check"],
        vec!["check", cpb.to_str().unwrap()],
    ] {
        let o = qcirc(&args, dir.path());
        ok(&o);
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains("PASS") && !stdout.contains("FAIL"), "{args:?}\n{stdout}");
    }
    let report: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("check.json")).unwrap()).unwrap();
    assert!(report.iter().all(|l| l["pass"] == true));
}
