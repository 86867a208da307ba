//! End-to-end runs of the `naimark` binary and golden-file round trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use naimark_cli::format::{to_json_string, CountsFile, OperatorFile};

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn naimark(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_naimark"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Files in `tests/golden` must be byte-identical to their own re-serialization.
/// `UPDATE_GOLDEN=1` rewrites them instead.
#[test]
fn golden_operator_files_round_trip() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let dir = golden("");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_string();
        if !name.ends_with(".json") || name.starts_with("counts") {
            continue;
        }
        let text = std::fs::read_to_string(&p).unwrap();
        let parsed = OperatorFile::read(&p).unwrap();
        let again = to_json_string(&parsed.to_value());
        if update {
            std::fs::write(&p, &again).unwrap();
        } else {
            assert_eq!(text, again, "{name} is not canonical");
        }
        let reparsed =
            OperatorFile::from_value(&serde_json::from_str(&again).unwrap(), &name).unwrap();
        for (a, b) in parsed.operators.iter().zip(&reparsed.operators) {
            for (x, y) in a.matrix.iter().zip(b.matrix.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn golden_counts_reproduce() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("counts.json");
    let o = naimark(&[
        "sample",
        path(&golden("tetrahedral.json")),
        "--state",
        path(&golden("ket0.json")),
        "-n",
        "100000",
        "--seed",
        "42",
        "--counts",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let produced = std::fs::read_to_string(&out).unwrap();
    let gold = golden("counts_tetrahedral_ket0_seed42.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&gold, &produced).unwrap();
    }
    assert_eq!(produced, std::fs::read_to_string(&gold).unwrap());
    let parsed = CountsFile::read(&gold).unwrap();
    assert_eq!(to_json_string(&parsed.to_value()), produced);
    assert_eq!(parsed.counts.iter().sum::<u64>(), 100_000);
}

#[test]
fn validate_tetrahedral() {
    let o = naimark(&["validate", path(&golden("tetrahedral.json"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(
        s.contains("identity_sum_residual") && s.contains("element_3_negativity"),
        "{s}"
    );
}

#[test]
fn validate_rejects_signed_family_with_exit_1() {
    let o = naimark(&["validate", path(&golden("signed_pair.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL] element_1_negativity"));
}

#[test]
fn dilate_writes_a_passing_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d.rep");
    let o = naimark(&[
        "dilate",
        path(&golden("tetrahedral.json")),
        "--margin",
        "0.5",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["check"], "dilate");
    assert_eq!(v["inputs_digest"].as_str().unwrap().len(), 64);
    let metric = |name: &str| {
        v["metrics"]
            .as_array()
            .unwrap()
            .iter()
            .find(|m| m["name"] == name)
            .unwrap_or_else(|| panic!("{name}"))
            .clone()
    };
    assert_eq!(metric("m")["value"], 2.0);
    assert_eq!(metric("k")["value"], 4.0);
    assert_eq!(metric("n")["value"], 8.0);
    assert!((metric("shift")["value"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    let iso = metric("dilation_invariants.isometry_max_deviation");
    assert_eq!(iso["verdict"], "PASS");
    assert_eq!(iso["tolerance"], 1e-12);
}

#[test]
fn failing_check_exits_1_and_names_tolerance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r.json");
    let o = naimark(&[
        "dilate",
        path(&golden("tetrahedral.json")),
        "--tol",
        "1e-300",
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["verdict"], "FAIL");
    for m in v["metrics"].as_array().unwrap() {
        if m["verdict"] == "FAIL" {
            assert!(m["tolerance"].is_number() && m["value"].is_number());
        }
    }
}

#[test]
fn verify_signed_and_partial_families() {
    for file in [
        "signed_pair.json",
        "qutrit_partial.json",
        "tetrahedral.json",
    ] {
        let o = naimark(&["verify", path(&golden(file))]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{file}\n{}{}",
            stdout(&o),
            stderr(&o)
        );
    }
    let o = naimark(&[
        "verify",
        path(&golden("tetrahedral.json")),
        "--state",
        path(&golden("ket0.json")),
        "--observables",
        path(&golden("x_basis.json")),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn seeded_sampling_is_byte_identical() {
    let (povm, state) = (golden("tetrahedral.json"), golden("ket0.json"));
    let args = [
        "sample",
        path(&povm),
        "--state",
        path(&state),
        "-n",
        "100000",
        "--seed",
        "42",
    ];
    let a = naimark(&args);
    let b = naimark(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = naimark(&[&args[..7], &["--seed", "43"]].concat());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn estimate_from_sampled_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let est = tmp.path().join("rho.json");
    let out = tmp.path().join("e.rep");
    let o = naimark(&[
        "estimate",
        path(&golden("tetrahedral.json")),
        path(&golden("counts_tetrahedral_ket0_seed42.json")),
        "--method",
        "em",
        "--truth",
        path(&golden("ket0.json")),
        "--estimate",
        path(&est),
        "--out",
        path(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let td = v["metrics"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["name"] == "trace_distance")
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!(td <= 0.05, "{td}");
    let rho = OperatorFile::read(&est).unwrap();
    assert_eq!(rho.operators.len(), 1);

    let o = naimark(&[
        "estimate",
        path(&golden("tetrahedral.json")),
        path(&golden("counts_tetrahedral_ket0_seed42.json")),
        "--method",
        "linear",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn merge_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let merged = tmp.path().join("merged.json");
    let z = golden("z_basis.json");
    let x = golden("x_basis.json");
    let o = naimark(&[
        "merge",
        path(&z),
        path(&x),
        "--state",
        path(&golden("ket0.json")),
        "--merged",
        path(&merged),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let file = OperatorFile::read(&merged).unwrap();
    let names: Vec<_> = file.operators.iter().map(|o| o.name.as_str()).collect();
    assert_eq!(names, ["half_Z0", "half_Z1", "half_X0", "half_X1"]);
    assert_eq!(naimark(&["validate", path(&merged)]).status.code(), Some(0));

    let o = naimark(&["merge", path(&z), path(&x), "--mode", "double"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("dimension = 8.0"), "{}", stdout(&o));
}

#[test]
fn user_errors_exit_2_without_panics() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"dim": 1, "operators": [{"name": "A", "matrix": [[[0, "x"]]]}]}"#,
    )
    .unwrap();
    let nonherm = tmp.path().join("nh.json");
    std::fs::write(
        &nonherm,
        r#"{"dim": 2, "operators": [{"name": "N", "matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}]}"#,
    )
    .unwrap();
    let garbage = tmp.path().join("g.json");
    std::fs::write(&garbage, "not json").unwrap();
    let missing = tmp.path().join("missing.json");
    let (tetra, ket0, z, signed) = (
        golden("tetrahedral.json"),
        golden("ket0.json"),
        golden("z_basis.json"),
        golden("signed_pair.json"),
    );

    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["validate", path(&bad)], "/operators/0/matrix/0/0/1"),
        (vec!["validate", path(&nonherm)], "'N' is not Hermitian"),
        (vec!["validate", path(&garbage)], "not valid JSON"),
        (vec!["validate", path(&missing)], "missing.json"),
        (vec!["validate", "--bogus"], "--bogus"),
        (vec!["estimate", path(&tetra), path(&ket0)], "counts"),
        (
            vec!["sample", path(&tetra), "--state", path(&z)],
            "exactly one operator",
        ),
        (vec!["merge", path(&signed), path(&z)], "P element 1"),
    ];
    for (args, needle) in cases {
        let o = naimark(&args);
        let err = stderr(&o);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {err}");
        assert!(err.contains(needle), "{args:?}: {err}");
        assert!(!err.contains("panicked"), "{err}");
    }
}

#[test]
fn demo_passes() {
    let o = naimark(&["demo"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}
