use std::process::Command;

fn dedekind(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dedekind"))
        .args(args)
        .env_remove("DEDEKIND_WORKERS")
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn compute_prints_the_number() {
    let (code, out, _) = dedekind(&["compute", "--m", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out, "D(5) = 7581\n");
    let (_, dedup, _) = dedekind(&["compute", "--m", "3", "--dedup"]);
    assert_eq!(dedup.lines().next(), Some("D(5) = 7581"));
    let (_, direct, _) = dedekind(&["compute", "--m", "2", "--direct"]);
    assert_eq!(direct, "D(4) = 168\n");
}

#[test]
fn counts() {
    assert_eq!(dedekind(&["classes", "--m", "6"]).1, "R(6) = 16353\n");
    assert_eq!(dedekind(&["enumerate", "--m", "5"]).1, "D(5) = 7581\n");
    let (_, listed, _) = dedekind(&["enumerate", "--m", "2", "--list"]);
    assert_eq!(listed.lines().count(), 7);
    assert!(listed.contains("m=2:7\t{1,2}"));
    let (_, table, _) = dedekind(&["classes", "--m", "2", "--table"]);
    assert!(table.ends_with("4\tm=2:f\t1\n"), "{table}");
    let (_, p, _) = dedekind(&["pcoeff", "m=2:1", "m=2:7"]);
    assert_eq!(p, "connector=2 pcoeff=4\noracle=4\n");
}

#[test]
fn exit_codes() {
    assert_eq!(dedekind(&["compute", "--m", "3", "--frobnicate"]).0, 2);
    assert_eq!(dedekind(&["nonsense"]).0, 2);
    let (code, _, err) = dedekind(&["compute", "--m", "4", "--direct"]);
    assert_eq!(code, 3);
    assert!(err.contains("m <= 3"), "{err}");
    assert_eq!(dedekind(&["compute", "--m", "6"]).0, 3);
    assert_eq!(dedekind(&["classes", "--m", "7"]).0, 3);
    assert_eq!(
        dedekind(&["compute", "--m", "3", "--accumulator-bits", "8"]).0,
        4
    );
    assert_eq!(dedekind(&["pcoeff", "m=2:7", "m=2:1"]).0, 1);
}

#[test]
fn dataset_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d5.txt");
    let p = path.to_str().unwrap();
    let (code, out, _) = dedekind(&["compute", "--m", "3", "--jobs", "3", "--workers", "2", "--out", p]);
    assert_eq!((code, out.as_str()), (0, "D(5) = 7581\n"));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("DEDEKIND-DATASET v1 m=3 classes=10\n0\tm=3:00\t"));
    assert!(text.ends_with("TOTAL\t7581\n"));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("d5.txt.jobs")).unwrap(),
        "JOB 0 RANGE 0 3 MODE class DEDUP 0\nJOB 1 RANGE 3 6 MODE class DEDUP 0\nJOB 2 RANGE 6 10 MODE class DEDUP 0\n"
    );

    // rerun resumes everything; a different split is refused
    let (_, _, err) = dedekind(&["compute", "--m", "3", "--jobs", "3", "--out", p]);
    assert!(err.contains("resumed=3"), "{err}");
    assert_eq!(dedekind(&["compute", "--m", "3", "--jobs", "2", "--out", p]).0, 1);

    std::fs::remove_file(&path).unwrap();
    assert_eq!(dedekind(&["merge", "--m", "3", "--out", p]).1, "D(5) = 7581\n");
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);

    assert_eq!(dedekind(&["total", "--dataset", p]).1, "7581\n");
    let (_, stats, _) = dedekind(&["stats", "--dataset", p]);
    assert!(stats.starts_with("records=10 total=7581 valid_sum=168\n"), "{stats}");
    assert!(stats.contains("pairs_full=90 pairs_dedup=58"), "{stats}");

    let (code, report, _) = dedekind(&["verify", "--dataset", p, "--all", "--residue", "210=21"]);
    assert_eq!(code, 0, "{report}");
    assert!(report.contains("records_checked=10\n"));
    assert!(!report.contains("FAIL"));

    let (code, report, _) = dedekind(&["verify", "--dataset", p, "--sample", "3", "--residue", "210=20"]);
    assert_eq!(code, 1);
    assert!(report.contains("records_checked=3\n"));
    assert!(report.contains("FAIL residue modulus=210 expected=20 actual=21"), "{report}");

    let tampered = text.replacen("\t20\n", "\t21\n", 1);
    assert_ne!(tampered, text);
    std::fs::write(&path, tampered).unwrap();
    let (code, report, _) = dedekind(&["verify", "--dataset", p]);
    assert_eq!(code, 1);
    assert!(report.contains("FAIL count_sum actual=169 expected=168"), "{report}");
    assert!(report.contains("FAIL recompute class_index="), "{report}");
}

#[test]
fn empty_dataset_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.txt");
    std::fs::write(&path, "DEDEKIND-DATASET v1 m=3 classes=10\n").unwrap();
    let (code, _, err) = dedekind(&["stats", "--dataset", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("missing record for class index 0"), "{err}");
}
