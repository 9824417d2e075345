use dedekind::lattice::{dedekind_number, DEDEKIND};
use dedekind::pipeline::{
    bottom_buffer, compute_dedup, compute_direct, compute_records, compute_top_term,
    reduce_bottom_buffer, run_jobs, split_jobs, total, Dataset, JobStore, LevelTables, Mode,
    BOTTOM_ENTRY_BYTES,
};
use dedekind::verify::{
    audit, check_count_sum, inject_page_corruption, recompute_top, CountSumCheck, PageFill,
    RecordCheck, Sample,
};
use dedekind::{BaseSize, Error};

fn m(k: u8) -> BaseSize {
    BaseSize::new(k).unwrap()
}

fn run(k: u8, jobs: usize, workers: usize) -> (Dataset, tempfile::TempDir) {
    let tables = LevelTables::build(m(k)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = JobStore::open(dir.path().join("parts")).unwrap();
    let manifests = split_jobs(m(k), tables.classes().len(), jobs);
    let out = run_jobs(&tables, &manifests, &store, workers).unwrap();
    (out.dataset, dir)
}

#[test]
fn single_job_at_m3() {
    let (ds, _dir) = run(3, 1, 1);
    assert_eq!(ds.records.len(), 10);
    assert_eq!(total(&ds).unwrap(), 7581u32.into());
}

#[test]
fn seven_jobs_at_m5() {
    let (ds, _dir) = run(5, 7, 2);
    assert_eq!(ds.records.len(), 210);
    assert_eq!(total(&ds).unwrap(), DEDEKIND[7].parse().unwrap());
}

#[test]
fn totals_across_modes() {
    for k in 1..=3u8 {
        let (ds, _dir) = run(k, 2, 2);
        let direct = compute_direct(m(k)).unwrap();
        let dedup = compute_dedup(&LevelTables::build(m(k)).unwrap(), 1).unwrap();
        assert_eq!(total(&ds).unwrap(), direct);
        assert_eq!(dedup.total, direct);
    }
    for k in 4..=5u8 {
        let (ds, _dir) = run(k, 3, 2);
        let dedup = compute_dedup(&LevelTables::build(m(k)).unwrap(), 2).unwrap();
        assert_eq!(total(&ds).unwrap(), dedup.total);
        assert_eq!(dedup.total, dedekind_number(k as usize + 2).unwrap());
    }
}

#[test]
fn sharding_does_not_change_bytes() {
    let (a, _d1) = run(3, 1, 1);
    let (b, _d2) = run(3, 3, 2);
    assert_eq!(a.to_text(), b.to_text());
}

#[test]
fn dedup_workload_at_m3() {
    let d = compute_dedup(&LevelTables::build(m(3)).unwrap(), 1).unwrap();
    assert_eq!((d.evaluated_pairs, d.full_pairs), (58, 90));
    assert_eq!((d.evaluated_blocks, d.full_blocks), (30, 54));
}

#[test]
fn resume_skips_finished_jobs() {
    let tables = LevelTables::build(m(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = JobStore::open(dir.path()).unwrap();
    let jobs = split_jobs(m(4), 30, 3);
    let first = run_jobs(&tables, &jobs, &store, 1).unwrap();
    assert_eq!(first.computed_jobs, vec![0, 1, 2]);

    // a job interrupted before its marker, and a stray temp file
    let part = store.part_path(1);
    let text = std::fs::read_to_string(&part).unwrap();
    let cut: Vec<&str> = text.lines().take(3).collect();
    std::fs::write(&part, cut.join("\n")).unwrap();
    std::fs::write(dir.path().join("job-2.part.tmp"), "garbage").unwrap();

    let second = run_jobs(&tables, &jobs, &store, 2).unwrap();
    assert_eq!(second.computed_jobs, vec![1]);
    assert_eq!(second.dataset.to_text(), first.dataset.to_text());
}

#[test]
fn job_configuration_errors() {
    let tables = LevelTables::build(m(3)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let store = JobStore::open(dir.path()).unwrap();
    let mut jobs = split_jobs(m(3), 10, 2);
    jobs[1].range.start = 4;
    assert!(matches!(run_jobs(&tables, &jobs, &store, 1), Err(Error::Config(_))));
    let mut jobs = split_jobs(m(3), 10, 2);
    jobs[0].dedup = true;
    assert!(matches!(run_jobs(&tables, &jobs, &store, 1), Err(Error::Config(_))));
    let mut jobs = split_jobs(m(3), 10, 2);
    jobs[0].mode = Mode::Direct;
    assert!(matches!(run_jobs(&tables, &jobs, &store, 1), Err(Error::Config(_))));
}

#[test]
fn deleted_record_recomputes_to_same_bytes() {
    let tables = LevelTables::build(m(4)).unwrap();
    let (ds, _dir) = run(4, 2, 2);
    for r in &ds.records {
        let again = compute_top_term(tables.class(r.class_index).unwrap(), &tables).unwrap();
        assert_eq!(again.to_line(), r.to_line());
    }
    let partial = compute_records(&tables, 10..20, 1).unwrap();
    assert_eq!(partial.as_slice(), &ds.records[10..20]);
}

#[test]
fn full_sweep_at_m5_has_no_mismatches() {
    let tables = LevelTables::build(m(5)).unwrap();
    let (ds, _dir) = run(5, 3, 2);
    let report = audit(&ds, &tables, Sample::All, &[(210, 108)], 2).unwrap();
    assert_eq!(report.checked_records, 210);
    assert!(report.passed(), "{:?}", report.lines());
}

#[test]
fn audit_at_m4() {
    let tables = LevelTables::build(m(4)).unwrap();
    let (ds, _dir) = run(4, 1, 1);
    let report = audit(&ds, &tables, Sample::All, &[], 1).unwrap();
    assert!(report.mismatches.is_empty());
    assert_eq!(report.total, 7828354u32.into());
    assert_eq!(check_count_sum(&ds).unwrap(), CountSumCheck::Pass);

    let mut missing = ds.clone();
    missing.records.remove(17);
    let err = audit(&missing, &tables, Sample::All, &[], 1).unwrap_err();
    assert!(err.to_string().contains("class index 17"), "{err}");
}

/// Finds a top, a bottom entry and an earlier top's buffer such that leaving
/// that entry stale keeps the valid count but changes the P-coefficient sum.
#[test]
fn stale_page_with_intact_counts_is_caught_by_recompute() {
    let tables = LevelTables::build(m(3)).unwrap();
    let (ds, _dir) = run(3, 1, 1);
    let buffers: Vec<_> = tables
        .classes()
        .iter()
        .map(|c| bottom_buffer(&tables, c).unwrap())
        .collect();
    let mut found = None;
    'search: for (a, buf) in buffers.iter().enumerate() {
        for (s, stale) in buffers.iter().enumerate() {
            for e in 0..buf.len() {
                if s != a
                    && buf.entry(e).valid_count == stale.entry(e).valid_count
                    && buf.entry(e).pcoeff_sum != stale.entry(e).pcoeff_sum
                {
                    found = Some((a, s, e));
                    break 'search;
                }
            }
        }
    }
    let (a, s, e) = found.expect("m=3 has such an entry");
    let mut buf = buffers[a].clone();
    let fill = PageFill::Stale(buffers[s].as_bytes().to_vec());
    inject_page_corruption(&mut buf, e, BOTTOM_ENTRY_BYTES, &fill);
    let bad = reduce_bottom_buffer(&tables, &tables.classes()[a], &buf).unwrap();
    assert_eq!(bad.valid_count, ds.records[a].valid_count);
    assert_ne!(bad.term_value, ds.records[a].term_value);

    let mut tampered = ds.clone();
    tampered.records[a] = bad;
    tampered.trailer = None;
    assert_eq!(check_count_sum(&tampered).unwrap(), CountSumCheck::Pass);
    assert!(matches!(
        recompute_top(&tampered, a, &tables).unwrap(),
        RecordCheck::Mismatch { .. }
    ));
    let report = audit(&tampered, &tables, Sample::All, &[], 1).unwrap();
    assert!(report.valid_count_mismatches.is_empty());
    assert_eq!(report.mismatches.len(), 1);
    assert!(!report.passed());
}

#[test]
fn clean_audit_after_no_corruption() {
    let tables = LevelTables::build(m(3)).unwrap();
    let (ds, _dir) = run(3, 1, 1);
    let mut rebuilt = Vec::new();
    for c in tables.classes() {
        let buf = bottom_buffer(&tables, c).unwrap();
        rebuilt.push(reduce_bottom_buffer(&tables, c, &buf).unwrap());
    }
    assert_eq!(rebuilt, ds.records);
    assert!(audit(&ds, &tables, Sample::All, &[], 1).unwrap().passed());
}
