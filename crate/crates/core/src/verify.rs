//! Checks on a finished dataset: completeness, per-record recomputation,
//! valid-count identities and residues of the total.

use std::ops::Range;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice;
use crate::pipeline::{
    compute_top_term, with_workers, BottomBuffer, Dataset, LevelTables, TopRecord,
};

/// Page size of the host transfer path.
pub const DEFAULT_PAGE_SIZE: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecordCheck {
    Match,
    Mismatch {
        stored: TopRecord,
        recomputed: TopRecord,
    },
}

fn check_level(dataset: &Dataset, tables: &LevelTables) -> Result<()> {
    if dataset.m != tables.base() || dataset.class_count != tables.classes().len() {
        return Err(Error::Config(format!(
            "dataset is m={} with {} classes, tables are m={} with {}",
            dataset.m.get(),
            dataset.class_count,
            tables.base().get(),
            tables.classes().len()
        )));
    }
    Ok(())
}

/// Recomputes one record from scratch and compares it field by field.
pub fn recompute_top(
    dataset: &Dataset,
    class_index: usize,
    tables: &LevelTables,
) -> Result<RecordCheck> {
    check_level(dataset, tables)?;
    let stored = dataset
        .record(class_index)
        .ok_or_else(|| Error::Lookup(format!("no record with class index {class_index}")))?;
    let recomputed = compute_top_term(tables.class(class_index)?, tables)?;
    Ok(if *stored == recomputed {
        RecordCheck::Match
    } else {
        RecordCheck::Mismatch {
            stored: stored.clone(),
            recomputed,
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CountSumCheck {
    Pass,
    Fail { actual: BigUint, expected: BigUint },
}

/// The valid counts of a complete level-`m` dataset sum to `D(m+1)`.
pub fn check_count_sum(dataset: &Dataset) -> Result<CountSumCheck> {
    dataset.check_complete()?;
    let expected = lattice::dedekind_number(dataset.m.get() as usize + 1).ok_or_else(|| {
        Error::capability("count-sum check", format!("m <= 8, got {}", dataset.m.get()))
    })?;
    let actual = dataset.valid_sum();
    Ok(if actual == expected {
        CountSumCheck::Pass
    } else {
        CountSumCheck::Fail { actual, expected }
    })
}

/// Expected valid count of one top: every relabeling `γ` of every bottom
/// above the representative, times the top's orbit size.
pub fn expected_valid_count(tables: &LevelTables, class_index: usize) -> Result<BigUint> {
    let c = tables.class(class_index)?;
    Ok(lattice::interval_size_up(&c.rep)? * c.orbit_size)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueResult {
    pub modulus: u64,
    pub expected: u64,
    pub actual: u64,
    pub pass: bool,
}

pub fn check_residue(total: &BigUint, modulus: u64, expected: u64) -> Result<ResidueResult> {
    if modulus < 2 {
        return Err(Error::Config(format!("residue modulus must be >= 2, got {modulus}")));
    }
    let actual = (total % modulus).to_u64().expect("remainder below modulus");
    Ok(ResidueResult {
        modulus,
        expected,
        actual,
        pass: actual == expected,
    })
}

/// What lands in a page that was not copied.
#[derive(Clone, Debug)]
pub enum PageFill {
    Zeros,
    Byte(u8),
    /// Bytes left over from an earlier buffer at the same offsets.
    Stale(Vec<u8>),
}

/// Overwrites the `page_index`-th aligned page of a bottom buffer, clipped to
/// the buffer's length. Returns the byte range that was replaced.
pub fn inject_page_corruption(
    buffer: &mut BottomBuffer,
    page_index: usize,
    page_size: usize,
    fill: &PageFill,
) -> Range<usize> {
    let bytes = buffer.as_bytes_mut();
    let start = (page_index * page_size).min(bytes.len());
    let end = (start + page_size).min(bytes.len());
    for (off, b) in bytes[start..end].iter_mut().enumerate() {
        *b = match fill {
            PageFill::Zeros => 0,
            PageFill::Byte(x) => *x,
            PageFill::Stale(old) => old.get(start + off).copied().unwrap_or(0),
        };
    }
    start..end
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sample {
    All,
    Count(usize),
}

impl Sample {
    /// Evenly spaced class indices.
    fn indices(self, class_count: usize) -> Vec<usize> {
        match self {
            Sample::All => (0..class_count).collect(),
            Sample::Count(n) => {
                let n = n.min(class_count);
                (0..n).map(|i| i * class_count / n).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordMismatch {
    pub class_index: usize,
    pub stored: TopRecord,
    pub recomputed: TopRecord,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub checked_records: usize,
    pub mismatches: Vec<RecordMismatch>,
    /// Records whose valid count differs from `orbit · |[rep, ⊤]|`.
    pub valid_count_mismatches: Vec<usize>,
    pub residue_results: Vec<ResidueResult>,
    pub count_sum_pass: bool,
    pub valid_sum: BigUint,
    pub valid_expected: BigUint,
    /// `(stored, recomputed)` when the `TOTAL` line disagrees with the records.
    pub trailer_mismatch: Option<(BigUint, BigUint)>,
    pub total: BigUint,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
            && self.valid_count_mismatches.is_empty()
            && self.count_sum_pass
            && self.trailer_mismatch.is_none()
            && self.residue_results.iter().all(|r| r.pass)
    }

    /// `KEY=VALUE` facts followed by one `FAIL <check> <detail>` line per failure.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("records_checked={}", self.checked_records),
            format!("mismatches={}", self.mismatches.len()),
            format!("valid_sum={}", self.valid_sum),
            format!("valid_expected={}", self.valid_expected),
            format!("total={}", self.total),
        ];
        for r in &self.residue_results {
            out.push(format!("residue_{}={}", r.modulus, r.actual));
        }
        if let Some((stored, sum)) = &self.trailer_mismatch {
            out.push(format!("FAIL trailer stored={stored} records={sum}"));
        }
        if !self.count_sum_pass {
            out.push(format!(
                "FAIL count_sum actual={} expected={}",
                self.valid_sum, self.valid_expected
            ));
        }
        for i in &self.valid_count_mismatches {
            out.push(format!("FAIL valid_count class_index={i}"));
        }
        for m in &self.mismatches {
            out.push(format!(
                "FAIL recompute class_index={} stored={},{} recomputed={},{}",
                m.class_index,
                m.stored.term_value,
                m.stored.valid_count,
                m.recomputed.term_value,
                m.recomputed.valid_count
            ));
        }
        for r in self.residue_results.iter().filter(|r| !r.pass) {
            out.push(format!(
                "FAIL residue modulus={} expected={} actual={}",
                r.modulus, r.expected, r.actual
            ));
        }
        out
    }
}

/// Runs the whole suite. Incomplete datasets are an error rather than a
/// failed report.
pub fn audit(
    dataset: &Dataset,
    tables: &LevelTables,
    sample: Sample,
    residues: &[(u64, u64)],
    workers: usize,
) -> Result<AuditReport> {
    check_level(dataset, tables)?;
    dataset.check_complete()?;
    let total: BigUint = dataset.records.iter().map(|r| &r.term_value).sum();
    let trailer_mismatch = dataset
        .trailer
        .as_ref()
        .filter(|t| **t != total)
        .map(|t| (t.clone(), total.clone()));

    let valid_sum = dataset.valid_sum();
    let (count_sum_pass, valid_expected) = match check_count_sum(dataset)? {
        CountSumCheck::Pass => (true, valid_sum.clone()),
        CountSumCheck::Fail { expected, .. } => (false, expected),
    };

    let mut valid_count_mismatches = Vec::new();
    for r in &dataset.records {
        if r.valid_count != expected_valid_count(tables, r.class_index)? {
            valid_count_mismatches.push(r.class_index);
        }
    }
    valid_count_mismatches.sort_unstable();

    let residue_results = residues
        .iter()
        .map(|&(modulus, expected)| check_residue(&total, modulus, expected))
        .collect::<Result<Vec<_>>>()?;

    let indices = sample.indices(dataset.class_count);
    let checks = with_workers(workers, || {
        indices
            .par_iter()
            .map(|&i| recompute_top(dataset, i, tables).map(|c| (i, c)))
            .collect::<Result<Vec<_>>>()
    })??;
    let mismatches = checks
        .into_iter()
        .filter_map(|(class_index, c)| match c {
            RecordCheck::Match => None,
            RecordCheck::Mismatch { stored, recomputed } => Some(RecordMismatch {
                class_index,
                stored,
                recomputed,
            }),
        })
        .collect();

    Ok(AuditReport {
        checked_records: indices.len(),
        mismatches,
        valid_count_mismatches,
        residue_results,
        count_sum_pass,
        valid_sum,
        valid_expected,
        trailer_mismatch,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbf::BaseSize;
    use crate::pipeline::{bottom_buffer, compute_records, reduce_bottom_buffer};

    fn level(k: u8) -> (LevelTables, Dataset) {
        let m = BaseSize::new(k).unwrap();
        let t = LevelTables::build(m).unwrap();
        let recs = compute_records(&t, 0..t.classes().len(), 1).unwrap();
        let ds = Dataset::sealed(m, t.classes().len(), recs).unwrap();
        (t, ds)
    }

    #[test]
    fn residues() {
        let d9: BigUint = lattice::DEDEKIND[9].parse().unwrap();
        assert!(check_residue(&d9, 210, 6).unwrap().pass);
        assert!(check_residue(&20u32.into(), 210, 20).unwrap().pass);
        let d7: BigUint = lattice::DEDEKIND[7].parse().unwrap();
        assert_eq!(check_residue(&d7, 210, 0).unwrap().actual, 108);
        assert!(check_residue(&d7, 1, 0).is_err());
    }

    #[test]
    fn recompute_detects_a_bumped_term() {
        let (t, mut ds) = level(3);
        for i in 0..10 {
            assert_eq!(recompute_top(&ds, i, &t).unwrap(), RecordCheck::Match);
        }
        ds.records[4].term_value += 1u32;
        match recompute_top(&ds, 4, &t).unwrap() {
            RecordCheck::Mismatch { stored, recomputed } => {
                assert_eq!(stored.term_value, &recomputed.term_value + 1u32)
            }
            RecordCheck::Match => panic!("tamper not detected"),
        }
        assert!(matches!(recompute_top(&ds, 99, &t), Err(Error::Lookup(_))));
    }

    #[test]
    fn count_sum() {
        let (_, mut ds) = level(3);
        assert_eq!(check_count_sum(&ds).unwrap(), CountSumCheck::Pass);
        ds.records[2].valid_count += 3u32;
        assert_eq!(
            check_count_sum(&ds).unwrap(),
            CountSumCheck::Fail {
                actual: 171u32.into(),
                expected: 168u32.into()
            }
        );
        ds.records.pop();
        assert!(matches!(check_count_sum(&ds), Err(Error::Integrity(_))));
    }

    #[test]
    fn per_record_valid_counts() {
        let (t, ds) = level(4);
        for r in &ds.records {
            assert_eq!(r.valid_count, expected_valid_count(&t, r.class_index).unwrap());
        }
    }

    #[test]
    fn zeroed_page_breaks_the_count() {
        let (t, ds) = level(3);
        let top = &t.classes()[0];
        let mut buf = bottom_buffer(&t, top).unwrap();
        let hit = inject_page_corruption(&mut buf, 0, DEFAULT_PAGE_SIZE, &PageFill::Zeros);
        assert_eq!(hit, 0..buf.as_bytes().len());
        let bad = reduce_bottom_buffer(&t, top, &buf).unwrap();
        let mut tampered = ds.clone();
        tampered.records[0] = bad;
        assert!(matches!(
            check_count_sum(&tampered).unwrap(),
            CountSumCheck::Fail { .. }
        ));
        let report = audit(&tampered, &t, Sample::All, &[], 1).unwrap();
        assert!(!report.passed());
        assert_eq!(report.valid_count_mismatches, vec![0]);
    }

    #[test]
    fn page_beyond_buffer_is_a_no_op() {
        let (t, _) = level(2);
        let mut buf = bottom_buffer(&t, &t.classes()[1]).unwrap();
        let before = buf.clone();
        let hit = inject_page_corruption(&mut buf, 3, DEFAULT_PAGE_SIZE, &PageFill::Byte(0xff));
        assert!(hit.is_empty());
        assert_eq!(buf, before);
    }

    #[test]
    fn clean_audit_and_sampling() {
        let (t, ds) = level(3);
        let report = audit(&ds, &t, Sample::Count(3), &[(210, 21)], 2).unwrap();
        assert!(report.passed(), "{:?}", report.lines());
        assert_eq!(report.checked_records, 3);
        assert_eq!(report.total, 7581u32.into());
        let again = audit(&ds, &t, Sample::Count(3), &[(210, 21)], 1).unwrap();
        assert_eq!(report, again);
    }
}
