//! The per-top dataset file.
//!
//! ```text
//! DEDEKIND-DATASET v1 m=<m> classes=<R(m)>
//! <class_index>\t<rep>\t<term_value>\t<valid_count>
//! ...
//! TOTAL\t<sum of term_value>
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigUint;

use crate::accum::WideAccumulator;
use crate::error::{Error, Result};
use crate::mbf::{BaseSize, Mbf};

const MAGIC: &str = "DEDEKIND-DATASET v1";

/// Intermediary result for one top class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopRecord {
    pub class_index: usize,
    pub rep: Mbf,
    pub term_value: BigUint,
    pub valid_count: BigUint,
}

impl TopRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.class_index, self.rep, self.term_value, self.valid_count
        )
    }

    pub(crate) fn parse_line(line: &str, lineno: usize, m: BaseSize) -> Result<Self> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let decimal = |s: &str, what: &str| -> Result<BigUint> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(Error::parse(lineno, format!("bad {what} {s:?}")));
            }
            s.parse()
                .map_err(|_| Error::parse(lineno, format!("bad {what} {s:?}")))
        };
        let class_index = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad class index {:?}", fields[0])))?;
        let rep: Mbf = fields[1]
            .parse()
            .map_err(|e| Error::parse(lineno, format!("bad representative: {e}")))?;
        if rep.base() != m {
            return Err(Error::parse(
                lineno,
                format!("representative {rep} does not match m={}", m.get()),
            ));
        }
        Ok(TopRecord {
            class_index,
            rep,
            term_value: decimal(fields[2], "term value")?,
            valid_count: decimal(fields[3], "valid count")?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub m: BaseSize,
    pub class_count: usize,
    pub records: Vec<TopRecord>,
    /// The `TOTAL` line, present once the dataset has been merged.
    pub trailer: Option<BigUint>,
}

impl Dataset {
    /// Sorts complete records and stamps the total.
    pub fn sealed(m: BaseSize, class_count: usize, mut records: Vec<TopRecord>) -> Result<Self> {
        records.sort_by_key(|r| r.class_index);
        let mut ds = Dataset {
            m,
            class_count,
            records,
            trailer: None,
        };
        ds.trailer = Some(total(&ds)?);
        Ok(ds)
    }

    pub fn header(m: BaseSize, class_count: usize) -> String {
        format!("{MAGIC} m={} classes={class_count}", m.get())
    }

    pub fn to_text(&self) -> String {
        let mut out = Dataset::header(self.m, self.class_count);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.to_line());
            out.push('\n');
        }
        if let Some(t) = &self.trailer {
            let _ = writeln!(out, "TOTAL\t{t}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, head) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty dataset"))?;
        let (m, class_count) = parse_header(head)?;
        let mut records = Vec::new();
        let mut trailer = None;
        for (lineno, line) in lines {
            if trailer.is_some() {
                return Err(Error::parse(lineno, "content after TOTAL line"));
            }
            if let Some(t) = line.strip_prefix("TOTAL\t") {
                let v = t
                    .parse::<BigUint>()
                    .ok()
                    .filter(|_| t.bytes().all(|b| b.is_ascii_digit()))
                    .ok_or_else(|| Error::parse(lineno, format!("bad total {t:?}")))?;
                trailer = Some(v);
                continue;
            }
            records.push(TopRecord::parse_line(line, lineno, m)?);
        }
        Ok(Dataset {
            m,
            class_count,
            records,
            trailer,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Dataset::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Every class index in `[0, classes)` exactly once.
    pub fn check_complete(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for r in &self.records {
            if r.class_index >= self.class_count {
                return Err(Error::Integrity(format!(
                    "class index {} out of range (classes={})",
                    r.class_index, self.class_count
                )));
            }
            if !seen.insert(r.class_index) {
                return Err(Error::Integrity(format!(
                    "duplicate record for class index {}",
                    r.class_index
                )));
            }
        }
        if let Some(missing) = (0..self.class_count).find(|i| !seen.contains(i)) {
            return Err(Error::Integrity(format!(
                "missing record for class index {missing}"
            )));
        }
        Ok(())
    }

    pub fn record(&self, class_index: usize) -> Option<&TopRecord> {
        self.records.iter().find(|r| r.class_index == class_index)
    }

    pub fn valid_sum(&self) -> BigUint {
        self.records.iter().map(|r| &r.valid_count).sum()
    }
}

fn parse_header(line: &str) -> Result<(BaseSize, usize)> {
    let bad = || Error::parse(1, format!("bad header {line:?}"));
    let rest = line.strip_prefix(MAGIC).ok_or_else(bad)?;
    let mut parts = rest.split_whitespace();
    let m = parts
        .next()
        .and_then(|p| p.strip_prefix("m="))
        .and_then(|v| v.parse::<u8>().ok())
        .ok_or_else(bad)?;
    let classes = parts
        .next()
        .and_then(|p| p.strip_prefix("classes="))
        .and_then(|v| v.parse::<usize>().ok())
        .ok_or_else(bad)?;
    if parts.next().is_some() {
        return Err(bad());
    }
    let m = BaseSize::new(m).map_err(|e| Error::parse(1, e.to_string()))?;
    Ok((m, classes))
}

/// Sum of all term values. The dataset must be complete, and a `TOTAL` line,
/// when present, must agree with the records.
pub fn total(dataset: &Dataset) -> Result<BigUint> {
    dataset.check_complete()?;
    let mut acc = WideAccumulator::unbounded();
    for r in &dataset.records {
        acc.add(&r.term_value)?;
    }
    let sum = acc.into_value()?;
    if let Some(t) = &dataset.trailer {
        if *t != sum {
            return Err(Error::Integrity(format!(
                "TOTAL line says {t} but records sum to {sum}"
            )));
        }
    }
    Ok(sum)
}
