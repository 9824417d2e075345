//! Sharding tops into jobs, with resumable per-job part files.
//!
//! Each job writes `job-<id>.part` into a work directory: its record lines
//! followed by a `DONE <id>` marker. Parts are written under a temporary name
//! and renamed once complete, so a crash leaves either a finished part or
//! nothing that passes the completion check.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mbf::BaseSize;

use super::{compute_records, Dataset, LevelTables, TopRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Class,
    Direct,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Class => "class",
            Mode::Direct => "direct",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JobManifest {
    pub m: BaseSize,
    pub job_id: usize,
    pub range: Range<usize>,
    pub mode: Mode,
    pub dedup: bool,
}

impl fmt::Display for JobManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "JOB {} RANGE {} {} MODE {} DEDUP {}",
            self.job_id,
            self.range.start,
            self.range.end,
            self.mode,
            u8::from(self.dedup)
        )
    }
}

pub fn format_manifests(jobs: &[JobManifest]) -> String {
    jobs.iter().map(|j| format!("{j}\n")).collect()
}

pub fn parse_manifests(m: BaseSize, text: &str) -> Result<Vec<JobManifest>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || Error::parse(i + 1, format!("bad job line {line:?}"));
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 9 || t[0] != "JOB" || t[2] != "RANGE" || t[5] != "MODE" || t[7] != "DEDUP"
            {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| bad());
            let mode = match t[6] {
                "class" => Mode::Class,
                "direct" => Mode::Direct,
                _ => return Err(bad()),
            };
            let dedup = match t[8] {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            Ok(JobManifest {
                m,
                job_id: num(t[1])?,
                range: num(t[3])?..num(t[4])?,
                mode,
                dedup,
            })
        })
        .collect()
}

/// Splits `[0, class_count)` into `n_jobs` contiguous ranges of near-equal size.
pub fn split_jobs(m: BaseSize, class_count: usize, n_jobs: usize) -> Vec<JobManifest> {
    let n = n_jobs.clamp(1, class_count.max(1));
    (0..n)
        .map(|i| JobManifest {
            m,
            job_id: i,
            range: class_count * i / n..class_count * (i + 1) / n,
            mode: Mode::Class,
            dedup: false,
        })
        .collect()
}

/// Job ranges must tile `[0, class_count)` with no gaps or overlaps, and job
/// ids must be unique.
pub fn validate_partition(jobs: &[JobManifest], class_count: usize) -> Result<()> {
    let mut sorted: Vec<&JobManifest> = jobs.iter().collect();
    sorted.sort_by_key(|j| (j.range.start, j.range.end));
    let mut next = 0;
    for j in &sorted {
        if j.range.start < next {
            return Err(Error::Config(format!(
                "job {} range {:?} overlaps an earlier job",
                j.job_id, j.range
            )));
        }
        if j.range.start > next {
            return Err(Error::Config(format!(
                "tops {}..{} are not covered by any job",
                next, j.range.start
            )));
        }
        if j.range.end < j.range.start {
            return Err(Error::Config(format!("job {} has an inverted range", j.job_id)));
        }
        next = j.range.end;
    }
    if next != class_count {
        return Err(Error::Config(format!(
            "jobs cover {next} tops, expected {class_count}"
        )));
    }
    let mut ids: Vec<usize> = jobs.iter().map(|j| j.job_id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate job id".into()));
    }
    Ok(())
}

/// Work directory holding per-job part files.
#[derive(Clone, Debug)]
pub struct JobStore {
    dir: PathBuf,
}

impl JobStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(JobStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn part_path(&self, job_id: usize) -> PathBuf {
        self.dir.join(format!("job-{job_id}.part"))
    }

    /// Records of a finished job, or `None` if the part is absent or incomplete.
    pub fn load_completed(&self, job: &JobManifest) -> Result<Option<Vec<TopRecord>>> {
        let path = self.part_path(job.job_id);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let mut lines: Vec<&str> = text.lines().collect();
        if lines.pop() != Some(format!("DONE {}", job.job_id).as_str()) {
            return Ok(None);
        }
        let mut records = Vec::with_capacity(lines.len());
        for (i, line) in lines.iter().enumerate() {
            match TopRecord::parse_line(line, i + 1, job.m) {
                Ok(r) => records.push(r),
                Err(_) => return Ok(None),
            }
        }
        let indices_match = records.len() == job.range.len()
            && records
                .iter()
                .zip(job.range.clone())
                .all(|(r, i)| r.class_index == i);
        Ok(indices_match.then_some(records))
    }

    pub fn write_part(&self, job: &JobManifest, records: &[TopRecord]) -> Result<()> {
        let mut text = String::new();
        for r in records {
            text.push_str(&r.to_line());
            text.push('\n');
        }
        text.push_str(&format!("DONE {}\n", job.job_id));
        let path = self.part_path(job.job_id);
        let tmp = path.with_extension("part.tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

/// Outcome of [`run_jobs`]: the merged dataset and which jobs were computed
/// in this call rather than resumed from disk.
#[derive(Clone, Debug)]
pub struct JobRun {
    pub dataset: Dataset,
    pub computed_jobs: Vec<usize>,
}

/// Runs every unfinished job, then merges all parts in class order.
pub fn run_jobs(
    tables: &LevelTables,
    jobs: &[JobManifest],
    store: &JobStore,
    workers: usize,
) -> Result<JobRun> {
    let class_count = tables.classes().len();
    for j in jobs {
        if j.m != tables.base() {
            return Err(Error::Config(format!(
                "job {} is for m={}, tables are for m={}",
                j.job_id,
                j.m.get(),
                tables.base().get()
            )));
        }
        if j.mode != Mode::Class || j.dedup {
            return Err(Error::Config(format!(
                "job {}: per-top datasets are only produced in class mode without dedup",
                j.job_id
            )));
        }
    }
    validate_partition(jobs, class_count)?;
    let mut computed_jobs = Vec::new();
    for j in jobs {
        if store.load_completed(j)?.is_none() {
            let records = compute_records(tables, j.range.clone(), workers)?;
            store.write_part(j, &records)?;
            computed_jobs.push(j.job_id);
        }
    }
    let dataset = merge(tables.base(), class_count, jobs, store)?;
    Ok(JobRun {
        dataset,
        computed_jobs,
    })
}

/// Merges finished parts into a sealed dataset. Every job must be complete.
pub fn merge(
    m: BaseSize,
    class_count: usize,
    jobs: &[JobManifest],
    store: &JobStore,
) -> Result<Dataset> {
    validate_partition(jobs, class_count)?;
    let mut records = Vec::with_capacity(class_count);
    for j in jobs {
        let part = store.load_completed(j)?.ok_or_else(|| {
            Error::Integrity(format!("job {} has no completed part", j.job_id))
        })?;
        records.extend(part);
    }
    Dataset::sealed(m, class_count, records)
}
