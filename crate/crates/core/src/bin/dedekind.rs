use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dedekind::equiv::enumerate_classes;
use dedekind::lattice::enumerate_mbfs;
use dedekind::pcoeff::{connector_count, pcoeff_value, solution_count_oracle, ORACLE_MAX_BASE};
use dedekind::pipeline::{
    self, compute_class_total, compute_dedup, compute_direct, format_manifests, parse_manifests,
    run_jobs, split_jobs, Dataset, JobStore, LevelTables,
};
use dedekind::verify::{audit, Sample};
use dedekind::{BaseSize, Error, Mbf, Result};

/// Dedekind numbers from the lattice of monotone Boolean functions.
#[derive(Parser)]
#[command(name = "dedekind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count (and optionally list) the monotone functions on m variables.
    Enumerate {
        #[arg(long)]
        m: u8,
        #[arg(long)]
        list: bool,
    },
    /// Count equivalence classes under relabeling of the base set.
    Classes {
        #[arg(long)]
        m: u8,
        /// Print index, representative and orbit size per class.
        #[arg(long)]
        table: bool,
    },
    /// Connector number and P-coefficient of two functions, e.g. `m=2:1 m=2:7`.
    Pcoeff { alpha: String, gamma: String },
    /// Compute D(m+2).
    Compute(ComputeArgs),
    /// Merge finished job parts into a dataset.
    Merge {
        #[arg(long)]
        m: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the total of a dataset.
    Total {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Audit a dataset.
    Verify(VerifyArgs),
    /// Machine-readable summary of a dataset.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
}

#[derive(Args)]
struct Workers {
    #[arg(long, env = "DEDEKIND_WORKERS")]
    workers: Option<usize>,
}

impl Workers {
    fn count(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        })
    }
}

#[derive(Args)]
struct ComputeArgs {
    #[arg(long)]
    m: u8,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    workers: Workers,
    /// Evaluate one block of each dual pair.
    #[arg(long, conflicts_with = "direct")]
    dedup: bool,
    /// Sum over all pairs of D_m directly.
    #[arg(long)]
    direct: bool,
    /// Write the per-top dataset here (class mode only).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Permit class mode at m=6.
    #[arg(long)]
    allow_long_run: bool,
    #[arg(long, hide = true)]
    accumulator_bits: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Recompute this many evenly spaced records.
    #[arg(long, conflicts_with = "all")]
    sample: Option<usize>,
    /// Recompute every record (the default).
    #[arg(long)]
    all: bool,
    /// Residue of the total to check, as MODULUS=EXPECTED.
    #[arg(long, value_parser = parse_residue)]
    residue: Vec<(u64, u64)>,
    #[command(flatten)]
    workers: Workers,
}

fn parse_residue(s: &str) -> std::result::Result<(u64, u64), String> {
    let (m, e) = s
        .split_once('=')
        .ok_or_else(|| format!("expected MODULUS=EXPECTED, got {s:?}"))?;
    let m = m.parse().map_err(|_| format!("bad modulus {m:?}"))?;
    let e = e.parse().map_err(|_| format!("bad residue {e:?}"))?;
    Ok((m, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RunMode {
    Class,
    Direct,
}

/// Validated settings for `compute`.
#[derive(Debug)]
struct RunConfig {
    m: BaseSize,
    mode: RunMode,
    dedup: bool,
    jobs: usize,
    workers: usize,
    out: Option<PathBuf>,
    accumulator_bits: Option<u64>,
}

const CLASS_MAX_BASE: u8 = 5;
const LONG_RUN_MAX_BASE: u8 = 6;

impl RunConfig {
    fn from_args(a: &ComputeArgs) -> Result<Self> {
        let m = BaseSize::new(a.m)?;
        let mode = if a.direct { RunMode::Direct } else { RunMode::Class };
        match mode {
            RunMode::Direct if a.m > pipeline::DIRECT_MAX_BASE => {
                return Err(Error::Capability {
                    what: "direct mode",
                    limit: format!("m <= {}, got {}", pipeline::DIRECT_MAX_BASE, a.m),
                })
            }
            RunMode::Class if a.m > LONG_RUN_MAX_BASE => {
                return Err(Error::Capability {
                    what: "class mode",
                    limit: format!("m <= {LONG_RUN_MAX_BASE}, got {}", a.m),
                })
            }
            RunMode::Class if a.m > CLASS_MAX_BASE && !a.allow_long_run => {
                return Err(Error::Capability {
                    what: "class mode",
                    limit: format!("m <= {CLASS_MAX_BASE} without --allow-long-run, got {}", a.m),
                })
            }
            _ => {}
        }
        if a.out.is_some() && (a.direct || a.dedup) {
            return Err(Error::Config(
                "--out writes a per-top dataset, which only class mode without --dedup produces"
                    .into(),
            ));
        }
        Ok(RunConfig {
            m,
            mode,
            dedup: a.dedup,
            jobs: a.jobs.max(1),
            workers: a.workers.count(),
            out: a.out.clone(),
            accumulator_bits: a.accumulator_bits,
        })
    }

    fn tables(&self) -> Result<LevelTables> {
        let t = LevelTables::build(self.m)?;
        Ok(match self.accumulator_bits {
            Some(bits) => t.with_accumulator_bits(bits),
            None => t,
        })
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn compute(a: &ComputeArgs) -> Result<()> {
    let cfg = RunConfig::from_args(a)?;
    let k = cfg.m.get();
    if cfg.mode == RunMode::Direct {
        println!("D({}) = {}", k + 2, compute_direct(cfg.m)?);
        return Ok(());
    }
    let tables = cfg.tables()?;
    if cfg.dedup {
        let d = compute_dedup(&tables, cfg.workers)?;
        println!("D({}) = {}", k + 2, d.total);
        println!(
            "pairs_evaluated={} pairs_full={} blocks_evaluated={} blocks_full={}",
            d.evaluated_pairs, d.full_pairs, d.evaluated_blocks, d.full_blocks
        );
        return Ok(());
    }
    let Some(out) = &cfg.out else {
        println!("D({}) = {}", k + 2, compute_class_total(&tables, cfg.workers)?);
        return Ok(());
    };
    let jobs = split_jobs(cfg.m, tables.classes().len(), cfg.jobs);
    let manifest_path = sibling(out, ".jobs");
    let manifest = format_manifests(&jobs);
    match std::fs::read_to_string(&manifest_path) {
        Ok(existing) if existing != manifest => {
            return Err(Error::Config(format!(
                "{} holds a different job split; remove it or rerun with the same --jobs",
                manifest_path.display()
            )))
        }
        Ok(_) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            std::fs::write(&manifest_path, &manifest)?
        }
        Err(e) => return Err(e.into()),
    }
    let store = JobStore::open(sibling(out, ".parts"))?;
    let run = run_jobs(&tables, &jobs, &store, cfg.workers)?;
    run.dataset.write(out)?;
    let total = pipeline::total(&run.dataset)?;
    println!("D({}) = {}", k + 2, total);
    eprintln!(
        "jobs={} computed={} resumed={}",
        jobs.len(),
        run.computed_jobs.len(),
        jobs.len() - run.computed_jobs.len()
    );
    Ok(())
}

fn merge(m: u8, out: &Path) -> Result<()> {
    let m = BaseSize::new(m)?;
    let jobs = parse_manifests(m, &std::fs::read_to_string(sibling(out, ".jobs"))?)?;
    let class_count = jobs.iter().map(|j| j.range.end).max().unwrap_or(0);
    let store = JobStore::open(sibling(out, ".parts"))?;
    let ds = pipeline::merge(m, class_count, &jobs, &store)?;
    ds.write(out)?;
    println!("D({}) = {}", m.get() + 2, pipeline::total(&ds)?);
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let ds = Dataset::read(&a.dataset)?;
    let tables = LevelTables::build(ds.m)?;
    let sample = match a.sample {
        Some(n) if !a.all => Sample::Count(n),
        _ => Sample::All,
    };
    let report = audit(&ds, &tables, sample, &a.residue, a.workers.count())?;
    for line in report.lines() {
        println!("{line}");
    }
    Ok(report.passed())
}

fn stats(path: &Path) -> Result<()> {
    let ds = Dataset::read(path)?;
    let total = pipeline::total(&ds)?;
    let tables = LevelTables::build(ds.m)?;
    let w = pipeline::workload(&tables);
    println!(
        "records={} total={} valid_sum={}",
        ds.records.len(),
        total,
        ds.valid_sum()
    );
    println!(
        "pairs_full={} pairs_dedup={} blocks_full={} blocks_dedup={}",
        w.full_pairs, w.dedup_pairs, w.full_blocks, w.dedup_blocks
    );
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Enumerate { m, list } => {
            let idx = enumerate_mbfs(BaseSize::new(m)?)?;
            println!("D({m}) = {}", idx.len());
            if list {
                for f in idx.iter() {
                    println!("{f}\t{}", f.to_antichain());
                }
            }
        }
        Command::Classes { m, table } => {
            let classes = enumerate_classes(BaseSize::new(m)?)?;
            println!("R({m}) = {}", classes.len());
            if table {
                for c in classes.iter() {
                    println!("{}\t{}\t{}", c.class_index, c.rep, c.orbit_size);
                }
            }
        }
        Command::Pcoeff { alpha, gamma } => {
            let a: Mbf = alpha.parse()?;
            let g: Mbf = gamma.parse()?;
            println!(
                "connector={} pcoeff={}",
                connector_count(&a, &g)?,
                pcoeff_value(&a, &g)?
            );
            if a.base().get() <= ORACLE_MAX_BASE {
                println!("oracle={}", solution_count_oracle(&a, &g)?);
            }
        }
        Command::Compute(a) => compute(&a)?,
        Command::Merge { m, out } => merge(m, &out)?,
        Command::Total { dataset } => {
            println!("{}", pipeline::total(&Dataset::read(&dataset)?)?);
        }
        Command::Verify(a) => return verify(&a),
        Command::Stats { dataset } => stats(&dataset)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Capability { .. } => 3,
                Error::Overflow(_) => 4,
                _ => 1,
            })
        }
    }
}
