//! Evaluation of `D(m+2)` over `D_m`.
//!
//! Class mode sums one term per equivalence class of tops `α`:
//!
//! ```text
//! |[⊥,α]| · D_α · Σ_β |[β,⊤]| · Σ_{γ ~ β, α <= γ} 2^C(α,γ)
//! ```
//!
//! where the inner sum runs over the distinct relabelings of each bottom class
//! `β`. Direct mode sums over every pair `α <= β` of `D_m`; dedup mode visits
//! only one of each block pair `(A, B)`, `(dual B, dual A)`.

mod dataset;
mod jobs;

use std::sync::Arc;

use num_bigint::BigUint;
use rayon::prelude::*;

use crate::accum::{WideAccumulator, TOP_ACCUMULATOR_BITS};
use crate::equiv::{self, distinct_image_bits, ClassInfo};
use crate::error::{Error, Result};
use crate::lattice;
use crate::mbf::{dual_bits, BaseSize, Mbf};
use crate::pcoeff::{connector_count_bits, permutation_sum_bits, PermSumResult};

pub use dataset::{total, Dataset, TopRecord};
pub use jobs::{merge, JobRun, 
    format_manifests, parse_manifests, run_jobs, split_jobs, validate_partition, JobManifest,
    JobStore, Mode,
};

/// Largest base size for the all-pairs direct sum.
pub const DIRECT_MAX_BASE: u8 = 3;

/// Per-level data shared read-only by every worker.
#[derive(Debug)]
pub struct LevelTables {
    m: BaseSize,
    classes: Arc<Vec<ClassInfo>>,
    equivalents: Vec<Vec<u128>>,
    down: Vec<u128>,
    up: Vec<u128>,
    dual_class: Vec<usize>,
    accumulator_bits: u64,
}

impl LevelTables {
    pub fn build(m: BaseSize) -> Result<Self> {
        let classes = equiv::enumerate_classes(m)?;
        let k = m.get();
        let equivalents: Vec<Vec<u128>> = classes
            .par_iter()
            .map(|c| distinct_image_bits(c.rep.truth(), k))
            .collect();
        let down = classes
            .iter()
            .map(|c| lattice::down_size_bits(c.rep.truth(), k))
            .collect::<Result<Vec<_>>>()?;
        let up = classes
            .iter()
            .map(|c| lattice::up_size_bits(c.rep.truth(), k))
            .collect::<Result<Vec<_>>>()?;
        let dual_class = classes
            .iter()
            .map(|c| {
                let d = Mbf::from_truth_unchecked(m, dual_bits(c.rep.truth(), k));
                equiv::class_of(&classes, &d)
                    .ok_or_else(|| Error::Invariant(format!("no class for dual of {}", c.rep)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LevelTables {
            m,
            classes,
            equivalents,
            down,
            up,
            dual_class,
            accumulator_bits: TOP_ACCUMULATOR_BITS,
        })
    }

    /// Caps per-top accumulators at `bits` instead of 192.
    pub fn with_accumulator_bits(mut self, bits: u64) -> Self {
        self.accumulator_bits = bits;
        self
    }

    pub fn base(&self) -> BaseSize {
        self.m
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn class(&self, class_index: usize) -> Result<&ClassInfo> {
        self.classes.get(class_index).ok_or_else(|| {
            Error::Lookup(format!(
                "class index {class_index} out of range for R({}) = {}",
                self.m.get(),
                self.classes.len()
            ))
        })
    }

    fn accumulator(&self) -> WideAccumulator {
        WideAccumulator::with_capacity_bits(self.accumulator_bits)
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Size in bytes of one bottom entry: `pcoeff_sum` then `valid_count`, both
/// little-endian `u64`.
pub const BOTTOM_ENTRY_BYTES: usize = 16;

/// Per-bottom results for one top, laid out as a flat transfer buffer with one
/// entry per bottom class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BottomBuffer {
    bytes: Vec<u8>,
}

impl BottomBuffer {
    fn from_entries(entries: &[PermSumResult]) -> Result<Self> {
        let mut bytes = Vec::with_capacity(entries.len() * BOTTOM_ENTRY_BYTES);
        for e in entries {
            let sum = u64::try_from(e.pcoeff_sum)
                .map_err(|_| Error::Overflow("bottom sum exceeds 64 bits".into()))?;
            bytes.extend_from_slice(&sum.to_le_bytes());
            bytes.extend_from_slice(&e.valid_count.to_le_bytes());
        }
        Ok(BottomBuffer { bytes })
    }

    pub fn len(&self) -> usize {
        self.bytes.len() / BOTTOM_ENTRY_BYTES
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn as_bytes_mut(&mut self) -> &mut [u8] {
        &mut self.bytes
    }

    pub fn entry(&self, i: usize) -> PermSumResult {
        let at = i * BOTTOM_ENTRY_BYTES;
        let word = |o: usize| u64::from_le_bytes(self.bytes[at + o..at + o + 8].try_into().unwrap());
        PermSumResult {
            pcoeff_sum: word(0) as u128,
            valid_count: word(8),
        }
    }
}

/// Computes the per-bottom results for one top.
pub fn bottom_buffer(tables: &LevelTables, alpha_class: &ClassInfo) -> Result<BottomBuffer> {
    let alpha = alpha_class.rep.truth();
    let weight = alpha.count_ones();
    let k = tables.m.get();
    let entries: Vec<PermSumResult> = tables
        .classes
        .iter()
        .zip(&tables.equivalents)
        .map(|(beta, eqs)| {
            // a relabeling keeps the weight, so lighter bottoms have nothing above α
            if beta.rep.weight() < weight {
                PermSumResult::default()
            } else {
                permutation_sum_bits(alpha, k, eqs)
            }
        })
        .collect();
    BottomBuffer::from_entries(&entries)
}

/// Folds a bottom buffer into the top's record.
pub fn reduce_bottom_buffer(
    tables: &LevelTables,
    alpha_class: &ClassInfo,
    buffer: &BottomBuffer,
) -> Result<TopRecord> {
    if buffer.len() != tables.classes.len() || !buffer.bytes.len().is_multiple_of(BOTTOM_ENTRY_BYTES) {
        return Err(Error::Shape(format!(
            "bottom buffer has {} bytes, expected {}",
            buffer.bytes.len(),
            tables.classes.len() * BOTTOM_ENTRY_BYTES
        )));
    }
    let idx = alpha_class.class_index;
    let orbit = BigUint::from(alpha_class.orbit_size);
    let mut term = tables.accumulator();
    let mut valid = tables.accumulator();
    for (b, up) in tables.up.iter().enumerate() {
        let e = buffer.entry(b);
        term.add_product(*up, e.pcoeff_sum)?;
        valid.add_u128(e.valid_count as u128)?;
    }
    term.mul(&BigUint::from(tables.down[idx]))?;
    term.mul(&orbit)?;
    valid.mul(&orbit)?;
    Ok(TopRecord {
        class_index: idx,
        rep: alpha_class.rep,
        term_value: term.into_value()?,
        valid_count: valid.into_value()?,
    })
}

/// The full class-mode summand for one top, with its weighted valid count.
pub fn compute_top_term(alpha_class: &ClassInfo, tables: &LevelTables) -> Result<TopRecord> {
    let buffer = bottom_buffer(tables, alpha_class)?;
    reduce_bottom_buffer(tables, alpha_class, &buffer)
}

/// Records for the tops in `range`, in class order.
pub fn compute_records(
    tables: &LevelTables,
    range: std::ops::Range<usize>,
    workers: usize,
) -> Result<Vec<TopRecord>> {
    if range.end > tables.classes.len() {
        return Err(Error::Config(format!(
            "top range {range:?} exceeds {} classes",
            tables.classes.len()
        )));
    }
    with_workers(workers, || {
        tables.classes[range]
            .par_iter()
            .map(|c| compute_top_term(c, tables))
            .collect::<Result<Vec<_>>>()
    })?
}

/// Class-mode total without writing a dataset.
pub fn compute_class_total(tables: &LevelTables, workers: usize) -> Result<BigUint> {
    let records = compute_records(tables, 0..tables.classes.len(), workers)?;
    let mut acc = WideAccumulator::unbounded();
    for r in &records {
        acc.add(&r.term_value)?;
    }
    acc.into_value()
}

/// Sum over all pairs `α <= β` of `D_m`.
pub fn compute_direct(m: BaseSize) -> Result<BigUint> {
    if m.get() > DIRECT_MAX_BASE {
        return Err(Error::capability(
            "direct mode",
            format!("m <= {DIRECT_MAX_BASE}, got {}", m.get()),
        ));
    }
    let k = m.get();
    let index = lattice::enumerate_mbfs(m)?;
    let mut acc = WideAccumulator::unbounded();
    for &a in index.truths() {
        let a = a as u128;
        let down = lattice::down_size_bits(a, k)?;
        for &b in index.truths() {
            let b = b as u128;
            if a & !b == 0 {
                let up = lattice::up_size_bits(b, k)?;
                let p = 1u128 << connector_count_bits(a, b, k);
                acc.add(&(BigUint::from(down) * up * p))?;
            }
        }
    }
    acc.into_value()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DedupOutcome {
    pub total: BigUint,
    /// `(top, γ)` pairs whose P-coefficient was computed.
    pub evaluated_pairs: u64,
    /// `(top, γ)` pairs class mode would compute.
    pub full_pairs: u64,
    /// `(top class, bottom class)` blocks with at least one pair, evaluated
    /// here and in class mode respectively.
    pub evaluated_blocks: u64,
    pub full_blocks: u64,
}

/// Whether block `(a, b)` is evaluated, and with which weight.
fn dedup_weight(tables: &LevelTables, a: usize, b: usize) -> Option<u32> {
    let mirror = (tables.dual_class[b], tables.dual_class[a]);
    match (a, b).cmp(&mirror) {
        std::cmp::Ordering::Less => Some(2),
        std::cmp::Ordering::Equal => Some(1),
        std::cmp::Ordering::Greater => None,
    }
}

/// Class-mode total evaluating one block of each dual pair.
///
/// Block `(A, B)` holds every pair `α ~ A`, `γ ~ B` with `α <= γ`. Dualizing
/// maps it onto block `(dual B, dual A)` term for term, so only the block with
/// the smaller class-index key is computed, with weight 2, or weight 1 when
/// the block is its own mirror.
pub fn compute_dedup(tables: &LevelTables, workers: usize) -> Result<DedupOutcome> {
    let k = tables.m.get();
    let per_top = with_workers(workers, || {
        (0..tables.classes.len())
            .into_par_iter()
            .map(|a| -> Result<(BigUint, [u64; 4])> {
                let alpha = &tables.classes[a];
                let bits = alpha.rep.truth();
                let mut acc = tables.accumulator();
                // evaluated pairs, full pairs, evaluated blocks, full blocks
                let mut counts = [0u64; 4];
                for b in 0..tables.classes.len() {
                    let eqs = &tables.equivalents[b];
                    if tables.classes[b].rep.weight() < alpha.rep.weight() {
                        continue;
                    }
                    match dedup_weight(tables, a, b) {
                        Some(w) => {
                            let ps = permutation_sum_bits(bits, k, eqs);
                            let nonempty = u64::from(ps.valid_count > 0);
                            counts[0] += ps.valid_count;
                            counts[1] += ps.valid_count;
                            counts[2] += nonempty;
                            counts[3] += nonempty;
                            acc.add_product(tables.up[b], ps.pcoeff_sum * w as u128)?;
                        }
                        None => {
                            let n = eqs.iter().filter(|&&g| bits & !g == 0).count() as u64;
                            counts[1] += n;
                            counts[3] += u64::from(n > 0);
                        }
                    }
                }
                acc.mul(&BigUint::from(tables.down[a]))?;
                acc.mul(&BigUint::from(alpha.orbit_size))?;
                Ok((acc.into_value()?, counts))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut total = WideAccumulator::unbounded();
    let mut sums = [0u64; 4];
    for (t, counts) in per_top {
        total.add(&t)?;
        for (s, c) in sums.iter_mut().zip(counts) {
            *s += c;
        }
    }
    Ok(DedupOutcome {
        total: total.into_value()?,
        evaluated_pairs: sums[0],
        full_pairs: sums[1],
        evaluated_blocks: sums[2],
        full_blocks: sums[3],
    })
}

/// Pair counters for class mode and dedup mode, without computing any
/// P-coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Workload {
    pub full_pairs: u64,
    pub dedup_pairs: u64,
    pub full_blocks: u64,
    pub dedup_blocks: u64,
}

pub fn workload(tables: &LevelTables) -> Workload {
    let mut out = Workload {
        full_pairs: 0,
        dedup_pairs: 0,
        full_blocks: 0,
        dedup_blocks: 0,
    };
    for a in 0..tables.classes.len() {
        let bits = tables.classes[a].rep.truth();
        for (b, eqs) in tables.equivalents.iter().enumerate() {
            let n = eqs.iter().filter(|&&g| bits & !g == 0).count() as u64;
            out.full_pairs += n;
            out.full_blocks += u64::from(n > 0);
            if dedup_weight(tables, a, b).is_some() {
                out.dedup_pairs += n;
                out.dedup_blocks += u64::from(n > 0);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tables(k: u8) -> LevelTables {
        LevelTables::build(BaseSize::new(k).unwrap()).unwrap()
    }

    #[test]
    fn direct_mode_small_levels() {
        let got: Vec<BigUint> = (0..=3)
            .map(|k| compute_direct(BaseSize::new(k).unwrap()).unwrap())
            .collect();
        let expect: Vec<BigUint> = (2..=5).map(|n| lattice::dedekind_number(n).unwrap()).collect();
        assert_eq!(got, expect);
        assert!(matches!(
            compute_direct(BaseSize::new(4).unwrap()),
            Err(Error::Capability { .. })
        ));
    }

    #[test]
    fn class_mode_matches_direct() {
        for k in 0..=3 {
            let t = tables(k);
            assert_eq!(
                compute_class_total(&t, 1).unwrap(),
                compute_direct(BaseSize::new(k).unwrap()).unwrap()
            );
        }
    }

    #[test]
    fn bottom_top_term_includes_every_bottom() {
        let t = tables(1);
        let bot = &t.classes()[0];
        assert_eq!(bot.rep, Mbf::bot(BaseSize::new(1).unwrap()));
        let buf = bottom_buffer(&t, bot).unwrap();
        for b in 0..buf.len() {
            assert_eq!(buf.entry(b).valid_count, t.classes()[b].orbit_size);
        }
    }

    #[test]
    fn dedup_matches_class_mode() {
        for k in 0..=4 {
            let t = tables(k);
            let d = compute_dedup(&t, 2).unwrap();
            assert_eq!(d.total, compute_class_total(&t, 2).unwrap());
            let w = workload(&t);
            assert_eq!(w.full_pairs, d.full_pairs);
            assert_eq!(w.dedup_pairs, d.evaluated_pairs);
            assert_eq!(w.full_blocks, d.full_blocks);
            assert_eq!(w.dedup_blocks, d.evaluated_blocks);
            assert!(d.evaluated_pairs <= d.full_pairs);
        }
    }

    #[test]
    fn self_mirrored_blocks_get_weight_one() {
        let t = tables(3);
        let mut selfs = 0;
        for a in 0..t.classes().len() {
            for b in 0..t.classes().len() {
                let w = dedup_weight(&t, a, b);
                let mirror = (t.dual_class[b], t.dual_class[a]);
                if (a, b) == mirror {
                    selfs += 1;
                    assert_eq!(w, Some(1));
                } else {
                    assert_ne!(w.is_some(), dedup_weight(&t, mirror.0, mirror.1).is_some());
                }
            }
        }
        assert!(selfs > 0);
    }

    #[test]
    fn tight_accumulator_overflows() {
        let t = tables(3).with_accumulator_bits(8);
        let err = compute_class_total(&t, 1).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)));
        let t = tables(3).with_accumulator_bits(8);
        assert!(matches!(compute_dedup(&t, 1), Err(Error::Overflow(_))));
    }
}
