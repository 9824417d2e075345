//! The lattice `D_m`: enumeration, interval sizes and pair counts.
//!
//! A function on `k` variables splits on its top variable into a pair
//! `(lo, hi)` of functions on `k-1` variables with `hi <= lo`. Enumeration
//! and interval counting both recurse on that split.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;

use crate::equiv;
use crate::error::{Error, Result};
use crate::mbf::{dual_bits, BaseSize, Mbf};

/// Largest base size whose lattice is materialized (`D(6)` = 7828354 entries).
pub const MAX_ENUMERATED: u8 = 6;

/// Levels whose interval sizes are tabulated for every element.
const TABULATED: u8 = 5;

/// Dedekind numbers `D(0)..=D(9)`.
pub const DEDEKIND: [&str; 10] = [
    "2",
    "3",
    "6",
    "20",
    "168",
    "7581",
    "7828354",
    "2414682040998",
    "56130437228687557907788",
    "286386577668298411128469151667598498812366",
];

/// Class counts `R(0)..=R(8)` under base-set relabeling.
pub const CLASS_COUNTS: [u64; 9] = [2, 3, 5, 10, 30, 210, 16353, 490013148, 1392195548889993358];

pub fn dedekind_number(n: usize) -> Option<BigUint> {
    DEDEKIND.get(n).map(|s| s.parse().expect("table entry"))
}

/// All of `D_m`, sorted ascending by truth table.
#[derive(Debug)]
pub struct LatticeIndex {
    m: BaseSize,
    truths: Vec<u64>,
}

impl LatticeIndex {
    pub fn base(&self) -> BaseSize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.truths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truths.is_empty()
    }

    pub fn truths(&self) -> &[u64] {
        &self.truths
    }

    pub fn get(&self, i: usize) -> Option<Mbf> {
        self.truths
            .get(i)
            .map(|&t| Mbf::from_truth_unchecked(self.m, t as u128))
    }

    pub fn position(&self, f: &Mbf) -> Option<usize> {
        if f.base() != self.m {
            return None;
        }
        self.position_bits(f.truth() as u64)
    }

    fn position_bits(&self, t: u64) -> Option<usize> {
        self.truths.binary_search(&t).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Mbf> + '_ {
        self.truths
            .iter()
            .map(move |&t| Mbf::from_truth_unchecked(self.m, t as u128))
    }
}

pub fn enumerate_mbfs(m: BaseSize) -> Result<Arc<LatticeIndex>> {
    if m.get() > MAX_ENUMERATED {
        return Err(Error::capability(
            "lattice enumeration",
            format!("m <= {MAX_ENUMERATED}, got {}", m.get()),
        ));
    }
    Ok(level(m.get()).clone())
}

fn level(k: u8) -> &'static Arc<LatticeIndex> {
    static LEVELS: [OnceLock<Arc<LatticeIndex>>; MAX_ENUMERATED as usize + 1] =
        [const { OnceLock::new() }; MAX_ENUMERATED as usize + 1];
    LEVELS[k as usize].get_or_init(|| {
        let m = BaseSize::new(k).expect("k <= 6");
        let truths = if k == 0 {
            vec![0, 1]
        } else {
            let prev = &level(k - 1).truths;
            let half = 1u32 << (k - 1);
            let mut out = Vec::new();
            // hi outer keeps the output sorted, since hi occupies the upper bits
            for &hi in prev {
                for &lo in prev {
                    if hi & !lo == 0 {
                        out.push(lo | hi << half);
                    }
                }
            }
            out
        };
        Arc::new(LatticeIndex { m, truths })
    })
}

/// `|[⊥, α]|` for every element of `D_k`, aligned with `level(k)`.
fn down_table(k: u8) -> &'static [u128] {
    static TABLES: [OnceLock<Vec<u128>>; TABULATED as usize + 1] =
        [const { OnceLock::new() }; TABULATED as usize + 1];
    TABLES[k as usize].get_or_init(|| {
        if k == 0 {
            return vec![1, 2];
        }
        level(k)
            .truths
            .iter()
            .map(|&t| split_count(t, k).expect("tabulated levels fit u128"))
            .collect()
    })
}

/// Counts `χ = (χ_lo, χ_hi) <= α` by summing over `χ_lo <= α_lo` the number
/// of `χ_hi <= χ_lo ∧ α_hi`, read from the level below.
fn split_count(truth: u64, k: u8) -> Result<u128> {
    let half = 1u32 << (k - 1);
    let lo = truth & ((1u64 << half) - 1);
    let hi = truth >> half;
    let below = level(k - 1);
    let table = down_table(k - 1);
    let mut sum = 0u128;
    for &chi_lo in &below.truths {
        if chi_lo & !lo == 0 {
            let pos = below
                .position_bits(chi_lo & hi)
                .expect("meet of monotone functions is monotone");
            sum = sum
                .checked_add(table[pos])
                .ok_or_else(|| Error::Overflow("interval size exceeds 128 bits".into()))?;
        }
    }
    Ok(sum)
}

pub(crate) fn down_size_bits(truth: u128, k: u8) -> Result<u128> {
    match k {
        0..=TABULATED => {
            let pos = level(k)
                .position_bits(truth as u64)
                .ok_or_else(|| Error::Invariant(format!("{truth:#x} is not in D_{k}")))?;
            Ok(down_table(k)[pos])
        }
        6 => {
            // interval sizes are relabeling invariant, so memoize by class
            static MEMO: OnceLock<Mutex<HashMap<u64, u128>>> = OnceLock::new();
            let memo = MEMO.get_or_init(Default::default);
            let key = equiv::canonical_bits(truth, 6) as u64;
            if let Some(&v) = memo.lock().expect("memo lock").get(&key) {
                return Ok(v);
            }
            let v = split_count(key, 6)?;
            memo.lock().expect("memo lock").insert(key, v);
            Ok(v)
        }
        _ => Err(Error::capability(
            "interval size",
            format!("m <= {MAX_ENUMERATED}, got {k}"),
        )),
    }
}

pub(crate) fn up_size_bits(truth: u128, k: u8) -> Result<u128> {
    down_size_bits(dual_bits(truth, k), k)
}

/// `|[⊥, α]|`.
pub fn interval_size_down(alpha: &Mbf) -> Result<BigUint> {
    down_size_bits(alpha.truth(), alpha.base().get()).map(BigUint::from)
}

/// `|[β, ⊤]|`, computed as `|[⊥, dual(β)]|`.
pub fn interval_size_up(beta: &Mbf) -> Result<BigUint> {
    up_size_bits(beta.truth(), beta.base().get()).map(BigUint::from)
}

/// Number of ordered pairs `α <= γ` in `D_m`, which is `D(m+1)`.
pub fn count_leq_pairs(m: BaseSize) -> Result<BigUint> {
    match m.get() {
        0..=5 => {
            let truths = &enumerate_mbfs(m)?.truths;
            let pairs: u64 = truths
                .iter()
                .map(|&g| truths.iter().filter(|&&a| a & !g == 0).count() as u64)
                .sum();
            Ok(BigUint::from(pairs))
        }
        6 => {
            let classes = equiv::enumerate_classes(m)?;
            let mut total = BigUint::default();
            for c in classes.iter() {
                let size = down_size_bits(c.rep.truth(), 6)?;
                total += BigUint::from(size) * c.orbit_size;
            }
            Ok(total)
        }
        k => Err(Error::capability(
            "pair counting",
            format!("m <= {MAX_ENUMERATED}, got {k}"),
        )),
    }
}
