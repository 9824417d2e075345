//! Equivalence classes of monotone functions under relabeling of the base set.
//!
//! The canonical representative of a class is the image with the smallest
//! truth table (as an integer) over all `m!` relabelings. Images are produced
//! by a Heap's-algorithm sweep, which reaches every relabeling through a
//! chain of single variable swaps.

use std::ops::ControlFlow;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice;
use crate::mbf::{swap_vars, BaseSize, Mbf, MAX_BASE};

/// Variable swaps that, applied in order to a truth table, visit all `m!`
/// relabelings of it (the starting table counts as the first).
fn swap_sequence(m: u8) -> &'static [(u8, u8)] {
    static SEQS: [OnceLock<Vec<(u8, u8)>>; MAX_BASE as usize + 1] =
        [const { OnceLock::new() }; MAX_BASE as usize + 1];
    SEQS[m as usize].get_or_init(|| {
        let n = m as usize;
        let mut out = Vec::new();
        let mut c = vec![0usize; n];
        let mut i = 1;
        while i < n {
            if c[i] < i {
                let j = if i % 2 == 0 { 0 } else { c[i] };
                out.push((j as u8, i as u8));
                c[i] += 1;
                i = 1;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        out
    })
}

/// Calls `visit` on every relabeled image of `truth`, starting with `truth`
/// itself. Images repeat when the function has a nontrivial stabilizer.
pub(crate) fn for_each_image<B>(
    truth: u128,
    m: u8,
    mut visit: impl FnMut(u128) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let mut cur = truth;
    visit(cur)?;
    for &(i, j) in swap_sequence(m) {
        cur = swap_vars(cur, i as usize, j as usize);
        visit(cur)?;
    }
    ControlFlow::Continue(())
}

pub(crate) fn canonical_bits(truth: u128, m: u8) -> u128 {
    let mut best = truth;
    let _ = for_each_image::<()>(truth, m, |img| {
        best = best.min(img);
        ControlFlow::Continue(())
    });
    best
}

/// True iff no relabeling yields a smaller truth table. Exits on the first
/// smaller image, which for most non-canonical inputs comes early.
pub(crate) fn is_canonical_bits(truth: u128, m: u8) -> bool {
    for_each_image(truth, m, |img| {
        if img < truth {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .is_continue()
}

pub(crate) fn distinct_image_bits(truth: u128, m: u8) -> Vec<u128> {
    let mut out = Vec::with_capacity(factorial(m) as usize);
    let _ = for_each_image::<()>(truth, m, |img| {
        out.push(img);
        ControlFlow::Continue(())
    });
    out.sort_unstable();
    out.dedup();
    out
}

pub fn factorial(m: u8) -> u64 {
    (1..=m as u64).product()
}

pub fn canonicalize(f: &Mbf) -> Mbf {
    Mbf::from_truth_unchecked(f.base(), canonical_bits(f.truth(), f.base().get()))
}

/// Number of distinct relabelings of `f`.
pub fn orbit_size(f: &Mbf) -> u64 {
    distinct_image_bits(f.truth(), f.base().get()).len() as u64
}

/// The distinct relabelings of `f`, ascending by truth table.
pub fn distinct_equivalents(f: &Mbf) -> Vec<Mbf> {
    distinct_image_bits(f.truth(), f.base().get())
        .into_iter()
        .map(|t| Mbf::from_truth_unchecked(f.base(), t))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassInfo {
    pub rep: Mbf,
    pub orbit_size: u64,
    pub class_index: usize,
}

/// All equivalence classes of `D_m`, ordered by representative truth table.
///
/// Built by scanning the lattice and keeping canonical elements; results are
/// cached per base size.
pub fn enumerate_classes(m: BaseSize) -> Result<Arc<Vec<ClassInfo>>> {
    if m.get() > lattice::MAX_ENUMERATED {
        return Err(Error::capability(
            "class enumeration",
            format!("m <= {}, got {}", lattice::MAX_ENUMERATED, m.get()),
        ));
    }
    static CACHE: [OnceLock<Arc<Vec<ClassInfo>>>; lattice::MAX_ENUMERATED as usize + 1] =
        [const { OnceLock::new() }; lattice::MAX_ENUMERATED as usize + 1];
    let index = lattice::enumerate_mbfs(m)?;
    Ok(CACHE[m.get() as usize]
        .get_or_init(|| {
            let k = m.get();
            let reps: Vec<u128> = index
                .truths()
                .par_iter()
                .map(|&t| t as u128)
                .filter(|&t| is_canonical_bits(t, k))
                .collect();
            let classes = reps
                .par_iter()
                .enumerate()
                .map(|(class_index, &t)| ClassInfo {
                    rep: Mbf::from_truth_unchecked(m, t),
                    orbit_size: distinct_image_bits(t, k).len() as u64,
                    class_index,
                })
                .collect();
            Arc::new(classes)
        })
        .clone())
}

/// Index of the class containing `f` within `classes`.
pub fn class_of(classes: &[ClassInfo], f: &Mbf) -> Option<usize> {
    let canon = canonical_bits(f.truth(), f.base().get());
    classes
        .binary_search_by(|c| c.rep.truth().cmp(&canon))
        .ok()
}
