//! Connector numbers and P-coefficients.
//!
//! For `α <= γ`, the graph has one node per maximal set `X` of `γ` with
//! `α(X) = false`; nodes `X` and `Y` are adjacent when `α(X ∩ Y) = false`.
//! Its component count `C` gives `2^C`, the number of pairs `(χ, υ)` with
//! `χ ∨ υ = γ` and `χ ∧ υ = α`.

use num_bigint::BigUint;

use crate::equiv::{distinct_image_bits, ClassInfo};
use crate::error::{Error, Result};
use crate::lattice;
use crate::mbf::{bit_positions, maximal_bits, Mbf, PointMask};

/// Width of the largest antichain on seven elements, `C(7,3)`.
const MAX_NODES: usize = 35;

/// Largest base size for the exhaustive solution-pair oracle.
pub const ORACLE_MAX_BASE: u8 = 4;

#[derive(Clone, Debug)]
pub struct ConnectorGraph {
    nodes: Vec<PointMask>,
    alpha: Mbf,
}

impl ConnectorGraph {
    pub fn new(alpha: &Mbf, gamma: &Mbf) -> Result<Self> {
        check_pair(alpha, gamma)?;
        let m = gamma.base();
        let bits = maximal_bits(gamma.truth(), m.get()) & !alpha.truth();
        let nodes = bit_positions(bits)
            .map(|b| PointMask::new(b, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConnectorGraph {
            nodes,
            alpha: *alpha,
        })
    }

    pub fn nodes(&self) -> &[PointMask] {
        &self.nodes
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let meet = self.nodes[i].bits() & self.nodes[j].bits();
        (self.alpha.truth() >> meet) & 1 == 0
    }

    /// Component label per node: the index of the lowest node in its component.
    #[allow(clippy::needless_range_loop)]
    pub fn components(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut label = vec![usize::MAX; n];
        for seed in 0..n {
            if label[seed] != usize::MAX {
                continue;
            }
            label[seed] = seed;
            let mut stack = vec![seed];
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if label[j] == usize::MAX && self.adjacent(i, j) {
                        label[j] = seed;
                        stack.push(j);
                    }
                }
            }
        }
        label
    }

    pub fn component_count(&self) -> u32 {
        let labels = self.components();
        labels.iter().enumerate().filter(|&(i, &l)| i == l).count() as u32
    }
}

fn check_pair(alpha: &Mbf, gamma: &Mbf) -> Result<()> {
    if !alpha.leq(gamma)? {
        return Err(Error::Invariant(format!("{alpha} is not below {gamma}")));
    }
    Ok(())
}

/// Component count by bitmask flood fill. Requires `alpha <= gamma`.
pub(crate) fn connector_count_bits(alpha: u128, gamma: u128, m: u8) -> u32 {
    let mut nodes = [0u8; MAX_NODES];
    let mut n = 0;
    for x in bit_positions(maximal_bits(gamma, m) & !alpha) {
        nodes[n] = x;
        n += 1;
    }
    let mut remaining: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut count = 0;
    while remaining != 0 {
        let seed = remaining.trailing_zeros();
        remaining &= !(1u64 << seed);
        let mut frontier = 1u64 << seed;
        while frontier != 0 {
            let i = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let xi = nodes[i];
            let mut cand = remaining;
            while cand != 0 {
                let j = cand.trailing_zeros();
                cand &= cand - 1;
                if (alpha >> (xi & nodes[j as usize])) & 1 == 0 {
                    remaining &= !(1u64 << j);
                    frontier |= 1u64 << j;
                }
            }
        }
        count += 1;
    }
    count
}

/// Connector number `C_{α,γ}`. Fails unless `alpha <= gamma`.
pub fn connector_count(alpha: &Mbf, gamma: &Mbf) -> Result<u32> {
    check_pair(alpha, gamma)?;
    Ok(connector_count_bits(
        alpha.truth(),
        gamma.truth(),
        alpha.base().get(),
    ))
}

/// `2^C_{α,γ}`.
pub fn pcoeff_value(alpha: &Mbf, gamma: &Mbf) -> Result<BigUint> {
    Ok(BigUint::from(1u32) << connector_count(alpha, gamma)?)
}

/// Counts pairs `(χ, υ)` with `χ ∨ υ = β` and `χ ∧ υ = α` by scanning
/// `[α, β] × [α, β]`.
pub fn solution_count_oracle(alpha: &Mbf, beta: &Mbf) -> Result<BigUint> {
    let m = alpha.base();
    if m.get() > ORACLE_MAX_BASE {
        return Err(Error::capability(
            "solution-count oracle",
            format!("m <= {ORACLE_MAX_BASE}, got {}", m.get()),
        ));
    }
    if !alpha.leq(beta)? {
        return Ok(BigUint::default());
    }
    let interval: Vec<u128> = lattice::enumerate_mbfs(m)?
        .truths()
        .iter()
        .map(|&t| t as u128)
        .filter(|&t| alpha.truth() & !t == 0 && t & !beta.truth() == 0)
        .collect();
    let mut count = 0u64;
    for &x in &interval {
        for &y in &interval {
            if x | y == beta.truth() && x & y == alpha.truth() {
                count += 1;
            }
        }
    }
    Ok(BigUint::from(count))
}

/// Sum of `2^C_{α,γ}` over the relabelings `γ` of one class that lie above `α`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PermSumResult {
    /// Below `5040 * 2^35`, so 128 bits never overflow.
    pub pcoeff_sum: u128,
    pub valid_count: u64,
}

pub(crate) fn permutation_sum_bits(alpha: u128, m: u8, equivalents: &[u128]) -> PermSumResult {
    let mut out = PermSumResult::default();
    for &gamma in equivalents {
        if alpha & !gamma == 0 {
            out.pcoeff_sum += 1u128 << connector_count_bits(alpha, gamma, m);
            out.valid_count += 1;
        }
    }
    out
}

/// Iterates the distinct equivalents of `beta_class.rep`, each with weight one.
pub fn permutation_sum(alpha: &Mbf, beta_class: &ClassInfo) -> Result<PermSumResult> {
    let rep = &beta_class.rep;
    alpha.leq(rep).map(|_| ())?;
    let m = rep.base().get();
    Ok(permutation_sum_bits(
        alpha.truth(),
        m,
        &distinct_image_bits(rep.truth(), m),
    ))
}
