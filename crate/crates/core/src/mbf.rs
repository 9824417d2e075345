//! Monotone Boolean functions over a base set of at most seven elements.
//!
//! A function on `m` variables is stored as its truth table packed into a
//! single `u128`: bit `S` is `f(S)`, where the index `S` encodes the subset
//! directly (bit `i` of `S` set means element `i` is in the subset). The true
//! region of a monotone function is a downset, and its maximal elements form
//! the associated antichain.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAX_BASE: u8 = 7;

/// Positions `S < 128` whose bit `i` is set, for each variable `i`.
pub(crate) const VAR_MASK: [u128; 7] = {
    let mut out = [0u128; 7];
    let mut i = 0;
    while i < 7 {
        let mut s = 0;
        while s < 128 {
            if (s >> i) & 1 == 1 {
                out[i] |= 1u128 << s;
            }
            s += 1;
        }
        i += 1;
    }
    out
};

/// Number of elements in the base set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BaseSize(u8);

impl BaseSize {
    pub fn new(m: u8) -> Result<Self> {
        if m > MAX_BASE {
            return Err(Error::capability("base size", format!("m <= {MAX_BASE}, got {m}")));
        }
        Ok(BaseSize(m))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Number of subsets, `2^m`.
    pub fn points(self) -> usize {
        1 << self.0
    }

    /// Truth mask with every subset set.
    pub fn full_truth(self) -> u128 {
        full_truth(self.0)
    }

    /// The whole base set as a point.
    pub fn full_set(self) -> PointMask {
        PointMask(((1u16 << self.0) - 1) as u8)
    }
}

pub(crate) fn full_truth(m: u8) -> u128 {
    if m == 7 {
        u128::MAX
    } else {
        (1u128 << (1u32 << m)) - 1
    }
}

/// A subset of the base set, encoded as a bitmask of its elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointMask(u8);

impl PointMask {
    pub fn new(bits: u8, m: BaseSize) -> Result<Self> {
        if (bits as usize) >= m.points() {
            return Err(Error::Shape(format!(
                "point {bits} out of range for m={}",
                m.get()
            )));
        }
        Ok(PointMask(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn is_subset_of(self, other: PointMask) -> bool {
        self.0 & !other.0 == 0
    }
}

/// Validates downward closure of an untrusted truth table.
pub fn is_monotone(truth: &[bool], m: BaseSize) -> Result<bool> {
    if truth.len() != m.points() {
        return Err(Error::Shape(format!(
            "truth table has {} entries, expected {} for m={}",
            truth.len(),
            m.points(),
            m.get()
        )));
    }
    let bits = truth
        .iter()
        .enumerate()
        .fold(0u128, |acc, (s, &t)| if t { acc | 1u128 << s } else { acc });
    Ok(is_monotone_bits(bits, m.get()))
}

pub(crate) fn is_monotone_bits(truth: u128, m: u8) -> bool {
    (0..m as usize).all(|i| (truth & VAR_MASK[i]) >> (1u32 << i) & !truth == 0)
}

/// Bits `S` of the downset that have some true strict superset `S ∪ {i}`.
fn upper_shadow(truth: u128, m: u8) -> u128 {
    (0..m as usize).fold(0, |acc, i| acc | (truth & VAR_MASK[i]) >> (1u32 << i))
}

/// Maximal true sets of a monotone truth table, as a bitset over points.
pub(crate) fn maximal_bits(truth: u128, m: u8) -> u128 {
    truth & !upper_shadow(truth, m)
}

/// Closes a set of points downward.
pub(crate) fn down_closure(bits: u128, m: u8) -> u128 {
    (0..m as usize).fold(bits, |acc, i| acc | (acc & VAR_MASK[i]) >> (1u32 << i))
}

pub(crate) fn dual_bits(truth: u128, m: u8) -> u128 {
    let width = 1u32 << m;
    let reflected = truth.reverse_bits() >> (128 - width);
    !reflected & full_truth(m)
}

/// Exchanges variables `i` and `j` in a truth table.
pub(crate) fn swap_vars(truth: u128, i: usize, j: usize) -> u128 {
    if i == j {
        return truth;
    }
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let mask = VAR_MASK[i] & !VAR_MASK[j];
    let delta = (1u32 << j) - (1u32 << i);
    let t = ((truth >> delta) ^ truth) & mask;
    truth ^ t ^ (t << delta)
}

/// A monotone Boolean function.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mbf {
    m: BaseSize,
    truth: u128,
}

impl Mbf {
    pub fn from_truth(m: BaseSize, truth: u128) -> Result<Self> {
        if truth & !m.full_truth() != 0 {
            return Err(Error::Shape(format!(
                "truth table {truth:#x} has bits beyond 2^{}",
                m.get()
            )));
        }
        if !is_monotone_bits(truth, m.get()) {
            return Err(Error::Invariant(format!(
                "truth table {truth:#x} is not downward closed"
            )));
        }
        Ok(Mbf { m, truth })
    }

    pub fn from_bools(m: BaseSize, truth: &[bool]) -> Result<Self> {
        if !is_monotone(truth, m)? {
            return Err(Error::Invariant("truth table is not downward closed".into()));
        }
        let bits = truth
            .iter()
            .enumerate()
            .fold(0u128, |acc, (s, &t)| if t { acc | 1u128 << s } else { acc });
        Ok(Mbf { m, truth: bits })
    }

    /// Caller guarantees the bits are monotone and in range.
    pub(crate) fn from_truth_unchecked(m: BaseSize, truth: u128) -> Self {
        debug_assert!(truth & !m.full_truth() == 0 && is_monotone_bits(truth, m.get()));
        Mbf { m, truth }
    }

    pub fn bot(m: BaseSize) -> Self {
        Mbf { m, truth: 0 }
    }

    pub fn top(m: BaseSize) -> Self {
        Mbf {
            m,
            truth: m.full_truth(),
        }
    }

    pub fn base(&self) -> BaseSize {
        self.m
    }

    pub fn truth(&self) -> u128 {
        self.truth
    }

    pub fn eval(&self, x: PointMask) -> bool {
        (self.truth >> x.0) & 1 == 1
    }

    /// Number of subsets on which the function is true.
    pub fn weight(&self) -> u32 {
        self.truth.count_ones()
    }

    fn same_base(&self, other: &Mbf) -> Result<()> {
        if self.m != other.m {
            return Err(Error::Shape(format!(
                "base sizes differ: m={} vs m={}",
                self.m.get(),
                other.m.get()
            )));
        }
        Ok(())
    }

    pub fn leq(&self, other: &Mbf) -> Result<bool> {
        self.same_base(other)?;
        Ok(self.truth & !other.truth == 0)
    }

    pub fn join(&self, other: &Mbf) -> Result<Mbf> {
        self.same_base(other)?;
        Ok(Mbf {
            m: self.m,
            truth: self.truth | other.truth,
        })
    }

    pub fn meet(&self, other: &Mbf) -> Result<Mbf> {
        self.same_base(other)?;
        Ok(Mbf {
            m: self.m,
            truth: self.truth & other.truth,
        })
    }

    /// `dual(f)(S) = !f(A \ S)`. Order reversing involution.
    pub fn dual(&self) -> Mbf {
        Mbf {
            m: self.m,
            truth: dual_bits(self.truth, self.m.get()),
        }
    }

    pub fn to_antichain(&self) -> AntiChain {
        let max = maximal_bits(self.truth, self.m.get());
        AntiChain {
            m: self.m,
            elems: bit_positions(max).map(PointMask).collect(),
        }
    }

    pub fn from_antichain(ac: &AntiChain) -> Mbf {
        let bits = ac.elems.iter().fold(0u128, |acc, p| acc | 1u128 << p.0);
        Mbf {
            m: ac.m,
            truth: down_closure(bits, ac.m.get()),
        }
    }

    /// Relabels the base set: the result maps `p(S)` to `f(S)`.
    pub fn apply_permutation(&self, p: &Permutation) -> Result<Mbf> {
        if p.base() != self.m {
            return Err(Error::Shape(format!(
                "permutation on {} elements applied to m={}",
                p.map.len(),
                self.m.get()
            )));
        }
        let truth = bit_positions(self.truth)
            .fold(0u128, |acc, s| acc | 1u128 << p.apply_point_bits(s));
        Ok(Mbf { m: self.m, truth })
    }

    fn hex_width(m: BaseSize) -> usize {
        (m.points() / 4).max(1)
    }
}

pub(crate) fn bit_positions(bits: u128) -> impl Iterator<Item = u8> {
    let mut rest = bits;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let p = rest.trailing_zeros() as u8;
            rest &= rest - 1;
            Some(p)
        }
    })
}

impl fmt::Display for Mbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "m={}:{:0width$x}",
            self.m.get(),
            self.truth,
            width = Mbf::hex_width(self.m)
        )
    }
}

impl fmt::Debug for Mbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mbf({self} {})", self.to_antichain())
    }
}

impl FromStr for Mbf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Shape(format!("expected `m=<m>:<hex>`, got {s:?}"));
        let rest = s.strip_prefix("m=").ok_or_else(bad)?;
        let (m, hex) = rest.split_once(':').ok_or_else(bad)?;
        let m = BaseSize::new(m.parse().map_err(|_| bad())?)?;
        if hex.len() != Mbf::hex_width(m)
            || !hex.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
        {
            return Err(bad());
        }
        let truth = u128::from_str_radix(hex, 16).map_err(|_| bad())?;
        Mbf::from_truth(m, truth)
    }
}

/// Pairwise incomparable subsets, stored ascending by mask value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AntiChain {
    m: BaseSize,
    elems: Vec<PointMask>,
}

impl AntiChain {
    pub fn new(m: BaseSize, elems: impl IntoIterator<Item = PointMask>) -> Result<Self> {
        let mut elems: Vec<PointMask> = elems.into_iter().collect();
        for p in &elems {
            if (p.0 as usize) >= m.points() {
                return Err(Error::Shape(format!(
                    "point {} out of range for m={}",
                    p.0,
                    m.get()
                )));
            }
        }
        elems.sort_unstable();
        elems.dedup();
        for (i, a) in elems.iter().enumerate() {
            for b in &elems[i + 1..] {
                if a.is_subset_of(*b) || b.is_subset_of(*a) {
                    return Err(Error::Invariant(format!(
                        "antichain elements {} and {} are comparable",
                        a.0, b.0
                    )));
                }
            }
        }
        Ok(AntiChain { m, elems })
    }

    pub fn from_masks(m: BaseSize, masks: &[u8]) -> Result<Self> {
        let points = masks
            .iter()
            .map(|&b| PointMask::new(b, m))
            .collect::<Result<Vec<_>>>()?;
        AntiChain::new(m, points)
    }

    pub fn base(&self) -> BaseSize {
        self.m
    }

    pub fn elems(&self) -> &[PointMask] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Parses `{a,b,...}` with decimal masks.
    pub fn parse(m: BaseSize, s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::Shape(format!("expected `{{...}}`, got {s:?}")))?;
        let masks = inner
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u8>()
                    .map_err(|_| Error::Shape(format!("bad mask {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        AntiChain::from_masks(m, &masks)
    }
}

impl fmt::Display for AntiChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.elems.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", p.0)?;
        }
        f.write_str("}")
    }
}

/// A bijection on the base elements `{0..m-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    map: Vec<u8>,
}

impl Permutation {
    pub fn new(map: Vec<u8>) -> Result<Self> {
        BaseSize::new(map.len() as u8)?;
        let mut seen = 0u8;
        for &x in &map {
            if x as usize >= map.len() || seen >> x & 1 == 1 {
                return Err(Error::Invariant(format!("{map:?} is not a bijection")));
            }
            seen |= 1 << x;
        }
        Ok(Permutation { map })
    }

    pub fn identity(m: BaseSize) -> Self {
        Permutation {
            map: (0..m.get()).collect(),
        }
    }

    pub fn transposition(m: BaseSize, i: u8, j: u8) -> Result<Self> {
        let mut map: Vec<u8> = (0..m.get()).collect();
        if i >= m.get() || j >= m.get() {
            return Err(Error::Shape(format!("transposition ({i} {j}) outside m={}", m.get())));
        }
        map.swap(i as usize, j as usize);
        Ok(Permutation { map })
    }

    /// All `m!` permutations in lexicographic order of their maps.
    pub fn all(m: BaseSize) -> Vec<Permutation> {
        fn rec(prefix: &mut Vec<u8>, used: u8, n: u8, out: &mut Vec<Permutation>) {
            if prefix.len() == n as usize {
                out.push(Permutation { map: prefix.clone() });
                return;
            }
            for x in 0..n {
                if used >> x & 1 == 0 {
                    prefix.push(x);
                    rec(prefix, used | 1 << x, n, out);
                    prefix.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), 0, m.get(), &mut out);
        out
    }

    pub fn base(&self) -> BaseSize {
        BaseSize(self.map.len() as u8)
    }

    pub fn map(&self) -> &[u8] {
        &self.map
    }

    pub fn apply_point(&self, x: PointMask) -> PointMask {
        PointMask(self.apply_point_bits(x.0))
    }

    fn apply_point_bits(&self, x: u8) -> u8 {
        self.map
            .iter()
            .enumerate()
            .filter(|(i, _)| x >> i & 1 == 1)
            .fold(0, |acc, (_, &to)| acc | 1 << to)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.map.len() != other.map.len() {
            return Err(Error::Shape("composing permutations of different sizes".into()));
        }
        Ok(Permutation {
            map: other.map.iter().map(|&x| self.map[x as usize]).collect(),
        })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u8; self.map.len()];
        for (i, &x) in self.map.iter().enumerate() {
            inv[x as usize] = i as u8;
        }
        Permutation { map: inv }
    }
}
