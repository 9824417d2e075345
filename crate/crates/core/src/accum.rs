//! Checked nonnegative accumulation with a declared bit capacity.

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Capacity used for per-top accumulation.
pub const TOP_ACCUMULATOR_BITS: u64 = 192;

/// A nonnegative accumulator that refuses to exceed its declared width.
///
/// Any operation whose result would need more than `capacity` bits fails with
/// [`Error::Overflow`] and leaves the overflow flag set; later operations keep
/// failing so a poisoned value cannot leak into a total.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WideAccumulator {
    value: BigUint,
    capacity: Option<u64>,
    overflowed: bool,
}

impl WideAccumulator {
    pub fn with_capacity_bits(bits: u64) -> Self {
        WideAccumulator {
            value: BigUint::default(),
            capacity: Some(bits),
            overflowed: false,
        }
    }

    pub fn unbounded() -> Self {
        WideAccumulator {
            value: BigUint::default(),
            capacity: None,
            overflowed: false,
        }
    }

    pub fn capacity_bits(&self) -> Option<u64> {
        self.capacity
    }

    pub fn overflowed(&self) -> bool {
        self.overflowed
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn into_value(self) -> Result<BigUint> {
        self.guard()?;
        Ok(self.value)
    }

    fn guard(&self) -> Result<()> {
        if self.overflowed {
            return Err(Error::Overflow(format!(
                "accumulator exceeded {} bits",
                self.capacity.unwrap_or(0)
            )));
        }
        Ok(())
    }

    fn commit(&mut self, next: BigUint) -> Result<()> {
        if let Some(cap) = self.capacity {
            if next.bits() > cap {
                self.overflowed = true;
                return Err(Error::Overflow(format!(
                    "value needs {} bits, accumulator holds {cap}",
                    next.bits()
                )));
            }
        }
        self.value = next;
        Ok(())
    }

    pub fn add(&mut self, x: &BigUint) -> Result<()> {
        self.guard()?;
        let next = &self.value + x;
        self.commit(next)
    }

    pub fn add_u128(&mut self, x: u128) -> Result<()> {
        self.add(&BigUint::from(x))
    }

    /// Adds `a * b`.
    pub fn add_product(&mut self, a: u128, b: u128) -> Result<()> {
        self.add(&(BigUint::from(a) * b))
    }

    pub fn mul(&mut self, x: &BigUint) -> Result<()> {
        self.guard()?;
        let next = &self.value * x;
        self.commit(next)
    }
}
