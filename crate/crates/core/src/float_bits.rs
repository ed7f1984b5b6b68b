//! Bit-level view of IEEE-754 binary64 values.
//!
//! Every fault model in this crate is expressed as an operation on the raw
//! 64-bit pattern of a double. Bit 0 is the least significant significand
//! bit, bits 52..=62 hold the biased exponent and bit 63 is the sign.

use std::fmt;

use rand::Rng;
use thiserror::Error;

pub const SIGN_BIT: u32 = 63;
pub const EXPONENT_BITS: u32 = 11;
pub const SIGNIFICAND_BITS: u32 = 52;

const EXPONENT_MASK: u64 = 0x7FF0_0000_0000_0000;
const SIGNIFICAND_MASK: u64 = 0x000F_FFFF_FFFF_FFFF;
const EXPONENT_ALL_ONES: u16 = 0x7FF;

/// Attempts made by [`random_finite`] before it forces a finite exponent.
pub const RANDOM_FINITE_ATTEMPTS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitsError {
    #[error("bit index {0} is outside 0..=63")]
    IndexOutOfRange(u32),
    #[error("bit index {0} appears more than once")]
    DuplicateIndex(u32),
    #[error("exponent field {0:#x} does not fit in 11 bits")]
    ExponentOverflow(u16),
    #[error("significand field {0:#x} does not fit in 52 bits")]
    SignificandOverflow(u64),
}

/// A 64-bit IEEE-754 double viewed as its raw bit pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct FloatWord(u64);

/// The three fields of a [`FloatWord`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FloatFields {
    pub sign: bool,
    pub exponent: u16,
    pub significand: u64,
}

impl FloatWord {
    pub const fn from_bits(raw: u64) -> Self {
        Self(raw)
    }

    pub fn from_f64(value: f64) -> Self {
        Self(value.to_bits())
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from_bits(self.0)
    }

    pub const fn sign(self) -> bool {
        self.0 >> SIGN_BIT != 0
    }

    pub const fn exponent(self) -> u16 {
        ((self.0 & EXPONENT_MASK) >> SIGNIFICAND_BITS) as u16
    }

    pub const fn significand(self) -> u64 {
        self.0 & SIGNIFICAND_MASK
    }

    pub const fn decompose(self) -> FloatFields {
        FloatFields {
            sign: self.sign(),
            exponent: self.exponent(),
            significand: self.significand(),
        }
    }

    pub fn compose(fields: FloatFields) -> Result<Self, BitsError> {
        if fields.exponent > EXPONENT_ALL_ONES {
            return Err(BitsError::ExponentOverflow(fields.exponent));
        }
        if fields.significand > SIGNIFICAND_MASK {
            return Err(BitsError::SignificandOverflow(fields.significand));
        }
        Ok(Self(
            (u64::from(fields.sign) << SIGN_BIT)
                | (u64::from(fields.exponent) << SIGNIFICAND_BITS)
                | fields.significand,
        ))
    }

    /// True unless the exponent field is all ones (NaN or infinity).
    pub const fn is_finite(self) -> bool {
        self.exponent() != EXPONENT_ALL_ONES
    }
}

impl From<f64> for FloatWord {
    fn from(value: f64) -> Self {
        Self::from_f64(value)
    }
}

impl fmt::Debug for FloatWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FloatWord({:016x} = {:e})", self.0, self.value())
    }
}

impl fmt::Display for FloatWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// A set of distinct bit positions in `0..=63`, stored as a mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BitIndexSet(u64);

impl BitIndexSet {
    pub const EMPTY: Self = Self(0);
    pub const ALL: Self = Self(u64::MAX);

    pub fn from_indices<I>(indices: I) -> Result<Self, BitsError>
    where
        I: IntoIterator<Item = u32>,
    {
        let mut mask = 0u64;
        for index in indices {
            if index > SIGN_BIT {
                return Err(BitsError::IndexOutOfRange(index));
            }
            let bit = 1u64 << index;
            if mask & bit != 0 {
                return Err(BitsError::DuplicateIndex(index));
            }
            mask |= bit;
        }
        Ok(Self(mask))
    }

    pub const fn from_mask(mask: u64) -> Self {
        Self(mask)
    }

    /// Consecutive run `start, start + 1, ...` of at most `len` bits,
    /// truncated at the sign bit rather than wrapping.
    pub fn run(start: u32, len: u32) -> Result<Self, BitsError> {
        if start > SIGN_BIT {
            return Err(BitsError::IndexOutOfRange(start));
        }
        let end = start.saturating_add(len).min(64);
        Self::from_indices(start..end)
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, index: u32) -> bool {
        index <= SIGN_BIT && self.0 & (1 << index) != 0
    }

    pub const fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = u32> {
        (0..64u32).filter(move |&i| self.0 & (1 << i) != 0)
    }
}

impl fmt::Debug for BitIndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Inverts the selected bits.
pub fn flip_bits(word: FloatWord, bits: BitIndexSet) -> FloatWord {
    FloatWord(word.0 ^ bits.0)
}

/// Level a stuck-at fault forces its bits to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StuckLevel {
    Zero,
    One,
}

pub fn stuck_at(word: FloatWord, bits: BitIndexSet, level: StuckLevel) -> FloatWord {
    match level {
        StuckLevel::One => FloatWord(word.0 | bits.0),
        StuckLevel::Zero => FloatWord(word.0 & !bits.0),
    }
}

/// Uniformly random bit pattern that encodes a finite double.
///
/// Patterns with an all-ones exponent are redrawn. After
/// [`RANDOM_FINITE_ATTEMPTS`] rejections the last draw has its top exponent
/// bit cleared, which always yields a finite value.
pub fn random_finite<R: Rng + ?Sized>(rng: &mut R) -> FloatWord {
    let mut raw = 0u64;
    for _ in 0..RANDOM_FINITE_ATTEMPTS {
        raw = rng.next_u64();
        if FloatWord(raw).is_finite() {
            return FloatWord(raw);
        }
    }
    FloatWord(raw & !(1u64 << 62))
}
