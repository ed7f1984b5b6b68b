//! Maclaurin series for `e^x` with cached terms.
//!
//! Terms are produced once per input by the recurrence `T_k = T_{k-1} * x / k`
//! and shared by every consumer: `e^x` sums them, `e^{-x}` sums them with
//! alternating signs. A fault written into a cached term therefore reaches the
//! baseline and the checker alike.
//!
//! Each term is held as an [`Extended`] value. Its high word is the 64-bit
//! IEEE-754 register that fault models act on; the low word carries the
//! rounding residue of the recurrence and is left untouched by bit faults.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extended::Extended;
use crate::float_bits::FloatWord;

/// Default input saturation bounds.
pub const CLIP_LO: f64 = -3.0;
pub const CLIP_HI: f64 = 3.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("term count must be at least 1")]
    NoTerms,
    #[error("series input must be finite, got {0}")]
    NonFiniteInput(f64),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("clip bounds must satisfy lo < hi, got [{0}, {1}]")]
    InvalidClip(f64, f64),
    #[error("term index {index} out of range for {len} terms")]
    TermIndex { index: usize, len: usize },
}

/// Term count, round-off threshold and input clipping for one function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSettings {
    pub term_count: usize,
    pub epsilon: f64,
    pub clip_lo: f64,
    pub clip_hi: f64,
}

impl SeriesSettings {
    pub fn new(term_count: usize, epsilon: f64) -> Result<Self, SeriesError> {
        Self {
            term_count,
            epsilon,
            clip_lo: CLIP_LO,
            clip_hi: CLIP_HI,
        }
        .validated()
    }

    pub fn with_clip(self, lo: f64, hi: f64) -> Result<Self, SeriesError> {
        Self {
            clip_lo: lo,
            clip_hi: hi,
            ..self
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, SeriesError> {
        if self.term_count == 0 {
            return Err(SeriesError::NoTerms);
        }
        // +inf is a legal threshold: nothing finite exceeds it.
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(SeriesError::InvalidEpsilon(self.epsilon));
        }
        if self.clip_lo.is_nan() || self.clip_hi.is_nan() || self.clip_lo >= self.clip_hi {
            return Err(SeriesError::InvalidClip(self.clip_lo, self.clip_hi));
        }
        Ok(self)
    }

    pub fn clip(&self, x: f64) -> f64 {
        clip_by_value(x, self.clip_lo, self.clip_hi)
    }
}

/// Saturates `x` to `[lo, hi]`. NaN passes through unchanged.
pub fn clip_by_value(x: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Which exponential a sum over the cached terms produces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SeriesSign {
    /// `sum T_k`, i.e. `e^x`.
    Positive,
    /// `sum (-1)^k T_k`, i.e. `e^{-x}`.
    Negative,
}

/// Cached terms `T_0 .. T_{n-1}` of the Maclaurin series of `e^x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesContext {
    x: f64,
    terms: Vec<Extended>,
}

/// Builds the first `n` terms of `sum x^k / k!` with one multiply and one
/// divide per term.
pub fn maclaurin_terms(x: f64, n: usize) -> Result<SeriesContext, SeriesError> {
    if n == 0 {
        return Err(SeriesError::NoTerms);
    }
    if !x.is_finite() {
        return Err(SeriesError::NonFiniteInput(x));
    }
    let mut terms = Vec::with_capacity(n);
    let mut term = Extended::ONE;
    terms.push(term);
    for k in 1..n {
        term = term.mul_f64(x).div_f64(k as f64);
        terms.push(term);
    }
    Ok(SeriesContext { x, terms })
}

impl SeriesContext {
    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn term(&self, k: usize) -> Extended {
        self.terms[k]
    }

    /// Terms rounded to binary64.
    pub fn term_values(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.to_f64()).collect()
    }

    /// The 64-bit register holding term `k`.
    pub fn register(&self, k: usize) -> FloatWord {
        FloatWord::from_f64(self.terms[k].hi())
    }

    fn check_index(&self, k: usize) -> Result<(), SeriesError> {
        if k < self.terms.len() {
            Ok(())
        } else {
            Err(SeriesError::TermIndex {
                index: k,
                len: self.terms.len(),
            })
        }
    }

    /// Overwrites the register of term `k`, keeping its low-order residue.
    pub fn set_register(&mut self, k: usize, word: FloatWord) -> Result<(), SeriesError> {
        self.check_index(k)?;
        let lo = self.terms[k].lo();
        self.terms[k] = Extended::from_parts(word.value(), lo);
        Ok(())
    }

    /// Replaces term `k` entirely with the value encoded by `word`.
    pub fn replace_term(&mut self, k: usize, word: FloatWord) -> Result<(), SeriesError> {
        self.check_index(k)?;
        self.terms[k] = Extended::from_f64(word.value());
        Ok(())
    }

    /// Removes term `k` from every sum.
    pub fn clear_term(&mut self, k: usize) -> Result<(), SeriesError> {
        self.check_index(k)?;
        self.terms[k] = Extended::ZERO;
        Ok(())
    }

    /// Sum over the cached terms in ascending `k`, at full internal precision.
    pub fn sum_extended(&self, sign: SeriesSign) -> Extended {
        self.terms
            .iter()
            .enumerate()
            .fold(Extended::ZERO, |acc, (k, &t)| match sign {
                SeriesSign::Negative if k % 2 == 1 => acc - t,
                _ => acc + t,
            })
    }
}

/// `e^x` (positive) or `e^{-x}` (negative) from the cached terms.
pub fn sum_exp(ctx: &SeriesContext, sign: SeriesSign) -> f64 {
    ctx.sum_extended(sign).to_f64()
}
