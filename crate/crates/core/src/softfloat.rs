//! Software model of a single-precision arithmetic datapath.
//!
//! The multiplier and adder follow the usual unpack, operate exactly,
//! normalise and round-to-nearest-even pipeline. Subnormal operands and
//! results are flushed to signed zero. Division uses a Newton-Raphson
//! reciprocal whose iterations run at the multiplier's 48-bit internal
//! width; only the final quotient is rounded to single precision.

use std::fmt;

use thiserror::Error;

const BIAS: i32 = 127;
const FRACTION_BITS: u32 = 23;
/// Significand width including the implicit bit.
const PRECISION: u32 = 24;
/// Width of the multiplier's internal product, used for the reciprocal.
const WIDE_PRECISION: u32 = 48;
const EXP_MAX: u32 = 0xFF;
const QUIET_NAN: u32 = 0x7FC0_0000;
const NEWTON_ITERATIONS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SoftFloatError {
    #[error("negate index {0} is outside 0..5")]
    NegateIndex(usize),
    #[error("divisor significand {0} is outside [1, 2)")]
    NotNormalized(f32),
}

/// Raw IEEE-754 binary32 pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Float32Word(u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Float32Fields {
    pub sign: bool,
    pub exponent: u8,
    pub fraction: u32,
}

impl Float32Word {
    pub const ZERO: Self = Self(0);
    pub const ONE: Self = Self(0x3F80_0000);

    pub const fn from_bits(raw: u32) -> Self {
        Self(raw)
    }

    pub fn from_f32(v: f32) -> Self {
        Self(v.to_bits())
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f32 {
        f32::from_bits(self.0)
    }

    pub const fn sign(self) -> bool {
        self.0 >> 31 != 0
    }

    pub const fn exponent(self) -> u8 {
        ((self.0 >> FRACTION_BITS) & EXP_MAX) as u8
    }

    pub const fn fraction(self) -> u32 {
        self.0 & ((1 << FRACTION_BITS) - 1)
    }

    pub const fn decompose(self) -> Float32Fields {
        Float32Fields {
            sign: self.sign(),
            exponent: self.exponent(),
            fraction: self.fraction(),
        }
    }

    /// Returns `None` when the fraction does not fit in 23 bits.
    pub const fn compose(f: Float32Fields) -> Option<Self> {
        if f.fraction >> FRACTION_BITS != 0 {
            return None;
        }
        Some(Self(
            ((f.sign as u32) << 31) | ((f.exponent as u32) << FRACTION_BITS) | f.fraction,
        ))
    }

    pub fn is_nan(self) -> bool {
        self.exponent() as u32 == EXP_MAX && self.fraction() != 0
    }

    pub fn negate(self) -> Self {
        Self(self.0 ^ 0x8000_0000)
    }
}

impl From<f32> for Float32Word {
    fn from(v: f32) -> Self {
        Self::from_f32(v)
    }
}

impl fmt::Debug for Float32Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Float32Word({:08x} = {:e})", self.0, self.value())
    }
}

impl fmt::Display for Float32Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08x}", self.0)
    }
}

/// Finite non-zero value `(-1)^sign * sig * 2^exp`, `sig` normalised to
/// exactly `width` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Unpacked {
    sign: bool,
    exp: i32,
    sig: u64,
}

enum Class {
    Nan,
    Inf(bool),
    Zero(bool),
    Finite(Unpacked),
}

fn classify(w: Float32Word) -> Class {
    let sign = w.sign();
    match (w.exponent() as u32, w.fraction()) {
        (EXP_MAX, 0) => Class::Inf(sign),
        (EXP_MAX, _) => Class::Nan,
        // Subnormals are flushed.
        (0, _) => Class::Zero(sign),
        (e, f) => Class::Finite(Unpacked {
            sign,
            exp: e as i32 - BIAS - FRACTION_BITS as i32,
            sig: u64::from(f | (1 << FRACTION_BITS)),
        }),
    }
}

fn bit_length(v: u128) -> u32 {
    128 - v.leading_zeros()
}

/// Rounds `sign * mag * 2^exp` to `width` significant bits, ties to even.
/// `mag` must be non-zero.
fn round_to(sign: bool, mag: u128, exp: i32, width: u32) -> Unpacked {
    debug_assert!(mag != 0 && width <= 64);
    let len = bit_length(mag);
    if len <= width {
        let shift = width - len;
        return Unpacked {
            sign,
            exp: exp - shift as i32,
            sig: (mag << shift) as u64,
        };
    }
    let drop = len - width;
    let kept = mag >> drop;
    let rest = mag & ((1u128 << drop) - 1);
    let half = 1u128 << (drop - 1);
    let up = rest > half || (rest == half && kept & 1 == 1);
    let mut sig = kept + u128::from(up);
    let mut exp = exp + drop as i32;
    if bit_length(sig) > width {
        sig >>= 1;
        exp += 1;
    }
    Unpacked {
        sign,
        exp,
        sig: sig as u64,
    }
}

fn zero(sign: bool) -> Float32Word {
    Float32Word(u32::from(sign) << 31)
}

fn infinity(sign: bool) -> Float32Word {
    Float32Word((u32::from(sign) << 31) | (EXP_MAX << FRACTION_BITS))
}

/// Rounds to single precision and encodes, flushing subnormal results.
fn pack(sign: bool, mag: u128, exp: i32) -> Float32Word {
    if mag == 0 {
        return zero(sign);
    }
    let u = round_to(sign, mag, exp, PRECISION);
    let biased = u.exp + FRACTION_BITS as i32 + BIAS;
    if biased >= EXP_MAX as i32 {
        infinity(sign)
    } else if biased <= 0 {
        zero(sign)
    } else {
        Float32Word(
            (u32::from(sign) << 31)
                | ((biased as u32) << FRACTION_BITS)
                | (u.sig as u32 & ((1 << FRACTION_BITS) - 1)),
        )
    }
}

fn mul_exact(a: Unpacked, b: Unpacked) -> (bool, u128, i32) {
    (
        a.sign != b.sign,
        u128::from(a.sig) * u128::from(b.sig),
        a.exp + b.exp,
    )
}

/// Largest alignment shift kept exact; beyond it the smaller operand only
/// matters as a sticky bit.
const MAX_ALIGN: i32 = 64;

/// Exact signed sum of two finite values as `(sign, magnitude, exp)`.
fn add_exact(a: Unpacked, b: Unpacked) -> (bool, u128, i32) {
    let (hi, lo) = if a.exp >= b.exp { (a, b) } else { (b, a) };
    let diff = hi.exp - lo.exp;
    let (hi_mag, lo_mag, exp) = if diff <= MAX_ALIGN {
        (u128::from(hi.sig) << diff, u128::from(lo.sig), lo.exp)
    } else {
        // lo is far below half an ulp of hi at any width used here.
        (u128::from(hi.sig) << MAX_ALIGN, 1, hi.exp - MAX_ALIGN)
    };
    let signed = |neg: bool, m: u128| if neg { -(m as i128) } else { m as i128 };
    let sum = signed(hi.sign, hi_mag) + signed(lo.sign, lo_mag);
    (sum < 0, sum.unsigned_abs(), exp)
}

/// Single-precision product.
pub fn f32_mul(a: Float32Word, b: Float32Word) -> Float32Word {
    let sign = a.sign() != b.sign();
    match (classify(a), classify(b)) {
        (Class::Nan, _) | (_, Class::Nan) => Float32Word(QUIET_NAN),
        (Class::Inf(_), Class::Zero(_)) | (Class::Zero(_), Class::Inf(_)) => Float32Word(QUIET_NAN),
        (Class::Inf(_), _) | (_, Class::Inf(_)) => infinity(sign),
        (Class::Zero(_), _) | (_, Class::Zero(_)) => zero(sign),
        (Class::Finite(x), Class::Finite(y)) => {
            let (s, mag, exp) = mul_exact(x, y);
            pack(s, mag, exp)
        }
    }
}

/// Single-precision `a + b`, or `a - b` when `subtract` is set.
pub fn f32_addsub(a: Float32Word, b: Float32Word, subtract: bool) -> Float32Word {
    let b = if subtract { b.negate() } else { b };
    match (classify(a), classify(b)) {
        (Class::Nan, _) | (_, Class::Nan) => Float32Word(QUIET_NAN),
        (Class::Inf(x), Class::Inf(y)) if x != y => Float32Word(QUIET_NAN),
        (Class::Inf(s), _) | (_, Class::Inf(s)) => infinity(s),
        (Class::Zero(x), Class::Zero(y)) => zero(x && y),
        (Class::Zero(_), Class::Finite(_)) => b,
        (Class::Finite(_), Class::Zero(_)) => a,
        (Class::Finite(x), Class::Finite(y)) => {
            let (s, mag, exp) = add_exact(x, y);
            // An exact cancellation is +0 under round-to-nearest.
            pack(s && mag != 0, mag, exp)
        }
    }
}

fn wide_mul(a: Unpacked, b: Unpacked) -> Unpacked {
    let (s, mag, exp) = mul_exact(a, b);
    round_to(s, mag, exp, WIDE_PRECISION)
}

fn wide_add(a: Unpacked, b: Unpacked) -> Unpacked {
    let (s, mag, exp) = add_exact(a, b);
    round_to(s, mag, exp, WIDE_PRECISION)
}

/// `num / den` rounded to the wide width.
fn wide_ratio(num: u64, den: u64) -> Unpacked {
    let shift = 2 * WIDE_PRECISION;
    let scaled = u128::from(num) << shift;
    let q = scaled / u128::from(den);
    // A non-zero remainder only needs to act as a sticky bit.
    let sticky = u128::from(!scaled.is_multiple_of(u128::from(den)));
    round_to(
        false,
        (q << 1) | sticky,
        -(shift as i32) - 1,
        WIDE_PRECISION,
    )
}

fn wide_from_int(v: u64) -> Unpacked {
    round_to(false, u128::from(v), 0, WIDE_PRECISION)
}

fn wide_to_f64(u: Unpacked) -> f64 {
    let v = u.sig as f64 * 2f64.powi(u.exp);
    if u.sign {
        -v
    } else {
        v
    }
}

/// Newton-Raphson reciprocal of a significand `d` in `[1, 2)`.
///
/// Seeds with the minimax line `24/17 - 8/17 d` (error below 1/17 on the
/// interval) and applies three iterations `r <- r (2 - d r)`.
fn wide_reciprocal(d: Unpacked) -> Unpacked {
    let seed_c0 = wide_ratio(24, 17);
    let seed_c1 = Unpacked {
        sign: true,
        ..wide_ratio(8, 17)
    };
    let two = wide_from_int(2);
    let mut r = wide_add(seed_c0, wide_mul(seed_c1, d));
    for _ in 0..NEWTON_ITERATIONS {
        let dr = wide_mul(d, r);
        let correction = wide_add(two, Unpacked { sign: true, ..dr });
        r = wide_mul(r, correction);
    }
    r
}

/// Reciprocal of a divisor significand in `[1, 2)` as produced by the
/// divider, before the final rounding. The result has 48 significant bits
/// and is returned exactly.
pub fn nr_reciprocal(d_norm: f32) -> Result<f64, SoftFloatError> {
    if !(1.0..2.0).contains(&d_norm) {
        return Err(SoftFloatError::NotNormalized(d_norm));
    }
    let Class::Finite(d) = classify(Float32Word::from_f32(d_norm)) else {
        unreachable!("values in [1, 2) are normal");
    };
    Ok(wide_to_f64(wide_reciprocal(d)))
}

/// Single-precision `a / d` through a Newton-Raphson reciprocal.
pub fn f32_div_nr(a: Float32Word, d: Float32Word) -> Float32Word {
    let sign = a.sign() != d.sign();
    match (classify(a), classify(d)) {
        (Class::Nan, _) | (_, Class::Nan) => Float32Word(QUIET_NAN),
        (Class::Zero(_), Class::Zero(_)) | (Class::Inf(_), Class::Inf(_)) => Float32Word(QUIET_NAN),
        (Class::Inf(_), _) | (_, Class::Zero(_)) => infinity(sign),
        (Class::Zero(_), _) | (_, Class::Inf(_)) => zero(sign),
        (Class::Finite(x), Class::Finite(y)) => {
            // Split the divisor into a significand in [1, 2) and a power of two.
            let d_norm = Unpacked {
                sign: false,
                exp: -(FRACTION_BITS as i32),
                sig: y.sig,
            };
            let scale = y.exp + FRACTION_BITS as i32;
            let r = wide_reciprocal(d_norm);
            let (_, mag, exp) = mul_exact(x, r);
            pack(sign, mag, exp - scale)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum AdderMode {
    /// Adds all terms and the constant 1.
    #[default]
    SumAll,
    /// Negates one term and adds the constant 2.
    NegateOne,
}

impl AdderMode {
    fn constant(self) -> Float32Word {
        match self {
            Self::SumAll => Float32Word::ONE,
            Self::NegateOne => Float32Word::from_f32(2.0),
        }
    }
}

/// Six-operand adder: five terms plus a mode-dependent constant, summed in
/// ascending index order after the constant.
pub fn multi_term_accumulate(
    terms: [Float32Word; 5],
    mode: AdderMode,
    negate_index: usize,
) -> Result<Float32Word, SoftFloatError> {
    if mode == AdderMode::NegateOne && negate_index >= terms.len() {
        return Err(SoftFloatError::NegateIndex(negate_index));
    }
    Ok(terms
        .iter()
        .enumerate()
        .fold(mode.constant(), |acc, (i, &t)| {
            let negate = mode == AdderMode::NegateOne && i == negate_index;
            f32_addsub(acc, t, negate)
        }))
}

/// Number of representable singles between `a` and `b`; `0.0` and `-0.0`
/// are the same point.
pub fn ulp_distance(a: f32, b: f32) -> u64 {
    let key = |v: f32| {
        let bits = i64::from(v.to_bits() as i32);
        if bits < 0 {
            i64::from(i32::MIN) - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}
