//! Baseline and self-checking activation functions.
//!
//! Each protected variant computes the ordinary output `y`, maps it back
//! through an inverse transform `h(y)` and compares the result with an
//! independently summed quantity `g(x)` taken from the same cached series:
//!
//! | function | `h(y)`                                  | `g(x)`                      |
//! |----------|-----------------------------------------|-----------------------------|
//! | sigmoid  | `y / (1 - y)`                           | `e^x`                       |
//! | tanh     | `(a - 1)/(a + 1)`, `a = (1 - y)/(1 + y)` | `(e^{-2x} - 1)/(e^{-2x} + 1)` |
//! | expo     | `y * e^{-x}`                            | `1`                         |
//!
//! A fault is flagged when `|h(y) - g(x)| > epsilon` or when any of the
//! quantities is not finite. ReLU is checked by recomputation on the negated
//! operand instead.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::extended::Extended;
use crate::series::{maclaurin_terms, SeriesContext, SeriesError, SeriesSettings, SeriesSign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Expo,
    Sigmoid,
    Tanh,
    Relu,
}

impl ActivationKind {
    pub const SERIES_KINDS: [ActivationKind; 3] = [Self::Expo, Self::Sigmoid, Self::Tanh];

    pub fn name(self) -> &'static str {
        match self {
            Self::Expo => "expo",
            Self::Sigmoid => "sigmoid",
            Self::Tanh => "tanh",
            Self::Relu => "relu",
        }
    }

    pub fn uses_series(self) -> bool {
        !matches!(self, Self::Relu)
    }

    /// Term count and threshold that give a clean fault-free check over
    /// `[-3, 3]`. `None` for ReLU, which has no series.
    pub fn default_settings(self) -> Option<SeriesSettings> {
        let (terms, eps) = match self {
            Self::Expo | Self::Sigmoid => (30, 1e-14),
            Self::Tanh => (40, 1e-15),
            Self::Relu => return None,
        };
        Some(SeriesSettings::new(terms, eps).expect("built-in settings are valid"))
    }

    /// Series argument for input `x`: the clipped input, doubled for tanh.
    pub fn series_argument(self, x: f64, settings: &SeriesSettings) -> f64 {
        let x = settings.clip(x);
        match self {
            Self::Tanh => 2.0 * x,
            _ => x,
        }
    }

    /// Clips `x` and builds the cached series this function consumes.
    pub fn context(self, x: f64, settings: &SeriesSettings) -> Result<SeriesContext, SeriesError> {
        maclaurin_terms(self.series_argument(x, settings), settings.term_count)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "expo" | "exp" => Ok(Self::Expo),
            "sigmoid" => Ok(Self::Sigmoid),
            "tanh" => Ok(Self::Tanh),
            "relu" => Ok(Self::Relu),
            other => Err(format!(
                "unknown function `{other}` (expected expo, sigmoid, tanh or relu)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    FaultDetected,
}

impl Verdict {
    pub fn is_detected(self) -> bool {
        self == Self::FaultDetected
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "Pass",
            Self::FaultDetected => "FaultDetected",
        })
    }
}

/// Output of a self-checking evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtectedResult {
    pub value: f64,
    pub checker_value: f64,
    /// `|h(y) - g(x)|`, or the `h3` flag (0 or 1) for ReLU.
    pub residual: f64,
    pub verdict: Verdict,
    pub epsilon_used: f64,
}

/// Manipulations of the baseline computation itself, as opposed to faults
/// in the cached terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum BaselineAttack {
    #[default]
    None,
    /// The sign change in the exponent is skipped, so sigmoid evaluates
    /// `1/(1 + e^x)` and tanh uses `e^{-2x}` in place of `e^{2x}`.
    NegationSkipped,
}

fn judge(value: Extended, checker: Extended, residual: Extended, eps: f64) -> ProtectedResult {
    let finite = value.is_finite() && checker.is_finite() && residual.is_finite();
    let verdict = if finite && residual <= Extended::from_f64(eps) {
        Verdict::Pass
    } else {
        Verdict::FaultDetected
    };
    ProtectedResult {
        value: value.to_f64(),
        checker_value: checker.to_f64(),
        residual: residual.to_f64(),
        verdict,
        epsilon_used: eps,
    }
}

fn sigmoid_ext(ctx: &SeriesContext, attack: BaselineAttack) -> Extended {
    let sign = match attack {
        BaselineAttack::None => SeriesSign::Negative,
        BaselineAttack::NegationSkipped => SeriesSign::Positive,
    };
    Extended::ONE / (Extended::ONE + ctx.sum_extended(sign))
}

fn tanh_ext(ctx2: &SeriesContext, attack: BaselineAttack) -> Extended {
    let sign = match attack {
        BaselineAttack::None => SeriesSign::Positive,
        BaselineAttack::NegationSkipped => SeriesSign::Negative,
    };
    let e = ctx2.sum_extended(sign);
    (e - Extended::ONE) / (e + Extended::ONE)
}

/// `1 / (1 + e^{-x})`.
pub fn sigmoid_baseline(ctx: &SeriesContext) -> f64 {
    sigmoid_ext(ctx, BaselineAttack::None).to_f64()
}

pub fn sigmoid_protected(ctx: &SeriesContext, eps: f64) -> ProtectedResult {
    sigmoid_protected_under(ctx, eps, BaselineAttack::None)
}

pub fn sigmoid_protected_under(
    ctx: &SeriesContext,
    eps: f64,
    attack: BaselineAttack,
) -> ProtectedResult {
    let y = sigmoid_ext(ctx, attack);
    let h1 = y / (Extended::ONE - y);
    let checker = ctx.sum_extended(SeriesSign::Positive);
    judge(y, checker, (h1 - checker).abs(), eps)
}

/// `(e^{2x} - 1) / (e^{2x} + 1)`; `ctx2` must be built from `2x`.
pub fn tanh_baseline(ctx2: &SeriesContext) -> f64 {
    tanh_ext(ctx2, BaselineAttack::None).to_f64()
}

pub fn tanh_protected(ctx2: &SeriesContext, eps: f64) -> ProtectedResult {
    tanh_protected_under(ctx2, eps, BaselineAttack::None)
}

pub fn tanh_protected_under(
    ctx2: &SeriesContext,
    eps: f64,
    attack: BaselineAttack,
) -> ProtectedResult {
    let y = tanh_ext(ctx2, attack);
    let alpha = (Extended::ONE - y) / (Extended::ONE + y);
    let h2 = (alpha - Extended::ONE) / (alpha + Extended::ONE);
    let e_neg = ctx2.sum_extended(SeriesSign::Negative);
    let checker = (e_neg - Extended::ONE) / (e_neg + Extended::ONE);
    judge(y, checker, (h2 - checker).abs(), eps)
}

/// `e^x` from the cached terms.
pub fn expo_baseline(ctx: &SeriesContext) -> f64 {
    ctx.sum_extended(SeriesSign::Positive).to_f64()
}

/// Checks `e^x * e^{-x} = 1`, both factors summed from the same cached terms.
pub fn expo_protected(ctx: &SeriesContext, eps: f64) -> ProtectedResult {
    let value = ctx.sum_extended(SeriesSign::Positive);
    let checker = ctx.sum_extended(SeriesSign::Negative);
    let residual = (value * checker - Extended::ONE).abs();
    judge(value, checker, residual, eps)
}

pub fn relu_baseline(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Flag threshold for ReLU: the residual is the 0/1 value of `h3`.
pub const RELU_FLAG_THRESHOLD: f64 = 0.5;

/// Validates a claimed ReLU output `forward` by recomputing on `-x`.
///
/// `h3 = 0` when `forward + relu(-x)` is non-zero for non-zero `x`, or zero
/// for `x == 0`; otherwise `h3 = 1` and the output is rejected.
pub fn relu_protected(x: f64, forward: f64) -> ProtectedResult {
    let sum = forward + relu_baseline(-x);
    let consistent = (sum != 0.0 && x != 0.0) || (sum == 0.0 && x == 0.0);
    let h3 = if consistent { 0.0 } else { 1.0 };
    ProtectedResult {
        value: forward,
        checker_value: sum,
        residual: h3,
        verdict: if consistent {
            Verdict::Pass
        } else {
            Verdict::FaultDetected
        },
        epsilon_used: RELU_FLAG_THRESHOLD,
    }
}

/// Dispatches to the protected variant of a series-based function.
///
/// # Panics
///
/// Panics for [`ActivationKind::Relu`], which takes a raw input instead.
pub fn evaluate_protected(kind: ActivationKind, ctx: &SeriesContext, eps: f64) -> ProtectedResult {
    match kind {
        ActivationKind::Expo => expo_protected(ctx, eps),
        ActivationKind::Sigmoid => sigmoid_protected(ctx, eps),
        ActivationKind::Tanh => tanh_protected(ctx, eps),
        ActivationKind::Relu => panic!("relu is not evaluated from a series context"),
    }
}
