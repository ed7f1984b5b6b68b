//! Planning and applying faults to cached series terms.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float_bits::{flip_bits, random_finite, stuck_at, BitIndexSet, StuckLevel, SIGN_BIT};
use crate::series::SeriesContext;

const WORD_BITS: u32 = SIGN_BIT + 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FaultError {
    #[error("n must be ≥ 1")]
    NoFaultyTerms,
    #[error("n must be ≤ the term count ({term_count}), got {n}")]
    TooManyFaultyTerms { n: usize, term_count: usize },
    #[error("m must be between 1 and 64, got {0}")]
    BitCount(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaultModel {
    #[serde(rename = "bitflip")]
    BitFlipping,
    #[serde(rename = "stuck0")]
    StuckAt0,
    #[serde(rename = "stuck1")]
    StuckAt1,
    #[serde(rename = "skip")]
    InstructionSkipping,
    #[serde(rename = "random")]
    TotalRandom,
}

impl FaultModel {
    pub const ALL: [FaultModel; 5] = [
        Self::BitFlipping,
        Self::StuckAt0,
        Self::StuckAt1,
        Self::InstructionSkipping,
        Self::TotalRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::BitFlipping => "bitflip",
            Self::StuckAt0 => "stuck0",
            Self::StuckAt1 => "stuck1",
            Self::InstructionSkipping => "skip",
            Self::TotalRandom => "random",
        }
    }

    /// Whether the model acts on selected bits rather than on the whole term.
    pub fn is_bit_level(self) -> bool {
        matches!(self, Self::BitFlipping | Self::StuckAt0 | Self::StuckAt1)
    }
}

impl fmt::Display for FaultModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FaultModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!(
                    "unknown fault model `{s}` (expected bitflip, stuck0, stuck1, skip or random)"
                )
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionType {
    #[default]
    Random,
    Burst,
}

impl InjectionType {
    pub fn name(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Burst => "burst",
        }
    }
}

impl fmt::Display for InjectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InjectionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Self::Random),
            "burst" => Ok(Self::Burst),
            _ => Err(format!(
                "unknown injection type `{s}` (expected random or burst)"
            )),
        }
    }
}

/// What to inject: `n` faulty terms with `m` corrupted bits each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultSpec {
    pub model: FaultModel,
    #[serde(rename = "type")]
    pub injection_type: InjectionType,
    pub n: usize,
    pub m: u32,
}

impl FaultSpec {
    pub fn new(
        model: FaultModel,
        injection_type: InjectionType,
        n: usize,
        m: u32,
    ) -> Result<Self, FaultError> {
        let spec = Self {
            model,
            injection_type,
            n,
            m,
        };
        spec.check_shape()?;
        Ok(spec)
    }

    /// Term-level spec; `m` is irrelevant and set to 1.
    pub fn term_level(model: FaultModel, n: usize) -> Result<Self, FaultError> {
        Self::new(model, InjectionType::Random, n, 1)
    }

    fn check_shape(&self) -> Result<(), FaultError> {
        if self.n == 0 {
            return Err(FaultError::NoFaultyTerms);
        }
        if !(1..=WORD_BITS).contains(&self.m) {
            return Err(FaultError::BitCount(self.m));
        }
        Ok(())
    }

    pub fn validate(&self, term_count: usize) -> Result<(), FaultError> {
        self.check_shape()?;
        if self.n > term_count {
            return Err(FaultError::TooManyFaultyTerms {
                n: self.n,
                term_count,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FaultTarget {
    pub term: usize,
    /// Empty for term-level models.
    pub bits: BitIndexSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FaultPlan {
    pub targets: Vec<FaultTarget>,
}

impl FaultPlan {
    pub fn term_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().map(|t| t.term)
    }
}

/// Draws `n` distinct terms and, for bit-level models, the bits to corrupt.
pub fn plan_faults<R: Rng + ?Sized>(
    spec: &FaultSpec,
    term_count: usize,
    rng: &mut R,
) -> Result<FaultPlan, FaultError> {
    spec.validate(term_count)?;
    let terms = index::sample(rng, term_count, spec.n).into_vec();
    let targets = terms
        .into_iter()
        .map(|term| {
            let bits = if spec.model.is_bit_level() {
                draw_bits(spec.injection_type, spec.m, rng)
            } else {
                BitIndexSet::EMPTY
            };
            FaultTarget { term, bits }
        })
        .collect();
    Ok(FaultPlan { targets })
}

fn draw_bits<R: Rng + ?Sized>(kind: InjectionType, m: u32, rng: &mut R) -> BitIndexSet {
    match kind {
        InjectionType::Random => {
            let picked = index::sample(rng, WORD_BITS as usize, m as usize);
            BitIndexSet::from_indices(picked.into_iter().map(|i| i as u32))
                .expect("sampled indices are distinct and below 64")
        }
        InjectionType::Burst => {
            let start = rng.random_range(0..WORD_BITS);
            BitIndexSet::run(start, m).expect("start is below 64")
        }
    }
}

/// Applies `plan` under `model`, touching only the targeted terms.
///
/// Bit-level models rewrite the 64-bit register of each term, skipping
/// removes the term from every sum and total-random overwrites it with a
/// fresh finite pattern drawn from `rng`.
pub fn apply_fault<R: Rng + ?Sized>(
    ctx: &SeriesContext,
    plan: &FaultPlan,
    model: FaultModel,
    rng: &mut R,
) -> SeriesContext {
    let mut out = ctx.clone();
    for target in &plan.targets {
        let k = target.term;
        let result = match model {
            FaultModel::BitFlipping => out.set_register(k, flip_bits(ctx.register(k), target.bits)),
            FaultModel::StuckAt0 => {
                out.set_register(k, stuck_at(ctx.register(k), target.bits, StuckLevel::Zero))
            }
            FaultModel::StuckAt1 => {
                out.set_register(k, stuck_at(ctx.register(k), target.bits, StuckLevel::One))
            }
            FaultModel::InstructionSkipping => out.clear_term(k),
            FaultModel::TotalRandom => out.replace_term(k, random_finite(rng)),
        };
        result.expect("plan targets lie inside the context");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::float_bits::FloatWord;
    use crate::series::{maclaurin_terms, sum_exp, SeriesSign};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn single(term: usize, bits: BitIndexSet) -> FaultPlan {
        FaultPlan {
            targets: vec![FaultTarget { term, bits }],
        }
    }

    #[test]
    fn random_plan_shape() {
        let spec = FaultSpec::new(FaultModel::BitFlipping, InjectionType::Random, 1, 1).unwrap();
        let plan = plan_faults(&spec, 30, &mut rng(1)).unwrap();
        assert_eq!(plan.targets.len(), 1);
        assert!(plan.targets[0].term < 30);
        assert_eq!(plan.targets[0].bits.len(), 1);
    }

    #[test]
    fn skip_plan_has_distinct_terms_and_no_bits() {
        let spec = FaultSpec::term_level(FaultModel::InstructionSkipping, 3).unwrap();
        let plan = plan_faults(&spec, 30, &mut rng(2)).unwrap();
        let mut terms: Vec<_> = plan.term_indices().collect();
        terms.sort_unstable();
        terms.dedup();
        assert_eq!(terms.len(), 3);
        assert!(plan.targets.iter().all(|t| t.bits.is_empty()));
    }

    #[test]
    fn burst_is_a_clamped_run() {
        let spec = FaultSpec::new(FaultModel::BitFlipping, InjectionType::Burst, 6, 5).unwrap();
        let mut r = rng(3);
        for _ in 0..500 {
            for t in plan_faults(&spec, 30, &mut r).unwrap().targets {
                let bits: Vec<u32> = t.bits.iter().collect();
                let start = bits[0];
                let expected: Vec<u32> = (start..(start + 5).min(64)).collect();
                assert_eq!(bits, expected);
            }
        }
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            FaultSpec::term_level(FaultModel::InstructionSkipping, 0),
            Err(FaultError::NoFaultyTerms)
        );
        assert_eq!(
            FaultSpec::new(FaultModel::StuckAt1, InjectionType::Burst, 1, 65),
            Err(FaultError::BitCount(65))
        );
        assert_eq!(FaultError::NoFaultyTerms.to_string(), "n must be ≥ 1");
        let spec = FaultSpec::term_level(FaultModel::TotalRandom, 6).unwrap();
        assert!(matches!(
            plan_faults(&spec, 5, &mut rng(0)),
            Err(FaultError::TooManyFaultyTerms {
                n: 6,
                term_count: 5
            })
        ));
    }

    #[test]
    fn stuck_at_zero_on_all_bits_zeroes_term() {
        let ctx = maclaurin_terms(1.0, 5).unwrap();
        let out = apply_fault(
            &ctx,
            &single(0, BitIndexSet::ALL),
            FaultModel::StuckAt0,
            &mut rng(0),
        );
        assert_eq!(out.term_values()[0], 0.0);
    }

    #[test]
    fn sign_flip_on_term_two() {
        let ctx = maclaurin_terms(1.0, 5).unwrap();
        let bits = BitIndexSet::from_indices([63]).unwrap();
        let out = apply_fault(&ctx, &single(2, bits), FaultModel::BitFlipping, &mut rng(0));
        assert_eq!(out.term_values()[2], -0.5);
    }

    #[test]
    fn skipping_term_one_drops_one_from_sum() {
        let ctx = maclaurin_terms(1.0, 5).unwrap();
        let out = apply_fault(
            &ctx,
            &single(1, BitIndexSet::EMPTY),
            FaultModel::InstructionSkipping,
            &mut rng(0),
        );
        // Independent recomputation: sum the remaining terms directly.
        let expected = 1.0 + 0.5 + 1.0 / 6.0 + 1.0 / 24.0;
        assert!((sum_exp(&out, SeriesSign::Positive) - expected).abs() <= f64::EPSILON * 4.0);
        let full = sum_exp(&ctx, SeriesSign::Positive);
        assert!((full - sum_exp(&out, SeriesSign::Positive) - 1.0).abs() <= f64::EPSILON * 4.0);
    }

    #[test]
    fn total_random_writes_a_finite_word() {
        let ctx = maclaurin_terms(0.3, 8).unwrap();
        let spec = FaultSpec::term_level(FaultModel::TotalRandom, 8).unwrap();
        let mut r = rng(11);
        let plan = plan_faults(&spec, 8, &mut r).unwrap();
        let out = apply_fault(&ctx, &plan, FaultModel::TotalRandom, &mut r);
        assert!(out.term_values().iter().all(|v| v.is_finite()));
        assert!(out.term(0).lo() == 0.0);
    }

    #[test]
    fn bit_fault_keeps_low_word() {
        let ctx = maclaurin_terms(0.3, 8).unwrap();
        let bits = BitIndexSet::from_indices([0]).unwrap();
        let out = apply_fault(&ctx, &single(5, bits), FaultModel::BitFlipping, &mut rng(0));
        assert_eq!(out.term(5).lo(), ctx.term(5).lo());
        assert_eq!(
            out.register(5),
            FloatWord::from_bits(ctx.register(5).bits() ^ 1)
        );
    }

    #[test]
    fn serde_names() {
        let spec = FaultSpec::new(FaultModel::StuckAt1, InjectionType::Burst, 2, 3).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"model":"stuck1","type":"burst","n":2,"m":3}"#);
        assert_eq!(serde_json::from_str::<FaultSpec>(&json).unwrap(), spec);
        assert_eq!(
            "SKIP".parse::<FaultModel>(),
            Ok(FaultModel::InstructionSkipping)
        );
        assert!("laser".parse::<FaultModel>().is_err());
        assert_eq!("burst".parse::<InjectionType>(), Ok(InjectionType::Burst));
    }
}
