//! Monte-Carlo fault campaigns and fault-free consistency sweeps.
//!
//! Every run owns a generator seeded from `(master seed, run index)`, so the
//! aggregate counts do not depend on how runs are spread over workers.

use std::ops::{Add, RangeInclusive};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activations::{evaluate_protected, ActivationKind, ProtectedResult};
use crate::fault_engine::{apply_fault, plan_faults, FaultError, FaultPlan, FaultSpec};
use crate::series::{SeriesError, SeriesSettings, CLIP_HI, CLIP_LO};

pub const DEFAULT_RUNS: usize = 1000;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CampaignError {
    #[error("runs must be ≥ 1")]
    NoRuns,
    #[error("input range must satisfy lo < hi, got [{0}, {1}]")]
    InputRange(f64, f64),
    #[error("{0} has no series to inject faults into")]
    NotSeriesBased(ActivationKind),
    #[error("a detection campaign needs a fault specification")]
    MissingFault,
    #[error("term range must be non-empty, got {0}:{1}")]
    TermRange(usize, usize),
    #[error("at least one epsilon is required")]
    NoEpsilons,
    #[error("benign threshold must be non-negative, got {0}")]
    BenignThreshold(f64),
    #[error("workers must be ≥ 1")]
    NoWorkers,
    #[error("could not start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Fault(#[from] FaultError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub function: ActivationKind,
    pub settings: SeriesSettings,
    pub fault: Option<FaultSpec>,
    pub runs: usize,
    pub input_lo: f64,
    pub input_hi: f64,
    pub seed: u64,
    /// Largest output deviation still counted as benign. `None` uses the
    /// settings' epsilon.
    pub benign_threshold: Option<f64>,
}

impl CampaignConfig {
    /// Campaign at the function's default settings over `[-3, 3]`.
    pub fn new(
        function: ActivationKind,
        fault: FaultSpec,
        seed: u64,
    ) -> Result<Self, CampaignError> {
        let settings = function
            .default_settings()
            .ok_or(CampaignError::NotSeriesBased(function))?;
        Ok(Self {
            function,
            settings,
            fault: Some(fault),
            runs: DEFAULT_RUNS,
            input_lo: CLIP_LO,
            input_hi: CLIP_HI,
            seed,
            benign_threshold: None,
        })
    }

    pub fn benign_threshold(&self) -> f64 {
        self.benign_threshold.unwrap_or(self.settings.epsilon)
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if !self.function.uses_series() {
            return Err(CampaignError::NotSeriesBased(self.function));
        }
        self.settings.validated()?;
        if self.runs == 0 {
            return Err(CampaignError::NoRuns);
        }
        check_input_range(self.input_lo, self.input_hi)?;
        let threshold = self.benign_threshold();
        if threshold.is_nan() || threshold < 0.0 {
            return Err(CampaignError::BenignThreshold(threshold));
        }
        if let Some(fault) = &self.fault {
            fault.validate(self.settings.term_count)?;
        }
        Ok(())
    }
}

fn check_input_range(lo: f64, hi: f64) -> Result<(), CampaignError> {
    if lo < hi && lo.is_finite() && hi.is_finite() {
        Ok(())
    } else {
        Err(CampaignError::InputRange(lo, hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Detected,
    BenignMiss,
    SilentCorruption,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub detected: bool,
    /// `|faulted value - fault-free value|`; infinite when the faulted value
    /// is not finite.
    pub output_deviation: f64,
    pub classification: Classification,
}

impl RunOutcome {
    fn classify(detected: bool, deviation: f64, benign_threshold: f64) -> Self {
        let classification = if detected {
            Classification::Detected
        } else if deviation <= benign_threshold {
            Classification::BenignMiss
        } else {
            Classification::SilentCorruption
        };
        Self {
            detected,
            output_deviation: deviation,
            classification,
        }
    }
}

/// Everything about one run, for inspection and re-verification.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub index: usize,
    pub input: f64,
    pub plan: FaultPlan,
    pub reference: ProtectedResult,
    pub faulted: ProtectedResult,
    pub outcome: RunOutcome,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CampaignStats {
    pub runs: usize,
    pub detected_count: usize,
    pub benign_count: usize,
    pub silent_count: usize,
}

impl CampaignStats {
    fn single(outcome: &RunOutcome) -> Self {
        let mut s = Self {
            runs: 1,
            ..Self::default()
        };
        match outcome.classification {
            Classification::Detected => s.detected_count = 1,
            Classification::BenignMiss => s.benign_count = 1,
            Classification::SilentCorruption => s.silent_count = 1,
        }
        s
    }

    /// Detected runs over all runs.
    pub fn detection_ratio(&self) -> f64 {
        ratio(self.detected_count, self.runs)
    }

    /// Detected or benign runs over all runs: the share of runs that did not
    /// end in an unnoticed output corruption.
    pub fn coverage_ratio(&self) -> f64 {
        ratio(self.detected_count + self.benign_count, self.runs)
    }

    pub fn is_partition(&self) -> bool {
        self.detected_count + self.benign_count + self.silent_count == self.runs
    }
}

impl Add for CampaignStats {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            runs: self.runs + rhs.runs,
            detected_count: self.detected_count + rhs.detected_count,
            benign_count: self.benign_count + rhs.benign_count,
            silent_count: self.silent_count + rhs.silent_count,
        }
    }
}

fn ratio(count: usize, runs: usize) -> f64 {
    if runs == 0 {
        0.0
    } else {
        count as f64 / runs as f64
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for run `run_index` of a campaign seeded with `master_seed`.
///
/// The master seed is advanced by `run_index` steps of a Weyl sequence and
/// passed through the splitmix64 finaliser. Both steps are bijections on
/// `u64`, so distinct run indices always get distinct seeds.
pub fn derive_run_seed(master_seed: u64, run_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add(run_index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_run_seed(master_seed, index as u64))
}

fn draw_input<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Executes run `index` of a validated detection campaign.
pub fn trace_run(cfg: &CampaignConfig, index: usize) -> Result<RunTrace, CampaignError> {
    cfg.validate()?;
    let fault = cfg.fault.ok_or(CampaignError::MissingFault)?;
    Ok(trace_validated(cfg, &fault, index))
}

fn trace_validated(cfg: &CampaignConfig, fault: &FaultSpec, index: usize) -> RunTrace {
    let mut rng = run_rng(cfg.seed, index);
    let input = draw_input(&mut rng, cfg.input_lo, cfg.input_hi);
    let eps = cfg.settings.epsilon;
    let ctx = cfg
        .function
        .context(input, &cfg.settings)
        .expect("validated settings and finite input");
    let reference = evaluate_protected(cfg.function, &ctx, eps);
    let plan = plan_faults(fault, ctx.term_count(), &mut rng).expect("validated fault spec");
    let faulted_ctx = apply_fault(&ctx, &plan, fault.model, &mut rng);
    let faulted = evaluate_protected(cfg.function, &faulted_ctx, eps);
    let deviation = (faulted.value - reference.value).abs();
    let deviation = if deviation.is_nan() {
        f64::INFINITY
    } else {
        deviation
    };
    let outcome = RunOutcome::classify(
        faulted.verdict.is_detected(),
        deviation,
        cfg.benign_threshold(),
    );
    RunTrace {
        index,
        input,
        plan,
        reference,
        faulted,
        outcome,
    }
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, CampaignError> {
    if workers == 0 {
        return Err(CampaignError::NoWorkers);
    }
    if workers == 1 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CampaignError::Pool(e.to_string()))?;
    Ok(pool.install(job))
}

/// Runs a detection campaign on the calling thread.
pub fn run_detection_campaign(cfg: &CampaignConfig) -> Result<CampaignStats, CampaignError> {
    run_detection_campaign_with_workers(cfg, 1)
}

/// Runs a detection campaign on `workers` threads. The result equals the
/// serial result for any worker count.
pub fn run_detection_campaign_with_workers(
    cfg: &CampaignConfig,
    workers: usize,
) -> Result<CampaignStats, CampaignError> {
    cfg.validate()?;
    let fault = cfg.fault.ok_or(CampaignError::MissingFault)?;
    let one = |i| CampaignStats::single(&trace_validated(cfg, &fault, i).outcome);
    with_pool(workers, || {
        if workers == 1 {
            (0..cfg.runs)
                .map(one)
                .fold(CampaignStats::default(), Add::add)
        } else {
            (0..cfg.runs)
                .into_par_iter()
                .map(one)
                .reduce(CampaignStats::default, Add::add)
        }
    })
}

/// Runs several campaigns, spreading whole campaigns over `workers`
/// threads. Results are returned in input order.
pub fn run_campaigns(
    cfgs: &[CampaignConfig],
    workers: usize,
) -> Result<Vec<CampaignStats>, CampaignError> {
    for cfg in cfgs {
        cfg.validate()?;
        cfg.fault.ok_or(CampaignError::MissingFault)?;
    }
    with_pool(workers, || {
        if workers == 1 {
            cfgs.iter().map(run_detection_campaign).collect()
        } else {
            cfgs.par_iter().map(run_detection_campaign).collect()
        }
    })?
}

/// Fault-free sweep over term counts and thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub function: ActivationKind,
    pub terms: RangeInclusive<usize>,
    pub epsilons: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub input_lo: f64,
    pub input_hi: f64,
}

impl SweepConfig {
    pub fn new(
        function: ActivationKind,
        terms: RangeInclusive<usize>,
        epsilons: Vec<f64>,
        runs: usize,
        seed: u64,
    ) -> Self {
        Self {
            function,
            terms,
            epsilons,
            runs,
            seed,
            input_lo: CLIP_LO,
            input_hi: CLIP_HI,
        }
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        if !self.function.uses_series() {
            return Err(CampaignError::NotSeriesBased(self.function));
        }
        let (a, b) = (*self.terms.start(), *self.terms.end());
        if a == 0 || a > b {
            return Err(CampaignError::TermRange(a, b));
        }
        if self.epsilons.is_empty() {
            return Err(CampaignError::NoEpsilons);
        }
        for &eps in &self.epsilons {
            SeriesSettings::new(a, eps)?;
        }
        if self.runs == 0 {
            return Err(CampaignError::NoRuns);
        }
        check_input_range(self.input_lo, self.input_hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCell {
    pub terms: usize,
    pub epsilon: f64,
    pub runs: usize,
    pub passes: usize,
}

impl ConsistencyCell {
    pub fn consistency_ratio(&self) -> f64 {
        ratio(self.passes, self.runs)
    }

    pub fn false_positives(&self) -> usize {
        self.runs - self.passes
    }
}

/// Runs every `(terms, epsilon)` cell of `cfg`. Run `i` uses the same input
/// in every cell, so cells differ only in their settings.
pub fn run_consistency_sweep(
    cfg: &SweepConfig,
    workers: usize,
) -> Result<Vec<ConsistencyCell>, CampaignError> {
    cfg.validate()?;
    let inputs: Vec<f64> = (0..cfg.runs)
        .map(|i| draw_input(&mut run_rng(cfg.seed, i), cfg.input_lo, cfg.input_hi))
        .collect();
    let grid: Vec<(usize, f64)> = cfg
        .terms
        .clone()
        .flat_map(|t| cfg.epsilons.iter().map(move |&e| (t, e)))
        .collect();
    let cell = |&(terms, epsilon): &(usize, f64)| {
        let settings = SeriesSettings {
            term_count: terms,
            epsilon,
            clip_lo: CLIP_LO,
            clip_hi: CLIP_HI,
        };
        let passes = inputs
            .iter()
            .filter(|&&x| {
                let ctx = cfg
                    .function
                    .context(x, &settings)
                    .expect("validated settings and finite input");
                !evaluate_protected(cfg.function, &ctx, epsilon)
                    .verdict
                    .is_detected()
            })
            .count();
        ConsistencyCell {
            terms,
            epsilon,
            runs: cfg.runs,
            passes,
        }
    };
    with_pool(workers, || {
        if workers == 1 {
            grid.iter().map(cell).collect()
        } else {
            grid.par_iter().map(cell).collect()
        }
    })
}

/// Consistency at a single setting.
pub fn consistency_at(
    function: ActivationKind,
    settings: SeriesSettings,
    runs: usize,
    seed: u64,
) -> Result<ConsistencyCell, CampaignError> {
    let cfg = SweepConfig::new(
        function,
        settings.term_count..=settings.term_count,
        vec![settings.epsilon],
        runs,
        seed,
    );
    Ok(run_consistency_sweep(&cfg, 1)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault_engine::{FaultModel, InjectionType};

    fn bitflip(n: usize, m: u32) -> FaultSpec {
        FaultSpec::new(FaultModel::BitFlipping, InjectionType::Random, n, m).unwrap()
    }

    #[test]
    fn run_seeds_are_distinct_and_stable() {
        assert_ne!(derive_run_seed(5, 0), derive_run_seed(5, 1));
        assert_eq!(derive_run_seed(5, 9), derive_run_seed(5, 9));
        let mut seen: Vec<u64> = (0..10_000).map(|i| derive_run_seed(42, i)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 10_000);
    }

    #[test]
    fn partition_holds() {
        let mut cfg = CampaignConfig::new(ActivationKind::Sigmoid, bitflip(2, 3), 1).unwrap();
        cfg.runs = 300;
        let stats = run_detection_campaign(&cfg).unwrap();
        assert_eq!(stats.runs, 300);
        assert!(stats.is_partition());
    }

    #[test]
    fn parallel_matches_serial() {
        let mut cfg = CampaignConfig::new(ActivationKind::Tanh, bitflip(3, 4), 9).unwrap();
        cfg.runs = 400;
        let serial = run_detection_campaign(&cfg).unwrap();
        let parallel = run_detection_campaign_with_workers(&cfg, 4).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn infinite_threshold_flags_only_non_finite() {
        let mut cfg = CampaignConfig::new(ActivationKind::Expo, bitflip(1, 1), 3).unwrap();
        cfg.settings = SeriesSettings::new(30, f64::INFINITY).unwrap();
        cfg.runs = 500;
        for i in 0..cfg.runs {
            let t = trace_run(&cfg, i).unwrap();
            let finite = t.faulted.value.is_finite()
                && t.faulted.checker_value.is_finite()
                && t.faulted.residual.is_finite();
            assert_eq!(t.outcome.detected, !finite);
        }
    }

    #[test]
    fn config_errors() {
        let mut cfg = CampaignConfig::new(ActivationKind::Expo, bitflip(1, 1), 0).unwrap();
        cfg.runs = 0;
        assert_eq!(run_detection_campaign(&cfg), Err(CampaignError::NoRuns));
        cfg.runs = 10;
        cfg.input_lo = 3.0;
        assert!(matches!(
            run_detection_campaign(&cfg),
            Err(CampaignError::InputRange(..))
        ));
        cfg.input_lo = -3.0;
        cfg.fault = Some(bitflip(31, 1));
        assert!(matches!(
            run_detection_campaign(&cfg),
            Err(CampaignError::Fault(_))
        ));
        cfg.fault = None;
        assert_eq!(
            run_detection_campaign(&cfg),
            Err(CampaignError::MissingFault)
        );
        assert!(CampaignConfig::new(ActivationKind::Relu, bitflip(1, 1), 0).is_err());
    }

    #[test]
    fn sweep_rejects_inverted_range() {
        let cfg = SweepConfig::new(
            ActivationKind::Expo,
            RangeInclusive::new(50, 5),
            vec![1e-14],
            10,
            1,
        );
        assert_eq!(
            run_consistency_sweep(&cfg, 1),
            Err(CampaignError::TermRange(50, 5))
        );
    }

    #[test]
    fn infinite_epsilon_is_fully_consistent() {
        for kind in ActivationKind::SERIES_KINDS {
            let s = SeriesSettings::new(3, f64::INFINITY).unwrap();
            assert_eq!(consistency_at(kind, s, 200, 4).unwrap().passes, 200);
        }
    }

    #[test]
    fn few_terms_are_inconsistent() {
        let s = SeriesSettings::new(3, 1e-14).unwrap();
        assert!(
            consistency_at(ActivationKind::Sigmoid, s, 200, 4)
                .unwrap()
                .consistency_ratio()
                < 1.0
        );
    }
}
