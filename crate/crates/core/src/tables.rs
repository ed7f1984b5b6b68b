//! The three published detection tables as campaign grids.

use crate::fault_engine::{FaultModel, FaultSpec, InjectionType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TableKind {
    /// Bit-level models with randomly scattered bits.
    Random,
    /// Bit-level models with consecutive bits.
    Burst,
    /// Instruction skipping and total random, `n` from 1 to 6.
    SkipRandom,
}

const BIT_MODELS: [FaultModel; 3] = [
    FaultModel::BitFlipping,
    FaultModel::StuckAt1,
    FaultModel::StuckAt0,
];

impl TableKind {
    pub const ALL: [TableKind; 3] = [Self::Random, Self::Burst, Self::SkipRandom];

    pub fn file_stem(self) -> &'static str {
        match self {
            Self::Random => "table_random",
            Self::Burst => "table_burst",
            Self::SkipRandom => "table_skip_random",
        }
    }

    /// `(n, m)` rows used for the bit-level tables.
    pub fn shape_rows(self) -> &'static [(usize, u32)] {
        match self {
            Self::Random => &[(1, 1), (1, 5), (3, 1), (3, 5), (6, 1), (6, 5)],
            Self::Burst => &[(1, 2), (1, 5), (3, 2), (3, 5), (6, 2), (6, 5)],
            Self::SkipRandom => &[(1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (6, 1)],
        }
    }

    /// Fault specifications in table row order.
    pub fn scenarios(self) -> Vec<FaultSpec> {
        let (models, kind): (&[FaultModel], _) = match self {
            Self::Random => (&BIT_MODELS, InjectionType::Random),
            Self::Burst => (&BIT_MODELS, InjectionType::Burst),
            Self::SkipRandom => (
                &[FaultModel::InstructionSkipping, FaultModel::TotalRandom],
                InjectionType::Random,
            ),
        };
        models
            .iter()
            .flat_map(|&model| {
                self.shape_rows().iter().map(move |&(n, m)| {
                    FaultSpec::new(model, kind, n, m).expect("table rows are valid")
                })
            })
            .collect()
    }
}
