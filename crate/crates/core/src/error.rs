use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cutoff must be at least 1, got {0}")]
    InvalidCutoff(usize),

    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace deficit {deficit:e} exceeds budget {budget:e}")]
    TraceBudget { deficit: f64, budget: f64 },

    #[error("cutoff exhausted at electron {step}: trace deficit {deficit:e} exceeds budget {budget:e}")]
    CutoffExhausted { step: usize, deficit: f64, budget: f64 },

    #[error("momentum grid too narrow or coarse: normalization deficit {0:e}")]
    GridTooCoarse(f64),

    #[error("momentum shift {0} is not finite")]
    OutOfSpan(f64),

    #[error("perturbative update needs |g| <= 0.3, got {0}")]
    CouplingTooLarge(f64),

    #[error("g2(0) is undefined for a state with zero mean photon number")]
    ZeroMean,
}
