use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive potential at point `{0}`")]
    NonPositivePotential(String),
    #[error("non-positive function value at point `{0}`")]
    NonPositiveFunction(String),
    #[error("duplicate point id `{0}`")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("point `{0}` is not assigned to any class")]
    Unassigned(String),
    #[error("point `{0}` is assigned to more than one class")]
    MultiplyAssigned(String),
    #[error("generator `{name}` maps `{from}` to `{to}` in another class")]
    GeneratorCrossesClasses { name: String, from: String, to: String },
    #[error("generator `{0}` is not a permutation")]
    NotPermutation(String),
    #[error("cycle inconsistency at edge ({0}, {1})")]
    CycleInconsistency(String, String),
    #[error("disconnected class presentation for class `{0}`")]
    Disconnected(String),
    #[error("points `{0}` and `{1}` lie in different classes")]
    DifferentClasses(String, String),
    #[error("empty anchor set")]
    EmptyAnchor,
    #[error("invalid subrelation: {0}")]
    InvalidSubrelation(String),
    #[error("invalid tower: {0}")]
    InvalidTower(String),
    #[error("invalid interval: {0}")]
    InvalidInterval(String),
    #[error("not lacunary enough: `{0}` and `{1}` tie in one piece, shrink U")]
    NotLacunary(String, String),
    #[error("input set is not E-complete: class `{0}` is missed")]
    NotComplete(String),
    #[error("input set is not independent: `{0}` and `{1}` are adjacent")]
    NotIndependent(String, String),
    #[error("not certified aperiodic: {0}")]
    NotCertifiedAperiodic(String),
    #[error("direction inapplicable: {0}")]
    InapplicableLift(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("oscillation hypothesis violated: oscillation {osc} is not below epsilon {eps}")]
    OscillationTooLarge { osc: String, eps: String },
    #[error("postcondition failed: {0}")]
    Postcondition(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("witness identity fails at ({0}, {1})")]
    WitnessMismatch(String, String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no certified defect: {0}")]
    NoCertifiedDefect(String),
    #[error("inconclusive: {}", .0.join("; "))]
    Inconclusive(Vec<String>),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by unreadable or structurally invalid input.
    pub fn is_malformed(&self) -> bool {
        !matches!(self, Error::Inconclusive(_) | Error::NoCertifiedDefect(_) | Error::NotCertifiedAperiodic(_))
    }
}
