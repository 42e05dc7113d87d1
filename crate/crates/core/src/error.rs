use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    // netlist input
    #[error("line {line}: unknown element kind `{kind}`")]
    UnknownElementKind { line: usize, kind: String },
    #[error("line {line}: no element connects to ground node 0")]
    MissingGround { line: usize },
    #[error("line {line}: value must be positive, got {value}")]
    NonPositiveValue { line: usize, value: String },
    #[error("line {line}: node `{node}` is only referenced by a coupling")]
    DanglingNode { line: usize, node: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unknown branch `{id}`")]
    UnknownBranch { line: usize, id: String },
    #[error("circuit graph is disconnected: {0}")]
    Disconnected(String),
    #[error("flux tag `{0}` does not identify a unique fundamental loop")]
    AmbiguousLoopTag(String),

    // builder
    #[error("capacitance matrix is singular: {0}")]
    SingularCapacitance(String),
    #[error("mutual inductance {0} has coupling |k| >= 1")]
    PerfectCouplingSingular(String),
    #[error("irrotational gauge undefined: C1 + C2 must be positive")]
    DegenerateGauge,
    #[error("perturbation dominates: ||E||*||C0^-1|| = {0}")]
    DominantPerturbation(f64),
    #[error("unsupported circuit: {0}")]
    Unsupported(String),

    // spectrum
    #[error("charge truncation n_max = {0} is below the minimum of 10")]
    TruncationTooSmall(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("sweep point {index}: {source}")]
    SweepPoint { index: usize, source: Box<Error> },

    // network
    #[error("port matrix singular at s = {0}")]
    SingularAtSample(String),
    #[error("load impedance equals -Z0")]
    PoleAtInput,
    #[error("transmission line evaluated at a pole of coth: s = {0}")]
    EvaluatedAtPole(String),
    #[error("no resonance in window [{0}, {1}] rad/s")]
    NoResonanceInWindow(f64, f64),
    #[error("negative effective capacitance at omega = {0} rad/s")]
    NegativeEffectiveCapacitance(f64),
    #[error("participation must be non-negative, got {0}")]
    NegativeParticipation(f64),
    #[error("zero turn ratio for mode {mode} at port {port}")]
    ZeroTurnRatio { mode: usize, port: usize },
    #[error("modes closer than the resolution: {0}")]
    NearDegenerateModes(String),

    // dynamics
    #[error("time step too large: dt*||L|| = {0} (limit 0.1)")]
    StepTooLarge(f64),
    #[error("exponential fit rejected: R^2 = {0}")]
    PoorFit(f64),
    #[error("amplifier at or above threshold")]
    ThresholdSingularity,

    // perturb
    #[error("states {0} and {1} are degenerate across blocks")]
    DegenerateAcrossBlocks(usize, usize),
    #[error("degenerate subspace mixes parities: {0}")]
    MixedParity(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad user input, false for numerical failures.
    pub fn is_input_error(&self) -> bool {
        use Error::*;
        match self {
            UnknownElementKind { .. }
            | MissingGround { .. }
            | NonPositiveValue { .. }
            | DanglingNode { .. }
            | Malformed { .. }
            | DuplicateId { .. }
            | UnknownBranch { .. }
            | Disconnected(_)
            | AmbiguousLoopTag(_)
            | Unsupported(_)
            | TruncationTooSmall(_)
            | DimensionMismatch(_)
            | NegativeParticipation(_)
            | PerfectCouplingSingular(_)
            | DegenerateGauge
            | Io(_) => true,
            SweepPoint { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
