use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("monomial division is not exact")]
    NonDivisible,
    #[error("log(r0) may only be multiplied by constants")]
    LogProduct,
    #[error("polynomial is not weight-homogeneous")]
    NotHomogeneous,
    #[error("operation undefined on a log(r0) term")]
    LogTerm,
    #[error("image of the unit variable must be a single power of it")]
    NonUnitSubstitution,
    #[error("log(r0) can only be mapped to log of the unit variable itself")]
    LogSubstitution,
    #[error("no image given for moment index {0}")]
    MissingImage(u32),
    #[error("unknown boundary variable `{0}`")]
    UnknownVariable(String),
    #[error("bell polynomial B({n},{k}) needs {needed} arguments, got {got}")]
    InsufficientArguments {
        n: usize,
        k: usize,
        needed: usize,
        got: usize,
    },
    #[error("the two free energy extraction formulas disagree at genus {0}")]
    ExtractionMismatch(u32),
    #[error("indices do not satisfy sum(d_i - 1) = 3g - 3 for an integer g >= 2")]
    DimensionMismatch,
    #[error("genus {g} outside the available range {min}..={max}")]
    GenusOutOfRange { g: u32, min: u32, max: u32 },
    #[error("variable t1 has no counterpart in this convention")]
    ForbiddenVariable,
    #[error("rational seed did not reduce to a Laurent polynomial")]
    SimplificationFailure,
    #[error("2 - 2g - B = {0} is not negative")]
    UnstableTopology(i64),
    #[error("exponent {0} is outside the domain of the integral operator")]
    UnsupportedExponent(i32),
    #[error("input contains odd powers of the variable")]
    OddInput,
    #[error("input contains positive powers of the variable")]
    UnboundedInput,
    #[error("sample points coincide (or have equal squares) or hit zero")]
    CoincidentPoints,
    #[error("newton iteration did not converge within {0} steps")]
    NoConvergence(usize),
    #[error("iterate left the branch 1 + c > 0")]
    BranchViolation,
    #[error("point lies on the support cut")]
    OnCut,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid model: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;
