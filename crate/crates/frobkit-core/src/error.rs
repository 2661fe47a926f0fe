use thiserror::Error;

/// Every failure mode across the crate. Variants carry enough data to
/// reconstruct the obstruction in reports.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("polynomial is not Eisenstein: {0}")]
    NotEisenstein(String),
    #[error("element is indistinguishable from zero at working precision")]
    PrecisionZero,
    #[error("{0} is not a subfield of {1} along a supported tower")]
    NotSubfield(String, String),
    #[error("input does not have norm 1 at precision (valuation {0})")]
    NormNotOne(String),
    #[error("no witness found in the deterministic candidate enumeration (precision {0})")]
    NoWitness(u32),
    #[error("precision exhausted: {0}")]
    PrecisionLoss(String),
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("operands live over different coefficient rings")]
    RingMismatch,
    #[error("characteristic polynomial coefficients are not invariant at precision: {0}")]
    InvarianceFailure(String),
    #[error("newton polygon segments are not separable at precision: {0}")]
    InseparableSlopes(String),
    #[error("slope factor dimensions disagree across ring factors: {0}")]
    FactorInconsistency(String),
    #[error("field growth budget exceeded (largest extension tried: {0})")]
    BudgetExceeded(u32),
    #[error("eigenvalue does not lie in the target field at precision")]
    EigenvalueNotInK,
    #[error("descent obstructed: {reason} (valuation {valuation})")]
    Obstructed { reason: String, valuation: String },
    #[error("slope 0 does not occur with multiplicity exactly 1 (slope-0 factor degree {0})")]
    SlopeZeroNotSimple(usize),
    #[error("characteristic polynomial coefficients leave the target subfield")]
    CharPolyNotRational,
    #[error("endomorphism algebra is larger than the coefficient field (dimension {0})")]
    EndTooBig(usize),
    #[error("object is not isomorphic to its Galois twist (hom space is zero)")]
    NotIsomorphicToTwist,
    #[error("point slopes are not of the form {{-s/r, s/r}} with s/r > 0: {0}")]
    NotAntisymmetricSlopes(String),
    #[error("slope bound violated: {0}")]
    BoundViolation(String),
    #[error("the supplied maps do not satisfy the descent-datum condition: {0}")]
    NotADatum(String),
    #[error("slope {0} is negative; no integral lattice exists")]
    NegativeSlope(String),
    #[error("slope {0} exceeds 1; no Dieudonne lattice exists")]
    SlopeAboveOne(String),
    #[error("polynomial coefficients are not algebraic integers: {0}")]
    NonIntegralInput(String),
    #[error("malformed polynomial: {0}")]
    MalformedPolynomial(String),
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unsupported tower: {0}")]
    UnsupportedTower(String),
}

pub type Result<T> = std::result::Result<T, Error>;
