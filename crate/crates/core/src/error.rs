use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("non-total expression at byte {offset}: denominator is not bounded away from zero")]
    NonTotal { offset: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t} outside span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("identity defect {defect:e} exceeds tolerance {tol:e}")]
    IdentityDefect { defect: f64, tol: f64 },

    #[error("matrix is not a projection (defect {defect:e})")]
    NotProjection { defect: f64 },

    #[error("no decay detected (fitted rate {rate})")]
    NoDecay { rate: f64 },

    #[error("cap exhausted: found {found} of {requested} near periods")]
    CapExhausted { found: usize, requested: usize },

    #[error("evaluation domain too small: {0}")]
    Domain(String),

    #[error("span [{lo}, {hi}] does not cover the required [{need_lo}, {need_hi}]")]
    SpanInsufficient {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("A2 violation: {0}")]
    A2Violation(String),

    #[error("step {step} exceeds a quarter of the minimum delay {tau_low}")]
    StepBound { step: f64, tau_low: f64 },

    #[error("non-positive delay {delay} evaluated at t = {t}")]
    NegativeDelay { t: f64, delay: f64 },

    #[error("invalid Mackey-Glass exponent {0} (must be finite and > 0)")]
    InvalidExponent(f64),

    #[error("hypotheses not satisfied: {violated}")]
    Refused { violated: String },

    #[error("non-contraction at iteration {iteration}: ratio {ratio} > {limit}")]
    NonContraction {
        iteration: usize,
        ratio: f64,
        limit: f64,
    },

    #[error("iterate {iteration} left [{gamma1}, {gamma2}] at t = {t} (value {value})")]
    OmegaExit {
        iteration: usize,
        t: f64,
        value: f64,
        gamma1: f64,
        gamma2: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
