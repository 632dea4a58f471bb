use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite derivative encountered at t = {t}")]
    IntegrationFault { t: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("(A, b) pair is not controllable")]
    Uncontrollable,

    #[error("pole set is not closed under conjugation")]
    PolesNotConjugate,

    #[error("matrix is not Hurwitz; Lyapunov equation has no positive-definite solution")]
    NotHurwitz,

    #[error("Q must be symmetric positive-definite")]
    QNotPositiveDefinite,

    #[error("c A_m^-1 b is singular; feedforward gain undefined")]
    SingularFeedforward,

    #[error("transfer function is not strictly proper (deg num = {num}, deg den = {den})")]
    ImproperTransferFunction { num: usize, den: usize },

    #[error("plant state diverged at t = {t} (||x||_inf > {threshold})")]
    Divergence { t: f64, threshold: f64 },

    #[error("no fuzzy rule fired (aggregate membership is identically zero)")]
    NoRuleFired,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
