use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("parameter path: {0}")]
    Parameter(String),

    #[error("state out of range: {0}")]
    Range(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("blow-up at t = {t}: {detail}")]
    BlowUp { t: f64, detail: String },

    #[error("no convergence after {iterations} iterations (residual {residual:e}); last iterate {last:?}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("converged to an infeasible point: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("root isolation: {0}")]
    Roots(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("state is not steady: residual {0:e}")]
    NotSteady(f64),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("dominance construction failed: {0}")]
    Dominance(String),

    #[error("singular market: {0}")]
    SingularMarket(String),

    #[error("simulation setup: {0}")]
    Simulation(String),
}

impl Error {
    /// Solver failures as opposed to bad input.
    pub fn is_convergence(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::Infeasible(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
