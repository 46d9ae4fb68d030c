use thiserror::Error;

/// Errors raised by the analytic and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter failed validation. The message names the parameter and
    /// the constraint it violated.
    #[error("invalid parameter `{name}`: {constraint} (got {value})")]
    InvalidParameter {
        name: &'static str,
        constraint: &'static str,
        value: String,
    },

    /// The tweak density is undefined for `f` equal to 0 or 1: the modified
    /// Sharpe is then perfectly (anti-)correlated with the original and the
    /// conditioned density collapses to a point mass.
    #[error("degenerate correlation: `f` must lie strictly inside (0, 1), got {f}")]
    DegenerateCorrelation { f: String },

    /// The conditioning event `SR < theta` carries no probability mass, so
    /// conditional quantities are undefined.
    #[error("conditioning event SR < theta has zero probability (theta too far below sr_true)")]
    ConditioningEventVanishes,

    /// The tail above the threshold carries too little mass for a conditional
    /// mean to be numerically meaningful.
    #[error(
        "unreliable tail: mass above the threshold is {tail_mass:e}, below the floor {floor:e}"
    )]
    UnreliableTail { tail_mass: f64, floor: f64 },

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error(
        "quadrature did not converge: error estimate {error_estimate:e} after {evaluations} \
         evaluations on [{lo}, {hi}]"
    )]
    QuadratureNonConvergence {
        error_estimate: f64,
        evaluations: usize,
        lo: f64,
        hi: f64,
    },

    /// A return series is unusable for Sharpe estimation.
    #[error("degenerate series: {reason}")]
    DegenerateSeries { reason: &'static str },

    /// A slice would contain too few observations for its Sharpe estimate to
    /// be approximately Gaussian.
    #[error(
        "slice too thin: {days_per_slice} days per slice with n_buckets={n_buckets}, \
         need at least {min_days}"
    )]
    SliceTooThin {
        days_per_slice: usize,
        n_buckets: usize,
        min_days: usize,
    },

    /// `round(f * N)` is zero, so a tweak cannot flip any slice.
    #[error("round(f*N) must be >= 1: f={f} with n_buckets={n_buckets} rounds to zero flips")]
    FlipCountZero { f: String, n_buckets: usize },

    /// The expected out-of-sample Sharpe is exactly zero, so the overfitting
    /// factor is undefined.
    #[error("overfitting factor undefined: expected out-of-sample Sharpe is zero")]
    UndefinedOff,

    /// Too many simulated paths hit the tweak-attempt cap.
    #[error(
        "{exhausted} of {n_paths} paths exhausted max_attempts={max_attempts} \
         (more than 0.1% of the ensemble)"
    )]
    TooManyExhausted {
        exhausted: u64,
        n_paths: u64,
        max_attempts: u32,
    },
}

impl Error {
    pub(crate) fn invalid<V: std::fmt::Display>(
        name: &'static str,
        constraint: &'static str,
        value: V,
    ) -> Self {
        Error::InvalidParameter {
            name,
            constraint,
            value: value.to_string(),
        }
    }

    /// True when the error indicates bad input rather than a numeric failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::DegenerateCorrelation { .. }
                | Error::DegenerateSeries { .. }
                | Error::SliceTooThin { .. }
                | Error::FlipCountZero { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
