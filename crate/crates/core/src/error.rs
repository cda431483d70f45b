use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    InvalidArgument { name: &'static str, reason: String },
    /// Two sites that were expected to be nearest neighbours are not.
    NotNeighbors,
    /// A site or point lies outside the region it was looked up in.
    OutsideRegion,
    /// A trajectory does not reach far enough in time or clock.
    HorizonExceeded { requested: f64, available: f64 },
    /// The deterministic solver would need more work than allowed.
    BudgetExceeded { required: f64, budget: f64, hint: &'static str },
    /// An iterative solve stopped at its iteration cap.
    NotConverged { iterations: usize, residual: f64 },
    /// The open-edge probability is not below the critical probability.
    Supercritical { open_probability: f64, critical: f64 },
    /// Two site sets that must be disjoint share a site.
    Overlap,
    /// A set that must be nonempty is empty.
    Empty(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::NotNeighbors => f.write_str("sites are not nearest neighbours"),
            Error::OutsideRegion => f.write_str("outside the region"),
            Error::HorizonExceeded { requested, available } => {
                write!(f, "requested {requested} but the trajectory only reaches {available}")
            }
            Error::BudgetExceeded { required, budget, hint } => {
                write!(f, "work {required:.3e} exceeds budget {budget:.3e}; {hint}")
            }
            Error::NotConverged { iterations, residual } => {
                write!(f, "no convergence after {iterations} iterations (relative residual {residual:.3e})")
            }
            Error::Supercritical { open_probability, critical } => write!(
                f,
                "open probability {open_probability:.4} is not below the critical value {critical:.4}"
            ),
            Error::Overlap => f.write_str("site sets overlap"),
            Error::Empty(what) => write!(f, "{what} is empty"),
        }
    }
}

impl core::error::Error for Error {}
