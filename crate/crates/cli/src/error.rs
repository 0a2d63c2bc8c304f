use std::collections::BTreeSet;

use pta_core::bench::{BenchError, DigitalError};
use pta_core::io::IoError;
use pta_core::mdp::{CheckError, ExactError};
use pta_core::model::validate::CompletionError;
use pta_core::product::{ProductError, TickError};
use pta_core::region::RegionError;
use pta_core::semantics::SemanticsError;

pub const USAGE: u8 = 1;
pub const INVALID: u8 = 2;
pub const REFUSED: u8 = 3;
pub const INTERNAL: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: INVALID,
            message: message.into(),
        }
    }

    pub fn refused(message: impl Into<String>) -> Self {
        CliError {
            code: REFUSED,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: INTERNAL,
            message: message.into(),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::invalid(e.to_string())
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        let code = match e {
            RegionError::NotWellFormed { .. } | RegionError::InitialInvariant(_) => INVALID,
            _ => REFUSED,
        };
        CliError {
            code,
            message: format!("region MDP: {e}"),
        }
    }
}

impl From<ProductError> for CliError {
    fn from(e: ProductError) -> Self {
        match &e {
            ProductError::Precondition(found) => {
                let kinds: BTreeSet<&str> = found.iter().map(|d| d.kind()).collect();
                CliError::invalid(format!(
                    "product: {e}: {}",
                    kinds.into_iter().collect::<Vec<_>>().join(", ")
                ))
            }
            _ => CliError::invalid(format!("product: {e}")),
        }
    }
}

impl From<TickError> for CliError {
    fn from(e: TickError) -> Self {
        CliError::invalid(format!("tick transform: {e}"))
    }
}

impl From<CompletionError> for CliError {
    fn from(e: CompletionError) -> Self {
        CliError::invalid(format!("completion: {e}"))
    }
}

impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Region(r) => r.into(),
            CheckError::Product(p) => p.into(),
            other => CliError::invalid(other.to_string()),
        }
    }
}

impl From<DigitalError> for CliError {
    fn from(e: DigitalError) -> Self {
        let code = match e {
            DigitalError::NotClosed(_)
            | DigitalError::NonConvexInvariant(_)
            | DigitalError::TooManyStates(_) => REFUSED,
            _ => INVALID,
        };
        CliError {
            code,
            message: format!("digital clocks: {e}"),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::TooLarge { .. } => CliError::refused(format!("exact solver: {e}")),
            ExactError::Singular => CliError::internal(format!("exact solver: {e}")),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        CliError::invalid(e.to_string())
    }
}

impl From<SemanticsError> for CliError {
    fn from(e: SemanticsError) -> Self {
        let code = match e {
            SemanticsError::Stuck { .. } | SemanticsError::InverseLookup(_) => INTERNAL,
            _ => INVALID,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::usage(e.to_string())
    }
}
