//! Extremal members of the marginal-compatible set and searches for
//! Hamiltonians that stress the gap bounds.

mod maxent;
mod saturation;

pub use maxent::{max_entropy_state, HyperedgeMultiplier, MaxEntOptions, MaxEntResult};
pub use saturation::{nelder_mead, saturation_search, NelderMeadOutcome, RestartLog, SaturationConfig, SaturationResult, TraceEntry};
