//! Sequential change diagnosis with CuSum-type statistics.
//!
//! The crate covers the whole pipeline: observation [`models`], running
//! [`statistics`], stopping/identification [`procedures`], Monte Carlo
//! performance estimation ([`montecarlo`]), threshold [`design`], and the
//! run-config driven command line front end ([`cli`]).

pub mod cli;
pub mod design;
pub mod error;
pub mod models;
pub mod montecarlo;
pub mod procedures;
pub mod statistics;

pub use error::{Error, Result};
pub use models::{ChangeModel, Density};
pub use procedures::{ProcedureSpec, RunOutcome, Scenario, Variant};
