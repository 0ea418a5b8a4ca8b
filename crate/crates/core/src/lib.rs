//! Pure dephasing of a qubit coupled to a bosonic bath: decoherence and
//! phase functions, measurement-scheme dependent corrections, and the
//! search for recoherence.

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod measurement;
pub mod output;
pub mod quad;
pub mod recoherence;
pub mod roots;
pub mod specfun;
pub mod sweep;

pub use error::{Error, Result};
