//! Self-consistent particle simulation of the cut-off system.

pub mod ensemble;
pub mod init;
pub mod run;

pub use ensemble::{Deposit, ParticleEnsemble};
pub use init::InitialData;
pub use run::{run, DiagnosticsSeries, RunOutput, RunSummary, SimConfig, Snapshot};
