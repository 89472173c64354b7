//! Vector-field algebra, characteristics, radial Poisson solver and diagnostics for the
//! spherically symmetric massless Vlasov-Poisson system.

pub mod characteristics;
pub mod diagnostics;
pub mod error;
pub mod ineq;
pub mod jet;
pub mod phasegeom;
pub mod poisson;
pub mod quadrature;
pub mod reduce;
pub mod sim;
pub mod symkernel;

pub use characteristics::{CharState, FieldHistory, FieldSource, Trajectory};
pub use error::{CharError, GeomError, IneqError, SimError};
pub use phasegeom::PhasePoint;
pub use poisson::{RadialField, RadialGrid};
pub use sim::{InitialData, ParticleEnsemble, SimConfig};
pub use symkernel::{CertificateReport, Expr, FieldId, FieldOp, Var, WeightId};
