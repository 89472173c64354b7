//! Exact symbolic algebra over phase-space expressions and first-order operators.

pub mod catalog;
pub mod expr;
pub mod fieldop;
pub mod fields;
pub mod poly;
pub mod weights;

pub use catalog::{verify_identity_catalog, CertificateEntry, CertificateReport, Status};
pub use expr::{Expr, Var};
pub use fieldop::FieldOp;
pub use fields::FieldId;
pub use poly::Poly;
pub use weights::{weight_expr, WeightCatalog, WeightId};
