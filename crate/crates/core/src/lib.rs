//! Exact brackets, dynamical vector fields and kinetic equations on
//! symplectic, cosymplectic, contact and cocontact Darboux charts.

pub mod brackets;
pub mod chart;
pub mod error;
pub mod fields;
pub mod flow;
pub mod kinetics;
pub mod musical;
pub mod poly;
pub mod scenario;

pub use chart::{Chart, ChartKind, OneFormExpr, TwoFormExpr, VectorFieldExpr};
pub use error::{GeoError, Result};
pub use poly::Poly;
