//! Numerical toolkit for heavy-fluxonium circuits protected by bi-fluxon
//! tunneling.

pub mod bloch;
pub mod coherence;
pub mod dressed;
pub mod error;
pub mod fit;
pub mod formats;
pub mod linalg;
pub mod spectra;
pub mod wkb;

pub use error::{CoreError, Result};
pub use spectra::{CircuitParams, HermitianOperator, OperatorKind, SpectrumTable};
