//! Spectra of the linearized 2D Euler equation at shear fixed points on the
//! integer lattice, by continued fractions, finite sections and direct
//! simulation.

pub mod contfrac;
pub mod error;
pub mod euler_core;
pub mod export;
pub mod lattice;
pub mod matrixop;
pub mod rk4;
pub mod roots;
pub mod subsystem;
pub mod verify;

pub use contfrac::{find_eigenvalues, CFParams, EigenQuadruple, FindOptions, SearchBox};
pub use error::Error;
pub use euler_core::{ModeSet, VorticityField};
pub use lattice::{canonical_label, classes_meeting_disk, ClassLabel, WaveVector};
pub use matrixop::{essential_band, truncated_spectrum, BandSpec, OperatorKind, TruncatedOperator};
pub use num_complex::Complex64;
pub use subsystem::{classify_stability, ComplexSeq, StabilityKind, StabilityVerdict, SubsystemSpec};
pub use verify::{run_acceptance, CriterionResult};
