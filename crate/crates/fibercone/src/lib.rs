//! Exact invariants of expanding irreducible train track maps and their
//! free-by-cyclic mapping tori: transition matrices over group rings,
//! McMullen polynomials and cones, generalized fibered cones, Stallings
//! folding sequences, Alexander norms, fiber graphs with first-return maps,
//! and empirical lattice-gap / witness-exponent certificates.
//!
//! All decision procedures are exact: integer and rational arithmetic only,
//! with arbitrary precision by default. Floating point appears solely in
//! reported approximations of certified Perron-Frobenius intervals.

pub mod cones;
pub mod cover;
pub mod fibers;
pub mod fixtures;
pub mod folding;
pub mod graph;
pub mod laurent;
pub mod linalg;
pub mod scalar;
pub mod section;
pub mod words;

/// Default exact integer scalar.
pub type Int = num_bigint::BigInt;
/// Default exact rational scalar.
pub type Rat = num_rational::BigRational;
/// Laurent polynomial over the default scalar.
pub type Poly = laurent::LaurentPoly<Int>;
/// Rectangular matrix of Laurent polynomials over the default scalar.
pub type PolyMatrix = laurent::LaurentMatrix<Int>;
/// Integer matrix over the default scalar.
pub type IntMatrix = linalg::IMat<Int>;

pub use cones::{CohomClass, NewtonPolytope, OpenCone, RationalSlice};
pub use cover::{HStructure, LabeledTransition, OmegaSupport, WitnessRecord};
pub use fibers::{AlexanderData, FiberGraph, FiberReport, MappingTorusPresentation};
pub use folding::{Fold, FoldingSequence, Subdivision, Suspension};
pub use graph::{CombGraph, DartId, EdgeId, EdgePath, GraphMap, TransitionMatrix, VertexId};
pub use section::CellDegree;
