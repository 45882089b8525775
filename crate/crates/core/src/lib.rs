//! Numerics for Bergman-space computations on a lens domain in the plane and
//! for Hilbert–Schmidt diagnostics of Hankel-type operators on a family of
//! unbounded Reinhardt domains in C².
//!
//! The crate is organized around five computational areas:
//!
//! * [`geometry`] — the lens `D₁(0) ∩ D₁(1)`, its Riemann map onto the unit
//!   disc with derivatives and inverse, and membership predicates for the
//!   Reinhardt model domains.
//! * [`quadrature`] — Gauss–Legendre rules composed into disc, lens, and
//!   improper radial integrators with corner/tail grading and divergence
//!   detection.
//! * [`bergman`] — Bergman kernels for disc, lens, and their product, a
//!   compactly supported smooth symbol on the lens, and numerical Bergman
//!   projection.
//! * [`regularity`] — Sobolev seminorms, Lᵖ norms, and refinement-based
//!   divergence probes for the stocked functions.
//! * [`hankel`] — squared monomial norms (moments) on the Reinhardt domains
//!   and Hilbert–Schmidt partial sums for Hankel operators with conjugate
//!   symbols.
//! * [`pproperty`] — pairs of real hypersurfaces in C², their intersection
//!   manifolds, complex Hessians of squared-distance functions, and
//!   plurisubharmonicity certification.

pub mod bergman;
pub mod error;
pub mod geometry;
pub mod hankel;
pub mod pproperty;
pub mod quadrature;
pub mod regularity;

pub use bergman::{BumpSpec, KernelEval};
pub use error::{Error, Result};
pub use geometry::{contains, corner_distance, DomainId, LensMap, Point2};
pub use hankel::{
    DoubleSumTrace, HsDiagnostics, MomentMethod, MomentRow, MomentTable, ThroatDisplayRow,
};
pub use pproperty::{
    DefiningPair, HessianReport, ManifoldPatch, ManifoldSample, PshCertificate, Region,
};
pub use quadrature::{IntegralResult, QuadratureSpec, TailSubstitution};
pub use regularity::{
    DerivativeSource, FnDescriptor, NormKind, NormSpec, RefinementTrace, Verdict,
};
