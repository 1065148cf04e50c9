//! Numerical differential geometry of Euclidean hypersurfaces that carry a
//! totally geodesic foliation of codimension one.
//!
//! The crate builds the hypersurface families that solve this problem —
//! partial tubes over curves, rotation hypersurfaces, ruled hypersurfaces,
//! cylindrical and conical surface-like hypersurfaces, and envelopes of
//! one-parameter families of flat hypersurfaces — and verifies the pointwise
//! machinery behind them on sampled charts: totally geodesic and curvature
//! invariant distribution tests, the three-way shape-operator classification,
//! adapted moving frames and their Codazzi/Gauss residual identities.
//!
//! Modules:
//! - [`numjet`]: jets of smooth maps via nested dual numbers and central
//!   finite differences (two independent backends).
//! - [`curves`]: Frenet apparatus, curve synthesis from prescribed
//!   curvatures, parallel normal frames, admissibility margins.
//! - [`geometry`]: fundamental forms, shape operator, Christoffel symbols,
//!   covariant derivatives, metric-aware subspace algebra.
//! - [`constructions`]: builders for each hypersurface family, each returning
//!   the chart together with its distinguished totally geodesic distribution.
//! - [`classify`]: pointwise predicates, the case (i)/(ii)/(iii)
//!   classification, adapted frames and the residual suite.
//! - [`cli`]: batch runner reading a JSON config, writing a JSON report and
//!   optional OBJ mesh.

pub mod classify;
pub mod cli;
pub mod constructions;
pub mod curves;
pub mod geometry;
pub mod numjet;
