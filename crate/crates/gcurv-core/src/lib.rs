//! Numerical engine for exact Courant algebroids with semi-Riemannian
//! generalised metrics.
//!
//! Everything is chart-based and pointwise: fields are expression-valued,
//! evaluation runs over truncated order-3 jets ([`jet::Jet3`]), so every
//! derivative that enters a curvature formula is exact up to rounding.
//!
//! Module map:
//! - [`expr`], [`jet`]: the expression DSL and jet arithmetic underneath it.
//! - [`tensor`], [`fields`]: dense pointwise tensors; charts and the ambient
//!   structure (metric g, closed 3-form H, dilaton pair (X, ξ)).
//! - [`classical`]: Christoffel symbols, Riemann/Ricci/scalar/Weyl curvature,
//!   covariant derivatives, codifferential, Lie derivative.
//! - [`gen_curvature`]: the canonical generalised Levi-Civita connection's
//!   curvature — pure/mixed Riemann blocks, mixed Ricci, generalised scalar,
//!   dilaton equation of motion.
//! - [`hypersurface`]: induced structures, generalised second fundamental
//!   form, Gauss/Codazzi identity residuals, energy/momentum/classical
//!   constraint equations.
//! - [`flatness`]: diagnostics for canonically flat structures and the
//!   neutral-signature flat example.
//! - [`fundamental`]: flat Gauss-Codazzi residuals for abstract hypersurface
//!   data and immersion reconstruction from (h, k).
//! - [`scenario`]: named scenario registry, JSON ingestion, verification
//!   suites and reports.

pub mod classical;
pub mod expr;
pub mod fields;
pub mod flatness;
pub mod fundamental;
pub mod gen_curvature;
pub mod hypersurface;
pub mod jet;
pub mod scenario;
pub mod tensor;
