//! Numerical toolkit for the maximum principle of Mayer problems whose
//! dynamics are higher-order controlled Euler-Lagrange equations.
//!
//! The crate builds the auxiliary boundary-value functions `h, h′, h″`,
//! evaluates the homotopy formula for terminal-cost differences as a
//! two-sided identity, constructs needle variations, estimates corrective
//! terms, and certifies or refutes candidate optimal controls. The classical
//! first-order maximum principle is recovered as a special case and doubles
//! as a cross-validation oracle.
//!
//! Module map:
//!
//! * [`scalar`] — dual numbers and truncated Taylor series (exact derivatives),
//! * [`jetspace`] — jet coordinates, scalar fields over jets, total derivative,
//! * [`control`] — control boxes and control curves,
//! * [`dynamics`] — normal-form realizations, adaptive integration, Lipschitz probe,
//! * [`problem`] — defining triples, Euler-Lagrange residuals, the function 𝒫,
//! * [`auxiliary`] — `h`-functions, `μ`, and the controlled Poincaré-Cartan form,
//! * [`homotopy`] — variation surfaces and both sides of the homotopy formula,
//! * [`needle`] — needle variations, corrective terms, transversality, verdicts,
//! * [`classical`] — first-order embedding, adjoints, bang-bang synthesis,
//! * [`builtin`] — the worked problems in all their formulations.

pub mod auxiliary;
pub mod builtin;
pub mod classical;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod homotopy;
pub mod jetspace;
pub mod needle;
pub mod problem;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
