//! p-modulus of families of `m`-dimensional surfaces in `ℝⁿ`.
//!
//! A family is given by a diffeomorphism `f: U×V → Ω` whose surfaces are the
//! slices `σ_x = f(x, V)`. The crate evaluates the closed-form modulus and
//! extremal density of such a family, checks them against the level-set
//! (submersion) route and the co-area formula, and cross-validates them with
//! a discrete convex program built directly from the definition of modulus.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod family;
pub mod linalg;
pub mod modulus;
pub mod oracle;
pub mod quadrature;

pub use error::{Error, Result};
pub use family::{key_relation_residual, BoxDomain, ParametrizedFamily, Submersion};
pub use linalg::{companion_block, generalized_norm, verify_factorization, Matrix};
pub use modulus::{
    admissibility_check, coarea_check, extremal_density, extremality_probe, l_of_x, modulus_p,
    submersion_modulus, Exponent, ExtremalDensity, ModulusReport, ProbeSettings,
};
pub use quadrature::{QuadratureKind, QuadratureScheme};
