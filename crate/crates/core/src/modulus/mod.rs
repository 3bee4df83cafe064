//! p-modulus of a parametrized surface family.
//!
//! For `f: U×V → Ω` with `σ_x = f(x, V)`:
//!
//! ```text
//! l(x)     = ∫_V (|J^y_f| / |J_f|)^q |J_f| dy
//! mod_p(Σ) = ∫_U l(x)^{1−p} dx
//! ρ(f(x,y)) = (|J^y_f| / |J_f|)^{q−1} / l(x)
//! ```
//!
//! The level-set route integrates `|J_F|^{q−1}` over each `σ_x` for the
//! submersion `F = π ∘ f⁻¹` instead; the two agree because
//! `|J^y_f| = |J_f| · (|J_F| ∘ f)`.

mod checks;
mod density;

pub use checks::{
    admissibility_check, coarea_check, extremality_gaps, extremality_probe, submersion_modulus,
    ProbeSettings, INCONSISTENCY_TOLERANCE,
};
pub use density::{extremal_density, ExtremalDensity, SurfaceDensity};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::{JacobianSample, ParametrizedFamily};
use crate::quadrature::{QuadratureScheme, TensorRule};

/// Smallest admissible `l(x)`.
pub const MIN_SURFACE_INTEGRAL: f64 = 1e-300;

/// A conjugate pair `(p, q)` with `p > 1` and `1/p + 1/q = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponent {
    p: f64,
    q: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0 + 1e-9) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self {
            p,
            q: p / (p - 1.0),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The pair with roles swapped, `(q, p)`.
    pub fn conjugate(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LSample {
    pub x: Vec<f64>,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulusReport {
    pub exponent: Exponent,
    pub modulus: f64,
    /// `l(x)` at the outer quadrature nodes.
    pub l_samples: Vec<LSample>,
    /// Smallest `|J_f|` met at any node.
    pub min_jacobian: f64,
    pub node_count: usize,
    /// `|mod(refined) − mod(base)|` when computed with an estimate.
    pub quadrature_error: Option<f64>,
}

impl ModulusReport {
    pub fn p(&self) -> f64 {
        self.exponent.p()
    }

    pub fn q(&self) -> f64 {
        self.exponent.q()
    }
}

/// Jacobians at `(x, y)`, rejecting a degenerate `|J_f|`.
pub(crate) fn checked_jacobians(
    family: &ParametrizedFamily,
    x: &[f64],
    y: &[f64],
    floor: f64,
) -> Result<JacobianSample> {
    let jac = family.jacobians(x, y)?;
    if !(jac.volume > floor) {
        return Err(Error::DegenerateJacobian {
            x: x.to_vec(),
            y: y.to_vec(),
            value: jac.volume,
        });
    }
    Ok(jac)
}

pub(crate) fn check_surface_integral(x: &[f64], value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NonFiniteIntegrand { x: x.to_vec() });
    }
    if value < MIN_SURFACE_INTEGRAL {
        return Err(Error::VanishingLength {
            x: x.to_vec(),
            value,
        });
    }
    Ok(value)
}

struct LValue {
    l: f64,
    min_jacobian: f64,
}

fn l_with_rule(
    family: &ParametrizedFamily,
    x: &[f64],
    exponent: Exponent,
    inner: &TensorRule,
    floor: f64,
) -> Result<LValue> {
    let q = exponent.q();
    let mut y = vec![0.0; inner.dim()];
    let mut sum = 0.0;
    let mut min_jacobian = f64::INFINITY;
    for j in 0..inner.len() {
        let w = inner.node_into(j, &mut y);
        let jac = checked_jacobians(family, x, &y, floor)?;
        min_jacobian = min_jacobian.min(jac.volume);
        let value = (jac.surface / jac.volume).powf(q) * jac.volume;
        if !value.is_finite() {
            return Err(Error::NonFiniteIntegrand { x: x.to_vec() });
        }
        sum += w * value;
    }
    Ok(LValue {
        l: check_surface_integral(x, sum)?,
        min_jacobian,
    })
}

/// `l(x) = ∫_V (|J^y_f|/|J_f|)^q |J_f| dy` by tensor quadrature over `V`.
pub fn l_of_x(
    family: &ParametrizedFamily,
    x: &[f64],
    exponent: Exponent,
    quad: &QuadratureScheme,
) -> Result<f64> {
    let floor = family.degeneracy_floor()?;
    let inner = quad.tensor_rule(family.v());
    Ok(l_with_rule(family, x, exponent, &inner, floor)?.l)
}

/// `mod_p(Σ) = ∫_U l(x)^{1−p} dx`, with `l` evaluated exactly at each outer
/// node. Outer nodes are processed in parallel; the sum is taken in node order.
pub fn modulus_p(
    family: &ParametrizedFamily,
    exponent: Exponent,
    quad: &QuadratureScheme,
) -> Result<ModulusReport> {
    let floor = family.degeneracy_floor()?;
    let outer = quad.tensor_rule(family.u());
    let inner = quad.tensor_rule(family.v());
    let per_node = (0..outer.len())
        .into_par_iter()
        .map(|i| {
            let (x, w) = outer.node(i);
            let value = l_with_rule(family, &x, exponent, &inner, floor)?;
            Ok((x, w, value))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut modulus = 0.0;
    let mut min_jacobian = f64::INFINITY;
    let mut l_samples = Vec::with_capacity(per_node.len());
    for (x, w, value) in per_node {
        modulus += w * value.l.powf(1.0 - exponent.p());
        min_jacobian = min_jacobian.min(value.min_jacobian);
        l_samples.push(LSample { x, l: value.l });
    }
    Ok(ModulusReport {
        exponent,
        modulus,
        l_samples,
        min_jacobian,
        node_count: outer.len() * inner.len(),
        quadrature_error: None,
    })
}

/// Runs [`modulus_p`] on `quad` and on its refinement; returns the refined
/// report with the difference as its error estimate.
pub fn modulus_with_error_estimate(
    family: &ParametrizedFamily,
    exponent: Exponent,
    quad: &QuadratureScheme,
) -> Result<ModulusReport> {
    let coarse = modulus_p(family, exponent, quad)?;
    let mut fine = modulus_p(family, exponent, &quad.refined())?;
    fine.quadrature_error = Some((fine.modulus - coarse.modulus).abs());
    fine.node_count += coarse.node_count;
    Ok(fine)
}
