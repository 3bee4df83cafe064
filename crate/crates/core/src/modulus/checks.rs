//! Verification routes: admissibility, co-area, the level-set route and the
//! extremality probe.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    check_surface_integral, checked_jacobians, l_of_x, Exponent, ExtremalDensity, LSample,
    ModulusReport,
};
use crate::error::{Error, Result};
use crate::family::{submersion_consistency, ParametrizedFamily, Submersion};
use crate::quadrature::QuadratureScheme;

/// Largest key-relation residual or level-set drift accepted from a submersion.
pub const INCONSISTENCY_TOLERANCE: f64 = 1e-5;

const CONSISTENCY_PROBES_PER_AXIS: usize = 3;

/// `∫_{σ_x} ρ dH^m = ∫_V ρ(x, y) |J^y_f| dy` for each sample `x`.
pub fn admissibility_check(
    family: &ParametrizedFamily,
    density: &ExtremalDensity,
    quad: &QuadratureScheme,
    x_samples: &[Vec<f64>],
) -> Result<Vec<(Vec<f64>, f64)>> {
    let inner = quad.tensor_rule(family.v());
    x_samples
        .par_iter()
        .map(|x| {
            let on_surface = density.on_surface(x)?;
            let mut total = 0.0;
            for (y, w) in inner.iter() {
                let jy = family.jacobians(x, &y)?.surface;
                total += w * on_surface.evaluate(&y)? * jy;
            }
            Ok((x.clone(), total))
        })
        .collect()
}

/// Both sides of the co-area formula, pulled back to `U×V`:
/// `lhs = ∫ (g∘f)(|J_F|∘f)|J_f|` and `rhs = ∫_U ∫_V (g∘f)|J^y_f|`.
pub fn coarea_check<G>(
    family: &ParametrizedFamily,
    submersion: &Submersion,
    g: G,
    quad: &QuadratureScheme,
) -> Result<(f64, f64)>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    let outer = quad.tensor_rule(family.u());
    let inner = quad.tensor_rule(family.v());
    let per_x = (0..outer.len())
        .into_par_iter()
        .map(|i| {
            let (x, wx) = outer.node(i);
            let (mut lhs, mut rhs) = (0.0, 0.0);
            for (y, wy) in inner.iter() {
                let jac = family.jacobians(&x, &y)?;
                let z = family.evaluate(&x, &y)?;
                let gz = g(&z);
                if !gz.is_finite() {
                    return Err(Error::NonFiniteIntegrand { x: x.clone() });
                }
                lhs += wy * gz * submersion.jacobian_norm(&z)? * jac.volume;
                rhs += wy * gz * jac.surface;
            }
            Ok((wx * lhs, wx * rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_x
        .into_iter()
        .fold((0.0, 0.0), |acc, (l, r)| (acc.0 + l, acc.1 + r)))
}

/// Modulus of the level sets of `F` via `ĥ(x) = ∫_{σ_x} |J_F|^{q−1} dH^m` and
/// `mod_p = ∫_U ĥ^{1−p} dx`, with `σ_x` parametrized by `family`.
pub fn submersion_modulus(
    submersion: &Submersion,
    family: &ParametrizedFamily,
    exponent: Exponent,
    quad: &QuadratureScheme,
) -> Result<ModulusReport> {
    let (residual, x) = submersion_consistency(family, submersion, CONSISTENCY_PROBES_PER_AXIS)?;
    if !(residual <= INCONSISTENCY_TOLERANCE) {
        return Err(Error::InconsistentSubmersion { x, residual });
    }
    let floor = family.degeneracy_floor()?;
    let q = exponent.q();
    let outer = quad.tensor_rule(family.u());
    let inner = quad.tensor_rule(family.v());
    let per_x = (0..outer.len())
        .into_par_iter()
        .map(|i| {
            let (x, w) = outer.node(i);
            let mut hat = 0.0;
            let mut min_jacobian = f64::INFINITY;
            for (y, wy) in inner.iter() {
                let jac = checked_jacobians(family, &x, &y, floor)?;
                min_jacobian = min_jacobian.min(jac.volume);
                let z = family.evaluate(&x, &y)?;
                hat += wy * submersion.jacobian_norm(&z)?.powf(q - 1.0) * jac.surface;
            }
            let hat = check_surface_integral(&x, hat)?;
            Ok((x, w, hat, min_jacobian))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut modulus = 0.0;
    let mut min_jacobian = f64::INFINITY;
    let mut l_samples = Vec::with_capacity(per_x.len());
    for (x, w, hat, mj) in per_x {
        modulus += w * hat.powf(1.0 - exponent.p());
        min_jacobian = min_jacobian.min(mj);
        l_samples.push(LSample { x, l: hat });
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

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    pub trials: usize,
    /// Perturbation amplitude as a fraction of the smallest density value.
    pub amplitude_fraction: f64,
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            trials: 50,
            amplitude_fraction: 0.3,
            seed: 0,
        }
    }
}

/// Energy gaps `∫ g^p − mod_p` of perturbed, rescaled-admissible competitors `g`.
///
/// Competitors are `ρ + a·φ` with `φ` a product of cosines over all parameter
/// axes and `a` at most `amplitude_fraction · min ρ`, divided by the smallest
/// surface integral over the outer quadrature nodes. Energies and the modulus
/// use the same quadrature, so a negative gap beyond rounding would refute
/// extremality.
pub fn extremality_gaps(
    family: &ParametrizedFamily,
    exponent: Exponent,
    quad: &QuadratureScheme,
    settings: &ProbeSettings,
) -> Result<Vec<f64>> {
    if settings.trials == 0 {
        return Err(Error::InvalidParameter(
            "extremality probe needs at least one trial".into(),
        ));
    }
    if !(0.0..=0.3).contains(&settings.amplitude_fraction) {
        return Err(Error::InvalidParameter(format!(
            "amplitude fraction {} outside [0, 0.3]",
            settings.amplitude_fraction
        )));
    }
    let p = exponent.p();
    let q = exponent.q();
    let floor = family.degeneracy_floor()?;
    let outer = quad.tensor_rule(family.u());
    let inner = quad.tensor_rule(family.v());
    let domain = family.u().product(family.v());

    struct Node {
        point: Vec<f64>,
        weight: f64,
        rho: f64,
        volume: f64,
        surface: f64,
    }
    let rows = (0..outer.len())
        .into_par_iter()
        .map(|i| {
            let (x, wx) = outer.node(i);
            let l = l_of_x(family, &x, exponent, quad)?;
            let nodes = inner
                .iter()
                .map(|(y, wy)| {
                    let jac = checked_jacobians(family, &x, &y, floor)?;
                    Ok(Node {
                        point: [x.as_slice(), &y].concat(),
                        weight: wy,
                        rho: (jac.surface / jac.volume).powf(q - 1.0) / l,
                        volume: jac.volume,
                        surface: jac.surface,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((wx, l, nodes))
        })
        .collect::<Result<Vec<_>>>()?;

    let modulus: f64 = rows.iter().map(|(w, l, _)| w * l.powf(1.0 - p)).sum();
    let min_rho = rows
        .iter()
        .flat_map(|(_, _, nodes)| nodes.iter().map(|n| n.rho))
        .fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let dim = domain.dim();
    let mut gaps = Vec::with_capacity(settings.trials);
    for _ in 0..settings.trials {
        let amplitude = settings.amplitude_fraction * min_rho * rng.random_range(0.0..=1.0);
        let modes: Vec<(f64, f64)> = (0..dim)
            .map(|_| {
                (
                    rng.random_range(0..=3) as f64,
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let phi = |point: &[f64]| -> f64 {
            modes
                .iter()
                .enumerate()
                .map(|(k, (freq, phase))| {
                    let t =
                        (point[k] - domain.lower()[k]) / (domain.upper()[k] - domain.lower()[k]);
                    (freq * PI * t + phase).cos()
                })
                .product()
        };
        let competitor: Vec<Vec<f64>> = rows
            .iter()
            .map(|(_, _, nodes)| {
                nodes
                    .iter()
                    .map(|n| n.rho + amplitude * phi(&n.point))
                    .collect()
            })
            .collect();
        let min_surface_integral = rows
            .iter()
            .zip(&competitor)
            .map(|((_, _, nodes), g)| {
                nodes
                    .iter()
                    .zip(g)
                    .map(|(n, g)| n.weight * g * n.surface)
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        let scale = 1.0 / min_surface_integral;
        let energy: f64 = rows
            .iter()
            .zip(&competitor)
            .map(|((wx, _, nodes), g)| {
                wx * nodes
                    .iter()
                    .zip(g)
                    .map(|(n, g)| n.weight * (scale * g).powf(p) * n.volume)
                    .sum::<f64>()
            })
            .sum();
        gaps.push(energy - modulus);
    }
    Ok(gaps)
}

/// Smallest gap from [`extremality_gaps`]; non-negative up to rounding when
/// the density is extremal.
pub fn extremality_probe(
    family: &ParametrizedFamily,
    exponent: Exponent,
    quad: &QuadratureScheme,
    settings: &ProbeSettings,
) -> Result<f64> {
    Ok(extremality_gaps(family, exponent, quad, settings)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}
