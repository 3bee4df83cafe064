use rayon::prelude::*;

use super::{solve_discrete, Cell, DiscreteModulusProblem, DiscreteSurface, SolverSettings};
use crate::error::{Error, Result};
use crate::family::ParametrizedFamily;
use crate::modulus::{Exponent, ModulusReport};

/// Fraction of the sampled extent added on each side of the ambient box.
const BOX_PADDING: f64 = 0.02;

/// Builds the discrete problem for `family` on a uniform ambient grid.
///
/// Surfaces sit at the midpoints of a uniform `surfaces_per_axis` grid on `U`;
/// each is sampled at the midpoints of a `samples_per_axis` grid on `V`, every
/// sample carrying weight `|J^y_f| · (parameter cell volume)` into the ambient
/// cell containing its image.
pub fn discretize_family(
    family: &ParametrizedFamily,
    exponent: Exponent,
    cells_per_axis: usize,
    surfaces_per_axis: usize,
    samples_per_axis: usize,
) -> Result<DiscreteModulusProblem> {
    if cells_per_axis < 2 || surfaces_per_axis < 2 || samples_per_axis < 2 {
        return Err(Error::InvalidParameter(format!(
            "discretization parameters must be at least 2 (got {cells_per_axis}, {surfaces_per_axis}, {samples_per_axis})"
        )));
    }
    let n = family.n();
    let xs = family.u().midpoint_grid(surfaces_per_axis);
    let ys = family.v().midpoint_grid(samples_per_axis);
    let sample_volume = family.v().volume() / ys.len() as f64;

    // Images and weights per surface.
    let sampled = xs
        .par_iter()
        .map(|x| {
            ys.iter()
                .map(|y| {
                    let z = family.evaluate(x, y)?;
                    let weight = family.jacobians(x, y)?.surface * sample_volume;
                    Ok((z, weight))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for (z, _) in sampled.iter().flatten() {
        for i in 0..n {
            lo[i] = lo[i].min(z[i]);
            hi[i] = hi[i].max(z[i]);
        }
    }
    for i in 0..n {
        let extent = (hi[i] - lo[i]).max(f64::EPSILON * lo[i].abs().max(1.0));
        lo[i] -= BOX_PADDING * extent;
        hi[i] += BOX_PADDING * extent;
    }
    let widths: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (b - a) / cells_per_axis as f64)
        .collect();
    let volume: f64 = widths.iter().product();
    let total_cells = cells_per_axis
        .checked_pow(n as u32)
        .ok_or_else(|| Error::InvalidParameter("ambient grid too large".into()))?;

    let cells = (0..total_cells)
        .map(|mut idx| {
            let mut center = vec![0.0; n];
            for k in (0..n).rev() {
                center[k] = lo[k] + ((idx % cells_per_axis) as f64 + 0.5) * widths[k];
                idx /= cells_per_axis;
            }
            Cell { center, volume }
        })
        .collect();

    let bin = |z: &[f64]| -> usize {
        z.iter().enumerate().fold(0, |acc, (k, c)| {
            let i = (((c - lo[k]) / widths[k]).floor().max(0.0) as usize).min(cells_per_axis - 1);
            acc * cells_per_axis + i
        })
    };
    let surfaces = sampled
        .into_par_iter()
        .map(|samples| {
            DiscreteSurface::from_entries(samples.into_iter().map(|(z, w)| (bin(&z), w)).collect())
        })
        .collect();

    DiscreteModulusProblem::new(cells, surfaces, exponent)
}

/// Resolution controls for [`cross_validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    /// Surfaces per axis of `U`, per ambient cell per axis.
    pub surfaces_per_cell: f64,
    /// Samples per axis of `V`, per ambient cell per axis.
    pub samples_per_cell: f64,
    pub solver: SolverSettings,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            surfaces_per_cell: 4.0,
            samples_per_cell: 6.0,
            solver: SolverSettings {
                tolerance: 1e-5,
                max_iterations: 2_000,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub resolution: usize,
    pub discrete_modulus: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

/// Discrete modulus at each grid resolution of `ladder`, compared with the
/// analytic value in `analytic`.
pub fn cross_validate(
    family: &ParametrizedFamily,
    exponent: Exponent,
    analytic: &ModulusReport,
    ladder: &[usize],
    settings: &OracleSettings,
) -> Result<Vec<ConvergenceRow>> {
    ladder
        .iter()
        .map(|&resolution| {
            let surfaces =
                ((settings.surfaces_per_cell * resolution as f64).ceil() as usize).max(2);
            let samples = ((settings.samples_per_cell * resolution as f64).ceil() as usize).max(2);
            let problem = discretize_family(family, exponent, resolution, surfaces, samples)?;
            let solution = solve_discrete(&problem, &settings.solver)?;
            Ok(ConvergenceRow {
                resolution,
                discrete_modulus: solution.objective,
                relative_gap: (solution.objective - analytic.modulus).abs() / analytic.modulus,
                iterations: solution.iterations,
            })
        })
        .collect()
}
