use std::sync::OnceLock;

use super::{checked_jacobians, l_of_x, Exponent};
use crate::error::{Error, Result};
use crate::family::ParametrizedFamily;
use crate::linalg::Matrix;
use crate::quadrature::QuadratureScheme;

const NEWTON_MAX_ITERATIONS: usize = 50;
const NEWTON_RELATIVE_TOLERANCE: f64 = 1e-10;

/// Extremal density `ρ = (|J^y_f|/|J_f|)^{q−1} / l(x)` of a family.
#[derive(Debug, Clone)]
pub struct ExtremalDensity {
    family: ParametrizedFamily,
    exponent: Exponent,
    quad: QuadratureScheme,
    table: Option<LTable>,
    seeds: OnceLock<SeedGrid>,
}

pub fn extremal_density(
    family: &ParametrizedFamily,
    exponent: Exponent,
    quad: &QuadratureScheme,
) -> ExtremalDensity {
    ExtremalDensity {
        family: family.clone(),
        exponent,
        quad: *quad,
        table: None,
        seeds: OnceLock::new(),
    }
}

impl ExtremalDensity {
    /// Switches `l` to piecewise-multilinear interpolation of values tabulated
    /// on a uniform grid with `per_axis ≥ 2` nodes per axis of the closed `U`.
    pub fn tabulated(mut self, per_axis: usize) -> Result<Self> {
        if per_axis < 2 {
            return Err(Error::InvalidParameter(format!(
                "tabulation needs at least 2 nodes per axis, got {per_axis}"
            )));
        }
        self.table = Some(LTable::build(
            &self.family,
            self.exponent,
            &self.quad,
            per_axis,
        )?);
        Ok(self)
    }

    pub fn family(&self) -> &ParametrizedFamily {
        &self.family
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    pub fn l(&self, x: &[f64]) -> Result<f64> {
        match &self.table {
            Some(t) => Ok(t.interpolate(x)),
            None => l_of_x(&self.family, x, self.exponent, &self.quad),
        }
    }

    /// Density restricted to `σ_x`, with `l(x)` computed once.
    pub fn on_surface(&self, x: &[f64]) -> Result<SurfaceDensity<'_>> {
        Ok(SurfaceDensity {
            density: self,
            x: x.to_vec(),
            l: self.l(x)?,
            floor: self.family.degeneracy_floor()?,
        })
    }

    pub fn evaluate_param(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.on_surface(x)?.evaluate(y)
    }

    pub fn evaluate_ambient(&self, z: &[f64]) -> Result<f64> {
        let (x, y) = self.invert(z)?;
        self.evaluate_param(&x, &y)
    }

    /// `f⁻¹(z)`, from the family's inverse when given and by damped Newton
    /// otherwise.
    pub fn invert(&self, z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if z.len() != self.family.n() {
            return Err(Error::DimensionMismatch(format!(
                "ambient point has {} coordinates, expected {}",
                z.len(),
                self.family.n()
            )));
        }
        if let Some(inv) = self.family.inverse() {
            return inv(z).ok_or_else(|| Error::InversionFailure {
                z: z.to_vec(),
                residual: f64::INFINITY,
            });
        }
        let seeds = match self.seeds.get() {
            Some(s) => s,
            None => {
                let built = SeedGrid::build(&self.family)?;
                self.seeds.get_or_init(|| built)
            }
        };
        newton_invert(&self.family, seeds, z)
    }
}

/// Extremal density on one surface `σ_x`.
#[derive(Debug, Clone)]
pub struct SurfaceDensity<'a> {
    density: &'a ExtremalDensity,
    x: Vec<f64>,
    l: f64,
    floor: f64,
}

impl SurfaceDensity<'_> {
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<f64> {
        let jac = checked_jacobians(&self.density.family, &self.x, y, self.floor)?;
        let q = self.density.exponent.q();
        Ok((jac.surface / jac.volume).powf(q - 1.0) / self.l)
    }
}

#[derive(Debug, Clone)]
struct LTable {
    lower: Vec<f64>,
    step: Vec<f64>,
    per_axis: usize,
    values: Vec<f64>,
}

impl LTable {
    fn build(
        family: &ParametrizedFamily,
        exponent: Exponent,
        quad: &QuadratureScheme,
        per_axis: usize,
    ) -> Result<Self> {
        use rayon::prelude::*;
        let u = family.u();
        let dim = u.dim();
        let step: Vec<f64> = u
            .widths()
            .iter()
            .map(|w| w / (per_axis - 1) as f64)
            .collect();
        let total = per_axis.pow(dim as u32);
        let values = (0..total)
            .into_par_iter()
            .map(|idx| {
                let x = grid_point(u.lower(), &step, per_axis, idx);
                l_of_x(family, &x, exponent, quad)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lower: u.lower().to_vec(),
            step,
            per_axis,
            values,
        })
    }

    fn interpolate(&self, x: &[f64]) -> f64 {
        let dim = self.lower.len();
        let mut base = vec![0usize; dim];
        let mut frac = vec![0.0; dim];
        for k in 0..dim {
            let t = ((x[k] - self.lower[k]) / self.step[k]).clamp(0.0, (self.per_axis - 1) as f64);
            let i = (t.floor() as usize).min(self.per_axis - 2);
            base[k] = i;
            frac[k] = t - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << dim) {
            let mut weight = 1.0;
            let mut idx = 0;
            for k in 0..dim {
                let bit = (corner >> (dim - 1 - k)) & 1;
                weight *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                idx = idx * self.per_axis + base[k] + bit;
            }
            if weight != 0.0 {
                acc += weight * self.values[idx];
            }
        }
        acc
    }
}

fn grid_point(lower: &[f64], step: &[f64], per_axis: usize, mut idx: usize) -> Vec<f64> {
    let mut p = vec![0.0; lower.len()];
    for k in (0..lower.len()).rev() {
        p[k] = lower[k] + (idx % per_axis) as f64 * step[k];
        idx /= per_axis;
    }
    p
}

/// Forward images of a coarse midpoint grid of `U×V`, used to seed Newton.
#[derive(Debug, Clone)]
struct SeedGrid {
    params: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    diameter: f64,
}

impl SeedGrid {
    fn build(family: &ParametrizedFamily) -> Result<Self> {
        let n = family.n();
        let per_axis = ((4096f64).powf(1.0 / n as f64).floor() as usize).clamp(2, 8);
        let k = n - family.m();
        let params = family.u().product(family.v()).midpoint_grid(per_axis);
        let images = params
            .iter()
            .map(|p| family.evaluate(&p[..k], &p[k..]))
            .collect::<Result<Vec<_>>>()?;
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for z in &images {
            for i in 0..n {
                lo[i] = lo[i].min(z[i]);
                hi[i] = hi[i].max(z[i]);
            }
        }
        let diameter = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a).powi(2))
            .sum::<f64>()
            .sqrt()
            .max(f64::MIN_POSITIVE);
        Ok(Self {
            params,
            images,
            diameter,
        })
    }

    fn nearest(&self, z: &[f64]) -> &[f64] {
        let idx = self
            .images
            .iter()
            .map(|img| distance(img, z))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        &self.params[idx]
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn newton_invert(
    family: &ParametrizedFamily,
    seeds: &SeedGrid,
    z: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = family.n() - family.m();
    let domain = family.u().product(family.v());
    let tolerance = NEWTON_RELATIVE_TOLERANCE * seeds.diameter;
    let clamp = |p: &mut Vec<f64>| {
        for (i, c) in p.iter_mut().enumerate() {
            *c = c.clamp(domain.lower()[i], domain.upper()[i]);
        }
    };

    let mut point = seeds.nearest(z).to_vec();
    let residual_at = |p: &[f64]| -> Result<(Vec<f64>, f64)> {
        let img = family.evaluate(&p[..k], &p[k..])?;
        let r: Vec<f64> = img.iter().zip(z).map(|(a, b)| a - b).collect();
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok((r, norm))
    };
    let (mut residual, mut norm) = residual_at(&point)?;
    for _ in 0..NEWTON_MAX_ITERATIONS {
        if norm <= tolerance {
            return Ok((point[..k].to_vec(), point[k..].to_vec()));
        }
        let jac: Matrix = family.jacobian_full(&point[..k], &point[k..])?;
        let step = match jac.lu() {
            Ok(lu) => lu.solve(&residual),
            Err(_) => break,
        };
        let mut damping = 1.0;
        let mut accepted = false;
        while damping > 1e-8 {
            let mut candidate: Vec<f64> = point
                .iter()
                .zip(&step)
                .map(|(p, s)| p - damping * s)
                .collect();
            clamp(&mut candidate);
            let (r, n) = residual_at(&candidate)?;
            if n < norm {
                point = candidate;
                residual = r;
                norm = n;
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if norm <= tolerance {
        return Ok((point[..k].to_vec(), point[k..].to_vec()));
    }
    Err(Error::InversionFailure {
        z: z.to_vec(),
        residual: norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::BoxDomain;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn radial(r0: f64, r1: f64) -> ParametrizedFamily {
        ParametrizedFamily::new(
            BoxDomain::interval(0.0, 2.0 * PI).unwrap(),
            BoxDomain::interval(r0, r1).unwrap(),
            |x, y| vec![y[0] * x[0].cos(), y[0] * x[0].sin()],
        )
    }

    #[test]
    fn parallel_density_is_constant() {
        let fam = ParametrizedFamily::new(
            BoxDomain::interval(0.0, 2.0).unwrap(),
            BoxDomain::interval(0.0, 3.0).unwrap(),
            |x, y| vec![x[0], y[0]],
        );
        let rho = extremal_density(
            &fam,
            Exponent::new(2.5).unwrap(),
            &QuadratureScheme::default(),
        );
        for (x, y) in [(0.1, 0.2), (1.9, 2.9), (1.0, 1.5)] {
            assert_relative_eq!(
                rho.evaluate_param(&[x], &[y]).unwrap(),
                1.0 / 3.0,
                max_relative = 1e-8
            );
            assert_relative_eq!(
                rho.evaluate_ambient(&[x, y]).unwrap(),
                1.0 / 3.0,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn annulus_density_matches_classical_metric() {
        let (r0, r1) = (1.0, 3.0);
        let fam = radial(r0, r1);
        let rho = extremal_density(
            &fam,
            Exponent::new(2.0).unwrap(),
            &QuadratureScheme::default(),
        );
        for z in [[1.5f64, 0.3], [-2.0, 1.0], [0.1, -2.5]] {
            let t = (z[0] * z[0] + z[1] * z[1]).sqrt();
            let expected = 1.0 / (t * (r1 / r0).ln());
            assert_relative_eq!(
                rho.evaluate_ambient(&z).unwrap(),
                expected,
                max_relative = 1e-7
            );
        }
    }

    #[test]
    fn tabulated_mode_interpolates() {
        let fam = ParametrizedFamily::new(
            BoxDomain::interval(1.0, 2.0).unwrap(),
            BoxDomain::interval(0.0, 2.0 * PI).unwrap(),
            |x, y| vec![x[0] * y[0].cos(), x[0] * y[0].sin()],
        );
        let rho = extremal_density(
            &fam,
            Exponent::new(2.0).unwrap(),
            &QuadratureScheme::default(),
        )
        .tabulated(5)
        .unwrap();
        assert!(rho.is_tabulated());
        // l(r) = 2πr is linear, so interpolation is exact.
        assert_relative_eq!(
            rho.l(&[1.37]).unwrap(),
            2.0 * PI * 1.37,
            max_relative = 1e-8
        );
        assert!(extremal_density(
            &fam,
            Exponent::new(2.0).unwrap(),
            &QuadratureScheme::default()
        )
        .tabulated(1)
        .is_err());
    }

    #[test]
    fn newton_fails_outside_image() {
        let fam = radial(1.0, 2.0);
        let rho = extremal_density(
            &fam,
            Exponent::new(2.0).unwrap(),
            &QuadratureScheme::default(),
        );
        let err = rho.evaluate_ambient(&[5.0, 5.0]).unwrap_err();
        assert!(matches!(err, Error::InversionFailure { .. }));
    }

    #[test]
    fn user_inverse_is_used() {
        let fam = radial(1.0, 2.0).with_inverse(|_| None);
        let rho = extremal_density(
            &fam,
            Exponent::new(2.0).unwrap(),
            &QuadratureScheme::default(),
        );
        assert!(matches!(
            rho.evaluate_ambient(&[1.5, 0.0]),
            Err(Error::InversionFailure { .. })
        ));
    }
}
