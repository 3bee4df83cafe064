//! Parametrized surface families `f: U×V → ℝⁿ` and submersions `F: ℝⁿ → ℝ^{n−m}`.
//!
//! The index box `U` has dimension `n − m` and the surface box `V` has
//! dimension `m`; surface `σ_x` is `f(x, V)`. Jacobian matrices always order
//! their columns as the `x`-block followed by the `y`-block, so the last `m`
//! columns of `Df` are `D_y f`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{generalized_norm, Matrix};

pub type MapFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64], &[f64]) -> Matrix + Send + Sync>;
pub type InverseFn = Arc<dyn Fn(&[f64]) -> Option<(Vec<f64>, Vec<f64>)> + Send + Sync>;
pub type SubmersionMapFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type SubmersionJacobianFn = Arc<dyn Fn(&[f64]) -> Matrix + Send + Sync>;

/// `|J_f|` below `DEGENERACY_RATIO · median(|J_f|)` is rejected.
pub const DEGENERACY_RATIO: f64 = 1e-12;

/// Absolute floor below which a surface Jacobian counts as zero.
pub const SURFACE_JACOBIAN_FLOOR: f64 = 1e-300;

fn fd_step(c: f64) -> f64 {
    f64::EPSILON.cbrt() * c.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidDomain(format!(
                "bounds of length {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidDomain(format!("axis {i}: need {a} < {b}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// One-dimensional interval `(a, b)`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![a], vec![b])
    }

    /// The cube `(0, 1)^dim`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn widths(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| b - a)
            .collect()
    }

    /// Lebesgue measure of the box.
    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(p, (a, b))| a < p && p < b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    /// Midpoints of a uniform grid with `per_axis` cells on each axis, in
    /// row-major order (last axis fastest).
    pub fn midpoint_grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let widths = self.widths();
        let dim = self.dim();
        let total = per_axis.pow(dim as u32);
        (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; dim];
                for k in (0..dim).rev() {
                    let i = idx % per_axis;
                    idx /= per_axis;
                    p[k] = self.lower[k] + (i as f64 + 0.5) * widths[k] / per_axis as f64;
                }
                p
            })
            .collect()
    }

    /// Product box `self × other`.
    pub fn product(&self, other: &BoxDomain) -> BoxDomain {
        BoxDomain {
            lower: [self.lower.as_slice(), other.lower()].concat(),
            upper: [self.upper.as_slice(), other.upper()].concat(),
        }
    }

    /// Clamps `value` on `axis` so that `value ± h` stays inside the open box.
    fn inset(&self, axis: usize, value: f64, h: f64) -> f64 {
        let (a, b) = (self.lower[axis], self.upper[axis]);
        if b - a <= 2.0 * h {
            0.5 * (a + b)
        } else {
            value.clamp(a + h, b - h)
        }
    }
}

/// Jacobian data of `f` at one parameter point.
#[derive(Debug, Clone)]
pub struct JacobianSample {
    pub full: Matrix,
    /// `|J_f|`
    pub volume: f64,
    /// `|J^y_f|`
    pub surface: f64,
}

#[derive(Clone)]
pub struct ParametrizedFamily {
    n: usize,
    m: usize,
    u: BoxDomain,
    v: BoxDomain,
    map: MapFn,
    jacobian: Option<JacobianFn>,
    inverse: Option<InverseFn>,
    floor: Arc<OnceLock<Result<f64>>>,
}

impl fmt::Debug for ParametrizedFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametrizedFamily")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("u", &self.u)
            .field("v", &self.v)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("inverse", &self.inverse.is_some())
            .finish()
    }
}

impl ParametrizedFamily {
    /// Family of `dim V`-dimensional surfaces `f(x, V)` indexed by `x ∈ U`.
    pub fn new<F>(u: BoxDomain, v: BoxDomain, map: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            n: u.dim() + v.dim(),
            m: v.dim(),
            u,
            v,
            map: Arc::new(map),
            jacobian: None,
            inverse: None,
            floor: Arc::new(OnceLock::new()),
        }
    }

    /// Attaches an analytic `n×n` Jacobian with columns ordered `(x | y)`.
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64], &[f64]) -> Matrix + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self.floor = Arc::new(OnceLock::new());
        self
    }

    /// Attaches `f⁻¹`, returning `None` for points outside the image.
    pub fn with_inverse<I>(mut self, inverse: I) -> Self
    where
        I: Fn(&[f64]) -> Option<(Vec<f64>, Vec<f64>)> + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    /// Drops the analytic Jacobian so central differences are used.
    pub fn without_jacobian(mut self) -> Self {
        self.jacobian = None;
        self.floor = Arc::new(OnceLock::new());
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn u(&self) -> &BoxDomain {
        &self.u
    }

    pub fn v(&self) -> &BoxDomain {
        &self.v
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn inverse(&self) -> Option<&InverseFn> {
        self.inverse.as_ref()
    }

    pub fn map_fn(&self) -> &MapFn {
        &self.map
    }

    pub fn jacobian_fn(&self) -> Option<&JacobianFn> {
        self.jacobian.as_ref()
    }

    fn check_point(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.n - self.m || y.len() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "point of shape ({}, {}) for a family with dims ({}, {})",
                x.len(),
                y.len(),
                self.n - self.m,
                self.m
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x, y)?;
        let z = (self.map)(x, y);
        if z.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "map returned {} coordinates, expected {}",
                z.len(),
                self.n
            )));
        }
        if z.iter().any(|c| !c.is_finite()) {
            return Err(Error::EvaluationFailure {
                point: [x, y].concat(),
            });
        }
        Ok(z)
    }

    /// `Df(x, y)`, analytic when available and central differences otherwise.
    pub fn jacobian_full(&self, x: &[f64], y: &[f64]) -> Result<Matrix> {
        self.check_point(x, y)?;
        match &self.jacobian {
            Some(jac) => {
                let m = jac(x, y);
                if m.shape() != (self.n, self.n) {
                    return Err(Error::DimensionMismatch(format!(
                        "analytic Jacobian has shape {:?}, expected {}x{}",
                        m.shape(),
                        self.n,
                        self.n
                    )));
                }
                if !m.is_finite() {
                    return Err(Error::EvaluationFailure {
                        point: [x, y].concat(),
                    });
                }
                Ok(m)
            }
            None => self.finite_difference_jacobian(x, y),
        }
    }

    /// Central differences with step `cbrt(ε)·max(1, |c|)`, the base point
    /// inset so every stencil point lies inside the open box.
    pub fn finite_difference_jacobian(&self, x: &[f64], y: &[f64]) -> Result<Matrix> {
        self.check_point(x, y)?;
        let k = self.n - self.m;
        let domain = self.u.product(&self.v);
        let mut base: Vec<f64> = [x, y].concat();
        let steps: Vec<f64> = base.iter().map(|&c| fd_step(c)).collect();
        for (i, c) in base.iter_mut().enumerate() {
            *c = domain.inset(i, *c, steps[i]);
        }
        let mut jac = Matrix::zeros(self.n, self.n);
        let mut probe = base.clone();
        for j in 0..self.n {
            let h = steps[j];
            probe[j] = base[j] + h;
            let plus = self.evaluate(&probe[..k], &probe[k..])?;
            probe[j] = base[j] - h;
            let minus = self.evaluate(&probe[..k], &probe[k..])?;
            probe[j] = base[j];
            for i in 0..self.n {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }

    /// `D_x f`, the first `n − m` columns.
    pub fn jacobian_partial_x(&self, x: &[f64], y: &[f64]) -> Result<Matrix> {
        Ok(self.jacobian_full(x, y)?.columns(0..self.n - self.m))
    }

    /// `D_y f`, the last `m` columns.
    pub fn jacobian_partial_y(&self, x: &[f64], y: &[f64]) -> Result<Matrix> {
        Ok(self.jacobian_full(x, y)?.columns(self.n - self.m..self.n))
    }

    pub fn jacobians(&self, x: &[f64], y: &[f64]) -> Result<JacobianSample> {
        let full = self.jacobian_full(x, y)?;
        let volume = generalized_norm(&full);
        let surface = generalized_norm(&full.columns(self.n - self.m..self.n));
        Ok(JacobianSample {
            full,
            volume,
            surface,
        })
    }

    /// `|J_f|` values below this are degenerate: a fixed fraction of the
    /// median `|J_f|` over a probe grid of `U×V`. Cached per family.
    pub fn degeneracy_floor(&self) -> Result<f64> {
        self.floor
            .get_or_init(|| {
                let dims = self.n as u32;
                let per_axis = ((4096f64).powf(1.0 / dims as f64).floor() as usize).clamp(2, 5);
                let k = self.n - self.m;
                let mut values = self
                    .u
                    .product(&self.v)
                    .midpoint_grid(per_axis)
                    .iter()
                    .map(|p| Ok(generalized_norm(&self.jacobian_full(&p[..k], &p[k..])?)))
                    .collect::<Result<Vec<f64>>>()?;
                values.sort_by(f64::total_cmp);
                Ok(DEGENERACY_RATIO * values[values.len() / 2])
            })
            .clone()
    }
}

/// A map `F: ℝⁿ → ℝᵏ` whose level sets are the surfaces of a family.
#[derive(Clone)]
pub struct Submersion {
    n: usize,
    k: usize,
    map: SubmersionMapFn,
    jacobian: Option<SubmersionJacobianFn>,
}

impl fmt::Debug for Submersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Submersion")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl Submersion {
    pub fn new<F>(n: usize, k: usize, map: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            n,
            k,
            map: Arc::new(map),
            jacobian: None,
        }
    }

    /// Attaches an analytic `k×n` Jacobian.
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn without_jacobian(mut self) -> Self {
        self.jacobian = None;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn evaluate(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "submersion expects {} coordinates, got {}",
                self.n,
                z.len()
            )));
        }
        let out = (self.map)(z);
        if out.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "submersion returned {} values, expected {}",
                out.len(),
                self.k
            )));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::EvaluationFailure { point: z.to_vec() });
        }
        Ok(out)
    }

    pub fn jacobian(&self, z: &[f64]) -> Result<Matrix> {
        match &self.jacobian {
            Some(jac) => {
                let m = jac(z);
                if m.shape() != (self.k, self.n) {
                    return Err(Error::DimensionMismatch(format!(
                        "submersion Jacobian has shape {:?}, expected {}x{}",
                        m.shape(),
                        self.k,
                        self.n
                    )));
                }
                if !m.is_finite() {
                    return Err(Error::EvaluationFailure { point: z.to_vec() });
                }
                Ok(m)
            }
            None => {
                let mut jac = Matrix::zeros(self.k, self.n);
                let mut probe = z.to_vec();
                for j in 0..self.n {
                    let h = fd_step(z[j]);
                    probe[j] = z[j] + h;
                    let plus = self.evaluate(&probe)?;
                    probe[j] = z[j] - h;
                    let minus = self.evaluate(&probe)?;
                    probe[j] = z[j];
                    for i in 0..self.k {
                        jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
                    }
                }
                Ok(jac)
            }
        }
    }

    /// `|J_F(z)|`
    pub fn jacobian_norm(&self, z: &[f64]) -> Result<f64> {
        Ok(generalized_norm(&self.jacobian(z)?))
    }
}

/// Relative residual of `|J^y_f| = |J_f| · (|J_F| ∘ f)` at `(x, y)`.
pub fn key_relation_residual(
    family: &ParametrizedFamily,
    submersion: &Submersion,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    if submersion.n() != family.n() || submersion.k() != family.n() - family.m() {
        return Err(Error::DimensionMismatch(format!(
            "submersion ℝ^{} → ℝ^{} does not fit a family of {}-surfaces in ℝ^{}",
            submersion.n(),
            submersion.k(),
            family.m(),
            family.n()
        )));
    }
    let jac = family.jacobians(x, y)?;
    if !(jac.surface > SURFACE_JACOBIAN_FLOOR) {
        return Err(Error::DegenerateJacobian {
            x: x.to_vec(),
            y: y.to_vec(),
            value: jac.surface,
        });
    }
    let z = family.evaluate(x, y)?;
    let jf_sub = submersion.jacobian_norm(&z)?;
    Ok((jac.surface - jac.volume * jf_sub).abs() / jac.surface)
}

/// Largest key-relation residual and level-set drift `|F(f(x,y)) − F(f(x,c))|`
/// over a midpoint probe grid of `U×V`.
pub fn submersion_consistency(
    family: &ParametrizedFamily,
    submersion: &Submersion,
    per_axis: usize,
) -> Result<(f64, Vec<f64>)> {
    let k = family.n() - family.m();
    let center = family.v().center();
    let mut worst = (0.0, family.u().center());
    for p in family.u().product(family.v()).midpoint_grid(per_axis) {
        let (x, y) = p.split_at(k);
        let residual = key_relation_residual(family, submersion, x, y)?;
        let here = submersion.evaluate(&family.evaluate(x, y)?)?;
        let anchor = submersion.evaluate(&family.evaluate(x, &center)?)?;
        let scale = anchor.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let drift = here
            .iter()
            .zip(&anchor)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        let r = residual.max(drift);
        if r > worst.0 {
            worst = (r, x.to_vec());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn polar() -> ParametrizedFamily {
        ParametrizedFamily::new(
            BoxDomain::interval(0.0, 2.0 * std::f64::consts::PI).unwrap(),
            BoxDomain::interval(1.0, 2.0).unwrap(),
            |x, y| vec![y[0] * x[0].cos(), y[0] * x[0].sin()],
        )
    }

    #[test]
    fn box_domain_validation() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![], vec![]).is_err());
        let b = BoxDomain::new(vec![0.0, -1.0], vec![2.0, 2.0]).unwrap();
        assert_eq!(b.volume(), 6.0);
        assert!(b.contains(&[1.0, 0.0]));
        assert!(!b.contains(&[2.0, 0.0]));
        assert_eq!(b.midpoint_grid(2).len(), 4);
    }

    #[test]
    fn identity_jacobian() {
        let fam = ParametrizedFamily::new(
            BoxDomain::unit(1).unwrap(),
            BoxDomain::unit(1).unwrap(),
            |x, y| vec![x[0], y[0]],
        );
        let j = fam.jacobian_full(&[0.3], &[0.6]).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let e = if i == k { 1.0 } else { 0.0 };
                assert!((j[(i, k)] - e).abs() < 1e-10);
            }
        }
        assert_relative_eq!(
            generalized_norm(&fam.jacobian_partial_y(&[0.3], &[0.6]).unwrap()),
            1.0,
            max_relative = 1e-10
        );
    }

    #[test]
    fn polar_finite_differences_match_hand_derivative() {
        let fam = polar();
        let (th, t) = (0.9, 1.4);
        let j = fam.jacobian_full(&[th], &[t]).unwrap();
        let expected = [[-t * th.sin(), th.cos()], [t * th.cos(), th.sin()]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - expected[i][k]).abs() < 1e-9);
            }
        }
        let jy = fam.jacobian_partial_y(&[th], &[t]).unwrap();
        assert_relative_eq!(generalized_norm(&jy), 1.0, max_relative = 1e-9);
        let jx = fam.jacobian_partial_x(&[th], &[t]).unwrap();
        assert_relative_eq!(generalized_norm(&jx), t, max_relative = 1e-9);
    }

    #[test]
    fn finite_differences_inset_at_boundary() {
        let fam = polar();
        // Base point on the boundary of V must still differentiate inside the box.
        let j = fam.finite_difference_jacobian(&[0.5], &[1.0]).unwrap();
        assert!((j[(0, 1)] - 0.5f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn shear_jacobian_is_the_matrix() {
        let fam = ParametrizedFamily::new(
            BoxDomain::unit(1).unwrap(),
            BoxDomain::unit(1).unwrap(),
            |x, y| vec![x[0] + y[0], y[0]],
        );
        let j = fam.jacobian_full(&[0.2], &[0.7]).unwrap();
        let expected = [[1.0, 1.0], [0.0, 1.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - expected[i][k]).abs() < 1e-10);
            }
        }
        let jy = fam.jacobian_partial_y(&[0.2], &[0.7]).unwrap();
        assert_relative_eq!(generalized_norm(&jy), 2f64.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn non_finite_map_is_an_error() {
        let fam = ParametrizedFamily::new(
            BoxDomain::unit(1).unwrap(),
            BoxDomain::unit(1).unwrap(),
            |x, y| vec![x[0].ln() * 0.0 + f64::NAN, y[0]],
        );
        assert!(matches!(
            fam.evaluate(&[0.5], &[0.5]),
            Err(Error::EvaluationFailure { .. })
        ));
        assert!(matches!(
            fam.jacobian_full(&[0.5], &[0.5]),
            Err(Error::EvaluationFailure { .. })
        ));
    }

    #[test]
    fn wrong_point_shape_is_rejected() {
        let fam = polar();
        assert!(matches!(
            fam.evaluate(&[0.1, 0.2], &[1.5]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn polar_key_relation_with_angle() {
        let fam = polar();
        let angle = Submersion::new(2, 1, |z| {
            vec![z[1].atan2(z[0]).rem_euclid(2.0 * std::f64::consts::PI)]
        });
        let r = key_relation_residual(&fam, &angle, &[1.1], &[1.7]).unwrap();
        assert!(r < 1e-8, "residual {r}");
        let wrong = Submersion::new(2, 1, |z| vec![2.0 * z[1].atan2(z[0])]);
        let r = key_relation_residual(&fam, &wrong, &[1.1], &[1.7]).unwrap();
        assert!(r > 0.5);
    }

    #[test]
    fn degeneracy_floor_is_scaled_median() {
        let fam = polar();
        let floor = fam.degeneracy_floor().unwrap();
        // |J_f| = t with t ∈ (1, 2): the median sits inside that range.
        assert!(floor > 1e-12 && floor < 2e-12);
    }
}
