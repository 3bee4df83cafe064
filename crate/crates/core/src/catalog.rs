//! Built-in families with closed-form moduli.
//!
//! Every entry follows the `(index x ∈ U, surface parameter y ∈ V)` order of
//! [`ParametrizedFamily`]. Entries whose foliation has a natural transverse
//! family (the slices `f(U, y)`) carry it as [`CatalogEntry::transverse`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::family::{
    BoxDomain, ParametrizedFamily, Submersion, SubmersionJacobianFn, SubmersionMapFn,
};
use crate::linalg::{generalized_norm, Matrix};
use crate::modulus::Exponent;
use crate::quadrature::QuadratureScheme;

pub type ExpectedModulusFn = Arc<dyn Fn(Exponent) -> Result<f64> + Send + Sync>;
pub type ExpectedDensityFn = Arc<dyn Fn(Exponent, &[f64], &[f64]) -> f64 + Send + Sync>;

/// Names accepted by [`build`].
pub const NAMES: &[&str] = &[
    "parallel",
    "shear",
    "annulus-radial",
    "annulus-circular",
    "pq-map",
    "condenser-linear",
];

#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub family: ParametrizedFamily,
    pub submersion: Option<Submersion>,
    pub parameters: BTreeMap<String, f64>,
    expected_modulus: ExpectedModulusFn,
    expected_density: Option<ExpectedDensityFn>,
    transverse: Option<Box<CatalogEntry>>,
}

impl fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("name", &self.name)
            .field("family", &self.family)
            .field("submersion", &self.submersion)
            .field("parameters", &self.parameters)
            .field("transverse", &self.transverse.as_ref().map(|t| &t.name))
            .finish()
    }
}

impl CatalogEntry {
    fn new(name: &str, family: ParametrizedFamily, expected: ExpectedModulusFn) -> Self {
        Self {
            name: name.to_string(),
            family,
            submersion: None,
            parameters: BTreeMap::new(),
            expected_modulus: expected,
            expected_density: None,
            transverse: None,
        }
    }

    fn with_submersion(mut self, submersion: Submersion) -> Self {
        self.submersion = Some(submersion);
        self
    }

    fn with_density(mut self, density: ExpectedDensityFn) -> Self {
        self.expected_density = Some(density);
        self
    }

    fn with_parameter(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    fn with_transverse(mut self, transverse: CatalogEntry) -> Self {
        self.transverse = Some(Box::new(transverse));
        self
    }

    pub fn expected_modulus(&self, exponent: Exponent) -> Result<f64> {
        (self.expected_modulus)(exponent)
    }

    /// Closed-form extremal density at parameter point `(x, y)`, when known.
    pub fn expected_density(&self, exponent: Exponent, x: &[f64], y: &[f64]) -> Option<f64> {
        self.expected_density.as_ref().map(|d| d(exponent, x, y))
    }

    /// The family of slices `f(U, y)` indexed by `y ∈ V`.
    pub fn transverse(&self) -> Option<&CatalogEntry> {
        self.transverse.as_deref()
    }
}

fn check_dims(u: &BoxDomain, v: &BoxDomain) -> (usize, usize) {
    (u.dim(), v.dim())
}

fn block_identity(n: usize, k: usize, m: usize, b: Option<&Matrix>) -> Matrix {
    // [[I_k, B], [0, I_m]] with B of shape k×m.
    let mut jac = Matrix::identity(n);
    if let Some(b) = b {
        for i in 0..k {
            for j in 0..m {
                jac[(i, k + j)] = b[(i, j)];
            }
        }
    }
    jac
}

/// Surfaces `{x} × V` indexed by `x ∈ U`: `mod_p = vol(U)·vol(V)^{1−p}`.
pub fn make_parallel(u: BoxDomain, v: BoxDomain) -> CatalogEntry {
    let (k, m) = check_dims(&u, &v);
    let n = k + m;
    let (vol_u, vol_v) = (u.volume(), v.volume());
    let (u_in, v_in) = (u.clone(), v.clone());
    let family = ParametrizedFamily::new(u.clone(), v.clone(), |x, y| [x, y].concat())
        .with_jacobian(move |_, _| Matrix::identity(n))
        .with_inverse(move |z| {
            let (x, y) = z.split_at(k);
            (u_in.contains(x) && v_in.contains(y)).then(|| (x.to_vec(), y.to_vec()))
        });
    let projection = Submersion::new(n, k, move |z| z[..k].to_vec())
        .with_jacobian(move |_| Matrix::identity(n).row_block(0..k));

    // Transverse family: slices U × {y}, indexed by y.
    let transverse_family = ParametrizedFamily::new(v.clone(), u.clone(), |y, x| [x, y].concat())
        .with_jacobian(move |_, _| {
            let mut jac = Matrix::zeros(n, n);
            for j in 0..m {
                jac[(k + j, j)] = 1.0;
            }
            for j in 0..k {
                jac[(j, m + j)] = 1.0;
            }
            jac
        });
    let transverse_projection = Submersion::new(n, m, move |z| z[k..].to_vec())
        .with_jacobian(move |_| Matrix::identity(n).row_block(k..n));
    let transverse = CatalogEntry::new(
        "parallel-transverse",
        transverse_family,
        Arc::new(move |e| Ok(vol_v * vol_u.powf(1.0 - e.p()))),
    )
    .with_submersion(transverse_projection)
    .with_density(Arc::new(move |_, _, _| 1.0 / vol_u));

    CatalogEntry::new(
        "parallel",
        family,
        Arc::new(move |e| Ok(vol_u * vol_v.powf(1.0 - e.p()))),
    )
    .with_submersion(projection)
    .with_density(Arc::new(move |_, _, _| 1.0 / vol_v))
    .with_parameter("vol_u", vol_u)
    .with_parameter("vol_v", vol_v)
    .with_transverse(transverse)
}

/// `f(x, y) = (x + B y, y)` applied to the parallel family, `B` of shape
/// `dim U × dim V`: `mod_p = vol(U)·vol(V)^{1−p}·det(BᵀB + I)^{−p/2}`.
pub fn make_shear(u: BoxDomain, v: BoxDomain, b: Matrix) -> Result<CatalogEntry> {
    let (k, m) = check_dims(&u, &v);
    let n = k + m;
    if b.shape() != (k, m) {
        return Err(Error::DimensionMismatch(format!(
            "shear matrix must be {k}x{m}, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let mut gram = &b.transpose() * &b;
    for j in 0..m {
        gram[(j, j)] += 1.0;
    }
    let det = gram.lu()?.determinant();
    let (vol_u, vol_v) = (u.volume(), v.volume());

    let b_map = b.clone();
    let map = move |x: &[f64], y: &[f64]| {
        let by = b_map.mul_vec(y);
        let mut z: Vec<f64> = x.iter().zip(&by).map(|(a, c)| a + c).collect();
        z.extend_from_slice(y);
        z
    };
    let jac = block_identity(n, k, m, Some(&b));
    let b_inv = b.clone();
    let (u_in, v_in) = (u.clone(), v.clone());
    let family = ParametrizedFamily::new(u, v, map)
        .with_jacobian(move |_, _| jac.clone())
        .with_inverse(move |z| {
            let (zx, zy) = z.split_at(k);
            let by = b_inv.mul_vec(zy);
            let x: Vec<f64> = zx.iter().zip(&by).map(|(a, c)| a - c).collect();
            (u_in.contains(&x) && v_in.contains(zy)).then(|| (x, zy.to_vec()))
        });

    let b_sub = b.clone();
    let mut sub_jac = Matrix::zeros(k, n);
    for i in 0..k {
        sub_jac[(i, i)] = 1.0;
        for j in 0..m {
            sub_jac[(i, k + j)] = -b[(i, j)];
        }
    }
    let submersion = Submersion::new(n, k, move |z| {
        let (zx, zy) = z.split_at(k);
        let by = b_sub.mul_vec(zy);
        zx.iter().zip(&by).map(|(a, c)| a - c).collect()
    })
    .with_jacobian(move |_| sub_jac.clone());

    let mut entry = CatalogEntry::new(
        "shear",
        family,
        Arc::new(move |e| Ok(vol_u * vol_v.powf(1.0 - e.p()) * det.powf(-e.p() / 2.0))),
    )
    .with_submersion(submersion)
    .with_density(Arc::new(move |_, _, _| 1.0 / (vol_v * det.sqrt())))
    .with_parameter("det_gram", det);
    for (idx, value) in b.as_slice().iter().enumerate() {
        entry = entry.with_parameter(&format!("b{idx}"), *value);
    }
    Ok(entry)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnulusMode {
    /// Radial segments `t ↦ t·e^{iθ}` indexed by the angle.
    Radial,
    /// Circles `θ ↦ r·e^{iθ}` indexed by the radius.
    Circular,
}

/// `∫_a^b t^s dt`, switching to the logarithm at `s = −1`.
fn power_integral(a: f64, b: f64, s: f64) -> f64 {
    if (s + 1.0).abs() < 1e-12 {
        (b / a).ln()
    } else {
        (b.powf(s + 1.0) - a.powf(s + 1.0)) / (s + 1.0)
    }
}

/// Polar families in the annulus `r0 < |z| < r1`, angle in `(0, 2π)`.
pub fn make_polar_annulus(r0: f64, r1: f64, mode: AnnulusMode) -> Result<CatalogEntry> {
    if !(r0.is_finite() && r1.is_finite() && 0.0 < r0 && r0 < r1) {
        return Err(Error::InvalidParameter(format!(
            "annulus radii must satisfy 0 < r0 < r1, got {r0}, {r1}"
        )));
    }
    let radial = radial_entry(r0, r1)?;
    let circular = circular_entry(r0, r1)?;
    Ok(match mode {
        AnnulusMode::Radial => radial.with_transverse(circular),
        AnnulusMode::Circular => circular.with_transverse(radial),
    })
}

fn angle_in_range(z: &[f64]) -> f64 {
    z[1].atan2(z[0]).rem_euclid(2.0 * PI)
}

fn radial_entry(r0: f64, r1: f64) -> Result<CatalogEntry> {
    let angles = BoxDomain::interval(0.0, 2.0 * PI)?;
    let radii = BoxDomain::interval(r0, r1)?;
    let family = ParametrizedFamily::new(angles.clone(), radii.clone(), |x, y| {
        vec![y[0] * x[0].cos(), y[0] * x[0].sin()]
    })
    .with_jacobian(|x, y| {
        let (s, c) = x[0].sin_cos();
        Matrix::new(2, 2, vec![-y[0] * s, c, y[0] * c, s]).expect("2x2")
    })
    .with_inverse(move |z| {
        let (theta, t) = (angle_in_range(z), z[0].hypot(z[1]));
        (angles.contains(&[theta]) && radii.contains(&[t])).then(|| (vec![theta], vec![t]))
    });
    let angle = Submersion::new(2, 1, |z| vec![angle_in_range(z)]).with_jacobian(|z| {
        let r2 = z[0] * z[0] + z[1] * z[1];
        Matrix::new(1, 2, vec![-z[1] / r2, z[0] / r2]).expect("1x2")
    });
    let l = move |e: Exponent| power_integral(r0, r1, 1.0 - e.q());
    Ok(CatalogEntry::new(
        "annulus-radial",
        family,
        Arc::new(move |e| Ok(2.0 * PI * l(e).powf(1.0 - e.p()))),
    )
    .with_submersion(angle)
    .with_density(Arc::new(move |e, _, y| y[0].powf(1.0 - e.q()) / l(e)))
    .with_parameter("r0", r0)
    .with_parameter("r1", r1))
}

fn circular_entry(r0: f64, r1: f64) -> Result<CatalogEntry> {
    let radii = BoxDomain::interval(r0, r1)?;
    let angles = BoxDomain::interval(0.0, 2.0 * PI)?;
    let family = ParametrizedFamily::new(radii.clone(), angles.clone(), |x, y| {
        vec![x[0] * y[0].cos(), x[0] * y[0].sin()]
    })
    .with_jacobian(|x, y| {
        let (s, c) = y[0].sin_cos();
        Matrix::new(2, 2, vec![c, -x[0] * s, s, x[0] * c]).expect("2x2")
    })
    .with_inverse(move |z| {
        let (t, theta) = (z[0].hypot(z[1]), angle_in_range(z));
        (radii.contains(&[t]) && angles.contains(&[theta])).then(|| (vec![t], vec![theta]))
    });
    let radius = Submersion::new(2, 1, |z| vec![z[0].hypot(z[1])]).with_jacobian(|z| {
        let r = z[0].hypot(z[1]);
        Matrix::new(1, 2, vec![z[0] / r, z[1] / r]).expect("1x2")
    });
    Ok(CatalogEntry::new(
        "annulus-circular",
        family,
        Arc::new(move |e| Ok((2.0 * PI).powf(1.0 - e.p()) * power_integral(r0, r1, 1.0 - e.p()))),
    )
    .with_submersion(radius)
    .with_density(Arc::new(|_, x, _| 1.0 / (2.0 * PI * x[0])))
    .with_parameter("r0", r0)
    .with_parameter("r1", r1))
}

/// A diffeomorphism `g: ℝⁿ → ℝⁿ` applied on top of a base family.
#[derive(Clone)]
pub struct OuterMap {
    n: usize,
    map: SubmersionMapFn,
    jacobian: SubmersionJacobianFn,
    inverse: Option<SubmersionMapFn>,
}

impl OuterMap {
    pub fn new<F, J>(n: usize, map: F, jacobian: J) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> Matrix + Send + Sync + 'static,
    {
        Self {
            n,
            map: Arc::new(map),
            jacobian: Arc::new(jacobian),
            inverse: None,
        }
    }

    pub fn with_inverse<I>(mut self, inverse: I) -> Self
    where
        I: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, |z| z.to_vec(), move |_| Matrix::identity(n)).with_inverse(|z| z.to_vec())
    }

    /// `z ↦ M z` for an invertible square `M`.
    pub fn linear(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(
                "linear outer map must be square".into(),
            ));
        }
        let inverse = matrix.inverse()?;
        let (fwd, jac) = (matrix.clone(), matrix.clone());
        Ok(
            Self::new(matrix.rows(), move |z| fwd.mul_vec(z), move |_| jac.clone())
                .with_inverse(move |z| inverse.mul_vec(z)),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// The family `g ∘ u` for a base family `u` and an outer diffeomorphism `g`.
///
/// The expected modulus evaluates `l(x) = ∫_V (|I^y|/|I|)^q |I| dy` with
/// `|I| = |det Dg(u)|·|J_u|` and `|I^y| = |Dg(u)·D_y u|`, built from the
/// separate Jacobians of `g` and `u` rather than from the composed map.
pub fn make_condenser(base: &CatalogEntry, outer: OuterMap) -> Result<CatalogEntry> {
    let fam_u = base.family.clone();
    let (n, m) = (fam_u.n(), fam_u.m());
    let k = n - m;
    if outer.n != n {
        return Err(Error::DimensionMismatch(format!(
            "outer map acts on ℝ^{} but the base family lives in ℝ^{n}",
            outer.n
        )));
    }

    let (inner_map, outer_map) = (fam_u.map_fn().clone(), outer.map.clone());
    let mut family = ParametrizedFamily::new(fam_u.u().clone(), fam_u.v().clone(), move |x, y| {
        outer_map(&inner_map(x, y))
    });
    if let Some(inner_jac) = fam_u.jacobian_fn().cloned() {
        let (inner_map, outer_jac) = (fam_u.map_fn().clone(), outer.jacobian.clone());
        family = family.with_jacobian(move |x, y| &outer_jac(&inner_map(x, y)) * &inner_jac(x, y));
    }
    if let (Some(base_inv), Some(outer_inv)) = (fam_u.inverse().cloned(), outer.inverse.clone()) {
        family = family.with_inverse(move |z| base_inv(&outer_inv(z)));
    }

    let submersion = match (&base.submersion, &outer.inverse) {
        (Some(sub), Some(outer_inv)) => {
            let (s_map, s_jac) = (sub.clone(), sub.clone());
            let (inv_a, inv_b) = (outer_inv.clone(), outer_inv.clone());
            let outer_jac = outer.jacobian.clone();
            Some(
                Submersion::new(n, k, move |z| {
                    s_map
                        .evaluate(&inv_a(z))
                        .unwrap_or_else(|_| vec![f64::NAN; k])
                })
                .with_jacobian(move |z| {
                    let w = inv_b(z);
                    let inner = s_jac.jacobian(&w).unwrap_or_else(|_| {
                        Matrix::new(k, n, vec![f64::NAN; k * n]).expect("shape")
                    });
                    match outer_jac(&w).inverse() {
                        Ok(inv) => &inner * &inv,
                        Err(_) => Matrix::new(k, n, vec![f64::NAN; k * n]).expect("shape"),
                    }
                }),
            )
        }
        _ => None,
    };

    let expected_base = fam_u.clone();
    let outer_jac = outer.jacobian.clone();
    let expected: ExpectedModulusFn = Arc::new(move |e: Exponent| {
        let quad = QuadratureScheme::default();
        let (p, q) = (e.p(), e.q());
        let inner = quad.tensor_rule(expected_base.v());
        let mut modulus = 0.0;
        for (x, wx) in quad.tensor_rule(expected_base.u()).iter() {
            let mut l = 0.0;
            for (y, wy) in inner.iter() {
                let du = expected_base.jacobian_full(&x, &y)?;
                let dg = outer_jac(&expected_base.evaluate(&x, &y)?);
                let vol = generalized_norm(&dg) * generalized_norm(&du);
                let surf = generalized_norm(&(&dg * &du.columns(k..n)));
                l += wy * (surf / vol).powf(q) * vol;
            }
            modulus += wx * l.powf(1.0 - p);
        }
        Ok(modulus)
    });

    let mut entry = CatalogEntry::new(&format!("condenser({})", base.name), family, expected);
    entry.submersion = submersion;
    entry.parameters = base.parameters.clone();
    Ok(entry)
}

/// Affine `(p,q)`-map `f(x, y) = (a x, b y)` with `b^m = a^{(n−m)(q−1)}`, so
/// `|J^y_f|^p = |J^x_f|^q = |J_f|` holds exactly for the given `p`.
pub fn make_pq_map(exponent: Exponent, a: f64, u: BoxDomain, v: BoxDomain) -> Result<CatalogEntry> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "(p,q)-map scale must be positive, got {a}"
        )));
    }
    let (k, m) = check_dims(&u, &v);
    let n = k + m;
    let b = a.powf(k as f64 * (exponent.q() - 1.0) / m as f64);
    let (vol_u, vol_v) = (u.volume(), v.volume());
    let (ak, bm) = (a.powi(k as i32), b.powi(m as i32));
    let scales: Vec<f64> = std::iter::repeat_n(a, k)
        .chain(std::iter::repeat_n(b, m))
        .collect();

    let (fwd, inv) = (scales.clone(), scales.clone());
    let jac = Matrix::from_diagonal(&scales);
    let (u_in, v_in) = (u.clone(), v.clone());
    let family = ParametrizedFamily::new(u.clone(), v.clone(), move |x, y| {
        x.iter().chain(y).zip(&fwd).map(|(c, s)| c * s).collect()
    })
    .with_jacobian(move |_, _| jac.clone())
    .with_inverse(move |z| {
        let w: Vec<f64> = z.iter().zip(&inv).map(|(c, s)| c / s).collect();
        let (x, y) = w.split_at(k);
        (u_in.contains(x) && v_in.contains(y)).then(|| (x.to_vec(), y.to_vec()))
    });
    let submersion = Submersion::new(n, k, move |z| z[..k].iter().map(|c| c / a).collect())
        .with_jacobian(move |_| {
            let mut j = Matrix::zeros(k, n);
            for i in 0..k {
                j[(i, i)] = 1.0 / a;
            }
            j
        });

    let t_scales = scales.clone();
    let mut t_jac = Matrix::zeros(n, n);
    for j in 0..m {
        t_jac[(k + j, j)] = b;
    }
    for j in 0..k {
        t_jac[(j, m + j)] = a;
    }
    let transverse_family = ParametrizedFamily::new(v.clone(), u.clone(), move |y, x| {
        x.iter()
            .chain(y)
            .zip(&t_scales)
            .map(|(c, s)| c * s)
            .collect()
    })
    .with_jacobian(move |_, _| t_jac.clone());
    let transverse_sub = Submersion::new(n, m, move |z| z[k..].iter().map(|c| c / b).collect())
        .with_jacobian(move |_| {
            let mut j = Matrix::zeros(m, n);
            for i in 0..m {
                j[(i, k + i)] = 1.0 / b;
            }
            j
        });
    // l_T(y) = vol(U)·a^k·(b^m)^{1−q'} for exponent p'
    let transverse = CatalogEntry::new(
        "pq-map-transverse",
        transverse_family,
        Arc::new(move |e| Ok(vol_v * (vol_u * ak * bm.powf(1.0 - e.q())).powf(1.0 - e.p()))),
    )
    .with_submersion(transverse_sub);

    // l(x) = vol(V)·b^m·(a^k)^{1−q'} for exponent p'
    Ok(CatalogEntry::new(
        "pq-map",
        family,
        Arc::new(move |e| Ok(vol_u * (vol_v * bm * ak.powf(1.0 - e.q())).powf(1.0 - e.p()))),
    )
    .with_submersion(submersion)
    .with_density(Arc::new(move |e, _, _| {
        (1.0 / ak).powf(e.q() - 1.0) / (vol_v * bm * ak.powf(1.0 - e.q()))
    }))
    .with_parameter("a", a)
    .with_parameter("b", b)
    .with_parameter("p", exponent.p())
    .with_transverse(transverse))
}

/// Command-line style description of a catalog family.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CatalogRequest {
    pub u: Option<BoxDomain>,
    pub v: Option<BoxDomain>,
    pub parameters: BTreeMap<String, f64>,
    /// Shear entries `B` (row-major, `dim U × dim V`).
    pub b: Option<Vec<f64>>,
    /// Outer linear map (row-major, `n × n`) for `condenser-linear`.
    pub matrix: Option<Vec<f64>>,
    /// Exponent used by `pq-map`.
    pub p: Option<f64>,
}

impl CatalogRequest {
    fn param(&self, key: &str, default: f64) -> f64 {
        self.parameters.get(key).copied().unwrap_or(default)
    }

    fn boxes(&self) -> Result<(BoxDomain, BoxDomain)> {
        Ok((
            self.u.clone().map_or_else(|| BoxDomain::unit(1), Ok)?,
            self.v.clone().map_or_else(|| BoxDomain::unit(1), Ok)?,
        ))
    }
}

/// Builds the named catalog entry. Boxes default to `(0, 1)`; radii to
/// `(1, e)`; the shear matrix to ones; `a` to 2.
pub fn build(name: &str, request: &CatalogRequest) -> Result<CatalogEntry> {
    match name {
        "parallel" => {
            let (u, v) = request.boxes()?;
            Ok(make_parallel(u, v))
        }
        "shear" => {
            let (u, v) = request.boxes()?;
            let entries = request
                .b
                .clone()
                .unwrap_or_else(|| vec![1.0; u.dim() * v.dim()]);
            let entries = if entries.len() == 1 {
                vec![entries[0]; u.dim() * v.dim()]
            } else {
                entries
            };
            make_shear(
                u.clone(),
                v.clone(),
                Matrix::new(u.dim(), v.dim(), entries)?,
            )
        }
        "annulus-radial" | "annulus-circular" => {
            let mode = if name == "annulus-radial" {
                AnnulusMode::Radial
            } else {
                AnnulusMode::Circular
            };
            make_polar_annulus(
                request.param("r0", 1.0),
                request.param("r1", std::f64::consts::E),
                mode,
            )
        }
        "pq-map" => {
            let (u, v) = request.boxes()?;
            let p = Exponent::new(request.p.unwrap_or(2.0))?;
            make_pq_map(p, request.param("a", 2.0), u, v)
        }
        "condenser-linear" => {
            let (u, v) = request.boxes()?;
            let n = u.dim() + v.dim();
            let entries = request.matrix.clone().unwrap_or_else(|| {
                let mut d = Matrix::identity(n);
                d[(0, 0)] = 2.0;
                d.as_slice().to_vec()
            });
            let outer = OuterMap::linear(Matrix::new(n, n, entries)?)?;
            make_condenser(&make_parallel(u, v), outer)
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown family `{other}` (known: {})",
            NAMES.join(", ")
        ))),
    }
}

/// One representative of every catalog family, used by sweeps and tests.
pub fn standard_entries() -> Result<Vec<CatalogEntry>> {
    let unit = || BoxDomain::unit(1);
    let mut entries = vec![
        make_parallel(
            BoxDomain::interval(0.0, 2.0)?,
            BoxDomain::interval(0.0, 3.0)?,
        ),
        make_shear(unit()?, unit()?, Matrix::new(1, 1, vec![1.0])?)?,
        make_shear(
            unit()?,
            BoxDomain::new(vec![0.0, 0.0], vec![1.0, 2.0])?,
            Matrix::new(1, 2, vec![1.0, 1.0])?,
        )?,
        make_polar_annulus(1.0, std::f64::consts::E, AnnulusMode::Radial)?,
        make_polar_annulus(0.5, 3.0, AnnulusMode::Circular)?,
        make_pq_map(
            Exponent::new(3.0)?,
            2f64.powf(2.0 / 3.0),
            BoxDomain::interval(0.0, 1.5)?,
            unit()?,
        )?,
    ];
    let linear = OuterMap::linear(Matrix::from_diagonal(&[2.0, 1.0]))?;
    entries.push(make_condenser(&make_parallel(unit()?, unit()?), linear)?);
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::modulus_p;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn quad() -> QuadratureScheme {
        QuadratureScheme::default()
    }

    #[test]
    fn parallel_values() {
        let e = make_parallel(
            BoxDomain::interval(0.0, 2.0).unwrap(),
            BoxDomain::interval(0.0, 3.0).unwrap(),
        );
        let two = Exponent::new(2.0).unwrap();
        assert_relative_eq!(e.expected_modulus(two).unwrap(), 2.0 / 3.0);
        let unit = make_parallel(BoxDomain::unit(1).unwrap(), BoxDomain::unit(1).unwrap());
        for p in [1.5, 2.0, 7.0] {
            assert_relative_eq!(
                unit.expected_modulus(Exponent::new(p).unwrap()).unwrap(),
                1.0
            );
        }
        let t = e.transverse().unwrap();
        let p = Exponent::new(3.0).unwrap();
        let product = e.expected_modulus(p).unwrap().powf(1.0 / 3.0)
            * t.expected_modulus(p.conjugate()).unwrap().powf(2.0 / 3.0);
        assert_relative_eq!(product, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_shear_reproduces_parallel_bit_for_bit() {
        let (u, v) = (
            BoxDomain::interval(0.0, 2.0).unwrap(),
            BoxDomain::interval(-1.0, 0.5).unwrap(),
        );
        let parallel = make_parallel(u.clone(), v.clone());
        let shear = make_shear(u, v, Matrix::zeros(1, 1)).unwrap();
        let p = Exponent::new(2.5).unwrap();
        let a = modulus_p(&parallel.family, p, &quad()).unwrap();
        let b = modulus_p(&shear.family, p, &quad()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shear_values() {
        let e = make_shear(
            BoxDomain::unit(1).unwrap(),
            BoxDomain::unit(1).unwrap(),
            Matrix::new(1, 1, vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(
            e.expected_modulus(Exponent::new(2.0).unwrap()).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        // B = (1, 1) either way round gives det(BᵀB + I) = 3.
        let wide = make_shear(
            BoxDomain::unit(1).unwrap(),
            BoxDomain::unit(2).unwrap(),
            Matrix::new(1, 2, vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let tall = make_shear(
            BoxDomain::unit(2).unwrap(),
            BoxDomain::unit(1).unwrap(),
            Matrix::new(2, 1, vec![1.0, 1.0]).unwrap(),
        )
        .unwrap();
        for entry in [wide, tall] {
            assert_relative_eq!(entry.parameters["det_gram"], 3.0, max_relative = 1e-14);
            let p = Exponent::new(2.0).unwrap();
            let r = modulus_p(&entry.family, p, &quad()).unwrap();
            assert_relative_eq!(
                r.modulus,
                entry.expected_modulus(p).unwrap(),
                max_relative = 1e-8
            );
        }
        assert!(make_shear(
            BoxDomain::unit(1).unwrap(),
            BoxDomain::unit(2).unwrap(),
            Matrix::zeros(2, 1)
        )
        .is_err());
    }

    #[test]
    fn annulus_values() {
        let two = Exponent::new(2.0).unwrap();
        let radial = make_polar_annulus(1.0, E, AnnulusMode::Radial).unwrap();
        let circular = make_polar_annulus(1.0, E, AnnulusMode::Circular).unwrap();
        assert_relative_eq!(
            radial.expected_modulus(two).unwrap(),
            2.0 * PI,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            circular.expected_modulus(two).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            radial.expected_modulus(two).unwrap()
                * radial.transverse().unwrap().expected_modulus(two).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(make_polar_annulus(2.0, 1.0, AnnulusMode::Radial).is_err());
        assert!(make_polar_annulus(0.0, 1.0, AnnulusMode::Radial).is_err());
    }

    #[test]
    fn pq_map_defining_identity() {
        for (p, a) in [(2.0, 1.7), (3.0, 2f64.powf(2.0 / 3.0)), (1.5, 0.8)] {
            let e = Exponent::new(p).unwrap();
            let entry = make_pq_map(
                e,
                a,
                BoxDomain::unit(1).unwrap(),
                BoxDomain::interval(0.0, 2.0).unwrap(),
            )
            .unwrap();
            let jac = entry.family.jacobian_full(&[0.3], &[1.1]).unwrap();
            let jy = generalized_norm(&jac.columns(1..2));
            let jx = generalized_norm(&jac.columns(0..1));
            let jf = generalized_norm(&jac);
            assert_relative_eq!(jy.powf(p), jf, max_relative = 1e-12);
            assert_relative_eq!(jx.powf(e.q()), jf, max_relative = 1e-12);
        }
        let e = make_pq_map(
            Exponent::new(3.0).unwrap(),
            2f64.powf(2.0 / 3.0),
            BoxDomain::unit(1).unwrap(),
            BoxDomain::unit(1).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(e.parameters["b"].powf(3.0), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn condenser_with_identity_and_shear() {
        let base = make_parallel(
            BoxDomain::unit(1).unwrap(),
            BoxDomain::interval(0.0, 2.0).unwrap(),
        );
        let p = Exponent::new(2.0).unwrap();
        let same = make_condenser(&base, OuterMap::identity(2)).unwrap();
        assert_relative_eq!(
            modulus_p(&same.family, p, &quad()).unwrap().modulus,
            base.expected_modulus(p).unwrap(),
            max_relative = 1e-12
        );
        let b = Matrix::new(1, 1, vec![0.7]).unwrap();
        let sheared = make_condenser(
            &base,
            OuterMap::linear(block_identity(2, 1, 1, Some(&b))).unwrap(),
        )
        .unwrap();
        let direct = make_shear(
            BoxDomain::unit(1).unwrap(),
            BoxDomain::interval(0.0, 2.0).unwrap(),
            b,
        )
        .unwrap();
        assert_relative_eq!(
            sheared.expected_modulus(p).unwrap(),
            direct.expected_modulus(p).unwrap(),
            max_relative = 1e-12
        );
        assert!(make_condenser(&base, OuterMap::identity(3)).is_err());
    }

    #[test]
    fn build_by_name() {
        let mut req = CatalogRequest::default();
        for name in NAMES {
            let entry = build(name, &req).unwrap();
            assert!(entry.expected_modulus(Exponent::new(2.0).unwrap()).unwrap() > 0.0);
        }
        req.b = Some(vec![1.0, 2.0, 3.0]);
        assert!(build("shear", &req).is_err());
        assert!(build("nope", &req).is_err());
    }
}
