//! Composite tensor-product quadrature over axis-aligned boxes.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::family::BoxDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureKind {
    GaussLegendre,
    /// `order` equally spaced midpoints per cell.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureScheme {
    kind: QuadratureKind,
    order: usize,
    subdivisions: usize,
}

impl Default for QuadratureScheme {
    /// Gauss–Legendre, 8 points on each of 4 cells per axis.
    fn default() -> Self {
        Self {
            kind: QuadratureKind::GaussLegendre,
            order: 8,
            subdivisions: 4,
        }
    }
}

impl QuadratureScheme {
    pub fn new(kind: QuadratureKind, order: usize, subdivisions: usize) -> Result<Self> {
        if order == 0 || subdivisions == 0 {
            return Err(Error::InvalidParameter(format!(
                "quadrature order ({order}) and subdivisions ({subdivisions}) must be positive"
            )));
        }
        Ok(Self {
            kind,
            order,
            subdivisions,
        })
    }

    pub fn gauss_legendre(order: usize, subdivisions: usize) -> Result<Self> {
        Self::new(QuadratureKind::GaussLegendre, order, subdivisions)
    }

    pub fn midpoint(order: usize, subdivisions: usize) -> Result<Self> {
        Self::new(QuadratureKind::Midpoint, order, subdivisions)
    }

    pub fn kind(&self) -> QuadratureKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn subdivisions(&self) -> usize {
        self.subdivisions
    }

    /// Same rule with twice as many cells per axis.
    pub fn refined(&self) -> Self {
        Self {
            subdivisions: self.subdivisions * 2,
            ..*self
        }
    }

    pub fn points_per_axis(&self) -> usize {
        self.order * self.subdivisions
    }

    /// Nodes and weights on `[-1, 1]` for a single cell.
    fn reference_rule(&self) -> (Vec<f64>, Vec<f64>) {
        match self.kind {
            QuadratureKind::GaussLegendre => gauss_legendre_nodes(self.order),
            QuadratureKind::Midpoint => {
                let n = self.order;
                let h = 2.0 / n as f64;
                let nodes = (0..n).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
                (nodes, vec![h; n])
            }
        }
    }

    /// Composite one-dimensional rule on `[a, b]`.
    pub fn rule_1d(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let (ref_nodes, ref_weights) = self.reference_rule();
        let cell = (b - a) / self.subdivisions as f64;
        let half = 0.5 * cell;
        let mut out = Vec::with_capacity(self.points_per_axis());
        for c in 0..self.subdivisions {
            let mid = a + (c as f64 + 0.5) * cell;
            for (t, w) in ref_nodes.iter().zip(&ref_weights) {
                out.push((mid + half * t, half * w));
            }
        }
        out
    }

    pub fn tensor_rule(&self, domain: &BoxDomain) -> TensorRule {
        let axes = domain
            .lower()
            .iter()
            .zip(domain.upper())
            .map(|(&a, &b)| self.rule_1d(a, b))
            .collect();
        TensorRule { axes }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Tensor product of one-dimensional composite rules.
#[derive(Debug, Clone)]
pub struct TensorRule {
    axes: Vec<Vec<(f64, f64)>>,
}

impl TensorRule {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes node `index` into `point` and returns its weight.
    pub fn node_into(&self, mut index: usize, point: &mut [f64]) -> f64 {
        let mut weight = 1.0;
        for (axis, slot) in self.axes.iter().zip(point.iter_mut()).rev() {
            let (x, w) = axis[index % axis.len()];
            index /= axis.len();
            *slot = x;
            weight *= w;
        }
        weight
    }

    pub fn node(&self, index: usize) -> (Vec<f64>, f64) {
        let mut point = vec![0.0; self.dim()];
        let w = self.node_into(index, &mut point);
        (point, w)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }
}
