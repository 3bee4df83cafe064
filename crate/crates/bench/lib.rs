//! Fixtures shared by the benchmarks.

use pmodulus::oracle::{discretize_family, DiscreteModulusProblem};
use pmodulus::{BoxDomain, Exponent, Matrix, ParametrizedFamily};

/// Deterministic dense matrix with entries in `[-1, 1)`.
pub fn test_matrix(rows: usize, cols: usize) -> Matrix {
    let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
    let data = (0..rows * cols)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect();
    Matrix::new(rows, cols, data).expect("shape matches data")
}

/// Radial segments in the annulus `1 < |z| < e`.
pub fn radial_family() -> ParametrizedFamily {
    ParametrizedFamily::new(
        BoxDomain::interval(0.0, 2.0 * std::f64::consts::PI).expect("interval"),
        BoxDomain::interval(1.0, std::f64::consts::E).expect("interval"),
        |x, y| vec![y[0] * x[0].cos(), y[0] * x[0].sin()],
    )
}

pub fn oracle_problem(cells_per_axis: usize) -> DiscreteModulusProblem {
    discretize_family(
        &radial_family(),
        Exponent::new(2.0).expect("p > 1"),
        cells_per_axis,
        4 * cells_per_axis,
        6 * cells_per_axis,
    )
    .expect("valid discretization")
}
