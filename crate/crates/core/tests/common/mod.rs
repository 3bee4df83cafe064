#![allow(dead_code)]

use pmodulus::oracle::{Cell, DiscreteModulusProblem, DiscreteSurface};
use pmodulus::{Exponent, Matrix};
use rand::Rng;

/// Cofactor expansion along the first row.
pub fn laplace_determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        _ => (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, v)| *v)
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * laplace_determinant(&minor)
            })
            .sum(),
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// `sqrt(Σ det(maximal minor)²)` by enumeration.
pub fn brute_force_norm(a: &Matrix) -> f64 {
    let (r, c) = a.shape();
    let k = r.min(c);
    let sum: f64 = if r >= c {
        combinations(r, k)
            .iter()
            .map(|rows| {
                let m: Vec<Vec<f64>> = rows
                    .iter()
                    .map(|&i| (0..c).map(|j| a[(i, j)]).collect())
                    .collect();
                laplace_determinant(&m).powi(2)
            })
            .sum()
    } else {
        combinations(c, k)
            .iter()
            .map(|cols| {
                let m: Vec<Vec<f64>> = (0..r)
                    .map(|i| cols.iter().map(|&j| a[(i, j)]).collect())
                    .collect();
                laplace_determinant(&m).powi(2)
            })
            .sum()
    };
    sum.sqrt()
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// Random square matrix kept well conditioned by a dominant diagonal.
pub fn well_conditioned<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let mut a = random_matrix(rng, n, n);
    for i in 0..n {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        a[(i, i)] += sign * (n as f64 + rng.random_range(0.5..2.0));
    }
    a
}

pub fn random_problem<R: Rng>(rng: &mut R, p: f64) -> DiscreteModulusProblem {
    let cells: Vec<Cell> = (0..rng.random_range(2..12))
        .map(|i| Cell {
            center: vec![i as f64],
            volume: rng.random_range(0.2..2.0),
        })
        .collect();
    let surfaces = (0..rng.random_range(2..8))
        .map(|_| {
            let len = rng.random_range(1..=cells.len().min(4));
            DiscreteSurface::from_entries(
                (0..len)
                    .map(|_| (rng.random_range(0..cells.len()), rng.random_range(0.1..2.0)))
                    .collect(),
            )
        })
        .collect();
    DiscreteModulusProblem::new(cells, surfaces, Exponent::new(p).unwrap()).unwrap()
}
