//! Discrete p-modulus: minimize `Σ ρ_c^p vol_c` over cell densities `ρ ≥ 0`
//! subject to `Σ_c a_{s,c} ρ_c ≥ 1` for every discrete surface `s`.
//!
//! The program is built straight from the definition of modulus and shares
//! nothing with the closed-form route except the family's map and `|J^y_f|`,
//! which makes it an independent check of [`crate::modulus::modulus_p`].

mod discretize;
mod solver;
mod text;

pub use discretize::{cross_validate, discretize_family, ConvergenceRow, OracleSettings};
pub use solver::{solve_discrete, DiscreteSolution, SolverSettings};

use crate::error::{Error, Result};
use crate::modulus::Exponent;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub center: Vec<f64>,
    pub volume: f64,
}

/// Discrete surface measure: `(cell index, weight)` pairs with distinct cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscreteSurface {
    pub entries: Vec<(usize, f64)>,
}

impl DiscreteSurface {
    /// Merges repeated cell indices and drops zero weights.
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (c, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += w,
                _ => merged.push((c, w)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        Self { entries: merged }
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// `Σ_c a_c ρ_c`
    pub fn integrate(&self, density: &[f64]) -> f64 {
        self.entries.iter().map(|&(c, w)| w * density[c]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModulusProblem {
    cells: Vec<Cell>,
    surfaces: Vec<DiscreteSurface>,
    exponent: Exponent,
}

impl DiscreteModulusProblem {
    pub fn new(
        cells: Vec<Cell>,
        surfaces: Vec<DiscreteSurface>,
        exponent: Exponent,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidParameter(
                "discrete problem without cells".into(),
            ));
        }
        let dim = cells[0].center.len();
        for (i, cell) in cells.iter().enumerate() {
            if cell.center.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "cell {i} has a center of another dimension"
                )));
            }
            if !(cell.volume.is_finite() && cell.volume > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "cell {i} has volume {}",
                    cell.volume
                )));
            }
        }
        for (s, surface) in surfaces.iter().enumerate() {
            for &(c, w) in &surface.entries {
                if c >= cells.len() {
                    return Err(Error::InvalidParameter(format!(
                        "surface {s} references missing cell {c}"
                    )));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "surface {s} has weight {w}"
                    )));
                }
            }
            if !(surface.total_weight() > 0.0) {
                return Err(Error::InfeasibleSurface(s));
            }
        }
        Ok(Self {
            cells,
            surfaces,
            exponent,
        })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn surfaces(&self) -> &[DiscreteSurface] {
        &self.surfaces
    }

    pub fn exponent(&self) -> Exponent {
        self.exponent
    }

    /// `Σ ρ_c^p vol_c`
    pub fn energy(&self, density: &[f64]) -> f64 {
        let p = self.exponent.p();
        self.cells
            .iter()
            .zip(density)
            .map(|(c, r)| r.powf(p) * c.volume)
            .sum()
    }

    /// Problem restricted to the surfaces at `indices`.
    pub fn with_surfaces(&self, indices: &[usize]) -> Result<Self> {
        let surfaces = indices
            .iter()
            .map(|&i| {
                self.surfaces
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidParameter(format!("no surface {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.cells.clone(), surfaces, self.exponent)
    }

    /// Every surface weight multiplied by `factor > 0`.
    pub fn scaled_weights(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!("weight scale {factor}")));
        }
        let surfaces = self
            .surfaces
            .iter()
            .map(|s| DiscreteSurface {
                entries: s.entries.iter().map(|&(c, w)| (c, w * factor)).collect(),
            })
            .collect();
        Self::new(self.cells.clone(), surfaces, self.exponent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(v: f64) -> Cell {
        Cell {
            center: vec![0.0],
            volume: v,
        }
    }

    #[test]
    fn surface_entries_are_merged() {
        let s = DiscreteSurface::from_entries(vec![(3, 1.0), (1, 0.5), (3, 2.0), (2, 0.0)]);
        assert_eq!(s.entries, vec![(1, 0.5), (3, 3.0)]);
        assert_eq!(s.total_weight(), 3.5);
    }

    #[test]
    fn validation() {
        let p = Exponent::new(2.0).unwrap();
        let ok = DiscreteSurface::from_entries(vec![(0, 1.0)]);
        assert!(DiscreteModulusProblem::new(vec![cell(1.0)], vec![ok.clone()], p).is_ok());
        assert!(DiscreteModulusProblem::new(vec![cell(0.0)], vec![ok.clone()], p).is_err());
        assert!(matches!(
            DiscreteModulusProblem::new(
                vec![cell(1.0)],
                vec![ok.clone(), DiscreteSurface::default()],
                p
            ),
            Err(Error::InfeasibleSurface(1))
        ));
        let bad = DiscreteSurface {
            entries: vec![(4, 1.0)],
        };
        assert!(DiscreteModulusProblem::new(vec![cell(1.0)], vec![bad], p).is_err());
        let neg = DiscreteSurface {
            entries: vec![(0, -1.0)],
        };
        assert!(DiscreteModulusProblem::new(vec![cell(1.0)], vec![neg], p).is_err());
    }
}
