//! Plain-text exchange format for discrete problems.
//!
//! ```text
//! # optional comments
//! p 2
//! cells 3 2
//! 0.5 0.5 0.25        <- center coordinates, then volume
//! ...
//! surfaces 2
//! 0:0.5 1:0.25        <- cell:weight pairs
//! ...
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so parsing the
//! output reproduces the problem exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{Cell, DiscreteModulusProblem, DiscreteSurface};
use crate::error::{Error, Result};
use crate::modulus::Exponent;

impl DiscreteModulusProblem {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let dim = self.cells()[0].center.len();
        let _ = writeln!(out, "p {}", self.exponent().p());
        let _ = writeln!(out, "cells {} {}", self.cells().len(), dim);
        for cell in self.cells() {
            for c in &cell.center {
                let _ = write!(out, "{c} ");
            }
            let _ = writeln!(out, "{}", cell.volume);
        }
        let _ = writeln!(out, "surfaces {}", self.surfaces().len());
        for surface in self.surfaces() {
            let line: Vec<String> = surface
                .entries
                .iter()
                .map(|(c, w)| format!("{c}:{w}"))
                .collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unexpected end of input, expected {what}"),
            })
        };

        let (ln, header) = next("p header")?;
        let p = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["p", v] => parse::<f64>(v, ln)?,
            _ => return Err(parse_error(ln, "expected `p <value>`")),
        };
        let exponent = Exponent::new(p).map_err(|e| parse_error(ln, &e.to_string()))?;

        let (ln, header) = next("cells header")?;
        let (count, dim) = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["cells", c, d] => (parse::<usize>(c, ln)?, parse::<usize>(d, ln)?),
            _ => return Err(parse_error(ln, "expected `cells <count> <dim>`")),
        };
        let mut cells = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, line) = next("cell line")?;
            let values = line
                .split_whitespace()
                .map(|v| parse::<f64>(v, ln))
                .collect::<Result<Vec<_>>>()?;
            if values.len() != dim + 1 {
                return Err(parse_error(ln, &format!("expected {} numbers", dim + 1)));
            }
            cells.push(Cell {
                center: values[..dim].to_vec(),
                volume: values[dim],
            });
        }

        let (ln, header) = next("surfaces header")?;
        let count = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["surfaces", c] => parse::<usize>(c, ln)?,
            _ => return Err(parse_error(ln, "expected `surfaces <count>`")),
        };
        let mut surfaces = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, line) = next("surface line")?;
            let entries = line
                .split_whitespace()
                .map(|pair| {
                    let (c, w) = pair
                        .split_once(':')
                        .ok_or_else(|| parse_error(ln, &format!("`{pair}` is not cell:weight")))?;
                    Ok((parse::<usize>(c, ln)?, parse::<f64>(w, ln)?))
                })
                .collect::<Result<Vec<_>>>()?;
            surfaces.push(DiscreteSurface { entries });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(parse_error(ln, "trailing content"));
        }
        DiscreteModulusProblem::new(cells, surfaces, exponent)
    }
}

fn parse<T: FromStr>(token: &str, line: usize) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_error(line, &format!("cannot parse `{token}`")))
}

fn parse_error(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_hand_written_problem() {
        let text = "# two cells\np 2\ncells 2 1\n0.5 1\n1.5 1\nsurfaces 1\n0:1 1:2\n";
        let problem = DiscreteModulusProblem::from_text(text).unwrap();
        assert_eq!(problem.cells().len(), 2);
        assert_eq!(problem.surfaces()[0].entries, vec![(0, 1.0), (1, 2.0)]);
        assert_eq!(problem.to_text(), text.trim_start_matches("# two cells\n"));
    }

    #[test]
    fn reports_line_numbers() {
        let err =
            DiscreteModulusProblem::from_text("p 2\ncells 1 1\n0.5 x\nsurfaces 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = DiscreteModulusProblem::from_text("p 2\ncells 1 1\n0.5 1\nsurfaces 1\n0-1\n")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }), "{err:?}");
        assert!(DiscreteModulusProblem::from_text("p 1\ncells 0 1\nsurfaces 0\n").is_err());
    }
}
