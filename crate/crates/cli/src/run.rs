use std::collections::BTreeMap;

use pmodulus::catalog::{self, CatalogEntry};
use pmodulus::oracle::{cross_validate, OracleSettings};
use pmodulus::{
    admissibility_check, coarea_check, extremal_density, extremality_probe, key_relation_residual,
    modulus_p, submersion_modulus, BoxDomain, ModulusReport, ProbeSettings, QuadratureKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{CommandKind, RunConfig};
use crate::report::{
    CheckRecord, ConvergenceRecord, Diagnostics, LSampleRecord, ParameterValue, QuadratureRecord,
    ResultDocument,
};
use crate::CliError;

pub const EXPECTED_TOLERANCE: f64 = 1e-7;
pub const ADMISSIBILITY_TOLERANCE: f64 = 1e-6;
pub const ANALYTIC_KEY_TOLERANCE: f64 = 1e-8;
pub const DIFFERENCE_KEY_TOLERANCE: f64 = 1e-5;
pub const ROUTE_TOLERANCE: f64 = 1e-7;
pub const COAREA_TOLERANCE: f64 = 1e-8;
pub const EXTREMALITY_TOLERANCE: f64 = 1e-9;
pub const ORACLE_TOLERANCE: f64 = 0.05;

const ADMISSIBILITY_SAMPLES: usize = 32;
const KEY_RELATION_SAMPLES: usize = 100;

pub fn run(config: &RunConfig) -> Result<ResultDocument, CliError> {
    let entry = catalog::build(&config.family, &config.request)?;
    let report = modulus_p(&entry.family, config.exponent, &config.quadrature)?;
    let expected = entry.expected_modulus(config.exponent)?;
    let mut document = base_document(config, &entry, &report, expected);
    match config.command {
        CommandKind::Compute => {
            let refined = modulus_p(&entry.family, config.exponent, &config.quadrature.refined())?;
            document.diagnostics.quadrature_error = Some((refined.modulus - report.modulus).abs());
        }
        CommandKind::Verify => {
            document.diagnostics.checks = verify(config, &entry, &report, expected)?
        }
        CommandKind::CrossValidate => {
            let rows = cross_validate(
                &entry.family,
                config.exponent,
                &report,
                &config.ladder,
                &OracleSettings::default(),
            )?;
            let finest = rows.last().map_or(f64::INFINITY, |r| r.relative_gap);
            document
                .diagnostics
                .checks
                .push(check("oracle-agreement", finest, ORACLE_TOLERANCE));
            document.diagnostics.convergence = rows
                .into_iter()
                .map(|r| ConvergenceRecord {
                    resolution: r.resolution,
                    discrete_modulus: r.discrete_modulus,
                    relative_gap: r.relative_gap,
                    iterations: r.iterations,
                })
                .collect();
        }
    }
    Ok(document)
}

fn base_document(
    config: &RunConfig,
    entry: &CatalogEntry,
    report: &ModulusReport,
    expected: f64,
) -> ResultDocument {
    let mut parameters: BTreeMap<String, ParameterValue> = entry
        .parameters
        .iter()
        .map(|(k, v)| (k.clone(), ParameterValue::Number(*v)))
        .collect();
    for (key, text) in [("u", &config.u_text), ("v", &config.v_text)] {
        if let Some(text) = text {
            parameters.insert(key.to_string(), ParameterValue::Text(text.clone()));
        }
    }
    let kind = match config.quadrature.kind() {
        QuadratureKind::GaussLegendre => "gauss-legendre",
        QuadratureKind::Midpoint => "midpoint",
    };
    ResultDocument {
        family: config.family.clone(),
        parameters,
        p: config.exponent.p(),
        q: config.exponent.q(),
        modulus: report.modulus,
        expected_modulus: Some(expected),
        relative_error: Some((report.modulus - expected).abs() / expected),
        l_samples: report
            .l_samples
            .iter()
            .map(|s| LSampleRecord {
                x: s.x.clone(),
                l: s.l,
            })
            .collect(),
        diagnostics: Diagnostics {
            command: config.command,
            quadrature: QuadratureRecord {
                kind: kind.to_string(),
                order: config.quadrature.order(),
                subdivisions: config.quadrature.subdivisions(),
            },
            node_count: report.node_count,
            min_jacobian: report.min_jacobian,
            quadrature_error: None,
            checks: Vec::new(),
            convergence: Vec::new(),
        },
        seed: config.seed,
    }
}

fn check(name: &str, value: f64, tolerance: f64) -> CheckRecord {
    CheckRecord {
        name: name.to_string(),
        passed: value <= tolerance,
        value,
        tolerance,
    }
}

fn random_point(rng: &mut ChaCha8Rng, domain: &BoxDomain) -> Vec<f64> {
    domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(a, b)| rng.random_range(*a..*b))
        .collect()
}

/// Each check records a non-negative defect and passes when it is at most
/// the tolerance.
fn verify(
    config: &RunConfig,
    entry: &CatalogEntry,
    report: &ModulusReport,
    expected: f64,
) -> Result<Vec<CheckRecord>, CliError> {
    let family = &entry.family;
    let quad = &config.quadrature;
    let exponent = config.exponent;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = vec![check(
        "expected-modulus",
        (report.modulus - expected).abs() / expected,
        EXPECTED_TOLERANCE,
    )];

    let density = extremal_density(family, exponent, quad);
    let xs: Vec<Vec<f64>> = (0..ADMISSIBILITY_SAMPLES)
        .map(|_| random_point(&mut rng, family.u()))
        .collect();
    let admissibility = admissibility_check(family, &density, quad, &xs)?
        .into_iter()
        .map(|(_, integral)| (integral - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(check(
        "admissibility",
        admissibility,
        ADMISSIBILITY_TOLERANCE,
    ));

    if let Some(sub) = &entry.submersion {
        let k = family.n() - family.m();
        let domain = family.u().product(family.v());
        let mut residual: f64 = 0.0;
        for _ in 0..KEY_RELATION_SAMPLES {
            let z = random_point(&mut rng, &domain);
            residual = residual.max(key_relation_residual(family, sub, &z[..k], &z[k..])?);
        }
        let tolerance = if family.has_analytic_jacobian() && sub.has_analytic_jacobian() {
            ANALYTIC_KEY_TOLERANCE
        } else {
            DIFFERENCE_KEY_TOLERANCE
        };
        checks.push(check("key-relation", residual, tolerance));

        let level_set = submersion_modulus(sub, family, exponent, quad)?;
        checks.push(check(
            "route-equivalence",
            (level_set.modulus - report.modulus).abs() / report.modulus,
            ROUTE_TOLERANCE,
        ));

        let integrands: [fn(&[f64]) -> f64; 3] = [
            |_| 1.0,
            |z| 1.0 + z.iter().map(|c| c * c).sum::<f64>(),
            |z| (0.7 * z[0]).cos() * (0.3 * z[z.len() - 1]).exp(),
        ];
        let mut coarea: f64 = 0.0;
        for g in integrands {
            let (lhs, rhs) = coarea_check(family, sub, g, quad)?;
            coarea = coarea.max((lhs - rhs).abs() / rhs.abs());
        }
        checks.push(check("coarea", coarea, COAREA_TOLERANCE));
    }

    let settings = ProbeSettings {
        seed: config.seed,
        ..ProbeSettings::default()
    };
    let gap = extremality_probe(family, exponent, quad, &settings)?;
    checks.push(check("extremality", (-gap).max(0.0), EXTREMALITY_TOLERANCE));
    Ok(checks)
}
