//! Interior-point Newton method on the Lagrange dual.
//!
//! For multipliers `λ ≥ 0` (one per surface) the Lagrangian is minimized in
//! closed form by `ρ_c(λ) = ((Aᵀλ)_c / (p vol_c))^{1/(p−1)}`, giving the concave
//! dual `g(λ) = Σλ − (p−1) Σ vol_c ρ_c(λ)^p` with gradient `1 − Aρ(λ)`. We follow
//! the log-barrier path `min −g(λ) − μ Σ log λ_s` for decreasing `μ` with damped
//! Newton steps, and recover a primal point by dividing `ρ(λ)` by its smallest
//! surface integral. The gap between that feasible energy and the best dual
//! value along the ray through `λ` certifies the result.

use super::DiscreteModulusProblem;
use crate::error::{Error, Result};

/// Above this many surfaces Newton systems are solved by preconditioned CG
/// instead of a dense Cholesky factorization.
const DENSE_LIMIT: usize = 1500;
const MU_DECREASE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative duality gap at which the solve stops.
    pub tolerance: f64,
    /// Cap on Newton steps.
    pub max_iterations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 2_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub density: Vec<f64>,
    /// `Σ ρ_c^p vol_c` of the feasible density.
    pub objective: f64,
    /// Best dual lower bound.
    pub lower_bound: f64,
    pub max_constraint_violation: f64,
    /// Newton steps taken.
    pub iterations: usize,
}

impl DiscreteSolution {
    pub fn relative_gap(&self) -> f64 {
        (self.objective - self.lower_bound).max(0.0) / self.objective
    }
}

struct Dual<'a> {
    problem: &'a DiscreteModulusProblem,
    /// Column view of the constraint matrix: `(surface, weight)` per cell.
    columns: Vec<Vec<(usize, f64)>>,
    p: f64,
}

/// `ρ(λ)` with the pushed-forward multipliers `u = Aᵀλ`.
struct State {
    u: Vec<f64>,
    rho: Vec<f64>,
    energy: f64,
}

impl<'a> Dual<'a> {
    fn new(problem: &'a DiscreteModulusProblem) -> Self {
        let mut columns = vec![Vec::new(); problem.cells().len()];
        for (s, surface) in problem.surfaces().iter().enumerate() {
            for &(c, w) in &surface.entries {
                columns[c].push((s, w));
            }
        }
        Self {
            problem,
            columns,
            p: problem.exponent().p(),
        }
    }

    fn state(&self, lambda: &[f64]) -> State {
        let inv = 1.0 / (self.p - 1.0);
        let mut u = vec![0.0; self.columns.len()];
        let mut rho = vec![0.0; self.columns.len()];
        for (c, col) in self.columns.iter().enumerate() {
            let uc: f64 = col.iter().map(|&(s, w)| lambda[s] * w).sum();
            u[c] = uc;
            if uc > 0.0 {
                rho[c] = (uc / (self.p * self.problem.cells()[c].volume)).powf(inv);
            }
        }
        let energy = self.problem.energy(&rho);
        State { u, rho, energy }
    }

    /// Barrier objective `(p−1)E − Σλ − μ Σ log λ`.
    fn barrier(&self, lambda: &[f64], state: &State, mu: f64) -> f64 {
        let log_sum: f64 = lambda.iter().map(|l| l.ln()).sum();
        (self.p - 1.0) * state.energy - lambda.iter().sum::<f64>() - mu * log_sum
    }

    fn integrals(&self, rho: &[f64]) -> Vec<f64> {
        self.problem
            .surfaces()
            .iter()
            .map(|s| s.integrate(rho))
            .collect()
    }

    /// `dρ_c/du_c`
    fn curvature(&self, state: &State) -> Vec<f64> {
        state
            .u
            .iter()
            .zip(&state.rho)
            .map(|(&u, &r)| {
                if u > 0.0 {
                    r / ((self.p - 1.0) * u)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Best dual value on the ray `{tλ : t > 0}`.
    fn ray_bound(&self, lambda: &[f64], energy: f64) -> f64 {
        let total: f64 = lambda.iter().sum();
        if !(energy > 0.0 && total > 0.0) {
            return 0.0;
        }
        let p = self.p;
        let q = p / (p - 1.0);
        let t = (total / (p * energy)).powf(p - 1.0);
        t * total - (p - 1.0) * t.powf(q) * energy
    }

    fn newton_direction(
        &self,
        lambda: &[f64],
        curvature: &[f64],
        mu: f64,
        grad: &[f64],
    ) -> Vec<f64> {
        let s = lambda.len();
        if s <= DENSE_LIMIT {
            let mut h = vec![0.0; s * s];
            for (col, &d) in self.columns.iter().zip(curvature) {
                if d == 0.0 {
                    continue;
                }
                for &(i, wi) in col {
                    for &(j, wj) in col {
                        h[i * s + j] += d * wi * wj;
                    }
                }
            }
            for i in 0..s {
                h[i * s + i] += mu / (lambda[i] * lambda[i]);
            }
            if let Some(d) = cholesky_solve(&mut h, s, grad) {
                return d.into_iter().map(|v| -v).collect();
            }
        }
        self.conjugate_gradient(lambda, curvature, mu, grad)
    }

    /// Jacobi-preconditioned CG on the Newton system.
    fn conjugate_gradient(
        &self,
        lambda: &[f64],
        curvature: &[f64],
        mu: f64,
        grad: &[f64],
    ) -> Vec<f64> {
        let s = lambda.len();
        let mut diag: Vec<f64> = lambda.iter().map(|l| mu / (l * l)).collect();
        for (col, &d) in self.columns.iter().zip(curvature) {
            for &(i, w) in col {
                diag[i] += d * w * w;
            }
        }
        let apply = |x: &[f64], out: &mut [f64]| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = mu * x[i] / (lambda[i] * lambda[i]);
            }
            for (col, &d) in self.columns.iter().zip(curvature) {
                if d == 0.0 {
                    continue;
                }
                let t: f64 = d * col.iter().map(|&(i, w)| w * x[i]).sum::<f64>();
                for &(i, w) in col {
                    out[i] += w * t;
                }
            }
        };
        let mut x = vec![0.0; s];
        let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(a, b)| a / b).collect();
        let mut dir = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let target = 1e-24 * grad.iter().map(|g| g * g).sum::<f64>();
        let mut hd = vec![0.0; s];
        for _ in 0..(10 * s).max(100) {
            if r.iter().map(|v| v * v).sum::<f64>() <= target {
                break;
            }
            apply(&dir, &mut hd);
            let curv: f64 = dir.iter().zip(&hd).map(|(a, b)| a * b).sum();
            if !(curv > 0.0) {
                break;
            }
            let alpha = rz / curv;
            for i in 0..s {
                x[i] += alpha * dir[i];
                r[i] -= alpha * hd[i];
            }
            for i in 0..s {
                z[i] = r[i] / diag[i];
            }
            let next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = next / rz;
            rz = next;
            for i in 0..s {
                dir[i] = z[i] + beta * dir[i];
            }
        }
        x
    }
}

/// Solves `H x = b` in place for symmetric positive definite `H` (row-major).
fn cholesky_solve(h: &mut [f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut d = h[j * n + j];
        for k in 0..j {
            d -= h[j * n + k] * h[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        h[j * n + j] = d;
        for i in j + 1..n {
            let mut v = h[i * n + j];
            for k in 0..j {
                v -= h[i * n + k] * h[j * n + k];
            }
            h[i * n + j] = v / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= h[i * n + k] * y[k];
        }
        y[i] /= h[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= h[k * n + i] * y[k];
        }
        y[i] /= h[i * n + i];
    }
    Some(y)
}

/// Solves the discrete modulus problem to the relative duality gap in
/// `settings`.
pub fn solve_discrete(
    problem: &DiscreteModulusProblem,
    settings: &SolverSettings,
) -> Result<DiscreteSolution> {
    if !(settings.tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "solver tolerance {}",
            settings.tolerance
        )));
    }
    let p = problem.exponent().p();
    let dual = Dual::new(problem);
    let s = problem.surfaces().len();
    let nc = problem.cells().len();
    if s == 0 {
        return Ok(DiscreteSolution {
            density: vec![0.0; nc],
            objective: 0.0,
            lower_bound: 0.0,
            max_constraint_violation: 0.0,
            iterations: 0,
        });
    }

    // Start on the best point of the ray through (1, …, 1).
    let ones = vec![1.0; s];
    let energy = dual.state(&ones).energy;
    let t = (s as f64 / (p * energy)).powf(p - 1.0);
    let mut lambda = vec![t; s];
    let mut mu = 0.1 * t;

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut lower_bound = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut state = dual.state(&lambda);

    loop {
        // Centering steps for the current μ.
        loop {
            if iterations >= settings.max_iterations {
                let gap = best
                    .as_ref()
                    .map_or(f64::INFINITY, |(_, obj)| (obj - lower_bound).max(0.0) / obj);
                return Err(Error::NoConvergence { iterations, gap });
            }
            iterations += 1;
            let integrals = dual.integrals(&state.rho);
            let grad: Vec<f64> = integrals
                .iter()
                .zip(&lambda)
                .map(|(a, l)| a - 1.0 - mu / l)
                .collect();
            let curvature = dual.curvature(&state);
            let dir = dual.newton_direction(&lambda, &curvature, mu, &grad);
            let decrement: f64 = -grad.iter().zip(&dir).map(|(g, d)| g * d).sum::<f64>();
            if !(decrement > 1e-14 * mu * s as f64) {
                break;
            }
            let mut step = dir
                .iter()
                .zip(&lambda)
                .filter(|(d, _)| **d < 0.0)
                .map(|(d, l)| -0.99 * l / d)
                .fold(1.0, f64::min);
            let current = dual.barrier(&lambda, &state, mu);
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> = lambda.iter().zip(&dir).map(|(l, d)| l + step * d).collect();
                let trial_state = dual.state(&trial);
                // Below rounding the barrier cannot rank steps; trust Newton there.
                let negligible = decrement <= 1e-11 * current.abs() && step == 1.0;
                if negligible
                    || dual.barrier(&trial, &trial_state, mu) <= current - 0.25 * step * decrement
                {
                    lambda = trial;
                    state = trial_state;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || decrement < 1e-6 * mu * s as f64 {
                break;
            }
        }

        let integrals = dual.integrals(&state.rho);
        lower_bound = lower_bound.max(dual.ray_bound(&lambda, state.energy));
        let min_integral = integrals.iter().copied().fold(f64::INFINITY, f64::min);
        if min_integral > 0.0 {
            let objective = state.energy / min_integral.powf(p);
            if best.as_ref().is_none_or(|b| objective < b.1) {
                let scaled: Vec<f64> = state.rho.iter().map(|r| r / min_integral).collect();
                best = Some((scaled, objective));
            }
        }
        if let Some((_, objective)) = &best {
            let gap = (objective - lower_bound).max(0.0) / objective;
            if gap <= settings.tolerance {
                return Ok(finish(problem, best.unwrap(), lower_bound, iterations));
            }
        }
        mu *= MU_DECREASE;
    }
}

fn finish(
    problem: &DiscreteModulusProblem,
    (density, objective): (Vec<f64>, f64),
    lower_bound: f64,
    iterations: usize,
) -> DiscreteSolution {
    let max_constraint_violation = problem
        .surfaces()
        .iter()
        .map(|s| (1.0 - s.integrate(&density)).max(0.0))
        .fold(0.0, f64::max);
    DiscreteSolution {
        density,
        objective,
        lower_bound,
        max_constraint_violation,
        iterations,
    }
}
