//! Eigenvalue, constrained-minimization and linear solvers for the discrete
//! operator restricted to a mask and a parity sector.

pub(crate) mod cg;
mod eigen;
mod linear;
mod minimize;
mod nonlinearity;
pub(crate) mod sector;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::operator::Field;

pub use eigen::{antisym_eig, dirichlet_eig, lambda1_minus, sector_eig};
pub use linear::{linear_solve, torsion};
pub use minimize::{critical_exponent, p_minimize};
pub use nonlinearity::{FnNonlinearity, Nonlinearity, PowerNonlinearity};
pub use sector::Sector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuess {
    /// x_N·1_Ω (odd about the constraint plane) or 1_Ω without a constraint.
    Default,
    /// Uniform random values from the seed, projected to the sector.
    Random,
}

/// Backtracking line search parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepPolicy {
    pub initial: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub min_step: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            initial: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            min_step: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Relative residual at which eigen and minimization iterations stop.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub initial_guess: InitialGuess,
    pub step: StepPolicy,
    /// Relative residual for inner conjugate-gradient solves.
    pub linear_tolerance: f64,
    pub linear_max_iterations: usize,
    /// Spectral shift σ for inverse iteration (solves with L − σ).
    pub shift: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 500,
            seed: 0,
            initial_guess: InitialGuess::Default,
            step: StepPolicy::default(),
            linear_tolerance: 1e-12,
            linear_max_iterations: 20_000,
            shift: 0.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(invalid("tolerance", "must be positive"));
        }
        if !(self.linear_tolerance > 0.0 && self.linear_tolerance.is_finite()) {
            return Err(invalid("linear_tolerance", "must be positive"));
        }
        if self.max_iterations == 0 || self.linear_max_iterations == 0 {
            return Err(invalid("max_iterations", "must be at least 1"));
        }
        let st = &self.step;
        if !(st.initial > 0.0 && st.shrink > 0.0 && st.shrink < 1.0 && st.min_step > 0.0) {
            return Err(invalid("step", "need initial > 0, 0 < shrink < 1, min_step > 0"));
        }
        if !(st.sufficient_decrease > 0.0 && st.sufficient_decrease < 1.0) {
            return Err(invalid("step.sufficient_decrease", "must lie in (0, 1)"));
        }
        if !self.shift.is_finite() {
            return Err(invalid("shift", "must be finite"));
        }
        Ok(())
    }
}

/// Smallest eigenpairs of the operator on a sector.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Unit discrete-L² eigenfields, sign normalized.
    pub eigenfields: Vec<Field>,
    /// ‖Lu − λu‖₂ / (λ‖u‖₂) per eigenpair.
    pub residuals: Vec<f64>,
    /// Outer inverse-iteration steps per eigenpair.
    pub iterations: Vec<usize>,
    pub converged: bool,
}

/// Constrained minimizer of energy(u,u) over ‖u‖_p = 1.
#[derive(Clone, Debug)]
pub struct MinimizerResult {
    pub p: f64,
    /// λ = energy(u, u) at the minimizer.
    pub value: f64,
    pub field: Field,
    /// ‖Lu − λ|u|^{p−2}u‖₂ / (λ‖|u|^{p−1}‖₂) on the domain.
    pub residual: f64,
    pub iterations: usize,
    /// Energy after the initial normalization and after every accepted step.
    pub energy_history: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct LinearSolveResult {
    pub field: Field,
    /// ‖b − Lu‖₂ / ‖b‖₂ on the domain.
    pub residual: f64,
    pub iterations: usize,
}

/// Flips the sign so that the cell of largest |u| (ties: greatest last
/// coordinate, then greatest index) is positive.
pub fn sign_normalize(values: &mut [f64], grid: &crate::geometry::GridSpec) {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return;
    }
    let last = grid.dim() - 1;
    let mut best: Option<(f64, usize)> = None;
    for (i, v) in values.iter().enumerate() {
        if v.abs() >= (1.0 - 1e-12) * max {
            let xn = grid.coord(i, last);
            if best.map_or(true, |(bx, _)| xn >= bx) {
                best = Some((xn, i));
            }
        }
    }
    if let Some((_, i)) = best {
        if values[i] < 0.0 {
            values.iter_mut().for_each(|v| *v = -*v);
        }
    }
}
