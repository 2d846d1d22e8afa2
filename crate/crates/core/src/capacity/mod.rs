//! Discrete capacity estimators: a cutting-plane linear program for the
//! positive-measure capacity, and simplex-constrained energy maximization
//! for the Wolff and symmetrized energies.

mod energy;
mod experiment;
mod lp;
mod simplex;

pub use energy::{
    gamma_plus_energy, gamma_plus_energy_with, regularization_radii, riesz_capacity_wolff,
    riesz_capacity_wolff_with, Objective, OptimizerConfig, SymObjective, WolffObjective,
};
pub use experiment::{
    comparability_experiment, comparability_experiment_with, write_csv, ExperimentConfig,
    ExperimentRow, RowDiagnostics, CSV_HEADER,
};
pub use lp::{gamma_plus_lp, gamma_plus_lp_on_grid, gamma_plus_lp_with, LPConfig};
pub use simplex::{LpOutcome, Simplex};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lp,
    WolffEnergy,
    SymEnergy,
}

/// Termination state of an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    /// LP solved and every grid constraint verified.
    Optimal,
    /// Energy optimizer reached the relative-change threshold.
    Converged,
    /// Step, pivot or round budget exhausted before convergence.
    IterationLimit,
    /// Support on which the objective is identically zero or infinite.
    Degenerate,
    NumericalFailure,
}

impl SolverStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolverStatus::Optimal | SolverStatus::Converged)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::Converged => "converged",
            SolverStatus::IterationLimit => "iteration_limit",
            SolverStatus::Degenerate => "degenerate",
            SolverStatus::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// cutting-plane rounds (LP) or accepted optimizer steps summed over starts
    pub iterations: u64,
    /// simplex pivots (LP only)
    pub pivots: u64,
    /// working-set rows at termination (LP) or 0
    pub constraints: u64,
    /// grid points after the separation filter (LP) or 0
    pub grid_points: u64,
    /// max over the whole grid of `|potential| - 1`, clamped at 0
    pub max_violation: f64,
    /// relative primal/dual gap of the final working-set LP
    pub duality_gap: Option<f64>,
    /// best objective (energy) value, for the energy methods
    pub energy: Option<f64>,
    /// objective value reached by each start, in start order
    pub start_values: Vec<f64>,
    pub status: SolverStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Diagnostics {
    pub(crate) fn new(status: SolverStatus) -> Self {
        Self {
            iterations: 0,
            pivots: 0,
            constraints: 0,
            grid_points: 0,
            max_violation: 0.0,
            duality_gap: None,
            energy: None,
            start_values: Vec::new(),
            status,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    pub method: Method,
    pub diagnostics: Diagnostics,
    /// optimizing masses, aligned with the support points
    pub masses: Vec<f64>,
}

impl CapacityEstimate {
    pub fn status(&self) -> SolverStatus {
        self.diagnostics.status
    }
}
