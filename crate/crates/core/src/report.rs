//! Convergence bookkeeping shared by every iterative solver.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StepKind {
    Phases,
    Powers,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerStep {
    pub kind: StepKind,
    pub report: OptimizationReport,
}

/// Objective trajectory of an iterative solver.
///
/// `trajectory[0]` is the objective at the starting point; one entry is
/// appended per accepted step.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OptimizationReport {
    pub trajectory: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub inner_reports: Vec<InnerStep>,
}

impl OptimizationReport {
    pub fn starting_at(value: f64) -> Self {
        Self {
            trajectory: vec![value],
            ..Self::default()
        }
    }

    pub fn final_value(&self) -> Option<f64> {
        self.trajectory.last().copied()
    }

    /// Number of consecutive pairs where the objective dropped by more than
    /// `rel_tol` relative to the earlier value.
    pub fn decrease_count(&self, rel_tol: f64) -> usize {
        self.trajectory
            .windows(2)
            .filter(|w| w[1] < w[0] - rel_tol * w[0].abs())
            .count()
    }

    pub fn is_nondecreasing(&self, rel_tol: f64) -> bool {
        self.decrease_count(rel_tol) == 0
    }
}

/// `|new - old| / max(|old|, floor)`.
pub(crate) fn relative_change(new: f64, old: f64, floor: f64) -> f64 {
    (new - old).abs() / old.abs().max(floor)
}
