//! Alternating phase/power optimization.

use super::{
    a_coeffs, objective_log, phase_ascent, power_opt_from, MuState, PhaseAscentOptions,
    PowerAllocation, PowerOptions,
};
use crate::channel::{EffectiveChannel, RisConfig};
use crate::error::{Error, Result};
use crate::report::{relative_change, InnerStep, OptimizationReport, StepKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepOrder {
    #[default]
    PhasesFirst,
    PowersFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOptions {
    /// Relative change of the outer objective (floor 1) that ends the run.
    pub tol: f64,
    pub max_outer: usize,
    pub order: StepOrder,
    /// Starting phases; zeros when `None`.
    pub init_ris: Option<RisConfig>,
    /// Starting powers; uniform split when `None`.
    pub init_power: Option<PowerAllocation>,
    pub phase: PhaseAscentOptions,
    pub power: PowerOptions,
}

impl Default for JointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_outer: 50,
            order: StepOrder::PhasesFirst,
            init_ris: None,
            init_power: None,
            phase: PhaseAscentOptions::default(),
            power: PowerOptions::default(),
        }
    }
}

/// Alternates [`phase_ascent`] and the power subproblem until the objective
/// stalls.
///
/// The outer trajectory starts at the initial objective and gets one entry
/// per outer iteration. A power step is kept only if it does not lower the
/// objective, so the trajectory is nondecreasing even when the power solver
/// stops short of its tolerance.
pub fn joint_optimize(
    eff: &EffectiveChannel,
    rho: f64,
    sigma2: f64,
    p_max: f64,
    opts: &JointOptions,
) -> Result<(MuState, OptimizationReport)> {
    let n_users = eff.n_users();
    let mut ris = match &opts.init_ris {
        Some(r) if r.len() != eff.n_ris() => {
            return Err(Error::DimensionMismatch("initial RIS size does not match channel".into()))
        }
        Some(r) => RisConfig::new(rho, r.phases().to_vec())?,
        None => RisConfig::zeros(rho, eff.n_ris())?,
    };
    let mut power = match &opts.init_power {
        Some(p) => {
            if p.total() > p_max * (1.0 + 1e-9) {
                return Err(Error::InvalidArgument("initial powers exceed the budget".into()));
            }
            p.clone()
        }
        None => PowerAllocation::uniform(n_users, p_max)?,
    };

    let mut value = objective_log(eff, &ris, &power, sigma2)?;
    let mut report = OptimizationReport::starting_at(value);
    let steps = match opts.order {
        StepOrder::PhasesFirst => [StepKind::Phases, StepKind::Powers],
        StepOrder::PowersFirst => [StepKind::Powers, StepKind::Phases],
    };

    for _ in 0..opts.max_outer {
        let start = value;
        for kind in steps {
            match kind {
                StepKind::Phases => {
                    let (next, inner) = phase_ascent(eff, &ris, &power, sigma2, &opts.phase)?;
                    let v = objective_log(eff, &next, &power, sigma2)?;
                    if v >= value {
                        ris = next;
                        value = v;
                    }
                    report.inner_reports.push(InnerStep { kind, report: inner });
                }
                StepKind::Powers => {
                    let a = a_coeffs(eff, &ris)?;
                    let (next, inner) = power_opt_from(&a, sigma2, p_max, &power, &opts.power)?;
                    let v = objective_log(eff, &ris, &next, sigma2)?;
                    if v >= value {
                        power = next;
                        value = v;
                    }
                    report.inner_reports.push(InnerStep { kind, report: inner });
                }
            }
        }
        report.trajectory.push(value);
        report.iterations += 1;
        if relative_change(value, start, 1.0) < opts.tol {
            report.converged = true;
            break;
        }
    }
    let state = MuState::new(eff, ris, power, sigma2)?;
    Ok((state, report))
}
