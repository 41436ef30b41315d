//! Gradient ascent on the RIS phases with Armijo backtracking.

use nalgebra::DVector;

use super::{check_common, Composites, PowerAllocation};
use crate::channel::{EffectiveChannel, RisConfig};
use crate::error::{Error, Result};
use crate::report::{relative_change, OptimizationReport};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAscentOptions {
    pub initial_step: f64,
    pub shrink: f64,
    /// Armijo sufficient-increase constant.
    pub sufficient_increase: f64,
    pub max_backtracks: usize,
    pub max_iter: usize,
    /// Stop when the objective changes by less than this, relative to
    /// `max(|objective|, 1)`.
    pub tol: f64,
}

impl Default for PhaseAscentOptions {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_increase: 1e-4,
            max_backtracks: 40,
            max_iter: 200,
            tol: 1e-7,
        }
    }
}

impl PhaseAscentOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.initial_step > 0.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.sufficient_increase > 0.0
            && self.sufficient_increase < 1.0
            && self.max_iter >= 1
            && self.tol >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid phase ascent options {self:?}")))
        }
    }
}

/// Maximizes the sum of `log2` SINRs over the phases for fixed powers.
///
/// Phases are iterated unwrapped (the objective is `2π`-periodic in each
/// one) and wrapped into `[-π, π]` in the returned [`RisConfig`]. A line
/// search that exhausts its backtracks ends the run with
/// `converged = false` at the last accepted point.
pub fn phase_ascent(
    eff: &EffectiveChannel,
    init: &RisConfig,
    power: &PowerAllocation,
    sigma2: f64,
    opts: &PhaseAscentOptions,
) -> Result<(RisConfig, OptimizationReport)> {
    opts.validate()?;
    check_common(eff, init, power, sigma2)?;
    let eta = power.eta();
    if let Some(k) = eta.iter().position(|&e| e == 0.0) {
        return Err(Error::ZeroPower(k));
    }
    let rho = init.rho();
    let mut phases = DVector::from_column_slice(init.phases());

    let comp = Composites::new(eff, rho, phases.as_slice());
    comp.check_nonzero()?;
    let mut value = comp.objective(eta, sigma2);
    let mut grad = comp.gradient(eff, rho, phases.as_slice(), eta, sigma2);
    let mut report = OptimizationReport::starting_at(value);

    for _ in 0..opts.max_iter {
        let slope = grad.norm_squared();
        if slope == 0.0 {
            report.converged = true;
            break;
        }
        let mut step = opts.initial_step;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = &phases + &grad * step;
            let trial_comp = Composites::new(eff, rho, trial.as_slice());
            // A composite channel can only vanish on a measure-zero set; treat
            // it like a failed trial and keep shrinking.
            if trial_comp.check_nonzero().is_ok() {
                let v = trial_comp.objective(eta, sigma2);
                if v >= value + opts.sufficient_increase * step * slope {
                    accepted = Some((trial, trial_comp, v));
                    break;
                }
            }
            step *= opts.shrink;
        }
        let Some((trial, trial_comp, v)) = accepted else {
            report.converged = false;
            break;
        };
        let change = relative_change(v, value, 1.0);
        grad = trial_comp.gradient(eff, rho, trial.as_slice(), eta, sigma2);
        phases = trial;
        value = v;
        report.trajectory.push(value);
        report.iterations += 1;
        if change < opts.tol {
            report.converged = true;
            break;
        }
    }
    Ok((RisConfig::new(rho, phases.as_slice().to_vec())?, report))
}
