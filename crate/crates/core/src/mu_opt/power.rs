//! Power allocation for fixed phases.
//!
//! In `γ = log2 η` the objective
//! `Σ_k γ_k + log2 a_kk - log2(Σ_{ℓ≠k} 2^{γ_ℓ} a_kℓ + σ²)` is concave (a
//! linear term minus log-sum-exp terms) and the budget `Σ 2^{γ_ℓ} ≤ P` is a
//! convex constraint. Scaling every power up by a common factor raises every
//! SINR when `σ² > 0`, so the budget is active at the optimum and the
//! solver walks on the surface `Σ 2^{γ_ℓ} = P`: projected-gradient steps in
//! the tangent space, then a uniform shift `γ ← γ - t` back onto the surface.

use nalgebra::{DMatrix, DVector};

use super::PowerAllocation;
use crate::error::{Error, Result};
use crate::report::OptimizationReport;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerOptions {
    pub max_iter: usize,
    /// Target norm of the tangent-space gradient.
    pub kkt_tol: f64,
    pub sufficient_increase: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            kkt_tol: 1e-9,
            sufficient_increase: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }
}

/// Residual above which a run is reported as not converged.
const KKT_ACCEPT: f64 = 1e-6;

fn check_inputs(a: &DMatrix<f64>, sigma2: f64, p_max: f64) -> Result<()> {
    if !(p_max > 0.0 && p_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("p_max must be positive, got {p_max}")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma^2 must be positive, got {sigma2}")));
    }
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "coefficient matrix must be square and non-empty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::InvalidArgument("coefficients must be finite and >= 0".into()));
    }
    if let Some(k) = (0..a.nrows()).find(|&k| !(a[(k, k)] > 0.0)) {
        return Err(Error::DegenerateUser(k));
    }
    Ok(())
}

fn interference(a: &DMatrix<f64>, sigma2: f64, eta: &[f64], k: usize) -> f64 {
    let mut acc = sigma2;
    for (l, &e) in eta.iter().enumerate() {
        if l != k {
            acc += e * a[(k, l)];
        }
    }
    acc
}

/// `Σ_k log2(η_k a_kk / (Σ_{ℓ≠k} η_ℓ a_kℓ + σ²))`.
pub fn power_objective(a: &DMatrix<f64>, sigma2: f64, eta: &[f64]) -> f64 {
    (0..eta.len())
        .map(|k| (eta[k] * a[(k, k)] / interference(a, sigma2, eta, k)).log2())
        .sum()
}

/// Gradient with respect to `γ = log2 η`.
fn gamma_gradient(a: &DMatrix<f64>, sigma2: f64, eta: &[f64]) -> DVector<f64> {
    let n = eta.len();
    let inv_interf: Vec<f64> = (0..n).map(|k| 1.0 / interference(a, sigma2, eta, k)).collect();
    DVector::from_fn(n, |m, _| {
        let pressure: f64 = (0..n)
            .filter(|&k| k != m)
            .map(|k| a[(k, m)] * inv_interf[k])
            .sum();
        1.0 - eta[m] * pressure
    })
}

/// Removes the component along the budget normal (`∝ η` in γ-space).
fn tangent_projection(grad: &DVector<f64>, eta: &[f64]) -> DVector<f64> {
    let normal = DVector::from_column_slice(eta);
    let coef = grad.dot(&normal) / normal.norm_squared();
    grad - normal * coef
}

/// Norm of the projected gradient at a point on the budget surface.
pub fn kkt_residual(a: &DMatrix<f64>, sigma2: f64, eta: &[f64]) -> f64 {
    tangent_projection(&gamma_gradient(a, sigma2, eta), eta).norm()
}

/// `true` when multiplying every power by `factor` raises the objective.
pub fn uniform_scaling_improves(a: &DMatrix<f64>, sigma2: f64, eta: &[f64], factor: f64) -> bool {
    let scaled: Vec<f64> = eta.iter().map(|e| e * factor).collect();
    power_objective(a, sigma2, &scaled) > power_objective(a, sigma2, eta)
}

/// Uniform shift onto `Σ 2^{γ} = P`.
fn restore_budget(gamma: &mut DVector<f64>, p_max: f64) {
    let total: f64 = gamma.iter().map(|g| g.exp2()).sum();
    let shift = (total / p_max).log2();
    gamma.add_scalar_mut(-shift);
}

fn powers(gamma: &DVector<f64>) -> Vec<f64> {
    gamma.iter().map(|g| g.exp2()).collect()
}

/// Optimal powers for the coefficient matrix `a`, starting from a uniform
/// split.
pub fn power_opt(
    a: &DMatrix<f64>,
    sigma2: f64,
    p_max: f64,
    opts: &PowerOptions,
) -> Result<(PowerAllocation, OptimizationReport)> {
    check_inputs(a, sigma2, p_max)?;
    let start = vec![p_max / a.nrows() as f64; a.nrows()];
    solve(a, sigma2, p_max, &start, opts)
}

/// Like [`power_opt`] but warm-started from `init` (rescaled onto the
/// budget). Entries must be strictly positive.
pub fn power_opt_from(
    a: &DMatrix<f64>,
    sigma2: f64,
    p_max: f64,
    init: &PowerAllocation,
    opts: &PowerOptions,
) -> Result<(PowerAllocation, OptimizationReport)> {
    check_inputs(a, sigma2, p_max)?;
    if init.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} initial powers for {} users",
            init.len(),
            a.nrows()
        )));
    }
    if let Some(k) = init.eta().iter().position(|&e| !(e > 0.0)) {
        return Err(Error::ZeroPower(k));
    }
    solve(a, sigma2, p_max, init.eta(), opts)
}

fn solve(
    a: &DMatrix<f64>,
    sigma2: f64,
    p_max: f64,
    start: &[f64],
    opts: &PowerOptions,
) -> Result<(PowerAllocation, OptimizationReport)> {
    let mut gamma = DVector::from_iterator(start.len(), start.iter().map(|e| e.log2()));
    restore_budget(&mut gamma, p_max);
    let mut eta = powers(&gamma);
    let mut value = power_objective(a, sigma2, &eta);
    let mut dir = tangent_projection(&gamma_gradient(a, sigma2, &eta), &eta);
    let mut report = OptimizationReport::starting_at(value);
    let mut step = 1.0;

    for _ in 0..opts.max_iter {
        let slope = dir.norm_squared();
        if slope.sqrt() < opts.kkt_tol {
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut trial = &gamma + &dir * t;
            restore_budget(&mut trial, p_max);
            let trial_eta = powers(&trial);
            let v = power_objective(a, sigma2, &trial_eta);
            let demanded = opts.sufficient_increase * t * slope;
            // Near the optimum the demanded increase falls below the rounding
            // level of the objective; plain non-decrease is accepted there.
            let below_rounding = demanded <= 8.0 * f64::EPSILON * value.abs().max(1.0);
            if v >= value + demanded || (below_rounding && v >= value) {
                accepted = Some((trial, trial_eta, v, t));
                break;
            }
            t *= opts.shrink;
        }
        let Some((trial, trial_eta, v, t)) = accepted else {
            break;
        };
        let new_dir = tangent_projection(&gamma_gradient(a, sigma2, &trial_eta), &trial_eta);

        // Barzilai-Borwein length for the next trial step (ascent: the
        // gradient difference has negative inner product with the move).
        let s = &trial - &gamma;
        let y = &new_dir - &dir;
        let curvature = -s.dot(&y);
        step = if curvature > 0.0 {
            (s.norm_squared() / curvature).clamp(1e-8, 1e8)
        } else {
            (t * 2.0).min(1e8)
        };

        gamma = trial;
        eta = trial_eta;
        value = v;
        dir = new_dir;
        report.trajectory.push(value);
        report.iterations += 1;
    }
    report.converged = dir.norm() < KKT_ACCEPT;
    debug_assert!(uniform_scaling_improves(a, sigma2, &eta, 1.01));
    let alloc = PowerAllocation::new(eta, p_max)?;
    Ok((alloc, report))
}
