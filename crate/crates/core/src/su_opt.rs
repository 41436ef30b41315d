//! Single-user joint active/passive beamforming.
//!
//! All three maximizers target the beamforming gain
//! `|w^H (D φ + h_d)|²` over unit-norm `w` and `|φ_i| = ρ`; the SNR is that
//! gain scaled by `P_T / σ²`.
//!
//! - [`ub_max`] maximizes an upper bound obtained from the SVD of `D`, which
//!   decouples into one closed-form problem per left singular vector.
//! - [`lb_max`] maximizes a lower bound whose maximizer is the normalized sum
//!   of the columns of `D` plus `h_d`, followed by exact phase alignment.
//! - [`alternating_max`] alternates the two exact coordinate maximizers
//!   (matched filter for `w`, phase alignment for `φ`).

use nalgebra::{DMatrix, DVector};

use crate::channel::RisConfig;
use crate::error::{Error, Result};
use crate::report::{relative_change, OptimizationReport};
use crate::{angle, Complex64};

/// Unit-norm transmit beamformer.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer(DVector<Complex64>);

impl Beamformer {
    /// Normalizes `v`; fails on the zero vector.
    pub fn new(v: DVector<Complex64>) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument("beamformer direction must be nonzero".into()));
        }
        Ok(Self(v / Complex64::from(n)))
    }

    /// Canonical basis vector `e_0`, used when every direction is equally good.
    pub fn first_axis(n: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[0] = Complex64::new(1.0, 0.0);
        Self(v)
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuSolution {
    pub beamformer: Beamformer,
    pub ris: RisConfig,
    /// Achieved `|w^H (D φ + h_d)|²`.
    pub gain: f64,
    /// UB: `N_B c_{i+}`, a true upper bound on the gain of any `(w, φ)`.
    /// LB: `ρ² ‖Σ_i d_i + h_d‖²`, a lower bound on the achieved gain.
    pub bound_value: Option<f64>,
    /// Only set by [`alternating_max`].
    pub report: Option<OptimizationReport>,
}

impl SuSolution {
    pub fn snr(&self, p_t: f64, sigma2: f64) -> f64 {
        self.gain * p_t / sigma2
    }
}

fn check_shapes(d: &DMatrix<Complex64>, h_d: &DVector<Complex64>) -> Result<()> {
    if d.nrows() != h_d.len() || d.nrows() == 0 || d.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "D is {}x{}, h_d has {} entries",
            d.nrows(),
            d.ncols(),
            h_d.len()
        )));
    }
    Ok(())
}

/// `|w^H (D φ + h_d)|²`.
pub fn gain(
    d: &DMatrix<Complex64>,
    h_d: &DVector<Complex64>,
    ris: &RisConfig,
    w: &Beamformer,
) -> Result<f64> {
    check_shapes(d, h_d)?;
    if ris.len() != d.ncols() || w.len() != d.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "D is {}x{}, RIS has {} phases, w has {} entries",
            d.nrows(),
            d.ncols(),
            ris.len(),
            w.len()
        )));
    }
    let c = d * ris.reflection_vector() + h_d;
    Ok(w.as_vector().dotc(&c).norm_sqr())
}

/// Single-user SNR `(P_T / σ²) |w^H (D φ + h_d)|²`, linear scale.
pub fn eval_snr(
    d: &DMatrix<Complex64>,
    h_d: &DVector<Complex64>,
    ris: &RisConfig,
    w: &Beamformer,
    p_t: f64,
    sigma2: f64,
) -> Result<f64> {
    if !(p_t > 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidArgument("P_T and sigma^2 must be positive".into()));
    }
    Ok(gain(d, h_d, ris, w)? * p_t / sigma2)
}

/// Matched filter for a fixed RIS state; falls back to `e_0` when the
/// composite channel is zero (every `w` then gives zero gain).
pub fn matched_beamformer(
    d: &DMatrix<Complex64>,
    h_d: &DVector<Complex64>,
    ris: &RisConfig,
) -> Result<Beamformer> {
    check_shapes(d, h_d)?;
    if ris.len() != d.ncols() {
        return Err(Error::DimensionMismatch("RIS size does not match D".into()));
    }
    let c = d * ris.reflection_vector() + h_d;
    Ok(Beamformer::new(c).unwrap_or_else(|_| Beamformer::first_axis(d.nrows())))
}

/// Phases maximizing `|g^H φ + t|` for fixed `w`: every term of `g^H φ` is
/// co-phased with `t`, i.e. `φ_i = -∠g_i* + ∠t`.
fn aligned_phases(g: &DVector<Complex64>, t: Complex64) -> Vec<f64> {
    let target = angle(t);
    g.iter().map(|gi| -angle(gi.conj()) + target).collect()
}

/// Closed-form maximization of the SVD-based upper bound.
pub fn ub_max(d: &DMatrix<Complex64>, h_d: &DVector<Complex64>, rho: f64) -> Result<SuSolution> {
    check_shapes(d, h_d)?;
    let (n_b, n_r) = d.shape();

    // Zero-padding to at least N_B columns makes the thin SVD return a full
    // N_B x N_B left factor; the extra directions carry λ = 0.
    let cols = n_r.max(n_b);
    let mut padded = DMatrix::zeros(n_b, cols);
    padded.columns_mut(0, n_r).copy_from(d);
    let svd = padded.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let lambda = svd.singular_values;

    // descending λ; stable sort keeps the solver order for ties
    let mut order: Vec<usize> = (0..n_b).collect();
    order.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]));

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for &i in &order {
        let u_i = u.column(i);
        // v_t row i is v_i^H, so conj(v_i(n)) = v_t[(i, n)]
        let v_conj: Vec<Complex64> = (0..n_r).map(|n| v_t[(i, n)]).collect();
        let alpha = u_i.dotc(h_d);
        let target = angle(alpha);
        let phases: Vec<f64> = v_conj.iter().map(|vc| -angle(*vc) + target).collect();
        let coherent: f64 = v_conj.iter().map(|vc| vc.norm()).sum();
        let c_i = (lambda[i] * rho * coherent + alpha.norm()).powi(2);
        if best.as_ref().is_none_or(|(c, _, _)| c_i > *c) {
            best = Some((c_i, i, phases));
        }
    }
    let (c_plus, i_plus, phases) = best.expect("N_B >= 1");
    let ris = RisConfig::new(rho, phases)?;
    let beamformer = Beamformer::new(u.column(i_plus).into_owned())?;
    let achieved = gain(d, h_d, &ris, &beamformer)?;
    Ok(SuSolution {
        beamformer,
        ris,
        gain: achieved,
        bound_value: Some(n_b as f64 * c_plus),
        report: None,
    })
}

/// Closed-form maximization of the column-sum lower bound.
pub fn lb_max(d: &DMatrix<Complex64>, h_d: &DVector<Complex64>, rho: f64) -> Result<SuSolution> {
    check_shapes(d, h_d)?;
    let sum = d.column_sum() + h_d;
    let sum_norm = sum.norm();
    let beamformer = Beamformer::new(sum).map_err(|_| {
        Error::DegenerateChannel("sum of the columns of D plus h_d is zero".into())
    })?;
    let w = beamformer.as_vector();
    let g = d.ad_mul(w);
    let t = w.dotc(h_d);
    let ris = RisConfig::new(rho, aligned_phases(&g, t))?;
    let achieved = gain(d, h_d, &ris, &beamformer)?;
    Ok(SuSolution {
        beamformer,
        ris,
        gain: achieved,
        bound_value: Some(rho * rho * sum_norm * sum_norm),
        report: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum AmInit {
    /// All phases zero.
    Zero,
    /// Start from the [`lb_max`] phases.
    LowerBound,
    Phases(RisConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmOptions {
    pub init: AmInit,
    /// Relative change of the gain over one full iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AmOptions {
    fn default() -> Self {
        Self {
            init: AmInit::Zero,
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

/// Alternating maximization over `w` and `φ`.
///
/// The trajectory holds the gain after every half-step (first entry: after
/// the first matched-filter step) and is nondecreasing because both steps
/// are exact maximizers.
pub fn alternating_max(
    d: &DMatrix<Complex64>,
    h_d: &DVector<Complex64>,
    rho: f64,
    opts: &AmOptions,
) -> Result<SuSolution> {
    check_shapes(d, h_d)?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("AM needs tol > 0 and max_iter >= 1".into()));
    }
    let mut ris = match &opts.init {
        AmInit::Zero => RisConfig::zeros(rho, d.ncols())?,
        AmInit::LowerBound => lb_max(d, h_d, rho)?.ris,
        AmInit::Phases(r) => {
            if r.len() != d.ncols() {
                return Err(Error::DimensionMismatch("initial RIS size does not match D".into()));
            }
            RisConfig::new(rho, r.phases().to_vec())?
        }
    };

    let mut w = matched_beamformer(d, h_d, &ris)?;
    let mut value = gain(d, h_d, &ris, &w)?;
    let mut report = OptimizationReport::starting_at(value);
    for _ in 0..opts.max_iter {
        let start = value;

        let g = d.ad_mul(w.as_vector());
        let t = w.as_vector().dotc(h_d);
        let candidate = RisConfig::new(rho, aligned_phases(&g, t))?;
        let v = gain(d, h_d, &candidate, &w)?;
        if v >= value {
            ris = candidate;
            value = v;
        }
        report.trajectory.push(value);

        let candidate = matched_beamformer(d, h_d, &ris)?;
        let v = gain(d, h_d, &ris, &candidate)?;
        if v >= value {
            w = candidate;
            value = v;
        }
        report.trajectory.push(value);
        report.iterations += 1;

        if relative_change(value, start, f64::MIN_POSITIVE) < opts.tol {
            report.converged = true;
            break;
        }
    }
    Ok(SuSolution {
        beamformer: w,
        ris,
        gain: value,
        bound_value: None,
        report: Some(report),
    })
}
