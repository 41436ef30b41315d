//! Multiuser downlink under channel-matched beamforming (CM-BF).
//!
//! With `c_k(φ) = ρ D_k e^{jφ} + g_k` the composite channel of user `k` and
//! `w_k = c_k / ‖c_k‖`, the SINR of user `k` is
//!
//! ```text
//!            η_k ‖c_k‖²
//! ─────────────────────────────────────
//!  Σ_{ℓ≠k} η_ℓ |c_k^H c_ℓ|² / ‖c_ℓ‖² + σ²
//! ```
//!
//! and the objective is the sum over users of `log2` SINR, i.e. `K` times
//! the `log2` of the geometric-mean SINR. Phases and powers are optimized
//! alternately: [`phase_ascent`] does gradient ascent on the phases and
//! [`power_opt`] solves the power subproblem, which is concave after the
//! substitution `η = 2^γ`.

mod joint;
mod phase;
mod power;

pub use joint::{joint_optimize, JointOptions, StepOrder};
pub use phase::{phase_ascent, PhaseAscentOptions};
pub use power::{
    kkt_residual, power_objective, power_opt, power_opt_from, uniform_scaling_improves,
    PowerOptions,
};

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use crate::channel::{reflection_vector, EffectiveChannel, RisConfig};
use crate::error::{Error, Result};
use crate::su_opt::Beamformer;
use crate::Complex64;

/// Downlink powers `η`, watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    eta: Vec<f64>,
}

impl PowerAllocation {
    /// Checks `η ≥ 0` and `Σ η ≤ p_max (1 + 1e-9)`.
    pub fn new(eta: Vec<f64>, p_max: f64) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::InvalidArgument("empty power vector".into()));
        }
        if eta.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("powers must be finite and >= 0".into()));
        }
        let total: f64 = eta.iter().sum();
        if total > p_max * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "total power {total} exceeds budget {p_max}"
            )));
        }
        Ok(Self { eta })
    }

    pub fn uniform(n_users: usize, p_max: f64) -> Result<Self> {
        if n_users == 0 || !(p_max > 0.0) {
            return Err(Error::InvalidArgument("need >= 1 user and p_max > 0".into()));
        }
        Ok(Self {
            eta: vec![p_max / n_users as f64; n_users],
        })
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn total(&self) -> f64 {
        self.eta.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }
}

/// Current RIS state and powers with the CM-BF beamformers they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct MuState {
    pub ris: RisConfig,
    pub power: PowerAllocation,
    pub beamformers: Vec<Beamformer>,
    /// Sum of `log2` SINRs.
    pub objective_log: f64,
}

impl MuState {
    pub fn new(
        eff: &EffectiveChannel,
        ris: RisConfig,
        power: PowerAllocation,
        sigma2: f64,
    ) -> Result<Self> {
        let beamformers = (0..eff.n_users())
            .map(|k| cm_beamformer(eff, k, &ris))
            .collect::<Result<Vec<_>>>()?;
        let objective_log = objective_log(eff, &ris, &power, sigma2)?;
        Ok(Self {
            ris,
            power,
            beamformers,
            objective_log,
        })
    }

    /// `2^{objective / K}`, the geometric mean of the user SINRs.
    pub fn geometric_mean_sinr(&self) -> f64 {
        (self.objective_log / self.beamformers.len() as f64).exp2()
    }
}

/// `w_k = c_k / ‖c_k‖`.
pub fn cm_beamformer(eff: &EffectiveChannel, k: usize, ris: &RisConfig) -> Result<Beamformer> {
    let c = eff.composite(k, ris)?;
    Beamformer::new(c).map_err(|_| Error::DegenerateUser(k))
}

/// `F_{k,ℓ} = η_ℓ c_k^H c_ℓ`.
pub fn f_coeff(
    eff: &EffectiveChannel,
    ris: &RisConfig,
    power: &PowerAllocation,
    k: usize,
    l: usize,
) -> Result<Complex64> {
    check_power(eff, power)?;
    let c_k = eff.composite(k, ris)?;
    let c_l = eff.composite(l, ris)?;
    Ok(c_k.dotc(&c_l) * power.eta[l])
}

/// Interference coefficients `a_{k,ℓ} = |c_k^H c_ℓ|² / ‖c_ℓ‖²`; the diagonal
/// is `‖c_k‖²`.
pub fn a_coeffs(eff: &EffectiveChannel, ris: &RisConfig) -> Result<DMatrix<f64>> {
    if ris.len() != eff.n_ris() {
        return Err(Error::DimensionMismatch("RIS size does not match channel".into()));
    }
    let comp = Composites::new(eff, ris.rho(), ris.phases());
    comp.check_nonzero()?;
    let k = eff.n_users();
    Ok(DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            comp.norm2[i]
        } else {
            comp.gram[(i, j)].norm_sqr() / comp.norm2[j]
        }
    }))
}

/// Sum over users of `log2` SINR.
///
/// A user with zero power makes the geometric mean zero; the result is then
/// `-inf` rather than an error.
pub fn objective_log(
    eff: &EffectiveChannel,
    ris: &RisConfig,
    power: &PowerAllocation,
    sigma2: f64,
) -> Result<f64> {
    check_common(eff, ris, power, sigma2)?;
    if power.eta.contains(&0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let comp = Composites::new(eff, ris.rho(), ris.phases());
    comp.check_nonzero()?;
    Ok(comp.objective(&power.eta, sigma2))
}

/// Per-user SINRs, linear scale.
pub fn user_sinrs(
    eff: &EffectiveChannel,
    ris: &RisConfig,
    power: &PowerAllocation,
    sigma2: f64,
) -> Result<Vec<f64>> {
    check_common(eff, ris, power, sigma2)?;
    let comp = Composites::new(eff, ris.rho(), ris.phases());
    comp.check_nonzero()?;
    Ok((0..eff.n_users())
        .map(|k| power.eta[k] * comp.norm2[k] / comp.interference(k, &power.eta, sigma2))
        .collect())
}

/// Analytic gradient of [`objective_log`] with respect to the phases.
pub fn grad_phi(
    eff: &EffectiveChannel,
    ris: &RisConfig,
    power: &PowerAllocation,
    sigma2: f64,
) -> Result<DVector<f64>> {
    check_common(eff, ris, power, sigma2)?;
    if let Some(k) = power.eta.iter().position(|&e| e == 0.0) {
        return Err(Error::ZeroPower(k));
    }
    let comp = Composites::new(eff, ris.rho(), ris.phases());
    comp.check_nonzero()?;
    Ok(comp.gradient(eff, ris.rho(), ris.phases(), &power.eta, sigma2))
}

fn check_power(eff: &EffectiveChannel, power: &PowerAllocation) -> Result<()> {
    if power.len() != eff.n_users() {
        return Err(Error::DimensionMismatch(format!(
            "{} powers for {} users",
            power.len(),
            eff.n_users()
        )));
    }
    Ok(())
}

fn check_common(
    eff: &EffectiveChannel,
    ris: &RisConfig,
    power: &PowerAllocation,
    sigma2: f64,
) -> Result<()> {
    check_power(eff, power)?;
    if ris.len() != eff.n_ris() {
        return Err(Error::DimensionMismatch("RIS size does not match channel".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidArgument("sigma^2 must be positive".into()));
    }
    Ok(())
}

/// Composite channels at one phase vector, with their Gram matrix.
pub(crate) struct Composites {
    /// `N_B × K`, column `k` is `c_k`.
    pub(crate) c: DMatrix<Complex64>,
    /// `gram[(k, ℓ)] = c_k^H c_ℓ`.
    pub(crate) gram: DMatrix<Complex64>,
    pub(crate) norm2: Vec<f64>,
}

impl Composites {
    pub(crate) fn new(eff: &EffectiveChannel, rho: f64, phases: &[f64]) -> Self {
        let phi = reflection_vector(rho, phases);
        let n_users = eff.n_users();
        let mut c = DMatrix::zeros(eff.n_bs(), n_users);
        for (k, (d, g)) in eff.reflected_all().iter().zip(eff.direct_all()).enumerate() {
            c.set_column(k, &(d * &phi + g));
        }
        let gram = c.ad_mul(&c);
        let norm2 = (0..n_users).map(|k| gram[(k, k)].re).collect();
        Self { c, gram, norm2 }
    }

    pub(crate) fn check_nonzero(&self) -> Result<()> {
        match self.norm2.iter().position(|&n| !(n > 0.0)) {
            Some(k) => Err(Error::DegenerateUser(k)),
            None => Ok(()),
        }
    }

    /// `Σ_{ℓ≠k} η_ℓ |c_k^H c_ℓ|² / ‖c_ℓ‖² + σ²`.
    pub(crate) fn interference(&self, k: usize, eta: &[f64], sigma2: f64) -> f64 {
        let mut acc = sigma2;
        for (l, &e) in eta.iter().enumerate() {
            if l != k {
                acc += e * self.gram[(k, l)].norm_sqr() / self.norm2[l];
            }
        }
        acc
    }

    pub(crate) fn objective(&self, eta: &[f64], sigma2: f64) -> f64 {
        (0..eta.len())
            .map(|k| (eta[k] * self.norm2[k] / self.interference(k, eta, sigma2)).log2())
            .sum()
    }

    /// Gradient with respect to the phases.
    ///
    /// `∂c_ℓ/∂φ_n = jρ e^{jφ_n} d_{ℓ,n}`, so with `M_ℓ = D_ℓ diag(jρ e^{jφ})`
    /// the derivative of `X_{kℓ} = c_k^H c_ℓ` is
    /// `Q_k[n, ℓ] + conj(Q_ℓ[n, k])` where `Q_k = M_k^H C`. Everything else
    /// follows from the quotient rule on each user's SINR.
    pub(crate) fn gradient(
        &self,
        eff: &EffectiveChannel,
        rho: f64,
        phases: &[f64],
        eta: &[f64],
        sigma2: f64,
    ) -> DVector<f64> {
        let n_users = eta.len();
        let n_r = phases.len();
        let rot: Vec<Complex64> = phases
            .iter()
            .map(|&p| Complex64::new(0.0, 1.0) * Complex64::from_polar(rho, p))
            .collect();
        let q: Vec<DMatrix<Complex64>> = eff
            .reflected_all()
            .iter()
            .map(|d| DMatrix::from_fn(d.nrows(), n_r, |i, j| d[(i, j)] * rot[j]).ad_mul(&self.c))
            .collect();

        // dS_ℓ(n) = 2 Re Q_ℓ[n, ℓ]
        let d_norm2: Vec<Vec<f64>> = (0..n_users)
            .map(|l| (0..n_r).map(|n| 2.0 * q[l][(n, l)].re).collect())
            .collect();

        let mut grad = DVector::zeros(n_r);
        for k in 0..n_users {
            let interference = self.interference(k, eta, sigma2);
            for n in 0..n_r {
                let mut d_interference = 0.0;
                for l in (0..n_users).filter(|&l| l != k) {
                    let x = self.gram[(k, l)];
                    let dx = q[k][(n, l)] + q[l][(n, k)].conj();
                    let d_abs2 = 2.0 * (x.conj() * dx).re;
                    d_interference += eta[l]
                        * (d_abs2 / self.norm2[l]
                            - x.norm_sqr() * d_norm2[l][n] / (self.norm2[l] * self.norm2[l]));
                }
                grad[n] += d_norm2[k][n] / self.norm2[k] - d_interference / interference;
            }
        }
        grad / LN_2
    }
}
