//! Paired Monte Carlo experiments.
//!
//! Every trial draws user positions, one channel realization and one random
//! phase vector from a generator seeded by `(seed, trial)`, then runs all
//! methods on that same draw. Trials are independent, so they run in
//! parallel on the ambient rayon pool and are merged by trial index; the
//! output does not depend on the number of workers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{build_effective, sample_realization, RisConfig};
use crate::error::{Error, Result};
use crate::mu_opt::{
    a_coeffs, joint_optimize, objective_log, phase_ascent, power_opt, JointOptions,
    PhaseAscentOptions, PowerAllocation, PowerOptions,
};
use crate::scenario::{sample_user_positions, ScenarioConfig};
use crate::su_opt::{self, AmInit, AmOptions};
use crate::to_db;

pub const DEFAULT_SU_TRIALS: usize = 1000;
pub const DEFAULT_MU_TRIALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Method {
    NoOpt,
    UbMax,
    LbMax,
    Am,
    OnlyRis,
    OnlyPowers,
    Joint,
}

impl Method {
    pub const SINGLE_USER: [Method; 4] = [Method::NoOpt, Method::UbMax, Method::LbMax, Method::Am];
    pub const MULTI_USER: [Method; 4] = [
        Method::NoOpt,
        Method::OnlyRis,
        Method::OnlyPowers,
        Method::Joint,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::NoOpt => "NoOpt",
            Method::UbMax => "UbMax",
            Method::LbMax => "LbMax",
            Method::Am => "Am",
            Method::OnlyRis => "OnlyRis",
            Method::OnlyPowers => "OnlyPowers",
            Method::Joint => "Joint",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Method::NoOpt,
            Method::UbMax,
            Method::LbMax,
            Method::Am,
            Method::OnlyRis,
            Method::OnlyPowers,
            Method::Joint,
        ]
        .into_iter()
        .find(|m| m.label() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: usize,
    pub method: Method,
    /// SNR (single user) or geometric-mean SINR (multiuser), dB.
    pub metric_db: f64,
    /// Seconds spent in this method; not part of any deterministic output.
    pub wall_time: f64,
}

/// Sorted sample with the empirical CDF `P(X ≤ sorted_values[i]) = (i+1)/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfSeries {
    sorted_values: Vec<f64>,
}

impl CdfSeries {
    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (1..=self.len()).map(|i| i as f64 / n).collect()
    }

    /// Smallest sample whose empirical CDF reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.len();
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.sorted_values[idx]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

pub fn cdf(samples: &[f64]) -> Result<CdfSeries> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN sample".into()));
    }
    let mut sorted_values = samples.to_vec();
    sorted_values.sort_by(f64::total_cmp);
    Ok(CdfSeries { sorted_values })
}

/// Per-trial results of one experiment, ordered by `(trial, method)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub methods: Vec<Method>,
    pub trials: Vec<TrialResult>,
}

impl ExperimentResult {
    /// Metric of `method` indexed by trial.
    pub fn metrics(&self, method: Method) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.method == method)
            .map(|t| t.metric_db)
            .collect()
    }

    pub fn cdfs(&self) -> BTreeMap<Method, CdfSeries> {
        self.methods
            .iter()
            .map(|&m| (m, cdf(&self.metrics(m)).expect("at least one trial")))
            .collect()
    }
}

/// Solver settings used by the experiments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOptions {
    pub am: AmOptions,
    pub phase: PhaseAscentOptions,
    pub power: PowerOptions,
    pub joint: JointOptions,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let t0 = Instant::now();
    let out = f()?;
    Ok((out, t0.elapsed().as_secs_f64()))
}

fn run_trials<F>(n_trials: usize, trial: F) -> Result<Vec<TrialResult>>
where
    F: Fn(usize) -> Result<Vec<TrialResult>> + Sync + Send,
{
    if n_trials == 0 {
        return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
    }
    let per_trial = (0..n_trials)
        .into_par_iter()
        .map(trial)
        .collect::<Result<Vec<_>>>()?;
    let out: Vec<TrialResult> = per_trial.into_iter().flatten().collect();
    if let Some(bad) = out.iter().find(|t| !t.metric_db.is_finite()) {
        return Err(Error::DegenerateChannel(format!(
            "trial {} produced a non-finite {} metric",
            bad.trial_index, bad.method
        )));
    }
    Ok(out)
}

/// Single-user experiment: NoOpt, UB Max, LB Max and AM per trial.
///
/// `n_users` is forced to 1 and the transmit power is the full budget.
/// NoOpt pairs a uniformly random phase vector with its matched filter; AM
/// starts from that same phase vector.
pub fn run_single_user(cfg: &ScenarioConfig, n_trials: usize, seed: u64) -> Result<ExperimentResult> {
    run_single_user_with(cfg, n_trials, seed, &ExperimentOptions::default())
}

pub fn run_single_user_with(
    cfg: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<ExperimentResult> {
    let cfg = ScenarioConfig {
        n_users: 1,
        blocked_direct: cfg.blocked_direct.iter().copied().filter(|&k| k == 0).collect(),
        blocked_reflected: cfg.blocked_reflected.iter().copied().filter(|&k| k == 0).collect(),
        ..cfg.clone()
    };
    cfg.validate()?;
    let rho = cfg.ris_loss_rho;
    let snr_scale = cfg.p_max_watts / cfg.noise_power();

    let trials = run_trials(n_trials, |t| {
        let mut rng = trial_rng(seed, t);
        let positions = sample_user_positions(&cfg, &mut rng);
        let real = sample_realization(&cfg, &positions, &mut rng)?;
        let eff = build_effective(&real);
        let random = RisConfig::random(rho, cfg.n_ris_elements, &mut rng)?;
        let (d, h_d) = eff.user(0)?;

        let (no_opt, t_no) = timed(|| {
            let w = su_opt::matched_beamformer(d, h_d, &random)?;
            su_opt::gain(d, h_d, &random, &w)
        })?;
        let (ub, t_ub) = timed(|| su_opt::ub_max(d, h_d, rho))?;
        let (lb, t_lb) = timed(|| su_opt::lb_max(d, h_d, rho))?;
        let am_opts = AmOptions {
            init: AmInit::Phases(random.clone()),
            ..opts.am.clone()
        };
        let (am, t_am) = timed(|| su_opt::alternating_max(d, h_d, rho, &am_opts))?;

        Ok([
            (Method::NoOpt, no_opt, t_no),
            (Method::UbMax, ub.gain, t_ub),
            (Method::LbMax, lb.gain, t_lb),
            (Method::Am, am.gain, t_am),
        ]
        .into_iter()
        .map(|(method, g, wall_time)| TrialResult {
            trial_index: t,
            method,
            metric_db: to_db(g * snr_scale),
            wall_time,
        })
        .collect())
    })?;
    Ok(ExperimentResult {
        methods: Method::SINGLE_USER.to_vec(),
        trials,
    })
}

/// Multiuser experiment: NoOpt, Only RIS, Only Powers and Joint per trial.
///
/// All four share the realization and one random phase draw. NoOpt and
/// Only RIS use the uniform power split; Only Powers keeps the random
/// phases; Joint starts from (random phases, uniform powers). The metric is
/// the geometric-mean SINR in dB.
pub fn run_multi_user(cfg: &ScenarioConfig, n_trials: usize, seed: u64) -> Result<ExperimentResult> {
    run_multi_user_with(cfg, n_trials, seed, &ExperimentOptions::default())
}

pub fn run_multi_user_with(
    cfg: &ScenarioConfig,
    n_trials: usize,
    seed: u64,
    opts: &ExperimentOptions,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let rho = cfg.ris_loss_rho;
    let sigma2 = cfg.noise_power();
    let p_max = cfg.p_max_watts;
    let n_users = cfg.n_users as f64;
    let to_metric = |objective: f64| to_db((objective / n_users).exp2());

    let trials = run_trials(n_trials, |t| {
        let mut rng = trial_rng(seed, t);
        let positions = sample_user_positions(cfg, &mut rng);
        let real = sample_realization(cfg, &positions, &mut rng)?;
        let eff = build_effective(&real);
        let random = RisConfig::random(rho, cfg.n_ris_elements, &mut rng)?;
        let uniform = PowerAllocation::uniform(cfg.n_users, p_max)?;

        let (no_opt, t_no) = timed(|| objective_log(&eff, &random, &uniform, sigma2))?;
        let (only_ris, t_ris) = timed(|| {
            let (ris, _) = phase_ascent(&eff, &random, &uniform, sigma2, &opts.phase)?;
            objective_log(&eff, &ris, &uniform, sigma2)
        })?;
        let (only_powers, t_pow) = timed(|| {
            let a = a_coeffs(&eff, &random)?;
            let (power, _) = power_opt(&a, sigma2, p_max, &opts.power)?;
            objective_log(&eff, &random, &power, sigma2)
        })?;
        let joint_opts = JointOptions {
            init_ris: Some(random.clone()),
            init_power: Some(uniform.clone()),
            phase: opts.phase.clone(),
            power: opts.power.clone(),
            ..opts.joint.clone()
        };
        let (joint, t_joint) = timed(|| {
            let (state, _) = joint_optimize(&eff, rho, sigma2, p_max, &joint_opts)?;
            Ok(state.objective_log)
        })?;

        Ok([
            (Method::NoOpt, no_opt, t_no),
            (Method::OnlyRis, only_ris, t_ris),
            (Method::OnlyPowers, only_powers, t_pow),
            (Method::Joint, joint, t_joint),
        ]
        .into_iter()
        .map(|(method, objective, wall_time)| TrialResult {
            trial_index: t,
            method,
            metric_db: to_metric(objective),
            wall_time,
        })
        .collect())
    })?;
    Ok(ExperimentResult {
        methods: Method::MULTI_USER.to_vec(),
        trials,
    })
}
