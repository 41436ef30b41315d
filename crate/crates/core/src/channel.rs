//! Channel realizations and the per-user reflected matrices.
//!
//! The reflected contribution of user `k` is `√β_k H Φ h_k`. With
//! `Φ = diag(φ)` this equals `D_k φ` where `D_k(i, j) = H(i, j) h_k(j)`, so
//! every optimizer works on `D_k` and a complex vector of fixed-modulus
//! entries. Attenuations and blocking indicators are folded into `D_k` and
//! into the effective direct channel `g_k = i_kd √β_kd h_kd`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{distance, Point3, ScenarioConfig};
use crate::{wrap_phase, Complex64};

/// One draw of the small-scale fading plus the large-scale terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `H`, RIS to BS, `N_B × N_R`.
    pub ris_to_bs: DMatrix<Complex64>,
    /// `h_k`, user to RIS, length `N_R`.
    pub user_to_ris: Vec<DVector<Complex64>>,
    /// `h_{k,d}`, user to BS, length `N_B`.
    pub user_to_bs: Vec<DVector<Complex64>>,
    pub beta_reflected: Vec<f64>,
    pub beta_direct: Vec<f64>,
    pub reflected_link: Vec<bool>,
    pub direct_link: Vec<bool>,
}

impl ChannelRealization {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        ris_to_bs: DMatrix<Complex64>,
        user_to_ris: Vec<DVector<Complex64>>,
        user_to_bs: Vec<DVector<Complex64>>,
        beta_reflected: Vec<f64>,
        beta_direct: Vec<f64>,
        reflected_link: Vec<bool>,
        direct_link: Vec<bool>,
    ) -> Result<Self> {
        let (n_b, n_r) = ris_to_bs.shape();
        let k = user_to_ris.len();
        if n_b == 0 || n_r == 0 || k == 0 {
            return Err(Error::DimensionMismatch("empty channel".into()));
        }
        let lens = [
            user_to_bs.len(),
            beta_reflected.len(),
            beta_direct.len(),
            reflected_link.len(),
            direct_link.len(),
        ];
        if lens.iter().any(|&l| l != k) {
            return Err(Error::DimensionMismatch(format!(
                "per-user lists must all have {k} entries, got {lens:?}"
            )));
        }
        if user_to_ris.iter().any(|h| h.len() != n_r) || user_to_bs.iter().any(|h| h.len() != n_b) {
            return Err(Error::DimensionMismatch(format!(
                "user channels must have {n_r} (RIS) and {n_b} (BS) entries"
            )));
        }
        if beta_reflected
            .iter()
            .chain(&beta_direct)
            .any(|b| !(*b >= 0.0 && b.is_finite()))
        {
            return Err(Error::InvalidArgument("attenuations must be finite and >= 0".into()));
        }
        if let Some(user) = (0..k).find(|&i| !reflected_link[i] && !direct_link[i]) {
            return Err(Error::UnreachableUser(user));
        }
        Ok(Self {
            ris_to_bs,
            user_to_ris,
            user_to_bs,
            beta_reflected,
            beta_direct,
            reflected_link,
            direct_link,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_to_ris.len()
    }

    pub fn n_bs(&self) -> usize {
        self.ris_to_bs.nrows()
    }

    pub fn n_ris(&self) -> usize {
        self.ris_to_bs.ncols()
    }

    /// Serializable form: complex entries as `[re, im]`, `H` row-major.
    pub fn to_record(&self) -> RealizationRecord {
        let pair = |z: &Complex64| [z.re, z.im];
        let (n_b, n_r) = self.ris_to_bs.shape();
        RealizationRecord {
            n_bs: n_b,
            n_ris: n_r,
            ris_to_bs: (0..n_b)
                .flat_map(|i| (0..n_r).map(move |j| (i, j)))
                .map(|(i, j)| pair(&self.ris_to_bs[(i, j)]))
                .collect(),
            user_to_ris: self.user_to_ris.iter().map(|h| h.iter().map(pair).collect()).collect(),
            user_to_bs: self.user_to_bs.iter().map(|h| h.iter().map(pair).collect()).collect(),
            beta_reflected: self.beta_reflected.clone(),
            beta_direct: self.beta_direct.clone(),
            reflected_link: self.reflected_link.clone(),
            direct_link: self.direct_link.clone(),
        }
    }

    pub fn from_record(rec: &RealizationRecord) -> Result<Self> {
        let cx = |p: &[f64; 2]| Complex64::new(p[0], p[1]);
        if rec.ris_to_bs.len() != rec.n_bs * rec.n_ris {
            return Err(Error::DimensionMismatch(format!(
                "ris_to_bs has {} entries, expected {}",
                rec.ris_to_bs.len(),
                rec.n_bs * rec.n_ris
            )));
        }
        let h = DMatrix::from_row_iterator(rec.n_bs, rec.n_ris, rec.ris_to_bs.iter().map(cx));
        let vecs = |v: &[Vec<[f64; 2]>]| -> Vec<DVector<Complex64>> {
            v.iter().map(|h| DVector::from_iterator(h.len(), h.iter().map(cx))).collect()
        };
        Self::new(
            h,
            vecs(&rec.user_to_ris),
            vecs(&rec.user_to_bs),
            rec.beta_reflected.clone(),
            rec.beta_direct.clone(),
            rec.reflected_link.clone(),
            rec.direct_link.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("realization record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: RealizationRecord =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_record(&rec)
    }
}

/// On-disk layout of a [`ChannelRealization`], used for regression fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub n_bs: usize,
    pub n_ris: usize,
    /// Row-major `N_B × N_R` entries.
    pub ris_to_bs: Vec<[f64; 2]>,
    pub user_to_ris: Vec<Vec<[f64; 2]>>,
    pub user_to_bs: Vec<Vec<[f64; 2]>>,
    pub beta_reflected: Vec<f64>,
    pub beta_direct: Vec<f64>,
    pub reflected_link: Vec<bool>,
    pub direct_link: Vec<bool>,
}

/// Unit-variance circularly-symmetric complex Gaussian sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws i.i.d. `CN(0, 1)` fading for `H`, `h_k`, `h_{k,d}` and attaches the
/// path-loss attenuations of the given user positions.
///
/// Draw order is fixed (`H` row-major, then per user `h_k` then `h_{k,d}`),
/// so a seeded generator reproduces the realization bit for bit.
pub fn sample_realization<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    user_positions: &[Point3],
    rng: &mut R,
) -> Result<ChannelRealization> {
    if user_positions.len() != cfg.n_users {
        return Err(Error::DimensionMismatch(format!(
            "{} user positions for {} users",
            user_positions.len(),
            cfg.n_users
        )));
    }
    let (n_b, n_r) = (cfg.n_bs_antennas, cfg.n_ris_elements);
    let h = DMatrix::from_row_iterator(n_b, n_r, (0..n_b * n_r).map(|_| complex_gaussian(rng)));
    let mut user_to_ris = Vec::with_capacity(cfg.n_users);
    let mut user_to_bs = Vec::with_capacity(cfg.n_users);
    for _ in 0..cfg.n_users {
        user_to_ris.push(DVector::from_fn(n_r, |_, _| complex_gaussian(rng)));
        user_to_bs.push(DVector::from_fn(n_b, |_, _| complex_gaussian(rng)));
    }
    let pl = cfg.path_loss();
    let d_bs_ris = cfg.bs_ris_distance();
    let mut beta_reflected = Vec::with_capacity(cfg.n_users);
    let mut beta_direct = Vec::with_capacity(cfg.n_users);
    for p in user_positions {
        beta_reflected.push(pl.reflected(d_bs_ris, distance(&cfg.ris_position, p))?);
        beta_direct.push(pl.direct(distance(&cfg.bs_position, p))?);
    }
    let reflected_link = (0..cfg.n_users).map(|k| !cfg.blocked_reflected.contains(&k)).collect();
    let direct_link = (0..cfg.n_users).map(|k| !cfg.blocked_direct.contains(&k)).collect();
    ChannelRealization::new(
        h,
        user_to_ris,
        user_to_bs,
        beta_reflected,
        beta_direct,
        reflected_link,
        direct_link,
    )
}

/// Per-user reflected matrices `D_k` and direct channels `g_k`, with
/// attenuation and blocking absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    reflected: Vec<DMatrix<Complex64>>,
    direct: Vec<DVector<Complex64>>,
}

impl EffectiveChannel {
    /// Builds an effective channel directly from `D_k` and `g_k`.
    pub fn from_parts(
        reflected: Vec<DMatrix<Complex64>>,
        direct: Vec<DVector<Complex64>>,
    ) -> Result<Self> {
        let Some(first) = reflected.first() else {
            return Err(Error::DimensionMismatch("no users".into()));
        };
        let (n_b, n_r) = first.shape();
        if n_b == 0 || n_r == 0 {
            return Err(Error::DimensionMismatch("empty reflected matrix".into()));
        }
        if reflected.len() != direct.len()
            || reflected.iter().any(|d| d.shape() != (n_b, n_r))
            || direct.iter().any(|g| g.len() != n_b)
        {
            return Err(Error::DimensionMismatch(format!(
                "expected {} users with {n_b}x{n_r} reflected matrices and length-{n_b} direct channels",
                reflected.len()
            )));
        }
        Ok(Self { reflected, direct })
    }

    pub fn n_users(&self) -> usize {
        self.reflected.len()
    }

    pub fn n_bs(&self) -> usize {
        self.reflected[0].nrows()
    }

    pub fn n_ris(&self) -> usize {
        self.reflected[0].ncols()
    }

    pub fn reflected(&self, k: usize) -> Result<&DMatrix<Complex64>> {
        self.check_user(k)?;
        Ok(&self.reflected[k])
    }

    pub fn direct(&self, k: usize) -> Result<&DVector<Complex64>> {
        self.check_user(k)?;
        Ok(&self.direct[k])
    }

    /// `(D_k, g_k)` of one user.
    pub fn user(&self, k: usize) -> Result<(&DMatrix<Complex64>, &DVector<Complex64>)> {
        self.check_user(k)?;
        Ok((&self.reflected[k], &self.direct[k]))
    }

    pub(crate) fn reflected_all(&self) -> &[DMatrix<Complex64>] {
        &self.reflected
    }

    pub(crate) fn direct_all(&self) -> &[DVector<Complex64>] {
        &self.direct
    }

    /// Composite channel `D_k (ρ e^{jφ}) + g_k` of user `k`.
    pub fn composite(&self, k: usize, ris: &RisConfig) -> Result<DVector<Complex64>> {
        self.check_user(k)?;
        if ris.len() != self.n_ris() {
            return Err(Error::DimensionMismatch(format!(
                "RIS config has {} phases, channel has {} elements",
                ris.len(),
                self.n_ris()
            )));
        }
        Ok(&self.reflected[k] * ris.reflection_vector() + &self.direct[k])
    }

    fn check_user(&self, k: usize) -> Result<()> {
        if k < self.n_users() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: k,
                n_users: self.n_users(),
            })
        }
    }
}

/// Builds `D_k(i, j) = i_kr √β_k H(i, j) h_k(j)` and
/// `g_k = i_kd √β_kd h_kd` for every user.
pub fn build_effective(real: &ChannelRealization) -> EffectiveChannel {
    let reflected = (0..real.n_users())
        .map(|k| {
            let scale = if real.reflected_link[k] {
                real.beta_reflected[k].sqrt()
            } else {
                0.0
            };
            let h_k = &real.user_to_ris[k];
            DMatrix::from_fn(real.n_bs(), real.n_ris(), |i, j| {
                real.ris_to_bs[(i, j)] * h_k[j] * scale
            })
        })
        .collect();
    let direct = (0..real.n_users())
        .map(|k| {
            let scale = if real.direct_link[k] {
                real.beta_direct[k].sqrt()
            } else {
                0.0
            };
            real.user_to_bs[k].map(|z| z * scale)
        })
        .collect();
    EffectiveChannel { reflected, direct }
}

/// RIS reflection state: common amplitude `ρ` and per-element phases,
/// stored wrapped to `[-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    rho: f64,
    phases: Vec<f64>,
}

impl RisConfig {
    pub fn new(rho: f64, phases: Vec<f64>) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidArgument(format!("rho must lie in (0, 1], got {rho}")));
        }
        if phases.is_empty() || phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("phases must be finite and non-empty".into()));
        }
        Ok(Self {
            rho,
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    pub fn zeros(rho: f64, n: usize) -> Result<Self> {
        Self::new(rho, vec![0.0; n])
    }

    /// Phases i.i.d. uniform on `[-π, π)`.
    pub fn random<R: Rng + ?Sized>(rho: f64, n: usize, rng: &mut R) -> Result<Self> {
        use std::f64::consts::PI;
        let phases = (0..n).map(|_| rng.random_range(-PI..PI)).collect();
        Self::new(rho, phases)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// `φ` as a complex vector with entries `ρ e^{jφ_i}`.
    pub fn reflection_vector(&self) -> DVector<Complex64> {
        reflection_vector(self.rho, &self.phases)
    }
}

pub(crate) fn reflection_vector(rho: f64, phases: &[f64]) -> DVector<Complex64> {
    DVector::from_iterator(
        phases.len(),
        phases.iter().map(|&p| Complex64::from_polar(rho, p)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_realization(n_b: usize, n_r: usize, k: usize, seed: u64) -> ChannelRealization {
        let cfg = ScenarioConfig {
            n_bs_antennas: n_b,
            n_ris_elements: n_r,
            n_users: k,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = crate::scenario::sample_user_positions(&cfg, &mut rng);
        sample_realization(&cfg, &pos, &mut rng).unwrap()
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        assert_eq!(random_realization(4, 6, 3, 11), random_realization(4, 6, 3, 11));
        assert_ne!(random_realization(4, 6, 3, 11), random_realization(4, 6, 3, 12));
    }

    #[test]
    fn unit_phase_reduces_to_plain_product() {
        let real = random_realization(3, 5, 2, 5);
        let eff = build_effective(&real);
        let ris = RisConfig::zeros(1.0, 5).unwrap();
        for k in 0..2 {
            let expect = &real.ris_to_bs * &real.user_to_ris[k] * Complex64::from(real.beta_reflected[k].sqrt());
            let got = eff.reflected(k).unwrap() * ris.reflection_vector();
            assert!((got - &expect).norm() <= 1e-13 * expect.norm());
        }
    }

    #[test]
    fn blocked_links_zero_their_part_exactly() {
        let cfg = ScenarioConfig {
            n_users: 3,
            blocked_reflected: vec![0],
            blocked_direct: vec![2],
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pos = crate::scenario::sample_user_positions(&cfg, &mut rng);
        let real = sample_realization(&cfg, &pos, &mut rng).unwrap();
        // direct fading is still drawn for the blocked user
        assert!(real.user_to_bs[2].norm() > 0.0);
        let eff = build_effective(&real);
        assert!(eff.reflected(0).unwrap().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(eff.direct(2).unwrap().iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(eff.reflected(1).unwrap().norm() > 0.0);
    }

    #[test]
    fn unreachable_user_is_rejected() {
        let real = random_realization(2, 2, 1, 1);
        let err = ChannelRealization::new(
            real.ris_to_bs.clone(),
            real.user_to_ris.clone(),
            real.user_to_bs.clone(),
            real.beta_reflected.clone(),
            real.beta_direct.clone(),
            vec![false],
            vec![false],
        );
        assert_eq!(err, Err(Error::UnreachableUser(0)));
    }

    #[test]
    fn composite_edge_cases() {
        let n_b = 3;
        let n_r = 4;
        let g = DVector::from_fn(n_b, |i, _| Complex64::new(i as f64, 1.0));
        let eff = EffectiveChannel::from_parts(vec![DMatrix::zeros(n_b, n_r)], vec![g.clone()]).unwrap();
        let ris = RisConfig::new(0.7, vec![0.3, -1.0, 2.0, 0.1]).unwrap();
        assert_eq!(eff.composite(0, &ris).unwrap(), g);
        assert!(matches!(
            eff.composite(1, &ris),
            Err(Error::IndexOutOfRange { index: 1, n_users: 1 })
        ));
        let short = RisConfig::zeros(1.0, 2).unwrap();
        assert!(matches!(eff.composite(0, &short), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn composite_vanishes_with_rho_when_direct_is_zero() {
        let real = random_realization(3, 4, 1, 8);
        let d = build_effective(&real).reflected(0).unwrap().clone();
        let eff = EffectiveChannel::from_parts(vec![d], vec![DVector::zeros(3)]).unwrap();
        let phases = vec![0.4, 1.0, -2.0, 3.0];
        let full = eff.composite(0, &RisConfig::new(1.0, phases.clone()).unwrap()).unwrap();
        let tiny = eff.composite(0, &RisConfig::new(1e-9, phases).unwrap()).unwrap();
        assert!((tiny.clone() * Complex64::from(1e9) - &full).norm() <= 1e-12 * full.norm());
        assert!(tiny.norm() < 1e-8 * full.norm());
    }

    #[test]
    fn ris_config_validates_and_wraps() {
        assert!(RisConfig::new(0.0, vec![0.0]).is_err());
        assert!(RisConfig::new(1.1, vec![0.0]).is_err());
        assert!(RisConfig::new(1.0, vec![]).is_err());
        assert!(RisConfig::new(1.0, vec![f64::NAN]).is_err());
        let ris = RisConfig::new(0.5, vec![7.0, -7.0, 3.0]).unwrap();
        for (&p, orig) in ris.phases().iter().zip([7.0f64, -7.0, 3.0]) {
            assert!((-std::f64::consts::PI..=std::f64::consts::PI).contains(&p));
            assert!((Complex64::from_polar(1.0, p) - Complex64::from_polar(1.0, orig)).norm() < 1e-14);
        }
        for z in ris.reflection_vector().iter() {
            assert!((z.norm() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn json_dump_round_trips() {
        let real = random_realization(3, 2, 2, 4);
        let back = ChannelRealization::from_json(&real.to_json()).unwrap();
        assert_eq!(back, real);
        let rec = real.to_record();
        // row-major: second entry is H(0, 1)
        assert_eq!(rec.ris_to_bs[1], [real.ris_to_bs[(0, 1)].re, real.ris_to_bs[(0, 1)].im]);
    }
}
