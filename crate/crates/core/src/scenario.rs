//! Simulation scenario: node placement, array sizes, RF budget, path loss and
//! thermal noise.
//!
//! Geometry only enters through distances, i.e. through the large-scale
//! attenuations. Small-scale fading is drawn independently of positions in
//! [`crate::channel`].
//!
//! The scenario is loadable from a flat TOML file whose keys match the field
//! names of [`ScenarioConfig`]; absent keys take the defaults listed there.
//!
//! ```toml
//! n_users = 4
//! bs_position = [0.0, 0.0, 25.0]
//! user_region_min = [50.0, 10.0]
//! user_region_max = [90.0, 40.0]
//! blocked_direct = [2]      # user 2 has no direct BS link
//! ```

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise power spectral density, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// BS array centre, meters.
    pub bs_position: Point3,
    /// RIS centre, meters.
    pub ris_position: Point3,
    /// Lower corner `(x, y)` of the rectangle users are dropped in.
    pub user_region_min: [f64; 2],
    /// Upper corner `(x, y)` of the user rectangle.
    pub user_region_max: [f64; 2],
    /// Height of every user, meters.
    pub user_height: f64,
    pub n_bs_antennas: usize,
    pub n_ris_elements: usize,
    pub n_users: usize,
    /// Documented only; the path-loss model is frequency independent.
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Reflection amplitude `ρ` of every RIS element.
    pub ris_loss_rho: f64,
    /// Total BS transmit power budget, watts.
    pub p_max_watts: f64,
    /// `c` in the `10^{-c}` path-loss intercept.
    pub pathloss_const_exp: f64,
    /// Distance exponent of the path-loss law.
    pub pathloss_distance_exp: f64,
    /// Users whose direct BS link is blocked.
    pub blocked_direct: Vec<usize>,
    /// Users whose reflected (BS-RIS-user) link is blocked.
    pub blocked_reflected: Vec<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            bs_position: [0.0, 0.0, 25.0],
            ris_position: [100.0, 0.0, 40.0],
            user_region_min: [50.0, 10.0],
            user_region_max: [90.0, 40.0],
            user_height: 1.5,
            n_bs_antennas: 16,
            n_ris_elements: 32,
            n_users: 10,
            carrier_hz: 3e9,
            bandwidth_hz: 20e6,
            noise_figure_db: 9.0,
            ris_loss_rho: 1.0,
            p_max_watts: 10.0,
            pathloss_const_exp: 3.53,
            pathloss_distance_exp: 3.76,
            blocked_direct: Vec::new(),
            blocked_reflected: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.n_bs_antennas == 0 || self.n_ris_elements == 0 || self.n_users == 0 {
            return bad("n_bs_antennas, n_ris_elements and n_users must be >= 1".into());
        }
        for (name, v) in [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("p_max_watts", self.p_max_watts),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.ris_loss_rho > 0.0 && self.ris_loss_rho <= 1.0) {
            return bad(format!("ris_loss_rho must lie in (0, 1], got {}", self.ris_loss_rho));
        }
        if !self.pathloss_distance_exp.is_finite() || self.pathloss_distance_exp <= 0.0 {
            return bad("pathloss_distance_exp must be positive".into());
        }
        if !self.pathloss_const_exp.is_finite() || !self.noise_figure_db.is_finite() {
            return bad("pathloss_const_exp and noise_figure_db must be finite".into());
        }
        let coords = self
            .bs_position
            .iter()
            .chain(&self.ris_position)
            .chain(&self.user_region_min)
            .chain(&self.user_region_max)
            .chain(std::iter::once(&self.user_height));
        if coords.clone().any(|c| !c.is_finite()) {
            return bad("positions must be finite".into());
        }
        for axis in 0..2 {
            if self.user_region_min[axis] > self.user_region_max[axis] {
                return bad("user_region_min must not exceed user_region_max".into());
            }
        }
        if self.user_height >= self.bs_position[2] || self.user_height >= self.ris_position[2] {
            return bad("users must lie strictly below the BS and the RIS".into());
        }
        if distance(&self.bs_position, &self.ris_position) <= 0.0 {
            return bad("BS and RIS must not coincide".into());
        }
        for (name, list) in [
            ("blocked_direct", &self.blocked_direct),
            ("blocked_reflected", &self.blocked_reflected),
        ] {
            if let Some(&k) = list.iter().find(|&&k| k >= self.n_users) {
                return bad(format!("{name} refers to user {k} but n_users = {}", self.n_users));
            }
        }
        if let Some(&k) = self
            .blocked_direct
            .iter()
            .find(|k| self.blocked_reflected.contains(k))
        {
            return Err(Error::UnreachableUser(k));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config is always serializable")
    }

    pub fn path_loss(&self) -> PathLoss {
        PathLoss {
            const_exp: self.pathloss_const_exp,
            distance_exp: self.pathloss_distance_exp,
        }
    }

    /// Receiver noise power `σ_z²` in watts.
    pub fn noise_power(&self) -> f64 {
        noise_power(self.bandwidth_hz, self.noise_figure_db)
            .expect("validated config has positive bandwidth")
    }

    pub fn bs_ris_distance(&self) -> f64 {
        distance(&self.bs_position, &self.ris_position)
    }
}

/// Thermal noise power in watts for a receiver of the given bandwidth and
/// noise figure.
pub fn noise_power(bandwidth_hz: f64, noise_figure_db: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth must be positive, got {bandwidth_hz}"
        )));
    }
    let dbm = THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    Ok(10f64.powf((dbm - 30.0) / 10.0))
}

/// Distance-based power attenuation `10^{-c} / d^{e}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub const_exp: f64,
    pub distance_exp: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            const_exp: 3.53,
            distance_exp: 3.76,
        }
    }
}

impl PathLoss {
    /// Attenuation of the BS-RIS-user path; the two hops add up in distance.
    pub fn reflected(&self, d_bs_ris: f64, d_ris_user: f64) -> Result<f64> {
        check_distance(d_bs_ris)?;
        check_distance(d_ris_user)?;
        Ok(self.eval(d_bs_ris + d_ris_user))
    }

    pub fn direct(&self, d_bs_user: f64) -> Result<f64> {
        check_distance(d_bs_user)?;
        Ok(self.eval(d_bs_user))
    }

    fn eval(&self, d: f64) -> f64 {
        10f64.powf(-self.const_exp) / d.powf(self.distance_exp)
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("distance must be positive, got {d}")))
    }
}

/// Reflected-path attenuation with the default constants.
pub fn path_loss_reflected(d_bs_ris: f64, d_ris_user: f64) -> Result<f64> {
    PathLoss::default().reflected(d_bs_ris, d_ris_user)
}

/// Direct-path attenuation with the default constants.
pub fn path_loss_direct(d_bs_user: f64) -> Result<f64> {
    PathLoss::default().direct(d_bs_user)
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Drops `cfg.n_users` users uniformly over the user rectangle at
/// `cfg.user_height`.
pub fn sample_user_positions<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<Point3> {
    let [x0, y0] = cfg.user_region_min;
    let [x1, y1] = cfg.user_region_max;
    (0..cfg.n_users)
        .map(|_| {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            [
                (x0 + (x1 - x0) * u).min(x1),
                (y0 + (y1 - y0) * v).min(y1),
                cfg.user_height,
            ]
        })
        .collect()
}
