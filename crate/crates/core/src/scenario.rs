//! Reproducible random scenarios: cell geometry, COST-231 Hata path
//! loss, lognormal shadowing, Rayleigh fading, and circuit-power draws.
//!
//! Determinism is part of the contract. A scenario is a pure function
//! of its config (seed included), and the draw order is fixed: for each
//! user in id order, one uniform for the distance, two for the
//! shadowing normal, one for the dynamic circuit power, then one per
//! link for the fading power. Extending `num_users` therefore appends
//! draws without disturbing earlier users.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{AccessPoint, LinkId, RadioLink, SystemParams, UserId, UserTerminal};

/// Users are dropped no closer to the access point than this (m), the
/// usual guard against the near-field blowing up the path-loss model.
pub const MIN_USER_DISTANCE_M: f64 = 50.0;

/// Everything needed to generate one scenario. Power figures are mW
/// except `p_max` (dBm) and `noise_density` (dBm/Hz); frequencies are
/// GHz for the carrier and Hz for the per-link bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub links_per_user: usize,
    /// Cell radius in m.
    pub cell_radius: f64,
    /// Carrier frequency in GHz.
    pub carrier_freq: f64,
    /// Bandwidth per link in Hz.
    pub bandwidth: f64,
    /// Noise density in dBm/Hz.
    pub noise_density: f64,
    /// Per-link transmit budget in dBm.
    pub p_max: f64,
    /// Amplifier drain efficiency in (0, 1].
    pub xi: f64,
    /// Access-point static power, mW.
    pub p_sta_0: f64,
    /// Access-point dynamic power per active link, mW.
    pub p_dyn_0: f64,
    /// User static power, mW.
    pub p_sta_k: f64,
    /// Range the per-user dynamic power is drawn from, mW.
    pub p_dyn_k_range: (f64, f64),
    /// Building penetration loss, dB.
    pub penetration_loss: f64,
    /// Lognormal shadowing standard deviation, dB.
    pub shadowing_std: f64,
    /// SNR gap to capacity, linear.
    pub snr_gap: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_users: 8,
            links_per_user: 20,
            cell_radius: 1_000.0,
            carrier_freq: 2.0,
            bandwidth: 15_000.0,
            noise_density: -174.0,
            p_max: 25.0,
            xi: 0.38,
            p_sta_0: 5_000.0,
            p_dyn_0: 45.0,
            p_sta_k: 100.0,
            p_dyn_k_range: (5.0, 30.0),
            penetration_loss: 20.0,
            shadowing_std: 8.0,
            snr_gap: 1.0,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cell_radius", self.cell_radius),
            ("carrier_freq", self.carrier_freq),
            ("bandwidth", self.bandwidth),
            ("xi", self.xi),
            ("snr_gap", self.snr_gap),
        ];
        for (name, value) in positive {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        let nonnegative = [
            ("p_sta_0", self.p_sta_0),
            ("p_dyn_0", self.p_dyn_0),
            ("p_sta_k", self.p_sta_k),
            ("penetration_loss", self.penetration_loss),
            ("shadowing_std", self.shadowing_std),
        ];
        for (name, value) in nonnegative {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if self.num_users == 0 {
            return Err(Error::InvalidParameter {
                name: "num_users",
                value: 0.0,
            });
        }
        if self.links_per_user == 0 {
            return Err(Error::InvalidParameter {
                name: "links_per_user",
                value: 0.0,
            });
        }
        if self.xi > 1.0 {
            return Err(Error::InvalidParameter {
                name: "xi",
                value: self.xi,
            });
        }
        if self.snr_gap < 1.0 {
            return Err(Error::InvalidParameter {
                name: "snr_gap",
                value: self.snr_gap,
            });
        }
        if self.cell_radius <= MIN_USER_DISTANCE_M {
            return Err(Error::InvalidParameter {
                name: "cell_radius",
                value: self.cell_radius,
            });
        }
        let (lo, hi) = self.p_dyn_k_range;
        if !(lo >= 0.0 && hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p_dyn_k_range",
                value: lo,
            });
        }
        if !self.p_max.is_finite() || !self.noise_density.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p_max",
                value: self.p_max,
            });
        }
        Ok(())
    }

    /// Per-link budget in mW.
    pub fn p_max_mw(&self) -> f64 {
        dbm_to_mw(self.p_max)
    }

    /// Noise power per link in mW.
    pub fn noise_variance_mw(&self) -> f64 {
        dbm_to_mw(self.noise_density) * self.bandwidth
    }

    /// Reads a flat `key = value` file; `#` starts a comment, keys are
    /// the field names above, omitted keys keep their defaults.
    /// `p_dyn_k_range` takes two numbers separated by a comma or
    /// whitespace.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (idx, raw) in s.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    line,
                    message: format!("expected key = value, got {content:?}"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let bad_num = |what: &str| Error::Config {
                line,
                message: format!("cannot parse {what} from {value:?}"),
            };
            match key {
                "num_users" => cfg.num_users = value.parse().map_err(|_| bad_num(key))?,
                "links_per_user" => cfg.links_per_user = value.parse().map_err(|_| bad_num(key))?,
                "cell_radius" => cfg.cell_radius = value.parse().map_err(|_| bad_num(key))?,
                "carrier_freq" => cfg.carrier_freq = value.parse().map_err(|_| bad_num(key))?,
                "bandwidth" => cfg.bandwidth = value.parse().map_err(|_| bad_num(key))?,
                "noise_density" => cfg.noise_density = value.parse().map_err(|_| bad_num(key))?,
                "p_max" => cfg.p_max = value.parse().map_err(|_| bad_num(key))?,
                "xi" => cfg.xi = value.parse().map_err(|_| bad_num(key))?,
                "p_sta_0" => cfg.p_sta_0 = value.parse().map_err(|_| bad_num(key))?,
                "p_dyn_0" => cfg.p_dyn_0 = value.parse().map_err(|_| bad_num(key))?,
                "p_sta_k" => cfg.p_sta_k = value.parse().map_err(|_| bad_num(key))?,
                "penetration_loss" => {
                    cfg.penetration_loss = value.parse().map_err(|_| bad_num(key))?
                }
                "shadowing_std" => cfg.shadowing_std = value.parse().map_err(|_| bad_num(key))?,
                "snr_gap" => cfg.snr_gap = value.parse().map_err(|_| bad_num(key))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad_num(key))?,
                "p_dyn_k_range" => {
                    let parts: Vec<&str> = value
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|p| !p.is_empty())
                        .collect();
                    if parts.len() != 2 {
                        return Err(Error::Config {
                            line,
                            message: format!("p_dyn_k_range wants two numbers, got {value:?}"),
                        });
                    }
                    let lo = parts[0].parse().map_err(|_| bad_num(key))?;
                    let hi = parts[1].parse().map_err(|_| bad_num(key))?;
                    cfg.p_dyn_k_range = (lo, hi);
                }
                other => {
                    return Err(Error::Config {
                        line,
                        message: format!("unknown key {other:?}"),
                    });
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A generated instance plus the shared physical-layer constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub users: Vec<UserTerminal>,
    pub ap: AccessPoint,
    pub params: SystemParams,
}

impl Scenario {
    pub fn total_links(&self) -> usize {
        self.users.iter().map(|u| u.links.len()).sum()
    }

    pub fn positive_gain_links(&self) -> usize {
        self.users
            .iter()
            .flat_map(|u| &u.links)
            .filter(|l| l.gain > 0.0)
            .count()
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// COST-231 Hata urban path loss in dB (medium-city correction), with
/// a 30 m base-station antenna and a 1.5 m mobile antenna.
pub fn cost231_hata_urban_db(distance_m: f64, carrier_freq_ghz: f64) -> f64 {
    let f_mhz = carrier_freq_ghz * 1_000.0;
    let h_base = 30.0f64;
    let h_mobile = 1.5f64;
    let a_mobile = (1.1 * f_mhz.log10() - 0.7) * h_mobile - (1.56 * f_mhz.log10() - 0.8);
    46.3 + 33.9 * f_mhz.log10() - 13.82 * h_base.log10() - a_mobile
        + (44.9 - 6.55 * h_base.log10()) * (distance_m / 1_000.0).log10()
}

/// Standard normal via the Box-Muller cosine branch: always consumes
/// exactly two uniforms, which keeps the documented draw order stable.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Unit-mean exponential (Rayleigh fading power) from one uniform. The
/// measure-zero draw of exactly zero is clamped to a subnormal-free
/// floor so every generated gain stays strictly positive.
fn unit_mean_exponential<R: Rng>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    (-(1.0 - u).ln()).max(1e-300)
}

/// Generates the scenario determined by `cfg`. Same config, same
/// scenario, bit for bit.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario> {
    cfg.validate()?;
    let params = SystemParams {
        bandwidth_per_link: cfg.bandwidth,
        snr_gap: cfg.snr_gap,
        noise_variance: cfg.noise_variance_mw(),
        amplifier_efficiency: cfg.xi,
    };
    let ap = AccessPoint {
        p_dyn_rx: cfg.p_dyn_0,
        p_sta_rx: cfg.p_sta_0,
    };
    let p_max_mw = cfg.p_max_mw();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut users = Vec::with_capacity(cfg.num_users);
    let mut link_id = 0u32;
    for k in 0..cfg.num_users {
        // Area-uniform drop on the annulus [d_min, R].
        let u: f64 = rng.gen();
        let d2 = MIN_USER_DISTANCE_M.powi(2)
            + u * (cfg.cell_radius.powi(2) - MIN_USER_DISTANCE_M.powi(2));
        let distance = d2.sqrt();
        let shadow_db = cfg.shadowing_std * standard_normal(&mut rng);
        let u: f64 = rng.gen();
        let p_dyn = cfg.p_dyn_k_range.0 + u * (cfg.p_dyn_k_range.1 - cfg.p_dyn_k_range.0);

        let loss_db =
            cost231_hata_urban_db(distance, cfg.carrier_freq) + cfg.penetration_loss + shadow_db;
        let base_gain = 10f64.powf(-loss_db / 10.0);
        let links = (0..cfg.links_per_user)
            .map(|_| {
                let link = RadioLink {
                    id: LinkId(link_id),
                    gain: base_gain * unit_mean_exponential(&mut rng),
                    p_max: p_max_mw,
                };
                link_id += 1;
                link
            })
            .collect();
        users.push(UserTerminal {
            id: UserId(k as u32),
            weight: 1.0,
            p_dyn,
            p_sta: cfg.p_sta_k,
            links,
        });
    }
    Ok(Scenario { users, ap, params })
}

/// One row per link: `user_id,link_id,gain,p_dyn_k`.
pub fn scenario_csv(scenario: &Scenario) -> String {
    let mut out = String::from("user_id,link_id,gain,p_dyn_k\n");
    for user in &scenario.users {
        for link in &user.links {
            writeln!(
                out,
                "{},{},{:e},{}",
                user.id, link.id, link.gain, user.p_dyn
            )
            .unwrap();
        }
    }
    out
}

pub fn write_scenario_csv<W: io::Write>(scenario: &Scenario, w: &mut W) -> io::Result<()> {
    w.write_all(scenario_csv(scenario).as_bytes())
}
