//! Brute-force reference optimizers.
//!
//! These are deliberately slow and structurally independent of the
//! greedy scheduler: [`global_oracle`] enumerates every subset of
//! candidate links, [`grid_oracle_1d`] scans a dense power grid for a
//! single link. Agreement between the fast path and these references is
//! what the integration suite leans on.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    self, AccessPoint, LinkId, PowerAllocation, RadioLink, SystemParams, UserId, UserTerminal,
    EPS_ACTIVE,
};
use crate::solver::{
    link_circuit_mw, solve_active_set_ee, system_circuit_mw, ActiveLinkSet, SolverConfig,
};

/// Subset enumeration is capped at this many candidate links (2^16
/// solves is where "reference" stops being "quick").
pub const ORACLE_MAX_LINKS: usize = 16;

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Best system efficiency found, bit/joule.
    pub ee: f64,
    pub allocation: PowerAllocation,
    pub active_set: ActiveLinkSet,
    pub subsets_examined: u64,
}

/// Exhaustive search over all subsets of candidate links (positive gain
/// and positive weight), each subset solved to optimality and evaluated
/// under the full power model.
///
/// Subsets whose solve leaves some member at zero power are skipped:
/// their support is a strict subset that is enumerated on its own, and
/// charging electronics for a silent radio never wins.
pub fn global_oracle(
    users: &[UserTerminal],
    ap: &AccessPoint,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<OracleResult> {
    model::validate_instance(users, ap, params)?;
    let candidates: Vec<(UserId, LinkId)> = users
        .iter()
        .filter(|u| u.weight > 0.0)
        .flat_map(|u| {
            u.links
                .iter()
                .filter(|l| l.gain > 0.0)
                .map(move |l| (u.id, l.id))
        })
        .collect();
    if candidates.len() > ORACLE_MAX_LINKS {
        return Err(Error::TooManyLinks {
            count: candidates.len(),
            limit: ORACLE_MAX_LINKS,
        });
    }

    let mut best_ee = 0.0f64;
    let mut best_alloc = PowerAllocation::new();
    let mut best_set = ActiveLinkSet::new();
    let mut examined = 0u64;
    for mask in 1u32..(1u32 << candidates.len()) {
        examined += 1;
        let active: ActiveLinkSet = candidates
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &pair)| pair)
            .collect();
        let circuit = system_circuit_mw(&active, users, ap);
        let sol = solve_active_set_ee(&active, users, params, circuit, cfg)?;
        if sol.powers.iter().any(|(_, p)| p <= EPS_ACTIVE) {
            continue;
        }
        let ee = if cfg.count_transmit_power {
            model::system_ee(&sol.powers, users, ap, params)?
        } else {
            sol.ee
        };
        if ee > best_ee {
            best_ee = ee;
            best_alloc = sol.powers;
            best_set = active;
        }
    }
    Ok(OracleResult {
        ee: best_ee,
        allocation: best_alloc,
        active_set: best_set,
        subsets_examined: examined,
    })
}

/// Dense scan of the single-link efficiency profile: `steps + 1` grid
/// points over `[0, p_max]`, then golden-section refinement inside the
/// bracketing cells. Returns `(ee, power)`.
pub fn grid_oracle_1d(
    link: &RadioLink,
    user: &UserTerminal,
    ap: &AccessPoint,
    params: &SystemParams,
    steps: usize,
) -> (f64, f64) {
    assert!(steps >= 1000, "grid too coarse to serve as a reference");
    if link.gain <= 0.0 || user.weight <= 0.0 {
        return (0.0, 0.0);
    }
    let circuit = link_circuit_mw(user, ap);
    debug_assert!(circuit > 0.0);
    let ratio = |p: f64| -> f64 {
        let rate = user.weight * model::rate_bps(p, link.gain, params);
        let denom = p / params.amplifier_efficiency + circuit;
        model::ratio_bit_per_joule(rate, denom)
    };

    let mut best_i = 0usize;
    let mut best_v = 0.0f64;
    for i in 0..=steps {
        let v = ratio(link.p_max * i as f64 / steps as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = link.p_max * best_i.saturating_sub(1) as f64 / steps as f64;
    let hi = link.p_max * (best_i + 1).min(steps) as f64 / steps as f64;
    let (p_fine, v_fine) = golden_max(&ratio, lo, hi, 1e-13 * link.p_max);
    if v_fine > best_v {
        (v_fine, p_fine)
    } else {
        (best_v, link.p_max * best_i as f64 / steps as f64)
    }
}

/// Golden-section search for the maximum of a unimodal function.
fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    if fm >= fc && fm >= fd {
        (mid, fm)
    } else if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Random small instance in the flavour of the default scenario: 15 kHz
/// links, -174 dBm/Hz noise, 25 dBm budgets, gains log-uniform across
/// six orders of magnitude so that link SNRs range from hopeless to
/// excellent.
pub fn random_instance<R: Rng>(
    rng: &mut R,
    max_users: usize,
    max_links_per_user: usize,
) -> (Vec<UserTerminal>, AccessPoint, SystemParams) {
    assert!(max_users >= 1 && max_links_per_user >= 1);
    let params = SystemParams {
        bandwidth_per_link: 15_000.0,
        snr_gap: 1.0,
        noise_variance: 10f64.powf(-17.4) * 15_000.0,
        amplifier_efficiency: 0.38,
    };
    let ap = AccessPoint {
        p_dyn_rx: 45.0,
        p_sta_rx: 5_000.0,
    };
    let num_users = rng.gen_range(1..=max_users);
    let mut link_id = 0u32;
    let mut users = Vec::with_capacity(num_users);
    for k in 0..num_users {
        let n_links = rng.gen_range(1..=max_links_per_user);
        let links = (0..n_links)
            .map(|_| {
                let gain = 10f64.powf(rng.gen_range(-16.2..-10.2));
                let link = RadioLink {
                    id: LinkId(link_id),
                    gain,
                    p_max: 316.227_766_016_837_94,
                };
                link_id += 1;
                link
            })
            .collect();
        users.push(UserTerminal {
            id: UserId(k as u32),
            weight: 1.0,
            p_dyn: rng.gen_range(5.0..30.0),
            p_sta: 100.0,
            links,
        });
    }
    (users, ap, params)
}
