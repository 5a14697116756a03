//! Fractional-program solvers for energy efficiency at three scopes:
//! one link, one user, and an arbitrary fixed set of active links.
//!
//! Every scope maximizes a ratio of the same shape,
//!
//! ```text
//!          sum_j  w_j * r_j(p_j)
//! f(p) = --------------------------      0 <= p_j <= p_max_j,
//!         sum_j p_j / xi  +  D
//! ```
//!
//! where `r_j` is the Shannon rate of link `j` and `D` is a fixed
//! circuit-power constant chosen by the caller: dynamic electronics of
//! one radio chain at link scope, per-chain dynamics plus the user's
//! static draw at user scope, everything including the access point's
//! static draw at system scope.
//!
//! The ratio is solved by Dinkelbach iteration: for a fixed efficiency
//! guess `ee`, the subtractive problem `max_p rate(p) - ee * power(p)`
//! separates per link and has the closed-form water-filling solution
//! implemented in [`power_for_ee`], so each iteration costs one pass
//! over the scope. A plain bisection on the root of the subtractive
//! value is available as an independent cross-check via
//! [`SolveMethod::Bisection`].

use std::collections::BTreeSet;
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{
    self, AccessPoint, LinkId, PowerAllocation, RadioLink, SystemParams, UserId, UserTerminal,
    EPS_ACTIVE, MW_PER_W,
};

/// Ordered set of (user, link) pairs currently switched on.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActiveLinkSet {
    pairs: BTreeSet<(UserId, LinkId)>,
}

impl ActiveLinkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(user: UserId, link: LinkId) -> Self {
        let mut s = Self::new();
        s.insert(user, link);
        s
    }

    /// Returns true if the pair was not present yet.
    pub fn insert(&mut self, user: UserId, link: LinkId) -> bool {
        self.pairs.insert((user, link))
    }

    pub fn contains(&self, user: UserId, link: LinkId) -> bool {
        self.pairs.contains(&(user, link))
    }

    pub fn union_with(&mut self, other: &ActiveLinkSet) {
        self.pairs.extend(other.pairs.iter().copied());
    }

    /// Pairs in (user, link) order.
    pub fn iter(&self) -> impl Iterator<Item = (UserId, LinkId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn users(&self) -> BTreeSet<UserId> {
        self.pairs.iter().map(|&(u, _)| u).collect()
    }

    /// Number of active links belonging to `user`.
    pub fn links_of(&self, user: UserId) -> usize {
        self.pairs.iter().filter(|&&(u, _)| u == user).count()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl FromIterator<(UserId, LinkId)> for ActiveLinkSet {
    fn from_iter<T: IntoIterator<Item = (UserId, LinkId)>>(iter: T) -> Self {
        Self {
            pairs: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Dinkelbach iteration with the closed-form inner step. Default.
    Dinkelbach,
    /// Bisection on the sign of the subtractive value. Slower but
    /// independent of the update rule; used for cross-checking.
    Bisection,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative convergence tolerance on the efficiency value.
    pub tol_ratio: f64,
    /// Iteration cap for either method.
    pub max_iter: u32,
    /// Absolute bracket width for bisection; `None` picks
    /// `1e-10 * upper_bound` per solve.
    pub bisection_tol: Option<f64>,
    pub method: SolveMethod,
    /// When false the amplifier drain is dropped from every objective
    /// denominator, so only circuit power is charged. Rate then has no
    /// cost and the inner step returns full budget on every link. Used
    /// by baselines that ignore the transmitter side of the bill.
    pub count_transmit_power: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_ratio: 1e-9,
            max_iter: 100,
            bisection_tol: None,
            method: SolveMethod::Dinkelbach,
            count_transmit_power: true,
        }
    }
}

/// Result of a fixed-scope solve. `ee` always equals the objective
/// evaluated at `powers`, so callers can trust the pair to be
/// consistent.
#[derive(Debug, Clone)]
pub struct EeSolution {
    /// Optimal efficiency in bit/joule.
    pub ee: f64,
    /// Optimal powers for every link in the scope (explicit zeros for
    /// links the optimum leaves off).
    pub powers: PowerAllocation,
    pub iterations: u32,
    pub converged: bool,
}

impl EeSolution {
    fn idle() -> Self {
        Self {
            ee: 0.0,
            powers: PowerAllocation::new(),
            iterations: 0,
            converged: true,
        }
    }
}

/// Dynamic circuit power one active link of `user` adds, both ends.
pub fn link_circuit_mw(user: &UserTerminal, ap: &AccessPoint) -> f64 {
    user.p_dyn + ap.p_dyn_rx
}

/// Circuit power billed to `user` under the given active set: per-chain
/// dynamics at both ends plus the static draw once anything is on.
pub fn user_circuit_mw(active: &ActiveLinkSet, user: &UserTerminal, ap: &AccessPoint) -> f64 {
    let n = active.links_of(user.id) as f64;
    let sta = if n > 0.0 { user.p_sta } else { 0.0 };
    n * (user.p_dyn + ap.p_dyn_rx) + sta
}

/// System-wide circuit power: every user's bill plus the access
/// point's unconditional static draw.
pub fn system_circuit_mw(active: &ActiveLinkSet, users: &[UserTerminal], ap: &AccessPoint) -> f64 {
    let mut d = ap.p_sta_rx;
    for user in users {
        d += user_circuit_mw(active, user, ap);
    }
    d
}

/// Maximizer of `w * rate(p) - ee_guess * (p / xi)` over `[0, p_max]`:
/// a water-filling level shifted by the link's noise floor, clamped to
/// the budget. Powers below [`EPS_ACTIVE`] are snapped to exactly zero.
pub fn power_for_ee(
    ee_guess: f64,
    link: &RadioLink,
    weight: f64,
    params: &SystemParams,
) -> Result<f64> {
    if ee_guess <= 0.0 || !ee_guess.is_finite() {
        return Err(Error::NonPositiveEeGuess { ee: ee_guess });
    }
    if link.gain <= 0.0 || weight <= 0.0 {
        return Ok(0.0);
    }
    let level = MW_PER_W * params.bandwidth_per_link * params.amplifier_efficiency * weight
        / (ee_guess * LN_2);
    let floor = params.snr_gap * params.noise_variance / link.gain;
    Ok(snap((level - floor).clamp(0.0, link.p_max)))
}

fn snap(p: f64) -> f64 {
    if p <= EPS_ACTIVE {
        0.0
    } else {
        p
    }
}

/// Flat view of one link inside a solve scope.
struct ScopeLink {
    user: UserId,
    link: LinkId,
    weight: f64,
    gain: f64,
    p_max: f64,
    /// Noise floor `snr_gap * noise / gain` in mW.
    floor: f64,
}

fn scope_links(
    active: &ActiveLinkSet,
    users: &[UserTerminal],
    params: &SystemParams,
) -> Result<Vec<ScopeLink>> {
    let mut out = Vec::with_capacity(active.len());
    for (uid, lid) in active.iter() {
        let user = users
            .iter()
            .find(|u| u.id == uid)
            .ok_or(Error::UnknownLink {
                user: uid,
                link: lid,
            })?;
        let link = user
            .links
            .iter()
            .find(|l| l.id == lid)
            .ok_or(Error::UnknownLink {
                user: uid,
                link: lid,
            })?;
        if link.gain <= 0.0 {
            return Err(Error::ZeroGainLink {
                user: uid,
                link: lid,
            });
        }
        out.push(ScopeLink {
            user: uid,
            link: lid,
            weight: user.weight,
            gain: link.gain,
            p_max: link.p_max,
            floor: params.snr_gap * params.noise_variance / link.gain,
        });
    }
    Ok(out)
}

fn weighted_rate(links: &[ScopeLink], p: &[f64], params: &SystemParams) -> f64 {
    links
        .iter()
        .zip(p)
        .filter(|(_, &pv)| pv > 0.0)
        .map(|(l, &pv)| l.weight * model::rate_bps(pv, l.gain, params))
        .sum()
}

fn denominator_mw(p: &[f64], circuit_mw: f64, count_tx: bool, params: &SystemParams) -> f64 {
    let mut d = circuit_mw;
    if count_tx {
        let drain: f64 = p.iter().sum::<f64>() / params.amplifier_efficiency;
        d += drain;
    }
    d
}

fn ratio_value(
    links: &[ScopeLink],
    p: &[f64],
    circuit_mw: f64,
    count_tx: bool,
    params: &SystemParams,
) -> f64 {
    let rate = weighted_rate(links, p, params);
    let denom = denominator_mw(p, circuit_mw, count_tx, params);
    model::ratio_bit_per_joule(rate, denom)
}

/// Per-link closed-form maximizer of the subtractive problem at fixed
/// efficiency. With the amplifier drain excluded the rate side is free
/// and the maximizer is the full budget everywhere.
fn inner_argmax(
    links: &[ScopeLink],
    ee: f64,
    params: &SystemParams,
    count_tx: bool,
    out: &mut Vec<f64>,
) {
    out.clear();
    if count_tx {
        let level =
            MW_PER_W * params.bandwidth_per_link * params.amplifier_efficiency / (ee * LN_2);
        for l in links {
            out.push(snap((l.weight * level - l.floor).clamp(0.0, l.p_max)));
        }
    } else {
        out.extend(links.iter().map(|l| l.p_max));
    }
}

fn collect_powers(links: &[ScopeLink], p: &[f64]) -> PowerAllocation {
    links
        .iter()
        .zip(p)
        .map(|(l, &pv)| ((l.user, l.link), pv))
        .collect()
}

fn solve_scope(
    links: &[ScopeLink],
    circuit_mw: f64,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<EeSolution> {
    if links.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    if circuit_mw <= 0.0 || !circuit_mw.is_finite() {
        return Err(Error::NonPositiveCircuitPower);
    }
    if cfg.tol_ratio <= 0.0 || !cfg.tol_ratio.is_finite() {
        return Err(Error::InvalidParameter {
            name: "tol_ratio",
            value: cfg.tol_ratio,
        });
    }
    if cfg.max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            value: 0.0,
        });
    }

    let p_full: Vec<f64> = links.iter().map(|l| l.p_max).collect();
    let rate_full = weighted_rate(links, &p_full, params);
    if rate_full <= 0.0 {
        // No link in the scope carries weighted rate; spending nothing
        // is optimal and the ratio is zero.
        let zeros = vec![0.0; links.len()];
        return Ok(EeSolution {
            ee: 0.0,
            powers: collect_powers(links, &zeros),
            iterations: 0,
            converged: true,
        });
    }

    match cfg.method {
        SolveMethod::Dinkelbach => Ok(dinkelbach(links, circuit_mw, params, cfg, p_full)),
        SolveMethod::Bisection => Ok(bisection(links, circuit_mw, params, cfg, rate_full)),
    }
}

fn dinkelbach(
    links: &[ScopeLink],
    circuit_mw: f64,
    params: &SystemParams,
    cfg: &SolverConfig,
    mut p: Vec<f64>,
) -> EeSolution {
    // Full budget is feasible, so its ratio is a positive starting
    // guess below the optimum; the iteration raises it monotonically.
    let mut ee = ratio_value(links, &p, circuit_mw, cfg.count_transmit_power, params);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        inner_argmax(links, ee, params, cfg.count_transmit_power, &mut p);
        let rate = weighted_rate(links, &p, params);
        let denom = denominator_mw(&p, circuit_mw, cfg.count_transmit_power, params);
        let next = model::ratio_bit_per_joule(rate, denom);
        let excess = rate - ee * (denom / MW_PER_W);
        let scale = (ee * denom / MW_PER_W).max(f64::MIN_POSITIVE);
        let done = (next - ee).abs() <= cfg.tol_ratio * next.abs().max(f64::MIN_POSITIVE)
            || excess.abs() <= cfg.tol_ratio * scale;
        ee = next;
        if done {
            converged = true;
            break;
        }
    }
    EeSolution {
        ee,
        powers: collect_powers(links, &p),
        iterations,
        converged,
    }
}

fn bisection(
    links: &[ScopeLink],
    circuit_mw: f64,
    params: &SystemParams,
    cfg: &SolverConfig,
    rate_full: f64,
) -> EeSolution {
    // The ratio can never beat the best rate over the circuit floor.
    let mut lo = 0.0f64;
    let mut hi = rate_full / (circuit_mw / MW_PER_W);
    let tol = cfg.bisection_tol.unwrap_or(1e-10 * hi);
    let mut p = vec![0.0; links.len()];
    let mut iterations = 0;
    while hi - lo > tol && iterations < cfg.max_iter {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        inner_argmax(links, mid, params, cfg.count_transmit_power, &mut p);
        let rate = weighted_rate(links, &p, params);
        let denom = denominator_mw(&p, circuit_mw, cfg.count_transmit_power, params);
        if rate - mid * (denom / MW_PER_W) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let converged = hi - lo <= tol;
    let target = (0.5 * (lo + hi)).max(f64::MIN_POSITIVE);
    inner_argmax(links, target, params, cfg.count_transmit_power, &mut p);
    let ee = ratio_value(links, &p, circuit_mw, cfg.count_transmit_power, params);
    EeSolution {
        ee,
        powers: collect_powers(links, &p),
        iterations,
        converged,
    }
}

/// Best efficiency one link can reach on its own, charged its dynamic
/// electronics at both ends. Zero-gain (or zero-weight) links come back
/// with zero efficiency and zero power.
pub fn solve_link_ee(
    link: &RadioLink,
    user: &UserTerminal,
    ap: &AccessPoint,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<EeSolution> {
    if link.gain <= 0.0 {
        let powers = std::iter::once(((user.id, link.id), 0.0)).collect();
        return Ok(EeSolution {
            ee: 0.0,
            powers,
            iterations: 0,
            converged: true,
        });
    }
    let scope = [ScopeLink {
        user: user.id,
        link: link.id,
        weight: user.weight,
        gain: link.gain,
        p_max: link.p_max,
        floor: params.snr_gap * params.noise_variance / link.gain,
    }];
    solve_scope(&scope, link_circuit_mw(user, ap), params, cfg)
}

/// Optimal powers for a fixed set of active links under the fixed
/// circuit charge `circuit_mw` chosen by the caller's scope.
///
/// Every pair in `active` must resolve to a positive-gain link of one
/// of `users`; the caller decides which circuit terms the set incurs.
pub fn solve_active_set_ee(
    active: &ActiveLinkSet,
    users: &[UserTerminal],
    params: &SystemParams,
    circuit_mw: f64,
    cfg: &SolverConfig,
) -> Result<EeSolution> {
    let scope = scope_links(active, users, params)?;
    solve_scope(&scope, circuit_mw, params, cfg)
}

/// One link-activation decision taken while growing a scope.
#[derive(Debug, Clone)]
pub struct AdmissionStep {
    pub user: UserId,
    pub link: LinkId,
    /// Scope efficiency before this link joined.
    pub ee_before: f64,
    /// The candidate's standalone efficiency that justified admission.
    pub link_ee: f64,
    /// Scope efficiency after re-solving with the link included.
    pub ee_after: f64,
}

/// A link the user-level pass decided not to activate.
#[derive(Debug, Clone)]
pub struct RejectedLink {
    pub link: LinkId,
    /// The link's standalone efficiency (its admission credential).
    pub link_ee: f64,
}

/// Outcome of the user-level activation pass.
#[derive(Debug, Clone)]
pub struct UserEeOutcome {
    pub user: UserId,
    /// Optimum over the links the pass activated. Idle (zero) when the
    /// user has no viable link.
    pub solution: EeSolution,
    pub active: ActiveLinkSet,
    /// Admissions in the order they were made; `ee_after` never
    /// decreases along this log.
    pub admissions: Vec<AdmissionStep>,
    /// Viable candidates left inactive, best first.
    pub rejected: Vec<RejectedLink>,
}

/// Best efficiency a single user can reach, choosing both which links
/// to switch on and their powers.
///
/// Candidates (positive gain, positive weight) are ranked by standalone
/// efficiency and admitted greedily: a link joins while its standalone
/// efficiency is at least the current scope optimum, each admission
/// followed by a full re-solve; the first rejection ends the pass, and
/// everything after it is reported in `rejected`. This reproduces the
/// exhaustive subset optimum because a candidate below the current
/// optimum can only dilute any set it joins.
pub fn solve_user_ee(
    user: &UserTerminal,
    ap: &AccessPoint,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<UserEeOutcome> {
    if user.links.is_empty() {
        return Err(Error::NoLinks { user: user.id });
    }
    let mut ranked: Vec<(LinkId, f64)> = Vec::new();
    if user.weight > 0.0 {
        for link in &user.links {
            if link.gain > 0.0 {
                let sol = solve_link_ee(link, user, ap, params, cfg)?;
                ranked.push((link.id, sol.ee));
            }
        }
    }
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let mut active = ActiveLinkSet::new();
    let mut solution = EeSolution::idle();
    let mut admissions = Vec::new();
    let mut rejected = Vec::new();
    let scope_user = std::slice::from_ref(user);
    for (idx, &(link_id, link_ee)) in ranked.iter().enumerate() {
        if solution.ee <= link_ee {
            active.insert(user.id, link_id);
            let circuit = user_circuit_mw(&active, user, ap);
            let sol = solve_active_set_ee(&active, scope_user, params, circuit, cfg)?;
            for ((u, l), p) in sol.powers.iter() {
                if p <= EPS_ACTIVE {
                    return Err(Error::ClippedActiveLink { user: u, link: l });
                }
            }
            admissions.push(AdmissionStep {
                user: user.id,
                link: link_id,
                ee_before: solution.ee,
                link_ee,
                ee_after: sol.ee,
            });
            solution = sol;
        } else {
            rejected.extend(
                ranked[idx..]
                    .iter()
                    .map(|&(link, link_ee)| RejectedLink { link, link_ee }),
            );
            break;
        }
    }
    Ok(UserEeOutcome {
        user: user.id,
        solution,
        active,
        admissions,
        rejected,
    })
}
