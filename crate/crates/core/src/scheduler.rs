//! System-wide link activation and user scheduling.
//!
//! The schedule is built in two stages. First every user is solved in
//! isolation ([`solve_user_ee`]), which yields per-user link bundles
//! plus the links each user turned down. Both kinds become *units*: a
//! [`UnitKind::User`] unit carries a user's whole activated bundle and
//! its static charge, a [`UnitKind::Standby`] unit carries one turned-
//! down link and no static charge, since its owner is already awake by
//! the time the unit can possibly be admitted.
//!
//! Second, all units are ranked by their standalone efficiency and
//! admitted greedily against the growing system-wide optimum, exactly
//! mirroring the user-level pass one scope up. The first unit that
//! would dilute the running optimum ends the pass; order makes every
//! later unit worse. Complexity is linear in the number of links apart
//! from the sort.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    self, AccessPoint, PowerAllocation, PowerBreakdown, SystemParams, UserId, UserTerminal,
    EPS_ACTIVE,
};
use crate::solver::{
    solve_active_set_ee, solve_user_ee, system_circuit_mw, ActiveLinkSet, EeSolution, SolverConfig,
    UserEeOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    /// A user's own activated link bundle.
    User,
    /// A single link its owner turned down at user level, kept on
    /// standby for system-level admission.
    Standby,
}

/// One candidate for system-level admission.
#[derive(Debug, Clone)]
pub struct ScheduleUnit {
    pub kind: UnitKind,
    pub source_user: UserId,
    pub links: ActiveLinkSet,
    /// Standalone efficiency: the user-level optimum for `User` units,
    /// the single-link optimum for `Standby` units.
    pub ee: f64,
    /// Static power admission adds: the owner's static draw for `User`
    /// units, zero for `Standby` units.
    pub static_charge: f64,
}

/// One system-level admission with the efficiencies around it.
#[derive(Debug, Clone)]
pub struct Admission {
    pub unit: ScheduleUnit,
    pub ee_before: f64,
    pub ee_after: f64,
}

#[derive(Debug, Clone)]
pub struct ScheduleResult {
    pub active_links: ActiveLinkSet,
    pub scheduled_users: BTreeSet<UserId>,
    pub allocation: PowerAllocation,
    /// System efficiency at the final operating point, bit/joule.
    pub ee: f64,
    /// Weighted sum rate, bit/s.
    pub rate: f64,
    pub power: PowerBreakdown,
    /// Admissions in order; `ee_after` never decreases along the log
    /// and the last entry equals `ee`.
    pub admissions: Vec<Admission>,
}

fn kind_rank(kind: UnitKind) -> u8 {
    match kind {
        UnitKind::User => 0,
        UnitKind::Standby => 1,
    }
}

/// Assembles and ranks admission units from per-user outcomes
/// (`outcomes[i]` must belong to `users[i]`).
///
/// Ranking is by standalone efficiency, descending. Ties break in favor
/// of `User` units, then by user and link id, making the order total
/// and the schedule reproducible. A standby unit always trails its
/// owner's `User` unit because its credential lost to that optimum.
pub fn build_units(users: &[UserTerminal], outcomes: &[UserEeOutcome]) -> Vec<ScheduleUnit> {
    debug_assert_eq!(users.len(), outcomes.len());
    let mut units = Vec::new();
    for (user, out) in users.iter().zip(outcomes) {
        debug_assert_eq!(user.id, out.user);
        if !out.active.is_empty() {
            units.push(ScheduleUnit {
                kind: UnitKind::User,
                source_user: user.id,
                links: out.active.clone(),
                ee: out.solution.ee,
                static_charge: user.p_sta,
            });
        }
        for rej in &out.rejected {
            units.push(ScheduleUnit {
                kind: UnitKind::Standby,
                source_user: user.id,
                links: ActiveLinkSet::singleton(user.id, rej.link),
                ee: rej.link_ee,
                static_charge: 0.0,
            });
        }
    }
    units.sort_by(|a, b| {
        b.ee.partial_cmp(&a.ee)
            .unwrap()
            .then_with(|| kind_rank(a.kind).cmp(&kind_rank(b.kind)))
            .then_with(|| a.source_user.cmp(&b.source_user))
            .then_with(|| a.links.iter().next().cmp(&b.links.iter().next()))
    });
    units
}

/// Computes the full operating point: which users to schedule, which
/// links to switch on, and the transmit powers, maximizing system
/// efficiency under the complete power model.
///
/// Requires at least one user with a positive-gain link and positive
/// weight; everything else is reported, not padded over.
pub fn schedule(
    users: &[UserTerminal],
    ap: &AccessPoint,
    params: &SystemParams,
    cfg: &SolverConfig,
) -> Result<ScheduleResult> {
    model::validate_instance(users, ap, params)?;
    let outcomes: Vec<UserEeOutcome> = users
        .par_iter()
        .map(|u| solve_user_ee(u, ap, params, cfg))
        .collect::<Result<_>>()?;
    let units = build_units(users, &outcomes);
    if units.is_empty() {
        return Err(Error::NoViableLinks);
    }

    let mut active = ActiveLinkSet::new();
    let mut scheduled = BTreeSet::new();
    let mut current = EeSolution {
        ee: 0.0,
        powers: PowerAllocation::new(),
        iterations: 0,
        converged: true,
    };
    let mut admissions = Vec::new();
    for unit in units {
        if current.ee > unit.ee {
            // Units are sorted, so nothing after this one can pass.
            break;
        }
        if unit.kind == UnitKind::Standby && !scheduled.contains(&unit.source_user) {
            let (u, l) = unit.links.iter().next().expect("standby unit has one link");
            return Err(Error::StandbyBeforeSource { user: u, link: l });
        }
        let mut trial = active.clone();
        trial.union_with(&unit.links);
        let circuit = system_circuit_mw(&trial, users, ap);
        let sol = solve_active_set_ee(&trial, users, params, circuit, cfg)?;
        for ((u, l), p) in sol.powers.iter() {
            if p <= EPS_ACTIVE {
                return Err(Error::ClippedActiveLink { user: u, link: l });
            }
        }
        scheduled.insert(unit.source_user);
        admissions.push(Admission {
            ee_before: current.ee,
            ee_after: sol.ee,
            unit,
        });
        active = trial;
        current = sol;
    }

    let allocation = current.powers;
    let rate = model::system_rate(&allocation, users, params)?;
    let power = model::total_power(&allocation, users, ap, params)?;
    let ee = if cfg.count_transmit_power {
        model::system_ee(&allocation, users, ap, params)?
    } else {
        crate::model::ratio_bit_per_joule(rate, system_circuit_mw(&active, users, ap))
    };
    debug_assert_eq!(scheduled, active.users());
    Ok(ScheduleResult {
        active_links: active,
        scheduled_users: scheduled,
        allocation,
        ee,
        rate,
        power,
        admissions,
    })
}
