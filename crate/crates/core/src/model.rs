//! Instance types and exact evaluation of rate, power, and efficiency.
//!
//! Conventions used throughout the crate:
//!
//! * every power value is carried in **milliwatts**;
//! * energy efficiency is reported in **bit/joule**, so the one and only
//!   mW → W conversion happens inside [`system_ee`] (and the solvers'
//!   equivalent ratio);
//! * a link is *active* when its transmit power is strictly positive.
//!   Circuit-power bookkeeping switches on activity, which is why the
//!   solvers snap powers below [`EPS_ACTIVE`] to exactly zero; a stray
//!   `1e-30` must not wake up a radio chain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Transmit powers at or below this threshold (mW) are considered "off".
/// Solvers snap anything smaller to exactly zero so that floating-point
/// residue never toggles a circuit-power charge.
pub const EPS_ACTIVE: f64 = 1e-12;

/// Milliwatts per watt, the single unit-conversion constant.
pub(crate) const MW_PER_W: f64 = 1e3;

/// Identifier of a user terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

/// Identifier of a radio link. Link ids are unique across the whole
/// instance, not just within one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Physical-layer constants shared by every link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Bandwidth per link in Hz.
    pub bandwidth_per_link: f64,
    /// SNR gap to capacity (linear, >= 1 for practical modulation).
    pub snr_gap: f64,
    /// Noise power per link in mW (noise density integrated over the
    /// link bandwidth).
    pub noise_variance: f64,
    /// Power-amplifier drain efficiency in (0, 1]: radiating `p` mW
    /// draws `p / amplifier_efficiency` mW from the supply.
    pub amplifier_efficiency: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("bandwidth_per_link", self.bandwidth_per_link),
            ("snr_gap", self.snr_gap),
            ("noise_variance", self.noise_variance),
            ("amplifier_efficiency", self.amplifier_efficiency),
        ];
        for (name, value) in checks {
            if value <= 0.0 || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        if self.amplifier_efficiency > 1.0 {
            return Err(Error::InvalidParameter {
                name: "amplifier_efficiency",
                value: self.amplifier_efficiency,
            });
        }
        if self.snr_gap < 1.0 {
            return Err(Error::InvalidParameter {
                name: "snr_gap",
                value: self.snr_gap,
            });
        }
        Ok(())
    }
}

/// One radio interface of a user terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioLink {
    pub id: LinkId,
    /// Channel power gain (linear, dimensionless). Zero means the link
    /// is unusable; solvers skip such links entirely.
    pub gain: f64,
    /// Per-link transmit power budget in mW.
    pub p_max: f64,
}

/// A user terminal with its radio interfaces and circuit-power figures.
#[derive(Debug, Clone, PartialEq)]
pub struct UserTerminal {
    pub id: UserId,
    /// Scheduling weight (priority) multiplying this user's rate.
    pub weight: f64,
    /// Dynamic circuit power per active radio chain, mW.
    pub p_dyn: f64,
    /// Static circuit power paid once while the user has any active
    /// link, mW.
    pub p_sta: f64,
    pub links: Vec<RadioLink>,
}

/// Receiver-side circuit power figures of the access point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessPoint {
    /// Dynamic receive power per active link, mW.
    pub p_dyn_rx: f64,
    /// Static power of the access point, mW. Paid unconditionally:
    /// the access point never sleeps, even with no user scheduled.
    pub p_sta_rx: f64,
}

/// Sparse map from (user, link) to transmit power in mW.
///
/// Absent pairs transmit nothing; explicit zero entries are permitted
/// and equivalent to absence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PowerAllocation {
    entries: BTreeMap<(UserId, LinkId), f64>,
}

impl PowerAllocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn power(&self, user: UserId, link: LinkId) -> f64 {
        self.entries.get(&(user, link)).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, user: UserId, link: LinkId, p_mw: f64) {
        self.entries.insert((user, link), p_mw);
    }

    pub fn remove(&mut self, user: UserId, link: LinkId) -> Option<f64> {
        self.entries.remove(&(user, link))
    }

    pub fn iter(&self) -> impl Iterator<Item = ((UserId, LinkId), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Pairs whose power is strictly above [`EPS_ACTIVE`].
    pub fn active_pairs(&self) -> impl Iterator<Item = (UserId, LinkId)> + '_ {
        self.entries
            .iter()
            .filter(|&(_, &p)| p > EPS_ACTIVE)
            .map(|(&k, _)| k)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that every entry refers to a link of the given instance
    /// and respects `0 <= p <= p_max`.
    pub fn validate(&self, users: &[UserTerminal]) -> Result<()> {
        let mut budget = BTreeMap::new();
        for user in users {
            for link in &user.links {
                budget.insert((user.id, link.id), link.p_max);
            }
        }
        for ((user, link), p) in self.iter() {
            let Some(&p_max) = budget.get(&(user, link)) else {
                return Err(Error::UnknownLink { user, link });
            };
            if !(0.0..=p_max).contains(&p) || !p.is_finite() {
                return Err(Error::PowerOutOfRange {
                    link,
                    power: p,
                    p_max,
                });
            }
        }
        Ok(())
    }
}

impl FromIterator<((UserId, LinkId), f64)> for PowerAllocation {
    fn from_iter<T: IntoIterator<Item = ((UserId, LinkId), f64)>>(iter: T) -> Self {
        Self {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Consumed power split by origin, all in mW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    /// Amplifier drain, `sum(p) / amplifier_efficiency`.
    pub transmit: f64,
    /// Dynamic circuit power of user radio chains.
    pub user_dynamic: f64,
    /// Static circuit power of users with at least one active link.
    pub user_static: f64,
    /// Dynamic receive power at the access point.
    pub ap_dynamic: f64,
    /// Static access-point power (always present).
    pub ap_static: f64,
    pub total: f64,
}

/// 1 if `x > 0`, else 0. Exact: no tolerance is applied here, which is
/// why powers must be snapped to zero before they reach the model.
pub fn indicator(x: f64) -> u32 {
    (x > 0.0) as u32
}

/// Shannon rate of one link in bit/s at transmit power `p_mw`.
pub fn link_rate(p_mw: f64, link: &RadioLink, params: &SystemParams) -> Result<f64> {
    if !(0.0..=link.p_max).contains(&p_mw) || !p_mw.is_finite() {
        return Err(Error::PowerOutOfRange {
            link: link.id,
            power: p_mw,
            p_max: link.p_max,
        });
    }
    Ok(rate_bps(p_mw, link.gain, params))
}

/// Rate in bit/s without budget checks; shared with the solvers.
pub(crate) fn rate_bps(p_mw: f64, gain: f64, params: &SystemParams) -> f64 {
    let snr = p_mw * gain / (params.snr_gap * params.noise_variance);
    params.bandwidth_per_link * snr.ln_1p() / std::f64::consts::LN_2
}

/// Weighted sum rate of the whole system in bit/s.
pub fn system_rate(
    alloc: &PowerAllocation,
    users: &[UserTerminal],
    params: &SystemParams,
) -> Result<f64> {
    alloc.validate(users)?;
    let mut sum = 0.0;
    for user in users {
        for link in &user.links {
            let p = alloc.power(user.id, link.id);
            if p > 0.0 {
                sum += user.weight * rate_bps(p, link.gain, params);
            }
        }
    }
    Ok(sum)
}

/// Total consumed power of the system in mW, split by origin.
///
/// Static user power is charged only to users with an active link; the
/// access point's static power is charged unconditionally.
pub fn total_power(
    alloc: &PowerAllocation,
    users: &[UserTerminal],
    ap: &AccessPoint,
    params: &SystemParams,
) -> Result<PowerBreakdown> {
    alloc.validate(users)?;
    let mut transmit = 0.0;
    let mut user_dynamic = 0.0;
    let mut user_static = 0.0;
    let mut ap_dynamic = 0.0;
    for user in users {
        let mut active_links = 0;
        for link in &user.links {
            let p = alloc.power(user.id, link.id);
            transmit += p / params.amplifier_efficiency;
            active_links += indicator(p);
        }
        let n = f64::from(active_links);
        user_dynamic += n * user.p_dyn;
        user_static += f64::from(indicator(n)) * user.p_sta;
        ap_dynamic += n * ap.p_dyn_rx;
    }
    let ap_static = ap.p_sta_rx;
    Ok(PowerBreakdown {
        transmit,
        user_dynamic,
        user_static,
        ap_dynamic,
        ap_static,
        total: transmit + user_dynamic + user_static + ap_dynamic + ap_static,
    })
}

/// System energy efficiency in bit/joule: weighted sum rate over total
/// consumed power. A spent-nothing, sent-nothing system has efficiency
/// zero by convention.
pub fn system_ee(
    alloc: &PowerAllocation,
    users: &[UserTerminal],
    ap: &AccessPoint,
    params: &SystemParams,
) -> Result<f64> {
    let rate = system_rate(alloc, users, params)?;
    let power = total_power(alloc, users, ap, params)?;
    Ok(ratio_bit_per_joule(rate, power.total))
}

/// bit/s over mW → bit/joule. Zero power yields zero efficiency.
pub(crate) fn ratio_bit_per_joule(rate_bps: f64, power_mw: f64) -> f64 {
    if power_mw <= 0.0 {
        0.0
    } else {
        rate_bps / (power_mw / MW_PER_W)
    }
}

/// Structural checks on an instance: positive budgets, nonnegative
/// gains and circuit powers, and globally unique user and link ids.
pub fn validate_instance(
    users: &[UserTerminal],
    ap: &AccessPoint,
    params: &SystemParams,
) -> Result<()> {
    params.validate()?;
    for (name, value) in [("p_dyn_rx", ap.p_dyn_rx), ("p_sta_rx", ap.p_sta_rx)] {
        if value < 0.0 || !value.is_finite() {
            return Err(Error::InvalidParameter { name, value });
        }
    }
    let mut user_ids = BTreeSet::new();
    let mut link_ids = BTreeSet::new();
    for user in users {
        if !user_ids.insert(user.id) {
            return Err(Error::DuplicateUser { user: user.id });
        }
        for (name, value) in [
            ("weight", user.weight),
            ("p_dyn", user.p_dyn),
            ("p_sta", user.p_sta),
        ] {
            if value < 0.0 || !value.is_finite() {
                return Err(Error::InvalidParameter { name, value });
            }
        }
        for link in &user.links {
            if !link_ids.insert(link.id) {
                return Err(Error::DuplicateLink { link: link.id });
            }
            if link.gain < 0.0 || !link.gain.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "gain",
                    value: link.gain,
                });
            }
            if link.p_max <= 0.0 || !link.p_max.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "p_max",
                    value: link.p_max,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> SystemParams {
        SystemParams {
            bandwidth_per_link: 15_000.0,
            snr_gap: 1.0,
            noise_variance: 1.0,
            amplifier_efficiency: 0.38,
        }
    }

    fn one_user_instance() -> (Vec<UserTerminal>, AccessPoint) {
        let user = UserTerminal {
            id: UserId(0),
            weight: 1.0,
            p_dyn: 30.0,
            p_sta: 100.0,
            links: vec![
                RadioLink {
                    id: LinkId(0),
                    gain: 1.0,
                    p_max: 316.0,
                },
                RadioLink {
                    id: LinkId(1),
                    gain: 0.5,
                    p_max: 316.0,
                },
            ],
        };
        let ap = AccessPoint {
            p_dyn_rx: 45.0,
            p_sta_rx: 5_000.0,
        };
        (vec![user], ap)
    }

    #[test]
    fn indicator_is_exact() {
        assert_eq!(indicator(0.0), 0);
        assert_eq!(indicator(5.0), 1);
        assert_eq!(indicator(1e-300), 1);
        assert_eq!(indicator(-1.0), 0);
    }

    #[test]
    fn rate_at_snr_three_doubles_bandwidth() {
        // snr = 3 gives log2(4) = 2 bits per symbol.
        let link = RadioLink {
            id: LinkId(0),
            gain: 1.0,
            p_max: 10.0,
        };
        let r = link_rate(3.0, &link, &params()).unwrap();
        assert_relative_eq!(r, 30_000.0, max_relative = 1e-12);
        assert_eq!(link_rate(0.0, &link, &params()).unwrap(), 0.0);
        let r1 = link_rate(1.0, &link, &params()).unwrap();
        assert_relative_eq!(r1, 15_000.0, max_relative = 1e-12);
    }

    #[test]
    fn rate_rejects_out_of_budget_power() {
        let link = RadioLink {
            id: LinkId(0),
            gain: 1.0,
            p_max: 10.0,
        };
        assert!(link_rate(-1.0, &link, &params()).is_err());
        assert!(link_rate(10.5, &link, &params()).is_err());
    }

    #[test]
    fn zero_gain_link_carries_nothing() {
        let link = RadioLink {
            id: LinkId(0),
            gain: 0.0,
            p_max: 10.0,
        };
        assert_eq!(link_rate(10.0, &link, &params()).unwrap(), 0.0);
    }

    #[test]
    fn system_rate_weights_users() {
        let (mut users, _) = one_user_instance();
        let mut second = users[0].clone();
        second.id = UserId(1);
        second.weight = 2.0;
        second.links = vec![RadioLink {
            id: LinkId(10),
            gain: 1.0,
            p_max: 316.0,
        }];
        users.push(second);

        let mut alloc = PowerAllocation::new();
        alloc.set(UserId(0), LinkId(0), 1.0); // snr 1 -> 15 kbit/s
        alloc.set(UserId(1), LinkId(10), 1.0); // weighted twice
        let r = system_rate(&alloc, &users, &params()).unwrap();
        assert_relative_eq!(r, 45_000.0, max_relative = 1e-12);

        let empty = PowerAllocation::new();
        assert_eq!(system_rate(&empty, &users, &params()).unwrap(), 0.0);
    }

    #[test]
    fn power_breakdown_matches_hand_computation() {
        let (users, ap) = one_user_instance();
        let mut alloc = PowerAllocation::new();
        alloc.set(UserId(0), LinkId(0), 100.0);
        let b = total_power(&alloc, &users, &ap, &params()).unwrap();
        assert_relative_eq!(b.transmit, 263.158, max_relative = 1e-5);
        assert_eq!(b.user_dynamic, 30.0);
        assert_eq!(b.user_static, 100.0);
        assert_eq!(b.ap_dynamic, 45.0);
        assert_eq!(b.ap_static, 5_000.0);
        assert_relative_eq!(b.total, 5_438.158, max_relative = 1e-5);
    }

    #[test]
    fn ap_static_power_is_unconditional() {
        let (users, ap) = one_user_instance();
        let empty = PowerAllocation::new();
        let b = total_power(&empty, &users, &ap, &params()).unwrap();
        assert_eq!(b.transmit, 0.0);
        assert_eq!(b.user_dynamic, 0.0);
        assert_eq!(b.user_static, 0.0);
        assert_eq!(b.ap_dynamic, 0.0);
        assert_eq!(b.total, 5_000.0);
        // ... and idle efficiency is zero, not NaN.
        assert_eq!(system_ee(&empty, &users, &ap, &params()).unwrap(), 0.0);
    }

    #[test]
    fn dynamic_power_counts_each_active_link() {
        let (users, ap) = one_user_instance();
        let mut alloc = PowerAllocation::new();
        alloc.set(UserId(0), LinkId(0), 10.0);
        alloc.set(UserId(0), LinkId(1), 10.0);
        let b = total_power(&alloc, &users, &ap, &params()).unwrap();
        assert_eq!(b.user_dynamic, 60.0);
        assert_eq!(b.ap_dynamic, 90.0);
        assert_eq!(b.user_static, 100.0);

        // An explicit zero entry is not an active link.
        alloc.set(UserId(0), LinkId(1), 0.0);
        let b = total_power(&alloc, &users, &ap, &params()).unwrap();
        assert_eq!(b.user_dynamic, 30.0);
    }

    #[test]
    fn ee_is_rate_over_watts() {
        // 15 kbit/s over exactly 5 W -> 3000 bit/J.
        let users = vec![UserTerminal {
            id: UserId(0),
            weight: 1.0,
            p_dyn: 0.0,
            p_sta: 0.0,
            links: vec![RadioLink {
                id: LinkId(0),
                gain: 1.0,
                p_max: 10.0,
            }],
        }];
        let ap = AccessPoint {
            p_dyn_rx: 0.0,
            p_sta_rx: 5_000.0 - 1.0 / 0.38,
        };
        let mut alloc = PowerAllocation::new();
        alloc.set(UserId(0), LinkId(0), 1.0);
        let ee = system_ee(&alloc, &users, &ap, &params()).unwrap();
        assert_relative_eq!(ee, 3_000.0, max_relative = 1e-12);
    }

    #[test]
    fn allocation_validation_catches_strays() {
        let (users, _) = one_user_instance();
        let mut alloc = PowerAllocation::new();
        alloc.set(UserId(3), LinkId(0), 1.0);
        assert!(matches!(
            alloc.validate(&users),
            Err(Error::UnknownLink { .. })
        ));
        let mut over = PowerAllocation::new();
        over.set(UserId(0), LinkId(0), 400.0);
        assert!(matches!(
            over.validate(&users),
            Err(Error::PowerOutOfRange { .. })
        ));
    }

    #[test]
    fn instance_validation_catches_duplicate_ids() {
        let (mut users, ap) = one_user_instance();
        let mut clone = users[0].clone();
        clone.id = UserId(1);
        users.push(clone); // duplicates link ids 0 and 1
        assert!(matches!(
            validate_instance(&users, &ap, &params()),
            Err(Error::DuplicateLink { .. })
        ));
    }

    proptest! {
        // Adding or removing explicit zero entries never changes any
        // evaluation result, bit for bit.
        #[test]
        fn zero_entries_are_inert(p in 0.0..316.0f64) {
            let (users, ap) = one_user_instance();
            let mut with_zero = PowerAllocation::new();
            with_zero.set(UserId(0), LinkId(0), p);
            with_zero.set(UserId(0), LinkId(1), 0.0);
            let mut without = PowerAllocation::new();
            without.set(UserId(0), LinkId(0), p);

            let pr = params();
            prop_assert_eq!(
                system_rate(&with_zero, &users, &pr).unwrap(),
                system_rate(&without, &users, &pr).unwrap()
            );
            prop_assert_eq!(
                total_power(&with_zero, &users, &ap, &pr).unwrap().total,
                total_power(&without, &users, &ap, &pr).unwrap().total
            );
            prop_assert_eq!(
                system_ee(&with_zero, &users, &ap, &pr).unwrap(),
                system_ee(&without, &users, &ap, &pr).unwrap()
            );
        }

        // Rate is concave and nondecreasing in each link power; total
        // power is affine increasing.
        #[test]
        fn rate_concave_power_affine(p in 0.0..300.0f64, h in 0.1..8.0f64) {
            let (users, ap) = one_user_instance();
            let pr = params();
            let at = |x: f64| {
                let mut a = PowerAllocation::new();
                a.set(UserId(0), LinkId(0), x);
                (
                    system_rate(&a, &users, &pr).unwrap(),
                    total_power(&a, &users, &ap, &pr).unwrap().total,
                )
            };
            let (r0, w0) = at(p);
            let (r1, w1) = at(p + h);
            let (r2, w2) = at(p + 2.0 * h);
            prop_assert!(r1 >= r0 && r2 >= r1);
            // second difference <= 0 up to rounding noise
            prop_assert!(r2 - r1 <= r1 - r0 + 1e-6);
            let step = h / pr.amplifier_efficiency;
            prop_assert!(((w1 - w0) - step).abs() <= 1e-6 * step);
            prop_assert!(((w2 - w1) - step).abs() <= 1e-6 * step);
        }

        // Scaling every weight by c scales rate and efficiency by c.
        #[test]
        fn weight_scaling_is_linear(c in 0.1..10.0f64, p in 1.0..300.0f64) {
            let (users, ap) = one_user_instance();
            let mut scaled = users.clone();
            scaled[0].weight *= c;
            let mut alloc = PowerAllocation::new();
            alloc.set(UserId(0), LinkId(0), p);
            let pr = params();
            let base = system_ee(&alloc, &users, &ap, &pr).unwrap();
            let up = system_ee(&alloc, &scaled, &ap, &pr).unwrap();
            prop_assert!((up - c * base).abs() <= 1e-12 * up.abs());
        }
    }
}
