//! Energy-efficient operation of a multi-user, multi-radio uplink.
//!
//! A population of user terminals, each equipped with several radio
//! interfaces of different channel gains, transmits to one access point.
//! Keeping a radio on costs dynamic circuit power at both ends, keeping a
//! user awake costs static circuit power, and the access point pays a
//! static charge regardless of load. The question answered here is which
//! links to activate, which users to schedule, and at what transmit
//! powers, so that system energy efficiency (weighted bits per joule) is
//! maximized.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: instance types plus exact rate / power / efficiency
//!   evaluation,
//! * [`solver`]: fractional-program solvers for a single link, a single
//!   user, and an arbitrary fixed set of active links,
//! * [`scheduler`]: the two-stage greedy activation that assembles the
//!   system-wide operating point,
//! * [`oracle`]: brute-force reference optimizers used to validate the
//!   fast path,
//! * [`scenario`]: reproducible random instance generation (path loss,
//!   shadowing, fading),
//! * [`sweep`]: the experiment harness comparing scheduling schemes
//!   across parameter sweeps.

pub mod error;
pub mod model;
pub mod oracle;
pub mod scenario;
pub mod scheduler;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
