//! Parameter sweeps comparing scheduling schemes.
//!
//! A sweep crosses one axis (per-link budget in dBm, or access-point
//! static power in mW) with a number of independent trials. Each
//! (value, trial) cell generates one scenario (trial `t` always uses
//! seed `base + t`, so the same channel draws face every axis value)
//! and runs every requested scheme on it. Rows aggregate the trials per
//! (value, scheme). Cells are evaluated in parallel but aggregated in a
//! fixed order, so the output is byte-identical regardless of thread
//! count.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, PowerAllocation, UserId};
use crate::oracle::{global_oracle, ORACLE_MAX_LINKS};
use crate::scenario::{self, Scenario, ScenarioConfig};
use crate::scheduler::schedule;
use crate::solver::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Per-link transmit budget, dBm.
    PMaxDbm,
    /// Access-point static power, mW.
    PSta0Mw,
}

impl SweepAxis {
    pub fn column_name(self) -> &'static str {
        match self {
            SweepAxis::PMaxDbm => "p_max_dbm",
            SweepAxis::PSta0Mw => "p_sta_0_mw",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::PMaxDbm => (0..=45).step_by(5).map(f64::from).collect(),
            SweepAxis::PSta0Mw => vec![0.0, 10.0, 100.0, 1_000.0, 5_000.0, 1e4, 1e5],
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            SweepAxis::PMaxDbm => cfg.p_max = value,
            SweepAxis::PSta0Mw => cfg.p_sta_0 = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    /// The full greedy activation under the complete power model.
    EeOptimal,
    /// Exhaustive subset enumeration where it fits (at most
    /// [`ORACLE_MAX_LINKS`] candidate links); otherwise the greedy
    /// operating point stands in and the row is flagged as a surrogate.
    DinkelbachGlobal,
    /// Scheduling that only bills the transmitter side; evaluated under
    /// the complete model afterwards.
    EeTransmitter,
    /// Scheduling that only bills the receiver side (circuit power at
    /// full budgets); evaluated under the complete model afterwards.
    EeReceiver,
    /// Everything on at full budget, the rate-maximal baseline.
    ThroughputOptimal,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::EeOptimal,
        Scheme::DinkelbachGlobal,
        Scheme::EeTransmitter,
        Scheme::EeReceiver,
        Scheme::ThroughputOptimal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::EeOptimal => "ee-optimal",
            Scheme::DinkelbachGlobal => "dinkelbach-global",
            Scheme::EeTransmitter => "ee-transmitter",
            Scheme::EeReceiver => "ee-receiver",
            Scheme::ThroughputOptimal => "throughput-optimal",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|sch| sch.name() == s)
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Axis values, ascending.
    pub values: Vec<f64>,
    /// Scenarios per axis value.
    pub trials: usize,
    pub schemes: Vec<Scheme>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidParameter {
                name: "values",
                value: 0.0,
            });
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter {
                name: "values",
                value: f64::NAN,
            });
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter {
                name: "trials",
                value: 0.0,
            });
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidParameter {
                name: "schemes",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// One aggregated line of sweep output.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub scheme: Scheme,
    /// True when `DinkelbachGlobal` had to fall back to the greedy
    /// operating point because enumeration would not fit.
    pub surrogate: bool,
    pub mean_ee: f64,
    pub mean_rate: f64,
    pub mean_users: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy)]
struct SchemeOutcome {
    ee: f64,
    rate: f64,
    scheduled_users: usize,
    surrogate: bool,
}

/// Rate, efficiency, and scheduled-user count of an allocation under
/// the complete power model, whatever scheme produced it.
fn evaluate(alloc: &PowerAllocation, scen: &Scenario) -> Result<(f64, f64, usize)> {
    let ee = model::system_ee(alloc, &scen.users, &scen.ap, &scen.params)?;
    let rate = model::system_rate(alloc, &scen.users, &scen.params)?;
    let users: BTreeSet<UserId> = alloc.active_pairs().map(|(u, _)| u).collect();
    Ok((ee, rate, users.len()))
}

fn run_scheme(scheme: Scheme, scen: &Scenario) -> Result<SchemeOutcome> {
    let cfg = SolverConfig::default();
    let (alloc, surrogate) = match scheme {
        Scheme::EeOptimal => (
            schedule(&scen.users, &scen.ap, &scen.params, &cfg)?.allocation,
            false,
        ),
        Scheme::DinkelbachGlobal => {
            if scen.positive_gain_links() <= ORACLE_MAX_LINKS {
                (
                    global_oracle(&scen.users, &scen.ap, &scen.params, &cfg)?.allocation,
                    false,
                )
            } else {
                (
                    schedule(&scen.users, &scen.ap, &scen.params, &cfg)?.allocation,
                    true,
                )
            }
        }
        Scheme::EeTransmitter => {
            // The transmitter-side objective sees no receiver
            // electronics at all.
            let blind_ap = model::AccessPoint {
                p_dyn_rx: 0.0,
                p_sta_rx: 0.0,
            };
            (
                schedule(&scen.users, &blind_ap, &scen.params, &cfg)?.allocation,
                false,
            )
        }
        Scheme::EeReceiver => {
            // The receiver-side objective ignores user electronics and
            // the amplifier drain, so rate is free and every selected
            // link transmits at full budget.
            let blind_users: Vec<_> = scen
                .users
                .iter()
                .map(|u| model::UserTerminal {
                    p_dyn: 0.0,
                    p_sta: 0.0,
                    ..u.clone()
                })
                .collect();
            let rx_cfg = SolverConfig {
                count_transmit_power: false,
                ..cfg
            };
            (
                schedule(&blind_users, &scen.ap, &scen.params, &rx_cfg)?.allocation,
                false,
            )
        }
        Scheme::ThroughputOptimal => {
            let alloc: PowerAllocation = scen
                .users
                .iter()
                .flat_map(|u| u.links.iter().map(move |l| ((u.id, l.id), l.p_max)))
                .collect();
            (alloc, false)
        }
    };
    let (ee, rate, scheduled_users) = evaluate(&alloc, scen)?;
    Ok(SchemeOutcome {
        ee,
        rate,
        scheduled_users,
        surrogate,
    })
}

pub fn run_sweep(spec: &SweepSpec, base: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    base.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.values.len())
        .flat_map(|vi| (0..spec.trials).map(move |t| (vi, t)))
        .collect();
    let outcomes: Vec<Vec<SchemeOutcome>> = cells
        .par_iter()
        .map(|&(vi, t)| -> Result<Vec<SchemeOutcome>> {
            let mut cfg = base.clone();
            spec.axis.apply(&mut cfg, spec.values[vi]);
            cfg.seed = base.seed.wrapping_add(t as u64);
            let scen = scenario::generate(&cfg)?;
            spec.schemes.iter().map(|&s| run_scheme(s, &scen)).collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(spec.values.len() * spec.schemes.len());
    for (vi, &value) in spec.values.iter().enumerate() {
        for (si, &scheme) in spec.schemes.iter().enumerate() {
            let mut ee = 0.0;
            let mut rate = 0.0;
            let mut users = 0.0;
            let mut surrogate = false;
            for t in 0..spec.trials {
                let o = outcomes[vi * spec.trials + t][si];
                ee += o.ee;
                rate += o.rate;
                users += o.scheduled_users as f64;
                surrogate |= o.surrogate;
            }
            let n = spec.trials as f64;
            rows.push(SweepRow {
                axis: spec.axis,
                value,
                scheme,
                surrogate,
                mean_ee: ee / n,
                mean_rate: rate / n,
                mean_users: users / n,
                trials: spec.trials,
            });
        }
    }
    Ok(rows)
}

fn scheme_label(row: &SweepRow) -> String {
    if row.surrogate {
        format!("{}(surrogate)", row.scheme.name())
    } else {
        row.scheme.name().to_string()
    }
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("axis,value,scheme,mean_ee_bit_per_joule,mean_rate_bps,mean_users,trials\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.axis.column_name(),
            row.value,
            scheme_label(row),
            row.mean_ee,
            row.mean_rate,
            row.mean_users,
            row.trials
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Csv,
    Chart,
}

/// Writes sweep output into `out_dir` and returns the files created:
/// `sweep.csv` for [`EmitFormat::Csv`], `sweep_ee.svg` plus
/// `sweep_users.svg` for [`EmitFormat::Chart`].
pub fn emit(rows: &[SweepRow], format: EmitFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        return Err(Error::EmptyRows);
    }
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source: std::io::Error| Error::Io {
            path: path.clone(),
            source,
        }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    match format {
        EmitFormat::Csv => {
            let path = out_dir.join("sweep.csv");
            fs::write(&path, csv_string(rows)).map_err(io_err(&path))?;
            Ok(vec![path])
        }
        EmitFormat::Chart => {
            let ee = out_dir.join("sweep_ee.svg");
            fs::write(&ee, svg_chart(rows, ChartMetric::MeanEe)).map_err(io_err(&ee))?;
            let users = out_dir.join("sweep_users.svg");
            fs::write(&users, svg_chart(rows, ChartMetric::MeanUsers)).map_err(io_err(&users))?;
            Ok(vec![ee, users])
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum ChartMetric {
    MeanEe,
    MeanUsers,
}

impl ChartMetric {
    fn label(self) -> &'static str {
        match self {
            ChartMetric::MeanEe => "mean energy efficiency (bit/J)",
            ChartMetric::MeanUsers => "mean scheduled users",
        }
    }

    fn pick(self, row: &SweepRow) -> f64 {
        match self {
            ChartMetric::MeanEe => row.mean_ee,
            ChartMetric::MeanUsers => row.mean_users,
        }
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if (0.01..10_000.0).contains(&v.abs()) {
        format!("{v:.2}")
    } else {
        format!("{v:.2e}")
    }
}

/// Hand-rolled line chart; categorical x positions so both linear and
/// logarithmic-looking sweeps stay readable.
fn svg_chart(rows: &[SweepRow], metric: ChartMetric) -> String {
    const W: f64 = 880.0;
    const H: f64 = 520.0;
    const L: f64 = 90.0;
    const R: f64 = 250.0;
    const T: f64 = 46.0;
    const B: f64 = 64.0;
    const PALETTE: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    ];
    let plot_w = W - L - R;
    let plot_h = H - T - B;

    let mut values: Vec<f64> = Vec::new();
    for row in rows {
        if !values.contains(&row.value) {
            values.push(row.value);
        }
    }
    let mut series: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
    for row in rows {
        let label = scheme_label(row);
        let xi = values.iter().position(|&v| v == row.value).unwrap();
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push((xi, metric.pick(row))),
            None => series.push((label, vec![(xi, metric.pick(row))])),
        }
    }
    let y_max = rows
        .iter()
        .map(|r| metric.pick(r))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE)
        * 1.08;
    let x_at = |i: usize| -> f64 {
        if values.len() == 1 {
            L + plot_w / 2.0
        } else {
            L + plot_w * i as f64 / (values.len() - 1) as f64
        }
    };
    let y_at = |v: f64| -> f64 { T + plot_h * (1.0 - v / y_max) };

    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="13">
<rect width="{W}" height="{H}" fill="white"/>
"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="26" text-anchor="middle" font-size="16">{} vs {}</text>"#,
        L + plot_w / 2.0,
        metric.label(),
        rows[0].axis.column_name()
    );
    // axes
    let _ = writeln!(
        s,
        r#"<line x1="{L}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        T + plot_h,
        L + plot_w,
        T + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{L}" y1="{T}" x2="{L}" y2="{}" stroke="black"/>"#,
        T + plot_h
    );
    // y grid and ticks
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let y = y_at(v);
        if i > 0 {
            let _ = writeln!(
                s,
                r##"<line x1="{L}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#dddddd"/>"##,
                L + plot_w
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            L - 8.0,
            y + 4.0,
            format_tick(v)
        );
    }
    // x ticks
    for (i, v) in values.iter().enumerate() {
        let x = x_at(i);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            T + plot_h,
            T + plot_h + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            T + plot_h + 22.0,
            format_tick(*v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        L + plot_w / 2.0,
        H - 16.0,
        rows[0].axis.column_name()
    );
    let _ = writeln!(
        s,
        r#"<text x="24" y="{}" text-anchor="middle" transform="rotate(-90 24 {})">{}</text>"#,
        T + plot_h / 2.0,
        T + plot_h / 2.0,
        metric.label()
    );
    // series
    for (si, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut points = String::new();
        for &(xi, v) in pts {
            let _ = write!(points, "{:.2},{:.2} ", x_at(xi), y_at(v));
        }
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.trim_end()
        );
        for &(xi, v) in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                x_at(xi),
                y_at(v)
            );
        }
        let ly = T + 14.0 + 22.0 * si as f64;
        let lx = L + plot_w + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 26.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{label}</text>"#,
            lx + 32.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ScenarioConfig {
        ScenarioConfig {
            num_users: 2,
            links_per_user: 2,
            seed: 12,
            ..ScenarioConfig::default()
        }
    }

    fn tiny_spec() -> SweepSpec {
        SweepSpec {
            axis: SweepAxis::PMaxDbm,
            values: vec![20.0, 25.0],
            trials: 2,
            schemes: vec![Scheme::EeOptimal, Scheme::ThroughputOptimal],
        }
    }

    #[test]
    fn rows_come_out_value_major_in_spec_order() {
        let rows = run_sweep(&tiny_spec(), &tiny_config()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].value, 20.0);
        assert_eq!(rows[0].scheme, Scheme::EeOptimal);
        assert_eq!(rows[1].value, 20.0);
        assert_eq!(rows[1].scheme, Scheme::ThroughputOptimal);
        assert_eq!(rows[2].value, 25.0);
        for row in &rows {
            assert_eq!(row.trials, 2);
            assert!(row.mean_ee > 0.0);
            assert!(row.mean_users >= 1.0);
            assert!(!row.surrogate);
        }
    }

    #[test]
    fn output_is_identical_across_thread_counts() {
        let spec = tiny_spec();
        let cfg = tiny_config();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec, &cfg).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec, &cfg).unwrap());
        assert_eq!(csv_string(&single), csv_string(&multi));
    }

    #[test]
    fn exhaustive_scheme_is_exact_on_small_instances_and_flagged_on_large() {
        let spec = SweepSpec {
            axis: SweepAxis::PSta0Mw,
            values: vec![1_000.0, 5_000.0],
            trials: 2,
            schemes: vec![Scheme::EeOptimal, Scheme::DinkelbachGlobal],
        };
        let rows = run_sweep(&spec, &tiny_config()).unwrap();
        for pair in rows.chunks(2) {
            let (greedy, exact) = (&pair[0], &pair[1]);
            assert!(!exact.surrogate);
            let rel = (greedy.mean_ee - exact.mean_ee).abs() / exact.mean_ee;
            assert!(
                rel < 1e-6,
                "greedy {} vs exact {}",
                greedy.mean_ee,
                exact.mean_ee
            );
        }

        // 3 users x 6 links = 18 candidates: over the enumeration cap.
        let big = ScenarioConfig {
            num_users: 3,
            links_per_user: 6,
            ..tiny_config()
        };
        let spec = SweepSpec {
            axis: SweepAxis::PMaxDbm,
            values: vec![25.0],
            trials: 1,
            schemes: vec![Scheme::DinkelbachGlobal],
        };
        let rows = run_sweep(&spec, &big).unwrap();
        assert!(rows[0].surrogate);
        let csv = csv_string(&rows);
        assert!(csv.contains("dinkelbach-global(surrogate)"));
    }

    #[test]
    fn csv_has_the_pinned_header_and_plain_names() {
        let rows = run_sweep(&tiny_spec(), &tiny_config()).unwrap();
        let csv = csv_string(&rows);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "axis,value,scheme,mean_ee_bit_per_joule,mean_rate_bps,mean_users,trials"
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("p_max_dbm,20,ee-optimal,"));
    }

    #[test]
    fn emit_writes_the_advertised_files() {
        let rows = run_sweep(&tiny_spec(), &tiny_config()).unwrap();
        let dir = std::env::temp_dir().join(format!("eesched-sweep-{}", std::process::id()));
        let files = emit(&rows, EmitFormat::Csv, &dir).unwrap();
        assert_eq!(files.len(), 1);
        assert!(files[0].ends_with("sweep.csv"));
        let body = fs::read_to_string(&files[0]).unwrap();
        assert_eq!(body, csv_string(&rows));

        let files = emit(&rows, EmitFormat::Chart, &dir).unwrap();
        assert_eq!(files.len(), 2);
        for f in &files {
            let body = fs::read_to_string(f).unwrap();
            assert!(body.starts_with("<svg"));
            assert!(body.ends_with("</svg>\n"));
            assert_eq!(body.matches("<polyline").count(), 2);
        }
        fs::remove_dir_all(&dir).ok();

        assert!(matches!(
            emit(&[], EmitFormat::Csv, &dir),
            Err(Error::EmptyRows)
        ));
    }

    #[test]
    fn spec_validation_rejects_malformed_sweeps() {
        let mut spec = tiny_spec();
        spec.values = vec![25.0, 20.0];
        assert!(spec.validate().is_err());
        spec.values = vec![];
        assert!(spec.validate().is_err());
        spec = tiny_spec();
        spec.trials = 0;
        assert!(spec.validate().is_err());
        spec = tiny_spec();
        spec.schemes = vec![];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::parse(s.name()), Some(s));
        }
        assert_eq!(Scheme::parse("nope"), None);
    }
}
