//! The five subcommands, each turning a [`RunSpec`] into a [`Report`].

use relay_goodput::analytic::{self, state_probs_af, state_probs_df};
use relay_goodput::montecarlo::{run_batch, run_batch_with_threads};
use relay_goodput::optimizer::{optimize_joint, optimize_k, optimize_rate, K_MARGIN};
use relay_goodput::{ChannelParams, Mode, OutageSet, SimConfig, SimReport};
use serde_json::{json, Map, Value};

use crate::run_spec::{Axis, Command, RunSpec};
use crate::table::{Cell, Report, Table};
use crate::CliError;

/// |z| above which a validation point counts as a failure.
pub const Z_PASS: f64 = 3.0;
/// |z| above which `validate` exits with status 2.
pub const Z_HARD_FAIL: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    /// One-line summary for stderr (validate only).
    pub summary_line: Option<String>,
    pub exit_code: i32,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Outcome { report, summary_line: None, exit_code: 0 }
    }
}

pub fn execute(spec: &RunSpec) -> Result<Outcome, CliError> {
    match spec.command {
        Command::Point => point(spec).map(Outcome::ok),
        Command::Sweep => sweep(spec).map(Outcome::ok),
        Command::Optimize => optimize(spec).map(Outcome::ok),
        Command::Simulate => simulate(spec).map(|(report, _)| Outcome::ok(report)),
        Command::Validate => validate(spec),
    }
}

fn scalar(axis: &Axis) -> f64 {
    axis.scalar().expect("scalar checked when settings were parsed")
}

fn report(spec: &RunSpec, table: Table) -> Report {
    Report { spec: spec.to_json(), table, summary: None }
}

/// Echo columns shared by every row: SNR in dB and linear, and alpha.
fn channel_cells(snr_db: f64, params: &ChannelParams) -> Vec<Cell> {
    vec![snr_db.into(), params.gamma().into(), params.alpha().into()]
}

fn state_probs(mode: Mode, set: &OutageSet) -> Result<Vec<f64>, CliError> {
    Ok(match mode {
        Mode::Single => vec![set.sd.success(), set.eps_sd()],
        Mode::Af => state_probs_af(set.eps_sd(), set.eps_path2())?.probs,
        Mode::Df => {
            let rd = set.eps_rd().expect("decode-and-forward outage set");
            state_probs_df(set.eps_sd(), set.eps_path2(), rd)?.probs
        }
    })
}

fn path2_cell(mode: Mode, set: &OutageSet) -> Cell {
    match mode {
        Mode::Single => Cell::Empty,
        _ => set.eps_path2().into(),
    }
}

pub fn point(spec: &RunSpec) -> Result<Report, CliError> {
    let mut table = Table::new([
        "mode", "snr_db", "gamma", "alpha", "k", "rate", "eps_sd", "eps_path2", "eps_rd", "p1", "p2",
        "p3", "p4", "expected_time", "goodput",
    ]);
    let snr_db = scalar(&spec.snr_db);
    let k = scalar(&spec.k_axis());
    let rate = scalar(&spec.rate_axis());
    let params = ChannelParams::from_db(snr_db, spec.alpha, k)?;
    for mode in spec.mode.modes() {
        let set = analytic::outages(mode, &params, rate)?;
        let g = analytic::goodput(mode, &params, rate)?;
        let p = state_probs(mode, &set)?;
        let mut row = vec![mode.as_str().into()];
        row.extend(channel_cells(snr_db, &params));
        row.extend([k.into(), rate.into(), set.eps_sd().into(), path2_cell(mode, &set)]);
        row.push(Cell::opt(set.eps_rd()));
        row.extend((0..4).map(|i| Cell::opt(p.get(i).copied())));
        row.extend([g.expected_time.into(), g.goodput.into()]);
        table.push(row);
    }
    Ok(report(spec, table))
}

pub fn sweep(spec: &RunSpec) -> Result<Report, CliError> {
    let modes = spec.mode.modes();
    let mut columns = vec!["snr_db", "gamma", "alpha", "k", "rate", "eps_sd"];
    for mode in &modes {
        columns.extend(match mode {
            Mode::Single => &["expected_time_single", "eta_single"][..],
            Mode::Af => &["eps_af_path", "expected_time_af", "eta_af"][..],
            Mode::Df => &["eps_df_sr", "eps_df_rd", "expected_time_df", "eta_df"][..],
        });
    }
    let mut table = Table::new(columns);
    for snr_db in spec.snr_db.values() {
        for k in spec.k_axis().values() {
            let params = ChannelParams::from_db(snr_db, spec.alpha, k)?;
            for rate in spec.rate_axis().values() {
                let mut row = channel_cells(snr_db, &params);
                row.extend([k.into(), rate.into()]);
                let direct = analytic::outages(Mode::Single, &params, rate)?;
                row.push(direct.eps_sd().into());
                for &mode in &modes {
                    let set = analytic::outages(mode, &params, rate)?;
                    let g = analytic::goodput(mode, &params, rate)?;
                    match mode {
                        Mode::Single => {}
                        Mode::Af => row.push(set.eps_path2().into()),
                        Mode::Df => row.extend([set.eps_path2().into(), Cell::opt(set.eps_rd())]),
                    }
                    row.extend([g.expected_time.into(), g.goodput.into()]);
                }
                table.push(row);
            }
        }
    }
    Ok(report(spec, table))
}

fn k_on_boundary(k: f64) -> bool {
    let slack = 1e-6;
    k <= K_MARGIN + slack || k >= 1.0 - K_MARGIN - slack
}

/// Search kind per row: `k` when rates are given (one row per rate),
/// `rate` when only relay locations are given, `joint` otherwise.
pub fn optimize(spec: &RunSpec) -> Result<Report, CliError> {
    let mut table = Table::new([
        "mode", "search", "snr_db", "gamma", "alpha", "k", "rate", "rate_min", "rate_max", "best_k",
        "best_rate", "best_goodput", "boundary_warning", "sweeps",
    ]);
    let range = spec.rate_range;
    for snr_db in spec.snr_db.values() {
        let params = ChannelParams::from_db(snr_db, spec.alpha, 0.5)?;
        let (gamma, alpha) = (params.gamma(), params.alpha());
        let mut push = |mode: Mode, search: &str, k: Cell, rate: Cell, best: [f64; 3], boundary: bool, sweeps: Cell| {
            let mut row = vec![mode.as_str().into(), search.into()];
            row.extend(channel_cells(snr_db, &params));
            row.extend([k, rate, range.min.into(), range.max.into()]);
            row.extend(best.map(Cell::Float));
            row.extend([boundary.into(), sweeps]);
            table.push(row);
        };
        if let Some(rates) = &spec.rate {
            for rate in rates.values() {
                for mode in spec.mode.modes() {
                    let o = optimize_k(mode, gamma, alpha, rate)?;
                    let boundary = k_on_boundary(o.k);
                    push(mode, "k", Cell::Empty, rate.into(), [o.k, rate, o.goodput], boundary, Cell::Empty);
                }
            }
        } else if let Some(ks) = &spec.k {
            for k in ks.values() {
                for mode in spec.mode.modes() {
                    let o = optimize_rate(mode, gamma, alpha, k, range)?;
                    push(mode, "rate", k.into(), Cell::Empty, [k, o.rate, o.goodput], !o.interior, Cell::Empty);
                }
            }
        } else {
            for mode in spec.mode.modes() {
                let o = optimize_joint(mode, gamma, alpha, range)?;
                let boundary = !o.rate_interior || k_on_boundary(o.best_k);
                let best = [o.best_k, o.best_rate, o.best_goodput];
                push(mode, "joint", Cell::Empty, Cell::Empty, best, boundary, Cell::Int(o.sweeps as u64));
            }
        }
    }
    Ok(report(spec, table))
}

const SIM_COLUMNS: [&str; 27] = [
    "mode", "source", "snr_db", "gamma", "alpha", "k", "rate", "eps_sd", "eps_path2", "eps_rd",
    "trials", "seed", "max_slots", "analytic_time", "analytic_goodput", "mean_slots", "std_error",
    "z", "empirical_goodput", "goodput_std_error", "trials_used", "truncated_trials", "state_1",
    "state_2", "state_3", "state_4", "pass",
];

/// Every simulation point of the run, in output order.
fn sim_configs(spec: &RunSpec) -> Result<Vec<(f64, SimConfig)>, CliError> {
    let mut out = Vec::new();
    let base = |mode, snr_db, k, rate| -> Result<SimConfig, CliError> {
        let params = ChannelParams::from_db(snr_db, spec.alpha, k)?;
        Ok(SimConfig::new(mode, params, rate, spec.trials, spec.seed).with_max_slots(spec.max_slots))
    };
    match &spec.eps {
        Some(eps) => {
            let (Some(snr_db), Some(k), Some(rate)) =
                (spec.snr_db.scalar(), spec.k_axis().scalar(), spec.rate_axis().scalar())
            else {
                return Err(CliError::Usage(
                    "fixed outages take scalar --snr-db, --k and --rate".into(),
                ));
            };
            for mode in spec.mode.modes() {
                let path2s = if mode == Mode::Single { vec![0.0] } else { eps.path2.values() };
                let rds = match (&eps.rd, mode) {
                    (Some(rd), Mode::Df) => rd.values(),
                    _ => vec![0.0],
                };
                for &sd in &eps.sd.values() {
                    for &path2 in &path2s {
                        for &rd in &rds {
                            let cfg = base(mode, snr_db, k, rate)?.with_fixed_eps(sd, path2, rd);
                            out.push((snr_db, cfg));
                        }
                    }
                }
            }
        }
        None => {
            for snr_db in spec.snr_db.values() {
                for k in spec.k_axis().values() {
                    for rate in spec.rate_axis().values() {
                        for mode in spec.mode.modes() {
                            out.push((snr_db, base(mode, snr_db, k, rate)?));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn run_sim(spec: &RunSpec, cfg: &SimConfig) -> Result<SimReport, CliError> {
    cfg.validate()?;
    Ok(match spec.threads {
        Some(n) => run_batch_with_threads(cfg, n)?,
        None => run_batch(cfg)?,
    })
}

/// Runs every point; returns the report and the per-row z-scores.
pub fn simulate(spec: &RunSpec) -> Result<(Report, Vec<f64>), CliError> {
    let mut table = Table::new(SIM_COLUMNS);
    let mut zs = Vec::new();
    for (snr_db, cfg) in sim_configs(spec)? {
        let analytic = cfg.analytic()?;
        let set = cfg.outage_set()?;
        let sim = run_sim(spec, &cfg)?;
        let z = sim.z_score(analytic.expected_time);
        zs.push(z);
        let source = if spec.eps.is_some() { "fixed_eps" } else { "sampled_fading" };
        let mut row = vec![cfg.mode.as_str().into(), source.into()];
        row.extend(channel_cells(snr_db, &cfg.params));
        row.extend([cfg.params.k().into(), cfg.rate.into(), set.eps_sd().into(), path2_cell(cfg.mode, &set)]);
        row.push(Cell::opt(set.eps_rd()));
        row.extend([cfg.trials.into(), cfg.seed.into(), cfg.max_slots_per_codeword.into()]);
        row.extend([analytic.expected_time.into(), analytic.goodput.into()]);
        row.extend([sim.mean_slots.into(), sim.std_error.into(), z.into()]);
        row.extend([sim.empirical_goodput.into(), sim.goodput_std_error.into()]);
        row.extend([sim.trials_used.into(), sim.truncated_trials.into()]);
        row.extend((0..4).map(|i| sim.per_state_counts.get(i).map_or(Cell::Empty, |&c| Cell::Int(c))));
        row.push((z.abs() <= Z_PASS).into());
        table.push(row);
    }
    Ok((report(spec, table), zs))
}

/// Simulation plus a pass/fail verdict: every point must satisfy
/// `|z| <= 3`; any `|z| > 4` is a hard failure (exit status 2).
pub fn validate(spec: &RunSpec) -> Result<Outcome, CliError> {
    let (mut report, zs) = simulate(spec)?;
    let max_abs_z = zs.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    let failures = zs.iter().filter(|z| z.abs() > Z_PASS).count();
    let hard = zs.iter().filter(|z| z.abs() > Z_HARD_FAIL).count();
    let status = if failures == 0 { "pass" } else { "fail" };
    let mut s = Map::new();
    s.insert("points".into(), json!(zs.len()));
    s.insert("max_abs_z".into(), json!(max_abs_z));
    s.insert("failures".into(), json!(failures));
    s.insert("hard_failures".into(), json!(hard));
    s.insert("status".into(), json!(status));
    report.summary = Some(Value::Object(s));
    let line = format!(
        "validate: {} points, max |z| = {max_abs_z:.3}, {failures} above {Z_PASS}, {hard} above {Z_HARD_FAIL}: {}",
        zs.len(),
        status.to_uppercase()
    );
    Ok(Outcome {
        report,
        summary_line: Some(line),
        exit_code: if hard > 0 { 2 } else { 0 },
    })
}
