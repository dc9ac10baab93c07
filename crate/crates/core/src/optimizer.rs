//! Search for the transmission rate and relay location that maximize the
//! analytic goodput.
//!
//! Every search scans a uniform (location) or log-spaced (rate) grid first,
//! then refines the best grid cell by golden-section search. The goodput
//! surface is not concave in general, so the grid does the global work and
//! golden-section only polishes a bracketed local maximum. Ties go to the
//! smaller coordinate.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{self, Mode};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Distance kept from the endpoints of the relay-location interval (0, 1).
pub const K_MARGIN: f64 = 1e-3;
pub const K_GRID_POINTS: usize = 199;
pub const RATE_GRID_POINTS: usize = 400;
/// Golden-section stopping width, for both coordinates.
pub const TOLERANCE: f64 = 1e-6;
pub const JOINT_GRID_POINTS: usize = 50;
pub const MAX_SWEEPS: usize = 50;
pub const SWEEP_TOLERANCE: f64 = 1e-9;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Closed interval of rates searched, in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRange {
    pub min: f64,
    pub max: f64,
}

impl Default for RateRange {
    fn default() -> Self {
        RateRange { min: 0.05, max: 20.0 }
    }
}

impl RateRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min > 0.0 && min < max) {
            return Err(Error::Config(format!(
                "rate range needs 0 < min < max, got [{min}, {max}]"
            )));
        }
        Ok(RateRange { min, max })
    }

    /// `n` log-spaced points from `min` to `max` inclusive.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = (self.min.ln(), self.max.ln());
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.max
                } else {
                    (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// `n` evenly spaced relay locations on `[K_MARGIN, 1 - K_MARGIN]`.
pub fn k_grid(n: usize) -> Vec<f64> {
    let (lo, hi) = (K_MARGIN, 1.0 - K_MARGIN);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KOpt {
    pub k: f64,
    pub goodput: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateOpt {
    pub rate: f64,
    pub goodput: f64,
    /// The best grid point had strictly lower neighbours on both sides.
    pub interior: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub rate: f64,
    pub k: f64,
    pub goodput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub mode: Mode,
    pub best_rate: f64,
    pub best_k: f64,
    pub best_goodput: f64,
    /// Whether the final rate search found an interior maximum.
    pub rate_interior: bool,
    pub sweeps: usize,
    /// Starting point followed by the iterate after each coordinate step.
    pub search_trace: Vec<TracePoint>,
}

fn eval(mode: Mode, gamma: f64, alpha: f64, k: f64, rate: f64) -> Result<f64> {
    let params = ChannelParams::new(gamma, alpha, k)?;
    Ok(analytic::goodput(mode, &params, rate)?.goodput)
}

/// Index of the first maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn eval_grid<F>(points: &[f64], f: &F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    points.par_iter().map(|&x| f(x)).collect()
}

/// Maximizes `f` on `[lo, hi]` to width `tol`. Returns the best point
/// evaluated.
pub fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid)?;
    let mut best = (mid, fm);
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 || (fx == best.1 && x < best.0) {
            best = (x, fx);
        }
    }
    Ok(best)
}

struct Refined {
    x: f64,
    fx: f64,
    grid_index: usize,
    interior: bool,
}

fn grid_and_refine<F>(points: &[f64], f: F) -> Result<Refined>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let values = eval_grid(points, &f)?;
    let i = argmax(&values);
    let n = points.len();
    let interior = i > 0 && i + 1 < n && values[i - 1] < values[i] && values[i + 1] < values[i];
    let lo = points[i.saturating_sub(1)];
    let hi = points[(i + 1).min(n - 1)];
    let (x, fx) = golden_section_max(&f, lo, hi, TOLERANCE)?;
    // Fall back to the grid point if refinement drifted to a worse value.
    let (x, fx) = if fx >= values[i] { (x, fx) } else { (points[i], values[i]) };
    Ok(Refined { x, fx, grid_index: i, interior })
}

/// Relay location maximizing goodput at a fixed rate.
pub fn optimize_k(mode: Mode, gamma: f64, alpha: f64, rate: f64) -> Result<KOpt> {
    if mode == Mode::Single {
        return Err(Error::Config("relay location has no effect without a relay".into()));
    }
    ChannelParams::new(gamma, alpha, 0.5)?;
    let r = grid_and_refine(&k_grid(K_GRID_POINTS), |k| eval(mode, gamma, alpha, k, rate))?;
    Ok(KOpt { k: r.x, goodput: r.fx })
}

/// Rate maximizing goodput at a fixed relay location. A maximum on the
/// edge of `range` is reported through `interior = false`, not as an error.
pub fn optimize_rate(mode: Mode, gamma: f64, alpha: f64, k: f64, range: RateRange) -> Result<RateOpt> {
    ChannelParams::new(gamma, alpha, k)?;
    let r = grid_and_refine(&range.grid(RATE_GRID_POINTS), |rate| {
        eval(mode, gamma, alpha, k, rate)
    })?;
    if !r.interior {
        log::warn!(
            "{mode} rate maximum at grid index {} lies on the search boundary [{}, {}]",
            r.grid_index,
            range.min,
            range.max
        );
    }
    Ok(RateOpt {
        rate: r.x,
        goodput: r.fx,
        interior: r.interior,
    })
}

/// Joint rate and relay-location search starting from `(k, rate) = (0.5, 1)`.
pub fn optimize_joint(mode: Mode, gamma: f64, alpha: f64, range: RateRange) -> Result<OptResult> {
    optimize_joint_from(mode, gamma, alpha, range, (0.5, 1.0))
}

/// Joint search by alternating [`optimize_k`] and [`optimize_rate`].
///
/// A `JOINT_GRID_POINTS`-square grid over `(k, rate)` is scanned first and
/// its best cell replaces `start` when it is better.
pub fn optimize_joint_from(
    mode: Mode,
    gamma: f64,
    alpha: f64,
    range: RateRange,
    start: (f64, f64),
) -> Result<OptResult> {
    if mode == Mode::Single {
        return Err(Error::Config("joint search needs a relaying mode".into()));
    }
    let ks = k_grid(JOINT_GRID_POINTS);
    let rates = range.grid(JOINT_GRID_POINTS);
    let cells: Vec<(f64, f64)> = ks
        .iter()
        .flat_map(|&k| rates.iter().map(move |&r| (k, r)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(k, r)| eval(mode, gamma, alpha, k, r))
        .collect::<Result<_>>()?;
    let best_cell = argmax(&values);

    let (mut k, mut rate) = start;
    let mut value = eval(mode, gamma, alpha, k, rate)?;
    if values[best_cell] > value {
        (k, rate) = cells[best_cell];
        value = values[best_cell];
    }
    let mut trace = vec![TracePoint { rate, k, goodput: value }];
    let mut interior = false;
    let mut sweeps = 0;

    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let before = value;

        let ko = optimize_k(mode, gamma, alpha, rate)?;
        if ko.goodput > value {
            k = ko.k;
            value = ko.goodput;
        }
        trace.push(TracePoint { rate, k, goodput: value });

        let ro = optimize_rate(mode, gamma, alpha, k, range)?;
        interior = ro.interior;
        if ro.goodput > value {
            rate = ro.rate;
            value = ro.goodput;
        }
        trace.push(TracePoint { rate, k, goodput: value });

        if value - before < SWEEP_TOLERANCE {
            break;
        }
    }

    Ok(OptResult {
        mode,
        best_rate: rate,
        best_k: k,
        best_goodput: eval(mode, gamma, alpha, k, rate)?,
        rate_interior: interior,
        sweeps,
        search_trace: trace,
    })
}
