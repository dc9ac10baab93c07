//! Modified Bessel function of the second kind, order one.
//!
//! The amplify-and-forward relay path has a received SNR of the form
//! `XY / (X + Y + 1)` with exponential `X`, `Y`; its CDF contains the factor
//! `sqrt(xi) * K1(sqrt(xi))`. Only that real, positive-argument case is
//! needed, so only `K1` is provided.
//!
//! Evaluation uses the ascending series (with the logarithmic term) for
//! `x <= 2` and the Steed/Temme continued fraction for `x > 2`. Both regions
//! are accurate to a few ulps.

use crate::error::{domain, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
const MAX_ITER: usize = 10_000;

/// A validated argument of `K1`: finite and strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselArg(f64);

impl BesselArg {
    pub fn new(x: f64) -> Result<Self> {
        if x.is_finite() && x > 0.0 {
            Ok(BesselArg(x))
        } else {
            Err(domain(format!(
                "K1 argument must be finite and positive, got {x}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `K1(x)`, or 0 once the true value drops below the smallest normal
    /// `f64`.
    pub fn k1(self) -> f64 {
        let x = self.0;
        if x <= SERIES_LIMIT {
            x_k1_series(x) / x
        } else {
            flush_subnormal(k1_scaled_cf(x) * (-x).exp())
        }
    }

    /// `x * K1(x)`, which stays finite as `x -> 0` (limit 1).
    pub fn x_k1(self) -> f64 {
        let x = self.0;
        if x <= SERIES_LIMIT {
            x_k1_series(x)
        } else {
            flush_subnormal(x * k1_scaled_cf(x) * (-x).exp())
        }
    }
}

/// `K1(x)` for finite `x > 0`.
pub fn bessel_k1(x: f64) -> Result<f64> {
    Ok(BesselArg::new(x)?.k1())
}

/// `sqrt(xi) * K1(sqrt(xi))` for finite `xi >= 0`.
///
/// Defined by continuity as exactly 1 at `xi = 0`. Strictly decreasing from
/// 1 towards 0; returns 0 once the value underflows.
pub fn xi_k1_factor(xi: f64) -> Result<f64> {
    if !xi.is_finite() || xi < 0.0 {
        return Err(domain(format!(
            "xi must be finite and non-negative, got {xi}"
        )));
    }
    if xi == 0.0 {
        return Ok(1.0);
    }
    Ok(BesselArg(xi.sqrt()).x_k1())
}

fn flush_subnormal(v: f64) -> f64 {
    if v < f64::MIN_POSITIVE {
        0.0
    } else {
        v
    }
}

/// Ascending series for `x K1(x)`:
///
/// `x K1(x) = 1 + (x^2/2) sum_k c_k [ln(x/2) - (psi(k+1) + psi(k+2)) / 2]`
/// with `c_k = (x^2/4)^k / (k! (k+1)!)`.
fn x_k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    // psi(k+1) and psi(k+2) at k = 0.
    let mut psi_a = -EULER_GAMMA;
    let mut psi_b = 1.0 - EULER_GAMMA;
    let mut c = 1.0;
    let mut sum = 0.0;
    for k in 0..MAX_ITER {
        let term = c * (log_half - 0.5 * (psi_a + psi_b));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        let kf = (k + 1) as f64;
        c *= q / (kf * (kf + 1.0));
        psi_a = psi_b;
        psi_b += 1.0 / (kf + 1.0);
    }
    1.0 + 2.0 * q * sum
}

/// Exponentially scaled `e^x K1(x)` via Steed's continued fraction for
/// the ratio `K1/K0` together with Temme's normalization sum. Converges
/// quickly for `x >= 2`.
fn k1_scaled_cf(x: f64) -> f64 {
    // Order mu = 0, so a1 = 1/4 - mu^2.
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0_scaled = (std::f64::consts::PI / (2.0 * x)).sqrt() / s;
    k0_scaled * (x + 0.5 - h) / x
}
