//! Physical layer: link geometry, Rayleigh outage probabilities and fading
//! gain sampling.
//!
//! The source-destination link has unit mean gain. With the relay on the
//! segment between source and destination at normalized distance `k`, the
//! source-relay and relay-destination mean gains are `k^-alpha` and
//! `(1-k)^-alpha`.
//!
//! Outage probabilities are carried together with their complements
//! ([`Outage`]). At high rates the success probability can be far below
//! `f64::EPSILON`, where `1 - eps` no longer holds any information; the
//! goodput formulas use the complement directly.

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{domain, finite, Result};
use crate::special_fn::xi_k1_factor;

/// Path-loss exponent used when none is given.
pub const DEFAULT_ALPHA: f64 = 3.12;

/// Largest `f64` strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Converts an SNR in decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// SNR threshold `2^rate - 1` below which a link at `rate` is in outage.
pub fn snr_threshold(rate: f64) -> f64 {
    (rate * std::f64::consts::LN_2).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    gamma: f64,
    alpha: f64,
    k: f64,
}

impl ChannelParams {
    /// `gamma` is the linear transmit SNR, `alpha` the path-loss exponent
    /// and `k` the source-relay distance over the source-destination
    /// distance.
    pub fn new(gamma: f64, alpha: f64, k: f64) -> Result<Self> {
        finite("gamma", gamma)?;
        finite("alpha", alpha)?;
        finite("k", k)?;
        if gamma <= 0.0 {
            return Err(domain(format!("gamma must be positive, got {gamma}")));
        }
        if alpha < 1.0 {
            return Err(domain(format!("alpha must be at least 1, got {alpha}")));
        }
        if !(k > 0.0 && k < 1.0) {
            return Err(domain(format!(
                "relay location k must lie in the open interval (0, 1), got {k}"
            )));
        }
        Ok(ChannelParams { gamma, alpha, k })
    }

    pub fn from_db(snr_db: f64, alpha: f64, k: f64) -> Result<Self> {
        finite("snr_db", snr_db)?;
        Self::new(db_to_linear(snr_db), alpha, k)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.gamma, self.alpha, k)
    }

    /// Mean gain of the source-relay link relative to source-destination.
    pub fn variance_sr(&self) -> f64 {
        self.k.powf(-self.alpha)
    }

    /// Mean gain of the relay-destination link relative to
    /// source-destination.
    pub fn variance_rd(&self) -> f64 {
        (1.0 - self.k).powf(-self.alpha)
    }
}

/// An outage probability and its complement, each computed directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outage {
    eps: f64,
    success: f64,
}

impl Outage {
    /// Builds from the success probability `q`, the numerically stable side
    /// for Rayleigh links. A success probability that underflowed to zero is
    /// floored at the smallest normal `f64`.
    pub(crate) fn from_success(q: f64) -> Self {
        let success = if q < f64::MIN_POSITIVE {
            log::warn!("success probability {q:e} saturated; flooring at {:e}", f64::MIN_POSITIVE);
            f64::MIN_POSITIVE
        } else {
            q.min(1.0)
        };
        Outage {
            eps: (1.0 - success).min(BELOW_ONE),
            success,
        }
    }

    /// Outage with exponent `x`: `eps = 1 - exp(-x)`.
    pub(crate) fn from_exponent(x: f64) -> Self {
        let mut o = Self::from_success((-x).exp());
        if o.success > f64::MIN_POSITIVE {
            o.eps = (-(-x).exp_m1()).min(BELOW_ONE);
        }
        o
    }

    /// Builds from an outage probability in [0, 1).
    pub fn from_eps(eps: f64) -> Result<Self> {
        crate::error::probability("outage probability", eps)?;
        Ok(Outage {
            eps,
            success: 1.0 - eps,
        })
    }

    /// Like [`Outage::from_eps`] but admits certain outage, `eps = 1`.
    pub(crate) fn from_closed(eps: f64) -> Self {
        Outage {
            eps,
            success: 1.0 - eps,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn success(&self) -> f64 {
        self.success
    }
}

/// Outage probabilities of one operating point.
///
/// `path2` is the relay path: the whole source-relay-destination path for
/// amplify-and-forward, the source-relay link for decode-and-forward. `rd`
/// is present only for decode-and-forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageSet {
    pub sd: Outage,
    pub path2: Outage,
    pub rd: Option<Outage>,
}

impl OutageSet {
    pub fn eps_sd(&self) -> f64 {
        self.sd.eps
    }

    pub fn eps_path2(&self) -> f64 {
        self.path2.eps
    }

    pub fn eps_rd(&self) -> Option<f64> {
        self.rd.map(|o| o.eps)
    }
}

fn check_rate(rate: f64) -> Result<f64> {
    finite("rate", rate)?;
    if rate < 0.0 {
        return Err(domain(format!("rate must be non-negative, got {rate}")));
    }
    Ok(rate)
}

pub(crate) fn link_outage(gamma: f64, rate: f64, sigma2: f64) -> Result<Outage> {
    finite("gamma", gamma)?;
    finite("sigma2", sigma2)?;
    check_rate(rate)?;
    if gamma <= 0.0 || sigma2 <= 0.0 {
        return Err(domain(format!(
            "gamma and sigma2 must be positive, got {gamma} and {sigma2}"
        )));
    }
    Ok(Outage::from_exponent(snr_threshold(rate) / (gamma * sigma2)))
}

/// Outage probability of one Rayleigh link with mean gain `sigma2`.
pub fn outage_single(gamma: f64, rate: f64, sigma2: f64) -> Result<f64> {
    Ok(link_outage(gamma, rate, sigma2)?.eps)
}

pub(crate) fn af_relay_outage(params: &ChannelParams, rate: f64) -> Result<Outage> {
    check_rate(rate)?;
    let ChannelParams { gamma, alpha, k } = *params;
    let kc = 1.0 - k;
    let t = snr_threshold(rate);
    // Written with (k(1-k))^alpha in the numerator so small k(1-k) cannot
    // overflow.
    let xi = 4.0 * t * (t + 1.0) * (k * kc).powf(alpha) / (gamma * gamma);
    let factor = if xi.is_finite() { xi_k1_factor(xi)? } else { 0.0 };
    let decay = (-t * (k.powf(alpha) + kc.powf(alpha)) / gamma).exp();
    Ok(Outage::from_success(factor * decay))
}

/// Outage probability of the amplify-and-forward source-relay-destination
/// path, whose end-to-end SNR is `g1 g2 / (g1 + g2 + 1)`.
pub fn outage_af_relay_path(params: &ChannelParams, rate: f64) -> Result<f64> {
    Ok(af_relay_outage(params, rate)?.eps)
}

/// Outage set for amplify-and-forward: direct link and relay path.
pub fn outage_af(params: &ChannelParams, rate: f64) -> Result<OutageSet> {
    Ok(OutageSet {
        sd: link_outage(params.gamma, rate, 1.0)?,
        path2: af_relay_outage(params, rate)?,
        rd: None,
    })
}

/// Outages of the three decode-and-forward links (S-D, S-R, R-D).
pub fn outage_df_links(params: &ChannelParams, rate: f64) -> Result<OutageSet> {
    check_rate(rate)?;
    let t = snr_threshold(rate);
    let ChannelParams { gamma, alpha, k } = *params;
    Ok(OutageSet {
        sd: Outage::from_exponent(t / gamma),
        path2: Outage::from_exponent(k.powf(alpha) * t / gamma),
        rd: Some(Outage::from_exponent((1.0 - k).powf(alpha) * t / gamma)),
    })
}

/// One draw of the power gain `|h|^2 ~ Exp(mean = sigma2)`.
pub fn sample_link_gain<R: Rng + ?Sized>(rng: &mut R, sigma2: f64) -> f64 {
    let unit: f64 = rng.sample(Exp1);
    unit * sigma2
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn params(gamma: f64, k: f64) -> ChannelParams {
        ChannelParams::new(gamma, DEFAULT_ALPHA, k).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ChannelParams::new(10.0, 3.12, 0.0).is_err());
        assert!(ChannelParams::new(10.0, 3.12, 1.0).is_err());
        assert!(ChannelParams::new(0.0, 3.12, 0.5).is_err());
        assert!(ChannelParams::new(10.0, 0.5, 0.5).is_err());
        assert!(ChannelParams::new(f64::NAN, 3.12, 0.5).is_err());
        let msg = ChannelParams::new(10.0, 3.12, 1.0).unwrap_err().to_string();
        assert!(msg.contains("(0, 1)"), "{msg}");
        assert!(outage_single(10.0, -1.0, 1.0).is_err());
        assert!(outage_single(10.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn db_conversion() {
        assert_eq!(db_to_linear(10.0), 10.0);
        assert_eq!(db_to_linear(0.0), 1.0);
        let p = ChannelParams::from_db(10.0, 3.12, 0.5).unwrap();
        assert_eq!(p.gamma(), 10.0);
    }

    #[test]
    fn single_link_values() {
        assert_eq!(outage_single(10.0, 0.0, 1.0).unwrap(), 0.0);
        let e = outage_single(10.0, 1.0, 1.0).unwrap();
        assert!((e - (1.0 - (-0.1f64).exp())).abs() < 1e-15);
        assert!(outage_single(1e12, 4.0, 1.0).unwrap() < 1e-10);
    }

    #[test]
    fn zero_rate_has_no_outage() {
        let p = params(10.0, 0.5);
        assert_eq!(outage_af_relay_path(&p, 0.0).unwrap(), 0.0);
        let df = outage_df_links(&p, 0.0).unwrap();
        assert_eq!((df.eps_sd(), df.eps_path2(), df.eps_rd()), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn relay_near_source() {
        let p = params(10.0, 0.01);
        let df = outage_df_links(&p, 2.0).unwrap();
        assert!(df.eps_path2() < 1e-5);
        let t = 3.0;
        let expected = 1.0 - (-(0.99f64).powf(DEFAULT_ALPHA) * t / 10.0).exp();
        assert!((df.eps_rd().unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn midpoint_relay_beats_offset_relay() {
        let a = outage_af_relay_path(&params(10.0, 0.5), 2.0).unwrap();
        let b = outage_af_relay_path(&params(10.0, 0.3), 2.0).unwrap();
        assert!(a < b, "{a} vs {b}");
    }

    #[test]
    fn af_path_composes_special_fn() {
        let p = params(10.0, 0.3);
        let rate = 3.0;
        let t = snr_threshold(rate);
        let (k, a) = (0.3f64, DEFAULT_ALPHA);
        let kc = 1.0 - k;
        let xi = 4.0 * t * (t + 1.0) * (k * kc).powf(a) / 100.0;
        let expected =
            1.0 - xi_k1_factor(xi).unwrap() * (-t * (k.powf(a) + kc.powf(a)) / 10.0).exp();
        assert_eq!(outage_af_relay_path(&p, rate).unwrap(), expected);
    }

    #[test]
    fn saturation_keeps_success_positive() {
        let p = params(10.0, 0.5);
        let af = outage_af(&p, 14.0).unwrap();
        assert!(af.eps_sd() < 1.0 && af.eps_path2() < 1.0);
        assert!(af.sd.success() >= f64::MIN_POSITIVE);
        assert!(af.path2.success() >= f64::MIN_POSITIVE);
        // Well before underflow the complement is still resolved.
        let af = outage_af(&p, 10.0).unwrap();
        assert!(af.sd.success() > 0.0 && af.sd.success() < 1e-40);
    }

    #[test]
    fn monotone_in_rate_and_gamma() {
        let rates: Vec<f64> = (0..60).map(|i| 0.2 * i as f64).collect();
        for gamma in [1.0, 10.0, 100.0] {
            let p = params(gamma, 0.4);
            let mut prev = (0.0, 0.0, 0.0);
            for &r in &rates {
                let af = outage_af(&p, r).unwrap();
                let df = outage_df_links(&p, r).unwrap();
                let cur = (af.eps_sd(), af.eps_path2(), df.eps_path2());
                assert!(cur.0 >= prev.0 && cur.1 >= prev.1 && cur.2 >= prev.2);
                assert!(cur.0 < 1.0 && cur.1 < 1.0 && cur.2 < 1.0);
                prev = cur;
            }
        }
        for r in [0.5, 2.0, 5.0] {
            let lo = outage_af_relay_path(&params(5.0, 0.4), r).unwrap();
            let hi = outage_af_relay_path(&params(50.0, 0.4), r).unwrap();
            assert!(hi <= lo);
        }
    }

    #[test]
    fn af_path_symmetric_in_k() {
        for j in [1u32, 77, 300, 511] {
            let k = j as f64 / 1024.0;
            let a = outage_af_relay_path(&params(10.0, k), 3.3).unwrap();
            let b = outage_af_relay_path(&params(10.0, 1.0 - k), 3.3).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn sampler_is_deterministic_with_unit_mean() {
        let mut a = Xoshiro256PlusPlus::seed_from_u64(7);
        let mut b = Xoshiro256PlusPlus::seed_from_u64(7);
        let xs: Vec<f64> = (0..100).map(|_| sample_link_gain(&mut a, 2.0)).collect();
        let ys: Vec<f64> = (0..100).map(|_| sample_link_gain(&mut b, 2.0)).collect();
        assert_eq!(xs, ys);

        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut below = 0u64;
        for _ in 0..n {
            let g = sample_link_gain(&mut rng, 1.0);
            sum += g;
            if g < 0.1 {
                below += 1;
            }
        }
        assert!((sum / n as f64 - 1.0).abs() < 0.005);
        let p = 1.0 - (-0.1f64).exp();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((below as f64 / n as f64 - p).abs() < 3.0 * se);
    }
}
