//! Closed-form network-state probabilities, expected delivery times and
//! goodput.
//!
//! Times are in units of the slot `T`, the time to send one codeword once
//! over any link. Goodput is `rate / E[slots]` and carries the units of
//! `rate` (bits per channel use).
//!
//! Two entry styles are offered. The `*_time_*` and `state_probs_*`
//! functions take plain outage probabilities in [0, 1). The `goodput_*`
//! functions start from channel parameters and work from the success
//! probabilities of each link, which stay accurate when outages approach
//! one.

use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelParams, Outage, OutageSet};
use crate::error::{domain, finite, probability, Result};

/// Transmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Direct link only, plain ARQ.
    Single,
    /// Amplify-and-forward relaying.
    Af,
    /// Decode-and-forward relaying.
    Df,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Af => "af",
            Mode::Df => "df",
        }
    }

    /// Number of mutually exclusive first-round network states.
    pub fn state_count(self) -> usize {
        match self {
            Mode::Single => 2,
            Mode::Af => 3,
            Mode::Df => 4,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Mode::Single),
            "af" => Ok(Mode::Af),
            "df" => Ok(Mode::Df),
            other => Err(domain(format!("unknown mode {other:?}"))),
        }
    }
}

/// Probabilities of the first-round network states.
///
/// Amplify-and-forward, in order: direct success; direct outage with relay
/// path success; both in outage.
///
/// Decode-and-forward, in order: direct success; direct and source-relay
/// outage; direct outage with source-relay and relay-destination success;
/// direct outage, source-relay success, relay-destination outage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution {
    pub mode: Mode,
    pub probs: Vec<f64>,
}

impl StateDistribution {
    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Expected delivery time and goodput at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoodputResult {
    pub mode: Mode,
    pub rate: f64,
    /// Mean slots per delivered codeword.
    pub expected_time: f64,
    pub goodput: f64,
}

pub fn state_probs_af(eps1: f64, eps2: f64) -> Result<StateDistribution> {
    probability("eps1", eps1)?;
    probability("eps2", eps2)?;
    Ok(StateDistribution {
        mode: Mode::Af,
        probs: vec![1.0 - eps1, eps1 * (1.0 - eps2), eps1 * eps2],
    })
}

pub fn state_probs_df(eps1: f64, eps2: f64, eps3: f64) -> Result<StateDistribution> {
    probability("eps1", eps1)?;
    probability("eps2", eps2)?;
    probability("eps3", eps3)?;
    Ok(StateDistribution {
        mode: Mode::Df,
        probs: vec![
            1.0 - eps1,
            eps1 * eps2,
            eps1 * (1.0 - eps2) * (1.0 - eps3),
            eps1 * (1.0 - eps2) * eps3,
        ],
    })
}

/// Mean slots per codeword under amplify-and-forward ARQ:
/// `(p1 + 2 p2 + 2 p3) / (1 - p3)`.
pub fn expected_time_af(eps1: f64, eps2: f64) -> Result<f64> {
    let d = state_probs_af(eps1, eps2)?;
    let [p1, p2, p3] = d.probs[..] else { unreachable!() };
    let denom = 1.0 - p3;
    if denom <= 0.0 {
        return Err(domain("eps1 * eps2 reaches 1; delivery never succeeds"));
    }
    Ok((p1 + 2.0 * p2 + 2.0 * p3) / denom)
}

/// Reduced form of [`expected_time_af`]: `(1 + eps1) / (1 - eps1 eps2)`.
pub fn expected_time_af_reduced(eps1: f64, eps2: f64) -> Result<f64> {
    probability("eps1", eps1)?;
    probability("eps2", eps2)?;
    Ok((1.0 + eps1) / (1.0 - eps1 * eps2))
}

/// Mean slots per codeword under decode-and-forward ARQ, from the state
/// probabilities:
/// `(p1 + p2 + 2 p3 + (2 + 1/(1 - eps3)) p4) / (1 - p2)`.
pub fn expected_time_df(eps1: f64, eps2: f64, eps3: f64) -> Result<f64> {
    let d = state_probs_df(eps1, eps2, eps3)?;
    let [p1, p2, p3, p4] = d.probs[..] else { unreachable!() };
    let denom = 1.0 - p2;
    if denom <= 0.0 {
        return Err(domain("eps1 * eps2 reaches 1; delivery never succeeds"));
    }
    let inner = 2.0 + 1.0 / (1.0 - eps3);
    Ok((p1 + p2 + 2.0 * p3 + inner * p4) / denom)
}

/// Product form of [`expected_time_df`] obtained by summing the nested
/// outer/inner retransmission tree:
/// `(1 - e1 e2)(1 + e1 - e3 - e1 e2) / ((1 - e1 e2)^2 (1 - e3))`.
pub fn expected_time_df_product(eps1: f64, eps2: f64, eps3: f64) -> Result<f64> {
    probability("eps1", eps1)?;
    probability("eps2", eps2)?;
    probability("eps3", eps3)?;
    let outer = 1.0 - eps1 * eps2;
    if outer <= 0.0 {
        return Err(domain("eps1 * eps2 reaches 1; delivery never succeeds"));
    }
    Ok(outer * (1.0 + eps1 - eps3 - eps1 * eps2) / (outer * outer * (1.0 - eps3)))
}

fn check_positive_rate(rate: f64) -> Result<()> {
    finite("rate", rate)?;
    if rate <= 0.0 {
        return Err(domain(format!("rate must be positive, got {rate}")));
    }
    Ok(())
}

/// Builds a result from the delivery rate per slot, `1 / E[slots]`, which
/// stays representable when the expected time itself overflows.
fn result(mode: Mode, rate: f64, deliveries_per_slot: f64) -> GoodputResult {
    GoodputResult {
        mode,
        rate,
        expected_time: (1.0 / deliveries_per_slot).max(1.0),
        goodput: rate * deliveries_per_slot.min(1.0),
    }
}

/// Plain ARQ on the direct link: a geometric number of attempts with mean
/// `1 / (1 - eps)`.
pub fn goodput_single(gamma: f64, rate: f64, sigma2: f64) -> Result<GoodputResult> {
    check_positive_rate(rate)?;
    let o = channel::link_outage(gamma, rate, sigma2)?;
    Ok(result(Mode::Single, rate, o.success()))
}

/// Amplify-and-forward goodput `R (1 - e1 e2) / (1 + e1)`.
pub fn goodput_af(params: &ChannelParams, rate: f64) -> Result<GoodputResult> {
    check_positive_rate(rate)?;
    let set = channel::outage_af(params, rate)?;
    Ok(goodput_af_from_outages(rate, &set))
}

pub(crate) fn goodput_af_from_outages(rate: f64, set: &OutageSet) -> GoodputResult {
    let (sd, path) = (set.sd, set.path2);
    // 1 - e1 e2 = q1 + e1 q2
    let round_success = sd.success() + sd.eps() * path.success();
    result(Mode::Af, rate, round_success / (1.0 + sd.eps()))
}

/// State-probability form of the amplify-and-forward goodput,
/// `R (1 - p3) / (p1 + 2 p2 + 2 p3)`.
pub fn goodput_af_state_form(rate: f64, states: &StateDistribution) -> Result<f64> {
    check_positive_rate(rate)?;
    if states.mode != Mode::Af {
        return Err(domain("expected an amplify-and-forward state distribution"));
    }
    let [p1, p2, p3] = states.probs[..] else { unreachable!() };
    Ok(rate * (1.0 - p3) / (p1 + 2.0 * p2 + 2.0 * p3))
}

/// Decode-and-forward goodput `R (1 - p2) / (p1 + p2 + 2 p3 + (2 + 1/(1-e3)) p4)`.
pub fn goodput_df(params: &ChannelParams, rate: f64) -> Result<GoodputResult> {
    check_positive_rate(rate)?;
    let set = channel::outage_df_links(params, rate)?;
    Ok(goodput_df_from_outages(rate, &set))
}

pub(crate) fn goodput_df_from_outages(rate: f64, set: &OutageSet) -> GoodputResult {
    let (sd, sr) = (set.sd, set.path2);
    let rd: Outage = set.rd.expect("decode-and-forward outage set carries R-D");
    // E[slots] = (1 + e1 q2 / q3) / (q1 + e1 q2), rearranged so that no
    // product of two small probabilities is formed.
    let reach_relay = sd.eps() * sr.success();
    let outer_success = sd.success() + reach_relay;
    let relay_share = if reach_relay > 0.0 {
        rd.success() / (rd.success() + reach_relay)
    } else {
        1.0
    };
    result(Mode::Df, rate, outer_success * relay_share)
}

/// Goodput for any mode. `params.k()` is ignored for [`Mode::Single`].
pub fn goodput(mode: Mode, params: &ChannelParams, rate: f64) -> Result<GoodputResult> {
    match mode {
        Mode::Single => goodput_single(params.gamma(), rate, 1.0),
        Mode::Af => goodput_af(params, rate),
        Mode::Df => goodput_df(params, rate),
    }
}

/// Outage set appropriate for `mode` (direct link only for single).
pub fn outages(mode: Mode, params: &ChannelParams, rate: f64) -> Result<OutageSet> {
    match mode {
        Mode::Single => {
            let sd = channel::link_outage(params.gamma(), rate, 1.0)?;
            Ok(OutageSet {
                sd,
                path2: Outage::from_eps(0.0)?,
                rd: None,
            })
        }
        Mode::Af => channel::outage_af(params, rate),
        Mode::Df => channel::outage_df_links(params, rate),
    }
}
