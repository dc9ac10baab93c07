//! Goodput of a three-node cooperative relay network (source, relay,
//! destination) running ARQ over independent Rayleigh fading links.
//!
//! * [`special_fn`]: the Bessel `K1` kernel of the amplify-and-forward
//!   relay-path outage.
//! * [`channel`]: geometry, link outages and gain sampling.
//! * [`analytic`]: state probabilities, expected delivery time, goodput.
//! * [`montecarlo`]: protocol simulator used as an independent check.
//! * [`optimizer`]: rate and relay-location search.

pub mod analytic;
pub mod channel;
mod error;
pub mod montecarlo;
pub mod optimizer;
#[cfg(feature = "oracles")]
pub mod oracles;
pub mod special_fn;

pub use analytic::{GoodputResult, Mode, StateDistribution};
pub use channel::{ChannelParams, Outage, OutageSet, DEFAULT_ALPHA};
pub use error::{Error, Result};
pub use montecarlo::{OutageSource, SimConfig, SimReport};
pub use optimizer::{KOpt, OptResult, RateOpt, RateRange};
