//! Resolved run description: every flag (or config-file key) parsed,
//! validated and defaulted.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use relay_goodput::montecarlo::DEFAULT_MAX_SLOTS;
use relay_goodput::{Mode, RateRange, DEFAULT_ALPHA};
use serde_json::{json, Map, Value};

use crate::CliError;

pub const DEFAULT_SNR_DB: f64 = 10.0;
pub const DEFAULT_K: f64 = 0.5;
pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const MIN_VALIDATE_TRIALS: u64 = 10_000;

/// Keys accepted both as `--long-flags` and in a config file.
pub const KEYS: &[&str] = &[
    "mode", "snr-db", "alpha", "k", "rate", "trials", "seed", "format", "out", "threads",
    "max-slots", "eps-sd", "eps-path2", "eps-rd", "eps-grid", "rate-min", "rate-max",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Point,
    Sweep,
    Optimize,
    Simulate,
    Validate,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Point => "point",
            Command::Sweep => "sweep",
            Command::Optimize => "optimize",
            Command::Simulate => "simulate",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSel {
    Single,
    Af,
    Df,
    Both,
}

impl ModeSel {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSel::Single => vec![Mode::Single],
            ModeSel::Af => vec![Mode::Af],
            ModeSel::Df => vec![Mode::Df],
            ModeSel::Both => vec![Mode::Af, Mode::Df],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModeSel::Single => "single",
            ModeSel::Af => "af",
            ModeSel::Df => "df",
            ModeSel::Both => "both",
        }
    }
}

impl FromStr for ModeSel {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "single" => Ok(ModeSel::Single),
            "af" => Ok(ModeSel::Af),
            "df" => Ok(ModeSel::Df),
            "both" => Ok(ModeSel::Both),
            other => Err(CliError::Usage(format!(
                "--mode must be one of single, af, df, both; got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Usage(format!("--format must be csv or json; got {other:?}"))),
        }
    }
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// A scalar, an evenly spaced `start:stop:count` range, or an explicit
/// comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Value(f64),
    Range { start: f64, stop: f64, count: usize },
    List(Vec<f64>),
}

impl Axis {
    pub fn parse(flag: &str, s: &str) -> Result<Self, CliError> {
        let number = |t: &str| -> Result<f64, CliError> {
            let t = t.trim();
            let x: f64 = t
                .parse()
                .map_err(|_| CliError::Usage(format!("--{flag}: {t:?} is not a number")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(CliError::Usage(format!("--{flag}: {t:?} is not finite")))
            }
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let [start, stop, count] = parts[..] else {
                return Err(CliError::Usage(format!(
                    "--{flag}: range must be start:stop:count, got {s:?}"
                )));
            };
            let (start, stop) = (number(start)?, number(stop)?);
            let count: usize = count.trim().parse().map_err(|_| {
                CliError::Usage(format!("--{flag}: range count {count:?} is not an integer"))
            })?;
            if count < 2 {
                return Err(CliError::Usage(format!("--{flag}: range count must be at least 2")));
            }
            if start >= stop {
                return Err(CliError::Usage(format!(
                    "--{flag}: range needs start < stop, got {start} and {stop}"
                )));
            }
            Ok(Axis::Range { start, stop, count })
        } else if s.contains(',') {
            let values = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
            Ok(Axis::List(values))
        } else {
            Ok(Axis::Value(number(s)?))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Value(x) => vec![*x],
            Axis::List(v) => v.clone(),
            Axis::Range { start, stop, count } => {
                let step = (stop - start) / (*count - 1) as f64;
                (0..*count)
                    .map(|i| if i + 1 == *count { *stop } else { start + step * i as f64 })
                    .collect()
            }
        }
    }

    pub fn is_swept(&self) -> bool {
        self.values().len() > 1
    }

    pub fn scalar(&self) -> Option<f64> {
        match self.values()[..] {
            [x] => Some(x),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Axis::Value(x) => json!(x),
            Axis::List(v) => json!(v),
            Axis::Range { start, stop, count } => {
                json!({ "start": start, "stop": stop, "count": count })
            }
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Value(x) => write!(f, "{x}"),
            Axis::Range { start, stop, count } => write!(f, "{start}:{stop}:{count}"),
            Axis::List(v) => {
                let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                f.write_str(&s.join(","))
            }
        }
    }
}

/// Fixed outage probabilities per link, each possibly a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsGrid {
    pub sd: Axis,
    pub path2: Axis,
    pub rd: Option<Axis>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub mode: ModeSel,
    pub snr_db: Axis,
    pub alpha: f64,
    /// `None` when neither a flag nor the config file set it.
    pub k: Option<Axis>,
    pub rate: Option<Axis>,
    pub trials: u64,
    pub seed: u64,
    pub max_slots: u64,
    pub eps: Option<EpsGrid>,
    pub rate_range: RateRange,
    pub format: Format,
    pub out: Option<PathBuf>,
    /// Worker threads for simulations. Not part of the echo: output must not
    /// depend on it.
    pub threads: Option<usize>,
}

fn parse_int<T: FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("--{key}: {s:?} is not a non-negative integer")))
}

fn parse_real(key: &str, s: &str) -> Result<f64, CliError> {
    match Axis::parse(key, s)? {
        Axis::Value(x) => Ok(x),
        _ => Err(CliError::Usage(format!("--{key} takes a single value, got {s:?}"))),
    }
}

impl RunSpec {
    /// Builds a spec from merged `key -> value` settings (flags already
    /// layered over the config file).
    pub fn from_settings(command: Command, s: &BTreeMap<String, String>) -> Result<Self, CliError> {
        if let Some(bad) = s.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("unknown setting {bad:?}")));
        }
        let get = |key: &str| s.get(key).map(String::as_str);

        let mode = get("mode").map_or(Ok(ModeSel::Both), str::parse)?;
        let snr_db = get("snr-db").map_or(Ok(Axis::Value(DEFAULT_SNR_DB)), |v| Axis::parse("snr-db", v))?;
        let alpha = get("alpha").map_or(Ok(DEFAULT_ALPHA), |v| parse_real("alpha", v))?;
        let k = get("k").map(|v| Axis::parse("k", v)).transpose()?;
        let rate = get("rate").map(|v| Axis::parse("rate", v)).transpose()?;
        let trials = get("trials").map_or(Ok(DEFAULT_TRIALS), |v| parse_int("trials", v))?;
        let seed = get("seed").map_or(Ok(DEFAULT_SEED), |v| parse_int("seed", v))?;
        let max_slots = get("max-slots").map_or(Ok(DEFAULT_MAX_SLOTS), |v| parse_int("max-slots", v))?;
        let format = get("format").map_or(Ok(Format::Csv), str::parse)?;
        let out = get("out").map(PathBuf::from);
        let threads = get("threads").map(|v| parse_int::<usize>("threads", v)).transpose()?;
        if threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }

        let defaults = RateRange::default();
        let rate_min = get("rate-min").map_or(Ok(defaults.min), |v| parse_real("rate-min", v))?;
        let rate_max = get("rate-max").map_or(Ok(defaults.max), |v| parse_real("rate-max", v))?;
        let rate_range =
            RateRange::new(rate_min, rate_max).map_err(|e| CliError::Usage(e.to_string()))?;

        let eps = Self::eps_from(mode, &get)?;

        let spec = RunSpec {
            command,
            mode,
            snr_db,
            alpha,
            k,
            rate,
            trials,
            seed,
            max_slots,
            eps,
            rate_range,
            format,
            out,
            threads,
        };
        spec.check()?;
        Ok(spec)
    }

    fn eps_from<'a>(
        mode: ModeSel,
        get: &impl Fn(&str) -> Option<&'a str>,
    ) -> Result<Option<EpsGrid>, CliError> {
        let grid = get("eps-grid").map(|v| Axis::parse("eps-grid", v)).transpose()?;
        let link = |key: &str| -> Result<Option<Axis>, CliError> {
            match get(key) {
                Some(v) => Axis::parse(key, v).map(Some),
                None => Ok(grid.clone()),
            }
        };
        let (sd, path2, rd) = (link("eps-sd")?, link("eps-path2")?, link("eps-rd")?);
        if sd.is_none() && path2.is_none() && rd.is_none() {
            return Ok(None);
        }
        let needs_rd = matches!(mode, ModeSel::Df | ModeSel::Both);
        let missing = |name: &str| CliError::Usage(format!("fixed outages need --{name} (or --eps-grid)"));
        let sd = sd.ok_or_else(|| missing("eps-sd"))?;
        let path2 = match (path2, mode) {
            (Some(p), _) => p,
            (None, ModeSel::Single) => Axis::Value(0.0),
            (None, _) => return Err(missing("eps-path2")),
        };
        if needs_rd && rd.is_none() {
            return Err(missing("eps-rd"));
        }
        for axis in [Some(&sd), Some(&path2), rd.as_ref()].into_iter().flatten() {
            if axis.values().iter().any(|e| !(0.0..=1.0).contains(e)) {
                return Err(CliError::Usage(format!("outage probabilities must lie in [0, 1], got {axis}")));
            }
        }
        Ok(Some(EpsGrid { sd, path2, rd: if needs_rd { rd } else { None } }))
    }

    fn check(&self) -> Result<(), CliError> {
        let swept = [Some(&self.snr_db), self.k.as_ref(), self.rate.as_ref()]
            .into_iter()
            .flatten()
            .filter(|a| a.is_swept())
            .count();
        if swept > 2 {
            return Err(CliError::Usage("at most two swept dimensions per run".into()));
        }
        let fixed_eps = self.eps.is_some();
        match self.command {
            Command::Point => {
                if swept > 0 {
                    return Err(CliError::Usage("point takes scalar --snr-db, --k and --rate".into()));
                }
                if self.rate.is_none() {
                    return Err(CliError::Usage("point needs --rate".into()));
                }
            }
            Command::Sweep => {
                if swept == 0 {
                    return Err(CliError::Usage(
                        "sweep needs one or two of --snr-db, --k, --rate given as ranges or lists".into(),
                    ));
                }
                if self.rate.is_none() {
                    return Err(CliError::Usage("sweep needs --rate".into()));
                }
            }
            Command::Optimize => {
                if self.mode == ModeSel::Single && self.rate.is_some() {
                    return Err(CliError::Usage(
                        "optimizing the relay location needs a relaying mode".into(),
                    ));
                }
            }
            Command::Simulate | Command::Validate => {
                if self.rate.is_none() && !fixed_eps {
                    return Err(CliError::Usage(format!(
                        "{} needs --rate unless outages are fixed",
                        self.command.as_str()
                    )));
                }
                if self.command == Command::Validate && self.trials < MIN_VALIDATE_TRIALS {
                    return Err(CliError::Usage(format!(
                        "validate needs --trials >= {MIN_VALIDATE_TRIALS}, got {}",
                        self.trials
                    )));
                }
                if self.trials == 0 {
                    return Err(CliError::Usage("--trials must be at least 1".into()));
                }
                if self.max_slots < 2 {
                    return Err(CliError::Usage("--max-slots must be at least 2".into()));
                }
            }
        }
        if fixed_eps && !matches!(self.command, Command::Simulate | Command::Validate) {
            return Err(CliError::Usage("fixed outages only apply to simulate and validate".into()));
        }
        Ok(())
    }

    pub fn k_axis(&self) -> Axis {
        self.k.clone().unwrap_or(Axis::Value(DEFAULT_K))
    }

    /// Rate axis; fixed-outage simulations default to rate 1 (the rate only
    /// scales goodput there).
    pub fn rate_axis(&self) -> Axis {
        self.rate.clone().unwrap_or(Axis::Value(1.0))
    }

    /// Input echo, keys in a fixed order.
    pub fn to_json(&self) -> Value {
        let opt = |a: &Option<Axis>| a.as_ref().map_or(Value::Null, Axis::to_json);
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command.as_str()));
        m.insert("mode".into(), json!(self.mode.as_str()));
        m.insert("snr_db".into(), self.snr_db.to_json());
        m.insert("alpha".into(), json!(self.alpha));
        m.insert("k".into(), opt(&self.k));
        m.insert("rate".into(), opt(&self.rate));
        m.insert("trials".into(), json!(self.trials));
        m.insert("seed".into(), json!(self.seed));
        m.insert("max_slots".into(), json!(self.max_slots));
        let eps = self.eps.as_ref();
        m.insert("eps_sd".into(), eps.map_or(Value::Null, |e| e.sd.to_json()));
        m.insert("eps_path2".into(), eps.map_or(Value::Null, |e| e.path2.to_json()));
        m.insert("eps_rd".into(), eps.map_or(Value::Null, |e| opt(&e.rd)));
        m.insert("rate_min".into(), json!(self.rate_range.min));
        m.insert("rate_max".into(), json!(self.rate_range.max));
        m.insert("format".into(), json!(self.format.as_str()));
        Value::Object(m)
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// underscores in keys are accepted in place of dashes.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value", n + 1)));
        };
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key {key:?}", n + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}
