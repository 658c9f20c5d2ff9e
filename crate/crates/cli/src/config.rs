//! Flat `key = value` configuration files.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored. Every key
//! is optional; missing keys keep their defaults. Units are fixed per key:
//! ohms for resistances, volts for voltages, seconds for times.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `n` | 3 | sub-cell count (inferred from `r_sub` when only that is given) |
//! | `m` | 3 | levels per sub-cell |
//! | `r_sub` | `20,60,180` | sub-cell resistors, comma separated |
//! | `r_load` | 20 | load resistor `R0` |
//! | `v_max` | 3 | highest write amplitude |
//! | `v_read` | 0.1 | read amplitude |
//! | `t_reset`, `t_write` | 1e-7 | phase lengths |
//! | `t_read` | 5e-8 | read phase length |
//! | `dt` | 1e-10 | transient step |
//! | `coupling` | `staged` | `staged` or `explicit` |
//! | `topology` | `bridge4` | `bridge4`, `delta5` or a wiring string |
//! | `initial_ohms` | 232.068 | memristance before the first reset |
//! | `r_on`, `r_off` | 100, 2e6 | device bounds |
//! | `v_threshold` | 0.2 | device gate |
//! | `mobility_factor` | 7.25e8 | drift gain |
//! | `window_exponent` | 2 | Joglekar window exponent |
//! | `polarity` | `positive` | `positive` or `negative` |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use memcell::cell::{CellConfig, Topology};
use memcell::circuit::Coupling;
use memcell::device::Polarity;

pub const KEYS: [&str; 19] = [
    "n",
    "m",
    "r_sub",
    "r_load",
    "v_max",
    "v_read",
    "t_reset",
    "t_write",
    "t_read",
    "dt",
    "coupling",
    "topology",
    "initial_ohms",
    "r_on",
    "r_off",
    "v_threshold",
    "mobility_factor",
    "window_exponent",
    "polarity",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse()
        .map_err(|_| format!("malformed value for `{key}`: `{v}`"))
}

fn real(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("malformed value for `{key}`: `{v}` is not finite"))
    }
}

fn apply(cfg: &mut CellConfig, key: &str, v: &str) -> Result<(), String> {
    match key {
        "n" => cfg.n = num(key, v)?,
        "m" => cfg.m = num(key, v)?,
        "r_sub" => {
            cfg.r_sub = v
                .split(',')
                .map(|s| real(key, s.trim()))
                .collect::<Result<_, _>>()?
        }
        "r_load" => cfg.r_load = real(key, v)?,
        "v_max" => cfg.v_max = real(key, v)?,
        "v_read" => cfg.v_read = real(key, v)?,
        "t_reset" => cfg.t_reset = real(key, v)?,
        "t_write" => cfg.t_write = real(key, v)?,
        "t_read" => cfg.t_read = real(key, v)?,
        "dt" => cfg.dt = real(key, v)?,
        "coupling" => {
            cfg.coupling = match v {
                "staged" => Coupling::Staged,
                "explicit" => Coupling::Explicit,
                _ => {
                    return Err(format!(
                        "malformed value for `coupling`: `{v}` (staged|explicit)"
                    ))
                }
            }
        }
        "topology" => cfg.topology = v.parse::<Topology>().map_err(|e| e.to_string())?,
        "initial_ohms" => cfg.initial_ohms = real(key, v)?,
        "r_on" => cfg.device.r_on = real(key, v)?,
        "r_off" => cfg.device.r_off = real(key, v)?,
        "v_threshold" => cfg.device.v_threshold = real(key, v)?,
        "mobility_factor" => cfg.device.mobility_factor = real(key, v)?,
        "window_exponent" => cfg.device.window_exponent = num(key, v)?,
        "polarity" => {
            cfg.device.polarity = match v {
                "positive" => Polarity::Positive,
                "negative" => Polarity::Negative,
                _ => {
                    return Err(format!(
                        "malformed value for `polarity`: `{v}` (positive|negative)"
                    ))
                }
            }
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Parses configuration text and validates the result.
///
/// Invariant violations are attributed to the last line that set a key named
/// in the diagnostic, if any.
pub fn parse_config_str(text: &str) -> Result<CellConfig, ConfigError> {
    let mut cfg = CellConfig::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ConfigError {
            line: Some(line),
            message,
        };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(prev) = seen.get(key) {
            return Err(err(format!(
                "duplicate key `{key}` (first set on line {prev})"
            )));
        }
        apply(&mut cfg, key, value).map_err(err)?;
        seen.insert(key.to_string(), line);
    }
    if seen.contains_key("r_sub") && !seen.contains_key("n") {
        cfg.n = cfg.r_sub.len();
    }
    cfg.validate().map_err(|e| {
        let message = e.to_string();
        let mentioned = |k: &str| {
            message
                .split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                .any(|w| w == k)
        };
        let line = seen
            .iter()
            .filter(|(k, _)| mentioned(k))
            .map(|(_, &l)| l)
            .max();
        ConfigError { line, message }
    })?;
    Ok(cfg)
}

/// Shortest text that parses back to exactly `v`.
fn real_text(v: f64) -> String {
    if v == 0.0 || (1e-3..1e7).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Every key with its resolved value, in [`KEYS`] order.
pub fn config_pairs(cfg: &CellConfig) -> Vec<(&'static str, String)> {
    let d = &cfg.device;
    let r_sub = cfg
        .r_sub
        .iter()
        .map(|&r| real_text(r))
        .collect::<Vec<_>>()
        .join(",");
    let coupling = match cfg.coupling {
        Coupling::Staged => "staged",
        Coupling::Explicit => "explicit",
    };
    let polarity = match d.polarity {
        Polarity::Positive => "positive",
        Polarity::Negative => "negative",
    };
    let values = [
        cfg.n.to_string(),
        cfg.m.to_string(),
        r_sub,
        real_text(cfg.r_load),
        real_text(cfg.v_max),
        real_text(cfg.v_read),
        real_text(cfg.t_reset),
        real_text(cfg.t_write),
        real_text(cfg.t_read),
        real_text(cfg.dt),
        coupling.to_string(),
        cfg.topology.to_string(),
        real_text(cfg.initial_ohms),
        real_text(d.r_on),
        real_text(d.r_off),
        real_text(d.v_threshold),
        real_text(d.mobility_factor),
        d.window_exponent.to_string(),
        polarity.to_string(),
    ];
    KEYS.into_iter().zip(values).collect()
}

/// Complete configuration file for `cfg`; parses back to an equal config.
pub fn render_config(cfg: &CellConfig) -> String {
    config_pairs(cfg)
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}
