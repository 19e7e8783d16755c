//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment. Complex numbers are
//! written `re+imi` (`0.5+0.5i`, `0.70710678+0i`, `-1.2e-3-4i`); a bare real
//! is also accepted. Lists are comma-separated.
//!
//! | key | type | default |
//! |-----|------|---------|
//! | `prep.alpha`, `meas.alpha` | complex | `0+0i` (warns) |
//! | `prep.beta`, `meas.beta` | real | `1` |
//! | `prep.gamma`, `meas.gamma` | real | `0` |
//! | `t` | real | `0` |
//! | `theta` | real | `0` |
//! | `tau` | list of reals | — |
//! | `tau.start`, `tau.stop`, `tau.points` | real, real, int | `0`, `2π/meas.beta`, `400` |
//! | `cutoff.epsilon`, `cutoff.n_max` | real, int | `1e-10`, `512` |
//! | `witness.threshold` | real | `1e-6` |
//! | `negativity` | bool | mode dependent |
//! | `amplitude.a`, `amplitude.b` | complex | `1/√2` |
//! | `sweep.t`, `sweep.theta` | list of reals | `t`, `theta` |
//! | `sweep.prep_alpha`, `sweep.meas_alpha` | list of complex | empty |
//! | `sweep.threads` | int | `0` (auto) |
//!
//! `tau` and the `tau.*` keys are mutually exclusive. Any `sweep.*` key
//! makes the file a sweep description.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use qee_core::protocol::{default_amplitudes, uniform_grid, DEFAULT_TAU_POINTS};
use qee_core::{CutoffPolicy, PdParams, ProtocolConfig, ThermalSpec, C64};

use crate::sweep::SweepSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("line {line}: invalid value for `{key}`: {message}")]
    InvalidValue {
        line: usize,
        key: String,
        message: String,
    },

    #[error("{0}")]
    Conflict(String),

    #[error(transparent)]
    Domain(#[from] qee_core::Error),
}

const KNOWN_KEYS: &[&str] = &[
    "prep.alpha",
    "prep.beta",
    "prep.gamma",
    "meas.alpha",
    "meas.beta",
    "meas.gamma",
    "t",
    "theta",
    "tau",
    "tau.start",
    "tau.stop",
    "tau.points",
    "cutoff.epsilon",
    "cutoff.n_max",
    "witness.threshold",
    "negativity",
    "amplitude.a",
    "amplitude.b",
    "sweep.t",
    "sweep.theta",
    "sweep.prep_alpha",
    "sweep.meas_alpha",
    "sweep.threads",
];

/// How the measurement grid was given.
#[derive(Clone, Debug, PartialEq)]
pub enum TauGrid {
    Uniform {
        start: f64,
        stop: f64,
        points: usize,
    },
    Explicit(Vec<f64>),
}

impl TauGrid {
    pub fn samples(&self) -> Vec<f64> {
        match self {
            TauGrid::Uniform {
                start,
                stop,
                points,
            } => uniform_grid(*start, *stop, *points),
            TauGrid::Explicit(v) => v.clone(),
        }
    }
}

/// Sweep axes as written in the file.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepAxes {
    pub t_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub prep_alpha: Vec<C64>,
    pub meas_alpha: Vec<C64>,
    pub threads: usize,
}

/// A fully validated configuration file.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub protocol: ProtocolConfig,
    pub tau: TauGrid,
    pub amplitudes: (C64, C64),
    /// Explicit `negativity` key; `None` leaves the choice to the mode.
    pub negativity: Option<bool>,
    pub sweep: Option<SweepAxes>,
}

/// What a configuration file describes.
#[derive(Clone, Debug, PartialEq)]
pub enum ParsedConfig {
    Protocol(ProtocolConfig),
    Sweep(SweepSpec),
}

impl ConfigFile {
    pub fn is_sweep(&self) -> bool {
        self.sweep.is_some()
    }

    pub fn kind(&self) -> ParsedConfig {
        if self.is_sweep() {
            ParsedConfig::Sweep(self.sweep_spec(false))
        } else {
            ParsedConfig::Protocol(self.protocol.clone())
        }
    }

    /// Sweep over the file's axes; a plain protocol file becomes a single
    /// row at its own `(t, θ)`.
    pub fn sweep_spec(&self, negativity: bool) -> SweepSpec {
        let axes = self.sweep.clone().unwrap_or_else(|| SweepAxes {
            t_values: vec![self.protocol.t],
            theta_values: vec![self.protocol.thermal.theta],
            prep_alpha: Vec::new(),
            meas_alpha: Vec::new(),
            threads: 0,
        });
        SweepSpec {
            base: self.protocol.clone(),
            t_values: axes.t_values,
            theta_values: axes.theta_values,
            prep_alpha: axes.prep_alpha,
            meas_alpha: axes.meas_alpha,
            threads: axes.threads,
            negativity,
            amplitudes: self.amplitudes,
            keep_curves: false,
        }
    }
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Entries<'a>(BTreeMap<&'a str, Entry<'a>>);

impl<'a> Entries<'a> {
    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse_with(key, parse_real)
    }

    fn int(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse_with(key, |v| {
            v.parse::<usize>()
                .map_err(|e| format!("expected a non-negative integer ({e})"))
        })
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.parse_with(key, |v| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err("expected `true` or `false`".to_string()),
        })
    }

    fn complex(&self, key: &str) -> Result<Option<C64>, ConfigError> {
        self.parse_with(key, parse_complex)
    }

    fn reals(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.parse_with(key, |v| split_list(v).map(parse_real).collect())
    }

    fn complexes(&self, key: &str) -> Result<Option<Vec<C64>>, ConfigError> {
        self.parse_with(key, |v| split_list(v).map(parse_complex).collect())
    }

    fn parse_with<T, F>(&self, key: &str, f: F) -> Result<Option<T>, ConfigError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(entry) => f(entry.value)
                .map(Some)
                .map_err(|message| ConfigError::InvalidValue {
                    line: entry.line,
                    key: key.to_string(),
                    message,
                }),
        }
    }

    fn has(&self, key: &str) -> bool {
        self.0.contains_key(key)
    }

    fn line_of(&self, key: &str) -> usize {
        self.0.get(key).map_or(0, |e| e.line)
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim)
}

fn parse_real(v: &str) -> Result<f64, String> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("`{v}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{v}` is not finite"));
    }
    Ok(x)
}

/// Parses `re+imi`, `re-imi`, `imi` or a bare real.
pub fn parse_complex(v: &str) -> Result<C64, String> {
    let s: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty value".to_string());
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(C64::new(parse_real(&s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => parse_real(other)?,
    };
    Ok(C64::new(parse_real(re)?, im))
}

pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

fn tokenize(text: &str) -> Result<Entries<'_>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::InvalidValue {
                line,
                key: key.to_string(),
                message: "empty value".to_string(),
            });
        }
        if map.insert(key, Entry { line, value }).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
    }
    Ok(Entries(map))
}

fn phase_params(entries: &Entries<'_>, prefix: &str) -> Result<PdParams, ConfigError> {
    let alpha_key = format!("{prefix}.alpha");
    let alpha = match entries.complex(&alpha_key)? {
        Some(a) => a,
        None => {
            log::warn!("`{alpha_key}` not set; using 0+0i, which gives no witness signal");
            C64::new(0.0, 0.0)
        }
    };
    let beta = entries.real(&format!("{prefix}.beta"))?.unwrap_or(1.0);
    let gamma = entries.real(&format!("{prefix}.gamma"))?.unwrap_or(0.0);
    Ok(PdParams::new(alpha, beta, gamma)?)
}

fn nonempty<T>(
    entries: &Entries<'_>,
    key: &str,
    values: Option<Vec<T>>,
) -> Result<Option<Vec<T>>, ConfigError> {
    match values {
        Some(v) if v.is_empty() => Err(ConfigError::InvalidValue {
            line: entries.line_of(key),
            key: key.to_string(),
            message: "list is empty".to_string(),
        }),
        other => Ok(other),
    }
}

/// Parse and validate a configuration file, applying defaults.
pub fn parse_config(text: &str) -> Result<ConfigFile, ConfigError> {
    let entries = tokenize(text)?;

    let prep = phase_params(&entries, "prep")?;
    let meas = phase_params(&entries, "meas")?;
    let t = entries.real("t")?.unwrap_or(0.0);
    let thermal = ThermalSpec::new(entries.real("theta")?.unwrap_or(0.0))?;

    let has_uniform = ["tau.start", "tau.stop", "tau.points"]
        .iter()
        .any(|k| entries.has(k));
    let tau = match entries.reals("tau")? {
        Some(_) if has_uniform => {
            return Err(ConfigError::Conflict(
                "`tau` cannot be combined with `tau.start`/`tau.stop`/`tau.points`".to_string(),
            ))
        }
        Some(list) => TauGrid::Explicit(list),
        None => TauGrid::Uniform {
            start: entries.real("tau.start")?.unwrap_or(0.0),
            stop: entries.real("tau.stop")?.unwrap_or(meas.period()),
            points: entries.int("tau.points")?.unwrap_or(DEFAULT_TAU_POINTS),
        },
    };

    let defaults = CutoffPolicy::default();
    let cutoff = CutoffPolicy {
        epsilon: entries.real("cutoff.epsilon")?.unwrap_or(defaults.epsilon),
        n_max: entries.int("cutoff.n_max")?.unwrap_or(defaults.n_max),
    };
    let witness_threshold = entries
        .real("witness.threshold")?
        .unwrap_or(qee_core::DEFAULT_WITNESS_THRESHOLD);

    let protocol = ProtocolConfig {
        prep,
        meas,
        t,
        tau_grid: tau.samples(),
        thermal,
        cutoff,
        witness_threshold,
    };
    protocol.validate()?;

    let (default_a, default_b) = default_amplitudes();
    let amplitudes = (
        entries.complex("amplitude.a")?.unwrap_or(default_a),
        entries.complex("amplitude.b")?.unwrap_or(default_b),
    );

    let sweep_keys = [
        "sweep.t",
        "sweep.theta",
        "sweep.prep_alpha",
        "sweep.meas_alpha",
        "sweep.threads",
    ];
    let sweep = if sweep_keys.iter().any(|k| entries.has(k)) {
        let t_values =
            nonempty(&entries, "sweep.t", entries.reals("sweep.t")?)?.unwrap_or_else(|| vec![t]);
        let theta_values = nonempty(&entries, "sweep.theta", entries.reals("sweep.theta")?)?
            .unwrap_or_else(|| vec![thermal.theta]);
        if let Some(bad) = t_values.iter().find(|x| **x < 0.0) {
            return Err(ConfigError::InvalidValue {
                line: entries.line_of("sweep.t"),
                key: "sweep.t".to_string(),
                message: format!("negative preparation time {bad}"),
            });
        }
        if let Some(bad) = theta_values.iter().find(|x| **x < 0.0) {
            return Err(ConfigError::InvalidValue {
                line: entries.line_of("sweep.theta"),
                key: "sweep.theta".to_string(),
                message: format!("negative temperature {bad}"),
            });
        }
        Some(SweepAxes {
            t_values,
            theta_values,
            prep_alpha: nonempty(
                &entries,
                "sweep.prep_alpha",
                entries.complexes("sweep.prep_alpha")?,
            )?
            .unwrap_or_default(),
            meas_alpha: nonempty(
                &entries,
                "sweep.meas_alpha",
                entries.complexes("sweep.meas_alpha")?,
            )?
            .unwrap_or_default(),
            threads: entries.int("sweep.threads")?.unwrap_or(0),
        })
    } else {
        None
    };

    Ok(ConfigFile {
        protocol,
        tau,
        amplitudes,
        negativity: entries.bool("negativity")?,
        sweep,
    })
}

fn join<T, F: Fn(&T) -> String>(values: &[T], f: F) -> String {
    values.iter().map(f).collect::<Vec<_>>().join(", ")
}

/// Writes every key explicitly so that `parse_config(serialize_config(c))`
/// reproduces `c`.
pub fn serialize_config(config: &ConfigFile) -> String {
    let p = &config.protocol;
    let mut out = String::new();
    let mut line = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    for (prefix, params) in [("prep", &p.prep), ("meas", &p.meas)] {
        line(&format!("{prefix}.alpha"), format_complex(params.alpha));
        line(&format!("{prefix}.beta"), params.beta.to_string());
        line(&format!("{prefix}.gamma"), params.gamma.to_string());
    }
    line("t", p.t.to_string());
    line("theta", p.thermal.theta.to_string());
    match &config.tau {
        TauGrid::Uniform {
            start,
            stop,
            points,
        } => {
            line("tau.start", start.to_string());
            line("tau.stop", stop.to_string());
            line("tau.points", points.to_string());
        }
        TauGrid::Explicit(v) => line("tau", join(v, f64::to_string)),
    }
    line("cutoff.epsilon", p.cutoff.epsilon.to_string());
    line("cutoff.n_max", p.cutoff.n_max.to_string());
    line("witness.threshold", p.witness_threshold.to_string());
    line("amplitude.a", format_complex(config.amplitudes.0));
    line("amplitude.b", format_complex(config.amplitudes.1));
    if let Some(n) = config.negativity {
        line("negativity", n.to_string());
    }
    if let Some(s) = &config.sweep {
        line("sweep.t", join(&s.t_values, f64::to_string));
        line("sweep.theta", join(&s.theta_values, f64::to_string));
        if !s.prep_alpha.is_empty() {
            line(
                "sweep.prep_alpha",
                join(&s.prep_alpha, |z| format_complex(*z)),
            );
        }
        if !s.meas_alpha.is_empty() {
            line(
                "sweep.meas_alpha",
                join(&s.meas_alpha, |z| format_complex(*z)),
            );
        }
        line("sweep.threads", s.threads.to_string());
    }
    out
}
