//! `key = value` scenario files.
//!
//! One assignment per line, `#` starts a comment. Keys:
//!
//! ```text
//! scheme              independent | collaborative | packet
//! n_devices           N (or loading_factor, not both)
//! loading_factor      N / K; rounded half up to a device count
//! n_slots             K                     default 400
//! packets_per_device  L                     default 100
//! learning_rate       alpha in (0, 1]       default 0.1
//! payload_bits        p                     default 64
//! header_bits         b                     default 1, 4 for collaborative
//! max_frames          frame cap             default 1000000
//! reps                episodes per point    default 200
//! seed                master seed           default 0
//! ```
//!
//! A file with `sweep_axis` and `sweep_grid` describes a sweep instead; it
//! may list several schemes (`schemes = independent, packet`) and, for
//! non-load axes, several comma-separated loading factors. In a sweep
//! `header_bits` sets the collaborative quantizer width only.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{devices_for_load, Axis, SweepSpec, DEFAULT_REPS};
use crate::model::{Scheme, SimConfig};
use crate::rewards::RewardScheme;

const KEYS: &[&str] = &[
    "scheme",
    "schemes",
    "n_devices",
    "loading_factor",
    "n_slots",
    "packets_per_device",
    "learning_rate",
    "payload_bits",
    "header_bits",
    "max_frames",
    "reps",
    "seed",
    "sweep_axis",
    "sweep_grid",
];

/// A parsed file: a single scenario or a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedConfig {
    Single { config: SimConfig, reps: u64 },
    Sweep(SweepSpec),
}

pub fn parse_config(path: &Path) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Entries<'a> {
    found: Vec<(&'a str, Entry<'a>)>,
}

impl<'a> Entries<'a> {
    fn get(&self, key: &str) -> Option<&Entry<'a>> {
        self.found.iter().find(|(k, _)| *k == key).map(|(_, e)| e)
    }

    fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    fn parse<T: FromStr>(&self, key: &'static str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|e| {
                e.value.parse::<T>().map_err(|err| Error::Parse {
                    line: e.line,
                    field: key.to_string(),
                    reason: format!("`{}`: {err}", e.value),
                })
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &'static str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|item| {
                let item = item.trim();
                item.parse::<T>().map_err(|err| Error::Parse {
                    line: e.line,
                    field: key.to_string(),
                    reason: format!("`{item}`: {err}"),
                })
            })
            .collect::<Result<Vec<T>>>()
            .map(Some)
    }
}

fn tokenize(text: &str) -> Result<Entries<'_>> {
    let mut found: Vec<(&str, Entry<'_>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                line,
                field: content.to_string(),
                reason: "expected `key = value`".into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Parse {
                line,
                field: key.to_string(),
                reason: "unknown key".into(),
            });
        }
        if value.is_empty() {
            return Err(Error::Parse {
                line,
                field: key.to_string(),
                reason: "empty value".into(),
            });
        }
        if let Some((_, first)) = found.iter().find(|(k, _)| *k == key) {
            return Err(Error::Parse {
                line,
                field: key.to_string(),
                reason: format!("duplicate key (first set on line {})", first.line),
            });
        }
        found.push((key, Entry { line, value }));
    }
    Ok(Entries { found })
}

/// Parse and validate the contents of a config file.
pub fn parse_config_str(text: &str) -> Result<ParsedConfig> {
    let e = tokenize(text)?;

    if e.has("n_devices") && e.has("loading_factor") {
        let line = e.get("loading_factor").map_or(0, |x| x.line);
        return Err(Error::Parse {
            line,
            field: "loading_factor".into(),
            reason: "give n_devices or loading_factor, not both".into(),
        });
    }

    let mut base = SimConfig::new(Scheme::PacketBased);
    if let Some(k) = e.parse::<usize>("n_slots")? {
        base.n_slots = k;
    }
    if let Some(l) = e.parse("packets_per_device")? {
        base.packets_per_device = l;
    }
    if let Some(a) = e.parse("learning_rate")? {
        base.learning_rate = a;
    }
    if let Some(p) = e.parse("payload_bits")? {
        base.payload_bits = p;
    }
    if let Some(m) = e.parse("max_frames")? {
        base.max_frames = m;
    }
    if let Some(s) = e.parse("seed")? {
        base.seed = s;
    }
    let header_bits: Option<u32> = e.parse("header_bits")?;
    let reps: u64 = e.parse("reps")?.unwrap_or(DEFAULT_REPS);
    if reps < 1 {
        return Err(Error::invalid("reps", "must be at least 1"));
    }

    let loads: Vec<f64> = e.list("loading_factor")?.unwrap_or_default();
    let n_devices: Option<usize> = e.parse("n_devices")?;

    if e.has("sweep_axis") || e.has("sweep_grid") {
        let axis: Axis = e
            .parse("sweep_axis")?
            .ok_or(Error::MissingField("sweep_axis"))?;
        let grid: Vec<f64> = e
            .list("sweep_grid")?
            .ok_or(Error::MissingField("sweep_grid"))?;
        let quant_bits = header_bits.unwrap_or(Scheme::Collaborative.default_header_bits());
        let labels: Vec<String> = match (e.list::<String>("schemes")?, e.get("scheme")) {
            (Some(_), Some(_)) => {
                return Err(Error::invalid("schemes", "give scheme or schemes, not both"))
            }
            (Some(list), None) => list,
            (None, Some(one)) => vec![one.value.to_string()],
            (None, None) => return Err(Error::MissingField("schemes")),
        };
        let key = if e.has("schemes") { "schemes" } else { "scheme" };
        let line = e.get(key).map_or(0, |x| x.line);
        let schemes = labels
            .iter()
            .map(|label| {
                scheme_label(label, quant_bits).map_err(|reason| Error::Parse {
                    line,
                    field: key.to_string(),
                    reason,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(n) = n_devices {
            base.n_devices = n;
        }
        let spec = SweepSpec {
            base,
            axis,
            grid,
            schemes,
            reps,
            loads: if axis == Axis::LoadingFactor { Vec::new() } else { loads.clone() },
        };
        if axis == Axis::LoadingFactor && !loads.is_empty() {
            return Err(Error::invalid(
                "loading_factor",
                "a loading_factor sweep takes its loads from sweep_grid",
            ));
        }
        spec.validate()?;
        return Ok(ParsedConfig::Sweep(spec));
    }

    if e.has("schemes") {
        return Err(Error::invalid("schemes", "only valid together with sweep_axis"));
    }
    let scheme: Scheme = e.parse("scheme")?.ok_or(Error::MissingField("scheme"))?;
    let mut config = SimConfig {
        scheme,
        header_bits: header_bits.unwrap_or(scheme.default_header_bits()),
        ..base
    };
    config.n_devices = match (n_devices, loads.as_slice()) {
        (Some(n), _) => n,
        (None, []) => config.n_slots,
        (None, [load]) => {
            if load.is_nan() || *load <= 0.0 {
                return Err(Error::invalid("loading_factor", format!("{load} must be positive")));
            }
            devices_for_load(*load, config.n_slots)
        }
        (None, _) => {
            return Err(Error::invalid(
                "loading_factor",
                "several loading factors need a sweep_axis",
            ))
        }
    };
    config.validate()?;
    Ok(ParsedConfig::Single { config, reps })
}

/// `collaborative-b<bits>` or a plain scheme name; plain collaborative
/// takes `default_bits`.
fn scheme_label(label: &str, default_bits: u32) -> std::result::Result<RewardScheme, String> {
    let label = label.trim();
    if let Some(bits) = label
        .strip_prefix("collaborative-b")
        .or_else(|| label.strip_prefix("col-b"))
    {
        let quant_bits = bits
            .parse()
            .map_err(|e| format!("`{label}`: bad quantizer width: {e}"))?;
        return Ok(RewardScheme::Collaborative { quant_bits });
    }
    Ok(match label.parse::<Scheme>()? {
        Scheme::Independent => RewardScheme::Independent,
        Scheme::Collaborative => RewardScheme::Collaborative {
            quant_bits: default_bits,
        },
        Scheme::PacketBased => RewardScheme::PacketBased,
    })
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Render a config so that [`parse_config_str`] reads it back unchanged.
pub fn render_config(parsed: &ParsedConfig) -> String {
    let mut out = String::new();
    let (base, reps) = match parsed {
        ParsedConfig::Single { config, reps } => {
            let _ = writeln!(out, "scheme = {}", config.scheme);
            let _ = writeln!(out, "n_devices = {}", config.n_devices);
            let _ = writeln!(out, "header_bits = {}", config.header_bits);
            (config, *reps)
        }
        ParsedConfig::Sweep(spec) => {
            let _ = writeln!(out, "schemes = {}", join(&spec.schemes));
            let _ = writeln!(out, "sweep_axis = {}", spec.axis);
            let _ = writeln!(out, "sweep_grid = {}", join(&spec.grid));
            if spec.loads.is_empty() {
                let _ = writeln!(out, "n_devices = {}", spec.base.n_devices);
            } else {
                let _ = writeln!(out, "loading_factor = {}", join(&spec.loads));
            }
            (&spec.base, spec.reps)
        }
    };
    let _ = writeln!(out, "n_slots = {}", base.n_slots);
    let _ = writeln!(out, "packets_per_device = {}", base.packets_per_device);
    let _ = writeln!(out, "learning_rate = {}", base.learning_rate);
    let _ = writeln!(out, "payload_bits = {}", base.payload_bits);
    let _ = writeln!(out, "max_frames = {}", base.max_frames);
    let _ = writeln!(out, "reps = {reps}");
    let _ = writeln!(out, "seed = {}", base.seed);
    out
}
