//! Flat TOML sweep configuration.
//!
//! Every key is optional. Grids are either a number, a list of numbers, or a
//! range string `"lin:a:b:n"` / `"log:a:b:n"` with `n` points including both
//! ends. Unknown keys are rejected so that typos do not silently fall back to
//! defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use dirty_mac::channel::ChannelKind;
use dirty_mac::entropy::MIN_MC_SAMPLES;
use dirty_mac::schemes::PresetKind;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Grid {
    Single(f64),
    List(Vec<f64>),
    Range(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    channels: Option<Vec<String>>,
    p1: Option<Grid>,
    p2: Option<Grid>,
    n: Option<Grid>,
    snr: Option<Grid>,
    ratio: Option<Grid>,
    alphas: Option<Grid>,
    presets: Option<Vec<String>>,
    mode: Option<String>,
    k: Option<usize>,
    samples: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

/// A preset as named in the config. Plain `lemma7` picks the scaling
/// `α₁ = P₁/(P₁+N)` of each grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PresetChoice {
    Fixed(PresetKind),
    Lemma7Star,
}

impl PresetChoice {
    pub fn resolve(self, p1: f64, n: f64) -> PresetKind {
        match self {
            Self::Fixed(k) => k,
            Self::Lemma7Star => PresetKind::Lemma7 { alpha1: p1 / (p1 + n) },
        }
    }
}

/// Rate curve whose time-sharing envelope the `envelope` command tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeMode {
    Symmetric,
    OneDim,
    Thm4,
    Helper,
    KUser,
}

impl FromStr for EnvelopeMode {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "symmetric" => Self::Symmetric,
            "one_dim" => Self::OneDim,
            "thm4" => Self::Thm4,
            "helper" => Self::Helper,
            "k_user" => Self::KUser,
            other => return Err(CliError::Config(format!("unknown envelope mode {other:?}"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub channels: Vec<ChannelKind>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub n: Vec<f64>,
    pub snr: Vec<f64>,
    pub ratio: Vec<f64>,
    pub alphas: Vec<f64>,
    pub presets: Vec<PresetChoice>,
    pub mode: EnvelopeMode,
    pub k: usize,
    pub samples: usize,
    /// Only the simulation consumes randomness, so only it insists on a seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

/// Command-line flags that override config keys.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub samples: Option<usize>,
}

const DEFAULT_PRESETS: [&str; 9] = [
    "thm2",
    "thm2_dithered",
    "symmetric_mmse",
    "thm3_helper",
    "thm4",
    "helper_thm5",
    "helper_lemma4",
    "lemma7",
    "common",
];

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_range(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let [kind, a, b, n] = parts[..] else {
        return Err(bad(format!("{key}: expected \"lin:a:b:n\" or \"log:a:b:n\", got {s:?}")));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(format!("{key}: {t:?} is not a number")));
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n.trim().parse().map_err(|_| bad(format!("{key}: {n:?} is not a point count")))?;
    if n == 0 {
        return Err(bad(format!("{key}: range needs at least one point")));
    }
    let t = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
    match kind {
        "lin" => Ok((0..n).map(|i| a + (b - a) * t(i)).collect()),
        "log" if a > 0.0 && b > 0.0 => Ok((0..n).map(|i| a * (b / a).powf(t(i))).collect()),
        "log" => Err(bad(format!("{key}: log range needs positive ends"))),
        other => Err(bad(format!("{key}: unknown range kind {other:?}"))),
    }
}

fn grid(key: &str, g: Option<Grid>, default: Grid) -> Result<Vec<f64>, CliError> {
    let values = match g.unwrap_or(default) {
        Grid::Single(v) => vec![v],
        Grid::List(v) => v,
        Grid::Range(s) => parse_range(key, &s)?,
    };
    if values.is_empty() {
        return Err(bad(format!("{key}: grid is empty")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(bad(format!("{key}: non-finite value {v}")));
    }
    Ok(values)
}

fn positive(key: &str, values: &[f64]) -> Result<(), CliError> {
    match values.iter().find(|v| **v <= 0.0) {
        Some(v) => Err(bad(format!("{key}: values must be positive, got {v}"))),
        None => Ok(()),
    }
}

fn channel(name: &str) -> Result<ChannelKind, CliError> {
    match name {
        "single_dirty" => Ok(ChannelKind::SingleDirty),
        "doubly_dirty" => Ok(ChannelKind::DoublyDirty),
        "common" => Ok(ChannelKind::Common),
        other => Err(bad(format!("unknown channel {other:?}; expected single_dirty, doubly_dirty or common"))),
    }
}

fn preset(name: &str) -> Result<PresetChoice, CliError> {
    if name.trim() == "lemma7" {
        return Ok(PresetChoice::Lemma7Star);
    }
    let kind: PresetKind = name.parse().map_err(|e| bad(format!("{e}")))?;
    if let PresetKind::Lemma7 { alpha1 } = kind {
        if !(0.0..=1.0).contains(&alpha1) {
            return Err(bad(format!("lemma7 scaling {alpha1} outside [0, 1]")));
        }
    }
    Ok(PresetChoice::Fixed(kind))
}

impl SweepConfig {
    /// Reads the config file, if any, and applies the flag overrides.
    pub fn load(path: Option<&Path>, over: &Overrides) -> Result<Self, CliError> {
        let raw: RawConfig = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| bad(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| bad(format!("invalid config {}: {e}", p.display())))?
            }
            None => RawConfig::default(),
        };
        Self::from_raw(raw, over)
    }

    fn from_raw(raw: RawConfig, over: &Overrides) -> Result<Self, CliError> {
        let channels = match raw.channels {
            Some(list) if list.is_empty() => return Err(bad("channels: list is empty")),
            Some(list) => list.iter().map(|c| channel(c)).collect::<Result<_, _>>()?,
            None => vec![ChannelKind::SingleDirty, ChannelKind::DoublyDirty, ChannelKind::Common],
        };
        let p1 = grid("p1", raw.p1, Grid::Single(10.0))?;
        let p2 = grid("p2", raw.p2, Grid::Single(2.0))?;
        let n = grid("n", raw.n, Grid::Single(1.0))?;
        let snr = grid("snr", raw.snr, Grid::Range("lin:0.01:10:1000".into()))?;
        let ratio = grid("ratio", raw.ratio, Grid::Single(1.0))?;
        for (key, values) in [("p1", &p1), ("p2", &p2), ("n", &n), ("snr", &snr), ("ratio", &ratio)] {
            positive(key, values)?;
        }
        if snr.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("snr: grid must be strictly increasing"));
        }
        let alphas = grid("alphas", raw.alphas, Grid::Range("lin:0:1:101".into()))?;
        if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(bad(format!("alphas: {a} outside [0, 1]")));
        }
        let presets = match raw.presets {
            Some(list) if list.is_empty() => return Err(bad("presets: list is empty")),
            Some(list) => list,
            None => DEFAULT_PRESETS.iter().map(|s| s.to_string()).collect(),
        };
        let presets = presets.iter().map(|p| preset(p)).collect::<Result<_, _>>()?;
        let mode = raw.mode.as_deref().unwrap_or("thm4").parse()?;
        let k = raw.k.unwrap_or(2);
        if k < 2 {
            return Err(bad(format!("k: need at least two users, got {k}")));
        }
        let samples = over.samples.or(raw.samples).unwrap_or(1_000_000);
        if samples < MIN_MC_SAMPLES {
            return Err(bad(format!("samples: at least {MIN_MC_SAMPLES} are needed, got {samples}")));
        }
        Ok(Self {
            channels,
            p1,
            p2,
            n,
            snr,
            ratio,
            alphas,
            presets,
            mode,
            k,
            samples,
            seed: over.seed.or(raw.seed),
            out: over.out.clone().or(raw.out).unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Cartesian product of the power grids in `p1`, `p2`, `n` order.
    pub fn power_points(&self) -> Vec<(f64, f64, f64)> {
        let mut pts = Vec::with_capacity(self.p1.len() * self.p2.len() * self.n.len());
        for &a in &self.p1 {
            for &b in &self.p2 {
                for &c in &self.n {
                    pts.push((a, b, c));
                }
            }
        }
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SweepConfig, CliError> {
        SweepConfig::from_raw(toml::from_str(text).map_err(|e| bad(e.to_string()))?, &Overrides::default())
    }

    #[test]
    fn ranges_include_both_ends() {
        let v = parse_range("x", "log:0.01:100:5").unwrap();
        assert_eq!(v.len(), 5);
        assert!((v[0] - 0.01).abs() < 1e-15 && (v[4] - 100.0).abs() < 1e-12);
        assert!((v[2] - 1.0).abs() < 1e-12);
        assert_eq!(parse_range("x", "lin:0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("x", "lin:2:9:1").unwrap(), vec![2.0]);
    }

    #[test]
    fn accepts_numbers_lists_and_ranges() {
        let c = parse("p1 = 3\np2 = [1, 2.5]\nn = \"log:1:10:2\"\npresets = [\"lemma7\", \"lemma7(0.25)\"]").unwrap();
        assert_eq!(c.p1, vec![3.0]);
        assert_eq!(c.p2, vec![1.0, 2.5]);
        assert_eq!(c.n, vec![1.0, 10.0]);
        assert_eq!(c.power_points().len(), 4);
        assert_eq!(c.presets[0], PresetChoice::Lemma7Star);
        assert_eq!(c.presets[1], PresetChoice::Fixed(PresetKind::Lemma7 { alpha1: 0.25 }));
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "p1 = []",
            "p1 = -1",
            "snr = [2, 1]",
            "snr = \"geo:1:2:3\"",
            "presets = [\"thm9\"]",
            "presets = [\"lemma7(1.5)\"]",
            "channels = [\"k_user\"]",
            "mode = \"other\"",
            "samples = 10",
            "unknown_key = 1",
            "k = 1",
        ] {
            assert!(matches!(parse(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn flags_override_config() {
        let raw: RawConfig = toml::from_str("seed = 1\nsamples = 200000\nout = \"a\"").unwrap();
        let over = Overrides { seed: Some(9), out: Some("b".into()), samples: Some(300_000) };
        let c = SweepConfig::from_raw(raw, &over).unwrap();
        assert_eq!((c.seed, c.samples, c.out), (Some(9), 300_000, PathBuf::from("b")));
    }
}
