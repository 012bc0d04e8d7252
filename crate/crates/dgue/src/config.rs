//! Run configuration: a TOML document whose keys mirror the command-line
//! flags. Flags override file keys; unset keys take the defaults below.

use std::fmt;
use std::path::{Path, PathBuf};

use dgue_core::Family;
use serde::{Deserialize, Serialize};

use crate::ensemble::WindowPolicy;
use crate::experiment::RealizationSchedule;
use crate::{Error, Result};

/// Profile family name as written in configs and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Constant,
    PowerLaw,
    Exponential,
    Explicit,
}

impl ProfileName {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(Self::Constant),
            "power_law" => Some(Self::PowerLaw),
            "exponential" => Some(Self::Exponential),
            "explicit" => Some(Self::Explicit),
            _ => None,
        }
    }
}

/// `"default"` or a fixed count per size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Realizations {
    Fixed(usize),
    Named(DefaultTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultTag {
    Default,
}

impl Realizations {
    pub fn schedule(&self) -> RealizationSchedule {
        match *self {
            Realizations::Fixed(r) => RealizationSchedule::Fixed(r),
            Realizations::Named(DefaultTag::Default) => RealizationSchedule::Default,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "default" {
            Some(Realizations::Named(DefaultTag::Default))
        } else {
            s.parse().ok().map(Realizations::Fixed)
        }
    }
}

/// `"default"` or an explicit [`WindowPolicy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Window {
    Named(DefaultTag),
    Policy(WindowPolicy),
}

impl Window {
    /// `None` means the per-size default.
    pub fn policy(&self) -> Option<WindowPolicy> {
        match *self {
            Window::Named(_) => None,
            Window::Policy(w) => Some(w),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "default" {
            Ok(Window::Named(DefaultTag::Default))
        } else {
            Ok(Window::Policy(s.parse()?))
        }
    }
}

/// Inclusive energy grid `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl EnergyGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }

    /// Parses `start:stop:step`.
    pub fn parse(s: &str) -> Option<Self> {
        let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
        match parts[..] {
            [start, stop, step] => Some(Self { start, stop, step }),
            _ => None,
        }
    }
}

/// Every parameter of a run. Serialized verbatim into result files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub profile: ProfileName,
    /// Power-law exponent.
    pub p: f64,
    /// Exponential base.
    pub base: f64,
    /// Explicit profile values `v_1, …, v_N`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: usize,
    pub sizes: Vec<usize>,
    pub energy: f64,
    /// Energy grid for `solve`; `energy` alone when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_grid: Option<EnergyGrid>,
    pub q: Vec<f64>,
    pub realizations: Realizations,
    pub seed: u64,
    pub window: Window,
    /// One-based components for `oracle` and the distribution check;
    /// `1, N/2, N` when empty.
    pub components: Vec<usize>,
    pub out: PathBuf,
    /// Largest acceptable validity ratio in `predict`.
    pub validity_threshold: f64,
    /// Multiplies every tolerance of the `check` suite.
    pub tolerance_scale: f64,
    /// Worker cap. Not part of the result, so never serialized.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: ProfileName::PowerLaw,
            p: -0.5,
            base: 2.0,
            values: None,
            n: 1000,
            sizes: vec![128, 256, 512, 1024, 2048],
            energy: 0.0,
            energy_grid: None,
            q: vec![1.5, 2.2],
            realizations: Realizations::Named(DefaultTag::Default),
            seed: 1,
            window: Window::Named(DefaultTag::Default),
            components: Vec::new(),
            out: PathBuf::from("dgue-out"),
            validity_threshold: 0.1,
            tolerance_scale: 1.0,
            threads: 0,
        }
    }
}

/// Where a key's value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    Default,
    Flag,
    File { path: String, line: Option<usize> },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default value"),
            Origin::Flag => f.write_str("command-line flag"),
            Origin::File { path, line: Some(l) } => write!(f, "{path}:{l}"),
            Origin::File { path, line: None } => f.write_str(path),
        }
    }
}

/// Values given on the command line; `None` keeps the file or default value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub profile: Option<String>,
    pub p: Option<f64>,
    pub base: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub sizes: Option<Vec<usize>>,
    pub energy: Option<f64>,
    pub energy_grid: Option<String>,
    pub q: Option<Vec<f64>>,
    pub realizations: Option<String>,
    pub seed: Option<u64>,
    pub window: Option<String>,
    pub components: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub validity_threshold: Option<f64>,
    pub tolerance_scale: Option<f64>,
    pub threads: Option<usize>,
}

/// A configuration with the provenance of each key.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub config: RunConfig,
    file: Option<(String, String)>,
    flagged: Vec<&'static str>,
}

impl ResolvedConfig {
    /// Loads `path` (if any), applies `overrides`, and validates.
    ///
    /// `path` may be a TOML config, a JSON summary written by this tool, or
    /// a CSV result file; the latter two carry the config of the run that
    /// produced them.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let (config, file) = match path {
            None => (RunConfig::default(), None),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
                let shown = path.display().to_string();
                let config = parse_config_file(path, &text)?;
                (config, Some((shown, text)))
            }
        };
        let mut resolved = Self { config, file, flagged: Vec::new() };
        resolved.apply(overrides)?;
        resolved.validate()?;
        Ok(resolved)
    }

    fn origin(&self, key: &str) -> Origin {
        if self.flagged.contains(&key) {
            return Origin::Flag;
        }
        match &self.file {
            Some((path, text)) => match key_line(text, key) {
                Some(line) => Origin::File { path: path.clone(), line: Some(line) },
                None => Origin::Default,
            },
            None => Origin::Default,
        }
    }

    fn invalid(&self, key: &'static str, message: impl fmt::Display) -> Error {
        Error::Config(format!("{} (key `{key}`): {message}", self.origin(key)))
    }

    fn apply(&mut self, o: &Overrides) -> Result<()> {
        let c = &mut self.config;
        let mut flagged = Vec::new();
        macro_rules! set {
            ($field:ident, $key:literal) => {
                if let Some(v) = o.$field.clone() {
                    c.$field = v;
                    flagged.push($key);
                }
            };
        }
        if let Some(name) = &o.profile {
            c.profile = ProfileName::parse(name).ok_or_else(|| {
                Error::Config(format!(
                    "command-line flag (key `profile`): unknown profile {name:?}; expected constant, power_law, exponential or explicit"
                ))
            })?;
            flagged.push("profile");
        }
        set!(p, "p");
        set!(base, "base");
        if let Some(v) = o.values.clone() {
            c.values = Some(v);
            flagged.push("values");
        }
        set!(n, "N");
        set!(sizes, "sizes");
        set!(energy, "energy");
        if let Some(g) = &o.energy_grid {
            c.energy_grid = Some(EnergyGrid::parse(g).ok_or_else(|| {
                Error::Config(format!("command-line flag (key `energy_grid`): expected start:stop:step, got {g:?}"))
            })?);
            flagged.push("energy_grid");
        }
        set!(q, "q");
        if let Some(r) = &o.realizations {
            c.realizations = Realizations::parse(r).ok_or_else(|| {
                Error::Config(format!("command-line flag (key `realizations`): expected a count or \"default\", got {r:?}"))
            })?;
            flagged.push("realizations");
        }
        set!(seed, "seed");
        if let Some(w) = &o.window {
            c.window = Window::parse(w)
                .map_err(|e| Error::Config(format!("command-line flag (key `window`): {e}")))?;
            flagged.push("window");
        }
        set!(components, "components");
        set!(out, "out");
        set!(validity_threshold, "validity_threshold");
        set!(tolerance_scale, "tolerance_scale");
        set!(threads, "threads");
        // An explicit profile's size is its length unless N was given.
        if let (ProfileName::Explicit, Some(v)) = (c.profile, &c.values) {
            if !flagged.contains(&"N") && key_line_opt(&self.file, "N").is_none() {
                c.n = v.len();
            }
        }
        self.flagged = flagged;
        Ok(())
    }

    /// Checks every key against the preconditions of the modules that
    /// consume it.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        match c.profile {
            ProfileName::PowerLaw => {
                if !c.p.is_finite() {
                    return Err(self.invalid("p", "exponent must be finite"));
                }
                if c.p == -1.0 {
                    return Err(self.invalid("p", "p = -1 is not covered by any normalization regime"));
                }
            }
            ProfileName::Exponential => {
                if !(c.base > 1.0 && c.base.is_finite()) {
                    return Err(self.invalid("base", format!("base must exceed 1, got {}", c.base)));
                }
            }
            ProfileName::Explicit => match &c.values {
                None => return Err(self.invalid("values", "explicit profile needs `values`")),
                Some(v) => {
                    if v.len() != c.n {
                        return Err(self.invalid(
                            "values",
                            format!("{} values given for N = {}", v.len(), c.n),
                        ));
                    }
                    if let Some((i, x)) = v.iter().enumerate().find(|(_, x)| !(**x > 0.0 && x.is_finite())) {
                        return Err(self.invalid("values", format!("v[{}] = {x} is not positive", i + 1)));
                    }
                }
            },
            ProfileName::Constant => {}
        }
        if c.n < 2 {
            return Err(self.invalid("N", format!("N must be at least 2, got {}", c.n)));
        }
        if c.sizes.len() < 3 {
            return Err(self.invalid("sizes", "a size scan needs at least 3 sizes"));
        }
        if !c.sizes.windows(2).all(|w| w[0] < w[1]) || c.sizes[0] < 2 {
            return Err(self.invalid("sizes", "sizes must be strictly ascending and at least 2"));
        }
        if !c.energy.is_finite() {
            return Err(self.invalid("energy", "energy must be finite"));
        }
        if let Some(g) = &c.energy_grid {
            if !(g.start.is_finite() && g.stop.is_finite() && g.step > 0.0 && g.stop >= g.start) {
                return Err(self.invalid("energy_grid", "need finite start ≤ stop and step > 0"));
            }
            if g.points().len() > 1_000_000 {
                return Err(self.invalid("energy_grid", "more than 10^6 grid points"));
            }
        }
        if c.q.is_empty() {
            return Err(self.invalid("q", "at least one moment order is required"));
        }
        if let Some(q) = c.q.iter().find(|q| !(**q > 0.0 && q.is_finite())) {
            return Err(self.invalid("q", format!("moment orders must be positive, got {q}")));
        }
        if c.realizations == Realizations::Fixed(0) {
            return Err(self.invalid("realizations", "need at least one realization"));
        }
        if let Window::Policy(w) = c.window {
            w.validate().map_err(|e| self.invalid("window", e))?;
        }
        if let Some(k) = c.components.iter().find(|&&k| k == 0 || k > c.n) {
            return Err(self.invalid("components", format!("component {k} outside 1..={}", c.n)));
        }
        if !(c.validity_threshold > 0.0) {
            return Err(self.invalid("validity_threshold", "threshold must be positive"));
        }
        if !(c.tolerance_scale >= 0.0 && c.tolerance_scale.is_finite()) {
            return Err(self.invalid("tolerance_scale", "scale must be a finite nonnegative number"));
        }
        Ok(())
    }
}

impl RunConfig {
    pub fn family(&self) -> Family {
        match self.profile {
            ProfileName::Constant => Family::Constant,
            ProfileName::PowerLaw => Family::PowerLaw(self.p),
            ProfileName::Exponential => Family::Exponential(self.base),
            ProfileName::Explicit => Family::Explicit(self.values.clone().unwrap_or_default()),
        }
    }

    pub fn energies(&self) -> Vec<f64> {
        match &self.energy_grid {
            Some(g) => g.points(),
            None => vec![self.energy],
        }
    }

    /// Components for per-component reports: the configured list or
    /// `1, N/2, N`.
    pub fn report_components(&self) -> Vec<usize> {
        if self.components.is_empty() {
            let mut c = vec![1, (self.n / 2).max(1), self.n];
            c.dedup();
            c
        } else {
            self.components.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

fn parse_config_file(path: &Path, text: &str) -> Result<RunConfig> {
    let shown = path.display();
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let value: serde_json::Value = serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("{shown}: {e}")))?;
            let config = value
                .get("config")
                .ok_or_else(|| Error::Config(format!("{shown}: no `config` object")))?;
            serde_json::from_value(config.clone()).map_err(|e| Error::Config(format!("{shown}: {e}")))
        }
        Some("csv") => {
            let embedded = text
                .lines()
                .take_while(|l| l.starts_with('#'))
                .find_map(|l| l.strip_prefix(crate::output::CONFIG_COMMENT_PREFIX))
                .ok_or_else(|| Error::Config(format!("{shown}: no embedded config line")))?;
            serde_json::from_str(embedded).map_err(|e| Error::Config(format!("{shown}: {e}")))
        }
        _ => toml::from_str(text).map_err(|e| Error::Config(format!("{shown}: {e}"))),
    }
}

fn key_line_opt(file: &Option<(String, String)>, key: &str) -> Option<usize> {
    file.as_ref().and_then(|(_, text)| key_line(text, key))
}

/// One-based line of the first `key = …` assignment or `[key]` table header
/// in a TOML text.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let header = format!("[{key}]");
    text.lines()
        .position(|line| {
            let line = line.trim_start();
            line.starts_with(&header)
                || line.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}
