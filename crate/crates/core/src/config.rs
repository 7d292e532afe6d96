//! Experiment configuration: a flat `key = value` format with `[section]`
//! headers and `#` comments.
//!
//! ```text
//! [grid]
//! t_end = 0.25
//! x_left = 0
//! x_right = 1
//! n_x = 32
//! n_t = auto
//!
//! [model]
//! preset = allen-cahn
//! c = 1
//! gamma = 0.5
//! ```
//!
//! Unknown sections and keys are rejected, as are repeated keys. Every field
//! has a default, so an empty file is a valid (small) experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::coefficients::{preset, CoefficientSpec, Coefficient, InitialData, PresetName};
use crate::error::{Error, Result};
use crate::grid::SpaceTimeGrid;
use crate::solver::{Boundary, NoiseScheme, SolveOptions};

/// Default localization schedule.
pub const DEFAULT_LEVELS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Constant { value: f64 },
    Gaussian { center: f64, sigma: f64, height: f64 },
    Plateau { center: f64, width: f64, height: f64, ramp: f64 },
    Bump { center: f64, radius: f64, height: f64 },
}

impl InitialSpec {
    pub fn build(&self) -> InitialData {
        match *self {
            InitialSpec::Constant { value } => InitialData::constant(value),
            InitialSpec::Gaussian { center, sigma, height } => InitialData::gaussian(center, sigma, height),
            InitialSpec::Plateau { center, width, height, ramp } => {
                InitialData::plateau(center, width, height, ramp)
            }
            InitialSpec::Bump { center, radius, height } => InitialData::bump(center, radius, height),
        }
    }

    /// `max |h|`
    pub fn amplitude(&self) -> f64 {
        match *self {
            InitialSpec::Constant { value } => value.abs(),
            InitialSpec::Gaussian { height, .. }
            | InitialSpec::Plateau { height, .. }
            | InitialSpec::Bump { height, .. } => height.abs(),
        }
    }

    fn shape_name(&self) -> &'static str {
        match self {
            InitialSpec::Constant { .. } => "constant",
            InitialSpec::Gaussian { .. } => "gaussian",
            InitialSpec::Plateau { .. } => "plateau",
            InitialSpec::Bump { .. } => "bump",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub n_x: usize,
    /// `None` picks the smallest CFL-stable step count.
    pub n_t: Option<usize>,
    pub allow_unstable: bool,

    pub preset: PresetName,
    pub c: f64,
    pub gamma: f64,
    pub boundary: Boundary,
    /// `false` sets `a = 0` (deterministic run).
    pub noise: bool,
    pub clamp_nonnegative: bool,
    pub scheme: NoiseScheme,
    /// Which equation `simulate` solves: the drifted one when true.
    pub include_d: bool,

    pub initial: InitialSpec,

    pub ensemble_size: usize,
    pub seed: u64,
    pub localization: Vec<f64>,
    /// Keep every `thin`-th time slice in field and support exports.
    pub thin: Option<usize>,
    pub write_fields: bool,
    /// Observation point of one-point functionals; domain midpoint if unset.
    pub observe_x: Option<f64>,
    pub permutations: usize,

    /// Support threshold; `1e-6 max|h|` if unset.
    pub epsilon: Option<f64>,
    pub gammas: Vec<f64>,
    /// Containment interval; middle half of the domain if unset.
    pub containment: Option<(f64, f64)>,
    /// Time at which support widths are compared; `t_end` if unset.
    pub support_time: Option<f64>,

    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            t_end: 0.25,
            x_left: 0.0,
            x_right: 1.0,
            n_x: 32,
            n_t: None,
            allow_unstable: false,
            preset: PresetName::AllenCahn,
            c: 1.0,
            gamma: 0.5,
            boundary: Boundary::Neumann,
            noise: true,
            clamp_nonnegative: false,
            scheme: NoiseScheme::EulerMaruyama,
            include_d: true,
            initial: InitialSpec::Plateau {
                center: 0.5,
                width: 0.5,
                height: 0.5,
                ramp: 0.1,
            },
            ensemble_size: 1000,
            seed: 1,
            localization: DEFAULT_LEVELS.to_vec(),
            thin: None,
            write_fields: false,
            observe_x: None,
            permutations: 1000,
            epsilon: None,
            gammas: vec![0.5, 1.0],
            containment: None,
            support_time: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("grid", &["t_end", "x_left", "x_right", "n_x", "n_t", "allow_unstable"]),
    (
        "model",
        &["preset", "c", "gamma", "boundary", "noise", "clamp_nonnegative", "scheme", "equation"],
    ),
    (
        "initial",
        &["shape", "center", "sigma", "width", "height", "ramp", "radius", "value"],
    ),
    (
        "ensemble",
        &["size", "seed", "localization", "thin", "write_fields", "observe_x", "permutations"],
    ),
    ("support", &["epsilon", "gammas", "containment", "time"]),
    ("output", &["dir"]),
];

fn is_known(section: &str, key: &str) -> bool {
    KEYS.iter()
        .any(|(s, keys)| *s == section && keys.contains(&key))
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some((_, raw)) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::config(key, format!("cannot parse `{raw}`"))),
        }
    }

    fn take_raw(&mut self, key: &str) -> Option<String> {
        self.map.remove(key).map(|(_, v)| v)
    }

    fn take_auto<T: FromStr>(&mut self, key: &str) -> Result<Option<Option<T>>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(raw) if raw == "auto" => Ok(Some(None)),
            Some(raw) => raw
                .parse::<T>()
                .map(|v| Some(Some(v)))
                .map_err(|_| Error::config(key, format!("cannot parse `{raw}`"))),
        }
    }

    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(key, format!("cannot parse `{raw}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw {
        "true" | "yes" | "on" => Some(true),
        "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

fn take_bool(e: &mut Entries, key: &str) -> Result<Option<bool>> {
    match e.take_raw(key) {
        None => Ok(None),
        Some(raw) => parse_bool(&raw)
            .map(Some)
            .ok_or_else(|| Error::config(key, format!("expected true or false, got `{raw}`"))),
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let cfg = RunConfig::parse_unvalidated(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    /// Syntax and key checks only. Callers that override fields afterwards
    /// (command-line flags) must call [`RunConfig::validate`] themselves.
    pub fn parse_unvalidated(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut section: Option<String> = None;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::ConfigParse {
                    line: lineno,
                    msg: format!("malformed section header `{line}`"),
                })?;
                let name = name.trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(Error::ConfigParse {
                        line: lineno,
                        msg: format!("unknown section `[{name}]`"),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
                line: lineno,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let sec = section.as_deref().ok_or_else(|| Error::ConfigParse {
                line: lineno,
                msg: "key outside of any section".into(),
            })?;
            let key = key.trim();
            if !is_known(sec, key) {
                return Err(Error::ConfigParse {
                    line: lineno,
                    msg: format!("unknown key `{key}` in [{sec}]"),
                });
            }
            let full = format!("{sec}.{key}");
            if map.contains_key(&full) {
                return Err(Error::ConfigParse {
                    line: lineno,
                    msg: format!("duplicate key `{full}`"),
                });
            }
            map.insert(full, (lineno, value.trim().to_string()));
        }
        RunConfig::from_entries(Entries { map })
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }

    pub fn load_unvalidated(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse_unvalidated(&text)
    }

    fn from_entries(mut e: Entries) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let d = &mut cfg;
        macro_rules! set {
            ($field:expr, $val:expr) => {
                if let Some(v) = $val {
                    $field = v;
                }
            };
        }
        set!(d.t_end, e.take("grid.t_end")?);
        set!(d.x_left, e.take("grid.x_left")?);
        set!(d.x_right, e.take("grid.x_right")?);
        set!(d.n_x, e.take("grid.n_x")?);
        set!(d.n_t, e.take_auto("grid.n_t")?);
        set!(d.allow_unstable, take_bool(&mut e, "grid.allow_unstable")?);

        if let Some(raw) = e.take_raw("model.preset") {
            d.preset = raw
                .parse()
                .map_err(|_| Error::config("model.preset", format!("unknown preset `{raw}`")))?;
        }
        set!(d.c, e.take("model.c")?);
        set!(d.gamma, e.take("model.gamma")?);
        if let Some(raw) = e.take_raw("model.boundary") {
            d.boundary = raw.parse().map_err(|_| {
                Error::config("model.boundary", format!("unknown boundary `{raw}`"))
            })?;
        }
        set!(d.noise, take_bool(&mut e, "model.noise")?);
        set!(d.clamp_nonnegative, take_bool(&mut e, "model.clamp_nonnegative")?);
        if let Some(raw) = e.take_raw("model.scheme") {
            d.scheme = raw.parse().map_err(|_| {
                Error::config("model.scheme", format!("expected euler or splitting, got `{raw}`"))
            })?;
        }
        if let Some(raw) = e.take_raw("model.equation") {
            d.include_d = match raw.as_str() {
                "heat" => false,
                "target" => true,
                _ => {
                    return Err(Error::config(
                        "model.equation",
                        format!("expected heat or target, got `{raw}`"),
                    ))
                }
            };
        }

        let shape = e.take_raw("initial.shape");
        let center: Option<f64> = e.take("initial.center")?;
        let sigma: Option<f64> = e.take("initial.sigma")?;
        let width: Option<f64> = e.take("initial.width")?;
        let height: Option<f64> = e.take("initial.height")?;
        let ramp: Option<f64> = e.take("initial.ramp")?;
        let radius: Option<f64> = e.take("initial.radius")?;
        let value: Option<f64> = e.take("initial.value")?;
        let mid = 0.5 * (d.x_left + d.x_right);
        let len = d.x_right - d.x_left;
        let shape = shape.unwrap_or_else(|| d.initial.shape_name().to_string());
        let unused = |name: &str, present: bool| -> Result<()> {
            if present {
                Err(Error::config(
                    format!("initial.{name}"),
                    format!("not used by shape `{shape}`"),
                ))
            } else {
                Ok(())
            }
        };
        d.initial = match shape.as_str() {
            "constant" => {
                unused("center", center.is_some())?;
                unused("sigma", sigma.is_some())?;
                unused("width", width.is_some())?;
                unused("height", height.is_some())?;
                unused("ramp", ramp.is_some())?;
                unused("radius", radius.is_some())?;
                InitialSpec::Constant {
                    value: value.unwrap_or(1.0),
                }
            }
            "gaussian" => {
                unused("width", width.is_some())?;
                unused("ramp", ramp.is_some())?;
                unused("radius", radius.is_some())?;
                unused("value", value.is_some())?;
                InitialSpec::Gaussian {
                    center: center.unwrap_or(mid),
                    sigma: sigma.unwrap_or(0.1 * len),
                    height: height.unwrap_or(1.0),
                }
            }
            "plateau" => {
                unused("sigma", sigma.is_some())?;
                unused("radius", radius.is_some())?;
                unused("value", value.is_some())?;
                InitialSpec::Plateau {
                    center: center.unwrap_or(mid),
                    width: width.unwrap_or(0.5 * len),
                    height: height.unwrap_or(0.5),
                    ramp: ramp.unwrap_or(0.1 * len),
                }
            }
            "bump" => {
                unused("sigma", sigma.is_some())?;
                unused("width", width.is_some())?;
                unused("ramp", ramp.is_some())?;
                unused("value", value.is_some())?;
                InitialSpec::Bump {
                    center: center.unwrap_or(mid),
                    radius: radius.unwrap_or(0.25 * len),
                    height: height.unwrap_or(1.0),
                }
            }
            other => {
                return Err(Error::config(
                    "initial.shape",
                    format!("unknown shape `{other}` (constant, gaussian, plateau, bump)"),
                ))
            }
        };

        set!(d.ensemble_size, e.take("ensemble.size")?);
        set!(d.seed, e.take("ensemble.seed")?);
        set!(d.localization, e.take_list("ensemble.localization")?);
        set!(d.thin, e.take_auto("ensemble.thin")?);
        set!(d.write_fields, take_bool(&mut e, "ensemble.write_fields")?);
        set!(d.observe_x, e.take_auto("ensemble.observe_x")?);
        set!(d.permutations, e.take("ensemble.permutations")?);

        set!(d.epsilon, e.take_auto("support.epsilon")?);
        set!(d.gammas, e.take_list("support.gammas")?);
        let containment_auto = e
            .map
            .get("support.containment")
            .is_some_and(|(_, v)| v == "auto");
        if containment_auto {
            e.map.remove("support.containment");
            d.containment = None;
        } else if let Some(list) = e.take_list("support.containment")? {
            match list.as_slice() {
                [lo, hi] => d.containment = Some((*lo, *hi)),
                _ => {
                    return Err(Error::config(
                        "support.containment",
                        "expected two numbers `lo, hi`",
                    ))
                }
            }
        }
        set!(d.support_time, e.take_auto("support.time")?);

        if let Some(dir) = e.take_raw("output.dir") {
            d.out_dir = PathBuf::from(dir);
        }
        debug_assert!(e.map.is_empty(), "unhandled keys: {:?}", e.map.keys());

        Ok(cfg)
    }

    /// Checks every field against the preconditions of the modules that
    /// consume it.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_unchecked().map_err(|e| Error::config("grid", e.to_string()))?;
        if !grid.stable && !self.allow_unstable {
            return Err(Error::config(
                "grid.n_t",
                format!(
                    "dt = {:e} exceeds dx^2/2 = {:e}; set allow_unstable = true to override",
                    grid.dt,
                    0.5 * grid.dx * grid.dx
                ),
            ));
        }
        if self.c == 0.0 || !self.c.is_finite() {
            return Err(Error::config("model.c", "C must be finite and nonzero"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("model.gamma", "gamma must lie in [0, 1]"));
        }
        match self.initial {
            InitialSpec::Gaussian { sigma, .. } if !(sigma > 0.0) => {
                return Err(Error::config("initial.sigma", "must be positive"))
            }
            InitialSpec::Plateau { width, ramp, .. } if !(width >= 0.0) || !(ramp >= 0.0) => {
                return Err(Error::config("initial.width", "width and ramp must be nonnegative"))
            }
            InitialSpec::Bump { radius, .. } if !(radius > 0.0) => {
                return Err(Error::config("initial.radius", "must be positive"))
            }
            _ => {}
        }
        if self.ensemble_size == 0 {
            return Err(Error::config("ensemble.size", "must be at least 1"));
        }
        if self.localization.is_empty() || self.localization.iter().any(|n| !(*n > 0.0)) {
            return Err(Error::config(
                "ensemble.localization",
                "levels must be a nonempty list of positive numbers",
            ));
        }
        if self.thin == Some(0) {
            return Err(Error::config("ensemble.thin", "must be at least 1"));
        }
        if let Some(x) = self.observe_x {
            if !(self.x_left..=self.x_right).contains(&x) {
                return Err(Error::config("ensemble.observe_x", "outside the domain"));
            }
        }
        if self.permutations < 100 {
            return Err(Error::config("ensemble.permutations", "must be at least 100"));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(Error::config("support.epsilon", "must be positive"));
            }
        }
        if self.gammas.is_empty() || self.gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
            return Err(Error::config("support.gammas", "each gamma must lie in [0, 1]"));
        }
        if let Some((lo, hi)) = self.containment {
            if !(lo < hi) {
                return Err(Error::config("support.containment", "need lo < hi"));
            }
        }
        if let Some(t) = self.support_time {
            if !(0.0..=self.t_end).contains(&t) {
                return Err(Error::config("support.time", "must lie in [0, t_end]"));
            }
        }
        Ok(())
    }

    fn grid_unchecked(&self) -> Result<SpaceTimeGrid> {
        if self.n_x == 0 {
            return Err(Error::InvalidGrid("n_x must be at least 1".into()));
        }
        let n_t = self
            .n_t
            .unwrap_or_else(|| SpaceTimeGrid::stable_steps(self.t_end, self.x_left, self.x_right, self.n_x));
        SpaceTimeGrid::new(self.t_end, self.x_left, self.x_right, n_t, self.n_x)
    }

    pub fn grid(&self) -> Result<SpaceTimeGrid> {
        self.grid_unchecked()
    }

    /// Coefficients at the configured `gamma`.
    pub fn coefficients(&self) -> Result<CoefficientSpec> {
        self.coefficients_at(self.gamma)
    }

    pub fn coefficients_at(&self, gamma: f64) -> Result<CoefficientSpec> {
        let mut spec = preset(self.preset, self.c, gamma)?;
        if !self.noise {
            spec.a = Coefficient::Zero;
        }
        Ok(spec)
    }

    pub fn initial_data(&self) -> InitialData {
        self.initial.build()
    }

    pub fn solve_options(&self, include_d: bool) -> SolveOptions {
        SolveOptions {
            include_d,
            boundary: self.boundary,
            laplacian: true,
            allow_unstable: self.allow_unstable,
            clamp_nonnegative: self.clamp_nonnegative,
            scheme: self.scheme,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
            .unwrap_or_else(|| 1e-6 * self.initial.amplitude().max(f64::MIN_POSITIVE))
    }

    pub fn observe_x(&self) -> f64 {
        self.observe_x
            .unwrap_or(0.5 * (self.x_left + self.x_right))
    }

    pub fn containment(&self) -> (f64, f64) {
        self.containment.unwrap_or_else(|| {
            let q = 0.25 * (self.x_right - self.x_left);
            (self.x_left + q, self.x_right - q)
        })
    }

    /// Time-slice stride for exports: about 100 slices by default.
    pub fn thin(&self, n_t: usize) -> usize {
        self.thin.unwrap_or_else(|| (n_t / 100).max(1))
    }

    /// Canonical text of every experiment parameter (output location excluded).
    /// Equal texts mean equal experiments.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let grid_n_t = self
            .grid()
            .map(|g| g.n_t.to_string())
            .unwrap_or_else(|_| "invalid".into());
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| format!("{x:?}"));
        let _ = writeln!(s, "grid.t_end={:?}", self.t_end);
        let _ = writeln!(s, "grid.x_left={:?}", self.x_left);
        let _ = writeln!(s, "grid.x_right={:?}", self.x_right);
        let _ = writeln!(s, "grid.n_x={}", self.n_x);
        let _ = writeln!(s, "grid.n_t={grid_n_t}");
        let _ = writeln!(s, "grid.allow_unstable={}", self.allow_unstable);
        let _ = writeln!(s, "model.preset={}", self.preset);
        let _ = writeln!(s, "model.c={:?}", self.c);
        let _ = writeln!(s, "model.gamma={:?}", self.gamma);
        let _ = writeln!(s, "model.boundary={}", self.boundary);
        let _ = writeln!(s, "model.noise={}", self.noise);
        let _ = writeln!(s, "model.clamp_nonnegative={}", self.clamp_nonnegative);
        let _ = writeln!(s, "model.scheme={}", self.scheme);
        let _ = writeln!(s, "model.equation={}", if self.include_d { "target" } else { "heat" });
        let _ = writeln!(s, "initial={:?}", self.initial);
        let _ = writeln!(s, "ensemble.size={}", self.ensemble_size);
        let _ = writeln!(s, "ensemble.seed={}", self.seed);
        let _ = writeln!(s, "ensemble.localization={}", list(&self.localization));
        let _ = writeln!(s, "ensemble.thin={}", self.thin.map_or("auto".into(), |k| k.to_string()));
        let _ = writeln!(s, "ensemble.write_fields={}", self.write_fields);
        let _ = writeln!(s, "ensemble.observe_x={}", opt(self.observe_x));
        let _ = writeln!(s, "ensemble.permutations={}", self.permutations);
        let _ = writeln!(s, "support.epsilon={}", opt(self.epsilon));
        let _ = writeln!(s, "support.gammas={}", list(&self.gammas));
        let _ = writeln!(
            s,
            "support.containment={}",
            self.containment
                .map_or("auto".to_string(), |(a, b)| format!("{a:?},{b:?}"))
        );
        let _ = writeln!(s, "support.time={}", opt(self.support_time));
        s
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::canonical`].
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest
            .iter()
            .take(8)
            .fold(String::with_capacity(16), |mut acc, b| {
                let _ = write!(acc, "{b:02x}");
                acc
            })
    }
}
