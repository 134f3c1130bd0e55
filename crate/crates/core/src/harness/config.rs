//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! instance = generate        # or a path to an instance file
//! seed = 7                   # generator seed, also the ACRCD coin seed
//! m = 4
//! n = 3
//! d = 5
//! p = 2
//! theta = 0.5
//! scale = 1
//! topology = ring 4          # generator spec, or file:<path>
//! solver = stm               # stm | acrcd | subgradient
//! max_iter = 500
//! ```
//!
//! Every key is listed in [`KEYS`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Accepted configuration keys.
pub const KEYS: &[&str] = &[
    "instance",
    "seed",
    "m",
    "n",
    "d",
    "p",
    "theta",
    "scale",
    "topology",
    "solver",
    "max_iter",
    "lipschitz",
    "mu",
    "nu",
    "ball",
    "target_eps",
    "target_gap",
    "record_every",
    "wall_clock",
    "step",
    "step_rule",
    "rho",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Generate {
        seed: u64,
        m: usize,
        n: usize,
        d: usize,
        p: f64,
        theta: f64,
        scale: f64,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySource {
    Spec(String),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Stm,
    Acrcd,
    Subgradient,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Stm => "stm",
            SolverKind::Acrcd => "acrcd",
            SolverKind::Subgradient => "subgradient",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stm" => Ok(SolverKind::Stm),
            "acrcd" => Ok(SolverKind::Acrcd),
            "subgradient" => Ok(SolverKind::Subgradient),
            other => Err(Error::Config(format!(
                "unknown solver '{other}' (expected stm, acrcd or subgradient)"
            ))),
        }
    }
}

/// Step-size schedule for the subgradient baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Constant(f64),
    /// `c / sqrt(k + 1)`.
    InvSqrt(f64),
}

impl StepRule {
    pub fn at(self, k: u64) -> f64 {
        match self {
            StepRule::Constant(c) => c,
            StepRule::InvSqrt(c) => c / ((k + 1) as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub topology: TopologySource,
    pub solver: SolverKind,
    pub max_iter: u64,
    /// STM Lipschitz override.
    pub lipschitz: Option<f64>,
    pub mu: f64,
    /// Composite weight; `None` means `target_eps / (2 R_s²)`.
    pub nu: Option<f64>,
    /// Keep `s` in the unit dual-norm ball during STM.
    pub ball: bool,
    pub target_eps: f64,
    pub target_gap: Option<f64>,
    /// Generator seed and ACRCD coin seed.
    pub seed: Option<u64>,
    pub record_every: u64,
    pub wall_clock: bool,
    pub step_rule: StepRule,
    /// Consensus penalty weight for the subgradient baseline.
    pub rho: f64,
    pub output: Option<PathBuf>,
}

/// One `key = value` setting with the line it came from (0 for flags).
#[derive(Debug, Clone)]
pub struct Setting {
    pub line: usize,
    pub key: String,
    pub value: String,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_settings(parse_settings(text)?)
    }

    /// Reads a config file. Relative instance, topology and output paths
    /// are resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_relative(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_relative(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let InstanceSource::File(p) = &mut self.instance {
            fix(p);
        }
        if let TopologySource::File(p) = &mut self.topology {
            fix(p);
        }
        if let Some(p) = &mut self.output {
            fix(p);
        }
    }

    /// Builds a config from settings; later settings override earlier ones.
    pub fn from_settings(settings: Vec<Setting>) -> Result<Self> {
        let mut map: BTreeMap<String, Setting> = BTreeMap::new();
        for s in settings {
            if !KEYS.contains(&s.key.as_str()) {
                return Err(at(s.line, format!("unknown key '{}'", s.key)));
            }
            map.insert(s.key.clone(), s);
        }
        let get = |k: &str| map.get(k);
        fn parse_as<T: std::str::FromStr>(s: &Setting) -> Result<T> {
            s.value
                .parse::<T>()
                .map_err(|_| at(s.line, format!("invalid value '{}' for '{}'", s.value, s.key)))
        }
        let opt = |k: &str| -> Option<&Setting> { get(k) };
        let required = |k: &str, why: &str| -> Result<&Setting> {
            get(k).ok_or_else(|| Error::Config(format!("missing key '{k}' ({why})")))
        };

        let seed = opt("seed").map(parse_as::<u64>).transpose()?;
        let instance_setting = required("instance", "'generate' or a file path")?;
        let instance = if instance_setting.value == "generate" {
            let why = "needed by the instance generator";
            InstanceSource::Generate {
                seed: seed.ok_or_else(|| Error::Config("missing key 'seed' (mandatory for instance = generate)".into()))?,
                m: parse_as(required("m", why)?)?,
                n: parse_as(required("n", why)?)?,
                d: parse_as(required("d", why)?)?,
                p: parse_as(required("p", why)?)?,
                theta: parse_as(required("theta", why)?)?,
                scale: opt("scale").map(parse_as).transpose()?.unwrap_or(1.0),
            }
        } else {
            let path = PathBuf::from(&instance_setting.value);
            for k in ["m", "n", "d", "p", "theta", "scale"] {
                if let Some(s) = get(k) {
                    return Err(at(s.line, format!("'{k}' only applies to instance = generate")));
                }
            }
            InstanceSource::File(path)
        };

        let topo_setting = required("topology", "generator spec or file:<path>")?;
        let topology = match topo_setting.value.strip_prefix("file:") {
            Some(p) => TopologySource::File(PathBuf::from(p.trim())),
            None => TopologySource::Spec(topo_setting.value.clone()),
        };

        let solver_setting = required("solver", "stm, acrcd or subgradient")?;
        let solver: SolverKind = solver_setting
            .value
            .parse()
            .map_err(|e: Error| at(solver_setting.line, e.to_string()))?;
        if solver == SolverKind::Acrcd && seed.is_none() {
            return Err(Error::Config("missing key 'seed' (mandatory for solver = acrcd)".into()));
        }

        let step = opt("step").map(parse_as::<f64>).transpose()?.unwrap_or(0.01);
        let step_rule = match opt("step_rule").map(|s| (s.line, s.value.as_str())) {
            None | Some((_, "sqrt")) => StepRule::InvSqrt(step),
            Some((_, "constant")) => StepRule::Constant(step),
            Some((line, other)) => {
                return Err(at(line, format!("step_rule must be 'constant' or 'sqrt', got '{other}'")))
            }
        };

        let cfg = ExperimentConfig {
            instance,
            topology,
            solver,
            max_iter: opt("max_iter").map(parse_as).transpose()?.unwrap_or(1000),
            lipschitz: opt("lipschitz").map(parse_as).transpose()?,
            mu: opt("mu").map(parse_as).transpose()?.unwrap_or(0.0),
            nu: opt("nu").map(parse_as).transpose()?,
            ball: opt("ball").map(parse_as).transpose()?.unwrap_or(true),
            target_eps: opt("target_eps").map(parse_as).transpose()?.unwrap_or(1e-4),
            target_gap: opt("target_gap").map(parse_as).transpose()?,
            seed,
            record_every: opt("record_every").map(parse_as).transpose()?.unwrap_or(1),
            wall_clock: opt("wall_clock").map(parse_as).transpose()?.unwrap_or(false),
            step_rule,
            rho: opt("rho").map(parse_as).transpose()?.unwrap_or(1.0),
            output: opt("output").map(|s| PathBuf::from(&s.value)),
        };
        cfg.validate_values(&map)?;
        Ok(cfg)
    }

    fn validate_values(&self, map: &BTreeMap<String, Setting>) -> Result<()> {
        let line = |k: &str| map.get(k).map_or(0, |s| s.line);
        if let InstanceSource::Generate { m, n, d, p, theta, scale, .. } = self.instance {
            if m == 0 || n == 0 || d == 0 {
                return Err(Error::Config("dimensions m, n, d must be >= 1".into()));
            }
            if !(p >= 1.0) {
                return Err(at(line("p"), format!("p = {p} must be >= 1")));
            }
            if !(theta > 0.0) {
                return Err(at(line("theta"), format!("theta = {theta} must be > 0")));
            }
            if !(scale >= 0.0) {
                return Err(at(line("scale"), format!("scale = {scale} must be >= 0")));
            }
            if self.solver == SolverKind::Acrcd && p != 1.0 {
                return Err(at(line("solver"), format!("acrcd requires p = 1, got p = {p}")));
            }
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0) {
                return Err(at(line("lipschitz"), format!("lipschitz = {l} must be > 0")));
            }
        }
        if !(self.mu >= 0.0) {
            return Err(at(line("mu"), "mu must be >= 0".into()));
        }
        if let Some(nu) = self.nu {
            if !(nu >= 0.0) {
                return Err(at(line("nu"), "nu must be >= 0".into()));
            }
        }
        if !(self.target_eps > 0.0) {
            return Err(at(line("target_eps"), "target_eps must be > 0".into()));
        }
        if !(self.rho >= 0.0) {
            return Err(at(line("rho"), "rho must be >= 0".into()));
        }
        Ok(())
    }

    /// Checks that referenced files exist and that the solver fits the loss
    /// exponent of a file-backed instance.
    pub fn check_files(&self) -> Result<()> {
        if let InstanceSource::File(p) = &self.instance {
            if !p.exists() {
                return Err(Error::Config(format!("instance file {} does not exist", p.display())));
            }
        }
        if let TopologySource::File(p) = &self.topology {
            if !p.exists() {
                return Err(Error::Config(format!("topology file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut lines = Vec::new();
        match &self.instance {
            InstanceSource::Generate { seed: _, m, n, d, p, theta, scale } => {
                lines.push("instance = generate".to_string());
                lines.push(format!("m = {m}"));
                lines.push(format!("n = {n}"));
                lines.push(format!("d = {d}"));
                lines.push(format!("p = {p}"));
                lines.push(format!("theta = {theta}"));
                lines.push(format!("scale = {scale}"));
            }
            InstanceSource::File(p) => lines.push(format!("instance = {}", p.display())),
        }
        if let Some(seed) = self.seed {
            lines.push(format!("seed = {seed}"));
        }
        lines.push(match &self.topology {
            TopologySource::Spec(s) => format!("topology = {s}"),
            TopologySource::File(p) => format!("topology = file:{}", p.display()),
        });
        lines.push(format!("solver = {}", self.solver.name()));
        lines.push(format!("max_iter = {}", self.max_iter));
        if let Some(l) = self.lipschitz {
            lines.push(format!("lipschitz = {l}"));
        }
        lines.push(format!("mu = {}", self.mu));
        if let Some(nu) = self.nu {
            lines.push(format!("nu = {nu}"));
        }
        lines.push(format!("ball = {}", self.ball));
        lines.push(format!("target_eps = {}", self.target_eps));
        if let Some(g) = self.target_gap {
            lines.push(format!("target_gap = {g}"));
        }
        lines.push(format!("record_every = {}", self.record_every));
        lines.push(format!("wall_clock = {}", self.wall_clock));
        match self.step_rule {
            StepRule::Constant(c) => {
                lines.push(format!("step = {c}"));
                lines.push("step_rule = constant".into());
            }
            StepRule::InvSqrt(c) => {
                lines.push(format!("step = {c}"));
                lines.push("step_rule = sqrt".into());
            }
        }
        lines.push(format!("rho = {}", self.rho));
        if let Some(o) = &self.output {
            lines.push(format!("output = {}", o.display()));
        }
        lines.join("\n") + "\n"
    }
}

fn at(line: usize, msg: String) -> Error {
    if line == 0 {
        Error::Config(msg)
    } else {
        Error::Config(format!("line {line}: {msg}"))
    }
}

/// Splits config text into settings, rejecting malformed lines.
pub fn parse_settings(text: &str) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| at(line, format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(at(line, format!("empty key or value in '{content}'")));
        }
        out.push(Setting {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(out)
}
