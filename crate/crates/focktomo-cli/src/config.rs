//! Run configuration: plain-text key=value files plus command-line
//! overrides (override wins). Unknown keys are errors.

use focktomo::model::PhysicalParams;
use std::fmt;
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Radon,
    Maxlik,
    Moments,
    All,
}

impl Method {
    fn parse(s: &str) -> Result<Method, ConfigError> {
        match s {
            "radon" => Ok(Method::Radon),
            "maxlik" => Ok(Method::Maxlik),
            "moments" => Ok(Method::Moments),
            "all" => Ok(Method::All),
            _ => Err(ConfigError(format!(
                "unknown method '{s}' (expected radon|maxlik|moments|all)"
            ))),
        }
    }

    pub fn includes(&self, other: Method) -> bool {
        *self == Method::All || *self == other
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: PhysicalParams,
    pub seed: u64,
    pub n0_count: usize,
    pub n1_count: usize,
    pub n2_count: usize,
    pub phases: usize,
    pub method: Method,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: PhysicalParams::default(),
            seed: 1,
            n0_count: 180_000,
            n1_count: 180_000,
            n2_count: 105_000,
            phases: 12,
            method: Method::All,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |what: &str| ConfigError(format!("invalid value '{value}' for {what}"));
        match key {
            "g" => self.params.g = value.parse().map_err(|_| bad("g"))?,
            "gamma" => self.params.gamma = value.parse().map_err(|_| bad("gamma"))?,
            "xi" => self.params.xi = value.parse().map_err(|_| bad("xi"))?,
            "eta" => self.params.eta = value.parse().map_err(|_| bad("eta"))?,
            "e" => self.params.e = value.parse().map_err(|_| bad("e"))?,
            "mu" => self.params.mu = value.parse().map_err(|_| bad("mu"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "n0_count" => self.n0_count = value.parse().map_err(|_| bad("n0_count"))?,
            "n1_count" => self.n1_count = value.parse().map_err(|_| bad("n1_count"))?,
            "n2_count" => self.n2_count = value.parse().map_err(|_| bad("n2_count"))?,
            "phases" => self.phases = value.parse().map_err(|_| bad("phases"))?,
            "method" => self.method = Method::parse(value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(ConfigError(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &std::path::Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!(
                    "{}:{}: expected key=value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.apply_key(key.trim(), value.trim())
                .map_err(|e| ConfigError(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.n0_count == 0 || self.n1_count == 0 || self.n2_count == 0 {
            return Err(ConfigError("record counts must be positive".into()));
        }
        if self.phases == 0 {
            return Err(ConfigError("phases must be positive".into()));
        }
        Ok(())
    }

    /// Effective settings as sorted key=value lines (manifest content).
    pub fn manifest_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("e={}", self.params.e),
            format!("eta={}", self.params.eta),
            format!("g={}", self.params.g),
            format!("gamma={}", self.params.gamma),
            format!("method={}", method_name(self.method)),
            format!("mu={}", self.params.mu),
            format!("n0_count={}", self.n0_count),
            format!("n1_count={}", self.n1_count),
            format!("n2_count={}", self.n2_count),
            format!("phases={}", self.phases),
            format!("seed={}", self.seed),
            format!("xi={}", self.params.xi),
        ];
        lines.sort();
        lines
    }
}

pub fn method_name(m: Method) -> &'static str {
    match m {
        Method::Radon => "radon",
        Method::Maxlik => "maxlik",
        Method::Moments => "moments",
        Method::All => "all",
    }
}

/// Parse the command line: a command followed by flags. `--config` is
/// applied first so explicit flags override the file.
pub fn parse_args(args: &[String]) -> Result<(String, RunConfig), ConfigError> {
    if args.is_empty() {
        return Err(ConfigError(
            "usage: focktomo <simulate|reconstruct|report|selftest> [flags]".into(),
        ));
    }
    let command = args[0].clone();
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut config_path: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        let flag = &args[i];
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| ConfigError(format!("unexpected argument '{flag}'")))?;
        let value = args
            .get(i + 1)
            .ok_or_else(|| ConfigError(format!("flag --{key} expects a value")))?
            .clone();
        if key == "config" {
            config_path = Some(PathBuf::from(&value));
        } else {
            // flag spelling uses dashes, config keys use underscores
            overrides.push((key.replace('-', "_"), value));
        }
        i += 2;
    }
    let mut config = RunConfig::default();
    if let Some(path) = config_path {
        config.load_file(&path)?;
    }
    for (key, value) in overrides {
        config.apply_key(&key, &value)?;
    }
    Ok((command, config))
}
