//! Run configurations: one JSON document per run, embedded in every output.

use std::io::Read;
use std::path::{Path, PathBuf};

use fbmexit_core::exit::ProblemParams;
use fbmexit_core::fbm::HurstParam;
use fbmexit_core::smalldev::SmallDevProcess;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "FBMEXIT_SEED";

/// Prefix of the comment line carrying the config in CSV outputs.
pub const CSV_CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Sample(SampleConfig),
    Exitprob(ExitprobConfig),
    Beta(BetaConfig),
    Gamma(GammaConfig),
    Persistence(PersistenceConfig),
    Smalldev(SmalldevConfig),
    Solve(SolveConfig),
    Verify(VerifyConfig),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Sample(_) => "sample",
            RunConfig::Exitprob(_) => "exitprob",
            RunConfig::Beta(_) => "beta",
            RunConfig::Gamma(_) => "gamma",
            RunConfig::Persistence(_) => "persistence",
            RunConfig::Smalldev(_) => "smalldev",
            RunConfig::Solve(_) => "solve",
            RunConfig::Verify(_) => "verify",
        }
    }

    pub fn default_for(name: &str) -> Option<Self> {
        Some(match name {
            "sample" => RunConfig::Sample(SampleConfig::default()),
            "exitprob" => RunConfig::Exitprob(ExitprobConfig::default()),
            "beta" => RunConfig::Beta(BetaConfig::default()),
            "gamma" => RunConfig::Gamma(GammaConfig::default()),
            "persistence" => RunConfig::Persistence(PersistenceConfig::default()),
            "smalldev" => RunConfig::Smalldev(SmalldevConfig::default()),
            "solve" => RunConfig::Solve(SolveConfig::default()),
            "verify" => RunConfig::Verify(VerifyConfig::default()),
            _ => return None,
        })
    }

    pub fn seed_mut(&mut self) -> Option<&mut u64> {
        match self {
            RunConfig::Sample(c) => Some(&mut c.seed),
            RunConfig::Exitprob(c) => Some(&mut c.mc.seed),
            RunConfig::Beta(c) => Some(&mut c.mc.seed),
            RunConfig::Gamma(c) => Some(&mut c.mc.seed),
            RunConfig::Persistence(c) => Some(&mut c.mc.seed),
            RunConfig::Smalldev(c) => Some(&mut c.seed),
            RunConfig::Solve(_) => None,
            RunConfig::Verify(c) => Some(&mut c.mc.seed),
        }
    }
}

/// Domain `‖x‖^p ≤ K (a + y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub hurst: f64,
    /// Defaults to `hurst`.
    pub hurst_tilde: Option<f64>,
    pub dim: usize,
    pub p: f64,
    pub a: f64,
    pub k: f64,
}

impl Domain {
    fn new(p: f64, k: f64) -> Self {
        Self {
            hurst: 0.5,
            hurst_tilde: None,
            dim: 1,
            p,
            a: 1.0,
            k,
        }
    }

    pub fn params(&self) -> Result<ProblemParams, CliError> {
        let h = HurstParam::new(self.hurst)?;
        let ht = HurstParam::new(self.hurst_tilde.unwrap_or(self.hurst))?;
        Ok(ProblemParams::new(h, ht, self.dim, self.p, self.a, self.k)?)
    }
}

/// Horizon ladder and Monte Carlo size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderMc {
    pub horizons: Vec<f64>,
    /// Grid steps per unit of time, shared by all rungs.
    pub steps_per_unit: f64,
    pub paths: u64,
    pub seed: u64,
}

impl LadderMc {
    fn doubling(t0: f64, rungs: u32, steps_per_unit: f64, paths: u64) -> Self {
        Self {
            horizons: (0..rungs).map(|i| t0 * 2f64.powi(i as i32)).collect(),
            steps_per_unit,
            paths,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SampleMethod {
    Cholesky,
    #[default]
    Circulant,
    RiemannLiouville,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub hurst: f64,
    pub dim: usize,
    pub steps: usize,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub method: SampleMethod,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            hurst: 0.5,
            dim: 1,
            steps: 1024,
            horizon: 1.0,
            paths: 1,
            seed: 0,
            method: SampleMethod::Circulant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitprobConfig {
    pub domain: Domain,
    #[serde(flatten)]
    pub mc: LadderMc,
}

impl Default for ExitprobConfig {
    fn default() -> Self {
        Self {
            domain: Domain::new(2.0, 1.0),
            mc: LadderMc::doubling(1.0, 4, 64.0, 10_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaConfig {
    pub domain: Domain,
    #[serde(flatten)]
    pub mc: LadderMc,
}

impl Default for BetaConfig {
    fn default() -> Self {
        Self {
            domain: Domain::new(2.0, 8.0),
            mc: LadderMc::doubling(32.0, 5, 8.0, 1_000_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaConfig {
    pub domain: Domain,
    #[serde(flatten)]
    pub mc: LadderMc,
    /// Fit a power law even when `pH > H̃`.
    pub override_regime: bool,
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            domain: Domain::new(1.0, 1.0),
            mc: LadderMc::doubling(16.0, 6, 4.0, 100_000),
            override_regime: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceConfig {
    pub hurst: f64,
    /// Barrier at `−a`.
    pub a: f64,
    #[serde(flatten)]
    pub mc: LadderMc,
}

impl Default for PersistenceConfig {
    fn default() -> Self {
        Self {
            hurst: 0.5,
            a: 1.0,
            mc: LadderMc::doubling(64.0, 6, 4.0, 200_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmalldevConfig {
    pub hurst: f64,
    pub dim: usize,
    /// Strictly decreasing radii.
    pub epsilons: Vec<f64>,
    /// Grid steps on `[0, 1]`; refinement checks use twice as many.
    pub steps: usize,
    pub paths: u64,
    pub seed: u64,
    pub process: SmallDevProcess,
}

impl Default for SmalldevConfig {
    fn default() -> Self {
        Self {
            hurst: 0.5,
            dim: 1,
            epsilons: vec![0.55, 0.5, 0.45, 0.42, 0.4, 0.38],
            steps: 8192,
            paths: 200_000,
            seed: 0,
            process: SmallDevProcess::Fbm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub domain: Domain,
    /// Small-deviation constant; taken from `constants` or the Brownian
    /// closed form when absent.
    pub kappa_hd: Option<f64>,
    /// Constants file written by `smalldev`.
    pub constants: Option<PathBuf>,
    pub n: usize,
    /// Also solve on `n/4` and `n/2` and extrapolate.
    pub refine: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            domain: Domain::new(2.0, 1.0),
            kappa_hd: None,
            constants: None,
            n: 256,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub domain: Domain,
    #[serde(flatten)]
    pub mc: LadderMc,
    pub kappa_hd: Option<f64>,
    pub constants: Option<PathBuf>,
    pub n: usize,
    /// Allowed `|β̂ − β|`.
    pub beta_tol: f64,
    /// Output of an earlier `beta` run; replaces the inline simulation.
    pub beta_report: Option<PathBuf>,
    /// Output of an earlier `solve` run; replaces the inline solve.
    pub solution: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let beta = BetaConfig::default();
        Self {
            domain: beta.domain,
            mc: beta.mc,
            kappa_hd: None,
            constants: None,
            n: 256,
            beta_tol: 0.10,
            beta_report: None,
            solution: None,
        }
    }
}

/// Reads a config from a JSON config, a JSON output (its `config` member),
/// a CSV output (its `# config:` line) or a binary dump (its sidecar).
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = read_text(path)?;
    if text.starts_with("FBMP") {
        return load(&sidecar_path(path));
    }
    let doc = if text.trim_start().starts_with('#') {
        let line = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix(CSV_CONFIG_PREFIX))
            .ok_or_else(|| CliError::Usage(format!("{}: no config line in the header", path.display())))?;
        parse_json(path, line)?
    } else {
        let mut v = parse_json(path, &text)?;
        match v.get_mut("config") {
            Some(c) if c.is_object() => c.take(),
            _ => v,
        }
    };
    from_value(doc).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Deserializes a config over the command's defaults, rejecting keys that
/// no field consumes.
pub fn from_value(doc: serde_json::Value) -> Result<RunConfig, String> {
    let name = doc.get("command").and_then(|c| c.as_str()).ok_or("config has no \"command\" member")?;
    let base = RunConfig::default_for(name).ok_or_else(|| format!("unknown command {name:?} in config"))?;
    let mut merged = serde_json::to_value(&base).map_err(|e| e.to_string())?;
    if let Some(k) = unknown_key(&doc, &merged, "") {
        return Err(format!("invalid config: unknown field `{k}`"));
    }
    merge(&mut merged, doc);
    serde_json::from_value(merged).map_err(|e| format!("invalid config: {e}"))
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn unknown_key(input: &serde_json::Value, known: &serde_json::Value, prefix: &str) -> Option<String> {
    let (serde_json::Value::Object(i), serde_json::Value::Object(k)) = (input, known) else {
        return None;
    };
    i.iter().find_map(|(key, v)| match k.get(key) {
        None => Some(format!("{prefix}{key}")),
        Some(kv) => unknown_key(v, kv, &format!("{prefix}{key}.")),
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    if buf.starts_with(b"FBMP") {
        return Ok("FBMP".into());
    }
    String::from_utf8(buf).map_err(|_| CliError::Usage(format!("{}: not a text file", path.display())))
}

fn parse_json(path: &Path, s: &str) -> Result<serde_json::Value, CliError> {
    serde_json::from_str(s).map_err(|e| CliError::Usage(format!("{}: malformed JSON: {e}", path.display())))
}

/// `paths.fbmp` → `paths.fbmp.config.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

/// Seed from the environment, if set.
pub fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{SEED_ENV}: {e}"))),
    }
}
