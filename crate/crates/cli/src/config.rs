//! Run configuration and its `key = value` file format.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ipiano_core::experiments::{default_tolerances, RuleKind};
use ipiano_core::problems::{DEFAULT_LAMBDA_L1, DEFAULT_LAMBDA_L2};
use ipiano_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Toy,
    Denoise,
    InpaintMask,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Toy => "toy",
            Problem::Denoise => "denoise",
            Problem::InpaintMask => "inpaint-mask",
        }
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "toy" => Ok(Problem::Toy),
            "denoise" => Ok(Problem::Denoise),
            "inpaint-mask" | "inpaint_mask" => Ok(Problem::InpaintMask),
            other => Err(Error::Config(format!("unknown problem {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    L2,
    L1,
}

impl FromStr for DataKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2" => Ok(DataKind::L2),
            "l1" => Ok(DataKind::L1),
            other => Err(Error::Config(format!("unknown data term {other:?}; expected l2 or l1"))),
        }
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataKind::L2 => "l2",
            DataKind::L1 => "l1",
        })
    }
}

/// Everything a run needs. Problem-specific defaults come from
/// [`RunConfig::defaults`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub rule: RuleKind,
    pub beta: Vec<f64>,
    pub max_iters: usize,
    /// Toy: residual tolerance. Denoise: energy-gap tolerances of the
    /// table. Inpaint: stop once `|h_n − h_{n+1}|` is below it (0 disables).
    pub tol: Vec<f64>,
    pub seed: u64,
    pub lambda: f64,
    pub sigma: f64,
    /// Salt and pepper fraction; replaces Gaussian noise when set.
    pub sp_fraction: Option<f64>,
    pub data_term: DataKind,
    pub input: Option<PathBuf>,
    /// Side of the built-in synthetic image when no input is given.
    pub size: usize,
    pub out: PathBuf,
    pub reference_iters: usize,
    pub grid: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub mu: f64,
    pub start: Vec<f64>,
    /// Global Lipschitz bound for the constant and general rules; estimated
    /// when absent.
    pub lipschitz: Option<f64>,
    pub lipschitz_init: f64,
    pub emit_trace: bool,
    pub emit_certificates: bool,
    pub emit_images: bool,
}

impl RunConfig {
    pub fn defaults(problem: Problem) -> Self {
        let base = RunConfig {
            problem,
            rule: RuleKind::Constant,
            beta: vec![0.0, 0.75],
            max_iters: 20_000,
            tol: vec![1e-10],
            seed: 1,
            lambda: 1.0,
            sigma: 25.0,
            sp_fraction: None,
            data_term: DataKind::L2,
            input: None,
            size: 64,
            out: PathBuf::from("out"),
            reference_iters: 5000,
            grid: 10,
            grid_lo: -2.0,
            grid_hi: 3.0,
            mu: 100.0,
            start: vec![-1.5, 2.5],
            lipschitz: None,
            lipschitz_init: 1.0,
            emit_trace: true,
            emit_certificates: true,
            emit_images: true,
        };
        match problem {
            Problem::Toy => RunConfig {
                lipschitz_init: 100.0,
                ..base
            },
            Problem::Denoise => RunConfig {
                rule: RuleKind::Lazy,
                beta: vec![0.0, 0.4, 0.8],
                max_iters: 15_000,
                tol: default_tolerances(),
                lambda: DEFAULT_LAMBDA_L2,
                ..base
            },
            Problem::InpaintMask => RunConfig {
                rule: RuleKind::Backtracking,
                beta: vec![0.8],
                max_iters: 1000,
                tol: vec![0.0],
                lambda: 2000.0,
                size: 32,
                lipschitz_init: 1e5,
                ..base
            },
        }
    }

    /// Applies `key = value` pairs on top of `self`.
    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<()> {
        // The data term changes the default λ unless λ is given too.
        if let Some(v) = pairs.get("data_term") {
            self.data_term = v.parse()?;
            if self.problem == Problem::Denoise && !pairs.contains_key("lambda") {
                self.lambda = match self.data_term {
                    DataKind::L2 => DEFAULT_LAMBDA_L2,
                    DataKind::L1 => DEFAULT_LAMBDA_L1,
                };
            }
        }
        for (key, value) in pairs {
            let v = value.trim();
            match key.as_str() {
                "problem" => {
                    let p: Problem = v.parse()?;
                    if p != self.problem {
                        return Err(Error::Config(format!(
                            "config is for problem {v:?} but the command is {}",
                            self.problem.name()
                        )));
                    }
                }
                "data_term" => {}
                "rule" => self.rule = v.parse()?,
                "beta" => self.beta = parse_list(key, v)?,
                "max_iters" => self.max_iters = parse(key, v)?,
                "tol" => self.tol = parse_list(key, v)?,
                "seed" => self.seed = parse(key, v)?,
                "lambda" => self.lambda = parse(key, v)?,
                "sigma" => self.sigma = parse(key, v)?,
                "sp_fraction" => self.sp_fraction = parse_opt(key, v)?,
                "input" => self.input = (!v.is_empty()).then(|| PathBuf::from(v)),
                "size" => self.size = parse(key, v)?,
                "out" => self.out = PathBuf::from(v),
                "reference_iters" => self.reference_iters = parse(key, v)?,
                "grid" => self.grid = parse(key, v)?,
                "grid_lo" => self.grid_lo = parse(key, v)?,
                "grid_hi" => self.grid_hi = parse(key, v)?,
                "mu" => self.mu = parse(key, v)?,
                "start" => self.start = parse_list(key, v)?,
                "lipschitz" => self.lipschitz = parse_opt(key, v)?,
                "lipschitz_init" => self.lipschitz_init = parse(key, v)?,
                "emit_trace" => self.emit_trace = parse_bool(key, v)?,
                "emit_certificates" => self.emit_certificates = parse_bool(key, v)?,
                "emit_images" => self.emit_images = parse_bool(key, v)?,
                other => return Err(Error::Config(format!("unknown config key {other:?}"))),
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.beta.is_empty() {
            return bad("beta list is empty".into());
        }
        if let Some(b) = self.beta.iter().find(|b| !(0.0..1.0).contains(*b)) {
            return bad(format!("beta must lie in [0, 1), got {b}"));
        }
        if self.tol.is_empty() || self.tol.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad(format!("tol must be a non-empty list of finite values >= 0, got {:?}", self.tol));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be finite and >= 0, got {}", self.lambda));
        }
        if self.problem == Problem::Toy {
            if !(self.lambda > 0.0 && self.mu > 0.0 && self.mu.is_finite()) {
                return bad("toy problem needs mu > 0 and lambda > 0".into());
            }
            if self.start.len() != 2 {
                return bad(format!("start must have 2 coordinates, got {}", self.start.len()));
            }
            if !(self.grid_lo < self.grid_hi) {
                return bad(format!("grid_lo {} must be below grid_hi {}", self.grid_lo, self.grid_hi));
            }
        }
        if self.problem == Problem::Denoise && self.lambda == 0.0 {
            return bad("denoising needs lambda > 0".into());
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        if let Some(f) = self.sp_fraction {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("sp_fraction must lie in [0, 1], got {f}"));
            }
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lipschitz must be finite and > 0, got {l}"));
            }
        }
        if !(self.lipschitz_init > 0.0 && self.lipschitz_init.is_finite()) {
            return bad(format!("lipschitz_init must be finite and > 0, got {}", self.lipschitz_init));
        }
        if self.size == 0 {
            return bad("size must be > 0".into());
        }
        Ok(())
    }

    /// The resolved configuration as a config file.
    pub fn to_config_string(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("problem", self.problem.name().into());
        kv("rule", self.rule.name().into());
        kv("beta", list(&self.beta));
        kv("max_iters", self.max_iters.to_string());
        kv("tol", list(&self.tol));
        kv("seed", self.seed.to_string());
        kv("lambda", self.lambda.to_string());
        kv("sigma", self.sigma.to_string());
        kv("sp_fraction", opt(self.sp_fraction));
        kv("data_term", self.data_term.to_string());
        kv(
            "input",
            self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        kv("size", self.size.to_string());
        kv("out", self.out.display().to_string());
        kv("reference_iters", self.reference_iters.to_string());
        kv("grid", self.grid.to_string());
        kv("grid_lo", self.grid_lo.to_string());
        kv("grid_hi", self.grid_hi.to_string());
        kv("mu", self.mu.to_string());
        kv("start", list(&self.start));
        kv("lipschitz", opt(self.lipschitz));
        kv("lipschitz_init", self.lipschitz_init.to_string());
        kv("emit_trace", self.emit_trace.to_string());
        kv("emit_certificates", self.emit_certificates.to_string());
        kv("emit_images", self.emit_images.to_string());
        s
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", lineno + 1)))?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value {v:?} for {key}")))
}

fn parse_opt(key: &str, v: &str) -> Result<Option<f64>> {
    if v.is_empty() {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {v:?} for {key}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        for p in [Problem::Toy, Problem::Denoise, Problem::InpaintMask] {
            let mut cfg = RunConfig::defaults(p);
            cfg.sp_fraction = Some(0.25);
            cfg.input = Some(PathBuf::from("img/trui.pgm"));
            let text = cfg.to_config_string();
            let mut back = RunConfig::defaults(p);
            back.apply(&parse_config_text(&text).unwrap()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn parsing_rules() {
        let m = parse_config_text("# comment\nbeta = 0, 0.5  # two values\n\nmax-iters=7\n").unwrap();
        let mut cfg = RunConfig::defaults(Problem::Toy);
        cfg.apply(&m).unwrap();
        assert_eq!(cfg.beta, vec![0.0, 0.5]);
        assert_eq!(cfg.max_iters, 7);
        assert!(parse_config_text("no equals sign").is_err());
        let mut cfg = RunConfig::defaults(Problem::Toy);
        assert!(cfg.apply(&parse_config_text("colour = red").unwrap()).is_err());
        assert!(cfg.apply(&parse_config_text("beta = 1.0").unwrap()).is_err());
        assert!(cfg.apply(&parse_config_text("problem = denoise").unwrap()).is_err());
    }

    #[test]
    fn data_term_sets_default_lambda() {
        let mut cfg = RunConfig::defaults(Problem::Denoise);
        cfg.apply(&parse_config_text("data_term = l1").unwrap()).unwrap();
        assert_eq!(cfg.lambda, DEFAULT_LAMBDA_L1);
        let mut cfg = RunConfig::defaults(Problem::Denoise);
        cfg.apply(&parse_config_text("data_term = l1\nlambda = 0.3").unwrap()).unwrap();
        assert_eq!(cfg.lambda, 0.3);
    }
}
