use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ipiano_cli::{exit, exit_code, read_config_file, run, Problem, RunConfig};

#[derive(Parser)]
#[command(name = "ipiano", version, about = "Inertial proximal algorithm experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-dimensional non-convex problem: basins of attraction per β.
    Toy(Common),
    /// MRF image denoising: iterations to reach each energy tolerance.
    Denoise(Common),
    /// Sparse inpainting mask optimization.
    InpaintMask(Common),
}

/// Flags override values from `--config`, which override the defaults.
#[derive(Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inertia values, comma separated.
    #[arg(long)]
    beta: Option<String>,
    /// constant, backtracking, lazy or general.
    #[arg(long)]
    rule: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Comma separated; meaning depends on the problem.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Gaussian noise level.
    #[arg(long)]
    sigma: Option<f64>,
    /// Salt and pepper fraction; replaces Gaussian noise.
    #[arg(long)]
    sp_fraction: Option<f64>,
    /// l2 or l1.
    #[arg(long)]
    data_term: Option<String>,
    /// Input image (.pgm or .png); a synthetic scene is used otherwise.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self, problem: Problem) -> ipiano_core::Result<RunConfig> {
        let mut pairs = match &self.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| ipiano_core::Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            pairs.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.insert(k.to_string(), v);
            }
        };
        put("beta", self.beta.clone());
        put("rule", self.rule.clone());
        put("max_iters", self.max_iters.map(|v| v.to_string()));
        put("tol", self.tol.clone());
        put("seed", self.seed.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("sigma", self.sigma.map(|v| v.to_string()));
        put("sp_fraction", self.sp_fraction.map(|v| v.to_string()));
        put("data_term", self.data_term.clone());
        put("input", self.input.as_ref().map(|p| p.display().to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        let mut cfg = RunConfig::defaults(problem);
        cfg.apply(&pairs)?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (problem, common) = match &cli.command {
        Command::Toy(c) => (Problem::Toy, c),
        Command::Denoise(c) => (Problem::Denoise, c),
        Command::InpaintMask(c) => (Problem::InpaintMask, c),
    };
    let result = common.resolve(problem).and_then(|cfg| run(&cfg).map(|o| (cfg, o)));
    let code = match result {
        Ok((cfg, outcome)) => {
            for line in &outcome.report {
                println!("{line}");
            }
            println!("outputs written to {}", cfg.out.display());
            let mut code = exit::OK;
            for row in outcome.failed() {
                eprintln!(
                    "certificate {} failed in run {}: worst slack {:e} at iteration {}",
                    row.cert.name, row.run, row.cert.worst_slack, row.cert.location
                );
                code = exit::CERTIFICATE_FAILED;
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
