//! Drivers for the benchmark experiments, shared by the command-line tool,
//! the Python bindings and the acceptance tests. They compute results only;
//! writing files is left to the callers.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{c1_from_trace, constant_delta_suffix, h_certificates_from, lyapunov_certificate, rate_certificate, Certificate};
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::objective::Objective;
use crate::problems::{mask_density, mse, CompressionModel, ToyProblem, DEFAULT_DENSITY_EPS};
use crate::solver::{Solution, Solver, StepRule, StopCriterion, DEFAULT_LIPSCHITZ_CAP, DEFAULT_SHRINK};

/// Step-size policy by name, as used in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Constant,
    Backtracking,
    Lazy,
    General,
}

/// `α = 0.99·(1−β)/(c2 + L̂/2)` for [`RuleKind::General`].
pub const GENERAL_ALPHA_FACTOR: f64 = 0.99;

impl RuleKind {
    pub const ALL: [RuleKind; 4] = [RuleKind::Constant, RuleKind::Backtracking, RuleKind::Lazy, RuleKind::General];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Constant => "constant",
            RuleKind::Backtracking => "backtracking",
            RuleKind::Lazy => "lazy",
            RuleKind::General => "general",
        }
    }

    /// `lipschitz_bound` is used by the rules that need a global constant
    /// (constant, general); `lipschitz_init` seeds the backtracking rules,
    /// which relax `L ← L/1.05` after every accepted step. For the
    /// backtracking rule `β` is the inertia of the first step at `lipschitz_init`.
    pub fn build(self, beta: f64, lipschitz_bound: f64, lipschitz_init: f64) -> Result<StepRule> {
        let rule = match self {
            RuleKind::Constant => StepRule::constant(beta, lipschitz_bound),
            RuleKind::Backtracking => StepRule::backtracking_for_beta(beta, lipschitz_init)?.relaxed(DEFAULT_SHRINK),
            RuleKind::Lazy => StepRule::lazy(beta, lipschitz_init),
            RuleKind::General => StepRule::general_constant_beta(beta, lipschitz_bound, GENERAL_ALPHA_FACTOR),
        };
        rule.validate()?;
        Ok(rule)
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "constant" | "cipiano" => Ok(RuleKind::Constant),
            "backtracking" | "bipiano" => Ok(RuleKind::Backtracking),
            "lazy" | "nmipiano" => Ok(RuleKind::Lazy),
            "general" => Ok(RuleKind::General),
            other => Err(Error::Config(format!(
                "unknown rule {other:?}; expected constant, backtracking, lazy or general"
            ))),
        }
    }
}

/// All runtime certificates for one solver run: Lyapunov descent, rate
/// bounds against `obj.lower_bound()`, and H1/H2 on the constant-δ suffix
/// when the run kept its iterates.
pub fn certify<O: Objective + ?Sized>(obj: &O, solution: &Solution, rule: &StepRule) -> Result<Vec<Certificate>> {
    let trace = &solution.trace;
    let mut certs = vec![lyapunov_certificate(trace)];
    if trace.is_empty() {
        return Ok(certs);
    }
    let c1 = c1_from_trace(trace);
    let c2 = rule.c2();
    certs.push(rate_certificate(trace, c1, c2, obj.lower_bound())?);
    if trace.iterates.is_some() {
        if let Some((start, _)) = constant_delta_suffix(trace) {
            certs.extend(h_certificates_from(trace, obj, start, c1, c2)?);
        }
    }
    Ok(certs)
}

/// Safety factor applied to the largest accepted `L_n` of a pilot run.
pub const PILOT_SAFETY: f64 = 2.0;

/// Lipschitz estimate for the rules that need a global constant when none is
/// known: `PILOT_SAFETY` times the largest `L_n` accepted by an unrelaxed
/// backtracking run of `iterations` steps from `x0`.
pub fn pilot_lipschitz<O: Objective + ?Sized>(obj: &O, x0: Vec<f64>, lipschitz_init: f64, iterations: usize) -> Result<f64> {
    let rule = StepRule::backtracking_for_beta(0.0, lipschitz_init)?;
    let sol = Solver::new(rule).stop(StopCriterion::iterations(iterations)).solve(obj, x0)?;
    let l_max = sol.trace.records.iter().map(|r| r.lipschitz).fold(lipschitz_init, f64::max);
    Ok(PILOT_SAFETY * l_max)
}

/// One start of the toy basin experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinRow {
    pub beta: f64,
    pub start: Vec<f64>,
    pub limit: Vec<f64>,
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Index into [`ToyProblem::stationary_points`] of the closest minimizer.
    pub nearest: usize,
    pub distance: f64,
    pub reached_global: bool,
}

impl BasinRow {
    pub const CSV_HEADER: &'static str =
        "beta,x0,y0,x,y,energy,iterations,residual,nearest,distance,global";

    pub fn csv_row(&self) -> String {
        use crate::diagnostics::fmt17;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt17(self.beta),
            fmt17(self.start[0]),
            fmt17(self.start[1]),
            fmt17(self.limit[0]),
            fmt17(self.limit[1]),
            fmt17(self.energy),
            self.iterations,
            fmt17(self.residual),
            self.nearest,
            fmt17(self.distance),
            u8::from(self.reached_global)
        )
    }
}

/// Settings of the toy basin experiment.
#[derive(Debug, Clone)]
pub struct BasinConfig {
    pub rule: RuleKind,
    pub betas: Vec<f64>,
    /// Points per axis.
    pub grid: usize,
    pub lo: f64,
    pub hi: f64,
    pub stop: StopCriterion,
    /// Energy slack for counting a run as reaching the global minimum.
    pub global_tol: f64,
}

impl Default for BasinConfig {
    fn default() -> Self {
        Self {
            rule: RuleKind::Constant,
            betas: vec![0.0, 0.75],
            grid: 10,
            lo: -2.0,
            hi: 3.0,
            stop: StopCriterion::iterations(20_000).with_residual(1e-10),
            global_tol: 1e-3,
        }
    }
}

/// `n` evenly spaced points covering `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Runs the toy problem from every grid point for every β, rows ordered by
/// β, then start row-major (y outer).
pub fn toy_basins(prob: &ToyProblem, cfg: &BasinConfig) -> Result<Vec<BasinRow>> {
    if prob.dim() != 2 {
        return Err(Error::Config(format!("basin grid needs a 2-D toy problem, got dimension {}", prob.dim())));
    }
    let obj = prob.objective();
    let minima = prob.stationary_points();
    let global = prob.energy(&prob.global_minimizer())?;
    let axis = linspace(cfg.lo, cfg.hi, cfg.grid);
    let mut rows = Vec::with_capacity(cfg.betas.len() * axis.len() * axis.len());
    for &beta in &cfg.betas {
        let rule = cfg.rule.build(beta, prob.lipschitz(), prob.lipschitz())?;
        let solver = Solver::new(rule).stop(cfg.stop);
        for &y in &axis {
            for &x in &axis {
                let start = vec![x, y];
                let sol = solver.solve(&obj, start.clone())?;
                let (nearest, distance) = minima
                    .iter()
                    .enumerate()
                    .map(|(i, m)| (i, dist(m, &sol.x)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap_or((0, f64::INFINITY));
                let energy = sol.trace.terminal.h;
                rows.push(BasinRow {
                    beta,
                    start,
                    limit: sol.x.clone(),
                    energy,
                    iterations: sol.trace.len(),
                    residual: sol.trace.terminal.residual_norm,
                    nearest,
                    distance,
                    reached_global: energy <= global + cfg.global_tol,
                });
            }
        }
    }
    Ok(rows)
}

/// Fraction of rows with the given β that reached the global minimum.
pub fn global_fraction(rows: &[BasinRow], beta: f64) -> f64 {
    let sel: Vec<&BasinRow> = rows.iter().filter(|r| r.beta == beta).collect();
    if sel.is_empty() {
        return 0.0;
    }
    sel.iter().filter(|r| r.reached_global).count() as f64 / sel.len() as f64
}

/// First `n` with `h(x^n) − h* ≤ tol`.
pub fn iterations_to_tol(energies: &[f64], h_star: f64, tol: f64) -> Option<usize> {
    energies.iter().position(|h| h - h_star <= tol)
}

/// Tolerances of the denoising table, `10³` down to `10⁻⁵`.
pub fn default_tolerances() -> Vec<f64> {
    (-3..=5).map(|k| 10f64.powi(-k)).collect()
}

/// One cell of the denoising table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendRow {
    pub beta: f64,
    pub tol: f64,
    pub iterations: Option<usize>,
}

impl TrendRow {
    pub const CSV_HEADER: &'static str = "beta,tol,iterations";

    /// Unreached tolerances are written as an empty field.
    pub fn csv_row(&self) -> String {
        use crate::diagnostics::fmt17;
        format!(
            "{},{},{}",
            fmt17(self.beta),
            fmt17(self.tol),
            self.iterations.map(|n| n.to_string()).unwrap_or_default()
        )
    }
}

/// Reference energy `h*`: the lowest energy of a long run.
pub fn reference_energy<O: Objective + ?Sized>(obj: &O, rule: &StepRule, x0: Vec<f64>, iterations: usize) -> Result<(f64, Solution)> {
    let sol = Solver::new(rule.clone()).stop(StopCriterion::iterations(iterations)).solve(obj, x0)?;
    let h_star = sol.trace.energies().into_iter().fold(f64::INFINITY, f64::min);
    Ok((h_star, sol))
}

/// Iterations-to-tolerance rows for one run stopped once `h − h* ≤ min(tols)`
/// or after `max_iters` steps.
pub fn trend_rows<O: Objective + ?Sized>(
    obj: &O,
    rule: &StepRule,
    x0: Vec<f64>,
    h_star: f64,
    tols: &[f64],
    max_iters: usize,
) -> Result<(Vec<TrendRow>, Solution)> {
    let tightest = tols.iter().cloned().fold(f64::INFINITY, f64::min);
    let stop = StopCriterion::iterations(max_iters).with_target(h_star, tightest);
    let sol = Solver::new(rule.clone()).stop(stop).solve(obj, x0)?;
    let energies = sol.trace.energies();
    let beta = rule_beta(rule);
    let rows = tols
        .iter()
        .map(|&tol| TrendRow {
            beta,
            tol,
            iterations: iterations_to_tol(&energies, h_star, tol),
        })
        .collect();
    Ok((rows, sol))
}

fn rule_beta(rule: &StepRule) -> f64 {
    match rule {
        StepRule::Constant { beta, .. } | StepRule::LazyBacktracking { beta, .. } => *beta,
        StepRule::General { beta, .. } => beta.eval(crate::solver::ScheduleInput {
            iteration: 0,
            lipschitz: rule.initial_lipschitz(),
            beta: None,
            delta_prev: f64::INFINITY,
        }),
        StepRule::Backtracking { .. } => f64::NAN,
    }
}

/// Result of the inpainting mask optimization.
#[derive(Debug, Clone)]
pub struct MaskResult {
    pub mask: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub solution: Solution,
    pub energy: f64,
    pub density: f64,
    pub mse: f64,
}

impl MaskResult {
    pub const CSV_HEADER: &'static str = "iterations,energy,density_percent,mse";

    pub fn csv_row(&self) -> String {
        use crate::diagnostics::fmt17;
        format!(
            "{},{},{},{}",
            self.solution.trace.len(),
            fmt17(self.energy),
            fmt17(100.0 * self.density),
            fmt17(self.mse)
        )
    }
}

/// Optimizes the mask from `c = 1` and reconstructs from the result.
pub fn optimize_mask(model: &CompressionModel, rule: &StepRule, stop: StopCriterion, keep_iterates: bool) -> Result<MaskResult> {
    let obj = model.objective();
    let solution = Solver::new(rule.clone())
        .stop(stop)
        .lipschitz_cap(DEFAULT_LIPSCHITZ_CAP)
        .keep_iterates(keep_iterates)
        .solve(&obj, model.initial_mask())?;
    let mask = solution.x.clone();
    let reconstruction = model.reconstruct(&mask)?;
    Ok(MaskResult {
        energy: solution.trace.terminal.h,
        density: mask_density(&mask, DEFAULT_DENSITY_EPS),
        mse: mse(&reconstruction, &model.u0)?,
        mask,
        reconstruction,
        solution,
    })
}

/// Binary mask selecting `round(density·N)` pixels uniformly at random.
pub fn random_mask(n: usize, density: f64, seed: u64) -> Vec<f64> {
    let count = ((density * n as f64).round() as usize).clamp(1, n.max(1));
    let mut c = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in index::sample(&mut rng, n, count.min(n)) {
        c[i] = 1.0;
    }
    c
}

/// Mean reconstruction MSE over random masks of the given density.
pub fn random_mask_mse(model: &CompressionModel, density: f64, seeds: &[u64]) -> Result<f64> {
    let mut total = 0.0;
    for &seed in seeds {
        let c = random_mask(model.len(), density, seed);
        total += mse(&model.reconstruct(&c)?, &model.u0)?;
    }
    Ok(total / seeds.len().max(1) as f64)
}
