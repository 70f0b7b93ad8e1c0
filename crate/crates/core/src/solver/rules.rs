//! Step-size policies.
//!
//! Every policy produces, for iteration `n`, a step size `α_n`, an inertial
//! weight `β_n` and a Lipschitz estimate `L_n`. From these the quantities
//!
//! ```text
//! δ_n = 1/α_n − L_n/2 − β_n/(2α_n)
//! γ_n = 1/α_n − L_n/2 − β_n/α_n
//! ```
//!
//! drive the convergence guarantees: the iteration is certified when
//! `δ_n ≥ γ_n ≥ c2`, `α_n ≥ c1` and `δ_n` is non-increasing.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_C1: f64 = 1e-8;
pub const DEFAULT_C2: f64 = 1e-6;
/// `α = 0.995·2(1−β)/L = 1.99(1−β)/L`.
pub const DEFAULT_SAFETY: f64 = 0.995;
pub const DEFAULT_ETA: f64 = 1.2;
/// Post-acceptance relaxation `L_n ← L_n / 1.05` used by lazy backtracking.
pub const DEFAULT_SHRINK: f64 = 1.05;
pub const DEFAULT_LIPSCHITZ_CAP: f64 = 1e12;

/// Parameters of one accepted (or trial) step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub alpha: f64,
    pub beta: f64,
    pub lipschitz: f64,
    pub delta: f64,
    pub gamma: f64,
}

impl StepParams {
    pub fn new(alpha: f64, beta: f64, lipschitz: f64) -> Self {
        let (delta, gamma) = delta_gamma(alpha, beta, lipschitz);
        Self {
            alpha,
            beta,
            lipschitz,
            delta,
            gamma,
        }
    }
}

/// `(δ, γ)` for the given step parameters.
pub fn delta_gamma(alpha: f64, beta: f64, lipschitz: f64) -> (f64, f64) {
    let inv = 1.0 / alpha;
    let base = inv - 0.5 * lipschitz;
    (base - 0.5 * beta * inv, base - beta * inv)
}

/// Constant step size `α = safety·2(1−β)/L`, strictly inside `α < 2(1−β)/L`.
pub fn constant_params(lipschitz: f64, beta: f64, safety: f64) -> Result<(f64, f64)> {
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::Config(format!("Lipschitz constant must be > 0, got {lipschitz}")));
    }
    check_beta(beta)?;
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::Config(format!("safety factor must lie in (0, 1), got {safety}")));
    }
    Ok((safety * 2.0 * (1.0 - beta) / lipschitz, beta))
}

/// biPiano parameters for a trial `L_n`:
///
/// ```text
/// b   = (δ_{n−1} + L_n/2) / (c2 + L_n/2)
/// β_n = (b − 1)/(b − 1/2)
/// α_n = 2(1 − β_n)/(2c2 + L_n)
/// ```
///
/// These give `γ_n = c2` and `δ_n = δ_{n−1}` in exact arithmetic. They are
/// evaluated in the equivalent form
/// `α_n = 1/(2δ_{n−1} + L_n/2 − c2)`, `β_n = (δ_{n−1} − c2)/(δ_{n−1} + L_n/4 − c2/2)`,
/// which avoids the cancellation in `1 − β_n` as `β_n → 1`.
pub fn bipiano_params(lipschitz: f64, delta_prev: f64, c2: f64) -> Result<StepParams> {
    if !(c2 > 0.0) || !(delta_prev >= c2) || !delta_prev.is_finite() {
        return Err(Error::Config(format!(
            "biPiano requires delta_prev >= c2 > 0, got delta_prev={delta_prev}, c2={c2}"
        )));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::Config(format!("Lipschitz estimate must be > 0, got {lipschitz}")));
    }
    let beta = (delta_prev - c2) / (delta_prev + 0.25 * lipschitz - 0.5 * c2);
    let alpha = 1.0 / (2.0 * delta_prev + 0.5 * lipschitz - c2);
    // Recomputing δ from (α, β, L) cancels terms of size L and drifts below
    // c2 over many steps; keep the exact values instead.
    Ok(StepParams {
        alpha,
        beta,
        lipschitz,
        delta: delta_prev,
        gamma: c2,
    })
}

/// The `δ_{-1}` for which biPiano starts with inertial weight `beta` at `L = lipschitz`.
pub fn bipiano_delta_for_beta(beta: f64, lipschitz: f64, c2: f64) -> Result<f64> {
    check_beta(beta)?;
    let b = (1.0 - 0.5 * beta) / (1.0 - beta);
    Ok((b * (c2 + 0.5 * lipschitz) - 0.5 * lipschitz).max(c2))
}

/// Outcome of [`general_param_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParamCheck {
    Ok { delta: f64, gamma: f64 },
    Violation { delta: f64, gamma: f64, reason: String },
}

impl ParamCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, ParamCheck::Ok { .. })
    }
}

/// Checks a candidate `(α, β)` against the general parameter law.
pub fn general_param_check(
    alpha: f64,
    beta: f64,
    lipschitz: f64,
    c1: f64,
    c2: f64,
    delta_prev: f64,
) -> ParamCheck {
    let (delta, gamma) = delta_gamma(alpha, beta, lipschitz);
    let reason = if alpha < c1 {
        Some(format!("alpha {alpha:e} < c1 {c1:e}"))
    } else if beta < 0.0 {
        Some(format!("beta {beta} < 0"))
    } else if delta < gamma {
        Some(format!("delta {delta:e} < gamma {gamma:e}"))
    } else if gamma < c2 {
        Some(format!("gamma {gamma:e} < c2 {c2:e}"))
    } else if delta > delta_prev {
        Some(format!("delta {delta:e} increased over previous {delta_prev:e}"))
    } else {
        None
    };
    match reason {
        None => ParamCheck::Ok { delta, gamma },
        Some(reason) => ParamCheck::Violation {
            delta,
            gamma,
            reason,
        },
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::Config(format!("beta must lie in [0, 1), got {beta}")))
    }
}

/// What a [`Schedule`] may depend on.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleInput {
    pub iteration: usize,
    pub lipschitz: f64,
    pub beta: Option<f64>,
    pub delta_prev: f64,
}

/// A step-parameter sequence for the general rule.
#[derive(Clone)]
pub enum Schedule {
    Constant(f64),
    Custom(Arc<dyn Fn(ScheduleInput) -> f64 + Send + Sync>),
}

impl Schedule {
    pub fn eval(&self, input: ScheduleInput) -> f64 {
        match self {
            Schedule::Constant(v) => *v,
            Schedule::Custom(f) => f(input),
        }
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Constant(v) => write!(f, "Constant({v})"),
            Schedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Step-size policy.
#[derive(Debug, Clone)]
pub enum StepRule {
    /// ciPiano: known global Lipschitz constant, fixed `α`, `β`.
    Constant { beta: f64, lipschitz: f64, safety: f64 },
    /// biPiano: backtracking on `L_n` with `β_n`, `α_n` adapted so that
    /// `δ_n` never increases.
    Backtracking {
        c2: f64,
        delta_init: f64,
        eta: f64,
        lipschitz_init: f64,
        shrink_factor: f64,
    },
    /// nmiPiano: fixed `β`, monotone backtracking on `L_n`,
    /// `α_n = safety·2(1−β)/L_n`.
    LazyBacktracking {
        beta: f64,
        lipschitz_init: f64,
        eta: f64,
        shrink_factor: f64,
        safety: f64,
    },
    /// Arbitrary schedules, checked against the general parameter law at
    /// every accepted step.
    General {
        c1: f64,
        c2: f64,
        alpha: Schedule,
        beta: Schedule,
        lipschitz_init: f64,
        eta: f64,
    },
}

impl StepRule {
    pub fn constant(beta: f64, lipschitz: f64) -> Self {
        StepRule::Constant {
            beta,
            lipschitz,
            safety: DEFAULT_SAFETY,
        }
    }

    /// biPiano with `δ_{-1}` chosen so the first step uses inertia `beta`
    /// when `L_0 = lipschitz_init`.
    pub fn backtracking_for_beta(beta: f64, lipschitz_init: f64) -> Result<Self> {
        Ok(StepRule::Backtracking {
            c2: DEFAULT_C2,
            delta_init: bipiano_delta_for_beta(beta, lipschitz_init, DEFAULT_C2)?,
            eta: DEFAULT_ETA,
            lipschitz_init,
            shrink_factor: 1.0,
        })
    }

    /// nmiPiano with the experimental defaults (`η = 1.2`, `L ← L/1.05`).
    pub fn lazy(beta: f64, lipschitz_init: f64) -> Self {
        StepRule::LazyBacktracking {
            beta,
            lipschitz_init,
            eta: DEFAULT_ETA,
            shrink_factor: DEFAULT_SHRINK,
            safety: DEFAULT_SAFETY,
        }
    }

    /// General rule with constant `β` and constant `α = factor·(1−β)/(c2 + L̂/2)`
    /// for a Lipschitz bound `L̂`. Backtracking starts at `L̂`; since `L_n`
    /// never decreases, `δ_n` is non-increasing, and `γ_n ≥ c2` holds while
    /// `L_n ≤ L̂/factor`.
    pub fn general_constant_beta(beta: f64, lipschitz_bound: f64, factor: f64) -> Self {
        let alpha = factor * (1.0 - beta) / (DEFAULT_C2 + 0.5 * lipschitz_bound);
        StepRule::General {
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            alpha: Schedule::Constant(alpha),
            beta: Schedule::Constant(beta),
            lipschitz_init: lipschitz_bound,
            eta: DEFAULT_ETA,
        }
    }

    /// Sets the post-acceptance relaxation `L ← L/shrink` of the backtracking
    /// rules; other rules are returned unchanged.
    pub fn relaxed(mut self, shrink: f64) -> Self {
        if let StepRule::Backtracking { shrink_factor, .. } | StepRule::LazyBacktracking { shrink_factor, .. } = &mut self {
            *shrink_factor = shrink;
        }
        self
    }

    pub fn name(&self) -> &'static str {
        match self {
            StepRule::Constant { .. } => "constant",
            StepRule::Backtracking { .. } => "backtracking",
            StepRule::LazyBacktracking { .. } => "lazy",
            StepRule::General { .. } => "general",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite and > 0, got {v}")))
            }
        };
        let growth = |eta: f64| {
            if eta > 1.0 && eta.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("eta must be > 1, got {eta}")))
            }
        };
        let shrink = |s: f64| {
            if s >= 1.0 && s.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("shrink factor must be >= 1, got {s}")))
            }
        };
        match self {
            StepRule::Constant {
                beta,
                lipschitz,
                safety,
            } => constant_params(*lipschitz, *beta, *safety).map(|_| ()),
            StepRule::Backtracking {
                c2,
                delta_init,
                eta,
                lipschitz_init,
                shrink_factor,
            } => {
                positive("c2", *c2)?;
                if !(delta_init >= c2) || !delta_init.is_finite() {
                    return Err(Error::Config(format!("delta_init {delta_init} must be >= c2 {c2}")));
                }
                growth(*eta)?;
                positive("lipschitz_init", *lipschitz_init)?;
                shrink(*shrink_factor)
            }
            StepRule::LazyBacktracking {
                beta,
                lipschitz_init,
                eta,
                shrink_factor,
                safety,
            } => {
                constant_params(*lipschitz_init, *beta, *safety)?;
                growth(*eta)?;
                shrink(*shrink_factor)
            }
            StepRule::General {
                c1,
                c2,
                lipschitz_init,
                eta,
                ..
            } => {
                positive("c1", *c1)?;
                positive("c2", *c2)?;
                positive("lipschitz_init", *lipschitz_init)?;
                growth(*eta)
            }
        }
    }

    /// Whether `L_n` is searched for at every iteration.
    pub fn backtracks(&self) -> bool {
        !matches!(self, StepRule::Constant { .. })
    }

    pub fn initial_lipschitz(&self) -> f64 {
        match self {
            StepRule::Constant { lipschitz, .. } => *lipschitz,
            StepRule::Backtracking { lipschitz_init, .. }
            | StepRule::LazyBacktracking { lipschitz_init, .. }
            | StepRule::General { lipschitz_init, .. } => *lipschitz_init,
        }
    }

    /// `δ_{-1}`.
    pub fn initial_delta(&self) -> f64 {
        match self {
            StepRule::Backtracking { delta_init, .. } => *delta_init,
            _ => f64::INFINITY,
        }
    }

    pub fn eta(&self) -> f64 {
        match self {
            StepRule::Constant { .. } => 1.0,
            StepRule::Backtracking { eta, .. }
            | StepRule::LazyBacktracking { eta, .. }
            | StepRule::General { eta, .. } => *eta,
        }
    }

    /// Divisor applied to an accepted `L_n` to form the next starting guess.
    pub fn shrink_factor(&self) -> f64 {
        match self {
            StepRule::Backtracking { shrink_factor, .. }
            | StepRule::LazyBacktracking { shrink_factor, .. } => *shrink_factor,
            _ => 1.0,
        }
    }

    /// `c1` used when certifying runs of this rule.
    pub fn c1(&self) -> f64 {
        match self {
            StepRule::General { c1, .. } => *c1,
            _ => DEFAULT_C1,
        }
    }

    /// `c2` used when certifying runs of this rule.
    pub fn c2(&self) -> f64 {
        match self {
            StepRule::Backtracking { c2, .. } | StepRule::General { c2, .. } => *c2,
            _ => DEFAULT_C2,
        }
    }

    /// Parameters the rule prescribes for a trial Lipschitz estimate.
    pub fn params_at(&self, iteration: usize, lipschitz: f64, delta_prev: f64) -> Result<StepParams> {
        match self {
            StepRule::Constant {
                beta,
                lipschitz,
                safety,
            } => {
                let (alpha, beta) = constant_params(*lipschitz, *beta, *safety)?;
                Ok(StepParams::new(alpha, beta, *lipschitz))
            }
            StepRule::Backtracking { c2, .. } => bipiano_params(lipschitz, delta_prev, *c2),
            StepRule::LazyBacktracking { beta, safety, .. } => {
                let (alpha, beta) = constant_params(lipschitz, *beta, *safety)?;
                Ok(StepParams::new(alpha, beta, lipschitz))
            }
            StepRule::General { alpha, beta, .. } => {
                let mut input = ScheduleInput {
                    iteration,
                    lipschitz,
                    beta: None,
                    delta_prev,
                };
                let beta = beta.eval(input);
                input.beta = Some(beta);
                let alpha = alpha.eval(input);
                if !(alpha > 0.0 && alpha.is_finite()) || !beta.is_finite() {
                    return Err(Error::Config(format!(
                        "schedule produced alpha={alpha}, beta={beta} at iteration {iteration}"
                    )));
                }
                Ok(StepParams::new(alpha, beta, lipschitz))
            }
        }
    }

    /// Post-acceptance check of the general law; only the general rule can fail it.
    pub fn check_accepted(&self, iteration: usize, params: &StepParams, delta_prev: f64) -> Result<()> {
        if let StepRule::General { c1, c2, .. } = self {
            if let ParamCheck::Violation { reason, .. } =
                general_param_check(params.alpha, params.beta, params.lipschitz, *c1, *c2, delta_prev)
            {
                return Err(Error::Config(format!(
                    "infeasible step parameters at iteration {iteration}: {reason}"
                )));
            }
        }
        Ok(())
    }
}
