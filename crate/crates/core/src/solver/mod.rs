//! The iPiano iteration
//!
//! ```text
//! x^{n+1} = (I + α_n ∂g)^{-1}( x^n − α_n ∇f(x^n) + β_n (x^n − x^{n−1}) )
//! ```
//!
//! started from `x^{-1} = x^0`, with step parameters supplied by a
//! [`StepRule`].

pub mod rules;

use crate::diagnostics::{proximal_residual_from_grad, TerminalPoint, Trace, TraceRecord};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, dist, dot, norm};
use crate::objective::Objective;

pub use rules::{
    bipiano_delta_for_beta, bipiano_params, constant_params, delta_gamma, general_param_check,
    ParamCheck, Schedule, ScheduleInput, StepParams, StepRule, DEFAULT_C1, DEFAULT_C2, DEFAULT_ETA,
    DEFAULT_LIPSCHITZ_CAP, DEFAULT_SAFETY, DEFAULT_SHRINK,
};

/// Iterate pair plus the parameters of the step that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x_curr: Vec<f64>,
    pub x_prev: Vec<f64>,
    pub iter: usize,
    pub alpha: f64,
    pub beta: f64,
    /// `L` used by the last step (the initial estimate before any step).
    pub lipschitz: f64,
    /// Starting guess for the next backtracking search.
    pub lipschitz_guess: f64,
    /// `δ` of the last step; `δ_{-1}` before any step.
    pub delta: f64,
    pub gamma: f64,
    /// `δ` of the step before the last one.
    pub delta_prev: f64,
    pub f_curr: f64,
    pub g_curr: f64,
    /// `∇f(x_curr)`
    pub grad_curr: Vec<f64>,
    /// `Δ = ‖x_curr − x_prev‖`
    pub step_norm: f64,
}

impl SolverState {
    /// State at `x^0` with `x^{-1} = x^0`.
    pub fn new<O: Objective + ?Sized>(obj: &O, x0: Vec<f64>) -> Result<Self> {
        if !all_finite(&x0) {
            return Err(Error::Domain("starting point is not finite".into()));
        }
        let (f, grad) = obj.smooth_value_grad(&x0)?;
        let g = obj.convex_value(&x0);
        if !f.is_finite() || !all_finite(&grad) {
            return Err(Error::Domain("f or its gradient is not finite at x0".into()));
        }
        if !g.is_finite() {
            return Err(Error::Domain("x0 is outside the domain of g".into()));
        }
        Ok(Self {
            x_prev: x0.clone(),
            x_curr: x0,
            iter: 0,
            alpha: 0.0,
            beta: 0.0,
            lipschitz: 1.0,
            lipschitz_guess: 1.0,
            delta: f64::INFINITY,
            gamma: 0.0,
            delta_prev: f64::INFINITY,
            f_curr: f,
            g_curr: g,
            grad_curr: grad,
            step_norm: 0.0,
        })
    }

    /// Seeds the Lipschitz estimate and `δ_{-1}` from a rule.
    pub fn with_rule(mut self, rule: &StepRule) -> Self {
        self.lipschitz = rule.initial_lipschitz();
        self.lipschitz_guess = self.lipschitz;
        self.delta = rule.initial_delta();
        self.delta_prev = self.delta;
        self
    }

    pub fn h(&self) -> f64 {
        self.f_curr + self.g_curr
    }

    /// Forward-backward candidate `prox_α(x − α∇f(x) + β(x − x_prev))`.
    pub fn candidate<O: Objective + ?Sized>(&self, obj: &O, alpha: f64, beta: f64) -> Result<Vec<f64>> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("invalid step alpha={alpha}, beta={beta}")));
        }
        let forward: Vec<f64> = self
            .x_curr
            .iter()
            .zip(&self.grad_curr)
            .zip(&self.x_prev)
            .map(|((&x, &g), &xp)| x - alpha * g + beta * (x - xp))
            .collect();
        let next = obj.prox(&forward, alpha)?;
        if !all_finite(&next) {
            return Err(Error::Domain(format!(
                "prox output not finite at iteration {} (alpha={alpha:e}, beta={beta})",
                self.iter
            )));
        }
        Ok(next)
    }

    /// Moves to `x_next`, refreshing the cached values. `f_next` skips
    /// re-evaluating `f` when the caller already has it.
    fn advance<O: Objective + ?Sized>(
        &self,
        obj: &O,
        x_next: Vec<f64>,
        params: StepParams,
        f_next: Option<f64>,
        grad_next: Option<Vec<f64>>,
    ) -> Result<Self> {
        let (f, grad) = match (f_next, grad_next) {
            (Some(f), Some(g)) => (f, g),
            (Some(f), None) => (f, obj.smooth_grad(&x_next)?),
            _ => obj.smooth_value_grad(&x_next)?,
        };
        let g = obj.convex_value(&x_next);
        if !f.is_finite() || !g.is_finite() || !all_finite(&grad) {
            return Err(Error::Domain(format!(
                "energy or gradient not finite after iteration {}",
                self.iter
            )));
        }
        Ok(Self {
            step_norm: dist(&x_next, &self.x_curr),
            x_prev: self.x_curr.clone(),
            x_curr: x_next,
            iter: self.iter + 1,
            alpha: params.alpha,
            beta: params.beta,
            lipschitz: params.lipschitz,
            lipschitz_guess: params.lipschitz,
            delta: params.delta,
            gamma: params.gamma,
            delta_prev: self.delta,
            f_curr: f,
            g_curr: g,
            grad_curr: grad,
        })
    }
}

/// One unconditioned iPiano step with the given `α`, `β`.
///
/// The recorded Lipschitz value is carried over from `state`.
pub fn ipiano_step<O: Objective + ?Sized>(
    state: &SolverState,
    obj: &O,
    alpha: f64,
    beta: f64,
) -> Result<SolverState> {
    let next = state.candidate(obj, alpha, beta)?;
    state.advance(obj, next, StepParams::new(alpha, beta, state.lipschitz), None, None)
}

/// Slack of `f(x⁺) ≤ f(x) + ⟨∇f(x), x⁺ − x⟩ + L/2 ‖x⁺ − x‖²`. Backtracking
/// accepts slack down to `−10^{-12}(1 + |f(x)|)`.
pub fn descent_condition_slack(f_curr: f64, grad: &[f64], x_curr: &[f64], x_next: &[f64], f_next: f64, lipschitz: f64) -> f64 {
    let d: Vec<f64> = x_next.iter().zip(x_curr).map(|(a, b)| a - b).collect();
    let nd = norm(&d);
    f_curr + dot(grad, &d) + 0.5 * lipschitz * nd * nd - f_next
}

fn descent_tolerance(f_curr: f64) -> f64 {
    1e-12 * (1.0 + f_curr.abs())
}

/// Below this multiple of the tolerance the quadratic term of the value test
/// drowns in round-off, and the curvature test decides.
const ROUNDING_REGIME: f64 = 100.0;

/// Slack of `⟨∇f(x⁺) − ∇f(x), x⁺ − x⟩ ≤ L‖x⁺ − x‖²`, accurate for tiny steps
/// where differences of `f` are not.
fn curvature_slack(grad: &[f64], grad_next: &[f64], x_curr: &[f64], x_next: &[f64], lipschitz: f64) -> (f64, f64) {
    let mut inner = 0.0;
    let mut dd = 0.0;
    for (((&g0, &g1), &x0), &x1) in grad.iter().zip(grad_next).zip(x_curr).zip(x_next) {
        let d = x1 - x0;
        inner += (g1 - g0) * d;
        dd += d * d;
    }
    let round = 8.0 * f64::EPSILON * (norm(grad) + norm(grad_next)) * dd.sqrt();
    (lipschitz * dd - inner, round)
}

/// Result of one rule-driven step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: SolverState,
    pub params: StepParams,
    pub backtracks: usize,
}

/// One step under `rule`, searching `L_n ∈ {L, ηL, η²L, …}` (smallest first)
/// for backtracking rules.
pub fn backtrack_step<O: Objective + ?Sized>(
    obj: &O,
    state: &SolverState,
    rule: &StepRule,
    lipschitz_cap: f64,
) -> Result<StepOutcome> {
    let delta_prev = state.delta;
    if !rule.backtracks() {
        let params = rule.params_at(state.iter, rule.initial_lipschitz(), delta_prev)?;
        let next = state.candidate(obj, params.alpha, params.beta)?;
        let new_state = state.advance(obj, next, params, None, None)?;
        return Ok(StepOutcome {
            state: new_state,
            params,
            backtracks: 0,
        });
    }

    let eta = rule.eta();
    let mut lipschitz = state.lipschitz_guess;
    let mut backtracks = 0;
    loop {
        if lipschitz > lipschitz_cap || !lipschitz.is_finite() {
            return Err(Error::NonSmooth {
                iteration: state.iter,
                lipschitz,
                cap: lipschitz_cap,
            });
        }
        let params = rule.params_at(state.iter, lipschitz, delta_prev)?;
        let next = state.candidate(obj, params.alpha, params.beta)?;
        // A trial point outside the domain of f counts as a failed test.
        let f_next = match obj.smooth_value(&next) {
            Ok(v) => v,
            Err(e) if e.is_numerical() => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if f_next.is_finite() {
            let slack = descent_condition_slack(
                state.f_curr,
                &state.grad_curr,
                &state.x_curr,
                &next,
                f_next,
                lipschitz,
            );
            let tol = descent_tolerance(state.f_curr);
            let mut accepted = slack >= -tol;
            let mut grad_next = None;
            let d2 = dist(&next, &state.x_curr).powi(2);
            if accepted && 0.5 * lipschitz * d2 <= ROUNDING_REGIME * tol {
                match obj.smooth_grad(&next) {
                    Ok(g) => {
                        let (cs, round) = curvature_slack(&state.grad_curr, &g, &state.x_curr, &next, lipschitz);
                        accepted = cs >= -round;
                        grad_next = Some(g);
                    }
                    Err(e) if e.is_numerical() => accepted = false,
                    Err(e) => return Err(e),
                }
            }
            if accepted {
                rule.check_accepted(state.iter, &params, delta_prev)?;
                let mut new_state = state.advance(obj, next, params, Some(f_next), grad_next)?;
                new_state.lipschitz_guess = lipschitz / rule.shrink_factor();
                return Ok(StepOutcome {
                    state: new_state,
                    params,
                    backtracks,
                });
            }
        }
        lipschitz *= eta;
        backtracks += 1;
    }
}

/// Target energy `h*` with tolerance: stop once `h − h* ≤ tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEnergy {
    pub value: f64,
    pub tol: f64,
}

/// When to stop iterating. Any satisfied criterion stops the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriterion {
    /// Maximum number of steps; `0` means no cap.
    pub max_iters: usize,
    /// Stop once `|h(x^n) − h(x^{n+1})|` drops below this.
    pub tol_energy: Option<f64>,
    /// Stop once `‖r(x^n)‖` drops below this.
    pub tol_residual: Option<f64>,
    pub target_energy: Option<TargetEnergy>,
}

impl StopCriterion {
    pub fn iterations(max_iters: usize) -> Self {
        Self {
            max_iters,
            tol_energy: None,
            tol_residual: None,
            target_energy: None,
        }
    }

    pub fn with_residual(mut self, tol: f64) -> Self {
        self.tol_residual = Some(tol);
        self
    }

    pub fn with_energy(mut self, tol: f64) -> Self {
        self.tol_energy = Some(tol);
        self
    }

    pub fn with_target(mut self, value: f64, tol: f64) -> Self {
        self.target_energy = Some(TargetEnergy { value, tol });
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0
            && self.tol_energy.is_none()
            && self.tol_residual.is_none()
            && self.target_energy.is_none()
        {
            return Err(Error::Config("no stopping criterion is active".into()));
        }
        Ok(())
    }
}

impl Default for StopCriterion {
    fn default() -> Self {
        Self::iterations(1000)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    EnergyTolerance,
    ResidualTolerance,
    TargetEnergy,
}

/// Final iterate and trace of a run.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub trace: Trace,
    pub stop_reason: StopReason,
}

/// Configurable driver; [`solve`] is the shorthand with defaults.
#[derive(Debug, Clone)]
pub struct Solver {
    pub rule: StepRule,
    pub stop: StopCriterion,
    pub lipschitz_cap: f64,
    pub keep_iterates: bool,
}

impl Solver {
    pub fn new(rule: StepRule) -> Self {
        Self {
            rule,
            stop: StopCriterion::default(),
            lipschitz_cap: DEFAULT_LIPSCHITZ_CAP,
            keep_iterates: false,
        }
    }

    pub fn stop(mut self, stop: StopCriterion) -> Self {
        self.stop = stop;
        self
    }

    pub fn lipschitz_cap(mut self, cap: f64) -> Self {
        self.lipschitz_cap = cap;
        self
    }

    pub fn keep_iterates(mut self, keep: bool) -> Self {
        self.keep_iterates = keep;
        self
    }

    pub fn solve<O: Objective + ?Sized>(&self, obj: &O, x0: Vec<f64>) -> Result<Solution> {
        self.rule.validate()?;
        let state = SolverState::new(obj, x0)?.with_rule(&self.rule);
        run_loop(obj, state, &self.stop, self.keep_iterates, |s| {
            backtrack_step(obj, s, &self.rule, self.lipschitz_cap)
        })
    }
}

/// Runs iPiano from `x0` under `rule` until `stop` fires.
pub fn solve<O: Objective + ?Sized>(obj: &O, rule: &StepRule, x0: Vec<f64>, stop: StopCriterion) -> Result<Solution> {
    Solver::new(rule.clone()).stop(stop).solve(obj, x0)
}

/// Iterates [`ipiano_step`] with fixed `α`, `β` and no feasibility checks.
///
/// `lipschitz` is only recorded, to compute `δ_n`, `γ_n` in the trace. Meant
/// for experiments with deliberately infeasible parameters.
pub fn solve_unchecked<O: Objective + ?Sized>(
    obj: &O,
    x0: Vec<f64>,
    alpha: f64,
    beta: f64,
    lipschitz: f64,
    stop: StopCriterion,
    keep_iterates: bool,
) -> Result<Solution> {
    let mut state = SolverState::new(obj, x0)?;
    state.lipschitz = lipschitz;
    let params = StepParams::new(alpha, beta, lipschitz);
    run_loop(obj, state, &stop, keep_iterates, |s| {
        Ok(StepOutcome {
            state: ipiano_step(s, obj, alpha, beta)?,
            params,
            backtracks: 0,
        })
    })
}

fn run_loop<O, S>(
    obj: &O,
    mut state: SolverState,
    stop: &StopCriterion,
    keep_iterates: bool,
    mut step: S,
) -> Result<Solution>
where
    O: Objective + ?Sized,
    S: FnMut(&SolverState) -> Result<StepOutcome>,
{
    stop.validate()?;
    let mut records = Vec::new();
    let mut iterates = keep_iterates.then(|| vec![state.x_curr.clone()]);
    let mut pending: Option<StopReason> = None;

    let (stop_reason, terminal_residual) = loop {
        let residual = norm(&proximal_residual_from_grad(obj, &state.x_curr, &state.grad_curr)?);
        if let Some(reason) = pending {
            break (reason, residual);
        }
        if stop.tol_residual.is_some_and(|tol| residual < tol) {
            break (StopReason::ResidualTolerance, residual);
        }
        if stop.max_iters > 0 && records.len() >= stop.max_iters {
            break (StopReason::MaxIterations, residual);
        }

        let outcome = step(&state)?;
        let p = outcome.params;
        let h = state.h();
        records.push(TraceRecord {
            n: state.iter,
            f: state.f_curr,
            g: state.g_curr,
            h,
            alpha: p.alpha,
            beta: p.beta,
            lipschitz: p.lipschitz,
            delta: p.delta,
            gamma: p.gamma,
            step_norm: state.step_norm,
            lyapunov: h + p.delta * state.step_norm * state.step_norm,
            residual_norm: residual,
            backtracks: outcome.backtracks,
        });
        state = outcome.state;
        if let Some(it) = iterates.as_mut() {
            it.push(state.x_curr.clone());
        }

        let h_next = state.h();
        if stop.tol_energy.is_some_and(|tol| (h - h_next).abs() < tol) {
            pending = Some(StopReason::EnergyTolerance);
        } else if stop.target_energy.is_some_and(|t| h_next - t.value <= t.tol) {
            pending = Some(StopReason::TargetEnergy);
        }
    };

    let terminal = TerminalPoint {
        f: state.f_curr,
        g: state.g_curr,
        h: state.h(),
        step_norm: state.step_norm,
        residual_norm: terminal_residual,
    };
    Ok(Solution {
        x: state.x_curr,
        trace: Trace {
            records,
            terminal,
            iterates,
        },
        stop_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{Composite, Quadratic, SmoothFn, ZeroSmooth};
    use crate::prox::{L1Norm, Zero};

    fn quad_l1() -> Composite<Quadratic, L1Norm> {
        Composite::new(Quadratic::new(vec![0.0], 1.0), L1Norm::new(1.0))
    }

    #[test]
    fn beta_zero_no_g_is_gradient_step() {
        let obj = Composite::new(Quadratic::new(vec![1.0, -2.0], 3.0), Zero);
        let s0 = SolverState::new(&obj, vec![4.0, 5.0]).unwrap();
        let s1 = ipiano_step(&s0, &obj, 0.1, 0.0).unwrap();
        let g = &s0.grad_curr;
        let expect: Vec<f64> = s0.x_curr.iter().zip(g).map(|(x, g)| x - 0.1 * g).collect();
        assert_eq!(s1.x_curr, expect);
        assert_eq!(s1.x_prev, s0.x_curr);
        assert_eq!(s1.iter, 1);
    }

    #[test]
    fn no_g_with_inertia_is_heavy_ball() {
        let obj = Composite::new(Quadratic::new(vec![0.5, 0.0], 2.0), Zero);
        let s0 = SolverState::new(&obj, vec![3.0, -1.0]).unwrap();
        let s1 = ipiano_step(&s0, &obj, 0.2, 0.6).unwrap();
        let s2 = ipiano_step(&s1, &obj, 0.2, 0.6).unwrap();
        let expect: Vec<f64> = (0..2)
            .map(|i| s1.x_curr[i] - 0.2 * s1.grad_curr[i] + 0.6 * (s1.x_curr[i] - s1.x_prev[i]))
            .collect();
        assert_eq!(s2.x_curr, expect);
    }

    #[test]
    fn shrinkage_after_forward_step() {
        // f = ½x², g = |x|, x = x_prev = 2, α = 1, β = ½: prox(2 − 2, 1) = 0.
        let obj = quad_l1();
        let s0 = SolverState::new(&obj, vec![2.0]).unwrap();
        let s1 = ipiano_step(&s0, &obj, 1.0, 0.5).unwrap();
        assert_eq!(s1.x_curr, vec![0.0]);
        assert_eq!(s1.step_norm, 2.0);
    }

    #[test]
    fn initial_state_has_zero_step() {
        let obj = quad_l1();
        let s0 = SolverState::new(&obj, vec![1.5]).unwrap();
        assert_eq!(s0.x_prev, s0.x_curr);
        assert_eq!(s0.step_norm, 0.0);
    }

    #[test]
    fn non_finite_gradient_is_a_domain_error() {
        let obj = Composite::new(
            SmoothFn::new(|x: &[f64]| x[0].ln(), |x: &[f64]| vec![1.0 / x[0]]),
            Zero,
        );
        let err = SolverState::new(&obj, vec![0.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let s0 = SolverState::new(&obj, vec![1.0]).unwrap();
        let err = ipiano_step(&s0, &obj, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err:?}");
    }

    #[test]
    fn pure_shrinkage_reaches_zero_in_finite_steps() {
        let obj = Composite::new(ZeroSmooth, L1Norm::new(1.0));
        let rule = StepRule::constant(0.0, 1.0);
        let sol = solve(&obj, &rule, vec![5.0], StopCriterion::iterations(50).with_residual(1e-14)).unwrap();
        assert_eq!(sol.x, vec![0.0]);
        assert_eq!(sol.stop_reason, StopReason::ResidualTolerance);
        // α = 1.99, so three shrink steps reach 0.
        assert_eq!(sol.trace.len(), 3);
    }

    #[test]
    fn exact_step_on_quadratic() {
        // f = ½(x − 3)², α = 1, β = 0 lands on 3 in one step.
        let obj = Composite::new(Quadratic::new(vec![3.0], 1.0), Zero);
        let s0 = SolverState::new(&obj, vec![-4.0]).unwrap();
        let s1 = ipiano_step(&s0, &obj, 1.0, 0.0).unwrap();
        assert_eq!(s1.x_curr, vec![3.0]);
    }

    #[test]
    fn backtracking_zero_backtracks_at_true_constant() {
        let obj = Composite::new(Quadratic::new(vec![0.0, 0.0], 4.0), L1Norm::new(0.1));
        let rule = StepRule::LazyBacktracking {
            beta: 0.3,
            lipschitz_init: 4.0,
            eta: 2.0,
            shrink_factor: 1.0,
            safety: 0.995,
        };
        let sol = solve(&obj, &rule, vec![3.0, -1.0], StopCriterion::iterations(40)).unwrap();
        assert_eq!(sol.trace.total_backtracks(), 0);
        assert!(sol.trace.records.iter().all(|r| r.lipschitz == 4.0));
    }

    #[test]
    fn backtracking_finds_minimal_power() {
        // f = ½·100x²: L_n is the least 2^k with the descent condition, and L_n/2 fails it.
        let obj = Composite::new(Quadratic::new(vec![0.0], 100.0), Zero);
        let rule = StepRule::LazyBacktracking {
            beta: 0.0,
            lipschitz_init: 1.0,
            eta: 2.0,
            shrink_factor: 1.0,
            safety: 0.995,
        };
        let state = SolverState::new(&obj, vec![1.0]).unwrap().with_rule(&rule);
        let out = backtrack_step(&obj, &state, &rule, 1e12).unwrap();
        let l = out.params.lipschitz;
        assert_eq!(l, 2f64.powi(out.backtracks as i32));
        let slack = descent_condition_slack(state.f_curr, &state.grad_curr, &state.x_curr, &out.state.x_curr, out.state.f_curr, l);
        assert!(slack >= -1e-12);
        let p = rule.params_at(0, l / 2.0, f64::INFINITY).unwrap();
        let x_half = state.candidate(&obj, p.alpha, p.beta).unwrap();
        let f_half = obj.smooth_value(&x_half).unwrap();
        let slack_half = descent_condition_slack(state.f_curr, &state.grad_curr, &state.x_curr, &x_half, f_half, l / 2.0);
        assert!(slack_half < 0.0);
    }

    #[test]
    fn lipschitz_cap_raises_non_smooth() {
        // |x|^{1.5} has an unbounded second derivative at 0.
        let obj = Composite::new(
            SmoothFn::new(
                |x: &[f64]| x[0].abs().powf(1.5),
                |x: &[f64]| vec![1.5 * x[0].abs().sqrt() * x[0].signum()],
            ),
            Zero,
        );
        let rule = StepRule::lazy(0.0, 1.0);
        let err = Solver::new(rule)
            .lipschitz_cap(1e3)
            .stop(StopCriterion::iterations(500))
            .solve(&obj, vec![1e-3])
            .unwrap_err();
        assert!(matches!(err, Error::NonSmooth { .. }), "{err:?}");
    }

    #[test]
    fn general_rule_reports_infeasible_schedule() {
        let obj = Composite::new(Quadratic::new(vec![0.0], 1.0), Zero);
        let rule = StepRule::General {
            c1: 1e-8,
            c2: 1e-6,
            alpha: Schedule::Constant(3.0),
            beta: Schedule::Constant(0.0),
            lipschitz_init: 1.0,
            eta: 2.0,
        };
        let err = solve(&obj, &rule, vec![1.0], StopCriterion::iterations(10)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err:?}");
    }

    #[test]
    fn stop_needs_a_bound() {
        let stop = StopCriterion {
            max_iters: 0,
            tol_energy: None,
            tol_residual: None,
            target_energy: None,
        };
        assert!(stop.validate().is_err());
    }

    #[test]
    fn energy_stop_and_target_stop() {
        let obj = quad_l1();
        let rule = StepRule::constant(0.5, 1.0);
        let sol = solve(&obj, &rule, vec![10.0], StopCriterion::iterations(1000).with_energy(1e-9)).unwrap();
        assert_eq!(sol.stop_reason, StopReason::EnergyTolerance);
        let sol = solve(&obj, &rule, vec![10.0], StopCriterion::iterations(1000).with_target(0.0, 1e-3)).unwrap();
        assert_eq!(sol.stop_reason, StopReason::TargetEnergy);
        assert!(sol.trace.final_energy() <= 1e-3);
    }

    #[test]
    fn runs_are_deterministic() {
        let obj = Composite::new(Quadratic::new(vec![1.0, 2.0, -1.0], 5.0), L1Norm::new(0.7));
        let rule = StepRule::lazy(0.6, 0.5);
        let a = solve(&obj, &rule, vec![0.0, 9.0, 3.0], StopCriterion::iterations(200)).unwrap();
        let b = solve(&obj, &rule, vec![0.0, 9.0, 3.0], StopCriterion::iterations(200)).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.x, b.x);
    }
}
