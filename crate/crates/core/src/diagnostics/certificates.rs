use crate::error::{Error, Result};
use crate::linalg::{norm, sub};
use crate::objective::Objective;

use super::trace::{Trace, TraceRecord};

/// Relative tolerance shared by all certificates.
pub const CERT_TOL: f64 = 1e-10;

/// Relative tolerance for deciding that two `δ_n` values are equal.
const DELTA_EQ_TOL: f64 = 1e-9;

/// `δ_n` is computed as a difference of terms of size `1/α_n` and `L_n`,
/// so its rounding error scales with them rather than with `δ_n`.
const DELTA_ROUND: f64 = 1e-12;

fn delta_scale(r: &TraceRecord) -> f64 {
    1.0 / r.alpha + r.lipschitz.abs()
}

/// Outcome of checking one family of inequalities along a trace.
///
/// Energy inequalities report absolute slack against
/// `tolerance = 10^{-10}(1 + |h(x^0)|)`. Norm inequalities report slack
/// relative to `1 + |rhs|` against `tolerance = 10^{-10}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub name: String,
    pub satisfied: bool,
    /// Smallest `rhs − lhs` over all checked inequalities.
    pub worst_slack: f64,
    /// Iteration index of the worst slack.
    pub location: usize,
    pub tolerance: f64,
    /// Recorded but not asserted quantities.
    pub observations: Vec<(String, f64)>,
}

impl Certificate {
    pub fn observation(&self, key: &str) -> Option<f64> {
        self.observations.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

struct Worst {
    slack: f64,
    location: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            slack: f64::INFINITY,
            location: 0,
        }
    }

    fn push(&mut self, slack: f64, n: usize) {
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if slack < self.slack {
            self.slack = slack;
            self.location = n;
        }
    }

    fn finish(self, name: &str, tolerance: f64, observations: Vec<(String, f64)>) -> Certificate {
        Certificate {
            name: name.to_string(),
            satisfied: self.slack >= -tolerance,
            worst_slack: self.slack,
            location: self.location,
            tolerance,
            observations,
        }
    }
}

fn relative(rhs: f64, lhs: f64) -> f64 {
    (rhs - lhs) / (1.0 + rhs.abs())
}

fn energy_tolerance(trace: &Trace) -> f64 {
    CERT_TOL * (1.0 + trace.initial_energy().abs())
}

/// `(h_{n+1}, Δ_{n+1})` for record `n`, reaching into the terminal point.
fn next_point(trace: &Trace, n: usize) -> (f64, f64) {
    match trace.records.get(n + 1) {
        Some(r) => (r.h, r.step_norm),
        None => (trace.terminal.h, trace.terminal.step_norm),
    }
}

/// First index of the longest suffix along which `δ_n` does not increase.
pub(crate) fn monotone_delta_start(trace: &Trace) -> usize {
    let r = &trace.records;
    let mut start = r.len().saturating_sub(1);
    while start > 0 {
        let (a, b) = (r[start - 1].delta, r[start].delta);
        if b <= a + DELTA_ROUND * (a.abs() + delta_scale(&r[start])) {
            start -= 1;
        } else {
            break;
        }
    }
    start
}

/// Descent of `H_δ(x, y) = h(x) + δ‖x − y‖²` along the trace.
///
/// Checks, at every `n`, `γ_n Δ_n² ≥ 0`,
/// `h_{n+1} + δ_n Δ_{n+1}² ≤ h_n + δ_n Δ_n² − γ_n Δ_n²`, and the chained form
/// `H_{δ_{n+1}}(x^{n+1}, x^n) ≤ H_{δ_n}(x^n, x^{n−1}) − γ_n Δ_n²` wherever
/// `δ_{n+1} ≤ δ_n`. On the longest suffix `n ≥ s` with non-increasing `δ_n`
/// it also checks the partial sums
/// `Σ_{n=s}^{M} γ_n Δ_n² ≤ H_{δ_s}(x^s, x^{s−1}) − H_{δ_M}(x^{M+1}, x^M)`.
/// The suffix start is recorded as `monotone_from`.
pub fn lyapunov_certificate(trace: &Trace) -> Certificate {
    let tol = energy_tolerance(trace);
    let mut worst = Worst::new();
    let r = &trace.records;
    for (n, rec) in r.iter().enumerate() {
        let (h_next, d_next) = next_point(trace, n);
        let d2 = rec.step_norm * rec.step_norm;
        // Descent needs a non-negative decrease; γ_n < 0 makes the inequality vacuous.
        worst.push(rec.gamma * d2, n);
        let rhs = rec.h + (rec.delta - rec.gamma) * d2;
        worst.push(rhs - (h_next + rec.delta * d_next * d_next), n);
        if let Some(next) = r.get(n + 1) {
            if next.delta <= rec.delta {
                worst.push(rec.lyapunov - rec.gamma * d2 - next.lyapunov, n);
            }
        }
    }

    let start = monotone_delta_start(trace);
    let mut sum = 0.0;
    for (n, rec) in r.iter().enumerate().skip(start) {
        sum += rec.gamma * rec.step_norm * rec.step_norm;
        let (h_next, d_next) = next_point(trace, n);
        let h_final = h_next + rec.delta * d_next * d_next;
        worst.push(r[start].lyapunov - h_final - sum, n);
    }

    worst.finish(
        "lyapunov",
        tol,
        vec![("monotone_from".to_string(), start as f64)],
    )
}

/// `min(1, min_n α_n)`, the largest admissible `c1` for [`rate_certificate`].
pub fn c1_from_trace(trace: &Trace) -> f64 {
    trace.records.iter().fold(1.0_f64, |m, r| m.min(r.alpha))
}

/// Rate bounds along the trace, with `Δ_n` norm inequalities relative.
///
/// For every `N`:
/// * `μ_N := min_{0≤n≤N} Δ_{n+1}² ≤ (h(x^0) − h̲)/(c2 (N+1))`
/// * `Σ_{n=1}^{N+1} Δ_n² ≤ (h(x^0) − h̲)/c2`
/// * `Σ_{n=0}^{N} ‖r(x^n)‖ ≤ (2/c1) Σ_{n=0}^{N} Δ_{n+1}`
///
/// `μ_N` is taken over successive differences `x^{n+1} − x^n`; with
/// `x^{-1} = x^0` the minimum over `Δ_0, …, Δ_N` would be zero. Recorded
/// observations: `mu_ratio = μ'_N/μ_N` with `μ'_N = min ‖r(x^n)‖²`, and
/// `looseness` = bound / `μ_N` at the last `N`.
pub fn rate_certificate(trace: &Trace, c1: f64, c2: f64, h_lower: f64) -> Result<Certificate> {
    let c1_max = c1_from_trace(trace);
    if !(c1 > 0.0) || c1 > c1_max {
        return Err(Error::Config(format!(
            "c1 = {c1:e} must lie in (0, min(1, min alpha_n)] = (0, {c1_max:e}]"
        )));
    }
    if !(c2 > 0.0) {
        return Err(Error::Config(format!("c2 must be > 0, got {c2}")));
    }
    let h0 = trace.initial_energy();
    let gap = h0 - h_lower;
    let mut worst = Worst::new();
    let mut mu = f64::INFINITY;
    let mut mu_res = f64::INFINITY;
    let mut sum_sq = 0.0;
    let mut sum_res = 0.0;
    let mut sum_step = 0.0;
    let mut bound = f64::INFINITY;
    for (n, rec) in trace.records.iter().enumerate() {
        let (_, d_next) = next_point(trace, n);
        mu = mu.min(d_next * d_next);
        mu_res = mu_res.min(rec.residual_norm * rec.residual_norm);
        bound = gap / (c2 * (n as f64 + 1.0));
        worst.push(relative(bound, mu), n);

        sum_sq += d_next * d_next;
        worst.push(relative(gap / c2, sum_sq), n);

        sum_res += rec.residual_norm;
        sum_step += d_next;
        worst.push(relative(2.0 / c1 * sum_step, sum_res), n);
    }

    let mut observations = Vec::new();
    if mu > 0.0 && mu.is_finite() {
        observations.push(("mu_ratio".to_string(), mu_res / mu));
        observations.push(("looseness".to_string(), bound / mu));
    }
    Ok(worst.finish("rate", CERT_TOL, observations))
}

/// Start of the longest suffix on which `δ_n` is constant, and that `δ`.
pub fn constant_delta_suffix(trace: &Trace) -> Option<(usize, f64)> {
    let r = &trace.records;
    let last = r.last()?.delta;
    let mut start = r.len() - 1;
    while start > 0 && delta_eq(&r[start - 1], last) {
        start -= 1;
    }
    Some((start, last))
}

fn delta_eq(r: &TraceRecord, delta: f64) -> bool {
    (r.delta - delta).abs() <= DELTA_EQ_TOL * r.delta.abs().max(delta.abs()) + DELTA_ROUND * delta_scale(r)
}

/// H1/H2 checks for `F = H_δ` on the longest suffix where `δ_n = δ`.
///
/// * H1: `h_{n+1} + δΔ_{n+1}² + c2 Δ_n² ≤ h_n + δΔ_n²` (energy slack)
/// * H2: `‖w_x‖ + ‖w_y‖ ≤ (7/c1)(Δ_n + Δ_{n+1})` (relative slack) with
///   `w_x = (x^n − x^{n+1})/α_n − ∇f(x^n) + (β_n/α_n)(x^n − x^{n−1}) + ∇f(x^{n+1}) + 2δ(x^{n+1} − x^n)`
///   and `w_y = −2δ(x^{n+1} − x^n)`.
///
/// Needs a trace with iterates. Fails with a configuration error when the
/// last `δ_n` differs from `delta`.
pub fn h_certificates<O: Objective + ?Sized>(
    trace: &Trace,
    obj: &O,
    delta: f64,
    c1: f64,
    c2: f64,
) -> Result<[Certificate; 2]> {
    let r = &trace.records;
    let mut start = r.len();
    while start > 0 && delta_eq(&r[start - 1], delta) {
        start -= 1;
    }
    if start == r.len() && !r.is_empty() {
        return Err(Error::Config(format!(
            "delta_n is not constant at {delta:e} at the end of the trace"
        )));
    }
    h_certificates_from(trace, obj, start, c1, c2)
}

/// [`h_certificates`] on the window `n ≥ start`, where `δ_n` must be constant.
pub fn h_certificates_from<O: Objective + ?Sized>(
    trace: &Trace,
    obj: &O,
    start: usize,
    c1: f64,
    c2: f64,
) -> Result<[Certificate; 2]> {
    let iterates = trace
        .iterates
        .as_ref()
        .ok_or_else(|| Error::Config("H1/H2 certificates need a trace with iterates".into()))?;
    let r = &trace.records;
    if iterates.len() != r.len() + 1 {
        return Err(Error::Config(format!(
            "trace holds {} iterates for {} records",
            iterates.len(),
            r.len()
        )));
    }
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(Error::Config(format!("c1, c2 must be > 0, got {c1}, {c2}")));
    }
    let window = r.get(start..).unwrap_or(&[]);
    let delta = window.first().map_or(0.0, |w| w.delta);
    if let Some(w) = window.iter().find(|w| !delta_eq(w, delta)) {
        return Err(Error::Config(format!(
            "delta_n is not constant on the window: {:e} at n = {} vs {delta:e}",
            w.delta, w.n
        )));
    }

    let tol_energy = energy_tolerance(trace);
    let b = 7.0 / c1;
    let mut h1 = Worst::new();
    let mut h2 = Worst::new();
    let mut grad_next = match iterates.get(start) {
        Some(x) if !window.is_empty() => obj.smooth_grad(x)?,
        _ => Vec::new(),
    };
    for (n, rec) in r.iter().enumerate().skip(start) {
        let (h_next, d_next) = next_point(trace, n);
        let d = rec.step_norm;
        h1.push(rec.h + delta * d * d - (h_next + delta * d_next * d_next + c2 * d * d), n);

        let x_prev = &iterates[n.saturating_sub(1)];
        let x = &iterates[n];
        let x_next = &iterates[n + 1];
        let grad = std::mem::take(&mut grad_next);
        grad_next = obj.smooth_grad(x_next)?;
        let step = sub(x_next, x);
        let (a, beta) = (rec.alpha, rec.beta);
        let w_x: Vec<f64> = (0..x.len())
            .map(|i| {
                -step[i] / a - grad[i] + beta / a * (x[i] - x_prev[i]) + grad_next[i] + 2.0 * delta * step[i]
            })
            .collect();
        let w_y_norm = 2.0 * delta.abs() * norm(&step);
        let rhs = b * (d + d_next);
        h2.push(relative(rhs, norm(&w_x) + w_y_norm), n);
    }
    let obs = vec![
        ("window_start".to_string(), start as f64),
        ("delta".to_string(), delta),
    ];
    Ok([
        h1.finish("H1", tol_energy, obs.clone()),
        h2.finish("H2", CERT_TOL, obs),
    ])
}
