/// One row of a solver trace: the iterate `x^n` together with the
/// parameters of the step taken from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lipschitz: f64,
    /// `δ_n`
    pub delta: f64,
    /// `γ_n`
    pub gamma: f64,
    /// `Δ_n = ‖x^n − x^{n−1}‖`
    pub step_norm: f64,
    /// `H_{δ_n}(x^n, x^{n−1}) = h + δ_n Δ_n²`
    pub lyapunov: f64,
    /// `‖r(x^n)‖`
    pub residual_norm: f64,
    pub backtracks: usize,
}

impl TraceRecord {
    pub const CSV_HEADER: &'static str =
        "n,f,g,h,alpha,beta,L,delta,gamma,step_norm,residual,lyapunov,backtracks";

    /// Fixed 17-significant-digit row matching [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            fmt17(self.f),
            fmt17(self.g),
            fmt17(self.h),
            fmt17(self.alpha),
            fmt17(self.beta),
            fmt17(self.lipschitz),
            fmt17(self.delta),
            fmt17(self.gamma),
            fmt17(self.step_norm),
            fmt17(self.residual_norm),
            fmt17(self.lyapunov),
            self.backtracks
        )
    }
}

/// `{:.16e}` gives 17 significant digits, enough to round-trip an f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// The last iterate `x^{N+1}`, which has no step parameters of its own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalPoint {
    pub f: f64,
    pub g: f64,
    pub h: f64,
    /// `Δ_{N+1}`
    pub step_norm: f64,
    pub residual_norm: f64,
}

/// Per-iteration diagnostics of a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub terminal: TerminalPoint,
    /// `x^0, x^1, …, x^{N+1}` when the solver was asked to keep them.
    pub iterates: Option<Vec<Vec<f64>>>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `h(x^0)`.
    pub fn initial_energy(&self) -> f64 {
        self.records.first().map_or(self.terminal.h, |r| r.h)
    }

    pub fn final_energy(&self) -> f64 {
        self.terminal.h
    }

    /// Energies `h(x^0), …, h(x^{N+1})`.
    pub fn energies(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.h)
            .chain(std::iter::once(self.terminal.h))
            .collect()
    }

    /// Step norms `Δ_0, …, Δ_{N+1}`.
    pub fn step_norms(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.step_norm)
            .chain(std::iter::once(self.terminal.step_norm))
            .collect()
    }

    pub fn total_backtracks(&self) -> usize {
        self.records.iter().map(|r| r.backtracks).sum()
    }

    /// Full CSV text including header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TraceRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        out
    }
}
