//! Experiment runners. Each writes its outputs under `cfg.out`:
//!
//! ```text
//! out/config.txt            resolved configuration
//! out/certificates.csv      all certificates, one row per (run, certificate)
//! out/summary.csv           one row per run
//! out/beta_<β>/             one directory per run
//!     config.txt, trace.csv, certificates.csv, plus problem outputs
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use ipiano_core::diagnostics::{fmt17, Certificate};
use ipiano_core::experiments::{
    certify, global_fraction, optimize_mask, pilot_lipschitz, random_mask_mse, reference_energy, toy_basins, trend_rows,
    BasinConfig, BasinRow, MaskResult, RuleKind, TrendRow,
};
use ipiano_core::problems::{
    add_noise, mask_density, mrf_lipschitz_bound, mrf_model, mse, CompressionModel, DataTerm, MrfPrior, NoiseSpec,
    ToyProblem, DEFAULT_DENSITY_EPS,
};
use ipiano_core::{Error, Image, Objective, Result, Solution, Solver, StepRule, StopCriterion};

use crate::config::{DataKind, Problem, RunConfig};

/// Steps of the pilot run that estimates a Lipschitz bound.
const PILOT_ITERATIONS: usize = 50;
/// Random masks averaged for the inpainting baseline.
const RANDOM_MASK_SEEDS: u64 = 5;

/// One certificate of one run.
#[derive(Debug, Clone)]
pub struct CertRow {
    pub run: String,
    pub cert: Certificate,
}

/// What a run produced, beyond the files.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub certificates: Vec<CertRow>,
    /// Human-readable lines for the terminal.
    pub report: Vec<String>,
}

impl Outcome {
    pub fn all_satisfied(&self) -> bool {
        self.certificates.iter().all(|c| c.cert.satisfied)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CertRow> {
        self.certificates.iter().filter(|c| !c.cert.satisfied)
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.txt"), cfg.to_config_string())?;
    let outcome = match cfg.problem {
        Problem::Toy => run_toy(cfg)?,
        Problem::Denoise => run_denoise(cfg)?,
        Problem::InpaintMask => run_inpaint_mask(cfg)?,
    };
    if cfg.emit_certificates {
        fs::write(cfg.out.join("certificates.csv"), certificates_csv(&outcome.certificates))?;
    }
    Ok(outcome)
}

pub const CERT_CSV_HEADER: &str = "run,certificate,satisfied,worst_slack,location,tolerance";

pub fn certificates_csv(rows: &[CertRow]) -> String {
    let mut s = format!("{CERT_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.run,
            r.cert.name,
            u8::from(r.cert.satisfied),
            fmt17(r.cert.worst_slack),
            r.cert.location,
            fmt17(r.cert.tolerance)
        ));
    }
    s
}

fn run_name(beta: f64) -> String {
    format!("beta_{beta}")
}

/// Writes the per-run directory and returns its certificate rows.
fn write_run(cfg: &RunConfig, name: &str, run_cfg: &RunConfig, sol: &Solution, certs: Vec<Certificate>) -> Result<(PathBuf, Vec<CertRow>)> {
    let dir = cfg.out.join(name);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.txt"), run_cfg.to_config_string())?;
    let rows: Vec<CertRow> = certs
        .into_iter()
        .map(|cert| CertRow {
            run: name.to_string(),
            cert,
        })
        .collect();
    if cfg.emit_trace {
        fs::write(dir.join("trace.csv"), sol.trace.to_csv())?;
    }
    if cfg.emit_certificates {
        fs::write(dir.join("certificates.csv"), certificates_csv(&rows))?;
    }
    Ok((dir, rows))
}

fn single_beta(cfg: &RunConfig, beta: f64) -> RunConfig {
    RunConfig {
        beta: vec![beta],
        ..cfg.clone()
    }
}

fn write_image(cfg: &RunConfig, path: &Path, h: usize, w: usize, data: Vec<f64>) -> Result<()> {
    if cfg.emit_images {
        Image::new(h, w, data)?.write(path)?;
    }
    Ok(())
}

fn load_image(cfg: &RunConfig) -> Result<Image> {
    match &cfg.input {
        Some(path) => Image::read(path).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read image {}: {io}", path.display())),
            other => other,
        }),
        None => Ok(Image::synthetic(cfg.size, cfg.size)),
    }
}

fn bound_or_pilot<O: Objective + ?Sized>(cfg: &RunConfig, obj: &O, x0: &[f64], known: Option<f64>) -> Result<f64> {
    if let Some(l) = cfg.lipschitz.or(known) {
        return Ok(l);
    }
    match cfg.rule {
        RuleKind::Constant | RuleKind::General => pilot_lipschitz(obj, x0.to_vec(), cfg.lipschitz_init, PILOT_ITERATIONS),
        // Unused by the backtracking rules.
        RuleKind::Backtracking | RuleKind::Lazy => Ok(cfg.lipschitz_init),
    }
}

fn run_toy(cfg: &RunConfig) -> Result<Outcome> {
    let prob = ToyProblem::new(vec![1.0, 1.0], cfg.mu, cfg.lambda)?;
    let obj = prob.objective();
    let stop = StopCriterion::iterations(cfg.max_iters).with_residual(cfg.tol[0]);
    let bound = cfg.lipschitz.unwrap_or_else(|| prob.lipschitz());
    let basin_cfg = BasinConfig {
        rule: cfg.rule,
        betas: cfg.beta.clone(),
        grid: cfg.grid,
        lo: cfg.grid_lo,
        hi: cfg.grid_hi,
        stop,
        ..BasinConfig::default()
    };
    let rows = toy_basins(&prob, &basin_cfg)?;
    let mut csv = format!("{}\n", BasinRow::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    fs::write(cfg.out.join("basins.csv"), csv)?;

    let mut outcome = Outcome::default();
    let mut summary = String::from("beta,iterations,energy,x,y,residual,global_fraction\n");
    for &beta in &cfg.beta {
        let rule = cfg.rule.build(beta, bound, cfg.lipschitz_init)?;
        let sol = Solver::new(rule.clone()).stop(stop).keep_iterates(true).solve(&obj, cfg.start.clone())?;
        let certs = certify(&obj, &sol, &rule)?;
        let name = run_name(beta);
        let (_, rows_c) = write_run(cfg, &name, &single_beta(cfg, beta), &sol, certs)?;
        outcome.certificates.extend(rows_c);
        let frac = global_fraction(&rows, beta);
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt17(beta),
            sol.trace.len(),
            fmt17(sol.trace.terminal.h),
            fmt17(sol.x[0]),
            fmt17(sol.x[1]),
            fmt17(sol.trace.terminal.residual_norm),
            fmt17(frac)
        ));
        outcome.report.push(format!(
            "beta={beta}: start ({}, {}) -> ({:.6}, {:.6}), h={:.6}, global minimum reached from {:.0}% of grid starts",
            cfg.start[0],
            cfg.start[1],
            sol.x[0],
            sol.x[1],
            sol.trace.terminal.h,
            100.0 * frac
        ));
    }
    fs::write(cfg.out.join("summary.csv"), summary)?;
    Ok(outcome)
}

fn run_denoise(cfg: &RunConfig) -> Result<Outcome> {
    let clean = load_image(cfg)?;
    let (h, w) = (clean.height, clean.width);
    let spec = match cfg.sp_fraction {
        Some(fraction) => NoiseSpec::SaltPepper { fraction },
        None => NoiseSpec::Gaussian { sigma: cfg.sigma },
    };
    let noisy = add_noise(&clean.data, spec, cfg.seed)?;
    write_image(cfg, &cfg.out.join("clean.pgm"), h, w, clean.data.clone())?;
    write_image(cfg, &cfg.out.join("noisy.pgm"), h, w, noisy.clone())?;

    let prior = MrfPrior::dct(h, w)?;
    let data = match cfg.data_term {
        DataKind::L2 => DataTerm::l2(noisy, cfg.lambda),
        DataKind::L1 => DataTerm::l1(noisy, cfg.lambda),
    };
    let x0 = data.initial_point();
    let bound = match cfg.lipschitz {
        Some(l) => l,
        None => mrf_lipschitz_bound(&prior)?,
    };
    let model = mrf_model(prior, data)?;

    // h* from a long lazy run with strong inertia.
    let ref_rule = RuleKind::Lazy.build(0.8, bound, cfg.lipschitz_init)?;
    let (ref_h, ref_sol) = reference_energy(&model, &ref_rule, x0.clone(), cfg.reference_iters)?;
    let mut outcome = Outcome::default();
    let ref_certs = certify(&model, &ref_sol, &ref_rule)?;
    let (_, rows_c) = write_run(cfg, "reference", cfg, &ref_sol, ref_certs)?;
    outcome.certificates.extend(rows_c);

    let mut table = format!("{}\n", TrendRow::CSV_HEADER);
    let mut summary = String::from("beta,iterations,energy,h_star,mse_noisy,mse\n");
    let mut h_star = ref_h;
    let mut runs = Vec::new();
    for &beta in &cfg.beta {
        let rule = cfg.rule.build(beta, bound, cfg.lipschitz_init)?;
        let (rows, sol) = trend_rows(&model, &rule, x0.clone(), ref_h, &cfg.tol, cfg.max_iters)?;
        h_star = sol.trace.energies().into_iter().fold(h_star, f64::min);
        for r in &rows {
            table.push_str(&r.csv_row());
            table.push('\n');
        }
        let certs = certify(&model, &sol, &rule)?;
        let name = run_name(beta);
        let (dir, rows_c) = write_run(cfg, &name, &single_beta(cfg, beta), &sol, certs)?;
        outcome.certificates.extend(rows_c);
        write_image(cfg, &dir.join("denoised.pgm"), h, w, sol.x.clone())?;
        let reached = rows.iter().filter(|r| r.iterations.is_some()).count();
        outcome.report.push(format!(
            "beta={beta}: {} iterations, h={:.6}, {reached}/{} tolerances reached, mse={:.3}",
            sol.trace.len(),
            sol.trace.terminal.h,
            rows.len(),
            mse(&sol.x, &clean.data)?
        ));
        runs.push((beta, sol));
    }
    let mse_noisy = mse(model.convex.u0(), &clean.data)?;
    for (beta, sol) in &runs {
        summary.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(*beta),
            sol.trace.len(),
            fmt17(sol.trace.terminal.h),
            fmt17(h_star),
            fmt17(mse_noisy),
            fmt17(mse(&sol.x, &clean.data)?)
        ));
    }
    if h_star < ref_h {
        outcome
            .report
            .push(format!("note: a run went below the reference energy by {:.3e}", ref_h - h_star));
    }
    fs::write(cfg.out.join("table.csv"), table)?;
    fs::write(cfg.out.join("summary.csv"), summary)?;
    Ok(outcome)
}

fn run_inpaint_mask(cfg: &RunConfig) -> Result<Outcome> {
    let img = load_image(cfg)?;
    let (h, w) = (img.height, img.width);
    let model = CompressionModel::new(img.data.clone(), h, w, cfg.lambda)?;
    write_image(cfg, &cfg.out.join("original.pgm"), h, w, img.data.clone())?;
    let obj = model.objective();
    let bound = bound_or_pilot(cfg, &obj, &model.initial_mask(), None)?;
    let mut stop = StopCriterion::iterations(cfg.max_iters);
    if cfg.tol[0] > 0.0 {
        stop = stop.with_energy(cfg.tol[0]);
    }
    let seeds: Vec<u64> = (0..RANDOM_MASK_SEEDS).map(|k| cfg.seed.wrapping_add(k)).collect();

    let mut outcome = Outcome::default();
    let mut summary = format!("beta,{},random_mask_mse\n", MaskResult::CSV_HEADER);
    for &beta in &cfg.beta {
        let rule: StepRule = cfg.rule.build(beta, bound, cfg.lipschitz_init)?;
        let res = optimize_mask(&model, &rule, stop, true)?;
        let certs = certify(&obj, &res.solution, &rule)?;
        let name = run_name(beta);
        let (dir, rows_c) = write_run(cfg, &name, &single_beta(cfg, beta), &res.solution, certs)?;
        outcome.certificates.extend(rows_c);
        let support: Vec<f64> = res
            .mask
            .iter()
            .map(|&c| if c.abs() > DEFAULT_DENSITY_EPS { 255.0 } else { 0.0 })
            .collect();
        write_image(cfg, &dir.join("mask.pgm"), h, w, support)?;
        write_image(cfg, &dir.join("reconstruction.pgm"), h, w, res.reconstruction.clone())?;
        let mut mask_csv = String::from("c\n");
        for &c in &res.mask {
            mask_csv.push_str(&fmt17(c));
            mask_csv.push('\n');
        }
        fs::write(dir.join("mask.csv"), mask_csv)?;
        let density = mask_density(&res.mask, DEFAULT_DENSITY_EPS);
        let random = random_mask_mse(&model, density, &seeds)?;
        summary.push_str(&format!("{},{},{}\n", fmt17(beta), res.csv_row(), fmt17(random)));
        outcome.report.push(format!(
            "beta={beta}: {} iterations, h={:.6e}, density={:.2}%, mse={:.3} (random mask of same density: {:.3})",
            res.solution.trace.len(),
            res.energy,
            100.0 * density,
            res.mse,
            random
        ));
    }
    fs::write(cfg.out.join("summary.csv"), summary)?;
    Ok(outcome)
}
