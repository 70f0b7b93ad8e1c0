use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ipiano_cli::{parse_config_text, Problem, RunConfig};

fn ipiano(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipiano"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn ipiano")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

const TRACE_HEADER: &str = "n,f,g,h,alpha,beta,L,delta,gamma,step_norm,residual,lyapunov,backtracks";

fn assert_run_dir(dir: &Path) {
    assert!(dir.join("config.txt").is_file(), "{}", dir.display());
    assert_eq!(read(&dir.join("trace.csv")).lines().next(), Some(TRACE_HEADER));
    let certs = read(&dir.join("certificates.csv"));
    assert!(certs.lines().count() >= 3, "{certs}");
}

#[test]
fn toy_writes_outputs_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["toy", "--set", "grid=4"];
    let oa = ipiano(&args, &a);
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(code(&ipiano(&args, &b)), 0);
    for beta in ["beta_0", "beta_0.75"] {
        assert_run_dir(&a.join(beta));
    }
    let basins = read(&a.join("basins.csv"));
    assert_eq!(basins.lines().count(), 1 + 2 * 16);
    for f in ["basins.csv", "summary.csv", "certificates.csv", "beta_0.75/trace.csv"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.cfg");
    fs::write(&cfg_path, "# toy settings\nbeta = 0.5\ngrid = 2\nmax_iters = 300\n").unwrap();
    let out = tmp.path().join("out");
    let o = ipiano(&["toy", "--config", cfg_path.to_str().unwrap(), "--beta", "0.25"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut resolved = RunConfig::defaults(Problem::Toy);
    resolved.apply(&parse_config_text(&read(&out.join("config.txt"))).unwrap()).unwrap();
    assert_eq!(resolved.beta, vec![0.25]);
    assert_eq!(resolved.grid, 2);
    assert_eq!(resolved.max_iters, 300);
    assert!(out.join("beta_0.25").is_dir());
}

#[test]
fn config_and_io_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(code(&ipiano(&["toy", "--beta", "1.0"], &out)), 2);
    assert_eq!(code(&ipiano(&["toy", "--rule", "fastest"], &out)), 2);
    assert_eq!(code(&ipiano(&["toy", "--set", "colour=red"], &out)), 2);
    let missing = tmp.path().join("missing.pgm");
    assert_eq!(code(&ipiano(&["denoise", "--input", missing.to_str().unwrap()], &out)), 2);
    let bad = tmp.path().join("missing.cfg");
    assert_eq!(code(&ipiano(&["toy", "--config", bad.to_str().unwrap()], &out)), 2);
}

#[test]
fn numerical_error_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ipiano(&["toy", "--rule", "lazy", "--set", "lipschitz_init=1e13"], tmp.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn certificate_failure_exits_1() {
    // A Lipschitz bound far below the true μ = 100 makes the step too long.
    let tmp = tempfile::tempdir().unwrap();
    let o = ipiano(
        &["toy", "--lambda", "0.01", "--max-iters", "500", "--set", "lipschitz=1", "--set", "grid=2"],
        tmp.path(),
    );
    assert_eq!(code(&o), 1);
    let certs = read(&tmp.path().join("certificates.csv"));
    assert!(certs.lines().any(|l| l.contains(",lyapunov,0,")), "{certs}");
}

#[test]
fn denoise_small_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ipiano(
        &[
            "denoise",
            "--beta",
            "0,0.8",
            "--max-iters",
            "200",
            "--tol",
            "10,1",
            "--set",
            "size=24",
            "--set",
            "reference_iters=200",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for beta in ["beta_0", "beta_0.8", "reference"] {
        assert_run_dir(&tmp.path().join(beta));
    }
    assert!(tmp.path().join("beta_0.8/denoised.pgm").is_file());
    assert!(tmp.path().join("noisy.pgm").is_file());
    let table = read(&tmp.path().join("table.csv"));
    assert_eq!(table.lines().next(), Some("beta,tol,iterations"));
    assert_eq!(table.lines().count(), 1 + 4);
}

#[test]
fn denoise_salt_and_pepper_l1() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ipiano(
        &[
            "denoise",
            "--data-term",
            "l1",
            "--sp-fraction",
            "0.1",
            "--beta",
            "0.8",
            "--max-iters",
            "100",
            "--set",
            "size=16",
            "--set",
            "reference_iters=100",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = read(&tmp.path().join("config.txt"));
    assert!(cfg.contains("data_term = l1") && cfg.contains("lambda = 0.5"), "{cfg}");
}

#[test]
fn inpaint_mask_small_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ipiano(&["inpaint-mask", "--max-iters", "100", "--set", "size=16"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("beta_0.8");
    assert_run_dir(&dir);
    for f in ["mask.pgm", "reconstruction.pgm", "mask.csv"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let summary = read(&tmp.path().join("summary.csv"));
    assert_eq!(
        summary.lines().next(),
        Some("beta,iterations,energy,density_percent,mse,random_mask_mse")
    );
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn emit_flags_suppress_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ipiano(
        &["inpaint-mask", "--max-iters", "20", "--set", "size=8", "--set", "emit_trace=false", "--set", "emit_images=false"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let dir = tmp.path().join("beta_0.8");
    assert!(!dir.join("trace.csv").exists());
    assert!(!dir.join("mask.pgm").exists());
    assert!(dir.join("certificates.csv").is_file());
}
