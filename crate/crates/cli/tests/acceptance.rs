//! Acceptance gate. One line per criterion; non-zero exit if any fails.
//!
//! Runs under `cargo test`; the desk-scale sweep (criterion 5) takes a couple
//! of minutes on a single core.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use deloc::estimate::{fit_intercept_values, FitConfig};
use deloc::krylov::run_process;
use deloc::{
    energy_profile, near_origin_fraction, oracle_distance_series, run_krylov, Hamiltonian,
    KrylovProcess, OrthogonalizationMode, PotentialField,
};
use deloc_cli::output::RunManifest;

type Check = Result<String, String>;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn require(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence() -> Check {
    let mut worst = 0.0f64;
    for c in [0.0, 0.5, 2.0] {
        for seed in 1..=5 {
            let field = PotentialField::new(c, seed, 0);
            let engine = run_krylov(&field, 25, OrthogonalizationMode::FullGramSchmidt).map_err(|e| e.to_string())?;
            let oracle = oracle_distance_series(&field, 25, 26).map_err(|e| e.to_string())?;
            worst = worst.max(max_diff(&engine.distances(), &oracle));
        }
    }
    require(worst <= 1e-9, format!("max |D_engine - D_oracle| = {worst:.2e} (tol 1e-9)"))
}

fn exactness_suite() -> Check {
    let mut worst_partial = 0.0f64;
    let mut worst_shell = 0.0f64;
    for case in 0..20u64 {
        // Low-discrepancy spread of disorders over [0, 4).
        let c = 4.0 * ((case as f64 * 0.618_033_988_749_895) % 1.0);
        let field = PotentialField::new(c, 1000 + 37 * case, case % 3);
        let mode = if case % 2 == 0 {
            OrthogonalizationMode::FullGramSchmidt
        } else {
            OrthogonalizationMode::recurrence()
        };
        let s = run_krylov(&field, 50, mode).map_err(|e| e.to_string())?;
        if s.terms[0].distance != 1.0 || s.terms[1].distance != 1.0 {
            return Err(format!("case {case}: D_0, D_1 = {}, {}", s.terms[0].distance, s.terms[1].distance));
        }
        if s.terms.windows(2).any(|w| w[1].distance > w[0].distance) {
            return Err(format!("case {case}: D_k increased"));
        }
        worst_partial = s.terms.iter().map(|t| t.partial_sum).fold(worst_partial, f64::max);

        let mut p = KrylovProcess::from_field(field, 50, mode);
        for _ in 0..50 {
            p.advance();
            let m = p.current().values();
            let total = m.squared_norm();
            let sum: f64 = m.shell_energies().iter().sum();
            worst_shell = worst_shell.max((sum - total).abs() / total);
        }
    }
    require(
        worst_partial <= 1.0 + 1e-9 && worst_shell <= 1e-10,
        format!(
            "20 cases, n = 50: D_0 = D_1 = 1, D_k monotone, max partial sum {worst_partial:.6}, \
             max shell-partition error {worst_shell:.1e}"
        ),
    )
}

fn shift_invariance() -> Check {
    let mut worst = 0.0f64;
    for c in [0.3, 1.0] {
        for seed in 1..=5 {
            let field = PotentialField::new(c, seed, 0);
            let run = |offset| {
                let h = Hamiltonian::with_diagonal_offset(field, 50, offset);
                run_process(KrylovProcess::new(h, OrthogonalizationMode::FullGramSchmidt), 50)
            };
            let a = run(4.0).map_err(|e| e.to_string())?;
            let b = run(0.0).map_err(|e| e.to_string())?;
            worst = worst.max(max_diff(&a.distances(), &b.distances()));
        }
    }
    require(worst <= 1e-8, format!("max |D(-Δ+V) - D(-Δ-4+V)| = {worst:.2e} (tol 1e-8)"))
}

fn mode_equivalence() -> Check {
    let mut worst = 0.0f64;
    for seed in 1..=5 {
        let field = PotentialField::new(1.0, seed, 0);
        let full = run_krylov(&field, 100, OrthogonalizationMode::FullGramSchmidt).map_err(|e| e.to_string())?;
        let rec = run_krylov(&field, 100, OrthogonalizationMode::recurrence_full_reorth()).map_err(|e| e.to_string())?;
        worst = worst.max(max_diff(&full.distances(), &rec.distances()));
    }
    require(worst <= 1e-8, format!("n = 100, c = 1, 5 seeds: max |ΔD| = {worst:.2e} (tol 1e-8)"))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn deloc() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_deloc"));
    cmd.env_remove("DELOC_THREADS");
    cmd
}

fn run_ok(cmd: &mut Command) -> Result<(), String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{:?}: {}", out.status, String::from_utf8_lossy(&out.stderr)))
    }
}

fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    r.records()
        .map(|rec| rec.map(|r| r.iter().map(String::from).collect()).map_err(|e| e.to_string()))
        .collect()
}

fn figure1_trend() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_ok(deloc().args([
        "sweep", "--c-min", "0.2", "--c-max", "3.0", "--c-step", "0.2", "--realizations", "20", "--n", "400",
        "--seed", "1", "--out-dir",
    ]).arg(dir.path()))?;
    let summary = read_csv(&dir.path().join("summary.csv"))?;
    let sweep_rows = read_csv(&dir.path().join("sweep.csv"))?.len();
    let parse = |row: &Vec<String>, i: usize| row[i].parse::<f64>().map_err(|e| e.to_string());
    let mut c = Vec::new();
    let mut min_y = Vec::new();
    let mut min_l = Vec::new();
    for row in &summary {
        c.push(parse(row, 0)?);
        min_y.push(parse(row, 1)?);
        min_l.push(parse(row, 2)?);
    }
    let first_above_last = min_y[0] > *min_y.last().unwrap();
    let small_c_positive_l = c.iter().zip(&min_l).filter(|(c, _)| **c <= 0.6 + 1e-12).all(|(_, l)| *l > 0.0);
    let rho = spearman(&c, &min_y);
    let l_small: Vec<String> = c
        .iter()
        .zip(&min_l)
        .filter(|(c, _)| **c <= 0.6 + 1e-12)
        .map(|(c, l)| format!("L({c})={l:.3}"))
        .collect();
    require(
        summary.len() == 15 && sweep_rows == 300 && first_above_last && small_c_positive_l && rho <= -0.8,
        format!(
            "{} c-values / {sweep_rows} runs; min_y(0.2) = {:.4} > min_y(3.0) = {:.4}; {}; Spearman(c, min_y) = {rho:.3} (need <= -0.8)",
            summary.len(),
            min_y[0],
            min_y.last().unwrap(),
            l_small.join(", ")
        ),
    )
}

fn figure2_trend() -> Check {
    let k = 200;
    let profile = |c| {
        energy_profile(&PotentialField::new(c, 5, 0), k, OrthogonalizationMode::FullGramSchmidt)
            .map_err(|e| e.to_string())
    };
    let weak = profile(0.1)?;
    let strong = profile(3.0)?;
    let fw = near_origin_fraction(&weak, 50).map_err(|e| e.to_string())?;
    let fs = near_origin_fraction(&strong, 50).map_err(|e| e.to_string())?;
    let peak = weak.peak_shell();
    require(
        fw < fs && peak > k / 2,
        format!(
            "k = 200: near-origin fraction (s <= 50) {fw:.3e} at c = 0.1 vs {fs:.3e} at c = 3.0; \
             energy peak at shell {peak} for c = 0.1 (need > {})",
            k / 2
        ),
    )
}

fn extrapolator_recovery() -> Check {
    let grid = FitConfig::default().gamma_grid;
    let series = |gamma: f64, noise: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..=400).map(|k| if k == 0 { 1.0 } else { 0.3 + 0.2 * (k as f64).powf(-gamma) + noise(k) }).collect()
    };
    let mut worst_exact = 0.0f64;
    let mut worst_noisy = 0.0f64;
    for gamma in [0.5, 1.0, 1.5] {
        for tail_start in [1, 200] {
            let fit = fit_intercept_values(&series(gamma, &|_| 0.0), &grid, tail_start).map_err(|e| e.to_string())?;
            if fit.gamma != gamma {
                return Err(format!("γ* = {gamma}: chose {}", fit.gamma));
            }
            worst_exact = worst_exact.max((fit.intercept_y - 0.3).abs());
            for seed in 0..10u64 {
                // Box–Muller from the counter-based site hash, σ = 1e-4.
                let field = PotentialField::new(1.0, seed, 77);
                let noise = |k: usize| {
                    let u1 = 0.5 * (1.0 + field.value(deloc::Site::new(k as i64, 0)));
                    let u2 = 0.5 * (1.0 + field.value(deloc::Site::new(k as i64, 1)));
                    1e-4 * (-2.0 * u1.max(1e-300).ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                };
                let fit = fit_intercept_values(&series(gamma, &noise), &grid, tail_start).map_err(|e| e.to_string())?;
                worst_noisy = worst_noisy.max((fit.intercept_y - 0.3).abs());
            }
        }
    }
    require(
        worst_exact <= 1e-9 && worst_noisy <= 0.01,
        format!("γ* ∈ {{0.5, 1, 1.5}} recovered exactly; intercept error {worst_exact:.1e} (tol 1e-9), noisy {worst_noisy:.1e} (tol 0.01)"),
    )
}

fn determinism() -> Check {
    let mut checksums = Vec::new();
    for threads in ["1", "8"] {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        run_ok(deloc().args([
            "sweep", "--c-list", "0.3,1.2,3.0", "--realizations", "8", "--n", "150", "--seed", "3", "--threads",
            threads, "--out-dir",
        ]).arg(dir.path()))?;
        let manifest = RunManifest::read(dir.path()).map_err(|e| e.to_string())?;
        let bad = manifest.verify(dir.path()).map_err(|e| e.to_string())?;
        if !bad.is_empty() {
            return Err(format!("manifest mismatch for {bad:?}"));
        }
        checksums.push(manifest.files.iter().map(|f| (f.name.clone(), f.sha256.clone())).collect::<Vec<_>>());
    }
    require(
        checksums[0] == checksums[1],
        format!("--threads 1 vs 8: {} files, checksums identical: {}", checksums[0].len(), checksums[0] == checksums[1]),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("exactness suite", exactness_suite),
        ("shift invariance", shift_invariance),
        ("mode equivalence", mode_equivalence),
        ("disorder-sweep trend", figure1_trend),
        ("shell-energy trend", figure2_trend),
        ("extrapolator recovery", extrapolator_recovery),
        ("determinism across threads", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match &result {
            Ok(detail) => println!("[PASS] {} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {} {name}: {detail} ({secs:.1}s)", i + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
