use std::fs;
use std::path::Path;

use deloc::{
    energy_profile, oracle_distance_series, run_krylov, run_sweep, OrthogonalizationMode,
    PotentialField, ShellProfile, SweepConfig,
};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{EnergyArgs, SweepArgs, VerifyArgs};
use crate::output::{
    energy_file_name, write_energy_csv, write_summary_csv, write_sweep_csv, RunManifest,
};
use crate::CliError;

fn resolve_threads(requested: Option<usize>) -> Result<usize, CliError> {
    match requested {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => Ok(t),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, CliError> {
    let config = SweepConfig {
        c_values: args.c_values()?,
        realizations: args.realizations,
        n: args.n,
        seed: args.seed,
        mode: args.mode.mode(),
        fit: args.fit()?,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let config = sweep_config(args)?;
    let threads = resolve_threads(args.threads)?;
    prepare_out_dir(&args.out_dir)?;

    let records = with_pool(threads, || run_sweep(&config))?
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let sweep_path = args.out_dir.join("sweep.csv");
    let summary_path = args.out_dir.join("summary.csv");
    write_sweep_csv(&sweep_path, &records)?;
    write_summary_csv(&summary_path, &records)?;

    let mut manifest = RunManifest::new("sweep", serde_json::to_value(&config)?, threads);
    manifest.add_file(&sweep_path)?;
    manifest.add_file(&summary_path)?;
    for rec in &records {
        for o in &rec.realizations {
            if let Some(reason) = &o.failure {
                manifest
                    .warnings
                    .push(format!("c = {}, realization {}: {reason}", rec.c, o.realization));
            }
        }
        if !rec.valid {
            manifest
                .warnings
                .push(format!("c = {}: every realization was degenerate", rec.c));
        }
    }
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    manifest.write(&args.out_dir)?;

    eprintln!(
        "{} disorder values x {} realizations, n = {}, mode {} -> {}",
        records.len(),
        config.realizations,
        config.n,
        config.mode,
        args.out_dir.display()
    );
    Ok(())
}

pub fn cmd_energy(args: &EnergyArgs) -> Result<(), CliError> {
    let c_values = args.c_values()?;
    let threads = resolve_threads(args.threads)?;
    let mode = args.mode.mode();
    prepare_out_dir(&args.out_dir)?;

    let profiles: Vec<ShellProfile> = with_pool(threads, || {
        c_values
            .par_iter()
            .map(|&c| energy_profile(&PotentialField::new(c, args.seed, args.realization), args.k, mode))
            .collect::<Result<Vec<_>, _>>()
    })?
    .map_err(|e| CliError::Verification(e.to_string()))?;

    let config = json!({
        "c_values": c_values,
        "k": args.k,
        "seed": args.seed,
        "realization": args.realization,
        "mode": mode,
    });
    let mut manifest = RunManifest::new("energy", config, threads);
    for profile in &profiles {
        let path = args.out_dir.join(energy_file_name(profile.disorder()));
        write_energy_csv(&path, profile)?;
        let entry = manifest.add_file(&path)?;
        entry.notes.insert("c".into(), json!(profile.disorder()));
        entry.notes.insert("energy_log2_scale".into(), json!(profile.log2_scale * 2));
        entry.notes.insert("drift".into(), json!(profile.drift));
        eprintln!(
            "c = {}: peak shell {} of {}, outermost fraction {:.4}",
            profile.disorder(),
            profile.peak_shell(),
            profile.k,
            profile.outermost() / profile.total
        );
    }
    manifest.write(&args.out_dir)?;
    Ok(())
}

/// Largest `|D_k(engine) - D_k(oracle)|` for one field.
pub fn oracle_discrepancy(field: &PotentialField, n: usize) -> Result<f64, CliError> {
    let engine = run_krylov(field, n, OrthogonalizationMode::FullGramSchmidt)
        .map_err(|e| CliError::Verification(e.to_string()))?;
    let oracle = oracle_distance_series(field, n, n + 1).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(engine
        .distances()
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    args.validate()?;
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    for &c in &args.c_list {
        for seed in 1..=args.seeds {
            let field = PotentialField::new(c, seed, 0);
            let d = oracle_discrepancy(&field, args.n)?;
            let ok = d <= args.tolerance;
            if !ok {
                failures += 1;
            }
            worst = worst.max(d);
            println!(
                "c={c} seed={seed} n={} max|dD|={d:.3e} {}",
                args.n,
                if ok { "ok" } else { "FAIL" }
            );
        }
    }
    println!("max discrepancy {worst:.3e} (tolerance {:.1e})", args.tolerance);
    if failures > 0 {
        return Err(CliError::Verification(format!(
            "{failures} case(s) exceeded tolerance {:e}",
            args.tolerance
        )));
    }
    Ok(())
}
