use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lingof::gof::{classify, gof_test, GofConfig};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::input::read_table;
use crate::BatchArgs;

pub const HEADER: [&str; 7] = ["file", "n", "p", "p_value_l0", "p_value_l1", "class", "error"];

#[derive(Debug, Default)]
struct Row {
    file: String,
    n: Option<usize>,
    p: Option<usize>,
    p_values: [Option<f64>; 2],
    class: String,
    error: String,
}

fn list_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| !p.is_dir())
        .filter(|p| !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.')))
        .collect();
    files.sort();
    Ok(files)
}

fn test_file(path: &Path, args: &BatchArgs) -> Row {
    let mut row = Row {
        file: path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        ..Row::default()
    };
    let data = match read_table(path) {
        Ok(d) => d,
        Err(e) => {
            row.class = "error".into();
            row.error = e.to_string();
            return row;
        }
    };
    row.n = Some(data.n());
    row.p = Some(data.p());
    for &l in &args.latents {
        let config = GofConfig {
            l,
            method: args.method,
            alpha: args.alpha,
            seed: args.seed,
            ..GofConfig::default()
        };
        match gof_test(&data, &config) {
            Ok(r) => row.p_values[l] = Some(r.p_value),
            Err(e) => {
                row.class = "error".into();
                row.error = format!("l = {l}: {e}");
                return row;
            }
        }
    }
    let p0 = row.p_values[0].expect("l = 0 is always tested");
    row.class = classify(p0, row.p_values[1], args.alpha).to_string();
    row
}

pub fn run(args: &BatchArgs) -> CliResult<()> {
    let mut latents = args.latents.clone();
    latents.sort_unstable();
    latents.dedup();
    if !latents.contains(&0) || latents.iter().any(|&l| l > 1) {
        return Err(CliError::input(format!(
            "--latents must be a subset of {{0, 1}} containing 0, got {:?}",
            args.latents
        )));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::input(format!("alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let args = BatchArgs { latents, ..args.clone() };
    let start = Instant::now();
    let files = list_files(&args.dir)?;
    let rows: Vec<Row> = files.par_iter().map(|f| test_file(f, &args)).collect();

    let mut out = csv::Writer::from_writer(Vec::new());
    let fmt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    let csv_err = |e: csv::Error| CliError::Numerical(e.to_string());
    out.write_record(HEADER).map_err(csv_err)?;
    for r in &rows {
        out.write_record([
            r.file.clone(),
            r.n.map_or_else(String::new, |v| v.to_string()),
            r.p.map_or_else(String::new, |v| v.to_string()),
            fmt(r.p_values[0]),
            fmt(r.p_values[1]),
            r.class.clone(),
            r.error.clone(),
        ])
        .map_err(csv_err)?;
    }
    let table = out.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
    match &args.output {
        Some(path) => fs::write(path, &table).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
        None => print!("{}", String::from_utf8_lossy(&table)),
    }
    for r in rows.iter().filter(|r| !r.error.is_empty()) {
        eprintln!("warning: {}: {}", r.file, r.error);
    }
    if let Some(path) = &args.manifest {
        let manifest = serde_json::json!({
            "command": "batch",
            "library_version": env!("CARGO_PKG_VERSION"),
            "config": {
                "dir": args.dir,
                "latents": args.latents,
                "alpha": args.alpha,
                "method": args.method,
                "seed": args.seed,
            },
            "seed": args.seed,
            "files": rows.len(),
            "failed": rows.iter().filter(|r| !r.error.is_empty()).count(),
            "timings_ms": { "total": start.elapsed().as_secs_f64() * 1e3 },
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Numerical(e.to_string()))? + "\n";
        fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}
