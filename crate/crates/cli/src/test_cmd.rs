use std::fmt::Write as _;
use std::fs;

use lingof::gof::{gof_test, GofConfig, GofResult};

use crate::error::{CliError, CliResult};
use crate::input::read_table;
use crate::TestArgs;

pub fn config_from(args: &TestArgs) -> GofConfig {
    let mut config = GofConfig {
        l: args.latents,
        method: args.method,
        alpha: args.alpha,
        seed: args.seed,
        standardize: !args.no_standardize,
        ..GofConfig::default()
    };
    if let Some(b) = args.bootstrap_reps {
        config.cr.bootstrap_reps = b;
    }
    if let Some(m) = args.mc_draws {
        config.cr.mc_draws = m;
    }
    if let Some(b) = args.budget {
        config.ustat.budget = Some(b);
    }
    if let Some(b) = args.ustat_reps {
        config.ustat.bootstrap_reps = b;
    }
    config
}

pub fn run(args: &TestArgs) -> CliResult<()> {
    let data = read_table(&args.file)?;
    let mut result = gof_test(&data, &config_from(args))?;
    if args.no_timings {
        result.timings_ms.clear();
    }
    let decision = decision_line(&result);
    if args.json || args.output.is_some() {
        let json = serde_json::to_string_pretty(&result).map_err(|e| CliError::Numerical(e.to_string()))? + "\n";
        match &args.output {
            Some(path) => {
                fs::write(path, json).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                println!("{decision}");
            }
            None => {
                print!("{json}");
                eprintln!("{decision}");
            }
        }
    } else {
        print!("{}", report(&result));
    }
    Ok(())
}

pub fn decision_line(r: &GofResult) -> String {
    format!("{} at alpha = {}", r.decision, r.alpha)
}

fn report(r: &GofResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n = {}, p = {}, l = {}, method = {}", r.n, r.p, r.l, r.method);
    for c in &r.conditions {
        let _ = writeln!(
            out,
            "  {}: statistic {:.4}, p-value {:.4} (level {})",
            c.summary.condition, c.statistic, c.p_value, c.level
        );
    }
    let _ = writeln!(out, "p-value = {:.4}", r.p_value);
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let _ = writeln!(out, "{}", decision_line(r));
    out
}
