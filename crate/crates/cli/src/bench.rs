use std::time::Instant;

use lingof::gof::{check_supported, gof_test, GofConfig, Method};
use lingof::simlab::{generate_h0, Alternative, SimConfig};

use crate::error::{CliError, CliResult};
use crate::BenchArgs;

pub fn run(args: &BenchArgs) -> CliResult<()> {
    if args.reps == 0 {
        return Err(CliError::input("--reps must be at least 1"));
    }
    let methods = if args.methods.is_empty() {
        vec![Method::CrOnly]
    } else {
        args.methods.clone()
    };
    println!("method,p,n,reps,mean_ms,median_ms");
    for &method in &methods {
        for &p in &args.p {
            if let Err(e) = check_supported(p, 0, Some(method)) {
                eprintln!("skipping {method} at p = {p}: {e}");
                continue;
            }
            let sim = SimConfig {
                p,
                n: args.n,
                alternative: Alternative::H0,
                seed: args.seed,
                ..SimConfig::default()
            };
            let data = generate_h0(&sim, args.seed)?;
            let mut times = Vec::with_capacity(args.reps);
            for rep in 0..args.reps {
                let config = GofConfig {
                    seed: args.seed.wrapping_add(rep as u64),
                    ..GofConfig::new(0, method)
                };
                let start = Instant::now();
                gof_test(&data, &config)?;
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            times.sort_by(f64::total_cmp);
            let mid = times.len() / 2;
            let median = if times.len() % 2 == 1 {
                times[mid]
            } else {
                0.5 * (times[mid - 1] + times[mid])
            };
            println!("{method},{p},{},{},{mean:.3},{median:.3}", args.n, args.reps);
        }
    }
    Ok(())
}
