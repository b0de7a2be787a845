use std::fs;
use std::path::Path;
use std::time::Instant;

use lingof::gof::{check_supported, GofConfig};
use lingof::simlab::{run_study, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::SimulateArgs;

/// Contents of a study configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    #[serde(default)]
    pub simulation: SimConfig,
    /// Test configurations; `l` and `seed` are set per replication.
    #[serde(default = "default_tests")]
    pub tests: Vec<GofConfig>,
}

fn default_tests() -> Vec<GofConfig> {
    vec![GofConfig::default()]
}

pub fn load(path: &Path) -> CliResult<StudyFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let study: StudyFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::input(format!("{}: field {field}: {}", path.display(), e.into_inner()))
    })?;
    study
        .simulation
        .validate()
        .map_err(|e| CliError::input(format!("{}: simulation.{}", path.display(), strip(&e))))?;
    if study.tests.is_empty() {
        return Err(CliError::input(format!("{}: tests: at least one test is needed", path.display())));
    }
    for (i, t) in study.tests.iter().enumerate() {
        t.validate()
            .map_err(|e| CliError::input(format!("{}: tests[{i}]: {}", path.display(), strip(&e))))?;
        check_supported(study.simulation.p, study.simulation.l_tested, t.method)?;
    }
    Ok(study)
}

fn strip(e: &lingof::Error) -> String {
    match e {
        lingof::Error::InvalidArgument(m) => m.clone(),
        other => other.to_string(),
    }
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let study = load(&args.config)?;
    let start = Instant::now();
    let result = run_study(&study.simulation, &study.tests)?;
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    let stem = args
        .config
        .file_stem()
        .map_or_else(|| "study".into(), |s| s.to_string_lossy().into_owned());
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::input(format!("{}: {e}", args.out_dir.display())))?;
    let csv_path = args.out_dir.join(format!("{stem}.csv"));
    let manifest_path = args.out_dir.join(format!("{stem}.manifest.json"));

    let mut manifest = result.manifest();
    let obj = manifest.as_object_mut().expect("manifest is an object");
    obj.insert("command".into(), "simulate".into());
    obj.insert("config_file".into(), args.config.display().to_string().into());
    obj.insert("seed".into(), study.simulation.seed.into());
    obj.insert("timings_ms".into(), serde_json::json!({ "total": elapsed }));
    let manifest = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Numerical(e.to_string()))? + "\n";

    let write = |path: &Path, text: &str| {
        fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    };
    write(&csv_path, &result.to_csv())?;
    write(&manifest_path, &manifest)?;
    for e in &result.errors {
        eprintln!("warning: {e}");
    }
    println!("{}", csv_path.display());
    println!("{}", manifest_path.display());
    Ok(())
}
