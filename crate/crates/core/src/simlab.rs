//! Data generators and size/power studies: data from the linear SEM (H0),
//! entrywise nonlinear distortions (A1) and an extra, scaled latent
//! confounder (A2), with Gamma or Gaussian sources.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::cumulants::{gamma_cumulants, gaussian_cumulants, SemModel};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::{derive_seed, par_map, stream_rng};
use crate::gof::{check_supported, gof_test, Decision, GofConfig, Method};

/// Redraws of a singular `I - Λ` tolerated before giving up.
pub const MAX_REDRAWS: usize = 100;

/// Highest source cumulant order kept with a drawn model.
const SOURCE_ORDERS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    /// Shape `U[2,3]`, rate `U[1,5]`, centered.
    Gamma,
    /// Standard deviation `U[1/2, 2]`.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alternative {
    H0,
    A1,
    A2,
}

impl Alternative {
    pub fn as_str(&self) -> &'static str {
        match self {
            Alternative::H0 => "h0",
            Alternative::A1 => "a1",
            Alternative::A2 => "a2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SourceLaw {
    Gamma { shape: f64, rate: f64 },
    Gaussian { sd: f64 },
}

impl SourceLaw {
    pub fn draw(family: NoiseFamily, rng: &mut impl Rng) -> Self {
        match family {
            NoiseFamily::Gamma => SourceLaw::Gamma {
                shape: rng.random_range(2.0..=3.0),
                rate: rng.random_range(1.0..=5.0),
            },
            NoiseFamily::Gaussian => SourceLaw::Gaussian {
                sd: rng.random_range(0.5..=2.0),
            },
        }
    }

    /// Cumulants of orders `2..=max_order`.
    pub fn cumulants(&self, max_order: usize) -> Result<Vec<f64>> {
        match *self {
            SourceLaw::Gamma { shape, rate } => gamma_cumulants(shape, rate, max_order),
            SourceLaw::Gaussian { sd } => Ok(gaussian_cumulants(sd, max_order)),
        }
    }

    /// `n` centered draws.
    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<f64> {
        match *self {
            SourceLaw::Gamma { shape, rate } => {
                let g = Gamma::new(shape, 1.0 / rate).expect("valid gamma parameters");
                let mean = shape / rate;
                (0..n).map(|_| g.sample(rng) - mean).collect()
            }
            SourceLaw::Gaussian { sd } => {
                let g = Normal::new(0.0, sd).expect("valid normal parameters");
                (0..n).map(|_| g.sample(rng)).collect()
            }
        }
    }
}

/// A random SEM together with its source laws. Sources are ordered as
/// `(L_1..L_l, ε_1..ε_p)`.
#[derive(Debug, Clone)]
pub struct ModelDraw {
    pub model: SemModel,
    pub laws: Vec<SourceLaw>,
    /// Number of singular `I - Λ` draws discarded on the way.
    pub redraws: usize,
}

impl ModelDraw {
    /// `n × (l + p)` matrix of independent centered sources.
    pub fn sample_sources(&self, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let mut eta = DMatrix::zeros(n, self.laws.len());
        for (j, law) in self.laws.iter().enumerate() {
            eta.column_mut(j).copy_from_slice(&law.sample(n, rng));
        }
        eta
    }

    pub fn mix(&self, sources: &DMatrix<f64>) -> Result<DataMatrix> {
        DataMatrix::new(sources * self.model.mixing_matrix().transpose())
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<DataMatrix> {
        let eta = self.sample_sources(n, rng);
        self.mix(&eta)
    }

    /// Same draw with the last confounder's coefficient row multiplied by `factor`.
    pub fn scale_last_confounder(&self, factor: f64) -> Result<ModelDraw> {
        let l = self.model.l();
        if l == 0 {
            return Err(Error::InvalidArgument("the model has no latent confounder".into()));
        }
        let mut gamma = self.model.gamma().clone();
        gamma.row_mut(l - 1).scale_mut(factor);
        let cums = self
            .laws
            .iter()
            .map(|law| law.cumulants(SOURCE_ORDERS))
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelDraw {
            model: SemModel::new(self.model.lambda().clone(), gamma, cums)?,
            laws: self.laws.clone(),
            redraws: self.redraws,
        })
    }
}

/// Coefficients uniform on `[-1, 1]`, `Λ` with zero diagonal; redrawn while
/// `I - Λ` is singular.
pub fn draw_model(p: usize, l: usize, noise: NoiseFamily, rng: &mut impl Rng) -> Result<ModelDraw> {
    let laws: Vec<SourceLaw> = (0..l + p).map(|_| SourceLaw::draw(noise, rng)).collect();
    let cums = laws
        .iter()
        .map(|law| law.cumulants(SOURCE_ORDERS))
        .collect::<Result<Vec<_>>>()?;
    let gamma = DMatrix::from_fn(l, p, |_, _| rng.random_range(-1.0..=1.0));
    for redraws in 0..=MAX_REDRAWS {
        let lambda = DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { rng.random_range(-1.0..=1.0) });
        match SemModel::new(lambda, gamma.clone(), cums.clone()) {
            Ok(model) => return Ok(ModelDraw { model, laws, redraws }),
            Err(Error::Numerical(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numerical(format!("I - Lambda was singular in {} consecutive draws", MAX_REDRAWS + 1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub p: usize,
    /// Confounders in the generating model (`l_tested + 1` under A2).
    pub l_true: usize,
    pub l_tested: usize,
    pub n: usize,
    pub replications: usize,
    pub alternative: Alternative,
    pub deltas: Vec<f64>,
    pub noise: NoiseFamily,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            p: 2,
            l_true: 0,
            l_tested: 0,
            n: 1000,
            replications: 200,
            alternative: Alternative::A1,
            deltas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            noise: NoiseFamily::Gamma,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidArgument(format!("{field}: {msg}")));
        if self.p < 2 {
            return bad("p", format!("need at least 2 variables, got {}", self.p));
        }
        if self.n < 10 {
            return bad("n", format!("need at least 10 observations, got {}", self.n));
        }
        if self.replications == 0 {
            return bad("replications", "must be at least 1".into());
        }
        let expected_l = match self.alternative {
            Alternative::A2 => self.l_tested + 1,
            _ => self.l_tested,
        };
        if self.l_true != expected_l {
            return bad(
                "l_true",
                format!("must be {expected_l} for alternative {}", self.alternative.as_str()),
            );
        }
        let range = match self.alternative {
            Alternative::H0 => 0.0..=0.0,
            Alternative::A1 => 0.0..=1.0,
            Alternative::A2 => 0.0..=5.0,
        };
        if self.alternative != Alternative::H0 && self.deltas.is_empty() {
            return bad("deltas", "at least one delta is needed".into());
        }
        if let Some(d) = self.deltas.iter().find(|d| !range.contains(*d)) {
            if self.alternative != Alternative::H0 {
                return bad(
                    "deltas",
                    format!("delta {d} outside [{}, {}] for {}", range.start(), range.end(), self.alternative.as_str()),
                );
            }
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        match self.alternative {
            Alternative::H0 => vec![0.0],
            _ => self.deltas.clone(),
        }
    }
}

/// H0 data set from a freshly drawn model with `config.l_true` confounders.
pub fn generate_h0(config: &SimConfig, seed: u64) -> Result<DataMatrix> {
    let mut rng = stream_rng(seed, 0);
    let draw = draw_model(config.p, config.l_true, config.noise, &mut rng)?;
    draw.sample(config.n, &mut rng)
}

/// `x ↦ (1 - δ) x + δ cos x`, entrywise.
pub fn apply_a1(data: &DataMatrix, delta: f64) -> Result<DataMatrix> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must lie in [0, 1], got {delta}")));
    }
    if delta == 0.0 {
        return Ok(data.clone());
    }
    data.map(|x| (1.0 - delta) * x + delta * x.cos())
}

/// Data with `l_tested + 1` confounders, the last one scaled by `delta`.
pub fn generate_a2(config: &SimConfig, delta: f64, seed: u64) -> Result<DataMatrix> {
    if !(0.0..=5.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must lie in [0, 5], got {delta}")));
    }
    let mut rng = stream_rng(seed, 0);
    let draw = draw_model(config.p, config.l_tested + 1, config.noise, &mut rng)?;
    draw.scale_last_confounder(delta)?.sample(config.n, &mut rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub delta: f64,
    pub rejections: usize,
    /// Replications that produced a result.
    pub reps: usize,
    pub failures: usize,
    pub rate: f64,
    pub se: f64,
}

impl PowerPoint {
    fn new(delta: f64, rejections: usize, reps: usize, failures: usize) -> Self {
        let rate = if reps > 0 { rejections as f64 / reps as f64 } else { f64::NAN };
        PowerPoint {
            delta,
            rejections,
            reps,
            failures,
            rate,
            se: (rate * (1.0 - rate) / reps as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub method: Method,
    pub points: Vec<PowerPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: SimConfig,
    pub tests: Vec<GofConfig>,
    pub curves: Vec<PowerCurve>,
    /// Total singular-model redraws across replications.
    pub redraws: usize,
    /// First error message per failing (method, delta), if any.
    pub errors: Vec<String>,
}

#[derive(Clone, Copy)]
enum Outcome {
    Reject,
    Accept,
    Failed,
}

/// Runs every test configuration on every replication and delta. Each
/// replication draws a new model; the deltas of one replication share it
/// and its source sample.
pub fn run_study(sim: &SimConfig, tests: &[GofConfig]) -> Result<StudyResult> {
    sim.validate()?;
    if tests.is_empty() {
        return Err(Error::InvalidArgument("tests: at least one test configuration is needed".into()));
    }
    for t in tests {
        t.validate()?;
        check_supported(sim.p, sim.l_tested, t.method)?;
    }
    let grid = sim.grid();
    let per_rep = par_map(sim.replications, |rep| -> Result<(usize, Vec<Vec<(Outcome, Option<String>)>>)> {
        let rep_seed = derive_seed(sim.seed, rep as u64);
        let mut rng = stream_rng(rep_seed, 0);
        let draw = draw_model(sim.p, sim.l_true, sim.noise, &mut rng)?;
        let eta = draw.sample_sources(sim.n, &mut rng);
        let base = draw.mix(&eta)?;
        let mut outcomes = Vec::with_capacity(grid.len());
        for &delta in &grid {
            let data = match sim.alternative {
                Alternative::H0 => base.clone(),
                Alternative::A1 => apply_a1(&base, delta)?,
                Alternative::A2 => draw.scale_last_confounder(delta)?.mix(&eta)?,
            };
            let row = tests
                .iter()
                .enumerate()
                .map(|(t, cfg)| {
                    let cfg = GofConfig {
                        l: sim.l_tested,
                        seed: derive_seed(rep_seed, 100 + t as u64),
                        ..*cfg
                    };
                    match gof_test(&data, &cfg) {
                        Ok(r) if r.decision == Decision::Reject => (Outcome::Reject, None),
                        Ok(_) => (Outcome::Accept, None),
                        Err(e) => (Outcome::Failed, Some(e.to_string())),
                    }
                })
                .collect();
            outcomes.push(row);
        }
        Ok((draw.redraws, outcomes))
    });
    let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;

    let mut errors = Vec::new();
    let mut curves = Vec::with_capacity(tests.len());
    for (t, cfg) in tests.iter().enumerate() {
        let method = cfg.method.unwrap_or_else(|| Method::default_for(sim.p));
        let mut points = Vec::with_capacity(grid.len());
        for (d, &delta) in grid.iter().enumerate() {
            let (mut rej, mut ok, mut failed) = (0, 0, 0);
            let mut first_error = None;
            for (_, outcomes) in &per_rep {
                match outcomes[d][t].0 {
                    Outcome::Reject => {
                        rej += 1;
                        ok += 1;
                    }
                    Outcome::Accept => ok += 1,
                    Outcome::Failed => {
                        failed += 1;
                        first_error = first_error.or(outcomes[d][t].1.clone());
                    }
                }
            }
            if let Some(e) = first_error {
                errors.push(format!("{method} at delta {delta}: {failed} failure(s), first: {e}"));
            }
            points.push(PowerPoint::new(delta, rej, ok, failed));
        }
        curves.push(PowerCurve { method, points });
    }
    Ok(StudyResult {
        config: sim.clone(),
        tests: tests.to_vec(),
        curves,
        redraws: per_rep.iter().map(|(r, _)| r).sum(),
        errors,
    })
}

/// Header of the study CSV.
pub const CSV_HEADER: &str = "method,p,l,n,delta,alternative,rejections,reps,rate,se,seed";

impl StudyResult {
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for curve in &self.curves {
            for pt in &curve.points {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    curve.method,
                    c.p,
                    c.l_tested,
                    c.n,
                    pt.delta,
                    c.alternative.as_str(),
                    pt.rejections,
                    pt.reps,
                    pt.rate,
                    pt.se,
                    c.seed
                )
                .expect("writing to a string");
            }
        }
        out
    }

    /// Configuration echo and diagnostics written next to the CSV.
    pub fn manifest(&self) -> serde_json::Value {
        serde_json::json!({
            "library_version": env!("CARGO_PKG_VERSION"),
            "sim": self.config,
            "tests": self.tests,
            "model_parameters": "redrawn per replication",
            "singular_redraws": self.redraws,
            "errors": self.errors,
            "curves": self.curves,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::plan_conditions;
    use crate::cumulants::sample_cumulant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sim(alternative: Alternative, l: usize) -> SimConfig {
        SimConfig {
            l_true: if alternative == Alternative::A2 { l + 1 } else { l },
            l_tested: l,
            alternative,
            n: 300,
            replications: 3,
            ..SimConfig::default()
        }
    }

    fn quick_cr() -> GofConfig {
        let mut c = GofConfig::new(0, Method::CrOnly);
        c.cr.bootstrap_reps = 100;
        c.cr.mc_draws = 10_000;
        c
    }

    #[test]
    fn a1_transform() {
        let d = DataMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, -1.0]]).unwrap();
        assert_eq!(apply_a1(&d, 0.0).unwrap(), d);
        let one = apply_a1(&d, 1.0).unwrap();
        assert_eq!(one.values()[(1, 0)], 2.0f64.cos());
        assert_eq!(apply_a1(&d, 0.5).unwrap().values()[(0, 0)], 0.5);
        assert!(apply_a1(&d, 1.5).is_err());
    }

    #[test]
    fn independent_sources_have_small_cross_cumulants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut draw = draw_model(3, 0, NoiseFamily::Gamma, &mut rng).unwrap();
        let cums = draw.laws.iter().map(|l| l.cumulants(6)).collect::<Result<Vec<_>>>().unwrap();
        draw.model = SemModel::new(DMatrix::zeros(3, 3), DMatrix::zeros(0, 3), cums).unwrap();
        let data = draw.sample(100_000, &mut rng).unwrap();
        let c3 = sample_cumulant(&data, 3).unwrap();
        for idx in c3.multi_indices() {
            if !(idx[0] == idx[1] && idx[1] == idx[2]) {
                assert!(c3.get(&idx).abs() < 0.02, "{idx:?}: {}", c3.get(&idx));
            }
        }
        assert!(c3.get(&[0, 0, 0]) > 0.05);
    }

    #[test]
    fn population_rank_under_h0() {
        for (p, l) in [(2usize, 0usize), (2, 1)] {
            let mut rng = ChaCha8Rng::seed_from_u64(2 + l as u64);
            let draw = draw_model(p, l, NoiseFamily::Gamma, &mut rng).unwrap();
            let plan = plan_conditions(p, l).unwrap();
            let cums = draw.model.population_cumulants(&plan.cumulant_orders).unwrap();
            assert!(plan.condition_a.check(&cums, 1e-10).unwrap().holds);
        }
    }

    #[test]
    fn a2_breaks_population_rank() {
        let plan = plan_conditions(2, 0).unwrap();
        let full = (0..20)
            .filter(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(100 + s);
                let draw = draw_model(2, 1, NoiseFamily::Gamma, &mut rng).unwrap();
                let scaled = draw.scale_last_confounder(5.0).unwrap();
                let cums = scaled.model.population_cumulants(&plan.cumulant_orders).unwrap();
                plan.condition_a.check(&cums, 1e-4).unwrap().value > 1e-4
            })
            .count();
        assert!(full > 10, "{full} of 20");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draw = draw_model(2, 1, NoiseFamily::Gamma, &mut rng).unwrap();
        let zero = draw.scale_last_confounder(0.0).unwrap();
        let cums = zero.model.population_cumulants(&plan.cumulant_orders).unwrap();
        assert!(plan.condition_a.check(&cums, 1e-10).unwrap().holds);
    }

    #[test]
    fn a2_covariance_is_quadratic_in_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draw = draw_model(2, 1, NoiseFamily::Gamma, &mut rng).unwrap();
        let c = |d: f64| draw.scale_last_confounder(d).unwrap().model.population_cumulant(2).unwrap();
        let (c0, c1, c2) = (c(0.0), c(1.0), c(2.0));
        for idx in c0.multi_indices() {
            let extra1 = c1.get(&idx) - c0.get(&idx);
            let extra2 = c2.get(&idx) - c0.get(&idx);
            assert!((extra2 - 4.0 * extra1).abs() < 1e-12 * (1.0 + extra2.abs()));
        }
    }

    #[test]
    fn gaussian_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draw = draw_model(2, 0, NoiseFamily::Gaussian, &mut rng).unwrap();
        for law in &draw.laws {
            let SourceLaw::Gaussian { sd } = law else { panic!() };
            assert!((0.5..=2.0).contains(sd));
        }
        assert_eq!(draw.model.source_cumulant(0, 3), Some(0.0));
    }

    #[test]
    fn config_validation() {
        let mut c = sim(Alternative::A1, 0);
        c.deltas = vec![0.0, 2.0];
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("delta"), "{err}");
        let mut c = sim(Alternative::A2, 1);
        c.l_true = 1;
        assert!(c.validate().unwrap_err().to_string().contains("l_true"));
        let mut c = sim(Alternative::H0, 0);
        c.replications = 0;
        assert!(c.validate().is_err());
        let c: std::result::Result<SimConfig, _> = serde_json::from_str(r#"{"p": 2, "bogus": 1}"#);
        assert!(c.is_err());
    }

    #[test]
    fn study_is_reproducible() {
        let config = sim(Alternative::A1, 0);
        let a = run_study(&config, &[quick_cr()]).unwrap();
        let b = run_study(&config, &[quick_cr()]).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + config.deltas.len());
        assert!(lines[1].starts_with("cr_only,2,0,300,0,a1,"));
        for pt in &a.curves[0].points {
            assert!((0.0..=1.0).contains(&pt.rate));
            assert_eq!(pt.reps + pt.failures, 3);
        }
        assert_eq!(a.manifest()["model_parameters"], "redrawn per replication");
    }

    #[test]
    fn a2_study_runs() {
        let mut config = sim(Alternative::A2, 0);
        config.deltas = vec![0.0, 5.0];
        config.replications = 2;
        let res = run_study(&config, &[quick_cr()]).unwrap();
        assert_eq!(res.curves[0].points.len(), 2);
    }
}
