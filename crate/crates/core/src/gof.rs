//! Combined goodness-of-fit procedures for a model with `l` latent confounders.
//!
//! * [`Method::CrOnly`]: CR test of the M-matrix rank bound alone.
//! * [`Method::CrPlusSecond`]: that test together with a test of the second
//!   condition, combined by Bonferroni (p-value doubling).
//! * [`Method::UstatAll`]: one incomplete U-statistic test of all vanishing
//!   minors and the polynomial second condition (`l = 0`, `p ∈ {2, 3}`).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::combinatorics::multichoose;
use crate::constraints::{plan_conditions, Condition, ConditionPlan, ConditionSummary};
use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::exec::derive_seed;
use crate::poly_test::{ustat_test, UTestResult, UstatConfig, UstatScope};
use crate::rank_test::{cr_test, CrConfig, CrResult, CumulantMatrixBuilder};

/// Largest number of matrix entries accepted for a CR test of the second condition.
pub const MAX_CR_ENTRIES: usize = 250_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CrOnly,
    CrPlusSecond,
    UstatAll,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::CrOnly, Method::CrPlusSecond, Method::UstatAll];

    /// CR only for `p ≥ 4`, CR plus second condition otherwise.
    pub fn default_for(p: usize) -> Method {
        if p >= 4 {
            Method::CrOnly
        } else {
            Method::CrPlusSecond
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::CrOnly => "cr_only",
            Method::CrPlusSecond => "cr_plus_second",
            Method::UstatAll => "ustat_all",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cr_only" | "cr" | "i" => Ok(Method::CrOnly),
            "cr_plus_second" | "ii" => Ok(Method::CrPlusSecond),
            "ustat_all" | "ustat" | "iii" => Ok(Method::UstatAll),
            _ => Err(Error::InvalidArgument(format!(
                "unknown method '{s}' (expected cr_only, cr_plus_second or ustat_all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GofConfig {
    pub l: usize,
    /// `None` picks [`Method::default_for`].
    pub method: Option<Method>,
    pub alpha: f64,
    /// Master seed; the seeds of the sub-configurations are derived from it.
    pub seed: u64,
    /// Work with unit-variance cumulants / data.
    pub standardize: bool,
    pub cr: CrConfig,
    pub ustat: UstatConfig,
}

impl Default for GofConfig {
    fn default() -> Self {
        GofConfig {
            l: 0,
            method: None,
            alpha: 0.05,
            seed: 0,
            standardize: true,
            cr: CrConfig::default(),
            ustat: UstatConfig::default(),
        }
    }
}

impl GofConfig {
    pub fn new(l: usize, method: Method) -> Self {
        GofConfig {
            l,
            method: Some(method),
            ..GofConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        self.cr.validate()?;
        self.ustat.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Accept,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Reject => "REJECT",
            Decision::Accept => "ACCEPT",
        })
    }
}

/// Result of one sub-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum SubTest {
    Cr(CrResult),
    Ustat(UTestResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    #[serde(flatten)]
    pub summary: ConditionSummary,
    pub statistic: f64,
    pub p_value: f64,
    /// Level at which this sub-test is judged (α, or α/2 under Bonferroni).
    pub level: f64,
    pub details: SubTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub p_value: f64,
    pub decision: Decision,
    pub alpha: f64,
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub l: usize,
    pub conditions: Vec<ConditionResult>,
    pub plan: ConditionPlan,
    pub seed: u64,
    pub timings_ms: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Number of distinct cumulant entries the plan estimates.
pub fn cumulant_entry_count(plan: &ConditionPlan) -> usize {
    plan.cumulant_orders.iter().map(|&k| multichoose(plan.p, k) as usize).sum()
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn run_cr(
    data: &DataMatrix,
    condition: &Condition,
    config: &GofConfig,
    stream: u64,
    level: f64,
) -> Result<ConditionResult> {
    let Condition::Rank { matrix, bound } = condition else {
        unreachable!("CR tests only apply to rank conditions")
    };
    let builder = CumulantMatrixBuilder {
        matrix: *matrix,
        standardize: config.standardize,
    };
    let cr = CrConfig {
        seed: derive_seed(config.seed, stream),
        ..config.cr
    };
    let res = cr_test(data, &builder, *bound, &cr)?;
    Ok(ConditionResult {
        summary: condition.summary(),
        statistic: res.statistic,
        p_value: res.p_value,
        level,
        details: SubTest::Cr(res),
    })
}

fn run_ustat(
    data: &DataMatrix,
    plan: &ConditionPlan,
    scope: UstatScope,
    config: &GofConfig,
    level: f64,
) -> Result<ConditionResult> {
    let prepared = if config.standardize { data.standardized()? } else { data.centered() };
    let ustat = UstatConfig {
        seed: derive_seed(config.seed, 3),
        ..config.ustat
    };
    let res = ustat_test(&prepared, plan, scope, &ustat)?;
    let summary = match scope {
        UstatScope::SecondOnly => plan.condition_b.summary(),
        UstatScope::Joint => ConditionSummary {
            condition: format!("{} and {}", plan.condition_a, plan.condition_b),
            matrix_orders: plan.cumulant_orders.clone(),
            rank_bound: plan.condition_a.rank_bound(),
        },
    };
    Ok(ConditionResult {
        summary,
        statistic: res.max_statistic,
        p_value: res.p_value,
        level,
        details: SubTest::Ustat(res),
    })
}

/// Checks that `(p, l)` has a plan and that `method` applies to it.
pub fn check_supported(p: usize, l: usize, method: Option<Method>) -> Result<(ConditionPlan, Method)> {
    let plan = plan_conditions(p, l)?;
    let method = method.unwrap_or_else(|| Method::default_for(p));
    if method == Method::UstatAll && (l != 0 || !(2..=3).contains(&p)) {
        return Err(Error::Unsupported {
            p,
            l,
            reason: "the joint U-statistic test needs l = 0 and p in {2, 3}".into(),
        });
    }
    if method == Method::CrPlusSecond {
        if let Condition::Rank { matrix, .. } = &plan.condition_b {
            let (r, c) = matrix.shape(p);
            if r * c > MAX_CR_ENTRIES {
                return Err(Error::Unsupported {
                    p,
                    l,
                    reason: format!("{matrix} is {r} x {c}, too large for a CR test; use cr_only"),
                });
            }
        }
    }
    Ok((plan, method))
}

/// Tests the linear non-Gaussian model with `config.l` latent confounders.
pub fn gof_test(data: &DataMatrix, config: &GofConfig) -> Result<GofResult> {
    config.validate()?;
    let total = Instant::now();
    let (n, p, l) = (data.n(), data.p(), config.l);
    let (plan, method) = check_supported(p, l, config.method)?;

    let mut warnings = Vec::new();
    let entries = cumulant_entry_count(&plan);
    if n < 10 * entries {
        warnings.push(format!(
            "n = {n} is below 10 times the {entries} estimated cumulant entries; results may be unreliable"
        ));
    }
    let mut timings = BTreeMap::new();
    let alpha = config.alpha;
    let (conditions, p_value) = match method {
        Method::CrOnly => {
            let start = Instant::now();
            let a = run_cr(data, &plan.condition_a, config, 1, alpha)?;
            timings.insert("condition_a".into(), ms(start));
            let pv = a.p_value;
            (vec![a], pv)
        }
        Method::CrPlusSecond => {
            let start = Instant::now();
            let a = run_cr(data, &plan.condition_a, config, 1, alpha / 2.0)?;
            timings.insert("condition_a".into(), ms(start));
            let start = Instant::now();
            let b = if plan.condition_b.is_polynomial() {
                run_ustat(data, &plan, UstatScope::SecondOnly, config, alpha / 2.0)?
            } else {
                run_cr(data, &plan.condition_b, config, 2, alpha / 2.0)?
            };
            timings.insert("condition_b".into(), ms(start));
            let pv = (2.0 * a.p_value.min(b.p_value)).min(1.0);
            (vec![a, b], pv)
        }
        Method::UstatAll => {
            let start = Instant::now();
            let joint = run_ustat(data, &plan, UstatScope::Joint, config, alpha)?;
            timings.insert("joint".into(), ms(start));
            let pv = joint.p_value;
            (vec![joint], pv)
        }
    };
    for c in &conditions {
        match &c.details {
            SubTest::Cr(r) if r.degenerate => warnings.push(format!(
                "{}: all covariance eigenvalues vanished; the CR p-value is degenerate",
                c.summary.condition
            )),
            SubTest::Ustat(u) if !u.dropped.is_empty() => warnings.push(format!(
                "{}: {} constraint(s) with vanishing variance were dropped",
                c.summary.condition,
                u.dropped.len()
            )),
            _ => {}
        }
    }
    timings.insert("total".into(), ms(total));
    Ok(GofResult {
        p_value,
        decision: if p_value < alpha { Decision::Reject } else { Decision::Accept },
        alpha,
        method,
        n,
        p,
        l,
        conditions,
        plan,
        seed: config.seed,
        timings_ms: timings,
        warnings,
    })
}

/// Classes of the sequential accept/accept/reject rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairClass {
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "linear+confounder")]
    LinearConfounder,
    #[serde(rename = "nonlinear")]
    Nonlinear,
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairClass::Linear => "linear",
            PairClass::LinearConfounder => "linear+confounder",
            PairClass::Nonlinear => "nonlinear",
        })
    }
}

/// Accept `l = 0` gives linear; otherwise accept `l = 1` gives
/// linear+confounder; otherwise nonlinear.
pub fn classify(p_value_l0: f64, p_value_l1: Option<f64>, alpha: f64) -> PairClass {
    if p_value_l0 >= alpha {
        PairClass::Linear
    } else if p_value_l1.is_some_and(|p| p >= alpha) {
        PairClass::LinearConfounder
    } else {
        PairClass::Nonlinear
    }
}
