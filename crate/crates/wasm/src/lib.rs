//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; the plain functions behind them are
//! usable (and tested) natively.

use lingof::constraints::{plan_conditions, Condition};
use lingof::exec::stream_rng;
use lingof::gof::{gof_test, GofConfig, Method};
use lingof::simlab::{apply_a1, draw_model, Alternative, NoiseFamily, SimConfig};
use lingof::tensor::singular_values;
use lingof::{DataMatrix, Error, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse_alternative(s: &str) -> Result<Alternative> {
    match s {
        "h0" => Ok(Alternative::H0),
        "a1" => Ok(Alternative::A1),
        "a2" => Ok(Alternative::A2),
        _ => Err(Error::InvalidArgument(format!("unknown alternative '{s}'"))),
    }
}

/// Bivariate sample under H0 (no confounder), A1 (entrywise
/// `x ↦ (1 - δ) x + δ cos x`) or A2 (one confounder scaled by `δ`).
pub fn simulate(alternative: &str, delta: f64, n: usize, seed: u64) -> Result<Value> {
    let alternative = parse_alternative(alternative)?;
    let l_true = usize::from(alternative == Alternative::A2);
    let sim = SimConfig {
        p: 2,
        l_true,
        n,
        alternative,
        deltas: vec![delta],
        seed,
        ..SimConfig::default()
    };
    sim.validate()?;
    let mut rng = stream_rng(seed, 0);
    let draw = draw_model(2, l_true, NoiseFamily::Gamma, &mut rng)?;
    let eta = draw.sample_sources(n, &mut rng);
    let data = match alternative {
        Alternative::H0 => draw.mix(&eta)?,
        Alternative::A1 => apply_a1(&draw.mix(&eta)?, delta)?,
        Alternative::A2 => draw.scale_last_confounder(delta)?.mix(&eta)?,
    };
    let v = data.values();
    Ok(json!({
        "x": v.column(0).iter().collect::<Vec<_>>(),
        "y": v.column(1).iter().collect::<Vec<_>>(),
    }))
}

/// Goodness-of-fit test on a row-major table with `p` columns.
pub fn test_rows(values: &[f64], p: usize, l: usize, method: &str, alpha: f64, seed: u64) -> Result<Value> {
    if p == 0 || !values.len().is_multiple_of(p) {
        return Err(Error::InvalidData(format!("{} values do not fill rows of {p}", values.len())));
    }
    let data = DataMatrix::from_row_major(values.len() / p, p, values)?;
    let method = match method {
        "" | "default" => None,
        m => Some(m.parse::<Method>()?),
    };
    let config = GofConfig {
        l,
        method,
        alpha,
        seed,
        ..GofConfig::default()
    };
    let result = gof_test(&data, &config)?;
    serde_json::to_value(result).map_err(|e| Error::Numerical(e.to_string()))
}

/// Singular values of the `l = 0` rank-condition matrix built from the
/// population cumulants of a model with one confounder scaled by each `δ`.
pub fn a2_spectrum(deltas: &[f64], seed: u64) -> Result<Value> {
    let plan = plan_conditions(2, 0)?;
    let Condition::Rank { matrix, bound } = plan.condition_a else {
        return Err(Error::Numerical("expected a rank condition".into()));
    };
    let draw = draw_model(2, 1, NoiseFamily::Gamma, &mut stream_rng(seed, 0))?;
    let spectra = deltas
        .iter()
        .map(|&d| {
            let model = draw.scale_last_confounder(d)?.model;
            let cums = model.population_cumulants(&plan.cumulant_orders)?.standardized()?;
            Ok(singular_values(&matrix.build(&cums)?.data))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "matrix": matrix.to_string(),
        "rank_bound": bound,
        "deltas": deltas,
        "singular_values": spectra,
    }))
}

fn export(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(alternative: &str, delta: f64, n: usize, seed: u32) -> std::result::Result<String, JsError> {
    export(simulate(alternative, delta, n, seed.into()))
}

#[wasm_bindgen(js_name = testRows)]
pub fn test_rows_js(
    values: &[f64],
    p: usize,
    l: usize,
    method: &str,
    alpha: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    export(test_rows(values, p, l, method, alpha, seed.into()))
}

#[wasm_bindgen(js_name = a2Spectrum)]
pub fn a2_spectrum_js(deltas: &[f64], seed: u32) -> std::result::Result<String, JsError> {
    export(a2_spectrum(deltas, seed.into()))
}
