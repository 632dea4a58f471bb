//! Browser bindings for the closed-loop simulator and the fuzzy gain
//! scheduler. Build with `wasm-pack build --target web` (or cargo +
//! wasm-bindgen-cli) and serve the `www/` directory.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use fuzzy_l1::fuzzy::{FuzzyGainTuner, OUTPUT_UNIVERSE};
use fuzzy_l1::integrate::TimeGrid;
use fuzzy_l1::l1::{simulate_with_config, ConstantGain, GainSource, L1Config};
use fuzzy_l1::plant::{PlantScenario, ScenarioKind};
use fuzzy_l1::tuned::default_output_set;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn scenario_from(name: &str) -> Result<PlantScenario, JsValue> {
    let kind = match name {
        "case1" => ScenarioKind::Case1,
        "case2" => ScenarioKind::Case2,
        "case3" => ScenarioKind::Case3,
        _ => return Err(err("scenario must be case1, case2, or case3")),
    };
    Ok(PlantScenario::new(kind))
}

fn default_tuner(scenario: &PlantScenario) -> Result<FuzzyGainTuner, JsValue> {
    FuzzyGainTuner::new(
        scenario.k_p,
        scenario.k_d,
        scenario.k_e,
        scenario.k_const,
        default_output_set(),
    )
    .map_err(err)
}

#[derive(Serialize)]
struct SimOut {
    t: Vec<f64>,
    r: Vec<f64>,
    y: Vec<f64>,
    u: Vec<f64>,
    k_f: Vec<f64>,
    diverged: bool,
    t_fail: Option<f64>,
}

/// Closed-loop rollout under a cosine reference. `mode` is "constant" or
/// "fuzzy"; the trajectory is truncated at the divergence point if the
/// state leaves the admissible region.
#[wasm_bindgen]
pub fn simulate(scenario: &str, mode: &str, duration: f64) -> Result<JsValue, JsValue> {
    let scenario = scenario_from(scenario)?;
    let cfg = L1Config::from_scenario(&scenario).map_err(err)?;
    let grid = TimeGrid::new(0.0, duration, 0.01).map_err(err)?;
    let gain: Box<dyn GainSource> = match mode {
        "constant" => Box::new(ConstantGain(scenario.k_const)),
        "fuzzy" => Box::new(default_tuner(&scenario)?),
        _ => return Err(err("mode must be constant or fuzzy")),
    };
    let outcome = simulate_with_config(&scenario, &cfg, gain.as_ref(), &grid, |t| {
        (0.5 * t).cos()
    })
    .map_err(err)?;

    let recs = &outcome.trajectory.records;
    let out = SimOut {
        t: recs.iter().map(|r| r.t).collect(),
        r: recs.iter().map(|r| r.r).collect(),
        y: recs.iter().map(|r| r.y).collect(),
        u: recs.iter().map(|r| r.u).collect(),
        k_f: recs.iter().map(|r| r.k_f).collect(),
        diverged: outcome.diverged.is_some(),
        t_fail: outcome.diverged,
    };
    serde_wasm_bindgen::to_value(&out).map_err(err)
}

#[derive(Serialize)]
struct SurfaceOut {
    e_norm: Vec<f64>,
    de_norm: Vec<f64>,
    /// Row-major, k[i * n + j] for (e_norm[i], de_norm[j]).
    k: Vec<f64>,
}

/// Scheduled gain over the normalized input square, n x n samples.
#[wasm_bindgen]
pub fn gain_surface(n: usize) -> Result<JsValue, JsValue> {
    if !(2..=256).contains(&n) {
        return Err(err("n must lie in 2..=256"));
    }
    let tuner = default_tuner(&PlantScenario::new(ScenarioKind::Case1))?;
    let axis: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let mut k = Vec::with_capacity(n * n);
    for &en in &axis {
        for &dn in &axis {
            let act = tuner.infer(en, dn);
            k.push(tuner.defuzzify_centroid(&act).map_err(err)?);
        }
    }
    serde_wasm_bindgen::to_value(&SurfaceOut {
        e_norm: axis.clone(),
        de_norm: axis,
        k,
    })
    .map_err(err)
}

#[derive(Serialize)]
struct InferenceOut {
    e_norm: f64,
    de_norm: f64,
    activations: [f64; 5],
    /// Aggregated output membership sampled on the output universe.
    x: Vec<f64>,
    mu: Vec<f64>,
    k: f64,
    switched_to_constant: bool,
}

/// One inference step for raw (e, de): normalized inputs, per-label rule
/// activations, the clipped-and-aggregated output curve, and the crisp gain.
#[wasm_bindgen]
pub fn fuzzy_inference(e: f64, de: f64) -> Result<JsValue, JsValue> {
    let scenario = PlantScenario::new(ScenarioKind::Case1);
    let tuner = default_tuner(&scenario)?;
    let (e_norm, de_norm) = tuner.normalize(e, de);
    let activations = tuner.infer(e_norm, de_norm);

    let (lo, hi) = OUTPUT_UNIVERSE;
    let n = 480;
    let mut x = Vec::with_capacity(n + 1);
    let mut mu = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let xi = lo + (hi - lo) * i as f64 / n as f64;
        let mut m = 0.0f64;
        for (label, mf) in tuner.output_set.mfs.iter().enumerate() {
            m = m.max(activations[label].min(mf.eval(xi)));
        }
        x.push(xi);
        mu.push(m);
    }

    let out = InferenceOut {
        e_norm,
        de_norm,
        activations,
        x,
        mu,
        k: tuner.select_gain(e, de),
        switched_to_constant: e.abs() <= tuner.k_e,
    };
    serde_wasm_bindgen::to_value(&out).map_err(err)
}
