//! JSON-in, JSON-out entry points for the static page in `www/`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use permuton::chains::{simulate_copula_chain, simulate_f, simulate_h};
use permuton::copula::copula_by_name;
use permuton::indep::pattern3_joint_test_perm;
use permuton::partitions::{simulate_crp, simulate_plancherel};
use permuton::patterns::count_patterns_fast;
use permuton::queue::{trace_to_permutation, verify_inversion_bound, Mg1};
use permuton::{rng, Permutation};

/// Points of the rank plot: `(i/n, π(i)/n)`.
fn points(p: &Permutation) -> Value {
    json!(p.empirical_measure().iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>())
}

fn frequencies(p: &Permutation) -> Value {
    if p.len() < 3 {
        return Value::Null;
    }
    let t = count_patterns_fast(p, 3).expect("k = 3 is always counted");
    json!(t.iter().map(|(s, _)| json!({ "pattern": s.to_string(), "frequency": t.frequency_f64(&s) })).collect::<Vec<_>>())
}

/// `n` draws from a named copula, reduced to their rank permutation.
pub fn copula_sample(copula: &str, n: usize, seed: u64) -> Result<Value, String> {
    if n == 0 || n > 5000 {
        return Err("n must be in 1..=5000".into());
    }
    let c = copula_by_name(copula).map_err(|e| e.to_string())?;
    let mut r = rng::seeded(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| c.sample(&mut r)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let sample = permuton::BivariateSample::new(pts.clone()).map_err(|e| e.to_string())?;
    let pi = sample.ranks(permuton::TiePolicy::ByIndex).map_err(|e| e.to_string())?.relating;
    let joint = if n >= 3 { pattern3_joint_test_perm(&pi).ok().map(|r| r.p_value) } else { None };
    Ok(json!({
        "copula": c.name(),
        "raw": pts.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>(),
        "points": points(&pi),
        "patterns": frequencies(&pi),
        "joint_p_value": joint,
    }))
}

/// One run of a growth process: `F`, `H`, `crp`, `copula:<name>` or `plancherel`.
pub fn growth(model: &str, n: usize, seed: u64) -> Result<Value, String> {
    if n == 0 || n > 2000 {
        return Err("n must be in 1..=2000".into());
    }
    let e = |e: permuton::Error| e.to_string();
    if model == "plancherel" {
        let path = simulate_plancherel(n, seed).map_err(e)?;
        let last = path.last().expect("n ≥ 1");
        return Ok(json!({ "model": model, "rows": last.parts(), "partition": last.to_string() }));
    }
    let t = match model {
        "F" => simulate_f(n, seed).map_err(e)?,
        "H" => simulate_h(n, seed).map_err(e)?,
        "crp" => simulate_crp(n, seed).map_err(e)?,
        m if m.starts_with("copula:") => {
            let c = copula_by_name(&m[7..]).map_err(e)?;
            simulate_copula_chain(c.as_ref(), n, seed).map_err(e)?
        }
        other => return Err(format!("unknown model {other:?}")),
    };
    let last = t.last();
    Ok(json!({
        "model": model,
        "permutation": if n <= 60 { json!(last.to_string()) } else { Value::Null },
        "points": points(last),
        "patterns": frequencies(last),
    }))
}

/// An M/M/1-type queue with exponential service of rate 1.
pub fn queue(lambda: f64, discipline: &str, n: usize, seed: u64) -> Result<Value, String> {
    if !(2..=5000).contains(&n) {
        return Err("n must be in 2..=5000".into());
    }
    let e = |e: permuton::Error| e.to_string();
    let d = discipline.parse().map_err(e)?;
    let service = permuton::ServiceDist::exponential(1.0).map_err(e)?;
    let trace = Mg1::new(lambda, service).discipline(d).simulate(n, seed).map_err(e)?;
    let pi = trace_to_permutation(&trace).map_err(e)?;
    let (t21, bound) = verify_inversion_bound(&trace).map_err(e)?;
    Ok(json!({
        "points": points(&pi),
        "busy_period": trace.busy_period[..n].to_vec(),
        "periods": trace.periods(),
        "t21": t21,
        "bound": bound,
    }))
}

fn respond(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = copulaSample)]
pub fn copula_sample_js(copula: &str, n: usize, seed: u64) -> Result<String, JsValue> {
    respond(copula_sample(copula, n, seed))
}

#[wasm_bindgen(js_name = growth)]
pub fn growth_js(model: &str, n: usize, seed: u64) -> Result<String, JsValue> {
    respond(growth(model, n, seed))
}

#[wasm_bindgen(js_name = queue)]
pub fn queue_js(lambda: f64, discipline: &str, n: usize, seed: u64) -> Result<String, JsValue> {
    respond(queue(lambda, discipline, n, seed))
}
