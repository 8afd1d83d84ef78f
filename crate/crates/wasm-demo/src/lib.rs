//! Browser bindings: tabulate a W-transform, sample a W-transformed copula
//! and evaluate its cdf on a grid. Models travel as the same JSON the CLI reads.

use wasm_bindgen::prelude::*;

use wtrans::{rng, Copula, Transform, WTransformedCopula};

fn parse_model(json: &str) -> Result<WTransformedCopula, String> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    if value.get("base").is_some() {
        return serde_json::from_value(value).map_err(|e| e.to_string());
    }
    let c: Copula = serde_json::from_value(value).map_err(|e| e.to_string())?;
    let d = c.dim();
    WTransformedCopula::new(c, vec![Transform::identity(); d]).map_err(|e| e.to_string())
}

/// `W(u)` at `n` equispaced points of `[0, 1]`.
pub fn wmap_values(transform_json: &str, n: usize) -> Result<Vec<f64>, String> {
    if n < 2 {
        return Err("grid needs at least 2 points".into());
    }
    let t: Transform = serde_json::from_str(transform_json).map_err(|e| e.to_string())?;
    Ok((0..n).map(|i| t.eval(i as f64 / (n - 1) as f64)).collect())
}

/// Row-major `n x d` sample.
pub fn sample_values(model_json: &str, n: usize, seed: u64) -> Result<Vec<f64>, String> {
    let m = parse_model(model_json)?;
    Ok(m.sample(n, &mut rng::seeded(seed)).as_flat().to_vec())
}

/// `C(u1, u2)` on the midpoints of an `m x m` grid, row `i` holding `u2 = (i + 1/2) / m`.
pub fn cdf_values(model_json: &str, m: usize) -> Result<Vec<f64>, String> {
    let model = parse_model(model_json)?;
    if model.dim() != 2 {
        return Err(format!("the grid view needs a bivariate model, got d = {}", model.dim()));
    }
    let h = 1.0 / m as f64;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            out.push(model.cdf(&[(j as f64 + 0.5) * h, (i as f64 + 0.5) * h]));
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn wmap(transform_json: &str, n: usize) -> Result<Vec<f64>, JsValue> {
    wmap_values(transform_json, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sample(model_json: &str, n: usize, seed: u64) -> Result<Vec<f64>, JsValue> {
    sample_values(model_json, n, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn cdf_grid(model_json: &str, m: usize) -> Result<Vec<f64>, JsValue> {
    cdf_values(model_json, m).map_err(|e| JsValue::from_str(&e))
}
