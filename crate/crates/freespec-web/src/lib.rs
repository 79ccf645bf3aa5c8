//! Browser bindings: a level-one slice of `D_A`, the classifiers, and the
//! rotation oracle. Pencils travel as the shared tuple JSON.

use freespec::ball_classifier::classify_free_circular;
use freespec::circular_classifier::{classify_circular, rotation_spot_check};
use freespec::linalg::c;
use freespec::pencil_core::min_eigenvalue;
use freespec::{MatrixTuple, Tolerance};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse(pencil: &str) -> Result<MatrixTuple, JsValue> {
    serde_json::from_str(pencil).map_err(|e| JsValue::from_str(&format!("pencil JSON: {e}")))
}

fn js(e: freespec::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Minimal eigenvalue of `L_A(x)` on a `res x res` grid of real scalar points
/// `x = (u, v, 0, ...)` with `u, v ∈ [-extent, extent]`, row-major from the top.
/// For `g = 1` the grid is the complex plane `x_1 = u + iv`.
pub fn slice_values(a: &MatrixTuple, res: usize, extent: f64) -> freespec::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(res * res);
    let step = if res > 1 {
        2.0 * extent / (res - 1) as f64
    } else {
        0.0
    };
    for row in 0..res {
        let v = extent - row as f64 * step;
        for col in 0..res {
            let u = -extent + col as f64 * step;
            let mut coords = vec![c(0.0, 0.0); a.g()];
            if a.g() == 1 {
                coords[0] = c(u, v);
            } else {
                coords[0] = c(u, 0.0);
                coords[1] = c(v, 0.0);
            }
            out.push(min_eigenvalue(a, &MatrixTuple::scalars(&coords))?);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn slice(pencil: &str, res: usize, extent: f64) -> Result<Vec<f64>, JsValue> {
    slice_values(&parse(pencil)?, res, extent).map_err(js)
}

/// Circular and free-circular verdicts as a JSON string.
pub fn classify_json(a: &MatrixTuple) -> freespec::Result<String> {
    let tol = Tolerance::default();
    let circ = classify_circular(a, &tol)?;
    let free = classify_free_circular(a, &tol)?;
    let out = json!({
        "circular": circ.circular,
        "block_sizes": circ.form.as_ref().map(|f| f.block_sizes.clone()),
        "free_circular": free.free_circular,
        "degenerate": free.degenerate,
        "s": free.form.as_ref().map(|f| f.s),
        "t": free.form.as_ref().map(|f| f.t),
        "minimal_size": circ.minimality.minimal_tuple.d(),
    });
    Ok(out.to_string())
}

#[wasm_bindgen]
pub fn classify(pencil: &str) -> Result<String, JsValue> {
    classify_json(&parse(pencil)?).map_err(js)
}

/// Worst minimal eigenvalue after random rotations `e^{it}X` of members.
#[wasm_bindgen]
pub fn rotation_check(pencil: &str, samples: usize, seed: u32) -> Result<f64, JsValue> {
    rotation_spot_check(&parse(pencil)?, samples, seed as u64).map_err(js)
}
