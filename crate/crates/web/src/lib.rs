//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a flat `Float64Array`; the pure functions in
//! [`demo`] carry the logic so they can be tested natively.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(e: nc2ent::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Row-major `n_theta × n_mu` entropy grid; infeasible cells are NaN.
#[wasm_bindgen]
pub fn gcnot_surface(
    theta_min: f64,
    theta_max: f64,
    n_theta: usize,
    n_mu: usize,
    input: u8,
) -> Result<Vec<f64>, JsError> {
    demo::gcnot_surface(theta_min, theta_max, n_theta, n_mu, input).map_err(js)
}

/// `[mu, epsilon, ebits]` at the entropy-maximizing splitting.
#[wasm_bindgen]
pub fn gcnot_optimum(theta: f64, input: u8) -> Result<Vec<f64>, JsError> {
    demo::gcnot_optimum(theta, input).map_err(js)
}

/// Mode-A sector probabilities for `N_A = 0..=n` after one tunneling step,
/// followed by the entanglement (ebits) of each post-selected state.
#[wasm_bindgen]
pub fn sector_distribution(
    k: usize,
    n: usize,
    r: f64,
    phi: f64,
    superposition: bool,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    demo::sector_distribution(k, n, r, phi, superposition, seed).map_err(js)
}

/// `[observed first-round frequency, coherent-state prediction]`.
#[wasm_bindgen]
pub fn modesplit_frequency(
    k: usize,
    n: usize,
    nx: usize,
    r: f64,
    phi: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    demo::modesplit_frequency(k, n, nx, r, phi, runs, seed).map_err(js)
}

/// `[x, y]` beamsplitter weights for a GCNOT on two coherent states.
#[wasm_bindgen]
pub fn beamsplitter_xy(overlap: f64, epsilon: f64) -> Result<Vec<f64>, JsError> {
    demo::beamsplitter_xy(overlap, epsilon).map_err(js)
}
