//! Three operations for the browser page in `www/`, each returning JSON.
//!
//! The plain functions are usable (and tested) natively; the
//! `#[wasm_bindgen]` wrappers only convert errors into JS exceptions.

use poisson_transport::{
    entropy, fisher, geodesic, ou_path, path_length, path_speed, random_density, solve_distance, two_point_density,
    two_point_oracle, Density, PoissonSpace, SiteSpace, SolverConfig,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_STATES: usize = 400;
const MAX_INTERVALS: usize = 256;

fn space(intensity: &[f64], caps: &[usize]) -> Result<PoissonSpace, String> {
    let sites = SiteSpace::new(intensity.to_vec(), caps.to_vec()).map_err(|e| e.to_string())?;
    match sites.state_count() {
        Some(n) if n <= MAX_STATES => {}
        _ => return Err(format!("at most {MAX_STATES} states in the demo")),
    }
    PoissonSpace::new(sites).map_err(|e| e.to_string())
}

fn intervals(k: usize) -> Result<usize, String> {
    if k == 0 || k > MAX_INTERVALS {
        return Err(format!("interval count must lie in 1..={MAX_INTERVALS}"));
    }
    Ok(k)
}

/// JSON has no infinity.
fn finite_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Serialize)]
struct Flow {
    times: Vec<f64>,
    entropy: Vec<f64>,
    fisher: Vec<Option<f64>>,
    /// Masses per knot, site-0 occupancy marginal.
    marginal: Vec<Vec<f64>>,
}

fn marginal(space: &PoissonSpace, d: &Density) -> Vec<f64> {
    let cap = space.sites().caps()[0];
    let mut out = vec![0.0; cap + 1];
    for (s, m) in d.masses(space).iter().enumerate() {
        out[space.lattice().count(s, 0)] += m;
    }
    out
}

/// Flow of `δ_config` under the dual semigroup on one site.
pub fn flow_json(intensity: f64, cap: usize, start: usize, horizon: f64, k: usize) -> Result<String, String> {
    let sp = space(&[intensity], &[cap])?;
    let mu = Density::dirac(&sp, &[start]).map_err(|e| e.to_string())?;
    let path = ou_path(&sp, &mu, horizon, intervals(k)?).map_err(|e| e.to_string())?;
    let out = Flow {
        times: path.times().to_vec(),
        entropy: path.densities().iter().map(|d| entropy(&sp, d)).collect(),
        fisher: path.densities().iter().map(|d| finite_or_null(fisher(&sp, d))).collect(),
        marginal: path.densities().iter().map(|d| marginal(&sp, d)).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Geo {
    distance: f64,
    length: f64,
    status: String,
    times: Vec<f64>,
    speed: Vec<f64>,
    entropy: Vec<f64>,
    marginal: Vec<Vec<f64>>,
}

/// Geodesic from a seeded random density to the reference measure.
pub fn geodesic_json(intensity: f64, cap: usize, seed: u64, amplitude: f64, k: usize) -> Result<String, String> {
    let sp = space(&[intensity], &[cap])?;
    if !(amplitude >= 0.0 && amplitude <= 5.0) {
        return Err("amplitude must lie in [0, 5]".into());
    }
    let mu0 = random_density(&sp, seed, amplitude, 0);
    let mu1 = Density::reference(&sp);
    let cfg = SolverConfig::default().with_intervals(intervals(k)?);
    let g = geodesic(&sp, &mu0, &mu1, &cfg).map_err(|e| e.to_string())?;
    let out = Geo {
        distance: g.value.sqrt(),
        length: path_length(&sp, &g.path),
        status: format!("{:?}", g.report.status),
        times: g.path.times().to_vec(),
        speed: path_speed(&sp, &g.path),
        entropy: g.path.densities().iter().map(|d| entropy(&sp, d)).collect(),
        marginal: g.path.densities().iter().map(|d| marginal(&sp, d)).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TwoPoint {
    solver: f64,
    oracle: f64,
    relative_error: f64,
    status: String,
}

/// Distance between the laws with occupancy probabilities `beta0`, `beta1`
/// on a single one-level site, against the quadrature value.
pub fn two_point_json(intensity: f64, beta0: f64, beta1: f64, k: usize) -> Result<String, String> {
    let sp = space(&[intensity], &[1])?;
    let mu0 = two_point_density(&sp, beta0).map_err(|e| e.to_string())?;
    let mu1 = two_point_density(&sp, beta1).map_err(|e| e.to_string())?;
    let cfg = SolverConfig::default().with_intervals(intervals(k)?);
    let sol = solve_distance(&sp, &mu0, &mu1, &cfg).map_err(|e| e.to_string())?;
    let oracle = two_point_oracle(intensity, beta0, beta1).map_err(|e| e.to_string())?;
    let w = sol.value.sqrt();
    let out = TwoPoint {
        solver: w,
        oracle,
        relative_error: if oracle > 0.0 { (w - oracle).abs() / oracle } else { w },
        status: format!("{:?}", sol.report.status),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn ou_flow(intensity: f64, cap: usize, start: usize, horizon: f64, k: usize) -> Result<String, JsValue> {
    flow_json(intensity, cap, start, horizon, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn geodesic_to_reference(intensity: f64, cap: usize, seed: u32, amplitude: f64, k: usize) -> Result<String, JsValue> {
    geodesic_json(intensity, cap, seed as u64, amplitude, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn two_point(intensity: f64, beta0: f64, beta1: f64, k: usize) -> Result<String, JsValue> {
    two_point_json(intensity, beta0, beta1, k).map_err(|e| JsValue::from_str(&e))
}
