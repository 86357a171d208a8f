//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export has a plain Rust twin returning `Result<_, String>` so the
//! logic is testable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use twistlab::construction::{run_case_a, verify_chain, ChainStep, LevelRow};
use twistlab::oracles::chain_trial_certificate;
use twistlab::quasilinear::{normalize_constant, quasi_defect, QuasiFunctional};
use twistlab::rational;
use twistlab::FinSeq;

/// Deepest construction the page may request.
pub const DEMO_MAX_DEPTH: usize = 8;
pub const HEATMAP_MAX: usize = 128;
const HEATMAP_RANGE: i64 = 2;

/// Normalized defect of the Ribe function divided by 4 on the pairs
/// `x = e1 + a e2`, `y = b e1 + e2` for `a, b` on an `n x n` grid over
/// `[-2, 2]`, row-major with `b` varying slowest.
pub fn defect_grid(n: usize) -> Result<Vec<f64>, String> {
    if !(2..=HEATMAP_MAX).contains(&n) {
        return Err(format!("grid size must lie in 2..={HEATMAP_MAX}"));
    }
    let f = normalize_constant(&QuasiFunctional::ribe()).map_err(|e| e.to_string())?;
    let step = |k: usize| rational::ratio(HEATMAP_RANGE * (2 * k as i64 - (n as i64 - 1)), n as i64 - 1);
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        let b = step(row);
        for col in 0..n {
            let a = step(col);
            let x = FinSeq::from_pairs([(1, rational::int(1)), (2, a.clone())]);
            let y = FinSeq::from_pairs([(1, b.clone()), (2, rational::int(1))]);
            out.push(quasi_defect(&f, &x.into(), &y.into()).unwrap_or(0.0));
        }
    }
    Ok(out)
}

fn check_depth(depth: usize) -> Result<(), String> {
    if (1..=DEMO_MAX_DEPTH).contains(&depth) {
        Ok(())
    } else {
        Err(format!("depth must lie in 1..={DEMO_MAX_DEPTH}"))
    }
}

/// Rows `n, c_n, s_n, m_n, M_n, |G_n|` of the case-(a) construction.
pub fn level_rows(depth: usize, seed: u64) -> Result<Vec<LevelRow>, String> {
    check_depth(depth)?;
    let state = run_case_a(depth, 2, seed).map_err(|e| e.to_string())?;
    Ok(state.table())
}

#[derive(Serialize)]
pub struct ChainSample {
    pub trial: u64,
    pub terms: usize,
    pub norm: String,
    pub f_value: f64,
    pub passed: bool,
    pub min_margin: f64,
    pub steps: Vec<ChainStep>,
}

/// Replays the bound chain on the certificate that chain-fuzzer trial
/// `trial` would examine, rescaled to norm `1 - 1/1000`.
pub fn chain_transcript(depth: usize, seed: u64, trial: u64) -> Result<ChainSample, String> {
    check_depth(depth)?;
    let state = run_case_a(depth, 2, seed).map_err(|e| e.to_string())?;
    let delta = rational::ratio(1, 1000);
    let (cert, norm) = chain_trial_certificate(&state, seed, trial, &delta)
        .ok_or_else(|| "no certificate with a nonzero value in 16 draws".to_string())?;
    let tr = verify_chain(&state, &state.functional, &cert).map_err(|e| e.to_string())?;
    Ok(ChainSample {
        trial,
        terms: cert.len(),
        norm: rational::format_rational(&norm),
        f_value: tr.f_value,
        passed: tr.passed,
        min_margin: tr.min_margin(),
        steps: tr.steps,
    })
}

fn js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn defect_heatmap(n: u32) -> Result<Vec<f64>, JsError> {
    defect_grid(n as usize).map_err(|e| JsError::new(&e))
}

/// JSON array of level rows.
#[wasm_bindgen]
pub fn levels_table(depth: u32, seed: u32) -> Result<String, JsError> {
    js(level_rows(depth as usize, seed.into()))
}

/// JSON transcript of one bound-chain replay.
#[wasm_bindgen]
pub fn chain_sample(depth: u32, seed: u32, trial: u32) -> Result<String, JsError> {
    js(chain_transcript(depth as usize, seed.into(), trial.into()))
}
