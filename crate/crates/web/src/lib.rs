//! WebAssembly bindings for the browser demo in `www/`. Every function takes
//! the rescaled state `(p0_t, delta_t, alpha, theta)` and returns flat `f64`
//! arrays that the page draws on canvases.

use backflow_core::backflow::beta_rescaled;
use backflow_core::dynamics::{auto_window, fringe_period};
use backflow_core::phase_space::{negativity_delta, GridSpec, PhaseSpaceGrid};
use backflow_core::smoothing::{s_beta, smoothed_distribution, smoothed_negativity, Ordering, SmoothingSpec};
use backflow_core::states::RescaledParams;
use wasm_bindgen::prelude::*;

fn params(p0_t: f64, delta_t: f64, alpha: f64, theta: f64) -> Result<RescaledParams, JsError> {
    RescaledParams::new(p0_t, delta_t, alpha, theta).map_err(|e| JsError::new(&e.to_string()))
}

fn js(e: backflow_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `[t_0..t_{n-1}, j_0..j_{n-1}]`: the rescaled current smoothed with
/// ordering parameter `s` (0 for the plain current) on the automatic window.
#[wasm_bindgen]
pub fn current_trace(p0_t: f64, delta_t: f64, alpha: f64, theta: f64, s: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let r = params(p0_t, delta_t, alpha, theta)?;
    let fw = smoothed_distribution(&r, SmoothingSpec::new(s).map_err(js)?).map_err(js)?;
    let (lo, hi) = auto_window(|t| fw.current(t), &r);
    let n = n.clamp(16, 20_000);
    let times: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let mut out = times.clone();
    out.extend(times.iter().map(|&t| fw.current(t)));
    Ok(out)
}

/// `[beta, t1, t2, Delta, fringe period]` for the smoothed state; `Delta` is
/// the negativity of the smoothed distribution.
#[wasm_bindgen]
pub fn backflow_summary(p0_t: f64, delta_t: f64, alpha: f64, theta: f64, s: f64) -> Result<Vec<f64>, JsError> {
    let r = params(p0_t, delta_t, alpha, theta)?;
    let (beta, delta) = if s == 0.0 {
        (beta_rescaled(&r, None).map_err(js)?, negativity_delta(&r).map_err(js)?)
    } else {
        let spec = SmoothingSpec::new(s).map_err(js)?;
        (
            s_beta(&r, spec, None, Ordering::ConvolveThenEvolve).map_err(js)?,
            smoothed_negativity(&r, spec).map_err(js)?,
        )
    };
    Ok(vec![beta.beta, beta.t1, beta.t2, delta, fringe_period(&r)])
}

/// `[x0, x1, p0, p1, nx, np, values...]` with `values[i * np + j]` at
/// `(x_i, p_j)`: the smoothed Wigner function at rescaled time `t`.
#[wasm_bindgen]
pub fn wigner_grid(
    p0_t: f64,
    delta_t: f64,
    alpha: f64,
    theta: f64,
    s: f64,
    t: f64,
    nx: usize,
    np: usize,
) -> Result<Vec<f64>, JsError> {
    let r = params(p0_t, delta_t, alpha, theta)?;
    let spec = GridSpec {
        nx: nx.clamp(8, 1024),
        np: np.clamp(8, 1024),
        ..GridSpec::default_for(&r)
    };
    let fw = smoothed_distribution(&r, SmoothingSpec::new(s).map_err(js)?).map_err(js)?;
    let grid = PhaseSpaceGrid::sample(&spec, s, |x, p| fw.value(x - p * t, p)).map_err(js)?;
    let mut out = vec![
        spec.x_range.0,
        spec.x_range.1,
        spec.p_range.0,
        spec.p_range.1,
        spec.nx as f64,
        spec.np as f64,
    ];
    out.extend_from_slice(&grid.values);
    Ok(out)
}
