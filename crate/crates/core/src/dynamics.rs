//! Free evolution of the cat state, the probability on the positive
//! half-line and the probability current through the origin.
//!
//! Physical times are in units with `hbar = m = 1`; traces, windows and
//! flux intervals use the rescaled time `t_t = t / (m sigma^2)`, for which
//! the rescaled current `j_t = m sigma^2 j` depends only on the rescaled
//! parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fringe::FringeWigner;
use crate::numerics::{find_sign_changes, Bracket, Quadrature};
use crate::states::{phi0, CatState, RescaledParams};

/// Which of the two equivalent formulas evaluates the current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurrentRoute {
    /// `Im(psi* d psi/dx) / m` at the origin.
    Wavefunction,
    /// `int dp (p/m) W(0, p; t)` with the closed-form Wigner function.
    Wigner,
}

pub fn phi_t(state: &CatState, p: f64, t: f64) -> Complex64 {
    phi0(state, p) * Complex64::from_polar(1.0, -p * p * t / (2.0 * state.mass()))
}

/// Position amplitude at time `t` and its x-derivative.
pub fn psi_t_with_derivative(state: &CatState, x: f64, t: f64) -> (Complex64, Complex64) {
    let [upper, lower] = state.centers();
    let (gu, du) = state.packet(upper, x, t);
    let (gl, dl) = state.packet(lower, x, t);
    let w = state.lower_weight();
    let n = crate::states::normalization_constant(state);
    (n * (gu + w * gl), n * (du + w * dl))
}

pub fn psi_t(state: &CatState, x: f64, t: f64) -> Complex64 {
    psi_t_with_derivative(state, x, t).0
}

/// Position range `[lo, hi]` outside which `|psi_t|^2` is negligible, with
/// the packet standard deviation.
pub(crate) fn position_support(state: &CatState, t: f64, widths: f64) -> (f64, f64, f64) {
    let ([c1, c2], std) = state.position_envelope(t);
    (c1.min(c2) - widths * std, c1.max(c2) + widths * std, std)
}

/// `P(t) = int_0^inf |psi_t(x)|^2 dx`.
pub fn probability_p(state: &CatState, t: f64) -> Result<f64> {
    let (_, hi, std) = position_support(state, t, 14.0);
    if hi <= 0.0 {
        return Ok(0.0);
    }
    let n = ((hi / (0.5 * std)).ceil() as usize).clamp(4, 600);
    let pts: Vec<f64> = (0..=n).map(|i| hi * i as f64 / n as f64).collect();
    let r = Quadrature::new(1e-14)
        .with_rel_tol(1e-13)
        .with_max_panels(20_000)
        .integrate_breaks(|x| psi_t(state, x, t).norm_sqr(), &pts)?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// Probability current through the origin at physical time `t`.
pub fn current_j(state: &CatState, t: f64, route: CurrentRoute) -> f64 {
    match route {
        CurrentRoute::Wavefunction => {
            let (psi, dpsi) = psi_t_with_derivative(state, 0.0, t);
            (psi.conj() * dpsi).im / state.mass()
        }
        CurrentRoute::Wigner => {
            let scale = state.mass() * state.sigma() * state.sigma();
            let f = FringeWigner::new(&state.rescaled()).expect("validated state");
            f.current(t / scale) / scale
        }
    }
}

/// Rescaled current `j_t(t_t)` computed from the wave function.
pub fn rescaled_current(state: &CatState, t_t: f64) -> f64 {
    let scale = state.mass() * state.sigma() * state.sigma();
    scale * current_j(state, t_t * scale, CurrentRoute::Wavefunction)
}

/// `P(t2) - P(t1)` over a rescaled time interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxInterval {
    pub t1: f64,
    pub t2: f64,
    pub flux: f64,
}

/// `F(t1, t2) = P(t2) - P(t1)` for rescaled times `t1 < t2`.
pub fn flux_f(state: &CatState, t1: f64, t2: f64) -> Result<FluxInterval> {
    if !(t1 < t2) {
        return Err(invalid(format!("flux interval needs t1 < t2, got ({t1}, {t2})")));
    }
    let p2 = probability_p(state, state.time_from_rescaled(t2))?;
    let p1 = probability_p(state, state.time_from_rescaled(t1))?;
    Ok(FluxInterval { t1, t2, flux: p2 - p1 })
}

/// `int_{t1}^{t2} j_t dt_t`, the same flux by time quadrature of the current.
pub fn flux_by_current(state: &CatState, t1: f64, t2: f64, tol: f64) -> Result<f64> {
    let r = state.rescaled();
    let period = fringe_period(&r);
    let n = (((t2 - t1).abs() / period).ceil() as usize).clamp(1, 4000);
    let pts: Vec<f64> = (0..=n).map(|i| t1 + (t2 - t1) * i as f64 / n as f64).collect();
    Ok(Quadrature::new(tol).integrate_breaks(|t| rescaled_current(state, t), &pts)?.value)
}

/// Sampled rescaled current with its sign-change brackets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub zero_brackets: Vec<Bracket>,
}

impl CurrentTrace {
    pub fn from_fn<F: Fn(f64) -> f64 + Sync + Send>(f: F, window: (f64, f64), n_samples: usize) -> Result<Self> {
        let (lo, hi) = window;
        if n_samples < 16 {
            return Err(invalid(format!("a trace needs at least 16 samples, got {n_samples}")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("invalid time window ({lo}, {hi})")));
        }
        let times: Vec<f64> = (0..n_samples)
            .map(|i| crate::numerics::roots_seed_point(lo, hi, n_samples, i))
            .collect();
        let values = crate::par_map(&times, |&t| f(t));
        let zero_brackets = crate::numerics::sign_changes(&times, &values);
        Ok(CurrentTrace {
            times,
            values,
            zero_brackets,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_tilde,j_tilde\n");
        for (t, j) in self.times.iter().zip(&self.values) {
            s.push_str(&format!("{t},{j}\n"));
        }
        s
    }

    /// Index and value of the most negative sample.
    pub fn minimum(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Dense sampling of the rescaled current on a rescaled time window.
pub fn current_trace(state: &CatState, window: (f64, f64), n_samples: usize) -> Result<CurrentTrace> {
    CurrentTrace::from_fn(|t| rescaled_current(state, t), window, n_samples)
}

/// Shortest period of the current's oscillation in rescaled time.
pub fn fringe_period(r: &RescaledParams) -> f64 {
    2.0 * std::f64::consts::PI / (r.delta_t * r.upper() + 1.0)
}

/// Starting half-width of the rescaled time window.
pub fn base_half_window(r: &RescaledParams) -> f64 {
    (20.0 / (r.delta_t * r.p0_t + 1.0)).max(1.0)
}

/// Symmetric window `[-T, T]`, grown from `base_half_window` until the
/// current in the outer tenth on both sides is below `1e-6` of its peak.
pub fn auto_window<F: Fn(f64) -> f64>(f: F, r: &RescaledParams) -> (f64, f64) {
    let mut half = base_half_window(r);
    let n = 2001;
    for _ in 0..16 {
        let ts: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
        let vs: Vec<f64> = ts.iter().map(|&t| f(t).abs()).collect();
        let peak = vs.iter().cloned().fold(0.0, f64::max);
        let edge = vs[..n / 20].iter().chain(&vs[n - n / 20..]).cloned().fold(0.0, f64::max);
        if peak == 0.0 || edge < 1e-6 * peak {
            break;
        }
        half *= 1.5;
    }
    (-half, half)
}

/// Default window for the rescaled current of a state.
pub fn default_window(state: &CatState) -> (f64, f64) {
    auto_window(|t| rescaled_current(state, t), &state.rescaled())
}

/// Brackets of sign changes of the rescaled current.
pub fn current_zero_brackets(state: &CatState, window: (f64, f64), n_seed: usize) -> Vec<Bracket> {
    find_sign_changes(|t| rescaled_current(state, t), window, n_seed)
}
