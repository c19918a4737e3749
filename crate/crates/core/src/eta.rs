//! A state-adapted current: the ordinary current smeared with the kernel
//! `(sin(p1 x) - sin(p2 x)) / (pi x)`, whose negative flux tracks the
//! Wigner negativity of the cat state.
//!
//! Times are physical. Scans use `sigma = 1`, where physical and rescaled
//! quantities coincide and `p1`, `p2` are rescaled momenta.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backflow::{Axis, LobeDecomposition};
use crate::dynamics::{base_half_window, fringe_period, position_support, psi_t_with_derivative};
use crate::error::{invalid, Error, Result};
use crate::numerics::Quadrature;
use crate::phase_space::negativity_delta;
use crate::states::{CatState, RescaledParams};

pub use crate::numerics::spearman;

/// Resolution parameters of the kernel, in the state's momentum units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaParams {
    pub p1: f64,
    pub p2: f64,
    /// Negate the kernel, i.e. use `sin(p2 x) - sin(p1 x)`.
    #[serde(default)]
    pub flip_sign: bool,
}

impl EtaParams {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        let e = EtaParams {
            p1,
            p2,
            flip_sign: false,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        self.check_positive()?;
        if self.p1 == self.p2 {
            return Err(invalid("p1 and p2 must differ"));
        }
        Ok(())
    }

    /// Positivity only; `p1 == p2` is the zero kernel and evaluates to zero.
    fn check_positive(&self) -> Result<()> {
        if !(self.p1 > 0.0 && self.p2 > 0.0) || !self.p1.is_finite() || !self.p2.is_finite() {
            return Err(invalid(format!("p1, p2 must be positive, got ({}, {})", self.p1, self.p2)));
        }
        Ok(())
    }

    fn sign(&self) -> f64 {
        if self.flip_sign {
            -1.0
        } else {
            1.0
        }
    }
}

/// `sin(p x) / (pi x)`, with its Taylor series near the origin.
fn sinc_term(p: f64, x: f64) -> f64 {
    let z = p * x;
    if z.abs() < 1e-3 {
        let z2 = z * z;
        p / PI * (1.0 - z2 / 6.0 * (1.0 - z2 / 20.0))
    } else {
        z.sin() / (PI * x)
    }
}

/// `(sin(p1 x) - sin(p2 x)) / (pi x)`; `(p1 - p2) / pi` at `x = 0`. No
/// parameter validation, so `p1 == p2` gives the zero kernel.
pub fn delta_kernel(x: f64, params: &EtaParams) -> f64 {
    params.sign() * (sinc_term(params.p1, x) - sinc_term(params.p2, x))
}

/// `J(x, t) = Im(psi* d psi / dx) / m`.
pub fn current_density_j(state: &CatState, x: f64, t: f64) -> f64 {
    let (psi, dpsi) = psi_t_with_derivative(state, x, t);
    (psi.conj() * dpsi).im / state.mass()
}

/// `(i / 2m) (psi d psi* - psi* d psi)` without discarding the imaginary
/// part, which vanishes identically.
pub fn current_density_complex(state: &CatState, x: f64, t: f64) -> Complex64 {
    let (psi, dpsi) = psi_t_with_derivative(state, x, t);
    Complex64::i() * (psi * dpsi.conj() - psi.conj() * dpsi) / (2.0 * state.mass())
}

/// Gaussian half-widths keeping `|psi|^2` above `1e-12` of its peak.
const ENVELOPE_WIDTHS: f64 = 7.5;

/// Integration breakpoints covering the envelope of `J` plus one kernel
/// period, spaced below half the shortest oscillation period.
fn x_breakpoints(state: &CatState, t: f64, params: &EtaParams) -> Vec<f64> {
    let (lo, hi, _) = position_support(state, t, ENVELOPE_WIDTHS);
    let kernel_period = 2.0 * PI / params.p1.min(params.p2);
    let (lo, hi) = (lo - kernel_period, hi + kernel_period);
    let fastest = state.delta() + params.p1.max(params.p2) + 1.0 / state.sigma();
    let step = PI / fastest;
    let n = (((hi - lo) / step).ceil() as usize).clamp(4, 20_000);
    (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

fn eta_quadrature() -> Quadrature {
    Quadrature::new(1e-13).with_rel_tol(1e-12).with_max_panels(100_000)
}

/// `eta(t) = int dx delta_kernel(x) J(x, t)` by direct quadrature in x.
/// Slow; kept as an independent check of [`eta`].
pub fn eta_position_quadrature(state: &CatState, t: f64, params: &EtaParams) -> Result<f64> {
    params.check_positive()?;
    let pts = x_breakpoints(state, t, params);
    Ok(eta_quadrature()
        .integrate_breaks(|x| delta_kernel(x, params) * current_density_j(state, x, t), &pts)?
        .value)
}

/// Position-space `eta` through the complex current density.
pub fn eta_position_complex(state: &CatState, t: f64, params: &EtaParams) -> Result<Complex64> {
    params.check_positive()?;
    let pts = x_breakpoints(state, t, params);
    let quad = eta_quadrature();
    let re = quad.integrate_breaks(|x| delta_kernel(x, params) * current_density_complex(state, x, t).re, &pts)?;
    let im = quad.integrate_breaks(|x| delta_kernel(x, params) * current_density_complex(state, x, t).im, &pts)?;
    Ok(Complex64::new(re.value, im.value))
}

/// `eta(t)` evaluated in momentum space.
///
/// The kernel's Fourier transform is the indicator of a band of momentum
/// differences `q = p' - p`, so with `P = (p + p') / 2`
///
/// ```text
/// eta = (1 / 2 pi) int dq K(q) int dP (P / m) phi*(P - q/2) phi(P + q/2) e^{-i P q t / m}
/// ```
///
/// where `K = 1{|q| < p1} - 1{|q| < p2}`. For Gaussian terms the P-integral
/// is elementary, leaving a smooth integral over the band. The imaginary
/// part cancels between conjugate term pairs and is returned as a check.
pub fn eta_complex(state: &CatState, t: f64, params: &EtaParams) -> Result<Complex64> {
    params.check_positive()?;
    let m = state.mass();
    let s2 = state.sigma() * state.sigma();
    let n2 = crate::states::normalization_constant(state).powi(2);
    let centers = state.centers();
    let coeffs = [Complex64::new(1.0, 0.0), state.lower_weight()];
    let a = 2.0 * s2;
    let root = (std::f64::consts::PI / a).sqrt();
    let integrand = |q: f64| -> Complex64 {
        let b = q * t / m;
        let mut total = Complex64::new(0.0, 0.0);
        for (j, &cj) in coeffs.iter().enumerate() {
            for (l, &cl) in coeffs.iter().enumerate() {
                if cj == Complex64::new(0.0, 0.0) || cl == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mid = 0.5 * (centers[j] + centers[l]);
                let d = centers[l] - centers[j];
                let env = -0.5 * s2 * (q - d).powi(2) - b * b / (4.0 * a);
                let phase = Complex64::from_polar(env.exp(), -b * mid);
                let moment = Complex64::new(mid, -b / (2.0 * a));
                total += cj.conj() * cl * phase * moment;
            }
        }
        total * root / m
    };
    let (lo, hi) = (params.p1.min(params.p2), params.p1.max(params.p2));
    let band_sign = if params.p1 < params.p2 { -1.0 } else { 1.0 } * params.sign();
    let c_max = centers[0].abs().max(centers[1].abs());
    let rate = (t / m).abs() * (c_max + 0.5 * hi) + state.sigma();
    let n = (((hi - lo) * rate / std::f64::consts::PI).ceil() as usize + 2).clamp(2, 20_000);
    // The roundoff floor of the band integral reaches ~1e-13 for some states.
    let quad = Quadrature::new(1e-12).with_rel_tol(1e-11).with_max_panels(10_000);
    let mut value = Complex64::new(0.0, 0.0);
    for (s, e) in [(lo, hi), (-hi, -lo)] {
        let pts: Vec<f64> = (0..=n).map(|i| s + (e - s) * i as f64 / n as f64).collect();
        let re = quad.integrate_breaks(|q| integrand(q).re, &pts)?;
        let im = quad.integrate_breaks(|q| integrand(q).im, &pts)?;
        value += Complex64::new(re.value, im.value);
    }
    Ok(band_sign * n2 / (2.0 * std::f64::consts::PI) * value)
}

/// `eta(t) = int dx delta_kernel(x) J(x, t)`.
pub fn eta(state: &CatState, t: f64, params: &EtaParams) -> Result<f64> {
    Ok(eta_complex(state, t, params)?.re)
}

/// Negative flux of `eta` on a time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaFlux {
    pub negative: f64,
    pub positive: f64,
    pub window: (f64, f64),
}

const ETA_SEEDS_PER_PERIOD: f64 = 12.0;
const ETA_FLUX_TOL: f64 = 1e-11;
/// Edge-lobe flux below this does not trigger a window expansion.
const ETA_EDGE_SLACK: f64 = 1e-9;

fn time_period(state: &CatState) -> f64 {
    let s2 = state.sigma() * state.sigma();
    fringe_period(&state.rescaled()) * s2
}

/// Window `[-T, T]` (physical time) grown until `|eta|` near both edges is
/// below `1e-6` of its peak.
pub fn eta_window(state: &CatState, params: &EtaParams) -> Result<(f64, f64)> {
    let s2 = state.sigma() * state.sigma();
    let mut half = 2.5 * base_half_window(&state.rescaled()) * s2;
    let n = 201;
    for _ in 0..8 {
        let ts: Vec<f64> = (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect();
        let vs = crate::par_map(&ts, |&t| eta(state, t, params))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        let peak = vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let edge = vs[..n / 20]
            .iter()
            .chain(&vs[n - n / 20..])
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 || edge < 1e-6 * peak {
            break;
        }
        half *= 1.5;
    }
    Ok((-half, half))
}

fn flux_on(state: &CatState, params: &EtaParams, w: (f64, f64)) -> Result<(EtaFlux, bool)> {
    let period = time_period(state);
    let n = (((w.1 - w.0) / period * ETA_SEEDS_PER_PERIOD).ceil() as usize).clamp(400, 20_000);
    // The integrand of the lobe decomposition must be infallible; failures
    // are recorded and re-raised afterwards.
    let failed = std::sync::atomic::AtomicBool::new(false);
    let f = |t: f64| {
        eta(state, t, params).unwrap_or_else(|_| {
            failed.store(true, std::sync::atomic::Ordering::Relaxed);
            0.0
        })
    };
    let lobes = LobeDecomposition::with_seeds(&f, w, n, period, ETA_FLUX_TOL)?;
    if failed.load(std::sync::atomic::Ordering::Relaxed) {
        return Err(Error::NonConvergence {
            estimate: f64::NAN,
            tolerance: ETA_FLUX_TOL,
        });
    }
    let negative = lobes.negative_flux();
    let positive = lobes.fluxes.iter().filter(|&&q| q > 0.0).sum::<f64>();
    let first = *lobes.fluxes.first().unwrap_or(&0.0);
    let last = *lobes.fluxes.last().unwrap_or(&0.0);
    let touches = first < -ETA_EDGE_SLACK || last < -ETA_EDGE_SLACK;
    Ok((
        EtaFlux {
            negative,
            positive,
            window: w,
        },
        touches,
    ))
}

/// Negative flux over exactly `window`, without any expansion.
pub fn eta_negative_flux_on(state: &CatState, params: &EtaParams, window: (f64, f64)) -> Result<EtaFlux> {
    params.validate()?;
    if !(window.0 < window.1) || !window.0.is_finite() || !window.1.is_finite() {
        return Err(invalid(format!("invalid time window ({}, {})", window.0, window.1)));
    }
    Ok(flux_on(state, params, window)?.0)
}

/// `int max(-eta, 0) dt` over `window` (physical time), or over
/// [`eta_window`] when none is given. A significant negative lobe cut by the
/// window edge doubles the window once; a second cut is an error.
pub fn eta_negative_flux(state: &CatState, params: &EtaParams, window: Option<(f64, f64)>) -> Result<EtaFlux> {
    params.validate()?;
    let w = match window {
        Some(w) if w.0 < w.1 && w.0.is_finite() && w.1.is_finite() => w,
        Some(w) => return Err(invalid(format!("invalid time window ({}, {})", w.0, w.1))),
        None => eta_window(state, params)?,
    };
    let (res, touches) = flux_on(state, params, w)?;
    if !touches {
        return Ok(res);
    }
    let (c, h) = (0.5 * (w.0 + w.1), w.1 - w.0);
    let (res, touches) = flux_on(state, params, (c - h, c + h))?;
    if touches {
        return Err(Error::WindowTooSmall { lo: c - h, hi: c + h });
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub delta_t: f64,
    pub alpha: f64,
    pub delta_neg: Option<f64>,
    pub eta_neg_flux: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaScanTable {
    pub params: EtaParams,
    pub p0_t: f64,
    pub theta: f64,
    pub rows: Vec<EtaRow>,
}

impl EtaScanTable {
    pub const CSV_HEADER: &'static str = "delta_t,alpha,delta_neg,eta_neg_flux,flags";

    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| x.to_string());
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.delta_t,
                r.alpha,
                cell(r.delta_neg),
                cell(r.eta_neg_flux),
                r.flags.join(";")
            ));
        }
        s
    }

    pub fn to_json_lines(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
            .collect()
    }

    /// Rows of one `delta_t` curve, in alpha order.
    pub fn curve(&self, delta_t: f64) -> Vec<&EtaRow> {
        self.rows.iter().filter(|r| r.delta_t == delta_t).collect()
    }

    /// Spearman correlation of negative flux against `Delta` along one curve.
    pub fn spearman_for(&self, delta_t: f64) -> Option<f64> {
        let (d, e): (Vec<f64>, Vec<f64>) = self
            .curve(delta_t)
            .into_iter()
            .filter_map(|r| Some((r.delta_neg?, r.eta_neg_flux?)))
            .unzip();
        spearman(&d, &e)
    }
}

fn eta_row(delta_t: f64, alpha: f64, p0_t: f64, theta: f64, params: &EtaParams) -> EtaRow {
    let mut row = EtaRow {
        delta_t,
        alpha,
        delta_neg: None,
        eta_neg_flux: None,
        flags: Vec::new(),
    };
    let r = match RescaledParams::new(p0_t, delta_t, alpha, theta) {
        Ok(r) => r,
        Err(e) => {
            row.flags.push(e.kind().to_string());
            return row;
        }
    };
    match negativity_delta(&r) {
        Ok(d) => row.delta_neg = Some(d),
        Err(e) => row.flags.push(format!("delta_{}", e.kind())),
    }
    match CatState::from_rescaled(&r, 1.0).and_then(|s| eta_negative_flux(&s, params, None)) {
        Ok(f) => row.eta_neg_flux = Some(f.negative),
        Err(e) => row.flags.push(format!("eta_{}", e.kind())),
    }
    row
}

/// `Delta` and the negative flux of `eta` for every `(delta_t, alpha)`, in
/// that row-major order, with `sigma = 1`.
pub fn eta_vs_delta_scan(
    delta_t_values: &[f64],
    alpha_axis: &Axis,
    params: &EtaParams,
    p0_t: f64,
    theta: f64,
) -> Result<EtaScanTable> {
    params.validate()?;
    alpha_axis.validate("alpha")?;
    let points: Vec<(f64, f64)> = delta_t_values
        .iter()
        .flat_map(|&d| alpha_axis.values().into_iter().map(move |a| (d, a)))
        .collect();
    let rows = crate::par_map(&points, |&(d, a)| eta_row(d, a, p0_t, theta, params));
    Ok(EtaScanTable {
        params: *params,
        p0_t,
        theta,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_limits() {
        let k = EtaParams::new(7.0, 9.0).unwrap();
        assert!((delta_kernel(0.0, &k) + 2.0 / PI).abs() < 1e-15);
        assert!((delta_kernel(1e-9, &k) + 2.0 / PI).abs() < 1e-12);
        let x = 1.0;
        assert!((delta_kernel(x, &k) - (7f64.sin() - 9f64.sin()) / PI).abs() < 1e-15);
        for x in [0.3, 1.7, 25.0] {
            assert_eq!(delta_kernel(x, &k), delta_kernel(-x, &k));
        }
        let same = EtaParams {
            p1: 4.0,
            p2: 4.0,
            flip_sign: false,
        };
        assert_eq!(delta_kernel(0.7, &same), 0.0);
        assert!(EtaParams::new(4.0, 4.0).is_err());
    }

    #[test]
    fn kernel_series_is_continuous() {
        let k = EtaParams::new(7.0, 9.0).unwrap();
        let z = 1e-3 / 9.0;
        let below = delta_kernel(z * (1.0 - 1e-9), &k);
        let above = delta_kernel(z * (1.0 + 1e-9), &k);
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn momentum_route_matches_position_quadrature() {
        let k = EtaParams::new(7.0, 9.0).unwrap();
        let st = CatState::new(1.0, 3.0, 10.0, 2.0, PI).unwrap();
        for t in [-1.3, -0.2, 0.0, 0.05, 0.7, 2.0] {
            let a = eta_complex(&st, t, &k).unwrap();
            let b = eta_position_quadrature(&st, t, &k).unwrap();
            assert!((a.re - b).abs() < 1e-10, "t={t}: {} vs {b}", a.re);
            assert!(a.im.abs() < 1e-12);
        }
        let wide = CatState::new(2.5, 1.2, 4.0, 0.7, 1.0).unwrap();
        let k = EtaParams::new(3.0, 2.0).unwrap();
        for t in [-3.0, 0.4, 5.0] {
            let a = eta(&wide, t, &k).unwrap();
            let b = eta_position_quadrature(&wide, t, &k).unwrap();
            assert!((a - b).abs() < 1e-10, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn flip_negates() {
        let k = EtaParams::new(7.0, 9.0).unwrap();
        let f = EtaParams { flip_sign: true, ..k };
        assert_eq!(delta_kernel(0.4, &k), -delta_kernel(0.4, &f));
    }
}
