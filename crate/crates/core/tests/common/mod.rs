#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_4, PI};

use backflow_core::states::{CatState, RescaledParams};
use backflow_core::Complex64;

pub fn fig1() -> CatState {
    CatState::from_rescaled(&fig1_rescaled(), 10.0).unwrap()
}

pub fn fig1_rescaled() -> RescaledParams {
    RescaledParams::new(3.0, 11.0, 2.0, FRAC_PI_4).unwrap()
}

/// Maximum-backflow state.
pub fn fig5_rescaled() -> RescaledParams {
    RescaledParams::new(3.0, 11.0, 1.9, PI).unwrap()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

pub fn simpson_c<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, n: usize) -> Complex64 {
    Complex64::new(simpson(|x| f(x).re, a, b, n), simpson(|x| f(x).im, a, b, n))
}

/// Wigner function of the cat state written out from the formula, in
/// rescaled variables.
pub fn wigner_formula(r: &RescaledParams, x: f64, p: f64) -> f64 {
    let (a, d, al, th) = (r.p0_t, r.delta_t, r.alpha, r.theta);
    let norm = PI * (1.0 + al * al + 2.0 * al * (-d * d / 2.0).exp() * th.cos());
    let g = |c: f64| (-2.0 * (p - c) * (p - c)).exp();
    (-x * x / 2.0).exp() * (al * al * g(a) + g(a + d) + 2.0 * al * (x * d - th).cos() * g(a + d / 2.0)) / norm
}

/// Momentum amplitude from the formula, independent of the library.
pub fn phi_formula(s: &CatState, p: f64) -> Complex64 {
    let s2 = s.sigma() * s.sigma();
    let dt = s.sigma() * s.delta();
    let den = 1.0 + s.alpha().powi(2) + 2.0 * s.alpha() * (-dt * dt / 2.0).exp() * s.theta().cos();
    let n = (2.0 * s2 / PI).powf(0.25) / den.sqrt();
    let up = (-(p - s.p0() - s.delta()).powi(2) * s2).exp();
    let lo = (-(p - s.p0()).powi(2) * s2).exp();
    n * (Complex64::new(up, 0.0) + Complex64::from_polar(s.alpha(), s.theta()) * lo)
}

/// `psi_t(x)` by Fourier inversion of the freely evolved momentum amplitude.
pub fn psi_fourier(s: &CatState, x: f64, t: f64) -> Complex64 {
    let w = 9.0 / s.sigma();
    let (lo, hi) = (s.p0() - w, s.p0() + s.delta() + w);
    let n = 4000 + (((hi - lo) * (x.abs() + hi.abs() * t.abs() + 1.0)) * 8.0) as usize;
    simpson_c(
        |p| phi_formula(s, p) * Complex64::from_polar(1.0, p * x - p * p * t / 2.0),
        lo,
        hi,
        n,
    ) / (2.0 * PI).sqrt()
}
