//! Closed-form description of the (possibly Gaussian-smoothed) Wigner
//! function of a cat state in rescaled phase-space variables.
//!
//! Every distribution handled here has the form
//!
//! ```text
//! W(x, p) = K exp(-x^2 / 2u) [A(p) + C(p) cos(k x - theta)]
//! A(p) = alpha^2 g(p - p0) + g(p - p0 - delta),   C(p) = 2 alpha damp g(p - mid)
//! g(q) = exp(-q^2 / 2w)
//! ```
//!
//! Smoothing with a Gaussian of variance `vx` along x and `vp` along p only
//! changes `u = 1 + vx`, `w = 1/4 + vp`, the fringe wavenumber
//! `k = delta / u`, the fringe damping `damp = exp(-delta^2 vx / 2u)` and
//! the prefactor `K`. The unsmoothed Wigner function has `vx = vp = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::numerics::{refine_root, Bracket, Quadrature};
use crate::states::RescaledParams;

/// Half-width (in standard deviations) beyond which Gaussian factors are
/// below ~1e-18 of their peak.
const ENVELOPE_SDS: f64 = 9.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeWigner {
    pub params: RescaledParams,
    pub vx: f64,
    pub vp: f64,
    u: f64,
    w: f64,
    k: f64,
    damp: f64,
    prefactor: f64,
}

impl FringeWigner {
    /// The Wigner function of the pure cat state.
    pub fn new(params: &RescaledParams) -> Result<Self> {
        Self::smoothed(params, 0.0, 0.0)
    }

    /// Wigner function convolved with an independent Gaussian of variance
    /// `vx` in x and `vp` in p.
    pub fn smoothed(params: &RescaledParams, vx: f64, vp: f64) -> Result<Self> {
        params.validate()?;
        if !(vx >= 0.0 && vp >= 0.0) {
            return Err(crate::error::invalid("smoothing variances must be non-negative"));
        }
        let u = 1.0 + vx;
        let w = 0.25 + vp;
        let d = params.delta_t;
        Ok(FringeWigner {
            params: *params,
            vx,
            vp,
            u,
            w,
            k: d / u,
            damp: (-d * d * vx / (2.0 * u)).exp(),
            prefactor: 1.0 / (PI * params.denominator() * u.sqrt() * 2.0 * w.sqrt()),
        })
    }

    /// Convolve this distribution with a further Gaussian of variance `vx`
    /// in x and `vp` in p, transforming each term directly.
    pub fn convolve(&self, vx: f64, vp: f64) -> Result<Self> {
        if !(vx >= 0.0 && vp >= 0.0) {
            return Err(crate::error::invalid("smoothing variances must be non-negative"));
        }
        let (u, w) = (self.u + vx, self.w + vp);
        Ok(FringeWigner {
            params: self.params,
            vx: self.vx + vx,
            vp: self.vp + vp,
            u,
            w,
            k: self.k * self.u / u,
            damp: self.damp * (-self.k * self.k * self.u * vx / (2.0 * u)).exp(),
            prefactor: self.prefactor * (self.u / u).sqrt() * (self.w / w).sqrt(),
        })
    }

    /// Fringe wavenumber along x.
    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    /// Position variance of the Gaussian envelope.
    pub fn x_variance(&self) -> f64 {
        self.u
    }

    /// Momentum variance of each Gaussian term.
    pub fn p_variance(&self) -> f64 {
        self.w
    }

    fn g(&self, q: f64) -> f64 {
        (-q * q / (2.0 * self.w)).exp()
    }

    /// `(A(p), C(p))`, both including the prefactor `K`.
    pub fn envelopes(&self, p: f64) -> (f64, f64) {
        let r = &self.params;
        let a = r.alpha * r.alpha * self.g(p - r.p0_t) + self.g(p - r.upper());
        let c = 2.0 * r.alpha * self.damp * self.g(p - r.mid());
        (self.prefactor * a, self.prefactor * c)
    }

    pub fn value(&self, x: f64, p: f64) -> f64 {
        let (a, c) = self.envelopes(p);
        (-x * x / (2.0 * self.u)).exp() * (a + c * (self.k * x - self.params.theta).cos())
    }

    /// Half-width of the x-region outside which the distribution is negligible.
    pub fn x_half_width(&self) -> f64 {
        ENVELOPE_SDS * self.u.sqrt()
    }

    /// Momentum range outside which the distribution is negligible.
    pub fn p_support(&self) -> (f64, f64) {
        let r = &self.params;
        let h = ENVELOPE_SDS * self.w.sqrt();
        (r.p0_t - h, r.upper() + h)
    }

    /// `int dp p W(-p t, p)`: flux of the freely evolved distribution through
    /// `x = 0` at rescaled time `t`, in closed form.
    pub fn current(&self, t: f64) -> f64 {
        let r = &self.params;
        let (u, w) = (self.u, self.w);
        let big_a = t * t / (2.0 * u) + 1.0 / (2.0 * w);
        let root = (PI / big_a).sqrt();
        let gauss_term = |c: f64| {
            let b = c / w;
            let expo = -c * c * t * t / (2.0 * (u + w * t * t));
            root * b / (2.0 * big_a) * expo.exp()
        };
        let mut total = r.alpha * r.alpha * gauss_term(r.p0_t) + gauss_term(r.upper());
        if r.alpha > 0.0 && self.damp > 0.0 {
            let m = r.mid();
            let b = Complex64::new(m / w, -self.k * t);
            let expo = Complex64::new(
                -m * m * t * t / (2.0 * (u + w * t * t)) - self.k * self.k * t * t / (4.0 * big_a),
                -self.k * t * m / (2.0 * w * big_a),
            );
            let term = Complex64::from_polar(1.0, -r.theta) * root * b / (2.0 * big_a) * expo.exp();
            total += 2.0 * r.alpha * self.damp * term.re;
        }
        self.prefactor * total
    }

    /// Sub-intervals of `[lo, hi]` on which `W(., p)` is negative.
    pub fn negative_intervals(&self, p: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if !(lo < hi) {
            return out;
        }
        let (a, c) = self.envelopes(p);
        if !(c > a) {
            return out;
        }
        let theta = self.params.theta;
        if self.k == 0.0 {
            if a + c * theta.cos() < 0.0 {
                out.push((lo, hi));
            }
            return out;
        }
        // cos(phi) < -a/c  <=>  phi in (phi0, 2 pi - phi0) mod 2 pi.
        let phi0 = (-a / c).acos();
        let period = 2.0 * PI / self.k;
        let first = ((self.k * lo - theta - phi0) / (2.0 * PI)).floor() as i64 - 1;
        let last = ((self.k * hi - theta - phi0) / (2.0 * PI)).ceil() as i64 + 1;
        for n in first..=last {
            let start = (theta + phi0) / self.k + n as f64 * period;
            let end = (theta + 2.0 * PI - phi0) / self.k + n as f64 * period;
            let (s, e) = (start.max(lo), end.min(hi));
            if s < e {
                out.push((s, e));
            }
        }
        out
    }

    /// Momentum band where negativity is possible (`C > A`), as at most one
    /// interval: `ln A - ln C` is convex in p.
    pub fn negative_band(&self) -> Option<(f64, f64)> {
        let r = &self.params;
        if r.alpha == 0.0 || self.damp == 0.0 {
            return None;
        }
        let lw = |q: f64| -q * q / (2.0 * self.w);
        let log_gap = |p: f64| {
            let l1 = 2.0 * r.alpha.ln() + lw(p - r.p0_t);
            let l2 = lw(p - r.upper());
            let mx = l1.max(l2);
            let log_a = mx + ((l1 - mx).exp() + (l2 - mx).exp()).ln();
            let log_c = (2.0 * r.alpha * self.damp).ln() + lw(p - r.mid());
            log_a - log_c
        };
        let (lo, hi) = self.p_support();
        let n = 4001;
        let ps: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let vals: Vec<f64> = ps.iter().map(|&p| log_gap(p)).collect();
        let (imin, vmin) = vals
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        if vmin >= 0.0 {
            return None;
        }
        let left = (0..imin).rev().find(|&i| vals[i] >= 0.0);
        let right = (imin + 1..n).find(|&i| vals[i] >= 0.0);
        let edge = |i: usize, j: usize| {
            Bracket::new(ps[i.min(j)], ps[i.max(j)])
                .and_then(|b| refine_root(log_gap, b, 1e-13))
                .unwrap_or(ps[i])
        };
        let p_lo = left.map_or(lo, |i| edge(i, i + 1));
        let p_hi = right.map_or(hi, |i| edge(i - 1, i));
        Some((p_lo, p_hi))
    }

    /// Negative volume of `W` on the segment `x in [lo, hi]` at momentum `p`.
    pub fn negative_part_on(&self, p: f64, lo: f64, hi: f64) -> Result<f64> {
        let quad = Quadrature::new(1e-16).with_rel_tol(1e-12);
        let mut total = 0.0;
        for (s, e) in self.negative_intervals(p, lo, hi) {
            total -= quad.integrate(|x| self.value(x, p), s, e)?.value;
        }
        Ok(total.max(0.0))
    }

    /// `int dx W(x, p)` over `[lo, hi]`.
    pub fn integral_on(&self, p: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        let period = if self.k > 0.0 { 2.0 * PI / self.k } else { f64::INFINITY };
        let n = (((hi - lo).abs() / (0.5 * period)).ceil() as usize).clamp(1, 2000);
        let pts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        Ok(Quadrature::new(tol).integrate_breaks(|x| self.value(x, p), &pts)?.value)
    }

    /// `(1/2) int int (|W| - W)`, the volume of the negative part.
    pub fn negative_volume(&self, tol: f64) -> Result<f64> {
        let Some((p_lo, p_hi)) = self.negative_band() else {
            return Ok(0.0);
        };
        if !(p_lo < p_hi) {
            return Ok(0.0);
        }
        let l = self.x_half_width();
        let quad = Quadrature::new(tol).with_rel_tol(1e-9);
        let n = 8;
        let pts: Vec<f64> = (0..=n).map(|i| p_lo + (p_hi - p_lo) * i as f64 / n as f64).collect();
        let r = quad.try_integrate_breaks(|p| self.negative_part_on(p, -l, l), &pts)?;
        Ok(r.value.max(0.0))
    }

    /// Signed integral of `W` over the wedge swept through `x = 0` between
    /// rescaled times `t1 < t2`, restricted to `p >= 0`, as
    /// `(total, negative part)`.
    pub fn sector_volumes(&self, t1: f64, t2: f64, tol: f64) -> Result<(f64, f64)> {
        let (_, p_hi) = self.p_support();
        let p_hi = p_hi.max(0.0);
        if p_hi <= 0.0 || t1 == t2 {
            return Ok((0.0, 0.0));
        }
        let quad = Quadrature::new(tol);
        let n = 16;
        let pts: Vec<f64> = (0..=n).map(|i| p_hi * i as f64 / n as f64).collect();
        let inner_tol = 0.05 * tol / p_hi;
        let total = quad.try_integrate_breaks(|p| self.integral_on(p, -p * t2, -p * t1, inner_tol), &pts)?;
        let minus = quad.try_integrate_breaks(|p| self.negative_part_on(p, -p * t2, -p * t1), &pts)?;
        Ok((total.value, minus.value.max(0.0)))
    }
}
