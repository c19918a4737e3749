//! The two-Gaussian cat state and its rescaled description.
//!
//! In momentum space the initial state is
//! `phi0(p) = N [exp(-(p - p0 - delta)^2 sigma^2) + alpha e^{i theta} exp(-(p - p0)^2 sigma^2)]`
//! with `hbar = m = 1`. Everything observable about backflow and Wigner
//! negativity depends on `sigma` only through `p0_t = sigma p0`,
//! `delta_t = sigma delta`, and the rescaled time `t_t = t / (m sigma^2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Threshold on the normalization denominator below which a state is
/// treated as the fully destructive (identically zero) superposition.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// `1 + alpha^2 + 2 alpha exp(-delta_t^2 / 2) cos(theta)`.
pub fn normalization_denominator(alpha: f64, delta_t: f64, theta: f64) -> f64 {
    1.0 + alpha * alpha + 2.0 * alpha * (-0.5 * delta_t * delta_t).exp() * theta.cos()
}

/// The sigma-independent parameters of a cat state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaledParams {
    pub p0_t: f64,
    pub delta_t: f64,
    pub alpha: f64,
    pub theta: f64,
}

impl RescaledParams {
    pub fn new(p0_t: f64, delta_t: f64, alpha: f64, theta: f64) -> Result<Self> {
        let r = RescaledParams {
            p0_t,
            delta_t,
            alpha,
            theta,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p0_t, self.delta_t, self.alpha, self.theta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(invalid("state parameters must be finite"));
        }
        if !(self.p0_t > 0.0) {
            return Err(invalid(format!("p0_t must be positive, got {}", self.p0_t)));
        }
        if self.delta_t < 0.0 {
            return Err(invalid(format!("delta_t must be non-negative, got {}", self.delta_t)));
        }
        if self.alpha < 0.0 {
            return Err(invalid(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        let d = self.denominator();
        if d <= DEGENERACY_EPS {
            return Err(Error::DegenerateState { denominator: d });
        }
        Ok(())
    }

    pub fn denominator(&self) -> f64 {
        normalization_denominator(self.alpha, self.delta_t, self.theta)
    }

    /// Momentum of the upper packet, `p0_t + delta_t`.
    pub fn upper(&self) -> f64 {
        self.p0_t + self.delta_t
    }

    /// Midpoint momentum where the interference fringes sit.
    pub fn mid(&self) -> f64 {
        self.p0_t + 0.5 * self.delta_t
    }

    /// Mean energy of the `sigma = 1` state, `<p^2>/2`.
    pub fn unit_energy(&self) -> f64 {
        let (a, b, m) = (self.p0_t, self.upper(), self.mid());
        let cross = 2.0 * self.alpha * self.theta.cos() * (-0.5 * self.delta_t * self.delta_t).exp();
        let second = (b * b + self.alpha * self.alpha * a * a + cross * m * m) / self.denominator() + 0.25;
        0.5 * second
    }
}

/// Cat-state description as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    #[serde(default = "unit")]
    pub sigma: f64,
    pub p0_t: f64,
    pub delta_t: f64,
    pub alpha: f64,
    pub theta: f64,
}

fn unit() -> f64 {
    1.0
}

impl StateSpec {
    pub fn rescaled(&self) -> RescaledParams {
        RescaledParams {
            p0_t: self.p0_t,
            delta_t: self.delta_t,
            alpha: self.alpha,
            theta: self.theta,
        }
    }

    pub fn to_state(&self) -> Result<CatState> {
        CatState::from_rescaled(&self.rescaled(), self.sigma)
    }
}

/// Normalized superposition of two Gaussian momentum packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatState {
    sigma: f64,
    p0: f64,
    delta: f64,
    alpha: f64,
    theta: f64,
    mass: f64,
    norm: f64,
}

impl CatState {
    pub fn new(sigma: f64, p0: f64, delta: f64, alpha: f64, theta: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        let rescaled = RescaledParams {
            p0_t: sigma * p0,
            delta_t: sigma * delta,
            alpha,
            theta,
        };
        rescaled.validate()?;
        let norm = (2.0 * sigma * sigma / PI).powf(0.25) / rescaled.denominator().sqrt();
        Ok(CatState {
            sigma,
            p0,
            delta,
            alpha,
            theta,
            mass: 1.0,
            norm,
        })
    }

    pub fn from_rescaled(r: &RescaledParams, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        Self::new(sigma, r.p0_t / sigma, r.delta_t / sigma, r.alpha, r.theta)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn p0(&self) -> f64 {
        self.p0
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn rescaled(&self) -> RescaledParams {
        RescaledParams {
            p0_t: self.sigma * self.p0,
            delta_t: self.sigma * self.delta,
            alpha: self.alpha,
            theta: self.theta,
        }
    }

    /// Physical time corresponding to a rescaled time.
    pub fn time_from_rescaled(&self, t_t: f64) -> f64 {
        t_t * self.mass * self.sigma * self.sigma
    }

    pub fn rescaled_time(&self, t: f64) -> f64 {
        t / (self.mass * self.sigma * self.sigma)
    }

    /// Relative amplitude of the lower packet, `alpha e^{i theta}`.
    pub(crate) fn lower_weight(&self) -> Complex64 {
        Complex64::from_polar(self.alpha, self.theta)
    }

    /// Packet centers (upper, lower) in momentum.
    pub(crate) fn centers(&self) -> [f64; 2] {
        [self.p0 + self.delta, self.p0]
    }

    /// Freely evolved position-space wave function of the unit-amplitude
    /// momentum Gaussian centered at `c`, with its x-derivative.
    ///
    /// `(2 pi)^{-1/2} int dp exp(ipx - ip^2 t/2m - (p-c)^2 sigma^2)`.
    pub(crate) fn packet(&self, c: f64, x: f64, t: f64) -> (Complex64, Complex64) {
        let s2 = self.sigma * self.sigma;
        let a = Complex64::new(s2, 0.5 * t / self.mass);
        let i = Complex64::i();
        // B^2/(4A) - c^2 sigma^2 with B = 2 c sigma^2 + i x, written without
        // the large cancelling terms.
        let num = i * (4.0 * c * s2 * x) - x * x - i * (2.0 * t * c * c * s2 / self.mass);
        let expo = num / (4.0 * a);
        let pref = (0.5 / a).sqrt();
        let value = pref * expo.exp();
        let b = Complex64::new(2.0 * c * s2, x);
        let deriv = value * i * b / (2.0 * a);
        (value, deriv)
    }

    /// Centers and position standard deviations of the two packets at time t.
    pub(crate) fn position_envelope(&self, t: f64) -> ([f64; 2], f64) {
        let s2 = self.sigma * self.sigma;
        let tau = 0.5 * t / self.mass;
        let std = (s2 * s2 + tau * tau).sqrt() / self.sigma;
        let c = self.centers();
        ([c[0] * t / self.mass, c[1] * t / self.mass], std)
    }
}

/// `N` from the closed form `(2 sigma^2/pi)^{1/4} / sqrt(1 + alpha^2 + 2 e^{-delta_t^2/2} alpha cos theta)`.
pub fn normalization_constant(state: &CatState) -> f64 {
    state.norm
}

/// Initial momentum amplitude.
pub fn phi0(state: &CatState, p: f64) -> Complex64 {
    let s2 = state.sigma * state.sigma;
    let [upper, lower] = state.centers();
    let g_up = (-(p - upper).powi(2) * s2).exp();
    let g_lo = (-(p - lower).powi(2) * s2).exp();
    state.norm * (Complex64::new(g_up, 0.0) + state.lower_weight() * g_lo)
}

/// Initial position amplitude, `(2 pi)^{-1/2} int dp e^{ipx} phi0(p)`.
pub fn psi0(state: &CatState, x: f64) -> Complex64 {
    let [upper, lower] = state.centers();
    let (g_up, _) = state.packet(upper, x, 0.0);
    let (g_lo, _) = state.packet(lower, x, 0.0);
    state.norm * (g_up + state.lower_weight() * g_lo)
}

/// Probability carried by negative momenta, `int_{-inf}^0 |phi0|^2 dp`.
pub fn negative_momentum_mass(state: &CatState) -> f64 {
    let r = state.rescaled();
    let s2 = std::f64::consts::SQRT_2;
    let cross = 2.0 * r.alpha * r.theta.cos() * (-0.5 * r.delta_t * r.delta_t).exp();
    let sum = libm::erfc(s2 * r.upper())
        + r.alpha * r.alpha * libm::erfc(s2 * r.p0_t)
        + cross * libm::erfc(s2 * r.mid());
    (0.5 * sum / r.denominator()).max(0.0)
}

/// `<p^2> / 2m` from the analytic second moment of `|phi0|^2`.
pub fn mean_energy(state: &CatState) -> f64 {
    state.rescaled().unit_energy() / (state.mass * state.sigma * state.sigma)
}

/// Width `sigma` at which the state with the given rescaled parameters has
/// mean energy `energy`. The energy scales as `sigma^-2`, so this is exact.
pub fn sigma_for_energy(rescaled: &RescaledParams, energy: f64) -> Result<f64> {
    rescaled.validate()?;
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(Error::Unattainable(energy));
    }
    let sigma = (rescaled.unit_energy() / energy).sqrt();
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Unattainable(energy));
    }
    Ok(sigma)
}
