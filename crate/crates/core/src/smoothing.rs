//! s-ordered smoothing of the Wigner function, the thermal-channel mapping
//! to `s`, the s-dependent current and backflow, and the negative current
//! depth `s_m`.
//!
//! Smoothing convolves the Wigner function with the isotropic Gaussian
//! `G(x, p, kappa) = exp(-(x^2 + p^2) / kappa) / (pi kappa)`, `kappa = -s`,
//! in the rescaled phase-space variables. Each axis gains variance
//! `kappa / 2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::backflow::{beta_from_current, BackflowResult, LOBE_TOL};
use crate::error::{invalid, Result};
use crate::fringe::FringeWigner;
use crate::numerics::tolerance_or;
use crate::states::RescaledParams;

/// An ordering parameter in the studied range `-1 <= s <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    s: f64,
}

impl SmoothingSpec {
    pub fn new(s: f64) -> Result<Self> {
        if !(-1.0..=0.0).contains(&s) {
            return Err(invalid(format!("ordering parameter s must lie in [-1, 0], got {s}")));
        }
        Ok(SmoothingSpec { s })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Kernel width `kappa = -s`.
    pub fn kappa(&self) -> f64 {
        -self.s
    }
}

/// Thermal damping channel: rate `gamma`, mean occupation `nbar`, time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalChannel {
    pub gamma: f64,
    pub nbar: f64,
    pub t: f64,
}

impl ThermalChannel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.nbar >= 0.0 && self.t >= 0.0)
            || !self.gamma.is_finite()
            || !self.nbar.is_finite()
            || !self.t.is_finite()
        {
            return Err(invalid("thermal channel needs gamma > 0, nbar >= 0, t >= 0"));
        }
        Ok(())
    }

    /// `tau = gamma t`.
    pub fn tau(&self) -> f64 {
        self.gamma * self.t
    }
}

/// `s_tau = -2 (2 nbar + 1) (e^{2 tau} - 1)`. The value is returned as is
/// and may fall below -1; see [`clamp_to_domain`].
pub fn thermal_to_s(channel: &ThermalChannel) -> Result<f64> {
    channel.validate()?;
    Ok(-2.0 * (2.0 * channel.nbar + 1.0) * (2.0 * channel.tau()).exp_m1())
}

/// Clamp `s` into `[-1, 0]`, reporting whether clamping happened.
pub fn clamp_to_domain(s: f64) -> (SmoothingSpec, bool) {
    let c = s.clamp(-1.0, 0.0);
    (SmoothingSpec { s: c }, c != s)
}

/// `G(x, p, kappa)`; NaN for `kappa <= 0`.
pub fn gaussian_kernel(x: f64, p: f64, kappa: f64) -> f64 {
    if !(kappa > 0.0) {
        return f64::NAN;
    }
    (-(x * x + p * p) / kappa).exp() / (PI * kappa)
}

/// The smoothed distribution as a closed-form fringe pattern.
pub fn smoothed_distribution(r: &RescaledParams, spec: SmoothingSpec) -> Result<FringeWigner> {
    let v = 0.5 * spec.kappa();
    FringeWigner::smoothed(r, v, v)
}

/// `W_0(x, p, s) = (W_0 * G(., ., -s))(x, p)` in rescaled variables.
pub fn smooth_wigner(r: &RescaledParams, x: f64, p: f64, spec: SmoothingSpec) -> Result<f64> {
    Ok(smoothed_distribution(r, spec)?.value(x, p))
}

/// Order of free evolution and smoothing when building the s-current.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Smooth the initial Wigner function, then shear it.
    #[default]
    ConvolveThenEvolve,
    /// Shear first, then smooth. For the flux through `x = 0` this amounts to
    /// averaging the current over an x-Gaussian, i.e. smoothing in x only.
    EvolveThenConvolve,
}

fn current_source(r: &RescaledParams, spec: SmoothingSpec, ordering: Ordering) -> Result<FringeWigner> {
    let v = 0.5 * spec.kappa();
    match ordering {
        Ordering::ConvolveThenEvolve => FringeWigner::smoothed(r, v, v),
        Ordering::EvolveThenConvolve => FringeWigner::smoothed(r, v, 0.0),
    }
}

/// `j_t(t_t, s) = int dp p W_t(0, p, s)` in rescaled units.
pub fn s_current(r: &RescaledParams, t: f64, spec: SmoothingSpec, ordering: Ordering) -> Result<f64> {
    Ok(current_source(r, spec, ordering)?.current(t))
}

/// Backflow of the s-current, computed exactly as for the plain current.
pub fn s_beta(
    r: &RescaledParams,
    spec: SmoothingSpec,
    window: Option<(f64, f64)>,
    ordering: Ordering,
) -> Result<BackflowResult> {
    let f = current_source(r, spec, ordering)?;
    beta_from_current(|t| f.current(t), r, window, tolerance_or(LOBE_TOL))
}

/// Negative volume of the smoothed distribution.
pub fn smoothed_negativity(r: &RescaledParams, spec: SmoothingSpec) -> Result<f64> {
    smoothed_distribution(r, spec)?.negative_volume(tolerance_or(crate::phase_space::NEGATIVITY_TOL))
}

/// `s_beta` above this counts as backflow in the depth bisection.
pub const DEPTH_BETA_THRESHOLD: f64 = 1e-12;

/// Default bisection tolerance in `s`.
pub const DEPTH_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthFlag {
    /// No backflow even at `s = 0`; `s_m = 0` by convention.
    NoBackflowAtZero,
    /// Backflow survives down to `s = -1`; `s_m = 1`.
    SurvivesToQ,
}

/// One bisection step: backflow present at `alive`, absent at `dead`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub dead: f64,
    pub alive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub s_m: f64,
    pub flag: Option<DepthFlag>,
    pub trace: Vec<BisectionStep>,
}

/// `s_m`: the smoothing strength `-s` at which backflow dies, by bisection
/// on `s in [-1, 0]` to `tol_s`.
pub fn negative_current_depth(r: &RescaledParams, tol_s: f64, ordering: Ordering) -> Result<DepthResult> {
    if !(tol_s > 0.0) {
        return Err(invalid(format!("depth tolerance must be positive, got {tol_s}")));
    }
    let alive = |s: f64| -> Result<bool> {
        Ok(s_beta(r, SmoothingSpec::new(s)?, None, ordering)?.beta > DEPTH_BETA_THRESHOLD)
    };
    if !alive(0.0)? {
        return Ok(DepthResult {
            s_m: 0.0,
            flag: Some(DepthFlag::NoBackflowAtZero),
            trace: Vec::new(),
        });
    }
    if alive(-1.0)? {
        return Ok(DepthResult {
            s_m: 1.0,
            flag: Some(DepthFlag::SurvivesToQ),
            trace: Vec::new(),
        });
    }
    let mut step = BisectionStep { dead: -1.0, alive: 0.0 };
    let mut trace = vec![step];
    while step.alive - step.dead > tol_s {
        let mid = 0.5 * (step.alive + step.dead);
        if alive(mid)? {
            step.alive = mid;
        } else {
            step.dead = mid;
        }
        trace.push(step);
    }
    Ok(DepthResult {
        s_m: -0.5 * (step.alive + step.dead),
        flag: None,
        trace,
    })
}

/// One point of an s-scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SRow {
    pub s: f64,
    pub beta_s: Option<f64>,
    pub flags: Vec<String>,
}

/// `beta(s)` over a list of ordering parameters; failures are flagged.
pub fn s_scan(r: &RescaledParams, s_values: &[f64], ordering: Ordering) -> Vec<SRow> {
    crate::par_map(s_values, |&s| {
        match SmoothingSpec::new(s).and_then(|spec| s_beta(r, spec, None, ordering)) {
            Ok(b) => SRow {
                s,
                beta_s: Some(b.beta),
                flags: Vec::new(),
            },
            Err(e) => SRow {
                s,
                beta_s: None,
                flags: vec![e.kind().to_string()],
            },
        }
    })
}

pub fn s_scan_csv(rows: &[SRow]) -> String {
    let mut out = String::from("s,beta_s\n");
    for row in rows {
        match row.beta_s {
            Some(b) => out.push_str(&format!("{},{}\n", row.s, b)),
            None => out.push_str(&format!("{},NaN\n", row.s)),
        }
    }
    out
}
