//! The backflow functional `beta = |inf_{t1<t2} [P(t2) - P(t1)]|`, the
//! sudden-death threshold and (alpha, delta_t, p0_t, theta) scans.
//!
//! `beta` is found from the current rather than from sampled `P`: every
//! zero of `j_t` in the window is bracketed and refined, the signed flux of
//! each lobe between consecutive zeros is integrated adaptively, and the
//! largest drawdown of the cumulative flux gives `beta` together with the
//! achieving interval. The extrema of `P` sit exactly at the zeros, so the
//! endpoints come out root-refined.

use serde::{Deserialize, Serialize};

use crate::dynamics::{auto_window, fringe_period, rescaled_current, CurrentRoute};
use crate::error::{invalid, Error, Result};
use crate::fringe::FringeWigner;
use crate::numerics::{golden_max, refine_minimum, refine_root, roots_seed_point, tolerance_or, Bracket, Quadrature};
use crate::phase_space::negativity_delta;
use crate::states::{CatState, RescaledParams};

/// Values of `beta` at or below this are attributed to the negative-momentum
/// tail rather than to genuine backflow.
pub const TAIL_THRESHOLD: f64 = 1e-6;

/// Absolute tolerance for lobe integrals.
pub const LOBE_TOL: f64 = 1e-13;

const SEEDS_PER_PERIOD: f64 = 24.0;
const MIN_SEEDS: usize = 4000;
const MAX_SEEDS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackflowResult {
    pub beta: f64,
    /// Achieving interval in rescaled time; `t1 == t2` when there is no drop.
    pub t1: f64,
    pub t2: f64,
    /// Index, among the negative lobes of the window in time order, of the
    /// lobe that closes the achieving interval.
    pub peak_index: usize,
    pub tail_limited: bool,
}

/// The current's zeros and the flux of each lobe between them.
#[derive(Debug, Clone, PartialEq)]
pub struct LobeDecomposition {
    /// Window start, interior zeros, window end.
    pub boundaries: Vec<f64>,
    /// `fluxes[i]` is the integral of the current over
    /// `[boundaries[i], boundaries[i + 1]]`.
    pub fluxes: Vec<f64>,
}

impl LobeDecomposition {
    /// Zeros of `f` on `window` and the signed lobe fluxes, with `period` the
    /// shortest expected oscillation period of `f`.
    pub fn new<F>(f: &F, window: (f64, f64), period: f64, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let (lo, hi) = window;
        let n = (((hi - lo) / period * SEEDS_PER_PERIOD).ceil() as usize).clamp(MIN_SEEDS, MAX_SEEDS);
        Self::with_seeds(f, window, n, period, tol)
    }

    /// As [`LobeDecomposition::new`] with an explicit number of seed samples.
    pub fn with_seeds<F>(f: &F, window: (f64, f64), n: usize, period: f64, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let (lo, hi) = window;
        let n = n.max(3);
        let ts: Vec<f64> = (0..n).map(|i| roots_seed_point(lo, hi, n, i)).collect();
        let vs = crate::par_map(&ts, |&t| f(t));
        let peak = vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        let mut brackets = crate::numerics::sign_changes(&ts, &vs);
        // A lobe narrower than the seed spacing shows up as a shallow local
        // extremum of the samples with no sign change.
        for i in 1..n - 1 {
            let (a, b, c) = (vs[i - 1], vs[i], vs[i + 1]);
            let shallow = b.abs() < 0.02 * peak;
            if shallow && b > 0.0 && b <= a && b <= c {
                let (tm, vm) = refine_minimum(f, ts[i - 1], ts[i + 1], 1e-14);
                if vm < 0.0 {
                    brackets.push(Bracket { lo: ts[i - 1], hi: tm });
                    brackets.push(Bracket { lo: tm, hi: ts[i + 1] });
                }
            } else if shallow && b < 0.0 && b >= a && b >= c {
                let (tm, vm) = golden_max(f, ts[i - 1], ts[i + 1], 1e-14);
                if vm > 0.0 {
                    brackets.push(Bracket { lo: ts[i - 1], hi: tm });
                    brackets.push(Bracket { lo: tm, hi: ts[i + 1] });
                }
            }
        }
        let mut roots: Vec<f64> = crate::par_map(&brackets, |b| refine_root(f, *b, 1e-15))
            .into_iter()
            .collect::<Result<_>>()?;
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

        let mut boundaries = Vec::with_capacity(roots.len() + 2);
        boundaries.push(lo);
        boundaries.extend(roots.into_iter().filter(|&r| r > lo && r < hi));
        boundaries.push(hi);

        let segments: Vec<(f64, f64)> = boundaries.windows(2).map(|w| (w[0], w[1])).collect();
        let quad = Quadrature::new(tol).with_max_panels(20_000);
        let fluxes = crate::par_map(&segments, |&(a, b)| {
            let k = (((b - a) / period).ceil() as usize).clamp(1, 4000);
            let pts: Vec<f64> = (0..=k).map(|j| a + (b - a) * j as f64 / k as f64).collect();
            quad.integrate_breaks(f, &pts).map(|r| r.value)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        Ok(LobeDecomposition { boundaries, fluxes })
    }

    /// Total flux of the negative lobes, as a non-negative number.
    pub fn negative_flux(&self) -> f64 {
        -self.fluxes.iter().filter(|&&q| q < 0.0).sum::<f64>()
    }

    /// Largest drawdown of the cumulative flux as `(beta, i, k)` with
    /// `boundaries[i]` and `boundaries[k]` the achieving endpoints. When
    /// `interior` is set, window edges are excluded.
    fn drawdown(&self, interior: bool) -> (f64, usize, usize) {
        let last = self.boundaries.len() - 1;
        let allowed = |i: usize| !interior || (i != 0 && i != last);
        let mut cum = 0.0;
        let mut best = (0.0, 0, 0);
        let mut running: Option<(f64, usize)> = None;
        for k in 0..=last {
            if k > 0 {
                cum += self.fluxes[k - 1];
            }
            if !allowed(k) {
                continue;
            }
            if let Some((m, i)) = running {
                if m - cum > best.0 {
                    best = (m - cum, i, k);
                }
            }
            if running.map_or(true, |(m, _)| cum > m) {
                running = Some((cum, k));
            }
        }
        best
    }
}

/// Drawdown differences at or below this level between the full window and
/// its interior are tail leakage, not a boundary-limited lobe.
const EDGE_SLACK: f64 = 1e-10;

fn beta_on_window<F>(f: &F, period: f64, window: (f64, f64), tol: f64) -> Result<(BackflowResult, bool)>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let lobes = LobeDecomposition::new(f, window, period, tol)?;
    let all = lobes.drawdown(false);
    let inner = lobes.drawdown(true);
    let (beta, i, k) = if all.0 - inner.0 <= EDGE_SLACK { inner } else { all };
    let last = lobes.boundaries.len() - 1;
    let tail_limited = beta <= TAIL_THRESHOLD;
    let touches = !tail_limited && (i == 0 || k == last);
    if beta <= 0.0 {
        return Ok((
            BackflowResult {
                beta: 0.0,
                t1: 0.0,
                t2: 0.0,
                peak_index: 0,
                tail_limited: true,
            },
            false,
        ));
    }
    let peak_index = lobes.fluxes[..k].iter().filter(|&&q| q < 0.0).count().saturating_sub(1);
    Ok((
        BackflowResult {
            beta,
            t1: lobes.boundaries[i],
            t2: lobes.boundaries[k],
            peak_index,
            tail_limited,
        },
        touches,
    ))
}

fn check_window(w: (f64, f64)) -> Result<()> {
    if !(w.0 < w.1) || !w.0.is_finite() || !w.1.is_finite() {
        return Err(invalid(format!("invalid time window ({}, {})", w.0, w.1)));
    }
    Ok(())
}

/// `beta` of a rescaled current `f(t_t)`. Without an explicit window the
/// automatic one is used. If the achieving interval touches the window, the
/// window is doubled once about its centre.
pub fn beta_from_current<F>(f: F, r: &RescaledParams, window: Option<(f64, f64)>, tol: f64) -> Result<BackflowResult>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    r.validate()?;
    let mut w = match window {
        Some(w) => {
            check_window(w)?;
            w
        }
        None => auto_window(&f, r),
    };
    let period = fringe_period(r);
    let (res, touches) = beta_on_window(&f, period, w, tol)?;
    if !touches {
        return Ok(res);
    }
    let (c, h) = (0.5 * (w.0 + w.1), w.1 - w.0);
    w = (c - h, c + h);
    let (res, touches) = beta_on_window(&f, period, w, tol)?;
    if touches {
        return Err(Error::WindowTooSmall { lo: w.0, hi: w.1 });
    }
    Ok(res)
}

/// `beta` of a state from its wave-function current; `window` is in
/// rescaled time.
pub fn compute_beta(state: &CatState, window: Option<(f64, f64)>) -> Result<BackflowResult> {
    beta_from_current(|t| rescaled_current(state, t), &state.rescaled(), window, tolerance_or(LOBE_TOL))
}

/// `beta` from the closed-form phase-space current, which depends on the
/// rescaled parameters only.
pub fn beta_rescaled(r: &RescaledParams, window: Option<(f64, f64)>) -> Result<BackflowResult> {
    beta_rescaled_via(r, window, CurrentRoute::Wigner)
}

pub fn beta_rescaled_via(r: &RescaledParams, window: Option<(f64, f64)>, route: CurrentRoute) -> Result<BackflowResult> {
    match route {
        CurrentRoute::Wigner => {
            let fw = FringeWigner::new(r)?;
            beta_from_current(|t| fw.current(t), r, window, tolerance_or(LOBE_TOL))
        }
        CurrentRoute::Wavefunction => compute_beta(&CatState::from_rescaled(r, 1.0)?, window),
    }
}

/// Amplitude `1 + delta_t / p0_t` beyond which, at `theta = pi`, the
/// current at `t = 0` is positive and the central backflow lobe is gone.
pub fn backflow_threshold_alpha(delta_t: f64, p0_t: f64) -> Result<f64> {
    if !(p0_t > 0.0) || !delta_t.is_finite() {
        return Err(invalid(format!("threshold needs p0_t > 0 and finite delta_t, got ({p0_t}, {delta_t})")));
    }
    Ok(1.0 + delta_t / p0_t)
}

/// Evenly spaced samples `start..=end`; `n = 1` gives `start` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Axis {
    pub fn fixed(v: f64) -> Self {
        Axis { start: v, end: v, n: 1 }
    }

    pub fn new(start: f64, end: f64, n: usize) -> Self {
        Axis { start, end, n }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.n == 0 || !self.start.is_finite() || !self.end.is_finite() {
            return Err(invalid(format!("axis {name} needs finite bounds and n >= 1")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.start];
        }
        (0..self.n)
            .map(|i| self.start + (self.end - self.start) * i as f64 / (self.n - 1) as f64)
            .collect()
    }
}

/// Scan axes; rows run over alpha (slowest), then delta_t, p0_t, theta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAxes {
    pub alpha: Axis,
    pub delta_t: Axis,
    #[serde(default = "default_p0_axis")]
    pub p0_t: Axis,
    #[serde(default = "default_theta_axis")]
    pub theta: Axis,
}

fn default_p0_axis() -> Axis {
    Axis::fixed(3.0)
}

fn default_theta_axis() -> Axis {
    Axis::fixed(std::f64::consts::PI)
}

impl ScanAxes {
    /// Fixed `p0_t = 3`, `theta = pi`.
    pub fn alpha_delta(alpha: Axis, delta_t: Axis) -> Self {
        ScanAxes {
            alpha,
            delta_t,
            p0_t: default_p0_axis(),
            theta: default_theta_axis(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate("alpha")?;
        self.delta_t.validate("delta_t")?;
        self.p0_t.validate("p0_t")?;
        self.theta.validate("theta")
    }

    pub fn len(&self) -> usize {
        self.alpha.n * self.delta_t.n * self.p0_t.n * self.theta.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<[f64; 4]> {
        let mut out = Vec::with_capacity(self.len());
        for a in self.alpha.values() {
            for d in self.delta_t.values() {
                for p in self.p0_t.values() {
                    for t in self.theta.values() {
                        out.push([a, d, p, t]);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub delta_t: f64,
    pub p0_t: f64,
    pub theta: f64,
    pub beta: Option<f64>,
    pub delta_neg: Option<f64>,
    pub tail_limited: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTable {
    pub axes: ScanAxes,
    pub rows: Vec<ScanRow>,
}

fn opt_cell<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

impl ScanTable {
    pub const CSV_HEADER: &'static str = "alpha,delta_t,p0_t,theta,beta,delta_neg,tail_limited,flags";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.alpha,
                r.delta_t,
                r.p0_t,
                r.theta,
                opt_cell(r.beta),
                opt_cell(r.delta_neg),
                opt_cell(r.tail_limited),
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

    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| !r.flags.is_empty()).count()
    }

    /// Row with the largest `beta`.
    pub fn argmax_beta(&self) -> Option<&ScanRow> {
        self.rows
            .iter()
            .filter(|r| r.beta.is_some())
            .max_by(|a, b| a.beta.unwrap().total_cmp(&b.beta.unwrap()))
    }
}

fn scan_row(p: [f64; 4]) -> ScanRow {
    let [alpha, delta_t, p0_t, theta] = p;
    let mut row = ScanRow {
        alpha,
        delta_t,
        p0_t,
        theta,
        beta: None,
        delta_neg: None,
        tail_limited: None,
        t1: None,
        t2: None,
        flags: Vec::new(),
    };
    let r = match RescaledParams::new(p0_t, delta_t, alpha, theta) {
        Ok(r) => r,
        Err(e) => {
            row.flags.push(e.kind().to_string());
            return row;
        }
    };
    match beta_rescaled(&r, None) {
        Ok(b) => {
            row.beta = Some(b.beta);
            row.tail_limited = Some(b.tail_limited);
            row.t1 = Some(b.t1);
            row.t2 = Some(b.t2);
        }
        Err(e) => row.flags.push(format!("beta_{}", e.kind())),
    }
    match negativity_delta(&r) {
        Ok(d) => row.delta_neg = Some(d),
        Err(e) => row.flags.push(format!("delta_{}", e.kind())),
    }
    if let (Some(b), Some(d)) = (row.beta, row.delta_neg) {
        if b > d {
            row.flags.push("beta_exceeds_delta".into());
        }
    }
    row
}

/// `beta` and `Delta` at every axis point, in parallel, in row-major order.
/// Failures are recorded as row flags.
pub fn scan_beta_delta(axes: &ScanAxes) -> Result<ScanTable> {
    axes.validate()?;
    let rows = crate::par_map(&axes.points(), |&p| scan_row(p));
    Ok(ScanTable { axes: *axes, rows })
}

/// Result of a local search for the maximum of `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaMaximum {
    pub alpha: f64,
    pub delta_t: f64,
    pub result: BackflowResult,
}

/// Coordinate-wise golden-section search for the largest `beta` over
/// `(alpha, delta_t)` at fixed `p0_t`, `theta`, inside the box `start +/-
/// half_widths`.
pub fn refine_beta_maximum(
    start: (f64, f64),
    half_widths: (f64, f64),
    p0_t: f64,
    theta: f64,
    sweeps: usize,
) -> Result<BetaMaximum> {
    let beta_at = |a: f64, d: f64| -> f64 {
        RescaledParams::new(p0_t, d, a, theta)
            .and_then(|r| beta_rescaled(&r, None))
            .map_or(f64::NEG_INFINITY, |b| b.beta)
    };
    let (mut a, mut d) = start;
    let (a_lo, a_hi) = (start.0 - half_widths.0, start.0 + half_widths.0);
    let (d_lo, d_hi) = (start.1 - half_widths.1, start.1 + half_widths.1);
    for _ in 0..sweeps.max(1) {
        a = golden_max(|x| beta_at(x, d), a_lo.max(1e-6), a_hi, 1e-4).0;
        d = golden_max(|y| beta_at(a, y), d_lo.max(0.0), d_hi, 1e-3).0;
    }
    let r = RescaledParams::new(p0_t, d, a, theta)?;
    Ok(BetaMaximum {
        alpha: a,
        delta_t: d,
        result: beta_rescaled(&r, None)?,
    })
}
