//! JSON run configuration. Every section rejects unknown keys, and
//! `validate` checks ranges before any computation starts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use backflow_core::backflow::{Axis, ScanAxes};
use backflow_core::eta::EtaParams;
use backflow_core::phase_space::GridSpec;
use backflow_core::smoothing::{Ordering, ThermalChannel};
use backflow_core::states::{CatState, RescaledParams, StateSpec};
use serde::{Deserialize, Serialize};

use crate::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
    /// Raw phase-space grid, written by `wigner` only.
    Bin,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Csv, Format::Json, Format::Svg, Format::Bin];
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub states: Vec<LabeledState>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub formats: Option<Vec<Format>>,
    #[serde(default)]
    pub trace: TraceOptions,
    #[serde(default)]
    pub backflow: BackflowOptions,
    #[serde(default)]
    pub scan: Option<ScanOptions>,
    #[serde(default)]
    pub smooth: SmoothOptions,
    #[serde(default)]
    pub eta: Option<EtaOptions>,
    #[serde(default)]
    pub wigner: WignerOptions,
}

/// A state with an optional legend label.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledState {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "one")]
    pub sigma: f64,
    pub p0_t: f64,
    pub delta_t: f64,
    pub alpha: f64,
    pub theta: f64,
}

impl LabeledState {
    pub fn spec(&self) -> StateSpec {
        StateSpec {
            sigma: self.sigma,
            p0_t: self.p0_t,
            delta_t: self.delta_t,
            alpha: self.alpha,
            theta: self.theta,
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("alpha={}, delta={}", self.alpha, self.delta_t))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceOptions {
    /// Rescaled time window; automatic when absent.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Factor applied to the current in the plot only.
    #[serde(default = "ten")]
    pub current_scale: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            window: None,
            n_samples: default_samples(),
            current_scale: ten(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackflowOptions {
    #[serde(default)]
    pub window: Option<(f64, f64)>,
    #[serde(default = "yes")]
    pub with_delta: bool,
}

impl Default for BackflowOptions {
    fn default() -> Self {
        BackflowOptions {
            window: None,
            with_delta: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelKind {
    /// beta over the (alpha, delta_t) plane.
    Heatmap,
    /// beta against one scan variable.
    Lines,
    /// beta against the negativity Delta.
    Parametric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVar {
    Alpha,
    DeltaT,
    P0T,
    Theta,
}

impl ScanVar {
    pub fn name(self) -> &'static str {
        match self {
            ScanVar::Alpha => "alpha",
            ScanVar::DeltaT => "delta_t",
            ScanVar::P0T => "p0_t",
            ScanVar::Theta => "theta",
        }
    }

    pub fn pick(self, alpha: f64, delta_t: f64, p0_t: f64, theta: f64) -> f64 {
        match self {
            ScanVar::Alpha => alpha,
            ScanVar::DeltaT => delta_t,
            ScanVar::P0T => p0_t,
            ScanVar::Theta => theta,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanOptions {
    pub panels: Vec<ScanPanel>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanPanel {
    #[serde(default)]
    pub title: String,
    pub kind: PanelKind,
    /// Abscissa of a `lines` panel.
    #[serde(default)]
    pub x: Option<ScanVar>,
    pub series: Vec<ScanSeries>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSeries {
    #[serde(default)]
    pub label: Option<String>,
    pub axes: ScanAxes,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothOptions {
    /// Ordering parameters; a grid starting at 0 puts the unsmoothed beta first.
    #[serde(default = "default_s_axis")]
    pub s: Axis,
    #[serde(default)]
    pub ordering: Ordering,
    #[serde(default = "default_depth_tol")]
    pub depth_tol: f64,
    #[serde(default)]
    pub thermal: Vec<ThermalChannel>,
    /// Negative current depth and beta along parameter lines.
    #[serde(default)]
    pub depth_scans: Vec<DepthScan>,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        SmoothOptions {
            s: default_s_axis(),
            ordering: Ordering::default(),
            depth_tol: default_depth_tol(),
            thermal: Vec::new(),
            depth_scans: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthScan {
    #[serde(default)]
    pub title: String,
    pub x: ScanVar,
    pub axes: ScanAxes,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaOptions {
    pub params: EtaParams,
    pub delta_t: Vec<f64>,
    pub alpha: Axis,
    #[serde(default = "three")]
    pub p0_t: f64,
    #[serde(default = "pi")]
    pub theta: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerOptions {
    /// Rescaled phase-space grid; sized from the state when absent.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Rescaled time of the snapshot.
    #[serde(default)]
    pub t: f64,
    /// Ordering parameter of the plotted distribution.
    #[serde(default)]
    pub s: f64,
    #[serde(default = "yes")]
    pub wedge: bool,
    /// Cap on plotted cells per axis; the grid is strided down to it.
    #[serde(default = "default_svg_cells")]
    pub svg_max_cells: usize,
}

impl Default for WignerOptions {
    fn default() -> Self {
        WignerOptions {
            grid: None,
            t: 0.0,
            s: 0.0,
            wedge: true,
            svg_max_cells: default_svg_cells(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn three() -> f64 {
    3.0
}
fn ten() -> f64 {
    10.0
}
fn pi() -> f64 {
    PI
}
fn yes() -> bool {
    true
}
fn default_samples() -> usize {
    801
}
fn default_s_axis() -> Axis {
    Axis::new(0.0, -0.03, 31)
}
fn default_depth_tol() -> f64 {
    backflow_core::smoothing::DEPTH_TOL
}
fn default_svg_cells() -> usize {
    128
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// `state` followed by `states`, each with a label.
    pub fn all_states(&self) -> Vec<LabeledState> {
        let mut v = Vec::new();
        if let Some(s) = self.state {
            v.push(LabeledState {
                label: None,
                sigma: s.sigma,
                p0_t: s.p0_t,
                delta_t: s.delta_t,
                alpha: s.alpha,
                theta: s.theta,
            });
        }
        v.extend(self.states.iter().cloned());
        v
    }

    /// Checks everything the given command will use.
    pub fn validate(&self, cmd: Command) -> Result<(), String> {
        let states = self.all_states();
        let needs_state = matches!(cmd, Command::Trace | Command::Backflow | Command::Smooth | Command::Wigner);
        if needs_state && states.is_empty() {
            return Err("config needs `state` or a non-empty `states` list".into());
        }
        if matches!(cmd, Command::Backflow | Command::Wigner) && states.len() > 1 {
            return Err("backflow and wigner take a single state".into());
        }
        for s in &states {
            check_state(s)?;
        }
        if let Some(f) = &self.formats {
            if f.is_empty() {
                return Err("`formats` must not be empty".into());
            }
        }
        match cmd {
            Command::Trace => {
                let t = &self.trace;
                if t.n_samples < 16 || t.n_samples > 1_000_000 {
                    return Err(format!("trace.n_samples must be in [16, 1000000], got {}", t.n_samples));
                }
                check_window(t.window, "trace.window")?;
                if !(t.current_scale.is_finite() && t.current_scale > 0.0) {
                    return Err("trace.current_scale must be positive".into());
                }
            }
            Command::Backflow => check_window(self.backflow.window, "backflow.window")?,
            Command::Scan => {
                let scan = self.scan.as_ref().ok_or("scan command needs a `scan` section")?;
                if scan.panels.is_empty() {
                    return Err("scan.panels must not be empty".into());
                }
                for (k, p) in scan.panels.iter().enumerate() {
                    if p.series.is_empty() {
                        return Err(format!("scan.panels[{k}] has no series"));
                    }
                    for s in &p.series {
                        check_axes(&s.axes)?;
                    }
                    match p.kind {
                        PanelKind::Lines if p.x.is_none() => {
                            return Err(format!("scan.panels[{k}]: a lines panel needs `x`"));
                        }
                        PanelKind::Heatmap => {
                            let a = &p.series[0].axes;
                            if p.series.len() != 1 || a.alpha.n < 2 || a.delta_t.n < 2 || a.p0_t.n != 1 || a.theta.n != 1 {
                                return Err(format!(
                                    "scan.panels[{k}]: a heatmap needs one series varying alpha and delta_t only"
                                ));
                            }
                        }
                        _ => {}
                    }
                }
            }
            Command::Smooth => {
                let s = &self.smooth;
                s.s.validate("smooth.s").map_err(|e| e.to_string())?;
                if s.s.start.max(s.s.end) > 0.0 || s.s.start.min(s.s.end) < -1.0 {
                    return Err("smooth.s must lie in [-1, 0]".into());
                }
                if !(s.depth_tol > 0.0 && s.depth_tol < 0.5) {
                    return Err("smooth.depth_tol must be in (0, 0.5)".into());
                }
                for c in &s.thermal {
                    c.validate().map_err(|e| e.to_string())?;
                }
                for d in &s.depth_scans {
                    check_axes(&d.axes)?;
                }
            }
            Command::Eta => {
                let e = self.eta.as_ref().ok_or("eta command needs an `eta` section")?;
                e.params.validate().map_err(|e| e.to_string())?;
                if e.params.p1 <= 0.0 || e.params.p2 <= 0.0 {
                    return Err("eta.params p1 and p2 must be positive".into());
                }
                if e.delta_t.is_empty() {
                    return Err("eta.delta_t must not be empty".into());
                }
                e.alpha.validate("eta.alpha").map_err(|e| e.to_string())?;
                for &d in &e.delta_t {
                    for a in e.alpha.values() {
                        RescaledParams::new(e.p0_t, d, a, e.theta).map_err(|err| err.to_string())?;
                    }
                }
            }
            Command::Wigner => {
                let w = &self.wigner;
                if let Some(g) = &w.grid {
                    g.validate().map_err(|e| e.to_string())?;
                    if g.nx.saturating_mul(g.np) > 16_000_000 {
                        return Err("wigner.grid exceeds 16e6 points".into());
                    }
                }
                if !(-1.0..=0.0).contains(&w.s) {
                    return Err("wigner.s must lie in [-1, 0]".into());
                }
                if !w.t.is_finite() {
                    return Err("wigner.t must be finite".into());
                }
                if w.svg_max_cells < 8 {
                    return Err("wigner.svg_max_cells must be at least 8".into());
                }
            }
        }
        Ok(())
    }
}

fn check_state(s: &LabeledState) -> Result<CatState, String> {
    s.spec().to_state().map_err(|e| format!("state {}: {e}", s.label()))
}

fn check_window(w: Option<(f64, f64)>, name: &str) -> Result<(), String> {
    match w {
        Some((a, b)) if !(a < b && a.is_finite() && b.is_finite()) => Err(format!("{name} must satisfy lo < hi")),
        _ => Ok(()),
    }
}

fn check_axes(a: &ScanAxes) -> Result<(), String> {
    a.validate().map_err(|e| e.to_string())?;
    if a.len() > 1_000_000 {
        return Err("scan grid exceeds 1e6 points".into());
    }
    for [alpha, delta_t, p0_t, theta] in a.points() {
        RescaledParams::new(p0_t, delta_t, alpha, theta).map_err(|e| e.to_string())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_validate() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let plan = [
            ("fig1", Command::Trace),
            ("fig2", Command::Scan),
            ("fig3", Command::Trace),
            ("fig4", Command::Scan),
            ("fig5", Command::Wigner),
            ("fig6", Command::Smooth),
            ("fig7", Command::Scan),
            ("fig8", Command::Eta),
        ];
        for (name, cmd) in plan {
            let cfg = RunConfig::load(&dir.join(format!("{name}.json"))).unwrap();
            cfg.validate(cmd).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        for text in [
            r#"{"state": {"p0_t": 3, "delta_t": 11, "alpha": 2, "theta": 0, "beta": 1}}"#,
            r#"{"wigner": {"grid": {"x_range": [0, 1], "p_range": [0, 1], "nx": 8, "np": 8, "nz": 1}}}"#,
            r#"{"smooth": {"s": {"start": 0, "end": -1, "n": 3, "step": 1}}}"#,
            r#"{"eta": {"params": {"p1": 7, "p2": 9, "p3": 1}, "delta_t": [10], "alpha": {"start": 1, "end": 1, "n": 1}}}"#,
        ] {
            assert!(serde_json::from_str::<RunConfig>(text).is_err(), "{text}");
        }
    }

    #[test]
    fn ranges_are_checked_before_running() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"state": {"p0_t": 3, "delta_t": 11, "alpha": 2, "theta": 0}, "smooth": {"s": {"start": 0, "end": -2, "n": 3}}}"#,
        )
        .unwrap();
        assert!(cfg.validate(Command::Smooth).is_err());
        assert!(cfg.validate(Command::Backflow).is_ok());
        assert!(cfg.validate(Command::Scan).is_err());
    }
}
