//! One function per subcommand. Each computes, then writes the enabled
//! formats through `Output`.

use std::fmt::Write as _;

use backflow_core::backflow::{beta_rescaled, compute_beta, scan_beta_delta, ScanRow, ScanTable};
use backflow_core::dynamics::{current_trace, default_window, flux_f, probability_p};
use backflow_core::eta::eta_vs_delta_scan;
use backflow_core::phase_space::{negativity_delta, GridSpec, PhaseSpaceGrid};
use backflow_core::smoothing::{
    clamp_to_domain, negative_current_depth, s_beta, s_scan, s_scan_csv, smoothed_distribution, thermal_to_s,
    SmoothingSpec, DEPTH_TOL,
};
use backflow_core::states::{CatState, RescaledParams};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Format, LabeledState, PanelKind, RunConfig, ScanVar};
use crate::svg::{render, ColorMap, Item, Panel};
use crate::{warn, Failure, Output};

type Res = Result<(), Failure>;

fn state_of(s: &LabeledState) -> Result<CatState, Failure> {
    Ok(s.spec().to_state()?)
}

fn title(cfg: &RunConfig, fallback: &str) -> String {
    cfg.title.clone().unwrap_or_else(|| fallback.to_string())
}

/// Maximal runs of negative samples, as `[first, last]` sample times.
fn negative_runs(times: &[f64], values: &[f64]) -> Vec<[f64; 2]> {
    let mut runs = Vec::new();
    let mut start = None;
    for (k, (&t, &v)) in times.iter().zip(values).enumerate() {
        match (v < 0.0, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push([times[s], times[k - 1]]);
                start = None;
            }
            _ => {}
        }
        if k + 1 == times.len() {
            if let Some(s) = start {
                runs.push([times[s], t]);
            }
        }
    }
    runs
}

pub fn trace(cfg: &RunConfig, out: &mut Output) -> Res {
    let opts = &cfg.trace;
    let states = cfg.all_states();
    let many = states.len() > 1;
    let mut summaries = Vec::new();
    let mut currents = Panel::new("current", "t~", "j~");
    let mut single = Panel::new("probability and current", "t~", "");
    let mut global_min = f64::INFINITY;
    for (k, ls) in states.iter().enumerate() {
        let state = state_of(ls)?;
        let window = opts.window.unwrap_or_else(|| default_window(&state));
        let tr = current_trace(&state, window, opts.n_samples)?;
        let probs = tr
            .times
            .par_iter()
            .map(|&t| probability_p(&state, state.time_from_rescaled(t)))
            .collect::<Result<Vec<f64>, _>>()?;

        let mut csv = String::from("t_tilde,P,j_tilde\n");
        for ((t, p), j) in tr.times.iter().zip(&probs).zip(&tr.values) {
            let _ = writeln!(csv, "{t},{p},{j}");
        }
        let name = if many { format!("trace_{k}.csv") } else { "trace.csv".into() };
        out.write(Format::Csv, &name, csv)?;

        let (imin, jmin) = tr.minimum().unwrap_or((0, f64::NAN));
        global_min = global_min.min(jmin);
        summaries.push(json!({
            "label": ls.label(),
            "state": ls.spec(),
            "window": [window.0, window.1],
            "n_samples": tr.times.len(),
            "j_min": jmin,
            "t_at_j_min": tr.times[imin],
            "negative_intervals": negative_runs(&tr.times, &tr.values),
        }));

        let jt: Vec<(f64, f64)> = tr.times.iter().copied().zip(tr.values.iter().copied()).collect();
        if many {
            currents.line(jt, k, Some(ls.label()));
        } else {
            let pt: Vec<(f64, f64)> = tr.times.iter().copied().zip(probs.iter().copied()).collect();
            single.line(pt, 0, Some("P".into()));
            // The plot shows the physical current j = j_tilde / sigma^2, scaled up.
            let k = opts.current_scale / (ls.sigma * ls.sigma);
            let scaled = jt.iter().map(|&(t, j)| (t, k * j)).collect();
            single.line(scaled, 1, Some(format!("{} x j", opts.current_scale)));
        }
    }
    out.write_json("trace.json", &json!({ "traces": summaries }))?;

    if out.wants(Format::Svg) {
        let mut panel = if many { currents } else { single };
        panel.fit();
        let (x0, x1) = panel.x_range;
        panel.items.push(Item::Line {
            points: vec![(x0, 0.0), (x1, 0.0)],
            color: "#888888".into(),
            dash: Some("1 3".into()),
            label: None,
        });
        if many && global_min.is_finite() {
            panel.items.push(Item::Line {
                points: vec![(x0, global_min), (x1, global_min)],
                color: "#000000".into(),
                dash: Some("4 4".into()),
                label: Some("global minimum".into()),
            });
        }
        out.write(Format::Svg, "trace.svg", render(&title(cfg, "trace"), &[panel], 1))?;
    }
    Ok(())
}

pub fn backflow(cfg: &RunConfig, out: &mut Output) -> Res {
    let ls = &cfg.all_states()[0];
    let state = state_of(ls)?;
    let r = state.rescaled();
    let res = compute_beta(&state, cfg.backflow.window)?;
    // F(t1, t2) from P, independent of the lobe bookkeeping behind beta.
    let flux = if res.t1 < res.t2 { flux_f(&state, res.t1, res.t2)?.flux } else { 0.0 };
    let delta = if cfg.backflow.with_delta { Some(negativity_delta(&r)?) } else { None };
    let threshold = if (r.theta - std::f64::consts::PI).abs() < 1e-12 {
        backflow_core::backflow::backflow_threshold_alpha(r.delta_t, r.p0_t).ok()
    } else {
        None
    };
    let summary = json!({
        "state": ls.spec(),
        "beta": res.beta,
        "t1": res.t1,
        "t2": res.t2,
        "tail_limited": res.tail_limited,
        "flux_check": flux,
        "flux_check_error": (flux + res.beta).abs(),
        "delta_neg": delta,
        "beta_le_delta": delta.map(|d| res.beta <= d),
        "sudden_death_alpha": threshold,
    });
    out.write_json("backflow.json", &summary)?;
    let mut csv = String::from("beta,t1,t2,tail_limited,flux_check,delta_neg\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        res.beta,
        res.t1,
        res.t2,
        res.tail_limited,
        flux,
        delta.map_or("NaN".to_string(), |d| d.to_string())
    );
    out.write(Format::Csv, "backflow.csv", csv)?;

    if out.wants(Format::Svg) {
        let window = cfg.backflow.window.unwrap_or_else(|| default_window(&state));
        let tr = current_trace(&state, window, 1601)?;
        let mut p = Panel::new(format!("beta = {:.6}", res.beta), "t~", "j~");
        p.line(tr.times.iter().copied().zip(tr.values.iter().copied()).collect(), 0, Some("j".into()));
        p.fit();
        if res.t1 < res.t2 {
            let (y0, y1) = p.y_range;
            p.items.insert(
                0,
                Item::Polygon {
                    points: vec![(res.t1, y0), (res.t2, y0), (res.t2, y1), (res.t1, y1)],
                    fill: "#d62728".into(),
                    opacity: 0.15,
                    stroke_dash: None,
                },
            );
        }
        out.write(Format::Svg, "backflow.svg", render(&title(cfg, "backflow"), &[p], 1))?;
    }
    Ok(())
}

fn flagged_warning(what: &str, rows: usize) {
    if rows > 0 {
        warn(format!("{what}: {rows} rows flagged; see the flags column"));
    }
}

pub fn scan(cfg: &RunConfig, out: &mut Output) -> Res {
    let opts = cfg.scan.as_ref().expect("validated");
    let single = opts.panels.len() == 1 && opts.panels[0].series.len() == 1;
    let mut panels_json = Vec::new();
    let mut svg_panels = Vec::new();
    for (pi, panel) in opts.panels.iter().enumerate() {
        let mut series_json = Vec::new();
        let mut tables = Vec::new();
        for (si, series) in panel.series.iter().enumerate() {
            let table = scan_beta_delta(&series.axes)?;
            flagged_warning(&format!("panel {pi} series {si}"), table.flagged());
            let name = if single { "scan.csv".into() } else { format!("scan_{pi}_{si}.csv") };
            out.write(Format::Csv, &name, table.to_csv())?;
            series_json.push(json!({
                "label": series.label,
                "axes": series.axes,
                "rows": table.rows,
                "argmax": table.argmax_beta(),
            }));
            tables.push(table);
        }
        panels_json.push(json!({ "title": panel.title, "kind": panel.kind, "series": series_json }));
        svg_panels.push(scan_panel(panel.kind, panel.x, &panel.title, &panel.series, &tables));
    }
    out.write_json("scan.json", &json!({ "panels": panels_json }))?;
    let cols = svg_panels.len().min(2);
    out.write(Format::Svg, "scan.svg", render(&title(cfg, "scan"), &svg_panels, cols))?;
    Ok(())
}

fn scan_panel(
    kind: PanelKind,
    x: Option<ScanVar>,
    name: &str,
    series: &[crate::config::ScanSeries],
    tables: &[ScanTable],
) -> Panel {
    match kind {
        PanelKind::Heatmap => {
            let t = &tables[0];
            let (a, d) = (t.axes.alpha, t.axes.delta_t);
            let values: Vec<f64> = t.rows.iter().map(|r| r.beta.unwrap_or(f64::NAN)).collect();
            let max = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
            let ha = 0.5 * (a.end - a.start) / (a.n - 1) as f64;
            let hd = 0.5 * (d.end - d.start) / (d.n - 1) as f64;
            let mut p = Panel::new(format!("{name} (max beta {max:.5})"), "alpha", "delta~");
            p.x_range = (a.start - ha, a.end + ha);
            p.y_range = (d.start - hd, d.end + hd);
            p.items.push(Item::Cells {
                x_range: p.x_range,
                y_range: p.y_range,
                nx: a.n,
                ny: d.n,
                values,
                map: ColorMap::Sequential { min: 0.0, max },
            });
            p
        }
        PanelKind::Lines | PanelKind::Parametric => {
            let x_label = match (kind, x) {
                (PanelKind::Lines, Some(v)) => v.name(),
                _ => "Delta",
            };
            let mut p = Panel::new(name, x_label, "beta");
            for (k, (s, t)) in series.iter().zip(tables).enumerate() {
                let pts = t.rows.iter().filter_map(|r: &ScanRow| {
                    let b = r.beta?;
                    let xv = match (kind, x) {
                        (PanelKind::Lines, Some(v)) => v.pick(r.alpha, r.delta_t, r.p0_t, r.theta),
                        _ => r.delta_neg?,
                    };
                    Some((xv, b))
                });
                p.line(pts.collect(), k, s.label.clone());
            }
            p.fit();
            p
        }
    }
}

pub fn smooth(cfg: &RunConfig, out: &mut Output) -> Res {
    let opts = &cfg.smooth;
    let states = cfg.all_states();
    let s_values = opts.s.values();
    let many = states.len() > 1;
    let mut curves = Panel::new("beta under smoothing", "s", "beta(s)");
    let mut depth_json = Vec::new();
    for (k, ls) in states.iter().enumerate() {
        let r = ls.spec().rescaled();
        let rows = s_scan(&r, &s_values, opts.ordering);
        let flagged = rows.iter().filter(|r| !r.flags.is_empty()).count();
        flagged_warning(&format!("state {k}"), flagged);
        let name = if many { format!("smooth_{k}.csv") } else { "smooth.csv".into() };
        out.write(Format::Csv, &name, s_scan_csv(&rows))?;
        curves.line(
            rows.iter().filter_map(|row| Some((row.s, row.beta_s?))).collect(),
            k,
            Some(ls.label()),
        );
        let depth = negative_current_depth(&r, opts.depth_tol, opts.ordering)?;
        let thermal = opts
            .thermal
            .iter()
            .map(|c| -> Result<Value, Failure> {
                let raw = thermal_to_s(c)?;
                let (spec, clamped) = clamp_to_domain(raw);
                let b = s_beta(&r, spec, None, opts.ordering)?.beta;
                Ok(json!({ "channel": c, "s": raw, "clamped": clamped, "beta_s": b }))
            })
            .collect::<Result<Vec<_>, _>>()?;
        depth_json.push(json!({
            "label": ls.label(),
            "state": ls.spec(),
            "s_m": depth.s_m,
            "flag": depth.flag,
            "bisection": depth.trace,
            "thermal": thermal,
        }));
    }

    let mut scans_json = Vec::new();
    let mut depth_panels = Vec::new();
    for (k, ds) in opts.depth_scans.iter().enumerate() {
        let points = ds.axes.points();
        let rows: Vec<(f64, f64, Vec<String>)> = points
            .par_iter()
            .map(|&[alpha, delta_t, p0_t, theta]| depth_point(alpha, delta_t, p0_t, theta, opts))
            .collect();
        let mut csv = String::from("alpha,delta_t,p0_t,theta,beta,s_m,flags\n");
        let mut bs = Vec::new();
        let mut ds_pts = Vec::new();
        for (pt, (b, s_m, flags)) in points.iter().zip(&rows) {
            let _ = writeln!(csv, "{},{},{},{},{b},{s_m},{}", pt[0], pt[1], pt[2], pt[3], flags.join(";"));
            let xv = ds.x.pick(pt[0], pt[1], pt[2], pt[3]);
            bs.push((xv, *b));
            ds_pts.push((xv, *s_m));
        }
        // Depth flags describe the point; only computation failures warrant a warning.
        let failed = rows.iter().filter(|r| !r.0.is_finite() || !r.1.is_finite()).count();
        flagged_warning(&format!("depth scan {k}"), failed);
        out.write(Format::Csv, &format!("depth_scan_{k}.csv"), csv)?;
        scans_json.push(json!({
            "title": ds.title,
            "axes": ds.axes,
            "rows": points.iter().zip(&rows).map(|(p, (b, s, f))| json!({
                "alpha": p[0], "delta_t": p[1], "p0_t": p[2], "theta": p[3], "beta": b, "s_m": s, "flags": f,
            })).collect::<Vec<_>>(),
        }));
        let bmax = bs.iter().map(|p| p.1).filter(|v| v.is_finite()).fold(0.0, f64::max);
        let smax = ds_pts.iter().map(|p| p.1).filter(|v| v.is_finite()).fold(0.0, f64::max);
        let scale = if bmax > 0.0 { smax / bmax } else { 1.0 };
        let mut p = Panel::new(ds.title.clone(), ds.x.name(), "s_m");
        p.line(ds_pts, 0, Some("negative current depth".into()));
        p.line(
            bs.into_iter().map(|(x, b)| (x, b * scale)).collect(),
            1,
            Some(format!("beta x {scale:.3}")),
        );
        p.fit();
        depth_panels.push(p);
    }

    out.write_json("depth.json", &json!({ "states": depth_json, "depth_scans": scans_json }))?;
    if out.wants(Format::Svg) {
        curves.fit();
        out.write(Format::Svg, "smooth.svg", render(&title(cfg, "smoothing"), &[curves], 1))?;
        if !depth_panels.is_empty() {
            let cols = depth_panels.len().min(2);
            out.write(Format::Svg, "depth.svg", render("negative current depth", &depth_panels, cols))?;
        }
    }
    Ok(())
}

/// `(beta, s_m, flags)` at one parameter point; failures become flags.
fn depth_point(alpha: f64, delta_t: f64, p0_t: f64, theta: f64, opts: &crate::config::SmoothOptions) -> (f64, f64, Vec<String>) {
    let mut flags = Vec::new();
    let r = match RescaledParams::new(p0_t, delta_t, alpha, theta) {
        Ok(r) => r,
        Err(e) => return (f64::NAN, f64::NAN, vec![e.kind().to_string()]),
    };
    let b = match beta_rescaled(&r, None) {
        Ok(b) => b.beta,
        Err(e) => {
            flags.push(format!("beta_{}", e.kind()));
            f64::NAN
        }
    };
    let tol = if opts.depth_tol > 0.0 { opts.depth_tol } else { DEPTH_TOL };
    let s_m = match negative_current_depth(&r, tol, opts.ordering) {
        Ok(d) => {
            if let Some(f) = d.flag {
                flags.push(serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
            }
            d.s_m
        }
        Err(e) => {
            flags.push(format!("depth_{}", e.kind()));
            f64::NAN
        }
    };
    (b, s_m, flags)
}

pub fn eta(cfg: &RunConfig, out: &mut Output) -> Res {
    let e = cfg.eta.as_ref().expect("validated");
    let table = eta_vs_delta_scan(&e.delta_t, &e.alpha, &e.params, e.p0_t, e.theta)?;
    flagged_warning("eta scan", table.rows.iter().filter(|r| !r.flags.is_empty()).count());
    out.write(Format::Csv, "eta.csv", table.to_csv())?;
    let spearman: Vec<Value> = e
        .delta_t
        .iter()
        .map(|&d| json!({ "delta_t": d, "spearman": table.spearman_for(d) }))
        .collect();
    out.write_json(
        "eta.json",
        &json!({ "params": e.params, "p0_t": e.p0_t, "theta": e.theta, "rows": table.rows, "spearman": spearman }),
    )?;
    if out.wants(Format::Svg) {
        let mut p = Panel::new("negative flux of eta", "Delta", "eta negative flux");
        for (k, &d) in e.delta_t.iter().enumerate() {
            let pts = table
                .curve(d)
                .into_iter()
                .filter_map(|r| Some((r.delta_neg?, r.eta_neg_flux?)))
                .collect();
            p.line(pts, k, Some(format!("delta~ = {d}")));
        }
        p.fit();
        out.write(Format::Svg, "eta.svg", render(&title(cfg, "eta"), &[p], 1))?;
    }
    Ok(())
}

pub fn wigner(cfg: &RunConfig, out: &mut Output) -> Res {
    let ls = &cfg.all_states()[0];
    let state = state_of(ls)?;
    let r = state.rescaled();
    let w = &cfg.wigner;
    let spec = w.grid.unwrap_or_else(|| GridSpec::default_for(&r));
    let grid = if w.s == 0.0 {
        PhaseSpaceGrid::wigner(&r, &spec, w.t)?
    } else {
        let fw = smoothed_distribution(&r, SmoothingSpec::new(w.s)?)?;
        let t = w.t;
        PhaseSpaceGrid::sample(&spec, w.s, move |x, p| fw.value(x - p * t, p))?
    };
    let beta = compute_beta(&state, None)?;
    let delta = negativity_delta(&r)?;

    out.write(Format::Csv, "wigner.csv", grid.to_csv())?;
    out.write(Format::Bin, "wigner.bin", grid.to_binary())?;
    out.write_json(
        "wigner.json",
        &json!({
            "state": ls.spec(),
            "grid": spec,
            "t": w.t,
            "s": w.s,
            "min": grid.min(),
            "max_abs": grid.max_abs(),
            "volume": grid.volume(),
            "negative_volume_grid": grid.negative_volume(),
            "delta_neg": delta,
            "beta": beta.beta,
            "t1": beta.t1,
            "t2": beta.t2,
        }),
    )?;

    if out.wants(Format::Svg) {
        let sx = grid.nx.div_ceil(w.svg_max_cells);
        let sp = grid.np.div_ceil(w.svg_max_cells);
        let (nx, np) = (grid.nx.div_ceil(sx), grid.np.div_ceil(sp));
        let mut values = Vec::with_capacity(nx * np);
        for i in (0..grid.nx).step_by(sx) {
            for j in (0..grid.np).step_by(sp) {
                values.push(grid.get(i, j));
            }
        }
        // Cells are centred on the sampled nodes.
        let hx = 0.5 * (spec.x_range.1 - spec.x_range.0) / (grid.nx - 1) as f64 * sx as f64;
        let hp = 0.5 * (spec.p_range.1 - spec.p_range.0) / (grid.np - 1) as f64 * sp as f64;
        let x_last = spec.x_at((nx - 1) * sx);
        let p_last = spec.p_at((np - 1) * sp);
        let mut p = Panel::new(format!("W (s = {}), min {:.3e}", w.s, grid.min()), "x~", "p~");
        p.x_range = (spec.x_range.0 - hx, x_last + hx);
        p.y_range = (spec.p_range.0 - hp, p_last + hp);
        p.items.push(Item::Cells {
            x_range: p.x_range,
            y_range: p.y_range,
            nx,
            ny: np,
            values,
            map: ColorMap::Diverging { limit: grid.max_abs() },
        });
        if w.wedge && beta.t1 < beta.t2 {
            // Sector between p = -x / t1 and p = -x / t2 for p >= 0.
            let top = p.y_range.1.max(0.0);
            p.items.push(Item::Polygon {
                points: vec![(0.0, 0.0), (-top * beta.t1, top), (-top * beta.t2, top)],
                fill: "#000000".into(),
                opacity: 0.18,
                stroke_dash: Some("5 3".into()),
            });
        }
        out.write(Format::Svg, "wigner.svg", render(&title(cfg, "Wigner function"), &[p], 1))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::negative_runs;

    #[test]
    fn runs_cover_negative_samples() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let v = [1.0, -1.0, -2.0, 1.0, 1.0, -1.0];
        assert_eq!(negative_runs(&t, &v), vec![[1.0, 2.0], [5.0, 5.0]]);
        assert!(negative_runs(&t, &[1.0; 6]).is_empty());
    }
}
