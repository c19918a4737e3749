//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use backflow_core::backflow::{beta_rescaled, compute_beta, refine_beta_maximum, scan_beta_delta, Axis, ScanAxes};
use backflow_core::dynamics::{current_j, flux_by_current, probability_p, psi_t, rescaled_current, CurrentRoute};
use backflow_core::eta::{eta_complex, eta_vs_delta_scan, EtaParams};
use backflow_core::phase_space::{negativity_delta, sector_flux, wigner_cat, wigner_numeric, Sector};
use backflow_core::smoothing::{
    negative_current_depth, s_beta, smooth_wigner, smoothed_negativity, Ordering, SmoothingSpec, DEPTH_TOL,
};
use backflow_core::states::{negative_momentum_mass, CatState, RescaledParams};
use common::{fig1, fig5_rescaled, psi_fourier, simpson, wigner_formula};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rp(p0_t: f64, delta_t: f64, alpha: f64, theta: f64) -> RescaledParams {
    RescaledParams::new(p0_t, delta_t, alpha, theta).unwrap()
}

fn beta_maximum() -> Outcome {
    let t = Instant::now();
    let m = refine_beta_maximum((1.9, 11.0), (0.4, 2.5), 3.0, PI, 3).unwrap();
    let b = m.result.beta;
    let secs = t.elapsed().as_secs_f64();
    outcome(
        (0.0060..=0.0066).contains(&b) && secs <= 300.0,
        format!("beta = {b:.6} at alpha = {:.4}, delta_t = {:.4}", m.alpha, m.delta_t),
    )
}

fn bound_chain() -> Outcome {
    let axes = ScanAxes::alpha_delta(Axis::new(1.5, 3.0, 10), Axis::new(5.0, 25.0, 10));
    let t = scan_beta_delta(&axes).unwrap();
    let mut violations = 0;
    let mut worst = 0.0f64;
    for r in &t.rows {
        match (r.beta, r.delta_neg) {
            (Some(b), Some(d)) if b >= 0.0 && b <= d && b < 0.041 => worst = worst.max(b / d),
            _ => violations += 1,
        }
    }
    outcome(
        violations == 0,
        format!("{} rows, {violations} violations, max beta/Delta = {worst:.4}", t.rows.len()),
    )
}

fn route_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_j = 0.0f64;
    for _ in 0..50 {
        let r = loop {
            let r = RescaledParams {
                p0_t: rng.gen_range(1.0..6.0),
                delta_t: rng.gen_range(0.0..25.0),
                alpha: rng.gen_range(0.0..5.0),
                theta: rng.gen_range(0.0..2.0 * PI),
            };
            if r.validate().is_ok() {
                break r;
            }
        };
        let s = CatState::from_rescaled(&r, rng.gen_range(0.5..20.0)).unwrap();
        let t = s.time_from_rescaled(rng.gen_range(-1.0..1.0));
        let sc = s.sigma() * s.sigma();
        let d = sc * (current_j(&s, t, CurrentRoute::Wavefunction) - current_j(&s, t, CurrentRoute::Wigner));
        worst_j = worst_j.max(d.abs());
    }
    let mut worst_f = 0.0f64;
    for _ in 0..10 {
        let r = rp(rng.gen_range(2.5..4.0), rng.gen_range(3.0..20.0), rng.gen_range(0.5..4.0), rng.gen_range(0.0..2.0 * PI));
        let s = CatState::from_rescaled(&r, 1.0).unwrap();
        let t1 = rng.gen_range(-0.5..0.4);
        let t2 = t1 + rng.gen_range(0.01..0.3);
        let a = flux_by_current(&s, t1, t2, 1e-12).unwrap();
        let b = sector_flux(&r, &Sector::new(t1, t2).unwrap()).unwrap();
        worst_f = worst_f.max((a - b).abs());
    }
    outcome(
        worst_j <= 1e-8 && worst_f <= 1e-6,
        format!("max |j_wf - j_wigner| = {worst_j:.2e} (50 samples), max |F_time - F_sector| = {worst_f:.2e} (10 samples)"),
    )
}

fn continuity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let h = 1e-4;
    let mut worst = 0.0f64;
    let states: Vec<CatState> = [rp(3.0, 11.0, 2.0, PI / 4.0), rp(3.0, 7.0, 2.0, PI), rp(4.0, 15.0, 3.0, 1.0), rp(2.5, 5.0, 1.0, 0.0)]
        .iter()
        .map(|r| CatState::from_rescaled(r, 1.0).unwrap())
        .collect();
    let mut peaks = Vec::new();
    for s in &states {
        let peak = (0..2001).map(|i| rescaled_current(s, -0.5 + i as f64 / 2000.0).abs()).fold(0.0, f64::max);
        peaks.push(peak);
    }
    for k in 0..200 {
        let idx = k % states.len();
        let s = &states[idx];
        let t = rng.gen_range(-0.5..0.5);
        let p = |dt: f64| probability_p(s, t + dt).unwrap();
        // Five-point central difference.
        let fd = (p(-2.0 * h) - 8.0 * p(-h) + 8.0 * p(h) - p(2.0 * h)) / (12.0 * h);
        let j = rescaled_current(s, t);
        let scale = j.abs().max(1e-2 * peaks[idx]);
        worst = worst.max((fd - j).abs() / scale);
    }
    outcome(worst <= 1e-6, format!("max relative |dP/dt - j| = {worst:.2e} over 200 samples"))
}

fn sigma_invariance() -> Outcome {
    let mut worst_b = 0.0f64;
    let mut worst_d = 0.0f64;
    for r in [fig5_rescaled(), rp(3.0, 11.0, 2.0, PI / 4.0), rp(3.0, 7.0, 2.0, PI)] {
        let a = CatState::from_rescaled(&r, 1.0).unwrap();
        let b = CatState::from_rescaled(&r, 20.0).unwrap();
        worst_b = worst_b.max((compute_beta(&a, None).unwrap().beta - compute_beta(&b, None).unwrap().beta).abs());
        worst_d = worst_d.max((negativity_delta(&a.rescaled()).unwrap() - negativity_delta(&b.rescaled()).unwrap()).abs());
    }
    outcome(
        worst_b <= 1e-8 && worst_d <= 1e-8,
        format!("max |d beta| = {worst_b:.2e}, max |d Delta| = {worst_d:.2e}"),
    )
}

fn sudden_death() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [5.0, 11.0, 20.0] {
        let a = 1.0 + d / 3.0 + 0.1;
        let r = rp(3.0, d, a, PI);
        let b = beta_rescaled(&r, None).unwrap().beta;
        let dl = negativity_delta(&r).unwrap();
        ok &= b <= 1e-6 && dl >= 0.01;
        parts.push(format!("delta_t={d}: beta={b:.1e}, Delta={dl:.4}"));
    }
    outcome(ok, parts.join("; "))
}

fn tail_control() -> Outcome {
    let m = negative_momentum_mass(&fig1());
    outcome(m <= 1e-8, format!("negative-momentum mass = {m:.3e}"))
}

fn smoothing_suite() -> Outcome {
    let states = [rp(3.0, 7.0, 2.0, PI), rp(3.0, 6.0, 2.0, PI), rp(3.0, 10.0, 3.0, PI)];
    let spec = |s| SmoothingSpec::new(s).unwrap();
    let ord = Ordering::ConvolveThenEvolve;
    let mut ok = true;
    let mut worst0 = 0.0f64;
    let mut worst_q = 0.0f64;
    let mut depths = Vec::new();
    let mut b0 = Vec::new();
    for r in &states {
        let plain = compute_beta(&CatState::from_rescaled(r, 1.0).unwrap(), None).unwrap().beta;
        let s0 = s_beta(r, spec(0.0), None, ord).unwrap().beta;
        worst0 = worst0.max((plain - s0).abs());
        b0.push(s0);
        worst_q = worst_q.max(s_beta(r, spec(-1.0), None, ord).unwrap().beta);
        let d = negative_current_depth(r, DEPTH_TOL, ord).unwrap();
        let width = d.trace.last().map_or(f64::INFINITY, |s| s.alive - s.dead);
        ok &= d.s_m > 0.0 && d.s_m < 1.0 && d.flag.is_none() && width <= DEPTH_TOL;
        depths.push(d.s_m);
        let neg: Vec<f64> = [0.0, -0.2, -0.4, -0.6, -0.8, -1.0]
            .iter()
            .map(|&s| smoothed_negativity(r, spec(s)).unwrap())
            .collect();
        ok &= neg.windows(2).all(|w| w[1] <= w[0]);
    }
    let ordered = b0[0] > b0[1] && b0[1] > b0[2];
    ok &= worst0 <= 1e-8 && worst_q <= 1e-9 && ordered;
    outcome(
        ok,
        format!(
            "|beta(0) - beta| = {worst0:.1e}, max beta(-1) = {worst_q:.1e}, s_m = [{:.4}, {:.4}, {:.4}], beta(0) = [{:.5}, {:.5}, {:.5}]",
            depths[0], depths[1], depths[2], b0[0], b0[1], b0[2]
        ),
    )
}

fn non_monotonicity() -> Outcome {
    let t = scan_beta_delta(&ScanAxes::alpha_delta(Axis::new(1.5, 10.0, 35), Axis::fixed(11.0))).unwrap();
    let pts: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.delta_neg.unwrap(), r.beta.unwrap())).collect();
    let (mut rising, mut falling) = (0, 0);
    for w in pts.windows(2) {
        let (dd, db) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        if db.abs() > 1e-9 {
            if dd * db > 0.0 {
                rising += 1;
            } else {
                falling += 1;
            }
        }
    }
    outcome(
        rising > 0 && falling > 0,
        format!("{rising} rising and {falling} falling segments of (Delta, beta) along alpha"),
    )
}

fn eta_pipeline() -> Outcome {
    let k = EtaParams::new(7.0, 9.0).unwrap();
    let t = eta_vs_delta_scan(&[10.0], &Axis::new(0.01, 5.0, 25), &k, 3.0, PI).unwrap();
    let rho = t.spearman_for(10.0).unwrap_or(f64::NAN);
    let mut worst_im = 0.0f64;
    for row in &t.rows {
        let s = CatState::from_rescaled(&rp(3.0, 10.0, row.alpha, PI), 1.0).unwrap();
        for i in 0..11 {
            let tt = -2.5 + 0.5 * i as f64;
            worst_im = worst_im.max(eta_complex(&s, tt, &k).unwrap().im.abs());
        }
    }
    let flagged = t.rows.iter().filter(|r| !r.flags.is_empty()).count();
    outcome(
        rho >= 0.9 && worst_im <= 1e-10 && flagged == 0,
        format!("Spearman = {rho:.4} over {} points, max |Im eta| = {worst_im:.1e}", t.rows.len()),
    )
}

fn oracle_equivalences() -> Outcome {
    let r = fig5_rescaled();
    let s = CatState::from_rescaled(&r, 1.0).unwrap();
    let mut worst_w = 0.0f64;
    for i in 0..41 {
        let x = -4.0 + 8.0 * i as f64 / 40.0;
        for j in 0..41 {
            let p = 0.0 + 17.0 * j as f64 / 40.0;
            let d = wigner_numeric(&s, x, p, 0.0).unwrap() - wigner_cat(&r, x, p).unwrap();
            worst_w = worst_w.max(d.abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let r7 = rp(3.0, 7.0, 2.0, PI);
    let kappa: f64 = 0.3;
    let h = 7.0 * (kappa / 2.0).sqrt();
    let mut worst_s = 0.0f64;
    for _ in 0..10 {
        let (x, p) = (rng.gen_range(-2.5..2.5), rng.gen_range(1.0..12.0));
        let oracle = simpson(
            |a| {
                simpson(
                    |b| backflow_core::smoothing::gaussian_kernel(a, b, kappa) * wigner_formula(&r7, x - a, p - b),
                    -h,
                    h,
                    600,
                )
            },
            -h,
            h,
            600,
        );
        let v = smooth_wigner(&r7, x, p, SmoothingSpec::new(-kappa).unwrap()).unwrap();
        worst_s = worst_s.max((v - oracle).abs());
    }
    let f1 = fig1();
    let mut worst_psi = 0.0f64;
    for _ in 0..30 {
        let x = rng.gen_range(-3.0..3.0) * f1.sigma();
        let t = f1.time_from_rescaled(rng.gen_range(-0.3..0.3));
        worst_psi = worst_psi.max((psi_t(&f1, x, t) - psi_fourier(&f1, x, t)).norm());
    }
    outcome(
        worst_w <= 1e-8 && worst_s <= 1e-6 && worst_psi <= 1e-8,
        format!("Wigner 41x41: {worst_w:.1e}, smoothing: {worst_s:.1e}, psi_t: {worst_psi:.1e}"),
    )
}

fn fig4_surface() -> Outcome {
    let axes = ScanAxes::alpha_delta(Axis::new(1.5, 3.0, 16), Axis::new(5.0, 25.0, 16));
    let t = scan_beta_delta(&axes).unwrap();
    let best = t.argmax_beta().unwrap();
    let (da, dd) = (1.5 / 15.0, 20.0 / 15.0);
    let ok = (best.alpha - 1.9).abs() <= da + 1e-12 && (best.delta_t - 11.0).abs() <= dd + 1e-12;
    outcome(
        ok && t.flagged() == 0,
        format!(
            "grid maximum beta = {:.6} at (alpha, delta_t) = ({:.3}, {:.3}); cell = ({da:.3}, {dd:.3})",
            best.beta.unwrap(),
            best.alpha,
            best.delta_t
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 beta_max reproduction", beta_maximum),
        ("2 bound chain 0 <= beta <= Delta, beta < 0.041", bound_chain),
        ("3 route equivalences", route_equivalences),
        ("4 continuity dP/dt = j", continuity),
        ("5 sigma invariance", sigma_invariance),
        ("6 sudden death", sudden_death),
        ("7 tail control", tail_control),
        ("8 smoothing suite", smoothing_suite),
        ("9 non-monotonic (Delta, beta) curve", non_monotonicity),
        ("10 eta pipeline", eta_pipeline),
        ("11 oracle equivalences", oracle_equivalences),
        ("12 coarse 16x16 surface maximum", fig4_surface),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{tag} [{name}] {} ({:.1} s)", o.detail, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("acceptance: {failed} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
