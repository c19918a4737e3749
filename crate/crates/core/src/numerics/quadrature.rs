//! Adaptive Gauss-Kronrod (10/21 point) quadrature with a global error budget.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{invalid, Error, Result};

// 21-point Kronrod abscissae; odd indices are the 10-point Gauss nodes.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_703_213_400,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Absolute error estimate, always non-negative.
    pub error_estimate: f64,
    /// Number of integrand evaluations.
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Worst error first; ties broken by position so the order is total.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() || !error.is_finite() {
        return Err(invalid(format!("integrand is not finite on [{a}, {b}]")));
    }
    Ok(Panel { a, b, value, error })
}

/// Adaptive integrator configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(super::DEFAULT_ABS_TOL_1D)
    }
}

impl Quadrature {
    pub fn new(abs_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            rel_tol: 0.0,
            max_panels: 4000,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }

    pub fn integrate<F>(&self, f: F, a: f64, b: f64) -> Result<QuadratureResult>
    where
        F: Fn(f64) -> f64,
    {
        self.try_integrate_breaks(|x| Ok(f(x)), &[a, b])
    }

    /// Integrate over `[points[0], points[last]]` with the given interior
    /// break points used as initial panel boundaries.
    pub fn integrate_breaks<F>(&self, f: F, points: &[f64]) -> Result<QuadratureResult>
    where
        F: Fn(f64) -> f64,
    {
        self.try_integrate_breaks(|x| Ok(f(x)), points)
    }

    pub fn try_integrate<F>(&self, f: F, a: f64, b: f64) -> Result<QuadratureResult>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        self.try_integrate_breaks(f, &[a, b])
    }

    /// Fallible integrand version; the first integrand error aborts the run.
    ///
    /// Reversed limits integrate with a sign flip; equal limits give zero.
    pub fn try_integrate_breaks<F>(&self, mut f: F, points: &[f64]) -> Result<QuadratureResult>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        if !(self.abs_tol > 0.0 || self.rel_tol > 0.0) {
            return Err(invalid("quadrature tolerance must be positive"));
        }
        if points.len() < 2 {
            return Err(invalid("quadrature needs at least two points"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("quadrature limits must be finite"));
        }
        let (first, last) = (points[0], points[points.len() - 1]);
        if first == last {
            return Ok(QuadratureResult {
                value: 0.0,
                error_estimate: 0.0,
                evaluations: 1,
            });
        }
        let sign = if last < first { -1.0 } else { 1.0 };
        let mut pts: Vec<f64> = points.to_vec();
        if sign < 0.0 {
            pts.reverse();
        }
        let (lo, hi) = (pts[0], pts[pts.len() - 1]);
        pts.retain(|p| *p >= lo && *p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();

        let mut heap = BinaryHeap::new();
        let mut evaluations = 0;
        for w in pts.windows(2) {
            if w[1] > w[0] {
                heap.push(gk21(&mut f, w[0], w[1])?);
                evaluations += 21;
            }
        }
        let scale = pts[pts.len() - 1] - pts[0];
        loop {
            let (value, error) = totals(&heap);
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target {
                return Ok(QuadratureResult {
                    value: sign * value,
                    error_estimate: error,
                    evaluations,
                });
            }
            if heap.len() >= self.max_panels {
                return Err(Error::NonConvergence {
                    estimate: error,
                    tolerance: target,
                });
            }
            let worst = heap.pop().expect("non-empty panel set");
            let mid = 0.5 * (worst.a + worst.b);
            if (worst.b - worst.a) <= 64.0 * f64::EPSILON * scale.max(mid.abs()) {
                // Cannot subdivide any further; accept what remains.
                heap.push(Panel { error: 0.0, ..worst });
                let (value, error) = totals(&heap);
                if heap.iter().all(|p| p.error == 0.0) {
                    return Ok(QuadratureResult {
                        value: sign * value,
                        error_estimate: error,
                        evaluations,
                    });
                }
                continue;
            }
            heap.push(gk21(&mut f, worst.a, mid)?);
            heap.push(gk21(&mut f, mid, worst.b)?);
            evaluations += 42;
        }
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    // Sum in position order so results do not depend on heap layout.
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    panels
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

/// Integrate `f` over `[a, b]` to absolute tolerance `abs_tol`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64) -> f64,
{
    if !(a < b) {
        return Err(invalid(format!("integration limits must satisfy a < b, got [{a}, {b}]")));
    }
    Quadrature::new(abs_tol).integrate(f, a, b)
}

/// Iterated adaptive integral over a rectangle; `f(x, p)` with the inner
/// integral taken over `p`.
pub fn integrate_2d<F>(
    f: F,
    x_range: (f64, f64),
    p_range: (f64, f64),
    abs_tol: f64,
) -> Result<QuadratureResult>
where
    F: Fn(f64, f64) -> f64,
{
    let (x0, x1) = x_range;
    let (p0, p1) = p_range;
    if !(x0 < x1 && p0 < p1) {
        return Err(invalid("integration rectangle must have positive extent"));
    }
    let inner = Quadrature::new(0.1 * abs_tol / (x1 - x0));
    let outer = Quadrature::new(0.5 * abs_tol);
    let mut inner_error: f64 = 0.0;
    let mut inner_evals = 0;
    let res = outer.try_integrate(
        |x| {
            let r = inner.integrate(|p| f(x, p), p0, p1)?;
            inner_error = inner_error.max(r.error_estimate);
            inner_evals += r.evaluations;
            Ok(r.value)
        },
        x0,
        x1,
    )?;
    Ok(QuadratureResult {
        value: res.value,
        error_estimate: res.error_estimate + inner_error * (x1 - x0),
        evaluations: inner_evals.max(1),
    })
}
