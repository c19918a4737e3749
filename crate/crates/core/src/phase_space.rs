//! Wigner-function phase space of the cat state: closed form, numerical
//! transform, free shear, negativity volume and sector fluxes.
//!
//! Phase-space points use the rescaled variables `x_t = x / sigma` and
//! `p_t = sigma p`; the volume element is unchanged by the rescaling.

use std::f64::consts::PI;
use std::io::{self, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{position_support, psi_t};
use crate::error::{invalid, Result};
use crate::fringe::FringeWigner;
use crate::numerics::{tolerance_or, Quadrature};
use crate::states::{CatState, RescaledParams};

/// Closed-form Wigner function of the cat state at `t = 0`.
pub fn wigner_cat(r: &RescaledParams, x: f64, p: f64) -> Result<f64> {
    r.validate()?;
    let (a, d, alpha, theta) = (r.p0_t, r.delta_t, r.alpha, r.theta);
    let den = PI * (1.0 + alpha * alpha + 2.0 * alpha * (-0.5 * d * d).exp() * theta.cos());
    let bracket = alpha * alpha * (-2.0 * (p - a).powi(2)).exp()
        + (-2.0 * (p - a - d).powi(2)).exp()
        + 2.0 * alpha * (x * d - theta).cos() * (-2.0 * (p - a - 0.5 * d).powi(2)).exp();
    Ok((-0.5 * x * x).exp() * bracket / den)
}

/// Free-particle phase-space flow (unit mass): `(x + p t, p)`.
pub fn shear(point: (f64, f64), t: f64) -> (f64, f64) {
    (point.0 + point.1 * t, point.1)
}

/// Wigner function at rescaled time `t`, transported along the shear.
pub fn wigner_t(r: &RescaledParams, x: f64, p: f64, t: f64) -> Result<f64> {
    let (x0, p0) = shear((x, p), -t);
    wigner_cat(r, x0, p0)
}

/// `(1/2 pi) int dy psi_t*(x + y/2) psi_t(x - y/2) e^{ipy}` by quadrature,
/// in physical units. The imaginary part is returned as well; it vanishes
/// up to quadrature error.
pub fn wigner_numeric_complex(state: &CatState, x: f64, p: f64, t: f64) -> Result<Complex64> {
    let (lo, hi, std) = position_support(state, t, 12.0);
    let reach = (x - lo).abs().max((hi - x).abs());
    let y_max = 2.0 * reach;
    let period = 2.0 * PI / p.abs().max(1e-300);
    let step = (0.5 * std).min(0.5 * period);
    let n = ((2.0 * y_max / step).ceil() as usize).clamp(8, 4000);
    let pts: Vec<f64> = (0..=n).map(|i| -y_max + 2.0 * y_max * i as f64 / n as f64).collect();
    let integrand = |y: f64| {
        psi_t(state, x + 0.5 * y, t).conj() * psi_t(state, x - 0.5 * y, t) * Complex64::from_polar(1.0, p * y)
    };
    let quad = Quadrature::new(1e-13).with_max_panels(40_000);
    let re = quad.integrate_breaks(|y| integrand(y).re, &pts)?;
    let im = quad.integrate_breaks(|y| integrand(y).im, &pts)?;
    Ok(Complex64::new(re.value, im.value) / (2.0 * PI))
}

pub fn wigner_numeric(state: &CatState, x: f64, p: f64, t: f64) -> Result<f64> {
    Ok(wigner_numeric_complex(state, x, p, t)?.re)
}

/// Rectangular phase-space sampling specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nx: usize,
    pub np: usize,
}

impl GridSpec {
    /// `x_t` in `[-L, L]` with `L = 8 + 4 pi / delta_t` (fringe margin capped
    /// at `4 pi`), `p_t` in `[p0_t - 6, p0_t + delta_t + 6]`, 256 x 256.
    pub fn default_for(r: &RescaledParams) -> Self {
        let margin = if r.delta_t > 1.0 { 4.0 * PI / r.delta_t } else { 4.0 * PI };
        let l = 8.0 + margin;
        GridSpec {
            x_range: (-l, l),
            p_range: (r.p0_t - 6.0, r.upper() + 6.0),
            nx: 256,
            np: 256,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (x0, x1) = self.x_range;
        let (p0, p1) = self.p_range;
        if !(x0 < x1 && p0 < p1) || ![x0, x1, p0, p1].iter().all(|v| v.is_finite()) {
            return Err(invalid("grid ranges must be finite with lo < hi"));
        }
        if self.nx < 8 || self.np < 8 {
            return Err(invalid(format!("grid needs at least 8 x 8 points, got {} x {}", self.nx, self.np)));
        }
        Ok(())
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x_range.0 + (self.x_range.1 - self.x_range.0) * i as f64 / (self.nx - 1) as f64
    }

    pub fn p_at(&self, j: usize) -> f64 {
        self.p_range.0 + (self.p_range.1 - self.p_range.0) * j as f64 / (self.np - 1) as f64
    }

    pub fn refined(&self) -> Self {
        GridSpec {
            nx: 2 * self.nx - 1,
            np: 2 * self.np - 1,
            ..*self
        }
    }
}

/// Sampled phase-space distribution. `values[i * np + j]` holds the value
/// at `(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub x_range: (f64, f64),
    pub p_range: (f64, f64),
    pub nx: usize,
    pub np: usize,
    pub values: Vec<f64>,
    /// Ordering parameter of the sampled distribution (0 for Wigner).
    pub s: f64,
}

const GRID_MAGIC: &[u8; 8] = b"WGRID001";

impl PhaseSpaceGrid {
    pub fn sample<F>(spec: &GridSpec, s: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        spec.validate()?;
        let rows: Vec<usize> = (0..spec.nx).collect();
        let values: Vec<f64> = crate::par_map(&rows, |&i| {
            let x = spec.x_at(i);
            (0..spec.np).map(|j| f(x, spec.p_at(j))).collect::<Vec<f64>>()
        })
        .into_iter()
        .flatten()
        .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid contains non-finite values"));
        }
        Ok(PhaseSpaceGrid {
            x_range: spec.x_range,
            p_range: spec.p_range,
            nx: spec.nx,
            np: spec.np,
            values,
            s,
        })
    }

    /// Wigner function of the state at rescaled time `t`.
    pub fn wigner(r: &RescaledParams, spec: &GridSpec, t: f64) -> Result<Self> {
        r.validate()?;
        Self::sample(spec, 0.0, |x, p| wigner_t(r, x, p, t).unwrap_or(f64::NAN))
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            x_range: self.x_range,
            p_range: self.p_range,
            nx: self.nx,
            np: self.np,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.np + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn cell(&self) -> (f64, f64) {
        (
            (self.x_range.1 - self.x_range.0) / (self.nx - 1) as f64,
            (self.p_range.1 - self.p_range.0) / (self.np - 1) as f64,
        )
    }

    fn trapezoid<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let (hx, hp) = self.cell();
        let mut total = 0.0;
        for i in 0..self.nx {
            let wx = if i == 0 || i + 1 == self.nx { 0.5 } else { 1.0 };
            let mut row = 0.0;
            for j in 0..self.np {
                let wp = if j == 0 || j + 1 == self.np { 0.5 } else { 1.0 };
                row += wp * f(self.get(i, j));
            }
            total += wx * row;
        }
        total * hx * hp
    }

    /// Trapezoid estimate of the total volume.
    pub fn volume(&self) -> f64 {
        self.trapezoid(|v| v)
    }

    /// Trapezoid estimate of the negative volume `(1/2) int (|W| - W)`.
    pub fn negative_volume(&self) -> f64 {
        self.trapezoid(|v| (-v).max(0.0))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 40);
        s.push_str("x_tilde,p_tilde,w\n");
        let spec = self.spec();
        for i in 0..self.nx {
            let x = spec.x_at(i);
            for j in 0..self.np {
                s.push_str(&format!("{},{},{}\n", x, spec.p_at(j), self.get(i, j)));
            }
        }
        s
    }

    /// Dense little-endian layout: a 32-byte header (magic `WGRID001`,
    /// `nx: u64`, `np: u64`, `s: f64`), the four range bounds
    /// `x_lo, x_hi, p_lo, p_hi` as `f64`, then `nx * np` row-major values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(GRID_MAGIC)?;
        w.write_all(&(self.nx as u64).to_le_bytes())?;
        w.write_all(&(self.np as u64).to_le_bytes())?;
        w.write_all(&self.s.to_le_bytes())?;
        for v in [self.x_range.0, self.x_range.1, self.p_range.0, self.p_range.1] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.values.len());
        self.write_binary(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_binary<R: Read>(mut r: R) -> io::Result<Self> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != GRID_MAGIC {
            return Err(bad("not a WGRID001 file"));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> io::Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let nx = u64::from_le_bytes(next(&mut r)?) as usize;
        let np = u64::from_le_bytes(next(&mut r)?) as usize;
        let s = f64::from_le_bytes(next(&mut r)?);
        let mut bounds = [0.0; 4];
        for b in bounds.iter_mut() {
            *b = f64::from_le_bytes(next(&mut r)?);
        }
        let count = nx.checked_mul(np).ok_or_else(|| bad("grid size overflows"))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(f64::from_le_bytes(next(&mut r)?));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(bad("trailing bytes after grid values"));
        }
        Ok(PhaseSpaceGrid {
            x_range: (bounds[0], bounds[1]),
            p_range: (bounds[2], bounds[3]),
            nx,
            np,
            values,
            s,
        })
    }
}

/// Default tolerance for the negativity volume.
pub const NEGATIVITY_TOL: f64 = 1e-11;

/// `Delta = (1/2) int int (|W| - W)`, the volume of the negative part.
///
/// At every momentum the negative x-intervals of the fringe pattern are
/// located analytically and integrated, so no integrand has a kink.
pub fn negativity_delta(r: &RescaledParams) -> Result<f64> {
    FringeWigner::new(r)?.negative_volume(tolerance_or(NEGATIVITY_TOL))
}

/// Negativity from trapezoid sums on successively doubled grids, stopping
/// when two refinements differ by less than `tol`.
pub fn negativity_by_grid_refinement(r: &RescaledParams, start: &GridSpec, tol: f64, max_points: usize) -> Result<f64> {
    let mut spec = *start;
    let mut last = PhaseSpaceGrid::wigner(r, &spec, 0.0)?.negative_volume();
    loop {
        spec = spec.refined();
        if spec.nx.max(spec.np) > max_points {
            return Err(crate::Error::NonConvergence {
                estimate: f64::NAN,
                tolerance: tol,
            });
        }
        let next = PhaseSpaceGrid::wigner(r, &spec, 0.0)?.negative_volume();
        if (next - last).abs() < tol {
            return Ok(next);
        }
        last = next;
    }
}

/// Phase-space wedge swept through `x = 0` between rescaled times `t1 < t2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub t1: f64,
    pub t2: f64,
}

impl Sector {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1 < t2) || !t1.is_finite() || !t2.is_finite() {
            return Err(invalid(format!("sector needs finite t1 < t2, got ({t1}, {t2})")));
        }
        Ok(Sector { t1, t2 })
    }

    /// Polar angles bounding the wedge, `pi/2 + atan(t / m)` with `m = 1`.
    pub fn angular_bounds(&self) -> (f64, f64) {
        (0.5 * PI + self.t1.atan(), 0.5 * PI + self.t2.atan())
    }

    /// Whether the initial phase-space point is left of the origin at `t1`
    /// and right of it at `t2` (`p >= 0` half).
    pub fn contains(&self, x: f64, p: f64) -> bool {
        p >= 0.0 && x + p * self.t1 < 0.0 && x + p * self.t2 >= 0.0
    }
}

/// Tolerance for sector integrals.
pub const SECTOR_TOL: f64 = 1e-11;

/// Wigner volume initially inside the wedge, i.e. the probability that
/// flows into `x >= 0` during `(t1, t2)`.
pub fn sector_flux(r: &RescaledParams, sector: &Sector) -> Result<f64> {
    Ok(FringeWigner::new(r)?.sector_volumes(sector.t1, sector.t2, tolerance_or(SECTOR_TOL))?.0)
}

/// Positive and negative parts of the Wigner volume in the wedge.
pub fn sector_split_volumes(r: &RescaledParams, sector: &Sector) -> Result<(f64, f64)> {
    let (total, minus) = FringeWigner::new(r)?.sector_volumes(sector.t1, sector.t2, tolerance_or(SECTOR_TOL))?;
    Ok((total + minus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_state() -> RescaledParams {
        RescaledParams::new(3.0, 11.0, 1.9, PI).unwrap()
    }

    #[test]
    fn gaussian_peak_value() {
        let r = RescaledParams::new(3.0, 11.0, 0.0, 0.0).unwrap();
        assert!((wigner_cat(&r, 0.0, r.upper()).unwrap() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn interference_trough() {
        let r = RescaledParams::new(3.0, 20.0, 2.0, PI).unwrap();
        let w = wigner_cat(&r, 0.0, r.mid()).unwrap();
        assert!((w + 4.0 / (5.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_fringe_engine() {
        let r = max_state();
        let f = FringeWigner::new(&r).unwrap();
        for x in [-2.0, -0.3, 0.0, 0.77, 4.0] {
            for p in [2.0, 6.0, 8.4, 8.5, 13.0] {
                assert!((wigner_cat(&r, x, p).unwrap() - f.value(x, p)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn shear_group() {
        assert_eq!(shear((1.5, -2.0), 0.0), (1.5, -2.0));
        assert_eq!(shear((0.0, 2.0), 3.0), (6.0, 2.0));
        let q = (0.25, 0.5);
        assert_eq!(shear(shear(q, 0.75), -0.75), q);
    }

    #[test]
    fn gaussian_has_no_negativity() {
        let r = RescaledParams::new(3.0, 11.0, 0.0, PI).unwrap();
        assert_eq!(negativity_delta(&r).unwrap(), 0.0);
    }

    #[test]
    fn sector_bounds_and_membership() {
        let s = Sector::new(-0.1, 0.2).unwrap();
        let (a, b) = s.angular_bounds();
        assert!((a - (0.5 * PI - 0.1f64.atan())).abs() < 1e-15 && b > a);
        assert!(s.contains(0.0, 5.0));
        assert!(!s.contains(2.0, 5.0));
        assert!(Sector::new(0.2, 0.2).is_err());
    }

    #[test]
    fn empty_sector_has_no_flux() {
        let r = max_state();
        let s = Sector::new(0.01, 0.01 + 1e-12).unwrap();
        assert!(sector_flux(&r, &s).unwrap().abs() < 1e-10);
    }

    #[test]
    fn binary_rejects_garbage() {
        assert!(PhaseSpaceGrid::read_binary(&b"NOTAGRID"[..]).is_err());
        let spec = GridSpec { nx: 8, np: 9, ..GridSpec::default_for(&max_state()) };
        let g = PhaseSpaceGrid::wigner(&max_state(), &spec, 0.0).unwrap();
        let mut bytes = g.to_binary();
        assert_eq!(bytes.len(), 32 + 32 + 8 * 72);
        bytes.push(0);
        assert!(PhaseSpaceGrid::read_binary(&bytes[..]).is_err());
    }
}
