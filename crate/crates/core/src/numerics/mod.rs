//! Self-contained numerical kernels shared by the physics modules.

mod quadrature;
mod roots;
mod stats;

pub use quadrature::{integrate_1d, integrate_2d, Quadrature, QuadratureResult};
pub use roots::{find_sign_changes, golden_max, refine_minimum, refine_root, Bracket};
pub use stats::spearman;

pub(crate) use roots::{seed_point as roots_seed_point, sign_changes_of_samples as sign_changes};

/// Default absolute tolerance for one-dimensional integrals.
pub const DEFAULT_ABS_TOL_1D: f64 = 1e-10;
/// Default absolute tolerance for two-dimensional integrals.
pub const DEFAULT_ABS_TOL_2D: f64 = 1e-8;
/// Gaussian truncation, in widths, for semi-infinite integrals.
pub const TRUNCATION_WIDTHS: f64 = 8.0;

/// Environment variable that overrides the default 1D tolerance.
pub const TOLERANCE_ENV: &str = "BACKFLOW_LAB_TOL";

/// Tolerance override from `BACKFLOW_LAB_TOL`, read once per process.
/// Values that do not parse as a positive finite number are ignored.
pub fn tolerance_override() -> Option<f64> {
    static OVERRIDE: std::sync::OnceLock<Option<f64>> = std::sync::OnceLock::new();
    *OVERRIDE.get_or_init(|| {
        std::env::var(TOLERANCE_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|v| v.is_finite() && *v > 0.0)
    })
}

/// `default`, unless `BACKFLOW_LAB_TOL` is set.
pub fn tolerance_or(default: f64) -> f64 {
    tolerance_override().unwrap_or(default)
}

/// Default 1D tolerance, honoring `BACKFLOW_LAB_TOL`.
pub fn default_tolerance() -> f64 {
    tolerance_or(DEFAULT_ABS_TOL_1D)
}
