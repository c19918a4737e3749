//! Quantum backflow for free-particle superpositions of Gaussian wave packets.
//!
//! The crate computes the probability current of a two-Gaussian "cat" state,
//! the backflow functional (largest temporary decrease of the probability of
//! finding the particle on the positive half-line), the negative volume of the
//! Wigner function, and how both react to isotropic Gaussian smoothing of
//! phase space (thermal noise). Units are natural (`hbar = m = 1`); most
//! quantities depend only on the rescaled parameters `p0_t = sigma * p0`,
//! `delta_t = sigma * delta`, `alpha` and `theta`.
//!
//! Module map:
//!
//! * [`numerics`]: adaptive quadrature, sign-change bracketing, root and
//!   extremum refinement.
//! * [`states`]: the cat state, its normalization and initial wave functions.
//! * [`dynamics`]: free evolution, `P(t)`, the current at the origin, fluxes.
//! * [`phase_space`]: Wigner functions, negativity, sector fluxes, grids.
//! * [`backflow`]: the backflow functional, thresholds and parameter scans.
//! * [`smoothing`]: s-ordered smoothing, s-dependent backflow, current depth.
//! * [`eta`]: the resolution-difference current and its negative flux.

pub mod backflow;
pub mod dynamics;
mod error;
pub mod eta;
pub mod fringe;
pub mod numerics;
pub mod phase_space;
pub mod smoothing;
pub mod states;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Run `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
pub(crate) fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
