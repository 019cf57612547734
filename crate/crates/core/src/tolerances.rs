use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Numerical thresholds. Matrix-level tolerances are relative to the norm of
/// the input they are applied to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Generic relative residual (involutions, relations, Hermiticity).
    pub rel: f64,
    /// Isotropy residual and principal-angle tolerance for Lagrangian frames.
    pub lag: f64,
    /// Symplecticity residual.
    pub sympl: f64,
    /// Crossing localisation in the path parameter.
    pub cross: f64,
    /// Bisection cap.
    pub max_bisect: usize,
    /// Relative nullity threshold (`tol_null = null_rel * |A|`).
    pub null_rel: f64,
    /// Unit-circle classification of monodromy eigenvalues.
    pub circ: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-10,
            lag: 1e-9,
            sympl: 1e-8,
            cross: 1e-10,
            max_bisect: 80,
            null_rel: 1e-8,
            circ: 1e-8,
        }
    }
}

impl Tolerances {
    /// Thresholds usable in single precision.
    pub fn single() -> Self {
        Self {
            rel: 1e-4,
            lag: 1e-4,
            sympl: 1e-3,
            cross: 1e-5,
            max_bisect: 40,
            null_rel: 1e-4,
            circ: 1e-4,
        }
    }

    /// Default thresholds for a scalar type: double-precision values when the
    /// type resolves them, single-precision ones otherwise.
    pub fn for_scalar<T: Real>() -> Self {
        if T::eps().to_f() < 1e-12 {
            Self::default()
        } else {
            Self::single()
        }
    }
}
