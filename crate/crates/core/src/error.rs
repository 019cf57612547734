use thiserror::Error;

/// Every failure the engines can report. Verification *mismatches* are not
/// errors; they are reported as `false` flags inside the report types.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not an involution: |U^2 - I| = {residual:e}")]
    NotInvolutive { residual: f64 },
    #[error("frame is rank deficient (rank {rank}, expected {expected})")]
    RankDeficient { rank: usize, expected: usize },
    #[error("subspace is not Lagrangian: |Z^H J Z| = {residual:e}")]
    NotLagrangian { residual: f64 },
    #[error("matrix is not symplectic: |g^T J g - J| = {residual:e}")]
    NotSymplectic { residual: f64 },
    #[error("intersection dimension {dim} persists on [{from}, {to}]: path is not regular")]
    NonIsolatedCrossing { from: f64, to: f64, dim: usize },
    #[error("degenerate crossing could not be regularised up to delta = {delta_max:e}")]
    UnresolvableDegeneracy { delta_max: f64 },
    #[error("Legendre condition fails at t = {t}: smallest eigenvalue of P is not positive")]
    LegendreViolation { t: f64 },
    #[error("mesh of {mesh} points is not divisible by 2n = {two_n}")]
    MeshIncommensurate { mesh: usize, two_n: usize },
    #[error("invalid isotypic component k = {k} for n = {n}")]
    InvalidComponent { k: usize, n: usize },
    #[error("symmetry relation violated: {relation} residual {residual:e}")]
    SymmetryViolated { relation: String, residual: f64 },
    #[error("symplectic drift {drift:e} exceeds tolerance after re-projection")]
    DriftExceeded { drift: f64 },
    #[error("splitting-number probes disagree at angle {angle}")]
    ProbeInconclusive { angle: f64 },
    #[error("Neumann positivity holds but the monodromy has an eigenvalue at distance {distance:e} from the unit circle")]
    CriterionViolated { distance: f64 },
    #[error("configuration is {distance:e} from the collision set")]
    CollisionProximity { distance: f64 },
    #[error("centre of mass is not zero: {residual:e}")]
    CenterOfMassNonzero { residual: f64 },
    #[error("descent approached the collision set (distance {distance:e})")]
    CollisionDuringDescent { distance: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
