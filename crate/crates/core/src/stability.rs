//! ω-Morse indices, splitting numbers, and the Neumann-positivity route to
//! index hyperbolicity and hyperbolicity of dihedral critical points.
//!
//! Low eigenvalues of the P1 index form carry an `O(h²)` bias, which is
//! too coarse for deciding nullity. Every count here uses the Richardson
//! combination `(4λ_{h/2} - λ_h)/3` of two meshes.

use nalgebra::ComplexField;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{BoundarySpec, GalerkinProblem};
use crate::hamiltonian::{fundamental_solution, legendre_reduce, SturmSystem};
use crate::scalar::{cis, C, RMat, Real};

/// Discretisation and threshold settings for the stability routines.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// Elements on the coarse mesh (the fine mesh doubles it).
    pub mesh: usize,
    /// Absolute nullity threshold on extrapolated eigenvalues.
    pub tol_null: f64,
    /// Unit-circle classification of monodromy eigenvalues.
    pub tol_circ: f64,
    /// Probe angles for one-sided ω-index differences.
    pub probes: [f64; 2],
    /// Largest denominator treated as rational.
    pub q_max: u64,
    /// Distance to `p/q` below which an angle counts as rational.
    pub tol_angle: f64,
    /// RK4 steps for the monodromy.
    pub steps: usize,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self { mesh: 160, tol_null: 1e-6, tol_circ: 1e-8, probes: [1e-3, 5e-4], q_max: 64, tol_angle: 1e-9, steps: 2000 }
    }
}

fn count_with<T: Real>(vals: &[T], tol: f64) -> (usize, usize) {
    crate::spectral::count(vals, T::lit(tol))
}

/// `(iMor, nullity)` of `I_ω` on `{u(0) = ω u(T)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaIndex {
    pub index: usize,
    pub nullity: usize,
}

pub fn omega_index<T: Real>(sturm: &SturmSystem<T>, omega: C<T>, opts: &StabilityOptions) -> Result<OmegaIndex> {
    if (omega.modulus() - T::one()).abs() > T::lit(1e-12) {
        return Err(Error::InvalidInput("ω must lie on the unit circle".into()));
    }
    sturm.check_legendre()?;
    let vals = sturm.galerkin(BoundarySpec::QuasiPeriodic(omega), opts.mesh).low_eigenvalues()?;
    let (index, nullity) = count_with(&vals, opts.tol_null);
    Ok(OmegaIndex { index, nullity })
}

/// `S^±(ω) = iMor(ω e^{±iθ}) - iMor(ω)` for small `θ`, required to agree
/// for both probe angles.
pub fn splitting_numbers<T: Real>(sturm: &SturmSystem<T>, omega: C<T>, opts: &StabilityOptions) -> Result<(usize, usize)> {
    let base = omega_index(sturm, omega, opts)?.index as i64;
    let side = |sign: f64| -> Result<i64> {
        let mut seen = Vec::new();
        for &th in &opts.probes {
            let w = omega * cis(T::lit(sign * th));
            seen.push(omega_index(sturm, w, opts)?.index as i64 - base);
        }
        if seen.windows(2).any(|p| p[0] != p[1]) || seen[0] < 0 {
            return Err(Error::ProbeInconclusive { angle: omega.argument().to_f() });
        }
        Ok(seen[0])
    };
    Ok((side(1.0)? as usize, side(-1.0)? as usize))
}

/// `M_T` with its eigenvalues classified against the unit circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonodromyAnalysis {
    pub monodromy: Vec<Vec<f64>>,
    /// `(re, im)` pairs.
    pub eigenvalues: Vec<(f64, f64)>,
    pub on_circle: Vec<bool>,
    pub hyperbolic: bool,
    pub det: f64,
    /// Largest distance from `1/λ̄` of each eigenvalue to the spectrum.
    pub quadruple_residual: f64,
}

impl MonodromyAnalysis {
    pub fn of(m: &RMat<f64>, tol_circ: f64) -> Result<Self> {
        let ev = crate::linalg::general_eigenvalues(&crate::scalar::complexify(m))?;
        let on_circle: Vec<bool> = ev.iter().map(|z| (z.norm() - 1.0).abs() <= tol_circ).collect();
        let quadruple_residual = ev
            .iter()
            .map(|z| {
                let partner = 1.0 / z.conj();
                ev.iter().map(|w| (w - partner).norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        Ok(Self {
            monodromy: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
            eigenvalues: ev.iter().map(|z| (z.re, z.im)).collect(),
            hyperbolic: !on_circle.iter().any(|&b| b),
            on_circle,
            det: m.determinant(),
            quadruple_residual,
        })
    }

    /// Distinct unit-circle eigenvalue angles in `[0, 2π)`.
    pub fn circle_angles(&self, sep: f64) -> Vec<f64> {
        let mut a: Vec<f64> = self
            .eigenvalues
            .iter()
            .zip(&self.on_circle)
            .filter(|(_, &c)| c)
            .map(|(z, _)| z.1.atan2(z.0).rem_euclid(std::f64::consts::TAU))
            .collect();
        a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        a.dedup_by(|x, y| (*x - *y).abs() < sep);
        a
    }

    /// Smallest distance of an eigenvalue from the unit circle.
    pub fn circle_distance(&self) -> f64 {
        self.eigenvalues.iter().map(|z| (z.0.hypot(z.1) - 1.0).abs()).fold(f64::INFINITY, f64::min)
    }
}

pub fn monodromy(sturm: &SturmSystem<f64>, opts: &StabilityOptions) -> Result<MonodromyAnalysis> {
    let sys = legendre_reduce(sturm)?;
    let path = fundamental_solution(&sys, opts.steps, 1e-8)?;
    MonodromyAnalysis::of(path.end(), opts.tol_circ)
}

/// `p/q` with `q ≤ q_max` within `tol` of `x`, if any.
pub fn rational_approximation(x: f64, q_max: u64, tol: f64) -> Option<(i64, u64)> {
    (1..=q_max).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= tol).then_some((p as i64, q))
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AngleSplitting {
    /// Angle as a fraction of a full turn.
    pub turn: f64,
    pub rational: Option<(i64, u64)>,
    pub s_plus: usize,
    pub s_minus: usize,
    /// `(0, 0)` at rational angles, `(p, p)` otherwise.
    pub pattern_ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexHyperbolicReport {
    pub monodromy: MonodromyAnalysis,
    pub angles: Vec<AngleSplitting>,
    pub index_hyperbolic: bool,
}

/// Splitting numbers at every unit-circle eigenvalue of `M_T` against the
/// index-hyperbolic pattern.
pub fn index_hyperbolic_test(sturm: &SturmSystem<f64>, opts: &StabilityOptions) -> Result<IndexHyperbolicReport> {
    let mono = monodromy(sturm, opts)?;
    let angles = mono
        .circle_angles(1e-6)
        .par_iter()
        .map(|&th| {
            let (s_plus, s_minus) = splitting_numbers(sturm, cis(th), opts)?;
            let turn = th / std::f64::consts::TAU;
            let rational = rational_approximation(turn, opts.q_max, opts.tol_angle);
            let pattern_ok = match rational {
                Some(_) => s_plus == 0 && s_minus == 0,
                None => s_plus == s_minus,
            };
            Ok(AngleSplitting { turn, rational, s_plus, s_minus, pattern_ok })
        })
        .collect::<Result<Vec<_>>>()?;
    let index_hyperbolic = angles.iter().all(|a| a.pattern_ok);
    Ok(IndexHyperbolicReport { monodromy: mono, angles, index_hyperbolic })
}

/// `(θ, iMor, nullity)` samples of the ω-index on the circle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaIndexCurve {
    pub samples: Vec<(f64, usize, usize)>,
    /// Sample indices where the index changes from the previous sample.
    pub jumps: Vec<usize>,
}

pub fn omega_curve(sturm: &SturmSystem<f64>, count: usize, opts: &StabilityOptions) -> Result<OmegaIndexCurve> {
    let samples = (0..count)
        .into_par_iter()
        .map(|j| {
            let th = std::f64::consts::TAU * j as f64 / count as f64;
            let r = omega_index(sturm, cis(th), opts)?;
            Ok((th, r.index, r.nullity))
        })
        .collect::<Result<Vec<_>>>()?;
    let jumps = (1..samples.len()).filter(|&i| samples[i].1 != samples[i - 1].1).collect();
    Ok(OmegaIndexCurve { samples, jumps })
}

/// The dihedral data `S`, `N` of order `n` acting by `(𝓢u)(t) = S u(t + T/n)`,
/// `(𝓝u)(t) = N u(T/n - t)`.
#[derive(Clone, Debug)]
pub struct ReversibleAction {
    pub n: usize,
    pub s: RMat<f64>,
    pub nn: RMat<f64>,
}

impl ReversibleAction {
    /// `n = 1`, `N = I`: plain time reversal.
    pub fn reversal(m: usize) -> Self {
        Self { n: 1, s: RMat::identity(m, m), nn: RMat::identity(m, m) }
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let m = self.s.nrows();
        let id = RMat::identity(m, m);
        let mut sn = id.clone();
        for _ in 0..self.n {
            sn = &sn * &self.s;
        }
        let ns = &self.nn * &self.s;
        let checks = [
            ("S^n = I", (sn - &id).norm()),
            ("N^2 = I", (&self.nn * &self.nn - &id).norm()),
            ("(NS)^2 = I", (&ns * &ns - &id).norm()),
            ("S orthogonal", (self.s.transpose() * &self.s - &id).norm()),
            ("N orthogonal", (self.nn.transpose() * &self.nn - &id).norm()),
        ];
        for (name, r) in checks {
            if r > tol {
                return Err(Error::SymmetryViolated { relation: name.into(), residual: r });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeumannReport {
    /// Extrapolated smallest eigenvalue on `[0, T/(2n)]` with free ends.
    pub smallest: f64,
    pub semidefinite: bool,
    pub definite: bool,
}

/// Positivity of the index form on `W^{1,2}([0, T/(2n)])`, i.e. of `𝒜`
/// with Neumann ends on the fundamental half-domain.
pub fn neumann_positivity(sturm: &SturmSystem<f64>, action: &ReversibleAction, opts: &StabilityOptions) -> Result<NeumannReport> {
    action.validate(1e-9)?;
    sturm.check_legendre()?;
    sturm.check_symmetry(action.n, &action.s, &action.nn, 1e-9)?;
    let half = sturm.period / (2 * action.n) as f64;
    let g = GalerkinProblem::new(sturm.m, 0.0, half, sturm.p.clone(), sturm.q.clone(), sturm.r.clone(), BoundarySpec::Neumann, opts.mesh);
    let vals = g.low_eigenvalues()?;
    let smallest = vals[0];
    Ok(NeumannReport { smallest, semidefinite: smallest >= -opts.tol_null, definite: smallest > opts.tol_null })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperbolicityVerdict {
    /// Neumann-definite and no unit-circle eigenvalue.
    Hyperbolic,
    /// Neumann-semidefinite only: not strongly stable, hyperbolicity not
    /// claimed.
    NotStronglyStable,
    /// Positivity fails; the criterion is silent.
    NoClaim,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub neumann: NeumannReport,
    pub monodromy: MonodromyAnalysis,
    pub verdict: HyperbolicityVerdict,
}

/// Runs the Neumann test and the direct Floquet computation; a definite
/// form with a unit-circle eigenvalue is a [`Error::CriterionViolated`].
pub fn hyperbolicity_check(sturm: &SturmSystem<f64>, action: &ReversibleAction, opts: &StabilityOptions) -> Result<HyperbolicityReport> {
    let neumann = neumann_positivity(sturm, action, opts)?;
    let mono = monodromy(sturm, opts)?;
    let verdict = if neumann.definite {
        if !mono.hyperbolic {
            return Err(Error::CriterionViolated { distance: mono.circle_distance() });
        }
        HyperbolicityVerdict::Hyperbolic
    } else if neumann.semidefinite {
        HyperbolicityVerdict::NotStronglyStable
    } else {
        HyperbolicityVerdict::NoClaim
    };
    Ok(HyperbolicityReport { neumann, monodromy: mono, verdict })
}

/// `-u'' + Q(t)u` with `Q(T - t) = Q(t)` under plain time reversal.
pub fn time_reversible_system(m: usize, period: f64, q: crate::galerkin::Coef<f64>) -> Result<SturmSystem<f64>> {
    for i in 0..=32 {
        let t = period * i as f64 / 32.0;
        let r = (q.as_ref()(period - t) - q.as_ref()(t)).norm();
        if r > 1e-9 {
            return Err(Error::SymmetryViolated { relation: "Q(T-t) = Q(t)".into(), residual: r });
        }
    }
    Ok(SturmSystem::new(
        m,
        period,
        crate::galerkin::constant(RMat::identity(m, m)),
        crate::galerkin::constant(RMat::zeros(m, m)),
        q,
    ))
}
