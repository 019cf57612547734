//! Morse index, nullity and spectral flow of finite Hermitian families.
//!
//! The spectral flow uses the crossing-form convention
//! `-n₋[Γ(0)] + Σ sgn Γ(λ₀) + n₊[Γ(1)]` with `Γ = Vᴴ Ȧ V` on the kernel.
//! Degenerate crossings are regularised by the shift `A + δI`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{herm, hermitian_eigen, hermitian_eigenvalues, norm2};
use crate::maslov::Signature;
use crate::scalar::{cr, CMat, Real};
use crate::tolerances::Tolerances;

/// `(#{λ < -tol}, #{|λ| ≤ tol})`.
pub fn morse_index<T: Real>(a: &CMat<T>, tol_null: T) -> (usize, usize) {
    count(&hermitian_eigenvalues(a), tol_null)
}

/// Same counts from a precomputed spectrum.
pub fn count<T: Real>(vals: &[T], tol_null: T) -> (usize, usize) {
    let neg = vals.iter().filter(|&&x| x < -tol_null).count();
    let null = vals.iter().filter(|&&x| x.abs() <= tol_null).count();
    (neg, null)
}

/// Default nullity threshold `null_rel · max |λ|`.
pub fn default_tol_null<T: Real>(vals: &[T], tol: &Tolerances) -> T {
    let scale = vals.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    T::lit(tol.null_rel) * scale.max(T::eps())
}

/// A continuous family `λ ↦ A(λ)` of Hermitian matrices on `[0, 1]`.
pub trait SelfAdjointFamily<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn at(&self, lambda: T) -> CMat<T>;
    fn grid(&self) -> usize {
        64
    }
}

/// Family given by a closure.
pub struct FnFamily<T: Real, F> {
    dim: usize,
    grid: usize,
    f: F,
    _t: std::marker::PhantomData<T>,
}

impl<T: Real, F: Fn(T) -> CMat<T> + Sync> FnFamily<T, F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, grid: 64, f, _t: std::marker::PhantomData }
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid.max(2);
        self
    }
}

impl<T: Real, F: Fn(T) -> CMat<T> + Sync> SelfAdjointFamily<T> for FnFamily<T, F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn at(&self, lambda: T) -> CMat<T> {
        (self.f)(lambda)
    }
    fn grid(&self) -> usize {
        self.grid
    }
}

struct Shifted<'a, T: Real> {
    inner: &'a dyn SelfAdjointFamily<T>,
    delta: T,
}

impl<T: Real> SelfAdjointFamily<T> for Shifted<'_, T> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn at(&self, lambda: T) -> CMat<T> {
        let mut a = self.inner.at(lambda);
        for i in 0..a.nrows() {
            a[(i, i)] += cr(self.delta);
        }
        a
    }
    fn grid(&self) -> usize {
        self.inner.grid()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowLocation {
    Start,
    Interior,
    End,
}

/// A crossing instant `λ₀` with its crossing form.
#[derive(Clone, Debug)]
pub struct FlowCrossing<T: Real> {
    pub lambda: T,
    pub location: FlowLocation,
    pub nullity: usize,
    pub eigenvalues: Vec<T>,
    pub signature: Signature,
    pub degenerate: bool,
}

impl<T: Real> FlowCrossing<T> {
    pub fn contribution(&self) -> i64 {
        match self.location {
            FlowLocation::Start => -(self.signature.neg as i64),
            FlowLocation::Interior => self.signature.sgn(),
            FlowLocation::End => self.signature.pos as i64,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult<T: Real> {
    pub flow: i64,
    pub crossings: Vec<FlowCrossing<T>>,
    /// `Some(δ)` when the shifted family had to be used.
    pub shift: Option<f64>,
}

/// Crossing-form spectral flow, with the `δ`-shift fallback.
pub fn spectral_flow<T: Real>(family: &dyn SelfAdjointFamily<T>, tol: &Tolerances) -> Result<FlowResult<T>> {
    match crossing_flow(family, tol) {
        Ok(r) if r.crossings.iter().all(|c| !c.degenerate) => return Ok(r),
        Ok(_) | Err(Error::NonIsolatedCrossing { .. }) => {}
        Err(e) => return Err(e),
    }
    let deltas = [1e-8, 1e-7, 1e-6, 1e-5];
    let scale = family_scale(family);
    let mut prev: Option<i64> = None;
    for &d in &deltas {
        let shifted = Shifted { inner: family, delta: T::lit(d) * scale };
        let r = match crossing_flow(&shifted, tol) {
            Ok(r) if r.crossings.iter().all(|c| !c.degenerate) => r,
            _ => {
                prev = None;
                continue;
            }
        };
        if prev == Some(r.flow) {
            return Ok(FlowResult { flow: r.flow, crossings: r.crossings, shift: Some(d) });
        }
        prev = Some(r.flow);
    }
    Err(Error::UnresolvableDegeneracy { delta_max: 1e-5 })
}

fn family_scale<T: Real>(family: &dyn SelfAdjointFamily<T>) -> T {
    [T::zero(), T::lit(0.5), T::one()]
        .iter()
        .map(|&l| norm2(&family.at(l)))
        .fold(T::one(), |m, x| m.max(x))
}

fn grid_points<T: Real>(n: usize) -> Vec<T> {
    (0..=n).map(|i| if i == n { T::one() } else { T::of(i) / T::of(n) }).collect()
}

/// Crossing forms only; reports degenerate crossings instead of resolving
/// them.
pub fn crossing_flow<T: Real>(family: &dyn SelfAdjointFamily<T>, tol: &Tolerances) -> Result<FlowResult<T>> {
    let n = family.grid().max(2);
    let lams = grid_points::<T>(n);
    let spectra: Vec<Vec<T>> = lams.par_iter().map(|&l| hermitian_eigenvalues(&family.at(l))).collect();
    let scale = spectra
        .iter()
        .flat_map(|v| v.iter())
        .fold(T::zero(), |m, &x| m.max(x.abs()))
        .max(T::eps());
    let tol_null = T::lit(tol.null_rel) * scale;
    let nullity = |v: &[T]| v.iter().filter(|&&x| x.abs() <= tol_null).count();
    let neg = |v: &[T]| v.iter().filter(|&&x| x < T::zero()).count();

    for i in 0..n {
        if nullity(&spectra[i]) > 0 && nullity(&spectra[i + 1]) > 0 {
            let mid = (lams[i] + lams[i + 1]) * T::lit(0.5);
            let z = nullity(&hermitian_eigenvalues(&family.at(mid)));
            if z > 0 {
                return Err(Error::NonIsolatedCrossing { from: lams[i].to_f(), to: lams[i + 1].to_f(), dim: z });
            }
        }
    }

    let tstep = T::lit(tol.cross);
    let mut hits: Vec<(T, FlowLocation)> = Vec::new();
    if nullity(&spectra[0]) > 0 {
        hits.push((T::zero(), FlowLocation::Start));
    }
    let neg_at = |l: T| neg(&hermitian_eigenvalues(&family.at(l)));
    let mut interior = Vec::new();
    for i in 0..n {
        // Zero eigenvalues at the nodes are counted as nonnegative; crossings
        // sitting exactly on a node are picked up by the bisection as well.
        let (nl, nr) = (neg(&spectra[i]), neg(&spectra[i + 1]));
        bisect(&neg_at, lams[i], lams[i + 1], nl, nr, tstep, tol.max_bisect, &mut interior);
    }
    let guard = tstep * T::lit(100.0);
    let start_hit = nullity(&spectra[0]) > 0;
    let end_hit = nullity(&spectra[n]) > 0;
    interior.retain(|&l| !(start_hit && l <= guard) && !(end_hit && T::one() - l <= guard));
    interior.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    interior.dedup_by(|x, y| (*x - *y).abs() <= guard);
    hits.extend(interior.into_iter().map(|l| (l, FlowLocation::Interior)));
    if end_hit {
        hits.push((T::one(), FlowLocation::End));
    }

    let h = T::lit(1e-2) / T::of(n);
    let crossings = hits
        .par_iter()
        .map(|&(l, loc)| flow_crossing(family, l, loc, h, tol_null, scale))
        .collect::<Result<Vec<_>>>()?;
    let flow = crossings.iter().map(|c| c.contribution()).sum();
    Ok(FlowResult { flow, crossings, shift: None })
}

#[allow(clippy::too_many_arguments)]
fn bisect<T: Real>(f: &impl Fn(T) -> usize, l: T, r: T, nl: usize, nr: usize, tstep: T, left: usize, out: &mut Vec<T>) {
    if nl == nr {
        return;
    }
    let mid = (l + r) * T::lit(0.5);
    if r - l <= tstep || left == 0 {
        out.push(mid);
        return;
    }
    let nm = f(mid);
    bisect(f, l, mid, nl, nm, tstep, left - 1, out);
    bisect(f, mid, r, nm, nr, tstep, left - 1, out);
}

fn flow_crossing<T: Real>(
    family: &dyn SelfAdjointFamily<T>,
    lambda: T,
    location: FlowLocation,
    h: T,
    tol_null: T,
    scale: T,
) -> Result<FlowCrossing<T>> {
    let (vals, vecs) = hermitian_eigen(&family.at(lambda));
    let ktol = match location {
        FlowLocation::Interior => tol_null.max(T::lit(1e-6) * scale),
        _ => tol_null,
    };
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() <= ktol).collect();
    let v = CMat::from_fn(vecs.nrows(), idx.len(), |r, c| vecs[(r, idx[c])]);
    let deriv = |h: T| -> CMat<T> {
        let two = T::lit(2.0);
        let inv = cr(T::one() / (two * h));
        if lambda - h >= T::zero() && lambda + h <= T::one() {
            (family.at(lambda + h) - family.at(lambda - h)) * inv
        } else if lambda + two * h <= T::one() {
            (family.at(lambda + h) * cr(T::lit(4.0)) - family.at(lambda) * cr(T::lit(3.0)) - family.at(lambda + two * h)) * inv
        } else {
            (family.at(lambda) * cr(T::lit(3.0)) - family.at(lambda - h) * cr(T::lit(4.0)) + family.at(lambda - two * h)) * inv
        }
    };
    let d1 = deriv(h);
    let d2 = deriv(h * T::lit(0.5));
    let rich = (&d2 * cr(T::lit(4.0)) - d1) * cr(T::one() / T::lit(3.0));
    let gamma = herm(&(v.adjoint() * &rich * &v));
    let coarse = herm(&(v.adjoint() * &d2 * &v));
    let ev = hermitian_eigenvalues(&gamma);
    let cv = hermitian_eigenvalues(&coarse);
    let gscale = norm2(&gamma).max(T::one());
    let disagree = ev.iter().zip(cv.iter()).any(|(p, q)| (*p - *q).abs() > T::lit(1e-6) * gscale);
    let signature = Signature::of(&ev, T::lit(1e-7) * gscale);
    let mut degenerate = disagree || signature.zero > 0 || idx.is_empty();
    if location == FlowLocation::Interior && !degenerate {
        let dl = h * T::lit(4.0);
        let lo = (lambda - dl).max(T::zero());
        let hi = (lambda + dl).min(T::one());
        let nb = hermitian_eigenvalues(&family.at(lo)).iter().filter(|&&x| x < T::zero()).count() as i64;
        let na = hermitian_eigenvalues(&family.at(hi)).iter().filter(|&&x| x < T::zero()).count() as i64;
        if nb - na != signature.sgn() {
            degenerate = true;
        }
    }
    Ok(FlowCrossing { lambda, location, nullity: idx.len(), eigenvalues: ev, signature, degenerate })
}

/// The partitioned counting definition: on each piece `[λᵢ, λᵢ₊₁]` pick a
/// level `aᵢ > 0` outside the spectra and add
/// `dim E[0, aᵢ](A(λᵢ₊₁)) - dim E[0, aᵢ](A(λᵢ))`.
///
/// Levels are kept a Weyl margin `|A(λᵢ₊₁) - A(λᵢ)|` away from every
/// eigenvalue at both ends, refining pieces where that is impossible.
pub fn spectral_flow_counting<T: Real>(family: &dyn SelfAdjointFamily<T>) -> Result<i64> {
    let n = family.grid().max(2);
    let lams = grid_points::<T>(n);
    let mut total = 0i64;
    for w in lams.windows(2) {
        total += piece(family, w[0], w[1], 0)?;
    }
    Ok(total)
}

fn piece<T: Real>(family: &dyn SelfAdjointFamily<T>, l: T, r: T, depth: usize) -> Result<i64> {
    let (al, ar) = (family.at(l), family.at(r));
    let margin = norm2(&(&ar - &al));
    let (vl, vr) = (hermitian_eigenvalues(&al), hermitian_eigenvalues(&ar));
    let scale = vl.iter().chain(vr.iter()).fold(T::one(), |m, &x| m.max(x.abs()));
    // Candidate levels: midpoints of consecutive positive eigenvalues, and
    // one level above everything.
    let mut pts: Vec<T> = vl.iter().chain(vr.iter()).copied().filter(|&x| x > T::zero()).collect();
    pts.push(T::zero());
    pts.push(scale * T::lit(4.0));
    pts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let level = pts
        .windows(2)
        .map(|w| ((w[0] + w[1]) * T::lit(0.5), (w[1] - w[0]) * T::lit(0.5)))
        .filter(|&(a, half)| a > T::zero() && half > margin * T::lit(1.01))
        .map(|(a, _)| a)
        .next();
    match level {
        Some(a) => {
            let band = |v: &[T]| v.iter().filter(|&&x| x >= T::zero() && x <= a).count() as i64;
            Ok(band(&vr) - band(&vl))
        }
        None if depth < 40 => {
            let mid = (l + r) * T::lit(0.5);
            Ok(piece(family, l, mid, depth + 1)? + piece(family, mid, r, depth + 1)?)
        }
        None => Err(Error::Numerical("no spectral gap for the counting definition".into())),
    }
}

/// `I(A, A + B) = -spfl(λ ↦ A + λB)`.
pub fn relative_morse_index<T: Real>(a: &CMat<T>, b: &CMat<T>, tol: &Tolerances) -> Result<i64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch("A and B must have the same size".into()));
    }
    let fam = FnFamily::new(a.nrows(), |l: T| a + b * cr(l));
    Ok(-spectral_flow(&fam, tol)?.flow)
}
