//! Maslov index `μ^CLM(L₀, ℓ; [a, b])` of a path of Lagrangians relative to a
//! (possibly moving) reference.
//!
//! Everything runs through the unitary chart: with `U₀(t)`, `U(t)` the
//! representatives of the reference and of the path, `W(t) = U₀ᴴU` has the
//! eigenvalue 1 exactly at crossings and its eigen-angles move
//! counter-clockwise through 0 on positive crossings. Crossings are located by
//! bisection on the number of eigen-angles in a small window `(-w, 0)`, and
//! each one carries a crossing form evaluated by finite differences. The
//! index is `n₊` at `a`, plus the interior signatures, minus `n₋` at `b`.
//!
//! When a crossing is degenerate the index is recomputed as the winding count
//! of the rotated path `e^{-iδ}W`, accepting the first two agreeing values of
//! `δ` on a geometric grid.

use nalgebra::ComplexField;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hstack, norm2, unitary_eigen, SymplecticSpace};
use crate::scalar::{cis, cr, CMat, Real};
use crate::tolerances::Tolerances;

/// A continuous family of Lagrangian frames on `[a, b]`.
pub trait LagrangianPath<T: Real>: Sync {
    fn space(&self) -> &SymplecticSpace<T>;
    fn interval(&self) -> (T, T);
    /// Number of uniform steps used for the initial scan.
    fn grid(&self) -> usize {
        64
    }
    fn frame(&self, t: T) -> CMat<T>;
    fn unitary(&self, t: T) -> Result<CMat<T>> {
        self.space().unitary_of(&self.frame(t))
    }
}

/// Path given by a closure.
pub struct FnPath<T: Real, F> {
    space: SymplecticSpace<T>,
    a: T,
    b: T,
    grid: usize,
    f: F,
}

impl<T: Real, F: Fn(T) -> CMat<T> + Sync> FnPath<T, F> {
    pub fn new(space: SymplecticSpace<T>, a: T, b: T, f: F) -> Self {
        Self { space, a, b, grid: 64, f }
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid.max(2);
        self
    }
}

impl<T: Real, F: Fn(T) -> CMat<T> + Sync> LagrangianPath<T> for FnPath<T, F> {
    fn space(&self) -> &SymplecticSpace<T> {
        &self.space
    }
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn grid(&self) -> usize {
        self.grid
    }
    fn frame(&self, t: T) -> CMat<T> {
        (self.f)(t)
    }
}

/// Constant path, the usual reference.
pub struct ConstPath<T: Real> {
    space: SymplecticSpace<T>,
    z: CMat<T>,
    u: CMat<T>,
    a: T,
    b: T,
}

impl<T: Real> ConstPath<T> {
    pub fn new(space: SymplecticSpace<T>, z: CMat<T>, a: T, b: T) -> Result<Self> {
        let u = space.unitary_of(&z)?;
        Ok(Self { space, z, u, a, b })
    }
}

impl<T: Real> LagrangianPath<T> for ConstPath<T> {
    fn space(&self) -> &SymplecticSpace<T> {
        &self.space
    }
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn frame(&self, _t: T) -> CMat<T> {
        self.z.clone()
    }
    fn unitary(&self, _t: T) -> Result<CMat<T>> {
        Ok(self.u.clone())
    }
}

/// Path known at sample times, interpolated along unitary geodesics
/// `U(s) = Uᵢ exp(s log(Uᵢᴴ Uᵢ₊₁))`.
#[derive(Clone, Debug)]
pub struct SampledPath<T: Real> {
    space: SymplecticSpace<T>,
    times: Vec<T>,
    unitaries: Vec<CMat<T>>,
    logs: Vec<(Vec<T>, CMat<T>)>,
}

impl<T: Real> SampledPath<T> {
    pub fn new(space: SymplecticSpace<T>, times: Vec<T>, frames: &[CMat<T>]) -> Result<Self> {
        if times.len() != frames.len() || times.len() < 2 {
            return Err(Error::InvalidInput("need at least two samples with matching times".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("sample times must increase".into()));
        }
        let unitaries = frames.iter().map(|z| space.unitary_of(z)).collect::<Result<Vec<_>>>()?;
        let logs = unitaries
            .windows(2)
            .map(|w| unitary_eigen(&(w[0].adjoint() * &w[1])))
            .collect();
        Ok(Self { space, times, unitaries, logs })
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    fn locate(&self, t: T) -> (usize, T) {
        let n = self.times.len();
        let t = t.max(self.times[0]).min(self.times[n - 1]);
        let i = match self.times.iter().rposition(|&s| s <= t) {
            Some(i) if i + 1 < n => i,
            _ => n - 2,
        };
        let s = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        (i, s)
    }
}

impl<T: Real> LagrangianPath<T> for SampledPath<T> {
    fn space(&self) -> &SymplecticSpace<T> {
        &self.space
    }
    fn interval(&self) -> (T, T) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }
    fn grid(&self) -> usize {
        (self.times.len() - 1).max(16)
    }
    fn frame(&self, t: T) -> CMat<T> {
        let u = self.unitary(t).expect("sampled unitary");
        self.space.frame_of_unitary(&u)
    }
    fn unitary(&self, t: T) -> Result<CMat<T>> {
        let (i, s) = self.locate(t);
        let (angles, vecs) = &self.logs[i];
        let n = angles.len();
        let mut d = CMat::zeros(n, n);
        for k in 0..n {
            d[(k, k)] = cis(angles[k] * s);
        }
        Ok(&self.unitaries[i] * (vecs * d * vecs.adjoint()))
    }
}

/// Signature `(n₊, n₋, n₀)` of a Hermitian form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

impl Signature {
    pub fn of<T: Real>(vals: &[T], tol: T) -> Self {
        let mut s = Self::default();
        for &v in vals {
            if v > tol {
                s.pos += 1;
            } else if v < -tol {
                s.neg += 1;
            } else {
                s.zero += 1;
            }
        }
        s
    }

    pub fn sgn(&self) -> i64 {
        self.pos as i64 - self.neg as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingLocation {
    Start,
    Interior,
    End,
}

/// One crossing instant with its crossing form on `ℓ(t₀) ∩ L₀`.
#[derive(Clone, Debug)]
pub struct CrossingRecord<T: Real> {
    pub t0: T,
    pub location: CrossingLocation,
    pub intersection_dim: usize,
    pub form: CMat<T>,
    pub eigenvalues: Vec<T>,
    pub signature: Signature,
    pub degenerate: bool,
}

impl<T: Real> CrossingRecord<T> {
    /// Contribution under the endpoint convention.
    pub fn contribution(&self) -> i64 {
        match self.location {
            CrossingLocation::Start => self.signature.pos as i64,
            CrossingLocation::Interior => self.signature.sgn(),
            CrossingLocation::End => -(self.signature.neg as i64),
        }
    }

    pub fn summary(&self) -> CrossingSummary {
        CrossingSummary {
            t0: self.t0.to_f(),
            location: self.location,
            intersection_dim: self.intersection_dim,
            form_eigenvalues: self.eigenvalues.iter().map(|v| v.to_f()).collect(),
            signature: self.signature,
            degenerate: self.degenerate,
        }
    }
}

/// Serializable view of a [`CrossingRecord`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingSummary {
    pub t0: f64,
    pub location: CrossingLocation,
    pub intersection_dim: usize,
    pub form_eigenvalues: Vec<f64>,
    pub signature: Signature,
    pub degenerate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexMethod {
    CrossingForms,
    Perturbed { delta: f64 },
}

#[derive(Clone, Debug)]
pub struct MaslovResult<T: Real> {
    pub index: i64,
    pub crossings: Vec<CrossingRecord<T>>,
    pub method: IndexMethod,
}

/// Eigen-angle threshold below which `W` is taken to have eigenvalue 1.
const KERNEL_ANGLE: f64 = 1e-7;
/// Frobenius step bounds for the coarse scan and the refined search.
const COARSE_STEP: f64 = 0.2;
const FINE_STEP: f64 = 0.02;
const MAX_DEPTH: usize = 40;

struct Pair<'a, T: Real> {
    reference: &'a dyn LagrangianPath<T>,
    path: &'a dyn LagrangianPath<T>,
    a: T,
    b: T,
}

impl<'a, T: Real> Pair<'a, T> {
    fn new(reference: &'a dyn LagrangianPath<T>, path: &'a dyn LagrangianPath<T>, a: T, b: T) -> Result<Self> {
        if reference.space().dim() != path.space().dim() {
            return Err(Error::DimensionMismatch("reference and path live in different spaces".into()));
        }
        if b <= a {
            return Err(Error::InvalidInput("empty parameter interval".into()));
        }
        Ok(Self { reference, path, a, b })
    }

    fn w(&self, t: T) -> Result<CMat<T>> {
        Ok(self.reference.unitary(t)?.adjoint() * self.path.unitary(t)?)
    }
}

struct Node<T: Real> {
    t: T,
    w: CMat<T>,
    angles: Vec<T>,
}

impl<T: Real> Node<T> {
    fn new(t: T, w: CMat<T>) -> Self {
        let angles = unitary_eigen(&w).0;
        Self { t, w, angles }
    }

    fn gap(&self) -> T {
        self.angles.iter().fold(T::max_value().expect("bounded"), |m, &x| m.min(x.abs()))
    }

    fn count_in(&self, w: T) -> usize {
        self.angles.iter().filter(|&&x| x > -w && x < T::zero()).count()
    }
}

fn frob<T: Real>(a: &CMat<T>) -> T {
    a.norm()
}

impl<'a, T: Real> Pair<'a, T> {
    /// Grid on `[a, b]` refined until consecutive `W` differ by at most `step`
    /// in Frobenius norm.
    fn refine(&self, nodes: Vec<Node<T>>, step: T, only_near_zero: Option<T>) -> Result<Vec<Node<T>>> {
        let mut out = Vec::with_capacity(nodes.len());
        let mut it = nodes.into_iter();
        let mut prev = it.next().expect("nonempty grid");
        for next in it {
            let mut seg = self.refine_segment(prev, next, step, only_near_zero, 0)?;
            prev = seg.pop().expect("segment keeps its end");
            out.append(&mut seg);
        }
        out.push(prev);
        Ok(out)
    }

    fn refine_segment(
        &self,
        l: Node<T>,
        r: Node<T>,
        step: T,
        near: Option<T>,
        depth: usize,
    ) -> Result<Vec<Node<T>>> {
        let wanted = match near {
            Some(g) => l.gap() < g || r.gap() < g,
            None => true,
        };
        if !wanted || frob(&(&r.w - &l.w)) <= step || depth >= MAX_DEPTH {
            return Ok(vec![l, r]);
        }
        let mid_t = (l.t + r.t) * T::lit(0.5);
        let mid = Node::new(mid_t, self.w(mid_t)?);
        let mut left = self.refine_segment(l, mid, step, near, depth + 1)?;
        let mid = left.pop().expect("mid");
        let right = self.refine_segment(mid, r, step, near, depth + 1)?;
        left.extend(right);
        Ok(left)
    }

    fn uniform(&self, n: usize) -> Result<Vec<Node<T>>> {
        let n = n.max(2);
        (0..=n)
            .into_par_iter()
            .map(|i| {
                let t = if i == n { self.b } else { self.a + (self.b - self.a) * T::of(i) / T::of(n) };
                Ok(Node::new(t, self.w(t)?))
            })
            .collect()
    }
}

/// All crossing instants of `path` with the reference on the path's interval.
pub fn find_crossings<T: Real>(
    reference: &dyn LagrangianPath<T>,
    path: &dyn LagrangianPath<T>,
    tol: &Tolerances,
) -> Result<Vec<CrossingRecord<T>>> {
    let (a, b) = path.interval();
    find_crossings_on(reference, path, a, b, tol)
}

/// As [`find_crossings`], on an explicit subinterval.
pub fn find_crossings_on<T: Real>(
    reference: &dyn LagrangianPath<T>,
    path: &dyn LagrangianPath<T>,
    a: T,
    b: T,
    tol: &Tolerances,
) -> Result<Vec<CrossingRecord<T>>> {
    let pair = Pair::new(reference, path, a, b)?;
    let kernel = T::lit(KERNEL_ANGLE);
    let coarse = pair.refine(pair.uniform(path.grid())?, T::lit(COARSE_STEP), None)?;

    // A crossing that persists over a whole grid interval is not isolated.
    for win in coarse.windows(2) {
        let (l, r) = (&win[0], &win[1]);
        if l.gap() < kernel && r.gap() < kernel {
            let mid_t = (l.t + r.t) * T::lit(0.5);
            let mid = Node::new(mid_t, pair.w(mid_t)?);
            if mid.gap() < kernel {
                let dim = mid.angles.iter().filter(|x| x.abs() < kernel).count();
                return Err(Error::NonIsolatedCrossing { from: l.t.to_f(), to: r.t.to_f(), dim });
            }
        }
    }

    // Any eigen-angle crossing zero inside a coarse interval is within the
    // Bhatia-Davis bound (π/2)·|ΔW| of zero at both of its ends.
    let near = T::lit(COARSE_STEP * std::f64::consts::FRAC_PI_2 * 1.5);
    let fine = pair.refine(coarse, T::lit(FINE_STEP), Some(near))?;

    let tcross = T::lit(tol.cross);
    let mut instants: Vec<(T, CrossingLocation)> = Vec::new();
    let first = fine.first().expect("grid");
    let last = fine.last().expect("grid");
    if first.gap() < kernel {
        instants.push((a, CrossingLocation::Start));
    }
    let mut interior = Vec::new();
    for win in fine.windows(2) {
        let (l, r) = (&win[0], &win[1]);
        if l.gap() >= near && r.gap() >= near {
            continue;
        }
        let mv = T::lit(std::f64::consts::FRAC_PI_2) * frob(&(&r.w - &l.w));
        interior.extend(pair.locate(l, r, mv, tcross, tol.max_bisect, 0)?);
    }
    // Drop interior hits that are numerically the endpoint crossings.
    let guard = tcross.max((b - a) * T::lit(1e-9)) * T::lit(100.0);
    let end_crossing = last.gap() < kernel;
    interior.retain(|&t| {
        !((first.gap() < kernel && t - a <= guard) || (end_crossing && b - t <= guard))
    });
    interior.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    interior.dedup_by(|x, y| (*x - *y).abs() <= guard);
    instants.extend(interior.into_iter().map(|t| (t, CrossingLocation::Interior)));
    if end_crossing {
        instants.push((b, CrossingLocation::End));
    }

    let h = ((b - a) / T::of(path.grid())) * T::lit(1e-2);
    instants
        .par_iter()
        .map(|&(t0, loc)| crossing_record(&pair, t0, loc, h))
        .collect()
}

impl<'a, T: Real> Pair<'a, T> {
    /// Crossing instants inside `[l, r]`: bisection on the window count, and a
    /// golden-section search for touching (zero net flow) contacts.
    fn locate(&self, l: &Node<T>, r: &Node<T>, mv: T, tcross: T, max_bisect: usize, depth: usize) -> Result<Vec<T>> {
        let band = mv * T::lit(1.25) + T::lit(1e-12);
        let window = (0..24)
            .map(|k| T::lit(0.12 + 0.02 * k as f64))
            .find(|&w| {
                l.angles.iter().chain(r.angles.iter()).all(|&x| (x + w).abs() > band) && w > band * T::lit(2.0)
            });
        let w = match window {
            Some(w) => w,
            None if depth < 12 => {
                let mid_t = (l.t + r.t) * T::lit(0.5);
                let mid = Node::new(mid_t, self.w(mid_t)?);
                let m1 = T::lit(std::f64::consts::FRAC_PI_2) * frob(&(&mid.w - &l.w));
                let m2 = T::lit(std::f64::consts::FRAC_PI_2) * frob(&(&r.w - &mid.w));
                let mut out = self.locate(l, &mid, m1, tcross, max_bisect, depth + 1)?;
                out.extend(self.locate(&mid, r, m2, tcross, max_bisect, depth + 1)?);
                return Ok(out);
            }
            None => return Err(Error::Numerical("eigen-angles too crowded to separate crossings".into())),
        };
        let mut hits = Vec::new();
        self.bisect(l.t, r.t, l.count_in(w), r.count_in(w), w, tcross, max_bisect, &mut hits)?;
        if hits.is_empty() {
            if let Some(t) = self.touching(l, r, tcross)? {
                hits.push(t);
            }
        }
        Ok(hits)
    }

    #[allow(clippy::too_many_arguments)]
    fn bisect(&self, l: T, r: T, nl: usize, nr: usize, w: T, tcross: T, left: usize, out: &mut Vec<T>) -> Result<()> {
        if nl == nr {
            return Ok(());
        }
        let mid = (l + r) * T::lit(0.5);
        if r - l <= tcross || left == 0 {
            out.push(mid);
            return Ok(());
        }
        let nm = Node::new(mid, self.w(mid)?).count_in(w);
        self.bisect(l, mid, nl, nm, w, tcross, left - 1, out)?;
        self.bisect(mid, r, nm, nr, w, tcross, left - 1, out)
    }

    /// Golden-section minimisation of the smallest |angle|; reports a contact
    /// when the minimum is numerically zero.
    fn touching(&self, l: &Node<T>, r: &Node<T>, tcross: T) -> Result<Option<T>> {
        let g = |t: T| -> Result<T> { Ok(Node::new(t, self.w(t)?).gap()) };
        let phi = T::lit(0.618_033_988_749_895);
        let (mut lo, mut hi) = (l.t, r.t);
        let mut x1 = hi - (hi - lo) * phi;
        let mut x2 = lo + (hi - lo) * phi;
        let (mut f1, mut f2) = (g(x1)?, g(x2)?);
        let floor = l.gap().min(r.gap());
        if f1.min(f2) >= floor {
            return Ok(None);
        }
        for _ in 0..200 {
            if hi - lo <= tcross {
                break;
            }
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - (hi - lo) * phi;
                f1 = g(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + (hi - lo) * phi;
                f2 = g(x2)?;
            }
        }
        let t = (lo + hi) * T::lit(0.5);
        Ok(if g(t)? < T::lit(KERNEL_ANGLE) { Some(t) } else { None })
    }
}

/// Crossing form `d/dt ω(v, w(t))` of one path at `t0` on the vectors `v`,
/// with `v + w(t) ∈ ℓ(t)` and `w(t)` in the complement `J ℓ(t0)`.
fn form_of_path<T: Real>(path: &dyn LagrangianPath<T>, t0: T, v: &CMat<T>, h: T, lo: T, hi: T) -> Result<(CMat<T>, CMat<T>)> {
    let space = path.space();
    let z0 = space.frame_of_unitary(&path.unitary(t0)?);
    let l1 = space.jc() * &z0;
    let f = |t: T| -> Result<CMat<T>> {
        let z = space.frame_of_unitary(&path.unitary(t)?);
        let sys = hstack(&z, &(-&l1));
        let sol = sys
            .lu()
            .solve(v)
            .ok_or_else(|| Error::Numerical("complement is not transversal".into()))?;
        let m = z.ncols();
        let d = sol.rows(m, m).into_owned();
        let wv = &l1 * d;
        Ok(wv.adjoint() * space.jc() * v)
    };
    let deriv = |h: T| -> Result<CMat<T>> {
        let two = T::lit(2.0);
        if t0 - two * h >= lo && t0 + two * h <= hi {
            Ok((f(t0 + h)? - f(t0 - h)?) * cr(T::one() / (two * h)))
        } else if t0 + two * h <= hi {
            let (f0, f1, f2) = (f(t0)?, f(t0 + h)?, f(t0 + two * h)?);
            Ok((f1 * cr(T::lit(4.0)) - f0 * cr(T::lit(3.0)) - f2) * cr(T::one() / (two * h)))
        } else {
            let (f0, f1, f2) = (f(t0)?, f(t0 - h)?, f(t0 - two * h)?);
            Ok((f0 * cr(T::lit(3.0)) - f1 * cr(T::lit(4.0)) + f2) * cr(T::one() / (two * h)))
        }
    };
    let dh = deriv(h)?;
    let dh2 = deriv(h * T::lit(0.5))?;
    let rich = (&dh2 * cr(T::lit(4.0)) - dh) * cr(T::one() / T::lit(3.0));
    Ok((rich, dh2))
}

fn crossing_record<T: Real>(pair: &Pair<'_, T>, t0: T, location: CrossingLocation, h: T) -> Result<CrossingRecord<T>> {
    let w = pair.w(t0)?;
    let (angles, vecs) = unitary_eigen(&w);
    let kernel_tol = T::lit(1e-6);
    let idx: Vec<usize> = (0..angles.len()).filter(|&i| angles[i].abs() < kernel_tol).collect();
    let k = idx.len();
    let x = CMat::from_fn(vecs.nrows(), k, |r, c| vecs[(r, idx[c])]);
    let space = pair.path.space();
    let u1 = pair.path.unitary(t0)?;
    let v = (space.e_plus() * &x + space.e_minus() * (&u1 * &x)) * cr(T::lit(std::f64::consts::FRAC_1_SQRT_2));

    let (r1, c1) = form_of_path(pair.path, t0, &v, h, pair.a, pair.b)?;
    let (r0, c0) = form_of_path(pair.reference, t0, &v, h, pair.a, pair.b)?;
    let form = crate::linalg::herm(&(r1 - r0));
    let coarse = crate::linalg::herm(&(c1 - c0));
    let (vals, _) = hermitian_eigen(&form);
    let (cvals, _) = hermitian_eigen(&coarse);
    let scale = norm2(&form).max(T::one());
    let disagree = vals
        .iter()
        .zip(cvals.iter())
        .any(|(p, q)| (*p - *q).abs() > T::lit(1e-6) * scale);
    let signature = Signature::of(&vals, T::lit(1e-7) * scale);
    let mut degenerate = disagree || signature.zero > 0 || k == 0;

    if location == CrossingLocation::Interior && !degenerate {
        // Cross-check the signature against the net eigen-angle flow.
        let dt = h * T::lit(4.0);
        let lo = (t0 - dt).max(pair.a);
        let hi = (t0 + dt).min(pair.b);
        let wnd = T::lit(0.05);
        let before = Node::new(lo, pair.w(lo)?).count_in(wnd) as i64;
        let after = Node::new(hi, pair.w(hi)?).count_in(wnd) as i64;
        if before - after != signature.sgn() {
            degenerate = true;
        }
    }
    Ok(CrossingRecord { t0, location, intersection_dim: k, form, eigenvalues: vals, signature, degenerate })
}

/// `μ^CLM(L₀, ℓ; [a, b])` with a constant reference.
pub fn maslov_clm<T: Real>(
    l0: &CMat<T>,
    path: &dyn LagrangianPath<T>,
    tol: &Tolerances,
) -> Result<MaslovResult<T>> {
    let (a, b) = path.interval();
    let reference = ConstPath::new(path.space().clone(), l0.clone(), a, b)?;
    maslov_pair(&reference, path, tol)
}

/// `μ^CLM(ℓ₀, ℓ₁; [a, b])` for two paths over the interval of `path`.
pub fn maslov_pair<T: Real>(
    reference: &dyn LagrangianPath<T>,
    path: &dyn LagrangianPath<T>,
    tol: &Tolerances,
) -> Result<MaslovResult<T>> {
    let crossings = match find_crossings(reference, path, tol) {
        Ok(c) => c,
        Err(Error::NonIsolatedCrossing { .. }) | Err(Error::Numerical(_)) => {
            let (index, delta) = perturbed_index(reference, path)?;
            return Ok(MaslovResult { index, crossings: Vec::new(), method: IndexMethod::Perturbed { delta } });
        }
        Err(e) => return Err(e),
    };
    if crossings.iter().any(|c| c.degenerate) {
        let (index, delta) = perturbed_index(reference, path)?;
        return Ok(MaslovResult { index, crossings, method: IndexMethod::Perturbed { delta } });
    }
    let index = crossings.iter().map(|c| c.contribution()).sum();
    Ok(MaslovResult { index, crossings, method: IndexMethod::CrossingForms })
}

/// The δ sweep: `1e-6 … 1e-3` on a half-decade grid, first two agreeing
/// winding counts win.
pub fn perturbed_index<T: Real>(reference: &dyn LagrangianPath<T>, path: &dyn LagrangianPath<T>) -> Result<(i64, f64)> {
    let deltas = [1e-6, 3.162_277_660_168_379e-6, 1e-5, 3.162_277_660_168_379e-5, 1e-4, 3.162_277_660_168_379e-4, 1e-3];
    let mut prev: Option<i64> = None;
    for &d in &deltas {
        let v = maslov_winding(reference, path, T::lit(d))?;
        if prev == Some(v) {
            return Ok((v, d));
        }
        prev = Some(v);
    }
    Err(Error::UnresolvableDegeneracy { delta_max: 1e-3 })
}

/// Net number of eigen-angles of `e^{-iδ}W(t)` passing upward through 0,
/// computed from the continuous change of `arg det W` and the branch values
/// of the angles at the ends. Needs no crossing forms, so it also serves as
/// an independent check of [`maslov_pair`].
pub fn maslov_winding<T: Real>(reference: &dyn LagrangianPath<T>, path: &dyn LagrangianPath<T>, delta: T) -> Result<i64> {
    let (a, b) = path.interval();
    let pair = Pair::new(reference, path, a, b)?;
    let nodes = pair.refine(pair.uniform(path.grid())?, T::lit(COARSE_STEP), None)?;
    let mut lift = T::zero();
    for win in nodes.windows(2) {
        lift += crate::linalg::det(&(win[0].w.adjoint() * &win[1].w)).argument();
    }
    let rot = cis(-delta);
    let branch = |w: &CMat<T>| -> T {
        unitary_eigen(&(w * rot))
            .0
            .iter()
            .map(|&x| if x < T::zero() { x + T::two_pi() } else { x })
            .fold(T::zero(), |s, x| s + x)
    };
    let first = &nodes.first().expect("grid").w;
    let last = &nodes.last().expect("grid").w;
    let count = (lift - branch(last) + branch(first)) / T::two_pi();
    let rounded = count.round();
    if (count - rounded).abs() > T::lit(1e-3) {
        return Err(Error::Numerical(format!("winding count {} is not an integer", count.to_f())));
    }
    Ok(rounded.to_f() as i64)
}

/// `μ^CLM(φL₀, φℓ)` for a path of symplectic matrices `φ(t)`.
pub fn maslov_relative_pair<T: Real, G>(
    l0: &CMat<T>,
    path: &dyn LagrangianPath<T>,
    phi: G,
    tol: &Tolerances,
) -> Result<MaslovResult<T>>
where
    G: Fn(T) -> CMat<T> + Sync,
{
    let space = path.space().clone();
    let (a, b) = path.interval();
    let tsym = T::lit(tol.sympl);
    for i in 0..=8 {
        let t = a + (b - a) * T::of(i) / T::lit(8.0);
        let res = space.symplectic_residual(&phi(t));
        if res > tsym {
            return Err(Error::NotSymplectic { residual: res.to_f() });
        }
    }
    let moved_ref = FnPath::new(space.clone(), a, b, |t| phi(t) * l0).with_grid(path.grid());
    let moved = FnPath::new(space, a, b, |t| phi(t) * path.frame(t)).with_grid(path.grid());
    maslov_pair(&moved_ref, &moved, tol)
}
