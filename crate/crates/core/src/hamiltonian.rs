//! Linear Hamiltonian systems `z' = J B(t) z`: fundamental solutions, the
//! geometric index `μ^CLM(L, Gr γ)`, the spectral index `-spfl(-J d/dt - λB)`
//! and the dihedral Bott-type splittings of both.

use std::sync::Arc;

use nalgebra::Cholesky;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dihedral::{range_basis, restrict_to, DihedralRep};
use crate::error::{Error, Result};
use crate::galerkin::{Coef, GalerkinProblem};
use crate::linalg::{block_diag, eigenspace, graph_frame, hermitian_eigenvalues, matrix_power, padded_svd, standard_j, SymplecticSpace};
use crate::maslov::{find_crossings, maslov_clm, perturbed_index, ConstPath, IndexMethod, LagrangianPath};
use crate::scalar::{complexify, cr, CMat, RMat, Real, C};
use crate::spectral::count;
use crate::tolerances::Tolerances;

/// Symmetry metadata: `B(t + T/n) = Mᵀ B(t) M` and `B(T/n - t) = N B(t) N`.
#[derive(Clone, Debug)]
pub struct HamiltonianSymmetry<T: Real> {
    pub n: usize,
    pub mm: RMat<T>,
    pub nn: RMat<T>,
}

/// `z' = J B(t) z` on `[0, period]`, `B` symmetric `2m × 2m`.
#[derive(Clone)]
pub struct LinearHamiltonianSystem<T: Real> {
    pub m: usize,
    pub period: T,
    pub b: Coef<T>,
    pub symmetry: Option<HamiltonianSymmetry<T>>,
}

impl<T: Real> LinearHamiltonianSystem<T> {
    pub fn new(m: usize, period: T, b: Coef<T>) -> Self {
        Self { m, period, b, symmetry: None }
    }

    pub fn constant(b: RMat<T>, period: T) -> Self {
        let m = b.nrows() / 2;
        Self::new(m, period, crate::galerkin::constant(b))
    }

    pub fn with_symmetry(mut self, n: usize, mm: RMat<T>, nn: RMat<T>) -> Self {
        self.symmetry = Some(HamiltonianSymmetry { n, mm, nn });
        self
    }

    /// Same coefficients on `[0, t1]`.
    pub fn restricted(&self, t1: T) -> Self {
        let mut out = self.clone();
        out.period = t1;
        out
    }

    pub fn at(&self, t: T) -> RMat<T> {
        self.b.as_ref()(t)
    }

    fn samples(&self, k: usize) -> impl Iterator<Item = T> + '_ {
        (0..=k).map(move |i| self.period * T::of(i) / T::of(k))
    }

    /// Largest `|B(t)|` over a uniform sample.
    pub fn bound(&self) -> T {
        self.samples(32).fold(T::zero(), |acc, t| acc.max(self.at(t).norm()))
    }

    /// Checks symmetry of `B` and, when present, the dihedral relations.
    pub fn validate(&self, tol_rel: T) -> Result<()> {
        let scale = self.bound().max(T::one());
        for t in self.samples(16) {
            let b = self.at(t);
            if b.nrows() != 2 * self.m || b.ncols() != 2 * self.m {
                return Err(Error::DimensionMismatch(format!("B must be {0}x{0}", 2 * self.m)));
            }
            let asym = (&b - b.transpose()).norm() / scale;
            if asym > tol_rel {
                return Err(Error::SymmetryViolated { relation: "B = B^T".into(), residual: asym.to_f() });
            }
        }
        if let Some(sym) = &self.symmetry {
            let shift = self.period / T::of(sym.n);
            for t in self.samples(16) {
                let r1 = (self.at(t + shift) - sym.mm.transpose() * self.at(t) * &sym.mm).norm() / scale;
                if r1 > tol_rel {
                    return Err(Error::SymmetryViolated { relation: "B(t+T/n) = M^T B(t) M".into(), residual: r1.to_f() });
                }
                let r2 = (self.at(shift - t) - &sym.nn * self.at(t) * &sym.nn).norm() / scale;
                if r2 > tol_rel {
                    return Err(Error::SymmetryViolated { relation: "B(T/n-t) = N B(t) N".into(), residual: r2.to_f() });
                }
            }
        }
        Ok(())
    }
}

/// Second-order system `-(P u' + Q u)' + Qᵀ u' + R u = 0`.
#[derive(Clone)]
pub struct SturmSystem<T: Real> {
    pub m: usize,
    pub period: T,
    pub p: Coef<T>,
    pub q: Coef<T>,
    pub r: Coef<T>,
}

impl<T: Real> SturmSystem<T> {
    pub fn new(m: usize, period: T, p: Coef<T>, q: Coef<T>, r: Coef<T>) -> Self {
        Self { m, period, p, q, r }
    }

    /// `P(t) ≻ 0` on a uniform sample.
    pub fn check_legendre(&self) -> Result<()> {
        for i in 0..=64 {
            let t = self.period * T::of(i) / T::lit(64.0);
            let p = self.p.as_ref()(t);
            let ps = (&p + p.transpose()) * T::lit(0.5);
            if Cholesky::new(ps).is_none() {
                return Err(Error::LegendreViolation { t: t.to_f() });
            }
        }
        Ok(())
    }

    /// `SP(t + T/n) = P(t)S`, `NP(T/n - t) = P(t)N` and the same for `R`;
    /// the mixed term changes sign under the reflection,
    /// `NQ(T/n - t) = -Q(t)N`.
    pub fn check_symmetry(&self, n: usize, s: &RMat<T>, nn: &RMat<T>, tol_rel: T) -> Result<()> {
        let shift = self.period / T::of(n);
        let coefs: [(&str, &Coef<T>, T); 3] = [("P", &self.p, T::one()), ("Q", &self.q, -T::one()), ("R", &self.r, T::one())];
        for i in 0..=16 {
            let t = self.period * T::of(i) / T::lit(16.0);
            for (name, c, refl) in coefs.iter() {
                let ct = c.as_ref()(t);
                let scale = ct.norm().max(T::one());
                let r1 = (s * c.as_ref()(t + shift) - &ct * s).norm() / scale;
                let r2 = (nn * c.as_ref()(shift - t) - &ct * nn * *refl).norm() / scale;
                for (res, rel) in [(r1, "S X(t+T/n) = X(t) S"), (r2, "N X(T/n-t) = ±X(t) N")] {
                    if res > tol_rel {
                        return Err(Error::SymmetryViolated { relation: format!("{name}: {rel}"), residual: res.to_f() });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn galerkin(&self, bc: crate::galerkin::BoundarySpec<T>, mesh: usize) -> GalerkinProblem<T> {
        GalerkinProblem::new(self.m, T::zero(), self.period, self.p.clone(), self.q.clone(), self.r.clone(), bc, mesh)
    }
}

/// `B = [[P⁻¹, -P⁻¹Q], [-QᵀP⁻¹, QᵀP⁻¹Q - R]]` in the variables
/// `z = (Pu' + Qu, u)`.
pub fn legendre_reduce<T: Real>(sturm: &SturmSystem<T>) -> Result<LinearHamiltonianSystem<T>> {
    sturm.check_legendre()?;
    let s = sturm.clone();
    let m = s.m;
    let b: Coef<T> = Arc::new(move |t| {
        let p = s.p.as_ref()(t);
        let q = s.q.as_ref()(t);
        let r = s.r.as_ref()(t);
        let pi = p.try_inverse().unwrap_or_else(|| RMat::from_element(m, m, T::lit(f64::NAN)));
        let mut out = RMat::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&pi);
        out.view_mut((0, m), (m, m)).copy_from(&(-(&pi * &q)));
        out.view_mut((m, 0), (m, m)).copy_from(&(-(q.transpose() * &pi)));
        out.view_mut((m, m), (m, m)).copy_from(&(q.transpose() * &pi * &q - r));
        (&out + out.transpose()) * T::lit(0.5)
    });
    Ok(LinearHamiltonianSystem::new(m, sturm.period, b))
}

/// Samples of the fundamental solution `γ' = JBγ`, `γ(0) = I`.
#[derive(Clone)]
pub struct SymplecticPath<T: Real> {
    b: Coef<T>,
    j: RMat<T>,
    pub times: Vec<T>,
    pub samples: Vec<RMat<T>>,
    /// Largest `|γᵀJγ - J| / max(1, |γ|²)` after re-projection.
    pub drift: T,
}

fn rk4<T: Real>(b: &Coef<T>, j: &RMat<T>, t: T, h: T, g: &RMat<T>) -> RMat<T> {
    let f = |s: T, y: &RMat<T>| j * b.as_ref()(s) * y;
    let half = h * T::lit(0.5);
    let k1 = f(t, g);
    let k2 = f(t + half, &(g + &k1 * half));
    let k3 = f(t + half, &(g + &k2 * half));
    let k4 = f(t + h, &(g + &k3 * h));
    g + (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (h / T::lit(6.0))
}

fn drift_of<T: Real>(j: &RMat<T>, g: &RMat<T>) -> T {
    (g.transpose() * j * g - j).norm() / g.norm_squared().max(T::one())
}

/// First-order correction `γ ← γ(I + ½JE)` with `E = γᵀJγ - J`.
fn reproject<T: Real>(j: &RMat<T>, g: &mut RMat<T>) {
    for _ in 0..3 {
        let e = g.transpose() * j * &*g - j;
        if e.norm() < T::eps() * T::lit(16.0) * g.norm_squared() {
            break;
        }
        let corr = RMat::identity(g.nrows(), g.nrows()) + j * e * T::lit(0.5);
        *g = &*g * corr;
    }
}

/// Classical RK4 with symplectic re-projection after every step.
pub fn fundamental_solution<T: Real>(sys: &LinearHamiltonianSystem<T>, steps: usize, tol_sympl: T) -> Result<SymplecticPath<T>> {
    if steps < 2 {
        return Err(Error::InvalidInput("at least two steps are needed".into()));
    }
    let n = 2 * sys.m;
    let j = standard_j::<T>(sys.m);
    let h = sys.period / T::of(steps);
    let mut g = RMat::identity(n, n);
    let mut times = vec![T::zero()];
    let mut samples = vec![g.clone()];
    let mut drift = T::zero();
    for i in 0..steps {
        let t = h * T::of(i);
        g = rk4(&sys.b, &j, t, h, &g);
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::Numerical(format!("fundamental solution blew up at t = {}", t.to_f())));
        }
        reproject(&j, &mut g);
        let d = drift_of(&j, &g);
        drift = drift.max(d);
        if d > tol_sympl {
            return Err(Error::DriftExceeded { drift: d.to_f() });
        }
        times.push(h * T::of(i + 1));
        samples.push(g.clone());
    }
    Ok(SymplecticPath { b: sys.b.clone(), j, times, samples, drift })
}

impl<T: Real> SymplecticPath<T> {
    pub fn end(&self) -> &RMat<T> {
        self.samples.last().expect("at least one sample")
    }

    pub fn period(&self) -> T {
        *self.times.last().expect("at least one sample")
    }

    /// `γ(t)` by one RK4 step from the preceding sample.
    pub fn at(&self, t: T) -> RMat<T> {
        let n = self.times.len();
        let h = self.times[1] - self.times[0];
        let t = t.max(T::zero()).min(self.times[n - 1]);
        let i = ((t / h).floor().to_f() as usize).min(n - 1);
        let dt = t - self.times[i];
        if dt <= T::zero() {
            return self.samples[i].clone();
        }
        rk4(&self.b, &self.j, self.times[i], dt, &self.samples[i])
    }
}

/// `t ↦ Gr γ(t)` in `(C^{4m}, -ω ⊕ ω)` over `[a, b]`.
pub struct GraphPath<'a, T: Real> {
    path: &'a SymplecticPath<T>,
    space: SymplecticSpace<T>,
    a: T,
    b: T,
}

impl<'a, T: Real> GraphPath<'a, T> {
    pub fn new(path: &'a SymplecticPath<T>) -> Self {
        let p = path.period();
        Self::on(path, T::zero(), p)
    }

    pub fn on(path: &'a SymplecticPath<T>, a: T, b: T) -> Self {
        let m = path.j.nrows() / 2;
        Self { path, space: SymplecticSpace::standard(m).doubled(), a, b }
    }
}

impl<T: Real> LagrangianPath<T> for GraphPath<'_, T> {
    fn space(&self) -> &SymplecticSpace<T> {
        &self.space
    }
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn grid(&self) -> usize {
        (self.path.times.len() - 1).clamp(16, 256)
    }
    fn frame(&self, t: T) -> CMat<T> {
        graph_frame(&complexify(&self.path.at(t)))
    }
}

/// `t ↦ γ(t)V₀`, or `diag(γ, γ)V₀` when doubled.
pub struct ImagePath<'a, T: Real> {
    path: &'a SymplecticPath<T>,
    v0: CMat<T>,
    doubled: bool,
    space: SymplecticSpace<T>,
    a: T,
    b: T,
}

impl<'a, T: Real> ImagePath<'a, T> {
    pub fn new(path: &'a SymplecticPath<T>, v0: CMat<T>, doubled: bool, a: T, b: T) -> Self {
        let sp = SymplecticSpace::standard(path.j.nrows() / 2);
        let space = if doubled { sp.direct_sum(&sp) } else { sp };
        Self { path, v0, doubled, space, a, b }
    }
}

impl<T: Real> LagrangianPath<T> for ImagePath<'_, T> {
    fn space(&self) -> &SymplecticSpace<T> {
        &self.space
    }
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn grid(&self) -> usize {
        (self.path.times.len() - 1).clamp(16, 256)
    }
    fn frame(&self, t: T) -> CMat<T> {
        let g = complexify(&self.path.at(t));
        if self.doubled {
            block_diag(&[&g, &g]) * &self.v0
        } else {
            g * &self.v0
        }
    }
}

/// `L_D = {x = 0}` at both ends.
pub fn dirichlet<T: Real>(m: usize) -> CMat<T> {
    let mut d = CMat::zeros(2 * m, m);
    for i in 0..m {
        d[(i, i)] = cr(T::one());
    }
    block_diag(&[&d, &d])
}

/// `L_N = {p = 0}` at both ends.
pub fn neumann<T: Real>(m: usize) -> CMat<T> {
    let mut d = CMat::zeros(2 * m, m);
    for i in 0..m {
        d[(m + i, i)] = cr(T::one());
    }
    block_diag(&[&d, &d])
}

/// The diagonal `Δ`.
pub fn periodic<T: Real>(m: usize) -> CMat<T> {
    graph_frame(&CMat::identity(2 * m, 2 * m))
}

/// Boundary condition of `Q`-twisted loops, `z(T) = Q⁻¹ z(0)`.
pub fn twisted_loop<T: Real>(q: &CMat<T>) -> Result<CMat<T>> {
    let qi = q.clone().try_inverse().ok_or_else(|| Error::Numerical("Q is singular".into()))?;
    Ok(graph_frame(&qi))
}

/// `ι_geo = μ^CLM(L, Gr γ; [0, T])`. A graph path that stays in `L` on a
/// whole subinterval is reported as [`Error::NonIsolatedCrossing`] rather
/// than regularised.
pub fn geometric_index<T: Real>(path: &SymplecticPath<T>, l: &CMat<T>, tol: &Tolerances) -> Result<i64> {
    let graph = GraphPath::new(path);
    let (a, b) = graph.interval();
    let reference = ConstPath::new(graph.space().clone(), l.clone(), a, b)?;
    let crossings = find_crossings(&reference, &graph, tol)?;
    if crossings.iter().any(|c| c.degenerate) {
        return Ok(perturbed_index(&reference, &graph)?.0);
    }
    Ok(crossings.iter().map(|c| c.contribution()).sum())
}

/// Outcome of the truncated spectral computation of `ι_spec`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralIndex {
    pub index: i64,
    /// Number of basis functions in the accepted window.
    pub modes: usize,
    /// `(window, index)` for every window tried.
    pub history: Vec<(usize, i64)>,
}

/// Eigenpairs of `-J d/dt` on `{(z(0), z(T)) ∈ L}`: angles `θ ∈ (-π, π]`
/// with orthonormal initial values; `μ = (θ + 2πk)/T`.
fn free_spectrum<T: Real>(m: usize, l: &CMat<T>) -> Result<Vec<(T, CMat<T>)>> {
    let n = 2 * m;
    if l.nrows() != 2 * n || l.ncols() != n {
        return Err(Error::DimensionMismatch("boundary Lagrangian must be 4m x 2m".into()));
    }
    let sp = SymplecticSpace::<T>::standard(m);
    let (ep, em) = (sp.e_plus().clone(), sp.e_minus().clone());
    let a = l.rows(0, n).into_owned();
    let b = l.rows(n, n).into_owned();
    // e^{θJ} = e^{-iθ} on E₊ and e^{iθ} on E₋, so with u = e^{iθ} the
    // condition (B - e^{θJ}A)c = 0 becomes (uX - Y)c = 0.
    let x = crate::linalg::vstack(&(ep.adjoint() * &b), &(-(em.adjoint() * &a)));
    let y = crate::linalg::vstack(&(ep.adjoint() * &a), &(-(em.adjoint() * &b)));
    let xi = x.try_inverse().ok_or_else(|| Error::Numerical("degenerate boundary pencil".into()))?;
    let vals = crate::linalg::general_eigenvalues(&(xi * y))?;
    let mut th: Vec<T> = vals.iter().map(|u| {
        use nalgebra::ComplexField;
        u.argument()
    }).collect();
    th.sort_by(|p, q| p.partial_cmp(q).expect("finite angles"));
    let gap = T::lit(1e-6);
    let mut clusters: Vec<Vec<T>> = Vec::new();
    for t in th {
        match clusters.last_mut() {
            Some(c) if t - *c.last().expect("nonempty") < gap => c.push(t),
            _ => clusters.push(vec![t]),
        }
    }
    if clusters.len() > 1 {
        let first = clusters[0][0];
        let last = *clusters.last().expect("nonempty").last().expect("nonempty");
        if first + T::two_pi() - last < gap {
            let head = clusters.remove(0);
            clusters.last_mut().expect("nonempty").extend(head.into_iter().map(|t| t + T::two_pi()));
        }
    }
    let j = complexify(&standard_j::<T>(m));
    let mut out = Vec::new();
    for c in clusters {
        let r = c.len();
        let theta = c.iter().fold(T::zero(), |s, &t| s + t) / T::of(r);
        let rot = CMat::identity(n, n) * cr(theta.cos()) + &j * cr(theta.sin());
        let k = &b - rot * &a;
        let (_, _, v) = padded_svd(&k);
        let kernel = v.columns(n - r, r).into_owned();
        let z0 = crate::linalg::orthonormal_range(&(&a * kernel), T::lit(1e-8));
        if z0.ncols() != r {
            return Err(Error::Numerical("eigenvector deficiency in the free spectrum".into()));
        }
        out.push((theta, z0));
    }
    Ok(out)
}

fn gauss8<T: Real>() -> Vec<(T, T)> {
    const X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    let mut out = Vec::with_capacity(8);
    for i in 0..4 {
        out.push((T::lit(0.5 - X[i] / 2.0), T::lit(W[i] / 2.0)));
        out.push((T::lit(0.5 + X[i] / 2.0), T::lit(W[i] / 2.0)));
    }
    out
}

/// Negative eigenvalue counts of `diag(μ)` and `diag(μ) - G` for the
/// window `|k| ≤ kmax`.
fn truncated_index<T: Real>(sys: &LinearHamiltonianSystem<T>, spectrum: &[(T, CMat<T>)], kmax: usize, tol: &Tolerances) -> i64 {
    let n = 2 * sys.m;
    let tt = sys.period;
    let jc = complexify(&standard_j::<T>(sys.m));
    let mut mu = Vec::new();
    let mut z = Vec::new();
    for k in -(kmax as i64)..=(kmax as i64) {
        for (theta, z0) in spectrum {
            let m = (*theta + T::two_pi() * T::lit(k as f64)) / tt;
            for c in 0..z0.ncols() {
                mu.push(m);
                z.push(z0.column(c).into_owned());
            }
        }
    }
    let nb = mu.len();
    let jz: Vec<_> = z.iter().map(|v| &jc * v).collect();
    let panels = (4 * kmax + 8).max(16);
    let h = tt / T::of(panels);
    let scale = cr(T::one() / tt.sqrt());
    let pts: Vec<(T, T)> = (0..panels)
        .flat_map(|p| gauss8::<T>().into_iter().map(move |(s, w)| (h * (T::of(p) + s), w * h)))
        .collect();
    let g = pts
        .par_iter()
        .map(|&(t, w)| {
            let phi = CMat::from_fn(n, nb, |r, c| {
                let (s, co) = (mu[c] * t).sin_cos();
                (z[c][r] * cr(co) + jz[c][r] * cr(s)) * scale
            });
            let b = complexify(&sys.at(t));
            phi.adjoint() * b * phi * cr(w)
        })
        .reduce(|| CMat::zeros(nb, nb), |a, b| a + b);
    let h0 = CMat::from_diagonal(&nalgebra::DVector::from_iterator(nb, mu.iter().map(|&x| cr(x))));
    let h1 = crate::linalg::herm(&(&h0 - g));
    let top = mu.iter().fold(T::one(), |acc, x| acc.max(x.abs()));
    let tol_null = T::lit(tol.null_rel) * top;
    let neg0 = count(&mu, tol_null).0 as i64;
    let neg1 = count(&hermitian_eigenvalues(&h1), tol_null).0 as i64;
    neg1 - neg0
}

/// `ι_spec = -spfl(-J d/dt - λB; λ ∈ [0, 1])` on `D(T, L)`, computed in the
/// eigenbasis of `-J d/dt` with a window widened until two successive
/// windows agree.
pub fn spectral_index<T: Real>(sys: &LinearHamiltonianSystem<T>, l: &CMat<T>, tol: &Tolerances) -> Result<SpectralIndex> {
    let spectrum = free_spectrum(sys.m, l)?;
    let reach = (sys.bound() * sys.period / T::two_pi()).ceil().to_f() as usize;
    let mut kmax = (reach + 3).max(4);
    let mut history = Vec::new();
    for _ in 0..6 {
        let idx = truncated_index(sys, &spectrum, kmax, tol);
        history.push((kmax, idx));
        if history.len() >= 2 && history[history.len() - 2].1 == idx {
            let modes = (2 * kmax + 1) * 2 * sys.m;
            return Ok(SpectralIndex { index: idx, modes, history });
        }
        kmax *= 2;
    }
    Err(Error::NoConvergence { iterations: history.len(), residual: f64::NAN })
}

/// `ι(L) = I(-J d/dt, -J d/dt - C)`, `C = diag(I, -I)`.
pub fn iota_l<T: Real>(l: &CMat<T>, m: usize, period: T, tol: &Tolerances) -> Result<i64> {
    let mut c = RMat::identity(2 * m, 2 * m);
    for i in m..2 * m {
        c[(i, i)] = -T::one();
    }
    Ok(spectral_index(&LinearHamiltonianSystem::constant(c, period), l, tol)?.index)
}

/// One term `μ^CLM(V₁, γ̃(t)V₀; [0, T/(2n)])` of the Hamiltonian splitting.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentIndex {
    pub k: usize,
    pub sign: i32,
    pub index: i64,
    pub perturbed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BottReport {
    pub n: usize,
    /// `ι_geo(z)` with `L = Gr(Q⁻¹)`.
    pub lhs: i64,
    pub plus: i64,
    pub minus: i64,
    pub components: Vec<ComponentIndex>,
    pub lhs_equals_sum: bool,
    pub plus_equals_components: bool,
    pub minus_equals_components: bool,
}

impl BottReport {
    pub fn holds(&self) -> bool {
        self.lhs_equals_sum && self.plus_equals_components && self.minus_equals_components
    }
}

/// Both sides of the Hamiltonian dihedral splitting: `ι_geo = ι⁺ + ι⁻` with
/// `ι^± = μ^CLM(V_±(MN) × V_±(NM^{n-1}), Gr γ; [0, T/2])`, and each `ι^±` as
/// the sum of the half-interval component indices with `h = n - 1`.
pub fn bott_hamiltonian<T: Real>(
    sys: &LinearHamiltonianSystem<T>,
    rep: &DihedralRep<T>,
    steps: usize,
    tol: &Tolerances,
) -> Result<BottReport> {
    sys.validate(T::lit(tol.rel.max(1e-9)))?;
    let n = rep.n;
    let path = fundamental_solution(sys, steps, T::lit(tol.sympl))?;
    let lhs = maslov_clm(&twisted_loop(&rep.q)?, &GraphPath::new(&path), tol)?.index;
    let mn = &rep.m * &rep.nn;
    let nmh = &rep.nn * matrix_power(&rep.m, n - 1);
    let half = sys.period / T::lit(2.0);
    let split = |s: i32| -> Result<i64> {
        let l = block_diag(&[&eigenspace(&mn, s), &eigenspace(&nmh, s)]);
        Ok(maslov_clm(&l, &GraphPath::on(&path, T::zero(), half), tol)?.index)
    };
    let (plus, minus) = (split(1)?, split(-1)?);
    let jobs: Vec<(usize, i32)> = (0..=rep.nbar()).flat_map(|k| [(k, 1), (k, -1)]).collect();
    let components = jobs
        .par_iter()
        .map(|&(k, s)| {
            let c = rep.component_boundary_data(k, n - 1, s)?;
            let img = ImagePath::new(&path, c.v0.clone(), c.doubled, c.t0, c.t1);
            let r = maslov_clm(&c.v1, &img, tol)?;
            Ok(ComponentIndex { k, sign: s, index: r.index, perturbed: matches!(r.method, IndexMethod::Perturbed { .. }) })
        })
        .collect::<Result<Vec<_>>>()?;
    let sum = |s: i32| components.iter().filter(|c| c.sign == s).map(|c| c.index).sum::<i64>();
    Ok(BottReport {
        n,
        lhs,
        plus,
        minus,
        lhs_equals_sum: lhs == plus + minus,
        plus_equals_components: plus == sum(1),
        minus_equals_components: minus == sum(-1),
        components,
    })
}

/// `ι_spec` of the restriction to `E_k`: the problem on `[0, T/n]` with
/// `z(T/n) = ζᵏ M⁻¹ z(0)`, for `0 ≤ k < n`.
pub fn isotypic_spectral_indices<T: Real>(
    sys: &LinearHamiltonianSystem<T>,
    rep: &DihedralRep<T>,
    tol: &Tolerances,
) -> Result<Vec<i64>> {
    let part = sys.restricted(sys.period / T::of(rep.n));
    (0..rep.n)
        .into_par_iter()
        .map(|k| {
            let l = graph_frame(&(rep.m.adjoint() * rep.zeta(k as i64)));
            Ok(spectral_index(&part, &l, tol)?.index)
        })
        .collect()
}

/// `dim ker(γⁿ - z)` and `Σ_{ωⁿ = z} dim ker(γ - ω)`.
pub fn cyclic_nullity<T: Real>(gamma: &RMat<T>, n: usize, z: C<T>, tol: T) -> (usize, usize) {
    let g = complexify(gamma);
    let size = g.nrows();
    let id = CMat::<T>::identity(size, size);
    let nullity = |a: &CMat<T>| size - crate::linalg::rank(a, tol);
    use nalgebra::ComplexField;
    let lhs = nullity(&(matrix_power(&g, n) - &id * z));
    let (r, arg) = (z.modulus(), z.argument());
    let rhs = (0..n)
        .map(|j| {
            let w = crate::scalar::cis((arg + T::two_pi() * T::of(j)) / T::of(n)) * cr(r.powf(T::one() / T::of(n)));
            nullity(&(&g - &id * w))
        })
        .sum();
    (lhs, rhs)
}

/// Morse indices of the Lagrangian splitting for one `h`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LagrangianBottReport {
    pub n: usize,
    pub h: usize,
    pub total: usize,
    pub plus: usize,
    pub minus: usize,
    /// `(k, sign, index)` from projecting the loop form.
    pub components: Vec<(usize, i32, usize)>,
    /// `(k, sign, index)` from the half-interval boundary problems.
    pub half_interval: Vec<(usize, i32, usize)>,
    pub split_holds: bool,
    pub components_hold: bool,
    pub routes_agree: bool,
}

impl LagrangianBottReport {
    pub fn holds(&self) -> bool {
        self.split_holds && self.components_hold && self.routes_agree
    }
}

/// `iMor` of the index form on twisted loops, split over `E_h^±` and
/// `F_{k,h}^±`; `mesh` counts elements over a full period.
pub fn bott_lagrangian<T: Real>(
    sturm: &SturmSystem<T>,
    rep: &DihedralRep<T>,
    h: usize,
    mesh: usize,
    tol: &Tolerances,
) -> Result<LagrangianBottReport> {
    sturm.check_legendre()?;
    rep.check_mesh(mesh)?;
    let (s, nn) = (crate::scalar::real_part(&rep.m), crate::scalar::real_part(&rep.nn));
    sturm.check_symmetry(rep.n, &s, &nn, T::lit(tol.rel.max(1e-9)))?;
    let form = rep.loop_form(&sturm.p, &sturm.q, &sturm.r, mesh)?;
    let morse = |f: &crate::galerkin::Restricted<T>| -> Result<usize> {
        let vals = f.eigenvalues()?;
        let top = vals.iter().fold(T::one(), |a, x| a.max(x.abs()));
        Ok(count(&vals, T::lit(tol.null_rel) * top).0)
    };
    let total = morse(&form)?;
    let plus = morse(&restrict_to(&form, &range_basis(&rep.e_h_projector(mesh, h, 1)?)))?;
    let minus = morse(&restrict_to(&form, &range_basis(&rep.e_h_projector(mesh, h, -1)?)))?;
    let jobs: Vec<(usize, i32)> = (0..=rep.nbar()).flat_map(|k| [(k, 1), (k, -1)]).collect();
    let half_mesh = mesh / (2 * rep.n);
    let rows = jobs
        .par_iter()
        .map(|&(k, sg)| {
            let projected = morse(&restrict_to(&form, &range_basis(&rep.fkh_projector(mesh, k, h, sg)?)))?;
            let comp = rep.component_boundary_data(k, h, sg)?;
            let half = morse(&rep.component_problem(&sturm.p, &sturm.q, &sturm.r, &comp, half_mesh).assemble()?)?;
            Ok(((k, sg, projected), (k, sg, half)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (components, half_interval): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let sum = |sg: i32| components.iter().filter(|c| c.1 == sg).map(|c| c.2).sum::<usize>();
    Ok(LagrangianBottReport {
        n: rep.n,
        h,
        total,
        plus,
        minus,
        split_holds: total == plus + minus,
        components_hold: plus == sum(1) && minus == sum(-1),
        routes_agree: components == half_interval,
        components,
        half_interval,
    })
}
