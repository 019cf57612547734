//! Conforming P1 finite elements for the index form
//! `I(ξ, η) = ∫ ⟨Pξ' + Qξ, η'⟩ + ⟨Qᵀξ', η⟩ + ⟨Rξ, η⟩ dt`
//! with boundary conditions imposed by restricting to an explicit
//! orthonormal basis of the constrained nodal space.

use std::sync::Arc;

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{eye, BandedPencil, generalized_eigen, generalized_eigenvalues_real, orthonormal_range};
use crate::scalar::{cr, max_imag, real_part, CMat, RMat, Real, C};
use crate::spectral::count;

/// Time-dependent real coefficient matrix.
pub type Coef<T> = Arc<dyn Fn(T) -> RMat<T> + Send + Sync>;

pub fn constant<T: Real>(m: RMat<T>) -> Coef<T> {
    Arc::new(move |_| m.clone())
}

/// Admissible endpoint values `(u(0), u(T))`.
#[derive(Clone, Debug)]
pub enum BoundarySpec<T: Real> {
    Dirichlet,
    /// Natural boundary conditions.
    Neumann,
    /// `u(0) = ω u(T)`.
    QuasiPeriodic(C<T>),
    /// `u(0) ∈ V₀`, `u(T) ∈ V₁` (column frames).
    Separated { v0: CMat<T>, v1: CMat<T> },
    /// `(u(0), u(T)) ∈ W`, a frame of a subspace of `C^{2d}`.
    Pair(CMat<T>),
}

impl<T: Real> BoundarySpec<T> {
    /// Orthonormal frame of the admissible pairs in `C^{2d}`.
    pub fn pair_frame(&self, d: usize) -> Result<CMat<T>> {
        let tol = T::lit(1e-10);
        let w = match self {
            Self::Dirichlet => CMat::zeros(2 * d, 0),
            Self::Neumann => eye(2 * d),
            Self::QuasiPeriodic(om) => {
                let mut w = CMat::zeros(2 * d, d);
                for i in 0..d {
                    w[(i, i)] = *om;
                    w[(d + i, i)] = cr(T::one());
                }
                w
            }
            Self::Separated { v0, v1 } => {
                if v0.nrows() != d || v1.nrows() != d {
                    return Err(Error::DimensionMismatch("boundary frames must have d rows".into()));
                }
                crate::linalg::block_diag(&[v0, v1])
            }
            Self::Pair(w) => {
                if w.nrows() != 2 * d {
                    return Err(Error::DimensionMismatch("pair frame must have 2d rows".into()));
                }
                w.clone()
            }
        };
        Ok(orthonormal_range(&w, tol))
    }
}

/// Sturm-type quadratic form on `[t0, t1]` with boundary data and a mesh.
#[derive(Clone)]
pub struct GalerkinProblem<T: Real> {
    pub d: usize,
    pub t0: T,
    pub t1: T,
    pub p: Coef<T>,
    pub q: Coef<T>,
    pub r: Coef<T>,
    pub bc: BoundarySpec<T>,
    pub mesh: usize,
}

/// Assembled nodal matrices (before boundary restriction).
#[derive(Clone, Debug)]
pub struct NodalForm<T: Real> {
    pub d: usize,
    pub mesh: usize,
    pub stiffness: RMat<T>,
    pub mass: RMat<T>,
}

/// A form restricted to a subspace: `(Cᴴ K C, Cᴴ M C)`.
#[derive(Clone, Debug)]
pub struct Restricted<T: Real> {
    pub k: CMat<T>,
    pub m: CMat<T>,
}

impl<T: Real> Restricted<T> {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// Generalised eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        if max_imag(&self.k) == T::zero() && max_imag(&self.m) == T::zero() {
            return generalized_eigenvalues_real(&real_part(&self.k), &real_part(&self.m));
        }
        Ok(generalized_eigen(&self.k, &self.m)?.0)
    }

    /// `(index, nullity)` with `tol_null` absolute.
    pub fn morse(&self, tol_null: T) -> Result<(usize, usize)> {
        Ok(count(&self.eigenvalues()?, tol_null))
    }
}

/// Gauss–Legendre nodes and weights on [0, 1].
fn gauss3<T: Real>() -> [(T, T); 3] {
    let s = (0.6f64).sqrt() / 2.0;
    [
        (T::lit(0.5 - s), T::lit(5.0 / 18.0)),
        (T::lit(0.5), T::lit(8.0 / 18.0)),
        (T::lit(0.5 + s), T::lit(5.0 / 18.0)),
    ]
}

impl<T: Real> GalerkinProblem<T> {
    pub fn new(d: usize, t0: T, t1: T, p: Coef<T>, q: Coef<T>, r: Coef<T>, bc: BoundarySpec<T>, mesh: usize) -> Self {
        Self { d, t0, t1, p, q, r, bc, mesh }
    }

    /// `P = I`, `Q = 0` and the given `R`.
    pub fn sturm(d: usize, t0: T, t1: T, r: Coef<T>, bc: BoundarySpec<T>, mesh: usize) -> Self {
        Self::new(d, t0, t1, constant(RMat::identity(d, d)), constant(RMat::zeros(d, d)), r, bc, mesh)
    }

    pub fn with_bc(&self, bc: BoundarySpec<T>) -> Self {
        let mut out = self.clone();
        out.bc = bc;
        out
    }

    pub fn node(&self, i: usize) -> T {
        self.t0 + (self.t1 - self.t0) * T::of(i) / T::of(self.mesh)
    }

    /// Stiffness and mass on all `(mesh + 1)·d` nodal unknowns.
    pub fn assemble_nodal(&self) -> Result<NodalForm<T>> {
        let (d, n) = (self.d, self.mesh);
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("mesh and dimension must be positive".into()));
        }
        let size = (n + 1) * d;
        let mut k = RMat::zeros(size, size);
        let mut m = RMat::zeros(size, size);
        let h = (self.t1 - self.t0) / T::of(n);
        let g = gauss3::<T>();
        for e in 0..n {
            let ta = self.node(e);
            let mut blocks = [[RMat::zeros(d, d), RMat::zeros(d, d)], [RMat::zeros(d, d), RMat::zeros(d, d)]];
            for &(s, w) in &g {
                let t = ta + h * s;
                let p = self.p.as_ref()(t);
                let q = self.q.as_ref()(t);
                let r = self.r.as_ref()(t);
                if !p.iter().chain(q.iter()).chain(r.iter()).all(|x| x.is_finite()) {
                    return Err(Error::InvalidInput(format!("non-finite coefficient at t = {}", t.to_f())));
                }
                let ps = (&p + p.transpose()) * T::lit(0.5);
                if Cholesky::new(ps).is_none() {
                    return Err(Error::LegendreViolation { t: t.to_f() });
                }
                let phi = [T::one() - s, s];
                let dphi = [-T::one() / h, T::one() / h];
                let qt = q.transpose();
                let wh = w * h;
                for b in 0..2 {
                    for a in 0..2 {
                        let blk = &p * (dphi[a] * dphi[b]) + &q * (phi[a] * dphi[b]) + &qt * (dphi[a] * phi[b]) + &r * (phi[a] * phi[b]);
                        blocks[b][a] += blk * wh;
                    }
                }
            }
            for b in 0..2 {
                for a in 0..2 {
                    let (rb, ca) = ((e + b) * d, (e + a) * d);
                    let mut v = k.view_mut((rb, ca), (d, d));
                    v += &blocks[b][a];
                    let mval = if a == b { h / T::lit(3.0) } else { h / T::lit(6.0) };
                    for i in 0..d {
                        m[(rb + i, ca + i)] += mval;
                    }
                }
            }
        }
        let ks = (&k + k.transpose()) * T::lit(0.5);
        Ok(NodalForm { d, mesh: n, stiffness: ks, mass: m })
    }

    /// Orthonormal basis of the nodal vectors obeying the boundary condition.
    pub fn boundary_basis(&self) -> Result<CMat<T>> {
        basis_from_pairs(self.d, self.mesh, &self.bc.pair_frame(self.d)?)
    }

    /// Low eigenvalues, ascending, as the Richardson combination
    /// `(4λ_{h/2} - λ_h)/3` of this mesh and its refinement. Covers every
    /// eigenvalue below `max(1, 2|λ_min|)` plus `2d` more.
    pub fn low_eigenvalues(&self) -> Result<Vec<T>> {
        let pencil = |mesh: usize| -> Result<BandedPencil<T>> {
            let mut p = self.clone();
            p.mesh = mesh;
            let f = p.assemble()?;
            BandedPencil::new(&f.k, &f.m)
        };
        let coarse = pencil(self.mesh)?;
        let fine = pencil(2 * self.mesh)?;
        let lo = coarse.lowest(1).first().copied().unwrap_or(T::zero());
        let cut = T::one().max(lo.abs() * T::lit(2.0));
        let k = (coarse.count_below(cut) + 2 * self.d).min(coarse.dim());
        let (c, f) = (coarse.lowest(k), fine.lowest(k));
        Ok(c.iter().zip(&f).map(|(&c, &f)| (f * T::lit(4.0) - c) / T::lit(3.0)).collect())
    }

    /// `(index, nullity)` from [`Self::low_eigenvalues`] with an absolute
    /// threshold.
    pub fn morse_extrapolated(&self, tol_null: T) -> Result<(usize, usize)> {
        Ok(count(&self.low_eigenvalues()?, tol_null))
    }

    /// Assembled and restricted form.
    pub fn assemble(&self) -> Result<Restricted<T>> {
        let nodal = self.assemble_nodal()?;
        let c = self.boundary_basis()?;
        Ok(nodal.restrict(&c))
    }
}

/// `Cᴴ A C` using the column sparsity of `C`.
fn congruence<T: Real>(a: &RMat<T>, c: &CMat<T>) -> CMat<T> {
    let cols: Vec<Vec<(usize, C<T>)>> = (0..c.ncols())
        .map(|j| (0..c.nrows()).filter(|&i| c[(i, j)] != C::default()).map(|i| (i, c[(i, j)])).collect())
        .collect();
    let mut ac = CMat::zeros(a.nrows(), c.ncols());
    for (j, col) in cols.iter().enumerate() {
        for &(i, z) in col {
            for r in 0..a.nrows() {
                let x = a[(r, i)];
                if x != T::zero() {
                    ac[(r, j)] += z * x;
                }
            }
        }
    }
    CMat::from_fn(c.ncols(), c.ncols(), |i, j| {
        cols[i].iter().fold(C::default(), |acc, &(r, z)| acc + z.conj() * ac[(r, j)])
    })
}

/// Identity on interior nodes, `W` on the pair of end nodes.
pub fn basis_from_pairs<T: Real>(d: usize, mesh: usize, w: &CMat<T>) -> Result<CMat<T>> {
    if mesh == 0 {
        return Err(Error::InvalidInput("mesh must be positive".into()));
    }
    let size = (mesh + 1) * d;
    let nw = w.ncols();
    let interior = (mesh - 1) * d;
    let mut c = CMat::zeros(size, nw + interior);
    for j in 0..nw {
        for i in 0..d {
            c[(i, j)] = w[(i, j)];
            c[(mesh * d + i, j)] = w[(d + i, j)];
        }
    }
    for i in 0..interior {
        c[(d + i, nw + i)] = cr(T::one());
    }
    Ok(c)
}

impl<T: Real> NodalForm<T> {
    pub fn restrict(&self, c: &CMat<T>) -> Restricted<T> {
        let k = congruence(&self.stiffness, c);
        let m = congruence(&self.mass, c);
        Restricted { k: crate::linalg::herm(&k), m: crate::linalg::herm(&m) }
    }
}
