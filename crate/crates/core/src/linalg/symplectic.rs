//! Symplectic spaces, Lagrangian frames and the unitary chart of the
//! Lagrangian Grassmannian.
//!
//! A space is described by a real orthogonal `J` with `J² = -I`; the form is
//! `ω(x, y) = ⟨Jx, y⟩ = yᴴ J x`. The standard structure is
//! `J = [[0, -I], [I, 0]]`, the doubled space used for boundary value problems
//! carries `diag(-J, J)`, i.e. `-ω ⊕ ω`.
//!
//! With `L± = ker(iJ ∓ I)` every Lagrangian `L` is the graph of a unitary map
//! `U: L⁺ → L⁻`. Fixing orthonormal bases `E±` of `L±`, a frame `Z` of `L`
//! gives `a = E₊ᴴZ`, `b = E₋ᴴZ` and `U = b a⁻¹`. Rotating `L` by `e^{-εJ}`
//! multiplies `U` by `e^{-2iε}`, so positive paths turn the spectrum
//! counter-clockwise.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dense::{
    block_diag, eye, hermitian_eigen, intersection_dim, norm2, orthonormal_range, rank,
    same_subspace,
};
use crate::error::{Error, Result};
use crate::scalar::{complexify, cr, CMat, RMat, Real, C};

/// `J = [[0, -I], [I, 0]]` of size `2m`.
pub fn standard_j<T: Real>(m: usize) -> RMat<T> {
    let mut j = RMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = -T::one();
        j[(m + i, i)] = T::one();
    }
    j
}

/// A complex symplectic vector space `(C^{2m}, ⟨J·,·⟩)`.
#[derive(Clone, Debug)]
pub struct SymplecticSpace<T: Real> {
    m: usize,
    j: RMat<T>,
    jc: CMat<T>,
    e_plus: CMat<T>,
    e_minus: CMat<T>,
}

impl<T: Real> SymplecticSpace<T> {
    pub fn standard(m: usize) -> Self {
        Self::with_structure(standard_j(m)).expect("standard structure is valid")
    }

    /// Builds a space from an arbitrary compatible complex structure.
    pub fn with_structure(j: RMat<T>) -> Result<Self> {
        let n = j.nrows();
        if n != j.ncols() || n % 2 != 0 {
            return Err(Error::DimensionMismatch(format!("J must be square of even size, got {:?}", j.shape())));
        }
        let sq = &j * &j + RMat::identity(n, n);
        let anti = &j + j.transpose();
        let res = sq.norm().max(anti.norm());
        if res > T::lit(1e-12) * T::of(n) + T::eps() * T::lit(100.0) {
            return Err(Error::InvalidInput(format!("J is not an orthogonal complex structure (residual {:e})", res.to_f())));
        }
        let jc = complexify(&j);
        let ij = &jc * C::new(T::zero(), T::one());
        let (vals, vecs) = hermitian_eigen(&ij);
        let m = n / 2;
        // Eigenvalues are -1 (first m) and +1 (last m).
        if vals.iter().take(m).any(|&v| v > T::zero()) || vals.iter().skip(m).any(|&v| v < T::zero()) {
            return Err(Error::InvalidInput("iJ does not split evenly".into()));
        }
        let e_minus = vecs.columns(0, m).into_owned();
        let e_plus = vecs.columns(m, m).into_owned();
        Ok(Self { m, j, jc, e_plus, e_minus })
    }

    /// The space carrying `-ω ⊕ ω` on `C^{2m} ⊕ C^{2m}`.
    pub fn doubled(&self) -> Self {
        let neg = -&self.j;
        let jd = real_block_diag(&neg, &self.j);
        Self::with_structure(jd).expect("doubled structure is valid")
    }

    /// The space carrying `ω ⊕ ω` (used for the `E_k ⊕ E_{-k}` components).
    pub fn direct_sum(&self, other: &Self) -> Self {
        Self::with_structure(real_block_diag(&self.j, &other.j)).expect("direct sum is valid")
    }

    pub fn dim_half(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m
    }

    pub fn j(&self) -> &RMat<T> {
        &self.j
    }

    pub fn jc(&self) -> &CMat<T> {
        &self.jc
    }

    pub fn e_plus(&self) -> &CMat<T> {
        &self.e_plus
    }

    pub fn e_minus(&self) -> &CMat<T> {
        &self.e_minus
    }

    /// `ω(x, y) = yᴴ J x`.
    pub fn omega(&self, x: &CMat<T>, y: &CMat<T>) -> CMat<T> {
        y.adjoint() * &self.jc * x
    }

    /// Isotropy residual `|Zᴴ J Z| / |Z|²` and rank test.
    pub fn check_lagrangian(&self, z: &CMat<T>, tol_lag: T) -> Result<LagrangianCheck> {
        if z.nrows() != self.dim() {
            return Err(Error::DimensionMismatch(format!("frame has {} rows, space has dimension {}", z.nrows(), self.dim())));
        }
        let r = rank(z, tol_lag);
        if z.ncols() != self.m || r < self.m {
            return Err(Error::RankDeficient { rank: r, expected: self.m });
        }
        let scale = norm2(z).powi(2).max(T::eps());
        let residual = norm2(&(z.adjoint() * &self.jc * z)) / scale;
        Ok(LagrangianCheck { lagrangian: residual <= tol_lag, residual: residual.to_f() })
    }

    /// Unitary representative of the Lagrangian spanned by `z`.
    pub fn unitary_of(&self, z: &CMat<T>) -> Result<CMat<T>> {
        let a = self.e_plus.adjoint() * z;
        let b = self.e_minus.adjoint() * z;
        let ainv = a
            .try_inverse()
            .ok_or_else(|| Error::Numerical("frame projects degenerately onto L+; not Lagrangian".into()))?;
        Ok(b * ainv)
    }

    /// Orthonormal frame of the graph of `u: L⁺ → L⁻`.
    pub fn frame_of_unitary(&self, u: &CMat<T>) -> CMat<T> {
        (&self.e_plus + &self.e_minus * u) * cr(T::lit(std::f64::consts::FRAC_1_SQRT_2))
    }

    /// `dim(L₁ ∩ L₂) = dim ker(U₂⁻¹U₁ - I)`.
    pub fn intersection_dim_unitary(&self, z1: &CMat<T>, z2: &CMat<T>, tol: T) -> Result<usize> {
        let u1 = self.unitary_of(z1)?;
        let u2 = self.unitary_of(z2)?;
        let w = u2.adjoint() * u1 - eye::<T>(self.m);
        Ok(self.m - rank(&w, tol))
    }

    /// Symplecticity residual of a (complex) matrix, relative to `|g|²`.
    pub fn symplectic_residual(&self, g: &CMat<T>) -> T {
        let scale = norm2(g).powi(2).max(T::one());
        norm2(&(g.adjoint() * &self.jc * g - &self.jc)) / scale
    }

    /// Graph `[I; γ]` of a symplectic matrix as a Lagrangian of `-ω ⊕ ω`.
    pub fn graph_lagrangian(&self, gamma: &CMat<T>, tol_sympl: T) -> Result<CMat<T>> {
        if gamma.nrows() != self.dim() || gamma.ncols() != self.dim() {
            return Err(Error::DimensionMismatch("γ must be 2m×2m".into()));
        }
        let res = self.symplectic_residual(gamma);
        if res > tol_sympl {
            return Err(Error::NotSymplectic { residual: res.to_f() });
        }
        Ok(graph_frame(gamma))
    }
}

/// `[I; γ]` without validation.
pub fn graph_frame<T: Real>(gamma: &CMat<T>) -> CMat<T> {
    let n = gamma.nrows();
    super::dense::vstack(&eye(n), gamma)
}

fn real_block_diag<T: Real>(a: &RMat<T>, b: &RMat<T>) -> RMat<T> {
    let mut out = RMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianCheck {
    pub lagrangian: bool,
    pub residual: f64,
}

/// A validated Lagrangian subspace, stored as an orthonormal frame.
#[derive(Clone, Debug)]
pub struct LagrangianFrame<T: Real> {
    z: CMat<T>,
}

impl<T: Real> LagrangianFrame<T> {
    pub fn new(space: &SymplecticSpace<T>, z: CMat<T>, tol_lag: T) -> Result<Self> {
        let check = space.check_lagrangian(&z, tol_lag)?;
        if !check.lagrangian {
            return Err(Error::NotLagrangian { residual: check.residual });
        }
        Ok(Self { z: orthonormal_range(&z, tol_lag) })
    }

    pub fn from_real(space: &SymplecticSpace<T>, z: &RMat<T>, tol_lag: T) -> Result<Self> {
        Self::new(space, complexify(z), tol_lag)
    }

    /// Trusted constructor for frames produced internally.
    pub fn from_unchecked(z: CMat<T>) -> Self {
        Self { z }
    }

    pub fn frame(&self) -> &CMat<T> {
        &self.z
    }

    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    /// Canonical-representative comparison through principal angles.
    pub fn same_as(&self, other: &Self, tol: T) -> bool {
        same_subspace(&self.z, &other.z, tol)
    }

    pub fn intersection_dim(&self, other: &Self, tol: T) -> usize {
        intersection_dim(&self.z, &other.z, tol)
    }

    /// `V0 ⊕ V1` inside the doubled space.
    pub fn product(&self, other: &Self) -> Self {
        Self { z: block_diag(&[&self.z, &other.z]) }
    }

    /// Image under a linear map.
    pub fn mapped(&self, g: &CMat<T>) -> Self {
        Self { z: orthonormal_range(&(g * &self.z), T::lit(1e-12)) }
    }
}

/// A unitary involution with a descriptive tag.
#[derive(Clone, Debug)]
pub struct InvolutionData<T: Real> {
    pub u: CMat<T>,
    pub label: String,
}

impl<T: Real> InvolutionData<T> {
    pub fn new(u: CMat<T>, label: impl Into<String>, tol_rel: T) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n {
            return Err(Error::DimensionMismatch("involution must be square".into()));
        }
        let res = norm2(&(&u * &u - eye::<T>(n))) / norm2(&u).powi(2).max(T::one());
        if res > tol_rel {
            return Err(Error::NotInvolutive { residual: res.to_f() });
        }
        Ok(Self { u, label: label.into() })
    }

    /// Orthonormal bases of `V₊(U)` and `V₋(U)`.
    pub fn spectral_projectors(&self) -> (CMat<T>, CMat<T>) {
        spectral_projectors(&self.u)
    }
}

/// Orthonormal bases of `ker(U - I)` and `ker(U + I)` for an involution.
pub fn spectral_projectors<T: Real>(u: &CMat<T>) -> (CMat<T>, CMat<T>) {
    let n = u.nrows();
    let id = eye::<T>(n);
    let half = cr(T::lit(0.5));
    let tol = T::lit(1e-8);
    let plus = orthonormal_range(&((&id + u) * half), tol);
    let minus = orthonormal_range(&((&id - u) * half), tol);
    (plus, minus)
}

/// `V₊(U)` or `V₋(U)` according to `sign`.
pub fn eigenspace<T: Real>(u: &CMat<T>, sign: i32) -> CMat<T> {
    let (p, m) = spectral_projectors(u);
    if sign >= 0 {
        p
    } else {
        m
    }
}

/// Generators of a dihedral action together with `Q = Mⁿ`.
#[derive(Clone, Debug)]
pub struct DihedralMatrixData<T: Real> {
    pub n: usize,
    pub m: CMat<T>,
    pub nn: CMat<T>,
    pub q: CMat<T>,
    /// When set, also check `MJ = JM`, `NJ = -JN`, `N = Nᴴ` against `J`.
    pub quaternionic: Option<RMat<T>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelationResidual {
    pub relation: String,
    pub residual: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DihedralReport {
    pub relations: Vec<RelationResidual>,
    pub passed: bool,
}

impl<T: Real> DihedralMatrixData<T> {
    pub fn new(n: usize, m: CMat<T>, nn: CMat<T>) -> Self {
        let q = matrix_power(&m, n);
        Self { n, m, nn, q, quaternionic: None }
    }

    pub fn with_j(mut self, j: RMat<T>) -> Self {
        self.quaternionic = Some(j);
        self
    }

    pub fn validate(&self, tol_rel: T) -> DihedralReport {
        let d = self.m.nrows();
        let id = eye::<T>(d);
        let scale = |a: &CMat<T>| norm2(a).max(T::one());
        let mut rel = Vec::new();
        let mut push = |name: &str, r: T| {
            rel.push(RelationResidual { relation: name.to_string(), residual: r.to_f(), ok: r <= tol_rel })
        };
        let mn = matrix_power(&self.m, self.n);
        push("M^n = Q", norm2(&(&mn - &self.q)) / scale(&self.q));
        push("N^2 = I", norm2(&(&self.nn * &self.nn - &id)));
        let lhs = &self.nn * self.m.adjoint();
        let rhs = &self.m * &self.nn;
        push("N M* = M N", norm2(&(lhs - rhs)) / scale(&self.m));
        push("M unitary", norm2(&(self.m.adjoint() * &self.m - &id)));
        push("N unitary", norm2(&(self.nn.adjoint() * &self.nn - &id)));
        if let Some(j) = &self.quaternionic {
            let jc = complexify(j);
            push("MJ = JM", norm2(&(&self.m * &jc - &jc * &self.m)));
            push("NJ = -JN", norm2(&(&self.nn * &jc + &jc * &self.nn)));
            push("N = N^H", norm2(&(&self.nn - self.nn.adjoint())));
        }
        let passed = rel.iter().all(|r| r.ok);
        DihedralReport { relations: rel, passed }
    }
}

pub fn matrix_power<T: Real>(m: &CMat<T>, k: usize) -> CMat<T> {
    let mut out = eye::<T>(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Real matrix from row slices, convenient for literals.
pub fn rmat<T: Real>(rows: &[&[f64]]) -> RMat<T> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    DMatrix::from_fn(r, c, |i, j| T::lit(rows[i][j]))
}
