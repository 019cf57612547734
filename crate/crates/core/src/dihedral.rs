//! The dihedral action on discretised twisted loops and its isotypic pieces.
//!
//! A loop `z(t) = Q z(t + T)` is stored by its values `z_0 … z_{N-1}` at the
//! nodes `t_j = jT/N`; the value at `t_N` is `Q⁻¹ z_0`. With `N` divisible
//! by `2n` the generators
//!
//! * `(𝓜z)(t) = M z(t + T/n)` and
//! * `(𝓝z)(t) = N z(T/n - t)`
//!
//! permute nodes (up to the matrices `M`, `N`, `Q`), so the discrete action
//! is exact. `E_k = ker(𝓜 - ζᵏ)`, `F_k = E_k ⊕ E_{-k}` and
//! `E_h^± = V_±(𝓝𝓜ʰ)`; `F_{k,h}^± = F_k ∩ E_h^±`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galerkin::{Coef, GalerkinProblem, NodalForm, Restricted};
use crate::linalg::{eigenspace, eye, hermitian_eigen, matrix_power, norm2, DihedralMatrixData};
use crate::scalar::{cis, cr, CMat, RMat, Real, C};

/// Unitary `D_n` representation acting on `Q`-twisted loops of period `T`.
#[derive(Clone, Debug)]
pub struct DihedralRep<T: Real> {
    pub n: usize,
    pub m: CMat<T>,
    pub nn: CMat<T>,
    pub q: CMat<T>,
    pub period: T,
}

impl<T: Real> DihedralRep<T> {
    /// Validates `N² = I`, `NM* = MN` and unitarity; `Q = Mⁿ`.
    pub fn new(n: usize, m: CMat<T>, nn: CMat<T>, period: T, tol_rel: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        if m.shape() != nn.shape() || m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch("M and N must be square of equal size".into()));
        }
        let data = DihedralMatrixData::new(n, m.clone(), nn.clone());
        let report = data.validate(tol_rel);
        if let Some(bad) = report.relations.iter().find(|r| !r.ok) {
            return Err(Error::SymmetryViolated { relation: bad.relation.clone(), residual: bad.residual });
        }
        Ok(Self { n, q: data.q, m, nn, period })
    }

    pub fn from_real(n: usize, m: &RMat<T>, nn: &RMat<T>, period: T, tol_rel: T) -> Result<Self> {
        Self::new(n, crate::scalar::complexify(m), crate::scalar::complexify(nn), period, tol_rel)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `ζₙᵏ = e^{2πik/n}`.
    pub fn zeta(&self, k: i64) -> C<T> {
        cis(T::two_pi() * T::lit(k as f64) / T::of(self.n))
    }

    /// Largest component label `n̄ = ⌊n/2⌋`.
    pub fn nbar(&self) -> usize {
        self.n / 2
    }

    pub fn check_mesh(&self, mesh: usize) -> Result<()> {
        if mesh == 0 || mesh % (2 * self.n) != 0 {
            return Err(Error::MeshIncommensurate { mesh, two_n: 2 * self.n });
        }
        Ok(())
    }

    /// Coefficient of `z_j` (node index possibly outside `0..N`) in terms of
    /// the stored node `j mod N`.
    fn wrap(&self, j: i64, mesh: usize) -> (usize, CMat<T>) {
        let nm = mesh as i64;
        let r = j.rem_euclid(nm);
        let turns = (j - r) / nm;
        // z_{r + kN} = Q^{-k} z_r
        let qi = self.q.adjoint();
        let f = if turns >= 0 {
            matrix_power(&qi, turns as usize)
        } else {
            matrix_power(&self.q, (-turns) as usize)
        };
        (r as usize, f)
    }

    fn place(&self, mesh: usize, map: impl Fn(usize) -> (i64, CMat<T>)) -> CMat<T> {
        let d = self.dim();
        let mut a = CMat::zeros(mesh * d, mesh * d);
        for j in 0..mesh {
            let (src, g) = map(j);
            let (r, f) = self.wrap(src, mesh);
            let blk = g * f;
            a.view_mut((j * d, r * d), (d, d)).copy_from(&blk);
        }
        a
    }

    /// Matrix of `𝓜` on loop coordinates.
    pub fn action_m(&self, mesh: usize) -> Result<CMat<T>> {
        self.check_mesh(mesh)?;
        let s = (mesh / self.n) as i64;
        Ok(self.place(mesh, |j| (j as i64 + s, self.m.clone())))
    }

    /// Matrix of `𝓝` on loop coordinates.
    pub fn action_n(&self, mesh: usize) -> Result<CMat<T>> {
        self.check_mesh(mesh)?;
        let s = (mesh / self.n) as i64;
        Ok(self.place(mesh, |j| (s - j as i64, self.nn.clone())))
    }

    /// Nodal values `(z_0, …, z_{N-1}, Q⁻¹z_0)` from loop coordinates.
    pub fn loop_embedding(&self, mesh: usize) -> CMat<T> {
        let d = self.dim();
        let mut c = CMat::zeros((mesh + 1) * d, mesh * d);
        for i in 0..mesh * d {
            c[(i, i)] = cr(T::one());
        }
        c.view_mut((mesh * d, 0), (d, d)).copy_from(&self.q.adjoint());
        c
    }

    /// `P_k = (1/n) Σ_j ζ^{-kj} 𝓜ʲ`, `0 ≤ k < n`.
    pub fn isotypic_projector(&self, mesh: usize, k: usize) -> Result<CMat<T>> {
        if k >= self.n {
            return Err(Error::InvalidComponent { k, n: self.n });
        }
        let a = self.action_m(mesh)?;
        let size = a.nrows();
        let mut acc = CMat::zeros(size, size);
        let mut pow = eye::<T>(size);
        for j in 0..self.n {
            acc += &pow * self.zeta(-((k * j) as i64));
            pow = &a * pow;
        }
        Ok(acc * cr(T::one() / T::of(self.n)))
    }

    /// Projector onto `F_k`, `0 ≤ k ≤ ⌊n/2⌋`.
    pub fn f_projector(&self, mesh: usize, k: usize) -> Result<CMat<T>> {
        self.check_component(k)?;
        let p = self.isotypic_projector(mesh, k)?;
        if k == 0 || 2 * k == self.n {
            Ok(p)
        } else {
            Ok(p + self.isotypic_projector(mesh, self.n - k)?)
        }
    }

    pub fn check_component(&self, k: usize) -> Result<()> {
        if 2 * k > self.n {
            return Err(Error::InvalidComponent { k, n: self.n });
        }
        Ok(())
    }

    /// Projector onto `E_h^±`, `(I ± 𝓝𝓜ʰ)/2`.
    pub fn e_h_projector(&self, mesh: usize, h: usize, sign: i32) -> Result<CMat<T>> {
        let a = self.action_m(mesh)?;
        let b = self.action_n(mesh)?;
        let g = b * matrix_power(&a, h % self.n);
        let id = eye::<T>(g.nrows());
        let s = if sign >= 0 { T::one() } else { -T::one() };
        Ok((id + g * cr(s)) * cr(T::lit(0.5)))
    }

    /// Projector onto `F_{k,h}^±`.
    pub fn fkh_projector(&self, mesh: usize, k: usize, h: usize, sign: i32) -> Result<CMat<T>> {
        Ok(self.f_projector(mesh, k)? * self.e_h_projector(mesh, h, sign)?)
    }

    /// Boundary subspaces of `F_{k,h}^±` on the half interval `[0, T/(2n)]`.
    pub fn component_boundary_data(&self, k: usize, h: usize, sign: i32) -> Result<IsotypicComponent<T>> {
        self.check_component(k)?;
        let n = self.n;
        let d = self.dim();
        let mn = &self.m * &self.nn;
        let s = if sign >= 0 { 1 } else { -1 };
        let (v0, v1, doubled) = if k == 0 {
            (eigenspace(&mn, s), eigenspace(&self.nn, s), false)
        } else if 2 * k == n {
            let a = if (h + 1) % 2 == 0 { T::one() } else { -T::one() };
            let b = if h % 2 == 0 { T::one() } else { -T::one() };
            (eigenspace(&(&mn * cr(a)), s), eigenspace(&(&self.nn * cr(b)), s), false)
        } else {
            let ss = if s > 0 { T::one() } else { -T::one() };
            let z0 = self.zeta((k * (h + 1)) as i64) * cr(ss);
            let z1 = self.zeta((k * h) as i64) * cr(ss);
            let graph = |g: CMat<T>| {
                let mut f = CMat::zeros(2 * d, d);
                f.view_mut((0, 0), (d, d)).copy_from(&eye::<T>(d));
                f.view_mut((d, 0), (d, d)).copy_from(&g);
                crate::linalg::orthonormal_range(&f, T::lit(1e-12))
            };
            (graph(&mn * z0), graph(&self.nn * z1), true)
        };
        Ok(IsotypicComponent {
            k,
            h: h % n,
            sign: s,
            t0: T::zero(),
            t1: self.period / T::of(2 * n),
            v0,
            v1,
            doubled,
        })
    }

    /// Orthogonal bases of `E_h^+` and `E_h^-`.
    pub fn plus_minus_split(&self, mesh: usize, h: usize) -> Result<(CMat<T>, CMat<T>)> {
        Ok((range_basis(&self.e_h_projector(mesh, h, 1)?), range_basis(&self.e_h_projector(mesh, h, -1)?)))
    }

    /// Ranks of every projector on the `mesh`-node loop space.
    pub fn rank_table(&self, mesh: usize) -> Result<RankTable> {
        self.check_mesh(mesh)?;
        let total = mesh * self.dim();
        let e = (0..self.n).map(|k| Ok((k, trace_rank(&self.isotypic_projector(mesh, k)?)))).collect::<Result<Vec<_>>>()?;
        let f = (0..=self.nbar()).map(|k| Ok((k, trace_rank(&self.f_projector(mesh, k)?)))).collect::<Result<Vec<_>>>()?;
        let mut eh = Vec::new();
        let mut fkh = Vec::new();
        for h in 0..self.n {
            let plus = self.e_h_projector(mesh, h, 1)?;
            let minus = self.e_h_projector(mesh, h, -1)?;
            eh.push(SplitRank { h, plus: trace_rank(&plus), minus: trace_rank(&minus) });
            for k in 0..=self.nbar() {
                let fk = self.f_projector(mesh, k)?;
                fkh.push(ComponentRank { k, h, plus: trace_rank(&(&fk * &plus)), minus: trace_rank(&(&fk * &minus)) });
            }
        }
        Ok(RankTable { n: self.n, mesh, total, e, f, eh, fkh })
    }

    /// Half-interval problem for `F_{k,h}^±` of the Sturm form with
    /// coefficients `(P, Q, R)`; doubled components carry `diag(P, P)` etc.
    pub fn component_problem(
        &self,
        p: &Coef<T>,
        q: &Coef<T>,
        r: &Coef<T>,
        comp: &IsotypicComponent<T>,
        mesh_half: usize,
    ) -> GalerkinProblem<T> {
        let d = self.dim();
        let (p, q, r) = if comp.doubled {
            (double(p), double(q), double(r))
        } else {
            (p.clone(), q.clone(), r.clone())
        };
        let dd = if comp.doubled { 2 * d } else { d };
        GalerkinProblem::new(
            dd,
            comp.t0,
            comp.t1,
            p,
            q,
            r,
            crate::galerkin::BoundarySpec::Separated { v0: comp.v0.clone(), v1: comp.v1.clone() },
            mesh_half,
        )
    }

    /// `E_k` on `[0, T/n]` with `u(T/n) = ζᵏ M⁻¹ u(0)`.
    pub fn e_k_problem(&self, p: &Coef<T>, q: &Coef<T>, r: &Coef<T>, k: usize, mesh_part: usize) -> GalerkinProblem<T> {
        let d = self.dim();
        let mut w = CMat::zeros(2 * d, d);
        w.view_mut((0, 0), (d, d)).copy_from(&eye::<T>(d));
        let tail = self.m.adjoint() * self.zeta(k as i64);
        w.view_mut((d, 0), (d, d)).copy_from(&tail);
        GalerkinProblem::new(
            d,
            T::zero(),
            self.period / T::of(self.n),
            p.clone(),
            q.clone(),
            r.clone(),
            crate::galerkin::BoundarySpec::Pair(w),
            mesh_part,
        )
    }

    /// Full twisted-loop problem on `[0, T]`, expressed in loop coordinates.
    pub fn loop_form(&self, p: &Coef<T>, q: &Coef<T>, r: &Coef<T>, mesh: usize) -> Result<Restricted<T>> {
        self.check_mesh(mesh)?;
        let g = GalerkinProblem::new(
            self.dim(),
            T::zero(),
            self.period,
            p.clone(),
            q.clone(),
            r.clone(),
            crate::galerkin::BoundarySpec::Neumann,
            mesh,
        );
        let nodal: NodalForm<T> = g.assemble_nodal()?;
        Ok(nodal.restrict(&self.loop_embedding(mesh)))
    }
}

fn double<T: Real>(c: &Coef<T>) -> Coef<T> {
    let c = c.clone();
    std::sync::Arc::new(move |t: T| {
        let a = c.as_ref()(t);
        let d = a.nrows();
        let mut out = RMat::zeros(2 * d, 2 * d);
        out.view_mut((0, 0), (d, d)).copy_from(&a);
        out.view_mut((d, d), (d, d)).copy_from(&a);
        out
    })
}

/// Rank of an orthogonal projector from its trace.
pub fn trace_rank<T: Real>(p: &CMat<T>) -> usize {
    p.trace().re.round().to_f().max(0.0) as usize
}

/// Orthonormal basis of the range of an orthogonal projector.
pub fn range_basis<T: Real>(p: &CMat<T>) -> CMat<T> {
    let (vals, vecs) = hermitian_eigen(p);
    let idx: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > T::lit(0.5)).collect();
    CMat::from_fn(p.nrows(), idx.len(), |r, c| vecs[(r, idx[c])])
}

/// Restriction of a loop form to the range of `basis`.
pub fn restrict_to<T: Real>(form: &Restricted<T>, basis: &CMat<T>) -> Restricted<T> {
    let bh = basis.adjoint();
    Restricted {
        k: crate::linalg::herm(&(&bh * &form.k * basis)),
        m: crate::linalg::herm(&(&bh * &form.m * basis)),
    }
}

/// Relative commutator residual `|AP - PA| / |A|`.
pub fn commutator_residual<T: Real>(a: &CMat<T>, p: &CMat<T>) -> T {
    norm2(&(a * p - p * a)) / norm2(a).max(T::eps())
}

/// Data of one `F_{k,h}^±` on the half interval.
#[derive(Clone, Debug)]
pub struct IsotypicComponent<T: Real> {
    pub k: usize,
    pub h: usize,
    pub sign: i32,
    pub t0: T,
    pub t1: T,
    /// Admissible values at `t0` (frame in `C^d`, or `C^{2d}` when doubled).
    pub v0: CMat<T>,
    pub v1: CMat<T>,
    /// `E_k ⊕ E_{-k}` pairs `(z, w)`.
    pub doubled: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRank {
    pub h: usize,
    pub plus: usize,
    pub minus: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentRank {
    pub k: usize,
    pub h: usize,
    pub plus: usize,
    pub minus: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTable {
    pub n: usize,
    pub mesh: usize,
    pub total: usize,
    /// `(k, rank E_k)` for `0 ≤ k < n`.
    pub e: Vec<(usize, usize)>,
    /// `(k, rank F_k)` for `0 ≤ k ≤ n̄`.
    pub f: Vec<(usize, usize)>,
    pub eh: Vec<SplitRank>,
    pub fkh: Vec<ComponentRank>,
}

impl RankTable {
    /// Every split sums to the total dimension.
    pub fn consistent(&self) -> bool {
        let e: usize = self.e.iter().map(|x| x.1).sum();
        let f: usize = self.f.iter().map(|x| x.1).sum();
        let eh = self.eh.iter().all(|s| s.plus + s.minus == self.total);
        let fkh = (0..self.n).all(|h| {
            let (p, m): (usize, usize) = self
                .fkh
                .iter()
                .filter(|c| c.h == h)
                .fold((0, 0), |acc, c| (acc.0 + c.plus, acc.1 + c.minus));
            let split = self.eh.iter().find(|s| s.h == h).expect("row per h");
            p == split.plus && m == split.minus
        });
        e == self.total && f == self.total && eh && fkh
    }
}
