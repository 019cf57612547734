//! The equal-mass planar three-body problem in Jacobi coordinates: the
//! figure-eight as a minimiser of the action on `D₆`-fixed loops, and the
//! Morse indices of its second variation on every isotypic component.
//!
//! Coordinates: `u = (u₁, u₂) ∈ R⁴` with `u₁ = (x₃ - x₂)/√2` and
//! `u₂ = (2x₁ - x₂ - x₃)/√6`; the centre-of-mass row is dropped.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector2, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dihedral::DihedralRep;
use crate::error::{Error, Result};
use crate::galerkin::{constant, BoundarySpec, Coef, GalerkinProblem};
use crate::hamiltonian::SturmSystem;
use crate::scalar::{complexify, RMat};

const S2: f64 = std::f64::consts::SQRT_2;

fn s3() -> f64 {
    3f64.sqrt()
}

fn s6() -> f64 {
    6f64.sqrt()
}

/// `K` of the canonical change `u = K x` on `(R²)³`.
pub fn jacobi_matrix() -> RMat<f64> {
    let rows = [[0.0, -1.0 / S2, 1.0 / S2], [S2 / s3(), -1.0 / s6(), -1.0 / s6()], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
    kron2(&rows)
}

pub fn jacobi_inverse_matrix() -> RMat<f64> {
    let rows = [[0.0, s6() / 3.0, 1.0], [-S2 / 2.0, -s6() / 6.0, 1.0], [S2 / 2.0, -s6() / 6.0, 1.0]];
    kron2(&rows)
}

fn kron2(rows: &[[f64; 3]; 3]) -> RMat<f64> {
    RMat::from_fn(6, 6, |i, j| if i % 2 == j % 2 { rows[i / 2][j / 2] } else { 0.0 })
}

/// `x = (x₁, x₂, x₃)` flattened; fails unless the centre of mass vanishes.
pub fn jacobi_transform(x: &[f64; 6], tol_rel: f64) -> Result<[f64; 4]> {
    let com = Vector2::new(x[0] + x[2] + x[4], x[1] + x[3] + x[5]).norm();
    let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    if com > tol_rel * scale {
        return Err(Error::CenterOfMassNonzero { residual: com });
    }
    let u = jacobi_matrix() * DVector::from_row_slice(x);
    Ok([u[0], u[1], u[2], u[3]])
}

pub fn jacobi_inverse(u: &[f64; 4]) -> [f64; 6] {
    let x = jacobi_inverse_matrix() * DVector::from_row_slice(&[u[0], u[1], u[2], u[3], 0.0, 0.0]);
    [x[0], x[1], x[2], x[3], x[4], x[5]]
}

/// `x_i - x_j = A u` for the pairs `(2,3)`, `(1,2)`, `(1,3)`.
fn pair_maps() -> [nalgebra::Matrix2x4<f64>; 3] {
    let (a, b) = (1.0 / S2, s3() / S2);
    [
        nalgebra::Matrix2x4::new(-S2, 0.0, 0.0, 0.0, 0.0, -S2, 0.0, 0.0),
        nalgebra::Matrix2x4::new(a, 0.0, b, 0.0, 0.0, a, 0.0, b),
        nalgebra::Matrix2x4::new(-a, 0.0, b, 0.0, 0.0, -a, 0.0, b),
    ]
}

/// Mutual distances `|x₂ - x₃|`, `|x₁ - x₂|`, `|x₁ - x₃|`.
pub fn pair_distances(u: &[f64; 4]) -> [f64; 3] {
    let v = Vector4::from_row_slice(u);
    let a = pair_maps();
    [(a[0] * v).norm(), (a[1] * v).norm(), (a[2] * v).norm()]
}

/// `U = Σ 1/|x_i - x_j|` with gradient and Hessian in Jacobi coordinates.
pub fn potential_and_derivatives(u: &[f64; 4], dist_floor: f64) -> Result<(f64, Vector4<f64>, Matrix4<f64>)> {
    let v = Vector4::from_row_slice(u);
    let mut val = 0.0;
    let mut grad = Vector4::zeros();
    let mut hess = Matrix4::zeros();
    for a in pair_maps() {
        let w = a * v;
        let r = w.norm();
        if r < dist_floor {
            return Err(Error::CollisionProximity { distance: r });
        }
        val += 1.0 / r;
        grad -= a.transpose() * w / r.powi(3);
        let inner = w * w.transpose() * (3.0 / r.powi(5)) - Matrix2::identity() / r.powi(3);
        hess += a.transpose() * inner * a;
    }
    Ok((val, grad, hess))
}

/// Jacobi images `(S̃, Ñ)` of the generators `x ↦ -RSx(t + T/6)` and
/// `x ↦ RNx(T/6 - t)`.
pub fn generators() -> (Matrix4<f64>, Matrix4<f64>) {
    let (c, s) = (0.5, s3() / 2.0);
    let st = Matrix4::new(c, 0.0, s, 0.0, 0.0, -c, 0.0, -s, -s, 0.0, c, 0.0, 0.0, s, 0.0, -c);
    let nt = Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, -1.0));
    (st, nt)
}

fn to_dyn(m: &Matrix4<f64>) -> RMat<f64> {
    RMat::from_fn(4, 4, |i, j| m[(i, j)])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeBodyConfig {
    pub period: f64,
    /// Highest Fourier mode kept; the Nyquist mode is always dropped.
    pub n_f: usize,
    /// Collocation points, a multiple of 12.
    pub n_c: usize,
    pub tol_grad: f64,
    pub dist_floor: f64,
    pub max_iter: usize,
}

impl Default for ThreeBodyConfig {
    fn default() -> Self {
        Self::new(TAU, 120)
    }
}

impl ThreeBodyConfig {
    pub fn new(period: f64, n_c: usize) -> Self {
        Self { period, n_f: n_c / 2, n_c, tol_grad: 1e-10, dist_floor: 1e-3, max_iter: 200 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 || self.n_c % 12 != 0 {
            return Err(Error::MeshIncommensurate { mesh: self.n_c, two_n: 12 });
        }
        if self.n_f > self.n_c / 2 || self.n_f == 0 {
            return Err(Error::InvalidInput(format!("need 0 < n_f <= n_c/2, got n_f = {}", self.n_f)));
        }
        if !(self.period > 0.0) {
            return Err(Error::InvalidInput("period must be positive".into()));
        }
        Ok(())
    }

    fn modes(&self) -> usize {
        self.n_f.min(self.n_c.div_ceil(2) - 1)
    }
}

/// Trigonometric interpolant of nodal samples.
#[derive(Clone, Debug)]
pub struct TrigLoop {
    period: f64,
    mean: Vector4<f64>,
    /// `(a_k, b_k)` of `a_k cos + b_k sin` for `k = 1..`.
    terms: Vec<(Vector4<f64>, Vector4<f64>)>,
}

impl TrigLoop {
    pub fn from_samples(samples: &[[f64; 4]], period: f64, modes: usize) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().fold(Vector4::zeros(), |a, s| a + Vector4::from_row_slice(s)) / n;
        let terms = (1..=modes)
            .map(|k| {
                let mut a = Vector4::zeros();
                let mut b = Vector4::zeros();
                for (j, s) in samples.iter().enumerate() {
                    let th = TAU * (k * j) as f64 / n;
                    let v = Vector4::from_row_slice(s);
                    a += v * th.cos();
                    b += v * th.sin();
                }
                (a * 2.0 / n, b * 2.0 / n)
            })
            .collect();
        Self { period, mean, terms }
    }

    pub fn eval(&self, t: f64) -> Vector4<f64> {
        self.terms.iter().enumerate().fold(self.mean, |acc, (i, (a, b))| {
            let th = TAU * (i + 1) as f64 * t / self.period;
            acc + a * th.cos() + b * th.sin()
        })
    }

    pub fn derivative(&self, t: f64) -> Vector4<f64> {
        self.terms.iter().enumerate().fold(Vector4::zeros(), |acc, (i, (a, b))| {
            let w = TAU * (i + 1) as f64 / self.period;
            let th = w * t;
            acc + (b * th.cos() - a * th.sin()) * w
        })
    }
}

/// Discretised action on nodal loops `x ∈ R^{4 n_c}` (node-major).
struct Discretisation {
    cfg: ThreeBodyConfig,
    /// Filtered spectral `-d²/dt²` on one component.
    lap: DMatrix<f64>,
    /// Orthonormal basis of the filtered `D₆`-fixed loops.
    basis: DMatrix<f64>,
    st: Matrix4<f64>,
    nt: Matrix4<f64>,
}

impl Discretisation {
    fn new(cfg: ThreeBodyConfig) -> Self {
        let n = cfg.n_c;
        let modes = cfg.modes();
        let kernel = |scale: &dyn Fn(f64) -> f64| {
            DMatrix::from_fn(n, n, |j, l| {
                let d = j as f64 - l as f64;
                let mut s = scale(0.0);
                for k in 1..=modes {
                    s += 2.0 * scale(k as f64) * (TAU * k as f64 * d / n as f64).cos();
                }
                s / n as f64
            })
        };
        let w = TAU / cfg.period;
        let lap = kernel(&|k| (w * k).powi(2));
        let filter = kernel(&|_| 1.0);
        let (st, nt) = generators();
        let mut disc = Self { cfg, lap, basis: DMatrix::zeros(0, 0), st, nt };
        let dim = 4 * n;
        let mut proj = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = DVector::zeros(dim);
            e[j] = 1.0;
            let f = disc.apply_blockwise(&filter, &e);
            proj.set_column(j, &disc.average(&f));
        }
        let sym = (&proj + proj.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let cols: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        disc.basis = DMatrix::from_fn(dim, cols.len(), |i, c| eig.eigenvectors[(i, cols[c])]);
        disc
    }

    fn apply_blockwise(&self, m: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
        let n = self.cfg.n_c;
        let xs = DMatrix::from_fn(n, 4, |j, c| x[4 * j + c]);
        let y = m * xs;
        DVector::from_fn(4 * n, |i, _| y[(i / 4, i % 4)])
    }

    fn node(x: &DVector<f64>, j: usize) -> Vector4<f64> {
        Vector4::new(x[4 * j], x[4 * j + 1], x[4 * j + 2], x[4 * j + 3])
    }

    /// `g₁` and `g₂` on nodal loops.
    fn act(&self, x: &DVector<f64>, reflect: bool) -> DVector<f64> {
        let n = self.cfg.n_c;
        let sh = n / 6;
        let mut y = DVector::zeros(4 * n);
        for j in 0..n {
            let (src, m) = if reflect { ((sh + n - j) % n, &self.nt) } else { ((j + sh) % n, &self.st) };
            y.fixed_rows_mut::<4>(4 * j).copy_from(&(m * Self::node(x, src)));
        }
        y
    }

    fn average(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(x.len());
        let mut g = x.clone();
        for _ in 0..6 {
            acc += &g + self.act(&g, true);
            g = self.act(&g, false);
        }
        acc / 12.0
    }

    fn equivariance_residual(&self, x: &DVector<f64>) -> f64 {
        (self.act(x, false) - x).amax().max((self.act(x, true) - x).amax())
    }

    fn h(&self) -> f64 {
        self.cfg.period / self.cfg.n_c as f64
    }

    fn min_distance(&self, x: &DVector<f64>) -> f64 {
        (0..self.cfg.n_c)
            .flat_map(|j| pair_distances(&Self::node(x, j).into()))
            .fold(f64::INFINITY, f64::min)
    }

    fn action(&self, x: &DVector<f64>) -> Result<f64> {
        let kin = 0.5 * x.dot(&self.apply_blockwise(&self.lap, x));
        let mut pot = 0.0;
        for j in 0..self.cfg.n_c {
            pot += potential_and_derivatives(&Self::node(x, j).into(), self.cfg.dist_floor)?.0;
        }
        Ok(self.h() * (kin + pot))
    }

    /// Euler–Lagrange residual `-ü + ∇U` at the nodes, and the
    /// block-diagonal Hessian of `U`.
    fn residual(&self, x: &DVector<f64>) -> Result<(DVector<f64>, Vec<Matrix4<f64>>)> {
        let mut r = self.apply_blockwise(&self.lap, x);
        let mut hs = Vec::with_capacity(self.cfg.n_c);
        for j in 0..self.cfg.n_c {
            let (_, g, hh) = potential_and_derivatives(&Self::node(x, j).into(), self.cfg.dist_floor)?;
            let mut seg = r.fixed_rows_mut::<4>(4 * j);
            seg += g;
            hs.push(hh);
        }
        Ok((r, hs))
    }

    fn reduced_hessian(&self, hs: &[Matrix4<f64>]) -> DMatrix<f64> {
        let b = &self.basis;
        let mut hb = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col = b.column(c).into_owned();
            let mut y = self.apply_blockwise(&self.lap, &col);
            for (j, hh) in hs.iter().enumerate() {
                let mut seg = y.fixed_rows_mut::<4>(4 * j);
                seg += hh * Self::node(&col, j);
            }
            hb.set_column(c, &y);
        }
        let out = b.transpose() * hb;
        (&out + out.transpose()) * 0.5
    }
}

/// Seed candidates: the Lissajous eight `(sin s, ½ sin 2s)` shared by the
/// bodies with phases `0, 2T/3, T/3`, shifted by multiples of `T/12`,
/// ordered by the fraction that survives projection.
fn seeds(disc: &Discretisation) -> Vec<DVector<f64>> {
    let cfg = disc.cfg;
    let n = cfg.n_c;
    let mut out: Vec<(f64, DVector<f64>)> = (0..12)
        .map(|shift| {
            let t0 = cfg.period * shift as f64 / 12.0;
            let curve = |t: f64| {
                let s = TAU * t / cfg.period;
                Vector2::new(s.sin(), 0.5 * (2.0 * s).sin())
            };
            let mut x = DVector::zeros(4 * n);
            for j in 0..n {
                let t = cfg.period * j as f64 / n as f64 + t0;
                let p = [curve(t), curve(t + 2.0 * cfg.period / 3.0), curve(t + cfg.period / 3.0)];
                let flat = [p[0].x, p[0].y, p[1].x, p[1].y, p[2].x, p[2].y];
                let u = jacobi_transform(&flat, 1e-9).expect("seed has zero centre of mass");
                x.fixed_rows_mut::<4>(4 * j).copy_from(&Vector4::from_row_slice(&u));
            }
            let px = &disc.basis * (disc.basis.transpose() * &x);
            (px.norm() / x.norm(), px)
        })
        .filter(|(keep, _)| *keep > 0.25)
        .collect();
    out.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite"));
    out.into_iter().map(|(_, x)| x).collect()
}

/// A converged `D₆`-symmetric loop with its diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitSolution {
    pub config: ThreeBodyConfig,
    /// Nodal samples at `t_j = jT/n_c`.
    pub samples: Vec<[f64; 4]>,
    pub action: f64,
    pub grad_norm: f64,
    pub min_distance: f64,
    pub equivariance_residual: f64,
    pub iterations: usize,
    /// Smallest eigenvalue of the reduced Hessian on the fixed space.
    pub fixed_space_min_eigenvalue: f64,
    /// `D²U(u(t_j))`, row-major.
    pub hessians: Vec<[f64; 16]>,
}

impl OrbitSolution {
    pub fn interpolant(&self) -> TrigLoop {
        TrigLoop::from_samples(&self.samples, self.config.period, self.config.modes())
    }

    /// `P = I`, `Q = 0`, `R(t) = D²U(u(t))` on `[0, T]`.
    pub fn second_variation(&self) -> SturmSystem<f64> {
        let lp = Arc::new(self.interpolant());
        let floor = self.config.dist_floor * 1e-3;
        let r: Coef<f64> = Arc::new(move |t| {
            let u = lp.eval(t);
            let (_, _, h) = potential_and_derivatives(&u.into(), floor).expect("orbit is collisionless");
            to_dyn(&h)
        });
        SturmSystem::new(4, self.config.period, constant(RMat::identity(4, 4)), constant(RMat::zeros(4, 4)), r)
    }

    /// Cartesian positions at the nodes.
    pub fn cartesian(&self) -> Vec<[f64; 6]> {
        self.samples.iter().map(jacobi_inverse).collect()
    }

    /// Sup-norm residuals of `-v̈ + D²U v` for the time-translation and
    /// rotation generators `u̇` and `J u`.
    pub fn zero_mode_residuals(&self) -> (f64, f64) {
        let lp = self.interpolant();
        let n = self.config.n_c;
        let t = |j: usize| self.config.period * j as f64 / n as f64;
        let rot = |v: Vector4<f64>| Vector4::new(-v[1], v[0], -v[3], v[2]);
        let field = |f: &dyn Fn(usize) -> Vector4<f64>| -> Vec<[f64; 4]> { (0..n).map(|j| f(j).into()).collect() };
        let udot = field(&|j| lp.derivative(t(j)));
        let ju = field(&|j| rot(Vector4::from_row_slice(&self.samples[j])));
        let modes = self.config.modes();
        let apply = |v: &[[f64; 4]]| -> f64 {
            let vl = TrigLoop::from_samples(v, self.config.period, modes);
            (0..n)
                .map(|j| {
                    let acc = second_derivative(&vl, t(j));
                    let h = Matrix4::from_row_slice(&self.hessians[j]);
                    (-acc + h * Vector4::from_row_slice(&v[j])).amax()
                })
                .fold(0.0, f64::max)
        };
        (apply(&udot), apply(&ju))
    }
}

fn second_derivative(l: &TrigLoop, t: f64) -> Vector4<f64> {
    l.terms.iter().enumerate().fold(Vector4::zeros(), |acc, (i, (a, b))| {
        let w = TAU * (i + 1) as f64 / l.period;
        let th = w * t;
        acc - (a * th.cos() + b * th.sin()) * (w * w)
    })
}

/// Newton's method for the action restricted to filtered `D₆`-fixed loops,
/// starting from the Lissajous seeds in turn.
pub fn find_figure_eight(cfg: ThreeBodyConfig) -> Result<OrbitSolution> {
    cfg.validate()?;
    let disc = Discretisation::new(cfg);
    let mut last = Error::InvalidInput("no seed survives the D6 projection".into());
    for seed in seeds(&disc) {
        match descend(&disc, seed) {
            Ok(sol) => return Ok(sol),
            Err(e @ Error::CollisionDuringDescent { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn descend(disc: &Discretisation, x0: DVector<f64>) -> Result<OrbitSolution> {
    let cfg = disc.cfg;
    let b = &disc.basis;
    let mut c = b.transpose() * x0;
    let mut res = f64::INFINITY;
    for it in 0..cfg.max_iter {
        let x = b * &c;
        let (r, hs) = disc.residual(&x)?;
        let g = b.transpose() * &r;
        res = (b * &g).amax();
        if res <= cfg.tol_grad {
            return finish(disc, x, res, it, &hs);
        }
        let hess = disc.reduced_hessian(&hs);
        let dir = match hess.clone().cholesky() {
            Some(ch) => -ch.solve(&g),
            None => {
                let scale = hess.amax().max(1.0);
                -&g / scale
            }
        };
        let f0 = disc.action(&x)?;
        let slope = disc.h() * g.dot(&dir);
        let mut s = 1.0;
        loop {
            let trial = b * (&c + &dir * s);
            let dist = disc.min_distance(&trial);
            if dist >= cfg.dist_floor {
                let f = disc.action(&trial)?;
                // Near convergence the action is flat to rounding; accept
                // full Newton steps that do not raise it measurably.
                let tol = 1e-12 * f0.abs().max(1.0);
                if f <= f0 + 1e-4 * s * slope + tol {
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-12 {
                return Err(Error::CollisionDuringDescent { distance: dist });
            }
        }
        c += &dir * s;
    }
    Err(Error::NoConvergence { iterations: cfg.max_iter, residual: res })
}

fn finish(disc: &Discretisation, x: DVector<f64>, res: f64, it: usize, hs: &[Matrix4<f64>]) -> Result<OrbitSolution> {
    let hess = disc.reduced_hessian(hs);
    let min_eig = hess.symmetric_eigenvalues().min();
    Ok(OrbitSolution {
        config: disc.cfg,
        samples: (0..disc.cfg.n_c).map(|j| Discretisation::node(&x, j).into()).collect(),
        action: disc.action(&x)?,
        grad_norm: res,
        min_distance: disc.min_distance(&x),
        equivariance_residual: disc.equivariance_residual(&x),
        iterations: it,
        fixed_space_min_eigenvalue: min_eig,
        hessians: hs
            .iter()
            .map(|h| {
                let mut a = [0.0; 16];
                for i in 0..4 {
                    for j in 0..4 {
                        a[4 * i + j] = h[(i, j)];
                    }
                }
                a
            })
            .collect(),
    })
}

/// `(index, nullity)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexPair {
    pub index: usize,
    pub nullity: usize,
}

impl From<(usize, usize)> for IndexPair {
    fn from((index, nullity): (usize, usize)) -> Self {
        Self { index, nullity }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub k: usize,
    pub h: usize,
    pub sign: i32,
    pub value: IndexPair,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IndexOptions {
    /// Elements on `[0, T/12]`; longer intervals scale it up.
    pub mesh_half: usize,
    /// Absolute threshold on extrapolated eigenvalues.
    pub tol_null: f64,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self { mesh_half: 24, tol_null: 1e-6 }
    }
}

/// Morse indices of the second variation on each `F_{k,h}^±`, each `E_k`,
/// the full loop space and the `Z₂`, `Z₃` fixed spaces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MorseTable {
    pub options: IndexOptions,
    pub components: Vec<ComponentEntry>,
    /// `E_k` for `k = 0..6`.
    pub e: Vec<IndexPair>,
    pub total: IndexPair,
    /// Loops fixed by `g̃₁³`.
    pub z2: IndexPair,
    /// Loops fixed by `g̃₁²`.
    pub z3: IndexPair,
    /// `Σ_k [F_{k,h}^+ + F_{k,h}^-]` for each `h`.
    pub sums: Vec<usize>,
    pub sums_match_total: bool,
    /// `F_{k,h}^+ + F_{k,h}^-` equals `E_k + E_{6-k}` (or `E_k`) for all `k, h`.
    pub components_match_e: bool,
    pub conjugate_symmetric: bool,
    pub z2_matches: bool,
    pub z3_matches: bool,
    /// Residuals of the time-translation and rotation kernel vectors.
    pub zero_mode_residuals: (f64, f64),
}

impl MorseTable {
    pub fn component(&self, k: usize, h: usize, sign: i32) -> IndexPair {
        self.components
            .iter()
            .find(|c| c.k == k && c.h == h && c.sign == sign)
            .map(|c| c.value)
            .expect("component present")
    }

    pub fn consistent(&self) -> bool {
        self.sums_match_total && self.components_match_e && self.conjugate_symmetric && self.z2_matches && self.z3_matches
    }

    /// Integer content, for comparing refinements.
    pub fn integers(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.components.iter().map(|c| c.value.index).collect();
        v.extend(self.e.iter().map(|p| p.index));
        v.extend([self.total.index, self.z2.index, self.z3.index]);
        v
    }
}

fn cyclic_pair(st: &RMat<f64>, power: usize) -> crate::scalar::CMat<f64> {
    let mut g = RMat::identity(4, 4);
    for _ in 0..power {
        g = &g * st;
    }
    let mut w = RMat::zeros(8, 4);
    w.view_mut((0, 0), (4, 4)).copy_from(&g);
    w.view_mut((4, 0), (4, 4)).copy_from(&RMat::identity(4, 4));
    complexify(&w)
}

pub fn equivariant_morse_indices(orbit: &OrbitSolution, opts: &IndexOptions) -> Result<MorseTable> {
    let period = orbit.config.period;
    let sys = orbit.second_variation();
    let (st, nt) = generators();
    let (st, nt) = (to_dyn(&st), to_dyn(&nt));
    let rep = DihedralRep::from_real(6, &st, &nt, period, 1e-12)?;
    let (p, q, r) = (&sys.p, &sys.q, &sys.r);
    let tol = opts.tol_null;
    let mh = opts.mesh_half;

    let jobs: Vec<(usize, usize, i32)> =
        (0..6).flat_map(|h| (0..=3).flat_map(move |k| [(k, h, 1), (k, h, -1)])).collect();
    let components = jobs
        .par_iter()
        .map(|&(k, h, sign)| {
            let comp = rep.component_boundary_data(k, h, sign)?;
            let value = rep.component_problem(p, q, r, &comp, mh).morse_extrapolated(tol)?.into();
            Ok(ComponentEntry { k, h, sign, value })
        })
        .collect::<Result<Vec<_>>>()?;
    let e = (0..6)
        .into_par_iter()
        .map(|k| Ok(rep.e_k_problem(p, q, r, k, 2 * mh).morse_extrapolated(tol)?.into()))
        .collect::<Result<Vec<IndexPair>>>()?;
    let on = |t1: f64, bc: BoundarySpec<f64>, mesh: usize| -> Result<IndexPair> {
        Ok(GalerkinProblem::new(4, 0.0, t1, p.clone(), q.clone(), r.clone(), bc, mesh).morse_extrapolated(tol)?.into())
    };
    let total = on(period, BoundarySpec::QuasiPeriodic(num_complex::Complex::new(1.0, 0.0)), 12 * mh)?;
    let z2 = on(period / 2.0, BoundarySpec::Pair(cyclic_pair(&st, 3)), 6 * mh)?;
    let z3 = on(period / 3.0, BoundarySpec::Pair(cyclic_pair(&st, 2)), 4 * mh)?;

    let f_index = |k: usize, h: usize| {
        components.iter().filter(|c| c.k == k && c.h == h).map(|c| c.value.index).sum::<usize>()
    };
    let sums: Vec<usize> = (0..6).map(|h| (0..=3).map(|k| f_index(k, h)).sum()).collect();
    let e_of = |k: usize| e[k % 6].index;
    let components_match_e = (0..6).all(|h| {
        (0..=3).all(|k| {
            let expect = if k == 0 || k == 3 { e_of(k) } else { e_of(k) + e_of(6 - k) };
            f_index(k, h) == expect
        })
    });
    Ok(MorseTable {
        options: *opts,
        sums_match_total: sums.iter().all(|&s| s == total.index),
        components_match_e,
        conjugate_symmetric: e[1] == e[5] && e[2] == e[4],
        z2_matches: z2.index == e_of(0) + e_of(2) + e_of(4),
        z3_matches: z3.index == e_of(0) + e_of(3),
        zero_mode_residuals: orbit.zero_mode_residuals(),
        components,
        e,
        total,
        z2,
        z3,
        sums,
    })
}

/// `Φ(g·x) - Φ(x)` for both generators on the nodal loop.
pub fn action_invariance(orbit: &OrbitSolution) -> Result<(f64, f64)> {
    let disc_cfg = orbit.config;
    let n = disc_cfg.n_c;
    let (st, nt) = generators();
    let h = disc_cfg.period / n as f64;
    let lp = orbit.interpolant();
    let phi = |f: &dyn Fn(usize) -> Vector4<f64>, fd: &dyn Fn(usize) -> Vector4<f64>| -> Result<f64> {
        let mut s = 0.0;
        for j in 0..n {
            s += 0.5 * fd(j).norm_squared() + potential_and_derivatives(&f(j).into(), 0.0)?.0;
        }
        Ok(h * s)
    };
    let t = |j: usize| disc_cfg.period * j as f64 / n as f64;
    let u = |j: usize| Vector4::from_row_slice(&orbit.samples[j]);
    let base = phi(&u, &|j| lp.derivative(t(j)))?;
    let sh = n / 6;
    let g1 = phi(&|j| st * u((j + sh) % n), &|j| st * lp.derivative(t(j) + disc_cfg.period / 6.0))?;
    let g2 = phi(&|j| nt * u((sh + n - j) % n), &|j| -(nt * lp.derivative(disc_cfg.period / 6.0 - t(j))))?;
    Ok(((g1 - base).abs(), (g2 - base).abs()))
}

/// Lagrange's equilateral configuration with unit sides.
pub fn equilateral() -> [f64; 6] {
    let r = 1.0 / 3f64.sqrt();
    let p = |k: f64| {
        let a = PI / 2.0 + TAU * k / 3.0;
        [r * a.cos(), r * a.sin()]
    };
    let (a, b, c) = (p(0.0), p(1.0), p(2.0));
    [a[0], a[1], b[0], b[1], c[0], c[1]]
}
