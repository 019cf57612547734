//! Dense helpers on top of nalgebra: sorted Hermitian spectra, ranges and
//! kernels, principal angles and eigen-angles of unitary matrices.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::scalar::{cis, cr, CMat, Real, C};

pub fn eye<T: Real>(n: usize) -> CMat<T> {
    CMat::identity(n, n)
}

/// Hermitian part `(A + A^H)/2`.
pub fn herm<T: Real>(a: &CMat<T>) -> CMat<T> {
    (a + a.adjoint()) * cr(T::lit(0.5))
}

/// Spectral norm via the largest singular value.
pub fn norm2<T: Real>(a: &CMat<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    singular_values(a)[0]
}

/// Fixed unitary used to move an input off the structure that trips the
/// bidiagonal QR sweep: a Householder product built from a small LCG.
fn scrambler<T: Real>(n: usize, attempt: u64) -> CMat<T> {
    let mut state = 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(attempt + 1);
    let mut next = || {
        state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
        T::lit((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
    };
    let mut w = eye::<T>(n);
    for _ in 0..2 {
        let v = CMat::<T>::from_fn(n, 1, |_, _| C::new(next(), next()));
        let nv = v.norm();
        let h = eye::<T>(n) - &v * v.adjoint() * cr(T::lit(2.0) / (nv * nv));
        w = h * w;
    }
    w
}

/// `(σ, U, V)` of a square matrix with `A = U diag(σ) Vᴴ`, unsorted.
///
/// nalgebra's SVD occasionally returns a factorisation that does not
/// recompose `A` when `A` is rank deficient (roughly 2% of random low-rank
/// inputs, real or nearly real complex). The result is verified and, on
/// failure, recomputed for `W A` with a fixed unitary `W`.
fn checked_svd<T: Real>(a: &CMat<T>) -> (Vec<T>, CMat<T>, CMat<T>) {
    let n = a.nrows();
    let scale = a.norm().max(T::one());
    let tol = T::eps() * T::lit(1e3) * T::of(n.max(1));
    let id = eye::<T>(n);
    let mut best: Option<(T, (Vec<T>, CMat<T>, CMat<T>))> = None;
    for attempt in 0..16u64 {
        let w = if attempt == 0 { id.clone() } else { scrambler::<T>(n, attempt) };
        let svd = SVD::new(&w * a, true, true);
        let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let s: Vec<T> = svd.singular_values.iter().copied().collect();
        let sig = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, s.iter().map(|&x| cr(x))));
        let u = w.adjoint() * u;
        let v = vt.adjoint();
        let err = (&u * sig * v.adjoint() - a).norm() / scale
            + (u.adjoint() * &u - &id).norm()
            + (v.adjoint() * &v - &id).norm();
        if err <= tol {
            return (s, u, v);
        }
        if best.as_ref().is_none_or(|b| err < b.0) {
            best = Some((err, (s, u, v)));
        }
    }
    best.expect("at least one attempt").1
}

/// Eigenvalues of a general square matrix.
///
/// nalgebra's complex Schur iteration has no default cap and can cycle on
/// matrices that are a scalar up to rounding noise. Near-scalar input is
/// answered directly; otherwise the QR sweep is capped and retried on
/// `W A Wᴴ` for a fixed unitary `W`.
pub fn general_eigenvalues<T: Real>(a: &CMat<T>) -> Result<Vec<C<T>>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lambda = a.trace() * cr(T::one() / T::of(n));
    let scale = a.norm().max(T::one());
    if (a - eye::<T>(n) * lambda).norm() <= T::eps() * T::lit(1e3) * T::of(n) * scale {
        return Ok(vec![lambda; n]);
    }
    for attempt in 0..16u64 {
        let w = if attempt == 0 { eye::<T>(n) } else { scrambler::<T>(n, attempt) };
        if let Some(s) = (&w * a * w.adjoint()).try_schur(T::eps(), 100 * n.max(10)) {
            return Ok(s.eigenvalues().expect("complex Schur form is triangular").iter().copied().collect());
        }
    }
    Err(Error::Numerical("Schur iteration did not converge".into()))
}

/// Eigen-decomposition of the Hermitian part of `a`, eigenvalues ascending.
pub fn hermitian_eigen<T: Real>(a: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(herm(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMat::from_fn(n, n, |r, cidx| eig.eigenvectors[(r, order[cidx])]);
    (vals, vecs)
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues<T: Real>(a: &CMat<T>) -> Vec<T> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<T> = SymmetricEigen::new(herm(a)).eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Real symmetric counterpart of [`hermitian_eigenvalues`].
pub fn symmetric_eigenvalues<T: Real>(a: &DMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let s = (a + a.transpose()) * T::lit(0.5);
    let mut v: Vec<T> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Singular values (descending) and the left/right singular bases of a matrix
/// padded to square, so `v` always spans the full domain.
pub fn padded_svd<T: Real>(a: &CMat<T>) -> (Vec<T>, CMat<T>, CMat<T>) {
    let (r, c) = a.shape();
    let n = r.max(c);
    let mut sq = CMat::zeros(n, n);
    sq.view_mut((0, 0), (r, c)).copy_from(a);
    let (sv, u, v) = checked_svd(&sq);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(std::cmp::Ordering::Equal));
    let s = order.iter().map(|&i| sv[i]).collect();
    let u = CMat::from_fn(n, n, |i, j| u[(i, order[j])]);
    let v = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    (s, u, v)
}

/// Singular values, descending.
pub fn singular_values<T: Real>(a: &CMat<T>) -> Vec<T> {
    if a.is_empty() {
        return Vec::new();
    }
    padded_svd(a).0.into_iter().take(a.nrows().min(a.ncols())).collect()
}

/// Numerical rank with threshold `tol * max(1, sigma_max)`.
pub fn rank<T: Real>(a: &CMat<T>, tol: T) -> usize {
    let s = singular_values(a);
    let scale = s.first().copied().unwrap_or(T::zero()).max(T::one());
    s.iter().filter(|&&x| x > tol * scale).count()
}

/// Orthonormal basis of the column space of `a`.
pub fn orthonormal_range<T: Real>(a: &CMat<T>, tol: T) -> CMat<T> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return CMat::zeros(r, 0);
    }
    let (s, u, _) = padded_svd(a);
    let scale = s[0].max(T::one());
    let k = s.iter().filter(|&&x| x > tol * scale).count();
    u.view((0, 0), (r, k)).into_owned()
}

/// Orthonormal basis of `ker a`.
pub fn null_space<T: Real>(a: &CMat<T>, tol: T) -> CMat<T> {
    let (r, c) = a.shape();
    if c == 0 {
        return CMat::zeros(0, 0);
    }
    if r == 0 {
        return eye(c);
    }
    let (s, _, v) = padded_svd(a);
    let scale = s[0].max(T::one());
    let k = s.iter().take(r.min(c)).filter(|&&x| x > tol * scale).count();
    v.view((0, k), (c, c - k)).into_owned()
}

/// Cosines of the principal angles between two column spaces, descending.
pub fn principal_cosines<T: Real>(a: &CMat<T>, b: &CMat<T>, tol: T) -> Vec<T> {
    let qa = orthonormal_range(a, tol);
    let qb = orthonormal_range(b, tol);
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return Vec::new();
    }
    singular_values(&(qa.adjoint() * qb))
}

/// Two column spaces coincide when they have equal dimension and every
/// principal angle is below `tol`.
pub fn same_subspace<T: Real>(a: &CMat<T>, b: &CMat<T>, tol: T) -> bool {
    let ra = rank(a, tol);
    if ra != rank(b, tol) {
        return false;
    }
    let cosines = principal_cosines(a, b, tol);
    cosines.len() >= ra && cosines.iter().take(ra).all(|&cv| (T::one() - cv.min(T::one())) <= tol)
}

/// Dimension of the intersection of two column spaces.
pub fn intersection_dim<T: Real>(a: &CMat<T>, b: &CMat<T>, tol: T) -> usize {
    let ra = rank(a, tol);
    let rb = rank(b, tol);
    let stacked = hstack(a, b);
    ra + rb - rank(&stacked, tol)
}

pub fn hstack<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    assert_eq!(a.nrows(), b.nrows(), "hstack row mismatch");
    let mut out = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn vstack<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    assert_eq!(a.ncols(), b.ncols(), "vstack column mismatch");
    let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

pub fn block_diag<T: Real>(blocks: &[&CMat<T>]) -> CMat<T> {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMat::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), b.shape()).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

pub fn kron<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Eigen-angles in `(-π, π]` and eigenvectors of a unitary matrix.
///
/// The spectrum is rotated so that `-1` sits in the widest gap, then the
/// Cayley transform `i(I - V)(I + V)^{-1}` turns the problem into a Hermitian
/// one. This keeps the angles near zero as accurate as a Hermitian solve.
pub fn unitary_eigen<T: Real>(w: &CMat<T>) -> (Vec<T>, CMat<T>) {
    let n = w.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let id = eye::<T>(n);
    let tries = 2 * n + 1;
    let mut best = (T::zero(), -T::one());
    for j in 0..tries {
        let alpha = T::two_pi() * T::of(j) / T::of(tries) + T::lit(0.123_456_789);
        let v = w * cis(alpha);
        let s = singular_values(&(&id + &v));
        let smin = *s.last().expect("nonempty");
        if smin > best.1 {
            best = (alpha, smin);
        }
    }
    let alpha = best.0;
    let v = w * cis(alpha);
    let inv = (&id + &v).try_inverse().expect("Cayley denominator invertible after rotation");
    let h = (&id - &v) * inv * C::new(T::zero(), T::one());
    let (vals, vecs) = hermitian_eigen(&h);
    let angles = vals
        .iter()
        .map(|&lam| wrap_angle(T::lit(2.0) * lam.atan() - alpha))
        .collect();
    (angles, vecs)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Real>(x: T) -> T {
    let two_pi = T::two_pi();
    let mut y = x % two_pi;
    if y <= -T::pi() {
        y += two_pi;
    }
    if y > T::pi() {
        y -= two_pi;
    }
    y
}

/// Determinant via LU.
pub fn det<T: Real>(a: &CMat<T>) -> C<T> {
    if a.nrows() == 0 {
        return cr(T::one());
    }
    a.clone().lu().determinant()
}

/// Generalised Hermitian eigenproblem `A x = λ M x` with `M` positive
/// definite. Returns ascending eigenvalues and `M`-orthonormal eigenvectors.
pub fn generalized_eigen<T: Real>(a: &CMat<T>, m: &CMat<T>) -> Result<(Vec<T>, CMat<T>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let chol = Cholesky::new(herm(m))
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(&herm(a))
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.adjoint())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let (vals, y) = hermitian_eigen(&c);
    let x = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    Ok((vals, x))
}

/// Real-symmetric generalised eigenvalues (used on large real problems).
pub fn generalized_eigenvalues_real<T: Real>(a: &DMatrix<T>, m: &DMatrix<T>) -> Result<Vec<T>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let ms = (m + m.transpose()) * T::lit(0.5);
    let chol = Cholesky::new(ms).ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let as_ = (a + a.transpose()) * T::lit(0.5);
    let x = l
        .solve_lower_triangular(&as_)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    Ok(symmetric_eigenvalues(&c))
}
