//! Seeded random instances: orthogonal and unitary matrices, dihedral
//! representations, and smooth coefficients made equivariant by averaging
//! over the group.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::galerkin::Coef;
use crate::scalar::{CMat, RMat};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut Rng64, r: usize, c: usize) -> RMat<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn symmetric(rng: &mut Rng64, m: usize) -> RMat<f64> {
    let a = gaussian(rng, m, m);
    (&a + a.transpose()) * 0.5
}

/// Haar-ish orthogonal matrix from a QR factorisation with sign fix.
pub fn orthogonal(rng: &mut Rng64, m: usize) -> RMat<f64> {
    let qr = gaussian(rng, m, m).qr();
    let (q, r) = (qr.q(), qr.r());
    let signs = DMatrix::from_diagonal(&r.diagonal().map(|x| if x < 0.0 { -1.0 } else { 1.0 }));
    q * signs
}

/// Real `2m × 2m` form `[[X, -Y], [Y, X]]` of a random `U(m)` element; it
/// commutes with the standard `J` and is symplectic and orthogonal.
pub fn unitary_real(rng: &mut Rng64, m: usize) -> RMat<f64> {
    let z = CMat::<f64>::from_fn(m, m, |_, _| {
        num_complex::Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let u = z.qr().q();
    realify(&u)
}

/// `X + iY ↦ [[X, -Y], [Y, X]]` in the `(p, x)` convention.
pub fn realify(u: &CMat<f64>) -> RMat<f64> {
    let m = u.nrows();
    let mut out = RMat::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let z = u[(i, j)];
            out[(i, j)] = z.re;
            out[(m + i, m + j)] = z.re;
            out[(i, m + j)] = -z.im;
            out[(m + i, j)] = z.im;
        }
    }
    out
}

/// Real orthogonal `(S, N)` of size `m` with `Sⁿ = I`, `N² = I`, `SN = NSᵀ`:
/// a random direct sum of dihedral irreducibles, conjugated by an orthogonal
/// matrix.
pub fn lagrangian_rep(rng: &mut Rng64, n: usize, m: usize) -> (RMat<f64>, RMat<f64>) {
    let mut s = RMat::zeros(m, m);
    let mut nn = RMat::zeros(m, m);
    let mut i = 0;
    while i < m {
        if m - i >= 2 && n > 2 && rng.random_bool(0.6) {
            let a = rng.random_range(1..n);
            let th = std::f64::consts::TAU * a as f64 / n as f64;
            let (c, sn) = (th.cos(), th.sin());
            s[(i, i)] = c;
            s[(i, i + 1)] = -sn;
            s[(i + 1, i)] = sn;
            s[(i + 1, i + 1)] = c;
            nn[(i, i)] = 1.0;
            nn[(i + 1, i + 1)] = -1.0;
            i += 2;
        } else {
            s[(i, i)] = if n % 2 == 0 && rng.random_bool(0.5) { -1.0 } else { 1.0 };
            nn[(i, i)] = if rng.random_bool(0.5) { -1.0 } else { 1.0 };
            i += 1;
        }
    }
    let o = orthogonal(rng, m);
    (&o * s * o.transpose(), &o * nn * o.transpose())
}

/// `(M, N)` of size `2m` with `Mⁿ = I`, `MJ = JM`, `NJ = -JN`, `N = Nᵀ`,
/// `N² = I` and `NMᵀ = MN`.
pub fn hamiltonian_rep(rng: &mut Rng64, n: usize, m: usize) -> (RMat<f64>, RMat<f64>) {
    let phases = CMat::<f64>::from_diagonal(&nalgebra::DVector::from_fn(m, |_, _| {
        let a = rng.random_range(0..n);
        num_complex::Complex::from_polar(1.0, std::f64::consts::TAU * a as f64 / n as f64)
    }));
    let mm = realify(&phases);
    let mut nn = RMat::identity(2 * m, 2 * m);
    for i in m..2 * m {
        nn[(i, i)] = -1.0;
    }
    let o = unitary_real(rng, m);
    (&o * mm * o.transpose(), &o * nn * o.transpose())
}

/// Random `T`-periodic symmetric trigonometric polynomial
/// `A₀ + Σ_f (A_f cos(2πft/T) + B_f sin(2πft/T)) / (1 + f)`.
#[derive(Clone, Debug)]
pub struct TrigMatrix {
    pub period: f64,
    pub constant: RMat<f64>,
    pub terms: Vec<(RMat<f64>, RMat<f64>)>,
}

impl TrigMatrix {
    pub fn random(rng: &mut Rng64, m: usize, modes: usize, period: f64) -> Self {
        let constant = symmetric(rng, m);
        let terms = (1..=modes)
            .map(|f| {
                let w = 1.0 / (1.0 + f as f64);
                (symmetric(rng, m) * w, symmetric(rng, m) * w)
            })
            .collect();
        Self { period, constant, terms }
    }

    pub fn eval(&self, t: f64) -> RMat<f64> {
        let mut out = self.constant.clone();
        for (f, (a, b)) in self.terms.iter().enumerate() {
            let th = std::f64::consts::TAU * (f + 1) as f64 * t / self.period;
            out += a * th.cos() + b * th.sin();
        }
        out
    }

    /// Crude bound on the operator norm over all `t`.
    pub fn bound(&self) -> f64 {
        self.terms.iter().fold(self.constant.norm(), |acc, (a, b)| acc + a.norm() + b.norm())
    }

    pub fn coef(self) -> Coef<f64> {
        Arc::new(move |t| self.eval(t))
    }
}

/// Group average of `f` enforcing `F(t) = Sᵀ F(t - T/n) S` and
/// `F(t) = N F(T/n - t) N` for orthogonal `S`, `N` with `Sⁿ = I`.
pub fn dihedral_average(f: Coef<f64>, s: &RMat<f64>, nn: &RMat<f64>, n: usize, period: f64) -> Coef<f64> {
    let mut pows = vec![RMat::identity(s.nrows(), s.nrows())];
    for j in 1..n {
        pows.push(&pows[j - 1] * s);
    }
    let nn = nn.clone();
    let shift = period / n as f64;
    Arc::new(move |t| {
        let mut acc = RMat::zeros(nn.nrows(), nn.nrows());
        for (j, p) in pows.iter().enumerate() {
            let tj = t - j as f64 * shift;
            acc += p.transpose() * f.as_ref()(tj) * p;
            acc += p.transpose() * &nn * f.as_ref()(shift - tj) * &nn * p;
        }
        let out = acc / (2 * n) as f64;
        (&out + out.transpose()) * 0.5
    })
}

/// Random equivariant Legendre coefficient `P ≻ 0` and potential `R` with
/// `Q = 0`, for the Lagrangian representation `(S, N)`.
pub fn equivariant_sturm(
    rng: &mut Rng64,
    s: &RMat<f64>,
    nn: &RMat<f64>,
    n: usize,
    period: f64,
    r_scale: f64,
) -> (Coef<f64>, Coef<f64>, Coef<f64>) {
    let m = s.nrows();
    let g = TrigMatrix::random(rng, m, 2, period);
    let scale = 0.5 / g.bound().max(1e-12);
    let p0: Coef<f64> = Arc::new(move |t| RMat::identity(m, m) + g.eval(t) * scale);
    let r0 = TrigMatrix::random(rng, m, 2, period);
    let r0: Coef<f64> = Arc::new(move |t| r0.eval(t) * r_scale);
    (
        dihedral_average(p0, s, nn, n, period),
        crate::galerkin::constant(RMat::zeros(m, m)),
        dihedral_average(r0, s, nn, n, period),
    )
}

/// Random orthonormal real Lagrangian frame of `(R^{2m}, J)`.
pub fn lagrangian_frame(rng: &mut Rng64, m: usize) -> RMat<f64> {
    let u = unitary_real(rng, m);
    u.columns(0, m).into_owned()
}
