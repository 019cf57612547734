use std::sync::Arc;

use equi_index::dihedral::DihedralRep;
use equi_index::galerkin::{constant, BoundarySpec, Coef};
use equi_index::hamiltonian::*;
use equi_index::linalg::{block_diag, graph_frame, rmat, standard_j};
use equi_index::random::{self, dihedral_average, Rng64, TrigMatrix};
use equi_index::scalar::{complexify, CMat, RMat};
use equi_index::{Error, Tolerances};
use num_complex::Complex64;

const TAU: f64 = std::f64::consts::TAU;

fn rot(t: f64) -> RMat<f64> {
    RMat::identity(2, 2) * t.cos() + standard_j::<f64>(1) * t.sin()
}

fn tol() -> Tolerances {
    Tolerances::default()
}

#[test]
fn identity_hamiltonian_rotates() {
    let sys = LinearHamiltonianSystem::constant(RMat::identity(2, 2), 2.5);
    let p = fundamental_solution(&sys, 200, 1e-8).unwrap();
    assert!((p.end() - rot(2.5)).norm() < 1e-9);
    assert!((p.at(1.234) - rot(1.234)).norm() < 1e-9);
    assert!(p.drift < 1e-12);
}

#[test]
fn free_system_stays_at_identity() {
    let sys = LinearHamiltonianSystem::constant(RMat::zeros(4, 4), 3.0);
    let p = fundamental_solution(&sys, 8, 1e-8).unwrap();
    assert!((p.end() - RMat::identity(4, 4)).norm() < 1e-15);
}

#[test]
fn integrator_is_fourth_order() {
    let b: Coef<f64> = Arc::new(|t: f64| rmat(&[&[1.0 + 0.5 * t.sin(), 0.3 * t], &[0.3 * t, 2.0 - t.cos()]]));
    let sys = LinearHamiltonianSystem::new(1, 2.0, b);
    let fine = fundamental_solution(&sys, 1600, 1e-8).unwrap();
    let e1 = (fundamental_solution(&sys, 40, 1e-8).unwrap().end() - fine.end()).norm();
    let e2 = (fundamental_solution(&sys, 80, 1e-8).unwrap().end() - fine.end()).norm();
    let ratio = e1 / e2;
    assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
}

#[test]
fn legendre_reduction_blocks() {
    let z = constant(RMat::zeros(2, 2));
    let r0 = rmat(&[&[2.0, 0.5], &[0.5, -1.0]]);
    let s = SturmSystem::new(2, 1.0, constant(RMat::identity(2, 2)), z.clone(), constant(r0.clone()));
    let b = legendre_reduce(&s).unwrap().at(0.3);
    let expect = RMat::from_fn(4, 4, |i, j| match (i < 2, j < 2) {
        (true, true) => if i == j { 1.0 } else { 0.0 },
        (false, false) => -r0[(i - 2, j - 2)],
        _ => 0.0,
    });
    assert!((b - expect).norm() < 1e-15);
    let free = SturmSystem::new(2, 1.0, constant(RMat::identity(2, 2)), z.clone(), z.clone());
    let b = legendre_reduce(&free).unwrap().at(0.0);
    assert!((b.view((0, 0), (2, 2)).into_owned() - RMat::identity(2, 2)).norm() < 1e-15);
    assert!(b.view((2, 2), (2, 2)).norm() < 1e-15);
    let bad = SturmSystem::new(1, 1.0, constant(rmat(&[&[-1.0]])), constant(RMat::zeros(1, 1)), constant(RMat::zeros(1, 1)));
    assert!(matches!(legendre_reduce(&bad), Err(Error::LegendreViolation { .. })));
}

#[test]
fn reduced_constant_potential_is_hyperbolic() {
    let q0: f64 = 2.0;
    let s = SturmSystem::new(1, 1.5, constant(rmat(&[&[1.0]])), constant(RMat::zeros(1, 1)), constant(rmat(&[&[q0]])));
    let p = fundamental_solution(&legendre_reduce(&s).unwrap(), 300, 1e-8).unwrap();
    let mut ev: Vec<f64> = p.end().complex_eigenvalues().iter().map(|z| z.re).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = q0.sqrt() * 1.5;
    assert!((ev[0] - (-k).exp()).abs() < 1e-8 && (ev[1] - k.exp()).abs() < 1e-7, "{ev:?}");
}

/// With forcing `f = -(Pu' + Qu)' + Qᵀu' + Ru`, the curve
/// `z = (Pu' + Qu, u)` satisfies `z' - JBz = (-f, 0)`.
#[test]
fn reduction_on_manufactured_solution() {
    let p = |t: f64| rmat(&[&[2.0 + t.sin(), 0.3], &[0.3, 1.5]]);
    let q = |t: f64| rmat(&[&[0.2 * t, 0.1], &[-0.4, t.cos()]]);
    let r = |t: f64| rmat(&[&[1.0, t], &[t, -2.0]]);
    let u = |t: f64| nalgebra::DVector::from_vec(vec![t.sin(), (2.0 * t).cos()]);
    let du = |t: f64| nalgebra::DVector::from_vec(vec![t.cos(), -2.0 * (2.0 * t).sin()]);
    let mom = |t: f64| p(t) * du(t) + q(t) * u(t);
    let s = SturmSystem::new(2, 1.0, Arc::new(p), Arc::new(q), Arc::new(r));
    let sys = legendre_reduce(&s).unwrap();
    let j = standard_j::<f64>(2);
    let h = 1e-5;
    for &t in &[0.2, 0.5, 0.9] {
        let dmom = (mom(t + h) - mom(t - h)) / (2.0 * h);
        let f = -dmom + q(t).transpose() * du(t) + r(t) * u(t);
        let z = |s: f64| {
            let mut v = nalgebra::DVector::zeros(4);
            v.rows_mut(0, 2).copy_from(&mom(s));
            v.rows_mut(2, 2).copy_from(&u(s));
            v
        };
        let dz = (z(t + h) - z(t - h)) / (2.0 * h);
        let res = dz - &j * sys.at(t) * z(t);
        assert!((res.rows(0, 2) + &f).norm() < 1e-8);
        assert!(res.rows(2, 2).norm() < 1e-8);
    }
}

#[test]
fn constant_identity_graph_is_not_isolated() {
    let sys = LinearHamiltonianSystem::constant(RMat::zeros(2, 2), 1.0);
    let p = fundamental_solution(&sys, 16, 1e-8).unwrap();
    let e = geometric_index(&p, &periodic(1), &tol()).unwrap_err();
    assert!(matches!(e, Error::NonIsolatedCrossing { .. }));
    assert_eq!(spectral_index(&sys, &periodic(1), &tol()).unwrap().index, 0);
}

#[test]
fn harmonic_oscillator_indices() {
    let sys = LinearHamiltonianSystem::constant(RMat::identity(2, 2), TAU);
    let p = fundamental_solution(&sys, 256, 1e-8).unwrap();
    assert_eq!(geometric_index(&p, &periodic(1), &tol()).unwrap(), 2);
    assert_eq!(spectral_index(&sys, &periodic(1), &tol()).unwrap().index, 2);
    // Dirichlet on (π, 2π): conjugate instants 0 and π, both positive.
    let sys = LinearHamiltonianSystem::constant(RMat::identity(2, 2), 4.5);
    let p = fundamental_solution(&sys, 256, 1e-8).unwrap();
    assert_eq!(geometric_index(&p, &dirichlet(1), &tol()).unwrap(), 2);
    assert_eq!(spectral_index(&sys, &dirichlet(1), &tol()).unwrap().index, 2);
}

#[test]
fn boundary_constants() {
    for m in 1..=2 {
        for &t in &[0.7, 2.0, 5.0] {
            assert_eq!(iota_l(&dirichlet(m), m, t, &tol()).unwrap(), m as i64, "Dirichlet m={m} T={t}");
            assert_eq!(iota_l(&periodic(m), m, t, &tol()).unwrap(), m as i64, "periodic m={m} T={t}");
            assert_eq!(iota_l(&neumann(m), m, t, &tol()).unwrap(), 0, "Neumann m={m} T={t}");
        }
    }
}

#[test]
fn morse_index_theorem_for_dirichlet_sturm() {
    for &(t, w2) in &[(1.0, 49.0), (1.0, 5.0), (2.0, 30.0)] {
        let s = SturmSystem::new(1, t, constant(rmat(&[&[1.0]])), constant(RMat::zeros(1, 1)), constant(rmat(&[&[-w2]])));
        let morse = s.galerkin(BoundarySpec::Dirichlet, 200).assemble().unwrap().morse(1e-8).unwrap().0 as i64;
        let oracle = (1..100).filter(|k| (*k as f64 * std::f64::consts::PI / t).powi(2) < w2).count() as i64;
        assert_eq!(morse, oracle);
        let sys = legendre_reduce(&s).unwrap();
        let spec = spectral_index(&sys, &dirichlet(1), &tol()).unwrap().index;
        let geo = geometric_index(&fundamental_solution(&sys, 400, 1e-8).unwrap(), &dirichlet(1), &tol()).unwrap();
        assert_eq!(spec, morse + 1);
        assert_eq!(geo, spec);
    }
}

fn random_symplectic(g: &mut Rng64, m: usize) -> RMat<f64> {
    let a = random::symmetric(g, m) * 0.7;
    let mut shear = RMat::identity(2 * m, 2 * m);
    shear.view_mut((m, 0), (m, m)).copy_from(&a);
    random::unitary_real(g, m) * shear
}

fn random_boundary(g: &mut Rng64, m: usize, kind: usize) -> CMat<f64> {
    match kind % 3 {
        0 => block_diag(&[&complexify(&random::lagrangian_frame(g, m)), &complexify(&random::lagrangian_frame(g, m))]),
        1 => graph_frame(&complexify(&random_symplectic(g, m))),
        _ => block_diag(&[&complexify(&random_symplectic(g, m)), &complexify(&random_symplectic(g, m))]) * periodic::<f64>(m),
    }
}

#[test]
fn geometric_equals_spectral_on_random_systems() {
    let mut g = random::rng(2024);
    for case in 0..20 {
        let m = 1 + case % 4;
        let period = 0.5 + 2.5 * (case as f64 / 20.0);
        let b = TrigMatrix::random(&mut g, 2 * m, 2, period);
        let sys = LinearHamiltonianSystem::new(m, period, b.coef());
        let l = random_boundary(&mut g, m, case);
        let p = fundamental_solution(&sys, 400, 1e-8).unwrap();
        let geo = geometric_index(&p, &l, &tol()).unwrap();
        let spec = spectral_index(&sys, &l, &tol()).unwrap();
        assert_eq!(geo, spec.index, "case {case} m={m} history {:?}", spec.history);
    }
}

struct Equivariant {
    rep: DihedralRep<f64>,
    sys: LinearHamiltonianSystem<f64>,
}

fn equivariant(seed: u64, n: usize, m: usize, period: f64, scale: f64) -> Equivariant {
    let mut g = random::rng(seed);
    let (mm, nn) = random::hamiltonian_rep(&mut g, n, m);
    let base = TrigMatrix::random(&mut g, 2 * m, 2, period);
    let b0: Coef<f64> = Arc::new(move |t| base.eval(t) * scale);
    let b = dihedral_average(b0, &mm, &nn, n, period);
    let rep = DihedralRep::from_real(n, &mm, &nn, period, 1e-10).unwrap();
    let sys = LinearHamiltonianSystem::new(m, period, b).with_symmetry(n, mm, nn);
    Equivariant { rep, sys }
}

#[test]
fn symmetry_metadata_is_checked() {
    let e = equivariant(1, 3, 1, 1.0, 2.0);
    e.sys.validate(1e-10).unwrap();
    let mut g = random::rng(9);
    let broken = LinearHamiltonianSystem::new(1, 1.0, TrigMatrix::random(&mut g, 2, 2, 1.0).coef()).with_symmetry(
        3,
        e.sys.symmetry.as_ref().unwrap().mm.clone(),
        e.sys.symmetry.as_ref().unwrap().nn.clone(),
    );
    assert!(matches!(broken.validate(1e-10), Err(Error::SymmetryViolated { .. })));
    assert!(matches!(bott_hamiltonian(&broken, &e.rep, 64, &tol()), Err(Error::SymmetryViolated { .. })));
}

#[test]
fn bott_hamiltonian_on_free_system() {
    let e = equivariant(2, 3, 1, 1.0, 0.0);
    let r = bott_hamiltonian(&e.sys, &e.rep, 32, &tol()).unwrap();
    assert!(r.holds());
    assert!(r.components.iter().all(|c| c.index == 0));
}

#[test]
fn bott_hamiltonian_random_odd_and_even() {
    for (seed, n, m, period) in [(3u64, 3usize, 1usize, 4.0), (4, 4, 2, 3.0), (5, 5, 1, 5.0), (6, 6, 2, 3.0)] {
        let e = equivariant(seed, n, m, period, 3.0);
        let r = bott_hamiltonian(&e.sys, &e.rep, 60 * n, &tol()).unwrap();
        assert!(r.holds(), "n={n}: {r:?}");
        let spec = spectral_index(&e.sys, &twisted_loop(&e.rep.q).unwrap(), &tol()).unwrap().index;
        assert_eq!(spec, r.lhs, "n={n}");
    }
}

#[test]
fn isotypic_flows_add_up_pair_and_have_parity() {
    for (seed, n, m) in [(10u64, 3usize, 1usize), (11, 4, 1), (12, 5, 2)] {
        let e = equivariant(seed, n, m, 4.0, 3.0);
        let total = spectral_index(&e.sys, &twisted_loop(&e.rep.q).unwrap(), &tol()).unwrap().index;
        let parts = isotypic_spectral_indices(&e.sys, &e.rep, &tol()).unwrap();
        assert_eq!(parts.iter().sum::<i64>(), total, "n={n} {parts:?}");
        for k in 1..n {
            assert_eq!(parts[k], parts[n - k], "k={k} n={n} {parts:?}");
        }
        let fixed = if n % 2 == 0 { parts[0] + parts[n / 2] } else { parts[0] };
        assert_eq!((total - fixed).rem_euclid(2), 0);
    }
}

#[test]
fn cyclic_nullity_identity() {
    let mut g = random::rng(5);
    for n in 2..=5 {
        for j in 0..n {
            // γ(T) conjugate to a rotation by 2πj/n, so γⁿ = I.
            let s = random_symplectic(&mut g, 1);
            let gamma = &s * rot(TAU * j as f64 / n as f64) * s.clone().try_inverse().unwrap();
            let (lhs, rhs) = cyclic_nullity(&gamma, n, Complex64::new(1.0, 0.0), 1e-9);
            assert_eq!(lhs, 2);
            assert_eq!(lhs, rhs);
        }
        let e = equivariant(40 + n as u64, n, 1, 1.0, 2.0);
        let p = fundamental_solution(&e.sys, 200, 1e-8).unwrap();
        for z in [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)] {
            let (lhs, rhs) = cyclic_nullity(p.end(), n, z, 1e-9);
            assert_eq!(lhs, rhs);
        }
    }
}

fn equivariant_sturm(seed: u64, n: usize, m: usize, scale: f64) -> (DihedralRep<f64>, SturmSystem<f64>) {
    let mut g = random::rng(seed);
    let (s, nn) = random::lagrangian_rep(&mut g, n, m);
    let (p, q, r) = random::equivariant_sturm(&mut g, &s, &nn, n, 1.0, scale);
    (DihedralRep::from_real(n, &s, &nn, 1.0, 1e-10).unwrap(), SturmSystem::new(m, 1.0, p, q, r))
}

#[test]
fn bott_lagrangian_positive_form() {
    let (rep, _) = equivariant_sturm(1, 3, 2, 0.0);
    let z = constant(RMat::zeros(2, 2));
    let s = SturmSystem::new(2, 1.0, constant(RMat::identity(2, 2)), z.clone(), constant(RMat::identity(2, 2)));
    let r = bott_lagrangian(&s, &rep, 1, 36, &tol()).unwrap();
    assert!(r.holds());
    assert_eq!(r.total, 0);
}

#[test]
fn bott_lagrangian_constant_potential_counts_modes() {
    let (rep, _) = equivariant_sturm(2, 4, 2, 0.0);
    let c = 10.0 * TAU * TAU;
    let s = SturmSystem::new(
        2,
        1.0,
        constant(RMat::identity(2, 2)),
        constant(RMat::zeros(2, 2)),
        constant(RMat::identity(2, 2) * -c),
    );
    for h in 0..4 {
        let r = bott_lagrangian(&s, &rep, h, 128, &tol()).unwrap();
        assert!(r.holds(), "{r:?}");
        // j ∈ {-3, …, 3} per coordinate.
        assert_eq!(r.total, 14);
    }
}

#[test]
fn bott_lagrangian_random_equivariant() {
    for (seed, n) in [(21u64, 2usize), (22, 3), (23, 4), (24, 5)] {
        let (rep, s) = equivariant_sturm(seed, n, 2, 60.0);
        for h in 0..n {
            let r = bott_lagrangian(&s, &rep, h, 2 * n * 8, &tol()).unwrap();
            assert!(r.holds(), "n={n} h={h}: {r:?}");
        }
    }
}
