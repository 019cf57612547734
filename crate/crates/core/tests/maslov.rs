use equi_index::linalg::{graph_frame, standard_j, SymplecticSpace};
use equi_index::maslov::*;
use equi_index::scalar::{complexify, CMat};
use equi_index::{Error, Tolerances};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

type M = CMat<f64>;

fn e1() -> M {
    M::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
}

fn rot(m: usize, t: f64) -> M {
    // e^{tJ} = cos t I + sin t J
    let j = complexify(&standard_j::<f64>(m));
    M::identity(2 * m, 2 * m) * Complex64::new(t.cos(), 0.0) + j * Complex64::new(t.sin(), 0.0)
}

fn rotating(a: f64, b: f64) -> FnPath<f64, impl Fn(f64) -> M + Sync> {
    FnPath::new(SymplecticSpace::standard(1), a, b, |t| rot(1, t) * e1())
}

#[test]
fn transversal_interior_has_no_crossings() {
    let path = rotating(0.1, std::f64::consts::PI - 0.1);
    let r = ConstPath::new(SymplecticSpace::standard(1), e1(), 0.1, 3.0).unwrap();
    let c = find_crossings(&r, &path, &Tolerances::default()).unwrap();
    assert!(c.is_empty());
}

#[test]
fn single_crossing_at_zero_has_positive_unit_form() {
    let path = rotating(-0.1, 0.1);
    let r = ConstPath::new(SymplecticSpace::standard(1), e1(), -0.1, 0.1).unwrap();
    let c = find_crossings(&r, &path, &Tolerances::default()).unwrap();
    assert_eq!(c.len(), 1);
    assert!(c[0].t0.abs() < 1e-9);
    assert_eq!(c[0].intersection_dim, 1);
    assert_eq!(c[0].signature, Signature { pos: 1, neg: 0, zero: 0 });
    // d/dt ω(v, w(t)) = |v|² with a unit intersection vector.
    assert!((c[0].eigenvalues[0] - 1.0).abs() < 1e-6, "{:?}", c[0].eigenvalues);
}

#[test]
fn constant_path_is_not_isolated() {
    let path = FnPath::new(SymplecticSpace::standard(1), 0.0, 1.0, |_| e1());
    let r = ConstPath::new(SymplecticSpace::standard(1), e1(), 0.0, 1.0).unwrap();
    let e = find_crossings(&r, &path, &Tolerances::default()).unwrap_err();
    assert!(matches!(e, Error::NonIsolatedCrossing { .. }));
}

#[test]
fn rotation_indices() {
    let tol = Tolerances::default();
    let pi = std::f64::consts::PI;
    let r = maslov_clm(&e1(), &rotating(0.0, pi), &tol).unwrap();
    assert_eq!(r.index, 1);
    assert_eq!(r.method, IndexMethod::CrossingForms);
    assert_eq!(maslov_clm(&e1(), &rotating(0.0, 2.0 * pi), &tol).unwrap().index, 2);
    assert_eq!(maslov_clm(&e1(), &rotating(0.2, 2.0), &tol).unwrap().index, 0);
    // Reversed orientation ends on a negative crossing.
    let back = FnPath::new(SymplecticSpace::standard(1), 0.0, pi, |t| rot(1, -t) * e1());
    assert_eq!(maslov_clm(&e1(), &back, &tol).unwrap().index, -1);
}

#[test]
fn winding_oracle_matches_rotation() {
    let pi = std::f64::consts::PI;
    let path = rotating(0.0, 2.0 * pi);
    let r = ConstPath::new(SymplecticSpace::standard(1), e1(), 0.0, 2.0 * pi).unwrap();
    assert_eq!(maslov_winding(&r, &path, 1e-5).unwrap(), 2);
}

#[test]
fn constant_path_falls_back_to_perturbation() {
    let path = FnPath::new(SymplecticSpace::standard(1), 0.0, 1.0, |_| e1());
    let r = maslov_clm(&e1(), &path, &Tolerances::default()).unwrap();
    assert_eq!(r.index, 0);
    assert!(matches!(r.method, IndexMethod::Perturbed { .. }));
}

#[test]
fn sampled_path_matches_closure() {
    let pi = std::f64::consts::PI;
    let times: Vec<f64> = (0..=40).map(|i| 2.0 * pi * i as f64 / 40.0).collect();
    let frames: Vec<M> = times.iter().map(|&t| rot(1, t) * e1()).collect();
    let p = SampledPath::new(SymplecticSpace::standard(1), times, &frames).unwrap();
    assert_eq!(maslov_clm(&e1(), &p, &Tolerances::default()).unwrap().index, 2);
}

#[test]
fn graph_of_rotation_against_diagonal() {
    // Gr(e^{tJ}) against Δ over [0, 2π] in the doubled space: two crossings of
    // dimension two (t = 0 and t = 2π) with positive forms, none inside.
    let s = SymplecticSpace::<f64>::standard(1);
    let d = s.doubled();
    let diag = graph_frame(&M::identity(2, 2));
    let pi = std::f64::consts::PI;
    let path = FnPath::new(d.clone(), 0.0, 2.0 * pi, |t| graph_frame(&rot(1, t)));
    let r = maslov_clm(&diag, &path, &Tolerances::default()).unwrap();
    assert_eq!(r.index, 2);
    assert_eq!(r.crossings.len(), 2);
}

#[test]
fn symplectic_invariance_under_rotation_of_both() {
    let tol = Tolerances::default();
    let pi = std::f64::consts::PI;
    let path = rotating(0.0, 1.5 * pi);
    let base = maslov_clm(&e1(), &path, &tol).unwrap().index;
    let moved = maslov_relative_pair(&e1(), &path, |t| rot(1, 0.7 * t), &tol).unwrap().index;
    assert_eq!(base, moved);
    let bad = maslov_relative_pair(&e1(), &path, |_| M::identity(2, 2) * Complex64::new(1.1, 0.0), &tol);
    assert!(matches!(bad, Err(Error::NotSymplectic { .. })));
}

/// Real Lagrangian frame graph of a symmetric matrix, `{(y, A y)}`.
fn sym_graph(a: &DMatrix<f64>) -> M {
    let m = a.nrows();
    let mut z = DMatrix::<f64>::zeros(2 * m, m);
    z.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
    z.view_mut((m, 0), (m, m)).copy_from(a);
    complexify(&z)
}

fn sym_from(v: &[f64], m: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, m, |i, j| v[i * m + j]);
    (&a + a.transpose()) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Moving along `e^{tJ}` a random real Lagrangian makes every eigen-angle
    /// sweep once around the circle per π, so the index over [0, π] (generic
    /// endpoints) equals m, and the winding oracle agrees.
    #[test]
    fn rotation_of_random_lagrangian(v in proptest::collection::vec(-2.0..2.0f64, 4), t0 in 0.05..0.3f64) {
        let m = 2;
        let l = sym_graph(&sym_from(&v, m));
        let pi = std::f64::consts::PI;
        let l0 = l.clone();
        let path = FnPath::new(SymplecticSpace::standard(m), t0, t0 + pi, move |t| rot(m, t) * &l0);
        let tol = Tolerances::default();
        let r = maslov_clm(&l, &path, &tol).unwrap();
        let refp = ConstPath::new(SymplecticSpace::standard(m), l.clone(), t0, t0 + pi).unwrap();
        let w = maslov_winding(&refp, &path, 1e-5).unwrap();
        prop_assert_eq!(r.index, w);
    }

    /// Reparametrisation, additivity and agreement with the winding count on
    /// a path of graphs of symmetric matrices `A(t) = A0 + t A1`, whose index
    /// against the vertical is the spectral flow of `A(t)`.
    #[test]
    fn graph_paths(a0 in proptest::collection::vec(-2.0..2.0f64, 9), a1 in proptest::collection::vec(-2.0..2.0f64, 9), c in 0.3..0.7f64) {
        let m = 3;
        let s0 = sym_from(&a0, m);
        let s1 = sym_from(&a1, m);
        let sp = SymplecticSpace::<f64>::standard(m);
        let vertical = {
            let mut z = DMatrix::<f64>::zeros(2 * m, m);
            z.view_mut((0, 0), (m, m)).copy_from(&DMatrix::identity(m, m));
            complexify(&z)
        };
        let (s0c, s1c) = (s0.clone(), s1.clone());
        let path = FnPath::new(sp.clone(), 0.0, 1.0, move |t| sym_graph(&(&s0c + &s1c * t)));
        let tol = Tolerances::default();
        let full = maslov_clm(&vertical, &path, &tol).unwrap().index;
        // Crossing form is <Ȧy, y> on ker A, so the index is the eigenvalue
        // count difference at (generic) endpoints.
        let neg = |a: &DMatrix<f64>| a.clone().symmetric_eigen().eigenvalues.iter().filter(|&&x| x < 0.0).count() as i64;
        prop_assert_eq!(full, neg(&s0) - neg(&(&s0 + &s1)));

        let (s0c, s1c) = (s0.clone(), s1.clone());
        let rep = FnPath::new(sp.clone(), 0.0, 1.0, move |t| sym_graph(&(&s0c + &s1c * t.powi(3))));
        prop_assert_eq!(maslov_clm(&vertical, &rep, &tol).unwrap().index, full);

        let (s0c, s1c) = (s0.clone(), s1.clone());
        let left = FnPath::new(sp.clone(), 0.0, c, move |t| sym_graph(&(&s0c + &s1c * t)));
        let (s0c, s1c) = (s0.clone(), s1.clone());
        let right = FnPath::new(sp.clone(), c, 1.0, move |t| sym_graph(&(&s0c + &s1c * t)));
        let l = maslov_clm(&vertical, &left, &tol).unwrap().index;
        let r = maslov_clm(&vertical, &right, &tol).unwrap().index;
        prop_assert_eq!(l + r, full);

        let refp = ConstPath::new(sp, vertical.clone(), 0.0, 1.0).unwrap();
        prop_assert_eq!(maslov_winding(&refp, &path, 1e-5).unwrap(), full);
    }
}
