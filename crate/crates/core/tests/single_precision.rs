//! The generic layers instantiated at `f32`.

use equi_index::hamiltonian::{dirichlet, iota_l, neumann, periodic};
use equi_index::linalg::{padded_svd, rank, standard_j, SymplecticSpace};
use equi_index::maslov::{maslov_clm, FnPath};
use equi_index::scalar::{complexify, CMat};
use equi_index::Tolerances;
use num_complex::Complex32 as C;

#[test]
fn rotation_maslov_index_in_single_precision() {
    let sp = SymplecticSpace::<f32>::standard(1);
    let e1 = CMat::<f32>::from_column_slice(2, 1, &[C::new(1.0, 0.0), C::new(0.0, 0.0)]);
    let j = complexify(&standard_j::<f32>(1));
    let frame = e1.clone();
    let path = FnPath::new(sp, 0.0, std::f32::consts::TAU, move |t: f32| {
        (CMat::identity(2, 2) * C::new(t.cos(), 0.0) + &j * C::new(t.sin(), 0.0)) * &frame
    });
    assert_eq!(maslov_clm(&e1, &path, &Tolerances::default()).unwrap().index, 2);
}

#[test]
fn boundary_constants_in_single_precision() {
    let tol = Tolerances::default();
    for m in 1..=2 {
        assert_eq!(iota_l(&dirichlet::<f32>(m), m, 1.5, &tol).unwrap(), m as i64);
        assert_eq!(iota_l(&periodic::<f32>(m), m, 1.5, &tol).unwrap(), m as i64);
        assert_eq!(iota_l(&neumann::<f32>(m), m, 1.5, &tol).unwrap(), 0);
    }
}

#[test]
fn rank_in_single_precision() {
    let a = CMat::<f32>::from_fn(4, 4, |i, j| C::new((i + 1) as f32 * (j + 2) as f32, 0.0));
    let (s, _, _) = padded_svd(&a);
    assert!(s[1] < 1e-4 * s[0]);
    assert_eq!(rank(&a, 1e-4), 1);
}
