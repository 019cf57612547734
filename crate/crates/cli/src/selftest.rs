//! Quick checks with known answers, run by `equi-index selftest`.

use std::sync::Arc;

use anyhow::Result;
use nalgebra::DMatrix;
use serde_json::{json, Value};

use equi_index::dihedral::DihedralRep;
use equi_index::galerkin::{constant, BoundarySpec, Coef};
use equi_index::hamiltonian::*;
use equi_index::random::{self, dihedral_average, TrigMatrix};
use equi_index::stability::{self, HyperbolicityVerdict, ReversibleAction, StabilityOptions};
use equi_index::threebody;
use equi_index::Tolerances;

use crate::Outcome;

type Check = (&'static str, fn(u64) -> Result<(bool, Value)>);

const CHECKS: &[Check] = &[
    ("boundary constants", boundary_constants),
    ("harmonic oscillator", oscillator),
    ("Dirichlet Morse index theorem", dirichlet_morse),
    ("Hamiltonian dihedral splitting", hamiltonian_splitting),
    ("Lagrangian dihedral splitting", lagrangian_splitting),
    ("constant-potential hyperbolicity", reversible_constant),
    ("three-body potential", three_body),
];

pub fn run(seed: u64) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut all = true;
    for (name, check) in CHECKS {
        let (pass, detail) = match check(seed) {
            Ok(r) => r,
            Err(e) => (false, json!({ "error": format!("{e:#}") })),
        };
        eprintln!("{} {name}", if pass { "pass" } else { "FAIL" });
        all &= pass;
        rows.push(json!({ "check": name, "pass": pass, "detail": detail }));
    }
    Ok(Outcome { inputs: json!({ "seed": seed }), results: json!({ "checks": rows }), verified: all })
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn boundary_constants(_: u64) -> Result<(bool, Value)> {
    let mut got = Vec::new();
    for m in 1..=2 {
        got.push([
            iota_l(&dirichlet::<f64>(m), m, 1.0, &tol())?,
            iota_l(&periodic::<f64>(m), m, 1.0, &tol())?,
            iota_l(&neumann::<f64>(m), m, 1.0, &tol())?,
        ]);
    }
    let pass = got == [[1, 1, 0], [2, 2, 0]];
    Ok((pass, json!({ "dirichlet_periodic_neumann": got })))
}

fn oscillator(_: u64) -> Result<(bool, Value)> {
    let sys = LinearHamiltonianSystem::constant(DMatrix::identity(2, 2), std::f64::consts::TAU);
    let path = fundamental_solution(&sys, 256, 1e-8)?;
    let geo = geometric_index(&path, &periodic(1), &tol())?;
    let spec = spectral_index(&sys, &periodic(1), &tol())?.index;
    Ok((geo == 2 && spec == 2, json!({ "geometric": geo, "spectral": spec })))
}

fn dirichlet_morse(_: u64) -> Result<(bool, Value)> {
    let w2 = 30.0;
    let s = SturmSystem::new(1, 2.0, constant(DMatrix::identity(1, 1)), constant(DMatrix::zeros(1, 1)), constant(DMatrix::from_element(1, 1, -w2)));
    let morse = s.galerkin(BoundarySpec::Dirichlet, 200).assemble()?.morse(1e-8)?.0 as i64;
    let oracle = (1..50).filter(|k| (*k as f64 * std::f64::consts::PI / 2.0).powi(2) < w2).count() as i64;
    let spec = spectral_index(&legendre_reduce(&s)?, &dirichlet(1), &tol())?.index;
    Ok((morse == oracle && spec == morse + 1, json!({ "morse": morse, "oracle": oracle, "spectral": spec })))
}

fn hamiltonian_splitting(seed: u64) -> Result<(bool, Value)> {
    let (n, m, period) = (3, 1, 4.0);
    let mut g = random::rng(seed);
    let (mm, nn) = random::hamiltonian_rep(&mut g, n, m);
    let base = TrigMatrix::random(&mut g, 2 * m, 2, period);
    let b0: Coef<f64> = Arc::new(move |t| base.eval(t) * 3.0);
    let b = dihedral_average(b0, &mm, &nn, n, period);
    let rep = DihedralRep::from_real(n, &mm, &nn, period, 1e-10)?;
    let sys = LinearHamiltonianSystem::new(m, period, b).with_symmetry(n, mm, nn);
    let r = bott_hamiltonian(&sys, &rep, 180, &tol())?;
    Ok((r.holds(), json!(r)))
}

fn lagrangian_splitting(seed: u64) -> Result<(bool, Value)> {
    let (n, m) = (3, 2);
    let mut g = random::rng(seed);
    let (s, nn) = random::lagrangian_rep(&mut g, n, m);
    let (p, q, r) = random::equivariant_sturm(&mut g, &s, &nn, n, 1.0, 60.0);
    let rep = DihedralRep::from_real(n, &s, &nn, 1.0, 1e-10)?;
    let sys = SturmSystem::new(m, 1.0, p, q, r);
    let reports = (0..n).map(|h| bott_lagrangian(&sys, &rep, h, 2 * n * 8, &tol())).collect::<Result<Vec<_>, _>>()?;
    Ok((reports.iter().all(|r| r.holds()), json!(reports)))
}

fn reversible_constant(_: u64) -> Result<(bool, Value)> {
    let sys = stability::time_reversible_system(1, 2.0, constant(DMatrix::from_element(1, 1, 0.5)))?;
    let r = stability::hyperbolicity_check(&sys, &ReversibleAction::reversal(1), &StabilityOptions::default())?;
    Ok((r.verdict == HyperbolicityVerdict::Hyperbolic, json!(r)))
}

fn three_body(_: u64) -> Result<(bool, Value)> {
    let u = threebody::jacobi_transform(&threebody::equilateral(), 1e-12)?;
    let (value, _, _) = threebody::potential_and_derivatives(&u, 1e-3)?;
    let (s, n) = threebody::generators();
    let id = nalgebra::Matrix4::identity();
    let relations = (s.pow(6) - id).amax().max((n * n - id).amax()).max((n * s.transpose() - s * n).amax());
    Ok(((value - 3.0).abs() < 1e-12 && relations < 1e-12, json!({ "equilateral_potential": value, "d6_residual": relations })))
}
