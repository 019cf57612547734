//! Acceptance suite. Each test prints one `PASS`/`FAIL` line (written to
//! stderr directly, so it shows without `--nocapture`) and then asserts.
//!
//! Run just this file with `cargo test -p equi-index --test acceptance`.

use std::io::Write as _;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use equi_index::dihedral::DihedralRep;
use equi_index::galerkin::{constant, BoundarySpec, Coef};
use equi_index::hamiltonian::*;
use equi_index::linalg::{block_diag, graph_frame, standard_j, SymplecticSpace};
use equi_index::maslov::{maslov_clm, FnPath};
use equi_index::random::{self, dihedral_average, Rng64, TrigMatrix};
use equi_index::scalar::{complexify, CMat, RMat};
use equi_index::stability::{self, HyperbolicityVerdict, ReversibleAction, StabilityOptions};
use equi_index::threebody::{self, IndexOptions, MorseTable, OrbitSolution, ThreeBodyConfig};
use equi_index::{Result, Tolerances};

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

fn report(id: usize, name: &str, pass: bool, detail: &str) -> bool {
    let line = format!("acceptance [{id:>2}/10] {} {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    pass
}

fn tol() -> Tolerances {
    Tolerances::default()
}

// ---------------------------------------------------------------- figure-eight

struct Fig8 {
    orbit: OrbitSolution,
    table: MorseTable,
    seconds: f64,
}

fn fig8(n_c: usize) -> &'static Fig8 {
    static COARSE: OnceLock<Fig8> = OnceLock::new();
    static FINE: OnceLock<Fig8> = OnceLock::new();
    let cell = if n_c == 120 { &COARSE } else { &FINE };
    cell.get_or_init(|| {
        let start = Instant::now();
        let orbit = threebody::find_figure_eight(ThreeBodyConfig::new(TAU, n_c)).expect("figure-eight converges");
        let base = IndexOptions::default();
        let opts = IndexOptions { mesh_half: base.mesh_half * n_c / 120, ..base };
        let table = threebody::equivariant_morse_indices(&orbit, &opts).expect("index table");
        Fig8 { orbit, table, seconds: start.elapsed().as_secs_f64() }
    })
}

#[test]
fn figure_eight_total_index() {
    let (a, b) = (fig8(120), fig8(240));
    let pass = a.table.total.index == 2 && b.table.total.index == 2 && b.seconds <= 300.0;
    let detail = format!(
        "iMor = {} (N_c=120, {:.1}s), {} (N_c=240, {:.1}s); nullity {} / {}; action {:.12} / {:.12}",
        a.table.total.index, a.seconds, b.table.total.index, b.seconds, a.table.total.nullity, b.table.total.nullity, a.orbit.action, b.orbit.action
    );
    assert!(report(1, "figure-eight total index", pass, &detail), "{detail}");
}

fn table_mismatches(t: &MorseTable) -> Vec<String> {
    let mut bad = Vec::new();
    for h in 0..6 {
        for sign in [1, -1] {
            for k in 0..=3 {
                let want = usize::from(k == 1);
                let got = t.component(k, h, sign).index;
                if got != want {
                    bad.push(format!("F_{k},{h}^{sign:+}={got}"));
                }
            }
        }
    }
    for (k, want) in [0, 1, 0, 0, 0, 1].into_iter().enumerate() {
        if t.e[k].index != want {
            bad.push(format!("E_{k}={}", t.e[k].index));
        }
    }
    if t.z2.index != 0 || t.z3.index != 0 {
        bad.push(format!("Z2={} Z3={}", t.z2.index, t.z3.index));
    }
    if !t.consistent() {
        bad.push("internal sums inconsistent".into());
    }
    bad
}

#[test]
fn figure_eight_component_table() {
    let (a, b) = (fig8(120), fig8(240));
    let bad: Vec<String> = table_mismatches(&a.table).into_iter().chain(table_mismatches(&b.table)).collect();
    let e: Vec<usize> = a.table.e.iter().map(|p| p.index).collect();
    let pass = bad.is_empty() && a.table.integers() == b.table.integers();
    let detail = if pass {
        format!("F_1,h^± = 1, other F = 0 for h = 0..5; E = {e:?}; Z2 = Z3 = 0; identical at both meshes")
    } else {
        format!("mismatches {bad:?}")
    };
    assert!(report(2, "figure-eight component table", pass, &detail), "{detail}");
}

// ---------------------------------------------------------- random equivariant

const NS: [usize; 4] = [2, 3, 4, 6];
const SUITE: usize = 52;

struct HamCase {
    n: usize,
    rep: DihedralRep<f64>,
    sys: LinearHamiltonianSystem<f64>,
}

fn hamiltonian_case(i: usize) -> HamCase {
    let mut g = random::rng(1000 + i as u64);
    let n = NS[i % 4];
    let m = 1 + (i / 4) % 4;
    let period = g.random_range(1.0..4.0);
    let (mm, nn) = random::hamiltonian_rep(&mut g, n, m);
    let base = TrigMatrix::random(&mut g, 2 * m, 2, period);
    let b0: Coef<f64> = Arc::new(move |t| base.eval(t) * 2.0);
    let b = dihedral_average(b0, &mm, &nn, n, period);
    let rep = DihedralRep::from_real(n, &mm, &nn, period, 1e-10).expect("valid representation");
    HamCase { n, rep, sys: LinearHamiltonianSystem::new(m, period, b).with_symmetry(n, mm, nn) }
}

fn steps_for(sys: &LinearHamiltonianSystem<f64>, n: usize) -> usize {
    ((60.0 * sys.bound() * sys.period).ceil() as usize).max(60 * n)
}

struct HamOutcome {
    total: i64,
    parts: Vec<i64>,
    bott: BottReport,
}

fn hamiltonian_suite() -> &'static Vec<Result<HamOutcome>> {
    static CELL: OnceLock<Vec<Result<HamOutcome>>> = OnceLock::new();
    CELL.get_or_init(|| {
        (0..SUITE)
            .into_par_iter()
            .map(|i| {
                let c = hamiltonian_case(i);
                let total = spectral_index(&c.sys, &twisted_loop(&c.rep.q)?, &tol())?.index;
                let parts = isotypic_spectral_indices(&c.sys, &c.rep, &tol())?;
                let bott = bott_hamiltonian(&c.sys, &c.rep, steps_for(&c.sys, c.n), &tol())?;
                Ok(HamOutcome { total, parts, bott })
            })
            .collect()
    })
}

struct LagCase {
    n: usize,
    rep: DihedralRep<f64>,
    sys: SturmSystem<f64>,
}

fn lagrangian_case(i: usize) -> LagCase {
    let mut g = random::rng(5000 + i as u64);
    let n = NS[i % 4];
    let m = 1 + (i / 4) % 4;
    let (s, nn) = random::lagrangian_rep(&mut g, n, m);
    let (p, q, r) = random::equivariant_sturm(&mut g, &s, &nn, n, 1.0, 40.0);
    LagCase { n, rep: DihedralRep::from_real(n, &s, &nn, 1.0, 1e-10).expect("valid representation"), sys: SturmSystem::new(m, 1.0, p, q, r) }
}

struct LagOutcome {
    reports: Vec<LagrangianBottReport>,
    e: Vec<usize>,
}

fn lagrangian_suite() -> &'static Vec<Result<LagOutcome>> {
    static CELL: OnceLock<Vec<Result<LagOutcome>>> = OnceLock::new();
    CELL.get_or_init(|| {
        (0..SUITE)
            .into_par_iter()
            .map(|i| {
                let c = lagrangian_case(i);
                let mesh = 2 * c.n * 6;
                let reports = (0..c.n).map(|h| bott_lagrangian(&c.sys, &c.rep, h, mesh, &tol())).collect::<Result<Vec<_>>>()?;
                let e = (0..c.n)
                    .map(|k| Ok(c.rep.e_k_problem(&c.sys.p, &c.sys.q, &c.sys.r, k, 12).assemble()?.morse(1e-8)?.0))
                    .collect::<Result<Vec<_>>>()?;
                Ok(LagOutcome { reports, e })
            })
            .collect()
    })
}

#[test]
fn equivariant_summation_identities() {
    let mut failures = Vec::new();
    let mut nonzero = 0;
    for (i, r) in hamiltonian_suite().iter().enumerate() {
        match r {
            Ok(o) => {
                nonzero += usize::from(o.total != 0);
                if o.parts.iter().sum::<i64>() != o.total {
                    failures.push(format!("H{i}: isotypic sum {:?} vs total {}", o.parts, o.total));
                }
                if !o.bott.holds() || o.bott.lhs != o.total {
                    failures.push(format!("H{i}: splitting lhs {} = {} + {}, total {}", o.bott.lhs, o.bott.plus, o.bott.minus, o.total));
                }
            }
            Err(e) => failures.push(format!("H{i}: error {e}")),
        }
    }
    for (i, r) in lagrangian_suite().iter().enumerate() {
        match r {
            Ok(o) => {
                let total = o.reports[0].total;
                nonzero += usize::from(total != 0);
                if !o.reports.iter().all(|r| r.holds() && r.total == total) {
                    failures.push(format!("L{i}: E_h^± / F_k,h^± bookkeeping"));
                }
                if o.e.iter().sum::<usize>() != total {
                    failures.push(format!("L{i}: E_k sum {:?} vs total {total}", o.e));
                }
            }
            Err(e) => failures.push(format!("L{i}: error {e}")),
        }
    }
    let pass = failures.is_empty();
    let detail = format!(
        "{SUITE} Hamiltonian + {SUITE} Lagrangian systems, n in {NS:?}, 2m <= 8, {nonzero} with nonzero total; failures {failures:?}"
    );
    assert!(report(3, "equivariant summation identities", pass, &detail), "{detail}");
}

#[test]
fn parity_and_conjugate_symmetry() {
    let mut failures = Vec::new();
    let mut checked = 0;
    for (i, r) in hamiltonian_suite().iter().enumerate() {
        let Ok(o) = r else {
            failures.push(format!("H{i}: no result"));
            continue;
        };
        let n = o.parts.len();
        for k in 1..n {
            checked += 1;
            if o.parts[k] != o.parts[n - k] {
                failures.push(format!("H{i}: E_{k} {} vs E_{} {}", o.parts[k], n - k, o.parts[n - k]));
            }
        }
        let fixed = if n % 2 == 0 { o.parts[0] + o.parts[n / 2] } else { o.parts[0] };
        if (o.total - fixed).rem_euclid(2) != 0 {
            failures.push(format!("H{i}: parity total {} vs fixed {fixed}", o.total));
        }
    }
    for (i, r) in lagrangian_suite().iter().enumerate() {
        let Ok(o) = r else {
            failures.push(format!("L{i}: no result"));
            continue;
        };
        let n = o.e.len();
        for k in 1..n {
            checked += 1;
            if o.e[k] != o.e[n - k] {
                failures.push(format!("L{i}: E_{k} {} vs E_{} {}", o.e[k], n - k, o.e[n - k]));
            }
        }
        let fixed = if n % 2 == 0 { o.e[0] + o.e[n / 2] } else { o.e[0] };
        if (o.reports[0].total - fixed) % 2 != 0 {
            failures.push(format!("L{i}: parity"));
        }
    }
    let pass = failures.is_empty();
    let detail = format!("{checked} k <-> n-k pairs and {} parity checks; failures {failures:?}", 2 * SUITE);
    assert!(report(4, "parity and k <-> -k symmetry", pass, &detail), "{detail}");
}

// ------------------------------------------------------------ geo = spec

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
fn geometric_equals_spectral_index() {
    let cases = 24;
    let rows: Vec<(usize, Result<(i64, i64)>)> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let mut g = random::rng(9000 + case as u64);
            let m = 1 + case % 4;
            let period = g.random_range(0.5..3.0);
            let sys = LinearHamiltonianSystem::new(m, period, TrigMatrix::random(&mut g, 2 * m, 2, period).coef());
            let l = random_boundary(&mut g, m, case);
            let run = || -> Result<(i64, i64)> {
                let path = fundamental_solution(&sys, steps_for(&sys, 4), 1e-8)?;
                Ok((geometric_index(&path, &l, &tol())?, spectral_index(&sys, &l, &tol())?.index))
            };
            (case, run())
        })
        .collect();
    let mut failures = Vec::new();
    let mut values = Vec::new();
    for (case, r) in rows {
        match r {
            Ok((geo, spec)) if geo == spec => values.push(geo),
            Ok((geo, spec)) => failures.push(format!("case {case}: geo {geo} spec {spec}")),
            Err(e) => failures.push(format!("case {case}: {e}")),
        }
    }
    let pass = failures.is_empty();
    let detail = format!("{cases} systems, 2m <= 8, random boundary Lagrangians; indices {values:?}; failures {failures:?}");
    assert!(report(5, "geometric = spectral index", pass, &detail), "{detail}");
}

// ------------------------------------------------------- index-theorem constants

#[test]
fn index_theorem_constants() {
    let mut failures = Vec::new();
    for m in 1..=3 {
        for &t in &[0.6, 2.0, 7.0] {
            let got = [
                iota_l(&dirichlet::<f64>(m), m, t, &tol()).ok(),
                iota_l(&periodic::<f64>(m), m, t, &tol()).ok(),
                iota_l(&neumann::<f64>(m), m, t, &tol()).ok(),
            ];
            let want = [Some(m as i64), Some(m as i64), Some(0)];
            if got != want {
                failures.push(format!("m={m} T={t}: {got:?}"));
            }
        }
    }
    let pass = failures.is_empty();
    let detail = format!("iota(L_D) = iota(diagonal) = m, iota(L_N) = 0 for m = 1, 2, 3 and T in {{0.6, 2, 7}}; failures {failures:?}");
    assert!(report(6, "index-theorem constants", pass, &detail), "{detail}");
}

// ------------------------------------------------------------------ Sturm oracle

#[test]
fn sturm_dirichlet_oracle() {
    // ω just below and just above (kπ/T) for several k and T.
    let pairs: Vec<(f64, f64)> = [(1.0, 1, 0.97), (1.0, 1, 1.03), (1.0, 3, 0.98), (1.0, 3, 1.02), (2.0, 2, 0.98), (2.0, 5, 1.02), (3.5, 4, 0.985), (3.5, 4, 1.015), (0.7, 2, 1.02), (5.0, 9, 0.99)]
        .iter()
        .map(|&(t, k, f)| (f * k as f64 * PI / t, t))
        .collect();
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for &(w, t) in &pairs {
        let s = SturmSystem::new(1, t, constant(RMat::identity(1, 1)), constant(RMat::zeros(1, 1)), constant(RMat::from_element(1, 1, -w * w)));
        let morse = |mesh: usize| s.galerkin(BoundarySpec::Dirichlet, mesh).assemble().and_then(|f| f.morse(1e-8)).map(|x| x.0);
        let oracle = (1..200).filter(|&k| (k as f64 * PI / t).powi(2) < w * w).count();
        match (morse(240), morse(480)) {
            (Ok(a), Ok(b)) if a == oracle && b == oracle => counts.push(oracle),
            (a, b) => failures.push(format!("ω={w:.4} T={t}: {a:?} / {b:?} vs {oracle}")),
        }
    }
    let pass = failures.is_empty();
    let detail = format!("10 (ω, T) pairs within 3% of a threshold, meshes 240 and 480; counts {counts:?}; failures {failures:?}");
    assert!(report(7, "Sturm Dirichlet oracle", pass, &detail), "{detail}");
}

// --------------------------------------------------------------- hyperbolicity

fn coef(f: impl Fn(f64) -> RMat<f64> + Send + Sync + 'static) -> Coef<f64> {
    Arc::new(f)
}

fn sturm_with_potential(m: usize, period: f64, r: Coef<f64>) -> SturmSystem<f64> {
    SturmSystem::new(m, period, constant(RMat::identity(m, m)), constant(RMat::zeros(m, m)), r)
}

#[test]
fn hyperbolicity_criterion() {
    let mut systems: Vec<(String, SturmSystem<f64>, ReversibleAction)> = Vec::new();
    // Scalar Mathieu-type potentials a + b cos(2πt/T) + c cos(4πt/T), a > |b| + |c|.
    for &(a, b, c, t) in &[(1.0, 0.5, 0.0, TAU), (0.3, 0.25, 0.0, TAU), (2.0, -1.5, 0.3, 3.0), (0.05, 0.02, 0.02, 10.0), (5.0, 4.0, -0.9, 1.0)] {
        let r = coef(move |s| RMat::from_element(1, 1, a + b * (TAU * s / t).cos() + c * (2.0 * TAU * s / t).cos()));
        systems.push((format!("mathieu({a},{b},{c};T={t})"), sturm_with_potential(1, t, r), ReversibleAction::reversal(1)));
    }
    // Two-dimensional D_2-reversible potentials with S = N = diag(1, -1).
    let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    for (i, &(a1, a2, c, e, t)) in [(1.0, 2.0, 0.4, 0.3, TAU), (0.5, 0.6, 0.2, 0.1, 4.0), (3.0, 1.0, 0.8, 0.5, 2.0), (0.2, 0.3, 0.05, 0.05, 8.0), (1.5, 1.5, 1.0, 0.2, 3.0)].iter().enumerate() {
        let r = coef(move |s| {
            let (c1, c2) = ((TAU * s / t).cos(), (2.0 * TAU * s / t).cos());
            DMatrix::from_row_slice(2, 2, &[a1 + e * c2, c * c1, c * c1, a2 - e * c2])
        });
        let action = ReversibleAction { n: 2, s: d.clone(), nn: d.clone() };
        systems.push((format!("coupled{i}"), sturm_with_potential(2, t, r), action));
    }
    let opts = StabilityOptions::default();
    let mut failures = Vec::new();
    let mut distances = Vec::new();
    for (name, sys, action) in &systems {
        let reversed = stability::time_reversible_system(sys.m, sys.period, sys.r.clone()).expect("reversible potential");
        for (label, s, act) in [("D_n", sys, action.clone()), ("time reversal", &reversed, ReversibleAction::reversal(sys.m))] {
            match stability::hyperbolicity_check(s, &act, &opts) {
                Ok(r) if r.neumann.definite && r.verdict == HyperbolicityVerdict::Hyperbolic && r.monodromy.circle_distance() > 1e-8 => {
                    distances.push(r.monodromy.circle_distance())
                }
                Ok(r) => failures.push(format!("{name} {label}: definite {} verdict {:?}", r.neumann.definite, r.verdict)),
                Err(e) => failures.push(format!("{name} {label}: {e}")),
            }
        }
    }
    let pass = failures.is_empty();
    let closest = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let detail = format!("10 reversible systems, Neumann-definite under both actions; closest multiplier to the circle {closest:.3e}; failures {failures:?}");
    assert!(report(8, "hyperbolicity criterion", pass, &detail), "{detail}");
}

// ---------------------------------------------------------------- Maslov engine

fn rot(m: usize, t: f64) -> CMat<f64> {
    let j = complexify(&standard_j::<f64>(m));
    CMat::identity(2 * m, 2 * m) * Complex64::new(t.cos(), 0.0) + j * Complex64::new(t.sin(), 0.0)
}

/// `(p₁, x₁) ⊕ (p₂, x₂)` into the `(p, x)` ordering of `R^{2(m₁+m₂)}`.
fn direct_sum(a: &CMat<f64>, m1: usize, b: &CMat<f64>, m2: usize) -> CMat<f64> {
    let m = m1 + m2;
    let mut z = CMat::zeros(2 * m, a.ncols() + b.ncols());
    for c in 0..a.ncols() {
        for i in 0..m1 {
            z[(i, c)] = a[(i, c)];
            z[(m + i, c)] = a[(m1 + i, c)];
        }
    }
    for c in 0..b.ncols() {
        for i in 0..m2 {
            z[(m1 + i, a.ncols() + c)] = b[(i, c)];
            z[(m + m1 + i, a.ncols() + c)] = b[(m2 + i, c)];
        }
    }
    z
}

#[test]
fn maslov_engine_properties() {
    let t = tol();
    let sp1 = SymplecticSpace::<f64>::standard(1);
    let e1 = CMat::from_column_slice(2, 1, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
    let mut failures = Vec::new();
    fn check(failures: &mut Vec<String>, what: String, a: Result<i64>, b: i64) {
        match a {
            Ok(x) if x == b => {}
            other => failures.push(format!("{what}: {other:?} vs {b}")),
        }
    }

    let e = e1.clone();
    check(&mut failures, "e^{tJ} on [0, π]".into(), maslov_clm(&e1, &FnPath::new(sp1.clone(), 0.0, PI, move |s| rot(1, s) * &e), &t).map(|r| r.index), 1);
    let e = e1.clone();
    check(&mut failures, "e^{tJ} on [0, 2π]".into(), maslov_clm(&e1, &FnPath::new(sp1.clone(), 0.0, TAU, move |s| rot(1, s) * &e), &t).map(|r| r.index), 2);

    let mut g = random::rng(77);
    for case in 0..6 {
        let m = 1 + case % 3;
        let period = g.random_range(1.0..3.0);
        let sys = LinearHamiltonianSystem::new(m, period, TrigMatrix::random(&mut g, 2 * m, 2, period).coef());
        let path = fundamental_solution(&sys, steps_for(&sys, 4), 1e-8).expect("integration");
        let l = random_boundary(&mut g, m, case);
        let full = maslov_clm(&l, &GraphPath::new(&path), &t).map(|r| r.index);
        let Ok(full) = full else {
            failures.push(format!("case {case}: {full:?}"));
            continue;
        };
        // Path additivity at a generic interior instant.
        let c = period * g.random_range(0.3..0.7);
        let split = maslov_clm(&l, &GraphPath::on(&path, 0.0, c), &t)
            .and_then(|a| Ok(a.index + maslov_clm(&l, &GraphPath::on(&path, c, period), &t)?.index));
        check(&mut failures, format!("case {case} additivity"), split, full);
        // Reparametrisation s ↦ period·s² of the same graph path.
        let doubled = SymplecticSpace::<f64>::standard(m).doubled();
        let p2 = path.clone();
        let reparam = FnPath::new(doubled, 0.0, 1.0, move |s| graph_frame(&complexify(&p2.at(period * s * s)))).with_grid(256);
        check(&mut failures, format!("case {case} reparametrisation"), maslov_clm(&l, &reparam, &t).map(|r| r.index), full);
    }

    // Symplectic additivity: rotations in two planes at different speeds.
    let sp2 = SymplecticSpace::<f64>::standard(2);
    let (ea, eb) = (e1.clone(), e1.clone());
    let joint = FnPath::new(sp2, 0.1, 7.0, move |s| direct_sum(&(rot(1, s) * &ea), 1, &(rot(1, 0.6 * s) * &eb), 1));
    let l0 = direct_sum(&e1, 1, &e1, 1);
    let e = e1.clone();
    let first = maslov_clm(&e1, &FnPath::new(sp1.clone(), 0.1, 7.0, move |s| rot(1, s) * &e), &t).map(|r| r.index);
    let e = e1.clone();
    let second = maslov_clm(&e1, &FnPath::new(sp1, 0.1, 7.0, move |s| rot(1, 0.6 * s) * &e), &t).map(|r| r.index);
    match (first, second) {
        (Ok(a), Ok(b)) => check(&mut failures, "direct sum".into(), maslov_clm(&l0, &joint, &t).map(|r| r.index), a + b),
        other => failures.push(format!("direct sum parts {other:?}")),
    }

    let pass = failures.is_empty();
    let detail = format!("rotation examples, additivity and reparametrisation on 6 graph paths, direct sum; failures {failures:?}");
    assert!(report(9, "Maslov engine properties", pass, &detail), "{detail}");
}

// ------------------------------------------------------------- cyclic nullity

/// `B = c(t) H + S(t)^{-T} K S(t)^{-1}` with `S(t) = exp(sin(2πt/T) J H)` and
/// `K = diag(κ)` on each `(p_i, x_i)` plane: the gauge `S` is periodic, so
/// the monodromy is exactly the block rotation `diag(e^{κ_i T J})`.
fn gauged_rotation(g: &mut Rng64, angles: &[f64], period: f64) -> LinearHamiltonianSystem<f64> {
    let m = angles.len();
    let h = random::symmetric(g, 2 * m) * 0.4;
    let j = standard_j::<f64>(m);
    let jh = &j * &h;
    let mut k = RMat::zeros(2 * m, 2 * m);
    for (i, a) in angles.iter().enumerate() {
        k[(i, i)] = a / period;
        k[(m + i, m + i)] = a / period;
    }
    let w = TAU / period;
    LinearHamiltonianSystem::new(
        m,
        period,
        coef(move |t| {
            let s_inv = (&jh * -(w * t).sin()).exp();
            &h * (w * (w * t).cos()) + s_inv.transpose() * &k * &s_inv
        }),
    )
}

#[test]
fn cyclic_nullity_identity() {
    let mut g = random::rng(31);
    let mut failures = Vec::new();
    let mut nontrivial = 0;
    for case in 0..10 {
        let n = 2 + case % 5;
        let m = 1 + case % 3;
        let period = g.random_range(0.8..2.5);
        // Even planes rotate by an n-th root of z, odd planes by a generic angle.
        let z_arg = [0.0, PI, 1.0][case % 3];
        let angles: Vec<f64> = (0..m)
            .map(|i| if i % 2 == 0 { (z_arg + TAU * g.random_range(0..n) as f64) / n as f64 + TAU } else { g.random_range(0.3..2.8) })
            .collect();
        let sys = gauged_rotation(&mut g, &angles, period);
        let path = fundamental_solution(&sys, steps_for(&sys, 8).max(2000), 1e-8).expect("integration");
        let z = Complex64::from_polar(1.0, z_arg);
        let (lhs, rhs) = cyclic_nullity(path.end(), n, z, 1e-6);
        // Oracle: a plane rotating by θ has multipliers e^{±iθ}; count those
        // whose n-th power is z.
        let oracle: usize = angles
            .iter()
            .flat_map(|a| [*a, -*a])
            .map(|a| {
                let r = (n as f64 * a - z_arg) / TAU;
                usize::from((r - r.round()).abs() < 1e-9)
            })
            .sum();
        nontrivial += usize::from(oracle > 0);
        if lhs != rhs || lhs != oracle {
            failures.push(format!("case {case} n={n} m={m}: {lhs} vs {rhs}, oracle {oracle}"));
        }
    }
    let pass = failures.is_empty() && nontrivial >= 5;
    let detail = format!("10 gauge-transformed periodic systems, {nontrivial} with positive nullity; failures {failures:?}");
    assert!(report(10, "cyclic nullity identity", pass, &detail), "{detail}");
}
