//! `equi-index`: command-line front end.
//!
//! Exit status: 0 when every verified identity holds, 2 when one fails,
//! 1 on errors (bad input, numerical failure, usage).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use equi_index::dihedral::DihedralRep;
use equi_index::hamiltonian::{self, GraphPath};
use equi_index::io::{self, FrameFile, RepFile, SystemFile};
use equi_index::scalar::CMat;
use equi_index::stability::{self, ReversibleAction, StabilityOptions};
use equi_index::threebody::{self, IndexOptions, OrbitSolution, ThreeBodyConfig};
use equi_index::{Error, Tolerances};

mod selftest;

#[derive(Parser, Debug)]
#[command(name = "equi-index", version, about = "Equivariant Maslov and Morse index computations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
struct Global {
    /// Nullity threshold (relative for dense forms, absolute for extrapolated ones).
    #[arg(long, global = true)]
    tol_null: Option<f64>,
    /// Mesh parameter of the command (elements, loop nodes, or half-interval elements).
    #[arg(long, global = true)]
    mesh: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true, env = "EQUI_INDEX_JOBS")]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Isotypic rank table of a dihedral representation.
    Decompose {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
    },
    /// Maslov index of the fundamental solution against a boundary condition.
    Maslov(SystemBc),
    /// Spectral index by truncated spectral flow, checked against the Maslov index.
    SpectralFlow(SystemBc),
    /// Equivariant splitting identities.
    Bott {
        #[command(subcommand)]
        action: BottAction,
    },
    /// Hyperbolicity criteria for reversible Lagrangian systems.
    Stability {
        #[command(subcommand)]
        action: StabilityAction,
    },
    /// Figure-eight orbit of the three-body problem.
    Fig8 {
        #[command(subcommand)]
        action: Fig8Action,
    },
    /// Built-in suite of exact examples.
    Selftest,
}

#[derive(Args, Debug, serde::Serialize)]
struct SystemBc {
    #[arg(long)]
    system: PathBuf,
    /// dirichlet, neumann, periodic, or a frame JSON file.
    #[arg(long, default_value = "periodic")]
    bc: String,
    /// RK4 steps for the fundamental solution.
    #[arg(long, default_value_t = 2000)]
    steps: usize,
}

#[derive(Subcommand, Debug)]
enum BottAction {
    Verify {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        rep: PathBuf,
        /// Reflection index for Sturm systems; every h when absent.
        #[arg(long)]
        h: Option<usize>,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
    },
}

#[derive(Subcommand, Debug)]
enum StabilityAction {
    Check {
        #[arg(long)]
        system: PathBuf,
        /// `(S, N)` of the reversible action; plain time reversal when absent.
        #[arg(long)]
        rep: Option<PathBuf>,
        /// Also compute splitting numbers at unit-circle multipliers.
        #[arg(long)]
        splitting: bool,
    },
}

#[derive(Subcommand, Debug)]
enum Fig8Action {
    Find {
        #[arg(long = "T", alias = "period", default_value_t = std::f64::consts::TAU)]
        period: f64,
        #[arg(long, default_value_t = 120)]
        nc: usize,
        #[arg(long)]
        nf: Option<usize>,
        /// Orbit file to write.
        #[arg(long, default_value = "orbit.json")]
        orbit: PathBuf,
        /// Optional Cartesian trajectory for plotting.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    Indices {
        #[arg(long, default_value = "orbit.json")]
        orbit: PathBuf,
    },
}

struct Outcome {
    inputs: Value,
    results: Value,
    verified: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    if let Some(t) = g.tol_null {
        if !(t > 0.0) {
            bail!("--tol-null must be positive");
        }
    }
    if let Some(j) = g.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global().context("configuring the thread pool")?;
    }
    let mut tol = Tolerances::default();
    if let Some(t) = g.tol_null {
        tol.null_rel = t;
    }
    let (name, out) = match &cli.command {
        Command::Decompose { rep, period } => ("decompose", decompose(rep, *period, g, &tol)?),
        Command::Maslov(a) => ("maslov", maslov(a, &tol)?),
        Command::SpectralFlow(a) => ("spectral-flow", spectral_flow(a, &tol)?),
        Command::Bott { action: BottAction::Verify { system, rep, h, steps } } => {
            ("bott verify", bott(system, rep, *h, *steps, g, &tol)?)
        }
        Command::Stability { action: StabilityAction::Check { system, rep, splitting } } => {
            ("stability check", stability_check(system, rep.as_deref(), *splitting, g)?)
        }
        Command::Fig8 { action: Fig8Action::Find { period, nc, nf, orbit, csv } } => {
            ("fig8 find", fig8_find(*period, *nc, *nf, orbit, csv.as_deref())?)
        }
        Command::Fig8 { action: Fig8Action::Indices { orbit } } => ("fig8 indices", fig8_indices(orbit, g)?),
        Command::Selftest => ("selftest", selftest::run(g.seed)?),
    };
    let report = json!({
        "schema": io::REPORT_SCHEMA,
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "global": g,
        "inputs": out.inputs,
        "tolerances": tol,
        "results": out.results,
        "verified": out.verified,
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &g.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(out.verified)
}

fn system(path: &Path) -> Result<SystemFile> {
    Ok(io::read_json(path)?)
}

fn boundary(spec: &str, m: usize) -> Result<CMat<f64>> {
    Ok(match spec {
        "dirichlet" => hamiltonian::dirichlet(m),
        "neumann" => hamiltonian::neumann(m),
        "periodic" => hamiltonian::periodic(m),
        path => {
            let f: FrameFile = io::read_json(Path::new(path))?;
            let frame = f.frame()?;
            if frame.shape() != (4 * m, 2 * m) {
                bail!("boundary frame must be {}x{}", 4 * m, 2 * m);
            }
            frame
        }
    })
}

fn decompose(rep: &Path, period: f64, g: &Global, tol: &Tolerances) -> Result<Outcome> {
    let file: RepFile = io::read_json(rep)?;
    let (m, nn) = file.matrices()?;
    let rep = DihedralRep::new(file.n, m, nn, period, tol.rel.max(1e-9))?;
    let mesh = g.mesh.unwrap_or(4 * file.n);
    let table = rep.rank_table(mesh)?;
    Ok(Outcome {
        inputs: json!({ "rep": file, "period": period, "mesh": mesh }),
        verified: table.consistent(),
        results: json!({ "rank_table": table }),
    })
}

fn maslov(a: &SystemBc, tol: &Tolerances) -> Result<Outcome> {
    let file = system(&a.system)?;
    let sys = file.hamiltonian()?;
    let l = boundary(&a.bc, file.m)?;
    let path = hamiltonian::fundamental_solution(&sys, a.steps, tol.sympl)?;
    let res = equi_index::maslov::maslov_clm(&l, &GraphPath::new(&path), tol)?;
    Ok(Outcome {
        inputs: json!({ "system": file, "bc": a.bc, "steps": a.steps }),
        verified: true,
        results: json!({
            "index": res.index,
            "method": res.method,
            "crossings": res.crossings.iter().map(|c| c.summary()).collect::<Vec<_>>(),
            "drift": path.drift,
        }),
    })
}

fn spectral_flow(a: &SystemBc, tol: &Tolerances) -> Result<Outcome> {
    let file = system(&a.system)?;
    let sys = file.hamiltonian()?;
    let l = boundary(&a.bc, file.m)?;
    let spec = hamiltonian::spectral_index(&sys, &l, tol)?;
    let path = hamiltonian::fundamental_solution(&sys, a.steps, tol.sympl)?;
    let geo = equi_index::maslov::maslov_clm(&l, &GraphPath::new(&path), tol)?.index;
    Ok(Outcome {
        inputs: json!({ "system": file, "bc": a.bc, "steps": a.steps }),
        verified: geo == spec.index,
        results: json!({ "spectral": spec, "geometric": geo, "agree": geo == spec.index }),
    })
}

fn bott(system_path: &Path, rep_path: &Path, h: Option<usize>, steps: usize, g: &Global, tol: &Tolerances) -> Result<Outcome> {
    let file = system(system_path)?;
    let rf: RepFile = io::read_json(rep_path)?;
    let inputs = json!({ "system": file, "rep": rf, "h": h, "steps": steps });
    if file.is_sturm() {
        let sturm = file.sturm()?;
        let (m, nn) = rf.matrices()?;
        let rep = DihedralRep::new(rf.n, m, nn, file.period, tol.rel.max(1e-9))?;
        let mesh = g.mesh.unwrap_or(8 * rf.n);
        let hs: Vec<usize> = h.map_or_else(|| (0..rf.n).collect(), |h| vec![h]);
        let reports = hs
            .iter()
            .map(|&h| hamiltonian::bott_lagrangian(&sturm, &rep, h, mesh, tol))
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(Outcome { inputs, verified: reports.iter().all(|r| r.holds()), results: json!({ "lagrangian": reports, "mesh": mesh }) })
    } else {
        let (mm, nr) = rf.real_matrices()?;
        let rep = DihedralRep::from_real(rf.n, &mm, &nr, file.period, tol.rel.max(1e-9))?;
        let sys = file.hamiltonian()?.with_symmetry(rf.n, mm, nr);
        let report = hamiltonian::bott_hamiltonian(&sys, &rep, steps, tol)?;
        let iso = hamiltonian::isotypic_spectral_indices(&sys, &rep, tol)?;
        Ok(Outcome { inputs, verified: report.holds(), results: json!({ "hamiltonian": report, "isotypic_spectral": iso }) })
    }
}

fn stability_check(system_path: &Path, rep: Option<&Path>, splitting: bool, g: &Global) -> Result<Outcome> {
    let file = system(system_path)?;
    let sturm = file.sturm()?;
    let action = match rep {
        Some(p) => {
            let rf: RepFile = io::read_json(p)?;
            let (s, nn) = rf.real_matrices()?;
            ReversibleAction { n: rf.n, s, nn }
        }
        None => ReversibleAction::reversal(file.m),
    };
    let mut opts = StabilityOptions::default();
    if let Some(t) = g.tol_null {
        opts.tol_null = t;
    }
    if let Some(m) = g.mesh {
        opts.mesh = m;
    }
    let inputs = json!({ "system": file, "n": action.n, "options": opts });
    let (verified, check) = match stability::hyperbolicity_check(&sturm, &action, &opts) {
        Ok(r) => (true, json!(r)),
        Err(Error::CriterionViolated { distance }) => (false, json!({ "criterion_violated": { "distance": distance } })),
        Err(e) => return Err(e.into()),
    };
    let split = if splitting { Some(stability::index_hyperbolic_test(&sturm, &opts)?) } else { None };
    Ok(Outcome { inputs, verified, results: json!({ "hyperbolicity": check, "index_hyperbolic": split }) })
}

#[derive(serde::Serialize, serde::Deserialize)]
struct OrbitFile {
    schema: String,
    orbit: OrbitSolution,
}

fn fig8_find(period: f64, nc: usize, nf: Option<usize>, orbit_path: &Path, csv: Option<&Path>) -> Result<Outcome> {
    let mut cfg = ThreeBodyConfig::new(period, nc);
    if let Some(nf) = nf {
        cfg.n_f = nf;
    }
    let orbit = threebody::find_figure_eight(cfg)?;
    let (inv1, inv2) = threebody::action_invariance(&orbit)?;
    let file = OrbitFile { schema: io::ORBIT_SCHEMA.into(), orbit };
    std::fs::write(orbit_path, serde_json::to_string(&file)?).with_context(|| format!("writing {}", orbit_path.display()))?;
    if let Some(p) = csv {
        let mut s = String::from("t,x1,y1,x2,y2,x3,y3\n");
        for (j, x) in file.orbit.cartesian().iter().enumerate() {
            let t = period * j as f64 / nc as f64;
            s += &format!("{t},{},{},{},{},{},{}\n", x[0], x[1], x[2], x[3], x[4], x[5]);
        }
        std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))?;
    }
    let o = &file.orbit;
    Ok(Outcome {
        inputs: json!({ "config": cfg, "orbit_file": orbit_path }),
        verified: true,
        results: json!({
            "action": o.action,
            "grad_norm": o.grad_norm,
            "min_distance": o.min_distance,
            "equivariance_residual": o.equivariance_residual,
            "iterations": o.iterations,
            "fixed_space_min_eigenvalue": o.fixed_space_min_eigenvalue,
            "action_invariance": [inv1, inv2],
        }),
    })
}

fn fig8_indices(orbit_path: &Path, g: &Global) -> Result<Outcome> {
    let file: OrbitFile = io::read_json(orbit_path)?;
    io::check_schema(&file.schema, io::ORBIT_SCHEMA)?;
    let mut opts = IndexOptions::default();
    if let Some(m) = g.mesh {
        opts.mesh_half = m;
    }
    if let Some(t) = g.tol_null {
        opts.tol_null = t;
    }
    let table = threebody::equivariant_morse_indices(&file.orbit, &opts)?;
    let mut checks = Vec::new();
    let mut expect = |label: String, got: usize, want: usize| {
        checks.push(json!({ "entry": label, "computed": got, "expected": want, "pass": got == want }));
    };
    expect("iMor(x)".into(), table.total.index, 2);
    for h in 0..6 {
        for (sign, s) in [(1, "+"), (-1, "-")] {
            for k in 0..=3 {
                expect(format!("F_{{{k},{h}}}^{s}"), table.component(k, h, sign).index, usize::from(k == 1));
            }
        }
    }
    for (k, want) in [0, 1, 0, 0, 0, 1].into_iter().enumerate() {
        expect(format!("E_{k}"), table.e[k].index, want);
    }
    expect("iMor_Z2".into(), table.z2.index, 0);
    expect("iMor_Z3".into(), table.z3.index, 0);
    let all_pass = checks.iter().all(|c| c["pass"] == json!(true));
    eprintln!("{}", render_table(&table));
    Ok(Outcome {
        inputs: json!({ "orbit_file": orbit_path, "config": file.orbit.config, "options": opts }),
        verified: all_pass && table.consistent(),
        results: json!({ "table": table, "comparison": checks }),
    })
}

fn render_table(t: &threebody::MorseTable) -> String {
    let mut s = String::from("  h | F0+ F0- F1+ F1- F2+ F2- F3+ F3- | sum\n");
    for h in 0..6 {
        s += &format!("  {h} |");
        for k in 0..=3 {
            for sign in [1, -1] {
                s += &format!(" {:>3}", t.component(k, h, sign).index);
            }
        }
        s += &format!(" | {}\n", t.sums[h]);
    }
    let e: Vec<String> = t.e.iter().map(|p| p.index.to_string()).collect();
    s += &format!("  E_0..E_5: {}  total {}  Z2 {}  Z3 {}", e.join(" "), t.total.index, t.z2.index, t.z3.index);
    s
}
