use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use poisson_transport::{
    entropy, entropy_production_check, fisher, geodesic, io, ou_path, path_length, path_speed, refine_entropic,
    solve_entropic, two_point_oracle, CEPath, Density, EntropyProductionReport, PoissonSpace, RefinementTable,
    SolverReport, SOLVER_CE_TOL,
};
use serde::Serialize;

use crate::checks::{build_jobs, run_jobs, write_reports};
use crate::error::CliError;
use crate::scenario::{Check, CheckParams, Scenario, Task};

pub struct Options {
    pub out: PathBuf,
    pub threads: usize,
    pub deterministic: bool,
    pub seed: Option<u64>,
}

/// Outcome of a task: whether every verdict passed (always true for
/// non-verifying tasks).
pub type Outcome = Result<bool, CliError>;

#[derive(Serialize)]
struct Oracle {
    value: f64,
    estimate: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct DistanceArtifact<'a> {
    version: &'a str,
    lattice: &'a str,
    task: &'a str,
    inputs: Vec<String>,
    eps: f64,
    value: f64,
    distance: f64,
    report: SolverReport,
    oracle: Option<Oracle>,
}

#[derive(Serialize)]
struct CurvePoint {
    eps: f64,
    value: f64,
    status: String,
}

#[derive(Serialize)]
struct EntropicArtifact<'a> {
    version: &'a str,
    lattice: &'a str,
    inputs: Vec<String>,
    curve: Vec<CurvePoint>,
}

#[derive(Serialize)]
struct GeodesicArtifact<'a> {
    version: &'a str,
    lattice: &'a str,
    inputs: Vec<String>,
    value: f64,
    distance: f64,
    length: f64,
    speed: Vec<f64>,
    pseudo_inverse: bool,
    report: SolverReport,
}

#[derive(Serialize)]
struct FlowArtifact<'a> {
    version: &'a str,
    lattice: &'a str,
    inputs: Vec<String>,
    horizon: f64,
    intervals: usize,
    times: Vec<f64>,
    entropy: Vec<f64>,
    fisher: Vec<f64>,
    speed: Vec<f64>,
    entropy_change: Option<f64>,
    production: Option<f64>,
    production_residual: Option<f64>,
}

#[derive(Serialize)]
struct RefinementArtifact<'a> {
    version: &'a str,
    lattice: &'a str,
    eps: f64,
    table: &'a RefinementTable,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_path(space: &PoissonSpace, out: &Path, path: &CEPath) -> Result<(), CliError> {
    let mut buf = Vec::new();
    io::write_path_densities_csv(&mut buf, space, path, SOLVER_CE_TOL)?;
    fs::write(out.join("path_densities.csv"), buf)?;
    let mut buf = Vec::new();
    io::write_path_fluxes_csv(&mut buf, space, path, SOLVER_CE_TOL)?;
    fs::write(out.join("path_fluxes.csv"), buf)?;
    Ok(())
}

fn write_lattice(space: &PoissonSpace, out: &Path) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Lattice<'a> {
        hash: &'a str,
        version: &'a str,
        states: usize,
        edges: usize,
        intensity: &'a [f64],
        caps: &'a [usize],
    }
    let l = Lattice {
        hash: space.hash(),
        version: io::VERSION,
        states: space.n_states(),
        edges: space.n_edges(),
        intensity: space.sites().intensity(),
        caps: space.sites().caps(),
    };
    let text = toml::to_string(&l).map_err(|e| CliError::Parse(e.to_string()))?;
    fs::write(out.join("lattice.toml"), text)?;
    Ok(())
}

fn scrub(report: &mut SolverReport, opts: &Options) {
    if opts.deterministic {
        report.wall_time = 0.0;
    }
}

fn measure(scenario: &Scenario, space: &PoissonSpace, j: usize, what: &str) -> Result<Density, CliError> {
    match &scenario.measures[j] {
        Some(spec) => spec.build(space, &scenario.base_dir, 2),
        None => Err(CliError::Parse(format!("task {what} needs measures.mu{j}"))),
    }
}

/// `𝒲(δ₀..)` comparison for one-site, one-level lattices.
fn oracle(space: &PoissonSpace, mu0: &Density, mu1: &Density, estimate: f64) -> Option<Oracle> {
    let sites = space.sites();
    if sites.dim() != 1 || sites.caps()[0] != 1 {
        return None;
    }
    let beta = |d: &Density| d.get(1) * space.pi(1);
    let value = two_point_oracle(sites.intensity()[0], beta(mu0), beta(mu1)).ok()?;
    Some(Oracle {
        value,
        estimate,
        relative_error: if value > 0.0 { (estimate - value).abs() / value } else { estimate },
    })
}

pub fn run(task: &Task, scenario: &Scenario, opts: &Options) -> Outcome {
    let space = PoissonSpace::new(scenario.sites.clone())?;
    fs::create_dir_all(&opts.out)?;
    write_lattice(&space, &opts.out)?;
    match task {
        Task::Distance => distance(&space, scenario, opts, 0.0, "distance"),
        Task::Entropic(eps) if eps.len() == 1 => distance(&space, scenario, opts, eps[0], "entropic"),
        Task::Entropic(eps) => entropic_curve(&space, scenario, opts, eps),
        Task::Geodesic => geodesic_task(&space, scenario, opts),
        Task::Flow { horizon, intervals } => flow(&space, scenario, opts, *horizon, *intervals),
        Task::Verify(checks) => {
            let list: Vec<(Check, CheckParams)> = checks.iter().map(|c| (*c, scenario.verify.clone())).collect();
            checks_task(&space, scenario, opts, &list)
        }
        Task::Suite => {
            let list: Vec<(Check, CheckParams)> = if scenario.suite.is_empty() {
                default_suite()
            } else {
                scenario.suite.clone()
            };
            let list: Vec<_> = list.into_iter().map(|(c, p)| (c, p.over(&scenario.verify))).collect();
            checks_task(&space, scenario, opts, &list)
        }
    }
}

/// Every check on two seeded instances (one batch for BE).
pub fn default_suite() -> Vec<(Check, CheckParams)> {
    Check::ALL
        .iter()
        .map(|&c| {
            (
                c,
                CheckParams {
                    samples: Some(if c == Check::Be { 20 } else { 2 }),
                    ..CheckParams::default()
                },
            )
        })
        .collect()
}

fn distance(space: &PoissonSpace, scenario: &Scenario, opts: &Options, eps: f64, task: &str) -> Outcome {
    let mu0 = measure(scenario, space, 0, task)?;
    let mu1 = measure(scenario, space, 1, task)?;
    let (sol, mut report) = match &scenario.ladder {
        Some(ladder) => refine_entropic(space, &mu0, &mu1, eps, ladder, &scenario.solver)?,
        None => {
            let s = solve_entropic(space, &mu0, &mu1, eps, &scenario.solver)?;
            let r = s.report.clone();
            (s, r)
        }
    };
    scrub(&mut report, opts);
    let estimate = match report.refinement.as_ref().and_then(|t| t.extrapolate) {
        Some(v) => v.max(0.0).sqrt(),
        None => sol.value.sqrt(),
    };
    let oracle = if eps == 0.0 { oracle(space, &mu0, &mu1, estimate) } else { None };
    if let Some(t) = &report.refinement {
        write_json(
            &opts.out.join("refinement.json"),
            &RefinementArtifact {
                version: io::VERSION,
                lattice: space.hash(),
                eps,
                table: t,
            },
        )?;
    }
    let artifact = DistanceArtifact {
        version: io::VERSION,
        lattice: space.hash(),
        task,
        inputs: vec![mu0.hash(), mu1.hash()],
        eps,
        value: sol.value,
        distance: sol.value.sqrt(),
        report: report.clone(),
        oracle,
    };
    write_json(&opts.out.join("report.json"), &artifact)?;
    if report.succeeded() {
        write_path(space, &opts.out, &sol.path)?;
    }
    let label = if eps == 0.0 { "W²".to_string() } else { format!("J_{eps}") };
    println!("{label} = {:.12e}  (status {:?}, K = {})", sol.value, report.status, report.intervals);
    if eps == 0.0 {
        println!("W  = {:.12e}", sol.value.sqrt());
    }
    if let Some(t) = &report.refinement {
        if let Some(x) = t.extrapolate {
            println!("extrapolated {label} = {x:.12e} ± {:.3e}", t.error_estimate);
        }
    }
    if let Some(o) = &artifact.oracle {
        println!(
            "two-point oracle W = {:.12e}, estimate {:.12e}, relative error {:.3e}",
            o.value, o.estimate, o.relative_error
        );
    }
    if !report.succeeded() {
        return Err(numeric(format!("solver ended with status {:?}", report.status)));
    }
    Ok(true)
}

fn numeric(msg: String) -> CliError {
    CliError::Numeric(poisson_transport::Error::Solver(msg))
}

fn entropic_curve(space: &PoissonSpace, scenario: &Scenario, opts: &Options, eps: &[f64]) -> Outcome {
    let mu0 = measure(scenario, space, 0, "entropic")?;
    let mu1 = measure(scenario, space, 1, "entropic")?;
    let mut curve = Vec::new();
    let mut failed = None;
    for &e in eps {
        let s = solve_entropic(space, &mu0, &mu1, e, &scenario.solver)?;
        println!("J_{e} = {:.12e}  (status {:?})", s.value, s.report.status);
        if !s.report.succeeded() && failed.is_none() {
            failed = Some(format!("entropic solve at ε = {e} ended with status {:?}", s.report.status));
        }
        curve.push(CurvePoint {
            eps: e,
            value: s.value,
            status: format!("{:?}", s.report.status),
        });
    }
    write_json(
        &opts.out.join("entropic.json"),
        &EntropicArtifact {
            version: io::VERSION,
            lattice: space.hash(),
            inputs: vec![mu0.hash(), mu1.hash()],
            curve,
        },
    )?;
    match failed {
        Some(m) => Err(numeric(m)),
        None => Ok(true),
    }
}

fn geodesic_task(space: &PoissonSpace, scenario: &Scenario, opts: &Options) -> Outcome {
    let mu0 = measure(scenario, space, 0, "geodesic")?;
    let mu1 = measure(scenario, space, 1, "geodesic")?;
    let g = geodesic(space, &mu0, &mu1, &scenario.solver)?;
    let mut report = g.report.clone();
    scrub(&mut report, opts);
    let speed = path_speed(space, &g.path);
    let artifact = GeodesicArtifact {
        version: io::VERSION,
        lattice: space.hash(),
        inputs: vec![mu0.hash(), mu1.hash()],
        value: g.value,
        distance: g.value.sqrt(),
        length: path_length(space, &g.path),
        speed,
        pseudo_inverse: g.pseudo_inverse,
        report,
    };
    write_json(&opts.out.join("geodesic.json"), &artifact)?;
    write_path(space, &opts.out, &g.path)?;
    let mut buf = Vec::new();
    io::write_header(&mut buf, space, &[("K", g.path.intervals().to_string())], "k,state,phi")?;
    for (k, phi) in g.potentials.iter().enumerate() {
        for (s, v) in phi.iter().enumerate() {
            writeln!(buf, "{k},{s},{v:?}")?;
        }
    }
    fs::write(opts.out.join("potentials.csv"), buf)?;
    println!(
        "W = {:.12e}, length = {:.12e}, status {:?}",
        artifact.distance, artifact.length, artifact.report.status
    );
    if !artifact.report.succeeded() {
        return Err(numeric(format!("solver ended with status {:?}", artifact.report.status)));
    }
    Ok(true)
}

fn flow(space: &PoissonSpace, scenario: &Scenario, opts: &Options, horizon: f64, intervals: usize) -> Outcome {
    let mu0 = measure(scenario, space, 0, "flow")?;
    let path = ou_path(space, &mu0, horizon, intervals)?;
    let ent: Vec<f64> = path.densities().iter().map(|d| entropy(space, d)).collect();
    let fis: Vec<f64> = path.densities().iter().map(|d| fisher(space, d)).collect();
    let (entropy_change, production, production_residual) = match entropy_production_check(space, &path) {
        EntropyProductionReport::Evaluated {
            entropy_change,
            production,
            residual,
        } => (Some(entropy_change), Some(production), Some(residual)),
        EntropyProductionReport::Skipped { .. } => (None, None, None),
    };
    let artifact = FlowArtifact {
        version: io::VERSION,
        lattice: space.hash(),
        inputs: vec![mu0.hash()],
        horizon,
        intervals,
        times: path.times().to_vec(),
        entropy: ent,
        fisher: fis,
        speed: path_speed(space, &path),
        entropy_change,
        production,
        production_residual,
    };
    write_json(&opts.out.join("flow.json"), &artifact)?;
    write_path(space, &opts.out, &path)?;
    println!(
        "H: {:.12e} -> {:.12e} over [0, {horizon}] with K = {intervals}",
        artifact.entropy[0],
        artifact.entropy[intervals]
    );
    Ok(true)
}

fn checks_task(space: &PoissonSpace, scenario: &Scenario, opts: &Options, list: &[(Check, CheckParams)]) -> Outcome {
    let jobs = build_jobs(space, scenario, list, opts.seed)?;
    let results = run_jobs(space, &jobs, opts.threads)?;
    let seed_note = match opts.seed {
        Some(s) => s.to_string(),
        None => "scenario".to_string(),
    };
    let tally = write_reports(space, &opts.out, &jobs, &results, &seed_note)?;
    Ok(tally.all_pass())
}
