use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use poisson_transport::{
    check_be, check_contraction, check_de_bruijn, check_de_bruijn_integrated, check_descending_slope, check_evi,
    check_exp_decay, check_gamma_convergence, check_geodesic_convexity, check_hwi, check_mlsi, check_quasi_triangle,
    check_speed_bound, check_talagrand, check_talagrand_flow, io, random_density, random_interior_function, Density,
    PoissonSpace, SolverConfig, VerificationReport, Verdict,
};
use serde::Serialize;

use crate::error::CliError;
use crate::scenario::{validate_ladder, Check, CheckParams, Scenario};

/// Fully resolved parameters of one check.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub samples: usize,
    pub seed: u64,
    pub a: f64,
    pub margin: usize,
    pub t_grid: Vec<f64>,
    pub h: f64,
    pub ladder: Vec<usize>,
    pub eps: f64,
    pub eps_grid: Vec<f64>,
    pub horizon: f64,
    pub nodes: usize,
    pub rtol: f64,
    pub cfg: SolverConfig,
}

pub fn resolve(check: Check, params: &CheckParams, cfg: &SolverConfig, seed: Option<u64>) -> Result<Resolved, CliError> {
    let mut d = CheckParams::defaults(check);
    if check == Check::Be {
        d.margin = Some(4);
    }
    let p = params.over(&d);
    let ladder = p.ladder.unwrap();
    validate_ladder(&ladder)?;
    let mut cfg = *cfg;
    if let Some(k) = p.intervals {
        cfg.intervals = k;
    }
    cfg.validate().map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(Resolved {
        samples: p.samples.unwrap(),
        seed: seed.unwrap_or(p.seed.unwrap()),
        a: p.a.unwrap(),
        margin: p.margin.unwrap(),
        t_grid: p.t_grid.unwrap(),
        h: p.h.unwrap(),
        ladder,
        eps: p.eps.unwrap(),
        eps_grid: p.eps_grid.unwrap(),
        horizon: p.horizon.unwrap(),
        nodes: p.nodes.unwrap(),
        rtol: p.rtol.unwrap(),
        cfg,
    })
}

/// One (check, instance) unit of work.
#[derive(Debug, Clone)]
pub struct Job {
    /// Position of the check in the requested list.
    pub entry: usize,
    pub check: Check,
    pub instance: usize,
    pub measures: Vec<Density>,
    pub params: Resolved,
}

/// Seed of measure `j` in instance `i`.
pub fn instance_seed(base: u64, i: usize, j: usize) -> u64 {
    base.wrapping_add(1000 * i as u64 + j as u64)
}

pub fn build_jobs(
    space: &PoissonSpace,
    scenario: &Scenario,
    checks: &[(Check, CheckParams)],
    seed: Option<u64>,
) -> Result<Vec<Job>, CliError> {
    let mut jobs = Vec::new();
    for (entry, (check, params)) in checks.iter().enumerate() {
        let r = resolve(*check, params, &scenario.solver, seed)?;
        if *check == Check::Be {
            // One batch of `samples` observables, no measures.
            jobs.push(Job {
                entry,
                check: *check,
                instance: 0,
                measures: Vec::new(),
                params: r,
            });
        } else if r.samples == 0 {
            let mut measures = Vec::new();
            for (j, spec) in scenario.measures.iter().enumerate() {
                let m = match spec {
                    Some(s) => s.build(space, &scenario.base_dir, r.margin)?,
                    None if j == 0 => {
                        return Err(CliError::Parse(format!(
                            "check {} needs measures.mu0 or a positive sample count",
                            check.name()
                        )))
                    }
                    None => Density::reference(space),
                };
                measures.push(m);
            }
            jobs.push(Job {
                entry,
                check: *check,
                instance: 0,
                measures,
                params: r,
            });
        } else {
            for i in 0..r.samples {
                let measures = (0..3)
                    .map(|j| random_density(space, instance_seed(r.seed, i, j), r.a, r.margin))
                    .collect();
                jobs.push(Job {
                    entry,
                    check: *check,
                    instance: i,
                    measures,
                    params: r.clone(),
                });
            }
        }
    }
    Ok(jobs)
}

pub fn run_job(space: &PoissonSpace, job: &Job) -> Result<Vec<VerificationReport>, CliError> {
    let p = &job.params;
    let m = &job.measures;
    let cfg = &p.cfg;
    Ok(match job.check {
        Check::Mlsi => vec![check_mlsi(space, &m[0])],
        Check::DeBruijn => vec![check_de_bruijn(space, &m[0], &p.t_grid, p.h, p.rtol)?],
        Check::DeBruijnIntegrated => vec![check_de_bruijn_integrated(space, &m[0], p.horizon, p.nodes, p.rtol)?],
        Check::ExpDecay => vec![check_exp_decay(space, &m[0], &p.t_grid)?],
        Check::Talagrand => vec![check_talagrand(space, &m[0], &p.ladder, cfg)],
        Check::TalagrandFlow => vec![check_talagrand_flow(space, &m[0], p.horizon, p.rtol)?],
        Check::Contraction => {
            let (a, b) = check_contraction(space, &m[0], &m[1], &p.t_grid, cfg);
            vec![a, b]
        }
        Check::Evi => vec![check_evi(space, &m[0], &m[1], &p.t_grid, p.h, cfg)],
        Check::GeodesicConvexity => vec![check_geodesic_convexity(space, &m[0], &m[1], &p.ladder, cfg)],
        Check::Hwi => vec![check_hwi(space, &m[0], &p.ladder, cfg)],
        Check::SpeedBound => vec![check_speed_bound(space, &m[0], &m[1], &p.t_grid, p.h, cfg)],
        Check::Be => {
            let fs: Vec<Vec<f64>> = (0..p.samples.max(1))
                .map(|i| random_interior_function(space, instance_seed(p.seed, i, 0), p.margin))
                .collect();
            vec![check_be(space, &fs, &p.t_grid, p.margin)?]
        }
        Check::GammaConvergence => vec![check_gamma_convergence(space, &m[0], &m[1], &p.eps_grid, &p.ladder, cfg)],
        Check::QuasiTriangle => vec![check_quasi_triangle(space, [&m[0], &m[1], &m[2]], p.eps, cfg)],
        Check::DescendingSlope => vec![check_descending_slope(space, &m[0], &m[1..], cfg)],
    })
}

/// Runs the jobs on `threads` workers; results come back in job order, so the
/// worker count never changes the output.
pub fn run_jobs(space: &PoissonSpace, jobs: &[Job], threads: usize) -> Result<Vec<Vec<VerificationReport>>, CliError> {
    let slots: Vec<Mutex<Option<Result<Vec<VerificationReport>, CliError>>>> =
        jobs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.max(1).min(jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let r = run_job(space, &jobs[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every job ran"))
        .collect()
}

#[derive(Serialize)]
struct Envelope<'a> {
    version: &'a str,
    check: &'a str,
    instance: usize,
    report: &'a VerificationReport,
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
}

impl Tally {
    pub fn all_pass(&self) -> bool {
        self.fail == 0 && self.skipped == 0
    }
}

/// Writes `reports/<name>_<instance>.json` and `aggregate.csv`; prints one line
/// per report.
pub fn write_reports(
    space: &PoissonSpace,
    out: &Path,
    jobs: &[Job],
    results: &[Vec<VerificationReport>],
    seed_note: &str,
) -> Result<Tally, CliError> {
    let dir = out.join("reports");
    fs::create_dir_all(&dir)?;
    let mut agg = Vec::new();
    io::write_header(
        &mut agg,
        space,
        &[("seed", seed_note.to_string())],
        "entry,check,instance,lhs,rhs,slack,tolerance,verdict,vacuous",
    )?;
    let mut tally = Tally::default();
    for (job, reports) in jobs.iter().zip(results) {
        for r in reports {
            let env = Envelope {
                version: io::VERSION,
                check: job.check.name(),
                instance: job.instance,
                report: r,
            };
            let name = format!("{:02}_{}_{:03}.json", job.entry, r.name, job.instance);
            fs::write(dir.join(name), serde_json::to_string_pretty(&env)? + "\n")?;
            let verdict = match r.verdict {
                Verdict::Pass => {
                    tally.pass += 1;
                    "PASS"
                }
                Verdict::Fail => {
                    tally.fail += 1;
                    "FAIL"
                }
                Verdict::Skipped => {
                    tally.skipped += 1;
                    "SKIPPED"
                }
            };
            writeln!(
                agg,
                "{},{},{},{:?},{:?},{:?},{:?},{},{}",
                job.entry,
                r.name,
                job.instance,
                r.lhs,
                r.rhs,
                r.slack,
                r.tolerance.total(),
                verdict,
                r.vacuous
            )?;
            println!(
                "{:<22} #{:<3} {:<7} lhs={:.6e} rhs={:.6e} slack={:.3e} tol={:.3e}{}",
                r.name,
                job.instance,
                verdict,
                r.lhs,
                r.rhs,
                r.slack,
                r.tolerance.total(),
                if r.vacuous { " (vacuous)" } else { "" }
            );
        }
    }
    fs::write(out.join("aggregate.csv"), agg)?;
    println!("{} passed, {} failed, {} skipped", tally.pass, tally.fail, tally.skipped);
    Ok(tally)
}
