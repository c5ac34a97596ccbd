use std::path::{Path, PathBuf};

use poisson_transport::{io, random_density, Density, PoissonSpace, SiteSpace, SolverConfig};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub intensity: Vec<f64>,
    pub caps: Vec<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureTable {
    pub mu0: Option<String>,
    pub mu1: Option<String>,
    pub mu2: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct SolverSection {
    pub ladder: Option<Vec<usize>>,
    #[serde(flatten)]
    pub config: SolverConfig,
}

/// Parameters of a check; unset fields fall back to the `[verify]` table and
/// then to [`CheckParams::defaults`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub a: Option<f64>,
    pub margin: Option<usize>,
    pub t_grid: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub ladder: Option<Vec<usize>>,
    pub eps: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub horizon: Option<f64>,
    pub nodes: Option<usize>,
    pub rtol: Option<f64>,
    pub intervals: Option<usize>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident, $($f:ident),*) => {
        CheckParams { $($f: $a.$f.clone().or_else(|| $b.$f.clone())),* }
    };
}

impl CheckParams {
    /// `self` overriding `base`.
    pub fn over(&self, base: &CheckParams) -> CheckParams {
        merge_fields!(
            self, base, samples, seed, a, margin, t_grid, h, ladder, eps, eps_grid, horizon, nodes, rtol, intervals
        )
    }

    pub fn defaults(check: Check) -> CheckParams {
        let grid = match check {
            Check::Evi => vec![0.1, 0.2, 0.4],
            Check::DeBruijn => vec![0.5, 1.0, 2.0],
            Check::ExpDecay => vec![0.1, 0.5, 1.0, 2.0, 5.0],
            Check::SpeedBound => vec![0.1, 0.5, 1.0],
            _ => vec![0.1, 0.5, 1.0],
        };
        let h = match check {
            Check::DeBruijn => 1e-3,
            _ => 0.02,
        };
        let rtol = match check {
            Check::DeBruijn => 1e-3,
            Check::DeBruijnIntegrated => 1e-4,
            _ => 1e-6,
        };
        CheckParams {
            samples: Some(0),
            seed: Some(0),
            a: Some(2.0),
            margin: Some(2),
            t_grid: Some(grid),
            h: Some(h),
            ladder: Some(vec![16, 32, 64, 128]),
            eps: Some(0.1),
            eps_grid: Some(vec![1e-4, 1e-3, 1e-2, 1e-1]),
            horizon: Some(if check == Check::DeBruijnIntegrated { 1.0 } else { 40.0 }),
            nodes: Some(200),
            rtol: Some(rtol),
            intervals: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub check: String,
    #[serde(flatten)]
    pub params: CheckParams,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    task: Option<String>,
    lattice: LatticeSpec,
    #[serde(default)]
    measures: MeasureTable,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    verify: CheckParams,
    #[serde(default)]
    suite: Vec<SuiteEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Check {
    Mlsi,
    DeBruijn,
    DeBruijnIntegrated,
    ExpDecay,
    Talagrand,
    TalagrandFlow,
    Contraction,
    Evi,
    GeodesicConvexity,
    Hwi,
    SpeedBound,
    Be,
    GammaConvergence,
    QuasiTriangle,
    DescendingSlope,
}

impl Check {
    pub const ALL: [Check; 15] = [
        Check::Mlsi,
        Check::DeBruijn,
        Check::DeBruijnIntegrated,
        Check::ExpDecay,
        Check::Talagrand,
        Check::TalagrandFlow,
        Check::Contraction,
        Check::Evi,
        Check::GeodesicConvexity,
        Check::Hwi,
        Check::SpeedBound,
        Check::Be,
        Check::GammaConvergence,
        Check::QuasiTriangle,
        Check::DescendingSlope,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Mlsi => "mlsi",
            Check::DeBruijn => "de_bruijn",
            Check::DeBruijnIntegrated => "de_bruijn_integrated",
            Check::ExpDecay => "exp_decay",
            Check::Talagrand => "talagrand",
            Check::TalagrandFlow => "talagrand_flow",
            Check::Contraction => "contraction",
            Check::Evi => "evi",
            Check::GeodesicConvexity => "geodesic_convexity",
            Check::Hwi => "hwi",
            Check::SpeedBound => "speed_bound",
            Check::Be => "be",
            Check::GammaConvergence => "gamma_convergence",
            Check::QuasiTriangle => "quasi_triangle",
            Check::DescendingSlope => "descending_slope",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Task {
    Distance,
    Entropic(Vec<f64>),
    Geodesic,
    Flow { horizon: f64, intervals: usize },
    Verify(Vec<Check>),
    Suite,
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::Distance => "distance",
            Task::Entropic(_) => "entropic",
            Task::Geodesic => "geodesic",
            Task::Flow { .. } => "flow",
            Task::Verify(_) => "verify",
            Task::Suite => "suite",
        }
    }

    /// `distance | entropic:<eps>[,<eps>..] | geodesic | flow:<T>,<K> |
    /// verify:<check>[,<check>..] | suite`.
    pub fn parse(s: &str) -> Result<Task, String> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let list = |a: Option<&str>| -> Vec<String> {
            a.map(|a| a.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect())
                .unwrap_or_default()
        };
        match head {
            "distance" | "geodesic" | "suite" if arg.is_some() => Err(format!("task {head} takes no argument")),
            "distance" => Ok(Task::Distance),
            "geodesic" => Ok(Task::Geodesic),
            "suite" => Ok(Task::Suite),
            "entropic" => {
                let eps = list(arg)
                    .iter()
                    .map(|p| match p.parse::<f64>() {
                        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
                        _ => Err(format!("invalid entropic parameter {p:?}")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if eps.is_empty() {
                    return Err("entropic task needs at least one ε, e.g. entropic:0.1".into());
                }
                Ok(Task::Entropic(eps))
            }
            "flow" => {
                let parts = list(arg);
                if parts.len() != 2 {
                    return Err("flow task needs flow:<T>,<K>".into());
                }
                let horizon: f64 = parts[0].parse().map_err(|_| format!("invalid horizon {:?}", parts[0]))?;
                let intervals: usize = parts[1].parse().map_err(|_| format!("invalid interval count {:?}", parts[1]))?;
                if !(horizon > 0.0) || intervals == 0 {
                    return Err("flow horizon and interval count must be positive".into());
                }
                Ok(Task::Flow { horizon, intervals })
            }
            "verify" => {
                let checks = list(arg)
                    .iter()
                    .map(|c| Check::parse(c).ok_or_else(|| format!("unknown check {c:?}")))
                    .collect::<Result<Vec<_>, _>>()?;
                if checks.is_empty() {
                    return Err("verify task needs a check list, e.g. verify:mlsi,hwi".into());
                }
                Ok(Task::Verify(checks))
            }
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Poisson,
    Dirac(Vec<usize>),
    ExpPerturbed { seed: u64, a: f64 },
    File(PathBuf),
}

impl MeasureSpec {
    /// `poisson | dirac:<n₀>,<n₁>,.. | exp-perturbed:<seed>,<a> | file:<path>`.
    pub fn parse(s: &str) -> Result<MeasureSpec, String> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (head, arg) {
            ("poisson", None) => Ok(MeasureSpec::Poisson),
            ("dirac", Some(a)) => a
                .split(',')
                .map(|p| p.trim().parse::<usize>().map_err(|_| format!("invalid occupancy {p:?}")))
                .collect::<Result<Vec<_>, _>>()
                .map(MeasureSpec::Dirac),
            ("exp-perturbed", Some(a)) => {
                let parts: Vec<&str> = a.split(',').map(str::trim).collect();
                if parts.len() != 2 {
                    return Err("exp-perturbed needs exp-perturbed:<seed>,<a> (the seed is mandatory)".into());
                }
                let seed = parts[0].parse().map_err(|_| format!("invalid seed {:?}", parts[0]))?;
                let a: f64 = parts[1].parse().map_err(|_| format!("invalid amplitude {:?}", parts[1]))?;
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(format!("amplitude must be finite and ≥ 0, got {a}"));
                }
                Ok(MeasureSpec::ExpPerturbed { seed, a })
            }
            ("file", Some(p)) if !p.is_empty() => Ok(MeasureSpec::File(PathBuf::from(p))),
            _ => Err(format!("unknown measure {s:?}")),
        }
    }

    pub fn build(&self, space: &PoissonSpace, base: &Path, margin: usize) -> Result<Density, CliError> {
        Ok(match self {
            MeasureSpec::Poisson => Density::reference(space),
            MeasureSpec::Dirac(c) => Density::dirac(space, c)?,
            MeasureSpec::ExpPerturbed { seed, a } => random_density(space, *seed, *a, margin),
            MeasureSpec::File(p) => {
                let path = base.join(p);
                let f = std::fs::File::open(&path)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
                io::read_density_csv(std::io::BufReader::new(f), space)?
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub task: Option<Task>,
    pub sites: SiteSpace,
    pub measures: [Option<MeasureSpec>; 3],
    pub solver: SolverConfig,
    pub ladder: Option<Vec<usize>>,
    pub verify: CheckParams,
    pub suite: Vec<(Check, CheckParams)>,
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Scenario::parse(&text, base).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base_dir: PathBuf) -> Result<Scenario, CliError> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        let task = raw.task.as_deref().map(Task::parse).transpose().map_err(CliError::Parse)?;
        let sites = SiteSpace::new(raw.lattice.intensity, raw.lattice.caps).map_err(|e| CliError::Parse(e.to_string()))?;
        let parse_m = |m: &Option<String>| m.as_deref().map(MeasureSpec::parse).transpose().map_err(CliError::Parse);
        let measures = [
            parse_m(&raw.measures.mu0)?,
            parse_m(&raw.measures.mu1)?,
            parse_m(&raw.measures.mu2)?,
        ];
        raw.solver.config.validate().map_err(|e| CliError::Parse(e.to_string()))?;
        if let Some(l) = &raw.solver.ladder {
            validate_ladder(l)?;
        }
        let mut suite = Vec::new();
        for entry in raw.suite {
            let check =
                Check::parse(&entry.check).ok_or_else(|| CliError::Parse(format!("unknown check {:?}", entry.check)))?;
            suite.push((check, entry.params));
        }
        Ok(Scenario {
            task,
            sites,
            measures,
            solver: raw.solver.config,
            ladder: raw.solver.ladder,
            verify: raw.verify,
            suite,
            base_dir,
        })
    }
}

pub fn validate_ladder(l: &[usize]) -> Result<(), CliError> {
    if l.is_empty() || l.contains(&0) || l.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Parse(format!("ladder must be increasing and positive, got {l:?}")));
    }
    Ok(())
}
