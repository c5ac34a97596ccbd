//! Numerical checks of the functional inequalities relating `H`, `I` and `𝒲`.
//!
//! Every check returns a [`VerificationReport`] whose verdict is a pure
//! function of the recorded sides and tolerance: `PASS` iff
//! `slack = rhs - lhs ≥ -tolerance`. Where the distance enters, the solver's
//! value on the finest grid is used together with an error bar from a
//! refinement ladder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{entropy, fisher};
use crate::config_space::{Density, PoissonSpace};
use crate::continuity::push_semigroup;
use crate::error::{Error, Result};
use crate::semigroup::{be_commutation_residual, evolve};
use crate::solver::{
    action, refine_entropic, solve_distance, solve_entropic, RefinementTable, Solution, SolverConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

/// Tolerance split by origin; the verdict uses the sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub discretization: f64,
    pub truncation: f64,
    pub solver: f64,
    pub finite_difference: f64,
    pub rounding: f64,
}

impl Tolerance {
    pub fn rounding(v: f64) -> Self {
        Self {
            rounding: v,
            ..Self::default()
        }
    }

    pub fn total(&self) -> f64 {
        self.discretization + self.truncation + self.solver + self.finite_difference + self.rounding
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckPoint {
    /// Grid coordinate (time, knot time, ε, …) or sample index.
    pub at: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: Tolerance,
    pub pass: bool,
}

impl CheckPoint {
    pub fn new(at: f64, lhs: f64, rhs: f64, tolerance: Tolerance) -> Self {
        let slack = if lhs == rhs { 0.0 } else { rhs - lhs };
        Self {
            at,
            lhs,
            rhs,
            slack,
            tolerance,
            pass: slack >= -tolerance.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub lattice: String,
    /// Fingerprints of the input densities.
    pub inputs: Vec<String>,
    pub grid: Vec<f64>,
    /// Sides at the worst point.
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: Tolerance,
    pub verdict: Verdict,
    /// Passed only because the larger side is `+∞`.
    pub vacuous: bool,
    pub note: Option<String>,
    pub points: Vec<CheckPoint>,
}

impl VerificationReport {
    fn from_points(
        name: &str,
        space: &PoissonSpace,
        inputs: &[&Density],
        grid: Vec<f64>,
        points: Vec<CheckPoint>,
    ) -> Self {
        let worst = points
            .iter()
            .min_by(|a, b| {
                let ka = a.slack + a.tolerance.total();
                let kb = b.slack + b.tolerance.total();
                ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
            })
            .cloned();
        let (lhs, rhs, slack, tolerance) = match &worst {
            Some(p) => (p.lhs, p.rhs, p.slack, p.tolerance),
            None => (0.0, 0.0, 0.0, Tolerance::default()),
        };
        let verdict = if points.iter().all(|p| p.pass) { Verdict::Pass } else { Verdict::Fail };
        let vacuous = verdict == Verdict::Pass && points.iter().any(|p| p.rhs == f64::INFINITY);
        Self {
            name: name.to_string(),
            lattice: space.hash().to_string(),
            inputs: inputs.iter().map(|d| d.hash()).collect(),
            grid,
            lhs,
            rhs,
            slack,
            tolerance,
            verdict,
            vacuous,
            note: vacuous.then(|| "larger side is +∞".to_string()),
            points,
        }
    }

    fn skipped(name: &str, space: &PoissonSpace, inputs: &[&Density], reason: String) -> Self {
        Self {
            name: name.to_string(),
            lattice: space.hash().to_string(),
            inputs: inputs.iter().map(|d| d.hash()).collect(),
            grid: Vec::new(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            slack: f64::NAN,
            tolerance: Tolerance::default(),
            verdict: Verdict::Skipped,
            vacuous: false,
            note: Some(reason),
            points: Vec::new(),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        self.note = Some(match self.note.take() {
            Some(n) => format!("{n}; {note}"),
            None => note,
        });
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// `ρ ∝ exp(g)` with `g` i.i.d. uniform on `[-a, a]` over the states at least
/// `margin` levels below every cap, and `g = 0` elsewhere.
pub fn random_density(space: &PoissonSpace, seed: u64, a: f64, margin: usize) -> Density {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lat = space.lattice();
    let caps = space.sites().caps();
    let raw: Vec<f64> = (0..space.n_states())
        .map(|s| {
            let g: f64 = rng.gen_range(-a..=a);
            let inside = lat.counts(s).iter().zip(caps).all(|(&c, &n)| c + margin <= n);
            if inside {
                g.exp()
            } else {
                1.0
            }
        })
        .collect();
    Density::normalized(space, raw).expect("exp(g) is a positive function")
}

/// Observable with i.i.d. standard-uniform values.
pub fn random_function(space: &PoissonSpace, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..space.n_states()).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Observable supported on `η_x ≤ N_x - margin`.
pub fn random_interior_function(space: &PoissonSpace, seed: u64, margin: usize) -> Vec<f64> {
    let lat = space.lattice();
    let caps = space.sites().caps();
    random_function(space, seed)
        .into_iter()
        .enumerate()
        .map(|(s, v)| {
            let inside = lat.counts(s).iter().zip(caps).all(|(&c, &n)| c + margin <= n);
            if inside {
                v
            } else {
                0.0
            }
        })
        .collect()
}

/// `W²` estimate on a refinement ladder: the finest value, its error bar and
/// the solver slack.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceEstimate {
    pub value: f64,
    pub delta: f64,
    pub slack: f64,
    pub table: RefinementTable,
    pub finest: Solution,
}

/// Solves on `ladder` (entropic when `eps > 0`) and reports the finest-grid
/// value with the Richardson error estimate as `δ_K`.
pub fn estimate_distance(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    eps: f64,
    ladder: &[usize],
    cfg: &SolverConfig,
) -> Result<DistanceEstimate> {
    let (finest, report) = refine_entropic(space, mu0, mu1, eps, ladder, cfg)?;
    if !report.succeeded() {
        return Err(Error::Solver(format!("solve ended with status {:?}", report.status)));
    }
    let table = report.refinement.clone().unwrap();
    Ok(DistanceEstimate {
        value: finest.value,
        delta: table.error_estimate,
        slack: report.slack(),
        table,
        finest,
    })
}

/// `H(μ) ≤ I(μ)`.
pub fn check_mlsi(space: &PoissonSpace, mu: &Density) -> VerificationReport {
    let h = entropy(space, mu);
    let i = fisher(space, mu);
    let tol = Tolerance::rounding(1e-10);
    VerificationReport::from_points("mlsi", space, &[mu], Vec::new(), vec![CheckPoint::new(0.0, h, i, tol)])
}

/// Pointwise de Bruijn identity: the central difference of `t ↦ H(P*_t μ)`
/// against `-I(P*_t μ)` at every grid time, relative error at most `rtol`.
/// The note records the constant `C = max relerr / h²`.
pub fn check_de_bruijn(space: &PoissonSpace, mu: &Density, t_grid: &[f64], h: f64, rtol: f64) -> Result<VerificationReport> {
    let mut points = Vec::new();
    let mut c_max: f64 = 0.0;
    for &t in t_grid {
        if t - h < 0.0 {
            return Err(Error::Domain(format!("grid time {t} is closer than h = {h} to 0")));
        }
        let hp = entropy(space, &evolve(space, mu, t + h)?);
        let hm = entropy(space, &evolve(space, mu, t - h)?);
        let deriv = (hp - hm) / (2.0 * h);
        let i = fisher(space, &evolve(space, mu, t)?);
        let err = (deriv + i).abs();
        let rel = if i > 0.0 { err / i } else { err };
        c_max = c_max.max(rel / (h * h));
        points.push(CheckPoint::new(t, rel, rtol, Tolerance::default()));
    }
    Ok(
        VerificationReport::from_points("de_bruijn", space, &[mu], t_grid.to_vec(), points)
            .with_note(format!("relative error ≤ C h² with C = {c_max:.6e}")),
    )
}

/// Composite Simpson rule of `∫_a^b f` with `intervals` (made even) panels.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Integrated de Bruijn identity `H(μ) - H(P*_T μ) = ∫_0^T I(P*_s μ) ds`, the
/// integral by Simpson's rule on `nodes` panels after `s = T u³` (the
/// integrand may blow up logarithmically at `s = 0`).
pub fn check_de_bruijn_integrated(
    space: &PoissonSpace,
    mu: &Density,
    horizon: f64,
    nodes: usize,
    rtol: f64,
) -> Result<VerificationReport> {
    let lhs = entropy(space, mu) - entropy(space, &evolve(space, mu, horizon)?);
    let integrand = |u: f64| -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let s = horizon * u * u * u;
        let i = fisher(space, &evolve(space, mu, s).expect("s ≥ 0"));
        3.0 * horizon * u * u * i
    };
    let quad = simpson(&integrand, 0.0, 1.0, nodes);
    let rel = if lhs != 0.0 { (lhs - quad).abs() / lhs.abs() } else { quad.abs() };
    Ok(VerificationReport::from_points(
        "de_bruijn_integrated",
        space,
        &[mu],
        vec![horizon],
        vec![CheckPoint::new(horizon, rel, rtol, Tolerance::default())],
    )
    .with_note(format!("entropy drop {lhs:.15e}, quadrature {quad:.15e}")))
}

/// `H(P*_t μ) ≤ e^{-t} H(μ)`.
pub fn check_exp_decay(space: &PoissonSpace, mu: &Density, t_grid: &[f64]) -> Result<VerificationReport> {
    let h0 = entropy(space, mu);
    let mut points = Vec::new();
    for &t in t_grid {
        let ht = entropy(space, &evolve(space, mu, t)?);
        points.push(CheckPoint::new(t, ht, (-t).exp() * h0, Tolerance::rounding(1e-12 * (1.0 + h0))));
    }
    Ok(VerificationReport::from_points("exp_decay", space, &[mu], t_grid.to_vec(), points))
}

/// `𝒲²(μ, π) ≤ H(μ)` with `Ŵ²` from the finest grid of `ladder`.
pub fn check_talagrand(space: &PoissonSpace, mu: &Density, ladder: &[usize], cfg: &SolverConfig) -> VerificationReport {
    let pi = Density::reference(space);
    let h = entropy(space, mu);
    let est = match estimate_distance(space, mu, &pi, 0.0, ladder, cfg) {
        Ok(e) => e,
        Err(e) => return VerificationReport::skipped("talagrand", space, &[mu], e.to_string()),
    };
    let tol = Tolerance {
        discretization: est.delta,
        solver: est.slack,
        ..Tolerance::default()
    };
    let ks = ladder.iter().map(|&k| k as f64).collect();
    VerificationReport::from_points("talagrand", space, &[mu], ks, vec![CheckPoint::new(0.0, est.value, h, tol)])
        .with_note(format!("refinement {:?}", est.table.rows))
}

/// The OU-flow route to Talagrand: `(∫_0^∞ I(P*_t μ)^{1/2} dt)² ≤ H(μ)`,
/// which bounds `𝒲²(μ, π)` by the length of the flow. Integrated by
/// double-exponential quadrature on `[0, 1]` and `[1, horizon]`; the tail
/// beyond `horizon` is bounded by `I(P*_T μ)^{1/2}` through `I(P*_t μ) ≤ e^{-2(t-T)} I(P*_T μ)`.
pub fn check_talagrand_flow(space: &PoissonSpace, mu: &Density, horizon: f64, rtol: f64) -> Result<VerificationReport> {
    let h = entropy(space, mu);
    let root_fisher = |t: f64| -> f64 { fisher(space, &evolve(space, mu, t).expect("t ≥ 0")).sqrt() };
    let head = quadrature::double_exponential::integrate(root_fisher, 0.0, 1.0, 1e-12);
    let body = quadrature::double_exponential::integrate(root_fisher, 1.0, horizon, 1e-12);
    let tail = root_fisher(horizon);
    let length = head.integral + body.integral;
    let tol = Tolerance {
        discretization: 2.0 * length * (head.error_estimate + body.error_estimate + tail),
        rounding: rtol,
        ..Tolerance::default()
    };
    Ok(VerificationReport::from_points(
        "talagrand_flow",
        space,
        &[mu],
        vec![horizon],
        vec![CheckPoint::new(horizon, length * length, h, tol)],
    )
    .with_note(format!("flow length {length:.12e}")))
}

/// Contraction under the semigroup.
///
/// Layer (a) pushes the optimal path for `(μ₀, μ₁)` by `P*_t` and compares
/// actions: `A(pushed) ≤ e^{-2t} A(path) + 1e-10`. Layer (b) re-solves between
/// the evolved endpoints on the same grid: `Ŵ(P*_t μ₀, P*_t μ₁) ≤ e^{-t} Ŵ(μ₀, μ₁)`
/// up to both solver slacks.
pub fn check_contraction(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    t_grid: &[f64],
    cfg: &SolverConfig,
) -> (VerificationReport, VerificationReport) {
    let skip = |reason: String| {
        (
            VerificationReport::skipped("contraction_action", space, &[mu0, mu1], reason.clone()),
            VerificationReport::skipped("contraction_distance", space, &[mu0, mu1], reason),
        )
    };
    let base = match solve_distance(space, mu0, mu1, cfg) {
        Ok(s) if s.report.succeeded() => s,
        Ok(s) => return skip(format!("solver status {:?}", s.report.status)),
        Err(e) => return skip(e.to_string()),
    };
    let a0 = action(space, &base.path);
    let w0 = base.value.sqrt();
    let mut action_points = Vec::new();
    let mut distance_points = Vec::new();
    for &t in t_grid {
        let pushed = match push_semigroup(space, &base.path, t) {
            Ok(p) => p,
            Err(e) => return skip(e.to_string()),
        };
        let decay = (-2.0 * t).exp();
        action_points.push(CheckPoint::new(t, action(space, &pushed), decay * a0, Tolerance::rounding(1e-10)));

        let (e0, e1) = match (evolve(space, mu0, t), evolve(space, mu1, t)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return skip(e.to_string()),
        };
        let sol = match solve_distance(space, &e0, &e1, cfg) {
            Ok(s) if s.report.succeeded() => s,
            Ok(s) => return skip(format!("solver status {:?} at t = {t}", s.report.status)),
            Err(e) => return skip(e.to_string()),
        };
        let wt = sol.value.sqrt();
        // δ(W) ≈ δ(W²) / (2W), capped by √δ(W²) near zero.
        let to_w = |v: f64, slack: f64| if v > 0.0 { (slack / (2.0 * v)).min(slack.sqrt()) } else { slack.sqrt() };
        let tol = Tolerance {
            solver: to_w(wt, sol.report.slack()) + (-t).exp() * to_w(w0, base.report.slack()),
            rounding: 1e-12,
            ..Tolerance::default()
        };
        distance_points.push(CheckPoint::new(t, wt, (-t).exp() * w0, tol));
    }
    (
        VerificationReport::from_points("contraction_action", space, &[mu0, mu1], t_grid.to_vec(), action_points),
        VerificationReport::from_points("contraction_distance", space, &[mu0, mu1], t_grid.to_vec(), distance_points),
    )
}

fn solve_value(space: &PoissonSpace, a: &Density, b: &Density, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let s = solve_distance(space, a, b, cfg)?;
    if !s.report.succeeded() {
        return Err(Error::Solver(format!("solver status {:?}", s.report.status)));
    }
    Ok((s.value, s.report.slack()))
}

/// EVI: `H(P*_s μ) + ½ d/ds 𝒲²(P*_s μ, ξ) + ½ 𝒲²(P*_s μ, ξ) ≤ H(ξ)` at each `s`,
/// the derivative by central differences of solver values with step `h`.
/// Tolerance: the finite-difference error, estimated from the step-`2h`
/// difference, plus `2·slack/h`.
pub fn check_evi(
    space: &PoissonSpace,
    mu: &Density,
    xi: &Density,
    s_grid: &[f64],
    h: f64,
    cfg: &SolverConfig,
) -> VerificationReport {
    let run = || -> Result<Vec<CheckPoint>> {
        let hxi = entropy(space, xi);
        let mut points = Vec::new();
        for &s in s_grid {
            if s < 2.0 * h {
                return Err(Error::Domain(format!("grid time {s} is closer than 2h to 0")));
            }
            let mut w = Vec::new();
            let mut slack: f64 = 0.0;
            for off in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let (v, sl) = solve_value(space, &evolve(space, mu, s + off * h)?, xi, cfg)?;
                w.push(v);
                slack = slack.max(sl);
            }
            let d1 = (w[3] - w[1]) / (2.0 * h);
            let d2 = (w[4] - w[0]) / (4.0 * h);
            let hs = entropy(space, &evolve(space, mu, s)?);
            let lhs = hs + 0.5 * d1 + 0.5 * w[2];
            let tol = Tolerance {
                finite_difference: 0.5 * (d2 - d1).abs() / 3.0,
                solver: 2.0 * slack / h + 0.5 * slack,
                rounding: 1e-12,
                ..Tolerance::default()
            };
            points.push(CheckPoint::new(s, lhs, hxi, tol));
        }
        Ok(points)
    };
    match run() {
        Ok(points) => VerificationReport::from_points("evi", space, &[mu, xi], s_grid.to_vec(), points),
        Err(e) => VerificationReport::skipped("evi", space, &[mu, xi], e.to_string()),
    }
}

/// Geodesic 1-convexity along the solver geodesic on the finest grid:
/// `H(μ_t) ≤ (1-t)H(μ₀) + tH(μ₁) - ½t(1-t)Ŵ²` at every knot, tolerance
/// `δ_K + slack`.
pub fn check_geodesic_convexity(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    ladder: &[usize],
    cfg: &SolverConfig,
) -> VerificationReport {
    let est = match estimate_distance(space, mu0, mu1, 0.0, ladder, cfg) {
        Ok(e) => e,
        Err(e) => return VerificationReport::skipped("geodesic_convexity", space, &[mu0, mu1], e.to_string()),
    };
    let h0 = entropy(space, mu0);
    let h1 = entropy(space, mu1);
    let path = &est.finest.path;
    let tol = Tolerance {
        discretization: est.delta,
        solver: est.slack,
        rounding: 1e-12,
        ..Tolerance::default()
    };
    let points = path
        .densities()
        .iter()
        .zip(path.times())
        .map(|(d, &t)| {
            let rhs = (1.0 - t) * h0 + t * h1 - 0.5 * t * (1.0 - t) * est.value;
            CheckPoint::new(t, entropy(space, d), rhs, tol)
        })
        .collect();
    VerificationReport::from_points("geodesic_convexity", space, &[mu0, mu1], path.times().to_vec(), points)
        .with_note(format!("W² = {:.12e} ± {:.3e}", est.value, est.delta))
}

/// HWI: `H(μ) ≤ 𝒲(μ, π) I(μ)^{1/2} - ½𝒲²(μ, π)`.
///
/// The right side increases in `𝒲` on `[0, √I]`, so the check uses the lower
/// end `Ŵ² - δ_K` of the distance error bar (after confirming it lies in that
/// range); any uncertainty in the distance then only makes the check harder.
pub fn check_hwi(space: &PoissonSpace, mu: &Density, ladder: &[usize], cfg: &SolverConfig) -> VerificationReport {
    let h = entropy(space, mu);
    let i = fisher(space, mu);
    if i.is_infinite() {
        return VerificationReport::from_points(
            "hwi",
            space,
            &[mu],
            Vec::new(),
            vec![CheckPoint::new(0.0, h, f64::INFINITY, Tolerance::default())],
        );
    }
    let pi = Density::reference(space);
    let est = match estimate_distance(space, mu, &pi, 0.0, ladder, cfg) {
        Ok(e) => e,
        Err(e) => return VerificationReport::skipped("hwi", space, &[mu], e.to_string()),
    };
    let w_low = (est.value - est.delta - est.slack).max(0.0).sqrt();
    let root_i = i.sqrt();
    if w_low > root_i {
        return VerificationReport::skipped(
            "hwi",
            space,
            &[mu],
            format!("distance {w_low} exceeds √I = {root_i}; monotonicity argument unavailable"),
        );
    }
    let rhs = w_low * root_i - 0.5 * w_low * w_low;
    VerificationReport::from_points(
        "hwi",
        space,
        &[mu],
        Vec::new(),
        vec![CheckPoint::new(0.0, h, rhs, Tolerance::rounding(1e-12))],
    )
    .with_note(format!("W² = {:.12e} ± {:.3e}, lower end used", est.value, est.delta))
}

/// `d⁺/dt 𝒲(P*_t μ, ξ) ≤ I(P*_t μ)^{1/2}` by forward differences with step `h`.
pub fn check_speed_bound(
    space: &PoissonSpace,
    mu: &Density,
    xi: &Density,
    t_grid: &[f64],
    h: f64,
    cfg: &SolverConfig,
) -> VerificationReport {
    let run = || -> Result<Vec<CheckPoint>> {
        let mut points = Vec::new();
        for &t in t_grid {
            let mut w = Vec::new();
            let mut slack: f64 = 0.0;
            for off in [0.0, 1.0, 2.0] {
                let (v, sl) = solve_value(space, &evolve(space, mu, t + off * h)?, xi, cfg)?;
                w.push(v.sqrt());
                slack = slack.max(sl.sqrt());
            }
            let d1 = (w[1] - w[0]) / h;
            let d2 = (w[2] - w[0]) / (2.0 * h);
            let i = fisher(space, &evolve(space, mu, t)?).sqrt();
            let tol = Tolerance {
                finite_difference: (d2 - d1).abs(),
                solver: 2.0 * slack / h,
                rounding: 1e-12,
                ..Tolerance::default()
            };
            points.push(CheckPoint::new(t, d1, i, tol));
        }
        Ok(points)
    };
    match run() {
        Ok(points) => VerificationReport::from_points("speed_bound", space, &[mu, xi], t_grid.to_vec(), points),
        Err(e) => VerificationReport::skipped("speed_bound", space, &[mu, xi], e.to_string()),
    }
}

/// One-sided slope bound `(H(μ) - H(ξ))₊ / Ŵ(μ, ξ) ≤ I(μ)^{1/2}` over the
/// sampled `ξ`.
pub fn check_descending_slope(
    space: &PoissonSpace,
    mu: &Density,
    samples: &[Density],
    cfg: &SolverConfig,
) -> VerificationReport {
    let mut inputs = vec![mu];
    inputs.extend(samples.iter());
    let run = || -> Result<Vec<CheckPoint>> {
        let hmu = entropy(space, mu);
        let root_i = fisher(space, mu).sqrt();
        let mut points = Vec::new();
        for (j, xi) in samples.iter().enumerate() {
            let drop = (hmu - entropy(space, xi)).max(0.0);
            if drop == 0.0 {
                points.push(CheckPoint::new(j as f64, 0.0, root_i, Tolerance::default()));
                continue;
            }
            let (v, slack) = solve_value(space, mu, xi, cfg)?;
            let w = v.sqrt();
            let ratio = drop / w;
            // Ŵ may sit below 𝒲 by the solver slack; carry it through the ratio.
            let w_low = (v - slack).max(0.0).sqrt();
            let tol = Tolerance {
                solver: if w_low > 0.0 { drop / w_low - ratio } else { f64::INFINITY },
                rounding: 1e-12,
                ..Tolerance::default()
            };
            points.push(CheckPoint::new(j as f64, ratio, root_i, tol));
        }
        Ok(points)
    };
    match run() {
        Ok(points) => VerificationReport::from_points("descending_slope", space, &inputs, Vec::new(), points),
        Err(e) => VerificationReport::skipped("descending_slope", space, &inputs, e.to_string()),
    }
}

/// Commutation `D P_t F = e^{-t} P_t D F` away from the caps, tolerance
/// `max(1e-8, 10·tail mass)`.
pub fn check_be(space: &PoissonSpace, samples: &[Vec<f64>], t_grid: &[f64], margin: usize) -> Result<VerificationReport> {
    let tol = Tolerance {
        truncation: (10.0 * space.reference().max_tail_mass()).max(1e-8),
        ..Tolerance::default()
    };
    let mut points = Vec::new();
    for &t in t_grid {
        let mut worst: f64 = 0.0;
        for f in samples {
            worst = worst.max(be_commutation_residual(space, f, t, margin)?);
        }
        points.push(CheckPoint::new(t, worst, 0.0, tol));
    }
    Ok(VerificationReport::from_points("be", space, &[], t_grid.to_vec(), points))
}

/// Monotonicity of `ε ↦ 𝒥_ε` on `eps_grid` (ascending) and closeness of the
/// smallest `𝒥_ε` to `Ŵ²`: `𝒥_{ε_min} - Ŵ² ≤ 5 δ_K`.
pub fn check_gamma_convergence(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    eps_grid: &[f64],
    ladder: &[usize],
    cfg: &SolverConfig,
) -> VerificationReport {
    let run = || -> Result<(Vec<CheckPoint>, String)> {
        let w = estimate_distance(space, mu0, mu1, 0.0, ladder, cfg)?;
        let k = *ladder.last().unwrap();
        let fine = cfg.with_intervals(k);
        let mut values = Vec::new();
        for &eps in eps_grid {
            let s = solve_entropic(space, mu0, mu1, eps, &fine)?;
            if !s.report.succeeded() {
                return Err(Error::Solver(format!("entropic solve at ε = {eps}: {:?}", s.report.status)));
            }
            values.push((eps, s.value, s.report.slack()));
        }
        let mut points = Vec::new();
        for pair in values.windows(2) {
            let (_, lo, s0) = pair[0];
            let (e1, hi, s1) = pair[1];
            points.push(CheckPoint::new(
                e1,
                lo,
                hi,
                Tolerance {
                    solver: s0 + s1,
                    rounding: 1e-12,
                    ..Tolerance::default()
                },
            ));
        }
        let (e0, j0, s0) = values[0];
        // 𝒥_{ε_min} - Ŵ² ≤ 5 δ_K, written as lhs = gap, rhs = 5 δ_K.
        points.push(CheckPoint::new(
            -e0,
            j0 - w.value,
            5.0 * w.delta,
            Tolerance {
                solver: s0 + w.slack,
                ..Tolerance::default()
            },
        ));
        // First-order prediction of the gap: ε ∫ I along the finest geodesic.
        let path = &w.finest.path;
        let fisher_knots: Vec<f64> = path.densities().iter().map(|d| fisher(space, d)).collect();
        let fisher_integral: f64 = (0..path.intervals())
            .map(|k| 0.5 * path.dt(k) * (fisher_knots[k] + fisher_knots[k + 1]))
            .sum();
        let summary = values
            .iter()
            .map(|(e, v, _)| format!("J({e:e}) = {v:.12e}"))
            .collect::<Vec<_>>()
            .join(", ");
        Ok((
            points,
            format!(
                "W² = {:.12e} ± {:.3e}; {summary}; ε_min ∫I along geodesic = {:.6e}",
                w.value,
                w.delta,
                e0 * fisher_integral
            ),
        ))
    };
    match run() {
        Ok((points, note)) => {
            VerificationReport::from_points("gamma_convergence", space, &[mu0, mu1], eps_grid.to_vec(), points)
                .with_note(note)
        }
        Err(e) => VerificationReport::skipped("gamma_convergence", space, &[mu0, mu1], e.to_string()),
    }
}

/// `𝒥_ε(ξ₀, ξ₂) ≤ 2𝒥_ε(ξ₀, ξ₁) + 2𝒥_ε(ξ₁, ξ₂)`.
pub fn check_quasi_triangle(
    space: &PoissonSpace,
    xi: [&Density; 3],
    eps: f64,
    cfg: &SolverConfig,
) -> VerificationReport {
    let run = || -> Result<CheckPoint> {
        let mut vals = Vec::new();
        let mut slack = 0.0;
        for (a, b) in [(0, 2), (0, 1), (1, 2)] {
            let s = solve_entropic(space, xi[a], xi[b], eps, cfg)?;
            if !s.report.succeeded() {
                return Err(Error::Solver(format!("entropic solve: {:?}", s.report.status)));
            }
            vals.push(s.value);
            slack += s.report.slack();
        }
        Ok(CheckPoint::new(
            eps,
            vals[0],
            2.0 * vals[1] + 2.0 * vals[2],
            Tolerance {
                solver: 2.0 * slack,
                rounding: 1e-12,
                ..Tolerance::default()
            },
        ))
    };
    match run() {
        Ok(p) => VerificationReport::from_points("quasi_triangle", space, &xi, vec![eps], vec![p]),
        Err(e) => VerificationReport::skipped("quasi_triangle", space, &xi, e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::SiteSpace;

    fn space(m: Vec<f64>, caps: Vec<usize>) -> PoissonSpace {
        PoissonSpace::new(SiteSpace::new(m, caps).unwrap()).unwrap()
    }

    #[test]
    fn trivial_cases() {
        let sp = space(vec![1.0], vec![8]);
        let pi = Density::reference(&sp);
        let r = check_mlsi(&sp, &pi);
        assert!(r.passed() && r.lhs == 0.0 && r.rhs == 0.0);
        let dirac = Density::dirac(&sp, &[0]).unwrap();
        let r = check_mlsi(&sp, &dirac);
        assert!(r.passed() && r.vacuous);
        let r = check_hwi(&sp, &dirac, &[4, 8], &SolverConfig::default());
        assert!(r.passed() && r.vacuous);
        let r = check_exp_decay(&sp, &pi, &[0.5, 1.0]).unwrap();
        assert!(r.passed());
        let r = check_evi(&sp, &pi, &pi, &[0.1], 0.02, &SolverConfig::default().with_intervals(8));
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn verdict_is_function_of_sides() {
        let p = CheckPoint::new(0.0, 1.0, 0.9, Tolerance::rounding(0.05));
        assert!(!p.pass);
        let p = CheckPoint::new(0.0, 1.0, 0.96, Tolerance::rounding(0.05));
        assert!(p.pass);
        let p = CheckPoint::new(0.0, f64::INFINITY, f64::INFINITY, Tolerance::default());
        assert!(p.pass && p.slack == 0.0);
    }

    #[test]
    fn random_densities_reproducible() {
        let sp = space(vec![1.0, 2.0], vec![4, 5]);
        let a = random_density(&sp, 7, 2.0, 2);
        let b = random_density(&sp, 7, 2.0, 2);
        assert_eq!(a, b);
        assert_ne!(a, random_density(&sp, 8, 2.0, 2));
        assert!(a.is_strictly_positive());
        assert!((a.total_mass(&sp) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(&|x| x * x * x - 2.0 * x, 0.0, 2.0, 4);
        assert!((v - 0.0).abs() < 1e-14);
    }
}
