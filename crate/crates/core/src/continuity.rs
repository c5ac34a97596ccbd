//! Time-discrete solutions of the non-local continuity equation.
//!
//! A [`CEPath`] is staggered: densities `ρ_k` live on the knots
//! `0 = t_0 < … < t_K = T`, flux atoms `V_k` on the intervals `[t_k, t_{k+1}]`.
//! The weak form `d/dt μ_t(G) = ν_t(DG)` becomes, for every state `η`,
//!
//! ```text
//! (ρ_{k+1}(η) - ρ_k(η)) π(η) = Δt_k · (Σ_x V_k(η - δₓ, x) - Σ_x V_k(η, x))
//! ```
//!
//! i.e. a positive atom on `(η, x)` moves mass from `η` to `η + δₓ`.

use crate::calculus::{difference, entropy, flux_divergence, lagrangian_of_values, FluxMeasure};
use crate::config_space::{intensity_measure, Density, PoissonSpace};
use crate::error::{Error, Result};
use crate::semigroup::{apply_kernels, edge_kernels, expm_kernel, semigroup_apply};

/// Default tolerance for constraint-exact (solver-produced) paths.
pub const SOLVER_CE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CEPath {
    times: Vec<f64>,
    densities: Vec<Density>,
    fluxes: Vec<FluxMeasure>,
}

impl CEPath {
    pub fn new(
        space: &PoissonSpace,
        times: Vec<f64>,
        densities: Vec<Density>,
        fluxes: Vec<FluxMeasure>,
    ) -> Result<Self> {
        let k = fluxes.len();
        if k == 0 {
            return Err(Error::InvalidPath("at least one interval is required".into()));
        }
        if times.len() != k + 1 || densities.len() != k + 1 {
            return Err(Error::InvalidPath(format!(
                "{} intervals need {} knots, got {} times and {} densities",
                k,
                k + 1,
                times.len(),
                densities.len()
            )));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath("times must start at 0 and increase strictly".into()));
        }
        if densities.iter().any(|d| d.len() != space.n_states())
            || fluxes.iter().any(|f| f.atoms().len() != space.n_edges())
        {
            return Err(Error::DimensionMismatch {
                expected: space.n_states(),
                got: densities[0].len(),
            });
        }
        Ok(Self { times, densities, fluxes })
    }

    pub(crate) fn from_parts(times: Vec<f64>, densities: Vec<Density>, fluxes: Vec<FluxMeasure>) -> Self {
        Self { times, densities, fluxes }
    }

    /// `μ_t ≡ μ`, `ν ≡ 0` on a uniform grid.
    pub fn constant(space: &PoissonSpace, mu: &Density, horizon: f64, intervals: usize) -> Self {
        Self {
            times: uniform_grid(horizon, intervals),
            densities: vec![mu.clone(); intervals + 1],
            fluxes: vec![FluxMeasure::zero(space); intervals],
        }
    }

    pub fn intervals(&self) -> usize {
        self.fluxes.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn dt(&self, k: usize) -> f64 {
        self.times[k + 1] - self.times[k]
    }

    pub fn densities(&self) -> &[Density] {
        &self.densities
    }

    pub fn density(&self, k: usize) -> &Density {
        &self.densities[k]
    }

    pub fn fluxes(&self) -> &[FluxMeasure] {
        &self.fluxes
    }

    pub fn flux(&self, k: usize) -> &FluxMeasure {
        &self.fluxes[k]
    }

    /// `ρ̄_k = (ρ_k + ρ_{k+1}) / 2`.
    pub fn midpoint(&self, k: usize) -> Vec<f64> {
        self.densities[k]
            .values()
            .iter()
            .zip(self.densities[k + 1].values())
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn start(&self) -> &Density {
        &self.densities[0]
    }

    pub fn end(&self) -> &Density {
        self.densities.last().unwrap()
    }

    /// Piecewise-linear density at time `t ∈ [0, T]`.
    pub fn density_at(&self, t: f64) -> Vec<f64> {
        let k = locate(&self.times, t);
        let (a, b) = (self.times[k], self.times[k + 1]);
        let w = ((t - a) / (b - a)).clamp(0.0, 1.0);
        self.densities[k]
            .values()
            .iter()
            .zip(self.densities[k + 1].values())
            .map(|(x, y)| (1.0 - w) * x + w * y)
            .collect()
    }

    /// Largest `|Σ ρ_k π - 1|` over the knots.
    pub fn mass_defect(&self, space: &PoissonSpace) -> f64 {
        self.densities
            .iter()
            .map(|d| (d.total_mass(space) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn uniform_grid(horizon: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|k| if k == intervals { horizon } else { horizon * k as f64 / intervals as f64 })
        .collect()
}

fn locate(times: &[f64], t: f64) -> usize {
    let k = times.partition_point(|&s| s <= t);
    k.saturating_sub(1).min(times.len() - 2)
}

/// Per-state mass-balance defect of interval `k`.
fn interval_defect(space: &PoissonSpace, path: &CEPath, k: usize) -> Vec<f64> {
    let div = flux_divergence(space, path.fluxes[k].atoms());
    let dt = path.dt(k);
    (0..space.n_states())
        .map(|s| {
            (path.densities[k + 1].get(s) - path.densities[k].get(s)) * space.pi(s) - dt * div[s]
        })
        .collect()
}

/// Largest mass-balance violation `|(ρ_{k+1} - ρ_k)π - Δt_k div V_k|` over
/// states and intervals.
pub fn ce_residual(space: &PoissonSpace, path: &CEPath) -> f64 {
    (0..path.intervals())
        .flat_map(|k| interval_defect(space, path, k))
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Violation rate: the defect of each interval divided by its length. For
/// quadrature-built paths this is the consistency error of the time
/// discretisation (second order for [`ou_path`]).
pub fn ce_defect_rate(space: &PoissonSpace, path: &CEPath) -> f64 {
    (0..path.intervals())
        .map(|k| {
            interval_defect(space, path, k)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()))
                / path.dt(k)
        })
        .fold(0.0, f64::max)
}

/// Flux `ν = -D ρ (π ⊗ m)` as atoms.
pub(crate) fn gradient_flux(space: &PoissonSpace, rho: &[f64]) -> FluxMeasure {
    let d = difference(space, rho);
    FluxMeasure::new(d.iter().enumerate().map(|(e, v)| -v * space.edge_weight(e)).collect())
}

/// Ornstein–Uhlenbeck evolution `ρ_k = P_{t_k} ρ₀` with the flux
/// `-D P_t ρ₀ (π ⊗ m)` sampled at interval midpoints.
pub fn ou_path(space: &PoissonSpace, mu0: &Density, horizon: f64, intervals: usize) -> Result<CEPath> {
    if !(horizon > 0.0) || intervals == 0 {
        return Err(Error::InvalidPath("ou_path needs T > 0 and K ≥ 1".into()));
    }
    let times = uniform_grid(horizon, intervals);
    let dt = horizon / intervals as f64;
    // Stepping by a fixed kernel keeps the cost at one kernel per step size.
    let step = expm_kernel(space.sites(), dt)?;
    let half = expm_kernel(space.sites(), 0.5 * dt)?;
    let mut densities = Vec::with_capacity(intervals + 1);
    let mut fluxes = Vec::with_capacity(intervals);
    let mut rho = mu0.values().to_vec();
    densities.push(mu0.clone());
    for _ in 0..intervals {
        let mid = semigroup_apply(space, &half, &rho)?;
        fluxes.push(gradient_flux(space, &mid));
        rho = semigroup_apply(space, &step, &rho)?;
        densities.push(Density::from_vec_unchecked(rho.iter().map(|v| v.max(0.0)).collect()));
    }
    Ok(CEPath { times, densities, fluxes })
}

/// Pushes a path through the semigroup: densities `P_ε ρ_k`, fluxes
/// `e^{-ε} Q_ε w_k(·, x)` for every site `x`, re-atomised with `π m`, where
/// `Q_ε` is the edge kernel of [`edge_kernels`]. On the truncated lattice this
/// is the transport of `ν` dual to `G ↦ D P_ε G`, so the mass-balance defect of
/// the input is carried along and nothing is added.
pub fn push_semigroup(space: &PoissonSpace, path: &CEPath, eps: f64) -> Result<CEPath> {
    if eps == 0.0 {
        return Ok(path.clone());
    }
    let op = expm_kernel(space.sites(), eps)?;
    let edge_ops = (0..space.dim())
        .map(|x| edge_kernels(space.sites(), x, eps))
        .collect::<Result<Vec<_>>>()?;
    let decay = (-eps).exp();
    let lat = space.lattice();
    let n = space.n_states();
    let densities = path
        .densities
        .iter()
        .map(|d| {
            semigroup_apply(space, &op, d.values())
                .map(|v| Density::from_vec_unchecked(v.into_iter().map(|x| x.max(0.0)).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fluxes = Vec::with_capacity(path.intervals());
    for flux in &path.fluxes {
        let w = flux.velocity(space);
        let mut atoms = vec![0.0; space.n_edges()];
        for x in 0..space.dim() {
            let mut slice = vec![0.0; n];
            for s in 0..n {
                if let Some(e) = lat.out_edge(s, x) {
                    slice[s] = w[e];
                }
            }
            let pushed = apply_kernels(space, &edge_ops[x], &slice);
            for s in 0..n {
                if let Some(e) = lat.out_edge(s, x) {
                    atoms[e] = decay * pushed[s] * space.edge_weight(e);
                }
            }
        }
        fluxes.push(FluxMeasure::new(atoms));
    }
    Ok(CEPath {
        times: path.times.clone(),
        densities,
        fluxes,
    })
}

/// Reparametrises `path` by a strictly increasing `λ : [0, T'] → [0, T]` onto a
/// uniform grid of `intervals` steps on `[0, T']`.
///
/// Densities are read off the piecewise-linear interpolant at `λ(s_j)`; each
/// new flux is the overlap-weighted average of the old fluxes times the local
/// slope, which keeps the discrete continuity equation exact up to the input
/// residual.
pub fn reparametrize(
    space: &PoissonSpace,
    path: &CEPath,
    lambda: &dyn Fn(f64) -> f64,
    new_horizon: f64,
    intervals: usize,
) -> Result<CEPath> {
    if !(new_horizon > 0.0) || intervals == 0 {
        return Err(Error::InvalidPath("reparametrisation needs T' > 0 and K' ≥ 1".into()));
    }
    let grid = uniform_grid(new_horizon, intervals);
    let mapped: Vec<f64> = grid.iter().map(|&s| lambda(s)).collect();
    let horizon = path.horizon();
    let tol = 1e-12 * horizon.max(1.0);
    if (mapped[0]).abs() > tol || (mapped[intervals] - horizon).abs() > tol {
        return Err(Error::Domain(format!(
            "λ must map 0 ↦ 0 and T' ↦ T = {horizon}; got {} and {}",
            mapped[0], mapped[intervals]
        )));
    }
    if mapped.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("λ must be strictly increasing".into()));
    }
    let mut mapped = mapped;
    mapped[0] = 0.0;
    mapped[intervals] = horizon;

    let densities: Vec<Density> = mapped
        .iter()
        .map(|&t| Density::from_vec_unchecked(path.density_at(t)))
        .collect();
    let mut fluxes = Vec::with_capacity(intervals);
    for j in 0..intervals {
        let (a, b) = (mapped[j], mapped[j + 1]);
        let ds = grid[j + 1] - grid[j];
        let mut atoms = vec![0.0; space.n_edges()];
        for k in 0..path.intervals() {
            let lo = a.max(path.times[k]);
            let hi = b.min(path.times[k + 1]);
            if hi > lo {
                let w = (hi - lo) / ds;
                for (acc, v) in atoms.iter_mut().zip(path.fluxes[k].atoms()) {
                    *acc += w * v;
                }
            }
        }
        fluxes.push(FluxMeasure::new(atoms));
    }
    Ok(CEPath {
        times: grid,
        densities,
        fluxes,
    })
}

/// Joins `first` on `[0, T₁]` and `second` shifted to `[T₁, T₁ + T₂]`.
pub fn concatenate(space: &PoissonSpace, first: &CEPath, second: &CEPath) -> Result<CEPath> {
    let gap = first.end().total_variation(second.start(), space);
    if gap > 1e-12 {
        return Err(Error::InvalidPath(format!("paths do not meet: TV gap {gap}")));
    }
    let shift = first.horizon();
    let mut times = first.times.clone();
    times.extend(second.times[1..].iter().map(|t| t + shift));
    let mut densities = first.densities.clone();
    densities.extend(second.densities[1..].iter().cloned());
    let mut fluxes = first.fluxes.clone();
    fluxes.extend(second.fluxes.iter().cloned());
    Ok(CEPath { times, densities, fluxes })
}

/// Outcome of [`intensity_evolution_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityReport {
    /// `I_{ρ_k}(x)` per knot and site.
    pub intensity: Vec<Vec<f64>>,
    /// `I_{ρ_0}(x) + Σ_{j<k} Δt_j ν_j(Υ × {x})` per knot and site.
    pub predicted: Vec<Vec<f64>>,
    pub max_deviation: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Compares the intensity along the path with the integrated flux through each
/// site; the bound is `K · ce_tol · Σ_η η_x`.
pub fn intensity_evolution_check(space: &PoissonSpace, path: &CEPath, ce_tol: f64) -> IntensityReport {
    let d = space.dim();
    let lat = space.lattice();
    let intensity: Vec<Vec<f64>> = path.densities.iter().map(|r| intensity_measure(space, r)).collect();
    let mut predicted = vec![intensity[0].clone()];
    let mut acc = intensity[0].clone();
    for k in 0..path.intervals() {
        for (e, edge) in lat.edges().iter().enumerate() {
            acc[edge.site] += path.dt(k) * path.fluxes[k].atoms()[e];
        }
        predicted.push(acc.clone());
    }
    let mut max_deviation: f64 = 0.0;
    for (i, p) in intensity.iter().zip(&predicted) {
        for x in 0..d {
            max_deviation = max_deviation.max((i[x] - p[x]).abs());
        }
    }
    let count_scale = (0..space.n_states())
        .map(|s| lat.counts(s).iter().sum::<usize>() as f64)
        .sum::<f64>();
    let bound = path.intervals() as f64 * ce_tol * count_scale;
    IntensityReport {
        intensity,
        predicted,
        max_deviation,
        bound,
        holds: max_deviation <= bound,
    }
}

/// Outcome of [`entropy_production_check`].
#[derive(Debug, Clone, PartialEq)]
pub enum EntropyProductionReport {
    Evaluated {
        entropy_change: f64,
        production: f64,
        residual: f64,
    },
    /// Some knot density is not strictly positive.
    Skipped { reason: String },
}

/// `H(ρ_K) - H(ρ_0)` against `Σ_k Δt_k Σ_edges D log ρ̄_k · V_k`.
pub fn entropy_production_check(space: &PoissonSpace, path: &CEPath) -> EntropyProductionReport {
    if let Some(k) = path.densities.iter().position(|d| !d.is_strictly_positive()) {
        return EntropyProductionReport::Skipped {
            reason: format!("density at knot {k} is not strictly positive (∞ Fisher information)"),
        };
    }
    let lat = space.lattice();
    let mut production = 0.0;
    for k in 0..path.intervals() {
        let mid = path.midpoint(k);
        let atoms = path.fluxes[k].atoms();
        let mut s = 0.0;
        for (e, edge) in lat.edges().iter().enumerate() {
            s += (mid[edge.target].ln() - mid[edge.source].ln()) * atoms[e];
        }
        production += path.dt(k) * s;
    }
    let entropy_change = entropy(space, path.end()) - entropy(space, path.start());
    EntropyProductionReport::Evaluated {
        entropy_change,
        production,
        residual: (entropy_change - production).abs(),
    }
}

/// `𝓛(ρ̄_k, V_k)^{1/2}` per interval, an upper bound on the metric speed.
pub fn path_speed(space: &PoissonSpace, path: &CEPath) -> Vec<f64> {
    (0..path.intervals())
        .map(|k| lagrangian_of_values(space, &path.midpoint(k), path.fluxes[k].atoms()).sqrt())
        .collect()
}

/// `Σ_k Δt_k 𝓛(ρ̄_k, V_k)^{1/2}`, the length of the path.
pub fn path_length(space: &PoissonSpace, path: &CEPath) -> f64 {
    path_speed(space, path)
        .iter()
        .enumerate()
        .map(|(k, v)| path.dt(k) * v)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::fisher;
    use crate::config_space::SiteSpace;

    fn space(m: Vec<f64>, caps: Vec<usize>) -> PoissonSpace {
        PoissonSpace::new(SiteSpace::new(m, caps).unwrap()).unwrap()
    }

    fn positive_density(sp: &PoissonSpace) -> Density {
        let raw: Vec<f64> = (0..sp.n_states())
            .map(|s| (0.9 * ((s * 13 % 7) as f64 / 7.0 - 0.5)).exp())
            .collect();
        Density::normalized(sp, raw).unwrap()
    }

    #[test]
    fn constant_path_residuals() {
        let sp = space(vec![1.0], vec![5]);
        let pi = Density::reference(&sp);
        let path = CEPath::constant(&sp, &pi, 1.0, 4);
        assert_eq!(ce_residual(&sp, &path), 0.0);
        let mut atoms = vec![0.0; sp.n_edges()];
        atoms[1] = 0.3;
        let mut fluxes = vec![FluxMeasure::zero(&sp); 4];
        fluxes[2] = FluxMeasure::new(atoms.clone());
        let forced = CEPath::new(&sp, path.times().to_vec(), path.densities().to_vec(), fluxes).unwrap();
        let div = flux_divergence(&sp, &atoms);
        let expected = 0.25 * div.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((ce_residual(&sp, &forced) - expected).abs() < 1e-15);
    }

    #[test]
    fn ou_path_at_equilibrium() {
        let sp = space(vec![1.0, 0.5], vec![5, 4]);
        let path = ou_path(&sp, &Density::reference(&sp), 1.0, 10).unwrap();
        assert!(path.densities().iter().all(|d| d.values().iter().all(|v| (v - 1.0).abs() < 1e-12)));
        assert!(path.fluxes().iter().all(|f| f.atoms().iter().all(|v| v.abs() < 1e-13)));
        assert!(ce_residual(&sp, &path) < 1e-13);
    }

    #[test]
    fn ou_path_second_order() {
        let sp = space(vec![1.0], vec![12]);
        let mu = Density::dirac(&sp, &[0]).unwrap();
        let coarse = ce_defect_rate(&sp, &ou_path(&sp, &mu, 1.0, 50).unwrap());
        let fine = ce_defect_rate(&sp, &ou_path(&sp, &mu, 1.0, 100).unwrap());
        let ratio = coarse / fine;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        let path = ou_path(&sp, &mu, 1.0, 100).unwrap();
        assert!(path.mass_defect(&sp) < 1e-12);
    }

    #[test]
    fn ou_path_intensity_follows_closed_form() {
        let sp = space(vec![1.0], vec![16]);
        let mu = Density::dirac(&sp, &[0]).unwrap();
        let path = ou_path(&sp, &mu, 1.0, 200).unwrap();
        let report = intensity_evolution_check(&sp, &path, 1e-3 / 200.0);
        for (k, t) in path.times().iter().enumerate() {
            let exact = -(-t).exp_m1();
            assert!((report.intensity[k][0] - exact).abs() < 1e-4);
            assert!((report.predicted[k][0] - exact).abs() < 1e-4);
        }
    }

    #[test]
    fn push_zero_is_identity_and_semigroup_law() {
        let sp = space(vec![1.0], vec![10]);
        let mu = positive_density(&sp);
        let path = ou_path(&sp, &mu, 0.5, 8).unwrap();
        assert_eq!(push_semigroup(&sp, &path, 0.0).unwrap(), path);
        let once = push_semigroup(&sp, &path, 0.5).unwrap();
        let twice = push_semigroup(&sp, &push_semigroup(&sp, &path, 0.2).unwrap(), 0.3).unwrap();
        for k in 0..=path.intervals() {
            for (a, b) in once.density(k).values().iter().zip(twice.density(k).values()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        for k in 0..path.intervals() {
            for (a, b) in once.flux(k).atoms().iter().zip(twice.flux(k).atoms()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn push_of_ou_path_is_ou_path_of_pushed_start() {
        let sp = space(vec![1.0], vec![16]);
        let mu = positive_density(&sp);
        let eps = 0.4;
        let pushed = push_semigroup(&sp, &ou_path(&sp, &mu, 1.0, 20).unwrap(), eps).unwrap();
        let start = crate::semigroup::evolve(&sp, &mu, eps).unwrap();
        let direct = ou_path(&sp, &start, 1.0, 20).unwrap();
        for k in 0..=20 {
            for (a, b) in pushed.density(k).values().iter().zip(direct.density(k).values()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        for k in 0..20 {
            for (a, b) in pushed.flux(k).atoms().iter().zip(direct.flux(k).atoms()) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn reparametrize_identity_and_double_speed() {
        let sp = space(vec![1.0], vec![10]);
        let mu = positive_density(&sp);
        let path = ou_path(&sp, &mu, 1.0, 16).unwrap();
        let same = reparametrize(&sp, &path, &|s| s, 1.0, 16).unwrap();
        for k in 0..=16 {
            for (a, b) in same.density(k).values().iter().zip(path.density(k).values()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let fast = reparametrize(&sp, &path, &|s| 2.0 * s, 0.5, 16).unwrap();
        assert!((path_length(&sp, &fast) - path_length(&sp, &path)).abs() < 1e-6);
        for k in 0..16 {
            for (a, b) in fast.flux(k).atoms().iter().zip(path.flux(k).atoms()) {
                assert!((a - 2.0 * b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reparametrize_square_keeps_feasibility() {
        let sp = space(vec![1.0], vec![6]);
        let mu = positive_density(&sp);
        let base = ou_path(&sp, &mu, 1.0, 20).unwrap();
        let path = crate::solver::project_to_feasible(&sp, &base).unwrap();
        assert!(ce_residual(&sp, &path) < 1e-13);
        let sq = reparametrize(&sp, &path, &|s| s * s, 1.0, 37).unwrap();
        assert!(ce_residual(&sp, &sq) <= SOLVER_CE_TOL);
        assert!(reparametrize(&sp, &path, &|s| (s - 0.5).powi(2), 1.0, 10).is_err());
        assert!(reparametrize(&sp, &path, &|s| 0.5 * s, 1.0, 10).is_err());
    }

    #[test]
    fn entropy_production_matches_de_bruijn() {
        let sp = space(vec![1.0], vec![12]);
        let mu = positive_density(&sp);
        let path = ou_path(&sp, &mu, 1.0, 100).unwrap();
        match entropy_production_check(&sp, &path) {
            EntropyProductionReport::Evaluated { production, residual, .. } => {
                let debruijn: f64 = (0..100)
                    .map(|k| {
                        let mid = Density::from_vec_unchecked(path.midpoint(k));
                        -path.dt(k) * fisher(&sp, &mid)
                    })
                    .sum();
                assert!((production - debruijn).abs() < 1e-4);
                assert!(residual < 1e-4);
            }
            other => panic!("{other:?}"),
        }
        let dirac = ou_path(&sp, &Density::dirac(&sp, &[0]).unwrap(), 1.0, 10).unwrap();
        assert!(matches!(entropy_production_check(&sp, &dirac), EntropyProductionReport::Skipped { .. }));
        let still = CEPath::constant(&sp, &mu, 1.0, 3);
        match entropy_production_check(&sp, &still) {
            EntropyProductionReport::Evaluated { entropy_change, production, .. } => {
                assert_eq!(entropy_change, 0.0);
                assert_eq!(production, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn speed_along_ou_is_root_fisher() {
        let sp = space(vec![1.0], vec![12]);
        let mu = positive_density(&sp);
        let path = ou_path(&sp, &mu, 1.0, 64).unwrap();
        let speed = path_speed(&sp, &path);
        for (k, v) in speed.iter().enumerate() {
            let t = 0.5 * (path.times()[k] + path.times()[k + 1]);
            let i = fisher(&sp, &crate::semigroup::evolve(&sp, &mu, t).unwrap());
            assert!((v - i.sqrt()).abs() < 1e-3 * (1.0 + i.sqrt()), "k={k}");
        }
        let still = CEPath::constant(&sp, &mu, 1.0, 3);
        assert!(path_speed(&sp, &still).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn concatenation_stays_feasible() {
        let sp = space(vec![1.0], vec![6]);
        let mu = positive_density(&sp);
        let a = crate::solver::project_to_feasible(&sp, &ou_path(&sp, &mu, 0.5, 10).unwrap()).unwrap();
        let b = crate::solver::project_to_feasible(&sp, &ou_path(&sp, a.end(), 0.5, 10).unwrap()).unwrap();
        let joined = concatenate(&sp, &a, &b).unwrap();
        assert!(ce_residual(&sp, &joined) <= ce_residual(&sp, &a).max(ce_residual(&sp, &b)) + 1e-16);
        assert_eq!(joined.intervals(), 20);
        assert!(concatenate(&sp, &a, &a).is_err());
    }
}
