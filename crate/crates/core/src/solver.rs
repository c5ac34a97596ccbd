//! Minimisation of the discrete action over continuity-equation paths.
//!
//! The unknowns are the masses `p_k = ρ_k π` at the interior knots. For fixed
//! masses the optimal flux of interval `k` is `V = c ⊙ Dφ` with
//! `L_c φ = (p_{k+1} - p_k)/Δt`, where `L_c` is the graph Laplacian weighted by
//! `c_e = θ(m_x p̄(η), (η_x + 1) p̄(η + δₓ)) = ρ̂ π m`. The reduced objective
//! `Σ_k Δt rᵀ L_c⁺ r` is convex in the masses and is minimised by damped Newton
//! steps on a logarithmic barrier whose weight is driven to a small floor. Mass
//! conservation is built into the parametrisation, so every iterate is a
//! feasible path.


use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::calculus::{fisher, flux_divergence, lagrangian_of_values, FluxMeasure};
use crate::config_space::{Density, PoissonSpace};
use crate::continuity::{ce_residual, uniform_grid, CEPath};
use crate::error::{Error, Result};
use crate::logmean::{theta, theta_jet};
use crate::semigroup::{expm_kernel, semigroup_apply};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Linear interpolation of the endpoints, blended towards `π` in the middle.
    Linear,
    /// `(1 - t) P_σ ρ₀ + t P_σ ρ₁` with `σ = 2t(1 - t)`.
    OuBridge,
}

/// Barrier weights `initial, initial·decay, …` down to `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for BarrierSchedule {
    fn default() -> Self {
        Self {
            initial: 1e-2,
            decay: 0.1,
            floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub intervals: usize,
    pub max_iters: usize,
    pub kkt_tol: f64,
    pub barrier: BarrierSchedule,
    pub init: InitMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            intervals: 32,
            max_iters: 400,
            kkt_tol: 1e-9,
            barrier: BarrierSchedule::default(),
            init: InitMode::Linear,
        }
    }
}

impl SolverConfig {
    pub fn with_intervals(mut self, intervals: usize) -> Self {
        self.intervals = intervals;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.barrier;
        if self.intervals == 0 {
            return Err(Error::Domain("solver needs at least one interval".into()));
        }
        if !(self.kkt_tol > 0.0) {
            return Err(Error::Domain(format!("kkt_tol must be positive, got {}", self.kkt_tol)));
        }
        if !(b.floor >= 1e-15 && b.initial >= b.floor && b.decay > 0.0 && b.decay < 1.0) {
            return Err(Error::Domain(format!(
                "barrier schedule needs floor ≥ 1e-15, initial ≥ floor and decay in (0, 1); got {b:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    /// Endpoints coincide; the constant path is optimal.
    Trivial,
    MaxIterations,
    /// Line search could not reduce the barrier objective further.
    Stalled,
    /// Every feasible path has infinite action (only possible for `K = 1`).
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub intervals: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    /// Empirical convergence order in `Δt`.
    pub order: Option<f64>,
    pub extrapolate: Option<f64>,
    pub error_estimate: f64,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub objective: f64,
    pub status: SolverStatus,
    /// Largest of the stationarity measure and the feasibility violation.
    pub kkt_residual: f64,
    /// Half the squared Newton decrement at the last iterate.
    pub stationarity: f64,
    /// Mass-balance violation of the returned path.
    pub feasibility: f64,
    /// Upper bound on `objective - optimum` of the discrete problem.
    pub optimality_gap: f64,
    pub iterations: usize,
    pub intervals: usize,
    pub refinement: Option<RefinementTable>,
    pub wall_time: f64,
}

impl SolverReport {
    pub fn succeeded(&self) -> bool {
        matches!(self.status, SolverStatus::Converged | SolverStatus::Trivial)
    }

    /// Optimality slack of the discrete value: gap bound plus feasibility.
    pub fn slack(&self) -> f64 {
        self.optimality_gap + self.feasibility
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub value: f64,
    pub path: CEPath,
    pub report: SolverReport,
}

/// Wall clock for reports; reads zero where the platform has no clock
/// (`wasm32-unknown-unknown`).
struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        return self.start.elapsed().as_secs_f64();
        #[cfg(target_arch = "wasm32")]
        return 0.0;
    }
}

/// `Σ_k Δt_k 𝓛(ρ̄_k, V_k)`.
pub fn action(space: &PoissonSpace, path: &CEPath) -> f64 {
    let mut total = 0.0;
    for k in 0..path.intervals() {
        let l = lagrangian_of_values(space, &path.midpoint(k), path.flux(k).atoms());
        if l.is_infinite() {
            return f64::INFINITY;
        }
        total += path.dt(k) * l;
    }
    total
}

/// `action + ε Σ_k Δt_k I(ρ̄_k)`.
pub fn action_entropic(space: &PoissonSpace, path: &CEPath, eps: f64) -> f64 {
    let a = action(space, path);
    if eps == 0.0 || a.is_infinite() {
        return a;
    }
    let mut total = a;
    for k in 0..path.intervals() {
        let i = fisher(space, &Density::from_vec_unchecked(path.midpoint(k)));
        if i.is_infinite() {
            return f64::INFINITY;
        }
        total += eps * path.dt(k) * i;
    }
    total
}

/// Grounded weighted graph Laplacian: one node per connected component of the
/// positive-weight edges has its potential fixed to zero.
struct Laplacian {
    reduced: Vec<Option<usize>>,
    component: Vec<usize>,
    n_components: usize,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl Laplacian {
    fn new(n: usize, pairs: &[(usize, usize)], c: &[f64], priority: &[f64]) -> Option<Self> {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for (&(a, b), &w) in pairs.iter().zip(c) {
            if w > 0.0 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
        let mut comp_id = vec![usize::MAX; n];
        let mut component = vec![0; n];
        let mut ground: Vec<usize> = Vec::new();
        for i in 0..n {
            let r = roots[i];
            if comp_id[r] == usize::MAX {
                comp_id[r] = ground.len();
                ground.push(i);
            }
            let cid = comp_id[r];
            component[i] = cid;
            if priority[i] > priority[ground[cid]] {
                ground[cid] = i;
            }
        }
        let mut reduced = vec![None; n];
        let mut m = 0;
        for i in 0..n {
            if ground[component[i]] != i {
                reduced[i] = Some(m);
                m += 1;
            }
        }
        let chol = if m == 0 {
            None
        } else {
            let mut l = DMatrix::<f64>::zeros(m, m);
            for (&(a, b), &w) in pairs.iter().zip(c) {
                if w > 0.0 {
                    let (ra, rb) = (reduced[a], reduced[b]);
                    if let Some(i) = ra {
                        l[(i, i)] += w;
                    }
                    if let Some(j) = rb {
                        l[(j, j)] += w;
                    }
                    if let (Some(i), Some(j)) = (ra, rb) {
                        l[(i, j)] -= w;
                        l[(j, i)] -= w;
                    }
                }
            }
            Some(l.cholesky()?)
        };
        Some(Self {
            reduced,
            component,
            n_components: ground.len(),
            chol,
        })
    }

    /// Potential with `L φ = r` on every component, and the largest
    /// per-component net mass of `r` (zero when `r` is admissible, i.e. below
    /// `1e-12` relative to `max |r_i|` or to `floor`).
    fn solve(&self, r: &[f64], floor: f64) -> (Vec<f64>, f64) {
        let n = r.len();
        let mut net = vec![0.0; self.n_components];
        let mut scale = vec![0.0f64; self.n_components];
        for i in 0..n {
            net[self.component[i]] += r[i];
            scale[self.component[i]] = scale[self.component[i]].max(r[i].abs());
        }
        let imbalance = net
            .iter()
            .zip(&scale)
            .map(|(v, s)| if v.abs() > 1e-12 * s.max(floor).max(1e-300) { v.abs() } else { 0.0 })
            .fold(0.0, f64::max);
        let mut phi = vec![0.0; n];
        if let Some(ch) = &self.chol {
            let mut b = DVector::zeros(ch.l_dirty().nrows());
            for i in 0..n {
                if let Some(j) = self.reduced[i] {
                    b[j] = r[i];
                }
            }
            let x = ch.solve(&b);
            for i in 0..n {
                if let Some(j) = self.reduced[i] {
                    phi[i] = x[j];
                }
            }
        }
        (phi, imbalance)
    }

    /// Grounded inverse applied to the columns of `m`.
    fn solve_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let n = m.nrows();
        let mut out = DMatrix::zeros(n, m.ncols());
        if let Some(ch) = &self.chol {
            let size = ch.l_dirty().nrows();
            let mut b = DMatrix::zeros(size, m.ncols());
            for i in 0..n {
                if let Some(j) = self.reduced[i] {
                    b.row_mut(j).copy_from(&m.row(i));
                }
            }
            let x = ch.solve(&b);
            for i in 0..n {
                if let Some(j) = self.reduced[i] {
                    out.row_mut(i).copy_from(&x.row(j));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
struct EdgeData {
    a: usize,
    b: usize,
    qf: f64,
    qb: f64,
}

struct Problem<'a> {
    space: &'a PoissonSpace,
    edges: Vec<EdgeData>,
    pairs: Vec<(usize, usize)>,
    pi: Vec<f64>,
    pivot: usize,
    dt: f64,
    eps: f64,
}

struct IntervalTerms {
    value: f64,
    g_lo: DVector<f64>,
    g_hi: DVector<f64>,
    h_ll: DMatrix<f64>,
    h_lh: DMatrix<f64>,
    h_hh: DMatrix<f64>,
}

fn fisher_pair(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else if x == 0.0 || y == 0.0 {
        f64::INFINITY
    } else {
        (y - x) * (y / x).ln()
    }
}

impl<'a> Problem<'a> {
    fn new(space: &'a PoissonSpace, intervals: usize, eps: f64) -> Self {
        let lat = space.lattice();
        let m = space.sites().intensity();
        let edges: Vec<EdgeData> = lat
            .edges()
            .iter()
            .map(|e| EdgeData {
                a: e.source,
                b: e.target,
                qf: m[e.site],
                qb: (lat.count(e.source, e.site) + 1) as f64,
            })
            .collect();
        let pairs = edges.iter().map(|e| (e.a, e.b)).collect();
        let pi = space.reference().weights().to_vec();
        let pivot = (0..pi.len()).fold(0, |best, s| if pi[s] > pi[best] { s } else { best });
        Self {
            space,
            edges,
            pairs,
            pi,
            pivot,
            dt: 1.0 / intervals as f64,
            eps,
        }
    }

    fn n(&self) -> usize {
        self.pi.len()
    }

    fn weights(&self, pbar: &[f64]) -> Vec<f64> {
        self.edges
            .iter()
            .map(|e| theta(e.qf * pbar[e.a], e.qb * pbar[e.b]))
            .collect()
    }

    fn laplacian(&self, c: &[f64]) -> Option<Laplacian> {
        Laplacian::new(self.n(), &self.pairs, c, &self.pi)
    }

    fn rate(&self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        lo.iter().zip(hi).map(|(a, b)| (b - a) / self.dt).collect()
    }

    /// Optimal flux atoms and interval cost; `None` when the cost is infinite.
    fn interval_flux(&self, lo: &[f64], hi: &[f64]) -> Option<(f64, Vec<f64>)> {
        let pbar: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let c = self.weights(&pbar);
        let lap = self.laplacian(&c)?;
        let r = self.rate(lo, hi);
        let floor = (lo.iter().sum::<f64>() + hi.iter().sum::<f64>()) / self.dt;
        let (phi, imbalance) = lap.solve(&r, floor);
        if imbalance > 0.0 {
            return None;
        }
        let mut value = self.dt * r.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();
        if self.eps > 0.0 {
            for e in &self.edges {
                value += self.eps * self.dt * fisher_pair(e.qf * pbar[e.a], e.qb * pbar[e.b]);
            }
        }
        let atoms = self
            .edges
            .iter()
            .zip(&c)
            .map(|(e, w)| w * (phi[e.b] - phi[e.a]))
            .collect();
        Some((value, atoms))
    }

    fn interval_value(&self, lo: &[f64], hi: &[f64]) -> f64 {
        self.interval_flux(lo, hi).map_or(f64::INFINITY, |(v, _)| v)
    }

    /// Value, gradient and Hessian of the cost of one interval with respect
    /// to its two knots. Requires strictly positive midpoint masses.
    fn interval_terms(&self, lo: &[f64], hi: &[f64]) -> Option<IntervalTerms> {
        let n = self.n();
        let dt = self.dt;
        let pbar: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let jets: Vec<_> = self
            .edges
            .iter()
            .map(|e| theta_jet(e.qf * pbar[e.a], e.qb * pbar[e.b]))
            .collect();
        let c: Vec<f64> = jets.iter().map(|j| j.value).collect();
        let lap = self.laplacian(&c)?;
        if lap.n_components != 1 {
            return None;
        }
        let r = self.rate(lo, hi);
        let (phi, _) = lap.solve(&r, 0.0);
        let mut value = dt * r.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();

        let mut gc = DVector::zeros(n);
        let mut g = DMatrix::zeros(n, n);
        let mut curv = DMatrix::zeros(n, n);
        for (e, j) in self.edges.iter().zip(&jets) {
            let w = phi[e.b] - phi[e.a];
            let (dca, dcb) = (e.qf * j.ds, e.qb * j.dt);
            let coef = -dt * w * w;
            gc[e.a] += coef * dca;
            gc[e.b] += coef * dcb;
            g[(e.b, e.a)] += w * dca;
            g[(e.a, e.a)] -= w * dca;
            g[(e.b, e.b)] += w * dcb;
            g[(e.a, e.b)] -= w * dcb;
            curv[(e.a, e.a)] += coef * e.qf * e.qf * j.dss;
            curv[(e.a, e.b)] += coef * e.qf * e.qb * j.dst;
            curv[(e.b, e.a)] += coef * e.qf * e.qb * j.dst;
            curv[(e.b, e.b)] += coef * e.qb * e.qb * j.dtt;
        }
        let phi_v = DVector::from_vec(phi);
        let mut g_hi = &phi_v * 2.0 + &gc * 0.5;
        let mut g_lo = &phi_v * -2.0 + &gc * 0.5;

        let ident = DMatrix::<f64>::identity(n, n);
        let mp = &ident / dt - &g * 0.5;
        let mm = &ident * (-1.0 / dt) - &g * 0.5;
        let xp = lap.solve_matrix(&mp);
        let xm = lap.solve_matrix(&mm);
        let mut h_hh = mp.transpose() * &xp * (2.0 * dt);
        let mut h_lh = mm.transpose() * &xp * (2.0 * dt);
        let mut h_ll = mm.transpose() * &xm * (2.0 * dt);

        if self.eps > 0.0 {
            let s = self.eps * dt;
            for e in &self.edges {
                let (x, y) = (e.qf * pbar[e.a], e.qb * pbar[e.b]);
                let l = (y / x).ln();
                value += s * (y - x) * l;
                let fx = -l + 1.0 - y / x;
                let fy = l + 1.0 - x / y;
                let fxx = 1.0 / x + y / (x * x);
                let fyy = 1.0 / y + x / (y * y);
                let fxy = -1.0 / x - 1.0 / y;
                g_lo[e.a] += 0.5 * s * e.qf * fx;
                g_hi[e.a] += 0.5 * s * e.qf * fx;
                g_lo[e.b] += 0.5 * s * e.qb * fy;
                g_hi[e.b] += 0.5 * s * e.qb * fy;
                curv[(e.a, e.a)] += s * e.qf * e.qf * fxx;
                curv[(e.a, e.b)] += s * e.qf * e.qb * fxy;
                curv[(e.b, e.a)] += s * e.qf * e.qb * fxy;
                curv[(e.b, e.b)] += s * e.qb * e.qb * fyy;
            }
        }
        curv *= 0.25;
        h_hh += &curv;
        h_ll += &curv;
        h_lh += &curv;
        symmetrize(&mut h_hh);
        symmetrize(&mut h_ll);
        Some(IntervalTerms {
            value,
            g_lo,
            g_hi,
            h_ll,
            h_lh,
            h_hh,
        })
    }

    fn barrier_weight(&self) -> f64 {
        self.dt
    }

    fn barrier_value(&self, p: &[f64], tau: f64) -> f64 {
        let w = tau * self.barrier_weight();
        let mut v = 0.0;
        for (x, pi) in p.iter().zip(&self.pi) {
            if *x <= 0.0 {
                return f64::INFINITY;
            }
            v -= w * pi * x.ln();
        }
        v
    }

    fn merit(&self, knots: &[Vec<f64>], tau: f64) -> f64 {
        let k = knots.len() - 1;
        let mut total = 0.0;
        for j in 1..k {
            total += self.barrier_value(&knots[j], tau);
            if total.is_infinite() {
                return total;
            }
        }
        for j in 0..k {
            total += self.interval_value(&knots[j], &knots[j + 1]);
        }
        total
    }

    /// Reduces a full-coordinate vector to the mass-preserving chart.
    fn reduce_vec(&self, g: &DVector<f64>) -> DVector<f64> {
        let p = self.pivot;
        let idx = self.free_indices();
        DVector::from_iterator(idx.len(), idx.iter().map(|&i| g[i] - g[p]))
    }

    fn reduce_mat(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.pivot;
        let idx = self.free_indices();
        let m = idx.len();
        DMatrix::from_fn(m, m, |r, c| {
            let (i, j) = (idx[r], idx[c]);
            h[(i, j)] - h[(i, p)] - h[(p, j)] + h[(p, p)]
        })
    }

    fn free_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| i != self.pivot).collect()
    }

    fn expand(&self, y: &DVector<f64>) -> Vec<f64> {
        let mut dp = vec![0.0; self.n()];
        let mut sum = 0.0;
        for (r, &i) in self.free_indices().iter().enumerate() {
            dp[i] = y[r];
            sum += y[r];
        }
        dp[self.pivot] = -sum;
        dp
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Solves the symmetric positive definite block-tridiagonal system with
/// diagonal blocks `diag` and super-diagonal blocks `upper` (block `(j, j+1)`).
fn solve_block_tridiagonal(
    diag: &[DMatrix<f64>],
    upper: &[DMatrix<f64>],
    rhs: &[DVector<f64>],
) -> Option<Vec<DVector<f64>>> {
    let nb = diag.len();
    let scale: Vec<DVector<f64>> = diag
        .iter()
        .map(|d| DVector::from_iterator(d.nrows(), d.diagonal().iter().map(|v| 1.0 / v.max(1e-300).sqrt())))
        .collect();
    let sdiag: Vec<DMatrix<f64>> = diag
        .iter()
        .zip(&scale)
        .map(|(d, s)| DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| s[i] * d[(i, j)] * s[j]))
        .collect();
    let supper: Vec<DMatrix<f64>> = upper
        .iter()
        .enumerate()
        .map(|(j, u)| DMatrix::from_fn(u.nrows(), u.ncols(), |r, c| scale[j][r] * u[(r, c)] * scale[j + 1][c]))
        .collect();
    let srhs: Vec<DVector<f64>> = rhs.iter().zip(&scale).map(|(b, s)| b.component_mul(s)).collect();

    let mut shift = 0.0;
    loop {
        if let Some(x) = thomas(&sdiag, &supper, &srhs, shift) {
            return Some(x.into_iter().zip(&scale).map(|(x, s)| x.component_mul(s)).collect());
        }
        shift = if shift == 0.0 { 1e-14 } else { shift * 100.0 };
        if shift > 1e-4 || nb == 0 {
            return None;
        }
    }
}

fn thomas(
    diag: &[DMatrix<f64>],
    upper: &[DMatrix<f64>],
    rhs: &[DVector<f64>],
    shift: f64,
) -> Option<Vec<DVector<f64>>> {
    let nb = diag.len();
    let mut chols: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(nb);
    let mut y: Vec<DVector<f64>> = Vec::with_capacity(nb);
    for j in 0..nb {
        let mut s = diag[j].clone();
        for i in 0..s.nrows() {
            s[(i, i)] += shift;
        }
        let mut b = rhs[j].clone();
        if j > 0 {
            let u = &upper[j - 1];
            let w = chols[j - 1].solve(u);
            s -= u.transpose() * w;
            b -= u.transpose() * chols[j - 1].solve(&y[j - 1]);
        }
        chols.push(s.cholesky()?);
        y.push(b);
    }
    let mut x = vec![DVector::zeros(0); nb];
    for j in (0..nb).rev() {
        let mut b = y[j].clone();
        if j + 1 < nb {
            b -= &upper[j] * &x[j + 1];
        }
        x[j] = chols[j].solve(&b);
    }
    Some(x)
}

fn masses(space: &PoissonSpace, rho: &[f64]) -> Vec<f64> {
    rho.iter().enumerate().map(|(s, r)| r * space.pi(s)).collect()
}

fn initial_knots(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    intervals: usize,
    mode: InitMode,
    warm: Option<&CEPath>,
) -> Result<Vec<Vec<f64>>> {
    let times = uniform_grid(1.0, intervals);
    let pi = space.reference().weights();
    let mut knots = Vec::with_capacity(intervals + 1);
    for (k, &t) in times.iter().enumerate() {
        if k == 0 {
            knots.push(masses(space, mu0.values()));
            continue;
        }
        if k == intervals {
            knots.push(masses(space, mu1.values()));
            continue;
        }
        let rho: Vec<f64> = match (warm, mode) {
            (Some(path), _) => {
                let w = 1e-3 * t * (1.0 - t);
                let r = path.density_at(t * path.horizon());
                r.iter().map(|v| (1.0 - w) * v + w).collect()
            }
            (None, InitMode::Linear) => {
                let w = t * (1.0 - t);
                mu0.values()
                    .iter()
                    .zip(mu1.values())
                    .map(|(a, b)| (1.0 - w) * ((1.0 - t) * a + t * b) + w)
                    .collect()
            }
            (None, InitMode::OuBridge) => {
                let sigma = 2.0 * t * (1.0 - t);
                let op = expm_kernel(space.sites(), sigma)?;
                let a = semigroup_apply(space, &op, mu0.values())?;
                let b = semigroup_apply(space, &op, mu1.values())?;
                a.iter()
                    .zip(&b)
                    .map(|(a, b)| ((1.0 - t) * a + t * b).max(1e-300))
                    .collect()
            }
        };
        let mut p = masses(space, &rho);
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        if p.iter().zip(pi).any(|(v, _)| !(*v > 0.0)) {
            return Err(Error::Solver("initial path is not strictly positive".into()));
        }
        knots.push(p);
    }
    Ok(knots)
}

fn build_path(
    problem: &Problem,
    mu0: &Density,
    mu1: &Density,
    knots: &[Vec<f64>],
) -> (CEPath, f64) {
    let space = problem.space;
    let k = knots.len() - 1;
    let mut densities = Vec::with_capacity(k + 1);
    densities.push(mu0.clone());
    for p in &knots[1..k] {
        densities.push(Density::from_vec_unchecked(
            p.iter().enumerate().map(|(s, v)| v / space.pi(s)).collect(),
        ));
    }
    densities.push(mu1.clone());
    let mut fluxes = Vec::with_capacity(k);
    let mut value = 0.0;
    for j in 0..k {
        match problem.interval_flux(&knots[j], &knots[j + 1]) {
            Some((v, atoms)) => {
                value += v;
                fluxes.push(FluxMeasure::new(atoms));
            }
            None => {
                value = f64::INFINITY;
                fluxes.push(FluxMeasure::zero(space));
            }
        }
    }
    (CEPath::from_parts(uniform_grid(1.0, k), densities, fluxes), value)
}

fn check_endpoints(space: &PoissonSpace, mu0: &Density, mu1: &Density) -> Result<()> {
    for mu in [mu0, mu1] {
        if mu.len() != space.n_states() {
            return Err(Error::DimensionMismatch {
                expected: space.n_states(),
                got: mu.len(),
            });
        }
    }
    Ok(())
}

struct NewtonOutcome {
    knots: Vec<Vec<f64>>,
    iterations: usize,
    stationarity: f64,
    tau: f64,
    status: SolverStatus,
}

fn newton(problem: &Problem, mut knots: Vec<Vec<f64>>, cfg: &SolverConfig) -> NewtonOutcome {
    let k = knots.len() - 1;
    let nb = k - 1;
    let mut tau = cfg.barrier.initial;
    let mut iterations = 0;
    let mut stationarity = f64::INFINITY;
    let mut status = SolverStatus::Converged;
    'stages: loop {
        let last_stage = tau <= cfg.barrier.floor;
        let stage_tol = if last_stage { 0.1 * cfg.kkt_tol } else { 0.1 * tau };
        loop {
            if iterations >= cfg.max_iters {
                status = SolverStatus::MaxIterations;
                break 'stages;
            }
            let terms: Vec<IntervalTerms> = match (0..k)
                .map(|j| problem.interval_terms(&knots[j], &knots[j + 1]))
                .collect::<Option<Vec<_>>>()
            {
                Some(t) => t,
                None => {
                    status = SolverStatus::Stalled;
                    break 'stages;
                }
            };
            let bw = tau * problem.barrier_weight();
            let mut diag = Vec::with_capacity(nb);
            let mut upper = Vec::with_capacity(nb.saturating_sub(1));
            let mut rhs = Vec::with_capacity(nb);
            let mut merit0 = 0.0;
            for t in &terms {
                merit0 += t.value;
            }
            for j in 1..k {
                let p = &knots[j];
                let mut g = &terms[j - 1].g_hi + &terms[j].g_lo;
                let mut h = &terms[j - 1].h_hh + &terms[j].h_ll;
                for s in 0..p.len() {
                    g[s] -= bw * problem.pi[s] / p[s];
                    h[(s, s)] += bw * problem.pi[s] / (p[s] * p[s]);
                }
                merit0 += problem.barrier_value(p, tau);
                rhs.push(-problem.reduce_vec(&g));
                diag.push(problem.reduce_mat(&h));
                if j + 1 < k {
                    upper.push(problem.reduce_mat(&terms[j].h_lh));
                }
            }
            let Some(step) = solve_block_tridiagonal(&diag, &upper, &rhs) else {
                status = SolverStatus::Stalled;
                break 'stages;
            };
            let decrement: f64 = step.iter().zip(&rhs).map(|(x, b)| x.dot(b)).sum::<f64>().max(0.0);
            stationarity = 0.5 * decrement;
            if stationarity <= stage_tol {
                break;
            }
            let dps: Vec<Vec<f64>> = step.iter().map(|y| problem.expand(y)).collect();
            let mut alpha: f64 = 1.0;
            for (j, dp) in dps.iter().enumerate() {
                for (x, d) in knots[j + 1].iter().zip(dp) {
                    if *d < 0.0 {
                        alpha = alpha.min(0.99 * x / -d);
                    }
                }
            }
            let mut accepted = false;
            while alpha > 1e-14 {
                let mut trial = knots.clone();
                for (j, dp) in dps.iter().enumerate() {
                    for (x, d) in trial[j + 1].iter_mut().zip(dp) {
                        *x += alpha * d;
                    }
                }
                let m = problem.merit(&trial, tau);
                if m <= merit0 - 1e-4 * alpha * decrement {
                    knots = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            iterations += 1;
            if !accepted {
                // Round-off floor of the merit function: accept the point if
                // the predicted decrease is below it.
                if stationarity <= 1e-13 * (1.0 + merit0.abs()) {
                    break;
                }
                if last_stage {
                    status = SolverStatus::Stalled;
                    break 'stages;
                }
                break;
            }
        }
        if last_stage {
            break;
        }
        tau = (tau * cfg.barrier.decay).max(cfg.barrier.floor);
    }
    NewtonOutcome {
        knots,
        iterations,
        stationarity,
        tau,
        status,
    }
}

fn solve_impl(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    eps: f64,
    cfg: &SolverConfig,
    warm: Option<&CEPath>,
) -> Result<Solution> {
    cfg.validate()?;
    check_endpoints(space, mu0, mu1)?;
    if !(eps >= 0.0) {
        return Err(Error::Domain(format!("entropic parameter must be ≥ 0, got {eps}")));
    }
    let started = Stopwatch::start();
    let k = cfg.intervals;
    let problem = Problem::new(space, k, eps);

    if eps == 0.0 && mu0.values() == mu1.values() {
        let path = CEPath::constant(space, mu0, 1.0, k);
        let report = SolverReport {
            objective: 0.0,
            status: SolverStatus::Trivial,
            kkt_residual: 0.0,
            stationarity: 0.0,
            feasibility: 0.0,
            optimality_gap: 0.0,
            iterations: 0,
            intervals: k,
            refinement: None,
            wall_time: started.seconds(),
        };
        return Ok(Solution { value: 0.0, path, report });
    }

    let knots = initial_knots(space, mu0, mu1, k, cfg.init, warm)?;
    let outcome = if k == 1 {
        NewtonOutcome {
            knots,
            iterations: 0,
            stationarity: 0.0,
            tau: 0.0,
            status: SolverStatus::Converged,
        }
    } else {
        newton(&problem, knots, cfg)
    };
    let (path, value) = build_path(&problem, mu0, mu1, &outcome.knots);
    let feasibility = if value.is_finite() { ce_residual(space, &path) } else { 0.0 };
    let mut status = outcome.status;
    if value.is_infinite() {
        status = SolverStatus::Infinite;
    }
    let barrier_mass = outcome.tau * problem.barrier_weight() * (k - 1) as f64;
    let kkt_residual = outcome.stationarity.max(feasibility);
    if status == SolverStatus::Converged && kkt_residual > cfg.kkt_tol {
        status = SolverStatus::Stalled;
    }
    let report = SolverReport {
        objective: value,
        status,
        kkt_residual,
        stationarity: outcome.stationarity,
        feasibility,
        optimality_gap: barrier_mass + outcome.stationarity,
        iterations: outcome.iterations,
        intervals: k,
        refinement: None,
        wall_time: started.seconds(),
    };
    Ok(Solution { value, path, report })
}

/// `𝒲²(μ₀, μ₁)` on the discrete grid, with a feasible path attaining it.
pub fn solve_distance(space: &PoissonSpace, mu0: &Density, mu1: &Density, cfg: &SolverConfig) -> Result<Solution> {
    solve_impl(space, mu0, mu1, 0.0, cfg, None)
}

/// `𝒥_ε(μ₀, μ₁)`: the action plus `ε` times the time-integrated Fisher
/// information, minimised over discrete paths.
pub fn solve_entropic(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<Solution> {
    solve_impl(space, mu0, mu1, eps, cfg, None)
}

/// As [`solve_entropic`], started from the densities of an existing path
/// (typically the solution on a coarser grid).
pub fn solve_warm(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    eps: f64,
    cfg: &SolverConfig,
    start: &CEPath,
) -> Result<Solution> {
    solve_impl(space, mu0, mu1, eps, cfg, Some(start))
}

/// Outcome of [`project_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientProjection {
    pub path: CEPath,
    /// `φ_k` per interval, grounded to zero at one state per component.
    pub potentials: Vec<Vec<f64>>,
    /// Some weighted Laplacian was disconnected by zero-density edges.
    pub pseudo_inverse: bool,
}

fn gradient_fluxes(
    space: &PoissonSpace,
    path: &CEPath,
    rate: &dyn Fn(usize) -> Vec<f64>,
) -> Result<GradientProjection> {
    let problem = Problem::new(space, path.intervals(), 0.0);
    let mut fluxes = Vec::with_capacity(path.intervals());
    let mut potentials = Vec::with_capacity(path.intervals());
    let mut pseudo_inverse = false;
    for k in 0..path.intervals() {
        let pbar = masses(space, &path.midpoint(k));
        let c = problem.weights(&pbar);
        let lap = problem
            .laplacian(&c)
            .ok_or_else(|| Error::Solver(format!("weighted Laplacian of interval {k} is not factorisable")))?;
        let mut r = rate(k);
        if lap.n_components > 1 {
            pseudo_inverse = true;
            let mut net = vec![0.0; lap.n_components];
            let mut size = vec![0usize; lap.n_components];
            for (i, v) in r.iter().enumerate() {
                net[lap.component[i]] += v;
                size[lap.component[i]] += 1;
            }
            for (i, v) in r.iter_mut().enumerate() {
                *v -= net[lap.component[i]] / size[lap.component[i]] as f64;
            }
        }
        let (phi, _) = lap.solve(&r, 0.0);
        let atoms = problem
            .edges
            .iter()
            .zip(&c)
            .map(|(e, w)| w * (phi[e.b] - phi[e.a]))
            .collect();
        fluxes.push(FluxMeasure::new(atoms));
        potentials.push(phi);
    }
    Ok(GradientProjection {
        path: CEPath::from_parts(path.times().to_vec(), path.densities().to_vec(), fluxes),
        potentials,
        pseudo_inverse,
    })
}

/// Replaces every flux by its `ρ̂ π m`-weighted projection onto gradient
/// fields, `V_k = ρ̂_k π m ⊙ Dφ_k` with the same divergence. The action does
/// not increase.
pub fn project_gradient(space: &PoissonSpace, path: &CEPath) -> Result<GradientProjection> {
    gradient_fluxes(space, path, &|k| flux_divergence(space, path.flux(k).atoms()))
}

/// Keeps the densities of `path` and replaces the fluxes by the least-action
/// fluxes satisfying the discrete continuity equation exactly.
pub fn project_to_feasible(space: &PoissonSpace, path: &CEPath) -> Result<CEPath> {
    let rate = |k: usize| -> Vec<f64> {
        let dt = path.dt(k);
        (0..space.n_states())
            .map(|s| (path.density(k + 1).get(s) - path.density(k).get(s)) * space.pi(s) / dt)
            .collect()
    };
    Ok(gradient_fluxes(space, path, &rate)?.path)
}

/// Minimising path between `μ₀` and `μ₁` in gradient form, with its potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct Geodesic {
    pub path: CEPath,
    pub potentials: Vec<Vec<f64>>,
    pub pseudo_inverse: bool,
    pub value: f64,
    pub report: SolverReport,
}

pub fn geodesic(space: &PoissonSpace, mu0: &Density, mu1: &Density, cfg: &SolverConfig) -> Result<Geodesic> {
    let sol = solve_distance(space, mu0, mu1, cfg)?;
    if !sol.report.succeeded() {
        return Err(Error::Solver(format!("distance solve ended with status {:?}", sol.report.status)));
    }
    let proj = project_gradient(space, &sol.path)?;
    Ok(Geodesic {
        path: proj.path,
        potentials: proj.potentials,
        pseudo_inverse: proj.pseudo_inverse,
        value: sol.value,
        report: sol.report,
    })
}

/// Richardson analysis of a refinement ladder.
pub fn richardson(rows: &[RefinementRow]) -> RefinementTable {
    let n = rows.len();
    let mut table = RefinementTable {
        rows: rows.to_vec(),
        order: None,
        extrapolate: None,
        error_estimate: 0.0,
        monotone: true,
    };
    if n < 2 {
        table.error_estimate = f64::INFINITY;
        return table;
    }
    let d: Vec<f64> = rows.windows(2).map(|w| w[1].value - w[0].value).collect();
    let last = d[n - 2];
    if d.iter().all(|v| *v == 0.0) {
        table.order = None;
        table.extrapolate = Some(rows[n - 1].value);
        return table;
    }
    let same_sign = d.iter().all(|v| v.signum() == last.signum() || *v == 0.0);
    let shrinking = d.windows(2).all(|w| w[1].abs() <= w[0].abs());
    table.monotone = same_sign && shrinking;
    let ratio_k = rows[n - 1].intervals as f64 / rows[n - 2].intervals as f64;
    if !table.monotone {
        table.error_estimate = d.iter().rev().take(2).fold(0.0, |m, v| m.max(v.abs()));
        return table;
    }
    let order = if n >= 3 && d[n - 3] != 0.0 {
        let prev_ratio = rows[n - 2].intervals as f64 / rows[n - 3].intervals as f64;
        let q = (d[n - 3] / last).ln() / prev_ratio.ln();
        if q.is_finite() && q > 0.0 {
            q
        } else {
            1.0
        }
    } else {
        1.0
    };
    let correction = last / (ratio_k.powf(order) - 1.0);
    table.order = Some(order);
    table.extrapolate = Some(rows[n - 1].value + correction);
    table.error_estimate = correction.abs();
    table
}

/// Solves on each `K` of an increasing ladder (each warm-started from the
/// previous) and attaches the Richardson table. The report otherwise
/// describes the finest solve.
pub fn refine_entropic(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    eps: f64,
    ladder: &[usize],
    cfg: &SolverConfig,
) -> Result<(Solution, SolverReport)> {
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!("refinement ladder must be increasing, got {ladder:?}")));
    }
    let started = Stopwatch::start();
    let mut rows = Vec::new();
    let mut prev: Option<Solution> = None;
    let mut iterations = 0;
    for &k in ladder {
        let c = cfg.with_intervals(k);
        let sol = match &prev {
            Some(p) if p.report.status != SolverStatus::Trivial => solve_warm(space, mu0, mu1, eps, &c, &p.path)?,
            _ => solve_impl(space, mu0, mu1, eps, &c, None)?,
        };
        iterations += sol.report.iterations;
        rows.push(RefinementRow {
            intervals: k,
            value: sol.value,
        });
        prev = Some(sol);
    }
    let finest = prev.unwrap();
    let mut report = finest.report.clone();
    report.iterations = iterations;
    report.refinement = Some(richardson(&rows));
    report.wall_time = started.seconds();
    Ok((finest, report))
}

pub fn refine(
    space: &PoissonSpace,
    mu0: &Density,
    mu1: &Density,
    ladder: &[usize],
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    Ok(refine_entropic(space, mu0, mu1, 0.0, ladder, cfg)?.1)
}

/// `𝒲(β₀, β₁)` on the two-state lattice `{0, 1}` with intensity `m`, where
/// `β` is the mass at state 1:
///
/// ```text
/// 𝒲 = ∫_{β₀}^{β₁} dβ / θ(m(1 - β), β)^{1/2}
/// ```
///
/// Each half of the range is integrated by double-exponential quadrature after
/// the substitution `β = u²` (resp. `1 - β = v²`), which removes the inverse
/// square-root singularity at the endpoints.
pub fn two_point_oracle(m: f64, beta0: f64, beta1: f64) -> Result<f64> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Domain(format!("intensity must be positive, got {m}")));
    }
    for b in [beta0, beta1] {
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::Domain(format!("β = {b} is outside [0, 1]")));
        }
    }
    if beta0 == beta1 {
        return Ok(0.0);
    }
    let (lo, hi) = if beta0 < beta1 { (beta0, beta1) } else { (beta1, beta0) };
    let mid = 0.5 * (lo + hi);
    let f = |a: f64, b: f64| 1.0 / theta(m * a, b).sqrt();
    let left = quadrature::double_exponential::integrate(
        |u: f64| 2.0 * u * f(1.0 - u * u, u * u),
        lo.sqrt(),
        mid.sqrt(),
        1e-14,
    );
    let right = quadrature::double_exponential::integrate(
        |v: f64| 2.0 * v * f(v * v, 1.0 - v * v),
        (1.0 - hi).sqrt(),
        (1.0 - mid).sqrt(),
        1e-14,
    );
    Ok(left.integral + right.integral)
}

/// Densities `δ₀ ↦ β` on the two-state lattice used by [`two_point_oracle`].
pub fn two_point_density(space: &PoissonSpace, beta: f64) -> Result<Density> {
    if space.n_states() != 2 {
        return Err(Error::Domain("two-point densities need the lattice d = 1, N = 1".into()));
    }
    Density::from_masses(space, &[1.0 - beta, beta])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::SiteSpace;
    use crate::continuity::{ou_path, path_speed};

    const W_TWO_POINT: f64 = 1.558_707_451_453_659_3;

    fn space(m: Vec<f64>, caps: Vec<usize>) -> PoissonSpace {
        PoissonSpace::new(SiteSpace::new(m, caps).unwrap()).unwrap()
    }

    #[test]
    fn oracle_values() {
        assert!((two_point_oracle(1.0, 0.0, 1.0).unwrap() - W_TWO_POINT).abs() < 1e-11);
        assert!((two_point_oracle(1.0, 0.0, 0.5).unwrap() - 0.779_353_725_726_829_7).abs() < 1e-11);
        assert!((two_point_oracle(2.0, 0.2, 0.7).unwrap() - 0.595_323_645_096_237_3).abs() < 1e-11);
        assert!((two_point_oracle(2.0, 0.0, 1.0).unwrap() - 1.300_938_284_849_573_2).abs() < 1e-11);
        assert_eq!(two_point_oracle(1.0, 0.3, 0.3).unwrap(), 0.0);
        assert_eq!(
            two_point_oracle(1.5, 0.1, 0.8).unwrap(),
            two_point_oracle(1.5, 0.8, 0.1).unwrap()
        );
        assert!(two_point_oracle(1.0, -0.1, 0.5).is_err());
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let sp = space(vec![1.0, 0.7], vec![2, 2]);
        for eps in [0.0, 0.3] {
            let problem = Problem::new(&sp, 4, eps);
            let n = sp.n_states();
            let lo: Vec<f64> = (0..n).map(|s| 0.5 / n as f64 + 0.5 * sp.pi(s)).collect();
            let hi: Vec<f64> = (0..n).map(|s| (1.0 + (s % 3) as f64) * sp.pi(s)).collect();
            let z: f64 = hi.iter().sum();
            let hi: Vec<f64> = hi.iter().map(|v| v / z).collect();
            let t = problem.interval_terms(&lo, &hi).unwrap();
            assert!((t.value - problem.interval_value(&lo, &hi)).abs() < 1e-12);
            // Directions must preserve mass, so perturb along e_i - e_0.
            let h = 1e-6;
            let shift = |v: &[f64], i: usize, s: f64| -> Vec<f64> {
                let mut w = v.to_vec();
                w[i] += s;
                w[0] -= s;
                w
            };
            let dir = |g: &DVector<f64>, i: usize| g[i] - g[0];
            for i in 1..n {
                let fd = (problem.interval_value(&lo, &shift(&hi, i, h)) - problem.interval_value(&lo, &shift(&hi, i, -h)))
                    / (2.0 * h);
                assert!((fd - dir(&t.g_hi, i)).abs() < 1e-5 * (1.0 + fd.abs()), "g_hi {i}");
                let fd = (problem.interval_value(&shift(&lo, i, h), &hi) - problem.interval_value(&shift(&lo, i, -h), &hi))
                    / (2.0 * h);
                assert!((fd - dir(&t.g_lo, i)).abs() < 1e-5 * (1.0 + fd.abs()), "g_lo {i}");
                let tu = problem.interval_terms(&lo, &shift(&hi, i, h)).unwrap();
                let td = problem.interval_terms(&lo, &shift(&hi, i, -h)).unwrap();
                let tl = problem.interval_terms(&shift(&lo, i, h), &hi).unwrap();
                let tm = problem.interval_terms(&shift(&lo, i, -h), &hi).unwrap();
                let second = |m: &DMatrix<f64>, j: usize| m[(j, i)] - m[(0, i)] - m[(j, 0)] + m[(0, 0)];
                for j in 1..n {
                    let fd_hh = (dir(&tu.g_hi, j) - dir(&td.g_hi, j)) / (2.0 * h);
                    assert!((fd_hh - second(&t.h_hh, j)).abs() < 1e-4 * (1.0 + fd_hh.abs()), "h_hh {j} {i}");
                    let fd_lh = (dir(&tu.g_lo, j) - dir(&td.g_lo, j)) / (2.0 * h);
                    assert!((fd_lh - second(&t.h_lh, j)).abs() < 1e-4 * (1.0 + fd_lh.abs()), "h_lh {j} {i}");
                    let fd_ll = (dir(&tl.g_lo, j) - dir(&tm.g_lo, j)) / (2.0 * h);
                    assert!((fd_ll - second(&t.h_ll, j)).abs() < 1e-4 * (1.0 + fd_ll.abs()), "h_ll {j} {i}");
                }
            }
        }
    }

    #[test]
    fn equal_endpoints_give_constant_path() {
        let sp = space(vec![1.0], vec![4]);
        let mu = Density::reference(&sp);
        let sol = solve_distance(&sp, &mu, &mu, &SolverConfig::default()).unwrap();
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.report.status, SolverStatus::Trivial);
        let g = geodesic(&sp, &mu, &mu, &SolverConfig::default()).unwrap();
        assert!(g.potentials.iter().all(|p| p.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn two_point_distance_approaches_oracle() {
        let sp = space(vec![1.0], vec![1]);
        let d0 = Density::dirac(&sp, &[0]).unwrap();
        let d1 = Density::dirac(&sp, &[1]).unwrap();
        let cfg = SolverConfig::default().with_intervals(64);
        let sol = solve_distance(&sp, &d0, &d1, &cfg).unwrap();
        assert!(sol.report.succeeded(), "{:?}", sol.report);
        let w = sol.value.sqrt();
        assert!((w - W_TWO_POINT).abs() / W_TWO_POINT < 5e-3, "{w}");
        assert!(ce_residual(&sp, &sol.path) < 1e-12);
        assert!((action(&sp, &sol.path) - sol.value).abs() < 1e-10);
    }

    #[test]
    fn solver_beats_ou_bridge_and_is_symmetric() {
        let sp = space(vec![1.0], vec![6]);
        let mu0 = Density::normalized(&sp, (0..7).map(|s| 1.0 + s as f64).collect()).unwrap();
        let mu1 = Density::normalized(&sp, (0..7).map(|s| (0.4 * s as f64).exp()).collect()).unwrap();
        let cfg = SolverConfig::default().with_intervals(16);
        let fwd = solve_distance(&sp, &mu0, &mu1, &cfg).unwrap();
        let bwd = solve_distance(&sp, &mu1, &mu0, &cfg).unwrap();
        assert!(fwd.report.succeeded() && bwd.report.succeeded());
        assert!((fwd.value - bwd.value).abs() <= 2.0 * (fwd.report.slack() + bwd.report.slack()) + 1e-12);
        let bridge = project_to_feasible(&sp, &ou_path(&sp, &mu0, 1.0, 16).unwrap()).unwrap();
        let end = bridge.end().clone();
        let to_end = solve_distance(&sp, &mu0, &end, &cfg).unwrap();
        assert!(to_end.value <= action(&sp, &bridge) + to_end.report.slack());
        let other = solve_distance(&sp, &mu0, &mu1, &SolverConfig { init: InitMode::OuBridge, ..cfg }).unwrap();
        assert!((other.value - fwd.value).abs() < 1e-8);
        let speed = path_speed(&sp, &fwd.path);
        let mean = speed.iter().sum::<f64>() / speed.len() as f64;
        assert!(speed.iter().all(|v| (v - mean).abs() < 0.05 * mean));
    }

    #[test]
    fn projection_is_idempotent() {
        let sp = space(vec![1.0, 0.5], vec![3, 2]);
        let mu0 = Density::normalized(&sp, (0..12).map(|s| 1.0 + (s % 5) as f64).collect()).unwrap();
        let mu1 = Density::reference(&sp);
        let g = geodesic(&sp, &mu0, &mu1, &SolverConfig::default().with_intervals(8)).unwrap();
        let again = project_gradient(&sp, &g.path).unwrap();
        for k in 0..8 {
            for (a, b) in again.path.flux(k).atoms().iter().zip(g.path.flux(k).atoms()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert!(!g.pseudo_inverse);
    }

    #[test]
    fn richardson_first_order() {
        let rows: Vec<RefinementRow> = [8, 16, 32]
            .iter()
            .map(|&k| RefinementRow {
                intervals: k,
                value: 2.0 + 1.0 / k as f64,
            })
            .collect();
        let t = richardson(&rows);
        assert!(t.monotone);
        assert!((t.order.unwrap() - 1.0).abs() < 1e-9);
        assert!((t.extrapolate.unwrap() - 2.0).abs() < 1e-12);
        let bad = richardson(&[
            RefinementRow { intervals: 8, value: 1.0 },
            RefinementRow { intervals: 16, value: 1.1 },
            RefinementRow { intervals: 32, value: 1.0 },
        ]);
        assert!(!bad.monotone && bad.extrapolate.is_none());
    }
}
