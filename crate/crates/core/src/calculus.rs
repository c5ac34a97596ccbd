//! Difference calculus on the truncated lattice.
//!
//! Observables are plain slices indexed by state, edge fields are slices
//! indexed by edge (see [`ConfigLattice::edges`](crate::ConfigLattice::edges)).
//! Edges exist only below the cap, so `D`, `∇*` and the generator all describe
//! the birth–death chain with births censored at `N_x`.

use crate::config_space::{Density, PoissonSpace};
use crate::logmean::{alpha, log_difference_product, theta};

/// Atomic flux `ν({η} × {x})` on the edges. Its density with respect to
/// `π ⊗ m` is the velocity `w = atoms / (π(η) m_x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxMeasure {
    atoms: Vec<f64>,
}

impl FluxMeasure {
    pub fn new(atoms: Vec<f64>) -> Self {
        Self { atoms }
    }

    pub fn zero(space: &PoissonSpace) -> Self {
        Self { atoms: vec![0.0; space.n_edges()] }
    }

    /// `ν = w (π ⊗ m)`.
    pub fn from_velocity(space: &PoissonSpace, w: &[f64]) -> Self {
        Self {
            atoms: w
                .iter()
                .enumerate()
                .map(|(e, w)| w * space.edge_weight(e))
                .collect(),
        }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn atoms_mut(&mut self) -> &mut [f64] {
        &mut self.atoms
    }

    pub fn velocity(&self, space: &PoissonSpace) -> Vec<f64> {
        self.atoms
            .iter()
            .enumerate()
            .map(|(e, a)| a / space.edge_weight(e))
            .collect()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.atoms
    }
}

/// `D_x F(η) = F(η + δₓ) - F(η)` on every edge.
pub fn difference(space: &PoissonSpace, f: &[f64]) -> Vec<f64> {
    space
        .lattice()
        .edges()
        .iter()
        .map(|e| f[e.target] - f[e.source])
        .collect()
}

/// Skorokhod divergence `∇*u(η) = Σ_x η_x u(η - δₓ, x) - Σ_x m_x u(η, x)`,
/// with `u` vanishing on the missing slots at the cap.
pub fn skorokhod_div(space: &PoissonSpace, u: &[f64]) -> Vec<f64> {
    let lat = space.lattice();
    let m = space.sites().intensity();
    let mut out = vec![0.0; space.n_states()];
    for (e, edge) in lat.edges().iter().enumerate() {
        out[edge.target] += lat.count(edge.target, edge.site) as f64 * u[e];
        out[edge.source] -= m[edge.site] * u[e];
    }
    out
}

/// `L F = -∇* D F`.
pub fn generator_apply(space: &PoissonSpace, f: &[f64]) -> Vec<f64> {
    let mut out = skorokhod_div(space, &difference(space, f));
    out.iter_mut().for_each(|v| *v = -*v);
    out
}

/// Divergence of a flux in atomic form: inflow minus outflow,
/// `Σ_x ν(η - δₓ, x) - Σ_x ν(η, x)`.
pub fn flux_divergence(space: &PoissonSpace, atoms: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.n_states()];
    for (e, edge) in space.lattice().edges().iter().enumerate() {
        out[edge.target] += atoms[e];
        out[edge.source] -= atoms[e];
    }
    out
}

/// Relative entropy `H(μ|π) = Σ ρ log ρ π` with `0 log 0 = 0`.
pub fn entropy(space: &PoissonSpace, mu: &Density) -> f64 {
    mu.values()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(s, &r)| r * r.ln() * space.pi(s))
        .sum()
}

/// Fisher information `I(μ|π) = Σ_edges Dρ D log ρ π m`; `+∞` as soon as an
/// edge joins a zero and a non-zero value of `ρ`.
pub fn fisher(space: &PoissonSpace, mu: &Density) -> f64 {
    let rho = mu.values();
    space
        .lattice()
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let v = log_difference_product(rho[edge.target], rho[edge.source]);
            if v == 0.0 {
                0.0
            } else {
                v * space.edge_weight(e)
            }
        })
        .sum()
}

/// `ρ̂(η, x) = θ(ρ(η), ρ(η + δₓ))`.
pub fn rho_hat(space: &PoissonSpace, mu: &Density) -> Vec<f64> {
    let rho = mu.values();
    space
        .lattice()
        .edges()
        .iter()
        .map(|e| theta(rho[e.source], rho[e.target]))
        .collect()
}

/// Kinetic energy `𝓛(μ, ν) = Σ_edges w²/ρ̂ π m = Σ_edges ν²/(ρ̂ π m)`.
pub fn lagrangian(space: &PoissonSpace, mu: &Density, nu: &FluxMeasure) -> f64 {
    lagrangian_of_values(space, mu.values(), nu.atoms())
}

pub(crate) fn lagrangian_of_values(space: &PoissonSpace, rho: &[f64], atoms: &[f64]) -> f64 {
    let edges = space.lattice().edges();
    let mut total = 0.0;
    for (e, edge) in edges.iter().enumerate() {
        let pm = space.edge_weight(e);
        // α(ρ_a, ρ_b, w) π m = ν² / (θ π m)
        let a = alpha(rho[edge.source], rho[edge.target], atoms[e] / pm);
        if a.is_infinite() {
            return f64::INFINITY;
        }
        total += a * pm;
    }
    total
}

/// Per-site comparison of `|ν|(Υ × {x})` with `(½(m_x + I_μ(x)) 𝓛(μ, ν))^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxBoundReport {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub worst_slack: f64,
}

pub fn flux_mass_bound_check(space: &PoissonSpace, mu: &Density, nu: &FluxMeasure) -> FluxBoundReport {
    let lag = lagrangian(space, mu, nu);
    let intensity = crate::config_space::intensity_measure(space, mu);
    let d = space.dim();
    let mut lhs = vec![0.0; d];
    for (e, edge) in space.lattice().edges().iter().enumerate() {
        lhs[edge.site] += nu.atoms()[e].abs();
    }
    let rhs: Vec<f64> = (0..d)
        .map(|x| (0.5 * (space.sites().intensity()[x] + intensity[x]) * lag).sqrt())
        .collect();
    let worst_slack = rhs
        .iter()
        .zip(&lhs)
        .map(|(r, l)| r - l)
        .fold(f64::INFINITY, f64::min);
    FluxBoundReport { lhs, rhs, worst_slack }
}
