//! Truncated configuration lattice over a finite base space and the
//! product-Poisson reference measure living on it.
//!
//! A configuration is an occupancy vector `η ∈ ℕ₀^d` with `η_x ≤ N_x`. States
//! are enumerated lexicographically (last site varies fastest). Directed edges
//! `(η, x) → η + δₓ` exist exactly when `η_x < N_x`; everything downstream
//! (difference operator, fluxes, continuity equation) lives on these edges.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Default cap on the number of enumerated states.
pub const DEFAULT_STATE_BUDGET: usize = 250_000;

/// Finite base space `X = {0, .., d-1}` with intensity weights and per-site caps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteSpace {
    intensity: Vec<f64>,
    caps: Vec<usize>,
}

impl SiteSpace {
    pub fn new(intensity: Vec<f64>, caps: Vec<usize>) -> Result<Self> {
        if intensity.is_empty() {
            return Err(Error::InvalidSites("at least one site is required".into()));
        }
        if intensity.len() != caps.len() {
            return Err(Error::InvalidSites(format!(
                "{} intensities but {} caps",
                intensity.len(),
                caps.len()
            )));
        }
        if let Some(m) = intensity.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidSites(format!("intensity {m} is not positive")));
        }
        if caps.iter().any(|&n| n == 0) {
            return Err(Error::InvalidSites("every cap must be at least 1".into()));
        }
        Ok(Self { intensity, caps })
    }

    /// `d` identical sites.
    pub fn uniform(d: usize, intensity: f64, cap: usize) -> Result<Self> {
        Self::new(vec![intensity; d], vec![cap; d])
    }

    pub fn dim(&self) -> usize {
        self.caps.len()
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn caps(&self) -> &[usize] {
        &self.caps
    }

    /// `∏(N_x + 1)`, or `None` on overflow.
    pub fn state_count(&self) -> Option<usize> {
        self.caps
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n + 1))
    }

    /// Short stable fingerprint of `(d, m, N)`.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim() as u64).to_le_bytes());
        for (m, n) in self.intensity.iter().zip(&self.caps) {
            h.update(m.to_bits().to_le_bytes());
            h.update((*n as u64).to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One directed edge `η → η + δₓ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub site: usize,
    pub target: usize,
}

#[derive(Debug, Clone)]
pub struct ConfigLattice {
    sites: SiteSpace,
    strides: Vec<usize>,
    counts: Vec<usize>,
    edges: Vec<Edge>,
    out_edge: Vec<Option<usize>>,
    in_edge: Vec<Option<usize>>,
    hash: String,
}

impl ConfigLattice {
    pub fn build(sites: SiteSpace) -> Result<Self> {
        Self::with_budget(sites, DEFAULT_STATE_BUDGET)
    }

    pub fn with_budget(sites: SiteSpace, budget: usize) -> Result<Self> {
        let product = || {
            sites
                .caps()
                .iter()
                .map(|n| (n + 1).to_string())
                .collect::<Vec<_>>()
                .join("×")
        };
        let n_states = match sites.state_count() {
            Some(n) if n <= budget => n,
            _ => {
                return Err(Error::BudgetExceeded {
                    product: product(),
                    budget,
                })
            }
        };
        let d = sites.dim();
        let mut strides = vec![1usize; d];
        for x in (0..d.saturating_sub(1)).rev() {
            strides[x] = strides[x + 1] * (sites.caps()[x + 1] + 1);
        }

        let mut counts = vec![0usize; n_states * d];
        for s in 0..n_states {
            let mut rem = s;
            for x in 0..d {
                counts[s * d + x] = rem / strides[x];
                rem %= strides[x];
            }
        }

        let mut edges = Vec::new();
        let mut out_edge = vec![None; n_states * d];
        let mut in_edge = vec![None; n_states * d];
        for s in 0..n_states {
            for x in 0..d {
                if counts[s * d + x] < sites.caps()[x] {
                    let target = s + strides[x];
                    out_edge[s * d + x] = Some(edges.len());
                    in_edge[target * d + x] = Some(edges.len());
                    edges.push(Edge {
                        source: s,
                        site: x,
                        target,
                    });
                }
            }
        }
        let hash = sites.hash();
        Ok(Self {
            sites,
            strides,
            counts,
            edges,
            out_edge,
            in_edge,
            hash,
        })
    }

    pub fn sites(&self) -> &SiteSpace {
        &self.sites
    }

    pub fn dim(&self) -> usize {
        self.sites.dim()
    }

    pub fn n_states(&self) -> usize {
        self.counts.len() / self.dim()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Occupancy vector of state `s`.
    pub fn counts(&self, s: usize) -> &[usize] {
        let d = self.dim();
        &self.counts[s * d..(s + 1) * d]
    }

    pub fn count(&self, s: usize, x: usize) -> usize {
        self.counts[s * self.dim() + x]
    }

    pub fn encode(&self, config: &[usize]) -> Result<usize> {
        if config.len() != self.dim()
            || config.iter().zip(self.sites.caps()).any(|(c, n)| c > n)
        {
            return Err(Error::NotOnLattice(config.to_vec()));
        }
        Ok(config.iter().zip(&self.strides).map(|(c, s)| c * s).sum())
    }

    pub fn decode(&self, s: usize) -> Vec<usize> {
        self.counts(s).to_vec()
    }

    /// Edge leaving `s` in direction `x`, absent at the cap.
    pub fn out_edge(&self, s: usize, x: usize) -> Option<usize> {
        self.out_edge[s * self.dim() + x]
    }

    /// Edge arriving at `s` from `s - δₓ`, absent when `η_x = 0`.
    pub fn in_edge(&self, s: usize, x: usize) -> Option<usize> {
        self.in_edge[s * self.dim() + x]
    }

    /// `true` when `η_x = N_x`.
    pub fn at_boundary(&self, s: usize, x: usize) -> bool {
        self.count(s, x) == self.sites.caps()[x]
    }
}

/// Truncated, renormalized product-Poisson measure.
#[derive(Debug, Clone)]
pub struct ReferenceMeasure {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    site_pmf: Vec<Vec<f64>>,
    tail_mass: Vec<f64>,
}

impl ReferenceMeasure {
    pub fn poisson(lattice: &ConfigLattice) -> Self {
        let sites = lattice.sites();
        let mut site_log = Vec::with_capacity(sites.dim());
        let mut site_pmf = Vec::with_capacity(sites.dim());
        let mut tail_mass = Vec::with_capacity(sites.dim());
        for (&m, &cap) in sites.intensity().iter().zip(sites.caps()) {
            let mut logw = Vec::with_capacity(cap + 1);
            let mut acc = 0.0;
            for n in 0..=cap {
                if n > 0 {
                    acc += m.ln() - (n as f64).ln();
                }
                logw.push(acc);
            }
            let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + logw.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            let logp: Vec<f64> = logw.iter().map(|l| l - lse).collect();
            site_pmf.push(logp.iter().map(|l| l.exp()).collect());
            site_log.push(logp);
            tail_mass.push(poisson_tail(m, cap));
        }
        let n = lattice.n_states();
        let mut log_weights = Vec::with_capacity(n);
        for s in 0..n {
            log_weights.push(
                lattice
                    .counts(s)
                    .iter()
                    .enumerate()
                    .map(|(x, &c)| site_log[x][c])
                    .sum::<f64>(),
            );
        }
        let weights = log_weights.iter().map(|l| l.exp()).collect();
        Self {
            weights,
            log_weights,
            site_pmf,
            tail_mass,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, s: usize) -> f64 {
        self.weights[s]
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Truncated single-site marginal of site `x`.
    pub fn site_pmf(&self, x: usize) -> &[f64] {
        &self.site_pmf[x]
    }

    /// Untruncated Poisson mass above the cap, per site.
    pub fn tail_mass(&self) -> &[f64] {
        &self.tail_mass
    }

    pub fn max_tail_mass(&self) -> f64 {
        self.tail_mass.iter().cloned().fold(0.0, f64::max)
    }
}

/// `P(Poisson(m) > cap)` by direct summation of the terms above the cap.
fn poisson_tail(m: f64, cap: usize) -> f64 {
    let mut log_term = -m + (cap as f64 + 1.0) * m.ln() - ln_factorial(cap + 1);
    let mut sum = 0.0;
    let mut k = cap + 1;
    loop {
        let term = log_term.exp();
        sum += term;
        if term < sum * 1e-18 || term == 0.0 || k > cap + 10_000 {
            break;
        }
        k += 1;
        log_term += m.ln() - (k as f64).ln();
    }
    sum.min(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Lattice together with its reference measure; most operations take this.
#[derive(Debug, Clone)]
pub struct PoissonSpace {
    lattice: ConfigLattice,
    reference: ReferenceMeasure,
}

impl PoissonSpace {
    pub fn new(sites: SiteSpace) -> Result<Self> {
        let lattice = ConfigLattice::build(sites)?;
        let reference = ReferenceMeasure::poisson(&lattice);
        Ok(Self { lattice, reference })
    }

    pub fn lattice(&self) -> &ConfigLattice {
        &self.lattice
    }

    pub fn reference(&self) -> &ReferenceMeasure {
        &self.reference
    }

    pub fn sites(&self) -> &SiteSpace {
        self.lattice.sites()
    }

    pub fn n_states(&self) -> usize {
        self.lattice.n_states()
    }

    pub fn n_edges(&self) -> usize {
        self.lattice.n_edges()
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn pi(&self, s: usize) -> f64 {
        self.reference.weight(s)
    }

    /// Edge weight `π(η)·m_x`, the reference measure `π ⊗ m` on the edge.
    pub fn edge_weight(&self, e: usize) -> f64 {
        let edge = self.lattice.edges()[e];
        self.reference.weight(edge.source) * self.sites().intensity()[edge.site]
    }

    pub fn hash(&self) -> &str {
        self.lattice.hash()
    }
}

/// Probability density `ρ = dμ/dπ` on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    rho: Vec<f64>,
}

/// Normalisation tolerance accepted by [`Density::new`].
pub const DENSITY_MASS_TOL: f64 = 1e-12;

impl Density {
    /// Validates non-negativity and `Σ ρ π = 1`.
    pub fn new(space: &PoissonSpace, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != space.n_states() {
            return Err(Error::DimensionMismatch {
                expected: space.n_states(),
                got: rho.len(),
            });
        }
        if let Some(v) = rho.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidDensity(format!("entry {v} is negative or not finite")));
        }
        let mass: f64 = rho.iter().zip(space.reference().weights()).map(|(r, p)| r * p).sum();
        if (mass - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::InvalidDensity(format!("total mass {mass} differs from 1")));
        }
        Ok(Self { rho })
    }

    /// Skips validation; for internal constructions that preserve mass.
    pub(crate) fn from_vec_unchecked(rho: Vec<f64>) -> Self {
        Self { rho }
    }

    /// The reference measure itself, `ρ ≡ 1`.
    pub fn reference(space: &PoissonSpace) -> Self {
        Self { rho: vec![1.0; space.n_states()] }
    }

    pub fn dirac(space: &PoissonSpace, config: &[usize]) -> Result<Self> {
        let s = space.lattice().encode(config)?;
        let mut rho = vec![0.0; space.n_states()];
        rho[s] = 1.0 / space.pi(s);
        Ok(Self { rho })
    }

    /// Builds a density from non-negative masses `μ(η)`, renormalised to 1.
    pub fn from_masses(space: &PoissonSpace, masses: &[f64]) -> Result<Self> {
        if masses.len() != space.n_states() {
            return Err(Error::DimensionMismatch {
                expected: space.n_states(),
                got: masses.len(),
            });
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidDensity("masses must be finite and non-negative".into()));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDensity("zero total mass".into()));
        }
        let rho = masses
            .iter()
            .enumerate()
            .map(|(s, m)| m / total / space.pi(s))
            .collect();
        Ok(Self { rho })
    }

    /// Normalises an arbitrary non-negative function into a density.
    pub fn normalized(space: &PoissonSpace, unnormalized: Vec<f64>) -> Result<Self> {
        let masses: Vec<f64> = unnormalized
            .iter()
            .enumerate()
            .map(|(s, r)| r * space.pi(s))
            .collect();
        Self::from_masses(space, &masses)
    }

    pub fn values(&self) -> &[f64] {
        &self.rho
    }

    pub fn get(&self, s: usize) -> f64 {
        self.rho[s]
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// `μ(η) = ρ(η)π(η)`.
    pub fn masses(&self, space: &PoissonSpace) -> Vec<f64> {
        self.rho
            .iter()
            .enumerate()
            .map(|(s, r)| r * space.pi(s))
            .collect()
    }

    pub fn total_mass(&self, space: &PoissonSpace) -> f64 {
        self.masses(space).iter().sum()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.rho.iter().all(|&r| r > 0.0)
    }

    /// Total variation distance `½ Σ |ρ - σ| π`.
    pub fn total_variation(&self, other: &Density, space: &PoissonSpace) -> f64 {
        0.5 * self
            .rho
            .iter()
            .zip(&other.rho)
            .enumerate()
            .map(|(s, (a, b))| (a - b).abs() * space.pi(s))
            .sum::<f64>()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.rho
    }

    /// Short fingerprint of the exact density values.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.rho {
            h.update(r.to_bits().to_le_bytes());
        }
        h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `I_μ(x) = Σ_η η_x ρ(η) π(η)`.
pub fn intensity_measure(space: &PoissonSpace, mu: &Density) -> Vec<f64> {
    let lat = space.lattice();
    let mut out = vec![0.0; space.dim()];
    for s in 0..space.n_states() {
        let mass = mu.get(s) * space.pi(s);
        if mass == 0.0 {
            continue;
        }
        for (x, c) in lat.counts(s).iter().enumerate() {
            out[x] += *c as f64 * mass;
        }
    }
    out
}

/// Reduced Campbell measure as an edge table: the atom at `(η, x)` is
/// `(η_x + 1) ρ(η + δₓ) π(η + δₓ)`.
pub fn campbell_measure(space: &PoissonSpace, mu: &Density) -> Vec<f64> {
    let lat = space.lattice();
    lat.edges()
        .iter()
        .map(|e| (lat.count(e.source, e.site) as f64 + 1.0) * mu.get(e.target) * space.pi(e.target))
        .collect()
}

/// Density of the reduced Campbell measure with respect to `π ⊗ I_μ`,
/// `ρ(η + δₓ) / Z_x` with `Z_x = Σ_γ ρ(γ + δₓ) π(γ)`.
///
/// Entries on sites with `I_μ(x) = 0` are `None`.
pub fn campbell_density(space: &PoissonSpace, mu: &Density) -> Vec<Option<f64>> {
    let lat = space.lattice();
    let mut z = vec![0.0; space.dim()];
    for e in lat.edges() {
        z[e.site] += mu.get(e.target) * space.pi(e.source);
    }
    lat.edges()
        .iter()
        .map(|e| (z[e.site] > 0.0).then(|| mu.get(e.target) / z[e.site]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(m: Vec<f64>, caps: Vec<usize>) -> PoissonSpace {
        PoissonSpace::new(SiteSpace::new(m, caps).unwrap()).unwrap()
    }

    #[test]
    fn one_site_cap_two() {
        let sp = space(vec![1.0], vec![2]);
        let lat = sp.lattice();
        assert_eq!(lat.n_states(), 3);
        assert_eq!(
            lat.edges(),
            &[
                Edge { source: 0, site: 0, target: 1 },
                Edge { source: 1, site: 0, target: 2 }
            ]
        );
        let mask: Vec<bool> = (0..3).map(|s| lat.at_boundary(s, 0)).collect();
        assert_eq!(mask, vec![false, false, true]);
        let w = sp.reference().weights();
        assert!((w[0] - 0.4).abs() < 1e-15 && (w[1] - 0.4).abs() < 1e-15 && (w[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn small_lattices() {
        let sp = space(vec![1.0, 1.0], vec![1, 1]);
        assert_eq!(sp.n_states(), 4);
        assert_eq!(sp.n_edges(), 4);
        let sp = space(vec![1.0; 3], vec![12; 3]);
        assert_eq!(sp.n_states(), 2197);
        let w = space(vec![1.0], vec![1]);
        assert_eq!(w.reference().weights(), &[0.5, 0.5]);
    }

    #[test]
    fn lexicographic_order_and_bijection() {
        let sp = space(vec![1.0, 2.0, 0.5], vec![2, 3, 1]);
        let lat = sp.lattice();
        assert_eq!(lat.decode(1), vec![0, 0, 1]);
        assert_eq!(lat.decode(2), vec![0, 1, 0]);
        for s in 0..lat.n_states() {
            assert_eq!(lat.encode(&lat.decode(s)).unwrap(), s);
        }
        let mut expected_edges = 0;
        for s in 0..lat.n_states() {
            for x in 0..3 {
                if !lat.at_boundary(s, x) {
                    expected_edges += 1;
                }
            }
        }
        assert_eq!(lat.n_edges(), expected_edges);
        for e in lat.edges() {
            let mut c = lat.decode(e.source);
            c[e.site] += 1;
            assert_eq!(lat.decode(e.target), c);
        }
        assert!(lat.encode(&[3, 0, 0]).is_err());
    }

    #[test]
    fn budget_error_names_product() {
        let sites = SiteSpace::uniform(3, 1.0, 99).unwrap();
        let err = ConfigLattice::with_budget(sites, 10_000).unwrap_err();
        match err {
            Error::BudgetExceeded { product, .. } => assert_eq!(product, "100×100×100"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_sites() {
        assert!(SiteSpace::new(vec![0.0], vec![2]).is_err());
        assert!(SiteSpace::new(vec![1.0], vec![0]).is_err());
        assert!(SiteSpace::new(vec![1.0, 1.0], vec![2]).is_err());
    }

    #[test]
    fn poisson_one_site_cap_16() {
        let sp = space(vec![1.0], vec![16]);
        assert!((sp.pi(0) - (-1.0f64).exp()).abs() < 1e-7);
        assert!(sp.reference().tail_mass()[0] < 1e-13);
        // Independent direct sum of the untruncated pmf beyond 16.
        let mut term = (-1.0f64).exp();
        let mut tail = 0.0;
        for k in 1..60 {
            term /= k as f64;
            if k > 16 {
                tail += term;
            }
        }
        assert!((sp.reference().tail_mass()[0] - tail).abs() < 1e-25);
    }

    #[test]
    fn normalisation_and_detailed_balance() {
        let sp = space(vec![1.0, 0.5, 3.0], vec![5, 4, 6]);
        let total: f64 = sp.reference().weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        for e in sp.lattice().edges() {
            let lhs = sp.pi(e.source) * sp.sites().intensity()[e.site];
            let rhs = sp.pi(e.target) * (sp.lattice().count(e.source, e.site) as f64 + 1.0);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn intensity_examples() {
        let sp = space(vec![1.0], vec![16]);
        let pi = Density::reference(&sp);
        let direct: f64 = (0..=16).map(|n| n as f64 * sp.pi(n)).sum();
        assert!((intensity_measure(&sp, &pi)[0] - direct).abs() < 1e-12);
        let empty = Density::dirac(&sp, &[0]).unwrap();
        assert_eq!(intensity_measure(&sp, &empty), vec![0.0]);
        let two = Density::dirac(&sp, &[2]).unwrap();
        assert!((intensity_measure(&sp, &two)[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn campbell_examples() {
        let sp = space(vec![1.0, 0.5], vec![4, 3]);
        let pi = Density::reference(&sp);
        let c = campbell_measure(&sp, &pi);
        for (e, edge) in sp.lattice().edges().iter().enumerate() {
            let mecke = sp.pi(edge.source) * sp.sites().intensity()[edge.site];
            assert!((c[e] - mecke).abs() < 1e-12);
        }
        let empty = Density::dirac(&sp, &[0, 0]).unwrap();
        assert!(campbell_measure(&sp, &empty).iter().all(|&v| v == 0.0));

        let sp1 = space(vec![1.0], vec![3]);
        let one = Density::dirac(&sp1, &[1]).unwrap();
        let c = campbell_measure(&sp1, &one);
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn campbell_marginal_is_intensity() {
        let sp = space(vec![1.3, 0.7], vec![5, 4]);
        let rho: Vec<f64> = (0..sp.n_states()).map(|s| 1.0 + (s as f64 * 0.37).sin().abs()).collect();
        let mu = Density::normalized(&sp, rho).unwrap();
        let c = campbell_measure(&sp, &mu);
        let i = intensity_measure(&sp, &mu);
        let mut marg = [0.0; 2];
        for (e, edge) in sp.lattice().edges().iter().enumerate() {
            marg[edge.site] += c[e];
        }
        for x in 0..2 {
            assert!((marg[x] - i[x]).abs() < 1e-12);
        }
        // density × (π ⊗ I_μ) reproduces the Campbell measure
        let dens = campbell_density(&sp, &mu);
        for (e, edge) in sp.lattice().edges().iter().enumerate() {
            let v = dens[e].unwrap() * sp.pi(edge.source) * i[edge.site];
            assert!((v - c[e]).abs() < 1e-12);
        }
    }

    #[test]
    fn campbell_density_examples() {
        let sp = space(vec![1.0], vec![16]);
        let pi = Density::reference(&sp);
        let one_minus_cap = 1.0 - sp.pi(16);
        for v in campbell_density(&sp, &pi) {
            assert!((v.unwrap() - 1.0 / one_minus_cap).abs() < 1e-12);
        }
        let one = Density::dirac(&sp, &[1]).unwrap();
        let z = one.get(1) * sp.pi(0);
        let dens = campbell_density(&sp, &one);
        assert!((dens[0].unwrap() - one.get(1) / z).abs() < 1e-9);
        let empty = Density::dirac(&sp, &[0]).unwrap();
        assert!(campbell_density(&sp, &empty).iter().all(Option::is_none));
    }

    #[test]
    fn density_validation() {
        let sp = space(vec![1.0], vec![1]);
        assert!(Density::new(&sp, vec![2.0, 0.0]).is_ok());
        assert!(Density::new(&sp, vec![1.0, 0.0]).is_err());
        assert!(Density::new(&sp, vec![3.0, -1.0]).is_err());
        assert!(Density::new(&sp, vec![1.0]).is_err());
    }
}
