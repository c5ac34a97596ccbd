//! Ornstein–Uhlenbeck semigroup on the truncated lattice.
//!
//! The semigroup factorises over sites, so an operator is a list of
//! `(N_x + 1) × (N_x + 1)` stochastic matrices applied as a tensor product.
//! Two independent constructions are provided:
//!
//! * [`mehler_kernel`]: thinning with retention probability `e^{-t}` followed by
//!   an independent `Poisson((1 - e^{-t}) m_x)` injection; mass that would land
//!   above the cap is deposited on the cap.
//! * [`expm_kernel`]: `exp(t Q_x)` for the censored birth–death generator
//!   (births `m_x` below the cap, deaths `n`). Computed by uniformisation on a
//!   short step followed by repeated squaring; every term is non-negative so
//!   entries keep full relative accuracy and reversibility holds to round-off.
//!
//! The `Expm` variant is exactly consistent with [`generator_apply`](crate::calculus::generator_apply)
//! and is the one used by everything downstream.

use nalgebra::DMatrix;

use crate::calculus::difference;
use crate::config_space::{Density, PoissonSpace, SiteSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum KernelMethod {
    Mehler,
    Expm,
}

#[derive(Debug, Clone)]
pub struct SemigroupOperator {
    t: f64,
    method: KernelMethod,
    kernels: Vec<DMatrix<f64>>,
}

impl SemigroupOperator {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    /// Single-site kernel of site `x`.
    pub fn kernel(&self, x: usize) -> &DMatrix<f64> {
        &self.kernels[x]
    }

    pub fn kernels(&self) -> &[DMatrix<f64>] {
        &self.kernels
    }

    /// Largest deviation of a row sum from 1.
    pub fn max_row_sum_error(&self) -> f64 {
        self.kernels
            .iter()
            .flat_map(|k| k.row_iter().map(|r| (r.sum() - 1.0).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("semigroup time {t} must be finite and non-negative")))
    }
}

pub fn mehler_kernel(sites: &SiteSpace, t: f64) -> Result<SemigroupOperator> {
    check_time(t)?;
    let kernels = sites
        .intensity()
        .iter()
        .zip(sites.caps())
        .map(|(&m, &cap)| mehler_site(m, cap, t))
        .collect();
    Ok(SemigroupOperator {
        t,
        method: KernelMethod::Mehler,
        kernels,
    })
}

fn mehler_site(m: f64, cap: usize, t: f64) -> DMatrix<f64> {
    let keep = (-t).exp();
    let lambda = -(-t).exp_m1() * m;
    let size = cap + 1;
    // Poisson(λ) pmf on 0..=cap.
    let mut injection = vec![0.0; size];
    if lambda == 0.0 {
        injection[0] = 1.0;
    } else {
        let mut log_p = -lambda;
        for (k, p) in injection.iter_mut().enumerate() {
            if k > 0 {
                log_p += lambda.ln() - (k as f64).ln();
            }
            *p = log_p.exp();
        }
    }
    let mut kernel = DMatrix::zeros(size, size);
    for n in 0..size {
        let survivors = binomial_pmf(n, keep);
        for (j, &b) in survivors.iter().enumerate() {
            if b == 0.0 {
                continue;
            }
            for (i, &p) in injection.iter().enumerate().take(size - j) {
                kernel[(n, j + i)] += b * p;
            }
        }
        // clip: everything above the cap lands on the cap
        let below: f64 = (0..cap).map(|k| kernel[(n, k)]).sum();
        kernel[(n, cap)] = (1.0 - below).max(0.0);
        let row: f64 = kernel.row(n).sum();
        for k in 0..size {
            kernel[(n, k)] /= row;
        }
    }
    kernel
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    if p >= 1.0 {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        return v;
    }
    if p <= 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut log_binom = 0.0;
    (0..=n)
        .map(|j| {
            if j > 0 {
                log_binom += ((n - j + 1) as f64).ln() - (j as f64).ln();
            }
            (log_binom + j as f64 * lp + (n - j) as f64 * lq).exp()
        })
        .collect()
}

/// Censored single-site birth–death generator.
pub fn site_generator(m: f64, cap: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(cap + 1, cap + 1);
    for n in 0..=cap {
        if n < cap {
            q[(n, n + 1)] = m;
        }
        if n > 0 {
            q[(n, n - 1)] = n as f64;
        }
        q[(n, n)] = -(if n < cap { m } else { 0.0 }) - n as f64;
    }
    q
}

pub fn expm_kernel(sites: &SiteSpace, t: f64) -> Result<SemigroupOperator> {
    check_time(t)?;
    let kernels = sites
        .intensity()
        .iter()
        .zip(sites.caps())
        .map(|(&m, &cap)| expm_site(m, cap, t))
        .collect();
    Ok(SemigroupOperator {
        t,
        method: KernelMethod::Expm,
        kernels,
    })
}

fn expm_site(m: f64, cap: usize, t: f64) -> DMatrix<f64> {
    expm_generator(&site_generator(m, cap), m + cap as f64, t)
}

/// `exp(t Q)` for a generator with non-negative off-diagonal entries and
/// `|Q_ii| ≤ rate`.
fn expm_generator(q: &DMatrix<f64>, rate: f64, t: f64) -> DMatrix<f64> {
    let size = q.nrows();
    if t == 0.0 {
        return DMatrix::identity(size, size);
    }
    // step with rate·τ ≤ 1/2
    let mut squarings = 0u32;
    let mut tau = t;
    while rate * tau > 0.5 {
        tau *= 0.5;
        squarings += 1;
    }
    // exp(τQ) = e^{-qτ} Σ_k (qτ)^k / k! P^k,  P = I + Q/q ≥ 0.
    let mut jump = q / rate;
    for n in 0..size {
        jump[(n, n)] += 1.0;
    }
    let x = rate * tau;
    let mut term = DMatrix::identity(size, size);
    let mut sum = term.clone();
    // Entries `d` levels apart first appear in term `d`; past the 1e-20 cut the
    // series keeps as many terms again as the widest gap, so small entries keep
    // their relative accuracy instead of being truncated to zero.
    let mut coeff = 1.0;
    let mut stop = None;
    for k in 1..(size + 120) {
        term = &term * &jump;
        coeff *= x / k as f64;
        sum += &term * coeff;
        if coeff == 0.0 {
            break;
        }
        if stop.is_none() && coeff < 1e-20 {
            stop = Some(k + size - 1);
        }
        if stop == Some(k) {
            break;
        }
    }
    let mut kernel = sum * (-x).exp();
    for _ in 0..squarings {
        kernel = &kernel * &kernel;
    }
    kernel
}

/// Generator on the edge levels `0..cap` of one site: births are censored
/// below `cap - 1` and the top level is killed at rate `m`. With it,
/// `D_x P_t F = e^{-t} Q_t D_x F` holds exactly on the truncated lattice.
pub fn edge_site_generator(m: f64, cap: usize) -> DMatrix<f64> {
    let mut q = site_generator(m, cap - 1);
    q[(cap - 1, cap - 1)] -= m;
    q
}

/// Kernels acting on the edge functions `η ↦ w(η, x)` of site `x`: the
/// killed edge kernel on site `x` (padded with a zero top level) and the
/// ordinary kernel on every other site.
pub fn edge_kernels(sites: &SiteSpace, x: usize, t: f64) -> Result<Vec<DMatrix<f64>>> {
    check_time(t)?;
    Ok(sites
        .intensity()
        .iter()
        .zip(sites.caps())
        .enumerate()
        .map(|(y, (&m, &cap))| {
            if y == x {
                let q = expm_generator(&edge_site_generator(m, cap), 2.0 * m + cap as f64, t);
                let mut padded = DMatrix::zeros(cap + 1, cap + 1);
                padded.view_mut((0, 0), (cap, cap)).copy_from(&q);
                padded
            } else {
                expm_site(m, cap, t)
            }
        })
        .collect())
}

/// Builds the operator with the requested construction.
pub fn kernel(sites: &SiteSpace, t: f64, method: KernelMethod) -> Result<SemigroupOperator> {
    match method {
        KernelMethod::Mehler => mehler_kernel(sites, t),
        KernelMethod::Expm => expm_kernel(sites, t),
    }
}

/// Discrepancy between two operators on the same sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDiscrepancy {
    /// `max |π_x(n) (T(n,k) - T'(n,k))|`: entrywise gap between the two-time laws
    /// started from the reference marginal.
    pub joint: f64,
    /// Unweighted entrywise gap restricted to rows `n ≤ N_x / 2`.
    pub interior_rows: f64,
    /// Unweighted entrywise gap over all rows.
    pub raw: f64,
}

/// Compares two operators entrywise. Rows started at the cap see the
/// difference between censoring and clipping directly, so the meaningful
/// comparison is the stationary two-time law, which the tail mass controls.
pub fn kernel_discrepancy(
    space: &PoissonSpace,
    a: &SemigroupOperator,
    b: &SemigroupOperator,
) -> Result<KernelDiscrepancy> {
    if a.kernels.len() != space.dim() || b.kernels.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: a.kernels.len().min(b.kernels.len()),
        });
    }
    let mut out = KernelDiscrepancy { joint: 0.0, interior_rows: 0.0, raw: 0.0 };
    for x in 0..space.dim() {
        let pi = space.reference().site_pmf(x);
        let (ka, kb) = (&a.kernels[x], &b.kernels[x]);
        let cap = pi.len() - 1;
        for n in 0..=cap {
            for k in 0..=cap {
                let d = (ka[(n, k)] - kb[(n, k)]).abs();
                out.raw = out.raw.max(d);
                out.joint = out.joint.max(pi[n] * d);
                if 2 * n <= cap {
                    out.interior_rows = out.interior_rows.max(d);
                }
            }
        }
    }
    Ok(out)
}

/// Applies the product of per-site matrices to an observable.
pub fn semigroup_apply(space: &PoissonSpace, op: &SemigroupOperator, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != space.n_states() {
        return Err(Error::DimensionMismatch {
            expected: space.n_states(),
            got: f.len(),
        });
    }
    if op.kernels.len() != space.dim()
        || op
            .kernels
            .iter()
            .zip(space.sites().caps())
            .any(|(k, &n)| k.nrows() != n + 1)
    {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: op.kernels.len(),
        });
    }
    Ok(apply_kernels(space, &op.kernels, f))
}

pub(crate) fn apply_kernels(space: &PoissonSpace, kernels: &[DMatrix<f64>], f: &[f64]) -> Vec<f64> {
    let lat = space.lattice();
    let n_states = space.n_states();
    let mut cur = f.to_vec();
    let mut next = vec![0.0; n_states];
    let mut fiber = Vec::new();
    for (x, k) in kernels.iter().enumerate() {
        let size = k.nrows();
        let stride = if x + 1 < space.dim() {
            space.sites().caps()[x + 1..].iter().map(|n| n + 1).product()
        } else {
            1
        };
        for base in 0..n_states {
            if lat.count(base, x) != 0 {
                continue;
            }
            fiber.clear();
            fiber.extend((0..size).map(|j| cur[base + j * stride]));
            for i in 0..size {
                let mut acc = 0.0;
                for (j, v) in fiber.iter().enumerate() {
                    acc += k[(i, j)] * v;
                }
                next[base + i * stride] = acc;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// `P*_t μ = (P_t ρ) π`, the dual action through reversibility.
pub fn dual_apply(space: &PoissonSpace, op: &SemigroupOperator, mu: &Density) -> Result<Density> {
    let rho = semigroup_apply(space, op, mu.values())?;
    Ok(Density::from_vec_unchecked(rho.into_iter().map(|v| v.max(0.0)).collect()))
}

/// Convenience: `P*_t μ` with the canonical construction.
pub fn evolve(space: &PoissonSpace, mu: &Density, t: f64) -> Result<Density> {
    let op = expm_kernel(space.sites(), t)?;
    dual_apply(space, &op, mu)
}

/// Residual of `D P_t F = e^{-t} P_t D F`.
///
/// `F` should vanish on `η_x > N_x - margin`. The residual is measured on
/// edges whose source satisfies `η_y ≤ N_y - 2·margin` for every site, which
/// keeps the censoring at the cap out of the comparison.
pub fn be_commutation_residual(space: &PoissonSpace, f: &[f64], t: f64, margin: usize) -> Result<f64> {
    let op = expm_kernel(space.sites(), t)?;
    let pf = semigroup_apply(space, &op, f)?;
    let lhs = difference(space, &pf);
    let df = difference(space, f);
    let lat = space.lattice();
    let caps = space.sites().caps();
    let decay = (-t).exp();
    let mut worst: f64 = 0.0;
    for x in 0..space.dim() {
        // η ↦ D_x F(η), extended by 0 at the cap
        let mut slice = vec![0.0; space.n_states()];
        for s in 0..space.n_states() {
            if let Some(e) = lat.out_edge(s, x) {
                slice[s] = df[e];
            }
        }
        let p_slice = semigroup_apply(space, &op, &slice)?;
        for (e, edge) in lat.edges().iter().enumerate() {
            if edge.site != x {
                continue;
            }
            let inside = lat
                .counts(edge.source)
                .iter()
                .zip(caps)
                .all(|(&c, &n)| c + 2 * margin <= n);
            if inside {
                worst = worst.max((lhs[e] - decay * p_slice[edge.source]).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(m: Vec<f64>, caps: Vec<usize>) -> PoissonSpace {
        PoissonSpace::new(SiteSpace::new(m, caps).unwrap()).unwrap()
    }

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn identity_at_zero() {
        let sites = SiteSpace::new(vec![1.0, 2.5], vec![4, 6]).unwrap();
        for op in [mehler_kernel(&sites, 0.0).unwrap(), expm_kernel(&sites, 0.0).unwrap()] {
            for (x, k) in op.kernels().iter().enumerate() {
                let n = sites.caps()[x] + 1;
                assert!(max_abs_diff(k, &DMatrix::identity(n, n)) < 1e-15);
            }
        }
        assert!(mehler_kernel(&sites, -1.0).is_err());
        assert!(expm_kernel(&sites, -1e-3).is_err());
    }

    #[test]
    fn mehler_birth_only_from_empty() {
        let sites = SiteSpace::uniform(1, 1.0, 16).unwrap();
        let op = mehler_kernel(&sites, 2f64.ln()).unwrap();
        assert!((op.kernel(0)[(0, 0)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((op.kernel(0)[(0, 0)] - 0.606531).abs() < 1e-6);
    }

    #[test]
    fn stochastic_rows() {
        let sites = SiteSpace::new(vec![1.0, 3.0], vec![16, 10]).unwrap();
        for t in [0.1, 1.0, 10.0] {
            assert!(mehler_kernel(&sites, t).unwrap().max_row_sum_error() < 1e-12);
            assert!(expm_kernel(&sites, t).unwrap().max_row_sum_error() < 1e-12);
        }
    }

    #[test]
    fn expm_reversible_and_stationary() {
        let sp = space(vec![1.0, 2.0], vec![16, 8]);
        for t in [0.05, 1.0, 7.0] {
            let op = expm_kernel(sp.sites(), t).unwrap();
            for x in 0..2 {
                let pi = sp.reference().site_pmf(x);
                let k = op.kernel(x);
                for n in 0..pi.len() {
                    let mut stat = 0.0;
                    for j in 0..pi.len() {
                        assert!((pi[n] * k[(n, j)] - pi[j] * k[(j, n)]).abs() < 1e-10);
                        stat += pi[j] * k[(j, n)];
                    }
                    assert!((stat - pi[n]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn expm_converges_to_reference() {
        let sp = space(vec![1.0], vec![16]);
        let op = expm_kernel(sp.sites(), 50.0).unwrap();
        let pi = sp.reference().site_pmf(0);
        for n in 0..17 {
            for j in 0..17 {
                assert!((op.kernel(0)[(n, j)] - pi[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constructions_agree() {
        let sp = space(vec![1.0], vec![16]);
        let tol = (10.0 * sp.reference().max_tail_mass()).max(1e-8);
        for t in [0.1, 1.0, 5.0] {
            let a = mehler_kernel(sp.sites(), t).unwrap();
            let b = expm_kernel(sp.sites(), t).unwrap();
            let diff = kernel_discrepancy(&sp, &a, &b).unwrap();
            assert!(diff.joint < tol, "t={t} diff={diff:?}");
            // rows far from the cap agree without weighting
            assert!(diff.interior_rows < 1e-8, "t={t} diff={diff:?}");
        }
    }

    #[test]
    fn apply_examples() {
        let sp = space(vec![1.0, 0.7], vec![6, 5]);
        let op = expm_kernel(sp.sites(), 0.8).unwrap();
        let ones = semigroup_apply(&sp, &op, &vec![1.0; sp.n_states()]).unwrap();
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-13));

        let f: Vec<f64> = (0..sp.n_states()).map(|s| ((s * 7) % 5) as f64 - 2.0).collect();
        let s_op = expm_kernel(sp.sites(), 0.3).unwrap();
        let t_op = expm_kernel(sp.sites(), 0.5).unwrap();
        let st = semigroup_apply(&sp, &s_op, &semigroup_apply(&sp, &t_op, &f).unwrap()).unwrap();
        let direct = semigroup_apply(&sp, &op, &f).unwrap();
        for (a, b) in st.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-10);
        }
        let (lo, hi) = (-2.0, 2.0);
        assert!(direct.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
        assert!(semigroup_apply(&sp, &op, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn apply_indicator_matches_matrix_entry() {
        let sp = space(vec![1.0], vec![16]);
        let op = mehler_kernel(sp.sites(), 2f64.ln()).unwrap();
        let mut ind = vec![0.0; 17];
        ind[0] = 1.0;
        let out = semigroup_apply(&sp, &op, &ind).unwrap();
        assert!((out[0] - op.kernel(0)[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn dual_examples() {
        let sp = space(vec![1.0, 0.5], vec![12, 10]);
        let op = expm_kernel(sp.sites(), 0.7).unwrap();
        let pi = Density::reference(&sp);
        let out = dual_apply(&sp, &op, &pi).unwrap();
        assert!(out.values().iter().all(|v| (v - 1.0).abs() < 1e-12));

        let far = expm_kernel(sp.sites(), 40.0).unwrap();
        let empty = Density::dirac(&sp, &[0, 0]).unwrap();
        assert!(dual_apply(&sp, &far, &empty).unwrap().total_variation(&pi, &sp) < 1e-10);
    }

    #[test]
    fn be_residual_examples() {
        let sp = space(vec![1.0], vec![16]);
        assert!(be_commutation_residual(&sp, &vec![2.0; 17], 1.0, 4).unwrap() < 1e-13);
        // the killed edge kernel makes the identity exact up to the cap
        let sp = space(vec![1.3, 0.6], vec![5, 4]);
        let f: Vec<f64> = (0..30).map(|s| ((s * 7 % 11) as f64).sin()).collect();
        let t = 0.7;
        let pf = semigroup_apply(&sp, &expm_kernel(sp.sites(), t).unwrap(), &f).unwrap();
        let lhs = difference(&sp, &pf);
        let df = difference(&sp, &f);
        let lat = sp.lattice();
        for x in 0..2 {
            let mut slice = vec![0.0; 30];
            for s in 0..30 {
                if let Some(e) = lat.out_edge(s, x) {
                    slice[s] = df[e];
                }
            }
            let q = apply_kernels(&sp, &edge_kernels(sp.sites(), x, t).unwrap(), &slice);
            for (e, edge) in lat.edges().iter().enumerate() {
                if edge.site == x {
                    assert!((lhs[e] - (-t).exp() * q[edge.source]).abs() < 1e-14);
                }
            }
        }
        // linear observable on a lattice whose cap is far from the window
        let sp = space(vec![1.0], vec![32]);
        let iota: Vec<f64> = (0..33).map(|n| 0.8 * n as f64).collect();
        for t in [0.1, 1.0, 3.0] {
            assert!(be_commutation_residual(&sp, &iota, t, 4).unwrap() < 1e-10, "t={t}");
        }
    }
}
