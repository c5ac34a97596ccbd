//! Closed forms and independent computations checked against the library.

use poisson_transport::*;

const W_TWO_POINT: f64 = 1.558_707_451_453_659_3;

fn space(m: Vec<f64>, caps: Vec<usize>) -> PoissonSpace {
    PoissonSpace::new(SiteSpace::new(m, caps).unwrap()).unwrap()
}

fn poisson_pmf(lambda: f64, n: usize) -> f64 {
    let mut p = (-lambda).exp();
    for k in 1..=n {
        p *= lambda / k as f64;
    }
    p
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

#[test]
fn reference_measure_is_the_normalized_product() {
    let sp = space(vec![1.3, 0.4], vec![5, 3]);
    let mut raw = Vec::new();
    for s in 0..sp.n_states() {
        let c = sp.lattice().counts(s).to_vec();
        raw.push(poisson_pmf(1.3, c[0]) * poisson_pmf(0.4, c[1]));
    }
    let z: f64 = raw.iter().sum();
    for (s, r) in raw.iter().enumerate() {
        assert!((sp.pi(s) - r / z).abs() <= 1e-15 * (r / z).max(1e-300) + 1e-17);
    }
}

#[test]
fn mehler_kernel_is_thinning_plus_injection() {
    let (m, cap) = (1.0, 30);
    let sp = space(vec![m], vec![cap]);
    for t in [0.1, 1.0, 5.0] {
        let kern = mehler_kernel(sp.sites(), t).unwrap();
        let k = kern.kernel(0);
        let q = (-t).exp();
        for n in 0..=cap / 2 {
            for j in 0..=cap {
                let exact: f64 = (0..=n.min(j))
                    .map(|i| binomial_pmf(n, i, q) * poisson_pmf((1.0 - q) * m, j - i))
                    .sum();
                assert!((k[(n, j)] - exact).abs() < 1e-13, "t={t} n={n} j={j}");
            }
        }
    }
}

#[test]
fn flow_from_the_empty_configuration_is_poisson() {
    let m = 1.0;
    let sp = space(vec![m], vec![40]);
    let start = Density::dirac(&sp, &[0]).unwrap();
    for t in [1e-7f64, 1e-4, 0.05, 0.3, 1.0, 3.0] {
        let lambda = (1.0 - (-t).exp()) * m;
        let mu = evolve(&sp, &start, t).unwrap();
        let kl = lambda * (lambda / m).ln() - lambda + m;
        let fisher_exact = (lambda - m) * (lambda / m).ln();
        assert!((entropy(&sp, &mu) - kl).abs() < 1e-10, "t={t}");
        assert!((fisher(&sp, &mu) - fisher_exact).abs() < 1e-9 * fisher_exact.max(1.0), "t={t}");
        let i = intensity_measure(&sp, &mu);
        assert!((i[0] - lambda).abs() < 1e-12);
    }
    assert!((entropy(&sp, &start) - m).abs() < 1e-12);
    assert!(fisher(&sp, &start).is_infinite());
}

#[test]
fn intensity_relaxes_exponentially() {
    let m = [0.7, 1.4];
    let sp = space(m.to_vec(), vec![24, 24]);
    let start = Density::dirac(&sp, &[3, 0]).unwrap();
    for t in [0.2f64, 1.0, 2.5] {
        let i = intensity_measure(&sp, &evolve(&sp, &start, t).unwrap());
        let q = (-t).exp();
        assert!((i[0] - (3.0 * q + (1.0 - q) * m[0])).abs() < 1e-10);
        assert!((i[1] - (1.0 - q) * m[1]).abs() < 1e-10);
    }
}

/// `∫ dβ / θ(m(1-β), β)^{1/2}` by Simpson's rule after `β = sin²φ`.
fn two_point_by_simpson(m: f64, b0: f64, b1: f64, panels: usize) -> f64 {
    let theta = |a: f64, b: f64| if a == b { a } else { (a - b) / (a.ln() - b.ln()) };
    let f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        if s == 0.0 || c.abs() < 1e-300 {
            return 0.0;
        }
        2.0 * s * c / theta(m * c * c, s * s).sqrt()
    };
    let (lo, hi) = (b0.sqrt().asin(), b1.sqrt().asin());
    let h = (hi - lo) / panels as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..panels {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn two_point_quadrature_is_independent_of_the_method() {
    let simpson = two_point_by_simpson(1.0, 0.0, 1.0, 200_000);
    assert!((simpson - W_TWO_POINT).abs() < 1e-7, "{simpson}");
    assert!((two_point_oracle(1.0, 0.0, 1.0).unwrap() - W_TWO_POINT).abs() < 1e-12);
    for (m, b0, b1) in [(2.0, 0.1, 0.8), (0.5, 0.3, 0.35), (1.0, 0.9, 0.2)] {
        let (lo, hi) = if b0 < b1 { (b0, b1) } else { (b1, b0) };
        let s = two_point_by_simpson(m, lo, hi, 20_000);
        let o = two_point_oracle(m, b0, b1).unwrap();
        assert!((s - o).abs() < 1e-9 * o, "m={m}: {s} vs {o}");
    }
}

#[test]
fn solver_reproduces_an_interior_two_point_distance() {
    let sp = space(vec![1.5], vec![1]);
    let a = two_point_density(&sp, 0.2).unwrap();
    let b = two_point_density(&sp, 0.7).unwrap();
    let report = refine(&sp, &a, &b, &[8, 16, 32], &SolverConfig::default()).unwrap();
    let w = report.refinement.unwrap().extrapolate.unwrap().sqrt();
    let oracle = two_point_by_simpson(1.5, 0.2, 0.7, 20_000);
    assert!((w - oracle).abs() < 1e-3 * oracle, "{w} vs {oracle}");
}
