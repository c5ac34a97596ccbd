//! Logarithmic mean `θ(s, t) = (s - t) / (log s - log t)` and its derivatives.
//!
//! Evaluated as `θ(s, t) = t·g(s/t)` with `g(u) = (u - 1)/log u`. Close to the
//! diagonal `g` is replaced by its Taylor series in `h = u - 1`, which avoids
//! the cancellation in both numerator and denominator.

use crate::error::{Error, Result};

/// Below this `|u - 1|` the Taylor branch is used.
const SERIES_RADIUS: f64 = 1e-2;

/// Taylor coefficients of `h / log(1 + h)`.
const G_SERIES: [f64; 10] = [
    1.0,
    1.0 / 2.0,
    -1.0 / 12.0,
    1.0 / 24.0,
    -19.0 / 720.0,
    3.0 / 160.0,
    -863.0 / 60480.0,
    275.0 / 24192.0,
    -33953.0 / 3628800.0,
    8183.0 / 1036800.0,
];

/// Logarithmic mean with the boundary conventions `θ(s, s) = s` and
/// `θ(s, 0) = θ(0, t) = 0`.
pub fn log_mean(s: f64, t: f64) -> Result<f64> {
    if s < 0.0 || t < 0.0 || s.is_nan() || t.is_nan() {
        return Err(Error::Domain(format!("log_mean({s}, {t}) needs non-negative arguments")));
    }
    Ok(theta(s, t))
}

/// Unchecked `θ`; callers guarantee `s, t ≥ 0`.
#[inline]
pub fn theta(s: f64, t: f64) -> f64 {
    if s == 0.0 || t == 0.0 {
        return 0.0;
    }
    if s == t {
        return s;
    }
    let (lo, hi) = if s < t { (s, t) } else { (t, s) };
    hi * g(lo / hi)
}

#[inline]
fn g(u: f64) -> f64 {
    let h = u - 1.0;
    if h.abs() < SERIES_RADIUS {
        horner(&G_SERIES, h)
    } else {
        h / u.ln()
    }
}

fn horner(c: &[f64], h: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * h + a)
}

/// `g, g', g''` at `u > 0`.
fn g_derivs(u: f64) -> (f64, f64, f64) {
    let h = u - 1.0;
    if h.abs() < SERIES_RADIUS {
        let mut d1 = [0.0; 9];
        let mut d2 = [0.0; 8];
        for k in 1..10 {
            d1[k - 1] = k as f64 * G_SERIES[k];
        }
        for k in 2..10 {
            d2[k - 2] = (k * (k - 1)) as f64 * G_SERIES[k];
        }
        (horner(&G_SERIES, h), horner(&d1, h), horner(&d2, h))
    } else {
        let l = u.ln();
        let g0 = h / l;
        let g1 = 1.0 / l - h / (u * l * l);
        let g2 = (2.0 * h - (u + 1.0) * l) / (u * u * l * l * l);
        (g0, g1, g2)
    }
}

/// Value, gradient and Hessian of `θ` at an interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaJet {
    pub value: f64,
    pub ds: f64,
    pub dt: f64,
    pub dss: f64,
    pub dst: f64,
    pub dtt: f64,
}

/// Second-order jet of `θ` at `s, t > 0`.
pub fn theta_jet(s: f64, t: f64) -> ThetaJet {
    debug_assert!(s > 0.0 && t > 0.0);
    if s > t {
        let j = theta_jet(t, s);
        return ThetaJet {
            value: j.value,
            ds: j.dt,
            dt: j.ds,
            dss: j.dtt,
            dst: j.dst,
            dtt: j.dss,
        };
    }
    // θ = t g(u), u = s/t, with u ≤ 1.
    let u = s / t;
    let (g0, g1, g2) = g_derivs(u);
    ThetaJet {
        value: t * g0,
        ds: g1,
        dt: g0 - u * g1,
        dss: g2 / t,
        dst: -u * g2 / t,
        dtt: u * u * g2 / t,
    }
}

/// `α(s, t, w) = w² / θ(s, t)` with `0/0 = 0` and `w ≠ 0, θ = 0 ↦ +∞`.
pub fn alpha(s: f64, t: f64, w: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let th = theta(s, t);
    if th == 0.0 {
        f64::INFINITY
    } else {
        w * w / th
    }
}

/// `(a - b)(log a - log b)` with `0` on the diagonal (including `(0, 0)`) and
/// `+∞` when exactly one argument vanishes.
pub fn log_difference_product(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a == 0.0 || b == 0.0 {
        f64::INFINITY
    } else {
        (a - b) * (a.ln() - b.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(s: f64, t: f64) -> f64 {
        (s - t) / (s.ln() - t.ln())
    }

    #[test]
    fn closed_forms() {
        assert_eq!(log_mean(1.0, 1.0).unwrap(), 1.0);
        let e = std::f64::consts::E;
        assert!((log_mean(e, 1.0).unwrap() - (e - 1.0)).abs() < 1e-15);
        assert!((log_mean(4.0, 1.0).unwrap() - 3.0 / 4f64.ln()).abs() < 1e-15);
        assert!((log_mean(4.0, 1.0).unwrap() - 2.164043).abs() < 1e-6);
        assert_eq!(log_mean(3.0, 0.0).unwrap(), 0.0);
        assert_eq!(log_mean(0.0, 3.0).unwrap(), 0.0);
        assert!(log_mean(-1.0, 1.0).is_err());
    }

    #[test]
    fn series_branch_matches_extended_precision() {
        // θ(1 + h, 1) computed from log1p, which keeps full accuracy for small h.
        for &h in &[1e-9f64, 3e-7, 1e-5, 5e-4, 9e-3, -9e-3, -1e-6] {
            let reference = h / h.ln_1p();
            let got = theta(1.0 + h, 1.0);
            assert!(((got - reference) / reference).abs() < 2e-15, "h={h}");
        }
    }

    #[test]
    fn continuity_across_series_radius() {
        for &u in &[1.0 + SERIES_RADIUS * 0.999, 1.0 + SERIES_RADIUS * 1.001] {
            let reference = (u - 1.0f64) / (u - 1.0f64).ln_1p();
            assert!((theta(u, 1.0) - reference).abs() < 1e-15);
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        let pts = [(0.3, 2.0), (1.7, 0.2), (1.0, 1.0 + 1e-3), (5.0, 4.999), (1e-3, 0.8)];
        for &(s, t) in &pts {
            let j = theta_jet(s, t);
            assert!((j.value - theta(s, t)).abs() < 1e-14);
            let h = 1e-5 * s.min(t);
            let fd_s = (theta(s + h, t) - theta(s - h, t)) / (2.0 * h);
            let fd_t = (theta(s, t + h) - theta(s, t - h)) / (2.0 * h);
            assert!((j.ds - fd_s).abs() < 1e-6 * (1.0 + j.ds.abs()), "{s} {t}");
            assert!((j.dt - fd_t).abs() < 1e-6 * (1.0 + j.dt.abs()), "{s} {t}");
            let jp = theta_jet(s + h, t);
            let jm = theta_jet(s - h, t);
            let fd_ss = (jp.ds - jm.ds) / (2.0 * h);
            let fd_st = (jp.dt - jm.dt) / (2.0 * h);
            assert!((j.dss - fd_ss).abs() < 1e-5 * (1.0 + j.dss.abs()), "{s} {t}");
            assert!((j.dst - fd_st).abs() < 1e-5 * (1.0 + j.dst.abs()), "{s} {t}");
            let jp = theta_jet(s, t + h);
            let jm = theta_jet(s, t - h);
            let fd_tt = (jp.dt - jm.dt) / (2.0 * h);
            assert!((j.dtt - fd_tt).abs() < 1e-5 * (1.0 + j.dtt.abs()), "{s} {t}");
        }
    }

    #[test]
    fn direct_formula_agrees_away_from_diagonal() {
        for &(s, t) in &[(0.1, 3.0), (7.0, 2.0), (1e-8, 1.0)] {
            assert!((theta(s, t) - direct(s, t)).abs() < 1e-14 * direct(s, t).max(1.0));
        }
    }

    #[test]
    fn conventions() {
        assert_eq!(alpha(0.0, 0.0, 0.0), 0.0);
        assert_eq!(alpha(0.0, 1.0, 0.5), f64::INFINITY);
        assert!((alpha(4.0, 1.0, 2.0) - 4.0 * 4f64.ln() / 3.0).abs() < 1e-14);
        assert_eq!(log_difference_product(0.0, 0.0), 0.0);
        assert_eq!(log_difference_product(0.0, 1.0), f64::INFINITY);
    }
}
