use poisson_transport::io::{read_density_csv, write_density_csv};
use poisson_transport::*;
use proptest::prelude::*;

fn lattice() -> impl Strategy<Value = PoissonSpace> {
    (1usize..=2, 1usize..=5, 0.3f64..2.5, 0.3f64..2.5).prop_map(|(d, cap, m0, m1)| {
        let m = [m0, m1][..d].to_vec();
        PoissonSpace::new(SiteSpace::new(m, vec![cap; d]).unwrap()).unwrap()
    })
}

fn small_lattice() -> impl Strategy<Value = PoissonSpace> {
    (2usize..=4, 0.5f64..1.5)
        .prop_map(|(cap, m)| PoissonSpace::new(SiteSpace::new(vec![m], vec![cap]).unwrap()).unwrap())
}

fn inner_pi(sp: &PoissonSpace, f: &[f64], g: &[f64]) -> f64 {
    (0..sp.n_states()).map(|s| sp.pi(s) * f[s] * g[s]).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_mean_is_a_symmetric_homogeneous_mean(s in 1e-6f64..1e3, t in 1e-6f64..1e3, l in 1e-3f64..1e3) {
        let th = log_mean(s, t).unwrap();
        prop_assert!((th - log_mean(t, s).unwrap()).abs() <= 1e-14 * th);
        prop_assert!((log_mean(l * s, l * t).unwrap() - l * th).abs() <= 1e-12 * l * th);
        let geo = (s * t).sqrt();
        let ari = 0.5 * (s + t);
        prop_assert!(geo * (1.0 - 1e-13) <= th && th <= ari * (1.0 + 1e-13));
    }

    #[test]
    fn log_mean_is_continuous_across_the_diagonal(s in 1e-3f64..1e3, h in -1e-3f64..1e-3) {
        let t = s * (1.0 + h);
        let exact = if h == 0.0 { s } else { (t - s) / (t.ln() - s.ln()) };
        prop_assert!((log_mean(s, t).unwrap() - exact).abs() <= 1e-9 * s);
    }

    #[test]
    fn difference_and_divergence_are_adjoint(sp in lattice(), seed in any::<u64>()) {
        let f = random_function(&sp, seed);
        let u: Vec<f64> = random_function(&sp, seed ^ 1).into_iter().cycle().take(sp.n_edges()).collect();
        let df = difference(&sp, &f);
        let lhs: f64 = (0..sp.n_edges()).map(|e| sp.edge_weight(e) * df[e] * u[e]).sum();
        let rhs = inner_pi(&sp, &f, &skorokhod_div(&sp, &u));
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn generator_is_symmetric_and_dissipative(sp in lattice(), seed in any::<u64>()) {
        let f = random_function(&sp, seed);
        let g = random_function(&sp, seed.wrapping_add(7));
        let (lf, lg) = (generator_apply(&sp, &f), generator_apply(&sp, &g));
        prop_assert!((inner_pi(&sp, &f, &lg) - inner_pi(&sp, &lf, &g)).abs() < 1e-12);
        prop_assert!(inner_pi(&sp, &f, &lf) <= 1e-14);
        let ones = vec![1.0; sp.n_states()];
        prop_assert!(inner_pi(&sp, &ones, &lf).abs() < 1e-12);
    }

    #[test]
    fn modified_log_sobolev_holds(sp in lattice(), seed in any::<u64>(), a in 0.1f64..4.0) {
        let mu = random_density(&sp, seed, a, 0);
        let r = check_mlsi(&sp, &mu);
        prop_assert!(r.passed(), "H = {} I = {}", r.lhs, r.rhs);
        prop_assert!(r.lhs >= 0.0);
    }

    #[test]
    fn lagrangian_is_jointly_convex(sp in lattice(), seed in any::<u64>()) {
        let a = random_density(&sp, seed, 2.0, 0);
        let b = random_density(&sp, seed.wrapping_add(1), 2.0, 0);
        let wa = FluxMeasure::from_velocity(&sp, &random_function(&sp, seed.wrapping_add(2)).into_iter().cycle().take(sp.n_edges()).collect::<Vec<_>>());
        let wb = FluxMeasure::from_velocity(&sp, &random_function(&sp, seed.wrapping_add(3)).into_iter().cycle().take(sp.n_edges()).collect::<Vec<_>>());
        let mid_rho: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| 0.5 * (x + y)).collect();
        let mid = Density::new(&sp, mid_rho).unwrap();
        let mid_flux = FluxMeasure::new(wa.atoms().iter().zip(wb.atoms()).map(|(x, y)| 0.5 * (x + y)).collect());
        let l_mid = lagrangian(&sp, &mid, &mid_flux);
        let chord = 0.5 * (lagrangian(&sp, &a, &wa) + lagrangian(&sp, &b, &wb));
        prop_assert!(l_mid <= chord * (1.0 + 1e-12) + 1e-14);
    }

    #[test]
    fn flow_conserves_mass_and_dissipates(sp in lattice(), seed in any::<u64>(), t in 0.01f64..3.0) {
        let mu = random_density(&sp, seed, 2.0, 0);
        let a = evolve(&sp, &mu, t).unwrap();
        let b = evolve(&sp, &mu, 2.0 * t).unwrap();
        prop_assert!((a.total_mass(&sp) - 1.0).abs() < 1e-12);
        let (h0, h1, h2) = (entropy(&sp, &mu), entropy(&sp, &a), entropy(&sp, &b));
        prop_assert!(h1 <= h0 + 1e-13 && h2 <= h1 + 1e-13);
        prop_assert!(h1 <= (-t).exp() * h0 + 1e-12 * (1.0 + h0));
        prop_assert!(fisher(&sp, &b) <= fisher(&sp, &a) + 1e-12);
    }

    #[test]
    fn semigroup_law(sp in lattice(), seed in any::<u64>(), s in 0.01f64..2.0, t in 0.01f64..2.0) {
        let mu = random_density(&sp, seed, 2.0, 0);
        let two_steps = evolve(&sp, &evolve(&sp, &mu, s).unwrap(), t).unwrap();
        let one_step = evolve(&sp, &mu, s + t).unwrap();
        prop_assert!(two_steps.total_variation(&one_step, &sp) < 1e-12);
    }

    #[test]
    fn commutation_away_from_the_caps(m in 0.3f64..1.5, seed in any::<u64>(), t in 0.05f64..3.0) {
        let sp = PoissonSpace::new(SiteSpace::new(vec![m], vec![16]).unwrap()).unwrap();
        let f = random_interior_function(&sp, seed, 4);
        prop_assert!(be_commutation_residual(&sp, &f, t, 4).unwrap() < 1e-8);
    }

    #[test]
    fn pushed_paths_solve_the_continuity_equation(sp in lattice(), seed in any::<u64>(), eps in 0.01f64..1.5) {
        let mu = random_density(&sp, seed, 2.0, 0);
        let path = ou_path(&sp, &mu, 0.5, 6).unwrap();
        let pushed = push_semigroup(&sp, &path, eps).unwrap();
        let before = ce_residual(&sp, &path);
        prop_assert!(ce_residual(&sp, &pushed) <= before + 1e-13);
        prop_assert!(action(&sp, &pushed) <= (-2.0 * eps).exp() * action(&sp, &path) + 1e-10);
        let twice = push_semigroup(&sp, &push_semigroup(&sp, &path, 0.5 * eps).unwrap(), 0.5 * eps).unwrap();
        for (x, y) in twice.densities().iter().zip(pushed.densities()) {
            prop_assert!(x.total_variation(y, &sp) < 1e-12);
        }
    }

    #[test]
    fn verdict_depends_only_on_the_two_sides(lhs in -10.0f64..10.0, rhs in -10.0f64..10.0, tol in 0.0f64..1.0, at in -5.0f64..5.0) {
        let t = Tolerance { solver: tol, ..Tolerance::default() };
        let p = CheckPoint::new(at, lhs, rhs, t);
        let q = CheckPoint::new(0.0, lhs, rhs, t);
        prop_assert_eq!(p.pass, rhs - lhs >= -tol);
        prop_assert_eq!(p.pass, q.pass);
        prop_assert_eq!(p.slack, q.slack);
    }

    #[test]
    fn richardson_recovers_a_power_law_limit(limit in -2.0f64..2.0, c in 0.1f64..10.0, p in 0.5f64..3.0) {
        let rows: Vec<RefinementRow> = [16usize, 32, 64]
            .iter()
            .map(|&k| RefinementRow { intervals: k, value: limit - c * (k as f64).powf(-p) })
            .collect();
        let t = richardson(&rows);
        prop_assert!(t.monotone);
        prop_assert!((t.order.unwrap() - p).abs() < 1e-8);
        prop_assert!((t.extrapolate.unwrap() - limit).abs() < 1e-10 * (1.0 + c));
    }

    #[test]
    fn density_files_round_trip(sp in lattice(), seed in any::<u64>()) {
        let mu = random_density(&sp, seed, 3.0, 0);
        let mut buf = Vec::new();
        write_density_csv(&mut buf, &sp, &mu).unwrap();
        let back = read_density_csv(buf.as_slice(), &sp).unwrap();
        prop_assert_eq!(back.values(), mu.values());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn distance_is_symmetric(sp in small_lattice(), seed in any::<u64>()) {
        let a = random_density(&sp, seed, 1.5, 0);
        let b = random_density(&sp, seed.wrapping_add(1), 1.5, 0);
        let cfg = SolverConfig::default().with_intervals(16);
        let ab = solve_distance(&sp, &a, &b, &cfg).unwrap();
        let ba = solve_distance(&sp, &b, &a, &cfg).unwrap();
        prop_assert!(ab.report.succeeded() && ba.report.succeeded());
        let tol = ab.report.slack() + ba.report.slack() + 1e-10;
        prop_assert!((ab.value - ba.value).abs() <= tol, "{} vs {}", ab.value, ba.value);
    }

    #[test]
    fn optimal_paths_are_feasible_and_cheaper_than_the_flow(sp in small_lattice(), seed in any::<u64>()) {
        let a = random_density(&sp, seed, 1.5, 0);
        let cfg = SolverConfig::default().with_intervals(16);
        let flow = project_to_feasible(&sp, &ou_path(&sp, &a, 1.0, 16).unwrap()).unwrap();
        prop_assert!(ce_residual(&sp, &flow) <= SOLVER_CE_TOL);
        let sol = solve_distance(&sp, &a, flow.end(), &cfg).unwrap();
        prop_assert!(sol.report.succeeded());
        prop_assert!(ce_residual(&sp, &sol.path) <= SOLVER_CE_TOL);
        prop_assert!((action(&sp, &sol.path) - sol.value).abs() <= 1e-8 * (1.0 + sol.value));
        prop_assert!(sol.value <= action(&sp, &flow) + sol.report.slack() + 1e-10);
    }
}
