//! Frozen expected values computed by independent oracles: hand calculus,
//! one-dimensional scans, Poisson series and refined grid searches, all kept
//! apart from the implementation paths they check.

use lpbsde::bsde::{builtin_problem, solve_backward, SolveMethod};
use lpbsde::estimates::{poisson_series, stable_terminal_moment};
use lpbsde::levy::{Atom, LevyMeasure, Region};
use lpbsde::paths::{uniform_grid, PathBundle};
use lpbsde::sum_norms::time_integrated_bound_check;
use lpbsde::sum_norms::{sum_norm, MarkFunction, TimeSlice};
use lpbsde::tech_inequality::{alpha_const, epsilon_max, psi_fn, vartheta, TechIneqParams};

/// Independent brute force for the sum norm over per-atom split magnitudes:
/// recursive zooming scan, nine points per axis.
fn brute_force_sum_norm(weights: &[f64], mags: &[f64], q: f64) -> f64 {
    let n = mags.len();
    let objective = |s: &[f64]| -> f64 {
        let lq: f64 = weights.iter().zip(s).map(|(w, si)| w * si.powf(q)).sum();
        let l2: f64 = weights
            .iter()
            .zip(s)
            .zip(mags)
            .map(|((w, si), mi)| w * (mi - si) * (mi - si))
            .sum();
        lq.powf(1.0 / q) + l2.sqrt()
    };
    let mut lo = vec![0.0; n];
    let mut hi = mags.to_vec();
    let mut best = f64::INFINITY;
    let mut center = mags.to_vec();
    for _stage in 0..18 {
        let pts = 9usize;
        let mut idx = vec![0usize; n];
        loop {
            let s: Vec<f64> = (0..n)
                .map(|i| lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (pts - 1) as f64)
                .collect();
            let v = objective(&s);
            if v < best {
                best = v;
                center = s;
            }
            let mut c = 0;
            while c < n {
                idx[c] += 1;
                if idx[c] < pts {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
            if c == n {
                break;
            }
        }
        for i in 0..n {
            let half = (hi[i] - lo[i]) / 3.0;
            lo[i] = (center[i] - half).max(0.0);
            hi[i] = (center[i] + half).min(mags[i]);
        }
    }
    best
}

#[test]
fn single_atom_sum_norms_match_one_dimensional_scan() {
    // unit weight, q = 1.5: the infimum over splits of |v¹| + |v²| is |v|
    let m = LevyMeasure::single_atom(1.0, 1.0);
    for v in [0.4_f64, 1.0, 3.7] {
        let phi = MarkFunction::scalar_atoms(&[v]);
        let got = sum_norm(&phi, &m, 1.5).unwrap().value;
        let brute = brute_force_sum_norm(&[1.0], &[v], 1.5);
        assert!((got - brute).abs() < 1e-8);
        assert!((got - v).abs() < 1e-8);
    }
    // weight 4, q = 1: inf of 4|v¹| + 2|v²| is attained at the all-L² split
    let m4 = LevyMeasure::single_atom(1.0, 4.0);
    let phi = MarkFunction::scalar_atoms(&[1.0]);
    let got = sum_norm(&phi, &m4, 1.0).unwrap().value;
    let brute = brute_force_sum_norm(&[4.0], &[1.0], 1.0);
    assert!((got - brute).abs() < 1e-8);
    assert!((got - 2.0).abs() < 1e-8);
}

#[test]
fn three_atom_sum_norm_matches_independent_brute_force() {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for trial in 0..40 {
        let n = 1 + (rng.random::<u32>() % 3) as usize;
        let mut atoms = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            atoms.push(Atom {
                u: vec![0.5 + i as f64],
                w: 0.2 + 3.0 * rng.random::<f64>(),
            });
            values.push(vec![5.0 * rng.random::<f64>() - 2.5]);
        }
        let q = if trial % 2 == 0 {
            1.0
        } else {
            1.2 + 0.6 * rng.random::<f64>()
        };
        let m = LevyMeasure::Atomic {
            atoms: atoms.clone(),
        };
        let phi = MarkFunction::AtomValues {
            values: values.clone(),
        };
        let got = sum_norm(&phi, &m, q).unwrap();
        let weights: Vec<f64> = atoms.iter().map(|a| a.w).collect();
        let mags: Vec<f64> = values.iter().map(|v| v[0].abs()).collect();
        let brute = brute_force_sum_norm(&weights, &mags, q);
        assert!(
            (got.value - brute).abs() < 1e-6,
            "trial {trial}: {} vs {brute}",
            got.value
        );
    }
}

#[test]
fn closed_form_constants_from_hand_arithmetic() {
    // vartheta(1/8, 3/2): inner term (0.5 / 0.25)^4 = 16, sqrt(8.5) - 1
    assert!((vartheta(0.125, 1.5) - (8.5_f64.sqrt() - 1.0)).abs() < 1e-14);
    // alpha(0, 3/2) = (4·2 + 1)^2 = 81, alpha(1, 3/2) = 17² = 289
    assert_eq!(alpha_const(0.0, 1.5).round() as i64, 81);
    assert_eq!(alpha_const(1.0, 1.5).round() as i64, 289);
    // epsilon_max inverts vartheta >= alpha exactly at
    // (p-1) / (2 (2(α+1)²-1)^{(2-p)/2}); check against that hand formula
    let a = 81.0_f64;
    let hand = 0.5 / (2.0 * (2.0 * 82.0 * 82.0 - 1.0_f64).powf(0.25));
    let got = epsilon_max(0.0, 1.5);
    assert!(got <= hand && got >= hand * (1.0 - 1e-8), "{got} vs {hand}");
    assert!(vartheta(got, 1.5) >= a);
    // Ψ(1, 1, 3/2) = 2^{3/2} - 1 - 3/2
    let psi = psi_fn(&[1.0], &[1.0], 1.5);
    assert!((psi - (2.0_f64.powf(1.5) - 2.5)).abs() < 1e-14);
}

#[test]
fn stable_measure_split_integrals() {
    let m = LevyMeasure::power_law(1.5);
    // 2 ∫_0^1 u^{1-1.5} du = 4 and 2 ∫_1^∞ u^{-1.5} du = 4
    assert!((m.moment_integral(2.0, Region::Below(1.0)) - 4.0).abs() < 1e-10);
    assert!((m.moment_integral(1.0, Region::Above(1.0)) - 4.0).abs() < 1e-10);
    // validation integral 4 + 4/3
    let rep = m.validate().unwrap();
    assert!((rep.integral - 16.0 / 3.0).abs() < 1e-10);
}

#[test]
fn counterexample_solution_against_poisson_series() {
    // E[N_T^{p/2}] from the series against the Monte Carlo e_psi of the
    // solved counterexample
    let p = 1.5;
    let prob = builtin_problem("counterexample").unwrap();
    let scenarios: Vec<_> = (0..30_000)
        .map(|i| PathBundle::generate(&prob.measure, None, uniform_grid(1.0, 8), 0, 99, i).unwrap())
        .collect();
    let (sols, _) = solve_backward(&prob, &scenarios, SolveMethod::MarkovExact).unwrap();
    let diag = lpbsde::estimates::ep_norms(&sols, p).unwrap();
    let series = poisson_series(1.0, |x| x.powf(p / 2.0));
    assert!(
        (diag.e_psi.mean - series).abs() <= 3.0 * diag.e_psi.stderr,
        "{} vs {series}",
        diag.e_psi.mean
    );
    // doubling the sample roughly halves the standard error
    let (sols_half, _) =
        solve_backward(&prob, &scenarios[..7500], SolveMethod::MarkovExact).unwrap();
    let diag_half = lpbsde::estimates::ep_norms(&sols_half, p).unwrap();
    let ratio = diag_half.e_psi.stderr / diag.e_psi.stderr;
    assert!(ratio > 1.2 && ratio < 3.5, "stderr ratio {ratio}");
}

#[test]
fn stable_moment_self_consistent_under_truncation_refinement() {
    // E|X_T|^p for p = 1 < alpha = 1.5 stays stable as the truncation shrinks
    let p = 1.0;
    let alpha = 1.5;
    let a = stable_terminal_moment(alpha, p, 1.0, 0.1, 6000, 5, true).unwrap();
    let b = stable_terminal_moment(alpha, p, 1.0, 0.05, 6000, 6, true).unwrap();
    let c = stable_terminal_moment(alpha, p, 1.0, 0.01, 6000, 7, true).unwrap();
    let tol = |x: &lpbsde::stats::BatchMean, y: &lpbsde::stats::BatchMean| {
        3.0 * (x.stderr + y.stderr) + 0.05 * y.mean.abs()
    };
    assert!(
        (a.mean - b.mean).abs() <= tol(&a, &b),
        "{} vs {}",
        a.mean,
        b.mean
    );
    assert!(
        (b.mean - c.mean).abs() <= tol(&b, &c),
        "{} vs {}",
        b.mean,
        c.mean
    );
}

#[test]
fn lemma_grid_runs_clean_on_a_sample_cell() {
    let params = TechIneqParams::new(1.3, 5.0, None).unwrap();
    let rep = lpbsde::tech_inequality::check_inequality(
        &params,
        &lpbsde::tech_inequality::GridSpec::default(),
    )
    .unwrap();
    assert_eq!(rep.violation_count, 0, "min slack {}", rep.min_slack);
}

#[test]
fn time_integrated_bound_on_random_piecewise_instances() {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    for &t_horizon in &[0.25_f64, 1.0, 4.0] {
        for trial in 0..8 {
            let n_atoms = 1 + (rng.random::<u32>() % 3) as usize;
            let n_slices = 2 + (rng.random::<u32>() % 6) as usize;
            let atoms: Vec<Atom> = (0..n_atoms)
                .map(|i| Atom {
                    u: vec![0.4 + i as f64],
                    w: 0.2 + 2.0 * rng.random::<f64>(),
                })
                .collect();
            let m = LevyMeasure::Atomic { atoms };
            let slices: Vec<TimeSlice> = (0..n_slices)
                .map(|_| TimeSlice {
                    dt: t_horizon / n_slices as f64,
                    phi: MarkFunction::AtomValues {
                        values: (0..n_atoms)
                            .map(|_| vec![6.0 * rng.random::<f64>() - 3.0])
                            .collect(),
                    },
                })
                .collect();
            let rep = time_integrated_bound_check(&slices, &m).unwrap();
            assert!(
                rep.ok,
                "T={t_horizon} trial {trial}: lhs {} rhs {}",
                rep.lhs, rep.rhs
            );
        }
    }
}

#[test]
fn apriori_ratio_stable_across_registry() {
    // the estimated constant never exceeds 10x its median over the registry
    let p = 1.5;
    let mut ratios = Vec::new();
    for id in ["counterexample", "zero", "linear-decay"] {
        let problem = builtin_problem(id).unwrap();
        let scenarios: Vec<_> = (0..4000)
            .map(|i| {
                PathBundle::generate(&problem.measure, None, uniform_grid(1.0, 32), 0, 55, i)
                    .unwrap()
            })
            .collect();
        let (sols, _) = solve_backward(&problem, &scenarios, SolveMethod::MarkovExact).unwrap();
        let diags = lpbsde::estimates::ep_norms(&sols, p).unwrap();
        let xi_p: Vec<f64> = scenarios
            .iter()
            .map(|sc| {
                let xi = problem.terminal.eval_count(sc.jumps.len() as f64);
                xi.iter().map(|v| v * v).sum::<f64>().sqrt().powf(p)
            })
            .collect();
        let f_int = vec![0.0; xi_p.len()];
        let rep = lpbsde::estimates::apriori_ratio(&diags, &xi_p, &f_int).unwrap();
        assert!(!rep.flagged, "{id}");
        assert!(rep.c_hat.is_finite(), "{id}");
        ratios.push(rep.c_hat);
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    for (r, id) in ratios
        .iter()
        .zip(["counterexample", "zero", "linear-decay"])
    {
        assert!(*r <= 10.0 * median, "{id}: ratio {r} vs median {median}");
    }
}

#[test]
fn bdg_ratio_stable_across_horizon_sweep() {
    let m = LevyMeasure::single_atom(1.0, 1.0);
    let psi = MarkFunction::scalar_atoms(&[1.0]);
    let p = 1.5;
    let mut entries = Vec::new();
    for t in [1.0, 2.0, 4.0] {
        let rep = lpbsde::estimates::bdg_sandwich(&psi, &m, p, t, 20_000, 31).unwrap();
        let ratio = rep.ratio.unwrap();
        // crude stderr propagation for a ratio of means
        let rel = rep.e_sup_p.stderr / rep.e_sup_p.mean + rep.e_qv_p2.stderr / rep.e_qv_p2.mean;
        entries.push((ratio, ratio * rel));
    }
    for w in entries.windows(2) {
        let (r1, s1) = w[0];
        let (r2, s2) = w[1];
        assert!(
            (r1 - r2).abs() <= 4.0 * (s1 + s2) + 0.15 * r1.max(r2),
            "ratios drifted: {r1}±{s1} vs {r2}±{s2}"
        );
    }
}

#[test]
fn grid_refinement_improves_all_closed_form_examples() {
    // halving the step shrinks the worst node error at order >= 0.9 unless it
    // is already at roundoff
    for id in ["counterexample", "zero", "linear-decay"] {
        let problem = builtin_problem(id).unwrap();
        let exact = problem.exact.clone().unwrap();
        let mut errors = Vec::new();
        for steps in [8usize, 16, 32, 64] {
            let scenarios: Vec<_> = (0..16)
                .map(|i| {
                    PathBundle::generate(&problem.measure, None, uniform_grid(1.0, steps), 0, 77, i)
                        .unwrap()
                })
                .collect();
            let (sols, _) = solve_backward(&problem, &scenarios, SolveMethod::MarkovExact).unwrap();
            let mut worst = 0.0_f64;
            for (sol, sc) in sols.iter().zip(&scenarios) {
                let mut e = 0usize;
                let mut count = 0usize;
                for (i, &t) in sol.grid.iter().enumerate() {
                    while e < sc.jumps.len() && sc.jumps[e].time <= t {
                        count += 1;
                        e += 1;
                    }
                    worst = worst.max((sol.y[i][0] - exact(t, 1.0, count as f64)[0]).abs());
                }
            }
            errors.push(worst);
        }
        for w in errors.windows(2) {
            let at_roundoff = w[0] <= 1e-10 && w[1] <= 1e-10;
            assert!(
                at_roundoff || w[1] <= w[0] / 2f64.powf(0.9),
                "{id}: errors {errors:?}"
            );
        }
    }
}
