use super::*;
use proptest::prelude::*;

fn tag(s: &str) -> FamilyTag {
    s.parse().unwrap()
}

/// One moderately dependent parameterization per family and rotation.
fn zoo() -> Vec<PairCopula> {
    let mut out = vec![
        PairCopula::new(tag("Gaussian"), &[0.5]).unwrap(),
        PairCopula::new(tag("Gaussian"), &[-0.7]).unwrap(),
        PairCopula::new(tag("StudentT"), &[0.5, 4.0]).unwrap(),
        PairCopula::new(tag("StudentT"), &[-0.3, 12.0]).unwrap(),
        PairCopula::new(tag("Frank"), &[5.0]).unwrap(),
        PairCopula::new(tag("Frank"), &[-3.0]).unwrap(),
    ];
    for (name, theta) in [("Clayton", 2.0), ("Gumbel", 1.8), ("Joe", 2.2)] {
        for rot in [0, 90, 180, 270] {
            out.push(PairCopula::new(tag(&format!("{name}{rot}")), &[theta]).unwrap());
        }
    }
    out
}

fn lattice(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / (k + 1) as f64).collect()
}

#[test]
fn tag_parsing_and_display() {
    assert_eq!(tag("clayton_90").to_string(), "Clayton90");
    assert_eq!(tag("G180"), FamilyTag::new(Family::Gumbel, Rotation::R180).unwrap());
    assert_eq!(tag("t"), FamilyTag::base(Family::StudentT));
    assert!("Gaussian90".parse::<FamilyTag>().is_err());
    assert!("Clayton45".parse::<FamilyTag>().is_err());
    assert!("Plackett".parse::<FamilyTag>().is_err());
    for t in FamilyTag::default_candidates() {
        assert_eq!(t.to_string().parse::<FamilyTag>().unwrap(), t);
    }
    assert_eq!(FamilyTag::default_candidates().len(), 15);
}

#[test]
fn parameter_domains() {
    assert!(PairCopula::new(tag("Gaussian"), &[1.0]).is_err());
    assert!(PairCopula::new(tag("StudentT"), &[0.2, 1.5]).is_err());
    assert!(PairCopula::new(tag("StudentT"), &[0.2, 31.0]).is_err());
    assert!(PairCopula::new(tag("Clayton"), &[0.0]).is_err());
    assert!(PairCopula::new(tag("Gumbel"), &[0.99]).is_err());
    assert!(PairCopula::new(tag("Joe"), &[0.5]).is_err());
    assert!(PairCopula::new(tag("Frank"), &[0.0]).is_err());
    assert!(PairCopula::new(tag("Clayton"), &[1.0, 2.0]).is_err());
    assert!(PairCopula::new(tag("Independence"), &[]).is_ok());
}

#[test]
fn reference_values() {
    let ind = PairCopula::independence();
    assert_eq!(ind.density(0.2, 0.9).unwrap(), 1.0);
    assert_eq!(ind.h_function(0.42, 0.9).unwrap(), 0.42);
    assert_eq!(ind.h_inverse(0.42, 0.9).unwrap(), 0.42);
    assert_eq!(ind.kendall_tau(), 0.0);

    let g0 = PairCopula::new(tag("Gaussian"), &[0.0]).unwrap();
    assert!((g0.density(0.3, 0.7).unwrap() - 1.0).abs() < 1e-14);

    let g = PairCopula::new(tag("Gaussian"), &[0.5]).unwrap();
    assert!((g.density(0.5, 0.5).unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    assert!((g.h_function(0.5, 0.5).unwrap() - 0.5).abs() < 1e-15);
    assert!((g.h_inverse(0.5, 0.5).unwrap() - 0.5).abs() < 1e-15);
    assert!((g.kendall_tau() - 1.0 / 3.0).abs() < 1e-15);

    let c = PairCopula::new(tag("Clayton"), &[2.0]).unwrap();
    let expected = 8.0 * 7f64.powf(-1.5);
    assert!((c.h_function(0.5, 0.5).unwrap() - expected).abs() < 1e-14);
    assert!((c.kendall_tau() - 0.5).abs() < 1e-15);
}

#[test]
fn domain_errors() {
    let g = PairCopula::new(tag("Gaussian"), &[0.5]).unwrap();
    assert_eq!(g.density(0.0, 0.5), Err(CopulaError::DomainError(0.0)));
    assert!(g.h_function(0.5, 1.0).is_err());
    assert!(g.h_inverse(1.2, 0.5).is_err());
    assert!(matches!(g.cdf(0.5, 0.5), Err(CopulaError::NoClosedCdf(_))));
}

#[test]
fn density_integrates_to_one() {
    let k = 600;
    let h = 1.0 / k as f64;
    let mid: Vec<f64> = (0..k).map(|i| (i as f64 + 0.5) * h).collect();
    for c in zoo() {
        let total: f64 = mid
            .iter()
            .flat_map(|&u| mid.iter().map(move |&v| (u, v)))
            .map(|(u, v)| c.density(u, v).unwrap())
            .sum::<f64>()
            * h
            * h;
        assert!((total - 1.0).abs() < 1e-3, "{c}: {total}");
    }
}

#[test]
fn h_functions_match_cdf_derivatives() {
    let step = 1e-5;
    for c in zoo() {
        if c.cdf(0.5, 0.5).is_err() {
            continue;
        }
        for &u in &lattice(9) {
            for &v in &lattice(9) {
                let dv = (c.cdf(u, v + step).unwrap() - c.cdf(u, v - step).unwrap()) / (2.0 * step);
                let du = (c.cdf(u + step, v).unwrap() - c.cdf(u - step, v).unwrap()) / (2.0 * step);
                assert!((c.h_function(u, v).unwrap() - dv).abs() < 1e-5, "{c} at ({u}, {v})");
                assert!((c.h_function_first(u, v).unwrap() - du).abs() < 1e-5, "{c} at ({u}, {v})");
            }
        }
    }
}

#[test]
fn density_is_derivative_of_h_functions() {
    let step = 1e-6;
    for c in zoo() {
        for &u in &lattice(7) {
            for &v in &lattice(7) {
                let d = c.density(u, v).unwrap();
                let du = (c.h_function(u + step, v).unwrap() - c.h_function(u - step, v).unwrap()) / (2.0 * step);
                let dv = (c.h_function_first(u, v + step).unwrap() - c.h_function_first(u, v - step).unwrap())
                    / (2.0 * step);
                assert!((du - d).abs() < 1e-5 * d.max(1.0), "{c} at ({u}, {v}): {du} vs {d}");
                assert!((dv - d).abs() < 1e-5 * d.max(1.0), "{c} at ({u}, {v}): {dv} vs {d}");
            }
        }
    }
}

#[test]
fn rotation_convention_is_pinned() {
    for name in ["Clayton", "Gumbel", "Joe"] {
        let base = PairCopula::new(tag(name), &[2.0]).unwrap();
        let r90 = PairCopula::new(tag(&format!("{name}90")), &[2.0]).unwrap();
        let r180 = PairCopula::new(tag(&format!("{name}180")), &[2.0]).unwrap();
        let r270 = PairCopula::new(tag(&format!("{name}270")), &[2.0]).unwrap();
        for &u in &lattice(5) {
            for &v in &lattice(5) {
                let d = |c: &PairCopula, a: f64, b: f64| c.density(a, b).unwrap();
                assert!((d(&r90, u, v) - d(&base, v, 1.0 - u)).abs() < 1e-10);
                assert!((d(&r180, u, v) - d(&base, 1.0 - u, 1.0 - v)).abs() < 1e-10);
                assert!((d(&r270, u, v) - d(&base, 1.0 - v, u)).abs() < 1e-10);
                assert!((d(&r90.swapped(), v, u) - d(&r90, u, v)).abs() < 1e-10);
            }
        }
        assert!((r180.kendall_tau() - base.kendall_tau()).abs() < 1e-15);
        assert!((r90.kendall_tau() + base.kendall_tau()).abs() < 1e-15);
        assert!((r270.kendall_tau() + base.kendall_tau()).abs() < 1e-15);
    }
}

#[test]
fn simulated_tau_matches_model_tau() {
    for c in zoo() {
        let (u, v) = simulate_pair(&c, 20_000, 3).unwrap();
        let t = empirical_kendall_tau(&u, &v).unwrap();
        assert!((t - c.kendall_tau()).abs() < 0.02, "{c}: {t} vs {}", c.kendall_tau());
    }
}

#[test]
fn h_inverse_round_trip() {
    let grid = lattice(49);
    for c in zoo() {
        let mut worst: f64 = 0.0;
        for &u in &grid {
            for &v in &grid {
                let w = c.h_function(u, v).unwrap();
                if w > 0.0 && w < 1.0 {
                    worst = worst.max((c.h_inverse(w, v).unwrap() - u).abs());
                }
                let w1 = c.h_function_first(u, v).unwrap();
                if w1 > 0.0 && w1 < 1.0 {
                    worst = worst.max((c.h_inverse_first(w1, u).unwrap() - v).abs());
                }
            }
        }
        assert!(worst <= 1e-7, "{c}: {worst}");
    }
}

#[test]
fn h_inverse_hits_target_level() {
    for c in zoo() {
        for &w in &lattice(19) {
            for &v in &lattice(19) {
                let u = c.h_inverse(w, v).unwrap();
                assert!((c.h_function(u, v).unwrap() - w).abs() <= 1e-10, "{c} at w={w}, v={v}");
            }
        }
    }
}

/// O(n²) τ-b used as an oracle for the O(n log n) implementation.
fn brute_force_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut s, mut tx, mut ty) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).signum() * if x[i] == x[j] { 0.0 } else { 1.0 };
            let b = (y[i] - y[j]).signum() * if y[i] == y[j] { 0.0 } else { 1.0 };
            s += a * b;
            tx += a * a;
            ty += b * b;
        }
    }
    s / (tx * ty as f64).sqrt()
}

#[test]
fn kendall_tau_examples() {
    let x = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(empirical_kendall_tau(&x, &x).unwrap(), 1.0);
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    assert_eq!(empirical_kendall_tau(&x, &neg).unwrap(), -1.0);
    let t = empirical_kendall_tau(&x, &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert!((t - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(
        empirical_kendall_tau(&x, &[1.0]),
        Err(CopulaError::LengthMismatch(4, 1))
    );
}

#[test]
fn independence_test_examples() {
    let u: Vec<f64> = lattice(100);
    let t = independence_test(&u, &u, 0.05).unwrap();
    assert_eq!(t.tau, 1.0);
    assert!(t.p_value < 1e-20 && !t.independent);

    // a symmetric pattern with exactly zero tau
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [1.0, 4.0, 3.0, 2.0];
    assert_eq!(brute_force_tau(&x, &y), 0.0);
    let t = independence_test(&x, &y, 0.05).unwrap();
    assert_eq!((t.statistic, t.p_value, t.independent), (0.0, 1.0, true));
}

#[test]
fn independence_test_calibration() {
    let ind = PairCopula::independence();
    let accepted = (0..200)
        .filter(|&seed| {
            let (u, v) = simulate_pair(&ind, 600, seed).unwrap();
            independence_test(&u, &v, 0.05).unwrap().independent
        })
        .count();
    // binomial(200, 0.95): 3 SDs is about 9.2
    assert!((181..=200).contains(&accepted), "{accepted}");
}

#[test]
fn simulation_is_deterministic() {
    let c = PairCopula::new(tag("Gumbel"), &[2.0]).unwrap();
    let a = simulate_pair(&c, 500, 11).unwrap();
    let b = simulate_pair(&c, 500, 11).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, simulate_pair(&c, 500, 12).unwrap());
}

#[test]
fn simulated_gaussian_tau() {
    let g = PairCopula::new(tag("Gaussian"), &[0.5]).unwrap();
    let (u, v) = simulate_pair(&g, 100_000, 5).unwrap();
    let t = empirical_kendall_tau(&u, &v).unwrap();
    assert!((0.31..=0.35).contains(&t), "{t}");

    let (u, v) = simulate_pair(&PairCopula::independence(), 100_000, 6).unwrap();
    assert!(empirical_kendall_tau(&u, &v).unwrap().abs() < 0.01);

    let c = PairCopula::new(tag("Clayton"), &[2.0]).unwrap();
    let (u, v) = simulate_pair(&c, 100_000, 7).unwrap();
    assert!((empirical_kendall_tau(&u, &v).unwrap() - 0.5).abs() < 0.01);
}

#[test]
fn fit_examples() {
    let g = PairCopula::new(tag("Gaussian"), &[0.7]).unwrap();
    let (u, v) = simulate_pair(&g, 1000, 21).unwrap();
    let rho = fit_mle(tag("Gaussian"), &u, &v).unwrap().copula.params()[0];
    assert!((0.65..=0.75).contains(&rho), "{rho}");

    let gu = PairCopula::new(tag("Gumbel"), &[2.0]).unwrap();
    let (u, v) = simulate_pair(&gu, 1000, 22).unwrap();
    let theta = fit_mle(tag("Gumbel"), &u, &v).unwrap().copula.params()[0];
    assert!((1.8..=2.2).contains(&theta), "{theta}");

    let (u, v) = simulate_pair(&PairCopula::independence(), 1000, 23).unwrap();
    let fit = fit_mle(tag("Frank"), &u, &v).unwrap();
    let theta = fit.copula.params().first().copied().unwrap_or(0.0);
    assert!(theta.abs() < 0.5, "{theta}");
    assert!(fit.loglik.abs() < 3.0, "{}", fit.loglik);
}

#[test]
fn fit_rejects_bad_input() {
    let u = lattice(10);
    assert!(matches!(
        fit_mle(tag("Gaussian"), &u, &u),
        Err(CopulaError::TooFewPoints { .. })
    ));
    let mut u = lattice(30);
    let v = u.clone();
    u[3] = 1.0;
    assert!(matches!(fit_mle(tag("Clayton"), &u, &v), Err(CopulaError::DomainError(_))));
}

#[test]
fn student_t_fit_recovers_both_parameters() {
    let c = PairCopula::new(tag("StudentT"), &[0.6, 4.0]).unwrap();
    let (u, v) = simulate_pair(&c, 2000, 31).unwrap();
    let fit = fit_mle(tag("StudentT"), &u, &v).unwrap();
    let (rho, nu) = (fit.copula.params()[0], fit.copula.params()[1]);
    assert!((rho - 0.6).abs() < 0.05, "{rho}");
    assert!((2.0..=8.0).contains(&nu), "{nu}");
    // the t fit nests the Gaussian as nu grows, so it cannot do worse by much
    let gauss = fit_mle(tag("Gaussian"), &u, &v).unwrap();
    assert!(fit.loglik > gauss.loglik);
}

#[test]
fn selection_examples() {
    let candidates = FamilyTag::default_candidates();
    // Survival Joe is Clayton's closest competitor at this sample size.
    let c = PairCopula::new(tag("Clayton"), &[3.0]).unwrap();
    let mut hits = 0;
    for seed in 0..10 {
        let (u, v) = simulate_pair(&c, 2000, seed).unwrap();
        let s = select_family(&u, &v, &candidates, Some(0.05)).unwrap();
        assert!(["Clayton", "Joe180"].contains(&s.copula.tag().to_string().as_str()));
        hits += usize::from(s.copula.tag() == tag("Clayton"));
    }
    assert!(hits >= 7, "{hits}/10");

    let (u, v) = simulate_pair(&PairCopula::independence(), 2000, 42).unwrap();
    let s = select_family(&u, &v, &candidates, Some(0.05)).unwrap();
    if s.pretest.unwrap().independent {
        assert!(s.copula.is_independence());
    }

    let g = PairCopula::new(tag("Gaussian"), &[0.8]).unwrap();
    let (u, v) = simulate_pair(&g, 2000, 43).unwrap();
    let s = select_family(&u, &v, &candidates, Some(0.05)).unwrap();
    assert!(matches!(s.copula.family(), Family::Gaussian | Family::StudentT), "{}", s.copula);
    let tau = empirical_kendall_tau(&u, &v).unwrap();
    assert!((s.copula.kendall_tau() - tau).abs() < 0.05);

    assert_eq!(select_family(&u, &v, &[], None), Err(CopulaError::EmptyCandidates));
}

#[test]
fn negative_dependence_selects_counter_rotation() {
    let c = PairCopula::new(tag("Gumbel270"), &[2.5]).unwrap();
    let (u, v) = simulate_pair(&c, 2000, 51).unwrap();
    let s = select_family(&u, &v, &FamilyTag::default_candidates(), Some(0.05)).unwrap();
    assert_eq!(s.copula.tag(), tag("Gumbel270"));
    assert!((s.copula.params()[0] - 2.5).abs() < 0.2);
}

proptest! {
    #[test]
    fn kendall_matches_brute_force(
        pairs in proptest::collection::vec((0u8..6, 0u8..6), 2..80)
    ) {
        // small integer range forces plenty of ties
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let fast = empirical_kendall_tau(&x, &y).unwrap();
        let slow = brute_force_tau(&x, &y);
        if slow.is_finite() {
            prop_assert!((fast - slow).abs() < 1e-12, "{} vs {}", fast, slow);
        } else {
            prop_assert_eq!(fast, 0.0);
        }
    }

    #[test]
    fn h_function_is_monotone(
        idx in 0usize..18, u1 in 0.001f64..0.999, u2 in 0.001f64..0.999, v in 0.001f64..0.999
    ) {
        let c = &zoo()[idx];
        let (a, b) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
        let (ha, hb) = (c.h_function(a, v).unwrap(), c.h_function(b, v).unwrap());
        prop_assert!(ha <= hb + 1e-12);
        prop_assert!((0.0..=1.0).contains(&ha));
    }
}
