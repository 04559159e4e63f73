use super::*;
use crate::copula::{empirical_kendall_tau, Family};
use crate::stats::norm_quantile;

fn names(d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("x{k}")).collect()
}

fn gaussian(rho: f64) -> PairCopula {
    PairCopula::new(FamilyTag::base(Family::Gaussian), &[rho]).unwrap()
}

fn lattice(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / (k + 1) as f64).collect()
}

/// Trivariate Gaussian copula density with correlations r12, r13, r23.
fn gaussian3_density(u: &[f64], r12: f64, r13: f64, r23: f64) -> f64 {
    let z: Vec<f64> = u.iter().map(|&x| norm_quantile(x)).collect();
    let det = 1.0 + 2.0 * r12 * r13 * r23 - r12 * r12 - r13 * r13 - r23 * r23;
    // inverse via cofactors of the symmetric matrix
    let inv = [
        [1.0 - r23 * r23, r13 * r23 - r12, r12 * r23 - r13],
        [r13 * r23 - r12, 1.0 - r13 * r13, r12 * r13 - r23],
        [r12 * r23 - r13, r12 * r13 - r23, 1.0 - r12 * r12],
    ];
    let mut q = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { 1.0 } else { 0.0 };
            q += z[i] * (inv[i][j] / det - id) * z[j];
        }
    }
    (-0.5 * q).exp() / det.sqrt()
}

/// Fitting order for the canonical 3-vine: (1,3), (1,2), (2,3 | 1).
fn three_gaussian(r12: f64, r13: f64, partial: f64) -> VineModel {
    VineModel::new(
        RVineMatrix::default_structure(3),
        names(3),
        vec![gaussian(r13), gaussian(r12), gaussian(partial)],
    )
    .unwrap()
}

#[test]
fn independent_model_is_neutral() {
    let m = VineModel::independent(RVineMatrix::default_structure(4), names(4)).unwrap();
    assert_eq!(m.edges().len(), 6);
    assert_eq!(m.density(&[0.1, 0.5, 0.77, 0.3]).unwrap(), 1.0);
    let cols = vec![vec![0.2, 0.6], vec![0.9, 0.1], vec![0.35, 0.45], vec![0.5, 0.05]];
    assert_eq!(m.rosenblatt(&cols).unwrap(), cols);
}

#[test]
fn bivariate_vine_is_its_pair_copula() {
    let c = PairCopula::new("Clayton".parse().unwrap(), &[2.5]).unwrap();
    let m = VineModel::new(RVineMatrix::default_structure(2), names(2), vec![c.clone()]).unwrap();
    for &u in &lattice(7) {
        for &v in &lattice(7) {
            let a = m.density(&[u, v]).unwrap();
            let b = c.density(u, v).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }
    let r = m.rosenblatt(&[vec![0.3], vec![0.8]]).unwrap();
    assert_eq!(r[0][0], 0.3);
    assert_eq!(r[1][0], c.h_function_first(0.3, 0.8).unwrap());
}

#[test]
fn gaussian_vine_matches_trivariate_gaussian_copula() {
    let (r12, r13, partial): (f64, f64, f64) = (0.5, -0.3, 0.4);
    let r23 = partial * ((1.0 - r12 * r12) * (1.0 - r13 * r13)).sqrt() + r12 * r13;
    let m = three_gaussian(r12, r13, partial);
    let grid = lattice(9);
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                let p = [a, b, c];
                let got = m.density(&p).unwrap();
                let want = gaussian3_density(&p, r12, r13, r23);
                assert!((got - want).abs() < 1e-6 * want.max(1.0), "{p:?}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn rosenblatt_follows_the_composition() {
    let c13 = PairCopula::new("Gumbel".parse().unwrap(), &[1.7]).unwrap();
    let c12 = PairCopula::new("Clayton270".parse().unwrap(), &[1.2]).unwrap();
    let c23 = PairCopula::new("Frank".parse().unwrap(), &[3.0]).unwrap();
    let m = VineModel::new(
        RVineMatrix::default_structure(3),
        names(3),
        vec![c13.clone(), c12.clone(), c23.clone()],
    )
    .unwrap();
    let (u1, u2, u3) = (0.31, 0.72, 0.18);
    let v = m.rosenblatt(&[vec![u1], vec![u2], vec![u3]]).unwrap();
    let h21 = c12.h_function_first(u1, u2).unwrap();
    let h31 = c13.h_function_first(u1, u3).unwrap();
    assert_eq!(v[0][0], u1);
    assert_eq!(v[1][0], h21);
    assert_eq!(v[2][0], c23.h_function_first(h21, h31).unwrap());
}

#[test]
fn inverse_rosenblatt_round_trip() {
    let m = VineModel::new(
        RVineMatrix::default_structure(3),
        names(3),
        vec![
            PairCopula::new("Joe180".parse().unwrap(), &[1.8]).unwrap(),
            PairCopula::new("t".parse().unwrap(), &[0.4, 6.0]).unwrap(),
            PairCopula::new("Gumbel90".parse().unwrap(), &[1.5]).unwrap(),
        ],
    )
    .unwrap();
    for &a in &lattice(5) {
        for &b in &lattice(5) {
            for &c in &lattice(5) {
                let w = [a, b, c];
                let u = m.inverse_rosenblatt_point(&w).unwrap();
                let cols: Vec<Vec<f64>> = u.iter().map(|x| vec![*x]).collect();
                let back = m.rosenblatt(&cols).unwrap();
                for k in 0..3 {
                    assert!((back[k][0] - w[k]).abs() < 1e-8, "{w:?} -> {u:?} -> {back:?}");
                }
            }
        }
    }
}

#[test]
fn four_dimensional_d_vine_round_trip() {
    let structure = RVineMatrix::new(vec![
        vec![4, 0, 0, 0],
        vec![1, 3, 0, 0],
        vec![2, 1, 2, 0],
        vec![3, 2, 1, 1],
    ])
    .unwrap();
    let copulas = vec![
        gaussian(0.5),
        PairCopula::new("Clayton".parse().unwrap(), &[1.0]).unwrap(),
        PairCopula::new("Frank".parse().unwrap(), &[-2.0]).unwrap(),
        gaussian(0.2),
        PairCopula::new("Gumbel".parse().unwrap(), &[1.3]).unwrap(),
        gaussian(-0.1),
    ];
    let m = VineModel::new(structure, names(4), copulas).unwrap();
    let sim = m.simulate(300, 9).unwrap();
    let v = m.rosenblatt(&sim).unwrap();
    for k in 0..4 {
        for i in 0..300 {
            assert!((0.0..1.0).contains(&v[k][i]));
        }
    }
    for &w in &[[0.1, 0.5, 0.9, 0.3], [0.7, 0.2, 0.4, 0.95]] {
        let u = m.inverse_rosenblatt_point(&w).unwrap();
        let cols: Vec<Vec<f64>> = u.iter().map(|x| vec![*x]).collect();
        let back = m.rosenblatt(&cols).unwrap();
        for k in 0..4 {
            assert!((back[k][0] - w[k]).abs() < 1e-8);
        }
    }
}

#[test]
fn simulated_data_become_independent() {
    let m = three_gaussian(0.6, 0.5, 0.3);
    let sim = m.simulate(2000, 4).unwrap();
    let v = m.rosenblatt(&sim).unwrap();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let t = empirical_kendall_tau(&v[i], &v[j]).unwrap();
        assert!(t.abs() < 0.05, "({i},{j}): {t}");
    }
    let t = empirical_kendall_tau(&sim[0], &sim[1]).unwrap();
    assert!((t - 2.0 / std::f64::consts::PI * 0.6f64.asin()).abs() < 0.05);
}

#[test]
fn density_factorizes_over_pseudo_observations() {
    let truth = three_gaussian(0.6, 0.5, 0.3);
    let data = truth.simulate(200, 5).unwrap();
    let fit = fit_vine_detailed(
        &data,
        &RVineMatrix::default_structure(3),
        &names(3),
        &FamilyTag::default_candidates(),
        Some(0.05),
    )
    .unwrap();
    for row in 0..200 {
        let p: Vec<f64> = data.iter().map(|c| c[row]).collect();
        let total = fit.model.log_density(&p).unwrap();
        let sum: f64 = fit
            .model
            .edges()
            .iter()
            .zip(&fit.pseudo_obs)
            .map(|(e, (a, b))| e.copula.log_density(a[row], b[row]).unwrap())
            .sum();
        assert!((total - sum).abs() < 1e-9, "row {row}");
    }
}

#[test]
fn fit_validates_input() {
    let s = RVineMatrix::default_structure(3);
    let short = vec![vec![0.5; 40]; 3];
    assert!(matches!(
        fit_vine(&short, &s, &names(3), &FamilyTag::default_candidates(), None),
        Err(VineError::TooFewRows { .. })
    ));
    let mut bad = vec![lattice(60); 3];
    bad[1][7] = 1.0;
    assert!(matches!(
        fit_vine(&bad, &s, &names(3), &FamilyTag::default_candidates(), None),
        Err(VineError::DomainError { column: 1, .. })
    ));
    let one = fit_vine(&[lattice(30)], &RVineMatrix::default_structure(1), &names(1), &[], None).unwrap();
    assert!(one.edges().is_empty());
}

#[test]
fn model_serialization_round_trip() {
    let m = VineModel::new(
        RVineMatrix::default_structure(3),
        names(3),
        vec![
            PairCopula::new("Joe180".parse().unwrap(), &[1.8]).unwrap(),
            PairCopula::new("t".parse().unwrap(), &[0.4, 6.0]).unwrap(),
            PairCopula::independence(),
        ],
    )
    .unwrap();
    let text = toml::to_string(&m).unwrap();
    let back: VineModel = toml::from_str(&text).unwrap();
    assert_eq!(back, m);
}
