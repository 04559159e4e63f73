use log::{debug, warn};

use super::kernel::{frank_tau, joe_tau, Kernel};
use super::tau::{empirical_kendall_tau, independence_test, IndependenceTest};
use super::{CopulaError, Family, FamilyTag, PairCopula, Rotation, FRANK_ZERO_TOL, NU_MAX, NU_MIN};
use crate::optim::{brent_minimize, brent_root};
use crate::stats::{norm_quantile, StudentT};

const MIN_FIT_POINTS: usize = 20;
const RHO_BOUND: f64 = 0.999;
const BRENT_TOL: f64 = 1e-8;
const BRENT_ITER: usize = 200;
/// Coarse ν grid profiled before the joint refinement.
const NU_GRID: [f64; 9] = [2.0, 2.5, 3.0, 4.0, 6.0, 9.0, 13.0, 20.0, 30.0];

/// Search interval for the single parameter of each one-parameter family.
fn search_bounds(family: Family) -> (f64, f64) {
    match family {
        Family::Gaussian => (-RHO_BOUND, RHO_BOUND),
        Family::Clayton => (1e-4, 40.0),
        Family::Gumbel | Family::Joe => (1.0, 30.0),
        Family::Frank => (-50.0, 50.0),
        Family::Independence | Family::StudentT => unreachable!("not a one-parameter family"),
    }
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub copula: PairCopula,
    pub loglik: f64,
    pub n: usize,
    /// The optimizer stopped on a clipped edge of the search interval.
    pub at_boundary: bool,
}

impl FitResult {
    pub fn bic(&self) -> f64 {
        -2.0 * self.loglik + self.copula.n_params() as f64 * (self.n as f64).ln()
    }

    pub fn aic(&self) -> f64 {
        -2.0 * self.loglik + 2.0 * self.copula.n_params() as f64
    }
}

fn validate(u: &[f64], v: &[f64]) -> Result<(), CopulaError> {
    if u.len() != v.len() {
        return Err(CopulaError::LengthMismatch(u.len(), v.len()));
    }
    if u.len() < MIN_FIT_POINTS {
        return Err(CopulaError::TooFewPoints {
            got: u.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    if let Some(&bad) = u.iter().chain(v).find(|x| !(**x > 0.0 && **x < 1.0)) {
        return Err(CopulaError::DomainError(bad));
    }
    Ok(())
}

/// Parameter of the unrotated family whose Kendall's τ equals `tau`.
fn invert_tau(family: Family, tau: f64) -> f64 {
    let tau = tau.clamp(-0.98, 0.98);
    let (lo, hi) = search_bounds(family);
    let theta = match family {
        Family::Gaussian => (std::f64::consts::FRAC_PI_2 * tau).sin(),
        Family::Clayton => 2.0 * tau / (1.0 - tau),
        Family::Gumbel => 1.0 / (1.0 - tau),
        Family::Joe => {
            if tau <= 0.0 {
                1.0
            } else {
                brent_root(|t| joe_tau(t) - tau, 1.0, hi, 1e-6, 100).unwrap_or(hi)
            }
        }
        Family::Frank => {
            if tau.abs() < 1e-6 {
                0.0
            } else {
                let t = brent_root(|t| frank_tau(t) - tau.abs(), 1e-6, hi, 1e-6, 100).unwrap_or(hi);
                t.copysign(tau)
            }
        }
        Family::Independence | Family::StudentT => unreachable!(),
    };
    theta.clamp(lo, hi)
}

fn near(x: f64, edge: f64, span: f64) -> bool {
    (x - edge).abs() <= 1e-6 * span.max(1.0)
}

/// Maximum-likelihood fit of one family/rotation, started from τ inversion.
pub fn fit_mle(tag: FamilyTag, u: &[f64], v: &[f64]) -> Result<FitResult, CopulaError> {
    validate(u, v)?;
    let n = u.len();
    let family = tag.family();
    if family == Family::Independence {
        return Ok(FitResult {
            copula: PairCopula::independence(),
            loglik: 0.0,
            n,
            at_boundary: false,
        });
    }
    let tau = empirical_kendall_tau(u, v)?;
    let base_tau = if tag.rotation().is_counter() { -tau } else { tau };

    let result = match family {
        Family::Gaussian => fit_gaussian(u, v, base_tau),
        Family::StudentT => fit_student_t(u, v, base_tau),
        _ => fit_one_parameter(tag, u, v, base_tau),
    }?;
    if result.at_boundary {
        debug!("{} fit stopped at the search boundary: {}", tag, result.copula);
    }
    Ok(result)
}

fn fit_gaussian(u: &[f64], v: &[f64], tau: f64) -> Result<FitResult, CopulaError> {
    let n = u.len() as f64;
    let (mut sq, mut cross) = (0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (x, y) = (norm_quantile(super::clamp_unit(a)), norm_quantile(super::clamp_unit(b)));
        sq += x * x + y * y;
        cross += x * y;
    }
    let loglik = |rho: f64| {
        let one_m = 1.0 - rho * rho;
        -0.5 * n * one_m.ln() - (rho * rho * sq - 2.0 * rho * cross) / (2.0 * one_m)
    };
    let start = invert_tau(Family::Gaussian, tau);
    let m = brent_minimize(|r| -loglik(r), -RHO_BOUND, RHO_BOUND, Some(start), BRENT_TOL, BRENT_ITER);
    let rho = m.x;
    Ok(FitResult {
        copula: PairCopula::new(FamilyTag::base(Family::Gaussian), &[rho])?,
        loglik: loglik(rho),
        n: u.len(),
        at_boundary: near(rho.abs(), RHO_BOUND, 1.0),
    })
}

fn fit_one_parameter(tag: FamilyTag, u: &[f64], v: &[f64], tau: f64) -> Result<FitResult, CopulaError> {
    let family = tag.family();
    let (lo, hi) = search_bounds(family);
    let nll = |theta: f64| {
        if family == Family::Frank && theta.abs() < 1e-10 {
            return 0.0;
        }
        match PairCopula::new(tag, &[theta]) {
            Ok(c) => -c.log_likelihood(u, v),
            Err(_) => f64::INFINITY,
        }
    };
    let start = invert_tau(family, tau);
    let m = brent_minimize(nll, lo, hi, Some(start), BRENT_TOL, BRENT_ITER);
    let theta = m.x;
    let at_boundary = near(theta, lo, hi - lo) || near(theta, hi, hi - lo);

    if family == Family::Frank && theta.abs() < FRANK_ZERO_TOL {
        return Ok(FitResult {
            copula: PairCopula::independence(),
            loglik: 0.0,
            n: u.len(),
            at_boundary: false,
        });
    }
    let copula = PairCopula::new(tag, &[theta])?;
    let loglik = copula.log_likelihood(u, v);
    Ok(FitResult {
        copula,
        loglik,
        n: u.len(),
        at_boundary,
    })
}

/// Student-t scores for one ν, cached so ρ can be profiled cheaply.
struct TScores {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TScores {
    fn new(u: &[f64], v: &[f64], nu: f64) -> Self {
        let t = StudentT::new(nu);
        Self {
            x: u.iter().map(|&a| t.quantile(super::clamp_unit(a))).collect(),
            y: v.iter().map(|&b| t.quantile(super::clamp_unit(b))).collect(),
        }
    }

    fn loglik(&self, rho: f64, nu: f64) -> f64 {
        let Kernel::StudentT { ln_const, .. } = Kernel::student_t(rho, nu) else {
            unreachable!()
        };
        self.x
            .iter()
            .zip(&self.y)
            .map(|(&x, &y)| Kernel::t_ln_pdf_scores(rho, nu, ln_const, x, y))
            .sum()
    }

    /// Best ρ for this ν and its log-likelihood.
    fn profile(&self, nu: f64, start: f64) -> (f64, f64) {
        let m = brent_minimize(
            |r| -self.loglik(r, nu),
            -RHO_BOUND,
            RHO_BOUND,
            Some(start),
            BRENT_TOL,
            BRENT_ITER,
        );
        (m.x, -m.fx)
    }
}

fn fit_student_t(u: &[f64], v: &[f64], tau: f64) -> Result<FitResult, CopulaError> {
    let rho0 = invert_tau(Family::Gaussian, tau);
    let mut best = (f64::NEG_INFINITY, 0usize, rho0);
    for (i, &nu) in NU_GRID.iter().enumerate() {
        let (rho, ll) = TScores::new(u, v, nu).profile(nu, rho0);
        if ll > best.0 {
            best = (ll, i, rho);
        }
    }
    let i = best.1;
    let lo = NU_GRID[i.saturating_sub(1)];
    let hi = NU_GRID[(i + 1).min(NU_GRID.len() - 1)];
    let mut rho_hint = best.2;
    let m = brent_minimize(
        |nu| {
            let (rho, ll) = TScores::new(u, v, nu).profile(nu, rho_hint);
            rho_hint = rho;
            -ll
        },
        lo,
        hi,
        Some(NU_GRID[i]),
        1e-4,
        60,
    );
    let nu = m.x.clamp(NU_MIN, NU_MAX);
    let (rho, loglik) = TScores::new(u, v, nu).profile(nu, rho_hint);
    let at_boundary = near(nu, NU_MIN, NU_MAX) || near(nu, NU_MAX, NU_MAX) || near(rho.abs(), RHO_BOUND, 1.0);
    Ok(FitResult {
        copula: PairCopula::new(FamilyTag::base(Family::StudentT), &[rho, nu])?,
        loglik,
        n: u.len(),
        at_boundary,
    })
}

/// Chosen copula plus the evidence behind the choice.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub copula: PairCopula,
    pub loglik: f64,
    pub bic: f64,
    pub pretest: Option<IndependenceTest>,
    pub at_boundary: bool,
}

/// Whether a rotation can express dependence of the sign of `tau`.
fn sign_compatible(tag: FamilyTag, tau: f64) -> bool {
    if !tag.family().is_rotatable() {
        return true;
    }
    let counter = matches!(tag.rotation(), Rotation::R90 | Rotation::R270);
    if tau >= 0.0 {
        !counter
    } else {
        counter
    }
}

/// Independence pre-test (skipped when `alpha` is `None`), then BIC over
/// the candidates whose rotation matches the sign of the empirical τ.
pub fn select_family(
    u: &[f64],
    v: &[f64],
    candidates: &[FamilyTag],
    alpha: Option<f64>,
) -> Result<Selection, CopulaError> {
    if candidates.is_empty() {
        return Err(CopulaError::EmptyCandidates);
    }
    validate(u, v)?;
    let n = u.len();
    let independent = || Selection {
        copula: PairCopula::independence(),
        loglik: 0.0,
        bic: 0.0,
        pretest: None,
        at_boundary: false,
    };

    let mut pretest = None;
    if let Some(alpha) = alpha {
        let test = independence_test(u, v, alpha)?;
        if test.independent {
            return Ok(Selection {
                pretest: Some(test),
                ..independent()
            });
        }
        pretest = Some(test);
    }

    let tau = empirical_kendall_tau(u, v)?;
    let mut pool: Vec<FamilyTag> = candidates
        .iter()
        .copied()
        .filter(|t| sign_compatible(*t, tau))
        .collect();
    if pool.is_empty() {
        pool = candidates.to_vec();
    }

    let mut best: Option<(f64, usize, FitResult)> = None;
    for tag in pool {
        let fit = match fit_mle(tag, u, v) {
            Ok(f) => f,
            Err(e) => {
                warn!("skipping {tag}: {e}");
                continue;
            }
        };
        let bic = fit.bic();
        if !bic.is_finite() {
            warn!("skipping {tag}: non-finite BIC");
            continue;
        }
        let k = fit.copula.n_params();
        let better = match &best {
            None => true,
            Some((b, bk, _)) => bic < *b - 1e-9 || ((bic - *b).abs() <= 1e-9 && k < *bk),
        };
        if better {
            best = Some((bic, k, fit));
        }
    }
    let (bic, _, fit) = best.ok_or(CopulaError::NoFamilyFitted)?;
    debug_assert_eq!(fit.n, n);
    Ok(Selection {
        copula: fit.copula,
        loglik: fit.loglik,
        bic,
        pretest,
        at_boundary: fit.at_boundary,
    })
}
