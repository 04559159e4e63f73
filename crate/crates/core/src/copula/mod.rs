//! Bivariate copula families, rotations, fitting and family selection.
//!
//! Argument order follows the conditional-distribution convention used by
//! the vine code: [`PairCopula::h_function`]`(u, v)` is `P(U <= u | V = v)`
//! and [`PairCopula::h_function_first`]`(u, v)` is `P(V <= v | U = u)`.
//!
//! Rotations reflect the arguments of the unrotated density:
//! 90° is `c(v, 1 - u)`, 180° is `c(1 - u, 1 - v)` and 270° is `c(1 - v, u)`.

mod fit;
mod kernel;
mod tau;

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{fit_mle, select_family, FitResult, Selection};
pub use tau::{empirical_kendall_tau, independence_test, IndependenceTest};

pub(crate) use kernel::clamp_unit;
use kernel::Kernel;

/// Frank fits with |θ| below this collapse to the independence copula.
pub const FRANK_ZERO_TOL: f64 = 1e-4;
pub const NU_MIN: f64 = 2.0;
pub const NU_MAX: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CopulaError {
    #[error("invalid parameters {params:?} for {family}: {reason}")]
    InvalidParameter {
        family: Family,
        params: Vec<f64>,
        reason: String,
    },
    #[error("{family} does not support a {degrees}° rotation")]
    UnsupportedRotation { family: Family, degrees: u16 },
    #[error("argument {0} is outside (0, 1)")]
    DomainError(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("{got} observations, need at least {needed}")]
    TooFewPoints { got: usize, needed: usize },
    #[error("root finding did not converge: {0}")]
    ConvergenceError(String),
    #[error("{0} has no closed-form distribution function")]
    NoClosedCdf(FamilyTag),
    #[error("unrecognized family tag '{0}'")]
    BadTag(String),
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("no candidate family could be fitted")]
    NoFamilyFitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Independence,
    Gaussian,
    StudentT,
    Clayton,
    Gumbel,
    Frank,
    Joe,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Independence,
        Family::Gaussian,
        Family::StudentT,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
        Family::Joe,
    ];

    pub fn n_params(self) -> usize {
        match self {
            Family::Independence => 0,
            Family::StudentT => 2,
            _ => 1,
        }
    }

    /// Whether 90/180/270 rotations give distinct families.
    pub fn is_rotatable(self) -> bool {
        matches!(self, Family::Clayton | Family::Gumbel | Family::Joe)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "Independence",
            Family::Gaussian => "Gaussian",
            Family::StudentT => "StudentT",
            Family::Clayton => "Clayton",
            Family::Gumbel => "Gumbel",
            Family::Frank => "Frank",
            Family::Joe => "Joe",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = CopulaError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let family = match lower.as_str() {
            "independence" | "indep" | "i" => Family::Independence,
            "gaussian" | "normal" | "n" => Family::Gaussian,
            "studentt" | "student-t" | "student_t" | "t" => Family::StudentT,
            "clayton" | "c" => Family::Clayton,
            "gumbel" | "g" => Family::Gumbel,
            "frank" | "f" => Family::Frank,
            "joe" | "j" => Family::Joe,
            _ => return Err(CopulaError::BadTag(s.to_string())),
        };
        Ok(family)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub fn degrees(self) -> u16 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 90,
            Rotation::R180 => 180,
            Rotation::R270 => 270,
        }
    }

    pub fn from_degrees(d: u16) -> Option<Self> {
        match d {
            0 => Some(Rotation::R0),
            90 => Some(Rotation::R90),
            180 => Some(Rotation::R180),
            270 => Some(Rotation::R270),
            _ => None,
        }
    }

    /// Rotation describing the same copula with its arguments swapped.
    pub fn swapped(self) -> Self {
        match self {
            Rotation::R90 => Rotation::R270,
            Rotation::R270 => Rotation::R90,
            r => r,
        }
    }

    /// True for 90° and 270°, which flip the sign of dependence.
    pub fn is_counter(self) -> bool {
        matches!(self, Rotation::R90 | Rotation::R270)
    }
}

/// Copula family plus rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilyTag {
    family: Family,
    rotation: Rotation,
}

impl FamilyTag {
    pub fn new(family: Family, rotation: Rotation) -> Result<Self, CopulaError> {
        if rotation != Rotation::R0 && !family.is_rotatable() {
            return Err(CopulaError::UnsupportedRotation {
                family,
                degrees: rotation.degrees(),
            });
        }
        Ok(Self { family, rotation })
    }

    pub const fn base(family: Family) -> Self {
        Self {
            family,
            rotation: Rotation::R0,
        }
    }

    pub fn family(self) -> Family {
        self.family
    }

    pub fn rotation(self) -> Rotation {
        self.rotation
    }

    pub fn n_params(self) -> usize {
        self.family.n_params()
    }

    /// The fifteen dependent candidates: N, t, F and every rotation of C, G, J.
    pub fn default_candidates() -> Vec<FamilyTag> {
        let mut out = vec![
            Self::base(Family::Gaussian),
            Self::base(Family::StudentT),
            Self::base(Family::Frank),
        ];
        for family in [Family::Clayton, Family::Gumbel, Family::Joe] {
            for rotation in [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270] {
                out.push(Self { family, rotation });
            }
        }
        out
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rotation {
            Rotation::R0 => write!(f, "{}", self.family),
            r => write!(f, "{}{}", self.family, r.degrees()),
        }
    }
}

impl FromStr for FamilyTag {
    type Err = CopulaError;
    /// Accepts `Clayton`, `Clayton90`, `clayton_90` or `C270`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        let split = trimmed
            .find(|c: char| c.is_ascii_digit())
            .unwrap_or(trimmed.len());
        let (name, digits) = trimmed.split_at(split);
        let name = name.trim_end_matches(['_', '-', ' ']);
        let family: Family = name.parse().map_err(|_| CopulaError::BadTag(s.to_string()))?;
        let rotation = if digits.is_empty() {
            Rotation::R0
        } else {
            digits
                .parse::<u16>()
                .ok()
                .and_then(Rotation::from_degrees)
                .ok_or_else(|| CopulaError::BadTag(s.to_string()))?
        };
        FamilyTag::new(family, rotation)
    }
}

impl Serialize for FamilyTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FamilyTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Bivariate copula with validated parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PairCopulaRepr", into = "PairCopulaRepr")]
pub struct PairCopula {
    tag: FamilyTag,
    params: Vec<f64>,
    kernel: Kernel,
}

#[derive(Serialize, Deserialize)]
struct PairCopulaRepr {
    family: FamilyTag,
    #[serde(default)]
    params: Vec<f64>,
}

impl TryFrom<PairCopulaRepr> for PairCopula {
    type Error = CopulaError;
    fn try_from(r: PairCopulaRepr) -> Result<Self, CopulaError> {
        PairCopula::new(r.family, &r.params)
    }
}

impl From<PairCopula> for PairCopulaRepr {
    fn from(c: PairCopula) -> Self {
        PairCopulaRepr {
            family: c.tag,
            params: c.params,
        }
    }
}

impl PartialEq for PairCopula {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag && self.params == other.params
    }
}

fn check_unit(x: f64) -> Result<f64, CopulaError> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(CopulaError::DomainError(x))
    }
}

impl PairCopula {
    pub fn new(tag: FamilyTag, params: &[f64]) -> Result<Self, CopulaError> {
        let family = tag.family;
        let invalid = |reason: &str| CopulaError::InvalidParameter {
            family,
            params: params.to_vec(),
            reason: reason.to_string(),
        };
        if params.len() != family.n_params() {
            return Err(invalid(&format!("expected {} parameter(s)", family.n_params())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        let kernel = match family {
            Family::Independence => Kernel::Independence,
            Family::Gaussian => {
                let rho = params[0];
                if rho.abs() >= 1.0 {
                    return Err(invalid("rho must lie in (-1, 1)"));
                }
                Kernel::gaussian(rho)
            }
            Family::StudentT => {
                let (rho, nu) = (params[0], params[1]);
                if rho.abs() >= 1.0 {
                    return Err(invalid("rho must lie in (-1, 1)"));
                }
                if !(NU_MIN..=NU_MAX).contains(&nu) {
                    return Err(invalid("nu must lie in [2, 30]"));
                }
                Kernel::student_t(rho, nu)
            }
            Family::Clayton => {
                if params[0] <= 0.0 {
                    return Err(invalid("theta must be positive"));
                }
                Kernel::Clayton { theta: params[0] }
            }
            Family::Gumbel => {
                if params[0] < 1.0 {
                    return Err(invalid("theta must be at least 1"));
                }
                Kernel::Gumbel { theta: params[0] }
            }
            Family::Frank => {
                if params[0] == 0.0 {
                    return Err(invalid("theta must be non-zero"));
                }
                Kernel::frank(params[0])
            }
            Family::Joe => {
                if params[0] < 1.0 {
                    return Err(invalid("theta must be at least 1"));
                }
                Kernel::Joe { theta: params[0] }
            }
        };
        Ok(Self {
            tag,
            params: params.to_vec(),
            kernel,
        })
    }

    pub fn independence() -> Self {
        Self {
            tag: FamilyTag::base(Family::Independence),
            params: Vec::new(),
            kernel: Kernel::Independence,
        }
    }

    pub fn tag(&self) -> FamilyTag {
        self.tag
    }

    pub fn family(&self) -> Family {
        self.tag.family
    }

    pub fn rotation(&self) -> Rotation {
        self.tag.rotation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_independence(&self) -> bool {
        self.tag.family == Family::Independence
    }

    /// The same dependence with the roles of the two arguments exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tag: FamilyTag {
                family: self.tag.family,
                rotation: self.tag.rotation.swapped(),
            },
            params: self.params.clone(),
            kernel: self.kernel,
        }
    }

    pub fn density(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        Ok(self.ln_pdf(check_unit(u)?, check_unit(v)?).exp())
    }

    pub fn log_density(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        Ok(self.ln_pdf(check_unit(u)?, check_unit(v)?))
    }

    /// `P(U <= u | V = v)`.
    pub fn h_function(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        Ok(self.h_second(check_unit(u)?, check_unit(v)?))
    }

    /// `P(V <= v | U = u)`.
    pub fn h_function_first(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        Ok(self.h_first(check_unit(u)?, check_unit(v)?))
    }

    /// Solves `h_function(u, v) = w` for `u`.
    pub fn h_inverse(&self, w: f64, v: f64) -> Result<f64, CopulaError> {
        self.h_second_inverse(check_unit(w)?, check_unit(v)?)
    }

    /// Solves `h_function_first(u, v) = w` for `v`.
    pub fn h_inverse_first(&self, w: f64, u: f64) -> Result<f64, CopulaError> {
        self.h_first_inverse(check_unit(w)?, check_unit(u)?)
    }

    /// Distribution function where a closed form exists.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64, CopulaError> {
        let (u, v) = (clamp_unit(check_unit(u)?), clamp_unit(check_unit(v)?));
        let k = &self.kernel;
        let none = || CopulaError::NoClosedCdf(self.tag);
        let c = match self.tag.rotation {
            Rotation::R0 => k.cdf(u, v).ok_or_else(none)?,
            Rotation::R90 => v - k.cdf(1.0 - u, v).ok_or_else(none)?,
            Rotation::R180 => u + v - 1.0 + k.cdf(1.0 - u, 1.0 - v).ok_or_else(none)?,
            Rotation::R270 => u - k.cdf(u, 1.0 - v).ok_or_else(none)?,
        };
        Ok(c.clamp(0.0, u.min(v)))
    }

    pub fn kendall_tau(&self) -> f64 {
        let t = self.kernel.kendall_tau();
        if self.tag.rotation.is_counter() {
            -t
        } else {
            t
        }
    }

    /// Sum of log-densities over paired samples (inputs clamped, not checked).
    pub fn log_likelihood(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(&a, &b)| self.ln_pdf(a, b)).sum()
    }

    // Unchecked evaluators. Inputs are clamped into [1e-10, 1 - 1e-10].

    pub(crate) fn ln_pdf(&self, u: f64, v: f64) -> f64 {
        if self.is_independence() {
            return 0.0;
        }
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let (a, b) = match self.tag.rotation {
            Rotation::R0 => (u, v),
            Rotation::R90 => (1.0 - u, v),
            Rotation::R180 => (1.0 - u, 1.0 - v),
            Rotation::R270 => (u, 1.0 - v),
        };
        self.kernel.ln_pdf(a, b)
    }

    pub(crate) fn h_second(&self, u: f64, v: f64) -> f64 {
        if self.is_independence() {
            return u;
        }
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let k = &self.kernel;
        match self.tag.rotation {
            Rotation::R0 => k.h(u, v),
            Rotation::R90 => 1.0 - k.h(1.0 - u, v),
            Rotation::R180 => 1.0 - k.h(1.0 - u, 1.0 - v),
            Rotation::R270 => k.h(u, 1.0 - v),
        }
    }

    pub(crate) fn h_first(&self, u: f64, v: f64) -> f64 {
        if self.is_independence() {
            return v;
        }
        let (u, v) = (clamp_unit(u), clamp_unit(v));
        let k = &self.kernel;
        match self.tag.rotation {
            Rotation::R0 => k.h(v, u),
            Rotation::R90 => k.h(v, 1.0 - u),
            Rotation::R180 => 1.0 - k.h(1.0 - v, 1.0 - u),
            Rotation::R270 => 1.0 - k.h(1.0 - v, u),
        }
    }

    pub(crate) fn h_second_inverse(&self, w: f64, v: f64) -> Result<f64, CopulaError> {
        if self.is_independence() {
            return Ok(w);
        }
        let (w, v) = (clamp_unit(w), clamp_unit(v));
        let k = &self.kernel;
        let fail = || CopulaError::ConvergenceError(format!("{} h-inverse at w={w}, v={v}", self.tag));
        let u = match self.tag.rotation {
            Rotation::R0 => k.h_inverse(w, v).ok_or_else(fail)?,
            Rotation::R90 => 1.0 - k.h_inverse(1.0 - w, v).ok_or_else(fail)?,
            Rotation::R180 => 1.0 - k.h_inverse(1.0 - w, 1.0 - v).ok_or_else(fail)?,
            Rotation::R270 => k.h_inverse(w, 1.0 - v).ok_or_else(fail)?,
        };
        Ok(u)
    }

    pub(crate) fn h_first_inverse(&self, w: f64, u: f64) -> Result<f64, CopulaError> {
        if self.is_independence() {
            return Ok(w);
        }
        let (w, u) = (clamp_unit(w), clamp_unit(u));
        let k = &self.kernel;
        let fail = || CopulaError::ConvergenceError(format!("{} h-inverse at w={w}, u={u}", self.tag));
        let v = match self.tag.rotation {
            Rotation::R0 => k.h_inverse(w, u).ok_or_else(fail)?,
            Rotation::R90 => k.h_inverse(w, 1.0 - u).ok_or_else(fail)?,
            Rotation::R180 => 1.0 - k.h_inverse(1.0 - w, 1.0 - u).ok_or_else(fail)?,
            Rotation::R270 => 1.0 - k.h_inverse(1.0 - w, u).ok_or_else(fail)?,
        };
        Ok(v)
    }
}

impl fmt::Display for PairCopula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag)?;
        if !self.params.is_empty() {
            let p: Vec<String> = self.params.iter().map(|x| format!("{x:.4}")).collect();
            write!(f, "({})", p.join(", "))?;
        }
        Ok(())
    }
}

/// Uniform draw strictly inside (0, 1).
pub(crate) fn open_uniform(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Draws `n` pairs by conditional inversion: `v ~ U(0,1)`, `u = h^{-1}(w | v)`.
pub fn simulate_pair(
    copula: &PairCopula,
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), CopulaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut us = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for _ in 0..n {
        let v = open_uniform(&mut rng);
        let w = open_uniform(&mut rng);
        us.push(copula.h_second_inverse(w, v)?);
        vs.push(v);
    }
    Ok((us, vs))
}

#[cfg(test)]
mod tests;
