//! Standardized indices: the univariate SI over `l` months, the three
//! multivariate variants built on copula output, and the dryness/wetness
//! categories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marginal::MarginalModel;
use crate::series::{stamp_range, TimeStamp};
use crate::stats::{average_ranks, norm_quantile};
use crate::vine::{VineError, VineModel};

/// Below this the normalizer of the N method is treated as zero.
pub const MIN_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("time scale {scale} outside 1..={len}")]
    BadScale { scale: usize, len: usize },
    #[error("weights must be {expected} finite positive values, got {got:?}")]
    BadWeights { expected: usize, got: Vec<f64> },
    #[error("normalizing variance {0:e} is degenerate")]
    DegenerateVariance(f64),
    #[error("no columns")]
    Empty,
    #[error("column {column} has {got} rows, expected {expected}")]
    RaggedColumns {
        column: usize,
        got: usize,
        expected: usize,
    },
    #[error("column {column}, row {row}: {value} is not in (0, 1)")]
    DomainError { column: usize, row: usize, value: f64 },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("marginal models disagree on start or length")]
    Misaligned,
    #[error(transparent)]
    Vine(#[from] VineError),
}

// ---------------------------------------------------------------------------
// categories

/// Dryness/wetness class of an index value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Category {
    W4,
    W3,
    W2,
    W1,
    W0,
    Normal,
    D0,
    D1,
    D2,
    D3,
    D4,
}

impl Category {
    /// Wettest first.
    pub const ALL: [Category; 11] = [
        Category::W4,
        Category::W3,
        Category::W2,
        Category::W1,
        Category::W0,
        Category::Normal,
        Category::D0,
        Category::D1,
        Category::D2,
        Category::D3,
        Category::D4,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Category::W4 => "W4",
            Category::W3 => "W3",
            Category::W2 => "W2",
            Category::W1 => "W1",
            Category::W0 => "W0",
            Category::Normal => "Normal",
            Category::D0 => "D0",
            Category::D1 => "D1",
            Category::D2 => "D2",
            Category::D3 => "D3",
            Category::D4 => "D4",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Category::W4 => "exceptionally wet",
            Category::W3 => "extremely wet",
            Category::W2 => "severely wet",
            Category::W1 => "moderately wet",
            Category::W0 => "abnormally wet",
            Category::Normal => "near normal",
            Category::D0 => "abnormally dry",
            Category::D1 => "moderately dry",
            Category::D2 => "severely dry",
            Category::D3 => "extremely dry",
            Category::D4 => "exceptionally dry",
        }
    }

    pub fn is_dry(self) -> bool {
        self > Category::Normal
    }

    pub fn is_wet(self) -> bool {
        self < Category::Normal
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown category '{0}'")]
pub struct BadCategory(pub String);

impl FromStr for Category {
    type Err = BadCategory;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Category::ALL
            .into_iter()
            .find(|c| c.code().eq_ignore_ascii_case(t))
            .ok_or_else(|| BadCategory(s.to_string()))
    }
}

impl TryFrom<String> for Category {
    type Error = BadCategory;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Category> for String {
    fn from(c: Category) -> String {
        c.code().to_string()
    }
}

/// Category of an index value.
///
/// Intervals are right-closed `(lo, hi]` with two exceptions on the dry
/// side: `-1.28` belongs to D1, so D1 is `[-1.28, -0.84]` and D2 is the open
/// interval `(-1.64, -1.28)`. The band `(-0.52, 0.52)` is Normal.
/// NaN is uncategorized and returns Normal.
pub fn classify(value: f64) -> Category {
    let x = value;
    if x.is_nan() {
        Category::Normal
    } else if x > 2.05 {
        Category::W4
    } else if x > 1.64 {
        Category::W3
    } else if x > 1.28 {
        Category::W2
    } else if x > 0.84 {
        Category::W1
    } else if x > 0.52 {
        Category::W0
    } else if x > -0.52 {
        Category::Normal
    } else if x > -0.84 {
        Category::D0
    } else if x >= -1.28 {
        Category::D1
    } else if x > -1.64 {
        Category::D2
    } else if x > -2.05 {
        Category::D3
    } else {
        Category::D4
    }
}

// ---------------------------------------------------------------------------
// index series

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexMethod {
    #[serde(rename = "SI")]
    Si,
    #[serde(rename = "SMI-A")]
    SmiA,
    #[serde(rename = "SMI-M")]
    SmiM,
    #[serde(rename = "SMI-N")]
    SmiN,
}

impl IndexMethod {
    pub fn label(self) -> &'static str {
        match self {
            IndexMethod::Si => "SI",
            IndexMethod::SmiA => "SMI-A",
            IndexMethod::SmiM => "SMI-M",
            IndexMethod::SmiN => "SMI-N",
        }
    }
}

impl fmt::Display for IndexMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IndexMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('_', "-").as_str() {
            "SI" => Ok(IndexMethod::Si),
            "SMI-A" | "A" => Ok(IndexMethod::SmiA),
            "SMI-M" | "M" => Ok(IndexMethod::SmiM),
            "SMI-N" | "N" => Ok(IndexMethod::SmiN),
            _ => Err(format!("unknown index method '{s}'")),
        }
    }
}

/// Index values aligned to consecutive monthly stamps. The first `scale - 1`
/// positions are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub start: TimeStamp,
    pub values: Vec<Option<f64>>,
    pub scale: usize,
    pub method: IndexMethod,
    pub weights: Option<Vec<f64>>,
}

impl IndexSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn stamps(&self) -> Vec<TimeStamp> {
        stamp_range(self.start, self.values.len())
    }

    /// Defined values only, in time order.
    pub fn defined(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn categories(&self) -> Vec<Option<Category>> {
        self.values.iter().map(|v| v.map(classify)).collect()
    }
}

/// Marginal copula data `u` (one column per variable). Input of method N
/// and of vine fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaData {
    start: TimeStamp,
    columns: Vec<Vec<f64>>,
}

/// Rosenblatt output `v` (one column per variable). Input of methods A and M.
#[derive(Debug, Clone, PartialEq)]
pub struct RosenblattData {
    start: TimeStamp,
    columns: Vec<Vec<f64>>,
}

fn check_unit_columns(columns: &[Vec<f64>]) -> Result<(), IndexError> {
    let first = columns.first().ok_or(IndexError::Empty)?;
    for (column, c) in columns.iter().enumerate() {
        if c.len() != first.len() {
            return Err(IndexError::RaggedColumns {
                column,
                got: c.len(),
                expected: first.len(),
            });
        }
        if let Some((row, &value)) = c.iter().enumerate().find(|(_, &x)| !(x > 0.0 && x < 1.0)) {
            return Err(IndexError::DomainError { column, row, value });
        }
    }
    Ok(())
}

macro_rules! unit_data_accessors {
    ($t:ty) => {
        impl $t {
            pub fn new(start: TimeStamp, columns: Vec<Vec<f64>>) -> Result<Self, IndexError> {
                check_unit_columns(&columns)?;
                Ok(Self { start, columns })
            }

            pub fn start(&self) -> TimeStamp {
                self.start
            }

            pub fn columns(&self) -> &[Vec<f64>] {
                &self.columns
            }

            pub fn dim(&self) -> usize {
                self.columns.len()
            }

            pub fn len(&self) -> usize {
                self.columns[0].len()
            }

            pub fn is_empty(&self) -> bool {
                self.len() == 0
            }

            pub fn into_columns(self) -> Vec<Vec<f64>> {
                self.columns
            }
        }
    };
}

unit_data_accessors!(CopulaData);
unit_data_accessors!(RosenblattData);

impl CopulaData {
    /// Collects the `u` columns of marginal fits that share start and length.
    pub fn from_marginals(models: &[MarginalModel]) -> Result<Self, IndexError> {
        let first = models.first().ok_or(IndexError::Empty)?;
        if models.iter().any(|m| m.start != first.start || m.len() != first.len()) {
            return Err(IndexError::Misaligned);
        }
        Self::new(first.start, models.iter().map(|m| m.u.clone()).collect())
    }
}

impl RosenblattData {
    /// Applies the vine's Rosenblatt transform to copula data.
    pub fn from_vine(model: &VineModel, data: &CopulaData) -> Result<Self, IndexError> {
        let v = model.rosenblatt(&data.columns)?;
        Self::new(data.start, v)
    }
}

// ---------------------------------------------------------------------------
// operations

fn check_scale(scale: usize, len: usize) -> Result<(), IndexError> {
    if scale < 1 || scale > len {
        return Err(IndexError::BadScale { scale, len });
    }
    Ok(())
}

fn check_weights(w: &[f64], d: usize) -> Result<(), IndexError> {
    if w.len() != d || w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(IndexError::BadWeights {
            expected: d,
            got: w.to_vec(),
        });
    }
    Ok(())
}

/// Scaled running sums `(1/sqrt(l)) * sum_{j<l} y[k-j]`, undefined for
/// `k < l - 1`. Each window is summed directly so values do not depend on
/// earlier windows.
fn rolling(y: &[f64], l: usize, scale: f64) -> Vec<Option<f64>> {
    let norm = scale / (l as f64).sqrt();
    (0..y.len())
        .map(|k| (k + 1 >= l).then(|| y[k + 1 - l..=k].iter().sum::<f64>() * norm))
        .collect()
}

/// Univariate standardized index over `l` months.
pub fn si(start: TimeStamp, z: &[f64], l: usize) -> Result<IndexSeries, IndexError> {
    check_scale(l, z.len())?;
    if let Some(i) = z.iter().position(|x| !x.is_finite()) {
        return Err(IndexError::NonFinite(i));
    }
    Ok(IndexSeries {
        start,
        values: rolling(z, l, 1.0),
        scale: l,
        method: IndexMethod::Si,
        weights: None,
    })
}

/// Row sums `sum_j w_j * Phi^-1(x_j)`.
fn weighted_normal_scores(columns: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let t = columns[0].len();
    (0..t)
        .map(|k| columns.iter().zip(w).map(|(c, wj)| wj * norm_quantile(c[k])).sum())
        .collect()
}

/// Method A: weighted sum of normal scores of the Rosenblatt output,
/// normalized by `sqrt(l * w'w)`.
pub fn smi_a(v: &RosenblattData, w: &[f64], l: usize) -> Result<IndexSeries, IndexError> {
    check_weights(w, v.dim())?;
    check_scale(l, v.len())?;
    let y = weighted_normal_scores(&v.columns, w);
    let ww: f64 = w.iter().map(|x| x * x).sum();
    Ok(IndexSeries {
        start: v.start,
        values: rolling(&y, l, 1.0 / ww.sqrt()),
        scale: l,
        method: IndexMethod::SmiA,
        weights: Some(w.to_vec()),
    })
}

/// Method M: the row products of the Rosenblatt output are rank-transformed
/// to `rank / (T + 1)` and mapped to normal scores before summing.
pub fn smi_m(v: &RosenblattData, l: usize) -> Result<IndexSeries, IndexError> {
    check_scale(l, v.len())?;
    let t = v.len();
    let product: Vec<f64> = (0..t).map(|k| v.columns.iter().map(|c| c[k]).product()).collect();
    let n1 = t as f64 + 1.0;
    let z: Vec<f64> = average_ranks(&product)
        .into_iter()
        .map(|r| norm_quantile(r / n1))
        .collect();
    Ok(IndexSeries {
        start: v.start,
        values: rolling(&z, l, 1.0),
        scale: l,
        method: IndexMethod::SmiM,
        weights: None,
    })
}

/// Method N: weighted sum of the marginal normal scores, normalized by the
/// uncentered second moment `S` of the row sums over the whole record.
pub fn smi_n(u: &CopulaData, w: &[f64], l: usize) -> Result<IndexSeries, IndexError> {
    check_weights(w, u.dim())?;
    let t = u.len();
    if t < 2 {
        return Err(IndexError::BadScale { scale: l, len: t });
    }
    check_scale(l, t)?;
    let y = weighted_normal_scores(&u.columns, w);
    let s = y.iter().map(|x| x * x).sum::<f64>() / (t as f64 - 1.0);
    if !(s >= MIN_VARIANCE) {
        return Err(IndexError::DegenerateVariance(s));
    }
    Ok(IndexSeries {
        start: u.start,
        values: rolling(&y, l, 1.0 / s.sqrt()),
        scale: l,
        method: IndexMethod::SmiN,
        weights: Some(w.to_vec()),
    })
}
