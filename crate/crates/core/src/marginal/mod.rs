//! Univariate standardization: orientation, month-wise power transform,
//! deseasonalization, ARMA whitening and the empirical probability integral
//! transform to the u- and z-scales.

mod arma;
mod seasonal;
mod yeo_johnson;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arma::{arma_residuals, fit_arma, is_causal, ArmaFit};
pub use seasonal::{deseasonalize, Deseasonalized};
pub use yeo_johnson::{estimate_lambda, yeo_johnson, LAMBDA_MAX, LAMBDA_MIN};

use crate::series::{month_partition, MonthlyTimeSeries, SeriesError, TimeStamp};
use crate::stats::{average_ranks, norm_quantile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarginalError {
    #[error("{0} points, need at least 3")]
    TooFewPoints(usize),
    #[error("sample is constant")]
    ConstantSample,
    #[error("month {month} has {count} observation(s), need at least 2")]
    InsufficientMonthData { month: u32, count: usize },
    #[error("month {month} has degenerate spread (sigma = {sigma:e})")]
    DegenerateMonth { month: u32, sigma: f64 },
    #[error("ARMA({p},{q}) needs at least {needed} observations, got {got}")]
    InsufficientData {
        p: usize,
        q: usize,
        needed: usize,
        got: usize,
    },
    #[error("fitted AR polynomial {phi:?} is not causal")]
    NonStationaryFit { phi: Vec<f64> },
    #[error("ARMA likelihood optimization failed: {0}")]
    SingularFit(String),
    #[error("u = {value} at position {index} is outside (0, 1)")]
    OutOfRange { index: usize, value: f64 },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("{stage} failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<MarginalError>,
    },
}

/// Pipeline step that produced a [`MarginalError::Stage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Transform { month: u32 },
    Deseasonalize,
    Arma,
    ZScale,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Transform { month } => write!(f, "power transform (month {month})"),
            Stage::Deseasonalize => f.write_str("deseasonalization"),
            Stage::Arma => f.write_str("ARMA whitening"),
            Stage::ZScale => f.write_str("z-scale transform"),
        }
    }
}

impl MarginalError {
    fn at(self, stage: Stage) -> Self {
        MarginalError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Sign applied so that small values mean dry conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for Orientation {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Orientation::Positive),
            -1 => Ok(Orientation::Negative),
            other => Err(format!("orientation must be +1 or -1, got {other}")),
        }
    }
}

impl From<Orientation> for i8 {
    fn from(o: Orientation) -> i8 {
        match o {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }
}

pub fn orient(series: &MonthlyTimeSeries, orientation: Orientation) -> MonthlyTimeSeries {
    let sign = orientation.sign();
    let values = series.values().iter().map(|v| v * sign).collect();
    series
        .with_values(values)
        .expect("negation keeps values finite")
}

/// Rank-based PIT: `u_k = rank(eps_k) / (T + 1)` with average ranks for ties.
pub fn empirical_pit(eps: &[f64]) -> Vec<f64> {
    let n1 = eps.len() as f64 + 1.0;
    let (lo, hi) = (1.0 / n1, (n1 - 1.0) / n1);
    average_ranks(eps)
        .into_iter()
        .map(|r| (r / n1).clamp(lo, hi))
        .collect()
}

pub fn to_zscale(u: &[f64]) -> Result<Vec<f64>, MarginalError> {
    u.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > 0.0 && value < 1.0 {
                Ok(norm_quantile(value))
            } else {
                Err(MarginalError::OutOfRange { index, value })
            }
        })
        .collect()
}

/// Everything fitted for one variable at one location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalModel {
    pub variable: String,
    pub start: TimeStamp,
    pub orientation: Orientation,
    pub lambda: [f64; 12],
    pub mu: [f64; 12],
    pub sigma: [f64; 12],
    pub ar_order: usize,
    pub ma_order: usize,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    /// Standardized anomalies fed to the ARMA stage.
    pub residuals: Vec<f64>,
    pub eps: Vec<f64>,
    pub u: Vec<f64>,
    pub z: Vec<f64>,
}

impl MarginalModel {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn stamps(&self) -> Vec<TimeStamp> {
        crate::series::stamp_range(self.start, self.z.len())
    }
}

/// Runs the full univariate pipeline on one series.
pub fn fit_marginal(
    series: &MonthlyTimeSeries,
    orientation: Orientation,
    p: usize,
    q: usize,
) -> Result<MarginalModel, MarginalError> {
    let oriented = orient(series, orientation);
    let x = oriented.values();

    let mut lambda = [1.0; 12];
    let mut transformed = x.to_vec();
    for set in month_partition(&oriented) {
        if set.indices.is_empty() {
            continue;
        }
        let sample: Vec<f64> = set.indices.iter().map(|&k| x[k]).collect();
        let stage = Stage::Transform { month: set.month };
        let l = estimate_lambda(&sample).map_err(|e| e.at(stage))?;
        lambda[set.month as usize - 1] = l;
        for &k in &set.indices {
            transformed[k] = yeo_johnson(x[k], l);
        }
    }
    let transformed = oriented.with_values(transformed).map_err(|e| {
        MarginalError::from(e).at(Stage::Transform { month: 0 })
    })?;

    let seasonal = deseasonalize(&transformed).map_err(|e| e.at(Stage::Deseasonalize))?;
    let arma = fit_arma(&seasonal.residuals, p, q).map_err(|e| e.at(Stage::Arma))?;
    let u = empirical_pit(&arma.eps);
    let z = to_zscale(&u).map_err(|e| e.at(Stage::ZScale))?;

    Ok(MarginalModel {
        variable: series.variable_id().to_string(),
        start: series.stamps()[0],
        orientation,
        lambda,
        mu: seasonal.mu,
        sigma: seasonal.sigma,
        ar_order: p,
        ma_order: q,
        phi: arma.phi,
        theta: arma.theta,
        residuals: seasonal.residuals,
        eps: arma.eps,
        u,
        z,
    })
}
