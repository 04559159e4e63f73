use super::MarginalError;
use crate::series::{month_partition, MonthlyTimeSeries};

/// Relative spread below which a month is treated as degenerate.
const SIGMA_FLOOR_FACTOR: f64 = 1e-12;

/// Month-wise location/scale estimates and the derived series.
#[derive(Debug, Clone, PartialEq)]
pub struct Deseasonalized {
    /// Month-wise means, index 0 = January. NaN for months with no data.
    pub mu: [f64; 12],
    /// Month-wise standard deviations (divisor n - 1). NaN for months with no data.
    pub sigma: [f64; 12],
    pub anomalies: Vec<f64>,
    pub residuals: Vec<f64>,
}

pub fn deseasonalize(series: &MonthlyTimeSeries) -> Result<Deseasonalized, MarginalError> {
    let x = series.values();
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let floor = SIGMA_FLOOR_FACTOR * (hi - lo);

    let mut mu = [f64::NAN; 12];
    let mut sigma = [f64::NAN; 12];
    let mut anomalies = vec![0.0; x.len()];
    let mut residuals = vec![0.0; x.len()];
    for set in month_partition(series) {
        if set.indices.is_empty() {
            continue;
        }
        let n = set.indices.len();
        if n < 2 {
            return Err(MarginalError::InsufficientMonthData {
                month: set.month,
                count: n,
            });
        }
        let m = set.indices.iter().map(|&k| x[k]).sum::<f64>() / n as f64;
        let ss: f64 = set.indices.iter().map(|&k| (x[k] - m).powi(2)).sum();
        let s = (ss / (n as f64 - 1.0)).sqrt();
        if s <= floor {
            return Err(MarginalError::DegenerateMonth {
                month: set.month,
                sigma: s,
            });
        }
        let slot = set.month as usize - 1;
        mu[slot] = m;
        sigma[slot] = s;
        for &k in &set.indices {
            anomalies[k] = x[k] - m;
            residuals[k] = anomalies[k] / s;
        }
    }
    Ok(Deseasonalized {
        mu,
        sigma,
        anomalies,
        residuals,
    })
}
