use super::MarginalError;
use crate::stats::skewness;

/// Lower end of the lambda search grid.
pub const LAMBDA_MIN: f64 = -2.0;
/// Upper end of the lambda search grid.
pub const LAMBDA_MAX: f64 = 4.0;
/// Grid spacing in hundredths: the grid is `LAMBDA_MIN + i / 100`.
const GRID_POINTS: usize = 601;
/// Skewness values this close to the minimum count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// Yeo–Johnson power transform. Total and continuous in both arguments.
pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    if x >= 0.0 {
        let l = x.ln_1p();
        if lambda == 0.0 {
            l
        } else {
            (lambda * l).exp_m1() / lambda
        }
    } else {
        let l = (-x).ln_1p();
        let k = 2.0 - lambda;
        if k == 0.0 {
            -l
        } else {
            -(k * l).exp_m1() / k
        }
    }
}

fn grid_lambda(i: usize) -> f64 {
    (i as f64 - 200.0) / 100.0
}

/// Grid-search the lambda in `[-2, 4]` (step 0.01) that minimizes absolute
/// skewness of the transformed sample. Ties go to the lambda closest to 1.
pub fn estimate_lambda(sample: &[f64]) -> Result<f64, MarginalError> {
    if sample.len() < 3 {
        return Err(MarginalError::TooFewPoints(sample.len()));
    }
    if sample.iter().all(|v| *v == sample[0]) {
        return Err(MarginalError::ConstantSample);
    }
    let mut buf = vec![0.0; sample.len()];
    let scores: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            let lambda = grid_lambda(i);
            for (b, x) in buf.iter_mut().zip(sample) {
                *b = yeo_johnson(*x, lambda);
            }
            let s = skewness(&buf).abs();
            if s.is_finite() {
                s
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda = (0..GRID_POINTS)
        .filter(|&i| scores[i] <= best + TIE_TOLERANCE)
        .map(grid_lambda)
        .min_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()))
        .unwrap_or(1.0);
    Ok(lambda)
}
