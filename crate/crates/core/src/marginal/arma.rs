use super::MarginalError;
use crate::optim::nelder_mead;

/// Fitted ARMA(p, q) coefficients and the whitened residual series.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaFit {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub eps: Vec<f64>,
    /// Innovation variance estimate, SSE / T.
    pub sigma2: f64,
    /// Conditional Gaussian log-likelihood at the estimate.
    pub loglik: f64,
}

/// Residual recursion with pre-sample `r` and `eps` set to zero.
pub fn arma_residuals(r: &[f64], phi: &[f64], theta: &[f64]) -> Vec<f64> {
    let mut eps = vec![0.0; r.len()];
    for k in 0..r.len() {
        let mut e = r[k];
        for (j, p) in phi.iter().enumerate() {
            if k > j {
                e -= p * r[k - j - 1];
            }
        }
        for (j, t) in theta.iter().enumerate() {
            if k > j {
                e -= t * eps[k - j - 1];
            }
        }
        eps[k] = e;
    }
    eps
}

/// True when all roots of `1 - phi_1 z - ... - phi_p z^p` lie outside the unit circle.
///
/// Uses the Durbin–Levinson step-down recursion: the polynomial is causal iff
/// every implied partial autocorrelation has modulus below one.
pub fn is_causal(phi: &[f64]) -> bool {
    let mut a = phi.to_vec();
    while let Some(&last) = a.last() {
        if !last.is_finite() || last.abs() >= 1.0 {
            return false;
        }
        let k = a.len();
        let denom = 1.0 - last * last;
        let prev: Vec<f64> = (0..k - 1)
            .map(|j| (a[j] + last * a[k - 2 - j]) / denom)
            .collect();
        a = prev;
    }
    true
}

fn conditional_nll(r: &[f64], params: &[f64], p: usize) -> f64 {
    let eps = arma_residuals(r, &params[..p], &params[p..]);
    let sse: f64 = eps.iter().map(|e| e * e).sum();
    let n = r.len() as f64;
    if !sse.is_finite() || sse <= 0.0 {
        return f64::INFINITY;
    }
    0.5 * n * (sse / n).ln()
}

/// Least squares via normal equations; `rows` are regressor vectors.
fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let m = rows.first()?.len();
    let mut a = vec![vec![0.0; m + 1]; m];
    for (row, yi) in rows.iter().zip(y) {
        for i in 0..m {
            for j in 0..m {
                a[i][j] += row[i] * row[j];
            }
            a[i][m] += row[i] * yi;
        }
    }
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for row in 0..m {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    Some((0..m).map(|i| a[i][m] / a[i][i]).collect())
}

fn lagged(series: &[f64], k: usize, lags: usize) -> impl Iterator<Item = f64> + '_ {
    (1..=lags).map(move |j| if k >= j { series[k - j] } else { 0.0 })
}

/// Conditional-sum-of-squares starting values (Hannan–Rissanen when q > 0).
fn css_start(r: &[f64], p: usize, q: usize) -> Option<Vec<f64>> {
    let n = r.len();
    let proxy = if q > 0 {
        let m = ((n as f64).ln().ceil() as usize * 2).max(p + q).min(n / 4).max(1);
        let rows: Vec<Vec<f64>> = (0..n).map(|k| lagged(r, k, m).collect()).collect();
        let a = least_squares(&rows, r)?;
        (0..n)
            .map(|k| r[k] - lagged(r, k, m).zip(&a).map(|(x, c)| x * c).sum::<f64>())
            .collect()
    } else {
        Vec::new()
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|k| lagged(r, k, p).chain(lagged(&proxy, k, q)).collect())
        .collect();
    least_squares(&rows, r)
}

/// Conditional Gaussian maximum-likelihood ARMA(p, q) fit with CSS initialization.
pub fn fit_arma(r: &[f64], p: usize, q: usize) -> Result<ArmaFit, MarginalError> {
    let n = r.len();
    let needed = 10 * (p + q + 1);
    if n <= needed {
        return Err(MarginalError::InsufficientData {
            p,
            q,
            needed: needed + 1,
            got: n,
        });
    }
    let finish = |phi: Vec<f64>, theta: Vec<f64>| {
        let eps = arma_residuals(r, &phi, &theta);
        let sigma2 = eps.iter().map(|e| e * e).sum::<f64>() / n as f64;
        let loglik = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
        ArmaFit {
            phi,
            theta,
            eps,
            sigma2,
            loglik,
        }
    };
    if p + q == 0 {
        return Ok(finish(Vec::new(), Vec::new()));
    }

    let start = css_start(r, p, q)
        .ok_or_else(|| MarginalError::SingularFit("singular CSS normal equations".into()))?;
    let start: Vec<f64> = start.iter().map(|c| c.clamp(-0.99, 0.99)).collect();
    let fit = nelder_mead(|x| conditional_nll(r, x, p), &start, 0.1, 1e-12, 2000 * (p + q));
    if !fit.converged || !fit.fx.is_finite() {
        return Err(MarginalError::SingularFit(format!(
            "simplex search stopped after {} iterations",
            fit.iterations
        )));
    }
    let phi = fit.x[..p].to_vec();
    let theta = fit.x[p..].to_vec();
    if !is_causal(&phi) {
        return Err(MarginalError::NonStationaryFit { phi });
    }
    Ok(finish(phi, theta))
}
