//! Goodness-of-fit and whiteness checks used to validate pipeline output.

use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjungBox {
    pub statistic: f64,
    pub lags: usize,
    pub df: usize,
    pub p_value: f64,
}

/// Ljung–Box portmanteau statistic over lags `1..=lags`, with `df = lags - fitted_params`.
pub fn ljung_box(x: &[f64], lags: usize, fitted_params: usize) -> LjungBox {
    let n = x.len();
    let df = lags.saturating_sub(fitted_params).max(1);
    let m = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = c.iter().map(|v| v * v).sum();
    let mut q = 0.0;
    if denom > 0.0 {
        for k in 1..=lags.min(n.saturating_sub(1)) {
            let r: f64 = c[k..].iter().zip(&c[..n - k]).map(|(a, b)| a * b).sum::<f64>() / denom;
            q += r * r / (n - k) as f64;
        }
        q *= n as f64 * (n as f64 + 2.0);
    }
    let p_value = match ChiSquared::new(df as f64) {
        Ok(chi) => 1.0 - chi.cdf(q),
        Err(_) => f64::NAN,
    };
    LjungBox {
        statistic: q,
        lags,
        df,
        p_value,
    }
}

/// Upper quantile of the chi-squared distribution.
pub fn chi_squared_quantile(df: f64, p: f64) -> f64 {
    ChiSquared::new(df)
        .map(|c| c.inverse_cdf(p))
        .unwrap_or(f64::NAN)
}

/// Lag-`k` sample autocorrelation.
pub fn autocorrelation(x: &[f64], k: usize) -> f64 {
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    let denom: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if denom == 0.0 || k >= n {
        return 0.0;
    }
    x[k..]
        .iter()
        .zip(&x[..n - k])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / denom
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample Kolmogorov–Smirnov test against a continuous CDF.
pub fn ks_test<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> KsTest {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sqrt_n = n.sqrt();
    KsTest {
        statistic: d,
        p_value: kolmogorov_survival((sqrt_n + 0.12 + 0.11 / sqrt_n) * d),
    }
}

/// P(K > lambda) for the limiting Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_squared_reference() {
        // chi^2_12 upper 1% point
        assert!((chi_squared_quantile(12.0, 0.99) - 26.216_967_305_535_85).abs() < 1e-6);
    }

    #[test]
    fn kolmogorov_reference_points() {
        // classic critical values: 1.358 at 5 %, 1.628 at 1 %
        assert!((kolmogorov_survival(1.358_1) - 0.05).abs() < 2e-4);
        assert!((kolmogorov_survival(1.627_6) - 0.01).abs() < 2e-4);
    }

    #[test]
    fn uniform_lattice_passes_ks() {
        let n = 500;
        let xs: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
        let t = ks_test(&xs, |x| x.clamp(0.0, 1.0));
        assert!(t.statistic <= 1.0 / n as f64 + 1e-12);
        assert!(t.p_value > 0.99);
    }

    #[test]
    fn alternating_series_is_not_white() {
        let x: Vec<f64> = (0..200).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let lb = ljung_box(&x, 12, 0);
        assert!(lb.p_value < 1e-6);
        assert!((autocorrelation(&x, 1) + 1.0).abs() < 0.01);
    }
}
