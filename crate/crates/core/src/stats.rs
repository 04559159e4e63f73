//! Distribution functions and small sample statistics shared across modules.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::beta::{beta_reg, inv_beta_reg};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::ln_gamma;

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal quantile. Returns ±inf at 0 and 1.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

pub fn norm_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// Student-t with real degrees of freedom.
#[derive(Debug, Clone, Copy)]
pub struct StudentT {
    nu: f64,
    ln_norm: f64,
}

impl StudentT {
    pub fn new(nu: f64) -> Self {
        let ln_norm = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
        Self { nu, ln_norm }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.ln_norm - 0.5 * (self.nu + 1.0) * (x * x / self.nu).ln_1p()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x.is_infinite() {
            return if x > 0.0 { 1.0 } else { 0.0 };
        }
        let x2 = x * x;
        if x2 < self.nu {
            // central region: avoids cancellation in 1 - tail
            let inner = 0.5 * beta_reg(0.5, 0.5 * self.nu, x2 / (self.nu + x2));
            if x >= 0.0 {
                0.5 + inner
            } else {
                0.5 - inner
            }
        } else {
            let tail = 0.5 * beta_reg(0.5 * self.nu, 0.5, self.nu / (self.nu + x2));
            if x >= 0.0 {
                1.0 - tail
            } else {
                tail
            }
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        if p == 0.5 {
            return 0.0;
        }
        let lower = p.min(1.0 - p);
        let y = inv_beta_reg(0.5 * self.nu, 0.5, 2.0 * lower);
        let mut t = (self.nu * (1.0 - y) / y).sqrt();
        // one Newton polish against the CDF
        let target = lower;
        let step = (self.cdf(-t) - target) / self.ln_pdf(-t).exp();
        if step.is_finite() {
            let polished = t + step;
            if polished > 0.0 {
                t = polished;
            }
        }
        if p < 0.5 {
            -t
        } else {
            t
        }
    }
}

/// Average ranks (1-based); ties share the mean of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        let avg = 0.5 * ((i + 1) + j) as f64;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with divisor n - 1.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Moment skewness m3 / m2^(3/2). Zero for a constant sample.
pub fn skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = mean(x);
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in x {
        let d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 <= 0.0 {
        return 0.0;
    }
    m3 / m2.powf(1.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_reference_values() {
        assert!((norm_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((norm_quantile(0.025) + 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(norm_quantile(0.5), 0.0);
        assert!((norm_quantile(0.75) - 0.674_489_750_196_081_7).abs() < 1e-12);
        for p in [1e-10, 1e-4, 0.1, 0.3, 0.6, 0.99, 1.0 - 1e-9] {
            assert!((norm_cdf(norm_quantile(p)) - p).abs() < 1e-13 * p.max(1e-3) / 1e-3);
        }
    }

    #[test]
    fn student_t_matches_closed_forms() {
        // nu = 2 has F(x) = 1/2 + x / (2 sqrt(2 + x^2))
        let t2 = StudentT::new(2.0);
        for x in [-30.0, -3.0, -0.4, 0.0, 0.7, 5.0] {
            let exact = 0.5 + x / (2.0 * (2.0f64 + x * x).sqrt());
            assert!((t2.cdf(x) - exact).abs() < 1e-13, "x={x}");
        }
        // nu = 1 is Cauchy
        let t1 = StudentT::new(1.0);
        for x in [-10.0f64, -1.0, 0.2, 4.0] {
            let exact = 0.5 + x.atan() / PI;
            assert!((t1.cdf(x) - exact).abs() < 1e-13);
        }
        // pdf normalisation at 0 for nu = 2: 1 / (2 sqrt 2)
        assert!((t2.ln_pdf(0.0).exp() - 1.0 / (2.0 * SQRT_2)).abs() < 1e-14);
    }

    #[test]
    fn student_t_quantile_round_trip() {
        for nu in [2.0, 2.7, 4.0, 9.5, 30.0, 31.0] {
            let t = StudentT::new(nu);
            for p in [1e-10, 1e-6, 0.01, 0.2, 0.5, 0.73, 0.999, 1.0 - 1e-10] {
                let q = t.quantile(p);
                let back = t.cdf(q);
                assert!(((back - p) / p.min(1.0 - p)).abs() < 1e-9, "nu={nu} p={p} back={back}");
            }
        }
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[0.5, -1.2, 2.0]), vec![2.0, 1.0, 3.0]);
        assert_eq!(average_ranks(&[1.0, 1.0, 0.0]), vec![2.5, 2.5, 1.0]);
    }

    #[test]
    fn skewness_sign() {
        assert!(skewness(&[-2.0, -1.0, 0.0, 1.0, 2.0]).abs() < 1e-15);
        assert!(skewness(&[0.0, 0.0, 0.0, 1.0, 5.0]) > 0.0);
        assert_eq!(skewness(&[3.0; 4]), 0.0);
    }
}
