//! Unrotated bivariate copula kernels.
//!
//! `h(u, v)` is always `P(U <= u | V = v)`. All families here are
//! exchangeable, so conditioning on the first argument is `h(v, u)`.

use crate::optim::brent_root;
use crate::stats::{norm_cdf, norm_quantile, StudentT};
use statrs::function::gamma::ln_gamma;

pub(crate) const UNIT_EPS: f64 = 1e-10;

#[inline]
pub(crate) fn clamp_unit(x: f64) -> f64 {
    x.clamp(UNIT_EPS, 1.0 - UNIT_EPS)
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Kernel {
    Independence,
    Gaussian {
        rho: f64,
        s: f64,
    },
    StudentT {
        rho: f64,
        nu: f64,
        s: f64,
        t: StudentT,
        t1: StudentT,
        ln_const: f64,
    },
    Clayton {
        theta: f64,
    },
    Gumbel {
        theta: f64,
    },
    Frank {
        theta: f64,
        g: f64,
    },
    Joe {
        theta: f64,
    },
}

/// ln(e^a + e^b - 1) for a, b >= 0.
#[inline]
fn ln_sum_exp_minus_one(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + ((lo - hi).exp() - (-hi).exp()).ln_1p()
}

/// ln(x^theta + y^theta) for x, y > 0.
#[inline]
fn ln_pow_sum(x: f64, y: f64, theta: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    theta * hi.ln() + (lo / hi).powf(theta).ln_1p()
}

impl Kernel {
    pub(crate) fn gaussian(rho: f64) -> Self {
        Kernel::Gaussian {
            rho,
            s: (1.0 - rho * rho).sqrt(),
        }
    }

    pub(crate) fn student_t(rho: f64, nu: f64) -> Self {
        let ln_const = ln_gamma(0.5 * (nu + 2.0)) + ln_gamma(0.5 * nu)
            - 2.0 * ln_gamma(0.5 * (nu + 1.0))
            - 0.5 * (1.0 - rho * rho).ln();
        Kernel::StudentT {
            rho,
            nu,
            s: (1.0 - rho * rho).sqrt(),
            t: StudentT::new(nu),
            t1: StudentT::new(nu + 1.0),
            ln_const,
        }
    }

    pub(crate) fn frank(theta: f64) -> Self {
        Kernel::Frank {
            theta,
            g: (-theta).exp_m1(),
        }
    }

    /// Log-density for the Student-t kernel given marginal t-scores.
    #[inline]
    pub(crate) fn t_ln_pdf_scores(rho: f64, nu: f64, ln_const: f64, x: f64, y: f64) -> f64 {
        let one_m = 1.0 - rho * rho;
        let q = (x * x + y * y - 2.0 * rho * x * y) / (nu * one_m);
        ln_const - 0.5 * (nu + 2.0) * q.ln_1p()
            + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p())
    }

    pub(crate) fn ln_pdf(&self, u: f64, v: f64) -> f64 {
        match *self {
            Kernel::Independence => 0.0,
            Kernel::Gaussian { rho, s } => {
                let (x, y) = (norm_quantile(u), norm_quantile(v));
                -s.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * s * s)
            }
            Kernel::StudentT {
                rho,
                nu,
                t,
                ln_const,
                ..
            } => Self::t_ln_pdf_scores(rho, nu, ln_const, t.quantile(u), t.quantile(v)),
            Kernel::Clayton { theta } => {
                let (lu, lv) = (u.ln(), v.ln());
                let l = ln_sum_exp_minus_one(-theta * lu, -theta * lv);
                theta.ln_1p() - (1.0 + theta) * (lu + lv) - (2.0 + 1.0 / theta) * l
            }
            Kernel::Gumbel { theta } => {
                let (x, y) = (-u.ln(), -v.ln());
                let la = ln_pow_sum(x, y, theta);
                let a = (la / theta).exp();
                -a + x + y + (theta - 1.0) * (x.ln() + y.ln()) + (1.0 / theta - 2.0) * la
                    + (a + theta - 1.0).ln()
            }
            Kernel::Frank { theta, g } => {
                let a = (-theta * u).exp_m1();
                let b = (-theta * v).exp_m1();
                (theta * -g).ln() - theta * (u + v) - 2.0 * (g + a * b).abs().ln()
            }
            Kernel::Joe { theta } => {
                let (ub, vb) = (1.0 - u, 1.0 - v);
                let (a, b) = (ub.powf(theta), vb.powf(theta));
                let s = a + b - a * b;
                (1.0 / theta - 2.0) * s.ln()
                    + (theta - 1.0) * (ub.ln() + vb.ln())
                    + (theta - 1.0 + s).ln()
            }
        }
    }

    /// P(U <= u | V = v).
    pub(crate) fn h(&self, u: f64, v: f64) -> f64 {
        match *self {
            Kernel::Independence => u,
            Kernel::Gaussian { rho, s } => {
                norm_cdf((norm_quantile(u) - rho * norm_quantile(v)) / s)
            }
            Kernel::StudentT {
                rho, nu, s, t, t1, ..
            } => {
                let (x, y) = (t.quantile(u), t.quantile(v));
                let scale = ((nu + y * y) / (nu + 1.0)).sqrt() * s;
                t1.cdf((x - rho * y) / scale)
            }
            Kernel::Clayton { theta } => {
                let (lu, lv) = (u.ln(), v.ln());
                let l = ln_sum_exp_minus_one(-theta * lu, -theta * lv);
                (-(theta + 1.0) * lv - (1.0 + 1.0 / theta) * l).exp()
            }
            Kernel::Gumbel { theta } => {
                let (x, y) = (-u.ln(), -v.ln());
                let la = ln_pow_sum(x, y, theta);
                let a = (la / theta).exp();
                (-a + y + (theta - 1.0) * y.ln() + (1.0 / theta - 1.0) * la).exp()
            }
            Kernel::Frank { theta, g } => {
                let a = (-theta * u).exp_m1();
                let b = (-theta * v).exp_m1();
                (b + 1.0) * a / (g + a * b)
            }
            Kernel::Joe { theta } => {
                let (ub, vb) = (1.0 - u, 1.0 - v);
                let (a, b) = (ub.powf(theta), vb.powf(theta));
                let s = a + b - a * b;
                ((1.0 / theta - 1.0) * s.ln() + (theta - 1.0) * vb.ln()).exp() * (1.0 - a)
            }
        }
        .clamp(0.0, 1.0)
    }

    /// Solves `h(u, v) = w` for `u`.
    pub(crate) fn h_inverse(&self, w: f64, v: f64) -> Option<f64> {
        let u = match *self {
            Kernel::Independence => w,
            Kernel::Gaussian { rho, s } => norm_cdf(norm_quantile(w) * s + rho * norm_quantile(v)),
            Kernel::StudentT {
                rho, nu, s, t, t1, ..
            } => {
                let y = t.quantile(v);
                let scale = ((nu + y * y) / (nu + 1.0)).sqrt() * s;
                t.cdf(t1.quantile(w) * scale + rho * y)
            }
            Kernel::Clayton { theta } => {
                let k = (-theta * v.ln()).exp() * (-(theta / (1.0 + theta)) * w.ln()).exp_m1();
                (-k.ln_1p() / theta).exp()
            }
            Kernel::Frank { theta, g } => {
                let a = w * g / (w + (1.0 - w) * (-theta * v).exp());
                -a.ln_1p() / theta
            }
            Kernel::Gumbel { .. } | Kernel::Joe { .. } => return self.h_inverse_numeric(w, v),
        };
        Some(u.clamp(0.0, 1.0))
    }

    fn h_inverse_numeric(&self, w: f64, v: f64) -> Option<f64> {
        let (lo, hi) = (UNIT_EPS * 1e-3, 1.0 - UNIT_EPS * 1e-3);
        let f = |u: f64| self.h(u, v) - w;
        if f(lo) >= 0.0 {
            return Some(lo);
        }
        if f(hi) <= 0.0 {
            return Some(hi);
        }
        brent_root(f, lo, hi, 1e-15, 300)
    }

    pub(crate) fn cdf(&self, u: f64, v: f64) -> Option<f64> {
        let c = match *self {
            Kernel::Independence => u * v,
            Kernel::Gaussian { .. } | Kernel::StudentT { .. } => return None,
            Kernel::Clayton { theta } => {
                let l = ln_sum_exp_minus_one(-theta * u.ln(), -theta * v.ln());
                (-l / theta).exp()
            }
            Kernel::Gumbel { theta } => {
                let la = ln_pow_sum(-u.ln(), -v.ln(), theta);
                (-(la / theta).exp()).exp()
            }
            Kernel::Frank { theta, g } => {
                let a = (-theta * u).exp_m1();
                let b = (-theta * v).exp_m1();
                -(a * b / g).ln_1p() / theta
            }
            Kernel::Joe { theta } => {
                let (a, b) = ((1.0 - u).powf(theta), (1.0 - v).powf(theta));
                1.0 - (a + b - a * b).powf(1.0 / theta)
            }
        };
        Some(c)
    }

    pub(crate) fn kendall_tau(&self) -> f64 {
        match *self {
            Kernel::Independence => 0.0,
            Kernel::Gaussian { rho, .. } | Kernel::StudentT { rho, .. } => {
                2.0 / std::f64::consts::PI * rho.asin()
            }
            Kernel::Clayton { theta } => theta / (theta + 2.0),
            Kernel::Gumbel { theta } => 1.0 - 1.0 / theta,
            Kernel::Frank { theta, .. } => frank_tau(theta),
            Kernel::Joe { theta } => joe_tau(theta),
        }
    }
}

/// Debye function D1(x) = (1/x) ∫_0^x t / (e^t - 1) dt for x > 0, by Simpson's rule.
pub(crate) fn debye1(x: f64) -> f64 {
    let n = 400;
    let h = x / n as f64;
    let f = |t: f64| if t == 0.0 { 1.0 } else { t / t.exp_m1() };
    let mut sum = f(0.0) + f(x);
    for i in 1..n {
        sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0 / x
}

pub(crate) fn frank_tau(theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let a = theta.abs();
    let tau = 1.0 - 4.0 / a * (1.0 - debye1(a));
    tau.copysign(theta)
}

pub(crate) fn joe_tau(theta: f64) -> f64 {
    const TERMS: usize = 2000;
    let mut sum = 0.0;
    for k in (1..=TERMS).rev() {
        let kf = k as f64;
        sum += 1.0 / (kf * (theta * kf + 2.0) * (theta * (kf - 1.0) + 2.0));
    }
    // tail of the 1/(theta^2 k^3) series
    let kt = TERMS as f64 + 0.5;
    sum += 1.0 / (2.0 * theta * theta * kt * kt);
    1.0 - 4.0 * sum
}
