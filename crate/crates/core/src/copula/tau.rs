use super::CopulaError;
use crate::stats::norm_cdf;

/// Number of pairs tied within runs of equal values in a sorted slice.
fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for k in 1..=sorted.len() {
        if k < sorted.len() && sorted[k] == sorted[k - 1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total
}

/// Merge sort that counts strict inversions (`a[i] > a[j]`, `i < j`).
fn sort_counting_inversions(a: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_inversions(&mut a[..mid], buf);
    swaps += sort_counting_inversions(&mut a[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if a[j] < a[i] {
            buf.push(a[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(a[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&a[i..mid]);
    buf.extend_from_slice(&a[j..n]);
    a.copy_from_slice(buf);
    swaps
}

/// Kendall's τ-b in O(n log n) (Knight's algorithm).
///
/// Returns 0 when either sample is constant, where τ-b is undefined.
pub fn empirical_kendall_tau(x: &[f64], y: &[f64]) -> Result<f64, CopulaError> {
    if x.len() != y.len() {
        return Err(CopulaError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(CopulaError::TooFewPoints { got: n, needed: 2 });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    let (mut x_ties, mut joint_ties) = (0u64, 0u64);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let run = (end - start) as u64;
        x_ties += run * (run - 1) / 2;
        let ys: Vec<f64> = order[start..end].iter().map(|&k| y[k]).collect();
        joint_ties += tied_pairs(&ys);
        start = end;
    }

    let mut ys: Vec<f64> = order.iter().map(|&k| y[k]).collect();
    let mut buf = Vec::with_capacity(n);
    let swaps = sort_counting_inversions(&mut ys, &mut buf);
    let y_ties = tied_pairs(&ys);

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let denom = ((n0 - x_ties) as f64 * (n0 - y_ties) as f64).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    let s = n0 as f64 - x_ties as f64 - y_ties as f64 + joint_ties as f64 - 2.0 * swaps as f64;
    Ok((s / denom).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndependenceTest {
    pub tau: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub independent: bool,
}

/// Asymptotic two-sided test of τ = 0.
pub fn independence_test(u: &[f64], v: &[f64], alpha: f64) -> Result<IndependenceTest, CopulaError> {
    let tau = empirical_kendall_tau(u, v)?;
    let n = u.len() as f64;
    let statistic = (9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0))).sqrt() * tau.abs();
    let p_value = (2.0 * norm_cdf(-statistic)).min(1.0);
    Ok(IndependenceTest {
        tau,
        statistic,
        p_value,
        independent: p_value > alpha,
    })
}
