//! The polynomial basis shared by the wavefront model and the estimator.
//!
//! `p_m(n) = Π_d C(n_d, m_d)`: the order-`m` forward difference of `p_m` is
//! exactly one and every basis member of lower or incomparable degree is
//! annihilated by it.

use crate::lattice::{MultiIndex, RANK};

/// Generalized binomial coefficient `n(n-1)···(n-k+1)/k!`, zero for `k < 0`.
pub fn binom_general(n: i64, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    // C(n, i+1) = C(n, i)·(n-i)/(i+1) stays integral, so the running value is exact.
    let mut acc: i128 = 1;
    for i in 0..k as i128 {
        match acc.checked_mul(n as i128 - i) {
            Some(p) => acc = p / (i + 1),
            None => return binom_real(n as f64, k as usize),
        }
    }
    acc as f64
}

/// Binomial coefficient with a real upper argument.
pub fn binom_real(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x - i as f64) / (i + 1) as f64)
}

/// Evaluates `p_m(n)`.
pub fn basis_value(m: &MultiIndex, n: &MultiIndex) -> f64 {
    (0..RANK)
        .map(|d| binom_general(n[d] as i64, m[d] as i64))
        .product()
}

/// Coefficients `c_j`, `j = 0..=k`, with `C((n - offset)/stride, k) = Σ_j c_j C(n, j)`.
///
/// This is Newton's forward-difference expansion of the left-hand side at
/// `n = 0`, exact for polynomials of degree `k`.
pub fn rebase_coefficients(k: usize, offset: usize, stride: usize) -> Vec<f64> {
    let samples: Vec<f64> = (0..=k)
        .map(|n| binom_real((n as f64 - offset as f64) / stride as f64, k))
        .collect();
    forward_differences(&samples)
}

/// `Δ^j f(0)` for `j = 0..len`.
pub fn forward_differences(samples: &[f64]) -> Vec<f64> {
    let mut work = samples.to_vec();
    let mut out = Vec::with_capacity(samples.len());
    for _ in 0..samples.len() {
        out.push(work[0]);
        for i in 0..work.len().saturating_sub(1) {
            work[i] = work[i + 1] - work[i];
        }
        work.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_and_generalized_values() {
        assert_eq!(binom_general(5, 2), 10.0);
        assert_eq!(binom_general(7, -1), 0.0);
        assert_eq!(binom_general(-1, 2), 1.0);
        assert_eq!(binom_general(3, 5), 0.0);
        assert_eq!(binom_general(-3, 3), -10.0);
        assert_eq!(binom_general(4, 0), 1.0);
    }

    #[test]
    fn real_matches_integer() {
        for n in -6i64..10 {
            for k in 0..6 {
                assert_eq!(binom_real(n as f64, k as usize), binom_general(n, k));
            }
        }
    }

    #[test]
    fn forward_differences_of_binomial() {
        // C(n, 2) sampled at 0..4 has Newton coefficients (0, 0, 1, 0).
        let s: Vec<f64> = (0..4).map(|n| binom_general(n, 2)).collect();
        assert_eq!(forward_differences(&s), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn rebase_reproduces_strided_binomial() {
        for (k, off, stride) in [(1, 0, 3), (2, 1, 15), (3, 2, 4), (2, 0, 1)] {
            let c = rebase_coefficients(k, off, stride);
            for step in 0..5 {
                let n = off + stride * step;
                let direct = binom_real(step as f64, k);
                let via: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(j, cj)| cj * binom_general(n as i64, j as i64))
                    .sum();
                assert!((direct - via).abs() < 1e-9, "k={k} off={off} s={stride}");
            }
        }
    }
}
