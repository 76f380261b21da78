//! Truncated Taylor series `c_k = f^{(k)}(t₀) / k!` for exact derivatives of
//! univariate profiles.

/// `exp(v)` for a series `v`, by `k w_k = Σ_{j=1}^{k} j v_j w_{k-j}`.
pub(crate) fn exp(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut w = vec![0.0; n];
    w[0] = v[0].exp();
    for k in 1..n {
        let s: f64 = (1..=k).map(|j| j as f64 * v[j] * w[k - j]).sum();
        w[k] = s / k as f64;
    }
    w
}

/// `u^p` for a series with `u₀ > 0`, by the J.C.P. Miller recurrence.
pub(crate) fn pow(u: &[f64], p: f64) -> Vec<f64> {
    let n = u.len();
    let mut w = vec![0.0; n];
    w[0] = u[0].powf(p);
    for k in 1..n {
        let s: f64 = (1..=k).map(|j| ((p + 1.0) * j as f64 - k as f64) * u[j] * w[k - j]).sum();
        w[k] = s / (k as f64 * u[0]);
    }
    w
}

/// Series of `t ↦ t₀ + t` padded to `n` terms.
pub(crate) fn variable(t0: f64, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = t0;
    if n > 1 {
        v[1] = 1.0;
    }
    v
}

/// Cauchy product truncated to the shorter length.
pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum()).collect()
}

/// `k!` as a float.
pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
/// Derivatives `f^{(k)}(t₀)` from Taylor coefficients.
pub(crate) fn derivatives(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().map(|(k, v)| v * factorial(k)).collect()
}
