//! Polygamma functions needed for log-speckle statistics.
//!
//! If `u ~ Gamma(L, 1/L)` is unit-mean speckle, then
//! `E[ln u] = digamma(L) - ln L` and `Var[ln u] = trigamma(L)`.

/// Digamma `psi(x)` for `x > 0`: recurrence up to `x >= 10`, then the
/// asymptotic series.
pub fn digamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// Trigamma `psi'(x)` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
}

/// Mean of `ln u` for unit-mean `L`-look speckle.
pub fn log_speckle_mean(looks: f64) -> f64 {
    digamma(looks) - looks.ln()
}

/// Standard deviation of `ln u` for unit-mean `L`-look speckle.
pub fn log_speckle_std(looks: f64) -> f64 {
    trigamma(looks).sqrt()
}
