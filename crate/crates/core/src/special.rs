//! Gamma-function helpers for real arguments.

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `Γ(x)` for real `x`.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}
