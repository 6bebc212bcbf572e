//! Theoretical rate functions appearing in the convergence bounds.

use crate::error::{Error, Result};

/// Empirical-measure rate in dimension `d`:
/// `N^(-1/4)` for `d < 4`, `N^(-1/4) sqrt(log(1 + N))` for `d = 4`, `N^(-1/d)` for `d > 4`.
pub fn rho_rate(n: u64, d: usize) -> Result<f64> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("rho needs N >= 1 and d >= 1".into()));
    }
    let n = n as f64;
    Ok(match d {
        1..=3 => n.powf(-0.25),
        4 => n.powf(-0.25) * (1.0 + n).ln().sqrt(),
        _ => n.powf(-1.0 / d as f64),
    })
}

/// Propagation-of-chaos rate in root-mean-square form, `N^(-1/(2 (1 + alpha)))`.
pub fn poc_rate(n: u64, alpha: f64) -> Result<f64> {
    if n == 0 || !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidInput("poc rate needs N >= 1 and alpha >= 0".into()));
    }
    Ok((n as f64).powf(-1.0 / (2.0 * (1.0 + alpha))))
}

/// Ergodic rate function `a_t(x)`:
/// `[x^(-alpha) + A (alpha / (2 + alpha))^(1 + alpha/2) t]^(-2/alpha)` for `alpha > 0`,
/// `C^2 x^2 exp(-2 A t)` for `alpha = 0`.
pub fn rate_function_a(t: f64, x: f64, alpha: f64, a: f64, c: f64) -> Result<f64> {
    if !(t >= 0.0) || !(x > 0.0) || !(alpha >= 0.0) || !(a > 0.0) || !(c > 0.0) {
        return Err(Error::InvalidInput("rate function needs t >= 0, x > 0, alpha >= 0, A > 0, C > 0".into()));
    }
    if alpha == 0.0 {
        return Ok(c * c * x * x * (-2.0 * a * t).exp());
    }
    let k = a * (alpha / (2.0 + alpha)).powf(1.0 + alpha / 2.0);
    Ok((x.powf(-alpha) + k * t).powf(-2.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_branches() {
        assert_eq!(rho_rate(16, 2).unwrap(), 0.5);
        assert!((rho_rate(16, 4).unwrap() - 0.5 * 17f64.ln().sqrt()).abs() < 1e-15);
        assert!((rho_rate(32, 5).unwrap() - 0.5).abs() < 1e-15);
        assert!(rho_rate(0, 1).is_err());
    }

    #[test]
    fn rate_function_at_zero() {
        assert_eq!(rate_function_a(0.0, 1.0, 0.0, 1.0, 1.0).unwrap(), 1.0);
        assert!((rate_function_a(0.0, 1.7, 0.5, 2.0, 1.0).unwrap() - 1.7 * 1.7).abs() < 1e-12);
        assert!(rate_function_a(1.0, 1.0, -1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn poc_value() {
        assert_eq!(poc_rate(16, 1.0).unwrap(), 0.5);
        assert_eq!(poc_rate(9, 0.0).unwrap(), 1.0 / 3.0);
    }
}
