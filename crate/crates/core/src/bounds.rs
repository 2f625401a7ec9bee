//! Closed-form guarantees on output size and conditioned-count error.

use crate::error::{Error, Result};

fn require_gap(phi: f64, epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && phi > 0.0 && epsilon < phi / 2.0) {
        return Err(Error::BoundPrecondition(format!(
            "requires 0 <= epsilon < phi / 2 (phi = {phi}, epsilon = {epsilon})"
        )));
    }
    Ok(())
}

/// One dimension: at most `1 / (phi - 2 epsilon)` prefixes are emitted.
pub fn output_size_1d(phi: f64, epsilon: f64) -> Result<f64> {
    require_gap(phi, epsilon)?;
    Ok(1.0 / (phi - 2.0 * epsilon))
}

/// One dimension: `F'_p - F_p <= (epsilon / (phi - 2 epsilon)) * N`; returns
/// the multiplier of `N`.
pub fn cond_error_1d(phi: f64, epsilon: f64) -> Result<f64> {
    require_gap(phi, epsilon)?;
    Ok(epsilon / (phi - 2.0 * epsilon))
}

/// Two dimensions, antichain size `a`:
/// `(2 / (a eps)) (g - sqrt(g^2 - a^2 eps))` with `g = phi - (1 + a) eps`.
///
/// Defined only when the discriminant is non-negative and `g > 0`. At
/// `epsilon = 0` the limit `a / phi` is returned.
pub fn output_size_2d(phi: f64, epsilon: f64, a: u32) -> Result<f64> {
    if !(phi > 0.0 && epsilon >= 0.0) || a == 0 {
        return Err(Error::BoundPrecondition(format!(
            "requires phi > 0, epsilon >= 0, A >= 1 (phi = {phi}, epsilon = {epsilon}, A = {a})"
        )));
    }
    let a = a as f64;
    if epsilon == 0.0 {
        return Ok(a / phi);
    }
    let gap = phi - (1.0 + a) * epsilon;
    let disc = gap * gap - a * a * epsilon;
    if gap <= 0.0 || disc < 0.0 {
        return Err(Error::BoundPrecondition(format!(
            "epsilon = {epsilon} too large for the two-dimensional bound at phi = {phi}, A = {a}"
        )));
    }
    Ok(2.0 / (a * epsilon) * (gap - disc.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_size() {
        assert_eq!(output_size_1d(0.01, 0.0001).unwrap().floor(), 102.0);
        assert_eq!(output_size_1d(0.5, 0.0).unwrap(), 2.0);
        assert!((output_size_1d(0.1, 0.01).unwrap() - 12.5).abs() < 1e-12);
        // 1 / (0.01 - 0.002) = 125 at epsilon = 0.001.
        assert!((output_size_1d(0.01, 0.001).unwrap() - 125.0).abs() < 1e-9);
        assert!(output_size_1d(0.1, 0.05).is_err());
    }

    #[test]
    fn one_dimensional_error() {
        assert!((cond_error_1d(0.1, 0.01).unwrap() - 0.125).abs() < 1e-12);
        assert_eq!(cond_error_1d(0.1, 0.0).unwrap(), 0.0);
        assert!((cond_error_1d(0.05, 0.005).unwrap() - 0.125).abs() < 1e-12);
        assert!(cond_error_1d(0.1, 0.2).is_err());
    }

    #[test]
    fn two_dimensional_worked_values() {
        assert_eq!(output_size_2d(0.1, 1e-4, 5).unwrap().floor(), 53.0);
        assert_eq!(output_size_2d(0.05, 1e-5, 5).unwrap().floor(), 102.0);
        assert_eq!(output_size_2d(0.01, 1e-6, 5).unwrap().floor(), 536.0);
        assert_eq!(output_size_2d(0.1, 0.0, 5).unwrap(), 50.0);
    }

    #[test]
    fn two_dimensional_rejects_large_epsilon() {
        assert!(output_size_2d(0.05, 0.005, 5).is_err());
        assert!(output_size_2d(0.1, 0.1, 5).is_err());
    }
}
