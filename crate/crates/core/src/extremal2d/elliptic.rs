//! Complete elliptic integrals by the arithmetic-geometric mean.
//!
//! The modulus convention is `K(x) = ∫_0^{π/2} (1 - x² sin² θ)^{-1/2} dθ`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{domain, Result};

/// `(K, E, K - E)` from the modulus `x` and its complement `x' = sqrt(1 - x²)`.
///
/// Passing the complement separately keeps full precision as `x → 1`; the
/// recurrence `c_{n+1} = c_n² / (4 a_{n+1})` and the direct `K - E` keep it
/// as `x → 0`.
pub(crate) fn k_e_diff(x: f64, xp: f64) -> (f64, f64, f64) {
    let (mut a, mut b) = (1.0_f64, xp);
    let mut c = x;
    let mut pow = 0.5;
    let mut sum = pow * c * c;
    for _ in 0..64 {
        let next = (0.5 * (a + b), (a * b).sqrt());
        c = c * c / (4.0 * next.0);
        pow *= 2.0;
        sum += pow * c * c;
        a = next.0;
        b = next.1;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum), k * sum)
}

pub(crate) fn k_and_e(x: f64, xp: f64) -> (f64, f64) {
    let (k, e, _) = k_e_diff(x, xp);
    (k, e)
}

/// Complete elliptic integral of the first kind, `x ∈ [0, 1)`.
pub fn elliptic_k(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return domain(format!("K(x) needs 0 <= x < 1, got {x}"));
    }
    Ok(k_and_e(x, ((1.0 - x) * (1.0 + x)).sqrt()).0)
}

/// Complete elliptic integral of the second kind, `x ∈ [0, 1]`.
pub fn elliptic_e(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("E(x) needs 0 <= x <= 1, got {x}"));
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    Ok(k_and_e(x, ((1.0 - x) * (1.0 + x)).sqrt()).1)
}

fn half_angle_moduli(phi0: f64) -> (f64, f64) {
    ((0.5 * phi0).cos(), (0.5 * phi0).sin())
}

/// `K₊(φ₀) = 2√2 (K(cos(φ₀/2)) - E(cos(φ₀/2)))`.
pub fn k_plus(phi0: f64) -> f64 {
    let (x, xp) = half_angle_moduli(phi0);
    2.0 * SQRT_2 * k_e_diff(x, xp).2
}

/// `K₋(φ₀) = 2√2 E(cos(φ₀/2))`.
pub fn k_minus(phi0: f64) -> f64 {
    let (x, xp) = half_angle_moduli(phi0);
    2.0 * SQRT_2 * k_and_e(x, xp).1
}

/// `K₊(φ₀) / K₋(φ₀)`, decreasing from `+∞` at 0 to 0 at `π`.
pub fn k_ratio(phi0: f64) -> f64 {
    let (x, xp) = half_angle_moduli(phi0);
    let (_, e, diff) = k_e_diff(x, xp);
    diff / e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_values() {
        assert!((elliptic_k(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((elliptic_e(0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(elliptic_e(1.0).unwrap(), 1.0);
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_e(1.5).is_err());
    }

    #[test]
    fn near_pi_limits() {
        let p = PI - 1e-9;
        assert!(k_plus(p) < 1e-15);
        assert!((k_minus(p) - SQRT_2 * PI).abs() < 1e-12);
    }

    #[test]
    fn e_tends_to_one() {
        assert!((elliptic_e(1.0 - 1e-12).unwrap() - 1.0).abs() < 1e-9);
    }
}
