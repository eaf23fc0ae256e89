//! Closed-form dephasing formulas for stored Bell pairs.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Fidelity of a Bell pair after `t` time units of pure dephasing at rate
/// `gamma`: `(1 + exp(-2 gamma t)) / 2`.
pub fn fidelity_at(t: f64, gamma: f64) -> Result<f64> {
    check_time("t", t)?;
    check_gamma(gamma)?;
    Ok(decay_to_fidelity(gamma * t))
}

/// Maximum storage time before the fidelity of a pair drops to `f_threshold`:
/// `-ln(2F - 1) / (2 gamma)`. Returns `f64::INFINITY` when `gamma == 0`.
pub fn renege_time(f_threshold: f64, gamma: f64) -> Result<f64> {
    check_threshold(f_threshold)?;
    check_gamma(gamma)?;
    if gamma == 0.0 {
        return Ok(f64::INFINITY);
    }
    // -ln(1) is -0.0; normalise so F = 1 yields exactly 0.
    Ok((-(2.0 * f_threshold - 1.0).ln() / (2.0 * gamma)).max(0.0))
}

/// End-to-end fidelity after an ideal swap of two pairs stored for `t1` and
/// `t2` at the same dephasing rate.
pub fn compose_swap_fidelity(t1: f64, t2: f64, gamma: f64) -> Result<f64> {
    compose_swap_fidelity_with(t1, gamma, t2, gamma)
}

/// Swap composition for leaves with different dephasing rates: the decay
/// exponents add, `gamma_a t_a + gamma_b t_b`.
pub fn compose_swap_fidelity_with(t_a: f64, gamma_a: f64, t_b: f64, gamma_b: f64) -> Result<f64> {
    check_time("t_a", t_a)?;
    check_time("t_b", t_b)?;
    check_gamma(gamma_a)?;
    check_gamma(gamma_b)?;
    Ok(decay_to_fidelity(gamma_a * t_a + gamma_b * t_b))
}

fn decay_to_fidelity(exponent: f64) -> f64 {
    // Clamp at the representable floor so the result stays strictly above 1/2.
    let f = 0.5 * (1.0 + (-2.0 * exponent).exp());
    if f > 0.5 {
        f
    } else {
        0.5 + f64::EPSILON / 2.0
    }
}

fn check_time(name: &'static str, t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(param(name, t, "storage time must be >= 0"))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(param("gamma", gamma, "dephasing rate must be finite and >= 0"))
    }
}

fn check_threshold(f: f64) -> Result<()> {
    if f > 0.5 && f <= 1.0 {
        Ok(())
    } else {
        Err(param("f_threshold", f, "target fidelity must lie in (0.5, 1]"))
    }
}

/// Memory dephasing parameters of one leaf switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingModel {
    pub gamma: f64,
    pub f_threshold: f64,
}

impl DephasingModel {
    pub fn new(gamma: f64, f_threshold: f64) -> Result<Self> {
        check_gamma(gamma)?;
        check_threshold(f_threshold)?;
        Ok(Self { gamma, f_threshold })
    }

    pub fn fidelity_at(&self, t: f64) -> Result<f64> {
        fidelity_at(t, self.gamma)
    }

    pub fn renege_time(&self) -> f64 {
        renege_time(self.f_threshold, self.gamma).expect("validated on construction")
    }
}

/// Bell-state measurement success model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsmModel {
    pub q_success: f64,
}

impl BsmModel {
    pub fn new(q_success: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&q_success) {
            Ok(Self { q_success })
        } else {
            Err(param("q_success", q_success, "must lie in [0, 1]"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Expected values evaluated independently (Python, math module).
    const F_GAMMA_005_T5: f64 = 0.803_265_329_856_316_7;
    const T_07_005: f64 = 9.162_907_318_741_55;
    const T_07_002: f64 = 22.907_268_296_853_875;

    #[test]
    fn fidelity_examples() {
        assert_eq!(fidelity_at(0.0, 0.05).unwrap(), 1.0);
        assert_eq!(fidelity_at(0.0, 3.0).unwrap(), 1.0);
        assert!((fidelity_at(5.0, 0.05).unwrap() - F_GAMMA_005_T5).abs() < 1e-12);
        let far = fidelity_at(1000.0, 0.05).unwrap();
        assert!(far > 0.5 && far < 0.5 + 1e-12);
        assert!(fidelity_at(-1.0, 0.05).is_err());
        assert!(fidelity_at(1.0, -0.05).is_err());
    }

    #[test]
    fn renege_time_examples() {
        assert!((renege_time(0.7, 0.05).unwrap() - T_07_005).abs() < 1e-9);
        assert!((renege_time(0.7, 0.02).unwrap() - T_07_002).abs() < 1e-9);
        assert_eq!(renege_time(1.0, 0.3).unwrap(), 0.0);
        assert!(renege_time(1.0, 0.3).unwrap().is_sign_positive());
        assert_eq!(renege_time(0.7, 0.0).unwrap(), f64::INFINITY);
        assert!(renege_time(0.5, 0.05).is_err());
        assert!(renege_time(0.3, 0.05).is_err());
        assert!(renege_time(1.01, 0.05).is_err());
    }

    #[test]
    fn swap_examples() {
        assert_eq!(compose_swap_fidelity(0.0, 0.0, 0.05).unwrap(), 1.0);
        assert!((compose_swap_fidelity(2.0, 3.0, 0.05).unwrap() - F_GAMMA_005_T5).abs() < 1e-12);
        assert!(compose_swap_fidelity(-1.0, 0.0, 0.05).is_err());
        // Heterogeneous exponents add.
        let f = compose_swap_fidelity_with(2.0, 0.1, 1.0, 0.3).unwrap();
        assert!((f - fidelity_at(1.0, 0.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn models_validate() {
        assert!(DephasingModel::new(0.05, 0.7).is_ok());
        assert!(DephasingModel::new(0.05, 0.5).is_err());
        assert!(BsmModel::new(0.5).is_ok());
        assert!(BsmModel::new(1.5).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(f in 0.5001f64..0.9999, gamma in 1e-3f64..1.0) {
            let t = renege_time(f, gamma).unwrap();
            prop_assert!((fidelity_at(t, gamma).unwrap() - f).abs() < 1e-12);
        }

        #[test]
        fn decreasing_in_time(t in 0.0f64..100.0, dt in 1e-3f64..10.0, gamma in 1e-3f64..1.0) {
            let a = fidelity_at(t, gamma).unwrap();
            let b = fidelity_at(t + dt, gamma).unwrap();
            prop_assert!(b <= a);
            // Strict while the decrement is representable next to 1/2.
            prop_assert!(b < a || a - 0.5 < 1e-6);
            prop_assert!(b > 0.5 && a <= 1.0);
            prop_assert_eq!(fidelity_at(t, 0.0).unwrap(), 1.0);
        }

        #[test]
        fn swap_bounded_and_symmetric(t1 in 0.0f64..50.0, t2 in 0.0f64..50.0, gamma in 0.0f64..1.0) {
            let c = compose_swap_fidelity(t1, t2, gamma).unwrap();
            prop_assert_eq!(c, compose_swap_fidelity(t2, t1, gamma).unwrap());
            let m = fidelity_at(t1, gamma).unwrap().min(fidelity_at(t2, gamma).unwrap());
            prop_assert!(c <= m);
            prop_assert!(c > 0.5 && c <= 1.0);
        }
    }
}
