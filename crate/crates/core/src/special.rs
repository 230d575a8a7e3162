//! Digamma and trigamma, plus `ln Gamma` from `libm`.
//!
//! Both use the upward recurrence until `x >= 10` and then the asymptotic
//! expansion, which is accurate to ~1e-15 relative there.

pub use libm::lgamma as ln_gamma;

/// `psi(x) = d/dx ln Gamma(x)` for `x > 0`.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number series for psi(x) - ln x + 1/(2x).
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
    acc + libm::log(x) - 0.5 * inv - series
}

/// `psi'(x)` for `x > 0`.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0
                - inv2
                    * (1.0 / 30.0
                        - inv2
                            * (1.0 / 42.0
                                - inv2
                                    * (1.0 / 30.0
                                        - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * (7.0 / 6.0)))))));
    acc + series
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_reference_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-14);
        assert!((digamma(2.0) - (1.0 - EULER_GAMMA)).abs() < 1e-14);
        assert!((digamma(0.5) - (-EULER_GAMMA - 2.0 * core::f64::consts::LN_2)).abs() < 1e-13);
        // psi(2) - psi(1) = 1
        assert!((digamma(2.0) - digamma(1.0) - 1.0).abs() < 1e-14);
        // scipy.special.digamma(37.5)
        assert!((digamma(37.5) - 3.610_948_344_596_338_6).abs() < 1e-13);
    }

    #[test]
    fn trigamma_reference_values() {
        let pi2_6 = core::f64::consts::PI * core::f64::consts::PI / 6.0;
        assert!((trigamma(1.0) - pi2_6).abs() < 1e-14);
        assert!((trigamma(2.0) - (pi2_6 - 1.0)).abs() < 1e-14);
        assert!((trigamma(0.5) - core::f64::consts::PI * core::f64::consts::PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn trigamma_is_derivative_of_digamma() {
        for &x in &[0.3, 1.0, 2.7, 9.9, 10.1, 40.0] {
            let h = 1e-5;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((fd - trigamma(x)).abs() < 1e-7 * trigamma(x).max(1.0), "x={x}");
        }
    }
}
