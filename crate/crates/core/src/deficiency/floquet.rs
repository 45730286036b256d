use serde::Serialize;

use crate::jacobi::PeriodPair;
use crate::Scalar;

/// `Δ_a(λ) = ½(−2 + (λ − (a+1)u_odd)(λ − (a+1)u_even))`.
pub fn floquet_discriminant<T: Scalar>(u: PeriodPair<T>, a: T, lambda: T) -> T {
    let s = a + T::one();
    let half = T::lit(0.5);
    half * ((lambda - s * u.u_odd) * (lambda - s * u.u_even) - T::lit(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FloquetResult<T> {
    pub u: PeriodPair<T>,
    pub a: T,
    pub lambda: T,
    pub discriminant: T,
}

impl<T: Scalar> FloquetResult<T> {
    pub fn new(u: PeriodPair<T>, a: T, lambda: T) -> Self {
        Self {
            u,
            a,
            lambda,
            discriminant: floquet_discriminant(u, a, lambda),
        }
    }

    /// `λ` lies strictly inside a band, `|Δ| ≤ 1 − margin`.
    pub fn inside_band(&self, margin: T) -> bool {
        self.discriminant.abs() <= T::one() - margin
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn discriminant_examples() {
        let u = PeriodPair::new(PI, 4.0 / PI);
        assert!((floquet_discriminant(u, -0.5, 0.0) + 0.5).abs() < 1e-15);
        assert!((floquet_discriminant(u, -2.0, 0.0) - 1.0).abs() < 1e-14);
        assert_eq!(
            floquet_discriminant(PeriodPair::new(2.0, 2.0), -1.0, 0.0),
            -1.0
        );
        assert!(FloquetResult::new(u, -0.5, 0.0).inside_band(1e-6));
        assert!(!FloquetResult::new(u, -1.0, 0.0).inside_band(1e-6));
    }

    proptest! {
        #[test]
        fn closed_form_at_zero(x in 0.1f64..10.0, a in -3.0f64..1.0) {
            let u = PeriodPair::new(x, 4.0 / x);
            let want = 2.0 * (a + 1.0) * (a + 1.0) - 1.0;
            prop_assert!((floquet_discriminant(u, a, 0.0) - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }
}
