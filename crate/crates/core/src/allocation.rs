//! Revenue allocation between the two operators of an alliance.
//!
//! When allied revenue exceeds the combined non-cooperative revenue the
//! surplus is split evenly (the Nash bargaining split with the
//! non-cooperative revenues as disagreement point). Otherwise the MOD
//! operator keeps its non-cooperative revenue and the transit agency absorbs
//! the shortfall. Generic over any ordered numeric type, including rationals.

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::model::PerOperator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult<T> {
    /// Non-cooperative revenue per operator.
    pub f_nc: PerOperator<T>,
    pub f_allied: T,
    /// Allied revenue minus the summed non-cooperative revenues.
    pub delta: T,
    /// Payment to each operator.
    pub phi: PerOperator<T>,
}

pub fn allocate<T: Num + PartialOrd + Copy>(f_nc_tr: T, f_nc_mod: T, f_allied: T) -> AllocationResult<T> {
    let two = T::one() + T::one();
    let delta = f_allied - (f_nc_tr + f_nc_mod);
    let phi = if delta >= T::zero() {
        PerOperator::new(f_nc_tr + delta / two, f_nc_mod + delta / two)
    } else {
        PerOperator::new(f_allied - f_nc_mod, f_nc_mod)
    };
    AllocationResult { f_nc: PerOperator::new(f_nc_tr, f_nc_mod), f_allied, delta, phi }
}

/// Nash product `(a_TR - d_TR)(a_MOD - d_MOD)`.
pub fn nash_product<T: Num + Copy>(payment: &PerOperator<T>, disagreement: &PerOperator<T>) -> T {
    (payment.transit - disagreement.transit) * (payment.mobility - disagreement.mobility)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn surplus_branch() {
        let r = allocate(100.0, 50.0, 170.0);
        assert_eq!(r.delta, 20.0);
        assert_eq!((r.phi.transit, r.phi.mobility), (110.0, 60.0));
    }

    #[test]
    fn shortfall_branch() {
        let r = allocate(100.0, 50.0, 140.0);
        assert_eq!(r.delta, -10.0);
        assert_eq!((r.phi.transit, r.phi.mobility), (90.0, 50.0));
    }

    #[test]
    fn zero_inputs() {
        let r = allocate(0.0, 0.0, 0.0);
        assert_eq!(r.phi, PerOperator::new(0.0, 0.0));
        assert_eq!(r.delta, 0.0);
    }

    #[test]
    fn exact_with_rationals() {
        let q = |n, d| Rational64::new(n, d);
        let r = allocate(q(1, 3), q(1, 7), q(1, 1));
        assert_eq!(r.phi.transit + r.phi.mobility, q(1, 1));
        assert_eq!(r.phi.mobility - r.f_nc.mobility, r.phi.transit - r.f_nc.transit);
    }
}
