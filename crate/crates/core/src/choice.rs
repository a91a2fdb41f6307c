//! Closed-form evaluation of route prices, MNL market shares, attractiveness
//! ratios, welfare and per-operator revenue for a fixed fare vector and
//! discount activation vector.
//!
//! Route and category arguments are positions into [`Instance::routes`] and
//! [`Instance::categories`]; activation vectors are indexed the same way.

use serde::{Deserialize, Serialize};

use crate::model::{FareVector, Instance, ObjectiveWeights, OperatorKind};
use crate::scalar::Scalar;

/// Non-discounted route price: sum over serving operators of base fare plus
/// distance times markup.
pub fn base_price<T: Scalar>(instance: &Instance<T>, route: usize, fares: &FareVector<T>) -> T {
    instance.index().route_legs[route]
        .iter()
        .map(|&(kind, miles)| fares.base[kind] + miles * fares.markup[kind])
        .sum()
}

/// Price multiplier `1 - Lambda * x_a` of a route, `1` for routes outside every category.
pub fn discount_factor<T: Scalar>(
    instance: &Instance<T>,
    route: usize,
    fares: &FareVector<T>,
    activations: &[bool],
) -> T {
    match instance.index().route_category[route] {
        Some(a) if activations[a] => T::one() - fares.discount,
        _ => T::one(),
    }
}

pub fn customer_price<T: Scalar>(
    instance: &Instance<T>,
    route: usize,
    fares: &FareVector<T>,
    activations: &[bool],
) -> T {
    discount_factor(instance, route, fares, activations) * base_price(instance, route, fares)
}

/// Customer price of every route, by route position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceTable<T> {
    pub price: Vec<T>,
}

impl<T: Scalar> PriceTable<T> {
    pub fn compute(instance: &Instance<T>, fares: &FareVector<T>, activations: &[bool]) -> Self {
        let price = (0..instance.routes().len())
            .map(|r| customer_price(instance, r, fares, activations))
            .collect();
        PriceTable { price }
    }
}

/// Market shares per passenger type. `route[i]` is aligned with the type's
/// route list in the instance index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShareTable<T> {
    pub route: Vec<Vec<T>>,
    pub outside: Vec<T>,
}

impl<T: Scalar> ShareTable<T> {
    pub fn compute(instance: &Instance<T>, prices: &PriceTable<T>) -> Self {
        let n = instance.passenger_types().len();
        let mut route = Vec::with_capacity(n);
        let mut outside = Vec::with_capacity(n);
        for i in 0..n {
            let (s, s0) = type_shares(instance, i, prices);
            route.push(s);
            outside.push(s0);
        }
        ShareTable { route, outside }
    }
}

/// MNL probabilities for systematic utilities `v` of the in-system options
/// and `v0` of the outside option. Utilities are shifted by their maximum
/// before exponentiation.
pub fn mnl<T: Scalar>(v: &[T], v0: T) -> (Vec<T>, T) {
    let shift = v.iter().fold(v0, |m, &x| m.max(x));
    let e0 = (v0 - shift).exp();
    let e: Vec<T> = v.iter().map(|&x| (x - shift).exp()).collect();
    let total = e0 + e.iter().copied().sum::<T>();
    (e.into_iter().map(|x| x / total).collect(), e0 / total)
}

/// In-system and outside shares of passenger type `i` under `prices`.
pub fn type_shares<T: Scalar>(instance: &Instance<T>, i: usize, prices: &PriceTable<T>) -> (Vec<T>, T) {
    let idx = instance.index();
    let ptype = &instance.passenger_types()[i];
    let v: Vec<T> = idx.type_routes[i]
        .iter()
        .zip(&idx.type_utilities[i])
        .map(|(&r, &u)| u + ptype.alpha * prices.price[r])
        .collect();
    mnl(&v, ptype.outside_utility)
}

/// Attractiveness ratio `exp(u_i0) / exp(u_ir + alpha_i p_r)` for route
/// position `route`, priced with or without the discount.
///
/// # Panics
/// If `route` is not in the type's choice set.
pub fn gamma<T: Scalar>(
    instance: &Instance<T>,
    i: usize,
    route: usize,
    fares: &FareVector<T>,
    discount_applied: bool,
) -> T {
    let idx = instance.index();
    let k = idx.type_routes[i]
        .iter()
        .position(|&r| r == route)
        .expect("route in choice set");
    let ptype = &instance.passenger_types()[i];
    let mut price = base_price(instance, route, fares);
    if discount_applied && idx.route_category[route].is_some() {
        price = price * (T::one() - fares.discount);
    }
    (ptype.outside_utility - (idx.type_utilities[i][k] + ptype.alpha * price)).exp()
}

/// Unweighted objective terms together with the weighted total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelfareBreakdown<T> {
    pub pax_term: T,
    pub rev_term: T,
    pub vmt_term: T,
    pub total: T,
}

impl<T: Scalar> WelfareBreakdown<T> {
    pub fn from_terms(pax: T, rev: T, vmt: T, weights: &ObjectiveWeights<T>) -> Self {
        WelfareBreakdown {
            pax_term: pax,
            rev_term: rev,
            vmt_term: vmt,
            total: weights.pax * pax + weights.rev * rev - weights.vmt * vmt,
        }
    }
}

/// `(pax, rev, vmt)` contribution of one passenger type, already multiplied by N_i.
pub fn type_terms<T: Scalar>(instance: &Instance<T>, i: usize, prices: &PriceTable<T>) -> (T, T, T) {
    let idx = instance.index();
    let ptype = &instance.passenger_types()[i];
    let (s, s0) = type_shares(instance, i, prices);
    let mut pax = ptype.outside_utility;
    let mut rev = T::zero();
    for ((&r, &u), &share) in idx.type_routes[i].iter().zip(&idx.type_utilities[i]).zip(&s) {
        let p = prices.price[r];
        pax = pax + u + ptype.alpha * p;
        rev = rev + p * share;
    }
    let n = ptype.count;
    (n * pax, n * rev, n * ptype.drive_distance * s0)
}

/// Welfare of the instance at `fares` with discounts switched on per `activations`.
pub fn welfare<T: Scalar>(instance: &Instance<T>, fares: &FareVector<T>, activations: &[bool]) -> WelfareBreakdown<T> {
    let prices = PriceTable::compute(instance, fares, activations);
    welfare_at_prices(instance, &prices)
}

pub fn welfare_at_prices<T: Scalar>(instance: &Instance<T>, prices: &PriceTable<T>) -> WelfareBreakdown<T> {
    let (mut pax, mut rev, mut vmt) = (T::zero(), T::zero(), T::zero());
    for i in 0..instance.passenger_types().len() {
        let (a, b, c) = type_terms(instance, i, prices);
        pax = pax + a;
        rev = rev + b;
        vmt = vmt + c;
    }
    WelfareBreakdown::from_terms(pax, rev, vmt, instance.weights())
}

/// Revenue collected by operator `kind`: its own fare component on every
/// route it serves, scaled by the route's discount factor.
pub fn operator_revenue<T: Scalar>(
    instance: &Instance<T>,
    fares: &FareVector<T>,
    activations: &[bool],
    kind: OperatorKind,
) -> T {
    let idx = instance.index();
    let prices = PriceTable::compute(instance, fares, activations);
    let mut total = T::zero();
    for (i, ptype) in instance.passenger_types().iter().enumerate() {
        let (s, _) = type_shares(instance, i, &prices);
        let mut acc = T::zero();
        for (&r, &share) in idx.type_routes[i].iter().zip(&s) {
            for &(k, miles) in &idx.route_legs[r] {
                if k == kind {
                    let component = fares.base[k] + miles * fares.markup[k];
                    acc = acc + share * discount_factor(instance, r, fares, activations) * component;
                }
            }
        }
        total = total + ptype.count * acc;
    }
    total
}
