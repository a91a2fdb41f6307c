//! Shared helpers for the integration tests: random small instances and an
//! independent welfare oracle that works straight from the serialized data.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use fare_alliance::model::{
    CategoryId, DiscountCategory, FareBounds, FareVector, Instance, InstanceParts, ObjectiveWeights, Operator,
    OperatorId, OperatorKind, PassengerType, Route, RouteId, TypeId, SCHEMA_VERSION,
};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load_fixture(name: &str) -> Instance<f64> {
    Instance::load(fixture(name)).expect("fixture loads")
}

/// Random instance with `1..=max_types` passenger types and exactly
/// `categories` discount categories, each holding at least one route.
pub fn random_instance<R: Rng>(rng: &mut R, max_types: usize, categories: usize) -> Instance<f64> {
    let tr = OperatorId(0);
    let md = OperatorId(1);
    let legs = |rng: &mut R, kind: u8| -> BTreeMap<OperatorId, f64> {
        match kind {
            0 => BTreeMap::from([(tr, rng.gen_range(1.0..25.0))]),
            1 => BTreeMap::from([(md, rng.gen_range(1.0..15.0))]),
            _ => BTreeMap::from([(tr, rng.gen_range(1.0..25.0)), (md, rng.gen_range(0.5..5.0))]),
        }
    };
    let mut routes = Vec::new();
    let mut cats: Vec<Vec<RouteId>> = vec![Vec::new(); categories];
    for a in 0..categories {
        let id = RouteId(routes.len() as u32);
        let kind = rng.gen_range(1..3);
        routes.push(Route { id, distance: legs(rng, kind), category: Some(CategoryId(a as u32)), label: None });
        cats[a].push(id);
    }
    for _ in 0..rng.gen_range(1..=3) {
        let id = RouteId(routes.len() as u32);
        let kind = rng.gen_range(0..3);
        let category = if kind != 0 && categories > 0 && rng.gen_bool(0.5) {
            let a = rng.gen_range(0..categories);
            cats[a].push(id);
            Some(CategoryId(a as u32))
        } else {
            None
        };
        routes.push(Route { id, distance: legs(rng, kind), category, label: None });
    }
    let n_types = rng.gen_range(1..=max_types);
    let passenger_types = (0..n_types)
        .map(|i| {
            let mut utilities = BTreeMap::new();
            while utilities.is_empty() {
                for r in &routes {
                    if rng.gen_bool(0.5) {
                        utilities.insert(r.id, rng.gen_range(-3.0..0.0));
                    }
                }
            }
            PassengerType {
                id: TypeId(i as u32),
                count: rng.gen_range(1.0..100.0),
                utilities,
                outside_utility: rng.gen_range(-2.0..0.0),
                alpha: rng.gen_range(-0.2..-0.01),
                drive_distance: rng.gen_range(1.0..30.0),
                group: Some(format!("G{}", i % 3)),
            }
        })
        .collect();
    let weights = ObjectiveWeights::new(rng.gen_range(0.0..1.0), rng.gen_range(0.1..1.0), rng.gen_range(0.0..1.0));
    Instance::from_parts(InstanceParts {
        schema_version: SCHEMA_VERSION.into(),
        name: Some("random".into()),
        operators: vec![Operator { id: tr, kind: OperatorKind::Transit }, Operator { id: md, kind: OperatorKind::Mod }],
        routes,
        categories: cats
            .into_iter()
            .enumerate()
            .map(|(a, routes)| DiscountCategory { id: CategoryId(a as u32), routes, label: None })
            .collect(),
        passenger_types,
        bounds: FareBounds::case_study(),
        weights,
    })
}

/// Welfare of the fare-setting formulation evaluated directly from the
/// instance data: route prices, then MNL shares, then the weighted sum.
/// `activations` is indexed by category position.
pub fn direct_welfare(inst: &Instance<f64>, fares: &FareVector<f64>, activations: &[bool]) -> f64 {
    let parts = inst.parts();
    let kind_of: HashMap<OperatorId, OperatorKind> = parts.operators.iter().map(|o| (o.id, o.kind)).collect();
    let cat_pos: HashMap<CategoryId, usize> = parts.categories.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
    let mut price: HashMap<RouteId, f64> = HashMap::new();
    for r in &parts.routes {
        let sigma: f64 = r
            .distance
            .iter()
            .map(|(op, miles)| {
                let k = kind_of[op];
                fares.base[k] + fares.markup[k] * miles
            })
            .sum();
        let x = r.category.map(|c| activations[cat_pos[&c]]).unwrap_or(false);
        price.insert(r.id, if x { (1.0 - fares.discount) * sigma } else { sigma });
    }
    let w = &parts.weights;
    let mut total = 0.0;
    for t in &parts.passenger_types {
        let v: Vec<(f64, f64)> = t.utilities.iter().map(|(r, u)| (*u + t.alpha * price[r], price[r])).collect();
        let denom = t.outside_utility.exp() + v.iter().map(|(vr, _)| vr.exp()).sum::<f64>();
        let s0 = t.outside_utility.exp() / denom;
        let pax = t.outside_utility + v.iter().map(|(vr, _)| vr).sum::<f64>();
        let rev: f64 = v.iter().map(|(vr, p)| p * vr.exp() / denom).sum();
        total += t.count * (w.pax * pax + w.rev * rev - w.vmt * t.drive_distance * s0);
    }
    total
}

/// Largest [`direct_welfare`] over all activation vectors.
pub fn direct_optimum(inst: &Instance<f64>, fares: &FareVector<f64>) -> f64 {
    let k = inst.num_categories();
    (0..1u64 << k)
        .map(|mask| {
            let x: Vec<bool> = (0..k).map(|j| mask >> j & 1 == 1).collect();
            direct_welfare(inst, fares, &x)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
