//! Alliance problem data model: operators, routes, discount categories,
//! passenger types, fare bounds and objective weights, plus validation and
//! the versioned JSON instance format.
//!
//! An [`Instance`] is immutable once built. Construction derives a
//! cross-reference index (route positions, the per-category passenger sets,
//! per-type route lists) that every evaluator relies on.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::ops::{Index, IndexMut};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ModelError;
use crate::scalar::Scalar;

/// Current instance schema version.
pub const SCHEMA_VERSION: &str = "1";

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_newtype!(
    /// Operator identifier.
    OperatorId
);
id_newtype!(
    /// Route identifier.
    RouteId
);
id_newtype!(
    /// Discount activation category identifier.
    CategoryId
);
id_newtype!(
    /// Passenger type identifier.
    TypeId
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Transit,
    Mod,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 2] = [OperatorKind::Transit, OperatorKind::Mod];

    pub fn other(self) -> OperatorKind {
        match self {
            OperatorKind::Transit => OperatorKind::Mod,
            OperatorKind::Mod => OperatorKind::Transit,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OperatorKind::Transit => "TR",
            OperatorKind::Mod => "MOD",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Operator {
    pub id: OperatorId,
    pub kind: OperatorKind,
}

/// A value held per operator, indexed by [`OperatorKind`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerOperator<T> {
    pub transit: T,
    #[serde(rename = "mod")]
    pub mobility: T,
}

impl<T> PerOperator<T> {
    pub fn new(transit: T, mobility: T) -> Self {
        PerOperator { transit, mobility }
    }
}

impl<T> Index<OperatorKind> for PerOperator<T> {
    type Output = T;
    fn index(&self, kind: OperatorKind) -> &T {
        match kind {
            OperatorKind::Transit => &self.transit,
            OperatorKind::Mod => &self.mobility,
        }
    }
}

impl<T> IndexMut<OperatorKind> for PerOperator<T> {
    fn index_mut(&mut self, kind: OperatorKind) -> &mut T {
        match kind {
            OperatorKind::Transit => &mut self.transit,
            OperatorKind::Mod => &mut self.mobility,
        }
    }
}

/// The five first-stage fare dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FareAxis {
    BaseTransit,
    MarkupTransit,
    BaseMod,
    MarkupMod,
    Discount,
}

impl FareAxis {
    /// Declared axis order of the fare vector.
    pub const ALL: [FareAxis; 5] = [
        FareAxis::BaseTransit,
        FareAxis::MarkupTransit,
        FareAxis::BaseMod,
        FareAxis::MarkupMod,
        FareAxis::Discount,
    ];

    pub fn base(kind: OperatorKind) -> FareAxis {
        match kind {
            OperatorKind::Transit => FareAxis::BaseTransit,
            OperatorKind::Mod => FareAxis::BaseMod,
        }
    }

    pub fn markup(kind: OperatorKind) -> FareAxis {
        match kind {
            OperatorKind::Transit => FareAxis::MarkupTransit,
            OperatorKind::Mod => FareAxis::MarkupMod,
        }
    }

    pub fn is_discount(self) -> bool {
        self == FareAxis::Discount
    }

    pub fn position(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            FareAxis::BaseTransit => "beta0_TR",
            FareAxis::MarkupTransit => "betaDelta_TR",
            FareAxis::BaseMod => "beta0_MOD",
            FareAxis::MarkupMod => "betaDelta_MOD",
            FareAxis::Discount => "Lambda",
        }
    }
}

/// Box constraints on the first-stage decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FareBounds<T> {
    #[serde(rename = "beta0_min")]
    pub base_min: T,
    #[serde(rename = "beta0_max")]
    pub base_max: T,
    #[serde(rename = "betaDelta_min")]
    pub markup_min: T,
    #[serde(rename = "betaDelta_max")]
    pub markup_max: T,
    #[serde(rename = "Lambda_min")]
    pub discount_min: T,
    #[serde(rename = "Lambda_max")]
    pub discount_max: T,
}

impl<T: Scalar> FareBounds<T> {
    /// Bounds used by the case study: $10 base fares, $5/mile markups, 50% discount.
    pub fn case_study() -> Self {
        FareBounds {
            base_min: T::zero(),
            base_max: T::lit(10.0),
            markup_min: T::zero(),
            markup_max: T::lit(5.0),
            discount_min: T::zero(),
            discount_max: T::lit(0.5),
        }
    }

    pub fn range(&self, axis: FareAxis) -> (T, T) {
        match axis {
            FareAxis::BaseTransit | FareAxis::BaseMod => (self.base_min, self.base_max),
            FareAxis::MarkupTransit | FareAxis::MarkupMod => (self.markup_min, self.markup_max),
            FareAxis::Discount => (self.discount_min, self.discount_max),
        }
    }

    pub fn contains(&self, fares: &FareVector<T>) -> bool {
        FareAxis::ALL.iter().all(|&axis| {
            let (lo, hi) = self.range(axis);
            let v = fares.get(axis);
            v >= lo && v <= hi
        })
    }

    /// Projects every coordinate onto its interval.
    pub fn clamp(&self, fares: &FareVector<T>) -> FareVector<T> {
        let mut out = *fares;
        for axis in FareAxis::ALL {
            let (lo, hi) = self.range(axis);
            out.set(axis, fares.get(axis).max(lo).min(hi));
        }
        out
    }

    /// The all-minimum corner.
    pub fn lower_corner(&self) -> FareVector<T> {
        FareVector {
            base: PerOperator::new(self.base_min, self.base_min),
            markup: PerOperator::new(self.markup_min, self.markup_min),
            discount: self.discount_min,
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> FareVector<T> {
        let mut out = self.lower_corner();
        for axis in FareAxis::ALL {
            let (lo, hi) = self.range(axis);
            let u = T::lit(rng.gen::<f64>());
            out.set(axis, lo + (hi - lo) * u);
        }
        out
    }

    /// Maps a point of the unit hypercube onto the box.
    pub fn from_unit(&self, unit: &[f64; 5]) -> FareVector<T> {
        let mut out = self.lower_corner();
        for axis in FareAxis::ALL {
            let (lo, hi) = self.range(axis);
            let u = T::lit(unit[axis.position()].clamp(0.0, 1.0));
            out.set(axis, lo + (hi - lo) * u);
        }
        out
    }

    /// Inverse of [`FareBounds::from_unit`]; degenerate axes map to 0.
    pub fn to_unit(&self, fares: &FareVector<T>) -> [f64; 5] {
        let mut out = [0.0; 5];
        for axis in FareAxis::ALL {
            let (lo, hi) = self.range(axis);
            let width = (hi - lo).as_f64();
            out[axis.position()] = if width > 0.0 {
                ((fares.get(axis) - lo).as_f64() / width).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
        out
    }
}

/// First-stage decision: per-operator base fares and markups plus the
/// alliance-wide discount multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FareVector<T> {
    #[serde(rename = "beta0")]
    pub base: PerOperator<T>,
    #[serde(rename = "betaDelta")]
    pub markup: PerOperator<T>,
    #[serde(rename = "Lambda")]
    pub discount: T,
}

impl<T: Scalar> FareVector<T> {
    pub fn zero() -> Self {
        FareVector {
            base: PerOperator::new(T::zero(), T::zero()),
            markup: PerOperator::new(T::zero(), T::zero()),
            discount: T::zero(),
        }
    }

    pub fn get(&self, axis: FareAxis) -> T {
        match axis {
            FareAxis::BaseTransit => self.base.transit,
            FareAxis::MarkupTransit => self.markup.transit,
            FareAxis::BaseMod => self.base.mobility,
            FareAxis::MarkupMod => self.markup.mobility,
            FareAxis::Discount => self.discount,
        }
    }

    pub fn set(&mut self, axis: FareAxis, value: T) {
        match axis {
            FareAxis::BaseTransit => self.base.transit = value,
            FareAxis::MarkupTransit => self.markup.transit = value,
            FareAxis::BaseMod => self.base.mobility = value,
            FareAxis::MarkupMod => self.markup.mobility = value,
            FareAxis::Discount => self.discount = value,
        }
    }

    pub fn with(mut self, axis: FareAxis, value: T) -> Self {
        self.set(axis, value);
        self
    }

    pub fn to_array(&self) -> [T; 5] {
        FareAxis::ALL.map(|axis| self.get(axis))
    }

    pub fn from_array(values: [T; 5]) -> Self {
        let mut out = Self::zero();
        for axis in FareAxis::ALL {
            out.set(axis, values[axis.position()]);
        }
        out
    }

    /// Convex combination `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &Self, t: T) -> Self {
        let a = self.to_array();
        let b = other.to_array();
        let mut out = [T::zero(); 5];
        for k in 0..5 {
            out[k] = if t == T::zero() {
                a[k]
            } else if t == T::one() {
                b[k]
            } else {
                a[k] + (b[k] - a[k]) * t
            };
        }
        Self::from_array(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route<T> {
    pub id: RouteId,
    /// Miles travelled with each serving operator; the key set is the set of
    /// operators serving the route.
    #[serde(rename = "Delta")]
    pub distance: BTreeMap<OperatorId, T>,
    /// Discount category; present iff the route is discount eligible.
    #[serde(default)]
    pub category: Option<CategoryId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl<T> Route<T> {
    pub fn operators_served(&self) -> impl Iterator<Item = OperatorId> + '_ {
        self.distance.keys().copied()
    }

    pub fn is_discount_eligible(&self) -> bool {
        self.category.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscountCategory {
    pub id: CategoryId,
    pub routes: Vec<RouteId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassengerType<T> {
    pub id: TypeId,
    /// Number of passengers of this type.
    #[serde(rename = "N")]
    pub count: T,
    /// Non-monetary utility of each route in the choice set.
    #[serde(rename = "u")]
    pub utilities: BTreeMap<RouteId, T>,
    /// Utility of the outside (driving) option.
    #[serde(rename = "u0")]
    pub outside_utility: T,
    /// Price sensitivity, non-positive.
    pub alpha: T,
    /// Miles driven when the outside option is chosen.
    #[serde(rename = "Delta0")]
    pub drive_distance: T,
    /// Free-form grouping label (e.g. origin town) used by reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights<T> {
    #[serde(rename = "mu_pax")]
    pub pax: T,
    #[serde(rename = "mu_rev")]
    pub rev: T,
    #[serde(rename = "mu_vmt")]
    pub vmt: T,
}

impl<T: Scalar> ObjectiveWeights<T> {
    pub fn new(pax: T, rev: T, vmt: T) -> Self {
        ObjectiveWeights { pax, rev, vmt }
    }

    pub fn revenue_only() -> Self {
        Self::new(T::zero(), T::one(), T::zero())
    }
}

/// Serialized form of an [`Instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceParts<T> {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub operators: Vec<Operator>,
    pub routes: Vec<Route<T>>,
    pub categories: Vec<DiscountCategory>,
    pub passenger_types: Vec<PassengerType<T>>,
    pub bounds: FareBounds<T>,
    pub weights: ObjectiveWeights<T>,
}

/// Cross-reference index derived from the instance data. Unresolvable
/// references are skipped here and reported by [`Instance::validate`].
#[derive(Clone, Debug)]
pub struct InstanceIndex<T> {
    pub route_position: HashMap<RouteId, usize>,
    pub category_position: HashMap<CategoryId, usize>,
    /// `(operator kind, miles)` per route.
    pub route_legs: Vec<Vec<(OperatorKind, T)>>,
    /// Category position of each route, `None` for non-eligible routes.
    pub route_category: Vec<Option<usize>>,
    /// Route positions available to each passenger type.
    pub type_routes: Vec<Vec<usize>>,
    /// Non-monetary utilities aligned with `type_routes`.
    pub type_utilities: Vec<Vec<T>>,
    /// Passenger types touching each category.
    pub category_types: Vec<Vec<usize>>,
    /// Categories touched by each passenger type, ascending.
    pub type_categories: Vec<Vec<usize>>,
}

impl<T: Scalar> InstanceIndex<T> {
    fn build(parts: &InstanceParts<T>) -> Self {
        let kind_of: HashMap<OperatorId, OperatorKind> =
            parts.operators.iter().map(|op| (op.id, op.kind)).collect();
        let mut route_position = HashMap::new();
        for (pos, route) in parts.routes.iter().enumerate() {
            route_position.entry(route.id).or_insert(pos);
        }
        let mut category_position = HashMap::new();
        for (pos, cat) in parts.categories.iter().enumerate() {
            category_position.entry(cat.id).or_insert(pos);
        }
        let route_legs = parts
            .routes
            .iter()
            .map(|route| {
                route
                    .distance
                    .iter()
                    .filter_map(|(op, &miles)| kind_of.get(op).map(|&kind| (kind, miles)))
                    .collect()
            })
            .collect();
        let route_category: Vec<Option<usize>> = parts
            .routes
            .iter()
            .map(|route| route.category.and_then(|c| category_position.get(&c).copied()))
            .collect();

        let mut type_routes = Vec::with_capacity(parts.passenger_types.len());
        let mut type_utilities = Vec::with_capacity(parts.passenger_types.len());
        let mut type_categories = Vec::with_capacity(parts.passenger_types.len());
        let mut category_types = vec![Vec::new(); parts.categories.len()];
        for (i, ptype) in parts.passenger_types.iter().enumerate() {
            let mut routes = Vec::with_capacity(ptype.utilities.len());
            let mut utils = Vec::with_capacity(ptype.utilities.len());
            let mut cats = BTreeSet::new();
            for (rid, &u) in &ptype.utilities {
                if let Some(&pos) = route_position.get(rid) {
                    routes.push(pos);
                    utils.push(u);
                    if let Some(c) = route_category[pos] {
                        cats.insert(c);
                    }
                }
            }
            for &c in &cats {
                category_types[c].push(i);
            }
            type_routes.push(routes);
            type_utilities.push(utils);
            type_categories.push(cats.into_iter().collect());
        }
        InstanceIndex {
            route_position,
            category_position,
            route_legs,
            route_category,
            type_routes,
            type_utilities,
            category_types,
            type_categories,
        }
    }
}

/// One broken invariant found by [`Instance::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.entity, self.rule, self.detail)
    }
}

/// The full alliance fare-design problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(
    from = "InstanceParts<T>",
    into = "InstanceParts<T>",
    bound = "T: Scalar"
)]
pub struct Instance<T: Scalar = f64> {
    parts: InstanceParts<T>,
    index: InstanceIndex<T>,
}

impl<T: Scalar> From<InstanceParts<T>> for Instance<T> {
    fn from(parts: InstanceParts<T>) -> Self {
        Instance::from_parts(parts)
    }
}

impl<T: Scalar> From<Instance<T>> for InstanceParts<T> {
    fn from(instance: Instance<T>) -> Self {
        instance.parts
    }
}

impl<T: Scalar> PartialEq for Instance<T> {
    fn eq(&self, other: &Self) -> bool {
        self.parts == other.parts
    }
}

impl<T: Scalar> Instance<T> {
    pub fn from_parts(parts: InstanceParts<T>) -> Self {
        let index = InstanceIndex::build(&parts);
        Instance { parts, index }
    }

    pub fn parts(&self) -> &InstanceParts<T> {
        &self.parts
    }

    pub fn into_parts(self) -> InstanceParts<T> {
        self.parts
    }

    pub fn index(&self) -> &InstanceIndex<T> {
        &self.index
    }

    pub fn name(&self) -> Option<&str> {
        self.parts.name.as_deref()
    }

    pub fn operators(&self) -> &[Operator] {
        &self.parts.operators
    }

    pub fn routes(&self) -> &[Route<T>] {
        &self.parts.routes
    }

    pub fn categories(&self) -> &[DiscountCategory] {
        &self.parts.categories
    }

    pub fn passenger_types(&self) -> &[PassengerType<T>] {
        &self.parts.passenger_types
    }

    pub fn bounds(&self) -> &FareBounds<T> {
        &self.parts.bounds
    }

    pub fn weights(&self) -> &ObjectiveWeights<T> {
        &self.parts.weights
    }

    pub fn num_categories(&self) -> usize {
        self.parts.categories.len()
    }

    pub fn operator_id(&self, kind: OperatorKind) -> Option<OperatorId> {
        self.parts.operators.iter().find(|op| op.kind == kind).map(|op| op.id)
    }

    /// Copy of this instance with different objective weights.
    pub fn with_weights(&self, weights: ObjectiveWeights<T>) -> Self {
        let mut parts = self.parts.clone();
        parts.weights = weights;
        Instance { parts, index: self.index.clone() }
    }

    /// Copy of this instance with different fare bounds.
    pub fn with_bounds(&self, bounds: FareBounds<T>) -> Self {
        let mut parts = self.parts.clone();
        parts.bounds = bounds;
        Instance { parts, index: self.index.clone() }
    }

    /// Stable content hash (SHA-256 over the canonical JSON form).
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.parts).expect("instance serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Checks every structural invariant; an empty list means the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |entity: String, rule: &str, detail: String| {
            out.push(Violation { entity, rule: rule.to_string(), detail });
        };
        let p = &self.parts;

        if p.schema_version != SCHEMA_VERSION {
            push(
                "instance".into(),
                "schema version",
                format!("expected {SCHEMA_VERSION}, found {}", p.schema_version),
            );
        }

        // operators
        if p.operators.len() != 2 {
            push(
                "operators".into(),
                "operator count",
                format!("expected 2 operators, found {}", p.operators.len()),
            );
        }
        for kind in OperatorKind::ALL {
            let n = p.operators.iter().filter(|op| op.kind == kind).count();
            if n != 1 {
                push(
                    "operators".into(),
                    "operator kinds",
                    format!("expected one {} operator, found {n}", kind.label()),
                );
            }
        }
        let mut op_ids = BTreeSet::new();
        for op in &p.operators {
            if !op_ids.insert(op.id) {
                push(format!("operator {}", op.id), "duplicate id", "operator id repeated".into());
            }
        }

        // bounds
        let b = &p.bounds;
        let zero = T::zero();
        for (name, lo, hi) in [
            ("base fare", b.base_min, b.base_max),
            ("markup", b.markup_min, b.markup_max),
            ("discount", b.discount_min, b.discount_max),
        ] {
            if !(lo.is_finite() && hi.is_finite() && zero <= lo && lo <= hi) {
                push("bounds".into(), "bounds order", format!("{name}: need 0 <= {lo} <= {hi}"));
            }
        }
        if b.discount_max > T::one() {
            push("bounds".into(), "discount range", format!("Lambda_max {} exceeds 1", b.discount_max));
        }

        // weights
        let w = &p.weights;
        if !(w.pax >= zero && w.rev >= zero && w.vmt >= zero) {
            push("weights".into(), "weights sign", "objective weights must be non-negative".into());
        }
        if w.pax == zero && w.rev == zero && w.vmt == zero {
            push("weights".into(), "weights nonzero", "at least one weight must be positive".into());
        }

        // routes
        let mut route_ids = BTreeSet::new();
        for route in &p.routes {
            let entity = format!("route {}", route.id);
            if !route_ids.insert(route.id) {
                push(entity.clone(), "duplicate id", "route id repeated".into());
            }
            if route.distance.is_empty() {
                push(entity.clone(), "served by operator", "route has no serving operator".into());
            }
            for (op, &miles) in &route.distance {
                if !op_ids.contains(op) {
                    push(entity.clone(), "unknown operator", format!("operator {op} does not exist"));
                }
                if !(miles.is_finite() && miles >= zero) {
                    push(entity.clone(), "distance sign", format!("distance {miles} for operator {op}"));
                }
            }
            if let Some(c) = route.category {
                if !self.index.category_position.contains_key(&c) {
                    push(entity.clone(), "unknown category", format!("category {c} does not exist"));
                }
            }
        }

        // categories: partition of the discount-eligible routes
        let mut cat_ids = BTreeSet::new();
        let mut owner: HashMap<RouteId, CategoryId> = HashMap::new();
        for cat in &p.categories {
            let entity = format!("category {}", cat.id);
            if !cat_ids.insert(cat.id) {
                push(entity.clone(), "duplicate id", "category id repeated".into());
            }
            for rid in &cat.routes {
                match self.index.route_position.get(rid) {
                    None => push(entity.clone(), "unknown route", format!("route {rid} does not exist")),
                    Some(&pos) => {
                        if p.routes[pos].category != Some(cat.id) {
                            push(
                                format!("route {rid}"),
                                "category membership",
                                format!("listed in category {} but route declares {:?}", cat.id, p.routes[pos].category.map(|c| c.0)),
                            );
                        }
                    }
                }
                if let Some(prev) = owner.insert(*rid, cat.id) {
                    if prev != cat.id {
                        push(
                            format!("route {rid}"),
                            "category partition",
                            format!("assigned to categories {prev} and {}", cat.id),
                        );
                    }
                }
            }
        }
        for route in &p.routes {
            if let Some(c) = route.category {
                if owner.get(&route.id) != Some(&c) {
                    push(
                        format!("route {}", route.id),
                        "category membership",
                        format!("declares category {c} but is not listed by it"),
                    );
                }
            }
        }

        // passenger types
        let mut type_ids = BTreeSet::new();
        for ptype in &p.passenger_types {
            let entity = format!("passenger type {}", ptype.id);
            if !type_ids.insert(ptype.id) {
                push(entity.clone(), "duplicate id", "passenger type id repeated".into());
            }
            if !(ptype.count.is_finite() && ptype.count > zero) {
                push(entity.clone(), "passenger count", format!("N = {} must be positive", ptype.count));
            }
            if ptype.utilities.is_empty() {
                push(entity.clone(), "empty choice set", "no routes available".into());
            }
            for (rid, u) in &ptype.utilities {
                if !self.index.route_position.contains_key(rid) {
                    push(entity.clone(), "unknown route", format!("route {rid} does not exist"));
                }
                if !u.is_finite() {
                    push(entity.clone(), "non-finite value", format!("u for route {rid} is {u}"));
                }
            }
            if !(ptype.alpha <= zero) {
                push(entity.clone(), "price_sensitivity sign", format!("alpha = {} must be <= 0", ptype.alpha));
            }
            if !(ptype.drive_distance.is_finite() && ptype.drive_distance >= zero) {
                push(entity.clone(), "drive distance sign", format!("Delta0 = {}", ptype.drive_distance));
            }
            if !ptype.outside_utility.is_finite() {
                push(entity.clone(), "non-finite value", format!("u0 = {}", ptype.outside_utility));
            }
        }
        out
    }

    /// Parses an instance from JSON text. Returns the instance and the
    /// paths of ignored unknown fields.
    pub fn from_json_str(text: &str) -> Result<(Self, Vec<String>), ModelError> {
        let mut ignored = Vec::new();
        let mut de = serde_json::Deserializer::from_str(text);
        let parts: InstanceParts<T> =
            serde_ignored::deserialize(&mut de, |path| ignored.push(path.to_string()))
                .map_err(ModelError::from_json)?;
        de.end().map_err(ModelError::from_json)?;
        if parts.schema_version != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion {
                found: parts.schema_version,
                expected: SCHEMA_VERSION.to_string(),
            });
        }
        for path in &ignored {
            log::warn!("ignoring unknown instance field `{path}`");
        }
        Ok((Instance::from_parts(parts), ignored))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.parts).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_json_str(&text)?.0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        let mut text = self.to_json_string();
        text.push('\n');
        fs::write(path, text).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two operators, one transit-only route, one MOD-only route in category 0,
    /// one hybrid route in category 1, two passenger types.
    pub(crate) fn sample_parts() -> InstanceParts<f64> {
        let tr = OperatorId(0);
        let md = OperatorId(1);
        InstanceParts {
            schema_version: SCHEMA_VERSION.into(),
            name: Some("sample".into()),
            operators: vec![
                Operator { id: tr, kind: OperatorKind::Transit },
                Operator { id: md, kind: OperatorKind::Mod },
            ],
            routes: vec![
                Route { id: RouteId(0), distance: BTreeMap::from([(tr, 20.0)]), category: None, label: None },
                Route { id: RouteId(1), distance: BTreeMap::from([(md, 10.0)]), category: Some(CategoryId(0)), label: None },
                Route {
                    id: RouteId(2),
                    distance: BTreeMap::from([(tr, 20.0), (md, 3.0)]),
                    category: Some(CategoryId(1)),
                    label: None,
                },
            ],
            categories: vec![
                DiscountCategory { id: CategoryId(0), routes: vec![RouteId(1)], label: None },
                DiscountCategory { id: CategoryId(1), routes: vec![RouteId(2)], label: None },
            ],
            passenger_types: vec![
                PassengerType {
                    id: TypeId(0),
                    count: 100.0,
                    utilities: BTreeMap::from([(RouteId(0), -1.2), (RouteId(1), -0.9), (RouteId(2), -1.0)]),
                    outside_utility: -0.5,
                    alpha: -0.05,
                    drive_distance: 21.0,
                    group: Some("A".into()),
                },
                PassengerType {
                    id: TypeId(1),
                    count: 40.0,
                    utilities: BTreeMap::from([(RouteId(1), -0.8)]),
                    outside_utility: -0.7,
                    alpha: -0.1,
                    drive_distance: 9.0,
                    group: Some("B".into()),
                },
            ],
            bounds: FareBounds::case_study(),
            weights: ObjectiveWeights::new(1.0, 1.0, 0.0),
        }
    }

    #[test]
    fn well_formed_instance_has_no_violations() {
        let inst = Instance::from_parts(sample_parts());
        assert_eq!(inst.validate(), vec![]);
    }

    #[test]
    fn route_in_two_categories_violates_partition() {
        let mut parts = sample_parts();
        parts.categories[1].routes.push(RouteId(1));
        let v = Instance::from_parts(parts).validate();
        assert!(v.iter().any(|v| v.rule == "category partition"), "{v:?}");
    }

    #[test]
    fn positive_alpha_is_flagged() {
        let mut parts = sample_parts();
        parts.passenger_types[0].alpha = 0.1;
        let v = Instance::from_parts(parts).validate();
        assert!(v.iter().any(|v| v.rule == "price_sensitivity sign" && v.entity == "passenger type 0"));
    }

    #[test]
    fn other_rules_are_reported() {
        let mut parts = sample_parts();
        parts.operators[1].kind = OperatorKind::Transit;
        parts.bounds.discount_max = 1.5;
        parts.weights = ObjectiveWeights::new(0.0, 0.0, 0.0);
        parts.passenger_types[1].count = 0.0;
        parts.passenger_types[1].utilities.insert(RouteId(9), 0.0);
        parts.routes[0].category = Some(CategoryId(0));
        let rules: BTreeSet<String> =
            Instance::from_parts(parts).validate().into_iter().map(|v| v.rule).collect();
        for rule in [
            "operator kinds",
            "discount range",
            "weights nonzero",
            "passenger count",
            "unknown route",
            "category membership",
        ] {
            assert!(rules.contains(rule), "missing {rule} in {rules:?}");
        }
    }

    #[test]
    fn index_derives_category_passenger_sets() {
        let inst = Instance::from_parts(sample_parts());
        let idx = inst.index();
        assert_eq!(idx.category_types, vec![vec![0, 1], vec![0]]);
        assert_eq!(idx.type_categories, vec![vec![0, 1], vec![0]]);
        assert_eq!(idx.route_category, vec![None, Some(0), Some(1)]);
    }

    #[test]
    fn json_round_trip_and_hash_stability() {
        let inst = Instance::from_parts(sample_parts());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        inst.save(&path).unwrap();
        let back = Instance::<f64>::load(&path).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.content_hash(), inst.content_hash());
    }

    #[test]
    fn missing_weights_is_a_schema_error_naming_the_field() {
        let mut value: serde_json::Value = serde_json::to_value(sample_parts()).unwrap();
        value.as_object_mut().unwrap().remove("weights");
        let text = serde_json::to_string_pretty(&value).unwrap();
        let err = Instance::<f64>::from_json_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("weights"), "{msg}");
        assert!(matches!(err, ModelError::Parse { line, .. } if line > 0));
    }

    #[test]
    fn unknown_field_is_accepted_with_warning() {
        let mut value: serde_json::Value = serde_json::to_value(sample_parts()).unwrap();
        value["comment"] = serde_json::json!("hello");
        value["routes"][0]["colour"] = serde_json::json!("red");
        let text = serde_json::to_string(&value).unwrap();
        let (inst, mut ignored) = Instance::<f64>::from_json_str(&text).unwrap();
        assert_eq!(inst, Instance::from_parts(sample_parts()));
        ignored.sort();
        assert_eq!(ignored, vec!["comment".to_string(), "routes.0.colour".to_string()]);
    }

    #[test]
    fn schema_version_mismatch_is_rejected() {
        let mut parts = sample_parts();
        parts.schema_version = "2".into();
        let text = serde_json::to_string(&parts).unwrap();
        assert!(matches!(
            Instance::<f64>::from_json_str(&text),
            Err(ModelError::SchemaVersion { .. })
        ));
    }

    #[test]
    fn fare_vector_axes_and_unit_mapping() {
        let bounds = FareBounds::<f64>::case_study();
        let y = FareVector::zero()
            .with(FareAxis::BaseMod, 4.53)
            .with(FareAxis::MarkupTransit, 0.16)
            .with(FareAxis::Discount, 0.25);
        assert_eq!(y.base.mobility, 4.53);
        assert_eq!(y.to_array(), [0.0, 0.16, 4.53, 0.0, 0.25]);
        let unit = bounds.to_unit(&y);
        let back = bounds.from_unit(&unit);
        for axis in FareAxis::ALL {
            assert!((back.get(axis) - y.get(axis)).abs() < 1e-12);
        }
        assert!(bounds.contains(&y));
        assert!(!bounds.contains(&y.with(FareAxis::Discount, 0.6)));
    }
}
