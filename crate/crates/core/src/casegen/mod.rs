//! Synthetic alliance instances with the structure of a commuter-rail
//! service region: towns on a ring around an inner-city core, radial transit
//! lines, MOD connectors, per-mode fastest routes and calibrated utilities.
//!
//! All randomness comes from one seeded generator, so a configuration maps
//! to exactly one instance.

pub mod graph;

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use self::graph::{Edge, EdgeKind, Path, RoutingGraph};
use crate::model::{
    CategoryId, DiscountCategory, FareBounds, Instance, InstanceParts, ObjectiveWeights, Operator, OperatorId,
    OperatorKind, PassengerType, PerOperator, Route, RouteId, TypeId, SCHEMA_VERSION,
};

pub const ASC_MOD: f64 = -0.75;
pub const ASC_TRANSIT: f64 = -1.125;
pub const ASC_HYBRID: f64 = -0.9375;
pub const ASC_DRIVE: f64 = 0.0;
/// Utility per dollar.
pub const PRICE_COEF: f64 = -0.05;
/// Utility per minute of travel.
pub const TIME_COEF: f64 = -0.0075;

/// Median-income ratios of the fifteen towns of the reference region.
pub const REFERENCE_INCOME_RATIOS: [f64; 15] = [
    0.5953, 0.8544, 0.9251, 0.5895, 0.7079, 0.5613, 0.4490, 0.7297, 1.1385, 1.2161, 1.0290, 1.0239, 1.1201, 0.9582,
    1.7225,
];

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Speeds {
    pub transit: f64,
    #[serde(rename = "mod")]
    pub mobility: f64,
    pub drive: f64,
    pub walk: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub name: String,
    pub town_count: usize,
    pub tracts_per_town: usize,
    pub transit_line_count: usize,
    /// Miles between regular stations along a line.
    pub hub_spacing: f64,
    /// Towns are placed between these distances from the core, in miles.
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Tract scatter around a town centre, in miles.
    pub town_radius: f64,
    /// Destinations per origin tract of each kind.
    pub core_destinations: usize,
    pub local_destinations: usize,
    pub neighbour_destinations: usize,
    /// Median commuters per origin-destination pair, and lognormal spread.
    pub demand_scale: f64,
    pub demand_sigma: f64,
    /// Miles per hour.
    pub speeds: Speeds,
    /// Minutes.
    pub transit_wait: f64,
    pub mod_wait: f64,
    /// Longest walk to or from a station, in miles.
    pub walk_radius: f64,
    /// Road distance over straight-line distance.
    pub detour: f64,
    /// Share of optional MOD station connectors kept; the nearest station of
    /// each line within reach is always connected.
    pub mod_coverage: f64,
    /// MOD station connectors reach this far, in miles.
    pub mod_reach: f64,
    pub gas_per_mile: f64,
    pub parking: f64,
    /// Shares of time-sensitive, intermediate and price-sensitive commuters.
    pub profile_mix: [f64; 3],
    /// Paths enumerated per commuter before picking the fastest per mode.
    pub k_paths: usize,
    /// Median-income ratio per town; when set, commuters get one profile
    /// with price sensitivity scaled by the inverse ratio.
    pub income_ratios: Option<Vec<f64>>,
    pub weights: ObjectiveWeights<f64>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SyntheticConfig {
    pub fn desk() -> Self {
        SyntheticConfig {
            name: "desk".into(),
            town_count: 12,
            tracts_per_town: 4,
            transit_line_count: 4,
            hub_spacing: 4.0,
            inner_radius: 8.0,
            outer_radius: 38.0,
            town_radius: 1.5,
            core_destinations: 2,
            local_destinations: 1,
            neighbour_destinations: 1,
            demand_scale: 30.0,
            demand_sigma: 0.8,
            speeds: Speeds { transit: 32.0, mobility: 24.0, drive: 28.0, walk: 3.0 },
            transit_wait: 8.0,
            mod_wait: 6.0,
            walk_radius: 1.0,
            detour: 1.25,
            mod_coverage: 0.5,
            mod_reach: 8.0,
            gas_per_mile: 0.2,
            parking: 10.0,
            profile_mix: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            k_paths: 10,
            income_ratios: None,
            weights: ObjectiveWeights::new(1.0, 1.0, 0.0),
            seed: 2021,
        }
    }

    pub fn tiny() -> Self {
        SyntheticConfig {
            name: "tiny".into(),
            town_count: 2,
            tracts_per_town: 1,
            transit_line_count: 1,
            core_destinations: 1,
            local_destinations: 0,
            neighbour_destinations: 1,
            ..Self::desk()
        }
    }

    pub fn large() -> Self {
        SyntheticConfig {
            name: "large".into(),
            town_count: 16,
            tracts_per_town: 8,
            transit_line_count: 6,
            core_destinations: 3,
            local_destinations: 2,
            neighbour_destinations: 2,
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "tiny" => Some(Self::tiny()),
            "desk" => Some(Self::desk()),
            "large" => Some(Self::large()),
            _ => None,
        }
    }

    /// Income ratios spread over the reference towns' range, one per town.
    pub fn reference_income_ratios(town_count: usize) -> Vec<f64> {
        let mut sorted = REFERENCE_INCOME_RATIOS.to_vec();
        sorted.sort_by(f64::total_cmp);
        let last = sorted.len() - 1;
        let mut out: Vec<f64> = (0..town_count)
            .map(|t| if town_count == 1 { sorted[last / 2] } else { sorted[(t * last + (town_count - 1) / 2) / (town_count - 1)] })
            .collect();
        // interleave so income is not tied to angular position
        out.shuffle(&mut ChaCha8Rng::seed_from_u64(0x1ec0));
        out
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidConfig(m.to_string()));
        let s = &self.speeds;
        if [s.transit, s.mobility, s.drive, s.walk].iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("all speeds must be positive");
        }
        if self.town_count < 2 {
            return bad("town_count must be at least 2");
        }
        if self.tracts_per_town == 0 || self.transit_line_count == 0 || self.k_paths == 0 {
            return bad("tracts_per_town, transit_line_count and k_paths must be positive");
        }
        if !(self.hub_spacing > 0.0) || !(0.0 < self.inner_radius && self.inner_radius <= self.outer_radius) {
            return bad("hub_spacing must be positive and 0 < inner_radius <= outer_radius");
        }
        if self.core_destinations + self.local_destinations + self.neighbour_destinations == 0 {
            return bad("at least one destination per tract is required");
        }
        if !(self.demand_scale > 0.0) || self.demand_sigma < 0.0 {
            return bad("demand_scale must be positive and demand_sigma nonnegative");
        }
        if self.transit_wait < 0.0 || self.mod_wait < 0.0 || self.detour < 1.0 {
            return bad("waits must be nonnegative and detour at least 1");
        }
        if !(0.0..=1.0).contains(&self.mod_coverage) {
            return bad("mod_coverage must lie in [0, 1]");
        }
        if self.profile_mix.iter().any(|&p| p < 0.0) || self.profile_mix.iter().sum::<f64>() <= 0.0 {
            return bad("profile_mix must be nonnegative with a positive sum");
        }
        if let Some(r) = &self.income_ratios {
            if r.len() != self.town_count || r.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return bad("income_ratios needs one positive ratio per town");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteMode {
    Transit,
    Mod,
    Hybrid,
}

impl RouteMode {
    pub const ALL: [RouteMode; 3] = [RouteMode::Transit, RouteMode::Mod, RouteMode::Hybrid];

    pub fn asc(self) -> f64 {
        match self {
            RouteMode::Transit => ASC_TRANSIT,
            RouteMode::Mod => ASC_MOD,
            RouteMode::Hybrid => ASC_HYBRID,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RouteMode::Transit => "transit",
            RouteMode::Mod => "mod",
            RouteMode::Hybrid => "hybrid",
        }
    }

    /// Mode of a path by the operator edges it uses.
    pub fn of(graph: &RoutingGraph, path: &Path) -> Option<RouteMode> {
        let uses = |k| path.edges.iter().any(|&e| graph.edges[e].kind == k);
        match (uses(EdgeKind::Transit), uses(EdgeKind::Mod)) {
            (true, false) => Some(RouteMode::Transit),
            (false, true) => Some(RouteMode::Mod),
            (true, true) => Some(RouteMode::Hybrid),
            (false, false) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    TimeSensitive,
    Intermediate,
    PriceSensitive,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::TimeSensitive, Profile::Intermediate, Profile::PriceSensitive];

    /// Multipliers of the time and price coefficients.
    pub fn multipliers(self) -> (f64, f64) {
        match self {
            Profile::TimeSensitive => (2.0, 0.5),
            Profile::Intermediate => (1.0, 1.0),
            Profile::PriceSensitive => (0.5, 2.0),
        }
    }
}

/// A place commuters travel to or from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Zone {
    Core,
    Town(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Town {
    pub label: String,
    pub centre: (f64, f64),
    pub line: usize,
    /// Origin and destination nodes of the town's tracts.
    pub tract_origins: Vec<usize>,
    pub tract_dests: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub graph: RoutingGraph,
    pub towns: Vec<Town>,
    /// Destination nodes in the core.
    pub core_dests: Vec<usize>,
    /// Zone of every node that is a trip end.
    pub zone: HashMap<usize, Zone>,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn scatter<R: Rng>(rng: &mut R, centre: (f64, f64), radius: f64) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let phi = rng.gen::<f64>() * TAU;
    (centre.0 + r * phi.cos(), centre.1 + r * phi.sin())
}

/// Builds the routing network.
///
/// Each station has an access node (boarding after a wait), a platform node
/// on the line and an egress node for alighting. Egress nodes only lead to
/// walks, so no path changes lines or uses more than one transfer.
pub fn build_network<R: Rng>(config: &SyntheticConfig, rng: &mut R) -> Network {
    let mut g = RoutingGraph::new();
    let lines = config.transit_line_count;
    let line_angle: Vec<f64> = (0..lines).map(|l| TAU * (l as f64 + 0.2 * rng.gen::<f64>()) / lines as f64).collect();

    // towns sit beside a line, in order of angle
    let mut town_geo = Vec::new();
    for t in 0..config.town_count {
        let line = t % lines;
        let r = config.inner_radius + (config.outer_radius - config.inner_radius) * rng.gen::<f64>();
        let offset = 2.0 * (2.0 * rng.gen::<f64>() - 1.0);
        let (c, s) = (line_angle[line].cos(), line_angle[line].sin());
        town_geo.push((line, r, (r * c - offset * s, r * s + offset * c)));
    }

    let mut towns = Vec::new();
    let mut zone = HashMap::new();
    for (t, &(line, _, centre)) in town_geo.iter().enumerate() {
        let label = format!("T{t:02}");
        let mut origins = Vec::new();
        let mut dests = Vec::new();
        for j in 0..config.tracts_per_town {
            let at = scatter(rng, centre, config.town_radius);
            let o = g.add_node(format!("{label}-t{j}"), at);
            let d = g.add_node(format!("{label}-t{j}*"), at);
            zone.insert(o, Zone::Town(t));
            zone.insert(d, Zone::Town(t));
            origins.push(o);
            dests.push(d);
        }
        towns.push(Town { label, centre, line, tract_origins: origins, tract_dests: dests });
    }
    let mut core_dests = Vec::new();
    for j in 0..config.core_destinations.max(1) {
        let at = scatter(rng, (0.0, 0.0), 0.8 * config.walk_radius);
        let d = g.add_node(format!("core-d{j}"), at);
        zone.insert(d, Zone::Core);
        core_dests.push(d);
    }

    // stations: the core terminal, regular stops and one hub per town
    let mut stations: Vec<Vec<(usize, usize, usize, (f64, f64))>> = Vec::new();
    for (l, &angle) in line_angle.iter().enumerate() {
        let mut radii = vec![0.0];
        let mut r = config.hub_spacing;
        while r < config.outer_radius + config.hub_spacing {
            radii.push(r);
            r += config.hub_spacing;
        }
        radii.extend(town_geo.iter().filter(|g| g.0 == l).map(|g| g.1));
        radii.sort_by(f64::total_cmp);
        radii.dedup_by(|a, b| (*a - *b).abs() < 0.25);
        let mut line_stations = Vec::new();
        for (j, &r) in radii.iter().enumerate() {
            let at = (r * angle.cos(), r * angle.sin());
            let a = g.add_node(format!("L{l}S{j}-in"), at);
            let p = g.add_node(format!("L{l}S{j}"), at);
            let e = g.add_node(format!("L{l}S{j}-out"), at);
            g.add_edge(a, p, config.transit_wait, 0.0, EdgeKind::Wait);
            g.add_edge(p, e, 0.0, 0.0, EdgeKind::Transfer);
            line_stations.push((a, p, e, at));
        }
        for w in line_stations.windows(2) {
            let d = dist(w[0].3, w[1].3);
            let minutes = 60.0 * d / config.speeds.transit;
            g.add_edge(w[0].1, w[1].1, minutes, d, EdgeKind::Transit);
            g.add_edge(w[1].1, w[0].1, minutes, d, EdgeKind::Transit);
        }
        stations.push(line_stations);
    }

    let walk = |d: f64| 60.0 * d / config.speeds.walk;
    let mod_time = |d: f64| config.mod_wait + 60.0 * d * config.detour / config.speeds.mobility;
    let trip_ends: Vec<(usize, usize, (f64, f64))> = towns
        .iter()
        .flat_map(|t| t.tract_origins.iter().zip(&t.tract_dests).map(|(&o, &d)| (o, d, g.nodes[o].at)))
        .chain(core_dests.iter().map(|&d| (usize::MAX, d, g.nodes[d].at)))
        .collect();
    for &(o, d, at) in &trip_ends {
        for line in &stations {
            let mut by_dist: Vec<(f64, usize)> =
                line.iter().enumerate().map(|(j, s)| (dist(at, s.3), j)).collect();
            by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (rank, &(dd, j)) in by_dist.iter().enumerate() {
                let (a, _, e, _) = line[j];
                if dd <= config.walk_radius {
                    if o != usize::MAX {
                        g.add_edge(o, a, walk(dd), dd, EdgeKind::Walk);
                    }
                    g.add_edge(e, d, walk(dd), dd, EdgeKind::Walk);
                }
                let keep = rank == 0 || rng.gen::<f64>() < config.mod_coverage;
                if o != usize::MAX && dd <= config.mod_reach && rank < 2 && keep {
                    g.add_edge(o, a, mod_time(dd), dd * config.detour, EdgeKind::Mod);
                }
            }
        }
    }
    Network { graph: g, towns, core_dests, zone }
}

/// One commuter origin-destination pair with its total demand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdDemand {
    pub origin: usize,
    pub dest: usize,
    pub origin_town: usize,
    pub dest_zone: Zone,
    pub count: f64,
}

/// Draws the commuter pairs and their demand, and adds a direct MOD edge for
/// each pair.
pub fn draw_demand<R: Rng>(network: &mut Network, config: &SyntheticConfig, rng: &mut R) -> Vec<OdDemand> {
    let lognormal = LogNormal::new(config.demand_scale.ln(), config.demand_sigma).expect("valid lognormal");
    let n = network.towns.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ang = |t: usize| network.towns[t].centre.1.atan2(network.towns[t].centre.0);
        ang(a).total_cmp(&ang(b))
    });
    let pos: Vec<usize> = {
        let mut p = vec![0; n];
        for (i, &t) in order.iter().enumerate() {
            p[t] = i;
        }
        p
    };
    let mut ods = Vec::new();
    for t in 0..n {
        let neighbours = {
            let mut v = vec![order[(pos[t] + 1) % n], order[(pos[t] + n - 1) % n]];
            v.dedup();
            v
        };
        for j in 0..network.towns[t].tract_origins.len() {
            let origin = network.towns[t].tract_origins[j];
            let mut dests: Vec<(usize, Zone)> = Vec::new();
            let mut core = network.core_dests.clone();
            core.shuffle(rng);
            dests.extend(core.into_iter().take(config.core_destinations).map(|d| (d, Zone::Core)));
            let mut local: Vec<usize> =
                network.towns[t].tract_dests.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &d)| d).collect();
            local.shuffle(rng);
            dests.extend(local.into_iter().take(config.local_destinations).map(|d| (d, Zone::Town(t))));
            let mut near: Vec<(usize, Zone)> = neighbours
                .iter()
                .flat_map(|&u| network.towns[u].tract_dests.iter().map(move |&d| (d, Zone::Town(u))))
                .collect();
            near.shuffle(rng);
            dests.extend(near.into_iter().take(config.neighbour_destinations));
            for (dest, dest_zone) in dests {
                let count = (lognormal.sample(rng) * 1000.0).round() / 1000.0;
                ods.push(OdDemand { origin, dest, origin_town: t, dest_zone, count: count.max(0.001) });
            }
        }
    }
    let g = &mut network.graph;
    for od in &ods {
        let d = dist(g.nodes[od.origin].at, g.nodes[od.dest].at) * config.detour;
        let minutes = config.mod_wait + 60.0 * d / config.speeds.mobility;
        g.add_edge(od.origin, od.dest, minutes, d, EdgeKind::Mod);
    }
    ods
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRoute {
    pub mode: RouteMode,
    pub origin: usize,
    pub dest: usize,
    pub origin_town: usize,
    pub dest_zone: Zone,
    /// Access node of the boarding station, if the route rides transit.
    pub boarding: Option<usize>,
    pub minutes: f64,
    /// Miles travelled on each operator's service.
    pub distance: PerOperator<f64>,
    pub label: String,
}

/// Commuter type before utilities are attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticType {
    pub od: OdDemand,
    pub count: f64,
    pub profile: Profile,
    pub time_coef: f64,
    pub price_coef: f64,
    pub drive_miles: f64,
    pub drive_minutes: f64,
    /// Gas and parking, in dollars.
    pub drive_cost: f64,
    /// Indices into the route list.
    pub routes: Vec<usize>,
}

fn boarding_of(graph: &RoutingGraph, path: &Path) -> Option<usize> {
    path.edges.iter().map(|&e| &graph.edges[e]).find(|e| e.kind == EdgeKind::Wait).map(|e| e.from)
}

/// Fastest path of each mode for one pair. Paths come from the k shortest;
/// a mode missing there is searched for separately.
fn fastest_by_mode(graph: &RoutingGraph, od: &OdDemand, k: usize) -> BTreeMap<RouteMode, Path> {
    let mut best: BTreeMap<RouteMode, Path> = BTreeMap::new();
    // unique routes are told apart by mode and boarding station; the first
    // path of each kind in cost order is the fastest
    let mut seen = std::collections::HashSet::new();
    if let Ok(paths) = graph.yen_k_shortest(od.origin, od.dest, k) {
        for p in paths {
            if let Some(mode) = RouteMode::of(graph, &p) {
                if seen.insert((mode, boarding_of(graph, &p))) {
                    best.entry(mode).or_insert(p);
                }
            }
        }
    }
    let (o, d) = (od.origin, od.dest);
    let filters: [(RouteMode, Box<dyn Fn(&Edge) -> bool>); 3] = [
        (RouteMode::Transit, Box::new(|e: &Edge| e.kind != EdgeKind::Mod)),
        (RouteMode::Mod, Box::new(move |e: &Edge| e.kind == EdgeKind::Mod && e.from == o && e.to == d)),
        (
            RouteMode::Hybrid,
            Box::new(move |e: &Edge| !(e.from == o && e.kind == EdgeKind::Walk) && !(e.to == d && e.kind == EdgeKind::Mod)),
        ),
    ];
    for (mode, allow) in filters {
        if best.contains_key(&mode) {
            continue;
        }
        if let Ok(mut p) = graph.yen_filtered(o, d, 1, allow.as_ref()) {
            if RouteMode::of(graph, &p[0]) == Some(mode) {
                best.insert(mode, p.remove(0));
            }
        }
    }
    best
}

/// Attaches up to one route per mode to every pair and splits each pair into
/// commuter types. Pairs without any in-system route are dropped with a
/// warning.
pub fn build_choice_sets(
    network: &Network,
    ods: &[OdDemand],
    config: &SyntheticConfig,
) -> (Vec<SyntheticRoute>, Vec<SyntheticType>) {
    let g = &network.graph;
    let mut routes: Vec<SyntheticRoute> = Vec::new();
    let mut types = Vec::new();
    let zone_label = |z: Zone| match z {
        Zone::Core => "core".to_string(),
        Zone::Town(t) => network.towns[t].label.clone(),
    };
    for od in ods {
        let paths = fastest_by_mode(g, od, config.k_paths);
        if paths.is_empty() {
            log::warn!("dropping {} -> {}: no in-system route", g.nodes[od.origin].label, g.nodes[od.dest].label);
            continue;
        }
        let mut ids = Vec::new();
        for (mode, p) in paths {
            let mut distance = PerOperator::new(0.0, 0.0);
            for &e in &p.edges {
                match g.edges[e].kind {
                    EdgeKind::Transit => distance.transit += g.edges[e].distance,
                    EdgeKind::Mod => distance.mobility += g.edges[e].distance,
                    _ => {}
                }
            }
            let boarding = boarding_of(g, &p);
            let via = boarding.map(|b| format!(" via {}", g.nodes[b].label.trim_end_matches("-in"))).unwrap_or_default();
            ids.push(routes.len());
            routes.push(SyntheticRoute {
                mode,
                origin: od.origin,
                dest: od.dest,
                origin_town: od.origin_town,
                dest_zone: od.dest_zone,
                boarding,
                minutes: p.cost,
                distance,
                label: format!(
                    "{} {}>{} ({}){via}",
                    mode.label(),
                    g.nodes[od.origin].label,
                    g.nodes[od.dest].label,
                    zone_label(od.dest_zone)
                ),
            });
        }
        let miles = dist(g.nodes[od.origin].at, g.nodes[od.dest].at) * config.detour;
        let drive_minutes = 60.0 * miles / config.speeds.drive;
        let drive_cost = config.gas_per_mile * miles + config.parking;
        let mix_total: f64 = config.profile_mix.iter().sum();
        let profiles: Vec<(Profile, f64)> = if config.income_ratios.is_some() {
            vec![(Profile::Intermediate, 1.0)]
        } else {
            Profile::ALL.iter().zip(config.profile_mix).filter(|(_, w)| *w > 0.0).map(|(&p, w)| (p, w / mix_total)).collect()
        };
        for (profile, share) in profiles {
            let (tm, pm) = profile.multipliers();
            types.push(SyntheticType {
                od: *od,
                count: ((od.count * share) * 1000.0).round().max(1.0) / 1000.0,
                profile,
                time_coef: TIME_COEF * tm,
                price_coef: PRICE_COEF * pm,
                drive_miles: miles,
                drive_minutes,
                drive_cost,
                routes: ids.clone(),
            });
        }
    }
    (routes, types)
}

/// Utility of an in-system route.
pub fn route_utility(mode: RouteMode, minutes: f64, time_coef: f64) -> f64 {
    mode.asc() + time_coef * minutes
}

/// Utility of driving.
pub fn drive_utility(minutes: f64, cost: f64, time_coef: f64, price_coef: f64) -> f64 {
    ASC_DRIVE + time_coef * minutes + price_coef * cost
}

/// Route utilities, outside utility and price sensitivity of one type.
pub fn assign_utilities(t: &SyntheticType, routes: &[SyntheticRoute]) -> (BTreeMap<usize, f64>, f64, f64) {
    let u = t.routes.iter().map(|&r| (r, route_utility(routes[r].mode, routes[r].minutes, t.time_coef))).collect();
    let u0 = drive_utility(t.drive_minutes, t.drive_cost, t.time_coef, t.price_coef);
    (u, u0, t.price_coef)
}

/// Price sensitivity for a town with the given income ratio.
pub fn income_alpha(base: f64, ratio: f64) -> f64 {
    base / ratio
}

/// Rescales ratios so their demand-weighted mean over towns is one.
pub fn normalize_ratios(ratios: &[f64], demand: &[f64]) -> Vec<f64> {
    let total: f64 = demand.iter().sum();
    let mean: f64 = ratios.iter().zip(demand).map(|(r, d)| r * d).sum::<f64>() / total;
    ratios.iter().map(|r| r / mean).collect()
}

/// Sets every type's price sensitivity from its origin town's ratio.
pub fn apply_income_awareness(types: &mut [SyntheticType], ratios: &[f64]) {
    for t in types {
        t.price_coef = income_alpha(PRICE_COEF, ratios[t.od.origin_town]);
    }
}

/// Generates a validated instance from `config`.
pub fn generate(config: &SyntheticConfig) -> Result<Instance<f64>, GenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut network = build_network(config, &mut rng);
    let ods = draw_demand(&mut network, config, &mut rng);
    let (routes, mut types) = build_choice_sets(&network, &ods, config);
    if let Some(ratios) = &config.income_ratios {
        let mut demand = vec![0.0; config.town_count];
        for t in &types {
            demand[t.od.origin_town] += t.count;
        }
        apply_income_awareness(&mut types, &normalize_ratios(ratios, &demand));
    }

    let zone_label = |z: Zone| match z {
        Zone::Core => "core".to_string(),
        Zone::Town(t) => network.towns[t].label.clone(),
    };
    // one category per realized town pair with a discount-eligible route
    let mut pairs: BTreeMap<(usize, Zone), Vec<usize>> = BTreeMap::new();
    for (r, route) in routes.iter().enumerate() {
        if route.mode != RouteMode::Transit {
            pairs.entry((route.origin_town, route.dest_zone)).or_default().push(r);
        }
    }
    let mut route_category = vec![None; routes.len()];
    let categories: Vec<DiscountCategory> = pairs
        .iter()
        .enumerate()
        .map(|(a, (&(t, z), members))| {
            for &r in members {
                route_category[r] = Some(CategoryId(a as u32));
            }
            DiscountCategory {
                id: CategoryId(a as u32),
                routes: members.iter().map(|&r| RouteId(r as u32)).collect(),
                label: Some(format!("{}>{}", network.towns[t].label, zone_label(z))),
            }
        })
        .collect();

    let (tr, md) = (OperatorId(0), OperatorId(1));
    let out_routes: Vec<Route<f64>> = routes
        .iter()
        .enumerate()
        .map(|(r, route)| {
            let mut distance = BTreeMap::new();
            if route.mode != RouteMode::Mod {
                distance.insert(tr, route.distance.transit);
            }
            if route.mode != RouteMode::Transit {
                distance.insert(md, route.distance.mobility);
            }
            Route { id: RouteId(r as u32), distance, category: route_category[r], label: Some(route.label.clone()) }
        })
        .collect();
    let passenger_types: Vec<PassengerType<f64>> = types
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let (u, u0, alpha) = assign_utilities(t, &routes);
            PassengerType {
                id: TypeId(i as u32),
                count: t.count,
                utilities: u.into_iter().map(|(r, v)| (RouteId(r as u32), v)).collect(),
                outside_utility: u0,
                alpha,
                drive_distance: t.drive_miles,
                group: Some(network.towns[t.od.origin_town].label.clone()),
            }
        })
        .collect();

    let parts = InstanceParts {
        schema_version: SCHEMA_VERSION.to_string(),
        name: Some(config.name.clone()),
        operators: vec![Operator { id: tr, kind: OperatorKind::Transit }, Operator { id: md, kind: OperatorKind::Mod }],
        routes: out_routes,
        categories,
        passenger_types,
        bounds: FareBounds::case_study(),
        weights: config.weights,
    };
    Ok(Instance::from_parts(parts))
}
