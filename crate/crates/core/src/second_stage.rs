//! Second stage: for fixed fares, choose the discount activation vector that
//! maximizes welfare.
//!
//! Once fares are fixed, a passenger type's contribution depends only on the
//! activations of the categories its routes belong to. Linking types to
//! categories gives a bipartite graph whose connected components can be
//! optimized independently, so the exact solver enumerates `2^k` patterns per
//! component instead of `2^|A|` overall.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::choice::{gamma, base_price, type_terms, welfare_at_prices, PriceTable, ShareTable, WelfareBreakdown};
use crate::error::SolveError;
use crate::model::{FareVector, Instance};
use crate::scalar::Scalar;

/// Default largest component enumerated exactly.
pub const DEFAULT_COMPONENT_CAP: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondStageConfig {
    pub component_cap: usize,
    /// Use [`solve_heuristic`] when a component exceeds the cap.
    pub heuristic_fallback: bool,
    pub heuristic_seed: u64,
}

impl Default for SecondStageConfig {
    fn default() -> Self {
        SecondStageConfig {
            component_cap: DEFAULT_COMPONENT_CAP,
            heuristic_fallback: false,
            heuristic_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondStageSolution<T> {
    pub fares: FareVector<T>,
    /// Discount activation per category position.
    pub activations: Vec<bool>,
    pub prices: PriceTable<T>,
    pub shares: ShareTable<T>,
    /// `p_r * s_ir`, aligned with the per-type route lists.
    pub linearized_revenue: Vec<Vec<T>>,
    pub welfare: WelfareBreakdown<T>,
    /// False when produced by the heuristic.
    pub exact: bool,
}

impl<T: Scalar> SecondStageSolution<T> {
    /// Closed-form prices, shares and welfare for a given activation vector.
    pub fn evaluate(instance: &Instance<T>, fares: &FareVector<T>, activations: Vec<bool>, exact: bool) -> Self {
        let prices = PriceTable::compute(instance, fares, &activations);
        let shares = ShareTable::compute(instance, &prices);
        let idx = instance.index();
        let linearized_revenue = idx
            .type_routes
            .iter()
            .zip(&shares.route)
            .map(|(routes, s)| routes.iter().zip(s).map(|(&r, &s)| prices.price[r] * s).collect())
            .collect();
        let welfare = welfare_at_prices(instance, &prices);
        SecondStageSolution {
            fares: *fares,
            activations,
            prices,
            shares,
            linearized_revenue,
            welfare,
            exact,
        }
    }

    pub fn total(&self) -> T {
        self.welfare.total
    }
}

/// A connected group of categories and the passenger types touching them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    /// Category positions, ascending.
    pub categories: Vec<usize>,
    /// Passenger type positions, ascending.
    pub types: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    /// Ordered by smallest category position.
    pub coupled: Vec<Component>,
    /// Types without any discount-eligible route; their contribution does not depend on `x`.
    pub constant_types: Vec<usize>,
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

pub fn coupling_components<T: Scalar>(instance: &Instance<T>) -> Components {
    let idx = instance.index();
    let n_cat = instance.num_categories();
    let mut parent: Vec<usize> = (0..n_cat).collect();
    let mut constant_types = Vec::new();
    for (i, cats) in idx.type_categories.iter().enumerate() {
        match cats.split_first() {
            None => constant_types.push(i),
            Some((&first, rest)) => {
                for &c in rest {
                    let (ra, rb) = (find(&mut parent, first), find(&mut parent, c));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
    }
    let mut slot = vec![usize::MAX; n_cat];
    let mut coupled: Vec<Component> = Vec::new();
    for c in 0..n_cat {
        let root = find(&mut parent, c);
        if slot[root] == usize::MAX {
            slot[root] = coupled.len();
            coupled.push(Component { categories: Vec::new(), types: Vec::new() });
        }
        coupled[slot[root]].categories.push(c);
    }
    for (i, cats) in idx.type_categories.iter().enumerate() {
        if let Some(&first) = cats.first() {
            let root = find(&mut parent, first);
            coupled[slot[root]].types.push(i);
        }
    }
    Components { coupled, constant_types }
}

/// Weighted welfare contribution of `types` under `prices`.
fn partial_total<T: Scalar>(instance: &Instance<T>, types: &[usize], prices: &PriceTable<T>) -> T {
    let w = instance.weights();
    let (mut pax, mut rev, mut vmt) = (T::zero(), T::zero(), T::zero());
    for &i in types {
        let (a, b, c) = type_terms(instance, i, prices);
        pax = pax + a;
        rev = rev + b;
        vmt = vmt + c;
    }
    w.pax * pax + w.rev * rev - w.vmt * vmt
}

/// Bit of `mask` for the `j`-th of `k` categories; the first category is the
/// most significant bit so increasing masks enumerate in lexicographic order.
fn mask_bit(mask: u64, j: usize, k: usize) -> bool {
    (mask >> (k - 1 - j)) & 1 == 1
}

/// Exact second-stage optimum by per-component enumeration. Among optimal
/// activation vectors the lexicographically smallest is returned.
pub fn solve_exact<T: Scalar>(
    instance: &Instance<T>,
    fares: &FareVector<T>,
    config: &SecondStageConfig,
) -> Result<SecondStageSolution<T>, SolveError> {
    let comps = coupling_components(instance);
    if let Some((component, c)) = comps
        .coupled
        .iter()
        .enumerate()
        .find(|(_, c)| c.categories.len() > config.component_cap)
    {
        return Err(SolveError::ComponentTooLarge {
            component,
            categories: c.categories.len(),
            cap: config.component_cap,
        });
    }
    let idx = instance.index();
    let sigma: Vec<T> = (0..instance.routes().len()).map(|r| base_price(instance, r, fares)).collect();
    let discounted = T::one() - fares.discount;
    let mut prices = PriceTable { price: sigma.clone() };
    let mut x = vec![false; instance.num_categories()];

    for comp in &comps.coupled {
        let k = comp.categories.len();
        if comp.types.is_empty() {
            continue;
        }
        let routes: Vec<usize> = comp
            .types
            .iter()
            .flat_map(|&i| idx.type_routes[i].iter().copied())
            .filter(|&r| idx.route_category[r].is_some())
            .collect();
        let mut best_mask = 0u64;
        let mut best = T::neg_infinity();
        for mask in 0..(1u64 << k) {
            for (j, &c) in comp.categories.iter().enumerate() {
                x[c] = mask_bit(mask, j, k);
            }
            for &r in &routes {
                let a = idx.route_category[r].expect("eligible route");
                prices.price[r] = if x[a] { sigma[r] * discounted } else { sigma[r] };
            }
            let value = partial_total(instance, &comp.types, &prices);
            if value > best {
                best = value;
                best_mask = mask;
            }
        }
        for (j, &c) in comp.categories.iter().enumerate() {
            x[c] = mask_bit(best_mask, j, k);
        }
        for &r in &routes {
            prices.price[r] = sigma[r];
        }
    }
    Ok(SecondStageSolution::evaluate(instance, fares, x, true))
}

/// Exhaustive search over all `2^|A|` activation vectors (test oracle).
pub fn solve_enumerate<T: Scalar>(
    instance: &Instance<T>,
    fares: &FareVector<T>,
    cap: usize,
) -> Result<SecondStageSolution<T>, SolveError> {
    let k = instance.num_categories();
    if k > cap {
        return Err(SolveError::TooManyCategories { count: k, cap });
    }
    let mut best: Option<SecondStageSolution<T>> = None;
    for mask in 0..(1u64 << k) {
        let x: Vec<bool> = (0..k).map(|j| mask_bit(mask, j, k)).collect();
        let sol = SecondStageSolution::evaluate(instance, fares, x, true);
        if best.as_ref().is_none_or(|b| sol.welfare.total > b.welfare.total) {
            best = Some(sol);
        }
    }
    Ok(best.expect("at least one activation vector"))
}

/// Best-improvement single-flip hill climbing from all-zeros, all-ones and
/// five seeded random starts. The result is flagged `exact = false`.
pub fn solve_heuristic<T: Scalar>(instance: &Instance<T>, fares: &FareVector<T>, seed: u64) -> SecondStageSolution<T> {
    let k = instance.num_categories();
    let objective = |x: &[bool]| crate::choice::welfare(instance, fares, x).total;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts = vec![vec![false; k], vec![true; k]];
    for _ in 0..5 {
        starts.push((0..k).map(|_| rng.gen::<bool>()).collect());
    }
    let mut best_x = vec![false; k];
    let mut best = T::neg_infinity();
    for mut x in starts {
        let mut value = objective(&x);
        loop {
            let mut step: Option<(usize, T)> = None;
            for j in 0..k {
                x[j] = !x[j];
                let v = objective(&x);
                x[j] = !x[j];
                if v > value && step.is_none_or(|(_, sv)| v > sv) {
                    step = Some((j, v));
                }
            }
            match step {
                Some((j, v)) => {
                    x[j] = !x[j];
                    value = v;
                }
                None => break,
            }
        }
        if value > best {
            best = value;
            best_x = x;
        }
    }
    SecondStageSolution::evaluate(instance, fares, best_x, false)
}

/// Exact solve, falling back to the heuristic when configured to.
pub fn solve<T: Scalar>(
    instance: &Instance<T>,
    fares: &FareVector<T>,
    config: &SecondStageConfig,
) -> Result<SecondStageSolution<T>, SolveError> {
    match solve_exact(instance, fares, config) {
        Err(SolveError::ComponentTooLarge { .. }) if config.heuristic_fallback => {
            Ok(solve_heuristic(instance, fares, config.heuristic_seed))
        }
        other => other,
    }
}

/// Big-M constants of the linearized second stage, aligned with the
/// per-type route lists (entries for routes outside every category are
/// computed the same way but unused by the formulation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigMBundle<T> {
    pub m_share: Vec<Vec<T>>,
    pub m_rev: Vec<Vec<T>>,
}

pub fn big_m<T: Scalar>(instance: &Instance<T>, fares: &FareVector<T>) -> BigMBundle<T> {
    let idx = instance.index();
    let mut m_share = Vec::with_capacity(idx.type_routes.len());
    let mut m_rev = Vec::with_capacity(idx.type_routes.len());
    for (i, routes) in idx.type_routes.iter().enumerate() {
        m_share.push(routes.iter().map(|&r| gamma(instance, i, r, fares, false)).collect());
        m_rev.push(routes.iter().map(|&r| fares.discount * base_price(instance, r, fares)).collect());
    }
    BigMBundle { m_share, m_rev }
}

/// Checks a solution against every constraint of the linearized second
/// stage at its own activation vector. Returns descriptions of violated rows.
pub fn check_feasibility<T: Scalar>(instance: &Instance<T>, sol: &SecondStageSolution<T>, tol: f64) -> Vec<String> {
    let idx = instance.index();
    let fares = &sol.fares;
    let lam = fares.discount.as_f64();
    let mut bad = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            bad.push(what);
        }
    };
    for (r, &p) in sol.prices.price.iter().enumerate() {
        let sigma = base_price(instance, r, fares).as_f64();
        let expected = match idx.route_category[r] {
            Some(a) if sol.activations[a] => (1.0 - lam) * sigma,
            _ => sigma,
        };
        check((p.as_f64() - expected).abs() <= tol, format!("price r{r}"));
    }
    for (i, routes) in idx.type_routes.iter().enumerate() {
        let s0 = sol.shares.outside[i].as_f64();
        let s = &sol.shares.route[i];
        let sum = s0 + s.iter().map(|v| v.as_f64()).sum::<f64>();
        check((sum - 1.0).abs() <= tol, format!("normalization i{i}"));
        check(s0 >= -tol, format!("outside share sign i{i}"));
        for (k, &r) in routes.iter().enumerate() {
            let sir = s[k].as_f64();
            let w = sol.linearized_revenue[i][k].as_f64();
            let sigma = base_price(instance, r, fares).as_f64();
            check(sir >= -tol, format!("share sign i{i} r{r}"));
            let g0 = gamma(instance, i, r, fares, false).as_f64();
            match idx.route_category[r] {
                None => {
                    check((s0 - g0 * sir).abs() <= tol, format!("proportionality i{i} r{r}"));
                    check((w - sigma * sir).abs() <= tol, format!("revenue i{i} r{r}"));
                }
                Some(a) => {
                    let x = if sol.activations[a] { 1.0 } else { 0.0 };
                    let gl = gamma(instance, i, r, fares, true).as_f64();
                    let ms = g0;
                    let mw = lam * sigma;
                    check(s0 <= g0 * sir + tol, format!("share ub0 i{i} r{r}"));
                    check(s0 >= g0 * sir - ms * x - tol, format!("share lb0 i{i} r{r}"));
                    check(s0 <= gl * sir + ms * (1.0 - x) + tol, format!("share ub1 i{i} r{r}"));
                    check(s0 >= gl * sir - tol, format!("share lb1 i{i} r{r}"));
                    check(w <= sigma * sir + tol, format!("rev ub0 i{i} r{r}"));
                    check(w >= sigma * sir - mw * x - tol, format!("rev lb0 i{i} r{r}"));
                    check(w <= (1.0 - lam) * sigma * sir + mw * (1.0 - x) + tol, format!("rev ub1 i{i} r{r}"));
                    check(w >= (1.0 - lam) * sigma * sir - tol, format!("rev lb1 i{i} r{r}"));
                }
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::welfare;
    use crate::model::tests::sample_parts;
    use crate::model::{FareAxis, ObjectiveWeights, PerOperator};

    fn sample() -> Instance<f64> {
        Instance::from_parts(sample_parts())
    }

    fn fares() -> FareVector<f64> {
        FareVector { base: PerOperator::new(3.0, 4.0), markup: PerOperator::new(0.2, 1.0), discount: 0.4 }
    }

    #[test]
    fn shared_type_merges_categories() {
        let comps = coupling_components(&sample());
        assert_eq!(comps.coupled, vec![Component { categories: vec![0, 1], types: vec![0, 1] }]);
        assert!(comps.constant_types.is_empty());
    }

    #[test]
    fn degree_one_types_give_one_component_per_category() {
        let mut parts = sample_parts();
        parts.passenger_types[0].utilities.remove(&crate::model::RouteId(1));
        let comps = coupling_components(&Instance::from_parts(parts));
        assert_eq!(comps.coupled.len(), 2);
        assert_eq!(comps.coupled[0].types, vec![1]);
        assert_eq!(comps.coupled[1].types, vec![0]);
    }

    #[test]
    fn zero_discount_returns_all_zero_activation() {
        let inst = sample();
        let y = fares().with(FareAxis::Discount, 0.0);
        let sol = solve_exact(&inst, &y, &SecondStageConfig::default()).unwrap();
        assert_eq!(sol.activations, vec![false, false]);
        assert_eq!(sol.welfare.total, welfare(&inst, &y, &[false, false]).total);
    }

    #[test]
    fn single_category_revenue_picks_better_branch() {
        let mut parts = sample_parts();
        parts.weights = ObjectiveWeights::revenue_only();
        parts.passenger_types.truncate(1);
        parts.passenger_types[0].utilities.remove(&crate::model::RouteId(2));
        parts.categories[1].routes.clear();
        parts.routes[2].category = None;
        let inst = Instance::from_parts(parts);
        let y = fares();
        let off = welfare(&inst, &y, &[false, false]).total;
        let on = welfare(&inst, &y, &[true, false]).total;
        let sol = solve_exact(&inst, &y, &SecondStageConfig::default()).unwrap();
        assert_eq!(sol.welfare.total, off.max(on));
        assert_eq!(sol.activations[0], on > off);
    }

    #[test]
    fn exact_matches_enumeration_and_is_feasible() {
        let inst = sample();
        let y = fares();
        let a = solve_exact(&inst, &y, &SecondStageConfig::default()).unwrap();
        let b = solve_enumerate(&inst, &y, 20).unwrap();
        assert_eq!(a.activations, b.activations);
        assert!((a.welfare.total - b.welfare.total).abs() <= 1e-12 * b.welfare.total.abs().max(1.0));
        assert_eq!(check_feasibility(&inst, &a, 1e-9), Vec::<String>::new());
        assert!(a.welfare.total >= welfare(&inst, &y, &[false, false]).total);
    }

    #[test]
    fn component_cap_is_enforced() {
        let cfg = SecondStageConfig { component_cap: 1, ..Default::default() };
        let err = solve_exact(&sample(), &fares(), &cfg).unwrap_err();
        assert_eq!(err, SolveError::ComponentTooLarge { component: 0, categories: 2, cap: 1 });
        let cfg = SecondStageConfig { heuristic_fallback: true, ..cfg };
        assert!(!solve(&sample(), &fares(), &cfg).unwrap().exact);
        assert!(matches!(solve_enumerate(&sample(), &fares(), 1), Err(SolveError::TooManyCategories { .. })));
    }

    #[test]
    fn heuristic_prefers_all_ones_when_every_discount_helps() {
        let mut parts = sample_parts();
        parts.weights = ObjectiveWeights::new(1.0, 0.0, 0.0);
        let inst = Instance::from_parts(parts);
        let sol = solve_heuristic(&inst, &fares(), 3);
        assert_eq!(sol.activations, vec![true, true]);
        assert_eq!(sol, solve_heuristic(&inst, &fares(), 3));
    }

    #[test]
    fn big_m_values() {
        let inst = sample();
        let y = fares();
        let m = big_m(&inst, &y.with(FareAxis::Discount, 0.0));
        assert!(m.m_rev.iter().flatten().all(|&v| v == 0.0));
        let m = big_m(&inst, &y);
        assert_eq!(m.m_share[0][1], gamma(&inst, 0, 1, &y, false));
        assert!((m.m_rev[0][1] - 0.4 * base_price(&inst, 1, &y)).abs() < 1e-15);
    }
}
