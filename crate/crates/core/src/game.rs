//! Non-cooperative fare setting: per-operator objectives, best responses,
//! iterated best response and a grid check of the equilibrium condition.
//!
//! Without an alliance there are no discounts, so every evaluation uses the
//! all-false activation vector and the discount coordinate stays at zero.
//! Operator `k` scores a fare vector with the alliance welfare formula under
//! its own weights, which puts the full route price in the revenue term.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descent::{axis_grid, sos2_cd, Budget, DescentConfig, Evaluator};
use crate::error::SolveError;
use crate::model::{FareAxis, FareVector, Instance, ObjectiveWeights, OperatorKind, PerOperator};
use crate::scalar::Scalar;
use crate::second_stage::SecondStageSolution;

/// Weights of both players.
pub type OperatorWeights<T> = PerOperator<ObjectiveWeights<T>>;

/// `W_k` at `fares`, where `instance` already carries operator `k`'s weights.
fn objective_with<T: Scalar>(instance: &Instance<T>, fares: &FareVector<T>) -> T {
    let off = vec![false; instance.num_categories()];
    crate::choice::welfare(instance, &without_discount(fares), &off).total
}

fn without_discount<T: Scalar>(fares: &FareVector<T>) -> FareVector<T> {
    FareVector { discount: T::zero(), ..*fares }
}

/// Objective of the operator with weights `weights_k` when fares are `fares`.
pub fn operator_objective<T: Scalar>(instance: &Instance<T>, fares: &FareVector<T>, weights_k: &ObjectiveWeights<T>) -> T {
    objective_with(&instance.with_weights(*weights_k), fares)
}

/// Evaluator of one operator's objective, for reuse of the descent code.
pub struct NoDiscountEvaluator<T: Scalar> {
    instance: Instance<T>,
}

impl<T: Scalar> NoDiscountEvaluator<T> {
    pub fn new(instance: &Instance<T>, weights_k: &ObjectiveWeights<T>) -> Self {
        NoDiscountEvaluator { instance: instance.with_weights(*weights_k) }
    }

    pub fn objective(&self, fares: &FareVector<T>) -> T {
        objective_with(&self.instance, fares)
    }
}

impl<T: Scalar> Evaluator<T> for NoDiscountEvaluator<T> {
    fn instance(&self) -> &Instance<T> {
        &self.instance
    }

    fn evaluate(&self, fares: &FareVector<T>) -> Result<SecondStageSolution<T>, SolveError> {
        let off = vec![false; self.instance.num_categories()];
        Ok(SecondStageSolution::evaluate(&self.instance, &without_discount(fares), off, true))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestResponseConfig {
    /// Points per axis of the initial screen of the box.
    pub screen: usize,
    pub descent: DescentConfig,
    /// Half-width, in steps, of the refinement grid around the incumbent.
    pub refine_radius: usize,
    pub refine_step: f64,
    /// Pattern search stops once its step falls below this.
    pub min_step: f64,
}

impl Default for BestResponseConfig {
    fn default() -> Self {
        BestResponseConfig {
            screen: 21,
            descent: DescentConfig { random: true, ..DescentConfig::default() },
            refine_radius: 10,
            refine_step: 0.01,
            min_step: 1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestResponse<T> {
    pub fares: FareVector<T>,
    pub objective: T,
}

fn axes(kind: OperatorKind) -> [FareAxis; 2] {
    [FareAxis::base(kind), FareAxis::markup(kind)]
}

/// Evenly spaced values of `[lo, hi]`, `n` points including both ends.
fn linspace<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n <= 1 || hi <= lo {
        return vec![lo];
    }
    (0..n)
        .map(|j| if j + 1 == n { hi } else { lo + (hi - lo) * T::lit(j as f64 / (n - 1) as f64) })
        .collect()
}

/// Best point of the product grid `xs × ys` over operator `kind`'s axes.
/// Ties go to the first point in row-major order.
fn grid_best<T: Scalar>(
    eval: &NoDiscountEvaluator<T>,
    fares: &FareVector<T>,
    kind: OperatorKind,
    xs: &[T],
    ys: &[T],
) -> BestResponse<T> {
    let [ax, ay] = axes(kind);
    let points: Vec<FareVector<T>> =
        xs.iter().flat_map(|&x| ys.iter().map(move |&y| fares.with(ax, x).with(ay, y))).collect();
    let values: Vec<T> = points.par_iter().map(|p| eval.objective(p)).collect();
    let mut best = BestResponse { fares: points[0], objective: values[0] };
    for (p, v) in points.iter().zip(values) {
        if v > best.objective {
            best = BestResponse { fares: *p, objective: v };
        }
    }
    best
}

/// Best response of operator `kind` to the other operator's fares in `fares`.
///
/// Three SOS2 descents restricted to the operator's two axes start from the
/// best point of a screening grid, from the current fares and from a random
/// point. The winner is polished by a local grid and a compass search.
pub fn best_response<T: Scalar>(
    instance: &Instance<T>,
    kind: OperatorKind,
    fares: &FareVector<T>,
    weights_k: &ObjectiveWeights<T>,
    config: &BestResponseConfig,
    seed: u64,
) -> BestResponse<T> {
    let eval = NoDiscountEvaluator::new(instance, weights_k);
    let bounds = *instance.bounds();
    let fares = bounds.clamp(&without_discount(fares));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [ax, ay] = axes(kind);
    let (xlo, xhi) = bounds.range(ax);
    let (ylo, yhi) = bounds.range(ay);

    let screen = grid_best(&eval, &fares, kind, &linspace(xlo, xhi, config.screen), &linspace(ylo, yhi, config.screen));
    let random = fares
        .with(ax, xlo + (xhi - xlo) * T::lit(rng.gen::<f64>()))
        .with(ay, ylo + (yhi - ylo) * T::lit(rng.gen::<f64>()));
    let here = BestResponse { fares, objective: eval.objective(&fares) };

    let descent = DescentConfig { restrict_to: Some(kind), ..config.descent.clone() };
    let mut best = if here.objective > screen.objective { here } else { screen };
    for start in [screen.fares, fares, random] {
        let outcome = sos2_cd(&eval, &start, &descent, &mut rng, &mut Budget::unlimited())
            .expect("no-discount evaluation cannot fail");
        if outcome.welfare() > best.objective {
            best = BestResponse { fares: outcome.fares(), objective: outcome.welfare() };
        }
    }

    let local = |centre: T, lo: T, hi: T| -> Vec<T> {
        let r = config.refine_radius as f64 * config.refine_step;
        let (a, b) = ((centre - T::lit(r)).max(lo), (centre + T::lit(r)).min(hi));
        axis_grid(a, b, config.refine_step, centre)
    };
    let xs = local(best.fares.get(ax), xlo, xhi);
    let ys = local(best.fares.get(ay), ylo, yhi);
    let refined = grid_best(&eval, &best.fares, kind, &xs, &ys);
    if refined.objective > best.objective {
        best = refined;
    }

    let mut step = config.refine_step;
    while step >= config.min_step {
        let mut moved = false;
        for axis in [ax, ay] {
            let (lo, hi) = bounds.range(axis);
            for dir in [1.0, -1.0] {
                let v = (best.fares.get(axis) + T::lit(dir * step)).max(lo).min(hi);
                let cand = best.fares.with(axis, v);
                let obj = eval.objective(&cand);
                if obj > best.objective {
                    best = BestResponse { fares: cand, objective: obj };
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbrConfig {
    pub epsilon: f64,
    pub max_rounds: usize,
    pub seed: u64,
    pub response: BestResponseConfig,
}

impl Default for IbrConfig {
    fn default() -> Self {
        IbrConfig { epsilon: 1e-4, max_rounds: 50, seed: 0, response: BestResponseConfig::default() }
    }
}

/// One best response within the iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbrStep<T> {
    pub round: usize,
    pub operator: OperatorKind,
    /// Operator objective before and after its move.
    pub before: T,
    pub after: T,
    pub fares: FareVector<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbrOutcome<T> {
    pub fares: FareVector<T>,
    pub objectives: PerOperator<T>,
    pub rounds: usize,
    /// False when the round cap was hit before the improvements settled.
    pub converged: bool,
    pub transcript: Vec<IbrStep<T>>,
}

impl<T: Scalar> IbrOutcome<T> {
    /// Transcript as CSV, one line per best response.
    pub fn transcript_csv(&self) -> String {
        let mut out = String::from("round,operator,before,after,beta0_TR,betaDelta_TR,beta0_MOD,betaDelta_MOD\n");
        for s in &self.transcript {
            let f = s.fares.to_array();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.round,
                s.operator.label(),
                s.before,
                s.after,
                f[0],
                f[1],
                f[2],
                f[3]
            ));
        }
        out
    }
}

/// Alternating best responses, transit first, until no operator improves its
/// objective by more than `epsilon` in a round.
///
/// Improvement is measured against the operator's objective at the fares it
/// faces when its turn comes, so moves of the other operator since its last
/// turn do not count.
pub fn iterated_best_response<T: Scalar>(
    instance: &Instance<T>,
    weights: &OperatorWeights<T>,
    config: &IbrConfig,
) -> IbrOutcome<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut fares = without_discount(&instance.bounds().sample_uniform(&mut rng));
    let mut transcript = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    while rounds < config.max_rounds {
        rounds += 1;
        let mut max_gain = 0.0f64;
        for kind in OperatorKind::ALL {
            let before = operator_objective(instance, &fares, &weights[kind]);
            let br = best_response(instance, kind, &fares, &weights[kind], &config.response, rng.gen());
            let after = if br.objective > before {
                fares = br.fares;
                br.objective
            } else {
                before
            };
            max_gain = max_gain.max((after - before).as_f64());
            log::debug!("round {rounds} {}: {before} -> {after}", kind.label());
            transcript.push(IbrStep { round: rounds, operator: kind, before, after, fares });
        }
        if max_gain <= config.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("best-response iteration stopped at the cap of {} rounds", config.max_rounds);
    }
    let objectives = PerOperator::new(
        operator_objective(instance, &fares, &weights.transit),
        operator_objective(instance, &fares, &weights.mobility),
    );
    IbrOutcome { fares, objectives, rounds, converged, transcript }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeCheck<T> {
    pub passed: bool,
    /// Largest objective gain from a unilateral grid deviation (may be negative).
    pub worst_deviation: T,
    pub operator: OperatorKind,
    pub deviation: FareVector<T>,
}

/// Scans each operator's fare box at `grid_step` for a unilateral deviation
/// that improves its objective by more than `epsilon`.
pub fn verify_ne<T: Scalar>(
    instance: &Instance<T>,
    fares: &FareVector<T>,
    weights: &OperatorWeights<T>,
    grid_step: f64,
    epsilon: f64,
) -> NeCheck<T> {
    let fares = without_discount(fares);
    let bounds = *instance.bounds();
    let mut worst: Option<(T, OperatorKind, FareVector<T>)> = None;
    for kind in OperatorKind::ALL {
        let eval = NoDiscountEvaluator::new(instance, &weights[kind]);
        let here = eval.objective(&fares);
        let [ax, ay] = axes(kind);
        let (xlo, xhi) = bounds.range(ax);
        let (ylo, yhi) = bounds.range(ay);
        let xs = axis_grid(xlo, xhi, grid_step, fares.get(ax));
        let ys = axis_grid(ylo, yhi, grid_step, fares.get(ay));
        let best = grid_best(&eval, &fares, kind, &xs, &ys);
        let gain = best.objective - here;
        if worst.is_none_or(|(g, _, _)| gain > g) {
            worst = Some((gain, kind, best.fares));
        }
    }
    let (gain, operator, deviation) = worst.expect("two operators");
    NeCheck { passed: gain.as_f64() <= epsilon, worst_deviation: gain, operator, deviation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::welfare;
    use crate::model::tests::sample_parts;

    fn inst() -> Instance<f64> {
        Instance::from_parts(sample_parts())
    }

    fn rev() -> ObjectiveWeights<f64> {
        ObjectiveWeights::revenue_only()
    }

    #[test]
    fn revenue_objective_is_zero_at_zero_fares() {
        assert_eq!(operator_objective(&inst(), &FareVector::zero(), &rev()), 0.0);
    }

    #[test]
    fn alliance_weights_match_undiscounted_welfare() {
        let inst = inst();
        let f = FareVector { base: PerOperator::new(2.0, 3.0), markup: PerOperator::new(0.1, 0.4), discount: 0.3 };
        let w = operator_objective(&inst, &f, inst.weights());
        let direct = welfare(&inst, &FareVector { discount: 0.0, ..f }, &[false, false]).total;
        assert_eq!(w, direct);
    }

    #[test]
    fn pax_only_response_is_lower_corner() {
        let inst = inst();
        let pax = ObjectiveWeights::new(1.0, 0.0, 0.0);
        let start = FareVector { base: PerOperator::new(4.0, 4.0), markup: PerOperator::new(2.0, 2.0), discount: 0.0 };
        let br = best_response(&inst, OperatorKind::Mod, &start, &pax, &BestResponseConfig::default(), 1);
        assert_eq!(br.fares.base.mobility, 0.0);
        assert_eq!(br.fares.markup.mobility, 0.0);
        assert_eq!(br.fares.base.transit, 4.0);
    }

    #[test]
    fn response_beats_screen_grid() {
        let inst = inst();
        let start = FareVector { base: PerOperator::new(2.0, 2.0), markup: PerOperator::new(0.5, 0.5), discount: 0.0 };
        for kind in OperatorKind::ALL {
            let br = best_response(&inst, kind, &start, &rev(), &BestResponseConfig::default(), 7);
            let eval = NoDiscountEvaluator::new(&inst, &rev());
            let [ax, ay] = axes(kind);
            let (xlo, xhi) = inst.bounds().range(ax);
            let (ylo, yhi) = inst.bounds().range(ay);
            let g = grid_best(&eval, &start, kind, &linspace(xlo, xhi, 21), &linspace(ylo, yhi, 21));
            assert!(br.objective >= g.objective - 1e-6);
            let again = best_response(&inst, kind, &br.fares, &rev(), &BestResponseConfig::default(), 8);
            assert!((again.objective - br.objective).abs() <= 1e-6 * br.objective.abs().max(1.0));
        }
    }

    #[test]
    fn pax_only_game_converges_to_lower_corner() {
        let inst = inst();
        let pax = ObjectiveWeights::new(1.0, 0.0, 0.0);
        let out = iterated_best_response(&inst, &PerOperator::new(pax, pax), &IbrConfig::default());
        assert!(out.converged);
        assert!(out.rounds <= 2);
        assert_eq!(out.fares.to_array(), [0.0; 5]);
    }

    #[test]
    fn revenue_game_equilibrium_passes_verifier() {
        let inst = inst();
        let w = PerOperator::new(rev(), rev());
        let out = iterated_best_response(&inst, &w, &IbrConfig { seed: 3, ..IbrConfig::default() });
        assert!(out.converged, "{:?}", out.transcript);
        let check = verify_ne(&inst, &out.fares, &w, 0.05, 1e-4);
        assert!(check.passed, "{check:?}");
        let mut moved = out.fares;
        moved.base.transit = (moved.base.transit + 0.5).min(10.0);
        let off = verify_ne(&inst, &moved, &w, 0.05, 1e-4);
        assert!(off.worst_deviation >= 0.0);
    }

    #[test]
    fn flat_landscape_always_passes() {
        let mut parts = sample_parts();
        for p in &mut parts.passenger_types {
            p.alpha = 0.0;
        }
        let inst = Instance::from_parts(parts);
        let pax = ObjectiveWeights::new(1.0, 0.0, 1.0);
        let f = FareVector { base: PerOperator::new(7.0, 1.0), markup: PerOperator::new(3.0, 0.0), discount: 0.0 };
        assert!(verify_ne(&inst, &f, &PerOperator::new(pax, pax), 0.5, 1e-9).passed);
    }
}
