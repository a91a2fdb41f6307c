//! First-stage coordinate descent: SOS2 coordinate descent with optional
//! randomized and multidimensional directions, the brute-force grid variant
//! used as a benchmark, and the timed multi-trajectory driver with warm
//! starts.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::{BoConfig, BoState};
use crate::error::{SearchError, SolveError};
use crate::model::{FareAxis, FareVector, Instance, OperatorKind};
use crate::scalar::Scalar;
use crate::second_stage::{self, SecondStageConfig, SecondStageSolution};
use crate::sos2::{generate_anchors, sos2_optimize, SearchDirection, DEFAULT_ANCHORS};

/// Maps a fare vector to its second-stage solution.
pub trait Evaluator<T: Scalar>: Sync {
    /// Instance whose weights define the surrogate objective.
    fn instance(&self) -> &Instance<T>;
    fn evaluate(&self, fares: &FareVector<T>) -> Result<SecondStageSolution<T>, SolveError>;
}

/// Evaluates the alliance objective by solving the second stage.
#[derive(Clone, Debug)]
pub struct ExactEvaluator<'a, T: Scalar> {
    pub instance: &'a Instance<T>,
    pub config: SecondStageConfig,
}

impl<'a, T: Scalar> ExactEvaluator<'a, T> {
    pub fn new(instance: &'a Instance<T>) -> Self {
        ExactEvaluator { instance, config: SecondStageConfig::default() }
    }
}

impl<T: Scalar> Evaluator<T> for ExactEvaluator<'_, T> {
    fn instance(&self) -> &Instance<T> {
        self.instance
    }

    fn evaluate(&self, fares: &FareVector<T>) -> Result<SecondStageSolution<T>, SolveError> {
        second_stage::solve(self.instance, fares, &self.config)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentConfig {
    /// Anchors per SOS2 line.
    pub anchors: usize,
    pub random: bool,
    pub multidim: bool,
    /// A pass that improves welfare by at most this much ends the trajectory.
    pub epsilon: f64,
    pub bf_discount_step: f64,
    pub bf_money_step: f64,
    /// Hard cap on passes per trajectory.
    pub max_passes: usize,
    /// Only search the axes of this operator.
    pub restrict_to: Option<OperatorKind>,
    /// Evaluate the anchors of a line on the rayon pool.
    pub parallel_anchors: bool,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            anchors: DEFAULT_ANCHORS,
            random: false,
            multidim: false,
            epsilon: 1e-4,
            bf_discount_step: 0.01,
            bf_money_step: 0.01,
            max_passes: 1000,
            restrict_to: None,
            parallel_anchors: false,
        }
    }
}

/// The four SOS2-CD variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sos2Variant {
    #[serde(rename = "sos2cd")]
    Basic,
    #[serde(rename = "sos2cd-r")]
    Random,
    #[serde(rename = "sos2cd-md")]
    Multidim,
    #[serde(rename = "sos2cd-mdr")]
    MultidimRandom,
}

impl Sos2Variant {
    pub const ALL: [Sos2Variant; 4] =
        [Sos2Variant::Basic, Sos2Variant::Random, Sos2Variant::Multidim, Sos2Variant::MultidimRandom];

    pub fn flags(self) -> (bool, bool) {
        match self {
            Sos2Variant::Basic => (false, false),
            Sos2Variant::Random => (true, false),
            Sos2Variant::Multidim => (false, true),
            Sos2Variant::MultidimRandom => (true, true),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Sos2Variant::Basic => "sos2cd",
            Sos2Variant::Random => "sos2cd-r",
            Sos2Variant::Multidim => "sos2cd-md",
            Sos2Variant::MultidimRandom => "sos2cd-mdr",
        }
    }

    pub fn apply(self, config: &DescentConfig) -> DescentConfig {
        let (random, multidim) = self.flags();
        DescentConfig { random, multidim, ..config.clone() }
    }
}

/// Wall-clock and evaluation-count budget. Either limit may be absent.
#[derive(Clone, Debug)]
pub struct Budget {
    pub deadline: Option<Instant>,
    pub max_evaluations: Option<usize>,
    pub used: usize,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget { deadline: None, max_evaluations: None, used: 0 }
    }

    pub fn new(time: Option<Duration>, max_evaluations: Option<usize>) -> Self {
        Budget { deadline: time.map(|d| Instant::now() + d), max_evaluations, used: 0 }
    }

    /// No further work should start.
    pub fn exhausted(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d) || self.max_evaluations.is_some_and(|m| self.used >= m)
    }

    /// The budget was exceeded, i.e. the last unit of work finished late.
    pub fn overran(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() > d) || self.max_evaluations.is_some_and(|m| self.used > m)
    }

    pub fn charge(&mut self, evaluations: usize) {
        self.used += evaluations;
    }
}

/// Quantum of the memoization key.
const MEMO_QUANTUM: f64 = 1e-9;

type MemoKey = [i64; 5];

fn memo_key<T: Scalar>(fares: &FareVector<T>) -> MemoKey {
    fares.to_array().map(|v| (v.as_f64() / MEMO_QUANTUM).round() as i64)
}

/// Second-stage results cached by quantized fare vector.
#[derive(Clone, Debug, Default)]
pub struct Memo<T> {
    map: HashMap<MemoKey, SecondStageSolution<T>>,
    pub hits: usize,
}

impl<T: Scalar> Memo<T> {
    pub fn new() -> Self {
        Memo { map: HashMap::new(), hits: 0 }
    }

    pub fn get(&self, fares: &FareVector<T>) -> Option<&SecondStageSolution<T>> {
        self.map.get(&memo_key(fares))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedPoint<T> {
    pub fares: FareVector<T>,
    pub welfare: T,
    /// Direction that produced the point; `start` for the initial point.
    pub direction: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog<T> {
    pub accepted: Vec<AcceptedPoint<T>>,
    /// Fresh second-stage solves per direction label.
    pub evaluations: BTreeMap<String, usize>,
    pub memo_hits: usize,
    /// Wall-clock seconds per pass.
    pub pass_seconds: Vec<f64>,
    pub passes: usize,
    pub cap_reached: bool,
    /// Stopped by the budget before converging.
    pub interrupted: bool,
}

impl<T: Scalar> TrajectoryLog<T> {
    fn new() -> Self {
        TrajectoryLog {
            accepted: Vec::new(),
            evaluations: BTreeMap::new(),
            memo_hits: 0,
            pass_seconds: Vec::new(),
            passes: 0,
            cap_reached: false,
            interrupted: false,
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.accepted.windows(2).all(|w| w[1].welfare >= w[0].welfare)
    }

    pub fn total_evaluations(&self) -> usize {
        self.evaluations.values().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentOutcome<T> {
    pub solution: SecondStageSolution<T>,
    pub log: TrajectoryLog<T>,
}

impl<T: Scalar> DescentOutcome<T> {
    pub fn fares(&self) -> FareVector<T> {
        self.solution.fares
    }

    pub fn welfare(&self) -> T {
        self.solution.welfare.total
    }
}

/// Evaluates `points`, solving only those missing from the memo.
fn evaluate_points<T: Scalar, E: Evaluator<T>>(
    evaluator: &E,
    points: &[FareVector<T>],
    parallel: bool,
    memo: &mut Memo<T>,
    budget: &mut Budget,
    log: &mut TrajectoryLog<T>,
    label: &str,
) -> Result<Vec<SecondStageSolution<T>>, SolveError> {
    let mut missing: Vec<FareVector<T>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for p in points {
        let key = memo_key(p);
        if !memo.map.contains_key(&key) && seen.insert(key) {
            missing.push(*p);
        }
    }
    let fresh: Vec<Result<SecondStageSolution<T>, SolveError>> = if parallel && missing.len() > 1 {
        missing.par_iter().map(|p| evaluator.evaluate(p)).collect()
    } else {
        missing.iter().map(|p| evaluator.evaluate(p)).collect()
    };
    for (p, sol) in missing.iter().zip(fresh) {
        memo.map.insert(memo_key(p), sol?);
    }
    let hits = points.len() - missing.len();
    memo.hits += hits;
    log.memo_hits += hits;
    budget.charge(missing.len());
    *log.evaluations.entry(label.to_string()).or_insert(0) += missing.len();
    Ok(points.iter().map(|p| memo.map[&memo_key(p)].clone()).collect())
}

/// Ordered search directions for one pass.
pub fn search_directions<R: Rng + ?Sized>(
    random: bool,
    multidim: bool,
    restrict_to: Option<OperatorKind>,
    rng: &mut R,
) -> Vec<SearchDirection> {
    let mut dirs: Vec<SearchDirection> = if multidim {
        vec![
            SearchDirection::OperatorPlane(OperatorKind::Transit),
            SearchDirection::OperatorPlane(OperatorKind::Mod),
            SearchDirection::Axis(FareAxis::Discount),
        ]
    } else {
        FareAxis::ALL.iter().map(|&a| SearchDirection::Axis(a)).collect()
    };
    if let Some(kind) = restrict_to {
        dirs.retain(|d| d.touches_only(kind));
    }
    if random {
        dirs.shuffle(rng);
    }
    dirs
}

/// SOS2 coordinate descent from `y0`.
///
/// A candidate is accepted only if its true welfare strictly exceeds the
/// welfare of the current point, so the accepted sequence is nondecreasing.
pub fn sos2_cd<T: Scalar, E: Evaluator<T>, R: Rng + ?Sized>(
    evaluator: &E,
    y0: &FareVector<T>,
    config: &DescentConfig,
    rng: &mut R,
    budget: &mut Budget,
) -> Result<DescentOutcome<T>, SolveError> {
    let instance = evaluator.instance();
    let bounds = *instance.bounds();
    let mut memo = Memo::new();
    let mut log = TrajectoryLog::new();
    let eps = T::lit(config.epsilon);

    let mut current =
        evaluate_points(evaluator, &[*y0], false, &mut memo, budget, &mut log, "start")?.remove(0);
    log.accepted.push(AcceptedPoint { fares: *y0, welfare: current.welfare.total, direction: "start".into() });
    let mut obj_prev = T::neg_infinity();
    let mut obj_cur = current.welfare.total;

    'passes: while obj_cur - obj_prev > eps {
        if log.passes >= config.max_passes {
            log.cap_reached = true;
            break;
        }
        let started = Instant::now();
        log.passes += 1;
        obj_prev = obj_cur;
        for dir in search_directions(config.random, config.multidim, config.restrict_to, rng) {
            if budget.exhausted() {
                log.interrupted = true;
                log.pass_seconds.push(started.elapsed().as_secs_f64());
                break 'passes;
            }
            let label = dir.label();
            let anchors = match generate_anchors(&current.fares, dir, config.anchors, &bounds, rng) {
                Ok(a) => a,
                Err(SearchError::DegenerateRange { .. }) => continue,
            };
            let sols = evaluate_points(
                evaluator,
                &anchors.points,
                config.parallel_anchors,
                &mut memo,
                budget,
                &mut log,
                &label,
            )?;
            let choice = sos2_optimize(instance, &anchors.points, &sols);
            let candidate =
                evaluate_points(evaluator, &[choice.fares], false, &mut memo, budget, &mut log, &label)?.remove(0);
            if candidate.welfare.total > current.welfare.total {
                log.accepted.push(AcceptedPoint {
                    fares: candidate.fares,
                    welfare: candidate.welfare.total,
                    direction: label,
                });
                current = candidate;
            }
        }
        obj_cur = current.welfare.total;
        log.pass_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok(DescentOutcome { solution: current, log })
}

/// Grid of an axis at `step`, with the current coordinate inserted in order.
pub fn axis_grid<T: Scalar>(lo: T, hi: T, step: f64, here: T) -> Vec<T> {
    let span = (hi - lo).as_f64();
    let n = (span / step).round().max(0.0) as usize;
    let mut out: Vec<T> = (0..=n)
        .map(|j| if j == n { hi } else { lo + T::lit(j as f64 * step) })
        .filter(|&v| v <= hi)
        .collect();
    let tol = T::lit(MEMO_QUANTUM);
    match out.iter().position(|&v| v >= here - tol) {
        Some(at) if (out[at] - here).abs() <= tol => out[at] = here,
        Some(at) => out.insert(at, here),
        None => out.push(here),
    }
    out
}

/// Brute-force coordinate descent: each line search evaluates the axis grid
/// and moves to its best point. Honors the budget, returning the best point
/// found so far.
pub fn bf_cd<T: Scalar, E: Evaluator<T>>(
    evaluator: &E,
    y0: &FareVector<T>,
    config: &DescentConfig,
    budget: &mut Budget,
) -> Result<DescentOutcome<T>, SolveError> {
    const CHUNK: usize = 32;
    let bounds = *evaluator.instance().bounds();
    let mut memo = Memo::new();
    let mut log = TrajectoryLog::new();
    let eps = T::lit(config.epsilon);
    let mut current =
        evaluate_points(evaluator, &[*y0], false, &mut memo, budget, &mut log, "start")?.remove(0);
    log.accepted.push(AcceptedPoint { fares: *y0, welfare: current.welfare.total, direction: "start".into() });
    let mut obj_prev = T::neg_infinity();
    let mut obj_cur = current.welfare.total;
    let axes: Vec<FareAxis> = search_directions(false, false, config.restrict_to, &mut ChaCha8Rng::seed_from_u64(0))
        .into_iter()
        .filter_map(|d| match d {
            SearchDirection::Axis(a) => Some(a),
            SearchDirection::OperatorPlane(_) => None,
        })
        .collect();

    'passes: while obj_cur - obj_prev > eps {
        if log.passes >= config.max_passes {
            log.cap_reached = true;
            break;
        }
        let started = Instant::now();
        log.passes += 1;
        obj_prev = obj_cur;
        for &axis in &axes {
            let (lo, hi) = bounds.range(axis);
            if hi <= lo {
                continue;
            }
            let step = if axis.is_discount() { config.bf_discount_step } else { config.bf_money_step };
            let points: Vec<FareVector<T>> = axis_grid(lo, hi, step, current.fares.get(axis))
                .into_iter()
                .map(|v| current.fares.with(axis, v))
                .collect();
            let mut best = current.clone();
            let mut stopped = false;
            for chunk in points.chunks(CHUNK) {
                if budget.exhausted() {
                    stopped = true;
                    break;
                }
                let sols =
                    evaluate_points(evaluator, chunk, config.parallel_anchors, &mut memo, budget, &mut log, axis.label())?;
                for sol in sols {
                    if sol.welfare.total > best.welfare.total {
                        best = sol;
                    }
                }
            }
            if best.welfare.total > current.welfare.total {
                log.accepted.push(AcceptedPoint {
                    fares: best.fares,
                    welfare: best.welfare.total,
                    direction: axis.label().to_string(),
                });
                current = best;
            }
            if stopped {
                log.interrupted = true;
                log.pass_seconds.push(started.elapsed().as_secs_f64());
                break 'passes;
            }
        }
        obj_cur = current.welfare.total;
        log.pass_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok(DescentOutcome { solution: current, log })
}

/// How warm-start candidates are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    Uniform,
    Bayes(BoConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedConfig {
    pub variant: Sos2Variant,
    pub descent: DescentConfig,
    pub warm_start: WarmStart,
    /// Warm-start phase wall-clock limit in seconds.
    pub ws_time: f64,
    /// Optional evaluation cap for the warm-start phase.
    pub ws_max_evaluations: Option<usize>,
    /// Descent phase wall-clock limit in seconds.
    pub time: f64,
    /// Optional evaluation cap for the descent phase.
    pub max_evaluations: Option<usize>,
    /// Optional cap on launched trajectories.
    pub max_trajectories: Option<usize>,
    pub seed: u64,
}

impl Default for TimedConfig {
    fn default() -> Self {
        TimedConfig {
            variant: Sos2Variant::MultidimRandom,
            descent: DescentConfig::default(),
            warm_start: WarmStart::Uniform,
            ws_time: 0.0,
            ws_max_evaluations: None,
            time: 60.0,
            max_evaluations: None,
            max_trajectories: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary<T> {
    pub index: usize,
    pub warm_started: bool,
    pub start: FareVector<T>,
    pub start_welfare: T,
    pub final_welfare: T,
    /// False when the trajectory overran the budget and its result was dropped.
    pub counted: bool,
    pub log: TrajectoryLog<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedReport<T> {
    pub best: SecondStageSolution<T>,
    /// Warm-start candidates as `(fares, welfare)` in generation order.
    pub warm_starts: Vec<(FareVector<T>, T)>,
    pub trajectories: Vec<TrajectorySummary<T>>,
    pub evaluations: usize,
    pub elapsed_seconds: f64,
}

/// Random stream of trajectory `index` (stream 0 is the driver's own).
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Timed multi-trajectory SOS2-CD with an optional warm-start phase.
pub fn timed_sos2_cd<T: Scalar, E: Evaluator<T>>(
    evaluator: &E,
    config: &TimedConfig,
) -> Result<TimedReport<T>, SolveError> {
    let started = Instant::now();
    let bounds = *evaluator.instance().bounds();
    let descent = config.variant.apply(&config.descent);
    let mut driver_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluations = 0usize;

    let fallback = bounds.sample_uniform(&mut driver_rng);
    let mut best = evaluator.evaluate(&fallback)?;
    evaluations += 1;

    // warm-start phase
    let mut warm_starts: Vec<(FareVector<T>, T)> = Vec::new();
    if config.ws_time > 0.0 || config.ws_max_evaluations.is_some() {
        let limit = (config.ws_time > 0.0).then(|| Duration::from_secs_f64(config.ws_time));
        let mut budget = Budget::new(limit, config.ws_max_evaluations);
        let mut bo = match &config.warm_start {
            WarmStart::Bayes(cfg) => Some((BoState::new(cfg.clone()), ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed))),
            WarmStart::Uniform => None,
        };
        while !budget.exhausted() {
            let y = match bo.as_mut() {
                Some((state, rng)) => bounds.from_unit(&state.suggest(rng)),
                None => bounds.sample_uniform(&mut driver_rng),
            };
            let sol = evaluator.evaluate(&y)?;
            budget.charge(1);
            if let Some((state, _)) = bo.as_mut() {
                state.observe(bounds.to_unit(&y), sol.welfare.total.as_f64());
            }
            if !budget.overran() {
                warm_starts.push((y, sol.welfare.total));
            }
        }
        evaluations += budget.used;
    }

    // descent phase
    let mut pool: Vec<(FareVector<T>, T)> = warm_starts.clone();
    let mut budget = Budget::new(Some(Duration::from_secs_f64(config.time)), config.max_evaluations);
    let mut trajectories = Vec::new();
    while !budget.exhausted() && config.max_trajectories.is_none_or(|m| trajectories.len() < m) {
        let index = trajectories.len();
        let mut rng = trajectory_rng(config.seed, index);
        let (start, warm_started) = match pool
            .iter()
            .enumerate()
            .fold(None::<(usize, T)>, |acc, (k, &(_, w))| match acc {
                Some((_, bw)) if w <= bw => acc,
                _ => Some((k, w)),
            }) {
            Some((k, _)) => (pool.remove(k).0, true),
            None => (bounds.sample_uniform(&mut rng), false),
        };
        let outcome = sos2_cd(evaluator, &start, &descent, &mut rng, &mut budget)?;
        let counted = !outcome.log.interrupted && !budget.overran();
        if counted && outcome.welfare() > best.welfare.total {
            best = outcome.solution.clone();
        }
        trajectories.push(TrajectorySummary {
            index,
            warm_started,
            start,
            start_welfare: outcome.log.accepted[0].welfare,
            final_welfare: outcome.welfare(),
            counted,
            log: outcome.log,
        });
    }
    evaluations += budget.used;
    Ok(TimedReport { best, warm_starts, trajectories, evaluations, elapsed_seconds: started.elapsed().as_secs_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::sample_parts;
    use crate::model::ObjectiveWeights;

    fn sample() -> Instance<f64> {
        Instance::from_parts(sample_parts())
    }

    #[test]
    fn fixed_direction_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let axes = search_directions(false, false, None, &mut rng);
        assert_eq!(axes, FareAxis::ALL.map(SearchDirection::Axis).to_vec());
        assert_eq!(search_directions(false, true, None, &mut rng).len(), 3);
        let a = search_directions(true, false, None, &mut ChaCha8Rng::seed_from_u64(5));
        let b = search_directions(true, false, None, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        let tr = search_directions(false, false, Some(OperatorKind::Transit), &mut rng);
        assert_eq!(tr, vec![SearchDirection::Axis(FareAxis::BaseTransit), SearchDirection::Axis(FareAxis::MarkupTransit)]);
    }

    #[test]
    fn axis_grid_includes_current_point() {
        let g = axis_grid(0.0, 0.5, 0.1, 0.25);
        assert_eq!(g.len(), 7);
        assert_eq!(g[3], 0.25);
        let g = axis_grid(0.0, 1.0, 0.5, 0.5);
        assert_eq!(g, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn pax_only_descends_to_lower_corner() {
        let mut parts = sample_parts();
        parts.weights = ObjectiveWeights::new(1.0, 0.0, 0.0);
        let inst = Instance::from_parts(parts);
        let eval = ExactEvaluator::new(&inst);
        let y0 = inst.bounds().sample_uniform(&mut ChaCha8Rng::seed_from_u64(3));
        let out = sos2_cd(&eval, &y0, &DescentConfig::default(), &mut ChaCha8Rng::seed_from_u64(3), &mut Budget::unlimited())
            .unwrap();
        assert!(out.log.is_monotone());
        let f = out.fares();
        assert_eq!((f.base.transit, f.base.mobility, f.markup.transit, f.markup.mobility), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn optimum_start_is_kept() {
        let mut parts = sample_parts();
        parts.weights = ObjectiveWeights::new(1.0, 0.0, 0.0);
        let inst = Instance::from_parts(parts);
        let eval = ExactEvaluator::new(&inst);
        let y0 = inst.bounds().lower_corner().with(FareAxis::Discount, 0.5);
        let out = sos2_cd(&eval, &y0, &DescentConfig::default(), &mut ChaCha8Rng::seed_from_u64(1), &mut Budget::unlimited())
            .unwrap();
        assert_eq!(out.fares(), y0);
        assert_eq!(out.log.accepted.len(), 1);
        assert_eq!(out.log.passes, 1);
    }

    #[test]
    fn bf_cd_and_sos2_cd_agree_on_sample() {
        let inst = sample();
        let eval = ExactEvaluator::new(&inst);
        let y0 = FareVector::zero();
        let sos = sos2_cd(&eval, &y0, &DescentConfig::default(), &mut ChaCha8Rng::seed_from_u64(2), &mut Budget::unlimited())
            .unwrap();
        let bf = bf_cd(&eval, &y0, &DescentConfig::default(), &mut Budget::unlimited()).unwrap();
        assert!(bf.log.is_monotone());
        assert!(bf.welfare() >= sos.welfare() * (1.0 - 0.005), "{} vs {}", bf.welfare(), sos.welfare());
    }

    #[test]
    fn timed_run_is_reproducible_under_count_budget() {
        let inst = sample();
        let eval = ExactEvaluator::new(&inst);
        let cfg = TimedConfig {
            time: 60.0,
            max_trajectories: Some(4),
            ws_max_evaluations: Some(10),
            seed: 11,
            ..Default::default()
        };
        let a = timed_sos2_cd(&eval, &cfg).unwrap();
        let b = timed_sos2_cd(&eval, &cfg).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.trajectories.len(), 4);
        assert_eq!(a.warm_starts.len(), 10);
        // warm starts are consumed best-first
        let mut sorted: Vec<f64> = a.warm_starts.iter().map(|w| w.1).collect();
        sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let used: Vec<f64> = a.trajectories.iter().map(|t| t.start_welfare).collect();
        assert_eq!(used, sorted[..4].to_vec());
    }

    #[test]
    fn no_warm_start_means_uniform_starts() {
        let inst = sample();
        let eval = ExactEvaluator::new(&inst);
        let cfg = TimedConfig { max_trajectories: Some(3), seed: 2, ..Default::default() };
        let r = timed_sos2_cd(&eval, &cfg).unwrap();
        assert!(r.warm_starts.is_empty());
        assert!(r.trajectories.iter().all(|t| !t.warm_started));
    }
}
