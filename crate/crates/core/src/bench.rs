//! Benchmark harness: single algorithm runs, the SOS2 line-search gap study,
//! the multi-algorithm suite and the objective-weight sweep.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bayes::{bo_loop, BoConfig};
use crate::descent::{
    axis_grid, bf_cd, sos2_cd, timed_sos2_cd, trajectory_rng, Budget, DescentConfig, Evaluator, ExactEvaluator,
    Sos2Variant, TimedConfig, WarmStart,
};
use crate::error::SolveError;
use crate::model::{FareAxis, FareVector, Instance, ObjectiveWeights};
use crate::report::{price_stats, utilization};
use crate::scalar::Scalar;
use crate::second_stage::SecondStageSolution;
use crate::sos2::{generate_anchors, sos2_optimize, SearchDirection};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Sos2(Sos2Variant),
    BfCd,
    Bo,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Sos2(Sos2Variant::Basic),
        Algorithm::Sos2(Sos2Variant::Random),
        Algorithm::Sos2(Sos2Variant::Multidim),
        Algorithm::Sos2(Sos2Variant::MultidimRandom),
        Algorithm::BfCd,
        Algorithm::Bo,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Sos2(v) => v.id(),
            Algorithm::BfCd => "bfcd",
            Algorithm::Bo => "bo",
        }
    }

    pub fn parse(id: &str) -> Option<Algorithm> {
        Self::ALL.into_iter().find(|a| a.id() == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarmStartKind {
    Uniform,
    Bo,
}

/// Settings of one optimization run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    /// Wall-clock limit in seconds of the main phase.
    pub time_limit: f64,
    pub max_evaluations: Option<usize>,
    pub max_trajectories: Option<usize>,
    pub ws_time: f64,
    pub ws_max_evaluations: Option<usize>,
    pub ws_proc: WarmStartKind,
    pub descent: DescentConfig,
    pub bo: BoConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: Algorithm::Sos2(Sos2Variant::MultidimRandom),
            time_limit: 60.0,
            max_evaluations: None,
            max_trajectories: None,
            ws_time: 0.0,
            ws_max_evaluations: None,
            ws_proc: WarmStartKind::Uniform,
            descent: DescentConfig::default(),
            bo: BoConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput<T> {
    pub solution: SecondStageSolution<T>,
    pub evaluations: usize,
    pub trajectories: usize,
    /// Trajectories that ran to convergence within the budget.
    pub completed: usize,
    pub elapsed_seconds: f64,
}

/// Runs one algorithm under the configured budget.
pub fn run_algorithm<T: Scalar, E: Evaluator<T>>(evaluator: &E, config: &RunConfig) -> Result<RunOutput<T>, SolveError> {
    let started = Instant::now();
    let limit = Some(Duration::from_secs_f64(config.time_limit));
    match config.algorithm {
        Algorithm::Sos2(variant) => {
            let timed = TimedConfig {
                variant,
                descent: config.descent.clone(),
                warm_start: match config.ws_proc {
                    WarmStartKind::Uniform => WarmStart::Uniform,
                    WarmStartKind::Bo => WarmStart::Bayes(config.bo.clone()),
                },
                ws_time: config.ws_time,
                ws_max_evaluations: config.ws_max_evaluations,
                time: config.time_limit,
                max_evaluations: config.max_evaluations,
                max_trajectories: config.max_trajectories,
                seed: config.seed,
            };
            let r = timed_sos2_cd(evaluator, &timed)?;
            Ok(RunOutput {
                solution: r.best,
                evaluations: r.evaluations,
                trajectories: r.trajectories.len(),
                completed: r.trajectories.iter().filter(|t| t.counted).count(),
                elapsed_seconds: r.elapsed_seconds,
            })
        }
        Algorithm::Bo => {
            let mut budget = Budget::new(limit, config.max_evaluations);
            let r = bo_loop(evaluator, &mut budget, &config.bo, config.seed)?;
            Ok(RunOutput {
                solution: r.best,
                evaluations: budget.used,
                trajectories: 1,
                completed: 1,
                elapsed_seconds: started.elapsed().as_secs_f64(),
            })
        }
        Algorithm::BfCd => {
            // restarts from uniform points; the best point found counts even
            // when the budget cuts a trajectory short
            let bounds = *evaluator.instance().bounds();
            let mut budget = Budget::new(limit, config.max_evaluations);
            let mut best: Option<SecondStageSolution<T>> = None;
            let mut trajectories = 0;
            let mut completed = 0;
            while !budget.exhausted() && config.max_trajectories.is_none_or(|m| trajectories < m) {
                let y0 = bounds.sample_uniform(&mut trajectory_rng(config.seed, trajectories));
                let out = bf_cd(evaluator, &y0, &config.descent, &mut budget)?;
                trajectories += 1;
                completed += usize::from(!out.log.interrupted);
                if best.as_ref().is_none_or(|b| out.welfare() > b.welfare.total) {
                    best = Some(out.solution);
                }
            }
            let solution = match best {
                Some(s) => s,
                None => {
                    budget.charge(1);
                    evaluator.evaluate(&bounds.sample_uniform(&mut trajectory_rng(config.seed, 0)))?
                }
            };
            Ok(RunOutput { solution, evaluations: budget.used, trajectories, completed, elapsed_seconds: started.elapsed().as_secs_f64() })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapConfig {
    pub lines: usize,
    /// Anchor spacing on money axes (currency) and on the discount axis.
    pub anchor_money_step: f64,
    pub anchor_discount_step: f64,
    /// Brute-force scan spacing.
    pub scan_money_step: f64,
    pub scan_discount_step: f64,
    pub seed: u64,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            lines: 100,
            anchor_money_step: 1.0,
            anchor_discount_step: 0.1,
            scan_money_step: 0.1,
            scan_discount_step: 0.01,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub line: usize,
    pub axis: FareAxis,
    pub start: FareVector<f64>,
    /// True welfare at the surrogate's maximizer.
    pub sos2_welfare: f64,
    /// Best welfare of the brute-force scan.
    pub scan_welfare: f64,
    /// Best known value on the line: the larger of the two above.
    pub best_welfare: f64,
    /// `(best - sos2) / |best|` in percent.
    pub gap_pct: f64,
}

impl GapRecord {
    pub const CSV_HEADER: &'static str = "line,axis,sos2_welfare,scan_welfare,best_welfare,gap_pct";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.line,
            self.axis.label(),
            self.sos2_welfare,
            self.scan_welfare,
            self.best_welfare,
            self.gap_pct
        )
    }
}

/// Compares SOS2 line search with a dense scan of the same line, for random
/// start points and axes.
///
/// The surrogate's maximizer may fall between scan points and beat the scan;
/// the gap is therefore measured against the better of the two.
pub fn sos2_gap_study(instance: &Instance<f64>, config: &GapConfig) -> Result<Vec<GapRecord>, SolveError> {
    let eval = ExactEvaluator::new(instance);
    let bounds = *instance.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.lines);
    for line in 0..config.lines {
        let start = bounds.sample_uniform(&mut rng);
        let axis = FareAxis::ALL[rng.gen_range(0..FareAxis::ALL.len())];
        let (lo, hi) = bounds.range(axis);
        let (anchor_step, scan_step) = if axis.is_discount() {
            (config.anchor_discount_step, config.scan_discount_step)
        } else {
            (config.anchor_money_step, config.scan_money_step)
        };
        let d = (((hi - lo) / anchor_step).round() as usize + 1).max(2);
        let anchors = generate_anchors(&start, SearchDirection::Axis(axis), d, &bounds, &mut rng)
            .expect("case-study bounds have nonzero ranges");
        let sols: Vec<SecondStageSolution<f64>> =
            anchors.points.iter().map(|p| eval.evaluate(p)).collect::<Result<_, _>>()?;
        let choice = sos2_optimize(instance, &anchors.points, &sols);
        let sos2_welfare = eval.evaluate(&choice.fares)?.welfare.total;
        let mut scan_welfare = f64::NEG_INFINITY;
        for v in axis_grid(lo, hi, scan_step, start.get(axis)) {
            scan_welfare = scan_welfare.max(eval.evaluate(&start.with(axis, v))?.welfare.total);
        }
        let best_welfare = scan_welfare.max(sos2_welfare);
        let gap_pct = 100.0 * (best_welfare - sos2_welfare) / best_welfare.abs().max(f64::MIN_POSITIVE);
        out.push(GapRecord { line, axis, start, sos2_welfare, scan_welfare, best_welfare, gap_pct });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    /// Template for every run; algorithm and seed are overwritten.
    pub run: RunConfig,
    pub base_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub algorithm: String,
    pub trial: usize,
    pub seed: u64,
    pub welfare: f64,
    pub evaluations: usize,
    pub trajectories: usize,
    pub elapsed_seconds: f64,
}

impl SuiteRow {
    pub const CSV_HEADER: &'static str = "algorithm,trial,seed,welfare,evaluations,trajectories,elapsed_seconds";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.algorithm, self.trial, self.seed, self.welfare, self.evaluations, self.trajectories, self.elapsed_seconds
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub algorithm: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Mean over trials of the welfare surplus over BO with the same seed.
    pub mean_surplus_vs_bo: Option<f64>,
}

/// Runs every algorithm on `trials` shared seeds.
pub fn run_suite(instance: &Instance<f64>, config: &SuiteConfig) -> Result<Vec<SuiteRow>, SolveError> {
    let eval = ExactEvaluator::new(instance);
    let mut rows = Vec::new();
    for trial in 0..config.trials {
        let seed = config.base_seed + trial as u64;
        for &algorithm in &config.algorithms {
            let run = RunConfig { algorithm, seed, ..config.run.clone() };
            let out = run_algorithm(&eval, &run)?;
            log::info!("{} trial {trial}: W = {}", algorithm.id(), out.solution.welfare.total);
            rows.push(SuiteRow {
                algorithm: algorithm.id().to_string(),
                trial,
                seed,
                welfare: out.solution.welfare.total,
                evaluations: out.evaluations,
                trajectories: out.trajectories,
                elapsed_seconds: out.elapsed_seconds,
            });
        }
    }
    Ok(rows)
}

/// Per-algorithm statistics of suite rows, in first-appearance order.
pub fn summarize(rows: &[SuiteRow]) -> Vec<SuiteSummary> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.algorithm.as_str()) {
            names.push(&r.algorithm);
        }
    }
    let bo_of = |trial: usize| rows.iter().find(|r| r.algorithm == "bo" && r.trial == trial).map(|r| r.welfare);
    names
        .into_iter()
        .map(|name| {
            let w: Vec<&SuiteRow> = rows.iter().filter(|r| r.algorithm == name).collect();
            let vals: Vec<f64> = w.iter().map(|r| r.welfare).collect();
            let surplus: Option<Vec<f64>> = w.iter().map(|r| bo_of(r.trial).map(|b| r.welfare - b)).collect();
            SuiteSummary {
                algorithm: name.to_string(),
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_surplus_vs_bo: surplus.map(|s| s.iter().sum::<f64>() / s.len() as f64),
            }
        })
        .collect()
}

/// One row of the weight sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub weights: ObjectiveWeights<f64>,
    pub fares: FareVector<f64>,
    pub min_price: f64,
    pub mean_price: f64,
    pub max_price: f64,
    pub pax: f64,
    pub rev: f64,
    pub vmt: f64,
    /// Metrics scaled so that 1 is the best value seen (see [`regime_sweep`]).
    pub pax_norm: f64,
    pub rev_norm: f64,
    pub vmt_norm: f64,
    /// Percent of travellers on the allied network.
    pub utilization_pct: f64,
    pub welfare: f64,
}

impl RegimeRow {
    pub const CSV_HEADER: &'static str =
        "mu_pax,mu_rev,mu_vmt,min_price,mean_price,max_price,pax_norm,rev_norm,vmt_norm,utilization_pct";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.6},{:.6},{:.6},{:.4}",
            self.weights.pax,
            self.weights.rev,
            self.weights.vmt,
            self.min_price,
            self.mean_price,
            self.max_price,
            self.pax_norm,
            self.rev_norm,
            self.vmt_norm,
            self.utilization_pct
        )
    }
}

/// Parses a weight list such as `1,0,0;1,0.5,0`.
pub fn parse_weight_grid(text: &str) -> Result<Vec<ObjectiveWeights<f64>>, String> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let v: Vec<f64> = item
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad weight {x:?}: {e}")))
                .collect::<Result<_, _>>()?;
            match v.as_slice() {
                &[p, r, m] => Ok(ObjectiveWeights::new(p, r, m)),
                _ => Err(format!("weight vector {item:?} needs three entries")),
            }
        })
        .collect()
}

/// Optimizes under each weight vector and tabulates prices, unweighted
/// metrics and utilization.
///
/// Each regime runs `run` (SOS2-CD by default) and then one axis-aligned
/// SOS2 descent from its best point, so that solutions on a face of the fare
/// box are reached exactly. Normalization: PAX and VMT are compared with
/// their values at zero prices, their best possible; REV with the largest
/// revenue in the sweep. `pax_norm = 1 - (best - pax)/|best|`,
/// `vmt_norm = best/vmt` (1 when both are zero), `rev_norm = rev/best`.
pub fn regime_sweep(
    instance: &Instance<f64>,
    grid: &[ObjectiveWeights<f64>],
    run: &RunConfig,
) -> Result<Vec<RegimeRow>, SolveError> {
    let free = ExactEvaluator::new(instance).evaluate(&FareVector::zero())?;
    let (pax_best, vmt_best) = (free.welfare.pax_term, free.welfare.vmt_term);
    let mut rows = Vec::new();
    for &weights in grid {
        let inst = instance.with_weights(weights);
        let eval = ExactEvaluator::new(&inst);
        let out = run_algorithm(&eval, run)?;
        let polish = DescentConfig { multidim: false, random: true, ..run.descent.clone() };
        let mut rng = trajectory_rng(run.seed ^ 0x9017, 0);
        let polished = sos2_cd(&eval, &out.solution.fares, &polish, &mut rng, &mut Budget::unlimited())?;
        let sol = if polished.welfare() > out.solution.welfare.total { polished.solution } else { out.solution };
        let ps = price_stats(&sol);
        let w = sol.welfare;
        rows.push(RegimeRow {
            weights,
            fares: sol.fares,
            min_price: ps.min,
            mean_price: ps.mean,
            max_price: ps.max,
            pax: w.pax_term,
            rev: w.rev_term,
            vmt: w.vmt_term,
            pax_norm: 1.0 - (pax_best - w.pax_term) / pax_best.abs().max(f64::MIN_POSITIVE),
            rev_norm: 0.0,
            vmt_norm: if w.vmt_term > 0.0 { vmt_best / w.vmt_term } else { 1.0 },
            utilization_pct: 100.0 * utilization(&inst, &sol),
            welfare: w.total,
        });
    }
    let rev_best = rows.iter().map(|r| r.rev).fold(0.0, f64::max);
    for r in &mut rows {
        r.rev_norm = if rev_best > 0.0 { r.rev / rev_best } else { 1.0 };
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::sample_parts;

    fn inst() -> Instance<f64> {
        Instance::from_parts(sample_parts())
    }

    #[test]
    fn algorithm_ids_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(Algorithm::parse(a.id()), Some(a));
        }
        assert_eq!(Algorithm::parse("nope"), None);
    }

    #[test]
    fn count_budgeted_runs_are_deterministic() {
        let inst = inst();
        let eval = ExactEvaluator::new(&inst);
        for a in Algorithm::ALL {
            let cfg = RunConfig { algorithm: a, max_evaluations: Some(60), seed: 4, ..Default::default() };
            let x = run_algorithm(&eval, &cfg).unwrap();
            let y = run_algorithm(&eval, &cfg).unwrap();
            assert_eq!(x.solution, y.solution, "{}", a.id());
            assert!(x.evaluations >= 1);
        }
    }

    #[test]
    fn gap_is_nonnegative() {
        let cfg = GapConfig { lines: 20, ..Default::default() };
        for r in sos2_gap_study(&inst(), &cfg).unwrap() {
            assert!(r.gap_pct >= -1e-9, "{r:?}");
            assert!(r.best_welfare >= r.scan_welfare);
        }
    }

    #[test]
    fn summary_reports_surplus_over_bo() {
        let row = |a: &str, t, w| SuiteRow {
            algorithm: a.into(),
            trial: t,
            seed: t as u64,
            welfare: w,
            evaluations: 1,
            trajectories: 1,
            elapsed_seconds: 0.0,
        };
        let rows = vec![row("sos2cd", 0, 5.0), row("bo", 0, 3.0), row("sos2cd", 1, 7.0), row("bo", 1, 6.0)];
        let s = summarize(&rows);
        assert_eq!(s[0].algorithm, "sos2cd");
        assert_eq!(s[0].mean, 6.0);
        assert_eq!(s[0].mean_surplus_vs_bo, Some(1.5));
        assert_eq!(s[1].mean_surplus_vs_bo, Some(0.0));
    }

    #[test]
    fn weight_grid_parsing() {
        let g = parse_weight_grid("1,0,0; 1,0.5,0").unwrap();
        assert_eq!(g, vec![ObjectiveWeights::new(1.0, 0.0, 0.0), ObjectiveWeights::new(1.0, 0.5, 0.0)]);
        assert!(parse_weight_grid("1,2").is_err());
    }

    #[test]
    fn pure_pax_regime_sits_at_lower_bound() {
        let run = RunConfig { max_evaluations: Some(400), ..Default::default() };
        let rows = regime_sweep(&inst(), &[ObjectiveWeights::new(1.0, 0.0, 0.0)], &run).unwrap();
        assert_eq!(rows[0].max_price, 0.0);
        assert!((rows[0].pax_norm - 1.0).abs() < 1e-12);
    }
}
