//! Gaussian-process Bayesian optimization over the unit hypercube, used as a
//! benchmark optimizer and as a warm-start generator.
//!
//! The GP uses a squared-exponential kernel with fixed hyperparameters on
//! standardized observations; suggestions maximize an upper confidence bound
//! over a shifted Halton candidate pool plus perturbations of the incumbent.
//! The GP itself works in `f64` regardless of the model scalar.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::descent::{Budget, Evaluator};
use crate::error::{GpError, SolveError};
use crate::model::FareVector;
use crate::scalar::Scalar;
use crate::second_stage::SecondStageSolution;

/// Fare-space dimension.
pub const DIM: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub lengthscale: Vec<f64>,
    pub signal_variance: f64,
    pub jitter: f64,
}

impl Default for GpHyper {
    fn default() -> Self {
        GpHyper { lengthscale: vec![0.2; DIM], signal_variance: 1.0, jitter: 1e-8 }
    }
}

impl GpHyper {
    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.lengthscale)
            .map(|((x, y), l)| ((x - y) / l).powi(2))
            .sum();
        self.signal_variance * (-0.5 * r2).exp()
    }
}

/// Jitter retries, each multiplying the jitter by ten.
const JITTER_RETRIES: usize = 3;

/// Fitted exact GP regression state.
#[derive(Clone, Debug)]
pub struct GpState {
    pub hyper: GpHyper,
    pub points: Vec<Vec<f64>>,
    /// Observations in original units.
    pub values: Vec<f64>,
    pub value_mean: f64,
    pub value_scale: f64,
    /// Jitter that made the kernel matrix factorizable.
    pub jitter_used: f64,
    chol: Cholesky<f64, Dyn>,
    /// `K^-1 y` for the standardized observations.
    weights: DVector<f64>,
}

/// Fits a GP to `values` observed at `points` (unit-cube coordinates).
pub fn gp_fit(points: &[Vec<f64>], values: &[f64], hyper: &GpHyper) -> Result<GpState, GpError> {
    if points.is_empty() {
        return Err(GpError::NoObservations);
    }
    let n = points.len();
    let value_mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - value_mean).powi(2)).sum::<f64>() / n as f64;
    let value_scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let y = DVector::from_iterator(n, values.iter().map(|v| (v - value_mean) / value_scale));
    let base = DMatrix::from_fn(n, n, |i, j| hyper.kernel(&points[i], &points[j]));

    let mut jitter = hyper.jitter;
    for attempt in 0..=JITTER_RETRIES {
        let mut k = base.clone();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(k) {
            let weights = chol.solve(&y);
            return Ok(GpState {
                hyper: hyper.clone(),
                points: points.to_vec(),
                values: values.to_vec(),
                value_mean,
                value_scale,
                jitter_used: jitter,
                chol,
                weights,
            });
        }
        if attempt < JITTER_RETRIES {
            jitter *= 10.0;
        }
    }
    Err(GpError::SingularKernel { retries: JITTER_RETRIES })
}

impl GpState {
    /// Posterior mean and variance in standardized units.
    pub fn predict_standardized(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(self.points.len(), self.points.iter().map(|p| self.hyper.kernel(p, x)));
        let mean = k.dot(&self.weights);
        let v = self.chol.l().solve_lower_triangular(&k).expect("triangular factor is invertible");
        let var = (self.hyper.signal_variance - v.dot(&v)).max(0.0);
        (mean, var)
    }

    /// Posterior mean and variance in the units of the observations.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict_standardized(x);
        (self.value_mean + self.value_scale * m, self.value_scale * self.value_scale * v)
    }

    /// Upper confidence bound in standardized units.
    pub fn ucb(&self, x: &[f64], kappa: f64) -> f64 {
        let (m, v) = self.predict_standardized(x);
        m + kappa * v.sqrt()
    }

    pub fn incumbent(&self) -> &[f64] {
        let best = self
            .values
            .iter()
            .enumerate()
            .fold(0, |b, (i, &v)| if v > self.values[b] { i } else { b });
        &self.points[best]
    }
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// `count` Halton points in `[0,1)^dim`, shifted by a uniform random offset modulo 1.
pub fn shifted_halton<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len());
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| (0..dim).map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract()).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    pub kappa: f64,
    pub candidate_count: usize,
    /// Gaussian perturbations of the incumbent added to the pool.
    pub perturbations: usize,
    pub perturbation_scale: f64,
    pub hyper: GpHyper,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig { kappa: 2.0, candidate_count: 1024, perturbations: 64, perturbation_scale: 0.05, hyper: GpHyper::default() }
    }
}

/// UCB maximizer over the candidate pool. Ties keep the earliest candidate.
pub fn ucb_suggest<R: Rng + ?Sized>(state: &GpState, config: &BoConfig, rng: &mut R) -> Vec<f64> {
    let dim = state.points[0].len();
    let mut pool = shifted_halton(config.candidate_count, dim, rng);
    let incumbent = state.incumbent().to_vec();
    let noise = Normal::new(0.0, config.perturbation_scale).expect("finite scale");
    for _ in 0..config.perturbations {
        pool.push(incumbent.iter().map(|&x| (x + noise.sample(rng)).clamp(0.0, 1.0)).collect());
    }
    let mut best = pool[0].clone();
    let mut best_score = f64::NEG_INFINITY;
    for c in pool {
        let s = state.ucb(&c, config.kappa);
        if s > best_score {
            best_score = s;
            best = c;
        }
    }
    best
}

/// Sequential BO state: observations so far plus the suggestion rule.
#[derive(Clone, Debug)]
pub struct BoState {
    pub config: BoConfig,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl BoState {
    pub fn new(config: BoConfig) -> Self {
        BoState { config, points: Vec::new(), values: Vec::new() }
    }

    /// Next unit-cube point; uniform until there is data or if the fit fails.
    pub fn suggest<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; DIM] {
        let raw = if self.points.is_empty() {
            (0..DIM).map(|_| rng.gen::<f64>()).collect()
        } else {
            match gp_fit(&self.points, &self.values, &self.config.hyper) {
                Ok(state) => ucb_suggest(&state, &self.config, rng),
                Err(err) => {
                    log::warn!("GP fit failed ({err}); drawing uniformly");
                    (0..DIM).map(|_| rng.gen::<f64>()).collect()
                }
            }
        };
        let mut out = [0.0; DIM];
        out.copy_from_slice(&raw);
        out
    }

    pub fn observe(&mut self, point: [f64; DIM], value: f64) {
        self.points.push(point.to_vec());
        self.values.push(value);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoRecord<T> {
    pub iteration: usize,
    pub fares: FareVector<T>,
    pub welfare: T,
    pub best_so_far: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoOutcome<T> {
    pub best: SecondStageSolution<T>,
    pub history: Vec<BoRecord<T>>,
}

/// Runs BO until the budget is exhausted (at least one evaluation).
pub fn bo_loop<T: Scalar, E: Evaluator<T>>(
    evaluator: &E,
    budget: &mut Budget,
    config: &BoConfig,
    seed: u64,
) -> Result<BoOutcome<T>, SolveError> {
    let bounds = *evaluator.instance().bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = BoState::new(config.clone());
    let mut history: Vec<BoRecord<T>> = Vec::new();
    let mut best: Option<SecondStageSolution<T>> = None;
    loop {
        let unit = state.suggest(&mut rng);
        let fares = bounds.from_unit(&unit);
        let sol = evaluator.evaluate(&fares)?;
        budget.charge(1);
        state.observe(bounds.to_unit(&fares), sol.welfare.total.as_f64());
        if best.as_ref().is_none_or(|b| sol.welfare.total > b.welfare.total) {
            best = Some(sol.clone());
        }
        let best_so_far = best.as_ref().expect("set above").welfare.total;
        history.push(BoRecord { iteration: history.len(), fares, welfare: sol.welfare.total, best_so_far });
        if budget.exhausted() {
            break;
        }
    }
    Ok(BoOutcome { best: best.expect("one evaluation"), history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_observation_is_interpolated() {
        let state = gp_fit(&[vec![0.3; 5]], &[4.2], &GpHyper::default()).unwrap();
        let (m, v) = state.predict(&[0.3; 5]);
        assert!((m - 4.2).abs() < 1e-6);
        assert!(v < 1e-6);
    }

    #[test]
    fn duplicate_points_fit_with_jitter() {
        let p = vec![vec![0.5; 5], vec![0.5; 5], vec![0.1; 5]];
        let state = gp_fit(&p, &[1.0, 1.0, 0.0], &GpHyper::default()).unwrap();
        let (m, _) = state.predict(&[0.5; 5]);
        assert!((m - 1.0).abs() < 1e-4);
    }

    #[test]
    fn kappa_zero_picks_highest_mean() {
        let p = vec![vec![0.2; 5], vec![0.8; 5]];
        let state = gp_fit(&p, &[0.0, 10.0], &GpHyper::default()).unwrap();
        let cfg = BoConfig { kappa: 0.0, perturbations: 0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = ucb_suggest(&state, &cfg, &mut rng);
        let pool = shifted_halton(cfg.candidate_count, 5, &mut ChaCha8Rng::seed_from_u64(1));
        let best = pool
            .iter()
            .map(|c| state.predict(c).0)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(state.predict(&x).0, best);
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn halton_points_lie_in_unit_cube() {
        let pts = shifted_halton(1024, 5, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(pts.len(), 1024);
        assert!(pts.iter().flatten().all(|v| (0.0..1.0).contains(v)));
        assert_eq!(radical_inverse(3, 2), 0.75);
    }
}
