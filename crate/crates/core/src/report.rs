//! Self-describing run reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::choice::{operator_revenue, WelfareBreakdown};
use crate::error::ReportError;
use crate::model::{FareVector, Instance, OperatorKind, PerOperator};
use crate::scalar::Scalar;
use crate::second_stage::SecondStageSolution;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Outcome of one optimization run, with everything needed to rerun and
/// re-check it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport<T> {
    pub instance_hash: String,
    pub instance_name: Option<String>,
    pub algorithm: String,
    /// Echo of the full run configuration.
    pub config: serde_json::Value,
    pub seed: u64,
    pub fares: FareVector<T>,
    pub welfare: WelfareBreakdown<T>,
    pub activations: Vec<bool>,
    /// Customer price statistics over all routes.
    pub prices: PriceStats,
    /// Share of travellers using the allied network.
    pub utilization: f64,
    /// Expected riders by origin group (town).
    pub ridership_by_town: BTreeMap<String, f64>,
    /// Expected riders on the routes of each discount category.
    pub ridership_by_category: BTreeMap<String, f64>,
    /// Revenue kept by each operator from its own fare components.
    pub operator_revenue: PerOperator<T>,
    pub evaluations: usize,
    /// Absent when the report is meant to be byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

/// Route price statistics of a solution.
pub fn price_stats<T: Scalar>(sol: &SecondStageSolution<T>) -> PriceStats {
    let p: Vec<f64> = sol.prices.price.iter().map(|v| v.as_f64()).collect();
    if p.is_empty() {
        return PriceStats { min: 0.0, mean: 0.0, max: 0.0 };
    }
    PriceStats {
        min: p.iter().copied().fold(f64::INFINITY, f64::min),
        mean: p.iter().sum::<f64>() / p.len() as f64,
        max: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Demand-weighted share of travellers choosing an allied route.
pub fn utilization<T: Scalar>(instance: &Instance<T>, sol: &SecondStageSolution<T>) -> f64 {
    let mut riders = 0.0;
    let mut total = 0.0;
    for (p, s0) in instance.passenger_types().iter().zip(&sol.shares.outside) {
        let n = p.count.as_f64();
        riders += n * (1.0 - s0.as_f64());
        total += n;
    }
    if total > 0.0 {
        riders / total
    } else {
        0.0
    }
}

impl<T: Scalar> RunReport<T> {
    pub fn new(
        instance: &Instance<T>,
        sol: &SecondStageSolution<T>,
        algorithm: &str,
        config: serde_json::Value,
        seed: u64,
        evaluations: usize,
        wall_clock_seconds: Option<f64>,
    ) -> Self {
        let idx = instance.index();
        let mut by_town = BTreeMap::new();
        let mut by_category = BTreeMap::new();
        for (i, p) in instance.passenger_types().iter().enumerate() {
            let n = p.count.as_f64();
            let town = p.group.clone().unwrap_or_else(|| "all".into());
            *by_town.entry(town).or_insert(0.0) += n * (1.0 - sol.shares.outside[i].as_f64());
            for (&r, s) in idx.type_routes[i].iter().zip(&sol.shares.route[i]) {
                if let Some(a) = idx.route_category[r] {
                    let cat = &instance.categories()[a];
                    let key = cat.label.clone().unwrap_or_else(|| format!("category {}", cat.id.0));
                    *by_category.entry(key).or_insert(0.0) += n * s.as_f64();
                }
            }
        }
        let revenue = |k| operator_revenue(instance, &sol.fares, &sol.activations, k);
        RunReport {
            instance_hash: instance.content_hash(),
            instance_name: instance.name().map(str::to_string),
            algorithm: algorithm.to_string(),
            config,
            seed,
            fares: sol.fares,
            welfare: sol.welfare,
            activations: sol.activations.clone(),
            prices: price_stats(sol),
            utilization: utilization(instance, sol),
            ridership_by_town: by_town,
            ridership_by_category: by_category,
            operator_revenue: PerOperator::new(revenue(OperatorKind::Transit), revenue(OperatorKind::Mod)),
            evaluations,
            wall_clock_seconds,
        }
    }

    /// Re-evaluates the reported fares and activations on `instance` and
    /// checks the welfare to a relative 1e-9.
    pub fn verify(&self, instance: &Instance<T>) -> Result<(), ReportError> {
        let actual = instance.content_hash();
        if actual != self.instance_hash {
            return Err(ReportError::InstanceMismatch { reported: self.instance_hash.clone(), actual });
        }
        if self.activations.len() != instance.num_categories() {
            return Err(ReportError::ActivationLength {
                found: self.activations.len(),
                expected: instance.num_categories(),
            });
        }
        let again = SecondStageSolution::evaluate(instance, &self.fares, self.activations.clone(), true);
        let (reported, recomputed) = (self.welfare.total.as_f64(), again.welfare.total.as_f64());
        if (reported - recomputed).abs() > 1e-9 * recomputed.abs().max(1.0) {
            return Err(ReportError::WelfareMismatch { reported, recomputed });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::sample_parts;
    use crate::second_stage::{solve, SecondStageConfig};

    #[test]
    fn report_verifies_and_detects_tampering() {
        let inst = Instance::from_parts(sample_parts());
        let f = FareVector { base: PerOperator::new(2.0, 3.0), markup: PerOperator::new(0.1, 0.3), discount: 0.2 };
        let sol = solve(&inst, &f, &SecondStageConfig::default()).unwrap();
        let mut rep = RunReport::new(&inst, &sol, "eval", serde_json::json!({}), 0, 1, None);
        assert_eq!(rep.verify(&inst), Ok(()));
        assert!(rep.utilization > 0.0 && rep.utilization < 1.0);
        let riders: f64 = rep.ridership_by_town.values().sum();
        assert!((riders - rep.utilization * 140.0).abs() < 1e-9);
        let json = serde_json::to_string(&rep).unwrap();
        assert!(!json.contains("wall_clock"));
        rep.welfare.total += 1.0;
        assert!(matches!(rep.verify(&inst), Err(ReportError::WelfareMismatch { .. })));
    }
}
