mod common;

use common::{direct_welfare, load_fixture, random_instance, rel_err};
use fare_alliance::allocation::allocate;
use fare_alliance::choice::welfare;
use fare_alliance::descent::{ExactEvaluator, Evaluator};
use fare_alliance::model::Instance;
use fare_alliance::report::RunReport;
use fare_alliance::second_stage::{solve_exact, SecondStageConfig, SecondStageSolution};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn welfare_matches_direct_evaluation(seed in any::<u64>(), mask in any::<u16>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cats = rng.gen_range(1..=4);
        let inst = random_instance(&mut rng, 6, cats);
        let fares = inst.bounds().sample_uniform(&mut rng);
        let x: Vec<bool> = (0..cats).map(|j| mask >> j & 1 == 1).collect();
        let ours = welfare(&inst, &fares, &x).total;
        prop_assert!(rel_err(ours, direct_welfare(&inst, &fares, &x)) <= 1e-12);
    }

    #[test]
    fn exact_second_stage_dominates_every_activation(seed in any::<u64>(), mask in any::<u16>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cats = rng.gen_range(1..=6);
        let inst = random_instance(&mut rng, 6, cats);
        let fares = inst.bounds().sample_uniform(&mut rng);
        let best = solve_exact(&inst, &fares, &SecondStageConfig::default()).unwrap();
        let x: Vec<bool> = (0..cats).map(|j| mask >> j & 1 == 1).collect();
        let other = SecondStageSolution::evaluate(&inst, &fares, x, true);
        prop_assert!(best.welfare.total >= other.welfare.total - 1e-9 * other.welfare.total.abs().max(1.0));
    }

    #[test]
    fn allocation_balances_and_protects_mod(
        f_tr in 0.0f64..1e6,
        f_mod in 0.0f64..1e6,
        f_allied in 0.0f64..3e6,
    ) {
        let r = allocate(f_tr, f_mod, f_allied);
        prop_assert!(r.phi.mobility >= f_mod);
        prop_assert!((r.phi.transit + r.phi.mobility - f_allied).abs() <= 1e-9 * f_allied.max(1.0));
        if r.delta >= 0.0 {
            prop_assert!(r.phi.transit >= f_tr);
        }
    }

    #[test]
    fn instance_json_round_trip_keeps_hash(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 5, 3);
        let (back, ignored) = Instance::<f64>::from_json_str(&inst.to_json_string()).unwrap();
        prop_assert!(ignored.is_empty());
        prop_assert_eq!(back.content_hash(), inst.content_hash());
    }
}

#[test]
fn fixtures_validate() {
    for name in ["tiny.json", "desk.json", "large.json"] {
        let inst = load_fixture(name);
        assert_eq!(inst.validate(), vec![], "{name}");
    }
}

#[test]
fn report_survives_serialization_and_verifies() {
    let inst = load_fixture("tiny.json");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fares = inst.bounds().sample_uniform(&mut rng);
    let sol = ExactEvaluator::new(&inst).evaluate(&fares).unwrap();
    let report = RunReport::new(&inst, &sol, "eval", serde_json::json!({}), 3, 1, None);
    let text = serde_json::to_string(&report).unwrap();
    let back: RunReport<f64> = serde_json::from_str(&text).unwrap();
    back.verify(&inst).unwrap();

    let mut tampered = back.clone();
    tampered.welfare.total += 1.0;
    assert!(tampered.verify(&inst).is_err());
    let other = inst.with_weights(fare_alliance::ObjectiveWeights::new(0.0, 1.0, 0.0));
    assert!(back.verify(&other).is_err());
}
