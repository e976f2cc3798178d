mod common;

use ph_loewner::passive::{self, IdentifyOptions};
use ph_loewner::tangential::{self, DirectionPolicy, PartitionPolicy, SamplingPlan};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn plan(n: usize, m: usize, seed: u64) -> SamplingPlan {
    SamplingPlan::new(tangential::log_grid(-1.0, 1.5, 2 * (n + m) + 8), DirectionPolicy::RandomUnit { seed }, PartitionPolicy::Alternate).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn shift_size_does_not_change_the_model(seed in 0u64..1000, n in 2usize..10, m in 1usize..3, delta in 0.5f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = common::random_ph(&mut rng, n, m, false);
        let plan = plan(n, m, seed);
        let (r, l) = tangential::sample_data(&sys, &plan).unwrap();
        let a = passive::identify_ph(&r, &l, &IdentifyOptions::shifted(delta, m)).unwrap();
        let b = passive::identify_ph(&r, &l, &IdentifyOptions::shifted(2.0 * delta, m)).unwrap();
        let gap = common::rel_error(&a.ph, &b.ph, &plan.omega);
        prop_assert!(gap <= 1e-6, "models differ by {gap:.2e}");
    }

    #[test]
    fn strictly_passive_output_keeps_the_structure(seed in 0u64..1000, n in 2usize..12, m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = common::random_ph(&mut rng, n, m, true);
        let plan = plan(n, m, seed);
        let (r, l) = tangential::sample_data(&sys, &plan).unwrap();
        let id = passive::identify_ph(&r, &l, &IdentifyOptions::default()).unwrap();
        prop_assert_eq!(id.ph.order(), n);
        prop_assert!(common::j_skew_defect(&id.ph) <= 1e-10);
        prop_assert!(common::dissipation_min_eig(&id.ph) >= -1e-10);
        prop_assert!(common::rel_error(&id.ph, &sys, &plan.omega) <= 1e-8);
    }
}
