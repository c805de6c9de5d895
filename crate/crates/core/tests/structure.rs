mod common;

use cs_aging::analysis::{self, MASS_TOL};
use cs_aging::model::{N_STATES, ROW_SUM_TOL};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_stochastic_and_sparse(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::params(&mut rng);
        prop_assert!(p.validate().is_empty());
        let tpm = p.transition_matrix().unwrap();
        for (i, s) in tpm.row_sums().iter().enumerate() {
            prop_assert!((s - 1.0).abs() <= ROW_SUM_TOL, "row {} sums to {}", i, s);
        }
        prop_assert!(tpm.pattern_violations().is_empty());
        prop_assert!(tpm.0.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn steady_state_is_a_distribution(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::params(&mut rng);
        let ss = analysis::steady_state(&p).unwrap();
        prop_assert!((ss.pi.sum() - 1.0).abs() < 1e-12);
        prop_assert!(ss.pi.iter().all(|v| *v >= 0.0));
        let a = ss.availability();
        prop_assert!(a > 0.0 && a < 1.0);
        let h = p.sojourn_times().unwrap();
        prop_assert!((0..N_STATES).all(|s| h.get(s).is_finite() && h.get(s) > 0.0));
        prop_assert!(analysis::mttf(&p).unwrap() > 0.0);
    }

    #[test]
    fn completion_law_has_unit_mass(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = common::params(&mut rng);
        let w = common::workload(&mut rng);
        let a = analysis::completion_lst_primary(&p, &w, 0.0).unwrap();
        let b = analysis::completion_lst_backup(&p, &w, 0.0).unwrap();
        prop_assert!((a - 1.0).abs() <= MASS_TOL, "Φ1(0) = {}", a);
        prop_assert!((b - 1.0).abs() <= MASS_TOL, "Φ2(0) = {}", b);
    }
}
