mod common;

use cs_aging::analysis;
use cs_aging::model::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FACTORS: [f64; 3] = [0.5, 2.0, 24.0];

fn check(p: &ModelParams, w: &analysis::WorkloadSpec) {
    let tpm = p.transition_matrix().unwrap();
    let a = analysis::availability(p).unwrap();
    let m = analysis::mttf(p).unwrap();
    let c = analysis::completion_time(p, w).unwrap();
    for k in FACTORS {
        let q = p.time_scaled(k);
        let wq = w.time_scaled(k);
        let diff = (q.transition_matrix().unwrap().0 - &tpm.0).abs().max();
        assert!(diff <= 1e-10, "k={k}: kernel moved by {diff:e}");
        let da = (analysis::availability(&q).unwrap() - a).abs();
        assert!(da <= 1e-10, "k={k}: availability moved by {da:e}");
        let rm = (analysis::mttf(&q).unwrap() * k / m - 1.0).abs();
        assert!(rm <= 1e-8, "k={k}: MTTF relative error {rm:e}");
        let rc = (analysis::completion_time(&q, &wq).unwrap() * k / c - 1.0).abs();
        assert!(rc <= 1e-8, "k={k}: completion relative error {rc:e}");
    }
}

#[test]
fn default_model_is_unit_free() {
    check(&ModelParams::hypo_failure_defaults(30.0), &analysis::WorkloadSpec::new(200.0, 1.0));
    check(&ModelParams::exponential_defaults(0.0), &analysis::WorkloadSpec::new(50.0, 0.7));
}

#[test]
fn random_models_are_unit_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let p = common::params(&mut rng);
        let w = common::workload(&mut rng);
        check(&p, &w);
    }
}
