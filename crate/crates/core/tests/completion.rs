mod common;

use cs_aging::analysis::{self, RestartRoute, WorkloadSpec};
use cs_aging::model::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn faster_rejuvenation_never_slows_completion() {
    let p = ModelParams::hypo_failure_defaults(30.0);
    for trigger in [0.0, 50.0, 120.0] {
        let mut last = f64::INFINITY;
        for i in 1..=10 {
            let mut w = WorkloadSpec::new(200.0, f64::from(i) / 10.0);
            w.t1 = Some(trigger);
            let mut q = p;
            q.set_primary_triggers(trigger);
            let e = analysis::completion_time(&q, &w).unwrap();
            assert!(e <= last * (1.0 + 1e-12), "r1={} gives {e} after {last}", w.r1);
            last = e;
        }
    }
}

#[test]
fn derivative_routes_agree_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = common::params(&mut rng);
        let w = common::workload(&mut rng);
        let fd = analysis::completion_time(&p, &w).unwrap();
        let an = analysis::completion_time_analytic(&p, &w).unwrap();
        assert!((fd / an - 1.0).abs() <= 1e-5, "{fd} vs {an}");
    }
}

#[test]
fn routes_differ_only_in_backup_restart() {
    let p = ModelParams::hypo_failure_defaults(30.0);
    let mut w = WorkloadSpec::new(200.0, 1.0);
    w.b1 = 0.0;
    w.b2 = 1.0;
    let printed = analysis::completion_time(&p, &w).unwrap();
    w.restart_route = RestartRoute::Backup;
    let own = analysis::completion_time(&p, &w).unwrap();
    assert!(printed.is_finite() && own.is_finite());
    assert!((printed - own).abs() > 1e-9);
    w.b1 = 1.0;
    w.b2 = 0.0;
    let a = analysis::completion_time(&p, &w).unwrap();
    w.restart_route = RestartRoute::Primary;
    let b = analysis::completion_time(&p, &w).unwrap();
    assert!((a - b).abs() <= 1e-9 * a);
}
