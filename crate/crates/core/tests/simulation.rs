use cs_aging::analysis;
use cs_aging::model::{ModelParams, N_STATES};
use cs_aging::simulator::{self, SimConfig};
use cs_aging::Distribution;

/// Fast-cycling model so short runs visit every state many times.
fn busy() -> ModelParams {
    let mut p = ModelParams::exponential_defaults(5.0);
    for (i, host) in [&mut p.primary, &mut p.backup].into_iter().enumerate() {
        host.aging = Distribution::Exponential { rate: 1.0 / 20.0 };
        host.set_failure(Distribution::Exponential { rate: 1.0 / (40.0 + 10.0 * i as f64) });
        host.fixing = Distribution::Exponential { rate: 1.0 / 3.0 };
    }
    p
}

fn config(reps: usize, seed: u64) -> SimConfig {
    SimConfig { availability_horizon: 1.1e4, warmup: 1e3, ..SimConfig::new(reps, seed) }
}

#[test]
fn occupancy_matches_steady_state() {
    let p = busy();
    let pi = analysis::steady_state(&p).unwrap().pi;
    let est = simulator::simulate_occupancy(&p, &config(200, 1)).unwrap();
    assert_eq!(est.len(), N_STATES);
    for (s, e) in est.iter().enumerate() {
        assert!(
            (e.mean - pi[s]).abs() <= 3.0 * e.std_error + 1e-12,
            "L{s}: simulated {} ± {} vs {}",
            e.mean,
            e.std_error,
            pi[s]
        );
    }
}

#[test]
fn interval_narrows_with_replications() {
    let p = busy();
    let small = simulator::simulate_availability(&p, &config(100, 2)).unwrap();
    let large = simulator::simulate_availability(&p, &config(400, 2)).unwrap();
    let ratio = large.half_width() / small.half_width();
    assert!((0.4..=0.6).contains(&ratio), "half-width ratio {ratio}");
}

#[test]
fn availability_interval_coverage() {
    let p = busy();
    let truth = analysis::availability(&p).unwrap();
    let runs = 200;
    let cfg = |seed| SimConfig { availability_horizon: 3e3, warmup: 5e2, ..SimConfig::new(30, seed) };
    let hits = (0..runs)
        .filter(|&seed| simulator::simulate_availability(&p, &cfg(1000 + seed)).unwrap().contains(truth))
        .count();
    let coverage = hits as f64 / runs as f64;
    assert!((0.90..=0.99).contains(&coverage), "coverage {coverage}");
}

#[test]
fn mttf_estimate_covers_analytic() {
    let p = busy();
    let truth = analysis::mttf(&p).unwrap();
    let e = simulator::simulate_mttf(&p, &SimConfig::new(4000, 9)).unwrap();
    assert_eq!(e.censored, 0);
    assert!((e.mean - truth).abs() <= 3.0 * e.std_error, "{} ± {} vs {truth}", e.mean, e.std_error);
}

#[test]
fn completion_estimate_covers_analytic() {
    let p = ModelParams::hypo_failure_defaults(30.0);
    let w = analysis::WorkloadSpec::new(200.0, 1.0);
    let truth = analysis::completion_time(&p, &w).unwrap();
    let e = simulator::simulate_completion(&p, &w, &SimConfig::new(20000, 4)).unwrap();
    assert!((e.mean - truth).abs() <= 3.0 * e.std_error, "{} ± {} vs {truth}", e.mean, e.std_error);
}

#[test]
fn replays_are_identical() {
    let p = busy();
    let a = simulator::simulate_mttf(&p, &SimConfig::new(50, 77)).unwrap();
    let b = simulator::simulate_mttf(&p, &SimConfig::new(50, 77)).unwrap();
    assert_eq!(a, b);
    let c = simulator::simulate_mttf(&p, &SimConfig::new(50, 78)).unwrap();
    assert_ne!(a.mean, c.mean);
}
