#![allow(dead_code)]

use cs_aging::analysis::{RestartRoute, WorkloadSpec};
use cs_aging::model::{Branch, HostLaws, ModelParams};
use cs_aging::Distribution;
use rand::Rng;

/// A law of the given mean from a randomly chosen family.
pub fn law<R: Rng>(rng: &mut R, mean: f64, allow_det: bool) -> Distribution {
    let pick = rng.random_range(0..if allow_det { 4 } else { 3 });
    match pick {
        0 => Distribution::Exponential { rate: 1.0 / mean },
        1 => {
            let shape = rng.random_range(2..=5u32);
            Distribution::Erlang { rate: f64::from(shape) / mean, shape }
        }
        2 => {
            let share = rng.random_range(0.1..0.9);
            Distribution::Hypoexponential { rate1: 1.0 / (share * mean), rate2: 1.0 / ((1.0 - share) * mean) }
        }
        _ => Distribution::Deterministic { offset: mean },
    }
}

pub fn host<R: Rng>(rng: &mut R) -> HostLaws {
    let mut draw = |lo: f64, hi: f64, det: bool, log: bool| {
        let m = rng.random_range(lo..hi);
        law(rng, if log { 10f64.powf(m) } else { m }, det)
    };
    HostLaws {
        failure_idle: draw(2.3, 3.5, false, true),
        failure_migration: draw(2.3, 3.5, false, true),
        failure_fixing: draw(2.3, 3.5, false, true),
        failure_reboot: draw(2.3, 3.5, false, true),
        aging: draw(2.0, 3.5, true, true),
        fixing: draw(0.2, 5.0, true, false),
        reboot: draw(0.02, 0.5, true, false),
    }
}

pub fn branch<R: Rng>(rng: &mut R) -> Branch {
    let (u, v): (f64, f64) = (rng.random(), rng.random());
    let (lo, hi) = (u.min(v), u.max(v));
    Branch { c1: lo, c2: hi - lo, c3: 1.0 - hi }
}

/// Random model across every family, deterministic triggers.
pub fn params<R: Rng>(rng: &mut R) -> ModelParams {
    let mut triggers = [Distribution::Deterministic { offset: 0.0 }; 6];
    for t in &mut triggers {
        *t = Distribution::Deterministic { offset: rng.random_range(0.0..100.0) };
    }
    let (primary, backup) = (host(rng), host(rng));
    let m = rng.random_range(0.002..0.05);
    let migration = law(rng, m, true);
    ModelParams { primary, backup, migration, triggers, branch: branch(rng) }
}

pub fn exponential_params<R: Rng>(rng: &mut R) -> ModelParams {
    fn exp<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Distribution {
        Distribution::Exponential { rate: 1.0 / 10f64.powf(rng.random_range(lo..hi)) }
    }
    fn host<R: Rng>(rng: &mut R) -> HostLaws {
        HostLaws {
            aging: exp(rng, 2.0, 3.5),
            failure_idle: exp(rng, 2.3, 3.5),
            failure_migration: exp(rng, 2.3, 3.5),
            failure_fixing: exp(rng, 2.3, 3.5),
            failure_reboot: exp(rng, 2.3, 3.5),
            fixing: exp(rng, -0.7, 0.7),
            reboot: exp(rng, -1.7, -0.3),
        }
    }
    let (primary, backup) = (host(rng), host(rng));
    let migration = exp(rng, -2.7, -1.3);
    let mut triggers = [Distribution::Deterministic { offset: 0.0 }; 6];
    for t in &mut triggers {
        *t = exp(rng, 0.0, 2.0);
    }
    ModelParams { primary, backup, migration, triggers, branch: branch(rng) }
}

pub fn workload<R: Rng>(rng: &mut R) -> WorkloadSpec {
    let x = rng.random_range(20.0..400.0);
    let mut w = WorkloadSpec::new(x, rng.random_range(0.3..1.0));
    w.x1 = rng.random_range(0.0..x);
    w.b1 = rng.random();
    w.b2 = 1.0 - w.b1;
    if rng.random_bool(0.5) {
        w.t1 = Some(rng.random_range(0.0..100.0));
    }
    if rng.random_bool(0.3) {
        w.restart_route = RestartRoute::Backup;
    }
    w
}
