use isacperf_core::comm::{ClosedForm, CommModel, OutageSet, RateSet, SlotNoiseModel};
use isacperf_core::config::{GroupGains, TargetRates};
use isacperf_core::montecarlo::McOptions;
use isacperf_core::run_config::RunConfig;
use isacperf_core::validate::validate;

/// Near-user outage evaluated with the sign of ε flipped; everything else is
/// the genuine closed form.
struct FlippedEps;

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

impl CommModel for FlippedEps {
    fn outage(&self, noise: &SlotNoiseModel, gains: GroupGains, targets: &TargetRates, t: u32) -> OutageSet {
        let thr = targets.threshold_near();
        let c = thr / (gains.near * noise.rho);
        let b = -gains.eps() * thr;
        let mut success = 0.0;
        for l in 0..=noise.n_k {
            for n in 0..=l {
                let k = l - n;
                success += (-c).exp() * c.powi(k as i32) * (-ln_factorial(k)).exp() * b.powi(n as i32)
                    / (1.0 + b).powi(n as i32 + 1);
            }
        }
        OutageSet {
            near: (1.0 - success).clamp(0.0, 1.0),
            ..ClosedForm.outage(noise, gains, targets, t)
        }
    }

    fn ergodic(&self, noise: &SlotNoiseModel, gains: GroupGains, t: u32) -> RateSet {
        ClosedForm.ergodic(noise, gains, t)
    }
}

fn smoke_config() -> RunConfig {
    let mut run = RunConfig::default();
    run.p_c_db_grid = vec![0.0, 10.0, 20.0, 30.0];
    run
}

#[test]
fn genuine_model_passes_smoke_run() {
    let r = validate(&smoke_config(), &ClosedForm, &McOptions::new(10_000, 1)).unwrap();
    assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
}

#[test]
fn flipped_eps_is_caught() {
    let r = validate(&smoke_config(), &FlippedEps, &McOptions::new(10_000, 1)).unwrap();
    assert!(!r.passed());
    let failed: Vec<_> = r.failures().map(|c| c.metric.as_str()).collect();
    assert!(failed.iter().all(|m| *m == "op_near"), "{failed:?}");
    assert!(failed.len() >= 8, "{failed:?}");
}
