//! Analytical-versus-simulation agreement report.

use crate::comm::{slot_noise, CommModel};
use crate::config::TargetRates;
use crate::montecarlo::{distribution_checks, estimate_interference, simulate_grid, McOptions, MonteCarloEstimate};
use crate::run_config::RunConfig;
use crate::sensing::{optimal_allocation, radar_interference_power};
use crate::table::{Cell, Table};
use crate::Error;

/// Relative tolerance on ergodic rates.
pub const ECR_REL_TOL: f64 = 0.015;
/// Relative tolerance on the mean radar interference power.
pub const INTERFERENCE_REL_TOL: f64 = 0.01;
pub const KS_TOL_GAMMA: f64 = 0.002;
pub const KS_TOL_EXP: f64 = 0.002;
pub const KS_TOL_MIXTURE: f64 = 0.003;
pub const CORRELATION_TOL: f64 = 0.005;
/// Allowed singular channel draws per million trials.
pub const RESAMPLES_PER_MILLION: f64 = 10.0;

/// Absolute floor on outage-probability disagreement.
const OUTAGE_ABS_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub metric: String,
    pub group: Option<usize>,
    pub slot: Option<usize>,
    pub p_c_db: Option<f64>,
    pub analytical: f64,
    pub empirical: f64,
    pub std_error: f64,
    /// Largest accepted |analytical − empirical|.
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub trials: u64,
    pub resamples: u64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new([
            "metric",
            "group",
            "slot",
            "p_c_db",
            "analytical",
            "empirical",
            "std_error",
            "tolerance",
            "verdict",
        ]);
        let opt_usize = |v: Option<usize>| v.map_or(Cell::Text(String::new()), |x| Cell::Text(x.to_string()));
        for c in &self.checks {
            t.push(vec![
                c.metric.clone().into(),
                opt_usize(c.group),
                opt_usize(c.slot),
                c.p_c_db.map_or(Cell::Text(String::new()), Cell::Num),
                c.analytical.into(),
                c.empirical.into(),
                c.std_error.into(),
                c.tolerance.into(),
                if c.passed { "pass" } else { "fail" }.into(),
            ]);
        }
        t
    }
}

fn check(metric: &str, analytical: f64, e: &MonteCarloEstimate, tolerance: f64) -> Check {
    Check {
        metric: metric.to_string(),
        group: None,
        slot: None,
        p_c_db: None,
        analytical,
        empirical: e.mean,
        std_error: e.std_error,
        tolerance,
        passed: (analytical - e.mean).abs() <= tolerance,
    }
}

/// The standard error is the larger of the empirical one and the binomial
/// one implied by the analytical probability, so that a rare event seen zero
/// times is not judged with a zero error bar.
fn outage_check(metric: &str, analytical: f64, e: &MonteCarloEstimate) -> Check {
    let p = analytical.clamp(0.0, 1.0);
    let null_se = (p * (1.0 - p) / e.trials as f64).sqrt();
    check(metric, analytical, e, (3.0 * e.std_error.max(null_se)).max(OUTAGE_ABS_FLOOR))
}

/// Relative band, widened to 3 standard errors when the run is too short for
/// the band to be statistically meaningful.
fn rate_check(metric: &str, analytical: f64, e: &MonteCarloEstimate) -> Check {
    check(metric, analytical, e, (ECR_REL_TOL * e.mean.abs()).max(3.0 * e.std_error))
}

fn scalar_check(metric: &str, value: f64, tolerance: f64, samples: u64) -> Check {
    Check {
        metric: metric.to_string(),
        group: None,
        slot: None,
        p_c_db: None,
        analytical: 0.0,
        empirical: value,
        std_error: 0.0,
        tolerance,
        passed: value.abs() <= tolerance && samples > 0,
    }
}

/// 0.1% critical value of the one-sample KS statistic.
fn ks_critical(n: u64) -> f64 {
    1.95 / (n as f64).sqrt()
}

/// Compares `model` against simulation over the configured p_c grid and
/// slots, then checks the radar interference power per slot and the
/// distributions of the post-combining gains.
pub fn validate(run: &RunConfig, model: &dyn CommModel, opts: &McOptions) -> Result<ValidationReport, Error> {
    let cfg = &run.system;
    let wf = optimal_allocation(cfg)?;
    let targets: &TargetRates = &run.targets;
    let t = cfg.truncation;

    let mut labels = Vec::new();
    let mut pts = Vec::new();
    for &p_db in &run.p_c_db_grid {
        let c = run.system_at_p_c_db(p_db);
        for &slot in &run.slots {
            pts.push(slot_noise(&c, &wf, slot)?);
            labels.push((p_db, slot));
        }
    }
    let sim = simulate_grid(cfg, &pts, targets, opts)?;
    let mut checks = Vec::new();
    for ((noise, est), &(p_db, slot)) in pts.iter().zip(&sim.points).zip(&labels) {
        let mut sum_rate = 0.0;
        let mut local = Vec::new();
        for (g, (gains, e)) in cfg.groups.iter().zip(&est.groups).enumerate() {
            let op = model.outage(noise, *gains, targets, t);
            let ecr = model.ergodic(noise, *gains, t);
            sum_rate += ecr.group;
            for mut c in [
                outage_check("op_near", op.near, &e.outage_near),
                outage_check("op_far", op.far, &e.outage_far),
                outage_check("op_group", op.group, &e.outage_group),
                rate_check("ecr_near", ecr.near, &e.rate_near),
                rate_check("ecr_far", ecr.far, &e.rate_far),
                rate_check("ecr_group", ecr.group, &e.rate_group),
            ] {
                c.group = Some(g + 1);
                local.push(c);
            }
        }
        local.push(rate_check("sum_rate", sum_rate, &est.sum_rate));
        for mut c in local {
            c.slot = Some(slot);
            c.p_c_db = Some(p_db);
            checks.push(c);
        }
    }

    let eigen = cfg.rt_eigen();
    for &slot in &run.slots {
        let analytical = radar_interference_power(cfg, &wf, slot)?;
        let e = estimate_interference(cfg, &eigen, slot, opts)?;
        let tol = if analytical == 0.0 {
            0.0
        } else {
            (INTERFERENCE_REL_TOL * analytical).max(3.0 * e.std_error)
        };
        let mut c = check("interference", analytical, &e, tol);
        c.slot = Some(slot);
        checks.push(c);
    }

    let dist = distribution_checks(cfg, opts)?;
    let n = dist.samples;
    checks.push(scalar_check("ks_near_gain", dist.ks_near, KS_TOL_GAMMA.max(ks_critical(n)), n));
    checks.push(scalar_check("ks_far_gain", dist.ks_far, KS_TOL_EXP.max(ks_critical(n)), n));
    checks.push(scalar_check("ks_group_gain", dist.ks_mixture, KS_TOL_MIXTURE.max(ks_critical(n)), n));
    checks.push(scalar_check(
        "gain_correlation",
        dist.correlation,
        CORRELATION_TOL.max(3.0 / (n as f64).sqrt()),
        n,
    ));
    let resamples = sim.resamples + dist.resamples;
    checks.push(scalar_check(
        "singular_draws",
        resamples as f64,
        RESAMPLES_PER_MILLION * opts.trials as f64 / 1e6,
        n,
    ));
    Ok(ValidationReport {
        checks,
        trials: opts.trials,
        resamples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::ClosedForm;

    #[test]
    fn smoke_run_passes() {
        let mut run = RunConfig::default();
        run.p_c_db_grid = vec![0.0, 20.0];
        let r = validate(&run, &ClosedForm, &McOptions::new(10_000, 3)).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        // 2 p_c × 2 slots × (2 groups × 6 + 1) + 2 interference + 5 scalar
        assert_eq!(r.checks.len(), 2 * 2 * 13 + 2 + 5);
        assert_eq!(r.to_table().rows.len(), r.checks.len());
    }
}
