//! Communication/sensing rate regions for ISAC and the FDSAC baseline.

use serde::Serialize;

use crate::comm::{ergodic_sum_rate, fdsac_comm_rate, slot_noise};
use crate::config::{ConfigError, SystemConfig};
use crate::sensing::{fdsac_sensing_rate, optimal_allocation, sensing_rate};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRegionPoint {
    pub comm_rate: f64,
    pub sens_rate: f64,
    /// `isac`, `fdsac:<alpha>` or `isac:<beta>`.
    pub label: String,
}

impl RateRegionPoint {
    /// Componentwise ≤ `other` up to `slack`.
    pub fn dominated_by(&self, other: &RateRegionPoint, slack: f64) -> bool {
        self.comm_rate <= other.comm_rate + slack && self.sens_rate <= other.sens_rate + slack
    }
}

/// Corners of the rectangles whose union is the FDSAC region, and the
/// Pareto-optimal subset of those corners.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdsacRegion {
    pub corners: Vec<RateRegionPoint>,
    pub frontier: Vec<RateRegionPoint>,
}

fn check_fraction(name: &str, v: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} value {v} outside [0, 1]")))
    }
}

/// Slot-averaged sum rate (1/L) Σ_i R̄_i under the optimal waveform.
pub fn slot_averaged_sum_rate(cfg: &SystemConfig) -> Result<f64, ConfigError> {
    let wf = optimal_allocation(cfg)?;
    let mut total = 0.0;
    for slot in 1..=cfg.waveform_len {
        total += ergodic_sum_rate(cfg, &slot_noise(cfg, &wf, slot)?);
    }
    Ok(total / cfg.waveform_len as f64)
}

/// Corner of the ISAC rectangle.
pub fn isac_region(cfg: &SystemConfig) -> Result<RateRegionPoint, ConfigError> {
    Ok(RateRegionPoint {
        comm_rate: slot_averaged_sum_rate(cfg)?,
        sens_rate: sensing_rate(cfg)?,
        label: "isac".into(),
    })
}

pub fn fdsac_region(cfg: &SystemConfig, alpha_grid: &[f64]) -> Result<FdsacRegion, ConfigError> {
    let mut corners = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        check_fraction("alpha", alpha)?;
        corners.push(RateRegionPoint {
            comm_rate: fdsac_comm_rate(cfg, alpha)?,
            sens_rate: fdsac_sensing_rate(cfg, alpha)?,
            label: format!("fdsac:{alpha}"),
        });
    }
    let frontier = pareto_frontier(&corners);
    Ok(FdsacRegion { corners, frontier })
}

/// Points not dominated by any other, ordered by increasing comm rate.
pub fn pareto_frontier(points: &[RateRegionPoint]) -> Vec<RateRegionPoint> {
    let mut sorted: Vec<&RateRegionPoint> = points.iter().collect();
    sorted.sort_by(|a, b| {
        b.comm_rate
            .total_cmp(&a.comm_rate)
            .then(b.sens_rate.total_cmp(&a.sens_rate))
    });
    let mut frontier = Vec::new();
    let mut best_sens = f64::NEG_INFINITY;
    for p in sorted {
        if p.sens_rate > best_sens {
            best_sens = p.sens_rate;
            frontier.push(p.clone());
        }
    }
    frontier.reverse();
    frontier
}

/// ISAC corners with the sensing budget tied to p_s = β p_c.
pub fn isac_beta_region(cfg: &SystemConfig, beta_grid: &[f64]) -> Result<Vec<RateRegionPoint>, ConfigError> {
    beta_grid
        .iter()
        .map(|&beta| {
            check_fraction("beta", beta)?;
            let c = cfg.clone().with_p_s(beta * cfg.p_c);
            let mut p = isac_region(&c)?;
            p.label = format!("isac:{beta}");
            Ok(p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::SlotNoiseModel;

    fn grid(step: f64) -> Vec<f64> {
        let n = (1.0 / step).round() as usize;
        (0..=n).map(|i| (i as f64 * step * 1e9).round() / 1e9).collect()
    }

    #[test]
    fn isac_corner_reference() {
        let p = isac_region(&SystemConfig::default()).unwrap();
        assert!((p.sens_rate - 7.541_075).abs() < 1e-5);
        assert!((p.comm_rate - 6.017_04).abs() < 1e-4);
    }

    #[test]
    fn no_radar_power_means_clean_slots() {
        let cfg = SystemConfig::default().with_p_s(0.0);
        let p = isac_region(&cfg).unwrap();
        assert_eq!(p.sens_rate, 0.0);
        let clean = ergodic_sum_rate(&cfg, &SlotNoiseModel::interference_free(&cfg));
        assert!((p.comm_rate - clean).abs() < 1e-12);
    }

    #[test]
    fn fdsac_endpoints() {
        let cfg = SystemConfig::default();
        let r = fdsac_region(&cfg, &[0.0, 1.0]).unwrap();
        assert_eq!(r.corners[0].comm_rate, 0.0);
        assert!((r.corners[0].sens_rate - sensing_rate(&cfg).unwrap()).abs() < 1e-12);
        assert_eq!(r.corners[1].sens_rate, 0.0);
        let full = ergodic_sum_rate(&cfg, &SlotNoiseModel::interference_free(&cfg));
        assert!((r.corners[1].comm_rate - full).abs() < 1e-12);
        assert!(fdsac_region(&cfg, &[1.2]).is_err());
    }

    #[test]
    fn frontier_is_monotone_staircase() {
        let r = fdsac_region(&SystemConfig::default(), &grid(0.05)).unwrap();
        assert!(!r.frontier.is_empty());
        for w in r.frontier.windows(2) {
            assert!(w[0].comm_rate < w[1].comm_rate);
            assert!(w[0].sens_rate > w[1].sens_rate);
        }
        for c in &r.corners {
            assert!(r.frontier.iter().any(|f| c.dominated_by(f, 1e-12)));
        }
    }

    #[test]
    fn pareto_drops_dominated() {
        let pt = |c: f64, s: f64| RateRegionPoint {
            comm_rate: c,
            sens_rate: s,
            label: String::new(),
        };
        let f = pareto_frontier(&[pt(1.0, 1.0), pt(2.0, 0.5), pt(0.5, 0.5), pt(1.0, 0.9)]);
        assert_eq!(f, vec![pt(1.0, 1.0), pt(2.0, 0.5)]);
    }

    #[test]
    fn beta_sweep_is_monotone() {
        let pts = isac_beta_region(&SystemConfig::default(), &grid(0.1)).unwrap();
        assert_eq!(pts[0].sens_rate, 0.0);
        for w in pts.windows(2) {
            assert!(w[1].comm_rate <= w[0].comm_rate);
            assert!(w[1].sens_rate >= w[0].sens_rate);
        }
        assert_eq!(pts[3].label, "isac:0.3");
    }
}
