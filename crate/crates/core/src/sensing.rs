//! Sensing-rate maximisation by water-filling over the eigenmodes of the
//! transmit correlation matrix, plus the waveform it implies and the
//! radar interference that waveform leaves on each time slot.

use num_complex::Complex64;

use crate::config::{ConfigError, SystemConfig};
use crate::linalg::{log2_det_identity_plus, ComplexMatrix, HermitianEigen, LinalgError};

/// Optimal power allocation over the eigenmodes of R_T.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFillingSolution {
    /// s_m*, aligned with the eigenvalue order passed in.
    pub allocations: Vec<f64>,
    /// 1/ν.
    pub water_level: f64,
    pub active_count: usize,
    /// Σ log₂(1 + λ_m s_m*), i.e. the sensing rate before the N/L factor.
    pub mode_capacity: f64,
}

/// Water-filling s_m = max(0, 1/ν − 1/λ_m) with Σ s_m = p_s.
///
/// Uses the active-set construction: with eigenvalues sorted descending the
/// active set is the largest prefix whose closed-form level
/// (p_s + Σ 1/λ)/|active| stays above 1/λ of its weakest member.
pub fn water_filling(eigenvalues: &[f64], p_s: f64) -> Result<WaterFillingSolution, ConfigError> {
    if eigenvalues.is_empty() {
        return Err(ConfigError::Invalid("water filling needs at least one eigenvalue".into()));
    }
    if eigenvalues.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(ConfigError::Invalid("eigenvalues must be positive and finite".into()));
    }
    if !(p_s >= 0.0) || !p_s.is_finite() {
        return Err(ConfigError::Invalid(format!("sensing power must be >= 0, got {p_s}")));
    }
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));

    let mut inv_prefix = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += 1.0 / eigenvalues[i];
        inv_prefix.push(acc);
    }

    let mut active = 0;
    let mut level = 1.0 / eigenvalues[order[0]];
    for k in (1..=order.len()).rev() {
        let candidate = (p_s + inv_prefix[k - 1]) / k as f64;
        if candidate > 1.0 / eigenvalues[order[k - 1]] {
            active = k;
            level = candidate;
            break;
        }
    }

    let mut allocations = vec![0.0; eigenvalues.len()];
    for &i in order.iter().take(active) {
        allocations[i] = (level - 1.0 / eigenvalues[i]).max(0.0);
    }
    let mode_capacity = eigenvalues
        .iter()
        .zip(&allocations)
        .map(|(l, s)| (1.0 + l * s).log2())
        .sum();
    Ok(WaterFillingSolution {
        allocations,
        water_level: level,
        active_count: active,
        mode_capacity,
    })
}

/// Water-filling solution for the configured eigenvalues and sensing budget.
pub fn optimal_allocation(cfg: &SystemConfig) -> Result<WaterFillingSolution, ConfigError> {
    water_filling(&cfg.rt_eigenvalues, cfg.p_s)
}

fn rate_scale(cfg: &SystemConfig) -> f64 {
    cfg.n_rx as f64 / cfg.waveform_len as f64
}

/// (N/L) Σ log₂(1 + λ_m s_m*).
pub fn sensing_rate(cfg: &SystemConfig) -> Result<f64, ConfigError> {
    Ok(rate_scale(cfg) * optimal_allocation(cfg)?.mode_capacity)
}

/// High-SNR law (NM/L)(log₂ p_s + (1/M) Σ log₂(λ_m/M)).
pub fn sensing_rate_high_snr(cfg: &SystemConfig) -> f64 {
    let m = cfg.rt_eigenvalues.len() as f64;
    let mean_log: f64 = cfg.rt_eigenvalues.iter().map(|l| (l / m).log2()).sum::<f64>() / m;
    rate_scale(cfg) * m * (cfg.p_s.log2() + mean_log)
}

/// N log₂(1 + p_s/N): the sensing rate for R_T = I with L = M = N.
pub fn sensing_rate_identity(n: usize, p_s: f64) -> f64 {
    let n = n as f64;
    n * (p_s / n).ln_1p() / std::f64::consts::LN_2
}

/// Rate of the orthogonal design S S^H = (p_s/M) I.
pub fn orthogonal_waveform_rate(cfg: &SystemConfig) -> f64 {
    let m = cfg.rt_eigenvalues.len() as f64;
    rate_scale(cfg)
        * cfg
            .rt_eigenvalues
            .iter()
            .map(|l| (1.0 + l * cfg.p_s / m).log2())
            .sum::<f64>()
}

/// Sensing rate when a fraction `alpha` of the band goes to communications:
/// (1−α)·(N/L) max log₂det(I + S^H R_T S/(1−α)), i.e. water-filling on λ/(1−α)
/// scaled by (1−α).
pub fn fdsac_sensing_rate(cfg: &SystemConfig, alpha: f64) -> Result<f64, ConfigError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ConfigError::Invalid(format!("bandwidth fraction {alpha} outside [0, 1]")));
    }
    let radar_share = 1.0 - alpha;
    if radar_share == 0.0 {
        return Ok(0.0);
    }
    let scaled: Vec<f64> = cfg.rt_eigenvalues.iter().map(|l| l / radar_share).collect();
    let wf = water_filling(&scaled, cfg.p_s)?;
    Ok(radar_share * rate_scale(cfg) * wf.mode_capacity)
}

/// Radar waveform S ∈ C^{M×L}.
#[derive(Debug, Clone)]
pub struct WaveformMatrix {
    pub s: ComplexMatrix,
}

impl WaveformMatrix {
    /// tr(S S^H).
    pub fn power(&self) -> f64 {
        self.s.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// s_i for 1-based slot i.
    pub fn slot(&self, slot: usize) -> Vec<Complex64> {
        self.s.column(slot - 1)
    }

    pub fn len(&self) -> usize {
        self.s.cols()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Canonical optimal waveform S = V (Δ*)^{1/2} [I_M | 0], with V the
/// eigenvector columns of R_T. Slot i ≤ M excites eigenmode i only; slots
/// beyond M are silent.
pub fn optimal_waveform(cfg: &SystemConfig, eigen: &HermitianEigen) -> Result<WaveformMatrix, ConfigError> {
    let m = eigen.values.len();
    let l = cfg.waveform_len;
    if l < m {
        return Err(ConfigError::Invalid(format!("waveform length {l} shorter than M={m}")));
    }
    let wf = water_filling(&eigen.values, cfg.p_s)?;
    let s = ComplexMatrix::from_fn(m, l, |r, c| {
        if c < m {
            eigen.vectors[(r, c)] * wf.allocations[c].sqrt()
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    Ok(WaveformMatrix { s })
}

/// Orthogonal waveform with S S^H = (p_s/M) I: √(p_s/M) [I_M | 0].
pub fn orthogonal_waveform(cfg: &SystemConfig) -> WaveformMatrix {
    let m = cfg.rt_eigenvalues.len();
    let amp = (cfg.p_s / m as f64).sqrt();
    let s = ComplexMatrix::from_fn(m, cfg.waveform_len, |r, c| {
        if r == c {
            Complex64::new(amp, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    WaveformMatrix { s }
}

/// (N/L) log₂det(I_L + S^H R_T S) for an arbitrary waveform.
pub fn waveform_sensing_rate(
    n_rx: usize,
    r_t: &ComplexMatrix,
    waveform: &WaveformMatrix,
) -> Result<f64, LinalgError> {
    let sh = waveform.s.adjoint();
    let gram = &(&sh * r_t) * &waveform.s;
    Ok(n_rx as f64 / waveform.len() as f64 * log2_det_identity_plus(&gram)?)
}

/// E|w^H G^H s_i|² under the optimal waveform: s_i* λ_i for i ≤ M, else 0.
pub fn radar_interference_power(
    cfg: &SystemConfig,
    wf: &WaterFillingSolution,
    slot: usize,
) -> Result<f64, ConfigError> {
    if slot == 0 || slot > cfg.waveform_len {
        return Err(ConfigError::SlotOutOfRange {
            slot,
            len: cfg.waveform_len,
        });
    }
    Ok(if slot <= wf.allocations.len() {
        wf.allocations[slot - 1] * cfg.rt_eigenvalues[slot - 1]
    } else {
        0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: [f64; 4] = [5.0, 2.0, 1.0, 0.5];

    #[test]
    fn all_modes_active_closed_form() {
        let wf = water_filling(&LAMBDA, 10.0).unwrap();
        let level = (10.0 + LAMBDA.iter().map(|l| 1.0 / l).sum::<f64>()) / 4.0;
        assert!((level - 3.425).abs() < 1e-12);
        assert!((wf.water_level - level).abs() < 1e-12);
        for (s, want) in wf.allocations.iter().zip([3.225, 2.925, 2.425, 1.425]) {
            assert!((s - want).abs() < 1e-12);
        }
        assert_eq!(wf.active_count, 4);
    }

    // Oracle: enumerate every active set, keep the one satisfying KKT.
    fn active_set_oracle(lambda: &[f64], p: f64) -> Vec<f64> {
        let m = lambda.len();
        for mask in 1u32..(1 << m) {
            let act: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            let level = (p + act.iter().map(|&i| 1.0 / lambda[i]).sum::<f64>()) / act.len() as f64;
            let ok = (0..m).all(|i| {
                if act.contains(&i) {
                    level > 1.0 / lambda[i]
                } else {
                    level <= 1.0 / lambda[i]
                }
            });
            if ok {
                return (0..m)
                    .map(|i| if act.contains(&i) { level - 1.0 / lambda[i] } else { 0.0 })
                    .collect();
            }
        }
        vec![0.0; m]
    }

    #[test]
    fn low_power_single_mode() {
        let wf = water_filling(&LAMBDA, 0.1).unwrap();
        let oracle = active_set_oracle(&LAMBDA, 0.1);
        assert_eq!(wf.active_count, 1);
        for (a, b) in wf.allocations.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((wf.allocations[0] - 0.1).abs() < 1e-14);
        assert!((wf.water_level - 0.3).abs() < 1e-14);
    }

    #[test]
    fn single_mode_takes_everything() {
        for &p in &[0.0, 0.3, 7.0] {
            let wf = water_filling(&[2.7], p).unwrap();
            assert!((wf.allocations[0] - p).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_power_is_silent() {
        let wf = water_filling(&LAMBDA, 0.0).unwrap();
        assert!(wf.allocations.iter().all(|&s| s == 0.0));
        assert_eq!(wf.active_count, 0);
        let cfg = SystemConfig::default().with_p_s(0.0);
        assert_eq!(sensing_rate(&cfg).unwrap(), 0.0);
        assert_eq!(orthogonal_waveform_rate(&cfg), 0.0);
    }

    #[test]
    fn unsorted_input_keeps_alignment() {
        let shuffled = [1.0, 5.0, 0.5, 2.0];
        let wf = water_filling(&shuffled, 10.0).unwrap();
        for (s, want) in wf.allocations.iter().zip([2.425, 3.225, 1.425, 2.925]) {
            assert!((s - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_nonpositive_eigenvalues() {
        assert!(water_filling(&[1.0, 0.0], 1.0).is_err());
        assert!(water_filling(&[1.0], -1.0).is_err());
    }

    #[test]
    fn reference_sensing_rate() {
        let cfg = SystemConfig::default();
        let r = sensing_rate(&cfg).unwrap();
        let direct = 0.8 * (17.125f64 * 6.85 * 3.425 * 1.7125).log2();
        assert!((r - direct).abs() < 1e-12);
        assert!((r - 7.54).abs() < 0.005);
        assert!(r >= orthogonal_waveform_rate(&cfg));
    }

    #[test]
    fn high_snr_law_at_30db() {
        let cfg = SystemConfig::default().with_p_s_db(30.0);
        let approx = sensing_rate_high_snr(&cfg);
        let want = 3.2
            * (1000f64.log2()
                + 0.25 * (1.25f64.log2() + 0.5f64.log2() + 0.25f64.log2() + 0.125f64.log2()));
        assert!((approx - want).abs() < 1e-12);
        assert!((approx - sensing_rate(&cfg).unwrap()).abs() < 0.1);
    }

    #[test]
    fn high_snr_identity_collapse() {
        let cfg = SystemConfig {
            n_rx: 4,
            n_tx: 4,
            waveform_len: 4,
            rt_eigenvalues: vec![1.0; 4],
            ..SystemConfig::default()
        }
        .with_p_s(1234.0);
        assert!((sensing_rate_high_snr(&cfg) - 4.0 * (1234.0f64 / 4.0).log2()).abs() < 1e-12);
    }

    #[test]
    fn identity_corollary_matches_general_rate() {
        for n in 1..=8 {
            let cfg = SystemConfig {
                n_rx: n,
                n_tx: n,
                waveform_len: n,
                groups: vec![crate::config::GroupGains::new(1.0, 0.8)],
                rt_eigenvalues: vec![1.0; n],
                ..SystemConfig::default()
            }
            .with_p_s(10.0);
            let a = sensing_rate(&cfg).unwrap();
            assert!((a - sensing_rate_identity(n, 10.0)).abs() < 1e-12);
        }
        assert!((sensing_rate_identity(4, 10.0) - 4.0 * 3.5f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn fdsac_edges_and_scaling() {
        let cfg = SystemConfig::default();
        assert!((fdsac_sensing_rate(&cfg, 0.0).unwrap() - sensing_rate(&cfg).unwrap()).abs() < 1e-14);
        assert_eq!(fdsac_sensing_rate(&cfg, 1.0).unwrap(), 0.0);
        assert!(fdsac_sensing_rate(&cfg, 1.5).is_err());
        // determinant route: S with tr(SS^H)=p_s built for λ/(1-α), scaled by 1/(1-α)
        let alpha = 0.5;
        let scaled: Vec<f64> = LAMBDA.iter().map(|l| l / (1.0 - alpha)).collect();
        let wf = water_filling(&scaled, cfg.p_s).unwrap();
        let via_det = (1.0 - alpha)
            * 0.8
            * LAMBDA
                .iter()
                .zip(&wf.allocations)
                .map(|(l, s)| (1.0 + l * s / (1.0 - alpha)).log2())
                .sum::<f64>();
        assert!((fdsac_sensing_rate(&cfg, alpha).unwrap() - via_det).abs() < 1e-9);
    }

    #[test]
    fn waveform_invariants() {
        let cfg = SystemConfig::default();
        let eig = cfg.rt_eigen();
        let w = optimal_waveform(&cfg, &eig).unwrap();
        assert!((w.power() - cfg.p_s).abs() < 1e-9);
        let r_t = eig.reconstruct();
        let shrs = &(&w.s.adjoint() * &r_t) * &w.s;
        let wf = optimal_allocation(&cfg).unwrap();
        let mut want = vec![0.0; 5];
        for i in 0..4 {
            want[i] = LAMBDA[i] * wf.allocations[i];
        }
        assert!(shrs.sub(&ComplexMatrix::from_diagonal(&want)).max_abs() < 1e-8);
        let rate = waveform_sensing_rate(cfg.n_rx, &r_t, &w).unwrap();
        assert!((rate - sensing_rate(&cfg).unwrap()).abs() < 1e-9);
        // S S^H = V Δ V^H
        let ssh = &w.s * &w.s.adjoint();
        assert!(ssh.sub(&ComplexMatrix::from_diagonal(&wf.allocations)).max_abs() < 1e-8);
    }

    #[test]
    fn interference_per_slot() {
        let cfg = SystemConfig::default();
        let wf = optimal_allocation(&cfg).unwrap();
        assert!((radar_interference_power(&cfg, &wf, 1).unwrap() - 16.125).abs() < 1e-12);
        assert_eq!(radar_interference_power(&cfg, &wf, 5).unwrap(), 0.0);
        assert!(radar_interference_power(&cfg, &wf, 0).is_err());
        assert!(radar_interference_power(&cfg, &wf, 6).is_err());
    }

    #[test]
    fn orthogonal_matches_det_route() {
        let cfg = SystemConfig::default().with_p_s(3.0);
        let r_t = cfg.rt_eigen().reconstruct();
        let w = orthogonal_waveform(&cfg);
        let det = waveform_sensing_rate(cfg.n_rx, &r_t, &w).unwrap();
        assert!((det - orthogonal_waveform_rate(&cfg)).abs() < 1e-12);
    }
}
