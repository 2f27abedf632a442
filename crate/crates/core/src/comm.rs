//! Closed-form communication metrics for the ZF + uplink-NOMA receiver.
//!
//! After zero forcing, group k sees X = |w_k^H h_k|² ~ Gamma(N_K + 1, 1) and
//! Y = |w_k^H h_k'|² ~ Exp(1), independent, with N_K = N − 2K + 1. The SINRs are
//!
//! ```text
//! near:  α_k ρ X / (α_k' ρ Y + 1)
//! far:   α_k' ρ Y
//! group: ρ (α_k X + α_k' Y)
//! ```
//!
//! where ρ = p_c / σ² and σ² = 1 + (radar interference in the slot). The group
//! sum Z = α_k X + α_k' Y has a gamma-series density (Moschopoulos form) whose
//! terms are truncated after T + 1 entries.

use crate::config::{ConfigError, GroupGains, SystemConfig, TargetRates};
use crate::sensing::{radar_interference_power, WaterFillingSolution};
use crate::specfun::{
    digamma_unchecked, gamma_p_unchecked, gamma_q_unchecked, ln_factorial, ln_gamma_unchecked,
    scaled_exp_e1_unchecked, upper_cf,
};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Effective noise seen by the communication users in one time slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotNoiseModel {
    /// 1-based slot index (0 when the model is not tied to a waveform slot).
    pub slot: usize,
    /// σ² = 1 + |s_i^H R_T s_i|.
    pub sigma_sq: f64,
    /// ρ = p_c / σ².
    pub rho: f64,
    /// N_K = N − 2K + 1.
    pub n_k: u32,
    /// N̄_K = N − 2K + 2.
    pub n_k_bar: u32,
}

impl SlotNoiseModel {
    pub fn new(slot: usize, sigma_sq: f64, p_c: f64, n_k: u32) -> Self {
        Self {
            slot,
            sigma_sq,
            rho: p_c / sigma_sq,
            n_k,
            n_k_bar: n_k + 1,
        }
    }

    /// No radar interference (σ² = 1).
    pub fn interference_free(cfg: &SystemConfig) -> Self {
        Self::new(0, 1.0, cfg.p_c, cfg.n_k())
    }

    pub fn with_p_c(self, p_c: f64) -> Self {
        Self::new(self.slot, self.sigma_sq, p_c, self.n_k)
    }
}

/// Noise model of slot `slot` (1-based) under the optimal waveform.
pub fn slot_noise(
    cfg: &SystemConfig,
    wf: &WaterFillingSolution,
    slot: usize,
) -> Result<SlotNoiseModel, ConfigError> {
    let interference = radar_interference_power(cfg, wf, slot)?;
    Ok(SlotNoiseModel::new(slot, 1.0 + interference, cfg.p_c, cfg.n_k()))
}

/// A truncated-series result with the magnitude of its final term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub last_term: f64,
}

impl SeriesValue {
    fn exact(value: f64) -> Self {
        Self { value, last_term: 0.0 }
    }
}

/// n·ln(base), with 0·ln(0) = 0.
fn ln_pow(base: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * base.ln()
    }
}

/// Coefficients of the near/far outage double sums:
/// c^{l−n} b^n / ((l−n)! (1+b)^{n+1}) · e^{−c}, returned as (n, value) pairs.
fn near_far_terms(c: f64, b: f64, n_k: u32) -> impl Iterator<Item = (u32, f64)> {
    (0..=n_k).flat_map(move |l| {
        (0..=l).map(move |n| {
            let ln_term = -c + ln_pow(c, l - n) - ln_factorial(l - n) + ln_pow(b, n)
                - (n as f64 + 1.0) * b.ln_1p();
            (n, ln_term.exp())
        })
    })
}

/// Near-user outage Pr(γ_k < γ̄_k).
pub fn outage_near(noise: &SlotNoiseModel, gains: GroupGains, threshold: f64) -> f64 {
    if threshold <= 0.0 {
        return 0.0;
    }
    if noise.rho <= 0.0 {
        return 1.0;
    }
    let c = threshold / (gains.near * noise.rho);
    let b = gains.eps() * threshold;
    let success: f64 = near_far_terms(c, b, noise.n_k).map(|(_, t)| t).sum();
    (1.0 - success).clamp(0.0, 1.0)
}

/// Far-user outage 1 − Pr(γ_k > γ̄_k, γ_k' > γ̄_k'): SIC must decode the near
/// user before the far one.
pub fn outage_far(
    noise: &SlotNoiseModel,
    gains: GroupGains,
    threshold_near: f64,
    threshold_far: f64,
) -> f64 {
    if threshold_near <= 0.0 && threshold_far <= 0.0 {
        return 0.0;
    }
    if noise.rho <= 0.0 {
        return 1.0;
    }
    if gains.far == 0.0 {
        return if threshold_far > 0.0 {
            1.0
        } else {
            outage_near(noise, gains, threshold_near)
        };
    }
    let c = threshold_near.max(0.0) / (gains.near * noise.rho);
    let b = gains.eps() * threshold_near.max(0.0);
    let y0 = threshold_far.max(0.0) / (gains.far * noise.rho);
    let success: f64 = near_far_terms(c, b, noise.n_k)
        .map(|(n, t)| t * gamma_q_unchecked(n as f64 + 1.0, (1.0 + b) * y0))
        .sum();
    (1.0 - success).clamp(0.0, 1.0)
}

/// High-SNR floor shared by the near and far outage probabilities:
/// 1 − Σ_{l≤N_K} (ε γ̄)^l / (ε γ̄ + 1)^{l+1}.
pub fn outage_floor_near_far(noise: &SlotNoiseModel, gains: GroupGains, threshold: f64) -> f64 {
    if threshold <= 0.0 {
        return 0.0;
    }
    let b = gains.eps() * threshold;
    let success: f64 = (0..=noise.n_k)
        .map(|l| (ln_pow(b, l) - (l as f64 + 1.0) * b.ln_1p()).exp())
        .sum();
    (1.0 - success).clamp(0.0, 1.0)
}

/// Weights of Z = α_k X + α_k' Y as a mixture of Gamma(l + N̄_K + 1, α_k')
/// laws: w_l = ε^{N̄_K} (1−ε)^l C(l + N_K, l), l = 0..=T.
pub fn mixture_weights(gains: GroupGains, n_k: u32, truncation: u32) -> Vec<f64> {
    let eps = gains.eps();
    let n_k_bar = n_k + 1;
    (0..=truncation)
        .map(|l| {
            let ln_binom = ln_factorial(l + n_k) - ln_factorial(l) - ln_factorial(n_k);
            (ln_pow(eps, n_k_bar) + ln_pow(1.0 - eps, l) + ln_binom).exp()
        })
        .collect()
}

/// Group (sum-rate) outage Pr(γ_g < γ̄_g) via the truncated gamma series.
pub fn outage_group(
    noise: &SlotNoiseModel,
    gains: GroupGains,
    threshold: f64,
    truncation: u32,
) -> SeriesValue {
    if threshold <= 0.0 {
        return SeriesValue::exact(0.0);
    }
    if noise.rho <= 0.0 {
        return SeriesValue::exact(1.0);
    }
    if gains.far == 0.0 {
        let x = threshold / (gains.near * noise.rho);
        return SeriesValue::exact(gamma_p_unchecked(noise.n_k as f64 + 1.0, x));
    }
    let x = threshold / (gains.far * noise.rho);
    let mut value = 0.0;
    let mut last = 0.0;
    for (l, w) in mixture_weights(gains, noise.n_k, truncation).into_iter().enumerate() {
        let shape = (l as u32 + noise.n_k + 2) as f64;
        last = w * gamma_p_unchecked(shape, x);
        value += last;
    }
    SeriesValue {
        value: value.clamp(0.0, 1.0),
        last_term: last.abs(),
    }
}

/// High-SNR group outage (γ̄ σ²/(α_k' p_c))^{N_K+2} ε^{N_K+1}/(N_K+2)!,
/// decaying with diversity order N − 2K + 3.
pub fn outage_group_asymptotic(noise: &SlotNoiseModel, gains: GroupGains, threshold: f64) -> f64 {
    if threshold <= 0.0 {
        return 0.0;
    }
    if gains.far == 0.0 {
        let x = threshold / (gains.near * noise.rho);
        let d = noise.n_k + 1;
        return (ln_pow(x, d) - ln_factorial(d)).exp();
    }
    let x = threshold / (gains.far * noise.rho);
    let d = noise.n_k + 2;
    (ln_pow(x, d) + ln_pow(gains.eps(), noise.n_k + 1) - ln_factorial(d)).exp()
}

fn gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return if shape == 1.0 && x == 0.0 { 1.0 / scale } else { 0.0 };
    }
    ((shape - 1.0) * x.ln() - x / scale - ln_gamma_unchecked(shape) - shape * scale.ln()).exp()
}

/// Density of α_k X + α_k' Y, truncated after T + 1 gamma terms.
pub fn mixture_pdf(x: f64, gains: GroupGains, n_k: u32, truncation: u32) -> SeriesValue {
    if gains.far == 0.0 {
        return SeriesValue::exact(gamma_pdf(x, n_k as f64 + 1.0, gains.near));
    }
    let mut value = 0.0;
    let mut last = 0.0;
    for (l, w) in mixture_weights(gains, n_k, truncation).into_iter().enumerate() {
        last = w * gamma_pdf(x, (l as u32 + n_k + 2) as f64, gains.far);
        value += last;
    }
    SeriesValue {
        value,
        last_term: last.abs(),
    }
}

/// E[ln(1 + a G_m)] for G_m ~ Gamma(m, 1), m = 1..=max_shape (index m − 1).
///
/// Uses J_{m+1} = J_m + (1 − L_m)/m with L_m = E[1/(1 + a G_m)] and
/// J_1 = e^{1/a} E₁(1/a). For a ≥ 1 the recursion L_{m+1} = (1 − L_m)/(a m)
/// is stable upward; below that L_m = z e^{z} z^{m−1} Γ(1−m, z), z = 1/a, is
/// taken from the incomplete-gamma continued fraction directly.
pub fn mean_log1p_gamma(a: f64, max_shape: u32) -> Vec<f64> {
    let m_max = max_shape as usize;
    if a <= 0.0 {
        return vec![0.0; m_max];
    }
    let z = 1.0 / a;
    let mut out = Vec::with_capacity(m_max);
    let mut j = scaled_exp_e1_unchecked(z);
    let mut l_m = z * j;
    for m in 1..=m_max {
        out.push(j);
        if a < 1.0 {
            l_m = z * upper_cf(1.0 - m as f64, z);
        }
        j += (1.0 - l_m) / m as f64;
        if a >= 1.0 {
            l_m = (1.0 - l_m) / (a * m as f64);
        }
    }
    out
}

/// Far-user ergodic rate −e^{1/(α_k'ρ)} Ei(−1/(α_k'ρ)) log₂e.
pub fn ecr_far(noise: &SlotNoiseModel, gains: GroupGains) -> f64 {
    let a = noise.rho * gains.far;
    if a <= 0.0 {
        return 0.0;
    }
    scaled_exp_e1_unchecked(1.0 / a) * LOG2_E
}

/// Group ergodic rate E[log₂(1 + ρ Z)] over the truncated gamma mixture.
pub fn ecr_group(noise: &SlotNoiseModel, gains: GroupGains, truncation: u32) -> SeriesValue {
    if noise.rho <= 0.0 {
        return SeriesValue::exact(0.0);
    }
    if gains.far == 0.0 {
        let shape = noise.n_k + 1;
        let j = mean_log1p_gamma(noise.rho * gains.near, shape);
        return SeriesValue::exact(j[shape as usize - 1] * LOG2_E);
    }
    let weights = mixture_weights(gains, noise.n_k, truncation);
    let base = noise.n_k + 2;
    let j = mean_log1p_gamma(noise.rho * gains.far, base + truncation);
    let mut value = 0.0;
    let mut last = 0.0;
    for (l, w) in weights.into_iter().enumerate() {
        last = w * j[base as usize + l - 1] * LOG2_E;
        value += last;
    }
    SeriesValue {
        value,
        last_term: last.abs(),
    }
}

/// Closed-form group rate as an alternating double series in powers of
/// −ρα_k'. Accurate for moderate ρα_k' but loses all precision once
/// ρα_k' ≲ 0.05; kept as an independent cross-check of [`ecr_group`].
pub fn ecr_group_alternating(noise: &SlotNoiseModel, gains: GroupGains, truncation: u32) -> f64 {
    let a = noise.rho * gains.far;
    let eps = gains.eps();
    let n_k = noise.n_k;
    let n_bar = noise.n_k_bar;
    let e1 = scaled_exp_e1_unchecked(1.0 / a);
    let mut total = 0.0;
    for l in 0..=truncation {
        let outer = (1.0 - eps).powi(l as i32) * eps.powi(n_bar as i32)
            * ln_gamma_unchecked((l + n_bar) as f64).exp()
            / (ln_factorial(l).exp() * ln_factorial(n_k).exp());
        for n in 0..=(l + n_bar) {
            let p = n_bar + l - n;
            let mut bracket = e1;
            for j in 1..=p {
                bracket += ln_factorial(j - 1).exp() * (-a).powi(j as i32);
            }
            total += outer * bracket / (ln_factorial(p).exp() * (-a).powi(p as i32));
        }
    }
    total * LOG2_E
}

/// Near-user ergodic rate, group minus far.
pub fn ecr_near(noise: &SlotNoiseModel, gains: GroupGains, truncation: u32) -> SeriesValue {
    let g = ecr_group(noise, gains, truncation);
    SeriesValue {
        value: (g.value - ecr_far(noise, gains)).max(0.0),
        last_term: g.last_term,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Near,
    Far,
    Group,
}

/// High-SNR ergodic-rate approximations: far and group grow as
/// log₂(ρ α_k'), the near user saturates at a ρ-free constant.
pub fn ecr_asymptotic(kind: RateKind, noise: &SlotNoiseModel, gains: GroupGains, truncation: u32) -> f64 {
    let psi1 = digamma_unchecked(1.0);
    if gains.far == 0.0 {
        // Interference-free near user, far user absent.
        let near = (noise.rho * gains.near).log2() + digamma_unchecked(noise.n_k as f64 + 1.0) * LOG2_E;
        return match kind {
            RateKind::Far => 0.0,
            RateKind::Near | RateKind::Group => near,
        };
    }
    let psi_mix: f64 = mixture_weights(gains, noise.n_k, truncation)
        .into_iter()
        .enumerate()
        .map(|(l, w)| w * digamma_unchecked((l as u32 + noise.n_k_bar + 1) as f64))
        .sum::<f64>()
        * LOG2_E;
    let log_snr = (noise.rho * gains.far).log2();
    match kind {
        RateKind::Near => psi_mix - psi1 * LOG2_E,
        RateKind::Far => log_snr + psi1 * LOG2_E,
        RateKind::Group => log_snr + psi_mix,
    }
}

/// Σ_k group rate in one slot.
pub fn ergodic_sum_rate(cfg: &SystemConfig, noise: &SlotNoiseModel) -> f64 {
    cfg.groups
        .iter()
        .map(|&g| ecr_group(noise, g, cfg.truncation).value)
        .sum()
}

/// High-SNR counterpart of [`ergodic_sum_rate`] (slope K in log₂ p_c).
pub fn ergodic_sum_rate_high_snr(cfg: &SystemConfig, noise: &SlotNoiseModel) -> f64 {
    cfg.groups
        .iter()
        .map(|&g| ecr_asymptotic(RateKind::Group, noise, g, cfg.truncation))
        .sum()
}

/// FDSAC sum rate α Σ_k E[log₂(1 + Z_k p_c/α)] on an interference-free
/// sub-band holding a fraction `alpha` of the bandwidth.
pub fn fdsac_comm_rate(cfg: &SystemConfig, alpha: f64) -> Result<f64, ConfigError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ConfigError::Invalid(format!("bandwidth fraction {alpha} outside [0, 1]")));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let noise = SlotNoiseModel::new(0, 1.0, cfg.p_c / alpha, cfg.n_k());
    Ok(alpha * ergodic_sum_rate(cfg, &noise))
}

/// The three outage probabilities of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageSet {
    pub near: f64,
    pub far: f64,
    pub group: f64,
}

/// The three ergodic rates of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub near: f64,
    pub far: f64,
    pub group: f64,
}

/// Analytical model consulted by the Monte Carlo validator.
pub trait CommModel: Sync {
    fn outage(&self, noise: &SlotNoiseModel, gains: GroupGains, targets: &TargetRates, truncation: u32) -> OutageSet;
    fn ergodic(&self, noise: &SlotNoiseModel, gains: GroupGains, truncation: u32) -> RateSet;
}

/// The closed-form expressions of this module.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm;

impl CommModel for ClosedForm {
    fn outage(&self, noise: &SlotNoiseModel, gains: GroupGains, targets: &TargetRates, truncation: u32) -> OutageSet {
        OutageSet {
            near: outage_near(noise, gains, targets.threshold_near()),
            far: outage_far(noise, gains, targets.threshold_near(), targets.threshold_far()),
            group: outage_group(noise, gains, targets.threshold_group(), truncation).value,
        }
    }

    fn ergodic(&self, noise: &SlotNoiseModel, gains: GroupGains, truncation: u32) -> RateSet {
        let group = ecr_group(noise, gains, truncation).value;
        let far = ecr_far(noise, gains);
        RateSet {
            near: (group - far).max(0.0),
            far,
            group,
        }
    }
}
