//! Scenario parameters shared by the analytical and simulation code.

use thiserror::Error;

use crate::linalg::{hermitian_eigendecomposition, ComplexMatrix, HermitianEigen, LinalgError};

/// Default series truncation for the mixture-based expressions.
pub const DEFAULT_TRUNCATION: u32 = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("slot {slot} outside 1..={len}")]
    SlotOutOfRange { slot: usize, len: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Large-scale gains of one NOMA group: near user α_k and cell-edge user α_k'.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupGains {
    pub near: f64,
    pub far: f64,
}

impl GroupGains {
    pub fn new(near: f64, far: f64) -> Self {
        Self { near, far }
    }

    /// ε_k = α_k' / α_k.
    pub fn eps(&self) -> f64 {
        self.far / self.near
    }
}

/// Target rates in bps/Hz and the SINR thresholds 2^R − 1 they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRates {
    pub near: f64,
    pub far: f64,
    pub group: f64,
}

impl TargetRates {
    pub fn new(near: f64, far: f64, group: f64) -> Result<Self, ConfigError> {
        for (name, r) in [("near", near), ("far", far), ("group", group)] {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(invalid(format!("target rate {name} must be finite and >= 0, got {r}")));
            }
        }
        Ok(Self { near, far, group })
    }

    pub fn threshold_near(&self) -> f64 {
        rate_to_threshold(self.near)
    }

    pub fn threshold_far(&self) -> f64 {
        rate_to_threshold(self.far)
    }

    pub fn threshold_group(&self) -> f64 {
        rate_to_threshold(self.group)
    }
}

impl Default for TargetRates {
    fn default() -> Self {
        Self {
            near: 0.5,
            far: 0.5,
            group: 1.0,
        }
    }
}

/// γ̄ = 2^R − 1.
pub fn rate_to_threshold(rate: f64) -> f64 {
    rate.exp2() - 1.0
}

/// One uplink ISAC scenario. SNRs are linear here; dB conversion happens at
/// ingestion.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    /// Receive antennas N.
    pub n_rx: usize,
    /// Transmit antennas M.
    pub n_tx: usize,
    /// Radar waveform length L.
    pub waveform_len: usize,
    /// One entry per group (K = groups.len()).
    pub groups: Vec<GroupGains>,
    pub p_c: f64,
    pub p_s: f64,
    /// Eigenvalues of R_T, descending.
    pub rt_eigenvalues: Vec<f64>,
    /// Eigenvector columns of R_T; `None` means the identity basis.
    pub rt_basis: Option<ComplexMatrix>,
    pub truncation: u32,
}

impl Default for SystemConfig {
    /// N=4, M=4, L=5, K=2, α_k=1, α_k'=0.8, λ={5,2,1,0.5}, p_c=p_s=10 dB, T=30.
    fn default() -> Self {
        Self {
            n_rx: 4,
            n_tx: 4,
            waveform_len: 5,
            groups: vec![GroupGains::new(1.0, 0.8); 2],
            p_c: 10.0,
            p_s: 10.0,
            rt_eigenvalues: vec![5.0, 2.0, 1.0, 0.5],
            rt_basis: None,
            truncation: DEFAULT_TRUNCATION,
        }
    }
}

impl SystemConfig {
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// N_K = N − 2K + 1.
    pub fn n_k(&self) -> u32 {
        (self.n_rx + 1 - 2 * self.num_groups()) as u32
    }

    pub fn with_p_c_db(mut self, db: f64) -> Self {
        self.p_c = db_to_linear(db);
        self
    }

    pub fn with_p_s_db(mut self, db: f64) -> Self {
        self.p_s = db_to_linear(db);
        self
    }

    pub fn with_p_c(mut self, p_c: f64) -> Self {
        self.p_c = p_c;
        self
    }

    pub fn with_p_s(mut self, p_s: f64) -> Self {
        self.p_s = p_s;
        self
    }

    /// Replaces the eigen-description of R_T with that of a full Hermitian matrix.
    pub fn with_correlation(mut self, r_t: &ComplexMatrix) -> Result<Self, ConfigError> {
        let eig = hermitian_eigendecomposition(r_t)?;
        self.n_tx = eig.values.len();
        self.rt_eigenvalues = eig.values;
        self.rt_basis = Some(eig.vectors);
        Ok(self)
    }

    pub fn rt_eigen(&self) -> HermitianEigen {
        match &self.rt_basis {
            Some(v) => HermitianEigen {
                values: self.rt_eigenvalues.clone(),
                vectors: v.clone(),
            },
            None => HermitianEigen::from_eigenvalues(&self.rt_eigenvalues),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let k = self.num_groups();
        if self.n_rx == 0 || self.n_tx == 0 {
            return Err(invalid("N and M must be >= 1"));
        }
        if k == 0 {
            return Err(invalid("K must be >= 1"));
        }
        if 2 * k > self.n_rx {
            return Err(invalid(format!("zero forcing needs 2K <= N (K={k}, N={})", self.n_rx)));
        }
        if self.waveform_len < self.n_tx || self.waveform_len < self.n_rx {
            return Err(invalid(format!(
                "waveform length L={} must be >= M={} and >= N={}",
                self.waveform_len, self.n_tx, self.n_rx
            )));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if !(g.near > 0.0) || !g.near.is_finite() {
                return Err(invalid(format!("alpha_near[{i}] must be > 0")));
            }
            if !(g.far >= 0.0) || g.far > g.near {
                return Err(invalid(format!("alpha_far[{i}] must lie in [0, alpha_near]")));
            }
        }
        if !(self.p_c >= 0.0) || !self.p_c.is_finite() || !(self.p_s >= 0.0) || !self.p_s.is_finite() {
            return Err(invalid("p_c and p_s must be finite and >= 0"));
        }
        if self.rt_eigenvalues.len() != self.n_tx {
            return Err(invalid(format!(
                "expected {} R_T eigenvalues, got {}",
                self.n_tx,
                self.rt_eigenvalues.len()
            )));
        }
        if self.rt_eigenvalues.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(invalid("R_T eigenvalues must be positive"));
        }
        if self.rt_eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return Err(invalid("R_T eigenvalues must be sorted in descending order"));
        }
        if let Some(v) = &self.rt_basis {
            if v.rows() != self.n_tx || v.cols() != self.n_tx {
                return Err(invalid("R_T eigenbasis must be M x M"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_k(), 1);
    }

    #[test]
    fn thresholds() {
        let t = TargetRates::default();
        assert!((t.threshold_near() - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(t.threshold_group(), 1.0);
        assert_eq!(rate_to_threshold(0.0), 0.0);
        assert!(TargetRates::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn db_round_trip() {
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((linear_to_db(1000.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = SystemConfig::default();
        c.groups = vec![GroupGains::new(1.0, 0.8); 3];
        assert!(c.validate().is_err());

        let mut c = SystemConfig::default();
        c.groups[0].far = 1.5;
        assert!(c.validate().is_err());

        let mut c = SystemConfig::default();
        c.rt_eigenvalues = vec![0.5, 1.0, 2.0, 5.0];
        assert!(c.validate().is_err());

        let mut c = SystemConfig::default();
        c.waveform_len = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn correlation_override() {
        let r = ComplexMatrix::from_diagonal(&[1.0, 5.0, 0.5, 2.0]);
        let c = SystemConfig::default().with_correlation(&r).unwrap();
        assert_eq!(c.rt_eigenvalues.len(), 4);
        assert!((c.rt_eigenvalues[0] - 5.0).abs() < 1e-12);
        c.validate().unwrap();
        assert!(c.rt_eigen().reconstruct().sub(&r).max_abs() < 1e-12);
    }
}
