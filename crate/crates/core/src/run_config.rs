//! TOML run configuration.
//!
//! Every key is optional and falls back to the reference scenario. SNRs are
//! given in dB and converted to linear exactly once, here.
//!
//! ```toml
//! N = 4
//! M = 4
//! L = 5
//! K = 2
//! alpha_near = 1.0            # scalar (all groups) or one value per group
//! alpha_far = [0.8, 0.6]
//! p_c_db = 10                 # scalar: operating point; list: sweep grid
//! p_s_db = 10
//! rt_eigenvalues = [5, 2, 1, 0.5]
//! T = 30
//! trials = 1000000
//! seed = 1
//! slots = [1, 5]
//! target_rate_near = 0.5
//! target_rate_far = 0.5
//! target_rate_group = 1.0
//! alpha_grid = [0.0, 0.5, 1.0]
//! beta_grid = [0.0, 0.5, 1.0]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::config::{db_to_linear, ConfigError, GroupGains, SystemConfig, TargetRates};
use crate::linalg::ComplexMatrix;
use crate::Error;

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OPERATING_DB: f64 = 10.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "N")]
    n: Option<usize>,
    #[serde(rename = "M")]
    m: Option<usize>,
    #[serde(rename = "L")]
    l: Option<usize>,
    #[serde(rename = "K")]
    k: Option<usize>,
    alpha_near: Option<ScalarOrList>,
    alpha_far: Option<ScalarOrList>,
    p_c_db: Option<ScalarOrList>,
    p_s_db: Option<ScalarOrList>,
    p_c_db_grid: Option<Vec<f64>>,
    p_s_db_grid: Option<Vec<f64>>,
    rt_eigenvalues: Option<Vec<f64>>,
    /// Full Hermitian R_T as real and imaginary row lists.
    rt_matrix_re: Option<Vec<Vec<f64>>>,
    rt_matrix_im: Option<Vec<Vec<f64>>>,
    #[serde(rename = "T")]
    t: Option<u32>,
    trials: Option<u64>,
    seed: Option<u64>,
    slots: Option<Vec<usize>>,
    target_rate_near: Option<f64>,
    target_rate_far: Option<f64>,
    target_rate_group: Option<f64>,
    alpha_grid: Option<Vec<f64>>,
    beta_grid: Option<Vec<f64>>,
    output: Option<PathBuf>,
}

/// Scenario plus sweep and simulation settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Operating point: `p_c` and `p_s` hold the linear values of
    /// `p_c_db` / `p_s_db`.
    pub system: SystemConfig,
    pub p_c_db: f64,
    pub p_s_db: f64,
    pub p_c_db_grid: Vec<f64>,
    pub p_s_db_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub slots: Vec<usize>,
    pub targets: TargetRates,
    pub output: Option<PathBuf>,
}

/// `start, start + step, ..., stop` with values rounded to 1e-9 so labels
/// print cleanly.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        let system = SystemConfig::default()
            .with_p_c_db(DEFAULT_OPERATING_DB)
            .with_p_s_db(DEFAULT_OPERATING_DB);
        Self {
            system,
            p_c_db: DEFAULT_OPERATING_DB,
            p_s_db: DEFAULT_OPERATING_DB,
            p_c_db_grid: linear_grid(-10.0, 40.0, 5.0),
            p_s_db_grid: linear_grid(-10.0, 40.0, 5.0),
            alpha_grid: linear_grid(0.0, 1.0, 0.05),
            beta_grid: linear_grid(0.0, 1.0, 0.05),
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            slots: vec![1, 5],
            targets: TargetRates::default(),
            output: None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn per_group(name: &str, value: Option<ScalarOrList>, k: usize, default: f64) -> Result<Vec<f64>, ConfigError> {
    match value {
        None => Ok(vec![default; k]),
        Some(ScalarOrList::Scalar(v)) => Ok(vec![v; k]),
        Some(ScalarOrList::List(v)) if v.len() == k => Ok(v),
        Some(ScalarOrList::List(v)) => Err(invalid(format!("{name} has {} entries, expected K = {k}", v.len()))),
    }
}

/// Resolves a scalar-or-list dB key and its explicit grid key into
/// (operating point, grid).
fn point_and_grid(
    name: &str,
    value: Option<ScalarOrList>,
    grid: Option<Vec<f64>>,
    default_grid: Vec<f64>,
) -> Result<(f64, Vec<f64>), ConfigError> {
    match (value, grid) {
        (Some(ScalarOrList::List(_)), Some(_)) => {
            Err(invalid(format!("{name} given as a list and {name}_grid also set")))
        }
        (Some(ScalarOrList::List(l)), None) => Ok((DEFAULT_OPERATING_DB, l)),
        (Some(ScalarOrList::Scalar(v)), g) => Ok((v, g.unwrap_or(default_grid))),
        (None, g) => Ok((DEFAULT_OPERATING_DB, g.unwrap_or(default_grid))),
    }
}

fn rt_matrix(re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>>) -> Result<ComplexMatrix, ConfigError> {
    let n = re.len();
    if re.iter().any(|r| r.len() != n) {
        return Err(invalid("rt_matrix_re must be square"));
    }
    let im = im.unwrap_or_else(|| vec![vec![0.0; n]; n]);
    if im.len() != n || im.iter().any(|r| r.len() != n) {
        return Err(invalid("rt_matrix_im must match rt_matrix_re"));
    }
    Ok(ComplexMatrix::from_fn(n, n, |r, c| num_complex::Complex64::new(re[r][c], im[r][c])))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.message().to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|source| Error::ConfigFile {
            path: path.to_path_buf(),
            source,
        })
    }

    fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let d = RunConfig::default();
        let base = SystemConfig::default();
        let k = raw.k.unwrap_or(base.num_groups());
        let near = per_group("alpha_near", raw.alpha_near, k, base.groups[0].near)?;
        let far = per_group("alpha_far", raw.alpha_far, k, base.groups[0].far)?;
        let (p_c_db, p_c_db_grid) = point_and_grid("p_c_db", raw.p_c_db, raw.p_c_db_grid, d.p_c_db_grid)?;
        let (p_s_db, p_s_db_grid) = point_and_grid("p_s_db", raw.p_s_db, raw.p_s_db_grid, d.p_s_db_grid)?;

        let mut system = SystemConfig {
            n_rx: raw.n.unwrap_or(base.n_rx),
            n_tx: raw.m.unwrap_or(base.n_tx),
            waveform_len: raw.l.unwrap_or(base.waveform_len),
            groups: near.into_iter().zip(far).map(|(a, b)| GroupGains::new(a, b)).collect(),
            p_c: db_to_linear(p_c_db),
            p_s: db_to_linear(p_s_db),
            rt_eigenvalues: raw.rt_eigenvalues.unwrap_or(base.rt_eigenvalues),
            rt_basis: None,
            truncation: raw.t.unwrap_or(base.truncation),
        };
        match raw.rt_matrix_re {
            Some(re) => system = system.with_correlation(&rt_matrix(re, raw.rt_matrix_im)?)?,
            None if raw.rt_matrix_im.is_some() => return Err(invalid("rt_matrix_im given without rt_matrix_re")),
            None => {}
        }
        system.validate()?;

        let targets = TargetRates::new(
            raw.target_rate_near.unwrap_or(d.targets.near),
            raw.target_rate_far.unwrap_or(d.targets.far),
            raw.target_rate_group.unwrap_or(d.targets.group),
        )?;
        let cfg = Self {
            system,
            p_c_db,
            p_s_db,
            p_c_db_grid,
            p_s_db_grid,
            alpha_grid: raw.alpha_grid.unwrap_or(d.alpha_grid),
            beta_grid: raw.beta_grid.unwrap_or(d.beta_grid),
            trials: raw.trials.unwrap_or(d.trials),
            seed: raw.seed.unwrap_or(d.seed),
            slots: raw.slots.unwrap_or(d.slots),
            targets,
            output: raw.output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.system.validate()?;
        for (name, grid) in [("p_c_db_grid", &self.p_c_db_grid), ("p_s_db_grid", &self.p_s_db_grid)] {
            if grid.is_empty() || grid.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("{name} must be a nonempty list of finite values")));
            }
        }
        for (name, grid) in [("alpha_grid", &self.alpha_grid), ("beta_grid", &self.beta_grid)] {
            if grid.is_empty() || grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(invalid(format!("{name} must be a nonempty list within [0, 1]")));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.slots.is_empty() {
            return Err(invalid("slots must be nonempty"));
        }
        for &slot in &self.slots {
            if slot == 0 || slot > self.system.waveform_len {
                return Err(ConfigError::SlotOutOfRange {
                    slot,
                    len: self.system.waveform_len,
                });
            }
        }
        Ok(())
    }

    /// Scenario at communication SNR `p_c_db`, other settings unchanged.
    pub fn system_at_p_c_db(&self, p_c_db: f64) -> SystemConfig {
        self.system.clone().with_p_c_db(p_c_db)
    }

    pub fn system_at_p_s_db(&self, p_s_db: f64) -> SystemConfig {
        self.system.clone().with_p_s_db(p_s_db)
    }
}
