//! Monte Carlo oracle for the closed-form metrics.
//!
//! Trial `t` draws from stream `(seed, t)`, so the set of samples does not
//! depend on scheduling. Trials are grouped into fixed chunks, each chunk is
//! summed sequentially with compensated arithmetic, and chunk partials are
//! folded in index order. Results are therefore bit-identical for any worker
//! count.

use rayon::prelude::*;
use thiserror::Error;

use num_complex::Complex64;
use rand::Rng;

use crate::comm::{mixture_pdf, SlotNoiseModel};
use crate::config::{ConfigError, GroupGains, SystemConfig, TargetRates};
use crate::linalg::{inner, zf_combiner, ComplexMatrix, HermitianEigen, LinalgError};
use crate::quad;
use crate::rng::{fill_cn01_matrix, RandomStream};
use crate::sensing::{optimal_waveform, WaveformMatrix};
use crate::specfun::gamma_p_unchecked;

/// Trials per accumulation chunk. Part of the reproducibility contract.
pub const CHUNK_TRIALS: u64 = 4096;

/// Singular Gram draws tolerated inside one trial before giving up.
const MAX_RESAMPLES_PER_TRIAL: u32 = 64;

#[derive(Debug, Error)]
pub enum McError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trial {trial}: {source}")]
    Channel { trial: u64, source: LinalgError },
    #[error("trial count must be >= 1")]
    NoTrials,
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub metric_id: String,
}

impl MonteCarloEstimate {
    fn from_sums(metric_id: impl Into<String>, sum: f64, sum_sq: f64, trials: u64) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let var = if trials > 1 {
            ((sum_sq - sum * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n).sqrt(),
            trials,
            metric_id: metric_id.into(),
        }
    }
}

/// Execution knobs shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl McOptions {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums and sums of squares of `width` per-trial observables.
#[derive(Debug, Clone)]
struct Moments {
    sum: Vec<CompensatedSum>,
    sum_sq: Vec<CompensatedSum>,
    resamples: u64,
}

impl Moments {
    fn new(width: usize) -> Self {
        Self {
            sum: vec![CompensatedSum::default(); width],
            sum_sq: vec![CompensatedSum::default(); width],
            resamples: 0,
        }
    }

    fn push(&mut self, values: &[f64]) {
        for ((s, q), &v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(values) {
            s.add(v);
            q.add(v * v);
        }
    }

    fn merge(&mut self, other: &Moments) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            a.add(b.sum);
            a.add(b.comp);
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            a.add(b.sum);
            a.add(b.comp);
        }
        self.resamples += other.resamples;
    }

    fn estimate(&self, idx: usize, trials: u64, metric_id: impl Into<String>) -> MonteCarloEstimate {
        MonteCarloEstimate::from_sums(metric_id, self.sum[idx].value(), self.sum_sq[idx].value(), trials)
    }
}

fn run_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, McError> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| McError::Pool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Chunked deterministic accumulation. `trial` writes `width` observables for
/// trial index `t` and returns the number of resampled draws it needed.
fn accumulate<F>(opts: &McOptions, width: usize, trial: F) -> Result<Moments, McError>
where
    F: Fn(u64, &mut [f64]) -> Result<u32, McError> + Sync,
{
    if opts.trials == 0 {
        return Err(McError::NoTrials);
    }
    let chunks = opts.trials.div_ceil(CHUNK_TRIALS);
    let partials: Vec<Result<Moments, McError>> = run_pool(opts.workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut m = Moments::new(width);
                let mut buf = vec![0.0; width];
                let end = ((c + 1) * CHUNK_TRIALS).min(opts.trials);
                for t in c * CHUNK_TRIALS..end {
                    m.resamples += trial(t, &mut buf)? as u64;
                    m.push(&buf);
                }
                Ok(m)
            })
            .collect()
    })?;
    let mut total = Moments::new(width);
    for p in partials {
        total.merge(&p?);
    }
    Ok(total)
}

/// Post-combining gains of one group: X = |w_k^H h_k|², Y = |w_k^H h_k'|².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupChannel {
    pub x: f64,
    pub y: f64,
}

/// One channel realisation after ZF combining.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub groups: Vec<GroupChannel>,
    /// Unit combiner of each group.
    pub combiners: Vec<Vec<Complex64>>,
    /// Singular draws discarded before this one.
    pub resamples: u32,
}

/// Draws H ~ CN(0, I) of size N×2K and applies the ZF combiners, redrawing
/// from the same generator when the Gram matrix is numerically singular.
pub fn draw_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelDraw, LinalgError> {
    let k = cfg.num_groups();
    let mut resamples = 0;
    loop {
        let h = fill_cn01_matrix(cfg.n_rx, 2 * k, rng);
        match combine(&h, k) {
            Ok((groups, combiners)) => {
                return Ok(ChannelDraw {
                    groups,
                    combiners,
                    resamples,
                })
            }
            Err(LinalgError::Singular { .. }) if resamples < MAX_RESAMPLES_PER_TRIAL => resamples += 1,
            Err(e) => return Err(e),
        }
    }
}

type Combined = (Vec<GroupChannel>, Vec<Vec<Complex64>>);

fn combine(h: &ComplexMatrix, k: usize) -> Result<Combined, LinalgError> {
    let mut groups = Vec::with_capacity(k);
    let mut combiners = Vec::with_capacity(k);
    for g in 1..=k {
        let w = zf_combiner(h, g)?;
        let x = inner(&w, &h.column(2 * g - 2)).norm_sqr();
        let y = inner(&w, &h.column(2 * g - 1)).norm_sqr();
        groups.push(GroupChannel { x, y });
        combiners.push(w);
    }
    Ok((groups, combiners))
}

/// SINRs, rates and outage flags of one group in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupOutcome {
    pub sinr_near: f64,
    pub sinr_far: f64,
    pub sinr_group: f64,
    pub rate_near: f64,
    pub rate_far: f64,
    pub rate_group: f64,
    pub outage_near: bool,
    pub outage_far: bool,
    pub outage_group: bool,
}

impl GroupOutcome {
    /// `noise_power` is the SINR denominator term E|r|² + E|n|² (σ²).
    pub fn evaluate(ch: GroupChannel, gains: GroupGains, p_c: f64, noise_power: f64, targets: &TargetRates) -> Self {
        let rho = p_c / noise_power;
        let far_term = gains.far * rho * ch.y;
        let sinr_near = gains.near * rho * ch.x / (far_term + 1.0);
        let sinr_far = far_term;
        let sinr_group = rho * (gains.near * ch.x + gains.far * ch.y);
        let (tn, tf, tg) = (targets.threshold_near(), targets.threshold_far(), targets.threshold_group());
        Self {
            sinr_near,
            sinr_far,
            sinr_group,
            rate_near: sinr_near.ln_1p() * std::f64::consts::LOG2_E,
            rate_far: sinr_far.ln_1p() * std::f64::consts::LOG2_E,
            rate_group: sinr_group.ln_1p() * std::f64::consts::LOG2_E,
            outage_near: sinr_near < tn,
            outage_far: !(sinr_near > tn && sinr_far > tf) && (tn > 0.0 || tf > 0.0),
            outage_group: sinr_group < tg,
        }
    }
}

/// How the radar term enters the SINR denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InterferenceMode {
    /// Average power σ² of the slot, as in the analytical model.
    #[default]
    Average,
    /// Per-trial realisation |w^H G^H s_i|² with G^H = Q R_T^{1/2}.
    /// Diagnostic only; the closed forms do not describe this case.
    Realized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub groups: Vec<GroupOutcome>,
    pub resamples: u32,
}

/// One full trial on `stream` for the slot described by `noise`.
pub fn run_trial(
    cfg: &SystemConfig,
    noise: &SlotNoiseModel,
    targets: &TargetRates,
    stream: &RandomStream,
    mode: InterferenceMode,
) -> Result<TrialOutcome, McError> {
    let mut rng = stream.rng();
    let draw = draw_channel(cfg, &mut rng).map_err(|source| McError::Channel {
        trial: stream.stream_id,
        source,
    })?;
    let realized_vec = match mode {
        InterferenceMode::Average => None,
        InterferenceMode::Realized => {
            let eigen = cfg.rt_eigen();
            let wf = optimal_waveform(cfg, &eigen)?;
            let slot = noise.slot.max(1);
            Some(target_response(cfg, &eigen, &wf, slot, &mut rng))
        }
    };
    let groups = draw
        .groups
        .iter()
        .zip(&cfg.groups)
        .enumerate()
        .map(|(g, (&ch, &gains))| {
            let noise_power = match &realized_vec {
                None => noise.sigma_sq,
                Some(v) => 1.0 + inner(&draw.combiners[g], v).norm_sqr(),
            };
            GroupOutcome::evaluate(ch, gains, cfg.p_c, noise_power, targets)
        })
        .collect();
    Ok(TrialOutcome {
        groups,
        resamples: draw.resamples,
    })
}

/// G^H s_i = Q R_T^{1/2} s_i with Q ~ CN(0, 1)^{N×M}.
fn target_response<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    eigen: &HermitianEigen,
    wf: &WaveformMatrix,
    slot: usize,
    rng: &mut R,
) -> Vec<Complex64> {
    let q = fill_cn01_matrix(cfg.n_rx, eigen.values.len(), rng);
    let shaped = eigen.sqrt_matrix().mul_vec(&wf.slot(slot));
    q.mul_vec(&shaped)
}

/// Estimates of one group at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEstimates {
    pub outage_near: MonteCarloEstimate,
    pub outage_far: MonteCarloEstimate,
    pub outage_group: MonteCarloEstimate,
    pub rate_near: MonteCarloEstimate,
    pub rate_far: MonteCarloEstimate,
    pub rate_group: MonteCarloEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimates {
    pub noise: SlotNoiseModel,
    pub groups: Vec<GroupEstimates>,
    pub sum_rate: MonteCarloEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEstimates {
    pub points: Vec<PointEstimates>,
    pub trials: u64,
    pub resamples: u64,
}

const PER_GROUP: usize = 6;

/// Estimates every metric at every grid point from one common set of channel
/// draws. Each point carries its own p_c (through ρ) and σ².
pub fn simulate_grid(
    cfg: &SystemConfig,
    points: &[SlotNoiseModel],
    targets: &TargetRates,
    opts: &McOptions,
) -> Result<GridEstimates, McError> {
    let k = cfg.num_groups();
    let stride = k * PER_GROUP + 1;
    let width = points.len() * stride;
    let moments = accumulate(opts, width, |t, buf| {
        let mut rng = RandomStream::new(opts.seed, t).rng();
        let draw = draw_channel(cfg, &mut rng).map_err(|source| McError::Channel { trial: t, source })?;
        for (p, noise) in points.iter().enumerate() {
            let base = p * stride;
            let p_c = noise.rho * noise.sigma_sq;
            let mut sum = 0.0;
            for (g, (&ch, &gains)) in draw.groups.iter().zip(&cfg.groups).enumerate() {
                let o = GroupOutcome::evaluate(ch, gains, p_c, noise.sigma_sq, targets);
                let s = &mut buf[base + g * PER_GROUP..base + (g + 1) * PER_GROUP];
                s[0] = o.outage_near as u8 as f64;
                s[1] = o.outage_far as u8 as f64;
                s[2] = o.outage_group as u8 as f64;
                s[3] = o.rate_near;
                s[4] = o.rate_far;
                s[5] = o.rate_group;
                sum += o.rate_group;
            }
            buf[base + k * PER_GROUP] = sum;
        }
        Ok(draw.resamples)
    })?;
    let n = opts.trials;
    let points = points
        .iter()
        .enumerate()
        .map(|(p, noise)| {
            let base = p * stride;
            let tag = format!("slot={},rho={}", noise.slot, noise.rho);
            let groups = (0..k)
                .map(|g| {
                    let at = |i: usize, name: &str| {
                        moments.estimate(base + g * PER_GROUP + i, n, format!("{name}[k={},{tag}]", g + 1))
                    };
                    GroupEstimates {
                        outage_near: at(0, "op_near"),
                        outage_far: at(1, "op_far"),
                        outage_group: at(2, "op_group"),
                        rate_near: at(3, "ecr_near"),
                        rate_far: at(4, "ecr_far"),
                        rate_group: at(5, "ecr_group"),
                    }
                })
                .collect();
            PointEstimates {
                noise: *noise,
                groups,
                sum_rate: moments.estimate(base + k * PER_GROUP, n, format!("sum_rate[{tag}]")),
            }
        })
        .collect();
    Ok(GridEstimates {
        points,
        trials: n,
        resamples: moments.resamples,
    })
}

/// Outage estimates (near, far, group) of every group at one slot.
pub fn estimate_outage(
    cfg: &SystemConfig,
    noise: &SlotNoiseModel,
    targets: &TargetRates,
    opts: &McOptions,
) -> Result<Vec<[MonteCarloEstimate; 3]>, McError> {
    let grid = simulate_grid(cfg, std::slice::from_ref(noise), targets, opts)?;
    let point = grid.points.into_iter().next().expect("one grid point");
    Ok(point
        .groups
        .into_iter()
        .map(|g| [g.outage_near, g.outage_far, g.outage_group])
        .collect())
}

/// Ergodic-rate estimates (near, far, group) of every group plus the sum rate.
pub fn estimate_ecr(
    cfg: &SystemConfig,
    noise: &SlotNoiseModel,
    opts: &McOptions,
) -> Result<(Vec<[MonteCarloEstimate; 3]>, MonteCarloEstimate), McError> {
    let grid = simulate_grid(cfg, std::slice::from_ref(noise), &TargetRates::default(), opts)?;
    let point = grid.points.into_iter().next().expect("one grid point");
    let per_group = point
        .groups
        .into_iter()
        .map(|g| [g.rate_near, g.rate_far, g.rate_group])
        .collect();
    Ok((per_group, point.sum_rate))
}

/// Empirical E|w^H G^H s_slot|² under the optimal waveform, with w the ZF
/// combiner of group 1 from an independent channel draw.
pub fn estimate_interference(
    cfg: &SystemConfig,
    eigen: &HermitianEigen,
    slot: usize,
    opts: &McOptions,
) -> Result<MonteCarloEstimate, McError> {
    if slot == 0 || slot > cfg.waveform_len {
        return Err(ConfigError::SlotOutOfRange {
            slot,
            len: cfg.waveform_len,
        }
        .into());
    }
    let wf = optimal_waveform(cfg, eigen)?;
    let shaped = eigen.sqrt_matrix().mul_vec(&wf.slot(slot));
    let m = accumulate(opts, 1, |t, buf| {
        let mut rng = RandomStream::new(opts.seed, t).rng();
        let draw = draw_channel(cfg, &mut rng).map_err(|source| McError::Channel { trial: t, source })?;
        let q = fill_cn01_matrix(cfg.n_rx, eigen.values.len(), &mut rng);
        buf[0] = inner(&draw.combiners[0], &q.mul_vec(&shaped)).norm_sqr();
        Ok(draw.resamples)
    })?;
    Ok(m.estimate(0, opts.trials, format!("interference[slot={slot}]")))
}

/// Kolmogorov–Smirnov distances of the simulated post-combining gains of
/// group 1 against their analytical laws.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport {
    /// |w^H h_k|² vs Gamma(N_K + 1, 1).
    pub ks_near: f64,
    /// |w^H h_k'|² vs Exp(1).
    pub ks_far: f64,
    /// α_k X + α_k' Y vs the CDF integrated from the mixture density.
    pub ks_mixture: f64,
    /// Sample correlation of X and Y.
    pub correlation: f64,
    pub samples: u64,
    pub resamples: u64,
}

fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// CDF table obtained by integrating the mixture density cell by cell.
struct TabulatedCdf {
    step: f64,
    values: Vec<f64>,
}

impl TabulatedCdf {
    fn build(pdf: impl Fn(f64) -> f64, x_max: f64, cells: usize) -> Self {
        let step = x_max / cells as f64;
        let mut values = Vec::with_capacity(cells + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for i in 0..cells {
            let a = i as f64 * step;
            acc += quad::integrate(&pdf, a, a + step, 1e-13);
            values.push(acc);
        }
        Self { step, values }
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let pos = x / self.step;
        let i = pos.floor() as usize;
        if i + 1 >= self.values.len() {
            return *self.values.last().unwrap_or(&1.0);
        }
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }
}

pub fn distribution_checks(cfg: &SystemConfig, opts: &McOptions) -> Result<DistributionReport, McError> {
    if opts.trials == 0 {
        return Err(McError::NoTrials);
    }
    let gains = cfg.groups[0];
    let draws: Vec<Result<(GroupChannel, u32), McError>> = run_pool(opts.workers, || {
        (0..opts.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = RandomStream::new(opts.seed, t).rng();
                let d = draw_channel(cfg, &mut rng).map_err(|source| McError::Channel { trial: t, source })?;
                Ok((d.groups[0], d.resamples))
            })
            .collect()
    })?;
    let mut xs = Vec::with_capacity(draws.len());
    let mut ys = Vec::with_capacity(draws.len());
    let mut resamples = 0u64;
    for d in draws {
        let (g, r) = d?;
        xs.push(g.x);
        ys.push(g.y);
        resamples += r as u64;
    }
    let correlation = sample_correlation(&xs, &ys);
    let mut zs: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| gains.near * x + gains.far * y).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    zs.sort_by(f64::total_cmp);

    let shape = cfg.n_k() as f64 + 1.0;
    let ks_near = ks_distance(&xs, |x| gamma_p_unchecked(shape, x));
    let ks_far = ks_distance(&ys, |y| -(-y).exp_m1());
    let n_k = cfg.n_k();
    let truncation = cfg.truncation;
    let mean = gains.near * shape + gains.far;
    let x_max = zs.last().copied().unwrap_or(0.0).max(20.0 * mean);
    let table = TabulatedCdf::build(|x| mixture_pdf(x, gains, n_k, truncation).value, x_max, 20_000);
    let ks_mixture = ks_distance(&zs, |z| table.eval(z));
    Ok(DistributionReport {
        ks_near,
        ks_far,
        ks_mixture,
        correlation,
        samples: opts.trials,
        resamples,
    })
}

fn sample_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}
