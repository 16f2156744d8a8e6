//! Campaign driver: deterministic parallel drops, SINR pooling, percentile
//! summaries, parameter sweeps, and the campaign CSV writers.
//!
//! Reproducibility contract: drop `d` of a run with seed `s` consumes the
//! ChaCha substream `(seed_from_u64(s), set_stream(d))` and nothing else,
//! so results are identical for any worker count and for the sequential
//! fallback. Campaigns aggregate drops in index order.
//!
//! With the `parallel` feature (default) drops run on a rayon pool sized
//! by the `RAMIMO_THREADS` environment variable (default: all cores);
//! without it, [`run_campaign`] falls back to the sequential path.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::receiver::{assemble_problem, mmse_sinr};
use crate::repeater::{activation_mask, gain_control, GainLimiter, RepeaterState};
use crate::scenario::{build_deployment, linear_to_db, Mode, ScenarioConfig};
use crate::channel::synthesize_channels;

/// Environment variable capping the worker count.
pub const THREADS_ENV_VAR: &str = "RAMIMO_THREADS";

/// Percentile levels reported by every campaign.
pub const PERCENTILE_LEVELS: [f64; 9] = [1.0, 5.0, 10.0, 25.0, 50.0, 75.0, 90.0, 95.0, 99.0];

/// The random substream owned by one drop: counter-based derivation from
/// `(seed, drop_index)` via the ChaCha stream counter.
pub fn drop_rng(seed: u64, drop_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(drop_index);
    rng
}

/// Per-repeater diagnostics captured from a drop.
#[derive(Debug, Clone, Copy)]
pub struct RepeaterDiag {
    pub active: bool,
    /// Power gain in dB; `-inf` for idle repeaters.
    pub gain_db: f64,
    pub limiter: Option<GainLimiter>,
}

/// Result of a single drop.
#[derive(Debug, Clone)]
pub struct DropResult {
    pub drop_index: u64,
    pub mode: Mode,
    /// Post-MMSE SINR per user, dB.
    pub sinr_db: Vec<f64>,
    /// Repeater diagnostics (RA-MIMO only).
    pub repeaters: Option<Vec<RepeaterDiag>>,
}

impl DropResult {
    pub fn active_repeater_count(&self) -> usize {
        self.repeaters
            .as_deref()
            .map_or(0, |r| r.iter().filter(|d| d.active).count())
    }

    /// Mean power gain over active repeaters, dB; `None` when none active.
    pub fn mean_active_gain_db(&self) -> Option<f64> {
        let reps = self.repeaters.as_deref()?;
        let gains: Vec<f64> = reps.iter().filter(|d| d.active).map(|d| d.gain_db).collect();
        if gains.is_empty() {
            None
        } else {
            Some(gains.iter().sum::<f64>() / gains.len() as f64)
        }
    }
}

/// Pooled result of a campaign: one mode, `num_drops` drops.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub config: ScenarioConfig,
    pub drops: Vec<DropResult>,
    /// All per-user SINRs pooled across drops, sorted ascending, dB.
    pub pooled_sinr_db: Vec<f64>,
    /// `(level_percent, sinr_db)` rows at [`PERCENTILE_LEVELS`].
    pub percentiles: Vec<(f64, f64)>,
}

impl CampaignResult {
    pub fn percentile(&self, level: f64) -> f64 {
        percentile(&self.pooled_sinr_db, level)
    }
}

/// Run one drop: deployment, channels, repeater pipeline when RA-MIMO,
/// problem assembly, MMSE SINRs. Fully determined by `(cfg.seed, drop_index)`.
pub fn run_drop(cfg: &ScenarioConfig, drop_index: u64) -> Result<DropResult> {
    let mut rng = drop_rng(cfg.seed, drop_index);
    let dep = build_deployment(cfg, &mut rng);
    let real = synthesize_channels(&dep, cfg, &mut rng);

    let state: Option<RepeaterState> = match cfg.mode {
        Mode::Ramimo => {
            let active = activation_mask(&real, cfg);
            Some(gain_control(&real, &active, cfg, &mut rng))
        }
        _ => None,
    };

    let problem = assemble_problem(cfg.mode, &real, state.as_ref(), cfg)
        .map_err(|e| e.in_drop(drop_index))?;
    let sinr_linear = mmse_sinr(&problem).map_err(|e| e.in_drop(drop_index))?;

    let repeaters = state.map(|s| {
        (0..s.num_repeaters())
            .map(|r| RepeaterDiag {
                active: s.active[r],
                gain_db: linear_to_db(s.amp_gain[r]),
                limiter: s.limiter[r],
            })
            .collect()
    });

    Ok(DropResult {
        drop_index,
        mode: cfg.mode,
        sinr_db: sinr_linear.into_iter().map(linear_to_db).collect(),
        repeaters,
    })
}

fn pool_drops(cfg: &ScenarioConfig, drops: Vec<DropResult>) -> CampaignResult {
    let mut pooled: Vec<f64> = drops.iter().flat_map(|d| d.sinr_db.iter().copied()).collect();
    pooled.sort_by(f64::total_cmp);
    let percentiles = PERCENTILE_LEVELS
        .iter()
        .map(|&lv| (lv, percentile(&pooled, lv)))
        .collect();
    CampaignResult {
        config: cfg.clone(),
        drops,
        pooled_sinr_db: pooled,
        percentiles,
    }
}

/// Sequential campaign runner; always available and byte-equivalent to the
/// parallel one.
pub fn run_campaign_sequential(cfg: &ScenarioConfig) -> Result<CampaignResult> {
    let drops = (0..cfg.num_drops as u64)
        .map(|d| run_drop(cfg, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(pool_drops(cfg, drops))
}

/// Campaign runner with an explicit worker count (`None`: rayon default).
#[cfg(feature = "parallel")]
pub fn run_campaign_with_threads(
    cfg: &ScenarioConfig,
    num_threads: Option<usize>,
) -> Result<CampaignResult> {
    use rayon::prelude::*;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = num_threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Numerical(format!("failed to build thread pool: {e}")))?;
    let drops = pool.install(|| {
        (0..cfg.num_drops as u64)
            .into_par_iter()
            .map(|d| run_drop(cfg, d))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(pool_drops(cfg, drops))
}

#[cfg(not(feature = "parallel"))]
pub fn run_campaign_with_threads(
    cfg: &ScenarioConfig,
    _num_threads: Option<usize>,
) -> Result<CampaignResult> {
    run_campaign_sequential(cfg)
}

/// Run a full campaign, sizing the worker pool from [`THREADS_ENV_VAR`].
pub fn run_campaign(cfg: &ScenarioConfig) -> Result<CampaignResult> {
    run_campaign_with_threads(cfg, threads_from_env()?)
}

/// Parse the worker cap from the environment; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV_VAR) {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| {
                Error::Validation {
                    field: "RAMIMO_THREADS",
                    reason: format!("expected a positive integer, got `{v}`"),
                }
            })?;
            if n == 0 {
                return Err(Error::validation("RAMIMO_THREADS", "must be >= 1"));
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Sweepable repeater parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    GainCap,
    Tau,
    RepNf,
}

impl SweepParam {
    pub fn label(&self) -> &'static str {
        match self {
            SweepParam::GainCap => "cap",
            SweepParam::Tau => "tau",
            SweepParam::RepNf => "nf-rep",
        }
    }

    pub fn apply(&self, cfg: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut out = cfg.clone();
        match self {
            SweepParam::GainCap => out.gain_cap_db = value,
            SweepParam::Tau => out.tau_db = value,
            SweepParam::RepNf => out.rep_nf_db = value,
        }
        out
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cap" | "gain-cap" => Ok(SweepParam::GainCap),
            "tau" => Ok(SweepParam::Tau),
            "nf-rep" | "rep-nf" => Ok(SweepParam::RepNf),
            other => Err(Error::validation(
                "param",
                format!("unknown sweep parameter `{other}` (expected cap, tau or nf-rep)"),
            )),
        }
    }
}

/// One campaign per value, all sharing the base seed so drops stay paired
/// across sweep points (only repeater gains differ between points).
pub fn sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<CampaignResult>> {
    values
        .iter()
        .map(|&v| run_campaign(&param.apply(cfg, v).validated()?))
        .collect()
}

/// Empirical percentile with linear interpolation between order statistics
/// (the convention `q = x[(n-1) * level/100]`, interpolated).
pub fn percentile(sorted: &[f64], level_percent: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample set");
    assert!((0.0..=100.0).contains(&level_percent));
    let pos = (sorted.len() - 1) as f64 * level_percent / 100.0;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// One-sample bootstrap confidence interval for a pooled percentile:
/// resamples drops with replacement and returns the `(lower, upper)`
/// quantiles of the replicate percentiles.
pub fn bootstrap_percentile_ci(
    result: &CampaignResult,
    level_percent: f64,
    confidence: f64,
    replicates: usize,
    seed: u64,
) -> (f64, f64) {
    let n = result.drops.len();
    let mut rng = drop_rng(seed, u64::MAX);
    let mut estimates = Vec::with_capacity(replicates);
    let mut pool = Vec::with_capacity(result.pooled_sinr_db.len());
    for _ in 0..replicates {
        pool.clear();
        for _ in 0..n {
            let d = rand::Rng::random_range(&mut rng, 0..n);
            pool.extend_from_slice(&result.drops[d].sinr_db);
        }
        pool.sort_by(f64::total_cmp);
        estimates.push(percentile(&pool, level_percent));
    }
    estimates.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    (
        percentile(&estimates, alpha * 100.0),
        percentile(&estimates, (1.0 - alpha) * 100.0),
    )
}

/// Paired bootstrap confidence interval for a pooled-percentile gap.
///
/// Resamples drop indices with replacement (the same indices from both
/// campaigns, preserving the shared-seed pairing), pools each replicate,
/// and returns the `(lower, upper)` quantiles of
/// `percentile(a) - percentile(b)` at the given confidence level.
pub fn bootstrap_percentile_gap_ci(
    a: &CampaignResult,
    b: &CampaignResult,
    level_percent: f64,
    confidence: f64,
    replicates: usize,
    seed: u64,
) -> (f64, f64) {
    assert_eq!(a.drops.len(), b.drops.len(), "paired bootstrap needs equal drop counts");
    let n = a.drops.len();
    let mut rng = drop_rng(seed, u64::MAX); // dedicated stream, far from drop indices
    let mut gaps = Vec::with_capacity(replicates);
    let mut pool_a = Vec::with_capacity(a.pooled_sinr_db.len());
    let mut pool_b = Vec::with_capacity(b.pooled_sinr_db.len());
    for _ in 0..replicates {
        pool_a.clear();
        pool_b.clear();
        for _ in 0..n {
            let d = rand::Rng::random_range(&mut rng, 0..n);
            pool_a.extend_from_slice(&a.drops[d].sinr_db);
            pool_b.extend_from_slice(&b.drops[d].sinr_db);
        }
        pool_a.sort_by(f64::total_cmp);
        pool_b.sort_by(f64::total_cmp);
        gaps.push(percentile(&pool_a, level_percent) - percentile(&pool_b, level_percent));
    }
    gaps.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    (
        percentile(&gaps, alpha * 100.0),
        percentile(&gaps, (1.0 - alpha) * 100.0),
    )
}

// --- campaign file emission -------------------------------------------------
//
// All writers use fixed six-decimal formatting (locale-independent) and
// stable (drop index, user index) ordering.

/// `samples.csv`: one row per (drop, user).
pub fn write_samples_csv<W: Write>(out: &mut W, result: &CampaignResult) -> std::io::Result<()> {
    writeln!(out, "drop,user,mode,sinr_db")?;
    for drop in &result.drops {
        for (user, sinr) in drop.sinr_db.iter().enumerate() {
            writeln!(out, "{},{},{},{:.6}", drop.drop_index, user, drop.mode, sinr)?;
        }
    }
    Ok(())
}

/// `cdf.csv`: the pooled empirical CDF, one row per sample.
pub fn write_cdf_csv<W: Write>(out: &mut W, result: &CampaignResult) -> std::io::Result<()> {
    writeln!(out, "sinr_db,cdf")?;
    let n = result.pooled_sinr_db.len() as f64;
    for (i, s) in result.pooled_sinr_db.iter().enumerate() {
        writeln!(out, "{:.6},{:.6}", s, (i + 1) as f64 / n)?;
    }
    Ok(())
}

/// `percentiles.csv`: the standard percentile table.
pub fn write_percentiles_csv<W: Write>(
    out: &mut W,
    result: &CampaignResult,
) -> std::io::Result<()> {
    writeln!(out, "percentile,sinr_db")?;
    for (level, value) in &result.percentiles {
        writeln!(out, "{},{:.6}", level, value)?;
    }
    Ok(())
}

/// Per-drop repeater diagnostics (RA-MIMO campaigns).
pub fn write_repeater_csv<W: Write>(out: &mut W, result: &CampaignResult) -> std::io::Result<()> {
    writeln!(out, "drop,repeater,active,gain_db,limiter")?;
    for drop in &result.drops {
        if let Some(reps) = &drop.repeaters {
            for (r, diag) in reps.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{:.6},{}",
                    drop.drop_index,
                    r,
                    diag.active as u8,
                    diag.gain_db,
                    diag.limiter.map_or("-", |l| l.tag())
                )?;
            }
        }
    }
    Ok(())
}
