//! Repeater pipeline: activation masking, constrained gain control, the
//! composite RA-MIMO channel, and the amplified-noise covariance seen at
//! the base station.
//!
//! Each repeater is a single-bounce, LTI, reciprocal scatterer with a flat
//! narrowband response `g_r e^{i phi_r}`: a signal entering through the
//! user->site channel leaves through the site->BS channel scaled by the
//! amplitude gain and rotated by a fixed per-drop phase. Repeater-to-
//! repeater coupling is not modeled.

use rand::Rng;

use crate::channel::{noise_power_linear, ChannelRealization};
use crate::linalg::{norm_sq, CMatrix};
use crate::scenario::{db_to_linear, ScenarioConfig};

/// Which of the three gain limits was binding for an active repeater.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainLimiter {
    /// Amplification cap.
    Cap,
    /// BS-noise to repeated-noise ratio constraint.
    Tau,
    /// Output power limit.
    OutputPower,
}

impl GainLimiter {
    pub fn tag(&self) -> &'static str {
        match self {
            GainLimiter::Cap => "cap",
            GainLimiter::Tau => "tau",
            GainLimiter::OutputPower => "pout",
        }
    }
}

/// Per-repeater state after activation masking and gain control.
#[derive(Debug, Clone)]
pub struct RepeaterState {
    pub active: Vec<bool>,
    /// Power gain `g^2`, linear; zero for idle repeaters.
    pub amp_gain: Vec<f64>,
    /// Fixed narrowband response phase, radians.
    pub response_phase: Vec<f64>,
    /// Binding constraint per active repeater; `None` when idle.
    pub limiter: Vec<Option<GainLimiter>>,
}

impl RepeaterState {
    pub fn num_repeaters(&self) -> usize {
        self.active.len()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// An all-idle state (every gain zero), useful as the RA-MIMO
    /// degenerate case.
    pub fn idle(num_repeaters: usize) -> Self {
        RepeaterState {
            active: vec![false; num_repeaters],
            amp_gain: vec![0.0; num_repeaters],
            response_phase: vec![0.0; num_repeaters],
            limiter: vec![None; num_repeaters],
        }
    }
}

/// Total signal power entering each repeater: `sum_k p_k |f_{k,r}|^2`.
/// Counts user signals only (single-bounce model).
pub fn repeater_input_powers(real: &ChannelRealization, cfg: &ScenarioConfig) -> Vec<f64> {
    let p_user = cfg.user_tx_power_w();
    (0..real.num_sites())
        .map(|r| {
            (0..real.num_users())
                .map(|k| p_user * real.f_user_site.get(r, k).norm_sqr())
                .sum::<f64>()
        })
        .collect()
}

/// Activation masking: a repeater wakes up only when its incoming signal
/// power exceeds the threshold `noise_floor * margin`, the repeater noise
/// floor raised by `activation_snr_margin_db`.
pub fn activation_mask(real: &ChannelRealization, cfg: &ScenarioConfig) -> Vec<bool> {
    let threshold = activation_threshold_w(cfg);
    repeater_input_powers(real, cfg)
        .into_iter()
        .map(|p_in| p_in > threshold)
        .collect()
}

/// Activation threshold in watts.
pub fn activation_threshold_w(cfg: &ScenarioConfig) -> f64 {
    noise_power_linear(cfg.bandwidth_hz, cfg.temperature_k, cfg.rep_nf_db)
        * db_to_linear(cfg.activation_snr_margin_db)
}

/// Set each active repeater's power gain to the minimum of three limits:
///
/// - the amplification cap `10^(cap/10)`;
/// - the tau limit `sigma2_bs / (tau * sigma2_rep * beta_r)`, where
///   `beta_r` is the per-antenna average gain of the drop's actual
///   repeater->BS channel, so that BS thermal noise stays at least `tau`
///   above the amplified repeater noise received over that channel;
/// - the output power limit `p_max / (p_in + sigma2_rep)`.
///
/// Response phases are drawn once per drop, uniform over [0, 2 pi), for
/// every repeater in index order (also the idle ones, which keeps the RNG
/// stream position independent of the activation pattern).
pub fn gain_control(
    real: &ChannelRealization,
    active: &[bool],
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> RepeaterState {
    let num_rep = real.num_sites();
    assert_eq!(active.len(), num_rep);
    let sigma2_bs = noise_power_linear(cfg.bandwidth_hz, cfg.temperature_k, cfg.bs_nf_db);
    let sigma2_rep = noise_power_linear(cfg.bandwidth_hz, cfg.temperature_k, cfg.rep_nf_db);
    let tau_lin = db_to_linear(cfg.tau_db);
    let cap = db_to_linear(cfg.gain_cap_db);
    let p_max = cfg.rep_max_out_w();
    let input_powers = repeater_input_powers(real, cfg);
    let antennas = real.num_antennas() as f64;

    let response_phase: Vec<f64> = (0..num_rep)
        .map(|_| {
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            if cfg.rep_zero_phase {
                0.0
            } else {
                phi
            }
        })
        .collect();

    let mut amp_gain = vec![0.0; num_rep];
    let mut limiter = vec![None; num_rep];
    for r in 0..num_rep {
        if !active[r] {
            continue;
        }
        let beta_r = norm_sq(real.h_site_bs.col(r)) / antennas;
        let tau_limit = sigma2_bs / (tau_lin * sigma2_rep * beta_r);
        let pout_limit = p_max / (input_powers[r] + sigma2_rep);
        let limits = [
            (cap, GainLimiter::Cap),
            (tau_limit, GainLimiter::Tau),
            (pout_limit, GainLimiter::OutputPower),
        ];
        let (g2, which) = limits
            .iter()
            .copied()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        amp_gain[r] = g2;
        limiter[r] = Some(which);
    }

    RepeaterState {
        active: active.to_vec(),
        amp_gain,
        response_phase,
        limiter,
    }
}

/// Effective RA-MIMO channel: column `k` is
/// `h_direct_k + sum_{r active} g_r e^{i phi_r} f_{k,r} h_site_bs_r`
/// with `g_r = sqrt(amp_gain_r)`.
pub fn composite_channel(real: &ChannelRealization, state: &RepeaterState) -> CMatrix {
    let mut h = real.h_direct.clone();
    let m = real.num_antennas();
    for r in 0..real.num_sites() {
        if !state.active[r] {
            continue;
        }
        let g = state.amp_gain[r].sqrt();
        let response = num_complex::Complex64::from_polar(g, state.response_phase[r]);
        let via = real.h_site_bs.col(r).to_vec();
        for k in 0..real.num_users() {
            let scale = response * real.f_user_site.get(r, k);
            let col = h.col_mut(k);
            for i in 0..m {
                col[i] += scale * via[i];
            }
        }
    }
    h
}

/// Covariance of the amplified repeater noise at the BS array:
/// `sum_{r active} g_r^2 sigma2_rep h_site_bs_r h_site_bs_r^H`.
/// Hermitian positive semidefinite by construction.
pub fn repeated_noise_covariance(
    real: &ChannelRealization,
    state: &RepeaterState,
    cfg: &ScenarioConfig,
) -> CMatrix {
    let sigma2_rep = noise_power_linear(cfg.bandwidth_hz, cfg.temperature_k, cfg.rep_nf_db);
    let m = real.num_antennas();
    let mut cov = CMatrix::zeros(m, m);
    for r in 0..real.num_sites() {
        if state.active[r] && state.amp_gain[r] > 0.0 {
            cov.herm_rank1_update(state.amp_gain[r] * sigma2_rep, real.h_site_bs.col(r));
        }
    }
    cov
}
