//! Post-combining uplink SINR under MMSE with an arbitrary (colored) noise
//! covariance, and assembly of the per-architecture uplink problem.
//!
//! The per-user SINR is evaluated in closed form,
//!
//! `SINR_k = p_k h_k^H (sum_{j != k} p_j h_j h_j^H + C)^{-1} h_k`,
//!
//! via a Cholesky factorization of the leave-one-out covariance and one
//! triangular solve per user, never an explicit inverse. With perfect CSI
//! this equals the SINR of the MMSE combiner.

use crate::channel::{noise_power_linear, ChannelRealization};
use crate::error::{Error, Result};
use crate::linalg::{forward_solve, norm_sq, CMatrix};
use crate::repeater::{composite_channel, repeated_noise_covariance, RepeaterState};
use crate::scenario::{Mode, ScenarioConfig};

/// One uplink combining problem: effective channel, transmit powers, and
/// total noise covariance at the receive array.
#[derive(Debug, Clone)]
pub struct UplinkProblem {
    /// Effective channel, `M x K`.
    pub channel: CMatrix,
    /// Per-user transmit power, watts, length K.
    pub tx_powers: Vec<f64>,
    /// Noise covariance, `M x M`, Hermitian with a positive diagonal.
    pub noise_cov: CMatrix,
}

impl UplinkProblem {
    pub fn num_users(&self) -> usize {
        self.channel.cols()
    }

    pub fn num_antennas(&self) -> usize {
        self.channel.rows()
    }
}

/// Closed-form per-user MMSE SINRs (linear).
///
/// Fails only when the noise covariance lacks its thermal floor and the
/// leave-one-out covariance cannot be factorized.
pub fn mmse_sinr(problem: &UplinkProblem) -> Result<Vec<f64>> {
    let k_users = problem.num_users();
    assert_eq!(problem.tx_powers.len(), k_users, "power vector length mismatch");
    assert_eq!(
        problem.noise_cov.rows(),
        problem.num_antennas(),
        "noise covariance dimension mismatch"
    );

    let mut sinrs = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let mut cov = problem.noise_cov.clone();
        for j in 0..k_users {
            if j != k {
                cov.herm_rank1_update(problem.tx_powers[j], problem.channel.col(j));
            }
        }
        let chol = cov.cholesky().map_err(|e| {
            Error::Numerical(format!("user {k} interference-plus-noise covariance: {e}"))
        })?;
        let y = forward_solve(&chol, problem.channel.col(k));
        sinrs.push(problem.tx_powers[k] * norm_sq(&y));
    }
    Ok(sinrs)
}

/// Build the uplink problem for one architecture on a synthesized drop.
///
/// - C-MIMO: direct user->BS channels, white BS noise.
/// - D-MIMO: stacked user->site scalars as an `R x K` channel, white AP
///   noise (APs reuse the BS noise figure).
/// - RA-MIMO: composite channel through the active repeaters; noise is BS
///   thermal plus the amplified repeater noise covariance.
pub fn assemble_problem(
    mode: Mode,
    real: &ChannelRealization,
    repeater_state: Option<&RepeaterState>,
    cfg: &ScenarioConfig,
) -> Result<UplinkProblem> {
    let p_user = cfg.user_tx_power_w();
    let tx_powers = vec![p_user; real.num_users()];
    let sigma2_bs = noise_power_linear(cfg.bandwidth_hz, cfg.temperature_k, cfg.bs_nf_db);

    let problem = match mode {
        Mode::Cmimo => UplinkProblem {
            channel: real.h_direct.clone(),
            tx_powers,
            noise_cov: CMatrix::scaled_identity(real.num_antennas(), sigma2_bs),
        },
        Mode::Dmimo => UplinkProblem {
            channel: real.f_user_site.clone(),
            tx_powers,
            noise_cov: CMatrix::scaled_identity(real.num_sites(), sigma2_bs),
        },
        Mode::Ramimo => {
            let state = repeater_state.ok_or_else(|| {
                Error::Numerical("RA-MIMO problem assembly needs a repeater state".into())
            })?;
            let thermal = CMatrix::scaled_identity(real.num_antennas(), sigma2_bs);
            UplinkProblem {
                channel: composite_channel(real, state),
                tx_powers,
                noise_cov: thermal.add(&repeated_noise_covariance(real, state, cfg)),
            }
        }
    };
    Ok(problem)
}
