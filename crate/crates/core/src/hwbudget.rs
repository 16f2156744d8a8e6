//! Closed-form repeater hardware budget calculators: PA backoff for a
//! target ACLR, cascaded noise figure, I/Q-mismatch EVM, Butterworth group
//! delay, stability-limited gain, RIS equivalence, and the delay budget
//! against the cyclic prefix.
//!
//! Everything here is analytic; nothing couples back into the drop-level
//! simulator (the narrowband drop model carries no delay or distortion).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scenario::db_to_linear;

/// PA output power (dBm) for a target ACLR, third-order PA model driven by
/// an OFDM signal: `P_out = CP - ACLR/2 + 12` with CP the output-referred
/// 1-dB compression point in dBm.
pub fn pa_output_power_dbm(cp_dbm: f64, aclr_db: f64) -> f64 {
    debug_assert!(aclr_db >= 0.0);
    cp_dbm - aclr_db / 2.0 + 12.0
}

/// Cascaded noise figure with lossy passives ahead of the LNA: passive
/// losses add dB-for-dB, so the total is `sum(losses) + lna_nf`.
pub fn cascade_nf_db(passive_losses_db: &[f64], lna_nf_db: f64) -> f64 {
    passive_losses_db.iter().sum::<f64>() + lna_nf_db
}

/// How EVM contributions from the up- and down-conversion stages combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvmCombining {
    /// Identical correlated errors in every stage add linearly (the
    /// repeater's up- and down-converters share the same mismatch).
    #[default]
    Coherent,
    /// Independent stages add root-sum-square.
    Rss,
}

/// EVM fraction from I/Q gain and phase mismatch.
///
/// Per stage the image power gives `EVM = 0.5 * sqrt(g^2 + phi^2)` with the
/// gain error as a fraction and the phase error in radians (small-error
/// regime, errors below ~0.2). `stages` identical stages combine per
/// `combining`.
pub fn iq_evm_fraction(
    gain_err: f64,
    phase_err_deg: f64,
    stages: u32,
    combining: EvmCombining,
) -> f64 {
    let phase_rad = phase_err_deg.to_radians();
    let per_stage = 0.5 * (gain_err * gain_err + phase_rad * phase_rad).sqrt();
    match combining {
        EvmCombining::Coherent => stages as f64 * per_stage,
        EvmCombining::Rss => (stages as f64).sqrt() * per_stage,
    }
}

/// Poles of the analog lowpass Butterworth prototype scaled to cutoff
/// `cutoff_rad_s`: `omega_c * e^{i theta}` with theta spanning the left
/// half-plane arc.
pub fn butterworth_poles(order: usize, cutoff_rad_s: f64) -> Vec<Complex64> {
    assert!(order >= 1, "filter order must be >= 1");
    (1..=order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2.0 * k as f64 + order as f64 - 1.0)
                / (2.0 * order as f64);
            Complex64::from_polar(cutoff_rad_s, theta)
        })
        .collect()
}

/// Phase of the Butterworth transfer function `1 / prod(i w - p_k)` at
/// angular frequency `w`, as a sum of per-pole terms (continuous in `w`,
/// no unwrapping needed).
fn butterworth_phase(poles: &[Complex64], w: f64) -> f64 {
    -poles
        .iter()
        .map(|p| (Complex64::new(0.0, w) - p).arg())
        .sum::<f64>()
}

/// Group delay of an order-`n` lowpass Butterworth filter with 3-dB
/// bandwidth `bandwidth_hz`, evaluated at `at_freq_hz` by numerical
/// differentiation of the phase response.
pub fn butterworth_group_delay_s(order: usize, bandwidth_hz: f64, at_freq_hz: f64) -> f64 {
    assert!(
        at_freq_hz < bandwidth_hz,
        "group delay evaluated inside the passband only"
    );
    let wc = std::f64::consts::TAU * bandwidth_hz;
    let w = std::f64::consts::TAU * at_freq_hz;
    let poles = butterworth_poles(order, wc);
    let dw = wc * 1e-7;
    let phi_hi = butterworth_phase(&poles, w + dw);
    let phi_lo = butterworth_phase(&poles, (w - dw).max(0.0));
    // one-sided at DC, central elsewhere
    let span = (w + dw) - (w - dw).max(0.0);
    -(phi_hi - phi_lo) / span
}

/// Closed-form DC group delay: `sum_k sin(theta_k) / omega_c` over the
/// Butterworth pole angles `theta_k = (2k - 1) pi / (2n)`.
pub fn butterworth_dc_group_delay_s(order: usize, bandwidth_hz: f64) -> f64 {
    let wc = std::f64::consts::TAU * bandwidth_hz;
    let sum: f64 = (1..=order)
        .map(|k| (std::f64::consts::PI * (2.0 * k as f64 - 1.0) / (2.0 * order as f64)).sin())
        .sum();
    sum / wc
}

/// Maximum repeater gain that keeps a single-antenna repeater stable:
/// isolation minus the self-oscillation margin, in dB.
pub fn max_stable_gain_db(isolation_db: f64, margin_db: f64) -> Result<f64> {
    if margin_db > isolation_db {
        return Err(Error::Numerical(format!(
            "margin {margin_db} dB exceeds isolation {isolation_db} dB: no stable gain exists"
        )));
    }
    Ok(isolation_db - margin_db)
}

/// Number of RIS unit cells matching a repeater of the given power gain:
/// `ceil(sqrt(A))` for amplification `A` (a RIS amplitude-combines, so the
/// cell count squared recovers the power gain).
pub fn ris_equivalent_cells(gain_db: f64) -> u64 {
    debug_assert!(gain_db >= 0.0);
    db_to_linear(gain_db).sqrt().ceil() as u64
}

/// Outcome of a delay budget check against the cyclic prefix.
#[derive(Debug, Clone, Copy)]
pub struct DelayVerdict {
    pub pass: bool,
    pub total_delay_s: f64,
    /// Total delay over the cyclic prefix duration.
    pub ratio: f64,
}

/// Sum the component delays and compare against the cyclic prefix.
pub fn delay_budget_check(component_delays_s: &[f64], cyclic_prefix_s: f64) -> DelayVerdict {
    let total: f64 = component_delays_s.iter().sum();
    DelayVerdict {
        pass: total <= cyclic_prefix_s,
        total_delay_s: total,
        ratio: total / cyclic_prefix_s,
    }
}

/// Normal cyclic prefix duration at 15 kHz subcarrier spacing, seconds.
pub const DEFAULT_CYCLIC_PREFIX_S: f64 = 4.7e-6;

/// Input parameters of a repeater hardware budget.
#[derive(Debug, Clone)]
pub struct RepeaterBudget {
    pub filter_loss_db: f64,
    pub switch_loss_db: f64,
    pub lna_nf_db: f64,
    /// Output-referred 1-dB compression point, dBm.
    pub cp_dbm: f64,
    pub target_aclr_db: f64,
    /// I/Q gain error as a fraction.
    pub iq_gain_err: f64,
    /// I/Q phase error, degrees.
    pub iq_phase_err_deg: f64,
    pub filter_order: usize,
    pub filter_bandwidth_hz: f64,
    /// PA-to-LNA isolation of the antenna interface, dB.
    pub isolation_db: f64,
    /// Margin kept below the isolation to avoid self-oscillation, dB.
    pub stability_margin_db: f64,
    pub cyclic_prefix_s: f64,
    /// Extra fixed processing delay (e.g. digital filtering path), seconds.
    pub processing_delay_s: f64,
}

impl Default for RepeaterBudget {
    fn default() -> Self {
        RepeaterBudget {
            filter_loss_db: 2.0,
            switch_loss_db: 0.3,
            lna_nf_db: 3.0,
            cp_dbm: 28.0,
            target_aclr_db: 40.0,
            iq_gain_err: 0.01,
            iq_phase_err_deg: 1.0,
            filter_order: 5,
            filter_bandwidth_hz: 10e6,
            isolation_db: 50.0,
            stability_margin_db: 10.0,
            cyclic_prefix_s: DEFAULT_CYCLIC_PREFIX_S,
            processing_delay_s: 100e-9,
        }
    }
}

/// Derived budget figures; see [`RepeaterBudget::report`].
#[derive(Debug, Clone)]
pub struct BudgetReport {
    pub total_nf_db: f64,
    pub pa_output_dbm: f64,
    pub evm_fraction: f64,
    pub filter_group_delay_s: f64,
    pub max_stable_gain_db: f64,
    pub ris_cells_for_max_gain: u64,
    pub delay: DelayVerdict,
}

impl RepeaterBudget {
    /// Evaluate every calculator on this budget.
    pub fn report(&self) -> Result<BudgetReport> {
        let total_nf_db = cascade_nf_db(&[self.filter_loss_db, self.switch_loss_db], self.lna_nf_db);
        let pa_output_dbm = pa_output_power_dbm(self.cp_dbm, self.target_aclr_db);
        let evm_fraction = iq_evm_fraction(
            self.iq_gain_err,
            self.iq_phase_err_deg,
            2,
            EvmCombining::Coherent,
        );
        let filter_group_delay_s =
            butterworth_group_delay_s(self.filter_order, self.filter_bandwidth_hz, 0.0);
        let max_gain = max_stable_gain_db(self.isolation_db, self.stability_margin_db)?;
        let delay = delay_budget_check(
            &[filter_group_delay_s, self.processing_delay_s],
            self.cyclic_prefix_s,
        );
        Ok(BudgetReport {
            total_nf_db,
            pa_output_dbm,
            evm_fraction,
            filter_group_delay_s,
            max_stable_gain_db: max_gain,
            ris_cells_for_max_gain: ris_equivalent_cells(max_gain),
            delay,
        })
    }
}
