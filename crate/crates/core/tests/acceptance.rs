//! Acceptance suite: one test per release criterion, each printing a
//! single PASS/FAIL line (shown with `--nocapture`, or automatically for
//! failures). Campaigns at the reference scale (64 antennas, 8 users,
//! 1000 drops) are computed once and shared across criteria.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ramimo_core::channel::{
    draw_fading_vector, draw_scalar_link, los_probability, pathloss_db, steering_vector,
    ArrayGeometry, LinkState,
};
use ramimo_core::hwbudget;
use ramimo_core::linalg::{dot_herm, norm_sq, C64, CMatrix};
use ramimo_core::montecarlo::{
    bootstrap_percentile_gap_ci, run_campaign_with_threads, run_drop, write_samples_csv,
    CampaignResult, PERCENTILE_LEVELS,
};
use ramimo_core::receiver::{mmse_sinr, UplinkProblem};
use ramimo_core::repeater::{activation_mask, gain_control, repeated_noise_covariance};
use ramimo_core::scenario::{build_deployment, Mode, ScenarioConfig};

const CAMPAIGN_SEED: u64 = 2026;
const CAMPAIGN_DROPS: usize = 1000;

fn base_cfg(mode: Mode) -> ScenarioConfig {
    ScenarioConfig {
        mode,
        num_drops: CAMPAIGN_DROPS,
        seed: CAMPAIGN_SEED,
        ..Default::default()
    }
}

struct Campaigns {
    cmimo: OnceLock<CampaignResult>,
    dmimo: OnceLock<CampaignResult>,
    ra_default: OnceLock<CampaignResult>,
    ra_cap25: OnceLock<CampaignResult>,
    ra_cap65: OnceLock<CampaignResult>,
    ra_tau20: OnceLock<CampaignResult>,
    ra_tau60: OnceLock<CampaignResult>,
    ra_nf0: OnceLock<CampaignResult>,
}

static CAMPAIGNS: Campaigns = Campaigns {
    cmimo: OnceLock::new(),
    dmimo: OnceLock::new(),
    ra_default: OnceLock::new(),
    ra_cap25: OnceLock::new(),
    ra_cap65: OnceLock::new(),
    ra_tau20: OnceLock::new(),
    ra_tau60: OnceLock::new(),
    ra_nf0: OnceLock::new(),
};

fn campaign(slot: &OnceLock<CampaignResult>, mutate: impl Fn(&mut ScenarioConfig)) -> &CampaignResult {
    slot.get_or_init(|| {
        let mut cfg = base_cfg(Mode::Ramimo);
        mutate(&mut cfg);
        run_campaign_with_threads(&cfg.validated().unwrap(), None).expect("campaign failed")
    })
}

fn report(criterion: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance criterion {criterion} ({name}): {verdict}: {detail}");
    assert!(pass, "criterion {criterion} ({name}) failed: {detail}");
}

#[test]
fn criterion_1_reduction_oracle() {
    // RA-MIMO with tau = +inf (and with activation threshold = +inf) must
    // reproduce C-MIMO per-user SINRs within 1e-9 dB on shared-seed drops.
    let drops = 100u64;
    let cm = ScenarioConfig {
        num_drops: drops as usize,
        seed: 404,
        mode: Mode::Cmimo,
        ..Default::default()
    };
    let ra_tau = ScenarioConfig {
        mode: Mode::Ramimo,
        tau_db: f64::INFINITY,
        ..cm.clone()
    };
    let ra_mask = ScenarioConfig {
        mode: Mode::Ramimo,
        activation_snr_margin_db: f64::INFINITY,
        ..cm.clone()
    };

    let mut worst: f64 = 0.0;
    for d in 0..drops {
        let reference = run_drop(&cm, d).unwrap();
        for variant in [&ra_tau, &ra_mask] {
            let ra = run_drop(variant, d).unwrap();
            for (a, b) in ra.sinr_db.iter().zip(&reference.sinr_db) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    report(
        1,
        "reduction oracle",
        worst <= 1e-9,
        format!("max |RA(tau=inf) - CMIMO| = {worst:.3e} dB over {drops} drops"),
    );
}

#[test]
fn criterion_2_architecture_ordering() {
    let cm = campaign(&CAMPAIGNS.cmimo, |c| c.mode = Mode::Cmimo);
    let dm = campaign(&CAMPAIGNS.dmimo, |c| c.mode = Mode::Dmimo);
    let ra = campaign(&CAMPAIGNS.ra_default, |_| {});

    let mut pass = true;
    let mut lines = Vec::new();
    for level in [5.0, 10.0, 25.0, 50.0] {
        let (dm_lo, _) = bootstrap_percentile_gap_ci(dm, ra, level, 0.95, 400, 11);
        let (ra_lo, _) = bootstrap_percentile_gap_ci(ra, cm, level, 0.95, 400, 12);
        let ok = dm_lo > 0.0 && ra_lo > 0.0;
        pass &= ok;
        lines.push(format!(
            "p{level:.0}: D-RA gap {:.2} dB (CI low {dm_lo:.2}), RA-C gap {:.2} dB (CI low {ra_lo:.2})",
            dm.percentile(level) - ra.percentile(level),
            ra.percentile(level) - cm.percentile(level),
        ));
    }
    report(2, "architecture ordering", pass, lines.join("; "));
}

#[test]
fn criterion_3_cap_sweep_shape() {
    let p25 = campaign(&CAMPAIGNS.ra_cap25, |c| c.gain_cap_db = 25.0).percentile(10.0);
    let p45 = campaign(&CAMPAIGNS.ra_default, |_| {}).percentile(10.0);
    let p65 = campaign(&CAMPAIGNS.ra_cap65, |c| c.gain_cap_db = 65.0).percentile(10.0);
    report(
        3,
        "cap sweep shape",
        p45 >= p25 && p45 >= p65,
        format!("p10 at cap 25/45/65 dB = {p25:.2}/{p45:.2}/{p65:.2} dB (want maximum at 45)"),
    );
}

#[test]
fn criterion_4_tau_sweep_shape() {
    let p20 = campaign(&CAMPAIGNS.ra_tau20, |c| c.tau_db = 20.0).percentile(10.0);
    let p40 = campaign(&CAMPAIGNS.ra_default, |_| {}).percentile(10.0);
    let p60 = campaign(&CAMPAIGNS.ra_tau60, |c| c.tau_db = 60.0).percentile(10.0);
    let cm_p90 = campaign(&CAMPAIGNS.cmimo, |c| c.mode = Mode::Cmimo).percentile(90.0);
    let ra40_p90 = campaign(&CAMPAIGNS.ra_default, |_| {}).percentile(90.0);
    let ra60_p90 = campaign(&CAMPAIGNS.ra_tau60, |c| c.tau_db = 60.0).percentile(90.0);

    let peak = p40 > p20 && p40 > p60;
    let high_sinr = (ra60_p90 - cm_p90).abs() < (ra40_p90 - cm_p90).abs();
    report(
        4,
        "tau sweep shape",
        peak && high_sinr,
        format!(
            "p10 at tau 20/40/60 dB = {p20:.2}/{p40:.2}/{p60:.2} dB (want maximum at 40); \
             p90 |RA(60)-C| = {:.3} vs |RA(40)-C| = {:.3} dB (want first smaller)",
            (ra60_p90 - cm_p90).abs(),
            (ra40_p90 - cm_p90).abs()
        ),
    );
}

#[test]
fn criterion_5_nf_dominance() {
    let nf5 = campaign(&CAMPAIGNS.ra_default, |_| {});
    let nf0 = campaign(&CAMPAIGNS.ra_nf0, |c| c.rep_nf_db = 0.0);
    let mut pass = true;
    let mut worst_level = 0.0;
    let mut worst_gap = f64::INFINITY;
    for &level in &PERCENTILE_LEVELS {
        let gap = nf0.percentile(level) - nf5.percentile(level);
        if gap < worst_gap {
            worst_gap = gap;
            worst_level = level;
        }
        // weak dominance, with 1e-9 dB slack for floating-point ties
        pass &= gap >= -1e-9;
    }
    report(
        5,
        "repeater NF dominance",
        pass,
        format!(
            "NF0 - NF5 gap >= {worst_gap:.4} dB at every reported percentile (tightest at p{worst_level:.0})"
        ),
    );
}

#[test]
fn criterion_6_hardware_number_pins() {
    let pa = hwbudget::pa_output_power_dbm(28.0, 40.0);
    let pa_rel = hwbudget::pa_output_power_dbm(0.0, 40.0);
    let nf = hwbudget::cascade_nf_db(&[2.0], 3.0);
    let evm = hwbudget::iq_evm_fraction(0.01, 1.0, 2, hwbudget::EvmCombining::Coherent);
    let delay = hwbudget::butterworth_group_delay_s(5, 10e6, 0.0);
    let gain = hwbudget::max_stable_gain_db(50.0, 10.0).unwrap();
    let cells = hwbudget::ris_equivalent_cells(60.0);

    let pass = pa == 20.0
        && pa_rel == -8.0
        && nf == 5.0
        && (0.019..=0.021).contains(&evm)
        && (45e-9..=55e-9).contains(&delay)
        && gain == 40.0
        && cells == 1000;
    report(
        6,
        "hardware number pins",
        pass,
        format!(
            "pa_out(28,40)={pa} dBm; pa_out(CP,40)=CP{pa_rel:+}; nf({{2}},3)={nf} dB; \
             evm(1%,1deg,2)={:.3}%; butterworth(5,10MHz,0)={:.1} ns; max_gain(50,10)={gain} dB; \
             ris_cells(60)={cells}",
            evm * 100.0,
            delay * 1e9
        ),
    );
}

/// Combiner-form oracle: invert B = H P H^H + C by Gauss-Jordan, form the
/// MMSE weights w_k = B^{-1} h_k, and compute the SINR from the combiner
/// output power ratio. Fully independent of the Cholesky path under test.
fn combiner_form_sinr(p: &UplinkProblem) -> Vec<f64> {
    let m = p.num_antennas();
    let mut b = p.noise_cov.clone();
    for j in 0..p.num_users() {
        b.herm_rank1_update(p.tx_powers[j], p.channel.col(j));
    }
    let b_inv = gauss_jordan_inverse(&b);
    (0..p.num_users())
        .map(|k| {
            let h_k = p.channel.col(k);
            let w: Vec<C64> = (0..m)
                .map(|i| (0..m).map(|j| b_inv.get(i, j) * h_k[j]).sum())
                .collect();
            let signal = p.tx_powers[k] * dot_herm(&w, h_k).norm_sqr();
            let mut denom = 0.0;
            for j in 0..p.num_users() {
                if j != k {
                    denom += p.tx_powers[j] * dot_herm(&w, p.channel.col(j)).norm_sqr();
                }
            }
            let cw: Vec<C64> = (0..m)
                .map(|i| (0..m).map(|j| p.noise_cov.get(i, j) * w[j]).sum())
                .collect();
            denom += dot_herm(&w, &cw).re;
            signal / denom
        })
        .collect()
}

fn gauss_jordan_inverse(a: &CMatrix) -> CMatrix {
    let n = a.rows();
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let mut aug: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut row: Vec<C64> = (0..n).map(|j| a.get(i, j)).collect();
            row.extend((0..n).map(|j| if i == j { one } else { zero }));
            row
        })
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| aug[i][col].norm_sqr().total_cmp(&aug[j][col].norm_sqr()))
            .unwrap();
        aug.swap(col, pivot_row);
        let pivot = aug[col][col];
        for j in 0..2 * n {
            aug[col][j] /= pivot;
        }
        for i in 0..n {
            if i != col {
                let f = aug[i][col];
                for j in 0..2 * n {
                    let sub = f * aug[col][j];
                    aug[i][j] -= sub;
                }
            }
        }
    }
    let mut inv = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, aug[i][j + n]);
        }
    }
    inv
}

fn random_problem(rng: &mut ChaCha8Rng, m: usize, k: usize) -> UplinkProblem {
    let draw = |rng: &mut ChaCha8Rng| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let cols: Vec<Vec<C64>> = (0..k)
        .map(|_| (0..m).map(|_| draw(rng)).collect())
        .collect();
    let mut noise = CMatrix::scaled_identity(m, 0.05 + rng.random::<f64>());
    for _ in 0..3 {
        let v: Vec<C64> = (0..m).map(|_| draw(rng)).collect();
        noise.herm_rank1_update(0.1 * rng.random::<f64>(), &v);
    }
    UplinkProblem {
        channel: CMatrix::from_columns(&cols),
        tx_powers: (0..k).map(|_| 0.25 + rng.random::<f64>()).collect(),
        noise_cov: noise,
    }
}

#[test]
fn criterion_7_numerical_identities() {
    // closed form vs combiner form on 1000 random instances
    let mut rng = ChaCha8Rng::seed_from_u64(7001);
    let mut worst_rel: f64 = 0.0;
    for i in 0..1000 {
        let (m, k) = if i % 10 == 0 { (32, 8) } else { (12, 5) };
        let p = random_problem(&mut rng, m, k);
        let closed = mmse_sinr(&p).unwrap();
        let oracle = combiner_form_sinr(&p);
        for (a, b) in closed.iter().zip(&oracle) {
            worst_rel = worst_rel.max((a - b).abs() / a.max(*b));
        }
    }
    let identity_ok = worst_rel <= 1e-9;

    // Hermitian-PSD checks on the repeated-noise covariance, every drop
    let cfg = base_cfg(Mode::Ramimo);
    let mut psd_ok = true;
    for d in 0..200u64 {
        let mut drop_rng = ramimo_core::montecarlo::drop_rng(cfg.seed, d);
        let dep = build_deployment(&cfg, &mut drop_rng);
        let real = ramimo_core::channel::synthesize_channels(&dep, &cfg, &mut drop_rng);
        let active = activation_mask(&real, &cfg);
        let state = gain_control(&real, &active, &cfg, &mut drop_rng);
        let cov = repeated_noise_covariance(&real, &state, &cfg);
        let trace = cov.trace_real();
        psd_ok &= cov.hermitian_error() <= 1e-12 * trace.max(1e-300);
        if trace > 0.0 {
            // eigenvalues >= -1e-12 * trace iff the shifted matrix is PD
            let shifted = cov.add(&CMatrix::scaled_identity(cov.rows(), 1e-12 * trace));
            psd_ok &= shifted.cholesky().is_ok();
        }
    }

    // SINR monotone non-increasing under PSD noise additions
    let mut mono_ok = true;
    for _ in 0..100 {
        let p = random_problem(&mut rng, 10, 4);
        let base = mmse_sinr(&p).unwrap();
        let mut perturbed = p.clone();
        let v: Vec<C64> = (0..10)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        perturbed.noise_cov.herm_rank1_update(0.5 * rng.random::<f64>(), &v);
        let worse = mmse_sinr(&perturbed).unwrap();
        mono_ok &= base.iter().zip(&worse).all(|(b, w)| *w <= b * (1.0 + 1e-12));
    }

    report(
        7,
        "numerical identities",
        identity_ok && psd_ok && mono_ok,
        format!(
            "closed vs combiner worst rel err {worst_rel:.2e} (1000 instances); \
             covariance Hermitian-PSD on 200 drops: {psd_ok}; PSD-monotonicity on 100 trials: {mono_ok}"
        ),
    );
}

#[test]
fn criterion_8_statistical_channel_checks() {
    let draws = 100_000;
    let fc = 3.6;
    let k_db = 10.0;
    let geom = ArrayGeometry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8001);

    // unit-mean fading per link class: sample mean of |h|^2 / beta in [0.98, 1.02]
    let mut unit_ok = true;
    let mut unit_lines = Vec::new();
    for (label, is_los, scalar) in [
        ("vector NLoS", false, false),
        ("vector LoS", true, false),
        ("scalar NLoS", false, true),
        ("scalar LoS", true, true),
    ] {
        let link = LinkState {
            distance_2d: 150.0,
            distance_3d: 150.3,
            is_los,
            pathloss_db: pathloss_db(150.3, is_los, fc),
        };
        let beta = link.gain_linear();
        let mut acc = 0.0;
        for _ in 0..draws {
            if scalar {
                acc += draw_scalar_link(&link, k_db, fc, &mut rng).norm_sqr() / beta;
            } else {
                let h = draw_fading_vector(&link, 0.4, &geom, k_db, fc, &mut rng);
                acc += norm_sq(&h) / (beta * geom.num_elements as f64);
            }
        }
        let mean = acc / draws as f64;
        unit_ok &= (0.98..=1.02).contains(&mean);
        unit_lines.push(format!("{label}: {mean:.4}"));
    }

    // empirical LoS frequency matches the model within 3 sigma
    let mut los_ok = true;
    let mut los_lines = Vec::new();
    for d in [10.0, 36.0, 100.0, 300.0] {
        let p = los_probability(d);
        let a = ramimo_core::scenario::Point3::new(0.0, 0.0, 1.5);
        let b = ramimo_core::scenario::Point3::new(d, 0.0, 11.5);
        let mut hits = 0usize;
        for _ in 0..draws {
            if LinkState::between(&a, &b, fc, &mut rng).is_los {
                hits += 1;
            }
        }
        let freq = hits as f64 / draws as f64;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        los_ok &= (freq - p).abs() <= 3.0 * sigma + 1e-12;
        los_lines.push(format!("d={d}: {freq:.4} vs {p:.4}"));
    }

    // steering vector norm at machine precision
    let mut steer_ok = true;
    for _ in 0..100 {
        let az = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let v = steering_vector(&geom, az);
        steer_ok &= (norm_sq(&v) - 64.0).abs() <= 1e-12;
    }

    report(
        8,
        "statistical channel checks",
        unit_ok && los_ok && steer_ok,
        format!(
            "unit-mean [{}]; LoS frequency [{}]; steering norm within 1e-12: {steer_ok}",
            unit_lines.join(", "),
            los_lines.join(", ")
        ),
    );
}

#[test]
fn criterion_9_thread_count_determinism() {
    let cfg = ScenarioConfig {
        num_drops: 100,
        seed: 909,
        ..base_cfg(Mode::Ramimo)
    };
    let mut outputs = Vec::new();
    for threads in [1usize, 4, 16] {
        let res = run_campaign_with_threads(&cfg, Some(threads)).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &res).unwrap();
        outputs.push(buf);
    }
    let identical = outputs.windows(2).all(|w| w[0] == w[1]);
    report(
        9,
        "thread-count determinism",
        identical,
        format!(
            "samples.csv byte-identical across 1/4/16 worker threads ({} bytes)",
            outputs[0].len()
        ),
    );
}
