//! Channel generation: large-scale state (UMi pathloss and LoS) and
//! small-scale Ricean/Rayleigh coefficients for every link class.
//!
//! Link classes per drop:
//!
//! - user -> BS array (`M x K`), Ricean toward the array when LoS;
//! - user -> site (`R x K` scalars), the direct channel of D-MIMO APs and
//!   the input channel of repeaters;
//! - site -> BS array (`M x R`), the repeater output channel.
//!
//! Coefficients are direction-symmetric: the same scalar represents the
//! link in uplink and downlink, mirroring a reciprocal repeater response.
//!
//! All randomness flows through an explicit `rng`, in a fixed documented
//! order (see [`synthesize_channels`]), so a drop is reproducible from its
//! substream alone.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMatrix, C64};
use crate::scenario::{db_to_linear, Deployment, Point3, ScenarioConfig};

pub const BOLTZMANN: f64 = 1.380649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// UMi model validity floor: distances below this are clamped before
/// pathloss evaluation.
pub const MIN_PATHLOSS_DISTANCE_M: f64 = 10.0;

/// 3GPP UMi line-of-sight probability at 2D distance `d_2d_m`:
/// `min(18/d, 1) * (1 - exp(-d/36)) + exp(-d/36)`; equals 1 for d <= 18 m.
pub fn los_probability(d_2d_m: f64) -> f64 {
    debug_assert!(d_2d_m >= 0.0);
    if d_2d_m <= 18.0 {
        return 1.0;
    }
    let e = (-d_2d_m / 36.0).exp();
    (18.0 / d_2d_m) * (1.0 - e) + e
}

/// 3GPP UMi pathloss in dB at 3D distance `d_3d_m` and carrier `fc` in GHz.
///
/// LoS: `22.0 log10(d) + 28.0 + 20 log10(fc)`,
/// NLoS: `36.7 log10(d) + 22.7 + 26 log10(fc)`.
/// The distance is clamped to [`MIN_PATHLOSS_DISTANCE_M`] first.
pub fn pathloss_db(d_3d_m: f64, is_los: bool, fc_ghz: f64) -> f64 {
    let d = d_3d_m.max(MIN_PATHLOSS_DISTANCE_M);
    if is_los {
        22.0 * d.log10() + 28.0 + 20.0 * fc_ghz.log10()
    } else {
        36.7 * d.log10() + 22.7 + 26.0 * fc_ghz.log10()
    }
}

/// Thermal noise power in watts: `k_B * T * B * 10^(NF/10)`.
pub fn noise_power_linear(bandwidth_hz: f64, temperature_k: f64, nf_db: f64) -> f64 {
    BOLTZMANN * temperature_k * bandwidth_hz * db_to_linear(nf_db)
}

/// Uniform linear array at the base station.
#[derive(Debug, Clone, Copy)]
pub struct ArrayGeometry {
    pub num_elements: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    /// Azimuth of the array broadside; the array axis lies 90 degrees away.
    pub broadside_azimuth: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        ArrayGeometry {
            num_elements: 64,
            element_spacing: 0.5,
            broadside_azimuth: 0.0,
        }
    }
}

impl ArrayGeometry {
    pub fn with_elements(num_elements: usize) -> Self {
        ArrayGeometry {
            num_elements,
            ..Default::default()
        }
    }

    /// Azimuth of `p` as seen from `from`, measured from the array broadside.
    ///
    /// The array axis runs along x and the broadside along y (rotated by
    /// `broadside_azimuth`), so `sin(azimuth) = dx / d_2d`.
    pub fn azimuth_from(&self, from: &Point3, p: &Point3) -> f64 {
        (p.x - from.x).atan2(p.y - from.y) - self.broadside_azimuth
    }
}

/// ULA steering vector: element `m` is `exp(i 2 pi spacing m sin(azimuth))`.
/// Squared norm is exactly `num_elements`.
pub fn steering_vector(geom: &ArrayGeometry, azimuth: f64) -> Vec<C64> {
    let phase_step = std::f64::consts::TAU * geom.element_spacing * azimuth.sin();
    (0..geom.num_elements)
        .map(|m| Complex64::from_polar(1.0, phase_step * m as f64))
        .collect()
}

/// Large-scale state of one link.
#[derive(Debug, Clone, Copy)]
pub struct LinkState {
    pub distance_2d: f64,
    pub distance_3d: f64,
    pub is_los: bool,
    pub pathloss_db: f64,
}

impl LinkState {
    /// Build the link between two endpoints, drawing the LoS state from the
    /// UMi probability at the 2D distance (one uniform draw).
    pub fn between(a: &Point3, b: &Point3, fc_ghz: f64, rng: &mut impl Rng) -> Self {
        let d2 = a.distance_2d(b);
        let d3 = a.distance_3d(b);
        let is_los = rng.random::<f64>() < los_probability(d2);
        LinkState {
            distance_2d: d2,
            distance_3d: d3,
            is_los,
            pathloss_db: pathloss_db(d3, is_los, fc_ghz),
        }
    }

    /// Linear power gain `10^(-pathloss/10)`.
    pub fn gain_linear(&self) -> f64 {
        db_to_linear(-self.pathloss_db)
    }

    /// Deterministic LoS phase: `-2 pi d_3d / lambda` modulo one turn,
    /// evaluated on the fractional number of wavelengths for precision.
    fn los_phase(&self, fc_ghz: f64) -> f64 {
        let lambda = SPEED_OF_LIGHT / (fc_ghz * 1e9);
        -std::f64::consts::TAU * (self.distance_3d / lambda).fract()
    }
}

/// One CN(0,1) sample: independent real and imaginary parts of variance 1/2.
fn circular_gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ricean power fractions for a K-factor given in dB: `(K/(K+1), 1/(K+1))`,
/// written to stay exact in the K -> 0 and K -> inf limits.
fn ricean_fractions(k_db: f64) -> (f64, f64) {
    let k = db_to_linear(k_db);
    (1.0 / (1.0 + 1.0 / k), 1.0 / (k + 1.0))
}

/// Draw one user/site -> BS-array channel vector.
///
/// LoS: `sqrt(beta) * (sqrt(K/(K+1)) e^{i psi} a(theta) + sqrt(1/(K+1)) w)`
/// with `w ~ CN(0, I)`; NLoS: `sqrt(beta) * w`. The scatter vector `w` is
/// drawn either way (M complex Gaussians, element order), so RNG
/// consumption does not depend on the LoS state.
pub fn draw_fading_vector(
    link: &LinkState,
    los_azimuth: f64,
    geom: &ArrayGeometry,
    k_db: f64,
    fc_ghz: f64,
    rng: &mut impl Rng,
) -> Vec<C64> {
    let m = geom.num_elements;
    let mut w: Vec<C64> = (0..m).map(|_| circular_gaussian(rng)).collect();
    let amp = link.gain_linear().sqrt();
    if link.is_los {
        let (los_frac, scatter_frac) = ricean_fractions(k_db);
        let los_amp = los_frac.sqrt();
        let scatter_amp = scatter_frac.sqrt();
        let phasor = Complex64::from_polar(los_amp, link.los_phase(fc_ghz));
        let steer = steering_vector(geom, los_azimuth);
        for (wi, ai) in w.iter_mut().zip(steer) {
            *wi = amp * (phasor * ai + scatter_amp * *wi);
        }
    } else {
        for wi in w.iter_mut() {
            *wi *= amp;
        }
    }
    w
}

/// Scalar specialization of [`draw_fading_vector`] with `a(theta) = 1`
/// (single-antenna endpoints). One complex Gaussian is always consumed.
pub fn draw_scalar_link(link: &LinkState, k_db: f64, fc_ghz: f64, rng: &mut impl Rng) -> C64 {
    let w = circular_gaussian(rng);
    let amp = link.gain_linear().sqrt();
    if link.is_los {
        let (los_frac, scatter_frac) = ricean_fractions(k_db);
        let phasor = Complex64::from_polar(los_frac.sqrt(), link.los_phase(fc_ghz));
        amp * (phasor + scatter_frac.sqrt() * w)
    } else {
        amp * w
    }
}

/// All channel coefficients for one drop.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// user -> BS array, `M x K`.
    pub h_direct: CMatrix,
    /// user -> site scalars, `R x K` (entry `(r, k)`).
    pub f_user_site: CMatrix,
    /// site -> BS array, `M x R`.
    pub h_site_bs: CMatrix,
    /// Per-user link to the BS, length K.
    pub user_bs_links: Vec<LinkState>,
    /// Site-major user/site links, index `r * K + k`, length R*K.
    pub user_site_links: Vec<LinkState>,
    /// Per-site link to the BS, length R.
    pub site_bs_links: Vec<LinkState>,
}

impl ChannelRealization {
    pub fn num_antennas(&self) -> usize {
        self.h_direct.rows()
    }

    pub fn num_users(&self) -> usize {
        self.h_direct.cols()
    }

    pub fn num_sites(&self) -> usize {
        self.h_site_bs.cols()
    }

    /// Debug dump, one row per coefficient:
    /// `link,i,j,is_los,pathloss_db,re,im` where `(i, j)` is
    /// (antenna, user) for `user_bs`, (site, user) for `user_site` and
    /// (antenna, site) for `site_bs`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "link,i,j,is_los,pathloss_db,re,im")?;
        let (m, k, r) = (self.num_antennas(), self.num_users(), self.num_sites());
        for user in 0..k {
            let link = &self.user_bs_links[user];
            for ant in 0..m {
                let v = self.h_direct.get(ant, user);
                writeln!(
                    out,
                    "user_bs,{ant},{user},{},{:.4},{:.9e},{:.9e}",
                    link.is_los as u8, link.pathloss_db, v.re, v.im
                )?;
            }
        }
        for site in 0..r {
            for user in 0..k {
                let link = &self.user_site_links[site * k + user];
                let v = self.f_user_site.get(site, user);
                writeln!(
                    out,
                    "user_site,{site},{user},{},{:.4},{:.9e},{:.9e}",
                    link.is_los as u8, link.pathloss_db, v.re, v.im
                )?;
            }
        }
        for site in 0..r {
            let link = &self.site_bs_links[site];
            for ant in 0..m {
                let v = self.h_site_bs.get(ant, site);
                writeln!(
                    out,
                    "site_bs,{ant},{site},{},{:.4},{:.9e},{:.9e}",
                    link.is_los as u8, link.pathloss_db, v.re, v.im
                )?;
            }
        }
        Ok(())
    }
}

/// Draw every link state and fading coefficient for one drop.
///
/// RNG consumption order (fixed; the determinism and sweep-pairing
/// contracts depend on it):
///
/// 1. user->BS LoS states, user index ascending;
/// 2. user->site LoS states, site-major (`r` outer, `k` inner);
/// 3. site->BS LoS states, site index ascending;
/// 4. user->BS fading vectors, user index ascending;
/// 5. user->site fading scalars, site-major;
/// 6. site->BS fading vectors, site index ascending.
///
/// LoS steering components point at the user (step 4) or site (step 6) as
/// seen from the BS.
pub fn synthesize_channels(
    dep: &Deployment,
    cfg: &ScenarioConfig,
    rng: &mut impl Rng,
) -> ChannelRealization {
    let geom = ArrayGeometry::with_elements(cfg.num_bs_antennas);
    let fc = cfg.carrier_freq_ghz;
    let k_db = cfg.k_factor_db;
    let (num_users, num_sites) = (dep.users.len(), dep.sites.len());

    let user_bs_links: Vec<LinkState> = dep
        .users
        .iter()
        .map(|u| LinkState::between(u, &dep.bs, fc, rng))
        .collect();
    let mut user_site_links = Vec::with_capacity(num_sites * num_users);
    for site in &dep.sites {
        for user in &dep.users {
            user_site_links.push(LinkState::between(user, site, fc, rng));
        }
    }
    let site_bs_links: Vec<LinkState> = dep
        .sites
        .iter()
        .map(|s| LinkState::between(s, &dep.bs, fc, rng))
        .collect();

    let direct_cols: Vec<Vec<C64>> = dep
        .users
        .iter()
        .zip(&user_bs_links)
        .map(|(u, link)| {
            let az = geom.azimuth_from(&dep.bs, u);
            draw_fading_vector(link, az, &geom, k_db, fc, rng)
        })
        .collect();
    let h_direct = CMatrix::from_columns(&direct_cols);

    let mut f_user_site = CMatrix::zeros(num_sites, num_users);
    for r in 0..num_sites {
        for k in 0..num_users {
            let f = draw_scalar_link(&user_site_links[r * num_users + k], k_db, fc, rng);
            f_user_site.set(r, k, f);
        }
    }

    let site_cols: Vec<Vec<C64>> = dep
        .sites
        .iter()
        .zip(&site_bs_links)
        .map(|(s, link)| {
            let az = geom.azimuth_from(&dep.bs, s);
            draw_fading_vector(link, az, &geom, k_db, fc, rng)
        })
        .collect();
    let h_site_bs = CMatrix::from_columns(&site_cols);

    ChannelRealization {
        h_direct,
        f_user_site,
        h_site_bs,
        user_bs_links,
        user_site_links,
        site_bs_links,
    }
}
