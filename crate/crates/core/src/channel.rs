//! Scenario constants, line-of-sight components and Rician channel draws.
//!
//! Channel entries are normalized (unit-variance fading). Distances and
//! pathloss exponents only enter through the SNR scale `gamma0` and the
//! direct-to-reflected path-gain ratio `lambda`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::numerics::{
    domain, sample_cn, sample_cn_vector, steering_vector, CMatrix, CVector, RngStream,
};

/// Tolerance on `|phi_i| = 1` when a phase beam enters a channel product.
pub const UNIT_MODULUS_TOL: f64 = 1e-9;

/// LoS angles (per-element phase increments), each reduced to `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleSet {
    /// Arrival at the IRS on the AP-IRS link.
    pub theta_aoa_1: f64,
    /// Departure from the AP on the AP-IRS link.
    pub theta_aod_1: f64,
    /// Departure from the IRS towards the user.
    pub theta_aod_2: f64,
    /// Departure from the AP on the direct link.
    pub theta_aod_0: f64,
}

impl AngleSet {
    pub fn new(theta_aoa_1: f64, theta_aod_1: f64, theta_aod_2: f64, theta_aod_0: f64) -> Self {
        AngleSet {
            theta_aoa_1: wrap_angle(theta_aoa_1),
            theta_aod_1: wrap_angle(theta_aod_1),
            theta_aod_2: wrap_angle(theta_aod_2),
            theta_aod_0: wrap_angle(theta_aod_0),
        }
    }

    /// Four angles drawn uniformly from `[0, 2 pi)`; one draw per seed.
    pub fn random(seed: u64) -> Self {
        let mut s = RngStream::with_domain(seed, domain::ANGLES, 0);
        let theta_aoa_1 = s.uniform_angle();
        let theta_aod_1 = s.uniform_angle();
        let theta_aod_2 = s.uniform_angle();
        let theta_aod_0 = s.uniform_angle();
        AngleSet::new(theta_aoa_1, theta_aod_1, theta_aod_2, theta_aod_0)
    }
}

impl Default for AngleSet {
    fn default() -> Self {
        AngleSet::new(0.0, 0.0, 0.0, 0.0)
    }
}

fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Every constant describing one link scenario. Link index 0 is AP-user,
/// 1 is AP-IRS and 2 is IRS-user.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// AP antennas.
    pub m: usize,
    /// IRS elements.
    pub n: usize,
    pub p_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub bandwidth_hz: f64,
    /// `d0, d1, d2` in meters.
    pub distances: [f64; 3],
    /// `alpha0, alpha1, alpha2`.
    pub exponents: [f64; 3],
    /// Linear Rician K-factors `K0, K1, K2`; `f64::INFINITY` means pure LoS.
    pub k_factors: [f64; 3],
    pub angles: AngleSet,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m: 8,
            n: 128,
            p_dbm: -40.0,
            noise_psd_dbm_hz: -170.0,
            bandwidth_hz: 180e3,
            distances: [200.0, 250.0, 50.0],
            exponents: [3.5, 2.5, 2.2],
            k_factors: [1.0, 1.0, 1.0],
            angles: AngleSet::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::Config(format!(
                "antenna counts must be positive (M={}, N={})",
                self.m, self.n
            )));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz.is_finite()) {
            return Err(Error::Config(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            )));
        }
        for (i, d) in self.distances.iter().enumerate() {
            if !(*d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!("d{i} must be positive, got {d}")));
            }
        }
        for (i, a) in self.exponents.iter().enumerate() {
            if !(*a > 0.0 && a.is_finite()) {
                return Err(Error::Config(format!(
                    "alpha{i} must be positive, got {a}"
                )));
            }
        }
        for (i, k) in self.k_factors.iter().enumerate() {
            if k.is_nan() || *k < 0.0 {
                return Err(Error::Config(format!("K{i} must be >= 0, got {k}")));
            }
        }
        if !self.p_dbm.is_finite() || !self.noise_psd_dbm_hz.is_finite() {
            return Err(Error::Config("power and noise PSD must be finite".into()));
        }
        Ok(())
    }
}

/// Derived scalars shared by every design and evaluation routine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkParams {
    pub gamma0: f64,
    pub lambda: f64,
    /// LoS weights `sqrt(K/(K+1))` per link.
    pub a: [f64; 3],
    /// NLoS weights `sqrt(1/(K+1))` per link.
    pub b: [f64; 3],
}

impl LinkParams {
    /// Same parameters with the direct link switched to Rayleigh fading.
    pub fn with_rayleigh_direct(mut self) -> Self {
        self.a[0] = 0.0;
        self.b[0] = 1.0;
        self
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Rician LoS/NLoS weights `(a, b)` for a linear K-factor.
pub fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

pub fn derive_link_params(config: &SystemConfig) -> Result<LinkParams> {
    config.validate()?;
    let noise_dbm = config.noise_psd_dbm_hz + 10.0 * config.bandwidth_hz.log10();
    let noise_w = dbm_to_watts(noise_dbm);
    let power_w = dbm_to_watts(config.p_dbm);
    let [d0, d1, d2] = config.distances;
    let [alpha0, alpha1, alpha2] = config.exponents;
    let reflected_loss = d1.powf(alpha1) * d2.powf(alpha2);
    let direct_loss = d0.powf(alpha0);

    let mut a = [0.0; 3];
    let mut b = [0.0; 3];
    for (i, &k) in config.k_factors.iter().enumerate() {
        (a[i], b[i]) = rician_weights(k);
    }
    Ok(LinkParams {
        gamma0: power_w / (reflected_loss * noise_w),
        lambda: (reflected_loss / direct_loss).sqrt(),
        a,
        b,
    })
}

/// Deterministic LoS parts of the three channels.
#[derive(Clone, Debug, PartialEq)]
pub struct LosComponents {
    /// `a_N(theta_aoa_1) a_M^T(theta_aod_1)`, N x M.
    pub h1_bar: CMatrix,
    /// `a_N(theta_aod_2)`.
    pub h2_bar: CVector,
    /// `a_M(theta_aod_0)`.
    pub g_bar: CVector,
    /// Factors of the rank-one `h1_bar`.
    pub irs_arrival: CVector,
    pub ap_departure: CVector,
}

impl LosComponents {
    pub fn m(&self) -> usize {
        self.g_bar.len()
    }

    pub fn n(&self) -> usize {
        self.h2_bar.len()
    }

    /// `h1_bar f`, computed through the rank-one factorization.
    pub fn h1_bar_times(&self, f: &CVector) -> Result<CVector> {
        let s = self.ap_departure.dot(f)?;
        Ok(self.irs_arrival.scale(s))
    }
}

pub fn los_components(angles: &AngleSet, m: usize, n: usize) -> Result<LosComponents> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!(
            "M and N must be positive (M={m}, N={n})"
        )));
    }
    let irs_arrival = steering_vector(angles.theta_aoa_1, n)?;
    let ap_departure = steering_vector(angles.theta_aod_1, m)?;
    Ok(LosComponents {
        h1_bar: CMatrix::outer(&irs_arrival, &ap_departure),
        h2_bar: steering_vector(angles.theta_aod_2, n)?,
        g_bar: steering_vector(angles.theta_aod_0, m)?,
        irs_arrival,
        ap_departure,
    })
}

/// One draw of the three channels.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// AP-IRS, N x M.
    pub h1: CMatrix,
    /// IRS-user, length N.
    pub h2: CVector,
    /// AP-user, length M.
    pub g: CVector,
}

/// Unit-variance NLoS parts `H1~, h2~, g~` of one draw.
#[derive(Clone, Debug, PartialEq)]
pub struct NlosDraw {
    pub h1: CMatrix,
    pub h2: CVector,
    pub g: CVector,
}

/// Draws `H1~` (row-major), then `h2~`, then `g~` from the stream.
pub fn sample_nlos(m: usize, n: usize, stream: &mut RngStream) -> Result<NlosDraw> {
    let h1 = sample_cn(n, m, stream)?;
    let h2 = sample_cn_vector(n, stream)?;
    let g = sample_cn_vector(m, stream)?;
    Ok(NlosDraw { h1, h2, g })
}

/// Mixes LoS and NLoS parts with the Rician weights of `params`.
pub fn combine(los: &LosComponents, params: &LinkParams, nlos: &NlosDraw) -> Result<ChannelRealization> {
    let [a0, a1, a2] = params.a;
    let [b0, b1, b2] = params.b;
    Ok(ChannelRealization {
        h1: los.h1_bar.scale_real(a1).add(&nlos.h1.scale_real(b1))?,
        h2: los.h2_bar.scale_real(a2).add(&nlos.h2.scale_real(b2))?,
        g: los.g_bar.scale_real(a0).add(&nlos.g.scale_real(b0))?,
    })
}

pub fn sample_channel(
    los: &LosComponents,
    params: &LinkParams,
    stream: &mut RngStream,
) -> Result<ChannelRealization> {
    let nlos = sample_nlos(los.m(), los.n(), stream)?;
    combine(los, params, &nlos)
}

pub(crate) fn check_unit_modulus(phi: &CVector) -> Result<()> {
    for (index, z) in phi.iter().enumerate() {
        let modulus = z.norm();
        if !((modulus - 1.0).abs() <= UNIT_MODULUS_TOL) {
            return Err(Error::NonUnitModulus { index, modulus });
        }
    }
    Ok(())
}

/// Composite row `h2^T diag(phi) H1 + lambda g^T`.
pub fn effective_row(real: &ChannelRealization, phi: &CVector, lambda: f64) -> Result<CVector> {
    check_unit_modulus(phi)?;
    let weighted = real.h2.hadamard(phi)?;
    let reflected = real.h1.left_mul_vec(&weighted)?;
    reflected.add(&real.g.scale_real(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::C64;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn unit_k_gives_equal_weights() {
        let p = derive_link_params(&SystemConfig::default()).unwrap();
        for i in 0..3 {
            assert!((p.a[i] - FRAC_1_SQRT_2).abs() < 1e-15);
            assert!((p.b[i] - FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_k_is_rayleigh() {
        let cfg = SystemConfig {
            k_factors: [0.0, 1.0, 1.0],
            ..SystemConfig::default()
        };
        let p = derive_link_params(&cfg).unwrap();
        assert_eq!(p.a[0], 0.0);
        assert_eq!(p.b[0], 1.0);
    }

    #[test]
    fn default_lambda_and_gamma0() {
        // Reference values evaluated independently at 30 significant digits.
        let p = derive_link_params(&SystemConfig::default()).unwrap();
        assert!((p.lambda - 6.910_182_592_667_88).abs() < 1e-12);
        assert!((p.gamma0 / 0.010_283_559_463_764_8 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_square_sum_to_one_and_are_monotone() {
        let mut prev = rician_weights(0.0);
        for i in 1..200 {
            let k = i as f64 * 0.37;
            let (a, b) = rician_weights(k);
            assert!((a * a + b * b - 1.0).abs() < 1e-12);
            assert!(a > prev.0 && b < prev.1);
            prev = (a, b);
        }
        assert_eq!(rician_weights(f64::INFINITY), (1.0, 0.0));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = [
            SystemConfig {
                bandwidth_hz: 0.0,
                ..SystemConfig::default()
            },
            SystemConfig {
                distances: [200.0, -1.0, 50.0],
                ..SystemConfig::default()
            },
            SystemConfig {
                k_factors: [1.0, -0.5, 1.0],
                ..SystemConfig::default()
            },
            SystemConfig {
                m: 0,
                ..SystemConfig::default()
            },
        ];
        for cfg in bad {
            assert!(matches!(derive_link_params(&cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn los_all_zero_angles() {
        let los = los_components(&AngleSet::default(), 2, 2).unwrap();
        assert!(los.h1_bar.as_slice().iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        assert!(los.h2_bar.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
        assert!(los.g_bar.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn los_expansion() {
        let angles = AngleSet::new(PI / 2.0, PI, 0.0, 0.0);
        let los = los_components(&angles, 2, 2).unwrap();
        let expected = [c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
        for (z, e) in los.h1_bar.as_slice().iter().zip(expected) {
            assert!((z - e).norm() < 1e-15);
        }
    }

    #[test]
    fn los_is_rank_one() {
        let los = los_components(&AngleSet::new(0.7, 2.1, 4.4, 5.9), 5, 6).unwrap();
        let h = &los.h1_bar;
        for i in 0..6 {
            for k in i + 1..6 {
                for j in 0..5 {
                    for l in j + 1..5 {
                        let minor = h[(i, j)] * h[(k, l)] - h[(i, l)] * h[(k, j)];
                        assert!(minor.norm() < 1e-12);
                    }
                }
            }
        }
        assert!(h.as_slice().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn angles_are_wrapped() {
        let a = AngleSet::new(-0.5, 7.0, TAU, 3.0 * TAU + 1.0);
        assert!((a.theta_aoa_1 - (TAU - 0.5)).abs() < 1e-12);
        assert!((a.theta_aod_1 - (7.0 - TAU)).abs() < 1e-12);
        assert_eq!(a.theta_aod_2, 0.0);
        assert!((a.theta_aod_0 - 1.0).abs() < 1e-9);
        let r = AngleSet::random(3);
        for t in [r.theta_aoa_1, r.theta_aod_1, r.theta_aod_2, r.theta_aod_0] {
            assert!((0.0..TAU).contains(&t));
        }
        assert_eq!(r, AngleSet::random(3));
    }

    #[test]
    fn pure_los_realization_equals_los() {
        let los = los_components(&AngleSet::new(0.3, 1.2, 2.5, 4.0), 3, 4).unwrap();
        let cfg = SystemConfig {
            k_factors: [f64::INFINITY; 3],
            ..SystemConfig::default()
        };
        let params = derive_link_params(&cfg).unwrap();
        let real = sample_channel(&los, &params, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(real.h1, los.h1_bar);
        assert_eq!(real.h2, los.h2_bar);
        assert_eq!(real.g, los.g_bar);
    }

    #[test]
    fn pure_nlos_realization_is_the_gaussian_draw() {
        let los = los_components(&AngleSet::new(0.3, 1.2, 2.5, 4.0), 3, 4).unwrap();
        let cfg = SystemConfig {
            k_factors: [0.0; 3],
            ..SystemConfig::default()
        };
        let params = derive_link_params(&cfg).unwrap();
        let real = sample_channel(&los, &params, &mut RngStream::new(8, 2)).unwrap();
        let nlos = sample_nlos(3, 4, &mut RngStream::new(8, 2)).unwrap();
        assert_eq!(real.h1, nlos.h1);
        assert_eq!(real.h2, nlos.h2);
        assert_eq!(real.g, nlos.g);
    }

    #[test]
    fn h2_energy_matches_n() {
        let n = 16;
        let los = los_components(&AngleSet::new(0.3, 1.2, 2.5, 4.0), 2, n).unwrap();
        let params = derive_link_params(&SystemConfig::default()).unwrap();
        let trials = 100_000;
        let total: f64 = (0..trials)
            .map(|t| {
                sample_channel(&los, &params, &mut RngStream::new(17, t))
                    .unwrap()
                    .h2
                    .norm_sqr()
            })
            .sum();
        let mean = total / trials as f64;
        assert!((mean / n as f64 - 1.0).abs() < 0.02, "E||h2||^2 = {mean}");
    }

    #[test]
    fn h1_sample_mean_converges_to_los_part() {
        let (m, n) = (2, 3);
        let los = los_components(&AngleSet::new(0.9, 2.2, 0.1, 1.0), m, n).unwrap();
        let params = derive_link_params(&SystemConfig::default()).unwrap();
        let trials = 20_000u64;
        let mut acc = CMatrix::zeros(n, m);
        for t in 0..trials {
            let real = sample_channel(&los, &params, &mut RngStream::new(5, t)).unwrap();
            acc = acc.add(&real.h1).unwrap();
        }
        let mean = acc.scale_real(1.0 / trials as f64);
        // each component of the NLoS term has variance b1^2 / 2
        let sigma = params.b[1] * FRAC_1_SQRT_2 / (trials as f64).sqrt();
        for (z, l) in mean.as_slice().iter().zip(los.h1_bar.as_slice()) {
            let d = z - l * params.a[1];
            assert!(d.re.abs() < 3.0 * sigma && d.im.abs() < 3.0 * sigma, "{d}");
        }
    }

    #[test]
    fn effective_row_single_element_no_direct_path() {
        let real = ChannelRealization {
            h1: CMatrix::from_rows(&[vec![c(1.0, 2.0), c(-0.5, 0.3)]]).unwrap(),
            h2: CVector::from_vec(vec![c(0.4, -1.1)]),
            g: CVector::from_vec(vec![c(9.0, 9.0), c(9.0, 9.0)]),
        };
        let phi = CVector::from_vec(vec![c(1.0, 0.0)]);
        let row = effective_row(&real, &phi, 0.0).unwrap();
        assert!((row[0] - c(0.4, -1.1) * c(1.0, 2.0)).norm() < 1e-15);
        assert!((row[1] - c(0.4, -1.1) * c(-0.5, 0.3)).norm() < 1e-15);
    }

    #[test]
    fn effective_row_direct_only() {
        let real = ChannelRealization {
            h1: CMatrix::from_rows(&[vec![c(1.0, 2.0), c(-0.5, 0.3)], vec![c(2.0, 0.0), c(0.0, 1.0)]])
                .unwrap(),
            h2: CVector::zeros(2),
            g: CVector::from_vec(vec![c(0.2, 0.1), c(-1.0, 0.5)]),
        };
        let phi = CVector::from_phases(&[0.4, 2.0]);
        let row = effective_row(&real, &phi, 3.0).unwrap();
        assert!((row[0] - c(0.6, 0.3)).norm() < 1e-15);
        assert!((row[1] - c(-3.0, 1.5)).norm() < 1e-15);
    }

    #[test]
    fn effective_row_hand_expansion() {
        let h1 = [[c(1.0, 0.5), c(-0.3, 0.2)], [c(0.0, -1.0), c(0.7, 0.7)]];
        let h2 = [c(0.5, 0.5), c(-1.0, 0.25)];
        let g = [c(0.1, -0.2), c(0.3, 0.4)];
        let phi = [C64::from_polar(1.0, 0.8), C64::from_polar(1.0, -2.1)];
        let lambda = 1.7;
        let real = ChannelRealization {
            h1: CMatrix::from_rows(&[h1[0].to_vec(), h1[1].to_vec()]).unwrap(),
            h2: CVector::from_vec(h2.to_vec()),
            g: CVector::from_vec(g.to_vec()),
        };
        let row = effective_row(&real, &CVector::from_vec(phi.to_vec()), lambda).unwrap();
        for col in 0..2 {
            let expected =
                h2[0] * phi[0] * h1[0][col] + h2[1] * phi[1] * h1[1][col] + lambda * g[col];
            assert!((row[col] - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn effective_row_rejects_non_unit_phase() {
        let los = los_components(&AngleSet::default(), 2, 2).unwrap();
        let real = ChannelRealization {
            h1: los.h1_bar.clone(),
            h2: los.h2_bar.clone(),
            g: los.g_bar.clone(),
        };
        let phi = CVector::from_vec(vec![c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(matches!(
            effective_row(&real, &phi, 1.0),
            Err(Error::NonUnitModulus { index: 1, .. })
        ));
    }
}
