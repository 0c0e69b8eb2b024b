//! LEO downlink channel: slant range, free-space path loss, rain attenuation,
//! composite large-scale gain, Rician small-scale fading and SNR.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::units::{db_to_linear, dbm_to_watts, SPEED_OF_LIGHT};

/// Default coefficients of the effective rain path length
/// `L_rain = [C1 * R^0.776 + (C2 - C3) * sin(elevation)]^-1`.
pub const RAIN_PATH_C1: f64 = 0.00741;
pub const RAIN_PATH_C2: f64 = 0.232;
pub const RAIN_PATH_C3: f64 = 0.00018;
const RAIN_PATH_EXP: f64 = 0.776;

/// Satellite-to-user link geometry. Angles are stored in radians; the public
/// constructor takes degrees since deployment parameters are quoted that way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub elevation_rad: f64,
    pub orbital_altitude_m: f64,
    pub earth_radius_m: f64,
    pub carrier_frequency_hz: f64,
}

impl LinkGeometry {
    pub fn new(
        elevation_deg: f64,
        orbital_altitude_m: f64,
        earth_radius_m: f64,
        carrier_frequency_hz: f64,
    ) -> Result<Self> {
        if !(elevation_deg > 0.0 && elevation_deg <= 90.0) {
            return Err(Error::InvalidParameter(format!(
                "elevation must be in (0, 90] degrees, got {elevation_deg}"
            )));
        }
        if orbital_altitude_m <= 0.0 || earth_radius_m <= 0.0 || carrier_frequency_hz <= 0.0 {
            return Err(Error::InvalidParameter(
                "altitude, earth radius and carrier frequency must be positive".into(),
            ));
        }
        Ok(Self {
            elevation_rad: elevation_deg.to_radians(),
            orbital_altitude_m,
            earth_radius_m,
            carrier_frequency_hz,
        })
    }
}

/// Rain attenuation model `PL_rain = kappa * R^beta * L_rain` in dB.
/// The path-length constants are overridable; the defaults follow the
/// printed formula verbatim, including the `(C2 - C3) * sin(elevation)` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainModel {
    pub rain_rate_mm_h: f64,
    pub kappa: f64,
    pub beta: f64,
    pub path_c1: f64,
    pub path_c2: f64,
    pub path_c3: f64,
}

impl RainModel {
    pub fn new(rain_rate_mm_h: f64, kappa: f64, beta: f64) -> Result<Self> {
        Self::with_path_constants(rain_rate_mm_h, kappa, beta, RAIN_PATH_C1, RAIN_PATH_C2, RAIN_PATH_C3)
    }

    pub fn with_path_constants(
        rain_rate_mm_h: f64,
        kappa: f64,
        beta: f64,
        path_c1: f64,
        path_c2: f64,
        path_c3: f64,
    ) -> Result<Self> {
        if rain_rate_mm_h < 0.0 {
            return Err(Error::InvalidParameter("rain rate must be nonnegative".into()));
        }
        if kappa <= 0.0 || beta <= 0.0 {
            return Err(Error::InvalidParameter("kappa and beta must be positive".into()));
        }
        Ok(Self { rain_rate_mm_h, kappa, beta, path_c1, path_c2, path_c3 })
    }
}

/// Antenna gains, noise floor and transmit power of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaBudget {
    pub satellite_gain_dbi: f64,
    pub user_gain_dbi: f64,
    pub noise_power_dbm: f64,
    pub transmit_power_w: f64,
}

impl AntennaBudget {
    pub fn new(
        satellite_gain_dbi: f64,
        user_gain_dbi: f64,
        noise_power_dbm: f64,
        transmit_power_w: f64,
    ) -> Result<Self> {
        if transmit_power_w <= 0.0 {
            return Err(Error::InvalidParameter("transmit power must be positive".into()));
        }
        Ok(Self { satellite_gain_dbi, user_gain_dbi, noise_power_dbm, transmit_power_w })
    }
}

/// Rician fading descriptor. `k_factor` is the linear LOS/NLOS power ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianFading {
    pub k_factor: f64,
    pub rng_seed: u64,
}

impl RicianFading {
    pub fn new(k_factor: f64, rng_seed: u64) -> Result<Self> {
        if k_factor < 0.0 {
            return Err(Error::InvalidParameter("K-factor must be nonnegative".into()));
        }
        Ok(Self { k_factor, rng_seed })
    }
}

/// Full physical description of one user's downlink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserChannel {
    pub user_id: u32,
    pub geometry: LinkGeometry,
    pub rain: RainModel,
    pub budget: AntennaBudget,
    pub fading: RicianFading,
}

/// Slant range `d = R_E * (sqrt((1 + o/R_E)^2 - cos^2(e)) - sin(e))` in meters.
pub fn slant_range(geom: &LinkGeometry) -> Result<f64> {
    let ratio = 1.0 + geom.orbital_altitude_m / geom.earth_radius_m;
    let cos_e = geom.elevation_rad.cos();
    let radicand = ratio * ratio - cos_e * cos_e;
    if radicand < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "negative radicand {radicand} in slant range"
        )));
    }
    Ok(geom.earth_radius_m * (radicand.sqrt() - geom.elevation_rad.sin()))
}

/// Free-space path loss `20 * log10(4 * pi * d * f_c / c)` in dB.
pub fn free_space_path_loss_db(geom: &LinkGeometry) -> Result<f64> {
    let d = slant_range(geom)?;
    Ok(20.0 * (4.0 * std::f64::consts::PI * d * geom.carrier_frequency_hz / SPEED_OF_LIGHT).log10())
}

/// Rain attenuation `kappa * R^beta * L_rain` in dB; exactly 0 for R = 0.
pub fn rain_attenuation_db(rain: &RainModel, elevation_rad: f64) -> f64 {
    if rain.rain_rate_mm_h == 0.0 {
        return 0.0;
    }
    let r = rain.rain_rate_mm_h;
    let path_length =
        1.0 / (rain.path_c1 * r.powf(RAIN_PATH_EXP) + (rain.path_c2 - rain.path_c3) * elevation_rad.sin());
    rain.kappa * r.powf(rain.beta) * path_length
}

/// Composite large-scale gain `G_T * G_R / PL_total` in linear units. The
/// free-space and rain terms are summed in dB and converted to linear once.
pub fn large_scale_gain(user: &UserChannel) -> Result<f64> {
    let fspl_db = free_space_path_loss_db(&user.geometry)?;
    let rain_db = rain_attenuation_db(&user.rain, user.geometry.elevation_rad);
    let gains_db = user.budget.satellite_gain_dbi + user.budget.user_gain_dbi;
    Ok(db_to_linear(gains_db - (fspl_db + rain_db)))
}

/// One Rician power gain `|h|^2` with unit mean.
/// `h = sqrt(K/(K+1)) * h_LOS + sqrt(1/(K+1)) * h_NLOS`, h_LOS fixed at 1+0j.
pub fn fading_power_draw<R: Rng + ?Sized>(k_factor: f64, rng: &mut R) -> f64 {
    let los = (k_factor / (k_factor + 1.0)).sqrt();
    // per-component std dev of the scattered term
    let sigma = (0.5 / (k_factor + 1.0)).sqrt();
    let re: f64 = los + sigma * rng.sample::<f64, _>(StandardNormal);
    let im: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
    re * re + im * im
}

/// I.i.d. `|h|^2` samples, reproducible from the descriptor's seed.
pub fn sample_fading_power(fading: &RicianFading, count: usize) -> Vec<f64> {
    let mut rng = substream(fading.rng_seed, 0);
    (0..count).map(|_| fading_power_draw(fading.k_factor, &mut rng)).collect()
}

/// Instantaneous SNR `P_T * G_large * |h|^2 / sigma^2` in linear units.
pub fn snr_linear(user: &UserChannel, fading_gain: f64) -> Result<f64> {
    if fading_gain < 0.0 {
        return Err(Error::InvalidParameter("fading gain must be nonnegative".into()));
    }
    let g_large = large_scale_gain(user)?;
    let noise_w = dbm_to_watts(user.budget.noise_power_dbm);
    Ok(user.budget.transmit_power_w * g_large * fading_gain / noise_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(elev_deg: f64, alt_m: f64) -> LinkGeometry {
        LinkGeometry::new(elev_deg, alt_m, 6371e3, 20e9).unwrap()
    }

    #[test]
    fn slant_range_collapses_to_altitude_at_zenith() {
        for alt in [400e3, 1000e3] {
            let d = slant_range(&geom(90.0, alt)).unwrap();
            assert!((d - alt).abs() < 1e-6, "zenith slant range {d} != {alt}");
        }
    }

    #[test]
    fn slant_range_matches_frozen_value_at_20_degrees() {
        // high-precision evaluation of the slant-range formula
        let d = slant_range(&geom(20.0, 400e3)).unwrap();
        let expected = 984039.782168771786;
        assert!((d - expected).abs() / expected < 1e-12, "got {d}");
    }

    #[test]
    fn slant_range_decreasing_in_elevation() {
        let mut prev = f64::INFINITY;
        for elev in [5.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0] {
            let d = slant_range(&geom(elev, 400e3)).unwrap();
            assert!(d < prev, "slant range not decreasing at {elev} deg");
            prev = d;
        }
    }

    #[test]
    fn fspl_matches_frozen_values() {
        let f400 = free_space_path_loss_db(&geom(90.0, 400e3)).unwrap();
        let f1000 = free_space_path_loss_db(&geom(90.0, 1000e3)).unwrap();
        assert!((f400 - 170.509364450035583).abs() < 1e-9, "got {f400}");
        assert!((f1000 - 178.468164623476336).abs() < 1e-9, "got {f1000}");
    }

    #[test]
    fn fspl_doubling_distance_adds_6db() {
        // 400 km at zenith vs 800 km at zenith doubles d exactly
        let f1 = free_space_path_loss_db(&geom(90.0, 400e3)).unwrap();
        let f2 = free_space_path_loss_db(&geom(90.0, 800e3)).unwrap();
        assert!((f2 - f1 - 20.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn fspl_decade_distance_adds_20db() {
        let f1 = free_space_path_loss_db(&geom(90.0, 100e3)).unwrap();
        let f2 = free_space_path_loss_db(&geom(90.0, 1000e3)).unwrap();
        assert!((f2 - f1 - 20.0).abs() < 1e-12);
    }

    #[test]
    fn rain_attenuation_zero_rate_is_zero() {
        let rain = RainModel::new(0.0, 0.075, 1.099).unwrap();
        assert_eq!(rain_attenuation_db(&rain, 30f64.to_radians()), 0.0);
    }

    #[test]
    fn rain_attenuation_matches_frozen_value() {
        let rain = RainModel::new(25.0, 0.075, 1.099).unwrap();
        let a = rain_attenuation_db(&rain, 30f64.to_radians());
        let expected = 12.5185782925373988;
        assert!((a - expected).abs() / expected < 1e-12, "got {a}");
    }

    #[test]
    fn rain_attenuation_monotone_in_rate() {
        let lo = RainModel::new(0.1, 0.075, 1.099).unwrap();
        let hi = RainModel::new(25.0, 0.075, 1.099).unwrap();
        let e = 60f64.to_radians();
        let a_lo = rain_attenuation_db(&lo, e);
        let a_hi = rain_attenuation_db(&hi, e);
        assert!(a_lo > 0.0 && a_lo < a_hi);
    }

    fn midpoint_user(power_w: f64) -> UserChannel {
        UserChannel {
            user_id: 0,
            geometry: geom(40.0, 400e3),
            rain: RainModel::new(12.0, 0.075, 1.099).unwrap(),
            budget: AntennaBudget::new(30.0, 25.0, -99.61, power_w).unwrap(),
            fading: RicianFading::new(10.0, 1).unwrap(),
        }
    }

    #[test]
    fn large_scale_gain_matches_frozen_midpoint_value() {
        // chained slant range -> FSPL -> rain -> dB sum at the sampling-range midpoints
        let g = large_scale_gain(&midpoint_user(1.0)).unwrap();
        let expected = 3.34190490859770205e-13;
        assert!((g - expected).abs() / expected < 1e-12, "got {g}");
    }

    #[test]
    fn large_scale_gain_without_rain_is_fspl_only() {
        let mut user = midpoint_user(1.0);
        user.rain = RainModel::new(0.0, 0.075, 1.099).unwrap();
        let fspl = free_space_path_loss_db(&user.geometry).unwrap();
        let expected = db_to_linear(30.0 + 25.0 - fspl);
        let g = large_scale_gain(&user).unwrap();
        assert!((g - expected).abs() / expected < 1e-14);
    }

    #[test]
    fn snr_zero_gain_is_zero_and_linear_in_power() {
        let u1 = midpoint_user(1.0);
        let u2 = midpoint_user(2.0);
        assert_eq!(snr_linear(&u1, 0.0).unwrap(), 0.0);
        let s1 = snr_linear(&u1, 0.7).unwrap();
        let s2 = snr_linear(&u2, 0.7).unwrap();
        assert!((s2 - 2.0 * s1).abs() / s2 < 1e-15);
        // linearity in the fading gain
        let s3 = snr_linear(&u1, 1.4).unwrap();
        assert!((s3 - 2.0 * s1).abs() / s3 < 1e-15);
    }

    #[test]
    fn snr_matches_hand_db_arithmetic() {
        // P_T = 1 W (30 dBm), G = 10^(-11.5) = -115 dB, noise = -99.61 dBm
        // -> 30 - 115 + 99.61 = 14.61 dB SNR = 28.90679882... linear
        let noise_w = dbm_to_watts(-99.61);
        let snr = 1.0 * db_to_linear(-115.0) / noise_w;
        let expected = 28.9067988236547562;
        assert!((snr - expected).abs() / expected < 1e-12, "got {snr}");
    }

    #[test]
    fn fading_mean_is_one_for_all_k() {
        for k_db in [0.0, 5.0, 10.0, 15.0] {
            let k = db_to_linear(k_db);
            let fading = RicianFading::new(k, 99).unwrap();
            let samples = sample_fading_power(&fading, 1_000_000);
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            assert!((mean - 1.0).abs() < 0.01, "K={k_db} dB mean {mean}");
        }
    }

    #[test]
    fn fading_variance_matches_analytic_and_decreases_in_k() {
        let mut prev = f64::INFINITY;
        for k in [0.0, 1.0, 5.0, 20.0] {
            let fading = RicianFading::new(k, 7).unwrap();
            let samples = sample_fading_power(&fading, 1_000_000);
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let analytic = (2.0 * k + 1.0) / ((k + 1.0) * (k + 1.0));
            assert!((var - analytic).abs() / analytic < 0.03, "K={k} var {var} vs {analytic}");
            assert!(var < prev);
            prev = var;
        }
    }

    #[test]
    fn fading_pure_los_limit() {
        let fading = RicianFading::new(1e9, 5).unwrap();
        for s in sample_fading_power(&fading, 1000) {
            assert!((s - 1.0).abs() < 1e-3, "sample {s} not ~1 in LOS limit");
        }
    }

    #[test]
    fn fading_streams_are_bit_exact_reproducible() {
        let fading = RicianFading::new(3.0, 123).unwrap();
        assert_eq!(sample_fading_power(&fading, 64), sample_fading_power(&fading, 64));
    }

    // --- Kolmogorov-Smirnov check against the non-central chi-square power PDF ---

    /// Modified Bessel function I0 (Abramowitz & Stegun 9.8.1 / 9.8.2).
    fn bessel_i0(x: f64) -> f64 {
        let ax = x.abs();
        if ax < 3.75 {
            let t = (x / 3.75) * (x / 3.75);
            1.0 + t * (3.5156229
                + t * (3.0899424
                    + t * (1.2067492 + t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))))
        } else {
            let t = 3.75 / ax;
            (ax.exp() / ax.sqrt())
                * (0.39894228
                    + t * (0.01328592
                        + t * (0.00225319
                            + t * (-0.00157565
                                + t * (0.00916281
                                    + t * (-0.02057706
                                        + t * (0.02635537 + t * (-0.01647633 + t * 0.00392377))))))))
        }
    }

    fn rician_power_pdf(z: f64, k: f64) -> f64 {
        (k + 1.0) * (-k - (k + 1.0) * z).exp() * bessel_i0(2.0 * (k * (k + 1.0) * z).sqrt())
    }

    #[test]
    fn fading_distribution_ks_against_numeric_cdf() {
        let k = 10.0;
        let n = 1_000_000usize;
        let fading = RicianFading::new(k, 2024).unwrap();
        let mut samples = sample_fading_power(&fading, n);
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());

        // reference CDF by trapezoid integration of the PDF on a fine grid
        let z_max = samples[n - 1] * 1.05;
        let steps = 40_000usize;
        let h = z_max / steps as f64;
        let mut cdf = vec![0.0f64; steps + 1];
        let mut prev = rician_power_pdf(0.0, k);
        for i in 1..=steps {
            let f = rician_power_pdf(i as f64 * h, k);
            cdf[i] = cdf[i - 1] + 0.5 * (prev + f) * h;
            prev = f;
        }
        let eval_cdf = |z: f64| -> f64 {
            let pos = (z / h).min(steps as f64).max(0.0);
            let i = pos.floor() as usize;
            if i >= steps {
                return cdf[steps];
            }
            let frac = pos - i as f64;
            cdf[i] + frac * (cdf[i + 1] - cdf[i])
        };

        let mut ks: f64 = 0.0;
        for (i, z) in samples.iter().enumerate() {
            let f = eval_cdf(*z);
            let emp_hi = (i + 1) as f64 / n as f64;
            let emp_lo = i as f64 / n as f64;
            ks = ks.max((emp_hi - f).abs()).max((emp_lo - f).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn constructors_reject_bad_inputs() {
        assert!(LinkGeometry::new(0.0, 400e3, 6371e3, 20e9).is_err());
        assert!(LinkGeometry::new(91.0, 400e3, 6371e3, 20e9).is_err());
        assert!(LinkGeometry::new(45.0, -1.0, 6371e3, 20e9).is_err());
        assert!(RainModel::new(-0.1, 0.075, 1.099).is_err());
        assert!(RainModel::new(1.0, 0.0, 1.099).is_err());
        assert!(AntennaBudget::new(30.0, 25.0, -99.61, 0.0).is_err());
        assert!(RicianFading::new(-1.0, 0).is_err());
    }
}
