//! Link budget and fading statistics for direct and IRS-assisted links.
//!
//! Every link is Rayleigh faded. An IRS with `N` phase-aligned elements turns
//! the AP-IRS-UE path into a sum of `N` double-Rayleigh amplitudes, which is
//! treated as Gaussian and co-phased with the direct amplitude. The resulting
//! channel power `Z^2` is then moment-matched to a Gamma law so that outage
//! can be inverted for transmit power.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{inv_reg_upper_gamma_with, reg_upper_gamma, Tolerance};

/// Speed of light used for the free-space reference gain.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Radio and frame parameters of the cell. All quantities are linear SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Total bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Number of sub-bands the bandwidth is split into.
    pub sub_bands: u32,
    /// Number of slots per frame.
    pub slots: u32,
    /// Frame duration, s.
    pub frame_s: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_density: f64,
    /// Transmit energy budget per frame, J.
    pub energy_budget: f64,
    /// Path-loss exponent.
    pub path_loss_exponent: f64,
    /// AP antenna height, m.
    pub ap_height: f64,
    /// IRS height, m.
    pub irs_height: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 2e9,
            bandwidth_hz: 5e6,
            sub_bands: 25,
            slots: 20,
            frame_s: 10e-3,
            noise_density: dbm_to_watts(-174.0),
            energy_budget: 1e-3,
            path_loss_exponent: 3.0,
            ap_height: 10.0,
            irs_height: 1.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_hz", self.carrier_hz),
            ("bandwidth_hz", self.bandwidth_hz),
            ("frame_s", self.frame_s),
            ("noise_density", self.noise_density),
            ("energy_budget", self.energy_budget),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("radio.{name} must be > 0, got {v}")));
            }
        }
        if self.sub_bands == 0 || self.slots == 0 {
            return Err(Error::Config("radio.sub_bands and radio.slots must be >= 1".into()));
        }
        if !(self.path_loss_exponent >= 2.0 && self.path_loss_exponent.is_finite()) {
            return Err(Error::Config(format!(
                "radio.path_loss_exponent must be >= 2, got {}",
                self.path_loss_exponent
            )));
        }
        if !(self.ap_height >= 1.0 && self.irs_height >= 1.0)
            || !self.ap_height.is_finite()
            || !self.irs_height.is_finite()
        {
            return Err(Error::Config(format!(
                "antenna heights must be >= 1 m (far field), got ap {} irs {}",
                self.ap_height, self.irs_height
            )));
        }
        Ok(())
    }

    /// Resource-block bandwidth `b0 = B / n_b`.
    pub fn rb_bandwidth(&self) -> f64 {
        self.bandwidth_hz / self.sub_bands as f64
    }

    /// Slot duration `t0 = T / n_t`.
    pub fn slot_duration(&self) -> f64 {
        self.frame_s / self.slots as f64
    }

    /// Noise power in one resource block, W.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.rb_bandwidth()
    }

    /// Free-space power gain at 1 m, `(4 pi f_c / c)^-2`.
    pub fn reference_gain(&self) -> f64 {
        (4.0 * PI * self.carrier_hz / SPEED_OF_LIGHT).powi(-2)
    }

    /// `alpha0 * dist2^(-n0/2)` for a squared 3-D distance.
    fn path_gain(&self, dist2: f64) -> f64 {
        self.reference_gain() * dist2.powf(-0.5 * self.path_loss_exponent)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1e3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Reflecting surface description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrsSpec {
    /// Number of reflecting elements.
    pub elements: u32,
}

impl Default for IrsSpec {
    fn default() -> Self {
        Self { elements: 2000 }
    }
}

impl IrsSpec {
    /// Passive beamforming factor `(pi^2/16) N^2 + (1 - pi^2/16) N`.
    pub fn beamforming_gain(&self) -> f64 {
        let n = self.elements as f64;
        let c = PI * PI / 16.0;
        c * n * n + (1.0 - c) * n
    }
}

/// Horizontal distances of one AP/IRS/UE triple, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// AP to UE.
    pub r: f64,
    /// AP to IRS.
    pub l: f64,
    /// IRS to UE.
    pub d: f64,
}

impl LinkGeometry {
    pub fn new(r: f64, l: f64, d: f64) -> Result<Self> {
        let g = Self { r, l, d };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("l", self.l), ("d", self.d)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("distance {name} must be finite and >= 0, got {v}")));
            }
        }
        let slack = 1e-9 * (self.l + self.d + self.r).max(1.0);
        if self.r > self.l + self.d + slack || self.r < (self.l - self.d).abs() - slack {
            return Err(Error::domain(format!(
                "distances violate the triangle inequality: r={} l={} d={}",
                self.r, self.l, self.d
            )));
        }
        Ok(())
    }
}

/// Mean power gains of the three links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanGains {
    /// AP to UE.
    pub direct: f64,
    /// AP to one IRS element.
    pub ap_irs: f64,
    /// One IRS element to UE.
    pub irs_ue: f64,
}

/// First two moments of `Z^2` and the matched Gamma law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeChannelStats {
    pub mean_z2: f64,
    pub var_z2: f64,
    /// Gamma shape.
    pub alpha: f64,
    /// Gamma inverse scale (rate).
    pub beta: f64,
}

impl CompositeChannelStats {
    pub fn from_moments(mean_z2: f64, var_z2: f64) -> Result<Self> {
        if !(mean_z2 > 0.0 && var_z2 > 0.0 && mean_z2.is_finite() && var_z2.is_finite()) {
            return Err(Error::Internal(format!(
                "channel power moments must be positive, got mean {mean_z2:e} var {var_z2:e}"
            )));
        }
        Ok(Self {
            mean_z2,
            var_z2,
            alpha: mean_z2 * mean_z2 / var_z2,
            beta: mean_z2 / var_z2,
        })
    }
}

/// Rate target and the NOP it must be met with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutageSpec {
    /// Rate threshold, bps/Hz.
    pub rate: f64,
    /// Required non-outage probability.
    pub target_nop: f64,
}

impl Default for OutageSpec {
    fn default() -> Self {
        Self {
            rate: 1.0,
            target_nop: 0.95,
        }
    }
}

impl OutageSpec {
    pub fn new(rate: f64, target_nop: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::domain(format!("rate must be >= 0, got {rate}")));
        }
        check_nop_target(target_nop)?;
        Ok(Self { rate, target_nop })
    }

    /// SNR threshold `2^R - 1`.
    pub fn snr_threshold(&self) -> f64 {
        self.rate.exp2() - 1.0
    }

    pub fn throughput(&self) -> f64 {
        self.target_nop * self.rate
    }
}

pub(crate) fn check_nop_target(p_no: f64) -> Result<()> {
    if !(p_no > 0.0 && p_no < 1.0) {
        return Err(Error::domain(format!("target NOP must lie in (0, 1), got {p_no}")));
    }
    Ok(())
}

/// `alpha0 (r^2 + H_A^2)^(-n0/2)`
pub fn mean_gain_direct(cfg: &RadioConfig, r: f64) -> f64 {
    cfg.path_gain(r * r + cfg.ap_height * cfg.ap_height)
}

pub fn mean_gains_irs(cfg: &RadioConfig, geom: &LinkGeometry) -> MeanGains {
    let dh = cfg.ap_height - cfg.irs_height;
    MeanGains {
        direct: mean_gain_direct(cfg, geom.r),
        ap_irs: cfg.path_gain(geom.l * geom.l + dh * dh),
        irs_ue: cfg.path_gain(geom.d * geom.d + cfg.irs_height * cfg.irs_height),
    }
}

/// Mean and variance of `Z^2` for `Z = X + Y`, with `X` the Gaussian
/// approximation of the reflected amplitude and `Y` the Rayleigh direct
/// amplitude, plus the moment-matched Gamma parameters.
pub fn composite_stats(irs: &IrsSpec, gains: &MeanGains) -> Result<CompositeChannelStats> {
    let n = irs.elements as f64;
    let gigr = gains.ap_irs * gains.irs_ue;
    let gd = gains.direct;
    if !(gd > 0.0 && gigr >= 0.0) {
        return Err(Error::domain(format!("mean gains must be positive, got {gains:?}")));
    }

    let mean_z2 = irs.beamforming_gain() * gigr + n * PI / 4.0 * (PI * gigr * gd).sqrt() + gd;

    // raw moments of the Gaussian reflected amplitude
    let mu = n * PI / 4.0 * gigr.sqrt();
    let s2 = n * (1.0 - PI * PI / 16.0) * gigr;
    let x1 = mu;
    let x2 = mu * mu + s2;
    let x3 = mu * mu * mu + 3.0 * mu * s2;
    let x4 = mu.powi(4) + 6.0 * mu * mu * s2 + 3.0 * s2 * s2;
    // raw moments of Rayleigh(delta), delta^2 = gd / 2
    let delta2 = 0.5 * gd;
    let delta = delta2.sqrt();
    let half_pi_sqrt = (0.5 * PI).sqrt();
    let y1 = delta * half_pi_sqrt;
    let y2 = 2.0 * delta2;
    let y3 = 3.0 * delta2 * delta * half_pi_sqrt;
    let y4 = 8.0 * delta2 * delta2;

    let m4 = x4 + 4.0 * x3 * y1 + 6.0 * x2 * y2 + 4.0 * x1 * y3 + y4;
    let var_z2 = m4 - mean_z2 * mean_z2;
    CompositeChannelStats::from_moments(mean_z2, var_z2)
}

/// Convenience: statistics straight from geometry.
pub fn composite_stats_at(
    cfg: &RadioConfig,
    irs: &IrsSpec,
    geom: &LinkGeometry,
) -> Result<CompositeChannelStats> {
    composite_stats(irs, &mean_gains_irs(cfg, geom))
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0) || p.is_nan() {
        return Err(Error::domain(format!("transmit power must be > 0, got {p}")));
    }
    Ok(())
}

fn check_threshold(eta0: f64) -> Result<()> {
    if !(eta0 >= 0.0 && eta0.is_finite()) {
        return Err(Error::domain(format!("SNR threshold must be >= 0, got {eta0}")));
    }
    Ok(())
}

/// Non-outage probability of an AP-only link, `exp(-W eta0 / (p g_d))`.
pub fn nop_direct(cfg: &RadioConfig, p: f64, g_d: f64, eta0: f64) -> Result<f64> {
    check_power(p)?;
    check_threshold(eta0)?;
    Ok((-cfg.noise_power() * eta0 / (p * g_d)).exp())
}

/// Power an AP-only link needs to meet `p_no` exactly.
pub fn required_power_direct(cfg: &RadioConfig, g_d: f64, eta0: f64, p_no: f64) -> Result<f64> {
    check_threshold(eta0)?;
    check_nop_target(p_no)?;
    Ok(cfg.noise_power() * eta0 / (g_d * (1.0 / p_no).ln()))
}

/// Gamma-approximated non-outage probability of an IRS-assisted link.
pub fn nop_irs(stats: &CompositeChannelStats, cfg: &RadioConfig, p: f64, eta0: f64) -> Result<f64> {
    check_power(p)?;
    check_threshold(eta0)?;
    reg_upper_gamma(stats.alpha, stats.beta * cfg.noise_power() * eta0 / p)
}

/// Minimum power with which an IRS-assisted link meets `p_no`.
pub fn required_power_irs(
    stats: &CompositeChannelStats,
    cfg: &RadioConfig,
    eta0: f64,
    p_no: f64,
) -> Result<f64> {
    required_power_irs_with(stats, cfg, eta0, p_no, &Tolerance::default())
}

pub fn required_power_irs_with(
    stats: &CompositeChannelStats,
    cfg: &RadioConfig,
    eta0: f64,
    p_no: f64,
    tol: &Tolerance,
) -> Result<f64> {
    check_threshold(eta0)?;
    check_nop_target(p_no)?;
    let x = inv_reg_upper_gamma_with(stats.alpha, p_no, tol)?;
    Ok(cfg.noise_power() * eta0 * stats.beta / x)
}
