//! Air-to-ground channel: LoS probability, elevation geometry and minimum
//! uplink transmit power.
//!
//! Angles at this boundary are in degrees because the LoS constants `psi`
//! and `beta` are calibrated for degrees. Power comes out in linear watts.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Speed of light used by the link budget, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Environment and channel constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// LoS constant (dimensionless).
    pub psi: f64,
    /// LoS constant per degree.
    pub beta: f64,
    /// Carrier frequency, Hz.
    pub f_c: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Excess path loss over free space, dB.
    pub eta_db: f64,
    /// Required LoS probability.
    pub epsilon: f64,
    /// Speed of light, m/s.
    pub c: f64,
}

impl ChannelParams {
    /// Urban environment at 2 GHz with a 0.95 LoS requirement.
    pub const fn urban() -> Self {
        Self {
            psi: 11.95,
            beta: 0.14,
            f_c: 2e9,
            alpha: 2.0,
            eta_db: 5.0,
            epsilon: 0.95,
            c: SPEED_OF_LIGHT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be finite and > 0, got {v}")))
            }
        };
        pos("psi", self.psi)?;
        pos("beta", self.beta)?;
        pos("f_c", self.f_c)?;
        pos("alpha", self.alpha)?;
        pos("c", self.c)?;
        if !self.eta_db.is_finite() {
            return Err(Error::config("eta", "must be finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::config(
                "epsilon",
                format!("must lie in (0, 1), got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    /// `4π f_c / c`, the free-space phase constant in 1/m.
    fn wavenumber(&self) -> f64 {
        4.0 * PI * self.f_c / self.c
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::urban()
    }
}

/// Link-budget constants for the QPSK minimum-power formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Target bit error rate.
    pub delta: f64,
    /// Bit rate, bit/s.
    pub bit_rate: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd: f64,
    /// Per-device bandwidth, Hz. Carried for completeness; the power formula
    /// does not use it.
    pub bandwidth: f64,
}

impl LinkParams {
    pub const fn table_defaults() -> Self {
        Self {
            delta: 1e-8,
            bit_rate: 2e5,
            noise_psd: 1e-20,
            bandwidth: 2e5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::config(
                "delta",
                format!("must lie in (0, 0.5], got {}", self.delta),
            ));
        }
        for (name, v) in [
            ("r_b", self.bit_rate),
            ("n_o", self.noise_psd),
            ("bandwidth", self.bandwidth),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for LinkParams {
    fn default() -> Self {
        Self::table_defaults()
    }
}

/// Converts a power spectral density from dBm/Hz to W/Hz.
pub fn dbm_per_hz_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// LoS probability at elevation `theta_deg` (degrees, in `(0, 90]`).
pub fn los_probability(theta_deg: f64, params: &ChannelParams) -> Result<f64> {
    if !(theta_deg > 0.0 && theta_deg <= 90.0) {
        return Err(Error::domain(format!(
            "elevation angle must lie in (0, 90] degrees, got {theta_deg}"
        )));
    }
    Ok(los_probability_unchecked(theta_deg, params))
}

fn los_probability_unchecked(theta_deg: f64, p: &ChannelParams) -> f64 {
    1.0 / (1.0 + p.psi * (-p.beta * (theta_deg - p.psi)).exp())
}

/// Smallest elevation angle (degrees) whose LoS probability reaches `epsilon`.
pub fn min_elevation_angle(params: &ChannelParams) -> Result<f64> {
    let eps = params.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let ceiling = los_probability_unchecked(90.0, params);
    if eps >= ceiling {
        return Err(Error::Infeasible(format!(
            "LoS requirement {eps} is not achievable; P_LoS(90 deg) = {ceiling}"
        )));
    }
    let theta = params.psi - ((1.0 - eps) / (eps * params.psi)).ln() / params.beta;
    // below 0 deg every admissible angle already satisfies the requirement
    Ok(theta.max(f64::MIN_POSITIVE))
}

/// Largest 3D device-to-UAV distance that keeps the elevation at or above
/// `theta_min_deg` for a UAV at altitude `h`.
pub fn max_los_radius(h: f64, theta_min_deg: f64) -> Result<f64> {
    if !(h >= 0.0 && h.is_finite()) {
        return Err(Error::domain(format!("altitude must be finite and >= 0, got {h}")));
    }
    if !(theta_min_deg > 0.0 && theta_min_deg <= 90.0) {
        return Err(Error::domain(format!(
            "minimum elevation must lie in (0, 90] degrees, got {theta_min_deg}"
        )));
    }
    Ok(h / theta_min_deg.to_radians().sin())
}

/// Largest horizontal offset between a device and a UAV at altitude `h` that
/// keeps the elevation at or above `theta_min_deg`.
pub fn max_ground_offset(h: f64, theta_min_deg: f64) -> f64 {
    h / theta_min_deg.to_radians().tan()
}

/// Received power in dB (dBW when `p_t_db` is dBW) at 3D distance `d`.
pub fn received_power_db(p_t_db: f64, d: f64, params: &ChannelParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("distance must be > 0, got {d}")));
    }
    Ok(p_t_db - 10.0 * params.alpha * (params.wavenumber() * d).log10() - params.eta_db)
}

/// Inverse Gaussian tail function: the `x` with `Q(x) = p`.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("Q^-1 argument must lie in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    Ok(std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p))
}

/// Minimum device transmit power in watts meeting the BER target at 3D
/// distance `d`. Quadratic in `d`.
pub fn min_transmit_power(d: f64, link: &LinkParams, ch: &ChannelParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("distance must be > 0, got {d}")));
    }
    Ok(power_per_square_meter(link, ch)? * d * d)
}

/// The constant `P_t / d^2` of the minimum-power law.
pub fn power_per_square_meter(link: &LinkParams, ch: &ChannelParams) -> Result<f64> {
    if !(link.delta > 0.0 && link.delta <= 0.5) {
        return Err(Error::domain(format!(
            "bit error rate must lie in (0, 0.5], got {}",
            link.delta
        )));
    }
    let q = q_inverse(link.delta)?;
    let k = ch.wavenumber();
    Ok(q * q * (link.bit_rate * link.noise_psd / 2.0) * 10f64.powf(ch.eta_db / 10.0) * k * k)
}
