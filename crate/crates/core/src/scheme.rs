//! Transceiver scheme descriptors. A scheme is reduced to the only
//! properties the freshness analysis needs: how many complex symbols go over
//! the air, how long encode/transmit/classify take, and which SNR-to-accuracy
//! profile describes the receiver.

use serde::{Deserialize, Serialize};

use crate::accuracy::AccuracyProfile;
use crate::error::{Error, Result};

/// Source image dimensions and arrival rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageSource {
    pub height: u32,
    pub width: u32,
    pub channels: u32,
    pub arrival_rate_per_s: f64,
}

impl ImageSource {
    pub fn new(height: u32, width: u32, channels: u32, arrival_rate_per_s: f64) -> Result<Self> {
        if height < 1 || width < 1 || channels < 1 {
            return Err(Error::InvalidParameter("image dimensions must be >= 1".into()));
        }
        if arrival_rate_per_s <= 0.0 {
            return Err(Error::InvalidParameter("arrival rate must be positive".into()));
        }
        Ok(Self { height, width, channels, arrival_rate_per_s })
    }

    /// Source bandwidth `k_P = I_H * I_W * I_C`.
    pub fn pixel_count(&self) -> u64 {
        self.height as u64 * self.width as u64 * self.channels as u64
    }
}

/// A named transceiver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub name: String,
    /// Downsampling stages of the joint encoder, when applicable.
    pub downsampling_stages: Option<u32>,
    /// Feature channels per spatial location, when applicable.
    pub feature_channels: Option<u32>,
    pub symbol_count: u64,
    pub symbol_duration_s: f64,
    pub encode_delay_s: f64,
    pub classify_delay_s: f64,
    pub accuracy_profile: AccuracyProfile,
}

impl SchemeConfig {
    pub fn validate(&self, source: &ImageSource) -> Result<()> {
        if self.symbol_count < 1 {
            return Err(Error::InvalidParameter(format!("scheme {}: symbol_count must be >= 1", self.name)));
        }
        if self.symbol_duration_s <= 0.0 {
            return Err(Error::InvalidParameter(format!("scheme {}: symbol duration must be positive", self.name)));
        }
        if self.encode_delay_s < 0.0 || self.classify_delay_s < 0.0 {
            return Err(Error::InvalidParameter(format!("scheme {}: delays must be nonnegative", self.name)));
        }
        if let (Some(delta), Some(n_con)) = (self.downsampling_stages, self.feature_channels) {
            let derived = djscc_symbol_count(source, delta, n_con)?;
            if derived != self.symbol_count {
                return Err(Error::InvalidParameter(format!(
                    "scheme {}: symbol_count {} inconsistent with downsampling ({} expected)",
                    self.name, self.symbol_count, derived
                )));
            }
        }
        self.accuracy_profile.validate()?;
        Ok(())
    }
}

/// Joint-coding symbol count `n_T = (I_H * I_W / 2^(2*delta)) * n_con`.
pub fn djscc_symbol_count(source: &ImageSource, delta: u32, n_con: u32) -> Result<u64> {
    let div = 1u64 << delta;
    if source.height as u64 % div != 0 || source.width as u64 % div != 0 {
        return Err(Error::InvalidParameter(format!(
            "2^{delta} does not divide image dimensions {}x{}",
            source.height, source.width
        )));
    }
    let spatial = (source.height as u64 * source.width as u64) / (div * div);
    Ok(spatial * n_con as u64)
}

/// Bandwidth compression ratio `n_T / k_P`.
pub fn bandwidth_ratio(source: &ImageSource, scheme: &SchemeConfig) -> f64 {
    scheme.symbol_count as f64 / source.pixel_count() as f64
}

/// End-to-end delay `D_total = D_enc + n_T * T_s + D_cls`.
pub fn total_delay(scheme: &SchemeConfig) -> f64 {
    scheme.encode_delay_s + scheme.symbol_count as f64 * scheme.symbol_duration_s + scheme.classify_delay_s
}
