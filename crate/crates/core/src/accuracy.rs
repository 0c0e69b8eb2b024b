//! SNR-to-accuracy profiles and the fading-averaged per-user success
//! probability. Profiles are either a parametric sigmoid or a tabulated
//! curve ingested from CSV; the per-user probability is the Monte Carlo
//! expectation of instantaneous accuracy over small-scale fading, with the
//! large-scale gain held fixed.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::channel::{sample_fading_power, snr_linear, UserChannel};
use crate::error::{Error, Result};
use crate::units::linear_to_db;

/// Upper clamp keeping the success probability strictly below 1.
pub const EPS_CLAMP: f64 = 1e-9;

/// Classification accuracy as a function of SNR in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AccuracyProfile {
    ParametricSigmoid {
        floor: f64,
        ceiling: f64,
        midpoint_snr_db: f64,
        slope_per_db: f64,
    },
    /// Ordered `(snr_db, accuracy)` rows; evaluation interpolates linearly
    /// and clamps to the boundary rows outside the table's range.
    Tabulated { table: Vec<(f64, f64)> },
}

impl AccuracyProfile {
    /// Flat profile, mostly useful in tests and limit checks.
    pub fn constant(accuracy: f64) -> Self {
        AccuracyProfile::ParametricSigmoid {
            floor: accuracy,
            ceiling: accuracy,
            midpoint_snr_db: 0.0,
            slope_per_db: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AccuracyProfile::ParametricSigmoid { floor, ceiling, slope_per_db, .. } => {
                if !(0.0..=1.0).contains(floor) || !(0.0..=1.0).contains(ceiling) || floor > ceiling {
                    return Err(Error::InvalidParameter(format!(
                        "require 0 <= floor <= ceiling <= 1, got floor {floor}, ceiling {ceiling}"
                    )));
                }
                if *slope_per_db < 0.0 {
                    return Err(Error::InvalidParameter("slope must be nonnegative".into()));
                }
            }
            AccuracyProfile::Tabulated { table } => {
                if table.len() < 2 {
                    return Err(Error::InvalidParameter("tabulated profile needs at least 2 rows".into()));
                }
                for w in table.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidParameter(format!(
                            "snr_db must be strictly increasing, got {} after {}",
                            w[1].0, w[0].0
                        )));
                    }
                }
                for (snr, acc) in table {
                    if !(0.0..=1.0).contains(acc) {
                        return Err(Error::InvalidParameter(format!(
                            "accuracy {acc} at {snr} dB outside [0, 1]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Accuracy at the given SNR. Monotone nondecreasing for valid profiles.
    pub fn accuracy_at_snr(&self, snr_db: f64) -> f64 {
        match self {
            AccuracyProfile::ParametricSigmoid { floor, ceiling, midpoint_snr_db, slope_per_db } => {
                floor + (ceiling - floor) / (1.0 + (-slope_per_db * (snr_db - midpoint_snr_db)).exp())
            }
            AccuracyProfile::Tabulated { table } => {
                let first = table[0];
                let last = table[table.len() - 1];
                if snr_db <= first.0 {
                    return first.1;
                }
                if snr_db >= last.0 {
                    return last.1;
                }
                let idx = table.partition_point(|(s, _)| *s <= snr_db);
                let (x0, y0) = table[idx - 1];
                let (x1, y1) = table[idx];
                y0 + (y1 - y0) * (snr_db - x0) / (x1 - x0)
            }
        }
    }

    /// Parses the CSV interface: header `snr_db,accuracy`, two decimal
    /// fields per row, strictly increasing snr_db.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty accuracy CSV".into()))?
            .map_err(Error::Io)?;
        if header.trim() != "snr_db,accuracy" {
            return Err(Error::Config(format!("bad accuracy CSV header: {header:?}")));
        }
        let mut table = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(Error::Io)?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |field: Option<&str>| -> Result<f64> {
                field
                    .ok_or_else(|| Error::Config(format!("line {}: missing field", lineno + 2)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 2)))
            };
            let snr = parse(fields.next())?;
            let acc = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::Config(format!("line {}: expected two fields", lineno + 2)));
            }
            table.push((snr, acc));
        }
        let profile = AccuracyProfile::Tabulated { table };
        profile.validate()?;
        Ok(profile)
    }
}

/// Fading-averaged classification success probability for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAccuracy {
    pub user_id: u32,
    pub scheme: String,
    pub rho: f64,
    pub sample_count: usize,
    pub std_error: f64,
}

/// Mean accuracy over explicit fading power gains (common-random-numbers
/// path: callers can share the same gains across powers, schemes and
/// altitudes to make comparisons paired).
pub fn expected_accuracy_over_gains(
    profile: &AccuracyProfile,
    user: &UserChannel,
    scheme: &str,
    gains: &[f64],
) -> Result<UserAccuracy> {
    if gains.is_empty() {
        return Err(Error::InvalidParameter("need at least one fading sample".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &g in gains {
        let snr = snr_linear(user, g)?;
        let acc = profile.accuracy_at_snr(linear_to_db(snr));
        sum += acc;
        sum_sq += acc * acc;
    }
    let n = gains.len() as f64;
    let mean = sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0).max(1.0)).max(0.0);
    Ok(UserAccuracy {
        user_id: user.user_id,
        scheme: scheme.to_string(),
        rho: mean.clamp(0.0, 1.0 - EPS_CLAMP),
        sample_count: gains.len(),
        std_error: (var / n).sqrt(),
    })
}

/// Fading-averaged accuracy drawing `samples` gains from the user's own
/// fading substream.
pub fn expected_accuracy(
    profile: &AccuracyProfile,
    user: &UserChannel,
    scheme: &str,
    samples: usize,
) -> Result<UserAccuracy> {
    let gains = sample_fading_power(&user.fading, samples);
    expected_accuracy_over_gains(profile, user, scheme, &gains)
}
