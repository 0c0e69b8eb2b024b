//! Closed-form AoMI machinery.
//!
//! The freshness process is a two-mode stochastic hybrid system: mode 0
//! (idle) where only the delivered age `alpha0` grows, and mode 1
//! (transmitting) where both `alpha0` and the in-flight age `alpha1` grow.
//! Transitions:
//!
//! - `l1` (0 -> 1, rate lambda): an image is captured and transmission
//!   starts; the in-flight age resets to zero, `alpha0` is untouched.
//! - `l2` (1 -> 0, rate rho / D): correct classification; `alpha0` drops to
//!   the in-flight age, `alpha1` resets.
//! - `l3` (1 -> 0, rate (1 - rho) / D): misclassification; `alpha0` is
//!   preserved, `alpha1` resets.
//! - `l4` (1 -> 1, rate lambda): an image captured mid-transmission is
//!   discarded; the state is unchanged.
//!
//! The average AoMI is obtained two independent ways: a generic linear solve
//! of the stationary correlation-vector equations built from the transition
//! table, and the hand-derived closed form
//! `1/(lambda*rho) + D/rho + lambda*D^2/(1 + lambda*D)`. The two routes
//! cross-validate each other and the event-driven simulator in [`crate::sim`].

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};

/// Inputs of the freshness analysis for one user and scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShsParameters {
    pub arrival_rate: f64,
    pub success_prob: f64,
    pub total_delay: f64,
}

impl ShsParameters {
    pub fn new(arrival_rate: f64, success_prob: f64, total_delay: f64) -> Result<Self> {
        if arrival_rate <= 0.0 {
            return Err(Error::InvalidParameter("arrival rate must be positive".into()));
        }
        // rho = 1 is admitted: the closed form stays finite and the limit
        // tests use it.
        if success_prob <= 0.0 || success_prob > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "success probability must be in (0, 1], got {}",
                success_prob
            )));
        }
        if total_delay <= 0.0 {
            return Err(Error::InvalidParameter("total delay must be positive".into()));
        }
        Ok(Self { arrival_rate, success_prob, total_delay })
    }
}

/// Stationary solution of the correlation-vector system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShsSolution {
    pub pi0: f64,
    pub pi1: f64,
    /// E[alpha0 ; idle]
    pub v00: f64,
    /// E[alpha1 ; idle]
    pub v01: f64,
    /// E[alpha0 ; transmitting]
    pub v10: f64,
    /// E[alpha1 ; transmitting]
    pub v11: f64,
    pub aaomi: f64,
    /// Max absolute residual of the four balance equations at the solution.
    pub residual: f64,
}

/// Network compliance summary at a freshness threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplianceReport {
    pub threshold_s: f64,
    pub per_user_aaomi: Vec<f64>,
    pub compliance_ratio: f64,
    pub network_aaomi_s: f64,
}

/// Stationary mode probabilities `(pi0, pi1)`.
pub fn stationary_probs(params: &ShsParameters) -> (f64, f64) {
    let load = params.arrival_rate * params.total_delay;
    (1.0 / (1.0 + load), load / (1.0 + load))
}

/// One SHS transition: rate, endpoint modes, and the age reset map acting on
/// the row vector `[alpha0, alpha1]` as `alpha' = alpha * A`.
struct Transition {
    from: usize,
    to: usize,
    rate: f64,
    reset: [[f64; 2]; 2],
}

fn transitions(params: &ShsParameters) -> [Transition; 4] {
    let lambda = params.arrival_rate;
    let rho = params.success_prob;
    let d = params.total_delay;
    [
        // l1: arrival while idle; alpha0 kept, alpha1 reset to 0
        Transition { from: 0, to: 1, rate: lambda, reset: [[1.0, 0.0], [0.0, 0.0]] },
        // l2: correct classification; alpha0' = alpha1, alpha1 reset
        Transition { from: 1, to: 0, rate: rho / d, reset: [[0.0, 0.0], [1.0, 0.0]] },
        // l3: misclassification; alpha0 preserved, alpha1 reset
        Transition { from: 1, to: 0, rate: (1.0 - rho) / d, reset: [[1.0, 0.0], [0.0, 0.0]] },
        // l4: arrival while transmitting is discarded; no age change
        Transition { from: 1, to: 1, rate: lambda, reset: [[1.0, 0.0], [0.0, 1.0]] },
    ]
}

/// Age growth vector `b_q` for mode `q`: idle grows only `alpha0`,
/// transmitting grows both ages at unit rate.
pub const AGE_GROWTH: [[f64; 2]; 2] = [[1.0, 0.0], [1.0, 1.0]];

/// Solves the stationary correlation-vector equations
/// `v_q * sum(out rates) = b_q * pi_q + sum(in) rate * v_src * A` as a
/// generic 4x4 linear system for `(v00, v01, v10, v11)`.
pub fn solve_correlation_system(params: &ShsParameters) -> Result<ShsSolution> {
    let (pi0, pi1) = stationary_probs(params);
    let pi = [pi0, pi1];
    let trans = transitions(params);

    // unknown ordering: [v00, v01, v10, v11], index = 2*mode + component
    let mut m = Matrix4::<f64>::zeros();
    let mut rhs = Vector4::<f64>::zeros();
    for mode in 0..2 {
        let out_rate: f64 = trans.iter().filter(|t| t.from == mode).map(|t| t.rate).sum();
        for comp in 0..2 {
            let row = 2 * mode + comp;
            m[(row, row)] += out_rate;
            rhs[row] = AGE_GROWTH[mode][comp] * pi[mode];
            for t in trans.iter().filter(|t| t.to == mode) {
                for src_comp in 0..2 {
                    m[(row, 2 * t.from + src_comp)] -= t.rate * t.reset[src_comp][comp];
                }
            }
        }
    }

    let lu = m.lu();
    let v = lu
        .solve(&rhs)
        .ok_or(Error::SingularSystem(f64::INFINITY))?;
    let residual_vec = m * v - rhs;
    let residual = residual_vec.amax();
    if !residual.is_finite() || residual > 1e-9 {
        return Err(Error::SingularSystem(residual));
    }

    let sol = ShsSolution {
        pi0,
        pi1,
        v00: v[0],
        v01: v[1],
        v10: v[2],
        v11: v[3],
        aaomi: v[0] + v[2],
        residual,
    };
    if sol.v00 < 0.0 || sol.v01 < -1e-15 || sol.v10 < 0.0 || sol.v11 < 0.0 {
        return Err(Error::SingularSystem(residual));
    }
    Ok(sol)
}

/// Hand-derived average AoMI
/// `1/(lambda*rho) + D/rho + lambda*D^2 / (1 + lambda*D)`.
pub fn closed_form_aaomi(params: &ShsParameters) -> f64 {
    let lambda = params.arrival_rate;
    let rho = params.success_prob;
    let d = params.total_delay;
    1.0 / (lambda * rho) + d / rho + lambda * d * d / (1.0 + lambda * d)
}

/// Arithmetic mean of per-user average AoMI values.
pub fn network_aaomi(per_user: &[f64]) -> Result<f64> {
    if per_user.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    Ok(per_user.iter().sum::<f64>() / per_user.len() as f64)
}

/// Fraction of users whose average AoMI is at or below the threshold
/// (boundary inclusive).
pub fn compliance_ratio(per_user: &[f64], threshold_s: f64) -> Result<ComplianceReport> {
    if threshold_s <= 0.0 {
        return Err(Error::InvalidParameter("threshold must be positive".into()));
    }
    let network = network_aaomi(per_user)?;
    let compliant = per_user.iter().filter(|a| **a <= threshold_s).count();
    Ok(ComplianceReport {
        threshold_s,
        per_user_aaomi: per_user.to_vec(),
        compliance_ratio: compliant as f64 / per_user.len() as f64,
        network_aaomi_s: network,
    })
}
