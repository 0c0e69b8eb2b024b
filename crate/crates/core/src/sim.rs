//! Event-driven Monte Carlo oracle for the SHS freshness model.
//!
//! Simulates the same two-mode jump process solved in closed form by
//! [`crate::shs`]: exponential event races with fresh clocks after every
//! event (exact under memorylessness), unit-rate age growth between events,
//! and exact piecewise-linear (trapezoid) accumulation of the delivered age.
//! The first 1% of the horizon is discarded as warm-up.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{derive_u64, substream};
use crate::shs::ShsParameters;

const WARMUP_FRACTION: f64 = 0.01;
const OCCUPANCY_BATCHES: usize = 50;

/// Discrete mode of the freshness process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Idle = 0,
    Transmitting = 1,
}

/// Continuous-time state snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShsState {
    pub mode: Mode,
    pub age_current: f64,
    pub age_pending: f64,
    pub clock: f64,
}

/// Which transition fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Event {
    /// Arrival while idle; transmission starts with a fresh image.
    ArrivalIdle,
    /// Correct classification; delivered age drops to the in-flight age.
    Delivered,
    /// Misclassification; delivered age is preserved.
    Misclassified,
    /// Arrival while transmitting; the new image is discarded.
    ArrivalDiscarded,
}

impl Event {
    pub fn label(&self) -> &'static str {
        match self {
            Event::ArrivalIdle => "l1",
            Event::Delivered => "l2",
            Event::Misclassified => "l3",
            Event::ArrivalDiscarded => "l4",
        }
    }
}

/// One row of the optional trace dump (state after applying the event).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub mode: Mode,
    pub alpha0: f64,
    pub alpha1: f64,
    pub event: Event,
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Time-averaged delivered age over the post-warm-up window.
    pub time_avg_aomi: f64,
    /// (fraction idle, fraction transmitting), post-warm-up.
    pub occupancy: (f64, f64),
    /// Batch-means standard error of the transmitting fraction.
    pub occupancy_se: f64,
    /// Post-warm-up tallies of events l1..l4.
    pub event_counts: [u64; 4],
    pub horizon: f64,
    pub seed: u64,
}

fn exp_draw<R: Rng>(rate: f64, rng: &mut R) -> f64 {
    if rate <= 0.0 {
        f64::INFINITY
    } else {
        Exp::new(rate).expect("positive rate").sample(rng)
    }
}

fn run(
    params: &ShsParameters,
    horizon: f64,
    seed: u64,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<SimResult> {
    if horizon <= 0.0 {
        return Err(Error::InvalidParameter("horizon must be positive".into()));
    }
    let lambda = params.arrival_rate;
    let rate_ok = params.success_prob / params.total_delay;
    let rate_err = (1.0 - params.success_prob) / params.total_delay;

    let warm = WARMUP_FRACTION * horizon;
    let window = horizon - warm;
    let batch_width = window / OCCUPANCY_BATCHES as f64;
    let mut busy_per_batch = [0.0f64; OCCUPANCY_BATCHES];

    let mut rng = substream(seed, 0);
    let mut t = 0.0f64;
    let mut mode = Mode::Idle;
    let mut alpha0 = 0.0f64;
    let mut alpha1 = 0.0f64;
    let mut area = 0.0f64;
    let mut counts = [0u64; 4];

    while t < horizon {
        let (dt, event) = match mode {
            Mode::Idle => (exp_draw(lambda, &mut rng), Event::ArrivalIdle),
            Mode::Transmitting => {
                // race of fresh exponential clocks, redrawn after every event
                let d_ok = exp_draw(rate_ok, &mut rng);
                let d_err = exp_draw(rate_err, &mut rng);
                let d_arr = exp_draw(lambda, &mut rng);
                if d_ok <= d_err && d_ok <= d_arr {
                    (d_ok, Event::Delivered)
                } else if d_err <= d_arr {
                    (d_err, Event::Misclassified)
                } else {
                    (d_arr, Event::ArrivalDiscarded)
                }
            }
        };
        let t_next = (t + dt).min(horizon);

        // delivered age grows at unit rate; integrate the part of the
        // segment inside the measurement window
        if t_next > warm {
            let lo = t.max(warm);
            let seg = t_next - lo;
            area += (alpha0 + (lo - t)) * seg + 0.5 * seg * seg;
            if mode == Mode::Transmitting {
                // split busy time across occupancy batches by index range
                let first = (((lo - warm) / batch_width) as usize).min(OCCUPANCY_BATCHES - 1);
                let last = (((t_next - warm) / batch_width) as usize).min(OCCUPANCY_BATCHES - 1);
                for idx in first..=last {
                    let b_lo = warm + idx as f64 * batch_width;
                    let b_hi = b_lo + batch_width;
                    let overlap = t_next.min(b_hi) - lo.max(b_lo);
                    if overlap > 0.0 {
                        busy_per_batch[idx] += overlap;
                    }
                }
            }
        }
        let elapsed = t_next - t;
        alpha0 += elapsed;
        if mode == Mode::Transmitting {
            alpha1 += elapsed;
        }
        t = t_next;
        if t >= horizon {
            break;
        }

        match event {
            Event::ArrivalIdle => {
                mode = Mode::Transmitting;
                alpha1 = 0.0;
            }
            Event::Delivered => {
                mode = Mode::Idle;
                alpha0 = alpha1;
                alpha1 = 0.0;
            }
            Event::Misclassified => {
                mode = Mode::Idle;
                alpha1 = 0.0;
            }
            Event::ArrivalDiscarded => {}
        }
        if t >= warm {
            counts[match event {
                Event::ArrivalIdle => 0,
                Event::Delivered => 1,
                Event::Misclassified => 2,
                Event::ArrivalDiscarded => 3,
            }] += 1;
        }
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow { t, mode, alpha0, alpha1, event });
        }
    }

    let busy_total: f64 = busy_per_batch.iter().sum();
    let busy_frac = busy_total / window;
    let mean_batch = busy_frac;
    let var_batch = busy_per_batch
        .iter()
        .map(|b| {
            let frac = b / batch_width;
            (frac - mean_batch) * (frac - mean_batch)
        })
        .sum::<f64>()
        / (OCCUPANCY_BATCHES as f64 - 1.0);
    let occupancy_se = (var_batch / OCCUPANCY_BATCHES as f64).sqrt();

    Ok(SimResult {
        time_avg_aomi: area / window,
        occupancy: (1.0 - busy_frac, busy_frac),
        occupancy_se,
        event_counts: counts,
        horizon,
        seed,
    })
}

/// Simulates the freshness trajectory and returns the empirical time-averaged
/// AoMI and occupancy. Deterministic given the seed.
pub fn simulate(params: &ShsParameters, horizon: f64, seed: u64) -> Result<SimResult> {
    run(params, horizon, seed, None)
}

/// Same as [`simulate`], additionally recording every event for debugging
/// and sample-path plots.
pub fn simulate_with_trace(
    params: &ShsParameters,
    horizon: f64,
    seed: u64,
) -> Result<(SimResult, Vec<TraceRow>)> {
    let mut rows = Vec::new();
    let result = run(params, horizon, seed, Some(&mut rows))?;
    Ok((result, rows))
}

/// Seed of the substream a batch entry receives. Derived from the parameter
/// values themselves, so permuting the batch permutes the results.
pub fn batch_seed(master_seed: u64, params: &ShsParameters) -> u64 {
    let mut h = params.arrival_rate.to_bits();
    h = derive_u64(h, params.success_prob.to_bits());
    h = derive_u64(h, params.total_delay.to_bits());
    derive_u64(master_seed, h)
}

/// Runs independent simulations for each parameter set, in parallel, with
/// order-stable results.
pub fn simulate_batch(
    params_list: &[ShsParameters],
    horizon: f64,
    master_seed: u64,
) -> Result<Vec<SimResult>> {
    if params_list.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    params_list
        .par_iter()
        .map(|p| simulate(p, horizon, batch_seed(master_seed, p)))
        .collect()
}

/// Writes a trace as CSV `t,q,alpha0,alpha1,event`.
pub fn write_trace_csv<W: std::io::Write>(mut out: W, rows: &[TraceRow]) -> Result<()> {
    writeln!(out, "t,q,alpha0,alpha1,event")?;
    for row in rows {
        writeln!(
            out,
            "{:.9e},{},{:.9e},{:.9e},{}",
            row.t,
            row.mode as u8,
            row.alpha0,
            row.alpha1,
            row.event.label()
        )?;
    }
    Ok(())
}
