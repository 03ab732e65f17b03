//! The sequential-survival engine, abstracted over the hazard function.
//!
//! A dyad alternates between the linked (+1) and unlinked (-1) state; each
//! segment's duration follows a survival law with a state- and
//! time-dependent hazard.  This module evaluates the log-density of an
//! observed event sequence (final segment right-censored), survival
//! probabilities, and draws exact paths by inverse-transform sampling on the
//! cumulative hazard.

use rand::{Rng, RngExt};
use thiserror::Error;

use crate::graph::EventSequence;

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("hazard evaluated non-finite (state {state}, t = {t})")]
    NonFiniteHazard { state: i8, t: f64 },
    #[error("cumulative hazard non-finite on [{a},{b}] (state {state})")]
    NonFiniteIntegral { state: i8, a: f64, b: f64 },
    #[error("survival_probability requires a <= b, got a = {a}, b = {b}")]
    ReversedInterval { a: f64, b: f64 },
    #[error("cumulative hazard is not monotone in its upper limit near t = {t}")]
    NonMonotone { t: f64 },
    #[error("sampled path exceeded {max} transitions before the horizon")]
    EventBudget { max: usize },
}

/// Behavioral contract for a state-dependent hazard.
///
/// `evaluate` must be strictly positive and piecewise continuous;
/// `integrate` must be its exact (or near-exact) integral, additive over
/// adjacent intervals and monotone in the upper limit.
pub trait Hazard {
    fn evaluate(&self, state: i8, t: f64) -> f64;
    fn integrate(&self, state: i8, a: f64, b: f64) -> f64;
}

/// A hazard that depends only on the state — the alternating-renewal special
/// case. Used by tests and the degenerate synthetic configuration.
#[derive(Debug, Clone, Copy)]
pub struct ConstantHazard {
    pub rate_link: f64,
    pub rate_gap: f64,
}

impl ConstantHazard {
    pub fn rate(&self, state: i8) -> f64 {
        if state > 0 {
            self.rate_link
        } else {
            self.rate_gap
        }
    }
}

impl Hazard for ConstantHazard {
    fn evaluate(&self, state: i8, _t: f64) -> f64 {
        self.rate(state)
    }

    fn integrate(&self, state: i8, a: f64, b: f64) -> f64 {
        self.rate(state) * (b - a)
    }
}

/// Log-density of one dyad's observed path under the given hazard.
///
/// Every completed segment `[e_{m-1}, e_m)` with state `s_m` contributes
/// `log hazard(s_m, e_m) - int_{e_{m-1}}^{e_m} hazard(s_m, .)`; the final
/// segment is right-censored at `horizon` and contributes only its survival
/// term.  No log-hazard is attached to the conventional event at t = 0 or to
/// the horizon.
pub fn log_path_density<H: Hazard>(
    hazard: &H,
    seq: &EventSequence,
    horizon: f64,
) -> Result<f64, ProcessError> {
    let m = seq.events.len();
    debug_assert_eq!(seq.states.len(), m);
    debug_assert!(horizon >= *seq.events.last().unwrap());
    let mut log_density = 0.0;
    for k in 1..m {
        let state = seq.states[k - 1];
        let event = seq.events[k];
        let rate = hazard.evaluate(state, event);
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ProcessError::NonFiniteHazard { state, t: event });
        }
        let cumulative = hazard.integrate(state, seq.events[k - 1], event);
        if !cumulative.is_finite() {
            return Err(ProcessError::NonFiniteIntegral {
                state,
                a: seq.events[k - 1],
                b: event,
            });
        }
        log_density += rate.ln() - cumulative;
    }
    let last_state = seq.states[m - 1];
    let tail = hazard.integrate(last_state, seq.events[m - 1], horizon);
    if !tail.is_finite() {
        return Err(ProcessError::NonFiniteIntegral {
            state: last_state,
            a: seq.events[m - 1],
            b: horizon,
        });
    }
    Ok(log_density - tail)
}

/// `exp(-int_a^b hazard(s, .))`, the probability of surviving `[a, b]`
/// without a state flip.
pub fn survival_probability<H: Hazard>(
    hazard: &H,
    state: i8,
    a: f64,
    b: f64,
) -> Result<f64, ProcessError> {
    if a > b {
        return Err(ProcessError::ReversedInterval { a, b });
    }
    Ok((-hazard.integrate(state, a, b)).exp())
}

/// One sampled trajectory: flip times in `(0, horizon)` starting from
/// `initial_state` at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub initial_state: i8,
    pub events: Vec<f64>,
}

impl SampledPath {
    /// Link intervals implied by the flips, censored at `horizon`.
    pub fn to_intervals(&self, horizon: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut state = self.initial_state;
        let mut start = 0.0;
        for &t in &self.events {
            if state > 0 {
                out.push((start, t));
            }
            start = t;
            state = -state;
        }
        if state > 0 && start < horizon {
            out.push((start, horizon));
        }
        out
    }
}

/// Draw a path by inverse-transform sampling: from the current time and
/// state, solve `integrate(state, t_now, t*) = -log u` for the next flip by
/// bisection (the cumulative hazard is monotone in `t*`).  The path is
/// censored once the target exceeds the hazard mass left before the horizon.
pub fn sample_path<H: Hazard, R: Rng + ?Sized>(
    hazard: &H,
    initial_state: i8,
    horizon: f64,
    rng: &mut R,
) -> Result<SampledPath, ProcessError> {
    sample_path_capped(hazard, initial_state, horizon, rng, usize::MAX)
}

/// Like [`sample_path`], but errors out once the path accumulates more than
/// `max_events` transitions — a guard against runaway hazards that would
/// otherwise grind through astronomically many flips.
pub fn sample_path_capped<H: Hazard, R: Rng + ?Sized>(
    hazard: &H,
    initial_state: i8,
    horizon: f64,
    rng: &mut R,
    max_events: usize,
) -> Result<SampledPath, ProcessError> {
    assert!(horizon > 0.0, "horizon must be positive");
    let tol = 1e-10 * horizon;
    let mut events = Vec::new();
    let mut state = initial_state;
    let mut now = 0.0;
    loop {
        let mut u: f64 = rng.random();
        while u <= 0.0 {
            u = rng.random();
        }
        let target = -u.ln();
        let total = hazard.integrate(state, now, horizon);
        if total < 0.0 {
            return Err(ProcessError::NonMonotone { t: horizon });
        }
        if total < target {
            break; // censored: the segment survives to the horizon
        }
        let (mut lo, mut hi) = (now, horizon);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let mass = hazard.integrate(state, now, mid);
            if mass < -tol {
                return Err(ProcessError::NonMonotone { t: mid });
            }
            // A non-finite partial integral can only mean "far past the
            // target": keep the root bracketed below.
            if mass.is_nan() || mass >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut flip = 0.5 * (lo + hi);
        if flip <= now {
            // Guard against a root within one float spacing of `now`: the
            // contract requires strictly increasing events.
            flip = f64::from_bits(now.to_bits() + 1);
            if flip >= horizon {
                break;
            }
        }
        if events.len() >= max_events {
            return Err(ProcessError::EventBudget { max: max_events });
        }
        events.push(flip);
        state = -state;
        now = flip;
    }
    Ok(SampledPath {
        initial_state,
        events,
    })
}
