//! Piecewise-linear latent-distance model.
//!
//! Every node carries an initial position `x_i` in `R^dim` and one velocity
//! per time bin; positions are continuous piecewise-linear paths.  A dyad in
//! state `s` (+1 linked, -1 unlinked) transitions with hazard
//!
//! ```text
//! lambda_ij(s, t) = exp( bias(s) + s * |r_i(t) - r_j(t)|^2 )
//! ```
//!
//! so proximity raises the link-formation hazard and lowers the dissolution
//! hazard.  Cumulative hazards have closed forms piece by piece (see
//! [`kernel`]), which is what makes exact maximum-likelihood training
//! practical.

mod kernel;
mod objective;

pub use objective::{
    log_likelihood, log_likelihood_seqs, log_prior, objective_and_gradient,
    objective_and_gradient_seqs, ParamGrad,
};

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Dyad;
use crate::process::Hazard;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("time {t} outside the model window [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("extrapolation time {t} does not lie beyond the horizon {horizon}")]
    NotBeyondHorizon { t: f64, horizon: f64 },
    #[error("hazard overflowed at t = {t} (state {state}): bias {bias}, squared distance {d2}")]
    HazardOverflow { state: i8, t: f64, bias: f64, d2: f64 },
    #[error("hazard integral is not finite on piece [{start}, {end}] of dyad ({i}, {j}), state {state}")]
    NonFinitePiece { i: u32, j: u32, state: i8, start: f64, end: f64 },
    #[error("bin-scale softmax underflowed to zero (logit spread too large)")]
    SigmaUnderflow,
    #[error("invalid model shape: {0}")]
    Shape(String),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Static description of a model: shapes plus the prior scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_nodes: usize,
    pub dim: usize,
    pub num_bins: usize,
    pub horizon: f64,
    /// Overall scale multiplier of the velocity prior covariance.
    pub prior_scale: f64,
}

impl ModelConfig {
    pub fn bin_width(&self) -> f64 {
        self.horizon / self.num_bins as f64
    }

    /// Bin owning time `t`; boundary times belong to the later bin, except
    /// the horizon itself which stays in the last bin.
    pub fn bin_index(&self, t: f64) -> usize {
        ((t / self.bin_width()) as usize).min(self.num_bins - 1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_nodes < 2 {
            return Err(ModelError::Shape(format!(
                "need at least two nodes, got {}",
                self.num_nodes
            )));
        }
        if self.dim == 0 || self.num_bins == 0 {
            return Err(ModelError::Shape("dim and num_bins must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(ModelError::Shape(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.prior_scale > 0.0 && self.prior_scale.is_finite()) {
            return Err(ModelError::Shape(format!(
                "prior scale must be positive, got {}",
                self.prior_scale
            )));
        }
        Ok(())
    }
}

/// Trainable parameters.  `x` is node-major (`num_nodes * dim`); `v` is
/// bin-major (`num_bins * num_nodes * dim`).  The per-bin and per-node scale
/// factors of the velocity prior are parameterized through softmax logits so
/// they stay on the simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub bias_link: f64,
    pub bias_gap: f64,
    pub sigma_b_logits: Vec<f64>,
    pub sigma_n_logits: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        ModelParams {
            x: vec![0.0; config.num_nodes * config.dim],
            v: vec![0.0; config.num_bins * config.num_nodes * config.dim],
            bias_link: 0.0,
            bias_gap: 0.0,
            sigma_b_logits: vec![0.0; config.num_bins],
            sigma_n_logits: vec![0.0; config.num_nodes],
        }
    }

    pub fn check_shapes(&self, config: &ModelConfig) -> Result<(), ModelError> {
        config.validate()?;
        let want_x = config.num_nodes * config.dim;
        let want_v = config.num_bins * want_x;
        if self.x.len() != want_x
            || self.v.len() != want_v
            || self.sigma_b_logits.len() != config.num_bins
            || self.sigma_n_logits.len() != config.num_nodes
        {
            return Err(ModelError::Shape(format!(
                "parameter lengths (x {}, v {}, sigma_b {}, sigma_n {}) do not match config \
                 (nodes {}, dim {}, bins {})",
                self.x.len(),
                self.v.len(),
                self.sigma_b_logits.len(),
                self.sigma_n_logits.len(),
                config.num_nodes,
                config.dim,
                config.num_bins
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn x_of(&self, dim: usize, node: u32) -> &[f64] {
        let base = node as usize * dim;
        &self.x[base..base + dim]
    }

    #[inline]
    pub fn v_of(&self, config: &ModelConfig, bin: usize, node: u32) -> &[f64] {
        let base = (bin * config.num_nodes + node as usize) * config.dim;
        &self.v[base..base + config.dim]
    }

    #[inline]
    pub fn bias(&self, state: i8) -> f64 {
        if state > 0 {
            self.bias_link
        } else {
            self.bias_gap
        }
    }
}

/// Numerically safe softmax (max-subtracted).  Errors if any entry rounds
/// to zero, since downstream code divides by the result.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>, ModelError> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    let out: Vec<f64> = exps.iter().map(|e| e / total).collect();
    if out.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
        return Err(ModelError::SigmaUnderflow);
    }
    Ok(out)
}

/// Position of `node` at `t` in `[0, horizon]`, written into `out`.
pub fn position_into(
    params: &ModelParams,
    config: &ModelConfig,
    node: u32,
    t: f64,
    out: &mut [f64],
) -> Result<(), ModelError> {
    if !(0.0..=config.horizon).contains(&t) || !t.is_finite() {
        return Err(ModelError::TimeOutOfRange { t, horizon: config.horizon });
    }
    let k = config.bin_index(t);
    let dt = config.bin_width();
    out.copy_from_slice(params.x_of(config.dim, node));
    for b in 0..k {
        let vb = params.v_of(config, b, node);
        for d in 0..config.dim {
            out[d] += dt * vb[d];
        }
    }
    let rem = t - k as f64 * dt;
    let vk = params.v_of(config, k, node);
    for d in 0..config.dim {
        out[d] += rem * vk[d];
    }
    Ok(())
}

pub fn position(
    params: &ModelParams,
    config: &ModelConfig,
    node: u32,
    t: f64,
) -> Result<Vec<f64>, ModelError> {
    let mut out = vec![0.0; config.dim];
    position_into(params, config, node, t, &mut out)?;
    Ok(out)
}

/// Position for a query past the horizon: nodes freeze where the last bin
/// left them.  `t` must lie strictly beyond the horizon.
pub fn extrapolate_position(
    params: &ModelParams,
    config: &ModelConfig,
    node: u32,
    t: f64,
) -> Result<Vec<f64>, ModelError> {
    if !(t > config.horizon) {
        return Err(ModelError::NotBeyondHorizon { t, horizon: config.horizon });
    }
    position(params, config, node, config.horizon)
}

fn delta_into(
    params: &ModelParams,
    config: &ModelConfig,
    dyad: Dyad,
    t: f64,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<(), ModelError> {
    position_into(params, config, dyad.0, t, out)?;
    position_into(params, config, dyad.1, t, scratch)?;
    for d in 0..config.dim {
        out[d] -= scratch[d];
    }
    Ok(())
}

/// Transition hazard of `dyad` in `state` at time `t`.
pub fn hazard_rate(
    params: &ModelParams,
    config: &ModelConfig,
    dyad: Dyad,
    state: i8,
    t: f64,
) -> Result<f64, ModelError> {
    let mut a = vec![0.0; config.dim];
    let mut b = vec![0.0; config.dim];
    delta_into(params, config, dyad, t, &mut a, &mut b)?;
    let d2: f64 = b.iter().map(|r| r * r).sum();
    let bias = params.bias(state);
    let lam = (bias + state as f64 * d2).exp();
    if !lam.is_finite() {
        return Err(ModelError::HazardOverflow { state, t, bias, d2 });
    }
    Ok(lam)
}

/// Walk `[a, b]` piece by piece (splitting at bin boundaries), handing each
/// piece to `f` as `(bin, piece_start, piece_len, dx_at_piece_start)`.
/// `dx` is advanced incrementally: one full position evaluation at `a`,
/// then `dx += len * dv` per piece.
fn for_each_piece<F>(
    params: &ModelParams,
    config: &ModelConfig,
    dyad: Dyad,
    a: f64,
    b: f64,
    mut f: F,
) -> Result<(), ModelError>
where
    F: FnMut(usize, f64, f64, &[f64]),
{
    let dim = config.dim;
    let mut scratch = vec![0.0; dim];
    let mut dx = vec![0.0; dim];
    delta_into(params, config, dyad, a, &mut scratch, &mut dx)?;
    if !(b >= a) || b > config.horizon {
        return Err(ModelError::TimeOutOfRange { t: b, horizon: config.horizon });
    }
    let dt = config.bin_width();
    let mut k = config.bin_index(a);
    let mut p = a;
    while p < b {
        let q = if k + 1 >= config.num_bins { b } else { b.min((k + 1) as f64 * dt) };
        if q <= p {
            // `p` sits on (or within roundoff of) a boundary: move on.
            k += 1;
            continue;
        }
        let len = q - p;
        let vi = params.v_of(config, k, dyad.0);
        let vj = params.v_of(config, k, dyad.1);
        for d in 0..dim {
            scratch[d] = vi[d] - vj[d];
        }
        f(k, p, len, &dx);
        for d in 0..dim {
            dx[d] += len * scratch[d];
        }
        p = q;
        if k + 1 < config.num_bins && p >= (k + 1) as f64 * dt {
            k += 1;
        }
    }
    Ok(())
}

/// Exact cumulative hazard `int_a^b lambda(state, t) dt` for one dyad.
pub fn integrate_hazard(
    params: &ModelParams,
    config: &ModelConfig,
    dyad: Dyad,
    state: i8,
    a: f64,
    b: f64,
) -> Result<f64, ModelError> {
    let sign = state as f64;
    let bias = params.bias(state);
    let dim = config.dim;
    let mut total = 0.0;
    let mut bad: Option<(f64, f64)> = None;
    for_each_piece(params, config, dyad, a, b, |k, p, len, dx| {
        let vi = params.v_of(config, k, dyad.0);
        let vj = params.v_of(config, k, dyad.1);
        let mut dv = [0.0; 8];
        let dv = &mut dv[..dim];
        for d in 0..dim {
            dv[d] = vi[d] - vj[d];
        }
        let piece = kernel::piece_integral(sign, bias, dx, dv, len);
        if !piece.is_finite() && bad.is_none() {
            bad = Some((p, p + len));
        }
        total += piece;
    })?;
    if let Some((start, end)) = bad {
        return Err(ModelError::NonFinitePiece { i: dyad.0, j: dyad.1, state, start, end });
    }
    Ok(total)
}

/// Time-average of the squared latent distance over `[a, b]`:
/// `(1/(b-a)) int |r_i - r_j|^2 dt`, exact per piece since the integrand is
/// quadratic.  For `a == b` returns the pointwise squared distance.
pub fn average_squared_distance(
    params: &ModelParams,
    config: &ModelConfig,
    dyad: Dyad,
    a: f64,
    b: f64,
) -> Result<f64, ModelError> {
    if b == a {
        let mut s = vec![0.0; config.dim];
        let mut dx = vec![0.0; config.dim];
        delta_into(params, config, dyad, a, &mut s, &mut dx)?;
        return Ok(dx.iter().map(|r| r * r).sum());
    }
    let dim = config.dim;
    let mut total = 0.0;
    for_each_piece(params, config, dyad, a, b, |k, _p, len, dx| {
        let vi = params.v_of(config, k, dyad.0);
        let vj = params.v_of(config, k, dyad.1);
        let mut dx2 = 0.0;
        let mut xv = 0.0;
        let mut dv2 = 0.0;
        for d in 0..dim {
            let w = vi[d] - vj[d];
            dx2 += dx[d] * dx[d];
            xv += dx[d] * w;
            dv2 += w * w;
        }
        total += dx2 * len + xv * len * len + dv2 * len * len * len / 3.0;
    })?;
    Ok(total / (b - a))
}

/// Adapter exposing one dyad's hazard through the generic [`Hazard`] trait,
/// so sampling and path densities reuse the process machinery.  Evaluation
/// is unchecked: an overflowing hazard propagates as `inf` and is caught by
/// the consumer.
pub struct DyadHazard<'a> {
    pub params: &'a ModelParams,
    pub config: &'a ModelConfig,
    pub dyad: Dyad,
}

impl Hazard for DyadHazard<'_> {
    fn evaluate(&self, state: i8, t: f64) -> f64 {
        match hazard_rate(self.params, self.config, self.dyad, state, t) {
            Ok(lam) => lam,
            Err(ModelError::HazardOverflow { .. }) => f64::INFINITY,
            Err(_) => f64::NAN,
        }
    }

    fn integrate(&self, state: i8, a: f64, b: f64) -> f64 {
        match integrate_hazard(self.params, self.config, self.dyad, state, a, b) {
            Ok(m) => m,
            Err(ModelError::NonFinitePiece { .. }) => f64::INFINITY,
            Err(_) => f64::NAN,
        }
    }
}

/// Interval bracket for the average squared distance implied by one
/// observed constant-state segment `(start, end, state)` of a dyad.
///
/// Writing `S_s` for the dyad's survival probability over the segment under
/// state `s` and `len` for its length, the bounds are
///
/// ```text
/// bound(s) = -2 s ln(len) - s ln(S_s) - s bias(s),
/// ```
///
/// evaluated at `s = -1` (lower) and `s = +1` (upper), returned together
/// with the exact average squared distance as `(lower, mean, upper)`.
/// These are moment-style bounds: informative for typical segments, not a
/// pathwise guarantee.
pub fn lemma1_bounds(
    params: &ModelParams,
    config: &ModelConfig,
    dyad: Dyad,
    segment: (f64, f64, i8),
) -> Result<(f64, f64, f64), ModelError> {
    let (start, end, _state) = segment;
    if !(end > start) {
        return Err(ModelError::TimeOutOfRange { t: end, horizon: config.horizon });
    }
    let len = end - start;
    let mean = average_squared_distance(params, config, dyad, start, end)?;
    let mut bound = [0.0; 2];
    for (slot, state) in [(0usize, -1i8), (1usize, 1i8)] {
        let s = state as f64;
        let mass = integrate_hazard(params, config, dyad, state, start, end)?;
        // ln survival = -mass
        bound[slot] = -2.0 * s * len.ln() + s * mass - s * params.bias(state);
    }
    Ok((bound[0], mean, bound[1]))
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    config: ModelConfig,
    params: ModelParams,
}

/// Serialize config and parameters as JSON.  f64 values survive the round
/// trip bit-exactly (shortest-representation encoding).
pub fn save_checkpoint(
    path: &Path,
    config: &ModelConfig,
    params: &ModelParams,
) -> Result<(), ModelError> {
    params.check_shapes(config)?;
    let ckpt = Checkpoint {
        format_version: CHECKPOINT_VERSION,
        config: config.clone(),
        params: params.clone(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &ckpt).map_err(|e| ModelError::Checkpoint {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelConfig, ModelParams), ModelError> {
    let r = BufReader::new(File::open(path)?);
    let ckpt: Checkpoint =
        serde_json::from_reader(r).map_err(|e| ModelError::Checkpoint {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    if ckpt.format_version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint {
            path: path.display().to_string(),
            msg: format!(
                "unsupported format version {} (expected {})",
                ckpt.format_version, CHECKPOINT_VERSION
            ),
        });
    }
    ckpt.params.check_shapes(&ckpt.config).map_err(|e| ModelError::Checkpoint {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    Ok((ckpt.config, ckpt.params))
}

/// Write per-node position snapshots as CSV with header
/// `node,t,dim_0,..,dim_{D-1}`.  Times beyond the horizon use the frozen
/// (extrapolated) positions.
pub fn write_snapshots<W: std::io::Write>(
    params: &ModelParams,
    config: &ModelConfig,
    times: &[f64],
    mut w: W,
) -> Result<(), ModelError> {
    params.check_shapes(config)?;
    write!(w, "node,t")?;
    for d in 0..config.dim {
        write!(w, ",dim_{d}")?;
    }
    writeln!(w)?;
    let mut pos = vec![0.0; config.dim];
    for &t in times {
        for node in 0..config.num_nodes as u32 {
            let query = t.min(config.horizon);
            position_into(params, config, node, query, &mut pos)?;
            write!(w, "{node},{t}")?;
            for d in 0..config.dim {
                write!(w, ",{}", pos[d])?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
