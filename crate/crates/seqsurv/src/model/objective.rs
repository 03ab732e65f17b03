//! Penalized log-likelihood and its exact gradient.
//!
//! The likelihood of one dyad is a product over its constant-state
//! segments: every completed segment contributes the transition hazard at
//! its endpoint and the survival factor over its span; the final segment is
//! censored at the horizon and contributes survival only.  Summing the log
//! over all dyads (never-linked dyads contribute a single censored gap
//! segment) gives the log-likelihood; a zero-mean Gaussian prior over
//! velocities with Kronecker-structured scales (per-bin x per-node, each on
//! the probability simplex via softmax) regularizes the paths.
//!
//! The returned objective is the *negative* penalized log-likelihood, so
//! training minimizes it.
//!
//! Gradients are assembled in one pass per dyad.  A piece in bin `k`
//! starting at `p` sees the relative position
//! `dx(p) = dx0 + dt * sum_{b<k} dv_b + (p - k dt) dv_k`, so a gradient `G`
//! with respect to `dx(p)` contributes `G` to the initial positions,
//! `dt * G` to every earlier bin's velocity, and `(p - k dt) G` to bin `k`.
//! The per-bin pieces record `G` into a suffix accumulator and the earlier
//! bins receive one batched sweep at the end, keeping the walk linear in
//! the number of pieces.

use rayon::prelude::*;

use crate::graph::{all_dyads, build_event_sequence, EventSequence, TemporalGraph};

use super::kernel;
use super::{softmax, ModelConfig, ModelError, ModelParams};

/// Gradient (same shapes as [`ModelParams`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub bias_link: f64,
    pub bias_gap: f64,
    pub sigma_b_logits: Vec<f64>,
    pub sigma_n_logits: Vec<f64>,
}

impl ParamGrad {
    pub fn zeros(config: &ModelConfig) -> Self {
        ParamGrad {
            x: vec![0.0; config.num_nodes * config.dim],
            v: vec![0.0; config.num_bins * config.num_nodes * config.dim],
            bias_link: 0.0,
            bias_gap: 0.0,
            sigma_b_logits: vec![0.0; config.num_bins],
            sigma_n_logits: vec![0.0; config.num_nodes],
        }
    }

    fn add_assign(&mut self, other: &ParamGrad) {
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a += b;
        }
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += b;
        }
        self.bias_link += other.bias_link;
        self.bias_gap += other.bias_gap;
        for (a, b) in self.sigma_b_logits.iter_mut().zip(&other.sigma_b_logits) {
            *a += b;
        }
        for (a, b) in self.sigma_n_logits.iter_mut().zip(&other.sigma_n_logits) {
            *a += b;
        }
    }

    fn negate(&mut self) {
        for a in self.x.iter_mut().chain(self.v.iter_mut()) {
            *a = -*a;
        }
        self.bias_link = -self.bias_link;
        self.bias_gap = -self.bias_gap;
        for a in self.sigma_b_logits.iter_mut().chain(self.sigma_n_logits.iter_mut()) {
            *a = -*a;
        }
    }

    /// Euclidean norm over every coordinate, handy for convergence traces.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = self.bias_link * self.bias_link + self.bias_gap * self.bias_gap;
        for v in self
            .x
            .iter()
            .chain(self.v.iter())
            .chain(self.sigma_b_logits.iter())
            .chain(self.sigma_n_logits.iter())
        {
            acc += v * v;
        }
        acc.sqrt()
    }
}

/// Reusable per-worker buffers for the dyad walk.
struct Scratch {
    dx: Vec<f64>,
    dv: Vec<f64>,
    xacc: Vec<f64>,
    suffix: Vec<f64>,
    vacc: Vec<f64>,
}

impl Scratch {
    fn new(config: &ModelConfig) -> Self {
        let d = config.dim;
        Scratch {
            dx: vec![0.0; d],
            dv: vec![0.0; d],
            xacc: vec![0.0; d],
            suffix: vec![0.0; config.num_bins * d],
            vacc: vec![0.0; config.num_bins * d],
        }
    }
}

/// Log path density of one dyad's full trajectory over `[0, horizon)`,
/// optionally accumulating its likelihood gradient into `grad`.
fn walk_dyad(
    params: &ModelParams,
    config: &ModelConfig,
    seq: &EventSequence,
    scratch: &mut Scratch,
    mut grad: Option<&mut ParamGrad>,
) -> Result<f64, ModelError> {
    let dim = config.dim;
    let bins = config.num_bins;
    let dt = config.bin_width();
    let horizon = config.horizon;
    let (i, j) = seq.dyad;
    let want_grad = grad.is_some();

    let xi = params.x_of(dim, i);
    let xj = params.x_of(dim, j);
    for d in 0..dim {
        scratch.dx[d] = xi[d] - xj[d];
    }
    if want_grad {
        scratch.xacc.fill(0.0);
        scratch.suffix.fill(0.0);
        scratch.vacc.fill(0.0);
    }
    let mut bias_link_acc = 0.0;
    let mut bias_gap_acc = 0.0;
    let mut ll = 0.0;

    let mut k = 0usize; // current bin, tracked across the whole walk
    let num_segments = seq.states.len();
    for m in 0..num_segments {
        let a = seq.events[m];
        let b = if m + 1 < num_segments { seq.events[m + 1] } else { horizon };
        let state = seq.states[m];
        let sign = state as f64;
        let bias = params.bias(state);

        let mut p = a;
        while p < b {
            let q = if k + 1 >= bins { b } else { b.min((k + 1) as f64 * dt) };
            if q <= p {
                k += 1;
                continue;
            }
            let len = q - p;
            let vi = params.v_of(config, k, i);
            let vj = params.v_of(config, k, j);
            for d in 0..dim {
                scratch.dv[d] = vi[d] - vj[d];
            }
            let mom = kernel::piece_moments(sign, bias, &scratch.dx, &scratch.dv, len);
            if !mom.i0.is_finite() {
                return Err(ModelError::NonFinitePiece { i, j, state, start: p, end: q });
            }
            ll -= mom.i0;
            if want_grad {
                let w_in_bin = p - k as f64 * dt;
                let base = k * dim;
                for d in 0..dim {
                    let gx = -2.0 * sign * (scratch.dx[d] * mom.i0 + scratch.dv[d] * mom.i1);
                    let gw = -2.0 * sign * (scratch.dx[d] * mom.i1 + scratch.dv[d] * mom.i2);
                    scratch.xacc[d] += gx;
                    scratch.suffix[base + d] += gx;
                    scratch.vacc[base + d] += w_in_bin * gx + gw;
                }
                if state > 0 {
                    bias_link_acc -= mom.i0;
                } else {
                    bias_gap_acc -= mom.i0;
                }
            }
            for d in 0..dim {
                scratch.dx[d] += len * scratch.dv[d];
            }
            p = q;
            if k + 1 < bins && p >= (k + 1) as f64 * dt {
                k += 1;
            }
        }

        if m + 1 < num_segments {
            // Transition observed at `b`: add the log-hazard there.
            let d2: f64 = scratch.dx.iter().map(|r| r * r).sum();
            ll += bias + sign * d2;
            if want_grad {
                let w_in_bin = b - k as f64 * dt;
                let base = k * dim;
                for d in 0..dim {
                    let ge = 2.0 * sign * scratch.dx[d];
                    scratch.xacc[d] += ge;
                    scratch.suffix[base + d] += ge;
                    scratch.vacc[base + d] += w_in_bin * ge;
                }
                if state > 0 {
                    bias_link_acc += 1.0;
                } else {
                    bias_gap_acc += 1.0;
                }
            }
        }
    }

    if let Some(grad) = grad.as_deref_mut() {
        // Expand the suffix accumulator: a gradient recorded in bin `k`
        // also moves every earlier bin's velocity by a full bin width.
        for d in 0..dim {
            let mut above = 0.0;
            for kk in (0..bins).rev() {
                scratch.vacc[kk * dim + d] += dt * above;
                above += scratch.suffix[kk * dim + d];
            }
        }
        let (iu, ju) = (i as usize, j as usize);
        for d in 0..dim {
            grad.x[iu * dim + d] += scratch.xacc[d];
            grad.x[ju * dim + d] -= scratch.xacc[d];
        }
        for kk in 0..bins {
            let src = kk * dim;
            let vi = (kk * config.num_nodes + iu) * dim;
            let vj = (kk * config.num_nodes + ju) * dim;
            for d in 0..dim {
                grad.v[vi + d] += scratch.vacc[src + d];
                grad.v[vj + d] -= scratch.vacc[src + d];
            }
        }
        grad.bias_link += bias_link_acc;
        grad.bias_gap += bias_gap_acc;
    }
    Ok(ll)
}

/// Contiguous slab bounds: a fixed partition count makes the reduction
/// order (and therefore the bits of the result) independent of how many
/// worker threads execute the slabs.
const REDUCTION_SLABS: usize = 8;

fn slab_bounds(len: usize) -> Vec<(usize, usize)> {
    let slabs = REDUCTION_SLABS.min(len.max(1));
    let base = len / slabs;
    let rem = len % slabs;
    let mut out = Vec::with_capacity(slabs);
    let mut lo = 0;
    for s in 0..slabs {
        let hi = lo + base + usize::from(s < rem);
        out.push((lo, hi));
        lo = hi;
    }
    out
}

/// Sum of dyad log path densities over the given event sequences.
pub fn log_likelihood_seqs(
    params: &ModelParams,
    config: &ModelConfig,
    seqs: &[EventSequence],
) -> Result<f64, ModelError> {
    params.check_shapes(config)?;
    let partials: Vec<Result<f64, ModelError>> = slab_bounds(seqs.len())
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut scratch = Scratch::new(config);
            let mut acc = 0.0;
            for seq in &seqs[lo..hi] {
                acc += walk_dyad(params, config, seq, &mut scratch, None)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = 0.0;
    for p in partials {
        total += p?;
    }
    Ok(total)
}

fn check_graph(config: &ModelConfig, graph: &TemporalGraph) -> Result<(), ModelError> {
    if graph.num_nodes() != config.num_nodes || graph.horizon() != config.horizon {
        return Err(ModelError::Shape(format!(
            "graph ({} nodes, horizon {}) does not match model ({} nodes, horizon {})",
            graph.num_nodes(),
            graph.horizon(),
            config.num_nodes,
            config.horizon
        )));
    }
    Ok(())
}

fn sequences_for(graph: &TemporalGraph) -> Vec<EventSequence> {
    all_dyads(graph.num_nodes())
        .into_iter()
        .map(|dyad| build_event_sequence(graph, dyad))
        .collect()
}

/// Log-likelihood of the whole graph: every dyad contributes, including
/// never-linked ones (censored gap segments).
pub fn log_likelihood(
    params: &ModelParams,
    config: &ModelConfig,
    graph: &TemporalGraph,
) -> Result<f64, ModelError> {
    check_graph(config, graph)?;
    log_likelihood_seqs(params, config, &sequences_for(graph))
}

/// Gaussian velocity log-prior with Kronecker-factored scales.
///
/// `log p(v) = -1/2 sum_{b,n,d} [ v^2 / (ls^2 sb_b sn_n)
///                                + ln(2 pi ls^2 sb_b sn_n) ]`
/// where `sb`/`sn` are softmax outputs and `ls` is the config prior scale.
pub fn log_prior(params: &ModelParams, config: &ModelConfig) -> Result<f64, ModelError> {
    prior_value_grad(params, config, 0.0, None)
}

/// Shared prior evaluation; when `grad` is given, adds `weight` times the
/// prior gradient into it.
fn prior_value_grad(
    params: &ModelParams,
    config: &ModelConfig,
    weight: f64,
    mut grad: Option<&mut ParamGrad>,
) -> Result<f64, ModelError> {
    let sb = softmax(&params.sigma_b_logits)?;
    let sn = softmax(&params.sigma_n_logits)?;
    let l2 = config.prior_scale * config.prior_scale;
    let dim = config.dim;
    let n = config.num_nodes;
    let want_grad = grad.is_some();

    let mut value = 0.0;
    let mut g_sb = vec![0.0; sb.len()];
    let mut g_sn = vec![0.0; sn.len()];
    let two_pi = 2.0 * std::f64::consts::PI;
    for b in 0..config.num_bins {
        for node in 0..n {
            let w2 = l2 * sb[b] * sn[node];
            let base = (b * n + node) * dim;
            let mut ssq = 0.0;
            for d in 0..dim {
                ssq += params.v[base + d] * params.v[base + d];
            }
            value += ssq / w2 + dim as f64 * (two_pi * w2).ln();
            if want_grad {
                let gq = 0.5 * ssq / w2 - 0.5 * dim as f64; // d(-value/2)/d ln scale
                g_sb[b] += gq / sb[b];
                g_sn[node] += gq / sn[node];
                if let Some(grad) = grad.as_deref_mut() {
                    for d in 0..dim {
                        grad.v[base + d] -= weight * params.v[base + d] / w2;
                    }
                }
            }
        }
    }
    if let Some(grad) = grad.as_deref_mut() {
        // Chain through the softmax: dL/dz_l = s_l (g_l - sum_k g_k s_k).
        for (logits, g_s, s) in [
            (&mut grad.sigma_b_logits, &g_sb, &sb),
            (&mut grad.sigma_n_logits, &g_sn, &sn),
        ] {
            let mean: f64 = g_s.iter().zip(s.iter()).map(|(g, p)| g * p).sum();
            for l in 0..s.len() {
                logits[l] += weight * s[l] * (g_s[l] - mean);
            }
        }
    }
    Ok(-0.5 * value)
}

/// Negative penalized log-likelihood and its gradient over a set of dyad
/// sequences.  `prior_weight` scales the prior so that mini-batches of
/// dyads see it proportionally (`batch_size / total_dyads`).
pub fn objective_and_gradient_seqs(
    params: &ModelParams,
    config: &ModelConfig,
    seqs: &[EventSequence],
    prior_weight: f64,
) -> Result<(f64, ParamGrad), ModelError> {
    params.check_shapes(config)?;
    let partials: Vec<Result<(f64, ParamGrad), ModelError>> = slab_bounds(seqs.len())
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut scratch = Scratch::new(config);
            let mut grad = ParamGrad::zeros(config);
            let mut acc = 0.0;
            for seq in &seqs[lo..hi] {
                acc += walk_dyad(params, config, seq, &mut scratch, Some(&mut grad))?;
            }
            Ok((acc, grad))
        })
        .collect();
    let mut value = 0.0;
    let mut grad = ParamGrad::zeros(config);
    for p in partials {
        let (ll, g) = p?;
        value += ll;
        grad.add_assign(&g);
    }
    value += prior_weight * prior_value_grad(params, config, prior_weight, Some(&mut grad))?;
    grad.negate();
    Ok((-value, grad))
}

/// Full-graph objective: all dyads, prior weight 1.
pub fn objective_and_gradient(
    params: &ModelParams,
    config: &ModelConfig,
    graph: &TemporalGraph,
) -> Result<(f64, ParamGrad), ModelError> {
    check_graph(config, graph)?;
    objective_and_gradient_seqs(params, config, &sequences_for(graph), 1.0)
}
