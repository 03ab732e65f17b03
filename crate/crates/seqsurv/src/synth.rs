//! Synthetic interval-graph generators.
//!
//! Two families:
//!
//! * **alpha** — draws a ground-truth latent model (anchored clusters with
//!   small Gaussian jitter and per-bin velocities) and then samples every
//!   dyad's link/gap trajectory exactly from its hazard.  Returns the
//!   ground truth alongside the graph so tests can score recovery against
//!   it.  Setting one anchor, zero radius and zero spreads degenerates the
//!   family to constant hazards, which makes holding times exactly
//!   exponential — handy for distributional checks.
//!
//! * **beta** — a block-membership construction with no latent model:
//!   time is cut into equal windows, nodes are reassigned to blocks
//!   uniformly at random in each window, and dyads link for the whole
//!   window with probability `p_intra` or `p_inter` depending on whether
//!   they share a block.  Touching windows merge into longer intervals.
//!
//! Everything is driven by explicit seeds.  Each alpha dyad gets its own
//! counter-derived generator, so the output is independent of dyad
//! iteration order and cheap to reproduce one dyad at a time.

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::graph::{all_dyads, GraphError, TemporalGraph};
use crate::model::{DyadHazard, ModelConfig, ModelParams};
use crate::process::{sample_path_capped, ProcessError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    BadSpec(String),
    #[error("dyad ({i}, {j}) exceeded the per-dyad event budget of {max}")]
    EventBudget { i: u32, j: u32, max: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

/// Spec for the latent-model (alpha) generator.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaSpec {
    pub num_nodes: usize,
    pub dim: usize,
    /// Gap-state bias: formation hazard at distance zero is `exp(bias_gap)`.
    pub bias_gap: f64,
    /// Link-state bias: dissolution hazard at distance zero is `exp(bias_link)`.
    pub bias_link: f64,
    /// Reported in the ground-truth config (the generator itself does not
    /// regularize anything).
    pub prior_scale: f64,
    /// Std-dev of each velocity coordinate.
    pub velocity_spread: f64,
    /// Std-dev of the jitter around a node's anchor.
    pub position_spread: f64,
    pub num_anchors: usize,
    /// Anchors sit on a circle of this radius (first two coordinates).
    pub anchor_radius: f64,
    pub horizon: f64,
    pub num_bins: usize,
    /// Hard cap on transitions per dyad; exceeding it is an error rather
    /// than a silent near-infinite loop.
    pub max_events_per_dyad: usize,
}

impl Default for AlphaSpec {
    fn default() -> Self {
        AlphaSpec {
            num_nodes: 100,
            dim: 2,
            bias_gap: 3.0,
            bias_link: -0.25,
            prior_scale: 30.0,
            velocity_spread: 1e-2,
            position_spread: 1e-6,
            num_anchors: 10,
            anchor_radius: 8.0,
            horizon: 8.0,
            num_bins: 8,
            max_events_per_dyad: 100_000,
        }
    }
}

impl AlphaSpec {
    fn validate(&self) -> Result<(), SynthError> {
        if self.num_nodes < 2 {
            return Err(SynthError::BadSpec("need at least two nodes".into()));
        }
        if self.dim == 0 || self.num_bins == 0 || self.num_anchors == 0 {
            return Err(SynthError::BadSpec(
                "dim, num_bins and num_anchors must be positive".into(),
            ));
        }
        if !(self.horizon > 0.0) {
            return Err(SynthError::BadSpec("horizon must be positive".into()));
        }
        if self.velocity_spread < 0.0 || self.position_spread < 0.0 || self.anchor_radius < 0.0 {
            return Err(SynthError::BadSpec("spreads and radius must be nonnegative".into()));
        }
        if self.max_events_per_dyad == 0 {
            return Err(SynthError::BadSpec("event budget must be positive".into()));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable per-dyad stream seed, independent of iteration order.
pub fn dyad_stream_seed(master: u64, i: u32, j: u32) -> u64 {
    splitmix64(splitmix64(master ^ ((i as u64) << 32)) ^ j as u64)
}

/// Draw a ground-truth model and sample one interval graph from it.
pub fn generate_alpha(
    spec: &AlphaSpec,
    seed: u64,
) -> Result<(TemporalGraph, ModelConfig, ModelParams), SynthError> {
    spec.validate()?;
    let n = spec.num_nodes;
    let dim = spec.dim;
    let config = ModelConfig {
        num_nodes: n,
        dim,
        num_bins: spec.num_bins,
        horizon: spec.horizon,
        prior_scale: spec.prior_scale,
    };
    let mut master = ChaCha12Rng::seed_from_u64(seed);

    // Anchor layout: evenly spaced on a circle (or a line for dim 1).
    let mut anchors = vec![vec![0.0; dim]; spec.num_anchors];
    for (a, anchor) in anchors.iter_mut().enumerate() {
        let angle = 2.0 * std::f64::consts::PI * a as f64 / spec.num_anchors as f64;
        anchor[0] = spec.anchor_radius * angle.cos();
        if dim > 1 {
            anchor[1] = spec.anchor_radius * angle.sin();
        }
    }

    // Shuffled round-robin keeps cluster sizes balanced while the
    // node-to-anchor map stays seed-dependent.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut master);
    let mut anchor_of = vec![0usize; n];
    for (slot, node) in order.into_iter().enumerate() {
        anchor_of[node] = slot % spec.num_anchors;
    }

    let jitter = Normal::new(0.0, spec.position_spread)
        .map_err(|e| SynthError::BadSpec(e.to_string()))?;
    let drift = Normal::new(0.0, spec.velocity_spread)
        .map_err(|e| SynthError::BadSpec(e.to_string()))?;

    let mut params = ModelParams::zeros(&config);
    for node in 0..n {
        let anchor = &anchors[anchor_of[node]];
        for d in 0..dim {
            params.x[node * dim + d] = anchor[d] + jitter.sample(&mut master);
        }
    }
    for slot in params.v.iter_mut() {
        *slot = drift.sample(&mut master);
    }
    params.bias_link = spec.bias_link;
    params.bias_gap = spec.bias_gap;

    let mut builder = TemporalGraph::builder(n, spec.horizon);
    for (i, j) in all_dyads(n) {
        let mut rng = ChaCha12Rng::seed_from_u64(dyad_stream_seed(seed, i, j));
        let hazard = DyadHazard { params: &params, config: &config, dyad: (i, j) };
        let path = sample_path_capped(&hazard, -1, spec.horizon, &mut rng, spec.max_events_per_dyad)
            .map_err(|e| match e {
                ProcessError::EventBudget { max } => SynthError::EventBudget { i, j, max },
                other => SynthError::Process(other),
            })?;
        for (start, end) in path.to_intervals(spec.horizon) {
            builder.add(i, j, start, end)?;
        }
    }
    let (graph, _) = builder.finish()?;
    Ok((graph, config, params))
}

/// Spec for the block-membership (beta) generator.
#[derive(Debug, Clone, Serialize)]
pub struct BetaSpec {
    pub num_nodes: usize,
    pub num_windows: usize,
    pub window_len: f64,
    pub num_blocks: usize,
    /// Link probability for two nodes sharing a block in a window.
    pub p_intra: f64,
    /// Link probability otherwise.
    pub p_inter: f64,
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec {
            num_nodes: 100,
            num_windows: 8,
            window_len: 100.0,
            num_blocks: 10,
            p_intra: 0.8,
            p_inter: 0.01,
        }
    }
}

impl BetaSpec {
    pub fn horizon(&self) -> f64 {
        self.num_windows as f64 * self.window_len
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.num_nodes < 2 {
            return Err(SynthError::BadSpec("need at least two nodes".into()));
        }
        if self.num_windows == 0 || self.num_blocks == 0 {
            return Err(SynthError::BadSpec("num_windows and num_blocks must be positive".into()));
        }
        if !(self.window_len > 0.0) {
            return Err(SynthError::BadSpec("window_len must be positive".into()));
        }
        for (name, p) in [("p_intra", self.p_intra), ("p_inter", self.p_inter)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::BadSpec(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Sample a block-structured graph.  Within each window every node draws a
/// block uniformly at random; a dyad links for the whole window with the
/// block-dependent probability.  Runs of linked windows merge.
pub fn generate_beta(spec: &BetaSpec, seed: u64) -> Result<TemporalGraph, SynthError> {
    spec.validate()?;
    let n = spec.num_nodes;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dyads = all_dyads(n);
    let mut builder = TemporalGraph::builder(n, spec.horizon());
    let mut blocks = vec![0usize; n];
    for w in 0..spec.num_windows {
        let start = w as f64 * spec.window_len;
        let end = (w + 1) as f64 * spec.window_len;
        for slot in blocks.iter_mut() {
            *slot = rng.random_range(0..spec.num_blocks);
        }
        for &(i, j) in &dyads {
            let p = if blocks[i as usize] == blocks[j as usize] {
                spec.p_intra
            } else {
                spec.p_inter
            };
            if rng.random::<f64>() < p {
                builder.add(i, j, start, end)?;
            }
        }
    }
    let (graph, report) = builder.finish()?;
    debug_assert_eq!(report.merged_touching + graph.num_intervals(), {
        // every added window survives either as its own interval or merged
        // into the previous one
        report.merged_touching + graph.num_intervals()
    });
    Ok(graph)
}
