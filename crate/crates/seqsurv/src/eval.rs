//! Link-prediction evaluation: sample generation, class balancing,
//! latent-distance scoring, and exact AUC computation.
//!
//! Three protocols share one machinery.  *Reconstruction* asks whether the
//! model can reproduce the states it trained on; *completion* scores dyads
//! whose first-period intervals were hidden from training; *future*
//! prediction scores the final slice of the timeline, where the model can
//! only extrapolate frozen positions.  Each task draws one time point per
//! constant-state segment (strictly inside it, never touching an event),
//! balances link/non-link classes with a guaranteed share of "hard" dyads
//! (those exhibiting both states), and ranks samples by how close the two
//! nodes stay on average across the sample window.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{all_dyads, DatasetSplit, Dyad, TemporalGraph};
use crate::model::{average_squared_distance, ModelConfig, ModelError, ModelParams};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{task}: no {class} samples available before balancing")]
    EmptyClass { task: String, class: &'static str },
    #[error("AUC undefined: only one class present")]
    SingleClass,
    #[error("AUC-PR undefined: no positive samples")]
    NoPositives,
    #[error("scores must be finite (found NaN)")]
    NanScore,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Reconstruction,
    Completion,
    Future,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Reconstruction => "reconstruction",
            Task::Completion => "completion",
            Task::Future => "future",
        }
    }
}

/// One labeled evaluation instance: a short window strictly inside a
/// constant-state segment of `dyad`.
#[derive(Debug, Clone)]
pub struct EvalSample {
    pub dyad: Dyad,
    /// `[t - eps, t + eps]` around the drawn time point.
    pub window: (f64, f64),
    /// Segment state: +1 link, -1 gap.
    pub label: i8,
    /// True when the dyad shows both states inside the task window.
    pub hard: bool,
    pub task: Task,
    /// Future task only: was the dyad ever linked during the training
    /// period?  `None` for the other tasks.
    pub seen: Option<bool>,
}

/// Constant-state segments of `dyad` under `labels`, clipped to `window`.
fn clipped_segments(
    labels: &TemporalGraph,
    dyad: Dyad,
    window: (f64, f64),
) -> Vec<(f64, f64, i8)> {
    let (lo, hi) = window;
    let mut out = Vec::new();
    let mut cursor = lo;
    for &(s, e) in labels.intervals(dyad.0, dyad.1) {
        let (cs, ce) = (s.max(lo), e.min(hi));
        if ce <= cs {
            continue;
        }
        if cs > cursor {
            out.push((cursor, cs, -1));
        }
        out.push((cs, ce, 1));
        cursor = ce;
    }
    if cursor < hi {
        out.push((cursor, hi, -1));
    }
    out
}

/// Draw one sample per sufficiently long constant-state segment of each
/// dyad.  `epsilon` is the half-width of the sample window; segments not
/// longer than `2 epsilon` are skipped so no window can touch an event.
pub fn generate_samples<R: Rng + ?Sized>(
    labels: &TemporalGraph,
    window: (f64, f64),
    dyads: &[Dyad],
    epsilon: f64,
    task: Task,
    seen_dyads: Option<&BTreeSet<Dyad>>,
    rng: &mut R,
) -> Vec<EvalSample> {
    let mut out = Vec::new();
    for &dyad in dyads {
        let segments = clipped_segments(labels, dyad, window);
        let has_link = segments.iter().any(|&(_, _, s)| s > 0);
        let has_gap = segments.iter().any(|&(_, _, s)| s < 0);
        let hard = has_link && has_gap;
        let seen = seen_dyads.map(|set| set.contains(&dyad));
        for &(a, b, label) in &segments {
            if b - a <= 2.0 * epsilon {
                continue;
            }
            let t = rng.random_range((a + epsilon)..(b - epsilon));
            out.push(EvalSample {
                dyad,
                window: (t - epsilon, t + epsilon),
                label,
                hard,
                task,
                seen,
            });
        }
    }
    out
}

/// Class-balance a sample pool: `k = min(1000, #link, #nonlink)` per class,
/// guaranteeing each class `min(floor(hard/2), k)` hard samples and filling
/// the rest uniformly from whatever remains (leftover hard plus simple).
pub fn assemble_balanced_set<R: Rng + ?Sized>(
    samples: &[EvalSample],
    task: Task,
    rng: &mut R,
) -> Result<Vec<EvalSample>, EvalError> {
    const K_CAP: usize = 1000;
    let links: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].label > 0).collect();
    let gaps: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].label < 0).collect();
    if links.is_empty() {
        return Err(EvalError::EmptyClass { task: task.name().into(), class: "link" });
    }
    if gaps.is_empty() {
        return Err(EvalError::EmptyClass { task: task.name().into(), class: "non-link" });
    }
    let k = K_CAP.min(links.len()).min(gaps.len());
    let mut out = Vec::with_capacity(2 * k);
    for class in [links, gaps] {
        let (mut hard, mut simple): (Vec<usize>, Vec<usize>) =
            class.into_iter().partition(|&i| samples[i].hard);
        let quota = (hard.len() / 2).min(k);
        hard.shuffle(rng);
        let mut residual = hard.split_off(quota);
        out.extend(hard.iter().map(|&i| samples[i].clone()));
        residual.append(&mut simple);
        residual.shuffle(rng);
        out.extend(residual[..k - quota].iter().map(|&i| samples[i].clone()));
    }
    Ok(out)
}

/// Score = negative time-averaged squared latent distance over the sample
/// window; the window may extend past the model horizon, where positions
/// freeze.  Higher scores mean the pair stays closer, i.e. more link-like.
pub fn score_sample(
    params: &ModelParams,
    config: &ModelConfig,
    sample: &EvalSample,
) -> Result<f64, EvalError> {
    let (a, b) = sample.window;
    let t_end = config.horizon;
    let d2 = if a >= t_end {
        average_squared_distance(params, config, sample.dyad, t_end, t_end)?
    } else if b <= t_end {
        average_squared_distance(params, config, sample.dyad, a, b)?
    } else {
        let inside = average_squared_distance(params, config, sample.dyad, a, t_end)?;
        let frozen = average_squared_distance(params, config, sample.dyad, t_end, t_end)?;
        ((t_end - a) * inside + (b - t_end) * frozen) / (b - a)
    };
    Ok(-d2)
}

/// Sort permutation by score; errors on NaN (scores must be comparable).
fn score_order(scores: &[f64], ascending: bool) -> Result<Vec<usize>, EvalError> {
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::NanScore);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = scores[a].partial_cmp(&scores[b]).expect("NaN checked above");
        if ascending {
            ord
        } else {
            ord.reverse()
        }
    });
    Ok(idx)
}

/// Mann-Whitney AUC-ROC: probability that a random positive outranks a
/// random negative, ties counted half.  Pair counting is exact in integers
/// with one final division, so any strictly increasing transform of the
/// scores yields the identical float.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), labels.len());
    let p = labels.iter().filter(|&&l| l).count() as u128;
    let n = labels.len() as u128 - p;
    if p == 0 || n == 0 {
        return Err(EvalError::SingleClass);
    }
    let order = score_order(scores, true)?;
    let mut wins: u128 = 0; // positive strictly above a negative
    let mut ties: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos_blk, mut neg_blk) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                pos_blk += 1;
            } else {
                neg_blk += 1;
            }
            j += 1;
        }
        wins += pos_blk * neg_below;
        ties += pos_blk * neg_blk;
        neg_below += neg_blk;
        i = j;
    }
    Ok((2 * wins + ties) as f64 / (2 * p * n) as f64)
}

/// AUC-PR by the precision-at-recall-increment sum over a descending-score
/// sweep; tied scores are processed as one block.
pub fn auc_pr(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    assert_eq!(scores.len(), labels.len());
    let p = labels.iter().filter(|&&l| l).count();
    if p == 0 {
        return Err(EvalError::NoPositives);
    }
    let order = score_order(scores, false)?;
    let mut area = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut tp_blk, mut fp_blk) = (0usize, 0usize);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                tp_blk += 1;
            } else {
                fp_blk += 1;
            }
            j += 1;
        }
        tp += tp_blk;
        fp += fp_blk;
        if tp_blk > 0 {
            area += (tp_blk as f64 / p as f64) * (tp as f64 / (tp + fp) as f64);
        }
        i = j;
    }
    Ok(area)
}

/// Per-task metrics over `repeats` independent resamplings.
#[derive(Debug, Clone, Serialize)]
pub struct TaskMetrics {
    pub task: Task,
    pub repeats: usize,
    pub seeds: Vec<u64>,
    pub auc_roc_mean: f64,
    pub auc_roc_sd: f64,
    pub auc_pr_mean: f64,
    pub auc_pr_sd: f64,
    /// Balanced-set size per resampling (2k each).
    pub num_samples: Vec<usize>,
    pub num_hard: Vec<usize>,
    pub num_simple: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_future_seen: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_future_unseen: Option<Vec<usize>>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the r-th resampling pass, decorrelated from the master seed.
fn repeat_seed(master: u64, repeat: usize) -> u64 {
    splitmix64(splitmix64(master ^ 0xD6E8_FEB8_6659_FD93) ^ repeat as u64)
}

/// The task protocol: which graph supplies labels, over which window, and
/// which dyads are eligible by default.
fn protocol(split: &DatasetSplit, task: Task) -> (&TemporalGraph, (f64, f64), Vec<Dyad>) {
    match task {
        Task::Reconstruction => {
            (&split.train_graph, (0.0, split.t_split()), split.training_dyads())
        }
        Task::Completion => {
            (&split.heldout_graph, (0.0, split.t_split()), split.test_dyads.clone())
        }
        Task::Future => {
            let removed: BTreeSet<Dyad> = split.removed_dyads.iter().copied().collect();
            let dyads = all_dyads(split.future_graph.num_nodes())
                .into_iter()
                .filter(|d| !removed.contains(d))
                .collect();
            (&split.future_graph, (split.t_split(), split.future_graph.horizon()), dyads)
        }
    }
}

/// Dyads linked at any point during the training period, counting both the
/// kept intervals and the held-out ones.
fn seen_set(split: &DatasetSplit) -> BTreeSet<Dyad> {
    let mut seen: BTreeSet<Dyad> = split.train_graph.linked_dyads().map(|(d, _)| d).collect();
    seen.extend(split.heldout_graph.linked_dyads().map(|(d, _)| d));
    seen
}

/// Run one task protocol with an explicit dyad list (used directly for
/// validation-dyad scoring during model selection).
pub fn run_task_with_dyads(
    split: &DatasetSplit,
    params: &ModelParams,
    config: &ModelConfig,
    task: Task,
    dyads: &[Dyad],
    repeats: usize,
    seed: u64,
) -> Result<TaskMetrics, EvalError> {
    assert!(repeats > 0, "need at least one resampling");
    let (labels, window, _) = protocol(split, task);
    let epsilon = 0.01 * split.future_graph.horizon();
    let seen = if task == Task::Future { Some(seen_set(split)) } else { None };

    let mut seeds = Vec::with_capacity(repeats);
    let mut rocs = Vec::with_capacity(repeats);
    let mut prs = Vec::with_capacity(repeats);
    let mut num_samples = Vec::new();
    let mut num_hard = Vec::new();
    let mut num_simple = Vec::new();
    let mut n_seen = Vec::new();
    let mut n_unseen = Vec::new();
    for r in 0..repeats {
        let pass_seed = repeat_seed(seed, r);
        seeds.push(pass_seed);
        let mut rng = ChaCha12Rng::seed_from_u64(pass_seed);
        let pool =
            generate_samples(labels, window, dyads, epsilon, task, seen.as_ref(), &mut rng);
        let balanced = assemble_balanced_set(&pool, task, &mut rng)?;
        let mut scores = Vec::with_capacity(balanced.len());
        let mut label_flags = Vec::with_capacity(balanced.len());
        for sample in &balanced {
            scores.push(score_sample(params, config, sample)?);
            label_flags.push(sample.label > 0);
        }
        rocs.push(auc_roc(&scores, &label_flags)?);
        prs.push(auc_pr(&scores, &label_flags)?);
        num_samples.push(balanced.len());
        num_hard.push(balanced.iter().filter(|s| s.hard).count());
        num_simple.push(balanced.iter().filter(|s| !s.hard).count());
        if task == Task::Future {
            n_seen.push(balanced.iter().filter(|s| s.seen == Some(true)).count());
            n_unseen.push(balanced.iter().filter(|s| s.seen == Some(false)).count());
        }
    }
    let (auc_roc_mean, auc_roc_sd) = mean_sd(&rocs);
    let (auc_pr_mean, auc_pr_sd) = mean_sd(&prs);
    Ok(TaskMetrics {
        task,
        repeats,
        seeds,
        auc_roc_mean,
        auc_roc_sd,
        auc_pr_mean,
        auc_pr_sd,
        num_samples,
        num_hard,
        num_simple,
        num_future_seen: (task == Task::Future).then_some(n_seen),
        num_future_unseen: (task == Task::Future).then_some(n_unseen),
    })
}

/// One balanced draw of completion-protocol samples over the validation
/// dyads, for prior-scale selection.  All candidates must be compared on
/// the identical sample set, so this is drawn once and passed around.
pub fn validation_samples(
    split: &DatasetSplit,
    seed: u64,
) -> Result<Vec<EvalSample>, EvalError> {
    let epsilon = 0.01 * split.future_graph.horizon();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let pool = generate_samples(
        &split.heldout_graph,
        (0.0, split.t_split()),
        &split.validation_dyads,
        epsilon,
        Task::Completion,
        None,
        &mut rng,
    );
    assemble_balanced_set(&pool, Task::Completion, &mut rng)
}

/// Run one task under its default protocol with `repeats` resamplings.
pub fn run_task(
    split: &DatasetSplit,
    params: &ModelParams,
    config: &ModelConfig,
    task: Task,
    repeats: usize,
    seed: u64,
) -> Result<TaskMetrics, EvalError> {
    let (_, _, dyads) = protocol(split, task);
    run_task_with_dyads(split, params, config, task, &dyads, repeats, seed)
}
