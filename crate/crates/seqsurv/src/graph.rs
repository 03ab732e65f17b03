//! Continuous-time interval graphs.
//!
//! A graph holds, per unordered node pair, a sorted list of half-open link
//! intervals `[t_start, t_end)` inside the timeline `[0, horizon)`.  This
//! module covers storage and validation, the interval/contact CSV formats,
//! derivation of per-dyad event sequences (alternating link / no-link
//! segments), and the train/validation/test/future splitting protocol used
//! by the evaluation harness.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node id {node} out of range: graph has {num_nodes} nodes")]
    NodeOutOfRange { node: u32, num_nodes: usize },
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(u32),
    #[error("dyad ({i},{j}): interval [{start},{end}) is empty or inverted")]
    BadInterval { i: u32, j: u32, start: f64, end: f64 },
    #[error("dyad ({i},{j}): interval [{start},{end}) escapes the timeline [0,{horizon})")]
    OutsideHorizon {
        i: u32,
        j: u32,
        start: f64,
        end: f64,
        horizon: f64,
    },
    #[error("dyad ({i},{j}): intervals [{a_start},{a_end}) and [{b_start},{b_end}) overlap")]
    Overlap {
        i: u32,
        j: u32,
        a_start: f64,
        a_end: f64,
        b_start: f64,
        b_end: f64,
    },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error("negative timestamp {0} in contact stream")]
    NegativeTimestamp(f64),
    #[error("cannot rescale: all timestamps are identical")]
    DegenerateRescale,
    #[error("{0} held-out dyads cannot be divided into validation and test groups")]
    HeldoutTooSmall(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Dyad = (u32, u32);

/// Normalize an unordered pair to the canonical `(min, max)` key.
#[inline]
pub fn dyad_key(a: u32, b: u32) -> Dyad {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Every unordered pair `(i, j)` with `i < j`, in lexicographic order.
pub fn all_dyads(num_nodes: usize) -> Vec<Dyad> {
    let n = num_nodes as u32;
    let mut out = Vec::with_capacity(num_nodes * num_nodes.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push((i, j));
        }
    }
    out
}

/// An undirected graph whose edges are non-overlapping time intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGraph {
    num_nodes: usize,
    horizon: f64,
    dyads: BTreeMap<Dyad, Vec<(f64, f64)>>,
}

impl TemporalGraph {
    /// An empty graph (valid: a dyad with no intervals is simply never linked).
    pub fn new(num_nodes: usize, horizon: f64) -> Self {
        assert!(horizon > 0.0, "horizon must be positive");
        TemporalGraph {
            num_nodes,
            horizon,
            dyads: BTreeMap::new(),
        }
    }

    pub fn builder(num_nodes: usize, horizon: f64) -> GraphBuilder {
        GraphBuilder {
            num_nodes,
            horizon,
            raw: BTreeMap::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Sorted link intervals of a dyad; empty slice when the pair never links.
    pub fn intervals(&self, a: u32, b: u32) -> &[(f64, f64)] {
        self.dyads.get(&dyad_key(a, b)).map_or(&[], Vec::as_slice)
    }

    /// Dyads that have at least one link interval, in key order.
    pub fn linked_dyads(&self) -> impl Iterator<Item = (Dyad, &[(f64, f64)])> {
        self.dyads.iter().map(|(d, iv)| (*d, iv.as_slice()))
    }

    pub fn num_linked_dyads(&self) -> usize {
        self.dyads.len()
    }

    pub fn num_intervals(&self) -> usize {
        self.dyads.values().map(Vec::len).sum()
    }

    /// Interval endpoints strictly inside `(0, horizon)` — i.e. observed state
    /// changes. Useful for dataset summaries.
    pub fn num_state_changes(&self) -> usize {
        self.dyads
            .values()
            .flatten()
            .map(|&(s, e)| {
                usize::from(s > 0.0) + usize::from(e < self.horizon)
            })
            .sum()
    }

    pub fn has_link_within(&self, dyad: Dyad, from: f64, to: f64) -> bool {
        self.intervals(dyad.0, dyad.1)
            .iter()
            .any(|&(s, e)| s < to && e > from)
    }

    /// Serialize as the canonical interval CSV (sorted, shortest float form).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,t_start,t_end")?;
        for ((i, j), ivs) in &self.dyads {
            for (s, e) in ivs {
                writeln!(w, "{i},{j},{s},{e}")?;
            }
        }
        Ok(())
    }

    pub fn save_csv<P: AsRef<Path>>(&self, path: P) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()
    }
}

/// Collects intervals, then validates and normalizes them in one pass.
pub struct GraphBuilder {
    num_nodes: usize,
    horizon: f64,
    raw: BTreeMap<Dyad, Vec<(f64, f64)>>,
}

/// What `GraphBuilder::finish` had to clean up.
#[derive(Debug, Default, Clone, Copy)]
pub struct BuildReport {
    /// Touching intervals `[a,b) + [b,c)` merged into one. They encode no
    /// state change, so keeping them would create zero-length gap segments.
    pub merged_touching: usize,
}

impl GraphBuilder {
    pub fn add(&mut self, a: u32, b: u32, start: f64, end: f64) -> Result<(), GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        for node in [a, b] {
            if node as usize >= self.num_nodes {
                return Err(GraphError::NodeOutOfRange {
                    node,
                    num_nodes: self.num_nodes,
                });
            }
        }
        let (i, j) = dyad_key(a, b);
        if !(start.is_finite() && end.is_finite()) || start >= end {
            return Err(GraphError::BadInterval { i, j, start, end });
        }
        if start < 0.0 || end > self.horizon {
            return Err(GraphError::OutsideHorizon {
                i,
                j,
                start,
                end,
                horizon: self.horizon,
            });
        }
        self.raw.entry((i, j)).or_default().push((start, end));
        Ok(())
    }

    pub fn finish(self) -> Result<(TemporalGraph, BuildReport), GraphError> {
        let mut report = BuildReport::default();
        let mut dyads = BTreeMap::new();
        for ((i, j), mut ivs) in self.raw {
            ivs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut merged: Vec<(f64, f64)> = Vec::with_capacity(ivs.len());
            for (s, e) in ivs {
                match merged.last_mut() {
                    Some(prev) if s < prev.1 => {
                        return Err(GraphError::Overlap {
                            i,
                            j,
                            a_start: prev.0,
                            a_end: prev.1,
                            b_start: s,
                            b_end: e,
                        });
                    }
                    Some(prev) if s == prev.1 => {
                        prev.1 = e;
                        report.merged_touching += 1;
                    }
                    _ => merged.push((s, e)),
                }
            }
            dyads.insert((i, j), merged);
        }
        Ok((
            TemporalGraph {
                num_nodes: self.num_nodes,
                horizon: self.horizon,
                dyads,
            },
            report,
        ))
    }
}

fn read_to_string(path: &Path) -> Result<String, GraphError> {
    let mut buf = String::new();
    File::open(path)
        .map_err(|e| GraphError::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?
        .read_to_string(&mut buf)?;
    Ok(buf)
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line_no: usize,
    name: &str,
    raw: &str,
) -> Result<T, GraphError> {
    raw.trim().parse().map_err(|_| GraphError::Format {
        path: path.display().to_string(),
        msg: format!("line {line_no}: cannot parse {name} from {raw:?}"),
    })
}

/// Load an interval CSV (`i,j,t_start,t_end` header).  Timestamps are taken
/// as-is; see [`load_graph_rescaled`] for inputs in foreign units.  Touching
/// intervals of one dyad are merged with a warning on stderr.
pub fn load_graph<P: AsRef<Path>>(
    path: P,
    num_nodes: usize,
    horizon: f64,
) -> Result<TemporalGraph, GraphError> {
    let path = path.as_ref();
    let rows = parse_interval_rows(path)?;
    let mut builder = TemporalGraph::builder(num_nodes, horizon);
    for (i, j, s, e) in rows {
        builder.add(i, j, s, e)?;
    }
    let (graph, report) = builder.finish()?;
    if report.merged_touching > 0 {
        eprintln!(
            "warning: {}: merged {} touching interval pair(s)",
            path.display(),
            report.merged_touching
        );
    }
    Ok(graph)
}

/// Like [`load_graph`], but first maps the file's time range affinely onto
/// `[0, horizon]`.  Never applied implicitly: callers opt in.
pub fn load_graph_rescaled<P: AsRef<Path>>(
    path: P,
    num_nodes: usize,
    horizon: f64,
) -> Result<TemporalGraph, GraphError> {
    let path = path.as_ref();
    let rows = parse_interval_rows(path)?;
    let lo = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(GraphError::DegenerateRescale);
    }
    let scale = horizon / (hi - lo);
    let mut builder = TemporalGraph::builder(num_nodes, horizon);
    for (i, j, s, e) in rows {
        builder.add(i, j, (s - lo) * scale, ((e - lo) * scale).min(horizon))?;
    }
    let (graph, report) = builder.finish()?;
    if report.merged_touching > 0 {
        eprintln!(
            "warning: {}: merged {} touching interval pair(s)",
            path.display(),
            report.merged_touching
        );
    }
    Ok(graph)
}

fn parse_interval_rows(path: &Path) -> Result<Vec<(u32, u32, f64, f64)>, GraphError> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "i,j,t_start,t_end" => {}
        Some((_, header)) => {
            return Err(GraphError::Format {
                path: path.display().to_string(),
                msg: format!("expected header \"i,j,t_start,t_end\", found {header:?}"),
            });
        }
        None => return Ok(Vec::new()), // empty file: zero intervals, still a valid graph
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields.next().ok_or_else(|| GraphError::Format {
                path: path.display().to_string(),
                msg: format!("line {line_no}: missing column {name}"),
            })
        };
        let i: u32 = parse_field(path, line_no, "i", next("i")?)?;
        let j: u32 = parse_field(path, line_no, "j", next("j")?)?;
        let s: f64 = parse_field(path, line_no, "t_start", next("t_start")?)?;
        let e: f64 = parse_field(path, line_no, "t_end", next("t_end")?)?;
        rows.push((i, j, s, e));
    }
    Ok(rows)
}

/// Turn instantaneous contact events into link intervals: each timestamp `t`
/// spawns `[t, t + contact_len)`, and successive timestamps of one dyad whose
/// *starts* differ by at most `merge_window` collapse into a single interval
/// from the first start to the last start + `contact_len`.
pub fn aggregate_contacts(
    raw_events: &[(u32, u32, f64)],
    contact_len: f64,
    merge_window: f64,
) -> Result<TemporalGraph, GraphError> {
    assert!(contact_len > 0.0, "contact_len must be positive");
    assert!(
        merge_window >= contact_len,
        "merge_window must cover at least one contact"
    );
    let mut per_dyad: BTreeMap<Dyad, Vec<f64>> = BTreeMap::new();
    let mut max_node = 0u32;
    let mut max_time = 0.0f64;
    for &(a, b, t) in raw_events {
        if t < 0.0 {
            return Err(GraphError::NegativeTimestamp(t));
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        max_node = max_node.max(a).max(b);
        max_time = max_time.max(t);
        per_dyad.entry(dyad_key(a, b)).or_default().push(t);
    }
    let num_nodes = if raw_events.is_empty() {
        0
    } else {
        max_node as usize + 1
    };
    let horizon = max_time + contact_len;
    let mut builder = TemporalGraph::builder(num_nodes.max(2), horizon.max(contact_len));
    for ((i, j), mut ts) in per_dyad {
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut run_start = ts[0];
        let mut prev = ts[0];
        for &t in &ts[1..] {
            if t - prev <= merge_window {
                prev = t;
            } else {
                builder.add(i, j, run_start, prev + contact_len)?;
                run_start = t;
                prev = t;
            }
        }
        builder.add(i, j, run_start, prev + contact_len)?;
    }
    // Contact aggregation cannot produce touching or overlapping intervals:
    // consecutive runs are separated by more than merge_window >= contact_len.
    Ok(builder.finish()?.0)
}

/// A dyad's timeline partitioned into constant-state segments.
///
/// `events[0] == 0.0` always; `states[m]` is the state on
/// `[events[m], events[m+1])`, with the last state extending to the horizon
/// (right-censored).  States alternate between `+1` (linked) and `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    pub dyad: Dyad,
    pub events: Vec<f64>,
    pub states: Vec<i8>,
}

impl EventSequence {
    /// Constant-state segments as `(start, end, state)` with `end` of the
    /// final segment equal to `horizon`.
    pub fn segments(&self, horizon: f64) -> Vec<(f64, f64, i8)> {
        let mut out = Vec::with_capacity(self.states.len());
        for (m, &s) in self.states.iter().enumerate() {
            let start = self.events[m];
            let end = if m + 1 < self.events.len() {
                self.events[m + 1]
            } else {
                horizon
            };
            out.push((start, end, s));
        }
        out
    }

    /// Rebuild the interval list from positive-state segments (the inverse of
    /// `build_event_sequence`; used by round-trip tests).
    pub fn to_intervals(&self, horizon: f64) -> Vec<(f64, f64)> {
        self.segments(horizon)
            .into_iter()
            .filter(|&(_, _, s)| s > 0)
            .map(|(a, b, _)| (a, b))
            .collect()
    }
}

/// Partition a dyad's timeline at its interval endpoints.
pub fn build_event_sequence(graph: &TemporalGraph, dyad: Dyad) -> EventSequence {
    let ivs = graph.intervals(dyad.0, dyad.1);
    let horizon = graph.horizon();
    let mut events = Vec::with_capacity(2 * ivs.len() + 1);
    let mut states = Vec::with_capacity(2 * ivs.len() + 1);
    events.push(0.0);
    let first_linked = ivs.first().is_some_and(|&(s, _)| s == 0.0);
    states.push(if first_linked { 1 } else { -1 });
    for &(s, e) in ivs {
        if s > 0.0 {
            events.push(s);
            states.push(1);
        }
        if e < horizon {
            events.push(e);
            states.push(-1);
        }
    }
    debug_assert_eq!(events.len(), states.len());
    EventSequence {
        dyad: dyad_key(dyad.0, dyad.1),
        events,
        states,
    }
}

/// Output of [`split_dataset`]: the first-period training graph with held-out
/// dyads' links removed, those links kept aside for completion labels, the
/// future window, and the bookkeeping needed to reproduce the protocol.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    /// First period `[0, t_split)` minus held-out dyads' intervals.
    pub train_graph: TemporalGraph,
    /// The removed first-period intervals of held-out dyads (same horizon as
    /// `train_graph`); supplies completion-task labels.
    pub heldout_graph: TemporalGraph,
    /// Last period: intervals inside `[t_split, horizon)`, horizon unchanged.
    pub future_graph: TemporalGraph,
    pub validation_dyads: Vec<Dyad>,
    pub test_dyads: Vec<Dyad>,
    /// Held-out dyads with no first-period link: excluded from the prediction
    /// sets (they could only ever contribute negatives).
    pub removed_dyads: Vec<Dyad>,
    pub seed: u64,
    pub future_frac: f64,
    pub heldout_frac: f64,
}

impl DatasetSplit {
    pub fn t_split(&self) -> f64 {
        self.train_graph.horizon()
    }

    /// Dyads whose likelihood terms a model may train on.
    pub fn training_dyads(&self) -> Vec<Dyad> {
        let held: std::collections::BTreeSet<Dyad> = self
            .validation_dyads
            .iter()
            .chain(&self.test_dyads)
            .chain(&self.removed_dyads)
            .copied()
            .collect();
        all_dyads(self.train_graph.num_nodes())
            .into_iter()
            .filter(|d| !held.contains(d))
            .collect()
    }

    pub fn manifest(&self) -> SplitManifest {
        SplitManifest {
            seed: self.seed,
            future_frac: self.future_frac,
            heldout_frac: self.heldout_frac,
            num_nodes: self.train_graph.num_nodes(),
            horizon: self.future_graph.horizon(),
            t_split: self.t_split(),
            validation_dyads: self.validation_dyads.clone(),
            test_dyads: self.test_dyads.clone(),
            removed_dyads: self.removed_dyads.clone(),
        }
    }
}

/// Everything needed to reproduce a split exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub future_frac: f64,
    pub heldout_frac: f64,
    pub num_nodes: usize,
    pub horizon: f64,
    pub t_split: f64,
    pub validation_dyads: Vec<Dyad>,
    pub test_dyads: Vec<Dyad>,
    pub removed_dyads: Vec<Dyad>,
}

/// Split a graph for the three evaluation tasks.
///
/// The timeline is cut at `(1 - future_frac) * horizon`; an interval
/// straddling the cut is divided so both periods stay valid interval graphs.
/// `heldout_frac` of all `N(N-1)/2` dyads (not just linked ones) are then
/// drawn without replacement, their first-period links moved out of the
/// training graph, and the drawn dyads split evenly into validation and test
/// (validation gets the odd one).  Held-out dyads with no first-period link
/// are recorded in `removed_dyads` and dropped from both prediction sets.
pub fn split_dataset(
    graph: &TemporalGraph,
    future_frac: f64,
    heldout_frac: f64,
    seed: u64,
) -> Result<DatasetSplit, GraphError> {
    assert!(0.0 < future_frac && future_frac < 1.0);
    assert!(0.0 < heldout_frac && heldout_frac < 1.0);
    let horizon = graph.horizon();
    let t_split = (1.0 - future_frac) * horizon;

    let mut dyad_order = all_dyads(graph.num_nodes());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    dyad_order.shuffle(&mut rng);
    let num_heldout = ((dyad_order.len() as f64) * heldout_frac).round() as usize;
    if num_heldout < 2 {
        return Err(GraphError::HeldoutTooSmall(num_heldout));
    }
    let heldout: std::collections::BTreeSet<Dyad> =
        dyad_order[..num_heldout].iter().copied().collect();

    let mut train = TemporalGraph::builder(graph.num_nodes(), t_split);
    let mut held = TemporalGraph::builder(graph.num_nodes(), t_split);
    let mut future = TemporalGraph::builder(graph.num_nodes(), horizon);
    for ((i, j), ivs) in graph.linked_dyads() {
        let early = if heldout.contains(&(i, j)) {
            &mut held
        } else {
            &mut train
        };
        for &(s, e) in ivs {
            if e <= t_split {
                early.add(i, j, s, e)?;
            } else if s >= t_split {
                future.add(i, j, s, e)?;
            } else {
                early.add(i, j, s, t_split)?;
                future.add(i, j, t_split, e)?;
            }
        }
    }
    let (train_graph, _) = train.finish()?;
    let (heldout_graph, _) = held.finish()?;
    let (future_graph, _) = future.finish()?;

    // Partition the held-out draw, preserving draw order, into usable
    // prediction dyads and removed ones.
    let mut usable = Vec::with_capacity(num_heldout);
    let mut removed_dyads = Vec::new();
    for &d in &dyad_order[..num_heldout] {
        if heldout_graph.intervals(d.0, d.1).is_empty() {
            removed_dyads.push(d);
        } else {
            usable.push(d);
        }
    }
    let half = usable.len().div_ceil(2);
    let validation_dyads = usable[..half].to_vec();
    let test_dyads = usable[half..].to_vec();
    removed_dyads.sort_unstable();

    Ok(DatasetSplit {
        train_graph,
        heldout_graph,
        future_graph,
        validation_dyads,
        test_dyads,
        removed_dyads,
        seed,
        future_frac,
        heldout_frac,
    })
}
