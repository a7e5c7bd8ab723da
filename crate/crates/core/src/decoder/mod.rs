//! Minimum-weight matching decoder over space-time detection events.
//!
//! A detector compares a check's outcome with its previous outcome, or with
//! the known `+1` of the encoded initial state. Checks that were absent in
//! the previous cycle and are not known initially (the first `G_i` outcomes
//! after switching to S2, the first `F_i` outcomes after switching back)
//! yield no detector.
//!
//! The matching graphs are derived from the circuit itself: every elementary
//! fault is propagated to the end of the circuit to find the detectors it
//! flips, its effect on a set of observables, and its residual on the data
//! qubits. Detectors of Z-type checks form the X graph, detectors of X-type
//! checks the Z graph. Parallel mechanisms are merged, and each edge weighs
//! `ln((1-p)/p)`.

pub mod blossom;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt::Write as _;

use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Location, OpKind};
use crate::error::{invalid, Error, Result};
use crate::frame::{Frame, Gauge, Program};
use crate::noise::{fault_kinds, FaultKind, MeasurementRecord, NoiseParams};
use crate::stabilizer::{Basis, Pauli1, PauliOperator};
use crate::surface_code::{CheckKind, Timeline, Variant};

/// Outcomes per cycle (`true` = `-1`) for every check measured in that cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyndromeHistory {
    pub cycles: Vec<BTreeMap<usize, bool>>,
    pub code_timeline: Vec<Variant>,
    /// Checks whose value is `+1` before the first cycle.
    pub initially_known: BTreeSet<usize>,
}

impl SyndromeHistory {
    pub fn from_record(timeline: &Timeline, record: &MeasurementRecord) -> Result<Self> {
        let mut cycles = vec![BTreeMap::new(); timeline.cycles.len()];
        for (bit, tag) in record.bits.iter().zip(&record.tags) {
            let Some(tag) = tag else { continue };
            let slot = cycles
                .get_mut(tag.cycle as usize)
                .ok_or_else(|| invalid("record", format!("cycle {} outside the timeline", tag.cycle)))?;
            slot.insert(tag.stabilizer as usize, *bit);
        }
        let h = Self {
            cycles,
            code_timeline: timeline.cycles.iter().map(|c| c.variant).collect(),
            initially_known: timeline.s1.active_checks().map(|(k, _)| k).collect(),
        };
        h.check_complete(timeline)?;
        Ok(h)
    }

    fn check_complete(&self, timeline: &Timeline) -> Result<()> {
        for (k, cy) in timeline.cycles.iter().enumerate() {
            for (id, _) in timeline.spec(cy.variant).active_checks() {
                if !self.cycles[k].contains_key(&id) {
                    return Err(invalid("history", format!("check {id} has no outcome in cycle {k}")));
                }
            }
        }
        Ok(())
    }
}

/// Fired detectors as `(check, cycle)`, ordered by cycle then check.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DetectionEvents {
    pub events: Vec<(usize, usize)>,
}

/// For each cycle and each check present in it, the cycle of the previous
/// comparable outcome: `Some(Some(c))`, `Some(None)` for the known initial
/// value, or `None` when no comparison exists.
fn comparisons<'a>(
    initially_known: impl IntoIterator<Item = usize>,
    cycles: impl IntoIterator<Item = Vec<usize>> + 'a,
) -> Vec<Vec<(usize, Option<Option<usize>>)>> {
    let mut last: HashMap<usize, Option<usize>> = initially_known.into_iter().map(|c| (c, None)).collect();
    let mut out = Vec::new();
    for (k, present) in cycles.into_iter().enumerate() {
        let keep: BTreeSet<usize> = present.iter().copied().collect();
        last.retain(|c, _| keep.contains(c));
        let mut row = Vec::new();
        for c in present {
            row.push((c, last.get(&c).copied()));
            last.insert(c, Some(k));
        }
        out.push(row);
    }
    out
}

pub fn detection_events(history: &SyndromeHistory) -> DetectionEvents {
    let cmp = comparisons(
        history.initially_known.iter().copied(),
        history.cycles.iter().map(|m| m.keys().copied().collect::<Vec<_>>()),
    );
    let mut events = Vec::new();
    for (k, row) in cmp.iter().enumerate() {
        for &(c, prev) in row {
            let Some(prev) = prev else { continue };
            let before = prev.is_some_and(|p| history.cycles[p][&c]);
            if history.cycles[k][&c] != before {
                events.push((c, k));
            }
        }
    }
    DetectionEvents { events }
}

/// A detector: parity of record `record` with record `previous` (or with the
/// known `+1` when `previous` is `None`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detector {
    pub check: usize,
    pub cycle: usize,
    pub kind: CheckKind,
    pub record: usize,
    pub previous: Option<usize>,
}

pub fn detectors(timeline: &Timeline, circuit: &Circuit) -> Vec<Detector> {
    let mut rec_of = HashMap::new();
    for (i, (_, tag)) in circuit.measurements().into_iter().enumerate() {
        if let Some(t) = tag {
            rec_of.insert((t.stabilizer as usize, t.cycle as usize), i);
        }
    }
    let cmp = comparisons(
        timeline.s1.active_checks().map(|(k, _)| k),
        timeline.cycles.iter().map(|cy| timeline.spec(cy.variant).active_checks().map(|(k, _)| k).collect()),
    );
    let mut out = Vec::new();
    for (k, row) in cmp.into_iter().enumerate() {
        for (c, prev) in row {
            let Some(prev) = prev else { continue };
            out.push(Detector {
                check: c,
                cycle: k,
                kind: timeline.s1.checks[c].kind,
                record: rec_of[&(c, k)],
                previous: prev.map(|p| rec_of[&(c, p)]),
            });
        }
    }
    out
}

/// Which error type a graph decodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphKind {
    /// X errors, seen by Z-type checks.
    X,
    /// Z errors, seen by X-type checks.
    Z,
}

impl GraphKind {
    fn sees(self, k: CheckKind) -> bool {
        matches!((self, k), (GraphKind::X, CheckKind::Z) | (GraphKind::Z, CheckKind::X))
    }
}

/// A logical quantity tracked through decoding: the parity of some record
/// flips and of final frame components on some qubits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObservableDef {
    pub records: Vec<usize>,
    pub x_qubits: Vec<usize>,
    pub z_qubits: Vec<usize>,
}

impl ObservableDef {
    pub fn eval(&self, frame: &Frame) -> bool {
        let mut v = false;
        for &r in &self.records {
            v ^= frame.flips[r];
        }
        for &q in &self.x_qubits {
            v ^= frame.x[q];
        }
        for &q in &self.z_qubits {
            v ^= frame.z[q];
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderOptions {
    pub unit_weights: bool,
    /// Error rate used for weights when the noise model has `ε = 0`.
    pub nominal_epsilon: f64,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        Self { unit_weights: false, nominal_epsilon: 1e-3 }
    }
}

const WEIGHT_SCALE: f64 = 1e4;
const INF: i64 = i64::MAX / 4;
const NO_EDGE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: usize,
    /// Other endpoint; equals the boundary index for boundary edges.
    pub b: usize,
    pub probability: f64,
    pub weight: i64,
    pub observables: u64,
    /// Data qubits receiving this graph's Pauli type in the correction.
    pub correction: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct MatchingGraph {
    pub kind: GraphKind,
    /// Global detector index of each node; the boundary is node `nodes.len()`.
    pub nodes: Vec<usize>,
    pub edges: Vec<Edge>,
    pub observables: Vec<ObservableDef>,
    dist: Vec<i64>,
    path_obs: Vec<u64>,
    pred: Vec<u32>,
}

impl MatchingGraph {
    pub fn boundary(&self) -> usize {
        self.nodes.len()
    }

    fn width(&self) -> usize {
        self.nodes.len() + 1
    }

    pub fn distance(&self, a: usize, b: usize) -> i64 {
        self.dist[a * self.width() + b]
    }

    fn all_pairs(&mut self) {
        let w = self.width();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); w];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.a].push((e.b, i));
            adj[e.b].push((e.a, i));
        }
        self.dist = vec![INF; w * w];
        self.path_obs = vec![0; w * w];
        self.pred = vec![NO_EDGE; w * w];
        let mut heap = BinaryHeap::new();
        for src in 0..w {
            let row = src * w;
            self.dist[row + src] = 0;
            heap.push(Reverse((0i64, src)));
            while let Some(Reverse((d, v))) = heap.pop() {
                if d > self.dist[row + v] {
                    continue;
                }
                for &(u, ei) in &adj[v] {
                    let nd = d + self.edges[ei].weight;
                    if nd < self.dist[row + u] {
                        self.dist[row + u] = nd;
                        self.path_obs[row + u] = self.path_obs[row + v] ^ self.edges[ei].observables;
                        self.pred[row + u] = ei as u32;
                        heap.push(Reverse((nd, u)));
                    }
                }
            }
        }
    }

    /// Pairs each fired node with another fired node or the boundary.
    pub fn match_nodes(&self, fired: &[usize]) -> Vec<(usize, usize)> {
        let bnd = self.boundary();
        match fired {
            [] => Vec::new(),
            [a] => vec![(*a, bnd)],
            [a, b] => {
                let direct = self.distance(*a, *b);
                if direct < INF && direct <= self.distance(*a, bnd).saturating_add(self.distance(*b, bnd)) {
                    vec![(*a, *b)]
                } else {
                    vec![(*a, bnd), (*b, bnd)]
                }
            }
            _ => {
                let k = fired.len();
                let mut edges = Vec::with_capacity(k * (k + 1));
                for i in 0..k {
                    let db = self.distance(fired[i], bnd);
                    if db < INF {
                        edges.push((i, k + i, db));
                    }
                    for j in i + 1..k {
                        let d = self.distance(fired[i], fired[j]);
                        if d < INF {
                            edges.push((i, j, d));
                        }
                        edges.push((k + i, k + j, 0));
                    }
                }
                match blossom::min_weight_perfect_matching(2 * k, &edges) {
                    Some(mate) => (0..k)
                        .filter_map(|i| {
                            let m = mate[i];
                            if m >= k {
                                Some((fired[i], bnd))
                            } else if i < m {
                                Some((fired[i], fired[m]))
                            } else {
                                None
                            }
                        })
                        .collect(),
                    None => fired.iter().map(|&a| (a, bnd)).collect(),
                }
            }
        }
    }

    /// Observable flips implied by a matching.
    pub fn matched_observables(&self, pairs: &[(usize, usize)]) -> u64 {
        pairs.iter().fold(0, |acc, &(a, b)| acc ^ self.path_obs[a * self.width() + b])
    }

    /// Edges on the shortest path between two nodes.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let w = self.width();
        let mut out = Vec::new();
        let mut v = b;
        while v != a {
            let ei = self.pred[a * w + v];
            if ei == NO_EDGE {
                return Vec::new();
            }
            out.push(ei as usize);
            let e = &self.edges[ei as usize];
            v = if e.a == v { e.b } else { e.a };
        }
        out
    }

    /// Generic edge-list dump: `a b weight probability observables`, with
    /// `B` for the boundary.
    pub fn edge_list(&self) -> String {
        let mut s = String::new();
        let name = |v: usize| if v == self.boundary() { "B".to_string() } else { self.nodes[v].to_string() };
        let _ = writeln!(s, "# {:?} graph: {} nodes, {} edges", self.kind, self.nodes.len(), self.edges.len());
        for e in &self.edges {
            let _ = writeln!(s, "{} {} {} {:.6e} {:#x}", name(e.a), name(e.b), e.weight, e.probability, e.observables);
        }
        s
    }
}

/// Effect of a fault propagated to the end of the circuit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Effect {
    dets: Vec<u32>,
    obs_x: u64,
    obs_z: u64,
    data_x: Vec<u32>,
    data_z: Vec<u32>,
}

fn xor_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

impl Effect {
    fn xor(&self, o: &Effect) -> Effect {
        Effect {
            dets: xor_sorted(&self.dets, &o.dets),
            obs_x: self.obs_x ^ o.obs_x,
            obs_z: self.obs_z ^ o.obs_z,
            data_x: xor_sorted(&self.data_x, &o.data_x),
            data_z: xor_sorted(&self.data_z, &o.data_z),
        }
    }
}

/// Both matching graphs of one experiment plus the detector list.
#[derive(Debug, Clone)]
pub struct MatchingGraphs {
    pub detectors: Vec<Detector>,
    pub x: MatchingGraph,
    pub z: MatchingGraph,
    pub n_data: usize,
    pub q_loc: usize,
    /// Node index of each detector within its graph.
    node_of: Vec<usize>,
    /// Single-fault mechanisms that flip more than two detectors of one graph.
    pub hyperedges: usize,
}

struct EffectBuilder<'a> {
    program: &'a Program,
    detectors: &'a [Detector],
    obs_x: &'a [ObservableDef],
    obs_z: &'a [ObservableDef],
    n_data: usize,
    cache: HashMap<(usize, usize, bool), Effect>,
}

impl EffectBuilder<'_> {
    fn eval(&self, frame: &Frame) -> Effect {
        let mut e = Effect::default();
        for (i, d) in self.detectors.iter().enumerate() {
            let v = frame.flips[d.record] ^ d.previous.is_some_and(|p| frame.flips[p]);
            if v {
                e.dets.push(i as u32);
            }
        }
        for (i, o) in self.obs_x.iter().enumerate() {
            e.obs_x |= (o.eval(frame) as u64) << i;
        }
        for (i, o) in self.obs_z.iter().enumerate() {
            e.obs_z |= (o.eval(frame) as u64) << i;
        }
        e.data_x = (0..self.n_data).filter(|&q| frame.x[q]).map(|q| q as u32).collect();
        e.data_z = (0..self.n_data).filter(|&q| frame.z[q]).map(|q| q as u32).collect();
        e
    }

    /// A single X (`z == false`) or Z on qubit `q` inserted after step `step`.
    fn elementary(&mut self, step: usize, q: usize, z: bool) -> Effect {
        if let Some(e) = self.cache.get(&(step, q, z)) {
            return e.clone();
        }
        let mut f = Frame::new(self.program);
        if z {
            f.z[q] = true;
        } else {
            f.x[q] = true;
        }
        self.program.run::<ChaCha8Rng>(&mut f, step + 1..self.program.num_steps(), &[], &mut Gauge::None);
        let e = self.eval(&f);
        self.cache.insert((step, q, z), e.clone());
        e
    }

    fn record_flip(&self, rec: usize) -> Effect {
        let mut f = Frame::new(self.program);
        f.flips[rec] = true;
        let mut e = self.eval(&f);
        // a record flip leaves no residual on the data
        e.data_x.clear();
        e.data_z.clear();
        e
    }

    /// Elementary components of a fault kind at `loc`.
    fn components(&mut self, circuit: &Circuit, loc: Location, kind: FaultKind) -> Vec<Effect> {
        let s = loc.step;
        let mut pauli = |q: usize, p: Pauli1, out: &mut Vec<Effect>| {
            let (x, z) = p.bits();
            if x {
                out.push(self.elementary(s, q, false));
            }
            if z {
                out.push(self.elementary(s, q, true));
            }
        };
        let mut out = Vec::new();
        match kind {
            FaultKind::Pauli1(q, p) => pauli(q, p, &mut out),
            FaultKind::Pauli2(a, pa, b, pb) => {
                pauli(a, pa, &mut out);
                pauli(b, pb, &mut out);
            }
            FaultKind::ResetFlip => match circuit.op(loc).kind {
                OpKind::Reset(q, Basis::Z) => out.push(self.elementary(s, q, false)),
                OpKind::Reset(q, Basis::X) => out.push(self.elementary(s, q, true)),
                _ => {}
            },
            FaultKind::MeasFlip => {
                if let Some(r) = self.program.record_at(loc) {
                    out.push(self.record_flip(r));
                }
            }
        }
        out
    }
}

#[derive(Default)]
struct EdgeAcc {
    p: f64,
    /// Merged probability per (observables, correction) class.
    classes: Vec<(u64, Vec<u32>, f64)>,
}

fn xor_prob(a: f64, b: f64) -> f64 {
    a + b - 2.0 * a * b
}

struct GraphAcc {
    kind: GraphKind,
    node_of: HashMap<u32, usize>,
    nodes: Vec<usize>,
    edges: BTreeMap<(usize, usize), EdgeAcc>,
}

impl GraphAcc {
    fn add(&mut self, dets: &[u32], obs: u64, corr: &[u32], p: f64) {
        let bnd = self.nodes.len();
        let ns: Vec<usize> = dets.iter().map(|d| self.node_of[d]).collect();
        let key = match ns.as_slice() {
            [a] => (*a, bnd),
            [a, b] => (*a.min(b), *a.max(b)),
            _ => return,
        };
        let acc = self.edges.entry(key).or_default();
        acc.p = xor_prob(acc.p, p);
        match acc.classes.iter_mut().find(|c| c.0 == obs && c.1 == corr) {
            Some(c) => c.2 = xor_prob(c.2, p),
            None => acc.classes.push((obs, corr.to_vec(), p)),
        }
    }

    fn finish(self, observables: Vec<ObservableDef>, opts: &DecoderOptions) -> MatchingGraph {
        let edges = self
            .edges
            .into_iter()
            .map(|((a, b), acc)| {
                let best = acc
                    .classes
                    .into_iter()
                    .reduce(|x, y| if y.2 > x.2 { y } else { x })
                    .expect("edge has a mechanism");
                let weight = if opts.unit_weights {
                    1
                } else {
                    let p = acc.p.clamp(1e-300, 0.5);
                    (((1.0 - p) / p).ln() * WEIGHT_SCALE).round().max(0.0) as i64
                };
                Edge { a, b, probability: acc.p, weight, observables: best.0, correction: best.1 }
            })
            .collect();
        let mut g = MatchingGraph {
            kind: self.kind,
            nodes: self.nodes,
            edges,
            observables,
            dist: Vec::new(),
            path_obs: Vec::new(),
            pred: Vec::new(),
        };
        g.all_pairs();
        g
    }
}

/// Builds the X and Z matching graphs for a timeline under a noise model.
/// `x_observables` must depend only on X-type information (Z-check records
/// and final X components), `z_observables` likewise for Z.
pub fn build_matching_graph(
    timeline: &Timeline,
    params: &NoiseParams,
    x_observables: Vec<ObservableDef>,
    z_observables: Vec<ObservableDef>,
    opts: &DecoderOptions,
) -> Result<MatchingGraphs> {
    if x_observables.len() > 64 || z_observables.len() > 64 {
        return Err(Error::Unsupported("more than 64 observables per graph".into()));
    }
    let circuit = timeline.circuit();
    let program = Program::compile(&circuit)?;
    let dets = detectors(timeline, &circuit);
    let eps = if params.epsilon > 0.0 { params.epsilon } else { opts.nominal_epsilon };

    let mut node_of = vec![0; dets.len()];
    let mut accs = [GraphKind::X, GraphKind::Z].map(|kind| GraphAcc {
        kind,
        node_of: HashMap::new(),
        nodes: Vec::new(),
        edges: BTreeMap::new(),
    });
    for (i, d) in dets.iter().enumerate() {
        let acc = if GraphKind::X.sees(d.kind) { &mut accs[0] } else { &mut accs[1] };
        node_of[i] = acc.nodes.len();
        acc.node_of.insert(i as u32, acc.nodes.len());
        acc.nodes.push(i);
    }
    let split = |e: &Effect, kind: GraphKind| -> Vec<u32> {
        e.dets.iter().copied().filter(|&d| kind.sees(dets[d as usize].kind)).collect()
    };

    let mut builder = EffectBuilder {
        program: &program,
        detectors: &dets,
        obs_x: &x_observables,
        obs_z: &z_observables,
        n_data: timeline.s1.n_data,
        cache: HashMap::new(),
    };
    let mut hyperedges = 0;
    let locs: Vec<Location> = circuit.locations().filter(|l| circuit.steps[l.step].noisy).collect();
    for loc in locs {
        for (kind, pk) in fault_kinds(&circuit, loc, params) {
            let p = eps * pk;
            let comps = builder.components(&circuit, loc, kind);
            let total = comps.iter().fold(Effect::default(), |a, c| a.xor(c));
            for (gi, gk) in [GraphKind::X, GraphKind::Z].into_iter().enumerate() {
                let (obs, corr) = match gk {
                    GraphKind::X => (total.obs_x, &total.data_x),
                    GraphKind::Z => (total.obs_z, &total.data_z),
                };
                let d = split(&total, gk);
                if d.len() <= 2 {
                    if !d.is_empty() {
                        accs[gi].add(&d, obs, corr, p);
                    }
                    continue;
                }
                hyperedges += 1;
                for c in &comps {
                    let (obs, corr) = match gk {
                        GraphKind::X => (c.obs_x, &c.data_x),
                        GraphKind::Z => (c.obs_z, &c.data_z),
                    };
                    let d = split(c, gk);
                    for (k, chunk) in d.chunks(2).enumerate() {
                        // observables and correction ride on the first chunk
                        if k == 0 {
                            accs[gi].add(chunk, obs, corr, p);
                        } else {
                            accs[gi].add(chunk, 0, &[], p);
                        }
                    }
                }
            }
        }
    }
    let [ax, az] = accs;
    Ok(MatchingGraphs {
        detectors: dets,
        x: ax.finish(x_observables, opts),
        z: az.finish(z_observables, opts),
        n_data: timeline.s1.n_data,
        q_loc: timeline.s1.q_loc,
        node_of,
        hyperedges,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Pauli correction on the data qubits at the final time.
    pub correction: PauliOperator,
    pub x_flips: u64,
    pub z_flips: u64,
    /// Corrected `G_i` values (`true` = `-1`), when raw values were supplied.
    pub corrected_sigmas: Vec<bool>,
    /// Whether the correction has an X component on `q_loc`.
    pub x_on_qloc: bool,
}

impl MatchingGraphs {
    /// Fired detector indices from a frame's record flips.
    pub fn fired(&self, flips: &[bool]) -> Vec<usize> {
        self.detectors
            .iter()
            .enumerate()
            .filter(|(_, d)| flips[d.record] ^ d.previous.is_some_and(|p| flips[p]))
            .map(|(i, _)| i)
            .collect()
    }

    /// Fired detector indices from detection events.
    pub fn fired_from_events(&self, events: &DetectionEvents) -> Vec<usize> {
        let set: BTreeSet<(usize, usize)> = events.events.iter().copied().collect();
        self.detectors.iter().enumerate().filter(|(_, d)| set.contains(&(d.check, d.cycle))).map(|(i, _)| i).collect()
    }

    fn split(&self, fired: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut x = Vec::new();
        let mut z = Vec::new();
        for &i in fired {
            if GraphKind::X.sees(self.detectors[i].kind) {
                x.push(self.node_of[i]);
            } else {
                z.push(self.node_of[i]);
            }
        }
        (x, z)
    }

    /// Observable flips predicted by matching, without building the correction.
    pub fn decode_observables(&self, fired: &[usize]) -> (u64, u64) {
        let (x, z) = self.split(fired);
        let mx = self.x.match_nodes(&x);
        let mz = self.z.match_nodes(&z);
        (self.x.matched_observables(&mx), self.z.matched_observables(&mz))
    }

    /// X-graph decoding only.
    pub fn decode_x_observables(&self, fired: &[usize]) -> u64 {
        let (x, _) = self.split(fired);
        self.x.matched_observables(&self.x.match_nodes(&x))
    }

    /// Full decoding. `raw_sigmas[i]` is the last raw `G_{i+1}` outcome; the
    /// X-graph observable `i + 1` must be the flip of that record.
    pub fn decode(&self, fired: &[usize], raw_sigmas: &[bool]) -> DecodeResult {
        let (x, z) = self.split(fired);
        let mut correction = PauliOperator::identity(self.n_data);
        let mut flips = [0u64; 2];
        for (gi, (g, nodes)) in [(&self.x, x), (&self.z, z)].into_iter().enumerate() {
            let pairs = g.match_nodes(&nodes);
            flips[gi] = g.matched_observables(&pairs);
            let mut toggled = vec![false; self.n_data];
            for &(a, b) in &pairs {
                for ei in g.path(a, b) {
                    for &q in &g.edges[ei].correction {
                        toggled[q as usize] ^= true;
                    }
                }
            }
            for (q, &t) in toggled.iter().enumerate() {
                if t {
                    let cur = correction.get(q);
                    let (cx, cz) = cur.bits();
                    let nb = if g.kind == GraphKind::X { (!cx, cz) } else { (cx, !cz) };
                    correction.set(q, Pauli1::from_bits(nb.0, nb.1));
                }
            }
        }
        let corrected_sigmas = raw_sigmas.iter().enumerate().map(|(i, &s)| s ^ (flips[0] >> (i + 1) & 1 == 1)).collect();
        let x_on_qloc = correction.x_bit(self.q_loc);
        DecodeResult { correction: correction.unsigned(), x_flips: flips[0], z_flips: flips[1], corrected_sigmas, x_on_qloc }
    }
}
