//! Code switching S1 → S2 → S1 and its Monte Carlo experiments.
//!
//! Two experiments share one machinery:
//!
//! * frame: encode `|b̄⟩` in S1, run `L` noisy S2 cycles, decode, and check
//!   whether the phase `σ` and bit `a` derived from the decoder agree with
//!   the state actually produced (P_F);
//! * logical: run `L` noisy S2 cycles, `s1_cycles` noisy S1 cycles and one
//!   noiseless S1 cycle, apply `R`, decode the whole history and classify the
//!   residual against `X̄` and `Z̄` (P_Z, P_X). The T gate itself is skipped.
//!
//! Trials run on the frame engine against the all-`+1` noiseless reference,
//! with gauge randomness drawn per trial. Trial `i` of an experiment uses
//! stream `i` of a seed derived from the configured seed, so estimates do not
//! depend on the thread count.

use std::collections::HashMap;
use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Circuit, OpKind};
use crate::decoder::{build_matching_graph, DecoderOptions, MatchingGraphs, ObservableDef};
use crate::error::{invalid, Result};
use crate::frame::{Frame, Gauge, Program};
use crate::noise::{fault_kinds, Fault, FaultSampler, NoiseParams};
use crate::rng::{derive_seed, stream, CoinFlips};
use crate::stabilizer::{CliffordGate, PauliOperator};
use crate::stats::RateEstimate;
use crate::surface_code::{CodeSpec, Role, Timeline, Variant, CYCLE_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingConfig {
    pub d: usize,
    pub epsilon: f64,
    /// S2 cycles.
    pub l: usize,
    /// Noisy S1 cycles after switching back.
    pub s1_cycles: usize,
    /// Use `L = 2` when the first two `G` syndromes agree, `L = 3` otherwise.
    pub adaptive_l: bool,
    pub trials: u64,
    pub seed: u64,
    pub cnot_includes_identity: bool,
    pub unit_weights: bool,
}

impl SwitchingConfig {
    pub fn new(d: usize, epsilon: f64) -> Self {
        Self {
            d,
            epsilon,
            l: 3,
            s1_cycles: d,
            adaptive_l: false,
            trials: 1000,
            seed: 0,
            cnot_includes_identity: false,
            unit_weights: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 || self.d.is_multiple_of(2) {
            return Err(invalid("d", format!("must be odd and at least 3, got {}", self.d)));
        }
        if self.l < 2 {
            return Err(invalid("L", format!("must be at least 2, got {}", self.l)));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        self.noise().map(|_| ())
    }

    pub fn noise(&self) -> Result<NoiseParams> {
        let mut p = NoiseParams::new(self.epsilon)?;
        p.cnot_includes_identity = self.cnot_includes_identity;
        Ok(p)
    }
}

/// `R = ∏_{i: λ_i = -1} ∏_{a=i}^{t} G_a`, on the data qubits. `lambdas[i]`
/// is `true` when `λ_{i+1} = -1`.
pub fn compute_r(lambdas: &[bool], spec: &CodeSpec) -> PauliOperator {
    let mut r = PauliOperator::identity(spec.n_data);
    let mut parity = false;
    // G_a enters once for every i <= a with λ_i = -1
    for (a, &l) in lambdas.iter().enumerate().take(spec.t) {
        parity ^= l;
        if parity {
            r = r.mul(&spec.g_operator(a + 1));
        }
    }
    r.unsigned()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Frame,
    Logical,
}

/// One compiled schedule with its decoder.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub l: usize,
    pub timeline: Timeline,
    pub circuit: Circuit,
    pub program: Program,
    pub sampler: FaultSampler,
    pub graphs: MatchingGraphs,
    records: HashMap<(usize, usize), usize>,
}

impl Protocol {
    fn build(experiment: Experiment, cfg: &SwitchingConfig, l: usize) -> Result<Self> {
        let params = cfg.noise()?;
        let mut timeline = Timeline::new(cfg.d)?.push(Variant::S2, l, true);
        if experiment == Experiment::Logical {
            timeline = timeline.push(Variant::S1, cfg.s1_cycles, true).push(Variant::S1, 1, false);
        }
        let circuit = timeline.circuit();
        let program = Program::compile(&circuit)?;
        let mut records = HashMap::new();
        for (i, (_, tag)) in circuit.measurements().into_iter().enumerate() {
            if let Some(t) = tag {
                records.insert((t.stabilizer as usize, t.cycle as usize), i);
            }
        }
        let s1 = &timeline.s1;
        let (xo, zo) = match experiment {
            Experiment::Frame => {
                let mut xo = vec![ObservableDef { x_qubits: vec![s1.q_loc], ..Default::default() }];
                for i in 1..=s1.t {
                    xo.push(ObservableDef { records: vec![records[&(s1.g_check(i), l - 1)]], ..Default::default() });
                }
                (xo, Vec::new())
            }
            Experiment::Logical => (
                vec![ObservableDef { x_qubits: s1.logical_z.support(), ..Default::default() }],
                vec![ObservableDef { z_qubits: s1.logical_x.support(), ..Default::default() }],
            ),
        };
        let opts = DecoderOptions { unit_weights: cfg.unit_weights, ..Default::default() };
        let graphs = build_matching_graph(&timeline, &params, xo, zo, &opts)?;
        let sampler = FaultSampler::new(&circuit, params);
        Ok(Self { l, timeline, circuit, program, sampler, graphs, records })
    }

    pub fn record(&self, check: usize, cycle: usize) -> Option<usize> {
        self.records.get(&(check, cycle)).copied()
    }

    fn g_flips(&self, frame: &Frame, cycle: usize) -> Vec<bool> {
        let s1 = &self.timeline.s1;
        (1..=s1.t).map(|i| frame.flips[self.records[&(s1.g_check(i), cycle)]]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub frame_error: bool,
    pub z_error: bool,
    pub x_error: bool,
    pub l_used: usize,
}

/// Compiled experiment: one protocol, or the `L = 2` / `L = 3` pair in
/// adaptive mode.
#[derive(Debug, Clone)]
pub struct Switching {
    pub experiment: Experiment,
    pub config: SwitchingConfig,
    pub main: Protocol,
    pub short: Option<Protocol>,
}

const ADAPTIVE_PREFIX: usize = 2;

impl Switching {
    pub fn new(experiment: Experiment, config: SwitchingConfig) -> Result<Self> {
        config.validate()?;
        if config.adaptive_l {
            Ok(Self {
                experiment,
                config,
                main: Protocol::build(experiment, &config, 3)?,
                short: Some(Protocol::build(experiment, &config, 2)?),
            })
        } else {
            Ok(Self { experiment, config, main: Protocol::build(experiment, &config, config.l)?, short: None })
        }
    }

    /// Random gauge of the encoded state: a product of S1 generators, and
    /// `X̄` when `b = 1`.
    fn initial_frame(&self, p: &Protocol, b: bool, rng: &mut ChaCha8Rng) -> Frame {
        let mut f = Frame::new(&p.program);
        let s1 = &p.timeline.s1;
        let mut coins = CoinFlips::new();
        for (_, c) in s1.active_checks() {
            if coins.flip(rng) {
                f.apply_pauli(&c.operator(s1.n_data));
            }
        }
        if b {
            f.apply_pauli(&s1.logical_x);
        }
        f
    }

    fn run_steps(p: &Protocol, frame: &mut Frame, steps: Range<usize>, rng: &mut ChaCha8Rng) {
        let loc = p.sampler.first_at_step(steps.start)..p.sampler.first_at_step(steps.end);
        let mut faults = Vec::new();
        p.sampler.sample_range(loc, rng, &mut faults);
        p.program.run(frame, steps, &faults, &mut Gauge::random(rng));
    }

    /// Runs one Monte Carlo trial.
    pub fn trial(&self, rng: &mut ChaCha8Rng) -> TrialOutcome {
        let b = rng.random::<bool>();
        let mut p = &self.main;
        let mut frame = self.initial_frame(p, b, rng);
        let mut start = 0;
        if let Some(short) = &self.short {
            let end = ADAPTIVE_PREFIX * CYCLE_DEPTH;
            Self::run_steps(p, &mut frame, 0..end, rng);
            if p.g_flips(&frame, 0) == p.g_flips(&frame, 1) {
                let mut f = Frame::new(&short.program);
                f.x.copy_from_slice(&frame.x);
                f.z.copy_from_slice(&frame.z);
                let n = short.program.num_records().min(frame.flips.len());
                f.flips[..n].copy_from_slice(&frame.flips[..n]);
                frame = f;
                p = short;
            }
            start = end;
        }
        Self::run_steps(p, &mut frame, start..p.program.num_steps(), rng);
        self.classify(p, &mut frame, b)
    }

    /// Decodes a finished frame and compares inferred and actual logical data.
    fn classify(&self, p: &Protocol, frame: &mut Frame, b: bool) -> TrialOutcome {
        let s1 = &p.timeline.s1;
        let fired = p.graphs.fired(&frame.flips);
        let mut out = TrialOutcome { l_used: p.l, ..Default::default() };
        match self.experiment {
            Experiment::Frame => {
                let raw = p.g_flips(frame, p.l - 1);
                let dec = p.graphs.decode(&fired, &raw);
                let a = dec.x_on_qloc;
                // Z_loc = Z̄ ∏ G_i. The reference is |0̄⟩ with all G_i = +1, and
                // the frame carries X̄^b.
                let z_loc = frame.x[s1.q_loc] ^ a;
                let zbar = dec.corrected_sigmas.iter().fold(z_loc, |acc, &s| acc ^ s);
                out.frame_error = zbar != b;
            }
            Experiment::Logical => {
                let lambdas: Vec<bool> =
                    (1..=s1.t).map(|i| frame.flips[p.records[&(s1.f_check(i), p.l)]]).collect();
                frame.apply_pauli(&compute_r(&lambdas, s1));
                if b {
                    frame.apply_pauli(&s1.logical_x);
                }
                let dec = p.graphs.decode(&fired, &[]);
                let residual = frame.pauli(s1.n_data).mul(&dec.correction);
                out.z_error = !residual.commutes(&s1.logical_x);
                out.x_error = !residual.commutes(&s1.logical_z);
            }
        }
        out
    }

    /// Outcome for a fixed list of faults, without gauge randomness.
    pub fn with_faults(&self, faults: &[Fault]) -> TrialOutcome {
        let p = &self.main;
        let mut f = Frame::new(&p.program);
        p.program.run_all::<ChaCha8Rng>(&mut f, faults, &mut Gauge::None);
        self.classify(p, &mut f, false)
    }

    /// Every single fault of the main protocol with its outcome.
    pub fn single_fault_sweep(&self) -> Vec<SingleFault> {
        let p = &self.main;
        let params = self.config.noise().expect("validated");
        let mut out = Vec::new();
        for loc in p.circuit.locations().filter(|l| p.circuit.steps[l.step].noisy) {
            let op = p.circuit.op(loc);
            let in_sigma = op.qubits().iter().any(|&q| is_g_ancilla(&p.timeline.s1, q));
            for (kind, probability) in fault_kinds(&p.circuit, loc, &params) {
                let fault = Fault { location: loc, kind };
                let outcome = self.with_faults(&[fault]);
                out.push(SingleFault { fault, probability, in_sigma_measurement: in_sigma, outcome });
            }
        }
        out
    }

    /// Exact first-order coefficients `P/ε` from the single-fault sweep.
    pub fn first_order(&self) -> FirstOrder {
        let mut fo = FirstOrder::default();
        for s in self.single_fault_sweep() {
            fo.p_f += s.probability * s.outcome.frame_error as u8 as f64;
            fo.p_z += s.probability * s.outcome.z_error as u8 as f64;
            fo.p_x += s.probability * s.outcome.x_error as u8 as f64;
        }
        fo
    }

    /// Runs `config.trials` trials in parallel on the current rayon pool.
    pub fn estimate(&self) -> Counts {
        let tag = match self.experiment {
            Experiment::Frame => 0,
            Experiment::Logical => 1,
        };
        let seed = derive_seed(self.config.seed, &[tag]);
        (0..self.config.trials)
            .into_par_iter()
            .map(|i| Counts::from(self.trial(&mut stream(seed, i))))
            .reduce(Counts::default, Counts::add)
    }
}

fn is_g_ancilla(spec: &CodeSpec, q: usize) -> bool {
    q >= spec.n_data && matches!(spec.checks[q - spec.n_data].role, Role::G(_))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleFault {
    pub fault: Fault,
    /// Probability of this kind given a fault at its location.
    pub probability: f64,
    /// Whether the fault touches a `G_i` ancilla.
    pub in_sigma_measurement: bool,
    pub outcome: TrialOutcome,
}

/// First-order coefficients: rate `≈ coefficient · ε` for small `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirstOrder {
    pub p_f: f64,
    pub p_z: f64,
    pub p_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub trials: u64,
    pub frame_errors: u64,
    pub z_errors: u64,
    pub x_errors: u64,
    /// Sum of `L` over trials.
    pub l_total: u64,
}

impl From<TrialOutcome> for Counts {
    fn from(o: TrialOutcome) -> Self {
        Self {
            trials: 1,
            frame_errors: o.frame_error as u64,
            z_errors: o.z_error as u64,
            x_errors: o.x_error as u64,
            l_total: o.l_used as u64,
        }
    }
}

impl Counts {
    pub fn add(self, o: Counts) -> Counts {
        Counts {
            trials: self.trials + o.trials,
            frame_errors: self.frame_errors + o.frame_errors,
            z_errors: self.z_errors + o.z_errors,
            x_errors: self.x_errors + o.x_errors,
            l_total: self.l_total + o.l_total,
        }
    }

    pub fn mean_l(&self) -> f64 {
        self.l_total as f64 / self.trials.max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchingRates {
    pub p_f: RateEstimate,
    pub p_z: RateEstimate,
    pub p_x: RateEstimate,
    pub frame: Counts,
    pub logical: Counts,
}

impl SwitchingRates {
    /// Combined logical rate `P_Z + P_F/2` of the mitigated T gate.
    pub fn combined(&self) -> f64 {
        self.p_z.rate + self.p_f.rate / 2.0
    }
}

pub fn frame_trial(config: &SwitchingConfig, rng: &mut ChaCha8Rng) -> Result<bool> {
    Ok(Switching::new(Experiment::Frame, *config)?.trial(rng).frame_error)
}

pub fn logical_trial(config: &SwitchingConfig, rng: &mut ChaCha8Rng) -> Result<(bool, bool)> {
    let o = Switching::new(Experiment::Logical, *config)?.trial(rng);
    Ok((o.z_error, o.x_error))
}

/// Runs both experiments with `config.trials` trials each.
pub fn estimate_rates(config: &SwitchingConfig) -> Result<SwitchingRates> {
    let frame = Switching::new(Experiment::Frame, *config)?.estimate();
    let logical = Switching::new(Experiment::Logical, *config)?.estimate();
    Ok(SwitchingRates {
        p_f: RateEstimate::new(frame.frame_errors, frame.trials),
        p_z: RateEstimate::new(logical.z_errors, logical.trials),
        p_x: RateEstimate::new(logical.x_errors, logical.trials),
        frame,
        logical,
    })
}

/// Noiseless Algorithm 1 on the tableau with `S` in place of `T` (both are
/// diagonal, so the `σ` bookkeeping is identical). Starting from `|+̄⟩`, the
/// result must be the `+1` eigenstate of `Ȳ` in S1.
pub fn noiseless_clifford_check<R: Rng + ?Sized>(d: usize, l: usize, rng: &mut R) -> Result<bool> {
    use crate::noise::{execute, FaultyCircuit};
    use crate::surface_code::{encode_logical, LogicalState};

    let tl = Timeline::new(d)?.push(Variant::S2, l, false);
    let back = Timeline::new(d)?.push(Variant::S1, 1, false);
    let s1 = &tl.s1;
    let state = encode_logical(s1, LogicalState::Plus)?;
    let (mut state, rec) = execute(&FaultyCircuit::noiseless(&tl.circuit()), state, rng)?;
    let sigma = (1..=s1.t).fold(false, |acc, i| {
        acc ^ rec.get(crate::circuit::Tag { code: 2, stabilizer: s1.g_check(i) as u32, cycle: (l - 1) as u32 }).unwrap_or(false)
    });
    let q = s1.q_loc;
    state.apply_gate(if sigma { CliffordGate::Sdg(q) } else { CliffordGate::S(q) })?;
    let (mut state, rec) = execute(&FaultyCircuit::noiseless(&back.circuit()), state, rng)?;
    let lambdas: Vec<bool> = (1..=s1.t)
        .map(|i| rec.get(crate::circuit::Tag { code: 1, stabilizer: s1.f_check(i) as u32, cycle: 0 }).unwrap_or(false))
        .collect();
    state.apply_pauli(&s1.on_register(&compute_r(&lambdas, s1)))?;
    let mut ybar = s1.on_register(&s1.logical_x).mul(&s1.on_register(&s1.logical_z));
    ybar.mul_phase(1);
    let mut ok = state.is_stabilized_by(&ybar)?;
    for (_, c) in s1.active_checks() {
        ok &= state.is_stabilized_by(&c.operator(s1.n_qubits))?;
    }
    Ok(ok)
}

/// Whether an operation belongs to the measurement of some `G_i`.
pub fn touches_sigma_measurement(spec: &CodeSpec, kind: &OpKind) -> bool {
    let qs: Vec<usize> = match *kind {
        OpKind::Gate(g) => g.qubits(),
        OpKind::T(q) | OpKind::Reset(q, _) | OpKind::Measure(q, _) | OpKind::Idle(q) => vec![q],
    };
    qs.into_iter().any(|q| is_g_ancilla(spec, q))
}
