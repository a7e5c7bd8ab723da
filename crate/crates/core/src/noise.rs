//! Circuit-level depolarizing noise.
//!
//! Every operation of a noisy step fails independently with probability `ε`.
//! A failed CNOT is followed by a uniformly random non-identity two-qubit
//! Pauli (or any of the 16 if `cnot_includes_identity`); a failed one-qubit
//! gate or idle by X, Y or Z; a failed measurement reports the flipped
//! outcome; a failed reset prepares the orthogonal state.

use rand::Rng;

use crate::circuit::{Circuit, Location, OpKind, Tag};
use crate::error::{Error, Result};
use crate::rng::geometric_gap;
use crate::stabilizer::{Basis, CliffordGate, Pauli1, PauliOperator, StabilizerState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub epsilon: f64,
    pub cnot_includes_identity: bool,
}

impl NoiseParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        let p = Self { epsilon, cnot_includes_identity: false };
        p.validate()?;
        Ok(p)
    }

    pub fn noiseless() -> Self {
        Self { epsilon: 0.0, cnot_includes_identity: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) || self.epsilon.is_nan() {
            return Err(Error::InvalidParameter { name: "epsilon", reason: format!("{} not in [0, 1]", self.epsilon) });
        }
        Ok(())
    }

    /// Number of equally likely two-qubit Paulis drawn after a faulty CNOT.
    pub fn cnot_kinds(&self) -> u8 {
        if self.cnot_includes_identity {
            16
        } else {
            15
        }
    }
}

const PAULIS: [Pauli1; 4] = [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultKind {
    /// Pauli after a one-qubit operation.
    Pauli1(usize, Pauli1),
    /// Paulis after a CNOT on (control, target).
    Pauli2(usize, Pauli1, usize, Pauli1),
    MeasFlip,
    ResetFlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fault {
    pub location: Location,
    pub kind: FaultKind,
}

impl Fault {
    /// The Pauli this fault inserts after its operation, if any. Reset flips
    /// are the Pauli that maps the ideal prepared state to its orthogonal one.
    pub fn pauli(&self, circuit: &Circuit) -> Option<PauliOperator> {
        let n = circuit.n;
        match self.kind {
            FaultKind::Pauli1(q, p) => Some(PauliOperator::single(n, q, p)),
            FaultKind::Pauli2(a, pa, b, pb) => Some(PauliOperator::from_sparse(n, &[(a, pa), (b, pb)])),
            FaultKind::ResetFlip => match circuit.op(self.location).kind {
                OpKind::Reset(q, Basis::Z) => Some(PauliOperator::single(n, q, Pauli1::X)),
                OpKind::Reset(q, Basis::X) => Some(PauliOperator::single(n, q, Pauli1::Z)),
                _ => None,
            },
            FaultKind::MeasFlip => None,
        }
    }
}

/// Every possible fault at one operation with its conditional probability
/// given that the operation failed.
pub fn fault_kinds(circuit: &Circuit, loc: Location, params: &NoiseParams) -> Vec<(FaultKind, f64)> {
    match circuit.op(loc).kind {
        OpKind::Gate(CliffordGate::Cnot(c, t)) => {
            let k = params.cnot_kinds();
            let start = 16 - k;
            (start..16)
                .filter(|&i| i != 0)
                .map(|i| (FaultKind::Pauli2(c, PAULIS[(i & 3) as usize], t, PAULIS[(i >> 2) as usize]), 1.0 / k as f64))
                .collect()
        }
        OpKind::Gate(g) => single_kinds(g.qubits()[0]),
        OpKind::T(q) | OpKind::Idle(q) => single_kinds(q),
        OpKind::Reset(..) => vec![(FaultKind::ResetFlip, 1.0)],
        OpKind::Measure(..) => vec![(FaultKind::MeasFlip, 1.0)],
    }
}

fn single_kinds(q: usize) -> Vec<(FaultKind, f64)> {
    Pauli1::NON_IDENTITY.iter().map(|&p| (FaultKind::Pauli1(q, p), 1.0 / 3.0)).collect()
}

fn draw_kind<R: Rng + ?Sized>(kind: OpKind, params: &NoiseParams, rng: &mut R) -> Option<FaultKind> {
    Some(match kind {
        OpKind::Gate(CliffordGate::Cnot(c, t)) => {
            let i = if params.cnot_includes_identity { rng.random_range(0..16u8) } else { rng.random_range(1..16u8) };
            if i == 0 {
                return None;
            }
            FaultKind::Pauli2(c, PAULIS[(i & 3) as usize], t, PAULIS[(i >> 2) as usize])
        }
        OpKind::Gate(g) => FaultKind::Pauli1(g.qubits()[0], Pauli1::NON_IDENTITY[rng.random_range(0..3)]),
        OpKind::T(q) | OpKind::Idle(q) => FaultKind::Pauli1(q, Pauli1::NON_IDENTITY[rng.random_range(0..3)]),
        OpKind::Reset(..) => FaultKind::ResetFlip,
        OpKind::Measure(..) => FaultKind::MeasFlip,
    })
}

/// A circuit together with the faults inserted into it, sorted by location.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultyCircuit<'a> {
    pub base: &'a Circuit,
    pub faults: Vec<Fault>,
}

impl<'a> FaultyCircuit<'a> {
    pub fn noiseless(base: &'a Circuit) -> Self {
        Self { base, faults: Vec::new() }
    }

    pub fn with_faults(base: &'a Circuit, mut faults: Vec<Fault>) -> Result<Self> {
        for f in &faults {
            let ok = f.location.step < base.steps.len() && f.location.op < base.steps[f.location.step].ops.len();
            if !ok {
                return Err(invalid_location(f.location));
            }
        }
        faults.sort_by_key(|f| f.location);
        Ok(Self { base, faults })
    }

    pub fn flipped_measurements(&self) -> Vec<Location> {
        self.faults.iter().filter(|f| f.kind == FaultKind::MeasFlip).map(|f| f.location).collect()
    }

    pub fn flipped_resets(&self) -> Vec<Location> {
        self.faults.iter().filter(|f| f.kind == FaultKind::ResetFlip).map(|f| f.location).collect()
    }
}

fn invalid_location(l: Location) -> Error {
    Error::InvalidParameter { name: "fault location", reason: format!("step {} op {} not in circuit", l.step, l.op) }
}

/// Noisy locations of a circuit in time order, for repeated sampling.
#[derive(Debug, Clone)]
pub struct FaultSampler {
    params: NoiseParams,
    locations: Vec<(Location, OpKind)>,
    log1m: f64,
}

impl FaultSampler {
    pub fn new(circuit: &Circuit, params: NoiseParams) -> Self {
        let locations = circuit
            .locations()
            .filter(|l| circuit.steps[l.step].noisy)
            .map(|l| (l, circuit.op(l).kind))
            .collect();
        Self { params, locations, log1m: (1.0 - params.epsilon).ln() }
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    /// Index of the first noisy location at or after `step`.
    pub fn first_at_step(&self, step: usize) -> usize {
        self.locations.partition_point(|(l, _)| l.step < step)
    }

    /// Samples faults among noisy locations `range`, appending to `out`.
    pub fn sample_range<R: Rng + ?Sized>(&self, range: std::ops::Range<usize>, rng: &mut R, out: &mut Vec<Fault>) {
        let eps = self.params.epsilon;
        if eps <= 0.0 {
            return;
        }
        let mut i = range.start;
        while i < range.end {
            if eps < 1.0 {
                let gap = geometric_gap(rng, self.log1m);
                if gap >= (range.end - i) as u64 {
                    break;
                }
                i += gap as usize;
            }
            let (loc, kind) = self.locations[i];
            if let Some(k) = draw_kind(kind, &self.params, rng) {
                out.push(Fault { location: loc, kind: k });
            }
            i += 1;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Fault> {
        let mut out = Vec::new();
        self.sample_range(0..self.locations.len(), rng, &mut out);
        out
    }
}

pub fn sample_faults<'a, R: Rng + ?Sized>(circuit: &'a Circuit, params: &NoiseParams, rng: &mut R) -> FaultyCircuit<'a> {
    let faults = FaultSampler::new(circuit, *params).sample(rng);
    FaultyCircuit { base: circuit, faults }
}

/// Measurement outcomes in record order; `true` means eigenvalue `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MeasurementRecord {
    pub bits: Vec<bool>,
    pub tags: Vec<Option<Tag>>,
}

impl MeasurementRecord {
    pub fn get(&self, tag: Tag) -> Option<bool> {
        self.tags.iter().position(|t| *t == Some(tag)).map(|i| self.bits[i])
    }
}

/// Runs the faulty circuit on a tableau. Random outcomes come from `rng`.
pub fn execute<R: Rng + ?Sized>(
    faulty: &FaultyCircuit<'_>,
    state: StabilizerState,
    rng: &mut R,
) -> Result<(StabilizerState, MeasurementRecord)> {
    execute_with(faulty, state, || rng.random::<bool>())
}

/// As [`execute`], with random outcomes decided by `choose`.
pub fn execute_with(
    faulty: &FaultyCircuit<'_>,
    mut state: StabilizerState,
    mut choose: impl FnMut() -> bool,
) -> Result<(StabilizerState, MeasurementRecord)> {
    let circ = faulty.base;
    if state.num_qubits() != circ.n {
        return Err(Error::SizeMismatch { expected: circ.n, got: state.num_qubits() });
    }
    let mut record = MeasurementRecord::default();
    let mut next = 0;
    for (s, step) in circ.steps.iter().enumerate() {
        for (o, op) in step.ops.iter().enumerate() {
            match op.kind {
                OpKind::Gate(g) => state.apply_gate(g)?,
                OpKind::T(_) => return Err(Error::Unsupported("T gate in a stabilizer simulation".into())),
                OpKind::Reset(q, b) => state.reset_with(q, b, &mut choose)?,
                OpKind::Measure(q, b) => {
                    let out = state.measure_basis_with(q, b, &mut choose)?;
                    record.bits.push(out.minus);
                    record.tags.push(op.tag);
                }
                OpKind::Idle(_) => {}
            }
            let here = Location { step: s, op: o };
            while next < faulty.faults.len() && faulty.faults[next].location == here {
                let f = faulty.faults[next];
                if f.kind == FaultKind::MeasFlip {
                    if let Some(b) = record.bits.last_mut().filter(|_| op.is_measurement()) {
                        *b ^= true;
                    }
                } else if let Some(p) = f.pauli(circ) {
                    state.apply_pauli(&p)?;
                }
                next += 1;
            }
        }
    }
    Ok((state, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Operation, Step};
    use crate::rng::stream;
    use crate::surface_code::{build_code, encode_logical, syndrome_cycle, LogicalState, Variant};

    fn idle_circuit(n: usize, steps: usize) -> Circuit {
        let mut c = Circuit::new(n);
        for _ in 0..steps {
            let mut s = Step::new(true);
            s.fill_idles(n);
            c.push_step(s);
        }
        c
    }

    #[test]
    fn zero_noise_has_no_faults() {
        let c = idle_circuit(10, 10);
        let mut rng = stream(1, 0);
        for _ in 0..100 {
            assert!(sample_faults(&c, &NoiseParams::noiseless(), &mut rng).faults.is_empty());
        }
    }

    #[test]
    fn unit_noise_faults_everything() {
        let mut c = Circuit::new(2);
        let mut s = Step::new(true);
        s.push(Operation::measure(0, Basis::Z, None)).push(Operation::reset(1, Basis::X));
        c.push_step(s);
        let f = sample_faults(&c, &NoiseParams::new(1.0).unwrap(), &mut stream(2, 0));
        assert_eq!(f.faults.len(), 2);
        assert_eq!(f.flipped_measurements().len(), 1);
        assert_eq!(f.flipped_resets().len(), 1);
    }

    #[test]
    fn noiseless_steps_are_skipped() {
        let mut c = idle_circuit(5, 3);
        c.steps[1].noisy = false;
        let sampler = FaultSampler::new(&c, NoiseParams::new(1.0).unwrap());
        assert_eq!(sampler.num_locations(), 10);
        assert!(sampler.sample(&mut stream(3, 0)).iter().all(|f| f.location.step != 1));
    }

    #[test]
    fn rejects_bad_epsilon() {
        assert!(NoiseParams::new(-0.1).is_err());
        assert!(NoiseParams::new(1.5).is_err());
        assert!(NoiseParams::new(f64::NAN).is_err());
    }

    #[test]
    fn mean_fault_count_is_binomial() {
        let c = idle_circuit(100, 100);
        let p = NoiseParams::new(0.01).unwrap();
        let sampler = FaultSampler::new(&c, p);
        let mut rng = stream(4, 0);
        let samples = 1000;
        let total: usize = (0..samples).map(|_| sampler.sample(&mut rng).len()).sum();
        let mean = total as f64 / samples as f64;
        let sd = (1e4 * 0.01 * 0.99 / samples as f64).sqrt();
        assert!((mean - 100.0).abs() < 5.0 * sd, "{mean}");
    }

    #[test]
    fn per_location_marginals() {
        let c = idle_circuit(4, 1);
        let p = NoiseParams::new(0.2).unwrap();
        let sampler = FaultSampler::new(&c, p);
        let mut rng = stream(5, 0);
        let samples = 10_000;
        let mut hits = [0usize; 4];
        for _ in 0..samples {
            for f in sampler.sample(&mut rng) {
                hits[f.location.op] += 1;
            }
        }
        let sd = (samples as f64 * 0.2 * 0.8).sqrt();
        for h in hits {
            assert!((h as f64 - 2000.0).abs() < 4.0 * sd, "{hits:?}");
        }
    }

    #[test]
    fn cnot_kind_marginals() {
        let mut c = Circuit::new(2);
        let mut s = Step::new(true);
        s.push(Operation::gate(CliffordGate::Cnot(0, 1)));
        c.push_step(s);
        let p = NoiseParams::new(1.0).unwrap();
        let sampler = FaultSampler::new(&c, p);
        let mut rng = stream(6, 0);
        let samples = 30_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..samples {
            let f = sampler.sample(&mut rng);
            *counts.entry(f[0].kind).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 15);
        let e = samples as f64 / 15.0;
        let sd = (samples as f64 * (1.0 / 15.0) * (14.0 / 15.0)).sqrt();
        for (k, v) in &counts {
            assert!((*v as f64 - e).abs() < 4.0 * sd, "{k:?}: {v}");
        }
        let with_id = FaultSampler::new(&c, NoiseParams { epsilon: 1.0, cnot_includes_identity: true });
        let empty = (0..16_000).filter(|_| with_id.sample(&mut rng).is_empty()).count();
        assert!((empty as f64 - 1000.0).abs() < 4.0 * (16_000.0f64 * (1.0 / 16.0) * (15.0 / 16.0)).sqrt());
    }

    #[test]
    fn fault_kind_tables_sum_to_one() {
        let spec = build_code(3, Variant::S1).unwrap();
        let c = syndrome_cycle(&spec, 0, true);
        for p in [NoiseParams::new(0.1).unwrap(), NoiseParams { epsilon: 0.1, cnot_includes_identity: true }] {
            for l in c.locations() {
                let kinds = fault_kinds(&c, l, &p);
                let total: f64 = kinds.iter().map(|k| k.1).sum();
                let expect = if matches!(c.op(l).kind, OpKind::Gate(CliffordGate::Cnot(..))) && p.cnot_includes_identity {
                    15.0 / 16.0
                } else {
                    1.0
                };
                assert!((total - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn determinism_per_seed() {
        let spec = build_code(3, Variant::S1).unwrap();
        let c = syndrome_cycle(&spec, 0, true);
        let p = NoiseParams::new(0.05).unwrap();
        let run = |seed| {
            let mut rng = stream(seed, 7);
            let f = sample_faults(&c, &p, &mut rng);
            let st = encode_logical(&spec, LogicalState::Zero).unwrap();
            let (_, rec) = execute(&f, st, &mut rng).unwrap();
            (f.faults, rec)
        };
        assert_eq!(run(9), run(9));
    }

    fn cycles(spec: &crate::surface_code::CodeSpec, count: u32) -> Circuit {
        let mut c = Circuit::new(spec.n_qubits);
        for k in 0..count {
            c.extend(&syndrome_cycle(spec, k, true)).unwrap();
        }
        c
    }

    #[test]
    fn noiseless_cycles_give_trivial_syndromes() {
        for d in [3, 5] {
            let spec = build_code(d, Variant::S1).unwrap();
            let c = cycles(&spec, 3);
            for st in [LogicalState::Zero, LogicalState::One, LogicalState::Plus] {
                let s = encode_logical(&spec, st).unwrap();
                let (s, rec) = execute(&FaultyCircuit::noiseless(&c), s, &mut stream(10, 0)).unwrap();
                assert!(rec.bits.iter().all(|b| !b));
                s.audit().unwrap();
            }
        }
    }

    #[test]
    fn s2_cycles_randomize_g_once() {
        let s1 = build_code(3, Variant::S1).unwrap();
        let s2 = s1.with_variant(Variant::S2);
        let c = cycles(&s2, 3);
        let g = s2.g_check(1) as u32;
        let mut ones = 0;
        let trials = 400;
        let mut rng = stream(11, 0);
        for _ in 0..trials {
            let st = encode_logical(&s1, LogicalState::Zero).unwrap();
            let (_, rec) = execute(&FaultyCircuit::noiseless(&c), st, &mut rng).unwrap();
            let first = rec.get(Tag { code: 2, stabilizer: g, cycle: 0 }).unwrap();
            for k in 1..3 {
                assert_eq!(rec.get(Tag { code: 2, stabilizer: g, cycle: k }), Some(first));
            }
            for (b, t) in rec.bits.iter().zip(&rec.tags) {
                if t.unwrap().stabilizer != g {
                    assert!(!b);
                }
            }
            ones += first as usize;
        }
        assert!((ones as f64 - 200.0).abs() < 4.0 * 10.0);
    }

    #[test]
    fn data_x_flips_adjacent_z_checks() {
        let spec = build_code(5, Variant::S1).unwrap();
        let c = cycles(&spec, 1);
        for q in 0..spec.n_data {
            let mut st = encode_logical(&spec, LogicalState::Zero).unwrap();
            st.apply_pauli(&PauliOperator::single(spec.n_qubits, q, Pauli1::X)).unwrap();
            let (_, rec) = execute(&FaultyCircuit::noiseless(&c), st, &mut stream(12, 0)).unwrap();
            let mut flipped: Vec<u32> =
                rec.bits.iter().zip(&rec.tags).filter(|(b, _)| **b).map(|(_, t)| t.unwrap().stabilizer).collect();
            flipped.sort_unstable();
            let mut expect: Vec<u32> = spec
                .active_checks()
                .filter(|(_, ch)| ch.kind == crate::surface_code::CheckKind::Z && ch.support().contains(&q))
                .map(|(k, _)| k as u32)
                .collect();
            expect.sort_unstable();
            assert_eq!(flipped, expect);
            assert!(!expect.is_empty() && expect.len() <= 2);
        }
    }

    #[test]
    fn measurement_flip_changes_one_record() {
        let spec = build_code(3, Variant::S1).unwrap();
        let c = cycles(&spec, 3);
        let meas = c.measurements();
        let (loc, tag) = meas[4];
        let f = FaultyCircuit::with_faults(&c, vec![Fault { location: loc, kind: FaultKind::MeasFlip }]).unwrap();
        let st = encode_logical(&spec, LogicalState::Zero).unwrap();
        let (_, rec) = execute(&f, st, &mut stream(13, 0)).unwrap();
        let flipped: Vec<_> = rec.tags.iter().zip(&rec.bits).filter(|(_, b)| **b).map(|(t, _)| *t).collect();
        assert_eq!(flipped, vec![tag]);
    }

    #[test]
    fn rejects_foreign_locations() {
        let c = idle_circuit(2, 1);
        let bad = Fault { location: Location { step: 3, op: 0 }, kind: FaultKind::MeasFlip };
        assert!(FaultyCircuit::with_faults(&c, vec![bad]).is_err());
        let st = StabilizerState::new(3);
        assert!(execute(&FaultyCircuit::noiseless(&c), st, &mut stream(0, 0)).is_err());
    }
}
