//! Pauli-frame simulation of noisy Clifford circuits.
//!
//! A noiseless reference run on the tableau fixes one outcome per
//! measurement. Each noisy shot then only tracks the Pauli frame separating
//! it from the reference: gates conjugate the frame, faults multiply into it,
//! and a measurement reports the reference bit XOR the frame's anticommuting
//! component. Resets and measurements re-randomize the frame component that
//! stabilizes the new state, and the shot starts from a random element of the
//! initial stabilizer group, which reproduces the statistics of random
//! outcomes exactly.

use rand::Rng;

use crate::circuit::{Circuit, Location, OpKind};
use crate::error::{Error, Result};
use crate::noise::{Fault, FaultKind};
use crate::rng::CoinFlips;
use crate::stabilizer::{Basis, CliffordGate, Pauli1, PauliOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Instr {
    Cx(u32, u32),
    H(u32),
    S(u32),
    ResetZ(u32),
    ResetX(u32),
    MeasZ(u32, u32),
    MeasX(u32, u32),
}

/// A circuit flattened for frame propagation.
#[derive(Debug, Clone)]
pub struct Program {
    n: usize,
    instrs: Vec<Instr>,
    /// `instrs[step_start[s]..step_start[s + 1]]` belong to step `s`.
    step_start: Vec<usize>,
    /// Sorted `(location, record index)` of every measurement.
    records: Vec<(Location, u32)>,
    /// Basis of the op at reset locations, looked up for reset flips.
    resets: Vec<(Location, u32, Basis)>,
}

impl Program {
    pub fn compile(circuit: &Circuit) -> Result<Self> {
        let mut instrs = Vec::new();
        let mut step_start = vec![0];
        let mut records = Vec::new();
        let mut resets = Vec::new();
        for loc in circuit.locations() {
            while step_start.len() <= loc.step {
                step_start.push(instrs.len());
            }
            let i = match circuit.op(loc).kind {
                OpKind::Gate(CliffordGate::Cnot(c, t)) => Some(Instr::Cx(c as u32, t as u32)),
                OpKind::Gate(CliffordGate::H(q)) => Some(Instr::H(q as u32)),
                OpKind::Gate(CliffordGate::S(q) | CliffordGate::Sdg(q)) => Some(Instr::S(q as u32)),
                OpKind::Gate(_) | OpKind::Idle(_) => None,
                OpKind::T(_) => return Err(Error::Unsupported("T gate in a frame simulation".into())),
                OpKind::Reset(q, b) => {
                    resets.push((loc, q as u32, b));
                    Some(if b == Basis::Z { Instr::ResetZ(q as u32) } else { Instr::ResetX(q as u32) })
                }
                OpKind::Measure(q, b) => {
                    let r = records.len() as u32;
                    records.push((loc, r));
                    Some(if b == Basis::Z { Instr::MeasZ(q as u32, r) } else { Instr::MeasX(q as u32, r) })
                }
            };
            instrs.extend(i);
        }
        while step_start.len() <= circuit.steps.len() {
            step_start.push(instrs.len());
        }
        Ok(Self { n: circuit.n, instrs, step_start, records, resets })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn num_steps(&self) -> usize {
        self.step_start.len() - 1
    }

    pub fn num_records(&self) -> usize {
        self.records.len()
    }

    pub fn record_at(&self, loc: Location) -> Option<usize> {
        self.records.binary_search_by_key(&loc, |r| r.0).ok().map(|i| self.records[i].1 as usize)
    }

    fn reset_at(&self, loc: Location) -> Option<(u32, Basis)> {
        self.resets.binary_search_by_key(&loc, |r| r.0).ok().map(|i| (self.resets[i].1, self.resets[i].2))
    }
}

/// Frame state of one shot: X and Z components per qubit and the record of
/// measurement flips relative to the reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    pub flips: Vec<bool>,
}

impl Frame {
    pub fn new(program: &Program) -> Self {
        Self { x: vec![false; program.n], z: vec![false; program.n], flips: vec![false; program.records.len()] }
    }

    /// Multiplies a Pauli into the frame (phase ignored).
    pub fn apply_pauli(&mut self, p: &PauliOperator) {
        for q in p.support() {
            self.x[q] ^= p.x_bit(q);
            self.z[q] ^= p.z_bit(q);
        }
    }

    pub fn apply_single(&mut self, q: usize, p: Pauli1) {
        let (x, z) = p.bits();
        self.x[q] ^= x;
        self.z[q] ^= z;
    }

    /// The frame restricted to qubits `0..n` as an unsigned Pauli.
    pub fn pauli(&self, n: usize) -> PauliOperator {
        let mut p = PauliOperator::identity(n);
        for q in 0..n {
            p.set(q, Pauli1::from_bits(self.x[q], self.z[q]));
        }
        p
    }
}

/// Where gauge randomness comes from. `None` runs the bare linear
/// propagation used to build error models.
pub enum Gauge<'r, R: Rng + ?Sized> {
    None,
    Random(&'r mut R, CoinFlips),
}

impl<'r, R: Rng + ?Sized> Gauge<'r, R> {
    pub fn random(rng: &'r mut R) -> Self {
        Gauge::Random(rng, CoinFlips::new())
    }

    #[inline]
    fn coin(&mut self) -> bool {
        match self {
            Gauge::None => false,
            Gauge::Random(rng, coins) => coins.flip(*rng),
        }
    }
}

impl Program {
    /// Propagates `frame` through steps `steps`, inserting `faults` (sorted by
    /// location; faults outside the range are ignored).
    pub fn run<R: Rng + ?Sized>(
        &self,
        frame: &mut Frame,
        steps: std::ops::Range<usize>,
        faults: &[Fault],
        gauge: &mut Gauge<'_, R>,
    ) {
        let mut fi = faults.partition_point(|f| f.location.step < steps.start);
        for s in steps {
            for &ins in &self.instrs[self.step_start[s]..self.step_start[s + 1]] {
                match ins {
                    Instr::Cx(c, t) => {
                        let (c, t) = (c as usize, t as usize);
                        frame.x[t] ^= frame.x[c];
                        frame.z[c] ^= frame.z[t];
                    }
                    Instr::H(q) => {
                        let q = q as usize;
                        std::mem::swap(&mut frame.x[q], &mut frame.z[q]);
                    }
                    Instr::S(q) => {
                        let q = q as usize;
                        frame.z[q] ^= frame.x[q];
                    }
                    Instr::ResetZ(q) => {
                        frame.x[q as usize] = false;
                        frame.z[q as usize] = gauge.coin();
                    }
                    Instr::ResetX(q) => {
                        frame.z[q as usize] = false;
                        frame.x[q as usize] = gauge.coin();
                    }
                    Instr::MeasZ(q, r) => {
                        frame.flips[r as usize] = frame.x[q as usize];
                        frame.z[q as usize] ^= gauge.coin();
                    }
                    Instr::MeasX(q, r) => {
                        frame.flips[r as usize] = frame.z[q as usize];
                        frame.x[q as usize] ^= gauge.coin();
                    }
                }
            }
            while fi < faults.len() && faults[fi].location.step == s {
                self.apply_fault(frame, &faults[fi]);
                fi += 1;
            }
        }
    }

    fn apply_fault(&self, frame: &mut Frame, f: &Fault) {
        match f.kind {
            FaultKind::Pauli1(q, p) => frame.apply_single(q, p),
            FaultKind::Pauli2(a, pa, b, pb) => {
                frame.apply_single(a, pa);
                frame.apply_single(b, pb);
            }
            FaultKind::MeasFlip => {
                if let Some(r) = self.record_at(f.location) {
                    frame.flips[r] ^= true;
                }
            }
            FaultKind::ResetFlip => {
                if let Some((q, b)) = self.reset_at(f.location) {
                    match b {
                        Basis::Z => frame.x[q as usize] ^= true,
                        Basis::X => frame.z[q as usize] ^= true,
                    }
                }
            }
        }
    }

    pub fn run_all<R: Rng + ?Sized>(&self, frame: &mut Frame, faults: &[Fault], gauge: &mut Gauge<'_, R>) {
        self.run(frame, 0..self.num_steps(), faults, gauge);
    }
}
