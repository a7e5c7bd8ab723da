//! Dense state-vector simulator, the exact reference for small circuits.
//!
//! Qubit `q` is bit `q` of the amplitude index. Unlike the tableau it runs
//! `T` gates, and [`outcome_distribution`] enumerates every measurement
//! branch exactly instead of sampling.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::circuit::{Circuit, OpKind};
use crate::error::{invalid, Error, Result};
use crate::stabilizer::{Basis, CliffordGate, Pauli1, PauliOperator};

/// Largest register the dense backend accepts.
pub const MAX_QUBITS: usize = 16;

const PRUNE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(invalid("n", format!("dense backend holds at most {MAX_QUBITS} qubits, got {n}")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(invalid("amps", "length must be a power of two"));
        }
        let n = amps.len().trailing_zeros() as usize;
        Ok(Self { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::QubitOutOfRange { index: q, n: self.n });
        }
        Ok(())
    }

    /// Applies a 2x2 matrix `[[a, b], [c, d]]` to qubit `q`.
    pub fn apply_1q(&mut self, q: usize, m: [[C64; 2]; 2]) -> Result<()> {
        self.check(q)?;
        let bit = 1 << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, g: CliffordGate) -> Result<()> {
        g.validate(self.n)?;
        let o = C64::new(0.0, 0.0);
        let l = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match g {
            CliffordGate::H(q) => self.apply_1q(q, [[h, h], [h, -h]]),
            CliffordGate::S(q) => self.apply_1q(q, [[l, o], [o, i]]),
            CliffordGate::Sdg(q) => self.apply_1q(q, [[l, o], [o, -i]]),
            CliffordGate::X(q) => self.apply_1q(q, [[o, l], [l, o]]),
            CliffordGate::Y(q) => self.apply_1q(q, [[o, -i], [i, o]]),
            CliffordGate::Z(q) => self.apply_1q(q, [[l, o], [o, -l]]),
            CliffordGate::Cnot(c, t) => {
                let (cb, tb) = (1 << c, 1 << t);
                for k in 0..self.amps.len() {
                    if k & cb != 0 && k & tb == 0 {
                        self.amps.swap(k, k | tb);
                    }
                }
                Ok(())
            }
        }
    }

    /// `T = diag(1, e^{iπ/4})`, or its inverse.
    pub fn apply_t(&mut self, q: usize, dagger: bool) -> Result<()> {
        let s = if dagger { -1.0 } else { 1.0 };
        let w = C64::from_polar(1.0, s * std::f64::consts::FRAC_PI_4);
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        self.apply_1q(q, [[l, o], [o, w]])
    }

    pub fn apply_pauli1(&mut self, q: usize, p: Pauli1) -> Result<()> {
        match p {
            Pauli1::I => self.check(q),
            Pauli1::X => self.apply_gate(CliffordGate::X(q)),
            Pauli1::Y => self.apply_gate(CliffordGate::Y(q)),
            Pauli1::Z => self.apply_gate(CliffordGate::Z(q)),
        }
    }

    /// Applies `i^phase X^x Z^z` including its phase.
    pub fn apply_pauli(&mut self, p: &PauliOperator) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: p.num_qubits() });
        }
        let (mut xm, mut zm) = (0usize, 0usize);
        for q in 0..self.n {
            xm |= (p.x_bit(q) as usize) << q;
            zm |= (p.z_bit(q) as usize) << q;
        }
        let ph = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][p.phase() as usize];
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (k, a) in self.amps.iter().enumerate() {
            let sign = if (k & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            out[k ^ xm] = ph * a * sign;
        }
        self.amps = out;
        Ok(())
    }

    /// `<ψ|P|ψ>`; real for Hermitian `P`.
    pub fn expectation(&self, p: &PauliOperator) -> Result<f64> {
        let mut w = self.clone();
        w.apply_pauli(p)?;
        let v: C64 = self.amps.iter().zip(&w.amps).map(|(a, b)| a.conj() * b).sum();
        Ok(v.re)
    }

    /// Probability of outcome `1` (eigenvalue `-1`) when measuring `q`.
    pub fn prob_one(&self, q: usize, basis: Basis) -> Result<f64> {
        self.check(q)?;
        let mut w = self.clone();
        if basis == Basis::X {
            w.apply_gate(CliffordGate::H(q))?;
        }
        let bit = 1 << q;
        Ok(w.amps.iter().enumerate().filter(|(k, _)| k & bit != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Projects `q` onto `outcome` and renormalizes. Returns the probability.
    pub fn project(&mut self, q: usize, basis: Basis, outcome: bool) -> Result<f64> {
        self.check(q)?;
        if basis == Basis::X {
            self.apply_gate(CliffordGate::H(q))?;
        }
        let bit = 1 << q;
        let mut p = 0.0;
        for (k, a) in self.amps.iter_mut().enumerate() {
            if (k & bit != 0) != outcome {
                *a = C64::new(0.0, 0.0);
            } else {
                p += a.norm_sqr();
            }
        }
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            self.amps.iter_mut().for_each(|a| *a *= s);
        }
        if basis == Basis::X {
            self.apply_gate(CliffordGate::H(q))?;
        }
        Ok(p)
    }

    /// Samples a measurement of `q`; returns `true` for outcome 1.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<bool> {
        let p1 = self.prob_one(q, basis)?;
        let out = rng.random::<f64>() < p1;
        self.project(q, basis, out)?;
        Ok(out)
    }

    /// Sets `q` to `|0>` (Z basis) or `|+>` (X basis), given that it was
    /// projected onto `outcome` just before.
    fn flip_back(&mut self, q: usize, basis: Basis, outcome: bool) -> Result<()> {
        if outcome {
            self.apply_gate(match basis {
                Basis::Z => CliffordGate::X(q),
                Basis::X => CliffordGate::Z(q),
            })?;
        }
        Ok(())
    }

    /// Runs a circuit without measurements or resets.
    pub fn run_unitary(&mut self, circuit: &Circuit) -> Result<()> {
        for step in &circuit.steps {
            for op in &step.ops {
                match op.kind {
                    OpKind::Gate(g) => self.apply_gate(g)?,
                    OpKind::T(q) => self.apply_t(q, false)?,
                    OpKind::Idle(q) => self.check(q)?,
                    OpKind::Reset(..) | OpKind::Measure(..) => {
                        return Err(Error::Unsupported("measurement in a unitary run".into()))
                    }
                }
            }
        }
        Ok(())
    }
}

/// Exact distribution of the measurement record of `circuit` started from
/// `|0...0>`. Keys list outcomes in record order.
pub fn outcome_distribution(circuit: &Circuit) -> Result<BTreeMap<Vec<bool>, f64>> {
    let ops: Vec<OpKind> = circuit.steps.iter().flat_map(|s| s.ops.iter().map(|o| o.kind)).collect();
    let mut out = BTreeMap::new();
    let mut stack = vec![(0usize, StateVector::zero(circuit.n)?, 1.0f64, Vec::new())];
    'branch: while let Some((mut i, mut st, p, mut rec)) = stack.pop() {
        while i < ops.len() {
            match ops[i] {
                OpKind::Gate(g) => st.apply_gate(g)?,
                OpKind::T(q) => st.apply_t(q, false)?,
                OpKind::Idle(_) => {}
                OpKind::Measure(q, b) | OpKind::Reset(q, b) => {
                    let record = matches!(ops[i], OpKind::Measure(..));
                    let p1 = st.prob_one(q, b)?;
                    let outcomes: &[(bool, f64)] = if p1 <= PRUNE {
                        &[(false, 1.0)]
                    } else if 1.0 - p1 <= PRUNE {
                        &[(true, 1.0)]
                    } else {
                        &[(false, 1.0 - p1), (true, p1)]
                    };
                    for &(v, pv) in outcomes {
                        let mut s2 = st.clone();
                        s2.project(q, b, v)?;
                        let mut r2 = rec.clone();
                        if record {
                            r2.push(v);
                        } else {
                            s2.flip_back(q, b, v)?;
                        }
                        stack.push((i + 1, s2, p * pv, r2));
                    }
                    continue 'branch;
                }
            }
            i += 1;
        }
        *out.entry(std::mem::take(&mut rec)).or_insert(0.0) += p;
    }
    Ok(out)
}
