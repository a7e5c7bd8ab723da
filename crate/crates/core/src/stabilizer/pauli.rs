//! n-qubit Pauli operators over GF(2).
//!
//! A [`PauliOperator`] is stored as `i^phase * X^x * Z^z` with the X and Z
//! bit vectors packed into machine words. With this convention `Y = iXZ`,
//! so a Pauli string written with a `Y` at some position carries one extra
//! power of `i` internally. Strings render in the usual Hermitian notation.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Single-qubit Pauli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli1 {
    I,
    X,
    Y,
    Z,
}

impl Pauli1 {
    pub const NON_IDENTITY: [Pauli1; 3] = [Pauli1::X, Pauli1::Y, Pauli1::Z];

    #[inline]
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli1::I => (false, false),
            Pauli1::X => (true, false),
            Pauli1::Y => (true, true),
            Pauli1::Z => (false, true),
        }
    }

    #[inline]
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli1::I,
            (true, false) => Pauli1::X,
            (true, true) => Pauli1::Y,
            (false, true) => Pauli1::Z,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli1::I => 'I',
            Pauli1::X => 'X',
            Pauli1::Y => 'Y',
            Pauli1::Z => 'Z',
        }
    }
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    /// Exponent of `i` in the `X^x Z^z` product form, mod 4.
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        Self { n, x: vec![0; w], z: vec![0; w], phase: 0 }
    }

    /// A single-qubit Pauli embedded in `n` qubits.
    pub fn single(n: usize, q: usize, p: Pauli1) -> Self {
        let mut op = Self::identity(n);
        op.set(q, p);
        op
    }

    /// Product of `p` over every listed qubit.
    pub fn on_qubits(n: usize, qubits: impl IntoIterator<Item = usize>, p: Pauli1) -> Self {
        let mut op = Self::identity(n);
        for q in qubits {
            op.set(q, p);
        }
        op
    }

    pub fn from_sparse(n: usize, terms: &[(usize, Pauli1)]) -> Self {
        let mut op = Self::identity(n);
        for &(q, p) in terms {
            op.set(q, p);
        }
        op
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    #[inline]
    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / 64] >> (q % 64) & 1 == 1
    }

    #[inline]
    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn get(&self, q: usize) -> Pauli1 {
        Pauli1::from_bits(self.x_bit(q), self.z_bit(q))
    }

    /// Overwrites qubit `q` with the Hermitian Pauli `p`, keeping the overall
    /// Hermitian-form coefficient unchanged.
    pub fn set(&mut self, q: usize, p: Pauli1) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let was_y = self.x_bit(q) && self.z_bit(q);
        let (x, z) = p.bits();
        let (w, b) = (q / 64, 1u64 << (q % 64));
        self.x[w] = (self.x[w] & !b) | if x { b } else { 0 };
        self.z[w] = (self.z[w] & !b) | if z { b } else { 0 };
        let now_y = x && z;
        self.phase = (self.phase + now_y as u8 + 4 - was_y as u8) % 4;
    }

    fn y_count(&self) -> u32 {
        self.x.iter().zip(&self.z).map(|(a, b)| (a & b).count_ones()).sum()
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Support as a sorted list of qubit indices.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    /// Exponent `k` such that `self = i^k * (Hermitian Pauli string)`.
    pub fn hermitian_phase(&self) -> u8 {
        ((self.phase as u32 + 4 * self.n as u32 - self.y_count()) % 4) as u8
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_phase().is_multiple_of(2)
    }

    /// `true` when the operator is `-1` times a Hermitian Pauli string.
    pub fn is_negative(&self) -> bool {
        self.hermitian_phase() == 2
    }

    /// Sign bit for a Hermitian operator; errors on `±i`.
    pub fn sign_bit(&self) -> Result<bool> {
        match self.hermitian_phase() {
            0 => Ok(false),
            2 => Ok(true),
            _ => Err(Error::ImaginaryPhase),
        }
    }

    /// Exponent of `i` in the `X^x Z^z` product form.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    /// Multiplies the operator by `i^k`.
    pub fn mul_phase(&mut self, k: u8) {
        self.phase = (self.phase + k) % 4;
    }

    pub fn negate(&mut self) {
        self.mul_phase(2);
    }

    pub fn negated(mut self) -> Self {
        self.negate();
        self
    }

    /// Drops the phase, leaving the bare `+` Hermitian string.
    pub fn unsigned(&self) -> Self {
        let mut out = self.clone();
        out.phase = (out.y_count() % 4) as u8;
        out
    }

    pub fn commutes(&self, other: &Self) -> bool {
        assert_eq!(self.n, other.n);
        let mut parity = 0u32;
        for i in 0..self.x.len() {
            parity ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones();
        }
        parity.is_multiple_of(2)
    }

    /// In-place right multiplication `self <- self * rhs` with exact phase.
    pub fn mul_assign_right(&mut self, rhs: &Self) {
        assert_eq!(self.n, rhs.n);
        // Z^z1 X^x2 = (-1)^{z1.x2} X^x2 Z^z1
        let mut swaps = 0u32;
        for i in 0..self.x.len() {
            swaps += (self.z[i] & rhs.x[i]).count_ones();
            self.x[i] ^= rhs.x[i];
            self.z[i] ^= rhs.z[i];
        }
        self.phase = ((self.phase as u32 + rhs.phase as u32 + 2 * swaps) % 4) as u8;
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        out.mul_assign_right(rhs);
        out
    }

    /// Restriction to a subset of qubits, re-indexed in the given order.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let mut out = Self::identity(qubits.len());
        for (i, &q) in qubits.iter().enumerate() {
            out.set(i, self.get(q));
        }
        out
    }

    /// Embeds into a larger register, qubit `i` going to `qubits[i]`.
    pub fn embed(&self, n: usize, qubits: &[usize]) -> Self {
        assert_eq!(qubits.len(), self.n);
        let mut out = Self::identity(n);
        for (i, &q) in qubits.iter().enumerate() {
            out.set(q, self.get(i));
        }
        out.phase = (out.phase + self.hermitian_phase()) % 4;
        out
    }

    /// Pauli string without sign, e.g. `XIZY`.
    pub fn bare_string(&self) -> String {
        (0..self.n).map(|q| self.get(q).symbol()).collect()
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.hermitian_phase() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.bare_string())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = Error;

    /// Parses `[+|-][i]P...` with `P` in `IXYZ` (also `_` for identity).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (neg, rest) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        let (imag, body) = match rest.strip_prefix('i') {
            Some(b) => (true, b),
            None => (false, rest),
        };
        let n = body.chars().count();
        let mut op = Self::identity(n);
        for (q, c) in body.chars().enumerate() {
            let p = match c {
                'I' | '_' => Pauli1::I,
                'X' => Pauli1::X,
                'Y' => Pauli1::Y,
                'Z' => Pauli1::Z,
                other => {
                    return Err(Error::Parse { line: 0, msg: format!("bad Pauli symbol `{other}`") })
                }
            };
            op.set(q, p);
        }
        if neg {
            op.mul_phase(2);
        }
        if imag {
            op.mul_phase(1);
        }
        Ok(op)
    }
}
