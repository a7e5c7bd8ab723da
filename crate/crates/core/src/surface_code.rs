//! Surface code S1 on a (2d-1)x(2d-1) lattice and its deformation S2.
//!
//! Sites are `(r, c)` with `0 <= r, c < 2d-1`. Data qubits sit at even
//! `r + c` and are numbered row-major, so the top boundary holds data qubits
//! `0..d` and `q_loc` is qubit 0 at the north-west corner. X checks sit at
//! (even r, odd c), Z checks at (odd r, even c). `Z̄` is Z along the top row,
//! `X̄` is X along the left column.
//!
//! S2 removes the top-row X checks `F_i` at `(0, 4i-3)` and adds the weight-2
//! Z checks `G_i` on top-row qubits at columns `4i-2` and `4i`, for
//! `i = 1..=t` with `t = (d-1)/2`. Every check, including the `G_i`, owns one
//! ancilla; ancilla indices follow the data qubits in check order. The check
//! catalogue is the same for both variants so that check ids are stable across
//! a code-switching timeline.

use std::fmt::Write as _;

use crate::circuit::{Circuit, Operation, Step, Tag};
use crate::error::{Error, Result};
use crate::stabilizer::{Basis, CliffordGate, Pauli1, PauliOperator, StabilizerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    S1,
    S2,
}

impl Variant {
    pub fn code_id(self) -> u8 {
        match self {
            Variant::S1 => 1,
            Variant::S2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    X,
    Z,
}

impl CheckKind {
    pub fn pauli(self) -> Pauli1 {
        match self {
            CheckKind::X => Pauli1::X,
            CheckKind::Z => Pauli1::Z,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            CheckKind::X => Basis::X,
            CheckKind::Z => Basis::Z,
        }
    }
}

/// Special roles of checks in the switching protocol; indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Plain,
    F(usize),
    G(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub kind: CheckKind,
    pub role: Role,
    /// Lattice site; `G_i` live just above the top row at `(-1, 4i-1)`.
    pub site: (i64, i64),
    /// Data qubit touched in CNOT rounds 1..=4, if any.
    pub rounds: [Option<usize>; 4],
    pub ancilla: usize,
}

impl Check {
    pub fn support(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.rounds.iter().flatten().copied().collect();
        s.sort_unstable();
        s
    }

    pub fn weight(&self) -> usize {
        self.rounds.iter().flatten().count()
    }

    /// The check as a Pauli operator on `n` qubits (data qubits first).
    pub fn operator(&self, n: usize) -> PauliOperator {
        PauliOperator::on_qubits(n, self.rounds.iter().flatten().copied(), self.kind.pauli())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSpec {
    pub d: usize,
    pub t: usize,
    pub variant: Variant,
    pub n_data: usize,
    /// Data qubits plus one ancilla per catalogued check.
    pub n_qubits: usize,
    pub data_sites: Vec<(usize, usize)>,
    pub checks: Vec<Check>,
    /// `active[k]` iff check `k` is a stabilizer of this variant.
    pub active: Vec<bool>,
    pub q_loc: usize,
    pub logical_x: PauliOperator,
    pub logical_z: PauliOperator,
}

// Neighbour offsets for rounds 1..=4. Z checks: S E W N. X checks: S W E N.
// North comes last, so a top-row qubit is last touched in round 4 and its
// undetectable window at the end of a cycle is one step long.
const Z_ORDER: [(i64, i64); 4] = [(1, 0), (0, 1), (0, -1), (-1, 0)];
const X_ORDER: [(i64, i64); 4] = [(1, 0), (0, -1), (0, 1), (-1, 0)];

pub fn build_code(d: usize, variant: Variant) -> Result<CodeSpec> {
    if d < 3 || d.is_multiple_of(2) {
        return Err(Error::BadDistance(d));
    }
    let t = (d - 1) / 2;
    let side = 2 * d - 1;
    let mut index = vec![vec![None; side]; side];
    let mut data_sites = Vec::new();
    for r in 0..side {
        for c in 0..side {
            if (r + c) % 2 == 0 {
                index[r][c] = Some(data_sites.len());
                data_sites.push((r, c));
            }
        }
    }
    let n_data = data_sites.len();
    let at = |r: i64, c: i64| -> Option<usize> {
        if r < 0 || c < 0 || r >= side as i64 || c >= side as i64 {
            None
        } else {
            index[r as usize][c as usize]
        }
    };

    let mut checks = Vec::new();
    for kind in [CheckKind::X, CheckKind::Z] {
        for r in 0..side as i64 {
            for c in 0..side as i64 {
                let here = match kind {
                    CheckKind::X => r % 2 == 0 && c % 2 == 1,
                    CheckKind::Z => r % 2 == 1 && c % 2 == 0,
                };
                if !here {
                    continue;
                }
                let order = if kind == CheckKind::X { X_ORDER } else { Z_ORDER };
                let rounds = order.map(|(dr, dc)| at(r + dr, c + dc));
                let role = if kind == CheckKind::X && r == 0 && c % 4 == 1 { Role::F(c as usize / 4 + 1) } else { Role::Plain };
                checks.push(Check { kind, role, site: (r, c), rounds, ancilla: 0 });
            }
        }
    }
    for i in 1..=t {
        let c = 4 * i as i64;
        // (0, 4i-2) is free in R1 and (0, 4i) in R2 once F_i is removed
        let rounds = [at(0, c - 2), at(0, c), None, None];
        checks.push(Check { kind: CheckKind::Z, role: Role::G(i), site: (-1, c - 1), rounds, ancilla: 0 });
    }
    for (k, ch) in checks.iter_mut().enumerate() {
        ch.ancilla = n_data + k;
    }
    let active = checks
        .iter()
        .map(|ch| match (variant, ch.role) {
            (Variant::S1, Role::G(_)) | (Variant::S2, Role::F(_)) => false,
            _ => true,
        })
        .collect();
    let logical_z = PauliOperator::on_qubits(n_data, (0..d).map(|k| index[0][2 * k].unwrap()), Pauli1::Z);
    let logical_x = PauliOperator::on_qubits(n_data, (0..d).map(|k| index[2 * k][0].unwrap()), Pauli1::X);
    let n_qubits = n_data + checks.len();
    Ok(CodeSpec { d, t, variant, n_data, n_qubits, data_sites, checks, active, q_loc: 0, logical_x, logical_z })
}

impl CodeSpec {
    /// Same lattice, other variant.
    pub fn with_variant(&self, variant: Variant) -> CodeSpec {
        let mut out = self.clone();
        out.variant = variant;
        out.active = self
            .checks
            .iter()
            .map(|ch| !matches!((variant, ch.role), (Variant::S1, Role::G(_)) | (Variant::S2, Role::F(_))))
            .collect();
        out
    }

    pub fn active_checks(&self) -> impl Iterator<Item = (usize, &Check)> + '_ {
        self.checks.iter().enumerate().filter(|(k, _)| self.active[*k])
    }

    fn stabilizers_of(&self, kind: CheckKind) -> Vec<PauliOperator> {
        self.active_checks().filter(|(_, c)| c.kind == kind).map(|(_, c)| c.operator(self.n_data)).collect()
    }

    pub fn x_stabilizers(&self) -> Vec<PauliOperator> {
        self.stabilizers_of(CheckKind::X)
    }

    pub fn z_stabilizers(&self) -> Vec<PauliOperator> {
        self.stabilizers_of(CheckKind::Z)
    }

    /// Check id of `G_i` (1-based `i`).
    pub fn g_check(&self, i: usize) -> usize {
        self.checks.iter().position(|c| c.role == Role::G(i)).expect("G index in range")
    }

    /// Check id of `F_i` (1-based `i`).
    pub fn f_check(&self, i: usize) -> usize {
        self.checks.iter().position(|c| c.role == Role::F(i)).expect("F index in range")
    }

    pub fn g_operator(&self, i: usize) -> PauliOperator {
        self.checks[self.g_check(i)].operator(self.n_data)
    }

    pub fn f_operator(&self, i: usize) -> PauliOperator {
        self.checks[self.f_check(i)].operator(self.n_data)
    }

    /// `Z̄ · ∏ G_i`, which equals `Z` on `q_loc`.
    pub fn local_logical_z(&self) -> PauliOperator {
        (1..=self.t).fold(self.logical_z.clone(), |acc, i| acc.mul(&self.g_operator(i)))
    }

    /// Widens a data-qubit operator to the full register.
    pub fn on_register(&self, p: &PauliOperator) -> PauliOperator {
        let idx: Vec<usize> = (0..p.num_qubits()).collect();
        p.embed(self.n_qubits, &idx)
    }

    pub fn data_index(&self, r: usize, c: usize) -> Option<usize> {
        self.data_sites.iter().position(|&s| s == (r, c))
    }

    /// Group-theoretic consistency check of the variant.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let d = self.d;
        let stabs: Vec<PauliOperator> = self.x_stabilizers().into_iter().chain(self.z_stabilizers()).collect();
        for (a, p) in stabs.iter().enumerate() {
            for q in &stabs[a + 1..] {
                if !p.commutes(q) {
                    return Err(format!("{p} and {q} anticommute"));
                }
            }
            if !p.commutes(&self.logical_x) || !p.commutes(&self.logical_z) {
                return Err(format!("{p} does not commute with the logicals"));
            }
        }
        if self.logical_x.commutes(&self.logical_z) {
            return Err("logical X and Z commute".into());
        }
        if self.n_data != d * d + (d - 1) * (d - 1) {
            return Err(format!("{} data qubits", self.n_data));
        }
        let (nx, nz) = (self.x_stabilizers().len(), self.z_stabilizers().len());
        let (ex, ez) = match self.variant {
            Variant::S1 => (d * (d - 1), d * (d - 1)),
            Variant::S2 => (d * (d - 1) - self.t, d * (d - 1) + self.t),
        };
        if (nx, nz) != (ex, ez) {
            return Err(format!("{nx} X and {nz} Z stabilizers, expected {ex} and {ez}"));
        }
        for i in 1..=self.t {
            let f = &self.checks[self.f_check(i)];
            let expect = {
                let mut v = vec![2 * i - 2, 2 * i - 1, self.data_index(1, 4 * i - 3).unwrap()];
                v.sort_unstable();
                v
            };
            if f.support() != expect {
                return Err(format!("F_{i} support {:?}", f.support()));
            }
            let g = self.g_operator(i);
            if g.support() != vec![2 * i - 1, 2 * i] {
                return Err(format!("G_{i} support {:?}", g.support()));
            }
        }
        if self.variant == Variant::S2 {
            let s1 = self.with_variant(Variant::S1);
            let removed: Vec<usize> = s1
                .active_checks()
                .filter(|(_, c)| c.kind == CheckKind::X)
                .filter(|(_, c)| (1..=self.t).any(|i| !c.operator(self.n_data).commutes(&self.g_operator(i))))
                .map(|(k, _)| k)
                .collect();
            let f_ids: Vec<usize> = (1..=self.t).map(|i| self.f_check(i)).collect();
            if removed != f_ids {
                return Err(format!("removed checks {removed:?} differ from F checks {f_ids:?}"));
            }
        }
        let zl = self.local_logical_z();
        if zl != PauliOperator::single(self.n_data, self.q_loc, Pauli1::Z) {
            return Err(format!("Z̄ ∏G = {zl}"));
        }
        Ok(())
    }

    /// Human-readable listing of stabilizers and logicals.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "code {:?} d={} t={} data={} qubits={}", self.variant, self.d, self.t, self.n_data, self.n_qubits);
        for (k, c) in self.active_checks() {
            let role = match c.role {
                Role::Plain => String::new(),
                Role::F(i) => format!(" F{i}"),
                Role::G(i) => format!(" G{i}"),
            };
            let _ = writeln!(
                s,
                "check {k} {:?} site=({},{}) ancilla={}{role} {}",
                c.kind,
                c.site.0,
                c.site.1,
                c.ancilla,
                c.operator(self.n_data)
            );
        }
        let _ = writeln!(s, "logical_x {}", self.logical_x);
        let _ = writeln!(s, "logical_z {}", self.logical_z);
        s
    }
}

/// One depth-6 syndrome cycle: ancilla resets, four CNOT rounds, ancilla
/// measurements. Measurements are tagged `(variant, check id, cycle)`.
pub fn syndrome_cycle(spec: &CodeSpec, cycle: u32, noisy: bool) -> Circuit {
    let n = spec.n_qubits;
    let mut circ = Circuit::new(n);
    let mut reset = Step::new(noisy);
    for (_, c) in spec.active_checks() {
        reset.push(Operation::reset(c.ancilla, c.kind.basis()));
    }
    reset.fill_idles(n);
    circ.push_step(reset);
    for round in 0..4 {
        let mut step = Step::new(noisy);
        for (_, c) in spec.active_checks() {
            if let Some(q) = c.rounds[round] {
                let g = match c.kind {
                    CheckKind::Z => CliffordGate::Cnot(q, c.ancilla),
                    CheckKind::X => CliffordGate::Cnot(c.ancilla, q),
                };
                step.push(Operation::gate(g));
            }
        }
        step.fill_idles(n);
        circ.push_step(step);
    }
    let mut meas = Step::new(noisy);
    for (k, c) in spec.active_checks() {
        let tag = Tag { code: spec.variant.code_id(), stabilizer: k as u32, cycle };
        meas.push(Operation::measure(c.ancilla, c.kind.basis(), Some(tag)));
    }
    meas.fill_idles(n);
    circ.push_step(meas);
    circ
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LogicalState {
    Zero,
    One,
    Plus,
}

/// Noiseless encoded S1 state on the full register, ancillas in `|0>`.
pub fn encode_logical(spec: &CodeSpec, state: LogicalState) -> Result<StabilizerState> {
    if spec.variant != Variant::S1 {
        return Err(Error::Unsupported("encoding is defined for S1 only".into()));
    }
    let mut s = StabilizerState::new(spec.n_qubits);
    // |0...0> already satisfies the Z checks and Z̄; project onto the X checks with +1.
    let (project, flip) = match state {
        LogicalState::Zero | LogicalState::One => (CheckKind::X, state == LogicalState::One),
        LogicalState::Plus => {
            for q in 0..spec.n_data {
                s.apply_gate(CliffordGate::H(q))?;
            }
            (CheckKind::Z, false)
        }
    };
    for (_, c) in spec.active_checks().filter(|(_, c)| c.kind == project) {
        let out = s.measure_with(&c.operator(spec.n_qubits), || false)?;
        debug_assert!(!out.minus);
    }
    if flip {
        s.apply_pauli(&spec.on_register(&spec.logical_x))?;
    }
    Ok(s)
}

/// One syndrome cycle of a code-switching schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleSpec {
    pub variant: Variant,
    pub noisy: bool,
}

/// Sequence of syndrome cycles on one lattice, starting from an encoded S1
/// state. Cycle `k` carries tag cycle index `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    pub s1: CodeSpec,
    pub s2: CodeSpec,
    pub cycles: Vec<CycleSpec>,
}

pub const CYCLE_DEPTH: usize = 6;

impl Timeline {
    pub fn new(d: usize) -> Result<Self> {
        let s1 = build_code(d, Variant::S1)?;
        let s2 = s1.with_variant(Variant::S2);
        Ok(Self { s1, s2, cycles: Vec::new() })
    }

    pub fn push(mut self, variant: Variant, count: usize, noisy: bool) -> Self {
        self.cycles.extend(std::iter::repeat_n(CycleSpec { variant, noisy }, count));
        self
    }

    pub fn spec(&self, variant: Variant) -> &CodeSpec {
        match variant {
            Variant::S1 => &self.s1,
            Variant::S2 => &self.s2,
        }
    }

    pub fn d(&self) -> usize {
        self.s1.d
    }

    pub fn n_qubits(&self) -> usize {
        self.s1.n_qubits
    }

    pub fn circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.n_qubits());
        for (k, cy) in self.cycles.iter().enumerate() {
            let part = syndrome_cycle(self.spec(cy.variant), k as u32, cy.noisy);
            c.steps.extend(part.steps);
        }
        c
    }

    /// First step of cycle `k`.
    pub fn cycle_start(&self, k: usize) -> usize {
        k * CYCLE_DEPTH
    }
}
