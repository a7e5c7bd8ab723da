//! Time-sliced circuits with explicit idles and tagged measurements.
//!
//! A [`Circuit`] is a list of [`Step`]s. Within a step every qubit is touched
//! by exactly one operation, idles included, so every operation is also a
//! potential fault location.
//!
//! Text format, one operation per line, each step opened by `TICK`:
//!
//! ```text
//! QUBITS 3
//! TICK
//! CX 0 1
//! I 2
//! TICK noiseless
//! M 0 @2:5:1
//! MX 1
//! R 2
//! ```
//!
//! `TICK noiseless` opens a step exempt from noise; operations before the
//! first `TICK` form an implicit noisy step. A measurement may carry a
//! tag `@code:stabilizer:cycle`. Opcodes: `H S SDG X Y Z CX T R RX M MX I`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stabilizer::{Basis, CliffordGate};

/// Identifies what a measurement measures: code variant, stabilizer index, cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag {
    pub code: u8,
    pub stabilizer: u32,
    pub cycle: u32,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}:{}:{}", self.code, self.stabilizer, self.cycle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Gate(CliffordGate),
    /// Non-Clifford `T`; only the dense backend can execute it.
    T(usize),
    Reset(usize, Basis),
    Measure(usize, Basis),
    Idle(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Operation {
    pub kind: OpKind,
    pub tag: Option<Tag>,
}

impl Operation {
    pub fn gate(g: CliffordGate) -> Self {
        Self { kind: OpKind::Gate(g), tag: None }
    }

    pub fn reset(q: usize, basis: Basis) -> Self {
        Self { kind: OpKind::Reset(q, basis), tag: None }
    }

    pub fn measure(q: usize, basis: Basis, tag: Option<Tag>) -> Self {
        Self { kind: OpKind::Measure(q, basis), tag }
    }

    pub fn idle(q: usize) -> Self {
        Self { kind: OpKind::Idle(q), tag: None }
    }

    pub fn t(q: usize) -> Self {
        Self { kind: OpKind::T(q), tag: None }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self.kind {
            OpKind::Gate(g) => g.qubits(),
            OpKind::T(q) | OpKind::Reset(q, _) | OpKind::Measure(q, _) | OpKind::Idle(q) => vec![q],
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self.kind, OpKind::Measure(..))
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OpKind::Gate(CliffordGate::Cnot(c, t)) => write!(f, "CX {c} {t}")?,
            OpKind::Gate(g) => write!(f, "{} {}", g.name(), g.qubits()[0])?,
            OpKind::T(q) => write!(f, "T {q}")?,
            OpKind::Reset(q, Basis::Z) => write!(f, "R {q}")?,
            OpKind::Reset(q, Basis::X) => write!(f, "RX {q}")?,
            OpKind::Measure(q, Basis::Z) => write!(f, "M {q}")?,
            OpKind::Measure(q, Basis::X) => write!(f, "MX {q}")?,
            OpKind::Idle(q) => write!(f, "I {q}")?,
        }
        if let Some(tag) = self.tag {
            write!(f, " {tag}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Step {
    pub ops: Vec<Operation>,
    pub noisy: bool,
}

impl Step {
    pub fn new(noisy: bool) -> Self {
        Self { ops: Vec::new(), noisy }
    }

    pub fn push(&mut self, op: Operation) -> &mut Self {
        self.ops.push(op);
        self
    }

    /// Adds an idle for every qubit in `0..n` not yet touched in this step.
    pub fn fill_idles(&mut self, n: usize) {
        let mut used = vec![false; n];
        for op in &self.ops {
            for q in op.qubits() {
                if q < n {
                    used[q] = true;
                }
            }
        }
        self.ops.extend((0..n).filter(|&q| !used[q]).map(Operation::idle));
    }
}

/// Position of an operation: step index and index within the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub step: usize,
    pub op: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    QubitOutOfRange { qubit: usize },
    QubitReused { qubit: usize },
    QubitUncovered { qubit: usize },
    SameQubitTwice { qubit: usize },
    DuplicateTag { tag: Tag },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub step: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: ", self.step)?;
        match &self.kind {
            ViolationKind::QubitOutOfRange { qubit } => write!(f, "qubit {qubit} out of range"),
            ViolationKind::QubitReused { qubit } => write!(f, "qubit {qubit} used by more than one operation"),
            ViolationKind::QubitUncovered { qubit } => write!(f, "qubit {qubit} not covered"),
            ViolationKind::SameQubitTwice { qubit } => write!(f, "two-qubit gate acts twice on qubit {qubit}"),
            ViolationKind::DuplicateTag { tag } => write!(f, "measurement tag {tag} repeated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Circuit {
    pub n: usize,
    pub steps: Vec<Step>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self { n, steps: Vec::new() }
    }

    pub fn push_step(&mut self, step: Step) {
        self.steps.push(step);
    }

    /// Appends all steps of `other`, which must act on the same register.
    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: other.n });
        }
        self.steps.extend(other.steps.iter().cloned());
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn num_operations(&self) -> usize {
        self.steps.iter().map(|s| s.ops.len()).sum()
    }

    pub fn op(&self, loc: Location) -> &Operation {
        &self.steps[loc.step].ops[loc.op]
    }

    /// Every operation exactly once, in step order then in-step order.
    pub fn fault_locations(&self) -> Vec<(usize, Operation)> {
        self.steps.iter().enumerate().flat_map(|(s, st)| st.ops.iter().map(move |op| (s, *op))).collect()
    }

    pub fn locations(&self) -> impl Iterator<Item = Location> + '_ {
        self.steps.iter().enumerate().flat_map(|(s, st)| (0..st.ops.len()).map(move |o| Location { step: s, op: o }))
    }

    /// Measurements in record order.
    pub fn measurements(&self) -> Vec<(Location, Option<Tag>)> {
        self.locations().filter(|&l| self.op(l).is_measurement()).map(|l| (l, self.op(l).tag)).collect()
    }

    pub fn num_measurements(&self) -> usize {
        self.steps.iter().flat_map(|s| &s.ops).filter(|o| o.is_measurement()).count()
    }

    pub fn t_count(&self) -> usize {
        self.steps.iter().flat_map(|s| &s.ops).filter(|o| matches!(o.kind, OpKind::T(_))).count()
    }

    /// Checks qubit ranges, one operation per qubit per step, full coverage
    /// and uniqueness of measurement tags. Reports the first violation.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let mut tags = std::collections::HashSet::new();
        for (s, step) in self.steps.iter().enumerate() {
            let mut used = vec![false; self.n];
            for op in &step.ops {
                let qs = op.qubits();
                if qs.len() == 2 && qs[0] == qs[1] {
                    return Err(Violation { step: s, kind: ViolationKind::SameQubitTwice { qubit: qs[0] } });
                }
                for q in qs {
                    if q >= self.n {
                        return Err(Violation { step: s, kind: ViolationKind::QubitOutOfRange { qubit: q } });
                    }
                    if std::mem::replace(&mut used[q], true) {
                        return Err(Violation { step: s, kind: ViolationKind::QubitReused { qubit: q } });
                    }
                }
                if let Some(tag) = op.tag {
                    if !tags.insert(tag) {
                        return Err(Violation { step: s, kind: ViolationKind::DuplicateTag { tag } });
                    }
                }
            }
            if let Some(q) = used.iter().position(|u| !u) {
                return Err(Violation { step: s, kind: ViolationKind::QubitUncovered { qubit: q } });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "QUBITS {}", self.n)?;
        for step in &self.steps {
            writeln!(f, "{}", if step.noisy { "TICK" } else { "TICK noiseless" })?;
            for op in &step.ops {
                writeln!(f, "{op}")?;
            }
        }
        Ok(())
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_tag(s: &str, line: usize) -> Result<Tag> {
    let body = s.strip_prefix('@').ok_or_else(|| parse_err(line, format!("bad tag {s:?}")))?;
    let parts: Vec<&str> = body.split(':').collect();
    if parts.len() != 3 {
        return Err(parse_err(line, format!("bad tag {s:?}")));
    }
    let num = |p: &str| p.parse::<u32>().map_err(|_| parse_err(line, format!("bad tag {s:?}")));
    Ok(Tag { code: num(parts[0])? as u8, stabilizer: num(parts[1])?, cycle: num(parts[2])? })
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut n = None;
        let mut steps = Vec::new();
        let mut current: Option<Step> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let op = toks[0].to_ascii_uppercase();
            if op == "QUBITS" {
                let v = toks.get(1).and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(line_no, "QUBITS needs a count"))?;
                n = Some(v);
                continue;
            }
            if op == "TICK" {
                if let Some(s) = current.take() {
                    steps.push(s);
                }
                let noisy = match toks.get(1) {
                    None => true,
                    Some(&"noiseless") => false,
                    Some(other) => return Err(parse_err(line_no, format!("unknown TICK flag {other:?}"))),
                };
                current = Some(Step::new(noisy));
                continue;
            }
            let mut args: Vec<usize> = Vec::new();
            let mut tag = None;
            for t in &toks[1..] {
                if t.starts_with('@') {
                    tag = Some(parse_tag(t, line_no)?);
                } else {
                    args.push(t.parse().map_err(|_| parse_err(line_no, format!("bad qubit {t:?}")))?);
                }
            }
            let want = if op == "CX" || op == "CNOT" { 2 } else { 1 };
            if args.len() != want {
                return Err(parse_err(line_no, format!("{op} takes {want} qubit(s)")));
            }
            let q = args[0];
            let kind = match op.as_str() {
                "H" => OpKind::Gate(CliffordGate::H(q)),
                "S" => OpKind::Gate(CliffordGate::S(q)),
                "SDG" => OpKind::Gate(CliffordGate::Sdg(q)),
                "X" => OpKind::Gate(CliffordGate::X(q)),
                "Y" => OpKind::Gate(CliffordGate::Y(q)),
                "Z" => OpKind::Gate(CliffordGate::Z(q)),
                "CX" | "CNOT" => OpKind::Gate(CliffordGate::Cnot(q, args[1])),
                "T" => OpKind::T(q),
                "R" => OpKind::Reset(q, Basis::Z),
                "RX" => OpKind::Reset(q, Basis::X),
                "M" => OpKind::Measure(q, Basis::Z),
                "MX" => OpKind::Measure(q, Basis::X),
                "I" => OpKind::Idle(q),
                other => return Err(parse_err(line_no, format!("unknown opcode {other:?}"))),
            };
            if tag.is_some() && !matches!(kind, OpKind::Measure(..)) {
                return Err(parse_err(line_no, "only measurements carry tags"));
            }
            current.get_or_insert_with(|| Step::new(true)).ops.push(Operation { kind, tag });
        }
        if let Some(s) = current {
            steps.push(s);
        }
        let n = n.ok_or_else(|| parse_err(0, "missing QUBITS line"))?;
        Ok(Circuit { n, steps })
    }
}
