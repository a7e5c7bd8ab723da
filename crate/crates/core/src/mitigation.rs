//! Exact single- and few-qubit channel algebra for the magic-state T gadget,
//! twirling of the magic state, the noisy T channel and its quasi-probability
//! decomposition, plus the Monte Carlo QPD estimator.
//!
//! Channels are stored as Kraus lists. Superoperators act on column-stacked
//! density matrices: `vec(KρK†) = (conj(K) ⊗ K) vec(ρ)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{Circuit, OpKind};
use crate::dense::StateVector;
use crate::error::{invalid, Error, Result};
use crate::rng::stream;
use crate::stabilizer::{CliffordGate, PauliOperator};

pub type CMatrix = DMatrix<C64>;

/// Largest register for density matrices.
pub const MAX_QUBITS: usize = 10;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn m2(a: C64, b: C64, cc: C64, d: C64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
}

pub mod gates {
    //! Single-qubit matrices.
    use super::*;

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }
    pub fn x() -> CMatrix {
        m2(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
    }
    pub fn z() -> CMatrix {
        m2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
    }
    pub fn s() -> CMatrix {
        m2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0))
    }
    pub fn t() -> CMatrix {
        m2(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, std::f64::consts::FRAC_PI_4))
    }
    pub fn h() -> CMatrix {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        m2(c(r, 0.0), c(r, 0.0), c(r, 0.0), c(-r, 0.0))
    }
    /// `A = e^{-iπ/4} S X`, which fixes `|π/4⟩` and maps `|ω⟩` to `-|ω⟩`.
    pub fn a() -> CMatrix {
        (s() * x()) * C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4)
    }
    /// `exp(-iθZ/2)`.
    pub fn rz(theta: f64) -> CMatrix {
        m2(C64::from_polar(1.0, -theta / 2.0), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, theta / 2.0))
    }
}

/// `|π/4⟩ = (|0⟩ + e^{iπ/4}|1⟩)/√2`.
pub fn magic_ket() -> [C64; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [c(r, 0.0), C64::from_polar(r, std::f64::consts::FRAC_PI_4)]
}

/// `|ω⟩ = Z|π/4⟩`.
pub fn omega_ket() -> [C64; 2] {
    let [a, b] = magic_ket();
    [a, -b]
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    m: CMatrix,
}

impl DensityMatrix {
    /// Checks the density-matrix invariants.
    pub fn new(m: CMatrix) -> Result<Self> {
        let dim = m.nrows();
        if dim != m.ncols() || !dim.is_power_of_two() {
            return Err(invalid("rho", "must be square with power-of-two dimension"));
        }
        let n = dim.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(invalid("rho", format!("at most {MAX_QUBITS} qubits")));
        }
        let r = Self { n, m };
        r.validate()?;
        Ok(r)
    }

    pub fn from_ket(ket: &[C64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(ket);
        Self::new(&v * v.adjoint())
    }

    pub fn magic() -> Self {
        Self::from_ket(&magic_ket()).expect("valid state")
    }

    pub fn omega() -> Self {
        Self::from_ket(&omega_ket()).expect("valid state")
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn validate(&self) -> Result<()> {
        let herm = (&self.m - self.m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(invalid("rho", format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if (tr - c(1.0, 0.0)).norm() > 1e-10 {
            return Err(invalid("rho", format!("trace {tr} differs from 1")));
        }
        let min = self.m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(invalid("rho", format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn overlap(&self, ket: &[C64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(ket);
        (v.adjoint() * &self.m * &v)[(0, 0)].re
    }

    /// `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        trace_norm_hermitian(&(&self.m - &other.m)) / 2.0
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (&self.m * op).trace()
    }
}

fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    m.clone().symmetric_eigenvalues().iter().map(|l| l.abs()).sum()
}

/// Logical error rate of a magic state, `1 − ⟨π/4|ρ|π/4⟩`.
pub fn magic_error(rho: &DensityMatrix) -> f64 {
    1.0 - rho.overlap(&magic_ket())
}

/// `τ = ½(ρ + AρA†)`.
pub fn twirl_state(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.n != 1 {
        return Err(invalid("rho", "twirling acts on one qubit"));
    }
    let a = gates::a();
    let m = (&rho.m + &a * &rho.m * a.adjoint()) * c(0.5, 0.0);
    DensityMatrix::new(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: String,
    pub kraus: Vec<CMatrix>,
}

impl Channel {
    pub fn new(label: impl Into<String>, kraus: Vec<CMatrix>) -> Self {
        Self { label: label.into(), kraus }
    }

    pub fn unitary(label: impl Into<String>, u: CMatrix) -> Self {
        Self::new(label, vec![u])
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn apply_matrix(&self, rho: &CMatrix) -> CMatrix {
        let d = self.kraus[0].nrows();
        self.kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new(self.apply_matrix(&rho.m))
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Channel) -> Channel {
        let kraus = next.kraus.iter().flat_map(|b| self.kraus.iter().map(move |a| b * a)).collect();
        Channel::new(format!("{}∘{}", next.label, self.label), kraus)
    }

    /// Mixture `Σ p_i E_i` with `p_i ≥ 0`.
    pub fn mixture(label: impl Into<String>, parts: &[(f64, &Channel)]) -> Channel {
        let kraus = parts
            .iter()
            .filter(|(p, _)| *p > 0.0)
            .flat_map(|(p, ch)| ch.kraus.iter().map(move |k| k * c(p.sqrt(), 0.0)))
            .collect();
        Channel::new(label, kraus)
    }

    pub fn superoperator(&self) -> CMatrix {
        let d = self.dim();
        self.kraus.iter().fold(CMatrix::zeros(d * d, d * d), |acc, k| acc + kron(&k.conjugate(), k))
    }

    /// `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim();
        let mut out = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let mut e = CMatrix::zeros(d, d);
                e[(i, j)] = c(1.0, 0.0);
                let img = self.apply_matrix(&e);
                out.view_mut((i * d, j * d), (d, d)).copy_from(&img);
            }
        }
        out
    }

    /// Complete positivity (Choi spectrum) and trace preservation.
    pub fn is_cptp(&self, tol: f64) -> bool {
        let d = self.dim();
        let choi = self.choi();
        let min = choi.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        let tp = self.kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k) - CMatrix::identity(d, d);
        min >= -tol && tp.iter().all(|z| z.norm() <= tol)
    }
}

/// Largest entry-wise difference of two superoperators.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn t_channel() -> Channel {
    Channel::unitary("T", gates::t())
}

pub fn z_channel() -> Channel {
    Channel::unitary("Z", gates::z())
}

/// `𝒩_ε̄ = (1−ε̄)ℐ + ε̄𝒵`.
pub fn dephasing(eps_bar: f64) -> Result<Channel> {
    if !(0.0..=1.0).contains(&eps_bar) {
        return Err(invalid("eps_bar", format!("must lie in [0, 1], got {eps_bar}")));
    }
    Ok(Channel::mixture(
        format!("N({eps_bar})"),
        &[(1.0 - eps_bar, &Channel::unitary("I", gates::identity())), (eps_bar, &z_channel())],
    ))
}

/// `𝒯_ε̄ = 𝒩_ε̄ ∘ 𝒯`.
pub fn noisy_t_channel(eps_bar: f64) -> Result<Channel> {
    let mut ch = t_channel().then(&dephasing(eps_bar)?);
    ch.label = format!("T_{eps_bar}");
    Ok(ch)
}

/// Twirl of a noisy T channel: `½(𝒯_n + 𝒜∘𝒯_n∘𝒳)`, i.e. apply X, then the
/// noisy gate, then A, in half of the runs.
pub fn twirl_channel(tn: &Channel) -> Channel {
    let x = Channel::unitary("X", gates::x());
    let a = Channel::unitary("A", gates::a());
    let conj = x.then(tn).then(&a);
    Channel::mixture(format!("twirl({})", tn.label), &[(0.5, tn), (0.5, &conj)])
}

/// Unnormalized post-measurement state of the magic wire for outcome `k` of
/// the gadget: CNOT from the magic wire onto `psi`, then measure `psi` in Z.
/// Linear in `psi`, which need not be a state.
fn gadget_branch(psi: &CMatrix, magic: &CMatrix, k: usize) -> CMatrix {
    // tensor order: magic ⊗ psi, magic is the high bit
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    #[rustfmt::skip]
    let cnot = CMatrix::from_row_slice(4, 4, &[
        l, o, o, o,
        o, l, o, o,
        o, o, o, l,
        o, o, l, o,
    ]);
    let joint = &cnot * kron(magic, psi) * cnot.adjoint();
    let mut bra = CMatrix::zeros(1, 2);
    bra[(0, k)] = l;
    let proj = kron(&CMatrix::identity(2, 2), &bra);
    &proj * joint * proj.adjoint()
}

/// Applies the outcome-1 correction `S·X`.
fn gadget_fix(m: CMatrix) -> CMatrix {
    let fix = gates::s() * gates::x();
    &fix * m * fix.adjoint()
}

fn gadget_matrix(psi: &CMatrix, magic: &CMatrix) -> CMatrix {
    gadget_branch(psi, magic, 0) + gadget_fix(gadget_branch(psi, magic, 1))
}

/// Output state of the T gadget for input `psi` and magic state `magic`,
/// averaged over the measurement outcome.
pub fn t_gadget(psi: &DensityMatrix, magic: &DensityMatrix) -> Result<DensityMatrix> {
    if psi.n != 1 || magic.n != 1 {
        return Err(invalid("gadget", "inputs must be single-qubit states"));
    }
    DensityMatrix::new(gadget_matrix(&psi.m, &magic.m))
}

/// One run of the gadget with a sampled measurement outcome.
pub fn t_gadget_sample<R: Rng + ?Sized>(psi: &DensityMatrix, magic: &DensityMatrix, rng: &mut R) -> Result<(bool, DensityMatrix)> {
    if psi.n != 1 || magic.n != 1 {
        return Err(invalid("gadget", "inputs must be single-qubit states"));
    }
    let r0 = gadget_branch(&psi.m, &magic.m, 0);
    let p0 = r0.trace().re;
    let one = rng.random::<f64>() >= p0;
    let (m, p) = if one { (gadget_fix(gadget_branch(&psi.m, &magic.m, 1)), 1.0 - p0) } else { (r0, p0) };
    Ok((one, DensityMatrix::new(m / c(p, 0.0))?))
}

/// Superoperator of the gadget as a map on the `psi` input.
pub fn gadget_superoperator(magic: &DensityMatrix) -> CMatrix {
    let mut s = CMatrix::zeros(4, 4);
    for j in 0..2 {
        for i in 0..2 {
            let mut e = CMatrix::zeros(2, 2);
            e[(i, j)] = c(1.0, 0.0);
            let img = gadget_matrix(&e, &magic.m);
            // column-stacked: vec index = row + 2 * col
            for cc in 0..2 {
                for r in 0..2 {
                    s[(r + 2 * cc, i + 2 * j)] = img[(r, cc)];
                }
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpdTerm {
    pub coefficient: f64,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiProbDecomposition {
    pub terms: Vec<QpdTerm>,
    pub gamma: f64,
}

impl QuasiProbDecomposition {
    pub fn superoperator(&self) -> CMatrix {
        let d = self.terms[0].channel.dim();
        self.terms
            .iter()
            .fold(CMatrix::zeros(d * d, d * d), |acc, t| acc + t.channel.superoperator() * c(t.coefficient, 0.0))
    }

    /// Draws term `i` with probability `|a_i|/γ`; returns its index and sign.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let mut u = rng.random::<f64>() * self.gamma;
        for (i, t) in self.terms.iter().enumerate() {
            u -= t.coefficient.abs();
            if u < 0.0 {
                return (i, t.coefficient.signum());
            }
        }
        let last = self.terms.len() - 1;
        (last, self.terms[last].coefficient.signum())
    }
}

/// `(a₁, a₂, γ)` of `𝒯 = a₁𝒯_ε̄ + a₂𝒵∘𝒯_ε̄`.
pub fn qpd_coefficients(eps_bar: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..0.5).contains(&eps_bar) {
        return Err(invalid("eps_bar", format!("must lie in [0, 1/2), got {eps_bar}")));
    }
    let den = 1.0 - 2.0 * eps_bar;
    Ok(((1.0 - eps_bar) / den, -eps_bar / den, 1.0 / den))
}

pub fn qpd_for_t(eps_bar: f64) -> Result<QuasiProbDecomposition> {
    let (a1, a2, gamma) = qpd_coefficients(eps_bar)?;
    let noisy = noisy_t_channel(eps_bar)?;
    let flipped = noisy.then(&z_channel());
    Ok(QuasiProbDecomposition {
        terms: vec![QpdTerm { coefficient: a1, channel: noisy }, QpdTerm { coefficient: a2, channel: flipped }],
        gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpdEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub shots: u64,
    pub gamma_total: f64,
}

/// Exact `⟨0|U† O U|0⟩` for a Clifford+T circuit.
pub fn ideal_expectation(circuit: &Circuit, observable: &PauliOperator) -> Result<f64> {
    let mut s = StateVector::zero(circuit.n)?;
    s.run_unitary(circuit)?;
    s.expectation(observable)
}

/// One weighted sample: every T runs as the noisy gate, replaced by a QPD
/// term; the observable is measured once.
fn qpd_shot<R: Rng + ?Sized>(
    circuit: &Circuit,
    observable: &PauliOperator,
    qpd: &QuasiProbDecomposition,
    eps_bar: f64,
    rng: &mut R,
) -> Result<f64> {
    let mut s = StateVector::zero(circuit.n)?;
    let mut weight = 1.0;
    for op in circuit.steps.iter().flat_map(|st| &st.ops) {
        match op.kind {
            OpKind::Gate(g) => s.apply_gate(g)?,
            OpKind::T(q) => {
                let (term, sign) = qpd.sample(rng);
                weight *= qpd.gamma * sign;
                s.apply_t(q, false)?;
                if rng.random::<f64>() < eps_bar {
                    s.apply_gate(CliffordGate::Z(q))?;
                }
                if term == 1 {
                    s.apply_gate(CliffordGate::Z(q))?;
                }
            }
            OpKind::Idle(_) => {}
            OpKind::Reset(..) | OpKind::Measure(..) => {
                return Err(Error::Unsupported("measurements inside a QPD circuit".into()))
            }
        }
    }
    let e = s.expectation(observable)?;
    let minus = rng.random::<f64>() < (1.0 - e) / 2.0;
    Ok(weight * if minus { -1.0 } else { 1.0 })
}

/// Monte Carlo QPD estimate of `⟨O⟩` for a circuit whose T gates suffer
/// `𝒯_ε̄`. Shot `i` draws from `stream(seed, i)`.
pub fn qpd_estimate(circuit: &Circuit, observable: &PauliOperator, eps_bar: f64, shots: u64, seed: u64) -> Result<QpdEstimate> {
    if shots == 0 {
        return Err(invalid("shots", "must be at least 1"));
    }
    if observable.num_qubits() != circuit.n {
        return Err(Error::SizeMismatch { expected: circuit.n, got: observable.num_qubits() });
    }
    if !observable.is_hermitian() {
        return Err(Error::ImaginaryPhase);
    }
    let qpd = qpd_for_t(eps_bar)?;
    let values: Vec<f64> = (0..shots)
        .into_par_iter()
        .map(|i| qpd_shot(circuit, observable, &qpd, eps_bar, &mut stream(seed, i)))
        .collect::<Result<_>>()?;
    let n = shots as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if shots > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(QpdEstimate { mean, std_error: (var / n).sqrt(), shots, gamma_total: qpd.gamma.powi(circuit.t_count() as i32) })
}
