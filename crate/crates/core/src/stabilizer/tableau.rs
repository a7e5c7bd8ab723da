//! Aaronson-Gottesman stabilizer tableau.
//!
//! Rows `0..n` are destabilizers, rows `n..2n` stabilizers. Each row is a
//! Hermitian Pauli string (Y stored as `x & z`) with a sign bit. Rows are
//! packed into `u64` words and row products are word-parallel.

use rand::Rng;

use super::pauli::{words_for, Pauli1, PauliOperator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    /// Control, target.
    Cnot(usize, usize),
}

impl CliffordGate {
    pub fn name(&self) -> &'static str {
        match self {
            CliffordGate::H(_) => "H",
            CliffordGate::S(_) => "S",
            CliffordGate::Sdg(_) => "SDG",
            CliffordGate::X(_) => "X",
            CliffordGate::Y(_) => "Y",
            CliffordGate::Z(_) => "Z",
            CliffordGate::Cnot(..) => "CX",
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            CliffordGate::H(q)
            | CliffordGate::S(q)
            | CliffordGate::Sdg(q)
            | CliffordGate::X(q)
            | CliffordGate::Y(q)
            | CliffordGate::Z(q) => vec![q],
            CliffordGate::Cnot(c, t) => vec![c, t],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::BadArity { gate: self.name(), targets: qs });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

/// Result of a Pauli measurement. `minus` is true for eigenvalue `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub minus: bool,
    pub deterministic: bool,
}

impl Outcome {
    pub fn eigenvalue(&self) -> i8 {
        if self.minus {
            -1
        } else {
            1
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct StabilizerState {
    n: usize,
    w: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl std::fmt::Debug for StabilizerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "StabilizerState(n={})", self.n)?;
        for g in self.stabilizers() {
            writeln!(f, "  {g}")?;
        }
        Ok(())
    }
}

/// Exponent of `i` produced when multiplying Hermitian Pauli words
/// `lhs <- lhs * rhs`, ignoring signs. Updates `lhs` in place.
#[inline]
fn mul_words(lx: &mut [u64], lz: &mut [u64], rx: &[u64], rz: &[u64]) -> u32 {
    let mut cnt1 = 0u64;
    let mut cnt2 = 0u64;
    for k in 0..lx.len() {
        let ox = lx[k];
        let oz = lz[k];
        let nx = ox ^ rx[k];
        let nz = oz ^ rz[k];
        lx[k] = nx;
        lz[k] = nz;
        let x1z2 = ox & rz[k];
        let anti = (rx[k] & oz) ^ x1z2;
        cnt2 ^= (cnt1 ^ nx ^ nz ^ x1z2) & anti;
        cnt1 ^= anti;
    }
    (cnt1.count_ones() + 2 * cnt2.count_ones()) % 4
}

#[inline]
fn anticommutes_words(ax: &[u64], az: &[u64], bx: &[u64], bz: &[u64]) -> bool {
    let mut acc = 0u64;
    for k in 0..ax.len() {
        acc ^= (ax[k] & bz[k]) ^ (az[k] & bx[k]);
    }
    acc.count_ones() % 2 == 1
}

impl StabilizerState {
    /// `|0...0>` on `n` qubits.
    pub fn new(n: usize) -> Self {
        let w = words_for(n).max(1);
        let mut s = Self { n, w, x: vec![0; 2 * n * w], z: vec![0; 2 * n * w], r: vec![false; 2 * n] };
        for q in 0..n {
            s.x[q * w + q / 64] |= 1 << (q % 64);
            s.z[(q + n) * w + q / 64] |= 1 << (q % 64);
        }
        s
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn row(&self, i: usize) -> (&[u64], &[u64]) {
        let w = self.w;
        (&self.x[i * w..(i + 1) * w], &self.z[i * w..(i + 1) * w])
    }

    fn row_operator(&self, i: usize) -> PauliOperator {
        let (rx, rz) = self.row(i);
        let mut op = PauliOperator::identity(self.n);
        for q in 0..self.n {
            let xb = rx[q / 64] >> (q % 64) & 1 == 1;
            let zb = rz[q / 64] >> (q % 64) & 1 == 1;
            op.set(q, Pauli1::from_bits(xb, zb));
        }
        if self.r[i] {
            op.negate();
        }
        op
    }

    /// Current stabilizer generators with signs.
    pub fn stabilizers(&self) -> Vec<PauliOperator> {
        (self.n..2 * self.n).map(|i| self.row_operator(i)).collect()
    }

    pub fn destabilizers(&self) -> Vec<PauliOperator> {
        (0..self.n).map(|i| self.row_operator(i)).collect()
    }

    /// `row h <- row h * row i`.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.w;
        let (hx, ix) = split_rows(&mut self.x, h, i, w);
        let (hz, iz) = split_rows(&mut self.z, h, i, w);
        let s = mul_words(hx, hz, ix, iz);
        let total = 2 * self.r[h] as u32 + 2 * self.r[i] as u32 + s;
        // odd totals only arise for destabilizer rows, whose signs are irrelevant
        self.r[h] = (total % 4) >> 1 == 1;
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.n {
            Err(Error::QubitOutOfRange { index: q, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn apply_gate(&mut self, gate: CliffordGate) -> Result<()> {
        gate.validate(self.n)?;
        let w = self.w;
        let rows = 2 * self.n;
        match gate {
            CliffordGate::Cnot(c, t) => {
                let (wc, bc) = (c / 64, c % 64);
                let (wt, bt) = (t / 64, t % 64);
                for i in 0..rows {
                    let xc = self.x[i * w + wc] >> bc & 1;
                    let zc = self.z[i * w + wc] >> bc & 1;
                    let xt = self.x[i * w + wt] >> bt & 1;
                    let zt = self.z[i * w + wt] >> bt & 1;
                    if xc & zt & (xt ^ zc ^ 1) == 1 {
                        self.r[i] ^= true;
                    }
                    self.x[i * w + wt] ^= xc << bt;
                    self.z[i * w + wc] ^= zt << bc;
                }
            }
            single => {
                let q = single.qubits()[0];
                let (wq, b) = (q / 64, q % 64);
                let m = 1u64 << b;
                for i in 0..rows {
                    let xi = self.x[i * w + wq] & m != 0;
                    let zi = self.z[i * w + wq] & m != 0;
                    match single {
                        CliffordGate::H(_) => {
                            self.r[i] ^= xi & zi;
                            if xi != zi {
                                self.x[i * w + wq] ^= m;
                                self.z[i * w + wq] ^= m;
                            }
                        }
                        CliffordGate::S(_) => {
                            self.r[i] ^= xi & zi;
                            if xi {
                                self.z[i * w + wq] ^= m;
                            }
                        }
                        CliffordGate::Sdg(_) => {
                            self.r[i] ^= xi & !zi;
                            if xi {
                                self.z[i * w + wq] ^= m;
                            }
                        }
                        CliffordGate::X(_) => self.r[i] ^= zi,
                        CliffordGate::Z(_) => self.r[i] ^= xi,
                        CliffordGate::Y(_) => self.r[i] ^= xi ^ zi,
                        CliffordGate::Cnot(..) => unreachable!(),
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_gates(&mut self, gates: &[CliffordGate]) -> Result<()> {
        gates.iter().try_for_each(|&g| self.apply_gate(g))
    }

    /// Conjugates the state by a Pauli operator (phase irrelevant).
    pub fn apply_pauli(&mut self, p: &PauliOperator) -> Result<()> {
        if p.num_qubits() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: p.num_qubits() });
        }
        for i in 0..2 * self.n {
            let (rx, rz) = self.row(i);
            if anticommutes_words(rx, rz, p.x_words(), p.z_words()) {
                self.r[i] ^= true;
            }
        }
        Ok(())
    }

    /// Measures a Hermitian Pauli observable. Random outcomes are decided by `choose`.
    pub fn measure_with(&mut self, obs: &PauliOperator, mut choose: impl FnMut() -> bool) -> Result<Outcome> {
        if obs.num_qubits() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: obs.num_qubits() });
        }
        let obs_sign = obs.sign_bit()?;
        let (ox, oz) = (obs.x_words(), obs.z_words());
        let n = self.n;
        let w = self.w;
        let pivot = (n..2 * n).find(|&i| {
            let (rx, rz) = self.row(i);
            anticommutes_words(rx, rz, ox, oz)
        });
        match pivot {
            Some(p) => {
                for i in 0..2 * n {
                    if i != p {
                        let (rx, rz) = self.row(i);
                        if anticommutes_words(rx, rz, ox, oz) {
                            self.rowsum(i, p);
                        }
                    }
                }
                let d = p - n;
                self.x.copy_within(p * w..(p + 1) * w, d * w);
                self.z.copy_within(p * w..(p + 1) * w, d * w);
                self.r[d] = self.r[p];
                self.x[p * w..(p + 1) * w].copy_from_slice(ox);
                self.z[p * w..(p + 1) * w].copy_from_slice(oz);
                let minus = choose();
                self.r[p] = minus ^ obs_sign;
                Ok(Outcome { minus, deterministic: false })
            }
            None => {
                let sign = self.deterministic_sign(ox, oz);
                Ok(Outcome { minus: sign ^ obs_sign, deterministic: true })
            }
        }
    }

    /// Sign of the stabilizer-group element equal to `±obs`; assumes it exists.
    fn deterministic_sign(&self, ox: &[u64], oz: &[u64]) -> bool {
        let n = self.n;
        let w = self.w;
        let mut sx = vec![0u64; w];
        let mut sz = vec![0u64; w];
        let mut phase = 0u32;
        for i in 0..n {
            let (dx, dz) = self.row(i);
            if anticommutes_words(dx, dz, ox, oz) {
                let (gx, gz) = self.row(i + n);
                phase += 2 * self.r[i + n] as u32 + mul_words(&mut sx, &mut sz, gx, gz);
            }
        }
        debug_assert!(sx == ox && sz == oz);
        (phase % 4) >> 1 == 1
    }

    pub fn measure_pauli<R: Rng + ?Sized>(&mut self, obs: &PauliOperator, rng: &mut R) -> Result<Outcome> {
        self.measure_with(obs, || rng.random::<bool>())
    }

    /// Expectation sign of `obs` if it is determined, without collapsing.
    pub fn peek(&self, obs: &PauliOperator) -> Result<Option<bool>> {
        if obs.num_qubits() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: obs.num_qubits() });
        }
        let obs_sign = obs.sign_bit()?;
        let (ox, oz) = (obs.x_words(), obs.z_words());
        let random = (self.n..2 * self.n).any(|i| {
            let (rx, rz) = self.row(i);
            anticommutes_words(rx, rz, ox, oz)
        });
        if random {
            Ok(None)
        } else {
            Ok(Some(self.deterministic_sign(ox, oz) ^ obs_sign))
        }
    }

    /// `true` if `obs` (with its sign) stabilizes the state.
    pub fn is_stabilized_by(&self, obs: &PauliOperator) -> Result<bool> {
        Ok(self.peek(obs)? == Some(false))
    }

    pub fn measure_basis_with(&mut self, q: usize, basis: Basis, choose: impl FnMut() -> bool) -> Result<Outcome> {
        self.check(q)?;
        let p = match basis {
            Basis::Z => Pauli1::Z,
            Basis::X => Pauli1::X,
        };
        self.measure_with(&PauliOperator::single(self.n, q, p), choose)
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<Outcome> {
        self.measure_basis_with(q, basis, || rng.random::<bool>())
    }

    /// Resets qubit `q` to `|0>` (Z) or `|+>` (X).
    pub fn reset_with(&mut self, q: usize, basis: Basis, choose: impl FnMut() -> bool) -> Result<()> {
        let out = self.measure_basis_with(q, basis, choose)?;
        if out.minus {
            let flip = match basis {
                Basis::Z => CliffordGate::X(q),
                Basis::X => CliffordGate::Z(q),
            };
            self.apply_gate(flip)?;
        }
        Ok(())
    }

    pub fn reset_qubit<R: Rng + ?Sized>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<()> {
        self.reset_with(q, basis, || rng.random::<bool>())
    }

    /// Full group audit: stabilizers commute pairwise, destabilizers commute
    /// pairwise, destabilizer `i` anticommutes with stabilizer `j` iff `i == j`,
    /// and all `2n` rows are linearly independent. O(n^2) row checks.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let n = self.n;
        for i in 0..2 * n {
            for j in (i + 1)..2 * n {
                let (ax, az) = self.row(i);
                let (bx, bz) = self.row(j);
                let anti = anticommutes_words(ax, az, bx, bz);
                let expect = i < n && j == i + n;
                if anti != expect {
                    return Err(format!("rows {i} and {j}: anticommute={anti}, expected {expect}"));
                }
            }
        }
        // rank over GF(2) of the 2n x 2n symplectic matrix
        let w = self.w;
        let mut m: Vec<Vec<u64>> = (0..2 * n)
            .map(|i| {
                let (rx, rz) = self.row(i);
                rx.iter().chain(rz.iter()).copied().collect()
            })
            .collect();
        let mut rank = 0;
        for col in 0..2 * n {
            let (word, bit) = if col < n { (col / 64, col % 64) } else { (w + (col - n) / 64, (col - n) % 64) };
            if let Some(pr) = (rank..2 * n).find(|&r| m[r][word] >> bit & 1 == 1) {
                m.swap(rank, pr);
                let pivot = m[rank].clone();
                for (r, row) in m.iter_mut().enumerate() {
                    if r != rank && row[word] >> bit & 1 == 1 {
                        row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
                    }
                }
                rank += 1;
            }
        }
        if rank != 2 * n {
            return Err(format!("rank {rank} < {}", 2 * n));
        }
        Ok(())
    }
}

fn split_rows(v: &mut [u64], h: usize, i: usize, w: usize) -> (&mut [u64], &[u64]) {
    if h < i {
        let (a, b) = v.split_at_mut(i * w);
        (&mut a[h * w..(h + 1) * w], &b[..w])
    } else {
        let (a, b) = v.split_at_mut(h * w);
        (&mut b[..w], &a[i * w..(i + 1) * w])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn hadamard_on_zero_gives_plus() {
        let mut s = StabilizerState::new(1);
        s.apply_gate(CliffordGate::H(0)).unwrap();
        assert!(s.is_stabilized_by(&p("X")).unwrap());
    }

    #[test]
    fn bell_state_stabilizers() {
        let mut s = StabilizerState::new(2);
        s.apply_gates(&[CliffordGate::H(0), CliffordGate::Cnot(0, 1)]).unwrap();
        assert!(s.is_stabilized_by(&p("XX")).unwrap());
        assert!(s.is_stabilized_by(&p("ZZ")).unwrap());
        assert!(s.is_stabilized_by(&p("-YY")).unwrap());
        s.audit().unwrap();
    }

    #[test]
    fn s_conjugates_x_to_y() {
        // S X S^dag = Y: prepare |+>, apply S, state is stabilized by +Y
        let mut s = StabilizerState::new(1);
        s.apply_gates(&[CliffordGate::H(0), CliffordGate::S(0)]).unwrap();
        assert!(s.is_stabilized_by(&p("Y")).unwrap());
        s.apply_gate(CliffordGate::Sdg(0)).unwrap();
        assert!(s.is_stabilized_by(&p("X")).unwrap());
        s.apply_gate(CliffordGate::Sdg(0)).unwrap();
        assert!(s.is_stabilized_by(&p("-Y")).unwrap());
    }

    #[test]
    fn pauli_gates_flip_signs() {
        let mut s = StabilizerState::new(1);
        s.apply_gate(CliffordGate::X(0)).unwrap();
        assert!(s.is_stabilized_by(&p("-Z")).unwrap());
        s.apply_gate(CliffordGate::Y(0)).unwrap();
        assert!(s.is_stabilized_by(&p("Z")).unwrap());
        s.apply_gate(CliffordGate::H(0)).unwrap();
        s.apply_gate(CliffordGate::Z(0)).unwrap();
        assert!(s.is_stabilized_by(&p("-X")).unwrap());
    }

    #[test]
    fn z_on_zero_is_deterministic() {
        let mut s = StabilizerState::new(1);
        let mut rng = stream(1, 0);
        let o = s.measure(0, Basis::Z, &mut rng).unwrap();
        assert!(o.deterministic && !o.minus);
    }

    #[test]
    fn x_on_zero_is_fair() {
        let mut rng = stream(2, 0);
        let shots = 20_000;
        let mut minus = 0;
        for _ in 0..shots {
            let mut s = StabilizerState::new(1);
            let o = s.measure(0, Basis::X, &mut rng).unwrap();
            assert!(!o.deterministic);
            minus += o.minus as usize;
        }
        let sd = (shots as f64 * 0.25).sqrt();
        assert!((minus as f64 - shots as f64 / 2.0).abs() < 4.0 * sd);
    }

    #[test]
    fn repeated_measurement_is_idempotent() {
        let mut rng = stream(3, 0);
        for _ in 0..50 {
            let mut s = StabilizerState::new(3);
            s.apply_gates(&[CliffordGate::H(0), CliffordGate::Cnot(0, 1), CliffordGate::S(2), CliffordGate::H(2)])
                .unwrap();
            let obs = p("XYZ");
            let a = s.measure_pauli(&obs, &mut rng).unwrap();
            let b = s.measure_pauli(&obs, &mut rng).unwrap();
            assert!(b.deterministic);
            assert_eq!(a.minus, b.minus);
            s.audit().unwrap();
        }
    }

    #[test]
    fn bell_measurements_agree() {
        let mut rng = stream(4, 0);
        for _ in 0..200 {
            let mut s = StabilizerState::new(2);
            s.apply_gates(&[CliffordGate::H(0), CliffordGate::Cnot(0, 1)]).unwrap();
            let a = s.measure(0, Basis::Z, &mut rng).unwrap();
            let b = s.measure(1, Basis::Z, &mut rng).unwrap();
            assert_eq!(a.minus, b.minus);
            assert!(b.deterministic);
        }
    }

    #[test]
    fn reset_disentangles() {
        let mut rng = stream(5, 0);
        let mut s = StabilizerState::new(1);
        s.apply_gate(CliffordGate::X(0)).unwrap();
        s.reset_qubit(0, Basis::Z, &mut rng).unwrap();
        assert!(s.is_stabilized_by(&p("Z")).unwrap());
        s.reset_qubit(0, Basis::X, &mut rng).unwrap();
        let o = s.measure(0, Basis::X, &mut rng).unwrap();
        assert!(o.deterministic && !o.minus);
    }

    #[test]
    fn negative_observable_sign() {
        let mut s = StabilizerState::new(1);
        let mut rng = stream(6, 0);
        let o = s.measure_pauli(&p("-Z"), &mut rng).unwrap();
        assert!(o.minus && o.deterministic);
        assert_eq!(s.measure_pauli(&p("iZ"), &mut rng), Err(Error::ImaginaryPhase));
    }

    #[test]
    fn errors_on_bad_targets() {
        let mut s = StabilizerState::new(2);
        assert!(matches!(s.apply_gate(CliffordGate::H(2)), Err(Error::QubitOutOfRange { .. })));
        assert!(matches!(s.apply_gate(CliffordGate::Cnot(1, 1)), Err(Error::BadArity { .. })));
    }

    #[test]
    fn wide_state_measurement() {
        let n = 70;
        let mut s = StabilizerState::new(n);
        s.apply_gate(CliffordGate::H(0)).unwrap();
        for q in 1..n {
            s.apply_gate(CliffordGate::Cnot(q - 1, q)).unwrap();
        }
        let all_x = PauliOperator::on_qubits(n, 0..n, Pauli1::X);
        assert!(s.is_stabilized_by(&all_x).unwrap());
        let zz = PauliOperator::on_qubits(n, [3, 68], Pauli1::Z);
        assert!(s.is_stabilized_by(&zz).unwrap());
        s.audit().unwrap();
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = CliffordGate> {
        (0usize..7, 0..n, 1..n).prop_map(move |(k, a, off)| {
            let b = (a + off) % n;
            match k {
                0 => CliffordGate::H(a),
                1 => CliffordGate::S(a),
                2 => CliffordGate::Sdg(a),
                3 => CliffordGate::X(a),
                4 => CliffordGate::Y(a),
                5 => CliffordGate::Z(a),
                _ => CliffordGate::Cnot(a, b),
            }
        })
    }

    proptest! {
        #[test]
        fn row_product_phase_matches_pauli_algebra(
            a in prop::collection::vec(0u8..4, 70),
            b in prop::collection::vec(0u8..4, 70),
        ) {
            let mk = |v: &[u8]| {
                let mut op = PauliOperator::identity(v.len());
                for (q, &k) in v.iter().enumerate() {
                    op.set(q, [Pauli1::I, Pauli1::X, Pauli1::Y, Pauli1::Z][k as usize]);
                }
                op
            };
            let (pa, pb) = (mk(&a), mk(&b));
            let mut lx = pa.x_words().to_vec();
            let mut lz = pa.z_words().to_vec();
            let s = mul_words(&mut lx, &mut lz, pb.x_words(), pb.z_words());
            let prod = pa.mul(&pb);
            prop_assert_eq!(s as u8, prod.hermitian_phase());
            prop_assert_eq!(lx.as_slice(), prod.x_words());
        }

        #[test]
        fn tableau_invariants_survive_random_circuits(
            gates in prop::collection::vec(arb_gate(5), 0..40),
            meas in prop::collection::vec((0usize..5, any::<bool>()), 0..8),
            seed in any::<u64>(),
        ) {
            let mut rng = stream(seed, 0);
            let mut s = StabilizerState::new(5);
            for (i, g) in gates.iter().enumerate() {
                s.apply_gate(*g).unwrap();
                if let Some(&(q, x)) = meas.get(i) {
                    let b = if x { Basis::X } else { Basis::Z };
                    if i % 3 == 0 {
                        s.reset_qubit(q, b, &mut rng).unwrap();
                    } else {
                        s.measure(q, b, &mut rng).unwrap();
                    }
                }
                prop_assert!(s.audit().is_ok());
            }
        }
    }
}
