//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria known to be unattainable as literally stated are reported as
//! `FAIL (known)` and do not change the exit status; the scoped version that
//! is attainable gates the run instead. See README, "Deviations".

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use emt_core::circuit::{Circuit, Operation, Step};
use emt_core::code_switching::{estimate_rates, noiseless_clifford_check, Experiment, Switching, SwitchingConfig};
use emt_core::dense::outcome_distribution;
use emt_core::mitigation::{self, gadget_superoperator, max_abs_diff, noisy_t_channel, qpd_estimate, qpd_for_t, t_channel};
use emt_core::noise::{execute, FaultyCircuit};
use emt_core::planner::{eta_over_epsilon, GammaMode, OverheadModel, KAPPA_MAGIC};
use emt_core::rate_learning::{fit_error_rate, DecayDataset};
use emt_core::rng::{derive_seed, stream};
use emt_core::stats::RateEstimate;
use emt_core::{Basis, CliffordGate, PauliOperator, StabilizerState};

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
    KnownFail,
}

struct Report {
    lines: Vec<(Status, String)>,
}

impl Report {
    fn record(&mut self, id: usize, name: &str, status: Status, detail: String, started: Instant) {
        let tag = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::KnownFail => "FAIL (known)",
        };
        let line = format!("{tag:<12} [{id:>2}] {name}: {detail} ({:.1}s)", started.elapsed().as_secs_f64());
        println!("{line}");
        self.lines.push((status, line));
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn random_circuit<R: Rng>(rng: &mut R) -> Circuit {
    let n = rng.random_range(1..=5);
    let len = rng.random_range(1..=40);
    let mut c = Circuit::new(n);
    for _ in 0..len {
        let q = rng.random_range(0..n);
        let basis = if rng.random::<bool>() { Basis::Z } else { Basis::X };
        let op = match rng.random_range(0..10) {
            0 => Operation::gate(CliffordGate::H(q)),
            1 => Operation::gate(CliffordGate::S(q)),
            2 => Operation::gate(CliffordGate::Sdg(q)),
            3 => Operation::gate(CliffordGate::X(q)),
            4 => Operation::gate(CliffordGate::Y(q)),
            5 => Operation::gate(CliffordGate::Z(q)),
            6 | 7 if n > 1 => {
                let mut t = rng.random_range(0..n - 1);
                if t >= q {
                    t += 1;
                }
                Operation::gate(CliffordGate::Cnot(q, t))
            }
            8 => Operation::reset(q, basis),
            _ => Operation::measure(q, basis, None),
        };
        let mut step = Step::new(false);
        step.push(op);
        c.push_step(step);
    }
    // every circuit ends with at least one measurement
    let mut step = Step::new(false);
    step.push(Operation::measure(rng.random_range(0..n), Basis::Z, None));
    c.push_step(step);
    c
}

/// Pearson χ² of tableau samples against the dense distribution, expressed
/// as the normal quantile of its upper-tail probability. Infinite when a
/// zero-probability record appears.
fn oracle_z(circuit: &Circuit, shots: u64, seed: u64) -> f64 {
    let exact = outcome_distribution(circuit).expect("dense oracle");
    let counts: BTreeMap<Vec<bool>, u64> = (0..shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let (_, rec) = execute(&FaultyCircuit::noiseless(circuit), StabilizerState::new(circuit.n), &mut rng).expect("tableau");
            BTreeMap::from([(rec.bits, 1u64)])
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    if counts.keys().any(|k| exact.get(k).copied().unwrap_or(0.0) <= 1e-15) {
        return f64::INFINITY;
    }
    let n = shots as f64;
    let chi2: f64 = exact
        .iter()
        .map(|(k, &p)| {
            let o = counts.get(k).copied().unwrap_or(0) as f64;
            (o - n * p).powi(2) / (n * p)
        })
        .sum();
    let df = exact.len().saturating_sub(1) as f64;
    if df == 0.0 {
        return f64::NEG_INFINITY;
    }
    let tail = ChiSquared::new(df).unwrap().sf(chi2);
    if tail <= 0.0 {
        f64::INFINITY
    } else {
        -Normal::standard().inverse_cdf(tail)
    }
}

fn criterion_oracle(r: &mut Report) {
    let t0 = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    let mut fails = 0;
    for i in 0..200u64 {
        let circ = random_circuit(&mut stream(0xC1, i));
        let z = oracle_z(&circ, 100_000, derive_seed(0xC2, &[i]));
        worst = worst.max(z);
        fails += (z > 4.0) as usize;
    }
    r.record(
        1,
        "stabilizer vs dense oracle",
        status(fails == 0),
        format!("{} of 200 circuits within 4σ, worst χ² tail at {worst:.2}σ", 200 - fails),
        t0,
    );
}

fn criterion_noiseless(r: &mut Report) {
    let t0 = Instant::now();
    let mut total = (0u64, 0u64, 0u64);
    let mut clifford_ok = true;
    for d in [3, 5, 7] {
        let mut c = SwitchingConfig::new(d, 0.0);
        c.trials = 1000;
        c.seed = 0xA2 + d as u64;
        let rates = estimate_rates(&c).expect("valid config");
        total.0 += rates.frame.frame_errors;
        total.1 += rates.logical.z_errors;
        total.2 += rates.logical.x_errors;
        for i in 0..5 {
            clifford_ok &= noiseless_clifford_check(d, 3, &mut stream(0xA3, i)).expect("runs");
        }
    }
    r.record(
        2,
        "noiseless exactness",
        status(total == (0, 0, 0) && clifford_ok),
        format!(
            "d=3,5,7 x 1000 trials: frame={} Z={} X={}; tableau S-substitute check {}",
            total.0,
            total.1,
            total.2,
            if clifford_ok { "ok" } else { "failed" }
        ),
        t0,
    );
}

fn criterion_single_fault(r: &mut Report) {
    let t0 = Instant::now();
    let c = SwitchingConfig::new(3, 1e-3);
    let frame = Switching::new(Experiment::Frame, c).unwrap().single_fault_sweep();
    let logical = Switching::new(Experiment::Logical, c).unwrap().single_fault_sweep();
    let f_all = frame.iter().filter(|s| s.outcome.frame_error).count();
    let f_sigma = frame.iter().filter(|s| s.outcome.frame_error && s.in_sigma_measurement).count();
    let z_all = logical.iter().filter(|s| s.outcome.z_error).count();
    let x_all = logical.iter().filter(|s| s.outcome.x_error).count();
    let literal = f_all == 0 && z_all == 0 && x_all == 0;
    r.record(
        3,
        "single faults, literal (no error of any kind)",
        if literal { Status::Pass } else { Status::KnownFail },
        format!("{} faults: frame={f_all} Z={z_all} X={x_all}; P_F and P_Z are first order in ε", frame.len()),
        t0,
    );
    let t0 = Instant::now();
    r.record(
        3,
        "single faults, scoped (σ measurement correctable, no X error)",
        status(f_sigma == 0 && x_all == 0),
        format!("frame errors from σ-measurement faults={f_sigma}, X errors={x_all}"),
        t0,
    );
}

fn rates(d: usize, eps: f64, trials: u64, seed: u64, exp: Experiment) -> emt_core::code_switching::Counts {
    let mut c = SwitchingConfig::new(d, eps);
    c.trials = trials;
    c.seed = seed;
    Switching::new(exp, c).unwrap().estimate()
}

fn criterion_pf(r: &mut Report) {
    let t0 = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [1e-3, 2e-3] {
        let n = rates(5, eps, 50_000, 0xB4, Experiment::Frame);
        let est = RateEstimate::new(n.frame_errors, n.trials);
        let ratio = est.rate / eps;
        ok &= (3.5..=9.0).contains(&ratio);
        parts.push(format!("ε={eps:.0e}: P_F/ε={ratio:.2} [{:.2}, {:.2}]", est.lo / eps, est.hi / eps));
    }
    r.record(4, "P_F/ε in [3.5, 9] at d=5", status(ok), parts.join("; "), t0);
}

fn criterion_pz(r: &mut Report) {
    let t0 = Instant::now();
    let eps = 1e-3;
    let f = rates(7, eps, 100_000, 0xB5, Experiment::Frame);
    let l = rates(7, eps, 100_000, 0xB5, Experiment::Logical);
    let pf = f.frame_errors as f64 / f.trials as f64;
    let pz = l.z_errors as f64 / l.trials as f64;
    let combined = (pz + pf / 2.0) / eps;
    let ok = (15.0..=40.0).contains(&(pz / eps)) && (20.0..=45.0).contains(&combined);
    r.record(
        5,
        "P_Z/ε in [15, 40], (P_Z + P_F/2)/ε in [20, 45] at d=7",
        status(ok),
        format!("P_Z/ε={:.2}, P_F/ε={:.2}, combined={combined:.2}", pz / eps, pf / eps),
        t0,
    );
}

fn criterion_px(r: &mut Report) {
    let t0 = Instant::now();
    let eps = 3e-3;
    let e3 = rates(3, eps, 50_000, 0xB6, Experiment::Logical);
    let e5 = rates(5, eps, 50_000, 0xB6, Experiment::Logical);
    let (p3, p5) = (RateEstimate::new(e3.x_errors, e3.trials), RateEstimate::new(e5.x_errors, e5.trials));
    r.record(
        6,
        "P_X suppressed from d=3 to d=5 at ε=3e-3",
        status(p3.disjoint(&p5) && p5.rate < p3.rate),
        format!(
            "P_X(3)={:.2e} [{:.2e}, {:.2e}], P_X(5)={:.2e} [{:.2e}, {:.2e}]",
            p3.rate, p3.lo, p3.hi, p5.rate, p5.lo, p5.hi
        ),
        t0,
    );
}

/// Ten fixed Clifford+T circuits with their observables.
pub fn qpd_circuits() -> Vec<(Circuit, PauliOperator)> {
    const SRC: [(&str, &str); 10] = [
        ("QUBITS 1\nH 0\nTICK\nT 0\nTICK\nH 0", "+Z"),
        ("QUBITS 1\nH 0\nTICK\nT 0\nTICK\nT 0\nTICK\nT 0\nTICK\nH 0", "+Z"),
        ("QUBITS 1\nH 0\nTICK\nT 0\nTICK\nS 0\nTICK\nT 0", "+Y"),
        ("QUBITS 2\nH 0\nTICK\nCX 0 1\nTICK\nT 0\nTICK\nT 1", "+XX"),
        ("QUBITS 2\nH 0\nH 1\nTICK\nT 0\nTICK\nCX 0 1\nTICK\nT 1\nTICK\nH 1", "+XZ"),
        ("QUBITS 2\nH 0\nTICK\nT 0\nTICK\nH 0\nTICK\nT 0\nTICK\nCX 0 1\nTICK\nH 1", "+ZX"),
        ("QUBITS 3\nH 0\nH 1\nH 2\nTICK\nT 0\nT 1\nT 2\nTICK\nCX 0 1\nTICK\nCX 1 2\nTICK\nH 0", "+XZX"),
        ("QUBITS 3\nH 0\nTICK\nCX 0 1\nTICK\nCX 1 2\nTICK\nT 0\nT 1\nT 2\nTICK\nT 2", "+YXX"),
        ("QUBITS 3\nH 0\nTICK\nT 0\nTICK\nCX 0 1\nTICK\nH 1\nTICK\nT 1\nTICK\nCX 1 2\nTICK\nH 2\nTICK\nT 2", "+XYX"),
        ("QUBITS 3\nH 0\nH 1\nTICK\nT 0\nT 1\nTICK\nCX 1 0\nTICK\nT 0\nTICK\nH 0\nTICK\nCX 0 2", "+ZIZ"),
    ];
    SRC.iter().map(|(c, o)| (c.parse().expect("circuit"), o.parse().expect("observable"))).collect()
}

fn criterion_qpd_unbiased(r: &mut Report) {
    let t0 = Instant::now();
    let mut worst_dev = 0.0f64;
    let mut worst_ratio = 1.0f64;
    let mut ok = true;
    for (i, (circ, obs)) in qpd_circuits().into_iter().enumerate() {
        assert!(circ.n <= 3 && circ.t_count() <= 4);
        let exact = mitigation::ideal_expectation(&circ, &obs).unwrap();
        for (j, eps) in [0.01, 0.05, 0.1].into_iter().enumerate() {
            let est = qpd_estimate(&circ, &obs, eps, 100_000, derive_seed(0xB7, &[i as u64, j as u64])).unwrap();
            let dev = (est.mean - exact).abs() / est.std_error;
            let predicted = ((est.gamma_total.powi(2) - exact * exact).max(0.0) / est.shots as f64).sqrt();
            let ratio = est.std_error / predicted;
            worst_dev = worst_dev.max(dev);
            if (ratio - 1.0).abs() > (worst_ratio - 1.0).abs() {
                worst_ratio = ratio;
            }
            ok &= dev <= 5.0 && (0.5..=2.0).contains(&ratio);
        }
    }
    r.record(
        7,
        "QPD estimator unbiased with γ^t standard error",
        status(ok),
        format!("30 runs, worst |mean − exact| = {worst_dev:.2} SE, worst SE/predicted = {worst_ratio:.3}"),
        t0,
    );
}

fn criterion_qpd_reconstruction(r: &mut Report) {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut gamma_ok = true;
    for k in 0..=90 {
        let eps = 0.45 * k as f64 / 90.0;
        let q = qpd_for_t(eps).unwrap();
        worst = worst.max(max_abs_diff(&q.superoperator(), &t_channel().superoperator()));
        gamma_ok &= q.gamma == 1.0 / (1.0 - 2.0 * eps);
    }
    r.record(
        8,
        "QPD reconstructs T",
        status(worst < 1e-12 && gamma_ok),
        format!("max superoperator error {worst:.1e} over 91 points in [0, 0.45]; γ exact: {gamma_ok}"),
        t0,
    );
}

fn criterion_gadget(r: &mut Report) {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..=100 {
        let eps = 0.5 * k as f64 / 100.0;
        let m = mitigation::DensityMatrix::magic().matrix() * num_complex::Complex64::new(1.0 - eps, 0.0)
            + mitigation::DensityMatrix::omega().matrix() * num_complex::Complex64::new(eps, 0.0);
        let tau = mitigation::DensityMatrix::new(m).unwrap();
        worst = worst.max(max_abs_diff(&gadget_superoperator(&tau), &noisy_t_channel(eps).unwrap().superoperator()));
    }
    r.record(
        9,
        "gadget with twirled magic state is N∘T",
        status(worst < 1e-10),
        format!("max superoperator error {worst:.1e} over 101 points in [0, 0.5]"),
        t0,
    );
}

fn criterion_learning(r: &mut Report) {
    let t0 = Instant::now();
    let grid: Vec<u64> = (1..=8).map(|k| 8 * k).collect();
    let exact = fit_error_rate(&DecayDataset::exact(0.02, &grid, 100_000).unwrap()).unwrap();
    let hits = (0..100u64)
        .filter(|&rep| {
            let d = DecayDataset::simulate(0.02, &grid, 100_000, derive_seed(0xBA, &[rep])).unwrap();
            let fit = fit_error_rate(&d).unwrap();
            (fit.eps_bar - 0.02).abs() / 0.02 < 0.1
        })
        .count();
    let exact_err = (exact.eps_bar - 0.02).abs();
    r.record(
        10,
        "rate learning",
        status(hits >= 95 && exact_err < 1e-9),
        format!("{hits}/100 within 10%; exact-data error {exact_err:.1e}"),
        t0,
    );
}

fn criterion_planner(r: &mut Report) {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for mode in [GammaMode::Exact, GammaMode::FirstOrder] {
        let m = OverheadModel::new(KAPPA_MAGIC, mode).unwrap();
        for &eps in &[1e-5, 1e-4, 1e-3, 1e-2, 0.1, 0.5] {
            for &cost in &[1.5, 10.0, 1e3, 1e6] {
                let t = m.max_t_count(eps, cost).unwrap();
                let rel = (2.0 * t * m.ln_gamma(eps).unwrap() - cost.ln()).abs() / cost.ln();
                worst = worst.max(rel);
            }
        }
    }
    let t = OverheadModel::default().max_t_count(1e-4, 1e3).unwrap();
    let eta = eta_over_epsilon(KAPPA_MAGIC, 1e-4, 1e3);
    let asym = (t / eta - 1.0).abs();
    r.record(
        11,
        "planner round trip and small-ε limit",
        status(worst < 1e-12 && asym < 0.01),
        format!("round-trip relative error {worst:.1e}; t/(η/ε) − 1 = {asym:.1e} at ε=1e-4"),
        t0,
    );
}

fn numbers_for_determinism() -> Vec<f64> {
    let mut c = SwitchingConfig::new(3, 2e-3);
    c.trials = 4000;
    c.seed = 0xBC;
    let s = estimate_rates(&c).unwrap();
    let mut out = vec![s.p_f.rate, s.p_z.rate, s.p_x.rate, s.p_f.lo, s.p_z.hi];
    let (circ, obs) = qpd_circuits().remove(4);
    let q = qpd_estimate(&circ, &obs, 0.05, 20_000, 0xBD).unwrap();
    out.extend([q.mean, q.std_error]);
    let l = emt_core::rate_learning::learn(0.02, 20_000, 0xBE, None).unwrap();
    out.extend(l.data.points.iter().map(|p| p.f_hat));
    out.extend([l.fit.eps_bar, l.fit.std_error]);
    out
}

fn criterion_determinism(r: &mut Report) {
    let t0 = Instant::now();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(numbers_for_determinism)
    };
    let one = run(1);
    let four = run(4);
    let same = one.len() == four.len() && one.iter().zip(&four).all(|(a, b)| a.to_bits() == b.to_bits());
    r.record(
        12,
        "determinism across thread counts",
        status(same),
        format!("{} numbers from switching, QPD and learning runs, 1 vs 4 threads bit-identical: {same}", one.len()),
        t0,
    );
}

fn main() -> ExitCode {
    let mut r = Report { lines: Vec::new() };
    criterion_oracle(&mut r);
    criterion_noiseless(&mut r);
    criterion_single_fault(&mut r);
    criterion_pf(&mut r);
    criterion_pz(&mut r);
    criterion_px(&mut r);
    criterion_qpd_unbiased(&mut r);
    criterion_qpd_reconstruction(&mut r);
    criterion_gadget(&mut r);
    criterion_learning(&mut r);
    criterion_planner(&mut r);
    criterion_determinism(&mut r);
    let failed = r.lines.iter().filter(|(s, _)| *s == Status::Fail).count();
    let known = r.lines.iter().filter(|(s, _)| *s == Status::KnownFail).count();
    println!("acceptance: {} lines, {failed} failed, {known} known failures", r.lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
