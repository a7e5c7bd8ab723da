mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use emt_core::code_switching::{Experiment, Switching, SwitchingConfig};
use emt_core::mitigation::{ideal_expectation, qpd_estimate};
use emt_core::planner::{self, GammaMode, OverheadModel};
use emt_core::rate_learning;
use emt_core::rng::derive_seed;
use emt_core::stats::RateEstimate;
use emt_core::surface_code::{build_code, Variant};
use emt_core::PauliOperator;

use output::{write_sidecar, RowSink, Sidecar};

#[derive(Parser)]
#[command(name = "emt", version, about = "Error-mitigated logical T gates: simulations and planning")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full switching protocol: frame and logical experiments per (d, ε).
    #[command(args_override_self = true)]
    Switching(SwitchArgs),
    /// Pauli-frame experiment only.
    #[command(args_override_self = true)]
    Frame(SwitchArgs),
    /// Quasi-probability estimate of a Pauli observable.
    #[command(args_override_self = true)]
    Qpd(QpdArgs),
    /// Learn ε̄ from simulated f(p) decay data.
    #[command(args_override_self = true)]
    Learn(LearnArgs),
    /// Sampling-overhead planning.
    #[command(args_override_self = true)]
    Plan(PlanArgs),
    /// Print the stabilizers and logicals of S1 and S2.
    #[command(args_override_self = true)]
    DumpCode(DumpArgs),
}

#[derive(Args, Serialize, Clone)]
struct Output {
    /// CSV output path; the JSON sidecar is written next to it. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, env = "EMT_THREADS", default_value_t = 0)]
    threads: usize,
    /// key = value file of flags; explicit flags win.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Serialize, Clone)]
struct SwitchArgs {
    /// Code distances, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, action = ArgAction::Set)]
    d: Vec<usize>,
    /// Physical error rates, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, action = ArgAction::Set)]
    epsilon: Vec<f64>,
    /// S2 cycles.
    #[arg(long, default_value_t = 3)]
    l: usize,
    /// Noisy S1 cycles after switching back (default d).
    #[arg(long)]
    s1_cycles: Option<usize>,
    #[arg(long, default_value_t = 50_000)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    /// Use L = 2 when the first two G syndromes agree.
    #[arg(long)]
    adaptive_l: bool,
    /// Unit matching weights instead of log-likelihood weights.
    #[arg(long)]
    unit_weights: bool,
    /// Let CNOT faults include the identity (16 outcomes instead of 15).
    #[arg(long)]
    cnot_includes_identity: bool,
    /// Keep rows already in --out and run only the missing ones.
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
struct SwitchRow {
    experiment: String,
    d: usize,
    epsilon: f64,
    #[serde(rename = "L")]
    l: usize,
    adaptive_l: bool,
    s1_cycles: usize,
    unit_weights: bool,
    cnot_includes_identity: bool,
    trials: u64,
    frame_errors: Option<u64>,
    p_f: Option<f64>,
    p_f_lo: Option<f64>,
    p_f_hi: Option<f64>,
    z_errors: Option<u64>,
    p_z: Option<f64>,
    p_z_lo: Option<f64>,
    p_z_hi: Option<f64>,
    x_errors: Option<u64>,
    p_x: Option<f64>,
    p_x_lo: Option<f64>,
    p_x_hi: Option<f64>,
    combined: Option<f64>,
    mean_l: f64,
    seed: u64,
}

impl SwitchRow {
    fn same_point(&self, other: &SwitchRow) -> bool {
        self.experiment == other.experiment
            && self.d == other.d
            && self.epsilon.to_bits() == other.epsilon.to_bits()
            && self.l == other.l
            && self.adaptive_l == other.adaptive_l
            && self.s1_cycles == other.s1_cycles
            && self.unit_weights == other.unit_weights
            && self.cnot_includes_identity == other.cnot_includes_identity
            && self.trials == other.trials
            && self.seed == other.seed
    }
}

fn switching_config(a: &SwitchArgs, d: usize, eps: f64) -> Result<SwitchingConfig> {
    let mut c = SwitchingConfig::new(d, eps);
    c.l = a.l;
    c.s1_cycles = a.s1_cycles.unwrap_or(d);
    c.trials = a.trials;
    c.adaptive_l = a.adaptive_l;
    c.unit_weights = a.unit_weights;
    c.cnot_includes_identity = a.cnot_includes_identity;
    c.seed = derive_seed(a.seed, &[d as u64, eps.to_bits(), a.l as u64, a.adaptive_l as u64]);
    c.validate().with_context(|| format!("d={d}, epsilon={eps}"))?;
    Ok(c)
}

fn run_switching(a: &SwitchArgs, full: bool) -> Result<Summary<()>> {
    let name = if full { "switching" } else { "frame" };
    let configs: Vec<SwitchingConfig> = a
        .d
        .iter()
        .flat_map(|&d| a.epsilon.iter().map(move |&e| (d, e)))
        .map(|(d, e)| switching_config(a, d, e))
        .collect::<Result<_>>()?;
    let mut sink = RowSink::<SwitchRow>::open(a.output.out.as_deref(), a.resume)?;
    let (mut written, mut resumed) = (0, 0);
    for c in configs {
        let mut row = SwitchRow {
            experiment: name.into(),
            d: c.d,
            epsilon: c.epsilon,
            l: c.l,
            adaptive_l: c.adaptive_l,
            s1_cycles: c.s1_cycles,
            unit_weights: c.unit_weights,
            cnot_includes_identity: c.cnot_includes_identity,
            trials: c.trials,
            frame_errors: None,
            p_f: None,
            p_f_lo: None,
            p_f_hi: None,
            z_errors: None,
            p_z: None,
            p_z_lo: None,
            p_z_hi: None,
            x_errors: None,
            p_x: None,
            p_x_lo: None,
            p_x_hi: None,
            combined: None,
            mean_l: 0.0,
            seed: a.seed,
        };
        if sink.existing().iter().any(|r| r.same_point(&row)) {
            resumed += 1;
            continue;
        }
        let frame = Switching::new(Experiment::Frame, c)?.estimate();
        let pf = RateEstimate::new(frame.frame_errors, frame.trials);
        (row.frame_errors, row.p_f, row.p_f_lo, row.p_f_hi) = (Some(pf.successes), Some(pf.rate), Some(pf.lo), Some(pf.hi));
        row.mean_l = frame.mean_l();
        if full {
            let logical = Switching::new(Experiment::Logical, c)?.estimate();
            let pz = RateEstimate::new(logical.z_errors, logical.trials);
            let px = RateEstimate::new(logical.x_errors, logical.trials);
            (row.z_errors, row.p_z, row.p_z_lo, row.p_z_hi) = (Some(pz.successes), Some(pz.rate), Some(pz.lo), Some(pz.hi));
            (row.x_errors, row.p_x, row.p_x_lo, row.p_x_hi) = (Some(px.successes), Some(px.rate), Some(px.lo), Some(px.hi));
            row.combined = Some(pz.rate + pf.rate / 2.0);
            row.mean_l = logical.mean_l();
        }
        sink.write(&row)?;
        written += 1;
    }
    Ok(Summary { written, resumed, extra: () })
}

#[derive(Args, Serialize, Clone)]
struct QpdArgs {
    /// Clifford+T circuit file (QUBITS / TICK text format).
    #[arg(long)]
    circuit: PathBuf,
    /// Pauli observable such as +ZZI.
    #[arg(long)]
    observable: String,
    /// Logical T error rates, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, action = ArgAction::Set)]
    eps_bar: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    resume: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
struct QpdRow {
    circuit: String,
    observable: String,
    eps_bar: f64,
    shots: u64,
    t_count: usize,
    gamma_total: f64,
    mean: f64,
    std_error: f64,
    ideal: f64,
    seed: u64,
}

fn run_qpd(a: &QpdArgs) -> Result<Summary<()>> {
    let text = std::fs::read_to_string(&a.circuit).with_context(|| format!("reading {}", a.circuit.display()))?;
    let circ: emt_core::circuit::Circuit = text.parse().context("parsing --circuit")?;
    let obs: PauliOperator = a.observable.parse().context("parsing --observable")?;
    let ideal = ideal_expectation(&circ, &obs).context("--observable")?;
    for &e in &a.eps_bar {
        emt_core::mitigation::qpd_coefficients(e)?;
    }
    let mut sink = RowSink::<QpdRow>::open(a.output.out.as_deref(), a.resume)?;
    let (mut written, mut resumed) = (0, 0);
    let name = a.circuit.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for &eps in &a.eps_bar {
        let done = sink.existing().iter().any(|r| {
            r.circuit == name && r.observable == a.observable && r.eps_bar.to_bits() == eps.to_bits() && r.shots == a.shots && r.seed == a.seed
        });
        if done {
            resumed += 1;
            continue;
        }
        let est = qpd_estimate(&circ, &obs, eps, a.shots, derive_seed(a.seed, &[eps.to_bits()]))?;
        sink.write(&QpdRow {
            circuit: name.clone(),
            observable: a.observable.clone(),
            eps_bar: eps,
            shots: a.shots,
            t_count: circ.t_count(),
            gamma_total: est.gamma_total,
            mean: est.mean,
            std_error: est.std_error,
            ideal,
            seed: a.seed,
        })?;
        written += 1;
    }
    Ok(Summary { written, resumed, extra: () })
}

#[derive(Args, Serialize, Clone)]
struct LearnArgs {
    /// True logical error rate used to generate data.
    #[arg(long)]
    eps_bar: f64,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long)]
    seed: u64,
    /// Repetition counts (multiples of 8); chosen from a pilot fit if absent.
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set)]
    grid: Option<Vec<u64>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Serialize, Deserialize)]
struct LearnRow {
    p: u64,
    f_hat: f64,
    shots: u64,
    f_fit: f64,
    seed: u64,
}

#[derive(Serialize)]
struct FitSummary {
    eps_bar_hat: f64,
    std_error: f64,
    slope: f64,
    intercept: f64,
    excluded: Vec<u64>,
    pilot_eps_bar: f64,
}

fn run_learn(a: &LearnArgs) -> Result<Summary<FitSummary>> {
    let l = rate_learning::learn(a.eps_bar, a.shots, a.seed, a.grid.as_deref())?;
    for p in &l.fit.excluded {
        eprintln!("warning: p = {p} excluded from the fit (f_hat <= 1/2)");
    }
    let mut sink = RowSink::<LearnRow>::open(a.output.out.as_deref(), false)?;
    for pt in &l.data.points {
        let f_fit = 0.5 * (1.0 + (l.fit.intercept + l.fit.slope * pt.p as f64).exp());
        sink.write(&LearnRow { p: pt.p, f_hat: pt.f_hat, shots: pt.shots, f_fit, seed: a.seed })?;
    }
    Ok(Summary {
        written: l.data.points.len(),
        resumed: 0,
        extra: FitSummary {
            eps_bar_hat: l.fit.eps_bar,
            std_error: l.fit.std_error,
            slope: l.fit.slope,
            intercept: l.fit.intercept,
            excluded: l.fit.excluded.clone(),
            pilot_eps_bar: l.pilot.eps_bar,
        },
    })
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Exact,
    FirstOrder,
}

#[derive(Args, Serialize, Clone)]
struct PlanArgs {
    /// Physical error rates, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set)]
    epsilon: Option<Vec<f64>>,
    #[arg(long, default_value_t = planner::KAPPA_MAGIC)]
    kappa: f64,
    /// Total sampling overhead Γ², comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1000", action = ArgAction::Set)]
    total_cost: Vec<f64>,
    /// Target precision for the shot budget column.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Log-spaced ε grid from --eps-min to --eps-max instead of --epsilon.
    #[arg(long)]
    sweep: bool,
    #[arg(long, default_value_t = 1e-4)]
    eps_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    eps_max: f64,
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Emit the complexity comparison for these T-counts instead.
    #[arg(long, value_delimiter = ',', num_args = 1.., action = ArgAction::Set)]
    table_t: Option<Vec<u64>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Serialize, Deserialize)]
struct PlanRow {
    epsilon: f64,
    kappa: f64,
    mode: String,
    total_cost: f64,
    gamma: f64,
    max_t: f64,
    eta_over_eps: f64,
    max_t_plotted: f64,
    shots_required: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableRow {
    epsilon: f64,
    kappa: f64,
    mode: String,
    t: u64,
    conventional: f64,
    qpd: f64,
    classical: f64,
}

fn run_plan(a: &PlanArgs) -> Result<Summary<()>> {
    let mode = match a.mode {
        Mode::Exact => GammaMode::Exact,
        Mode::FirstOrder => GammaMode::FirstOrder,
    };
    let mode_name = a.mode.to_possible_value().expect("no skipped variants").get_name().to_string();
    let model = OverheadModel::new(a.kappa, mode)?;
    let eps = match (&a.epsilon, a.sweep) {
        (_, true) => {
            if !(a.eps_min > 0.0 && a.eps_max >= a.eps_min) {
                bail!("invalid parameter `eps-min`/`eps-max`: need 0 < eps-min <= eps-max");
            }
            planner::log_grid(a.eps_min, a.eps_max, a.points)
        }
        (Some(e), false) => e.clone(),
        (None, false) => bail!("invalid parameter `epsilon`: give --epsilon or --sweep"),
    };
    let mut written = 0;
    if let Some(ts) = &a.table_t {
        let mut sink = RowSink::<TableRow>::open(a.output.out.as_deref(), false)?;
        for &e in &eps {
            for r in planner::comparison_table(&model, e, ts)? {
                sink.write(&TableRow {
                    epsilon: e,
                    kappa: a.kappa,
                    mode: mode_name.clone(),
                    t: r.t,
                    conventional: r.conventional,
                    qpd: r.qpd,
                    classical: r.classical,
                })?;
                written += 1;
            }
        }
        return Ok(Summary { written, resumed: 0, extra: () });
    }
    let mut sink = RowSink::<PlanRow>::open(a.output.out.as_deref(), false)?;
    for r in planner::sweep(&model, &eps, &a.total_cost)? {
        let shots = a.delta.map(|d| planner::shots_required(r.total_cost.sqrt(), d)).transpose()?;
        sink.write(&PlanRow {
            epsilon: r.epsilon,
            kappa: a.kappa,
            mode: mode_name.clone(),
            total_cost: r.total_cost,
            gamma: r.gamma,
            max_t: r.max_t,
            eta_over_eps: r.eta_over_eps,
            max_t_plotted: r.max_t_plotted,
            shots_required: shots,
        })?;
        written += 1;
    }
    Ok(Summary { written, resumed: 0, extra: () })
}

#[derive(ValueEnum, Serialize, Clone, Copy)]
enum VariantArg {
    S1,
    S2,
    Both,
}

#[derive(Args, Serialize, Clone)]
struct DumpArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Both)]
    variant: VariantArg,
    /// Text output path. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_dump(a: &DumpArgs) -> Result<()> {
    let variants: &[Variant] = match a.variant {
        VariantArg::S1 => &[Variant::S1],
        VariantArg::S2 => &[Variant::S2],
        VariantArg::Both => &[Variant::S1, Variant::S2],
    };
    let mut text = String::new();
    for &v in variants {
        text += &build_code(a.d, v)?.describe();
    }
    match &a.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Summary<E> {
    written: usize,
    resumed: usize,
    extra: E,
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

fn finish<C: Serialize, E: Serialize>(
    command: &str,
    config: &C,
    output: &Output,
    started: Instant,
    summary: Summary<E>,
) -> Result<()> {
    let threads = if output.threads == 0 { rayon::current_num_threads() } else { output.threads };
    write_sidecar(
        output.out.as_deref(),
        &Sidecar {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            threads,
            wall_time_s: started.elapsed().as_secs_f64(),
            rows_written: summary.written,
            rows_resumed: summary.resumed,
            extra: summary.extra,
        },
    )
}

fn run(cli: Cli) -> Result<()> {
    let t0 = Instant::now();
    match &cli.cmd {
        Cmd::Switching(a) | Cmd::Frame(a) => {
            let full = matches!(cli.cmd, Cmd::Switching(_));
            let s = with_pool(a.output.threads, || run_switching(a, full))??;
            finish(if full { "switching" } else { "frame" }, a, &a.output, t0, s)
        }
        Cmd::Qpd(a) => {
            let s = with_pool(a.output.threads, || run_qpd(a))??;
            finish("qpd", a, &a.output, t0, s)
        }
        Cmd::Learn(a) => {
            let s = with_pool(a.output.threads, || run_learn(a))??;
            finish("learn", a, &a.output, t0, s)
        }
        Cmd::Plan(a) => {
            let s = run_plan(a)?;
            finish("plan", a, &a.output, t0, s)
        }
        Cmd::DumpCode(a) => run_dump(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::splice(std::env::args().collect()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
