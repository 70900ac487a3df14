use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddtraj::ddsim::{
    ddsim_exact, ddsim_kernel, ddsim_regularized, DDSimProblem, DDSimResult, KernelDDSim,
};
use ddtraj::lift::Kernel;
use ddtraj::oracle::{add_multiplicative_noise, simulate, uniform_signal, NoiseSpec};
use ddtraj::trajcore::{is_persistently_exciting, DEFAULT_RANK_TOLERANCE};
use ddtraj::trajspace::{membership, TrajectoryBasis};
use ddtraj::weave::{assemble, solve_weave, WeavePlan, DEFAULT_JUNCTION_TOLERANCE};
use ddtraj::Trajectory;
use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{
    pick, require_nonnegative, require_positive, resolve_seed, DistributionName, KernelKind,
    RunConfig,
};
use crate::csvio::{parse_trajectory_csv, write_comparison, write_trajectory};
use crate::error::CliError;
use crate::example1::{self, Example1Settings};

const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "ddtraj",
    version,
    about = "Trajectory-based analysis and data-driven simulation"
)]
pub struct Cli {
    /// TOML configuration file; flags take precedence over its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a state-space model under random uniform input and write the trajectory.
    Simulate(SimulateArgs),
    /// Check persistence of excitation of a recorded signal (exit 1 if not exciting).
    CheckPe(CheckPeArgs),
    /// Test whether a candidate is a trajectory of the system that produced the data
    /// (exit 1 if it is not).
    Membership(MembershipArgs),
    /// Represent a long target trajectory by overlapping short windows of the data.
    Weave(WeaveArgs),
    /// Predict the output for a new input from data and an initial window (linear).
    Ddsim(DdsimArgs),
    /// Kernelized prediction for Hammerstein systems.
    DdsimKernel(DdsimKernelArgs),
    /// Run the noisy Hammerstein benchmark and write true vs. predicted output.
    Example1(Example1Args),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model preset: example1 or example1-linear (default: config, else example1).
    #[arg(long)]
    pub model: Option<String>,
    /// Number of samples.
    #[arg(long)]
    pub length: Option<usize>,
    /// Input is uniform on [-amplitude, amplitude].
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Initial state, comma separated (default: zero).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplicative output noise ratio.
    #[arg(long)]
    pub noise_ratio: Option<f64>,
    #[arg(long, value_enum)]
    pub noise_distribution: Option<DistributionName>,
    /// Output CSV (default: config, else stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SignalChoice {
    U,
    Y,
}

#[derive(Debug, Args)]
pub struct CheckPeArgs {
    /// Trajectory CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Order of excitation (Hankel depth).
    #[arg(long, short = 'L')]
    pub order: Option<usize>,
    #[arg(long, value_enum, default_value = "u")]
    pub signal: SignalChoice,
    #[arg(long)]
    pub rank_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MembershipArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Candidate trajectory CSV; its length is the window length.
    #[arg(long)]
    pub candidate: PathBuf,
    /// Upper bound on the system order.
    #[arg(long, short = 'n')]
    pub order_bound: Option<usize>,
    /// Residual tolerance, relative to max(1, ||candidate||).
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub rank_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct WeaveArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Target trajectory CSV of length xi*L - (xi-1)*n.
    #[arg(long)]
    pub target: PathBuf,
    /// Segment length L.
    #[arg(long, short = 'L')]
    pub horizon: Option<usize>,
    #[arg(long, short = 'n')]
    pub order_bound: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DdsimArgs {
    /// Measured trajectory CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Trajectory CSV holding the new input; only the first init-len outputs are read.
    #[arg(long)]
    pub input: PathBuf,
    /// Initial window length nu (default: order bound).
    #[arg(long)]
    pub init_len: Option<usize>,
    #[arg(long, short = 'n')]
    pub order_bound: Option<usize>,
    /// Ridge weight; 0 selects the minimum-norm exact solution.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kernel: Option<KernelKind>,
    /// Squared exponential width.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Polynomial kernel degree.
    #[arg(long)]
    pub degree: Option<u32>,
    /// Polynomial kernel offset.
    #[arg(long)]
    pub offset: Option<f64>,
    /// Explicit basis, e.g. "sin,cos,u^2".
    #[arg(long, value_delimiter = ',')]
    pub basis: Option<Vec<String>>,
}

impl KernelArgs {
    fn build(&self, config: &RunConfig) -> Result<Kernel, CliError> {
        config.kernel.build(
            self.kernel,
            self.sigma,
            self.degree,
            self.offset,
            self.basis.clone(),
        )
    }
}

#[derive(Debug, Args)]
pub struct DdsimKernelArgs {
    #[command(flatten)]
    pub sim: DdsimArgs,
    #[command(flatten)]
    pub kernel: KernelArgs,
}

#[derive(Debug, Args)]
pub struct Example1Args {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Length of the measured record.
    #[arg(long)]
    pub data_len: Option<usize>,
    /// Data input is uniform on [-a, a].
    #[arg(long)]
    pub data_amplitude: Option<f64>,
    /// Test input is uniform on [-a, a].
    #[arg(long)]
    pub test_amplitude: Option<f64>,
    #[arg(long, short = 'L')]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub init_len: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub noise_ratio: Option<f64>,
    #[arg(long, value_enum)]
    pub noise_distribution: Option<DistributionName>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Output CSV with columns k,y_true,y_pred (default: config, else stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Result of a command that ran to completion. `success = false` is a negative
/// verdict (exit 1), not an error.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub success: bool,
}

impl Outcome {
    fn ok(report: Value) -> Self {
        Self {
            report,
            success: true,
        }
    }

    pub fn exit_code(&self) -> u8 {
        if self.success {
            0
        } else {
            1
        }
    }
}

/// Where a command's CSV artifact goes. The JSON report is printed on stdout unless
/// the artifact already occupies it.
enum Sink {
    File(PathBuf),
    Stdout,
}

impl Sink {
    fn resolve(flag: &Option<PathBuf>, config: &RunConfig) -> Self {
        match flag.clone().or_else(|| config.output.path.clone()) {
            Some(p) => Sink::File(p),
            None => Sink::Stdout,
        }
    }

    fn write(
        &self,
        f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
    ) -> Result<(), CliError> {
        match self {
            Sink::File(p) => {
                let mut file = std::fs::File::create(p).map_err(|e| CliError::io(p, e))?;
                f(&mut file)
            }
            Sink::Stdout => f(&mut std::io::stdout().lock()),
        }
    }

    fn report_on_stderr(&self) -> bool {
        matches!(self, Sink::Stdout)
    }

    fn describe(&self) -> Value {
        match self {
            Sink::File(p) => json!(p.display().to_string()),
            Sink::Stdout => Value::Null,
        }
    }
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let (outcome, sink_on_stdout) = match &cli.command {
        Command::Simulate(a) => run_simulate(a, &config)?,
        Command::CheckPe(a) => (run_check_pe(a, &config)?, false),
        Command::Membership(a) => (run_membership(a, &config)?, false),
        Command::Weave(a) => run_weave(a, &config)?,
        Command::Ddsim(a) => run_ddsim(a, None, &config)?,
        Command::DdsimKernel(a) => run_ddsim(&a.sim, Some(&a.kernel), &config)?,
        Command::Example1(a) => run_example1(a, &config)?,
    };
    let line = outcome.report.to_string();
    if sink_on_stdout {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
    Ok(outcome)
}

fn load(path: &Path) -> Result<Trajectory, CliError> {
    parse_trajectory_csv(path)
}

fn order_bound(flag: Option<usize>, config: &RunConfig) -> Result<usize, CliError> {
    flag.or(config.window.order_bound).ok_or_else(|| {
        CliError::usage("an order bound is required (--order-bound or window.order_bound)")
    })
}

fn run_simulate(a: &SimulateArgs, config: &RunConfig) -> Result<(Outcome, bool), CliError> {
    let model = config.model.build(a.model.as_deref())?;
    let len = pick(a.length, &config.signal.length, 1000);
    let amp = require_nonnegative(
        "amplitude",
        pick(a.amplitude, &config.signal.amplitude, 1.0),
    )?;
    let seed = resolve_seed(a.seed, config)?;
    let ratio = require_nonnegative("noise ratio", pick(a.noise_ratio, &config.noise.ratio, 0.0))?;
    let dist = pick(
        a.noise_distribution,
        &config.noise.distribution,
        DistributionName::Uniform,
    );
    let x0 = match &a.x0 {
        Some(v) if v.len() != model.order() => {
            return Err(CliError::usage(format!(
                "x0 has {} entries, model order is {}",
                v.len(),
                model.order()
            )))
        }
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(model.order()),
    };
    if len == 0 {
        return Err(CliError::usage("length must be positive"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = uniform_signal(&mut rng, model.input_dim(), len, -amp, amp)?;
    let mut y = simulate(&model, &x0, &u)?.y;
    if ratio > 0.0 {
        y = add_multiplicative_noise(
            &y,
            &NoiseSpec::new(ratio, seed.wrapping_add(1), dist.into())?,
        );
    }
    let t = Trajectory::new(u, y)?;
    let sink = Sink::resolve(&a.output, config);
    sink.write(|w| write_trajectory(w, &t))?;
    let report = json!({
        "command": "simulate",
        "model": model_name(&model),
        "length": len,
        "seed": seed,
        "noise_ratio": ratio,
        "output": sink.describe(),
    });
    Ok((Outcome::ok(report), sink.report_on_stderr()))
}

fn model_name(model: &ddtraj::oracle::StateSpaceModel) -> String {
    format!(
        "order {} ({} -> linear -> {})",
        model.order(),
        model.input_map().name(),
        model.output_map().name()
    )
}

fn run_check_pe(a: &CheckPeArgs, config: &RunConfig) -> Result<Outcome, CliError> {
    let data = load(&a.data)?;
    let order = a
        .order
        .or(config.window.horizon)
        .ok_or_else(|| CliError::usage("an order is required (--order or window.horizon)"))?;
    let tol = require_positive(
        "rank tolerance",
        pick(
            a.rank_tolerance,
            &config.tolerances.rank,
            DEFAULT_RANK_TOLERANCE,
        ),
    )?;
    let x = match a.signal {
        SignalChoice::U => data.u(),
        SignalChoice::Y => data.y(),
    };
    let pe = is_persistently_exciting(x, order, tol)?;
    let report = json!({
        "command": "check-pe",
        "signal": format!("{:?}", a.signal).to_lowercase(),
        "order": order,
        "length": x.len(),
        "persistently_exciting": pe.persistently_exciting,
        "numerical_rank": pe.numerical_rank,
        "required_rank": pe.required_rank,
        "singular_values": pe.singular_values,
    });
    Ok(Outcome {
        report,
        success: pe.persistently_exciting,
    })
}

fn diagnostics_json(diagnostics: &[ddtraj::trajspace::Diagnostic]) -> Value {
    for d in diagnostics {
        eprintln!("warning: {d}");
    }
    json!(diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>())
}

fn run_membership(a: &MembershipArgs, config: &RunConfig) -> Result<Outcome, CliError> {
    let data = load(&a.data)?;
    let candidate = load(&a.candidate)?;
    let n = order_bound(a.order_bound, config)?;
    let tol = require_positive(
        "tolerance",
        pick(
            a.tolerance,
            &config.tolerances.residual,
            DEFAULT_RESIDUAL_TOLERANCE,
        ),
    )?;
    let rank_tol = require_positive(
        "rank tolerance",
        pick(
            a.rank_tolerance,
            &config.tolerances.rank,
            DEFAULT_RANK_TOLERANCE,
        ),
    )?;
    let basis = TrajectoryBasis::with_rank_tolerance(data, candidate.len(), n, rank_tol)?;
    let m = membership(&basis, &candidate, tol)?;
    let report = json!({
        "command": "membership",
        "horizon": candidate.len(),
        "order_bound": n,
        "is_member": m.is_member,
        "residual": m.residual,
        "persistently_exciting": basis.pe_verified(),
        "diagnostics": diagnostics_json(&m.diagnostics),
    });
    Ok(Outcome {
        report,
        success: m.is_member,
    })
}

fn run_weave(a: &WeaveArgs, config: &RunConfig) -> Result<(Outcome, bool), CliError> {
    let data = load(&a.data)?;
    let target = load(&a.target)?;
    let n = order_bound(a.order_bound, config)?;
    let horizon = a.horizon.or(config.window.horizon).ok_or_else(|| {
        CliError::usage("a segment length is required (--horizon or window.horizon)")
    })?;
    let tol = require_positive(
        "tolerance",
        pick(
            a.tolerance,
            &config.tolerances.residual,
            DEFAULT_RESIDUAL_TOLERANCE,
        ),
    )?;
    let junction = require_positive(
        "junction tolerance",
        pick(
            None,
            &config.tolerances.junction,
            DEFAULT_JUNCTION_TOLERANCE,
        ),
    )?;
    let rank_tol = require_positive(
        "rank tolerance",
        pick(None, &config.tolerances.rank, DEFAULT_RANK_TOLERANCE),
    )?;

    let basis = TrajectoryBasis::with_rank_tolerance(data, horizon, n, rank_tol)?;
    let plan = WeavePlan::for_length(&basis, target.len())?.with_junction_tolerance(junction);
    let sol = solve_weave(&plan, &target, tol)?;
    let sink = Sink::resolve(&a.output, config);
    let mut on_stdout = false;
    if sol.is_trajectory {
        let woven = assemble(&plan, &sol.coeffs)?;
        sink.write(|w| write_trajectory(w, &woven))?;
        on_stdout = sink.report_on_stderr();
    }
    let report = json!({
        "command": "weave",
        "segments": plan.segments(),
        "woven_len": plan.woven_len(),
        "residual": sol.residual,
        "is_trajectory": sol.is_trajectory,
        "diagnostics": diagnostics_json(&sol.diagnostics),
        "output": if sol.is_trajectory { sink.describe() } else { Value::Null },
    });
    Ok((
        Outcome {
            report,
            success: sol.is_trajectory,
        },
        on_stdout,
    ))
}

fn run_ddsim(
    a: &DdsimArgs,
    kernel: Option<&KernelArgs>,
    config: &RunConfig,
) -> Result<(Outcome, bool), CliError> {
    let data = load(&a.data)?;
    let input = load(&a.input)?;
    let n_bound = a.order_bound.or(config.window.order_bound);
    let init_len = a
        .init_len
        .or(config.window.init_len)
        .or(n_bound)
        .ok_or_else(|| {
            CliError::usage("an initial window length is required (--init-len or --order-bound)")
        })?;
    if init_len == 0 || init_len > input.len() {
        return Err(CliError::usage(format!(
            "initial window length {init_len} must be between 1 and the input length {}",
            input.len()
        )));
    }
    let lambda = require_nonnegative("lambda", pick(a.lambda, &config.solver.lambda, 0.0))?;
    let init = input.segment(0, init_len - 1)?;
    let u_bar = input.u().clone();

    let (name, result, kernel_desc): (&str, DDSimResult, Value) = match kernel {
        None => {
            let r = match (lambda, n_bound) {
                (0.0, Some(n)) => ddsim_exact(&data, &u_bar, &init, n)?,
                _ => {
                    let mut p =
                        DDSimProblem::new(data, u_bar.clone(), init)?.with_lambda(lambda)?;
                    if let Some(n) = n_bound {
                        p = p.with_order_bound(n);
                    }
                    ddsim_regularized(&p)?
                }
            };
            ("ddsim", r, Value::Null)
        }
        Some(k) => {
            let k = k.build(config)?;
            let desc = json!(format!("{k:?}"));
            let mut cfg = KernelDDSim::new(k, Kernel::linear(), lambda)?;
            if let Some(n) = n_bound {
                cfg = cfg.with_order_bound(n);
            }
            (
                "ddsim-kernel",
                ddsim_kernel(&data, &u_bar, &init, &cfg)?,
                desc,
            )
        }
    };

    let predicted = Trajectory::new(u_bar, result.predicted_output.clone())?;
    let sink = Sink::resolve(&a.output, config);
    sink.write(|w| write_trajectory(w, &predicted))?;
    let mut report = json!({
        "command": name,
        "horizon": predicted.len(),
        "init_len": init_len,
        "lambda": lambda,
        "residual": result.residual,
        "objective": result.objective_value,
        "diagnostics": diagnostics_json(&result.diagnostics),
        "output": sink.describe(),
    });
    if !kernel_desc.is_null() {
        report["kernel"] = kernel_desc;
    }
    Ok((Outcome::ok(report), sink.report_on_stderr()))
}

fn run_example1(a: &Example1Args, config: &RunConfig) -> Result<(Outcome, bool), CliError> {
    let d = Example1Settings::default();
    let settings = Example1Settings {
        seed: resolve_seed(a.seed, config)?,
        data_len: pick(a.data_len, &config.signal.length, d.data_len),
        data_amplitude: require_nonnegative(
            "data amplitude",
            pick(a.data_amplitude, &config.signal.amplitude, d.data_amplitude),
        )?,
        test_amplitude: require_nonnegative(
            "test amplitude",
            pick(
                a.test_amplitude,
                &config.signal.test_amplitude,
                d.test_amplitude,
            ),
        )?,
        horizon: pick(a.horizon, &config.window.horizon, d.horizon),
        init_len: pick(a.init_len, &config.window.init_len, d.init_len),
        lambda: require_nonnegative("lambda", pick(a.lambda, &config.solver.lambda, d.lambda))?,
        kernel: a.kernel.build(config)?,
        noise_ratio: require_nonnegative(
            "noise ratio",
            pick(a.noise_ratio, &config.noise.ratio, d.noise_ratio),
        )?,
        noise_distribution: pick(
            a.noise_distribution,
            &config.noise.distribution,
            DistributionName::Uniform,
        )
        .into(),
    };
    let run = example1::run(&settings)?;
    let sink = Sink::resolve(&a.output, config);
    sink.write(|w| write_comparison(w, &run.true_output, &run.predicted_output))?;
    let report = json!({
        "command": "example1",
        "seed": settings.seed,
        "lambda": settings.lambda,
        "relative_rms": run.relative_rms,
        "output": sink.describe(),
    });
    Ok((Outcome::ok(report), sink.report_on_stderr()))
}
