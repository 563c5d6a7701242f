//! Command-line front end: model training, probe generation, simulation,
//! reconstruction, bound reports and noise sweeps.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or parse
//! error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phaseprior::bench::{
    add_noise, complexify, load_pixels, relative_error, run_plan, split_dataset, LambdaRule,
    SweepPlan,
};
use phaseprior::bounds::{estimate_constants, BoundInputs, BoundReport};
use phaseprior::formats::{read_signal, write_signal, Measurements};
use phaseprior::generative::{train_pca, GenerativeModel};
use phaseprior::measurement::{make_probes, MeasurementOperator, ProbeSet};
use phaseprior::optimize::{reconstruct, FormulationKind, SolverConfig, UnifiedProblem};
use phaseprior::rng::derive_seed;
use phaseprior::{Complex64, Error, Result};

#[derive(Parser)]
#[command(
    name = "phaseprior",
    version,
    about = "Phase retrieval with a generative prior"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a PCA model from a pixel CSV and write the model file.
    Train(TrainArgs),
    /// Draw random binary probes and write the probe file.
    Probes(ProbesArgs),
    /// Simulate noisy intensity measurements of a ground-truth signal.
    Simulate(SimulateArgs),
    /// Reconstruct a signal from measurements, optionally with a bound report.
    Reconstruct(ReconstructArgs),
    /// Run a noise-level sweep from a configuration file.
    Sweep(SweepArgs),
    /// Compute a bound report for an existing reconstruction.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// CSV of pixel rows (optionally followed by a label column).
    #[arg(long)]
    dataset: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Pixels per row.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Latent dimension.
    #[arg(long, default_value_t = 30)]
    k: usize,
    /// Master seed for complexification and the holdout split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of samples held out from training.
    #[arg(long, default_value_t = 0.2)]
    holdout_fraction: f64,
}

#[derive(Args)]
struct ProbesArgs {
    #[arg(long)]
    out: PathBuf,
    /// Number of probes.
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Signal length.
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    probes: PathBuf,
    /// Output measurement file.
    #[arg(long)]
    out: PathBuf,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground truth from a signal file.
    #[arg(long, conflicts_with_all = ["model", "dataset"])]
    signal: Option<PathBuf>,
    /// Ground truth drawn from this model (needs --n-train).
    #[arg(long, requires = "n_train", conflicts_with = "dataset")]
    model: Option<PathBuf>,
    /// Training-set size of the model, which scales latent sampling.
    #[arg(long)]
    n_train: Option<usize>,
    /// Ground truth taken from the complexified dataset (needs --index).
    #[arg(long, requires = "index")]
    dataset: Option<PathBuf>,
    /// Row of the dataset to use.
    #[arg(long)]
    index: Option<usize>,
    /// Also write the ground truth to this signal file.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    grad_tol: f64,
    #[arg(long, default_value_t = 10)]
    memory: usize,
    #[arg(long, default_value_t = 1.0)]
    init_scale: f64,
    /// Seed of the random restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            memory: self.memory,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            restarts: self.restarts,
            init_scale: self.init_scale,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct EstimationArgs {
    /// Training-set size of the model, which scales latent sampling.
    #[arg(long)]
    n_train: Option<usize>,
    /// Ground-truth signal; gives the exact bias. Without it the bias of the
    /// reconstruction is used.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Sampled pairs per constant.
    #[arg(long, default_value_t = 10_000)]
    pairs: usize,
    /// Standard deviation of the Gaussian perturbation of sampled signals.
    #[arg(long, default_value_t = 0.1)]
    perturbation: f64,
    #[arg(long, default_value_t = 0)]
    bounds_seed: u64,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    probes: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    /// conventional, generative or combined.
    #[arg(long)]
    method: FormulationKind,
    /// Model file (required for generative, combined and bound reports).
    #[arg(long)]
    model: Option<PathBuf>,
    /// paper, zero or fixed:<value>.
    #[arg(long, default_value = "paper")]
    lambda_rule: LambdaRule,
    /// Output signal file.
    #[arg(long)]
    out: PathBuf,
    /// Also write a bound report here.
    #[arg(long, requires_all = ["model", "n_train"])]
    report: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    estimation: EstimationArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Configuration file (`key = value` lines).
    config: PathBuf,
    /// Do not report progress on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    probes: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    measurements: PathBuf,
    /// The reconstruction to evaluate.
    #[arg(long)]
    signal: PathBuf,
    /// Penalty weight entering the combined bound.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Output report file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    estimation: EstimationArgs,
}

fn operator(path: &PathBuf) -> Result<MeasurementOperator> {
    MeasurementOperator::new(ProbeSet::read(path)?)
}

fn train(args: TrainArgs) -> Result<()> {
    let pixels = load_pixels(&args.dataset, args.n)?;
    let (train, holdout) = split_dataset(&pixels, args.seed, args.holdout_fraction)?;
    let model = train_pca(&train, args.k)?;
    model.write(&args.out)?;
    println!(
        "n {}\nk {}\nn_train {}\nn_holdout {}\nrank_deficient {}",
        model.n(),
        model.k(),
        train.len(),
        holdout.len(),
        model.rank_deficient()
    );
    Ok(())
}

fn probes(args: ProbesArgs) -> Result<()> {
    make_probes(args.count, args.n, args.seed)?.write(&args.out)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let op = operator(&args.probes)?;
    let truth = if let Some(path) = &args.signal {
        read_signal(path)?
    } else if let Some(path) = &args.model {
        let model = GenerativeModel::read(path)?;
        let n_train = args.n_train.expect("clap enforces --n-train");
        model.generate(&model.sample_latent(derive_seed(args.seed, &[1]), n_train)?)?
    } else if let Some(path) = &args.dataset {
        // Same complexification as `train` and the sweep with this seed.
        let all = complexify(&load_pixels(path, op.n())?, derive_seed(args.seed, &[10]))?;
        let index = args.index.expect("clap enforces --index");
        all.get(index).cloned().ok_or_else(|| {
            Error::Parameter(format!("index {index} out of range ({} rows)", all.len()))
        })?
    } else {
        return Err(Error::Parameter(
            "one of --signal, --model or --dataset is required".into(),
        ));
    };
    let clean = op.forward(&truth)?;
    let (values, noise_norm) = add_noise(&clean, args.sigma, derive_seed(args.seed, &[3]))?;
    Measurements {
        values,
        sigma: args.sigma,
        noise_norm,
    }
    .write(&args.out)?;
    if let Some(path) = &args.truth_out {
        write_signal(path, &truth)?;
    }
    Ok(())
}

fn bound_report(
    op: &MeasurementOperator,
    model: &GenerativeModel,
    meas: &Measurements,
    signal: &[Complex64],
    lambda: f64,
    est: &EstimationArgs,
) -> Result<BoundReport> {
    let n_train = est
        .n_train
        .ok_or_else(|| Error::Parameter("--n-train is required for bound reports".into()))?;
    let constants = estimate_constants(
        op,
        model,
        n_train,
        est.perturbation,
        est.pairs,
        est.bounds_seed,
    )?;
    let bias = match &est.truth {
        Some(path) => model.bias_of(&read_signal(path)?)?,
        None => model.bias_of(signal)?,
    };
    BoundReport::new(
        &constants,
        BoundInputs {
            lambda,
            bias,
            eps_norm: meas.noise_norm,
            residual: op.residual(signal, &meas.values)?,
        },
    )
}

fn reconstruct_cmd(args: ReconstructArgs) -> Result<()> {
    let op = operator(&args.probes)?;
    let meas = Measurements::read(&args.measurements)?;
    let model = args.model.as_ref().map(GenerativeModel::read).transpose()?;
    let form = args
        .lambda_rule
        .formulation(args.method, model.as_ref(), op.n(), meas.sigma)?;
    let lambda = form.lambda();
    let problem = UnifiedProblem::new(form, op.clone(), meas.values.clone())?;
    let result = reconstruct(&problem, &args.solver.config())?;
    write_signal(&args.out, &result.signal)?;
    println!("method {}", args.method);
    println!("lambda {lambda:e}");
    println!("objective {:e}", result.objective_value);
    println!("residual {:e}", result.residual);
    println!("iterations {}", result.iterations);
    println!("converged {}", result.converged);
    println!("termination {:?}", result.termination);
    println!("restart {}", result.restart_index);
    if let Some(path) = &args.estimation.truth {
        println!(
            "relative_error {:e}",
            relative_error(&result.signal, &read_signal(path)?)?
        );
    }
    if let (Some(path), Some(model)) = (&args.report, &model) {
        bound_report(&op, model, &meas, &result.signal, lambda, &args.estimation)?.write(path)?;
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let plan = SweepPlan::read(&args.config)?;
    let total = plan.experiment.sigma_grid.len()
        * plan.experiment.scenarios.len()
        * plan.experiment.methods.len()
        * plan.experiment.trials;
    let mut done = 0;
    let result = run_plan(&plan, |r| {
        done += 1;
        if !args.quiet {
            eprintln!(
                "[{done}/{total}] sigma {:.3e} {} {} trial {}: error {:.3e}",
                r.sigma, r.scenario, r.method, r.trial, r.relative_error
            );
        }
    })?;
    println!("sigma,scenario,method,mean_snr_db,mean_relative_error");
    for c in result.cells() {
        println!(
            "{:e},{},{},{:.2},{:e}",
            c.sigma, c.scenario, c.method, c.mean_snr_db, c.mean_error
        );
    }
    Ok(())
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let op = operator(&args.probes)?;
    let model = GenerativeModel::read(&args.model)?;
    let meas = Measurements::read(&args.measurements)?;
    let signal = read_signal(&args.signal)?;
    let report = bound_report(&op, &model, &meas, &signal, args.lambda, &args.estimation)?;
    match &args.out {
        Some(path) => report.write(path),
        None => {
            print!("{}", report.to_text());
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parameter(_) | Error::Config(_) => 1,
        Error::Dimension { .. } | Error::Dataset(_) | Error::Parse { .. } | Error::Io { .. } => 2,
        Error::Estimation(_) | Error::Numerical(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Train(a) => train(a),
        Command::Probes(a) => probes(a),
        Command::Simulate(a) => simulate(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Bounds(a) => bounds(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
