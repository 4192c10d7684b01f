use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use amp_harness::output::write_outputs;
use amp_harness::{run, ExperimentKind, ExperimentSpec, HarnessError, Result};
use amp_lasso::mp::quad_mp_run;
use amp_lasso::state_evolution::{boundary_alpha, se_run};
use amp_lasso::{
    alpha_min, amp_run, calibrate, gen_instance, ist_run, lasso_kkt_gap, lasso_objective, lasso_risk, rho_c,
    DiscretePrior, Ensemble, Estimator, ModelParams, TauMode, ThresholdPolicy,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// LASSO reconstruction by approximate message passing, state-evolution
/// predictions and the Monte Carlo experiments that compare the two.
#[derive(Parser)]
#[command(name = "amp-lasso", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one random instance and print a summary with the KKT gap.
    Solve(SolveArgs),
    /// State-evolution trajectory and fixed point for a threshold multiplier.
    Se(SeArgs),
    /// Map a threshold multiplier to its LASSO regularization, or back.
    Calibrate(CalibrateArgs),
    /// Noise-sensitivity phase boundary: a single point or the full curves.
    Phase(PhaseArgs),
    /// Run an experiment from a JSON spec or from flags.
    Experiment(ExperimentArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Undersampling ratio m/n.
    #[arg(long, default_value_t = 0.64)]
    delta: f64,
    /// Noise variance.
    #[arg(long, default_value_t = 0.2)]
    sigma2: f64,
    /// Signal prior: `three-point:EPS`, `point:C` or `atoms=[..] weights=[..]`.
    #[arg(long, default_value = "three-point:0.128")]
    prior: DiscretePrior,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.delta, self.sigma2, self.prior.clone())?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Amp,
    Ist,
    Mp,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, value_enum, default_value_t = EngineArg::Amp)]
    engine: EngineArg,
    /// Threshold multiplier; mutually exclusive with --lambda.
    #[arg(long, conflicts_with = "lambda")]
    alpha: Option<f64>,
    /// LASSO regularization to target.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value = "gaussian")]
    ensemble: Ensemble,
    /// Instance seed.
    #[arg(long = "seeds", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value = "rms")]
    tau_mode: TauMode,
    /// Operator norm IST rescales the matrix to.
    #[arg(long, default_value_t = 0.95)]
    ist_opnorm: f64,
    /// Write the per-iteration trajectory CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Write the trajectory CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, conflicts_with = "lambda", required_unless_present = "lambda")]
    alpha: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args)]
struct PhaseArgs {
    /// Print ρc and the prescribed α at this δ instead of writing curves.
    #[arg(long)]
    delta: Option<f64>,
    /// Points per axis for the curves.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    #[arg(long, default_value = "phase")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON spec; other flags override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Experiment kind when no spec file is given.
    #[arg(long, required_unless_present = "spec")]
    kind: Option<ExperimentKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    prior: Option<DiscretePrior>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated λ grid.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long)]
    ensemble: Option<Ensemble>,
    /// Comma-separated seeds, or a range `a..b`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration budget for histogram, tracking and oracle runs.
    #[arg(long)]
    iterations: Option<usize>,
    /// Comma-separated exact support sizes.
    #[arg(long, value_delimiter = ',')]
    supports: Option<Vec<usize>>,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || HarnessError::Spec(format!("cannot parse seeds {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn build_spec(args: &ExperimentArgs) -> Result<ExperimentSpec> {
    let mut spec = match &args.spec {
        Some(path) => ExperimentSpec::from_json(&fs::read_to_string(path)?)?,
        None => ExperimentSpec::new(args.kind.expect("clap enforces --kind")),
    };
    if let Some(k) = args.kind {
        spec.kind = k;
    }
    macro_rules! set {
        ($($field:ident <- $arg:expr),* $(,)?) => { $(if let Some(v) = $arg.clone() { spec.$field = v; })* };
    }
    set!(
        n <- args.n,
        delta <- args.delta,
        sigma2 <- args.sigma2,
        prior <- args.prior,
        alpha <- args.alpha,
        lambdas <- args.lambda,
        ensemble <- args.ensemble,
        max_iter <- args.max_iter,
        tol <- args.tol,
        iterations <- args.iterations,
        supports <- args.supports,
    );
    if let Some(s) = &args.seeds {
        spec.seeds = parse_seeds(s)?;
    }
    spec.validate()?;
    Ok(spec)
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let params = args.model.params()?;
    let inst = gen_instance(args.ensemble, args.n, &params, args.seed)?;
    let estimator = match args.tau_mode {
        TauMode::Rms => Estimator::Rms,
        TauMode::Median => Estimator::Median,
    };
    let (x_hat, iterations, converged, lambda, trajectory) = match args.engine {
        EngineArg::Mp => {
            let lambda = args
                .lambda
                .ok_or_else(|| HarnessError::Spec("--engine mp needs --lambda".into()))?;
            let (_, est, conv) = quad_mp_run(&inst, lambda, args.max_iter, args.tol)?;
            (est, None, conv, lambda, None)
        }
        engine => {
            let policy = match (args.alpha, args.lambda) {
                (_, Some(l)) => ThresholdPolicy::target_lambda(l)?,
                (Some(a), None) => ThresholdPolicy::new(a, estimator)?,
                (None, None) => ThresholdPolicy::new(2.0, estimator)?,
            };
            let out = match engine {
                EngineArg::Amp => amp_run(&inst, &policy, args.max_iter, args.tol)?,
                _ => ist_run(&inst, &policy, args.ist_opnorm, args.max_iter, args.tol)?,
            };
            let lambda = args.lambda.unwrap_or_else(|| out.final_state.implied_lambda());
            let csv = out.trajectory_csv();
            (out.x_hat.clone(), Some(out.iterations()), out.converged, lambda, Some(csv))
        }
    };
    if let (Some(path), Some(csv)) = (&args.out, &trajectory) {
        fs::write(path, csv)?;
    }
    let nnz = x_hat.iter().filter(|v| **v != 0.0).count();
    println!("n,m,iterations,converged,nnz,mse,lambda,objective,kkt_gap");
    println!(
        "{},{},{},{},{},{},{},{},{}",
        inst.n,
        inst.m,
        iterations.map(|i| i.to_string()).unwrap_or_default(),
        converged,
        nnz,
        inst.mse(&x_hat),
        lambda,
        lasso_objective(&inst, &x_hat, lambda),
        lasso_kkt_gap(&inst, &x_hat, lambda)?,
    );
    Ok(())
}

fn cmd_se(args: SeArgs) -> Result<()> {
    let params = args.model.params()?;
    let traj = se_run(&params, args.alpha, args.max_iter, args.tol)?;
    let mut csv = String::from("t,tau2,theta\n");
    for (t, (tau2, theta)) in traj.tau2_sequence.iter().zip(&traj.theta_sequence).enumerate() {
        csv.push_str(&format!("{t},{tau2},{theta}\n"));
    }
    match &args.out {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    match traj.tau_star {
        Some(ts) => eprintln!("fixed point tau* = {ts}"),
        None if params.delta <= 1.0 && args.alpha <= alpha_min(params.delta)? => {
            eprintln!("no fixed point: alpha is at or below alpha_min = {}", alpha_min(params.delta)?)
        }
        None => eprintln!("not converged after {} steps", args.max_iter),
    }
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<()> {
    let params = args.model.params()?;
    let row = match (args.alpha, args.lambda) {
        (_, Some(lambda)) => {
            let r = lasso_risk(lambda, &params)?;
            [r.alpha, r.lambda, r.tau_star, r.theta_star, r.mse]
        }
        (Some(alpha), None) => {
            let c = calibrate(alpha, &params)?;
            let mse = params.delta * (c.tau_star * c.tau_star - params.sigma2);
            [c.alpha, c.lambda, c.tau_star, c.theta_star, mse]
        }
        (None, None) => unreachable!("clap requires one of --alpha, --lambda"),
    };
    println!("alpha,lambda,tau_star,theta_star,predicted_mse");
    println!("{},{},{},{},{}", row[0], row[1], row[2], row[3], row[4]);
    Ok(())
}

fn cmd_phase(args: PhaseArgs) -> Result<()> {
    if let Some(delta) = args.delta {
        println!("delta,rho_c,alpha");
        println!("{delta},{},{}", rho_c(delta)?, boundary_alpha(delta)?);
        return Ok(());
    }
    let mut spec = ExperimentSpec::new(ExperimentKind::PhaseCurve);
    spec.grid = args.grid;
    let out = run(&spec, 0)?;
    for path in write_outputs(&args.out, &spec, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let spec = build_spec(&args)?;
    let out = run(&spec, args.jobs)?;
    for path in write_outputs(&args.out, &spec, &out)? {
        println!("{}", path.display());
    }
    let failed = out.outcomes.iter().filter(|o| !o.ok).count();
    if failed > 0 {
        eprintln!("{failed} of {} tasks failed; see manifest.json", out.outcomes.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Se(a) => cmd_se(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Phase(a) => cmd_phase(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
