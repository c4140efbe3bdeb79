//! `matsparse` — experiment harness around the matsparse library.
//!
//! Subcommands: `construct` emits explicit instances, `sample` runs seeded
//! Monte Carlo experiments, `verify` certifies lower bounds, `sweep` runs a
//! (dim, k) grid into CSV, `calibrate` searches the sample-size constant.
//! Exit status: 0 when the predicted property held, 1 when it did not,
//! 2 for invalid parameters or I/O failures.

mod instances;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use matsparse::calibrate::calibrate_constant;
use matsparse::constructions::{
    ball_in_cube_pairs, cross_polytope, cube_simplex_construction, log_needed_construction,
    symmetrization_counterexample, InstanceMetadata,
};
use matsparse::decomp::required_sample_size;
use matsparse::matrix::Matrix;
use matsparse::multiset::enumerate_multisets;
use matsparse::par;
use matsparse::sampling::{
    derive_seed, nonsymm_find_multiset, rng_from_seed, rudelson_experiment, NonsymmOutcome,
};
use matsparse::verifiers::{
    best_beta_error, bm_certificate, bm_lower_bound, l1_center_gap, min_error_over_multisets,
    SearchMode,
};
use rand::Rng;

use instances::{
    load_cube_simplex, load_decomposition, load_log_needed, MatrixInstancePayload,
    PairsInstancePayload,
};
use output::{csv_artifact, emit, fmt_f64, json_artifact, RunConfig};

#[derive(Parser)]
#[command(name = "matsparse", version, about = "Randomized matrix-decomposition sparsification: constructions, experiments, verifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an explicit instance and serialize it to JSON.
    #[command(subcommand)]
    Construct(Construct),
    /// Run a seeded sampling experiment.
    #[command(subcommand)]
    Sample(Sample),
    /// Certify a lower bound.
    #[command(subcommand)]
    Verify(Verify),
    /// Grid of sampling experiments, one CSV row per (dim, k) cell.
    #[command(subcommand)]
    Sweep(Sweep),
    /// Doubling search for the sample-size constant.
    Calibrate(CalibrateArgs),
}

#[derive(Subcommand)]
enum Construct {
    /// Diagonal PSD family that no small sub-multiset can approximate.
    LogNeeded(LogNeededArgs),
    /// Cube/simplex contact pairs behind the support-size lower bound.
    CubeSimplex(CubeSimplexArgs),
    /// Diad family whose symmetrized average has large norm.
    SymmCounterexample(SymmArgs),
}

#[derive(Args, Serialize)]
struct LogNeededArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CubeSimplexArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    delta: f64,
    /// Also include the opposite of each vector (balances the pair sums).
    #[arg(long)]
    symmetrized: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SymmArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sample {
    /// Monte Carlo estimate of the sampling error of a PSD decomposition.
    Rudelson(RudelsonArgs),
    /// Search for a balanced multiset of contact pairs via lifting.
    Nonsymm(NonsymmArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Family {
    CrossPolytope,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PairFamily {
    BallInCube,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Serialize)]
struct RudelsonArgs {
    /// Instance file to sample from; defaults to a built-in family.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Family::CrossPolytope)]
    family: Family,
    /// Dimension for the built-in family.
    #[arg(long)]
    dim: Option<usize>,
    /// Multiset size per replicate.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional target for the mean error; the exit status reports it.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct NonsymmArgs {
    /// Contact-pair instance file; defaults to a built-in family.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PairFamily::BallInCube)]
    family: PairFamily,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    eps: f64,
    /// Multiset size; computed from the sample-size formula when omitted.
    #[arg(long)]
    k: Option<usize>,
    /// Constant in the sample-size formula when k is omitted.
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    #[arg(long, default_value_t = 100)]
    max_attempts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Verify {
    /// Minimum sampling error over all bounded-size multisets.
    LogNeeded(VerifyLogNeededArgs),
    /// Support-size lower bound on ε-approximation by cube/simplex diads.
    Bm(VerifyBmArgs),
    /// ℓ₁ center gap, exhaustively over all admissible multisets.
    Lemma41(VerifyLemma41Args),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    Auto,
    Exhaustive,
    Random,
}

#[derive(Args, Serialize)]
struct VerifyLogNeededArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    /// Sample count for the random mode.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct VerifyBmArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Number of pairs in each random support.
    #[arg(long)]
    support_size: usize,
    /// Number of random supports to optimize.
    #[arg(long, default_value_t = 200)]
    supports: usize,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct VerifyLemma41Args {
    #[arg(long)]
    t: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Sweep {
    /// Cross-polytope sampling error over a (dim, k) grid.
    Rudelson(SweepArgs),
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    /// Optional error threshold; adds a within_eps column and makes the exit
    /// status report whether every cell passed.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CalibrateArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long)]
    eps: f64,
    /// Fraction of dimensions whose mean error must reach ε.
    #[arg(long, default_value_t = 1.0)]
    quantile: f64,
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    max_doublings: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Construct(Construct::LogNeeded(args)) => construct_log_needed(args),
        Command::Construct(Construct::CubeSimplex(args)) => construct_cube_simplex(args),
        Command::Construct(Construct::SymmCounterexample(args)) => construct_symm(args),
        Command::Sample(Sample::Rudelson(args)) => sample_rudelson(args),
        Command::Sample(Sample::Nonsymm(args)) => sample_nonsymm(args),
        Command::Verify(Verify::LogNeeded(args)) => verify_log_needed(args),
        Command::Verify(Verify::Bm(args)) => verify_bm(args),
        Command::Verify(Verify::Lemma41(args)) => verify_lemma41(args),
        Command::Sweep(Sweep::Rudelson(args)) => sweep_rudelson(args),
        Command::Calibrate(args) => calibrate(args),
    }
}

fn io_err(e: std::io::Error) -> String {
    format!("cannot write output: {e}")
}

fn construct_log_needed(args: LogNeededArgs) -> Result<u8, String> {
    let inst =
        log_needed_construction(args.dim, args.gamma, args.eps).map_err(|e| e.to_string())?;
    let decomposition = inst.to_decomposition().map_err(|e| e.to_string())?;
    let report = decomposition.validate(1e-10);
    let payload = MatrixInstancePayload {
        metadata: inst.metadata(),
        decomposition,
    };
    let config = RunConfig {
        command: "construct log-needed",
        args: &args,
    };
    emit(args.out.as_deref(), &json_artifact(&config, &payload)).map_err(io_err)?;
    eprintln!(
        "log-needed instance: t={}, k={}, size bound {} ({report})",
        inst.t(),
        inst.k(),
        inst.size_bound()
    );
    Ok(if report.is_valid() { 0 } else { 1 })
}

fn construct_cube_simplex(args: CubeSimplexArgs) -> Result<u8, String> {
    let inst = cube_simplex_construction(args.dim, args.delta).map_err(|e| e.to_string())?;
    let pairs = if args.symmetrized {
        inst.symmetrized_contact_pairs()
    } else {
        inst.contact_pairs()
    };
    let report = pairs.validate_johns_position(1e-9);
    let payload = PairsInstancePayload {
        metadata: inst.metadata(),
        pairs,
    };
    let config = RunConfig {
        command: "construct cube-simplex",
        args: &args,
    };
    emit(args.out.as_deref(), &json_artifact(&config, &payload)).map_err(io_err)?;
    eprintln!(
        "cube-simplex instance: d'={}, {} pairs ({report})",
        inst.d_prime(),
        payload_pairs_len(&payload)
    );
    Ok(if report.is_valid() { 0 } else { 1 })
}

fn payload_pairs_len(p: &PairsInstancePayload) -> usize {
    p.pairs.len()
}

#[derive(Serialize)]
struct SymmPayload {
    metadata: InstanceMetadata,
    gamma: f64,
    average_norm: f64,
    decomposition: matsparse::decomp::ConvexDecomposition,
}

fn construct_symm(args: SymmArgs) -> Result<u8, String> {
    let dec = symmetrization_counterexample(args.dim, args.delta).map_err(|e| e.to_string())?;
    let report = dec.validate(1e-10);
    let sym = dec.symmetrize().map_err(|e| e.to_string())?;
    let payload = SymmPayload {
        metadata: InstanceMetadata::SymmCounterexample {
            dim: args.dim,
            delta: args.delta,
        },
        gamma: sym.gamma,
        average_norm: sym.average_norm,
        decomposition: dec,
    };
    let config = RunConfig {
        command: "construct symm-counterexample",
        args: &args,
    };
    emit(args.out.as_deref(), &json_artifact(&config, &payload)).map_err(io_err)?;
    let b_large = sym.average_norm > 0.01 * args.dim as f64;
    eprintln!(
        "symmetrization counterexample: γ = {}, b = {} ({}; {report})",
        sym.gamma,
        sym.average_norm,
        if b_large { "b > 0.01·d" } else { "b <= 0.01·d" }
    );
    Ok(if report.is_valid() && b_large { 0 } else { 1 })
}

fn sample_rudelson(args: RudelsonArgs) -> Result<u8, String> {
    let dec = match (&args.input, args.dim) {
        (Some(path), _) => load_decomposition(path)?,
        (None, Some(dim)) => match args.family {
            Family::CrossPolytope => cross_polytope(dim),
        },
        (None, None) => return Err("either --in or --dim is required".into()),
    };
    let report = rudelson_experiment(&dec, args.k, args.replicates, args.seed)
        .map_err(|e| e.to_string())?;
    let config = RunConfig {
        command: "sample rudelson",
        args: &args,
    };
    let content = match args.format {
        Format::Json => json_artifact(&config, &report),
        Format::Csv => csv_artifact(&config, &report.to_csv()),
    };
    emit(args.out.as_deref(), &content).map_err(io_err)?;
    let ok = args.eps.map_or(true, |eps| report.mean <= eps);
    eprintln!(
        "mean error {} (std {}, {} replicates){}",
        report.mean,
        report.std,
        args.replicates,
        match args.eps {
            Some(eps) if ok => format!("; within target {eps}"),
            Some(eps) => format!("; ABOVE target {eps}"),
            None => String::new(),
        }
    );
    Ok(if ok { 0 } else { 1 })
}

#[derive(Serialize)]
struct NonsymmPayload {
    k: usize,
    outcome: NonsymmOutcome,
}

fn sample_nonsymm(args: NonsymmArgs) -> Result<u8, String> {
    let pairs = match (&args.input, args.dim) {
        (Some(path), _) => {
            let payload: PairsInstancePayload = instances::read_json(path)?;
            payload.pairs
        }
        (None, Some(dim)) => match args.family {
            PairFamily::BallInCube => ball_in_cube_pairs(dim),
        },
        (None, None) => return Err("either --in or --dim is required".into()),
    };
    let d = pairs.dim();
    let k = match args.k {
        Some(k) => k,
        None => required_sample_size(d, d as f64, 1.0, args.eps, args.c)
            .map_err(|e| e.to_string())?,
    };
    let outcome = nonsymm_find_multiset(&pairs, k, args.eps, args.max_attempts, args.seed)
        .map_err(|e| e.to_string())?;
    let succeeded = outcome.succeeded();
    let payload = NonsymmPayload { k, outcome };
    let config = RunConfig {
        command: "sample nonsymm",
        args: &args,
    };
    emit(args.out.as_deref(), &json_artifact(&config, &payload)).map_err(io_err)?;
    match &payload.outcome {
        NonsymmOutcome::Found {
            lifted_error,
            bounds,
            attempts,
            ..
        } => eprintln!(
            "found multiset of size {k} on attempt {attempts}: lifted error {lifted_error}, identity error {}, balances ({}, {})",
            bounds.identity_error, bounds.balance_u, bounds.balance_v
        ),
        NonsymmOutcome::Exhausted {
            best_lifted_error,
            attempts,
            ..
        } => eprintln!(
            "no multiset met ε after {attempts} attempts; best lifted error {best_lifted_error}"
        ),
    }
    Ok(if succeeded { 0 } else { 1 })
}

fn verify_log_needed(args: VerifyLogNeededArgs) -> Result<u8, String> {
    let inst = load_log_needed(&args.input)?;
    let mode = match args.mode {
        ModeArg::Auto => SearchMode::Auto {
            random_samples: args.samples,
            seed: args.seed,
        },
        ModeArg::Exhaustive => SearchMode::Exhaustive,
        ModeArg::Random => SearchMode::Random {
            samples: args.samples,
            seed: args.seed,
        },
    };
    let report = min_error_over_multisets(&inst, mode);
    let config = RunConfig {
        command: "verify log-needed",
        args: &args,
    };
    let content = match args.format {
        Format::Json => json_artifact(&config, &report),
        Format::Csv => csv_artifact(&config, &report.to_csv()),
    };
    emit(args.out.as_deref(), &content).map_err(io_err)?;
    eprintln!(
        "min error {} over sizes 1..={} ({}; ε = {}): {}",
        report.min_error,
        report.size_bound,
        report.mode,
        report.threshold,
        if report.meets_threshold { "holds" } else { "VIOLATED" }
    );
    Ok(if report.meets_threshold { 0 } else { 1 })
}

#[derive(Serialize)]
struct BmTrial {
    support: Vec<(usize, usize)>,
    best_error: f64,
    certificate: f64,
    measured_norm: f64,
}

#[derive(Serialize)]
struct BmVerifyPayload {
    bound: f64,
    binding: bool,
    min_error: f64,
    reachable_count: usize,
    certificates_valid: bool,
    trials: Vec<BmTrial>,
}

fn verify_bm(args: VerifyBmArgs) -> Result<u8, String> {
    let inst = load_cube_simplex(&args.input)?;
    let d = inst.dim();
    let dp = inst.d_prime();
    let total = d * dp;
    if args.support_size == 0 || args.support_size > total {
        return Err(format!(
            "support size must be in 1..={total}, got {}",
            args.support_size
        ));
    }
    let bound = bm_lower_bound(d, inst.delta(), args.eps).map_err(|e| e.to_string())?;
    let all_pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (0..dp).map(move |j| (i, j)))
        .collect();
    let trials: Vec<Result<BmTrial, String>> = par::map_indexed(args.supports, |trial| {
        let mut rng = rng_from_seed(derive_seed(args.seed, trial as u64));
        let mut pool = all_pairs.clone();
        for i in 0..args.support_size {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        let support = pool[..args.support_size].to_vec();
        let opt = best_beta_error(&inst, &support).map_err(|e| e.to_string())?;
        let cert =
            bm_certificate(&inst, &support, &opt.beta, args.eps).map_err(|e| e.to_string())?;
        let mut a = Matrix::identity(d).scale(-1.0);
        for (&(i, j), &b) in support.iter().zip(opt.beta.iter()) {
            a.add_scaled(&inst.member(i, j), b);
        }
        let measured = a.operator_norm().map_err(|e| e.to_string())?;
        Ok(BmTrial {
            support,
            best_error: opt.error,
            certificate: cert.lower_bound,
            measured_norm: measured,
        })
    });
    let trials: Vec<BmTrial> = trials.into_iter().collect::<Result<_, _>>()?;
    let min_error = trials.iter().map(|t| t.best_error).fold(f64::INFINITY, f64::min);
    let reachable_count = trials.iter().filter(|t| t.best_error <= args.eps).count();
    let certificates_valid = trials
        .iter()
        .all(|t| t.certificate <= t.measured_norm + 1e-9);
    let binding = (args.support_size as f64) < bound;
    let payload = BmVerifyPayload {
        bound,
        binding,
        min_error,
        reachable_count,
        certificates_valid,
        trials,
    };
    let config = RunConfig {
        command: "verify bm",
        args: &args,
    };
    emit(args.out.as_deref(), &json_artifact(&config, &payload)).map_err(io_err)?;
    let holds = certificates_valid && (!binding || reachable_count == 0);
    eprintln!(
        "support-size bound {bound} ({}): min error {min_error} over {} supports of size {}; {} reached ε",
        if binding { "binding" } else { "not binding" },
        args.supports,
        args.support_size,
        reachable_count
    );
    Ok(if holds { 0 } else { 1 })
}

#[derive(Serialize)]
struct Lemma41Payload {
    t: usize,
    k: usize,
    bound: f64,
    examined: usize,
    min_gap: f64,
    violations: usize,
}

fn verify_lemma41(args: VerifyLemma41Args) -> Result<u8, String> {
    if args.t < 1 || args.k < 1 {
        return Err(format!("need t >= 1 and k >= 1, got t={}, k={}", args.t, args.k));
    }
    let bound = args.t as f64 / (12.0 * args.k as f64);
    let mut examined = 0usize;
    let mut violations = 0usize;
    let mut min_gap = f64::INFINITY;
    for s in 1..=3 * args.k {
        for sigma in enumerate_multisets(args.t + 1, s) {
            let gap = l1_center_gap(args.t, args.k, &sigma).map_err(|e| e.to_string())?;
            examined += 1;
            min_gap = min_gap.min(gap);
            if gap < bound {
                violations += 1;
            }
        }
    }
    let payload = Lemma41Payload {
        t: args.t,
        k: args.k,
        bound,
        examined,
        min_gap,
        violations,
    };
    let config = RunConfig {
        command: "verify lemma41",
        args: &args,
    };
    emit(args.out.as_deref(), &json_artifact(&config, &payload)).map_err(io_err)?;
    eprintln!(
        "examined {examined} multisets: min gap {min_gap}, bound {bound}, {violations} violations"
    );
    Ok(if violations == 0 { 0 } else { 1 })
}

fn sweep_rudelson(args: SweepArgs) -> Result<u8, String> {
    let mut body =
        String::from("dim,k,replicates,row_seed,mean_error,std_error,ci_lo,ci_hi,eps,within_eps\n");
    let mut row = 0u64;
    let mut all_within = true;
    for &dim in &args.dims {
        let dec = cross_polytope(dim);
        for &k in &args.ks {
            let row_seed = derive_seed(args.seed, row);
            let report = rudelson_experiment(&dec, k, args.replicates, row_seed)
                .map_err(|e| e.to_string())?;
            let (eps_col, within_col) = match args.eps {
                Some(eps) => {
                    let within = report.mean <= eps;
                    all_within &= within;
                    (fmt_f64(eps), within.to_string())
                }
                None => (String::new(), String::new()),
            };
            body.push_str(&format!(
                "{dim},{k},{},{row_seed},{},{},{},{},{eps_col},{within_col}\n",
                args.replicates,
                fmt_f64(report.mean),
                fmt_f64(report.std),
                fmt_f64(report.ci95[0]),
                fmt_f64(report.ci95[1]),
            ));
            row += 1;
        }
    }
    let config = RunConfig {
        command: "sweep rudelson",
        args: &args,
    };
    emit(args.out.as_deref(), &csv_artifact(&config, &body)).map_err(io_err)?;
    eprintln!("{} rows", row);
    Ok(if all_within { 0 } else { 1 })
}

fn calibrate(args: CalibrateArgs) -> Result<u8, String> {
    match calibrate_constant(
        &args.dims,
        args.eps,
        args.quantile,
        args.replicates,
        args.seed,
        args.max_doublings,
    ) {
        Ok(result) => {
            let config = RunConfig {
                command: "calibrate",
                args: &args,
            };
            emit(args.out.as_deref(), &json_artifact(&config, &result)).map_err(io_err)?;
            eprintln!("c_est = {} after {} ladder steps", result.c_est, result.steps.len());
            Ok(0)
        }
        Err(matsparse::Error::NumericalFailure(msg)) => {
            eprintln!("calibration failed: {msg}");
            Ok(1)
        }
        Err(e) => Err(e.to_string()),
    }
}
