use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gapbound::bounds::BoundName;
use gapbound::extremal::{max_entropy_state, saturation_search, MaxEntOptions, SaturationConfig};
use gapbound::hamiltonian::{spectrum_of, HamiltonianSpec, NamedModel, SpectrumSummary};
use gapbound::linalg::DimCap;
use gapbound::qecc::{kl_check, subspace_agreement_check, AgreementReport, CodeSubspace, ErrorSet, KlReport};
use gapbound::qstate::reference::StateRecipe;
use gapbound::sweep::{run_sweep, HamiltonianSource, MemberState, SweepConfig};
use gapbound::topology::{derive_from_error_set, CouplingTopology};
use gapbound::Error;

const EXIT_PARSE: u8 = 2;
const EXIT_CAP: u8 = 3;
const EXIT_HYPOTHESIS: u8 = 4;
const EXIT_CHECK: u8 = 5;

#[derive(Parser)]
#[command(name = "gapbound", version, about = "Spectral-gap bounds for hypergraph-coupled Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize a Hamiltonian and print its spectrum summary.
    Spectrum(SpectrumArgs),
    /// Evaluate bounds over a range of seeded Hamiltonians.
    Sweep(SweepArgs),
    /// Build the maximum-entropy state sharing a state's hyperedge marginals.
    Maxent(MaxentArgs),
    /// Search for Hamiltonians that come close to saturating the unification bound.
    Saturate(SaturateArgs),
    /// Check the Knill-Laflamme conditions and marginal agreement of a code.
    QeccCheck(QeccArgs),
}

#[derive(Args)]
struct HamiltonianArgs {
    /// Hamiltonian spec file (JSON).
    #[arg(long, value_name = "FILE", conflicts_with = "model")]
    spec: Option<PathBuf>,
    /// Named model, e.g. `zz_chain:n=3` or `transverse_ising:n=4,J=1,h=0.5,boundary=periodic`.
    #[arg(long, value_name = "NAME")]
    model: Option<String>,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Hamiltonian spec file (JSON).
    #[arg(value_name = "FILE")]
    file: Option<PathBuf>,
    #[command(flatten)]
    source: HamiltonianArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Topology file, or `line:d1,d2,..` / `pairwise:d1,d2,..`.
    #[arg(long, value_name = "FILE")]
    topology: Option<String>,
    #[arg(long, value_name = "RECIPE", default_value = "bell-ends")]
    state: String,
    /// Half-open seed range `A..B`.
    #[arg(long, value_name = "A..B")]
    seeds: String,
    /// Bound to evaluate; repeat or comma-separate for several.
    #[arg(long = "bound", value_name = "NAME", value_delimiter = ',', default_value = "unification")]
    bounds: Vec<String>,
    #[command(flatten)]
    source: HamiltonianArgs,
    /// Scale of the random coefficients.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Member state for the unification bound: `dephased` or `maxent`.
    #[arg(long, default_value = "dephased")]
    member: String,
    /// Partner state for the trial bound.
    #[arg(long, value_name = "RECIPE", default_value = "bell-ends-twisted")]
    partner: String,
    /// Code file for the qecc bound, or `five-qubit`.
    #[arg(long, value_name = "FILE")]
    code: Option<String>,
    #[arg(long)]
    json: bool,
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Satisfaction tolerance.
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
    /// Membership certification tolerance.
    #[arg(long, value_name = "X", default_value_t = gapbound::bounds::MEMBERSHIP_TOL)]
    membership_tol: f64,
    /// Write to this file instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MaxentArgs {
    #[arg(long, value_name = "FILE")]
    topology: String,
    #[arg(long, value_name = "RECIPE")]
    state: String,
    /// Largest acceptable marginal deviation.
    #[arg(long, value_name = "X", default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iterations: usize,
}

#[derive(Args)]
struct SaturateArgs {
    #[arg(long, value_name = "FILE")]
    topology: String,
    #[arg(long, value_name = "RECIPE")]
    state: String,
    #[arg(long, value_name = "F")]
    target_f: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 1500)]
    max_evaluations: usize,
    #[arg(long, default_value_t = 10.0)]
    penalty: f64,
    /// Slack allowed above the bound before the check fails.
    #[arg(long, value_name = "X", default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct QeccArgs {
    /// Code file (JSON), or `five-qubit`.
    #[arg(long, value_name = "FILE")]
    code: String,
    /// Error set file (JSON list of subsystem sets); single-site errors by default.
    #[arg(long, value_name = "FILE")]
    errors: Option<PathBuf>,
    /// Topology for the agreement check; derived from the error set by default.
    #[arg(long, value_name = "FILE")]
    topology: Option<String>,
    #[arg(long, value_name = "X", default_value_t = 1e-9)]
    tol: f64,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::DimensionCap { .. } => EXIT_CAP,
            Error::MembershipFailed { .. }
            | Error::ImperfectCorrelation(_)
            | Error::NoCorrelatedComponent(_)
            | Error::AgreementNotCertified => EXIT_HYPOTHESIS,
            Error::Eigensolver { .. } => 1,
            _ => EXIT_PARSE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<u8, Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_PARSE,
        message: message.into(),
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_dims(list: &str) -> std::result::Result<Vec<usize>, Failure> {
    list.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| usage(format!("bad dimension list `{list}`"))))
        .collect()
}

fn load_topology(arg: &str, cap: DimCap) -> std::result::Result<CouplingTopology, Failure> {
    let topo = if let Some(rest) = arg.strip_prefix("line:") {
        let dims = parse_dims(rest)?;
        cap.total(&dims)?;
        CouplingTopology::line(dims)?
    } else if let Some(rest) = arg.strip_prefix("pairwise:") {
        let dims = parse_dims(rest)?;
        cap.total(&dims)?;
        CouplingTopology::pairwise(dims)?
    } else {
        CouplingTopology::parse(&read(Path::new(arg))?, cap)?
    };
    Ok(topo)
}

fn load_code(arg: &str) -> std::result::Result<CodeSubspace, Failure> {
    if arg == "five-qubit" {
        return Ok(gapbound::qecc::five_qubit_code());
    }
    Ok(CodeSubspace::from_json(&read(Path::new(arg))?)?)
}

fn load_hamiltonian(
    file: Option<&Path>,
    model: Option<&str>,
    cap: DimCap,
) -> std::result::Result<Option<(HamiltonianSpec, Option<CouplingTopology>)>, Failure> {
    match (file, model) {
        (Some(_), Some(_)) => Err(usage("give either a spec file or a model, not both")),
        (Some(path), None) => Ok(Some((HamiltonianSpec::from_json(&read(path)?, cap)?, None))),
        (None, Some(name)) => {
            let m: NamedModel = name.parse()?;
            Ok(Some((m.spec()?, Some(m.topology()?))))
        }
        (None, None) => Ok(None),
    }
}

fn parse_seeds(text: &str) -> std::result::Result<std::ops::Range<u64>, Failure> {
    let bad = || usage(format!("bad seed range `{text}` (expected A..B)"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: u64 = a.trim().parse().map_err(|_| bad())?;
    let b: u64 = b.trim().parse().map_err(|_| bad())?;
    if a >= b {
        return Err(usage(format!("seed range `{text}` is empty")));
    }
    Ok(a..b)
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json<T: Serialize>(value: &T) {
    emit(&(serde_json::to_string_pretty(value).expect("report serializes") + "\n"));
}

#[derive(Serialize)]
struct SpectrumOutput {
    #[serde(flatten)]
    summary: SpectrumSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

fn cmd_spectrum(args: SpectrumArgs) -> CmdResult {
    let cap = DimCap::from_env()?;
    let file = args.file.as_deref().or(args.source.spec.as_deref());
    let (spec, _) = load_hamiltonian(file, args.source.model.as_deref(), cap)?
        .ok_or_else(|| usage("a spec file or --model is required"))?;
    let summary = spectrum_of(&spec, cap)?.summary();
    let note = (summary.e_tot == 0.0).then_some("E_tot = 0: every state is a ground state");
    if args.json {
        print_json(&SpectrumOutput { summary, note });
    } else {
        println!("dim               {}", summary.dim);
        println!("E_0               {}", summary.e0);
        println!("E_1               {}", summary.e1);
        println!("gap               {}", summary.gap);
        println!("E_max             {}", summary.e_max);
        println!("E_tot             {}", summary.e_tot);
        println!("ground degeneracy {}", summary.ground_degeneracy);
        if let Some(n) = note {
            println!("note              {n}");
        }
    }
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let cap = DimCap::from_env()?;
    let seeds = parse_seeds(&args.seeds)?;
    let bounds = args
        .bounds
        .iter()
        .map(|b| b.parse::<BoundName>())
        .collect::<gapbound::Result<Vec<_>>>()?;
    let loaded = load_hamiltonian(args.source.spec.as_deref(), args.source.model.as_deref(), cap)?;
    let topology = match (&args.topology, &loaded) {
        (Some(t), _) => load_topology(t, cap)?,
        (None, Some((_, Some(t)))) => t.clone(),
        _ => return Err(usage("--topology is required unless --model supplies one")),
    };
    let mut config = SweepConfig::new(topology, args.state.parse()?, seeds, bounds);
    config.hamiltonians = match loaded {
        Some((spec, _)) if args.source.spec.is_some() => HamiltonianSource::Spec(spec),
        Some(_) => HamiltonianSource::Named(args.source.model.as_deref().unwrap_or_default().parse()?),
        None => HamiltonianSource::Random { scale: args.scale },
    };
    config.tolerance = args.tol;
    config.membership_tolerance = args.membership_tol;
    config.jobs = args.jobs;
    config.trial_partner = args.partner.parse()?;
    config.member = match args.member.as_str() {
        "dephased" => MemberState::Dephased,
        "maxent" => MemberState::MaxEntropy,
        other => return Err(usage(format!("unknown member state `{other}`"))),
    };
    if let Some(c) = &args.code {
        config.code = Some(load_code(c)?);
    }
    let outcome = run_sweep(&config)?;
    let text = if args.json { outcome.to_json() + "\n" } else { outcome.to_csv() };
    match &args.output {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        None => emit(&text),
    }
    for f in &outcome.failures {
        eprintln!("hypothesis not certified: seed {} bound {}: {}", f.seed, f.bound, f.reason);
    }
    Ok(if !outcome.failures.is_empty() {
        EXIT_HYPOTHESIS
    } else if outcome.summary.violations > 0 {
        EXIT_CHECK
    } else {
        0
    })
}

fn build_state(
    recipe: &str,
    topology: &CouplingTopology,
) -> std::result::Result<gapbound::qstate::PureState, Failure> {
    let recipe: StateRecipe = recipe.parse()?;
    if recipe == StateRecipe::Ground {
        return Err(usage("the ground recipe needs a Hamiltonian; use it with sweep"));
    }
    Ok(recipe.build(topology.dims(), None)?)
}

fn cmd_maxent(args: MaxentArgs) -> CmdResult {
    let cap = DimCap::from_env()?;
    let topology = load_topology(&args.topology, cap)?;
    let psi = build_state(&args.state, &topology)?;
    let opts = MaxEntOptions {
        max_iterations: args.max_iterations,
        ..MaxEntOptions::default()
    };
    let result = max_entropy_state(&psi, &topology, opts)?;
    print_json(&result);
    Ok(if result.converged && result.achieved_deviation <= args.tol {
        0
    } else {
        EXIT_CHECK
    })
}

fn cmd_saturate(args: SaturateArgs) -> CmdResult {
    let cap = DimCap::from_env()?;
    let topology = load_topology(&args.topology, cap)?;
    let psi = build_state(&args.state, &topology)?;
    let config = SaturationConfig {
        restarts: args.restarts,
        max_evaluations: args.max_evaluations,
        seed: args.seed,
        penalty: args.penalty,
        ..SaturationConfig::default()
    };
    let run = || saturation_search(&psi, &topology, args.target_f, &config);
    let result = match args.jobs {
        Some(j) => rayon_pool(j)?.install(run)?,
        None => run()?,
    };
    print_json(&result);
    Ok(if result.gap_ratio <= result.bound_ratio + args.tol {
        0
    } else {
        EXIT_CHECK
    })
}

fn rayon_pool(jobs: usize) -> std::result::Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| usage(format!("thread pool: {e}")))
}

#[derive(Serialize)]
struct QeccOutput {
    passed: bool,
    k: usize,
    knill_laflamme: KlReport,
    agreement: AgreementReport,
    hyperedges: Vec<Vec<usize>>,
}

fn cmd_qecc_check(args: QeccArgs) -> CmdResult {
    let cap = DimCap::from_env()?;
    let code = load_code(&args.code)?;
    cap.total(code.dims())?;
    let errors = match &args.errors {
        Some(path) => ErrorSet::new(serde_json::from_str(&read(path)?).map_err(Error::from)?)?,
        None => ErrorSet::singletons(code.dims().len()),
    };
    let topology = match &args.topology {
        Some(t) => load_topology(t, cap)?,
        None => derive_from_error_set(&errors, code.dims().to_vec())?,
    };
    let kl = kl_check(&code, &errors, args.tol)?;
    let agreement = subspace_agreement_check(&code, &topology, args.tol)?;
    let out = QeccOutput {
        passed: kl.passed && agreement.passed,
        k: code.k(),
        knill_laflamme: kl,
        agreement,
        hyperedges: topology.hyperedges().to_vec(),
    };
    print_json(&out);
    Ok(if out.passed { 0 } else { EXIT_CHECK })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Maxent(a) => cmd_maxent(a),
        Command::Saturate(a) => cmd_saturate(a),
        Command::QeccCheck(a) => cmd_qecc_check(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
