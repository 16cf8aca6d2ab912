//! Thin command-line front end over the `qrlocal` library.
//!
//! Exit codes: 0 when all checks pass, 1 when a witness (attack success,
//! certification failure, simulation halt) is found, 2 on usage or capacity
//! errors.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qrlocal::adversary;
use qrlocal::circuit::EvalMode;
use qrlocal::f2core::{BitVector, CodeJson, LinearCode};
use qrlocal::gadgets::{self, CertifyOptions, EncodedCnot, GadgetBundle, Rational};
use qrlocal::harness::{self, AdversarySchedule, SparseCircuit};
use qrlocal::locality::{self, CertificateJson, LocalityCertificate};
use qrlocal::zoo::{Family, FAMILIES};

#[derive(Parser)]
#[command(name = "qrlocal", version, about = "locality, gadgets and erasure adversaries for binary linear codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in code families.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Extract and verify a (q, r)-locality certificate for a code.
    Analyze(AnalyzeArgs),
    /// Build, verify or certify encoded-CNOT gadgets.
    Gadget {
        #[command(subcommand)]
        action: GadgetAction,
    },
    /// Search for erasure sets that defeat a gadget.
    Attack(AttackArgs),
    /// Compile a sparse circuit and run it against an adversary schedule.
    Simulate(SimulateArgs),
    /// Rate/distance/locality ratio table over several codes.
    BoundTable(BoundTableArgs),
}

#[derive(Subcommand)]
enum ZooAction {
    /// List families and parameter ranges.
    List,
    /// Write one code as JSON.
    Emit {
        family: String,
        param: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    code: PathBuf,
    /// Max repair-vector weight to search for.
    #[arg(long, default_value_t = 3)]
    max_weight: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GadgetAction {
    /// Build the encoded CNOT for (control, target) and write the bundle.
    Build {
        #[arg(long)]
        code: PathBuf,
        /// 1-based control message index.
        #[arg(long)]
        control: usize,
        /// 1-based target message index.
        #[arg(long)]
        target: usize,
        /// Certificate JSON; extracted on the fly when absent.
        #[arg(long)]
        cert: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        max_weight: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Re-check the encoding identity of a bundled gadget.
    Verify {
        #[arg(long)]
        gadget: PathBuf,
    },
    /// Sweep erasure sets below a threshold and report witnesses.
    Certify {
        #[arg(long)]
        gadget: PathBuf,
        /// Threshold as a fraction, e.g. "1/2"; defaults to the gadget's own
        /// threshold for the chosen mode.
        #[arg(long)]
        epsilon: Option<Rational>,
        #[arg(long, default_value = "dataflow")]
        mode: EvalMode,
        #[arg(long)]
        include_ancillas: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Replay one (message, erasure) pair instead of sweeping: message
        /// as a bit string.
        #[arg(long, requires = "erase")]
        message: Option<String>,
        /// Comma-separated 1-based positions to erase for the replay.
        #[arg(long, requires = "message")]
        erase: Option<String>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long)]
    gadget: PathBuf,
    #[arg(long, default_value = "auto")]
    strategy: String,
    #[arg(long, default_value = "dataflow")]
    mode: EvalMode,
    /// Max erasure weight; defaults to the gadget's budget for the mode.
    #[arg(long)]
    max_weight: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    include_ancillas: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    code: PathBuf,
    /// Sparse circuit text: one "CNOT i j" per line.
    #[arg(long)]
    circuit: PathBuf,
    /// Input message as a bit string, leftmost bit = m_1.
    #[arg(long)]
    input: String,
    /// Adversary schedule JSON; silent adversary when absent.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long, default_value = "dataflow")]
    mode: EvalMode,
    #[arg(long)]
    cert: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    max_weight: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundTableArgs {
    /// Code JSON files; repeat the flag for each code.
    #[arg(long = "code", required = true)]
    codes: Vec<PathBuf>,
    #[arg(long, default_value_t = 3)]
    max_weight: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn dispatch(cli: Cli) -> Result<ExitCode, AnyError> {
    match cli.command {
        Command::Zoo { action } => zoo_cmd(action),
        Command::Analyze(args) => analyze_cmd(args),
        Command::Gadget { action } => gadget_cmd(action),
        Command::Attack(args) => attack_cmd(args),
        Command::Simulate(args) => simulate_cmd(args),
        Command::BoundTable(args) => bound_table_cmd(args),
    }
}

fn load_code(path: &Path) -> Result<LinearCode, AnyError> {
    let json: CodeJson = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(LinearCode::from_json(&json)?)
}

fn load_gadget(path: &Path) -> Result<EncodedCnot, AnyError> {
    let bundle: GadgetBundle = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(EncodedCnot::from_bundle(&bundle)?)
}

fn ensure_distance(code: LinearCode) -> Result<LinearCode, AnyError> {
    if code.distance().is_some() {
        return Ok(code);
    }
    Ok(code.with_computed_distance()?)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), AnyError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn zoo_cmd(action: ZooAction) -> Result<ExitCode, AnyError> {
    match action {
        ZooAction::List => {
            for family in FAMILIES {
                let (lo, hi) = family.parameter_range();
                println!("{:<12} parameter {lo}..={hi}", family.name());
            }
            Ok(ExitCode::SUCCESS)
        }
        ZooAction::Emit { family, param, out } => {
            let code = Family::from_name(&family)?.code(param)?;
            let text = serde_json::to_string_pretty(&code.to_json())?;
            emit(out.as_ref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn analyze_cmd(args: AnalyzeArgs) -> Result<ExitCode, AnyError> {
    let code = ensure_distance(load_code(&args.code)?)?;
    let cert = locality::extract_certificate(&code, args.max_weight)?;
    cert.verify(&code)?;
    let screen = locality::screen_weight_one(&cert, &code, 1.0);
    let text = serde_json::to_string_pretty(&cert.to_json())?;
    emit(args.out.as_ref(), &text)?;
    eprintln!(
        "code {}: q = {}, r = {}, k*r^(1/q)/n = {:.6}",
        code.name(),
        cert.global_q(),
        cert.global_r(),
        cert.bound_ratio()
    );
    if !screen.flagged.is_empty() {
        let flagged: Vec<usize> = screen.flagged.iter().map(|i| i + 1).collect();
        eprintln!("weight-1 access flagged for indices {flagged:?}");
    }
    if let (Some(kd), Some(met)) = (screen.k_times_d, screen.premise_met) {
        eprintln!(
            "k*d = {kd} vs n = {} (k*d > n: {})",
            screen.n,
            if met { "yes" } else { "no" }
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn gadget_cmd(action: GadgetAction) -> Result<ExitCode, AnyError> {
    match action {
        GadgetAction::Build {
            code,
            control,
            target,
            cert,
            max_weight,
            out,
        } => {
            if control == 0 || target == 0 {
                return Err("control/target are 1-based".into());
            }
            let code = ensure_distance(load_code(&code)?)?;
            let cert = match cert {
                Some(path) => {
                    let json: CertificateJson = serde_json::from_str(&fs::read_to_string(path)?)?;
                    LocalityCertificate::from_json(&json)?
                }
                None => locality::extract_certificate(&code, max_weight)?,
            };
            cert.verify(&code)?;
            let gadget = gadgets::build_encoded_cnot(
                &code,
                control - 1,
                target - 1,
                cert.group_set(control - 1),
            )?;
            if let Some(lint) = gadget.support_size_lint() {
                eprintln!("lint: {lint}");
            }
            let check = gadgets::verify_encodes(&gadget)?;
            let text = serde_json::to_string_pretty(&gadget.to_bundle(None))?;
            emit(out.as_ref(), &text)?;
            eprintln!(
                "gadget CNOT_{{{control},{target}}} on {}: depth {}, width {}, r = {}, eta = {}, encodes: {}",
                code.name(),
                gadget.depth(),
                gadget.width(),
                gadget.r(),
                gadget.eta(),
                check.passed
            );
            Ok(if check.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        GadgetAction::Verify { gadget } => {
            let gadget = load_gadget(&gadget)?;
            let check = gadgets::verify_encodes(&gadget)?;
            match check.witness {
                None => {
                    println!("encoding identity holds");
                    Ok(ExitCode::SUCCESS)
                }
                Some(w) => {
                    println!("encoding identity fails on message {w}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        GadgetAction::Certify {
            gadget,
            epsilon,
            mode,
            include_ancillas,
            seed,
            message,
            erase,
            out,
        } => {
            let gadget_path = gadget.clone();
            let g = load_gadget(&gadget)?;

            if let (Some(message), Some(erase)) = (message, erase) {
                let m = BitVector::from_bitstring(&message)?;
                let erased: BTreeSet<usize> = erase
                    .split(',')
                    .map(|p| -> Result<usize, AnyError> {
                        let p: usize = p.trim().parse()?;
                        if p == 0 {
                            return Err("positions are 1-based".into());
                        }
                        Ok(p - 1)
                    })
                    .collect::<Result<_, _>>()?;
                let trial = gadgets::run_erasure_trial(&g, &m, &erased, mode)?;
                match trial.failure {
                    None => {
                        println!("trial passes: output decodes to the expected message");
                        return Ok(ExitCode::SUCCESS);
                    }
                    Some(kind) => {
                        println!("trial fails: {kind}");
                        return Ok(ExitCode::from(1));
                    }
                }
            }

            let epsilon = epsilon.unwrap_or_else(|| gadgets::robustness_threshold(&g, mode));
            let opts = CertifyOptions {
                include_ancillas,
                seed,
                ..CertifyOptions::default()
            };
            let report = gadgets::certify_robust(&g, epsilon, mode, &opts)?;
            let passed = report.passed();
            let text = serde_json::to_string_pretty(&report)?;
            emit(out.as_ref(), &text)?;
            eprintln!(
                "certify {} at eps = {epsilon} ({mode}): {} ({} erasure sets x {} messages)",
                gadget_path.display(),
                if passed { "pass" } else { "WITNESS FOUND" },
                report.erasure_sets_tested,
                report.messages_per_set
            );
            Ok(if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn attack_cmd(args: AttackArgs) -> Result<ExitCode, AnyError> {
    let gadget = load_gadget(&args.gadget)?;
    let d = gadget
        .code()
        .distance()
        .ok_or("attack needs the code distance in the bundle")?;
    let budget = gadgets::robustness_threshold(&gadget, args.mode).max_weight_below(d);
    let max_weight = args.max_weight.unwrap_or(budget.max(1));

    let result = match args.strategy.as_str() {
        "auto" => adversary::attack_auto(&gadget, args.mode, args.trials, args.seed)?,
        "exhaustive" => {
            adversary::attack_exhaustive(&gadget, max_weight, args.mode, args.include_ancillas)?
        }
        "vertex-cover" => {
            adversary::attack_vertex_cover(&gadget, gadget.groups(), args.mode)?
        }
        "random" => adversary::attack_random(
            &gadget,
            max_weight,
            args.trials,
            args.seed,
            args.mode,
            args.include_ancillas,
        )?,
        other => return Err(format!("unknown strategy {other:?}").into()),
    };

    let replay = result.found.then(|| {
        format!(
            "qrlocal gadget certify --gadget {} --mode {} --message {} --erase {}",
            args.gadget.display(),
            args.mode,
            result
                .message
                .as_ref()
                .map(|m| m.to_bitstring())
                .unwrap_or_default(),
            result
                .erasure
                .iter()
                .map(|p| (p + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        )
    });
    let json = result.to_json(replay);
    let text = serde_json::to_string_pretty(&json)?;
    emit(args.out.as_ref(), &text)?;
    eprintln!(
        "attack ({}): {}",
        json.strategy,
        if result.found {
            "witness found"
        } else if result.out_of_budget {
            "out of budget"
        } else {
            "nothing found"
        }
    );
    Ok(if result.found {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn simulate_cmd(args: SimulateArgs) -> Result<ExitCode, AnyError> {
    let code = ensure_distance(load_code(&args.code)?)?;
    let circuit = SparseCircuit::from_text(&fs::read_to_string(&args.circuit)?)?;
    let cert = match &args.cert {
        Some(path) => {
            let json: CertificateJson = serde_json::from_str(&fs::read_to_string(path)?)?;
            LocalityCertificate::from_json(&json)?
        }
        None => locality::extract_certificate(&code, args.max_weight)?,
    };
    cert.verify(&code)?;
    let compiled = harness::compile(&circuit, &code, &cert)?;
    let schedule = match &args.schedule {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => AdversarySchedule::silent(compiled.len()),
    };
    let input = BitVector::from_bitstring(&args.input)?;
    let report = harness::run(&code, &compiled, &input, &schedule, args.mode)?;
    let text = serde_json::to_string_pretty(&report)?;
    emit(args.out.as_ref(), &text)?;
    eprint!("{}", harness::overhead_table(&report));
    match report.halted_at {
        None => {
            eprintln!(
                "simulation ok; final message {}",
                report.final_message.as_deref().unwrap_or("-")
            );
            Ok(ExitCode::SUCCESS)
        }
        Some(step) => {
            eprintln!("decode failure at step {step}");
            Ok(ExitCode::from(1))
        }
    }
}

fn bound_table_cmd(args: BoundTableArgs) -> Result<ExitCode, AnyError> {
    let mut entries = Vec::new();
    for path in &args.codes {
        let code = ensure_distance(load_code(path)?)?;
        let cert = locality::extract_certificate(&code, args.max_weight)?;
        entries.push((code, cert));
    }
    let borrowed: Vec<(&LinearCode, &LocalityCertificate)> =
        entries.iter().map(|(c, cert)| (c, cert)).collect();
    let report = locality::rate_bound_report(&borrowed)?;
    let text = report.to_string();
    emit(args.out.as_ref(), &text)?;
    Ok(ExitCode::SUCCESS)
}
