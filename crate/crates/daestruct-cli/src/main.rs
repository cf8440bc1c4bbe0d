mod render;

use std::io::{IsTerminal, Read};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use daestruct::analysis::{analyze, Method};
use daestruct::block_solver::block_smallest_offsets;
use daestruct::btf::fine_btf;
use daestruct::dae::{parse_dae, signature_of};
use daestruct::fixed_point::smallest_offsets;
use daestruct::oracle::{self, GenSpec};
use daestruct::sigfile::{read_sigfile, write_block_structure};
use daestruct::{Error, SignatureMatrix};

use render::Names;

#[derive(Parser)]
#[command(
    name = "daestruct",
    version,
    about = "Structural analysis of DAE systems: offsets, structural index, Jacobian pattern, block-triangular solving"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a system and print the full report
    Analyze(AnalyzeArgs),
    /// Print the fine block upper-triangular structure as JSON
    Btf(InputArgs),
    /// Compare global vs block solving on generated instances (CSV on stdout)
    Bench(BenchArgs),
    /// Cross-check the solvers against brute-force references
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input path, or `-` for stdin
    #[arg(long)]
    input: String,

    /// Input format; inferred from the file extension when omitted
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Solver selection
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,

    /// Report format
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
}

#[derive(Args)]
struct BenchArgs {
    /// Number of diagonal blocks per instance
    #[arg(long)]
    blocks: usize,

    /// Size of each diagonal block
    #[arg(long)]
    block_size: usize,

    /// Probability of optional cells (within blocks and couplings)
    #[arg(long, default_value_t = 0.25)]
    density: f64,

    /// Smallest generated sigma value
    #[arg(long, default_value_t = 0)]
    sigma_min: i64,

    /// Largest generated sigma value
    #[arg(long, default_value_t = 3)]
    sigma_max: i64,

    /// Base seed; repetition k uses seed + k
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of instances
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Flat-instance size (n <= 8; the dual reference additionally needs n <= 5)
    #[arg(long, conflicts_with_all = ["blocks", "block_size"])]
    n: Option<usize>,

    /// Number of diagonal blocks (block mode)
    #[arg(long, requires = "block_size")]
    blocks: Option<usize>,

    /// Size of each diagonal block (block mode)
    #[arg(long, requires = "blocks")]
    block_size: Option<usize>,

    /// Number of generated cases
    #[arg(long, default_value_t = 100)]
    cases: usize,

    /// Base seed; case k uses seed + k
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Fixed cell density; cycles through several densities when omitted
    #[arg(long)]
    density: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Dae,
    Sig,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Global,
    Block,
    Auto,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Global => Method::Global,
            MethodArg::Block => Method::Block,
            MethodArg::Auto => Method::Auto,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

/// Exit codes: 0 success, 1 usage or input error, 2 structural singularity.
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StructurallySingular | Error::EmptyColumn(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("daestruct: {}", e.message);
        std::process::exit(e.code);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Btf(args) => cmd_btf(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn load_input(args: &InputArgs) -> Result<(SignatureMatrix, Names), CliError> {
    let text = if args.input == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| CliError::input(format!("cannot read stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(&args.input)
            .map_err(|e| CliError::input(format!("cannot read `{}`: {e}", args.input)))?
    };

    let format = match args.format {
        Some(f) => f,
        None if args.input.ends_with(".dae") => InputFormat::Dae,
        None if args.input.ends_with(".sig") => InputFormat::Sig,
        None => {
            return Err(CliError::input(format!(
                "cannot infer format of `{}`; pass --format dae|sig",
                args.input
            )))
        }
    };

    match format {
        InputFormat::Dae => {
            let sys = parse_dae(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", args.input)))?;
            let names = Names {
                equations: sys.equation_names(),
                variables: sys.vars().to_vec(),
            };
            Ok((signature_of(&sys), names))
        }
        InputFormat::Sig => {
            let sigma = read_sigfile(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", args.input)))?;
            let names = Names::synthetic(sigma.n());
            Ok((sigma, names))
        }
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let (sigma, names) = load_input(&args.input)?;
    let report = analyze(&sigma, args.method.into())?;
    match args.output {
        OutputFormat::Json => {
            let json = serde_json::to_string_pretty(&report)
                .expect("report serializes");
            println!("{json}");
        }
        OutputFormat::Text => {
            let styled = std::io::stdout().is_terminal()
                && std::env::var_os("DAESTRUCT_NO_COLOR").is_none();
            print!("{}", render::render_report(&sigma, &report, &names, styled));
        }
    }
    Ok(())
}

fn cmd_btf(args: InputArgs) -> Result<(), CliError> {
    let (sigma, _) = load_input(&args)?;
    let bs = fine_btf(&sigma)?;
    println!("{}", write_block_structure(&bs));
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.blocks == 0 || args.block_size == 0 {
        return Err(CliError::input("--blocks and --block-size must be positive"));
    }
    if !(0.0..=1.0).contains(&args.density) {
        return Err(CliError::input("--density must lie in [0, 1]"));
    }
    if args.sigma_min > args.sigma_max {
        return Err(CliError::input("--sigma-min must not exceed --sigma-max"));
    }

    println!("n,blocks,block_size,seed,method,phi_applications,matching_ops,wall_ns,offsets_equal");
    for rep in 0..args.reps {
        let seed = args.seed.wrapping_add(rep as u64);
        let spec = GenSpec::blocks(
            args.blocks,
            args.block_size,
            args.density,
            (args.sigma_min, args.sigma_max),
            seed,
        );
        let (sigma, bs) = oracle::gen_block_sigma(&spec);
        let n = sigma.n();

        let t0 = Instant::now();
        let (global_off, global_stats) = smallest_offsets(&sigma)?;
        let global_ns = t0.elapsed().as_nanos();

        let t1 = Instant::now();
        let (block_off, per_block) = block_smallest_offsets(&sigma, &bs)?;
        let block_ns = t1.elapsed().as_nanos();

        let equal = global_off == block_off;
        let block_phi: u64 = per_block.iter().map(|b| b.stats.phi_applications).sum();
        let block_mops: u64 = per_block.iter().map(|b| b.stats.matching_ops).sum();

        println!(
            "{n},{},{},{seed},global,{},{},{global_ns},{equal}",
            args.blocks, args.block_size, global_stats.phi_applications, global_stats.matching_ops
        );
        println!(
            "{n},{},{},{seed},block,{block_phi},{block_mops},{block_ns},{equal}",
            args.blocks, args.block_size
        );
    }
    Ok(())
}

const VERIFY_DENSITIES: [f64; 5] = [0.0, 0.15, 0.3, 0.5, 0.8];

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let sigma_range = (0i64, 3i64);
    let mut checks = 0u64;

    match (args.n, args.blocks, args.block_size) {
        (Some(n), None, None) => {
            if n == 0 {
                return Err(CliError::input("--n must be positive"));
            }
            if n > oracle::MAX_BRUTE_HVT {
                return Err(Error::TooLarge {
                    n,
                    limit: oracle::MAX_BRUTE_HVT,
                }
                .into());
            }
            for case in 0..args.cases {
                let density = args
                    .density
                    .unwrap_or(VERIFY_DENSITIES[case % VERIFY_DENSITIES.len()]);
                let spec = GenSpec::flat(n, density, sigma_range, args.seed.wrapping_add(case as u64));
                let sigma = oracle::gen_sigma(&spec);
                verify_one(&sigma, None, &mut checks)?;
            }
        }
        (None, Some(blocks), Some(block_size)) => {
            if blocks == 0 || block_size == 0 {
                return Err(CliError::input("--blocks and --block-size must be positive"));
            }
            for case in 0..args.cases {
                let density = args
                    .density
                    .unwrap_or(VERIFY_DENSITIES[case % VERIFY_DENSITIES.len()]);
                let spec = GenSpec::blocks(
                    blocks,
                    block_size,
                    density,
                    sigma_range,
                    args.seed.wrapping_add(case as u64),
                );
                let (sigma, bs) = oracle::gen_block_sigma(&spec);
                verify_one(&sigma, Some(&bs), &mut checks)?;
            }
        }
        _ => {
            return Err(CliError::input(
                "pass either --n, or --blocks with --block-size",
            ))
        }
    }

    println!("{}/{} agree ({checks} checks)", args.cases, args.cases);
    Ok(())
}

fn verify_one(
    sigma: &SignatureMatrix,
    bs: Option<&daestruct::BlockStructure>,
    checks: &mut u64,
) -> Result<(), CliError> {
    let mismatch = |what: &str| {
        CliError {
            code: 1,
            message: format!(
                "MISMATCH ({what}) on instance:\n{}",
                daestruct::sigfile::write_sigfile(sigma)
            ),
        }
    };

    let (off, stats) = smallest_offsets(sigma)?;
    if stats.phi_applications > stats.bound {
        return Err(mismatch("iteration bound"));
    }
    *checks += 1;

    if sigma.n() <= oracle::MAX_BRUTE_HVT {
        let t = daestruct::find_hvt(sigma)?;
        let value = daestruct::transversal_value(sigma, &t);
        let (_, brute_value) = oracle::brute_hvt(sigma)?;
        if value != brute_value {
            return Err(mismatch("hvt value vs brute force"));
        }
        *checks += 1;
    }
    if sigma.n() <= oracle::MAX_BRUTE_DUAL {
        let brute = oracle::brute_smallest_dual(sigma)?;
        if off != brute {
            return Err(mismatch("smallest offsets vs brute force"));
        }
        *checks += 1;
    }
    if let Some(bs) = bs {
        let (block_off, per_block) = block_smallest_offsets(sigma, bs)?;
        if block_off != off {
            return Err(mismatch("block vs global offsets"));
        }
        if per_block
            .iter()
            .any(|b| b.stats.phi_applications > b.stats.bound)
        {
            return Err(mismatch("per-block iteration bound"));
        }
        *checks += 1;
    }
    Ok(())
}
