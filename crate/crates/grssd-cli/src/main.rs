//! Command-line front end for the grssd library.
//!
//! Stdout is line-oriented `key=value` so scripts can scrape it; everything
//! chatty (census progress, error text) goes to stderr. Exit codes are part
//! of the contract: 0 success, 1 unreadable or malformed input file, 2
//! validation failure (bad parameters, failed hypothesis list), 3 a built or
//! loaded code failed verification, 4 a self-test property failed.

use clap::{Args, Parser, Subcommand, ValueEnum};
use grssd::census::{self, CensusError, CensusOptions, Row5Mode};
use grssd::chartool::{character_report_from_table, delta_table};
use grssd::evalsets::{self, ConstructionParams};
use grssd::gf::FieldSpec;
use grssd::grscodes::{
    generator_matrix, read_matrix, solve_scaling, verify_self_dual, write_matrix, CodeSpec,
    MdsOutcome, RankMethod, VerifyOpts,
};
use grssd::selftest::{first_failure, run_suite, FaultInjection};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_MALFORMED: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_VERIFICATION: u8 = 3;
const EXIT_SELFTEST: u8 = 4;
const DEFAULT_SEED: u64 = 0xC0DE;
const DEFAULT_SAMPLES: usize = 4;
const DEFAULT_Q_CAP: u64 = 1 << 26;

#[derive(Parser)]
#[command(name = "grssd", version, about = "Construct and verify MDS self-dual codes over GF(r^2)")]
struct Cli {
    /// Worker threads; the GRSSD_THREADS variable and the config file are
    /// consulted when the flag is absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for the randomized verification routes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` config file (threads, seed, samples, out_dir, q_cap).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the parameters of GF(p^(2m)) for subfield GF(p^m).
    FieldInfo { p: u64, m: u32 },
    /// Build one code end to end and emit the requested artifact.
    Build(Box<BuildArgs>),
    /// Re-verify a generator matrix file.
    Verify(VerifyArgs),
    /// Census the achievable lengths over GF(r^2) and export a CSV.
    Enumerate(EnumerateArgs),
    /// Print the headline coverage ratio N / (q/2).
    Ratio(RatioArgs),
    /// Run the lemma and theorem property suites.
    SelfTest(SelfTestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Set,
    Matrix,
    Summary,
}

#[derive(Args)]
struct BuildArgs {
    /// Construction family: thm2, thm3, thm4, cor1, thm5, thm6, cor2, cor3.
    tag: String,
    /// Subfield order r (the field is GF(r^2)).
    #[arg(long)]
    r: u64,
    #[arg(long)]
    l: Option<u64>,
    #[arg(long)]
    s: Option<u64>,
    #[arg(long)]
    l1: Option<u64>,
    #[arg(long)]
    l2: Option<u64>,
    #[arg(long)]
    u: Option<u64>,
    #[arg(long)]
    v: Option<u64>,
    #[arg(long)]
    w: Option<u64>,
    #[arg(long)]
    s_prime: Option<u64>,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    f: Option<u64>,
    #[arg(long, value_enum, default_value = "summary")]
    emit: Emit,
    /// Output path, required for --emit set and --emit matrix.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Check every k x k minor instead of relying on the structure (n <= 16).
    #[arg(long)]
    mds_bruteforce: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Generator matrix file produced by `build --emit matrix`.
    path: PathBuf,
    /// Check every k x k minor instead of relying on the structure (n <= 16).
    #[arg(long)]
    mds_bruteforce: bool,
    /// Force the Gram-matrix route even above its automatic size cutoff.
    #[arg(long)]
    matrix_method: bool,
    /// Sampled codeword pairs for the randomized route; 0 disables it.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Subfield order r; must be an odd prime power with r = 3 mod 4.
    #[arg(long)]
    r: u64,
    /// Comma-separated class ids 1..8; default all.
    #[arg(long)]
    classes: Option<String>,
    /// How class 5 length ranges are read.
    #[arg(long, value_enum, default_value = "theorem")]
    row5: Row5Arg,
    /// Skip the witness pass (the CSV witness column stays empty).
    #[arg(long)]
    skip_witnesses: bool,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RatioArgs {
    /// Subfield order r; must be an odd prime power with r = 3 mod 4.
    #[arg(long)]
    r: u64,
    /// Comma-separated class ids 1..8; default all.
    #[arg(long)]
    classes: Option<String>,
    /// How class 5 length ranges are read.
    #[arg(long, value_enum, default_value = "theorem")]
    row5: Row5Arg,
}

#[derive(Args)]
struct SelfTestArgs {
    /// Corrupt the factored difference products to exercise the fail path.
    #[arg(long, hide = true)]
    inject_delta_sign_error: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Row5Arg {
    Theorem,
    Table,
}

impl From<Row5Arg> for Row5Mode {
    fn from(a: Row5Arg) -> Self {
        match a {
            Row5Arg::Theorem => Row5Mode::Theorem,
            Row5Arg::Table => Row5Mode::TableRow,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn validation(err: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_VALIDATION, err.to_string())
}

fn verification(err: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_VERIFICATION, err.to_string())
}

fn malformed(err: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_MALFORMED, err.to_string())
}

/// Settings resolved from flags, environment, and the config file, in that
/// precedence order.
struct Context {
    seed: u64,
    samples: usize,
    out_dir: Option<PathBuf>,
    q_cap: u64,
}

#[derive(Default)]
struct FileConfig {
    threads: Option<usize>,
    seed: Option<u64>,
    samples: Option<usize>,
    out_dir: Option<PathBuf>,
    q_cap: Option<u64>,
}

fn load_config(path: &Path) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_MALFORMED, format!("config {}: {e}", path.display())))?;
    let mut cfg = FileConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(validation(format!(
                "config line {}: expected `key = value`, got {raw:?}",
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| {
            validation(format!("config line {}: bad {what} value {value:?}", lineno + 1))
        };
        match key {
            "threads" => cfg.threads = Some(value.parse().map_err(|_| bad("threads"))?),
            "seed" => cfg.seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "samples" => cfg.samples = Some(value.parse().map_err(|_| bad("samples"))?),
            "out_dir" => cfg.out_dir = Some(PathBuf::from(value)),
            "q_cap" => cfg.q_cap = Some(value.parse().map_err(|_| bad("q_cap"))?),
            other => {
                return Err(validation(format!(
                    "config line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(cfg)
}

fn resolve_threads(flag: Option<usize>, cfg: &FileConfig) -> Result<Option<usize>, Failure> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    if let Ok(raw) = std::env::var("GRSSD_THREADS") {
        let n = raw
            .parse::<usize>()
            .map_err(|_| validation(format!("GRSSD_THREADS is not a thread count: {raw:?}")))?;
        return Ok(Some(n));
    }
    Ok(cfg.threads)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    if let Some(n) = resolve_threads(cli.threads, &cfg)? {
        if n == 0 {
            return Err(validation("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| validation(format!("thread pool: {e}")))?;
    }
    let ctx = Context {
        seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        samples: cfg.samples.unwrap_or(DEFAULT_SAMPLES),
        out_dir: cfg.out_dir,
        q_cap: cfg.q_cap.unwrap_or(DEFAULT_Q_CAP),
    };
    match cli.command {
        Command::FieldInfo { p, m } => cmd_field_info(p, m),
        Command::Build(args) => cmd_build(&args, &ctx),
        Command::Verify(args) => cmd_verify(&args, &ctx),
        Command::Enumerate(args) => cmd_enumerate(&args, &ctx),
        Command::Ratio(args) => cmd_ratio(&args),
        Command::SelfTest(args) => cmd_self_test(&args, &ctx),
    }
}

/// Join a relative output path onto the configured output directory.
fn resolve_out(ctx: &Context, path: &Path) -> PathBuf {
    match &ctx.out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn field_for(r: u64, ctx: &Context) -> Result<FieldSpec, Failure> {
    if r.checked_mul(r).is_none_or(|q| q > ctx.q_cap) {
        return Err(validation(format!("q = r^2 exceeds the configured cap {}", ctx.q_cap)));
    }
    FieldSpec::for_r(r).map_err(validation)
}

fn cmd_field_info(p: u64, m: u32) -> CmdResult {
    if m == 0 {
        return Err(validation("m must be at least 1"));
    }
    let r = p
        .checked_pow(m)
        .ok_or_else(|| validation("p^m overflows"))?;
    let field = FieldSpec::for_r(r).map_err(validation)?;
    let modulus: Vec<String> = field.modulus().iter().map(|c| c.to_string()).collect();
    println!("p={p}");
    println!("m={m}");
    println!("r={r}");
    println!("q={}", field.q());
    println!("modulus={}", modulus.join(","));
    println!("theta={}", field.theta());
    // Order certification runs during construction and fails the build when
    // the walk does not generate the whole group.
    println!("thetaOrderCertified=true");
    let eta = field.eta(field.neg(grssd::gf::El::ONE)).map_err(verification)?;
    println!("etaMinusOne={eta:+}");
    Ok(())
}

fn collect_params(args: &BuildArgs) -> BTreeMap<String, u64> {
    let mut map = BTreeMap::new();
    let mut put = |k: &str, v: Option<u64>| {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    };
    put("l", args.l);
    put("s", args.s);
    put("l1", args.l1);
    put("l2", args.l2);
    put("u", args.u);
    put("v", args.v);
    put("w", args.w);
    put("sprime", args.s_prime);
    put("t", args.t);
    put("f", args.f);
    map
}

fn rank_method_name(m: RankMethod) -> &'static str {
    match m {
        RankMethod::RowReduction => "rowReduction",
        RankMethod::VandermondeDeterminant => "vandermondeDeterminant",
    }
}

fn cmd_build(args: &BuildArgs, ctx: &Context) -> CmdResult {
    let field = field_for(args.r, ctx)?;
    let provided = collect_params(args);
    let params = ConstructionParams::from_tag(&args.tag, &provided).map_err(validation)?;
    // A flag the construction never reads is almost certainly a typo for one
    // it does read, so refuse it rather than silently dropping it.
    let consumed: Vec<&str> = params.param_list().iter().map(|&(k, _)| k).collect();
    if let Some(stray) = provided.keys().find(|k| !consumed.contains(&k.as_str())) {
        let flag = if stray == "sprime" { "s-prime" } else { stray.as_str() };
        return Err(validation(format!(
            "parameter --{flag} is not used by {}",
            params.tag()
        )));
    }

    let report = evalsets::validate(&field, &params);
    for line in &report.lines {
        println!("hypothesis={} {}", if line.ok { "pass" } else { "fail" }, line.desc);
    }
    if !report.pass {
        return Err(validation(format!(
            "hypothesis list failed: {}",
            report.failed_descriptions().join("; ")
        )));
    }

    let set = evalsets::build(&field, &params).map_err(validation)?;
    println!("setSize={}", set.len());
    println!("extended={}", u8::from(set.is_extended()));
    println!("length={}", set.code_length());
    if let ConstructionParams::Cor1 { u: 20, v: 18, s: 2, s_prime: 10, t: 1 } = params {
        if args.r == 19 {
            println!(
                "note=the worked example these parameters come from announces length 314, \
                 while the length formula yields 230"
            );
        }
    }

    let table = delta_table(&field, &set).map_err(verification)?;
    let creport = character_report_from_table(&field, &table).map_err(verification)?;
    let (plus, minus) = creport.counts();
    println!("characterUniform={}", creport.uniform);
    println!("characterPlus={plus}");
    println!("characterMinus={minus}");

    let solution = solve_scaling(&field, &set, &table, &creport, set.is_extended())
        .map_err(verification)?;
    println!("scalingConstant={}", solution.constant);
    println!("scalingLabel={}", solution.label);

    let spec = CodeSpec::new(&field, set.elements.clone(), solution.scaling.clone(), set.is_extended())
        .map_err(verification)?;
    let matrix = generator_matrix(&field, &spec).map_err(verification)?;
    println!("rank={}", spec.k);
    println!("rankMethod={}", rank_method_name(matrix.rank_method));

    let opts = VerifyOpts {
        samples: ctx.samples,
        seed: ctx.seed,
        matrix: None,
        mds_brute: args.mds_bruteforce,
    };
    let verdict = verify_self_dual(&field, &spec, &opts).map_err(verification)?;
    println!("selfOrthogonal={}", verdict.self_orthogonal);
    println!("methods={}", verdict.methods.join(","));
    match verdict.mds {
        MdsOutcome::Checked(ok) => println!("mds={}", if ok { "pass" } else { "fail" }),
        MdsOutcome::Skipped(reason) => {
            println!("mds=skipped");
            println!("mdsReason={reason}");
        }
    }
    if !verdict.self_dual() || matches!(verdict.mds, MdsOutcome::Checked(false)) {
        return Err(verification("self-duality verification failed"));
    }
    println!("selfDual=true");

    match args.emit {
        Emit::Summary => {}
        Emit::Set => {
            let out = args
                .out
                .as_deref()
                .ok_or_else(|| validation("--emit set requires --out"))?;
            let out = resolve_out(ctx, out);
            std::fs::write(&out, evalsets::write_evalset(&field, &set))
                .map_err(malformed)?;
            println!("wrote={}", out.display());
        }
        Emit::Matrix => {
            let out = args
                .out
                .as_deref()
                .ok_or_else(|| validation("--emit matrix requires --out"))?;
            let out = resolve_out(ctx, out);
            write_matrix(&field, &matrix, &out).map_err(malformed)?;
            println!("wrote={}", out.display());
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, ctx: &Context) -> CmdResult {
    let parsed = read_matrix(&args.path).map_err(malformed)?;
    let field = FieldSpec::for_r(parsed.r()).map_err(malformed)?;
    parsed.check_field(&field).map_err(malformed)?;
    let loaded = parsed.matrix;
    println!("n={}", loaded.n);
    println!("k={}", loaded.k);
    println!("extended={}", u8::from(loaded.extended));

    let spec = CodeSpec::new(&field, loaded.points.clone(), loaded.scaling.clone(), loaded.extended)
        .map_err(verification)?;
    let expected = generator_matrix(&field, &spec).map_err(verification)?;
    if expected.rows != loaded.rows {
        return Err(verification(
            "matrix rows are not the GRS rows of the stated points and scaling",
        ));
    }
    println!("rowsMatchStructure=true");

    let opts = VerifyOpts {
        samples: args.samples.unwrap_or(ctx.samples),
        seed: ctx.seed,
        matrix: args.matrix_method.then_some(true),
        mds_brute: args.mds_bruteforce,
    };
    let verdict = verify_self_dual(&field, &spec, &opts).map_err(verification)?;
    println!("selfOrthogonal={}", verdict.self_orthogonal);
    println!("rankMethod={}", rank_method_name(verdict.rank_method));
    println!("methods={}", verdict.methods.join(","));
    match verdict.mds {
        MdsOutcome::Checked(ok) => println!("mds={}", if ok { "pass" } else { "fail" }),
        MdsOutcome::Skipped(reason) => {
            println!("mds=skipped");
            println!("mdsReason={reason}");
        }
    }
    if !verdict.self_dual() || matches!(verdict.mds, MdsOutcome::Checked(false)) {
        return Err(verification("verification failed"));
    }
    println!("selfDual=true");
    Ok(())
}

fn parse_classes(raw: &Option<String>) -> Result<u8, Failure> {
    let Some(raw) = raw else { return Ok(0xFF) };
    let mut mask = 0u8;
    for part in raw.split(',') {
        let id: u8 = part
            .trim()
            .parse()
            .map_err(|_| validation(format!("bad class id {part:?}")))?;
        if !(1..=8).contains(&id) {
            return Err(validation(format!("class id {id} out of range 1..8")));
        }
        mask |= 1 << (id - 1);
    }
    Ok(mask)
}

fn census_failure(err: CensusError) -> Failure {
    match err {
        CensusError::UnsupportedField(_)
        | CensusError::FieldTooLarge(_)
        | CensusError::BudgetExceeded { .. } => validation(err),
        CensusError::Malformed(_) | CensusError::Io(_) => malformed(err),
        other => verification(other),
    }
}

fn run_census(r: u64, opts: &CensusOptions) -> Result<census::LengthCensus, Failure> {
    census::length_census_with(r, opts, &|msg| eprintln!("{msg}")).map_err(census_failure)
}

fn cmd_enumerate(args: &EnumerateArgs, ctx: &Context) -> CmdResult {
    let opts = CensusOptions {
        classes: parse_classes(&args.classes)?,
        row5: args.row5.into(),
        witnesses: !args.skip_witnesses,
        ..Default::default()
    };
    let result = run_census(args.r, &opts)?;
    let out = resolve_out(ctx, &args.out);
    std::fs::write(&out, census::export_csv(&result)).map_err(malformed)?;
    println!("wrote={}", out.display());
    println!("N={}", result.count());
    println!("ratio={:.2}%", result.ratio().ratio * 100.0);
    println!("summary={}", census::summary_json(&result));
    Ok(())
}

fn cmd_ratio(args: &RatioArgs) -> CmdResult {
    let opts = CensusOptions {
        classes: parse_classes(&args.classes)?,
        row5: args.row5.into(),
        witnesses: false,
        ..Default::default()
    };
    let result = run_census(args.r, &opts)?;
    let ratio = result.ratio();
    println!("r={}", ratio.r);
    println!("q={}", ratio.q);
    println!("N={}", ratio.n_covered);
    println!("ratio={:.2}%", ratio.ratio * 100.0);
    Ok(())
}

fn cmd_self_test(args: &SelfTestArgs, ctx: &Context) -> CmdResult {
    let fault = FaultInjection { delta_sign_error: args.inject_delta_sign_error };
    let suite = run_suite(fault, ctx.seed);
    for prop in &suite {
        println!(
            "property={} status={}",
            prop.name,
            if prop.passed() { "pass" } else { "fail" }
        );
        if let Err(detail) = &prop.result {
            println!("detail={detail}");
        }
    }
    match first_failure(&suite) {
        None => {
            println!("selfTest=pass");
            Ok(())
        }
        Some(prop) => {
            println!("selfTest=fail");
            println!("firstFailure={}", prop.name);
            Err(Failure::new(
                EXIT_SELFTEST,
                format!("self-test property {} failed", prop.name),
            ))
        }
    }
}
