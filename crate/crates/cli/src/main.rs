use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use survdiff::permutation::EXHAUSTIVE_LIMIT;
use survdiff::{run_permutation_test, Method, PermutationPlan};
use survdiff_cli::{curves_svg, group_curves, read_data, write_curves_csv, CliError};
use survdiff_sim::study::{derive_seed, Generator};
use survdiff_sim::{builtin_scenarios, find_builtin, ScenarioConfig, StudyResult};

const AFTER_HELP: &str = "\
Exit status:
  0  success
  2  invalid input: unreadable or malformed CSV, unknown method, bad config
  3  the statistic is undefined for the data (e.g. no events in a group)

Input CSV files need the header `time,event,group`, with event and group in {0,1}.
SURVDIFF_THREADS caps the number of worker threads.";

#[derive(Parser)]
#[command(
    name = "survdiff",
    version,
    about = "Two-sample tests for right-censored survival data"
)]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether the two groups of a data file share a survival distribution.
    #[command(after_help = AFTER_HELP)]
    Test(TestArgs),
    /// Run a Monte Carlo study from a config file or a built-in scenario.
    #[command(after_help = AFTER_HELP)]
    Simulate(SimulateArgs),
    /// Write Kaplan-Meier curves of both groups as CSV and SVG.
    #[command(after_help = AFTER_HELP)]
    Curves(CurvesArgs),
    /// List the built-in scenarios or the registered methods.
    Scenarios {
        /// Print one method descriptor per line instead.
        #[arg(long)]
        list_methods: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct TestArgs {
    /// CSV file with columns time,event,group.
    #[arg(long, short)]
    input: PathBuf,
    /// Method descriptor, e.g. `energy:alpha=1` or `fleming-harrington:rho=1,gamma=1`.
    #[arg(long, short, default_value = "energy:alpha=1")]
    method: Method,
    /// Number of permutations.
    #[arg(short = 'R', long = "permutations", default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Enumerate every relabelling when there are few enough of them.
    #[arg(long)]
    exhaustive: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML scenario file.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    config: Option<PathBuf>,
    /// Built-in scenario name; see `survdiff scenarios`.
    #[arg(long)]
    builtin: Option<String>,
    /// Subjects per group.
    #[arg(long)]
    n: Option<usize>,
    /// Simulated data sets.
    #[arg(long)]
    replications: Option<usize>,
    /// Permutations per test.
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Method descriptor; repeat to replace the scenario's roster.
    #[arg(long = "method")]
    methods: Vec<Method>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CurvesArgs {
    /// CSV file with columns time,event,group.
    #[arg(
        long,
        short,
        conflicts_with = "builtin",
        required_unless_present = "builtin"
    )]
    input: Option<PathBuf>,
    /// Built-in scenario to draw one data set from.
    #[arg(long)]
    builtin: Option<String>,
    /// Subjects per group for --builtin.
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Curves(args) => cmd_curves(args),
        Command::Scenarios { list_methods } => cmd_scenarios(list_methods),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SURVDIFF_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::data(format!(
                "SURVDIFF_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::data(e.to_string()))
}

fn cmd_test(args: TestArgs) -> Result<(), CliError> {
    let data = read_data(&args.input)?;
    let mut plan = PermutationPlan::new(args.permutations, args.seed)?;
    if args.exhaustive {
        plan = plan.with_exhaustive_limit(EXHAUSTIVE_LIMIT);
    }
    let result = run_permutation_test(&args.method, &data, &plan)?;
    let mut out = std::io::stdout().lock();
    match args.format {
        Format::Json => writeln!(out, "{}", result.to_json())?,
        Format::Csv => result.write_csv(&mut out)?,
        Format::Text => {
            writeln!(out, "method      {}", result.method)?;
            writeln!(out, "n0, n1      {}, {}", data.n0(), data.n1())?;
            writeln!(out, "statistic   {}", result.statistic)?;
            writeln!(out, "p-value     {}", result.p_value)?;
            if result.exhaustive {
                writeln!(out, "splits      {} (exhaustive)", result.replications)?;
            } else {
                writeln!(out, "R           {}", result.replications)?;
            }
            writeln!(out, "seed        {}", result.seed)?;
            if result.n_degenerate > 0 {
                writeln!(
                    out,
                    "undefined   {} permuted statistics",
                    result.n_degenerate
                )?;
            }
            if let Some(p) = result.asymptotic_p_value {
                writeln!(out, "chi2(1) p   {p}")?;
            }
        }
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut config = match (&args.config, &args.builtin) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
            let config = ScenarioConfig::from_toml(&text)
                .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
            match args.n {
                Some(n) => config.with_sizes(n, n),
                None => config,
            }
        }
        (None, Some(name)) => find_builtin(name, args.n)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    if let Some(r) = args.replications {
        config.replications = r;
    }
    if let Some(r) = args.permutations {
        config.permutations = r;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(alpha) = args.alpha {
        config.alpha_level = alpha;
    }
    if !args.methods.is_empty() {
        config.methods = args.methods;
    }
    config.validate()?;
    let result = survdiff_sim::run_study(&config)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let summary_path = args.out_dir.join(format!("{}_summary.csv", config.name));
    let pvalues_path = args.out_dir.join(format!("{}_pvalues.csv", config.name));
    result.write_summary_csv(create(&summary_path)?)?;
    result.write_pvalues_csv(create(&pvalues_path)?)?;
    print_study(&config, &result)?;
    println!("wrote {}", summary_path.display());
    println!("wrote {}", pvalues_path.display());
    Ok(())
}

fn print_study(config: &ScenarioConfig, result: &StudyResult) -> std::io::Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "{}: n0={} n1={} replications={} permutations={} seed={}",
        config.name, config.n0, config.n1, config.replications, config.permutations, config.seed
    )?;
    let width = result
        .methods
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(6)
        .max(6);
    writeln!(
        out,
        "{:<width$}  {:>9}  {:>7}  {:>7}  {:>10}",
        "method",
        format!("rej@{}", result.alpha_level),
        "mean_p",
        "sd_p",
        "undefined"
    )?;
    for s in &result.summaries {
        writeln!(
            out,
            "{:<width$}  {:>9.3}  {:>7.3}  {:>7.3}  {:>10}",
            s.method, s.rejection_rate, s.mean_p, s.sd_p, s.n_degenerate
        )?;
    }
    Ok(())
}

fn cmd_curves(args: CurvesArgs) -> Result<(), CliError> {
    let (name, data) = match (&args.input, &args.builtin) {
        (Some(path), _) => (file_stem(path), read_data(path)?),
        (None, Some(name)) => {
            let config = find_builtin(name, Some(args.n))?;
            let generator = Generator::new(&config)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(args.seed, 0, 0));
            (config.name.clone(), generator.sample(&mut rng)?)
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let curves = group_curves(&data);
    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join(format!("{name}_curves.csv"));
    let svg_path = args.out_dir.join(format!("{name}_curves.svg"));
    let mut csv = create(&csv_path)?;
    write_curves_csv(&curves, &mut csv)?;
    csv.flush()?;
    std::fs::write(&svg_path, curves_svg(&curves, &name))?;
    for (g, curve) in curves.iter().enumerate() {
        println!(
            "group {g}: n={} events={} final survival {}",
            [data.n0(), data.n1()][g],
            [&data.group0, &data.group1][g].n_events(),
            curve.last_value()
        );
    }
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn cmd_scenarios(list_methods: bool) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    if list_methods {
        for method in Method::registry() {
            writeln!(out, "{method}")?;
        }
        return Ok(());
    }
    writeln!(
        out,
        "{:<36}  {:>5}  {:>5}  {:>12}",
        "name", "n0", "n1", "replications"
    )?;
    for s in builtin_scenarios() {
        writeln!(
            out,
            "{:<36}  {:>5}  {:>5}  {:>12}",
            s.name, s.n0, s.n1, s.replications
        )?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(format!("cannot create {}: {e}", path.display())))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}
