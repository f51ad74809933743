use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pacf_audit::artifact::ModelFile;
use pacf_audit::audit::{run_audit, AuditConfig, PhiMode, RSource};
use pacf_audit::complexity::{
    analytic_rademacher_bound, collaborative_bounds, pacf_sample_complexity, ComplexityBudget,
    PacfVariant,
};
use pacf_audit::fairness::{
    build_metric, empirical_metric_fairness, min_gamma_for_alpha, FairnessConfig,
};
use pacf_audit::ingest::{
    builtin_schema, encode, extract_subgroups, parse_table_in, Encoder, RawTable, Schema,
    SubgroupKey, TableFormat, TableSource, DATA_DIR_ENV,
};
use pacf_audit::linmodel::{
    cross_validate, feasible_folds, predict_scores, train_logistic, NormStats, TrainConfig,
};
use pacf_audit::{Error, Matrix};

#[derive(Parser)]
#[command(
    name = "pacf-audit",
    version,
    about = "Audit subgroup sample complexity for metric-fair linear learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full subgroup audit and write the JSON report.
    Audit(AuditArgs),
    /// Evaluate the sample complexity formulas for given norms and parameters.
    Complexity(ComplexityArgs),
    /// Train a logistic model (penalty chosen by cross-validation) and write a model file.
    Train(TrainArgs),
    /// Estimate empirical metric fairness of a model file on a dataset.
    Fairness(FairnessArgs),
    /// Print a builtin schema as TOML.
    Schema {
        /// Builtin schema id (adult, german).
        id: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Adult,
    German,
}

impl Preset {
    fn id(self) -> &'static str {
        match self {
            Preset::Adult => "adult",
            Preset::German => "german",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    UciAdult,
    UciGerman,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::UciAdult => TableFormat::UciAdult,
            FormatArg::UciGerman => TableFormat::UciGerman,
        }
    }
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file, or a builtin id (adult, german) resolved in the data directory.
    #[arg(long)]
    dataset: Option<String>,
    /// Table format of --dataset.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Schema TOML file, or a builtin id (adult, german).
    #[arg(long)]
    schema: Option<String>,
    /// Directory holding adult.data and german.data.
    #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
    data_dir: PathBuf,
}

impl DataArgs {
    fn load(&self, preset: Option<Preset>) -> Result<(RawTable, Schema), Error> {
        let dataset = self
            .dataset
            .clone()
            .or_else(|| preset.map(|p| p.id().to_string()))
            .ok_or_else(|| {
                Error::InvalidConfig("either --dataset or --preset is required".into())
            })?;
        let schema_ref = self
            .schema
            .clone()
            .or_else(|| preset.map(|p| p.id().to_string()))
            .ok_or_else(|| {
                Error::InvalidConfig("either --schema or --preset is required".into())
            })?;
        let table = parse_table_in(
            &TableSource::parse(&dataset),
            self.format.into(),
            &self.data_dir,
        )?;
        Ok((table, load_schema(&schema_ref)?))
    }
}

fn load_schema(reference: &str) -> Result<Schema, Error> {
    if Path::new(reference).is_file() {
        Schema::load(Path::new(reference))
    } else if reference.ends_with(".toml") {
        // report the missing file rather than an unknown builtin
        Schema::load(Path::new(reference))
    } else {
        builtin_schema(reference)
    }
}

#[derive(Args)]
struct AuditArgs {
    /// Reproduction preset: builtin dataset and schema.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[command(flatten)]
    data: DataArgs,
    /// Master random seed.
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    eps_alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    eps_gamma: f64,
    /// Leading constant of the big-O sample complexity expressions.
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
    /// Accuracy parameter of the collaborative PAC bounds.
    #[arg(long, default_value_t = 0.1)]
    pac_eps: f64,
    /// Monte-Carlo sign draws per subgroup.
    #[arg(long, default_value_t = 1000)]
    n_draws: usize,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Comma-separated penalty grid (default: 1e-4 .. 1e4, nine values).
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Slack of the headline fairness estimate.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Comma-separated slack grid for the fairness curve.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    alpha_target: f64,
    /// Recommend strictly increasing sizes rather than relying on the
    /// subgroup-order tie-break between equal sizes.
    #[arg(long)]
    strict_sizes: bool,
    #[arg(long, value_enum, default_value = "analytic")]
    r_source: RSourceArg,
    #[arg(long, value_enum, default_value = "final-model")]
    phi_mode: PhiModeArg,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Markdown report path.
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RSourceArg {
    Analytic,
    MonteCarlo,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiModeArg {
    FinalModel,
    FoldMax,
}

#[derive(Args)]
struct ComplexityArgs {
    /// Largest input norm R.
    #[arg(long = "R", alias = "r")]
    r: Option<f64>,
    /// Weight norm bound phi.
    #[arg(long)]
    phi: Option<f64>,
    /// Sample size, for the Rademacher bound R*phi/sqrt(m).
    #[arg(long)]
    m: Option<usize>,
    /// Hypothesis dimension, for the collaborative bounds.
    #[arg(long)]
    d: Option<usize>,
    /// Number of subgroups, for the collaborative bounds.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Defaults to --eps.
    #[arg(long)]
    eps_alpha: Option<f64>,
    /// Defaults to --eps.
    #[arg(long)]
    eps_gamma: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    constant: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Restrict training to one subgroup, e.g. `sex=Female,race=White`.
    #[arg(long)]
    subgroup: Option<String>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FairnessArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Dataset file or builtin id.
    #[arg(long)]
    dataset: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, env = DATA_DIR_ENV, default_value = "data")]
    data_dir: PathBuf,
    /// Restrict evaluation to one subgroup, e.g. `status_sex=A92`.
    #[arg(long)]
    subgroup: Option<String>,
    #[arg(long)]
    gamma: f64,
    /// Also report the smallest slack reaching this violation rate.
    #[arg(long)]
    alpha_target: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    exhaustive_cap: usize,
    #[arg(long, default_value_t = 200_000)]
    sampled_pairs: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Audit(args) => cmd_audit(args),
        Command::Complexity(args) => cmd_complexity(args),
        Command::Train(args) => cmd_train(args),
        Command::Fairness(args) => cmd_fairness(args),
        Command::Schema { id } => builtin_schema(&id).map(|s| print!("{}", s.to_toml_string())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::AuditAborted(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_audit(args: AuditArgs) -> Result<(), Error> {
    let (table, schema) = args.data.load(args.preset)?;
    let mut config = AuditConfig::with_seed(args.seed);
    config.budget = ComplexityBudget {
        delta: args.delta,
        eps_alpha: args.eps_alpha,
        eps_gamma: args.eps_gamma,
        constant: args.constant,
    };
    config.pac_epsilon = args.pac_eps;
    config.n_draws = args.n_draws;
    config.train.folds = args.folds;
    if let Some(grid) = args.lambda_grid {
        config.train.lambda_grid = grid;
    }
    config.gamma = args.gamma;
    if let Some(grid) = args.gamma_grid {
        config.gamma_grid = grid;
    }
    config.alpha_target = args.alpha_target;
    config.strict_sizes = args.strict_sizes;
    config.r_source = match args.r_source {
        RSourceArg::Analytic => RSource::Analytic,
        RSourceArg::MonteCarlo => RSource::MonteCarlo,
    };
    config.phi_mode = match args.phi_mode {
        PhiModeArg::FinalModel => PhiMode::FinalModel,
        PhiModeArg::FoldMax => PhiMode::FoldMax,
    };

    let report = run_audit(&table, &schema, &config)?;
    let json = report.to_json();
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = &args.markdown {
        write_file(path, &report.to_markdown())?;
    }
    if args.out.is_some() {
        for e in &report.entries {
            let status = match (&e.complexity_rank, &e.size_rank) {
                (Some(c), Some(s)) => format!("complexity rank {c}, size rank {s}"),
                _ => "infeasible".to_string(),
            };
            println!(
                "subgroup {} ({}): n = {}, {status}",
                e.index, e.label, e.size
            );
        }
        println!(
            "d = {}, k = {}, inversions = {}, kendall tau = {:.4}",
            report.d,
            report.k,
            report.inversions.len(),
            report.kendall_tau
        );
    }
    Ok(())
}

fn cmd_complexity(args: ComplexityArgs) -> Result<(), Error> {
    let budget = ComplexityBudget {
        delta: args.delta,
        eps_alpha: args.eps_alpha.unwrap_or(args.eps),
        eps_gamma: args.eps_gamma.unwrap_or(args.eps),
        constant: args.constant,
    };
    budget.validate()?;
    let mut printed = false;
    if args.r.is_some() || args.phi.is_some() {
        let stats = NormStats {
            r: args.r.unwrap_or(1.0),
            phi: args.phi.unwrap_or(1.0),
            m: args.m.unwrap_or(1),
        };
        if stats.r < 0.0 || stats.phi < 0.0 {
            return Err(Error::InvalidConfig(
                "R and phi must be non-negative".into(),
            ));
        }
        println!(
            "pacf_uniform: {}",
            pacf_sample_complexity(&stats, &budget, PacfVariant::Uniform)?
        );
        println!(
            "pacf_erm: {}",
            pacf_sample_complexity(&stats, &budget, PacfVariant::Erm)?
        );
        if let Some(m) = args.m {
            if m == 0 {
                return Err(Error::InvalidConfig("m must be at least 1".into()));
            }
            println!("rademacher_bound: {}", analytic_rademacher_bound(&stats));
        }
        printed = true;
    }
    if let (Some(d), Some(k)) = (args.d, args.k) {
        let b = collaborative_bounds(d, k, args.eps, args.delta)?;
        println!("centralized: {}", b.centralized);
        match b.personalized {
            Some(p) => println!("personalized: {p}"),
            None => println!("personalized: undefined (k = 1)"),
        }
        println!("uniform_lower: {}", b.uniform_lower);
        if !b.in_validity_domain {
            println!("warning: the uniform lower bound is stated for eps, delta in (0, 0.1]");
        }
        printed = true;
    } else if args.d.is_some() || args.k.is_some() {
        return Err(Error::InvalidConfig(
            "--d and --k must be given together".into(),
        ));
    }
    if !printed {
        return Err(Error::InvalidConfig(
            "nothing to compute: pass --R/--phi and/or --d/--k".into(),
        ));
    }
    Ok(())
}

/// Parses `col=value,col=value`.
fn parse_subgroup(spec: &str) -> Result<SubgroupKey, Error> {
    let pairs = spec
        .split(',')
        .map(|part| {
            part.split_once('=')
                .map(|(c, v)| (c.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("subgroup term `{part}` is not col=value"))
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SubgroupKey(pairs))
}

/// Row indices of the subgroup whose key matches `spec` (all rows when absent).
fn select_rows(
    spec: Option<&str>,
    ds: &pacf_audit::ingest::EncodedDataset,
    table: &RawTable,
    schema: &Schema,
) -> Result<(Vec<usize>, Option<SubgroupKey>), Error> {
    let Some(spec) = spec else {
        return Ok(((0..ds.m()).collect(), None));
    };
    let wanted = parse_subgroup(spec)?;
    let groups = extract_subgroups(ds, table, schema)?;
    let group = groups
        .into_iter()
        .find(|g| g.key == wanted)
        .ok_or_else(|| Error::InvalidConfig(format!("no subgroup matches `{spec}`")))?;
    Ok((group.indices, Some(wanted)))
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let (table, schema) = args.data.load(None)?;
    let encoder = Encoder::fit(&table, &schema)?;
    let ds = encode(&table, &schema)?;
    let (rows, subgroup) = select_rows(args.subgroup.as_deref(), &ds, &table, &schema)?;
    let (x, y) = ds.subset(&rows);
    let mut config = TrainConfig {
        seed: args.seed,
        ..TrainConfig::default()
    };
    if let Some(grid) = args.lambda_grid {
        config.lambda_grid = grid;
    }
    config.folds = feasible_folds(&y, args.folds, config.stratified);
    let cv = cross_validate(&x, &y, &config)?;
    let mut model = train_logistic(&x, &y, cv.lambda_star, &config)?;
    model.cv_log_loss = cv.loss_at(cv.lambda_star);
    let file = ModelFile {
        encoder,
        model,
        subgroup,
        cv: Some(cv),
    };
    write_file(&args.out, &file.to_json())?;
    println!(
        "lambda_star: {}\nconverged: {}\nrows: {}",
        file.model.lambda_star,
        file.model.converged,
        x.rows()
    );
    Ok(())
}

fn cmd_fairness(args: FairnessArgs) -> Result<(), Error> {
    let file = ModelFile::load(&args.model)?;
    let table = parse_table_in(
        &TableSource::parse(&args.dataset),
        args.format.into(),
        &args.data_dir,
    )?;
    let ds = file.encoder.transform(&table)?;
    let (rows, _) = select_rows(args.subgroup.as_deref(), &ds, &table, &file.encoder.schema)?;
    let x: Matrix = ds.x.select_rows(&rows);
    let scores = predict_scores(&file.model, &x)?;
    let metric = build_metric(&ds)?;
    let cfg = FairnessConfig {
        exhaustive_cap: args.exhaustive_cap,
        sampled_pairs: args.sampled_pairs,
        seed: args.seed,
        ..FairnessConfig::default()
    };
    let est = empirical_metric_fairness(&scores, &x, &metric, args.gamma, &cfg)?;
    println!("gamma: {}", est.gamma);
    println!("alpha_hat: {}", est.alpha_hat);
    println!("pairs_evaluated: {}", est.pairs_evaluated);
    println!("exhaustive: {}", est.exhaustive);
    for p in &est.violating_pairs {
        println!("violating_pair: {} {} excess {}", p.i, p.j, p.excess);
    }
    if let Some(alpha) = args.alpha_target {
        let g = min_gamma_for_alpha(&scores, &x, &metric, alpha, &cfg)?;
        println!("min_gamma_for_alpha: {g}");
    }
    Ok(())
}
