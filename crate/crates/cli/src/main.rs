use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dissest::cone::{records_from_csv, records_to_csv, EstimateReport};
use dissest::experiment::{
    bench_to_csv, run_complexity_bench, run_fig1, run_fig2, run_fig3, run_fig4, trajectory_csv, write_file,
    BenchConfig, ExperimentSpec, Fig1Variant, FigureOptions, FigureRun, Manifest, SampleSet,
};
use dissest::svm::{features_to_csv, GeneralizationBoundInput, SupplyReport};
use dissest::{
    generalization_bound, ocsvm_hard, robust_cone, robust_gain, Error, FeaturePoint, InputHold, Result,
    RobustMargins, TrajectoryRecord, DEFAULT_DT,
};

#[derive(Parser)]
#[command(name = "dissest", version, about = "Data-driven dissipativity estimation")]
struct Cli {
    /// Worker threads for trajectory simulation (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample inputs only and write the sample-set manifest.
    Gen(RunArgs),
    /// Sample inputs, simulate the plant and write trajectory records.
    Sim(RunArgs),
    /// Estimate a cone, an L2 gain or a supply rate.
    Estimate(EstimateArgs),
    /// Grid covers with Fourier and Legendre bases on both plants.
    Fig1(Fig1Args),
    /// Uniform coefficient sampling for several basis sizes.
    Fig2(Fig2Args),
    /// Fixed-length random walks for several horizons.
    Fig3(Fig3Args),
    /// Prefix sweeps of a single random walk on both plants.
    Fig4(Fig4Args),
    /// Sample count, time and error versus basis size.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum HoldArg {
    Zoh,
    Foh,
}

impl From<HoldArg> for InputHold {
    fn from(h: HoldArg) -> Self {
        match h {
            HoldArg::Zoh => InputHold::ZeroOrder,
            HoldArg::Foh => InputHold::FirstOrder,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    hold: Option<HoldArg>,
    /// Also write the first K trajectories as time series.
    #[arg(long, value_name = "K")]
    dump: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Cone,
    Svm,
    Gain,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(value_enum)]
    estimator: EstimatorArg,
    /// Records CSV with header `T,norm_u_sq,cross,norm_y_sq`.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    records: Option<PathBuf>,
    /// Experiment spec to simulate first.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    hold: Option<HoldArg>,
    /// Covering radius for the robust margins (default 0).
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Lipschitz bound; defaults to the plant's when a spec is given.
    #[arg(long)]
    lipschitz: Option<f64>,
    /// Use the strict (both-sided) perturbation margins.
    #[arg(long)]
    strict: bool,
    /// Failure probability for the SVM generalization bound.
    #[arg(long)]
    confidence: Option<f64>,
    /// Feature norm constant for the SVM generalization bound.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct FigArgs {
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "foh")]
    hold: HoldArg,
}

impl FigArgs {
    fn options(&self) -> FigureOptions {
        FigureOptions {
            dt: self.dt,
            seed: self.seed,
            hold: self.hold.into(),
        }
    }
}

#[derive(Args)]
struct Fig1Args {
    #[command(flatten)]
    fig: FigArgs,
    /// fourier-nonseq, legendre-T10 or legendre-T1 (default: all).
    #[arg(long, value_delimiter = ',')]
    variant: Vec<Fig1Variant>,
}

#[derive(Args)]
struct Fig2Args {
    #[command(flatten)]
    fig: FigArgs,
    #[arg(long = "b", value_delimiter = ',', default_values_t = [2, 4, 10, 100])]
    b_list: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long = "T", default_value_t = 20.0)]
    horizon: f64,
}

#[derive(Args)]
struct Fig3Args {
    #[command(flatten)]
    fig: FigArgs,
    #[arg(long = "T", value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0, 100.0])]
    t_list: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    count: usize,
}

#[derive(Args)]
struct Fig4Args {
    #[command(flatten)]
    fig: FigArgs,
    #[arg(long = "T-min", default_value_t = 0.2)]
    t_min: f64,
    #[arg(long = "T-max", value_delimiter = ',', default_values_t = [4.0, 50.0])]
    t_max: Vec<f64>,
    #[arg(long, default_value_t = 0.2)]
    step: f64,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    fig: FigArgs,
    #[arg(long = "grid-b", value_delimiter = ',')]
    grid_b: Vec<usize>,
    #[arg(long = "N", default_value_t = 3)]
    half_density: u32,
    /// Largest grid that is simulated; bigger grids are reported as budget rows.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    #[arg(long = "ml-b", value_delimiter = ',')]
    ml_b: Vec<usize>,
    #[arg(long = "ml-count", default_value_t = 1000)]
    ml_count: usize,
    #[arg(long = "T", default_value_t = 20.0)]
    horizon: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::InvalidArgument("--workers must be at least 1".into()));
        }
        // Only fails if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Gen(args) => gen(&args),
        Command::Sim(args) => sim(&args),
        Command::Estimate(args) => estimate(&args),
        Command::Fig1(args) => {
            let variants = if args.variant.is_empty() {
                Fig1Variant::ALL.to_vec()
            } else {
                args.variant.clone()
            };
            figure(run_fig1(&variants, &args.fig.options())?, &args.fig, "fig1")
        }
        Command::Fig2(args) => figure(
            run_fig2(&args.b_list, args.count, args.horizon, &args.fig.options())?,
            &args.fig,
            "fig2",
        ),
        Command::Fig3(args) => figure(
            run_fig3(&args.t_list, args.count, &args.fig.options())?,
            &args.fig,
            "fig3",
        ),
        Command::Fig4(args) => figure(
            run_fig4(args.t_min, &args.t_max, args.step, &args.fig.options())?,
            &args.fig,
            "fig4",
        ),
        Command::Bench(args) => bench(&args),
    }
}

fn out_dir(out: &Option<PathBuf>, fallback: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| Path::new("out").join(fallback))
}

fn load_spec(
    path: &Path,
    seed: Option<u64>,
    dt: Option<f64>,
    hold: Option<HoldArg>,
) -> Result<ExperimentSpec> {
    let mut spec: ExperimentSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    if seed.is_some() {
        spec.seed = seed;
    }
    if let Some(dt) = dt {
        spec.dt = dt;
    }
    if let Some(h) = hold {
        spec.plant = spec.plant.with_hold(h.into());
    }
    spec.validate()?;
    Ok(spec)
}

fn spec_out(spec: &ExperimentSpec, out: &Option<PathBuf>, command: &str) -> PathBuf {
    match (out, &spec.out) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => PathBuf::from(o),
        (None, None) => Path::new("out").join(command),
    }
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_file(dir, name, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn gen(args: &RunArgs) -> Result<()> {
    let spec = load_spec(&args.spec, args.seed, args.dt, args.hold)?;
    let dir = spec_out(&spec, &args.out, "gen");
    let set = SampleSet::generate(&spec)?;
    let mut manifest = Manifest::for_spec(&spec, "gen")?;
    write_file(&dir, "samples.csv", &set.manifest_csv())?;
    manifest.files.push("samples.csv".into());
    for i in 0..args.dump.unwrap_or(0).min(set.len()) {
        let name = format!("inputs/input_{i}.csv");
        write_file(&dir, &name, &set.input(i)?.to_csv())?;
        manifest.files.push(name);
    }
    manifest.write(&dir)?;
    println!("{} inputs -> {}", set.len(), dir.display());
    Ok(())
}

fn simulate(spec: &ExperimentSpec) -> Result<(SampleSet, Vec<TrajectoryRecord>)> {
    let set = SampleSet::generate(spec)?;
    let records = set.simulate(&spec.plant)?;
    Ok((set, records))
}

fn sim(args: &RunArgs) -> Result<()> {
    let spec = load_spec(&args.spec, args.seed, args.dt, args.hold)?;
    let dir = spec_out(&spec, &args.out, "sim");
    let (set, records) = simulate(&spec)?;
    let mut manifest = Manifest::for_spec(&spec, "sim")?;
    write_file(&dir, "samples.csv", &set.manifest_csv())?;
    write_file(&dir, "records.csv", &records_to_csv(&records))?;
    manifest
        .files
        .extend(["samples.csv".into(), "records.csv".into()]);
    for i in 0..args.dump.unwrap_or(0).min(set.len()) {
        let name = format!("trajectories/traj_{i}.csv");
        write_file(&dir, &name, &trajectory_csv(&set, &spec.plant, i)?)?;
        manifest.files.push(name);
    }
    manifest.write(&dir)?;
    println!("{} records -> {}", records.len(), dir.display());
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let (records, mut manifest, default_lipschitz, dir) = match (&args.records, &args.spec) {
        (Some(path), _) => {
            let records = records_from_csv(&fs::read_to_string(path)?)?;
            let manifest = Manifest::new(
                "estimate",
                "estimate",
                None,
                args.dt.unwrap_or(DEFAULT_DT),
                serde_json::json!({ "records": path.display().to_string() }),
            );
            (records, manifest, None, out_dir(&args.out, "estimate"))
        }
        (None, Some(path)) => {
            let spec = load_spec(path, args.seed, args.dt, args.hold)?;
            let (_, records) = simulate(&spec)?;
            let manifest = Manifest::for_spec(&spec, "estimate")?;
            let dir = spec_out(&spec, &args.out, "estimate");
            write_file(&dir, "records.csv", &records_to_csv(&records))?;
            (records, manifest, spec.plant.lipschitz(), dir)
        }
        (None, None) => return Err(Error::InvalidArgument("need --records or --spec".into())),
    };
    if args.spec.is_some() {
        manifest.files.push("records.csv".into());
    }

    match args.estimator {
        EstimatorArg::Cone | EstimatorArg::Gain => {
            let margins = if args.delta > 0.0 {
                let l = args.lipschitz.or(default_lipschitz).ok_or_else(|| {
                    Error::InvalidArgument("--delta > 0 needs --lipschitz or a spec".into())
                })?;
                let m = RobustMargins::new(l, args.delta)?;
                if args.strict {
                    m.strict()
                } else {
                    m
                }
            } else {
                RobustMargins::zero()
            };
            let bounds = robust_cone(&records, &margins)?;
            let gamma = match args.estimator {
                EstimatorArg::Gain => Some(robust_gain(&records, &margins)?),
                _ => None,
            };
            let report = EstimateReport::new(&bounds, gamma);
            write_json(&dir, "report.json", &report)?;
            println!("{}", serde_json::to_string(&report)?);
        }
        EstimatorArg::Svm => {
            // Zero trajectories satisfy every supply rate with equality and
            // would put the origin in the hull.
            let points: Vec<FeaturePoint> = records
                .iter()
                .filter(|r| r.norm_u_sq > 0.0 || r.norm_y_sq > 0.0)
                .map(FeaturePoint::from_record)
                .collect();
            let supply = ocsvm_hard(&points)?;
            let bound = match args.confidence {
                Some(conf) => {
                    let mut inp = GeneralizationBoundInput::for_supply(points.len() as u64, &supply, conf)?;
                    if let Some(c) = args.c {
                        inp = GeneralizationBoundInput::new(inp.samples, c, inp.gamma_hat, conf)?;
                    }
                    Some(generalization_bound(&inp))
                }
                None => None,
            };
            let report = SupplyReport::new(&supply, &points, bound)?;
            write_file(&dir, "features.csv", &features_to_csv(&points))?;
            manifest.files.push("features.csv".into());
            write_json(&dir, "report.json", &report)?;
            println!("{}", serde_json::to_string(&report)?);
        }
    }
    manifest.files.push("report.json".into());
    manifest.write(&dir)
}

fn figure(run: FigureRun, fig: &FigArgs, name: &str) -> Result<()> {
    let dir = out_dir(&fig.out, name);
    run.write(&dir)?;
    for p in &run.panels {
        println!(
            "{:<16} {:<9} a_R {:.4}  b_L {:.4}  b_I {:.4}",
            p.label, p.plant, p.bounds.a_r, p.bounds.b_l, p.bounds.b_i
        );
    }
    println!("-> {}", dir.display());
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let defaults = BenchConfig::default();
    let cfg = BenchConfig {
        grid_b: if args.grid_b.is_empty() {
            defaults.grid_b
        } else {
            args.grid_b.clone()
        },
        half_density: args.half_density,
        budget: args.budget,
        ml_b: if args.ml_b.is_empty() {
            defaults.ml_b
        } else {
            args.ml_b.clone()
        },
        ml_count: args.ml_count,
        horizon: args.horizon,
        dt: args.fig.dt,
        seed: args.fig.seed,
        hold: args.fig.hold.into(),
    };
    let dir = out_dir(&args.fig.out, "bench");
    let rows = run_complexity_bench(&cfg)?;
    let csv = bench_to_csv(&rows);
    write_file(&dir, "records.csv", &csv)?;
    write_json(&dir, "report.json", &rows)?;
    let mut manifest = Manifest::new(
        "bench",
        "bench",
        Some(cfg.seed),
        cfg.dt,
        serde_json::to_value(&cfg)?,
    );
    manifest
        .files
        .extend(["records.csv".into(), "report.json".into()]);
    manifest.write(&dir)?;
    print!("{csv}");
    Ok(())
}
