//! Command-line front end: preset experiments, custom Riemann runs, the
//! exact-solution oracle, microscopic runs and convergence studies.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! validation errors. Output CSV paths are echoed on stdout; progress
//! lines go to stderr and are suppressed by --quiet.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use traffic_flow::experiments::{
    preset, rows_from_fields, rows_from_state, run_comparison, write_csv, PresetId,
};
use traffic_flow::micro::{density_reconstruct, MicroConfig, MicroModel};
use traffic_flow::riemann::sample_on_grid;
use traffic_flow::{
    load_config, run_macro, run_micro, CoefficientProfile, Error, FileConfig, ModelKind,
    ModelParameters, SimulationConfig,
};

#[derive(Parser)]
#[command(
    name = "traffic-flow",
    version,
    about = "Macroscopic and microscopic traffic flow simulations",
    propagate_version = true
)]
struct Cli {
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single Riemann problem and write the final state as CSV.
    Run(RunArgs),
    /// Run a preset experiment at both standard resolutions.
    Preset(PresetArgs),
    /// Sample the exact Aw-Rascle solution of a preset onto a grid.
    Oracle(OracleArgs),
    /// Run a microscopic car-following simulation of a preset's data.
    Micro(MicroArgs),
    /// Grid-refinement self-convergence study on smooth data.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct ParamArgs {
    /// Minimal headway length.
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Acceleration threshold distance (defaults to h).
    #[arg(long)]
    h_a: Option<f64>,
    /// Braking threshold distance (defaults to h).
    #[arg(long)]
    h_b: Option<f64>,
    /// Reference velocity.
    #[arg(long, default_value_t = 1.0)]
    v_ref: f64,
    /// Maximal velocity.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    /// Gradient cap of the merged model.
    #[arg(long, default_value_t = 10.0)]
    c_limit: f64,
}

impl ParamArgs {
    fn build(&self) -> ModelParameters {
        let mut p = ModelParameters::normalized();
        p.h = self.h;
        p.h_a = self.h_a.unwrap_or(self.h);
        p.h_b = self.h_b.unwrap_or(self.h);
        p.v_ref = self.v_ref;
        p.w_max = self.w;
        p.c_limit = self.c_limit;
        p
    }
}

#[derive(Args)]
struct RunArgs {
    /// Model: ar, hj, merged or ar-cons.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    rho_l: Option<f64>,
    #[arg(long)]
    u_l: Option<f64>,
    #[arg(long)]
    rho_r: Option<f64>,
    #[arg(long)]
    u_r: Option<f64>,
    /// Position of the initial discontinuity.
    #[arg(long)]
    x0: Option<f64>,
    /// Cell width.
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CFL number in (0, 0.5].
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    domain_lo: Option<f64>,
    #[arg(long)]
    domain_hi: Option<f64>,
    /// Flat key-value config file; flags override file entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct PresetArgs {
    /// Preset id: ex1, ex2, ex3 or ex4.
    #[arg(long)]
    id: String,
    /// Comma-separated model list overriding the preset default.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    /// Output directory for the CSV files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// CFL number.
    #[arg(long, default_value_t = 0.45)]
    cfl: f64,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Preset id: ex1, ex2, ex3 or ex4.
    #[arg(long)]
    id: String,
    /// Sampling time.
    #[arg(long)]
    t: f64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Number of sample cells.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct MicroArgs {
    /// Micro model: rf (Rascle-type) or hj.
    #[arg(long, default_value = "rf")]
    model: String,
    /// Number of cars.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Preset id providing the Riemann data.
    #[arg(long)]
    id: String,
    /// End time (defaults to the preset horizon).
    #[arg(long)]
    t_end: Option<f64>,
    /// Reconstruction cell width.
    #[arg(long, default_value_t = 0.01)]
    dx: f64,
    /// Left padding of the placement interval (defaults to w * t_end).
    #[arg(long)]
    pad_left: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Model: ar, hj, merged or ar-cons.
    #[arg(long, default_value = "ar")]
    model: String,
    /// Number of refinement levels (>= 3).
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Coarsest cell count.
    #[arg(long, default_value_t = 100)]
    base_n: usize,
    /// End time of each run.
    #[arg(long, default_value_t = 0.08)]
    t_end: f64,
    /// CFL number.
    #[arg(long, default_value_t = 0.45)]
    cfl: f64,
    #[command(flatten)]
    params: ParamArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Run(args) => cmd_run(args, quiet),
        Command::Preset(args) => cmd_preset(args, quiet),
        Command::Oracle(args) => cmd_oracle(args, quiet),
        Command::Micro(args) => cmd_micro(args, quiet),
        Command::Converge(args) => cmd_converge(args, quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Validation and usage problems exit with 2, runtime failures with 1.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter { .. }
        | Error::Domain { .. }
        | Error::Config { .. }
        | Error::UnknownPreset(_)
        | Error::InvalidState(_) => 2,
        _ => 1,
    }
}

fn progress(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn echo_path(path: &Path) {
    println!("{}", path.display());
}

fn cmd_run(args: RunArgs, quiet: bool) -> Result<(), Error> {
    let file = match &args.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let mut params = args.params.build();
    file.apply_params(&mut params);
    // flags override file entries, file entries override defaults
    let model: ModelKind = match (&args.model, file.model) {
        (Some(s), _) => s.parse()?,
        (None, Some(m)) => m,
        (None, None) => ModelKind::AwRascleType,
    };
    let pick = |flag: Option<f64>, file_val: Option<f64>, default: f64| {
        flag.or(file_val).unwrap_or(default)
    };
    let rho_l = pick(args.rho_l, file.rho_l, 0.5);
    let u_l = pick(args.u_l, file.u_l, 1.0);
    let rho_r = pick(args.rho_r, file.rho_r, 0.5);
    let u_r = pick(args.u_r, file.u_r, 0.0);
    let x0 = pick(args.x0, file.x0, 0.5);
    let dx = pick(args.dx, file.dx, 0.01);
    let t_end = pick(args.t_end, file.t_end, 0.2);
    let cfl = pick(args.cfl, file.cfl, 0.5);
    let x_lo = pick(args.domain_lo, file.domain_lo, 0.0);
    let x_hi = pick(args.domain_hi, file.domain_hi, 1.0);
    let out = args
        .out
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from("run.csv"));

    if !(dx > 0.0) {
        return Err(Error::domain(
            "cli",
            format!("dx must be positive, got {dx}"),
        ));
    }
    let n = ((x_hi - x_lo) / dx).round() as usize;
    let mut config =
        SimulationConfig::riemann(model, params, rho_l, u_l, rho_r, u_r, x0, n.max(1), t_end);
    config.x_lo = x_lo;
    config.x_hi = x_hi;
    config.cfl = cfl;
    config.validate()?;

    let run = run_macro(&config)?;
    let state = run.outputs.last().expect("one output");
    progress(
        quiet,
        format!(
            "{} dx={} t={}: {} steps in {:.2?}",
            model,
            config.dx(),
            t_end,
            run.steps,
            run.wall
        ),
    );
    write_csv(&out, &rows_from_state(model.label(), state, &config.params))?;
    echo_path(&out);
    Ok(())
}

fn cmd_preset(args: PresetArgs, quiet: bool) -> Result<(), Error> {
    let id: PresetId = args.id.parse()?;
    let pre = preset(id);
    let params = args.params.build();
    let models: Vec<ModelKind> = if args.models.is_empty() {
        pre.models.clone()
    } else {
        args.models
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?
    };
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let report = run_comparison(
        &pre,
        &models,
        &pre.grid_sizes,
        &params,
        args.cfl,
        Some(&args.out),
    )?;
    for entry in &report.entries {
        progress(
            quiet,
            format!(
                "{id} {} dx={}: {} steps{}",
                entry.model,
                entry.dx,
                entry.run.steps,
                match entry.oracle_l1 {
                    Some(l1) => format!(", L1 to exact = {l1:.5}"),
                    None => String::new(),
                }
            ),
        );
        if let Some(path) = &entry.csv_path {
            echo_path(path);
        }
    }
    for pair in &report.pairs {
        let a = &report.entries[pair.a];
        let b = &report.entries[pair.b];
        progress(
            quiet,
            format!(
                "{id} distance {}@{} vs {}@{}: L1(rho) = {:.5}, Linf(rho) = {:.5}",
                a.model, a.dx, b.model, b.dx, pair.l1_rho, pair.linf_rho
            ),
        );
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs, quiet: bool) -> Result<(), Error> {
    let id: PresetId = args.id.parse()?;
    let pre = preset(id);
    let params = args.params.build();
    params.validate()?;
    let ws = pre.oracle(&params)?;
    let dx = (pre.x_hi - pre.x_lo) / args.n as f64;
    let (rho, u) = sample_on_grid(&ws, pre.x0, args.t, pre.x_lo, dx, args.n);
    progress(quiet, format!("{id} exact solution at t = {}", args.t));
    write_csv(
        &args.out,
        &rows_from_fields("oracle", pre.x_lo, dx, args.t, &rho, &u),
    )?;
    echo_path(&args.out);
    Ok(())
}

fn cmd_micro(args: MicroArgs, quiet: bool) -> Result<(), Error> {
    let id: PresetId = args.id.parse()?;
    let pre = preset(id);
    let params = args.params.build();
    params.validate()?;
    let model: MicroModel = args.model.parse()?;
    let t_end = args.t_end.unwrap_or(pre.t_end);
    let pad_left = args.pad_left.unwrap_or(params.w_max * t_end);
    let n_cells = (((pre.x_hi - pre.x_lo) / args.dx).round() as usize).max(1);
    let config = MicroConfig {
        model,
        params: params.clone(),
        n_cars: args.n,
        rho_l: pre.rho_l,
        u_l: pre.u_l,
        rho_r: pre.rho_r,
        u_r: pre.u_r,
        x0: pre.x0,
        x_lo: pre.x_lo - pad_left,
        x_hi: pre.x_hi,
        t_end,
        dt: None,
        grid: (pre.x_lo, args.dx, n_cells),
        output_times: vec![],
    };
    let run = run_micro(&config)?;
    let snap = run.snapshots.last().expect("one snapshot");
    progress(
        quiet,
        format!(
            "{id} {} n={}: {} steps, h = {:.6}",
            model.label(),
            args.n,
            run.steps,
            snap.state.h
        ),
    );
    let (rho, u) = density_reconstruct(&snap.state, pre.x_lo, args.dx, n_cells);
    write_csv(
        &args.out,
        &rows_from_fields(model.label(), pre.x_lo, args.dx, t_end, &rho, &u),
    )?;
    echo_path(&args.out);
    Ok(())
}

fn cmd_converge(args: ConvergeArgs, quiet: bool) -> Result<(), Error> {
    let model: ModelKind = args.model.parse()?;
    let params = args.params.build();
    params.validate()?;
    let initial = |x: f64| {
        let s = (std::f64::consts::TAU * x).sin();
        (0.4 + 0.05 * s, 0.5 + 0.05 * s)
    };
    let report = traffic_flow::experiments::convergence_study(
        model,
        &params,
        CoefficientProfile::Simplified,
        &initial,
        args.base_n,
        args.levels,
        args.t_end,
        args.cfl,
    )?;
    progress(
        quiet,
        format!(
            "{model}: masked {:.1}% of the domain around extrema",
            100.0 * report.masked_fraction
        ),
    );
    for (k, err) in report.errors.iter().enumerate() {
        println!(
            "level {} -> {}: n = {} vs {}, L1 = {err:.3e}",
            k,
            k + 1,
            report.ns[k],
            report.ns[k + 1]
        );
    }
    for (k, order) in report.orders.iter().enumerate() {
        println!("order between levels {}..{}: {order:.3}", k, k + 2);
    }
    match report.mean_order {
        Some(order) => println!("mean order: {order:.3}"),
        None => println!("errors are zero; order undefined"),
    }
    Ok(())
}
