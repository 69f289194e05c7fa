use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use shapiro::config::Config;
use shapiro::effective::{
    bessel_effective_coupling, decompose_drive, rwa_effective_coupling, rwa_effective_coupling_full_bias, vectorial_effective_coupling,
};
use shapiro::exact::{build_lattice, propagate_exact};
use shapiro::output::{
    curves_table, fmt_float, resonance_table, scan_table, trajectory_table, write_json, Format, Table,
};
use shapiro::potential::{DriveSpec, DriveVariant};
use shapiro::scan::{calibration_hash, find_resonances, run_scan, run_trajectory, Model, ScanContext, OUTPUT_DT};
use shapiro::spectral::{parameter_curves, TmModel};
use shapiro::tables::ParamTable;
use shapiro::twomode::{step_plan, InitialState, TrajectoryRecord};
use shapiro::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "shapiro", version, about = "Driven double-well resonance simulations")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel scans.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit (or load) the potential and report the operating point.
    Calibrate,
    /// Ω(λ), ΔE(λ), κ over the potential domain.
    StaticCurves {
        #[arg(long, value_enum, default_value_t = CurveModel::Standard)]
        model: CurveModel,
        #[arg(long, default_value_t = 0.0)]
        u0n: f64,
        #[arg(long, default_value_t = 100)]
        n_atoms: usize,
        #[arg(long, default_value_t = 56)]
        points: usize,
    },
    /// Frequency scan of the time-averaged imbalance.
    Scan {
        #[command(flatten)]
        over: ScanOverrides,
        /// Also print the extracted resonances to stderr.
        #[arg(long)]
        resonances: bool,
    },
    /// One driven trajectory.
    Trajectory {
        #[command(flatten)]
        drive: DriveArgs,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        u0n: Option<f64>,
        #[arg(long)]
        n_atoms: Option<usize>,
        #[arg(long, default_value_t = 100.0)]
        t_final: f64,
        #[arg(long)]
        initial: Option<String>,
    },
    /// Effective couplings at the resonances ω = ΔE0/n for each drive variant.
    Effective {
        #[arg(long, default_value_t = 5)]
        n_max: u32,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long, value_enum, default_value_t = CurveModel::Improved)]
        model: CurveModel,
    },
    /// Exact small-N lattice trajectory.
    Oracle {
        #[command(flatten)]
        drive: DriveArgs,
        #[arg(long, default_value_t = 2)]
        n_atoms: usize,
        #[arg(long)]
        sites: Option<usize>,
        #[arg(long)]
        u0n: Option<f64>,
        #[arg(long, default_value_t = 20.0)]
        t_final: f64,
        #[arg(long)]
        initial: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum CurveModel {
    Standard,
    Improved,
}

impl From<CurveModel> for TmModel {
    fn from(m: CurveModel) -> Self {
        match m {
            CurveModel::Standard => TmModel::Standard,
            CurveModel::Improved => TmModel::Improved,
        }
    }
}

#[derive(Args, Debug)]
struct DriveArgs {
    /// Drive frequency in units of ΔE0.
    #[arg(long)]
    omega: Option<f64>,
    /// Fixed drive amplitude.
    #[arg(long, conflicts_with = "a")]
    lambda1: Option<f64>,
    /// Coefficient of λ1 = a·ΔE0/ω.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    variant: Option<String>,
}

#[derive(Args, Debug)]
struct ScanOverrides {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    u0n: Option<f64>,
    #[arg(long)]
    n_atoms: Option<usize>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    t_avg: Option<f64>,
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

fn load_config(cli: &Cli) -> Result<Config> {
    match &cli.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &Option<String>) -> Result<Option<T>> {
    s.as_deref().map(str::parse).transpose()
}

fn apply_drive(cfg: &mut Config, d: &DriveArgs) -> Result<()> {
    if let Some(w) = d.omega {
        cfg.drive.omega = w;
    }
    if let Some(l) = d.lambda1 {
        cfg.drive.lambda1 = Some(l);
        cfg.drive.amplitude_rule = None;
        cfg.drive.a = None;
    }
    if let Some(a) = d.a {
        cfg.drive.lambda1 = None;
        cfg.drive.a = Some(a);
    }
    if let Some(v) = parse::<DriveVariant>(&d.variant)? {
        cfg.drive.variant = v;
    }
    cfg.validate()
}

struct Sink {
    out: Box<dyn Write>,
    format: Format,
}

impl Sink {
    fn new(cli: &Cli) -> Result<Self> {
        let out: Box<dyn Write> = match &cli.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Self { out, format: cli.format })
    }

    fn emit<T: Serialize>(&mut self, table: &Table, value: &T) -> Result<()> {
        match self.format {
            Format::Csv => table.write_csv(&mut self.out)?,
            Format::Json => write_json(&mut self.out, value)?,
        }
        self.out.flush()?;
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut cfg = load_config(&cli)?;
    let mut sink = Sink::new(&cli)?;
    match &cli.command {
        Command::Calibrate => calibrate(&cfg, &mut sink),
        Command::StaticCurves { model, u0n, n_atoms, points } => {
            let spec = cfg.potential.build()?;
            let ctx = ScanContext::new(spec)?;
            let (lo, hi) = ctx.spec.lambda_domain();
            let n = (*points).max(2);
            let lambdas: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
            let rows = parameter_curves(&ctx.stationary_grid, &ctx.spec, ctx.spec.g, &lambdas, (*model).into(), *u0n, *n_atoms)?;
            sink.emit(&curves_table(&rows), &rows)
        }
        Command::Scan { over, resonances } => {
            let s = &mut cfg.scan;
            if let Some(m) = parse::<Model>(&over.model)? {
                s.model = m;
            }
            if let Some(v) = parse::<DriveVariant>(&over.variant)? {
                cfg.drive.variant = v;
            }
            let s = &mut cfg.scan;
            s.u0n = over.u0n.unwrap_or(s.u0n);
            s.n_atoms = over.n_atoms.unwrap_or(s.n_atoms);
            s.points = over.points.unwrap_or(s.points);
            s.omega_min = over.omega_min.unwrap_or(s.omega_min);
            s.omega_max = over.omega_max.unwrap_or(s.omega_max);
            s.t_avg = over.t_avg.unwrap_or(s.t_avg);
            if let Some(a) = over.a {
                cfg.drive.lambda1 = None;
                cfg.drive.a = Some(a);
            }
            cfg.validate()?;
            let spec = cfg.scan_spec()?;
            let ctx = ScanContext::new(cfg.potential.build()?)?;
            let scan = run_scan(&spec, &ctx)?;
            if *resonances {
                let r = find_resonances(&scan);
                eprint!("{}", resonance_table(&r).to_csv_string()?);
            }
            sink.emit(&scan_table(&scan), &scan)
        }
        Command::Trajectory { drive, model, u0n, n_atoms, t_final, initial } => {
            apply_drive(&mut cfg, drive)?;
            if let Some(m) = parse::<Model>(model)? {
                cfg.scan.model = m;
            }
            if let Some(i) = parse::<InitialState>(initial)? {
                cfg.scan.initial = i;
            }
            cfg.scan.u0n = u0n.unwrap_or(cfg.scan.u0n);
            cfg.scan.n_atoms = n_atoms.unwrap_or(cfg.scan.n_atoms);
            cfg.scan.omega_grid = Some(vec![cfg.drive.omega]);
            cfg.validate()?;
            let spec = cfg.scan_spec()?;
            let ctx = ScanContext::new(cfg.potential.build()?)?;
            let omega = cfg.drive.omega * ctx.delta_e0;
            let d = DriveSpec { lambda1: spec.amplitude_rule.lambda1(omega, ctx.delta_e0), omega, variant: spec.variant };
            let rec = run_trajectory(&spec, &ctx, &d, *t_final)?;
            sink.emit(&trajectory_table(&rec), &rec)
        }
        Command::Effective { n_max, a, model } => {
            if let Some(a) = a {
                cfg.drive.lambda1 = None;
                cfg.drive.a = Some(*a);
            }
            cfg.validate()?;
            effective(&cfg, *n_max, (*model).into(), &mut sink)
        }
        Command::Oracle { drive, n_atoms, sites, u0n, t_final, initial } => {
            apply_drive(&mut cfg, drive)?;
            if let Some(m) = sites {
                cfg.lattice.sites = *m;
            }
            let u0n = u0n.unwrap_or(cfg.scan.u0n);
            let init = parse::<InitialState>(initial)?.unwrap_or(cfg.scan.initial);
            let ctx = ScanContext::new(cfg.potential.build()?)?;
            let omega = cfg.drive.omega * ctx.delta_e0;
            let rule = cfg.drive.rule()?;
            let d = DriveSpec { lambda1: rule.lambda1(omega, ctx.delta_e0), omega, variant: cfg.drive.variant };
            let grid = cfg.lattice.grid()?;
            let sys = build_lattice(&grid, &ctx.spec, &d, u0n / *n_atoms as f64, *n_atoms)?;
            let psi0 = sys.initial_state(init)?;
            let dt = sys.max_dt()?;
            let (_, h) = step_plan(*t_final, dt);
            let stride = ((OUTPUT_DT / h).floor() as usize).max(1);
            let rec: TrajectoryRecord = propagate_exact(&sys, &psi0, *t_final, dt, stride)?.0;
            sink.emit(&trajectory_table(&rec), &rec)
        }
    }
}

#[derive(Serialize)]
struct CalibrationOut {
    lambda0: f64,
    g: f64,
    d0: f64,
    barrier0: f64,
    omega0: f64,
    delta_e0: f64,
    calibration_hash: String,
    hbar_product: f64,
    lambda: Vec<f64>,
    d: Vec<f64>,
    barrier: Vec<f64>,
}

fn calibrate(cfg: &Config, sink: &mut Sink) -> Result<()> {
    let spec = cfg.potential.build()?;
    let ctx = ScanContext::new(spec.clone())?;
    let p = shapiro::tables::static_params(&ctx.stationary_grid, &spec, spec.lambda0, TmModel::Standard, 0.0, 1)?;
    let f = spec.family();
    let out = CalibrationOut {
        lambda0: spec.lambda0,
        g: spec.g,
        d0: spec.d(spec.lambda0)?,
        barrier0: spec.barrier(spec.lambda0)?,
        omega0: p.omega,
        delta_e0: p.delta_e,
        calibration_hash: calibration_hash(&spec),
        hbar_product: cfg.units.hbar_product(),
        lambda: f.lambda_knots().to_vec(),
        d: f.d_knots().to_vec(),
        barrier: f.barrier_knots().to_vec(),
    };
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("lambda0", out.lambda0),
        ("g", out.g),
        ("d0", out.d0),
        ("barrier0", out.barrier0),
        ("omega0", out.omega0),
        ("delta_e0", out.delta_e0),
        ("delta_e0_hz", cfg.units.energy_to_hz(out.delta_e0)),
        ("d0_um", out.d0 * cfg.units.length_um),
        ("hbar_product", out.hbar_product),
    ] {
        t.push(vec![k.into(), fmt_float(v)]);
    }
    t.push(vec!["calibration_hash".into(), out.calibration_hash.clone()]);
    sink.emit(&t, &out)
}

#[derive(Serialize)]
struct EffectiveRow {
    n: u32,
    variant: DriveVariant,
    omega_res: f64,
    lambda1: f64,
    omega_eff_bessel: f64,
    omega_eff_rwa: f64,
    omega_eff_rwa_full: f64,
    omega_eff_vectorial: f64,
    phi_n: f64,
    width_est: f64,
    warn_nonlinear_bias: bool,
}

fn effective(cfg: &Config, n_max: u32, model: TmModel, sink: &mut Sink) -> Result<()> {
    let ctx = ScanContext::new(cfg.potential.build()?)?;
    let rule = cfg.drive.rule()?;
    let de0 = ctx.delta_e0;
    let (lo, hi) = ctx.spec.lambda_domain();
    let l0 = ctx.spec.lambda0;
    let reach = (1..=n_max.max(1))
        .map(|n| rule.lambda1(de0 / n as f64, de0))
        .fold(0.0, f64::max)
        .min(l0 - lo)
        .min(hi - l0);
    let table = Arc::new(ParamTable::build(
        &ctx.spec,
        &ctx.stationary_grid,
        model,
        cfg.scan.u0n,
        cfg.scan.n_atoms,
        (l0 - reach, l0 + reach),
        shapiro::tables::KNOT_SPACING,
    )?);
    let mut rows = Vec::new();
    for variant in DriveVariant::ALL {
        for n in 1..=n_max {
            let omega = de0 / n as f64;
            let drive = DriveSpec { lambda1: rule.lambda1(omega, de0), omega, variant };
            let h = decompose_drive(&table, &drive)?;
            let b = bessel_effective_coupling(&h, n, omega);
            let r = rwa_effective_coupling(&h, n, omega, 256)?;
            rows.push(EffectiveRow {
                n,
                variant,
                omega_res: b.omega_res,
                lambda1: drive.lambda1,
                omega_eff_bessel: b.omega_eff,
                omega_eff_rwa: r.omega_eff,
                omega_eff_rwa_full: rwa_effective_coupling_full_bias(&h, n, omega, 256)?.omega_eff,
                omega_eff_vectorial: vectorial_effective_coupling(&h, n, omega),
                phi_n: r.phi_n,
                width_est: b.width_est,
                warn_nonlinear_bias: h.warn_nonlinear_bias,
            });
        }
    }
    let mut t = Table::new(&[
        "n",
        "variant",
        "omega_res",
        "lambda1",
        "omega_eff_bessel",
        "omega_eff_rwa",
        "omega_eff_rwa_full",
        "omega_eff_vectorial",
        "phi_n",
        "width_est",
        "warn_nonlinear_bias",
    ]);
    for r in &rows {
        t.push(vec![
            r.n.to_string(),
            r.variant.name().into(),
            fmt_float(r.omega_res),
            fmt_float(r.lambda1),
            fmt_float(r.omega_eff_bessel),
            fmt_float(r.omega_eff_rwa),
            fmt_float(r.omega_eff_rwa_full),
            fmt_float(r.omega_eff_vectorial),
            fmt_float(r.phi_n),
            fmt_float(r.width_est),
            r.warn_nonlinear_bias.to_string(),
        ]);
    }
    sink.emit(&t, &rows)
}
