mod table;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hardedge::dynamics::{integrate_single, OdeOptions, StartMode};
use hardedge::fredholm::{gap_probability, DEFAULT_ORDER};
use hardedge::montecarlo::{empirical_gaps, EnsembleSpec};
use hardedge::verify::{invariant_suite, MonteCarloPlan};
use hardedge::{IntervalUnion, Kernel, ModelParams};
use serde_json::json;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use table::{Cell, Table};

const THREADS_VAR: &str = "HARDEDGE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "hardedge", version, about = "Hard-edge gap probabilities for products of Ginibre matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gap probability on (0, s): Nyström determinant against the ODE flow.
    Gap {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        ode: OdeArgs,
        /// Fail (exit 1) if |F_fredholm - F_ode| exceeds this.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// K_M on a grid, bilinear and integral forms.
    Kernel {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10.0)]
        x_max: f64,
        /// Grid points per axis (x_i = x_max i / points).
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Trajectory of the single-interval flow.
    Ode {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        ode: OdeArgs,
    },
    /// Monte Carlo gap estimates against the limiting determinant.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 100)]
        n0: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run every invariant suite for one parameter set.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Also run the Monte Carlo suite (fixed ensembles, seeded).
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Trials for the N0 = 100 ensemble of the Monte Carlo suite.
        #[arg(long, default_value_t = 20_000)]
        mc_trials: usize,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Exponents ν_1..ν_M, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    nu: Vec<f64>,
    /// Number of factors; must equal the length of --nu when given.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Gauss–Legendre nodes per interval.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    order: usize,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = 10.0)]
    s_max: f64,
    /// Rows in the s grid (0 to s_max inclusive); one row when s_max = 0.
    #[arg(long, default_value_t = 50)]
    points: usize,
}

#[derive(Args, Debug)]
struct OdeArgs {
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-20)]
    atol: f64,
    #[arg(long, value_enum, default_value_t = Start::Bootstrap)]
    start: Start,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Start {
    Series,
    Bootstrap,
}

enum Failure {
    Usage(String),
    Numeric(String),
    /// Output was written, but a requested check did not hold.
    Check(String),
}

impl From<hardedge::Error> for Failure {
    fn from(e: hardedge::Error) -> Self {
        match e {
            hardedge::Error::InvalidParams(m) => Failure::Usage(m),
            e => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Numeric(format!("I/O: {e}"))
    }
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams, Failure> {
        if let Some(m) = self.m {
            if m != self.nu.len() {
                return Err(Failure::Usage(format!("--M {m} but --nu has {} entries", self.nu.len())));
            }
        }
        if self.order < 4 {
            return Err(Failure::Usage("--order must be at least 4".into()));
        }
        Ok(ModelParams::new(self.nu.clone())?)
    }
}

impl GridArgs {
    fn grid(&self) -> Result<Vec<f64>, Failure> {
        if !(self.s_max >= 0.0 && self.s_max.is_finite()) {
            return Err(Failure::Usage("--s-max must be finite and non-negative".into()));
        }
        if self.s_max == 0.0 {
            return Ok(vec![0.0]);
        }
        if self.points < 2 {
            return Err(Failure::Usage("--points must be at least 2".into()));
        }
        let n = self.points - 1;
        Ok((0..=n).map(|k| self.s_max * k as f64 / n as f64).collect())
    }
}

impl OdeArgs {
    fn options(&self, order: usize) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            start: match self.start {
                Start::Series => StartMode::Series,
                Start::Bootstrap => StartMode::Bootstrap,
            },
            epsilon: self.epsilon,
            order,
            ..OdeOptions::default()
        }
    }
}

fn metadata(command: &str, params: &ModelParams, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "command": command,
        "nu": params.nu(),
        "M": params.m(),
        "version": env!("CARGO_PKG_VERSION"),
        "settings": extra,
    })
}

fn gap(model: &ModelArgs, grid: &GridArgs, ode: &OdeArgs, tolerance: f64) -> Result<(Table, serde_json::Value, Option<String>), Failure> {
    let params = model.params()?;
    let s = grid.grid()?;
    let traj = integrate_single(&params, &s, &ode.options(model.order))?;
    let mut t = Table::new(["s", "F_fredholm", "F_ode", "abs_diff"]);
    let mut worst: f64 = 0.0;
    for sample in &traj.samples {
        let f = gap_probability(&params, &IntervalUnion::single(sample.s)?, model.order)?;
        let d = (f - sample.gap).abs();
        worst = worst.max(d);
        t.push(vec![sample.s.into(), f.into(), sample.gap.into(), d.into()]);
    }
    let meta = metadata(
        "gap",
        &params,
        json!({ "order": model.order, "rtol": ode.rtol, "atol": ode.atol, "epsilon": traj.epsilon, "tolerance": tolerance }),
    );
    let fail = (!(worst <= tolerance)).then(|| format!("max |F_fredholm - F_ode| = {worst:e} exceeds {tolerance:e}"));
    Ok((t, meta, fail))
}

fn kernel(model: &ModelArgs, x_max: f64, points: usize, tolerance: f64) -> Result<(Table, serde_json::Value, Option<String>), Failure> {
    let params = model.params()?;
    if !(x_max > 0.0 && x_max.is_finite()) || points == 0 {
        return Err(Failure::Usage("--x-max must be positive and --points at least 1".into()));
    }
    let k = Kernel::new(&params);
    let mut t = Table::new(["x", "y", "K_bilinear", "K_integral", "abs_diff"]);
    let mut worst: f64 = 0.0;
    for i in 1..=points {
        for j in 1..=points {
            let (x, y) = (x_max * i as f64 / points as f64, x_max * j as f64 / points as f64);
            let a = k.bilinear(x, y)?;
            let b = k.integral(x, y)?;
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
            t.push(vec![x.into(), y.into(), a.into(), b.into(), (a - b).abs().into()]);
        }
    }
    let meta = metadata("kernel", &params, json!({ "x_max": x_max, "points": points, "tolerance": tolerance }));
    let fail = (!(worst <= tolerance)).then(|| format!("kernel representations differ by {worst:e}"));
    Ok((t, meta, fail))
}

fn ode(model: &ModelArgs, grid: &GridArgs, ode: &OdeArgs) -> Result<(Table, serde_json::Value, Option<String>), Failure> {
    let params = model.params()?;
    let s = grid.grid()?;
    let traj = integrate_single(&params, &s, &ode.options(model.order))?;
    let w = params.m() + 1;
    let mut headers = vec!["s".to_string()];
    for name in ["x", "y"] {
        for j in 0..w {
            headers.push(format!("{name}{j}_re"));
            headers.push(format!("{name}{j}_im"));
        }
    }
    for name in ["xi", "eta"] {
        for j in 0..w {
            headers.push(format!("{name}{j}"));
        }
    }
    headers.push("F".into());
    let mut t = Table::new(headers);
    for p in &traj.samples {
        let mut row: Vec<Cell> = vec![p.s.into()];
        for v in [&p.state.x, &p.state.y] {
            for z in v {
                row.push(z.re.into());
                row.push(z.im.into());
            }
        }
        for v in [&p.state.xi, &p.state.eta] {
            row.extend(v.iter().map(|z| Cell::from(z.re)));
        }
        row.push(p.gap.into());
        t.push(row);
    }
    let meta = metadata(
        "ode",
        &params,
        json!({
            "order": model.order, "rtol": ode.rtol, "atol": ode.atol, "epsilon": traj.epsilon,
            "start_defect": traj.start_defect, "accepted_steps": traj.accepted_steps, "rejected_steps": traj.rejected_steps,
        }),
    );
    Ok((t, meta, None))
}

fn mc(model: &ModelArgs, grid: &GridArgs, n0: usize, trials: usize, seed: u64) -> Result<(Table, serde_json::Value, Option<String>), Failure> {
    let params = model.params()?;
    let s = grid.grid()?;
    let spec = EnsembleSpec::new(n0, params.clone(), trials, seed)?;
    let est = empirical_gaps(&spec, &s)?;
    let mut t = Table::new(["s", "empirical", "stderr", "F_reference"]);
    for (&si, (e, se)) in s.iter().zip(est) {
        let f = gap_probability(&params, &IntervalUnion::single(si)?, model.order)?;
        t.push(vec![si.into(), e.into(), se.into(), f.into()]);
    }
    let meta = metadata("mc", &params, json!({ "n0": n0, "trials": trials, "seed": seed, "order": model.order }));
    Ok((t, meta, None))
}

fn verify(model: &ModelArgs, with_mc: bool, seed: u64, mc_trials: usize) -> Result<(Table, serde_json::Value, Option<String>), Failure> {
    let params = model.params()?;
    let plan = MonteCarloPlan {
        seed,
        limit_trials: mc_trials,
        ..MonteCarloPlan::default()
    };
    let checks = invariant_suite(&params, model.order, with_mc.then_some(&plan));
    let mut t = Table::new(["check", "passed", "metric", "bound", "seconds", "details"]);
    let mut failed = Vec::new();
    for c in &checks {
        eprintln!("{}", c.line());
        if !c.passed {
            failed.push(c.name.clone());
        }
        t.push(vec![
            c.name.clone().into(),
            c.passed.into(),
            c.metric.into(),
            c.threshold.into(),
            c.seconds.into(),
            c.details.join("; ").into(),
        ]);
    }
    let meta = metadata("verify", &params, json!({ "order": model.order, "seed": seed, "monte_carlo": with_mc }));
    let fail = (!failed.is_empty()).then(|| format!("failed: {}", failed.join(", ")));
    Ok((t, meta, fail))
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Numeric(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    let (table, meta, fail) = match &cli.command {
        Command::Gap { model, grid, ode: o, tolerance } => gap(model, grid, o, *tolerance)?,
        Command::Kernel { model, x_max, points, tolerance } => kernel(model, *x_max, *points, *tolerance)?,
        Command::Ode { model, grid, ode: o } => ode(model, grid, o)?,
        Command::Mc { model, grid, n0, trials, seed } => mc(model, grid, *n0, *trials, *seed)?,
        Command::Verify { model, mc: with_mc, seed, mc_trials } => verify(model, *with_mc, *seed, *mc_trials)?,
    };
    let mut out: Box<dyn Write> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.format {
        Format::Csv => table.write_csv(&mut out).map_err(|e| Failure::Numeric(e.to_string()))?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &table.to_json(meta)).map_err(|e| Failure::Numeric(e.to_string()))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    match fail {
        Some(msg) => Err(Failure::Check(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) | Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
