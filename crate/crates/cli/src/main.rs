use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chordal_sdp::hsde::{Solver, SolverSettings, TraceRecord};
use chordal_sdp::report::{emit_report, SolverReport, Status};
use chordal_sdp::{read_sdpa_file, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Sparse SDP solver: chordal decomposition + ADMM on the homogeneous
/// self-dual embedding.
#[derive(Parser, Debug)]
#[command(name = "chordal-sdp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one SDPA sparse (.dat-s) file.
    Solve {
        input: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Solve every .dat-s file in a directory and emit a summary table.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args, Debug)]
struct SolveOpts {
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Over-relaxation parameter in [1, 2).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Write the report (or table) here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Log one line per residual check to standard error:
    /// iteration, primal, dual, gap, tau, kappa.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    decompose: Toggle,
    /// Cap on worker threads for the clique projections (RAYON_NUM_THREADS
    /// is honoured when this is absent).
    #[arg(long)]
    threads: Option<usize>,
}

impl SolveOpts {
    fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tol,
            max_iters: self.max_iters,
            alpha: self.alpha,
            decompose: self.decompose == Toggle::On,
            ..SolverSettings::default()
        }
    }
}

fn run_one(path: &Path, settings: &SolverSettings, trace: bool) -> Result<SolverReport, Error> {
    let problem = read_sdpa_file(path)?;
    let mut solver = Solver::new(&problem, settings.clone())?;
    if trace {
        eprintln!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>10}", "iter", "pres", "dres", "gap", "tau", "kappa");
    }
    solver.run(|rec: &TraceRecord| {
        if trace {
            eprintln!("{rec}");
        }
    })
}

fn write_output(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn summary(r: &SolverReport) -> String {
    let obj = r.objective_primal.map_or("-".to_string(), |v| format!("{v:.6e}"));
    format!(
        "status={} objective={} iterations={} setup={:.3}s total={:.3}s",
        r.status, obj, r.iterations, r.timing.setup, r.timing.total
    )
}

fn cmd_solve(input: &Path, opts: &SolveOpts) -> Result<ExitCode, Box<dyn std::error::Error>> {
    if !input.is_file() {
        return Err(format!("{}: no such file", input.display()).into());
    }
    let report = run_one(input, &opts.settings(), opts.trace)?;
    write_output(opts.output.as_deref(), &emit_report(&report)?)?;
    // keep standard output machine-readable when the report goes there
    if opts.output.is_some() {
        println!("{}", summary(&report));
    } else {
        eprintln!("{}", summary(&report));
    }
    Ok(match report.status {
        Status::MaxItersReached => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    })
}

#[derive(Serialize)]
struct BenchRow {
    file: String,
    status: Option<Status>,
    n: Option<usize>,
    m: Option<usize>,
    cliques: Option<usize>,
    max_clique: Option<usize>,
    min_clique: Option<usize>,
    iterations: Option<usize>,
    objective: Option<f64>,
    setup_time: Option<f64>,
    total_time: Option<f64>,
    time_per_iteration: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct BenchTable {
    tol: f64,
    max_iters: usize,
    alpha: f64,
    decompose: bool,
    rows: Vec<BenchRow>,
}

fn bench_row(file: String, result: Result<SolverReport, Error>) -> BenchRow {
    match result {
        Ok(r) => BenchRow {
            file,
            status: Some(r.status),
            n: Some(r.problem.n),
            m: Some(r.problem.m),
            cliques: Some(r.problem.cliques),
            max_clique: Some(r.problem.max_clique),
            min_clique: Some(r.problem.min_clique),
            iterations: Some(r.iterations),
            objective: r.objective_primal,
            setup_time: Some(r.timing.setup),
            total_time: Some(r.timing.total),
            time_per_iteration: Some(if r.iterations > 0 {
                r.timing.iteration / r.iterations as f64
            } else {
                0.0
            }),
            error: None,
        },
        Err(e) => BenchRow {
            file,
            status: None,
            n: None,
            m: None,
            cliques: None,
            max_clique: None,
            min_clique: None,
            iterations: None,
            objective: None,
            setup_time: None,
            total_time: None,
            time_per_iteration: None,
            error: Some(e.to_string()),
        },
    }
}

fn cmd_bench(dir: &Path, opts: &SolveOpts) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n.to_string_lossy().ends_with(".dat-s")))
        .collect();
    files.sort();
    let settings = opts.settings();
    let mut rows = Vec::with_capacity(files.len());
    for path in &files {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let result = run_one(path, &settings, opts.trace);
        match &result {
            Ok(r) => eprintln!("{name}: {}", summary(r)),
            Err(e) => eprintln!("{name}: error: {e}"),
        }
        rows.push(bench_row(name, result));
    }
    let table = BenchTable {
        tol: settings.tol,
        max_iters: settings.max_iters,
        alpha: settings.alpha,
        decompose: settings.decompose,
        rows,
    };
    let mut text = serde_json::to_string_pretty(&table)?;
    text.push('\n');
    write_output(opts.output.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let opts = match &cli.command {
        Command::Solve { opts, .. } | Command::Bench { opts, .. } => opts,
    };
    if let Some(t) = opts.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match &cli.command {
        Command::Solve { input, opts } => cmd_solve(input, opts),
        Command::Bench { dir, opts } => cmd_bench(dir, opts),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
