use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vertexlab::config::{env_seed, parse_complex, parse_pair, parse_size, DEFAULT_BUDGET_SECS, DEFAULT_SAMPLES};
use vertexlab::lattice_io::LatticeFile;
use vertexlab::tables::{render_table, TableKind, TableParams};
use vertexlab::{CliError, CliResult, Format, SuiteConfig};
use vertexlab_core::csos::ChargeGrid;
use vertexlab_core::numerics::{ComplexBox, DEFAULT_ETA, DEFAULT_X0};
use vertexlab_core::sos_weights::seeded_boundary_walk;
use vertexlab_core::vertex_lattice::VertexLatticeSpec;
use vertexlab_core::{c64, ModelParams};

/// Residual checks for six-vertex and SOS currents, and cyclic SOS tables.
#[derive(Parser, Debug)]
#[command(name = "vertexlab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a check suite and write its report.
    Run(RunArgs),
    /// Write a spectrum or face-weight table.
    Tables(TableArgs),
    /// Write a seeded lattice in the lattice JSON format.
    Lattice(LatticeArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Suite name.
    #[arg(long)]
    suite: Option<String>,
    /// Seed; defaults to VERTEXLAB_SEED, then 7.
    #[arg(long)]
    seed: Option<u64>,
    /// Anisotropy `re,im`; repeatable.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    eta: Vec<[f64; 2]>,
    /// Cyclic model pair `p,pprime`; repeatable.
    #[arg(long, value_parser = parse_pair)]
    pp: Vec<[i64; 2]>,
    /// Lattice size `NxM`; repeatable.
    #[arg(long, value_parser = parse_size)]
    size: Vec<[usize; 2]>,
    /// Tolerance replacing every per-check default.
    #[arg(long)]
    tol: Option<f64>,
    /// Parameter sets per identity.
    #[arg(long)]
    samples: Option<usize>,
    /// Wall-time budget in seconds.
    #[arg(long)]
    budget: Option<f64>,
    /// Record the wall time in the report.
    #[arg(long)]
    timings: bool,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report encoding.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON config file; its fields override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Lattice JSON file replacing the seeded lattices.
    #[arg(long)]
    lattice: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct TableArgs {
    /// Table kind.
    #[arg(long, value_enum)]
    kind: TableKind,
    /// Pair `p,pprime`; repeatable.
    #[arg(long, value_parser = parse_pair)]
    pp: Vec<[i64; 2]>,
    /// Bound on |e|.
    #[arg(long, default_value_t = 2)]
    e_max: i64,
    /// Bound on |m|/n.
    #[arg(long, default_value_t = 2)]
    m_max: i64,
    /// Use every e in (1/n)Z instead of integer e.
    #[arg(long)]
    full_grid: bool,
    /// Anisotropy for the weights.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    eta: Option<[f64; 2]>,
    /// Height offset for the weights.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    x0: Option<[f64; 2]>,
    /// Spectral parameter for the weights.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0.3,0.1")]
    lambda: [f64; 2],
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Encoding.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(clap::Args, Debug)]
struct LatticeArgs {
    /// Size `NxM`.
    #[arg(long, value_parser = parse_size, default_value = "3x3")]
    size: [usize; 2],
    /// Seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Anisotropy.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    eta: Option<[f64; 2]>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_out(out: Option<&PathBuf>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn merge_config(args: &RunArgs) -> CliResult<SuiteConfig> {
    let mut cfg = SuiteConfig::default();
    cfg.seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(cfg.seed),
    };
    if let Some(s) = &args.suite {
        cfg.suite = s.clone();
    }
    if !args.eta.is_empty() {
        cfg.etas = args.eta.clone();
    }
    if !args.pp.is_empty() {
        cfg.pp = args.pp.clone();
    }
    cfg.sizes = args.size.clone();
    cfg.tol = args.tol;
    cfg.samples = args.samples.unwrap_or(DEFAULT_SAMPLES);
    cfg.budget_secs = args.budget.unwrap_or(DEFAULT_BUDGET_SECS);
    cfg.timings = args.timings;
    cfg.out = args.out.clone();
    cfg.format = args.format.unwrap_or_default();
    if let Some(path) = &args.lattice {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        cfg.lattice = Some(serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?);
    }
    let Some(path) = &args.config else { return Ok(cfg) };
    // Fields present in the file win over the flags.
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let file: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(file) = file else {
        return Err(CliError::Usage(format!("{}: expected a JSON object", path.display())));
    };
    let mut merged = serde_json::to_value(&cfg).expect("config serialises");
    let obj = merged.as_object_mut().expect("object");
    for (k, v) in file {
        obj.insert(k, v);
    }
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn run(args: RunArgs) -> CliResult<bool> {
    let cfg = merge_config(&args)?;
    let report = vertexlab::run(&cfg)?;
    write_out(cfg.out.as_ref(), &report.encode(cfg.format)?)?;
    eprintln!("{}", report.summary_line());
    Ok(report.all_pass())
}

fn tables(args: TableArgs) -> CliResult<()> {
    let eta = args.eta.map_or(DEFAULT_ETA, |e| c64(e[0], e[1]));
    let x0 = args.x0.map_or(DEFAULT_X0, |e| c64(e[0], e[1]));
    let t = TableParams {
        pp: if args.pp.is_empty() { vec![[5, 4]] } else { args.pp },
        e_max: args.e_max,
        m_max: args.m_max,
        grid: if args.full_grid { ChargeGrid::Full } else { ChargeGrid::Integer },
        params: ModelParams { eta, x0, ..ModelParams::default() },
        lambda: c64(args.lambda[0], args.lambda[1]),
        radius: 3,
    };
    for &[p, pp] in &t.pp {
        vertexlab_core::csos::derive_ln(p, pp).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    write_out(args.out.as_ref(), &render_table(args.kind, &t, args.format)?)
}

fn lattice(args: LatticeArgs) -> CliResult<()> {
    let seed = match args.seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(vertexlab::config::DEFAULT_SEED),
    };
    let eta = args.eta.map_or(DEFAULT_ETA, |e| c64(e[0], e[1]));
    let [c, r] = args.size;
    let spec = VertexLatticeSpec::seeded(c, r, seed, ComplexBox::default(), ModelParams::with_eta(eta))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let file = LatticeFile::from_vertex(&spec, Some(seeded_boundary_walk(c, r, 0, seed)));
    let mut bytes = serde_json::to_vec_pretty(&file).expect("lattice serialises");
    bytes.push(b'\n');
    write_out(args.out.as_ref(), &bytes)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::Tables(a) => tables(a).map(|_| true),
        Cmd::Lattice(a) => lattice(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("vertexlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
