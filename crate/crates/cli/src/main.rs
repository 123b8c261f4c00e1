//! `drtool`: build, check, and compare dispatchable regions from the shell.
//!
//! Exit status: 0 on success, 2 on bad input (one-line diagnostic on
//! stderr), 3 when a budget ran out and a partial, flagged artifact was
//! written, 1 on internal failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dispatch_region::compare::{compare, CompareConfig};
use dispatch_region::exec::ExecMode;
use dispatch_region::grid::{assemble_polytope, parse_case, BasePoint, OperationalPolytope};
use dispatch_region::odp::{gen_odps, OdpGeneratorConfig, OdpSet, OdpSource};
use dispatch_region::pab::{construct_pab_dr, BigM, PabConfig, Termination};
use dispatch_region::parallel::{construct_parallel, ParallelConfig, PartitionStrategy};
use dispatch_region::plot::emit_plot_data;
use dispatch_region::region::{
    check_points, classify_boundaries, traditional_dr, ConeMode, InitBox, Region, TraditionalConfig,
};
use dispatch_region::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "drtool", version, about = "Dispatchable-region construction for renewable generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a region from potentially active boundaries.
    BuildPab(Common),
    /// Build the vertex-driven traditional region.
    BuildTraditional(Common),
    /// Build with dataset partitions and boundary sharing.
    BuildParallel(Common),
    /// Run the feasibility oracle on every ODP.
    Check(Common),
    /// List the boundaries of a region that are active for some ODP.
    Classify(Common),
    /// Compare PAB and traditional regions on a holdout split.
    Compare(Common),
    /// Generate synthetic forecast-error points.
    GenOdps(Common),
    /// Write CSV files for plotting a region and its ODPs.
    PlotData(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Cone {
    Relaxed,
    Equality,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    RoundRobin,
    Contiguous,
    SeededShuffle,
}

#[derive(Args)]
struct Common {
    /// Case document (JSON).
    #[arg(long, value_name = "PATH")]
    case: Option<PathBuf>,
    /// ODP file (CSV, header odp_id,dw_1,…).
    #[arg(long, value_name = "PATH")]
    odps: Option<PathBuf>,
    /// Region document to read (classify, plot-data).
    #[arg(long, value_name = "PATH")]
    region: Option<PathBuf>,
    /// Output file (a directory for plot-data).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Construction trace output.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget in seconds (compare: traditional builder only).
    #[arg(long, value_name = "SECONDS")]
    time_limit: Option<f64>,
    /// Iteration cap (traditional: maximum number of cuts).
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
    #[arg(long, value_name = "auto|NUMBER", default_value = "auto")]
    big_m: String,
    #[arg(long, value_name = "NUMBER", default_value_t = 1e-4)]
    eps_sep: f64,
    #[arg(long, value_enum, default_value = "relaxed")]
    cone: Cone,
    #[arg(long, value_name = "M", default_value_t = 2)]
    partitions: usize,
    #[arg(long, value_enum, default_value = "round-robin")]
    strategy: Strategy,
    /// Disable boundary sharing between partitions.
    #[arg(long)]
    no_sharing: bool,
    /// Fraction of ODPs held out for evaluation in compare.
    #[arg(long, value_name = "FRACTION", default_value_t = 0.3)]
    holdout: f64,
    /// Half-width of the initialization box (default: 1000 MW or twice the
    /// largest ODP coordinate, whichever is larger).
    #[arg(long, value_name = "MW")]
    box_half_width: Option<f64>,
    /// Run every stage on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// gen-odps: number of points.
    #[arg(long, value_name = "N", default_value_t = 100)]
    count: usize,
    /// gen-odps: dimension (defaults to the case's renewable count).
    #[arg(long, value_name = "J")]
    dim: Option<usize>,
    /// gen-odps: standard deviation in MW, one value or one per dimension.
    #[arg(long, value_name = "MW", value_delimiter = ',', default_value = "10")]
    std: Vec<f64>,
    /// gen-odps: common pairwise correlation.
    #[arg(long, value_name = "RHO", default_value_t = 0.0)]
    corr: f64,
    /// gen-odps: truncation half-width in MW.
    #[arg(long, value_name = "MW")]
    trunc: Option<f64>,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) | Error::Internal(_) | Error::InvalidDual(_) => Failure::Internal(e.to_string()),
            Error::Worker { ref source, .. } if matches!(**source, Error::Solver(_) | Error::Internal(_)) => {
                Failure::Internal(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    v.as_deref().ok_or_else(|| Failure::Input(format!("missing required flag --{flag}")))
}

fn read(path: &Path, flag: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("--{flag} {}: {e}", path.display())))
}

fn write(path: &Path, body: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, body).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_polytope(c: &Common) -> Result<OperationalPolytope, Failure> {
    let path = required(&c.case, "case")?;
    let sys = parse_case(&read(path, "case")?).map_err(|e| Failure::Input(format!("--case {}: {e}", path.display())))?;
    let poly = assemble_polytope(&sys, &BasePoint::from_system(&sys)).map_err(|e| Failure::Input(format!("--case: {e}")))?;
    Ok(poly)
}

fn load_odps(c: &Common, poly: Option<&OperationalPolytope>) -> Result<OdpSet, Failure> {
    let path = required(&c.odps, "odps")?;
    let text = read(path, "odps")?;
    let odps = OdpSet::read_csv(text.as_bytes(), OdpSource::File { path: path.display().to_string() })
        .map_err(|e| Failure::Input(format!("--odps {}: {e}", path.display())))?;
    if let Some(p) = poly {
        if odps.dimension() != p.dim() {
            return Err(Failure::Input(format!(
                "--odps: points have {} coordinates but the case has {} renewable units",
                odps.dimension(),
                p.dim()
            )));
        }
    }
    Ok(odps)
}

fn load_region(c: &Common) -> Result<Region, Failure> {
    let path = required(&c.region, "region")?;
    Region::from_json(&read(path, "region")?).map_err(|e| Failure::Input(format!("--region {}: {e}", path.display())))
}

fn exec_mode(c: &Common) -> ExecMode {
    if c.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

fn init_box(c: &Common, dim: usize, odps: Option<&OdpSet>) -> Result<InitBox, Failure> {
    match (c.box_half_width, odps) {
        (Some(h), _) if !(h > 0.0 && h.is_finite()) => Err(Failure::Input("--box-half-width must be > 0".into())),
        (Some(h), _) => Ok(InitBox::symmetric(dim, h)),
        (None, Some(o)) => Ok(InitBox::covering(o, 1000.0)),
        (None, None) => Ok(InitBox::symmetric(dim, 1000.0)),
    }
}

fn pab_config(c: &Common) -> Result<PabConfig, Failure> {
    let big_m = match c.big_m.as_str() {
        "auto" => BigM::Auto,
        s => BigM::Value(
            s.parse::<f64>()
                .ok()
                .filter(|m| *m > 0.0 && m.is_finite())
                .ok_or_else(|| Failure::Input(format!("--big-m must be 'auto' or a positive number, got {s:?}")))?,
        ),
    };
    if !(c.eps_sep > 0.0 && c.eps_sep.is_finite()) {
        return Err(Failure::Input("--eps-sep must be > 0".into()));
    }
    if c.time_limit.is_some_and(|t| !(t > 0.0)) {
        return Err(Failure::Input("--time-limit must be > 0".into()));
    }
    if c.max_iter == Some(0) {
        return Err(Failure::Input("--max-iter must be at least 1".into()));
    }
    Ok(PabConfig {
        big_m,
        eps_sep: c.eps_sep,
        max_iter: c.max_iter,
        time_limit: c.time_limit,
        cone: match c.cone {
            Cone::Relaxed => ConeMode::Relaxed,
            Cone::Equality => ConeMode::Equality,
        },
        exec: exec_mode(c),
        ..PabConfig::default()
    })
}

fn out_path(c: &Common) -> Result<&Path, Failure> {
    required(&c.out, "out")
}

fn build_pab(c: &Common) -> Outcome {
    let poly = load_polytope(c)?;
    let odps = load_odps(c, Some(&poly))?;
    let out = out_path(c)?;
    let cfg = pab_config(c)?;
    let init = init_box(c, poly.dim(), Some(&odps))?;
    let (region, trace) = construct_pab_dr(&poly, &odps, &init, &cfg)?;
    write(out, &region.to_json())?;
    if let Some(t) = &c.trace {
        write(t, &trace.to_json())?;
    }
    if trace.termination == Termination::DuplicateBoundary {
        eprintln!("warning: construction stopped on a repeated boundary; consider a larger --eps-sep");
    }
    println!("{} boundaries, termination {:?}", region.num_cuts(), trace.termination);
    Ok(matches!(trace.termination, Termination::Converged | Termination::DuplicateBoundary))
}

fn traditional_config(c: &Common) -> Result<TraditionalConfig, Failure> {
    if c.time_limit.is_some_and(|t| !(t > 0.0)) {
        return Err(Failure::Input("--time-limit must be > 0".into()));
    }
    Ok(TraditionalConfig { max_cuts: c.max_iter, time_limit: c.time_limit, exec: exec_mode(c), ..Default::default() })
}

fn build_traditional(c: &Common) -> Outcome {
    let poly = load_polytope(c)?;
    let out = out_path(c)?;
    let odps = match &c.odps {
        Some(_) => Some(load_odps(c, Some(&poly))?),
        None => None,
    };
    let init = init_box(c, poly.dim(), odps.as_ref())?;
    let (region, stats) = traditional_dr(&poly, &init, &traditional_config(c)?)?;
    write(out, &region.to_json())?;
    if let Some(t) = &c.trace {
        write(t, &serde_json::to_string_pretty(&stats).expect("stats serialize"))?;
    }
    println!("{} boundaries, converged {}", region.num_cuts(), region.converged);
    Ok(region.converged)
}

fn build_parallel(c: &Common) -> Outcome {
    let poly = load_polytope(c)?;
    let odps = load_odps(c, Some(&poly))?;
    let out = out_path(c)?;
    let init = init_box(c, poly.dim(), Some(&odps))?;
    if c.partitions == 0 || c.partitions > odps.len() {
        return Err(Failure::Input(format!("--partitions must be in 1..={}", odps.len())));
    }
    let cfg = ParallelConfig {
        partitions: c.partitions,
        strategy: match c.strategy {
            Strategy::RoundRobin => PartitionStrategy::RoundRobin,
            Strategy::Contiguous => PartitionStrategy::Contiguous,
            Strategy::SeededShuffle => PartitionStrategy::SeededShuffle,
        },
        seed: c.seed,
        sharing: !c.no_sharing,
        exec: exec_mode(c),
        pab: pab_config(c)?,
    };
    let (region, workers) = construct_parallel(&poly, &odps, &init, &cfg)?;
    write(out, &region.to_json())?;
    if let Some(t) = &c.trace {
        write(t, &serde_json::to_string_pretty(&json!({ "workers": workers })).expect("trace serialize"))?;
    }
    println!("{} boundaries from {} partitions", region.num_cuts(), workers.len());
    Ok(workers.iter().all(|w| matches!(w.trace.termination, Termination::Converged | Termination::DuplicateBoundary)))
}

fn check(c: &Common) -> Outcome {
    let poly = load_polytope(c)?;
    let odps = load_odps(c, Some(&poly))?;
    let results = check_points(&poly, odps.points(), exec_mode(c), &Default::default())?;
    let mut body = String::from("odp_id,s,feasible\n");
    for (k, r) in results.iter().enumerate() {
        body.push_str(&format!("{},{:?},{}\n", k + 1, r.s, r.is_feasible()));
    }
    match &c.out {
        Some(p) => write(p, &body)?,
        None => print!("{body}"),
    }
    Ok(true)
}

fn classify(c: &Common) -> Outcome {
    let region = load_region(c)?;
    let odps = load_odps(c, None)?;
    if odps.dimension() != region.dimension {
        return Err(Failure::Input(format!(
            "--odps: points have {} coordinates but the region has dimension {}",
            odps.dimension(),
            region.dimension
        )));
    }
    let active = classify_boundaries(&region, &odps)?;
    let rows: Vec<_> = region
        .boundaries
        .iter()
        .enumerate()
        .map(|(i, b)| json!({ "index": i, "origin": b.origin, "pab": active.contains(&i) }))
        .collect();
    let body = serde_json::to_string_pretty(&json!({ "pab": active, "boundaries": rows })).expect("serialize");
    match &c.out {
        Some(p) => write(p, &body)?,
        None => println!("{body}"),
    }
    Ok(true)
}

fn compare_cmd(c: &Common) -> Outcome {
    let poly = load_polytope(c)?;
    let odps = load_odps(c, Some(&poly))?;
    let out = out_path(c)?;
    if !(0.0..1.0).contains(&c.holdout) {
        return Err(Failure::Input("--holdout must be in [0, 1)".into()));
    }
    let mut pab = pab_config(c)?;
    pab.time_limit = None;
    pab.max_iter = None;
    let cfg = CompareConfig { holdout: c.holdout, seed: c.seed, pab, traditional: traditional_config(c)? };
    let init = init_box(c, poly.dim(), Some(&odps))?;
    let outcome = compare(&poly, &odps, &init, &cfg)?;
    let doc = json!({
        "report": outcome.report,
        "regions": { "pab": outcome.pab_region, "traditional": outcome.traditional_region },
    });
    write(out, &serde_json::to_string_pretty(&doc).expect("serialize"))?;
    if let Some(t) = &c.trace {
        write(t, &outcome.pab_trace.to_json())?;
    }
    let r = &outcome.report;
    for m in [&r.pab, &r.traditional] {
        println!(
            "{:<12} boundaries {:>4}  time {:>9.3}s  converged {:<5}  enclosed {:>5}  infeasible {:>4}  rate {:>7.3}%  avg violation {:.3e}",
            m.method,
            m.boundaries,
            m.time_s,
            m.converged,
            m.enclosed,
            m.infeasible_enclosed,
            100.0 * m.infeasibility_rate,
            m.average_violation
        );
    }
    Ok(r.pab.converged && r.traditional.converged)
}

fn gen_odps_cmd(c: &Common) -> Outcome {
    let out = out_path(c)?;
    let dim = match (c.dim, &c.case) {
        (Some(d), _) => d,
        (None, Some(_)) => load_polytope(c)?.dim(),
        (None, None) => return Err(Failure::Input("missing required flag --dim (or --case)".into())),
    };
    if dim == 0 {
        return Err(Failure::Input("--dim must be at least 1".into()));
    }
    let std = match c.std.len() {
        1 => vec![c.std[0]; dim],
        n if n == dim => c.std.clone(),
        n => return Err(Failure::Input(format!("--std has {n} values for dimension {dim}"))),
    };
    let mut correlation = vec![c.corr; dim * dim];
    for i in 0..dim {
        correlation[i * dim + i] = 1.0;
    }
    let cfg = OdpGeneratorConfig { dimension: dim, std, correlation, truncation: c.trunc, count: c.count, seed: c.seed };
    let odps = gen_odps(&cfg)?;
    let mut buf = Vec::new();
    odps.write_csv(&mut buf)?;
    write(out, &String::from_utf8(buf).expect("csv is utf-8"))?;
    println!("{} points of dimension {dim}", odps.len());
    Ok(true)
}

fn plot_data(c: &Common) -> Outcome {
    let poly = load_polytope(c)?;
    let region = load_region(c)?;
    let odps = load_odps(c, Some(&poly))?;
    let out = out_path(c)?;
    let data = emit_plot_data(&region, &odps, &poly, exec_mode(c))?;
    data.write_to(out)?;
    if let Some(note) = &data.note {
        eprintln!("note: {note}");
    }
    Ok(true)
}

/// First line of a clap error, without the usage block.
fn one_line(e: &clap::Error) -> String {
    let text = e.render().to_string();
    let mut parts = Vec::new();
    for line in text.lines() {
        let l = line.trim();
        if l.is_empty() || l.starts_with("Usage:") || l.starts_with("For more information") {
            if !parts.is_empty() {
                break;
            }
            continue;
        }
        parts.push(l.to_string());
    }
    parts.join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", one_line(&e));
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::BuildPab(c) => build_pab(c),
        Command::BuildTraditional(c) => build_traditional(c),
        Command::BuildParallel(c) => build_parallel(c),
        Command::Check(c) => check(c),
        Command::Classify(c) => classify(c),
        Command::Compare(c) => compare_cmd(c),
        Command::GenOdps(c) => gen_odps_cmd(c),
        Command::PlotData(c) => plot_data(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("budget exhausted: partial artifacts written and flagged unconverged");
            ExitCode::from(3)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
