mod config;
mod diagram;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use superliouville::branch_solver::{
    admissible_start, branch_switch_probe, continue_branch, deformation_flow, detect_bifurcation, killing_branch,
    newton_solve, BranchPoint, FlowOptions, NewtonOptions, SwitchReport, KILLING_PHASE,
};
use superliouville::conformal::balance;
use superliouville::functional::OriginHessian;
use superliouville::nehari::weighted_eigensystem;
use superliouville::report::{self, fmt17};
use superliouville::sphere::{laplace_eigendata, ScalarField};
use superliouville::verify::{all_ids, Suite};
use superliouville::{BandLimit, DiracBasis, Error, State};

use config::{FileConfig, RunConfig};

#[derive(Parser)]
#[command(name = "superliouville", version, about = "Spectral lab for the super-Liouville system on the round sphere")]
struct Cli {
    /// Band limit L of the scalar field, in [8, 64].
    #[arg(long, global = true)]
    band: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print machine-readable reports to stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    Dirac,
    Laplace,
    Weighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum BranchKind {
    Trivial,
    Killing,
    /// Newton from a state file.
    Newton,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues of the round Dirac operator, the Laplacian, or the
    /// weighted problem D̸φ = λe^uφ.
    Spectrum {
        #[arg(long, value_enum, default_value = "dirac")]
        operator: Operator,
        /// State file supplying u for the weighted problem.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Run validation checks.
    Verify {
        /// `all` or a comma-separated list of check numbers.
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Compute one solution.
    Solve {
        #[arg(long, value_enum)]
        branch: BranchKind,
        #[arg(long)]
        rho: f64,
        /// Initial state for `--branch newton`.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Follow a branch in rho and write its table.
    Continue {
        #[arg(long, value_enum)]
        branch: BranchKind,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Re-centre e^{2u} by a Möbius map.
    Balance {
        /// Amplitude a of u = a·x^axis.
        #[arg(long, default_value_t = 0.3)]
        amplitude: f64,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
        axis: u8,
        /// State file supplying u instead.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Integrate the deformation flow across a regular value rho*.
    Flow {
        #[arg(long, default_value_t = 1.5)]
        rho_star: f64,
        #[arg(long, default_value_t = 0.05)]
        half_width: f64,
        /// Squared L² norm of the spinor in the generated start.
        #[arg(long, default_value_t = 0.01)]
        psi_sq: f64,
        /// Start state (its rho is the start of the interval).
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Locate index jumps along the trivial branch and draw the diagram.
    Bifurcate {
        #[arg(long, default_value_t = 1.5)]
        from: f64,
        #[arg(long, default_value_t = 3.5)]
        to: f64,
        #[arg(long, default_value_t = 0.05)]
        scan: f64,
        /// Try to switch onto a new branch at each point found.
        #[arg(long)]
        probe: bool,
        /// Branch tables (CSV) to draw.
        #[arg(long, value_delimiter = ',')]
        branches: Vec<PathBuf>,
        /// Only draw the diagram.
        #[arg(long)]
        diagram_only: bool,
    },
}

enum Failure {
    Usage(String),
    Validation { command: &'static str, report: Value },
    Runtime { command: &'static str, error: String },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::RhoNotAboveOne(_)
            | Error::RhoNotPositive(_)
            | Error::InvalidArgument(_)
            | Error::BandTooSmall(_)
            | Error::Parse(_)
            | Error::Json(_)
            | Error::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime { command: "", error: other.to_string() },
        }
    }
}

type Outcome = Result<(), Failure>;

/// Spacing of the generated trivial and Killing tables.
const DIAGRAM_STEP: f64 = 0.25;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(p) => match FileConfig::load(p) {
            Ok(f) => f,
            Err(e) => return usage(&e),
        },
        None => FileConfig::default(),
    };
    let cfg = match RunConfig::merge(cli.band, cli.out.clone(), cli.json, file) {
        Ok(c) => c,
        Err(e) => return usage(&e),
    };
    let name = command_name(&cli.command);
    match run(&cli.command, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => usage(&msg),
        Err(Failure::Validation { command, report }) => {
            let body = json!({ "status": "failed", "command": command, "report": report });
            println!("{}", serde_json::to_string_pretty(&report::normalize(body)).unwrap_or_default());
            ExitCode::from(1)
        }
        Err(Failure::Runtime { command, error }) => {
            let command = if command.is_empty() { name } else { command };
            let body = json!({ "status": "failed", "command": command, "error": error });
            println!("{}", serde_json::to_string_pretty(&body).unwrap_or_default());
            eprintln!("error: {error}");
            ExitCode::from(1)
        }
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Spectrum { .. } => "spectrum",
        Command::Verify { .. } => "verify",
        Command::Solve { .. } => "solve",
        Command::Continue { .. } => "continue",
        Command::Balance { .. } => "balance",
        Command::Flow { .. } => "flow",
        Command::Bifurcate { .. } => "bifurcate",
    }
}

fn run(c: &Command, cfg: &RunConfig) -> Outcome {
    match c {
        Command::Spectrum { operator, state } => spectrum(cfg, *operator, state.as_deref()),
        Command::Verify { suite } => verify(cfg, suite),
        Command::Solve { branch, rho, state } => solve(cfg, *branch, *rho, state.as_deref()),
        Command::Continue { branch, from, to, step, state } => continue_cmd(cfg, *branch, *from, *to, *step, state.as_deref()),
        Command::Balance { amplitude, axis, state } => balance_cmd(cfg, *amplitude, *axis, state.as_deref()),
        Command::Flow { rho_star, half_width, psi_sq, state } => flow(cfg, *rho_star, *half_width, *psi_sq, state.as_deref()),
        Command::Bifurcate { from, to, scan, probe, branches, diagram_only } => {
            bifurcate(cfg, *from, *to, *scan, *probe, branches, *diagram_only)
        }
    }
}

fn band(cfg: &RunConfig) -> Result<BandLimit, Failure> {
    Ok(BandLimit::new(cfg.band_limit)?)
}

fn basis(cfg: &RunConfig) -> Result<std::sync::Arc<DiracBasis>, Failure> {
    Ok(DiracBasis::assemble(band(cfg)?)?)
}

fn newton_options(cfg: &RunConfig) -> NewtonOptions {
    let mut o = NewtonOptions::default();
    let t = &cfg.tolerances;
    o.tol = t.newton_tol.unwrap_or(o.tol);
    o.sv_cut = t.sv_cut.unwrap_or(o.sv_cut);
    o.max_iter = t.max_iter.unwrap_or(o.max_iter);
    o
}

fn flow_options(cfg: &RunConfig) -> FlowOptions {
    let mut o = FlowOptions::default();
    let t = &cfg.tolerances;
    o.tol = t.flow_tol.unwrap_or(o.tol);
    o.step = t.flow_step.unwrap_or(o.step);
    o.eps = t.eps.unwrap_or(o.eps);
    o.eps1 = t.eps1.unwrap_or(o.eps1);
    o
}

fn read_state(b: &std::sync::Arc<DiracBasis>, path: &Path) -> Result<State, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    // accepts the output of `solve` as well as a bare state
    let v = v.get("state").unwrap_or(&v);
    Ok(State::from_json(b, v)?)
}

fn write(cfg: &RunConfig, name: &str, body: &str) -> Result<Option<PathBuf>, Failure> {
    match cfg.out_path(name) {
        Some(p) => {
            std::fs::write(&p, body).map_err(|e| Failure::Runtime { command: "", error: format!("{}: {e}", p.display()) })?;
            Ok(Some(p))
        }
        None => Ok(None),
    }
}

fn print_json(v: Value) {
    println!("{}", serde_json::to_string_pretty(&report::normalize(v)).unwrap_or_default());
}

fn spectrum(cfg: &RunConfig, op: Operator, state: Option<&Path>) -> Outcome {
    let csv = match op {
        Operator::Dirac => {
            let b = basis(cfg)?;
            let rep = b.report();
            let mut s = String::from("lambda,multiplicity,max_error\n");
            for (&(lambda, mult), &err) in rep.clusters.iter().zip(&rep.cluster_errors) {
                s.push_str(&format!("{},{},{}\n", fmt17(lambda), mult, fmt17(err)));
            }
            s
        }
        Operator::Laplace => {
            let mut s = String::from("lambda,multiplicity,max_error\n");
            for k in 0..=cfg.band_limit {
                let (mu, mult) = laplace_eigendata(k);
                let err = (0..=2 * k as i64)
                    .map(|i| {
                        let m = i - k as i64;
                        let y = ScalarField::harmonic(cfg.band_limit, k, m);
                        (y.laplacian().get(k, m) + mu).abs()
                    })
                    .fold(0.0, f64::max);
                s.push_str(&format!("{},{},{}\n", fmt17(mu), mult, fmt17(err)));
            }
            s
        }
        Operator::Weighted => {
            let b = basis(cfg)?;
            let u = match state {
                Some(p) => read_state(&b, p)?.u,
                None => ScalarField::zeros(b.band()),
            };
            let ws = weighted_eigensystem(&b, &u)?;
            let json = serde_json::to_string_pretty(&report::eigen_json(&ws)).unwrap_or_default();
            write(cfg, "eigenspinors.json", &json)?;
            report::eigen_csv(&ws)
        }
    };
    let name = match op {
        Operator::Dirac => "spectrum_dirac.csv",
        Operator::Laplace => "spectrum_laplace.csv",
        Operator::Weighted => "spectrum_weighted.csv",
    };
    write(cfg, name, &csv)?;
    print!("{csv}");
    Ok(())
}

fn parse_suite(s: &str) -> Result<Vec<u8>, Failure> {
    if s == "all" {
        return Ok(all_ids());
    }
    let ids: Result<Vec<u8>, _> = s.split(',').map(|t| t.trim().parse::<u8>()).collect();
    match ids {
        Ok(v) if !v.is_empty() && v.iter().all(|i| (1..=14).contains(i)) => Ok(v),
        _ => Err(Failure::Usage(format!("--suite takes `all` or check numbers 1-14 (got {s})"))),
    }
}

fn verify(cfg: &RunConfig, suite: &str) -> Outcome {
    let ids = parse_suite(suite)?;
    let s = Suite::new(band(cfg)?);
    let mut checks = Vec::new();
    for id in ids {
        let c = s.run(id);
        if !cfg.json {
            println!("{}", c.line());
        }
        checks.push(c);
    }
    let passed = checks.iter().all(|c| c.passed || !c.gating);
    let rep = superliouville::verify::SuiteReport { band: cfg.band_limit, passed, checks };
    let value = report::to_value(&rep)?;
    write(cfg, "verify.json", &serde_json::to_string_pretty(&value).unwrap_or_default())?;
    if !passed {
        let failures = report::to_value(&rep.failures())?;
        return Err(Failure::Validation { command: "verify", report: failures });
    }
    if cfg.json {
        print_json(value);
    }
    Ok(())
}

fn point_json(p: &BranchPoint) -> Value {
    json!({ "summary": report::to_value(&p.row()).unwrap_or(Value::Null), "state": p.state.to_json() })
}

fn solve(cfg: &RunConfig, kind: BranchKind, rho: f64, state: Option<&Path>) -> Outcome {
    let b = basis(cfg)?;
    let point = match kind {
        BranchKind::Trivial => {
            if !(rho > 0.0) {
                return Err(Error::RhoNotPositive(rho).into());
            }
            BranchPoint::assess(State::trivial(&b, rho))?
        }
        BranchKind::Killing => BranchPoint::assess(killing_branch(&b, rho, KILLING_PHASE)?)?,
        BranchKind::Newton => {
            let path = state.ok_or_else(|| Failure::Usage("--branch newton needs --state".into()))?;
            let s0 = read_state(&b, path)?;
            newton_solve(&s0, rho, &newton_options(cfg)).map_err(|e| Failure::Runtime { command: "solve", error: e.to_string() })?.point
        }
    };
    let v = point_json(&point);
    write(cfg, "solution.json", &serde_json::to_string_pretty(&report::normalize(v.clone())).unwrap_or_default())?;
    if cfg.json {
        print_json(v);
    } else {
        print!("{}", report::branch_csv(&[point.row()]));
    }
    Ok(())
}

fn continue_cmd(cfg: &RunConfig, kind: BranchKind, from: f64, to: f64, step: f64, state: Option<&Path>) -> Outcome {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Failure::Usage(format!("--step must be positive (got {step})")));
    }
    let b = basis(cfg)?;
    let (start, name) = match kind {
        BranchKind::Trivial => {
            if !(from > 0.0) {
                return Err(Error::RhoNotPositive(from).into());
            }
            (State::trivial(&b, from), "trivial")
        }
        BranchKind::Killing => (killing_branch(&b, from, KILLING_PHASE)?, "killing"),
        BranchKind::Newton => {
            let path = state.ok_or_else(|| Failure::Usage("--branch newton needs --state".into()))?;
            let s0 = read_state(&b, path)?;
            let p = newton_solve(&s0, from, &newton_options(cfg)).map_err(|e| Failure::Runtime { command: "continue", error: e.to_string() })?;
            (p.point.state, "branch")
        }
    };
    let start = BranchPoint::assess(start)?;
    let c = continue_branch(&start, to, step, &newton_options(cfg));
    let rows: Vec<_> = c.points.iter().map(|p| p.row()).collect();
    let csv = report::branch_csv(&rows);
    write(cfg, &format!("{name}.csv"), &csv)?;
    if cfg.json {
        print_json(json!({ "branch": name, "rows": report::to_value(&rows)?, "stopped": c.stopped }));
    } else {
        print!("{csv}");
        if let Some(why) = &c.stopped {
            eprintln!("stopped early: {why}");
        }
    }
    Ok(())
}

fn balance_cmd(cfg: &RunConfig, amplitude: f64, axis: u8, state: Option<&Path>) -> Outcome {
    let b = basis(cfg)?;
    let u = match state {
        Some(p) => read_state(&b, p)?.u,
        None => ScalarField::coordinate(b.band(), axis as usize - 1) * amplitude,
    };
    let r = balance(b.sphere(), &u)?;
    let v = report::to_value(&r)?;
    write(cfg, "balanced.json", &serde_json::to_string_pretty(&v).unwrap_or_default())?;
    if cfg.json {
        print_json(v);
    } else {
        println!("|CM| = {} after {} iterations", fmt17(r.defect), r.iterations);
    }
    if !r.converged {
        return Err(Failure::Validation { command: "balance", report: json!({ "defect": r.defect, "iterations": r.iterations }) });
    }
    Ok(())
}

fn flow(cfg: &RunConfig, rho_star: f64, half_width: f64, psi_sq: f64, state: Option<&Path>) -> Outcome {
    if !(half_width > 0.0) {
        return Err(Failure::Usage(format!("--half-width must be positive (got {half_width})")));
    }
    let b = basis(cfg)?;
    let start = match state {
        Some(p) => read_state(&b, p)?,
        None => admissible_start(&b, rho_star - half_width, psi_sq)?,
    };
    let rho_end = 2.0 * rho_star - start.rho;
    let trace = deformation_flow(&start, rho_star, rho_end, &flow_options(cfg))
        .map_err(|e| Failure::Runtime { command: "flow", error: e.to_string() })?;
    let lines = report::flow_jsonl(&trace.samples)?;
    let written = write(cfg, "flow.jsonl", &lines)?;
    let summary = json!({
        "rho_star": rho_star,
        "interval": [start.rho, rho_end],
        "samples": trace.samples.len(),
        "rejected_steps": trace.rejected_steps,
        "stationary": trace.stationary,
        "drift": report::to_value(&trace.drift())?,
    });
    if cfg.json || written.is_some() {
        print_json(summary);
    } else {
        print!("{lines}");
    }
    Ok(())
}

fn bifurcate(cfg: &RunConfig, from: f64, to: f64, scan: f64, probe: bool, branches: &[PathBuf], diagram_only: bool) -> Outcome {
    let mut tables = Vec::new();
    for p in branches {
        tables.push(diagram::read_branch(p).map_err(Failure::Usage)?);
    }
    if diagram_only {
        let svg = diagram::render(&tables);
        if write(cfg, "bifurcation.svg", &svg)?.is_none() {
            print!("{svg}");
        }
        return Ok(());
    }
    if !(to > from) || !(scan > 0.0) || from <= 1.0 {
        return Err(Failure::Usage("need 1 < --from < --to and --scan > 0".into()));
    }
    let b = basis(cfg)?;
    if to >= b.half_band() as f64 {
        return Err(Failure::Usage(format!("--to must stay below L/2 = {}", b.half_band())));
    }
    let oh = OriginHessian::new(&b);
    let found = detect_bifurcation(&oh, from, to, scan);
    let switches: Vec<SwitchReport> = if probe {
        found.iter().map(|x| branch_switch_probe(&oh, x, 1e-2, &[1e-2], &newton_options(cfg))).collect()
    } else {
        Vec::new()
    };

    if tables.is_empty() {
        let n = ((to - from) / DIAGRAM_STEP).floor() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| from + k as f64 * DIAGRAM_STEP).collect();
        let mut trivial = Vec::new();
        let mut killing = Vec::new();
        for &rho in &grid {
            trivial.push(BranchPoint::assess(State::trivial(&b, rho))?.row());
            killing.push(BranchPoint::assess(killing_branch(&b, rho, KILLING_PHASE)?)?.row());
        }
        write(cfg, "trivial.csv", &report::branch_csv(&trivial))?;
        write(cfg, "killing.csv", &report::branch_csv(&killing))?;
        tables.push(diagram::Branch::from_rows("trivial", &trivial));
        tables.push(diagram::Branch::from_rows("killing", &killing));
    }
    let discovered: Vec<(f64, f64, usize)> = switches
        .iter()
        .flat_map(|r| r.attempts.iter())
        .filter(|a| a.nontrivial)
        .map(|a| (a.rho, a.psi_norm, 0))
        .collect();
    if !discovered.is_empty() {
        tables.push(diagram::Branch { name: "discovered".into(), points: discovered });
    }
    let svg = diagram::render(&tables);
    write(cfg, "bifurcation.svg", &svg)?;

    let v = json!({ "bifurcations": report::to_value(&found)?, "probes": report::to_value(&switches)? });
    write(cfg, "bifurcations.json", &serde_json::to_string_pretty(&v).unwrap_or_default())?;
    if cfg.json {
        print_json(v);
    } else {
        println!("rho,kernel_dim,index_below,index_above");
        for x in &found {
            println!("{},{},{},{}", fmt17(x.rho), x.kernel_dim, x.index_below, x.index_above);
        }
        for r in &switches {
            println!("switch at {}: {}", fmt17(r.rho_star), if r.found_branch() { "new branch" } else { "no new branch" });
        }
    }
    Ok(())
}
