//! `qui` — bound reports, parameter sweeps, subspace verification, and
//! exact-protocol runs for the quantum uncommon information toolkit.
//!
//! Exit codes are a contract: 0 success (and chain holds), 1 input error,
//! 2 verification or chain failure, 3 protocol error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use qui_core::bounds::{
    self, bound_l1, bound_l_new, bound_u1, bound_u_new, full_report, make_zeta_decomposition,
    zeta_closed_bounds,
};
use qui_core::qlinalg::{trace_distance, DensityOperator};
use qui_core::qsr::{qsr_closed_forms, qsr_numeric_report};
use qui_core::qstate::{
    exchange_final_state, load_state, make_named, make_xi, make_zeta, save_state, zeta_from_x,
    NamedState, PureState, ZetaParams,
};
use qui_core::singleshot::{naive_swap_cost, run_exact_sse};
use qui_core::subspace::{
    load_cert, save_cert, search_basis_common, verify_common, CommonSubspaceCert,
};
use qui_core::Error;

#[derive(Parser)]
#[command(
    name = "qui",
    version,
    about = "Numerical bounds on quantum uncommon information",
    long_about = "Computes and cross-validates the known bounds on quantum \
                  uncommon information for tripartite pure states, sweeps the \
                  six-level state families into CSV, verifies common-subspace \
                  certificates, and runs the exact single-shot exchange \
                  protocol with ebit accounting."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every computable bound for a state file and check the chain.
    Bounds(BoundsArgs),
    /// Sweep the tripartite six-level family over x and emit the four
    /// bounds as CSV.
    Sweep(SweepArgs),
    /// Sweep the four-party six-level family and emit the rotation-task
    /// rates as CSV.
    QsrSweep(QsrSweepArgs),
    /// Verify a common-subspace certificate, or search all basis subsets.
    VerifySubspace(VerifyArgs),
    /// Run the exact single-shot exchange protocol with ebit accounting.
    SseSingleshot(SseArgs),
    /// Write a named or family state to a state file.
    MakeState(MakeStateArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// State file (JSON).
    #[arg(long)]
    state: PathBuf,
    /// Common-subspace certificate file; enables the u_new bound.
    #[arg(long)]
    cert: Option<PathBuf>,
    /// Decomposition descriptor file; enables the l_new bound.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Number of grid points.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    #[arg(long, default_value_t = 1.0)]
    x_max: f64,
    /// Comma-separated bound columns (subset of l1,l_new,u_new,u1).
    #[arg(long)]
    columns: Option<String>,
    /// Emit numeric columns (entropy evaluation on constructed states).
    #[arg(long)]
    numeric: bool,
    /// Emit closed-form columns (default unless --numeric is given alone).
    #[arg(long)]
    closed_form: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QsrSweepArgs {
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, default_value_t = 0.0)]
    x_min: f64,
    #[arg(long, default_value_t = 1.0)]
    x_max: f64,
    /// Extra column selectors; `starters` adds the six per-starter rates.
    #[arg(long)]
    columns: Option<String>,
    /// Emit numeric columns next to the closed forms.
    #[arg(long)]
    numeric: bool,
    /// Emit closed-form columns (default unless --numeric is given alone).
    #[arg(long)]
    closed_form: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    state: PathBuf,
    /// Certificate to verify against the state.
    #[arg(long, conflicts_with = "search")]
    cert: Option<PathBuf>,
    /// Exhaustively search basis subsets instead.
    #[arg(long)]
    search: bool,
    /// Write the verified certificate (or search results) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SseArgs {
    #[arg(long)]
    state: PathBuf,
    /// Verified-subspace certificate; omitted means the blind path (naive
    /// double teleportation).
    #[arg(long)]
    cert: Option<PathBuf>,
    /// Also write the run report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MakeStateArgs {
    /// ghz3 | epr | product-epr | zeta | xi
    #[arg(long)]
    family: String,
    /// Sweep parameter for zeta/xi (mutually exclusive with --coeffs).
    #[arg(long)]
    x: Option<f64>,
    /// Explicit coefficients c0,c1,c2,c3 for zeta/xi.
    #[arg(long)]
    coeffs: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::QsrSweep(args) => cmd_qsr_sweep(args),
        Command::VerifySubspace(args) => cmd_verify_subspace(args),
        Command::SseSingleshot(args) => cmd_sse_singleshot(args),
        Command::MakeState(args) => cmd_make_state(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ProtocolError(_) => 3,
        Error::NotCommon(_) => 2,
        _ => 1,
    }
}

/// Deterministic 12-significant-digit formatting, locale-independent.
/// Plain decimal for moderate exponents, scientific otherwise.
fn fmt_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci
        .split('e')
        .nth(1)
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            std::fs::write(p, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_verified_cert(path: &Path, psi: &PureState) -> Result<CommonSubspaceCert, Error> {
    let dim = psi.layout().dim_of("A")?;
    let cert = load_cert(path, dim)?;
    verify_common(psi, &cert)
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

fn cmd_bounds(args: BoundsArgs) -> Result<u8, Error> {
    let psi = load_state(&args.state)?;
    let cert = match &args.cert {
        Some(path) => {
            let cert = load_verified_cert(path, &psi)?;
            if !cert.is_verified() {
                eprintln!(
                    "certificate failed verification: decomposition residual {:.3e}, \
                     symmetry residual {:.3e}",
                    cert.residual_decomposition().unwrap_or(f64::NAN),
                    cert.residual_symmetry().unwrap_or(f64::NAN)
                );
                return Ok(2);
            }
            Some(cert)
        }
        None => None,
    };
    let dspec = args
        .spec
        .as_ref()
        .map(bounds::load_decomposition_spec)
        .transpose()?;
    let report = full_report(&psi, cert.as_ref(), dspec.as_ref(), None)?;

    println!(
        "l1       = {}  ({})",
        fmt_sig12(report.l1),
        report.provenance.l1
    );
    println!(
        "l2_found = {}  ({})",
        fmt_sig12(report.l2_found),
        report.provenance.l2_found
    );
    match report.l_new {
        Some(v) => println!("l_new    = {}  ({})", fmt_sig12(v), report.provenance.l_new),
        None => println!("l_new    = n/a  ({})", report.provenance.l_new),
    }
    match report.u_new {
        Some(v) => println!("u_new    = {}  ({})", fmt_sig12(v), report.provenance.u_new),
        None => println!("u_new    = n/a  ({})", report.provenance.u_new),
    }
    println!(
        "u1       = {}  ({})",
        fmt_sig12(report.u1),
        report.provenance.u1
    );
    println!("chain_ok = {}", report.chain_ok);

    if let Some(out) = &args.out {
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| Error::ParseError(e.to_string()))?;
        std::fs::write(out, json)?;
    }
    Ok(if report.chain_ok { 0 } else { 2 })
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct GridSpec {
    grid: usize,
    x_min: f64,
    x_max: f64,
}

impl GridSpec {
    fn validate(&self) -> Result<(), Error> {
        if self.grid < 2 {
            return Err(Error::DomainError(
                "grid must have at least 2 points".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.x_min)
            || !(0.0..=1.0).contains(&self.x_max)
            || self.x_min >= self.x_max
        {
            return Err(Error::DomainError("need 0 <= x_min < x_max <= 1".into()));
        }
        Ok(())
    }

    fn point(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.grid - 1) as f64
    }
}

const SWEEP_COLUMNS: [&str; 4] = ["l1", "l_new", "u_new", "u1"];

fn parse_sweep_columns(spec: Option<&str>) -> Result<Vec<&'static str>, Error> {
    match spec {
        None => Ok(SWEEP_COLUMNS.to_vec()),
        Some(list) => {
            let requested: Vec<&str> = list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect();
            for name in &requested {
                if !SWEEP_COLUMNS.contains(name) {
                    return Err(Error::DomainError(format!(
                        "unknown column {name}; available: {}",
                        SWEEP_COLUMNS.join(",")
                    )));
                }
            }
            // Canonical order regardless of how the user listed them.
            Ok(SWEEP_COLUMNS
                .iter()
                .copied()
                .filter(|c| requested.contains(c))
                .collect())
        }
    }
}

fn emitters(numeric: bool, closed_form: bool) -> (bool, bool) {
    let emit_closed = closed_form || !numeric;
    (emit_closed, numeric)
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, Error> {
    let grid = GridSpec {
        grid: args.grid,
        x_min: args.x_min,
        x_max: args.x_max,
    };
    grid.validate()?;
    let columns = parse_sweep_columns(args.columns.as_deref())?;
    let (emit_closed, emit_numeric) = emitters(args.numeric, args.closed_form);

    let mut header = vec!["x".to_string()];
    if emit_closed {
        header.extend(columns.iter().map(|c| c.to_string()));
    }
    if emit_numeric {
        header.extend(columns.iter().map(|c| format!("{c}_num")));
    }

    let rows: Result<Vec<String>, Error> = (0..grid.grid)
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let params = zeta_from_x(x)?;
            let mut cells = vec![fmt_sig12(x)];
            if emit_closed {
                let closed = zeta_closed_bounds(&params);
                for c in &columns {
                    let v = match *c {
                        "l1" => closed.l1,
                        "l_new" => closed.l_new,
                        "u_new" => closed.u_new,
                        _ => closed.u1,
                    };
                    cells.push(fmt_sig12(v));
                }
            }
            if emit_numeric {
                let zeta = make_zeta(&params)?;
                for c in &columns {
                    let v = match *c {
                        "l1" => bound_l1(&zeta)?,
                        "l_new" => bound_l_new(&make_zeta_decomposition(&params)?)?,
                        "u_new" => {
                            let cert = CommonSubspaceCert::from_indices(6, vec![3, 4, 5])?;
                            let cert = verify_common(&zeta, &cert)?;
                            bound_u_new(&zeta, Some(&cert))?
                        }
                        _ => bound_u1(&zeta)?,
                    };
                    cells.push(fmt_sig12(v));
                }
            }
            Ok(cells.join(","))
        })
        .collect();

    let mut csv = header.join(",");
    csv.push('\n');
    for row in rows? {
        csv.push_str(&row);
        csv.push('\n');
    }
    write_output(args.out.as_deref(), &csv)?;
    Ok(0)
}

fn cmd_qsr_sweep(args: QsrSweepArgs) -> Result<u8, Error> {
    let grid = GridSpec {
        grid: args.grid,
        x_min: args.x_min,
        x_max: args.x_max,
    };
    grid.validate()?;
    let starters = match args.columns.as_deref() {
        None => false,
        Some(list) => {
            let mut with_starters = false;
            for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match name {
                    "starters" => with_starters = true,
                    other => {
                        return Err(Error::DomainError(format!(
                            "unknown column selector {other}; available: starters"
                        )))
                    }
                }
            }
            with_starters
        }
    };
    let (emit_closed, emit_numeric) = emitters(args.numeric, args.closed_form);

    let starter_names = ["u1_qsr", "u2_qsr", "u3_qsr", "v1_qsr", "v2_qsr", "v3_qsr"];
    let mut header = vec!["x".to_string()];
    if emit_closed {
        header.push("u_old_qsr".into());
        header.push("v_new_qsr".into());
        if starters {
            header.extend(starter_names.iter().map(|s| s.to_string()));
        }
    }
    if emit_numeric {
        header.push("u_old_qsr_num".into());
        header.push("v_new_qsr_num".into());
        if starters {
            header.extend(starter_names.iter().map(|s| format!("{s}_num")));
        }
    }

    let rows: Result<Vec<String>, Error> = (0..grid.grid)
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let params = zeta_from_x(x)?;
            let mut cells = vec![fmt_sig12(x)];
            if emit_closed {
                let r = qsr_closed_forms(&params);
                cells.push(fmt_sig12(r.u_old_min));
                cells.push(fmt_sig12(r.v_new_min));
                if starters {
                    for v in r.u.iter().chain(r.v.iter()) {
                        cells.push(fmt_sig12(*v));
                    }
                }
            }
            if emit_numeric {
                let r = qsr_numeric_report(&params)?;
                cells.push(fmt_sig12(r.u_old_min));
                cells.push(fmt_sig12(r.v_new_min));
                if starters {
                    for v in r.u.iter().chain(r.v.iter()) {
                        cells.push(fmt_sig12(*v));
                    }
                }
            }
            Ok(cells.join(","))
        })
        .collect();

    let mut csv = header.join(",");
    csv.push('\n');
    for row in rows? {
        csv.push_str(&row);
        csv.push('\n');
    }
    write_output(args.out.as_deref(), &csv)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// verify-subspace
// ---------------------------------------------------------------------------

fn cmd_verify_subspace(args: VerifyArgs) -> Result<u8, Error> {
    let psi = load_state(&args.state)?;
    if args.search {
        let certs = search_basis_common(&psi)?;
        if certs.is_empty() {
            println!("no common subspace found");
        } else {
            println!("verified basis common subspaces (largest first):");
            for cert in &certs {
                println!(
                    "  {:?}  residual_decomposition = {:.3e}, residual_symmetry = {:.3e}",
                    cert.indices().expect("search yields index certs"),
                    cert.residual_decomposition().unwrap_or(f64::NAN),
                    cert.residual_symmetry().unwrap_or(f64::NAN),
                );
            }
        }
        if let Some(out) = &args.out {
            let subsets: Vec<Vec<usize>> = certs
                .iter()
                .map(|c| c.indices().expect("index certs").to_vec())
                .collect();
            let json = serde_json::to_string_pretty(&subsets)
                .map_err(|e| Error::ParseError(e.to_string()))?;
            std::fs::write(out, json)?;
        }
        return Ok(0);
    }
    let cert_path = args
        .cert
        .as_ref()
        .ok_or_else(|| Error::DomainError("pass --cert <file> or --search".into()))?;
    let cert = load_verified_cert(cert_path, &psi)?;
    println!(
        "residual_decomposition = {:.6e}",
        cert.residual_decomposition().unwrap_or(f64::NAN)
    );
    println!(
        "residual_symmetry      = {:.6e}",
        cert.residual_symmetry().unwrap_or(f64::NAN)
    );
    println!("verified               = {}", cert.is_verified());
    if let Some(out) = &args.out {
        save_cert(&cert, out)?;
    }
    Ok(if cert.is_verified() { 0 } else { 2 })
}

// ---------------------------------------------------------------------------
// sse-singleshot
// ---------------------------------------------------------------------------

fn cmd_sse_singleshot(args: SseArgs) -> Result<u8, Error> {
    let psi = load_state(&args.state)?;
    let cert = match &args.cert {
        Some(path) => {
            let cert = load_verified_cert(path, &psi)?;
            if !cert.is_verified() {
                return Err(Error::NotCommon(format!(
                    "certificate failed verification (decomposition {:.3e}, symmetry {:.3e})",
                    cert.residual_decomposition().unwrap_or(f64::NAN),
                    cert.residual_symmetry().unwrap_or(f64::NAN)
                )));
            }
            Some(cert)
        }
        None => None,
    };
    let (final_state, ledger) = run_exact_sse(&psi, cert.as_ref())?;
    let expected = exchange_final_state(&psi, "A", "B")?;
    let distance = trace_distance(
        &DensityOperator::from_pure(&final_state)?,
        &DensityOperator::from_pure(&expected)?,
    )?;
    let d = psi.layout().dim_of("A")?;
    let naive = naive_swap_cost(d)?;
    let total = ledger.total();
    let saved = naive - total;

    println!("final-state trace distance = {distance:.3e}");
    println!("ledger:");
    for entry in &ledger.entries {
        println!(
            "  {:<45} {:>14} ebits  ({:?})",
            entry.step,
            fmt_sig12(entry.ebits),
            entry.mechanism
        );
    }
    println!("total ebits (real)     = {}", fmt_sig12(total));
    println!("total ebits (integer)  = {}", ledger.total_integer());
    println!("classical bits         = {}", ledger.total_classical_bits());
    println!("naive swap cost        = {}", fmt_sig12(naive));
    println!("savings                = {}", fmt_sig12(saved));

    if let Some(out) = &args.out {
        let report = serde_json::json!({
            "distance": distance,
            "naive_cost": naive,
            "total_ebits": total,
            "total_integer_ebits": ledger.total_integer(),
            "classical_bits": ledger.total_classical_bits(),
            "savings": saved,
            "ledger": ledger,
        });
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| Error::ParseError(e.to_string()))?;
        std::fs::write(out, json)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// make-state
// ---------------------------------------------------------------------------

fn parse_coeffs(text: &str) -> Result<ZetaParams, Error> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::DomainError(
            "--coeffs expects four comma-separated values".into(),
        ));
    }
    let mut c = [0.0f64; 4];
    for (slot, part) in c.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::ParseError(format!("bad coefficient {part}")))?;
    }
    ZetaParams::new(c)
}

fn family_params(args: &MakeStateArgs) -> Result<ZetaParams, Error> {
    match (&args.x, &args.coeffs) {
        (Some(_), Some(_)) => Err(Error::DomainError(
            "--x and --coeffs are mutually exclusive".into(),
        )),
        (Some(x), None) => zeta_from_x(*x),
        (None, Some(text)) => parse_coeffs(text),
        (None, None) => Err(Error::DomainError("zeta/xi need --x or --coeffs".into())),
    }
}

fn cmd_make_state(args: MakeStateArgs) -> Result<u8, Error> {
    let state = match args.family.to_ascii_lowercase().as_str() {
        "zeta" => make_zeta(&family_params(&args)?)?,
        "xi" => make_xi(&family_params(&args)?)?,
        named => make_named(named.parse::<NamedState>()?)?,
    };
    save_state(&state, &args.out)?;
    println!(
        "wrote {} ({} nonzero amplitudes)",
        args.out.display(),
        state
            .amplitudes()
            .iter()
            .filter(|a| a.norm_sqr() != 0.0)
            .count()
    );
    Ok(0)
}
