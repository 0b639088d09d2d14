//! `collatz-koopman`: batch front end for the verification library.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use collatz_koopman::averaging::{
    alternating_average, alternating_limit, build_registry, cesaro_average, kappa_limit, l1_distance, unit_vector,
};
use collatz_koopman::collatz::{trajectory, TrajectoryStatus, DEFAULT_CAP};
use collatz_koopman::correlation::{self, phi_functional, IncFn, WordTerm};
use collatz_koopman::isometry::{embedding_residual, row_isometry_check, wold_complement};
use collatz_koopman::koopman::{backward_l1_norm, operator_norm_numeric, spectral_radius_report, Exponent};
use collatz_koopman::parity::{build_bk, genfn_numerator, MAX_GENFN_LEVEL};
use collatz_koopman::spectrum::fourier_coeffs;
use collatz_koopman::verify::{self, VerifyOptions, DEFAULT_SEED};
use collatz_koopman::{Check, Natural, Report};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Deserialize;

use output::{emit, Cell, Format, Output, Table};

#[derive(Parser, Debug)]
#[command(name = "collatz-koopman", version, allow_negative_numbers = true, about = "Verify Collatz-Koopman operator identities")]
struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,
    /// Override the tolerance of floating-point checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AverageMode {
    Cesaro,
    Kappa,
    Alternating,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// T-trajectory of n until the trivial cycle, a nontrivial cycle, or the cap.
    Trajectory {
        #[arg(long)]
        n: Natural,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Parity table B_k, its y column, or the generating-function numerator.
    Parity {
        #[arg(long)]
        k: u32,
        /// Emit the numerator coefficients instead of the table.
        #[arg(long)]
        numerator: bool,
    },
    /// Truncated operator norms of the forward map and its l1 backward norm.
    OperatorNorm {
        #[arg(long, default_value_t = 64)]
        truncation: usize,
        #[arg(long, default_value_t = 3)]
        max_power: u32,
    },
    /// Spectral-radius sandwich from the c_n lower bounds.
    Spectral {
        #[arg(long, default_value_t = 25)]
        n_max: u32,
        #[arg(long, default_value_t = 100_000)]
        search_bound: u64,
        /// 1, 2, ..., or inf.
        #[arg(long, default_value = "2")]
        p: Exponent,
    },
    /// Cesàro, kappa-limit or alternating average of e_n.
    Average {
        #[arg(long)]
        n: u64,
        #[arg(long = "K", default_value_t = 10_000)]
        k: u64,
        #[arg(long, value_enum, default_value = "cesaro")]
        mode: AverageMode,
    },
    /// Fourier coefficients b_j at level k and the sign reconstruction.
    Spectrum {
        #[arg(long)]
        k: u32,
        /// Reconstruct signs for n up to this bound (default 2^{k+1}).
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Row-isometry residuals of M_k for k <= k_max.
    Isometry {
        #[arg(long, default_value_t = 10)]
        k_max: u32,
    },
    /// Wold complement dimensions and residuals for k <= k_max.
    Wold {
        #[arg(long, default_value_t = 8)]
        k_max: u32,
    },
    /// The functional φ_f on a word in C and C^*.
    Correlate {
        /// Complex number such as 0.5 or 0.3+0.2i.
        #[arg(long, default_value = "0.5")]
        lambda: Complex64,
        #[arg(long, default_value_t = 9)]
        k_max: u32,
        /// `f0` or `file:PATH` with JSON {"x": [...], "y": [...]}.
        #[arg(long, default_value = "f0")]
        f: String,
        /// Range of n on which f0 is tabulated.
        #[arg(long, default_value_t = 1 << 14)]
        range: u64,
        /// JSON list of [i, j, re, im] terms a (C^*)^i C^j.
        #[arg(long, default_value = "[[0,1,1,0]]")]
        word: String,
    },
    /// Run a module's verification, or `all` for the acceptance suite.
    Verify {
        target: String,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
        #[arg(long)]
        n_max: Option<u64>,
        #[arg(long)]
        search_bound: Option<u64>,
    },
}

type CmdResult = Result<Output, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn run_trajectory(n: &Natural, cap: usize) -> CmdResult {
    let start = Instant::now();
    let result = trajectory(n, cap).map_err(err)?;
    let mut table = Table::new(&["step", "value"]);
    for (i, v) in result.steps.iter().enumerate() {
        table.push(vec![Cell::from(i), Cell::from(v.to_string())]);
    }
    let (status, at) = match &result.status {
        TrajectoryStatus::ReachedTrivialCycle { at_step } => ("trivial_cycle", *at_step as f64),
        TrajectoryStatus::NontrivialCycle { members } => ("nontrivial_cycle", members.len() as f64),
        TrajectoryStatus::Exhausted { cap } => ("exhausted", *cap as f64),
    };
    let mut report = Report::new("trajectory").param("n", n).param("cap", cap).param("status", status);
    report.push(Check::info(format!("{status}_at"), at));
    Ok(Output { report: report.finish(start), table: Some(table) })
}

fn run_parity(k: u32, numerator: bool) -> CmdResult {
    let start = Instant::now();
    let mut report = Report::new("parity").param("k", k);
    let table = if numerator {
        let g = genfn_numerator(k).map_err(err)?;
        report.push(Check::exact("numerator_positive", g.all_positive(), 0.0));
        let mut t = Table::new(&["power", "coefficient"]);
        for (i, c) in g.coeffs.iter().enumerate() {
            t.push(vec![Cell::from(i), Cell::from(*c)]);
        }
        t
    } else {
        let b = build_bk(k).map_err(err)?;
        report.push(Check::exact("rows_permute_z2k", b.rows_are_permutation(), 0.0));
        if k <= MAX_GENFN_LEVEL {
            let g = genfn_numerator(k).map_err(err)?;
            report.push(Check::exact("numerator_positive", g.all_positive(), 0.0));
        }
        let y = b.y();
        let mut t = Table::new(&["n", "bits", "row_value", "y"]);
        for n in 1..=1u64 << k {
            let bits: String = b.row_bits(n).iter().map(|v| char::from(b'0' + v)).collect();
            // y covers the first half of the rows only.
            let y_cell = y.get(n as usize - 1).map_or(Cell::from(""), |&v| Cell::from(u32::from(v)));
            t.push(vec![Cell::from(n), Cell::from(bits), Cell::from(b.row_value(n)), y_cell]);
        }
        t
    };
    Ok(Output { report: report.finish(start), table: Some(table) })
}

fn run_operator_norm(truncation: usize, max_power: u32, tol: f64) -> CmdResult {
    let start = Instant::now();
    let mut report = Report::new("operator-norm").param("truncation", truncation).param("max_power", max_power);
    let mut table = Table::new(&["power", "l2_norm"]);
    for power in 1..=max_power {
        let v = operator_norm_numeric(power, truncation).map_err(err)?;
        table.push(vec![Cell::from(power), Cell::from(v)]);
        if power == 1 {
            report.push(Check::within("one_step_norm_minus_sqrt2", (v - 2f64.sqrt()).abs(), tol));
        } else {
            report.push(Check::info(format!("norm_power_{power}"), v));
        }
    }
    let l1 = backward_l1_norm(truncation).map_err(err)?;
    report.push(Check::exact("backward_l1_norm_is_2", l1 == 2, l1 as f64));
    Ok(Output { report: report.finish(start), table: Some(table) })
}

fn run_spectral(n_max: u32, search_bound: u64, p: Exponent) -> CmdResult {
    let start = Instant::now();
    let rows = spectral_radius_report(p, n_max, search_bound).map_err(err)?;
    let mut report = Report::new("spectral").param("n_max", n_max).param("search_bound", search_bound).param("p", p);
    let unordered = rows.iter().filter(|r| !r.ordered()).count();
    report.push(Check::exact("rows_ordered", unordered == 0, unordered as f64));
    let decreasing = rows.windows(2).all(|w| w[1].upper <= w[0].upper);
    report.push(Check::exact("upper_nonincreasing", decreasing, 0.0));
    let mut table = Table::new(&["n", "c_n", "fib", "lower", "sandwich", "upper"]);
    for r in rows {
        table.push(vec![
            Cell::from(r.n),
            Cell::from(r.c_n),
            Cell::from(r.fib.to_string()),
            Cell::from(r.lower),
            Cell::from(r.sandwich),
            Cell::from(r.upper),
        ]);
    }
    Ok(Output { report: report.finish(start), table: Some(table) })
}

fn rational_cell(v: &BigRational) -> Cell {
    Cell::from(v.to_string())
}

fn run_average(n: u64, k: u64, mode: AverageMode) -> CmdResult {
    let start = Instant::now();
    if n == 0 {
        return Err("n must be positive".into());
    }
    let traj = trajectory(&Natural::from(n), DEFAULT_CAP).map_err(err)?;
    let truncation = traj.steps.iter().filter_map(Natural::to_u64).max().unwrap_or(n).max(2) as usize;
    let registry = build_registry(n.max(2), DEFAULT_CAP).map_err(err)?;
    let x = unit_vector(truncation, n);
    let mode_name = format!("{mode:?}").to_lowercase();
    let mut report = Report::new("average").param("n", n).param("K", k).param("mode", &mode_name).param("truncation", truncation);
    let result = match mode {
        AverageMode::Cesaro => {
            let avg = cesaro_average(&x, k).map_err(err)?;
            let limit = kappa_limit(&registry, &x).map_err(err)?;
            let dist = l1_distance(&avg, &limit);
            let s = registry.steps_to_cycle(n).map_err(err)?;
            let bound = BigRational::new((2 * s + 4).into(), k.into());
            report.push(Check::exact("distance_within_2s_plus_4_over_K", dist <= bound, dist.to_f64().unwrap_or(f64::NAN)));
            avg
        }
        AverageMode::Kappa => kappa_limit(&registry, &x).map_err(err)?,
        AverageMode::Alternating => {
            let avg = alternating_average(&x, k).map_err(err)?;
            let limit = alternating_limit(&registry, &x).map_err(err)?;
            report.push(Check::info("distance_to_alternating_limit", l1_distance(&avg, &limit).to_f64().unwrap_or(f64::NAN)));
            avg
        }
    };
    let mut table = Table::new(&["index", "exact", "value"]);
    for (i, v) in result.iter().enumerate().filter(|(_, v)| !num_traits::Zero::is_zero(*v)) {
        table.push(vec![Cell::from(i + 1), rational_cell(v), Cell::from(v.to_f64().unwrap_or(f64::NAN))]);
    }
    Ok(Output { report: report.finish(start), table: Some(table) })
}

fn run_spectrum(k: u32, n_max: Option<u64>, identity_tol: f64, tol: f64) -> CmdResult {
    let start = Instant::now();
    let coeffs = fourier_coeffs(k).map_err(err)?;
    let n_max = n_max.unwrap_or(1 << (k + 1));
    let mut report = Report::new("spectrum").param("k", k).param("n_max", n_max);
    report.push(Check::within("sum_minus_one", (coeffs.sum() - 1.0).norm(), identity_tol));
    report.push(Check::within("norm_minus_one", (coeffs.l2_norm() - 1.0).abs(), identity_tol));
    let poly = collatz_koopman::spectrum::SignPolynomial::new(k).map_err(err)?;
    let worst = coeffs
        .reconstruct_all(n_max)
        .iter()
        .enumerate()
        .map(|(i, v)| (v - f64::from(poly.sign_at(i as u64 + 1))).norm())
        .fold(0.0, f64::max);
    report.push(Check::within("reconstruction", worst, tol));
    let mut table = Table::new(&["j", "re", "im"]);
    for (j, b) in coeffs.b.iter().enumerate() {
        table.push(vec![Cell::from(j + 1), Cell::from(b.re), Cell::from(b.im)]);
    }
    Ok(Output { report: report.finish(start), table: Some(table) })
}

fn run_isometry(k_max: u32, tol: f64) -> CmdResult {
    let start = Instant::now();
    let mut report = Report::new("isometry").param("k_max", k_max);
    let mut table = Table::new(&["k", "row_isometry_residual", "embedding_residual"]);
    for k in 0..=k_max {
        let r = row_isometry_check(k).map_err(err)?;
        let e = embedding_residual(k).map_err(err)?;
        report.push(Check::within(format!("row_isometry_k{k:02}"), r, tol));
        table.push(vec![Cell::from(k), Cell::from(r), Cell::from(e)]);
    }
    Ok(Output { report: report.finish(start), table: Some(table) })
}

fn run_wold(k_max: u32, tol: f64) -> CmdResult {
    let start = Instant::now();
    let mut report = Report::new("wold").param("k_max", k_max);
    let mut table = Table::new(&["k", "image_dim", "complement_dim", "orthogonality", "orthonormality", "completeness"]);
    for k in 1..=k_max {
        let wb = wold_complement(k).map_err(err)?;
        let orth = wb.orthogonality_residual().map_err(err)?;
        let on = wb.orthonormality_residual();
        let comp = wb.completeness_residual();
        let dim = wb.complement_basis.len();
        report.push(Check::exact(format!("complement_dim_k{k:02}"), dim == 1 << (k - 1), dim as f64));
        report.push(Check::within(format!("residuals_k{k:02}"), orth.max(on).max(comp), tol));
        table.push(vec![
            Cell::from(k),
            Cell::from(wb.image_basis.len()),
            Cell::from(dim),
            Cell::from(orth),
            Cell::from(on),
            Cell::from(comp),
        ]);
    }
    Ok(Output { report: report.finish(start), table: Some(table) })
}

#[derive(Deserialize)]
struct IncFnFile {
    x: Vec<u64>,
    y: Vec<u64>,
    range_end: Option<u64>,
}

fn load_f(spec: &str, range: u64) -> Result<IncFn, String> {
    if spec == "f0" {
        return correlation::f0(range).map_err(err);
    }
    let path = spec.strip_prefix("file:").ok_or_else(|| format!("--f must be f0 or file:PATH, got {spec}"))?;
    let text = std::fs::read_to_string(PathBuf::from(path)).map_err(|e| format!("{path}: {e}"))?;
    let file: IncFnFile = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let end = file.range_end.or_else(|| file.x.last().copied()).unwrap_or(0);
    IncFn::new(file.x, file.y, end).map_err(err)
}

fn parse_word(text: &str) -> Result<Vec<WordTerm>, String> {
    let raw: Vec<(u32, u32, f64, f64)> = serde_json::from_str(text).map_err(|e| format!("--word: {e}"))?;
    Ok(raw.into_iter().map(|(i, j, re, im)| WordTerm { i, j, a: Complex64::new(re, im) }).collect())
}

fn run_correlate(lambda: Complex64, k_max: u32, f: &str, range: u64, word: &str, tol: f64) -> CmdResult {
    let start = Instant::now();
    let func = load_f(f, range)?;
    let terms = parse_word(word)?;
    let phi = phi_functional(&func, &terms, lambda, k_max).map_err(err)?;
    let mut report = Report::new("correlate").param("lambda", lambda).param("k_max", k_max).param("f", f).param("word", word);
    if f == "f0" {
        report.push(Check::within("phi_within_truncation_bound", phi.value.norm(), phi.truncation_bound + tol));
    } else {
        report.push(Check::info("phi_abs", phi.value.norm()));
    }
    report.push(Check::info("truncation_bound", phi.truncation_bound));
    let mut table = Table::new(&["term", "re", "im"]);
    for (name, z) in [("phi", phi.value), ("collatz", phi.collatz_term), ("ideal", phi.ideal_term)] {
        table.push(vec![Cell::from(name), Cell::from(z.re), Cell::from(z.im)]);
    }
    Ok(Output { report: report.finish(start), table: Some(table) })
}

struct VerifyArgs {
    k: Option<u32>,
    k_max: Option<u32>,
    n_max: Option<u64>,
    search_bound: Option<u64>,
}

fn run_verify(target: &str, args: VerifyArgs, opts: &VerifyOptions) -> CmdResult {
    let VerifyArgs { k, k_max, n_max, search_bound } = args;
    let report = match target {
        "all" => verify::all(opts),
        "core_map" => verify::core_map(n_max.unwrap_or(4096), k_max.unwrap_or(24)),
        "parity" => verify::parity(k.unwrap_or(14)),
        "koopman" => {
            let levels = u32::try_from(n_max.unwrap_or(25)).map_err(err)?;
            verify::koopman(opts, levels, search_bound.unwrap_or(100_000))
        }
        "averaging" => verify::averaging(n_max.unwrap_or(200), 10_000),
        "spectrum" => verify::spectrum(opts, k.unwrap_or(12)),
        "isometry" => verify::isometry(opts, k_max.unwrap_or(10)),
        "correlation" => verify::correlation(opts, k.unwrap_or(14), Complex64::new(0.5, 0.0), k_max.unwrap_or(9)),
        other => {
            return Err(format!("unknown module {other}; expected one of {} or all", verify::MODULES.join(", ")))
        }
    };
    Ok(Output { report, table: None })
}

fn run(cli: &Cli) -> CmdResult {
    let opts = VerifyOptions { tol: cli.tol, seed: cli.seed };
    let tol = |default: f64| cli.tol.unwrap_or(default);
    match &cli.command {
        Command::Trajectory { n, cap } => run_trajectory(n, *cap),
        Command::Parity { k, numerator } => run_parity(*k, *numerator),
        Command::OperatorNorm { truncation, max_power } => run_operator_norm(*truncation, *max_power, tol(1e-8)),
        Command::Spectral { n_max, search_bound, p } => run_spectral(*n_max, *search_bound, *p),
        Command::Average { n, k, mode } => run_average(*n, *k, *mode),
        Command::Spectrum { k, n_max } => run_spectrum(*k, *n_max, tol(1e-10), tol(1e-8)),
        Command::Isometry { k_max } => run_isometry(*k_max, tol(1e-12)),
        Command::Wold { k_max } => run_wold(*k_max, tol(1e-10)),
        Command::Correlate { lambda, k_max, f, range, word } => {
            run_correlate(*lambda, *k_max, f, *range, word, tol(1e-6))
        }
        Command::Verify { target, k, k_max, n_max, search_bound } => {
            let args = VerifyArgs { k: *k, k_max: *k_max, n_max: *n_max, search_bound: *search_bound };
            run_verify(target, args, &opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = emit(&out, cli.format, &mut stdout) {
                eprintln!("error: writing output: {e}");
                return ExitCode::from(2);
            }
            if out.report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
