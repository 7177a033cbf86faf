//! Command-line front end for `banklaine-core`.
//!
//! Every subcommand prints a JSON document on stdout and a short table on
//! stderr (silenced by `--quiet`). `--out FILE` writes plot data as CSV,
//! with complex columns split into `.re` and `.im`.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or input error,
//! 3 numerical failure.

pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};

use banklaine_core::asymptotics::{
    picard_ray_solution, tail_integral, trace_decay_path_with, verify_decay_with, DecayOptions, TraceOptions,
};
use banklaine_core::banklaine::{coefficient_from_scaled, schwarzian, verify_bank_laine, MIN_SAMPLE_MODULUS};
use banklaine_core::contour::PathSpec;
use banklaine_core::expr::parse_complex;
use banklaine_core::gallery;
use banklaine_core::json;
use banklaine_core::nevanlinna::{default_radii, nevanlinna_profile, CircleQuadrature, NevanProfile, OdeProduct, Target};
use banklaine_core::{Analytic, Complex64, Error, Expr};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::Config;

type C = Complex64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "banklaine", version, about = "Bank-Laine functions and y'' + A y = 0 in the complex plane")]
struct Cli {
    /// TOML configuration; overrides $BANKLAINE_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write plot data as CSV.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the stderr table.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct PointsArg {
    /// File with one point per line (`1+2i` or `1, 2`); `#` starts a comment.
    #[arg(long, allow_hyphen_values = true)]
    points: Option<PathBuf>,
    /// Rectangular grid `XMIN:XMAX:NX,YMIN:YMAX:NY`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Locate zeros of E in a disc and check E' = ±1 at each.
    CheckBl {
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        center: String,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        radius: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        tol: Option<f64>,
    },
    /// A = ((E')^2 - 2EE'' - 1)/(4E^2) at sample points.
    ExtractA {
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        #[command(flatten)]
        points: PointsArg,
        /// Compare with this coefficient; fails above the Bank-Laine tolerance.
        #[arg(long, allow_hyphen_values = true)]
        against: Option<String>,
    },
    /// The Schwarzian derivative of U at sample points.
    Schwarzian {
        #[arg(long, allow_hyphen_values = true)]
        expr: String,
        #[command(flatten)]
        points: PointsArg,
    },
    /// Follow a curve on which Im Z is constant.
    Trace {
        #[arg(long, allow_hyphen_values = true)]
        coeff: String,
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        length: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        stop_modulus: Option<f64>,
    },
    /// Check that solutions decay along a path.
    Decay {
        #[arg(long, allow_hyphen_values = true)]
        coeff: String,
        /// JSON path description; otherwise a path is traced from --start.
        #[arg(long, allow_hyphen_values = true)]
        path: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true, default_value = "1")]
        start: String,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        length: Option<f64>,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        stop_modulus: Option<f64>,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        tol: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        seed: Option<u64>,
    },
    /// Nevanlinna functions on radii up to rmax.
    Nevan {
        #[arg(long, allow_hyphen_values = true, required_unless_present = "ode_coeff", conflicts_with = "ode_coeff")]
        expr: Option<String>,
        /// Use E = f1 f2 built from y'' + A y = 0 with this A.
        #[arg(long, allow_hyphen_values = true)]
        ode_coeff: Option<String>,
        /// A complex value or `inf`.
        #[arg(long, allow_hyphen_values = true, default_value = "0")]
        target: String,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        rmax: f64,
        #[arg(long, allow_hyphen_values = true)]
        nodes: Option<usize>,
    },
    /// Solution with u ~ 1 along a ray by Picard iteration.
    Picard {
        #[arg(long, allow_hyphen_values = true)]
        coeff: String,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        xmin: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        xmax: f64,
        #[arg(long, allow_hyphen_values = true)]
        points: Option<usize>,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        tol: Option<f64>,
    },
    /// ∫ r |A(r e^{iθ})| dr between two radii.
    Tail {
        #[arg(long, allow_hyphen_values = true)]
        coeff: String,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        from: f64,
        #[arg(long, allow_hyphen_values = true, value_parser = real)]
        to: f64,
    },
    /// Worked examples.
    Gallery {
        #[command(subcommand)]
        action: GalleryAction,
    },
}

#[derive(Subcommand, Debug)]
enum GalleryAction {
    List,
    /// Verify one entry, or all of them.
    Verify { name: Option<String> },
}

/// Accepts grammar constants such as `pi/3` as long as they are real.
fn real(s: &str) -> Result<f64, String> {
    let z = parse_complex(s).map_err(|e| e.to_string())?;
    if z.im != 0.0 || !z.re.is_finite() {
        return Err(format!("`{s}` is not a finite real number"));
    }
    Ok(z.re)
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::InvalidInput(_)
            | Error::UnknownEntry(_)
            | Error::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

struct Outcome {
    json: Value,
    passed: bool,
    table: String,
    csv: Option<Vec<u8>>,
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let config = match Config::resolve(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, &config)),
            Err(e) => Err(Failure::Usage(format!("cannot start {n} workers: {e}"))),
        },
        None => dispatch(&cli.command, &config),
    };
    match result {
        Ok(outcome) => {
            if let (Some(path), Some(csv)) = (&cli.out, &outcome.csv) {
                if let Err(e) = std::fs::write(path, csv) {
                    let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            }
            let text = serde_json::to_string_pretty(&outcome.json).expect("JSON values serialize");
            let _ = writeln!(stdout, "{text}");
            if !cli.quiet {
                let _ = write!(stderr, "{}", outcome.table);
            }
            if outcome.passed {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(Failure::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Numerical(m)) => {
            let _ = writeln!(stderr, "numerical failure: {m}");
            EXIT_NUMERICAL
        }
    }
}

fn dispatch(cmd: &Command, cfg: &Config) -> Result<Outcome, Failure> {
    match cmd {
        Command::CheckBl { expr, center, radius, tol } => check_bl(expr, center, *radius, tol.unwrap_or(cfg.tolerances.bank_laine)),
        Command::ExtractA { expr, points, against } => extract_a(expr, points, against.as_deref(), cfg),
        Command::Schwarzian { expr, points } => schwarzian_cmd(expr, points),
        Command::Trace { coeff, start, length, stop_modulus } => trace(coeff, start, *length, *stop_modulus, cfg),
        Command::Decay { coeff, path, start, length, stop_modulus, tol, seed } => {
            decay(coeff, path.as_deref(), start, *length, *stop_modulus, *tol, *seed, cfg)
        }
        Command::Nevan { expr, ode_coeff, target, rmax, nodes } => nevan(expr.as_deref(), ode_coeff.as_deref(), target, *rmax, *nodes, cfg),
        Command::Picard { coeff, theta, xmin, xmax, points, tol } => picard(coeff, *theta, *xmin, *xmax, *points, *tol, cfg),
        Command::Tail { coeff, theta, from, to } => tail(coeff, *theta, *from, *to),
        Command::Gallery { action: GalleryAction::List } => gallery_list(),
        Command::Gallery { action: GalleryAction::Verify { name } } => gallery_verify(name.as_deref()),
    }
}

fn parse_expr(s: &str) -> Result<Expr, Failure> {
    Ok(Expr::parse(s)?)
}

fn parse_point(s: &str) -> Result<C, Failure> {
    Ok(parse_complex(s)?)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string())).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Parses `XMIN:XMAX:NX,YMIN:YMAX:NY`; points run along x first.
pub fn parse_grid(spec: &str) -> Result<Vec<C>, String> {
    let axes: Vec<&str> = spec.split(',').collect();
    if axes.len() != 2 {
        return Err(format!("grid `{spec}` needs two axes separated by a comma"));
    }
    let axis = |a: &str| -> Result<Vec<f64>, String> {
        let parts: Vec<&str> = a.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("axis `{a}` must read MIN:MAX:N"));
        }
        let (lo, hi) = (real(parts[0])?, real(parts[1])?);
        let n: usize = parts[2].parse().map_err(|_| format!("bad count `{}`", parts[2]))?;
        match n {
            0 => Err("grid counts must be positive".into()),
            1 => Ok(vec![lo]),
            _ => Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()),
        }
    };
    let (xs, ys) = (axis(axes[0])?, axis(axes[1])?);
    Ok(ys.iter().flat_map(|&y| xs.iter().map(move |&x| C::new(x, y))).collect())
}

/// One point per line: a grammar constant or `re, im`.
pub fn parse_points_file(text: &str) -> Result<Vec<C>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let z = match line.split_once(',') {
            Some((re, im)) => C::new(real(re.trim())?, real(im.trim())?),
            None => parse_complex(line).map_err(|e| format!("line {}: {e}", i + 1))?,
        };
        out.push(z);
    }
    Ok(out)
}

fn sample_points(arg: &PointsArg) -> Result<Vec<C>, Failure> {
    match (&arg.points, &arg.grid) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            parse_points_file(&text).map_err(Failure::Usage)
        }
        (None, Some(g)) => parse_grid(g).map_err(Failure::Usage),
        (None, None) => Err(Failure::Usage("give --points or --grid".into())),
    }
}

fn check_bl(expr: &str, center: &str, radius: f64, tol: f64) -> Result<Outcome, Failure> {
    let e = parse_expr(expr)?;
    let center = parse_point(center)?;
    let report = verify_bank_laine(&e, center, radius, tol)?;
    let mut table = format!("{:>28} {:>5} {:>28} {:>5}\n", "zero", "mult", "E'", "sign");
    for ((z, d), s) in report.zeros.iter().zip(&report.derivatives).zip(&report.signs) {
        table += &format!("{:>28} {:>5} {:>28} {:>5}\n", format!("{:.12}", z.location), z.multiplicity, format!("{d:.12}"), s);
    }
    table += &format!("Bank-Laine: {}  special: {}\n", report.is_bank_laine, report.is_special);
    for r in &report.reasons {
        table += &format!("  {r}\n");
    }
    let csv = csv_bytes(
        &["zero.re", "zero.im", "multiplicity", "derivative.re", "derivative.im", "sign"],
        report.zeros.iter().zip(&report.derivatives).zip(&report.signs).map(|((z, d), s)| {
            vec![z.location.re, z.location.im, z.multiplicity as f64, d.re, d.im, *s as f64]
        }),
    );
    Ok(Outcome {
        json: json!({ "command": "check-bl", "expr": expr, "center": json::value(center), "radius": radius, "report": report }),
        passed: report.is_bank_laine,
        table,
        csv: Some(csv),
    })
}

fn extract_a(expr: &str, points: &PointsArg, against: Option<&str>, cfg: &Config) -> Result<Outcome, Failure> {
    let e = parse_expr(expr)?;
    let reference = against.map(parse_expr).transpose()?;
    let pts = sample_points(points)?;
    let mut rows = Vec::with_capacity(pts.len());
    let mut csv_rows = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut table = format!("{:>28} {:>36}\n", "z", "A");
    for z in pts {
        let j = e.scaled_jet(z, 2)?;
        let modulus = j.ln_abs().exp();
        if modulus < MIN_SAMPLE_MODULUS {
            rows.push(json!({ "z": json::value(z), "A": Value::Null, "skipped": format!("|E| = {modulus:e} below {MIN_SAMPLE_MODULUS:e}") }));
            continue;
        }
        let a = coefficient_from_scaled(&j)?;
        let mut row = json!({ "z": json::value(z), "A": json::value(a), "E_modulus": modulus });
        if let Some(r) = &reference {
            let want = r.value(z)?;
            let res = (a - want).norm() / want.norm().max(1.0);
            max_residual = max_residual.max(res);
            row["residual"] = json!(res);
        }
        table += &format!("{:>28} {:>36}\n", format!("{z:.10}"), format!("{a:.14}"));
        csv_rows.push(vec![z.re, z.im, a.re, a.im]);
        rows.push(row);
    }
    let tol = cfg.tolerances.bank_laine;
    let passed = reference.is_none() || max_residual <= tol;
    let mut out = json!({ "command": "extract-a", "expr": expr, "points": rows });
    if let Some(s) = against {
        out["against"] = json!(s);
        out["max_residual"] = json!(max_residual);
        out["tolerance"] = json!(tol);
        out["passed"] = json!(passed);
        table += &format!("max residual against {s}: {max_residual:e} (tolerance {tol:e})\n");
    }
    Ok(Outcome { json: out, passed, table, csv: Some(csv_bytes(&["z.re", "z.im", "A.re", "A.im"], csv_rows)) })
}

fn schwarzian_cmd(expr: &str, points: &PointsArg) -> Result<Outcome, Failure> {
    let u = parse_expr(expr)?;
    let pts = sample_points(points)?;
    let mut rows = Vec::with_capacity(pts.len());
    let mut csv_rows = Vec::new();
    let mut table = format!("{:>28} {:>36}\n", "z", "S");
    for z in pts {
        match u.jet(z, 3).and_then(|j| schwarzian(&j)) {
            Ok(s) => {
                rows.push(json!({ "z": json::value(z), "S": json::value(s), "half_S": json::value(s / 2.0) }));
                table += &format!("{:>28} {:>36}\n", format!("{z:.10}"), format!("{s:.14}"));
                csv_rows.push(vec![z.re, z.im, s.re, s.im]);
            }
            Err(e @ (Error::Singular(_) | Error::Domain { .. })) => {
                rows.push(json!({ "z": json::value(z), "S": Value::Null, "skipped": e.to_string() }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome {
        json: json!({ "command": "schwarzian", "expr": expr, "points": rows }),
        passed: true,
        table,
        csv: Some(csv_bytes(&["z.re", "z.im", "S.re", "S.im"], csv_rows)),
    })
}

fn path_points(p: &PathSpec) -> Vec<C> {
    match p {
        PathSpec::Polyline { points } | PathSpec::Sampled { points } => points.clone(),
        other => vec![other.start().unwrap_or_default(), other.end().unwrap_or_default()],
    }
}

fn trace(coeff: &str, start: &str, length: f64, stop_modulus: Option<f64>, cfg: &Config) -> Result<Outcome, Failure> {
    let a = parse_expr(coeff)?;
    let start = parse_point(start)?;
    let opts = TraceOptions { tol: cfg.tolerances.ode, max_step: cfg.grids.trace_max_step, stop_modulus };
    let t = trace_decay_path_with(&a, start, length, &opts)?;
    let pts = path_points(&t.path);
    let end = *pts.last().unwrap_or(&start);
    let mut table = format!("traced {:.6} of {length} from {start} to {end:.8}\n", t.length);
    if let Some(why) = &t.aborted {
        table += &format!("stopped early: {why}\n");
    }
    let csv = csv_bytes(
        &["s", "z.re", "z.im", "Z.re", "Z.im"],
        t.s.iter().zip(&pts).zip(&t.z_map).map(|((s, z), w)| vec![*s, z.re, z.im, w.re, w.im]),
    );
    Ok(Outcome {
        json: json!({ "command": "trace", "coeff": coeff, "start": json::value(start), "requested_length": length, "trace": t }),
        passed: true,
        table,
        csv: Some(csv),
    })
}

#[allow(clippy::too_many_arguments)]
fn decay(
    coeff: &str,
    path: Option<&Path>,
    start: &str,
    length: Option<f64>,
    stop_modulus: Option<f64>,
    tol: Option<f64>,
    seed: Option<u64>,
    cfg: &Config,
) -> Result<Outcome, Failure> {
    let a = parse_expr(coeff)?;
    let tol = tol.unwrap_or(cfg.tolerances.ode);
    let (spec, trace_note) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            let spec: PathSpec = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad path file: {e}")))?;
            (spec, None)
        }
        None => {
            let start = parse_point(start)?;
            let opts = TraceOptions { tol, max_step: cfg.grids.trace_max_step, stop_modulus };
            let t = trace_decay_path_with(&a, start, length.unwrap_or(cfg.grids.decay_length), &opts)?;
            (t.path, t.aborted)
        }
    };
    let d = &cfg.decay;
    let opts = DecayOptions {
        n_ic: d.n_ic,
        tol,
        seed: seed.unwrap_or(d.seed),
        burn_in: d.burn_in,
        slack: d.slack,
        liouville_threshold: d.liouville_threshold,
        ..Default::default()
    };
    let report = verify_decay_with(&a, &spec, &opts)?;
    let table = format!(
        "model {:?}  fitted rate {:.6}  predicted {:.6}  verdict {}\nbasis sufficiency {:.4}  Wronskian drift {:.3e}  method {:?}\n",
        report.model, report.fitted_rate, report.predicted_rate, report.verdict, report.basis_sufficiency, report.wronskian_drift, report.method
    );
    let csv = csv_bytes(&["s", "z.re", "z.im", "envelope"], report.samples.iter().map(|p| vec![p.s, p.z.re, p.z.im, p.envelope]));
    let mut out = json!({ "command": "decay", "coeff": coeff, "report": report });
    if let Some(why) = trace_note {
        out["trace_stopped"] = json!(why);
    }
    Ok(Outcome { json: out, passed: report.verdict, table, csv: Some(csv) })
}

fn profile_table(p: &NevanProfile) -> String {
    let mut t = format!("{:>12} {:>16} {:>16} {:>16}\n", "r", "m", "N", "T");
    for i in 0..p.radii.len() {
        t += &format!("{:>12.4} {:>16.8} {:>16.8} {:>16.8}\n", p.radii[i], p.m_values[i], p.big_n_values[i], p.t_values[i]);
    }
    let show = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.5}"));
    t += &format!("order {}  lambda {}  delta {:.5}  ({})\n", show(p.fitted_order), show(p.fitted_lambda), p.delta_estimate, p.note);
    t
}

fn nevan(expr: Option<&str>, ode_coeff: Option<&str>, target: &str, rmax: f64, nodes: Option<usize>, cfg: &Config) -> Result<Outcome, Failure> {
    let target = Target::parse(target)?;
    let radii = default_radii(rmax);
    let n = &cfg.nevanlinna;
    let quad = CircleQuadrature { nodes: nodes.unwrap_or(n.nodes), max_nodes: n.max_nodes, tol: n.tol };
    let (profile, drift, source) = match (expr, ode_coeff) {
        (Some(s), _) => (nevanlinna_profile(&parse_expr(s)?, target, &radii, &quad)?, None, json!({ "expr": s })),
        (None, Some(s)) => {
            let f = OdeProduct::with_tol(parse_expr(s)?, cfg.tolerances.ode.min(1e-11));
            let p = nevanlinna_profile(&f, target, &radii, &quad)?;
            (p, Some(f.max_wronskian_drift()), json!({ "ode_coeff": s }))
        }
        (None, None) => return Err(Failure::Usage("give --expr or --ode-coeff".into())),
    };
    let mut csv = Vec::new();
    profile.write_csv(&mut csv)?;
    let mut table = profile_table(&profile);
    let mut out = json!({ "command": "nevan", "source": source, "profile": profile, "min_log_convexity": profile.min_log_convexity() });
    if let Some(d) = drift {
        out["wronskian_drift"] = json!(d);
        table += &format!("scaled Wronskian drift {d:.3e}\n");
    }
    Ok(Outcome { json: out, passed: true, table, csv: Some(csv) })
}

#[allow(clippy::too_many_arguments)]
fn picard(coeff: &str, theta: f64, xmin: f64, xmax: f64, points: Option<usize>, tol: Option<f64>, cfg: &Config) -> Result<Outcome, Failure> {
    let a = parse_expr(coeff)?;
    let n = points.unwrap_or(cfg.grids.picard_points);
    if n < 2 || !(xmax > xmin) {
        return Err(Failure::Usage("need xmax > xmin and at least 2 points".into()));
    }
    let grid: Vec<f64> = (0..n).map(|k| xmin + (xmax - xmin) * k as f64 / (n - 1) as f64).collect();
    let s = picard_ray_solution(&a, theta, xmin, &grid, tol.unwrap_or(cfg.tolerances.picard))?;
    let table = format!(
        "iterations {}  contraction bound {:.6}  observed ratio {:.4}  residual {:.3e}\nu({xmax}) = {:.12}  v({xmax})/{xmax} = {:.8}\n",
        s.iterations,
        s.contraction_bound,
        s.observed_ratio,
        s.residual,
        s.u_values.last().copied().unwrap_or_default(),
        s.v_values.last().copied().unwrap_or_default() / xmax
    );
    let csv = csv_bytes(
        &["x", "u.re", "u.im", "v.re", "v.im"],
        s.x_grid.iter().zip(&s.u_values).zip(&s.v_values).map(|((x, u), v)| vec![*x, u.re, u.im, v.re, v.im]),
    );
    Ok(Outcome { json: json!({ "command": "picard", "coeff": coeff, "solution": s }), passed: true, table, csv: Some(csv) })
}

fn tail(coeff: &str, theta: f64, from: f64, to: f64) -> Result<Outcome, Failure> {
    let a = parse_expr(coeff)?;
    let t = tail_integral(&a, theta, from, to)?;
    Ok(Outcome {
        json: json!({
            "command": "tail", "coeff": coeff, "theta": theta, "from": from, "to": to,
            "value": t.value, "error": t.error, "last_panel": t.last_panel, "below_half": t.value < 0.5,
        }),
        passed: true,
        table: format!("∫ r|A| dr over [{from}, {to}] at θ = {theta}: {:.12} (error {:.2e})\n", t.value, t.error),
        csv: None,
    })
}

fn gallery_list() -> Result<Outcome, Failure> {
    let entries = gallery::entries();
    let mut table = String::new();
    for e in &entries {
        table += &format!("{:<12} {}\n", e.name, e.summary);
    }
    Ok(Outcome { json: json!({ "command": "gallery list", "entries": entries }), passed: true, table, csv: None })
}

fn report_table(r: &gallery::GalleryReport) -> String {
    let mut t = format!("{} [{}]\n", r.name, if r.passed { "PASS" } else { "FAIL" });
    for a in &r.assertions {
        let status = if a.passed { "ok  " } else { "FAIL" };
        let detail = match &a.error {
            Some(e) => format!("error: {e}"),
            None => format!("measured {:e} {}", a.measured, a.bound),
        };
        t += &format!("  {status} {:<26} {}: {detail}\n", a.operation, a.description);
    }
    t
}

fn gallery_verify(name: Option<&str>) -> Result<Outcome, Failure> {
    let reports = match name {
        Some(n) => vec![gallery::verify_example(n)?],
        None => gallery::verify_all(),
    };
    let passed = reports.iter().all(|r| r.passed);
    let table: String = reports.iter().map(report_table).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["entry", "operation", "description", "measured", "bound", "passed"]).expect("in-memory write");
    for r in &reports {
        for a in &r.assertions {
            w.write_record([r.name, a.operation, &a.description, &a.measured.to_string(), &a.bound, &a.passed.to_string()])
                .expect("in-memory write");
        }
    }
    let json = match name {
        Some(_) => json!({ "command": "gallery verify", "passed": passed, "report": reports[0] }),
        None => json!({ "command": "gallery verify", "passed": passed, "reports": reports }),
    };
    Ok(Outcome { json, passed, table, csv: Some(w.into_inner().expect("in-memory flush")) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec() {
        let g = parse_grid("0:1:3,-1:1:2").unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], C::new(0.0, -1.0));
        assert_eq!(g[2], C::new(1.0, -1.0));
        assert_eq!(g[5], C::new(1.0, 1.0));
        assert_eq!(parse_grid("pi:pi:1,0:0:1").unwrap(), vec![C::new(std::f64::consts::PI, 0.0)]);
        assert!(parse_grid("0:1:3").is_err());
        assert!(parse_grid("0:1:0,0:1:1").is_err());
    }

    #[test]
    fn points_file() {
        let p = parse_points_file("# header\n1+2i\n\n3, -4  # comment\npi*i\n").unwrap();
        assert_eq!(p, vec![C::new(1.0, 2.0), C::new(3.0, -4.0), C::new(0.0, std::f64::consts::PI)]);
        assert!(parse_points_file("1+\n").is_err());
    }

    #[test]
    fn reals_reject_complex() {
        assert_eq!(real("pi/2").unwrap(), std::f64::consts::FRAC_PI_2);
        assert!(real("1+i").is_err());
    }

    #[test]
    fn failure_classes() {
        assert!(matches!(Failure::from(Error::invalid("x")), Failure::Usage(_)));
        assert!(matches!(Failure::from(Error::NotConverged { iterations: 1, last_change: 1.0 }), Failure::Numerical(_)));
    }
}
