//! `finsleroid`: evaluate, integrate and check pseudo-Finsleroid backgrounds.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use finsleroid::anglegeo::{angle, angle_closed_form, angle_direct, scalar_product, uar_to_angles};
use finsleroid::check::{run_checks, CheckOptions, TolProfile};
use finsleroid::conformal::{factor_space_angle, pushforward_metric_check, zeta_inverse, zeta_map};
use finsleroid::dual::{covector_stack, hamiltonian, hamiltonian_numeric};
use finsleroid::kinematics::{classify, SectorTag};
use finsleroid::metric::{covariant_momentum, metric_function, MetricBundle};
use finsleroid::spray::{geodesic_integrate, write_csv, Method};
use finsleroid::{parse_config, BackgroundField, BackgroundSample, Error};

#[derive(Parser)]
#[command(name = "finsleroid", version, about = "Pseudo-Finsleroid metric engine")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Metric function, sector and tensor summary at one (x, y).
    Eval(EvalArgs),
    /// Integrate a geodesic and write the trajectory as CSV.
    Geodesic(GeodesicArgs),
    /// Run the randomized identity suite.
    Check(CheckArgs),
    /// Angle between two vectors by every available route.
    Angle(AngleArgs),
    /// Hamiltonian of a covector.
    Hamiltonian(HamiltonianArgs),
    /// Conformal image of a vector and its checks.
    Conformal(PointVector),
}

#[derive(Args)]
struct PointVector {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long, allow_hyphen_values = true)]
    vector: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Records,
    Csv,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    at: PointVector,
    #[arg(long, value_enum, default_value = "records")]
    format: Format,
}

#[derive(Args)]
struct GeodesicArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    #[arg(long, allow_hyphen_values = true)]
    velocity: String,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    /// Fixed step for rk4, initial step for rk45.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value = "rk4")]
    method: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "default")]
    tol_profile: String,
}

#[derive(Args)]
struct AngleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long, allow_hyphen_values = true)]
    y1: String,
    #[arg(long, allow_hyphen_values = true)]
    y2: String,
}

#[derive(Args)]
struct HamiltonianArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    /// Covector `y_i`; use `--vector` instead to take `y_i(y)`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "vector", required_unless_present = "vector")]
    covector: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    vector: Option<String>,
}

/// Failure with its exit code.
struct Fail {
    code: u8,
    msg: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail { code: exit_code(&e), msg: e.to_string() }
    }
}

fn input(msg: impl Into<String>) -> Fail {
    Fail { code: 2, msg: msg.into() }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DomainError(_) | Error::NoConvergence(_) | Error::SectorExit(_) | Error::StepUnderflow(_) => 3,
        _ => 2,
    }
}

type Out = Result<u8, Fail>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let res = match cli.cmd {
        Cmd::Eval(a) => cmd_eval(&a, &mut out),
        Cmd::Geodesic(a) => cmd_geodesic(&a, &mut out),
        Cmd::Check(a) => cmd_check(&a, &mut out),
        Cmd::Angle(a) => cmd_angle(&a, &mut out),
        Cmd::Hamiltonian(a) => cmd_hamiltonian(&a, &mut out),
        Cmd::Conformal(a) => cmd_conformal(&a, &mut out),
    };
    let _ = io::stdout().write_all(out.as_bytes());
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<BackgroundField, Fail> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn parse_list(what: &str, s: &str, n: usize) -> Result<Vec<f64>, Fail> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| input(format!("--{what}: cannot parse `{}` as a number", t.trim()))))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(input(format!("--{what}: expected {n} components, got {}", v.len())));
    }
    Ok(v)
}

fn rec(out: &mut String, key: &str, v: f64) {
    let _ = writeln!(out, "{key} = {v:.16e}");
}

fn rec_vec(out: &mut String, key: &str, v: &[f64]) {
    let s: Vec<String> = v.iter().map(|a| format!("{a:.16e}")).collect();
    let _ = writeln!(out, "{key} = {}", s.join(","));
}

fn rec_str(out: &mut String, key: &str, v: &str) {
    let _ = writeln!(out, "{key} = {v}");
}

/// Samples the background at `--point` and reads one vector.
fn state(field: &BackgroundField, point: &str, what: &str, vector: &str) -> Result<(BackgroundSample, DVector<f64>), Fail> {
    let n = field.dim();
    let x = parse_list("point", point, n)?;
    let y = DVector::from_vec(parse_list(what, vector, n)?);
    Ok((field.sample(&x)?, y))
}

/// Prints the sector and fails with exit 2 outside the supported sectors.
fn sector_line(out: &mut String, s: &BackgroundSample, y: &DVector<f64>) -> Result<SectorTag, Fail> {
    let tag = classify(s, y).tag;
    rec_str(out, "sector", tag.label());
    if tag == SectorTag::Unsupported {
        return Err(Error::UnsupportedSector.into());
    }
    Ok(tag)
}

fn cmd_eval(a: &EvalArgs, out: &mut String) -> Out {
    let field = load(&a.at.config)?;
    let (s, y) = state(&field, &a.at.point, "vector", &a.at.vector)?;
    let mut head = String::new();
    let tag = sector_line(&mut head, &s, &y);
    if matches!(a.format, Format::Records) || tag.is_err() {
        out.push_str(&head);
    }
    tag?;
    // F^2 and y_i survive on the b axis; the tensors need q > 0
    let f2 = metric_function(&s, &y)?;
    let y_cov = covariant_momentum(&s, &y)?;
    let mut fields: Vec<(&str, Vec<f64>)> = vec![
        ("F2", vec![f2]),
        ("y_cov", y_cov.iter().copied().collect()),
        ("frame_R", (&s.frame * &y).iter().copied().collect()),
        ("frame_R_cov", (s.frame_inv.transpose() * &y_cov).iter().copied().collect()),
    ];
    let bundle = MetricBundle::new(&s, &y);
    let tensors = match &bundle {
        Ok(m) => {
            let curv = m.indicatrix_curvature();
            [m.det_ratio, curv.scalar, curv.spread, m.cc, m.f2 * m.cc]
        }
        Err(Error::DegenerateQ | Error::DegenerateNu) => [f64::NAN; 5],
        Err(e) => return Err(e.clone().into()),
    };
    for (k, v) in ["det_ratio", "curvature", "curvature_spread", "cartan_cc", "F2_cartan_cc"].into_iter().zip(tensors) {
        fields.push((k, vec![v]));
    }
    if let (Err(e), Format::Records) = (&bundle, a.format) {
        rec_str(out, "note", &format!("tensor quantities undefined: {e}"));
    }
    match a.format {
        Format::Records => {
            for (k, v) in &fields {
                if v.len() == 1 {
                    rec(out, k, v[0]);
                } else {
                    rec_vec(out, k, v);
                }
            }
        }
        Format::Csv => {
            let mut header = vec!["sector".to_string()];
            let mut row = vec![classify(&s, &y).tag.label().to_string()];
            for (k, v) in &fields {
                if v.len() == 1 {
                    header.push(k.to_string());
                } else {
                    header.extend((0..v.len()).map(|i| format!("{k}{i}")));
                }
                row.extend(v.iter().map(|x| format!("{x:.16e}")));
            }
            let _ = writeln!(out, "{}", header.join(","));
            let _ = writeln!(out, "{}", row.join(","));
        }
    }
    Ok(0)
}

fn cmd_geodesic(a: &GeodesicArgs, out: &mut String) -> Out {
    let field = load(&a.config)?;
    let n = field.dim();
    let x0 = parse_list("start", &a.start, n)?;
    let v0 = parse_list("velocity", &a.velocity, n)?;
    let method: Method = a.method.parse()?;
    let traj = geodesic_integrate(&field, &x0, &v0, a.length, a.step, method)?;
    let file = fs::File::create(&a.out).map_err(|e| input(format!("cannot create {}: {e}", a.out.display())))?;
    let mut w = io::BufWriter::new(file);
    write_csv(&traj, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Fail { code: 3, msg: format!("writing {}: {e}", a.out.display()) })?;
    let last = traj.last();
    rec_str(out, "method", &a.method);
    rec_str(out, "out", &a.out.display().to_string());
    rec_str(out, "samples", &traj.samples.len().to_string());
    rec(out, "s_end", last.s);
    rec_vec(out, "x_end", &last.x);
    rec_vec(out, "v_end", &last.v);
    rec(out, "F2_start", traj.samples[0].f2);
    rec(out, "F2_drift", traj.f2_drift);
    match traj.exit {
        None => {
            rec_str(out, "status", "complete");
            Ok(0)
        }
        Some(e) => {
            rec_str(out, "status", "truncated");
            Err(Fail { code: 3, msg: e.to_string() })
        }
    }
}

fn threads() -> Result<usize, Fail> {
    match std::env::var("FINSLEROID_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(input(format!("FINSLEROID_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn cmd_check(a: &CheckArgs, out: &mut String) -> Out {
    let field = load(&a.config)?;
    let profile: TolProfile = a.tol_profile.parse().map_err(input)?;
    if a.samples == 0 {
        return Err(input("--samples must be positive"));
    }
    let opts = CheckOptions { samples: a.samples, seed: a.seed, profile, threads: threads()? };
    let report = run_checks(&field, &a.config.display().to_string(), &opts)?;
    out.push_str(&report.to_string());
    eprintln!("wall_time = {:.3} s", report.wall_time.as_secs_f64());
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_angle(a: &AngleArgs, out: &mut String) -> Out {
    let field = load(&a.config)?;
    let (s, y1) = state(&field, &a.point, "y1", &a.y1)?;
    let y2 = DVector::from_vec(parse_list("y2", &a.y2, field.dim())?);
    sector_line(out, &s, &y1)?;
    let al = angle(&s, &y1, &y2)?;
    rec(out, "angle", al);
    rec(out, "angle_direct", angle_direct(&s, &y1, &y2)?);
    if s.dim() == 4 {
        let (z1, t1) = uar_to_angles(&s, &(&s.frame * &y1))?;
        let (z2, _) = uar_to_angles(&s, &(&s.frame * &y2))?;
        rec(out, "angle_chart", angle_closed_form(&z1, &z2, t1, s.g)?);
        rec_vec(out, "chart_1", &z1.as_array());
        rec_vec(out, "chart_2", &z2.as_array());
    }
    rec(out, "angle_factor", factor_space_angle(&s, &y1, &y2)?);
    rec(out, "scalar_product", scalar_product(&s, &y1, &y2)?);
    Ok(0)
}

fn cmd_hamiltonian(a: &HamiltonianArgs, out: &mut String) -> Out {
    let field = load(&a.config)?;
    let n = field.dim();
    let s = field.sample(&parse_list("point", &a.point, n)?)?;
    let y_cov = match (&a.covector, &a.vector) {
        (Some(c), _) => DVector::from_vec(parse_list("covector", c, n)?),
        (None, Some(v)) => {
            let y = DVector::from_vec(parse_list("vector", v, n)?);
            sector_line(out, &s, &y)?;
            let m = MetricBundle::new(&s, &y)?;
            rec(out, "F2", m.f2);
            m.y_cov
        }
        (None, None) => return Err(input("one of --covector or --vector is required")),
    };
    rec_vec(out, "covector", y_cov.as_slice());
    let sector = |eps: f64| if eps > 0.0 { "time-future" } else { "space-like" };
    if s.is_unit() {
        let st = covector_stack(&s, &y_cov)?;
        rec_str(out, "preimage_sector", sector(st.eps));
        rec(out, "b_hat", st.b_hat);
        rec(out, "q_hat", st.q_hat);
        rec_str(out, "method", "closed");
        rec(out, "H2", hamiltonian(&s, &y_cov)?);
    } else {
        let b_hat = y_cov.dot(&s.b_contra);
        let gamma_hat = (&s.a_inv * &y_cov).dot(&y_cov) + b_hat * b_hat;
        rec(out, "b_hat", b_hat);
        rec(out, "gamma_hat", gamma_hat);
        let r = hamiltonian_numeric(&s, &y_cov)?;
        rec_str(out, "preimage_sector", sector(r.eps));
        rec_str(out, "method", "newton");
        rec(out, "H2", r.h2);
        rec(out, "b", r.b);
        rec(out, "q", r.q);
        rec_str(out, "iterations", &r.iterations.to_string());
        rec(out, "residual", r.residual);
    }
    Ok(0)
}

fn cmd_conformal(a: &PointVector, out: &mut String) -> Out {
    let field = load(&a.config)?;
    let (s, y) = state(&field, &a.point, "vector", &a.vector)?;
    sector_line(out, &s, &y)?;
    let im = zeta_map(&s, &y)?;
    rec_vec(out, "zeta", im.zeta.as_slice());
    rec(out, "kappa", im.kappa);
    rec(out, "S2", im.s2);
    rec(out, "F2", im.f2);
    let h = (1.0 + im.eps * s.g * s.g / 4.0).sqrt();
    rec(out, "F2_abs_pow_h", im.f2.abs().powf(h));
    let p = pushforward_metric_check(&s, &y)?;
    rec(out, "pushforward_residual", p.residual);
    rec(out, "jacobian_det", p.det);
    rec(out, "jacobian_det_expected", p.det_expected);
    let back = zeta_inverse(&s, &im.zeta)?;
    rec_vec(out, "inverse", back.as_slice());
    rec(out, "round_trip", (back - &y).amax());
    Ok(0)
}
