//! Geodesics `x'' + G(x, x') = 0`, integrated as the first-order system `dx/ds = v`, `dv/ds = -G(x, v)`.

use std::io::{self, Write};

use nalgebra::DVector;

use crate::background::BackgroundField;
use crate::error::{Error, Result};
use crate::metric::metric_function;

use super::spray_coefficients;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Rk45,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "rk45" => Ok(Method::Rk45),
            other => Err(Error::Config(format!("unknown integrator '{other}' (expected rk4 or rk45)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeodesicSample {
    pub s: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub f2: f64,
}

#[derive(Debug, Clone)]
pub struct GeodesicTrajectory {
    pub samples: Vec<GeodesicSample>,
    /// `max |F^2(s) - F^2(0)|`
    pub f2_drift: f64,
    /// Set when integration stopped early; the samples up to that point are kept.
    pub exit: Option<Error>,
}

impl GeodesicTrajectory {
    pub fn last(&self) -> &GeodesicSample {
        self.samples.last().expect("trajectory has an initial sample")
    }
}

const RK45_TOL: f64 = 1e-9;

fn rhs(field: &BackgroundField, state: &[f64], n: usize) -> Result<Vec<f64>> {
    let s = field.sample(&state[..n])?;
    let v = DVector::from_column_slice(&state[n..]);
    let g = spray_coefficients(&s, &v)?.g;
    let mut out = state[n..].to_vec();
    out.extend(g.iter().map(|gi| -gi));
    Ok(out)
}

fn axpy(y: &[f64], h: f64, terms: &[(f64, &[f64])]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += h * c * ki;
        }
    }
    out
}

fn rk4_step(field: &BackgroundField, y: &[f64], h: f64, n: usize) -> Result<Vec<f64>> {
    let k1 = rhs(field, y, n)?;
    let k2 = rhs(field, &axpy(y, h, &[(0.5, &k1)]), n)?;
    let k3 = rhs(field, &axpy(y, h, &[(0.5, &k2)]), n)?;
    let k4 = rhs(field, &axpy(y, h, &[(1.0, &k3)]), n)?;
    Ok(axpy(y, h, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)]))
}

/// One Dormand-Prince step: (5th-order solution, error estimate).
fn dp45_step(field: &BackgroundField, y: &[f64], h: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let k1 = rhs(field, y, n)?;
    let k2 = rhs(field, &axpy(y, h, &[(1.0 / 5.0, &k1)]), n)?;
    let k3 = rhs(field, &axpy(y, h, &[(3.0 / 40.0, &k1), (9.0 / 40.0, &k2)]), n)?;
    let k4 = rhs(field, &axpy(y, h, &[(44.0 / 45.0, &k1), (-56.0 / 15.0, &k2), (32.0 / 9.0, &k3)]), n)?;
    let k5 = rhs(
        field,
        &axpy(
            y,
            h,
            &[(19372.0 / 6561.0, &k1), (-25360.0 / 2187.0, &k2), (64448.0 / 6561.0, &k3), (-212.0 / 729.0, &k4)],
        ),
        n,
    )?;
    let k6 = rhs(
        field,
        &axpy(
            y,
            h,
            &[
                (9017.0 / 3168.0, &k1),
                (-355.0 / 33.0, &k2),
                (46732.0 / 5247.0, &k3),
                (49.0 / 176.0, &k4),
                (-5103.0 / 18656.0, &k5),
            ],
        ),
        n,
    )?;
    let y5 = axpy(
        y,
        h,
        &[
            (35.0 / 384.0, &k1),
            (500.0 / 1113.0, &k3),
            (125.0 / 192.0, &k4),
            (-2187.0 / 6784.0, &k5),
            (11.0 / 84.0, &k6),
        ],
    );
    let k7 = rhs(field, &y5, n)?;
    let err: Vec<f64> = (0..y.len())
        .map(|i| {
            h * ((35.0 / 384.0 - 5179.0 / 57600.0) * k1[i]
                + (500.0 / 1113.0 - 7571.0 / 16695.0) * k3[i]
                + (125.0 / 192.0 - 393.0 / 640.0) * k4[i]
                + (-2187.0 / 6784.0 + 92097.0 / 339200.0) * k5[i]
                + (11.0 / 84.0 - 187.0 / 2100.0) * k6[i]
                - (1.0 / 40.0) * k7[i])
        })
        .collect();
    Ok((y5, err))
}

fn exit_reason(e: Error, s: f64) -> Result<Error> {
    match e {
        Error::UnsupportedSector
        | Error::DegenerateQ
        | Error::DegenerateNu
        | Error::ChargeRange(_)
        | Error::Signature(_)
        | Error::CRange { .. }
        | Error::Eval(_) => Ok(Error::SectorExit(s)),
        other => Err(other),
    }
}

/// Integrates from `(x0, y0)` over arc length `length`. The initial velocity is rescaled to
/// `|F^2| = 1`. `step` applies to rk4 (default `length / 4096`) and is the initial step for rk45.
pub fn geodesic_integrate(
    field: &BackgroundField,
    x0: &[f64],
    y0: &[f64],
    length: f64,
    step: Option<f64>,
    method: Method,
) -> Result<GeodesicTrajectory> {
    let n = field.dim();
    if x0.len() != n {
        return Err(Error::Dimension { expected: n, got: x0.len() });
    }
    if y0.len() != n {
        return Err(Error::Dimension { expected: n, got: y0.len() });
    }
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::Config(format!("length must be positive, got {length}")));
    }
    let f2_of = |state: &[f64]| -> Result<f64> {
        metric_function(&field.sample(&state[..n])?, &DVector::from_column_slice(&state[n..]))
    };
    let raw = f2_of(&[x0, y0].concat())?;
    let scale = raw.abs().sqrt();
    if scale == 0.0 {
        return Err(Error::DegenerateNu);
    }
    let mut state: Vec<f64> = x0.iter().copied().chain(y0.iter().map(|v| v / scale)).collect();
    let f2_0 = f2_of(&state)?;
    let push = |samples: &mut Vec<GeodesicSample>, s: f64, st: &[f64], f2: f64| {
        samples.push(GeodesicSample { s, x: st[..n].to_vec(), v: st[n..].to_vec(), f2 })
    };
    let mut samples = Vec::new();
    push(&mut samples, 0.0, &state, f2_0);
    let mut drift: f64 = 0.0;
    let mut s = 0.0;
    let mut exit = None;

    let h0 = step.unwrap_or(length / 4096.0);
    if !(h0.is_finite() && h0 > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {h0}")));
    }
    let h_min = 1e-12 * length.max(1.0);
    let mut h = h0;
    while s < length && exit.is_none() {
        let last = length - s <= h * (1.0 + 1e-12);
        let h_try = if last { length - s } else { h };
        let attempt = match method {
            Method::Rk4 => rk4_step(field, &state, h_try, n).map(|y| Some((y, h_try))),
            Method::Rk45 => dp45_step(field, &state, h_try, n).map(|(y, err)| {
                let ratio = err
                    .iter()
                    .zip(state.iter())
                    .map(|(e, y)| e.abs() / (RK45_TOL * (1.0 + y.abs())))
                    .fold(0.0, f64::max);
                let factor = if ratio == 0.0 { 5.0 } else { (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0) };
                h = h_try * factor;
                (ratio <= 1.0).then_some((y, h_try))
            }),
        };
        match attempt.and_then(|a| a.map(|(y, dh)| f2_of(&y).map(|f2| (y, dh, f2))).transpose()) {
            Ok(Some((y, dh, f2))) => {
                state = y;
                s = if last && dh == length - s { length } else { s + dh };
                drift = drift.max((f2 - f2_0).abs());
                push(&mut samples, s, &state, f2);
            }
            Ok(None) => {
                if h < h_min {
                    exit = Some(Error::StepUnderflow(s));
                }
            }
            Err(e) => exit = Some(exit_reason(e, s)?),
        }
    }
    Ok(GeodesicTrajectory { samples, f2_drift: drift, exit })
}

/// CSV with header `s,x0..,v0..,F2`; a trailing `#` comment marks an early exit.
pub fn write_csv<W: Write>(traj: &GeodesicTrajectory, mut out: W) -> io::Result<()> {
    let n = traj.samples.first().map_or(0, |s| s.x.len());
    let mut header = vec!["s".to_string()];
    header.extend((0..n).map(|i| format!("x{i}")));
    header.extend((0..n).map(|i| format!("v{i}")));
    header.push("F2".to_string());
    writeln!(out, "{}", header.join(","))?;
    for smp in &traj.samples {
        let row: Vec<String> = std::iter::once(smp.s)
            .chain(smp.x.iter().copied())
            .chain(smp.v.iter().copied())
            .chain(std::iter::once(smp.f2))
            .map(|v| format!("{v:.16e}"))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    match &traj.exit {
        Some(Error::SectorExit(s)) => writeln!(out, "# truncated: left the supported sector at s = {s:.16e}"),
        Some(Error::StepUnderflow(s)) => writeln!(out, "# truncated: step size underflow at s = {s:.16e}"),
        Some(e) => writeln!(out, "# truncated: {e}"),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::parse_config;

    const DB: &str = "dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1\ng = 0.6\n";

    #[test]
    fn straight_lines_on_desk_background() {
        let f = parse_config(DB).unwrap();
        let t = geodesic_integrate(&f, &[0.0; 4], &[1.0, 0.2, 0.0, 0.1], 1.0, None, Method::Rk4).unwrap();
        assert!(t.exit.is_none());
        assert_eq!(t.samples.len(), 4097);
        let last = t.last();
        assert_eq!(last.s, 1.0);
        let v0 = &t.samples[0].v;
        for i in 0..4 {
            assert!((last.x[i] - v0[i]).abs() < 1e-12);
            assert!((last.v[i] - v0[i]).abs() < 1e-15);
        }
        assert!((t.samples[0].f2 - 1.0).abs() < 1e-13);
        assert!(t.f2_drift < 1e-13);
    }

    #[test]
    fn adaptive_matches_fixed_step() {
        let f = parse_config(&DB.replace("b.3 = 1", "b.3 = 1 - 0.1*x1").replace("g = 0.6", "g = 0.6*exp(-x1)")).unwrap();
        let y0 = [1.0, 0.1, 0.2, 0.1];
        let a = geodesic_integrate(&f, &[0.0; 4], &y0, 0.5, None, Method::Rk4).unwrap();
        let b = geodesic_integrate(&f, &[0.0; 4], &y0, 0.5, Some(0.05), Method::Rk45).unwrap();
        assert!(a.exit.is_none() && b.exit.is_none());
        assert!(a.f2_drift < 1e-9 && b.f2_drift < 1e-8, "{} {}", a.f2_drift, b.f2_drift);
        assert_eq!(b.last().s, 0.5);
        for i in 0..4 {
            assert!((a.last().x[i] - b.last().x[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn sector_exit_keeps_partial_trajectory() {
        // a(x) turns Euclidean-signature beyond x1 = 1 so the geodesic must stop
        let f = parse_config("dim = 2\na.0.0 = 1-x1\na.1.1 = -1\nb.1 = 1\ng = 0.3\n").unwrap();
        let t = geodesic_integrate(&f, &[0.0, 0.0], &[1.0, 0.6], 10.0, Some(0.01), Method::Rk4).unwrap();
        assert!(matches!(t.exit, Some(Error::SectorExit(_))));
        assert!(t.samples.len() > 1);
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,x0,x1,v0,v1,F2\n"));
        assert!(text.trim_end().lines().last().unwrap().starts_with("# truncated"));
    }
}
