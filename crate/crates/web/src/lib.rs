//! Browser bindings: indicatrix sections, the angle routes, geodesic polylines.
//!
//! Each export has a plain Rust twin that returns `finsleroid::Result` so it can
//! be tested natively.

use nalgebra::DVector;
use wasm_bindgen::prelude::*;

use finsleroid::anglegeo::{angle, angle_closed_form, angle_direct, uar_to_angles};
use finsleroid::background::Expr;
use finsleroid::conformal::factor_space_angle;
use finsleroid::kinematics::{classify, SectorTag};
use finsleroid::metric::metric_function;
use finsleroid::spray::{geodesic_integrate, Method};
use finsleroid::{parse_config, BackgroundField, Error, Result};

/// Points farther out than this are dropped from the section.
pub const SECTION_RADIUS: f64 = 4.0;

fn field(config: &str, g: f64) -> Result<BackgroundField> {
    let f = parse_config(config)?;
    Ok(if g.is_finite() { f.with_g(Expr::Num(g)) } else { f })
}

fn vector(v: &[f64], n: usize) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(Error::Dimension { expected: n, got: v.len() });
    }
    Ok(DVector::from_column_slice(v))
}

/// Section of `|F^2| = 1` by the plane of frame leg `leg` and the `b` leg.
/// Leg 0 cuts the time-like sheet, a spatial leg the space-like one.
/// Returns triples `(u, v, eps)`; unsupported or clipped directions give `(NaN, NaN, 0)`.
/// A finite `g` overrides the charge of the config.
pub fn section(config: &str, g: f64, point: &[f64], leg: usize, samples: usize) -> Result<Vec<f64>> {
    let f = field(config, g)?;
    let n = f.dim();
    vector(point, n)?;
    if leg + 1 >= n {
        return Err(Error::Config(format!("leg must be below {}, got {leg}", n - 1)));
    }
    let s = f.sample(point)?;
    let mut out = Vec::with_capacity(3 * samples);
    for i in 0..samples {
        let th = std::f64::consts::TAU * i as f64 / samples as f64;
        let mut r = DVector::zeros(n);
        r[leg] = th.cos();
        r[n - 1] = th.sin();
        let y = &s.frame_inv * &r;
        let tag = classify(&s, &y).tag;
        let rho = if tag == SectorTag::Unsupported {
            f64::NAN
        } else {
            metric_function(&s, &y).map_or(f64::NAN, |f2| 1.0 / f2.abs().sqrt())
        };
        if rho.is_finite() && rho <= SECTION_RADIUS {
            let eps = if tag == SectorTag::TimeFuture { 1.0 } else { -1.0 };
            out.extend([rho * r[leg], rho * r[n - 1], eps]);
        } else {
            out.extend([f64::NAN, f64::NAN, 0.0]);
        }
    }
    Ok(out)
}

/// `[primary, direct, chart, factor]`; the chart route is `NaN` unless `N = 4`.
pub fn angles(config: &str, g: f64, point: &[f64], y1: &[f64], y2: &[f64]) -> Result<Vec<f64>> {
    let f = field(config, g)?;
    let n = f.dim();
    vector(point, n)?;
    let s = f.sample(point)?;
    let (y1, y2) = (vector(y1, n)?, vector(y2, n)?);
    let chart = if n == 4 {
        let (z1, t1) = uar_to_angles(&s, &(&s.frame * &y1))?;
        let (z2, _) = uar_to_angles(&s, &(&s.frame * &y2))?;
        angle_closed_form(&z1, &z2, t1, s.g)?
    } else {
        f64::NAN
    };
    Ok(vec![angle(&s, &y1, &y2)?, angle_direct(&s, &y1, &y2)?, chart, factor_space_angle(&s, &y1, &y2)?])
}

/// Rows `(s, x_0 .. x_{N-1}, F^2)`, flattened. The final row is followed by
/// `(F^2 drift, truncated flag)`.
pub fn polyline(config: &str, g: f64, start: &[f64], velocity: &[f64], length: f64, steps: usize) -> Result<Vec<f64>> {
    let f = field(config, g)?;
    let step = length / steps.max(1) as f64;
    let t = geodesic_integrate(&f, start, velocity, length, Some(step), Method::Rk4)?;
    let mut out = Vec::with_capacity(t.samples.len() * (f.dim() + 2) + 2);
    for smp in &t.samples {
        out.push(smp.s);
        out.extend_from_slice(&smp.x);
        out.push(smp.f2);
    }
    out.push(t.f2_drift);
    out.push(if t.exit.is_some() { 1.0 } else { 0.0 });
    Ok(out)
}

#[wasm_bindgen(js_name = indicatrixSection)]
pub fn indicatrix_section(
    config: &str,
    g: f64,
    point: &[f64],
    leg: usize,
    samples: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    Ok(section(config, g, point, leg, samples)?)
}

#[wasm_bindgen(js_name = angleRoutes)]
pub fn angle_routes(config: &str, g: f64, point: &[f64], y1: &[f64], y2: &[f64]) -> std::result::Result<Vec<f64>, JsError> {
    Ok(angles(config, g, point, y1, y2)?)
}

#[wasm_bindgen(js_name = geodesicPolyline)]
pub fn geodesic_polyline(
    config: &str,
    g: f64,
    start: &[f64],
    velocity: &[f64],
    length: f64,
    steps: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    Ok(polyline(config, g, start, velocity, length, steps)?)
}
