//! Angles and the spherical-like chart of the unimodular (`c = 1`) space.

use nalgebra::{DMatrix, DVector};

use crate::background::BackgroundSample;
use crate::error::{Error, Result};
use crate::kinematics::{kinematics, SectorTag, KinematicScalars, Q_MIN};
use crate::metric::{frame_components, metric_function, require_dim};
use crate::numdiff::tol::CLAMP;

/// Chart coordinates `(z0, eta, phi, chi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UarPoint {
    pub z0: f64,
    pub eta: f64,
    pub phi: f64,
    pub chi: f64,
}

impl UarPoint {
    pub fn new(z0: f64, eta: f64, phi: f64, chi: f64) -> Self {
        UarPoint { z0, eta, phi, chi }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.z0, self.eta, self.phi, self.chi]
    }

    pub fn from_array(z: [f64; 4]) -> Self {
        UarPoint::new(z[0], z[1], z[2], z[3])
    }
}

fn supported_eps(tag: SectorTag) -> Result<f64> {
    match tag {
        SectorTag::TimeFuture => Ok(1.0),
        SectorTag::SpaceLike => Ok(-1.0),
        SectorTag::Unsupported => Err(Error::UnsupportedSector),
    }
}

fn check_charge(g: f64, eps: f64) -> Result<f64> {
    if eps < 0.0 && g.abs() >= 2.0 {
        return Err(Error::ChargeRange(g));
    }
    Ok((1.0 + eps * g * g / 4.0).sqrt())
}

/// `(w, B)` with `w = (A, h R^0, .., h R^{N-2})` in frame components, so that
/// `<y1, y2>` terms of the angle formulas are `w1 . w2` under `(-, +, -, .., -)`.
fn angle_vector(s: &BackgroundSample, y: &DVector<f64>, k: &KinematicScalars) -> DVector<f64> {
    let n = s.dim();
    let r = &s.frame * y;
    let mut w = DVector::zeros(n);
    w[0] = k.a;
    for p in 0..n - 1 {
        w[p + 1] = k.h * r[p];
    }
    w
}

fn w_sign(i: usize) -> f64 {
    if i == 1 {
        1.0
    } else {
        -1.0
    }
}

fn w_dot(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    (0..u.len()).map(|i| w_sign(i) * u[i] * v[i]).sum()
}

/// `sum_{a<b} s_a s_b (u_a v_b - u_b v_a)^2`, i.e. `(u.u)(v.v) - (u.v)^2` without cancellation.
fn w_gram(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let n = u.len();
    let mut out = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            let d = u[a] * v[b] - u[b] * v[a];
            out += w_sign(a) * w_sign(b) * d * d;
        }
    }
    out
}

fn pair(s: &BackgroundSample, y1: &DVector<f64>, y2: &DVector<f64>) -> Result<(KinematicScalars, KinematicScalars)> {
    if !s.is_unit() {
        return Err(Error::CNotUnit(s.c));
    }
    let (s1, k1) = kinematics(s, y1)?;
    let (s2, k2) = kinematics(s, y2)?;
    if s1.tag != s2.tag {
        return Err(Error::MixedSectors);
    }
    Ok((k1, k2))
}

/// `h * alpha` from the numerator `tau * sqrt(B1 B2)` and the Gram term.
fn reduced_angle(eps: f64, num: f64, gram: f64, bb: f64) -> Result<f64> {
    let den = bb.sqrt();
    if eps > 0.0 {
        // tau^2 - 1 = -gram / (B1 B2)
        if gram > CLAMP * bb || num <= 0.0 {
            return Err(Error::DomainError(num / den));
        }
        Ok(((-gram).max(0.0).sqrt() / den).asinh())
    } else {
        if gram < -CLAMP * bb {
            return Err(Error::DomainError(num / den));
        }
        Ok(gram.max(0.0).sqrt().atan2(num))
    }
}

/// The unimodular angle between two vectors of one sector.
pub fn angle(s: &BackgroundSample, y1: &DVector<f64>, y2: &DVector<f64>) -> Result<f64> {
    let (k1, k2) = pair(s, y1, y2)?;
    let w1 = angle_vector(s, y1, &k1);
    let w2 = angle_vector(s, y2, &k2);
    let eps = k1.eps;
    // time-like numerator h^2 <y1,y2>_r - A1 A2, space-like its negative
    let num = eps * w_dot(&w1, &w2);
    let bb = (w_dot(&w1, &w1) * w_dot(&w2, &w2)).abs();
    Ok(reduced_angle(eps, num, w_gram(&w1, &w2), bb)? / k1.h)
}

/// The angle through the printed `arccosh`/`arccos` expression, with the window clamp.
pub fn angle_direct(s: &BackgroundSample, y1: &DVector<f64>, y2: &DVector<f64>) -> Result<f64> {
    let (k1, k2) = pair(s, y1, y2)?;
    let rv = (&s.a * y2).dot(y1) + k1.b * k2.b;
    let tau = k1.eps * (k1.h * k1.h * rv - k1.a * k2.a) / (k1.big_b.abs() * k2.big_b.abs()).sqrt();
    Ok(clamped_inverse(k1.eps, tau)? / k1.h)
}

fn clamped_inverse(eps: f64, tau: f64) -> Result<f64> {
    if eps > 0.0 {
        if tau < 1.0 - CLAMP {
            return Err(Error::DomainError(tau));
        }
        Ok(tau.max(1.0).acosh())
    } else {
        if tau.abs() > 1.0 + CLAMP {
            return Err(Error::DomainError(tau));
        }
        Ok(tau.clamp(-1.0, 1.0).acos())
    }
}

/// `F1 F2 cosh(alpha)` or `-K1 K2 cos(alpha)`, so that `<y, y> = F^2` in both sectors.
pub fn scalar_product(s: &BackgroundSample, y1: &DVector<f64>, y2: &DVector<f64>) -> Result<f64> {
    let al = angle(s, y1, y2)?;
    let (k1, k2) = pair(s, y1, y2)?;
    let m = (k1.f2().abs() * k2.f2().abs()).sqrt();
    Ok(if k1.eps > 0.0 { m * al.cosh() } else { -m * al.cos() })
}

/// Angle between two chart points of one sector straight from the chart coordinates.
pub fn angle_closed_form(z1: &UarPoint, z2: &UarPoint, sector: SectorTag, g: f64) -> Result<f64> {
    let eps = supported_eps(sector)?;
    let h = check_charge(g, eps)?;
    let (f1, f2) = (h * z1.chi, h * z2.chi);
    let de = z2.eta - z1.eta;
    let y = 1.0 - (z2.phi - z1.phi).cos();
    let tau = if eps > 0.0 {
        let omega = de.cosh() - 1.0 + y * z1.eta.sinh() * z2.eta.sinh();
        (f2 - f1).cosh() + omega * f1.cosh() * f2.cosh()
    } else {
        let omega = de.cosh() - 1.0 - y * z1.eta.cosh() * z2.eta.cosh();
        (f2 - f1).cos() + omega * f1.sin() * f2.sin()
    };
    Ok(clamped_inverse(eps, tau)? / h)
}

/// `(Ch, Sh, Sh*)` for time-like or `(Sin, Cos, Cos*)` for space-like charts.
pub fn chart_trig(chi: f64, g: f64, eps: f64) -> (f64, f64, f64) {
    let h = (1.0 + eps * g * g / 4.0).sqrt();
    let gg = g / h;
    let f = h * chi;
    let j = (-g * chi / 2.0).exp();
    if eps > 0.0 {
        let ch = f.cosh() / (j * h);
        let sh = (f.sinh() - gg / 2.0 * f.cosh()) / j;
        (ch, sh, sh + g * ch)
    } else {
        let sn = f.sin() / (j * h);
        let cs = (f.cos() - gg / 2.0 * f.sin()) / j;
        (sn, cs, cs + g * sn)
    }
}

fn chart_check(s: &BackgroundSample) -> Result<()> {
    if !s.is_unit() {
        return Err(Error::CNotUnit(s.c));
    }
    require_dim(s, 4)
}

/// Frame components `R^p(z)`.
pub fn uar_from_angles(s: &BackgroundSample, z: &UarPoint, sector: SectorTag) -> Result<DVector<f64>> {
    chart_check(s)?;
    let eps = supported_eps(sector)?;
    check_charge(s.g, eps)?;
    Ok(chart_frame(z, s.g, eps))
}

fn chart_frame(z: &UarPoint, g: f64, eps: f64) -> DVector<f64> {
    let (t1, t2, _) = chart_trig(z.chi, g, eps);
    let (ce, se) = (z.eta.cosh(), z.eta.sinh());
    let (cp, sp) = (z.phi.cos(), z.phi.sin());
    if eps > 0.0 {
        DVector::from_column_slice(&[ce * t1, se * t1 * cp, se * t1 * sp, t2]) * z.z0
    } else {
        DVector::from_column_slice(&[se * t1, ce * t1 * cp, ce * t1 * sp, t2]) * -z.z0
    }
}

/// `dR^p / dz^r`, columns indexed by `(z0, eta, phi, chi)`.
pub fn chart_jacobian(z: &UarPoint, g: f64, eps: f64) -> DMatrix<f64> {
    let (t1, _, t3) = chart_trig(z.chi, g, eps);
    let (ce, se) = (z.eta.cosh(), z.eta.sinh());
    let (cp, sp) = (z.phi.cos(), z.phi.sin());
    let r = chart_frame(z, g, eps);
    let mut jac = DMatrix::zeros(4, 4);
    jac.set_column(0, &(&r / z.z0));
    let (m, col1, col2, col3) = if eps > 0.0 {
        (
            z.z0,
            [se * t1, ce * t1 * cp, ce * t1 * sp, 0.0],
            [0.0, -se * t1 * sp, se * t1 * cp, 0.0],
            [ce * t3, se * t3 * cp, se * t3 * sp, t1],
        )
    } else {
        (
            -z.z0,
            [ce * t1, se * t1 * cp, se * t1 * sp, 0.0],
            [0.0, -ce * t1 * sp, ce * t1 * cp, 0.0],
            [se * t3, ce * t3 * cp, ce * t3 * sp, -t1],
        )
    };
    for (c, col) in [(1, col1), (2, col2), (3, col3)] {
        jac.set_column(c, &(DVector::from_column_slice(&col) * m));
    }
    jac
}

/// Chart coordinates of frame components `R^p`; on the `q = 0` axis `eta = phi = 0`.
pub fn uar_to_angles(s: &BackgroundSample, r: &DVector<f64>) -> Result<(UarPoint, SectorTag)> {
    chart_check(s)?;
    let y = &s.frame_inv * r;
    let (sector, k) = kinematics(s, &y)?;
    let z0 = k.f2().abs().sqrt();
    let chi = k.f / k.h;
    let axis = k.q < Q_MIN * k.scale;
    let (eta, phi) = if axis {
        (0.0, 0.0)
    } else {
        let rho = r[1].hypot(r[2]);
        let eta = if k.eps > 0.0 { (rho / k.q).asinh() } else { (r[0] / k.q).asinh() };
        let phi = if rho == 0.0 { 0.0 } else { r[2].atan2(r[1]).rem_euclid(std::f64::consts::TAU) };
        (eta, phi)
    };
    Ok((UarPoint { z0, eta, phi, chi }, sector.tag))
}

/// `A_rs = g_pq dR^p/dz^r dR^q/dz^s`.
pub fn uar_metric(s: &BackgroundSample, z: &UarPoint, sector: SectorTag) -> Result<DMatrix<f64>> {
    let r = uar_from_angles(s, z, sector)?;
    let eps = supported_eps(sector)?;
    let y = &s.frame_inv * r;
    let g_pq = frame_components(s, &y)?.g_pq;
    let jac = chart_jacobian(z, s.g, eps);
    Ok(jac.transpose() * g_pq * jac)
}

/// Diagonal of `A_rs` in closed form.
pub fn uar_metric_closed(z: &UarPoint, sector: SectorTag, g: f64) -> Result<[f64; 4]> {
    let eps = supported_eps(sector)?;
    let h = check_charge(g, eps)?;
    let f = h * z.chi;
    let z2 = z.z0 * z.z0;
    Ok(if eps > 0.0 {
        let c = f.cosh() * f.cosh() / (h * h);
        [1.0, -z2 * c, -z2 * z.eta.sinh().powi(2) * c, -z2]
    } else {
        let sn = f.sin() * f.sin() / (h * h);
        [-1.0, z2 * sn, -z2 * z.eta.cosh().powi(2) * sn, -z2]
    })
}

/// Max deviation of `eps A_rs` from `Ka` times the flat metric in `(rho, tau, eta, phi)`,
/// relative to the largest entry.
pub fn conformal_flatness_residual(s: &BackgroundSample, z: &UarPoint, sector: SectorTag) -> Result<f64> {
    let a = uar_metric(s, z, sector)?;
    let eps = supported_eps(sector)?;
    let h = check_charge(s.g, eps)?;
    let ka = (z.z0 * z.z0).powf(1.0 - h) / (h * h);
    let zh = z.z0.powf(h);
    let (u, v) = (h * z.chi, z.z0);
    // p = d(rho, tau, eta, phi) / d(z0, eta, phi, chi)
    let mut p = DMatrix::zeros(4, 4);
    let flat = if eps > 0.0 {
        p[(0, 0)] = h * zh / v * u.cosh();
        p[(0, 3)] = h * zh * u.sinh();
        p[(1, 0)] = h * zh / v * u.sinh();
        p[(1, 3)] = h * zh * u.cosh();
        let rho = zh * u.cosh();
        [1.0, -1.0, -rho * rho, -rho * rho * z.eta.sinh().powi(2)]
    } else {
        p[(0, 0)] = h * zh / v * u.sin();
        p[(0, 3)] = h * zh * u.cos();
        p[(1, 0)] = h * zh / v * u.cos();
        p[(1, 3)] = -h * zh * u.sin();
        let rho = zh * u.sin();
        [1.0, 1.0, -rho * rho, rho * rho * z.eta.cosh().powi(2)]
    };
    p[(2, 1)] = 1.0;
    p[(3, 2)] = 1.0;
    let want = p.transpose() * DMatrix::from_diagonal(&DVector::from_column_slice(&flat)) * p * ka;
    let got = a * eps;
    let scale = got.amax().max(1e-300);
    Ok((got - want).amax() / scale)
}

/// `F^2` of the chart image, for the invariance `F^2(R(z)) = eps z0^2`.
pub fn chart_metric_function(s: &BackgroundSample, z: &UarPoint, sector: SectorTag) -> Result<f64> {
    let r = uar_from_angles(s, z, sector)?;
    metric_function(s, &(&s.frame_inv * r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::parse_config;

    const DB: &str = "dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1\ng = 0.6\n";

    fn db() -> BackgroundSample {
        parse_config(DB).unwrap().sample(&[0.0; 4]).unwrap()
    }

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    const TIME: [[f64; 4]; 3] = [[1.0, 0.2, -0.1, 0.3], [1.2, -0.3, 0.1, -0.6], [1.0, 0.0, 0.0, 0.0]];
    const SPACE: [[f64; 4]; 4] = [[0.1, 1.0, 0.3, 0.4], [0.2, -0.5, 0.7, -0.9], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0]];

    #[test]
    fn desk_angle_values() {
        let s = db();
        assert_eq!(angle(&s, &v(&[1.0, 0.0, 0.0, 0.0]), &v(&[1.0, 0.0, 0.0, 0.0])).unwrap(), 0.0);
        let a = angle(&s, &v(&[0.0, 1.0, 0.0, 0.0]), &v(&[0.0, 0.0, 0.0, -1.0])).unwrap();
        assert!((a - 1.966046660).abs() < 1e-8, "{a}");
        // against the q = 0 reduction with -A
        let k = kinematics(&s, &v(&[0.0, 1.0, 0.0, 0.0])).unwrap().1;
        assert!((a - (-k.a / k.big_b.abs().sqrt()).acos() / k.h).abs() < 1e-12);
        assert!((a + k.chi).abs() < 1e-12);
    }

    #[test]
    fn angle_routes_agree() {
        let s = db();
        for set in [&TIME[..], &SPACE[..]] {
            for y1 in set {
                for y2 in set {
                    let (y1, y2) = (v(y1), v(y2));
                    let a = angle(&s, &y1, &y2);
                    let d = angle_direct(&s, &y1, &y2);
                    match (a, d) {
                        // the arccos routes lose ~sqrt(eps) near zero angle
                        (Ok(a), Ok(_)) if a < 1e-3 => assert!(y1 != y2 || a == 0.0),
                        (Ok(a), Ok(d)) => {
                            assert!((a - d).abs() < 1e-10, "{a} {d}");
                            let (z1, t) = uar_to_angles(&s, &(&s.frame * &y1)).unwrap();
                            let (z2, _) = uar_to_angles(&s, &(&s.frame * &y2)).unwrap();
                            let c = angle_closed_form(&z1, &z2, t, s.g).unwrap();
                            assert!((a - c).abs() < 1e-10, "{a} {c}");
                            assert_eq!(a, angle(&s, &y2, &y1).unwrap());
                            assert!((angle(&s, &(&y1 * 3.0), &y2).unwrap() - a).abs() < 1e-12);
                        }
                        (Err(Error::DomainError(_)), Err(Error::DomainError(_))) => {}
                        other => panic!("{other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_product_reduces_to_f2() {
        let s = db();
        let e = v(&[1.0, 0.0, 0.0, 0.0]);
        assert!((scalar_product(&s, &e, &e).unwrap() - 0.8437305828).abs() < 1e-9);
        let x = v(&[0.0, 1.0, 0.0, 0.0]);
        assert!((scalar_product(&s, &x, &x).unwrap() + 3.2531637879).abs() < 1e-9);
        let y2 = v(&[1.2, -0.3, 0.1, -0.6]);
        let p = scalar_product(&s, &e, &y2).unwrap();
        assert!((scalar_product(&s, &(&e * 2.0), &y2).unwrap() - 2.0 * p).abs() < 1e-12);
        assert!((scalar_product(&s, &y2, &e).unwrap() - p).abs() < 1e-15);
    }

    #[test]
    fn mixed_and_unit_errors() {
        let s = db();
        assert!(matches!(angle(&s, &v(&TIME[0]), &v(&SPACE[0])), Err(Error::MixedSectors)));
        let s9 = parse_config(&DB.replace("b.3 = 1", "b.3 = 0.9")).unwrap().sample(&[0.0; 4]).unwrap();
        assert!(matches!(angle(&s9, &v(&TIME[0]), &v(&TIME[1])), Err(Error::CNotUnit(_))));
    }

    #[test]
    fn chart_values_and_round_trip() {
        let s = db();
        let r = uar_from_angles(&s, &UarPoint::new(1.0, 0.0, 0.0, 0.0), SectorTag::TimeFuture).unwrap();
        let h = s.h_time;
        let want = [1.0 / h, 0.0, 0.0, -s.g / h / 2.0];
        for p in 0..4 {
            assert!((r[p] - want[p]).abs() < 1e-15);
        }
        assert!((r[0] - 0.957826).abs() < 1e-6 && (r[3] + 0.287348).abs() < 1e-6);
        let rb = uar_from_angles(&s, &UarPoint::new(1.0, 0.0, 0.0, 0.0), SectorTag::SpaceLike).unwrap();
        assert_eq!(&s.frame_inv * rb, v(&[0.0, 0.0, 0.0, -1.0]));

        for (z, t) in [
            (UarPoint::new(1.3, 0.3, 0.7, 0.2), SectorTag::TimeFuture),
            (UarPoint::new(0.6, 1.1, 5.9, -0.8), SectorTag::TimeFuture),
            (UarPoint::new(1.0, 0.3, 0.7, -0.5), SectorTag::SpaceLike),
            (UarPoint::new(2.0, -0.4, 3.5, -2.9), SectorTag::SpaceLike),
        ] {
            let r = uar_from_angles(&s, &z, t).unwrap();
            let f2 = chart_metric_function(&s, &z, t).unwrap();
            let eps = if t == SectorTag::TimeFuture { 1.0 } else { -1.0 };
            assert!((f2 - eps * z.z0 * z.z0).abs() < 1e-12 * z.z0 * z.z0);
            let (back, tb) = uar_to_angles(&s, &r).unwrap();
            assert_eq!(tb, t);
            for (a, b) in back.as_array().iter().zip(z.as_array()) {
                assert!((a - b).abs() < 1e-12, "{back:?} {z:?}");
            }
        }
    }

    #[test]
    fn chart_metric_is_diagonal() {
        let s = db();
        for (z, t) in [
            (UarPoint::new(1.0, 0.3, 0.7, 0.2), SectorTag::TimeFuture),
            (UarPoint::new(1.0, 0.3, 0.7, -0.5), SectorTag::SpaceLike),
            (UarPoint::new(1.7, -0.9, 2.1, -1.4), SectorTag::SpaceLike),
        ] {
            let a = uar_metric(&s, &z, t).unwrap();
            let d = uar_metric_closed(&z, t, s.g).unwrap();
            for r in 0..4 {
                for c in 0..4 {
                    let want = if r == c { d[r] } else { 0.0 };
                    assert!((a[(r, c)] - want).abs() < 1e-12, "{t:?} {r}{c}: {}", a[(r, c)]);
                }
            }
            assert!(conformal_flatness_residual(&s, &z, t).unwrap() < 1e-12);
        }
    }

    #[test]
    fn shifted_trig_identities() {
        for &g in &[0.3, 0.6, 1.2] {
            for i in -10..=10 {
                let chi = 0.17 * i as f64;
                let j2 = (-g * chi).exp();
                let (ch, sh, shs) = chart_trig(chi, g, 1.0);
                assert!((shs * shs - g * shs * ch - ch * ch + 1.0 / j2).abs() < 1e-12 * (1.0 + 1.0 / j2));
                let (sn, cs, css) = chart_trig(chi, g, -1.0);
                assert!((sn * sn + g * sn * cs + cs * cs - 1.0 / j2).abs() < 1e-12 * (1.0 + 1.0 / j2));
                let d = |e: f64, k: usize| {
                    crate::numdiff::fd_derivative(
                        |c| -> Result<f64> {
                            let t = chart_trig(c, g, e);
                            Ok([t.0, t.1][k])
                        },
                        chi,
                        &Default::default(),
                    )
                    .unwrap()
                };
                assert!((d(1.0, 0) - shs).abs() < 1e-6 && (d(1.0, 1) - ch).abs() < 1e-6);
                assert!((d(-1.0, 0) - css).abs() < 1e-6 && (d(-1.0, 1) + sn).abs() < 1e-6);
                let _ = sh;
            }
        }
    }

    #[test]
    fn angle_is_arc_length() {
        let s = db();
        for (z, t, dz) in [
            (UarPoint::new(1.0, 0.3, 0.7, 0.2), SectorTag::TimeFuture, [0.0, 0.4, -0.3, 0.5]),
            (UarPoint::new(1.0, 0.3, 0.7, -0.5), SectorTag::SpaceLike, [0.0, 0.0, 0.6, 0.5]),
        ] {
            let a = uar_metric(&s, &z, t).unwrap();
            let len2 = -(1..4).map(|r| a[(r, r)] * dz[r] * dz[r]).sum::<f64>() / (z.z0 * z.z0);
            let at = |d: f64| {
                let mut w = z.as_array();
                for r in 0..4 {
                    w[r] += d * dz[r];
                }
                let y1 = &s.frame_inv * uar_from_angles(&s, &z, t).unwrap();
                let y2 = &s.frame_inv * uar_from_angles(&s, &UarPoint::from_array(w), t).unwrap();
                angle(&s, &y1, &y2).unwrap() / d
            };
            let (d1, d2) = (at(1e-3), at(5e-4));
            let rich = 2.0 * d2 - d1;
            assert!((rich - len2.sqrt()).abs() < 1e-6, "{rich} {}", len2.sqrt());
        }
    }
}
