//! Spray coefficients `G^i`, the charge derivatives behind `E^i`, an
//! independent finite-difference oracle, and geodesic integration.

pub mod geodesic;

use nalgebra::{DMatrix, DVector};

use crate::background::{BackgroundField, BackgroundSample};
use crate::error::Result;
use crate::kinematics::KinematicScalars;
use crate::metric::{covariant_momentum, metric_function, MetricBundle};
use crate::numdiff::{fd_jacobian, FdConfig};

pub use geodesic::{geodesic_integrate, write_csv, GeodesicSample, GeodesicTrajectory, Method};

#[derive(Debug, Clone)]
pub struct SprayData {
    pub g: DVector<f64>,
    pub e: DVector<f64>,
    pub mbar: f64,
    /// `f_mn = nabla_m b_n - nabla_n b_m`
    pub f2: DMatrix<f64>,
    /// `a^i_nm y^n y^m`
    pub riem: DVector<f64>,
}

/// Derivatives of the sector scalars with respect to the charge `g` at fixed `y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeDerivatives {
    pub dh: f64,
    pub dgg: f64,
    pub df: f64,
    /// `d ln J^2 / dg`
    pub lambda: f64,
    /// `d ln F^2 / dg`
    pub mbar: f64,
}

pub fn charge_derivatives(k: &KinematicScalars) -> ChargeDerivatives {
    let (h, q, b, bb, gg) = (k.h, k.q, k.b, k.big_b, k.gg);
    let df = if k.eps > 0.0 {
        (q / bb) * (q / (2.0 * h) - gg * b / 4.0)
    } else {
        -1.0 / (2.0 * h) + (b / -bb) * (gg * q / 4.0 + b / (2.0 * h))
    };
    let lambda = -k.f / (h * h * h) - gg * df;
    ChargeDerivatives { dh: k.eps * gg / 4.0, dgg: 1.0 / (h * h * h), df, lambda, mbar: lambda - b * q / bb }
}

/// `d y_i / dg = lambda y_i - q b_i J^2`
pub fn dy_cov_dg(m: &MetricBundle, b_cov: &DVector<f64>) -> DVector<f64> {
    let d = charge_derivatives(&m.k);
    &m.y_cov * d.lambda - b_cov * (m.k.q * m.k.j2())
}

/// `a^i_nm y^n y^m`
pub fn pseudo_riemannian_spray(s: &BackgroundSample, y: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(s.dim(), |i, _| (&s.christoffel[i] * y).dot(y))
}

pub fn spray_coefficients(s: &BackgroundSample, y: &DVector<f64>) -> Result<SprayData> {
    let m = MetricBundle::new(s, y)?;
    let k = &m.k;
    let (g, q) = (k.g, k.q);
    let f2 = &s.nabla_b - s.nabla_b.transpose();
    let f_low = &f2 * y;
    let f_up = &s.a_inv * &f_low;
    let yy = (&s.nabla_b * y).dot(y);
    let bf = s.b_contra.dot(&f_low);
    let riem = pseudo_riemannian_spray(s, y);

    let d = charge_derivatives(k);
    let yg = y.dot(&s.dg);
    let dy = dy_cov_dg(&m, &s.b_cov);
    let e = &m.g_contra * (dy * yg - &s.dg * (0.5 * d.mbar * m.f2));

    let gvec = &m.aux.v_contra * (-(k.eps * g / k.nu) * (yy - g * q * bf)) + f_up * (g * q) + &e + &riem;
    Ok(SprayData { g: gvec, e, mbar: d.mbar, f2, riem })
}

/// `G^i = g^ik (y^m d_m y_k - 1/2 d_k F^2)` with x-derivatives taken by
/// central differences of the closed-form `y_k` and `F^2`.
pub fn spray_oracle(field: &BackgroundField, x: &[f64], y: &DVector<f64>) -> Result<DVector<f64>> {
    let cfg = FdConfig { step_rel_first: 1e-6, richardson: true, ..FdConfig::default() };
    let n = field.dim();
    // one vector: (y_0 .. y_{N-1}, F^2)
    let jac = fd_jacobian(
        |xp| -> Result<Vec<f64>> {
            let s = field.sample_unchecked(xp)?;
            let mut out: Vec<f64> = covariant_momentum(&s, y)?.iter().copied().collect();
            out.push(metric_function(&s, y)?);
            Ok(out)
        },
        x,
        &cfg,
    )?;
    let gk = DVector::from_fn(n, |kk, _| {
        let transport: f64 = (0..n).map(|m| y[m] * jac[m][kk]).sum();
        transport - 0.5 * jac[kk][n]
    });
    let s = field.sample(x)?;
    let m = MetricBundle::new(&s, y)?;
    Ok(&m.g_contra * gk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::parse_config;
    use crate::numdiff::{fd_derivative, rel_err};

    const DB: &str = "dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1\ng = 0.6\n";

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn berwald_reduction_on_desk_background() {
        let f = parse_config(DB).unwrap();
        let s = f.sample(&[0.0; 4]).unwrap();
        for y in [[1.0, 0.2, -0.1, 0.3], [0.1, 1.0, 0.3, 0.4]] {
            let sp = spray_coefficients(&s, &v(&y)).unwrap();
            assert!(sp.g.amax() == 0.0);
            assert!(spray_oracle(&f, &[0.0; 4], &v(&y)).unwrap().amax() < 1e-8);
        }
    }

    #[test]
    fn charge_derivatives_match_fd() {
        for text in [DB.to_string(), DB.replace("b.3 = 1", "b.2 = 0.3\nb.3 = 0.85")] {
            let f = parse_config(&text).unwrap();
            for y in [[1.0, 0.2, -0.1, 0.3], [1.2, -0.3, 0.1, -0.6], [0.1, 1.0, 0.3, 0.4], [0.2, -0.5, 0.7, -0.9]] {
                let y = v(&y);
                let s = f.sample(&[0.0; 4]).unwrap();
                let m = MetricBundle::new(&s, &y).unwrap();
                let d = charge_derivatives(&m.k);
                let at_g = |g: f64| f.with_g(crate::background::Expr::Num(g)).sample(&[0.0; 4]).unwrap();
                let fd_m = fd_derivative(|g| metric_function(&at_g(g), &y), 0.6, &Default::default()).unwrap() / m.f2;
                assert!((fd_m - d.mbar).abs() < 1e-8, "{fd_m} {}", d.mbar);
                let fd_h = fd_derivative(
                    |g| crate::kinematics::kinematics(&at_g(g), &y).map(|k| k.1.h),
                    0.6,
                    &Default::default(),
                )
                .unwrap();
                assert!((fd_h - d.dh).abs() < 1e-8);
                let fd_gg =
                    fd_derivative(|g| crate::kinematics::kinematics(&at_g(g), &y).map(|k| k.1.gg), 0.6, &Default::default())
                        .unwrap();
                assert!((fd_gg - d.dgg).abs() < 1e-8);
                let dy = dy_cov_dg(&m, &s.b_cov);
                for i in 0..4 {
                    let fd = fd_derivative(|g| covariant_momentum(&at_g(g), &y).map(|c| c[i]), 0.6, &Default::default())
                        .unwrap();
                    assert!((fd - dy[i]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn printed_space_like_mbar_forms() {
        let s = parse_config(DB).unwrap().sample(&[0.0; 4]).unwrap();
        let y = v(&[0.2, -0.5, 0.7, -0.9]);
        let m = MetricBundle::new(&s, &y).unwrap();
        let k = &m.k;
        let (h, q, b, bb, f, gg) = (k.h, k.q, k.b, k.big_b, k.f, k.gg);
        let printed = -f / (h * h * h) + 0.5 * gg / (-bb * h) * q * q + b * q / (-bb * h * h);
        assert!((printed - charge_derivatives(k).mbar).abs() < 1e-13);
        // Mbar_i = -(4 q^2 / (g B)) X C_i, the sign that goes with d y_i / dg
        let grad = crate::numdiff::fd_gradient(
            |yy| -> Result<f64> {
                let m = MetricBundle::new(&s, &DVector::from_column_slice(yy))?;
                Ok(charge_derivatives(&m.k).mbar)
            },
            y.as_slice(),
            &Default::default(),
        )
        .unwrap();
        let closed = &m.c_cov * (-4.0 * q * q / (k.g * bb) * k.x);
        assert!(rel_err(&grad, closed.as_slice(), 1e-12) < 1e-7);
    }

    #[test]
    fn closed_form_matches_oracle() {
        let texts = [
            DB.replace("b.3 = 1", "b.3 = 1 - 0.1*x1"),
            DB.replace("g = 0.6", "g = 0.6*exp(-x1)"),
            "dim = 4\na.0.0 = 1\na.1.1 = -(1+0.1*x0)^2\na.2.2 = -1\na.3.3 = -(1+0.1*x1)^2\nb.3 = 1\ng = 0\n".to_string(),
            "dim = 4\na.0.0 = 1\na.1.1 = -(1+0.1*x0)^2\na.2.2 = -1\na.3.3 = -1\nb.1 = 0.1*x3\nb.3 = 0.95\ng = 0.6 + 0.1*sin(x2)\n".to_string(),
        ];
        let x = [0.1, 0.2, 0.3, 0.15];
        for text in &texts {
            let f = parse_config(text).unwrap();
            let s = f.sample(&x).unwrap();
            for y in [[1.0, 0.0, 0.2, 0.1], [1.2, -0.3, 0.1, -0.6], [0.1, 1.0, 0.3, 0.4], [0.2, -0.5, 0.7, -0.9]] {
                let y = v(&y);
                let closed = spray_coefficients(&s, &y).unwrap();
                let oracle = spray_oracle(&f, &x, &y).unwrap();
                let err = rel_err(closed.g.as_slice(), oracle.as_slice(), 1.0);
                assert!(err < 1e-8, "{text}: {err}");
            }
        }
    }

    #[test]
    fn homogeneity() {
        let f = parse_config(&DB.replace("b.3 = 1", "b.3 = 1 - 0.1*x1")).unwrap();
        let s = f.sample(&[0.0; 4]).unwrap();
        let y = v(&[1.0, 0.0, 0.2, 0.1]);
        let g1 = spray_coefficients(&s, &y).unwrap().g;
        let g2 = spray_coefficients(&s, &(&y * 2.5)).unwrap().g;
        assert!(rel_err((g1 * 6.25).as_slice(), g2.as_slice(), 1e-12) < 1e-12);
    }
}
