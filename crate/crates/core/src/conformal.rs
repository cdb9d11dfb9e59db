//! The map `zeta` from the unimodular space onto the factor space with metric
//! `t_mn = p a_mn`, its inverse, and the curvature and angle read off there.

use nalgebra::{DMatrix, DVector};

use crate::background::BackgroundSample;
use crate::error::{Error, Result};
use crate::kinematics::{classify, SectorTag, TAU_CLS};
use crate::anglegeo::chart_trig;
use crate::metric::MetricBundle;
use crate::numdiff::tol::CLAMP;

#[derive(Debug, Clone, PartialEq)]
pub struct ConformalImage {
    pub zeta: DVector<f64>,
    /// `kappa = |F^2|^((1-h)/2) / h`
    pub kappa: f64,
    /// `a_ij zeta^i zeta^j`
    pub s2: f64,
    /// `p = kappa^2`
    pub p: f64,
    pub f2: f64,
    pub j: f64,
    pub eps: f64,
}

fn unit(s: &BackgroundSample) -> Result<()> {
    if s.is_unit() {
        Ok(())
    } else {
        Err(Error::CNotUnit(s.c))
    }
}

fn image(s: &BackgroundSample, y: &DVector<f64>) -> Result<(ConformalImage, crate::kinematics::KinematicScalars)> {
    unit(s)?;
    let (_, k) = crate::kinematics::kinematics(s, y)?;
    let f2 = k.f2();
    let kappa = f2.abs().powf((1.0 - k.h) / 2.0) / k.h;
    let v = y + &s.b_contra * k.b;
    let zeta = (v * k.h - &s.b_contra * k.a) * (k.j / (kappa * k.h));
    let s2 = (&s.a * &zeta).dot(&zeta);
    Ok((ConformalImage { zeta, kappa, s2, p: kappa * kappa, f2, j: k.j, eps: k.eps }, k))
}

pub fn zeta_map(s: &BackgroundSample, y: &DVector<f64>) -> Result<ConformalImage> {
    image(s, y).map(|(c, _)| c)
}

/// `zeta^m_n = d zeta^m / d y^n`.
pub fn zeta_jacobian(s: &BackgroundSample, y: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (im, k) = image(s, y)?;
    k.require_q()?;
    let m = MetricBundle::new(s, y)?;
    let n = s.dim();
    let scale = k.j / (im.kappa * k.h);
    let v_cov = &m.aux.v_cov;
    let row = &s.b_cov + v_cov * (k.eps * k.g / (2.0 * k.q));
    let e = (DMatrix::identity(n, n) * k.h + &s.b_contra * s.b_cov.transpose() * k.h - &s.b_contra * row.transpose())
        * scale;
    let kappa_n = &m.y_cov * ((1.0 - k.h) / im.f2);
    Ok(e + &im.zeta * (m.c_cov.transpose() / n as f64 - kappa_n.transpose()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushforwardCheck {
    /// `max |s^ij - a^ij / kappa^2|` over `max |a^ij / kappa^2|`
    pub residual: f64,
    pub det: f64,
    /// `(J / kappa)^N`
    pub det_expected: f64,
}

pub fn pushforward_metric_check(s: &BackgroundSample, y: &DVector<f64>) -> Result<PushforwardCheck> {
    let z = zeta_jacobian(s, y)?;
    let im = zeta_map(s, y)?;
    let m = MetricBundle::new(s, y)?;
    let sij = &z * &m.g_contra * z.transpose();
    let want = &s.a_inv / (im.kappa * im.kappa);
    Ok(PushforwardCheck {
        residual: (sij - &want).amax() / want.amax(),
        det: z.determinant(),
        det_expected: (im.j / im.kappa).powi(s.dim() as i32),
    })
}

/// Recovers `y` from `zeta`; the sector follows the sign of `S^2`.
pub fn zeta_inverse(s: &BackgroundSample, zeta: &DVector<f64>) -> Result<DVector<f64>> {
    unit(s)?;
    if zeta.len() != s.dim() {
        return Err(Error::Dimension { expected: s.dim(), got: zeta.len() });
    }
    let g = s.g;
    let s2 = (&s.a * zeta).dot(zeta);
    let tau = TAU_CLS * zeta.norm_squared();
    let eps = if s2 > tau {
        1.0
    } else if s2 < -tau {
        -1.0
    } else {
        return Err(Error::UnsupportedSector);
    };
    if eps < 0.0 && g.abs() >= 2.0 {
        return Err(Error::ChargeRange(g));
    }
    let h = (1.0 + eps * g * g / 4.0).sqrt();
    let zb = zeta.dot(&s.b_cov);
    let root = s2.abs().sqrt();
    let f = if eps > 0.0 {
        (zb / root).asinh()
    } else {
        let c = -zb / root;
        if c.abs() > 1.0 + CLAMP {
            return Err(Error::DomainError(c));
        }
        -c.clamp(-1.0, 1.0).acos()
    };
    let chi = f / h;
    let j = (-g * chi / 2.0).exp();
    let z0 = s2.abs().powf(1.0 / (2.0 * h));
    let (_, t2, _) = chart_trig(chi, g, eps);
    let b = if eps > 0.0 { z0 * t2 } else { -z0 * t2 };
    let kappa = (z0 * z0).powf((1.0 - h) / 2.0) / h;
    let y = (zeta + &s.b_contra * zb) * (kappa / j) - &s.b_contra * b;
    let tag = classify(s, &y).tag;
    let want = if eps > 0.0 { SectorTag::TimeFuture } else { SectorTag::SpaceLike };
    if tag != want {
        return Err(Error::UnsupportedSector);
    }
    Ok(y)
}

/// Angle of the factor space divided by `h`.
pub fn factor_space_angle(s: &BackgroundSample, y1: &DVector<f64>, y2: &DVector<f64>) -> Result<f64> {
    let (i1, k1) = image(s, y1)?;
    let (i2, k2) = image(s, y2)?;
    if k1.eps != k2.eps {
        return Err(Error::MixedSectors);
    }
    // frame components make a = eta, so the Gram term has no cancellation
    let u = &s.frame * &i1.zeta;
    let w = &s.frame * &i2.zeta;
    let sg = |i: usize| if i == 0 { 1.0 } else { -1.0 };
    let dot: f64 = (0..u.len()).map(|i| sg(i) * u[i] * w[i]).sum();
    let mut gram = 0.0;
    for a in 0..u.len() {
        for b in a + 1..u.len() {
            let d = u[a] * w[b] - u[b] * w[a];
            gram += sg(a) * sg(b) * d * d;
        }
    }
    let bb = (i1.s2 * i2.s2).abs();
    let al = if k1.eps > 0.0 {
        if gram > CLAMP * bb || dot <= 0.0 {
            return Err(Error::DomainError(dot / bb.sqrt()));
        }
        ((-gram).max(0.0).sqrt() / bb.sqrt()).asinh()
    } else {
        if gram < -CLAMP * bb {
            return Err(Error::DomainError(-dot / bb.sqrt()));
        }
        gram.max(0.0).sqrt().atan2(-dot)
    };
    Ok(al / k1.h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorCurvature {
    /// Mean sectional value over the grid.
    pub value: f64,
    /// Max deviation from the mean.
    pub spread: f64,
    pub points: usize,
}

/// Point on `|S^2| = 1` in frame components and its tangent frame, for coordinates
/// `m = (u, theta_1, .., theta_{N-2})`.
fn sphere_point(m: &[f64], eps: f64) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.len() + 1;
    let th = &m[1..];
    let k = th.len();
    // unit vector on S^{N-2} and its derivatives
    let mut e = vec![0.0; k + 1];
    let mut de = vec![vec![0.0; k + 1]; k];
    let mut prod = 1.0;
    for i in 0..=k {
        e[i] = if i < k { prod * th[i].cos() } else { prod };
        prod *= if i < k { th[i].sin() } else { 1.0 };
    }
    for j in 0..k {
        for i in 0..=k {
            if i < j {
                continue;
            }
            let mut val = 1.0;
            for l in 0..i.min(k) {
                val *= if l == j { th[l].cos() } else { th[l].sin() };
            }
            if i < k {
                val *= if i == j { -th[i].sin() } else { th[i].cos() };
            }
            de[j][i] = val;
        }
    }
    let u = m[0];
    let (a, b, da, db) = if eps > 0.0 { (u.cosh(), u.sinh(), u.sinh(), u.cosh()) } else { (u.sinh(), u.cosh(), u.cosh(), u.sinh()) };
    let mut l = DVector::zeros(n);
    let mut la = DMatrix::zeros(n, n - 1);
    l[0] = a;
    la[(0, 0)] = da;
    for i in 0..=k {
        l[i + 1] = b * e[i];
        la[(i + 1, 0)] = db * e[i];
        for j in 0..k {
            la[(i + 1, j + 1)] = b * de[j][i];
        }
    }
    (l, la)
}

/// Christoffels `gamma[c][(a, b)]` of `metric` by central differences of step `dm`.
fn christoffel_fd(metric: &dyn Fn(&[f64]) -> DMatrix<f64>, m: &[f64], dm: f64) -> Vec<DMatrix<f64>> {
    let d = m.len();
    let i0 = metric(m);
    let inv = i0.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(d, d));
    let di: Vec<DMatrix<f64>> = (0..d)
        .map(|k| {
            let (mut p, mut q) = (m.to_vec(), m.to_vec());
            p[k] += dm;
            q[k] -= dm;
            (metric(&p) - metric(&q)) / (2.0 * dm)
        })
        .collect();
    (0..d)
        .map(|c| {
            DMatrix::from_fn(d, d, |a, b| {
                0.5 * (0..d).map(|e| inv[(c, e)] * (di[b][(e, a)] + di[a][(e, b)] - di[e][(a, b)])).sum::<f64>()
            })
        })
        .collect()
}

/// Sectional value `I_acbd / (i_cb i_ad - i_cd i_ab)` of the unit sphere of the factor
/// metric, on a 32 x 32 grid, with `i_ab = t_ij L^i_a L^j_b` and `t = p a`.
pub fn factor_space_curvature(s: &BackgroundSample, sector: SectorTag) -> Result<FactorCurvature> {
    unit(s)?;
    let n = s.dim();
    if n < 3 {
        return Err(Error::Dimension { expected: 3, got: n });
    }
    let eps = match sector {
        SectorTag::TimeFuture => 1.0,
        SectorTag::SpaceLike => -1.0,
        SectorTag::Unsupported => return Err(Error::UnsupportedSector),
    };
    if eps < 0.0 && s.g.abs() >= 2.0 {
        return Err(Error::ChargeRange(s.g));
    }
    let h = (1.0 + eps * s.g * s.g / 4.0).sqrt();
    let eta = s.eta();
    let metric = |m: &[f64]| -> DMatrix<f64> {
        let (l, la) = sphere_point(m, eps);
        let s2 = (&eta * &l).dot(&l);
        let p = s2.abs().powf((1.0 - h) / h) / (h * h);
        la.transpose() * &eta * la * p
    };
    let d = n - 1;
    const GRID: usize = 32;
    const STEP: f64 = 1e-4;
    let mut values = Vec::with_capacity(GRID * GRID);
    for iu in 0..GRID {
        for it in 0..GRID {
            let mut m = vec![0.0; d];
            m[0] = 0.2 + 1.0 * iu as f64 / (GRID - 1) as f64;
            m[1] = 0.3 + 2.5 * it as f64 / (GRID - 1) as f64;
            for (k, mk) in m.iter_mut().enumerate().skip(2) {
                *mk = 0.4 + 0.3 * k as f64;
            }
            let at = |dm: f64| {
                let gam = christoffel_fd(&metric, &m, dm);
                let dgam: Vec<Vec<DMatrix<f64>>> = (0..d)
                    .map(|k| {
                        let (mut p, mut q) = (m.clone(), m.clone());
                        p[k] += dm;
                        q[k] -= dm;
                        let gp = christoffel_fd(&metric, &p, dm);
                        let gq = christoffel_fd(&metric, &q, dm);
                        (0..d).map(|c| (&gp[c] - &gq[c]) / (2.0 * dm)).collect()
                    })
                    .collect();
                let i0 = metric(&m);
                // I_a^c_bd = d_d G^c_ab - d_b G^c_ad + G^e_ab G^c_ed - G^e_ad G^c_eb
                let up = |a: usize, c: usize, b: usize, dd: usize| {
                    let mut v = dgam[dd][c][(a, b)] - dgam[b][c][(a, dd)];
                    for e in 0..d {
                        v += gam[e][(a, b)] * gam[c][(e, dd)] - gam[e][(a, dd)] * gam[c][(e, b)];
                    }
                    v
                };
                let (mut num, mut den) = (0.0, 0.0);
                for a in 0..d {
                    for b in 0..d {
                        for dd in 0..d {
                            let ups: Vec<f64> = (0..d).map(|e| up(a, e, b, dd)).collect();
                            for c in 0..d {
                                let low: f64 = (0..d).map(|e| i0[(c, e)] * ups[e]).sum();
                                let q = i0[(c, b)] * i0[(a, dd)] - i0[(c, dd)] * i0[(a, b)];
                                num += low * q;
                                den += q * q;
                            }
                        }
                    }
                }
                num / den
            };
            // one Richardson level removes the dm^2 truncation
            values.push((4.0 * at(STEP) - at(2.0 * STEP)) / 3.0);
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let spread = values.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    Ok(FactorCurvature { value: mean, spread, points: values.len() })
}

/// Induced metric on the factor unit sphere at chart coordinates `m`, and the same tensor
/// pulled back through the inverse map from the Finsler metric `g`.
pub fn sphere_metrics(s: &BackgroundSample, sector: SectorTag, m: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    unit(s)?;
    let eps = if sector == SectorTag::TimeFuture { 1.0 } else { -1.0 };
    let h = (1.0 + eps * s.g * s.g / 4.0).sqrt();
    let (l, la) = sphere_point(m, eps);
    let eta = s.eta();
    let factor = la.transpose() * &eta * &la / (h * h);
    let zeta = &s.frame_inv * &l;
    let y = zeta_inverse(s, &zeta)?;
    let z = zeta_jacobian(s, &y)?;
    let zinv = z.try_inverse().ok_or(Error::DegenerateNu)?;
    let ya = zinv * (&s.frame_inv * la);
    let g = MetricBundle::new(s, &y)?.g_cov;
    Ok((factor, ya.transpose() * g * ya))
}
