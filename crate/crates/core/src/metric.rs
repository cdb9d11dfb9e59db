//! Closed-form Finslerian tensor stack.

use nalgebra::{DMatrix, DVector};

use crate::background::BackgroundSample;
use crate::error::{Error, Result};
use crate::kinematics::{aux_vectors, kinematics, AuxVectors, KinematicScalars, Sector};

/// Dense rank-3 tensor, `data[(i * n + j) * n + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 { n, data: vec![0.0; n * n * n] }
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.n;
        self.data[(i * n + j) * n + k] = v;
    }

    /// `T_ijk w^k`
    pub fn contract_last(&self, w: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| (0..self.n).map(|k| self.get(i, j, k) * w[k]).sum())
    }
}

/// Dense rank-4 tensor, `data[((i * n + j) * n + m) * n + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Tensor4 {
    pub fn get(&self, i: usize, j: usize, m: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + m) * n + l]
    }

    /// `T(X, Y, Z, W)`
    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>, w: &DVector<f64>) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    for l in 0..n {
                        s += self.get(i, j, m, l) * x[i] * y[j] * z[m] * w[l];
                    }
                }
            }
        }
        s
    }
}

/// Everything at one `(x, y)`.
#[derive(Debug, Clone)]
pub struct MetricBundle {
    pub y: DVector<f64>,
    pub sector: Sector,
    pub k: KinematicScalars,
    pub aux: AuxVectors,
    pub f2: f64,
    pub y_cov: DVector<f64>,
    pub g_cov: DMatrix<f64>,
    pub g_contra: DMatrix<f64>,
    pub det_ratio: f64,
    pub c_cov: DVector<f64>,
    pub c_contra: DVector<f64>,
    pub cc: f64,
    pub h_ang: DMatrix<f64>,
    pub cartan: Tensor3,
}

impl MetricBundle {
    pub fn new(s: &BackgroundSample, y: &DVector<f64>) -> Result<Self> {
        let (sector, k) = kinematics(s, y)?;
        k.require_nu()?;
        let aux = aux_vectors(s, y, &k)?;
        let y_cov = y_cov_from(s, &k, &aux);
        let g_cov = g_cov_from(s, &k, &aux);
        let g_contra = g_contra_from(s, y, &k, &aux);
        let (c_cov, c_contra, cc) = cartan_from(s, y, &k, &aux);
        let f2 = k.f2();
        let h_ang = &g_cov - &y_cov * y_cov.transpose() / f2;
        let cartan = cartan_tensor_from(&k, &c_cov, cc, &h_ang);
        Ok(MetricBundle {
            y: y.clone(),
            sector,
            det_ratio: det_ratio_from(&k),
            k,
            aux,
            f2,
            y_cov,
            g_cov,
            g_contra,
            c_cov,
            c_contra,
            cc,
            h_ang,
            cartan,
        })
    }

    pub fn eps(&self) -> f64 {
        self.k.eps
    }

    pub fn indicatrix_curvature(&self) -> IndicatrixCurvature {
        indicatrix_from(self)
    }
}

fn y_cov_from(s: &BackgroundSample, k: &KinematicScalars, w: &AuxVectors) -> DVector<f64> {
    (&w.u - &s.b_cov * (k.g * k.q)) * k.j2()
}

fn g_cov_from(s: &BackgroundSample, k: &KinematicScalars, w: &AuxVectors) -> DMatrix<f64> {
    let (g, q, b, bb) = (k.g, k.q, k.b, k.big_b);
    let bc = &s.b_cov;
    let v = &w.v_cov;
    let corr = bc * bc.transpose() * (-q * (b + g * q)) + (bc * v.transpose() + v * bc.transpose()) * q
        - v * v.transpose() * (k.eps * b / q);
    (&s.a - corr * (g / bb)) * k.j2()
}

fn g_contra_from(s: &BackgroundSample, _y: &DVector<f64>, k: &KinematicScalars, w: &AuxVectors) -> DMatrix<f64> {
    let (g, q, b, bb, c2) = (k.g, k.q, k.b, k.big_b, k.c * k.c);
    let bu = &s.b_contra;
    let v = &w.v_contra;
    let corr = bu * bu.transpose() * (-b * q) + (bu * v.transpose() + v * bu.transpose()) * q
        - v * v.transpose() * (k.eps * (b + g * c2 * q) / k.nu);
    (&s.a_inv + corr * (g / bb)) / k.j2()
}

fn det_ratio_from(k: &KinematicScalars) -> f64 {
    (k.nu / k.q) * k.j2().powi(k.n as i32)
}

fn cartan_from(
    s: &BackgroundSample,
    y: &DVector<f64>,
    k: &KinematicScalars,
    w: &AuxVectors,
) -> (DVector<f64>, DVector<f64>, f64) {
    let c_cov = &w.e * (k.g / (2.0 * k.big_b) * k.q / k.x);
    let f2 = k.f2();
    let c_contra = (&s.b_contra * (-k.big_b) + y * k.b_hat_factor()) * (k.eps * k.g / (2.0 * f2 * k.x * k.nu));
    let inv_x = 1.0 / k.x;
    let cc = -k.eps * (k.g * k.g / 4.0) * inv_x * inv_x * (k.n as f64 + 1.0 - inv_x) / f2;
    (c_cov, c_contra, cc)
}

fn cartan_tensor_from(k: &KinematicScalars, c: &DVector<f64>, cc: f64, h: &DMatrix<f64>) -> Tensor3 {
    let n = k.n;
    let mut t = Tensor3::zeros(n);
    if cc == 0.0 {
        return t;
    }
    let w = k.n as f64 + 1.0 - 1.0 / k.x;
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let v = c[i] * h[(j, l)] + c[j] * h[(i, l)] + c[l] * h[(i, j)] - w * c[i] * c[j] * c[l] / cc;
                t.set(i, j, l, k.x * v);
            }
        }
    }
    t
}

/// Signed `F^2`. Valid on the `b` axis, where `1/q` quantities are not.
pub fn metric_function(s: &BackgroundSample, y: &DVector<f64>) -> Result<f64> {
    Ok(kinematics(s, y)?.1.f2())
}

/// `y_i = (u_i - g q b_i) J^2`; valid at `q = 0`.
pub fn covariant_momentum(s: &BackgroundSample, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (_, k) = kinematics(s, y)?;
    Ok((&s.a * y - &s.b_cov * (k.g * k.q)) * k.j2())
}

pub fn metric_tensor(s: &BackgroundSample, y: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (_, k) = kinematics(s, y)?;
    k.require_q()?;
    Ok(g_cov_from(s, &k, &aux_vectors(s, y, &k)?))
}

pub fn inverse_metric(s: &BackgroundSample, y: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (_, k) = kinematics(s, y)?;
    k.require_nu()?;
    Ok(g_contra_from(s, y, &k, &aux_vectors(s, y, &k)?))
}

/// `det g / det a = (nu / q) J^{2N}`
pub fn determinant_ratio(s: &BackgroundSample, y: &DVector<f64>) -> Result<f64> {
    let (_, k) = kinematics(s, y)?;
    k.require_nu()?;
    Ok(det_ratio_from(&k))
}

/// `(C_i, C^i, C_h C^h)`
pub fn cartan_vector(s: &BackgroundSample, y: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let (_, k) = kinematics(s, y)?;
    k.require_nu()?;
    Ok(cartan_from(s, y, &k, &aux_vectors(s, y, &k)?))
}

pub fn cartan_tensor(s: &BackgroundSample, y: &DVector<f64>) -> Result<Tensor3> {
    Ok(MetricBundle::new(s, y)?.cartan)
}

/// Indicatrix curvature tensor and its sectional value.
#[derive(Debug, Clone)]
pub struct IndicatrixCurvature {
    /// `R_ijmn = C^h_jm C_ihn - C^h_jn C_ihm` (all indices lowered)
    pub tensor: Tensor4,
    /// `-eps (1 + K)` with `K` the mean of `F^2 R(X,Y,X,Y) / (h_XX h_YY - h_XY^2)`
    pub scalar: f64,
    /// Largest deviation of the sectional value from `scalar` over the sampled planes.
    pub spread: f64,
}

fn indicatrix_from(m: &MetricBundle) -> IndicatrixCurvature {
    let n = m.k.n;
    // C^h_jm
    let mut up = Tensor3::zeros(n);
    for h in 0..n {
        for j in 0..n {
            for l in 0..n {
                let v: f64 = (0..n).map(|a| m.g_contra[(h, a)] * m.cartan.get(a, j, l)).sum();
                up.set(h, j, l, v);
            }
        }
    }
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for h in 0..n {
                        s += up.get(h, j, a) * m.cartan.get(i, h, l) - up.get(h, j, l) * m.cartan.get(i, h, a);
                    }
                    data[((i * n + j) * n + a) * n + l] = s;
                }
            }
        }
    }
    let tensor = Tensor4 { n, data };

    // planes spanned by coordinate axes projected off y
    let dirs: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            project_out(m, &e)
        })
        .collect();
    let mut values = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (x, w) = (&dirs[i], &dirs[j]);
            let hxx = (&m.h_ang * x).dot(x);
            let hyy = (&m.h_ang * w).dot(w);
            let hxy = (&m.h_ang * w).dot(x);
            let den = hxx * hyy - hxy * hxy;
            let scale = (hxx.abs() * hyy.abs()).max(f64::MIN_POSITIVE);
            if den.abs() < 1e-6 * scale {
                continue;
            }
            values.push(m.f2 * tensor.eval(x, w, x, w) / den);
        }
    }
    let mean_k = values.iter().sum::<f64>() / values.len().max(1) as f64;
    let spread = values.iter().fold(0.0f64, |s, v| s.max((v - mean_k).abs()));
    IndicatrixCurvature { tensor, scalar: -m.k.eps * (1.0 + mean_k), spread }
}

/// `w - (y_i w^i / F^2) y`
fn project_out(m: &MetricBundle, w: &DVector<f64>) -> DVector<f64> {
    w - &m.y * (m.y_cov.dot(w) / m.f2)
}

pub fn indicatrix_curvature(s: &BackgroundSample, y: &DVector<f64>) -> Result<IndicatrixCurvature> {
    Ok(MetricBundle::new(s, y)?.indicatrix_curvature())
}

/// Frame components of `y`, `y_i` and of the metric.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameComponents {
    pub g_pq: DMatrix<f64>,
    pub g_up_pq: DMatrix<f64>,
    pub r_up: DVector<f64>,
    pub r_down: DVector<f64>,
}

/// Congruence transform of the coordinate tensors by the frame.
pub fn frame_components(s: &BackgroundSample, y: &DVector<f64>) -> Result<FrameComponents> {
    let m = MetricBundle::new(s, y)?;
    let hi = &s.frame_inv;
    Ok(FrameComponents {
        g_pq: hi.transpose() * &m.g_cov * hi,
        g_up_pq: &s.frame * &m.g_contra * s.frame.transpose(),
        r_up: &s.frame * y,
        r_down: hi.transpose() * &m.y_cov,
    })
}

/// The same components from the closed forms written in the frame, with
/// `R^{N-1} = z`, `b = c z` and the remaining legs `a = 0 .. N-2`.
pub fn frame_components_closed(s: &BackgroundSample, y: &DVector<f64>) -> Result<FrameComponents> {
    let (_, k) = kinematics(s, y)?;
    k.require_nu()?;
    let n = k.n;
    let l = n - 1;
    let r = &s.frame * y;
    let z = r[l];
    let e = s.eta();
    let (g, q, b, bb, c, eps, j2, nu) = (k.g, k.q, k.b, k.big_b, k.c, k.eps, k.j2(), k.nu);
    let beta = k.b_hat_factor();
    let er: DVector<f64> = DVector::from_fn(n, |a, _| if a < l { e[(a, a)] * r[a] } else { 0.0 });
    let w = q * q - eps * b * b;

    let mut g_pq = DMatrix::zeros(n, n);
    let mut g_up = DMatrix::zeros(n, n);
    for a in 0..l {
        for d in 0..l {
            g_pq[(a, d)] = (e[(a, d)] + eps * g * er[a] * er[d] * b / (bb * q)) * j2;
            g_up[(a, d)] = (e[(a, d)] - eps * g / (bb * nu) * beta * r[a] * r[d]) / j2;
        }
        let off = g / (bb * q) * (-eps * b * z - w * c) * er[a] * j2;
        g_pq[(l, a)] = off;
        g_pq[(a, l)] = off;
        let off_up = -eps * g / (bb * nu) * (c * bb + beta * z) * r[a] / j2;
        g_up[(l, a)] = off_up;
        g_up[(a, l)] = off_up;
    }
    g_pq[(l, l)] = (-1.0 + g / (bb * q) * ((g * q * q * q - b * w) * c * c + eps * b * z * z + 2.0 * w * b)) * j2;
    g_up[(l, l)] = (-1.0 + eps * g / (bb * nu) * ((b * c * c - 2.0 * b) * bb - beta * z * z)) / j2;

    let mut r_down = DVector::zeros(n);
    for a in 0..l {
        r_down[a] = er[a] * j2;
    }
    r_down[l] = -beta / c * j2;
    Ok(FrameComponents { g_pq, g_up_pq: g_up, r_up: r, r_down })
}

/// `F^2 g^ij t_j` through the expansion in `a^ij t_j`, `b^i`, `C^i` and `y^i`.
pub fn raised_expansion(s: &BackgroundSample, y: &DVector<f64>, t: &DVector<f64>) -> Result<DVector<f64>> {
    let m = MetricBundle::new(s, y)?;
    let k = &m.k;
    let c2 = k.c * k.c;
    let bt = s.b_contra.dot(t);
    let yt = y.dot(t);
    let fx = m.f2 * k.x;
    Ok((&s.a_inv * t + &s.b_contra * (bt / c2)) * k.big_b + &m.c_contra * (2.0 * k.eps * k.q / (k.g * c2) * fx * bt)
        - &m.c_contra * (2.0 * (k.b * bt / c2 + yt) * fx)
        - y * (k.b * bt / c2))
}

/// `R_ijmn` from the expansion in `h` and `C`, and its two contractions.
pub fn curvature_expansion(m: &MetricBundle) -> (Tensor4, DMatrix<f64>, f64) {
    let n = m.k.n;
    let x2 = m.k.x * m.k.x;
    let w = n as f64 - 1.0 / m.k.x;
    let (h, c, cc) = (&m.h_ang, &m.c_cov, m.cc);
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for l in 0..n {
                    let v = -cc * x2 * (h[(i, a)] * h[(j, l)] - h[(i, l)] * h[(j, a)])
                        + x2 * w
                            * (c[i] * c[a] * h[(j, l)] - c[i] * c[l] * h[(j, a)] + c[j] * c[l] * h[(i, a)]
                                - c[j] * c[a] * h[(i, l)]);
                    data[((i * n + j) * n + a) * n + l] = v;
                }
            }
        }
    }
    let nf = n as f64;
    let ric = h * (-cc * x2 * (nf - 2.0)) + (c * c.transpose() * (nf - 3.0) + h * cc) * (x2 * w);
    let scal = -cc * x2 * (nf - 2.0) * (nf - 1.0) + x2 * w * cc * (2.0 * nf - 4.0);
    (Tensor4 { n, data }, ric, scal)
}

pub fn require_dim(s: &BackgroundSample, n: usize) -> Result<()> {
    if s.dim() == n {
        Ok(())
    } else {
        Err(Error::Dimension { expected: n, got: s.dim() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::parse_config;

    const DB: &str = "dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1\ng = 0.6\n";

    fn sample(text: &str) -> BackgroundSample {
        parse_config(text).unwrap().sample(&[0.0; 4]).unwrap()
    }

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn desk_values() {
        let s = sample(DB);
        let f2 = metric_function(&s, &v(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((f2 - 0.8437305828).abs() < 1e-9);
        assert_eq!(metric_function(&s, &v(&[0.0, 0.0, 0.0, -1.0])).unwrap(), -1.0);
        let f2s = metric_function(&s, &v(&[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((f2s + 3.2531637879).abs() < 1e-9);
        let yc = covariant_momentum(&s, &v(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((yc[0] - 0.8437305828).abs() < 1e-9);
        assert!((yc[3] + 0.6 * 0.8437305828).abs() < 1e-9);
        let d = determinant_ratio(&s, &v(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((d - 0.8437305828f64.powi(4)).abs() < 1e-9);
    }

    #[test]
    fn zero_charge_is_pseudo_riemannian() {
        let s = sample(&DB.replace("g = 0.6", "g = 0"));
        let y = v(&[1.0, 0.3, -0.2, 0.1]);
        let m = MetricBundle::new(&s, &y).unwrap();
        assert!((m.f2 - (&s.a * &y).dot(&y)).abs() < 1e-15);
        assert!((&m.g_cov - &s.a).amax() < 1e-15);
        assert_eq!(m.det_ratio, 1.0);
        assert!(m.cartan.data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn reciprocity_and_signature() {
        let s = sample(&DB.replace("b.3 = 1", "b.2 = 0.3\nb.3 = 0.85"));
        for y in [[1.0, 0.2, -0.1, 0.3], [0.1, 1.0, 0.3, 0.4], [0.3, 0.2, 0.1, -0.9]] {
            let m = MetricBundle::new(&s, &v(&y)).unwrap();
            assert!((&m.g_contra * &m.g_cov - DMatrix::identity(4, 4)).amax() < 1e-12);
            let det = m.g_cov.determinant() / s.a.determinant();
            assert!((det - m.det_ratio).abs() < 1e-12 * det.abs());
            let ev = nalgebra::SymmetricEigen::new(m.g_cov.clone()).eigenvalues;
            assert_eq!(ev.iter().filter(|&&x| x > 0.0).count(), 1);
        }
    }

    #[test]
    fn cartan_contraction_constant() {
        let s = sample(DB);
        for (y, want) in [([1.0, 0.2, -0.1, 0.3], -1.44), ([0.1, 1.0, 0.3, 0.4], 1.44)] {
            let m = MetricBundle::new(&s, &v(&y)).unwrap();
            assert!((m.f2 * m.cc - want).abs() < 1e-12);
            assert!((m.f2 * m.c_cov.dot(&m.c_contra) - want).abs() < 1e-12);
            assert!(m.c_cov.dot(&v(&y)).abs() < 1e-13);
            let trace: DVector<f64> =
                DVector::from_fn(4, |i, _| (0..4).map(|j| (0..4).map(|l| m.g_contra[(j, l)] * m.cartan.get(i, j, l)).sum::<f64>()).sum());
            assert!((trace - &m.c_cov).amax() < 1e-12);
        }
    }

    #[test]
    fn curvature_constants() {
        let s = sample(DB);
        let t = indicatrix_curvature(&s, &v(&[1.0, 0.2, -0.1, 0.3])).unwrap();
        assert!((t.scalar + 1.09).abs() < 1e-12);
        assert!(t.spread < 1e-12);
        let sp = indicatrix_curvature(&s, &v(&[0.1, 1.0, 0.3, 0.4])).unwrap();
        assert!((sp.scalar - 0.91).abs() < 1e-12);
    }

    #[test]
    fn curvature_expansion_and_contractions() {
        let s = sample(&DB.replace("b.3 = 1", "b.2 = 0.3\nb.3 = 0.85"));
        for y in [[1.0, 0.2, -0.1, 0.3], [0.1, 1.0, 0.3, 0.4]] {
            let m = MetricBundle::new(&s, &v(&y)).unwrap();
            let direct = m.indicatrix_curvature().tensor;
            let (exp, ric, scal) = curvature_expansion(&m);
            let scale = exp.data.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let diff = direct.data.iter().zip(&exp.data).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(diff < 1e-10 * scale, "{diff} vs {scale}");
            let gi = &m.g_contra;
            let ric_direct = DMatrix::from_fn(4, 4, |i, a| {
                (0..4).map(|j| (0..4).map(|l| direct.get(i, j, a, l) * gi[(j, l)]).sum::<f64>()).sum()
            });
            assert!((&ric_direct - &ric).amax() < 1e-10 * ric.amax().max(1.0));
            let scal_direct: f64 = (0..4).map(|i| (0..4).map(|a| ric_direct[(i, a)] * gi[(i, a)]).sum::<f64>()).sum();
            assert!((scal_direct - scal).abs() < 1e-10 * scal.abs().max(1.0));
        }
    }

    #[test]
    fn raised_expansion_matches() {
        let s = sample(&DB.replace("b.3 = 1", "b.2 = 0.3\nb.3 = 0.85"));
        let t = v(&[0.3, -1.2, 0.5, 0.8]);
        for y in [[1.0, 0.2, -0.1, 0.3], [0.1, 1.0, 0.3, 0.4]] {
            let y = v(&y);
            let m = MetricBundle::new(&s, &y).unwrap();
            let direct = &m.g_contra * &t * m.f2;
            let exp = raised_expansion(&s, &y, &t).unwrap();
            assert!((&direct - &exp).amax() < 1e-10 * direct.amax(), "{direct} {exp}");
        }
    }

    #[test]
    fn frame_closed_forms() {
        let text = "dim = 4\na.0.0 = 1 + 0.1*x1\na.0.1 = 0.05\na.1.1 = -1\na.2.2 = -1.2\na.3.3 = -1\nb.1 = 0.2\nb.3 = 0.8\ng = 0.7\n";
        let s = parse_config(text).unwrap().sample(&[0.0, 0.2, 0.0, 0.0]).unwrap();
        for y in [[1.0, 0.2, -0.1, 0.3], [0.1, 1.0, 0.3, 0.4], [0.2, -0.3, 0.9, -0.5]] {
            let y = v(&y);
            let a = frame_components(&s, &y).unwrap();
            let b = frame_components_closed(&s, &y).unwrap();
            assert!((&a.g_pq - &b.g_pq).amax() < 1e-12, "{} {}", a.g_pq, b.g_pq);
            assert!((&a.g_up_pq - &b.g_up_pq).amax() < 1e-12);
            assert!((&a.r_down - &b.r_down).amax() < 1e-12);
            assert!((&a.g_up_pq * &a.g_pq - DMatrix::identity(4, 4)).amax() < 1e-12);
            let (_, k) = kinematics(&s, &y).unwrap();
            let r = &a.r_up;
            let q2 = k.eps * (r[0] * r[0] - r[1] * r[1] - r[2] * r[2] - k.one_minus_c2() * r[3] * r[3]);
            assert!((q2 - k.q * k.q).abs() < 1e-12);
        }
        let s = sample(DB);
        let fc = frame_components(&s, &v(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((fc.g_pq[(0, 0)] - 0.8437305828).abs() < 1e-9);
    }
}
