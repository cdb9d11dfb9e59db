//! Hamiltonian function `H^2` on covectors, the numeric inverse for `c < 1`,
//! and the Hamilton-Jacobi residual.

use nalgebra::DVector;

use crate::background::{BackgroundField, BackgroundSample, Expr};
use crate::error::{Error, Result};
use crate::kinematics::{cone_scalars, TAU_CLS};

#[derive(Debug, Clone, PartialEq)]
pub struct CovectorStack {
    pub y_cov: DVector<f64>,
    pub eps: f64,
    /// `r^ij y_i y_j`
    pub gamma_hat: f64,
    pub b_hat: f64,
    pub q_hat: f64,
    pub big_b_hat: f64,
    pub f_hat: f64,
    pub j_hat: f64,
}

impl CovectorStack {
    /// `B^ J^2`, the `c = 1` Hamiltonian.
    pub fn h2(&self) -> f64 {
        self.big_b_hat * self.j_hat * self.j_hat
    }
}

/// Sector of a covector: time-like needs `gamma^ > 0`, `B^ > 0` and a positive frame
/// time component; space-like needs `gamma^ <= 0` and `B^ < 0`.
pub fn covector_stack(s: &BackgroundSample, y_cov: &DVector<f64>) -> Result<CovectorStack> {
    if y_cov.len() != s.dim() {
        return Err(Error::Dimension { expected: s.dim(), got: y_cov.len() });
    }
    let g = s.g;
    let b_hat = y_cov.dot(&s.b_contra);
    let gamma_hat = (&s.a_inv * y_cov).dot(y_cov) + b_hat * b_hat;
    let norm2 = y_cov.norm_squared();
    let tau = TAU_CLS * norm2;
    let q_hat = gamma_hat.abs().sqrt();
    let eps = if gamma_hat > tau { 1.0 } else { -1.0 };
    if eps < 0.0 && g.abs() >= 2.0 {
        return Err(Error::ChargeRange(g));
    }
    let h = (1.0 + eps * g * g / 4.0).sqrt();
    let big_b_hat = eps * q_hat * q_hat + g * b_hat * q_hat - b_hat * b_hat;
    let f_hat = if eps > 0.0 {
        let time = y_cov.dot(&s.frame_inv.column(0));
        let (g_plus, g_minus) = (-g / 2.0 + h, -g / 2.0 - h);
        let (lo, hi) = (b_hat + g_plus * q_hat, -g_minus * q_hat - b_hat);
        if !(big_b_hat > tau && time > 0.0 && lo > 0.0 && hi > 0.0) {
            return Err(Error::UnsupportedCovector);
        }
        0.5 * (lo / hi).ln()
    } else {
        if !(big_b_hat < -tau) {
            return Err(Error::UnsupportedCovector);
        }
        (h * q_hat).atan2(b_hat - g * q_hat / 2.0) - std::f64::consts::PI
    };
    let j_hat = ((g / h) * f_hat / 2.0).exp();
    Ok(CovectorStack { y_cov: y_cov.clone(), eps, gamma_hat, b_hat, q_hat, big_b_hat, f_hat, j_hat })
}

/// Closed-form `H^2` (signed); `c = 1` only.
pub fn hamiltonian(s: &BackgroundSample, y_cov: &DVector<f64>) -> Result<f64> {
    if !s.is_unit() {
        return Err(Error::CNotUnit(s.c));
    }
    let st = covector_stack(s, y_cov)?;
    if st.eps > 0.0 {
        let g = s.g;
        let h = (1.0 + g * g / 4.0).sqrt();
        let (g_plus, g_minus) = (-g / 2.0 + h, -g / 2.0 - h);
        let lo = st.b_hat + g_plus * st.q_hat;
        let hi = -g_minus * st.q_hat - st.b_hat;
        Ok(lo.powf(-g_minus / h) * hi.powf(g_plus / h))
    } else {
        Ok(st.h2())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericHamiltonian {
    pub h2: f64,
    /// Recovered `b = b_i y^i` and `q` of the preimage vector.
    pub b: f64,
    pub q: f64,
    /// Sector of the preimage vector.
    pub eps: f64,
    pub iterations: usize,
    pub residual: f64,
}

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-12;

/// `b^` and the signed `gamma^ = r^ij y_i y_j` of a covector.
fn covector_invariants(s: &BackgroundSample, y_cov: &DVector<f64>) -> Result<(f64, f64)> {
    if y_cov.len() != s.dim() {
        return Err(Error::Dimension { expected: s.dim(), got: y_cov.len() });
    }
    let b_hat = y_cov.dot(&s.b_contra);
    let gamma_hat = (&s.a_inv * y_cov).dot(y_cov) + b_hat * b_hat;
    Ok((b_hat, gamma_hat))
}

/// `W = q^2 - 2(1-c^2) eps g b q - c^2(1-c^2) eps g^2 q^2` as `alpha q^2 - beta b q`.
fn w_coeffs(g: f64, c2: f64, eps: f64) -> (f64, f64) {
    let omc2 = 1.0 - c2;
    (1.0 - c2 * omc2 * eps * g * g, 2.0 * omc2 * eps * g)
}

/// Preimage `(b, q)` from the ratio `t = b / q`. `J^2` cancels in `b^2 / (eps gamma^)`,
/// leaving `eps gamma^ (t + g c^2)^2 = b^2 (alpha - beta t)`.
fn ratio_seed(g: f64, c2: f64, eps: f64, b_hat: f64, gamma_hat: f64) -> Option<(f64, f64)> {
    let (alpha, beta) = w_coeffs(g, c2, eps);
    let e = eps * gamma_hat;
    let bb = b_hat * b_hat;
    // e t^2 + p t + r = 0
    let p = 2.0 * g * c2 * e + bb * beta;
    let r = g * g * c2 * c2 * e - bb * alpha;
    let roots: Vec<f64> = if e == 0.0 {
        if p == 0.0 { vec![] } else { vec![-r / p] }
    } else {
        let disc = p * p - 4.0 * e * r;
        if disc < 0.0 {
            return None;
        }
        let t1 = -0.5 * (p + p.signum() * disc.sqrt()) / e;
        let t2 = if t1 != 0.0 { r / (e * t1) } else { -p / e - t1 };
        vec![t1, t2]
    };
    roots.into_iter().find_map(|t| {
        let w = alpha - beta * t;
        let k = cone_scalars(t, 1.0, g, eps);
        let side = (t + g * c2) * b_hat >= 0.0;
        let sign = w * e >= 0.0 && w != 0.0;
        let cone = if eps > 0.0 { k.big_b > 0.0 } else { k.big_b < 0.0 };
        // nu / q = 1 - eps (1 - c^2) g t; a second root with nu < 0 has det g of the wrong sign
        let nu = 1.0 - eps * (1.0 - c2) * g * t > 0.0;
        (side && sign && cone && nu && k.j.is_finite()).then(|| {
            let q = (gamma_hat.abs() / w.abs()).sqrt() / (k.j * k.j);
            (t * q, q)
        })
    })
}

/// `H^2` for any `0 < c <= 1` by Newton on `b^ = (b + g c^2 q) J^2` and
/// `eps gamma^ = [q^2 - 2(1-c^2) eps g b q - c^2 (1-c^2) eps g^2 q^2] J^4`.
///
/// Below `c = 1` the sign of `gamma^` need not match the sector of the preimage,
/// so both sectors are tried, the sign of `gamma^` first. Each starts from the
/// `c = 1` inverse and falls back to the ratio reduction.
pub fn hamiltonian_numeric(s: &BackgroundSample, y_cov: &DVector<f64>) -> Result<NumericHamiltonian> {
    let (b_hat, gamma_hat) = covector_invariants(s, y_cov)?;
    let (g, c2) = (s.g, s.c * s.c);
    if !(b_hat.is_finite() && gamma_hat.is_finite()) || y_cov.norm_squared() == 0.0 {
        return Err(Error::UnsupportedCovector);
    }
    let first = if gamma_hat >= 0.0 { 1.0 } else { -1.0 };
    let unit_seed = covector_stack(s, y_cov).ok().map(|st| {
        let jj2 = st.j_hat * st.j_hat;
        (st.eps, ((st.b_hat - g * st.q_hat) * jj2, st.q_hat * jj2))
    });
    let mut last = Error::UnsupportedCovector;
    for eps in [first, -first] {
        if eps < 0.0 && g.abs() >= 2.0 {
            last = Error::ChargeRange(g);
            continue;
        }
        let seeds = [unit_seed.filter(|u| u.0 == eps).map(|u| u.1), ratio_seed(g, c2, eps, b_hat, gamma_hat)];
        for seed in seeds.into_iter().flatten() {
            match newton(g, c2, eps, b_hat, gamma_hat, seed) {
                Ok(r) => return Ok(r),
                Err(e) => last = e,
            }
        }
    }
    Err(last)
}

fn newton(g: f64, c2: f64, eps: f64, b_hat: f64, gamma_hat: f64, seed: (f64, f64)) -> Result<NumericHamiltonian> {
    let omc2 = 1.0 - c2;
    let target = eps * gamma_hat;
    let residual = |b: f64, q: f64| {
        let k = cone_scalars(b, q, g, eps);
        let j2 = k.j * k.j;
        let r1 = (b + g * c2 * q) * j2 - b_hat;
        let r2 = (q * q - 2.0 * omc2 * eps * g * b * q - c2 * omc2 * eps * g * g * q * q) * j2 * j2 - target;
        (r1, r2, k)
    };
    let admissible = |b: f64, q: f64| {
        q >= 0.0 && q - eps * omc2 * g * b > 0.0 && {
            let bb = cone_scalars(b, q, g, eps).big_b;
            if eps > 0.0 { bb > 0.0 } else { bb < 0.0 }
        }
    };

    let (mut b, mut q) = seed;
    if !admissible(b, q) {
        return Err(Error::UnsupportedCovector);
    }
    let scale = b_hat.abs().max(gamma_hat.abs().sqrt()).max(1e-300);
    let norm = |r1: f64, r2: f64| r1.abs().max(r2.abs() / scale);
    let (mut r1, mut r2, mut k) = residual(b, q);
    let mut res = norm(r1, r2);
    let done = |b: f64, q: f64, k: &crate::kinematics::ConeScalars, iterations: usize, residual: f64| NumericHamiltonian {
        h2: k.big_b * k.j * k.j,
        b,
        q,
        eps,
        iterations,
        residual,
    };
    if res <= NEWTON_TOL * scale {
        return Ok(done(b, q, &k, 0, res));
    }
    for it in 0..NEWTON_MAX_ITER {
        let j = k.j;
        let j2 = j * j;
        let (djb, djq) = (-(g / 2.0) * (q / k.big_b) * j, (g / 2.0) * (b / k.big_b) * j);
        let p = b + g * c2 * q;
        let w = q * q - 2.0 * omc2 * eps * g * b * q - c2 * omc2 * eps * g * g * q * q;
        let m11 = j2 + p * 2.0 * j * djb;
        let m12 = g * c2 * j2 + p * 2.0 * j * djq;
        let m21 = -2.0 * omc2 * eps * g * q * j2 * j2 + w * 4.0 * j2 * j * djb;
        let m22 = (2.0 * q - 2.0 * omc2 * eps * g * b - 2.0 * c2 * omc2 * eps * g * g * q) * j2 * j2 + w * 4.0 * j2 * j * djq;
        let det = m11 * m22 - m12 * m21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let db = (r1 * m22 - r2 * m12) / det;
        let dq = (m11 * r2 - m21 * r1) / det;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let (nb, nq) = (b - t * db, q - t * dq);
            if admissible(nb, nq) {
                let (n1, n2, nk) = residual(nb, nq);
                let nr = norm(n1, n2);
                if nr < res || nr <= NEWTON_TOL * scale {
                    (b, q, r1, r2, k, res) = (nb, nq, n1, n2, nk, nr);
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        let step = t * db.abs().max(dq.abs());
        if !accepted || step < NEWTON_TOL * scale.max(b.abs()).max(q) {
            if res <= 1e-10 * scale {
                return Ok(done(b, q, &k, it + 1, res));
            }
            if !accepted {
                break;
            }
        }
    }
    if res <= 1e-10 * scale {
        return Ok(done(b, q, &k, NEWTON_MAX_ITER, res));
    }
    Err(Error::NoConvergence(res))
}

/// `H^2` through the closed form when `c = 1`, otherwise by Newton.
pub fn hamiltonian_any(s: &BackgroundSample, y_cov: &DVector<f64>) -> Result<f64> {
    if s.is_unit() {
        hamiltonian(s, y_cov)
    } else {
        hamiltonian_numeric(s, y_cov).map(|h| h.h2)
    }
}

/// `H^2(x, dS/dx) - m^2`.
pub fn hj_residual(field: &BackgroundField, action: &Expr, m: f64, x: &[f64]) -> Result<f64> {
    let s = field.sample(x)?;
    let grad = (0..field.dim())
        .map(|i| action.diff(i).eval(x).map_err(Error::Eval))
        .collect::<Result<Vec<f64>>>()?;
    Ok(hamiltonian_any(&s, &DVector::from_vec(grad))? - m * m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::parse_config;
    use crate::metric::{covariant_momentum, metric_function};
    use crate::numdiff::fd_gradient;

    const DB: &str = "dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1\ng = 0.6\n";

    fn v(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    fn db() -> BackgroundSample {
        parse_config(DB).unwrap().sample(&[0.0; 4]).unwrap()
    }

    #[test]
    fn desk_values() {
        let s = db();
        let yc = v(&[0.8437305828, 0.0, 0.0, -0.5062383497]);
        assert!((hamiltonian(&s, &yc).unwrap() - 0.8437305828).abs() < 1e-9);
        let yb = covariant_momentum(&s, &v(&[0.0, 0.0, 0.0, -1.0])).unwrap();
        assert!((hamiltonian(&s, &yb).unwrap() + 1.0).abs() < 1e-14);
        let st = covector_stack(&s, &covariant_momentum(&s, &v(&[1.0, 0.0, 0.0, 0.0])).unwrap()).unwrap();
        assert!((st.b_hat - 0.5062383497).abs() < 1e-9);
        assert!((st.q_hat - 0.8437305828).abs() < 1e-9);
    }

    #[test]
    fn round_trip_both_sectors() {
        let s = db();
        for y in [[1.0, 0.2, -0.1, 0.3], [1.2, -0.3, 0.1, -0.6], [0.1, 1.0, 0.3, 0.4], [0.2, -0.5, 0.7, -0.9], [0.0, 1.0, 0.0, 0.0]] {
            let y = v(&y);
            let f2 = metric_function(&s, &y).unwrap();
            let yc = covariant_momentum(&s, &y).unwrap();
            let st = covector_stack(&s, &yc).unwrap();
            let k = crate::kinematics::kinematics(&s, &y).unwrap().1;
            assert!((st.f_hat - k.f).abs() < 1e-12);
            assert!((st.j_hat * k.j - 1.0).abs() < 1e-12);
            assert!((st.big_b_hat - k.big_b * k.j2() * k.j2()).abs() < 1e-12);
            assert!((hamiltonian(&s, &yc).unwrap() - f2).abs() < 1e-12 * f2.abs());
            assert!((hamiltonian_numeric(&s, &yc).unwrap().h2 - f2).abs() < 1e-12 * f2.abs());
            let grad = fd_gradient(|p| hamiltonian(&s, &v(p)).map(|h| h / 2.0), yc.as_slice(), &Default::default()).unwrap();
            for i in 0..4 {
                assert!((grad[i] - y[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn numeric_path_below_unit_norm() {
        let s = parse_config(&DB.replace("b.3 = 1", "b.3 = 0.9")).unwrap().sample(&[0.0; 4]).unwrap();
        assert!(matches!(hamiltonian(&s, &v(&[1.0, 0.0, 0.0, 0.0])), Err(Error::CNotUnit(_))));
        for y in [[1.0, 0.2, -0.1, 0.3], [1.2, -0.3, 0.1, -0.6], [0.1, 1.0, 0.3, 0.4], [0.2, -0.5, 0.7, -0.9]] {
            let y = v(&y);
            let f2 = metric_function(&s, &y).unwrap();
            let nh = hamiltonian_numeric(&s, &covariant_momentum(&s, &y).unwrap()).unwrap();
            assert!((nh.h2 - f2).abs() < 1e-10 * f2.abs(), "{} {f2}", nh.h2);
        }
    }

    #[test]
    fn numeric_path_picks_the_regular_preimage() {
        // gamma^ > 0 for a space-like vector, and a second (b, q) with nu < 0 solves the system
        let f = parse_config(&DB.replace("b.3 = 1", "b.1 = 0.2*x2\nb.3 = 0.9 - 0.1*x1")).unwrap();
        let s = f.sample(&[0.39255496003849766, 0.3078822476476337, 0.23924278277777045, 0.07589267934257315]).unwrap();
        let y = v(&[0.4320044782454359, 0.1373703088503901, 0.02562630861109947, -0.890979697484295]);
        let yc = covariant_momentum(&s, &y).unwrap();
        let (_, gamma_hat) = covector_invariants(&s, &yc).unwrap();
        assert!(gamma_hat > 0.0);
        let nh = hamiltonian_numeric(&s, &yc).unwrap();
        let k = crate::kinematics::kinematics(&s, &y).unwrap().1;
        assert_eq!(nh.eps, -1.0);
        assert!((nh.b - k.b).abs() < 1e-10 && (nh.q - k.q).abs() < 1e-10);
        assert!((nh.h2 - k.f2()).abs() < 1e-12);
    }

    #[test]
    fn ratio_seed_solves_the_system() {
        for (c2, eps, b, q) in [(0.81, 1.0, 0.3, 0.8), (0.64, -1.0, -0.5, 0.4), (0.9, -1.0, 0.7, 0.2)] {
            let g = 0.6;
            let k = cone_scalars(b, q, g, eps);
            let j2 = k.j * k.j;
            let b_hat = (b + g * c2 * q) * j2;
            let w = q * q - 2.0 * (1.0 - c2) * eps * g * b * q - c2 * (1.0 - c2) * eps * g * g * q * q;
            let gamma_hat = eps * w * j2 * j2;
            let (sb, sq) = ratio_seed(g, c2, eps, b_hat, gamma_hat).unwrap();
            assert!((sb - b).abs() < 1e-12 && (sq - q).abs() < 1e-12, "{sb} {sq}");
        }
    }

    #[test]
    fn charge_free_limit() {
        let s = parse_config(&DB.replace("g = 0.6", "g = 0").replace("b.3 = 1", "b.3 = 0.7"))
            .unwrap()
            .sample(&[0.0; 4])
            .unwrap();
        for yc in [[1.0, 0.2, -0.1, 0.3], [0.1, 1.0, 0.3, 0.4]] {
            let yc = v(&yc);
            let direct = (&s.a_inv * &yc).dot(&yc);
            assert!((hamiltonian_numeric(&s, &yc).unwrap().h2 - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn inadmissible_covectors() {
        let s = db();
        assert!(matches!(hamiltonian(&s, &v(&[-1.0, 0.0, 0.0, 0.0])), Err(Error::UnsupportedCovector)));
        // null covector of a
        assert!(matches!(hamiltonian(&s, &v(&[1.0, 1.0, 0.0, 0.0])), Err(Error::UnsupportedCovector)));
    }

    #[test]
    fn hamilton_jacobi() {
        let f = parse_config(DB).unwrap();
        let s0 = Expr::parse("x0").unwrap();
        let want = hamiltonian(&f.sample(&[0.0; 4]).unwrap(), &v(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!((hj_residual(&f, &s0, 0.5, &[0.0; 4]).unwrap() - (want - 0.25)).abs() < 1e-15);
        let free = parse_config(&DB.replace("g = 0.6", "g = 0")).unwrap();
        assert_eq!(hj_residual(&free, &s0, 1.0, &[0.3; 4]).unwrap(), 0.0);
        let bad = Expr::parse("-x0").unwrap();
        assert!(matches!(hj_residual(&f, &bad, 1.0, &[0.0; 4]), Err(Error::UnsupportedCovector)));
    }

    #[test]
    fn arctan_addition_identities() {
        use std::f64::consts::PI;
        for i in 1..40 {
            let g = 2.0 * i as f64 / 40.0;
            let h = (1.0 - g * g / 4.0).sqrt();
            let lhs = (g / h / 2.0).atan() - (g * h / (1.0 - g * g / 2.0)).atan();
            let rhs = -(g / h / 2.0).atan();
            if g * g < 2.0 {
                assert!((lhs - rhs).abs() < 1e-12);
            } else if g * g > 2.0 + 1e-9 {
                assert!((lhs - PI - rhs).abs() < 1e-12);
            }
            // the companion identity holds modulo pi for every space-like y
            let s = parse_config(&DB.replace("g = 0.6", &format!("g = {g}"))).unwrap().sample(&[0.0; 4]).unwrap();
            for y in [[0.2, -0.5, 0.7, -0.9], [0.1, 1.0, 0.3, 0.4]] {
                let y = v(&y);
                let k = crate::kinematics::kinematics(&s, &y).unwrap().1;
                let st = covector_stack(&s, &covariant_momentum(&s, &y).unwrap()).unwrap();
                let l_hat = st.q_hat - g * st.b_hat / 2.0;
                let d = (l_hat / (h * st.b_hat)).atan() - (k.l / (h * k.b)).atan() + (g * h / (1.0 - g * g / 2.0)).atan();
                let wrapped = d - PI * (d / PI).round();
                assert!(wrapped.abs() < 1e-10, "g={g}: {d}");
            }
        }
    }
}
