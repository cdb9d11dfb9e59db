//! Background fields `a_ij(x)`, `b_i(x)`, `g(x)` and their point samples.

pub mod config;
pub mod expr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
pub use config::parse_config;
pub use expr::Expr;

/// Tolerance on `c <= 1`.
const C_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BackgroundField {
    n: usize,
    a: Vec<Vec<Expr>>,
    b: Vec<Expr>,
    g: Expr,
    // da[k][i][j] = d_k a_ij, db[k][j] = d_k b_j, dg[k] = d_k g
    da: Vec<Vec<Vec<Expr>>>,
    db: Vec<Vec<Expr>>,
    dg: Vec<Expr>,
}

#[derive(Debug, Clone)]
pub struct BackgroundSample {
    pub x: DVector<f64>,
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
    pub b_cov: DVector<f64>,
    pub b_contra: DVector<f64>,
    pub c: f64,
    pub g: f64,
    pub h_time: f64,
    pub h_space: f64,
    /// `da[k][(i, j)] = d_k a_ij`
    pub da: Vec<DMatrix<f64>>,
    /// `db[(k, j)] = d_k b_j`
    pub db: DMatrix<f64>,
    pub dg: DVector<f64>,
    /// `christoffel[k][(i, j)] = a^k_ij`
    pub christoffel: Vec<DMatrix<f64>>,
    /// `nabla_b[(i, j)] = nabla_i b_j`
    pub nabla_b: DMatrix<f64>,
    /// `frame[(p, i)] = h^p_i`
    pub frame: DMatrix<f64>,
    /// `frame_inv[(i, p)] = h_p^i`; column p is the p-th leg.
    pub frame_inv: DMatrix<f64>,
}

impl BackgroundSample {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// True when `c = 1` to within rounding.
    pub fn is_unit(&self) -> bool {
        (1.0 - self.c).abs() < 1e-12
    }

    pub fn require_unit(&self) -> Result<()> {
        if self.is_unit() {
            Ok(())
        } else {
            Err(Error::CNotUnit(self.c))
        }
    }

    /// Pseudo-Euclidean signature `diag(+1, -1, ..., -1)`.
    pub fn eta(&self) -> DMatrix<f64> {
        eta(self.dim())
    }
}

pub fn eta(n: usize) -> DMatrix<f64> {
    let mut e = DMatrix::from_element(n, n, 0.0);
    e[(0, 0)] = 1.0;
    for i in 1..n {
        e[(i, i)] = -1.0;
    }
    e
}

impl BackgroundField {
    pub fn new(a: Vec<Vec<Expr>>, b: Vec<Expr>, g: Expr) -> Self {
        let n = b.len();
        let da = (0..n)
            .map(|k| a.iter().map(|row| row.iter().map(|e| e.diff(k)).collect()).collect())
            .collect();
        let db = (0..n).map(|k| b.iter().map(|e| e.diff(k)).collect()).collect();
        let dg = (0..n).map(|k| g.diff(k)).collect();
        BackgroundField { n, a, b, g, da, db, dg }
    }

    /// Constant background from numeric values.
    pub fn constant(a: &DMatrix<f64>, b: &[f64], g: f64) -> Self {
        let n = b.len();
        let a = (0..n).map(|i| (0..n).map(|j| Expr::Num(a[(i, j)])).collect()).collect();
        let b = b.iter().map(|&v| Expr::Num(v)).collect();
        Self::new(a, b, Expr::Num(g))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn g_expr(&self) -> &Expr {
        &self.g
    }

    /// Same `a` and `b`, different charge field.
    pub fn with_g(&self, g: Expr) -> Self {
        Self::new(self.a.clone(), self.b.clone(), g)
    }

    fn ev(e: &Expr, x: &[f64]) -> Result<f64> {
        e.eval(x).map_err(Error::Eval)
    }

    fn mat(&self, m: &[Vec<Expr>], x: &[f64]) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = Self::ev(&m[i][j], x)?;
            }
        }
        Ok(out)
    }

    fn vec(&self, v: &[Expr], x: &[f64]) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.n);
        for i in 0..self.n {
            out[i] = Self::ev(&v[i], x)?;
        }
        Ok(out)
    }

    /// Values of `a`, `b`, `g` at `x` without derivatives or validation.
    pub fn values(&self, x: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>, f64)> {
        self.check_dim(x)?;
        Ok((self.mat(&self.a, x)?, self.vec(&self.b, x)?, Self::ev(&self.g, x)?))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Config(format!("point has {} coordinates, dim = {}", x.len(), self.n)));
        }
        Ok(())
    }

    /// Validated sample: signature `(+ - ... -)` and `0 < c <= 1`.
    pub fn sample(&self, x: &[f64]) -> Result<BackgroundSample> {
        self.sample_with(x, true)
    }

    /// Sample without the signature and `c` checks. Used by finite-difference
    /// stencils that may step marginally outside the admissible set.
    pub fn sample_unchecked(&self, x: &[f64]) -> Result<BackgroundSample> {
        self.sample_with(x, false)
    }

    fn sample_with(&self, x: &[f64], check: bool) -> Result<BackgroundSample> {
        self.check_dim(x)?;
        let n = self.n;
        let (a, b_cov, g) = self.values(x)?;
        if check && !lorentzian(&a) {
            return Err(Error::Signature(x.to_vec()));
        }
        let a_inv = a.clone().try_inverse().ok_or_else(|| Error::Signature(x.to_vec()))?;
        let b_contra = &a_inv * &b_cov;
        let c2 = -b_cov.dot(&b_contra);
        if check && (!(c2 > 0.0) || c2.sqrt() > 1.0 + C_SLACK) {
            return Err(Error::CRange { c: c2.abs().sqrt() * c2.signum(), x: x.to_vec() });
        }
        let c = c2.abs().sqrt();

        let da: Vec<DMatrix<f64>> = (0..n).map(|k| self.mat(&self.da[k], x)).collect::<Result<_>>()?;
        let mut db = DMatrix::zeros(n, n);
        for k in 0..n {
            for j in 0..n {
                db[(k, j)] = Self::ev(&self.db[k][j], x)?;
            }
        }
        let dg = self.vec(&self.dg, x)?;
        let christoffel = christoffel(&a_inv, &da);
        let mut nabla_b = db.clone();
        for i in 0..n {
            for j in 0..n {
                nabla_b[(i, j)] -= (0..n).map(|k| b_cov[k] * christoffel[k][(i, j)]).sum::<f64>();
            }
        }
        let frame_inv = build_frame(&a, &b_contra, c).map_err(|_| {
            if check {
                Error::Signature(x.to_vec())
            } else {
                Error::Eval("frame construction failed".into())
            }
        })?;
        let frame = frame_inv.clone().try_inverse().ok_or_else(|| Error::Eval("singular frame".into()))?;

        Ok(BackgroundSample {
            x: DVector::from_column_slice(x),
            a,
            a_inv,
            b_cov,
            b_contra,
            c,
            g,
            h_time: (1.0 + g * g / 4.0).sqrt(),
            h_space: (1.0 - g * g / 4.0).max(0.0).sqrt(),
            da,
            db,
            dg,
            christoffel,
            nabla_b,
            frame,
            frame_inv,
        })
    }
}

/// One positive eigenvalue, the rest strictly negative.
fn lorentzian(a: &DMatrix<f64>) -> bool {
    let ev = SymmetricEigen::new(a.clone()).eigenvalues;
    let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = 1e-12 * scale;
    let pos = ev.iter().filter(|&&v| v > tiny).count();
    let neg = ev.iter().filter(|&&v| v < -tiny).count();
    pos == 1 && neg == a.nrows() - 1
}

/// `a^k_ij = 1/2 a^kn (d_j a_ni + d_i a_nj - d_n a_ij)`
pub fn christoffel(a_inv: &DMatrix<f64>, da: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = a_inv.nrows();
    let mut lower = vec![DMatrix::zeros(n, n); n];
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                lower[m][(i, j)] = 0.5 * (da[j][(m, i)] + da[i][(m, j)] - da[m][(i, j)]);
            }
        }
    }
    (0..n)
        .map(|k| {
            let mut out = DMatrix::zeros(n, n);
            for m in 0..n {
                let w = a_inv[(k, m)];
                if w != 0.0 {
                    out += &lower[m] * w;
                }
            }
            out
        })
        .collect()
}

/// Orthonormal legs as columns: `a(h_p, h_q) = eta_pq`, last leg `-b^i / c`.
fn build_frame(a: &DMatrix<f64>, b_contra: &DVector<f64>, c: f64) -> std::result::Result<DMatrix<f64>, ()> {
    let n = a.nrows();
    if !(c > 0.0) {
        return Err(());
    }
    let last = -b_contra / c;
    let dot = |u: &DVector<f64>, v: &DVector<f64>| (a * v).dot(u);
    let mut legs: Vec<(DVector<f64>, f64)> = vec![(last, -1.0)];

    let mut candidates: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            e
        })
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            for s in [1.0, -1.0] {
                let mut e = DVector::zeros(n);
                e[i] = 1.0;
                e[j] = s;
                candidates.push(e);
            }
        }
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let project = |v: &DVector<f64>, legs: &[(DVector<f64>, f64)]| {
        let mut w = v.clone();
        for (h, s) in legs {
            w -= h * (dot(&w, h) * s);
        }
        w
    };

    let mut chosen: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n);
    for slot in 0..n - 1 {
        let want = if slot == 0 { 1.0 } else { -1.0 };
        let mut best: Option<(DVector<f64>, f64, f64)> = None;
        for v in &candidates {
            let mut all = legs.clone();
            all.extend(chosen.iter().cloned());
            let w = project(v, &all);
            // second pass for stability
            let w = project(&w, &all);
            let nn = dot(&w, &w);
            let ratio = nn.abs() / w.norm_squared().max(f64::MIN_POSITIVE);
            let alive = w.norm_squared() > 1e-12 * v.norm_squared();
            if alive && nn * want > 1e-6 * scale * w.norm_squared() && best.as_ref().is_none_or(|(_, _, r)| ratio > *r) {
                best = Some((w, nn.abs(), ratio));
            }
        }
        let (w, m, _) = best.ok_or(())?;
        chosen.push((w / m.sqrt(), want));
    }
    let mut out = DMatrix::zeros(n, n);
    for (p, (h, _)) in chosen.iter().enumerate() {
        out.set_column(p, h);
    }
    out.set_column(n - 1, &legs.remove(0).0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn db_field() -> BackgroundField {
        parse_config("dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1\ng = 0.6\n").unwrap()
    }

    #[test]
    fn desk_background_sample() {
        let s = db_field().sample(&[0.0; 4]).unwrap();
        assert_eq!(s.c, 1.0);
        assert!(s.christoffel.iter().all(|m| m.iter().all(|&v| v == 0.0)));
        assert!(s.nabla_b.iter().all(|&v| v == 0.0));
        assert!((s.h_time - 1.044030650891055).abs() < 1e-14);
        assert!((s.h_space - 0.9539392014169456).abs() < 1e-14);
        assert_eq!(s.frame, DMatrix::identity(4, 4));
        assert_eq!(s.b_contra.as_slice(), &[0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn gradient_of_b_in_flat_space() {
        let f = parse_config("dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1 - 0.1*x1\ng = 0.6\n").unwrap();
        let s = f.sample(&[0.0; 4]).unwrap();
        assert!((s.nabla_b[(1, 3)] + 0.1).abs() < 1e-15);
        assert!(s.christoffel.iter().all(|m| m.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn rejects_wrong_signature_and_c() {
        let bad = parse_config("dim = 2\na.0.0 = -1\na.1.1 = -1\nb.1 = 1\ng = 0\n").unwrap();
        assert!(matches!(bad.sample(&[0.0, 0.0]), Err(Error::Signature(_))));
        let big_b = parse_config("dim = 2\na.0.0 = 1\na.1.1 = -1\nb.1 = 1.5\ng = 0\n").unwrap();
        assert!(matches!(big_b.sample(&[0.0, 0.0]), Err(Error::CRange { .. })));
        let time_b = parse_config("dim = 2\na.0.0 = 1\na.1.1 = -1\nb.0 = 0.5\ng = 0\n").unwrap();
        assert!(matches!(time_b.sample(&[0.0, 0.0]), Err(Error::CRange { .. })));
    }

    #[test]
    fn frame_reconstructs_metric_on_curved_background() {
        let f = parse_config(
            "dim = 4\na.0.0 = 1 + 0.2*x1\na.0.1 = 0.1*sin(x2)\na.1.1 = -(1+0.1*x0)^2\na.2.2 = -1\na.2.3 = 0.05*x0\na.3.3 = -1 - 0.3*x2\nb.1 = 0.1\nb.3 = 0.8 + 0.05*x1\ng = 0.5\n",
        )
        .unwrap();
        let s = f.sample(&[0.3, 0.2, 0.4, 0.1]).unwrap();
        let rebuilt = s.frame.transpose() * s.eta() * &s.frame;
        assert!((rebuilt - &s.a).amax() < 1e-12);
        let bp = s.frame_inv.transpose() * &s.b_cov;
        for p in 0..3 {
            assert!(bp[p].abs() < 1e-12);
        }
        assert!((bp[3] - s.c).abs() < 1e-12);
        for k in 0..4 {
            assert!((&s.christoffel[k] - s.christoffel[k].transpose()).amax() < 1e-15);
        }
    }

    #[test]
    fn symbolic_derivatives_match_fd() {
        let f = parse_config("dim = 3\na.0.0 = 1 + 0.2*x1^2\na.0.1 = 0.1*x2\na.1.1 = -exp(0.1*x0)\na.2.2 = -1\nb.2 = 0.9*cos(x1)\ng = 0.6*exp(-x1)\n").unwrap();
        let x = [0.2, 0.5, -0.3];
        let s = f.sample(&x).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (ap, bp, gp) = f.values(&xp).unwrap();
            let (am, bm, gm) = f.values(&xm).unwrap();
            let da = (ap - am) / (2.0 * h);
            assert!((&da - &s.da[k]).amax() < 1e-6 * (1.0 + da.amax()));
            let dbk = (bp - bm) / (2.0 * h);
            for j in 0..3 {
                assert!((dbk[j] - s.db[(k, j)]).abs() < 1e-8);
            }
            assert!(((gp - gm) / (2.0 * h) - s.dg[k]).abs() < 1e-8);
        }
    }
}
