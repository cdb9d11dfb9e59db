//! Central finite differences with optional Richardson extrapolation, plus
//! the oracle tolerances shared by tests, the check suite and the CLI.

/// Named tolerances. Every acceptance threshold lives here.
pub mod tol {
    /// FD agreement of the Euler chain `y_i`, `g_ij`, `C_ijk`.
    pub const EULER_FD: f64 = 1e-5;
    /// Closed-form identities compared with direct numerics.
    pub const IDENTITY: f64 = 1e-9;
    /// Pure scalar identities.
    pub const SCALAR: f64 = 1e-12;
    /// Indicatrix curvature constant and its spread over directions.
    pub const CURVATURE: f64 = 1e-6;
    /// `F^2 C_h C^h = -eps N^2 g^2 / 4` at `c = 1`.
    pub const CARTAN_CONTRACTION: f64 = 1e-10;
    /// Closed-form spray against the independent oracle.
    pub const SPRAY_ORACLE: f64 = 1e-5;
    /// Berwald reduction of the spray.
    pub const BERWALD: f64 = 1e-8;
    /// Relative `F^2` drift along a geodesic of unit arc length.
    pub const GEODESIC_DRIFT: f64 = 1e-6;
    /// `H^2(y_cov(y)) = F^2(y)` through the closed form.
    pub const DUALITY_CLOSED: f64 = 1e-9;
    /// Same through the Newton path (`c < 1`).
    pub const DUALITY_NUMERIC: f64 = 1e-7;
    /// Agreement of the three angle routes.
    pub const ANGLE_ROUTES: f64 = 1e-10;
    /// `alpha(y, y) = 0`, symmetry, scale invariance.
    pub const ANGLE_EXACT: f64 = 1e-12;
    /// Chart round trip.
    pub const CHART_ROUND_TRIP: f64 = 1e-9;
    /// `F^2(R(z)) = eps (z^0)^2`.
    pub const CHART_INVARIANCE: f64 = 1e-10;
    /// Off-diagonal entries of the chart metric.
    pub const CHART_OFFDIAG: f64 = 1e-9;
    /// Diagonal chart metric and the conformal flatness factor.
    pub const CHART_DIAG: f64 = 1e-8;
    /// `s^ij = a^ij / kappa^2`.
    pub const CONFORMAL_PUSHFORWARD: f64 = 1e-9;
    /// `|F^2|^h = |S^2|`.
    pub const CONFORMAL_POWER: f64 = 1e-10;
    /// Conformal map round trip.
    pub const CONFORMAL_ROUND_TRIP: f64 = 1e-9;
    /// Clamping window for arccos / arccosh arguments.
    pub const CLAMP: f64 = 1e-12;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step_rel_first: f64,
    pub step_rel_second: f64,
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { step_rel_first: 6e-6, step_rel_second: 1.2e-4, richardson: true }
    }
}

impl FdConfig {
    fn first_step(&self, coord: f64) -> f64 {
        self.step_rel_first * (1.0 + coord.abs())
    }

    fn second_step(&self, coord: f64) -> f64 {
        self.step_rel_second * (1.0 + coord.abs())
    }
}

fn richardson(d_h: f64, d_h2: f64) -> f64 {
    (4.0 * d_h2 - d_h) / 3.0
}

/// Derivative of a scalar function of one variable.
pub fn fd_derivative<E>(f: impl Fn(f64) -> Result<f64, E>, at: f64, cfg: &FdConfig) -> Result<f64, E> {
    let h = cfg.first_step(at);
    let d = |h: f64| -> Result<f64, E> {
        let (xp, xm) = (at + h, at - h);
        Ok((f(xp)? - f(xm)?) / (xp - xm))
    };
    if cfg.richardson {
        Ok(richardson(d(h)?, d(h / 2.0)?))
    } else {
        d(h)
    }
}

pub fn fd_gradient<E>(f: impl Fn(&[f64]) -> Result<f64, E>, at: &[f64], cfg: &FdConfig) -> Result<Vec<f64>, E> {
    let jac = fd_jacobian(|x| f(x).map(|v| vec![v]), at, cfg)?;
    Ok(jac.into_iter().map(|row| row[0]).collect())
}

/// `out[k][m] = d f_m / d x_k` for a vector-valued `f`.
pub fn fd_jacobian<E>(
    f: impl Fn(&[f64]) -> Result<Vec<f64>, E>,
    at: &[f64],
    cfg: &FdConfig,
) -> Result<Vec<Vec<f64>>, E> {
    let mut out = Vec::with_capacity(at.len());
    let mut x = at.to_vec();
    for k in 0..at.len() {
        let h = cfg.first_step(at[k]);
        let mut d = |h: f64| -> Result<Vec<f64>, E> {
            let (xp, xm) = (at[k] + h, at[k] - h);
            x[k] = xp;
            let fp = f(&x)?;
            x[k] = xm;
            let fm = f(&x)?;
            x[k] = at[k];
            Ok(fp.iter().zip(&fm).map(|(p, m)| (p - m) / (xp - xm)).collect())
        };
        let row = if cfg.richardson {
            let d1 = d(h)?;
            let d2 = d(h / 2.0)?;
            d1.iter().zip(&d2).map(|(&a, &b)| richardson(a, b)).collect()
        } else {
            d(h)?
        };
        out.push(row);
    }
    Ok(out)
}

/// `out[i][j] = d^2 f / dx_i dx_j`.
pub fn fd_hessian<E>(f: impl Fn(&[f64]) -> Result<f64, E>, at: &[f64], cfg: &FdConfig) -> Result<Vec<Vec<f64>>, E> {
    let n = at.len();
    let mut out = vec![vec![0.0; n]; n];
    let mut x = at.to_vec();
    let f0 = f(at)?;
    for i in 0..n {
        for j in i..n {
            let hi = cfg.second_step(at[i]);
            let hj = cfg.second_step(at[j]);
            let mut d = |s: f64| -> Result<f64, E> {
                let (hi, hj) = (hi * s, hj * s);
                if i == j {
                    x[i] = at[i] + hi;
                    let fp = f(&x)?;
                    x[i] = at[i] - hi;
                    let fm = f(&x)?;
                    x[i] = at[i];
                    return Ok((fp - 2.0 * f0 + fm) / (hi * hi));
                }
                let mut corner = |si: f64, sj: f64| -> Result<f64, E> {
                    x[i] = at[i] + si * hi;
                    x[j] = at[j] + sj * hj;
                    let v = f(&x);
                    x[i] = at[i];
                    x[j] = at[j];
                    v
                };
                let v = corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?;
                Ok(v / (4.0 * hi * hj))
            };
            let v = if cfg.richardson { richardson(d(1.0)?, d(0.5)?) } else { d(1.0)? };
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    Ok(out)
}

/// Largest absolute deviation scaled by the larger of `max|reference|` and `floor`.
pub fn rel_err(value: &[f64], reference: &[f64], floor: f64) -> f64 {
    let scale = reference.iter().fold(floor, |m, v| m.max(v.abs()));
    let diff = value.iter().zip(reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}
