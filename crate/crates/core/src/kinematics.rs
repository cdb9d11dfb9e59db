//! Sector classification and the per-`(x, y)` scalar stack.

use nalgebra::DVector;

use crate::background::BackgroundSample;
use crate::error::{Error, Result};

/// Relative tolerance on `gamma` and `B` for sector classification.
pub const TAU_CLS: f64 = 1e-9;
/// Relative lower bound on `q` for quantities carrying `1/q`.
pub const Q_MIN: f64 = 1e-10;
/// Relative lower bound on `nu`.
pub const NU_MIN: f64 = 1e-12;
const SIDE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectorTag {
    TimeFuture,
    SpaceLike,
    Unsupported,
}

impl SectorTag {
    pub fn label(self) -> &'static str {
        match self {
            SectorTag::TimeFuture => "time-future",
            SectorTag::SpaceLike => "space-like",
            SectorTag::Unsupported => "isotropic/unsupported",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Right,
    Left,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sector {
    pub tag: SectorTag,
    pub side: Side,
}

impl Sector {
    pub fn is_supported(&self) -> bool {
        self.tag != SectorTag::Unsupported
    }

    /// `+1` time-like, `-1` space-like.
    pub fn eps(&self) -> Result<f64> {
        match self.tag {
            SectorTag::TimeFuture => Ok(1.0),
            SectorTag::SpaceLike => Ok(-1.0),
            SectorTag::Unsupported => Err(Error::UnsupportedSector),
        }
    }

    pub fn label(&self) -> &'static str {
        self.tag.label()
    }
}

pub fn euclid_norm(y: &DVector<f64>) -> f64 {
    y.norm()
}

pub fn classify(s: &BackgroundSample, y: &DVector<f64>) -> Sector {
    let ny = euclid_norm(y);
    let b = s.b_cov.dot(y);
    let side = if b.abs() <= SIDE_TOL * ny {
        Side::Boundary
    } else if b > 0.0 {
        Side::Right
    } else {
        Side::Left
    };
    let unsupported = Sector { tag: SectorTag::Unsupported, side };
    if ny == 0.0 || !ny.is_finite() {
        return unsupported;
    }
    let gamma = (&s.a * y).dot(y) + b * b;
    let tau = TAU_CLS * ny * ny;
    let q = gamma.abs().sqrt();
    if gamma > tau {
        let big_b = q * q - s.g * b * q - b * b;
        let future = (s.frame.row(0) * y)[0] > 0.0;
        if big_b > tau && future {
            return Sector { tag: SectorTag::TimeFuture, side };
        }
        unsupported
    } else {
        // gamma = 0 off the r-null cone is the b axis, which is space-like
        let big_b = -(q * q + s.g * b * q + b * b);
        if big_b < -tau {
            Sector { tag: SectorTag::SpaceLike, side }
        } else {
            unsupported
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicScalars {
    pub n: usize,
    pub g: f64,
    pub c: f64,
    pub b: f64,
    pub gamma: f64,
    pub q: f64,
    pub eps: f64,
    pub h: f64,
    pub g_plus: f64,
    pub g_minus: f64,
    pub big_b: f64,
    pub l: f64,
    pub a: f64,
    pub f: f64,
    pub j: f64,
    pub chi: f64,
    pub nu: f64,
    /// `X`; `NaN` when `q` or `nu` vanishes and `c < 1`.
    pub x: f64,
    /// `G = g / h`
    pub gg: f64,
    /// Euclidean norm of `y`, the scale for relative thresholds.
    pub scale: f64,
}

impl KinematicScalars {
    pub fn j2(&self) -> f64 {
        self.j * self.j
    }

    pub fn f2(&self) -> f64 {
        self.big_b * self.j2()
    }

    pub fn one_minus_c2(&self) -> f64 {
        1.0 - self.c * self.c
    }

    /// `b + g c^2 q`
    pub fn b_hat_factor(&self) -> f64 {
        self.b + self.g * self.c * self.c * self.q
    }

    pub fn require_q(&self) -> Result<()> {
        if self.q >= Q_MIN * self.scale {
            Ok(())
        } else {
            Err(Error::DegenerateQ)
        }
    }

    pub fn require_nu(&self) -> Result<()> {
        self.require_q()?;
        if self.nu > NU_MIN * self.scale {
            Ok(())
        } else {
            Err(Error::DegenerateNu)
        }
    }
}

/// `B`, `L`, `f`, `J` as functions of `(b, q)` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeScalars {
    pub big_b: f64,
    pub l: f64,
    pub f: f64,
    pub j: f64,
}

pub fn cone_scalars(b: f64, q: f64, g: f64, eps: f64) -> ConeScalars {
    let h = (1.0 + eps * g * g / 4.0).sqrt();
    let (big_b, l, f) = if eps > 0.0 {
        let (g_plus, g_minus) = (-g / 2.0 + h, -g / 2.0 - h);
        let big_b = q * q - g * b * q - b * b;
        let f = 0.5 * ((b - g_minus * q) / (g_plus * q - b)).ln();
        (big_b, q - g * b / 2.0, f)
    } else {
        let big_b = -(q * q + g * b * q + b * b);
        let f = (h * q).atan2(b + g * q / 2.0) - std::f64::consts::PI;
        (big_b, q + g * b / 2.0, f)
    };
    ConeScalars { big_b, l, f, j: (-(g / h) * f / 2.0).exp() }
}

pub fn scalars(s: &BackgroundSample, y: &DVector<f64>, sector: Sector) -> Result<KinematicScalars> {
    let eps = sector.eps()?;
    let g = s.g;
    if eps < 0.0 && g.abs() >= 2.0 {
        return Err(Error::ChargeRange(g));
    }
    let n = s.dim();
    let b = s.b_cov.dot(y);
    let gamma = (&s.a * y).dot(y) + b * b;
    // abs keeps q = +0 so atan2 lands on the right branch on the b axis
    let q = gamma.abs().sqrt().abs();
    let h = (1.0 + eps * g * g / 4.0).sqrt();
    let g_plus = -g / 2.0 + h;
    let g_minus = -g / 2.0 - h;
    let a = b + g * q / 2.0;
    let ConeScalars { big_b, l, f, j } = cone_scalars(b, q, g, eps);
    let gg = g / h;
    let omc2 = 1.0 - s.c * s.c;
    let nu = q - eps * omc2 * g * b;
    let x = if omc2.abs() < 1e-15 {
        1.0 / n as f64
    } else if q > 0.0 && nu != 0.0 {
        1.0 / (n as f64 + eps * omc2 * big_b / (q * nu))
    } else {
        f64::NAN
    };
    Ok(KinematicScalars {
        n,
        g,
        c: s.c,
        b,
        gamma,
        q,
        eps,
        h,
        g_plus,
        g_minus,
        big_b,
        l,
        a,
        f,
        j,
        chi: f / h,
        nu,
        x,
        gg,
        scale: euclid_norm(y),
    })
}

/// Classify and evaluate in one step; unsupported sectors are errors.
pub fn kinematics(s: &BackgroundSample, y: &DVector<f64>) -> Result<(Sector, KinematicScalars)> {
    let sector = classify(s, y);
    let k = scalars(s, y, sector)?;
    Ok((sector, k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxVectors {
    pub u: DVector<f64>,
    pub v_cov: DVector<f64>,
    pub v_contra: DVector<f64>,
    pub e: DVector<f64>,
}

pub fn aux_vectors(s: &BackgroundSample, y: &DVector<f64>, k: &KinematicScalars) -> Result<AuxVectors> {
    k.require_q()?;
    let u = &s.a * y;
    let v_cov = &u + &s.b_cov * k.b;
    let v_contra = y + &s.b_contra * k.b;
    let e = -&s.b_cov + &v_cov * (k.eps * k.b / (k.q * k.q));
    Ok(AuxVectors { u, v_cov, v_contra, e })
}
