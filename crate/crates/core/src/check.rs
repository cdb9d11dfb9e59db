//! Randomized identity matrix behind `finsleroid check`.
//!
//! Every sample index owns its own ChaCha8 stream, so the report does not
//! depend on how samples are spread over threads.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anglegeo::{
    angle, angle_closed_form, angle_direct, chart_metric_function, conformal_flatness_residual, uar_from_angles,
    uar_metric, uar_metric_closed, uar_to_angles,
};
use crate::background::{BackgroundField, BackgroundSample};
use crate::conformal::{factor_space_angle, pushforward_metric_check, zeta_inverse, zeta_map};
use crate::dual::{hamiltonian, hamiltonian_numeric};
use crate::error::{Error, Result};
use crate::kinematics::{classify, kinematics, SectorTag};
use crate::metric::{metric_function, MetricBundle};
use crate::numdiff::{fd_gradient, fd_jacobian, rel_err, tol, FdConfig};
use crate::spray::{pseudo_riemannian_spray, spray_coefficients, spray_oracle};

/// Minimum `|B| / |y|^2` and `q^2 / |y|^2` of a drawn vector. Both scalars are
/// quadratic in `y`, so this keeps every draw a distance of order `1e-2 |y|` off the cones.
pub const CONE_MARGIN: f64 = 1e-2;
/// Sampling box for points: `x in [0, X_BOX]^N`.
pub const X_BOX: f64 = 0.5;
const MAX_DRAWS: usize = 20_000;
/// Pairs whose angle sits this close to `0` or `pi / h` are skipped by the three-route check.
const ANGLE_WINDOW: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TolProfile {
    Default,
    /// Every tolerance divided by ten.
    Strict,
}

impl TolProfile {
    fn scale(self) -> f64 {
        match self {
            TolProfile::Default => 1.0,
            TolProfile::Strict => 0.1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TolProfile::Default => "default",
            TolProfile::Strict => "strict",
        }
    }
}

impl FromStr for TolProfile {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "default" => Ok(TolProfile::Default),
            "strict" => Ok(TolProfile::Strict),
            _ => Err(format!("unknown tolerance profile `{s}` (expected strict or default)")),
        }
    }
}

/// Identity names and their default tolerances, in report order.
pub const IDENTITIES: &[(&str, f64)] = &[
    ("euler_y", tol::EULER_FD),
    ("euler_g", tol::EULER_FD),
    ("euler_c", tol::EULER_FD),
    ("reciprocity", tol::IDENTITY),
    ("determinant", tol::IDENTITY),
    ("cone_scalar", tol::SCALAR),
    ("cartan_form", tol::IDENTITY),
    ("cartan_contraction", tol::CARTAN_CONTRACTION),
    ("curvature", tol::CURVATURE),
    ("spray_oracle", tol::SPRAY_ORACLE),
    ("berwald", tol::BERWALD),
    ("duality", tol::DUALITY_CLOSED),
    ("duality_numeric", tol::DUALITY_NUMERIC),
    ("angle_routes", tol::ANGLE_ROUTES),
    ("angle_exact", tol::ANGLE_EXACT),
    ("uar_round_trip", tol::CHART_ROUND_TRIP),
    ("uar_invariance", tol::CHART_INVARIANCE),
    ("uar_offdiag", tol::CHART_OFFDIAG),
    ("uar_diag", tol::CHART_DIAG),
    ("uar_flatness", tol::CHART_DIAG),
    ("conformal_pushforward", tol::CONFORMAL_PUSHFORWARD),
    ("conformal_power", tol::CONFORMAL_POWER),
    ("conformal_round_trip", tol::CONFORMAL_ROUND_TRIP),
];

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
    pub profile: TolProfile,
    pub threads: usize,
}

/// A drawn state: point, direction, and a second direction of the same sector.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSample {
    pub index: usize,
    pub x: Vec<f64>,
    pub y: DVector<f64>,
    pub y2: DVector<f64>,
    pub sector: SectorTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityStat {
    pub name: &'static str,
    pub tol: f64,
    pub run: usize,
    pub failed: usize,
    pub worst: f64,
    pub worst_sample: Option<usize>,
}

impl IdentityStat {
    fn record(&mut self, residual: f64, index: usize) {
        self.run += 1;
        let r = if residual.is_nan() { f64::INFINITY } else { residual };
        if r > self.tol {
            self.failed += 1;
        }
        if self.worst_sample.is_none() || r > self.worst || (r == self.worst && Some(index) < self.worst_sample) {
            self.worst = r;
            self.worst_sample = Some(index);
        }
    }

    fn merge(&mut self, other: &IdentityStat) {
        self.run += other.run;
        self.failed += other.failed;
        if let Some(i) = other.worst_sample {
            let better = match self.worst_sample {
                None => true,
                Some(j) => other.worst > self.worst || (other.worst == self.worst && i < j),
            };
            if better {
                self.worst = other.worst;
                self.worst_sample = Some(i);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub config: String,
    pub seed: u64,
    pub samples: usize,
    pub profile: TolProfile,
    pub stats: Vec<IdentityStat>,
    /// Reproduction data of the identity with the largest `worst / tol`.
    pub worst_offender: Option<(String, CheckSample)>,
    /// Not part of the printed report.
    pub wall_time: Duration,
}

impl RunReport {
    pub fn checks_run(&self) -> usize {
        self.stats.iter().map(|s| s.run).sum()
    }

    pub fn checks_failed(&self) -> usize {
        self.stats.iter().map(|s| s.failed).sum()
    }

    pub fn passed(&self) -> bool {
        self.checks_failed() == 0
    }

    pub fn stat(&self, name: &str) -> Option<&IdentityStat> {
        self.stats.iter().find(|s| s.name == name)
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|a| format!("{a:.16e}")).collect::<Vec<_>>().join(",")
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "command = {}", self.command)?;
        writeln!(f, "config = {}", self.config)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "samples = {}", self.samples)?;
        writeln!(f, "tol_profile = {}", self.profile.name())?;
        writeln!(f, "checks_run = {}", self.checks_run())?;
        writeln!(f, "checks_passed = {}", self.checks_run() - self.checks_failed())?;
        writeln!(f, "checks_failed = {}", self.checks_failed())?;
        for s in &self.stats {
            let p = format!("identity.{}", s.name);
            writeln!(f, "{p}.run = {}", s.run)?;
            writeln!(f, "{p}.failed = {}", s.failed)?;
            writeln!(f, "{p}.tol = {:.16e}", s.tol)?;
            if let Some(i) = s.worst_sample {
                writeln!(f, "{p}.worst = {:.16e}", s.worst)?;
                writeln!(f, "{p}.worst_sample = {i}")?;
            }
        }
        if let Some((name, smp)) = &self.worst_offender {
            writeln!(f, "worst_offender = {name}")?;
            writeln!(f, "worst_offender.sample = {}", smp.index)?;
            writeln!(f, "worst_offender.sector = {}", smp.sector.label())?;
            writeln!(f, "worst_offender.x = {}", join(&smp.x))?;
            writeln!(f, "worst_offender.y = {}", join(smp.y.as_slice()))?;
            writeln!(f, "worst_offender.y2 = {}", join(smp.y2.as_slice()))?;
        }
        writeln!(f, "status = {}", if self.passed() { "pass" } else { "fail" })
    }
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let r = v.norm();
        if r > 1e-3 && r <= 1.0 {
            return v / r;
        }
    }
}

fn admissible(s: &BackgroundSample, y: &DVector<f64>, want: SectorTag) -> bool {
    if classify(s, y).tag != want {
        return false;
    }
    match kinematics(s, y) {
        Ok((_, k)) => {
            let yy = k.scale * k.scale;
            k.big_b.abs() >= CONE_MARGIN * yy && k.q * k.q >= CONE_MARGIN * yy && MetricBundle::new(s, y).is_ok()
        }
        Err(_) => false,
    }
}

fn draw_direction(rng: &mut ChaCha8Rng, s: &BackgroundSample, want: SectorTag) -> Result<DVector<f64>> {
    for _ in 0..MAX_DRAWS {
        let y = unit_direction(rng, s.dim());
        if admissible(s, &y, want) {
            return Ok(y);
        }
    }
    Err(Error::UnsupportedSector)
}

/// Draws sample `index`: even indices are time-like, odd ones space-like
/// (only time-like when `|g| >= 2` somewhere on the box).
pub fn draw_sample(field: &BackgroundField, seed: u64, index: usize) -> Result<CheckSample> {
    let mut rng = rng_for(seed, index);
    let n = field.dim();
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..X_BOX)).collect();
    let s = field.sample(&x)?;
    let sector = if index % 2 == 1 && s.g.abs() < 2.0 { SectorTag::SpaceLike } else { SectorTag::TimeFuture };
    let y = draw_direction(&mut rng, &s, sector)?;
    let y2 = draw_direction(&mut rng, &s, sector)?;
    Ok(CheckSample { index, x, y, y2, sector })
}

fn fresh_stats(profile: TolProfile) -> Vec<IdentityStat> {
    IDENTITIES
        .iter()
        .map(|&(name, t)| IdentityStat { name, tol: t * profile.scale(), run: 0, failed: 0, worst: 0.0, worst_sample: None })
        .collect()
}

struct Recorder<'a> {
    stats: &'a mut [IdentityStat],
    index: usize,
}

impl Recorder<'_> {
    fn put(&mut self, name: &str, residual: Result<f64>) {
        let r = residual.unwrap_or(f64::INFINITY);
        let st = self.stats.iter_mut().find(|s| s.name == name).expect("known identity");
        st.record(r, self.index);
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, a| m.max(a.abs()))
}

fn euler_chain(rec: &mut Recorder, s: &BackgroundSample, m: &MetricBundle) {
    let cfg = FdConfig::default();
    let y = m.y.as_slice();
    let n = s.dim();
    let g_scale = max_abs(m.g_cov.iter().copied());

    rec.put(
        "euler_y",
        fd_gradient(|yy| metric_function(s, &DVector::from_column_slice(yy)), y, &cfg).map(|grad| {
            let half: Vec<f64> = grad.iter().map(|d| 0.5 * d).collect();
            rel_err(&half, m.y_cov.as_slice(), 0.0)
        }),
    );
    rec.put(
        "euler_g",
        fd_jacobian(|yy| MetricBundle::new(s, &DVector::from_column_slice(yy)).map(|b| b.y_cov.as_slice().to_vec()), y, &cfg)
            .map(|jac| {
                let fd: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| jac[j][i]).collect();
                let want: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m.g_cov[(i, j)]).collect();
                rel_err(&fd, &want, 0.0)
            }),
    );
    rec.put(
        "euler_c",
        fd_jacobian(
            |yy| MetricBundle::new(s, &DVector::from_column_slice(yy)).map(|b| b.g_cov.iter().copied().collect::<Vec<_>>()),
            y,
            &cfg,
        )
        .map(|jac| {
            // column-major g entries: index i + n j
            let mut fd = Vec::with_capacity(n * n * n);
            let mut want = Vec::with_capacity(n * n * n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        fd.push(jac[k][i + n * j]);
                        want.push(2.0 * m.cartan.get(i, j, k));
                    }
                }
            }
            let scale = max_abs(want.iter().copied()).max(tol::EULER_FD * g_scale / m.k.scale);
            rel_err(&fd, &want, scale)
        }),
    );
}

fn tensor_identities(rec: &mut Recorder, s: &BackgroundSample, m: &MetricBundle) {
    let n = s.dim();
    let k = &m.k;
    let id = &m.g_cov * &m.g_contra - nalgebra::DMatrix::<f64>::identity(n, n);
    rec.put("reciprocity", Ok(id.amax()));

    let direct = m.g_cov.determinant() / s.a.determinant();
    rec.put("determinant", Ok((direct - m.det_ratio).abs() / m.det_ratio.abs()));

    let lhs = k.b * (k.b + k.g * k.c * k.c * k.q);
    let rhs = -k.big_b + k.eps * k.q * k.nu;
    let scale = (k.b * k.b).max(k.big_b.abs()).max(k.q * k.nu).max(k.scale * k.scale);
    rec.put("cone_scalar", Ok((lhs - rhs).abs() / scale));

    // C_h = g^ij C_hij, then C_h C^h
    let c_direct = DVector::from_fn(n, |h, _| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += m.g_contra[(i, j)] * m.cartan.get(h, i, j);
            }
        }
        acc
    });
    let cc_direct = (&m.g_contra * &c_direct).dot(&c_direct);
    let c_scale = max_abs(m.c_cov.iter().copied()).max(1.0 / k.scale);
    let form = rel_err(c_direct.as_slice(), m.c_cov.as_slice(), c_scale)
        .max((cc_direct - m.cc).abs() / (m.cc.abs().max(1.0 / (k.scale * k.scale))));
    rec.put("cartan_form", Ok(form));
    if s.is_unit() {
        let want = -k.eps * (n * n) as f64 * k.g * k.g / 4.0;
        rec.put("cartan_contraction", Ok((m.f2 * m.cc - want).abs()));
        let curv = m.indicatrix_curvature();
        let target = -k.eps * k.h * k.h;
        rec.put("curvature", Ok((curv.scalar - target).abs().max(curv.spread)));
    }
}

fn spray_identities(rec: &mut Recorder, field: &BackgroundField, s: &BackgroundSample, smp: &CheckSample) {
    let closed = spray_coefficients(s, &smp.y);
    let oracle = spray_oracle(field, &smp.x, &smp.y);
    rec.put(
        "spray_oracle",
        closed.as_ref().map_err(Clone::clone).and_then(|c| oracle.map(|o| rel_err(c.g.as_slice(), o.as_slice(), 1.0))),
    );
    if s.nabla_b.amax() == 0.0 && s.dg.amax() == 0.0 {
        let riem = pseudo_riemannian_spray(s, &smp.y);
        rec.put("berwald", closed.map(|c| rel_err(c.g.as_slice(), riem.as_slice(), 1.0)));
    }
}

fn duality(rec: &mut Recorder, s: &BackgroundSample, m: &MetricBundle) {
    let rel = |h2: f64| (h2 - m.f2).abs() / m.f2.abs();
    if s.is_unit() {
        rec.put("duality", hamiltonian(s, &m.y_cov).map(rel));
    } else {
        rec.put("duality_numeric", hamiltonian_numeric(s, &m.y_cov).map(|r| rel(r.h2)));
    }
}

fn angles(rec: &mut Recorder, s: &BackgroundSample, smp: &CheckSample, h: f64) {
    let (y1, y2) = (&smp.y, &smp.y2);
    let a = match angle(s, y1, y2) {
        Ok(a) => a,
        // the pair is not joined by the indicatrix; nothing to compare
        Err(Error::DomainError(_)) => return,
        Err(e) => return rec.put("angle_routes", Err(e)),
    };
    let exact = (|| -> Result<f64> {
        let same = angle(s, y1, y1)?.abs();
        let sym = (angle(s, y2, y1)? - a).abs();
        let scaled = (angle(s, &(y1 * 2.5), &(y2 * 0.4))? - a).abs();
        Ok(same.max(sym).max(scaled))
    })();
    rec.put("angle_exact", exact);

    let ha = h * a;
    let near_end = ha < ANGLE_WINDOW || (smp.sector == SectorTag::SpaceLike && std::f64::consts::PI - ha < ANGLE_WINDOW);
    if near_end {
        return;
    }
    let routes = (|| -> Result<f64> {
        let mut worst = (angle_direct(s, y1, y2)? - a).abs();
        worst = worst.max((factor_space_angle(s, y1, y2)? - a).abs());
        if s.dim() == 4 {
            let (z1, t1) = uar_to_angles(s, &(&s.frame * y1))?;
            let (z2, _) = uar_to_angles(s, &(&s.frame * y2))?;
            worst = worst.max((angle_closed_form(&z1, &z2, t1, s.g)? - a).abs());
        }
        Ok(worst)
    })();
    rec.put("angle_routes", routes);
}

fn chart(rec: &mut Recorder, s: &BackgroundSample, y: &DVector<f64>) {
    let r = &s.frame * y;
    let (z, tag) = match uar_to_angles(s, &r) {
        Ok(v) => v,
        Err(e) => return rec.put("uar_round_trip", Err(e)),
    };
    rec.put("uar_round_trip", uar_from_angles(s, &z, tag).map(|back| rel_err(back.as_slice(), r.as_slice(), r.amax())));
    let eps = if tag == SectorTag::TimeFuture { 1.0 } else { -1.0 };
    let z2 = z.z0 * z.z0;
    rec.put("uar_invariance", chart_metric_function(s, &z, tag).map(|f2| (f2 - eps * z2).abs() / z2));
    match (uar_metric(s, &z, tag), uar_metric_closed(&z, tag, s.g)) {
        (Ok(a), Ok(d)) => {
            let scale = max_abs(d);
            let off = max_abs((0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j))).map(|ij| a[ij]));
            rec.put("uar_offdiag", Ok(off / scale));
            let diag = (0..4).fold(0.0f64, |w, i| w.max((a[(i, i)] - d[i]).abs() / d[i].abs().max(1e-300)));
            rec.put("uar_diag", Ok(diag));
        }
        (Err(e), _) | (_, Err(e)) => {
            rec.put("uar_offdiag", Err(e.clone()));
            rec.put("uar_diag", Err(e));
        }
    }
    rec.put("uar_flatness", conformal_flatness_residual(s, &z, tag));
}

fn conformal(rec: &mut Recorder, s: &BackgroundSample, m: &MetricBundle) {
    let y = &m.y;
    rec.put(
        "conformal_pushforward",
        pushforward_metric_check(s, y).map(|p| p.residual.max((p.det - p.det_expected).abs() / p.det_expected.abs())),
    );
    let im = match zeta_map(s, y) {
        Ok(im) => im,
        Err(e) => return rec.put("conformal_power", Err(e)),
    };
    let power = im.f2.abs().powf(m.k.h);
    rec.put("conformal_power", Ok((power - im.s2.abs()).abs() / im.s2.abs()));
    rec.put("conformal_round_trip", zeta_inverse(s, &im.zeta).map(|back| rel_err(back.as_slice(), y.as_slice(), 1.0)));
}

/// Runs every applicable identity at one sample.
pub fn check_sample(field: &BackgroundField, smp: &CheckSample, stats: &mut [IdentityStat]) -> Result<()> {
    let s = field.sample(&smp.x)?;
    let mut rec = Recorder { stats, index: smp.index };
    let m = match MetricBundle::new(&s, &smp.y) {
        Ok(m) => m,
        Err(e) => {
            rec.put("reciprocity", Err(e));
            return Ok(());
        }
    };
    euler_chain(&mut rec, &s, &m);
    tensor_identities(&mut rec, &s, &m);
    spray_identities(&mut rec, field, &s, smp);
    duality(&mut rec, &s, &m);
    if s.is_unit() {
        angles(&mut rec, &s, smp, m.k.h);
        if s.dim() == 4 {
            chart(&mut rec, &s, &smp.y);
        }
        conformal(&mut rec, &s, &m);
    }
    Ok(())
}

fn run_shard(field: &BackgroundField, opts: &CheckOptions, shard: usize, threads: usize) -> Result<Vec<IdentityStat>> {
    let mut stats = fresh_stats(opts.profile);
    for index in (shard..opts.samples).step_by(threads) {
        let smp = draw_sample(field, opts.seed, index)?;
        check_sample(field, &smp, &mut stats)?;
    }
    Ok(stats)
}

/// Runs `opts.samples` samples over `opts.threads` workers and merges by max-reduction.
/// Errors from drawing or sampling the background (bad signature, `c` out of range)
/// abort the run; the lowest failing sample index wins so the error is deterministic.
pub fn run_checks(field: &BackgroundField, config: &str, opts: &CheckOptions) -> Result<RunReport> {
    let start = std::time::Instant::now();
    let threads = opts.threads.clamp(1, opts.samples.max(1));
    let shards: Vec<Result<Vec<IdentityStat>>> = if threads == 1 {
        vec![run_shard(field, opts, 0, 1)]
    } else {
        std::thread::scope(|sc| {
            let handles: Vec<_> = (0..threads).map(|t| sc.spawn(move || run_shard(field, opts, t, threads))).collect();
            handles.into_iter().map(|h| h.join().expect("check worker panicked")).collect()
        })
    };
    let mut stats = fresh_stats(opts.profile);
    let mut first_err: Option<(usize, Error)> = None;
    for (t, shard) in shards.into_iter().enumerate() {
        match shard {
            Ok(part) => {
                for (a, b) in stats.iter_mut().zip(&part) {
                    a.merge(b);
                }
            }
            Err(e) => {
                if first_err.as_ref().is_none_or(|(u, _)| t < *u) {
                    first_err = Some((t, e));
                }
            }
        }
    }
    if let Some((_, e)) = first_err {
        // rerun serially to report the error of the lowest index
        for index in 0..opts.samples {
            let mut scratch = fresh_stats(opts.profile);
            let smp = draw_sample(field, opts.seed, index)?;
            check_sample(field, &smp, &mut scratch)?;
        }
        return Err(e);
    }
    let worst_offender = stats
        .iter()
        .filter(|s| s.worst_sample.is_some())
        .max_by(|a, b| (a.worst / a.tol).total_cmp(&(b.worst / b.tol)))
        .and_then(|s| {
            let smp = draw_sample(field, opts.seed, s.worst_sample?).ok()?;
            Some((s.name.to_string(), smp))
        });
    Ok(RunReport {
        command: "check".into(),
        config: config.into(),
        seed: opts.seed,
        samples: opts.samples,
        profile: opts.profile,
        stats,
        worst_offender,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::parse_config;

    const DB: &str = "dim = 4\na.0.0 = 1\na.1.1 = -1\na.2.2 = -1\na.3.3 = -1\nb.3 = 1\ng = 0.6\n";

    fn opts(samples: usize, threads: usize) -> CheckOptions {
        CheckOptions { samples, seed: 42, profile: TolProfile::Default, threads }
    }

    #[test]
    fn samples_are_admissible_and_alternate() {
        let f = parse_config(DB).unwrap();
        for i in 0..20 {
            let smp = draw_sample(&f, 7, i).unwrap();
            let s = f.sample(&smp.x).unwrap();
            assert_eq!(classify(&s, &smp.y).tag, smp.sector);
            assert_eq!(smp.sector == SectorTag::SpaceLike, i % 2 == 1);
            assert!(smp.x.iter().all(|&v| (0.0..X_BOX).contains(&v)));
            assert!((smp.y.norm() - 1.0).abs() < 1e-14);
        }
        assert_eq!(draw_sample(&f, 7, 3).unwrap(), draw_sample(&f, 7, 3).unwrap());
        assert_ne!(draw_sample(&f, 7, 3).unwrap().y, draw_sample(&f, 8, 3).unwrap().y);
    }

    #[test]
    fn desk_background_passes() {
        let f = parse_config(DB).unwrap();
        let r = run_checks(&f, "db", &opts(60, 1)).unwrap();
        assert!(r.passed(), "{r}");
        for name in ["euler_c", "curvature", "angle_routes", "uar_flatness", "conformal_round_trip", "berwald"] {
            assert!(r.stat(name).unwrap().run > 0, "{name}");
        }
        assert_eq!(r.stat("duality_numeric").unwrap().run, 0);
    }

    #[test]
    fn report_does_not_depend_on_threads() {
        let f = parse_config(&DB.replace("b.3 = 1", "b.2 = 0.3*x0\nb.3 = 0.9")).unwrap();
        let a = run_checks(&f, "x", &opts(24, 1)).unwrap().to_string();
        let b = run_checks(&f, "x", &opts(24, 5)).unwrap().to_string();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_signature_is_an_error() {
        let f = parse_config(&DB.replace("a.0.0 = 1", "a.0.0 = -1")).unwrap();
        assert!(matches!(run_checks(&f, "x", &opts(4, 2)), Err(Error::Signature(_))));
    }

    #[test]
    fn failures_are_counted() {
        let mut st = fresh_stats(TolProfile::Strict);
        st[0].record(1.0, 3);
        st[0].record(f64::NAN, 5);
        st[0].record(0.0, 1);
        assert_eq!((st[0].run, st[0].failed), (3, 2));
        assert_eq!(st[0].worst_sample, Some(5));
        assert_eq!(st[0].tol, tol::EULER_FD * 0.1);
    }
}
