//! Lyapunov functionals and decay auditing.
//!
//! Series recorded along a run are collected in a [`DecayReport`]; the audit
//! flags every step where a series rises by more than
//! `tol_abs + tol_rel * previous`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{CellField, Field2D};
use crate::flux::PolyFlux;
use crate::project::{distance_l2_squared, distance_l2_squared_2d, l1ball_threshold, project_monotone, TargetSet};

/// Default absolute and relative audit tolerances.
pub const TOL_ABS: f64 = 1e-8;
pub const TOL_REL: f64 = 1e-10;
/// Absolute tolerance for entropies other than `s^2`.
pub const TOL_ABS_NONQUADRATIC: f64 = 1e-4;

/// A convex entropy with `eta(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum EntropyPair {
    /// `s^p` for even `p >= 2`.
    PowerEven(u32),
    /// `cosh(s) - 1`.
    CoshMinusOne,
    /// Polynomial checked for convexity on a sampled range.
    CustomPoly(PolyFlux),
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `sinh(d) - d` without cancellation for small `d`.
fn sinh_minus_id(d: f64) -> f64 {
    if d.abs() < 0.1 {
        let d2 = d * d;
        d * d2 / 6.0 * (1.0 + d2 / 20.0 * (1.0 + d2 / 42.0 * (1.0 + d2 / 72.0 * (1.0 + d2 / 110.0))))
    } else {
        d.sinh() - d
    }
}

impl EntropyPair {
    pub fn power(p: u32) -> Result<Self> {
        if p < 2 || !p.is_multiple_of(2) {
            return Err(Error::InvalidEntropy(format!("power {p} must be even and at least 2")));
        }
        Ok(EntropyPair::PowerEven(p))
    }

    /// Polynomial entropy; rejected unless `eta(0) = 0` and `eta'' >= 0` on
    /// 4097 samples of `[-range, range]`.
    pub fn custom_poly(coeffs: Vec<f64>, range: f64) -> Result<Self> {
        let p = PolyFlux::new(coeffs)?;
        if p.eval(0.0) != 0.0 {
            return Err(Error::InvalidEntropy("eta(0) must vanish".into()));
        }
        let d2 = p.derivative().derivative();
        let samples = 4096;
        for k in 0..=samples {
            let s = -range + 2.0 * range * k as f64 / samples as f64;
            if d2.eval(s) < -1e-12 * (1.0 + d2.eval(s).abs()) {
                return Err(Error::InvalidEntropy(format!("eta'' < 0 at {s}")));
            }
        }
        Ok(EntropyPair::CustomPoly(p))
    }

    /// Short tag used in series names.
    pub fn label(&self) -> String {
        match self {
            EntropyPair::PowerEven(p) => format!("s{p}"),
            EntropyPair::CoshMinusOne => "cosh".into(),
            EntropyPair::CustomPoly(_) => "poly".into(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, EntropyPair::PowerEven(2))
    }

    pub fn is_even(&self) -> bool {
        match self {
            EntropyPair::PowerEven(_) | EntropyPair::CoshMinusOne => true,
            EntropyPair::CustomPoly(p) => p.is_even(),
        }
    }

    pub fn eta(&self, s: f64) -> f64 {
        match self {
            EntropyPair::PowerEven(p) => s.powi(*p as i32),
            EntropyPair::CoshMinusOne => {
                let h = (0.5 * s).sinh();
                2.0 * h * h
            }
            EntropyPair::CustomPoly(q) => q.eval(s),
        }
    }

    pub fn d_eta(&self, s: f64) -> f64 {
        match self {
            EntropyPair::PowerEven(p) => f64::from(*p) * s.powi(*p as i32 - 1),
            EntropyPair::CoshMinusOne => s.sinh(),
            EntropyPair::CustomPoly(q) => q.derivative().eval(s),
        }
    }

    pub fn d2_eta(&self, s: f64) -> f64 {
        match self {
            EntropyPair::PowerEven(p) => f64::from(p * (p - 1)) * s.powi(*p as i32 - 2),
            EntropyPair::CoshMinusOne => s.cosh(),
            EntropyPair::CustomPoly(q) => q.derivative().derivative().eval(s),
        }
    }

    /// Relative entropy `eta(u) - eta(c) - eta'(c) (u - c)`, evaluated as a
    /// Taylor remainder to avoid cancellation.
    pub fn relative(&self, u: f64, c: f64) -> f64 {
        let d = u - c;
        match self {
            EntropyPair::PowerEven(2) => d * d,
            EntropyPair::PowerEven(p) => {
                (2..=*p).map(|k| binomial(*p, k) * c.powi((*p - k) as i32) * d.powi(k as i32)).sum()
            }
            EntropyPair::CoshMinusOne => {
                let h = (0.5 * d).sinh();
                c.cosh() * 2.0 * h * h + c.sinh() * sinh_minus_id(d)
            }
            EntropyPair::CustomPoly(q) => {
                let mut deriv = q.derivative().derivative();
                let mut total = 0.0;
                let mut factorial = 2.0;
                let mut k = 2;
                while !deriv.is_zero() {
                    total += deriv.eval(c) / factorial * d.powi(k);
                    deriv = deriv.derivative();
                    k += 1;
                    factorial *= k as f64;
                }
                total
            }
        }
    }
}

impl std::str::FromStr for EntropyPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosh" | "cosh_minus_one" => Ok(EntropyPair::CoshMinusOne),
            _ => match s.strip_prefix('s').or_else(|| s.strip_prefix("power")).map(str::parse::<u32>) {
                Some(Ok(p)) => EntropyPair::power(p),
                _ => Err(Error::InvalidEntropy(format!("unknown entropy {s:?}"))),
            },
        }
    }
}

/// Relative-entropy functional towards the monotone projection, summed over
/// the contact intervals of the envelope. Zero off the contacts.
pub fn relative_entropy_delta(u: &CellField, eta: &EntropyPair) -> Result<f64> {
    let p = project_monotone(u)?;
    let g = u.grid();
    let vals = u.values();
    let mut total = 0.0;
    for c in p.contacts.iter() {
        let a = c.start.max(g.x_left);
        let b = c.end.min(g.x_right());
        if !(a < b) {
            continue;
        }
        let j0 = (((a - g.x_left) / g.h).floor().max(0.0) as usize).min(g.n - 1);
        let j1 = (((b - g.x_left) / g.h).ceil() as usize).min(g.n);
        for j in j0..j1 {
            let overlap = b.min(g.face(j + 1)) - a.max(g.face(j));
            if overlap > 0.0 {
                total += eta.relative(vals[j], c.slope) * overlap;
            }
        }
    }
    Ok(total)
}

/// Cellwise form of [`relative_entropy_delta`]: `sum eta(u_j | pi_j) h`.
pub fn relative_entropy_delta_cellwise(u: &CellField, eta: &EntropyPair) -> Result<f64> {
    let p = project_monotone(u)?;
    Ok(u.values().iter().zip(p.projected.values()).map(|(&a, &b)| eta.relative(a, b)).sum::<f64>() * u.h())
}

/// `sum eta(u - pi_r u) * volume` where `u - pi_r u = sgn(u) min(|u|, s)`.
pub fn delta_ball_values(values: &[f64], cell_volume: f64, r: f64, eta: &EntropyPair) -> Result<f64> {
    if !eta.is_even() {
        return Err(Error::NonEvenEntropy);
    }
    let s = l1ball_threshold(values, cell_volume, r)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    Ok(values.iter().map(|&v| eta.eta(v.abs().min(s))).sum::<f64>() * cell_volume)
}

pub fn delta_ball(u: &CellField, r: f64, eta: &EntropyPair) -> Result<f64> {
    if u.u_minus() != 0.0 || u.u_plus() != 0.0 {
        return Err(Error::IncompatibleTarget { target: "l1ball", reason: "far-field states must vanish".into() });
    }
    delta_ball_values(u.values(), u.h(), r, eta)
}

pub fn delta_ball_2d(u: &Field2D, r: f64, eta: &EntropyPair) -> Result<f64> {
    delta_ball_values(u.values(), u.cell_area(), r, eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub tv: f64,
    pub mass: f64,
}

/// Norms of `u - phi` where `phi` is the step from `u-` to `u+` at `x = 0`,
/// the total variation including the jumps to the ghost states, and the
/// mass `int (u - phi)`.
pub fn norms_and_tv(u: &CellField) -> Norms {
    let g = u.grid();
    let (um, up) = (u.u_minus(), u.u_plus());
    let phi = |x: f64| if x < 0.0 { um } else { up };
    let lo = g.x_left.min(0.0);
    let hi = g.x_right().max(0.0);
    let mut cuts: Vec<f64> = (0..=g.n).map(|j| g.face(j)).collect();
    cuts.extend([lo, hi, 0.0]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut l1, mut l2, mut linf, mut mass) = (0.0, 0.0, 0.0f64, 0.0);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let diff = u.value_at(mid) - phi(mid);
        let len = w[1] - w[0];
        l1 += diff.abs() * len;
        l2 += diff * diff * len;
        linf = linf.max(diff.abs());
        mass += diff * len;
    }
    let seq: Vec<f64> = std::iter::once(um).chain(u.values().iter().copied()).chain(std::iter::once(up)).collect();
    let tv = seq.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    Norms { l1, l2: l2.sqrt(), linf, tv, mass }
}

/// Norms of a 2-D field with zero far field; `tv` sums edge jumps times `h`.
pub fn norms_2d(u: &Field2D) -> Norms {
    let vol = u.cell_area();
    let v = u.values();
    let l1 = v.iter().map(|x| x.abs()).sum::<f64>() * vol;
    let l2 = (v.iter().map(|x| x * x).sum::<f64>() * vol).sqrt();
    let linf = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mass = v.iter().sum::<f64>() * vol;
    let at = |ix: isize, iy: isize| {
        if ix < 0 || iy < 0 || ix >= u.nx as isize || iy >= u.ny as isize {
            0.0
        } else {
            u.get(ix as usize, iy as usize)
        }
    };
    let mut tv = 0.0;
    for iy in -1..u.ny as isize {
        for ix in -1..u.nx as isize {
            tv += (at(ix + 1, iy) - at(ix, iy)).abs() * f64::from(iy >= 0) + (at(ix, iy + 1) - at(ix, iy)).abs() * f64::from(ix >= 0);
        }
    }
    Norms { l1, l2, linf, tv: tv * u.h, mass }
}

/// Something sampled along a run.
pub trait Observer<F> {
    fn names(&self) -> Vec<String>;
    fn observe(&self, field: &F) -> Result<Vec<f64>>;
}

/// Built-in diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// Distance to the monotone cone joining the far-field states.
    D2Monotone,
    D2Interval { lo: f64, hi: f64 },
    D2L1Ball { r: f64 },
    D2L2Ball { r: f64 },
    DeltaRelativeEntropy { eta: EntropyPair },
    DeltaBall { r: f64, eta: EntropyPair },
    /// `l1, l2, linf, tv, mass`.
    Norms,
}

fn entropy_series(base: &str, eta: &EntropyPair) -> String {
    if eta.is_quadratic() {
        base.to_string()
    } else {
        format!("{base}_{}", eta.label())
    }
}

const NORM_NAMES: [&str; 5] = ["l1", "l2", "linf", "tv", "mass"];

impl Diagnostic {
    fn series_names(&self) -> Vec<String> {
        match self {
            Diagnostic::D2Monotone => vec!["d2_monotone".into()],
            Diagnostic::D2Interval { .. } => vec!["d2_interval".into()],
            Diagnostic::D2L1Ball { .. } => vec!["d2_l1ball".into()],
            Diagnostic::D2L2Ball { .. } => vec!["d2_l2ball".into()],
            Diagnostic::DeltaRelativeEntropy { eta } => vec![entropy_series("delta_relative_entropy", eta)],
            Diagnostic::DeltaBall { eta, .. } => vec![entropy_series("delta_ball", eta)],
            Diagnostic::Norms => NORM_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

fn norm_row(n: Norms) -> Vec<f64> {
    vec![n.l1, n.l2, n.linf, n.tv, n.mass]
}

impl Observer<CellField> for Diagnostic {
    fn names(&self) -> Vec<String> {
        self.series_names()
    }

    fn observe(&self, u: &CellField) -> Result<Vec<f64>> {
        let d2 = |t: TargetSet| distance_l2_squared(u, &t).map(|d| vec![d.sqrt()]);
        match self {
            Diagnostic::D2Monotone => d2(TargetSet::Monotone { u_minus: u.u_minus(), u_plus: u.u_plus() }),
            Diagnostic::D2Interval { lo, hi } => d2(TargetSet::IntervalSet { lo: *lo, hi: *hi }),
            Diagnostic::D2L1Ball { r } => d2(TargetSet::L1Ball { r: *r }),
            Diagnostic::D2L2Ball { r } => d2(TargetSet::L2Ball { r: *r }),
            Diagnostic::DeltaRelativeEntropy { eta } => Ok(vec![relative_entropy_delta(u, eta)?]),
            Diagnostic::DeltaBall { r, eta } => Ok(vec![delta_ball(u, *r, eta)?]),
            Diagnostic::Norms => Ok(norm_row(norms_and_tv(u))),
        }
    }
}

impl Observer<Field2D> for Diagnostic {
    fn names(&self) -> Vec<String> {
        self.series_names()
    }

    fn observe(&self, u: &Field2D) -> Result<Vec<f64>> {
        let d2 = |t: TargetSet| distance_l2_squared_2d(u, &t).map(|d| vec![d.sqrt()]);
        match self {
            Diagnostic::D2Monotone => Err(Error::Unsupported("d2_monotone")),
            Diagnostic::D2Interval { lo, hi } => d2(TargetSet::IntervalSet { lo: *lo, hi: *hi }),
            Diagnostic::D2L1Ball { r } => d2(TargetSet::L1Ball { r: *r }),
            Diagnostic::D2L2Ball { r } => d2(TargetSet::L2Ball { r: *r }),
            Diagnostic::DeltaRelativeEntropy { .. } => Err(Error::Unsupported("delta_relative_entropy")),
            Diagnostic::DeltaBall { r, eta } => Ok(vec![delta_ball_2d(u, *r, eta)?]),
            Diagnostic::Norms => Ok(norm_row(norms_2d(u))),
        }
    }
}

/// Time series of named diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecayReport {
    names: Vec<String>,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl DecayReport {
    pub fn new(names: Vec<String>) -> Self {
        Self { names, times: Vec::new(), rows: Vec::new() }
    }

    /// Appends a sample; times must increase strictly.
    pub fn push(&mut self, t: f64, row: Vec<f64>) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::Config(format!("{} values for {} series", row.len(), self.names.len())));
        }
        if self.times.last().is_some_and(|&last| !(t > last)) {
            return Err(Error::Config(format!("time {t} does not increase")));
        }
        self.times.push(t);
        self.rows.push(row);
        Ok(())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// CSV with header `t,<series...>` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,{}", self.names.join(","))?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            let cells: Vec<String> = std::iter::once(t).chain(row).map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub series: String,
    /// Index `k` of the earlier sample; the increase is from `k` to `k + 1`.
    pub index: usize,
    pub t_from: f64,
    pub t_to: f64,
    pub increase: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditSummary {
    pub audited: Vec<String>,
    pub violations: Vec<Violation>,
}

impl AuditSummary {
    pub fn count(&self) -> usize {
        self.violations.len()
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn worst(&self) -> Option<&Violation> {
        self.violations.iter().max_by(|a, b| a.increase.total_cmp(&b.increase))
    }

    /// One line per violation followed by a summary line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for v in &self.violations {
            writeln!(
                out,
                "violation series={} k={} t={:.16e}..{:.16e} increase={:.6e}",
                v.series, v.index, v.t_from, v.t_to, v.increase
            )?;
        }
        let worst = self.worst().map_or(0.0, |v| v.increase);
        writeln!(
            out,
            "audited={} violations={} worst_increase={:.6e} status={}",
            self.audited.join(","),
            self.count(),
            worst,
            if self.passed() { "pass" } else { "fail" }
        )?;
        Ok(())
    }
}

/// Whether a series is expected to be non-increasing.
pub fn is_lyapunov_series(name: &str) -> bool {
    name.starts_with("d2_") || name.starts_with("delta_") || name == "tv"
}

/// Audit tolerances for a series: the looser absolute tolerance applies to
/// entropy functionals built on a non-quadratic entropy.
pub fn series_tolerance(name: &str, tol_abs: f64, tol_rel: f64) -> (f64, f64) {
    let quadratic = name == "delta_ball" || name == "delta_relative_entropy" || !name.starts_with("delta_");
    if quadratic {
        (tol_abs, tol_rel)
    } else {
        (tol_abs.max(TOL_ABS_NONQUADRATIC), tol_rel)
    }
}

/// Audits one series.
pub fn audit_series(name: &str, times: &[f64], values: &[f64], tol_abs: f64, tol_rel: f64) -> Vec<Violation> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] + tol_abs + tol_rel * w[0].abs())
        .map(|(k, w)| Violation {
            series: name.to_string(),
            index: k,
            t_from: times[k],
            t_to: times[k + 1],
            increase: w[1] - w[0],
        })
        .collect()
}

/// Audits every Lyapunov series of the report.
pub fn audit_decay(report: &DecayReport, tol_abs: f64, tol_rel: f64) -> AuditSummary {
    let mut summary = AuditSummary::default();
    for name in report.names().iter().filter(|n| is_lyapunov_series(n)) {
        let (ta, tr) = series_tolerance(name, tol_abs, tol_rel);
        let values = report.series(name).expect("name comes from the report");
        summary.violations.extend(audit_series(name, report.times(), &values, ta, tr));
        summary.audited.push(name.clone());
    }
    summary
}
