//! L2 projections onto the monotone cone, the L1-ball, the interval set and
//! (distance only) the L2-ball.
//!
//! For a meshwise-constant field the monotone projection is again meshwise
//! constant: the primitive has its breakpoints at the cell faces, so does its
//! lower convex envelope, and the envelope derivative is a block mean on each
//! hull segment. Distances are therefore exact cell sums.

use crate::envelope::{lower_convex_envelope, upper_concave_envelope, ContactStructure, PiecewiseLinear};
use crate::error::{Error, Result};
use crate::field::{CellField, Field2D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetSet {
    /// Functions running monotonically from `u_minus` to `u_plus`; the
    /// direction follows the sign of `u_plus - u_minus`.
    Monotone { u_minus: f64, u_plus: f64 },
    L1Ball { r: f64 },
    IntervalSet { lo: f64, hi: f64 },
    L2Ball { r: f64 },
}

impl TargetSet {
    pub fn name(&self) -> &'static str {
        match self {
            TargetSet::Monotone { .. } => "monotone",
            TargetSet::L1Ball { .. } => "l1ball",
            TargetSet::IntervalSet { .. } => "interval",
            TargetSet::L2Ball { .. } => "l2ball",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TargetSet::L1Ball { r } | TargetSet::L2Ball { r } if !(r > 0.0) => Err(Error::NonPositiveRadius(r)),
            TargetSet::IntervalSet { lo, hi } if !(lo <= hi) => {
                Err(Error::Config(format!("empty interval [{lo}, {hi}]")))
            }
            _ => Ok(()),
        }
    }
}

/// Monotone projection of a cell field, with the envelope it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneProjection {
    pub projected: CellField,
    pub contacts: ContactStructure,
    /// Lower convex (or upper concave, for decreasing targets) envelope of
    /// the primitive.
    pub envelope: PiecewiseLinear,
}

fn block_mean(values: &[f64]) -> f64 {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return first;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Projection onto the monotone functions joining the field's far-field
/// states: derivative of the convex envelope of the primitive.
pub fn project_monotone(u: &CellField) -> Result<MonotoneProjection> {
    let psi = u.primitive();
    let decreasing = u.u_minus() > u.u_plus();
    let env = if decreasing { upper_concave_envelope(&psi)? } else { lower_convex_envelope(&psi)? };
    let vals = u.values();
    let n = vals.len();
    let vertices = &env.vertex_indices;
    let mut out = vec![u.u_minus(); n];
    let last = vertices.last().copied().unwrap_or(0);
    out[last.min(n)..].fill(u.u_plus());
    for w in vertices.windows(2) {
        let mean = block_mean(&vals[w[0]..w[1]]);
        out[w[0]..w[1]].fill(mean);
    }
    Ok(MonotoneProjection { projected: u.with_values(out)?, contacts: env.contacts, envelope: env.envelope })
}

fn reversed(u: &CellField) -> Result<CellField> {
    let mut v = u.values().to_vec();
    v.reverse();
    CellField::new(*u.grid(), v, u.u_plus(), u.u_minus())
}

/// Reference projection by the inf-sup of block means, `O(n^2)`.
pub fn project_monotone_infsup(u: &CellField) -> Result<CellField> {
    if u.u_minus() > u.u_plus() {
        let p = project_monotone_infsup(&reversed(u)?)?;
        return reversed(&p);
    }
    let (um, up) = (u.u_minus(), u.u_plus());
    let v = u.values();
    let n = v.len();
    let mut prefix = vec![0.0; n + 1];
    for (j, x) in v.iter().enumerate() {
        prefix[j + 1] = prefix[j] + x;
    }
    let mean = |a: usize, b: usize| {
        let block = &v[a..=b];
        if block.iter().all(|&x| x == block[0]) {
            block[0]
        } else {
            (prefix[b + 1] - prefix[a]) / (b + 1 - a) as f64
        }
    };
    let mut out = vec![up; n];
    for b in 0..n {
        let mut sup = um;
        for j in 0..=b {
            sup = sup.max(mean(j, b));
            out[j] = out[j].min(sup);
        }
    }
    u.with_values(out)
}

/// Result of projecting onto an L1-ball.
#[derive(Debug, Clone, PartialEq)]
pub struct BallProjection<T> {
    pub projected: T,
    /// Soft-threshold level `s`, zero when the input was already feasible.
    pub threshold_s: f64,
    /// Whether thresholding took place.
    pub active: bool,
}

/// Threshold `s` with `cell_volume * sum (|v| - s)^+ = r`, or zero when
/// `cell_volume * sum |v| <= r`. Exact up to rounding: the constraint is
/// piecewise linear in `s` between sorted magnitudes.
pub fn l1ball_threshold(values: &[f64], cell_volume: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveRadius(r));
    }
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    if mags.iter().sum::<f64>() * cell_volume <= r {
        return Ok(0.0);
    }
    mags.sort_by(|a, b| b.total_cmp(a));
    let budget = r / cell_volume;
    let mut partial = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        partial += m;
        let s = (partial - budget) / (k + 1) as f64;
        let next = mags.get(k + 1).copied().unwrap_or(0.0);
        if s >= next {
            return Ok(s.clamp(0.0, m));
        }
    }
    Ok(0.0)
}

fn soft_threshold(values: &[f64], s: f64) -> Vec<f64> {
    values.iter().map(|&v| v.signum() * (v.abs() - s).max(0.0)).collect()
}

/// Soft thresholding of raw cell values onto the ball of radius `r`.
pub fn project_l1ball_values(values: &[f64], cell_volume: f64, r: f64) -> Result<BallProjection<Vec<f64>>> {
    let s = l1ball_threshold(values, cell_volume, r)?;
    if s == 0.0 {
        return Ok(BallProjection { projected: values.to_vec(), threshold_s: 0.0, active: false });
    }
    Ok(BallProjection { projected: soft_threshold(values, s), threshold_s: s, active: true })
}

fn require_zero_far_field(u: &CellField, target: &'static str) -> Result<()> {
    if u.u_minus() != 0.0 || u.u_plus() != 0.0 {
        return Err(Error::IncompatibleTarget {
            target,
            reason: format!("far-field states ({}, {}) must both vanish", u.u_minus(), u.u_plus()),
        });
    }
    Ok(())
}

pub fn project_l1ball(u: &CellField, r: f64) -> Result<BallProjection<CellField>> {
    require_zero_far_field(u, "l1ball")?;
    let p = project_l1ball_values(u.values(), u.h(), r)?;
    Ok(BallProjection { projected: u.with_values(p.projected)?, threshold_s: p.threshold_s, active: p.active })
}

pub fn project_l1ball_2d(u: &Field2D, r: f64) -> Result<BallProjection<Field2D>> {
    let p = project_l1ball_values(u.values(), u.cell_area(), r)?;
    Ok(BallProjection { projected: u.with_values(p.projected)?, threshold_s: p.threshold_s, active: p.active })
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if lo <= hi {
        Ok(())
    } else {
        Err(Error::Config(format!("empty interval [{lo}, {hi}]")))
    }
}

/// Pointwise clamp to `[lo, hi]`.
pub fn project_interval_values(values: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    check_interval(lo, hi)?;
    Ok(values.iter().map(|v| v.clamp(lo, hi)).collect())
}

/// Clamp of a cell field; the far-field states must already lie in the
/// interval, otherwise the distance is infinite.
pub fn project_interval(u: &CellField, lo: f64, hi: f64) -> Result<CellField> {
    check_interval(lo, hi)?;
    for g in [u.u_minus(), u.u_plus()] {
        if !(lo..=hi).contains(&g) {
            return Err(Error::IncompatibleTarget {
                target: "interval",
                reason: format!("far-field state {g} outside [{lo}, {hi}]"),
            });
        }
    }
    u.with_values(project_interval_values(u.values(), lo, hi)?)
}

fn sq_dist(a: &[f64], b: &[f64], vol: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * vol
}

fn l2_norm(values: &[f64], vol: f64) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() * vol).sqrt()
}

/// Squared L2 distance from `u` to `target`, exact for meshwise-constant
/// fields.
pub fn distance_l2_squared(u: &CellField, target: &TargetSet) -> Result<f64> {
    target.validate()?;
    let h = u.h();
    match *target {
        TargetSet::Monotone { u_minus, u_plus } => {
            if u_minus != u.u_minus() || u_plus != u.u_plus() {
                return Err(Error::IncompatibleTarget {
                    target: "monotone",
                    reason: format!(
                        "target ends ({u_minus}, {u_plus}) differ from far-field ({}, {})",
                        u.u_minus(),
                        u.u_plus()
                    ),
                });
            }
            let p = project_monotone(u)?;
            Ok(sq_dist(u.values(), p.projected.values(), h))
        }
        TargetSet::L1Ball { r } => {
            let p = project_l1ball(u, r)?;
            Ok(sq_dist(u.values(), p.projected.values(), h))
        }
        TargetSet::IntervalSet { lo, hi } => {
            let p = project_interval(u, lo, hi)?;
            Ok(sq_dist(u.values(), p.values(), h))
        }
        TargetSet::L2Ball { r } => {
            require_zero_far_field(u, "l2ball")?;
            let d = (l2_norm(u.values(), h) - r).max(0.0);
            Ok(d * d)
        }
    }
}

/// L2 distance from `u` to `target`.
pub fn distance_l2(u: &CellField, target: &TargetSet) -> Result<f64> {
    distance_l2_squared(u, target).map(f64::sqrt)
}

/// Squared L2 distance for a 2-D field with zero far field.
pub fn distance_l2_squared_2d(u: &Field2D, target: &TargetSet) -> Result<f64> {
    target.validate()?;
    let vol = u.cell_area();
    match *target {
        TargetSet::Monotone { .. } => Err(Error::Unsupported("d2_monotone")),
        TargetSet::L1Ball { r } => {
            let p = project_l1ball_2d(u, r)?;
            Ok(sq_dist(u.values(), p.projected.values(), vol))
        }
        TargetSet::IntervalSet { lo, hi } => {
            if !(lo..=hi).contains(&0.0) {
                return Err(Error::IncompatibleTarget {
                    target: "interval",
                    reason: format!("zero far field outside [{lo}, {hi}]"),
                });
            }
            let p = project_interval_values(u.values(), lo, hi)?;
            Ok(sq_dist(u.values(), &p, vol))
        }
        TargetSet::L2Ball { r } => {
            let d = (l2_norm(u.values(), vol) - r).max(0.0);
            Ok(d * d)
        }
    }
}

pub fn distance_l2_2d(u: &Field2D, target: &TargetSet) -> Result<f64> {
    distance_l2_squared_2d(u, target).map(f64::sqrt)
}
