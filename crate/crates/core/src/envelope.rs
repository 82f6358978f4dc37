//! Lower convex and upper concave envelopes.
//!
//! Two kinds of input are supported. Piecewise-linear functions on the whole
//! line (with affine tails) are handled exactly by a monotone-chain pass over
//! their breakpoints; this is the kernel behind the monotone projection.
//! Polynomial graphs on a bounded interval are handled by [`FluxEnvelope`],
//! which locates bridges on a sampled hull and then solves the tangency
//! conditions for each bridge, so the envelope is exact up to root-finding
//! tolerance rather than sampling resolution.
//!
//! Decreasing configurations (left tail slope above the right one) have no
//! convex minorant; callers handle them through [`upper_concave_envelope`],
//! the mirror of the lower construction.

use std::io::Write;

use crate::error::{Error, Result};
use crate::flux::{bisect_sign_change, lipschitz_bound, real_roots, PolyFlux};

/// A continuous piecewise-linear function on the real line: linear
/// interpolation between breakpoints, affine extension outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl PiecewiseLinear {
    pub fn new(points: Vec<(f64, f64)>, left_slope: f64, right_slope: f64) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        Self::from_parts(xs, ys, left_slope, right_slope)
    }

    pub fn from_parts(xs: Vec<f64>, ys: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() || xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidBreakpoints);
        }
        if xs.iter().chain(&ys).chain([&left_slope, &right_slope]).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("piecewise-linear function"));
        }
        Ok(Self { xs, ys, left_slope, right_slope })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.left_slope * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.right_slope * (x - self.xs[n - 1]);
        }
        let k = self.xs.partition_point(|&xi| xi <= x);
        let (x0, x1, y0, y1) = (self.xs[k - 1], self.xs[k], self.ys[k - 1], self.ys[k]);
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
    }

    /// Slopes of the function: left tail, each segment, right tail.
    pub fn slopes(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.xs.len() + 1);
        s.push(self.left_slope);
        s.extend(self.segment_slopes());
        s.push(self.right_slope);
        s
    }

    fn segment_slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.xs
            .windows(2)
            .zip(self.ys.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
    }

    /// Right derivative at `x`.
    pub fn right_derivative(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&xi| xi <= x);
        if k == 0 {
            self.left_slope
        } else if k == self.xs.len() {
            self.right_slope
        } else {
            (self.ys[k] - self.ys[k - 1]) / (self.xs[k] - self.xs[k - 1])
        }
    }

    /// Left derivative at `x`.
    pub fn left_derivative(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&xi| xi < x);
        if k == 0 {
            self.left_slope
        } else if k == self.xs.len() {
            self.right_slope
        } else {
            (self.ys[k] - self.ys[k - 1]) / (self.xs[k] - self.xs[k - 1])
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|y| -y).collect(),
            left_slope: -self.left_slope,
            right_slope: -self.right_slope,
        }
    }

    /// Whether segment slopes (tails included) are nondecreasing.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.slopes().windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// Dumps the breakpoints as `x,y` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,y")?;
        for (x, y) in self.points() {
            writeln!(out, "{x:.16e},{y:.16e}")?;
        }
        Ok(())
    }
}

/// One maximal interval on which the envelope is affine and lies strictly
/// below its input somewhere. Infinite ends mark semi-infinite intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactInterval {
    pub start: f64,
    pub end: f64,
    /// Slope of the envelope on the interval.
    pub slope: f64,
    /// Breakpoint index of `start` in the input, `None` when unbounded.
    pub start_index: Option<usize>,
    /// Breakpoint index of `end` in the input, `None` when unbounded.
    pub end_index: Option<usize>,
}

impl ContactInterval {
    pub fn is_left_unbounded(&self) -> bool {
        self.start_index.is_none()
    }

    pub fn is_right_unbounded(&self) -> bool {
        self.end_index.is_none()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.start < x && x < self.end
    }
}

/// The open set where an envelope differs from its input, as disjoint sorted
/// intervals. For lower envelopes the slopes increase strictly left to right;
/// for upper envelopes they decrease.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContactStructure {
    pub intervals: Vec<ContactInterval>,
}

impl ContactStructure {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ContactInterval> {
        self.intervals.iter()
    }

    /// Total length of the bounded intervals.
    pub fn bounded_measure(&self) -> f64 {
        self.intervals
            .iter()
            .filter(|c| c.start.is_finite() && c.end.is_finite())
            .map(|c| c.end - c.start)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub envelope: PiecewiseLinear,
    pub contacts: ContactStructure,
    /// Input breakpoint indices that are envelope vertices, increasing.
    pub vertex_indices: Vec<usize>,
}

/// Greatest convex function below `psi` on the whole real line.
pub fn lower_convex_envelope(psi: &PiecewiseLinear) -> Result<EnvelopeResult> {
    let (sl, sr) = (psi.left_slope, psi.right_slope);
    if sl > sr {
        return Err(Error::UnboundedBelow { left: sl, right: sr });
    }
    let vertices = envelope_vertices(&psi.xs, &psi.ys, sl, sr);
    let envelope = PiecewiseLinear {
        xs: vertices.iter().map(|&i| psi.xs[i]).collect(),
        ys: vertices.iter().map(|&i| psi.ys[i]).collect(),
        left_slope: sl,
        right_slope: sr,
    };
    let contacts = extract_contacts(psi, &envelope, &vertices);
    Ok(EnvelopeResult { envelope, contacts, vertex_indices: vertices })
}

/// Least concave function above `psi`, computed as `-lower(-psi)`.
pub fn upper_concave_envelope(psi: &PiecewiseLinear) -> Result<EnvelopeResult> {
    let neg = psi.negated();
    if neg.left_slope > neg.right_slope {
        return Err(Error::UnboundedBelow { left: psi.right_slope, right: psi.left_slope });
    }
    let lower = lower_convex_envelope(&neg)?;
    let contacts = ContactStructure {
        intervals: lower
            .contacts
            .intervals
            .into_iter()
            .map(|c| ContactInterval { slope: -c.slope, ..c })
            .collect(),
    };
    Ok(EnvelopeResult { envelope: lower.envelope.negated(), contacts, vertex_indices: lower.vertex_indices })
}

/// Indices of the breakpoints that are vertices of the lower convex envelope
/// with tail slopes `sl <= sr`. Collinear vertices are dropped.
fn envelope_vertices(xs: &[f64], ys: &[f64], sl: f64, sr: f64) -> Vec<usize> {
    let n = xs.len();
    if sl == sr {
        let best = (0..n)
            .min_by(|&i, &j| (ys[i] - sl * xs[i]).total_cmp(&(ys[j] - sl * xs[j])))
            .unwrap_or(0);
        return vec![best];
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for b in 0..n {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop `a` unless the turn o -> a -> b is strictly convex
            if (ys[a] - ys[o]) * (xs[b] - xs[a]) >= (ys[b] - ys[a]) * (xs[a] - xs[o]) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(b);
    }
    let slope = |k: usize| (ys[hull[k + 1]] - ys[hull[k]]) / (xs[hull[k + 1]] - xs[hull[k]]);
    let m = hull.len();
    let v_left = (0..m).find(|&k| k + 1 == m || slope(k) > sl).unwrap_or(m - 1);
    let v_right = (0..m).rev().find(|&k| k == 0 || slope(k - 1) < sr).unwrap_or(0);
    let v_right = v_right.max(v_left);
    hull[v_left..=v_right].to_vec()
}

fn extract_contacts(psi: &PiecewiseLinear, env: &PiecewiseLinear, vertices: &[usize]) -> ContactStructure {
    let n = psi.xs.len();
    let scale = 1.0 + psi.ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let tol = 1e-13 * scale;
    let mut above = vec![false; n];
    let mut vi = 0;
    for i in 0..n {
        if vi < vertices.len() && vertices[vi] == i {
            vi += 1;
            continue;
        }
        above[i] = psi.ys[i] - env.value(psi.xs[i]) > tol;
    }
    // Runs of strictly-above breakpoints, with the tails as virtual members.
    let mut intervals: Vec<ContactInterval> = Vec::new();
    let mut i = 0;
    while i < n {
        if !above[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && above[i] {
            i += 1;
        }
        let start_index = start.checked_sub(1);
        let end_index = if i < n { Some(i) } else { None };
        let x0 = start_index.map_or(f64::NEG_INFINITY, |k| psi.xs[k]);
        let x1 = end_index.map_or(f64::INFINITY, |k| psi.xs[k]);
        let slope = match (start_index, end_index) {
            (None, _) => env.left_slope,
            (_, None) => env.right_slope,
            (Some(a), Some(b)) => (psi.ys[b] - psi.ys[a]) / (psi.xs[b] - psi.xs[a]),
        };
        intervals.push(ContactInterval { start: x0, end: x1, slope, start_index, end_index });
    }
    // Merge neighbours that meet at a touching point that is not an envelope
    // vertex: both lie on the same affine piece.
    let mut merged: Vec<ContactInterval> = Vec::with_capacity(intervals.len());
    for c in intervals {
        if let Some(last) = merged.last_mut() {
            if let (Some(e), Some(s)) = (last.end_index, c.start_index) {
                if e == s && vertices.binary_search(&e).is_err() {
                    last.end = c.end;
                    last.end_index = c.end_index;
                    last.slope = match (last.start_index, last.end_index) {
                        (Some(a), Some(b)) => (psi.ys[b] - psi.ys[a]) / (psi.xs[b] - psi.xs[a]),
                        (None, _) => env.left_slope,
                        (_, None) => env.right_slope,
                    };
                    continue;
                }
            }
        }
        merged.push(c);
    }
    ContactStructure { intervals: merged }
}

/// Convex conjugate `sup_x (theta x - pl(x))` of a convex piecewise-linear
/// function. Finite exactly for `theta` in `[left_slope, right_slope]`.
pub fn legendre(pl: &PiecewiseLinear, theta: f64) -> Result<f64> {
    if !(pl.left_slope <= theta && theta <= pl.right_slope) {
        return Err(Error::LegendreDomain { theta, lo: pl.left_slope, hi: pl.right_slope });
    }
    Ok(pl.points().map(|(x, y)| theta * x - y).fold(f64::NEG_INFINITY, f64::max))
}

/// A piece of the envelope of a polynomial graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxPiece {
    /// The envelope follows the graph of the flux.
    Arc { from: f64, to: f64 },
    /// The envelope is the chord between two tangency points.
    Bridge { from: f64, to: f64, slope: f64 },
}

impl FluxPiece {
    pub fn from(&self) -> f64 {
        match *self {
            FluxPiece::Arc { from, .. } | FluxPiece::Bridge { from, .. } => from,
        }
    }

    pub fn to(&self) -> f64 {
        match *self {
            FluxPiece::Arc { to, .. } | FluxPiece::Bridge { to, .. } => to,
        }
    }
}

/// Lower convex (or upper concave) envelope of a polynomial restricted to a
/// bounded interval, as an ordered list of arcs and bridges covering it.
/// Bridge slopes are reported with their true sign in both orientations.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxEnvelope {
    flux: PolyFlux,
    upper: bool,
    lo: f64,
    hi: f64,
    pieces: Vec<FluxPiece>,
}

const SAMPLE_LEVELS: [usize; 5] = [1024, 4096, 16384, 65536, 262144];

impl FluxEnvelope {
    /// Lower convex envelope of `f` restricted to `[a, b]`.
    pub fn lower(f: &PolyFlux, a: f64, b: f64) -> Result<Self> {
        let (lo, hi) = (a.min(b), a.max(b));
        let pieces = lower_pieces(f, lo, hi)?;
        Ok(Self { flux: f.clone(), upper: false, lo, hi, pieces })
    }

    /// Upper concave envelope of `f` restricted to `[a, b]`.
    pub fn upper(f: &PolyFlux, a: f64, b: f64) -> Result<Self> {
        let (lo, hi) = (a.min(b), a.max(b));
        let pieces = lower_pieces(&f.negated(), lo, hi)?
            .into_iter()
            .map(|p| match p {
                FluxPiece::Bridge { from, to, slope } => FluxPiece::Bridge { from, to, slope: -slope },
                arc => arc,
            })
            .collect();
        Ok(Self { flux: f.clone(), upper: true, lo, hi, pieces })
    }

    pub fn is_upper(&self) -> bool {
        self.upper
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn flux(&self) -> &PolyFlux {
        &self.flux
    }

    /// Pieces in increasing order of the state variable.
    pub fn pieces(&self) -> &[FluxPiece] {
        &self.pieces
    }

    fn piece_at(&self, u: f64) -> &FluxPiece {
        let k = self.pieces.partition_point(|p| p.to() < u);
        &self.pieces[k.min(self.pieces.len() - 1)]
    }

    /// Envelope value; outside the interval the end piece is extended.
    pub fn value(&self, u: f64) -> f64 {
        match *self.piece_at(u) {
            FluxPiece::Arc { .. } => self.flux.eval(u),
            FluxPiece::Bridge { from, slope, .. } => self.flux.eval(from) + slope * (u - from),
        }
    }

    pub fn slope(&self, u: f64) -> f64 {
        match *self.piece_at(u) {
            FluxPiece::Arc { .. } => self.flux.derivative().eval(u),
            FluxPiece::Bridge { slope, .. } => slope,
        }
    }

    /// Default interpolation tolerance `1e-10 (1 + max|f''| width^2)`.
    pub fn default_tolerance(&self) -> f64 {
        let width = self.hi - self.lo;
        let curv = lipschitz_bound(&self.flux.derivative(), self.lo, self.hi);
        1e-10 * (1.0 + curv * width * width)
    }

    /// Piecewise-linear interpolant of the envelope whose gap to the exact
    /// envelope is at most `tol`: bridges are kept exact, arcs subdivided.
    pub fn to_piecewise_linear(&self, tol: f64) -> Result<PiecewiseLinear> {
        const MAX_NODES: usize = 1 << 21;
        let d2 = self.flux.derivative().derivative();
        let mut xs = vec![self.lo];
        for p in &self.pieces {
            match *p {
                FluxPiece::Bridge { to, .. } => xs.push(to),
                FluxPiece::Arc { from, to } => {
                    let len = to - from;
                    if len <= 0.0 {
                        continue;
                    }
                    let curv = max_abs(&d2, from, to);
                    let segs = if curv == 0.0 {
                        1
                    } else {
                        ((len * (curv / (8.0 * tol)).sqrt()).ceil() as usize).clamp(1, MAX_NODES)
                    };
                    xs.extend((1..=segs).map(|k| if k == segs { to } else { from + len * k as f64 / segs as f64 }));
                }
            }
        }
        xs.dedup();
        let ys: Vec<f64> = xs.iter().map(|&u| self.value(u)).collect();
        let (ls, rs) = if xs.len() >= 2 {
            let n = xs.len();
            ((ys[1] - ys[0]) / (xs[1] - xs[0]), (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]))
        } else {
            let s = self.slope(self.lo);
            (s, s)
        };
        PiecewiseLinear::from_parts(xs, ys, ls, rs)
    }
}

fn max_abs(p: &PolyFlux, a: f64, b: f64) -> f64 {
    let d = p.derivative();
    real_roots(&d, a, b).into_iter().chain([a, b]).map(|u| p.eval(u).abs()).fold(0.0, f64::max)
}

/// Maximal subinterval of `[lo, hi]` with constant sign of the second
/// derivative.
#[derive(Debug, Clone, Copy)]
struct CurvatureSpan {
    lo: f64,
    hi: f64,
    convex: bool,
}

fn curvature_spans(g: &PolyFlux, lo: f64, hi: f64) -> Vec<CurvatureSpan> {
    let g2 = g.derivative().derivative();
    let mut cuts = vec![lo];
    cuts.extend(real_roots(&g2, lo, hi).into_iter().filter(|&r| r > lo && r < hi));
    cuts.push(hi);
    let mut spans: Vec<CurvatureSpan> = Vec::new();
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let convex = g2.eval(0.5 * (w[0] + w[1])) >= 0.0;
        match spans.last_mut() {
            Some(s) if s.convex == convex => s.hi = w[1],
            _ => spans.push(CurvatureSpan { lo: w[0], hi: w[1], convex }),
        }
    }
    spans
}

/// Where a bridge end may sit: pinned at an interval end, or on a convex arc.
#[derive(Debug, Clone, Copy, PartialEq)]
enum EndDomain {
    Fixed(f64),
    Arc(f64, f64),
}

fn lower_pieces(g: &PolyFlux, lo: f64, hi: f64) -> Result<Vec<FluxPiece>> {
    if lo == hi {
        return Ok(vec![FluxPiece::Arc { from: lo, to: hi }]);
    }
    if g.degree() <= 1 {
        let slope = (g.eval(hi) - g.eval(lo)) / (hi - lo);
        return Ok(vec![FluxPiece::Bridge { from: lo, to: hi, slope }]);
    }
    let spans = curvature_spans(g, lo, hi);
    if spans.iter().all(|s| s.convex) {
        return Ok(vec![FluxPiece::Arc { from: lo, to: hi }]);
    }
    for &n in &SAMPLE_LEVELS {
        if let Some(pieces) = attempt_pieces(g, lo, hi, &spans, n) {
            return Ok(pieces);
        }
    }
    Err(Error::Config(format!("flux envelope on [{lo}, {hi}] did not stabilise under refinement")))
}

fn attempt_pieces(g: &PolyFlux, lo: f64, hi: f64, spans: &[CurvatureSpan], n: usize) -> Option<Vec<FluxPiece>> {
    let xs: Vec<f64> = (0..=n).map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 }).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| g.eval(x)).collect();
    let mut hull: Vec<usize> = Vec::new();
    for b in 0..xs.len() {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (ys[a] - ys[o]) * (xs[b] - xs[a]) >= (ys[b] - ys[a]) * (xs[a] - xs[o]) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(b);
    }
    let mut bridges: Vec<(f64, f64)> = Vec::new();
    for w in hull.windows(2) {
        let (xa, xb) = (xs[w[0]], xs[w[1]]);
        let crosses_concave = spans.iter().any(|s| !s.convex && s.lo < xb && s.hi > xa);
        if !crosses_concave {
            continue;
        }
        let left = end_domain(xa, lo, hi, spans, true);
        let right = end_domain(xb, lo, hi, spans, false);
        if left == right {
            continue;
        }
        let (a, b) = refine_bridge(g, left, right, (ys[w[1]] - ys[w[0]]) / (xb - xa));
        if b > a {
            bridges.push((a, b));
        }
    }
    bridges.sort_by(|p, q| p.0.total_cmp(&q.0));
    bridges.dedup_by(|p, q| (p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
    if bridges.windows(2).any(|w| w[1].0 < w[0].1 - 1e-12) {
        return None;
    }
    let mut pieces = Vec::new();
    let mut cursor = lo;
    for (a, b) in bridges {
        let a = a.max(cursor);
        if a > cursor {
            pieces.push(FluxPiece::Arc { from: cursor, to: a });
        }
        let slope = (g.eval(b) - g.eval(a)) / (b - a);
        pieces.push(FluxPiece::Bridge { from: a, to: b, slope });
        cursor = b;
    }
    if cursor < hi {
        pieces.push(FluxPiece::Arc { from: cursor, to: hi });
    }
    validate_pieces(g, lo, hi, spans, &pieces, 4 * n).then_some(pieces)
}

fn end_domain(x: f64, lo: f64, hi: f64, spans: &[CurvatureSpan], is_left: bool) -> EndDomain {
    let containing = spans.iter().find(|s| s.lo <= x && x <= s.hi && s.convex);
    if let Some(s) = containing {
        return EndDomain::Arc(s.lo, s.hi);
    }
    if x == lo || x == hi {
        return EndDomain::Fixed(x);
    }
    let dist = |s: &CurvatureSpan| if x < s.lo { s.lo - x } else { x - s.hi };
    let nearest = spans
        .iter()
        .filter(|s| s.convex)
        .filter(|s| if is_left { s.lo <= x } else { s.hi >= x })
        .min_by(|p, q| dist(p).total_cmp(&dist(q)));
    match nearest {
        Some(s) => EndDomain::Arc(s.lo, s.hi),
        None => EndDomain::Fixed(if is_left { lo } else { hi }),
    }
}

/// Tangency point for slope `theta` on an end domain: the minimiser of
/// `g(u) - theta u` over the domain.
fn tangency(dg: &PolyFlux, dom: EndDomain, theta: f64) -> f64 {
    match dom {
        EndDomain::Fixed(x) => x,
        EndDomain::Arc(a, b) => {
            if theta <= dg.eval(a) {
                a
            } else if theta >= dg.eval(b) {
                b
            } else {
                bisect_sign_change(|u| dg.eval(u) - theta, a, b, true)
            }
        }
    }
}

/// Solves for the common tangent slope between two end domains. The
/// difference of conjugates is strictly increasing in the slope.
fn refine_bridge(g: &PolyFlux, left: EndDomain, right: EndDomain, guess: f64) -> (f64, f64) {
    let dg = g.derivative();
    let phi = |theta: f64| {
        let a = tangency(&dg, left, theta);
        let b = tangency(&dg, right, theta);
        (theta * b - g.eval(b)) - (theta * a - g.eval(a))
    };
    let mut step = 1e-3 * (1.0 + guess.abs());
    let (mut lo, mut hi) = (guess, guess);
    let mut tries = 0;
    while phi(lo) > 0.0 && tries < 200 {
        lo -= step;
        step *= 2.0;
        tries += 1;
    }
    step = 1e-3 * (1.0 + guess.abs());
    tries = 0;
    while phi(hi) < 0.0 && tries < 200 {
        hi += step;
        step *= 2.0;
        tries += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    (tangency(&dg, left, theta), tangency(&dg, right, theta))
}

fn validate_pieces(g: &PolyFlux, lo: f64, hi: f64, spans: &[CurvatureSpan], pieces: &[FluxPiece], checks: usize) -> bool {
    let width = hi - lo;
    let dg = g.derivative();
    let fscale = 1.0 + pieces.iter().map(|p| g.eval(p.from()).abs()).fold(0.0, f64::max);
    for p in pieces {
        if let FluxPiece::Arc { from, to } = *p {
            let len = to - from;
            let bad = spans.iter().any(|s| !s.convex && s.lo < to && s.hi > from && (to.min(s.hi) - from.max(s.lo)) > 1e-9 * width);
            if bad && len > 0.0 {
                return false;
            }
        }
    }
    // slopes nondecreasing across junctions
    let mut prev_slope = f64::NEG_INFINITY;
    for p in pieces {
        let (s_in, s_out) = match *p {
            FluxPiece::Arc { from, to } => (dg.eval(from), dg.eval(to)),
            FluxPiece::Bridge { slope, .. } => (slope, slope),
        };
        if s_in < prev_slope - 1e-9 * (1.0 + prev_slope.abs()) {
            return false;
        }
        prev_slope = s_out;
    }
    // envelope below the graph on a finer check grid
    let env = |u: f64| {
        let k = pieces.partition_point(|p| p.to() < u).min(pieces.len() - 1);
        match pieces[k] {
            FluxPiece::Arc { .. } => g.eval(u),
            FluxPiece::Bridge { from, slope, .. } => g.eval(from) + slope * (u - from),
        }
    };
    (0..=checks).all(|k| {
        let u = lo + width * k as f64 / checks as f64;
        env(u) <= g.eval(u) + 1e-11 * fscale
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pl(points: &[(f64, f64)], l: f64, r: f64) -> PiecewiseLinear {
        PiecewiseLinear::new(points.to_vec(), l, r).unwrap()
    }

    #[test]
    fn convex_input_is_fixed_point() {
        let psi = pl(&[(0.0, 1.0), (1.0, 0.0), (2.0, 0.5), (3.0, 2.0)], -2.0, 3.0);
        let res = lower_convex_envelope(&psi).unwrap();
        assert_eq!(res.envelope, psi);
        assert!(res.contacts.is_empty());
    }

    #[test]
    fn tent_is_bridged() {
        let psi = pl(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)], 0.0, 0.0);
        let res = lower_convex_envelope(&psi).unwrap();
        for x in [-1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            assert_eq!(res.envelope.value(x), 0.0);
        }
        assert_eq!(res.contacts.len(), 1);
        let c = res.contacts.intervals[0];
        assert_eq!((c.start, c.end, c.slope), (0.0, 2.0, 0.0));
    }

    #[test]
    fn decreasing_step_primitive_gives_pooled_mean() {
        // primitive of u = 1 on (-1, 0), -1 on (0, 1), tails with slopes -1 < 1
        let psi = pl(&[(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)], -1.0, 1.0);
        let res = lower_convex_envelope(&psi).unwrap();
        // two-block pooled mean of (1, -1) is 0: one bitangent with slope 0
        assert_eq!(res.contacts.len(), 1);
        let c = res.contacts.intervals[0];
        assert_eq!((c.start, c.end, c.slope), (-1.0, 1.0, 0.0));
        assert_eq!(res.envelope.right_derivative(-0.5), 0.0);
    }

    #[test]
    fn semi_infinite_contacts() {
        // primitive of u = 3 on (0, 1) with far field 0 on both sides
        let psi = pl(&[(0.0, 0.0), (1.0, 3.0)], 0.0, 0.0);
        let res = lower_convex_envelope(&psi).unwrap();
        assert_eq!(res.contacts.len(), 1);
        let c = res.contacts.intervals[0];
        assert!(c.is_right_unbounded() && !c.is_left_unbounded());
        assert_eq!(c.slope, 0.0);

        let psi = pl(&[(0.0, 0.0), (1.0, -3.0)], 0.0, 1.0);
        let res = lower_convex_envelope(&psi).unwrap();
        let c = res.contacts.intervals[0];
        assert!(c.is_left_unbounded());
        assert_eq!(res.envelope.xs(), &[1.0]);
    }

    #[test]
    fn crossing_tails_are_rejected() {
        let psi = pl(&[(0.0, 0.0)], 1.0, -1.0);
        assert!(matches!(lower_convex_envelope(&psi), Err(Error::UnboundedBelow { .. })));
    }

    #[test]
    fn upper_envelope_mirrors_lower() {
        let psi = pl(&[(0.0, 0.0), (1.0, -1.0), (2.0, 0.0)], 0.0, 0.0);
        let res = upper_concave_envelope(&psi).unwrap();
        assert_eq!(res.envelope.value(1.0), 0.0);
        let concave = pl(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.5)], 2.0, -1.0);
        assert_eq!(upper_concave_envelope(&concave).unwrap().envelope, concave);
    }

    #[test]
    fn legendre_examples() {
        let pts: Vec<(f64, f64)> = (0..=4000).map(|k| {
            let x = -2.0 + 4.0 * k as f64 / 4000.0;
            (x, 0.5 * x * x)
        }).collect();
        let sq = PiecewiseLinear::new(pts, -2.0, 2.0).unwrap();
        assert!((legendre(&sq, 1.0).unwrap() - 0.5).abs() < 1e-6);

        let affine = pl(&[(0.0, 0.7)], 1.5, 1.5);
        assert_eq!(legendre(&affine, 1.5).unwrap(), -0.7);
        assert!(matches!(legendre(&affine, 2.0), Err(Error::LegendreDomain { .. })));
    }

    #[test]
    fn cubic_envelope_on_symmetric_interval() {
        let env = FluxEnvelope::lower(&PolyFlux::cubic(), -1.0, 1.0).unwrap();
        let p = env.pieces();
        assert_eq!(p.len(), 2);
        match p[0] {
            FluxPiece::Bridge { from, to, slope } => {
                assert_eq!(from, -1.0);
                assert!((to - 0.5).abs() < 1e-13);
                assert!((slope - 0.75).abs() < 1e-13);
            }
            _ => panic!("expected bridge"),
        }
        assert!(matches!(p[1], FluxPiece::Arc { to, .. } if to == 1.0));
    }

    #[test]
    fn quartic_double_well_bridges_two_interior_tangents() {
        // g = (u^2 - 1)^2 has lower envelope 0 on [-1, 1]
        let g = PolyFlux::new(vec![1.0, 0.0, -2.0, 0.0, 1.0]).unwrap();
        let env = FluxEnvelope::lower(&g, -2.0, 2.0).unwrap();
        let bridge = env.pieces().iter().find_map(|p| match *p {
            FluxPiece::Bridge { from, to, slope } => Some((from, to, slope)),
            _ => None,
        }).unwrap();
        assert!((bridge.0 + 1.0).abs() < 1e-9 && (bridge.1 - 1.0).abs() < 1e-9);
        assert!(bridge.2.abs() < 1e-12);
        assert!(env.value(0.0).abs() < 1e-12);
    }

    #[test]
    fn upper_flux_envelope_of_cubic() {
        let env = FluxEnvelope::upper(&PolyFlux::cubic(), -1.0, 1.0).unwrap();
        // mirror of the lower case: arc on [-1, -1/2] then bridge to 1 with slope 3/4
        let bridge = env.pieces().iter().find_map(|p| match *p {
            FluxPiece::Bridge { from, to, slope } => Some((from, to, slope)),
            _ => None,
        }).unwrap();
        assert!((bridge.0 + 0.5).abs() < 1e-13 && bridge.1 == 1.0);
        assert!((bridge.2 - 0.75).abs() < 1e-13);
        assert!(env.value(0.0) >= PolyFlux::cubic().eval(0.0));
    }

    fn arb_pl(n: usize) -> impl Strategy<Value = PiecewiseLinear> {
        (prop::collection::vec((0.05..1.0f64, -2.0..2.0f64), n), -1.0..0.0f64, 0.0..1.0f64).prop_map(|(steps, l, r)| {
            let mut x = 0.0;
            let pts = steps.into_iter().map(|(dx, y)| {
                x += dx;
                (x, y)
            }).collect();
            PiecewiseLinear::new(pts, l - 2.0, r + 2.0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn envelope_invariants(psi in arb_pl(12)) {
            let res = lower_convex_envelope(&psi).unwrap();
            let env = &res.envelope;
            prop_assert!(env.is_convex(1e-12));
            let scale = 1.0 + psi.ys().iter().fold(0.0f64, |m, y| m.max(y.abs()));
            for w in psi.xs().windows(2) {
                for x in [w[0], 0.5 * (w[0] + w[1])] {
                    prop_assert!(env.value(x) <= psi.value(x) + 1e-12 * scale);
                }
            }
            // equality away from contacts
            for (x, y) in psi.points() {
                if !res.contacts.iter().any(|c| c.contains(x)) {
                    prop_assert!((env.value(x) - y).abs() <= 1e-12 * scale);
                }
            }
            let cs = &res.contacts.intervals;
            for w in cs.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
                prop_assert!(w[0].slope < w[1].slope);
            }
            for c in cs {
                // trace ordering at finite ends, mean preservation on bounded intervals
                if c.start.is_finite() {
                    prop_assert!(psi.left_derivative(c.start) <= c.slope + 1e-12);
                }
                if c.end.is_finite() {
                    prop_assert!(c.slope <= psi.right_derivative(c.end) + 1e-12);
                }
                if c.start.is_finite() && c.end.is_finite() {
                    let lhs = psi.value(c.end) - psi.value(c.start);
                    prop_assert!((lhs - c.slope * (c.end - c.start)).abs() <= 1e-12 * scale);
                }
            }
        }

        #[test]
        fn envelope_is_idempotent(psi in arb_pl(10)) {
            let once = lower_convex_envelope(&psi).unwrap().envelope;
            let twice = lower_convex_envelope(&once).unwrap().envelope;
            prop_assert_eq!(once.len(), twice.len());
            for ((x1, y1), (x2, y2)) in once.points().zip(twice.points()) {
                prop_assert!((x1 - x2).abs() <= 1e-14 && (y1 - y2).abs() <= 1e-14);
            }
        }

        #[test]
        fn envelope_is_monotone(psi in arb_pl(10), bumps in prop::collection::vec(0.0..1.0f64, 10)) {
            let pts: Vec<(f64, f64)> = psi.points().zip(&bumps).map(|((x, y), b)| (x, y + b)).collect();
            let above = PiecewiseLinear::new(pts, psi.left_slope(), psi.right_slope()).unwrap();
            let lo = lower_convex_envelope(&psi).unwrap().envelope;
            let hi = lower_convex_envelope(&above).unwrap().envelope;
            for x in psi.xs().iter().chain(above.xs()) {
                prop_assert!(lo.value(*x) <= hi.value(*x) + 1e-12);
            }
        }

        #[test]
        fn upper_is_negated_lower(psi in arb_pl(10)) {
            let flipped = PiecewiseLinear::new(psi.points().collect(), psi.right_slope(), psi.left_slope()).unwrap();
            let up = upper_concave_envelope(&flipped).unwrap().envelope;
            let low = lower_convex_envelope(&flipped.negated()).unwrap().envelope.negated();
            prop_assert_eq!(up, low);
        }
    }
}
